"""Closed-loop simulation of sampled-data regulators.

The delay plant is integrated on a uniform grid ``dt = tau / substeps``
by the classical Runge-Kutta method (method of steps), with every state
and output delay an integer number of grid steps. The controller sees the
weighted sampler output once per period and its output is held until the
next sampling instant:

* on ``[k tau, (k+1) tau)`` the plant input is ``u = R xd(k) + v``,
* ``e(k) = y_ref - int_0^tau w(t) y(k tau + t) dt`` (composite trapezoid),
* ``xd(k+1) = P xd(k) + Q e(k)``.

An optional scalar precompensator ``xp' = -a xp + up`` smooths the held
input; it is updated in closed form on the grid.

The inner integration loop runs in a compiled kernel when the extension
module is available and in an equivalent pure-Python kernel otherwise.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from ._kernel_py import rk4_block as _rk4_python
from .errors import GridMisaligned
from .plant import Weight

try:
    from ._kernel import rk4_block as _rk4_compiled
except ImportError:  # extension not built
    _rk4_compiled = None

_KERNELS = {"python": _rk4_python}
if _rk4_compiled is not None:
    _KERNELS["cython"] = _rk4_compiled
_backend = "cython" if _rk4_compiled is not None and not os.environ.get("REGSYN_PURE_PYTHON") \
    else "python"

GRID_TOL = 1e-9
BLOWUP = 1e12
MIN_SUBSTEPS = 16

__all__ = [
    "available_backends", "backend", "set_backend", "SimConfig", "SimTrace", "History",
    "grid_steps", "integrate_step", "run_closed_loop", "TrackingMetrics", "tracking_metrics",
    "perturb_and_rerun", "DiscreteTrace", "run_discrete_loop", "fit_geometric_decay",
    "sampler", "write_trace_csv", "format_metrics",
]


# -- kernel selection ------------------------------------------------------

def available_backends():
    """Names of the usable integration kernels."""
    return sorted(_KERNELS)


def backend():
    """Name of the kernel currently in use (``'cython'`` or ``'python'``)."""
    return _backend


def set_backend(name):
    """Select the integration kernel; return the previous choice.

    Raises
    ------
    ValueError
        If ``name`` is not an available backend.
    """
    global _backend
    if name not in _KERNELS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    previous, _backend = _backend, name
    return previous


# -- configuration and traces ----------------------------------------------

@dataclass
class SimConfig:
    """Settings of one sampled-data simulation.

    Parameters
    ----------
    tau : float
        Sampling period.
    weight : Weight, float or None
        Sampler weight; a float is a constant value, ``None`` means ``1/tau``.
    substeps : int
        Integration steps per sampling period (at least 16).
    horizon : int
        Number of sampling periods.
    y_ref, v : float
        Constant reference and input disturbance.
    precompensator : float, optional
        Pole ``a > 0`` of the smoothing filter ``xp' = -a xp + up``.
    perturbation : dict, optional
        Multiplicative factors ``{'A': ..., 'b': ..., 'c': ...}`` applied to
        the plant before simulating.
    xd0 : array_like, optional
        Initial controller state (zero by default).
    xp0 : float
        Initial precompensator state.
    """

    tau: float
    weight: object = None
    substeps: int = 320
    horizon: int = 100
    y_ref: float = 1.0
    v: float = 0.0
    precompensator: float = None
    perturbation: dict = None
    xd0: object = None
    xp0: float = 0.0

    def __post_init__(self):
        self.tau = float(self.tau)
        if not self.tau > 0:
            raise ValueError("sampling period must be positive")
        if self.weight is None:
            self.weight = Weight.constant(self.tau)
        elif not isinstance(self.weight, Weight):
            self.weight = Weight.constant(self.tau, float(self.weight))
        if abs(self.weight.tau - self.tau) > 1e-12 * self.tau:
            raise ValueError("weight is defined on a different sampling period")
        if abs(self.weight.total() - 1.0) > 1e-9:
            raise ValueError(f"sampler weight integrates to {self.weight.total():.12g}, not 1")
        if int(self.substeps) < MIN_SUBSTEPS:
            raise ValueError(f"need at least {MIN_SUBSTEPS} substeps per sample")
        self.substeps = int(self.substeps)
        self.horizon = int(self.horizon)
        if self.horizon < 1:
            raise ValueError("horizon must be at least one sample")
        if self.precompensator is not None and not self.precompensator > 0:
            raise ValueError("precompensator pole must be positive")

    @property
    def dt(self):
        return self.tau / self.substeps

    def echo(self):
        """Flat key-value view for file headers."""
        return {"tau": self.tau, "weight": list(self.weight.values), "substeps": self.substeps,
                "horizon": self.horizon, "y_ref": self.y_ref, "v": self.v,
                "precompensator": self.precompensator, "perturbation": self.perturbation}


@dataclass
class SimTrace:
    """Result of :func:`run_closed_loop`.

    Attributes
    ----------
    t : ndarray
        Integration grid.
    z : ndarray, shape (len(t), n)
        Plant state on the grid.
    u : ndarray
        Plant input on the grid (value used from each grid point on).
    y : ndarray
        Plant output on the grid.
    e : ndarray
        Sampled error ``e(k)``, available at ``(k+1) tau``.
    xd : ndarray, shape (samples + 1, m)
        Controller state at the sampling instants.
    xp : ndarray or None
        Precompensator state on the grid.
    diverged : bool
        True if the state blew up and the run stopped early.
    """

    t: np.ndarray
    z: np.ndarray
    u: np.ndarray
    y: np.ndarray
    e: np.ndarray
    xd: np.ndarray
    xp: np.ndarray = None
    diverged: bool = False
    config: SimConfig = None
    backend: str = field(default="", compare=False)

    @property
    def sample_times(self):
        """Times ``(k+1) tau`` at which ``e(k)`` becomes available."""
        return self.config.tau * np.arange(1, self.e.size + 1)


# -- integration -----------------------------------------------------------

def grid_steps(delays, dt):
    """Delays as integer multiples of ``dt``.

    Raises
    ------
    GridMisaligned
        If some delay is not a multiple of ``dt`` within a relative 1e-9.
    """
    out = []
    for h in delays:
        k = h / dt
        if abs(k - round(k)) > GRID_TOL * max(1.0, k):
            raise GridMisaligned(
                f"delay {h:.10g} is not a multiple of the step {dt:.10g}; "
                "choose substeps so that tau / substeps divides every delay")
        out.append(int(round(k)))
    return np.asarray(out, dtype=np.intp)


class History:
    """Grid buffers for the method of steps.

    ``Z[offset + i]`` is ``z(i dt)`` and ``Zmid[offset + i]`` is
    ``z((i + 1/2) dt)``; indices below ``offset`` hold the initial history.
    """

    def __init__(self, plant, dt, capacity):
        self.plant = plant
        self.dt = float(dt)
        self.d = grid_steps(plant.delays, dt)
        self.dy = grid_steps(plant.output_delays, dt)
        self.offset = int(self.d.max()) if self.d.size else 0
        self.offset = max(self.offset, int(self.dy.max()) if self.dy.size else 0)
        size = self.offset + int(capacity) + 1
        n = plant.n
        self.Z = np.zeros((size, n))
        self.Zmid = np.zeros((size, n))
        past = np.arange(-self.offset, 0)
        if past.size:
            self.Z[:self.offset] = plant.history_at(past * self.dt)
            self.Zmid[:self.offset] = plant.history_at((past + 0.5) * self.dt)
        self.Z[self.offset] = plant.z0
        self.k = 0
        self.A0 = np.ascontiguousarray(plant.A[0], dtype=float)
        q = len(plant.A) - 1
        self.Ad = np.ascontiguousarray(np.array(plant.A[1:], dtype=float).reshape(q, n, n))
        self.b = np.ascontiguousarray(plant.b, dtype=float)

    @property
    def t(self):
        return self.k * self.dt

    @property
    def state(self):
        return self.Z[self.offset + self.k]

    def _grow(self, steps):
        need = self.offset + self.k + steps + 1
        if need > self.Z.shape[0]:
            extra = max(need - self.Z.shape[0], self.Z.shape[0])
            pad = np.zeros((extra, self.Z.shape[1]))
            self.Z = np.vstack([self.Z, pad])
            self.Zmid = np.vstack([self.Zmid, pad])

    def advance(self, us, um, ue, blowup=BLOWUP):
        """Run the kernel over ``len(us)`` steps; return the number completed."""
        steps = len(us)
        self._grow(steps)
        kernel = _KERNELS[_backend]
        done = kernel(self.A0, self.Ad, self.d, self.b, self.Z, self.Zmid,
                      self.offset + self.k, steps, self.dt,
                      np.ascontiguousarray(us, dtype=float), np.ascontiguousarray(um, dtype=float),
                      np.ascontiguousarray(ue, dtype=float), float(blowup))
        self.k += int(done)
        return int(done)

    def states(self):
        """``z`` on the grid from ``t = 0`` to the current time."""
        return self.Z[self.offset:self.offset + self.k + 1].copy()

    def outputs(self, start=0, stop=None):
        """``y(i dt) = sum_l c_l z(i dt - hh_l)`` for grid indices ``start..stop``."""
        stop = self.k if stop is None else stop
        idx = np.arange(start, stop + 1) + self.offset
        y = np.zeros(idx.size)
        for c, dl in zip(self.plant.c, self.dy):
            y += self.Z[idx - dl] @ c
        return y


def integrate_step(plant, history, u_const, dt, steps):
    """Advance the plant ``steps`` grid steps under a constant input.

    Parameters
    ----------
    plant : DelayPlant
    history : History or None
        Buffers to extend; ``None`` starts from the plant's initial data.
    u_const : float
    dt : float
    steps : int

    Returns
    -------
    History
        The updated buffers (the same object when one was passed in).

    Raises
    ------
    GridMisaligned
        If a delay is not an integer multiple of ``dt``.
    """
    if history is None:
        history = History(plant, dt, steps)
    elif abs(history.dt - dt) > 1e-15 * dt:
        raise GridMisaligned("step size differs from the one the history was built with")
    u = np.full(int(steps), float(u_const))
    history.advance(u, u, u)
    return history


def sampler(y, dt, weight, t0=0.0):
    """``int_0^tau w(t) y(t0 + t) dt`` by the trapezoid rule on a grid segment.

    ``y`` holds ``substeps + 1`` grid values covering one period; ``w`` is
    read at the middle of each grid interval.
    """
    y = np.asarray(y, dtype=float)
    mids = (np.arange(y.size - 1) + 0.5) * dt
    w = weight(mids)
    return float(np.sum(w * 0.5 * (y[:-1] + y[1:])) * dt)


def _controller_matrices(ctrl):
    P, Q, R = (np.asarray(M) for M in (ctrl.P, ctrl.Q, ctrl.R))
    for M in (P, Q, R):
        if np.iscomplexobj(M) and np.abs(M.imag).max(initial=0.0) > 1e-12 * max(1.0, np.abs(M).max()):
            raise ValueError("a complex controller cannot drive the real delay plant")
    return P.real.astype(float), Q.real.astype(float), R.real.astype(float)


def run_closed_loop(plant, ctrl, cfg):
    """Simulate the sampled-data loop.

    Parameters
    ----------
    plant : DelayPlant
    ctrl : DiscreteController
        Single-input single-output, strictly causal.
    cfg : SimConfig

    Returns
    -------
    SimTrace
    """
    if cfg.perturbation:
        plant = plant.perturbed(**cfg.perturbation)
    P, Q, R = _controller_matrices(ctrl)
    S, dt, tau = cfg.substeps, cfg.dt, cfg.tau
    hist = History(plant, dt, S * cfg.horizon)
    m = P.shape[0]
    xd = np.zeros(m) if cfg.xd0 is None else np.asarray(cfg.xd0, dtype=float).reshape(m)
    xds, errors, inputs = [xd.copy()], [], []
    a = cfg.precompensator
    xp = float(cfg.xp0)
    grid = np.arange(S) * dt
    blowup = BLOWUP * max(1.0, np.abs(plant.z0).max(initial=0.0),
                          np.abs(plant.history).max(initial=0.0))
    diverged = False
    for _ in range(cfg.horizon):
        up = float((R @ xd)[0]) + cfg.v
        if a is None:
            us = um = ue = np.full(S, up)
        else:
            # exact solution of xp' = -a xp + up on the period
            def xp_at(t, xp=xp, up=up):
                return up / a + (xp - up / a) * np.exp(-a * t)
            us, um, ue = xp_at(grid), xp_at(grid + 0.5 * dt), xp_at(grid + dt)
            xp = float(xp_at(tau))
        k_start = hist.k
        done = hist.advance(us, um, ue, blowup)
        inputs.append(us[:done])
        if done < S:
            diverged = True
            break
        y_seg = hist.outputs(k_start, hist.k)
        e = cfg.y_ref - sampler(y_seg, dt, cfg.weight)
        errors.append(e)
        xd = P @ xd + Q[:, 0] * e
        xds.append(xd.copy())
    k = hist.k
    t = np.arange(k + 1) * dt
    u = np.concatenate(inputs)
    if diverged:
        last = u[-1]
    else:
        last = float((R @ xd)[0]) + cfg.v if a is None else xp
    u = np.append(u, last)
    # with a precompensator the plant input is its state
    xp_arr = u.copy() if a is not None else None
    return SimTrace(t=t, z=hist.states(), u=u, y=hist.outputs(0, k), e=np.asarray(errors),
                    xd=np.asarray(xds), xp=xp_arr, diverged=diverged, config=cfg,
                    backend=_backend)


# -- metrics ---------------------------------------------------------------

@dataclass
class TrackingMetrics:
    """Tracking figures of a trace; unpacks as ``(weighted, decay, steady)``."""

    weighted_error_norm: float
    decay_rate: float
    steady_error: float
    diverged: bool = False

    def __iter__(self):
        return iter((self.weighted_error_norm, self.decay_rate, self.steady_error))

    def ok(self, steady_tol=1e-3):
        """True if the run stayed bounded and the steady error is below ``steady_tol``."""
        return (not self.diverged and np.isfinite(self.weighted_error_norm)
                and self.steady_error < steady_tol)

    def as_dict(self):
        return {"weighted_error_norm": self.weighted_error_norm, "decay_rate": self.decay_rate,
                "steady_error": self.steady_error, "diverged": self.diverged}


def _decay_fit(mags, floor=1e-10):
    """Slope of ``log mags`` over the decaying tail (per sample)."""
    mags = np.asarray(mags, dtype=float)
    peak = mags.max(initial=0.0)
    if peak == 0.0:
        return -np.inf
    keep = np.nonzero(mags >= floor * peak)[0]
    # the tail: second half of the samples still above the noise floor
    keep = keep[len(keep) // 2:] if len(keep) >= 6 else keep
    if keep.size < 2:
        return -np.inf
    slope, _ = np.polyfit(keep, np.log(mags[keep]), 1)
    return float(slope)


def tracking_metrics(trace, alpha=-0.01):
    """Weighted error norm, decay rate and steady error of a trace.

    Parameters
    ----------
    trace : SimTrace
    alpha : float
        Negative exponent of the weighted norm
        ``(int exp(-2 alpha t) |y - y_ref|^2 dt)^(1/2)``.

    Returns
    -------
    TrackingMetrics
        ``decay_rate`` is the fitted exponential rate of ``|e(k)|`` per
        second (``-inf`` for an error that is identically zero); a diverged
        run reports infinite figures.

    Raises
    ------
    ValueError
        If the trace has fewer than 20 samples.
    """
    if trace.diverged:
        return TrackingMetrics(np.inf, np.inf, np.inf, True)
    if trace.e.size < 20:
        raise ValueError("need at least 20 samples")
    y_ref = trace.config.y_ref
    err = trace.y - y_ref
    integrand = np.exp(-2.0 * alpha * trace.t) * err ** 2
    weighted = float(np.sqrt(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(trace.t))))
    rate = _decay_fit(np.abs(trace.e)) / trace.config.tau
    tail = max(1, trace.y.size // 10)
    steady = float(abs(np.mean(trace.y[-tail:]) - y_ref))
    return TrackingMetrics(weighted, rate, steady, False)


def perturb_and_rerun(plant, ctrl, cfg, factors=None, limit=0.02):
    """Rerun the loop on a plant with scaled coefficients.

    Parameters
    ----------
    factors : dict, optional
        ``{'A': scalar or per-matrix sequence, 'b': scalar, 'c': scalar}``.
    limit : float or None
        Largest allowed relative deviation of any factor from one;
        ``None`` lifts the restriction.

    Raises
    ------
    ValueError
        If a factor lies outside ``[1 - limit, 1 + limit]``.
    """
    factors = dict(factors or {})
    if limit is not None:
        flat = []
        for value in factors.values():
            flat.extend(np.atleast_1d(np.asarray(value, dtype=float)))
        bad = [f for f in flat if abs(f - 1.0) > limit + 1e-12]
        if bad:
            raise ValueError(f"factors {bad} exceed the declared range of +-{limit:g}")
    return run_closed_loop(plant.perturbed(**factors), ctrl,
                           SimConfig(**{**cfg.__dict__, "perturbation": None}))


# -- discrete loop ---------------------------------------------------------

@dataclass
class DiscreteTrace:
    """Iteration of the discrete closed loop.

    ``x[k]`` and ``xd[k]`` are the states at step ``k``; ``y[k]``, ``u[k]``
    and ``e[k]`` the signals during step ``k``.
    """

    x: np.ndarray
    xd: np.ndarray
    y: np.ndarray
    u: np.ndarray
    e: np.ndarray


def _signal(sig, steps, width):
    if callable(sig):
        vals = [np.broadcast_to(np.asarray(sig(k)), (width,)) for k in range(steps)]
        return np.asarray(vals)
    arr = np.asarray(sig)
    if arr.ndim == 2:
        if arr.shape[0] < steps:
            raise ValueError("signal shorter than the number of steps")
        return arr[:steps]
    return np.broadcast_to(arr, (steps, width))


def run_discrete_loop(plant, ctrl, y_ref, v, steps, x0=None, xd0=None):
    """Iterate ``x+ = A x + B u``, ``y = C x + D u``, ``u = R xd + v``,
    ``e = y_ref - y``, ``xd+ = P xd + Q e``.

    Parameters
    ----------
    plant : DiscretePlant
    ctrl : DiscreteController
    y_ref, v : scalar, array or callable
        Constants, arrays of shape ``(steps, p)`` or functions of ``k``.
    steps : int
    x0, xd0 : array_like, optional
        Initial states (zero by default).

    Returns
    -------
    DiscreteTrace
    """
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    P, Q, R = ctrl.P, ctrl.Q, ctrl.R
    n, m, p = A.shape[0], P.shape[0], C.shape[0]
    r = _signal(y_ref, steps, p)
    w = _signal(v, steps, B.shape[1])
    dtype = np.result_type(A, B, C, D, P, Q, R, r, w, float)
    x = np.zeros(n, dtype) if x0 is None else np.asarray(x0, dtype=dtype).reshape(n)
    xd = np.zeros(m, dtype) if xd0 is None else np.asarray(xd0, dtype=dtype).reshape(m)
    xs, xds = [x], [xd]
    ys, us, es = [], [], []
    for k in range(steps):
        u = R @ xd + w[k]
        y = C @ x + D @ u
        e = r[k] - y
        x = A @ x + B @ u
        xd = P @ xd + Q @ e
        xs.append(x)
        xds.append(xd)
        ys.append(y)
        us.append(u)
        es.append(e)
    return DiscreteTrace(np.asarray(xs), np.asarray(xds), np.asarray(ys), np.asarray(us),
                         np.asarray(es))


def fit_geometric_decay(e, floor=1e-12):
    """Fit ``|e(k)| <= M rho**k`` to an error sequence.

    ``rho`` comes from a least-squares fit of ``log |e(k)|`` over the tail
    above the noise floor; ``M`` is the smallest constant that makes the
    bound hold on every sample above the floor.

    Returns
    -------
    M, rho : float
        ``rho = 0`` for an error that vanishes identically.
    """
    e = np.asarray(e)
    mags = np.linalg.norm(e.reshape(e.shape[0], -1), axis=1)
    slope = _decay_fit(mags, floor)
    if slope == -np.inf:
        return (float(mags.max(initial=0.0)), 0.0)
    rho = float(np.exp(slope))
    peak = mags.max()
    keep = np.nonzero(mags >= floor * peak)[0]
    M = float(np.max(mags[keep] / rho ** keep.astype(float)))
    return M, rho


# -- output ----------------------------------------------------------------

def _fmt(x):
    return "" if x is None else f"{x:.17g}"


def write_trace_csv(trace, path, manifest=None):
    """Write ``t, u, y, e_k, sampled, x_p`` rows with a commented config header.

    Rows at the sampling instants ``(k+1) tau`` carry ``e(k)`` and
    ``sampled = 1``; other rows leave ``e_k`` empty.
    """
    cfg = trace.config
    S = cfg.substeps
    with open(path, "w", newline="") as fh:
        if manifest is not None:
            fh.write(f"# manifest = {manifest}\n")
        for key, value in cfg.echo().items():
            fh.write(f"# {key} = {value}\n")
        fh.write(f"# backend = {trace.backend}\n# diverged = {trace.diverged}\n")
        fh.write("t,u,y,e_k,sampled,x_p\n")
        for i in range(trace.t.size):
            k, rem = divmod(i, S)
            sampled = rem == 0 and 1 <= k <= trace.e.size
            e = _fmt(trace.e[k - 1]) if sampled else ""
            xp = _fmt(trace.xp[i]) if trace.xp is not None else ""
            fh.write(f"{_fmt(trace.t[i])},{_fmt(trace.u[i])},{_fmt(trace.y[i])},{e},"
                     f"{int(sampled)},{xp}\n")


def format_metrics(metrics, digits=17, extra=None):
    """Metrics as ``key = value`` lines."""
    items = dict(extra or {})
    items.update(metrics.as_dict())
    out = []
    for key, value in items.items():
        if isinstance(value, (bool, np.bool_)):
            out.append(f"{key} = {str(bool(value)).lower()}")
        elif isinstance(value, (float, np.floating)):
            out.append(f"{key} = {float(value):.{digits}g}")
        else:
            out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"
