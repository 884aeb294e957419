"""Pure-Python RK4 block for linear retarded delay systems.

The system is ``z'(t) = A0 z(t) + sum_j Ad[j] z(t - d[j] dt) + b u(t)``.
``Z[i]`` holds ``z`` at grid index ``i`` and ``Zmid[i]`` its value at the
middle of the interval ``[i, i + 1]``. Every delay is at least one grid
step, so all delayed values an RK4 stage needs are already in the buffers.
After each step the midpoint of the new interval is filled by cubic
Hermite interpolation with the one-sided slopes of that interval, which
keeps the scheme fourth order across kinks of the solution.
"""

import numpy as np


def _rhs(A0, Ad, d, b, src, base, z, u):
    out = A0 @ z + b * u
    for j in range(Ad.shape[0]):
        out += Ad[j] @ src[base - d[j]]
    return out


def rk4_block(A0, Ad, d, b, Z, Zmid, k0, nsteps, dt, us, um, ue, blowup):
    """Advance ``nsteps`` RK4 steps from grid index ``k0``.

    Parameters
    ----------
    A0 : ndarray, shape (n, n)
    Ad : ndarray, shape (q, n, n)
    d : ndarray of int, shape (q,)
        Delays in grid steps, each at least 1.
    b : ndarray, shape (n,)
    Z, Zmid : ndarray, shape (N, n)
        Grid and midpoint buffers, filled in place.
    k0, nsteps : int
    dt : float
    us, um, ue : ndarray, shape (nsteps,)
        Input at the start, middle and end of each step.
    blowup : float
        Stop once any state component exceeds this magnitude.

    Returns
    -------
    int
        Number of steps completed (less than ``nsteps`` after a blow-up).
    """
    h2, h6, h8 = 0.5 * dt, dt / 6.0, dt / 8.0
    for step in range(nsteps):
        i = k0 + step
        z = Z[i]
        k1 = _rhs(A0, Ad, d, b, Z, i, z, us[step])
        k2 = _rhs(A0, Ad, d, b, Zmid, i, z + h2 * k1, um[step])
        k3 = _rhs(A0, Ad, d, b, Zmid, i, z + h2 * k2, um[step])
        k4 = _rhs(A0, Ad, d, b, Z, i + 1, z + dt * k3, ue[step])
        z1 = z + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Z[i + 1] = z1
        fe = _rhs(A0, Ad, d, b, Z, i + 1, z1, ue[step])
        Zmid[i] = 0.5 * (z + z1) + h8 * (k1 - fe)
        if not np.all(np.isfinite(z1)) or np.abs(z1).max() > blowup:
            return step + 1
    return nsteps
