"""Run manifests and controller files.

Controllers are stored as JSON with every float written to 17 significant
digits, which round-trips exactly; complex numbers become ``[re, im]``
pairs and complex matrices carry a separate ``imag`` block.
"""

import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import ParseError
from .rational import RationalMatrix, ScalarRational
from .synthesis import DiscreteController

__all__ = ["RunManifest", "jsonable", "save_controller", "load_controller", "write_json"]

CONTROLLER_FORMAT = "regsyn-controller"


@dataclass
class RunManifest:
    """Provenance of one command invocation.

    Every file a command writes names the manifest file that describes the
    run; the manifest is the only output that records wall-clock time.
    """

    command: str
    inputs: list
    config: dict
    version: str = __version__
    started: str = ""
    wall_clock: float = 0.0
    status: str = "running"
    artifacts: list = field(default_factory=list)

    def __post_init__(self):
        self._t0 = time.perf_counter()
        if not self.started:
            self.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    @property
    def filename(self):
        return f"manifest-{self.command}.json"

    def finish(self, status):
        self.status = status
        self.wall_clock = time.perf_counter() - self._t0

    def to_dict(self):
        return jsonable(asdict(self))

    def write(self, out_dir):
        path = os.path.join(out_dir, self.filename)
        write_json(self.to_dict(), path)
        return path


def jsonable(obj):
    """Recursively convert numpy scalars, arrays and complex numbers to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return z.real if z.imag == 0 else [z.real, z.imag]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def _dumps(obj, indent=0):
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_dumps(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError("non-finite float in JSON output")
        return f"{obj:.17g}"
    return json.dumps(obj)


def write_json(data, path):
    """Write JSON with floats at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(_dumps(data) + "\n")


def _matrix_entry(M):
    M = np.asarray(M)
    out = {"real": M.real.tolist()}
    if np.iscomplexobj(M) and np.any(M.imag != 0):
        out["imag"] = M.imag.tolist()
    return out


def _matrix_from(entry):
    re = np.asarray(entry["real"], dtype=float)
    if "imag" in entry:
        return re + 1j * np.asarray(entry["imag"], dtype=float)
    return re


def _poly_entry(c):
    return _matrix_entry(np.asarray(c))


def save_controller(ctrl, path, report=None, tau=None, plant_name=None, manifest=None):
    """Write a controller and its synthesis report.

    ``K`` coefficients are listed in ascending powers of ``z``.
    """
    data = {"format": CONTROLLER_FORMAT, "version": __version__}
    if manifest is not None:
        data["manifest"] = manifest
    data.update(plant=plant_name, tau=tau, method=ctrl.method, order=ctrl.order,
                P=_matrix_entry(ctrl.P), Q=_matrix_entry(ctrl.Q), R=_matrix_entry(ctrl.R))
    if ctrl.K is not None:
        data["K"] = [[{"num": _poly_entry(f.num), "den": _poly_entry(f.den)} for f in row]
                     for row in ctrl.K.entries]
    if report is not None:
        data["report"] = jsonable(report.to_dict())
    write_json(jsonable(data), path)


def load_controller(path):
    """Read a controller file written by :func:`save_controller`.

    Returns
    -------
    ctrl : DiscreteController
    meta : dict
        The remaining fields of the file (``tau``, ``plant``, ``report``...).

    Raises
    ------
    ParseError
        If the file is unreadable or not a controller file.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict) or data.get("format") != CONTROLLER_FORMAT:
        raise ParseError(f"{path} is not a controller file")
    try:
        P, Q, R = (_matrix_from(data[k]) for k in ("P", "Q", "R"))
        K = None
        if "K" in data:
            K = RationalMatrix([[ScalarRational(_matrix_from(f["num"]), _matrix_from(f["den"]),
                                                cancel_tol=0) for f in row] for row in data["K"]])
        ctrl = DiscreteController(P=np.atleast_2d(P), Q=Q, R=R, K=K, method=data.get("method", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed controller ({exc})") from None
    meta = {k: v for k, v in data.items() if k not in ("P", "Q", "R", "K")}
    return ctrl, meta
