"""Time the compiled and pure-Python RK4 kernels.

Runs the raw integration block on the example plant for several state
sizes, then one full closed-loop simulation per backend, and prints the
best of ``--repeat`` timings with the speed-up.

    python3 benchmarks/bench_kernel.py [--steps 20000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from regsyn import _kernel_py
from regsyn import plant as pl
from regsyn import simulate as sim
from regsyn import synthesis as syn

try:
    from regsyn import _kernel
except ImportError:
    _kernel = None


def _problem(n, steps, seed=0):
    rng = np.random.default_rng(seed)
    A0 = -np.eye(n) + 0.1 * rng.normal(size=(n, n))
    Ad = 0.1 * rng.normal(size=(2, n, n))
    d = np.array([20, 50], dtype=np.intp)
    b = rng.normal(size=n)
    hist = int(d.max())
    Z = np.zeros((hist + steps + 1, n))
    Z[: hist + 1] = 1.0
    Zmid = np.ones_like(Z)
    u = np.sin(np.arange(steps) * 1e-3)
    return (A0, Ad, d, b, Z, Zmid, hist, steps, 0.01, u, u.copy(), u.copy(), 1e12)


def _best(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_block(steps, repeat):
    print(f"rk4_block, {steps} steps (best of {repeat})")
    print(f"{'n':>3} {'python [s]':>12} {'cython [s]':>12} {'speed-up':>9}")
    for n in (1, 2, 4, 8):
        args = _problem(n, steps)
        t_py = _best(lambda: _kernel_py.rk4_block(*args), repeat)
        if _kernel is None:
            print(f"{n:>3} {t_py:>12.4f} {'n/a':>12} {'n/a':>9}")
            continue
        t_cy = _best(lambda: _kernel.rk4_block(*args), repeat)
        ref, got = _problem(n, steps), _problem(n, steps)
        _kernel_py.rk4_block(*ref)
        _kernel.rk4_block(*got)
        gap = np.abs(ref[4] - got[4]).max()
        print(f"{n:>3} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.0f}x   max diff {gap:.1e}")


def bench_loop(repeat):
    plant = pl.example_plant()
    ctrl, _ = syn.synthesize_delay(plant)
    cfg = sim.SimConfig(tau=2.0)
    print(f"\nclosed loop, example plant, {cfg.horizon} samples x {cfg.substeps} substeps")
    previous = sim.backend()
    try:
        for name in sim.available_backends():
            sim.set_backend(name)
            t = _best(lambda: sim.run_closed_loop(plant, ctrl, cfg), repeat)
            print(f"  {name:>6}: {t:.3f} s")
    finally:
        sim.set_backend(previous)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_block(args.steps, args.repeat)
    bench_loop(max(1, args.repeat // 2))


if __name__ == "__main__":
    main()
