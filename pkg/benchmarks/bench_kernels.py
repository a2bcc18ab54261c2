"""Compare the numba and numpy kernel backends.

Two parts:

* per-kernel timings on large synthetic face/edge arrays, calling both
  kernel modules directly (numba timings exclude the first, compiling call);
* end-to-end flow runs in subprocesses, one with ``DCSFLOW_DISABLE_NUMBA=1``.

    python benchmarks/bench_kernels.py [--faces 200000] [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from dcsflow import _kernels_numba as nb
from dcsflow import _kernels_numpy as npk


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def synthetic(n_faces, rng):
    # near-equilateral sides with a sprinkling of degenerate faces
    sides = rng.uniform(0.5, 1.5, (n_faces, 3))
    bad = rng.random(n_faces) < 0.01
    sides[bad, 0] = sides[bad, 1] + sides[bad, 2] + 0.1
    dside = rng.normal(size=(n_faces, 3, 3))
    n_edges = 3 * n_faces // 2
    n_verts = n_faces // 2
    ei = rng.integers(0, n_verts, n_edges)
    ej = rng.integers(0, n_verts, n_edges)
    eps = np.ones(n_verts)
    eta = rng.uniform(0.2, 1.0, n_edges)
    f = rng.uniform(-0.5, 0.5, n_verts)
    faces = rng.integers(0, n_verts, (n_faces, 3))
    return sides, dside, (ei, ej, eps, eta, f), faces, n_verts


def kernel_table(n_faces, repeat):
    rng = np.random.default_rng(0)
    sides, dside, edge_args, faces, n_verts = synthetic(n_faces, rng)
    values = rng.normal(size=(n_faces, 3))
    cases = {
        "face_angles (E)": lambda m: m.face_angles(sides, False),
        "face_angles (H)": lambda m: m.face_angles(sides, True),
        "face_jacobians (E)": lambda m: m.face_jacobians(sides, dside, False),
        "edge_lengths (E)": lambda m: m.edge_lengths(*edge_args, False),
        "edge_lengths (H)": lambda m: m.edge_lengths(*edge_args, True),
        "scatter_vertices": lambda m: m.scatter_vertices(faces, values, n_verts),
    }
    print(f"kernels on {n_faces} faces, best of {repeat}")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in cases.items():
        call(nb)  # compile
        t_np = best_of(lambda: call(npk), repeat)
        t_nb = best_of(lambda: call(nb), repeat)
        print(f"{name:<22}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}x")


FLOW_SCRIPT = """
import time, numpy as np
from dcsflow import FlowSpec, WeightedSurface, builtin_mesh, run
from dcsflow.kernels import BACKEND
from dcsflow.metric import ConformalState
s = WeightedSurface.uniform(builtin_mesh("genus2"), 1, 1.0)
u = np.random.default_rng(1).uniform(-0.3, 0.3, s.n_vertices)
st = ConformalState.from_u(s, u, "euclidean", 1.0)
run(s, st, FlowSpec("normalized_ricci", 1.0), t_max=0.1)  # warm-up (numba compile/cache load)
t0 = time.perf_counter()
tr = run(s, st, FlowSpec("normalized_ricci", 1.0), t_max=20.0, residual_tol=0.0)
print(BACKEND, len(tr.times), time.perf_counter() - t0)
"""


def flow_table():
    print("\nend-to-end: normalized Ricci flow on genus2, RK4 h=1e-2, t in [0, 20]")
    for disable in ("", "1"):
        env = dict(os.environ, DCSFLOW_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", FLOW_SCRIPT], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        backend, steps, secs = out[0], int(out[1]), float(out[2])
        print(f"{backend:<8}{steps:>6} samples {secs:8.3f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--faces", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    kernel_table(args.faces, args.repeat)
    flow_table()


if __name__ == "__main__":
    main()
