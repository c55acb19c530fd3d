"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends are imported directly, so one run compares them side by
side and also checks that they agree.
"""

import argparse
import timeit

import numpy as np

from qrproj import _fallback, kernels, rqc


def cases(rng):
    n, depth, batch = 10, 150, 32
    specs = [rqc.AnsatzSpec(n, depth, s) for s in range(batch)]
    params = [rqc.layer_parameters(s) for s in specs]
    axes = np.ascontiguousarray(np.stack([p[0] for p in params]))
    angles = np.ascontiguousarray(np.stack([p[1] for p in params]))
    signs = rqc.cz_ladder_signs(n)
    row_circuit = np.arange(batch, dtype=np.intp)
    psi0 = rng.standard_normal((batch, 1 << n)) + 0j
    x0 = rng.standard_normal((256, 1024))
    a0 = rng.standard_normal((96, 128))

    def layers(mod):
        psi = psi0.copy()
        mod.apply_layers(psi, axes, angles, row_circuit, signs, False)
        return psi

    def fwht(mod):
        x = x0.copy()
        mod.fwht_rows(x)
        return x

    def jacobi(mod):
        cols = a0.copy()
        v = np.eye(96)
        mod.jacobi_sweeps(cols, v, 128 * np.finfo(float).eps, 0.0, 60)
        return np.sort(np.linalg.norm(cols, axis=1))

    return {
        f"ansatz n=10 D=150, {batch} states": layers,
        "fwht 256 x 1024": fwht,
        "jacobi 128 x 96": jacobi,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    ext = kernels.compiled()
    if ext is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  max diff")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if ext is None:
            print(f"{name:34s} {t_py:11.4f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(ext), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(fn(_fallback) - fn(ext))))
        print(f"{name:34s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:8.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
