"""Time-step study on a common noise path.

For dt = 2^-k, k in [k_min, k_max], reports the transform discrepancy between the
direct scheme and the transformed random PDE (with and without the Milstein term),
and the self-convergence error of the direct scheme against the finest level.

    python3 scripts/convergence_study.py --out out/convergence
"""
import argparse
from pathlib import Path

import numpy as np

from stochshe import io
from stochshe import noise as nz
from stochshe.dynamics import SimConfig, integrate
from stochshe.kernel import make_constant_kernel
from stochshe.spectral import build_basis, single_mode, zeros


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--k-min", type=int, default=6)
    ap.add_argument("--k-max", type=int, default=12)
    ap.add_argument("--paths", type=int, default=8)
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    b = build_basis(np.pi, args.N)
    u0 = single_mode(b, 1, 1, 1.0)
    levels = list(range(args.k_min, args.k_max))
    rows = []
    disc = {False: np.zeros((args.paths, len(levels))), True: np.zeros((args.paths, len(levels)))}
    strong = np.zeros((args.paths, len(levels)))
    for i in range(args.paths):
        fine = nz.sample_wiener(0, -20.0, 1.0, 2.0**-args.k_max, path_index=i)
        base = SimConfig(a=2.0, eps=args.eps, h=zeros(b), basis=b, kernel=make_constant_kernel(1.0),
                         dt=fine.dt, scheme="exp-em-spde")
        ref = integrate(base, fine, u0, 0.0, 1.0).final()[0]
        for n, k in enumerate(levels):
            p = nz.coarsen(fine, 2 ** (args.k_max - k))
            cfg = base.with_(dt=p.dt)
            direct = integrate(cfg, p, u0, 0.0, 1.0)
            strong[i, n] = np.linalg.norm(direct.final()[0] - ref)
            rp = integrate(cfg.with_(scheme="exp-euler-rpde"), p, u0, 0.0, 1.0).states[:, 0]
            for mil in (False, True):
                sp = direct.states[:, 0] if not mil else \
                    integrate(cfg.with_(milstein=True), p, u0, 0.0, 1.0).states[:, 0]
                disc[mil][i, n] = np.linalg.norm(sp - rp, axis=1).max() / np.linalg.norm(sp, axis=1).max()
    dts = np.array([2.0**-k for k in levels])
    rms = lambda a: np.sqrt(np.mean(a**2, axis=0))  # noqa: E731
    for n, k in enumerate(levels):
        rows.append([k, dts[n], rms(disc[False])[n], rms(disc[True])[n], rms(strong)[n]])
    io.write_csv(out / "convergence.csv", ["k", "dt", "transform_em", "transform_milstein", "strong_err"], rows,
                 comment=f"N={args.N} eps={args.eps} paths={args.paths} reference dt=2^-{args.k_max}")
    io.svg_polyline(out / "convergence.svg",
                    {"transform, EM": (np.log2(dts), rms(disc[False])),
                     "transform, Milstein": (np.log2(dts), rms(disc[True])),
                     "strong error": (np.log2(dts), rms(strong))},
                    title="discretization error vs time step", xlabel="log2 dt", logy=True, markers=True)
    for name, e in (("EM transform", rms(disc[False])), ("Milstein transform", rms(disc[True])),
                    ("strong self-convergence", rms(strong))):
        print(f"{name:24s} observed order {np.polyfit(np.log(dts), np.log(e), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
