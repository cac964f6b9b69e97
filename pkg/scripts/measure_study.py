"""Occupation-measure diagnostics: Cauchy check in T and moment ceilings over the forcing.

    python3 scripts/measure_study.py --out out/measure
"""
import argparse
from pathlib import Path

import numpy as np

from stochshe import io
from stochshe.dynamics import SimConfig
from stochshe.kernel import make_constant_kernel
from stochshe.measure import krylov_bogoliubov, moment
from stochshe.spectral import build_basis, single_mode


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--M", type=int, default=16)
    ap.add_argument("--T", default="25,50,100,200,400")
    ap.add_argument("--h-grid", default="0,0.5,1,2")
    ap.add_argument("--dt", type=float, default=2.0**-7)
    ap.add_argument("--out", default="out/measure")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    b = build_basis(np.pi, args.N)
    u0 = single_mode(b, 1, 1, 1.0)
    stride = int(round(1.0 / args.dt))

    def cfg(hv):
        return SimConfig(a=2.0, eps=args.eps, h=single_mode(b, 1, 1, hv), basis=b,
                         kernel=make_constant_kernel(1.0), dt=args.dt)

    rows = []
    for T in (float(t) for t in args.T.split(",")):
        nu = krylov_bogoliubov(cfg(0.5), u0, T, stride, args.M)
        rows.append([T, moment(nu, 1), moment(nu, 2), len(nu)])
        print(f"T={T:<6g} moment1={rows[-1][1]:.5f} moment2={rows[-1][2]:.6f} samples={len(nu)}")
    io.write_csv(out / "cauchy.csv", ["T", "moment1", "moment2", "samples"], rows,
                 comment=f"h=(1,1):0.5 eps={args.eps} M={args.M} dt={args.dt!r}")
    T = np.array([r[0] for r in rows])
    io.svg_polyline(out / "cauchy.svg", {"moment 1": (T, np.array([r[1] for r in rows]))},
                    title="occupation-measure moment vs horizon", xlabel="T", markers=True)

    ceil_rows = []
    for hv in (float(h) for h in args.h_grid.split(",")):
        nu = krylov_bogoliubov(cfg(hv), u0, 100.0, stride, args.M)
        for p in (1, 2):
            r = moment(nu, p) / (hv ** (2 * p) + 1)
            ceil_rows.append([hv, p, r])
            print(f"h={hv:<4g} p={p} moment/(|h|^2p+1) = {r:.5f}")
    io.write_csv(out / "ceiling.csv", ["h", "p", "ratio"], ceil_rows)


if __name__ == "__main__":
    main()
