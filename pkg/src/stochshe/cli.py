"""Command-line experiment runner.

    stochshe <subcommand> --config run.ini [--seed S] [--threads N] [--out DIR]

Exit codes: 0 ok, 1 numerical failure (blow-up; the failing time is printed),
2 usage or configuration error. Every run writes manifest.json next to its tables.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import attractor as at
from . import gronwall as gw
from . import io
from . import measure as ms
from . import noise as nz
from .config import ConfigError, RunConfig, load_config, parse_int_range
from .dynamics import BlowUpError, integrate
from .spectral import h_norm, v_norm

COMMANDS = ("simulate", "pullback", "usc", "invmeasure", "feller", "hitting", "gronwall", "radii")


class _Run:
    """Shared state of one CLI invocation: config, output dir, worker pool, manifest."""

    def __init__(self, args, rc: RunConfig):
        self.args = args
        self.rc = rc
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.summary: dict = {}
        self.threads = args.threads or os.cpu_count() or 1

    @property
    def cfg(self):
        return self.rc.sim

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def map(self, fn, items):
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return list(map(fn, items))
        with ThreadPoolExecutor(self.threads) as ex:
            return list(ex.map(fn, items))

    def report(self, line: str, **summary) -> None:
        print(line)
        self.summary.update(summary)


def cmd_simulate(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    T = rc.exp_number("T", 1.0)
    stride = rc.exp_int("stride", 1)
    u0 = rc.initial_state()
    path = nz.sample_wiener(cfg.seed, -cfg.burn_in, T, cfg.dt)
    tr = integrate(cfg, path, u0, 0.0, T, stride=stride)
    rows = zip(tr.step_times, tr.h_norms[:, 0], tr.v_norms[:, 0])
    io.write_csv(run.path("trajectory.csv"), ["t", "H", "V"], rows,
                 comment=f"scheme={cfg.scheme} eps={cfg.eps!r} dt={cfg.dt!r} seed={cfg.seed}")
    snap = rc.exp_int("snapshot_stride", 0)
    if snap:
        if snap % stride:
            raise ConfigError("snapshot_stride must be a multiple of stride")
        for r in range(0, tr.times.size, snap // stride):
            io.write_shnf(run.path(f"snap_{r * stride:08d}.shnf"), tr.member(0)[r])
    io.svg_polyline(run.path("trajectory.svg"),
                    {"|u|": (tr.step_times, tr.h_norms[:, 0]), "|Δu|": (tr.step_times, tr.v_norms[:, 0])},
                    title="norms along the trajectory", xlabel="t")
    run.report(f"simulated {tr.step_times.size - 1} steps to T={T}; final |u|={tr.h_norms[-1, 0]:.6g}",
               final_H=float(tr.h_norms[-1, 0]), final_V=float(tr.v_norms[-1, 0]))


def cmd_pullback(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    t_pb = rc.exp_number("t_pullback", 20.0)
    M = rc.exp_int("M", 8)
    path = nz.sample_wiener(cfg.seed, -at.path_span(cfg, t_pb), 0.0, cfg.dt)
    cloud = at.estimate_attractor(cfg, path, M, t_pb)
    b = cfg.basis
    rows = zip(range(M), h_norm(b, cloud.points), v_norm(b, cloud.points))
    io.write_csv(run.path("pullback.csv"), ["member", "H", "V"], rows,
                 comment=f"eps={cfg.eps!r} t_pullback={t_pb!r} radius={cloud.meta['radius']!r}")
    d = cloud.meta["doubling"]
    run.report(f"pullback cloud: diameter_V={d['diameter']:.6g} doubling shift={d['shift']:.6g} "
               f"converged={d['converged']}", **d)


def cmd_usc(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    eps_grid = rc.exp_list("eps_grid", [0.8, 0.4, 0.2, 0.1])
    seeds = parse_int_range(rc.exp_str("seeds", "0-7"))
    t_pb = rc.exp_number("t_pullback", 20.0)
    M = rc.exp_int("M", 8)
    res = at.usc_experiment(cfg, eps_grid, seeds, t_pb, M=M, map_fn=run.map)
    io.write_csv(run.path("usc.csv"), ["eps", "seed", "t_pullback", "dist_V"],
                 ([r["eps"], r["seed"], r["t_pullback"], r["dist_V"]] for r in res.rows))
    eps_sorted = sorted(res.medians)
    io.svg_polyline(run.path("usc.svg"),
                    {"median dist_V": (np.array(eps_sorted), np.array([res.medians[e] for e in eps_sorted]))},
                    title="distance to the deterministic attractor", xlabel="eps", ylabel="median dist_V",
                    logy=all(v > 0 for v in res.medians.values()), markers=True)
    meds = ", ".join(f"{e:g}: {res.medians[e]:.4g}" for e in eps_grid)
    run.report(f"usc medians {{{meds}}}", medians={str(k): v for k, v in res.medians.items()})


def cmd_invmeasure(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    T = rc.exp_number("T", 10.0)
    stride = rc.exp_int("stride", max(1, int(round(1.0 / cfg.dt))))
    M = rc.exp_int("M", 4)
    nu = ms.krylov_bogoliubov(cfg, rc.initial_state(), T, stride, M)
    b = cfg.basis
    rows = zip(range(len(nu)), h_norm(b, nu.samples), v_norm(b, nu.samples))
    io.write_csv(run.path("measure.csv"), ["sample", "H", "V"], rows,
                 comment=f"T={T!r} stride={stride} paths={M} seed={cfg.seed} "
                         f"dropped={nu.provenance['dropped']}")
    m1, m2 = ms.moment(nu, 1), ms.moment(nu, 2)
    run.report(f"invariant-measure estimate: {len(nu)} samples, moment1={m1:.6g} moment2={m2:.6g}",
               moment1=m1, moment2=m2, samples=len(nu))


def cmd_feller(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    T = rc.exp_number("T", 1.0)
    M = rc.exp_int("M", 64)
    dists = rc.exp_list("distances", [0.1, 0.05, 0.025])
    u10 = rc.initial_state()
    direction = rc.initial_state("direction", "random:1", index=1)
    direction = direction * (1.0 / np.linalg.norm(direction.xi))
    reps = run.map(lambda d: ms.feller_probe(cfg, u10, u10 + direction * d, T, M), dists)
    io.write_csv(run.path("feller.csv"), ["distance", "E_sup_sq_diff", "ratio"],
                 ([d, r.e_sup_sq_diff, r.ratio] for d, r in zip(dists, reps)))
    ratios = [r.ratio for r in reps]
    run.report(f"feller ratios {['%.4g' % x for x in ratios]}; spread factor {max(ratios) / min(ratios):.4g}",
               ratios=ratios)


def cmd_hitting(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    kind = rc.exp_str("kind", "integral")
    p = rc.exp_number("p", 1.0)
    kappas = rc.exp_list("kappa", [0.1, 0.2, 0.4, 0.8])
    kappa_aux = rc.exp_number("kappa_aux", 1.0)
    t = rc.exp_number("t", 1.0)
    M = rc.exp_int("M", 64)
    u0 = rc.initial_state()
    tr = ms.run_ensemble(cfg, u0, t, M, stride=int(round(t / cfg.dt)))
    specs = [ms.HittingTimeSpec(kind, p, k, kappa_aux) for k in kappas]
    reps = [ms.hitting_report(tr, s, t, u0, cfg.h) for s in specs]
    C = ms.fit_bound_constant(reps)
    io.write_csv(run.path("hitting.csv"), ["kappa", "t", "prob", "bound_shape", "fitted_bound"],
                 ([s.kappa, t, r.prob, r.shape, C * r.shape] for s, r in zip(specs, reps)),
                 comment=f"kind={kind} p={p!r} kappa_aux={kappa_aux!r} paths={M} fitted_C={C!r}")
    run.report(f"hitting probabilities {[r.prob for r in reps]}; fitted constant {C:.4g}",
               probs=[r.prob for r in reps], fitted_C=C)


def cmd_gronwall(run: _Run) -> None:
    rc = run.rc
    seed = run.cfg.seed
    n = rc.exp_int("n_instances", 1000)
    C0 = rc.exp_number("C0", 2.0)
    frac = rc.exp_number("window_frac", 0.25)
    res = gw.run_suite(seed=seed, n_instances=n, C0=C0, window_frac=frac)
    io.write_csv(run.path("gronwall.csv"), ["n_passing", "n_drawn", "violations", "worst_ratio", "constant"],
                 [[res.n_passing, res.n_drawn, len(res.violations), res.worst_ratio, res.constant]],
                 comment=f"seed={seed} C0={C0!r} window_frac={frac!r}")
    run.report(f"{len(res.violations)} violations in {res.n_passing} hypothesis-satisfying instances "
               f"({res.n_drawn} drawn); worst ratio {res.worst_ratio:.4g} vs constant {res.constant:g}",
               violations=len(res.violations), n_passing=res.n_passing)


def cmd_radii(run: _Run) -> None:
    cfg, rc = run.cfg, run.rc
    eps_grid = rc.exp_list("eps_grid", [cfg.eps])
    span = rc.exp_number("window", 40.0)
    path = nz.sample_wiener(cfg.seed, -(span + cfg.burn_in), 0.0, cfg.dt)
    ou = nz.ou_from_path(path, cfg.burn_in)
    rows = []
    for e in eps_grid:
        r = at.absorbing_radii(ou, e, cfg.h_norm2)
        f = r.functionals
        rows.append([e, r.rho1_sq, r.rho2_sq, r.rho3, f.m1eps, f.meps, f.Meps])
    io.write_csv(run.path("radii.csv"), ["eps", "rho1_sq", "rho2_sq", "rho3", "m1eps", "meps", "Meps"], rows,
                 comment=f"seed={cfg.seed} dt={cfg.dt!r}")
    run.report("radii " + "; ".join(f"eps={r[0]:g}: rho1^2={r[1]:.6g} rho2^2={r[2]:.6g} rho3={r[3]:.6g}"
                                    for r in rows))


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochshe", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="sectioned key=value run file")
        sp.add_argument("--seed", type=int, help="override [noise] seed")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--out", default="out", help="output directory")
        if name == "simulate":
            sp.add_argument("--scheme", choices=("exp-euler-rpde", "exp-em-spde"))
            sp.add_argument("--eps", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t_start = time.perf_counter()
    try:
        rc = load_config(args.config)
        over = {}
        if args.seed is not None:
            over["seed"] = args.seed
        if getattr(args, "scheme", None):
            over["scheme"] = args.scheme
        if getattr(args, "eps", None) is not None:
            over["eps"] = args.eps
        if over:
            rc.sim = rc.sim.with_(**over)
        run = _Run(args, rc)
        HANDLERS[args.command](run)
    except ConfigError as e:
        print(f"{ap.prog} {args.command}: configuration error: {e}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return 2
    except BlowUpError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"{ap.prog} {args.command}: error: {e}", file=sys.stderr)
        return 2
    manifest = io.RunManifest(command=args.command, config_hash=rc.text_hash, seeds=[rc.sim.seed],
                              versions=io.RunManifest.current_versions(), outputs=run.outputs,
                              wall_clock=time.perf_counter() - t_start, summary=run.summary)
    manifest.write(run.out / "manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
