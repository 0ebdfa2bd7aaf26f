"""Command line interface.

Subcommands:
  run <config> [--out dir] [--jobs k]   run a configured experiment
  plot <report.json> --metric <name>    render an SVG for one metric
  spin exact|sample|leeyang|clt ...     spin-system operations
  dpp cumulants|variance|decay-check|sample|clt ...  point-process operations

``run`` exits 0 iff every gate of the experiment passes.  The default job
count comes from MARCINCLT_JOBS.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not serializable: {type(o)}")


def _emit(obj, out):
    text = json.dumps(obj, indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {out}")
    else:
        print(text)


def _add_spin_flags(p):
    p.add_argument("--model", default="ising",
                   choices=["ising", "atomic", "xy", "heisenberg"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--side", type=int, default=2)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--field", type=float, nargs="+", default=[0.0])
    p.add_argument("--coupling", type=float, nargs="+", default=[1.0])
    p.add_argument("--values", type=float, nargs="+",
                   help="atoms for --model atomic")
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--model-file",
                   help="key=value model file; overrides the flags above")
    p.add_argument("--out")


def _spin_params(args):
    if args.model_file:
        from .harness import parse_config  # reuse the key=value parser
        text = "kind=spin_leeyang\n" + open(args.model_file).read()
        cfg = parse_config(text)
        return cfg.params
    params = {"model": args.model, "dim": args.dim, "side": args.side,
              "beta": args.beta}
    params["field"] = args.field if len(args.field) > 1 else args.field[0]
    params["coupling"] = (args.coupling if len(args.coupling) > 1
                          else args.coupling[0])
    if args.values:
        params["values"] = list(args.values)
    if args.periodic:
        params["periodic"] = True
    return params


def _add_dpp_flags(p):
    p.add_argument("--kernel", default="gaussian:1.0",
                   help="gaussian:<scale> | ball_fourier:<d> | "
                        "projection:<rank> | custom:<file>")
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--phi", default="indicator",
                   help="indicator | bump | custom:<file>")
    p.add_argument("--L", type=float, nargs="+", default=[8.0])
    p.add_argument("--grid-res", type=float, default=4.0)
    p.add_argument("--d", type=int, default=None,
                   help="ambient dimension (where the kernel name leaves it free)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")


def _dpp_spec_phi(args):
    from .harness import _kernel_from_params, _phi_from_params
    params = {"kernel": args.kernel, "alpha": args.alpha, "phi": args.phi}
    if args.d is not None:
        params["d"] = args.d
    spec = _kernel_from_params(params)
    phi = _phi_from_params(params, spec.dim)
    return spec, phi


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="marcin-clt",
        description="Zero-free characteristic functions, KS bounds, and "
                    "CLT experiments for spin systems and point processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--jobs", type=int, default=None)

    p_plot = sub.add_parser("plot", help="plot a metric from a report")
    p_plot.add_argument("report")
    p_plot.add_argument("--metric", required=True)
    p_plot.add_argument("--out", default=None)

    p_spin = sub.add_parser("spin", help="spin-system operations")
    spin_sub = p_spin.add_subparsers(dest="spin_op", required=True)
    for op in ("exact", "sample", "leeyang", "clt"):
        sp = spin_sub.add_parser(op)
        _add_spin_flags(sp)
        if op == "exact":
            sp.add_argument("--u", type=float, default=0.5,
                            help="evaluate the total-spin charfn at this u")
        if op in ("sample", "clt"):
            sp.add_argument("--samples", type=int, default=20000)
            sp.add_argument("--burn-in", type=int, default=500)
            sp.add_argument("--thinning", type=int, default=2)
            sp.add_argument("--seed", type=int, default=0)
        if op == "clt":
            sp.add_argument("--sizes", type=int, nargs="+",
                            default=[64, 256, 1024])

    p_dpp = sub.add_parser("dpp", help="alpha-determinantal operations")
    dpp_sub = p_dpp.add_subparsers(dest="dpp_op", required=True)
    for op in ("cumulants", "variance", "decay-check", "sample", "clt"):
        dp = dpp_sub.add_parser(op)
        _add_dpp_flags(dp)
        if op == "decay-check":
            dp.add_argument("--decay-beta", type=float, required=True)
            dp.add_argument("--r", type=float, required=True)
            dp.add_argument("--c1", type=float, required=True)
            dp.add_argument("--c2", type=float, required=True)
            dp.add_argument("--n0", type=int, default=3)
            dp.add_argument("--n-max", type=int, default=40)
        if op == "sample":
            dp.add_argument("--samples", type=int, default=100)
        if op == "clt":
            dp.add_argument("--backend", default="cumulant",
                            choices=["cumulant", "sampling"])
            dp.add_argument("--samples", type=int, default=4000)

    args = parser.parse_args(argv)

    if args.command == "run":
        from .harness import load_config, run
        report = run(load_config(args.config), out_dir=args.out, jobs=args.jobs)
        for gate in report.gates:
            status = "PASS" if gate["passed"] else "FAIL"
            print(f"[{status}] {gate['name']}: {gate['detail']}")
        if report.errors:
            for err in report.errors:
                print(f"[ERROR] sweep {err['sweep']}: {err['error']}")
        return 0 if report.all_gates_pass and not report.errors else 1

    if args.command == "plot":
        from .harness import RunReport
        from .plotting import emit_plot
        with open(args.report) as fh:
            data = json.load(fh)
        report = RunReport(
            config=data["config"], columns=data["columns"], rows=data["rows"],
            fits=data["fits"], gates=data["gates"], errors=data["errors"],
            wall_clock_s=data["wall_clock_s"], rng=data["rng"],
            version=data.get("version", ""))
        out = args.out or (args.report.rsplit(".", 1)[0]
                           + f"_{args.metric}.svg")
        emit_plot(report, args.metric, out)
        print(f"wrote {out}")
        return 0

    if args.command == "spin":
        from .harness import _spin_model_from_params
        from . import spin as spin_mod
        params = _spin_params(args)
        if args.spin_op == "exact":
            model = _spin_model_from_params(params)
            val = spin_mod.total_spin_charfn(model, args.u)
            mean, var = spin_mod.total_spin_moments(model)
            z = spin_mod.partition_function(model)
            _emit({"partition_function": z, "charfn_at_u": val, "u": args.u,
                   "mean": mean, "variance": var,
                   "ferromagnetic": model.ferromagnetic}, args.out)
            return 0
        if args.spin_op == "sample":
            model = _spin_model_from_params(params)
            totals = spin_mod.metropolis_totals(
                model, args.samples, args.burn_in, args.thinning, args.seed)
            tau = spin_mod.integrated_autocorr_time(totals)
            _emit({"mean_total_spin": float(totals.mean()),
                   "variance": float(totals.var(ddof=1)),
                   "autocorr_time": tau, "ess": float(totals.size / tau),
                   "n_samples": int(totals.size)}, args.out)
            return 0
        if args.spin_op == "leeyang":
            model = _spin_model_from_params(params)
            rep = spin_mod.lee_yang_zeros(model)
            _emit(rep.to_json_dict(), args.out)
            return 0
        if args.spin_op == "clt":
            res = spin_mod.spin_clt_experiment(
                lambda side: _spin_model_from_params(params, side),
                sizes=args.sizes, n_samples=args.samples,
                burn_in=args.burn_in, thinning=args.thinning, seed=args.seed)
            _emit({"rows": [dataclasses.asdict(r) for r in res.rows],
                   "variance_exponent": res.variance_exponent,
                   "ks_exponent": res.ks_exponent}, args.out)
            return 0

    if args.command == "dpp":
        from . import dpp as dpp_mod
        spec, phi = _dpp_spec_phi(args)
        if args.dpp_op == "cumulants":
            dk, phiv = dpp_mod.discretize_for_scale(
                spec, phi, args.L[0], args.grid_res)
            rep = dpp_mod.linstat_cumulants(dk, phiv, spec.alpha,
                                            scale=args.L[0])
            _emit(rep.to_json_dict(), args.out)
            return 0
        if args.dpp_op == "variance":
            fit = dpp_mod.variance_scaling_fit(spec, phi, args.L,
                                               res_per_unit=args.grid_res)
            _emit(dataclasses.asdict(fit), args.out)
            return 0
        if args.dpp_op == "decay-check":
            rep = dpp_mod.kernel_decay_check(
                spec, args.decay_beta, args.r, args.c1, args.c2,
                n0=args.n0, n_max=args.n_max, seed=args.seed)
            _emit(dataclasses.asdict(rep), args.out)
            return 0
        if args.dpp_op == "sample":
            dk, phiv = dpp_mod.discretize_for_scale(
                spec, phi, args.L[0], args.grid_res)
            counts = dpp_mod.sample_dpp(dk, seed=args.seed,
                                        n_samples=args.samples)
            _emit({"n_samples": int(counts.shape[0]),
                   "grid_size": int(counts.shape[1]),
                   "mean_count": float(counts.sum(axis=1).mean()),
                   "trace": dk.trace(),
                   "linear_statistic_mean": float((counts @ phiv).mean())},
                  args.out)
            return 0
        if args.dpp_op == "clt":
            res = dpp_mod.dpp_clt_experiment(
                spec, phi, args.L, backend=args.backend, seed=args.seed,
                res_per_unit=args.grid_res, n_samples=args.samples)
            _emit({"rows": [dataclasses.asdict(r) for r in res.rows],
                   "radius_variation": res.radius_variation,
                   "final_abs_skewness": res.final_abs_skewness},
                  args.out)
            return 0

    parser.error("unhandled command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
