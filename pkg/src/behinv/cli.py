"""Command-line experiment runner.

Subcommands: analyze, collect, simulate, estimate, dob, track, reproduce.
Exit status is 0 on success, 2 when a precondition is violated and 3 when a
numerical check fails (inconsistent data, non-convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels, fixtures
from .constrained import SolverConfig, TrackingProblem, track
from .dob import disturbance_free_output, run_dob, verify_transfer_relation
from .errors import BehinvError, PreconditionError
from .hankel import DataBank, build_data_bank, generate_pe_input, min_pe_length
from .inversion import feedback_radius, iter_algorithm1, run_algorithm2
from .lti import (
    StateSpaceSystem,
    inherent_delay,
    is_controllable,
    is_observable,
    observability_index,
    simulate,
    toeplitz_rank,
)
from .signals import Signal, read_signal_csv, write_signal_csv

EXIT_PRECONDITION = 2
EXIT_NUMERICAL = 3


def load_plant(name: str) -> StateSpaceSystem:
    """A JSON plant file, or one of the built-in names ``example1``/``example2``."""
    path = Path(name)
    if path.exists():
        return StateSpaceSystem.load(path)
    if name in fixtures.PLANTS:
        return fixtures.PLANTS[name]
    raise PreconditionError(f"no plant file {name!r} (built-ins: {', '.join(fixtures.PLANTS)})")


def _dump(obj, path: Path | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text)
    sys.stdout.write(text)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_bank(args) -> DataBank:
    bank = DataBank.load(args.bank)
    overrides = {"T_p": args.tp, "T_f": getattr(args, "tf", None), "L": args.delay}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return bank.rebuild(**overrides) if overrides else bank


def analyze_report(plant: StateSpaceSystem, T_p=None, T_f=None, L=None) -> dict:
    n, m, p = plant.n, plant.m, plant.p
    report = {"n": n, "m": m, "p": p, "m_le_p": m <= p}
    if m > p:
        return report
    report["controllable"] = is_controllable(plant)
    report["observable"] = is_observable(plant)
    report["observability_index"] = observability_index(plant) if report["observable"] else None
    L0 = inherent_delay(plant)
    report["inherent_delay"] = L0
    report["toeplitz_ranks"] = [toeplitz_rank(plant, t) for t in range(n + 1)]
    delay = L if L is not None else L0
    T_p = T_p if T_p is not None else report["observability_index"]
    if delay is not None and T_p is not None and T_f is not None:
        order = n + T_p + T_f + delay
        report.update(
            {
                "T_p": T_p,
                "T_f": T_f,
                "L": delay,
                "required_pe_order": order,
                "min_data_length": min_pe_length(m, order),
            }
        )
    return report


def cmd_analyze(args) -> int:
    plant = load_plant(args.plant)
    report = analyze_report(plant, args.tp, args.tf, args.delay)
    _dump(report)
    if not report["m_le_p"]:
        sys.stderr.write(f"error: m={plant.m} > p={plant.p}; the system has no left inverse\n")
        return EXIT_PRECONDITION
    return 0


def collect_bank(plant: StateSpaceSystem, T: int, T_p: int, T_f: int, L: int, seed: int) -> DataBank:
    order = plant.n + T_p + T_f + L
    if T < min_pe_length(plant.m, order):
        raise PreconditionError(
            f"--length {T} cannot be PE of order n+T_p+T_f+L = {order} with m={plant.m}; "
            f"need at least {min_pe_length(plant.m, order)}"
        )
    u_d = generate_pe_input(plant.m, T, order, seed, tail=L)
    _, y_d = simulate(plant, None, u_d)
    return build_data_bank(u_d, y_d, T_p, T_f, L, n=plant.n)


def cmd_collect(args) -> int:
    plant = load_plant(args.plant)
    L = args.delay if args.delay is not None else inherent_delay(plant)
    if L is None:
        raise PreconditionError("plant has no L-delay inverse for L <= n; pass --delay explicitly")
    T_p = args.tp if args.tp is not None else observability_index(plant)
    bank = collect_bank(plant, args.length, T_p, args.tf, L, args.seed)
    bank.save(_out_dir(args))
    radius = feedback_radius(bank)
    _dump({**bank.params(), "columns": bank.columns, "feedback_radius": radius})
    if radius >= 1.0:
        sys.stderr.write(f"warning: estimate feedback radius {radius:.3g} >= 1; consider a larger --tp\n")
    return 0


def cmd_simulate(args) -> int:
    plant = load_plant(args.plant)
    if args.u is not None:
        u = read_signal_csv(args.u)
    else:
        if args.length is None:
            raise PreconditionError("give --u or --length")
        u = fixtures.staircase_input(args.length, plant.m, seed=args.seed, hold=args.hold, rest=args.rest)
    x0 = np.asarray(json.loads(args.x0), dtype=float) if args.x0 else None
    _, y = simulate(plant, x0, u)
    out = _out_dir(args)
    write_signal_csv(out / "u.csv", u)
    write_signal_csv(out / "y.csv", y)
    _dump({"steps": len(u), "u": str(out / "u.csv"), "y": str(out / "y.csv")})
    return 0


def _write_compare(path: Path, u_true: Signal, u_est: Signal) -> float | None:
    """Plot-ready ``k, true..., estimated...`` rows over the common time span."""
    lo, hi = max(u_true.start, u_est.start), min(u_true.stop, u_est.stop)
    if hi <= lo:
        return None
    t = u_true.segment(lo, hi - 1).values
    e = u_est.segment(lo, hi - 1).values
    m = t.shape[1]
    with path.open("w") as fh:
        fh.write(",".join(["k"] + [f"u{i}" for i in range(m)] + [f"u_hat{i}" for i in range(m)]) + "\n")
        for k, a, b in zip(range(lo, hi), t, e):
            fh.write(",".join([str(k)] + [repr(float(v)) for v in (*a, *b)]) + "\n")
    return float(np.max(np.abs(t - e)))


def cmd_estimate(args) -> int:
    bank = _load_bank(args)
    y = read_signal_csv(args.y)
    init_u = read_signal_csv(args.init_u) if args.init_u else None
    init_y = read_signal_csv(args.init_y) if args.init_y else None
    out = _out_dir(args)
    if args.mode == "batch":
        blocks, residuals = [], []
        for _, block, res in iter_algorithm1(bank, y, init_u, init_y):
            blocks.append(block)
            residuals.append(res)
        values = np.vstack(blocks) if blocks else np.zeros((0, bank.m))
        u_hat = Signal(values, y.start)
        # Indexed by the time of the input it estimates.
        estimate = u_hat
    else:
        if bank.T_f != 1:
            bank = bank.rebuild(T_f=1)
        u_hat, residuals = run_algorithm2(bank, y, init_u, init_y)
        estimate = Signal(u_hat.values, u_hat.start - bank.L)
    write_signal_csv(out / "u_hat.csv", u_hat)
    summary = {
        "mode": args.mode,
        "T_p": bank.T_p,
        "T_f": bank.T_f,
        "delay_L": bank.L,
        "steps": len(u_hat),
        "residual_max": float(np.max(residuals)) if len(residuals) else 0.0,
        "feedback_radius": feedback_radius(bank),
    }
    if args.u_true:
        summary["max_error"] = _write_compare(out / "compare.csv", read_signal_csv(args.u_true), estimate)
    _dump(summary, out / "summary.json")
    return 0


def cmd_dob(args) -> int:
    plant = load_plant(args.plant)
    bank = _load_bank(args)
    u0 = read_signal_csv(args.u0)
    d = read_signal_csv(args.d)
    run = run_dob(plant, bank, u0, d)
    out = _out_dir(args)
    y_free = disturbance_free_output(run)
    for name in ("y", "u", "u_hat", "d_hat", "delta"):
        write_signal_csv(out / f"{name}.csv", getattr(run, name))
    write_signal_csv(out / "y_free.csv", y_free)
    settle = min(len(u0), run.startup + args.transient)
    deviation = np.abs(run.y.values[settle:] - y_free.values[settle:])
    manifest = {
        "steps": len(u0),
        "T_p": run.T_p,
        "delay_L": run.L,
        "startup": run.startup,
        "transfer_defect": verify_transfer_relation(run),
        "residual_max": float(np.max(run.residuals[run.startup :], initial=0.0)),
        "transient": args.transient,
        "max_deviation_from_free_after_transient": float(deviation.max()) if deviation.size else 0.0,
        "signals": ["y.csv", "u.csv", "u_hat.csv", "d_hat.csv", "delta.csv", "y_free.csv"],
    }
    _dump(manifest, out / "manifest.json")
    return 0


def cmd_track(args) -> int:
    bank = _load_bank(args)
    u_past = read_signal_csv(args.u_past)
    y_past = read_signal_csv(args.y_past)
    y_star = read_signal_csv(args.y_star)
    if args.bounds:
        bounds = json.loads(Path(args.bounds).read_text())
        lower = [float(v) for v in bounds["lower"]]
        upper = [float(v) for v in bounds["upper"]]
    else:
        lower, upper = [-np.inf] * bank.m, [np.inf] * bank.m
    problem = TrackingProblem(
        bank, u_past.values, y_past.values, y_star.values, lower, upper
    )
    result = track(problem, SolverConfig(max_iter=args.max_iter))
    out = _out_dir(args)
    write_signal_csv(out / "u.csv", Signal(result.u.reshape(bank.T_f, bank.m), y_star.start))
    _dump(
        {
            "objective": result.objective,
            "iterations": result.iterations,
            "polished": result.polished,
            "equality_residual": result.equality_residual,
            "box_violation": result.box_violation,
        },
        out / "result.json",
    )
    return 0


def cmd_reproduce(args) -> int:
    """Run the built-in example experiments end to end and report their errors."""
    from .experiments import run_experiment

    report = run_experiment(args.experiment, seed=args.seed)
    if args.out:
        out = _out_dir(args)
        _dump(report, out / f"{args.experiment}.json")
    else:
        _dump(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="behinv",
        description="Input estimation and disturbance observation from input/output data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({_kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="invertibility, inherent delay and PE requirements of a plant")
    p.add_argument("--plant", required=True)
    p.add_argument("--tp", type=int)
    p.add_argument("--tf", type=int)
    p.add_argument("--delay", type=int)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("collect", help="excite a plant and store the data bank")
    p.add_argument("--plant", required=True)
    p.add_argument("--length", type=int, required=True, help="T, the excited data length")
    p.add_argument("--tp", type=int, help="default: observability index")
    p.add_argument("--tf", type=int, default=1)
    p.add_argument("--delay", type=int, help="default: inherent delay")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("simulate", help="simulate a plant (writes u.csv and y.csv)")
    p.add_argument("--plant", required=True)
    p.add_argument("--u", help="input CSV; otherwise a seeded staircase input is generated")
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hold", type=int, default=5)
    p.add_argument("--rest", type=int, default=0, help="leading zero samples")
    p.add_argument("--x0", help="initial state as a JSON list")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="recover the input from an output record")
    p.add_argument("--bank", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--mode", choices=("batch", "realtime"), default="batch")
    p.add_argument("--init-u")
    p.add_argument("--init-y")
    p.add_argument("--u-true", help="true input CSV; adds max_error and compare.csv")
    p.add_argument("--tp", type=int)
    p.add_argument("--tf", type=int)
    p.add_argument("--delay", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("dob", help="closed loop with the data-driven disturbance observer")
    p.add_argument("--plant", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--u0", required=True)
    p.add_argument("--d", required=True)
    p.add_argument("--tp", type=int)
    p.add_argument("--delay", type=int)
    p.add_argument("--transient", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dob)

    p = sub.add_parser("track", help="box-constrained input for a desired output")
    p.add_argument("--bank", required=True)
    p.add_argument("--u-past", required=True)
    p.add_argument("--y-past", required=True)
    p.add_argument("--y-star", required=True)
    p.add_argument("--bounds", help='JSON file {"lower": [...], "upper": [...]}')
    p.add_argument("--tp", type=int)
    p.add_argument("--tf", type=int)
    p.add_argument("--delay", type=int)
    p.add_argument("--max-iter", type=int, default=50_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("reproduce", help="run a built-in experiment")
    p.add_argument("experiment", choices=("example1", "example2", "example3", "example4"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PreconditionError, FileNotFoundError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION
    except ValueError as exc:
        # e.g. a malformed BEHINV_RANK_TOL or CSV
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION
    except BehinvError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
