"""Command-line runner: ``leakybox {evolve,verify,sweep} --config PATH --out DIR``.

Exit codes: 0 success, 1 configuration error, 2 numerical precondition
violation, 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from leakybox.config import RunConfig
from leakybox.dynamics import evolve
from leakybox.errors import ConfigError, PreconditionError
from leakybox.report import dump_json, record_csv, rows_csv, run_summary
from leakybox.ssr import TwoBoxConfig
from leakybox.verify import run_checks, verify_settings

log = logging.getLogger("leakybox")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

SWEEP_METRICS = (
    "final_mean_N",
    "final_var_N",
    "final_fano",
    "final_purity",
    "final_fidelity_csib",
    "purity_min",
    "fitted_decay_rate",
    "mean_decay_max_rel",
    "fano_relaxation_max_abs",
)


def run_config(cfg: RunConfig):
    rho0 = cfg.initial_state()
    record = evolve(rho0, cfg.evolution(rho0))
    return record, run_summary(record, cfg.data)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_evolve(args) -> int:
    cfg = RunConfig.from_file(args.config)
    out = Path(args.out)
    files = cfg.output()
    record, summary = run_config(cfg)
    csv_path = out / files["csv"]
    _write(csv_path, record_csv(record))
    _write(out / files["summary"], dump_json(summary))
    if args.plot or files["plots"]:
        from leakybox.plots import plot_run

        plot_run(record, csv_path.with_suffix(".png"))
    log.info("wrote %s (%d rows), final purity %.6f", csv_path, len(record), summary["final_purity"])
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.from_dict({})
    settings, tolerances = verify_settings(cfg)
    ssr_cfg = cfg.ssr() if "ssr" in cfg.data else TwoBoxConfig()
    checks = run_checks(settings, tolerances, ssr_cfg)
    all_pass = all(c["pass"] for c in checks)
    _write(Path(args.out) / "verify.json", dump_json({"checks": checks, "all_pass": all_pass}))
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']:<30s} residual={c['residual']:.3e}  "
              f"tolerance={c['tolerance']:.1e}")
    return EXIT_OK if all_pass else EXIT_CHECK


def _grid_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _sweep_point(data: dict, point: tuple) -> dict:
    cfg = RunConfig.from_dict(data)
    for key, value in point:
        cfg = cfg.with_override(key, _grid_value(value))
    _, summary = run_config(cfg)
    final = summary["final"]
    row = {key: value for key, value in point}
    row.update({
        "final_mean_N": final["mean_N"],
        "final_var_N": final["var_N"],
        "final_fano": final["fano"],
        "final_purity": final["purity"],
        "final_fidelity_csib": final["fidelity_csib"],
        "purity_min": summary["purity_min"],
        "fitted_decay_rate": summary["fitted_decay_rate"],
        "mean_decay_max_rel": summary["residuals"]["mean_decay_max_rel"],
        "fano_relaxation_max_abs": summary["residuals"]["fano_relaxation_max_abs"],
    })
    return row


def sweep_points(cfg: RunConfig) -> tuple:
    grid = cfg.grid()
    keys = list(grid)
    if not keys or any(not v for v in grid.values()):
        return keys, []
    points = [tuple(zip(keys, combo)) for combo in itertools.product(*(sorted(grid[k]) for k in keys))]
    if len(points) > cfg.max_runs():
        raise cfg.error(f"grid has {len(points)} points, above max_runs = {cfg.max_runs()}", "sweep",
                        "max_runs")
    return keys, points


def cmd_sweep(args) -> int:
    cfg = RunConfig.from_file(args.config)
    keys, points = sweep_points(cfg)
    base = {s: kv for s, kv in cfg.data.items() if s not in ("grid", "sweep")}
    if points and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, [base] * len(points), points))
    else:
        rows = [_sweep_point(base, p) for p in points]
    header = keys + list(SWEEP_METRICS)
    path = Path(args.out) / "sweep.csv"
    _write(path, rows_csv(header, rows))
    if rows and (args.plot or cfg.output()["plots"]):
        from leakybox.plots import plot_sweep

        plot_sweep(rows, keys, path.with_suffix(".png"))
    log.info("wrote %s (%d rows)", path, len(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakybox", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run one evolution, write CSV time series and JSON summary")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the CSV")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="run the named verification checks, write verify.json")
    p.add_argument("--config")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter grid, write one summary row per point")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the CSV")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"numerical precondition violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
