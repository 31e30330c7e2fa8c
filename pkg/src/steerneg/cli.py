"""Command-line entry point: ``steerneg <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .fock import DensityMatrix, populations_from_radial_wigner
from .gaussian import (
    ChannelParams,
    NoThresholdError,
    SqueezingSpec,
    cm_from_squeezing,
    purities,
    steerability_b_to_a,
    steering_threshold_eta_b,
)
from .metrology import metrological_power
from .runs import (
    RunConfig,
    atomic_write,
    fmt,
    heralded_params,
    run_experiment_pipeline,
    run_sweep,
    verify_sweep_csv,
    xi_from_rates,
)
from .sampling import HomodyneData, default_phases, sample_gaussian_two_mode, sample_homodyne_subtracted
from .tomography import mle_reconstruct
from .wigner import negativity_report, wigner_grid, write_wigner_csv


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    over = {
        "v_plus": args.v_plus,
        "v_minus": args.v_minus,
        "xi": args.xi,
        "seed": args.seed,
        "samples": args.samples,
        "output": args.out,
        "n_max": args.n_max,
        "detection_efficiency": args.detection_efficiency,
        "workers": args.workers,
    }
    if args.db_plus is not None or args.db_minus is not None:
        spec = SqueezingSpec.from_db(args.db_plus, args.db_minus)
        over["v_plus"], over["v_minus"] = spec.v_plus, spec.v_minus
    if args.r_dark is not None:
        over["xi"] = xi_from_rates(args.r_dark, args.r_total)
    if args.eta_a is not None:
        over["eta_a"] = args.eta_a
    if args.eta_b is not None:
        over["eta_b"] = args.eta_b
    return cfg.with_overrides(**over)


def _point(cfg: RunConfig):
    return cm_from_squeezing(cfg.squeezing, ChannelParams(cfg.eta_a[0], cfg.eta_b[0]))


def cmd_state(cfg, args):
    cm = _point(cfg)
    pur = purities(cm)
    print(cm.to_text(), end="")
    print(f"mu_a = {fmt(pur.mu_a)}\nmu_b = {fmt(pur.mu_b)}\nmu_ab = {fmt(pur.mu_ab)}")
    return 0


def cmd_steer(cfg, args):
    print(f"G = {fmt(steerability_b_to_a(_point(cfg)))}")
    for label, xi in (("eta_b_steering", 1.0), ("eta_b_negativity", cfg.xi)):
        try:
            print(f"{label} = {fmt(steering_threshold_eta_b(cfg.squeezing, xi))}")
        except NoThresholdError as exc:
            print(f"{label} = none ({exc})")
    return 0


def cmd_negativity(cfg, args):
    params = heralded_params(cfg.squeezing, cfg.eta_a[0], cfg.eta_b[0], cfg.xi)
    print(negativity_report(params).to_text(), end="")
    return 0


def cmd_wigner_grid(cfg, args):
    params = heralded_params(cfg.squeezing, cfg.eta_a[0], cfg.eta_b[0], cfg.xi)
    axis, w = wigner_grid(params, args.half_width, args.points)
    path = cfg.output_dir / "wigner.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_wigner_csv(path, axis, w, header="source=theory")
    print(path)
    return 0


def cmd_sample(cfg, args):
    out = cfg.output_dir
    if args.gaussian:
        s = sample_gaussian_two_mode(_point(cfg), cfg.samples, cfg.seed)
        text = "x_a,p_a,x_b,p_b\n" + "".join(",".join(fmt(v) for v in row) + "\n" for row in s)
        atomic_write(out / "gaussian.csv", text)
        print(out / "gaussian.csv")
        return 0
    params = heralded_params(cfg.squeezing, cfg.eta_a[0], cfg.eta_b[0], cfg.xi)
    data = sample_homodyne_subtracted(params, cfg.samples, cfg.seed, default_phases(cfg.phases))
    atomic_write(out / "dataset.csv", data.to_csv())
    atomic_write(out / "dataset.csv.meta.json", json.dumps(data.metadata, indent=2, sort_keys=True) + "\n")
    print(out / "dataset.csv")
    return 0


def cmd_tomo(cfg, args):
    data = HomodyneData.load(args.data)
    res = mle_reconstruct(data, cfg.mle_options)
    atomic_write(cfg.output_dir / "rho.txt", res.rho.to_text())
    print(res.report(), end="")
    return 0 if res.converged else 1


def cmd_qfi(cfg, args):
    if args.rho:
        rho = DensityMatrix.from_text(Path(args.rho).read_text())
    else:
        params = heralded_params(cfg.squeezing, cfg.eta_a[0], cfg.eta_b[0], cfg.xi)
        rho = populations_from_radial_wigner(params, cfg.n_max).to_density()
    print(metrological_power(rho).to_text(), end="")
    return 0


def cmd_sweep(cfg, args):
    rows = run_sweep(cfg)
    bad = verify_sweep_csv((cfg.output_dir / "sweep.csv").read_text())
    print(f"{len(rows)} rows -> {cfg.output_dir / 'sweep.csv'}; {len(bad)} inconsistent")
    return 0 if not bad else 1


def cmd_pipeline(cfg, args):
    res = run_experiment_pipeline(cfg)
    print(res.report.to_text(), end="")
    return 0


def cmd_verify(cfg, args):
    path = Path(args.csv) if args.csv else cfg.output_dir / "sweep.csv"
    bad = verify_sweep_csv(path.read_text())
    for idx, problems in sorted(bad.items()):
        print(f"row {idx}: {'; '.join(problems)}")
    print("PASS" if not bad else f"FAIL ({len(bad)} rows)")
    return 0 if not bad else 1


COMMANDS = {
    "state": cmd_state,
    "steer": cmd_steer,
    "negativity": cmd_negativity,
    "wigner-grid": cmd_wigner_grid,
    "sample": cmd_sample,
    "tomo": cmd_tomo,
    "qfi": cmd_qfi,
    "sweep": cmd_sweep,
    "pipeline": cmd_pipeline,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style run configuration")
    common.add_argument("--v-plus", type=float)
    common.add_argument("--v-minus", type=float)
    common.add_argument("--db-plus", type=float, help="correlated variance in dB (e.g. -1.302)")
    common.add_argument("--db-minus", type=float, help="anti-correlated variance in dB")
    common.add_argument("--eta-a", type=float, nargs="+")
    common.add_argument("--eta-b", type=float, nargs="+")
    common.add_argument("--xi", type=float)
    common.add_argument("--r-dark", type=float, help="dark-count rate; sets xi with --r-total")
    common.add_argument("--r-total", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--n-max", type=int)
    common.add_argument("--detection-efficiency", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output directory (default $STEERNEG_OUT or ./steerneg-out)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="steerneg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "wigner-grid":
            p.add_argument("--half-width", type=float, default=4.0)
            p.add_argument("--points", type=int, default=81)
        elif name == "sample":
            p.add_argument("--gaussian", action="store_true", help="two-mode Gaussian samples instead")
        elif name == "tomo":
            p.add_argument("--data", required=True, help="homodyne CSV (phase,value)")
        elif name == "qfi":
            p.add_argument("--rho", help="density-matrix text file; default is the theory state")
        elif name == "verify":
            p.add_argument("--csv", help="sweep CSV to check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except (ValueError, OSError) as exc:
        print(f"steerneg {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
