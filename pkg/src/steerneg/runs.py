"""Run configuration, parameter sweeps and the end-to-end heralding pipeline."""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .fock import fidelity, negativity_of_density, populations_from_radial_wigner, wigner_from_density
from .gaussian import ChannelParams, SqueezingSpec, cm_from_squeezing, purities, steerability_b_to_a
from .metrology import metrological_power
from .sampling import default_phases, sample_homodyne_subtracted
from .tomography import MleOptions, mle_reconstruct
from .wigner import SubtractedStateParams, negativity_closed_form, negativity_numeric

log = logging.getLogger(__name__)

CSV_SCHEMA = "steerneg-sweep/1"
OUTPUT_ENV = "STEERNEG_OUT"
SWEEP_COLUMNS = (
    "index", "v_plus", "v_minus", "eta_a", "eta_b", "xi", "G",
    "N_closed", "N_numeric", "mu_a", "mu_b", "mu_ab", "M", "status",
)
CONSISTENCY_TOL = 1e-6
POSITIVE_TOL = 1e-9


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.12g}"


def xi_from_rates(r_dark: float, r_total: float) -> float:
    if r_total <= 0 or r_dark < 0:
        raise ValueError("rates must satisfy r_total > 0 and r_dark >= 0")
    xi = 1.0 - r_dark / r_total
    if not 0 < xi <= 1:
        raise ValueError(f"xi = 1 - R_d/R_t = {xi} falls outside (0, 1]")
    return xi


def parse_grid(text: str) -> list[float]:
    """``"0.9"``, ``"0.3, 0.6, 0.9"`` or an inclusive range ``"0.5:1.0:0.01"``."""
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(t) for t in text.replace(",", " ").split()]


@dataclass
class RunConfig:
    v_plus: float = 0.74
    v_minus: float = 1.38
    eta_a: list = field(default_factory=lambda: [0.9])
    eta_b: list = field(default_factory=lambda: [0.9])
    xi: float = 1.0
    samples: int = 30000
    seed: int = 0
    phases: int = 12
    n_max: int = 15
    max_iterations: int = 2000
    tolerance: float = 1e-9
    detection_efficiency: float | None = None
    metrology: bool = True
    workers: int = 1
    output: str = ""

    def __post_init__(self):
        self.squeezing  # validates V+-
        grids = list(self.eta_a) + list(self.eta_b)
        if not grids or any(not 0 < e <= 1 for e in grids):
            raise ValueError("efficiency grids must be non-empty and lie in (0, 1]")
        if not 0 < self.xi <= 1:
            raise ValueError(f"xi must lie in (0, 1], got {self.xi}")
        if self.samples < 1 or self.phases < 1:
            raise ValueError("sample and phase counts must be >= 1")

    @property
    def squeezing(self) -> SqueezingSpec:
        return SqueezingSpec(self.v_plus, self.v_minus)

    @property
    def mle_options(self) -> MleOptions:
        return MleOptions(self.n_max, self.max_iterations, self.tolerance, self.detection_efficiency)

    @property
    def output_dir(self) -> Path:
        return Path(self.output or os.environ.get(OUTPUT_ENV, "steerneg-out"))

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_overrides(self, **kw) -> "RunConfig":
        d = asdict(self)
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig(**d)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        return cls.from_parser(parser)

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.read_string(text)
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        kw: dict = {}
        if cp.has_section("squeezing"):
            sq = cp["squeezing"]
            if "db_plus" in sq or "db_minus" in sq:
                spec = SqueezingSpec.from_db(sq.getfloat("db_plus"), sq.getfloat("db_minus"))
                kw["v_plus"], kw["v_minus"] = spec.v_plus, spec.v_minus
            else:
                kw["v_plus"] = sq.getfloat("v_plus", cls.v_plus)
                kw["v_minus"] = sq.getfloat("v_minus", cls.v_minus)
        if cp.has_section("channel"):
            ch = cp["channel"]
            for key in ("eta_a", "eta_b"):
                if key in ch:
                    kw[key] = parse_grid(ch[key])
        if cp.has_section("darkcounts"):
            dc = cp["darkcounts"]
            if "xi" in dc:
                kw["xi"] = dc.getfloat("xi")
            elif "r_dark" in dc:
                kw["xi"] = xi_from_rates(dc.getfloat("r_dark"), dc.getfloat("r_total"))
        if cp.has_section("sampling"):
            sm = cp["sampling"]
            for key in ("samples", "seed", "phases"):
                if key in sm:
                    kw[key] = sm.getint(key)
        if cp.has_section("tomography"):
            tm = cp["tomography"]
            if "n_max" in tm:
                kw["n_max"] = tm.getint("n_max")
            if "max_iterations" in tm:
                kw["max_iterations"] = tm.getint("max_iterations")
            if "tolerance" in tm:
                kw["tolerance"] = tm.getfloat("tolerance")
            if tm.get("detection_efficiency", "").strip():
                kw["detection_efficiency"] = tm.getfloat("detection_efficiency")
        if cp.has_section("run"):
            rn = cp["run"]
            if "metrology" in rn:
                kw["metrology"] = rn.getboolean("metrology")
            if "workers" in rn:
                kw["workers"] = rn.getint("workers")
            if "output" in rn:
                kw["output"] = rn["output"]
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in kw.items() if k in known})


@dataclass(frozen=True)
class SweepResult:
    index: int
    v_plus: float
    v_minus: float
    eta_a: float
    eta_b: float
    xi: float
    G: float
    N_closed: float
    N_numeric: float
    mu_a: float
    mu_b: float
    mu_ab: float
    M: float
    status: str = "ok"

    def csv_row(self) -> str:
        return ",".join(fmt(getattr(self, c)) for c in SWEEP_COLUMNS)


def heralded_params(spec: SqueezingSpec, eta_a: float, eta_b: float, xi: float) -> SubtractedStateParams:
    return SubtractedStateParams.from_cm(cm_from_squeezing(spec, ChannelParams(eta_a, eta_b)), xi)


def sweep_point(index: int, spec: SqueezingSpec, eta_a: float, eta_b: float, xi: float,
                n_max: int = 15, metrology: bool = True) -> SweepResult:
    nan = math.nan
    try:
        cm = cm_from_squeezing(spec, ChannelParams(eta_a, eta_b))
        params = SubtractedStateParams.from_cm(cm, xi)
        pur = purities(cm)
        m_power = nan
        if metrology:
            rho = populations_from_radial_wigner(params, n_max).to_density()
            m_power = metrological_power(rho).metrological_power
        return SweepResult(
            index, spec.v_plus, spec.v_minus, eta_a, eta_b, xi,
            steerability_b_to_a(cm), negativity_closed_form(params), negativity_numeric(params),
            pur.mu_a, pur.mu_b, pur.mu_ab, m_power,
        )
    except Exception as exc:  # row-level failure is reported, the sweep continues
        log.warning("grid point %d failed: %s", index, exc)
        msg = f"error: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return SweepResult(index, spec.v_plus, spec.v_minus, eta_a, eta_b, xi,
                           nan, nan, nan, nan, nan, nan, nan, msg)


def _sweep_task(args):
    return sweep_point(*args)


def sweep_rows(config: RunConfig) -> list[SweepResult]:
    spec = config.squeezing
    tasks = [
        (i, spec, ea, eb, config.xi, config.n_max, config.metrology)
        for i, (ea, eb) in enumerate((ea, eb) for ea in config.eta_a for eb in config.eta_b)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]


def sweep_csv(rows) -> str:
    return ",".join(SWEEP_COLUMNS) + "\n" + "".join(r.csv_row() + "\n" for r in rows)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest(config: RunConfig, kind: str, **extra) -> dict:
    return {
        "kind": kind,
        "schema": CSV_SCHEMA,
        "library_version": __version__,
        "config_sha256": config.digest(),
        "config": config.canonical(),
        "seeds": [config.seed],
        **extra,
    }


def run_sweep(config: RunConfig, out_dir=None) -> list[SweepResult]:
    """Evaluate every (eta_A, eta_B) grid point; writes sweep.csv and manifest.json."""
    out = Path(out_dir) if out_dir else config.output_dir
    rows = sweep_rows(config)
    atomic_write(out / "sweep.csv", sweep_csv(rows))
    failed = [r.index for r in rows if r.status != "ok"]
    atomic_write(
        out / "manifest.json",
        json.dumps(manifest(config, "sweep", rows=len(rows), failed_rows=failed), indent=2, sort_keys=True) + "\n",
    )
    return rows


def check_row(row: dict) -> list[str]:
    """Cross-column consistency problems of one sweep CSV row (empty if fine)."""
    if row["status"] != "ok":
        return [row["status"]]
    problems = []
    nc, nn, g, xi = (float(row[k]) for k in ("N_closed", "N_numeric", "G", "xi"))
    if not abs(nc - nn) < CONSISTENCY_TOL:
        problems.append(f"N_closed={nc} and N_numeric={nn} differ")
    if xi == 1 and nc > POSITIVE_TOL and not g > POSITIVE_TOL:
        problems.append(f"negativity {nc} without steerability")
    return problems


def verify_sweep_csv(text: str) -> dict[int, list[str]]:
    import csv
    import io

    bad = {}
    for row in csv.DictReader(io.StringIO(text)):
        problems = check_row(row)
        if problems:
            bad[int(row["index"])] = problems
    return bad


@dataclass
class PipelineReport:
    v_plus: float
    v_minus: float
    eta_a: float
    eta_b: float
    xi: float
    samples: int
    seed: int
    n_max: int
    detection_efficiency: float | None
    fidelity: float
    negativity_theory: float
    negativity_reconstructed: float
    wigner_origin_theory: float
    wigner_origin_reconstructed: float
    metrological_power: float
    mle_iterations: int
    mle_converged: bool
    log_likelihood: float
    trace_deficit: float

    def to_text(self) -> str:
        return "".join(f"{k} = {fmt(v) if not isinstance(v, (bool, type(None))) else str(v).lower()}\n"
                       for k, v in asdict(self).items())


@dataclass
class PipelineResult:
    report: PipelineReport
    data: object
    mle: object
    theory: object


def run_experiment_pipeline(config: RunConfig, out_dir=None, write: bool = True) -> PipelineResult:
    """Herald, measure, reconstruct and characterise Bob's state at one grid point.

    Uses the first entries of the eta_A / eta_B grids. With a detection
    efficiency set, data are generated behind that extra loss and the
    reconstruction uses loss-smeared measurement operators to undo it.
    """
    eta_a, eta_b = config.eta_a[0], config.eta_b[0]
    spec = config.squeezing
    params = heralded_params(spec, eta_a, eta_b, config.xi)
    det = config.detection_efficiency
    measured = params if not det or det == 1 else heralded_params(spec, eta_a, eta_b * det, config.xi)
    phases = default_phases(config.phases)
    data = sample_homodyne_subtracted(measured, config.samples, config.seed, phases)
    mle = mle_reconstruct(data, config.mle_options)
    theory = populations_from_radial_wigner(params, config.n_max).to_density()
    report = PipelineReport(
        spec.v_plus, spec.v_minus, eta_a, eta_b, config.xi, config.samples, config.seed,
        config.n_max, det,
        fidelity=fidelity(mle.rho, theory),
        negativity_theory=negativity_closed_form(params),
        negativity_reconstructed=negativity_of_density(mle.rho),
        wigner_origin_theory=wigner_from_density(theory, 0.0, 0.0),
        wigner_origin_reconstructed=wigner_from_density(mle.rho, 0.0, 0.0),
        metrological_power=metrological_power(mle.rho).metrological_power,
        mle_iterations=mle.iterations,
        mle_converged=mle.converged,
        log_likelihood=mle.log_likelihood,
        trace_deficit=mle.rho.trace_deficit,
    )
    if write:
        out = Path(out_dir) if out_dir else config.output_dir
        atomic_write(out / "dataset.csv", data.to_csv())
        atomic_write(out / "dataset.csv.meta.json", json.dumps(data.metadata, indent=2, sort_keys=True) + "\n")
        atomic_write(out / "rho.txt", mle.rho.to_text())
        atomic_write(out / "report.txt", report.to_text() + mle.report())
        axis = np.linspace(-4, 4, 81)
        xx, pp = np.meshgrid(axis, axis, indexing="ij")
        w = wigner_from_density(mle.rho, xx, pp)
        lines = [f"# grid points={len(axis)} x_min={axis[0]:.12g} x_max={axis[-1]:.12g} source=reconstruction",
                 "x,p,w"]
        lines += [f"{fmt(x)},{fmt(p)},{fmt(v)}" for x, p, v in zip(xx.ravel(), pp.ravel(), w.ravel())]
        atomic_write(out / "wigner.csv", "\n".join(lines) + "\n")
        atomic_write(out / "manifest.json",
                     json.dumps(manifest(config, "pipeline"), indent=2, sort_keys=True) + "\n")
    return PipelineResult(report, data, mle, theory)
