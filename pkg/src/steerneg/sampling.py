"""Seeded Monte-Carlo quadrature data.

All randomness comes from ``numpy.random.Philox`` (Philox4x64-10, a counter-based
64-bit generator) wrapped in ``numpy.random.Generator``; the same seed and
call sequence yield the same stream on every platform numpy supports.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import TwoModeCovariance
from .wigner import SubtractedStateParams, marginal_pdf

GENERATOR_NAME = "numpy.random.Philox/Philox4x64-10"
DEFAULT_PHASE_COUNT = 12
ENVELOPE_VARIANCE_FACTOR = 1.2
_BATCH = 8192


class EnvelopeViolation(RuntimeError):
    """A candidate density exceeded the rejection envelope."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def default_phases(count: int = DEFAULT_PHASE_COUNT) -> np.ndarray:
    return np.arange(count) * (math.pi / count)


@dataclass(frozen=True)
class QuadratureRecord:
    phase: float
    value: float


@dataclass(frozen=True)
class TwoModeSample:
    x_a: float
    p_a: float
    x_b: float
    p_b: float


@dataclass
class HomodyneData:
    """Columnar store of homodyne records with a metadata sidecar."""

    phases: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        for th, x in zip(self.phases, self.values):
            yield QuadratureRecord(float(th), float(x))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("phase,value\n")
        for th, x in zip(self.phases, self.values):
            buf.write(f"{th:.12g},{x:.12g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metadata: dict | None = None) -> "HomodyneData":
        rows = list(csv.DictReader(io.StringIO(text)))
        phases = np.array([float(r["phase"]) for r in rows])
        values = np.array([float(r["value"]) for r in rows])
        return cls(phases, values, dict(metadata or {}))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())
        with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "HomodyneData":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        try:
            with open(f"{path}.meta.json", encoding="utf-8") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            meta = {}
        return cls.from_csv(text, meta)


def sample_gaussian_two_mode(cm: TwoModeCovariance, count: int, seed: int) -> np.ndarray:
    """Joint zero-mean samples, columns ``(x_A, p_A, x_B, p_B)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    cm.check_physical()
    chol = np.linalg.cholesky(cm.matrix)
    z = make_rng(seed).standard_normal((count, 4))
    return z @ chol.T


class MarginalSampler:
    """Rejection sampler for the heralded-state quadrature density.

    Proposal: N(0, v*m) with ``v = variance_factor``. The density is
    ``exp(-x^2/2m)(alpha x^2 + beta)``, so the ratio to the proposal is
    ``exp(-lambda y)(alpha y + beta)`` in ``y = x^2`` and its maximum is
    available in closed form.
    """

    def __init__(self, params: SubtractedStateParams, variance_factor: float = ENVELOPE_VARIANCE_FACTOR):
        if variance_factor <= 1:
            raise ValueError("envelope variance factor must exceed 1")
        self.params = params
        self.variance_factor = variance_factor
        m = params.m
        self.envelope_std = math.sqrt(variance_factor * m)
        prof = params.radial_profile()
        root = math.sqrt(2 * math.pi * m)
        alpha = root * prof.quadratic
        beta = root * (prof.quadratic * m + prof.constant)
        if beta < -1e-15:
            raise EnvelopeViolation(f"marginal density negative at origin ({beta:.3g})")
        lam = (1 - 1 / variance_factor) / (2 * m)
        y_star = 1 / lam - beta / alpha if alpha > 0 else -1.0
        peak = alpha * math.exp(-lam * y_star) / lam if y_star > 0 else beta
        self.constant = math.sqrt(2 * math.pi * variance_factor * m) * peak
        self._check_envelope()

    @property
    def acceptance_rate(self) -> float:
        return 1.0 / self.constant

    def envelope(self, x):
        s = self.envelope_std
        return self.constant * np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))

    def _check_envelope(self):
        x = np.linspace(-12, 12, 4801) * math.sqrt(self.params.m)
        if np.any(marginal_pdf(self.params, x) > self.envelope(x) * (1 + 1e-12)):
            raise EnvelopeViolation("envelope constant does not bound the density")

    def draw(self, count: int, rng: np.random.Generator):
        out = np.empty(count)
        filled = 0
        proposed = 0
        while filled < count:
            cand = rng.standard_normal(_BATCH) * self.envelope_std
            u = rng.random(_BATCH)
            target = marginal_pdf(self.params, cand)
            env = self.envelope(cand)
            if np.any(target > env * (1 + 1e-12)):
                raise EnvelopeViolation("candidate density above envelope")
            acc = cand[u * env < target]
            take = min(len(acc), count - filled)
            out[filled : filled + take] = acc[:take]
            filled += take
            proposed += _BATCH
        return out, proposed


def sample_homodyne_subtracted(
    params: SubtractedStateParams,
    count: int,
    seed: int,
    phases=None,
    variance_factor: float = ENVELOPE_VARIANCE_FACTOR,
) -> HomodyneData:
    """Homodyne records of the heralded state; phases assigned round-robin."""
    if count < 1:
        raise ValueError("count must be >= 1")
    phases = default_phases() if phases is None else np.asarray(phases, dtype=float)
    sampler = MarginalSampler(params, variance_factor)
    values, _ = sampler.draw(count, make_rng(seed))
    meta = {
        "generator": GENERATOR_NAME,
        "seed": seed,
        "count": count,
        "params": {"n": params.n, "m": params.m, "c1": params.c1, "c2": params.c2, "xi": params.xi},
        "phases": [float(p) for p in phases],
        "envelope_variance_factor": variance_factor,
    }
    return HomodyneData(phases[np.arange(count) % len(phases)], values, meta)
