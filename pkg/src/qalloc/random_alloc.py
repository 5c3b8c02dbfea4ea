"""Monte Carlo random-allocation baseline.

Each draw splits every decile's input totals across its pseudo-DMUs in
proportion to i.i.d. Uniform[0, 1] weights (one weight vector per input),
evaluates the decile frontier at the resulting plans, and records the
industry total. Substreams are derived per (draw, decile) from the master
seed so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import _normalize_frontiers, _normalize_totals
from .errors import ConfigError, ValidationError
from .cqr import evaluate_frontier

PER_DECILE_OBSERVED = "per_decile_observed"
GLOBAL_PER_DECILE = "global_per_decile"  # literal reading: every decile splits X


@dataclass(frozen=True)
class RandomAllocationConfig:
    draws: int = 1000
    seed: int = 0
    totals_interpretation: str = PER_DECILE_OBSERVED
    pseudo_dmus_per_decile: int = 1
    keep_samples: bool = True

    def __post_init__(self):
        if self.draws < 1:
            raise ValidationError("need at least one draw")
        if self.pseudo_dmus_per_decile < 1:
            raise ValidationError("need at least one pseudo-DMU per decile")
        if self.totals_interpretation not in (PER_DECILE_OBSERVED,
                                              GLOBAL_PER_DECILE):
            raise ConfigError(
                f"unknown totals interpretation "
                f"{self.totals_interpretation!r}")


@dataclass(frozen=True)
class RandomAllocationSummary:
    mean_output: float
    median_output: float
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.samples is not None and len(self.samples):
            s = np.asarray(self.samples, dtype=float)
            if not (s.min() - 1e-9 <= self.median_output <= s.max() + 1e-9):
                raise ValidationError("median outside the sample range")
            if not (s.min() - 1e-9 <= self.mean_output <= s.max() + 1e-9):
                raise ValidationError("mean outside the sample range")


def _weights(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Uniform weights per input dimension; all-zero vectors are redrawn."""
    w = rng.uniform(0.0, 1.0, size=(d, n))
    while np.any(w.sum(axis=1) == 0.0):  # probability zero, guarded anyway
        w = rng.uniform(0.0, 1.0, size=(d, n))
    return w


def simulate(frontiers, totals, config: RandomAllocationConfig) -> RandomAllocationSummary:
    fronts = _normalize_frontiers(frontiers)
    K = len(fronts)
    d = fronts[0].input_dim
    n = config.pseudo_dmus_per_decile
    X, Xper = _normalize_totals(totals, K, d)
    if config.totals_interpretation == PER_DECILE_OBSERVED:
        if Xper is None:
            raise ConfigError(
                "per_decile_observed interpretation needs per-decile totals")
        decile_totals = Xper
    else:
        decile_totals = np.tile(X, (K, 1))

    samples = np.empty(config.draws)
    for draw in range(config.draws):
        total = 0.0
        for t, f in enumerate(fronts):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=config.seed,
                                       spawn_key=(draw, t)))
            w = _weights(rng, n, d)
            x = (w / w.sum(axis=1, keepdims=True)).T * decile_totals[t]
            total += float(np.sum(evaluate_frontier(f, x)))
        samples[draw] = total

    return RandomAllocationSummary(
        mean_output=float(np.mean(samples)),
        median_output=float(np.median(samples)),
        samples=samples if config.keep_samples else None)
