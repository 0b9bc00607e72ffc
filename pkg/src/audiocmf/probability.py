"""Analytic model of tensor-pair match probability under peak-erasing
attacks, with a Monte-Carlo oracle.

A satellite pair survives only if both endpoints survive (probability p
each, independent), so the number of surviving pairs out of F is binomial
with per-pair probability p^2 when both copies are attacked, or p when a
clean reference is compared against one attacked copy. A tensor pair
matches when its anchors survive and at least k satellite pairs do.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SurvivalModel",
    "binomial_tail",
    "pair_match_prob_both_attacked",
    "pair_match_prob_one_attacked",
    "exist_prob",
    "monte_carlo_pair_match",
    "pair_state_probs",
    "sweep_curves",
    "write_curves_csv",
    "CURVE_FIELDS",
]

SCENARIOS = ("both", "one")


@dataclass(frozen=True)
class SurvivalModel:
    p: float               # single-peak survival probability under attack
    fan_out: int = 20      # F, satellite pairs per anchor
    k: int = 3             # min surviving pairs for a match
    peak_density: float = 30.0  # K, peaks per second
    duration_s: float = 1.0     # T, duplicated segment duration

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.fan_out < 1:
            raise ValueError(f"fan_out must be >= 1, got {self.fan_out}")
        if not 0 <= self.k <= self.fan_out:
            raise ValueError(f"k must be in [0, fan_out], got {self.k}")
        if self.peak_density < 0 or self.duration_s < 0:
            raise ValueError("peak_density and duration_s must be non-negative")


def binomial_tail(n: int, q: float, k: int) -> float:
    """P(Binomial(n, q) >= k), summed exactly with integer coefficients."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return math.fsum(
        math.comb(n, i) * q**i * (1.0 - q) ** (n - i) for i in range(k, n + 1)
    )


def pair_match_prob_both_attacked(m: SurvivalModel) -> float:
    """Both copies attacked: anchors survive with p^2 and each satellite
    pair with p^2; match needs >= k surviving pairs."""
    return m.p**2 * binomial_tail(m.fan_out, m.p**2, m.k)


def pair_match_prob_one_attacked(m: SurvivalModel) -> float:
    """Clean reference vs one attacked copy: only the attacked endpoints
    can be lost, so anchor and satellite survival are both plain p."""
    return m.p * binomial_tail(m.fan_out, m.p, m.k)


def expected_anchor_pairs(m: SurvivalModel, scenario: str = "both") -> float:
    """E(M): surviving anchor pairs over a duplicate of K*T anchors."""
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    anchor_p = m.p**2 if scenario == "both" else m.p
    return anchor_p * m.peak_density * m.duration_s


def exist_prob(m: SurvivalModel, p_pair: float, scenario: str = "both") -> float:
    """Probability at least one tensor pair matches anywhere in the
    duplicate: 1 - (1 - p_pair)^E(M)."""
    if not 0.0 <= p_pair <= 1.0:
        raise ValueError(f"p_pair must be in [0, 1], got {p_pair}")
    e_m = expected_anchor_pairs(m, scenario)
    return 1.0 - (1.0 - p_pair) ** e_m


def monte_carlo_pair_match(m: SurvivalModel, trials: int, seed: int,
                           scenario: str = "both") -> float:
    """Simulate endpoint survival directly (no binomial shortcut) and
    return the fraction of trials where the anchors and at least k
    satellite pairs survive. Deterministic for a fixed seed."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = trials
    chunk = 200_000
    while remaining > 0:
        n = min(chunk, remaining)
        if scenario == "both":
            sat = (rng.random((n, m.fan_out)) < m.p) & (rng.random((n, m.fan_out)) < m.p)
            anchors = (rng.random(n) < m.p) & (rng.random(n) < m.p)
        else:
            sat = rng.random((n, m.fan_out)) < m.p
            anchors = rng.random(n) < m.p
        hits += int(np.count_nonzero((sat.sum(axis=1) >= m.k) & anchors))
        remaining -= n
    return hits / trials


def pair_state_probs(p: float) -> tuple[float, float, float]:
    """Per-satellite-pair state split: both survive, exactly one, neither."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return (p * p, 2.0 * (1.0 - p) * p, (1.0 - p) * (1.0 - p))


CURVE_FIELDS = ("scenario", "p", "F", "k", "K", "T",
                "p_pair_analytic", "p_pair_mc", "p_exist")


def sweep_curves(p_values, fan_out: int = 20, ks=(2, 3), peak_density: float = 30.0,
                 durations=(0.25, 0.5, 1.0, 2.0), scenarios=SCENARIOS,
                 mc_trials: int = 0, seed: int = 0) -> list[dict]:
    """Detection-probability curve families over a p grid.

    mc_trials=0 skips the Monte-Carlo column (left empty in the CSV).
    """
    rows = []
    for scenario in scenarios:
        for k in ks:
            for duration in durations:
                for p in p_values:
                    model = SurvivalModel(p=float(p), fan_out=fan_out, k=k,
                                          peak_density=peak_density, duration_s=duration)
                    if scenario == "both":
                        p_pair = pair_match_prob_both_attacked(model)
                    else:
                        p_pair = pair_match_prob_one_attacked(model)
                    p_mc = (
                        monte_carlo_pair_match(model, mc_trials, seed, scenario)
                        if mc_trials > 0 else None
                    )
                    rows.append({
                        "scenario": scenario,
                        "p": float(p),
                        "F": fan_out,
                        "k": k,
                        "K": peak_density,
                        "T": duration,
                        "p_pair_analytic": p_pair,
                        "p_pair_mc": p_mc,
                        "p_exist": exist_prob(model, p_pair, scenario),
                    })
    return rows


def write_curves_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_FIELDS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("p_pair_analytic", "p_pair_mc", "p_exist"):
                if out[key] is not None:
                    out[key] = f"{out[key]:.10g}"
                else:
                    out[key] = ""
            writer.writerow(out)
