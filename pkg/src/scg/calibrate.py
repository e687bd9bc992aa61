"""Threshold learning with the PAC false-discovery-rate guarantee.

The learner bisects over the scores of a labeled calibration set, spending a
per-step confidence budget of delta_s / ceil(log2 n) so the union bound over
the visited thresholds holds structurally. It returns the last threshold
whose certified bound met the target, or, when none did, the visited
threshold with the smallest bound (feasible=False) so the caller still gets
the best certifiable guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import clopper_pearson_upper
from .entailment import EntailmentLabel


class CalibrationError(ValueError):
    """The calibration set cannot support learning."""


@dataclass(frozen=True)
class CalibrationRecord:
    problem_id: str
    candidate_id: str
    score: float
    label: EntailmentLabel

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"{self.problem_id}: score must be finite")


@dataclass(frozen=True)
class SelectiveGeneratorModel:
    """A learned threshold with its certified bound and full provenance."""

    tau: float  # +inf sentinel = always abstain
    u_hat: float
    feasible: bool
    eps_s: float
    delta_s: float
    alpha: float
    epsilon_e: float
    scoring_fn: str = "norm"
    n: int = 0


@dataclass(frozen=True)
class BoundEvaluation:
    """One bound evaluation along the bisection path (kept for the oracle
    replay tests and diagnostics)."""

    tau: float
    u_hat: float
    selected: int
    false_discoveries: int
    kept: bool


def fdr_bound_at(records: list[CalibrationRecord], tau: float,
                 delta_per_step: float, epsilon_e: float
                 ) -> tuple[float, int, int]:
    """Certified FDR bound for the records selected at threshold tau.

    Returns (u_hat, selected count, false-discovery count) where u_hat is
    epsilon_e plus the exact upper binomial bound on the false-discovery
    fraction at budget delta_per_step. An empty selection has no evidence
    and gets the maximally conservative bound epsilon_e + 1.
    """
    if not records:
        raise CalibrationError("records must be non-empty")
    selected = [r for r in records if r.score >= tau]
    false_discoveries = sum(1 for r in selected if not r.label.entailed)
    if not selected:
        return epsilon_e + 1.0, 0, 0
    u_binom = clopper_pearson_upper(false_discoveries, len(selected),
                                    delta_per_step)
    return epsilon_e + u_binom, len(selected), false_discoveries


def _sorted_records(records: list[CalibrationRecord]) -> list[CalibrationRecord]:
    # Ties broken lexicographically so the learned model is reproducible.
    return sorted(records, key=lambda r: (r.score, r.problem_id, r.candidate_id))


def learn_scg(records: list[CalibrationRecord], eps_s: float, delta_s: float,
              epsilon_e: float, scoring_fn: str = "norm"
              ) -> SelectiveGeneratorModel:
    model, _ = learn_scg_with_trace(records, eps_s, delta_s, epsilon_e,
                                    scoring_fn)
    return model


def learn_scg_with_trace(records: list[CalibrationRecord], eps_s: float,
                         delta_s: float, epsilon_e: float,
                         scoring_fn: str = "norm"
                         ) -> tuple[SelectiveGeneratorModel, list[BoundEvaluation]]:
    """Bisection learner; also returns the per-iteration evaluation trace.

    Exactly ceil(log2 n) bound evaluations are performed, each at budget
    delta_s / ceil(log2 n), matching the union-bound accounting the
    guarantee relies on.
    """
    if len(records) < 2:
        raise CalibrationError(
            f"calibration needs at least 2 records, got {len(records)}")
    if not 0.0 < eps_s < 1.0 + epsilon_e:
        raise CalibrationError(f"eps_s out of range: {eps_s}")
    if not 0.0 < delta_s < 1.0:
        raise CalibrationError(f"delta_s out of range: {delta_s}")

    ordered = _sorted_records(records)
    n = len(ordered)
    steps = math.ceil(math.log2(n))
    delta_per_step = delta_s / steps

    lo, hi = 1, n  # 1-based index bracket over the sorted scores
    trace: list[BoundEvaluation] = []
    kept: BoundEvaluation | None = None
    best: BoundEvaluation | None = None
    for _ in range(steps):
        mid = math.ceil((lo + hi) / 2)
        tau = ordered[mid - 1].score
        u_hat, selected, false_discoveries = fdr_bound_at(
            ordered, tau, delta_per_step, epsilon_e)
        ok = u_hat <= eps_s
        evaluation = BoundEvaluation(tau, u_hat, selected, false_discoveries, ok)
        trace.append(evaluation)
        # Ties go to the later (higher-threshold) candidate: under equal
        # bounds the more abstaining generator is the safer fallback, and a
        # never-feasible run then degenerates to near-total abstention.
        if best is None or u_hat <= best.u_hat:
            best = evaluation
        if ok:
            kept = evaluation
            hi = mid
        else:
            lo = mid

    final = kept if kept is not None else best
    model = SelectiveGeneratorModel(
        tau=final.tau, u_hat=final.u_hat, feasible=kept is not None,
        eps_s=eps_s, delta_s=delta_s, alpha=records[0].label.alpha,
        epsilon_e=epsilon_e, scoring_fn=scoring_fn, n=n)
    return model, trace


def select(model: SelectiveGeneratorModel, score: float) -> bool:
    """True = answer with the generation, False = abstain.

    The boundary is inclusive; a +infinity threshold abstains always.
    """
    return score >= model.tau


# --- serialization --------------------------------------------------------

def model_to_row(model: SelectiveGeneratorModel) -> dict:
    from .records import encode_float
    return {"tau": encode_float(model.tau), "u_hat": model.u_hat,
            "feasible": model.feasible, "eps_s": model.eps_s,
            "delta_s": model.delta_s, "alpha": model.alpha,
            "epsilon_e": model.epsilon_e, "scoring_fn": model.scoring_fn,
            "n": model.n}


def model_from_row(row: dict) -> SelectiveGeneratorModel:
    from .records import decode_float
    return SelectiveGeneratorModel(
        tau=decode_float(row["tau"]), u_hat=row["u_hat"],
        feasible=row["feasible"], eps_s=row["eps_s"], delta_s=row["delta_s"],
        alpha=row["alpha"], epsilon_e=row["epsilon_e"],
        scoring_fn=row["scoring_fn"], n=row["n"])
