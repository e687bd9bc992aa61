"""Confidence scores over ingested token log-probabilities.

Scores are computed from generation records shipped in files, never by
querying a model; externally produced scores (e.g. verbalized confidences)
ride along as opaque reals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .records import read_jsonl


class ScoringError(ValueError):
    """A requested score cannot be computed from the record."""


@dataclass(frozen=True)
class GenerationRecord:
    problem_id: str
    candidate_id: str
    code: str
    token_logprobs: tuple[float, ...] = ()
    external_score: float | None = None

    def __post_init__(self):
        for lp in self.token_logprobs:
            if lp > 0.0 or math.isnan(lp):
                raise ValueError(
                    f"token log-probabilities must be <= 0, got {lp}")


def score_norm(rec: GenerationRecord) -> float:
    """Length-normalized log-probability; the default scoring function."""
    if not rec.token_logprobs:
        raise ScoringError(f"{rec.problem_id}: no token log-probabilities")
    return sum(rec.token_logprobs) / len(rec.token_logprobs)


def score_min(rec: GenerationRecord) -> float:
    """Lowest token log-probability."""
    if not rec.token_logprobs:
        raise ScoringError(f"{rec.problem_id}: no token log-probabilities")
    return min(rec.token_logprobs)


def score_seq(rec: GenerationRecord) -> float:
    """Sequence log-probability (sum over tokens)."""
    if not rec.token_logprobs:
        raise ScoringError(f"{rec.problem_id}: no token log-probabilities")
    return sum(rec.token_logprobs)


def score_external(rec: GenerationRecord) -> float:
    """Pass through an externally supplied confidence unchanged."""
    if rec.external_score is None:
        raise ScoringError(f"{rec.problem_id}: no external score present")
    return rec.external_score


SCORING_FUNCTIONS = {
    "norm": score_norm,
    "min": score_min,
    "seq": score_seq,
    "external": score_external,
}


def generation_from_row(row: dict) -> GenerationRecord:
    return GenerationRecord(
        problem_id=row["problem_id"], candidate_id=row["candidate_id"],
        code=row["code"],
        token_logprobs=tuple(row.get("token_logprobs", ())),
        external_score=row.get("external_score"))


def load_generations(path) -> list[GenerationRecord]:
    return [generation_from_row(row) for row in read_jsonl(path)]
