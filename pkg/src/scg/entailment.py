"""Entailment labeling with adaptive test sizing.

A reference entails a candidate when the candidate reproduces the
reference's outputs on random inputs with probability at least 1 - alpha.
That probability is never observed directly; the label comes from a
one-sided exact lower confidence bound on the pass rate, and the number of
tests is grown adaptively until the bound clears 1 - alpha or the per-
candidate cap n_max is hit. The adaptive rule re-evaluates the bound at
every step; its realized false-entailment rate is validated empirically in
the certification suite rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .bounds import clopper_pearson_lower
from .executor import EntryPoint, Status


class LabelingError(RuntimeError):
    """Labeling could not finish: test source ran dry or repeated infra
    failures made the trial unusable."""


@dataclass(frozen=True)
class EntailmentConfig:
    alpha: float
    epsilon_e: float
    n_max: int

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.epsilon_e < 1.0:
            raise ValueError(f"epsilon_e must lie in (0, 1), got {self.epsilon_e}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")


@dataclass(frozen=True)
class EntailmentLabel:
    """Evidence gathered for one (reference, candidate) pair.

    The invariant `entailed == (lower_bound >= 1 - alpha)` holds for every
    label produced by label_candidate; labels synthesized by the exact-match
    baseline carry entailed directly with no binomial evidence.
    """

    n_y: int
    k_hat: int
    lower_bound: float
    entailed: bool
    exhausted: bool
    alpha: float
    epsilon_e: float

    def __post_init__(self):
        if not 0 <= self.k_hat <= self.n_y:
            raise ValueError(
                f"pass count must satisfy 0 <= k <= n, got "
                f"k={self.k_hat}, n={self.n_y}")


def functional_correctness_lower(k_hat: int, n_y: int, epsilon_e: float) -> float:
    """Lower confidence bound on the candidate's expected pass rate.

    Zero tests means zero evidence: the bound is 0 so the adaptive loop
    always draws at least one test.
    """
    if n_y == 0:
        if k_hat != 0:
            raise ValueError("pass count must be 0 when no tests ran")
        return 0.0
    return clopper_pearson_lower(k_hat, n_y, epsilon_e)


def label_candidate(tests: Iterable, candidate: str, entry: EntryPoint,
                    cfg: EntailmentConfig, executor,
                    judge: str = "structural") -> EntailmentLabel:
    """Adaptively size the test run and label the candidate.

    Takes tests one at a time from `tests` (a bank drawn in order, or an
    on-the-fly generator), executing the candidate and updating the lower
    bound, until the bound clears 1 - alpha or n_max tests have run. An
    infra failure is retried once on the same test, then aborts. A bank
    that runs dry before n_max aborts with the bank size in the message.
    """
    source: Iterator = iter(tests)
    threshold = 1.0 - cfg.alpha
    n_y = 0
    k_hat = 0
    lower = 0.0
    while lower < threshold and n_y < cfg.n_max:
        try:
            test = next(source)
        except StopIteration:
            raise LabelingError(
                f"test source exhausted after {n_y} tests; n_max={cfg.n_max} "
                f"requires a bank of at least that size") from None
        outcome = executor.run_test(candidate, entry, test, judge)
        if outcome.status is Status.INFRA_ERROR:
            outcome = executor.run_test(candidate, entry, test, judge)
            if outcome.status is Status.INFRA_ERROR:
                raise LabelingError(
                    f"repeated infra failure while labeling: {outcome.error}")
        n_y += 1
        if outcome.status is Status.PASS:
            k_hat += 1
        lower = functional_correctness_lower(k_hat, n_y, cfg.epsilon_e)
    return EntailmentLabel(
        n_y=n_y, k_hat=k_hat, lower_bound=lower,
        entailed=lower >= threshold, exhausted=n_y >= cfg.n_max,
        alpha=cfg.alpha, epsilon_e=cfg.epsilon_e)


def exact_match_label(reference: str, candidate: str) -> bool:
    """Textual identity up to per-line whitespace trimming and surrounding
    blank lines; the exact-match baseline's notion of correctness."""
    return _normalized_lines(reference) == _normalized_lines(candidate)


def _normalized_lines(text: str) -> list[str]:
    return [line.strip() for line in text.strip().split("\n")]


def synthetic_exact_match_entailment(matched: bool, cfg: EntailmentConfig
                                     ) -> EntailmentLabel:
    """Degenerate label used by the exact-match baseline: carries only the
    boolean, with no binomial evidence behind it."""
    return EntailmentLabel(n_y=0, k_hat=0, lower_bound=0.0, entailed=matched,
                           exhausted=False, alpha=cfg.alpha,
                           epsilon_e=cfg.epsilon_e)


# --- serialization --------------------------------------------------------

def label_to_row(problem_id: str, candidate_id: str,
                 label: EntailmentLabel) -> dict:
    return {"problem_id": problem_id, "candidate_id": candidate_id,
            "n_y": label.n_y, "k_hat": label.k_hat,
            "lower_bound": label.lower_bound, "entailed": label.entailed,
            "exhausted": label.exhausted, "alpha": label.alpha,
            "epsilon_e": label.epsilon_e}


def label_from_row(row: dict) -> tuple[str, str, EntailmentLabel]:
    label = EntailmentLabel(
        n_y=row["n_y"], k_hat=row["k_hat"], lower_bound=row["lower_bound"],
        entailed=row["entailed"], exhausted=row["exhausted"],
        alpha=row["alpha"], epsilon_e=row["epsilon_e"])
    return row["problem_id"], row["candidate_id"], label
