"""Empirical metrics, baselines, and the repeated random-split experiment.

An undefined false-discovery rate (nothing selected) is carried as None all
the way into the output files: coercing it to zero would award perfect
scores to a generator that always abstains.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .calibrate import (CalibrationRecord, SelectiveGeneratorModel,
                        learn_scg, learn_scg_with_trace)
from .entailment import (EntailmentConfig, EntailmentLabel,
                         exact_match_label, label_candidate,
                         synthetic_exact_match_entailment)
from .fuzzgen import TestBank, mutate_seed


@dataclass
class EvalReport:
    fdr_ce: float | None
    efficiency: float
    one_minus_pass1: float | None
    selected: int
    selected_false: int
    total: int
    tau: float | None = None
    u_hat: float | None = None
    feasible: bool | None = None
    trial: int = 0


def empirical_fdr_ce(test_labels: list[EntailmentLabel],
                     selections: list[bool]) -> float | None:
    """Fraction of selected answers whose evaluation label says not-entailed;
    None (not zero) when nothing is selected."""
    if len(test_labels) != len(selections):
        raise ValueError(
            f"misaligned lists: {len(test_labels)} labels vs "
            f"{len(selections)} selections")
    selected = sum(selections)
    if selected == 0:
        return None
    false_sel = sum(1 for lab, sel in zip(test_labels, selections)
                    if sel and not lab.entailed)
    return false_sel / selected


def empirical_efficiency(selections: list[bool]) -> float:
    if not selections:
        raise ValueError("selections must be non-empty")
    return sum(selections) / len(selections)


def pass_at_1(suite_passed: list[bool],
              selections: list[bool] | None = None) -> float | None:
    """Fraction of problems whose candidate passed all executed tests,
    optionally restricted to the selected subset (None when it is empty)."""
    if selections is None:
        if not suite_passed:
            raise ValueError("suite results must be non-empty")
        return sum(suite_passed) / len(suite_passed)
    if len(suite_passed) != len(selections):
        raise ValueError("misaligned lists")
    chosen = [p for p, sel in zip(suite_passed, selections) if sel]
    if not chosen:
        return None
    return sum(chosen) / len(chosen)


# --- repeated random splits ------------------------------------------------

@dataclass(frozen=True)
class BundleEntry:
    """One problem of a fully labeled dataset: score, working label, and the
    stricter evaluation-time label."""

    problem_id: str
    candidate_id: str
    score: float
    calib_label: EntailmentLabel
    eval_label: EntailmentLabel

    @property
    def passed_all(self) -> bool:
        return self.eval_label.k_hat == self.eval_label.n_y

    def record(self) -> CalibrationRecord:
        return CalibrationRecord(self.problem_id, self.candidate_id,
                                 self.score, self.calib_label)


@dataclass
class SplitSummary:
    trials: int
    violation_rate: float
    undefined_fdr_trials: int
    fdr_quantiles: tuple[float, float, float] | None  # (delta_s, median, 1-delta_s)
    efficiency_quantiles: tuple[float, float, float]
    mean_fdr: float | None
    mean_efficiency: float


def evaluate_selection(entries: list[BundleEntry], tau: float,
                       model: SelectiveGeneratorModel | None = None,
                       trial: int = 0) -> EvalReport:
    selections = [e.score >= tau for e in entries]
    eval_labels = [e.eval_label for e in entries]
    fdr = empirical_fdr_ce(eval_labels, selections)
    eff = empirical_efficiency(selections)
    p1 = pass_at_1([e.passed_all for e in entries], selections)
    return EvalReport(
        fdr_ce=fdr, efficiency=eff,
        one_minus_pass1=None if p1 is None else 1.0 - p1,
        selected=sum(selections),
        selected_false=sum(1 for lab, sel in zip(eval_labels, selections)
                           if sel and not lab.entailed),
        total=len(entries), trial=trial,
        tau=model.tau if model else tau,
        u_hat=model.u_hat if model else None,
        feasible=model.feasible if model else None)


def run_random_splits(bundle: list[BundleEntry], trials: int, ratio: float,
                      eps_s: float, delta_s: float, epsilon_e: float,
                      split_seed: int, scoring_fn: str = "norm",
                      learner=None) -> tuple[list[EvalReport], SplitSummary]:
    """Repeatedly re-split a labeled bundle, calibrate on one side and
    measure on the other; per-trial seeds derive from (split_seed, trial)
    through the generation-side mixing function, so reruns are identical.

    `learner` swaps the calibration step (used by the baselines); it maps a
    record list to a model and defaults to the certified learner.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 < ratio < 1.0:
        raise ValueError("calibration ratio must lie in (0, 1)")
    if learner is None:
        def learner(records):
            return learn_scg(records, eps_s, delta_s, epsilon_e, scoring_fn)
    n = len(bundle)
    n_cal = int(round(ratio * n))
    if n_cal < 2 or n - n_cal < 1:
        raise ValueError(
            f"degenerate split: {n_cal} calibration / {n - n_cal} test "
            f"problems from {n}")
    reports = []
    for trial in range(trials):
        rng = np.random.default_rng(mutate_seed(split_seed, trial))
        perm = rng.permutation(n)
        calib = [bundle[i] for i in perm[:n_cal]]
        test = [bundle[i] for i in perm[n_cal:]]
        model = learner([e.record() for e in calib])
        reports.append(evaluate_selection(test, model.tau, model, trial))
    return reports, summarize_splits(reports, delta_s)


def summarize_splits(reports: list[EvalReport], delta_s: float) -> SplitSummary:
    defined = [(r.fdr_ce, r.u_hat) for r in reports if r.fdr_ce is not None]
    fdrs = np.array([f for f, _ in defined])
    effs = np.array([r.efficiency for r in reports])
    levels = [delta_s, 0.5, 1.0 - delta_s]
    violations = sum(1 for f, u in defined if u is not None and f > u)
    return SplitSummary(
        trials=len(reports),
        violation_rate=violations / len(reports),
        undefined_fdr_trials=len(reports) - len(defined),
        fdr_quantiles=(tuple(float(q) for q in np.quantile(fdrs, levels))
                       if len(fdrs) else None),
        efficiency_quantiles=tuple(float(q) for q in np.quantile(effs, levels)),
        mean_fdr=float(fdrs.mean()) if len(fdrs) else None,
        mean_efficiency=float(effs.mean()))


# --- baselines --------------------------------------------------------------

def baseline_scg_manual(records: list[CalibrationRecord],
                        top_fraction: float) -> SelectiveGeneratorModel:
    """Fixed-quantile selection: the threshold admits the top fraction of
    scores (lower-closest order statistic); carries no certified bound."""
    if not 0.0 < top_fraction <= 1.0:
        raise ValueError("top fraction must lie in (0, 1]")
    if not records:
        raise ValueError("records must be non-empty")
    scores = sorted(r.score for r in records)
    m = len(scores)
    keep = math.ceil(top_fraction * m)
    tau = scores[m - keep]
    first = records[0].label
    return SelectiveGeneratorModel(
        tau=tau, u_hat=None, feasible=None, eps_s=math.nan, delta_s=math.nan,
        alpha=first.alpha, epsilon_e=first.epsilon_e,
        scoring_fn="manual", n=m)


def baseline_scg_h(records: list[CalibrationRecord], eps_s: float,
                   delta_s: float, epsilon_e: float
                   ) -> SelectiveGeneratorModel:
    """The no-estimation-error heuristic: same search trajectory, but the
    reported bound and the feasibility check drop the epsilon_e term, so its
    bound is exactly the full method's minus epsilon_e."""
    model, _ = learn_scg_with_trace(records, eps_s, delta_s, epsilon_e)
    u_h = model.u_hat - epsilon_e
    return replace(model, u_hat=u_h, feasible=u_h <= eps_s, epsilon_e=0.0,
                   scoring_fn=model.scoring_fn)


def baseline_scg_em(problems_by_id: dict[str, object],
                    generations: list, score_of, cfg: EntailmentConfig,
                    eps_s: float, delta_s: float
                    ) -> tuple[list[CalibrationRecord], SelectiveGeneratorModel]:
    """Exact-match labeling plus the standard learner; wiring only."""
    records = []
    for gen in generations:
        problem = problems_by_id[gen.problem_id]
        matched = exact_match_label(problem.reference, gen.code)
        records.append(CalibrationRecord(
            gen.problem_id, gen.candidate_id, score_of(gen),
            synthetic_exact_match_entailment(matched, cfg)))
    return records, learn_scg(records, eps_s, delta_s, cfg.epsilon_e, "norm")


def label_with_capped_bank(bank: TestBank, candidate: str, entry,
                           cfg: EntailmentConfig, executor, judge: str,
                           bank_cap: int | None = None) -> EntailmentLabel:
    """Label against a (possibly truncated) bank; a bank shorter than n_max
    is treated as the effective cap, so exhaustion is a normal outcome
    rather than an error."""
    tests = bank.tests[:bank_cap] if bank_cap is not None else bank.tests
    effective = replace(cfg, n_max=min(cfg.n_max, len(tests)))
    return label_candidate(tests, candidate, entry, effective, executor, judge)


def baseline_scg_small(problems_by_id: dict[str, object],
                       banks: dict[str, TestBank], generations: list,
                       score_of, cfg: EntailmentConfig, executor,
                       eps_s: float, delta_s: float, bank_cap: int = 21
                       ) -> tuple[list[CalibrationRecord], SelectiveGeneratorModel]:
    """The few-tests regime: identical pipeline with every bank truncated to
    its first bank_cap tests before labeling."""
    records = []
    for gen in generations:
        problem = problems_by_id[gen.problem_id]
        label = label_with_capped_bank(
            banks[gen.problem_id], gen.code, problem.entry, cfg, executor,
            problem.judge, bank_cap)
        records.append(CalibrationRecord(gen.problem_id, gen.candidate_id,
                                         score_of(gen), label))
    return records, learn_scg(records, eps_s, delta_s, cfg.epsilon_e, "norm")


# --- serialization ----------------------------------------------------------

REPORT_COLUMNS = ("trial", "fdr_ce", "efficiency", "one_minus_pass1",
                  "tau", "u_hat", "feasible")


def report_to_row(report: EvalReport) -> dict:
    from .records import encode_float
    return {"trial": report.trial, "fdr_ce": report.fdr_ce,
            "efficiency": report.efficiency,
            "one_minus_pass1": report.one_minus_pass1,
            "selected": report.selected,
            "selected_false": report.selected_false, "total": report.total,
            "tau": encode_float(report.tau), "u_hat": report.u_hat,
            "feasible": report.feasible}


def write_reports_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            row = report_to_row(r)
            writer.writerow(["" if row[c] is None else row[c]
                             for c in REPORT_COLUMNS])
