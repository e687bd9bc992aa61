"""Synthetic-world harness that certifies the statistical guarantees.

No real code runs here: each synthetic problem gets a hidden true pass
probability, a confidence score correlated with it through a configurable
noise model, and a stub executor whose outcomes are i.i.d. Bernoulli passes.
Because the truth is known exactly, the false-discovery inequality and the
calibration guarantee can be checked by Monte-Carlo, with the exact same
labeling and learning code paths used on real code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .calibrate import CalibrationRecord, learn_scg
from .entailment import EntailmentConfig, EntailmentLabel, label_candidate
from .evaluate import BundleEntry
from .executor import EntryPoint, Status, TestOutcome
from .fuzzgen import UnitTest, mutate_seed

STUB_ENTRY = EntryPoint("function-call", "f", language="stub")
_DUMMY_TEST = UnitTest(input=[0], expected_output=0, seed_round=-1)


def synthetic_test_stream() -> Iterator[UnitTest]:
    """On-the-fly test source for worlds where inputs carry no information."""
    while True:
        yield _DUMMY_TEST


@dataclass(frozen=True)
class BetaFamily:
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta family parameters must be positive")


@dataclass(frozen=True)
class SyntheticWorldConfig:
    problems: int
    mixture: tuple[tuple[float, float], ...] | BetaFamily
    score_slope: float = 4.0
    score_noise: float = 0.5
    alpha: float = 0.35
    epsilon_e: float = 0.05
    eps_s: float = 0.3
    delta_s: float = 0.1
    n_max: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.problems < 2:
            raise ValueError("a world needs at least 2 problems")
        if self.score_noise < 0:
            raise ValueError("score noise must be non-negative")
        if isinstance(self.mixture, BetaFamily):
            return
        if not self.mixture:
            raise ValueError("mixture must have at least one atom")
        total = sum(w for w, _ in self.mixture)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must sum to 1, got {total}")
        for _, p in self.mixture:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"atom probability out of [0, 1]: {p}")

    @property
    def entailment_config(self) -> EntailmentConfig:
        return EntailmentConfig(self.alpha, self.epsilon_e, self.n_max)


def parse_world_config(obj: dict) -> SyntheticWorldConfig:
    mixture = obj["mixture"]
    if isinstance(mixture, dict):
        if mixture.get("family") != "beta":
            raise ValueError(f"unknown mixture family {mixture!r}")
        parsed = BetaFamily(float(mixture["a"]), float(mixture["b"]))
    else:
        parsed = tuple((float(w), float(p)) for w, p in mixture)
    return SyntheticWorldConfig(
        problems=int(obj["problems"]), mixture=parsed,
        score_slope=float(obj.get("score_slope", 4.0)),
        score_noise=float(obj.get("score_noise", 0.5)),
        alpha=float(obj.get("alpha", 0.35)),
        epsilon_e=float(obj.get("epsilon_e", 0.05)),
        eps_s=float(obj.get("eps_s", 0.3)),
        delta_s=float(obj.get("delta_s", 0.1)),
        n_max=int(obj.get("n_max", 150)),
        seed=int(obj.get("seed", 0)))


def load_world_config(path) -> SyntheticWorldConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_world_config(json.load(fh))


class BernoulliStubExecutor:
    """Executor handle whose outcomes are i.i.d. passes with a per-candidate
    probability; the sampling backbone for every certification check."""

    def __init__(self, pass_probs: dict[str, float], seed: int):
        self._pass_probs = dict(pass_probs)
        self._rng = np.random.default_rng(seed)

    def run_test(self, code: str, entry, test, judge: str = "structural"
                 ) -> TestOutcome:
        passed = self._rng.random() < self._pass_probs[code]
        return TestOutcome(Status.PASS if passed else Status.WRONG_OUTPUT)

    def run_once(self, code: str, entry, input_value, limits=None) -> TestOutcome:
        return self.run_test(code, entry, _DUMMY_TEST)

    def run_suite(self, code: str, entry, tests, limits=None,
                  judge: str = "structural") -> tuple[list[TestOutcome], int]:
        outcomes = [self.run_test(code, entry, t, judge) for t in tests]
        return outcomes, sum(o.status is Status.PASS for o in outcomes)


def draw_pass_probs(cfg: SyntheticWorldConfig, rng: np.random.Generator,
                    size: int) -> np.ndarray:
    if isinstance(cfg.mixture, BetaFamily):
        return rng.beta(cfg.mixture.a, cfg.mixture.b, size=size)
    weights = np.array([w for w, _ in cfg.mixture])
    atoms = np.array([p for _, p in cfg.mixture])
    return atoms[rng.choice(len(atoms), size=size, p=weights)]


def draw_world(cfg: SyntheticWorldConfig, rng: np.random.Generator,
               size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw (true pass probability, confidence score) pairs."""
    p = draw_pass_probs(cfg, rng, size)
    score = cfg.score_slope * p + cfg.score_noise * rng.standard_normal(size)
    return p, score


@dataclass
class SyntheticWorld:
    """One materialized dataset draw with its stub executor."""

    cfg: SyntheticWorldConfig
    pass_probs: np.ndarray
    scores: np.ndarray
    codes: list[str]
    executor: BernoulliStubExecutor
    hidden_entailed: np.ndarray = field(init=False)

    def __post_init__(self):
        self.hidden_entailed = self.pass_probs >= 1.0 - self.cfg.alpha

    def label_all(self, ecfg: EntailmentConfig | None = None
                  ) -> list[EntailmentLabel]:
        ecfg = ecfg or self.cfg.entailment_config
        return [label_candidate(synthetic_test_stream(), code, STUB_ENTRY,
                                ecfg, self.executor)
                for code in self.codes]

    def records(self, labels: list[EntailmentLabel]) -> list[CalibrationRecord]:
        return [CalibrationRecord(f"p{i:06d}", "g0", float(s), lab)
                for i, (s, lab) in enumerate(zip(self.scores, labels))]


def synth_world(cfg: SyntheticWorldConfig, *, size: int | None = None,
                salt: int = 0) -> SyntheticWorld:
    """Materialize a fresh world draw; `salt` separates repeated draws."""
    rng = np.random.default_rng(mutate_seed(cfg.seed, salt))
    size = size or cfg.problems
    p, score = draw_world(cfg, rng, size)
    codes = [f"stub:{salt}:{i}" for i in range(size)]
    executor = BernoulliStubExecutor(
        dict(zip(codes, p.tolist())), seed=mutate_seed(cfg.seed, salt + 1))
    return SyntheticWorld(cfg, p, score, codes, executor)


def tau_at_quantile(cfg: SyntheticWorldConfig, q: float,
                    reference_size: int = 20000) -> float:
    """Deterministic threshold at a score quantile of the world."""
    rng = np.random.default_rng(mutate_seed(cfg.seed, 0x5C08E))
    _, scores = draw_world(cfg, rng, reference_size)
    return float(np.quantile(scores, q))


# --- certification checks -------------------------------------------------

@dataclass
class FdrInequalityResult:
    lhs: float
    rhs: float
    holds: bool
    selected: int
    degenerate: bool = False


def check_fdr_inequality(cfg: SyntheticWorldConfig, trials: int, tau: float,
                 *, salt: int = 1000) -> FdrInequalityResult:
    """Estimate both sides of the false-discovery inequality at a fixed
    threshold: the truth-side rate must not exceed epsilon_e plus the
    estimated-label rate, within 3 Monte-Carlo standard errors (paired)."""
    if trials < 1000:
        raise ValueError("inequality check needs at least 1000 trials")
    world = synth_world(cfg, size=trials, salt=salt)
    selected = world.scores >= tau
    m = int(selected.sum())
    if m == 0:
        return FdrInequalityResult(lhs=0.0, rhs=cfg.epsilon_e, holds=True,
                            selected=0, degenerate=True)
    ecfg = cfg.entailment_config
    not_e = ~world.hidden_entailed[selected]
    not_e_hat = np.empty(m, dtype=bool)
    sel_codes = [c for c, s in zip(world.codes, selected) if s]
    for j, code in enumerate(sel_codes):
        label = label_candidate(synthetic_test_stream(), code, STUB_ENTRY,
                                ecfg, world.executor)
        not_e_hat[j] = not label.entailed
    lhs = float(not_e.mean())
    rhs = cfg.epsilon_e + float(not_e_hat.mean())
    diff = not_e.astype(float) - not_e_hat.astype(float)
    se = float(diff.std(ddof=1)) / math.sqrt(m) if m > 1 else 0.0
    holds = float(diff.mean()) <= cfg.epsilon_e + 3.0 * se
    return FdrInequalityResult(lhs=lhs, rhs=rhs, holds=holds, selected=m)


@dataclass
class ControllabilityResult:
    violation_rate: float
    passes: bool
    threshold: float
    draws: int
    feasible_rate: float
    mean_efficiency: float
    mean_true_fdr: float
    draw_reports: list = field(default_factory=list)


def check_controllability(cfg: SyntheticWorldConfig, calibration_draws: int,
                          *, test_draw: int = 20000, salt: int = 2000
                          ) -> ControllabilityResult:
    """Run the full pipeline on fresh calibration draws and count how often
    the true false-discovery rate exceeds the certified bound.

    The true rate is computed from the hidden pass probabilities of a large
    fresh draw (entailment is known exactly there), so the check carries no
    second-stage estimation noise. Passes when the violation rate stays
    within delta_s plus 3 Monte-Carlo standard errors.
    """
    if calibration_draws < 500:
        raise ValueError("controllability check needs at least 500 draws")
    from .evaluate import EvalReport
    violations = 0
    feasible = 0
    efficiencies = []
    true_fdrs = []
    draw_reports = []
    for d in range(calibration_draws):
        world = synth_world(cfg, salt=salt + 3 * d)
        labels = world.label_all()
        model = learn_scg(world.records(labels), cfg.eps_s, cfg.delta_s,
                          cfg.epsilon_e)
        feasible += model.feasible
        rng = np.random.default_rng(mutate_seed(cfg.seed, salt + 3 * d + 2))
        p_test, s_test = draw_world(cfg, rng, test_draw)
        sel = s_test >= model.tau
        efficiencies.append(float(sel.mean()))
        selected = int(sel.sum())
        if selected:
            # nothing selected leaves the conditional rate undefined
            true_fdr = float((p_test[sel] < 1.0 - cfg.alpha).mean())
            true_fdrs.append(true_fdr)
            if true_fdr > model.u_hat:
                violations += 1
        draw_reports.append(EvalReport(
            fdr_ce=true_fdr if selected else None,
            efficiency=float(sel.mean()), one_minus_pass1=None,
            selected=selected,
            selected_false=int((p_test[sel] < 1.0 - cfg.alpha).sum()),
            total=test_draw, tau=model.tau, u_hat=model.u_hat,
            feasible=model.feasible, trial=d))
    rate = violations / calibration_draws
    se = math.sqrt(cfg.delta_s * (1.0 - cfg.delta_s) / calibration_draws)
    threshold = cfg.delta_s + 3.0 * se
    return ControllabilityResult(
        violation_rate=rate, passes=rate <= threshold, threshold=threshold,
        draws=calibration_draws, feasible_rate=feasible / calibration_draws,
        mean_efficiency=float(np.mean(efficiencies)),
        mean_true_fdr=float(np.mean(true_fdrs)) if true_fdrs else 0.0,
        draw_reports=draw_reports)


def make_split_bundle(cfg: SyntheticWorldConfig, *, eval_epsilon_e: float = 0.01,
                      eval_n_max: int = 600, salt: int = 3000
                      ) -> list[BundleEntry]:
    """One labeled world draw shaped for the split-experiment harness:
    calibration labels at the working epsilon_e, evaluation labels at the
    stricter test-time epsilon."""
    world = synth_world(cfg, salt=salt)
    calib = world.label_all()
    eval_cfg = EntailmentConfig(cfg.alpha, eval_epsilon_e, eval_n_max)
    evals = world.label_all(eval_cfg)
    return [BundleEntry(problem_id=f"p{i:06d}", candidate_id="g0",
                        score=float(world.scores[i]), calib_label=calib[i],
                        eval_label=evals[i])
            for i in range(len(world.codes))]
