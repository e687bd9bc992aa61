"""Selective code generation toolkit with a certified FDR guarantee."""

from .bounds import binom_cdf, clopper_pearson_lower, clopper_pearson_upper
from .calibrate import (CalibrationRecord, SelectiveGeneratorModel,
                        fdr_bound_at, learn_scg, select)
from .dataset import Problem, load_problems
from .entailment import (EntailmentConfig, EntailmentLabel,
                         exact_match_label, functional_correctness_lower,
                         label_candidate)
from .evaluate import (empirical_efficiency, empirical_fdr_ce, pass_at_1,
                       run_random_splits)
from .executor import (EntryPoint, ExecLimits, Status, SubprocessExecutor,
                       TestOutcome, compare_outputs)
from .fuzzgen import (InputSchema, TestBank, UnitTest, build_test_bank,
                      decode_input, mutate_seed, parse_schema)
from .scoring import (GenerationRecord, score_external, score_min,
                      score_norm, score_seq)
from .sim import (BernoulliStubExecutor, SyntheticWorldConfig,
                  check_controllability, check_fdr_inequality, synth_world)

__version__ = "0.1.0"

__all__ = [
    "binom_cdf", "clopper_pearson_lower", "clopper_pearson_upper",
    "CalibrationRecord", "SelectiveGeneratorModel", "fdr_bound_at",
    "learn_scg", "select",
    "Problem", "load_problems",
    "EntailmentConfig", "EntailmentLabel", "exact_match_label",
    "functional_correctness_lower", "label_candidate",
    "empirical_efficiency", "empirical_fdr_ce", "pass_at_1",
    "run_random_splits",
    "EntryPoint", "ExecLimits", "Status", "SubprocessExecutor",
    "TestOutcome", "compare_outputs",
    "InputSchema", "TestBank", "UnitTest", "build_test_bank",
    "decode_input", "mutate_seed", "parse_schema",
    "GenerationRecord", "score_external", "score_min", "score_norm",
    "score_seq",
    "BernoulliStubExecutor", "SyntheticWorldConfig",
    "check_controllability", "check_fdr_inequality", "synth_world",
]
