"""Orchestrator and output-judge tests against the minimal fixture workers."""

import time

import pytest

from scg.executor import (EntryPoint, ExecLimits, InfraError, Status,
                          SubprocessExecutor, compare_outputs)
from scg.fuzzgen import UnitTest

IDENTITY = "def f(x):\n    return x\n"
RAISER = "def f(x):\n    raise ValueError('no')\n"
SPIN = "def f(x):\n    while True:\n        pass\n"
FN = EntryPoint("function-call", "f")


class TestCompareOutputs:
    def test_stdio_trailing_whitespace_normalized(self):
        assert compare_outputs("3\n", "3 \n\n", "stdio-text")

    def test_stdio_leading_whitespace_significant(self):
        assert not compare_outputs("3", " 3", "stdio-text")

    def test_stdio_interior_spacing_significant(self):
        assert not compare_outputs("a b", "a  b", "stdio-text")

    def test_float_within_tolerance(self):
        assert compare_outputs([1.0000000], [1.0000005], "structural")

    def test_float_outside_tolerance(self):
        assert not compare_outputs([1.0], [1.01], "structural")

    def test_order_sensitive_sequences(self):
        assert not compare_outputs([1, 2], [2, 1], "structural")

    def test_int_exact(self):
        assert compare_outputs(3, 3, "structural")
        assert not compare_outputs(3, 4, "structural")

    def test_bool_not_int(self):
        assert not compare_outputs(True, 1, "structural")
        assert compare_outputs(True, True, "structural")

    def test_mixed_numeric_uses_float_tolerance(self):
        assert compare_outputs(1, 1.0000001, "structural")

    def test_nested_structures(self):
        assert compare_outputs([[1, 2], ["a"]], [[1, 2], ["a"]], "structural")
        assert not compare_outputs([[1, 2]], [[1, 2], []], "structural")

    def test_tuple_list_equivalence(self):
        assert compare_outputs((1, 2), [1, 2], "structural")

    def test_none_only_equals_none(self):
        assert compare_outputs(None, None, "structural")
        assert not compare_outputs(None, 0, "structural")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            compare_outputs(1, 1, "fuzzy")


class TestRunOnce:
    def test_identity_snippet(self, executor):
        outcome = executor.run_once(IDENTITY, FN, [5])
        assert outcome.status is Status.PASS
        assert outcome.actual_output == 5

    def test_raising_snippet(self, executor):
        outcome = executor.run_once(RAISER, FN, [5])
        assert outcome.status is Status.RUNTIME_ERROR
        assert "ValueError" in outcome.error

    @pytest.mark.parametrize("reuse", [False, True])
    def test_timeout_enforced_with_grace(self, worker_cmds, reuse):
        with SubprocessExecutor(runners={"python": worker_cmds["good"]},
                                reuse_workers=reuse) as ex:
            limits = ExecLimits(wall_timeout_ms=500)
            start = time.perf_counter()
            outcome = ex.run_once(SPIN, FN, [1], limits)
            elapsed_ms = (time.perf_counter() - start) * 1000
        assert outcome.status is Status.TIMEOUT
        # contract: wall + 200ms grace; 100ms is clock/scheduler epsilon
        assert elapsed_ms <= 500 + 200 + 100

    def test_missing_runner_is_infra(self, monkeypatch):
        monkeypatch.delenv("SCG_RUNNER", raising=False)
        ex = SubprocessExecutor()
        outcome = ex.run_once(IDENTITY, FN, [5])
        assert outcome.status is Status.INFRA_ERROR

    def test_env_runner_fallback(self, worker_cmds, monkeypatch):
        cmd = " ".join(worker_cmds["good"])
        monkeypatch.setenv("SCG_RUNNER", cmd)
        outcome = SubprocessExecutor().run_once(IDENTITY, FN, [7])
        assert outcome.status is Status.PASS
        assert outcome.actual_output == 7

    def test_garbage_reply_is_infra(self, worker_cmds):
        ex = SubprocessExecutor(runners={"python": worker_cmds["garbage"]})
        outcome = ex.run_once(IDENTITY, FN, [5])
        assert outcome.status is Status.INFRA_ERROR

    def test_stdio_entry(self, executor):
        code = "print(int(input()) * 2)"
        outcome = executor.run_once(code, EntryPoint("stdio-program"), "21\n")
        assert outcome.status is Status.PASS
        assert outcome.actual_output == "42\n"

    def test_candidate_prints_cannot_corrupt_protocol(self, executor):
        code = "def f(x):\n    print('noise')\n    return x\n"
        outcome = executor.run_once(code, FN, [3])
        assert outcome.status is Status.PASS
        assert outcome.actual_output == 3


class TestIsolation:
    def test_crash_does_not_affect_next_run(self, fresh_executor):
        crash = "def f(x):\n    import os\n    os._exit(13)\n"
        first = fresh_executor.run_once(crash, FN, [1])
        assert first.status in (Status.INFRA_ERROR, Status.RUNTIME_ERROR)
        second = fresh_executor.run_once(IDENTITY, FN, [2])
        assert second.status is Status.PASS
        assert second.actual_output == 2

    def test_hang_does_not_affect_next_run(self, worker_cmds):
        with SubprocessExecutor(runners={"python": worker_cmds["good"]},
                                reuse_workers=True) as ex:
            hung = ex.run_once(SPIN, FN, [1], ExecLimits(wall_timeout_ms=300))
            assert hung.status is Status.TIMEOUT
            ok = ex.run_once(IDENTITY, FN, [9])
            assert ok.status is Status.PASS
            assert ok.actual_output == 9

    def test_deterministic_repeat(self, executor):
        code = "def f(xs):\n    return sorted(xs)\n"
        tests = [UnitTest([[3, 1, 2]], [1, 2, 3])]
        first = executor.run_suite(code, FN, tests)
        second = executor.run_suite(code, FN, tests)
        assert first[1] == second[1] == 1
        assert [o.status for o in first[0]] == [o.status for o in second[0]]


class TestRunSuite:
    def test_always_raising_candidate(self, executor):
        tests = [UnitTest([i], i) for i in range(10)]
        outcomes, k_hat = executor.run_suite(RAISER, FN, tests)
        assert k_hat == 0
        assert all(o.status is Status.RUNTIME_ERROR for o in outcomes)

    def test_even_indexed_correct_candidate(self, executor):
        # Candidate doubles even inputs only; fixture built so exactly the
        # even-indexed 5 of 10 tests pass. Expected k derived by direct
        # in-process execution below.
        code = ("def f(x):\n"
                "    return 2 * x if x % 2 == 0 else -1\n")
        tests = [UnitTest([i], 2 * i) for i in range(10)]

        def oracle(x):
            return 2 * x if x % 2 == 0 else -1

        expected_k = sum(oracle(i) == 2 * i for i in range(10))
        assert expected_k == 5
        outcomes, k_hat = executor.run_suite(code, FN, tests)
        assert k_hat == expected_k
        statuses = [o.status for o in outcomes]
        assert statuses[::2] == [Status.PASS] * 5
        assert statuses[1::2] == [Status.WRONG_OUTPUT] * 5

    def test_infra_aborts_suite(self, worker_cmds):
        ex = SubprocessExecutor(runners={"python": worker_cmds["garbage"]})
        with pytest.raises(InfraError):
            ex.run_suite(IDENTITY, FN, [UnitTest([1], 1)])

    def test_empty_suite_rejected(self, executor):
        with pytest.raises(ValueError):
            executor.run_suite(IDENTITY, FN, [])


class TestEntryPoint:
    def test_function_entry_requires_name(self):
        with pytest.raises(ValueError):
            EntryPoint("function-call", None)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            EntryPoint("rpc")

    def test_limits_validation(self):
        with pytest.raises(ValueError):
            ExecLimits(wall_timeout_ms=0)
        with pytest.raises(ValueError):
            ExecLimits(output_cap=0)
