"""Sandboxed snippet execution and output judging.

The orchestrator never runs snippet code in-process: every execution goes to
a worker subprocess over a line-delimited protocol (one JSON request line in,
one JSON reply line out). Wall-clock timeouts are enforced here by killing
the worker, so a hostile snippet can never wedge the pipeline, and a fresh
worker per execution (the default) means a crash leaves no residue for the
next run. Infra failures (missing runner, protocol desync) are kept apart
from snippet failures so they can never leak into pass/fail counts.
"""

from __future__ import annotations

import enum
import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass
from typing import Any, Sequence

from .records import canonical_json

RUNNER_ENV_VAR = "SCG_RUNNER"
TIMEOUT_GRACE_MS = 200.0


class Status(str, enum.Enum):
    PASS = "pass"
    WRONG_OUTPUT = "wrong-output"
    RUNTIME_ERROR = "runtime-error"
    TIMEOUT = "timeout"
    INFRA_ERROR = "infra-error"


class InfraError(RuntimeError):
    """Harness-side failure; the affected trial must be retried or excluded,
    never counted as a snippet failure."""


@dataclass(frozen=True)
class EntryPoint:
    kind: str  # function-call | stdio-program
    function: str | None = None
    language: str = "python"

    def __post_init__(self):
        if self.kind not in ("function-call", "stdio-program"):
            raise ValueError(f"unknown entry kind {self.kind!r}")
        if self.kind == "function-call" and not self.function:
            raise ValueError("function-call entry requires a function name")

    def wire(self) -> dict:
        return {"kind": self.kind, "function": self.function}


@dataclass(frozen=True)
class ExecLimits:
    wall_timeout_ms: float = 2000.0
    output_cap: int = 65536
    memory_hint: int = 512 * 1024 * 1024

    def __post_init__(self):
        if self.wall_timeout_ms < 1:
            raise ValueError("wall timeout must be >= 1 ms")
        if self.output_cap < 1:
            raise ValueError("output cap must be >= 1 byte")


@dataclass
class TestOutcome:
    __test__ = False  # keep pytest from collecting this as a test class

    status: Status
    actual_output: Any = None
    duration_ms: float = 0.0
    error: str | None = None


def compare_outputs(expected: Any, actual: Any, mode: str = "structural") -> bool:
    """Judge produced output against the reference's expected output.

    stdio-text trims trailing whitespace per line and trailing blank lines;
    leading whitespace and interior spacing stay significant. structural is
    recursive equality with a relative-absolute hybrid float tolerance.
    """
    if mode == "stdio-text":
        return _normalize_text(str(expected)) == _normalize_text(str(actual))
    if mode == "structural":
        return _structural_equal(expected, actual)
    raise ValueError(f"unknown comparison mode {mode!r}")


def _normalize_text(text: str) -> list[str]:
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


FLOAT_TOLERANCE = 1e-6


def _structural_equal(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return abs(a - b) <= FLOAT_TOLERANCE * max(1.0, abs(a), abs(b))
    if isinstance(a, str) or isinstance(b, str):
        return isinstance(a, str) and isinstance(b, str) and a == b
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(
            _structural_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(
            _structural_equal(a[k], b[k]) for k in a)
    return a is None and b is None


class SubprocessExecutor:
    """Runs snippets through per-language worker subprocesses.

    A fresh worker is spawned per execution by default; `reuse_workers=True`
    keeps one worker alive per language (safe because workers execute every
    request in a fresh namespace), trading isolation strength for the spawn
    cost. Runner commands come from the `runners` mapping or, failing that,
    the SCG_RUNNER environment variable.
    """

    def __init__(self, runners: dict[str, Sequence[str]] | None = None,
                 limits: ExecLimits = ExecLimits(),
                 reuse_workers: bool = False):
        self._runners = {k: list(v) for k, v in (runners or {}).items()}
        self.limits = limits
        self.reuse_workers = reuse_workers
        self._pool: dict[str, subprocess.Popen] = {}

    # -- lifecycle --

    def close(self) -> None:
        for proc in self._pool.values():
            _kill(proc)
        self._pool.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- core ops --

    def run_once(self, code: str, entry: EntryPoint, input_value: Any,
                 limits: ExecLimits | None = None) -> TestOutcome:
        """Execute the snippet on one input; no expected-output comparison
        happens here (a completed run reports status `pass`)."""
        limits = limits or self.limits
        argv = self._resolve_runner(entry.language)
        start = time.perf_counter()
        if argv is None:
            return TestOutcome(Status.INFRA_ERROR, error=(
                f"no runner registered for language {entry.language!r} and "
                f"{RUNNER_ENV_VAR} is unset"))
        request = canonical_json(
            {"code": code, "entry": entry.wire(), "input": input_value})
        if self.reuse_workers:
            reply, status, detail = self._request_reused(
                entry.language, argv, request, limits, start)
        else:
            reply, status, detail = self._request_fresh(
                argv, request, limits, start)
        duration = (time.perf_counter() - start) * 1000.0
        if status is not None:
            return TestOutcome(status, duration_ms=duration, error=detail)
        return self._outcome_from_reply(reply, duration)

    def run_test(self, code: str, entry: EntryPoint, test, judge: str,
                 limits: ExecLimits | None = None) -> TestOutcome:
        """Execute one banked test and judge the output against its expected
        value; a completed-but-mismatched run becomes wrong-output."""
        outcome = self.run_once(code, entry, test.input, limits)
        if outcome.status is Status.PASS and not compare_outputs(
                test.expected_output, outcome.actual_output, judge):
            outcome.status = Status.WRONG_OUTPUT
        return outcome

    def run_suite(self, code: str, entry: EntryPoint, tests: Sequence,
                  limits: ExecLimits | None = None,
                  judge: str = "structural") -> tuple[list[TestOutcome], int]:
        """Execute tests in order and count passes.

        wrong-output, runtime-error and timeout count as failures; an
        infra-error aborts the whole suite with InfraError so a harness
        fault can never masquerade as a snippet failure.
        """
        if not tests:
            raise ValueError("run_suite requires a non-empty test list")
        outcomes: list[TestOutcome] = []
        k_hat = 0
        for index, test in enumerate(tests):
            outcome = self.run_test(code, entry, test, judge, limits)
            if outcome.status is Status.INFRA_ERROR:
                raise InfraError(
                    f"infra failure at test {index}: {outcome.error}")
            outcomes.append(outcome)
            if outcome.status is Status.PASS:
                k_hat += 1
        return outcomes, k_hat

    # -- plumbing --

    def _resolve_runner(self, language: str) -> list[str] | None:
        if language in self._runners:
            return self._runners[language]
        env_cmd = os.environ.get(RUNNER_ENV_VAR)
        if env_cmd:
            return shlex.split(env_cmd)
        return None

    def _worker_env(self, limits: ExecLimits) -> dict[str, str]:
        env = dict(os.environ)
        env["SCG_OUTPUT_CAP"] = str(limits.output_cap)
        env["SCG_MEMORY_HINT"] = str(limits.memory_hint)
        return env

    def _request_fresh(self, argv, request: str, limits: ExecLimits, start: float):
        deadline = start + limits.wall_timeout_ms / 1000.0
        try:
            proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True,
                env=self._worker_env(limits))
        except OSError as exc:
            return None, Status.INFRA_ERROR, f"cannot spawn runner: {exc}"
        try:
            out, _ = proc.communicate(
                request + "\n",
                timeout=max(0.001, deadline - time.perf_counter()))
        except subprocess.TimeoutExpired:
            _kill(proc)
            return None, Status.TIMEOUT, None
        line = out.split("\n", 1)[0] if out else ""
        if not line:
            return None, Status.INFRA_ERROR, "runner produced no reply"
        return line, None, None

    def _request_reused(self, language: str, argv, request: str,
                        limits: ExecLimits, start: float):
        deadline = start + limits.wall_timeout_ms / 1000.0
        proc = self._pool.get(language)
        if proc is None or proc.poll() is not None:
            try:
                # bufsize=0: replies are read straight off the fd with a
                # deadline, so the pipe must not be wrapped in a buffer.
                proc = subprocess.Popen(
                    argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL, bufsize=0,
                    env=self._worker_env(limits))
            except OSError as exc:
                return None, Status.INFRA_ERROR, f"cannot spawn runner: {exc}"
            self._pool[language] = proc
        try:
            proc.stdin.write(request.encode() + b"\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError):
            _kill(proc)
            self._pool.pop(language, None)
            return None, Status.INFRA_ERROR, "runner pipe closed"
        line = _readline_deadline(proc.stdout, deadline,
                                  cap=limits.output_cap * 4 + 65536)
        if line is None:
            _kill(proc)
            self._pool.pop(language, None)
            return None, Status.TIMEOUT, None
        if line == b"":
            _kill(proc)
            self._pool.pop(language, None)
            return None, Status.INFRA_ERROR, "runner closed its stream"
        return line.decode("utf-8", "replace"), None, None

    def _outcome_from_reply(self, line: str, duration: float) -> TestOutcome:
        import json
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            return TestOutcome(Status.INFRA_ERROR, duration_ms=duration,
                               error=f"malformed runner reply: {line[:200]!r}")
        if not isinstance(reply, dict) or "status" not in reply:
            return TestOutcome(Status.INFRA_ERROR, duration_ms=duration,
                               error=f"malformed runner reply: {line[:200]!r}")
        if reply["status"] == "ok":
            return TestOutcome(Status.PASS, actual_output=reply.get("output"),
                               duration_ms=duration)
        if reply["status"] == "error":
            return TestOutcome(Status.RUNTIME_ERROR, duration_ms=duration,
                               error=str(reply.get("error", ""))[:2000])
        return TestOutcome(Status.INFRA_ERROR, duration_ms=duration,
                           error=f"unknown reply status {reply['status']!r}")


def _kill(proc: subprocess.Popen) -> None:
    try:
        proc.kill()
        proc.wait(timeout=TIMEOUT_GRACE_MS / 1000.0)
    except Exception:
        pass


def _readline_deadline(stream, deadline: float, cap: int) -> bytes | None:
    """Read one LF-terminated line from a pipe before the deadline.

    Returns None on deadline breach, b"" on EOF, the line otherwise.
    """
    fd = stream.fileno()
    chunks: list[bytes] = []
    size = 0
    while True:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return None
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            return None
        chunk = os.read(fd, 65536)
        if not chunk:
            return b"" if not chunks else b"".join(chunks)
        chunks.append(chunk)
        size += len(chunk)
        if b"\n" in chunk:
            return b"".join(chunks).split(b"\n", 1)[0]
        if size > cap:
            return b""
