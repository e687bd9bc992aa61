"""Schema-driven, seed-deterministic generation of unit tests.

Inputs are decoded from a counter-based pseudo-random stream expanded from a
64-bit seed, so a (schema, seed) pair always decodes to the same value and a
whole test bank is a pure function of (problem, count, base seed). Expected
outputs come from executing the reference solution, which by construction
passes every test in its own bank.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

from .executor import EntryPoint, Status
from .records import canonical_json

GENERATOR_VERSION = "1"

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
MAX_SCHEMA_DEPTH = 8


class SchemaError(ValueError):
    """Raised for schemas that violate their structural invariants."""


class PartialBankError(RuntimeError):
    """Round budget exhausted before the requested bank size was reached.

    Carries the tests gathered so far; the caller decides whether a partial
    bank is acceptable.
    """

    def __init__(self, message: str, tests: list["UnitTest"], rounds_used: int):
        super().__init__(message)
        self.tests = tests
        self.rounds_used = rounds_used


def mix64(x: int) -> int:
    """Avalanche finalizer (splitmix64); a bijection on 64-bit integers."""
    x &= MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & MASK64
    return x ^ (x >> 31)


def mutate_seed(seed: int, round_index: int) -> int:
    """Derive the seed for a generation round.

    Injective in the round for a fixed seed: (round+1) * odd-constant is a
    bijection mod 2^64, xor with the seed keeps it one, and mix64 is a
    bijection, so distinct rounds can never collide.
    """
    if round_index < 0:
        raise ValueError("round index must be non-negative")
    return mix64((seed & MASK64) ^ ((round_index + 1) * _GOLDEN & MASK64))


class _Stream:
    """Deterministic counter-based stream expanded from one seed."""

    def __init__(self, seed: int):
        self._seed = seed & MASK64
        self._counter = 0

    def next_u64(self) -> int:
        self._counter += 1
        return mix64((self._seed + self._counter * _GOLDEN) & MASK64)

    def next_int(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)

    def next_float(self, lo: float, hi: float) -> float:
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + u * (hi - lo)


# --- schema model ---------------------------------------------------------

@dataclass(frozen=True)
class ValueSpec:
    """One node of the recursive input grammar."""

    type: str  # int | float | str | bool | list | tuple
    lo: float | int | None = None
    hi: float | int | None = None
    alphabet: str | None = None
    min_len: int | None = None
    max_len: int | None = None
    elem: "ValueSpec | None" = None
    items: tuple["ValueSpec", ...] = ()


@dataclass(frozen=True)
class LineSpec:
    fields: tuple[ValueSpec, ...]
    sep: str = " "


@dataclass(frozen=True)
class InputSchema:
    kind: str  # typed-arguments | stdio-lines
    params: tuple[ValueSpec, ...] = ()
    lines: tuple[LineSpec, ...] = ()


def _parse_spec(obj: dict, depth: int) -> ValueSpec:
    if depth > MAX_SCHEMA_DEPTH:
        raise SchemaError(f"schema nesting exceeds depth {MAX_SCHEMA_DEPTH}")
    if not isinstance(obj, dict) or "type" not in obj:
        raise SchemaError(f"value spec must be an object with a 'type': {obj!r}")
    t = obj["type"]
    if t == "int":
        lo, hi = int(obj["lo"]), int(obj["hi"])
        if lo > hi:
            raise SchemaError(f"empty int range [{lo}, {hi}]")
        return ValueSpec("int", lo=lo, hi=hi)
    if t == "float":
        lo, hi = float(obj["lo"]), float(obj["hi"])
        if lo > hi:
            raise SchemaError(f"empty float range [{lo}, {hi}]")
        return ValueSpec("float", lo=lo, hi=hi)
    if t == "str":
        alphabet = obj["alphabet"]
        min_len, max_len = int(obj["min_len"]), int(obj["max_len"])
        if not alphabet:
            raise SchemaError("string alphabet must be non-empty")
        if min_len < 0 or min_len > max_len:
            raise SchemaError(f"bad string length range [{min_len}, {max_len}]")
        return ValueSpec("str", alphabet=alphabet, min_len=min_len, max_len=max_len)
    if t == "bool":
        return ValueSpec("bool")
    if t == "list":
        min_len, max_len = int(obj["min_len"]), int(obj["max_len"])
        if min_len < 0 or min_len > max_len:
            raise SchemaError(f"bad list length range [{min_len}, {max_len}]")
        return ValueSpec("list", min_len=min_len, max_len=max_len,
                         elem=_parse_spec(obj["elem"], depth + 1))
    if t == "tuple":
        return ValueSpec("tuple", items=tuple(
            _parse_spec(it, depth + 1) for it in obj["items"]))
    raise SchemaError(f"unknown value spec type {t!r}")


def parse_schema(obj: dict) -> InputSchema:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"schema must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "typed-arguments":
        params = tuple(_parse_spec(p, 1) for p in obj["params"])
        return InputSchema("typed-arguments", params=params)
    if kind == "stdio-lines":
        lines = tuple(
            LineSpec(fields=tuple(_parse_spec(f, 1) for f in ln["fields"]),
                     sep=ln.get("sep", " "))
            for ln in obj["lines"])
        return InputSchema("stdio-lines", lines=lines)
    raise SchemaError(f"unknown schema kind {kind!r}")


def schema_hash(schema_obj: dict) -> str:
    return hashlib.sha256(canonical_json(schema_obj).encode()).hexdigest()[:16]


def _decode_spec(spec: ValueSpec, stream: _Stream) -> Any:
    if spec.type == "int":
        return stream.next_int(spec.lo, spec.hi)
    if spec.type == "float":
        return stream.next_float(spec.lo, spec.hi)
    if spec.type == "bool":
        return bool(stream.next_u64() & 1)
    if spec.type == "str":
        length = stream.next_int(spec.min_len, spec.max_len)
        n = len(spec.alphabet)
        return "".join(spec.alphabet[stream.next_int(0, n - 1)] for _ in range(length))
    if spec.type == "list":
        length = stream.next_int(spec.min_len, spec.max_len)
        return [_decode_spec(spec.elem, stream) for _ in range(length)]
    if spec.type == "tuple":
        return [_decode_spec(it, stream) for it in spec.items]
    raise SchemaError(f"unknown value spec type {spec.type!r}")


def decode_input(schema: InputSchema, seed: int) -> Any:
    """Decode one input value from a seed; identical (schema, seed) pairs
    always decode to the identical value.

    typed-arguments decodes to the argument list; stdio-lines decodes to the
    full stdin text.
    """
    stream = _Stream(seed)
    if schema.kind == "typed-arguments":
        return [_decode_spec(p, stream) for p in schema.params]
    rendered = []
    for line in schema.lines:
        rendered.append(line.sep.join(
            _render_stdio(_decode_spec(f, stream)) for f in line.fields))
    return "\n".join(rendered) + "\n"


def _render_stdio(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, list):
        return " ".join(_render_stdio(v) for v in value)
    return str(value)


def validate_value(schema: InputSchema, value: Any) -> bool:
    """Check that a decoded input satisfies every range constraint."""
    if schema.kind == "stdio-lines":
        return isinstance(value, str)
    if not isinstance(value, list) or len(value) != len(schema.params):
        return False
    return all(_validate_spec(s, v) for s, v in zip(schema.params, value))


def _validate_spec(spec: ValueSpec, value: Any) -> bool:
    if spec.type == "int":
        return isinstance(value, int) and not isinstance(value, bool) \
            and spec.lo <= value <= spec.hi
    if spec.type == "float":
        return isinstance(value, float) and spec.lo <= value <= spec.hi
    if spec.type == "bool":
        return isinstance(value, bool)
    if spec.type == "str":
        return (isinstance(value, str)
                and spec.min_len <= len(value) <= spec.max_len
                and all(c in spec.alphabet for c in value))
    if spec.type == "list":
        return (isinstance(value, list)
                and spec.min_len <= len(value) <= spec.max_len
                and all(_validate_spec(spec.elem, v) for v in value))
    if spec.type == "tuple":
        return (isinstance(value, list) and len(value) == len(spec.items)
                and all(_validate_spec(s, v) for s, v in zip(spec.items, value)))
    return False


# --- unit tests and banks -------------------------------------------------

@dataclass(frozen=True)
class UnitTest:
    """One input state with the reference solution's output state."""

    input: Any
    expected_output: Any
    seed_round: int = -1
    reference_verified: bool = True


@dataclass
class GenerationFailure:
    """The reference crashed or timed out on a decoded input; the input is
    retained for diagnostics and no test is produced."""

    input: Any
    status: str
    detail: str = ""


@dataclass
class TestBank:
    __test__ = False  # keep pytest from collecting this as a test class

    problem_id: str
    tests: list[UnitTest] = field(default_factory=list)
    base_seed: int = 0
    schema_hash: str = ""
    generator_version: str = GENERATOR_VERSION

    def __len__(self) -> int:
        return len(self.tests)


def generate_unit_test(reference: str, entry: EntryPoint, schema: InputSchema,
                       seed: int, executor, *, seed_round: int = -1
                       ) -> UnitTest | GenerationFailure:
    """Decode an input from the seed and run the reference on it.

    Returns the (input, output) pair on success; a failure record when the
    reference itself errors or times out on this input.
    """
    value = decode_input(schema, seed)
    outcome = executor.run_once(reference, entry, value)
    if outcome.status is Status.PASS:
        return UnitTest(input=value, expected_output=outcome.actual_output,
                        seed_round=seed_round, reference_verified=True)
    return GenerationFailure(input=value, status=outcome.status.value,
                             detail=outcome.error or "")


def build_test_bank(problem, count: int, base_seed: int, executor) -> TestBank:
    """Fuzz a reproducible bank of `count` deduplicated unit tests.

    Iterates seed-mutation rounds, skipping reference failures and duplicate
    inputs, until the bank is full or the round budget (50x count) runs out,
    in which case a PartialBankError carries whatever was gathered.
    """
    if count < 1:
        raise ValueError("bank size must be >= 1")
    schema = problem.schema
    bank = TestBank(problem_id=problem.problem_id, base_seed=base_seed,
                    schema_hash=schema_hash(problem.schema_obj))
    seen: set[str] = set()
    budget = 50 * count
    for round_index in range(budget):
        seed = mutate_seed(base_seed, round_index)
        result = generate_unit_test(problem.reference, problem.entry, schema,
                                    seed, executor, seed_round=round_index)
        if isinstance(result, GenerationFailure):
            continue
        key = canonical_json(result.input)
        if key in seen:
            continue
        seen.add(key)
        bank.tests.append(result)
        if len(bank.tests) == count:
            return bank
    raise PartialBankError(
        f"gathered {len(bank.tests)} of {count} tests for "
        f"{problem.problem_id!r} within {budget} rounds",
        tests=bank.tests, rounds_used=budget)


def verify_bank(bank: TestBank, problem, executor, sample: int = 50) -> None:
    """Re-execute the reference on a prefix of the bank and require that it
    reproduces every expected output (the bank's provenance invariant)."""
    for test in bank.tests[:sample]:
        outcome = executor.run_once(problem.reference, problem.entry, test.input)
        if outcome.status is not Status.PASS:
            raise AssertionError(
                f"reference failed on banked input {test.input!r}: {outcome.status}")
        from .executor import compare_outputs
        if not compare_outputs(test.expected_output, outcome.actual_output,
                               problem.judge):
            raise AssertionError(
                f"reference no longer reproduces expected output for "
                f"{test.input!r}")


# --- serialization --------------------------------------------------------

def bank_to_rows(bank: TestBank) -> list[dict]:
    return [{"problem_id": bank.problem_id, "index": i, "input": t.input,
             "expected_output": t.expected_output, "seed_round": t.seed_round}
            for i, t in enumerate(bank.tests)]


def banks_from_rows(rows: list[dict]) -> dict[str, TestBank]:
    banks: dict[str, TestBank] = {}
    for row in rows:
        bank = banks.setdefault(row["problem_id"], TestBank(row["problem_id"]))
        bank.tests.append(UnitTest(input=row["input"],
                                   expected_output=row["expected_output"],
                                   seed_round=row["seed_round"]))
    return banks
