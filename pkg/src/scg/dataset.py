"""Problem records: a coding task with its reference solution and schema."""

from __future__ import annotations

from dataclasses import dataclass, field

from .executor import EntryPoint
from .fuzzgen import InputSchema, parse_schema
from .records import read_jsonl


@dataclass
class Problem:
    problem_id: str
    reference: str
    entry: EntryPoint
    schema_obj: dict
    schema: InputSchema = field(init=False)
    prompt: str = ""

    def __post_init__(self):
        self.schema = parse_schema(self.schema_obj)

    @property
    def judge(self) -> str:
        return "stdio-text" if self.entry.kind == "stdio-program" else "structural"


def problem_from_row(row: dict) -> Problem:
    entry_obj = row["entry"]
    entry = EntryPoint(kind=entry_obj["kind"],
                       function=entry_obj.get("function"),
                       language=entry_obj.get("language", "python"))
    return Problem(problem_id=row["problem_id"], reference=row["reference"],
                   entry=entry, schema_obj=row["schema"],
                   prompt=row.get("prompt", ""))


def load_problems(path) -> list[Problem]:
    """Load a dataset file; problems with missing or invalid schemas are
    reported together so one bad record does not mask the rest."""
    problems = []
    errors = []
    for row in read_jsonl(path):
        pid = row.get("problem_id", "<missing id>")
        try:
            if "schema" not in row:
                raise ValueError("missing input schema")
            problems.append(problem_from_row(row))
        except (KeyError, ValueError) as exc:
            errors.append(f"{pid}: {exc}")
    if errors:
        raise ValueError("invalid problems in dataset:\n  " + "\n  ".join(errors))
    return problems
