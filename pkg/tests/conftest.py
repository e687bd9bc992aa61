"""Shared fixtures: minimal protocol workers and executor factories.

The primary suite must run without the production runner package, so these
fixtures write small stand-in workers to disk: one well-behaved worker that
speaks the protocol correctly, plus deliberately broken variants used to
exercise the infra-error and timeout paths.
"""

import sys
from pathlib import Path

import pytest

from scg.executor import ExecLimits, SubprocessExecutor

REPO_ROOT = Path(__file__).resolve().parent.parent

MINIMAL_WORKER = '''\
import contextlib, io, json, os, sys

def encode(value):
    if isinstance(value, tuple):
        return [encode(v) for v in value]
    if isinstance(value, list):
        return [encode(v) for v in value]
    if isinstance(value, dict):
        return {k: encode(v) for k, v in value.items()}
    return value

def run_one(req, cap):
    ns = {"__name__": "__scg_snippet__"}
    sink = io.StringIO()
    entry = req["entry"]
    if entry["kind"] == "function-call":
        with contextlib.redirect_stdout(sink):
            exec(compile(req["code"], "<snippet>", "exec"), ns)
            result = ns[entry["function"]](*req["input"])
        out = encode(result)
        json.dumps(out)
        return {"status": "ok", "output": out}
    old_stdin = sys.stdin
    sys.stdin = io.StringIO(req["input"])
    try:
        with contextlib.redirect_stdout(sink):
            try:
                exec(compile(req["code"], "<snippet>", "exec"), ns)
            except SystemExit as exc:
                if exc.code not in (0, None):
                    raise
    finally:
        sys.stdin = old_stdin
    return {"status": "ok", "output": sink.getvalue()[:cap]}

def main():
    cap = int(os.environ.get("SCG_OUTPUT_CAP", "65536"))
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        try:
            reply = run_one(req, cap)
        except BaseException as exc:
            reply = {"status": "error",
                     "error": f"{type(exc).__name__}: {exc}"[:cap]}
        sys.stdout.write(json.dumps(reply) + "\\n")
        sys.stdout.flush()

if __name__ == "__main__":
    main()
'''

GARBAGE_WORKER = '''\
import sys
for line in sys.stdin:
    sys.stdout.write("this is not a protocol reply\\n")
    sys.stdout.flush()
'''

SILENT_WORKER = '''\
import sys, time
for line in sys.stdin:
    time.sleep(3600)
'''


def _write_worker(directory: Path, name: str, body: str) -> list[str]:
    path = directory / name
    path.write_text(body)
    return [sys.executable, str(path)]


@pytest.fixture(scope="session")
def worker_cmds(tmp_path_factory):
    directory = tmp_path_factory.mktemp("workers")
    return {
        "good": _write_worker(directory, "worker_good.py", MINIMAL_WORKER),
        "garbage": _write_worker(directory, "worker_garbage.py", GARBAGE_WORKER),
        "silent": _write_worker(directory, "worker_silent.py", SILENT_WORKER),
    }


@pytest.fixture
def executor(worker_cmds):
    with SubprocessExecutor(runners={"python": worker_cmds["good"]},
                            limits=ExecLimits(wall_timeout_ms=4000),
                            reuse_workers=True) as ex:
        yield ex


@pytest.fixture
def fresh_executor(worker_cmds):
    return SubprocessExecutor(runners={"python": worker_cmds["good"]},
                              limits=ExecLimits(wall_timeout_ms=4000),
                              reuse_workers=False)
