"""Protocol conformance tests driven over raw pipes.

These tests talk to the worker exactly the way the orchestrator does: one
JSON request line in, one JSON reply line out, nothing shared in-process.
"""

import json
import subprocess
import sys
from pathlib import Path

WORKER = Path(__file__).resolve().parent.parent / "src" / "scg_runner" / "worker.py"


def run_worker(requests, env_extra=None, timeout=10):
    """Feed request lines to a fresh worker and collect reply lines."""
    import os
    env = dict(os.environ)
    env.update(env_extra or {})
    payload = "".join(json.dumps(r) + "\n" for r in requests)
    proc = subprocess.run(
        [sys.executable, str(WORKER)], input=payload, capture_output=True,
        text=True, timeout=timeout, env=env)
    replies = [json.loads(line) for line in proc.stdout.splitlines() if line]
    return proc.returncode, replies, proc.stderr


def fn_request(code, function="f", args=(5,)):
    return {"code": code, "entry": {"kind": "function-call",
                                    "function": function},
            "input": list(args)}


def stdio_request(code, stdin_text):
    return {"code": code, "entry": {"kind": "stdio-program",
                                    "function": None},
            "input": stdin_text}


class TestFunctionEntries:
    def test_identity(self):
        rc, replies, _ = run_worker([fn_request("def f(x):\n    return x")])
        assert rc == 0
        assert replies == [{"status": "ok", "output": 5}]

    def test_missing_entry_name(self):
        rc, replies, _ = run_worker([fn_request("def g(x):\n    return x")])
        assert rc == 0
        assert replies[0]["status"] == "error"
        assert "f" in replies[0]["error"]

    def test_raising_function(self):
        rc, replies, _ = run_worker(
            [fn_request("def f(x):\n    raise RuntimeError('boom')")])
        assert rc == 0
        assert replies[0]["status"] == "error"
        assert "boom" in replies[0]["error"]

    def test_tuple_return_becomes_list(self):
        rc, replies, _ = run_worker(
            [fn_request("def f(x):\n    return (x, x + 1)")])
        assert replies[0] == {"status": "ok", "output": [5, 6]}

    def test_unencodable_return_is_error(self):
        rc, replies, _ = run_worker(
            [fn_request("def f(x):\n    return {x}")])
        assert replies[0]["status"] == "error"

    def test_sys_exit_inside_function_is_error_not_death(self):
        rc, replies, _ = run_worker([
            fn_request("import sys\ndef f(x):\n    sys.exit(3)"),
            fn_request("def f(x):\n    return x"),
        ])
        assert rc == 0
        assert replies[0]["status"] == "error"
        assert replies[1] == {"status": "ok", "output": 5}

    def test_prints_cannot_reach_protocol_stream(self):
        rc, replies, _ = run_worker(
            [fn_request("def f(x):\n    print('junk')\n    return x")])
        assert replies == [{"status": "ok", "output": 5}]


class TestStdioEntries:
    def test_echo_program(self):
        rc, replies, _ = run_worker(
            [stdio_request("print(input())", "hello\nworld\n")])
        assert rc == 0
        assert replies[0] == {"status": "ok", "output": "hello\n"}

    def test_first_line_only_semantics(self):
        rc, replies, _ = run_worker(
            [stdio_request("print(input())", "first\nsecond\n")])
        assert replies[0]["output"] == "first\n"

    def test_clean_sys_exit_is_ok(self):
        code = "print('done')\nimport sys\nsys.exit(0)"
        rc, replies, _ = run_worker([stdio_request(code, "")])
        assert replies[0] == {"status": "ok", "output": "done\n"}

    def test_nonzero_sys_exit_is_error(self):
        rc, replies, _ = run_worker(
            [stdio_request("import sys\nsys.exit(9)", "")])
        assert replies[0]["status"] == "error"

    def test_crash_reported(self):
        rc, replies, _ = run_worker(
            [stdio_request("x = 1 // 0", "")])
        assert replies[0]["status"] == "error"
        assert "ZeroDivisionError" in replies[0]["error"]


class TestProtocolDiscipline:
    def test_one_reply_per_request(self):
        requests = [fn_request("def f(x):\n    return x", args=(i,))
                    for i in range(20)]
        rc, replies, _ = run_worker(requests)
        assert rc == 0
        assert len(replies) == 20
        assert [r["output"] for r in replies] == list(range(20))

    def test_namespace_freshness(self):
        # The first snippet plants module state; the second must not see it.
        rc, replies, _ = run_worker([
            fn_request("LEAK = 41\ndef f(x):\n    return LEAK + x", args=(1,)),
            fn_request("def f(x):\n    return LEAK + x", args=(1,)),
        ])
        assert replies[0] == {"status": "ok", "output": 42}
        assert replies[1]["status"] == "error"
        assert "LEAK" in replies[1]["error"]

    def test_malformed_request_exits_nonzero(self):
        import os
        proc = subprocess.run([sys.executable, str(WORKER)],
                              input="this is not json\n",
                              capture_output=True, text=True, timeout=10,
                              env=dict(os.environ))
        assert proc.returncode != 0
        assert "malformed" in proc.stderr

    def test_clean_shutdown_on_eof(self):
        rc, replies, _ = run_worker([])
        assert rc == 0
        assert replies == []

    def test_blank_lines_ignored(self):
        import os
        payload = "\n" + json.dumps(fn_request("def f(x):\n    return x")) + "\n\n"
        proc = subprocess.run([sys.executable, str(WORKER)], input=payload,
                              capture_output=True, text=True, timeout=10,
                              env=dict(os.environ))
        assert proc.returncode == 0
        assert len(proc.stdout.splitlines()) == 1


class TestOutputCap:
    def test_stdio_output_truncated(self):
        code = "print('x' * 10000)"
        rc, replies, _ = run_worker([stdio_request(code, "")],
                                    env_extra={"SCG_OUTPUT_CAP": "100"})
        assert replies[0]["status"] == "ok"
        assert len(replies[0]["output"]) == 100

    def test_oversized_function_output_is_error(self):
        code = "def f(x):\n    return 'x' * 10000"
        rc, replies, _ = run_worker([fn_request(code)],
                                    env_extra={"SCG_OUTPUT_CAP": "100"})
        assert replies[0]["status"] == "error"
        assert "cap" in replies[0]["error"]

    def test_error_text_truncated(self):
        code = "def f(x):\n    raise ValueError('e' * 10000)"
        rc, replies, _ = run_worker([fn_request(code)],
                                    env_extra={"SCG_OUTPUT_CAP": "100"})
        assert replies[0]["status"] == "error"
        assert len(replies[0]["error"]) == 100
