"""Python snippet worker for the line-delimited runner protocol.

One JSON request per stdin line ({code, entry, input}), one JSON reply per
request ({status: "ok", output} or {status: "error", error}). The worker
never exits because a snippet failed; it exits 0 on end of input and
nonzero only when the protocol itself breaks (the orchestrator maps that to
an infra error). Timeouts are the orchestrator's job, not ours.

Self-contained on purpose: launchable as `scg-runner`, `python -m
scg_runner`, or by direct path to this file with no installation at all.

Environment: SCG_OUTPUT_CAP caps reply payload bytes; SCG_MEMORY_HINT is
applied as a best-effort address-space rlimit.
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import sys

DEFAULT_OUTPUT_CAP = 65536


def _apply_memory_hint() -> None:
    hint = os.environ.get("SCG_MEMORY_HINT")
    if not hint:
        return
    try:
        import resource
        limit = int(hint)
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except (ValueError, OSError, ImportError):
        pass  # advisory only


def _encode(value):
    """Normalize a snippet return value for the wire (tuples become lists)."""
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


def _run_function(code: str, function: str, args, sink: io.StringIO):
    namespace = {"__name__": "__scg_snippet__"}
    with contextlib.redirect_stdout(sink):
        exec(compile(code, "<snippet>", "exec"), namespace)
        if function not in namespace:
            raise NameError(f"entry function {function!r} not defined")
        return namespace[function](*args)


def _run_stdio(code: str, stdin_text: str, sink: io.StringIO) -> None:
    namespace = {"__name__": "__main__"}
    old_stdin = sys.stdin
    sys.stdin = io.StringIO(stdin_text)
    try:
        with contextlib.redirect_stdout(sink):
            try:
                exec(compile(code, "<snippet>", "exec"), namespace)
            except SystemExit as exc:
                # A clean exit is a normal way for a program to finish.
                if exc.code not in (0, None):
                    raise
    finally:
        sys.stdin = old_stdin


def handle_request(request: dict, output_cap: int) -> dict:
    code = request["code"]
    entry = request["entry"]
    sink = io.StringIO()
    try:
        if entry["kind"] == "function-call":
            result = _run_function(code, entry["function"], request["input"],
                                   sink)
            encoded = _encode(result)
            payload = json.dumps(encoded)
            if len(payload) > output_cap:
                return {"status": "error",
                        "error": f"output exceeds cap ({len(payload)} "
                                 f"> {output_cap} bytes)"}
            return {"status": "ok", "output": encoded}
        if entry["kind"] == "stdio-program":
            _run_stdio(code, request["input"], sink)
            return {"status": "ok", "output": sink.getvalue()[:output_cap]}
        return {"status": "error", "error": f"unknown entry kind "
                                            f"{entry.get('kind')!r}"}
    except BaseException as exc:  # snippet failures must never kill us
        message = f"{type(exc).__name__}: {exc}"
        return {"status": "error", "error": message[:output_cap]}


def main() -> int:
    _apply_memory_hint()
    try:
        output_cap = int(os.environ.get("SCG_OUTPUT_CAP", DEFAULT_OUTPUT_CAP))
    except ValueError:
        output_cap = DEFAULT_OUTPUT_CAP
    stdin = sys.stdin
    stdout = sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict) or "code" not in request \
                    or "entry" not in request or "input" not in request:
                raise ValueError("request missing required fields")
        except (json.JSONDecodeError, ValueError) as exc:
            print(f"scg-runner: malformed request: {exc}", file=sys.stderr)
            return 2
        reply = handle_request(request, output_cap)
        try:
            stdout.write(json.dumps(reply) + "\n")
        except (TypeError, ValueError):
            stdout.write(json.dumps(
                {"status": "error", "error": "unencodable output"}) + "\n")
        stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
