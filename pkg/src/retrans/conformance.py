"""Protocol conformance suite for external decoder adapters.

Drives a decoder subprocess through the wire protocol and checks the
behaviors the session loop depends on: the handshake, the response schema,
forced-prefix honoring, content under the gamma=0/1 boundary policies,
determinism, and graceful handling of malformed input and shutdown.

The content checks assume the adapter under test is echo-style (transcript
reproduces the revealed source tokens; translation maps them through a word
dictionary with unknown words passed through), which is the contract of the
reference adapter.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass

PROTOCOL_VERSION = 1

_CHUNKS = [
    {"t0": 0.0, "t1": 0.5, "tokens": ["hund", "und"]},
    {"t0": 0.5, "t1": 1.0, "tokens": ["katze"]},
]


@dataclass(frozen=True)
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


class _Pipe:
    def __init__(self, command: str):
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def send_line(self, line: str) -> None:
        assert self.proc.stdin is not None
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, message: dict) -> None:
        self.send_line(json.dumps(message))

    def recv(self, timeout: float = 10.0) -> dict:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if not line:
            raise EOFError("decoder closed its output")
        return json.loads(line)

    def close(self) -> int:
        if self.proc.poll() is None:
            try:
                self.send({"type": "shutdown"})
            except (BrokenPipeError, OSError):
                pass
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                return -9
        return self.proc.returncode


def _decode_request(
    session: str,
    gamma: float = 0.0,
    forced_transcript: list[str] | None = None,
    forced_translation: list[str] | None = None,
) -> dict:
    return {
        "type": "decode",
        "session": session,
        "gamma": gamma,
        "beam": 1,
        "max_tokens": 64,
        "source_chunks": _CHUNKS,
        "forced_transcript": forced_transcript or [],
        "forced_translation": forced_translation or [],
    }


def run_conformance(command: str, dictionary: dict[str, str] | None = None) -> list[ConformanceCheck]:
    """Run every conformance check against the adapter launched by ``command``.

    ``dictionary`` is the word map the adapter was configured with (used for
    the content checks); omit it to skip exact-content assertions.
    """
    checks: list[ConformanceCheck] = []

    def record(name: str, passed: bool, detail: str = "") -> None:
        checks.append(ConformanceCheck(name, passed, detail))

    source_tokens = [t for c in _CHUNKS for t in c["tokens"]]
    translate = (lambda t: dictionary.get(t, t)) if dictionary is not None else None

    pipe = _Pipe(command)
    try:
        pipe.send({"type": "hello", "protocol": PROTOCOL_VERSION})
        try:
            reply = pipe.recv()
            record(
                "handshake",
                reply.get("type") == "hello" and reply.get("protocol") == PROTOCOL_VERSION,
                f"got {reply}",
            )
        except (EOFError, json.JSONDecodeError) as exc:
            record("handshake", False, str(exc))
            return checks

        # Response schema.
        pipe.send(_decode_request("schema"))
        reply = pipe.recv()
        schema_ok = (
            reply.get("type") == "result"
            and reply.get("session") == "schema"
            and isinstance(reply.get("transcript"), list)
            and all(isinstance(t, str) for t in reply.get("transcript", []))
            and isinstance(reply.get("translation"), list)
            and all(isinstance(t, str) for t in reply.get("translation", []))
            and isinstance(reply.get("score"), (int, float))
        )
        record("schema", schema_ok, f"got {reply}")

        # Forced prefixes must be literal prefixes of the output streams.
        forced_st = source_tokens[:1]
        forced_tt = ["ZWANG"]
        pipe.send(_decode_request("forced", forced_transcript=forced_st, forced_translation=forced_tt))
        reply = pipe.recv()
        record(
            "forced-prefix",
            reply.get("transcript", [])[: len(forced_st)] == forced_st
            and reply.get("translation", [])[: len(forced_tt)] == forced_tt,
            f"got {reply}",
        )

        # gamma boundary policies: content must match the echo contract.
        if translate is not None:
            expected_tt = [translate(t) for t in source_tokens]
            for gamma, name in ((0.0, "gamma-0"), (1.0, "gamma-1")):
                pipe.send(_decode_request(name, gamma=gamma))
                reply = pipe.recv()
                record(
                    name,
                    reply.get("transcript") == source_tokens
                    and reply.get("translation") == expected_tt,
                    f"got {reply}",
                )

        # Determinism: identical requests, identical responses.
        replies = []
        for _ in range(2):
            pipe.send(_decode_request("det"))
            replies.append(pipe.recv())
        record("determinism", replies[0] == replies[1], f"got {replies}")

        # Malformed input gets an error reply and the loop survives.
        pipe.send_line("this is not json {")
        reply = pipe.recv()
        survived_error = reply.get("type") == "error"
        pipe.send(_decode_request("after-error"))
        reply = pipe.recv()
        record(
            "malformed-input",
            survived_error and reply.get("type") == "result" and reply.get("session") == "after-error",
            f"got {reply}",
        )
    except (EOFError, json.JSONDecodeError, BrokenPipeError, OSError) as exc:
        record("transport", False, f"adapter died mid-suite: {exc}")
        pipe.close()
        return checks

    code = pipe.close()
    record("shutdown", code == 0, f"exit code {code}")
    return checks


def all_passed(checks: list[ConformanceCheck]) -> bool:
    return all(c.passed for c in checks)
