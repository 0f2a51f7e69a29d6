#!/usr/bin/env python3
"""Toy external decoder processes for wire-protocol tests.

Modes:
  good        honor the protocol fully (echo transcript + dictionary translation)
  bad-prefix  ignore forced prefixes (must be rejected by the client)
  crash       die with a nonzero exit after answering one decode
"""

import argparse
import json
import sys


def load_dictionary(path):
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip():
                src, tgt = line.split("\t")
                table[src] = tgt
    return table


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", default="good", choices=("good", "bad-prefix", "crash"))
    parser.add_argument("--dict", default=None)
    args = parser.parse_args()
    dictionary = load_dictionary(args.dict) if args.dict else {}

    answered = 0
    for line in sys.stdin:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            print(json.dumps({"type": "error", "message": "bad json"}), flush=True)
            continue
        kind = msg.get("type")
        if kind == "hello":
            print(json.dumps({"type": "hello", "protocol": 1}), flush=True)
        elif kind == "shutdown":
            return 0
        elif kind == "decode":
            revealed = [t for c in msg["source_chunks"] for t in c["tokens"]]
            transcript = list(revealed)
            translation = [dictionary.get(t, t) for t in revealed]
            if args.mode != "bad-prefix":
                forced_st = msg["forced_transcript"]
                forced_tt = msg["forced_translation"]
                transcript = forced_st + transcript[len(forced_st):]
                translation = forced_tt + translation[len(forced_tt):]
            print(
                json.dumps(
                    {
                        "type": "result",
                        "session": msg["session"],
                        "transcript": transcript,
                        "translation": translation,
                        "score": 0.0,
                    }
                ),
                flush=True,
            )
            answered += 1
            if args.mode == "crash" and answered >= 1:
                return 1
        else:
            print(json.dumps({"type": "error", "message": f"unknown type {kind!r}"}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
