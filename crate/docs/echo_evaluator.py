#!/usr/bin/env python3
"""Reference evaluator for the subprocess protocol.

Loss = number of +1 bits in the requested point (the resource is ignored).

    echo_evaluator.py --n 8                 # answer each request immediately
    echo_evaluator.py --n 8 --reverse-pairs # answer requests two at a time, newest first
    echo_evaluator.py --n 8 --nan           # reply with a NaN loss
    echo_evaluator.py --n 8 --fail-odd      # reply {"error": ...} for odd ids
"""
import argparse
import json
import sys


def answer(req, args):
    if args.nan:
        # json.dumps writes a bare NaN token, which is not valid JSON.
        return json.dumps({"id": req["id"], "loss": float("nan")})
    if args.fail_odd and req["id"] % 2 == 1:
        return json.dumps({"id": req["id"], "error": "odd request rejected"})
    return json.dumps({"id": req["id"], "loss": sum(1 for b in req["point"] if b == 1)})


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, required=True)
    ap.add_argument("--reverse-pairs", action="store_true")
    ap.add_argument("--nan", action="store_true")
    ap.add_argument("--fail-odd", action="store_true")
    args = ap.parse_args()

    print(json.dumps({"proto": 1, "n": args.n}), flush=True)
    held = []
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        if args.reverse_pairs:
            held.append(req)
            if len(held) == 2:
                for r in reversed(held):
                    print(answer(r, args), flush=True)
                held = []
        else:
            print(answer(req, args), flush=True)
    for r in reversed(held):
        print(answer(r, args), flush=True)


if __name__ == "__main__":
    main()
