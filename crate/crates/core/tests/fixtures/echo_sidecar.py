"""Test recommender speaking the line-delimited JSON protocol.

usage: echo_sidecar.py TABLE [MODE]

TABLE maps "function:kind:name" to a ranked list of types. MODE is one of
  normal   answer each batch in order
  reverse  answer each batch in reverse order
  noisy    write a malformed line and a stray id before each answer
  silent   read requests and never answer
  exit     exit after reading the first request
"""

import json
import sys


def answer(table, req):
    kinds = [req["kind"]] + (["arg"] if req["kind"] == "argument" else [])
    types = []
    for kind in kinds:
        key = "%s:%s:%s" % (req["function"], kind, req["name"])
        if key in table:
            types = table[key]
            break
    types = types[: req["k"]]
    n = max(len(types), 1)
    cands = [{"type": t, "score": 1.0 - i / n} for i, t in enumerate(types)]
    return {"id": req["id"], "candidates": cands}


def main():
    with open(sys.argv[1]) as f:
        table = json.load(f)
    mode = sys.argv[2] if len(sys.argv) > 2 else "normal"
    pending = []
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except ValueError as e:
            print(json.dumps({"id": None, "error": str(e)}), flush=True)
            continue
        if mode == "exit":
            return
        if mode == "silent":
            continue
        pending.append(req)
        if mode == "reverse":
            # Batches arrive as consecutive ids; answer once a batch of two
            # or more has been read, backwards.
            if len(pending) < 2:
                continue
            out = [answer(table, r) for r in reversed(pending)]
        else:
            out = [answer(table, r) for r in pending]
        if mode == "noisy":
            print("{not json", flush=True)
            print(json.dumps({"id": 10**9, "candidates": []}), flush=True)
        for o in out:
            print(json.dumps(o), flush=True)
        pending = []


if __name__ == "__main__":
    main()
