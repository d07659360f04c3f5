"""Command-line interface.

Subcommands:
  preprocess --model M.json --out keys/
  prove      --keys keys/ --input in.json --out proof.bin
  verify     --vk keys/vk.bin --io io.json --proof proof.bin
  trace      --model M.json --input in.json

Exit codes: 0 success/accept, 1 proof rejection, 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .graph import GraphError
from .pipeline import Keys, VerificationError, preprocess, prove, verify
from .proof import Reader, Writer
from .trace import generate_trace, lower_graph


def _write_keys(keys: Keys, path: str) -> bytes:
    w = Writer()
    doc = json.dumps(keys.graph_doc, sort_keys=True, separators=(",", ":"))
    w.blob(doc.encode())
    w.u32(len(keys.static_comms))
    for name in sorted(keys.static_comms):
        w.blob(name.encode())
        w.points(keys.static_comms[name].row_commitments)
    data = w.getvalue()
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_keys(path: str) -> Keys:
    from .pcs import PcsCommitment

    with open(path, "rb") as fh:
        r = Reader(fh.read())
    doc = json.loads(r.blob().decode())
    keys = Keys(doc)
    stored = {}
    for _ in range(r.u32()):
        name = r.blob().decode()
        stored[name] = r.points()
    for name, rows in stored.items():
        if name not in keys.static_comms:
            raise ValueError(f"key file carries unknown column {name}")
        if keys.static_comms[name].row_commitments != rows:
            raise ValueError("key file does not match its graph (digest drift)")
    return keys


def _load_input_tensors(path: str, keys: Keys) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    tensors = doc.get("inputs", doc)
    return {name: np.array(vals, dtype=np.int64) for name, vals in tensors.items()}


def cmd_preprocess(args) -> int:
    with open(args.model) as fh:
        doc = json.load(fh)
    keys = preprocess(doc)
    os.makedirs(args.out, exist_ok=True)
    _write_keys(keys, os.path.join(args.out, "pk.bin"))
    _write_keys(keys, os.path.join(args.out, "vk.bin"))
    print(f"keys written to {args.out} (T={keys.T}, digest={keys.digest.hex()[:16]})")
    return 0


def cmd_prove(args) -> int:
    keys = load_keys(os.path.join(args.keys, "pk.bin"))
    inputs = _load_input_tensors(args.input, keys)
    proof_bytes, io = prove(keys, inputs)
    with open(args.out, "wb") as fh:
        fh.write(proof_bytes)
    io_path = args.io_out or args.out + ".io.json"
    with open(io_path, "w") as fh:
        json.dump(io, fh)
    print(f"proof written to {args.out} ({len(proof_bytes) / 1024:.1f} KiB), io to {io_path}")
    return 0


def cmd_verify(args) -> int:
    keys = load_keys(args.vk)
    with open(args.io) as fh:
        io = json.load(fh)
    with open(args.proof, "rb") as fh:
        proof_bytes = fh.read()
    try:
        verify(keys, io, proof_bytes)
    except VerificationError as e:
        print(f"REJECT at {e.stage}: {e}", file=sys.stderr)
        return 1
    print("ACCEPT")
    return 0


def cmd_trace(args) -> int:
    with open(args.model) as fh:
        doc = json.load(fh)
    keys = preprocess(doc)
    inputs = _load_input_tensors(args.input, keys)
    tr = generate_trace(keys.program, inputs, keys.registry)
    tr.dump_jsonl(sys.stdout)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="atlas",
        description="prove and verify quantized-graph inference")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("preprocess", help="derive proving/verifying keys")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("prove", help="prove one inference")
    p.add_argument("--keys", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--io-out", default=None)
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("verify", help="verify a proof against public io")
    p.add_argument("--vk", required=True)
    p.add_argument("--io", required=True)
    p.add_argument("--proof", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("trace", help="dump the execution trace as JSON lines")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(fn=cmd_trace)

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (GraphError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
