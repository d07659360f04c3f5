"""Binary proof and key serialization.

Layout: magic "ATLS", u16 version, then length-prefixed sections in DAG
order.  Field elements are 32-byte big-endian; group elements 33-byte
compressed points; vectors carry a u32 count.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct

from .curve import GroupElement
from .field import P
from .sumcheck import RoundMessage

MAGIC = b"ATLS"
VERSION = 1


class Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def u16(self, v):
        self.buf.write(struct.pack(">H", v))

    def u32(self, v):
        self.buf.write(struct.pack(">I", v))

    def field(self, v):
        self.buf.write((int(v) % P).to_bytes(32, "big"))

    def fields(self, vs):
        self.u32(len(vs))
        for v in vs:
            self.field(v)

    def point(self, pt: GroupElement):
        self.buf.write(pt.to_bytes())

    def points(self, pts):
        self.u32(len(pts))
        for pt in pts:
            self.point(pt)

    def blob(self, data: bytes):
        self.u32(len(data))
        self.buf.write(data)

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class Reader:
    def __init__(self, data: bytes):
        self.buf = io.BytesIO(data)

    def u16(self) -> int:
        return struct.unpack(">H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def field(self) -> int:
        v = int.from_bytes(self._take(32), "big")
        if v >= P:
            raise ValueError("field element out of range")
        return v

    def fields(self) -> list:
        return [self.field() for _ in range(self.u32())]

    def point(self) -> GroupElement:
        return GroupElement.from_bytes(self._take(33))

    def points(self) -> list:
        return [self.point() for _ in range(self.u32())]

    def blob(self) -> bytes:
        return self._take(self.u32())

    def _take(self, n: int) -> bytes:
        data = self.buf.read(n)
        if len(data) != n:
            raise ValueError("truncated proof")
        return data


class AtlasProof:
    """Serialized DAG of stage proofs, commitments, and the folding proof."""

    def __init__(self):
        self.witness_commitments = {}   # column name -> [row commitments]
        self.stage_messages = []        # per level: [RoundMessage (commitment only)]
        self.stage_labels = []
        self.pcs_opening = None         # HidingOpening
        self.blindfold = None           # BlindfoldProof

    def to_bytes(self) -> bytes:
        from .blindfold import BlindfoldProof
        from .pcs import HidingOpening

        w = Writer()
        w.buf.write(MAGIC)
        w.u16(VERSION)

        w.u32(len(self.witness_commitments))
        for name, rows in self.witness_commitments.items():
            w.blob(name.encode())
            w.points(rows)

        w.u32(len(self.stage_messages))
        for label, msgs in zip(self.stage_labels, self.stage_messages):
            w.blob(label)
            w.u32(len(msgs))
            for m in msgs:
                w.point(m.commitment)

        op = self.pcs_opening
        w.point(op.mask_commitment)
        w.point(op.mask_value_commitment)
        w.point(op.value_commitment)
        w.fields(op.masked_row)
        w.field(op.masked_row_blind)
        w.field(op.blind_response)

        bf = self.blindfold
        for inst in (bf.inst1, bf.inst2):
            w.point(inst.e_comm)
            w.field(inst.u)
            w.point(inst.w_comm)
            w.fields(inst.x)
            w.points(inst.round_comms)
            w.points(inst.eval_comms)
        w.point(bf.t_comm)
        w.fields(bf.w_folded)
        w.field(bf.r_w)
        w.field(bf.r_e)
        w.fields(bf.round_blinds)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AtlasProof":
        from .blindfold import BlindfoldProof, RelaxedInstance
        from .pcs import HidingOpening

        r = Reader(data)
        if r._take(4) != MAGIC:
            raise ValueError("bad magic bytes")
        if r.u16() != VERSION:
            raise ValueError("unsupported proof version")
        proof = cls()
        for _ in range(r.u32()):
            name = r.blob().decode()
            proof.witness_commitments[name] = r.points()
        for _ in range(r.u32()):
            label = r.blob()
            msgs = [RoundMessage(None, commitment=r.point()) for _ in range(r.u32())]
            proof.stage_labels.append(label)
            proof.stage_messages.append(msgs)
        proof.pcs_opening = HidingOpening(
            r.point(), r.point(), r.point(), r.fields(), r.field(), r.field())

        def read_inst():
            return RelaxedInstance(r.point(), r.field(), r.point(), r.fields(),
                                   r.points(), r.points())

        i1, i2 = read_inst(), read_inst()
        t_comm = r.point()
        w_folded = r.fields()
        proof.blindfold = BlindfoldProof(i1, i2, t_comm, w_folded,
                                         r.field(), r.field(), r.fields())
        return proof


def digest_json(doc) -> bytes:
    return hashlib.sha256(json.dumps(doc, sort_keys=True,
                                     separators=(",", ":")).encode()).digest()
