"""Instance data model, native file format, random generation, PrefLib import.

A kidney-exchange instance is a digraph over patient-donor pairs (PDPs) and
non-directed donors (NDDs).  Arcs point from a donor's vertex to a compatible
patient's vertex, so NDDs never receive arcs.  ``K`` caps the number of
transplants in a cycle, ``L`` the number of transplants in a chain
(``L = None`` means unbounded chains).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

Arc = Tuple[int, int, float]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance.

    ``pdps`` and ``ndds`` are disjoint id lists; ``arcs`` is a list of
    ``(u, v, w)`` triples with ``v`` always a PDP.
    """

    pdps: Tuple[int, ...]
    ndds: Tuple[int, ...]
    arcs: Tuple[Arc, ...]
    K: int
    L: Optional[int]  # None encodes unbounded chain length

    @property
    def n_vertices(self) -> int:
        return len(self.pdps) + len(self.ndds)

    def arc_weight(self, u: int, v: int) -> float:
        for (a, b, w) in self.arcs:
            if a == u and b == v:
                return w
        raise KeyError((u, v))

    def chain_cap(self) -> int:
        """Effective chain transplant cap (chains are simple: at most |pdps|)."""
        if self.L is None:
            return len(self.pdps)
        return min(self.L, len(self.pdps))


class InstanceFormatError(ValueError):
    """Raised for malformed instance documents, with a location hint."""


def make_instance(pdps: Iterable[int], ndds: Iterable[int], arcs: Iterable[Arc],
                  K: int, L: Optional[int]) -> Instance:
    """Construct an Instance and raise on invariant violations."""
    inst = Instance(tuple(pdps), tuple(ndds), tuple((int(u), int(v), float(w)) for u, v, w in arcs),
                    int(K), None if L is None else int(L))
    problems = validate(inst)
    if problems:
        raise InstanceFormatError("; ".join(problems))
    return inst


def validate(inst: Instance) -> list[str]:
    """Return one diagnostic string per violated instance invariant."""
    out: list[str] = []
    pdpset, nddset = set(inst.pdps), set(inst.ndds)
    overlap = pdpset & nddset
    if overlap:
        out.append(f"vertices {sorted(overlap)} listed as both PDP and NDD")
    if len(pdpset) != len(inst.pdps):
        out.append("duplicate ids in pdps")
    if len(nddset) != len(inst.ndds):
        out.append("duplicate ids in ndds")
    for v in list(inst.pdps) + list(inst.ndds):
        if v < 0:
            out.append(f"negative vertex id {v}")
    known = pdpset | nddset
    seen_pairs = set()
    for (u, v, w) in inst.arcs:
        if u == v:
            out.append(f"self-loop at vertex {u}")
        if u not in known:
            out.append(f"arc ({u},{v}) leaves unknown vertex {u}")
        if v not in known:
            out.append(f"arc ({u},{v}) enters unknown vertex {v}")
        elif v in nddset:
            out.append(f"arc ({u},{v}) enters NDD {v}")
        if (u, v) in seen_pairs:
            out.append(f"duplicate arc ({u},{v})")
        seen_pairs.add((u, v))
    if inst.pdps and inst.K < 2:
        out.append(f"K={inst.K} but cycles need at least 2 transplants")
    if inst.L is not None and inst.L < 0:
        out.append(f"L={inst.L} is negative")
    return out


# ---------------------------------------------------------------------------
# Native document format (canonical JSON, fixed field order, arcs sorted)
# ---------------------------------------------------------------------------

def write_native(inst: Instance) -> str:
    """Serialize to the canonical native document (byte-stable)."""
    doc = {
        "version": FORMAT_VERSION,
        "K": inst.K,
        "L": inst.L,
        "pdps": list(inst.pdps),
        "ndds": list(inst.ndds),
        "arcs": [{"u": u, "v": v, "w": w}
                 for (u, v, w) in sorted(inst.arcs, key=lambda a: (a[0], a[1]))],
    }
    return json.dumps(doc, indent=1) + "\n"


def parse_native(text: str) -> Instance:
    """Parse the native document format; errors carry a location hint."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported version {version!r}")
    for key in ("K", "pdps", "ndds", "arcs"):
        if key not in doc:
            raise InstanceFormatError(f"missing field {key!r}")
    raw_arcs = doc["arcs"]
    arcs = []
    for idx, rec in enumerate(raw_arcs):
        try:
            arcs.append((int(rec["u"]), int(rec["v"]), float(rec["w"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceFormatError(f"arcs[{idx}]: {exc}") from exc
    L = doc.get("L")  # an absent field means the same as null: no finite cap
    inst = Instance(tuple(int(v) for v in doc["pdps"]),
                    tuple(int(v) for v in doc["ndds"]),
                    tuple(arcs), int(doc["K"]),
                    None if L is None else int(L))
    problems = validate(inst)
    if problems:
        raise InstanceFormatError("; ".join(problems))
    return inst


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

def generate_random(n_pdps: int, n_ndds: int, density: float,
                    weight_mode: str = "unit", seed: int = 0,
                    K: int = 3, L: Optional[int] = 3) -> Instance:
    """Deterministic seeded random instance.

    Every ordered pair ``(u, v)`` with ``v`` a PDP and ``u != v`` is included
    independently with probability ``density``.  ``weight_mode`` is ``"unit"``
    or ``"uniform-int(lo,hi)"``.  Identical arguments produce identical
    instances (arc order included).
    """
    if not (0.0 < density <= 1.0) and n_pdps > 0:
        raise ValueError(f"density must be in (0,1], got {density}")
    pdps = tuple(range(1, n_pdps + 1))
    ndds = tuple(range(n_pdps + 1, n_pdps + n_ndds + 1))
    rng = random.Random(seed)
    draw_weight = _weight_sampler(weight_mode)
    arcs: list[Arc] = []
    for u in pdps + ndds:
        for v in pdps:
            if u == v:
                continue
            if rng.random() <= density:
                arcs.append((u, v, draw_weight(rng)))
    return Instance(pdps, ndds, tuple(arcs), K, L)


def _weight_sampler(weight_mode: str):
    if weight_mode == "unit":
        return lambda rng: 1.0
    if weight_mode.startswith("uniform-int(") and weight_mode.endswith(")"):
        body = weight_mode[len("uniform-int("):-1]
        lo, hi = (int(part) for part in body.split(","))
        return lambda rng: float(rng.randint(lo, hi))
    raise ValueError(f"unknown weight_mode {weight_mode!r}")


# ---------------------------------------------------------------------------
# PrefLib import (best effort)
# ---------------------------------------------------------------------------

def import_preflib(edge_text: str, ndd_ids: Optional[Sequence[int]] = None,
                   K: int = 3, L: Optional[int] = 0) -> Instance:
    """Import a PrefLib-style weighted edge file.

    Data lines are ``u,v,w``.  Lines starting with ``#`` or ``%`` and blank
    lines are comments; a leading line with fewer than three fields is treated
    as a count header and skipped.  Vertices in ``ndd_ids`` become NDDs; with
    no sidecar list, zero in-degree vertices are inferred as NDDs.
    """
    arcs: list[Arc] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(edge_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 3:
            if arcs:
                raise InstanceFormatError(f"line {lineno}: expected 'u,v,w', got {raw!r}")
            continue  # count header before any data
        try:
            u, v, w = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as exc:
            raise InstanceFormatError(f"line {lineno}: {exc}") from exc
        if (u, v) in seen:
            raise InstanceFormatError(f"line {lineno}: duplicate arc ({u},{v})")
        seen.add((u, v))
        arcs.append((u, v, w))

    vertices = sorted({u for u, _, _ in arcs} | {v for _, v, _ in arcs}
                      | (set(ndd_ids) if ndd_ids else set()))
    indeg = {v: 0 for v in vertices}
    for _, v, _ in arcs:
        indeg[v] += 1
    if ndd_ids is not None:
        nddset = set(int(v) for v in ndd_ids)
        for v in sorted(nddset):
            if indeg.get(v, 0) > 0:
                raise InstanceFormatError(f"declared NDD {v} has incoming arcs")
    else:
        nddset = {v for v in vertices if indeg[v] == 0}
    pdps = tuple(v for v in vertices if v not in nddset)
    ndds = tuple(sorted(nddset))
    inst = Instance(pdps, ndds, tuple(arcs), K, L)
    problems = validate(inst)
    if problems:
        raise InstanceFormatError("; ".join(problems))
    return inst
