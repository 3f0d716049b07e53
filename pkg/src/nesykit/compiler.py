"""Compile formulas into smooth, deterministic, decomposable circuits.

The algorithm is top-down exhaustive Shannon decomposition: case-split on
the next variable of a static order, with unit propagation, connected
component splitting of conjunctions, and a cache keyed on the canonical
form of the simplified residual formula.  OR nodes are decision nodes
(not Y and low) or (Y and high), so determinism and decomposability hold
by construction; a final smoothing pass adds (Y or not Y) gadgets, and
declared variables the formula never mentions are covered by root gadgets
so the circuit scope always equals the declared universe.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import formula as fm
from .circuit import Circuit, CircuitBuilder, NodeCapExceeded, smooth

DEFAULT_NODE_CAP = 5_000_000

# canonical residual forms: ('T',) ('F',) ('L', var, positive)
# ('A', children) ('O', children), children deduplicated and sorted
_T = ("T",)
_F = ("F",)


def _key(nf) -> str:
    return repr(nf)


def _c_and(parts) -> tuple:
    flat = []
    for p in parts:
        if p == _F:
            return _F
        if p == _T:
            continue
        if p[0] == "A":
            flat.extend(p[1])
        else:
            flat.append(p)
    flat = sorted(set(flat), key=_key)
    lits = {(p[1], p[2]) for p in flat if p[0] == "L"}
    if any((v, not pol) in lits for v, pol in lits):
        return _F
    if not flat:
        return _T
    if len(flat) == 1:
        return flat[0]
    return ("A", tuple(flat))


def _c_or(parts) -> tuple:
    flat = []
    for p in parts:
        if p == _T:
            return _T
        if p == _F:
            continue
        if p[0] == "O":
            flat.extend(p[1])
        else:
            flat.append(p)
    flat = sorted(set(flat), key=_key)
    lits = {(p[1], p[2]) for p in flat if p[0] == "L"}
    if any((v, not pol) in lits for v, pol in lits):
        return _T
    if not flat:
        return _F
    if len(flat) == 1:
        return flat[0]
    return ("O", tuple(flat))


def _to_nf(f: fm.Formula, positive: bool = True) -> tuple:
    """Negation normal form with implies/iff expanded, canonicalized."""
    k = f.kind
    if k == fm.VAR:
        return ("L", f.index, positive)
    if k == fm.NOT:
        return _to_nf(f.children[0], not positive)
    if k == fm.TRUE:
        return _T if positive else _F
    if k == fm.FALSE:
        return _F if positive else _T
    if k == fm.AND:
        parts = [_to_nf(c, positive) for c in f.children]
        return _c_and(parts) if positive else _c_or(parts)
    if k == fm.OR:
        parts = [_to_nf(c, positive) for c in f.children]
        return _c_or(parts) if positive else _c_and(parts)
    if k == fm.IMPLIES:
        a, b = f.children
        if positive:
            return _c_or([_to_nf(a, False), _to_nf(b, True)])
        return _c_and([_to_nf(a, True), _to_nf(b, False)])
    if k == fm.IFF:
        a, b = f.children
        pp = _c_and([_to_nf(a, True), _to_nf(b, True)])
        nn = _c_and([_to_nf(a, False), _to_nf(b, False)])
        pn = _c_and([_to_nf(a, True), _to_nf(b, False)])
        np_ = _c_and([_to_nf(a, False), _to_nf(b, True)])
        return _c_or([pp, nn]) if positive else _c_or([pn, np_])
    raise ValueError(f"unknown node kind {k!r}")


def _vars_mask(nf, memo: dict) -> int:
    got = memo.get(nf)
    if got is not None:
        return got
    if nf[0] == "L":
        m = 1 << nf[1]
    elif nf[0] in ("A", "O"):
        m = 0
        for ch in nf[1]:
            m |= _vars_mask(ch, memo)
    else:
        m = 0
    memo[nf] = m
    return m


def _assign(nf, values: dict, memo: dict) -> tuple:
    """Substitute a partial assignment and re-canonicalize."""
    if nf[0] == "L":
        val = values.get(nf[1])
        if val is None:
            return nf
        return _T if val == nf[2] else _F
    if nf[0] == "A":
        return _c_and([_assign(ch, values, memo) for ch in nf[1]])
    if nf[0] == "O":
        got = memo.get(nf)
        if got is not None:
            return got
        out = _c_or([_assign(ch, values, memo) for ch in nf[1]])
        memo[nf] = out
        return out
    return nf


@dataclass(frozen=True)
class CompileStats:
    nodes: int
    edges: int
    cache_hits: int
    peak_cache: int
    seconds: float


def default_order(f: fm.Formula) -> list[int]:
    """Descending variable occurrence count, ties broken by ascending index."""
    counts = [0] * f.var_count

    def walk(g: fm.Formula):
        if g.kind == fm.VAR:
            counts[g.index] += 1
        for c in g.children:
            walk(c)

    walk(f)
    return sorted(range(f.var_count), key=lambda v: (-counts[v], v))


def compile(
    f: fm.Formula,
    order: list[int] | None = None,
    max_nodes: int = DEFAULT_NODE_CAP,
    use_cache: bool = True,
) -> tuple[Circuit, CompileStats]:
    """Compile a formula; raises NodeCapExceeded past the node budget."""
    t0 = time.perf_counter()
    n = f.var_count
    if order is None:
        order = default_order(f)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}")

    b = CircuitBuilder(n, max_nodes=max_nodes)
    cache: dict[tuple, int] = {}
    hits = 0
    mask_memo: dict = {}

    def split_components(children) -> list[list]:
        groups: list[tuple[int, list]] = []
        for ch in children:
            m = _vars_mask(ch, mask_memo)
            merged = [ch]
            keep = []
            for gm, gch in groups:
                if gm & m:
                    m |= gm
                    merged.extend(gch)
                else:
                    keep.append((gm, gch))
            keep.append((m, merged))
            groups = keep
        return [gch for _m, gch in groups]

    def decide(nf) -> int:
        mask = _vars_mask(nf, mask_memo)
        v = next(u for u in order if (mask >> u) & 1)
        lo = build(_assign(nf, {v: False}, {}))
        hi = build(_assign(nf, {v: True}, {}))
        return b.disj(
            [b.conj([b.literal(v, False), lo]),
             b.conj([b.literal(v, True), hi])],
            decision=v,
        )

    def build(nf) -> int:
        nonlocal hits
        if nf == _T:
            return b.true()
        if nf == _F:
            return b.false()
        if nf[0] == "L":
            return b.literal(nf[1], nf[2])
        if use_cache:
            got = cache.get(nf)
            if got is not None:
                hits += 1
                return got
        if nf[0] == "O":
            result = decide(nf)
        else:
            # propagate unit literals to a fixpoint
            unit_ids = []
            rest = nf
            while rest[0] == "A":
                units = {ch[1]: ch[2] for ch in rest[1] if ch[0] == "L"}
                if not units:
                    break
                unit_ids.extend(b.literal(v, pol) for v, pol in units.items())
                others = [ch for ch in rest[1] if ch[0] != "L"]
                rest = _c_and([_assign(ch, units, {}) for ch in others])
            if rest[0] == "A":
                comps = split_components(rest[1])
                if len(comps) > 1:
                    rest_id = b.conj([build(_c_and(c)) for c in comps])
                else:
                    rest_id = decide(rest)
            else:
                rest_id = build(rest)
            result = b.conj(unit_ids + [rest_id])
        if use_cache:
            cache[nf] = result
        return result

    root = build(_to_nf(f))

    # cover declared variables the circuit never mentions
    covered = b.scope(root)
    gadgets = [
        b.disj([b.literal(v, True), b.literal(v, False)], decision=v)
        for v in range(n)
        if not (covered >> v) & 1
    ]
    if gadgets:
        root = b.conj([root] + gadgets)

    circ = smooth(b.build(root, det_by_construction=True))
    edges = sum(len(circ.children(i)) for i in range(len(circ.nodes)))
    stats = CompileStats(
        nodes=len(circ.nodes),
        edges=edges,
        cache_hits=hits,
        peak_cache=len(cache),
        seconds=time.perf_counter() - t0,
    )
    return circ, stats
