"""Compiled circuits: immutable DAGs of literal / AND / OR nodes.

Nodes live in a contiguous table in topological order (children before
parents, root last).  Node encodings:

    ('L', var, positive)   literal
    ('A', children)        conjunction; ('A', ()) is constant true
    ('O', dvar, children)  disjunction with optional decision variable;
                           ('O', None, ()) is constant false
    ('T',) / ('F',)        explicit constants

Per-node variable scopes are computed once at construction and cached as
integer bitmasks.  The text interchange format is c2d-style NNF:

    nnf <#nodes> <#edges> <#vars>
    L <signed 1-based literal>
    A <childcount> <child ids...>        A 0 means true
    O <decision-var-or-0> <childcount> <child ids...>   O 0 0 means false

with node ids 0-based in file order and children preceding parents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LIT, AND, OR, CTRUE, CFALSE = "L", "A", "O", "T", "F"

DETERMINISM_GUARD = 20


class NodeCapExceeded(RuntimeError):
    """Raised when circuit construction passes the configured node budget."""


def _popcount(x: int) -> int:
    return x.bit_count()


class Circuit:
    """Immutable circuit; equality is node-for-node structural identity."""

    __slots__ = ("nodes", "var_count", "root", "scopes", "det_by_construction",
                 "_plan", "_query_ok")

    def __init__(self, nodes, var_count: int, det_by_construction: bool = False):
        nodes = tuple(nodes)
        if not nodes:
            raise ValueError("circuit needs at least one node")
        scopes = []
        for i, node in enumerate(nodes):
            kind = node[0]
            if kind == LIT:
                v = node[1]
                if not 0 <= v < var_count:
                    raise ValueError(
                        f"node {i}: literal variable {v} out of range 0..{var_count - 1}"
                    )
                scopes.append(1 << v)
            elif kind in (AND, OR):
                children = node[2] if kind == OR else node[1]
                s = 0
                for c in children:
                    if not 0 <= c < i:
                        raise ValueError(
                            f"node {i}: child {c} is not an earlier node"
                        )
                    s |= scopes[c]
                scopes.append(s)
            elif kind in (CTRUE, CFALSE):
                scopes.append(0)
            else:
                raise ValueError(f"node {i}: unknown kind {kind!r}")
        self.nodes = nodes
        self.var_count = var_count
        self.root = len(nodes) - 1
        self.scopes = tuple(scopes)
        self.det_by_construction = det_by_construction
        self._plan = None
        self._query_ok = None

    def children(self, i: int) -> tuple[int, ...]:
        node = self.nodes[i]
        if node[0] == AND:
            return node[1]
        if node[0] == OR:
            return node[2]
        return ()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Circuit)
            and self.nodes == other.nodes
            and self.var_count == other.var_count
        )

    def __hash__(self):
        return hash((self.nodes, self.var_count))

    def __repr__(self) -> str:
        return f"Circuit({len(self.nodes)} nodes, {self.var_count} vars)"


@dataclass(frozen=True)
class StructureReport:
    decomposable: bool
    smooth: bool
    deterministic: bool | None  # None means unchecked
    witness: tuple[int, str] | None = None

    @property
    def all_ok(self) -> bool:
        return self.decomposable and self.smooth and self.deterministic is not False


class CircuitBuilder:
    """Hash-consing constructor used by the compiler and by smooth()."""

    def __init__(self, var_count: int, max_nodes: int | None = None):
        self.var_count = var_count
        self.max_nodes = max_nodes
        self._nodes: list[tuple] = []
        self._scopes: list[int] = []
        self._cache: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def _emit(self, node: tuple, scope: int) -> int:
        key = node if node[0] != OR else (OR, node[2])
        got = self._cache.get(key)
        if got is not None:
            return got
        if self.max_nodes is not None and len(self._nodes) >= self.max_nodes:
            raise NodeCapExceeded(
                f"node budget of {self.max_nodes} exceeded during construction"
            )
        self._nodes.append(node)
        self._scopes.append(scope)
        idx = len(self._nodes) - 1
        self._cache[key] = idx
        return idx

    def true(self) -> int:
        return self._emit((CTRUE,), 0)

    def false(self) -> int:
        return self._emit((CFALSE,), 0)

    def literal(self, v: int, positive: bool) -> int:
        if not 0 <= v < self.var_count:
            raise ValueError(f"literal variable {v} out of range")
        return self._emit((LIT, v, bool(positive)), 1 << v)

    def scope(self, i: int) -> int:
        return self._scopes[i]

    def node(self, i: int) -> tuple:
        return self._nodes[i]

    def conj(self, ids) -> int:
        flat = []
        for i in ids:
            kind = self._nodes[i][0]
            if kind == CFALSE:
                return self.false()
            if kind != CTRUE:
                flat.append(i)
        flat = sorted(set(flat))
        if not flat:
            return self.true()
        if len(flat) == 1:
            return flat[0]
        scope = 0
        for i in flat:
            scope |= self._scopes[i]
        return self._emit((AND, tuple(flat)), scope)

    def disj(self, ids, decision: int | None = None) -> int:
        flat = []
        for i in ids:
            kind = self._nodes[i][0]
            if kind == CTRUE:
                return self.true()
            if kind != CFALSE:
                flat.append(i)
        flat = sorted(set(flat))
        if not flat:
            return self.false()
        if len(flat) == 1:
            return flat[0]
        scope = 0
        for i in flat:
            scope |= self._scopes[i]
        return self._emit((OR, decision, tuple(flat)), scope)

    def build(self, root: int, det_by_construction: bool = False) -> Circuit:
        """Garbage-collect unreachable nodes, renumber, and freeze."""
        keep = set()
        stack = [root]
        while stack:
            i = stack.pop()
            if i in keep:
                continue
            keep.add(i)
            node = self._nodes[i]
            if node[0] == AND:
                stack.extend(node[1])
            elif node[0] == OR:
                stack.extend(node[2])
        order = sorted(keep)
        remap = {old: new for new, old in enumerate(order)}
        out = []
        for old in order:
            node = self._nodes[old]
            if node[0] == AND:
                out.append((AND, tuple(remap[c] for c in node[1])))
            elif node[0] == OR:
                out.append((OR, node[1], tuple(remap[c] for c in node[2])))
            else:
                out.append(node)
        return Circuit(out, self.var_count, det_by_construction)


# ---------------------------------------------------------------------------
# structural checks

def _scope_vars(scope: int) -> set[int]:
    out = set()
    i = 0
    while scope:
        if scope & 1:
            out.add(i)
        scope >>= 1
        i += 1
    return out


def _decision_guards(c: Circuit, child: int) -> set[tuple[int, bool]]:
    """Literals that directly guard an OR child (the child itself or its
    conjunction's literal children)."""
    node = c.nodes[child]
    if node[0] == LIT:
        return {(node[1], node[2])}
    if node[0] == AND:
        return {
            (c.nodes[g][1], c.nodes[g][2])
            for g in node[1]
            if c.nodes[g][0] == LIT
        }
    return set()


def _syntactic_determinism(c: Circuit) -> bool:
    """True when every OR is a guarded decision node (sufficient check)."""
    for i, node in enumerate(c.nodes):
        if node[0] != OR or len(node[2]) <= 1:
            continue
        if len(node[2]) != 2:
            return False
        g0 = _decision_guards(c, node[2][0])
        g1 = _decision_guards(c, node[2][1])
        if not any((v, not p) in g1 for (v, p) in g0):
            return False
    return True


def _literal_table(v: int, positive: bool, n: int) -> np.ndarray:
    # assignment index uses variable 0 as the most significant bit
    block = 1 << (n - 1 - v)
    pat = np.repeat(np.array([not positive, positive], dtype=bool), block)
    return np.tile(pat, 1 << v)


def _table_pass(c: Circuit):
    """Iterate (node id, truth table) bottom-up, freeing tables eagerly.

    Tables cover all 2^var_count assignments; popcounts for every node are
    returned at the end via the closure list.
    """
    n = c.var_count
    refs = [0] * len(c.nodes)
    for i in range(len(c.nodes)):
        for ch in c.children(i):
            refs[ch] += 1
    tables: dict[int, np.ndarray] = {}
    counts = [0] * len(c.nodes)

    def run():
        size = 1 << n
        for i, node in enumerate(c.nodes):
            kind = node[0]
            if kind == LIT:
                t = _literal_table(node[1], node[2], n)
            elif kind == CTRUE:
                t = np.ones(size, dtype=bool)
            elif kind == CFALSE:
                t = np.zeros(size, dtype=bool)
            elif kind == AND:
                t = np.ones(size, dtype=bool)
                for ch in node[1]:
                    t &= tables[ch]
            else:
                t = np.zeros(size, dtype=bool)
                for ch in node[2]:
                    t |= tables[ch]
            counts[i] = int(t.sum())
            tables[i] = t
            yield i, t
            for ch in c.children(i):
                refs[ch] -= 1
                if refs[ch] == 0:
                    del tables[ch]

    return run(), counts


def check_structure(c: Circuit, determinism_mode: str = "skip") -> StructureReport:
    """Verify decomposability, smoothness, and (optionally) determinism.

    Determinism is co-NP in general; brute-force mode is exact but guarded
    at var_count <= 20.  Above the guard the flag comes back None
    (unchecked), never a silent pass.
    """
    if determinism_mode not in ("skip", "brute-force"):
        raise ValueError(f"unknown determinism mode {determinism_mode!r}")
    decomposable = True
    smooth_flag = True
    witness = None

    for i, node in enumerate(c.nodes):
        if node[0] == AND:
            union = 0
            total = 0
            for ch in node[1]:
                union |= c.scopes[ch]
                total += _popcount(c.scopes[ch])
            if total != _popcount(union):
                decomposable = False
                if witness is None:
                    witness = (i, "and node children share variables")
        elif node[0] == OR:
            kids = node[2]
            if kids and any(c.scopes[ch] != c.scopes[kids[0]] for ch in kids[1:]):
                smooth_flag = False
                if witness is None:
                    witness = (i, "or node children have unequal scopes")

    deterministic: bool | None = None
    if determinism_mode == "brute-force" and c.var_count <= DETERMINISM_GUARD:
        deterministic = True
        pass_iter, counts = _table_pass(c)
        for i, _table in pass_iter:
            node = c.nodes[i]
            if node[0] == OR and len(node[2]) > 1:
                if counts[i] != sum(counts[ch] for ch in node[2]):
                    deterministic = False
                    if witness is None:
                        witness = (i, "or node children overlap on some assignment")
                    break
    return StructureReport(decomposable, smooth_flag, deterministic, witness)


def _ensure_deterministic(c: Circuit) -> bool:
    """Best verdict available without exponential blowup above the guard.

    Returns False only on a proven violation; unverifiable circuits pass
    (matching the refusal-on-failure contract).
    """
    if c.det_by_construction or _syntactic_determinism(c):
        return True
    if c.var_count <= DETERMINISM_GUARD:
        return check_structure(c, "brute-force").deterministic is True
    return True


def verify_query_structure(c: Circuit) -> None:
    """Refuse circuits that provably violate smooth/deterministic/decomposable."""
    if c._query_ok is None:
        report = check_structure(c, "skip")
        ok = report.decomposable and report.smooth and _ensure_deterministic(c)
        c._query_ok = ok
    if not c._query_ok:
        raise ValueError(
            "circuit is not smooth, deterministic and decomposable; "
            "query refused"
        )


# ---------------------------------------------------------------------------
# semantics

def circuit_eval(c: Circuit, a) -> bool:
    """Evaluate the circuit as a Boolean function on one assignment."""
    if len(a) != c.var_count:
        raise ValueError(f"assignment length {len(a)} != var_count {c.var_count}")
    vals = []
    for node in c.nodes:
        kind = node[0]
        if kind == LIT:
            vals.append(bool(a[node[1]]) == node[2])
        elif kind == AND:
            vals.append(all(vals[ch] for ch in node[1]))
        elif kind == OR:
            vals.append(any(vals[ch] for ch in node[2]))
        else:
            vals.append(kind == CTRUE)
    return vals[-1]


def circuit_models(c: Circuit):
    """ModelSet of the circuit over its declared variables (guard n <= 20)."""
    from .formula import ModelSet, index_to_assignment

    n = c.var_count
    if n > DETERMINISM_GUARD:
        raise ValueError(
            f"var_count {n} exceeds enumeration limit {DETERMINISM_GUARD}"
        )
    pass_iter, _counts = _table_pass(c)
    root_table = None
    for i, table in pass_iter:
        if i == c.root:
            root_table = table.copy()
    idx = np.nonzero(root_table)[0]
    return ModelSet(tuple(index_to_assignment(int(i), n) for i in idx))


def model_count(c: Circuit) -> int:
    """Exact model count over the declared variables via one integer pass.

    Requires a smooth, deterministic, decomposable circuit; free variables
    (declared but absent from the root scope) multiply the count by two each.
    """
    verify_query_structure(c)
    vals: list[int] = []
    for node in c.nodes:
        kind = node[0]
        if kind == LIT:
            vals.append(1)
        elif kind == CTRUE:
            vals.append(1)
        elif kind == CFALSE:
            vals.append(0)
        elif kind == AND:
            v = 1
            for ch in node[1]:
                v *= vals[ch]
            vals.append(v)
        else:
            vals.append(sum(vals[ch] for ch in node[2]))
    root_val = vals[c.root]
    if root_val == 0:
        return 0
    free = c.var_count - _popcount(c.scopes[c.root])
    return root_val << free


# ---------------------------------------------------------------------------
# smoothing

def smooth(c: Circuit) -> Circuit:
    """Equalize OR-children scopes by conjoining (Y or not Y) gadgets.

    Model set, decomposability, and determinism are preserved.  Already
    smooth circuits come back unchanged.
    """
    report = check_structure(c, "skip")
    if not report.decomposable:
        raise ValueError("smooth() requires a decomposable circuit")
    if report.smooth:
        return c
    b = CircuitBuilder(c.var_count)
    gadgets: dict[int, int] = {}

    def gadget(v: int) -> int:
        got = gadgets.get(v)
        if got is None:
            got = b.disj([b.literal(v, True), b.literal(v, False)], decision=v)
            gadgets[v] = got
        return got

    remap: list[int] = []
    for i, node in enumerate(c.nodes):
        kind = node[0]
        if kind == LIT:
            remap.append(b.literal(node[1], node[2]))
        elif kind == CTRUE:
            remap.append(b.true())
        elif kind == CFALSE:
            remap.append(b.false())
        elif kind == AND:
            remap.append(b.conj([remap[ch] for ch in node[1]]))
        else:
            padded = []
            for ch in node[2]:
                missing = c.scopes[i] & ~c.scopes[ch]
                if not missing:
                    padded.append(remap[ch])
                    continue
                # flatten conjunction children so guard literals stay direct
                base = b.node(remap[ch])
                parts = list(base[1]) if base[0] == AND else [remap[ch]]
                padded.append(
                    b.conj(parts + [gadget(v) for v in _scope_vars(missing)])
                )
            remap.append(b.disj(padded, decision=node[1]))
    return b.build(remap[c.root], det_by_construction=c.det_by_construction)


# ---------------------------------------------------------------------------
# NNF interchange

def write_nnf(c: Circuit) -> str:
    edges = sum(len(c.children(i)) for i in range(len(c.nodes)))
    lines = [f"nnf {len(c.nodes)} {edges} {c.var_count}"]
    for node in c.nodes:
        kind = node[0]
        if kind == LIT:
            lit = node[1] + 1 if node[2] else -(node[1] + 1)
            lines.append(f"L {lit}")
        elif kind == CTRUE:
            lines.append("A 0")
        elif kind == CFALSE:
            lines.append("O 0 0")
        elif kind == AND:
            lines.append("A " + " ".join(map(str, (len(node[1]),) + node[1])))
        else:
            dvar = 0 if node[1] is None else node[1] + 1
            lines.append(
                f"O {dvar} " + " ".join(map(str, (len(node[2]),) + node[2]))
            )
    return "\n".join(lines) + "\n"


def read_nnf(text: str) -> Circuit:
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].split():
        raise ValueError("line 1: missing nnf header")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "nnf":
        raise ValueError(f"line 1: malformed header {lines[0]!r}")
    try:
        n_nodes, n_edges, n_vars = map(int, header[1:])
    except ValueError:
        raise ValueError(f"line 1: malformed header {lines[0]!r}") from None

    nodes: list[tuple] = []
    edges = 0
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if not toks:
            continue
        i = len(nodes)
        kind = toks[0]
        if kind == "L":
            if len(toks) != 2:
                raise ValueError(f"line {lineno}: malformed literal line")
            lit = int(toks[1])
            v = abs(lit) - 1
            if lit == 0 or v >= n_vars:
                raise ValueError(
                    f"line {lineno}: literal {lit} out of range for {n_vars} vars"
                )
            nodes.append((LIT, v, lit > 0))
        elif kind in ("A", "O"):
            try:
                nums = [int(t) for t in toks[1:]]
            except ValueError:
                raise ValueError(f"line {lineno}: bad integer in node line") from None
            if kind == "A":
                if not nums or len(nums) != nums[0] + 1:
                    raise ValueError(f"line {lineno}: bad child count")
                kids = nums[1:]
            else:
                if len(nums) < 2 or len(nums) != nums[1] + 2:
                    raise ValueError(f"line {lineno}: bad child count")
                kids = nums[2:]
            for ch in kids:
                if not 0 <= ch < i:
                    raise ValueError(
                        f"line {lineno}: forward or self reference to node {ch}"
                    )
            edges += len(kids)
            if kind == "A":
                nodes.append((CTRUE,) if not kids else (AND, tuple(kids)))
            else:
                dvar = nums[0] - 1 if nums[0] > 0 else None
                if dvar is not None and dvar >= n_vars:
                    raise ValueError(
                        f"line {lineno}: decision variable {nums[0]} out of range"
                    )
                nodes.append((CFALSE,) if not kids else (OR, dvar, tuple(kids)))
        else:
            raise ValueError(f"line {lineno}: unknown node kind {kind!r}")
    if len(nodes) != n_nodes:
        raise ValueError(
            f"header declares {n_nodes} nodes, found {len(nodes)}"
        )
    if edges != n_edges:
        raise ValueError(f"header declares {n_edges} edges, found {edges}")
    return Circuit(nodes, n_vars)
