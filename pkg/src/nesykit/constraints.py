"""Generators for structured-prediction constraints.

Variable layouts (fixed, relied on by datasets and the CLI):

- exactly_one(n): variables 0..n-1, one per candidate.
- total_order(n): n*n variables; X[i][j] ("item i at position j") is
  variable i*n + j, row-major.
- simple_path(g, s, t): one variable per grid edge, edge ids in GridSpec
  order (row-major nodes; each node emits its rightward edge then its
  downward edge).
- simple_path_full(g): |V| endpoint indicator variables (node id order)
  followed by |E| edge variables (same edge order, offset by |V|).
- tile_grid(rows, cols, vocab, rule): one variable per (cell, tile);
  variable (r*cols + c)*vocab + t, cell-major then tile index.
- conditional(parts): the parts' shared content variables 0..n-1 followed
  by one fresh code variable per part, n..n+k-1.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import formula as fm

PATH_CAP = 100_000


class PathCapExceeded(ValueError):
    """Raised when path enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class GridSpec:
    """Node grid, row-major ids; undirected edges right then down per node."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")

    @property
    def n_nodes(self) -> int:
        return self.rows * self.cols

    def node(self, r: int, c: int) -> int:
        return r * self.cols + c

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                u = self.node(r, c)
                if c + 1 < self.cols:
                    out.append((u, self.node(r, c + 1)))
                if r + 1 < self.rows:
                    out.append((u, self.node(r + 1, c)))
        return out

    @property
    def n_edges(self) -> int:
        return self.rows * (self.cols - 1) + self.cols * (self.rows - 1)


def _exactly_one_over(indices: list[int], var_count: int) -> list[fm.Formula]:
    """Clause list: at least one of the indexed variables, no two together."""
    vs = [fm.var(i, var_count) for i in indices]
    parts = [fm.Formula(fm.OR, tuple(vs), None, var_count)]
    for a in range(len(indices)):
        for b in range(a + 1, len(indices)):
            parts.append(fm.not_(fm.and_(vs[a], vs[b])))
    return parts


def _conj(parts: list[fm.Formula], var_count: int) -> fm.Formula:
    if len(parts) == 1:
        return fm.with_var_count(parts[0], var_count)
    return fm.Formula(fm.AND, tuple(parts), None, var_count)


def exactly_one(n: int) -> fm.Formula:
    """One-hot constraint over n variables: exactly one is true."""
    if n < 1:
        raise ValueError("exactly_one needs n >= 1")
    return _conj(_exactly_one_over(list(range(n)), n), n)


def total_order(n: int) -> fm.Formula:
    """Permutation-matrix constraint over n*n variables X[i][j] = i*n + j."""
    if n < 1:
        raise ValueError("total_order needs n >= 1")
    nn = n * n
    parts = []
    for i in range(n):
        parts.extend(_exactly_one_over([i * n + j for j in range(n)], nn))
    for j in range(n):
        parts.extend(_exactly_one_over([i * n + j for i in range(n)], nn))
    return _conj(parts, nn)


def _adjacency(g: GridSpec) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n_nodes)]
    for e, (u, v) in enumerate(g.edges()):
        adj[u].append((v, e))
        adj[v].append((u, e))
    for lst in adj:
        lst.sort()
    return adj


def _enumerate_paths(g: GridSpec, s: int, t: int, cap: int) -> list[list[int]]:
    """All simple s-t paths as edge-id lists, DFS order, capped."""
    adj = _adjacency(g)
    paths: list[list[int]] = []
    visited = [False] * g.n_nodes
    edge_stack: list[int] = []

    def dfs(u: int):
        if u == t:
            if len(paths) >= cap:
                raise PathCapExceeded(
                    f"number of simple paths exceeds cap {cap}"
                )
            paths.append(list(edge_stack))
            return
        visited[u] = True
        for v, e in adj[u]:
            if not visited[v]:
                edge_stack.append(e)
                dfs(v)
                edge_stack.pop()
        visited[u] = False

    dfs(s)
    return paths


def _path_term(path: list[int], n_edges: int, offset: int, var_count: int) -> fm.Formula:
    on = set(path)
    lits = tuple(
        fm.var(offset + e, var_count)
        if e in on
        else fm.not_(fm.var(offset + e, var_count))
        for e in range(n_edges)
    )
    return fm.Formula(fm.AND, lits, None, var_count)


def _path_disjunction(
    g: GridSpec, s: int, t: int, cap: int, offset: int, var_count: int
) -> fm.Formula:
    paths = _enumerate_paths(g, s, t, cap)
    if not paths:
        return fm.false(var_count)
    terms = tuple(_path_term(p, g.n_edges, offset, var_count) for p in paths)
    if len(terms) == 1:
        return terms[0]
    return fm.Formula(fm.OR, terms, None, var_count)


def simple_path(g: GridSpec, s: int, t: int, cap: int = PATH_CAP) -> fm.Formula:
    """Edge sets forming one simple s-t path, over |E| edge variables."""
    if s == t:
        raise ValueError("source and destination must differ")
    if not (0 <= s < g.n_nodes and 0 <= t < g.n_nodes):
        raise ValueError("node id out of range")
    return _path_disjunction(g, s, t, cap, 0, g.n_edges)


def simple_path_full(g: GridSpec, cap: int = PATH_CAP) -> fm.Formula:
    """Any simple path plus its endpoint pair, over |V| + |E| variables."""
    nv = g.n_nodes
    var_count = nv + g.n_edges
    disjuncts = []
    for s in range(nv):
        for t in range(s + 1, nv):
            inds = tuple(
                fm.var(u, var_count)
                if u in (s, t)
                else fm.not_(fm.var(u, var_count))
                for u in range(nv)
            )
            body = _path_disjunction(g, s, t, cap, nv, var_count)
            if body.kind == fm.FALSE:
                continue
            disjuncts.append(fm.Formula(fm.AND, inds + (body,), None, var_count))
    if not disjuncts:
        return fm.false(var_count)
    return fm.Formula(fm.OR, tuple(disjuncts), None, var_count)


# ---------------------------------------------------------------------------
# tile grids

@dataclass(frozen=True)
class TileRule:
    """Sliding-window implications over tile assignments.

    Each implication is ((dr, dc, tile), alternatives) meaning: the tile at
    window offset (dr, dc) forces one of the alternative (dr, dc, tile)
    placements.  An implication is instantiated at every anchor position
    where all the cells it references lie inside the grid, so rules at the
    borders are exempted exactly when they mention cells past the edge.
    """

    window_rows: int
    window_cols: int
    vocab: int
    implications: tuple[tuple[tuple[int, int, int], tuple[tuple[int, int, int], ...]], ...]

    def __post_init__(self):
        for ante, cons in self.implications:
            for dr, dc, tile in (ante, *cons):
                if not (0 <= dr < self.window_rows and 0 <= dc < self.window_cols):
                    raise ValueError(f"offset ({dr},{dc}) outside window")
                if not 0 <= tile < self.vocab:
                    raise ValueError(f"tile id {tile} outside vocabulary")


EMPTY, TOP_LEFT, TOP_RIGHT, BODY_LEFT, BODY_RIGHT = range(5)

# Vertical two-column pipes: a cap row [top-left, top-right] over body rows
# [body-left, body-right].  Pipes may be clipped by any grid border.
PIPES = TileRule(
    window_rows=2,
    window_cols=2,
    vocab=5,
    implications=(
        ((0, 0, TOP_LEFT), ((0, 1, TOP_RIGHT),)),
        ((0, 0, TOP_LEFT), ((1, 0, BODY_LEFT),)),
        ((0, 0, BODY_LEFT), ((0, 1, BODY_RIGHT),)),
        ((1, 0, BODY_LEFT), ((0, 0, TOP_LEFT), (0, 0, BODY_LEFT))),
    ),
)


def tile_grid(rows: int, cols: int, vocab: int, rule: TileRule) -> fm.Formula:
    """Per-cell one-hot tile choice plus the rule's window implications."""
    if rows < rule.window_rows or cols < rule.window_cols:
        raise ValueError("window does not fit in the grid")
    if vocab != rule.vocab:
        raise ValueError(
            f"vocab {vocab} does not match the rule's vocabulary {rule.vocab}"
        )
    n = rows * cols * vocab

    def tvar(r: int, c: int, t: int) -> int:
        return (r * cols + c) * vocab + t

    parts = []
    for r in range(rows):
        for c in range(cols):
            parts.extend(
                _exactly_one_over([tvar(r, c, t) for t in range(vocab)], n)
            )
    for ante, cons in rule.implications:
        (adr, adc, atile) = ante
        offsets = [(adr, adc)] + [(dr, dc) for dr, dc, _t in cons]
        for r in range(rows):
            for c in range(cols):
                if any(
                    not (r + dr < rows and c + dc < cols) for dr, dc in offsets
                ):
                    continue
                head = fm.var(tvar(r + adr, c + adc, atile), n)
                alts = tuple(
                    fm.var(tvar(r + dr, c + dc, t), n) for dr, dc, t in cons
                )
                body = alts[0] if len(alts) == 1 else fm.Formula(fm.OR, alts, None, n)
                parts.append(fm.implies(head, body))
    return _conj(parts, n)


def conditional(parts: list[fm.Formula]) -> fm.Formula:
    """Switchable constraint: code bit i (variable n+i) holds iff part i does."""
    k = len(parts)
    if k < 1:
        raise ValueError("conditional needs at least one part")
    n = max(p.var_count for p in parts)
    total = n + k
    clauses = tuple(
        fm.iff(fm.var(n + i, total), fm.with_var_count(p, n))
        for i, p in enumerate(parts)
    )
    if len(clauses) == 1:
        return fm.with_var_count(clauses[0], total)
    return fm.Formula(fm.AND, clauses, None, total)
