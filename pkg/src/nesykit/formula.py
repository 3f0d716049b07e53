"""Propositional formulas over 0-based indexed Boolean variables.

Formulas are immutable ASTs built from var / not / and / or / => / <=> nodes
plus the constants true and false.  Two text formats are supported: DIMACS
CNF (variables 1-based in the file, mapped to 0-based indices) and a prefix
s-expression syntax, e.g. ``(=> (and (var 0) (var 1)) (var 2))``.

Brute-force semantics (eval_formula, enumerate_models) live here and act as
the ground-truth oracle for everything downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

VAR = "var"
NOT = "not"
AND = "and"
OR = "or"
IMPLIES = "=>"
IFF = "<=>"
TRUE = "true"
FALSE = "false"

ENUMERATION_LIMIT = 24
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Formula:
    """One AST node.  var_count covers the whole subtree (and may be wider)."""

    kind: str
    children: tuple["Formula", ...] = ()
    index: int | None = None
    var_count: int = 0

    def __repr__(self) -> str:
        return f"Formula({format_formula(self)!r}, n={self.var_count})"


def var(i: int, var_count: int | None = None) -> Formula:
    if i < 0:
        raise ValueError(f"variable index must be >= 0, got {i}")
    n = i + 1 if var_count is None else var_count
    if i >= n:
        raise ValueError(f"variable index {i} out of range for var_count {n}")
    return Formula(VAR, (), i, n)


def true(var_count: int = 0) -> Formula:
    return Formula(TRUE, (), None, var_count)


def false(var_count: int = 0) -> Formula:
    return Formula(FALSE, (), None, var_count)


def not_(f: Formula) -> Formula:
    return Formula(NOT, (f,), None, f.var_count)


def _nary(kind: str, fs: tuple[Formula, ...]) -> Formula:
    if not fs:
        raise ValueError(f"{kind} needs at least one child")
    return Formula(kind, fs, None, max(f.var_count for f in fs))


def and_(*fs: Formula) -> Formula:
    return _nary(AND, fs)


def or_(*fs: Formula) -> Formula:
    return _nary(OR, fs)


def implies(a: Formula, b: Formula) -> Formula:
    return Formula(IMPLIES, (a, b), None, max(a.var_count, b.var_count))


def iff(a: Formula, b: Formula) -> Formula:
    return Formula(IFF, (a, b), None, max(a.var_count, b.var_count))


def with_var_count(f: Formula, var_count: int) -> Formula:
    """Widen (never shrink) the declared variable universe of a formula."""
    if var_count < f.var_count:
        raise ValueError(
            f"cannot shrink var_count from {f.var_count} to {var_count}"
        )
    if var_count == f.var_count:
        return f
    return Formula(f.kind, f.children, f.index, var_count)


@dataclass(frozen=True)
class ModelSet:
    """All satisfying assignments of a formula, sorted lexicographically."""

    assignments: tuple[tuple[int, ...], ...]
    count: int = field(default=-1)

    def __post_init__(self):
        if self.count == -1:
            object.__setattr__(self, "count", len(self.assignments))
        if self.count != len(self.assignments):
            raise ValueError("count does not match assignment list length")

    def __len__(self) -> int:
        return self.count

    def __iter__(self):
        return iter(self.assignments)

    def __contains__(self, a) -> bool:
        return tuple(a) in set(self.assignments)


# ---------------------------------------------------------------------------
# parsing

_HEADER_RE = re.compile(r"^p\s+cnf\s+(\d+)\s+(\d+)\s*$")


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF.  File variable k becomes index k-1."""
    n_vars = None
    n_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            m = _HEADER_RE.match(stripped)
            if m is None or n_vars is not None:
                raise ValueError(f"line {lineno}: malformed header {line!r}")
            n_vars, n_clauses = int(m.group(1)), int(m.group(2))
            continue
        if n_vars is None:
            raise ValueError(f"line {lineno}: clause before 'p cnf' header")
        for tok in stripped.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > n_vars:
                raise ValueError(
                    f"line {lineno}: literal {lit} out of range 1..{n_vars}"
                )
            else:
                current.append(lit)
    if n_vars is None:
        raise ValueError("line 1: missing 'p cnf' header")
    if current:
        raise ValueError(
            f"line {lineno}: clause {current} missing terminating 0"
        )
    if len(clauses) != n_clauses:
        raise ValueError(
            f"line {lineno}: header declares {n_clauses} clauses, found {len(clauses)}"
        )

    def clause_formula(lits: list[int]) -> Formula:
        if not lits:
            return false(n_vars)
        parts = tuple(
            var(l - 1, n_vars) if l > 0 else not_(var(-l - 1, n_vars))
            for l in lits
        )
        return parts[0] if len(parts) == 1 else Formula(OR, parts, None, n_vars)

    if not clauses:
        return true(n_vars)
    built = tuple(clause_formula(c) for c in clauses)
    if len(built) == 1:
        return with_var_count(built[0], n_vars)
    return Formula(AND, built, None, n_vars)


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_formula(text: str) -> Formula:
    """Parse a prefix s-expression formula.  No simplification is applied."""
    tokens = _tokenize(text)
    if not tokens:
        raise ValueError("empty formula text")
    pos = 0

    def parse_node() -> Formula:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of input (unbalanced parentheses)")
        tok = tokens[pos]
        pos += 1
        if tok == "true":
            return true()
        if tok == "false":
            return false()
        if tok != "(":
            raise ValueError(f"unexpected token {tok!r}")
        if pos >= len(tokens):
            raise ValueError("unexpected end of input (unbalanced parentheses)")
        op = tokens[pos]
        pos += 1
        args: list[Formula] = []
        if op == VAR:
            if pos >= len(tokens) or not re.fullmatch(r"\d+", tokens[pos]):
                got = tokens[pos] if pos < len(tokens) else "<eof>"
                raise ValueError(f"bad variable index {got!r}")
            idx = int(tokens[pos])
            pos += 1
        elif op in (NOT, AND, OR, IMPLIES, IFF):
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse_node())
        else:
            raise ValueError(f"unknown operator {op!r}")
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ValueError(f"missing ')' after ({op} ...")
        pos += 1
        if op == VAR:
            return var(idx)
        if op == NOT:
            if len(args) != 1:
                raise ValueError(f"not takes exactly 1 argument, got {len(args)}")
            return not_(args[0])
        if op in (IMPLIES, IFF):
            if len(args) != 2:
                raise ValueError(f"{op} takes exactly 2 arguments, got {len(args)}")
            return Formula(op, tuple(args), None, max(a.var_count for a in args))
        if not args:
            raise ValueError(f"{op} needs at least one child")
        return Formula(op, tuple(args), None, max(a.var_count for a in args))

    node = parse_node()
    if pos != len(tokens):
        raise ValueError(f"trailing input after formula: {tokens[pos]!r}")
    return node


def format_formula(f: Formula) -> str:
    """Render a formula as the s-expression syntax parse_formula accepts."""
    if f.kind == VAR:
        return f"(var {f.index})"
    if f.kind in (TRUE, FALSE):
        return f.kind
    inner = " ".join(format_formula(c) for c in f.children)
    return f"({f.kind} {inner})"


# ---------------------------------------------------------------------------
# brute-force semantics

def eval_formula(f: Formula, a) -> bool:
    """Evaluate f under a complete assignment (length == var_count)."""
    if len(a) != f.var_count:
        raise ValueError(
            f"assignment length {len(a)} != var_count {f.var_count}"
        )
    return _eval(f, a)


def _eval(f: Formula, a) -> bool:
    k = f.kind
    if k == VAR:
        return bool(a[f.index])
    if k == NOT:
        return not _eval(f.children[0], a)
    if k == AND:
        return all(_eval(c, a) for c in f.children)
    if k == OR:
        return any(_eval(c, a) for c in f.children)
    if k == IMPLIES:
        return (not _eval(f.children[0], a)) or _eval(f.children[1], a)
    if k == IFF:
        return _eval(f.children[0], a) == _eval(f.children[1], a)
    if k == TRUE:
        return True
    if k == FALSE:
        return False
    raise ValueError(f"unknown node kind {k!r}")


def _truth_chunk(f: Formula, idx: np.ndarray, n: int, memo: dict) -> np.ndarray:
    """Vectorized evaluation over assignment indices (variable 0 = MSB)."""
    key = id(f)
    got = memo.get(key)
    if got is not None:
        return got
    k = f.kind
    if k == VAR:
        out = ((idx >> (n - 1 - f.index)) & 1).astype(bool)
    elif k == NOT:
        out = ~_truth_chunk(f.children[0], idx, n, memo)
    elif k == AND:
        out = _truth_chunk(f.children[0], idx, n, memo).copy()
        for c in f.children[1:]:
            out &= _truth_chunk(c, idx, n, memo)
    elif k == OR:
        out = _truth_chunk(f.children[0], idx, n, memo).copy()
        for c in f.children[1:]:
            out |= _truth_chunk(c, idx, n, memo)
    elif k == IMPLIES:
        out = ~_truth_chunk(f.children[0], idx, n, memo)
        out |= _truth_chunk(f.children[1], idx, n, memo)
    elif k == IFF:
        out = _truth_chunk(f.children[0], idx, n, memo) == _truth_chunk(
            f.children[1], idx, n, memo
        )
    elif k == TRUE:
        out = np.ones(len(idx), dtype=bool)
    elif k == FALSE:
        out = np.zeros(len(idx), dtype=bool)
    else:
        raise ValueError(f"unknown node kind {k!r}")
    memo[key] = out
    return out


def satisfying_indices(f: Formula) -> np.ndarray:
    """Indices of satisfying assignments; index bit (n-1-j) holds variable j."""
    n = f.var_count
    if n > ENUMERATION_LIMIT:
        raise ValueError(
            f"var_count {n} exceeds enumeration limit {ENUMERATION_LIMIT}"
        )
    total = 1 << n
    hits = []
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        sat = _truth_chunk(f, idx, n, {})
        hits.append(idx[sat])
    return np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)


def index_to_assignment(i: int, n: int) -> tuple[int, ...]:
    return tuple((i >> (n - 1 - j)) & 1 for j in range(n))


def enumerate_models(f: Formula) -> ModelSet:
    """All models of f, lexicographically sorted.  Guarded at 24 variables."""
    n = f.var_count
    idx = satisfying_indices(f)
    return ModelSet(tuple(index_to_assignment(int(i), n) for i in idx))
