"""Independent brute-force reference implementations used by the test suite.

Everything here is deliberately written the slow, obvious way (per-assignment
scans, direct textbook formulas) so it shares no code with the library's
vectorized or circuit-based paths.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from nesykit import formula as fm


def scan_models(f: fm.Formula) -> list[tuple[int, ...]]:
    """Per-assignment scan with eval_formula; lexicographic by construction."""
    n = f.var_count
    return [
        a
        for a in itertools.product((0, 1), repeat=n)
        if fm.eval_formula(f, a)
    ]


def weight(a, p) -> float:
    w = 1.0
    for ai, pi in zip(a, p):
        w *= pi if ai else 1.0 - pi
    return w


def wmc_brute(f: fm.Formula, p) -> float:
    """Direct sum over enumerated models of the product weight."""
    return sum(weight(a, p) for a in scan_models(f))


def cond_entropy_brute(f: fm.Formula, p) -> float:
    """Shannon entropy of the product distribution conditioned on f (nats)."""
    ws = [weight(a, p) for a in scan_models(f)]
    z = sum(ws)
    if z == 0.0:
        raise ZeroDivisionError("no support")
    return -sum((w / z) * math.log(w / z) for w in ws if w > 0.0)


def fd_gradient(fun, p, h=1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of the prob vector."""
    p = np.asarray(p, dtype=float)
    g = np.zeros_like(p)
    for i in range(len(p)):
        hi = p.copy()
        lo = p.copy()
        hi[i] += h
        lo[i] -= h
        g[i] = (fun(hi) - fun(lo)) / (2.0 * h)
    return g


def random_ast(rng: np.random.Generator, n_vars: int, depth: int = 3) -> fm.Formula:
    """Random formula AST over n_vars variables (all connectives)."""
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.05:
            return fm.true()
        if r < 0.1:
            return fm.false()
        return fm.var(int(rng.integers(n_vars)))
    op = rng.choice(["not", "and", "or", "=>", "<=>"])
    if op == "not":
        return fm.not_(random_ast(rng, n_vars, depth - 1))
    if op in ("=>", "<=>"):
        a = random_ast(rng, n_vars, depth - 1)
        b = random_ast(rng, n_vars, depth - 1)
        return fm.implies(a, b) if op == "=>" else fm.iff(a, b)
    k = int(rng.integers(2, 4))
    parts = tuple(random_ast(rng, n_vars, depth - 1) for _ in range(k))
    return fm.Formula(op, parts, None, max(c.var_count for c in parts))


def random_cnf(rng: np.random.Generator, n_vars: int, n_clauses: int) -> fm.Formula:
    """Random CNF with clauses of width 1..3."""
    clauses = []
    for _ in range(n_clauses):
        width = int(rng.integers(1, 4))
        vs = rng.choice(n_vars, size=min(width, n_vars), replace=False)
        lits = tuple(
            fm.var(int(v)) if rng.random() < 0.5 else fm.not_(fm.var(int(v)))
            for v in vs
        )
        clauses.append(lits[0] if len(lits) == 1 else fm.or_(*lits))
    f = clauses[0] if len(clauses) == 1 else fm.and_(*clauses)
    return fm.with_var_count(f, n_vars)


def random_formula(rng: np.random.Generator, n_vars: int) -> fm.Formula:
    """Mixed pool: half random CNF, half random general ASTs."""
    if rng.random() < 0.5:
        f = random_cnf(rng, n_vars, int(rng.integers(1, 2 * n_vars + 1)))
    else:
        f = random_ast(rng, n_vars, depth=int(rng.integers(2, 5)))
    return fm.with_var_count(f, n_vars)
