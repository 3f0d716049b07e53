"""Differentiable queries over compiled circuits.

Given per-variable success probabilities p, the fully factorized distribution
assigns each assignment y the weight prod_i p_i^y_i (1-p_i)^(1-y_i).  An
upward pass over a smooth, deterministic, decomposable circuit computes the
total weight of the constraint's models (WMC) in log space: literals load
log p or log(1-p), AND sums, OR log-sum-exps.  Because OR children are
mutually exclusive they partition the node's event, so a second upward pass
computes the Shannon entropy of the distribution conditioned on the
constraint: literals carry no uncertainty, AND adds independent parts, and
OR mixes child entropies under the normalized child weights q_i plus the
mixing term -sum q_i log q_i.

Gradients are exact reverse-mode differentiation through both passes (one
linear-time downward sweep), not finite differences.

All kernels are batched: probabilities enter as a (B, n) array and every
per-node quantity is a length-B vector.  Single-instance entry points are
the B = 1 special case of the same code path, so batched and looped queries
agree bit for bit.

Everything is computed in natural log; values are nats.  Inputs are clamped
to [eps, 1-eps] (default 1e-7) so logs and gradients stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, verify_query_structure

EPSILON = 1e-7

_K_LIT, _K_AND, _K_OR, _K_TRUE, _K_FALSE = 0, 1, 2, 3, 4


class _Plan:
    """Flattened node table for the vectorized passes."""

    __slots__ = ("kinds", "lit_var", "lit_pos", "children", "free_vars", "n_nodes")

    def __init__(self, c: Circuit):
        n_nodes = len(c.nodes)
        self.n_nodes = n_nodes
        self.kinds = np.empty(n_nodes, dtype=np.uint8)
        self.lit_var = np.full(n_nodes, -1, dtype=np.int64)
        self.lit_pos = np.zeros(n_nodes, dtype=bool)
        self.children: list[tuple[int, ...]] = []
        for i, node in enumerate(c.nodes):
            kind = node[0]
            if kind == "L":
                self.kinds[i] = _K_LIT
                self.lit_var[i] = node[1]
                self.lit_pos[i] = node[2]
                self.children.append(())
            elif kind == "A":
                self.kinds[i] = _K_AND
                self.children.append(node[1])
            elif kind == "O":
                self.kinds[i] = _K_OR
                self.children.append(node[2])
            elif kind == "T":
                self.kinds[i] = _K_TRUE
                self.children.append(())
            else:
                self.kinds[i] = _K_FALSE
                self.children.append(())
        root_scope = c.scopes[c.root]
        self.free_vars = np.array(
            [v for v in range(c.var_count) if not (root_scope >> v) & 1],
            dtype=np.int64,
        )


def _plan_for(c: Circuit) -> _Plan:
    verify_query_structure(c)
    if c._plan is None:
        c._plan = _Plan(c)
    return c._plan


def clamp_probs(p, eps: float = EPSILON) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return np.clip(p, eps, 1.0 - eps)


def _as_batch(c: Circuit, p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != c.var_count:
        raise ValueError(
            f"probability array shape {np.shape(p)} does not match "
            f"var_count {c.var_count}"
        )
    return clamp_probs(arr)


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    return -(p * np.log(p) + (1.0 - p) * np.log1p(-p))


def _forward(plan: _Plan, P: np.ndarray):
    """Upward passes: per-node log-probability and per-node entropy."""
    B = P.shape[0]
    N = plan.n_nodes
    LP = np.empty((N, B))
    EN = np.zeros((N, B))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(N):
            kind = plan.kinds[i]
            if kind == _K_LIT:
                pv = P[:, plan.lit_var[i]]
                LP[i] = np.log(pv) if plan.lit_pos[i] else np.log1p(-pv)
            elif kind == _K_AND:
                acc = np.zeros(B)
                ent = np.zeros(B)
                for ch in plan.children[i]:
                    acc = acc + LP[ch]
                    ent = ent + EN[ch]
                LP[i] = acc
                EN[i] = ent
            elif kind == _K_OR:
                kids = plan.children[i]
                child_lp = LP[list(kids)]  # (k, B)
                m = child_lp.max(axis=0)
                finite = m > -np.inf
                lse = np.full(B, -np.inf)
                if finite.any():
                    shifted = np.exp(child_lp[:, finite] - m[finite])
                    lse[finite] = m[finite] + np.log(shifted.sum(axis=0))
                # a log-probability cannot exceed 0; trim rounding excess
                lse = np.minimum(lse, 0.0)
                LP[i] = lse
                q = np.where(
                    lse > -np.inf, np.exp(child_lp - lse), 0.0
                )  # (k, B) normalized child weights
                mix = np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
                EN[i] = (q * EN[list(kids)]).sum(axis=0) - mix.sum(axis=0)
            elif kind == _K_TRUE:
                LP[i] = 0.0
            else:
                LP[i] = -np.inf
    return LP, EN


def _backward(plan: _Plan, P, LP, EN, seed_lp, seed_en) -> np.ndarray:
    """Reverse sweep; returns d(target)/dp as a (B, n) array.

    seed_lp / seed_en are the root adjoints with respect to the root
    log-probability and root entropy.
    """
    B = P.shape[0]
    N = plan.n_nodes
    aL = np.zeros((N, B))
    aE = np.zeros((N, B))
    aL[N - 1] = seed_lp
    aE[N - 1] = seed_en
    grad = np.zeros_like(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(N - 1, -1, -1):
            kind = plan.kinds[i]
            if kind == _K_AND:
                for ch in plan.children[i]:
                    aL[ch] += aL[i]
                    aE[ch] += aE[i]
            elif kind == _K_OR:
                kids = list(plan.children[i])
                q = np.where(
                    LP[i] > -np.inf, np.exp(LP[kids] - LP[i]), 0.0
                )  # (k, B)
                # entropy depends on the node's own log-probability
                a_lp = aL[i] + aE[i] * (1.0 - EN[i])
                logq = np.log(np.where(q > 0.0, q, 1.0))
                extra = aE[i] * (EN[kids] - logq - 1.0)
                contrib_l = q * (a_lp + extra)
                contrib_e = q * aE[i]
                for j, ch in enumerate(kids):
                    aL[ch] += contrib_l[j]
                    aE[ch] += contrib_e[j]
            elif kind == _K_LIT:
                v = plan.lit_var[i]
                pv = P[:, v]
                if plan.lit_pos[i]:
                    grad[:, v] += aL[i] / pv
                else:
                    grad[:, v] -= aL[i] / (1.0 - pv)
    return grad


@dataclass
class EvalTrace:
    """Result of the upward passes on one probability vector.

    log_prob and entropy hold one value per node (natural log / nats);
    or_weights maps each OR node id to its normalized child weights.  The
    root entropy includes the contribution of declared variables outside
    the root scope (they are uniform free bits under the constraint).
    """

    log_prob: np.ndarray
    entropy: np.ndarray
    or_weights: dict[int, np.ndarray]
    wmc: float
    root_entropy: float


def evaluate(c: Circuit, p) -> EvalTrace:
    """Run both upward passes and keep every per-node value."""
    P = _as_batch(c, p)
    if P.shape[0] != 1:
        raise ValueError("evaluate takes a single probability vector")
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    lp = LP[:, 0]
    en = EN[:, 0]
    weights = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(plan.n_nodes):
            if plan.kinds[i] == _K_OR:
                kids = list(plan.children[i])
                if lp[i] > -np.inf:
                    weights[i] = np.exp(lp[kids] - lp[i])
                else:
                    weights[i] = np.zeros(len(kids))
    root_lp = lp[-1]
    wmc_val = float(np.exp(root_lp))
    free_h = float(_binary_entropy(P[0, plan.free_vars]).sum())
    root_entropy = float(en[-1] + free_h) if root_lp > -np.inf else math.nan
    return EvalTrace(lp, en, weights, wmc_val, root_entropy)


def wmc(c: Circuit, p) -> float:
    """Probability mass the distribution p assigns to the circuit's models."""
    return float(np.exp(_root_lp(c, p)))


def semantic_loss(c: Circuit, p) -> float:
    """Negative log WMC in nats; +inf when the WMC is exactly zero."""
    lp = _root_lp(c, p)
    return math.inf if lp == -np.inf else float(-lp)


def _root_lp(c: Circuit, p) -> float:
    P = _as_batch(c, p)
    plan = _plan_for(c)
    LP, _EN = _forward(plan, P)
    return float(LP[-1, 0])


def nesy_entropy(c: Circuit, p) -> float:
    """Entropy of the distribution conditioned on the constraint (nats)."""
    P = _as_batch(c, p)
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    if LP[-1, 0] == -np.inf:
        raise ValueError("entropy undefined on empty support")
    free_h = _binary_entropy(P[0, plan.free_vars]).sum()
    return float(EN[-1, 0] + free_h)


def full_entropy(p) -> float:
    """Entropy of the unconditioned factorized distribution: sum of the
    per-variable binary entropies."""
    return float(_binary_entropy(clamp_probs(p)).sum())


def wmc_gradient(c: Circuit, p) -> np.ndarray:
    """d WMC / d p_i for every variable, via one reverse sweep."""
    P = _as_batch(c, p)
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    seed = np.where(LP[-1] > -np.inf, np.exp(LP[-1]), 0.0)
    return _backward(plan, P, LP, EN, seed, np.zeros(P.shape[0]))[0]


def entropy_gradient(c: Circuit, p) -> np.ndarray:
    """d nesy_entropy / d p_i, exact reverse-mode differentiation."""
    P = _as_batch(c, p)
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    if LP[-1, 0] == -np.inf:
        raise ValueError("entropy undefined on empty support")
    grad = _backward(
        plan, P, LP, EN, np.zeros(P.shape[0]), np.ones(P.shape[0])
    )
    if len(plan.free_vars):
        pv = P[:, plan.free_vars]
        grad[:, plan.free_vars] += np.log(1.0 - pv) - np.log(pv)
    return grad[0]


# ---------------------------------------------------------------------------
# batched engine API

def batch_query(c: Circuit, probs, what: str, with_grad: bool = False):
    """Row-wise queries over a (B, n) probability array.

    what is one of "wmc", "sl", "entropy".  Returns a (B,) value array, or
    (values, gradients) with a (B, n) gradient array when with_grad is set.
    Row b equals the single-instance query on row b exactly.
    """
    P = np.asarray(probs, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != c.var_count:
        raise ValueError(
            f"expected a (B, {c.var_count}) array, got shape {P.shape}"
        )
    P = clamp_probs(P)
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    root_lp = LP[-1]
    dead = root_lp == -np.inf
    if what == "wmc":
        values = np.exp(root_lp)
        if not with_grad:
            return values
        seed = np.where(dead, 0.0, values)
        return values, _backward(plan, P, LP, EN, seed, np.zeros(P.shape[0]))
    if what == "sl":
        values = np.where(dead, np.inf, -root_lp)
        if not with_grad:
            return values
        # d(-log wmc)/dp; rows with zero mass get a zero (finite) gradient
        seed = np.where(dead, 0.0, -1.0)
        return values, _backward(plan, P, LP, EN, seed, np.zeros(P.shape[0]))
    if what == "entropy":
        if dead.any():
            raise ValueError("entropy undefined on empty support")
        free_h = _binary_entropy(P[:, plan.free_vars]).sum(axis=1)
        values = EN[-1] + free_h
        if not with_grad:
            return values
        grad = _backward(
            plan, P, LP, EN, np.zeros(P.shape[0]), np.ones(P.shape[0])
        )
        if len(plan.free_vars):
            pv = P[:, plan.free_vars]
            grad[:, plan.free_vars] += np.log(1.0 - pv) - np.log(pv)
        return values, grad
    raise ValueError(f"unknown query kind {what!r}")


def batch_training_losses(c: Circuit, probs, w_sl: float, w_ent: float):
    """Semantic loss and entropy values plus the gradient of
    w_sl * SL + w_ent * entropy in a single forward/backward pair.

    Rows with zero constraint mass contribute an infinite SL but a zero
    SL-gradient; the entropy seed is disabled on such rows.
    """
    P = np.asarray(probs, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != c.var_count:
        raise ValueError(
            f"expected a (B, {c.var_count}) array, got shape {P.shape}"
        )
    P = clamp_probs(P)
    plan = _plan_for(c)
    LP, EN = _forward(plan, P)
    root_lp = LP[-1]
    dead = root_lp == -np.inf
    sl = np.where(dead, np.inf, -root_lp)
    free_h = _binary_entropy(P[:, plan.free_vars]).sum(axis=1)
    ent = np.where(dead, np.nan, EN[-1] + free_h)
    seed_lp = np.where(dead, 0.0, -w_sl)
    seed_en = np.where(dead, 0.0, w_ent)
    grad = _backward(plan, P, LP, EN, seed_lp, seed_en)
    if w_ent != 0.0 and len(plan.free_vars):
        pv = P[:, plan.free_vars]
        grad[:, plan.free_vars] += w_ent * (np.log(1.0 - pv) - np.log(pv))
    return sl, ent, grad
