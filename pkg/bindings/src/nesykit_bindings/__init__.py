"""Flat procedural binding around the circuit engine for training loops.

The engine owns every compiled circuit; callers hold opaque handles and
move batched probability arrays across the boundary in single calls.  A
handle stays valid until free() or garbage collection, and is safe to
share across threads for queries (the engine's query kernels are pure);
load and free must not race queries on the same handle.
"""

from __future__ import annotations

import os
import threading

import numpy as np

import nesykit as _engine

__all__ = ["BoundCircuit", "load", "free", "var_count", "batch_query"]

_lock = threading.Lock()
_registry: dict[int, object] = {}
_next_id = 0

QUERIES = ("wmc", "sl", "entropy")


class BoundCircuit:
    """Opaque handle to an engine-owned compiled circuit."""

    __slots__ = ("_id", "var_count")

    def __init__(self, handle_id: int, n_vars: int):
        self._id = handle_id
        self.var_count = n_vars

    def __repr__(self) -> str:
        state = "live" if self._id in _registry else "freed"
        return f"BoundCircuit(#{self._id}, {self.var_count} vars, {state})"

    def __del__(self):
        _registry.pop(self._id, None)


def _circuit_of(c: BoundCircuit):
    try:
        return _registry[c._id]
    except KeyError:
        raise ValueError("circuit handle has been freed") from None


def load(source: str) -> BoundCircuit:
    """Compile or load a circuit from NNF text, formula text, or a file path.

    A path argument is read first; content starting with an "nnf" header is
    parsed as a circuit file, anything else as a formula s-expression that
    gets compiled.  Engine errors propagate unchanged.
    """
    global _next_id
    text = source
    if os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    if text.lstrip().startswith("nnf"):
        circuit = _engine.read_nnf(text)
    else:
        circuit, _stats = _engine.compile(_engine.parse_formula(text))
    with _lock:
        handle_id = _next_id
        _next_id += 1
        _registry[handle_id] = circuit
    return BoundCircuit(handle_id, circuit.var_count)


def free(c: BoundCircuit) -> None:
    """Release the engine-side circuit; the handle becomes unusable."""
    with _lock:
        if _registry.pop(c._id, None) is None:
            raise ValueError("circuit handle has been freed")


def var_count(c: BoundCircuit) -> int:
    _circuit_of(c)  # freed-handle check
    return c.var_count


def batch_query(c: BoundCircuit, probs, what: str, with_grad: bool = False):
    """Run one query over a (B, n) probability array.

    what is one of "wmc", "sl", "entropy".  Returns a (B,) value array,
    plus a (B, n) gradient array when with_grad is set.  Row b equals the
    single-instance query on row b exactly.
    """
    circuit = _circuit_of(c)
    if what not in QUERIES:
        raise ValueError(f"unknown query {what!r}; expected one of {QUERIES}")
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != c.var_count:
        raise ValueError(
            f"probability array must have shape (B, {c.var_count}), "
            f"got {arr.shape}"
        )
    return _engine.batch_query(circuit, arr, what, with_grad=with_grad)
