"""Copositivity and complete-positivity probes for small matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .encoder import build_s2, evaluate_K_objective, predicted_k_objective
from .graph import Graph, GraphError, is_d_graph
from .kernels import copositive_search

CP_RTOL = 1e-6


@dataclass(frozen=True)
class Copositive:
    depth: int
    kind: str = "Copositive"


@dataclass(frozen=True)
class NotCopositive:
    witness: np.ndarray
    value: float
    kind: str = "NotCopositive"


@dataclass(frozen=True)
class Unknown:
    depth: int
    kind: str = "Unknown"


CopositivityVerdict = Union[Copositive, NotCopositive, Unknown]


def default_depth(side: int) -> int:
    return 12 if side <= 6 else 4


def _symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def is_copositive(A, max_depth: Optional[int] = None) -> CopositivityVerdict:
    """Search the standard simplex for a point with negative ``x^T A x``.

    Sub-simplices are bisected along their longest edge.  A sub-simplex with
    vertex matrix ``V`` is certified when ``V^T A V`` is entrywise nonnegative
    or positive semidefinite; either condition makes the form nonnegative on
    it.  ``Unknown`` means the depth budget ran out before a verdict.
    """
    A = _symmetric(A)
    if A.shape[0] == 0:
        return Copositive(0)
    depth = default_depth(A.shape[0]) if max_depth is None else int(max_depth)
    code, reached, _, witness = copositive_search(A, depth)
    if code == 0:
        return Copositive(reached)
    if code == 2:
        return Unknown(reached)
    w = np.maximum(witness, 0.0)
    w = w / w.sum()
    value = float(w @ A @ w)
    if not value < 0:  # cannot happen for an exact midpoint; guard anyway
        return Unknown(reached)
    return NotCopositive(w, value)


# --------------------------------------------------------------------------
# completely positive factorisation
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Factor:
    C: np.ndarray
    residual: float
    kind: str = "Factor"


@dataclass(frozen=True)
class Inconclusive:
    residual: float
    kind: str = "Inconclusive"


def _initial_factor(A, rank, rng):
    k = A.shape[0]
    try:
        L = np.linalg.cholesky(A)
        C0 = np.abs(L.T)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(A)
        C0 = np.abs((V * np.sqrt(np.maximum(w, 0.0))).T)
        if not np.any(C0):
            C0 = rng.uniform(0.0, 1.0, size=(k, k))
    if rank > C0.shape[0]:
        pad = rng.uniform(0.0, 1e-3, size=(rank - C0.shape[0], k))
        C0 = np.vstack([C0, pad])
    return C0[:rank]


def cp_factor_attempt(A, rank_budget: Optional[int] = None, iters: int = 5000,
                      init: Optional[np.ndarray] = None, seed: int = 0):
    """Look for ``C >= 0`` with ``C^T C = A`` by symmetric multiplicative updates.

    Returns :class:`Factor` when ``||C^T C - A||_F <= 1e-6 (1 + ||A||_F)``,
    otherwise :class:`Inconclusive`.  Failure says nothing about whether a
    factor exists.
    """
    A = _symmetric(A)
    if np.any(np.diag(A) < 0):
        raise ValueError("diagonal must be nonnegative")
    k = A.shape[0]
    rank = 2 * k if rank_budget is None else int(rank_budget)
    rng = np.random.default_rng(seed)
    target = CP_RTOL * (1.0 + np.linalg.norm(A))
    if init is not None:
        C = np.maximum(np.asarray(init, dtype=float), 0.0)
    elif np.any(A < 0):
        # a CP matrix is entrywise nonnegative; skip straight to a random start
        C = rng.uniform(0.0, 1.0, size=(rank, k))
    else:
        C = _initial_factor(A, rank, rng)
    Ap, An = np.maximum(A, 0.0), np.maximum(-A, 0.0)
    eps = 1e-16
    for _ in range(iters):
        res = np.linalg.norm(C.T @ C - A)
        if res <= target:
            return Factor(C, float(res))
        # gradient of ||C^T C - A||^2 split into positive and negative parts
        num = C @ Ap + eps
        den = C @ (C.T @ C) + C @ An + eps
        C = C * np.sqrt(num / den)
    res = float(np.linalg.norm(C.T @ C - A))
    return Factor(C, res) if res <= target else Inconclusive(res)


# --------------------------------------------------------------------------
# copositive companion probe
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class ProbeReport:
    verdict: CopositivityVerdict
    objective: float
    predicted: float
    residual: float
    params: dict


def probe_theorem32(g: Graph, a: Optional[float] = None, b: float = -0.5,
                    c3: float = 10.0, c4: float = 10.0, t: float = 1.0,
                    max_depth: Optional[int] = None) -> ProbeReport:
    """Build the second quadratic-form matrix for a D-graph, test it for
    copositivity, and compare its objective value with the closed form
    ``6 (m b + m (a + (m - 1) b) t)``."""
    if not is_d_graph(g):
        raise GraphError("graph is not a D-graph")
    a = float(g.m) if a is None else float(a)
    S2 = build_s2(g, a, b, c3, c4)
    verdict = is_copositive(S2, max_depth)
    obj = evaluate_K_objective(g, S2, t)
    pred = predicted_k_objective(g.m, a, b, t)
    return ProbeReport(verdict, float(obj), float(pred), float(obj - pred),
                       {"a": a, "b": float(b), "c3": float(c3), "c4": float(c4), "t": float(t),
                        "max_depth": default_depth(S2.shape[0]) if max_depth is None else max_depth})
