"""Builders for the colouring SDP, its dual certificate, the copositive
companion program and the colouring-derived matrices.

Layout convention: vertex ``i`` (0-based) owns rows/columns ``3i..3i+2`` of a
``(3n+1)``-sided matrix, one per colour (red, yellow, blue), and the last
row/column is the homogenising coordinate.  Inside a 3x3 block, position
``k`` (1-based) is row-major for full blocks (``k = 3r + c + 1``) and for the
symmetric diagonal blocks follows the order (0,0), (1,1), (2,2), (0,1),
(0,2), (1,2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .graph import Coloring, Graph

DEFAULT_LOWER_BOUND = -100.0

DIAG_POSITIONS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
FULL_POSITIONS = tuple((r, c) for r in range(3) for c in range(3))
COLOR_PERMUTATIONS = tuple(itertools.permutations(range(3)))

_ONES = np.ones((3, 3))
_EYE = np.eye(3)


class VarKind(IntEnum):
    DIAG_D = 0
    ADJ_D = 1
    NONADJ_D = 2
    BORDER_D = 3
    CORNER_D = 4
    NONADJ_P = 5
    DUAL_Z = 6
    TAU = 7


class VarId(NamedTuple):
    """Variable handle; tuples order by kind, then indices.  Unused indices are -1."""

    kind: VarKind
    i: int = -1
    j: int = -1
    k: int = -1

    def __str__(self):
        idx = [v for v in (self.i, self.j, self.k) if v >= 0]
        return f"{self.kind.name}({','.join(map(str, idx))})"


def diag_d(i, k):
    return VarId(VarKind.DIAG_D, i, i, k)


def adj_d(i, j, k):
    return VarId(VarKind.ADJ_D, i, j, k)


def nonadj_d(i, j):
    return VarId(VarKind.NONADJ_D, i, j)


def border_d(i, k):
    return VarId(VarKind.BORDER_D, i, -1, k)


CORNER_D = VarId(VarKind.CORNER_D)
TAU = VarId(VarKind.TAU)


def nonadj_p(i, j, k):
    return VarId(VarKind.NONADJ_P, i, j, k)


FREE, NONPOSITIVE, NONNEGATIVE = "free", "nonpositive", "nonnegative"


@dataclass(frozen=True)
class LmiProblem:
    """``min sum_v objective[v] x_v`` s.t. ``constant + sum_v x_v coeff[v] >= 0`` (PSD).

    ``coeff[v]`` lists the upper-triangle entries ``(row, col, value)`` of the
    symmetric coefficient matrix of ``v``; mirrors are implied.  Extra scalar
    constraints come from ``sign`` and from ``linear_rows`` (pairs
    ``(const, {v: coef})`` meaning ``const + sum coef x_v >= 0``).
    ``lower_bound`` (if not None) adds ``objective >= lower_bound``.
    ``start`` is an optional strictly feasible point in ``vars`` order.
    """

    dim: int
    vars: tuple
    coeff: Mapping
    objective: Mapping
    sign: Mapping
    lower_bound: Optional[float] = DEFAULT_LOWER_BOUND
    constant: Optional[np.ndarray] = None
    linear_rows: tuple = ()
    start: Optional[np.ndarray] = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {v: t for t, v in enumerate(self.vars)})

    def index(self, v: VarId) -> int:
        return self._index[v]

    @property
    def nvars(self):
        return len(self.vars)

    def vars_of(self, *kinds):
        return [v for v in self.vars if v.kind in kinds]

    def cost_vector(self) -> np.ndarray:
        return np.array([self.objective.get(v, 0.0) for v in self.vars], dtype=float)

    def vector(self, x) -> np.ndarray:
        """Assignment (mapping or sequence in ``vars`` order) as a dense vector."""
        if isinstance(x, Mapping):
            missing = [v for v in self.vars if v not in x]
            if missing:
                raise KeyError(f"assignment misses {len(missing)} variable(s), e.g. {missing[0]}")
            return np.array([float(x[v]) for v in self.vars])
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nvars,):
            raise ValueError(f"assignment has shape {x.shape}, expected ({self.nvars},)")
        return x

    def coeff_matrix(self, v: VarId) -> np.ndarray:
        M = np.zeros((self.dim, self.dim))
        for r, c, val in self.coeff[v]:
            M[r, c] = val
            M[c, r] = val
        return M

    def entry_table(self):
        """Full symmetric entry listing grouped by variable: ``(ptr, rows, cols, vals)``."""
        ptr = [0]
        rows, cols, vals = [], [], []
        for v in self.vars:
            for r, c, val in self.coeff.get(v, ()):
                rows.append(r)
                cols.append(c)
                vals.append(val)
                if r != c:
                    rows.append(c)
                    cols.append(r)
                    vals.append(val)
            ptr.append(len(rows))
        return (np.array(ptr, dtype=np.int64), np.array(rows, dtype=np.int64),
                np.array(cols, dtype=np.int64), np.array(vals, dtype=float))


# --------------------------------------------------------------------------
# primal program
# --------------------------------------------------------------------------
def build_primal(g: Graph, lower_bound: Optional[float] = DEFAULT_LOWER_BOUND) -> LmiProblem:
    n = g.n
    corner = 3 * n
    coeff, objective, sign = {}, {}, {}

    def add(v, entries, obj, cls=FREE):
        coeff[v] = tuple(entries)
        objective[v] = float(obj)
        sign[v] = cls

    for i in range(n):
        for k, (r, c) in enumerate(DIAG_POSITIONS, start=1):
            add(diag_d(i, k), [(3 * i + r, 3 * i + c, 1.0)], 2.0 if k <= 3 else 0.0)
    for i, j in g.sorted_edges():
        for k, (r, c) in enumerate(FULL_POSITIONS, start=1):
            add(adj_d(i, j, k), [(3 * i + r, 3 * j + c, 1.0)], 0.0 if r == c else 2.0)
    non_edges = g.non_edges()
    for i, j in non_edges:
        add(nonadj_d(i, j), [(3 * i + r, 3 * j + c, 1.0) for r, c in FULL_POSITIONS], 12.0)
    for i in range(n):
        for k in range(1, 4):
            add(border_d(i, k), [(3 * i + k - 1, corner, 1.0)], 4.0)
    add(CORNER_D, [(corner, corner, 1.0)], 6.0)
    for i, j in non_edges:
        for k, (r, c) in enumerate(FULL_POSITIONS, start=1):
            add(nonadj_p(i, j, k), [(3 * i + r, 3 * j + c, 1.0)], 0.0, NONPOSITIVE)

    vars_ = tuple(sorted(coeff))
    start = np.array([identity_pattern_value(v) for v in vars_])
    return LmiProblem(3 * n + 1, vars_, coeff, objective, sign,
                      lower_bound=lower_bound, start=start)


def identity_pattern_value(v: VarId) -> float:
    """Strictly feasible start: every P entry at -1 and non-adjacent D blocks
    at +1, so that D + P is exactly the identity."""
    if v.kind == VarKind.DIAG_D and v.k <= 3:
        return 1.0
    if v.kind in (VarKind.CORNER_D, VarKind.NONADJ_D):
        return 1.0
    if v.kind == VarKind.NONADJ_P:
        return -1.0
    return 0.0


def primal_var_counts(n: int, m: int) -> tuple:
    """Closed-form (free D-variable count, nonpositive P-variable count)."""
    pairs = n * (n - 1) // 2
    return 6 * n + 9 * m + (pairs - m) + 3 * n + 1, 9 * (pairs - m)


def objective_value(prob: LmiProblem, x) -> float:
    return float(prob.cost_vector() @ prob.vector(x))


def assemble_matrix(prob: LmiProblem, x, kinds=None) -> np.ndarray:
    """``constant + sum x_v coeff[v]``; with ``kinds`` only those variables count."""
    x = prob.vector(x)
    M = np.zeros((prob.dim, prob.dim)) if prob.constant is None else np.array(prob.constant, dtype=float)
    for t, v in enumerate(prob.vars):
        if kinds is not None and v.kind not in kinds:
            continue
        if x[t] == 0.0:
            continue
        for r, c, val in prob.coeff[v]:
            M[r, c] += x[t] * val
            if r != c:
                M[c, r] += x[t] * val
    return M


# --------------------------------------------------------------------------
# colourings
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class PermutedColoring:
    base: Coloring
    variants: tuple
    vectors: np.ndarray  # (6, 3n+1)


def indicator_vector(c: Coloring) -> np.ndarray:
    n = len(c)
    u = np.zeros(3 * n + 1)
    for i, col in enumerate(c.assignment):
        u[3 * i + col] = 1.0
    u[-1] = 1.0
    return u


def permuted(c: Coloring, n: Optional[int] = None) -> PermutedColoring:
    """The six colourings obtained by relabelling colours, in the order of
    ``itertools.permutations((red, yellow, blue))``."""
    if n is not None and len(c) != n:
        raise ValueError(f"colouring has length {len(c)}, expected {n}")
    variants = tuple(Coloring(tuple(p[col] for col in c.assignment)) for p in COLOR_PERMUTATIONS)
    vectors = np.array([indicator_vector(v) for v in variants])
    return PermutedColoring(c, variants, vectors)


def identity_sum(prob: LmiProblem, d_assignment, pc: PermutedColoring, g: Graph):
    """Return ``(sum_k X_k D X_k^T, f(D))`` for a proper colouring."""
    if not pc.base.is_proper(g):
        raise ValueError("identity only holds for proper colourings")
    x = prob.vector(d_assignment).copy()
    for t, v in enumerate(prob.vars):
        if v.kind == VarKind.NONADJ_P:
            x[t] = 0.0
    M = assemble_matrix(prob, x)
    lhs = float(sum(u @ M @ u for u in pc.vectors))
    return lhs, objective_value(prob, x)


# --------------------------------------------------------------------------
# dual certificate
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class DualCertificate:
    """Free non-adjacent entries ``free[(i, j, k)]`` of the dual matrix; the rest is fixed."""

    n: int
    free: Mapping

    def assemble(self, g: Graph) -> np.ndarray:
        Z = dual_template(g)
        for (i, j, k), val in self.free.items():
            r, c = FULL_POSITIONS[k - 1]
            Z[3 * i + r, 3 * j + c] = val
            Z[3 * j + c, 3 * i + r] = val
        return Z


def dual_template(g: Graph) -> np.ndarray:
    """Fixed part of the dual matrix: 2I diagonal blocks, ones-minus-identity on
    edges, borders 2, corner 6, zero on non-adjacent blocks."""
    n = g.n
    Z = np.zeros((3 * n + 1, 3 * n + 1))
    for i in range(n):
        Z[3 * i:3 * i + 3, 3 * i:3 * i + 3] = 2 * _EYE
        Z[3 * i:3 * i + 3, 3 * n] = 2.0
        Z[3 * n, 3 * i:3 * i + 3] = 2.0
    for i, j in g.edges:
        Z[3 * i:3 * i + 3, 3 * j:3 * j + 3] = _ONES - _EYE
        Z[3 * j:3 * j + 3, 3 * i:3 * i + 3] = _ONES - _EYE
    Z[3 * n, 3 * n] = 6.0
    return Z


def outer_sum(vectors: np.ndarray) -> np.ndarray:
    return vectors.T @ vectors


def coloring_to_dual(pc: PermutedColoring, g: Graph):
    """Dual certificate ``Z = sum_k X_k^T X_k`` from a proper colouring."""
    if not pc.base.is_proper(g):
        raise ValueError("coloring_to_dual needs a proper colouring")
    Z = outer_sum(pc.vectors)
    free = {}
    for i, j in g.non_edges():
        for k, (r, c) in enumerate(FULL_POSITIONS, start=1):
            free[(i, j, k)] = float(Z[3 * i + r, 3 * j + c])
    report = validate_dual(Z, g, tol=0.0, psd_tol=1e-9)
    if not report.ok:
        raise AssertionError(f"constructed dual matrix fails {report.failed()}")
    return DualCertificate(g.n, free), Z


@dataclass
class DualReport:
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list:
        return [k for k, v in self.checks.items() if not v]


def validate_dual(Z: np.ndarray, g: Graph, tol: float = 1e-9, psd_tol: Optional[float] = None) -> DualReport:
    """Check each defining constraint of the dual matrix independently.

    Fixed entries are compared within ``tol`` (use 0 for bit equality); the
    PSD check requires ``min eigenvalue >= -psd_tol`` (defaults to ``tol``).
    """
    from .solver import min_eigenvalue

    n = g.n
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (3 * n + 1, 3 * n + 1):
        raise ValueError(f"dual matrix has shape {Z.shape}, expected side {3 * n + 1}")
    psd_tol = tol if psd_tol is None else psd_tol
    T = dual_template(g)

    def close(a, b):
        return bool(np.all(np.abs(a - b) <= tol))

    symmetric = close(Z, Z.T)
    checks = {"symmetric": symmetric}
    checks["psd"] = symmetric and min_eigenvalue(0.5 * (Z + Z.T)) >= -psd_tol
    checks["block_sums"] = all(
        abs(Z[3 * i:3 * i + 3, 3 * j:3 * j + 3].sum() - 6.0) <= 9 * tol
        for i in range(n) for j in range(n))
    checks["diagonal_blocks"] = all(close(Z[3 * i:3 * i + 3, 3 * i:3 * i + 3], 2 * _EYE) for i in range(n))
    checks["border_corner"] = close(Z[:3 * n, 3 * n], T[:3 * n, 3 * n]) and close(Z[3 * n, :], T[3 * n, :])
    checks["adjacent_blocks"] = all(
        close(Z[3 * i:3 * i + 3, 3 * j:3 * j + 3], _ONES - _EYE)
        and close(Z[3 * j:3 * j + 3, 3 * i:3 * i + 3], _ONES - _EYE)
        for i, j in g.edges)
    checks["nonnegative"] = all(
        bool(np.all(Z[3 * i:3 * i + 3, 3 * j:3 * j + 3] >= -tol)) for i, j in g.non_edges())
    return DualReport(checks)


def build_dual_feasibility(g: Graph) -> LmiProblem:
    """``min tau`` s.t. ``Z(z) + tau I >= 0`` with ``z >= 0`` and each
    non-adjacent block summing to 6.

    Eight entries per non-adjacent block are variables; the ninth is
    ``6 - sum`` of the others and its nonnegativity is a linear row.
    The dual colouring program is feasible iff the optimal ``tau <= 0``.
    """
    n = g.n
    dim = 3 * n + 1
    constant = dual_template(g)
    coeff, objective, sign = {}, {}, {}
    rows = []
    r9, c9 = FULL_POSITIONS[8]
    for i, j in g.non_edges():
        constant[3 * i + r9, 3 * j + c9] = constant[3 * j + c9, 3 * i + r9] = 6.0
        row = {}
        for k, (r, c) in enumerate(FULL_POSITIONS[:8], start=1):
            v = VarId(VarKind.DUAL_Z, i, j, k)
            coeff[v] = ((3 * i + r, 3 * j + c, 1.0), (3 * i + r9, 3 * j + c9, -1.0))
            objective[v] = 0.0
            sign[v] = NONNEGATIVE
            row[v] = -1.0
        rows.append((6.0, row))
    coeff[TAU] = tuple((p, p, 1.0) for p in range(dim))
    objective[TAU] = 1.0
    sign[TAU] = FREE
    vars_ = tuple(sorted(coeff))

    x0 = np.array([6.0 / 9.0 if v.kind == VarKind.DUAL_Z else 0.0 for v in vars_])
    partial = LmiProblem(dim, vars_, coeff, objective, sign, None, constant, tuple(rows))
    from .solver import min_eigenvalue

    x0[partial.index(TAU)] = 1.0 - min_eigenvalue(assemble_matrix(partial, x0))
    return LmiProblem(dim, vars_, coeff, objective, sign, None, constant, tuple(rows), start=x0)


def dual_from_feasibility(g: Graph, prob: LmiProblem, x) -> np.ndarray:
    """Dual matrix ``Z(z)`` (without the ``tau`` shift) at a solution of
    :func:`build_dual_feasibility`."""
    x = prob.vector(x).copy()
    x[prob.index(TAU)] = 0.0
    return assemble_matrix(prob, x)


# --------------------------------------------------------------------------
# copositive companion program
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class ConeMatrices:
    """Layouts for the copositive program and its completely positive dual.

    ``s_free`` marks entries of S that are variables (diagonal, adjacent,
    border and corner blocks); non-adjacent blocks of S are zero.
    ``b_fixed`` is the fixed part of B with zeros on its free non-adjacent
    blocks, marked by ``b_free``.  ``E[(i, j)]`` is the edge matrix.
    """

    n: int
    t: float
    s_free: np.ndarray
    b_fixed: np.ndarray
    b_free: np.ndarray
    E: Mapping

    def kstar_matrix(self, b_assignment: Optional[np.ndarray] = None) -> np.ndarray:
        """``B + t * sum E`` for free B-entries taken from ``b_assignment``
        (a full matrix; only ``b_free`` positions are read)."""
        B = self.b_fixed.copy()
        if b_assignment is not None:
            B[self.b_free] = np.asarray(b_assignment)[self.b_free]
        return B + self.t * sum(self.E.values(), np.zeros_like(B))


def s_template_mask(g: Graph) -> np.ndarray:
    n = g.n
    mask = np.zeros((3 * n + 1, 3 * n + 1), dtype=bool)
    for i in range(n):
        mask[3 * i:3 * i + 3, 3 * i:3 * i + 3] = True
        mask[3 * i:3 * i + 3, 3 * n] = mask[3 * n, 3 * i:3 * i + 3] = True
    for i, j in g.edges:
        mask[3 * i:3 * i + 3, 3 * j:3 * j + 3] = mask[3 * j:3 * j + 3, 3 * i:3 * i + 3] = True
    mask[3 * n, 3 * n] = True
    return mask


def edge_matrix(g: Graph, edge) -> np.ndarray:
    """E for ``edge``: the dual template with that edge's blocks set to 2I."""
    i, j = min(edge), max(edge)
    E = dual_template(g)
    if not g.adjacent(i, j):
        return np.zeros_like(E)
    E[3 * i:3 * i + 3, 3 * j:3 * j + 3] = 2 * _EYE
    E[3 * j:3 * j + 3, 3 * i:3 * i + 3] = 2 * _EYE
    return E


def build_cone_matrices(g: Graph, t: float) -> ConeMatrices:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    n = g.n
    b_free = ~s_template_mask(g)
    E = {e: edge_matrix(g, e) for e in itertools.combinations(range(n), 2)}
    return ConeMatrices(n, float(t), s_template_mask(g), dual_template(g), b_free, E)


def _offdiag_sum(block):
    return block.sum() - np.trace(block)


def k_objective_parts(g: Graph, S: np.ndarray):
    """``(g_total, {edge: p_edge})`` for an S respecting the template."""
    n = g.n
    S = np.asarray(S, dtype=float)
    if S.shape != (3 * n + 1, 3 * n + 1):
        raise ValueError(f"S has shape {S.shape}, expected side {3 * n + 1}")
    if np.any(S[~s_template_mask(g)] != 0):
        raise ValueError("S has nonzero entries in a non-adjacent block")
    blk = lambda i, j: S[3 * i:3 * i + 3, 3 * j:3 * j + 3]
    g_pair = {}
    total = 0.0
    for i in range(n):
        total += 2 * np.trace(blk(i, i))
        total += 4 * S[3 * i:3 * i + 3, 3 * n].sum()
    total += 6 * S[3 * n, 3 * n]
    for i, j in g.sorted_edges():
        g_pair[(i, j)] = _offdiag_sum(blk(i, j))
        # both ordered pairs contribute
        total += _offdiag_sum(blk(i, j)) + _offdiag_sum(blk(j, i))
    p = {e: total - 2 * g_pair[e] + 4 * np.trace(blk(*e)) for e in g_pair}
    return float(total), p


def evaluate_K_objective(g: Graph, S: np.ndarray, t: float) -> float:
    total, p = k_objective_parts(g, S)
    return total + t * sum(p.values())


def build_s2(g: Graph, a: float, b: float, c3: float, c4: float) -> np.ndarray:
    """Symmetric matrix of the quadratic form

        sum_edges [a (x_i x_j + y_i y_j + z_i z_j) + b (mixed-colour products)]
        + c3 sum_i (x_i + y_i + z_i - 1)^2 + c4 sum_i (x_i y_i + x_i z_i + y_i z_i)

    in ``(x_1, y_1, z_1, ..., x_n, y_n, z_n, 1)``, so that ``u @ S @ u``
    equals the form at ``u``.  Each edge block therefore holds ``a/2`` on its
    diagonal and ``b/2`` elsewhere.
    """
    m = g.m
    # (a, b) = (0, 0) drops the edge term entirely
    if (a, b) != (0, 0) and not (m * b < 0 and a + (m - 1) * b > 0):
        raise ValueError(f"need m*b < 0 and a + (m-1) b > 0 (m={m}, a={a}, b={b})")
    if c3 < 0 or c4 < 0:
        raise ValueError("c3 and c4 must be nonnegative")
    n = g.n
    S = np.zeros((3 * n + 1, 3 * n + 1))
    pair_block = 0.5 * (a * _EYE + b * (_ONES - _EYE))
    for i, j in g.edges:
        S[3 * i:3 * i + 3, 3 * j:3 * j + 3] += pair_block
        S[3 * j:3 * j + 3, 3 * i:3 * i + 3] += pair_block
    for i in range(n):
        S[3 * i:3 * i + 3, 3 * i:3 * i + 3] += c3 * _ONES + 0.5 * c4 * (_ONES - _EYE)
        S[3 * i:3 * i + 3, 3 * n] -= c3
        S[3 * n, 3 * i:3 * i + 3] -= c3
    S[3 * n, 3 * n] += c3 * n
    return S


def predicted_k_objective(m: int, a: float, b: float, t: float) -> float:
    return 6.0 * (m * b + m * (a + (m - 1) * b) * t)


def dcoloring_matrix(pc: PermutedColoring):
    """``(L, C)`` with ``L = C^T C`` and ``C`` the six permuted indicator rows."""
    C = pc.vectors.copy()
    return outer_sum(C), C


def kernel_check(Z: np.ndarray, n: int, samples: int = 100, seed: int = 0, q=None, x0=None) -> dict:
    """Residual ``max |Z v|`` over vectors ``v = [Q_1,Q_1,Q_1, ..., Q_n,Q_n,Q_n, x0]``
    with ``sum Q + x0 = 0``.  Explicit ``q``/``x0`` replace the random samples."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (3 * n + 1, 3 * n + 1):
        raise ValueError(f"matrix side {Z.shape} does not match n={n}")
    if q is not None:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        x0 = np.atleast_1d(-q.sum(axis=1) if x0 is None else np.asarray(x0, dtype=float))
    else:
        rng = np.random.default_rng(seed)
        q = rng.uniform(-1.0, 1.0, size=(samples, n))
        x0 = -q.sum(axis=1)
    V = np.hstack([np.repeat(q, 3, axis=1), x0[:, None]])
    constraint = np.abs(q.sum(axis=1) + x0).max() if len(x0) else 0.0
    residual = float(np.abs(V @ Z.T).max()) if len(V) else 0.0
    return {"samples": int(len(V)), "max_residual": residual, "constraint_violation": float(constraint)}
