"""Dense primal-dual interior-point method for block-diagonal LMI programs.

Problem form (``BlockLmi``)::

    minimise    c @ x
    subject to  S_b(x) = C_b + sum_i x_i F_{b,i}  is PSD for every block b

with dual ``max -sum_b <C_b, Z_b>`` s.t. ``sum_b <F_{b,i}, Z_b> = c_i``,
``Z_b`` PSD.  Side-1 blocks are handled as a nonnegative orthant.

The iteration is an infeasible-start path-following method using the HKM
(Helmberg-Kojima-Monteiro) search direction with Mehrotra predictor-corrector
and separate primal and dual step lengths.
"""

from __future__ import annotations

import enum
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .encoder import FREE, NONNEGATIVE, NONPOSITIVE, LmiProblem
from .kernels import schur_hkm


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class MatrixBlock:
    """One PSD block: ``constant + sum_i x_i F_i`` with the ``F_i`` given as a
    full symmetric entry listing grouped by variable (CSR-like ``ptr``)."""

    side: int
    ptr: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    constant: np.ndarray

    def assemble(self, x):
        owner = np.repeat(np.arange(len(self.ptr) - 1), np.diff(self.ptr))
        S = self.constant.copy()
        np.add.at(S, (self.rows, self.cols), self.vals * x[owner])
        return S

    def adjoint(self, X):
        """``[<F_i, X>]_i``."""
        owner = np.repeat(np.arange(len(self.ptr) - 1), np.diff(self.ptr))
        return np.bincount(owner, weights=self.vals * X[self.rows, self.cols],
                           minlength=len(self.ptr) - 1)


@dataclass(frozen=True)
class BlockLmi:
    """Canonical solver input.

    ``blocks`` are the PSD blocks of side >= 2 (plus the main block even when
    it has side 1); ``lin_G``/``lin_h`` hold every side-1 block as a row of
    ``lin_h + lin_G @ x >= 0``.  ``block_sides`` lists all block sides in the
    order main block, sign blocks, linear rows, bound block.
    """

    vars: tuple
    c: np.ndarray
    blocks: tuple
    lin_G: np.ndarray
    lin_h: np.ndarray
    block_sides: tuple
    start: Optional[np.ndarray] = None

    @property
    def nvars(self):
        return len(self.vars)

    def slacks(self, x):
        return [b.assemble(x) for b in self.blocks], self.lin_h + self.lin_G @ x


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-7
    max_iter: int = 200
    step_fraction: float = 0.98
    stall_iters: int = 10  # stop after this many iterations without progress
    verbose: bool = False
    log: Optional[object] = None  # writable stream; stderr when verbose and unset


@dataclass
class SolveReport:
    """Outcome of :func:`solve`.

    ``duality_gap`` is the relative gap ``|p - d| / (1 + |p| + |d|)`` of the
    internally rescaled problem (cost divided by its largest entry);
    ``min_eig`` is the smallest eigenvalue over all primal slack blocks.
    """

    status: Status
    objective: float
    x: np.ndarray
    duality_gap: float
    min_eig: float
    iterations: int
    wall_time: float
    dual_objective: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    vars: tuple = ()
    dual_blocks: list = field(default_factory=list)
    dual_lin: Optional[np.ndarray] = None
    trace: list = field(default_factory=list)

    def assignment(self) -> dict:
        return dict(zip(self.vars, self.x.tolist()))

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED


def min_eigenvalue(M, symmetry_tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK ``syevd`` via numpy)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return float("inf")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > symmetry_tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


# --------------------------------------------------------------------------
# canonicalisation
# --------------------------------------------------------------------------
def canonicalize(prob: LmiProblem) -> BlockLmi:
    nv = prob.nvars
    ptr, rows, cols, vals = prob.entry_table()
    constant = (np.zeros((prob.dim, prob.dim)) if prob.constant is None
                else np.array(prob.constant, dtype=float))
    main = MatrixBlock(prob.dim, ptr, rows, cols, vals, constant)

    G_rows, h = [], []
    sides = [prob.dim]
    for t, v in enumerate(prob.vars):
        cls = prob.sign.get(v, FREE)
        if cls == FREE:
            continue
        row = np.zeros(nv)
        row[t] = -1.0 if cls == NONPOSITIVE else 1.0
        if cls not in (NONPOSITIVE, NONNEGATIVE):
            raise ValueError(f"unknown sign class {cls!r} for {v}")
        G_rows.append(row)
        h.append(0.0)
        sides.append(1)
    for const, coefs in prob.linear_rows:
        row = np.zeros(nv)
        for v, a in coefs.items():
            row[prob.index(v)] = a
        G_rows.append(row)
        h.append(float(const))
        sides.append(1)
    if prob.lower_bound is not None:
        G_rows.append(prob.cost_vector())
        h.append(-float(prob.lower_bound))
        sides.append(1)
    G = np.array(G_rows).reshape(len(G_rows), nv)
    return BlockLmi(prob.vars, prob.cost_vector(), (main,), G, np.array(h),
                    tuple(sides), None if prob.start is None else np.array(prob.start, dtype=float))


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------
def _max_step(X, dX):
    """Largest ``a`` with ``X + a dX`` PSD (``inf`` if unbounded)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    W = sla.solve_triangular(L, dX, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (W + W.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lin(s, ds):
    neg = ds < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-s[neg] / ds[neg]))


def _inv_spd(S):
    L = np.linalg.cholesky(S)
    Linv = sla.solve_triangular(L, np.eye(S.shape[0]), lower=True)
    return Linv.T @ Linv


def _solve_spd(M, rhs):
    try:
        return sla.cho_solve(sla.cho_factor(M, lower=True, check_finite=False), rhs,
                             check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError):
        pass
    d = np.sqrt(np.maximum(np.diag(M), 1e-300))
    Ms = M / d[:, None] / d[None, :]
    reg = 1e-14
    while True:
        try:
            cho = sla.cho_factor(Ms + reg * np.eye(M.shape[0]), lower=True, check_finite=False)
            break
        except (np.linalg.LinAlgError, sla.LinAlgError):
            reg *= 10.0
    return sla.cho_solve(cho, rhs / d, check_finite=False) / d


def solve(blmi: BlockLmi, opts: Optional[SolverOptions] = None) -> SolveReport:
    """Minimise ``c @ x`` over the LMI; see the module docstring for the method."""
    opts = opts or SolverOptions()
    log = opts.log if opts.log is not None else (sys.stderr if opts.verbose else None)
    t0 = time.perf_counter()
    nv = blmi.nvars
    blocks = blmi.blocks
    # Work on a copy with the cost and the coefficients of every linear row
    # scaled to unit max norm.  Positive rescaling leaves the feasible set and argmin alone and
    # makes the iterates covariant under scaling of the objective.
    c_scale = float(np.abs(blmi.c).max(initial=0.0))
    c_scale = c_scale if c_scale > 0 else 1.0
    c = blmi.c / c_scale
    row_scale = np.abs(blmi.lin_G).max(axis=1, initial=0.0)
    row_scale[~(row_scale > 0)] = 1.0
    G, h = blmi.lin_G / row_scale[:, None], blmi.lin_h / row_scale
    nu = sum(b.side for b in blocks) + len(h)

    def slacks(x):
        return [b.assemble(x) for b in blocks], h + G @ x

    x = np.zeros(nv) if blmi.start is None else blmi.start.copy()
    S_list, s = slacks(x)
    # infeasible start when the supplied point is not strictly feasible
    Rp = []
    for b, S in zip(blocks, S_list):
        try:
            np.linalg.cholesky(S)
            Rp.append(np.zeros_like(S))
        except np.linalg.LinAlgError:
            xi = max(10.0, float(np.abs(S).max()))
            Rp.append(S - xi * np.eye(b.side))
    rp_lin = np.where(s > 0, 0.0, s - max(10.0, float(np.abs(s).max(initial=0.0))))
    S_list = [S - R for S, R in zip(S_list, Rp)]
    s = s - rp_lin
    Z_list = [np.eye(b.side) for b in blocks]
    z = np.ones(len(h))
    c_norm = 1.0 + np.linalg.norm(c)
    const_norm = 1.0 + sum(np.linalg.norm(b.constant) for b in blocks) + np.linalg.norm(h)
    p_scale = 1.0  # fraction of the initial primal residual still present

    trace = []
    status = Status.ITERATION_LIMIT
    it = 0
    rel_gap = pinf = dinf = np.inf
    pobj = dobj = np.nan
    best, best_merit, since_best = None, np.inf, 0

    def residuals():
        rd = c.copy()
        for b, Z in zip(blocks, Z_list):
            rd -= b.adjoint(Z)
        rd -= G.T @ z
        return rd

    if log is not None:
        print(f"{'iter':>4} {'pobj':>14} {'dobj':>14} {'gap':>9} {'pinf':>9} {'dinf':>9} "
              f"{'min_eig':>10} {'step_p':>7} {'step_d':>7}", file=log)

    while True:
        rd = residuals()
        pobj = float(c @ x)
        dobj = float(-sum(np.sum(b.constant * Z) for b, Z in zip(blocks, Z_list)) - h @ z)
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = p_scale * (sum(np.linalg.norm(R) for R in Rp) + np.linalg.norm(rp_lin)) / const_norm
        dinf = float(np.linalg.norm(rd)) / c_norm
        mu = (sum(np.sum(S * Z) for S, Z in zip(S_list, Z_list)) + s @ z) / nu
        if not np.all(np.isfinite([pobj, dobj, mu, dinf])):
            status = Status.NUMERICAL_FAILURE
            break
        merit = max(rel_gap / opts.gap_tol, pinf / opts.feas_tol, dinf / opts.feas_tol)
        if merit < 0.9 * best_merit:
            since_best = 0
        else:
            since_best += 1
        if merit < best_merit:
            best_merit = merit
            best = (x, Z_list, z, pobj, dobj, rel_gap, pinf, dinf)
        if merit <= 1.0:
            status = Status.CONVERGED
            break
        if since_best >= opts.stall_iters:
            # degenerate problems lose Newton accuracy near the optimum;
            # keep the best iterate rather than drifting away from it
            status = Status.NUMERICAL_FAILURE
            break
        if it >= opts.max_iter:
            status = Status.ITERATION_LIMIT
            break
        it += 1
        try:
            Sinv_list = [_inv_spd(S) for S in S_list]
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break

        M = np.zeros((nv, nv))
        for b, Z, Sinv in zip(blocks, Z_list, Sinv_list):
            M += schur_hkm(b.ptr, b.rows, b.cols, b.vals, Z, Sinv)
        if len(h):
            M += G.T @ ((z / s)[:, None] * G)
        try:
            cho = sla.cho_factor(M, lower=True, check_finite=False)
            base_solve = lambda r: sla.cho_solve(cho, r, check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            base_solve = lambda r: _solve_spd(M, r)

        def lin_solve(r):
            sol = base_solve(r)
            return sol + base_solve(r - M @ sol)  # one refinement step

        Rp_cur = [p_scale * R for R in Rp]
        rpl_cur = p_scale * rp_lin

        def direction(sigma_mu, R_corr, r_corr):
            rhs = -rd.copy()
            for b, Z, Sinv, R, Rc in zip(blocks, Z_list, Sinv_list, Rp_cur, R_corr):
                T = (sigma_mu * np.eye(b.side) - Rc) @ Sinv - Z - Z @ R @ Sinv
                rhs += b.adjoint(0.5 * (T + T.T))
            if len(h):
                rhs += G.T @ ((sigma_mu - r_corr) / s - z - z * rpl_cur / s)
            dx = lin_solve(rhs)
            if not np.all(np.isfinite(dx)):
                raise FloatingPointError("non-finite Newton step")
            dS, dZ = [], []
            for b, Z, Sinv, R, Rc in zip(blocks, Z_list, Sinv_list, Rp_cur, R_corr):
                dSb = b.assemble(dx) - b.constant + R
                T = (sigma_mu * np.eye(b.side) - Rc) @ Sinv - Z - Z @ dSb @ Sinv
                dS.append(dSb)
                dZ.append(0.5 * (T + T.T))
            ds = G @ dx + rpl_cur
            dz = (sigma_mu - r_corr) / s - z - z * ds / s
            return dx, dS, dZ, ds, dz

        def steps(dS, dZ, ds, dz):
            ap = min([_max_step(S, d) for S, d in zip(S_list, dS)] + [_max_step_lin(s, ds)])
            ad = min([_max_step(Z, d) for Z, d in zip(Z_list, dZ)] + [_max_step_lin(z, dz)])
            return min(1.0, opts.step_fraction * ap), min(1.0, opts.step_fraction * ad)

        try:
            zero = [np.zeros((b.side, b.side)) for b in blocks]
            dx, dS, dZ, ds, dz = direction(0.0, zero, np.zeros(len(h)))
            ap, ad = steps(dS, dZ, ds, dz)
            mu_aff = (sum(np.sum((S + ap * a) * (Z + ad * b_))
                          for S, a, Z, b_ in zip(S_list, dS, Z_list, dZ))
                      + (s + ap * ds) @ (z + ad * dz)) / nu
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
            R_corr = [dz_ @ ds_ for dz_, ds_ in zip(dZ, dS)]
            dx, dS, dZ, ds, dz = direction(sigma * mu, R_corr, dz * ds)
            ap, ad = steps(dS, dZ, ds, dz)
            if min(ap, ad) < 0.05:
                # the corrector can point outside the cone near a degenerate
                # optimum; a plain centring step is the safe fallback
                dx2, dS2, dZ2, ds2, dz2 = direction(mu, zero, np.zeros(len(h)))
                ap2, ad2 = steps(dS2, dZ2, ds2, dz2)
                if min(ap2, ad2) > min(ap, ad):
                    dx, dS, dZ, ds, dz, ap, ad = dx2, dS2, dZ2, ds2, dz2, ap2, ad2
        except (FloatingPointError, np.linalg.LinAlgError):
            status = Status.NUMERICAL_FAILURE
            break

        x = x + ap * dx
        p_scale *= 1.0 - ap
        S_list, s = slacks(x)
        S_list = [S - p_scale * R for S, R in zip(S_list, Rp)]
        s = s - p_scale * rp_lin
        Z_list = [Z + ad * d for Z, d in zip(Z_list, dZ)]
        z = z + ad * dz
        entry = {"iter": it, "pobj": c_scale * pobj, "dobj": c_scale * dobj, "gap": rel_gap, "pinf": pinf,
                 "dinf": dinf, "mu": mu, "step_p": ap, "step_d": ad}
        trace.append(entry)
        if log is not None:
            meig = min(float(np.linalg.eigvalsh(S)[0]) for S in S_list)
            print(f"{it:4d} {c_scale * pobj:14.7e} {c_scale * dobj:14.7e} {rel_gap:9.2e} {pinf:9.2e} {dinf:9.2e} "
                  f"{meig:10.2e} {ap:7.3f} {ad:7.3f}", file=log)
        if max(ap, ad) < 1e-12:
            status = Status.NUMERICAL_FAILURE
            break

    if best is not None and status != Status.CONVERGED:
        x, Z_list, z, pobj, dobj, rel_gap, pinf, dinf = best
    S_true, s_true = blmi.slacks(x)
    min_eig = min([min_eigenvalue(0.5 * (S + S.T), np.inf) for S in S_true]
                  + ([float(s_true.min())] if len(s_true) else []))
    if status == Status.CONVERGED and min_eig < -opts.feas_tol:
        status = Status.NUMERICAL_FAILURE
    return SolveReport(
        status=status,
        objective=float(blmi.c @ x),
        x=x,
        duality_gap=float(rel_gap),
        min_eig=float(min_eig),
        iterations=it,
        wall_time=time.perf_counter() - t0,
        dual_objective=float(c_scale * dobj),
        primal_residual=float(pinf),
        dual_residual=float(dinf),
        vars=blmi.vars,
        dual_blocks=[c_scale * Z for Z in Z_list],
        dual_lin=c_scale * z / row_scale,
        trace=trace,
    )


def solve_problem(prob: LmiProblem, opts: Optional[SolverOptions] = None) -> SolveReport:
    return solve(canonicalize(prob), opts)
