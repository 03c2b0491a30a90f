"""Hot numeric kernels.

Each kernel exists as a plain-loop function compiled by numba when available.
Where the uncompiled loop is too slow to be a usable fallback, a vectorised
numpy twin is provided and selected by :data:`colorsdp._accel.USE_NUMBA`.
"""

import numpy as np
import scipy.sparse as sp

from ._accel import USE_NUMBA, maybe_njit


# --------------------------------------------------------------------------
# 3-colouring enumeration
# --------------------------------------------------------------------------
@maybe_njit
def _count_3colorings_loop(order, nbr, deg, witness):
    """Count proper 3-colourings by iterative backtracking.

    ``order`` fixes the branching order; ``nbr``/``deg`` are padded adjacency
    lists.  The first colouring found is copied into ``witness``.
    """
    n = order.shape[0]
    col = np.full(nbr.shape[0], -1, dtype=np.int64)
    count = 0
    pos = 0
    while pos >= 0:
        v = order[pos]
        c = col[v] + 1
        while c < 3:
            ok = True
            for t in range(deg[v]):
                if col[nbr[v, t]] == c:
                    ok = False
                    break
            if ok:
                break
            c += 1
        if c < 3:
            col[v] = c
            if pos == n - 1:
                if count == 0:
                    for u in range(col.shape[0]):
                        witness[u] = col[u]
                count += 1
            else:
                pos += 1
        else:
            col[v] = -1
            pos -= 1
    return count


def count_3colorings(order, nbr, deg):
    """Return ``(count, witness)`` for the vertices in ``order`` (one connected
    component, or the whole graph) given padded adjacency lists."""
    witness = np.full(nbr.shape[0], -1, dtype=np.int64)
    if order.shape[0] == 0:
        return 1, witness
    count = _count_3colorings_loop(
        np.ascontiguousarray(order, dtype=np.int64),
        np.ascontiguousarray(nbr, dtype=np.int64),
        np.ascontiguousarray(deg, dtype=np.int64),
        witness,
    )
    return int(count), witness


# --------------------------------------------------------------------------
# Schur complement of the HKM Newton system
# --------------------------------------------------------------------------
@maybe_njit
def _schur_loop(ptr, rows, cols, vals, Z, Sinv):
    nv = ptr.shape[0] - 1
    M = np.zeros((nv, nv))
    for i in range(nv):
        for j in range(i, nv):
            acc = 0.0
            for e in range(ptr[i], ptr[i + 1]):
                pe = rows[e]
                qe = cols[e]
                ve = vals[e]
                for f in range(ptr[j], ptr[j + 1]):
                    acc += ve * vals[f] * Z[qe, rows[f]] * Sinv[cols[f], pe]
            M[i, j] = acc
            M[j, i] = acc
    return M


def _schur_numpy(ptr, rows, cols, vals, Z, Sinv):
    nv = ptr.shape[0] - 1
    owner = np.repeat(np.arange(nv), np.diff(ptr))
    B = sp.csc_matrix((vals, (np.arange(vals.shape[0]), owner)), shape=(vals.shape[0], nv))
    T = Z[np.ix_(cols, rows)] * Sinv[np.ix_(rows, cols)]
    M = np.asarray((B.T @ (B.T @ T.T).T))
    return 0.5 * (M + M.T)


def schur_hkm(ptr, rows, cols, vals, Z, Sinv):
    """Assemble ``M[i, j] = tr(F_i Z F_j S^-1)`` for one matrix block.

    The coefficient matrices ``F_i`` are given in CSR-like form over variables:
    entries ``ptr[i]:ptr[i+1]`` of ``rows``/``cols``/``vals`` list every nonzero
    of ``F_i`` (both triangles).
    """
    if USE_NUMBA:
        return _schur_loop(ptr, rows, cols, vals, Z, Sinv)
    return _schur_numpy(ptr, rows, cols, vals, Z, Sinv)


# --------------------------------------------------------------------------
# Copositivity by simplicial subdivision
# --------------------------------------------------------------------------
@maybe_njit
def _simplex_certified(A, V):
    R = V.T @ A @ V
    k = R.shape[0]
    nonneg = True
    for a in range(k):
        for b in range(k):
            if R[a, b] < 0.0:
                nonneg = False
                break
        if not nonneg:
            break
    if nonneg:
        return True
    Rs = 0.5 * (R + R.T)
    return np.linalg.eigvalsh(Rs)[0] >= 0.0


@maybe_njit
def _copositive_search(A, max_depth, witness):
    """Depth-first longest-edge bisection of the standard simplex.

    Returns ``(code, depth_reached, value)`` where code is 0 for certified
    copositive, 1 for a negative point (written to ``witness``) and 2 when the
    depth budget ran out first.
    """
    k = A.shape[0]
    stack = np.zeros((max_depth + 2, k, k))
    depths = np.zeros(max_depth + 2, dtype=np.int64)
    for a in range(k):
        stack[0, a, a] = 1.0
        val = A[a, a]
        if val < 0.0:
            for b in range(k):
                witness[b] = 0.0
            witness[a] = 1.0
            return 1, 0, val
    top = 1
    deepest = 0
    exhausted = False
    while top > 0:
        top -= 1
        V = stack[top].copy()
        d = depths[top]
        if d > deepest:
            deepest = d
        if _simplex_certified(A, V):
            continue
        if d >= max_depth:
            exhausted = True
            continue
        # longest edge in the Euclidean norm
        best = -1.0
        ba = 0
        bb = 1
        for a in range(k):
            for b in range(a + 1, k):
                diff = 0.0
                for r in range(k):
                    t = V[r, a] - V[r, b]
                    diff += t * t
                if diff > best:
                    best = diff
                    ba = a
                    bb = b
        mid = 0.5 * (V[:, ba] + V[:, bb])
        val = mid @ A @ mid
        if val < 0.0:
            for r in range(k):
                witness[r] = mid[r]
            return 1, d + 1, val
        stack[top] = V
        stack[top, :, bb] = mid
        depths[top] = d + 1
        stack[top + 1] = V
        stack[top + 1, :, ba] = mid
        depths[top + 1] = d + 1
        top += 2
    if exhausted:
        return 2, deepest, 0.0
    return 0, deepest, 0.0


def copositive_search(A, max_depth):
    """Run the subdivision search; see :func:`colorsdp.cones.is_copositive`."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    witness = np.zeros(A.shape[0])
    code, depth, value = _copositive_search(A, int(max_depth), witness)
    return int(code), int(depth), float(value), witness
