"""Low-level int64 Smith-form kernels for degree-1 coefficient rings.

All arithmetic is exact in Z/p^W where W is chosen so that products of two
reduced entries fit in int64.  The numba-jitted kernel is used when available;
a vectorized numpy implementation with identical pivoting semantics is the
fallback.  Pivot rule everywhere: globally minimal valuation, ties broken by
lowest row index then lowest column index.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only on numba-less installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def int64_precision_cap(p: int) -> int:
    """Largest W with p^(2W) < 2^63, so q*entry never overflows."""
    cap = 1
    limit = 3037000499  # floor(sqrt(2^63 - 1))
    while p ** (cap + 1) <= limit:
        cap += 1
    return cap


@njit(cache=True)
def _modinv_i64(a, m):
    # extended Euclid; a is a unit mod m
    old_r, r = a % m, m
    old_s, s = 1, 0
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    return old_s % m


@njit(cache=True)
def _snf_i64(A, p, m, exps, U, Uinv, V, Vinv, track):
    R, C = A.shape
    npiv = 0
    kmax = R if R < C else C
    for k in range(kmax):
        # locate the minimum-valuation entry of the active block
        best_v = -1
        bi = -1
        bj = -1
        done = False
        for i in range(k, R):
            for j in range(k, C):
                a = A[i, j]
                if a != 0:
                    v = 0
                    while a % p == 0:
                        a //= p
                        v += 1
                    if best_v == -1 or v < best_v:
                        best_v = v
                        bi = i
                        bj = j
                        if v == 0:
                            done = True
                            break
            if done:
                break
        if best_v == -1:
            break
        # move pivot to (k, k)
        if bi != k:
            for c in range(C):
                t = A[k, c]
                A[k, c] = A[bi, c]
                A[bi, c] = t
            if track >= 1:
                for c in range(U.shape[1]):
                    t = U[k, c]
                    U[k, c] = U[bi, c]
                    U[bi, c] = t
                for r in range(Uinv.shape[0]):
                    t = Uinv[r, k]
                    Uinv[r, k] = Uinv[r, bi]
                    Uinv[r, bi] = t
        if bj != k:
            for r in range(R):
                t = A[r, k]
                A[r, k] = A[r, bj]
                A[r, bj] = t
            if track >= 2:
                for r in range(V.shape[0]):
                    t = V[r, k]
                    V[r, k] = V[r, bj]
                    V[r, bj] = t
                for c in range(Vinv.shape[1]):
                    t = Vinv[k, c]
                    Vinv[k, c] = Vinv[bj, c]
                    Vinv[bj, c] = t
        pv = 1
        for _ in range(best_v):
            pv *= p
        # normalize the pivot row by the inverse of the pivot's unit part
        u = A[k, k] // pv
        uinv = _modinv_i64(u % m, m)
        for c in range(k, C):
            A[k, c] = (A[k, c] * uinv) % m
        if track >= 1:
            for c in range(U.shape[1]):
                U[k, c] = (U[k, c] * uinv) % m
            for r in range(Uinv.shape[0]):
                Uinv[r, k] = (Uinv[r, k] * u) % m
        # clear the pivot column below
        for r in range(k + 1, R):
            a = A[r, k]
            if a != 0:
                q = a // pv
                for c in range(k, C):
                    A[r, c] = (A[r, c] - q * A[k, c]) % m
                if track >= 1:
                    for c in range(U.shape[1]):
                        U[r, c] = (U[r, c] - q * U[k, c]) % m
                    for rr in range(Uinv.shape[0]):
                        Uinv[rr, k] = (Uinv[rr, k] + q * Uinv[rr, r]) % m
        # clear the pivot row to the right; the pivot column is zero elsewhere,
        # so these column operations only touch row k
        for c in range(k + 1, C):
            a = A[k, c]
            if a != 0:
                q = a // pv
                A[k, c] = 0
                if track >= 2:
                    for r in range(V.shape[0]):
                        V[r, c] = (V[r, c] - q * V[r, k]) % m
                    for cc in range(Vinv.shape[1]):
                        Vinv[k, cc] = (Vinv[k, cc] + q * Vinv[c, cc]) % m
        exps[npiv] = best_v
        npiv += 1
    return npiv


def _combine_mod(hi, lo, m):
    return (hi % m * (1 << 16) + lo % m) % m


def _matvec_cols_mod(M, q, m):
    """(M @ q) % m without overflow: q is split into 16-bit halves."""
    q = q % m
    lo = (M * (q & 0xFFFF)[None, :] % m).sum(axis=1)
    hi = (M * (q >> 16)[None, :] % m).sum(axis=1)
    return _combine_mod(hi, lo, m)


def _vecmat_rows_mod(q, M, m):
    q = q % m
    lo = ((q & 0xFFFF)[:, None] * M % m).sum(axis=0)
    hi = ((q >> 16)[:, None] * M % m).sum(axis=0)
    return _combine_mod(hi, lo, m)


def _snf_i64_numpy(A, p, m, exps, U, Uinv, V, Vinv, track):
    """Vectorized fallback with the same pivot semantics as _snf_i64."""
    R, C = A.shape
    npiv = 0
    for k in range(min(R, C)):
        act = A[k:, k:]
        if not (act != 0).any():
            break
        B = act.copy()
        v = 0
        while True:
            mask = (B % p != 0) & (B != 0)
            if mask.any():
                break
            B //= p
            v += 1
        flat = int(np.argmax(mask))
        bi, bj = k + flat // (C - k), k + flat % (C - k)
        if bi != k:
            A[[k, bi], :] = A[[bi, k], :]
            if track >= 1:
                U[[k, bi], :] = U[[bi, k], :]
                Uinv[:, [k, bi]] = Uinv[:, [bi, k]]
        if bj != k:
            A[:, [k, bj]] = A[:, [bj, k]]
            if track >= 2:
                V[:, [k, bj]] = V[:, [bj, k]]
                Vinv[[k, bj], :] = Vinv[[bj, k], :]
        pv = p**v
        u = int(A[k, k]) // pv
        uinv = pow(u % m, -1, m)
        A[k, k:] = (A[k, k:] * uinv) % m
        if track >= 1:
            U[k, :] = (U[k, :] * uinv) % m
            Uinv[:, k] = (Uinv[:, k] * u) % m
        col = A[k + 1:, k]
        if col.size and (col != 0).any():
            q = col // pv
            A[k + 1:, k:] = (A[k + 1:, k:] - q[:, None] * A[k, k:][None, :]) % m
            if track >= 1:
                U[k + 1:, :] = (U[k + 1:, :] - q[:, None] * U[k, :][None, :]) % m
                Uinv[:, k] = (Uinv[:, k] + _matvec_cols_mod(Uinv[:, k + 1:], q, m)) % m
        row = A[k, k + 1:]
        if row.size and (row != 0).any():
            q = row // pv
            A[k, k + 1:] = 0
            if track >= 2:
                V[:, k + 1:] = (V[:, k + 1:] - V[:, k][:, None] * q[None, :]) % m
                Vinv[k, :] = (Vinv[k, :] + _vecmat_rows_mod(q, Vinv[k + 1:, :], m)) % m
        exps[npiv] = v
        npiv += 1
    return npiv


def snf_int64(A: np.ndarray, p: int, m: int, track: int):
    """Run the int64 Smith kernel in place; returns (exponents, U, Uinv, V, Vinv).

    track: 0 = divisors only, 1 = row transforms (U, U^-1), 2 = full.
    """
    R, C = A.shape
    track = int(track)
    exps = np.empty(min(R, C) if min(R, C) else 1, dtype=np.int64)
    if track >= 1:
        U = np.eye(R, dtype=np.int64)
        Uinv = np.eye(R, dtype=np.int64)
    else:
        U = Uinv = np.zeros((1, 1), dtype=np.int64)
    if track >= 2:
        V = np.eye(C, dtype=np.int64)
        Vinv = np.eye(C, dtype=np.int64)
    else:
        V = Vinv = np.zeros((1, 1), dtype=np.int64)
    if R and C:
        kernel = _snf_i64 if HAVE_NUMBA else _snf_i64_numpy
        npiv = kernel(A, p, m, exps, U, Uinv, V, Vinv, track)
    else:
        npiv = 0
    exponents = [int(e) for e in exps[:npiv]]
    return (exponents,
            U if track >= 1 else None,
            Uinv if track >= 1 else None,
            V if track >= 2 else None,
            Vinv if track >= 2 else None)
