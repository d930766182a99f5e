"""Compiled right-hand side of the envelope equations.

Two layouts share the same physics. The dense layout works on the (D, D)
matrix directly. The band layout stores tracked elements in a flat vector;
element (a, b) sits at ``pos[a * D + b]``. ``dec`` holds the coefficient of
p itself (all diagonal loss terms, negative), as a (D, D) matrix or per
tracked element.

Each kernel evaluates k = f(inp) element by element and, depending on
``mode``, writes

    0: out = k
    1: out = base + w*k,  nxt = base + c*k   (first RK4 stage)
    2: out += w*k,        nxt = base + c*k   (later RK4 stages)

The element body is written out in both kernels on purpose: a shared
helper function costs a factor of three in speed.
"""
import numba as nb


@nb.njit(cache=True, nogil=True)
def dense_stage(P, base, out, nxt, w, c, mode, lev, kk, mm, K1, M1, sq,
                c1p, c1m, c2p, c2m, kap1, kap2, r13, r23, r12, dec):
    D = lev.shape[0]
    S = K1 * M1
    for a in range(D):
        n = lev[a]
        k = kk[a]
        m = mm[a]
        for b in range(D):
            n2 = lev[b]
            k2 = kk[b]
            m2 = mm[b]
            acc = dec[a, b] * P[a, b]
            # row side: (1,k) <- (3,k-1); (2,m) <- (3,m-1); 3 <- (1,k+1), (2,m+1)
            if n == 0:
                if k >= 1:
                    acc += c1p * sq[k] * P[a + 2 * S - M1, b]
            elif n == 1:
                if m >= 1:
                    acc += c2p * sq[m] * P[a + S - 1, b]
            else:
                if k < K1 - 1:
                    acc += c1m * sq[k + 1] * P[a - 2 * S + M1, b]
                if m < M1 - 1:
                    acc += c2m * sq[m + 1] * P[a - S + 1, b]
            # column side: conjugate phases, opposite sign
            if n2 == 0:
                if k2 >= 1:
                    acc -= c1m * sq[k2] * P[a, b + 2 * S - M1]
            elif n2 == 1:
                if m2 >= 1:
                    acc -= c2m * sq[m2] * P[a, b + S - 1]
            else:
                if k2 < K1 - 1:
                    acc -= c1p * sq[k2 + 1] * P[a, b - 2 * S + M1]
                if m2 < M1 - 1:
                    acc -= c2p * sq[m2 + 1] * P[a, b - S + 1]
            # cavity feed; sources beyond the cutoff are dropped
            if kap1 != 0.0 and k < K1 - 1 and k2 < K1 - 1:
                acc += kap1 * sq[k + 1] * sq[k2 + 1] * P[a + M1, b + M1]
            if kap2 != 0.0 and m < M1 - 1 and m2 < M1 - 1:
                acc += kap2 * sq[m + 1] * sq[m2 + 1] * P[a + 1, b + 1]
            # radiative feed into lower-level diagonal blocks
            if n == n2:
                if n == 0:
                    if r13 != 0.0:
                        acc += r13 * P[a + 2 * S, b + 2 * S]
                    if r12 != 0.0:
                        acc += r12 * P[a + S, b + S]
                elif n == 1 and r23 != 0.0:
                    acc += r23 * P[a + S, b + S]

            if mode == 0:
                out[a, b] = acc
            else:
                if mode == 1:
                    out[a, b] = base[a, b] + w * acc
                else:
                    out[a, b] += w * acc
                nxt[a, b] = base[a, b] + c * acc


@nb.njit(cache=True, nogil=True)
def band_stage(v, base, out, nxt, w, c, mode, rows, cols, pos,
               lev, kk, mm, K1, M1, sq,
               c1p, c1m, c2p, c2m, kap1, kap2, r13, r23, r12, dec):
    D = lev.shape[0]
    S = K1 * M1
    for i in range(v.shape[0]):
        a = rows[i]
        b = cols[i]
        n = lev[a]
        k = kk[a]
        m = mm[a]
        n2 = lev[b]
        k2 = kk[b]
        m2 = mm[b]
        # the element set is closed, so every nonzero source is tracked
        acc = dec[i] * v[i]
        if n == 0:
            if k >= 1:
                acc += c1p * sq[k] * v[pos[(a + 2 * S - M1) * D + b]]
        elif n == 1:
            if m >= 1:
                acc += c2p * sq[m] * v[pos[(a + S - 1) * D + b]]
        else:
            if k < K1 - 1:
                acc += c1m * sq[k + 1] * v[pos[(a - 2 * S + M1) * D + b]]
            if m < M1 - 1:
                acc += c2m * sq[m + 1] * v[pos[(a - S + 1) * D + b]]
        if n2 == 0:
            if k2 >= 1:
                acc -= c1m * sq[k2] * v[pos[a * D + b + 2 * S - M1]]
        elif n2 == 1:
            if m2 >= 1:
                acc -= c2m * sq[m2] * v[pos[a * D + b + S - 1]]
        else:
            if k2 < K1 - 1:
                acc -= c1p * sq[k2 + 1] * v[pos[a * D + b - 2 * S + M1]]
            if m2 < M1 - 1:
                acc -= c2p * sq[m2 + 1] * v[pos[a * D + b - S + 1]]
        if kap1 != 0.0 and k < K1 - 1 and k2 < K1 - 1:
            acc += kap1 * sq[k + 1] * sq[k2 + 1] * v[pos[(a + M1) * D + b + M1]]
        if kap2 != 0.0 and m < M1 - 1 and m2 < M1 - 1:
            acc += kap2 * sq[m + 1] * sq[m2 + 1] * v[pos[(a + 1) * D + b + 1]]
        if n == n2:
            if n == 0:
                if r13 != 0.0:
                    acc += r13 * v[pos[(a + 2 * S) * D + b + 2 * S]]
                if r12 != 0.0:
                    acc += r12 * v[pos[(a + S) * D + b + S]]
            elif n == 1 and r23 != 0.0:
                acc += r23 * v[pos[(a + S) * D + b + S]]

        if mode == 0:
            out[i] = acc
        else:
            if mode == 1:
                out[i] = base[i] + w * acc
            else:
                out[i] += w * acc
            nxt[i] = base[i] + c * acc
