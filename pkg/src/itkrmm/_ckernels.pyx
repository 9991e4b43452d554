# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-signal loops; same interface as ``_pykernels``.

Each chunk runs without the GIL. Per-signal least-squares problems go
straight to LAPACK ``dgelsd`` with the shared relative rank cut-off.
"""

import numpy as np

from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset
from scipy.linalg.cython_lapack cimport dgelsd

NAME = "cython"

cdef double RCOND = 1e-10
cdef double VANISH = 1e-12


cdef struct LstsqWork:
    double* a
    double* b
    double* s
    double* work
    int* iwork
    int lwork
    int ldb


cdef int lw_init(LstsqWork* w, int d, int mmax) noexcept nogil:
    cdef int nrhs = 1, rank = 0, info = 0, lwork = -1
    cdef double rcond = RCOND
    cdef double wq = 0
    cdef int iwq = 0
    cdef double dummy_a = 0, dummy_b = 0, dummy_s = 0
    if mmax < 1:
        mmax = 1
    w.ldb = d if d > mmax else mmax
    w.a = <double*> malloc(sizeof(double) * d * mmax)
    w.b = <double*> malloc(sizeof(double) * w.ldb)
    w.s = <double*> malloc(sizeof(double) * mmax)
    dgelsd(&d, &mmax, &nrhs, &dummy_a, &d, &dummy_b, &w.ldb, &dummy_s, &rcond, &rank,
           &wq, &lwork, &iwq, &info)
    w.lwork = <int> wq + 1
    w.work = <double*> malloc(sizeof(double) * w.lwork)
    w.iwork = <int*> malloc(sizeof(int) * (iwq + 1 if iwq > 0 else 8 * (d + mmax) + 64))
    return info


cdef void lw_free(LstsqWork* w) noexcept nogil:
    free(w.a)
    free(w.b)
    free(w.s)
    free(w.work)
    free(w.iwork)


cdef int solve_residual(LstsqWork* w, const double* A, int d, int k, const double* y,
                        double* r) noexcept nogil:
    """r = y - A A^+ y; afterwards w.b[0:k] holds A^+ y."""
    cdef int nrhs = 1, rank = 0, info = 0, i, j
    cdef double rcond = RCOND
    cdef double xi
    memcpy(r, y, sizeof(double) * d)
    if k == 0:
        return 0
    memcpy(w.a, A, sizeof(double) * d * k)
    memcpy(w.b, y, sizeof(double) * d)
    dgelsd(&d, &k, &nrhs, w.a, &d, w.b, &w.ldb, w.s, &rcond, &rank,
           w.work, &w.lwork, w.iwork, &info)
    for i in range(k):
        xi = w.b[i]
        for j in range(d):
            r[j] -= A[i * d + j] * xi
    return info


cdef int select_top(const double* score, int K, int S, int* sel, char* chosen) noexcept nogil:
    """Indices of the S largest non-negative scores, ties to the lowest index."""
    cdef int t, k, bi, ns = 0
    cdef double best
    for t in range(S):
        best = -0.5
        bi = -1
        for k in range(K):
            if not chosen[k] and score[k] > best:
                best = score[k]
                bi = k
        if bi < 0:
            break
        chosen[bi] = 1
        sel[t] = bi
        ns = t + 1
    for t in range(ns):
        chosen[sel[t]] = 0
    return ns


def threshold_chunk(double[::1, :] dico, double[::1, :] Y, unsigned char[::1, :] masks, int S):
    cdef int d = dico.shape[0], K = dico.shape[1], n = Y.shape[1]
    cdef int i, j, k, t, ns
    cdef double s2, dot, a, nrm
    idx_arr = np.full((n, S), -1, dtype=np.int64)
    sc_arr = np.zeros((n, S))
    cdef long long[:, ::1] idx = idx_arr
    cdef double[:, ::1] sc = sc_arr
    cdef double* score = <double*> malloc(sizeof(double) * K)
    cdef int* sel = <int*> malloc(sizeof(int) * (S + 1))
    cdef char* chosen = <char*> malloc(K)
    memset(chosen, 0, K)
    with nogil:
        for i in range(n):
            for k in range(K):
                s2 = 0
                dot = 0
                for j in range(d):
                    a = masks[j, i] * dico[j, k]
                    s2 += a * a
                    dot += dico[j, k] * (Y[j, i] * masks[j, i])
                nrm = sqrt(s2)
                score[k] = fabs(dot) / nrm if nrm >= VANISH else -1.0
            ns = select_top(score, K, S, sel, chosen)
            for t in range(ns):
                idx[i, t] = sel[t]
                sc[i, t] = score[sel[t]]
    free(score)
    free(sel)
    free(chosen)
    return idx_arr, sc_arr


def itkrmm_chunk(double[::1, :] dico, double[::1, :] lowrank, double[::1, :] Y,
                 unsigned char[::1, :] masks, int S):
    cdef int d = dico.shape[0], K = dico.shape[1], L = lowrank.shape[1], n = Y.shape[1]
    cdef int i, j, k, t, l, ns, info = 0
    cdef double s2, dot, a, nrm, c, sg, mj
    psi_arr = np.zeros((d, K), order="F")
    w_arr = np.zeros((d, K), order="F")
    counts_arr = np.zeros(K, dtype=np.int64)
    cdef double[::1, :] psi = psi_arr
    cdef double[::1, :] W = w_arr
    cdef long long[::1] counts = counts_arr
    cdef double score_sum = 0
    cdef LstsqWork lw
    cdef double* m = <double*> malloc(sizeof(double) * d)
    cdef double* y = <double*> malloc(sizeof(double) * d)
    cdef double* yt = <double*> malloc(sizeof(double) * d)
    cdef double* r = <double*> malloc(sizeof(double) * d)
    cdef double* ip = <double*> malloc(sizeof(double) * K)
    cdef double* nk2 = <double*> malloc(sizeof(double) * K)
    cdef double* score = <double*> malloc(sizeof(double) * K)
    cdef double* A = <double*> malloc(sizeof(double) * d * (L + S + 1))
    cdef int* sel = <int*> malloc(sizeof(int) * (S + 1))
    cdef char* chosen = <char*> malloc(K)
    memset(chosen, 0, K)
    with nogil:
        lw_init(&lw, d, L + S)
        for i in range(n):
            for j in range(d):
                m[j] = masks[j, i]
                y[j] = Y[j, i] * m[j]
            for l in range(L):
                for j in range(d):
                    A[l * d + j] = m[j] * lowrank[j, l]
            if L > 0:
                info |= solve_residual(&lw, A, d, L, y, yt)
            else:
                memcpy(yt, y, sizeof(double) * d)
            for k in range(K):
                s2 = 0
                dot = 0
                for j in range(d):
                    a = m[j] * dico[j, k]
                    s2 += a * a
                    dot += dico[j, k] * yt[j]
                nk2[k] = s2
                ip[k] = dot
                nrm = sqrt(s2)
                score[k] = fabs(dot) / nrm if nrm >= VANISH else -1.0
            ns = select_top(score, K, S, sel, chosen)
            for t in range(ns):
                k = sel[t]
                for j in range(d):
                    A[(L + t) * d + j] = m[j] * dico[j, k]
            info |= solve_residual(&lw, A, d, L + ns, yt, r)
            for t in range(ns):
                k = sel[t]
                c = ip[k] / nk2[k]
                sg = 1.0 if ip[k] >= 0 else -1.0
                for j in range(d):
                    psi[j, k] += sg * (r[j] + c * (m[j] * dico[j, k]))
                    W[j, k] += m[j]
                counts[k] += 1
                score_sum += score[k]
        lw_free(&lw)
    free(m); free(y); free(yt); free(r); free(ip); free(nk2); free(score)
    free(A); free(sel); free(chosen)
    if info != 0:
        raise np.linalg.LinAlgError(f"dgelsd failed (info={info})")
    return psi_arr, w_arr, counts_arr, score_sum


def itkrm_chunk(double[::1, :] dico, double[::1, :] Y, int S):
    cdef int d = dico.shape[0], K = dico.shape[1], n = Y.shape[1]
    cdef int i, j, k, t, ns, info = 0
    cdef double s2, dot, c, sg
    psi_arr = np.zeros((d, K), order="F")
    counts_arr = np.zeros(K, dtype=np.int64)
    cdef double[::1, :] psi = psi_arr
    cdef long long[::1] counts = counts_arr
    cdef double score_sum = 0
    cdef LstsqWork lw
    cdef double* y = <double*> malloc(sizeof(double) * d)
    cdef double* r = <double*> malloc(sizeof(double) * d)
    cdef double* ip = <double*> malloc(sizeof(double) * K)
    cdef double* nk2 = <double*> malloc(sizeof(double) * K)
    cdef double* score = <double*> malloc(sizeof(double) * K)
    cdef double* A = <double*> malloc(sizeof(double) * d * (S + 1))
    cdef int* sel = <int*> malloc(sizeof(int) * (S + 1))
    cdef char* chosen = <char*> malloc(K)
    memset(chosen, 0, K)
    with nogil:
        lw_init(&lw, d, S)
        for k in range(K):
            s2 = 0
            for j in range(d):
                s2 += dico[j, k] * dico[j, k]
            nk2[k] = s2
        for i in range(n):
            for j in range(d):
                y[j] = Y[j, i]
            for k in range(K):
                dot = 0
                for j in range(d):
                    dot += dico[j, k] * y[j]
                ip[k] = dot
                score[k] = fabs(dot) / sqrt(nk2[k])
            ns = select_top(score, K, S, sel, chosen)
            for t in range(ns):
                memcpy(&A[t * d], &dico[0, sel[t]], sizeof(double) * d)
            info |= solve_residual(&lw, A, d, ns, y, r)
            for t in range(ns):
                k = sel[t]
                c = ip[k] / nk2[k]
                sg = 1.0 if ip[k] >= 0 else -1.0
                for j in range(d):
                    psi[j, k] += sg * (r[j] + c * dico[j, k])
                counts[k] += 1
                score_sum += score[k]
        lw_free(&lw)
    free(y); free(r); free(ip); free(nk2); free(score); free(A); free(sel); free(chosen)
    if info != 0:
        raise np.linalg.LinAlgError(f"dgelsd failed (info={info})")
    return psi_arr, counts_arr, score_sum


def lowrank_chunk(double[::1, :] lowrank, double[::1] atom, double[::1, :] Y,
                  unsigned char[::1, :] masks):
    cdef int d = Y.shape[0], n = Y.shape[1], L = lowrank.shape[1]
    cdef int i, j, l, info = 0
    cdef double s2, dot, c, sg, a
    g_arr = np.zeros(d)
    w_arr = np.zeros(d)
    cdef double[::1] g = g_arr
    cdef double[::1] W = w_arr
    cdef LstsqWork lw
    cdef double* m = <double*> malloc(sizeof(double) * d)
    cdef double* y = <double*> malloc(sizeof(double) * d)
    cdef double* yt = <double*> malloc(sizeof(double) * d)
    cdef double* r = <double*> malloc(sizeof(double) * d)
    cdef double* A = <double*> malloc(sizeof(double) * d * (L + 1))
    with nogil:
        lw_init(&lw, d, L + 1)
        for i in range(n):
            for j in range(d):
                m[j] = masks[j, i]
                y[j] = Y[j, i] * m[j]
            for l in range(L):
                for j in range(d):
                    A[l * d + j] = m[j] * lowrank[j, l]
            if L > 0:
                info |= solve_residual(&lw, A, d, L, y, yt)
            else:
                memcpy(yt, y, sizeof(double) * d)
            s2 = 0
            dot = 0
            for j in range(d):
                a = m[j] * atom[j]
                A[L * d + j] = a
                s2 += a * a
                dot += atom[j] * yt[j]
            info |= solve_residual(&lw, A, d, L + 1, yt, r)
            c = dot / s2 if sqrt(s2) >= VANISH else 0.0
            sg = 1.0 if dot >= 0 else -1.0
            for j in range(d):
                g[j] += sg * (r[j] + c * A[L * d + j])
                W[j] += m[j]
        lw_free(&lw)
    free(m); free(y); free(yt); free(r); free(A)
    if info != 0:
        raise np.linalg.LinAlgError(f"dgelsd failed (info={info})")
    return g_arr, w_arr


def omp_chunk(double[::1, :] dico, double[::1, :] Y, unsigned char[::1, :] masks, int S,
              int n_forced=0):
    cdef int d = dico.shape[0], K = dico.shape[1], n = Y.shape[1]
    cdef int i, j, k, t, ns, bi, info = 0
    cdef double s2, dot, best, sc, rn
    if n_forced > K:
        n_forced = K
    if n_forced > S:
        n_forced = S
    out_arr = np.zeros((K, n))
    cdef double[:, ::1] out = out_arr
    cdef LstsqWork lw
    cdef double* m = <double*> malloc(sizeof(double) * d)
    cdef double* y = <double*> malloc(sizeof(double) * d)
    cdef double* r = <double*> malloc(sizeof(double) * d)
    cdef double* nrm = <double*> malloc(sizeof(double) * K)
    cdef double* A = <double*> malloc(sizeof(double) * d * (S + 1))
    cdef double* x = <double*> malloc(sizeof(double) * (S + 1))
    cdef int* sel = <int*> malloc(sizeof(int) * (S + 1))
    cdef char* chosen = <char*> malloc(K)
    with nogil:
        lw_init(&lw, d, S)
        for i in range(n):
            memset(chosen, 0, K)
            for j in range(d):
                m[j] = masks[j, i]
                y[j] = Y[j, i] * m[j]
            for k in range(K):
                s2 = 0
                for j in range(d):
                    s2 += (m[j] * dico[j, k]) * (m[j] * dico[j, k])
                nrm[k] = sqrt(s2)
            ns = 0
            for t in range(n_forced):
                sel[t] = t
                chosen[t] = 1
                for j in range(d):
                    A[t * d + j] = m[j] * dico[j, t]
                ns = t + 1
            info |= solve_residual(&lw, A, d, ns, y, r)
            for t in range(ns):
                x[t] = lw.b[t]
            while ns < S:
                rn = 0
                for j in range(d):
                    rn += r[j] * r[j]
                if sqrt(rn) < 1e-12:
                    break
                best = -0.5
                bi = -1
                for k in range(K):
                    if chosen[k] or nrm[k] < VANISH:
                        continue
                    dot = 0
                    for j in range(d):
                        dot += (m[j] * dico[j, k]) * r[j]
                    sc = fabs(dot) / nrm[k]
                    if sc > best:
                        best = sc
                        bi = k
                if bi < 0:
                    break
                sel[ns] = bi
                chosen[bi] = 1
                for j in range(d):
                    A[ns * d + j] = m[j] * dico[j, bi]
                ns += 1
                info |= solve_residual(&lw, A, d, ns, y, r)
                for t in range(ns):
                    x[t] = lw.b[t]
            for t in range(ns):
                out[sel[t], i] = x[t]
        lw_free(&lw)
    free(m); free(y); free(r); free(nrm); free(A); free(x); free(sel); free(chosen)
    if info != 0:
        raise np.linalg.LinAlgError(f"dgelsd failed (info={info})")
    return out_arr
