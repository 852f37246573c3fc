# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, fabs
from libc.stdlib cimport llabs

cnp.import_array()

ctypedef long long i64


cdef inline i64 _popcount(i64 x) nogil:
    cdef i64 c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef inline Py_ssize_t _bsearch(const i64[::1] a, i64 key) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sector_states(int L, int n_up):
    """All L-bit words with exactly ``n_up`` set bits, ascending (Gosper)."""
    cdef i64 limit = (<i64>1) << L
    cdef i64 count = 1, k
    for k in range(n_up):
        count = count * (L - k) // (k + 1)
    out = np.empty(count, dtype=np.int64)
    cdef i64[::1] o = out
    cdef i64 v, c, r
    if n_up == 0:
        o[0] = 0
        return out
    v = ((<i64>1) << n_up) - 1
    k = 0
    with nogil:
        while v < limit:
            o[k] = v
            k += 1
            c = v & -v
            r = v + c
            v = (((r ^ v) >> 2) // c) | r
    return out


def hopping_elements(states, positions, double J):
    """Off-diagonal XY matrix elements inside one charge sector."""
    cdef const i64[::1] s = np.ascontiguousarray(states, dtype=np.int64)
    cdef const i64[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef Py_ssize_t n = s.shape[0], nbits = pos.shape[0]
    cdef Py_ssize_t k, p, q, m = 0
    cdef i64 w, up
    if n == 0 or nbits < 2:
        return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                np.zeros(0))
    up = _popcount(s[0])
    cdef i64 total = n * up * (nbits - up)
    rows = np.empty(total, dtype=np.int64)
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    cdef i64[::1] r = rows
    cdef i64[::1] c = cols
    cdef double[::1] v = vals
    with nogil:
        for k in range(n):
            w = s[k]
            for p in range(nbits):
                for q in range(p + 1, nbits):
                    if ((w >> p) & 1) != ((w >> q) & 1):
                        r[m] = k
                        c[m] = _bsearch(s, w ^ (((<i64>1) << p) | ((<i64>1) << q)))
                        v[m] = 2.0 * J / <double>llabs(pos[p] - pos[q])
                        m += 1
    return rows[:m], cols[:m], vals[:m]


def deposit_bits(words, targets):
    """Scatter bit ``k`` of each word to bit position ``targets[k]``."""
    cdef const i64[::1] w = np.ascontiguousarray(words, dtype=np.int64)
    cdef const i64[::1] t = np.ascontiguousarray(targets, dtype=np.int64)
    out = np.zeros(w.shape[0], dtype=np.int64)
    cdef i64[::1] o = out
    cdef Py_ssize_t i, k
    cdef i64 acc
    with nogil:
        for i in range(w.shape[0]):
            acc = 0
            for k in range(t.shape[0]):
                acc |= ((w[i] >> k) & 1) << t[k]
            o[i] = acc
    return out


def extract_bits(words, sources):
    """Gather bit ``sources[k]`` of each word into bit position ``k``."""
    cdef const i64[::1] w = np.ascontiguousarray(words, dtype=np.int64)
    cdef const i64[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    out = np.zeros(w.shape[0], dtype=np.int64)
    cdef i64[::1] o = out
    cdef Py_ssize_t i, k
    cdef i64 acc
    with nogil:
        for i in range(w.shape[0]):
            acc = 0
            for k in range(src.shape[0]):
                acc |= ((w[i] >> src[k]) & 1) << k
            o[i] = acc
    return out


def embed_table(qos_words, qos_targets, bath_words, bath_targets):
    """Full-chain words for every (qos, bath) pair, shape (n_qos, n_bath)."""
    a = deposit_bits(qos_words, qos_targets)
    b = deposit_bits(bath_words, bath_targets)
    cdef const i64[::1] av = a
    cdef const i64[::1] bv = b
    out = np.empty((av.shape[0], bv.shape[0]), dtype=np.int64)
    cdef i64[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(av.shape[0]):
            for j in range(bv.shape[0]):
                o[i, j] = av[i] | bv[j]
    return out


cdef void _rhs(const double* dr, const double* di, const double* sub,
               const double* xr, const double* xi, double* outr, double* outi,
               Py_ssize_t D) noexcept nogil:
    # complex arithmetic is spelled out on split arrays; C99 complex
    # multiplication goes through the slow NaN-aware __muldc3
    cdef Py_ssize_t n
    for n in range(D):
        outr[n] = dr[n] * xr[n] - di[n] * xi[n]
        outi[n] = dr[n] * xi[n] + di[n] * xr[n]
    for n in range(D - 1):
        outr[n + 1] += sub[n] * xr[n]
        outi[n + 1] += sub[n] * xi[n]
        outr[n] -= sub[n] * xr[n + 1]
        outi[n] -= sub[n] * xi[n + 1]


def rk4_tridiagonal(diag, sub, psi0, times, double max_step):
    """Fixed-step RK4 for the tridiagonal Krylov amplitude system."""
    dc = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef double[::1] dr = np.ascontiguousarray(dc.real)
    cdef double[::1] di = np.ascontiguousarray(dc.imag)
    cdef double[::1] b = np.ascontiguousarray(sub, dtype=np.float64)
    cdef const double[::1] ts = np.ascontiguousarray(times, dtype=np.float64)
    p0 = np.asarray(psi0, dtype=np.complex128)
    cdef Py_ssize_t D = p0.shape[0], nt = ts.shape[0]
    # rows: psi, k1..k4, tmp; each as (re, im)
    work_arr = np.zeros((12, max(D, 1)), dtype=np.float64)
    cdef double[:, ::1] w = work_arr
    work_arr[0, :D] = p0.real
    work_arr[1, :D] = p0.imag
    out_re = np.empty((nt, D), dtype=np.float64)
    out_im = np.empty((nt, D), dtype=np.float64)
    cdef double[:, ::1] ore = out_re
    cdef double[:, ::1] oim = out_im
    cdef double* pr = &w[0, 0]
    cdef double* pi = &w[1, 0]
    cdef double* k1r = &w[2, 0]
    cdef double* k1i = &w[3, 0]
    cdef double* k2r = &w[4, 0]
    cdef double* k2i = &w[5, 0]
    cdef double* k3r = &w[6, 0]
    cdef double* k3i = &w[7, 0]
    cdef double* k4r = &w[8, 0]
    cdef double* k4i = &w[9, 0]
    cdef double* tr = &w[10, 0]
    cdef double* ti = &w[11, 0]
    cdef double* pdr = &dr[0] if D else NULL
    cdef double* pdi = &di[0] if D else NULL
    cdef double* pb = &b[0] if b.shape[0] else NULL
    cdef double t_now = 0.0, span, h, h6
    cdef Py_ssize_t i, n, j, steps
    with nogil:
        for i in range(nt):
            span = ts[i] - t_now
            if span > 0:
                steps = <Py_ssize_t>ceil(span / max_step - 1e-12)
                h = span / steps
                h6 = h / 6.0
                for j in range(steps):
                    _rhs(pdr, pdi, pb, pr, pi, k1r, k1i, D)
                    for n in range(D):
                        tr[n] = pr[n] + 0.5 * h * k1r[n]
                        ti[n] = pi[n] + 0.5 * h * k1i[n]
                    _rhs(pdr, pdi, pb, tr, ti, k2r, k2i, D)
                    for n in range(D):
                        tr[n] = pr[n] + 0.5 * h * k2r[n]
                        ti[n] = pi[n] + 0.5 * h * k2i[n]
                    _rhs(pdr, pdi, pb, tr, ti, k3r, k3i, D)
                    for n in range(D):
                        tr[n] = pr[n] + h * k3r[n]
                        ti[n] = pi[n] + h * k3i[n]
                    _rhs(pdr, pdi, pb, tr, ti, k4r, k4i, D)
                    for n in range(D):
                        pr[n] = pr[n] + h6 * (k1r[n] + 2.0 * k2r[n] + 2.0 * k3r[n] + k4r[n])
                        pi[n] = pi[n] + h6 * (k1i[n] + 2.0 * k2i[n] + 2.0 * k3i[n] + k4i[n])
                t_now = ts[i]
            for n in range(D):
                ore[i, n] = pr[n]
                oim[i, n] = pi[n]
    return out_re + 1j * out_im
