# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics mirror ``hkglearn._kernels_py`` exactly: integer-driven results
(tree structure, random streams) are bit-identical, float accumulations
agree to rounding. The speed comes from sparsity-aware loops over the
mostly-binary design matrices.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()

BACKEND_NAME = "c"

cdef double _PFLOOR = 1e-12
cdef double _PCEIL = 1.0 - 1e-12


cdef inline uint64_t _mix(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    z = z ^ (z >> 31)
    return z


cdef inline double _sigmoid(double z) nogil:
    cdef double ez
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


cdef inline double _log1p_exp(double z) nogil:
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


# ----------------------------------------------------------------------
# noisy-OR expectation-maximization
# ----------------------------------------------------------------------

def noisy_or_em(parents, x, leak0, fail0, double tol_per_record, int max_iter):
    """EM for the leaky noisy-OR observation model; see the python twin."""
    cdef const uint8_t[:, ::1] yv = np.ascontiguousarray(parents, dtype=np.uint8)
    cdef const uint8_t[:, ::1] xv = np.ascontiguousarray(x, dtype=np.uint8)
    cdef Py_ssize_t n = yv.shape[0], p_count = yv.shape[1], s_count = xv.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] leak = \
        np.array(leak0, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fail = \
        np.ascontiguousarray(np.array(fail0, dtype=np.float64, copy=True))
    cdef double[::1] leak_v = leak
    cdef double[:, ::1] fail_v = fail

    # per-record active-parent lists (CSR-ish layout)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] row_ptr = np.zeros(n + 1, dtype=np.int64)
    cdef Py_ssize_t i, j, r, t
    cdef int64_t nnz = 0
    for i in range(n):
        for j in range(p_count):
            if yv[i, j]:
                nnz += 1
        row_ptr[i + 1] = nnz
    cdef cnp.ndarray[cnp.int64_t, ndim=1] row_par = np.empty(max(nnz, 1), dtype=np.int64)
    cdef int64_t[::1] rp_v = row_ptr
    cdef int64_t[::1] par_v = row_par
    nnz = 0
    for i in range(n):
        for j in range(p_count):
            if yv[i, j]:
                par_v[nnz] = j
                nnz += 1

    cdef cnp.ndarray[cnp.float64_t, ndim=1] n_j = np.zeros(p_count)
    cdef double[::1] nj_v = n_j
    for i in range(n):
        for t in range(rp_v[i], rp_v[i + 1]):
            nj_v[par_v[t]] += 1.0

    cdef cnp.ndarray[cnp.float64_t, ndim=2] expose = np.zeros((p_count, s_count))
    cdef double[:, ::1] ex_v = expose
    cdef cnp.ndarray[cnp.float64_t, ndim=1] colsum = np.zeros(s_count)
    cdef double[::1] cs_v = colsum
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prob = np.empty(s_count)
    cdef double[::1] pr_v = prob

    ll_trace = []
    cdef bint converged = False
    cdef int n_updates = 0
    cdef int it
    cdef double ll, pc, ratio, prev
    cdef double last_ll = 0.0
    cdef Py_ssize_t k

    for it in range(max_iter + 1):
        # single pass: likelihood at current parameters plus E-step sums
        for j in range(p_count):
            for k in range(s_count):
                ex_v[j, k] = 0.0
        for k in range(s_count):
            cs_v[k] = 0.0
        ll = 0.0
        for i in range(n):
            for k in range(s_count):
                pr_v[k] = 1.0 - leak_v[k]
            for t in range(rp_v[i], rp_v[i + 1]):
                j = par_v[t]
                for k in range(s_count):
                    pr_v[k] *= fail_v[j, k]
            for k in range(s_count):
                pc = 1.0 - pr_v[k]
                if pc < _PFLOOR:
                    pc = _PFLOOR
                elif pc > _PCEIL:
                    pc = _PCEIL
                if xv[i, k]:
                    ll += log(pc)
                    ratio = 1.0 / pc
                    cs_v[k] += ratio
                    for t in range(rp_v[i], rp_v[i + 1]):
                        ex_v[par_v[t], k] += ratio
                else:
                    ll += log1p(-pc)
        ll_trace.append(ll)
        if it > 0 and ll - last_ll <= tol_per_record * n:
            converged = True
            break
        last_ll = ll
        if it == max_iter:
            break
        for j in range(p_count):
            if nj_v[j] == 0.0:
                continue
            for k in range(s_count):
                prev = 1.0 - (1.0 - fail_v[j, k]) * ex_v[j, k] / nj_v[j]
                if prev < _PFLOOR:
                    prev = _PFLOOR
                elif prev > 1.0:
                    prev = 1.0
                fail_v[j, k] = prev
        for k in range(s_count):
            prev = leak_v[k] * cs_v[k] / n
            if prev < 0.0:
                prev = 0.0
            elif prev > _PCEIL:
                prev = _PCEIL
            leak_v[k] = prev
        n_updates += 1

    return leak, fail, np.array(ll_trace), n_updates, converged


# ----------------------------------------------------------------------
# logistic regression primitives
# ----------------------------------------------------------------------

def logreg_loglik(x, y, beta):
    """Unpenalized Bernoulli log-likelihood; beta[0] is the intercept."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], f = xv.shape[1]
    cdef Py_ssize_t i, a
    cdef double s, ll = 0.0
    for i in range(n):
        s = bv[0]
        for a in range(f):
            if xv[i, a] != 0.0:
                s += xv[i, a] * bv[a + 1]
        ll += yv[i] * s - _log1p_exp(s)
    return ll


def logreg_grad_hess(x, y, beta):
    """(log-likelihood, gradient, negative-LL Hessian); see python twin."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], f = xv.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(f + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] hess = np.zeros((f + 1, f + 1))
    cdef double[::1] gv = grad
    cdef double[:, ::1] hv = hess
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nz = np.empty(f, dtype=np.int64)
    cdef int64_t[::1] nz_v = nz
    cdef Py_ssize_t i, a, b, cnt
    cdef double s, p, w, r, ll = 0.0, va, vb
    for i in range(n):
        s = bv[0]
        cnt = 0
        for a in range(f):
            if xv[i, a] != 0.0:
                s += xv[i, a] * bv[a + 1]
                nz_v[cnt] = a
                cnt += 1
        ll += yv[i] * s - _log1p_exp(s)
        p = _sigmoid(s)
        w = p * (1.0 - p)
        r = yv[i] - p
        gv[0] += r
        hv[0, 0] += w
        for a in range(cnt):
            va = xv[i, nz_v[a]]
            gv[nz_v[a] + 1] += va * r
            hv[0, nz_v[a] + 1] += va * w
            for b in range(a, cnt):
                vb = xv[i, nz_v[b]]
                hv[nz_v[a] + 1, nz_v[b] + 1] += va * vb * w
    for a in range(1, f + 1):
        hv[a, 0] = hv[0, a]
        for b in range(a + 1, f + 1):
            hv[b, a] = hv[a, b]
    return ll, grad, hess


cdef double _WFLOOR = 1e-10  # weight floor; keeps w * r == y - p exact


def logreg_cd(x, y, beta0, double lam1, double lam2, double tol, int max_outer):
    """Penalized logistic fit by outer IRLS + inner coordinate descent.

    Same algorithm as the python twin: weighted least-squares model per
    outer step, soft-thresholded cyclic updates driven by a gram matrix
    that is rebuilt only when the IRLS weights drift, monotone line
    search on the true objective, KKT-residual convergence.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] xv = xa
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], f = xv.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] beta = \
        np.array(beta0, dtype=np.float64, copy=True)
    cdef double[::1] bv = beta

    # CSR layout drives the per-row Gram accumulation; built row-major so
    # the scans run along the contiguous axis
    cdef cnp.ndarray[cnp.int64_t, ndim=1] row_ptr = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] rp_v = row_ptr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] col_ptr = np.zeros(f + 1, dtype=np.int64)
    cdef int64_t[::1] cp_v = col_ptr
    cdef Py_ssize_t i, a
    cdef int64_t nnz = 0
    for i in range(n):
        for a in range(f):
            if xv[i, a] != 0.0:
                nnz += 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ridx = np.empty(max(nnz, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rval = np.empty(max(nnz, 1))
    cdef int64_t[::1] ri_v = ridx
    cdef double[::1] rx_v = rval
    cdef bint binary = True  # all-indicator input unlocks a cheaper gram pass
    nnz = 0
    for i in range(n):
        for a in range(f):
            if xv[i, a] != 0.0:
                if xv[i, a] != 1.0:
                    binary = False
                ri_v[nnz] = a
                rx_v[nnz] = xv[i, a]
                cp_v[a + 1] += 1
                nnz += 1
        rp_v[i + 1] = nnz

    # CSC by stable counting sort of the CSR entries, so each column keeps
    # its rows in ascending order
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows = np.empty(max(nnz, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(max(nnz, 1))
    cdef int64_t[::1] rw_v = rows
    cdef double[::1] vl_v = vals
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cfill = np.empty(f, dtype=np.int64)
    cdef int64_t[::1] cf_v = cfill
    cdef Py_ssize_t t0i
    for a in range(f):
        cp_v[a + 1] += cp_v[a]
        cf_v[a] = cp_v[a]
    for i in range(n):
        for t0i in range(rp_v[i], rp_v[i + 1]):
            a = ri_v[t0i]
            rw_v[cf_v[a]] = i
            vl_v[cf_v[a]] = rx_v[t0i]
            cf_v[a] += 1

    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.empty(n)
    cdef double[::1] sv = s
    cdef double[::1] pv = np.empty(n)
    cdef double[::1] wv = np.empty(n)
    cdef double[::1] wgv = np.empty(n)
    cdef double[::1] rv = np.empty(n)
    cdef double[::1] stry = np.empty(n)
    cdef double[::1] dirv = np.empty(n)
    cdef double[::1] bnew = np.empty(f + 1)
    cdef double[::1] btry = np.empty(f + 1)
    cdef double[::1] qv = np.empty(f + 1)
    cdef double[:, ::1] gm = np.empty((f + 1, f + 1))
    cdef Py_ssize_t t, t2, k, lo, hi

    for i in range(n):
        sv[i] = bv[0]
    for a in range(f):
        if bv[a + 1] != 0.0:
            for t in range(cp_v[a], cp_v[a + 1]):
                sv[rw_v[t]] += vl_v[t] * bv[a + 1]

    # objective sums are compensated: near the optimum the line search
    # compares improvements of a few ulps, which plain sequential
    # accumulation over many rows would bury in rounding noise
    cdef double obj = 0.0, comp = 0.0, term, tsum
    for i in range(n):
        pv[i] = _sigmoid(sv[i])
        term = (yv[i] * sv[i] - _log1p_exp(sv[i])) - comp
        tsum = obj + term
        comp = (tsum - obj) - term
        obj = tsum
    for a in range(f):
        obj -= lam1 * fabs(bv[a + 1]) + 0.5 * lam2 * bv[a + 1] * bv[a + 1]

    obj_trace = [obj]
    cdef bint converged = False, accepted
    cdef bint gram_built = False, rebuild
    cdef int n_outer = 0, stall = 0
    cdef int outer, ip, half
    cdef double kkt, ga, ba, resid_sum, inner_tol, a0 = 0.0, aj, w
    cdef double d0, u, bj, d, worst, step, ll_t, obj_t
    cdef double drift, wgmax = 0.0, scale

    for outer in range(max_outer):
        # KKT residual of the penalized likelihood at the current beta;
        # the plain gradient doubles as the quadratic model's start state
        resid_sum = 0.0
        for i in range(n):
            rv[i] = yv[i] - pv[i]
            resid_sum += rv[i]
        qv[0] = resid_sum
        kkt = fabs(resid_sum)
        for a in range(f):
            ga = 0.0
            for t in range(cp_v[a], cp_v[a + 1]):
                ga += vl_v[t] * rv[rw_v[t]]
            qv[a + 1] = ga
            ga -= lam2 * bv[a + 1]
            ba = bv[a + 1]
            if ba > 0.0:
                if fabs(ga - lam1) > kkt:
                    kkt = fabs(ga - lam1)
            elif ba < 0.0:
                if fabs(ga + lam1) > kkt:
                    kkt = fabs(ga + lam1)
            else:
                if fabs(ga) - lam1 > kkt:
                    kkt = fabs(ga) - lam1
        if kkt < tol:
            converged = True
            break

        inner_tol = 0.01 * kkt
        if inner_tol < 0.1 * tol:
            inner_tol = 0.1 * tol

        # curvature of the weighted quadratic model: gram matrix of [1, x],
        # rebuilt only when the weights drifted past a tenth of their scale
        for i in range(n):
            w = pv[i] * (1.0 - pv[i])
            if w < _WFLOOR:
                w = _WFLOOR
            wv[i] = w
        rebuild = not gram_built
        if gram_built:
            drift = 0.0
            for i in range(n):
                d = fabs(wv[i] - wgv[i])
                if d > drift:
                    drift = d
            scale = wgmax if wgmax > 0.01 else 0.01
            if drift > 0.1 * scale:
                rebuild = True
        if rebuild:
            a0 = 0.0
            wgmax = 0.0
            for i in range(n):
                w = wv[i]
                wgv[i] = w
                a0 += w
                if w > wgmax:
                    wgmax = w
            for k in range(f + 1):
                for t2 in range(f + 1):
                    gm[k, t2] = 0.0
            gm[0, 0] = a0
            for a in range(f):
                w = 0.0
                for t in range(cp_v[a], cp_v[a + 1]):
                    w += wgv[rw_v[t]] * vl_v[t]
                gm[0, a + 1] = w
                gm[a + 1, 0] = w
            if binary:
                for i in range(n):
                    lo = rp_v[i]
                    hi = rp_v[i + 1]
                    w = wgv[i]
                    for t in range(lo, hi):
                        for t2 in range(t, hi):
                            gm[ri_v[t] + 1, ri_v[t2] + 1] += w
            else:
                for i in range(n):
                    lo = rp_v[i]
                    hi = rp_v[i + 1]
                    for t in range(lo, hi):
                        w = wgv[i] * rx_v[t]
                        for t2 in range(t, hi):
                            gm[ri_v[t] + 1, ri_v[t2] + 1] += w * rx_v[t2]
            for k in range(1, f + 1):
                for t2 in range(k + 1, f + 1):
                    gm[t2, k] = gm[k, t2]
            gram_built = True

        # cyclic soft-thresholded updates on the quadratic model; the
        # model gradient qv is maintained through the gram columns
        for k in range(f + 1):
            bnew[k] = bv[k]
        for ip in range(100):
            worst = 0.0
            d0 = qv[0] / a0
            if d0 != 0.0:
                bnew[0] += d0
                for k in range(f + 1):
                    qv[k] -= d0 * gm[k, 0]
            if a0 * fabs(d0) > worst:
                worst = a0 * fabs(d0)
            for a in range(f):
                aj = gm[a + 1, a + 1]
                if aj == 0.0:
                    continue
                u = qv[a + 1] + bnew[a + 1] * aj
                if u > lam1:
                    bj = (u - lam1) / (aj + lam2)
                elif u < -lam1:
                    bj = (u + lam1) / (aj + lam2)
                else:
                    bj = 0.0
                d = bj - bnew[a + 1]
                if d != 0.0:
                    bnew[a + 1] = bj
                    for k in range(f + 1):
                        qv[k] -= d * gm[k, a + 1]
                if (aj + lam2) * fabs(d) > worst:
                    worst = (aj + lam2) * fabs(d)
            if worst <= inner_tol:
                break

        # halve back toward the current beta until the true objective
        # holds; the direction's score-space image is fixed, so each trial
        # costs one fused update instead of a fresh sparse product
        d0 = bnew[0] - bv[0]
        for i in range(n):
            dirv[i] = d0
        for a in range(f):
            d = bnew[a + 1] - bv[a + 1]
            if d != 0.0:
                for t in range(cp_v[a], cp_v[a + 1]):
                    dirv[rw_v[t]] += vl_v[t] * d
        accepted = False
        step = 1.0
        for half in range(51):
            for k in range(f + 1):
                btry[k] = bv[k] + step * (bnew[k] - bv[k])
            for i in range(n):
                stry[i] = sv[i] + step * dirv[i]
            ll_t = 0.0
            comp = 0.0
            for i in range(n):
                term = (yv[i] * stry[i] - _log1p_exp(stry[i])) - comp
                tsum = ll_t + term
                comp = (tsum - ll_t) - term
                ll_t = tsum
            obj_t = ll_t
            for a in range(f):
                obj_t -= lam1 * fabs(btry[a + 1]) + 0.5 * lam2 * btry[a + 1] * btry[a + 1]
            if obj_t >= obj - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        for k in range(f + 1):
            bv[k] = btry[k]
        for i in range(n):
            sv[i] = stry[i]
            pv[i] = _sigmoid(stry[i])
        # two consecutive outers of negligible gain means the objective is
        # flat to machine precision; stop instead of spinning to max_outer
        if obj_t - obj < 1e-12:
            stall += 1
        else:
            stall = 0
        obj = obj_t
        obj_trace.append(obj)
        n_outer += 1
        if stall >= 2:
            break

    return beta, n_outer, np.array(obj_trace), converged


# ----------------------------------------------------------------------
# decision trees on binary features
# ----------------------------------------------------------------------

cdef inline double _gini(double n, double pos) nogil:
    cdef double q = pos / n
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)


def build_tree(x, y, int max_depth, int min_leaf, int mtry, state):
    """Grow one CART tree; bit-identical to the python twin."""
    cdef const uint8_t[:, ::1] xv = np.ascontiguousarray(x, dtype=np.uint8)
    cdef const uint8_t[::1] yv = np.ascontiguousarray(y, dtype=np.uint8)
    cdef Py_ssize_t n_rows = xv.shape[0], n_feat = xv.shape[1]
    cdef uint64_t st = <uint64_t>(int(state) & 0xFFFFFFFFFFFFFFFF)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(n_rows, dtype=np.int64)
    cdef int64_t[::1] idx_v = idx
    cdef Py_ssize_t i
    for i in range(n_rows):
        idx_v[i] = <int64_t>(_mix(&st) % <uint64_t>n_rows)

    cdef Py_ssize_t cap = 2 * n_rows + 2
    cdef cnp.ndarray[cnp.int32_t, ndim=1] feature = np.zeros(cap, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] left = np.full(cap, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] right = np.full(cap, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] value = np.zeros(cap)
    cdef int32_t[::1] fe_v = feature
    cdef int32_t[::1] le_v = left
    cdef int32_t[::1] ri_v = right
    cdef double[::1] va_v = value
    cdef Py_ssize_t n_nodes = 1

    cdef cnp.ndarray[cnp.int64_t, ndim=2] stack = np.empty((cap, 4), dtype=np.int64)
    cdef int64_t[:, ::1] sk_v = stack
    cdef Py_ssize_t depth_ss = 0
    sk_v[0, 0] = 0
    sk_v[0, 1] = n_rows
    sk_v[0, 2] = 0
    sk_v[0, 3] = 0
    depth_ss = 1

    cdef cnp.ndarray[cnp.int64_t, ndim=1] scratch = np.empty(n_feat, dtype=np.int64)
    cdef int64_t[::1] sc_v = scratch
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand = np.empty(max(mtry, 1), dtype=np.int64)
    cdef int64_t[::1] cd_v = cand
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(n_rows, dtype=np.int64)
    cdef int64_t[::1] buf_v = buf

    cdef Py_ssize_t lo, hi, depth, slot, n, pos, t, r, c, fidx
    cdef Py_ssize_t n0, n1, pos0, pos1, best_f, best_n0, lslot, w0, w1
    cdef int64_t tmp, key
    cdef double g_parent, best_gain, gain, child

    while depth_ss > 0:
        depth_ss -= 1
        lo = sk_v[depth_ss, 0]
        hi = sk_v[depth_ss, 1]
        depth = sk_v[depth_ss, 2]
        slot = sk_v[depth_ss, 3]
        n = hi - lo
        pos = 0
        for i in range(lo, hi):
            pos += yv[idx_v[i]]
        va_v[slot] = (<double>pos) / (<double>n)
        if depth >= max_depth or pos == 0 or pos == n or n < 2 * min_leaf:
            fe_v[slot] = -1
            continue

        for t in range(n_feat):
            sc_v[t] = t
        for t in range(mtry):
            r = t + <Py_ssize_t>(_mix(&st) % <uint64_t>(n_feat - t))
            tmp = sc_v[t]
            sc_v[t] = sc_v[r]
            sc_v[r] = tmp
        for t in range(mtry):
            cd_v[t] = sc_v[t]
        # insertion sort: ascending candidate order resolves gain ties to
        # the smallest feature index, as in the python twin
        for t in range(1, mtry):
            key = cd_v[t]
            c = t - 1
            while c >= 0 and cd_v[c] > key:
                cd_v[c + 1] = cd_v[c]
                c -= 1
            cd_v[c + 1] = key

        g_parent = _gini(<double>n, <double>pos)
        best_gain = 1e-12
        best_f = -1
        best_n0 = 0
        for t in range(mtry):
            fidx = cd_v[t]
            n1 = 0
            pos1 = 0
            for i in range(lo, hi):
                if xv[idx_v[i], fidx]:
                    n1 += 1
                    pos1 += yv[idx_v[i]]
            n0 = n - n1
            if n0 < min_leaf or n1 < min_leaf:
                continue
            pos0 = pos - pos1
            child = (n0 * _gini(<double>n0, <double>pos0)
                     + n1 * _gini(<double>n1, <double>pos1)) / n
            gain = g_parent - child
            if gain > best_gain:
                best_gain = gain
                best_f = fidx
                best_n0 = n0
        if best_f < 0:
            fe_v[slot] = -1
            continue

        # stable partition: feature == 0 first, original order kept
        w0 = 0
        w1 = best_n0
        for i in range(lo, hi):
            if xv[idx_v[i], best_f]:
                buf_v[w1] = idx_v[i]
                w1 += 1
            else:
                buf_v[w0] = idx_v[i]
                w0 += 1
        for i in range(lo, hi):
            idx_v[i] = buf_v[i - lo]

        lslot = n_nodes
        n_nodes += 2
        fe_v[slot] = <int32_t>best_f
        le_v[slot] = <int32_t>lslot
        ri_v[slot] = <int32_t>(lslot + 1)
        sk_v[depth_ss, 0] = lo
        sk_v[depth_ss, 1] = lo + best_n0
        sk_v[depth_ss, 2] = depth + 1
        sk_v[depth_ss, 3] = lslot
        sk_v[depth_ss + 1, 0] = lo + best_n0
        sk_v[depth_ss + 1, 1] = hi
        sk_v[depth_ss + 1, 2] = depth + 1
        sk_v[depth_ss + 1, 3] = lslot + 1
        depth_ss += 2

    return (feature[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def tree_predict(feature, left, right, value, x):
    """Leaf value per row of x for one tree."""
    cdef const int32_t[::1] fe_v = np.ascontiguousarray(feature, dtype=np.int32)
    cdef const int32_t[::1] le_v = np.ascontiguousarray(left, dtype=np.int32)
    cdef const int32_t[::1] ri_v = np.ascontiguousarray(right, dtype=np.int32)
    cdef const double[::1] va_v = np.ascontiguousarray(value, dtype=np.float64)
    cdef const uint8_t[:, ::1] xv = np.ascontiguousarray(x, dtype=np.uint8)
    cdef Py_ssize_t n = xv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef int32_t cur
    for i in range(n):
        cur = 0
        while fe_v[cur] >= 0:
            if xv[i, fe_v[cur]]:
                cur = ri_v[cur]
            else:
                cur = le_v[cur]
        ov[i] = va_v[cur]
    return out
