"""Pure-python (numpy) implementations of the hot kernels.

This module is the reference semantics for ``hkglearn._kernels`` (the
compiled extension). Both expose the same functions with the same
signatures; the compiled module exploits sparsity and tight loops, this one
leans on BLAS. Integer-driven decisions (tree structure, random streams)
are bit-identical across the two backends; floating-point accumulations may
differ in the last ulps.
"""

from __future__ import annotations

import numpy as np

from .util import log1p_exp, sigmoid, splitmix64

BACKEND_NAME = "python"

_PFLOOR = 1e-12
_PCEIL = 1.0 - 1e-12


# ----------------------------------------------------------------------
# noisy-OR expectation-maximization
# ----------------------------------------------------------------------

def noisy_or_em(parents, x, leak0, fail0, tol_per_record, max_iter):
    """EM for the leaky noisy-OR observation model.

    parents : (N, P) uint8   active-cause indicators per record
    x       : (N, S) uint8   observed symptom indicators
    leak0   : (S,) float64   initial leak probabilities
    fail0   : (P, S) float64 initial failure probabilities

    Returns (leak, fail, ll_trace, n_updates, converged). ``ll_trace[t]``
    is the train log-likelihood after t parameter updates; EM guarantees it
    is non-decreasing.
    """
    yf = np.ascontiguousarray(parents, dtype=np.float64)
    xf = np.ascontiguousarray(x, dtype=np.float64)
    n, p_count = yf.shape
    leak = np.array(leak0, dtype=np.float64, copy=True)
    fail = np.array(fail0, dtype=np.float64, copy=True)
    n_j = yf.sum(axis=0)  # exposures per parent
    active = n_j > 0

    ll_trace = []
    converged = False
    n_updates = 0
    for _ in range(max_iter):
        prod = np.exp(yf @ np.log(fail))          # (N, S) prod of f over active parents
        prob = 1.0 - (1.0 - leak) * prod
        probc = np.clip(prob, _PFLOOR, _PCEIL)
        ll = float(np.sum(xf * np.log(probc) + (1.0 - xf) * np.log1p(-probc)))
        ll_trace.append(ll)
        if len(ll_trace) >= 2 and ll_trace[-1] - ll_trace[-2] <= tol_per_record * n:
            converged = True
            break
        # posterior that each cause fired, summed over records (E-step),
        # folded directly into the M-step updates
        ratio = xf / probc                        # (N, S); zero where symptom absent
        expose_sum = yf.T @ ratio                 # (P, S)
        fail_new = fail.copy()
        fail_new[active] = 1.0 - (1.0 - fail[active]) * expose_sum[active] / n_j[active, None]
        leak = np.clip(leak * ratio.sum(axis=0) / n, 0.0, _PCEIL)
        fail = np.clip(fail_new, _PFLOOR, 1.0)
        n_updates += 1
    else:
        # loop exhausted: evaluate the likelihood at the final parameters
        prod = np.exp(yf @ np.log(fail))
        prob = np.clip(1.0 - (1.0 - leak) * prod, _PFLOOR, _PCEIL)
        ll_trace.append(float(np.sum(xf * np.log(prob) + (1.0 - xf) * np.log1p(-prob))))

    return leak, fail, np.array(ll_trace), n_updates, converged


# ----------------------------------------------------------------------
# logistic regression primitives
# ----------------------------------------------------------------------

def logreg_loglik(x, y, beta):
    """Unpenalized Bernoulli log-likelihood; beta[0] is the intercept."""
    s = beta[0] + x @ beta[1:]
    return float(np.sum(y * s - log1p_exp(s)))


def logreg_grad_hess(x, y, beta):
    """Log-likelihood, gradient and Hessian of the augmented [1 | x] design.

    The Hessian returned is of the negative log-likelihood (positive
    semi-definite), shape (F+1, F+1).
    """
    s = beta[0] + x @ beta[1:]
    p = sigmoid(s)
    w = p * (1.0 - p)
    ll = float(np.sum(y * s - log1p_exp(s)))
    r = y - p
    f = x.shape[1]
    grad = np.empty(f + 1)
    grad[0] = r.sum()
    grad[1:] = x.T @ r
    xw = x * w[:, None]
    hess = np.empty((f + 1, f + 1))
    hess[0, 0] = w.sum()
    hess[0, 1:] = xw.sum(axis=0)
    hess[1:, 0] = hess[0, 1:]
    hess[1:, 1:] = x.T @ xw
    return ll, grad, hess


_WFLOOR = 1e-10  # weight floor; keeps w * r == y - p exact at saturation


def logreg_cd(x, y, beta0, lam1, lam2, tol, max_outer):
    """Penalized logistic fit: outer IRLS, inner cyclic coordinate descent.

    Each outer step solves the weighted least-squares model of the
    log-likelihood at the current beta by soft-thresholded coordinate
    descent driven by the gram matrix of [1, x], then line-searches the
    true penalized objective so the trace is monotone. The gram is
    rebuilt only when the IRLS weights have drifted materially since it
    was last built; a stale gram still yields an ascent direction, and
    the line search keeps every accepted step safe, so only the step
    count can change, never the fixed point. The weights are floored only
    for division safety, which leaves the fixed point at the exact
    optimum. beta[0] is the unpenalized intercept; the penalty on the
    rest is lam1*|b| + lam2*b^2/2. Convergence is the KKT residual (max
    absolute subgradient bound) dropping below tol.

    Returns (beta, n_outer, obj_trace, converged) with obj_trace holding
    the penalized log-likelihood at start and after each accepted step.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, f = x.shape
    y = np.asarray(y, dtype=np.float64)
    beta = np.array(beta0, dtype=np.float64, copy=True)

    def _penalty(b):
        return lam1 * float(np.sum(np.abs(b[1:]))) + 0.5 * lam2 * float(b[1:] @ b[1:])

    s = beta[0] + x @ beta[1:]
    p = sigmoid(s)
    obj = float(np.sum(y * s - log1p_exp(s))) - _penalty(beta)
    obj_trace = [obj]
    converged = False
    n_outer = 0
    stall = 0
    gm = None
    a0 = 0.0
    wg = None
    wgmax = 0.0
    gt = None
    cmeans = None
    for _ in range(max_outer):
        # KKT residual of the penalized likelihood at the current beta;
        # the plain gradient doubles as the quadratic model's start state
        resid = y - p
        rs = float(resid.sum())
        plaing = x.T @ resid
        kkt = abs(rs)
        for a in range(f):
            ga, ba = float(plaing[a]) - lam2 * beta[a + 1], beta[a + 1]
            if ba > 0.0:
                kkt = max(kkt, abs(ga - lam1))
            elif ba < 0.0:
                kkt = max(kkt, abs(ga + lam1))
            else:
                kkt = max(kkt, max(abs(ga) - lam1, 0.0))
        if kkt < tol:
            converged = True
            break

        # curvature of the weighted quadratic model: gram matrix of [1, x],
        # rebuilt only when the weights drifted past a tenth of their scale
        w = np.maximum(p * (1.0 - p), _WFLOOR)
        if gm is None or float(np.abs(w - wg).max()) > 0.1 * max(wgmax, 0.01):
            a0 = float(w.sum())
            xw = x * w[:, None]
            gm = np.empty((f + 1, f + 1))
            gm[0, 0] = a0
            gm[0, 1:] = xw.sum(axis=0)
            gm[1:, 0] = gm[0, 1:]
            gm[1:, 1:] = x.T @ xw
            wg = w
            wgmax = float(w.max())
        q = np.empty(f + 1)
        q[0] = rs
        q[1:] = plaing

        # solve the quadratic model tightly enough for fast outer decay:
        # the inner gradient-scale target shrinks with the outer residual
        inner_tol = max(0.1 * tol, 0.01 * kkt)
        bnew = beta.copy()
        for _ip in range(100):
            worst = 0.0
            d0 = float(q[0]) / a0
            if d0 != 0.0:
                bnew[0] += d0
                q -= d0 * gm[:, 0]
            worst = max(worst, a0 * abs(d0))
            for a in range(f):
                aj = gm[a + 1, a + 1]
                if aj == 0.0:
                    continue
                u = float(q[a + 1]) + bnew[a + 1] * aj
                if u > lam1:
                    bj = (u - lam1) / (aj + lam2)
                elif u < -lam1:
                    bj = (u + lam1) / (aj + lam2)
                else:
                    bj = 0.0
                d = bj - bnew[a + 1]
                if d != 0.0:
                    bnew[a + 1] = bj
                    q -= d * gm[:, a + 1]
                worst = max(worst, (aj + lam2) * abs(d))
            if worst <= inner_tol:
                break

        # halve back toward the current beta until the true objective
        # holds; the direction's score-space image is fixed, so each trial
        # costs one fused update instead of a fresh matrix product
        direction = bnew - beta
        dir_s = direction[0] + x @ direction[1:]
        accepted = False
        step = 1.0
        for _h in range(51):
            bt = beta + step * direction
            st = s + step * dir_s
            obj_t = float(np.sum(y * st - log1p_exp(st))) - _penalty(bt)
            if obj_t >= obj - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        # two consecutive outers of negligible gain means the objective is
        # flat to machine precision; stop instead of spinning to max_outer
        stall = stall + 1 if obj_t - obj < 1e-12 else 0
        beta, s, obj = bt, st, obj_t
        p = sigmoid(s)
        obj_trace.append(obj)
        n_outer += 1
        if stall >= 2:
            break
    return beta, n_outer, np.array(obj_trace), converged


# ----------------------------------------------------------------------
# decision trees on binary features
# ----------------------------------------------------------------------

def _gini(n, pos):
    q = pos / n
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)


def build_tree(x, y, max_depth, min_leaf, mtry, state):
    """Grow one CART tree on {0,1} features from a bootstrap sample.

    All randomness (bootstrap draw, per-node feature subsets) comes from the
    splitmix64 stream seeded with ``state``; node processing order is a
    fixed LIFO (right child first), so the compiled backend reproduces the
    exact same tree. Returns (feature, left, right, value) arrays; leaves
    have feature == -1 and value == positive fraction.
    """
    n_rows, n_feat = x.shape
    idx = np.empty(n_rows, dtype=np.int64)
    for i in range(n_rows):
        state, z = splitmix64(state)
        idx[i] = z % n_rows

    feature = [0]
    left = [-1]
    right = [-1]
    value = [0.0]
    stack = [(0, n_rows, 0, 0)]
    scratch = np.arange(n_feat)

    while stack:
        lo, hi, depth, slot = stack.pop()
        seg = idx[lo:hi]
        ys = y[seg]
        n = hi - lo
        pos = int(ys.sum())
        value[slot] = pos / n
        if depth >= max_depth or pos == 0 or pos == n or n < 2 * min_leaf:
            feature[slot] = -1
            continue
        # sample the feature subset (partial Fisher-Yates, then sorted so
        # ties resolve to the smallest feature index)
        scratch[:] = np.arange(n_feat)
        for t in range(mtry):
            state, z = splitmix64(state)
            r = t + z % (n_feat - t)
            scratch[t], scratch[r] = scratch[r], scratch[t]
        cand = np.sort(scratch[:mtry].copy())

        g_parent = _gini(n, pos)
        best_gain = 1e-12
        best_f = -1
        best_n0 = 0
        for fidx in cand:
            xf = x[seg, fidx]
            n1 = int(xf.sum())
            n0 = n - n1
            if n0 < min_leaf or n1 < min_leaf:
                continue
            pos1 = int((ys * xf).sum())
            pos0 = pos - pos1
            child = (n0 * _gini(n0, pos0) + n1 * _gini(n1, pos1)) / n
            gain = g_parent - child
            if gain > best_gain:
                best_gain = gain
                best_f = int(fidx)
                best_n0 = n0
        if best_f < 0:
            feature[slot] = -1
            continue
        mask = x[seg, best_f] == 0
        idx[lo:hi] = np.concatenate([seg[mask], seg[~mask]])
        mid = lo + best_n0
        lslot = len(feature)
        feature.extend([0, 0])
        left.extend([-1, -1])
        right.extend([-1, -1])
        value.extend([0.0, 0.0])
        feature[slot] = best_f
        left[slot] = lslot
        right[slot] = lslot + 1
        stack.append((lo, mid, depth + 1, lslot))
        stack.append((mid, hi, depth + 1, lslot + 1))

    return (
        np.array(feature, dtype=np.int32),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(value, dtype=np.float64),
    )


def tree_predict(feature, left, right, value, x):
    """Leaf value per row of x for one tree."""
    n = x.shape[0]
    cur = np.zeros(n, dtype=np.int64)
    while True:
        fs = feature[cur]
        m = fs >= 0
        if not m.any():
            break
        rows = np.nonzero(m)[0]
        xv = x[rows, fs[m]]
        cur[rows] = np.where(xv == 1, right[cur[rows]], left[cur[rows]])
    return value[cur].astype(np.float64)
