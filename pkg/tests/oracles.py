"""Independent brute-force reference implementations for the test suite.

Everything in this module is deliberately written the slow, obvious way
and imports nothing from the package under test. When a package result
and an oracle result agree, the agreement is meaningful because the two
code paths share nothing beyond numpy.
"""

from __future__ import annotations

import math

import numpy as np


# ----------------------------------------------------------------------
# rank-based evaluation protocol
# ----------------------------------------------------------------------

def retained_pool(diseases, symptoms, values, edges):
    """Per-disease top-E_j retention, exactly as the protocol defines it.

    values is a (D, S) array of export scores, edges a set of
    (disease, symptom) pairs already restricted to the vocabulary.
    Returns a list of (value, is_edge) entries, keeping only positive
    values, plus the total number of reference edges.
    """
    per_disease = {}
    for d, s in edges:
        per_disease.setdefault(d, set()).add(s)
    pool = []
    total = 0
    for j, dname in enumerate(diseases):
        ref_syms = per_disease.get(dname, set())
        if not ref_syms:
            continue
        total += len(ref_syms)
        ranked = sorted(
            ((values[j][i], symptoms[i]) for i in range(len(symptoms))),
            key=lambda t: (-t[0], t[1]))
        for v, sname in ranked[:len(ref_syms)]:
            if v > 0:
                pool.append((float(v), sname in ref_syms))
    return pool, total


def brute_auprc(diseases, symptoms, values, edges, b):
    """Full threshold enumeration over the retained pool.

    One precision/recall point per distinct positive score, a terminal
    point at (recall 1, precision b), trapezoid rule over recall with the
    curve anchored at recall 0 on the first point's precision.
    """
    pool, total = retained_pool(diseases, symptoms, values, edges)
    pts = []
    for t in sorted({v for v, _ in pool}, reverse=True):
        kept = [(v, h) for v, h in pool if v >= t]
        tp = sum(1 for _, h in kept if h)
        pts.append((tp / len(kept), tp / total))
    pts.append((b, 1.0))
    area = 0.0
    prev_p, prev_r = pts[0][0], 0.0
    for p, r in pts:
        area += (r - prev_r) * (p + prev_p) / 2.0
        prev_p, prev_r = p, r
    return area


def brute_f1(diseases, symptoms, values, edges, budget=None):
    """Exhaustive confusion counts for the per-disease F1 table."""
    per_disease = {}
    for d, s in edges:
        per_disease.setdefault(d, set()).add(s)
    out = {}
    for j, dname in enumerate(diseases):
        ref_syms = per_disease.get(dname, set())
        if not ref_syms:
            continue
        take = len(ref_syms) if budget is None else budget
        ranked = sorted(
            ((values[j][i], symptoms[i]) for i in range(len(symptoms))),
            key=lambda t: (-t[0], t[1]))[:take]
        chosen = {sname for _, sname in ranked}
        tp = len(chosen & ref_syms)
        fp = len(chosen - ref_syms)
        fn = len(ref_syms - chosen)
        out[dname] = 2 * tp / (2 * tp + fp + fn)
    return out


def brute_auroc(scores, labels):
    """O(n^2) pair counting with half credit for tied scores."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# ----------------------------------------------------------------------
# model likelihoods and gradients
# ----------------------------------------------------------------------

def noisy_or_loglik(parents, x, leak, fail):
    """Direct per-record Bernoulli log-likelihood of the leaky noisy-OR."""
    total = 0.0
    n, s = x.shape
    for r in range(n):
        for i in range(s):
            q = 1.0 - leak[i]
            for j in range(parents.shape[1]):
                if parents[r, j]:
                    q *= fail[j, i]
            p_on = 1.0 - q
            total += math.log(p_on) if x[r, i] else math.log(q)
    return total


def central_fd_gradient(fun, beta, h=1e-5):
    """Central finite differences of a scalar function of a vector."""
    g = np.zeros_like(beta)
    for k in range(len(beta)):
        bp = beta.copy()
        bm = beta.copy()
        bp[k] += h
        bm[k] -= h
        g[k] = (fun(bp) - fun(bm)) / (2.0 * h)
    return g


def logistic_loglik(x, y, beta):
    """Sum of y*s - log(1 + e^s) with the overflow-safe split."""
    total = 0.0
    for r in range(x.shape[0]):
        s = beta[0]
        for k in range(x.shape[1]):
            s += x[r, k] * beta[k + 1]
        if s > 0:
            total += y[r] * s - (s + math.log1p(math.exp(-s)))
        else:
            total += y[r] * s - math.log1p(math.exp(s))
    return total


def conditional_counts(x, y, alpha):
    """Per-class symptom frequencies by explicit counting."""
    n, f = x.shape
    out = np.zeros((2, f))
    totals = np.zeros(2)
    for r in range(n):
        c = int(y[r])
        totals[c] += 1
        for k in range(f):
            if x[r, k]:
                out[c, k] += 1
    p = np.zeros((2, f))
    for c in (0, 1):
        p[c] = (out[c] + alpha) / (totals[c] + 2.0 * alpha)
    return p, totals


# ----------------------------------------------------------------------
# timeline segmentation
# ----------------------------------------------------------------------

def brute_episode_starts(dates, gap_days):
    """Index of the first note of every episode, on dates sorted ascending."""
    starts = [0]
    for i in range(1, len(dates)):
        if (dates[i] - dates[i - 1]).days > gap_days:
            starts.append(i)
    return starts


# ----------------------------------------------------------------------
# abnormality flags
# ----------------------------------------------------------------------

def _sample_sd(vals):
    m = sum(vals) / len(vals)
    return math.sqrt(sum((v - m) ** 2 for v in vals) / (len(vals) - 1)), m


def _percentile(vals, q):
    """Linear-interpolation percentile matching numpy's default."""
    ordered = sorted(vals)
    pos = (len(ordered) - 1) * q / 100.0
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return ordered[lo]
    return ordered[lo] + (pos - lo) * (ordered[hi] - ordered[lo])


def brute_flag_table(count, mean_dis, mean_sym, mean_age, female):
    """Recompute every abnormality flag from the covariate columns.

    Bounds are mean +- one sample SD; a bound outside the feasible range
    falls back to the 16th or 84th percentile. Comparisons are strict and
    NaN covariates never flag.
    """
    def bound(vals, side, lo=None, hi=None):
        known = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
        sd, m = _sample_sd(known)
        if side == "low":
            b = m - sd
            if lo is not None and b < lo:
                b = _percentile(known, 16)
        else:
            b = m + sd
            if hi is not None and b > hi:
                b = _percentile(known, 84)
        return b

    c_lo = bound(count, "low", lo=0.0)
    d_hi = bound(mean_dis, "high")
    s_hi = bound(mean_sym, "high")
    a_lo = bound(mean_age, "low", lo=0.0)
    a_hi = bound(mean_age, "high")
    f_lo = bound(female, "low", lo=0.0)
    f_hi = bound(female, "high", hi=1.0)

    def valid(v):
        return not (isinstance(v, float) and math.isnan(v))

    rows = []
    for k in range(len(count)):
        flags = {
            "count": count[k] < c_lo,
            "disease": valid(mean_dis[k]) and mean_dis[k] > d_hi,
            "symptom": valid(mean_sym[k]) and mean_sym[k] > s_hi,
            "age": valid(mean_age[k]) and (mean_age[k] < a_lo or mean_age[k] > a_hi),
            "female": valid(female[k]) and (female[k] < f_lo or female[k] > f_hi),
        }
        flags["any"] = any(flags.values())
        rows.append(flags)
    return rows
