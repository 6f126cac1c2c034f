"""Compiled inner loops shared by the tree learners.

Everything here works on plain numpy arrays so it can be jitted with numba.
Random draws use numba's per-thread generator, seeded at the start of a fit,
which keeps fits reproducible when they run concurrently in threads.
"""
import numpy as np
from numba import njit

REL_TOL = 1e-12
MIN_SIDE_MASS = 1e-6

# SGT node status codes (kept in sync with sgt.NODE_STATUS)
ST_SPLIT = 0
ST_LEAF = 1
ST_CAPPED = 2
ST_DEAD_FLAT = 3
ST_DEAD_CONTRA = 4


@njit(cache=True, nogil=True)
def draw_features(perm, m):
    """Uniform subset of size m via partial Fisher-Yates; returned sorted."""
    K = perm.shape[0]
    if m >= K:
        return np.arange(K)
    for i in range(m):
        j = i + np.random.randint(K - i)
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t
    return np.sort(perm[:m].copy())


@njit(cache=True, nogil=True)
def best_split_weighted(X, y, w, order, feats, min_mass, rel_tol):
    """Exhaustive weighted-SSE split search over presorted columns.

    Observations with zero weight are ignored, so candidate thresholds are
    midpoints between consecutive distinct values of the weighted support.
    Returns (feature, threshold, sse, parent_sse, left_mean, right_mean);
    feature is -1 when nothing beats the parent by more than rel_tol * parent.
    """
    N = X.shape[0]
    tw = 0.0
    twy = 0.0
    for i in range(N):
        tw += w[i]
        twy += w[i] * y[i]
    mean = twy / tw
    twd = 0.0
    tss = 0.0
    for i in range(N):
        d = y[i] - mean
        twd += w[i] * d
        tss += w[i] * d * d
    tol = rel_tol * tss
    best = np.inf
    bk = -1
    bc = 0.0
    bl = 0.0
    br = 0.0
    for f in feats:
        sw = 0.0
        swd = 0.0
        swdd = 0.0
        prev = -1
        for j in range(N):
            i = order[f, j]
            wi = w[i]
            if wi <= 0.0:
                continue
            xi = X[i, f]
            if prev >= 0 and xi > X[prev, f]:
                rw = tw - sw
                if sw >= min_mass and rw >= min_mass:
                    rwd = twd - swd
                    sse = (swdd - swd * swd / sw) + ((tss - swdd) - rwd * rwd / rw)
                    if sse < best - tol:
                        best = sse
                        bk = f
                        bc = 0.5 * (X[prev, f] + xi)
                        bl = mean + swd / sw
                        br = mean + rwd / rw
            d = y[i] - mean
            sw += wi
            swd += wi * d
            swdd += wi * d * d
            prev = i
    if bk >= 0 and not best < tss - tol:
        bk = -1
    return bk, bc, best, tss, bl, br


# ---------------------------------------------------------------------------
# hard-threshold trees (CART / RF members / boosting constituents)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def build_tree(X, y, cnt, order, max_depth, min_node_size, min_leaf, mtry, seed, rel_tol):
    """Exact greedy regression tree, grown depth-first (left child first).

    cnt[i] is the multiplicity of row i in the training sample (0 = absent),
    which covers plain fits, bootstrap resamples and subsamples alike.
    A node is split only if it holds more than min_node_size entries; each
    child must hold at least min_leaf entries. Every node keeps, per
    feature, its rows as a contiguous sorted segment of idx.
    Returns (feature, threshold, left, right, value, n_entries, n_nodes).
    """
    if seed >= 0:
        np.random.seed(seed)
    N, K = X.shape
    n0 = 0
    for i in range(N):
        if cnt[i] > 0:
            n0 += 1
    idx = np.empty((K, max(n0, 1)), np.int64)
    for f in range(K):
        q = 0
        for j in range(N):
            i = order[f, j]
            if cnt[i] > 0:
                idx[f, q] = i
                q += 1
    cap = 2 * n0 + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    n_entries = np.zeros(cap, np.int64)
    goleft = np.zeros(N, np.bool_)
    tmp = np.empty(max(n0, 1), np.int64)
    perm = np.arange(K)
    st_node = np.empty(cap, np.int64)
    st_s = np.empty(cap, np.int64)
    st_e = np.empty(cap, np.int64)
    st_d = np.empty(cap, np.int64)
    sp = 1
    st_node[0] = 0
    st_s[0] = 0
    st_e[0] = n0
    st_d[0] = 0
    n_nodes = 1
    while sp > 0:
        sp -= 1
        a = st_node[sp]
        s = st_s[sp]
        e = st_e[sp]
        d = st_d[sp]
        tc = 0.0
        ty = 0.0
        for j in range(s, e):
            i = idx[0, j]
            tc += cnt[i]
            ty += cnt[i] * y[i]
        mean = ty / tc
        value[a] = mean
        n_entries[a] = int(tc)
        tss = 0.0
        twd = 0.0
        for j in range(s, e):
            i = idx[0, j]
            dv = y[i] - mean
            twd += cnt[i] * dv
            tss += cnt[i] * dv * dv
        if not (d < max_depth and tc > min_node_size and tss > 0.0):
            continue
        feats = draw_features(perm, mtry)
        best = np.inf
        bk = -1
        bc = 0.0
        tol = rel_tol * tss
        for f in feats:
            sw = 0.0
            swd = 0.0
            swdd = 0.0
            px = 0.0
            for j in range(s, e):
                i = idx[f, j]
                xi = X[i, f]
                if j > s and xi > px:
                    nr = tc - sw
                    if sw >= min_leaf and nr >= min_leaf:
                        rwd = twd - swd
                        sse = (swdd - swd * swd / sw) + ((tss - swdd) - rwd * rwd / nr)
                        if sse < best - tol:
                            best = sse
                            bk = f
                            bc = 0.5 * (px + xi)
                c = cnt[i]
                dv = y[i] - mean
                sw += c
                swd += c * dv
                swdd += c * dv * dv
                px = xi
        if bk < 0 or not best < tss - tol:
            continue
        nl = 0
        for j in range(s, e):
            i = idx[0, j]
            g = X[i, bk] <= bc
            goleft[i] = g
            if g:
                nl += 1
        for f in range(K):
            ql = s
            qr = 0
            for j in range(s, e):
                i = idx[f, j]
                if goleft[i]:
                    idx[f, ql] = i
                    ql += 1
                else:
                    tmp[qr] = i
                    qr += 1
            for j in range(qr):
                idx[f, ql + j] = tmp[j]
        feature[a] = bk
        threshold[a] = bc
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[a] = lc
        right[a] = rc
        st_node[sp] = rc
        st_s[sp] = s + nl
        st_e[sp] = e
        st_d[sp] = d + 1
        sp += 1
        st_node[sp] = lc
        st_s[sp] = s
        st_e[sp] = s + nl
        st_d[sp] = d + 1
        sp += 1
    return feature, threshold, left, right, value, n_entries, n_nodes


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for j in range(n):
        a = 0
        while feature[a] >= 0:
            if X[j, feature[a]] <= threshold[a]:
                a = left[a]
            else:
                a = right[a]
        out[j] = value[a]
    return out


@njit(cache=True, nogil=True)
def boost(X, y, order, nu, n_steps, depth, frac, min_node_size, min_leaf, seed, rel_tol):
    """Stochastic gradient boosting with squared loss.

    Trees are packed row-wise into fixed-width arrays (one row per step).
    Returns (init, feature, threshold, left, right, value, train_fit).
    """
    np.random.seed(seed)
    N, K = X.shape
    width = min(2 ** (depth + 1) - 1, 2 * N + 1)
    feat = np.full((n_steps, width), -1, np.int64)
    thr = np.zeros((n_steps, width))
    lft = np.full((n_steps, width), -1, np.int64)
    rgt = np.full((n_steps, width), -1, np.int64)
    val = np.zeros((n_steps, width))
    init = 0.0
    for i in range(N):
        init += y[i]
    init /= N
    F = np.full(N, init)
    m = int(np.floor(frac * N + 0.5))
    if m < 1:
        m = 1
    if m > N:
        m = N
    idx = np.arange(N)
    cnt = np.zeros(N, np.int64)
    resid = np.empty(N)
    for s in range(n_steps):
        if m < N:
            for i in range(m):
                j = i + np.random.randint(N - i)
                t = idx[i]
                idx[i] = idx[j]
                idx[j] = t
            cnt[:] = 0
            for i in range(m):
                cnt[idx[i]] = 1
        else:
            cnt[:] = 1
        for i in range(N):
            resid[i] = y[i] - F[i]
        f_, t_, l_, r_, v_, _, nn = build_tree(
            X, resid, cnt, order, depth, min_node_size, min_leaf, K, -1, rel_tol
        )
        feat[s, :nn] = f_[:nn]
        thr[s, :nn] = t_[:nn]
        lft[s, :nn] = l_[:nn]
        rgt[s, :nn] = r_[:nn]
        val[s, :nn] = v_[:nn]
        step = predict_tree(f_, t_, l_, r_, v_, X)
        for i in range(N):
            F[i] += nu * step[i]
    return init, feat, thr, lft, rgt, val, F


@njit(cache=True, nogil=True)
def predict_boost(init, nu, feat, thr, lft, rgt, val, n_use, X):
    n = X.shape[0]
    out = np.full(n, init)
    for s in range(n_use):
        for j in range(n):
            a = 0
            while feat[s, a] >= 0:
                if X[j, feat[s, a]] <= thr[s, a]:
                    a = lft[s, a]
                else:
                    a = rgt[s, a]
            out[j] += nu * val[s, a]
    return out


# ---------------------------------------------------------------------------
# slow-growing tree
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _grow_f(a, need):
    if need <= a.shape[0]:
        return a
    b = np.empty(max(need, 2 * a.shape[0]), a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True, nogil=True)
def _grow_i(a, need):
    if need <= a.shape[0]:
        return a
    b = np.empty(max(need, 2 * a.shape[0]), a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True, nogil=True)
def eta_schedule(eta0, inc, plateau, schedule, depth):
    if not schedule:
        return eta0
    top = plateau if plateau > eta0 else eta0
    e = eta0 + inc * depth
    if e > top:
        e = top
    if e > 1.0:
        e = 1.0
    return e


@njit(cache=True, nogil=True)
def _contradicts(pk, pc, ps, d, k, c, side):
    # kept side of (k, c, side) lies inside a region rejected upstream on feature k
    for q in range(d):
        if pk[q] != k:
            continue
        if ps[q] == 0 and side == 1 and c >= pc[q]:
            return True
        if ps[q] == 1 and side == 0 and c <= pc[q]:
            return True
    return False


@njit(cache=True, nogil=True)
def grow_sgt(X, y, order, eta0, eta_inc, eta_plateau, schedule, hbar, mtry,
             cap, dead_tol, trim, seed, min_mass, rel_tol, h_tol, max_nodes):
    """Depth-first slow-growing tree.

    Leaves come back in CSR form: leaf l owns filters
    [leaf_off[l], leaf_off[l+1]) of (lf_k, lf_c, lf_s, lf_e), side 0 meaning
    "x <= c kept" and 1 meaning "x > c kept". Every visited node (including
    trimmed children) is logged in the node_* arrays for tracing.
    """
    np.random.seed(seed)
    N, K = X.shape
    perm = np.arange(K)
    S = cap + 4
    SW = np.empty((S, N))
    SD = np.zeros(S, np.int64)
    SPar = np.zeros(S, np.int64)
    SSide = np.zeros(S, np.int64)
    PK = np.zeros((S, cap + 1), np.int64)
    PC = np.zeros((S, cap + 1))
    PS = np.zeros((S, cap + 1), np.int64)
    PE = np.zeros((S, cap + 1))

    n_nodes = 0
    node_parent = np.empty(64, np.int64)
    node_depth = np.empty(64, np.int64)
    node_side = np.empty(64, np.int64)
    node_status = np.empty(64, np.int64)
    node_k = np.empty(64, np.int64)
    node_c = np.empty(64)
    node_h = np.empty(64)

    n_leaves = 0
    leaf_off = np.zeros(65, np.int64)
    leaf_val = np.empty(64)
    leaf_h = np.empty(64)
    leaf_capped = np.empty(64, np.int64)
    leaf_node = np.empty(64, np.int64)
    n_filt = 0
    lf_k = np.empty(256, np.int64)
    lf_c = np.empty(256)
    lf_s = np.empty(256, np.int64)
    lf_e = np.empty(256)

    for i in range(N):
        SW[0, i] = 1.0 / N
    SD[0] = 0
    SPar[0] = -1
    SSide[0] = -1
    sp = 1
    unif = 1.0 / N
    overflow = False
    while sp > 0:
        if n_nodes >= max_nodes:
            overflow = True
            break
        sp -= 1
        w = SW[sp].copy()
        d = SD[sp]
        pk = PK[sp].copy()
        pc = PC[sp].copy()
        ps = PS[sp].copy()
        pe = PE[sp].copy()
        me = n_nodes
        n_nodes += 1
        node_parent = _grow_i(node_parent, n_nodes)
        node_depth = _grow_i(node_depth, n_nodes)
        node_side = _grow_i(node_side, n_nodes)
        node_status = _grow_i(node_status, n_nodes)
        node_k = _grow_i(node_k, n_nodes)
        node_c = _grow_f(node_c, n_nodes)
        node_h = _grow_f(node_h, n_nodes)
        node_parent[me] = SPar[sp]
        node_depth[me] = d
        node_side[me] = SSide[sp]
        node_k[me] = -1
        node_c[me] = 0.0
        H = 0.0
        for i in range(N):
            H += w[i] * w[i]
        node_h[me] = H

        status = ST_SPLIT
        k = -1
        c = 0.0
        if H >= hbar - h_tol:
            status = ST_LEAF
        elif d >= cap:
            status = ST_CAPPED
        else:
            feats = draw_features(perm, mtry)
            k, c, sse, tss, lm, rm = best_split_weighted(X, y, w, order, feats, min_mass, rel_tol)
            if k < 0:
                status = ST_LEAF
        node_status[me] = status
        if status != ST_SPLIT:
            val = 0.0
            for i in range(N):
                val += w[i] * y[i]
            n_leaves += 1
            leaf_val = _grow_f(leaf_val, n_leaves)
            leaf_h = _grow_f(leaf_h, n_leaves)
            leaf_capped = _grow_i(leaf_capped, n_leaves)
            leaf_node = _grow_i(leaf_node, n_leaves)
            leaf_off = _grow_i(leaf_off, n_leaves + 1)
            leaf_val[n_leaves - 1] = val
            leaf_h[n_leaves - 1] = H
            leaf_capped[n_leaves - 1] = 1 if status == ST_CAPPED else 0
            leaf_node[n_leaves - 1] = me
            lf_k = _grow_i(lf_k, n_filt + d)
            lf_c = _grow_f(lf_c, n_filt + d)
            lf_s = _grow_i(lf_s, n_filt + d)
            lf_e = _grow_f(lf_e, n_filt + d)
            for q in range(d):
                lf_k[n_filt + q] = pk[q]
                lf_c[n_filt + q] = pc[q]
                lf_s[n_filt + q] = ps[q]
                lf_e[n_filt + q] = pe[q]
            n_filt += d
            leaf_off[n_leaves] = n_filt
            continue

        node_k[me] = k
        node_c[me] = c
        eta = eta_schedule(eta0, eta_inc, eta_plateau, schedule, d)
        # push right ("gt" kept) first so the left child is expanded first
        for side in (1, 0):
            dead = ST_SPLIT
            cw = np.empty(N)
            if trim and _contradicts(pk, pc, ps, d, k, c, side):
                dead = ST_DEAD_CONTRA
            else:
                tot = 0.0
                for i in range(N):
                    on_left = X[i, k] <= c
                    keep = on_left if side == 0 else not on_left
                    cw[i] = w[i] if keep else w[i] * (1.0 - eta)
                    tot += cw[i]
                dev = 0.0
                for i in range(N):
                    cw[i] /= tot
                    e = abs(cw[i] - unif)
                    if e > dev:
                        dev = e
                if dev <= dead_tol:
                    dead = ST_DEAD_FLAT
            if dead != ST_SPLIT:
                # trimmed children are logged but never expanded
                cid = n_nodes
                n_nodes += 1
                node_parent = _grow_i(node_parent, n_nodes)
                node_depth = _grow_i(node_depth, n_nodes)
                node_side = _grow_i(node_side, n_nodes)
                node_status = _grow_i(node_status, n_nodes)
                node_k = _grow_i(node_k, n_nodes)
                node_c = _grow_f(node_c, n_nodes)
                node_h = _grow_f(node_h, n_nodes)
                node_parent[cid] = me
                node_depth[cid] = d + 1
                node_side[cid] = side
                node_status[cid] = dead
                node_k[cid] = -1
                node_c[cid] = 0.0
                hh = np.nan
                if dead == ST_DEAD_FLAT:
                    hh = 0.0
                    for i in range(N):
                        hh += cw[i] * cw[i]
                node_h[cid] = hh
                continue
            SW[sp, :] = cw
            SD[sp] = d + 1
            SPar[sp] = me
            SSide[sp] = side
            PK[sp, :] = pk
            PC[sp, :] = pc
            PS[sp, :] = ps
            PE[sp, :] = pe
            PK[sp, d] = k
            PC[sp, d] = c
            PS[sp, d] = side
            PE[sp, d] = eta
            sp += 1
    return (
        overflow,
        leaf_off[: n_leaves + 1].copy(), lf_k[:n_filt].copy(), lf_c[:n_filt].copy(),
        lf_s[:n_filt].copy(), lf_e[:n_filt].copy(),
        leaf_val[:n_leaves].copy(), leaf_h[:n_leaves].copy(),
        leaf_capped[:n_leaves].copy(), leaf_node[:n_leaves].copy(),
        node_parent[:n_nodes].copy(), node_depth[:n_nodes].copy(),
        node_side[:n_nodes].copy(), node_status[:n_nodes].copy(),
        node_k[:n_nodes].copy(), node_c[:n_nodes].copy(), node_h[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def sgt_raw_memberships(leaf_off, lf_k, lf_c, lf_s, lf_e, x):
    L = leaf_off.shape[0] - 1
    out = np.empty(L)
    for l in range(L):
        r = 1.0
        for q in range(leaf_off[l], leaf_off[l + 1]):
            on_left = x[lf_k[q]] <= lf_c[q]
            keep = on_left if lf_s[q] == 0 else not on_left
            if not keep:
                r *= 1.0 - lf_e[q]
                if r == 0.0:
                    break
        out[l] = r
    return out


@njit(cache=True, nogil=True)
def sgt_predict(leaf_off, lf_k, lf_c, lf_s, lf_e, leaf_val, X):
    n = X.shape[0]
    out = np.empty(n)
    for j in range(n):
        raw = sgt_raw_memberships(leaf_off, lf_k, lf_c, lf_s, lf_e, X[j])
        num = 0.0
        den = 0.0
        for l in range(raw.shape[0]):
            num += raw[l] * leaf_val[l]
            den += raw[l]
        out[j] = num / den
    return out


# ---------------------------------------------------------------------------
# lasso
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def lasso_cd(Z, y, lam, beta0, tol, max_sweeps, record):
    """Cyclic coordinate descent on (1/2N)||y - Z b||^2 + lam ||b||_1.

    Z columns are standardized (mean 0, mean square 1) or all-zero; y is
    centered. Returns (beta, sweeps, max_change, objective history).
    """
    N, K = Z.shape
    beta = beta0.copy()
    r = y - Z @ beta
    colsq = np.zeros(K)
    for k in range(K):
        s = 0.0
        for i in range(N):
            s += Z[i, k] * Z[i, k]
        colsq[k] = s / N
    hist = np.empty(max_sweeps + 1 if record else 1)
    if record:
        hist[0] = 0.5 * np.dot(r, r) / N + lam * np.abs(beta).sum()
    sweeps = 0
    delta = np.inf
    while sweeps < max_sweeps:
        delta = 0.0
        for k in range(K):
            if colsq[k] <= 0.0:
                beta[k] = 0.0
                continue
            rho = 0.0
            for i in range(N):
                rho += Z[i, k] * r[i]
            rho = rho / N + colsq[k] * beta[k]
            # slack keeps lam = lam_max exactly at zero despite rounding
            if rho > lam * (1.0 + 1e-12):
                nb = (rho - lam) / colsq[k]
            elif rho < -lam * (1.0 + 1e-12):
                nb = (rho + lam) / colsq[k]
            else:
                nb = 0.0
            step = nb - beta[k]
            if step != 0.0:
                for i in range(N):
                    r[i] -= Z[i, k] * step
                beta[k] = nb
                if abs(step) > delta:
                    delta = abs(step)
        sweeps += 1
        if record:
            hist[sweeps] = 0.5 * np.dot(r, r) / N + lam * np.abs(beta).sum()
        if delta < tol:
            break
    return beta, sweeps, delta, hist[: sweeps + 1] if record else hist[:0]
