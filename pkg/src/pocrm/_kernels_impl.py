"""Hot numeric kernels, written to be compilable with numba in nopython mode.

This module is imported twice by pocrm.kernels: once as-is (the pure
numpy/Python path) and once with every public function wrapped in
``numba.njit``.  Keep the code inside these functions restricted to the
numpy subset numba supports, and route all randomness through
``np.random`` so the two paths produce bit-identical streams.

Array conventions: combos are flattened row-major, c = (j-1)*nA + (i-1).
``alpha_mc[m, c]`` is the skeleton value assigned to combo c under
ordering m; ``order_combo[m, l]`` is the flat code of the combo at
0-based position l under ordering m.
"""

import numpy as np

MLE_BISECT_ITERS = 60
TIE_RULE_RANDOM = 0
TIE_RULE_LOWEST = 1


def derive_seed(base, rep):
    """Per-replicate seed, independent of scheduling order."""
    s = (base % 2147483647) * 2654435761 + (rep + 1) * 40503
    return s % 2147483629


def loglik_counts(alpha, n, y, a):
    """Binomial log-likelihood of the power model from per-combo counts."""
    tot = 0.0
    for c in range(alpha.shape[0]):
        if n[c] > 0.0:
            la = np.log(alpha[c])
            p = np.exp(a * la)
            if p > 1.0 - 1e-15:
                p = 1.0 - 1e-15
            tot += y[c] * a * la + (n[c] - y[c]) * np.log1p(-p)
    return tot


def score_counts(alpha, n, y, a):
    """Derivative of loglik_counts in a."""
    s = 0.0
    for c in range(alpha.shape[0]):
        if n[c] > 0.0:
            la = np.log(alpha[c])
            p = np.exp(a * la)
            if p > 1.0 - 1e-15:
                p = 1.0 - 1e-15
            s += la * (y[c] - (n[c] - y[c]) * p / (1.0 - p))
    return s


def mle_counts(alpha, n, y, lo, hi):
    """Maximiser of the power-model log-likelihood over [lo, hi].

    The score crosses zero at most once (the log-likelihood is unimodal in
    a for heterogeneous data), so sign bisection suffices.  With all-toxic
    or all-clean data there is no interior root and the maximising boundary
    is returned.
    """
    slo = score_counts(alpha, n, y, lo)
    if slo <= 0.0:
        return lo
    shi = score_counts(alpha, n, y, hi)
    if shi >= 0.0:
        return hi
    a = lo
    b = hi
    for _ in range(MLE_BISECT_ITERS):
        mid = 0.5 * (a + b)
        if score_counts(alpha, n, y, mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def weighted_loglik(alpha, r, eta, a):
    """Expected per-patient log-likelihood under allocation weights eta."""
    tot = 0.0
    for c in range(alpha.shape[0]):
        if eta[c] > 0.0:
            la = np.log(alpha[c])
            p = np.exp(a * la)
            if p > 1.0 - 1e-15:
                p = 1.0 - 1e-15
            tot += eta[c] * (r[c] * a * la + (1.0 - r[c]) * np.log1p(-p))
    return tot


def weighted_score(alpha, r, eta, a):
    """Derivative of weighted_loglik in a (the converged-MLE score)."""
    s = 0.0
    for c in range(alpha.shape[0]):
        if eta[c] > 0.0:
            la = np.log(alpha[c])
            p = np.exp(a * la)
            if p > 1.0 - 1e-15:
                p = 1.0 - 1e-15
            s += eta[c] * la * (r[c] - (1.0 - r[c]) * p / (1.0 - p))
    return s


def weighted_mle(alpha, r, eta, lo, hi):
    """Root of weighted_score in [lo, hi]; boundary maximiser if no root."""
    slo = weighted_score(alpha, r, eta, lo)
    if slo <= 0.0:
        return lo
    shi = weighted_score(alpha, r, eta, hi)
    if shi >= 0.0:
        return hi
    a = lo
    b = hi
    for _ in range(MLE_BISECT_ITERS):
        mid = 0.5 * (a + b)
        if weighted_score(alpha, r, eta, mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def recommend_combo(alpha_row, order_combo_row, a_hat, theta0):
    """Flat code of the combo whose modelled toxicity is closest to theta0.

    Scans positions in ordering rank order, strict improvement only, so
    exact-distance ties resolve to the lower (safer) rank.
    """
    best = np.inf
    best_c = order_combo_row[0]
    for l in range(order_combo_row.shape[0]):
        c = order_combo_row[l]
        p = np.exp(a_hat * np.log(alpha_row[c]))
        d = abs(p - theta0)
        if d < best:
            best = d
            best_c = c
    return best_c


def model_allocation(alpha_mc, log_prior, order_combo, n_c, y_c, theta0,
                     lo, hi, tie_rule, eq1_literal, a_scratch, w_scratch):
    """Stage-2 allocation: select the maximum-posterior ordering, then CRM.

    Posterior weight of ordering m is its maximised likelihood times the
    prior, compared in log space.  With eq1_literal the weight is
    exp{likelihood} * prior instead (the formula read literally).
    """
    m_count = alpha_mc.shape[0]
    for m in range(m_count):
        a_hat = mle_counts(alpha_mc[m], n_c, y_c, lo, hi)
        a_scratch[m] = a_hat
        ll = loglik_counts(alpha_mc[m], n_c, y_c, a_hat)
        if eq1_literal == 1:
            w_scratch[m] = np.exp(ll) + log_prior[m]
        else:
            w_scratch[m] = ll + log_prior[m]
    best_w = -np.inf
    for m in range(m_count):
        if w_scratch[m] > best_w:
            best_w = w_scratch[m]
    n_ties = 0
    best_m = 0
    for m in range(m_count):
        if w_scratch[m] == best_w:
            if n_ties == 0:
                best_m = m
            n_ties += 1
    if n_ties > 1 and tie_rule == TIE_RULE_RANDOM:
        pick = int(np.random.random() * n_ties)
        if pick >= n_ties:
            pick = n_ties - 1
        seen = 0
        for m in range(m_count):
            if w_scratch[m] == best_w:
                if seen == pick:
                    best_m = m
                    break
                seen += 1
    return recommend_combo(alpha_mc[best_m], order_combo[best_m],
                           a_scratch[best_m], theta0), best_m


def run_trial_capture(alpha_mc, log_prior, order_combo, r_flat, theta0,
                      lo, hi, stage1, cohort, n_patients, seed, tie_rule,
                      eq1_literal):
    """One full trial with per-patient history.

    Returns (alloc, outcome, stage, ordering) per patient plus the final
    recommendation and the ordering selected for it (-1 while in stage 1).
    Must consume randomness exactly like the replicate loop in
    simulate_trials: one uniform per patient plus tie-break draws.
    """
    k = alpha_mc.shape[1]
    m_count = alpha_mc.shape[0]
    a_scratch = np.empty(m_count)
    w_scratch = np.empty(m_count)
    n_c = np.zeros(k)
    y_c = np.zeros(k)
    alloc = np.empty(n_patients, np.int64)
    outcome = np.empty(n_patients, np.int64)
    stage = np.empty(n_patients, np.int64)
    chosen = np.empty(n_patients, np.int64)
    np.random.seed(seed)
    s1 = 0
    tot_y = 0
    tot_n = 0
    cur = stage1[0]
    patient = 0
    while patient < n_patients:
        het = 0 < tot_y < tot_n
        if not het:
            if tot_y == 0:
                idx = s1
                if idx > stage1.shape[0] - 1:
                    idx = stage1.shape[0] - 1
                cur = stage1[idx]
                s1 += 1
            c = cur
            sel_m = -1
            st = 1
        else:
            c, sel_m = model_allocation(alpha_mc, log_prior, order_combo,
                                        n_c, y_c, theta0, lo, hi, tie_rule,
                                        eq1_literal, a_scratch, w_scratch)
            cur = c
            st = 2
        csize = cohort
        if csize > n_patients - patient:
            csize = n_patients - patient
        for _ in range(csize):
            u = np.random.random()
            yv = 1 if u <= r_flat[c] else 0
            n_c[c] += 1.0
            y_c[c] += yv
            tot_n += 1
            tot_y += yv
            alloc[patient] = c
            outcome[patient] = yv
            stage[patient] = st
            chosen[patient] = sel_m
            patient += 1
    het = 0 < tot_y < tot_n
    if het:
        final, final_m = model_allocation(alpha_mc, log_prior, order_combo,
                                          n_c, y_c, theta0, lo, hi, tie_rule,
                                          eq1_literal, a_scratch, w_scratch)
    else:
        final_m = -1
        if tot_y == 0:
            idx = s1
            if idx > stage1.shape[0] - 1:
                idx = stage1.shape[0] - 1
            final = stage1[idx]
        else:
            final = cur
    return alloc, outcome, stage, chosen, final, final_m


def simulate_trials(alpha_mc, log_prior, order_combo, r_flat, theta0,
                    lo, hi, stage1, cohort, n_patients, reps, seed,
                    tie_rule, eq1_literal):
    """Monte Carlo replicate loop; returns final-selection counts per combo."""
    k = alpha_mc.shape[1]
    m_count = alpha_mc.shape[0]
    a_scratch = np.empty(m_count)
    w_scratch = np.empty(m_count)
    n_c = np.zeros(k)
    y_c = np.zeros(k)
    sel = np.zeros(k, np.int64)
    for rep in range(reps):
        np.random.seed(derive_seed(seed, rep))
        for c in range(k):
            n_c[c] = 0.0
            y_c[c] = 0.0
        s1 = 0
        tot_y = 0
        tot_n = 0
        cur = stage1[0]
        patient = 0
        while patient < n_patients:
            het = 0 < tot_y < tot_n
            if not het:
                if tot_y == 0:
                    idx = s1
                    if idx > stage1.shape[0] - 1:
                        idx = stage1.shape[0] - 1
                    cur = stage1[idx]
                    s1 += 1
                c = cur
            else:
                c, _m = model_allocation(alpha_mc, log_prior, order_combo,
                                         n_c, y_c, theta0, lo, hi, tie_rule,
                                         eq1_literal, a_scratch, w_scratch)
                cur = c
            csize = cohort
            if csize > n_patients - patient:
                csize = n_patients - patient
            for _ in range(csize):
                u = np.random.random()
                yv = 1 if u <= r_flat[c] else 0
                n_c[c] += 1.0
                y_c[c] += yv
                tot_n += 1
                tot_y += yv
                patient += 1
        het = 0 < tot_y < tot_n
        if het:
            final, _m = model_allocation(alpha_mc, log_prior, order_combo,
                                         n_c, y_c, theta0, lo, hi, tie_rule,
                                         eq1_literal, a_scratch, w_scratch)
        else:
            if tot_y == 0:
                idx = s1
                if idx > stage1.shape[0] - 1:
                    idx = stage1.shape[0] - 1
                final = stage1[idx]
            else:
                final = cur
        sel[final] += 1
    return sel


def eq2_sample(alpha_sub_m, r_sub, alpha_t_w, alpha_m_w, r_w, a_t_hat,
               lo, hi, draws, seed, tol):
    """Simplex-sampled check of the likelihood-dominance condition.

    For each Dirichlet(1,..,1) draw of allocation weights over the combo
    subset, solves the converged-MLE score for the incorrect ordering and
    compares, per watched combo w and per correct-group ordering t,
    f(alpha_t(w)^a_t, R(w)) against f(alpha_m(w)^a_m, R(w)).

    Returns (violations[t, w], worst_margin[t, w], first violating draw
    index, allocation weights of that draw, converged MLE of that draw).
    """
    q = alpha_sub_m.shape[0]
    t_count = alpha_t_w.shape[0]
    w_count = alpha_m_w.shape[0]
    eta = np.empty(q)
    viol = np.zeros((t_count, w_count), np.int64)
    worst = np.full((t_count, w_count), np.inf)
    first_draw = -1
    first_eta = np.zeros(q)
    first_a_m = np.nan
    np.random.seed(seed)
    for d in range(draws):
        tot = 0.0
        for i in range(q):
            e = -np.log(1.0 - np.random.random())
            eta[i] = e
            tot += e
        for i in range(q):
            eta[i] /= tot
        a_m = weighted_mle(alpha_sub_m, r_sub, eta, lo, hi)
        hit = False
        for wi in range(w_count):
            la = np.log(alpha_m_w[wi])
            p_m = np.exp(a_m * la)
            if p_m > 1.0 - 1e-15:
                p_m = 1.0 - 1e-15
            rhs = r_w[wi] * a_m * la + (1.0 - r_w[wi]) * np.log1p(-p_m)
            for ti in range(t_count):
                la_t = np.log(alpha_t_w[ti, wi])
                p_t = np.exp(a_t_hat * la_t)
                if p_t > 1.0 - 1e-15:
                    p_t = 1.0 - 1e-15
                lhs = r_w[wi] * a_t_hat * la_t + (1.0 - r_w[wi]) * np.log1p(-p_t)
                margin = lhs - rhs
                if margin < worst[ti, wi]:
                    worst[ti, wi] = margin
                if margin < -tol:
                    viol[ti, wi] += 1
                    hit = True
        if hit and first_draw < 0:
            first_draw = d
            for i in range(q):
                first_eta[i] = eta[i]
            first_a_m = a_m
    return viol, worst, first_draw, first_eta, first_a_m


def pav_inplace(values, weights):
    """Pool-adjacent-violators: in-place weighted isotonic fit of a 1-D array."""
    n = values.shape[0]
    level_v = np.empty(n)
    level_w = np.empty(n)
    level_len = np.empty(n, np.int64)
    top = 0
    for i in range(n):
        level_v[top] = values[i]
        level_w[top] = weights[i]
        level_len[top] = 1
        top += 1
        while top > 1 and level_v[top - 2] > level_v[top - 1]:
            wsum = level_w[top - 2] + level_w[top - 1]
            level_v[top - 2] = (level_w[top - 2] * level_v[top - 2]
                                + level_w[top - 1] * level_v[top - 1]) / wsum
            level_w[top - 2] = wsum
            level_len[top - 2] += level_len[top - 1]
            top -= 1
    pos = 0
    for b in range(top):
        for _ in range(level_len[b]):
            values[pos] = level_v[b]
            pos += 1


def isotonic_2d_inplace(mat, tol, max_iter):
    """Alternating row/column PAV until the largest per-sweep change <= tol."""
    nr = mat.shape[0]
    nc = mat.shape[1]
    w_row = np.ones(nc)
    w_col = np.ones(nr)
    buf_row = np.empty(nc)
    buf_col = np.empty(nr)
    for _ in range(max_iter):
        delta = 0.0
        for r in range(nr):
            for c in range(nc):
                buf_row[c] = mat[r, c]
            pav_inplace(buf_row, w_row)
            for c in range(nc):
                d = abs(buf_row[c] - mat[r, c])
                if d > delta:
                    delta = d
                mat[r, c] = buf_row[c]
        for c in range(nc):
            for r in range(nr):
                buf_col[r] = mat[r, c]
            pav_inplace(buf_col, w_col)
            for r in range(nr):
                d = abs(buf_col[r] - mat[r, c])
                if d > delta:
                    delta = d
                mat[r, c] = buf_col[r]
        if delta <= tol:
            break


def benchmark_trials(r_flat, n_rows, n_cols, theta0, n_patients, reps, seed):
    """Complete-information benchmark replicate loop; selection counts per combo.

    One latent uniform per patient determines the toxicity indicator at
    every combo simultaneously; empirical rates are projected onto the
    bimonotone cone before picking the combo closest to theta0.
    """
    k = r_flat.shape[0]
    sel = np.zeros(k, np.int64)
    counts = np.empty(k)
    mat = np.empty((n_rows, n_cols))
    for rep in range(reps):
        np.random.seed(derive_seed(seed, rep))
        for c in range(k):
            counts[c] = 0.0
        for _ in range(n_patients):
            u = np.random.random()
            for c in range(k):
                if u <= r_flat[c]:
                    counts[c] += 1.0
        for r in range(n_rows):
            for c in range(n_cols):
                mat[r, c] = counts[r * n_cols + c] / n_patients
        isotonic_2d_inplace(mat, 1e-8, 1000)
        best = np.inf
        best_c = 0
        for r in range(n_rows):
            for c in range(n_cols):
                d = abs(mat[r, c] - theta0)
                if d < best:
                    best = d
                    best_c = r * n_cols + c
        sel[best_c] += 1
    return sel
