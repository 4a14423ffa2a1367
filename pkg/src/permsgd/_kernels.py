"""Compiled inner loops for many-seed simulation.

Seeds are laid out along the last (contiguous) axis so the innermost loop
vectorises.  The arithmetic matches ``optimizer.run_epochs`` operation for
operation, so results are bit-identical to the reference loop.
"""

import numba
import numpy as np

DIVERGENCE_NORM = 1e12


@numba.njit(cache=True, nogil=True)
def sgd_lanes(perms, neg, pos, lin, x0, eta, w):
    """Run one SGD trajectory per lane with given orders.

    Parameters
    ----------
    perms : int64 array (K, n, S)
        ``perms[k, i, s]`` is the component visited at step ``i`` of epoch
        ``k`` by lane ``s``.
    neg, pos, lin : float arrays (n, d)
    x0 : float array (d,)
    w : float array (K + 1,)
        Averaging weights over end-of-epoch iterates.

    Returns
    -------
    final : (d, S) last iterate
    avg : (d, S) weighted average
    diverged : (S,) bool
    """
    K, n, S = perms.shape
    d = x0.shape[0]
    X = np.empty((d, S))
    acc = np.empty((d, S))
    for j in range(d):
        for s in range(S):
            X[j, s] = x0[j]
            acc[j, s] = w[0] * x0[j]
    diverged = np.zeros(S, dtype=np.bool_)
    sq = np.empty(S)
    for k in range(K):
        for i in range(n):
            row = perms[k, i]
            for j in range(d):
                xj = X[j]
                for s in range(S):
                    c = row[s]
                    v = xj[s]
                    a = neg[c, j] if v < 0 else pos[c, j]
                    xj[s] = v - eta * (a * v + lin[c, j])
        wk = w[k + 1]
        if wk != 0.0:
            for j in range(d):
                for s in range(S):
                    acc[j, s] += wk * X[j, s]
        for s in range(S):
            sq[s] = 0.0
        for j in range(d):
            for s in range(S):
                sq[s] += X[j, s] * X[j, s]
        for s in range(S):
            v = sq[s]
            if not (v <= DIVERGENCE_NORM * DIVERGENCE_NORM):
                diverged[s] = True
    wsum = 0.0
    for k in range(K + 1):
        wsum += w[k]
    for j in range(d):
        for s in range(S):
            acc[j, s] /= wsum
    return X, acc, diverged


@numba.njit(cache=True, nogil=True)
def rr_mean_trajectory(arrangements, neg, pos, lin, x0, etas, S, K, seed, mean_out, var_out):
    """Mean and variance over lanes of every end-of-epoch iterate, for several step sizes.

    Each epoch every lane draws one arrangement of component classes
    uniformly (a uniform permutation induces exactly this law).  All step
    sizes share the draws, so differences between them are not sampling
    noise.

    Parameters
    ----------
    arrangements : int64 (P, n)
        Every distinct class arrangement.
    neg, pos, lin : float (C, d)
        Coefficients per class.
    mean_out, var_out : float (E, K + 1, d)
        Filled in place; ``var_out`` holds the unbiased sample variance.
    """
    np.random.seed(seed)
    P, n = arrangements.shape
    E = etas.shape[0]
    d = x0.shape[0]
    X = np.empty((E, d, S))
    for e in range(E):
        for j in range(d):
            for s in range(S):
                X[e, j, s] = x0[j]
    cls = np.empty((n, S), dtype=np.int64)
    for k in range(K + 1):
        for e in range(E):
            for j in range(d):
                xs = X[e, j]
                m = 0.0
                for s in range(S):
                    m += xs[s]
                m /= S
                q = 0.0
                for s in range(S):
                    dv = xs[s] - m
                    q += dv * dv
                mean_out[e, k, j] = m
                var_out[e, k, j] = q / (S - 1) if S > 1 else 0.0
        if k == K:
            break
        for s in range(S):
            r = int(np.random.random() * P)
            for i in range(n):
                cls[i, s] = arrangements[r, i]
        for e in range(E):
            eta = etas[e]
            for j in range(d):
                xs = X[e, j]
                for i in range(n):
                    ci = cls[i]
                    for s in range(S):
                        c = ci[s]
                        v = xs[s]
                        a = neg[c, j] if v < 0 else pos[c, j]
                        xs[s] = v - eta * (a * v + lin[c, j])


@numba.njit(cache=True, nogil=True)
def _lane_moments(xs, shift):
    S = xs.shape[0]
    t = 0.0
    t2 = 0.0
    for s in range(S):
        dv = xs[s] - shift
        t += dv
        t2 += dv * dv
    m = t / S
    q = t2 - t * m
    return shift + m, (q / (S - 1) if S > 1 and q > 0 else 0.0)


@numba.njit(cache=True, nogil=True)
def rr_mean_trajectory_fast(arrangements, neg, pos, lin, maps, x0, etas, S, K, seed,
                            mean_out, var_out):
    """Same law and draws as :func:`rr_mean_trajectory`, with precomposed epochs.

    ``maps[e, r, j]`` holds ``(mult_pos, offs_pos, thr_pos, mult_neg,
    offs_neg, thr_neg)``: a lane starting at ``v >= thr_pos`` keeps every
    step input nonnegative, so its epoch is ``mult_pos v + offs_pos``
    (likewise ``v < thr_neg`` on the negative side).  Other lanes are
    stepped.  Agreement with the stepwise kernel is up to rounding.
    """
    np.random.seed(seed)
    P, n = arrangements.shape
    E = etas.shape[0]
    d = x0.shape[0]
    X = np.empty((E, d, S))
    for e in range(E):
        for j in range(d):
            for s in range(S):
                X[e, j, s] = x0[j]
    draw = np.empty(S, dtype=np.int64)
    for k in range(K + 1):
        for e in range(E):
            for j in range(d):
                m, v = _lane_moments(X[e, j], x0[j])
                mean_out[e, k, j] = m
                var_out[e, k, j] = v
        if k == K:
            break
        for s in range(S):
            draw[s] = int(np.random.random() * P)
        for e in range(E):
            eta = etas[e]
            for j in range(d):
                xs = X[e, j]
                mp = maps[e, :, j]
                for s in range(S):
                    r = draw[s]
                    v = xs[s]
                    if v >= mp[r, 2]:
                        xs[s] = mp[r, 0] * v + mp[r, 1]
                    elif v < mp[r, 5]:
                        xs[s] = mp[r, 3] * v + mp[r, 4]
                    else:
                        for i in range(n):
                            c = arrangements[r, i]
                            a = neg[c, j] if v < 0 else pos[c, j]
                            v = v - eta * (a * v + lin[c, j])
                        xs[s] = v
