"""Exact enumeration oracles and numeric certification of the auxiliary lemmas.

Nothing here samples: every routine either enumerates its whole space or
refuses with :class:`GuardrailError`.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, GuardrailError, ParameterError
from .objectives import FiniteSumObjective, make_thm7_coupled
from .optimizer import AveragingScheme
from .shuffler import PermutationPolicy, PolicyKind

MAX_SIGN_N = 20
MAX_STATES = 10**6


# -- balanced sign patterns ---------------------------------------------------------------


@dataclass(frozen=True)
class SignStats:
    """Exact statistics of the prefix sums of a uniform balanced +-1 pattern.

    Index ``i - 1`` of each array refers to the prefix of length ``i``.
    """

    n: int
    e_abs_mean: np.ndarray
    p_positive: np.ndarray
    p_zero: np.ndarray
    patterns: int
    abs_totals: np.ndarray | None = None
    positive_counts: np.ndarray | None = None


def balanced_patterns(n: int) -> np.ndarray:
    """All ``C(n, n/2)`` balanced patterns as rows of +-1 (int8)."""
    if n < 2 or n % 2:
        raise ParameterError(f"n must be a positive even integer, got {n}")
    if n > MAX_SIGN_N:
        raise GuardrailError(f"n = {n} exceeds the enumeration limit {MAX_SIGN_N}")
    out = np.empty((math.comb(n, n // 2), n), dtype=np.int8)
    for r, pos in enumerate(itertools.combinations(range(n), n // 2)):
        row = -np.ones(n, dtype=np.int8)
        row[list(pos)] = 1
        out[r] = row
    return out


def sign_stats_exact(n: int) -> SignStats:
    """E|E_i|, P(E_i > 0) and P(E_i = 0) by enumerating every pattern."""
    P = balanced_patterns(n)
    E = np.cumsum(P, axis=1, dtype=np.int64)
    N = P.shape[0]
    # integer totals first so the only rounding is the final division
    abs_tot = np.abs(E).sum(axis=0)
    pos_tot = (E > 0).sum(axis=0)
    zero_tot = (E == 0).sum(axis=0)
    return SignStats(n, abs_tot / N, pos_tot / N, zero_tot / N, N, abs_tot, pos_tot)


def central_binomial_ratio(n: int, i: int) -> float:
    """``C(i, i/2) C(n-i, (n-i)/2) / C(n, n/2)`` via log-factorials."""
    if n < 4 or n % 2 or i % 2 or not 2 <= i <= n // 2:
        raise ParameterError(f"need even n >= 4 and even i in [2, n/2], got n={n}, i={i}")

    def lcb(k):
        return math.lgamma(k + 1) - 2.0 * math.lgamma(k // 2 + 1)

    return math.exp(lcb(i) + lcb(n - i) - lcb(n))


# -- epoch maps ------------------------------------------------------------------------------


def run_epoch(obj: FiniteSumObjective, x, order, eta) -> np.ndarray:
    """One epoch visiting ``order``; plain stepping, used by the enumerators."""
    x = np.array(x, dtype=float)
    for c in order:
        x = x - eta * (np.where(x < 0, obj.neg_curv[c], obj.pos_curv[c]) * x + obj.linear[c])
    return x


def affine_epoch_map(obj: FiniteSumObjective, order, eta) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(M, c)`` with epoch output ``M x0 + c`` for an all-quadratic objective.

    Built by composing the step maps ``x -> (I - eta A_i) x - eta b_i`` as
    full matrices, independent of the stepping loop in the optimizer.
    """
    d = obj.dim
    M = np.eye(d)
    c = np.zeros(d)
    for i in order:
        A, b = obj.component_affine(int(i))
        T = np.eye(d) - eta * np.diag(A)
        M = T @ M
        c = T @ c - eta * b
    return M, c


def _scheme_for(scheme, K):
    if scheme is None:
        return AveragingScheme.final(K)
    if isinstance(scheme, str):
        return AveragingScheme.by_name(scheme, K)
    if len(scheme) != K + 1:
        raise ContractError(f"scheme has {len(scheme)} weights, expected {K + 1}")
    return scheme


def _check_n(obj, n):
    if n != obj.n:
        raise ContractError(f"objective has {obj.n} components, got n={n}")


def _x0(obj, x0):
    if x0 is None:
        x0 = obj.x0 if obj.x0 is not None else np.zeros(obj.dim)
    return np.array(x0, dtype=float).reshape(obj.dim)


# -- exhaustive search over order sequences ------------------------------------------------


@dataclass
class ExhaustiveResult:
    min_gap: float
    max_gap: float
    argmin: list
    argmax: list
    sequences: int
    gaps: np.ndarray | None = None
    orders: list | None = None
    end_values: np.ndarray | None = None


def exhaustive_permutation_value(objective: FiniteSumObjective, x0, eta: float, n: int,
                                 K: int, scheme=None, keep_all: bool = False) -> ExhaustiveResult:
    """Min and max of ``F(x_hat) - F*`` over all ``(n!)^K`` order sequences.

    Depth-first over epochs.  Epoch outputs are memoised on the exact bytes
    of the start point, so sequences that reach the same iterate share work.
    Ties go to the lexicographically first sequence.  With ``keep_all`` the
    gap and end point of every sequence are returned in lexicographic order.
    """
    _check_n(objective, n)
    if K < 1:
        raise ParameterError("K must be positive")
    total = math.factorial(n) ** K
    if total > MAX_STATES:
        raise GuardrailError(f"(n!)^K = {total} exceeds {MAX_STATES}")
    sch = _scheme_for(scheme, K)
    w = sch.weights
    wsum = w.sum()
    orders = [np.array(o) for o in itertools.permutations(range(n))]
    x0 = _x0(objective, x0)
    memo: dict[bytes, list] = {}

    def children(x):
        key = x.tobytes()
        if key not in memo:
            memo[key] = [run_epoch(objective, x, o, eta) for o in orders]
        return memo[key]

    gaps = []
    ends = []
    seqs = []
    best = [math.inf, None]
    worst = [-math.inf, None]

    def dfs(k, x, acc, seq):
        if k == K:
            xhat = acc / wsum
            g = objective.gap(xhat)
            if not math.isfinite(g):
                g = math.inf
            if keep_all:
                gaps.append(g)
                ends.append(x)
                seqs.append(tuple(seq))
            if g < best[0]:
                best[:] = [g, list(seq)]
            if g > worst[0]:
                worst[:] = [g, list(seq)]
            return
        for o, y in zip(orders, children(x)):
            seq.append(tuple(int(v) for v in o))
            dfs(k + 1, y, acc + w[k + 1] * y, seq)
            seq.pop()

    dfs(0, x0, w[0] * x0, [])
    return ExhaustiveResult(
        best[0], worst[0], best[1], worst[1], total,
        np.array(gaps) if keep_all else None,
        seqs if keep_all else None,
        np.array(ends) if keep_all else None,
    )


def exhaustive_policy(objective, x0, eta, K, best: bool = True, scheme=None) -> PermutationPolicy:
    """A replay policy following the best (or worst) sequence found exhaustively."""
    res = exhaustive_permutation_value(objective, x0, eta, objective.n, K, scheme)
    seq = res.argmin if best else res.argmax
    kind = PolicyKind.EXHAUSTIVE_BEST if best else PolicyKind.EXHAUSTIVE_WORST
    return PermutationPolicy(kind, order=[list(o) for o in seq])


# -- exact expectation under random reshuffling ------------------------------------------------


def component_classes(obj: FiniteSumObjective) -> tuple[np.ndarray, list]:
    """Class label per component (identical coefficient rows share a class)."""
    keys = {}
    labels = np.empty(obj.n, dtype=np.int64)
    reps = []
    for i in range(obj.n):
        key = (obj.neg_curv[i].tobytes(), obj.pos_curv[i].tobytes(), obj.linear[i].tobytes())
        if key not in keys:
            keys[key] = len(reps)
            reps.append(i)
        labels[i] = keys[key]
    return labels, reps


def distinct_arrangements(labels) -> list[tuple]:
    """Distinct orderings of a multiset of class labels, lexicographic."""
    counts = Counter(int(v) for v in labels)
    classes = sorted(counts)
    out = []
    n = len(labels)
    cur = []

    def rec():
        if len(cur) == n:
            out.append(tuple(cur))
            return
        for c in classes:
            if counts[c]:
                counts[c] -= 1
                cur.append(c)
                rec()
                cur.pop()
                counts[c] += 1

    rec()
    return out


def rr_expectation_exact(objective: FiniteSumObjective, x0, eta: float, n: int, K: int,
                         scheme=None) -> float:
    """Exact ``E[F(x_hat) - F*]`` under independent uniform per-epoch orders.

    A uniform permutation induces a uniform arrangement of component
    classes, so only the distinct arrangements are enumerated.  For the
    final iterate, equal states are merged after every epoch.
    """
    _check_n(objective, n)
    labels, reps = component_classes(objective)
    arr = distinct_arrangements(labels)
    P = len(arr)
    if P**K > MAX_STATES:
        raise GuardrailError(f"{P}^{K} arrangement sequences exceed {MAX_STATES}")
    orders = [np.array([reps[c] for c in a]) for a in arr]
    x0 = _x0(objective, x0)
    sch = _scheme_for(scheme, K)
    w = sch.weights
    wsum = w.sum()
    final_only = np.count_nonzero(w[:-1]) == 0
    if final_only:
        dist = {x0.tobytes(): (x0, 1.0)}
        for _ in range(K):
            nxt: dict = {}
            for x, p in dist.values():
                q = p / P
                for o in orders:
                    y = run_epoch(objective, x, o, eta)
                    key = y.tobytes()
                    if key in nxt:
                        nxt[key] = (y, nxt[key][1] + q)
                    else:
                        nxt[key] = (y, q)
            dist = nxt
        return math.fsum(p * objective.gap(x) for x, p in dist.values())

    terms = []

    def rec(k, x, acc):
        if k == K:
            terms.append(objective.gap(acc / wsum))
            return
        for o in orders:
            y = run_epoch(objective, x, o, eta)
            rec(k + 1, y, acc + w[k + 1] * y)

    rec(0, x0, w[0] * x0)
    return math.fsum(terms) / len(terms)


# -- coupled two-step recursion -------------------------------------------------------------


def coupled_recursion_check(L: float, nu: float, eta: float, trials: int = 10_000,
                            seed: int = 0, tol: float = 1e-12) -> dict:
    """Check the two-step lower recursion on ``y + z`` for the coupled construction.

    For random states with ``y + z >= 0`` and each of the four ways to pick
    the two components, asserts
    ``y'' + z'' >= (1 - eta L/2)(1 - eta L)(y + z) + eta^2 L nu / 2``.
    """
    if not 0 < eta < 1.0 / L:
        raise ParameterError(f"need 0 < eta < 1/L, got eta={eta}, L={L}")
    obj = make_thm7_coupled(L, L / 2, nu, 2)
    rng = np.random.default_rng(seed)
    scale = nu / L
    S = rng.standard_normal((trials, 2)) * scale * rng.choice([1e-3, 1.0, 30.0], (trials, 1))
    S[S.sum(axis=1) < 0] *= -1.0
    # hand-picked edges: origin, exactly balanced, one coordinate negative
    edges = np.array([[0.0, 0.0], [scale, -scale], [-scale, 2 * scale], [0.0, scale]])
    S = np.vstack([edges, S])
    S = S[S.sum(axis=1) >= 0]
    factor = (1 - eta * L / 2) * (1 - eta * L)
    bump = eta**2 * L * nu / 2
    worst = math.inf
    violations = []
    for y, z in S:
        rhs = factor * (y + z) + bump
        for a, b in itertools.product((0, 1), repeat=2):
            x = np.array([y, z])
            x = run_epoch(obj, x, [a, b], eta)
            margin = (x[0] + x[1]) - rhs
            worst = min(worst, margin)
            if margin < -tol * max(1.0, abs(rhs)):
                violations.append({"y": y, "z": z, "assignment": [a, b], "margin": margin})
    return {
        "lemma_id": "coupled_two_step",
        "grid": {"L": L, "nu": nu, "eta": eta, "states": int(S.shape[0]), "seed": seed},
        "worst_margin": worst,
        "violations": violations[:20],
        "violation_count": len(violations),
        "pass": not violations,
    }


# -- auxiliary inequality grids -----------------------------------------------------------


def lemma_sign_bounds(n_max: int = MAX_SIGN_N) -> dict:
    """sqrt(i)/10 <= E|E_i| <= sqrt(i) and P(E_i > 0) >= 1/6 for 1 <= i <= n/2.

    Pass/fail is decided on the integer counts (both bounds are tight at
    small n); the reported margins are the floating-point differences.
    """
    worst = math.inf
    worst_p = math.inf
    ok = True
    for n in range(2, n_max + 1, 2):
        st = sign_stats_exact(n)
        N = st.patterns
        for i in range(1, n // 2 + 1):
            a = int(st.abs_totals[i - 1])
            c = int(st.positive_counts[i - 1])
            ok &= 100 * a * a >= i * N * N and a * a <= i * N * N and 6 * c >= N
            e = st.e_abs_mean[i - 1]
            r = math.sqrt(i)
            worst = min(worst, e - r / 10, r - e)
            worst_p = min(worst_p, st.p_positive[i - 1] - 1.0 / 6.0)
    return {"lemma_id": "sign_partial_sums", "grid": {"n": f"2..{n_max} even"},
            "worst_margin": float(min(worst, worst_p)), "worst_abs_margin": float(worst),
            "worst_prob_margin": float(worst_p), "pass": bool(ok)}


def lemma_central_binomial(n_max: int = 64) -> dict:
    worst = math.inf
    count = 0
    for n in range(4, n_max + 1, 2):
        for i in range(2, n // 2 + 1, 2):
            worst = min(worst, central_binomial_ratio(n, i) - 2.0 / (5.0 * math.sqrt(i)))
            count += 1
    return {"lemma_id": "central_binomial_ratio", "grid": {"n": f"4..{n_max} even", "pairs": count},
            "worst_margin": float(worst), "pass": bool(worst >= 0)}


def one_minus_inv_margin(t):
    """Sign-preserving margin of ``(1 - 1/t)^t > (1/e)(1 - 1/t)``.

    Dividing by ``(1/e)(1 - 1/t)`` gives ``exp((t-1) log(1 - 1/t) + 1) > 1``;
    the returned ``expm1`` of that exponent avoids cancellation at large t.
    """
    t = np.asarray(t, dtype=float)
    return np.expm1((t - 1.0) * np.log1p(-1.0 / t) + 1.0)


def lemma_one_minus_inv(points: int = 2000) -> dict:
    t = np.unique(np.concatenate([np.arange(2.0, 100.0), np.geomspace(2.0, 1e6, points)]))
    m = one_minus_inv_margin(t)
    return {"lemma_id": "one_minus_inv_t_power", "grid": {"t": "2..1e6 log-spaced", "points": int(t.size)},
            "worst_margin": float(m.min()), "pass": bool(np.all(m > 0))}


def f1_lhs(x, beta, m):
    """``(1+bx)^m (b-1) - b (1+bx)^m (1-x)^m + 1`` without cancellation.

    Equal to ``1 - (1+bx)^m (1 - b (1 - (1-x)^m))``; written with
    ``log1p``/``expm1`` it stays accurate when the result is tiny.
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a = m * np.log1p(beta * x)
    inner = beta * np.expm1(m * np.log1p(-x))  # b((1-x)^m - 1)
    return -np.expm1(a + np.log1p(inner))


def lemma_f1_margins(n: int, grid: int = 50) -> np.ndarray:
    m = n // 2
    xs = np.linspace(0, 2.0 / n, grid + 1)[1:]
    bs = np.linspace(1 - 2.0 / n, 1, grid + 1)[:-1]
    X, B = np.meshgrid(xs, bs, indexing="ij")
    # relative margin: the bound itself is tiny near x = 0
    return (f1_lhs(X, B, m) - m * X**2 / 30.0) / (m * X**2 / 30.0)


def lemma_f1(n_min: int = 104, n_max: int = 256, grid: int = 50) -> dict:
    worst = math.inf
    for n in range(n_min, n_max + 1, 2):
        worst = min(worst, float(lemma_f1_margins(n, grid).min()))
    return {"lemma_id": "aux_polynomial_mx2_over_30",
            "grid": {"n": f"{n_min}..{n_max} even", "x": f"{grid} points in (0, 2/n]",
                     "beta": f"{grid} points in [1-2/n, 1)"},
            "worst_margin": worst, "pass": bool(worst > 0)}


def exp_half_margin(x):
    """``1 + x/2 + 5x^2/32 - e^{x/2}``, computed through expm1."""
    x = np.asarray(x, dtype=float)
    return x / 2 + 5 * x * x / 32 - np.expm1(x / 2)


def lemma_exp_half(points: int = 10_000) -> dict:
    x = np.linspace(0, 1, points + 1)[1:]
    m = exp_half_margin(x) / (x * x)
    return {"lemma_id": "exp_half_quadratic", "grid": {"x": f"{points} points in (0, 1]"},
            "worst_margin": float(m.min()), "pass": bool(np.all(m > 0))}


def weighted_sign_second_moment(n: int, q: float) -> float:
    """Exact ``E[(sum_i q^{n-i} s_i)^2]`` over uniform balanced patterns.

    Uses ``E[s_i^2] = 1`` and ``E[s_i s_j] = -1/(n-1)`` for ``i != j``.
    """
    if n < 2 or n % 2:
        raise ParameterError(f"n must be a positive even integer, got {n}")
    w = q ** np.arange(n - 1, -1, -1, dtype=float)
    s1 = math.fsum(w)
    s2 = math.fsum(w * w)
    return (n * s2 - s1 * s1) / (n - 1)


def variance_constant(n_values=range(2, 257, 2), eta_L=None) -> dict:
    """Smallest ratio of the exact second moment to ``min{1 + 1/(eta L), (eta L)^2 n^3}``.

    The universal constant in that lower bound is not given in closed
    form; this measures the best value consistent with the grid.
    """
    eta_L = np.geomspace(1e-6, 0.999, 400) if eta_L is None else np.asarray(eta_L, dtype=float)
    worst, arg = math.inf, None
    for n in n_values:
        for a in eta_L:
            bound = min(1.0 + 1.0 / a, a * a * n**3)
            r = weighted_sign_second_moment(n, 1.0 - a) / bound
            if r < worst:
                worst, arg = r, {"n": int(n), "eta_L": float(a)}
    return {"lemma_id": "weighted_sign_variance_constant",
            "grid": {"n": f"{min(n_values)}..{max(n_values)} even", "eta_L": f"{len(eta_L)} points"},
            "worst_margin": float(worst), "argmin": arg, "pass": bool(worst > 0)}


def verify_lemmas(coupled_trials: int = 10_000, seed: int = 0) -> list[dict]:
    """Run the full certification suite; each entry has lemma_id, grid, worst_margin, pass."""
    out = [lemma_sign_bounds(), lemma_central_binomial(), lemma_one_minus_inv(), lemma_f1(),
           lemma_exp_half(), variance_constant()]
    for frac in (0.1, 0.5, 0.9):
        r = coupled_recursion_check(1.0, 1.0, frac, coupled_trials, seed)
        r.pop("violations")
        out.append(r)
    return out
