"""Finite-sum objectives and the worst-case constructions for shuffling SGD.

Every objective in the zoo is a finite sum of *separable piecewise
quadratics*: component ``i`` evaluated at ``x`` is

    f_i(x) = sum_j c_ij(x_j) * x_j**2 / 2 + b_ij * x_j,

where ``c_ij(t)`` equals ``neg_curv[i, j]`` for ``t < 0`` and
``pos_curv[i, j]`` for ``t >= 0``.  This family is closed under block
aggregation and covers every lower-bound construction, while keeping
gradients cheap to evaluate for many seeds at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionRegimeError, ParameterError

# Constants fixed by the lower-bound proofs.
C1 = 2415  # minimum condition number for the three-regime aggregate
C2 = 161  # step-size regime boundary 1/(C2 L n)
THM1_INIT_FACTOR = 1.0 / 27000.0
THM9_PAIR_INIT_DIVISOR = 60.0  # y_0 = nu / (60 L)
THM9_HEAVY_INIT_FACTOR = 3.0 / 8.0  # z_0 = 3 nu / (8 n L)

CLASS_F = "F"
CLASS_F_PL = "F_PL"


@dataclass(frozen=True)
class Constants:
    """Declared class constants (L, mu, tau, nu)."""

    L: float
    mu: float
    tau: float = 0.0
    nu: float = 0.0

    def as_dict(self) -> dict:
        return {"L": self.L, "mu": self.mu, "tau": self.tau, "nu": self.nu}


@dataclass(frozen=True)
class ComponentFn:
    dim: int
    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SignPattern:
    """A balanced +1/-1 pattern: which half each visited component came from."""

    signs: tuple

    def __post_init__(self):
        n = len(self.signs)
        if n % 2:
            raise ParameterError(f"sign pattern length must be even, got {n}")
        if any(s not in (1, -1) for s in self.signs):
            raise ParameterError("sign pattern entries must be +1 or -1")
        if sum(self.signs) != 0:
            raise ParameterError("sign pattern must contain n/2 of each sign")

    @classmethod
    def from_permutation(cls, order: Sequence[int]) -> "SignPattern":
        """+1 where the visited component lies in the first half of the ids."""
        half = len(order) // 2
        return cls(tuple(1 if int(c) < half else -1 for c in order))

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.signs)


@dataclass(eq=False)
class FiniteSumObjective:
    """``F(x) = (1/n) sum_i f_i(x)`` over separable piecewise quadratics.

    Parameters
    ----------
    neg_curv, pos_curv : ndarray, shape (n, d)
        Curvature used where a coordinate is negative / nonnegative.
    linear : ndarray, shape (n, d)
        Linear coefficients ``b_ij``.
    constants : Constants
        Declared (L, mu, tau, nu); verified empirically by
        :func:`check_objective`, never inferred.
    x_star, f_star
        Known minimizer and minimum value.
    class_tag : {"F", "F_PL"}
    x0 : ndarray, optional
        Initialization prescribed by the construction, if any.
    """

    neg_curv: np.ndarray
    pos_curv: np.ndarray
    linear: np.ndarray
    constants: Constants
    x_star: np.ndarray
    f_star: float
    class_tag: str = CLASS_F
    name: str = "objective"
    x0: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.neg_curv = np.array(self.neg_curv, dtype=float, ndmin=2)
        self.pos_curv = np.array(self.pos_curv, dtype=float, ndmin=2)
        self.linear = np.array(self.linear, dtype=float, ndmin=2)
        shapes = {self.neg_curv.shape, self.pos_curv.shape, self.linear.shape}
        if len(shapes) != 1:
            raise ParameterError(f"coefficient arrays disagree in shape: {shapes}")
        self.x_star = np.asarray(self.x_star, dtype=float).reshape(self.dim)
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float).reshape(self.dim)
        if self.class_tag not in (CLASS_F, CLASS_F_PL):
            raise ParameterError(f"unknown class tag {self.class_tag!r}")
        for arr in (self.neg_curv, self.pos_curv, self.linear, self.x_star):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    @property
    def dim(self) -> int:
        return self.linear.shape[1]

    @property
    def is_quadratic(self) -> bool:
        """True when no coordinate has a curvature jump at zero."""
        return bool(np.array_equal(self.neg_curv, self.pos_curv))

    @property
    def kink_columns(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.neg_curv != self.pos_curv, axis=0))

    # -- single point evaluation -------------------------------------------------

    def _curv(self, rows, x):
        return np.where(x < 0, self.neg_curv[rows], self.pos_curv[rows])

    def component_value(self, i: int, x) -> float:
        x = np.asarray(x, dtype=float)
        c = self._curv(i, x)
        return float(np.sum(c * x * x / 2 + self.linear[i] * x))

    def component_grad(self, i: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._curv(i, x) * x + self.linear[i]

    def component_grads(self, x) -> np.ndarray:
        """Gradients of all components at ``x``, shape (n, d)."""
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.neg_curv, self.pos_curv) * x + self.linear

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        c = np.where(x < 0, self.neg_curv, self.pos_curv)
        return float(np.mean(np.sum(c * x * x / 2 + self.linear * x, axis=1)))

    def grad(self, x) -> np.ndarray:
        return self.component_grads(x).mean(axis=0)

    def gap(self, x) -> float:
        return self.value(x) - self.f_star

    # -- batched evaluation ------------------------------------------------------

    def values(self, X) -> np.ndarray:
        """F evaluated row-wise on ``X`` of shape (m, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        neg = self.neg_curv.mean(axis=0)
        pos = self.pos_curv.mean(axis=0)
        lin = self.linear.mean(axis=0)
        c = np.where(X < 0, neg, pos)
        return np.sum(c * X * X / 2 + lin * X, axis=1)

    def grad_batch(self, idx, X) -> np.ndarray:
        """Row ``s`` is the gradient of component ``idx[s]`` at ``X[s]``."""
        c = np.where(X < 0, self.neg_curv[idx], self.pos_curv[idx])
        return c * X + self.linear[idx]

    # -- views ---------------------------------------------------------------------

    @property
    def components(self) -> list[ComponentFn]:
        return [
            ComponentFn(
                self.dim,
                (lambda x, i=i: self.component_value(i, x)),
                (lambda x, i=i: self.component_grad(i, x)),
            )
            for i in range(self.n)
        ]

    def component_affine(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal Hessian and offset with grad f_i(x) = A x + b (quadratics only)."""
        if not self.is_quadratic:
            raise ParameterError(f"{self.name} is piecewise; no single affine map")
        return self.pos_curv[i].copy(), self.linear[i].copy()

    def restrict(self, columns: Sequence[int]) -> "FiniteSumObjective":
        """Marginal objective on a subset of (separable) coordinates."""
        cols = list(columns)
        return FiniteSumObjective(
            self.neg_curv[:, cols],
            self.pos_curv[:, cols],
            self.linear[:, cols],
            self.constants,
            self.x_star[cols],
            _restricted_value(self, cols, self.x_star[cols]),
            self.class_tag,
            f"{self.name}[{','.join(map(str, cols))}]",
            None if self.x0 is None else self.x0[cols],
            dict(self.meta),
        )

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "dim": self.dim,
            "class": self.class_tag,
            "constants": self.constants.as_dict(),
            "x_star": self.x_star.tolist(),
            "f_star": self.f_star,
            "x0": None if self.x0 is None else self.x0.tolist(),
        }


def _embed(values, cols, base):
    out = np.array(base, dtype=float)
    out[cols] = values
    return out[None, :]


def _restricted_value(obj, cols, x):
    c = np.where(x < 0, obj.neg_curv[:, cols], obj.pos_curv[:, cols])
    return float(np.mean(np.sum(c * x * x / 2 + obj.linear[:, cols] * x, axis=1)))


# -- helpers -------------------------------------------------------------------------


def _require_even(n: int):
    if n < 2 or n % 2:
        raise ParameterError(
            f"n must be a positive even integer, got {n}; use pad_to_even for odd n"
        )


def _half_signs(n: int) -> np.ndarray:
    """+1 for the first n/2 component ids, -1 for the rest."""
    return np.where(np.arange(n) < n // 2, 1.0, -1.0)


def stack_blocks(blocks: Sequence[FiniteSumObjective], name: str, constants: Constants,
                 x0=None, meta=None) -> FiniteSumObjective:
    """Separable aggregate ``F(x, y, ...) = F_1(x) + F_2(y) + ...``.

    Component ``i`` of the aggregate is the sum of component ``i`` of each
    block, so blocks must share ``n``.
    """
    ns = {b.n for b in blocks}
    if len(ns) != 1:
        raise ParameterError(f"blocks disagree on n: {sorted(ns)}")
    tags = {b.class_tag for b in blocks}
    return FiniteSumObjective(
        np.hstack([b.neg_curv for b in blocks]),
        np.hstack([b.pos_curv for b in blocks]),
        np.hstack([b.linear for b in blocks]),
        constants,
        np.concatenate([b.x_star for b in blocks]),
        float(sum(b.f_star for b in blocks)),
        CLASS_F if tags == {CLASS_F} else CLASS_F_PL,
        name,
        x0,
        {"blocks": [b.describe() for b in blocks], **(meta or {})},
    )


# -- constructions -------------------------------------------------------------------


def make_f1_quadratic(mu: float, dim: int = 1, n: int = 1) -> FiniteSumObjective:
    """n identical components ``mu/2 ||x||^2``; no stochasticity at all."""
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if n < 1 or dim < 1:
        raise ParameterError("n and dim must be at least 1")
    curv = np.full((n, dim), float(mu))
    return FiniteSumObjective(curv, curv, np.zeros((n, dim)), Constants(mu, mu, 0.0, 0.0),
                              np.zeros(dim), 0.0, CLASS_F, "f1_quadratic")


def make_f2_piecewise(L: float, mu0: float, nu: float, n: int) -> FiniteSumObjective:
    """Curvature ``L`` left of zero, ``mu0`` right of it, plus ``+-nu x``.

    Half the components carry ``+nu x`` and half ``-nu x``, so the mean is the
    asymmetric quadratic with minimum 0 at 0.  The lower-bound proof takes
    ``mu0 = L / C1``; any ``0 < mu0 <= L`` is accepted here.
    """
    _require_even(n)
    if not L > 0 or not 0 < mu0 <= L:
        raise ParameterError(f"need 0 < mu0 <= L, got L={L}, mu0={mu0}")
    if nu < 0:
        raise ParameterError(f"nu must be nonnegative, got {nu}")
    return FiniteSumObjective(
        np.full((n, 1), float(L)),
        np.full((n, 1), float(mu0)),
        (nu * _half_signs(n))[:, None],
        Constants(L, mu0, 0.0, nu),
        np.zeros(1), 0.0, CLASS_F, "f2_piecewise",
    )


def make_f3_quadratic_pm(L: float, nu: float, n: int) -> FiniteSumObjective:
    """Components ``L x^2/2 +- nu x`` with mean ``L x^2 / 2``."""
    _require_even(n)
    if not L > 0 or nu < 0:
        raise ParameterError(f"need L > 0 and nu >= 0, got L={L}, nu={nu}")
    curv = np.full((n, 1), float(L))
    return FiniteSumObjective(curv, curv, (nu * _half_signs(n))[:, None],
                              Constants(L, L, 0.0, nu), np.zeros(1), 0.0, CLASS_F,
                              "f3_quadratic_pm")


def thm1_init_y(mu: float, nu: float, n: int, K: int) -> float:
    """Start of the middle-regime block: ``nu / (27000 mu sqrt(n) K)``."""
    return THM1_INIT_FACTOR * nu / (mu * math.sqrt(n) * K)


def make_thm1_aggregate(L: float, mu: float, nu: float, n: int, K: int,
                        D0: float | None = None) -> FiniteSumObjective:
    """Three-block RR lower-bound objective ``F1(x) + F2(y) + F3(z)``.

    Each noisy block uses ``nu / sqrt(3)`` so that the per-block gradient
    error budgets add up to ``nu**2``.  ``D0`` is the x-block start and
    defaults to ``nu / mu``; the bound for that block holds for any value.
    """
    if not (L > 0 and mu > 0):
        raise ParameterError("L and mu must be positive")
    if L / mu < C1:
        raise ConstructionRegimeError(f"need L/mu >= {C1}, got {L / mu:.6g}")
    _require_even(n)
    if K < 1:
        raise ParameterError(f"K must be positive, got {K}")
    nu_b = nu / math.sqrt(3.0)
    blocks = [
        make_f1_quadratic(mu, 1, n),
        make_f2_piecewise(L, L / C1, nu_b, n),
        make_f3_quadratic_pm(L, nu_b, n),
    ]
    D0 = nu / mu if D0 is None else float(D0)
    x0 = np.array([D0, thm1_init_y(mu, nu, n, K), 0.0])
    return stack_blocks(blocks, "thm1_aggregate", Constants(L, mu, 0.0, nu), x0,
                        {"block_nu": [nu_b] * 3, "K": K, "D0": D0})


def make_thm7_coupled(L: float, mu: float, nu: float, n: int) -> FiniteSumObjective:
    """Two coupled coordinates ``g_s(y) + g_{-s}(z)`` with ``s = +1`` on half the ids.

    ``g_{+-1}(t) = (L 1[t<0] + L/2 1[t>=0]) t^2/2 +- nu t``.  Any visiting order
    moves ``y + z`` in the same direction, which is what defeats reordering.
    """
    _require_even(n)
    if not (L > 0 and mu > 0):
        raise ParameterError("L and mu must be positive")
    if mu > L / 2:
        raise ParameterError(f"need mu <= L/2, got mu={mu}, L={L}")
    s = _half_signs(n)
    return FiniteSumObjective(
        np.full((n, 2), float(L)),
        np.full((n, 2), L / 2.0),
        np.column_stack([nu * s, -nu * s]),
        Constants(L, mu, 0.0, math.sqrt(2.0) * nu),
        np.zeros(2), 0.0, CLASS_F, "thm7_coupled",
        x0=np.array([nu / (2.0 * L), 0.0]),
    )


def make_thm9_nonconvex_pair(L: float, mu: float, nu: float, n: int) -> FiniteSumObjective:
    """Half ``g1(y) = L/2 y^2 - nu y``, half concave ``g2(y) = -(L-2mu)/2 y^2 + nu y``."""
    _require_even(n)
    if not (L > 0 and mu > 0):
        raise ParameterError("L and mu must be positive")
    if not L / mu > n:
        raise ConstructionRegimeError(f"need L/mu > n, got L/mu={L / mu:.6g}, n={n}")
    first = np.arange(n) < n // 2
    curv = np.where(first, L, -(L - 2.0 * mu))[:, None]
    lin = np.where(first, -nu, nu)[:, None]
    return FiniteSumObjective(curv, curv, lin, Constants(L, mu, L / mu, nu),
                              np.zeros(1), 0.0, CLASS_F_PL, "thm9_nonconvex_pair",
                              x0=np.array([nu / (THM9_PAIR_INIT_DIVISOR * L)]))


def make_thm9_single_heavy(L: float, nu: float, n: int,
                           mu: float | None = None) -> FiniteSumObjective:
    """One component ``L/2 z^2 - nu z``; the other n-1 share a concave remainder.

    The mean is ``L/(4n) z^2``, so the largest admissible PL constant is
    ``L/(2n)``; that is the default ``mu``.
    """
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    if not L > 0:
        raise ParameterError("L must be positive")
    mu = L / (2.0 * n) if mu is None else float(mu)
    if not 0 < mu <= L / (2.0 * n):
        raise ConstructionRegimeError(f"mu must lie in (0, L/(2n)], got {mu}")
    curv = np.full((n, 1), -L / (2.0 * (n - 1)))
    lin = np.full((n, 1), nu / (n - 1))
    curv[0, 0] = L
    lin[0, 0] = -nu
    return FiniteSumObjective(curv, curv, lin, Constants(L, mu, L / mu, nu),
                              np.zeros(1), 0.0, CLASS_F_PL, "thm9_single_heavy",
                              x0=np.array([THM9_HEAVY_INIT_FACTOR * nu / (n * L)]))


def make_diverging_quadratic(L: float, n: int, scale: float = 1.0) -> FiniteSumObjective:
    """Identical components ``L w^2``; ``scale`` is the attached start ``w_0``."""
    if not L > 0:
        raise ParameterError(f"L must be positive, got {L}")
    if n < 1:
        raise ParameterError("n must be at least 1")
    curv = np.full((n, 1), 2.0 * L)
    return FiniteSumObjective(curv, curv, np.zeros((n, 1)),
                              Constants(2.0 * L, 2.0 * L, 0.0, 0.0),
                              np.zeros(1), 0.0, CLASS_F, "diverging_quadratic",
                              x0=np.array([float(scale)]))


def make_shifted_quadratic(L: float, mu: float, nu: float, n: int, dim: int = 4,
                           seed: int = 0, D: float | None = None) -> FiniteSumObjective:
    """Random diagonal quadratics ``1/2 x'Ax - b_i'x`` in class F(L, mu, 0, nu).

    The Hessian spectrum is spread evenly over ``[mu, L]``; the offsets
    ``b_i`` are centred (so ``x* = 0``, ``F* = 0``) and rescaled to
    ``max_i ||b_i|| = nu``.  ``D`` sets the attached start to
    ``D * (1, ..., 1) / sqrt(dim)`` (default ``nu / mu``).
    """
    if not 0 < mu <= L:
        raise ParameterError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    if n < 2 or dim < 1:
        raise ParameterError("need n >= 2 and dim >= 1")
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, dim))
    b -= b.mean(axis=0)
    b *= nu / np.max(np.linalg.norm(b, axis=1))
    curv = np.tile(np.linspace(mu, L, dim), (n, 1))
    D = nu / mu if D is None else float(D)
    return FiniteSumObjective(curv, curv, -b, Constants(L, mu, 0.0, nu), np.zeros(dim),
                              0.0, CLASS_F, "shifted_quadratic",
                              x0=np.full(dim, D / math.sqrt(dim)), meta={"seed": seed})


def pad_to_even(builder: Callable[..., FiniteSumObjective], n: int,
                **params) -> FiniteSumObjective:
    """Build with ``n`` components, padding odd ``n`` with a zero component.

    For odd ``n`` the construction is built on ``n - 1`` components and a
    zero function is appended, which scales the mean objective by
    ``(n - 1) / n``.  The declared constants are adjusted to stay true: the
    zero component deviates from the mean gradient by ``||grad F||``, so
    ``tau`` becomes at least 1.
    """
    if n % 2 == 0:
        return builder(n=n, **params)
    base = builder(n=n - 1, **params)
    m = base.n
    w = m / n
    c = base.constants
    zero = np.zeros((1, base.dim))
    return FiniteSumObjective(
        np.vstack([base.neg_curv, zero]),
        np.vstack([base.pos_curv, zero]),
        np.vstack([base.linear, zero]),
        Constants(c.L, c.mu * w, max(1.0, (c.tau + 1.0 / n) / w), c.nu),
        base.x_star, base.f_star * w, base.class_tag, base.name + "_padded",
        base.x0, {**base.meta, "padded_from": m},
    )


OBJECTIVES: dict[str, Callable[..., FiniteSumObjective]] = {
    "f1_quadratic": make_f1_quadratic,
    "f2_piecewise": make_f2_piecewise,
    "f3_quadratic_pm": make_f3_quadratic_pm,
    "thm1_aggregate": make_thm1_aggregate,
    "thm7_coupled": make_thm7_coupled,
    "thm9_nonconvex_pair": make_thm9_nonconvex_pair,
    "thm9_single_heavy": make_thm9_single_heavy,
    "diverging_quadratic": make_diverging_quadratic,
    "shifted_quadratic": make_shifted_quadratic,
}


def make_objective(key: str, params: dict | None = None) -> FiniteSumObjective:
    """Look up a zoo construction by string key and build it from a JSON-style dict."""
    try:
        builder = OBJECTIVES[key]
    except KeyError:
        raise ParameterError(f"unknown objective {key!r}; choose from {sorted(OBJECTIVES)}")
    return builder(**(params or {}))


# -- invariant checks ------------------------------------------------------------------


@dataclass
class InvariantReport:
    """Worst violation margins; every margin must be <= 0 to pass."""

    fd_rel_error: float
    optimum_grad_norm: float
    assumption1_margin: float
    smoothness_margin: float
    pl_margin: float | None
    points: int

    @property
    def passed(self) -> bool:
        ok = (self.fd_rel_error <= 1e-5 and self.optimum_grad_norm <= 1e-12
              and self.assumption1_margin <= 1e-9 and self.smoothness_margin <= 1e-9)
        return ok and (self.pl_margin is None or self.pl_margin <= 1e-9)


def _sample_points(obj, m, rng):
    scale = 1.0
    if obj.x0 is not None and np.any(obj.x0):
        scale = float(np.max(np.abs(obj.x0)))
    scale = max(scale, obj.constants.nu / max(obj.constants.L, 1e-300), 1e-3)
    pts = obj.x_star + scale * rng.standard_normal((m, obj.dim))
    # a share of points near the kink, still outside the skip band
    near = rng.random(m) < 0.2
    pts[near] = rng.uniform(-10 * scale * 1e-3, 10 * scale * 1e-3, (near.sum(), obj.dim))
    return pts


def check_objective(obj: FiniteSumObjective, points: int = 1000,
                    rng: np.random.Generator | None = None,
                    kink_band: float = 1e-6) -> InvariantReport:
    """Sample-based check of the declared constants and the optimum.

    Finite differences skip points with a kinked coordinate inside
    ``kink_band`` of zero, where the second derivative jumps.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    c = obj.constants
    X = _sample_points(obj, points, rng)
    Y = _sample_points(obj, points, rng)
    kinks = obj.kink_columns

    fd_err = 0.0
    h = 1e-7
    for x in X:
        if len(kinks) and np.any(np.abs(x[kinks]) < max(kink_band, 10 * h)):
            continue
        for i in range(obj.n):
            g = obj.component_grad(i, x)
            fd = np.empty(obj.dim)
            for j in range(obj.dim):
                step = h * max(1.0, abs(x[j]))
                e = np.zeros(obj.dim)
                e[j] = step
                fd[j] = (obj.component_value(i, x + e) - obj.component_value(i, x - e)) / (2 * step)
            scale = max(np.linalg.norm(g), 1e-3 * max(c.L, 1.0) * max(1.0, np.linalg.norm(x)))
            # value magnitudes set the rounding floor of a central difference
            vmag = max(abs(obj.component_value(i, x)), 1.0)
            fd_err = max(fd_err, np.linalg.norm(fd - g) / scale - 1e-16 * vmag / (h * scale))

    opt_norm = float(np.linalg.norm(obj.grad(obj.x_star)))

    a1 = -np.inf
    sm = -np.inf
    pl = None if obj.class_tag != CLASS_F_PL else -np.inf
    for x, y in zip(X, Y):
        G = obj.component_grads(x)
        g = G.mean(axis=0)
        gn = np.linalg.norm(g)
        dev = np.linalg.norm(G - g, axis=1)
        a1 = max(a1, float(np.max(dev - (c.tau * gn + c.nu))))
        Gy = obj.component_grads(y)
        lip = np.linalg.norm(G - Gy, axis=1) - c.L * np.linalg.norm(x - y)
        sm = max(sm, float(np.max(lip)))
        if pl is not None:
            pl = max(pl, float(c.mu * (obj.value(x) - obj.f_star) - 0.5 * gn * gn))
    return InvariantReport(float(fd_err), opt_norm, a1, sm, pl, points)
