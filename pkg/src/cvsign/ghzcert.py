"""Closed-form certification for lossy, noisy CV-GHZ states.

For the permutation-symmetric GHZ family the sign-matrix criterion
collapses onto a 4x4 matrix whose only free parameter is the effective
tail value ``kappa`` of ``diag(Q) = (1,...,1, kappa,...,kappa)``.  Every
routine here is O(1) or O(m) in the mode count, so ``n`` up to ~1e9 is
fine.

Notation
--------
``m``      number of leading modes whose witness entry is ``+1``.
``xi``     probability that a given tail mode ends up in a block with no
           leading mode, under a uniform distribution over the family;
           ``kappa = 1 - 2*xi``.
``s``      ``sinh(r)**2``; ``cosh(2r) = 1 + 2s``.  Threshold algebra is
           done in ``s`` because its coefficients stay free of
           cancellation when ``eta -> 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .combin import EXACT_CAP, binom_ratio, comb0
from .errors import DomainError
from .model import GhzParams, SymmetricCm, noise_of_v

EIG_TIE_TOL = 1e-12
DEGENERACY_TOL = 1e-14
RATIO_TOL = 1e-9
R_MAX = 5.0

CLASS_BLOCKS = {"genuine": 2, "bisep": 2, "trisep": 3, "quadsep": 4}


def class_blocks(cls: str) -> int:
    try:
        return CLASS_BLOCKS[cls]
    except KeyError:
        raise DomainError(f"unknown separability class {cls!r}") from None


# -- kappa -------------------------------------------------------------------


@dataclass(frozen=True)
class KappaResult:
    """Effective tail value of ``diag(Q)`` for a GHZ partition layout.

    ``exact`` holds the rational kappa when ``n <= 1000``.
    """

    kappa: float
    xi: float
    n: int
    m: int
    sizes: tuple[int, ...]
    exact: Fraction | None = None


def _check_nm(n, m):
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if not 1 <= m <= n - 1:
        raise DomainError(f"m must lie in [1, n-1], got m={m}, n={n}")


def _tail_ratio_exact(n, m, k) -> Fraction:
    return Fraction(comb0(n - m - 1, k - 1), math.comb(n, k))


def _tail_ratio_float(n, m, k) -> float:
    return binom_ratio([(n - m - 1, k - 1)], [(n, k)]).value()


def kappa_layout(n: int, m: int, sizes) -> KappaResult:
    """kappa for a uniform distribution over all splits with block sizes ``sizes``.

    A tail mode gets sign ``-1`` exactly when its block holds no leading
    mode, which for a block of size ``k`` has probability
    ``C(n-m-1, k-1) / C(n, k)``; summing over blocks gives ``xi``.
    """
    n, m = int(n), int(m)
    _check_nm(n, m)
    sizes = tuple(sorted((int(s) for s in sizes), reverse=True))
    if len(sizes) < 2 or min(sizes) < 1 or sum(sizes) != n:
        raise DomainError(f"block sizes {sizes} must be >= 2 positive parts summing to {n}")
    if n <= EXACT_CAP:
        xi_q = sum((_tail_ratio_exact(n, m, k) for k in sizes), Fraction(0))
        kap_q = 1 - 2 * xi_q
        return KappaResult(float(kap_q), float(xi_q), n, m, sizes, kap_q)
    xi = math.fsum(_tail_ratio_float(n, m, k) for k in sizes)
    return KappaResult(1.0 - 2.0 * xi, xi, n, m, sizes)


def kappa_bisep(n: int, m: int, n0: int) -> KappaResult:
    """kappa for the bipartition layout ``n0 | n - n0``.

    Symmetric under ``n0 -> n - n0``.
    """
    if not 1 <= n0 <= n - 1:
        raise DomainError(f"n0 must lie in [1, n-1], got {n0}")
    return kappa_layout(n, m, (n0, n - n0))


def kappa_ksep(n: int, m: int, sizes) -> KappaResult:
    """kappa for a three- or four-block layout."""
    if len(tuple(sizes)) not in (3, 4):
        raise DomainError(f"expected 3 or 4 block sizes, got {sizes}")
    return kappa_layout(n, m, sizes)


def _xi_curve(n: int, sizes, m_max: int) -> np.ndarray:
    """``xi(m)`` for ``m = 1..m_max`` via running products (float)."""
    j = np.arange(m_max, dtype=float)
    out = np.zeros(m_max)
    for k in sizes:
        fac = np.maximum((n - k - j) / (n - 1.0 - j), 0.0)
        out += (k / n) * np.cumprod(fac)
    return out


# -- layouts and the choice of m ---------------------------------------------


def candidate_layouts(n: int, blocks: int) -> dict[str, tuple[int, ...]]:
    """The two block-size layouts that bound kappa from above.

    ``"half"`` splits the bulk in two; ``"one"`` peels off singletons.
    """
    if blocks == 2:
        half = (n - n // 2, n // 2)
        one = (n - 1, 1)
    elif blocks == 3:
        half = (n - 1 - (n - 1) // 2, (n - 1) // 2, 1)
        one = (n - 2, 1, 1)
    elif blocks == 4:
        half = (n - 1 - n // 2, n // 2 - 1, 1, 1)
        one = (n - 3, 1, 1, 1)
    else:
        raise DomainError(f"only 2, 3 or 4 blocks supported, got {blocks}")
    return {"half": tuple(sorted(half, reverse=True)), "one": one}


def figure_of_merit(xi, m, n):
    """Onset merit ``xi/(1 - xi) * m(n - m)``; larger certifies more."""
    xi = np.asarray(xi, dtype=float)
    return xi / (1.0 - xi) * m * (n - m)


def default_m_cap(n: int) -> int:
    return int(min(n - 1, max(64, 2 * math.ceil(math.log2(n)))))


@dataclass(frozen=True)
class OptimalParams:
    """Chosen witness size ``m`` and worst-case layout for a class."""

    n: int
    blocks: int
    m: int
    layout: str
    sizes: tuple[int, ...]
    xi: float
    merit: float

    @property
    def kappa(self) -> float:
        return 1.0 - 2.0 * self.xi

    @property
    def n0(self) -> int:
        return min(self.sizes)


@lru_cache(maxsize=4096)
def optimal_params(n: int, cls: str = "genuine", m_cap: int | None = None) -> OptimalParams:
    """Pick ``(m, layout)`` for the GHZ certification of class ``cls``.

    For each ``m`` the worst case over the candidate layouts is the one with
    the smallest ``xi`` (largest kappa).  The merit of ``m = 1`` is then
    compared with the first local maximum of the merit over ``m >= 2``;
    ties go to the smaller ``m``, and layout ties to ``"one"``.
    """
    blocks = class_blocks(cls)
    n = int(n)
    if n < blocks + 1:
        raise DomainError(f"class {cls!r} needs n >= {blocks + 1}, got {n}")
    cap = default_m_cap(n) if m_cap is None else int(min(m_cap, n - 1))
    layouts = candidate_layouts(n, blocks)
    names = ["one", "half"]
    xis = np.vstack([_xi_curve(n, layouts[k], cap) for k in names])
    pick = np.argmin(xis, axis=0)  # index 0 ("one") wins ties
    xi = xis[pick, np.arange(cap)]
    ms = np.arange(1, cap + 1)
    merit = figure_of_merit(xi, ms, n)
    best = 0
    if cap >= 2:
        i = 1
        while i + 1 < cap and merit[i + 1] >= merit[i]:
            i += 1
        if merit[i] > merit[0]:
            best = i
    name = names[int(pick[best])]
    return OptimalParams(n, blocks, best + 1, name, layouts[name], float(xi[best]), float(merit[best]))


def forced_params(n: int, cls: str, m: int, layout: str | None = None) -> OptimalParams:
    """Like :func:`optimal_params` but with ``m`` (and optionally layout) fixed."""
    blocks = class_blocks(cls)
    _check_nm(n, m)
    layouts = candidate_layouts(n, blocks)
    if layout is None:
        res = {k: kappa_layout(n, m, v).xi for k, v in layouts.items()}
        layout = min(("one", "half"), key=lambda k: res[k])
    elif layout not in layouts:
        raise DomainError(f"layout must be 'one' or 'half', got {layout!r}")
    xi = kappa_layout(n, m, layouts[layout]).xi
    return OptimalParams(n, blocks, m, layout, layouts[layout], xi, float(figure_of_merit(xi, m, n)))


# -- reduced 4x4 criterion ---------------------------------------------------


@dataclass(frozen=True)
class ReducedBlock:
    """Symmetric-sector data ``(a', b', c', kappa)``."""

    a_p: float
    b_p: float
    c_p: float
    kappa: float


def reduced_block(cm: SymmetricCm, m: int, kappa: float) -> ReducedBlock:
    n = cm.n
    _check_nm(n, m)
    return ReducedBlock(cm.a + (m - 1) * cm.c, cm.b - (m - 1) * cm.c,
                        math.sqrt(m * (n - m)) * cm.c, float(kappa))


def reduced_matrix(rb: ReducedBlock) -> np.ndarray:
    a, b, c, k = rb.a_p, rb.b_p, rb.c_p, rb.kappa
    return np.array([[a, c, 1.0, 0.0],
                     [c, b, 0.0, k],
                     [1.0, 0.0, b, -c],
                     [0.0, k, -c, a]])


def y_kappa(a_p, b_p, c_p, kappa):
    """Determinant of the reduced matrix in closed form."""
    d = a_p * b_p - c_p * c_p
    return d * d - (1 + kappa * kappa) * a_p * b_p + 2 * kappa * c_p * c_p + kappa * kappa


def kappa_roots(a_p, b_p, c_p) -> tuple[float, float]:
    """Zeros ``(kappa_minus, kappa_plus)`` of ``y`` viewed as a parabola in kappa."""
    d = a_p * b_p - c_p * c_p
    lead = 1.0 - a_p * b_p
    lin = 2.0 * c_p * c_p
    const = d * d - a_p * b_p
    disc = lin * lin - 4 * lead * const
    if disc < 0:
        return math.nan, math.nan
    root = math.sqrt(disc)
    q = -0.5 * (lin + math.copysign(root, lin))
    k1, k2 = q / lead, (const / q if q != 0 else math.nan)
    return tuple(sorted((k1, k2)))


@dataclass(frozen=True)
class QuadCoeffs:
    """``A X^2 + B X + C`` with ``X = cosh(2r)``."""

    A: float
    B: float
    C: float

    def __call__(self, x):
        return (self.A * x + self.B) * x + self.C


def quad_coeffs(n, m, kappa, eta, noise_n) -> QuadCoeffs:
    n1 = (1 - eta) * (2 * noise_n + 1)
    e = eta * eta + n1 * n1
    frac = (1 - kappa) ** 2 * (n - m) * m / (n * n)
    A = 4 * eta * eta * (n1 * n1 - frac)
    B = 4 * eta * n1 * e - 2 * eta * n1 * (1 + kappa * kappa)
    C = (e - 1) * (e - kappa * kappa) + 4 * eta * eta * frac
    return QuadCoeffs(A, B, C)


@dataclass(frozen=True)
class SQuadratic:
    """``y(s) = alpha s^2 + beta s + gamma0`` with ``s = sinh(r)^2``."""

    alpha: float
    beta: float
    gamma0: float

    def __call__(self, s):
        return (self.alpha * s + self.beta) * s + self.gamma0


def s_quadratic(n, m, xi, eta, noise_n) -> SQuadratic:
    """Determinant of the reduced matrix as a quadratic in ``s``.

    Written in terms of ``1 - eta`` and ``xi`` so that no coefficient is a
    difference of nearly equal numbers.
    """
    eps = 1.0 - eta
    p = 4 * eps * noise_n * (1 + eps * noise_n)
    q = 4 * eps * eta * (2 * noise_n + 1)
    k = 4 * xi * (1 - xi)
    w = 64 * xi * xi * (m * (n - m)) * eta * eta / (n * n)
    return SQuadratic(q * q - w, 2 * p * q + k * q - w, p * p + k * p)


@dataclass(frozen=True)
class RInterval:
    """Set of ``r`` in ``(lo, hi)``; empty when ``lo >= hi``."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, r) -> bool:
        return self.lo < r < self.hi

    def contains_interval(self, other: RInterval) -> bool:
        return other.empty or (self.lo <= other.lo and other.hi <= self.hi)


EMPTY = RInterval(math.inf, math.inf)


def _r_of_s(s):
    return math.asinh(math.sqrt(s)) if math.isfinite(s) else math.inf


def _real_roots(a, b, c):
    if a == 0:
        if b == 0:
            return []
        return [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    root = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(root, b))
    if q == 0:
        return [0.0, 0.0]
    return sorted((q / a, c / q))


def _negative_set(quad: SQuadratic):
    """``{s > 0 : y(s) < 0}`` as ``(lo, hi)`` in ``s``, or ``None``."""
    a, b, c = quad.alpha, quad.beta, quad.gamma0
    roots = _real_roots(a, b, c)
    if a < 0:
        hi_root = roots[-1] if roots else -math.inf
        return (max(hi_root, 0.0), math.inf)
    if a > 0:
        if len(roots) < 2 or roots[1] <= 0 or roots[0] == roots[1]:
            return None
        return (max(roots[0], 0.0), roots[1])
    if b < 0:
        return (max(-c / b, 0.0), math.inf)
    if b == 0 and c < 0:
        return (0.0, math.inf)
    return None


def violation_interval(n, m, kappa, eta, noise_n) -> RInterval:
    """Squeezing values where the necessary condition for the class fails.

    ``kappa`` may be a float or a :class:`KappaResult` (whose ``xi`` is
    used directly, avoiding the rounding in ``1 - kappa`` near 1).
    """
    xi = kappa.xi if isinstance(kappa, KappaResult) else (1.0 - float(kappa)) / 2.0
    if not 0.0 < eta <= 1.0 or noise_n < 0:
        raise DomainError(f"invalid channel eta={eta}, N={noise_n}")
    found = _negative_set(s_quadratic(n, m, xi, eta, noise_n))
    if found is None:
        return EMPTY
    return RInterval(_r_of_s(found[0]), _r_of_s(found[1]))


def violation_bounds(n, m, xi, eta, noise_n) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`violation_interval`; NaN marks an empty set."""
    eta = np.asarray(eta, dtype=float)
    noise_n = np.asarray(noise_n, dtype=float)
    eta, noise_n = np.broadcast_arrays(eta, noise_n)
    eps = 1.0 - eta
    p = 4 * eps * noise_n * (1 + eps * noise_n)
    q = 4 * eps * eta * (2 * noise_n + 1)
    k = 4 * xi * (1 - xi)
    w = 64 * xi * xi * (m * (n - m)) * eta * eta / (n * n)
    a, b, c = q * q - w, 2 * p * q + k * q - w, p * p + k * p
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * c
        real = disc >= 0
        qq = -0.5 * (b + np.copysign(np.sqrt(np.where(real, disc, 0.0)), b))
        r1 = np.where(qq != 0, qq / a, 0.0)
        r2 = np.where(qq != 0, c / qq, 0.0)
        rlo, rhi = np.minimum(r1, r2), np.maximum(r1, r2)
        lin = np.where(b != 0, -c / b, np.nan)
    lo = np.full(a.shape, np.nan)
    hi = np.full(a.shape, np.nan)
    neg = a < 0
    lo = np.where(neg, np.maximum(np.where(real, rhi, -np.inf), 0.0), lo)
    hi = np.where(neg, np.inf, hi)
    pos = (a > 0) & real & (rhi > 0) & (rlo < rhi)
    lo = np.where(pos, np.maximum(rlo, 0.0), lo)
    hi = np.where(pos, rhi, hi)
    flat = (a == 0) & (b < 0)
    lo = np.where(flat, np.maximum(lin, 0.0), lo)
    hi = np.where(flat, np.inf, hi)
    const = (a == 0) & (b == 0) & (c < 0)
    lo = np.where(const, 0.0, lo)
    hi = np.where(const, np.inf, hi)
    return np.arcsinh(np.sqrt(lo)), np.arcsinh(np.sqrt(hi))


def bisep_threshold(n, m, n0, eta, noise_n) -> RInterval:
    return violation_interval(n, m, kappa_bisep(n, m, n0), eta, noise_n)


# -- additional condition ----------------------------------------------------


@dataclass(frozen=True)
class AdditionalCondition:
    """Witness-validity check from the minimal eigenvector of the 4x4 matrix.

    ``ratio`` is ``m*beta'*omega'/(alpha'*delta')``; the condition holds
    when ``0 <= ratio < 1`` (negative values down to ``-RATIO_TOL`` count
    as rounding noise around zero).
    """

    holds: bool
    ratio: float
    eigenvalue: float
    eigvec: tuple[float, float, float, float]
    degenerate: bool = False
    tied: bool = False


def _ratio_of(vec, m):
    alpha, beta, delta, omega = vec[0], -vec[1], vec[2], vec[3]
    den = alpha * delta
    if abs(den) < DEGENERACY_TOL:
        return math.nan
    return m * beta * omega / den


def additional_condition(rb: ReducedBlock, m: int, n: int) -> AdditionalCondition:
    _check_nm(n, m)
    w, v = np.linalg.eigh(reduced_matrix(rb))
    scale = max(1.0, abs(w[-1]))
    tied = bool(w[1] - w[0] <= EIG_TIE_TOL * scale)
    vec = v[:, 0] * (1.0 if v[0, 0] >= 0 else -1.0)
    ratio = _ratio_of(vec, m)
    if tied:
        # any unit vector in the eigenspace is an admissible witness
        for theta in np.linspace(0.0, np.pi, 181):
            cand = math.cos(theta) * v[:, 0] + math.sin(theta) * v[:, 1]
            cr = _ratio_of(cand, m)
            if -RATIO_TOL <= cr < 1.0:
                vec, ratio = cand * (1.0 if cand[0] >= 0 else -1.0), cr
                break
    if math.isnan(ratio):
        return AdditionalCondition(False, math.nan, float(w[0]), tuple(vec), degenerate=True, tied=tied)
    return AdditionalCondition(bool(-RATIO_TOL <= ratio < 1.0), float(ratio), float(w[0]), tuple(vec), tied=tied)


def _ghz_reduced_batch(n, m, kappa, eta, noise_n, r):
    """Stacked reduced matrices over an array of ``r`` (or ``eta``)."""
    r = np.asarray(r, dtype=float)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), r.shape)
    n1 = (1 - eta) * (2 * noise_n + 1)
    up, down = np.exp(2 * r), np.exp(-2 * r)
    a = eta * (up + (n - 1) * down) / n + n1
    b = eta * ((n - 1) * up + down) / n + n1
    c = eta * 2 * np.sinh(2 * r) / n
    ap, bp, cp = a + (m - 1) * c, b - (m - 1) * c, math.sqrt(m * (n - m)) * c
    mat = np.zeros(r.shape + (4, 4))
    mat[..., 0, 0] = ap
    mat[..., 1, 1] = bp
    mat[..., 2, 2] = bp
    mat[..., 3, 3] = ap
    mat[..., 0, 1] = mat[..., 1, 0] = cp
    mat[..., 2, 3] = mat[..., 3, 2] = -cp
    mat[..., 0, 2] = mat[..., 2, 0] = 1.0
    mat[..., 1, 3] = mat[..., 3, 1] = kappa
    return mat


def ratio_batch(n, m, kappa, eta, noise_n, r) -> np.ndarray:
    """Additional-condition ratio over an array of ``r``; NaN when degenerate."""
    w, v = np.linalg.eigh(_ghz_reduced_batch(n, m, kappa, eta, noise_n, r))
    vec = v[..., :, 0]
    den = vec[..., 0] * vec[..., 2]
    num = -m * vec[..., 1] * vec[..., 3]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(den) < DEGENERACY_TOL, np.nan, num / den)
    return out


def _cut_batch(n, m, kappa, eta, noise_n, lo, hi, iters):
    """Additional-condition cut for many points at once.

    ``lo``/``hi`` bound the violated interval per entry (``hi`` already
    capped); entries with NaN ``lo`` are skipped.  The crossing of
    ``ratio(r) = 1`` is bracketed and refined by the Illinois variant of
    regula falsi; the update sequence depends only on the inputs, so
    results are deterministic.
    """
    eta = np.broadcast_to(np.asarray(eta, dtype=float), np.shape(lo))
    noise_n = np.broadcast_to(np.asarray(noise_n, dtype=float), np.shape(lo))
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    live = np.isfinite(lo) & (hi > lo)
    out = np.where(live, lo, np.nan)
    if not live.any():
        return out
    e, nn, lo_l, hi_l = eta[live], noise_n[live], lo[live], hi[live]

    def g(t):
        # log(ratio) against log(r) is close to linear, which suits secant steps
        x = ratio_batch(n, m, kappa, e, nn, np.exp(t))
        ok = (x >= -RATIO_TOL) & np.isfinite(x)
        with np.errstate(divide="ignore"):
            return np.where(ok, np.log(np.maximum(x, 1e-300)), 50.0)

    a = np.log(lo_l + np.minimum(1e-3, 0.5 * (hi_l - lo_l)))
    b = np.log(hi_l)
    ga, gb = g(a), g(b)
    g_start, g_end = ga.copy(), gb.copy()
    bracket = (ga < 0) & (gb >= 0)
    side = np.zeros(a.shape, dtype=int)
    for _ in range(iters):
        bracket &= b - a > 1e-10
        if not bracket.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (a * gb - b * ga) / (gb - ga)
        c = np.where(np.isfinite(c) & (c > a) & (c < b), c, 0.5 * (a + b))
        gc = g(c)
        left = gc < 0
        a = np.where(bracket & left, c, a)
        b = np.where(bracket & ~left, c, b)
        # Illinois: halve the stale endpoint value when the same side repeats
        ga = np.where(bracket & left, gc, np.where(bracket & (side == 1), 0.5 * ga, ga))
        gb = np.where(bracket & ~left, gc, np.where(bracket & (side == -1), 0.5 * gb, gb))
        side = np.where(bracket, np.where(left, -1, 1), side)
    a = np.exp(a)
    cut = np.where(g_end < 0, hi_l, np.where(g_start < 0, a, lo_l))
    out[live] = cut
    return out


def additional_cut(n, m, kappa, eta, noise_n, interval: RInterval, iters: int = 40) -> float:
    """Largest ``r`` in ``interval`` up to which the additional condition holds.

    Returns ``interval.lo`` when it fails at once, and ``interval.hi`` (or
    ``R_MAX`` for unbounded intervals) when it never fails.  The ratio
    grows with ``r`` along the interval, so a single bisection locates the
    cut.
    """
    if interval.empty:
        return math.nan
    hi = min(interval.hi, R_MAX)
    cut = _cut_batch(n, m, kappa, [eta], noise_n, [interval.lo], [hi], iters)[0]
    if cut == hi and interval.hi <= R_MAX:
        return interval.hi
    return float(cut)


# -- point certification -----------------------------------------------------


@dataclass(frozen=True)
class PointVerdict:
    certified: bool
    n: int
    cls: str
    m: int
    layout: str
    sizes: tuple[int, ...]
    kappa: float
    interval: RInterval
    in_interval: bool
    additional: AdditionalCondition | None
    lambda_min: float
    boundary_agrees: bool

    @property
    def n0(self) -> int:
        return min(self.sizes)


def certify_point(n, cls="genuine", eta=1.0, noise_n=0.0, r=0.0, m=None, layout=None) -> PointVerdict:
    """Certify one GHZ state: ``r`` must lie in the violated interval and
    the additional condition must hold there.
    """
    params = GhzParams(int(n), float(r), float(eta), float(noise_n))
    opt = optimal_params(n, cls) if m is None else forced_params(n, cls, int(m), layout)
    kap = 1.0 - 2.0 * opt.xi
    interval = violation_interval(n, opt.m, KappaResult(kap, opt.xi, n, opt.m, opt.sizes), eta, noise_n)
    inside = r in interval
    rb = reduced_block(params.cm(), opt.m, kap)
    add = additional_condition(rb, opt.m, n)
    # the determinant route and the eigenvalue-sign route should agree
    agrees = (add.eigenvalue < 0) == inside or abs(add.eigenvalue) < 1e-6
    return PointVerdict(bool(inside and add.holds), n, cls, opt.m, opt.layout, opt.sizes, kap,
                        interval, inside, add, add.eigenvalue, bool(agrees))


# -- region sweeps -----------------------------------------------------------


@dataclass
class SweepResult:
    """Per-grid-point violated interval and additional-condition cut.

    Arrays are shaped ``(len(v), len(eta))``.  The certified set at a point
    is ``(r_low, min(r_high, r_cut))``.
    """

    n: int
    m: int
    layout: str
    kappa: float
    eta: np.ndarray
    v: np.ndarray
    r_low: np.ndarray
    r_high: np.ndarray
    r_cut: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def certified_high(self) -> np.ndarray:
        return np.fmin(self.r_high, self.r_cut)

    @property
    def certified(self) -> np.ndarray:
        return self.certified_high > self.r_low


def _sweep_chunk(n, m, kappa, xi, eta, noise_n, iters):
    lo, hi = violation_bounds(n, m, xi, eta, noise_n)
    cut = _cut_batch(n, m, kappa, eta, noise_n, lo, np.fmin(hi, R_MAX), iters)
    return lo, hi, cut


def sweep_region(n, etas, vs, cls="genuine", m=None, layout=None, threads=1, iters=40) -> SweepResult:
    """Evaluate the certified set over an ``(eta, v)`` grid.

    Blocks of rows (fixed ``v``) run in parallel; the result does not
    depend on the thread count.
    """
    etas = np.asarray(etas, dtype=float)
    vs = np.asarray(vs, dtype=float)
    opt = optimal_params(n, cls) if m is None else forced_params(n, cls, int(m), layout)
    kappa = 1.0 - 2.0 * opt.xi
    noise = np.array([noise_of_v(float(v)) for v in vs])
    eta_g, noise_g = np.meshgrid(etas, noise)
    chunks = np.array_split(np.arange(len(vs)), max(1, min(len(vs), 4 * threads)))
    jobs = [(n, opt.m, kappa, opt.xi, eta_g[c].ravel(), noise_g[c].ravel(), iters) for c in chunks if len(c)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: _sweep_chunk(*j), jobs))
    else:
        parts = [_sweep_chunk(*j) for j in jobs]
    shape = (len(vs), len(etas))
    lo, hi, cut = (np.concatenate([p[i] for p in parts]).reshape(shape) for i in range(3))
    return SweepResult(n, opt.m, opt.layout, kappa, etas, vs, lo, hi, cut)


# -- producibility -----------------------------------------------------------


@dataclass(frozen=True)
class ProducibilityResult:
    n: int
    J: int
    m: int | None
    n0: int | None
    xi: float
    interval: RInterval

    @property
    def kappa(self) -> float:
        return 1.0 - 2.0 * self.xi


@lru_cache(maxsize=4096)
def producibility_params(n: int, J: int, m_cap: int | None = None) -> tuple[int, float]:
    """``(m, xi)`` maximizing the onset merit for the layout ``J | n - J``."""
    n, J = int(n), int(J)
    if not (n + 1) // 2 <= J <= n - 1:
        raise DomainError(f"J must lie in [ceil(n/2), n-1], got J={J}, n={n}")
    cap = default_m_cap(n) if m_cap is None else int(min(m_cap, n - 1))
    xi = _xi_curve(n, (J, n - J), cap)
    merit = figure_of_merit(xi, np.arange(1, cap + 1), n)
    best = int(np.argmax(merit))
    return best + 1, float(xi[best])


def producibility_threshold(n, J, eta, noise_n, m=None) -> ProducibilityResult:
    """Violated r-interval for the J-producibility necessary condition.

    Only the layout ``J | n - J`` matters for the symmetric GHZ state.
    ``J = n`` imposes nothing and returns an empty interval.
    """
    n, J = int(n), int(J)
    if J == n:
        return ProducibilityResult(n, J, None, None, 0.0, EMPTY)
    if m is None:
        m, xi = producibility_params(n, J)
    else:
        xi = kappa_bisep(n, int(m), n - J).xi
    iv = violation_interval(n, m, KappaResult(1 - 2 * xi, xi, n, m, (J, n - J)), eta, noise_n)
    return ProducibilityResult(n, J, int(m), n - J, xi, iv)


# -- table generation --------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    m: int
    layout: str
    n_start: int
    n_end: int


def _state(n, cls):
    p = optimal_params(n, cls)
    return p.m, p.layout


def table_generate(cls: str, n_lo: int, n_hi: int) -> list[TableRow]:
    """Maximal n-ranges of constant ``(m, layout)`` over ``[n_lo, n_hi]``.

    Galloping plus bisection, assuming a state never recurs once left;
    each boundary is re-checked at ``+-1``.
    """
    blocks = class_blocks(cls)
    n_lo = max(int(n_lo), blocks + 1)
    rows = []
    n = n_lo
    while n <= n_hi:
        s = _state(n, cls)
        step, last = 1, n
        while True:
            probe = min(n + step, n_hi)
            if _state(probe, cls) != s:
                lo, hi = last, probe
                break
            last = probe
            if probe == n_hi:
                lo = hi = None
                break
            step *= 2
        if lo is None:
            end = n_hi
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _state(mid, cls) == s:
                    lo = mid
                else:
                    hi = mid
            end = lo
            if _state(end, cls) != s or _state(end + 1, cls) == s:
                raise RuntimeError(f"boundary verification failed near n={end}")
        rows.append(TableRow(s[0], s[1], n, end))
        n = end + 1
    return rows


# published reference rows: m -> ((half start, end) | None, (one start, end) | None)
REFERENCE_TABLES = {
    "genuine": {
        1: (None, (3, 9)), 3: (None, (10, 16)), 4: ((17, 18), (19, 32)),
        5: ((33, 37), (38, 63)), 6: ((64, 73), (74, 124)), 7: ((125, 142), (143, 244)),
        8: ((245, 275), (276, 482)), 9: ((483, 538), (539, 957)),
        10: ((958, 1058), (1059, 1906)), 11: ((1907, 2091), (2092, 3809)),
        12: ((3810, 4149), (4150, 7627)), 13: ((7628, 8256), (8257, 15291)),
        14: ((15292, 16460), (16461, 30674)), 15: ((30675, 32857), (32858, 61544)),
        16: ((51545, 65639), (65640, 123481)), 17: ((123482, 131190), (131191, 247715)),
        18: ((247716, 262278), (262279, 496848)), 19: ((496849, 524439), (524440, 996318)),
        20: ((996319, 1048745), (1048746, 1997477)),
        21: ((1997478, 2097340), (2097341, 4003864)),
        22: ((4003865, 4194512), (4194513, 8024117)),
        23: ((8024118, 8388838), (8388839, 16078419)),
        24: ((16078420, 16777468), (16777469, 32212527)),
        25: ((32212528, 33554707), (33554708, 64528051)),
        26: ((64528052, 67109163), (67109164, 129247012)),
        27: ((129247013, 129247013), None),
    },
    "trisep": {
        1: (None, (4, 10)), 3: (None, (11, 11)), 4: ((12, 15), (16, 24)),
        5: ((25, 33), (34, 50)), 6: ((51, 68), (69, 102)), 7: ((103, 136), (137, 207)),
        8: ((208, 269), (270, 419)), 9: ((420, 531), (532, 847)), 10: ((848, 1029), None),
    },
    "quadsep": {
        1: (None, (5, 10)), 4: (None, (11, 17)), 5: ((18, 28), (29, 38)),
        6: ((39, 63), (64, 81)), 7: ((82, 130), (131, 171)), 8: ((172, 262), (263, 357)),
        9: ((358, 523), (524, 739)), 10: ((740, 1029), None),
    },
}


def reference_rows(cls: str) -> list[TableRow]:
    table = REFERENCE_TABLES["genuine" if cls == "bisep" else cls]
    out = []
    for m, (half, one) in sorted(table.items()):
        if half:
            out.append(TableRow(m, "half", *half))
        if one:
            out.append(TableRow(m, "one", *one))
    return out


@dataclass(frozen=True)
class RowDiff:
    m: int
    layout: str
    computed: tuple[int, int] | None
    reference: tuple[int, int] | None

    @property
    def delta(self) -> tuple[int, int] | None:
        if self.computed is None or self.reference is None:
            return None
        return (self.computed[0] - self.reference[0], self.computed[1] - self.reference[1])

    def within(self, tol: int = 1) -> bool:
        d = self.delta
        return d is not None and abs(d[0]) <= tol and abs(d[1]) <= tol


def diff_tables(computed: list[TableRow], reference: list[TableRow], n_lo: int, n_hi: int) -> list[RowDiff]:
    """Align computed and reference rows by ``(m, layout)`` inside ``[n_lo, n_hi]``.

    Reference rows are clipped to the window; the final computed row is
    clipped at ``n_hi`` too, so partial rows compare fairly.
    """
    comp = {(r.m, r.layout): (r.n_start, r.n_end) for r in computed}
    ref = {}
    for r in reference:
        lo, hi = max(r.n_start, n_lo), min(r.n_end, n_hi)
        if lo <= hi:
            ref[(r.m, r.layout)] = (lo, hi)
    keys = sorted(set(comp) | set(ref), key=lambda k: (k[0], k[1] != "half"))
    return [RowDiff(k[0], k[1], comp.get(k), ref.get(k)) for k in keys]
