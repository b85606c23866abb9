"""Brute-force cross-checks for the closed-form paths.

Everything here favours transparency over speed: exact rationals for
combinatorial quantities, dense eigensolves for spectra, explicit
enumeration of partitions.  Each check yields :class:`OracleReport`
records that serialize to one JSON object per line.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from .combin import PartitionFamily
from .errors import CapacityError, DomainError
from .ghzcert import kappa_bisep, kappa_layout, reduced_block, reduced_matrix, y_kappa
from .model import SymmetricCm, apply_loss_noise, expand_full, pure_ghz_cm, symplectic_form
from .signcrit import (OptConfig, _Objective, certify, generate_sign_matrices,
                       sign_matrix_of)

COUNT_CAP = 12
DENSE_CAP = 512


@dataclass(frozen=True)
class OracleReport:
    """One closed-form versus brute-force comparison."""

    name: str
    closed_form: float | str
    brute_force: float | str
    abs_dev: float
    rel_dev: float
    tol: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def report(name, closed, brute, tol, exact=False) -> OracleReport:
    if exact:
        ok = closed == brute
        dev = float(abs(Fraction(closed) - Fraction(brute))) if not isinstance(closed, str) else float(not ok)
        return OracleReport(name, str(closed), str(brute), dev, dev, 0.0, bool(ok))
    closed, brute = float(closed), float(brute)
    dev = abs(closed - brute)
    rel = dev / max(abs(closed), abs(brute), 1e-300)
    return OracleReport(name, closed, brute, dev, rel, tol, bool(dev <= tol))


# -- kappa by counting -------------------------------------------------------


@dataclass(frozen=True)
class KappaCount:
    """Column averages of the sign rows under uniform ``q``."""

    kappa: Fraction
    columns: tuple[Fraction, ...]
    tau: Fraction
    uniform_tail: bool
    head_all_ones: bool


def _sizes_family(n, sizes):
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) == 2:
        return PartitionFamily.fixed_size_bipartition(n, min(sizes))
    return PartitionFamily.k_separable_sizes(n, sizes)


def kappa_by_counting(n: int, m: int, sizes, tau=None) -> KappaCount:
    """Average the sign rows of ``b = (1 x m, -tau x (n-m))`` over all splits.

    The default ``tau = 1 / (2(n-m))`` keeps every block containing one of
    the first ``m`` modes positive.  Block sums are evaluated exactly.
    """
    if n > COUNT_CAP:
        raise CapacityError(f"counting oracle is capped at n={COUNT_CAP}")
    if not 1 <= m <= n - 1:
        raise DomainError(f"m must be in [1, n-1], got {m}")
    tau = Fraction(1, 2 * (n - m)) if tau is None else Fraction(tau)
    b = [Fraction(1)] * m + [-tau] * (n - m)
    parts = _sizes_family(n, sizes).partitions()
    totals = [Fraction(0)] * n
    for p in parts:
        for blk in p.blocks:
            s = sum(b[i] for i in blk)
            if s == 0:
                raise DomainError(f"block sum vanishes at tau={tau}")
            for i in blk:
                totals[i] += 1 if s > 0 else -1
    cols = tuple(t / len(parts) for t in totals)
    tail = cols[m:]
    return KappaCount(sum(tail) / len(tail), cols, tau, len(set(tail)) == 1,
                      all(c == 1 for c in cols[:m]))


def tau_sweep(n: int, m: int, sizes, taus) -> list[tuple[Fraction, Fraction, bool]]:
    """``(tau, kappa, (n-m) tau < 1)`` across a range of ``tau``."""
    out = []
    for t in taus:
        t = Fraction(t)
        try:
            k = kappa_by_counting(n, m, sizes, t).kappa
        except DomainError:
            continue
        out.append((t, k, (n - m) * t < 1))
    return out


def layouts_with_blocks(n: int, k: int):
    """All size tuples (descending) with ``k`` positive parts summing to ``n``."""
    def rec(rem, parts, top):
        if len(parts) == k:
            if rem == 0:
                yield tuple(parts)
            return
        for s in range(min(top, rem - (k - len(parts) - 1)), 0, -1):
            yield from rec(rem - s, parts + [s], s)
    return list(rec(n, [], n))


# -- dense spectra -----------------------------------------------------------


def full_matrix_min_eig(n: int, m: int, kappa: float, cm: SymmetricCm, kappas=None) -> float:
    """``lambda_min`` of ``[[gamma_x, Q], [Q, gamma_p]]``, ``Q = diag(1 x m, kappa x (n-m))``."""
    if n > DENSE_CAP:
        raise CapacityError(f"dense eigensolve is capped at n={DENSE_CAP}")
    gx, gp = cm.blocks()
    q = np.ones(n)
    q[m:] = kappa if kappas is None else np.asarray(kappas, dtype=float)
    h = np.block([[gx, np.diag(q)], [np.diag(q), gp]])
    return float(np.linalg.eigvalsh(h)[0])


def ghz_cm_by_symplectic(n: int, r: float, eta: float = 1.0, noise_n: float = 0.0) -> np.ndarray:
    """GHZ CM from squeezed vacua mixed on an orthogonal network.

    One mode is stretched in ``x`` and the rest squeezed in ``x``; an
    orthogonal ``O`` with uniform first column spreads them, and the
    channel acts as ``eta*gamma + (1-eta)(2N+1) I``.
    """
    a = np.eye(n)
    a[:, 0] = 1.0
    o, _ = np.linalg.qr(a)
    o[:, 0] = np.abs(o[:, 0])
    sx = np.full(n, math.exp(-2 * r))
    sx[0] = math.exp(2 * r)
    gx = o @ np.diag(sx) @ o.T
    gp = o @ np.diag(1.0 / sx) @ o.T
    g = np.block([[gx, np.zeros((n, n))], [np.zeros((n, n)), gp]])
    return eta * g + (1 - eta) * (2 * noise_n + 1) * np.eye(2 * n)


# -- uniform q ---------------------------------------------------------------


def ghz_orbit_signs(n: int, m: int, n0: int, parts=None) -> np.ndarray:
    """Sign matrices of every mode permutation of ``b = (1 x m, -tau x (n-m))``."""
    parts = parts or PartitionFamily.fixed_size_bipartition(n, n0).partitions()
    tau = 1.0 / (2 * (n - m))
    out = []
    for pos in itertools.combinations(range(n), m):
        b = np.full(n, -tau)
        b[list(pos)] = 1.0
        out.append(sign_matrix_of(b, parts))
    return np.array(out)


def uniform_q_check(n, m, n0, gamma, n_random=1000, seed=0) -> tuple[float, float]:
    """``F`` at uniform ``q`` and the best ``F`` over random ``q``.

    ``F(q)`` is minimized over the permutation orbit of the sign rows, so it
    is invariant under mode permutations of a symmetric CM.
    """
    parts = PartitionFamily.fixed_size_bipartition(n, n0).partitions()
    obj = _Objective(gamma, ghz_orbit_signs(n, m, n0, parts))
    rng = np.random.default_rng(seed)
    p = len(parts)
    f_uni = float(obj.values(np.full(p, 1.0 / p))[0][0])
    qs = np.vstack([rng.dirichlet(np.full(p, a), size=n_random // 4)
                    for a in (0.2, 0.5, 1.0, 3.0)])
    return f_uni, float(obj.values(qs)[0].max())


# -- soundness ---------------------------------------------------------------


def random_block_cm(size: int, rng) -> np.ndarray:
    """Random physical CM of ``size`` modes: thermal (half the time pure) under a random symplectic."""
    om = symplectic_form(size)
    h = rng.normal(scale=0.5, size=(2 * size, 2 * size))
    s = expm(om @ (h + h.T) / 2)
    nu = 1.0 + rng.exponential(0.3, size=size) * (rng.random() < 0.5)
    return s @ np.diag(np.concatenate([nu, nu])) @ s.T


def block_product_cm(partition, rng) -> np.ndarray:
    n = partition.n
    g = np.zeros((2 * n, 2 * n))
    for blk in partition.blocks:
        idx = np.array(blk)
        both = np.concatenate([idx, idx + n])
        g[np.ix_(both, both)] = random_block_cm(len(blk), rng)
    return g


def separable_mixture(family: PartitionFamily, rng, terms: int = 4) -> np.ndarray:
    """CM of a random convex mixture of block-product states over ``family``."""
    parts = family.partitions()
    w = rng.dirichlet(np.ones(terms))
    picks = rng.integers(len(parts), size=terms)
    return sum(wi * block_product_cm(parts[k], rng) for wi, k in zip(w, picks))


def mixture_soundness_trial(family: PartitionFamily, trials: int = 100, seed: int = 0,
                            config: OptConfig = OptConfig(n_starts=400, polish_iters=60)):
    """Certify ``trials`` constructed mixtures; each report passes iff not certified."""
    if family.n > 4:
        raise CapacityError("soundness trials are capped at n=4")
    rng = np.random.default_rng(seed)
    signs = generate_sign_matrices(family, config.n_samples, config.seed)
    out = []
    for i in range(trials):
        v = certify(separable_mixture(family, rng), family, config, signs)
        out.append(OracleReport(f"soundness/{family.describe()}/{i}", "not certified",
                                "certified" if v.certified else "not certified",
                                max(0.0, -v.best_value), 0.0, config.tol, not v.certified))
    return out


# -- three-mode sign set -----------------------------------------------------

# rows in the order 1|23, 2|13, 12|3 (1-based modes)
REFERENCE_T3 = {
    "T1": ((1, -1, -1), (1, -1, 1), (1, 1, -1)),
    "T2": ((1, -1, -1), (1, -1, 1), (1, 1, 1)),
    "T3": ((1, 1, 1), (1, 1, 1), (1, 1, -1)),
}
_REFERENCE_ROWS = (((0,), (1, 2)), ((1,), (0, 2)), ((0, 1), (2,)))


def _rows_to(parts, rows_by_blocks, t):
    """Reorder rows of ``t`` (keyed by ``rows_by_blocks``) to match ``parts``."""
    key = {frozenset(map(frozenset, b)): i for i, b in enumerate(rows_by_blocks)}
    return np.array([t[key[frozenset(map(frozenset, p.blocks))]] for p in parts], dtype=np.int8)


def _permuted(signs, perm):
    """Image of a sign set under the mode relabelling ``s -> perm[s]``."""
    parts = signs.partitions
    index = {frozenset(map(frozenset, p.blocks)): i for i, p in enumerate(parts)}
    out = set()
    for t in signs.matrices:
        new = np.empty_like(t)
        for i, p in enumerate(parts):
            img = frozenset(frozenset(perm[s] for s in b) for b in p.blocks)
            new[index[img], list(perm)] = t[i]
        new = new if new[0, 0] > 0 else -new
        out.add(new.tobytes())
    return out


def three_mode_signset_check(seed: int = 0) -> list[OracleReport]:
    signs = generate_sign_matrices(PartitionFamily.all_bipartitions(3), seed=seed)
    out = [report("signset3/count", 12, len(signs), 0, exact=True)]
    for name, t in REFERENCE_T3.items():
        mapped = _rows_to(signs.partitions, _REFERENCE_ROWS, t)
        out.append(report(f"signset3/contains_{name}", "True", str(signs.contains(mapped)), 0, exact=True))
    base = {t.tobytes() for t in signs.matrices}
    closed = all(_permuted(signs, perm) == base for perm in itertools.permutations(range(3)))
    out.append(report("signset3/permutation_closed", "True", str(closed), 0, exact=True))
    return out


# -- suites ------------------------------------------------------------------


def kappa_small_suite(n_max: int = 12, ksep_n_max: int = 8) -> list[OracleReport]:
    out = []
    for n in range(2, n_max + 1):
        for m in range(1, n):
            for n0 in range(1, n // 2 + 1):
                k = kappa_bisep(n, m, n0).exact
                out.append(report(f"kappa/bisep/n={n},m={m},n0={n0}", k,
                                  kappa_by_counting(n, m, (n - n0, n0)).kappa, 0, exact=True))
    for n in range(3, ksep_n_max + 1):
        for blocks in (3, 4):
            for sizes in layouts_with_blocks(n, blocks):
                for m in range(1, n):
                    k = kappa_layout(n, m, sizes).exact
                    out.append(report(f"kappa/ksep/n={n},m={m},sizes={sizes}", k,
                                      kappa_by_counting(n, m, sizes).kappa, 0, exact=True))
    return out


def reduce4_suite(seed: int = 0, points: int = 10, n_range=range(3, 13)) -> list[OracleReport]:
    rng = np.random.default_rng(seed)
    out = []
    for n in n_range:
        for _ in range(points):
            m = int(rng.integers(1, n))
            kappa = float(rng.uniform(-1, 1))
            r, eta, noise = rng.uniform(0, 2), rng.uniform(0.5, 1), rng.uniform(0, 0.5)
            cm = apply_loss_noise(pure_ghz_cm(n, r), eta, noise)
            rb = reduced_block(cm, m, kappa)
            small = np.linalg.eigvalsh(reduced_matrix(rb))[0]
            full = full_matrix_min_eig(n, m, kappa, cm)
            out.append(report(f"reduce4/n={n},m={m}", small, full, 1e-8))
            det = np.linalg.det(reduced_matrix(rb))
            y = y_kappa(rb.a_p, rb.b_p, rb.c_p, kappa)
            out.append(report(f"reduce4/det/n={n},m={m}", y, det, 1e-8 * max(1.0, abs(y))))
    return out


def soundness_suite(seed: int = 0, trials: int = 100) -> list[OracleReport]:
    fam = PartitionFamily.all_bipartitions(3)
    out = mixture_soundness_trial(fam, trials, seed)
    v = certify(expand_full(pure_ghz_cm(3, 1.0)), fam)
    out.append(OracleReport("soundness/control_ghz3", "certified",
                            "certified" if v.certified else "not certified",
                            abs(v.best_value), 0.0, 1e-9, v.certified))
    return out


SUITES = {
    "signset3": three_mode_signset_check,
    "kappa-small": kappa_small_suite,
    "reduce4": reduce4_suite,
    "soundness": soundness_suite,
}


def run_suite(name: str) -> list[OracleReport]:
    if name not in SUITES:
        raise DomainError(f"unknown oracle suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name]()
