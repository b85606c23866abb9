"""Generic sign-matrix criterion for small mode counts.

For a family of partitions, every state that is a mixture of products
over the family satisfies

.. math::
    \\gamma + \\sigma_2 \\otimes \\mathrm{diag}(q T) \\succeq 0

for every probability vector ``q`` over the family and every admissible
sign matrix ``T``.  A CM is certified outside the family when
``max_q min_T lambda_min < 0``.  ``lambda_min`` is concave in ``q`` for
each ``T`` and a minimum of concave functions is concave, so the outer
maximization is a concave program; it is solved with multistart sampling,
a projected supergradient polish and a cutting-plane upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .combin import Partition, PartitionFamily
from .errors import DomainError, ValidationError
from .model import check_full_cm

CERT_TOL = 1e-9
ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True)
class WitnessVectors:
    """Coefficient vectors of the two quadratures ``u = h.xi`` and ``v = g.xi``."""

    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if h.shape != g.shape or h.ndim != 1 or h.size % 2:
            raise ValidationError("h and g must be equal-length vectors of even length")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.h.size // 2

    @property
    def b(self) -> np.ndarray:
        """``b_s = h_s g_{s+n} - h_{s+n} g_s``."""
        n = self.n
        return self.h[:n] * self.g[n:] - self.h[n:] * self.g[:n]


def uncertainty_bound(w: WitnessVectors, p: Partition) -> float:
    """``sum_j |sum_{s in I_j} b_s|`` for the blocks ``I_j`` of ``p``."""
    if p.n != w.n:
        raise ValidationError(f"partition has {p.n} modes, witness has {w.n}")
    b = w.b
    return float(sum(abs(math.fsum(b[list(blk)])) for blk in p.blocks))


# -- sign matrices -----------------------------------------------------------


@dataclass(frozen=True)
class SignMatrixSet:
    """Deduplicated canonical sign matrices of a family.

    ``matrices`` has shape ``(count, len(partitions), n)``; row ``i`` of each
    matrix belongs to ``partitions[i]``.  Canonical form: the whole matrix
    is negated when its ``[0, 0]`` entry is ``-1`` (``T`` and ``-T`` give
    complex-conjugate criterion matrices, hence the same spectrum).
    """

    family: PartitionFamily
    partitions: tuple[Partition, ...]
    matrices: np.ndarray
    samples: int
    resampled: int

    def __len__(self):
        return len(self.matrices)

    def contains(self, t) -> bool:
        t = canonicalize(np.asarray(t, dtype=np.int8))
        return bool(np.any(np.all(self.matrices == t, axis=(1, 2))))


def canonicalize(t: np.ndarray) -> np.ndarray:
    """Negate ``t`` (or each matrix of a stack) whose ``[0, 0]`` entry is ``-1``."""
    t = np.asarray(t, dtype=np.int8)
    if t.ndim == 2:
        return t if t[0, 0] > 0 else -t
    flip = np.where(t[:, 0, 0] > 0, 1, -1).astype(np.int8)
    return t * flip[:, None, None]


def _block_tables(parts, n):
    """Block membership matrix and per-row block index of every mode."""
    blocks = [blk for p in parts for blk in p.blocks]
    member = np.zeros((len(blocks), n))
    index = np.zeros((len(parts), n), dtype=int)
    k = 0
    for i, p in enumerate(parts):
        for blk in p.blocks:
            member[k, list(blk)] = 1.0
            index[i, list(blk)] = k
            k += 1
    return member, index


def sign_matrix_of(b, parts) -> np.ndarray:
    """``T(b)``: entry ``(i, s)`` is the sign of the block sum containing ``s``."""
    b = np.asarray(b, dtype=float)
    member, index = _block_tables(parts, b.size)
    sums = member @ b
    if np.any(np.abs(sums) <= ZERO_SUM_TOL * max(1.0, np.max(np.abs(b)))):
        raise DomainError("a block sum vanishes; the sign matrix is undefined")
    return np.sign(sums)[index].astype(np.int8)


def _draw(rng, count, n):
    mag = np.exp(rng.uniform(-4.0, 4.0, size=(count, n)))
    return rng.normal(size=(count, n)) * mag


def generate_sign_matrices(family: PartitionFamily, n_samples: int = 100_000, seed: int = 0,
                           include_trivial: bool = False, batch: int = 20_000) -> SignMatrixSet:
    """Sample ``b`` vectors and collect the distinct canonical ``T(b)``.

    Every sign orthant is seeded once; the remaining draws mix normal signs
    with log-uniform magnitudes so that both balanced and lopsided block
    sums occur.  Draws producing a vanishing block sum are replaced.

    The all-ones matrix (reached for ``b > 0``) reduces the criterion to
    ``gamma + i*Omega >= 0``, which every physical state meets; it is left
    out unless ``include_trivial`` is set.
    """
    parts = family.partitions()
    n = family.n
    member, index = _block_tables(parts, n)
    rng = np.random.default_rng(seed)
    orthants = np.array(np.meshgrid(*[[-1.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    seeds = orthants * np.exp(rng.uniform(-4.0, 4.0, size=orthants.shape))
    found = set()
    done, resampled = 0, 0
    pending = seeds
    while done < n_samples or len(pending):
        if not len(pending):
            pending = _draw(rng, min(batch, n_samples - done), n)
        sums = pending @ member.T
        scale = np.max(np.abs(pending), axis=1, keepdims=True)
        bad = np.any(np.abs(sums) <= ZERO_SUM_TOL * scale, axis=1)
        if bad.any():
            resampled += int(bad.sum())
            pending = np.vstack([pending[~bad], _draw(rng, int(bad.sum()), n)])
            continue
        t = np.sign(sums)[:, index].astype(np.int8)
        t = canonicalize(t)
        flat = np.unique(t.reshape(len(t), -1), axis=0)
        found.update(map(bytes, flat.view(np.uint8)))
        done += len(pending)
        pending = pending[:0]
    shape = (len(parts), n)
    mats = [np.frombuffer(x, dtype=np.int8).reshape(shape) for x in found]
    if not include_trivial:
        mats = [t for t in mats if not np.all(t == 1)]
    mats = np.array(sorted(mats, key=lambda t: tuple(-t.ravel())), dtype=np.int8).reshape((-1,) + shape)
    return SignMatrixSet(family, parts, mats, done, resampled)


# -- criterion matrices ------------------------------------------------------


def criterion_matrix(gamma, v) -> np.ndarray:
    """Hermitian ``gamma + sigma_2 (x) diag(v)``."""
    g = check_full_cm(gamma)
    n = g.shape[0] // 2
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValidationError(f"V must have length {n}, got shape {v.shape}")
    out = g.astype(complex)
    idx = np.arange(n)
    out[idx, idx + n] += -1j * v
    out[idx + n, idx] += 1j * v
    return out


def criterion_matrix_real(gamma_x, gamma_p, v) -> np.ndarray:
    """Real form ``[[gamma_x, Q], [Q, gamma_p]]`` for block-diagonal CMs."""
    gx = np.asarray(gamma_x, dtype=float)
    gp = np.asarray(gamma_p, dtype=float)
    q = np.diag(np.asarray(v, dtype=float))
    return np.block([[gx, q], [q, gp]])


def _is_block_diagonal(g):
    n = g.shape[0] // 2
    return not np.any(g[:n, n:]) and not np.any(g[n:, :n])


class _Objective:
    """``F(q) = min_T lambda_min`` with a supergradient, batched over ``T``."""

    def __init__(self, gamma, mats):
        g = check_full_cm(gamma)
        self.n = g.shape[0] // 2
        self.mats = np.asarray(mats, dtype=float)
        self.real = _is_block_diagonal(g)
        self.gamma = g if self.real else g.astype(complex)
        self.evals = 0

    def _stack(self, v):
        n = self.n
        k = v.shape[0]
        h = np.broadcast_to(self.gamma, (k,) + self.gamma.shape).copy()
        idx = np.arange(n)
        if self.real:
            h[:, idx, idx + n] += v
            h[:, idx + n, idx] += v
        else:
            h[:, idx, idx + n] += -1j * v
            h[:, idx + n, idx] += 1j * v
        return h

    def values(self, qs):
        """``F`` at each row of ``qs``; returns (values, argmin T index)."""
        qs = np.atleast_2d(qs)
        v = np.einsum("qp,kps->qks", qs, self.mats).reshape(-1, self.n)
        lam = np.linalg.eigvalsh(self._stack(v))[:, 0].reshape(len(qs), len(self.mats))
        self.evals += len(qs)
        arg = np.argmin(lam, axis=1)
        return lam[np.arange(len(qs)), arg], arg

    def value_grad(self, q):
        val, arg = self.values(q[None, :])
        t = self.mats[arg[0]]
        v = q @ t
        w, u = np.linalg.eigh(self._stack(v[None, :])[0])
        vec = u[:, 0]
        n = self.n
        if self.real:
            dv = 2.0 * vec[:n] * vec[n:]
        else:
            dv = 2.0 * np.imag(np.conj(vec[:n]) * vec[n:])
        return float(val[0]), t @ dv, int(arg[0]), vec


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1.0), 0.0)


@dataclass(frozen=True)
class OptConfig:
    n_starts: int = 2000
    polish_iters: int = 200
    cut_iters: int = 200
    gap_tol: float = 1e-9
    tol: float = CERT_TOL
    seed: int = 0
    n_samples: int = 100_000
    early_stop: bool = True


@dataclass(frozen=True)
class CertVerdict:
    """Outcome of the max-min optimization.

    ``best_value`` is the largest ``F(q)`` found (a lower bound on the
    maximum) and ``upper_bound`` a cutting-plane bound from above.
    ``certified`` requires ``upper_bound < -tol``, so it never rests on a
    sampled maximum alone; ``converged`` reports whether the two bounds
    settled the sign of the maximum.
    """

    certified: bool
    best_value: float
    upper_bound: float
    converged: bool
    q: np.ndarray
    t: np.ndarray
    eigvec: np.ndarray
    partitions: tuple[Partition, ...]
    evaluations: int


def _model_upper(cuts, p):
    """Maximize the cutting-plane model over the simplex (an LP)."""
    # maximize t s.t. t <= F_i + g_i.(q - q_i), q in simplex
    a_ub = np.array([np.append(-g, 1.0) for _, _, g in cuts])
    b_ub = np.array([f - g @ q for q, f, g in cuts])
    res = linprog(np.append(np.zeros(p), -1.0), A_ub=a_ub, b_ub=b_ub,
                  A_eq=np.append(np.ones(p), 0.0)[None, :], b_eq=[1.0],
                  bounds=[(0, None)] * p + [(None, None)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return None, None
    q = np.clip(res.x[:p], 0.0, None)
    return -res.fun, q / q.sum()


def _level_point(cuts, center, level):
    """Closest point to ``center`` where the model reaches ``level``."""
    g = np.array([c[2] for c in cuts])
    rhs = np.array([level - f + gi @ q for (q, f, _), gi in zip(cuts, g)])
    res = minimize(lambda x: 0.5 * np.sum((x - center) ** 2), center, jac=lambda x: x - center,
                   method="SLSQP", bounds=[(0.0, 1.0)] * center.size,
                   constraints=[{"type": "ineq", "fun": lambda x: g @ x - rhs, "jac": lambda x: g},
                                {"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                 "jac": lambda x: np.ones_like(x)}],
                   options={"maxiter": 200, "ftol": 1e-15})
    if not res.success:
        return None
    q = np.clip(res.x, 0.0, None)
    return q / q.sum()


def _cutting_plane(obj, cuts, best, tol, gap_tol, iters, early_stop=True, level_frac=0.3):
    """Level bundle method; returns (best value, best q, upper bound).

    The upper bound is the maximum of the cutting-plane model, valid
    because every cut is a supergradient inequality of the concave ``F``.
    Trial points are projections of the incumbent onto a level set of the
    model, which avoids the tailing of plain cutting planes.  With
    ``early_stop`` the loop ends once the sign of the maximum is settled;
    otherwise it runs until the bounds meet within ``gap_tol``.
    """
    best_val, best_q = best
    upper = math.inf
    p = cuts[0][0].size
    for _ in range(iters):
        u, q_lp = _model_upper(cuts, p)
        if u is None:
            break
        upper = min(upper, u)
        settled = best_val >= -tol or upper < -tol
        if (early_stop and settled) or upper - best_val <= gap_tol:
            break
        q = _level_point(cuts, best_q, best_val + level_frac * (upper - best_val))
        if q is None:
            q = q_lp
        f, g, _, _ = obj.value_grad(q)
        cuts.append((q, f, g))
        if f > best_val:
            best_val, best_q = f, q
    return best_val, best_q, upper


def certify(gamma, family: PartitionFamily, config: OptConfig = OptConfig(),
            signs: SignMatrixSet | None = None) -> CertVerdict:
    """Decide whether ``gamma`` lies outside the mixtures over ``family``."""
    g = check_full_cm(gamma)
    if g.shape[0] != 2 * family.n:
        raise ValidationError(f"CM has {g.shape[0] // 2} modes, family has {family.n}")
    if signs is None:
        signs = generate_sign_matrices(family, config.n_samples, config.seed)
    mats = signs.matrices
    parts = signs.partitions
    p = len(parts)
    if len(mats) == 0:
        # only the trivial sign matrix: the family imposes physicality alone
        q = np.full(p, 1.0 / p)
        lam = float(np.linalg.eigvalsh(criterion_matrix(g, np.ones(family.n)))[0])
        return CertVerdict(False, lam, math.inf, True, q, np.ones((p, family.n), dtype=np.int8),
                           np.zeros(2 * family.n), parts, 1)
    obj = _Objective(g, mats)
    rng = np.random.default_rng(config.seed)
    starts = np.vstack([np.full(p, 1.0 / p), np.eye(p), rng.dirichlet(np.ones(p), size=config.n_starts)])
    vals = np.concatenate([obj.values(starts[i:i + 256])[0] for i in range(0, len(starts), 256)])
    order = np.argsort(vals)[::-1]
    best_q, best_val = starts[order[0]], float(vals[order[0]])

    cuts = []
    q = best_q.copy()
    step0 = 0.5
    for it in range(config.polish_iters):
        f, grad, _, _ = obj.value_grad(q)
        cuts.append((q.copy(), f, grad))
        if f > best_val:
            best_val, best_q = f, q.copy()
        norm = np.linalg.norm(grad - grad.mean())
        if norm < 1e-15:
            break
        q = project_simplex(q + step0 / math.sqrt(it + 1.0) * (grad - grad.mean()) / norm)
    # cuts from the best multistart points tighten the first LP cheaply
    for i in order[1:min(len(order), 64)]:
        f, grad, _, _ = obj.value_grad(starts[i])
        cuts.append((starts[i], f, grad))

    best_val, best_q, upper = _cutting_plane(obj, cuts, (best_val, best_q), config.tol,
                                             config.gap_tol, config.cut_iters, config.early_stop)
    certified = upper < -config.tol
    converged = certified or best_val >= -config.tol or upper - best_val <= config.gap_tol
    f, _, k, vec = obj.value_grad(best_q)
    return CertVerdict(bool(certified), float(best_val), float(upper), bool(converged), best_q,
                       mats[k], vec, parts, obj.evals)


def class_family(n: int, cls: str, k: int | None = None) -> PartitionFamily:
    """Family for ``cls`` in {"genuine", "ksep", "jprod"}."""
    if cls in ("genuine", "bisep"):
        return PartitionFamily.k_separable(n, 2)
    if cls == "ksep":
        return PartitionFamily.k_separable(n, int(k))
    if cls == "jprod":
        return PartitionFamily.j_producible(n, int(k))
    raise DomainError(f"unknown class {cls!r}")


def certify_class(gamma, cls: str, k: int | None = None, config: OptConfig = OptConfig()) -> CertVerdict:
    """Certify "not K-separable" (``cls="ksep"``) or "not J-producible" (``cls="jprod"``)."""
    g = check_full_cm(gamma)
    return certify(g, class_family(g.shape[0] // 2, cls, k), config)
