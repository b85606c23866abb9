"""Covariance matrices of CV-GHZ states and generic Gaussian CMs.

Conventions
-----------
Quadratures are ordered ``(x_1, ..., x_n, p_1, ..., p_n)`` and the vacuum
covariance matrix is the identity.  The symplectic form is

.. math::
    \\Omega = \\begin{pmatrix} 0 & -I \\\\ I & 0 \\end{pmatrix},

and a matrix is a valid CM iff :math:`\\gamma + i\\Omega \\succeq 0`.
Only second moments are handled; first moments never enter any criterion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, ParseError, ValidationError

PHYSICALITY_TOL = 1e-9
SYMMETRY_TOL = 1e-12
DENSE_MODE_CAP = 4096
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GhzParams:
    """Parameters of a lossy, noisy CV-GHZ state.

    Attributes
    ----------
    n : int
        Number of modes, at least 2.
    r : float
        Squeezing parameter.
    eta : float
        Channel transmissivity in (0, 1].
    noise_n : float
        Mean thermal photon number of the environment.
    """

    n: int
    r: float
    eta: float = 1.0
    noise_n: float = 0.0

    def __post_init__(self):
        _check_modes(self.n)
        _check_channel(self.eta, self.noise_n)
        if not self.r >= 0:
            raise DomainError(f"squeezing r must be >= 0, got {self.r}")

    @property
    def n1(self) -> float:
        """Added noise ``(1 - eta)(2N + 1)``."""
        return (1.0 - self.eta) * (2.0 * self.noise_n + 1.0)

    def cm(self) -> SymmetricCm:
        return apply_loss_noise(pure_ghz_cm(self.n, self.r), self.eta, self.noise_n)


@dataclass(frozen=True)
class SymmetricCm:
    """Permutation-symmetric CM ``gamma_x (+) gamma_p``.

    ``gamma_x`` has diagonal ``a`` and off-diagonal ``c``; ``gamma_p`` has
    diagonal ``b`` and off-diagonal ``-c``.
    """

    n: int
    a: float
    b: float
    c: float

    def __post_init__(self):
        _check_modes(self.n)
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"diagonal entries must be positive, got a={self.a}, b={self.b}")

    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the dense ``(gamma_x, gamma_p)`` pair."""
        n = self.n
        # filled entrywise so the read-back of (a, b, c) is exact
        gx = np.full((n, n), float(self.c))
        np.fill_diagonal(gx, self.a)
        gp = np.full((n, n), -float(self.c))
        np.fill_diagonal(gp, self.b)
        return gx, gp

    def product_eigenvalue(self) -> float:
        """``(a - c)(b + c)``, the per-mode determinant of the non-symmetric sector."""
        return (self.a - self.c) * (self.b + self.c)


def _check_modes(n):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 2:
        raise DomainError(f"mode count must be an integer >= 2, got {n!r}")


def _check_channel(eta, noise_n):
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"transmissivity eta must lie in (0, 1], got {eta}")
    if not noise_n >= 0.0:
        raise DomainError(f"noise photon number must be >= 0, got {noise_n}")


def pure_ghz_cm(n: int, r: float) -> SymmetricCm:
    """CM of the pure n-mode CV-GHZ state with squeezing ``r``.

    The state has ``gamma_x`` eigenvalue ``e^{2r}`` on the all-ones vector
    and ``e^{-2r}`` on its complement (and the reverse for ``gamma_p``),
    so ``a0 = (e^{2r} + (n-1)e^{-2r})/n`` and so on.
    """
    _check_modes(n)
    if not r >= 0:
        raise DomainError(f"squeezing r must be >= 0, got {r}")
    up, down = math.exp(2 * r), math.exp(-2 * r)
    a0 = (up + (n - 1) * down) / n
    b0 = ((n - 1) * up + down) / n
    c0 = 2.0 * math.sinh(2 * r) / n
    return SymmetricCm(n, a0, b0, c0)


def apply_loss_noise(cm: SymmetricCm, eta: float, noise_n: float) -> SymmetricCm:
    """Send every mode through a thermal-loss channel.

    ``a -> eta*a + N1``, ``b -> eta*b + N1``, ``c -> eta*c`` with
    ``N1 = (1 - eta)(2N + 1)``.
    """
    _check_channel(eta, noise_n)
    n1 = (1.0 - eta) * (2.0 * noise_n + 1.0)
    return SymmetricCm(cm.n, eta * cm.a + n1, eta * cm.b + n1, eta * cm.c)


def expand_full(cm: SymmetricCm, max_modes: int = DENSE_MODE_CAP) -> np.ndarray:
    """Dense ``2n x 2n`` matrix of a symmetric CM."""
    if cm.n > max_modes:
        raise CapacityError(f"dense expansion of {cm.n} modes exceeds cap {max_modes}")
    gx, gp = cm.blocks()
    n = cm.n
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = gx
    out[n:, n:] = gp
    return out


def symmetric_from_full(gamma) -> SymmetricCm:
    """Read ``(a, b, c)`` back from a dense CM with the symmetric structure.

    Raises
    ------
    ValidationError
        If the matrix does not have the ``gamma_x (+) gamma_p`` symmetric form.
    """
    g = check_full_cm(gamma)
    n = g.shape[0] // 2
    a, b = g[0, 0], g[n, n]
    c = g[0, 1] if n > 1 else 0.0
    try:
        cm = SymmetricCm(n, float(a), float(b), float(c))
    except DomainError as exc:
        raise ValidationError(str(exc)) from None
    expected = expand_full(cm, max_modes=n)
    if np.max(np.abs(expected - g)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(g)))):
        raise ValidationError("matrix is not a permutation-symmetric GHZ-class CM")
    return cm


def symplectic_form(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def check_full_cm(gamma) -> np.ndarray:
    """Validate a dense CM: square, even dimension, real symmetric."""
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError(f"CM must be a square matrix, got shape {g.shape}")
    if g.shape[0] % 2 or g.shape[0] == 0:
        raise ValidationError(f"CM dimension must be even and positive, got {g.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > SYMMETRY_TOL * scale:
        raise ValidationError("CM is not symmetric")
    return g


def physicality_check(gamma, tol: float = PHYSICALITY_TOL) -> tuple[bool, float]:
    """Robertson-Schroedinger test ``gamma + i*Omega >= 0``.

    Returns
    -------
    physical : bool
        Whether the smallest eigenvalue is ``>= -tol``.
    margin : float
        The smallest eigenvalue of ``gamma + i*Omega``.
    """
    g = check_full_cm(gamma)
    n = g.shape[0] // 2
    herm = g + 1j * symplectic_form(n)
    margin = float(np.linalg.eigvalsh(herm)[0])
    return margin >= -tol, margin


def v_of_noise(noise_n: float) -> float:
    """Bounded noise coordinate ``v = N / (N + 1)``."""
    if not noise_n >= 0:
        raise DomainError(f"noise photon number must be >= 0, got {noise_n}")
    return noise_n / (noise_n + 1.0)


def noise_of_v(v: float) -> float:
    """Inverse of :func:`v_of_noise`."""
    if not 0.0 <= v < 1.0:
        raise DomainError(f"v must lie in [0, 1), got {v}")
    return v / (1.0 - v)


# -- CM file format ----------------------------------------------------------


def dump_cm(cm, path=None) -> str:
    """Serialize a :class:`SymmetricCm` or dense matrix to the JSON CM format."""
    if isinstance(cm, SymmetricCm):
        doc = {"format_version": FORMAT_VERSION, "n": cm.n, "kind": "symmetric",
               "a": cm.a, "b": cm.b, "c": cm.c}
    else:
        g = check_full_cm(cm)
        doc = {"format_version": FORMAT_VERSION, "n": g.shape[0] // 2, "kind": "full",
               "matrix": g.tolist()}
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def parse_cm(text: str):
    """Parse the JSON CM format.

    Returns a :class:`SymmetricCm` for ``kind="symmetric"`` and a dense
    ``ndarray`` for ``kind="full"``.  The matrix may be nested rows or a
    flat row-major list of ``(2n)^2`` numbers.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", field="format_version")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"expected positive integer, got {n!r}", field="n")
    kind = doc.get("kind")
    if kind == "symmetric":
        vals = {}
        for key in ("a", "b", "c"):
            v = doc.get(key)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParseError(f"expected a number, got {v!r}", field=key)
            vals[key] = float(v)
        try:
            return SymmetricCm(n, **vals)
        except DomainError as exc:
            raise ParseError(str(exc), field="a") from None
    if kind == "full":
        raw = doc.get("matrix")
        if not isinstance(raw, list):
            raise ParseError("expected an array", field="matrix")
        dim = 2 * n
        try:
            arr = np.array(raw, dtype=float)
        except (TypeError, ValueError):
            raise ParseError("matrix entries must be numbers", field="matrix") from None
        if arr.ndim == 1 and arr.size == dim * dim:
            arr = arr.reshape(dim, dim)
        if arr.shape != (dim, dim):
            raise ParseError(f"expected {dim}x{dim} entries, got shape {arr.shape}", field="matrix")
        try:
            return check_full_cm(arr)
        except ValidationError as exc:
            raise ParseError(str(exc), field="matrix") from None
    raise ParseError(f"kind must be 'symmetric' or 'full', got {kind!r}", field="kind")


def load_cm(path):
    return parse_cm(Path(path).read_text(encoding="utf-8"))
