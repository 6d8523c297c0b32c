"""Covariance-matrix algebra for multimode Gaussian states.

Conventions (fixed throughout the package):

* shot-noise units with hbar = 2, i.e. x = a + a^dag, p = i(a^dag - a),
  so the vacuum has quadrature variance 1;
* quadrature ordering (x1, p1, x2, p2, ...), making every single-mode
  operation a 2x2 block update;
* all logarithms base 2, entropies in bits.

States are zero-mean; first moments are never tracked because every
quantity computed downstream depends only on second moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DegenerateConditioningError,
    DomainError,
    UnphysicalStateError,
)

# Tolerances for the bona fide checks.
SYMMETRY_RTOL = 1e-12
NU_TOLERANCE = 1e-9


class Quadrature(Enum):
    X = "x"
    P = "p"


@dataclass(frozen=True)
class ModeQuadrature:
    """A single quadrature of a single mode, e.g. (mode 1, P)."""

    mode: int
    quadrature: Quadrature

    def index(self) -> int:
        """Row/column index in the (x1, p1, x2, p2, ...) ordering."""
        return 2 * self.mode + (0 if self.quadrature is Quadrature.X else 1)


@dataclass(frozen=True)
class ChannelParams:
    """Gaussian channel with transmission T and excess noise xi (SNU, input-referred).

    A pure state of unit variance acquires variance 1 + T*xi after the
    channel, on top of the loss-induced mixing with vacuum.
    """

    transmission: float
    excess_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.transmission <= 1.0:
            raise DomainError(f"transmission must lie in (0, 1], got {self.transmission}")
        if self.excess_noise < 0.0:
            raise DomainError(f"excess noise must be >= 0, got {self.excess_noise}")

    @property
    def is_identity(self) -> bool:
        return self.transmission == 1.0 and self.excess_noise == 0.0


@dataclass(frozen=True)
class CovarianceMatrix:
    """Second-moment matrix of an n-mode Gaussian state.

    The entries are validated on construction: the matrix must be
    symmetric (to 1e-12 relative tolerance), positive definite and
    physical, i.e. every symplectic eigenvalue nu >= 1 - 1e-9.
    """

    matrix: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0 or m.shape[0] == 0:
            raise DomainError(f"covariance matrix must be 2n x 2n, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
            raise DomainError("covariance matrix is not symmetric")
        m = (m + m.T) / 2.0
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "n_modes", m.shape[0] // 2)
        # raises UnphysicalStateError when some nu < 1 - tolerance; the
        # spectrum is cached since entropy calls need it again
        object.__setattr__(self, "_nus", tuple(symplectic_eigenvalues(self)))

    def variance(self, mq: ModeQuadrature) -> float:
        return float(self.matrix[mq.index(), mq.index()])

    def covariance(self, a: ModeQuadrature, b: ModeQuadrature) -> float:
        return float(self.matrix[a.index(), b.index()])

    def _check_mode(self, mode: int):
        if not 0 <= mode < self.n_modes:
            raise DomainError(f"mode {mode} out of range for {self.n_modes}-mode state")


def vacuum(n_modes: int = 1) -> CovarianceMatrix:
    """n uncorrelated vacuum modes (identity CM)."""
    if n_modes < 1:
        raise DomainError("need at least one mode")
    return CovarianceMatrix(np.eye(2 * n_modes))


def thermal(v: float) -> CovarianceMatrix:
    """Single thermal mode with quadrature variance v >= 1."""
    if v < 1.0:
        raise DomainError(f"thermal variance must be >= 1, got {v}")
    return CovarianceMatrix(np.diag([v, v]))


def tmsv(v: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with quadrature variance v = cosh(2s).

    Diagonal blocks v*I, off-diagonal block diag(+c, -c) with
    c = sqrt(v^2 - 1); pure for every v >= 1, reducing to two vacua
    at v = 1.
    """
    if v < 1.0:
        raise DomainError(f"EPR variance must be >= 1, got {v}")
    c = math.sqrt(v * v - 1.0)
    m = np.diag([float(v)] * 4)
    m[0, 2] = m[2, 0] = c
    m[1, 3] = m[3, 1] = -c
    return CovarianceMatrix(m)


def apply_channel(cm: CovarianceMatrix, ch: ChannelParams, mode: int) -> CovarianceMatrix:
    """Send one mode through a Gaussian loss/noise channel.

    On the target mode each quadrature variance maps to
    T*V + (1 - T) + T*xi; every cross correlation involving the target
    is scaled by sqrt(T); all other entries are untouched.
    """
    cm._check_mode(mode)
    t = ch.transmission
    m = cm.matrix.copy()
    sl = slice(2 * mode, 2 * mode + 2)
    rest = np.ones(2 * cm.n_modes, dtype=bool)
    rest[sl] = False
    m[sl, sl] = t * m[sl, sl] + ((1.0 - t) + t * ch.excess_noise) * np.eye(2)
    m[np.ix_([2 * mode, 2 * mode + 1], np.flatnonzero(rest))] *= math.sqrt(t)
    m[np.ix_(np.flatnonzero(rest), [2 * mode, 2 * mode + 1])] *= math.sqrt(t)
    return CovarianceMatrix(m)


def split_with_vacuum(cm: CovarianceMatrix, mode: int) -> CovarianceMatrix:
    """Mix one mode with vacuum on a balanced beamsplitter.

    The vacuum mode is appended at the end; the original slot carries
    output 1 = (in + vac)/sqrt(2) and the appended slot output
    2 = (in - vac)/sqrt(2). Each output quadrature has variance
    (V + 1)/2 and correlations to third modes scale by 1/sqrt(2).
    """
    cm._check_mode(mode)
    n = cm.n_modes
    ext = np.eye(2 * (n + 1))
    ext[: 2 * n, : 2 * n] = cm.matrix
    s = np.eye(2 * (n + 1))
    r = 1.0 / math.sqrt(2.0)
    for k in range(2):  # x then p of the (target, appended) pair
        i, j = 2 * mode + k, 2 * n + k
        s[i, i] = r
        s[i, j] = r
        s[j, i] = r
        s[j, j] = -r
    return CovarianceMatrix(s @ ext @ s.T)


def reduced_state(cm: CovarianceMatrix, modes: list[int]) -> CovarianceMatrix:
    """Partial trace down to the given modes (kept in the given order)."""
    for mode in modes:
        cm._check_mode(mode)
    idx = [2 * m + k for m in modes for k in range(2)]
    return CovarianceMatrix(cm.matrix[np.ix_(idx, idx)])


def condition_on_homodyne(
    cm: CovarianceMatrix, measured: ModeQuadrature
) -> tuple[CovarianceMatrix, float]:
    """State of the remaining modes after a homodyne measurement.

    Returns the Schur complement Sigma_rest - sigma sigma^T / V_meas
    together with the variance of the measured quadrature. The
    conjugate quadrature of the measured mode is discarded with the
    mode, and the result is outcome independent.
    """
    cm._check_mode(measured.mode)
    if cm.n_modes < 2:
        raise DomainError("conditioning needs at least one remaining mode")
    v_meas = cm.variance(measured)
    if v_meas <= 0.0:
        raise DegenerateConditioningError("measured quadrature has nonpositive variance")
    keep = [i for i in range(2 * cm.n_modes) if i // 2 != measured.mode]
    sigma = cm.matrix[keep, measured.index()]
    rest = cm.matrix[np.ix_(keep, keep)] - np.outer(sigma, sigma) / v_meas
    return CovarianceMatrix(rest), v_meas


def conditional_variance(
    cm: CovarianceMatrix, target: ModeQuadrature, given: ModeQuadrature
) -> float:
    """Optimal-linear-estimator conditional variance V_t - C^2 / V_g."""
    if target == given:
        raise DomainError("target and given quadratures must differ")
    v_g = cm.variance(given)
    if v_g <= 0.0:
        raise DegenerateConditioningError("conditioning quadrature has nonpositive variance")
    c = cm.covariance(target, given)
    return cm.variance(target) - c * c / v_g


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form Omega for the (x1, p1, ...) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cm: CovarianceMatrix) -> list[float]:
    """Symplectic spectrum: |eig(i Omega Sigma)|, one value per mode, ascending.

    Computed through the antisymmetric congruence Sigma^(1/2) Omega
    Sigma^(1/2), whose singular values are the nu in pairs; unlike a raw
    eigendecomposition of i Omega Sigma this stays accurate for strongly
    squeezed near-pure states. Values below 1 by less than the clamp
    tolerance are snapped to 1 (two-mode squeezed vacuum is analytically
    pure but numerically nu = 1 +- eps); anything further below 1 raises
    an unphysical-state error. The 1e-9 tolerance is scaled by the
    matrix norm: a stored CM with entries of size s cannot represent
    purity more finely than s * machine epsilon, so a fixed gate would
    spuriously reject pure states beyond V ~ 1e4.
    """
    tol = NU_TOLERANCE * max(1.0, float(np.max(np.abs(cm.matrix))))
    w, u = np.linalg.eigh(cm.matrix)
    if w[0] < -tol:
        raise UnphysicalStateError("covariance matrix is not positive definite")
    # floor tiny/rounded-negative eigenvalues at representation accuracy so
    # extremely squeezed near-pure states do not produce a spurious nu ~ 0
    floor = np.finfo(float).eps * max(1.0, float(w[-1]))
    root = (u * np.sqrt(np.maximum(w, floor))) @ u.T
    k = root @ symplectic_form(cm.n_modes) @ root
    sv = np.linalg.svd((k - k.T) / 2.0, compute_uv=False)  # pairs, descending
    out = []
    for nu in sv[::2][::-1]:
        nu = float(nu)
        if nu < 1.0 - tol:
            raise UnphysicalStateError(f"symplectic eigenvalue {nu} < 1 (unphysical state)")
        out.append(1.0 if nu < 1.0 + tol else nu)  # snap float noise around purity
    return out


def entropy_g(nu: float) -> float:
    """Bosonic entropy kernel g(nu) in bits, vanishing at nu = 1."""
    if nu <= 1.0:
        return 0.0
    up, dn = (nu + 1.0) / 2.0, (nu - 1.0) / 2.0
    return up * math.log2(up) - dn * math.log2(dn)


def von_neumann_entropy(cm: CovarianceMatrix) -> float:
    """von Neumann entropy in bits, summed over the symplectic spectrum."""
    return sum(entropy_g(nu) for nu in symplectic_eigenvalues(cm))
