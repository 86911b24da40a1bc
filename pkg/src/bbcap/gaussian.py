"""Zero-mean Gaussian states in the covariance-matrix formalism.

Conventions used throughout the package:

* Quadratures are ordered ``(x1, p1, ..., xn, pn)``.
* Vacuum-normalized units: the vacuum covariance matrix is the identity,
  so a thermal state with mean photon number ``nbar`` has covariance
  ``(2*nbar + 1) * I2`` and every symplectic eigenvalue satisfies
  ``nu >= 1``.
* Entropies are in bits; the von Neumann entropy of a Gaussian state is
  ``sum(entropy_g((nu_k - 1) / 2))`` over its symplectic eigenvalues.

Means are carried along (and transformed) so displaced states remain
representable, but every state produced by this package is zero-mean.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass

import numpy as np

__all__ = [
    "CovarianceState",
    "SymplecticTransform",
    "SymplecticPairingError",
    "entropy_g",
    "tmsv",
    "thermal_state",
    "beam_splitter",
    "apply",
    "reduce",
    "permute_modes",
    "symplectic_eigenvalues",
    "von_neumann_entropy",
    "conditional_entropy",
    "symplectic_form",
]

# Tolerances: 1e-12 for algebraic identities, 1e-9 for anything that has
# passed through an eigendecomposition.
SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-12
VALIDITY_TOL = 1e-9
PAIRING_TOL = 1e-9

_LN2 = math.log(2.0)


class SymplecticPairingError(RuntimeError):
    """Eigenvalues of Omega @ cov failed to pair up within tolerance."""


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form: block-diagonal [[0, 1], [-1, 0]] per mode."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


@dataclass
class CovarianceState:
    """Gaussian state of ``n`` labeled modes: mean vector and covariance matrix.

    Attributes
    ----------
    mode_labels : tuple
        Distinct identifiers, one per mode, in quadrature-block order.
    mean : ndarray, shape (2n,)
        Mean quadrature vector.
    cov : ndarray, shape (2n, 2n)
        Symmetric covariance matrix satisfying the uncertainty relation
        (all symplectic eigenvalues >= 1 within ``VALIDITY_TOL``).

    Treat instances as immutable; operations return new states.
    """

    mode_labels: tuple
    mean: np.ndarray
    cov: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        self.mode_labels = tuple(self.mode_labels)
        self.mean = np.array(self.mean, dtype=float).reshape(-1)
        self.cov = np.array(self.cov, dtype=float)
        if validate:
            self._check()

    def _check(self) -> None:
        n = len(self.mode_labels)
        if n == 0:
            raise ValueError("state must have at least one mode")
        if len(set(self.mode_labels)) != n:
            raise ValueError(f"duplicate mode labels: {self.mode_labels}")
        if self.mean.shape != (2 * n,):
            raise ValueError(
                f"mean has shape {self.mean.shape}, expected ({2 * n},)"
            )
        if self.cov.shape != (2 * n, 2 * n):
            raise ValueError(
                f"cov has shape {self.cov.shape}, expected ({2 * n}, {2 * n})"
            )
        scale = max(1.0, float(np.max(np.abs(self.cov))))
        asym = float(np.max(np.abs(self.cov - self.cov.T)))
        if asym > SYMMETRY_TOL * scale:
            raise ValueError(f"covariance not symmetric (max asymmetry {asym:.3e})")
        nu_min = min(symplectic_eigenvalues(self))
        if nu_min < 1.0 - VALIDITY_TOL:
            raise ValueError(
                f"uncertainty relation violated: min symplectic eigenvalue {nu_min!r}"
            )

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def index(self, label) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise ValueError(f"unknown mode label {label!r}") from None


@dataclass
class SymplecticTransform:
    """Linear map on quadratures, ``r -> S @ r``, with S @ Omega @ S.T = Omega."""

    matrix: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        self.matrix = np.array(self.matrix, dtype=float)
        if validate:
            self._check()

    def _check(self) -> None:
        s = self.matrix
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"matrix has shape {s.shape}, expected (2n, 2n)")
        omega = symplectic_form(s.shape[0] // 2)
        defect = float(np.max(np.abs(s @ omega @ s.T - omega)))
        if defect > SYMPLECTIC_TOL:
            raise ValueError(f"matrix is not symplectic (defect {defect:.3e})")

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def entropy_g(x: float) -> float:
    """Entropy in bits of a thermal bosonic state with mean photon number x.

    ``g(x) = (x + 1) log2(x + 1) - x log2(x)``, evaluated in the
    cancellation-free form ``log2(x + 1) + x * log1p(1/x) / ln 2`` which is
    accurate for all x (for large x it reduces to the asymptotic expansion
    ``log2 x + log2 e + O(1/x)``).  Returns 0 below 1e-12 (the x log x limit).
    """
    x = float(x)
    if x < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {x!r}")
    if x < 1e-12:
        return 0.0
    return math.log2(x + 1.0) + x * math.log1p(1.0 / x) / _LN2


def tmsv(n_s: float, labels=("A", "A'")) -> CovarianceState:
    """Two-mode squeezed vacuum with mean photon number ``n_s`` per arm.

    Diagonal blocks are ``(2 n_s + 1) I2``; cross blocks are
    ``2 sqrt(n_s (n_s + 1)) diag(1, -1)``.  The joint state is pure and each
    arm alone is thermal with mean photon number ``n_s``.
    """
    if n_s < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {n_s!r}")
    labels = tuple(labels)
    if len(labels) != 2:
        raise ValueError("tmsv needs exactly two mode labels")
    d = 2.0 * n_s + 1.0
    c = 2.0 * math.sqrt(n_s * (n_s + 1.0))
    cov = np.array(
        [
            [d, 0.0, c, 0.0],
            [0.0, d, 0.0, -c],
            [c, 0.0, d, 0.0],
            [0.0, -c, 0.0, d],
        ]
    )
    return CovarianceState(labels, np.zeros(4), cov)


def thermal_state(nbar: float, label) -> CovarianceState:
    """Single thermal mode with mean photon number ``nbar``."""
    if nbar < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {nbar!r}")
    cov = (2.0 * nbar + 1.0) * np.eye(2)
    return CovarianceState((label,), np.zeros(2), cov)


def beam_splitter(eta: float, mode_a: int, mode_b: int, n_modes: int) -> SymplecticTransform:
    """Beam splitter of transmittance ``eta`` coupling two modes of an n-mode system.

    On the target quadrature blocks the map is
    ``[[sqrt(eta) I2, sqrt(1-eta) I2], [-sqrt(1-eta) I2, sqrt(eta) I2]]``
    (identity elsewhere), i.e. mode_a keeps a sqrt(eta) share of itself and
    gains sqrt(1-eta) of mode_b.
    """
    if not -1e-12 <= eta <= 1.0 + 1e-12:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta!r}")
    eta = min(max(eta, 0.0), 1.0)
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    for m in (mode_a, mode_b):
        if not 0 <= m < n_modes:
            raise ValueError(f"mode index {m} out of range for {n_modes} modes")
    t = math.sqrt(eta)
    r = math.sqrt(1.0 - eta)
    s = np.eye(2 * n_modes)
    a, b = 2 * mode_a, 2 * mode_b
    s[a : a + 2, a : a + 2] = t * np.eye(2)
    s[a : a + 2, b : b + 2] = r * np.eye(2)
    s[b : b + 2, a : a + 2] = -r * np.eye(2)
    s[b : b + 2, b : b + 2] = t * np.eye(2)
    return SymplecticTransform(s)


def apply(transform: SymplecticTransform, state: CovarianceState) -> CovarianceState:
    """Apply a symplectic transform: cov -> S cov S.T, mean -> S mean."""
    s = transform.matrix
    if s.shape[0] != 2 * state.n_modes:
        raise ValueError(
            f"transform acts on {s.shape[0] // 2} modes, state has {state.n_modes}"
        )
    cov = s @ state.cov @ s.T
    cov = 0.5 * (cov + cov.T)  # keep exactly symmetric under roundoff
    return CovarianceState(state.mode_labels, s @ state.mean, cov)


def reduce(state: CovarianceState, keep) -> CovarianceState:
    """Partial trace down to the modes in ``keep`` (original mode order kept)."""
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("must keep at least one mode")
    for label in keep_set:
        if label not in state.mode_labels:
            raise ValueError(f"unknown mode label {label!r}")
    idx = [i for i, lab in enumerate(state.mode_labels) if lab in keep_set]
    qi = np.array([j for i in idx for j in (2 * i, 2 * i + 1)])
    return CovarianceState(
        tuple(state.mode_labels[i] for i in idx),
        state.mean[qi],
        state.cov[np.ix_(qi, qi)],
    )


def permute_modes(state: CovarianceState, new_order) -> CovarianceState:
    """Reorder modes to ``new_order`` (a permutation of the state's labels)."""
    new_order = tuple(new_order)
    if sorted(map(str, new_order)) != sorted(map(str, state.mode_labels)) or len(
        new_order
    ) != state.n_modes:
        raise ValueError(f"{new_order!r} is not a permutation of {state.mode_labels!r}")
    idx = [state.index(lab) for lab in new_order]
    qi = np.array([j for i in idx for j in (2 * i, 2 * i + 1)])
    return CovarianceState(new_order, state.mean[qi], state.cov[np.ix_(qi, qi)])


def symplectic_eigenvalues(state: CovarianceState) -> list:
    """Symplectic spectrum: |eigenvalues of i Omega cov| paired up, descending.

    The 2n magnitudes must pair into n doublets within ``PAIRING_TOL``
    (relative above unit scale); an unpaired spectrum signals numerical
    degeneracy and raises :class:`SymplecticPairingError`.
    """
    n = state.n_modes
    omega = symplectic_form(n)
    mags = np.sort(np.abs(np.linalg.eigvals(omega @ state.cov)))[::-1]
    nus = []
    for k in range(n):
        hi, lo = mags[2 * k], mags[2 * k + 1]
        if hi - lo > PAIRING_TOL * max(1.0, hi):
            raise SymplecticPairingError(
                f"unpaired symplectic spectrum: {hi!r} vs {lo!r}"
            )
        nus.append(0.5 * (hi + lo))
    return nus


def von_neumann_entropy(state: CovarianceState) -> float:
    """Entropy in bits: sum of g((nu - 1)/2) over symplectic eigenvalues."""
    total = 0.0
    for nu in symplectic_eigenvalues(state):
        # nu may undershoot 1 by up to VALIDITY_TOL; clamp to the vacuum value
        total += entropy_g(max(nu - 1.0, 0.0) / 2.0)
    return total


def conditional_entropy(state: CovarianceState, subsystem, conditioned_on) -> float:
    """H(S1 | S2) = H(S1 S2) - H(S2) in bits; S2 may be empty. May be negative."""
    s1 = set(subsystem)
    s2 = set(conditioned_on)
    if not s1:
        raise ValueError("subsystem must be nonempty")
    if s1 & s2:
        raise ValueError(f"subsystems overlap: {sorted(s1 & s2, key=str)}")
    joint = von_neumann_entropy(reduce(state, s1 | s2))
    if not s2:
        return joint
    return joint - von_neumann_entropy(reduce(state, s2))
