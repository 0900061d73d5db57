"""Gaussian states of labeled bosonic/spin modes and symplectic transforms.

Conventions used throughout the package:

* quadratures are ordered ``(X_1, P_1, X_2, P_2, ...)``;
* the vacuum has variance 1/2 per quadrature (``cov = I/2``);
* a physical covariance satisfies the Heisenberg bound
  ``cov + (i/2) Omega >= 0`` with the standard symplectic form Omega.

All state and map objects are immutable after construction; every operation
is a pure function, so concurrent read-only use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

VACUUM_VARIANCE = 0.5

SYMPLECTIC_TOL = 1e-10
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9

_KINDS = ("light", "atom")
_STAGES = ("write", "read")


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Return the 2n x 2n symplectic form for (X1, P1, X2, P2, ...) ordering."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


@dataclass(frozen=True, order=True)
class ModeLabel:
    """Identity of one bosonic mode: subsystem kind, protocol stage, pixel index."""

    kind: str
    stage: str
    pixel: int

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.stage not in _STAGES:
            raise ValueError(f"stage must be one of {_STAGES}, got {self.stage!r}")
        if self.pixel < 0:
            raise ValueError("pixel index must be >= 0")


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and symmetric covariance over the quadratures of labeled modes.

    ``mean`` has length 2M and ``cov`` is 2M x 2M for M = len(labels), with
    quadratures ordered (X_1, P_1, ..., X_M, P_M).
    """

    mean: np.ndarray
    cov: np.ndarray
    labels: tuple[ModeLabel, ...]

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("state needs at least one mode")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate mode labels")
        m = len(labels)
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2 * m,):
            raise ValueError(f"mean must have shape ({2*m},), got {mean.shape}")
        if cov.shape != (2 * m, 2 * m):
            raise ValueError(f"cov must have shape ({2*m}, {2*m}), got {cov.shape}")
        asym = np.max(np.abs(cov - cov.T))
        if asym > 1e-8:
            raise ValueError(f"covariance not symmetric (max asymmetry {asym:.3e})")
        # tiny asymmetries from floating point are folded away
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", _as_readonly(mean))
        object.__setattr__(self, "cov", _as_readonly(cov))
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def mode_index(self, label: ModeLabel) -> int:
        return self.labels.index(label)

    def quadrature_indices(self, label: ModeLabel) -> tuple[int, int]:
        """Return the (X, P) positions of a mode in the quadrature vector."""
        k = self.mode_index(label)
        return 2 * k, 2 * k + 1

    def variance(self, label: ModeLabel, quadrature: str = "X") -> float:
        ix, ip = self.quadrature_indices(label)
        return float(self.cov[ix, ix] if quadrature == "X" else self.cov[ip, ip])


@dataclass(frozen=True)
class SymplecticMap:
    """Linear quadrature transform, optionally with additive classical noise.

    ``matrix`` is the 2M x 2M symplectic matrix S; ``added_noise``, when given,
    is a symmetric PSD matrix added to the covariance after the linear part
    (cov -> S cov S^T + added_noise).
    """

    matrix: np.ndarray
    added_noise: np.ndarray | None = None

    def __post_init__(self) -> None:
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("matrix must be square")
        if s.shape[0] % 2 != 0:
            raise ValueError("matrix dimension must be even (pairs of quadratures)")
        object.__setattr__(self, "matrix", _as_readonly(s))
        if self.added_noise is not None:
            n = np.asarray(self.added_noise, dtype=float)
            if n.shape != s.shape:
                raise ValueError("added_noise shape must match matrix")
            if np.max(np.abs(n - n.T)) > 1e-10:
                raise ValueError("added_noise must be symmetric")
            if np.min(np.linalg.eigvalsh(0.5 * (n + n.T))) < -PSD_TOL:
                raise ValueError("added_noise must be positive semidefinite")
            object.__setattr__(self, "added_noise", _as_readonly(0.5 * (n + n.T)))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


class SymplecticCheck(NamedTuple):
    passed: bool
    max_deviation: float


def check_symplectic(candidate: SymplecticMap | np.ndarray,
                     tol: float = SYMPLECTIC_TOL) -> SymplecticCheck:
    """Test S Omega S^T = Omega and report the max elementwise deviation."""
    s = candidate.matrix if isinstance(candidate, SymplecticMap) else np.asarray(candidate, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("expected a square matrix")
    if s.shape[0] % 2 != 0:
        raise ValueError("expected an even-dimensional matrix")
    omega = symplectic_form(s.shape[0] // 2)
    dev = float(np.max(np.abs(s @ omega @ s.T - omega)))
    return SymplecticCheck(dev < tol, dev)


def make_vacuum(labels: Sequence[ModeLabel]) -> GaussianState:
    """Vacuum (or coherent-amplitude-free) state: zero mean, cov = I/2."""
    labels = tuple(labels)
    m = len(labels)
    if m == 0:
        raise ValueError("need at least one label")
    return GaussianState(
        mean=np.zeros(2 * m),
        cov=VACUUM_VARIANCE * np.eye(2 * m),
        labels=labels,
    )


def make_squeezed_modes(labels: Sequence[ModeLabel], axis: str,
                        variance: float) -> GaussianState:
    """Minimum-uncertainty state squeezed along ``axis`` on every mode.

    The squeezed quadrature has the requested variance and the conjugate one
    has 1/(4*variance), so the per-mode uncertainty product is exactly 1/4.
    ``variance`` must lie in (0, 0.5]; 0.5 reproduces the vacuum.
    """
    if axis not in ("X", "P"):
        raise ValueError("axis must be 'X' or 'P'")
    if not 0.0 < variance <= VACUUM_VARIANCE:
        raise ValueError("variance must lie in (0, 0.5]")
    labels = tuple(labels)
    m = len(labels)
    if m == 0:
        raise ValueError("need at least one label")
    anti = 1.0 / (4.0 * variance)
    per_mode = (variance, anti) if axis == "X" else (anti, variance)
    return GaussianState(
        mean=np.zeros(2 * m),
        cov=np.diag(np.tile(per_mode, m)),
        labels=labels,
    )


def apply_map(state: GaussianState, smap: SymplecticMap) -> GaussianState:
    """Propagate mean and covariance: mean -> S mean, cov -> S cov S^T + noise."""
    if smap.matrix.shape[0] != 2 * state.n_modes:
        raise ValueError(
            f"dimension mismatch: map acts on {smap.n_modes} modes, "
            f"state has {state.n_modes}"
        )
    s = smap.matrix
    mean = s @ state.mean
    cov = s @ state.cov @ s.T
    if smap.added_noise is not None:
        cov = cov + smap.added_noise
    cov = 0.5 * (cov + cov.T)
    return GaussianState(mean=mean, cov=cov, labels=state.labels)


def heisenberg_defect(state: GaussianState) -> float:
    """Smallest eigenvalue of cov + (i/2) Omega; >= -1e-9 for physical states."""
    omega = symplectic_form(state.n_modes)
    h = state.cov + 0.5j * omega
    return float(np.min(np.linalg.eigvalsh(h)))


def sample_state(state: GaussianState, n: int, seed: int) -> NDArray[np.float64]:
    """Draw ``n`` quadrature vectors from the state's normal distribution.

    Deterministic for a fixed seed. Rejects covariances with eigenvalues
    below -1e-9; small negative eigenvalues inside the tolerance are clipped.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    evals, evecs = np.linalg.eigh(state.cov)
    if evals.min() < -PSD_TOL:
        raise ValueError(
            f"covariance not positive semidefinite (min eigenvalue {evals.min():.3e})"
        )
    evals = np.clip(evals, 0.0, None)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, len(evals)))
    return state.mean + (z * np.sqrt(evals)) @ evecs.T


def empirical_covariance(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    """Covariance of a sample matrix (rows are draws), without Bessel correction."""
    x = samples - samples.mean(axis=0)
    return (x.T @ x) / len(samples)
