"""Spatial squeezing spectra of the readout light.

A spectrum bundles the squeezing magnitude r(q) and the orientation psi(q) of
the anti-squeezed axis over transverse spatial frequency, plus the transverse
coherence length ``l_d`` of the squeezed light. The quadrature spectral
density entering the pixel-noise quadrature is

    G_X(q) = exp(2 r(q)) cos^2 psi(q) + exp(-2 r(q)) sin^2 psi(q),

so psi = pi/2 means the X quadrature is squeezed. The built-in model is the
traveling-wave degenerate parametric amplifier with paraxial phase mismatch
theta = (|q| l_d)^2, which reproduces r(0) = r0 and psi(0) = pi/2 and decays
to the vacuum (G_X -> 1) at high spatial frequency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

ArrayLike = NDArray[np.float64] | float


@dataclass(frozen=True, eq=False)
class SqueezingSpectrum:
    """Squeezing magnitude and ellipse orientation over spatial frequency.

    ``r`` and ``psi`` are vectorized callables of |q| (both even in q by
    construction). Instances compare and hash by identity, which lets
    downstream caches key on a spectrum object.
    """

    r: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    l_d: float
    model_tag: str = "custom"

    def __post_init__(self) -> None:
        if self.l_d <= 0:
            raise ValueError("coherence length must be positive")

    def green_x(self, q: ArrayLike) -> ArrayLike:
        return green_x(self, q)


def _bogoliubov(theta: np.ndarray, g: float) -> tuple[np.ndarray, np.ndarray]:
    """Amplifier coefficients U, V at dimensionless mismatch theta.

    Parameterized through Gamma^2 = g^2 - theta^2/4 so the continuation
    across the gain-band edge theta = 2g is automatic (cosh/sinh turn into
    cos/sin); both cosh(Gamma) and sinh(Gamma)/Gamma are even entire
    functions of Gamma.
    """
    s = g * g - theta * theta / 4.0
    root = np.sqrt(np.abs(s))
    inside = s >= 0
    # guard both branches against overflow/0-division before masking
    cosh_part = np.where(inside, np.cosh(np.where(inside, root, 0.0)),
                         np.cos(np.where(inside, 0.0, root)))
    safe = np.where(root > 1e-12, root, 1.0)
    sinhc = np.where(
        root > 1e-12,
        np.where(inside, np.sinh(np.where(inside, root, 0.0)) / safe,
                 np.sin(np.where(inside, 0.0, root)) / safe),
        1.0,
    )
    phase = np.exp(0.5j * theta)
    u = phase * (cosh_part - 0.5j * theta * sinhc)
    v = phase * (g * sinhc)
    return u, v


def opa_spectrum(r0: float, l_d: float) -> SqueezingSpectrum:
    """Degenerate parametric-amplifier spectrum with gain r0 at q = 0.

    With theta = (|q| l_d)^2 and Gamma = sqrt(r0^2 - theta^2/4):
    U = e^{i theta/2} (cosh Gamma - i (theta/2Gamma) sinh Gamma),
    V = e^{i theta/2} (r0/Gamma) sinh Gamma, e^{r} = |U| + |V| and
    psi = (arg U + arg V)/2 + pi/2. Guarantees |U|^2 - |V|^2 = 1.
    """
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    if l_d <= 0:
        raise ValueError("coherence length must be positive")

    def r_func(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        theta = (np.abs(q) * l_d) ** 2
        u, v = _bogoliubov(theta, r0)
        return np.log(np.abs(u) + np.abs(v))

    def psi_func(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        theta = (np.abs(q) * l_d) ** 2
        u, v = _bogoliubov(theta, r0)
        return 0.5 * (np.angle(u) + np.angle(v)) + 0.5 * np.pi

    return SqueezingSpectrum(r=r_func, psi=psi_func, l_d=l_d, model_tag="opa")


def flat_spectrum(r0: float = 0.0, l_d: float = 1.0,
                  psi0: float = 0.5 * np.pi) -> SqueezingSpectrum:
    """Frequency-independent spectrum; r0 = 0 gives the vacuum (G_X = 1)."""
    if r0 < 0:
        raise ValueError("r0 must be >= 0")

    def r_func(q: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(q, dtype=float), r0)

    def psi_func(q: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(q, dtype=float), psi0)

    return SqueezingSpectrum(r=r_func, psi=psi_func, l_d=l_d, model_tag="flat")


def tabulated_spectrum(r_table: np.ndarray, psi_table: np.ndarray,
                       l_d: float) -> SqueezingSpectrum:
    """Spectrum interpolated from two-column tables (q*l_d, r) and (q*l_d, psi).

    Values beyond the last tabulated frequency clamp to the final row, and
    both functions are even in q. Tables must start at q = 0.
    """
    r_table = np.atleast_2d(np.asarray(r_table, dtype=float))
    psi_table = np.atleast_2d(np.asarray(psi_table, dtype=float))
    for name, tab in (("r", r_table), ("psi", psi_table)):
        if tab.shape[1] != 2:
            raise ValueError(f"{name} table must have two columns")
        if tab.shape[0] < 2:
            raise ValueError(f"{name} table needs at least two rows")
        if tab[0, 0] != 0.0:
            raise ValueError(f"{name} table must start at q*l_d = 0")
        if np.any(np.diff(tab[:, 0]) <= 0):
            raise ValueError(f"{name} table abscissas must increase")
    if np.any(r_table[:, 1] < 0):
        raise ValueError("r values must be >= 0")

    def r_func(q: np.ndarray) -> np.ndarray:
        x = np.abs(np.asarray(q, dtype=float)) * l_d
        return np.interp(x, r_table[:, 0], r_table[:, 1])

    def psi_func(q: np.ndarray) -> np.ndarray:
        x = np.abs(np.asarray(q, dtype=float)) * l_d
        return np.interp(x, psi_table[:, 0], psi_table[:, 1])

    return SqueezingSpectrum(r=r_func, psi=psi_func, l_d=l_d, model_tag="custom")


def load_spectrum_tables(r_path: str, psi_path: str,
                         l_d: float) -> SqueezingSpectrum:
    """Load a custom spectrum from plain-text two-column numeric files."""
    return tabulated_spectrum(np.loadtxt(r_path), np.loadtxt(psi_path), l_d)


def green_x(spectrum: SqueezingSpectrum, q: ArrayLike) -> ArrayLike:
    """Quadrature spectral density exp(2r) cos^2 psi + exp(-2r) sin^2 psi."""
    q_arr = np.asarray(q, dtype=float)
    r = spectrum.r(q_arr)
    psi = spectrum.psi(q_arr)
    out = np.exp(2.0 * r) * np.cos(psi) ** 2 + np.exp(-2.0 * r) * np.sin(psi) ** 2
    if np.isscalar(q) or q_arr.ndim == 0:
        return float(out)
    return out


def orientation_dispersion(spectrum: SqueezingSpectrum) -> float:
    """d(psi)/d(q^2) at q = 0 by a one-sided finite-difference stencil.

    psi is even in q, so the derivative is taken in the variable u = q^2
    (third-order stencil at u = 0 with step h ~ 1e-3 / l_d^2); accurate to
    O(h^3) while staying clear of float cancellation.
    """
    h = 1e-3 / spectrum.l_d ** 2
    u = np.array([0.0, h, 2.0 * h, 3.0 * h])
    psi = np.asarray(spectrum.psi(np.sqrt(u)), dtype=float)
    return float((-11.0 * psi[0] + 18.0 * psi[1] - 9.0 * psi[2] + 2.0 * psi[3])
                 / (6.0 * h))


def with_orientation_offset(spectrum: SqueezingSpectrum,
                            delta_psi: float) -> SqueezingSpectrum:
    """Rigid rotation of the squeezing ellipses: psi(q) -> psi(q) + delta_psi."""
    if delta_psi == 0.0:
        return spectrum

    def psi_func(q: np.ndarray) -> np.ndarray:
        return spectrum.psi(np.asarray(q, dtype=float)) + delta_psi

    return SqueezingSpectrum(r=spectrum.r, psi=psi_func, l_d=spectrum.l_d,
                             model_tag=spectrum.model_tag)


def lens_correct(spectrum: SqueezingSpectrum) -> SqueezingSpectrum:
    """Compensate the quadratic orientation dispersion with a thin-lens phase.

    Returns a spectrum with psi(q) -> psi(q) - c * q^2 where c is the
    dispersion at q = 0, so the corrected ellipse orientation is stationary
    at low spatial frequency; r(q) is unchanged.
    """
    c = orientation_dispersion(spectrum)

    def psi_func(q: np.ndarray) -> np.ndarray:
        q_arr = np.asarray(q, dtype=float)
        return spectrum.psi(q_arr) - c * q_arr ** 2

    return SqueezingSpectrum(r=spectrum.r, psi=psi_func, l_d=spectrum.l_d,
                             model_tag=spectrum.model_tag)
