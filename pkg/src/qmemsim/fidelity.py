"""Multipixel quantum-state-transfer fidelity from noise covariances.

For coherent-state inputs the N-pixel fidelity of the memory cycle is

    F_N = [det(I + C_X) det(I + C_P)]^(-1/2),

evaluated through symmetric eigenvalues in log space to stay stable for
large N; the average fidelity per pixel is F_av = F_N^(1/N). A circulant
route diagonalizes translation-invariant covariances on periodic grids with
a 2D FFT instead of a dense eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pixels import NoiseCovariance, PixelGrid

EIGENVALUE_TOL = 1e-9
TRANSLATION_TOL = 1e-8


@dataclass(frozen=True)
class FidelityResult:
    """Fidelity of an N-pixel transfer plus the noise eigenvalues behind it."""

    f_n: float
    f_av: float
    n: int
    eigenvalues_x: np.ndarray
    eigenvalues_p: np.ndarray


def classical_benchmark() -> float:
    """Best classical (measure-and-reprepare) fidelity for coherent inputs."""
    return 0.5


def _fidelity_from_eigenvalues(lx: np.ndarray, lp: np.ndarray,
                               n_pixels: int) -> FidelityResult:
    for name, ev in (("cx", lx), ("cp", lp)):
        if np.min(ev) < -EIGENVALUE_TOL:
            raise ValueError(
                f"{name} has negative eigenvalue {np.min(ev):.3e}; "
                "unphysical noise matrix")
    lx = np.clip(lx, 0.0, None)
    lp = np.clip(lp, 0.0, None)
    log_fn = -0.5 * (np.sum(np.log1p(lx)) + np.sum(np.log1p(lp)))
    return FidelityResult(
        f_n=float(np.exp(log_fn)),
        f_av=float(np.exp(log_fn / n_pixels)),
        n=n_pixels,
        eigenvalues_x=np.sort(lx),
        eigenvalues_p=np.sort(lp),
    )


def fidelity_n(noise: NoiseCovariance) -> FidelityResult:
    """Dense-eigenvalue evaluation of the fidelity determinant formula."""
    lx = np.linalg.eigvalsh(noise.cx)
    lp = np.linalg.eigvalsh(noise.cp)
    return _fidelity_from_eigenvalues(lx, lp, noise.n_pixels)


def _circulant_eigenvalues(matrix: np.ndarray, grid: PixelGrid) -> np.ndarray:
    """Eigenvalues of a block-circulant covariance via the 2D DFT of row 0.

    Eigenvectors of a translation-invariant covariance on the periodic
    lattice are plane waves with quantized 2D wave vectors, so the spectrum
    is the DFT of one row reshaped onto the lattice.
    """
    n = grid.n_side
    first_row = matrix[0].reshape(n, n)
    eigs = np.fft.fft2(first_row)
    if np.max(np.abs(eigs.imag)) > 1e-8 * max(np.max(np.abs(eigs.real)), 1.0):
        raise ValueError("covariance row is not symmetric under the lattice DFT")
    return np.asarray(eigs.real.ravel())


def _max_translation_asymmetry(matrix: np.ndarray, grid: PixelGrid) -> float:
    n = grid.n_side
    first_row = matrix[0].reshape(n, n)
    worst = 0.0
    for i in range(grid.n_pixels):
        ix, iy = i % n, i // n
        for j in range(grid.n_pixels):
            jx, jy = j % n, j // n
            expected = first_row[(jy - iy) % n, (jx - ix) % n]
            worst = max(worst, abs(matrix[i, j] - expected))
    return worst


def fidelity_circulant(noise: NoiseCovariance, grid: PixelGrid) -> FidelityResult:
    """FFT-diagonalized fidelity for periodic translation-invariant noise.

    Rejects grids that are not periodic and covariances that are not
    translation invariant (within 1e-8, reported as max asymmetry).
    """
    if not grid.periodic:
        raise ValueError("circulant route requires a periodic grid")
    if grid.n_pixels != noise.n_pixels:
        raise ValueError("grid size does not match covariance size")
    for name, m in (("cx", noise.cx), ("cp", noise.cp)):
        asym = _max_translation_asymmetry(m, grid)
        if asym > TRANSLATION_TOL:
            raise ValueError(
                f"{name} not translation invariant (max asymmetry {asym:.3e})")
    lx = _circulant_eigenvalues(noise.cx, grid)
    lp = _circulant_eigenvalues(noise.cp, grid)
    return _fidelity_from_eigenvalues(lx, lp, noise.n_pixels)
