"""Brute-force reference quadratures used to cross-validate the pixel kernel.

The production route averages the noise field over pixel surfaces
analytically (that is what the sinc^2 kernel encodes). The reference here
does NOT use that kernel: it integrates the real-space quadrature
correlation directly over the two pixel surfaces,

    C(i, j) = (1/S) Int_{S_i} d2r' Int_{S_j} d2r''  <X(r') X(r'')>,

with <X(r')X(r'')> = (1/2) delta2(r' - r'') + K_exc(|r' - r''|) and the
excess correlation obtained by its own Fourier-Bessel quadrature of
G_X - 1. The delta part contributes exactly overlap(S_i, S_j) / (2 S); the
smooth part is integrated with a tensor Gauss-Legendre rule over the four
surface coordinates. Deliberately independent choices (trapezoid-panel
Hankel transform, different taper and grids) keep this implementation a
genuine oracle for the spectral-kernel route.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import j0

from .pixels import PixelGrid
from .squeezing import SqueezingSpectrum, green_x


def _excess_correlation_reference(spectrum: SqueezingSpectrum,
                                  v_max: float,
                                  theta_max: float = 6000.0,
                                  taper_fraction: float = 0.35,
                                  points_per_period: int = 24) -> CubicSpline:
    """Tabulate K_exc(v) by composite-trapezoid Fourier-Bessel quadrature."""
    l_d = spectrum.l_d
    v_max_ld = max(v_max / l_d, 0.5)
    # uniform in sqrt(theta) so both the spectrum phase (theta) and the
    # Bessel phase (sqrt(theta) v) are resolved everywhere
    dw = min(
        np.pi / (points_per_period * 0.5 * np.sqrt(theta_max)),  # d(theta) piece
        np.pi / (points_per_period * 0.25 * v_max_ld),           # Bessel piece
    )
    w = np.arange(0.0, np.sqrt(theta_max), dw)
    theta = w ** 2
    q = np.sqrt(theta) / l_d
    gm1 = np.asarray(green_x(spectrum, q), dtype=float) - 1.0
    window = np.ones_like(theta)
    t0 = (1.0 - taper_fraction) * theta_max
    tail = theta > t0
    window[tail] = 0.5 * (1.0 + np.cos(np.pi * (theta[tail] - t0) / (theta_max - t0)))
    # d(theta) = 2 w dw
    weights = gm1 * window * 2.0 * w * dw
    weights[0] *= 0.5
    weights[-1] *= 0.5

    v_grid = np.linspace(0.0, v_max, max(int(48 * v_max / l_d), 64))
    values = np.empty_like(v_grid)
    chunk = max(1, int(3e7 // max(len(w), 1)))
    for i0 in range(0, len(v_grid), chunk):
        args = np.outer(v_grid[i0:i0 + chunk] / l_d, w)
        values[i0:i0 + chunk] = j0(args) @ weights
    values /= 4.0 * np.pi * l_d ** 2
    return CubicSpline(v_grid, values)


def _pixel_overlap_area(grid: PixelGrid, i: int, j: int) -> float:
    dx, dy = grid.separation(i, j)
    side = grid.delta
    ox = max(0.0, side - abs(dx))
    oy = max(0.0, side - abs(dy))
    return ox * oy


def surface_covariance(grid: PixelGrid, spectrum: SqueezingSpectrum | None,
                       i: int, j: int, nodes_per_axis: int = 24) -> float:
    """Pixel-averaged covariance via direct surface-by-surface quadrature.

    Slow but implementation-independent; intended for verification runs and
    the acceptance suite, not for sweeps.
    """
    delta = grid.delta
    coincident = _pixel_overlap_area(grid, i, j) / (2.0 * delta ** 2)
    if spectrum is None:
        return coincident
    dx, dy = grid.separation(i, j)
    v_max = float(np.hypot(abs(dx) + delta, abs(dy) + delta)) + 1e-9
    k_exc = _excess_correlation_reference(spectrum, v_max)

    x, w = np.polynomial.legendre.leggauss(nodes_per_axis)
    pos = 0.5 * delta * (x + 1.0)
    wts = 0.5 * delta * w
    # separations between the two surfaces along each axis
    sep_x = pos[:, None] - (pos[None, :] + dx)
    sep_y = pos[:, None] - (pos[None, :] + dy)
    wx = np.outer(wts, wts)
    dist = np.sqrt((sep_x.ravel() ** 2)[:, None] + (sep_y.ravel() ** 2)[None, :])
    # excess two-point correlation is K_exc/2 (vacuum carries the other half
    # as the delta term handled above)
    kernel = 0.5 * k_exc(dist)
    excess = float(wx.ravel() @ kernel @ wx.ravel()) / delta ** 2
    return coincident + excess
