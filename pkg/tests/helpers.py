"""Shared random-field builders for the test suite."""

import numpy as np

from phdisk import GridFunction, w12_norm


def random_smooth_bandlimited(grid, rng, max_mode, real=False, amplitude=1.0):
    """Band-limited field whose mode-n radial profile vanishes like rho^|n|.

    These are genuine smooth disk functions; a profile staying O(1) at the
    origin would make the Cauchy transform log-singular there and the
    identity checks meaningless.
    """
    rows = np.zeros((grid.n_theta, grid.n_r), dtype=complex)
    r = grid.radii
    for idx in range(grid.n_theta):
        n = grid.mode_numbers[idx]
        if abs(n) > max_mode:
            continue
        c = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / (1.0 + abs(n))
        with np.errstate(under="ignore"):
            rows[idx] = r ** abs(n) * (c[0] + c[1] * r + c[2] * r * r)
    vals = np.fft.ifft(rows.T * grid.n_theta, axis=1) * amplitude
    if real:
        vals = vals.real.astype(complex)
    return GridFunction(grid, vals)


def random_initial_s(grid, rng, scale=0.1):
    """Small random band-limited field, ||s||_{W^{1,2}} = scale."""
    f = random_smooth_bandlimited(grid, rng, 6)
    return f * (scale / w12_norm(f))
