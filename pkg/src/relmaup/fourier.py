"""Trigonometric interpolation of periodic samples on a uniform grid.

Used wherever a discrete loop or time series has to be evaluated off-grid:
resampling between grid sizes, reparameterization and their inverses.
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator


class PeriodicInterpolant:
    """Band-limited interpolant of samples ``y_j = y(j / n)`` on ``[0, 1)``.

    ``values`` may be ``(n,)`` or ``(n, d)``. The Nyquist coefficient of an
    even-length grid is split symmetrically so the interpolant is real.
    """

    def __init__(self, values):
        y = np.asarray(values, dtype=float)
        self.scalar = y.ndim == 1
        y = y.reshape(len(y), -1)
        n = len(y)
        coef = np.fft.fft(y, axis=0) / n
        k = np.fft.fftfreq(n, 1.0 / n)
        if n % 2 == 0:
            nyq = n // 2
            coef = np.concatenate([coef, coef[nyq : nyq + 1] * 0.5], axis=0)
            coef[nyq] *= 0.5
            k = np.concatenate([k, [float(nyq)]])
        self.n = n
        self.coef = coef
        self.k = k

    def _shape(self, out):
        return out[..., 0] if self.scalar else out

    def __call__(self, s, derivative: int = 0):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        phase = np.exp(2j * np.pi * np.outer(s, self.k))
        c = self.coef * (2j * np.pi * self.k[:, None]) ** derivative
        return self._shape(np.real(phase @ c))

    def mean(self):
        return self._shape(np.real(self.coef[:1]))[0]

    def antiderivative(self, s):
        """Integral of the interpolant from 0 to ``s`` (exact for the trig polynomial)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        k = self.k
        nz = k != 0
        w = np.zeros_like(self.coef)
        w[nz] = self.coef[nz] / (2j * np.pi * k[nz, None])
        phase = np.exp(2j * np.pi * np.outer(s, k[nz]))
        osc = np.real(phase @ w[nz]) - np.real(np.sum(w[nz], axis=0))
        return self._shape(np.real(self.coef[0])[None, :] * s[:, None] + osc)

    def on_grid(self, n: int, derivative: int = 0):
        return self(np.arange(n) / n, derivative)


def invert_monotone(func, dfunc, grid, table, targets, newton_steps: int = 8):
    """Solve ``func(s) = target`` for each target given a monotone table.

    A monotone cubic (PCHIP) fit of ``table`` over ``grid`` gives the start
    value; Newton steps with the exact derivative ``dfunc`` refine it.
    """
    guess = PchipInterpolator(table, grid)(targets)
    s = np.asarray(guess, dtype=float)
    for _ in range(newton_steps):
        step = (func(s) - targets) / dfunc(s)
        s = s - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return s
