"""Single-photon wavepacket models.

A pulse provides three things: the amplitude ``xi(t)``, the remaining norm
``w(t) = integral_t^inf |xi|^2``, and the regularized ratio
``xi(t)/sqrt(w(t))``.  The ratio is a first-class operation because the
naive quotient tends to 0/0 at late times while the cascade embedding needs
it everywhere; for the exponential pulse it collapses analytically to
``sqrt(gamma)`` once the pulse is on.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ValidationError

NORM_TOL = 1e-8
W_FLOOR = 1e-12


class ExponentialPulse:
    """Decaying-exponential wavepacket, the emission of a two-level atom.

    xi(t) = sqrt(gamma) exp(-gamma (t - t0)/2) for t >= t0, zero before.
    Exactly normalized for every gamma > 0.
    """

    def __init__(self, gamma: float, t0: float = 0.0):
        if gamma <= 0:
            raise ValidationError(f"pulse rate gamma must be > 0, got {gamma}")
        self.gamma = float(gamma)
        self.t0 = float(t0)

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        tau = t - self.t0
        val = np.sqrt(self.gamma) * np.exp(-0.5 * self.gamma * np.maximum(tau, 0.0))
        out = np.where(tau >= 0, val, 0.0).astype(complex)
        return out if out.ndim else complex(out)

    def w(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.maximum(t - self.t0, 0.0)
        out = np.exp(-self.gamma * tau)
        return out if out.ndim else float(out)

    def xi_over_sqrt_w(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t - self.t0 >= 0, np.sqrt(self.gamma), 0.0).astype(complex)
        return out if out.ndim else complex(out)


class SampledPulse:
    """Wavepacket given by complex samples on a time grid.

    Linear interpolation between samples, zero outside the grid.  The tail
    norm uses trapezoid quadrature, precomputed once.  Construction rejects
    unnormalized input instead of silently rescaling.
    """

    def __init__(self, times: np.ndarray, samples: np.ndarray):
        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=complex)
        if times.ndim != 1 or times.shape != samples.shape:
            raise ValidationError("times and samples must be equal-length 1-d arrays")
        if times.size < 2:
            raise ValidationError("need at least two samples")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing")
        dens = np.abs(samples) ** 2
        norm = float(np.trapezoid(dens, times))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(
                f"pulse norm {norm:.10f} is not 1 within {NORM_TOL:g}; "
                "normalize the samples explicitly"
            )
        self.times = times
        self.samples = samples
        # cumulative tail integral of |xi|^2, from each grid point to the end
        seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(times)
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        self._tail = tail

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.times, self.samples.real, left=0.0, right=0.0)
        im = np.interp(t, self.times, self.samples.imag, left=0.0, right=0.0)
        out = re + 1j * im
        return out if out.ndim else complex(out)

    def w(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.times, self._tail, left=1.0, right=0.0)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def xi_over_sqrt_w(self, t):
        t = np.asarray(t, dtype=float)
        wv = np.asarray(self.w(t), dtype=float)
        xv = np.asarray(self.xi(t), dtype=complex)
        out = np.where(wv > W_FLOOR, xv / np.sqrt(np.maximum(wv, W_FLOOR)), 0.0)
        return out if out.ndim else complex(out)


class ZeroPulse:
    """No input photon: xi = 0, w = 1.  Used by reference models."""

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        return out if out.ndim else 0j

    def w(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape)
        return out if out.ndim else 1.0

    def xi_over_sqrt_w(self, t):
        return self.xi(t)


def load_sampled_pulse(path) -> SampledPulse:
    """Read a sampled pulse from CSV columns ``t,re_xi[,im_xi]``."""
    times, res, ims = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0].strip() != "t":
            raise ValidationError(f"expected header starting with 't', got {header}")
        has_im = len(header) >= 3
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            res.append(float(row[1]))
            ims.append(float(row[2]) if has_im else 0.0)
    samples = np.asarray(res) + 1j * np.asarray(ims)
    return SampledPulse(np.asarray(times), samples)


def pulse_grids(pulse, times: np.ndarray):
    """(xi, |xi|^2, xi/sqrt(w)) evaluated on a time grid, for the kernels."""
    xi = np.asarray(pulse.xi(times), dtype=complex)
    ratio = np.asarray(pulse.xi_over_sqrt_w(times), dtype=complex)
    return xi, np.abs(xi) ** 2, ratio
