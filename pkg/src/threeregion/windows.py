"""Coupling window functions on [-T/2, T/2].

All families are real, even in t and vanish identically outside the
support.  Every family has a complex *generating function* whose real part
(or modulus, for the non-oscillatory families) is the window; its phase
derivative defines the local frequency used to diagnose superoscillation.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError

FAMILIES = ("gaussian", "raised-cosine", "superoscillatory", "tabulated")

# sigma = T/12 puts exp(-(T/2)^2 / 2 sigma^2) = exp(-18) ~ 1.5e-8 at the edges
DEFAULT_SIGMA_FRACTION = 1.0 / 12.0


@dataclass(frozen=True)
class WindowSpec:
    """Parametric coupling window eps(t) = eps0 * shape(t) on [-T/2, T/2].

    ``table`` (tabulated family only) holds ``(t, value)`` pairs on
    ``0 <= t <= T/2``; the window is their even extension.
    """

    family: str
    eps0: float = 1.0
    T: float = 1.0
    sigma: float | None = None
    N: int | None = None
    a: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown window family {self.family!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigurationError(f"window duration T must be > 0, got {self.T}")
        if not math.isfinite(self.eps0):
            raise ConfigurationError("eps0 must be finite")
        if self.family == "gaussian":
            if self.sigma is None:
                object.__setattr__(self, "sigma", DEFAULT_SIGMA_FRACTION * self.T)
            if not self.sigma > 0:
                raise ConfigurationError(f"gaussian width sigma must be > 0, got {self.sigma}")
        elif self.family == "superoscillatory":
            if self.N is None or int(self.N) != self.N or self.N < 1:
                raise ConfigurationError(f"band index N must be an integer >= 1, got {self.N}")
            if self.a is None or not self.a > 1:
                raise ConfigurationError(
                    f"boost a must be > 1 for a superoscillatory window, got {self.a}")
            object.__setattr__(self, "N", int(self.N))
        elif self.family == "tabulated":
            if not self.table or len(self.table) < 4:
                raise ConfigurationError("tabulated window needs at least 4 (t, value) samples")
            ts = np.array([p[0] for p in self.table], dtype=float)
            if abs(ts[0]) > 1e-12 * self.T or abs(ts[-1] - self.T / 2) > 1e-12 * self.T:
                raise ConfigurationError("tabulated samples must span exactly [0, T/2]")
            if np.any(np.diff(ts) <= 0):
                raise ConfigurationError("tabulated sample times must be strictly increasing")

    def scaled(self, factor):
        """Copy with the coupling amplitude multiplied by ``factor``."""
        return WindowSpec(self.family, self.eps0 * factor, self.T, self.sigma,
                          self.N, self.a, self.table)


def gaussian_window(eps0=1.0, T=1.0, sigma=None):
    return WindowSpec("gaussian", eps0=eps0, T=T, sigma=sigma)


def raised_cosine_window(eps0=1.0, T=1.0):
    return WindowSpec("raised-cosine", eps0=eps0, T=T)


def superosc_window(N, a, eps0=1.0, T=1.0):
    """Aharonov-Berry superoscillatory window.

    eps(t) = eps0 * Re[(cos x + i a sin x)^N],  x = 2 pi t / T,  |t| <= T/2.

    The generating function is a trigonometric polynomial of degree N on
    the period T, yet its phase winds at N*a*(2 pi/T) around t = 0.
    """
    if a is not None and not a > 1:
        raise ConfigurationError(f"a = {a} <= 1 is not superoscillatory")
    return WindowSpec("superoscillatory", eps0=eps0, T=T, N=N, a=a)


def tabulated_window(t, values, eps0=1.0, T=None):
    """Window given by samples on [0, T/2], extended evenly."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if T is None:
        T = 2.0 * float(t[-1])
    return WindowSpec("tabulated", eps0=eps0, T=T,
                      table=tuple(zip(t.tolist(), values.tolist())))


@lru_cache(maxsize=64)
def _spline(spec):
    ts = np.array([p[0] for p in spec.table])
    vs = np.array([p[1] for p in spec.table])
    # zero slope at t = 0 keeps the even extension smooth
    return CubicSpline(ts, vs, bc_type=((1, 0.0), "not-a-knot"))


def _shape(spec, u):
    """Unit-amplitude profile evaluated at u = |t| <= T/2."""
    T = spec.T
    if spec.family == "gaussian":
        return np.exp(-0.5 * (u / spec.sigma) ** 2)
    if spec.family == "raised-cosine":
        return np.cos(np.pi * u / T) ** 2
    if spec.family == "superoscillatory":
        x = 2.0 * np.pi * u / T
        return np.real((np.cos(x) + 1j * spec.a * np.sin(x)) ** spec.N)
    return _spline(spec)(u)


def eval_window(spec, t):
    """eps(t); exactly zero for |t| > T/2 and exactly even in t.

    Accepts scalars or arrays.
    """
    t = np.asarray(t, dtype=float)
    u = np.abs(t)
    inside = u <= 0.5 * spec.T
    # evaluate at |t| so that eps(t) == eps(-t) bit for bit
    val = np.where(inside, _shape(spec, np.where(inside, u, 0.0)), 0.0)
    out = spec.eps0 * val
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _analytic_coefficients(spec, samples=2048):
    T = spec.T
    tk = -0.5 * T + T * np.arange(samples) / samples
    c = np.fft.fft(eval_window(spec, tk)) / samples
    n = np.fft.fftfreq(samples, d=1.0 / samples)
    keep = (n > 0) & (n < samples // 2)
    coeffs = np.concatenate(([c[0]], 2.0 * c[keep]))
    modes = np.concatenate(([0.0], n[keep]))
    return modes, coeffs


def generator(spec, t):
    """Complex generating function of the window at time t (scalar)."""
    t = float(t)
    if abs(t) > 0.5 * spec.T:
        return 0j
    if spec.family in ("gaussian", "raised-cosine"):
        return complex(eval_window(spec, t))
    if spec.family == "superoscillatory":
        x = 2.0 * np.pi * t / spec.T
        return spec.eps0 * (math.cos(x) + 1j * spec.a * math.sin(x)) ** spec.N
    # analytic signal of the periodic extension
    modes, coeffs = _analytic_coefficients(spec)
    phase = np.exp(2j * np.pi * modes * (t + 0.5 * spec.T) / spec.T)
    return complex(np.dot(coeffs, phase))


def local_frequency(spec, t, h=None):
    """Instantaneous angular frequency of the generating function at t.

    Central finite difference of the phase.  Returns ``nan`` when the
    generating function (numerically) vanishes at t, where the phase is
    undefined.
    """
    if h is None:
        h = 1e-6 * spec.T
    gp = generator(spec, t + h)
    gm = generator(spec, t - h)
    scale = max(abs(spec.eps0), 1e-300)
    if abs(gp) < 1e-12 * scale or abs(gm) < 1e-12 * scale:
        return math.nan
    return float(np.angle(gp * np.conj(gm)) / (2.0 * h))


def fourier_coefficients(spec, samples=512):
    """Fourier coefficients c_n of the period-T extension of the window.

    Returns ``(n, c)`` with n = -samples/2 .. samples/2 - 1 in ascending order.
    """
    T = spec.T
    tk = -0.5 * T + T * np.arange(samples) / samples
    c = np.fft.fftshift(np.fft.fft(eval_window(spec, tk)) / samples)
    # the grid starts at -T/2; undo that shift so c_n refer to exp(2 pi i n t / T)
    n = np.fft.fftshift(np.fft.fftfreq(samples, d=1.0 / samples)).astype(int)
    c = c * np.exp(-1j * np.pi * n)
    return n, c


def band_index(spec, rel_tol=1e-12, samples=512):
    """Largest |n| whose Fourier coefficient exceeds rel_tol * max|c|."""
    n, c = fourier_coefficients(spec, samples)
    mag = np.abs(c)
    if mag.max() == 0:
        return 0
    return int(np.abs(n[mag > rel_tol * mag.max()]).max())


def max_frequency(spec):
    """Rough upper bound on the angular frequency content of the window.

    Used only to size quadrature panels.
    """
    T = spec.T
    if spec.family == "gaussian":
        return 6.0 / spec.sigma
    if spec.family == "raised-cosine":
        return 2.0 * np.pi / T
    if spec.family == "superoscillatory":
        return spec.N * spec.a * 2.0 * np.pi / T
    return 2.0 * np.pi * band_index(spec, 1e-10) / T


def sample_window(spec, n=201):
    """(t, eps(t)) on a uniform grid over [-T/2, T/2]."""
    t = np.linspace(-0.5 * spec.T, 0.5 * spec.T, n)
    return t, eval_window(spec, t)
