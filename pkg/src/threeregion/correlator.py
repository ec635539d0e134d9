"""Vacuum Wightman function of the free Klein-Gordon field and the smeared
second-order amplitudes of three point-like two-level detectors.

Notation: for detector i with window eps_i, gap Omega_i at position x_i,

    Phi_i^(+/-) = int dt eps_i(t) exp(+/- i Omega_i t) phi(x_i, t)

and d_ij^(ab) = <0| Phi_i^a Phi_j^b |0> in that operator order.
"""

from dataclasses import dataclass, field as dc_field
import hashlib
import itertools
import math

import numpy as np
from scipy.special import kv

from . import quadrature as quad
from .errors import ConfigurationError
from .windows import WindowSpec, eval_window, max_frequency

DETECTOR_IDS = ("A", "B", "C")
SIGNS = ("-", "+")
DEFAULT_LADDER_FRACTIONS = (1e-2, 5e-3, 2.5e-3)
FOUR_PI_SQ = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class FieldSpec:
    """Free scalar field.

    ``reg`` is the i*epsilon regulator for direct evaluations of
    :func:`wightman`; ``ladder`` is the decreasing sequence of regulators
    used for amplitudes (None: 1e-2, 5e-3, 2.5e-3 times the window duration).
    """

    mass: float = 0.0
    reg: float = 1e-3
    ladder: tuple | None = None
    rtol: float = 1e-9

    def __post_init__(self):
        if not self.mass >= 0:
            raise ConfigurationError(f"mass must be >= 0, got {self.mass}")
        if not self.reg > 0:
            raise ConfigurationError(f"regulator must be > 0, got {self.reg}")
        if self.ladder is not None:
            lad = tuple(float(x) for x in self.ladder)
            if len(lad) < 1 or any(x <= 0 for x in lad) or any(
                    b >= a for a, b in zip(lad, lad[1:])):
                raise ConfigurationError("regulator ladder must be positive and strictly decreasing")
            object.__setattr__(self, "ladder", lad)

    regulated = True

    def ladder_for(self, T):
        if self.ladder is not None:
            return self.ladder
        return tuple(f * T for f in DEFAULT_LADDER_FRACTIONS)

    def two_point(self, det_i, det_j, reg):
        """tau -> <0| phi(x_i, t) phi(x_j, t - tau) |0> at regulator ``reg``."""
        r = separation(det_i, det_j)
        return lambda tau: wightman(self, r, tau, reg)


@dataclass(frozen=True)
class DetectorSpec:
    id: str
    position: tuple
    omega: float
    window: WindowSpec

    def __post_init__(self):
        if self.id not in DETECTOR_IDS:
            raise ConfigurationError(f"detector id must be one of {DETECTOR_IDS}, got {self.id!r}")
        pos = tuple(float(x) for x in self.position)
        if len(pos) != 3:
            raise ConfigurationError("detector position must be a 3-vector")
        object.__setattr__(self, "position", pos)

    def scaled(self, factor):
        return DetectorSpec(self.id, self.position, self.omega, self.window.scaled(factor))


def separation(det_i, det_j):
    return float(np.linalg.norm(np.subtract(det_i.position, det_j.position)))


def wightman(field, r, dt, reg=None):
    """<0| phi(x, t) phi(y, t') |0> with r = |x - y|, dt = t - t'.

    Massless: 1 / (4 pi^2 (r^2 - (dt - i reg)^2)).
    Massive:  m K_1(m s) / (4 pi^2 s),  s = sqrt(r^2 - (dt - i reg)^2).
    Broadcasts over array arguments.
    """
    if field.mass < 0:
        raise ConfigurationError("negative mass")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ConfigurationError("negative separation")
    eps = field.reg if reg is None else reg
    s2 = r * r - (np.asarray(dt, dtype=float) - 1j * eps) ** 2
    if field.mass == 0:
        out = 1.0 / (FOUR_PI_SQ * s2)
    else:
        s = np.sqrt(s2)
        out = field.mass * kv(1, field.mass * s) / (FOUR_PI_SQ * s)
    return complex(out) if np.ndim(out) == 0 else out


def phased_window(det, sign):
    """t -> eps(t) exp(sign i Omega t)."""
    sgn = 1.0 if sign == "+" else -1.0
    win, om = det.window, det.omega

    def f(t):
        return eval_window(win, t) * np.exp(1j * sgn * om * t)
    return f


def _panels(extent, omega_max, order=quad.DEFAULT_ORDER, nodes_per_period=8):
    periods = omega_max * extent / (2.0 * math.pi)
    return max(2, math.ceil(periods * nodes_per_period / order))


def ordered_integral(fi, fj, w, T, later, singular_h0=None, omega_max=0.0,
                     rtol=1e-9):
    """Half of  int int dt dt' fi(t) fj(t') w(t - t')  over [-T/2, T/2]^2.

    ``later=True`` integrates t > t' (tau = t - t' in [0, T]), otherwise
    t < t'.  Coordinates (tau, s) with t = tau/2 + s (T - |tau|)/2 map the
    triangle onto a rectangle.  ``singular_h0`` grades the tau panels
    geometrically towards tau = 0, for a regulated pole at the origin.

    Returns ``(value, error_estimate)``.
    """
    if singular_h0:
        tau_edges = quad.graded_edges(0.0, T, singular_h0)
        # keep the oscillation criterion on the coarse outer panels
        n_extra = _panels(T, omega_max)
        if len(tau_edges) - 1 < n_extra:
            tau_edges = np.union1d(tau_edges, quad.uniform_edges(0.0, T, n_extra))
    else:
        tau_edges = quad.uniform_edges(0.0, T, _panels(T, omega_max))
    if not later:
        tau_edges = -tau_edges[::-1]
    s_edges = quad.uniform_edges(-1.0, 1.0, _panels(T, omega_max))

    def integrand(tau, s):
        half = 0.5 * (T - np.abs(tau))
        t = 0.5 * tau + half * s
        return fi(t) * fj(t - tau) * w(tau) * half

    val, err, _ = quad.integrate_2d(integrand, tau_edges, s_edges, rtol=rtol)
    return val, err


def _common_T(*dets):
    return max(d.window.T for d in dets)


def _omega_max(*dets):
    return sum(d.omega + max_frequency(d.window) for d in dets)


def _ladder_integral(field, det_i, det_j, halves, fi, fj, time_ordered=False):
    """Evaluate the requested halves on the regulator ladder of ``field``.

    ``field`` supplies ``two_point(det_i, det_j, reg)`` and
    ``ladder_for(T)``; a regulated field whose two detectors coincide
    gets panels graded towards the pole at tau = 0.
    Returns ``(values_on_ladder, quadrature_error)``.
    """
    T = _common_T(det_i, det_j)
    singular = field.regulated and det_i.position == det_j.position
    om = _omega_max(det_i, det_j)
    vals, qerr = [], 0.0
    for reg in field.ladder_for(T):
        fwd = field.two_point(det_i, det_j, reg)
        # T-product for t < t' is phi_j(t') phi_i(t), i.e. W_ji(-tau)
        bwd = field.two_point(det_j, det_i, reg)
        total = 0j
        for later in halves:
            if time_ordered and not later:
                w = (lambda tau, bwd=bwd: bwd(-tau))
            else:
                w = fwd
            v, e = ordered_integral(fi, fj, w, T, later,
                                    singular_h0=0.25 * reg if singular else None,
                                    omega_max=om, rtol=field.rtol)
            total += v
            qerr = max(qerr, e)
        vals.append(total)
    return vals, qerr


def _pair_info(field, det_i, alpha, det_j, beta):
    vals, qerr = _ladder_integral(field, det_i, det_j, (True, False),
                                  phased_window(det_i, alpha), phased_window(det_j, beta))
    est, resid = quad.richardson(vals)
    return est, qerr, resid


def smeared_pair(field, det_i, alpha, det_j, beta):
    """d_ij^(alpha beta) = <0| Phi_i^alpha Phi_j^beta |0>, regulator -> 0."""
    return _pair_info(field, det_i, alpha, det_j, beta)[0]


def _theta_info(field, det):
    vals, qerr = _ladder_integral(field, det, det, (True,),
                                  phased_window(det, "-"), phased_window(det, "+"))
    re, resid = quad.richardson([v.real for v in vals])
    # the imaginary part (level shift) diverges as reg -> 0; report it at
    # the smallest regulator instead of extrapolating
    return complex(re.real, vals[-1].imag), qerr, resid


def theta_term(field, det):
    """Time-ordered, down-projected second-order self term of one detector.

    Theta_i = int int_{t > t'} eps(t) eps(t') exp(-i Omega (t - t')) W(0, t - t').
    The real part is extrapolated to zero regulator and satisfies
    2 Re Theta_i = d_ii^(-+); the imaginary part is the regulator-dependent
    level shift evaluated at the smallest ladder regulator.
    """
    return _theta_info(field, det)[0]


def _exchange_info(field, det_i, det_j):
    vals, qerr = _ladder_integral(field, det_i, det_j, (True, False),
                                  phased_window(det_i, "+"), phased_window(det_j, "+"),
                                  time_ordered=True)
    est, resid = quad.richardson(vals)
    return est, qerr, resid


def exchange_amplitude(field, det_i, det_j):
    """<0| T[Phi_i^+ Phi_j^+] |0>; equals d_ij^(++) for spacelike detectors."""
    return _exchange_info(field, det_i, det_j)[0]


def config_id(*objs):
    return hashlib.sha1(repr(objs).encode()).hexdigest()[:16]


@dataclass
class AmplitudeSet:
    """All second-order amplitudes of a three-detector configuration.

    ``pairs[(i, a, j, b)]`` is d_ij^(ab) (Wightman order, i on the left),
    ``exchange[(i, j)]`` the time-ordered <T Phi_i^+ Phi_j^+>, ``theta[i]``
    the self term and ``C = 2 Re sum_i theta[i]``.
    """

    ids: tuple
    pairs: dict
    exchange: dict
    theta: dict
    C: float
    meta: dict = dc_field(default_factory=dict)

    def pair(self, left, right):
        key = (left[0], left[1], right[0], right[1])
        try:
            return self.pairs[key]
        except KeyError:
            raise ConfigurationError(
                f"pair amplitude d_{key[0]}{key[2]}^{key[1]}{key[3]} not available") from None

    def d(self, ij, signs):
        return self.pairs[(ij[0], signs[0], ij[1], signs[1])]

    def to_dict(self):
        """Flat JSON-friendly mapping: d_AB_pp, d_AA_mp, ..., C."""
        tag = {"+": "p", "-": "m"}
        out, imag = {}, {}
        for (i, a, j, b), v in sorted(self.pairs.items()):
            key = f"d_{i}{j}_{tag[a]}{tag[b]}"
            out[key] = v.real
            imag[key] = v.imag
        for (i, j), v in sorted(self.exchange.items()):
            out[f"x_{i}{j}_pp"] = v.real
            imag[f"x_{i}{j}_pp"] = v.imag
        for i, v in sorted(self.theta.items()):
            out[f"theta_{i}"] = v.real
            imag[f"theta_{i}"] = v.imag
        out["C"] = self.C
        out["imag"] = imag
        out["meta"] = dict(self.meta)
        return out

    def scaled(self, lam):
        """Amplitudes for all couplings multiplied by ``lam`` (exact lam^2 law)."""
        l2 = lam * lam
        return AmplitudeSet(self.ids,
                            {k: v * l2 for k, v in self.pairs.items()},
                            {k: v * l2 for k, v in self.exchange.items()},
                            {k: v * l2 for k, v in self.theta.items()},
                            self.C * l2, dict(self.meta))


def check_causality(detectors):
    T = _common_T(*detectors)
    for di, dj in itertools.combinations(detectors, 2):
        L = separation(di, dj)
        if not L > T:
            raise ConfigurationError(
                f"detectors {di.id} and {dj.id} are not causally disconnected: "
                f"L = {L:g} <= T = {T:g}")


def amplitude_set(field, detectors, check_causal=True):
    """Every amplitude entering the three-detector density matrix.

    Computes d_ij^(ab) for all ordered detector pairs and sign pairs, the
    time-ordered exchange amplitudes, the self terms and C = 2 Re sum Theta.
    Raises ConfigurationError when two detectors are not spacelike separated
    for the whole interaction (L_ij <= T).
    """
    detectors = tuple(detectors)
    ids = tuple(d.id for d in detectors)
    if len(detectors) != 3 or len(set(ids)) != 3:
        raise ConfigurationError("need exactly three distinct detectors A, B, C")
    if check_causal:
        check_causality(detectors)
    pairs, exchange, theta = {}, {}, {}
    qerr = resid = 0.0
    resid_by_key = {}
    for di, dj in itertools.product(detectors, repeat=2):
        for a, b in itertools.product(SIGNS, repeat=2):
            v, e, rsd = _pair_info(field, di, a, dj, b)
            pairs[(di.id, a, dj.id, b)] = v
            qerr = max(qerr, e)
            resid_by_key[f"d_{di.id}{dj.id}^{a}{b}"] = rsd
        if di.id != dj.id:
            v, e, rsd = _exchange_info(field, di, dj)
            exchange[(di.id, dj.id)] = v
            qerr = max(qerr, e)
    for d in detectors:
        v, e, rsd = _theta_info(field, d)
        theta[d.id] = v
        qerr = max(qerr, e)
    resid = max(resid_by_key.values())
    if not math.isfinite(resid):
        resid = 0.0
    C = 2.0 * sum(v.real for v in theta.values())
    meta = {
        "config_id": config_id(field, detectors),
        "quadrature_rtol": field.rtol,
        "quadrature_error": qerr,
        "regulator_ladder": [x for x in field.ladder_for(_common_T(*detectors)) if x],
        "extrapolation_residual": resid,
        "C_convention": "C = 2 Re sum_i Theta_i",
        "theta_imag": "level shift at smallest regulator (divergent as reg -> 0)",
    }
    return AmplitudeSet(ids, pairs, exchange, theta, C, meta)
