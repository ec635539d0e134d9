"""Brute-force reference: a few-mode 1+1D ring field in a truncated Fock space.

Used to validate the perturbative pipeline, not to reproduce continuum
numbers.  The ring has no strict light cone at finite mode number, so the
detectors here are never causally disconnected; the checks concern the
algebra (Wick's theorem, operator ordering, perturbative order).

Field:  phi(x, t) = sum_k [a_k u_k(x, t) + h.c.],
        u_k = exp(i (k x - w_k t)) / sqrt(2 w_k L),   k = 2 pi m / L.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools
import logging
import math

import numpy as np
from scipy import sparse

from . import quadrature as quad
from .correlator import (DetectorSpec, amplitude_set, phased_window, _common_T)
from .errors import ConfigurationError, NumericalError, TruncationError
from .rho import Rho8, assemble
from .wick import OperatorLabel, entry_string, npoint
from .windows import eval_window, gaussian_window, max_frequency

log = logging.getLogger(__name__)

HILBERT_BUDGET = 2 ** 13


@dataclass(frozen=True)
class LatticeFieldSpec:
    """Ring of circumference ``ring_length`` keeping the modes k = 2 pi m / L
    for m in ``modes``, each truncated at ``n_max`` quanta.

    Detector positions are read from the first coordinate of
    ``DetectorSpec.position``.
    """

    modes: tuple = (-1, 0, 1)
    mass: float = 2.0
    ring_length: float = 2.0 * math.pi
    n_max: int = 4
    rtol: float = 1e-11

    regulated = False

    def __post_init__(self):
        if not 1 <= len(self.modes) <= 4:
            raise ConfigurationError("lattice oracle supports 1 to 4 modes")
        if not 1 <= self.n_max <= 4:
            raise ConfigurationError("n_max must be between 1 and 4")
        if np.any(self.omegas <= 0):
            raise ConfigurationError("all mode frequencies must be positive")
        if self.field_dim * 8 > HILBERT_BUDGET:
            raise ConfigurationError("Hilbert space exceeds the desk-scale budget")

    @property
    def wavenumbers(self):
        return 2.0 * math.pi * np.asarray(self.modes, dtype=float) / self.ring_length

    @property
    def omegas(self):
        return np.sqrt(self.wavenumbers ** 2 + self.mass ** 2)

    @property
    def field_dim(self):
        return (self.n_max + 1) ** len(self.modes)

    def ladder_for(self, T):
        return (None,)

    def two_point(self, det_i, det_j, reg=None):
        """tau -> <0| phi(x_i, t) phi(x_j, t - tau) |0> as a mode sum."""
        k, w = self.wavenumbers, self.omegas
        dx = det_i.position[0] - det_j.position[0]
        amp = np.exp(1j * k * dx) / (2.0 * w * self.ring_length)

        def f(tau):
            tau = np.asarray(tau, dtype=float)
            return np.tensordot(np.exp(-1j * np.multiply.outer(tau, w)), amp, axes=([-1], [0]))
        return f


def default_lattice_detectors(eps0=1.0, T=1.0, omega=4.0):
    """Three Gaussian-window detectors spread evenly around the default ring."""
    L = 2.0 * math.pi
    return tuple(DetectorSpec(i, (x, 0.0, 0.0), omega, gaussian_window(eps0, T, T / 6.0))
                 for i, x in zip("ABC", (0.0, L / 3.0, 2.0 * L / 3.0)))


def _annihilation(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)


class LatticeOracle:
    """Exact ladder-operator evaluations for one lattice field and detector set."""

    def __init__(self, spec, detectors):
        self.spec = spec
        self.detectors = {d.id: d for d in detectors}
        self.T = _common_T(*detectors)

    # -- mode-space coefficients ------------------------------------------

    def window_transform(self, det, sign, nu):
        """G(nu) = int eps(t) exp(i (sign Omega + nu) t) dt, by quadrature."""
        f = phased_window(det, sign)
        T = det.window.T
        npan = max(4, math.ceil((det.omega + abs(nu) + max_frequency(det.window)) * T / 4.0))
        val, _ = quad.integrate_1d(lambda t: f(t) * np.exp(1j * nu * t),
                                   quad.uniform_edges(-0.5 * T, 0.5 * T, npan),
                                   rtol=1e-14, atol=1e-300)
        return val

    def coefficients(self, label):
        """(alpha_k, beta_k) with Phi = sum_k alpha_k a_k + beta_k a_k^dagger."""
        key = (label.detector, label.sign)
        cache = self.__dict__.setdefault("_coef_cache", {})
        if key not in cache:
            det = self.detectors[label.detector]
            k, w, L = self.spec.wavenumbers, self.spec.omegas, self.spec.ring_length
            x = det.position[0]
            norm = 1.0 / np.sqrt(2.0 * w * L)
            alpha = np.array([np.exp(1j * kk * x) * nn * self.window_transform(det, label.sign, -ww)
                              for kk, ww, nn in zip(k, w, norm)])
            beta = np.array([np.exp(-1j * kk * x) * nn * self.window_transform(det, label.sign, ww)
                             for kk, ww, nn in zip(k, w, norm)])
            cache[key] = (alpha, beta)
        return cache[key]

    def pair(self, left, right):
        """Exact <0| Phi_left Phi_right |0> = sum_k alpha_k(left) beta_k(right)."""
        al, _ = self.coefficients(left)
        _, br = self.coefficients(right)
        return complex(np.dot(al, br))

    # -- truncated Fock space ---------------------------------------------

    @cached_property
    def mode_operators(self):
        M, n = len(self.spec.modes), self.spec.n_max
        a = _annihilation(n)
        ops = []
        for k in range(M):
            mats = [np.eye(n + 1)] * M
            mats[k] = a
            op = mats[0]
            for m in mats[1:]:
                op = np.kron(op, m)
            ops.append(op)
        return np.array(ops)

    @cached_property
    def _top_level_mask(self):
        M, n = len(self.spec.modes), self.spec.n_max
        occ = np.array(list(itertools.product(range(n + 1), repeat=M)))
        return np.any(occ == n, axis=1)

    def smeared_operator(self, label):
        alpha, beta = self.coefficients(label)
        a = self.mode_operators
        return (np.tensordot(alpha, a, axes=1)
                + np.tensordot(beta, np.transpose(a, (0, 2, 1)), axes=1))

    def npoint(self, ops):
        """<0| O_0 ... O_{n-1} |0> by explicit matrix products.

        The product is split in the middle; both half-states are checked for
        population of the top Fock level.
        """
        ops = list(ops)
        dim = self.spec.field_dim
        vac = np.zeros(dim, dtype=complex)
        vac[0] = 1.0
        h = len(ops) // 2
        ket = vac.copy()
        for op in reversed(ops[h:]):
            ket = self.smeared_operator(op) @ ket
        bra = vac.copy()
        for op in ops[:h]:
            bra = self.smeared_operator(op).conj().T @ bra
        for vec in (ket, bra):
            nrm = np.vdot(vec, vec).real
            top = np.vdot(vec[self._top_level_mask], vec[self._top_level_mask]).real
            if nrm > 0 and top > 1e-10 * nrm:
                raise TruncationError(
                    f"top Fock level population {top / nrm:.2e} for string of length {len(ops)}")
        return complex(np.vdot(bra, ket))

    def amplitude_set(self):
        """AmplitudeSet whose d_ij^ab are the exact mode sums; the self and
        time-ordered exchange terms are double integrals of the lattice
        two-point function."""
        dets = [self.detectors[i] for i in ("A", "B", "C")]
        base = amplitude_set(self.spec, dets, check_causal=False)
        for key in base.pairs:
            i, a, j, b = key
            base.pairs[key] = self.pair(OperatorLabel(i, a), OperatorLabel(j, b))
        base.meta["pairs_source"] = "lattice mode sums"
        return base

    # -- exact evolution ----------------------------------------------------

    @cached_property
    def _coupling_basis(self):
        """Stacked sparse operators S_i^s (x) a_k^r, one block of rows each.

        H(t) psi = sum_j c_j(t) B_j psi; stacking all B_j lets one sparse
        product serve every term.
        """
        sp = np.array([[0, 0], [1, 0]], dtype=complex)   # |up><down| in (down, up)
        a = self.mode_operators
        blocks, keys = [], []
        for i in range(3):
            mats = [np.eye(2)] * 3
            mats[i] = sp
            s_up = np.kron(np.kron(mats[0], mats[1]), mats[2])
            for s_sign, S in (("+", s_up), ("-", s_up.T)):
                for k in range(len(self.spec.modes)):
                    for r_sign, A in (("a", a[k]), ("c", a[k].T)):
                        blocks.append(sparse.kron(sparse.csr_matrix(S), sparse.csr_matrix(A)))
                        keys.append((i, s_sign, k, r_sign))
        return sparse.vstack(blocks, format="csr"), keys

    def _coefficients_at(self, dets, t):
        k, w, L = self.spec.wavenumbers, self.spec.omegas, self.spec.ring_length
        _, keys = self._coupling_basis
        i, s_sign, m, r_sign = (np.array(c) for c in zip(*keys))
        x = np.array([d.position[0] for d in dets])
        amp = np.array([float(eval_window(d.window, t)) for d in dets])
        ph = np.exp(1j * np.array([d.omega for d in dets]) * t)
        u = np.exp(1j * (np.outer(x, k) - w * t)) / np.sqrt(2.0 * w * L)
        c = amp[i] * np.where(s_sign == "+", ph[i], np.conj(ph[i]))
        return c * np.where(r_sign == "a", u[i, m], np.conj(u[i, m]))

    def _propagate(self, dets, steps):
        T = self.T
        basis, keys = self._coupling_basis
        dim = 8 * self.spec.field_dim
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        dt = T / steps
        c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
        # commutator-free 4th-order Magnus: exp(dt(b1 A1 + b2 A2)) exp(dt(b2 A1 + b1 A2))
        b1, b2 = 0.25 + math.sqrt(3) / 6, 0.25 - math.sqrt(3) / 6
        norm_dev = 0.0
        for n in range(steps):
            t0 = -0.5 * T + n * dt
            h1 = self._coefficients_at(dets, t0 + c1 * dt)
            h2 = self._coefficients_at(dets, t0 + c2 * dt)
            psi = _expm_apply(basis, b2 * h1 + b1 * h2, psi, dt)
            psi = _expm_apply(basis, b1 * h1 + b2 * h2, psi, dt)
            norm_dev = max(norm_dev, abs(np.vdot(psi, psi).real - 1.0))
        return psi.reshape(8, self.spec.field_dim), norm_dev

    def exact_evolution(self, scale=1.0, steps=2048, tol=1e-8, max_steps=16384):
        """Exact detector density matrix after the interaction.

        Every window amplitude is multiplied by ``scale``.  The step count is
        doubled until two successive results agree to ``tol``.
        """
        if scale == 0:
            return Rho8(np.diag([1.0] + [0.0] * 7), normalized=True,
                        meta={"steps": 0, "step_change": 0.0, "unitarity_deviation": 0.0,
                              "top_level_population": 0.0})
        dets = [self.detectors[i].scaled(scale) for i in ("A", "B", "C")]
        psi, dev = self._propagate(dets, steps)
        while True:
            finer, dev2 = self._propagate(dets, 2 * steps)
            diff = float(np.max(np.abs(_trace_field(finer) - _trace_field(psi))))
            if diff <= tol:
                break
            if 2 * steps >= max_steps:
                raise NumericalError(
                    f"time stepping not converged (change {diff:.2e} at {2 * steps} steps)",
                    estimates=(_trace_field(psi), _trace_field(finer)))
            psi, dev, steps = finer, dev2, 2 * steps
        top = float(np.sum(np.abs(finer[:, self._top_level_mask]) ** 2))
        return Rho8(_trace_field(finer), normalized=False,
                    meta={"steps": 2 * steps, "step_change": diff,
                          "unitarity_deviation": max(dev, dev2),
                          "top_level_population": top})

    def perturbative_rho(self, scale=1.0):
        """Second-order assembled matrix from the exact lattice amplitudes."""
        return assemble(self.amplitude_set().scaled(scale))


def _expm_apply(basis, coef, psi, dt, tol=1e-16, max_terms=40):
    """exp(-i dt H) psi with H = sum_j coef_j B_j, by Taylor series."""
    nb = len(coef)
    out = psi.copy()
    term = psi
    scale = np.linalg.norm(psi)
    for n in range(1, max_terms):
        term = (-1j * dt / n) * (coef @ (basis @ term).reshape(nb, -1))
        out += term
        if np.linalg.norm(term) <= tol * scale:
            return out
    raise NumericalError("Taylor propagator did not converge; reduce the step")


def _trace_field(psi):
    return psi @ psi.conj().T


def oracle_pair_function(spec, detectors):
    return LatticeOracle(spec, detectors).pair


def oracle_npoint(spec, detectors, ops):
    return LatticeOracle(spec, detectors).npoint(ops)


def exact_evolution(spec, detectors, scale=1.0, steps=2048):
    return LatticeOracle(spec, detectors).exact_evolution(scale, steps)


def density_matrix_strings(ids=("A", "B", "C"), lengths=(4, 6)):
    """All operator strings of the requested lengths used by the density matrix."""
    seen, out = set(), []
    for row, col in itertools.product(range(8), repeat=2):
        ops = entry_string(row, col, ids)
        key = tuple(ops)
        if len(ops) in lengths and key not in seen:
            seen.add(key)
            out.append(ops)
    return out


def mode_tail(detectors, base_spec=None, extra_mode=2):
    """Change of every pair amplitude when one more mode is kept."""
    base_spec = base_spec or LatticeFieldSpec()
    extra_mode = max(base_spec.modes) + 1 if extra_mode in base_spec.modes else extra_mode
    bigger = LatticeFieldSpec(tuple(base_spec.modes) + (extra_mode,), base_spec.mass,
                              base_spec.ring_length, base_spec.n_max)
    o1, o2 = LatticeOracle(base_spec, detectors), LatticeOracle(bigger, detectors)
    labels = [OperatorLabel(d.id, s) for d in detectors for s in "-+"]
    return max(abs(o2.pair(l, r) - o1.pair(l, r)) for l in labels for r in labels)


def validation_battery(spec=None, detectors=None, scales=(1.0, 0.5, 0.25, 0.125),
                       wick_tol=1e-8, order_ratio=2 ** 2.5, population_tol=0.05,
                       unitarity_tol=1e-12, truncation_tol=1e-8):
    """Run every oracle check and return a JSON-ready pass/fail report."""
    spec = spec or LatticeFieldSpec()
    detectors = detectors or default_lattice_detectors()
    oracle = LatticeOracle(spec, detectors)
    checks = {}

    worst = 0.0
    strings = density_matrix_strings()
    for ops in strings:
        direct = oracle.npoint(ops)
        wick = npoint(ops, oracle.pair)
        worst = max(worst, abs(direct - wick) / max(abs(wick), 1e-300))
    checks["wick_equivalence"] = {"strings": len(strings), "max_rel_err": worst,
                                  "tol": wick_tol, "pass": worst <= wick_tol}

    base = oracle.amplitude_set()
    residuals, pop_err, unit_dev, top = [], [], 0.0, 0.0
    for sc in scales:
        exact = oracle.exact_evolution(sc)
        pert = assemble(base.scaled(sc))
        residuals.append(float(np.max(np.abs(exact.matrix - pert.matrix))))
        unit_dev = max(unit_dev, exact.meta["unitarity_deviation"])
        top = max(top, exact.meta["top_level_population"])
        pops = [exact.matrix[b, b].real for b in (4, 2, 1)]
        ref = [base.scaled(sc).pairs[(i, "-", i, "+")].real for i in ("A", "B", "C")]
        pop_err.append(max(abs(p - r) / r for p, r in zip(pops, ref)))
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    checks["perturbative_order"] = {
        "scales": list(scales), "residuals": residuals, "ratios": ratios,
        "min_ratio": order_ratio, "pass": all(r >= order_ratio for r in ratios)}
    checks["leading_populations"] = {
        "scale": scales[-1], "max_rel_err": pop_err[-1], "tol": population_tol,
        "pass": pop_err[-1] <= population_tol}
    checks["unitarity"] = {"max_norm_deviation": unit_dev, "tol": unitarity_tol,
                           "pass": unit_dev <= unitarity_tol}

    if spec.n_max >= 2:
        lower = LatticeFieldSpec(spec.modes, spec.mass, spec.ring_length, spec.n_max - 1)
        coarse = LatticeOracle(lower, detectors).exact_evolution(scales[0])
        fine = oracle.exact_evolution(scales[0])
        change = float(np.max(np.abs(coarse.matrix - fine.matrix)))
        checks["truncation"] = {"n_max": [spec.n_max - 1, spec.n_max], "max_change": change,
                                "top_level_population": top, "tol": truncation_tol,
                                "pass": change <= truncation_tol}

    tail = float(mode_tail(detectors, spec))
    log.info("adding one ring mode changes pair amplitudes by at most %.3e", tail)
    checks["mode_tail"] = {"max_pair_change": tail, "pass": bool(np.isfinite(tail))}
    return _plain({"spec": {"modes": list(spec.modes), "mass": spec.mass,
                     "ring_length": spec.ring_length, "n_max": spec.n_max},
            "checks": checks,
            "pass": all(c["pass"] for c in checks.values())})


def _plain(obj):
    """Replace numpy scalars with built-ins so the report is JSON-serializable."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
