"""Full (genuine tripartite) nonlocality tests.

Behaviours are tables p[x, y, z, a, b, c] with settings x, y, z in {0, 1}
and outcome index 0 <-> +1, 1 <-> -1.  The Svetlichny functional is

    S = sum_{x,y,z} (-1)^(xy + yz + zx) E_xyz,

and the hybrid local/nonlocal bound is obtained by enumerating the
deterministic vertices of the hybrid polytope, never assumed.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import itertools
import json
import logging
import math

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import DomainError, NumericalError
from .rho import Rho8, project_psd

log = logging.getLogger(__name__)

OUTCOMES = (1, -1)
CUTS = ("A|BC", "B|CA", "C|AB")
_CUT_PARTY = {"A|BC": 0, "B|CA": 1, "C|AB": 2}

# Pauli matrices in the (↓, ↑) basis with ↓ the -1 eigenvector of sigma_z
PAULI = np.array([
    np.eye(2),
    [[0, 1], [1, 0]],
    [[0, 1j], [-1j, 0]],
    [[-1, 0], [0, 1]],
], dtype=complex)

SVETLICHNY_SIGNS = np.array(
    [[[(-1) ** (x * y + y * z + z * x) for z in (0, 1)] for y in (0, 1)] for x in (0, 1)],
    dtype=float)


@dataclass
class MeasurementSettings:
    """Bloch directions (a, a'), (b, b'), (c, c') as rows of 2x3 arrays."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(2, 3)
            if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) > 1e-12:
                raise DomainError(f"settings {name} are not unit vectors")
            setattr(self, name, v)

    @classmethod
    def from_angles(cls, angles):
        """12 spherical angles (theta, phi) for a, a', b, b', c, c'."""
        th, ph = np.asarray(angles, dtype=float).reshape(6, 2).T
        v = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
        return cls(v[0:2], v[2:4], v[4:6])

    @classmethod
    def all_z(cls):
        z = np.array([[0, 0, 1.0], [0, 0, 1.0]])
        return cls(z, z, z)

    def as_list(self):
        return {"a": self.a.tolist(), "b": self.b.tolist(), "c": self.c.tolist()}


@dataclass
class Behavior:
    """Tripartite behaviour p(a, b, c | x, y, z); ``table`` has shape (2,)*6."""

    table: np.ndarray

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float).reshape((2,) * 6)

    def vector(self):
        return self.table.ravel()

    def normalization_residual(self):
        return float(np.max(np.abs(self.table.sum(axis=(3, 4, 5)) - 1.0)))

    def signaling_residual(self):
        """Max violation of single-party no-signalling (each party's
        complement marginal must not depend on that party's setting)."""
        p = self.table
        res = 0.0
        for party in range(3):
            marg = p.sum(axis=3 + party)           # drop the party's outcome
            diff = np.take(marg, 0, axis=party) - np.take(marg, 1, axis=party)
            res = max(res, float(np.max(np.abs(diff))))
        return res

    def correlators(self):
        sign = np.array(OUTCOMES, dtype=float)
        abc = sign[:, None, None] * sign[None, :, None] * sign[None, None, :]
        return np.einsum("xyzabc,abc->xyz", self.table, abc)

    def svetlichny(self):
        return float(np.sum(SVETLICHNY_SIGNS * self.correlators()))

    def to_json(self):
        return json.dumps({"layout": "p[x][y][z][a][b][c], outcome index 0 = +1",
                           "p": self.table.tolist()})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(np.array(data["p"] if isinstance(data, dict) else data))


def _require_state(rho, psd_tol, allow_projection):
    if isinstance(rho, Rho8):
        m, rho_obj = rho.matrix, rho
    else:
        m = np.asarray(rho, dtype=complex)
        rho_obj = Rho8(m)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-9:
        raise DomainError(f"density matrix not normalised (trace {tr:.12g})")
    lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    if lo < -psd_tol:
        if not allow_projection:
            raise DomainError(
                f"density matrix has eigenvalue {lo:.3e} < -{psd_tol:g}; "
                "enable PSD projection to analyse it")
        m = project_psd(rho_obj).matrix
    return m


def correlation_tensor(rho, psd_tol=1e-9, allow_projection=False):
    """R[mu, nu, la] = tr(rho sigma_mu x sigma_nu x sigma_la), mu = 0..3."""
    m = _require_state(rho, psd_tol, allow_projection).reshape((2,) * 6)
    R = np.einsum("abcdef,mda,neb,lfc->mnl", m, PAULI, PAULI, PAULI)
    return R.real


def behavior_from_rho(rho, settings, psd_tol=1e-9, allow_projection=False):
    """Born-rule behaviour for dichotomic spin measurements along the settings."""
    R = correlation_tensor(rho, psd_tol, allow_projection)
    sign = np.array(OUTCOMES, dtype=float)

    def projector_vectors(dirs):
        # u[x, a, mu] = (1, a n_x) / 2
        u = np.empty((2, 2, 4))
        u[:, :, 0] = 0.5
        u[:, :, 1:] = 0.5 * sign[None, :, None] * dirs[:, None, :]
        return u

    ua, ub, uc = (projector_vectors(d) for d in (settings.a, settings.b, settings.c))
    p = np.einsum("mnl,xam,ybn,zcl->xyzabc", R, ua, ub, uc)
    return Behavior(p)


def _svetlichny_from_tensor(T3, settings):
    E = np.einsum("ijk,xi,yj,zk->xyz", T3, settings.a, settings.b, settings.c)
    return float(np.sum(SVETLICHNY_SIGNS * E))


def svetlichny_value(rho, settings, psd_tol=1e-9, allow_projection=False):
    """S = sum_xyz (-1)^(xy+yz+zx) <A_x B_y C_z> for the given state."""
    T3 = correlation_tensor(rho, psd_tol, allow_projection)[1:, 1:, 1:]
    return _svetlichny_from_tensor(T3, settings)


@dataclass
class OptimizationResult:
    S_star: float
    settings: MeasurementSettings
    local_optima: list
    converged: bool
    starts: int
    seed: int
    warnings: list = field(default_factory=list)


def _random_unit(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _coordinate_ascent(T3, vecs, max_iter, tol):
    """Cycle through the six Bloch vectors, setting each to its (normalised)
    gradient; S is linear in every single vector."""
    a, b, c = vecs[0:2].copy(), vecs[2:4].copy(), vecs[4:6].copy()
    s = SVETLICHNY_SIGNS
    for it in range(max_iter):
        change = 0.0
        for x in range(2):
            g = np.einsum("yz,ijk,yj,zk->i", s[x], T3, b, c)
            n = np.linalg.norm(g)
            if n > 0:
                new = g / n
                change = max(change, np.max(np.abs(new - a[x])))
                a[x] = new
        for y in range(2):
            g = np.einsum("xz,ijk,xi,zk->j", s[:, y, :], T3, a, c)
            n = np.linalg.norm(g)
            if n > 0:
                new = g / n
                change = max(change, np.max(np.abs(new - b[y])))
                b[y] = new
        for z in range(2):
            g = np.einsum("xy,ijk,xi,yj->k", s[:, :, z], T3, a, b)
            n = np.linalg.norm(g)
            if n > 0:
                new = g / n
                change = max(change, np.max(np.abs(new - c[z])))
                c[z] = new
        if change < tol:
            return MeasurementSettings(a, b, c), True
    return MeasurementSettings(a, b, c), False


def _bfgs(T3, vecs, max_iter, tol):
    th = np.arccos(np.clip(vecs[:, 2], -1, 1))
    ph = np.arctan2(vecs[:, 1], vecs[:, 0])
    x0 = np.stack([th, ph], axis=1).ravel()

    def negS(x):
        return -_svetlichny_from_tensor(T3, MeasurementSettings.from_angles(x))

    res = minimize(negS, x0, method="BFGS", options={"maxiter": max_iter, "gtol": tol})
    return MeasurementSettings.from_angles(res.x), bool(res.success)


def maximize_svetlichny(rho, starts=64, seed=0, method="coordinate", max_iter=500,
                        tol=1e-10, psd_tol=1e-9, allow_projection=False):
    """Multi-start maximisation of the Svetlichny value over measurement settings.

    ``method`` is ``"coordinate"`` (alternating Bloch-vector updates) or
    ``"bfgs"`` (quasi-Newton on spherical angles).  Starts are uniform on
    the sphere from ``numpy.random.default_rng(seed)``.
    """
    T3 = correlation_tensor(rho, psd_tol, allow_projection)[1:, 1:, 1:]
    rng = np.random.default_rng(seed)
    local = _coordinate_ascent if method == "coordinate" else _bfgs
    best, best_set, best_conv = -math.inf, None, False
    values, n_unconverged = [], 0
    for _ in range(starts):
        vecs = _random_unit(rng, 6)
        settings, conv = local(T3, vecs, max_iter, tol)
        S = _svetlichny_from_tensor(T3, settings)
        values.append(S)
        n_unconverged += not conv
        if S > best:
            best, best_set, best_conv = S, settings, conv
    optima = sorted({round(v, 8) for v in values}, reverse=True)
    warnings = []
    if not best_conv:
        warnings.append("best start hit the iteration cap before converging")
        log.warning("Svetlichny optimiser: %s", warnings[-1])
    return OptimizationResult(best, best_set, optima, best_conv, starts, seed, warnings)


@dataclass(frozen=True)
class HybridVertex:
    """Deterministic hybrid strategy: one party alone, the other two jointly.

    ``single`` gives the lone party's outcome for settings 0, 1; ``pair``
    gives the outcome pair for the pair's setting combinations
    (0,0), (0,1), (1,0), (1,1), in the party order of the cut label.
    """

    partition: str
    single: tuple
    pair: tuple

    def behavior(self):
        return Behavior(_vertex_table(self))


def _vertex_table(v):
    p = np.zeros((2,) * 6)
    lone = _CUT_PARTY[v.partition]
    p1, p2 = (lone + 1) % 3, (lone + 2) % 3
    idx = {+1: 0, -1: 1}
    for s in itertools.product((0, 1), repeat=3):
        k = 2 * s[p1] + s[p2]
        out = [0, 0, 0]
        out[lone] = idx[v.single[s[lone]]]
        out[p1] = idx[v.pair[k][0]]
        out[p2] = idx[v.pair[k][1]]
        p[s + tuple(out)] = 1.0
    return p


def hybrid_vertices():
    """The 3 x 4 x 256 = 3072 deterministic hybrid vertices, in a fixed order."""
    out = []
    pair_outcomes = list(itertools.product(OUTCOMES, repeat=2))
    for cut in CUTS:
        for single in itertools.product(OUTCOMES, repeat=2):
            for pair in itertools.product(pair_outcomes, repeat=4):
                out.append(HybridVertex(cut, single, pair))
    return out


@lru_cache(maxsize=1)
def vertex_matrix():
    """(3072, 64) array whose rows are the flattened vertex behaviours."""
    V = np.array([_vertex_table(v).ravel() for v in hybrid_vertices()])
    V.setflags(write=False)
    return V


def svetlichny_vector():
    """The Svetlichny functional as a 64-vector acting on flattened behaviours."""
    sign = np.array(OUTCOMES, dtype=float)
    abc = sign[:, None, None] * sign[None, :, None] * sign[None, None, :]
    return (SVETLICHNY_SIGNS[:, :, :, None, None, None] * abc[None, None, None]).ravel()


@lru_cache(maxsize=1)
def hybrid_bound():
    """max of the Svetlichny functional over all hybrid vertices."""
    return float(np.max(vertex_matrix() @ svetlichny_vector()))


@dataclass
class Certificate:
    """Outcome of the hybrid-polytope membership test.

    Feasible: ``weights`` over :func:`hybrid_vertices`.  Infeasible:
    ``functional`` (64-vector) with value ``value`` on the behaviour,
    strictly above its hybrid maximum ``hybrid_max``.
    """

    feasible: bool
    weights: np.ndarray | None = None
    residual: float | None = None
    functional: np.ndarray | None = None
    value: float | None = None
    hybrid_max: float | None = None
    status: str = ""

    def to_dict(self):
        d = {"feasible": self.feasible, "status": self.status}
        if self.feasible:
            nz = np.flatnonzero(self.weights > 1e-12)
            d["weights"] = {int(k): float(self.weights[k]) for k in nz}
            d["residual"] = self.residual
        else:
            d["functional"] = self.functional.tolist()
            d["value"] = self.value
            d["hybrid_max"] = self.hybrid_max
        return d


def hybrid_lp_feasible(beh, tol=1e-9):
    """Is the behaviour a convex mixture of hybrid vertices?

    Returns ``(feasible, Certificate)``.  For infeasible behaviours a
    separating functional is found by a second LP maximising
    f.p - max_k f.v_k over |f_i| <= 1.
    """
    p = beh.vector() if isinstance(beh, Behavior) else np.asarray(beh, dtype=float).ravel()
    V = vertex_matrix()
    opts = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol}
    res = linprog(np.zeros(V.shape[0]), A_eq=V.T, b_eq=p, bounds=(0, None),
                  method="highs", options=opts)
    if res.status == 0:
        w = np.clip(res.x, 0.0, None)
        resid = float(np.max(np.abs(V.T @ w - p)))
        return True, Certificate(True, weights=w, residual=resid, status=res.message)
    if res.status != 2:
        raise NumericalError(f"hybrid LP failed: {res.message}")
    n = V.shape[1]
    # variables (f_1..f_n, m): maximise f.p - m  s.t.  V f - m <= 0
    c = np.concatenate([-p, [1.0]])
    A = np.hstack([V, -np.ones((V.shape[0], 1))])
    sep = linprog(c, A_ub=A, b_ub=np.zeros(V.shape[0]),
                  bounds=[(-1, 1)] * n + [(None, None)], method="highs", options=opts)
    if sep.status != 0:
        raise NumericalError(f"separation LP failed: {sep.message}")
    f = sep.x[:n]
    value = float(f @ p)
    hmax = float(np.max(V @ f))
    if not value > hmax + tol:
        raise NumericalError(
            f"primal LP infeasible but no separating functional found (gap {value - hmax:.3e})")
    return False, Certificate(False, functional=f, value=value, hybrid_max=hmax,
                              status=res.message)


def lp_max_functional(functional):
    """max of a linear functional over the hybrid polytope, by LP."""
    V = vertex_matrix()
    res = linprog(-(V @ np.asarray(functional, dtype=float)),
                  A_eq=np.ones((1, V.shape[0])), b_eq=[1.0], bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise NumericalError(res.message)
    return float(-res.fun)


def partial_transpose(m, party):
    t = np.asarray(m, dtype=complex).reshape((2,) * 6)
    t = np.swapaxes(t, party, party + 3)
    return t.reshape(8, 8)


def negativity(rho, cut):
    """(||rho^T_cut||_1 - 1) / 2 for the bipartition ``cut``."""
    if cut not in _CUT_PARTY:
        raise DomainError(f"cut must be one of {CUTS}")
    m = rho.matrix if isinstance(rho, Rho8) else np.asarray(rho, dtype=complex)
    pt = partial_transpose(m, _CUT_PARTY[cut])
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return max(0.0, float((np.abs(ev).sum() - np.trace(m).real) / 2.0))


def fidelity(rho, target):
    """<target| rho |target>."""
    m = rho.matrix if isinstance(rho, Rho8) else np.asarray(rho, dtype=complex)
    psi = np.asarray(target, dtype=complex)
    return float(np.real(psi.conj() @ m @ psi))
