"""Three-detector reduced density matrix: assembly, local filtering,
normalisation and the exchange-dominated limit.

Basis order is (↓↓↓, ↓↓↑, ↓↑↓, ↓↑↑, ↑↓↓, ↑↓↑, ↑↑↓, ↑↑↑) with qubits (A, B, C)
and ↓ = 0, so index b = 4 a + 2 b + c.
"""

from dataclasses import dataclass, field
import itertools
import logging
import math

import numpy as np

from .correlator import AmplitudeSet, SIGNS
from .errors import ConfigurationError, DegenerateStateError, DomainError
from .wick import derived_amplitudes, entry_string, excited, label_name

log = logging.getLogger(__name__)

TRACE_FLOOR = 1e-300
DOWN_COUNT = np.array([3 - bin(b).count("1") for b in range(8)])

#: (|↓↓↓> - |↓↑↑> - |↑↓↑>)/sqrt(3), the filtered exchange-dominated state
LIMIT_STATE = np.array([1, 0, 0, -1, 0, -1, 0, 0], dtype=complex) / math.sqrt(3)
#: (|↑↓↓> + |↓↑↓> + |↓↓↑>)/sqrt(3)
W_STATE = np.array([0, 1, 1, 0, 1, 0, 0, 0], dtype=complex) / math.sqrt(3)
GHZ_STATE = np.array([1, 0, 0, 0, 0, 0, 0, 1], dtype=complex) / math.sqrt(2)
LIMIT_MATRIX = np.outer(LIMIT_STATE, LIMIT_STATE.conj())


@dataclass
class Rho8:
    """8x8 density matrix over the three-detector computational basis."""

    matrix: np.ndarray
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (8, 8):
            raise DomainError(f"expected an 8x8 matrix, got {self.matrix.shape}")

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    @classmethod
    def pure(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), normalized=True)


def _coefficient(b):
    # branch amplitude prefactor (-i)^k for k excited detectors
    return (-1j) ** bin(b).count("1")


def assemble(base, derived=None):
    """Unnormalised second-order density matrix, each entry at its lowest
    non-vanishing order.

    Entry (row, col) is <Psi_col|Psi_row> with Psi_b the field state
    accompanying detector state b: (1, -i Phi_i^+, -Phi_i^+ Phi_j^+,
    i Phi_A^+ Phi_B^+ Phi_C^+) for 0..3 excitations.  Hence
    (↓↓↓, ↓↓↓) = 1 - C, the single-excitation block holds d_ji^-+, the first
    row/column holds -d_jk^++ (time-ordered exchange), and the 4- and 6-point
    blocks come from ``derived``.  The result is symmetrised; the
    pre-symmetrisation residual is kept in ``meta``.
    """
    if derived is None:
        derived = derived_amplitudes(base)
    cid = base.meta.get("config_id")
    did = getattr(derived, "config_id", None)
    if cid is not None and did is not None and cid != did:
        raise ConfigurationError(
            f"amplitudes ({cid}) and derived moments ({did}) come from different configurations")
    ids = base.ids
    m = np.zeros((8, 8), dtype=complex)
    for row, col in itertools.product(range(8), repeat=2):
        n_row, n_col = len(excited(row)), len(excited(col))
        if (n_row + n_col) % 2:
            continue
        coef = np.conj(_coefficient(col)) * _coefficient(row)
        if row == col == 0:
            m[row, col] = 1.0 - base.C
        elif n_row + n_col == 2 and min(n_row, n_col) == 0:
            j, k = excited(max(row, col), ids)
            x = base.exchange[(j, k)]
            m[row, col] = coef * (x if col == 0 else np.conj(x))
        elif n_row + n_col == 2:
            (i,), (j,) = excited(row, ids), excited(col, ids)
            m[row, col] = coef * base.pairs[(j, "-", i, "+")]
        else:
            name = label_name(entry_string(row, col, ids))
            try:
                m[row, col] = coef * derived[name]
            except KeyError:
                raise ConfigurationError(f"missing derived amplitude {name}") from None
    resid = float(np.max(np.abs(m - m.conj().T)))
    log.debug("assembly hermiticity residual %.3e", resid)
    m = 0.5 * (m + m.conj().T)
    return Rho8(m, normalized=False,
                meta={"hermiticity_residual": resid, "config_id": cid})


def filter_matrix(eta):
    if not (0 < eta <= 1):
        raise DomainError(f"filter parameter eta must lie in (0, 1], got {eta}")
    return np.diag(float(eta) ** DOWN_COUNT).astype(complex)


def filter(rho, eta):
    """Attenuate the ↓ component of every detector by ``eta``: D rho D with
    D = diag(eta^(number of ↓ in b))."""
    D = filter_matrix(eta)
    meta = dict(rho.meta, eta=float(eta))
    return Rho8(D @ rho.matrix @ D, normalized=False, meta=meta)


def normalize(rho):
    tr = np.trace(rho.matrix).real
    if not tr > TRACE_FLOOR:
        raise DegenerateStateError(f"cannot normalise: trace = {tr:g}")
    return Rho8(rho.matrix / tr, normalized=True, meta=dict(rho.meta))


def project_psd(rho):
    """Clip negative eigenvalues and renormalise."""
    h = 0.5 * (rho.matrix + rho.matrix.conj().T)
    w, v = np.linalg.eigh(h)
    clipped = np.clip(w, 0.0, None)
    m = (v * clipped) @ v.conj().T
    meta = dict(rho.meta, psd_projected=True, clipped_weight=float(-w[w < 0].sum()))
    return normalize(Rho8(m, meta=meta))


def validate(rho):
    """Report-only physicality check."""
    m = rho.matrix
    herm = float(np.max(np.abs(m - m.conj().T)))
    evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    tr = float(np.trace(m).real)
    purity = float(np.real(np.trace(m @ m))) / tr ** 2 if tr != 0 else math.nan
    return {
        "hermiticity_residual": herm,
        "trace": tr,
        "eigenvalues": evals.tolist(),
        "min_eigenvalue": float(evals[0]),
        "purity": purity,
    }


def synthetic_dominance_set(s):
    """Amplitudes with d_BC^(++/--) = d_CA^(++/--) = s and everything else 0."""
    ids = ("A", "B", "C")
    pairs = {(i, a, j, b): 0j for i in ids for j in ids for a in SIGNS for b in SIGNS}
    exchange = {(i, j): 0j for i in ids for j in ids if i != j}
    for i, j in (("B", "C"), ("C", "B"), ("C", "A"), ("A", "C")):
        pairs[(i, "+", j, "+")] = complex(s)
        pairs[(i, "-", j, "-")] = complex(s)
        exchange[(i, j)] = complex(s)
    return AmplitudeSet(ids, pairs, exchange, {i: 0j for i in ids}, 0.0,
                        {"config_id": f"synthetic-dominance-{s!r}"})


def default_eta(base):
    """Filter strength with eta^2 = d_BC^++ = d_CA^++.

    When the two exchange amplitudes differ, their geometric mean is used
    and a warning is logged.
    """
    x_bc = abs(base.exchange[("B", "C")])
    x_ca = abs(base.exchange[("C", "A")])
    if not math.isclose(x_bc, x_ca, rel_tol=1e-6):
        log.warning("d_BC^++ = %.6g and d_CA^++ = %.6g differ; using eta^2 = sqrt(product)",
                    x_bc, x_ca)
    eta = (x_bc * x_ca) ** 0.25
    return min(eta, 1.0)


def dominance_limit(s):
    """Filtered, normalised state in the exchange-dominated limit.

    Returns ``(rho, eta)`` with eta = sqrt(s).  The result is the pure
    projector onto LIMIT_STATE for every 0 < s <= 1.
    """
    if not (0 < s <= 1):
        raise DomainError(f"dominance scale s must lie in (0, 1], got {s}")
    base = synthetic_dominance_set(s)
    eta = math.sqrt(s)
    rho = normalize(filter(assemble(base), eta))
    return rho, eta


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
#: phase -1 on ↑ for A and B, bit flip on C
W_UNITARY = np.kron(np.kron(_Z, _Z), _X)


def to_w_state(rho):
    """Apply the fixed local unitary Z_A Z_B X_C and return
    ``(transformed, fidelity with W_STATE)``.

    Maps (|↓↓↓> - |↓↑↑> - |↑↓↑>)/sqrt(3) exactly onto the W state.
    """
    if rho.matrix.shape != (8, 8):
        raise DomainError("expected an 8x8 density matrix")
    m = W_UNITARY @ rho.matrix @ W_UNITARY.conj().T
    out = Rho8(m, normalized=rho.normalized, meta=dict(rho.meta))
    fid = float(np.real(W_STATE.conj() @ m @ W_STATE))
    return out, fid
