"""Gaussian (Wick) moments of ordered strings of smeared field operators."""

from functools import lru_cache
import math
from typing import NamedTuple

from .errors import ConfigurationError, DomainError


class OperatorLabel(NamedTuple):
    """One factor Phi_detector^sign of an ordered product.

    The position of the factor is its index in the product list.
    """

    detector: str
    sign: str


def parse_string(detectors, signs):
    """('ABCC', '---+') -> [OperatorLabel('A', '-'), ...]."""
    if len(detectors) != len(signs):
        raise DomainError("detector and sign strings differ in length")
    return [OperatorLabel(d, s) for d, s in zip(detectors, signs)]


def label_name(ops):
    return "d_" + "".join(o.detector for o in ops) + "^" + "".join(o.sign for o in ops)


@lru_cache(maxsize=None)
def _pairings(items):
    if not items:
        return ((),)
    first, rest = items[0], items[1:]
    out = []
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for sub in _pairings(remaining):
            out.append(((first, partner),) + sub)
    return tuple(out)


def pairings(n):
    """All (n-1)!! perfect matchings of 0..n-1, pairs stored (min, max),
    in lexicographic order."""
    if n < 0 or n % 2:
        raise DomainError(f"perfect matchings need an even number of points, got {n}")
    if n > 12:
        raise DomainError("n > 12 is outside the supported range")
    return [list(m) for m in _pairings(tuple(range(n)))]


def double_factorial(n):
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def npoint(ops, pairs):
    """<0| O_0 O_1 ... O_{n-1} |0> for a Gaussian state.

    ``pairs(left, right)`` returns the two-point value with ``left`` the
    earlier factor of the product.  Odd-length strings vanish.
    """
    ops = list(ops)
    if len(ops) % 2:
        return 0j
    total = 0j
    for matching in pairings(len(ops)):
        term = 1.0 + 0j
        for i, j in matching:
            try:
                term *= pairs(ops[i], ops[j])
            except KeyError as exc:
                raise ConfigurationError(
                    f"pair function undefined for ({ops[i]}, {ops[j]})") from exc
            if term == 0:
                break
        total += term
    return total


def expand(ops):
    """Symbolic expansion, e.g.
    'd_BCBC^--++ = d_BC^--·d_BC^++ + d_BB^-+·d_CC^-+ + d_BC^-+·d_CB^-+'."""
    ops = list(ops)
    if len(ops) % 2:
        return f"{label_name(ops)} = 0"
    terms = []
    for matching in pairings(len(ops)):
        terms.append("·".join(label_name([ops[i], ops[j]]) for i, j in matching))
    return f"{label_name(ops)} = " + " + ".join(terms)


# basis index b = 4 a + 2 b + c with 1 = up, detectors in order A, B, C
BASIS_LABELS = ("↓↓↓", "↓↓↑", "↓↑↓", "↓↑↑", "↑↓↓", "↑↓↑", "↑↑↓", "↑↑↑")


def excited(b, ids=("A", "B", "C")):
    """Detectors flipped up in basis state ``b``, in A, B, C order."""
    return tuple(ids[k] for k in range(3) if (b >> (2 - k)) & 1)


def entry_string(row, col, ids=("A", "B", "C")):
    """Operator string whose vacuum moment gives density-matrix entry (row, col).

    The lowering factors of the column state come first (A, B, C order),
    followed by the raising factors of the row state, e.g. (row ↓↑↑,
    col ↑↑↓) -> Phi_A^- Phi_B^- Phi_B^+ Phi_C^+ = d_ABBC^--++.
    """
    return ([OperatorLabel(d, "-") for d in excited(col, ids)]
            + [OperatorLabel(d, "+") for d in excited(row, ids)])


class DerivedAmplitudes(dict):
    """Higher-point moments keyed by name (``'d_BCBC^--++'``).

    ``config_id`` ties the values to the AmplitudeSet they came from.
    """

    def __init__(self, values, config_id=None):
        super().__init__(values)
        self.config_id = config_id


def derived_amplitudes(base):
    """All 4- and 6-point moments needed by the density matrix.

    Every entry string with four or six factors is evaluated with
    :func:`npoint` on the pair amplitudes of ``base``.  This covers the
    upper-triangle moments (d_BCBC^--++, d_ABCC^---+, d_ABCABC^---+++, ...)
    and their transposed partners used for the lower triangle.
    Names list detectors in A, B, C order within each sign block, so
    d_CABC^--++ is stored as d_ACBC^--++ (identical for commuting,
    spacelike-separated detectors).
    """
    values = {}
    for row in range(8):
        for col in range(8):
            ops = entry_string(row, col, base.ids)
            if len(ops) in (4, 6):
                name = label_name(ops)
                if name not in values:
                    values[name] = npoint(ops, base.pair)
    return DerivedAmplitudes(values, base.meta.get("config_id"))
