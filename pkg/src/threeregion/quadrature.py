"""Composite Gauss-Legendre quadrature and Richardson extrapolation."""

from functools import lru_cache

import numpy as np

from .errors import NumericalError

DEFAULT_ORDER = 16
MAX_PANELS = 1024
_CHUNK = 2_000_000


@lru_cache(maxsize=16)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, order=DEFAULT_ORDER):
    """Nodes and weights of composite Gauss-Legendre on the given panel edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def bisect(edges):
    """Split every panel in two (keeps any geometric grading)."""
    edges = np.asarray(edges, dtype=float)
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = 0.5 * (edges[1:] + edges[:-1])
    return out


def graded_edges(a, b, h0, ratio=2.0):
    """Edges on [a, b] growing geometrically from width h0 at ``a``."""
    if b <= a:
        raise ValueError("empty interval")
    edges = [a]
    h = h0
    while edges[-1] + h < b - 0.5 * h:
        edges.append(edges[-1] + h)
        h *= ratio
    edges.append(b)
    return np.array(edges)


def uniform_edges(a, b, n):
    return np.linspace(a, b, max(int(n), 1) + 1)


def _tensor_sum(f, xn, xw, yn, yw):
    total = 0j
    l1 = 0.0
    rows = max(1, _CHUNK // max(len(yn), 1))
    for start in range(0, len(xn), rows):
        X = xn[start:start + rows, None]
        vals = f(X, yn[None, :])
        wx = xw[start:start + rows]
        total += np.einsum("i,ij,j->", wx, vals, yw)
        l1 += np.einsum("i,ij,j->", np.abs(wx), np.abs(vals), np.abs(yw))
    return total, l1


def integrate_2d(f, x_edges, y_edges, order=DEFAULT_ORDER, rtol=1e-9, atol=0.0,
                 l1_rtol=1e-14, max_panels=MAX_PANELS):
    """Adaptive tensor-product Gauss-Legendre over a rectangle.

    ``f(X, Y)`` must broadcast over a column of x nodes and a row of y nodes.
    All panels on both axes are bisected until two successive estimates
    agree to ``rtol`` (relative), ``atol``, or ``l1_rtol`` times the integral
    of |f| (the last guards integrals that cancel to roundoff level).

    Returns ``(value, error_estimate, panels_per_axis)``.
    Raises NumericalError carrying the last two estimates if the panel cap is hit.
    """
    xe = np.asarray(x_edges, dtype=float)
    ye = np.asarray(y_edges, dtype=float)
    prev, _ = _tensor_sum(f, *panel_nodes(xe, order), *panel_nodes(ye, order))
    prev_prev = None
    while True:
        xe, ye = bisect(xe), bisect(ye)
        npan = max(len(xe), len(ye)) - 1
        if npan > max_panels:
            raise NumericalError(
                f"2D quadrature not converged with {npan // 2} panels per axis",
                estimates=tuple(e for e in (prev_prev, prev) if e is not None))
        cur, l1 = _tensor_sum(f, *panel_nodes(xe, order), *panel_nodes(ye, order))
        err = abs(cur - prev)
        if err <= rtol * abs(cur) or err <= atol or err <= l1_rtol * l1:
            return complex(cur), float(err), npan
        prev_prev, prev = prev, cur


def integrate_1d(f, edges, order=DEFAULT_ORDER, rtol=1e-12, atol=0.0,
                 max_panels=MAX_PANELS):
    """1D analogue of :func:`integrate_2d`; ``f`` is vectorised."""
    e = np.asarray(edges, dtype=float)
    n, w = panel_nodes(e, order)
    prev = np.dot(w, f(n))
    while True:
        e = bisect(e)
        if len(e) - 1 > max_panels:
            raise NumericalError("1D quadrature not converged", estimates=(prev,))
        n, w = panel_nodes(e, order)
        cur = np.dot(w, f(n))
        err = abs(cur - prev)
        if err <= rtol * abs(cur) or err <= atol:
            return complex(cur), float(err)
        prev = cur


def richardson(values, ratio=2.0):
    """Extrapolate F(h) -> F(0) from F(h), F(h/r), F(h/r^2), ...

    Assumes F(h) = F0 + c1 h + c2 h^2 + ...  With three values this is the
    two-step scheme eliminating the linear and quadratic terms.

    Returns ``(estimate, residual)`` where the residual is the difference
    between the last two extrapolation levels.
    """
    if len(values) == 1:
        return complex(values[0]), 0.0
    table = [np.asarray(values, dtype=complex)]
    for k in range(1, len(values)):
        fac = ratio ** k
        prev = table[-1]
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    best = complex(table[-1][-1])
    if len(table) >= 2:
        lower = complex(table[-2][-1])
        return best, abs(best - lower)
    return best, 0.0
