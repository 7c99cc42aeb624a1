"""Metric and dual connections extracted from a deviation by finite differences.

For a deviation D(p, q) and a chart theta, the Eguchi construction reads

    g_ij      = - d_i d'_j D
    Gamma_ij,k  = - d_i d_j d'_k D
    Gamma*_ij,k = - d'_i d'_j d_k D

where unprimed derivatives act on the first slot, primed ones on the second,
all in chart coordinates and evaluated on the diagonal.  Every derivative
is a central difference with one Richardson step, so any callable D works.
"""

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .cmeasure import gamma_embed, gamma_unembed

METRIC_REL_STEP = 1e-4
CONNECTION_REL_STEP = 1e-3
DUALITY_REL_STEP = 1e-2


@dataclass(frozen=True)
class Chart:
    name: str
    forward: Callable
    inverse: Callable


def raw_chart():
    ident = lambda v: np.array(v, dtype=float)  # noqa: E731
    return Chart("raw", ident, ident)


def gamma_chart(gamma):
    """The gamma-embedding mu^gamma/gamma (log chart at gamma = 0)."""
    return Chart(
        f"gamma({gamma:g})",
        lambda mu: gamma_embed(mu, gamma),
        lambda theta: gamma_unembed(theta, gamma),
    )


@dataclass(frozen=True)
class MetricMatrix:
    base: np.ndarray
    entries: np.ndarray
    chart: str
    error: float

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries).min())

    def asymmetry(self):
        return float(np.max(np.abs(self.entries - self.entries.T)))


@dataclass(frozen=True)
class ConnectionCoefficients:
    base: np.ndarray
    primal: np.ndarray
    dual: np.ndarray
    chart: str
    error: float

    def torsion(self):
        return max(
            float(np.max(np.abs(a - a.transpose(1, 0, 2)))) for a in (self.primal, self.dual)
        )


def _positive(mu):
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or np.any(mu <= 0):
        raise ValueError("base point must be a strictly positive vector")
    return mu


def default_step(mu, chart, rel):
    """Chart-coordinate step equivalent to a relative change `rel` of the weights."""
    theta = chart.forward(mu)
    return float(np.min(np.abs(chart.forward(mu * (1.0 + rel)) - theta)))


def _lift(D, mu, chart):
    theta = chart.forward(mu)

    def F(x, y):
        val = D(chart.inverse(theta + x), chart.inverse(theta + y))
        if not np.isfinite(val):
            raise ValueError("deviation is not finite on the stencil (base point too close to the boundary)")
        return val

    return F


def _richardson(est, h):
    coarse = est(h)
    fine = est(h / 2)
    return (4.0 * fine - coarse) / 3.0, float(np.max(np.abs(fine - coarse))) / 3.0


def eguchi_metric(D, mu, chart=None, h=None):
    """g_ij = -d_i d'_j D(p, q) at p = q = mu, in the given chart."""
    mu = _positive(mu)
    chart = chart or raw_chart()
    if h is None:
        h = default_step(mu, chart, METRIC_REL_STEP)
    F = _lift(D, mu, chart)
    n = mu.size
    eye = np.eye(n)

    def est(s):
        g = np.empty((n, n))
        for i, j in product(range(n), repeat=2):
            a, b = s * eye[i], s * eye[j]
            g[i, j] = -(F(a, b) - F(a, -b) - F(-a, b) + F(-a, -b)) / (4 * s * s)
        return g

    g, err = _richardson(est, h)
    g = 0.5 * (g + g.T)
    return MetricMatrix(mu, g, chart.name, err)


def fisher_rao_metric(mu):
    """diag(1/mu_i): the Fisher-Rao metric on positive weights, raw chart."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("Fisher-Rao metric needs strictly positive weights")
    return MetricMatrix(mu, np.diag(1.0 / mu), "raw", 0.0)


def eguchi_connection(D, mu, chart=None, h=None):
    """Primal and dual connection coefficients Gamma_{ij,k}, Gamma*_{ij,k}."""
    mu = _positive(mu)
    chart = chart or raw_chart()
    if h is None:
        h = default_step(mu, chart, CONNECTION_REL_STEP)
    F = _lift(D, mu, chart)
    n = mu.size
    eye = np.eye(n)
    signs = list(product((1.0, -1.0), repeat=3))

    def third(s, i, j, k, first_twice):
        acc = 0.0
        for s1, s2, s3 in signs:
            pair = s * (s1 * eye[i] + s2 * eye[j])
            single = s * s3 * eye[k]
            val = F(pair, single) if first_twice else F(single, pair)
            acc += s1 * s2 * s3 * val
        return -acc / (8 * s**3)

    def est(s):
        out = np.empty((2, n, n, n))
        for i, j, k in product(range(n), repeat=3):
            if j < i:
                out[:, i, j, k] = out[:, j, i, k]
                continue
            out[0, i, j, k] = third(s, i, j, k, True)
            out[1, i, j, k] = third(s, i, j, k, False)
        return out

    both, err = _richardson(est, h)
    return ConnectionCoefficients(mu, both[0], both[1], chart.name, err)


def gamma_connection_raw(mu, gamma):
    """Closed-form coefficients of d_gamma in the raw chart.

    Only the diagonal entries survive: Gamma_ii,i = (gamma-1)/mu_i^2 and
    Gamma*_ii,i = -gamma/mu_i^2.
    """
    mu = _positive(mu)
    n = mu.size
    primal = np.zeros((n, n, n))
    dual = np.zeros((n, n, n))
    idx = np.arange(n)
    primal[idx, idx, idx] = (gamma - 1.0) / mu**2
    dual[idx, idx, idx] = -gamma / mu**2
    return ConnectionCoefficients(mu, primal, dual, "raw", 0.0)


def duality_defect(D, mu, directions, chart=None, h=None, metric=None, connection=None):
    """max |d_u g(v,w) - g(nabla_u v, w) - g(v, nabla*_u w)| over direction triples.

    ``metric`` may be a callable mu -> MetricMatrix (defaults to the Eguchi
    metric of D); ``connection`` may be precomputed coefficients at mu.
    The derivative of the metric is a Richardson central difference along u
    in the chart.  Roundoff in the metric is divided by this step, so both
    steps are coarser than the eguchi_metric defaults; the defect scales
    with |u| |v| |w|.
    """
    mu = _positive(mu)
    chart = chart or raw_chart()
    metric = metric or (lambda p: eguchi_metric(D, p, chart, h=default_step(p, chart, DUALITY_REL_STEP)))
    conn = connection or eguchi_connection(D, mu, chart)
    theta = chart.forward(mu)
    if h is None:
        h = default_step(mu, chart, DUALITY_REL_STEP)
    worst = 0.0
    for u, v, w in directions:
        u, v, w = (np.asarray(d, dtype=float) for d in (u, v, w))

        def gvw(s):
            return v @ metric(chart.inverse(theta + s * u)).entries @ w

        def dg(s):
            return (gvw(s) - gvw(-s)) / (2 * s)

        deriv = (4 * dg(h / 2) - dg(h)) / 3
        rhs = (np.einsum("ijk,i,j,k->", conn.primal, u, v, w)
               + np.einsum("ijk,i,j,k->", conn.dual, u, w, v))
        worst = max(worst, abs(deriv - rhs))
    return float(worst)
