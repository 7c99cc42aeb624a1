"""Deviations on classical weight vectors.

Three families are provided: the gamma-deviations ``d_gamma``, Csiszar
f-deviations ``csiszar`` and Bregman deviations ``bregman``.  Values are
extended reals; ``math.inf`` is a legitimate return value and is never
raised as an error.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.special import rel_entr, xlogy

from .cmeasure import MASS_TOL, apply_markov, as_weights, random_markov


def _pair(mu, nu):
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ValueError(f"length mismatch: {mu.shape} vs {nu.shape}")
    if np.any(mu < 0) or np.any(nu < 0):
        raise ValueError("weights must be nonnegative")
    return mu, nu


def _d1_terms(mu, nu):
    # nu - mu + mu log(mu/nu), written as mu (expm1(u) - u) with u = log(nu/mu)
    out = np.empty_like(mu)
    both = (mu > 0) & (nu > 0)
    u = np.log(nu[both] / mu[both])
    out[both] = mu[both] * (np.expm1(u) - u)
    only_nu = (mu == 0)
    out[only_nu] = nu[only_nu]
    out[(mu > 0) & (nu == 0)] = np.inf
    return out


def d_gamma_terms(mu, nu, gamma):
    """Pointwise integrand of d_gamma (each entry is >= 0)."""
    mu, nu = _pair(mu, nu)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 1.0:
        return _d1_terms(mu, nu)
    if gamma == 0.0:
        return _d1_terms(nu, mu)
    a, b = gamma, 1.0 - gamma
    out = np.empty_like(mu)
    both = (mu > 0) & (nu > 0)
    u = np.log(nu[both] / mu[both])
    # a mu + b nu - mu^a nu^b, divided by a b, without cancellation near mu = nu
    out[both] = mu[both] * (b * np.expm1(u) - np.expm1(b * u)) / (a * b)
    out[mu == 0] = nu[mu == 0] / a
    nz = (mu > 0) & (nu == 0)
    out[nz] = mu[nz] / b
    return np.maximum(out, 0.0)


def d_gamma(mu, nu, gamma):
    """Zhu-Rohwer gamma-deviation between two weight vectors.

    For gamma in (0, 1) this is sum mu/(1-gamma) + nu/gamma
    - mu^gamma nu^(1-gamma) / (gamma (1-gamma)); the endpoints use the
    closed-form limits, d_1(mu, nu) = sum nu - mu + mu log(mu/nu) and
    d_0(mu, nu) = d_1(nu, mu).
    """
    return float(np.sum(d_gamma_terms(mu, nu, gamma)))


def kl(mu, nu):
    """sum mu log(mu/nu) for normalized weights, with 0 log 0 = 0."""
    mu, nu = _pair(mu, nu)
    for name, v in (("mu", mu), ("nu", nu)):
        if abs(v.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"{name} is not normalized (mass {v.sum()!r})")
    return float(np.sum(rel_entr(mu, nu)))


# -- Csiszar f-deviations ---------------------------------------------------

CONVEXITY_GRID = np.logspace(-4, 4, 64)


@dataclass(frozen=True)
class CsiszarGenerator:
    """Convex f on (0, inf) with f(1) = 0.

    ``at_zero`` is lim_{t->0+} f(t) and ``slope_at_inf`` is
    lim_{t->inf} f(t)/t; either may be ``math.inf``, or ``None`` when the
    limit is unknown (then the corresponding boundary case is an error).
    """

    f: Callable[[np.ndarray], np.ndarray]
    at_zero: Optional[float] = None
    slope_at_inf: Optional[float] = None
    name: str = "f"

    def __post_init__(self):
        f1 = float(self.f(np.array([1.0]))[0])
        if abs(f1) > 1e-12:
            raise ValueError(f"generator {self.name}: f(1) = {f1}, expected 0")
        if not self.is_convex():
            raise ValueError(f"generator {self.name} fails the sampled convexity check")

    def is_convex(self, tol=-1e-9):
        t = CONVEXITY_GRID
        y = np.asarray(self.f(t), dtype=float)
        slopes = np.diff(y) / np.diff(t)
        second = np.diff(slopes) / (t[2:] - t[:-2])
        return bool(np.all(second >= tol))


def f_gamma(gamma):
    """Generator whose f-deviation equals d_gamma."""
    if gamma == 1.0:
        return CsiszarGenerator(lambda t: t - 1.0 - np.log(t), math.inf, 1.0, "gamma=1")
    if gamma == 0.0:
        return CsiszarGenerator(lambda t: xlogy(t, t) - t + 1.0, 1.0, math.inf, "gamma=0")
    a, b = gamma, 1.0 - gamma

    def f(t):
        t = np.asarray(t, dtype=float)
        return 1.0 / b + t / a - t**b / (a * b)

    return CsiszarGenerator(f, 1.0 / b, 1.0 / a, f"gamma={gamma:g}")


def f_kl():
    """t log t - t + 1: d_gamma at gamma = 0."""
    return CsiszarGenerator(lambda t: xlogy(t, t) - t + 1.0, 1.0, math.inf, "tlogt")


def f_smoothed_tv(eps=1e-3):
    """sqrt((t-1)^2 + eps^2) - eps, a smooth stand-in for |t - 1|."""
    return CsiszarGenerator(
        lambda t: np.sqrt((np.asarray(t, dtype=float) - 1.0) ** 2 + eps**2) - eps,
        math.sqrt(1.0 + eps**2) - eps,
        1.0,
        "smoothed-tv",
    )


def csiszar(mu, nu, gen):
    """sum mu_i f(nu_i / mu_i) with lower-semicontinuous boundary terms."""
    mu, nu = _pair(mu, nu)
    both = (mu > 0) & (nu > 0)
    total = float(np.sum(mu[both] * gen.f(nu[both] / mu[both])))
    lost = (mu > 0) & (nu == 0)
    if np.any(lost):
        if gen.at_zero is None:
            raise ValueError(f"{gen.name}: f(0+) unknown but nu vanishes where mu does not")
        total += _times(mu[lost].sum(), gen.at_zero)
    new = (mu == 0) & (nu > 0)
    if np.any(new):
        if gen.slope_at_inf is None:
            raise ValueError(f"{gen.name}: f(t)/t at infinity unknown but mu vanishes where nu does not")
        total += _times(nu[new].sum(), gen.slope_at_inf)
    return total


def _times(mass, limit):
    return math.inf if math.isinf(limit) and mass > 0 else mass * limit


# -- Bregman deviations -----------------------------------------------------


@dataclass(frozen=True)
class BregmanGenerator:
    """Convex potential psi in a chart, with dual chart = grad psi o chart.

    ``psi_dual`` is the Legendre-Fenchel dual if known in closed form;
    otherwise it is computed numerically over ``box``.  ``domain`` checks
    (first, second) arguments separately.  ``direct`` optionally evaluates
    the deviation without the cancellation in psi + psi* - <x, y>, which
    matters for finite-difference geometry.
    """

    psi: Callable
    grad_psi: Callable
    chart: Callable
    dual_chart: Callable
    psi_dual: Optional[Callable] = None
    domain: Callable = field(default=lambda p, second: True)
    box: tuple = (-50.0, 50.0)
    name: str = "psi"
    direct: Optional[Callable] = None

    def dual_value(self, y):
        if self.psi_dual is not None:
            return float(self.psi_dual(y))
        return legendre_dual(self.psi, y, self.box, grad=self.grad_psi)

    def check_domain(self, p, second=False):
        p = np.asarray(p, dtype=float)
        if not self.domain(p, second):
            raise ValueError(f"{self.name}: argument outside the chart domain")
        return p


def quadratic_generator():
    """psi = |x|^2 / 2 in the identity chart; bregman = |p1 - p2|^2 / 2."""
    ident = lambda p: np.asarray(p, dtype=float)  # noqa: E731
    return BregmanGenerator(
        psi=lambda x: 0.5 * float(np.dot(x, x)),
        grad_psi=ident,
        chart=ident,
        dual_chart=ident,
        psi_dual=lambda y: 0.5 * float(np.dot(y, y)),
        name="quadratic",
        direct=lambda x, y: 0.5 * float(np.sum((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2)),
    )


def exponential_generator():
    """psi = sum exp(x) in the identity chart."""
    ident = lambda p: np.asarray(p, dtype=float)  # noqa: E731
    return BregmanGenerator(
        psi=lambda x: float(np.sum(np.exp(x))),
        grad_psi=np.exp,
        chart=ident,
        dual_chart=np.exp,
        psi_dual=lambda y: float(np.sum(xlogy(y, y) - y)) if np.all(np.asarray(y) >= 0) else math.inf,
        name="exponential",
    )


def _nonneg(p, second):
    return bool(np.all(p >= 0))


def gamma_bregman(gamma):
    """Bregman generator reproducing d_gamma(p1, p2, gamma).

    The chart is the gamma-embedding and the dual chart the
    (1-gamma)-embedding; at the endpoints one of them is the log chart.
    """
    if gamma == 1.0:
        return BregmanGenerator(
            psi=lambda x: float(np.sum(xlogy(x, x) - x)),
            grad_psi=np.log,
            chart=lambda p: np.asarray(p, dtype=float),
            dual_chart=np.log,
            psi_dual=lambda y: float(np.sum(np.exp(y))),
            domain=lambda p, second: bool(np.all(p > 0) if second else np.all(p >= 0)),
            name="gamma=1",
        )
    if gamma == 0.0:
        return BregmanGenerator(
            psi=lambda x: float(np.sum(np.exp(x))),
            grad_psi=np.exp,
            chart=np.log,
            dual_chart=lambda p: np.asarray(p, dtype=float),
            psi_dual=lambda y: float(np.sum(xlogy(y, y) - y)),
            domain=lambda p, second: bool(np.all(p >= 0) if second else np.all(p > 0)),
            name="gamma=0",
        )
    a, b = gamma, 1.0 - gamma
    return BregmanGenerator(
        psi=lambda x: float(np.sum((a * np.asarray(x)) ** (1.0 / a))) / b,
        grad_psi=lambda x: (a * np.asarray(x)) ** (b / a) / b,
        chart=lambda p: np.asarray(p, dtype=float) ** a / a,
        dual_chart=lambda p: np.asarray(p, dtype=float) ** b / b,
        psi_dual=lambda y: float(np.sum((b * np.asarray(y)) ** (1.0 / b))) / a,
        domain=_nonneg,
        name=f"gamma={gamma:g}",
    )


def _bregman_raw(p1, p2, gen):
    x = gen.chart(gen.check_domain(p1))
    y = gen.dual_chart(gen.check_domain(p2, second=True))
    return gen.psi(x) + gen.dual_value(y) - float(np.dot(x, y))


def bregman(p1, p2, gen):
    """psi(l(p1)) + psi*(l*(p2)) - <l(p1), l*(p2)>, clipped at zero."""
    if gen.direct is not None:
        return float(gen.direct(gen.check_domain(p1), gen.check_domain(p2, second=True)))
    return max(_bregman_raw(p1, p2, gen), 0.0)


def cosine_defect(p1, p2, p3, gen):
    """Residual of the generalised cosine equation (zero for any Bregman deviation)."""
    lhs = _bregman_raw(p1, p2, gen) + _bregman_raw(p2, p3, gen) - _bregman_raw(p1, p3, gen)
    l1, l2 = gen.chart(p1), gen.chart(p2)
    m2, m3 = gen.dual_chart(p2), gen.dual_chart(p3)
    return float(lhs - np.dot(l1 - l2, m3 - m2))


def legendre_dual(psi, y, box, grad=None, boundary_tol=1e-7):
    """sup_x <x, y> - psi(x) over the box [lo, hi]^n, numerically.

    Returns math.inf when the maximizer sits on the box boundary with the
    objective still increasing outward, which is taken as unboundedness.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo, hi = box
    x0 = np.full_like(y, 0.5 * (lo + hi))

    def neg(x):
        return psi(x) - float(np.dot(x, y))

    jac = None if grad is None else (lambda x: np.asarray(grad(x), dtype=float) - y)
    res = optimize.minimize(
        neg, x0, jac=jac, method="L-BFGS-B", bounds=[(lo, hi)] * y.size,
        options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 10_000, "maxls": 100},
    )
    x = res.x
    width = hi - lo
    g = jac(x) if jac is not None else optimize.approx_fprime(x, neg, 1e-8)
    at_lo = (x - lo) <= boundary_tol * width
    at_hi = (hi - x) <= boundary_tol * width
    if np.any(at_lo & (g > 0)) or np.any(at_hi & (g < 0)):
        return math.inf
    if grad is not None:
        # a few Newton polish steps on the interior stationarity equation
        for _ in range(5):
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            H = np.column_stack([(jac(x + h[j] * e) - jac(x - h[j] * e)) / (2 * h[j])
                                 for j, e in enumerate(np.eye(y.size))])
            H = 0.5 * (H + H.T)
            try:
                step = np.linalg.solve(H, jac(x))
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(step)):
                break
            x = np.clip(x - step, lo, hi)
    return float(np.dot(x, y) - psi(x))


# -- Markov monotonicity harness ------------------------------------------


def monotonicity_gap(D, mu, nu, T):
    """D(mu T, nu T) - D(mu, nu); nonpositive for Markov-monotone D."""
    return D(apply_markov(mu, T), apply_markov(nu, T)) - D(mu, nu)


def find_monotonicity_violation(D, rng, trials=500, max_n=8, slack=1e-10):
    """Random search for (mu, nu, T) with D(mu T, nu T) > D(mu, nu) + slack."""
    for _ in range(trials):
        n = int(rng.integers(2, max_n + 1))
        m = int(rng.integers(1, max_n + 1))
        mu = as_weights(rng.uniform(0.05, 2.0, n))
        nu = as_weights(rng.uniform(0.05, 2.0, n))
        T = random_markov(rng, n, m)
        if monotonicity_gap(D, mu, nu, T) > slack:
            return mu, nu, T
    return None
