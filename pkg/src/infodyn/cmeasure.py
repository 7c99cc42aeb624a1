"""Finite classical information models.

Weights are nonnegative numpy vectors (finite positive integrals on an
n-point sample space), random variables are real vectors of the same length.
Markov maps are stored on the function side: a nonnegative matrix ``T`` of
shape (n, m) whose rows sum to one, acting as ``f -> T @ f`` on functions of
an m-point space.  The induced action on weights is ``mu -> mu @ T``.
"""

import numpy as np

from .errors import DegenerateConditioningError

MASS_TOL = 1e-12


def as_weights(mu, name="mu"):
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(mu)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(mu < 0):
        raise ValueError(f"{name} has negative entries")
    if not np.any(mu > 0):
        raise ValueError(f"{name} has zero total mass")
    return mu


def is_normalized(mu, tol=MASS_TOL):
    return abs(np.sum(mu) - 1.0) <= tol


def support(mu):
    return np.flatnonzero(np.asarray(mu) > 0)


def _match(mu, f):
    f = np.asarray(f, dtype=float)
    if f.shape != mu.shape:
        raise ValueError(f"length mismatch: {mu.shape[0]} weights vs {f.shape} values")
    return f


def expectation(mu, f):
    """Unnormalized integral sum_i mu_i f_i."""
    mu = as_weights(mu)
    return float(mu @ _match(mu, f))


def _blocks(g):
    g = np.asarray(g)
    _, labels = np.unique(g, return_inverse=True)
    return labels.ravel()


def conditional_expectation(omega, f, g):
    """E_omega(f|g): the omega-weighted average of f over each level set of g.

    Raises DegenerateConditioningError if some level set of g has no mass,
    since the conditional expectation is not pinned down there.
    """
    omega = as_weights(omega, "omega")
    f = _match(omega, f)
    labels = _blocks(_match(omega, g))
    mass = np.bincount(labels, weights=omega)
    if np.any(mass <= 0):
        empty = np.unique(np.asarray(g)[mass[labels] <= 0])
        raise DegenerateConditioningError(f"zero-mass level set(s) of g: {empty.tolist()}")
    # average deviations from one representative per block, so that
    # g-measurable f (constant on blocks) is reproduced bit for bit
    first = np.zeros(mass.size, dtype=int)
    first[labels[::-1]] = np.arange(labels.size)[::-1]
    ref = f[first]
    avg = ref + np.bincount(labels, weights=omega * (f - ref[labels]), minlength=mass.size) / mass
    return avg[labels]


def update_by_conditioning(omega, phi, g):
    """Return the functional f -> omega(E_phi(f|g))."""
    omega = as_weights(omega, "omega")
    phi = as_weights(phi, "phi")
    if omega.shape != phi.shape:
        raise ValueError("omega and phi live on different sample spaces")
    labels = _blocks(_match(phi, g))
    if np.any(np.bincount(labels, weights=phi) <= 0):
        raise DegenerateConditioningError("zero-mass level set of g under phi")

    def updated(f):
        return expectation(omega, conditional_expectation(phi, f, g))

    return updated


def updated_weights(omega, phi, g):
    """Weight vector representing update_by_conditioning(omega, phi, g).

    On each level set B of g the omega-mass of B is redistributed
    proportionally to phi restricted to B.
    """
    omega = as_weights(omega, "omega")
    phi = as_weights(phi, "phi")
    labels = _blocks(_match(phi, g))
    phi_mass = np.bincount(labels, weights=phi)
    if np.any(phi_mass <= 0):
        raise DegenerateConditioningError("zero-mass level set of g under phi")
    omega_mass = np.bincount(labels, weights=omega)
    return phi * (omega_mass / phi_mass)[labels]


def _check_gamma(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")


def gamma_embed(mu, gamma):
    """mu^gamma / gamma componentwise; gamma = 0 is the log chart."""
    _check_gamma(gamma)
    mu = np.asarray(mu, dtype=float)
    if gamma == 0.0:
        with np.errstate(divide="ignore"):
            return np.log(mu)
    if gamma == 1.0:
        return mu.copy()
    return mu**gamma / gamma


def gamma_unembed(theta, gamma):
    """Inverse of gamma_embed."""
    _check_gamma(gamma)
    theta = np.asarray(theta, dtype=float)
    if gamma == 0.0:
        return np.exp(theta)
    if gamma == 1.0:
        return theta.copy()
    return (gamma * theta) ** (1.0 / gamma)


def as_markov(T, tol=1e-10):
    T = np.asarray(T, dtype=float)
    if T.ndim != 2:
        raise ValueError("Markov map must be a matrix")
    if np.any(T < 0):
        raise ValueError("Markov map has negative entries")
    if np.max(np.abs(T.sum(axis=1) - 1.0)) > tol:
        raise ValueError("Markov map is not unital (rows must sum to 1)")
    return T


def apply_markov(mu, T):
    """Predual action mu -> mu o T on weights."""
    mu = as_weights(mu)
    T = as_markov(T)
    if T.shape[0] != mu.shape[0]:
        raise ValueError(f"shape mismatch: weights of length {mu.shape[0]}, map {T.shape}")
    return mu @ T


def random_markov(rng, n, m):
    """Row-stochastic n x m matrix with Dirichlet rows."""
    return rng.dirichlet(np.ones(m), size=n)


def lp_norm(v, p):
    if not (p == np.inf or p >= 1):
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    v = np.abs(np.asarray(v, dtype=float))
    if v.size == 0:
        return 0.0
    if p == np.inf:
        return float(v.max())
    return float(np.sum(v**p) ** (1.0 / p))
