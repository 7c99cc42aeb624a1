"""Finite-dimensional quantum states: functional calculus, gamma-deviations,
the gamma-metric, modular flow and the Connes cocycle.

Density operators are Hermitian positive semidefinite complex matrices.
All functional calculus goes through a full eigendecomposition, so the
result depends only on spectral projectors and not on the eigenvector
basis chosen inside degenerate eigenspaces.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-12
FAITHFUL_TOL = 1e-10
SUPPORT_TOL = 1e-10

# The Petz limit lim (i/t) tr(rho_phi ([D omega : D phi]_t - I)) equals
# q_d_gamma(phi, omega, 1); fixed by petz_order_calibration() on a commuting pair.
PETZ_ORDER = "reversed"


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_hermitian(M, name="observable"):
    M = as_matrix(M, name)
    if np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(M))):
        raise ValueError(f"{name} is not Hermitian")
    return 0.5 * (M + M.conj().T)


def spectrum(rho):
    """Eigenvalues (clipped at 0 within tolerance) and eigenvectors of a density operator."""
    w, U = np.linalg.eigh(rho)
    if w[0] < -PSD_TOL:
        raise ValueError(f"operator is not positive semidefinite (eigenvalue {w[0]:.3e})")
    return np.clip(w, 0.0, None), U


def as_density(M, name="rho"):
    rho = as_hermitian(M, name)
    w, _ = spectrum(rho)
    if w.sum() <= 0:
        raise ValueError(f"{name} has zero trace")
    return rho


def is_normalized(rho, tol=1e-12):
    return abs(np.trace(rho).real - 1.0) <= tol


def is_faithful(rho, tol=FAITHFUL_TOL):
    return bool(spectrum(as_hermitian(rho))[0].min() > tol)


def require_faithful(rho, name="rho"):
    rho = as_density(rho, name)
    if not is_faithful(rho):
        raise ValueError(f"{name} is not faithful (has a kernel)")
    return rho


def funm(rho, f):
    """U f(Lambda) U^dagger for a Hermitian rho and a function of the eigenvalues."""
    w, U = np.linalg.eigh(rho)
    return (U * f(w)) @ U.conj().T


def matrix_power(rho, alpha):
    """rho^alpha by spectral calculus, with 0^alpha = 0 when re(alpha) > 0."""
    rho = as_density(rho)
    alpha = complex(alpha)
    w, U = spectrum(rho)
    if alpha.real <= 0 and w.min() <= FAITHFUL_TOL:
        raise ValueError("non-positive real part of the exponent needs a faithful state")
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    vals = np.where(w > 0, np.exp(alpha * np.where(w > 0, logw, 0.0)), 0.0)
    out = (U * vals) @ U.conj().T
    if alpha.imag == 0:
        out = 0.5 * (out + out.conj().T)
    return out


def log_spectral(rho):
    """Eigenvalues, eigenvectors and log on the support (0 on the kernel)."""
    w, U = spectrum(rho)
    logw = np.where(w > SUPPORT_TOL, np.log(np.where(w > SUPPORT_TOL, w, 1.0)), 0.0)
    return w, U, logw


def schatten_norm(T, p):
    if not (p == np.inf or p >= 1):
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    s = np.linalg.svd(as_matrix(T), compute_uv=False)
    if p == np.inf:
        return float(s.max())
    return float(np.sum(s**p) ** (1.0 / p))


@dataclass(frozen=True)
class AlgebraElementLp:
    """A matrix tagged with the exponent of the L_p space it is viewed in."""

    matrix: np.ndarray
    p: float

    def norm(self):
        return schatten_norm(self.matrix, self.p)


def q_gamma_embed(rho, gamma):
    """rho^gamma / gamma as an element of L_{1/gamma}."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return AlgebraElementLp(matrix_power(rho, gamma) / gamma, 1.0 / gamma)


def q_gamma_unembed(element, gamma):
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    M = as_hermitian(np.asarray(element.matrix if isinstance(element, AlgebraElementLp) else element))
    return matrix_power(gamma * M, 1.0 / gamma)


def _d1(omega, phi):
    """tr phi - tr omega + tr omega (log omega - log phi), +inf off the support of phi."""
    wo, Uo, logo = log_spectral(omega)
    wp, Up, logp = log_spectral(phi)
    kernel = Up[:, wp <= SUPPORT_TOL]
    if kernel.size and np.trace(kernel.conj().T @ omega @ kernel).real > SUPPORT_TOL:
        return math.inf
    log_phi = (Up * logp) @ Up.conj().T
    val = (float(np.sum(wp)) - float(np.sum(wo)) + float(np.sum(xlogy(wo, wo)))
           - float(np.trace(omega @ log_phi).real))
    return max(val, 0.0)


def q_d_gamma(omega, phi, gamma):
    """Quantum gamma-deviation between two density operators.

    For gamma in (0, 1): tr omega/(1-gamma) + tr phi/gamma
    - re tr(omega^gamma phi^(1-gamma)) / (gamma (1-gamma)).  gamma = 1 is
    tr phi - tr omega + tr omega (log omega - log phi), and gamma = 0 swaps
    the arguments of that.
    """
    omega = as_density(omega, "omega")
    phi = as_density(phi, "phi")
    if omega.shape != phi.shape:
        raise ValueError(f"dimension mismatch: {omega.shape} vs {phi.shape}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 1.0:
        return _d1(omega, phi)
    if gamma == 0.0:
        return _d1(phi, omega)
    a, b = gamma, 1.0 - gamma
    cross = np.trace(matrix_power(omega, a) @ matrix_power(phi, b)).real
    val = np.trace(omega).real / b + np.trace(phi).real / a - cross / (a * b)
    return max(float(val), 0.0)


def wyd_metric(omega, x, y, gamma):
    """re tr(omega^(1-gamma) x omega^gamma y)."""
    omega = require_faithful(omega, "omega")
    x = as_hermitian(x, "x")
    y = as_hermitian(y, "y")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return float(np.trace(matrix_power(omega, 1.0 - gamma) @ x @ matrix_power(omega, gamma) @ y).real)


def _unitary_power(rho, t):
    w, U = spectrum(rho)
    return (U * np.exp(1j * t * np.log(w))) @ U.conj().T


def modular_flow(rho, x, t):
    """sigma_t(x) = rho^{it} x rho^{-it}."""
    rho = require_faithful(rho)
    x = as_matrix(x, "x")
    u = _unitary_power(rho, t)
    return u @ x @ u.conj().T


def connes_cocycle(omega, phi, t):
    """[D omega : D phi]_t = omega^{it} phi^{-it}."""
    omega = require_faithful(omega, "omega")
    phi = require_faithful(phi, "phi")
    if omega.shape != phi.shape:
        raise ValueError("dimension mismatch")
    return _unitary_power(omega, t) @ _unitary_power(phi, -t)


def petz_quotient(omega, phi, t):
    """re (i/t) tr(rho_phi ([D omega : D phi]_t - I))."""
    C = connes_cocycle(omega, phi, t)
    n = C.shape[0]
    return float((1j / t * np.trace(as_matrix(phi) @ (C - np.eye(n)))).real)


def _neville_at_zero(ts, vals):
    ts = list(ts)
    P = list(vals)
    for level in range(1, len(ts)):
        for i in range(len(ts) - level):
            P[i] = (ts[i + level] * P[i] - ts[i] * P[i + 1]) / (ts[i + level] - ts[i])
    return P[0]


DEFAULT_T_STEPS = tuple(0.05 * 0.5**k for k in range(6))


def petz_limit_entropy(omega, phi, t_steps=DEFAULT_T_STEPS):
    """Extrapolate re (i/t) tr(rho_phi([D omega:D phi]_t - I)) to t -> 0+.

    Uses polynomial (Neville) extrapolation over the decreasing steps.
    """
    omega = require_faithful(omega, "omega")
    phi = require_faithful(phi, "phi")
    for name, r in (("omega", omega), ("phi", phi)):
        if not is_normalized(r, 1e-10):
            raise ValueError(f"{name} is not normalized")
    ts = np.asarray(t_steps, dtype=float)
    if ts.size < 2 or np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ValueError("t_steps must be positive and strictly decreasing")
    return float(_neville_at_zero(ts, [petz_quotient(omega, phi, t) for t in ts]))


def petz_reference(omega, phi):
    """Closed-form value the Petz limit should match, in the calibrated order."""
    if PETZ_ORDER == "reversed":
        return q_d_gamma(phi, omega, 1.0)
    return q_d_gamma(omega, phi, 1.0)


def petz_order_calibration(omega_diag=(0.7, 0.3), phi_diag=(0.4, 0.6)):
    """Decide on a commuting pair which argument order the Petz limit reproduces."""
    w = np.asarray(omega_diag, dtype=float)
    p = np.asarray(phi_diag, dtype=float)
    limit = petz_limit_entropy(np.diag(w), np.diag(p))
    direct = float(np.sum(xlogy(w, w) - xlogy(w, p)))
    reversed_ = float(np.sum(xlogy(p, p) - xlogy(p, w)))
    return "reversed" if abs(limit - reversed_) < abs(limit - direct) else "direct"


def tangent_condition(omega, phi, x, gamma):
    """Diagnostic pair for the tangent-sphere condition at omega.

    Returns (re tr(omega^{1-gamma} x phi^gamma),
             re tr(rho_omega [D omega : D phi]_{i gamma} x)); the cocycle at
    imaginary time is continued analytically as omega^{-gamma} phi^gamma.
    They agree when omega, phi and x commute.
    """
    omega = require_faithful(omega, "omega")
    phi = require_faithful(phi, "phi")
    x = as_hermitian(x, "x")
    first = np.trace(matrix_power(omega, 1.0 - gamma) @ x @ matrix_power(phi, gamma)).real
    cocycle = matrix_power(omega, -gamma) @ matrix_power(phi, gamma)
    second = np.trace(omega @ cocycle @ x).real
    return float(first), float(second)


def l2_embed(rho):
    """2 rho^{1/2} in the Hilbert-Schmidt space."""
    return 2.0 * matrix_power(rho, 0.5)


def hs_inner(S, T):
    """<S, T> = tr(T^dagger S)."""
    return complex(np.trace(as_matrix(T).conj().T @ as_matrix(S)))


def trace_distance(rho, sigma):
    return 0.5 * schatten_norm(as_matrix(rho) - as_matrix(sigma), 1)


def partial_trace(rho, dims, keep):
    """Trace out every tensor factor except `keep` (index into dims)."""
    rho = as_matrix(rho)
    k = len(dims)
    t = rho.reshape(list(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:k])
    cols = list(letters[k:2 * k])
    for j in range(k):
        if j != keep:
            cols[j] = rows[j]
    subs = "".join(rows) + "".join(cols) + "->" + rows[keep] + cols[keep]
    return np.einsum(subs, t)


def random_density(rng, n, rank=None, faithful_floor=0.0):
    """Ginibre-distributed density operator of trace one."""
    rank = rank or n
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = G @ G.conj().T
    rho = rho / np.trace(rho).real
    if faithful_floor:
        rho = (1 - n * faithful_floor) * rho + faithful_floor * np.eye(n)
    return 0.5 * (rho + rho.conj().T)


def random_hermitian(rng, n, traceless=False):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = 0.5 * (G + G.conj().T)
    if traceless:
        H -= np.trace(H) / n * np.eye(n)
    return H


def random_unitary(rng, n):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
