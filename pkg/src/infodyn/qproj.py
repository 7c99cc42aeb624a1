"""Constrained maximum relative gamma-entropy updating on density operators.

``q_project(omega, gamma, Q, F)`` minimizes q_d_gamma(rho, omega, gamma) + F(rho)
over rho in Q, the quantum counterpart of ``entproj.project`` with the same
argument order (gamma = 1 gives Gibbs states exp(log omega + sum lambda A)).

A support constraint with projector P is compiled into the compressed
algebra: rho = V X V^dagger with V an orthonormal basis of ran(P), and the
problem is solved for X.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, InfeasibleError, UnboundedError
from .qstate import (
    SUPPORT_TOL,
    as_density,
    as_hermitian,
    is_faithful,
    log_spectral,
    matrix_power,
    q_d_gamma,
    spectrum,
    trace_distance,
)

log = logging.getLogger(__name__)

STATIONARITY_TOL = 1e-8
FEASIBILITY_TOL = 1e-10
RANK_TOL = 1e-10
MAX_ITER = 200


@dataclass
class QuantumConstraintSet:
    """tr(rho A_k) = c_k, optional support projector and trace target."""

    moments: list = field(default_factory=list)
    support: Optional[np.ndarray] = None
    trace: Optional[float] = None

    @classmethod
    def normalized(cls, moments=(), support=None):
        return cls(list(moments), support, 1.0)

    def is_empty(self):
        return not self.moments and self.support is None and self.trace is None

    def projector(self, n):
        if self.support is None:
            return np.eye(n, dtype=complex)
        P = as_hermitian(self.support, "support projector")
        if P.shape != (n, n) or np.max(np.abs(P @ P - P)) > 1e-10:
            raise ValueError("support must be an orthogonal projector of matching dimension")
        return P

    def violation(self, rho):
        n = rho.shape[0]
        worst = 0.0
        for A, c in self.moments:
            worst = max(worst, abs(np.trace(rho @ as_hermitian(A)).real - c))
        if self.trace is not None:
            worst = max(worst, abs(np.trace(rho).real - self.trace))
        if self.support is not None:
            Pc = np.eye(n) - self.projector(n)
            worst = max(worst, float(np.max(np.abs(Pc @ rho))))
        return worst


@dataclass(frozen=True)
class QuantumPenalty:
    """none, linear tr(rho B), or quadratic (w/2) ||rho - C||_2^2."""

    kind: str = "none"
    operator: Optional[np.ndarray] = None
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "linear", "quadratic"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "quadratic" and self.weight < 0:
            raise ValueError("quadratic penalty weight must be nonnegative")

    @classmethod
    def linear(cls, B):
        return cls("linear", as_hermitian(B))

    @classmethod
    def quadratic(cls, weight, center):
        return cls("quadratic", as_hermitian(center), float(weight))

    @property
    def active(self):
        return self.kind != "none"

    def scaled(self, factor):
        if self.kind == "linear":
            return QuantumPenalty("linear", factor * self.operator)
        if self.kind == "quadratic":
            return QuantumPenalty("quadratic", self.operator, factor * self.weight)
        return self

    def value(self, rho):
        if self.kind == "linear":
            return float(np.trace(rho @ self.operator).real)
        if self.kind == "quadratic":
            d = rho - self.operator
            return 0.5 * self.weight * float(np.sum(np.abs(d) ** 2))
        return 0.0

    def grad(self, rho):
        if self.kind == "linear":
            return self.operator
        if self.kind == "quadratic":
            return self.weight * (rho - self.operator)
        return np.zeros_like(rho)


NO_PENALTY = QuantumPenalty()


@dataclass
class QuantumPriorMixture:
    atoms: list

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("prior mixture needs at least one atom")
        shapes = {as_density(r).shape for _, r in self.atoms}
        if len(shapes) != 1:
            raise ValueError("mixture atoms have different dimensions")
        if any(w <= 0 for w, _ in self.atoms):
            raise ValueError("mixture weights must be positive")


@dataclass
class QuantumSchedule:
    times: list
    constraints: list
    penalties: Optional[list] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size != len(self.constraints) or t.size == 0:
            raise ValueError("schedule needs one constraint set per time")
        if np.any(np.diff(t) <= 0):
            raise ValueError("schedule times must be strictly increasing")
        first = self.constraints[0]
        pen0 = self.penalties[0] if self.penalties else None
        if (first is not None and not first.is_empty()) or (pen0 is not None and pen0.active):
            raise ValueError("the constraint at the initial time must be inactive")

    def penalty(self, k):
        if self.penalties is None or self.penalties[k] is None:
            return NO_PENALTY
        return self.penalties[k]


@dataclass
class QuantumProjectionResult:
    rho: np.ndarray
    multipliers: np.ndarray
    stationarity: float
    feasibility: float
    objective: float
    iterations: int
    method: str

    @property
    def kkt_residual(self):
        return max(self.stationarity, self.feasibility)


# -- Hermitian parametrization ---------------------------------------------


def hermitian_basis(k):
    """Basis of k x k Hermitian matrices, orthonormal for (A, B) -> tr(AB)."""
    basis = []
    for a in range(k):
        E = np.zeros((k, k), dtype=complex)
        E[a, a] = 1.0
        basis.append(E)
    s = 1.0 / math.sqrt(2.0)
    for a in range(k):
        for b in range(a + 1, k):
            E = np.zeros((k, k), dtype=complex)
            E[a, b] = E[b, a] = s
            basis.append(E)
            E = np.zeros((k, k), dtype=complex)
            E[a, b], E[b, a] = -1j * s, 1j * s
            basis.append(E)
    return np.array(basis)


def _coords(X, basis):
    return np.einsum("kab,ba->k", basis, X).real


def _divided_differences(lam, f, df):
    """Matrix of first divided differences f[lam_i, lam_j]."""
    L1, L2 = np.meshgrid(lam, lam, indexing="ij")
    diff = L1 - L2
    close = np.abs(diff) <= 1e-9 * np.maximum(1.0, np.abs(L1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (f(L1) - f(L2)) / diff
    mid = 0.5 * (L1 + L2)
    return np.where(close, df(mid), out)


def _exp_divided_differences(lam):
    L1, L2 = np.meshgrid(lam, lam, indexing="ij")
    d = L1 - L2
    small = np.abs(d) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = np.where(small, 1.0, np.expm1(d) / np.where(small, 1.0, d))
        return np.exp(L2) * q


def _frechet_pair(X, f, df, K):
    """Matrix G with tr(G H) = tr(Df(X)[H] K) for Hermitian H (Daleckii-Krein)."""
    lam, U = np.linalg.eigh(X)
    Kt = U.conj().T @ K @ U
    G = _divided_differences(lam, f, df) * Kt
    return U @ G @ U.conj().T


class _Compressed:
    """The projection problem restricted to the subspace spanned by V."""

    def __init__(self, omega, gamma, V, F):
        self.omega, self.gamma, self.V, self.F = omega, gamma, V, F
        k = V.shape[1]
        self.k = k
        Vh = V.conj().T
        if gamma == 1.0:
            w, U, logw = log_spectral(omega)
            self.L = Vh @ ((U * logw) @ U.conj().T) @ V
            self.L = 0.5 * (self.L + self.L.conj().T)
        elif gamma == 0.0:
            self.Omega = Vh @ omega @ V
            self.Omega = 0.5 * (self.Omega + self.Omega.conj().T)
            self.const = float(np.sum(_xlogx(spectrum(omega)[0])))
        else:
            self.K = Vh @ matrix_power(omega, 1.0 - gamma) @ V
            self.K = 0.5 * (self.K + self.K.conj().T)
        self.tr_omega = float(np.trace(omega).real)

    def embed(self, X):
        return self.V @ X @ self.V.conj().T

    def value(self, X):
        lam = np.linalg.eigvalsh(X)
        if lam.min() <= 0:
            return math.inf
        g = self.gamma
        lam_, U = np.linalg.eigh(X)
        if g == 1.0:
            val = self.tr_omega - lam.sum() + float(np.sum(lam * np.log(lam))) - float(np.trace(X @ self.L).real)
        elif g == 0.0:
            logX = (U * np.log(lam_)) @ U.conj().T
            val = lam.sum() - self.tr_omega + self.const - float(np.trace(self.Omega @ logX).real)
        else:
            Xg = (U * lam_**g) @ U.conj().T
            val = lam.sum() / (1 - g) + self.tr_omega / g - float(np.trace(Xg @ self.K).real) / (g * (1 - g))
        return val + self.F.value(self.embed(X))

    def grad(self, X):
        g = self.gamma
        k = self.k
        if g == 1.0:
            lam, U = np.linalg.eigh(X)
            G = (U * np.log(lam)) @ U.conj().T - self.L
        elif g == 0.0:
            G = np.eye(k) - _frechet_pair(X, np.log, lambda x: 1.0 / x, self.Omega)
        else:
            G = np.eye(k) / (1 - g) - _frechet_pair(
                X, lambda x: x**g, lambda x: g * x ** (g - 1), self.K) / (g * (1 - g))
        if self.F.active:
            G = G + self.V.conj().T @ self.F.grad(self.embed(X)) @ self.V
        return 0.5 * (G + G.conj().T)


def _xlogx(w):
    return np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0)


def _intersect(V, S):
    """Orthonormal basis of ran(V) intersected with ran(S)."""
    if S.shape[1] == 0:
        return V[:, :0]
    U, s, _ = np.linalg.svd(V.conj().T @ S, full_matrices=False)
    keep = s > 1 - 1e-10
    return V @ U[:, keep]


def _constraint_map(Q, V, basis):
    rows, vals = [], []
    Vh = V.conj().T
    for A, c in Q.moments:
        At = Vh @ as_hermitian(A) @ V
        rows.append(_coords(At, basis))
        vals.append(float(c))
    if Q.trace is not None:
        rows.append(_coords(np.eye(V.shape[1]), basis))
        vals.append(float(Q.trace))
    if not rows:
        return np.zeros((0, len(basis))), np.zeros(0)
    return np.array(rows), np.array(vals)


def _reduce(M, c):
    if M.shape[0] == 0:
        return M, c
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
    Ur = U[:, :r]
    if np.max(np.abs(c - Ur @ (Ur.T @ c)), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(c))):
        raise InfeasibleError("moment constraints are inconsistent")
    return Ur.T @ M, Ur.T @ c


def _strictly_feasible(M, c, basis, k, hint):
    """Phase 1: a positive definite X with M x = c, maximizing its smallest eigenvalue."""
    from_coords = lambda x: np.einsum("k,kab->ab", x, basis)  # noqa: E731
    if M.shape[0] == 0:
        return hint
    x_part = np.linalg.lstsq(M, c, rcond=None)[0]
    null = _null_space(M)
    if null.shape[1] == 0:
        X = from_coords(x_part)
        if np.linalg.eigvalsh(X).min() <= 0:
            raise InfeasibleError("the unique feasible operator is not positive definite")
        return X
    import cvxpy as cp

    Xv = cp.Variable((k, k), hermitian=True)
    t = cp.Variable()
    cons = [Xv - t * np.eye(k) >> 0, t <= 1.0]
    for row, val in zip(M, c):
        cons.append(cp.real(cp.trace(from_coords(row) @ Xv)) == val)
    prob = cp.Problem(cp.Maximize(t), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        prob.solve(solver=cp.SCS, eps=1e-10)
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        raise InfeasibleError("constraint set is empty")
    if Xv.value is None or t.value is None or t.value <= 1e-9:
        raise InfeasibleError("constraint set contains no faithful state on the support subspace")
    x = _coords(Xv.value, basis)
    x = x - np.linalg.pinv(M) @ (M @ x - c)
    X = from_coords(x)
    if np.linalg.eigvalsh(X).min() <= 0:
        raise InfeasibleError("phase 1 could not produce a strictly feasible point")
    return X


def _null_space(M):
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    _, s, Vt = np.linalg.svd(M)
    r = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
    return Vt[r:].T


def _primal_newton(prob, M, c, X0, basis):
    k = prob.k
    from_coords = lambda x: np.einsum("k,kab->ab", x, basis)  # noqa: E731
    N = _null_space(M)
    x0 = _coords(X0, basis)
    d = N.shape[1]

    def X_of(z):
        return from_coords(x0 + N @ z)

    def fz(z):
        return prob.value(X_of(z))

    def gz(z):
        return N.T @ _coords(prob.grad(X_of(z)), basis)

    z = np.zeros(d)
    f = fz(z)
    it = 0
    if d == 0:
        return X_of(z), 0
    for it in range(1, MAX_ITER + 1):
        g = gz(z)
        eps = 1e-6 * max(1.0, float(np.linalg.norm(z)))
        lam_min = np.linalg.eigvalsh(X_of(z)).min()
        eps = min(eps, 0.25 * lam_min)
        H = np.column_stack([(gz(z + eps * e) - gz(z - eps * e)) / (2 * eps) for e in np.eye(d)])
        H = 0.5 * (H + H.T)
        try:
            cho = np.linalg.cholesky(H)
            step = -np.linalg.solve(cho.T, np.linalg.solve(cho, g))
        except np.linalg.LinAlgError:
            step = -g
        dec = -float(g @ step)
        if dec < 1e-26 or np.max(np.abs(g)) < 1e-13:
            break
        t = 1.0
        while True:
            nf = fz(z + t * step)
            if nf <= f - 0.25 * t * dec + 1e-12 * max(1.0, abs(f)):
                break
            t *= 0.5
            if t < 1e-14:
                break
        z = z + t * step
        if np.linalg.norm(z) > 1e12:
            raise UnboundedError("objective is unbounded below on the feasible set")
        f = fz(z)
    else:
        raise ConvergenceError(f"primal Newton did not converge in {MAX_ITER} iterations")
    return X_of(z), it


def _dual_newton_exp(L, ops, c):
    """Newton on lam -> tr exp(L + sum lam_j A_j) - lam . c (gamma = 1, no penalty)."""
    m = len(ops)
    lam = np.zeros(m)

    def state(lam):
        H = L + sum(l * A for l, A in zip(lam, ops))
        w, U = np.linalg.eigh(0.5 * (H + H.conj().T))
        return w, U

    def dual(w, lam):
        return float(np.sum(np.exp(w))) - float(lam @ c)

    w, U = state(lam)
    obj = dual(w, lam)
    for it in range(1, MAX_ITER + 1):
        X = (U * np.exp(w)) @ U.conj().T
        g = np.array([np.trace(X @ A).real for A in ops]) - c
        if np.max(np.abs(g)) < 1e-14 * max(1.0, np.max(np.abs(c))):
            return X, lam, it
        D = _exp_divided_differences(w)
        At = [U.conj().T @ A @ U for A in ops]
        Hm = np.array([[np.sum(D * Ai * Aj.T).real for Aj in At] for Ai in At])
        if not np.all(np.isfinite(Hm)):
            raise ConvergenceError("dual iterates overflowed")
        step = np.linalg.solve(0.5 * (Hm + Hm.T), g)
        dec = float(g @ step)
        t = 1.0
        while True:
            nl = lam - t * step
            nw, nU = state(nl)
            nobj = dual(nw, nl)
            if nobj <= obj - 1e-4 * t * dec + 1e-12 * max(1.0, abs(obj)) or t < 1e-14:
                break
            t *= 0.5
        rel = abs(nobj - obj) / max(1.0, abs(obj))
        lam, w, U, obj = nl, nw, nU, nobj
        if rel < 1e-16 and np.max(np.abs(g)) < 1e-12:
            X = (U * np.exp(w)) @ U.conj().T
            return X, lam, it
    raise ConvergenceError(f"dual Newton did not converge in {MAX_ITER} iterations")


def _subspace(omega, gamma, Q):
    n = omega.shape[0]
    P = Q.projector(n)
    wP, UP = np.linalg.eigh(P)
    V = UP[:, wP > 0.5]
    if V.shape[1] == 0:
        raise InfeasibleError("support projector is zero")
    w, U = spectrum(omega)
    supp = U[:, w > SUPPORT_TOL]
    if gamma == 1.0:
        V = _intersect(V, supp)
        if V.shape[1] == 0:
            raise InfeasibleError("support projector is orthogonal to the prior")
    elif gamma == 0.0:
        outside = float(np.trace(omega).real - np.trace(V.conj().T @ omega @ V).real)
        if outside > SUPPORT_TOL:
            raise UnboundedError("gamma = 0 deviation is infinite when omega charges the complement of the support")
    return V


def solve_q_projection(omega, gamma, Q=None, F=None, method=None, start=None):
    """Quantum projection with multipliers and KKT diagnostics.

    ``method`` may force "primal" or "dual" (the latter only for gamma = 1
    without penalty); by default the dual route is used whenever it applies.
    ``start`` is an optional faithful feasible state for the primal route,
    replacing the phase-1 point.
    """
    omega = as_density(omega, "omega")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    Q = Q or QuantumConstraintSet()
    F = F or NO_PENALTY
    n = omega.shape[0]
    if Q.is_empty() and not F.active:
        return QuantumProjectionResult(omega.copy(), np.zeros(0), 0.0, 0.0, 0.0, 0, "identity")

    V = _subspace(omega, gamma, Q)
    k = V.shape[1]
    basis = hermitian_basis(k)
    M_full, c_full = _constraint_map(Q, V, basis)
    M, c = _reduce(M_full, c_full)
    prob = _Compressed(omega, gamma, V, F)
    if 0.0 < gamma < 1.0 and k > 1 and np.linalg.eigvalsh(prob.K).min() <= SUPPORT_TOL:
        raise ValueError("for gamma < 1 the prior must be faithful on the support subspace")

    use_dual = gamma == 1.0 and not F.active and M.shape[0] > 0
    if method == "primal":
        use_dual = False
    elif method == "dual" and not (gamma == 1.0 and not F.active):
        raise ValueError("the dual route needs gamma = 1 and no penalty")

    if start is not None:
        start = as_density(start, "start")
        X0 = V.conj().T @ start @ V
        if Q.violation(start) > 1e-9 or np.linalg.eigvalsh(X0).min() <= 0:
            raise ValueError("start must be feasible and faithful on the support subspace")
        use_dual = False
    if use_dual:
        ops = [np.einsum("k,kab->ab", row, basis) for row in M]
        try:
            X, _, iters = _dual_newton_exp(prob.L, ops, c)
            how = "dual-newton"
        except (np.linalg.LinAlgError, ConvergenceError) as exc:
            # a diverging dual usually means an empty or boundary-only feasible set;
            # phase 1 raises InfeasibleError in that case, otherwise fall back to the primal
            if method == "dual":
                raise ConvergenceError(f"dual Newton failed: {exc}") from None
            log.debug("dual Newton failed (%s); switching to the primal route", exc)
            use_dual = False
    if not use_dual:
        if start is None:
            hint = V.conj().T @ omega @ V + 1e-3 * np.eye(k)
            X0 = _strictly_feasible(M, c, basis, k, hint)
        else:
            # move onto the reduced affine set exactly
            x = _coords(0.5 * (X0 + X0.conj().T), basis)
            if M.shape[0]:
                x = x - np.linalg.pinv(M) @ (M @ x - c)
            X0 = np.einsum("k,kab->ab", x, basis)
        X, iters = _primal_newton(prob, M, c, X0, basis)
        how = "primal-newton"

    X = 0.5 * (X + X.conj().T)
    rho = prob.embed(X)
    rho = 0.5 * (rho + rho.conj().T)
    G = _coords(prob.grad(X), basis)
    if M_full.shape[0]:
        lam = np.linalg.lstsq(M_full.T, G, rcond=None)[0]
        stat = float(np.max(np.abs(G - M_full.T @ lam)))
    else:
        lam = np.zeros(0)
        stat = float(np.max(np.abs(G)))
    res = QuantumProjectionResult(
        rho=rho,
        multipliers=lam,
        stationarity=stat,
        feasibility=Q.violation(rho),
        objective=q_d_gamma(rho, omega, gamma) + F.value(rho),
        iterations=iters,
        method=how,
    )
    if res.stationarity > STATIONARITY_TOL or res.feasibility > FEASIBILITY_TOL:
        raise ConvergenceError(
            f"KKT residual too large (stationarity {res.stationarity:.2e}, "
            f"feasibility {res.feasibility:.2e})"
        )
    return res


def q_project(omega, gamma, Q=None, F=None):
    """arg min over rho in Q of q_d_gamma(rho, omega, gamma) + F(rho)."""
    return solve_q_projection(omega, gamma, Q, F).rho


def q_mixture_center(E, gamma):
    """State whose gamma-projection problem equals that of the mixture.

    (mean of omega_j^(1-gamma))^(1/(1-gamma)), the log-Euclidean mean at
    gamma = 1; the mixture objective differs from W q_d_gamma(., center)
    only by a constant.
    """
    atoms = [(float(w), as_density(r)) for w, r in E.atoms]
    if len(atoms) == 1:
        return atoms[0][1].copy()
    W = sum(w for w, _ in atoms)
    if gamma == 1.0:
        if not all(is_faithful(r) for _, r in atoms):
            raise ValueError("gamma = 1 mixtures need faithful atoms")
        S = 0
        for w, r in atoms:
            _, U, logw = log_spectral(r)
            S = S + w * (U * logw) @ U.conj().T
        S = S / W
        lam, U = np.linalg.eigh(0.5 * (S + S.conj().T))
        return (U * np.exp(lam)) @ U.conj().T
    b = 1.0 - gamma
    K = sum(w * matrix_power(r, b) for w, r in atoms) / W
    return matrix_power(0.5 * (K + K.conj().T), 1.0 / b)


def q_weighted_objective(E, gamma, rho, F=None):
    F = F or NO_PENALTY
    return sum(w * q_d_gamma(rho, r, gamma) for w, r in E.atoms) + F.value(rho)


def solve_q_weighted_projection(E, gamma, Q=None, F=None):
    F = F or NO_PENALTY
    W = float(sum(w for w, _ in E.atoms))
    res = solve_q_projection(q_mixture_center(E, gamma), gamma, Q, F.scaled(1.0 / W))
    res.objective = q_weighted_objective(E, gamma, res.rho, F)
    res.multipliers = W * res.multipliers
    return res


def q_weighted_project(E, gamma, Q=None, F=None):
    return solve_q_weighted_projection(E, gamma, Q, F).rho


@dataclass
class QuantumTrajectoryStep:
    t: float
    result: QuantumProjectionResult

    @property
    def rho(self):
        return self.result.rho


def q_trajectory(omega0, gamma, schedule, mode="literal"):
    """Projections of omega0 (literal) or of the previous state (chained)."""
    if mode not in ("literal", "chained"):
        raise ValueError(f"unknown trajectory mode {mode!r}")
    omega0 = as_density(omega0, "omega0")
    steps = []
    current = omega0
    for k, (t, Q) in enumerate(zip(schedule.times, schedule.constraints)):
        source = current if mode == "chained" else omega0
        try:
            res = solve_q_projection(source, gamma, Q, schedule.penalty(k))
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), step=k) from exc
        except ConvergenceError as exc:
            raise ConvergenceError(str(exc), step=k) from exc
        steps.append(QuantumTrajectoryStep(float(t), res))
        current = res.rho
    return steps


@dataclass
class LudersReport:
    gamma: float
    commuting: bool
    luders: np.ndarray
    candidates: dict
    notes: dict
    distances: dict

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "commuting": self.commuting,
            "candidates": {k: None if v is None else v.tolist() for k, v in self.candidates.items()},
            "notes": self.notes,
            "distances": self.distances,
        }


def luders_experiment(rho, P, gamma, commute_tol=1e-10, agree_tol=1e-10):
    """Compare entropic updates under a support constraint with the Luders rule.

    Both argument orders are tried: ``forward`` minimizes
    q_d_gamma(rho', rho, gamma) and ``reverse`` minimizes q_d_gamma(rho, rho', gamma).
    Candidates with infinite objective or unsupported geometry are recorded
    as None with a note.  In commuting cases every finite candidate must
    equal P rho P / tr(P rho P); otherwise the report is descriptive only.
    """
    rho = as_density(rho, "rho")
    P = as_hermitian(P, "P")
    mass = float(np.trace(P @ rho @ P).real)
    if mass <= SUPPORT_TOL:
        raise ValueError("tr(rho P) = 0: the projector annihilates the state")
    luders = P @ rho @ P / mass
    luders = 0.5 * (luders + luders.conj().T)
    commuting = bool(np.max(np.abs(P @ rho - rho @ P)) < commute_tol)
    Q = QuantumConstraintSet.normalized(support=P)
    candidates, notes, distances = {}, {}, {}
    for label, g in (("forward", gamma), ("reverse", 1.0 - gamma)):
        try:
            cand = q_project(rho, g, Q)
        except (UnboundedError, InfeasibleError, ValueError) as exc:
            candidates[label] = None
            notes[label] = str(exc)
            continue
        candidates[label] = cand
        distances[label] = {
            "trace_distance": trace_distance(cand, luders),
            "d_half": q_d_gamma(cand, luders, 0.5),
        }
    if commuting:
        for label, cand in candidates.items():
            if cand is not None and np.max(np.abs(cand - luders)) > agree_tol:
                raise RuntimeError(
                    f"commuting case: {label} candidate differs from the Luders state by "
                    f"{np.max(np.abs(cand - luders)):.3e}"
                )
    return LudersReport(gamma, commuting, luders, candidates, notes, distances)
