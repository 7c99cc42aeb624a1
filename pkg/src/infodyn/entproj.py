"""Constrained maximum relative gamma-entropy updating on classical weights.

``project(p, gamma, Q, F)`` returns the minimizer over q in Q of

    d_gamma(q, p) + F(q)   ( = d_{1-gamma}(p, q) + F(q) )

so that gamma = 1 is the usual maximum-entropy (I-)projection: moment
constraints produce Gibbs weights q = p exp(lambda . a) / Z, and a support
constraint produces conditioning.  The other argument order is obtained by
passing 1 - gamma.

Supported feasible sets are intersections of linear moment equalities, a
support restriction and a total-mass target; these are affine, so the
problem is convex for every gamma in [0, 1] and strictly convex on the
effective support.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .cmeasure import as_weights
from .divergence import d_gamma
from .errors import ConvergenceError, DegenerateConditioningError, InfeasibleError, UnboundedError

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
STATIONARITY_TOL = 1e-9
FEASIBILITY_TOL = 1e-10
MAX_ITER = 500


@dataclass
class ConstraintSet:
    """Moment equalities sum_i q_i a_i = c, optional support and total mass."""

    moments: list = field(default_factory=list)
    support: Optional[Sequence[int]] = None
    mass: Optional[float] = None

    @classmethod
    def normalized(cls, moments=(), support=None):
        return cls(list(moments), support, 1.0)

    def is_empty(self):
        return not self.moments and self.support is None and self.mass is None

    def matrix(self, n):
        rows, vals = [], []
        for a, c in self.moments:
            a = np.asarray(a, dtype=float)
            if a.shape != (n,):
                raise ValueError(f"moment function has shape {a.shape}, expected ({n},)")
            rows.append(a)
            vals.append(float(c))
        if self.mass is not None:
            rows.append(np.ones(n))
            vals.append(float(self.mass))
        if not rows:
            return np.zeros((0, n)), np.zeros(0)
        return np.array(rows), np.array(vals)

    def support_mask(self, n):
        mask = np.ones(n, dtype=bool)
        if self.support is not None:
            mask[:] = False
            idx = np.asarray(list(self.support), dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError("support index out of range")
            mask[idx] = True
        return mask

    def violation(self, q):
        A, c = self.matrix(q.size)
        eq = float(np.max(np.abs(A @ q - c))) if c.size else 0.0
        off = float(np.max(np.abs(q[~self.support_mask(q.size)]), initial=0.0))
        return max(eq, off)


@dataclass(frozen=True)
class PenaltyFunction:
    """Convex penalty on q: none, 0.5 (q-c)^T W (q-c), or slope . q."""

    kind: str = "none"
    weight: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    slope: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("none", "quadratic", "linear"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "quadratic":
            W = np.asarray(self.weight, dtype=float)
            if np.linalg.eigvalsh(0.5 * (W + W.T)).min() < -1e-12:
                raise ValueError("quadratic penalty weight must be positive semidefinite")

    @classmethod
    def quadratic(cls, weight, center):
        return cls("quadratic", np.asarray(weight, dtype=float), np.asarray(center, dtype=float))

    @classmethod
    def linear(cls, slope):
        return cls("linear", slope=np.asarray(slope, dtype=float))

    @property
    def active(self):
        return self.kind != "none"

    def scaled(self, factor):
        if self.kind == "quadratic":
            return PenaltyFunction.quadratic(factor * self.weight, self.center)
        if self.kind == "linear":
            return PenaltyFunction.linear(factor * self.slope)
        return self

    def value(self, q):
        if self.kind == "quadratic":
            d = q - self.center
            return 0.5 * float(d @ self.weight @ d)
        if self.kind == "linear":
            return float(self.slope @ q)
        return 0.0

    def grad(self, q):
        if self.kind == "quadratic":
            return 0.5 * (self.weight + self.weight.T) @ (q - self.center)
        if self.kind == "linear":
            return self.slope.copy()
        return np.zeros_like(q)

    def hess(self, n):
        if self.kind == "quadratic":
            return 0.5 * (self.weight + self.weight.T)
        return np.zeros((n, n))


NO_PENALTY = PenaltyFunction()


@dataclass
class PriorMixture:
    atoms: list

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("prior mixture needs at least one atom")
        n = None
        for w, mu in self.atoms:
            if w <= 0:
                raise ValueError("mixture weights must be positive")
            mu = as_weights(mu)
            if n is not None and mu.size != n:
                raise ValueError("mixture atoms have different dimensions")
            n = mu.size


@dataclass
class Schedule:
    """Constraint sets F(t_k); the first must be inactive."""

    times: Sequence[float]
    constraints: list
    penalties: Optional[list] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size != len(self.constraints):
            raise ValueError("schedule needs one constraint set per time")
        if t.size == 0:
            raise ValueError("empty schedule")
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
class ProjectionResult:
    q: np.ndarray
    multipliers: np.ndarray
    stationarity: float
    feasibility: float
    objective: float
    iterations: int
    method: str

    @property
    def kkt_residual(self):
        return max(self.stationarity, self.feasibility)


# -- per-coordinate pieces of q -> d_gamma(q, p) ---------------------------


def _grad(q, p, gamma):
    if gamma == 1.0:
        return np.log(q / p)
    b = 1.0 - gamma
    return -np.expm1(b * np.log(p / q)) / b


def _hess_diag(q, p, gamma):
    return (p / q) ** (1.0 - gamma) / q


def _q_of_s(s, p, gamma):
    """Inverse of the gradient map: q with _grad(q, p) = s (None outside the domain)."""
    if gamma == 1.0:
        return p * np.exp(s)
    b = 1.0 - gamma
    base = 1.0 - b * s
    if np.any(base <= 0):
        return None
    return p * base ** (-1.0 / b)


def _conjugate(s, p, gamma):
    q = _q_of_s(s, p, gamma)
    if q is None:
        return np.inf, None
    phi = q / p
    if gamma == 0.0:
        val = p * np.log(phi)
    else:
        val = p * np.expm1(gamma * np.log(phi)) / gamma
    return float(np.sum(val)), q


# -- preprocessing --------------------------------------------------------


def _reduce(A, c):
    """Drop redundant rows by SVD; raise if the system is inconsistent."""
    if A.shape[0] == 0:
        return A, c
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(sv > RANK_TOL * max(1.0, sv[0])))
    Ur = U[:, :r]
    resid = c - Ur @ (Ur.T @ c)
    if np.max(np.abs(resid), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(c))):
        raise InfeasibleError("moment constraints are inconsistent")
    return Ur.T @ A, Ur.T @ c


def _interior_point(A, c, n):
    """Phase 1: maximize the smallest coordinate over {q >= 0, A q = c}."""
    if A.shape[0] == 0:
        return np.ones(n), 1.0
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A_eq = np.hstack([A, np.zeros((A.shape[0], 1))])
    A_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=c,
                  bounds=[(0, None)] * n + [(None, 1.0)], method="highs")
    if res.status == 2:
        raise InfeasibleError("constraint set is empty")
    if res.status != 0:
        raise InfeasibleError(f"phase-1 linear program failed: {res.message}")
    return res.x[:n], float(res.x[-1])


def _forced_zeros(A, c, n, tol):
    """Coordinates that vanish on every feasible point."""
    zero = np.zeros(n, dtype=bool)
    for i in range(n):
        cost = np.zeros(n)
        cost[i] = -1.0
        res = linprog(cost, A_eq=A, b_eq=c, bounds=[(0, None)] * n, method="highs")
        if res.status == 0 and -res.fun <= tol:
            zero[i] = True
    return zero


# -- solvers --------------------------------------------------------------


def _dual_newton(p, A, c, gamma):
    """Damped Newton on the convex dual sum conj(A^T lam) - lam . c."""
    lam = np.zeros(A.shape[0])
    val, q = _conjugate(A.T @ lam, p, gamma)
    obj = val - lam @ c
    for it in range(1, MAX_ITER + 1):
        g = A @ q - c
        b = 1.0 - gamma
        dq = q if gamma == 1.0 else q * (q / p) ** b
        H = (A * dq) @ A.T
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        decrement = float(g @ step)
        t = 1.0
        while True:
            new_lam = lam - t * step
            new_val, new_q = _conjugate(A.T @ new_lam, p, gamma)
            new_obj = new_val - new_lam @ c
            if new_q is not None and new_obj <= obj - 1e-4 * t * decrement + 1e-12 * max(1.0, abs(obj)):
                break
            t *= 0.5
            if t < 1e-14:
                break
        if new_q is None:
            raise ConvergenceError("dual Newton line search left the domain")
        rel_change = abs(new_obj - obj) / max(1.0, abs(obj))
        lam, q, obj = new_lam, new_q, new_obj
        if not np.all(np.isfinite(q)) or np.max(q) > 1e12:
            raise UnboundedError("dual iterates diverge")
        resid = np.max(np.abs(A @ q - c))
        scale = max(1.0, np.max(np.abs(c)))
        if resid < 1e-14 * scale or (rel_change < 1e-12 and resid < 1e-12 * scale):
            return _polish(p, A, c, gamma, q, lam, resid) + (it,)
    raise ConvergenceError(f"dual Newton did not converge in {MAX_ITER} iterations")


def _polish(p, A, c, gamma, q, lam, resid, steps=3):
    """Undamped Newton steps near the optimum, kept while the residual shrinks."""
    dq_pow = 1.0 - gamma
    for _ in range(steps):
        dq = q if gamma == 1.0 else q * (q / p) ** dq_pow
        try:
            step = np.linalg.solve((A * dq) @ A.T, A @ q - c)
        except np.linalg.LinAlgError:
            break
        new_lam = lam - step
        new_q = _q_of_s(A.T @ new_lam, p, gamma)
        if new_q is None:
            break
        new_resid = np.max(np.abs(A @ new_q - c))
        if new_resid >= resid:
            break
        q, lam, resid = new_q, new_lam, new_resid
    return q, lam


def _primal_newton(p, A, c, gamma, F, q0, idx, n):
    """Feasible-start Newton on d_gamma(q, p) + F(q) subject to A q = c."""
    m = p.size

    def full(v):
        out = np.zeros(n)
        out[idx] = v
        return out

    def objective(v):
        if np.any(v <= 0):
            return np.inf
        return d_gamma(v, p, gamma) + F.value(full(v))

    def gradient(v):
        return _grad(v, p, gamma) + F.grad(full(v))[idx]

    Fh = F.hess(n)[np.ix_(idx, idx)]
    q = q0.copy()
    f = objective(q)
    k = A.shape[0]
    for it in range(1, MAX_ITER + 1):
        g = gradient(q)
        H = np.diag(_hess_diag(q, p, gamma)) + Fh
        K = np.block([[H, A.T], [A, np.zeros((k, k))]])
        rhs = np.concatenate([-g, c - A @ q])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        dx = sol[:m]
        decrement = float(dx @ H @ dx)
        if decrement < 1e-26:
            break
        t = 1.0
        while np.any(q + t * dx <= 0):
            t *= 0.5
        while objective(q + t * dx) > f + 0.25 * t * float(g @ dx) + 1e-12 * max(1.0, abs(f)):
            t *= 0.5
            if t < 1e-14:
                break
        new_q = q + t * dx
        new_f = objective(new_q)
        if np.max(new_q) > 1e12:
            raise UnboundedError("objective is unbounded below on the feasible set")
        rel_change = abs(new_f - f) / max(1.0, abs(f))
        q, f = new_q, new_f
        if rel_change < 1e-15 and decrement < 1e-20:
            break
    else:
        raise ConvergenceError(f"primal Newton did not converge in {MAX_ITER} iterations")
    lam = np.linalg.lstsq(A.T, gradient(q), rcond=None)[0] if k else np.zeros(0)
    return q, lam, it


def solve_projection(p, gamma, Q=None, F=None, method=None, start=None):
    """Full projection with multipliers and KKT diagnostics.

    ``method`` forces "dual" (no penalty) or "primal"; the default uses the
    dual whenever there is no penalty.  ``start`` is an optional strictly
    positive feasible point for the primal route, replacing the phase-1 point.
    """
    if method not in (None, "dual", "primal"):
        raise ValueError(f"unknown method {method!r}")
    p = as_weights(p, "p")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    Q = Q or ConstraintSet()
    F = F or NO_PENALTY
    n = p.size
    if Q.is_empty() and not F.active:
        return ProjectionResult(p.copy(), np.zeros(0), 0.0, 0.0, 0.0, 0, "identity")

    mask = Q.support_mask(n)
    if gamma == 1.0:
        mask &= p > 0
    elif gamma == 0.0 and np.any(p[~mask] > 0):
        raise UnboundedError("gamma = 0 deviation is infinite when p charges points outside the support")
    if gamma < 1.0 and np.any(p[mask] == 0):
        raise ValueError("for gamma < 1 the prior must be positive on the support set")

    A_full, c_full = Q.matrix(n)
    idx = np.flatnonzero(mask)
    A, c = _reduce(A_full[:, idx], c_full)
    if idx.size == 0:
        if np.max(np.abs(c), initial=0.0) > FEASIBILITY_TOL:
            raise InfeasibleError("no admissible coordinates left")
        q = np.zeros(n)
        return ProjectionResult(q, np.zeros(A_full.shape[0]), 0.0, Q.violation(q),
                                d_gamma(q, p, gamma) + F.value(q), 0, "trivial")

    q0, slack = _interior_point(A, c, idx.size)
    if slack <= 1e-10:
        zero = _forced_zeros(A, c, idx.size, 1e-10)
        if gamma == 0.0 and np.any(zero & (p[idx] > 0)):
            raise UnboundedError("every feasible point vanishes where p is positive (gamma = 0)")
        log.debug("pinning %d coordinates that vanish on the feasible set", zero.sum())
        idx = idx[~zero]
        A, c = _reduce(A_full[:, idx], c_full)
        q0, slack = _interior_point(A, c, idx.size)
        if slack <= 1e-10:
            raise InfeasibleError("feasible set has no relative interior after facial reduction")

    ps = p[idx]
    if method == "dual" and F.active:
        raise ValueError("the dual route needs F = none")
    if start is not None:
        start = np.asarray(start, dtype=float)
        if start.shape != (n,) or np.any(start[idx] <= 0) or Q.violation(start) > 1e-9:
            raise ValueError("start must be a feasible point, positive on the effective support")
        q0 = start[idx]
        method = method or "primal"
    if F.active or method == "primal":
        qs, lam, iters = _primal_newton(ps, A, c, gamma, F, q0, idx, n)
        method = "primal-newton"
    elif A.shape[0] == 0:
        qs, lam, iters = ps.copy(), np.zeros(0), 0
        method = "identity"
    else:
        qs, lam, iters = _dual_newton(ps, A, c, gamma)
        method = "dual-newton"

    q = np.zeros(n)
    q[idx] = qs
    grad = _grad(qs, ps, gamma) + F.grad(q)[idx]
    if A_full.shape[0]:
        full_lam = np.linalg.lstsq(A_full[:, idx].T, grad, rcond=None)[0]
        stationarity = float(np.max(np.abs(grad - A_full[:, idx].T @ full_lam)))
    else:
        full_lam = np.zeros(0)
        stationarity = float(np.max(np.abs(grad)))
    result = ProjectionResult(
        q=q,
        multipliers=full_lam,
        stationarity=stationarity,
        feasibility=Q.violation(q),
        objective=d_gamma(q, p, gamma) + F.value(q),
        iterations=iters,
        method=method,
    )
    if result.stationarity > STATIONARITY_TOL or result.feasibility > FEASIBILITY_TOL:
        raise ConvergenceError(
            f"KKT residual too large (stationarity {result.stationarity:.2e}, "
            f"feasibility {result.feasibility:.2e})"
        )
    return result


def project(p, gamma, Q=None, F=None):
    """arg min over q in Q of d_gamma(q, p) + F(q)."""
    return solve_projection(p, gamma, Q, F).q


def mixture_center(E, gamma):
    """Power mean (sum w mu^(1-gamma) / W)^(1/(1-gamma)); geometric mean at gamma = 1.

    sum_j w_j d_gamma(q, mu_j) equals W d_gamma(q, center) up to a constant
    independent of q.
    """
    w = np.array([a[0] for a in E.atoms], dtype=float)
    mus = np.array([as_weights(a[1]) for a in E.atoms])
    if len(E.atoms) == 1:
        return mus[0].copy()
    W = w.sum()
    if gamma == 1.0:
        with np.errstate(divide="ignore"):
            logs = np.log(mus)
        out = np.exp(np.where(np.isneginf(logs), -np.inf, logs).T @ w / W)
        return np.where(np.any(mus == 0, axis=0), 0.0, out)
    b = 1.0 - gamma
    return ((w @ mus**b) / W) ** (1.0 / b)


def weighted_objective(E, gamma, q, F=None):
    F = F or NO_PENALTY
    return sum(w * d_gamma(q, mu, gamma) for w, mu in E.atoms) + F.value(q)


def solve_weighted_projection(E, gamma, Q=None, F=None):
    F = F or NO_PENALTY
    W = float(sum(a[0] for a in E.atoms))
    res = solve_projection(mixture_center(E, gamma), gamma, Q, F.scaled(1.0 / W))
    res.objective = weighted_objective(E, gamma, res.q, F)
    res.multipliers = W * res.multipliers
    return res


def weighted_project(E, gamma, Q=None, F=None):
    """arg min over q in Q of sum_j w_j d_gamma(q, mu_j) + F(q)."""
    return solve_weighted_projection(E, gamma, Q, F).q


def bayes_update(prior_joint, observed):
    """Posterior over theta from a joint over (x, theta) and an observed row x = b.

    Computed as the gamma = 1 projection onto states concentrated on the row
    x = b with unit mass, then marginalized over x.
    """
    joint = np.asarray(prior_joint, dtype=float)
    if joint.ndim != 2:
        raise ValueError("prior_joint must be a |X| x |Theta| matrix")
    nx, nt = joint.shape
    if not 0 <= observed < nx:
        raise ValueError(f"observed index {observed} out of range")
    if joint[observed].sum() <= 0:
        raise DegenerateConditioningError(f"zero marginal mass at x = {observed}")
    Q = ConstraintSet.normalized(support=range(observed * nt, (observed + 1) * nt))
    q = project(joint.ravel(), 1.0, Q)
    return q.reshape(nx, nt).sum(axis=0)


def pythagorean_defect(p, q, gamma, Q, p_star=None):
    """d(q, p) - d(p*, p) - d(q, p*) with d = d_gamma(., ., gamma) and p* the projection.

    Zero when Q is affine in the raw chart (gamma = 1) and nonnegative for q in
    a convex Q whose projection is p*.
    """
    q = np.asarray(q, dtype=float)
    if p_star is None:
        if Q.violation(q) > 1e-8:
            raise ValueError("q is not in the constraint set")
        p_star = project(p, gamma, Q)
    return d_gamma(q, p, gamma) - d_gamma(p_star, p, gamma) - d_gamma(q, p_star, gamma)


@dataclass
class TrajectoryStep:
    t: float
    result: ProjectionResult

    @property
    def q(self):
        return self.result.q


def trajectory(p0, gamma, schedule, mode="literal"):
    """Entropic evolution p(t_k) under a constraint schedule.

    ``literal`` projects p0 at every time; ``chained`` projects the previous
    state, which is inherently sequential.
    """
    if mode not in ("literal", "chained"):
        raise ValueError(f"unknown trajectory mode {mode!r}")
    steps = []
    current = as_weights(p0, "p0")
    for k, (t, Q) in enumerate(zip(schedule.times, schedule.constraints)):
        source = current if mode == "chained" else p0
        try:
            res = solve_projection(source, gamma, Q, schedule.penalty(k))
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), step=k) from exc
        except ConvergenceError as exc:
            raise ConvergenceError(str(exc), step=k) from exc
        steps.append(TrajectoryStep(float(t), res))
        current = res.q
    return steps
