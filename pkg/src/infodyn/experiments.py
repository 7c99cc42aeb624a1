"""Canned experiments, config validation and result serialization for the CLI.

A config is a JSON object with an ``experiment`` name, optional ``gamma``,
``seed``, ``mode`` and ``output`` fields, and experiment-specific
parameters.  Every runner returns flat rows (one per step or item) and a
summary of residuals; rows go to ``result.csv`` and everything to
``result.json``.
"""

import copy
import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import entproj, qproj
from .divergence import bregman, csiszar, d_gamma, f_gamma, gamma_bregman
from .infogeo import eguchi_connection, eguchi_metric, fisher_rao_metric, gamma_chart
from .qstate import (
    as_density,
    as_hermitian,
    petz_limit_entropy,
    petz_reference,
    q_d_gamma,
    random_density,
)


class ConfigError(ValueError):
    pass


# -- matrix I/O --------------------------------------------------------------


def encode_matrix(M):
    """{"n": n, "entries": row-major list of [re, im] pairs}."""
    M = np.asarray(M, dtype=complex)
    return {"n": int(M.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in M.ravel()]}


def decode_matrix(obj, name="matrix"):
    """Inverse of encode_matrix; nested real or [re, im] lists are accepted too."""
    if isinstance(obj, dict):
        try:
            n = int(obj["n"])
            entries = obj["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: matrix objects need 'n' and 'entries'") from exc
        if len(entries) != n * n:
            raise ConfigError(f"{name}: expected {n * n} entries, got {len(entries)}")
        vals = [_complex(e, name) for e in entries]
        return np.array(vals, dtype=complex).reshape(n, n)
    if isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj):
        rows = [[_complex(e, name) for e in r] for r in obj]
        if any(len(r) != len(rows) for r in rows):
            raise ConfigError(f"{name}: matrix must be square")
        return np.array(rows, dtype=complex)
    raise ConfigError(f"{name}: not a matrix")


def _complex(e, name):
    if isinstance(e, (int, float)):
        return complex(e)
    if isinstance(e, list) and len(e) == 2 and all(isinstance(v, (int, float)) for v in e):
        return complex(e[0], e[1])
    raise ConfigError(f"{name}: entries must be numbers or [re, im] pairs")


# -- schema ------------------------------------------------------------------

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {
    "oneOf": [
        {
            "type": "object",
            "required": ["n", "entries"],
            "properties": {"n": {"type": "integer", "minimum": 1}, "entries": {"type": "array"}},
        },
        {"type": "array", "items": {"type": "array"}, "minItems": 1},
    ]
}
_GAMMA = {"type": "number", "minimum": 0, "maximum": 1}
_COMMON = {
    "experiment": {"type": "string"},
    "gamma": _GAMMA,
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "mode": {"enum": ["literal", "chained"]},
    "output": {"type": "string"},
}
_CLASSICAL_CONSTRAINTS = {
    "type": "object",
    "properties": {
        "moments": {
            "type": "array",
            "items": {"type": "object", "required": ["a", "c"], "properties": {"a": _VEC, "c": _NUM}},
        },
        "support": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "mass": _NUM,
    },
    "additionalProperties": False,
}
_QUANTUM_CONSTRAINTS = {
    "type": "object",
    "properties": {
        "moments": {
            "type": "array",
            "items": {"type": "object", "required": ["A", "c"], "properties": {"A": _MATRIX, "c": _NUM}},
        },
        "support": _MATRIX,
        "trace": _NUM,
    },
    "additionalProperties": False,
}
_CLASSICAL_PENALTY = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["none", "quadratic", "linear"]},
        "weight": {"type": "array"},
        "center": _VEC,
        "slope": _VEC,
    },
    "additionalProperties": False,
}
_QUANTUM_PENALTY = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["none", "quadratic", "linear"]},
        "weight": _NUM,
        "center": _MATRIX,
        "operator": _MATRIX,
    },
    "additionalProperties": False,
}


def _schema(required=(), **props):
    return {
        "type": "object",
        "required": ["experiment", *required],
        "properties": {**_COMMON, **props},
        "additionalProperties": False,
    }


# -- parsing helpers ---------------------------------------------------------


def classical_constraints(obj):
    if obj is None:
        return entproj.ConstraintSet()
    moments = [(np.asarray(m["a"], dtype=float), float(m["c"])) for m in obj.get("moments", [])]
    return entproj.ConstraintSet(moments, obj.get("support"), obj.get("mass"))


def classical_penalty(obj):
    if obj is None or obj["kind"] == "none":
        return entproj.NO_PENALTY
    if obj["kind"] == "linear":
        return entproj.PenaltyFunction.linear(obj["slope"])
    W = np.asarray(obj["weight"], dtype=float)
    c = np.asarray(obj["center"], dtype=float)
    if W.ndim == 0 or W.ndim == 1:
        W = np.diag(np.broadcast_to(W, c.shape)).astype(float)
    return entproj.PenaltyFunction.quadratic(W, c)


def quantum_constraints(obj):
    if obj is None:
        return qproj.QuantumConstraintSet()
    moments = [(as_hermitian(decode_matrix(m["A"], "A")), float(m["c"])) for m in obj.get("moments", [])]
    support = obj.get("support")
    if support is not None:
        support = decode_matrix(support, "support")
    return qproj.QuantumConstraintSet(moments, support, obj.get("trace"))


def quantum_penalty(obj):
    if obj is None or obj["kind"] == "none":
        return qproj.NO_PENALTY
    if obj["kind"] == "linear":
        return qproj.QuantumPenalty.linear(decode_matrix(obj["operator"], "operator"))
    return qproj.QuantumPenalty.quadratic(obj["weight"], decode_matrix(obj["center"], "center"))


def _weights_row(prefix, v):
    return {f"{prefix}_{i}": float(x) for i, x in enumerate(v)}


def _matrix_row(prefix, M):
    out = {}
    n = M.shape[0]
    for i in range(n):
        for j in range(n):
            out[f"{prefix}_{i}{j}_re"] = float(M[i, j].real)
            out[f"{prefix}_{i}{j}_im"] = float(M[i, j].imag)
    return out


def _gamma(cfg, default):
    return float(cfg.get("gamma", default))


def _rng(cfg):
    return np.random.default_rng(int(cfg.get("seed", 0)))


# -- runners -----------------------------------------------------------------


def run_divergence_sweep(cfg):
    """d_gamma against its Csiszar and Bregman forms on random positive pairs."""
    rng = _rng(cfg)
    gammas = cfg.get("gammas", [0.0, 0.25, 0.5, 0.75, 1.0])
    n, pairs = int(cfg.get("n", 4)), int(cfg.get("pairs", 20))
    rows = []
    worst = 0.0
    for k in range(pairs):
        mu = rng.uniform(0.05, 2.0, n)
        nu = rng.uniform(0.05, 2.0, n)
        for g in gammas:
            d = d_gamma(mu, nu, g)
            dc = csiszar(mu, nu, f_gamma(g))
            db = bregman(mu, nu, gamma_bregman(g))
            err = max(abs(d - dc), abs(d - db))
            worst = max(worst, err)
            rows.append({"step": k, "t": float(g), "d_gamma": d, "csiszar": dc, "bregman": db, "identity_residual": err})
    return rows, {"max_identity_residual": worst}


def run_metric_extract(cfg):
    """Eguchi metric against Fisher-Rao and connection flatness in the gamma charts."""
    mu = np.asarray(cfg.get("mu", [0.2, 0.3, 0.5]), dtype=float)
    gammas = cfg.get("gammas", [0.0, 0.25, 0.5, 0.75, 1.0])
    fisher = fisher_rao_metric(mu).entries
    rows = []
    worst_metric = worst_flat = 0.0
    for k, g in enumerate(gammas):
        D = lambda a, b, g=g: d_gamma(a, b, g)  # noqa: E731
        G = eguchi_metric(D, mu).entries
        err = float(np.max(np.abs(G - fisher)))
        primal = eguchi_connection(D, mu, gamma_chart(g)).primal
        dual = eguchi_connection(D, mu, gamma_chart(1.0 - g)).dual
        flat = max(float(np.max(np.abs(primal))), float(np.max(np.abs(dual))))
        worst_metric, worst_flat = max(worst_metric, err), max(worst_flat, flat)
        row = {"step": k, "t": float(g)}
        row.update({f"g_{i}{j}": float(G[i, j]) for i in range(mu.size) for j in range(mu.size)})
        row.update({"metric_error": err, "flat_chart_connection_max": flat})
        rows.append(row)
    return rows, {"max_metric_error": worst_metric, "max_flat_connection": worst_flat}


def _gibbs_summary(res, a, c):
    return {
        "kkt_residual": res.kkt_residual,
        "moment_residual": abs(float(np.dot(a, res.q)) - c),
    }


def run_dice(cfg):
    """Maximum-entropy die with a prescribed mean."""
    faces = np.asarray(cfg.get("faces", [1, 2, 3, 4, 5, 6]), dtype=float)
    mean = float(cfg.get("mean", 4.5))
    prior = np.asarray(cfg.get("prior", np.full(faces.size, 1.0 / faces.size)), dtype=float)
    g = _gamma(cfg, 1.0)
    res = entproj.solve_projection(prior, g, entproj.ConstraintSet.normalized([(faces, mean)]))
    row = {"step": 0, "t": 0.0, **_weights_row("q", res.q)}
    summary = _gibbs_summary(res, faces, mean)
    row.update({"mean_residual": summary["moment_residual"], "kkt_residual": res.kkt_residual})
    row.update(_weights_row("lambda", res.multipliers))
    return [row], summary


def run_bayes_recovery(cfg):
    """Posterior from entropic projection against direct Bayes conditioning."""
    if "joint" in cfg:
        trials = [(np.asarray(cfg["joint"], dtype=float), int(cfg.get("observed", 0)))]
    else:
        rng = _rng(cfg)
        nx, nt = int(cfg.get("nx", 3)), int(cfg.get("ntheta", 4))
        trials = []
        for _ in range(int(cfg.get("trials", 10))):
            joint = rng.dirichlet(np.ones(nx * nt)).reshape(nx, nt)
            trials.append((joint, int(rng.integers(nx))))
    rows, worst = [], 0.0
    for k, (joint, b) in enumerate(trials):
        post = entproj.bayes_update(joint, b)
        oracle = joint[b] / joint[b].sum()
        err = float(np.max(np.abs(post - oracle)))
        worst = max(worst, err)
        rows.append({"step": k, "t": float(b), **_weights_row("posterior", post),
                     **_weights_row("oracle", oracle), "max_abs_error": err})
    return rows, {"max_abs_error": worst}


_SZ = np.diag([1.0, -1.0]).astype(complex)


def run_gibbs_qubit(cfg):
    """Qubit Gibbs state under a magnetization constraint."""
    omega = decode_matrix(cfg["omega"], "omega") if "omega" in cfg else np.eye(2) / 2
    A = decode_matrix(cfg["observable"], "observable") if "observable" in cfg else _SZ
    m = float(cfg.get("m", 0.5))
    g = _gamma(cfg, 1.0)
    Q = qproj.QuantumConstraintSet.normalized([(A, m)])
    res = qproj.solve_q_projection(omega, g, Q)
    row = {"step": 0, "t": 0.0, **_matrix_row("rho", res.rho),
           "moment_residual": abs(float(np.trace(res.rho @ A).real) - m), "kkt_residual": res.kkt_residual}
    return [row], {"kkt_residual": res.kkt_residual}


def run_luders(cfg):
    """Entropic updates under a support constraint compared with P rho P / tr(P rho P)."""
    rho = decode_matrix(cfg["rho"], "rho")
    P = decode_matrix(cfg["projector"], "projector")
    g = _gamma(cfg, 1.0)
    rep = qproj.luders_experiment(rho, P, g)
    rows = [{"step": 0, "t": 0.0, "candidate": "luders", **_matrix_row("rho", rep.luders),
             "trace_distance": 0.0, "d_half": 0.0}]
    for k, label in enumerate(("forward", "reverse"), start=1):
        cand = rep.candidates.get(label)
        if cand is None:
            continue
        rows.append({"step": k, "t": 0.0, "candidate": label, **_matrix_row("rho", cand),
                     **rep.distances[label]})
    return rows, {"commuting": rep.commuting, "notes": rep.notes}


def _ramp(cfg, default_times, default_targets):
    times = [float(t) for t in cfg.get("times", default_times)]
    targets = [None if c is None else float(c) for c in cfg.get("targets", default_targets)]
    if len(times) != len(targets):
        raise ConfigError("times and targets must have equal length")
    return times, targets


def run_trajectory_classical(cfg):
    """Moment target ramped over time; each step is a constrained projection."""
    p0 = np.asarray(cfg.get("p0", [1 / 6] * 6), dtype=float)
    a = np.asarray(cfg.get("a", np.arange(1, p0.size + 1)), dtype=float)
    times, targets = _ramp(cfg, [0, 1, 2, 3, 4], [None, 3.0, 3.5, 4.0, 4.5])
    cons = [entproj.ConstraintSet() if c is None else entproj.ConstraintSet.normalized([(a, c)]) for c in targets]
    steps = entproj.trajectory(p0, _gamma(cfg, 1.0), entproj.Schedule(times, cons), cfg.get("mode", "literal"))
    rows = []
    for k, s in enumerate(steps):
        lam = s.result.multipliers[0] if s.result.multipliers.size else 0.0
        rows.append({"step": k, "t": s.t, **_weights_row("q", s.q), "multiplier": float(lam),
                     "kkt_residual": s.result.kkt_residual})
    return rows, {"max_kkt_residual": max(r["kkt_residual"] for r in rows)}


def run_trajectory_quantum(cfg):
    """Qubit magnetization ramp tr(rho A) = m(t)."""
    omega0 = decode_matrix(cfg["omega0"], "omega0") if "omega0" in cfg else np.eye(2) / 2
    A = decode_matrix(cfg["observable"], "observable") if "observable" in cfg else _SZ
    times, targets = _ramp(cfg, [0, 1, 2, 3, 4], [None, 0.2, 0.4, 0.6, 0.8])
    cons = [qproj.QuantumConstraintSet() if c is None else qproj.QuantumConstraintSet.normalized([(A, c)])
            for c in targets]
    steps = qproj.q_trajectory(omega0, _gamma(cfg, 1.0), qproj.QuantumSchedule(times, cons),
                               cfg.get("mode", "literal"))
    rows = []
    for k, s in enumerate(steps):
        lam = s.result.multipliers[0] if s.result.multipliers.size else 0.0
        rows.append({"step": k, "t": s.t, **_matrix_row("rho", s.rho), "multiplier": float(lam),
                     "kkt_residual": s.result.kkt_residual})
    return rows, {"max_kkt_residual": max(r["kkt_residual"] for r in rows)}


def run_cocycle_limit(cfg):
    """Small-t limit of the cocycle quotient against the closed-form relative entropy."""
    if "omega" in cfg:
        pairs = [(decode_matrix(cfg["omega"], "omega"), decode_matrix(cfg["phi"], "phi"))]
    else:
        rng = _rng(cfg)
        n = int(cfg.get("n", 2))
        pairs = [(random_density(rng, n, faithful_floor=0.05), random_density(rng, n, faithful_floor=0.05))
                 for _ in range(int(cfg.get("pairs", 10)))]
    rows, worst = [], 0.0
    for k, (w, p) in enumerate(pairs):
        lim = petz_limit_entropy(w, p)
        ref = petz_reference(w, p)
        worst = max(worst, abs(lim - ref))
        rows.append({"step": k, "t": 0.0, "limit": lim, "closed_form": ref, "abs_error": abs(lim - ref)})
    return rows, {"max_abs_error": worst}


def run_project(cfg):
    """Classical projection (optionally onto a weighted prior mixture)."""
    g = _gamma(cfg, 1.0)
    Q = classical_constraints(cfg.get("constraints"))
    F = classical_penalty(cfg.get("penalty"))
    if "mixture" in cfg:
        E = entproj.PriorMixture([(float(m["w"]), np.asarray(m["mu"], dtype=float)) for m in cfg["mixture"]])
        res = entproj.solve_weighted_projection(E, g, Q, F)
    elif "prior" in cfg:
        res = entproj.solve_projection(np.asarray(cfg["prior"], dtype=float), g, Q, F)
    else:
        raise ConfigError("project needs 'prior' or 'mixture'")
    row = {"step": 0, "t": 0.0, **_weights_row("q", res.q), "objective": res.objective,
           "kkt_residual": res.kkt_residual}
    return [row], {"kkt_residual": res.kkt_residual, "method": res.method}


def run_qproject(cfg):
    """Quantum projection (optionally onto a weighted prior mixture)."""
    g = _gamma(cfg, 1.0)
    Q = quantum_constraints(cfg.get("constraints"))
    F = quantum_penalty(cfg.get("penalty"))
    if "mixture" in cfg:
        E = qproj.QuantumPriorMixture([(float(m["w"]), decode_matrix(m["rho"], "rho")) for m in cfg["mixture"]])
        res = qproj.solve_q_weighted_projection(E, g, Q, F)
    elif "prior" in cfg:
        res = qproj.solve_q_projection(decode_matrix(cfg["prior"], "prior"), g, Q, F)
    else:
        raise ConfigError("qproject needs 'prior' or 'mixture'")
    row = {"step": 0, "t": 0.0, **_matrix_row("rho", res.rho), "objective": res.objective,
           "kkt_residual": res.kkt_residual}
    return [row], {"kkt_residual": res.kkt_residual, "method": res.method}


def run_divergence(cfg):
    """Single classical or quantum deviation value."""
    g = _gamma(cfg, 0.5)
    if "mu" in cfg:
        val = d_gamma(np.asarray(cfg["mu"], dtype=float), np.asarray(cfg["nu"], dtype=float), g)
    elif "omega" in cfg:
        val = q_d_gamma(as_density(decode_matrix(cfg["omega"], "omega")),
                        as_density(decode_matrix(cfg["phi"], "phi")), g)
    else:
        raise ConfigError("divergence needs 'mu'/'nu' or 'omega'/'phi'")
    return [{"step": 0, "t": 0.0, "value": val}], {"value": val}


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    runner: object
    schema: dict
    template: dict = field(default_factory=dict)


_HALF = encode_matrix(np.eye(2) / 2)
_SZ_JSON = encode_matrix(_SZ)

EXPERIMENTS = {
    e.name: e
    for e in [
        Experiment(
            "divergence-sweep", "d_gamma vs Csiszar and Bregman forms on seeded random pairs",
            run_divergence_sweep,
            _schema(n={"type": "integer", "minimum": 1, "maximum": 64}, pairs={"type": "integer", "minimum": 1},
                    gammas={"type": "array", "items": _GAMMA}),
            {"experiment": "divergence-sweep", "seed": 0, "n": 4, "pairs": 20, "gammas": [0, 0.25, 0.5, 0.75, 1]},
        ),
        Experiment(
            "metric-extract", "Eguchi metric vs Fisher-Rao and dual flatness in gamma charts",
            run_metric_extract,
            _schema(mu=_VEC, gammas={"type": "array", "items": _GAMMA}),
            {"experiment": "metric-extract", "mu": [0.2, 0.3, 0.5], "gammas": [0, 0.25, 0.5, 0.75, 1]},
        ),
        Experiment(
            "dice", "maximum-entropy die with prescribed mean (Gibbs weights)",
            run_dice,
            _schema(faces=_VEC, mean=_NUM, prior=_VEC),
            {"experiment": "dice", "gamma": 1.0, "faces": [1, 2, 3, 4, 5, 6], "mean": 4.5},
        ),
        Experiment(
            "bayes-recovery", "posterior from entropic projection vs direct Bayes",
            run_bayes_recovery,
            _schema(joint={"type": "array", "items": _VEC}, observed={"type": "integer", "minimum": 0},
                    nx={"type": "integer", "minimum": 1}, ntheta={"type": "integer", "minimum": 1},
                    trials={"type": "integer", "minimum": 1}),
            {"experiment": "bayes-recovery", "seed": 0, "nx": 3, "ntheta": 4, "trials": 10},
        ),
        Experiment(
            "gibbs-qubit", "qubit Gibbs state under tr(rho sigma_z) = m",
            run_gibbs_qubit,
            _schema(omega=_MATRIX, observable=_MATRIX, m=_NUM),
            {"experiment": "gibbs-qubit", "gamma": 1.0, "omega": _HALF, "observable": _SZ_JSON, "m": 0.5},
        ),
        Experiment(
            "luders", "support-constrained updates vs the Luders rule",
            run_luders,
            _schema(("rho", "projector"), rho=_MATRIX, projector=_MATRIX),
            {"experiment": "luders", "gamma": 0.5,
             "rho": encode_matrix([[0.5, 0.1, 0], [0.1, 0.3, 0.05], [0, 0.05, 0.2]]),
             "projector": encode_matrix(np.diag([1.0, 1.0, 0.0]))},
        ),
        Experiment(
            "trajectory-classical", "ramped moment constraint on a die",
            run_trajectory_classical,
            _schema(p0=_VEC, a=_VEC, times=_VEC, targets={"type": "array", "items": {"type": ["number", "null"]}}),
            {"experiment": "trajectory-classical", "gamma": 1.0, "mode": "literal",
             "times": [0, 1, 2, 3, 4], "targets": [None, 3.0, 3.5, 4.0, 4.5]},
        ),
        Experiment(
            "trajectory-quantum", "ramped qubit magnetization",
            run_trajectory_quantum,
            _schema(omega0=_MATRIX, observable=_MATRIX, times=_VEC,
                    targets={"type": "array", "items": {"type": ["number", "null"]}}),
            {"experiment": "trajectory-quantum", "gamma": 1.0, "mode": "literal",
             "times": [0, 1, 2, 3, 4], "targets": [None, 0.2, 0.4, 0.6, 0.8]},
        ),
        Experiment(
            "cocycle-limit", "small-t cocycle limit vs closed-form relative entropy",
            run_cocycle_limit,
            _schema(omega=_MATRIX, phi=_MATRIX, n={"type": "integer", "minimum": 1, "maximum": 8},
                    pairs={"type": "integer", "minimum": 1}),
            {"experiment": "cocycle-limit", "seed": 0, "n": 2, "pairs": 10},
        ),
        Experiment(
            "project", "classical projection with constraints, penalty or prior mixture",
            run_project,
            _schema(prior=_VEC, constraints=_CLASSICAL_CONSTRAINTS, penalty=_CLASSICAL_PENALTY,
                    mixture={"type": "array", "items": {"type": "object", "required": ["w", "mu"],
                                                         "properties": {"w": _NUM, "mu": _VEC}}}),
            {"experiment": "project", "gamma": 0.5, "prior": [0.1, 0.2, 0.3, 0.4],
             "constraints": {"moments": [{"a": [1, 2, 3, 4], "c": 2.5}], "mass": 1.0}},
        ),
        Experiment(
            "qproject", "quantum projection with constraints, penalty or prior mixture",
            run_qproject,
            _schema(prior=_MATRIX, constraints=_QUANTUM_CONSTRAINTS, penalty=_QUANTUM_PENALTY,
                    mixture={"type": "array", "items": {"type": "object", "required": ["w", "rho"],
                                                         "properties": {"w": _NUM, "rho": _MATRIX}}}),
            {"experiment": "qproject", "gamma": 0.5,
             "prior": encode_matrix([[0.6, 0.1], [0.1, 0.4]]),
             "constraints": {"moments": [{"A": _SZ_JSON, "c": 0.1}], "trace": 1.0}},
        ),
        Experiment(
            "divergence", "single classical or quantum gamma-deviation",
            run_divergence,
            _schema(mu=_VEC, nu=_VEC, omega=_MATRIX, phi=_MATRIX),
            {"experiment": "divergence", "gamma": 1.0, "mu": [2, 1], "nu": [1, 1]},
        ),
    ]
}


def template(name):
    try:
        return copy.deepcopy(EXPERIMENTS[name].template)
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}") from None


def validate(cfg):
    if not isinstance(cfg, dict) or not isinstance(cfg.get("experiment"), str):
        raise ConfigError("config must be an object with an 'experiment' name")
    exp = EXPERIMENTS.get(cfg["experiment"])
    if exp is None:
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}")
    try:
        jsonschema.validate(cfg, exp.schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    return exp


def digest(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def execute(cfg):
    """Validate and run a config; returns the full result record."""
    exp = validate(cfg)
    start = time.perf_counter()
    try:
        rows, summary = exp.runner(cfg)
    except ConfigError:
        raise
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters: {exc}") from exc
    return {
        "experiment": exp.name,
        "input_digest": digest(cfg),
        "config": cfg,
        "rows": rows,
        "summary": summary,
        "wall_time_s": time.perf_counter() - start,
    }


def _cell(v):
    if isinstance(v, float):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    return str(v)


def rows_to_csv(rows):
    header = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[k]) if k in r else "" for k in header])
    return buf.getvalue()


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_results(record, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "result.csv"), rows_to_csv(record["rows"]))
    _atomic_write(os.path.join(out_dir, "result.json"), json.dumps(_jsonable(record), indent=2) + "\n")
