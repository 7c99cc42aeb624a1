"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed even when pytest captures output.
"""

import json
import math

import numpy as np
import pytest

from infodyn import experiments
from infodyn.cli import main
from infodyn.cmeasure import apply_markov, gamma_embed, random_markov, updated_weights
from infodyn.divergence import (
    bregman,
    cosine_defect,
    csiszar,
    d_gamma,
    f_gamma,
    find_monotonicity_violation,
    gamma_bregman,
    quadratic_generator,
)
from infodyn.entproj import (
    ConstraintSet,
    PriorMixture,
    Schedule,
    bayes_update,
    project,
    solve_projection,
    trajectory,
    weighted_project,
)
from infodyn.infogeo import eguchi_connection, eguchi_metric, gamma_chart
from infodyn.qproj import (
    QuantumConstraintSet,
    QuantumPriorMixture,
    QuantumSchedule,
    hermitian_basis,
    luders_experiment,
    q_project,
    q_trajectory,
    q_weighted_project,
    solve_q_projection,
)
from infodyn.qstate import (
    connes_cocycle,
    hs_inner,
    l2_embed,
    modular_flow,
    petz_limit_entropy,
    petz_order_calibration,
    petz_reference,
    q_d_gamma,
    q_gamma_embed,
    random_density,
    random_hermitian,
    random_unitary,
    wyd_metric,
)

GAMMA_GRID = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
FACES = np.arange(1.0, 7.0)


@pytest.fixture
def report(capsys):
    def emit(k, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return emit


def rng_for(k):
    return np.random.default_rng(1000 + k)


def conj_diag(U, d):
    return U @ np.diag(d) @ U.conj().T


def nested_grid_1d(f, lo, hi, points=1001, rounds=8):
    for _ in range(rounds):
        xs = np.linspace(lo, hi, points)
        k = int(np.argmin([f(x) for x in xs]))
        step = xs[1] - xs[0]
        lo, hi = xs[k] - step, xs[k] + step
    return xs[k]


def bloch(x, y, z):
    return 0.5 * (I2 + x * SX + y * SY + z * SZ)


def bloch_grid_oracle(objective, z, rounds=10, points=41):
    r = math.sqrt(1 - z * z)
    cx, cy, half = 0.0, 0.0, r
    for _ in range(rounds):
        pts = [(objective(bloch(x, y, z)), x, y)
               for x in np.linspace(cx - half, cx + half, points)
               for y in np.linspace(cy - half, cy + half, points)
               if x * x + y * y < r * r * (1 - 1e-9)]
        _, cx, cy = min(pts)
        half *= 4.0 / (points - 1)
    return bloch(cx, cy, z)


def test_01_divergence_axioms(report):
    rng = rng_for(1)
    worst_neg, worst_self, min_distinct = 0.0, 0.0, math.inf
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        mu = rng.uniform(0.01, 3.0, n)
        nu = rng.uniform(0.01, 3.0, n)
        for g in GAMMA_GRID:
            d = d_gamma(mu, nu, g)
            worst_neg = min(worst_neg, d)
            worst_self = max(worst_self, abs(d_gamma(mu, mu, g)))
            if np.max(np.abs(mu - nu)) > 1e-9:
                min_distinct = min(min_distinct, d)
    q_neg, q_self, q_distinct = 0.0, 0.0, math.inf
    for _ in range(500):
        n = int(rng.integers(1, 5))
        a, b = random_density(rng, n), random_density(rng, n)
        if n > 1:
            a, b = 0.98 * a + 0.02 * np.eye(n) / n, 0.98 * b + 0.02 * np.eye(n) / n
        for g in GAMMA_GRID:
            d = q_d_gamma(a, b, g)
            q_neg = min(q_neg, d)
            q_self = max(q_self, abs(q_d_gamma(a, a, g)))
            if np.max(np.abs(a - b)) > 1e-9:
                q_distinct = min(q_distinct, d)
    ok = (worst_neg >= -1e-12 and worst_self <= 1e-12 and min_distinct > 1e-12
          and q_neg >= -1e-12 and q_self <= 1e-12 and q_distinct > 1e-12)
    report(1, "divergence axioms", ok,
           f"classical min {worst_neg:.1e}, self {worst_self:.1e}, distinct min {min_distinct:.1e}; "
           f"quantum min {q_neg:.1e}, self {q_self:.1e}, distinct min {q_distinct:.1e}")


def test_02_family_membership(report):
    rng = rng_for(2)
    cs, br, cos = 0.0, 0.0, 0.0
    for _ in range(300):
        n = int(rng.integers(1, 9))
        mu, nu, la = rng.uniform(0.05, 3.0, (3, n))
        for g in GAMMA_GRID:
            d = d_gamma(mu, nu, g)
            scale = max(1.0, abs(d))
            cs = max(cs, abs(csiszar(mu, nu, f_gamma(g)) - d) / scale)
            br = max(br, abs(bregman(mu, nu, gamma_bregman(g)) - d) / scale)
            cos = max(cos, abs(cosine_defect(mu, nu, la, gamma_bregman(g))))
    ok = cs < 1e-12 and br < 1e-12 and cos < 1e-10
    report(2, "family membership", ok, f"csiszar {cs:.1e}, bregman {br:.1e}, cosine defect {cos:.1e}")


def test_03_markov_monotonicity(report):
    rng = rng_for(3)
    worst = -math.inf
    for _ in range(500):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 9))
        mu, nu = rng.uniform(0.05, 2.0, (2, n))
        T = random_markov(rng, n, m)
        for g in GAMMA_GRID:
            gap = d_gamma(apply_markov(mu, T), apply_markov(nu, T), g) - d_gamma(mu, nu, g)
            worst = max(worst, gap)
    quad = quadratic_generator()
    hit = find_monotonicity_violation(lambda a, b: bregman(a, b, quad), rng)
    ok = worst <= 1e-10 and hit is not None
    report(3, "Markov monotonicity", ok,
           f"largest gap {worst:.1e}; quadratic Bregman counterexample {'found' if hit else 'not found'}")


def test_04_metric_recovery(report):
    rng = rng_for(4)
    worst = 0.0
    for _ in range(50):
        mu = rng.uniform(0.2, 2.0, int(rng.integers(2, 4)))
        for g in (0.0, 0.25, 0.5, 0.75, 1.0):
            G = eguchi_metric(lambda a, b: d_gamma(a, b, g), mu).entries
            worst = max(worst, float(np.max(np.abs(G - np.diag(1 / mu)))))
    report(4, "metric recovery", worst < 1e-5, f"max |G - diag(1/mu)| = {worst:.1e}")


def test_05_dual_flatness(report):
    rng = rng_for(5)
    worst = 0.0
    for g in (0.25, 0.5, 0.75):
        D = lambda a, b: d_gamma(a, b, g)  # noqa: E731
        for _ in range(5):
            mu = rng.uniform(0.2, 2.0, 3)
            primal = eguchi_connection(D, mu, gamma_chart(g)).primal
            dual = eguchi_connection(D, mu, gamma_chart(1 - g)).dual
            worst = max(worst, float(np.max(np.abs(primal))), float(np.max(np.abs(dual))))
    report(5, "dual flatness", worst < 1e-4, f"max connection coefficient {worst:.1e}")


def test_06_bayes_recovery(report):
    rng = rng_for(6)
    worst = 0.0
    for _ in range(200):
        nx, nt = (int(v) for v in rng.integers(2, 5, 2))
        joint = rng.dirichlet(np.ones(nx * nt)).reshape(nx, nt)
        b = int(rng.integers(nx))
        worst = max(worst, float(np.max(np.abs(bayes_update(joint, b) - joint[b] / joint[b].sum()))))
    report(6, "Bayes recovery", worst < 1e-12, f"max posterior error {worst:.1e}")


def test_07_gibbs_projections(report):
    res = solve_projection(np.full(6, 1 / 6), 1.0, ConstraintSet.normalized([(FACES, 4.5)]))

    def gibbs(lam):
        w = np.exp(lam * FACES)
        return w / w.sum()

    # closed form: one-dimensional dual Newton on log Z(lam) - 4.5 lam
    lam = 0.0
    for _ in range(50):
        q = gibbs(lam)
        m = q @ FACES
        lam -= (m - 4.5) / (q @ FACES**2 - m * m)
    lam_grid = nested_grid_1d(lambda t: abs(gibbs(t) @ FACES - 4.5), -5.0, 5.0)
    dice_closed = float(np.max(np.abs(res.q - gibbs(lam))))
    dice_grid = float(np.max(np.abs(res.q - gibbs(lam_grid))))
    qres = solve_q_projection(I2 / 2, 1.0, QuantumConstraintSet.normalized([(SZ, 0.5)]))
    t = math.atanh(0.5)
    closed = np.diag(np.exp([t, -t])) / (2 * math.cosh(t))
    q_closed = float(np.max(np.abs(qres.rho - closed)))
    q_target = float(np.max(np.abs(qres.rho - np.diag([0.75, 0.25]))))
    q_grid = float(np.max(np.abs(qres.rho - bloch_grid_oracle(lambda r: q_d_gamma(r, I2 / 2, 1.0), 0.5))))
    ok = (max(dice_closed, dice_grid, q_closed, q_target, q_grid) < 1e-6
          and res.kkt_residual < 1e-9 and qres.kkt_residual < 1e-8)
    report(7, "Gibbs projections", ok,
           f"dice closed {dice_closed:.1e} grid {dice_grid:.1e} kkt {res.kkt_residual:.1e}; "
           f"qubit closed {q_closed:.1e} grid {q_grid:.1e} kkt {qres.kkt_residual:.1e}")


def test_08_hilbert_reconstruction(report):
    rng = rng_for(8)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        a, b = random_density(rng, n), random_density(rng, n)
        diff = l2_embed(a) - l2_embed(b)
        worst = max(worst, abs(q_d_gamma(a, b, 0.5) - 0.5 * hs_inner(diff, diff).real))
    vecs = [l2_embed(random_density(rng, 2)) for _ in range(4)]
    gram = np.array([[hs_inner(x, y) for y in vecs] for x in vecs])
    min_eig = float(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T)).min())
    report(8, "Hilbert-space reconstruction", worst < 1e-10 and min_eig > 0,
           f"max identity error {worst:.1e}; Gram min eigenvalue {min_eig:.1e}")


def test_09_cocycle_entropy_bridge(report):
    order = petz_order_calibration()
    rng = rng_for(9)
    worst = 0.0
    for k in range(100):
        n = 2 + k % 2
        a = random_density(rng, n, faithful_floor=0.02)
        b = random_density(rng, n, faithful_floor=0.02)
        worst = max(worst, abs(petz_limit_entropy(a, b) - petz_reference(a, b)))
    report(9, "cocycle/entropy bridge", worst < 1e-6, f"calibrated order '{order}'; max error {worst:.1e}")


def test_10_modular_flow(report):
    rng = rng_for(10)
    group, invariance = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        rho = random_density(rng, n, faithful_floor=0.02)
        x = random_hermitian(rng, n)
        s, t = rng.normal(size=2) * 2
        group = max(group, float(np.max(np.abs(
            modular_flow(rho, modular_flow(rho, x, s), t) - modular_flow(rho, x, s + t)))))
        invariance = max(invariance, abs(np.trace(rho @ modular_flow(rho, x, t)) - np.trace(rho @ x)))
    report(10, "modular flow", group < 1e-10 and invariance < 1e-10,
           f"group law {group:.1e}; state invariance {invariance:.1e}")


def test_11_commuting_sector(report):
    rng = rng_for(11)
    errs = dict.fromkeys(["divergence", "embedding", "metric", "cocycle", "projection", "weighted",
                          "trajectory", "conditioning"], 0.0)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        U = random_unitary(rng, n)
        p, r = rng.dirichlet(np.ones(n), 2)
        a = rng.normal(size=n)
        c = float(rng.dirichlet(np.ones(n)) @ a)
        P, R = conj_diag(U, p), conj_diag(U, r)
        x, y = rng.normal(size=(2, n))
        for g in (0.0, 0.25, 0.5, 0.75, 1.0):
            errs["divergence"] = max(errs["divergence"], abs(q_d_gamma(P, R, g) - d_gamma(p, r, g)))
            if g > 0:
                emb = q_gamma_embed(P, g).matrix - conj_diag(U, gamma_embed(p, g))
                errs["embedding"] = max(errs["embedding"], float(np.max(np.abs(emb))))
            if 0 < g < 1:
                m = wyd_metric(P, conj_diag(U, x), conj_diag(U, y), g)
                errs["metric"] = max(errs["metric"], abs(m - float(np.sum(p * x * y))))
            Q = ConstraintSet.normalized([(a, c)])
            qQ = QuantumConstraintSet.normalized([(conj_diag(U, a), c)])
            errs["projection"] = max(errs["projection"], float(np.max(np.abs(
                q_project(P, g, qQ) - conj_diag(U, project(p, g, Q))))))
            wq = weighted_project(PriorMixture([(1.0, p), (2.0, r)]), g, Q)
            wr = q_weighted_project(QuantumPriorMixture([(1.0, P), (2.0, R)]), g, qQ)
            errs["weighted"] = max(errs["weighted"], float(np.max(np.abs(wr - conj_diag(U, wq)))))
        cc = connes_cocycle(P, R, 0.7) - conj_diag(U, (p / r) ** 0.7j)
        errs["cocycle"] = max(errs["cocycle"], float(np.max(np.abs(cc))))
        times = [0.0, 1.0, 2.0]
        cl = trajectory(p, 0.5, Schedule(times, [None] + [ConstraintSet.normalized([(a, c + d)]) for d in (0, 0.05)]),
                        "chained")
        qu = q_trajectory(P, 0.5, QuantumSchedule(
            times, [None] + [QuantumConstraintSet.normalized([(conj_diag(U, a), c + d)]) for d in (0, 0.05)]),
            "chained")
        for s, qs in zip(cl, qu):
            errs["trajectory"] = max(errs["trajectory"], float(np.max(np.abs(qs.rho - conj_diag(U, s.q)))))
        keep = np.ones(n)
        keep[int(rng.integers(n))] = 0.0
        rep = luders_experiment(P, conj_diag(U, keep), 0.5)
        g_labels = keep.astype(int)
        # Luders on a commuting projector is conditioning on the event {keep = 1}
        cond = updated_weights(keep * p / (keep @ p), p, g_labels)
        errs["conditioning"] = max(errs["conditioning"], float(np.max(np.abs(rep.luders - conj_diag(U, cond)))))
    worst = max(errs.values())
    report(11, "commuting-sector equivalence", worst < 1e-10,
           ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


def test_12_idempotence_uniqueness_initial_step(report):
    rng = rng_for(12)
    c_idem, c_two, q_idem, q_two, t0 = 0.0, 0.0, 0.0, 0.0, 0.0
    for g in (0.0, 0.3, 0.5, 1.0):
        for _ in range(3):
            p = rng.dirichlet(np.ones(5))
            a = rng.normal(size=5)
            s1, s2 = rng.dirichlet(np.ones(5), 2)
            # both starts feasible: constraint value is the first start's moment, second start is tilted
            c = float(s1 @ a)
            Q = ConstraintSet.normalized([(a, c)])
            q = project(p, g, Q)
            c_idem = max(c_idem, float(np.max(np.abs(project(q, g, Q) - q))))
            v = np.linalg.svd(np.vstack([a, np.ones(5)]))[2][2]
            s2 = s1 + v * 0.5 * s1.min() / np.max(np.abs(v))
            r1 = solve_projection(p, g, Q, start=s1).q
            r2 = solve_projection(p, g, Q, start=s2).q
            c_two = max(c_two, float(np.max(np.abs(r1 - r2))))

            w = random_density(rng, 3, faithful_floor=0.02)
            A = random_hermitian(rng, 3)
            st1 = random_density(rng, 3, faithful_floor=0.05)
            qQ = QuantumConstraintSet.normalized([(A, float(np.trace(st1 @ A).real))])
            rho = q_project(w, g, qQ)
            q_idem = max(q_idem, float(np.max(np.abs(q_project(rho, g, qQ) - rho))))
            basis = hermitian_basis(3)
            rows = np.array([[np.trace(B @ M).real for B in basis] for M in (A, np.eye(3))])
            H = np.einsum("k,kab->ab", np.linalg.svd(rows)[2][2], basis)
            st2 = st1 + H * 0.5 * np.linalg.eigvalsh(st1).min() / np.linalg.norm(H, 2)
            u1 = solve_q_projection(w, g, qQ, start=st1).rho
            u2 = solve_q_projection(w, g, qQ, start=st2).rho
            q_two = max(q_two, float(np.max(np.abs(u1 - u2))))
        p = rng.dirichlet(np.ones(4))
        steps = trajectory(p, g, Schedule([0.0, 1.0], [None, ConstraintSet.normalized([(np.arange(4.0), 1.5)])]))
        t0 = max(t0, float(np.max(np.abs(steps[0].q - p))))
        w = random_density(rng, 2, faithful_floor=0.05)
        qsteps = q_trajectory(w, g, QuantumSchedule([0.0, 1.0], [None, QuantumConstraintSet.normalized([(SZ, 0.1)])]))
        t0 = max(t0, float(np.max(np.abs(qsteps[0].rho - w))))
    ok = c_idem < 1e-10 and c_two < 1e-10 and q_idem < 1e-8 and q_two < 1e-8 and t0 == 0.0
    report(12, "idempotence, uniqueness, initial step", ok,
           f"classical idempotence {c_idem:.1e} two-start {c_two:.1e}; quantum idempotence {q_idem:.1e} "
           f"two-start {q_two:.1e}; initial step {t0:.1e}")


def test_13_luders_agreement(report):
    rng = rng_for(13)
    worst, checked, noncommuting = 0.0, 0, 0
    for g in (0.0, 0.25, 0.5, 0.75, 1.0):
        for _ in range(10):
            n = int(rng.integers(2, 5))
            U = random_unitary(rng, n)
            rho = conj_diag(U, rng.dirichlet(np.ones(n)))
            keep = (rng.uniform(size=n) < 0.6).astype(float)
            keep[int(rng.integers(n))] = 1.0
            rep = luders_experiment(rho, conj_diag(U, keep), g)
            for cand in rep.candidates.values():
                if cand is not None:
                    worst = max(worst, float(np.max(np.abs(cand - rep.luders))))
                    checked += 1
        rho = random_density(rng, 3, faithful_floor=0.02)
        V = random_unitary(rng, 3)[:, :2]
        rep = luders_experiment(rho, V @ V.conj().T, g)
        noncommuting += int(not rep.commuting and set(rep.as_dict()) >= {"candidates", "distances"})
    ok = worst < 1e-10 and checked > 0 and noncommuting == 5
    report(13, "Luders agreement", ok,
           f"{checked} commuting candidates, max deviation {worst:.1e}; {noncommuting} descriptive reports")


def test_14_cli_determinism(report, tmp_path):
    bad = []
    for name in experiments.EXPERIMENTS:
        cfg = experiments.template(name)
        cfg["seed"] = 12345
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        outs = [tmp_path / f"{name}-{k}" for k in range(2)]
        codes = [main(["run", str(path), "--out", str(o)]) for o in outs]
        if codes != [0, 0] or (outs[0] / "result.csv").read_bytes() != (outs[1] / "result.csv").read_bytes():
            bad.append(name)
    report(14, "CLI determinism", not bad,
           f"{len(experiments.EXPERIMENTS) - len(bad)}/{len(experiments.EXPERIMENTS)} experiments byte-identical"
           + (f"; differing: {', '.join(bad)}" if bad else ""))
