"""Acceptance suite: one test per criterion, one printed line each.

Everything runs on the reference genus-2 surface (circle centres -3, -1,
1, 3, couplings 0.02) at word length 8 with tail tolerance 1e-10, except
where a criterion states otherwise.  Run with `pytest -s` to see the
per-criterion lines.
"""

import cmath
import math

import numpy as np

from conftest import circle_points, circle_triples
from schottkyvir.differentials import (
    Surface,
    TruncationPolicy,
    get_surface,
    reference_params,
)
from schottkyvir.moduli import PolynomialModuli, SiegelTheta, sqrt2_lattice
from schottkyvir.modular import (
    SpElement,
    logdetM_derivative_check,
    logdet_gradient,
    random_sp,
    transform_frame,
    transformed_differentials,
    verify_automorphy,
)
from schottkyvir.schottky import SchottkyParams, derive_handle_data
from schottkyvir.variations import (
    FDConfig,
    MeromorphicFamily,
    Quadratic,
    check_nabla_nu,
    check_nabla_omega,
    check_nabla_s,
    check_rauch,
    dp_apply,
    dp_apply_form,
    nabla_moduli,
)
from schottkyvir.virgraphs import (
    apply_Dn,
    closed_form_D2,
    enumerate_graphs,
    graph_count,
    verify_recursion,
)

TWO_PI_I = 2j * math.pi


def report(num: int, label: str, ok: bool, detail: str):
    state = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {label}: {state} ({detail})")
    assert ok, f"criterion {num}: {label}: {detail}"


def test_criterion_01_graph_census():
    counts = [len(enumerate_graphs(n)) for n in range(1, 6)]
    ok = counts == [2, 7, 34, 209, 1546]
    ok = ok and all(graph_count(n) == c for n, c in zip(range(1, 6), counts))
    report(1, "graph census n=1..5", ok, f"counts {counts}")


def test_criterion_02_omega_symmetry_and_residue(surface):
    xs = circle_points(101, 20)
    ys = circle_points(102, 20)
    sym = max(
        abs(surface.omega_raw(x, y) - surface.omega_raw(y, x))
        / abs(surface.omega_raw(x, y))
        for x, y in zip(xs, ys)
    )
    h = 1e-3
    res = max(
        abs(h * h * surface.omega_raw(x, x + h) - 1.0) for x in xs[:5]
    )
    ok = sym < 1e-9 and res < 1e-6
    report(2, "omega symmetry and diagonal residue", ok,
           f"symmetry {sym:.2e} < 1e-9, residue {res:.2e} < 1e-6")


def test_criterion_03_cycle_normalisations(surface):
    dev = 0.0
    for a in (1, 2):
        for b in (1, 2):
            v = surface.alpha_period_nu(a, b)
            dev = max(dev, abs(v - (1.0 if a == b else 0.0)))
    omdev = max(
        abs(surface.alpha_period_omega(x, a))
        for x in circle_points(103, 2)
        for a in (1, 2)
    )
    ok = dev < 1e-8 and omdev < 1e-8
    report(3, "one-form and bidifferential cycle integrals", ok,
           f"nu deviation {dev:.2e} < 1e-8, omega period {omdev:.2e} < 1e-8")


def test_criterion_04_period_matrix(surface):
    pm = surface.period_matrix()
    p1 = SchottkyParams(genus=1, handles=((0.0, 4.0, 0.05 + 0.05j),))
    s1 = Surface(p1, surface.policy)
    q1 = derive_handle_data(p1)[0].q
    diag = abs(s1.period_matrix().tau[0, 0] - cmath.log(q1))
    ok = pm.asymmetry < 1e-9 and pm.min_im_eigenvalue > 0 and diag < 1e-9
    report(4, "period matrix symmetry, positivity, one-handle log", ok,
           f"asymmetry {pm.asymmetry:.2e} < 1e-9, min eig {pm.min_im_eigenvalue:.3f} > 0, "
           f"|tau11 - log q| {diag:.2e} < 1e-9")


def test_criterion_05_rauch(surface, fd):
    worst = max(
        check_rauch(surface, x, fd)["residual"] for x in circle_points(105, 10)
    )
    report(5, "moduli gradient of the period matrix (Rauch)", worst < 1e-6,
           f"max residual {worst:.2e} < 1e-6")


def test_criterion_06_variational_identities(surface, fd):
    triples = circle_triples(106, 10)
    worst = {"series": 0.0, "determinant": 0.0}
    agree = 0.0
    for x, y, y2 in triples:
        vals = {}
        for mode in ("series", "determinant"):
            o1 = check_nabla_nu(surface, x, y, 1, fd, mode)
            o2 = check_nabla_omega(surface, x, y, y2, fd, mode)
            o3 = check_nabla_s(surface, x, y, fd, mode)
            worst[mode] = max(worst[mode], o1["residual"], o2["residual"], o3["residual"])
            vals[mode] = (o1["lhs"], o2["lhs"], o3["lhs"])
        for a, b in zip(vals["series"], vals["determinant"]):
            agree = max(agree, abs(a - b) / max(abs(a), 1e-12))
    ok = worst["series"] < 1e-6 and worst["determinant"] < 1e-6 and agree < 1e-6
    report(6, "one-form/bidifferential/connection identities", ok,
           f"series {worst['series']:.2e}, determinant {worst['determinant']:.2e}, "
           f"realisation agreement {agree:.2e}, all < 1e-6")


def test_criterion_07_quasiperiodicity_span(surface):
    resid = max(
        surface.theta_row(a, x)[1]
        for a in (1, 2)
        for x in circle_points(109, 3)
    )
    xs = 6.0 * np.exp(1j * np.linspace(0.1, 2 * math.pi - 0.2, 12))
    M = np.array([surface.theta_matrix(x).ravel() for x in xs])
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > 1e-4 * sv[0]))
    ok = resid < 1e-8 and rank == 3
    report(7, "quasiperiodicity fit and two-form span rank", ok,
           f"fit residual {resid:.2e} < 1e-8, rank {rank} == 3")


def test_criterion_08_mobius_annihilation(surface, params, fd):
    rng = np.random.default_rng(110)
    pol = surface.policy
    worst_tau = 0.0
    worst_omega = 0.0
    y1, y2 = 6.0 * cmath.exp(1.2j), 6.0 * cmath.exp(4.4j)
    fam = MeromorphicFamily(
        evaluate=lambda q, pts: get_surface(q, pol).omega_raw(pts[0], pts[1]),
        weights=(1, 1),
    )
    for _ in range(5):
        p = Quadratic(*(rng.normal(size=3) + 1j * rng.normal(size=3)))
        for (a, b) in ((1, 1), (1, 2), (2, 2)):
            v = dp_apply(params, p, lambda q: get_surface(q, pol).tau[a - 1, b - 1], fd)
            worst_tau = max(worst_tau, abs(v))
        worst_omega = max(worst_omega, abs(dp_apply_form(params, p, fam, (y1, y2), fd)))
    ok = worst_tau < 1e-6 and worst_omega < 1e-6
    report(8, "Mobius generators annihilate moduli functions and forms", ok,
           f"max |Dp tau| {worst_tau:.2e} < 1e-6, max |Dp omega| {worst_omega:.2e} < 1e-6")


def test_criterion_09_two_point_consistency(surface, fd):
    th = SiegelTheta(sqrt2_lattice())
    z1, z2 = 6.0 * cmath.exp(0.7j), 6.0 * cmath.exp(2.9j)
    d2 = apply_Dn(surface, 2, 1.0, th, (z1, z2))
    closed = closed_form_D2(surface, 1.0, th, z1, z2, fd)
    rel = abs(d2 - closed) / abs(d2)
    swap = abs(d2 - apply_Dn(surface, 2, 1.0, th, (z2, z1))) / abs(d2)
    ok = rel < 1e-5 and swap < 1e-7
    report(9, "two-point operator closed form and symmetry", ok,
           f"closed-form deviation {rel:.2e} < 1e-5, swap deviation {swap:.2e} < 1e-7")


def test_criterion_10_recursion(surface, fd):
    th = SiegelTheta(sqrt2_lattice())
    poly = PolynomialModuli({((1, 1), (2, 2)): 1.0, ((1, 2),): 0.4})
    z1, z2 = 6.0 * cmath.exp(0.7j), 6.0 * cmath.exp(2.9j)
    worst = 0.0
    for F in (th, poly):
        for c in (0.0, 1.0):
            r0 = verify_recursion(surface, 0, c, F, (), z1, fd)["residual"]
            r1 = verify_recursion(surface, 1, c, F, (z1,), z2, fd)["residual"]
            worst = max(worst, r0, r1)
    report(10, "order-lowering recursion n=0,1", worst < 1e-4,
           f"max residual {worst:.2e} < 1e-4")


def test_criterion_11_modular_identities(surface, fd):
    rng = np.random.default_rng(111)
    pm = surface.period_matrix()
    om = pm.omega_cap
    x, y = 6.0 * cmath.exp(0.4j), 6.0 * cmath.exp(2.1j)
    nu_x, nu_y = surface.nu_vec(x), surface.nu_vec(y)
    lemma_i = nc_sym = logdet_fd = consist = 0.0
    for _ in range(20):
        sp = random_sp(2, 6, rng)
        fr = transform_frame(om, sp)
        A, _, C, _ = sp.blocks()
        lemma_i = max(lemma_i, float(np.abs(fr.N - (A.T - C.T @ fr.omega_new)).max()))
        nc_sym = max(nc_sym, float(np.abs(fr.nc() - fr.nc().T).max()))
        logdet_fd = max(logdet_fd, logdetM_derivative_check(om, sp))
        # bidifferential and connection shifts against the log-det gradient
        grad = logdet_gradient(fr)
        out = transformed_differentials(surface, sp, x, y)
        shift = 0.5 * sum(
            (nu_x[a - 1] * nu_y[b - 1] + nu_x[b - 1] * nu_y[a - 1]) * g_ab
            for (a, b), g_ab in grad.items()
        )
        consist = max(consist, abs(surface.omega_raw(x, y) - shift - out["omega_new"]))
        nab = nabla_moduli(surface, x, lambda prs: grad[prs[0]])
        consist = max(consist, abs(surface.s_raw(x) - 6.0 * nab - out["s_new"]))
    ok = lemma_i < 1e-10 and nc_sym < 1e-10 and logdet_fd < 1e-7 and consist < 1e-7
    report(11, "homology base-change identities (20 samples)", ok,
           f"inverse-frame {lemma_i:.2e} < 1e-10, symmetry {nc_sym:.2e} < 1e-10, "
           f"log-det FD {logdet_fd:.2e} < 1e-7, shift consistency {consist:.2e} < 1e-7")


def test_criterion_12_automorphy(surface):
    rng = np.random.default_rng(112)
    th = SiegelTheta(sqrt2_lattice())
    z1 = 6.0 * cmath.exp(0.7j)
    worst = max(
        verify_automorphy(surface, random_sp(2, 6, rng), 1, 1.0, th, (z1,))["residual"]
        for _ in range(10)
    )
    shears = [
        SpElement.shear(np.array([[1, 0], [0, -1]])),
        SpElement.shear(np.array([[0, 1], [1, 1]])),
    ]
    worst_shear = max(
        verify_automorphy(surface, sp, 1, 1.0, th, (z1,))["residual"] for sp in shears
    )
    ok = worst < 1e-4 and worst_shear < 1e-8
    report(12, "operator automorphy under base change", ok,
           f"random elements {worst:.2e} < 1e-4, shears {worst_shear:.2e} < 1e-8")


def _reported_quantities(policy: TruncationPolicy) -> dict[str, complex]:
    """The scalar values behind criteria 2-7, for truncation comparison."""
    surf = get_surface(reference_params(), policy)
    fd = FDConfig()
    out: dict[str, complex] = {}
    xs = circle_points(113, 3)
    ys = circle_points(114, 3)
    for i, (x, y) in enumerate(zip(xs, ys)):
        out[f"omega_{i}"] = surf.omega_raw(x, y)
        out[f"s_{i}"] = surf.s_raw(x)
        out[f"omega2_{i}"] = surf.omega_n_raw(2, x, y)
        out[f"nu_{i}"] = surf.nu_raw(1, x)
    x0 = xs[0]
    out["residue"] = 1e-6 * surf.omega_raw(x0, x0 + 1e-3)
    for a in (1, 2):
        for b in (1, 2):
            out[f"cycle_{a}{b}"] = surf.alpha_period_nu(a, b)
    pm = surf.period_matrix()
    for a in (1, 2):
        for b in (1, 2):
            out[f"tau_{a}{b}"] = pm.tau[a - 1, b - 1]
    rauch = check_rauch(surf, x0, fd)
    for (a, b), (lhs, _) in rauch["values"].items():
        out[f"rauch_{a}{b}"] = lhs
    (tx, ty, ty2), = circle_triples(115, 1)
    out["identity_nu"] = check_nabla_nu(surf, tx, ty, 1, fd)["lhs"]
    out["identity_omega"] = check_nabla_omega(surf, tx, ty, ty2, fd)["lhs"]
    out["identity_s"] = check_nabla_s(surf, tx, ty, fd)["lhs"]
    for a in (1, 2):
        th_row, _ = surf.theta_row(a, x0)
        for ell in range(3):
            out[f"theta_{a}{ell}"] = th_row[ell]
    return out


def test_criterion_13_truncation_robustness(policy):
    base = _reported_quantities(policy)
    longer = _reported_quantities(
        TruncationPolicy(max_word_length=10, tail_tol=policy.tail_tol, mode=policy.mode)
    )
    worst_key = max(base, key=lambda k: abs(base[k] - longer[k]))
    worst = abs(base[worst_key] - longer[worst_key])
    report(13, "word-length 8 -> 10 stability of criteria 2-7 values",
           worst < 1e-8, f"max change {worst:.2e} < 1e-8 (at {worst_key})")
