"""Variational operators on families over the sewing-parameter space.

The tangent basis per handle a is

    dir (a, 0) : d/dw_a
    dir (a, 1) : rho_a d/drho_a
    dir (a, 2) : rho_a d/dw_{-a}

realised by central differences (optionally Richardson-extrapolated) in
the raw coordinates.  On top of it:

  * dp_apply        -- the generator of a global Mobius transformation
                       attached to a quadratic p(z), with coefficients
                       p_a^l = p^(l)(w_a) + rho_a^(1-l) p^(2-l)(w_{-a})
                       (divided-power derivatives);
  * nabla           -- contraction of the tangent derivatives with the
                       holomorphic two-form coefficients Theta_{2,a}^l(x);
                       maps moduli functions to weight-2 forms in x;
  * nabla_form      -- nabla plus the quasiform convection terms
                       Psi_2(x,y_k) d_{y_k} + m_k d_{y_k} Psi_2(x,y_k),
                       mapping weight-(m) families to weight (2, m);
  * nabla_moduli    -- sum over period-matrix coordinate pairs of
                       nu_a(x) nu_b(x) d/dtau_ab with supplier-side
                       analytic derivatives;
  * psi_from_determinant -- the weight (2,-1) convection kernel solved
                       from the one-form variational identity,

        Psi(x,y) = [omega(x,y) |nu(y) nu(x)| - |nu(y) nabla nu(y)|]
                   / |nu(y) d_y nu(y)|

                       over any two one-form rows.

The four classical identities are packaged as residual checks:

    nabla(x) tau_ab                    = nu_a(x) nu_b(x)
    nabla^(1)_y(x) nu_a(y)             = omega(x,y) nu_a(x)
    nabla^(1,1)_{y1,y2}(x) omega(y1,y2)= omega(x,y1) omega(x,y2)
    (1/6) nabla^(2)_y(x) s(y)          = omega(x,y)^2 - omega_2(x,y)

each evaluable with the Poincare-series convection kernel or with the
determinant-solved one ("series" / "determinant" realisations).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .differentials import Surface, get_surface
from .forms import FormValue
from .schottky import SchottkyParams

__all__ = [
    "FDConfig",
    "Quadratic",
    "ParameterDirection",
    "MeromorphicFamily",
    "perturbed",
    "tangent_derivative",
    "dp_apply",
    "dp_apply_form",
    "nabla",
    "nabla_form",
    "nabla_form_raw",
    "nabla_moduli",
    "psi_from_determinant",
    "psi_from_determinant_dy",
    "check_rauch",
    "check_nabla_nu",
    "check_nabla_omega",
    "check_nabla_s",
]

ParamFamily = Callable[[SchottkyParams], complex]
PointFamily = Callable[[SchottkyParams, tuple[complex, ...]], complex]


@dataclass(frozen=True)
class FDConfig:
    """Step control for the parameter and point differences.

    Steps are relative: w-perturbations use rel_step times the
    configuration diameter, rho-perturbations are multiplicative, point
    derivatives use point_step times the diameter.  Richardson halves the
    step once and extrapolates the central differences to fourth order.

    The defaults are set against the double-precision noise floor of the
    evaluators, not against truncation: period-matrix values carry ~1e-12
    of non-smooth roundoff that a difference quotient amplifies by 1/h,
    so steps much below ~1e-4 LOSE accuracy.  With Richardson on, the
    wide point step costs ~1e-12 relative truncation on integrands a
    distance O(1) from their poles while keeping amplified roundoff at
    the 1e-10 level even inside nested stencils.
    """

    rel_step: float = 2e-4
    point_step: float = 1e-3
    richardson: bool = True


@dataclass(frozen=True)
class ParameterDirection:
    a: int  # handle index, 1-based
    ell: int  # 0: w_a, 1: rho_a (scaled), 2: w_{-a} (scaled)

    def __post_init__(self):
        if self.a < 1 or self.ell not in (0, 1, 2):
            raise ValueError("bad tangent direction")


@dataclass(frozen=True)
class MeromorphicFamily:
    """A point-family evaluator with its declared form weights."""

    evaluate: PointFamily
    weights: tuple[int, ...]


def perturbed(params: SchottkyParams, a: int, ell: int, t: float) -> SchottkyParams:
    """Shift the raw coordinate behind direction (a, ell) by t.

    ell = 1 shifts rho_a multiplicatively, so d/dt at 0 realises
    rho_a d/drho_a directly; the other two are additive shifts.
    """
    w, wn, rho = params.handles[a - 1]
    if ell == 0:
        h = (w + t, wn, rho)
    elif ell == 1:
        h = (w, wn, rho * (1.0 + t))
    else:
        h = (w, wn + t, rho)
    handles = params.handles[: a - 1] + (h,) + params.handles[a:]
    return replace(params, handles=handles)


def _central(f: Callable[[float], complex], h: float, richardson: bool) -> complex:
    def diff(step: float) -> complex:
        return (f(step) - f(-step)) / (2.0 * step)

    d1 = diff(h)
    if not richardson:
        return d1
    d2 = diff(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def tangent_derivative(
    family: ParamFamily,
    params: SchottkyParams,
    direction: ParameterDirection,
    cfg: FDConfig = FDConfig(),
) -> complex:
    """The (a, ell) tangent derivative of a scalar family by central FD."""
    a, ell = direction.a, direction.ell
    if ell == 1:
        h = cfg.rel_step
        scale = 1.0
    else:
        h = cfg.rel_step * params.diameter()
        scale = params.rho(a) if ell == 2 else 1.0
    return scale * _central(lambda t: family(perturbed(params, a, ell, t)), h, cfg.richardson)


def point_derivative(f: Callable[[complex], complex], z: complex,
                     h: float, richardson: bool = True) -> complex:
    """d/dz of a holomorphic evaluator by a real-step central difference."""
    return _central(lambda t: f(z + t), h, richardson)


@dataclass(frozen=True)
class Quadratic:
    """p(z) = c0 + c1 z + c2 z^2 with divided-power derivatives."""

    c0: complex = 0.0
    c1: complex = 0.0
    c2: complex = 0.0

    def __call__(self, z: complex) -> complex:
        return self.c0 + z * (self.c1 + z * self.c2)

    def d1(self, z: complex) -> complex:
        return self.c1 + 2.0 * self.c2 * z

    def d2(self, z: complex) -> complex:
        return self.c2


def _mobius_coefficient(params: SchottkyParams, p: Quadratic, a: int, ell: int) -> complex:
    w, wn, rho = params.handles[a - 1]
    if ell == 0:
        return p(w) + rho * p.d2(wn)
    if ell == 1:
        return p.d1(w) + p.d1(wn)
    return p.d2(w) + p(wn) / rho


def dp_apply(
    params: SchottkyParams,
    p: Quadratic,
    family: ParamFamily,
    cfg: FDConfig = FDConfig(),
) -> complex:
    """Apply the Mobius generator of p to a sewing-parameter family.

    Annihilates every function on the Mobius quotient (period matrix
    entries in particular).
    """
    total = 0.0 + 0.0j
    for a in range(1, params.genus + 1):
        for ell in (0, 1, 2):
            coeff = _mobius_coefficient(params, p, a, ell)
            total += coeff * tangent_derivative(family, params, ParameterDirection(a, ell), cfg)
    return total


def dp_apply_form(
    params: SchottkyParams,
    p: Quadratic,
    family: MeromorphicFamily,
    points: Sequence[complex],
    cfg: FDConfig = FDConfig(),
) -> complex:
    """Mobius generator extended to weight-(m) point families:

        Dp + sum_k ( p(y_k) d_{y_k} + m_k p'(y_k) );

    vanishes identically on meromorphic forms of the declared weights.
    """
    pts = tuple(points)
    total = dp_apply(params, p, lambda prm: family.evaluate(prm, pts), cfg)
    h = cfg.point_step * params.diameter()
    base = family.evaluate(params, pts)
    for k, (yk, mk) in enumerate(zip(pts, family.weights)):
        def at(z: complex, _k=k) -> complex:
            moved = pts[:_k] + (z,) + pts[_k + 1 :]
            return family.evaluate(params, moved)

        total += p(yk) * point_derivative(at, yk, h, cfg.richardson)
        total += mk * p.d1(yk) * base
    return total


def nabla(
    surface: Surface,
    x: complex,
    family: ParamFamily,
    cfg: FDConfig = FDConfig(),
) -> complex:
    """Contract the tangent derivatives with the two-form coefficients at x.

    On functions of moduli alone the result does not depend on the choice
    of quasiform limit points.
    """
    theta = surface.theta_matrix(x)
    total = 0.0 + 0.0j
    for a in range(1, surface.genus + 1):
        for ell in (0, 1, 2):
            d = tangent_derivative(family, surface.params, ParameterDirection(a, ell), cfg)
            total += theta[a - 1, ell] * d
    return total


def _psi_value(surface: Surface, x: complex, y: complex, mode: str,
               cfg: FDConfig = FDConfig()) -> complex:
    if mode == "series":
        return surface.psi_raw(2, x, y)
    if mode == "determinant":
        return psi_from_determinant(surface, x, y, cfg=cfg)
    raise ValueError(f"unknown convection realisation {mode!r}")


def _psi_deriv(surface: Surface, x: complex, y: complex, mode: str,
               cfg: FDConfig = FDConfig()) -> complex:
    """d/dy of the convection kernel.

    The series kernel is differentiated by a central difference (it is a
    smooth sum, so the difference is noise-free).  The determinant solve
    is differentiated through the quotient rule instead: its value
    carries parameter-stencil noise that a naive difference would amplify
    by 1/h.
    """
    if mode == "series":
        h = cfg.point_step * surface.scale
        return point_derivative(lambda z: surface.psi_raw(2, x, z), y, h, cfg.richardson)
    if mode == "determinant":
        return psi_from_determinant_dy(surface, x, y, cfg=cfg)
    raise ValueError(f"unknown convection realisation {mode!r}")


def nabla_form_raw(
    surface: Surface,
    x: complex,
    family: MeromorphicFamily,
    points: Sequence[complex],
    cfg: FDConfig = FDConfig(),
    psi_mode: str = "series",
) -> complex:
    """The weight-(2, m) extension of nabla on point families:

        nabla(x) + sum_k ( Psi(x, y_k) d_{y_k} + m_k (d_y Psi)(x, y_k) ).

    The parameter part recomputes the family at perturbed sewing data;
    point derivatives of the family and of the convection kernel are
    central differences.  Returns the stripped coefficient; nabla_form
    wraps it with the (2, m) weight tag.
    """
    pts = tuple(points)
    total = nabla(surface, x, lambda prm: family.evaluate(prm, pts), cfg)
    h = cfg.point_step * surface.scale
    base = family.evaluate(surface.params, pts)
    for k, (yk, mk) in enumerate(zip(pts, family.weights)):
        def at(z: complex, _k=k) -> complex:
            moved = pts[:_k] + (z,) + pts[_k + 1 :]
            return family.evaluate(surface.params, moved)

        psi_k = _psi_value(surface, x, yk, psi_mode, cfg)
        dpsi_k = _psi_deriv(surface, x, yk, psi_mode, cfg)
        total += psi_k * point_derivative(at, yk, h, cfg.richardson)
        total += mk * dpsi_k * base
    return total


def nabla_form(
    surface: Surface,
    x: complex,
    family: MeromorphicFamily,
    points: Sequence[complex],
    cfg: FDConfig = FDConfig(),
    psi_mode: str = "series",
) -> FormValue:
    """nabla_form_raw with the output weight (2, m_1, ..., m_n) declared."""
    value = nabla_form_raw(surface, x, family, points, cfg, psi_mode)
    return FormValue(value, (2,) + tuple(family.weights))


def nabla_moduli(surface: Surface, x: complex, derivative: Callable[[tuple[tuple[int, int], ...]], complex]) -> complex:
    """Moduli-space realisation on period-matrix functions:

        sum_{(a,b) in K} nu_a(x) nu_b(x) dF/dtau_ab,

    with the mixed tau-derivatives supplied analytically by the caller
    (pairs are unordered, one variable per pair).
    """
    pm = surface.period_matrix()
    nu = surface.nu_vec(x)
    total = 0.0 + 0.0j
    for a, b in pm.index_set_K:
        total += nu[a - 1] * nu[b - 1] * derivative(((a, b),))
    return total


def psi_from_determinant(
    surface: Surface,
    x: complex,
    y: complex,
    rows: tuple[int, int] = (1, 2),
    cfg: FDConfig = FDConfig(),
) -> complex:
    """Solve the one-form variational identity for the convection kernel.

    Requires genus >= 2 and a nonvanishing one-form Wronskian at y.  The
    result reproduces the weight (2,-1) quasiform built from the same
    limit points (checked in the tests); swapping the two rows leaves it
    unchanged.
    """
    a, b = rows
    if surface.genus < 2:
        raise ValueError("needs two independent one-forms (genus >= 2)")
    if a == b:
        raise ValueError("rows must be distinct")
    prm = surface.params
    h = cfg.point_step * surface.scale
    nu_ay, nu_by = surface.nu_raw(a, y), surface.nu_raw(b, y)
    nu_ax, nu_bx = surface.nu_raw(a, x), surface.nu_raw(b, x)
    dnu_ay = point_derivative(lambda z: surface.nu_raw(a, z), y, h, cfg.richardson)
    dnu_by = point_derivative(lambda z: surface.nu_raw(b, z), y, h, cfg.richardson)
    wronskian = nu_ay * dnu_by - nu_by * dnu_ay
    if abs(wronskian) < 1e-12 * max(abs(nu_ay), abs(nu_by)) ** 2 / surface.scale:
        raise ValueError("one-form Wronskian vanishes here; move y")
    pol = surface.policy
    nab_a = nabla(surface, x, lambda q: get_surface(q, pol).nu_raw(a, y), cfg)
    nab_b = nabla(surface, x, lambda q: get_surface(q, pol).nu_raw(b, y), cfg)
    omega_xy = surface.omega_raw(x, y)
    det1 = nu_ay * nu_bx - nu_ax * nu_by
    det2 = nu_ay * nab_b - nab_a * nu_by
    return (omega_xy * det1 - det2) / wronskian


def psi_from_determinant_dy(
    surface: Surface,
    x: complex,
    y: complex,
    rows: tuple[int, int] = (1, 2),
    cfg: FDConfig = FDConfig(),
) -> complex:
    """d/dy companion of the determinant solve.

    The two one-form identity rows are a linear system in the kernel
    value and its y-derivative,

        Psi d_y nu_a + (d_y Psi) nu_a = omega(x,y) nu_a(x) - nabla nu_a(y),

    so Cramer's rule yields d_y Psi from the same ingredients as the
    value, with no differentiation of any stencil-built quantity (which
    would amplify its noise floor past the identity tolerances).
    """
    a, b = rows
    pol = surface.policy
    h1 = cfg.point_step * surface.scale
    nu_ay, nu_by = surface.nu_raw(a, y), surface.nu_raw(b, y)
    dnu_ay = point_derivative(lambda t: surface.nu_raw(a, t), y, h1, cfg.richardson)
    dnu_by = point_derivative(lambda t: surface.nu_raw(b, t), y, h1, cfg.richardson)
    wronskian = nu_ay * dnu_by - nu_by * dnu_ay
    omega_xy = surface.omega_raw(x, y)
    r_a = omega_xy * surface.nu_raw(a, x) - nabla(
        surface, x, lambda q: get_surface(q, pol).nu_raw(a, y), cfg
    )
    r_b = omega_xy * surface.nu_raw(b, x) - nabla(
        surface, x, lambda q: get_surface(q, pol).nu_raw(b, y), cfg
    )
    return (r_a * dnu_by - r_b * dnu_ay) / wronskian


# ------------------------------------------------------------------ identities
def check_rauch(surface: Surface, x: complex, cfg: FDConfig = FDConfig()) -> dict:
    """nabla(x) tau_ab against nu_a(x) nu_b(x); max relative residual."""
    pol = surface.policy
    g = surface.genus
    nu = surface.nu_vec(x)
    worst = 0.0
    values = {}
    for a in range(1, g + 1):
        for b in range(a, g + 1):
            lhs = nabla(surface, x, lambda q: get_surface(q, pol).tau[a - 1, b - 1], cfg)
            rhs = nu[a - 1] * nu[b - 1]
            res = abs(lhs - rhs) / abs(rhs)
            values[(a, b)] = (lhs, rhs)
            worst = max(worst, res)
    return {"residual": worst, "values": values}


def check_nabla_nu(
    surface: Surface,
    x: complex,
    y: complex,
    a: int = 1,
    cfg: FDConfig = FDConfig(),
    psi_mode: str = "series",
) -> dict:
    pol = surface.policy
    fam = MeromorphicFamily(
        evaluate=lambda q, pts: get_surface(q, pol).nu_raw(a, pts[0]), weights=(1,)
    )
    lhs = nabla_form_raw(surface, x, fam, (y,), cfg, psi_mode)
    rhs = surface.omega_raw(x, y) * surface.nu_raw(a, x)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / abs(rhs)}


def check_nabla_omega(
    surface: Surface,
    x: complex,
    y1: complex,
    y2: complex,
    cfg: FDConfig = FDConfig(),
    psi_mode: str = "series",
) -> dict:
    pol = surface.policy
    fam = MeromorphicFamily(
        evaluate=lambda q, pts: get_surface(q, pol).omega_raw(pts[0], pts[1]),
        weights=(1, 1),
    )
    lhs = nabla_form_raw(surface, x, fam, (y1, y2), cfg, psi_mode)
    rhs = surface.omega_raw(x, y1) * surface.omega_raw(x, y2)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / abs(rhs)}


def check_nabla_s(
    surface: Surface,
    x: complex,
    y: complex,
    cfg: FDConfig = FDConfig(),
    psi_mode: str = "series",
) -> dict:
    pol = surface.policy
    fam = MeromorphicFamily(
        evaluate=lambda q, pts: get_surface(q, pol).s_raw(pts[0]), weights=(2,)
    )
    lhs = nabla_form_raw(surface, x, fam, (y,), cfg, psi_mode) / 6.0
    rhs = surface.omega_raw(x, y) ** 2 - surface.omega_n_raw(2, x, y)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / abs(rhs)}
