"""Classical differentials by truncated Poincare series.

Everything on the surface is summed over the group elements up to a word
length L:

    omega(x, y)   = sum_g d(gx) dy / (gx - y)^2          weight (1, 1)
    omega_N(x, y) = sum_g d(gx)^N dy^N / (gx - y)^(2N)   weight (N, N)
    s(x)          = 6 sum_{g != id} d(gx) dx / (gx - x)^2   weight (2,)
    Psi_N(x, y)   = sum_g Pi_N(gx, y)                    weight (N, 1-N)

with the quasiform kernel

    Pi_N(x, y) = 1/(x - y) * prod_l (y - A_l)/(x - A_l) dx^N dy^(1-N)

over 2N-1 distinct limit points A_l.  The holomorphic one-forms are
telescoped differences of the N=1 series,

    nu_a(x) = Psi_1(x, gamma_a y0) - Psi_1(x, y0),

normalised so the counterclockwise circle integrals give
(1/2pi i) oint_{C_{-b}} nu_a = delta_ab, and the period matrix is
tau_ab = int over the handle path of nu_b, symmetric with Im(tau/2pi i)
positive definite.

Group matrices are cached once per (params, L) and reused across all
evaluation points; shells are summed in increasing word length with
compensated accumulation.  Quadrature for the period matrix uses a frozen
composite Gauss-Legendre layout so that values vary smoothly under the
parameter perturbations of the variational operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .errors import PathBlockedError, PoleProximityError, TruncationError
from .forms import FormValue
from .schottky import (
    HandleData,
    SchottkyParams,
    derive_handle_data,
    generator,
    group_matrix_stack,
    validate,
)

__all__ = [
    "TruncationPolicy",
    "LimitPointConfig",
    "PeriodMatrix",
    "Surface",
    "get_surface",
    "pi_n_kernel",
    "reference_params",
]

TWO_PI_I = 2j * math.pi

# frozen quadrature layout for handle-path integrals (see module docstring)
_PATH_PANELS = 8
_PATH_ORDER = 20


@dataclass(frozen=True)
class TruncationPolicy:
    """How far to sum the group and when to distrust the tail.

    In adaptive mode every evaluation checks that the last shell
    contributes less than tail_tol times the accumulated magnitude and
    raises TruncationError otherwise; fixed mode records the tail ratio
    but never raises.  The value always uses all shells up to
    max_word_length.
    """

    max_word_length: int = 8
    tail_tol: float = 1e-10
    mode: str = "adaptive"  # "adaptive" | "fixed"
    pole_guard: float = 1e-6  # relative to the configuration diameter

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError("mode must be 'adaptive' or 'fixed'")
        if self.max_word_length < 0 or self.tail_tol <= 0:
            raise ValueError("bad truncation policy")


@dataclass(frozen=True)
class LimitPointConfig:
    """The 2N-1 distinct points entering the quasiform kernel.

    For N >= 2 they must be limit points of the group; the generator fixed
    points (and their images) qualify.  For N = 1 a single base point in
    the ordinary set is used instead.
    """

    points: tuple[complex, ...]

    def __post_init__(self):
        pts = self.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i] == pts[j]:
                    raise ValueError("limit points must be pairwise distinct")

    @classmethod
    def default(
        cls,
        handles: Sequence[HandleData],
        order: int = 2,
        params: SchottkyParams | None = None,
    ) -> "LimitPointConfig":
        """The first 2N-1 generator fixed points, ordered W_1, W_{-1}, W_2,
        ..., padded by first-generator images of fixed points when a higher
        order asks for more limit points than the genus supplies."""
        fixed = []
        for h in handles:
            fixed.extend([h.W, h.W_neg])
        need = 2 * order - 1
        pts = list(fixed[:need])
        if len(pts) < need:
            if params is None:
                raise ValueError(
                    f"order {order} needs {need} limit points; genus "
                    f"{len(handles)} supplies {len(fixed)} fixed points"
                )
            gen = generator(params, 1)
            pool = list(fixed)
            while len(pts) < need:
                pool = [gen.apply(z) for z in pool]
                for z in pool:
                    if all(z != q for q in pts):
                        pts.append(z)
                        if len(pts) == need:
                            break
        return cls(points=tuple(pts))


def pi_n_kernel(x: complex, y: complex, limit_pts: Sequence[complex], order: int) -> complex:
    """Single quasiform kernel term (stripped of dx^N dy^(1-N))."""
    t = 1.0 / (x - y)
    for A in limit_pts:
        t *= (y - A) / (x - A)
    return t


@dataclass(frozen=True)
class PeriodMatrix:
    """Symmetric g x g matrix of handle periods with its coordinate labels.

    index_set_K lists the unordered entry pairs (a, b), a <= b, used as
    local moduli coordinates.  For genus 2 and 3 all pairs are exactly the
    3g-3 coordinates; for higher genus the full list is still produced but
    local independence is not checked here.
    """

    tau: np.ndarray
    index_set_K: tuple[tuple[int, int], ...]
    asymmetry: float
    min_im_eigenvalue: float

    @property
    def genus(self) -> int:
        return self.tau.shape[0]

    @property
    def omega_cap(self) -> np.ndarray:
        """The normalised matrix tau / (2 pi i) with positive-definite imaginary part."""
        return self.tau / TWO_PI_I


def _kahan_shells(partials: np.ndarray) -> np.ndarray:
    """Compensated sum over the shell axis (axis 0)."""
    total = np.zeros(partials.shape[1], dtype=complex)
    comp = np.zeros_like(total)
    for k in range(partials.shape[0]):
        y = partials[k] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


class _Diagnostics:
    """Running truncation diagnostics (monotone max, cheap to share).

    Lifetime counters never reset; the window counters serve callers that
    report per-invocation numbers from a shared surface (the CLI resets
    the window before each command so equal seeds give equal reports).
    """

    def __init__(self):
        self.tail_ratio_max = 0.0
        self.evaluations = 0
        self.window_tail_max = 0.0
        self.window_evaluations = 0

    def record(self, tail: float):
        self.evaluations += 1
        self.window_evaluations += 1
        if tail > self.tail_ratio_max:
            self.tail_ratio_max = tail
        if tail > self.window_tail_max:
            self.window_tail_max = tail

    def window_reset(self):
        self.window_tail_max = 0.0
        self.window_evaluations = 0

    def as_dict(self) -> dict:
        return {
            "tail_ratio_max": self.tail_ratio_max,
            "evaluations": self.evaluations,
        }

    def window_dict(self) -> dict:
        return {
            "tail_ratio_max": self.window_tail_max,
            "evaluations": self.window_evaluations,
        }


class Surface:
    """One Schottky configuration with its cached group and evaluators.

    All inputs are immutable; the group-matrix stack is built once and all
    evaluation methods are pure functions of their point arguments, so a
    Surface can be shared across threads.  Point arguments may be scalars
    or arrays (broadcast against each other).
    """

    def __init__(
        self,
        params: SchottkyParams,
        policy: TruncationPolicy | None = None,
        limit_points: LimitPointConfig | None = None,
    ):
        report = validate(params)
        if not report.ok:
            raise PathBlockedError(f"inadmissible configuration: {report.violations}")
        self.params = params
        self.policy = policy or TruncationPolicy()
        self.handles = derive_handle_data(params)
        self.mats, self.offsets = group_matrix_stack(params, self.policy.max_word_length)
        self.scale = params.diameter()
        self._limit_points = limit_points  # lazy: order >= 2 needs g >= 2
        centroid = complex(np.mean(params.centers()))
        # ordinary-set anchor: far from every circle, used as the one-form
        # base point and as the N=1 kernel reference point
        self.base_point = centroid + 2j * self.scale
        self.diagnostics = _Diagnostics()
        self._period: PeriodMatrix | None = None
        self._theta_fits: dict[int, tuple] = {}
        self._nu_pair: dict[tuple[int, complex], tuple[complex, complex]] = {}

    # ------------------------------------------------------------------ utils
    @property
    def genus(self) -> int:
        return self.params.genus

    @property
    def limit_points(self) -> LimitPointConfig:
        if self._limit_points is None:
            self._limit_points = LimitPointConfig.default(self.handles, params=self.params)
        return self._limit_points

    def _reduce(self, partials: np.ndarray, mind: float, label: str) -> np.ndarray:
        if mind < self.policy.pole_guard * self.scale:
            raise PoleProximityError(
                f"{label}: pole distance {mind:.3e} under guard "
                f"{self.policy.pole_guard * self.scale:.3e}"
            )
        values = _kahan_shells(partials)
        if partials.shape[0] > 1:
            mags = np.abs(values)
            floor = np.max(mags) * 1e-3 + 1e-300
            tail = float(np.max(np.abs(partials[-1]) / np.maximum(mags, floor)))
            self.diagnostics.record(tail)
            if self.policy.mode == "adaptive" and tail > self.policy.tail_tol:
                raise TruncationError(
                    f"{label}: tail ratio {tail:.3e} above {self.policy.tail_tol:.1e} "
                    f"at word length {self.policy.max_word_length}"
                )
        return values

    @staticmethod
    def _broadcast(x, y):
        xa = np.atleast_1d(np.asarray(x, dtype=complex))
        ya = np.atleast_1d(np.asarray(y, dtype=complex))
        xb, yb = np.broadcast_arrays(xa, ya)
        shape = xb.shape
        return np.ascontiguousarray(xb.ravel()), np.ascontiguousarray(yb.ravel()), shape

    @staticmethod
    def _shape(values: np.ndarray, shape, scalar: bool):
        if scalar:
            return complex(values[0])
        return values.reshape(shape)

    # ------------------------------------------------------- raw evaluators
    def omega_raw(self, x, y):
        """Stripped bidifferential; symmetric, double pole on the diagonal."""
        scalar = np.isscalar(x) and np.isscalar(y)
        xs, ys, shape = self._broadcast(x, y)
        partials, mind = kernels.omega_partials(self.mats, self.offsets, xs, ys)
        return self._shape(self._reduce(partials, mind, "omega"), shape, scalar)

    def omega_n_raw(self, order: int, x, y):
        scalar = np.isscalar(x) and np.isscalar(y)
        xs, ys, shape = self._broadcast(x, y)
        partials, mind = kernels.omega_n_partials(self.mats, self.offsets, xs, ys, order)
        return self._shape(self._reduce(partials, mind, f"omega_{order}"), shape, scalar)

    def s_raw(self, x):
        """Projective connection: 6 * (omega minus its diagonal pole), the
        identity term removed analytically."""
        scalar = np.isscalar(x)
        xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=complex)).ravel())
        shape = np.atleast_1d(np.asarray(x)).shape
        partials, mind = kernels.proj_conn_partials(self.mats, self.offsets, xs)
        if partials.shape[0] == 0:  # L = 0: no non-identity words
            vals = np.zeros(len(xs), dtype=complex)
        else:
            vals = self._reduce(partials, mind, "proj_conn")
        return self._shape(6.0 * vals, shape, scalar)

    def psi_raw(self, order: int, x, y, limit_points: LimitPointConfig | None = None):
        """Stripped weight (N, 1-N) quasiform.

        For order 1 the kernel is d(gx)(1/(gx-y) - 1/(gx-A0)) with A0 the
        surface base point (or the single configured point).
        """
        scalar = np.isscalar(x) and np.isscalar(y)
        xs, ys, shape = self._broadcast(x, y)
        if order == 1:
            cfg = limit_points or self.limit_points
            a0 = cfg.points[0] if limit_points is not None else self.base_point
            a0s = np.full_like(xs, a0)
            partials, mind = kernels.cauchy_pair_partials(
                self.mats, self.offsets, xs, ys, a0s
            )
        else:
            cfg = limit_points
            if cfg is None:
                cfg = (
                    self.limit_points
                    if len(self.limit_points.points) >= 2 * order - 1
                    else LimitPointConfig.default(self.handles, order, self.params)
                )
            pts = np.asarray(cfg.points[: 2 * order - 1], dtype=complex)
            if len(pts) != 2 * order - 1:
                raise ValueError(f"need {2 * order - 1} limit points for order {order}")
            partials, mind = kernels.psi_partials(
                self.mats, self.offsets, xs, ys, pts, order
            )
        return self._shape(self._reduce(partials, mind, f"psi_{order}"), shape, scalar)

    # ------------------------------------------------------------- one-forms
    def _nu_endpoints(self, a: int, base: complex | None) -> tuple[complex, complex]:
        y0 = self.base_point if base is None else base
        key = (a, y0)
        if key not in self._nu_pair:
            g = generator(self.params, a)
            self._nu_pair[key] = (g.apply(y0), y0)
        return self._nu_pair[key]

    def nu_raw(self, a: int, x, base: complex | None = None):
        """Stripped holomorphic one-form nu_a as a telescoped pair difference.

        The base-point dependence cancels exactly in the full series; the
        result is independent of it up to the truncation tail.
        """
        yp, ym = self._nu_endpoints(a, base)
        scalar = np.isscalar(x)
        xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=complex)).ravel())
        shape = np.atleast_1d(np.asarray(x)).shape
        partials, mind = kernels.cauchy_pair_partials(
            self.mats, self.offsets, xs, np.full_like(xs, yp), np.full_like(xs, ym)
        )
        return self._shape(self._reduce(partials, mind, f"nu_{a}"), shape, scalar)

    def nu_vec(self, x) -> np.ndarray:
        """All one-forms at one point, shape (g,)."""
        return np.array([self.nu_raw(a, x) for a in range(1, self.genus + 1)])

    # --------------------------------------------------------------- contours
    def circle_integral(self, f, center: complex, radius: float,
                        tol: float = 1e-10, n0: int = 64, nmax: int = 4096) -> complex:
        """oint f dz on the counterclockwise circle, trapezoid with doubling.

        f must accept a vector of points.  Spectrally accurate for
        integrands analytic in an annulus around the contour.
        """
        n = n0
        prev = None
        while n <= nmax:
            theta = 2.0 * math.pi * np.arange(n) / n
            z = center + radius * np.exp(1j * theta)
            vals = f(z)
            integral = complex(TWO_PI_I / n * np.sum(vals * (z - center)))
            if prev is not None and abs(integral - prev) < tol:
                return integral
            prev = integral
            n *= 2
        raise TruncationError("contour quadrature did not meet the Cauchy criterion")

    def alpha_period_nu(self, a: int, b: int, **kw) -> complex:
        """(1/2pi i) oint_{C_{-b}} nu_a; equals delta_ab for exact forms."""
        c = self.params.w(-b)
        r = self.params.radius(b)
        return self.circle_integral(lambda z: self.nu_raw(a, z), c, r, **kw) / TWO_PI_I

    def alpha_period_omega(self, x: complex, a: int, **kw) -> complex:
        """oint_{C_{-a}} omega(x, .); vanishes by construction."""
        c = self.params.w(-a)
        r = self.params.radius(a)
        return self.circle_integral(lambda z: self.omega_raw(x, z), c, r, **kw)

    # ---------------------------------------------------------- period matrix
    def _beta_path(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes/weights along the handle-a multiplier flow.

        Starting from y0 just outside circle a, the path follows the
        one-parameter flow through gamma_a,

            z(t) = sigma^{-1}(q^t sigma(y0)),   sigma(z) = (z - W_{-a})/(z - W_a),

        ending at gamma_a(y0) just inside circle -a.  The flow realises
        the principal branch of the multiplier logarithm (on a one-handle
        surface the diagonal period is exactly Log q) and varies smoothly
        with the parameters.  Nodes are a frozen composite Gauss-Legendre
        layout in t; the node set must clear every other circle inflated
        by 10% and the pole clusters near the endpoint circle centres.
        """
        p = self.params
        h = self.handles[a - 1]
        q, W, Wn = h.q, h.W, h.W_neg
        r = p.radius(a)
        u = (p.w(-a) - p.w(a)) / abs(p.w(-a) - p.w(a))
        y0 = p.w(a) + 1.2 * r * 1j * u
        z0 = (y0 - Wn) / (y0 - W)
        # principal branch; a negative-zero imaginary part must not flip
        # the spiral below the cut (real configurations sit exactly on it)
        q = complex(q.real, 0.0) if q.imag == 0.0 else complex(q)
        logq = np.log(q)
        nodes, wts = np.polynomial.legendre.leggauss(_PATH_ORDER)
        ts, tw = [], []
        for panel in range(_PATH_PANELS):
            lo = panel / _PATH_PANELS
            hi = (panel + 1) / _PATH_PANELS
            ts.append(0.5 * (hi - lo) * (nodes + 1.0) + lo)
            tw.append(0.5 * (hi - lo) * wts)
        t = np.concatenate(ts)
        tw = np.concatenate(tw)
        Z = z0 * np.exp(t * logq)
        zs = (Wn - W * Z) / (1.0 - Z)
        dz_dt = (Wn - W) / (1.0 - Z) ** 2 * Z * logq
        if not self._path_clear(zs, a):
            raise PathBlockedError(f"handle path for a={a} blocked by a circle")
        return zs, tw * dz_dt

    def _path_clear(self, zs: np.ndarray, a: int) -> bool:
        p = self.params
        for b in p.signed_indices:
            rb = p.radius(b)
            clear = float(np.min(np.abs(zs - p.w(b)))) / rb
            need = 0.45 if abs(b) == abs(a) else 1.1
            if clear < need:
                return False
        return True

    def period_matrix(self) -> PeriodMatrix:
        """tau_ab: integral of nu_b along the handle-a path, symmetrised.

        Raises TruncationError when the raw asymmetry exceeds 1e-6 (the
        series or quadrature did not converge).
        """
        if self._period is not None:
            return self._period
        g = self.genus
        tau = np.empty((g, g), dtype=complex)
        for a in range(1, g + 1):
            zs, ws = self._beta_path(a)
            for b in range(1, g + 1):
                tau[a - 1, b - 1] = complex(np.sum(ws * self.nu_raw(b, zs)))
        asym = float(np.max(np.abs(tau - tau.T)))
        if asym > 1e-6:
            raise TruncationError(f"period matrix asymmetry {asym:.3e}")
        tau = 0.5 * (tau + tau.T)
        eigs = np.linalg.eigvalsh((tau / TWO_PI_I).imag)
        pairs = tuple((i, j) for i in range(1, g + 1) for j in range(i, g + 1))
        tau.setflags(write=False)
        self._period = PeriodMatrix(
            tau=tau,
            index_set_K=pairs,
            asymmetry=asym,
            min_im_eigenvalue=float(eigs.min()),
        )
        return self._period

    @property
    def tau(self) -> np.ndarray:
        return self.period_matrix().tau

    # ------------------------------------------------- holomorphic two-forms
    def _theta_fit(self, a: int, n_samples: int = 5):
        """Sample layout and design matrix for the quasiperiodicity fit."""
        if a not in self._theta_fits:
            p = self.params
            r = p.radius(a)
            j = np.arange(n_samples)
            ys = p.w(a) + 2.0 * r * np.exp(1j * (2 * math.pi * j / n_samples + 0.3))
            gen = generator(p, a)
            gys = np.array([gen.apply(z) for z in ys])
            dgys = np.array([gen.derivative(z) for z in ys])
            V = np.vander(ys - p.w(a), 3, increasing=True)  # columns 1, (y-w), (y-w)^2
            self._theta_fits[a] = (ys, gys, dgys, V)
        return self._theta_fits[a]

    def theta_row(self, a: int, x, residual_tol: float = 1e-7):
        """Coefficients Theta_{2,a}^l(x), l = 0..2, from the quasiperiodicity

            Psi_2(x, gamma_a y) - Psi_2(x, y) = -sum_l Theta^l(x) (y-w_a)^l / dy,

        solved in least squares over the sample circle.  Returns (theta,
        fit_residual); raises TruncationError when the residual exceeds
        residual_tol (quasiperiodicity is exact, so a bad fit means the
        series tail is too large).
        """
        ys, gys, dgys, V = self._theta_fit(a)
        lhs = self.psi_raw(2, x, gys) / dgys - self.psi_raw(2, x, ys)
        theta, *_ = np.linalg.lstsq(V, -lhs, rcond=None)
        resid = float(np.linalg.norm(V @ theta + lhs) / max(np.linalg.norm(lhs), 1e-300))
        if resid > residual_tol:
            raise TruncationError(f"quasiperiodicity fit residual {resid:.3e}")
        return theta, resid

    def theta_matrix(self, x) -> np.ndarray:
        """All spanning two-form coefficients at x, shape (g, 3)."""
        return np.array([self.theta_row(a, x)[0] for a in range(1, self.genus + 1)])

    # ------------------------------------------------------- tagged wrappers
    def omega(self, x: complex, y: complex) -> FormValue:
        return FormValue(self.omega_raw(complex(x), complex(y)), (1, 1))

    def omega_n(self, order: int, x: complex, y: complex) -> FormValue:
        return FormValue(self.omega_n_raw(order, complex(x), complex(y)), (order, order))

    def s(self, x: complex) -> FormValue:
        return FormValue(self.s_raw(complex(x)), (2,))

    def psi_n(self, order: int, x: complex, y: complex, **kw) -> FormValue:
        return FormValue(self.psi_raw(order, complex(x), complex(y), **kw), (order, 1 - order))

    def nu(self, a: int, x: complex) -> FormValue:
        return FormValue(self.nu_raw(a, complex(x)), (1,))


@lru_cache(maxsize=256)
def get_surface(
    params: SchottkyParams,
    policy: TruncationPolicy,
    limit_points: LimitPointConfig | None = None,
) -> Surface:
    """Shared surface cache; the variational stencils hit this hard."""
    return Surface(params, policy, limit_points)


def reference_params() -> SchottkyParams:
    """The genus-2 configuration all acceptance numbers refer to."""
    return SchottkyParams(
        genus=2,
        handles=(
            (-3.0 + 0j, -1.0 + 0j, 0.02 + 0j),
            (1.0 + 0j, 3.0 + 0j, 0.02 + 0j),
        ),
    )
