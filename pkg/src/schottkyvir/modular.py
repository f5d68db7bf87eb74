"""Homology base changes and the automorphy of the n-point operators.

An integer symplectic block matrix [[A, B], [C, D]] acts on the marking;
with M := C Omega + D and N := M^{-1} the transformed data are

    Omega~ = (A Omega + B) N                (symmetric, Im > 0)
    nu~(x) = nu(x) N                        (row vector)
    omega~(x,y) = omega(x,y) - (1/2pi i) nu(x) NC nu(y)^T
    s~(x)       = s(x) - (3/pi i) nu(x) NC nu(x)^T

with NC symmetric and

    (NC)_ab = d/dOmega_aa log det M          (a = b)
            = (1/2) d/dOmega_ab log det M    (a != b).

The moduli gradient and the weight-(2,2) form are marking-invariant, so
the transformed n-point operator differs only through s~ and omega~; on
any period-matrix function F

    D~_n ( det(M)^{c/2} F ) = det(M)^{c/2} D_n F,

which verify_automorphy checks with the log-det derivative supplied by
an independent finite-difference oracle in the Omega entries.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .differentials import Surface
from .moduli import ModuliFunction, Pair, _norm_pair

__all__ = [
    "SpElement",
    "ModularFrame",
    "random_sp",
    "transform_frame",
    "transformed_differentials",
    "logdet_gradient",
    "logdet_gradient_fd",
    "logdetM_derivative_check",
    "verify_automorphy",
]

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class SpElement:
    """Integer symplectic block matrix; invariants hold exactly over Z."""

    A: tuple[tuple[int, ...], ...]
    B: tuple[tuple[int, ...], ...]
    C: tuple[tuple[int, ...], ...]
    D: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        A, B, C, D = (np.array(m, dtype=np.int64) for m in (self.A, self.B, self.C, self.D))
        g = A.shape[0]
        eye = np.eye(g, dtype=np.int64)
        if not np.array_equal(A @ D.T - B @ C.T, eye):
            raise ValueError("A D^T - B C^T != I")
        if not np.array_equal(A.T @ D - C.T @ B, eye):
            raise ValueError("A^T D - C^T B != I")
        for m, name in ((A @ B.T, "AB^T"), (A.T @ C, "A^T C"),
                        (D @ C.T, "DC^T"), (D.T @ B, "D^T B")):
            if not np.array_equal(m, m.T):
                raise ValueError(f"{name} not symmetric")

    @property
    def genus(self) -> int:
        return len(self.A)

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.array(m, dtype=np.int64) for m in (self.A, self.B, self.C, self.D))

    def inverse(self) -> "SpElement":
        A, B, C, D = self.blocks()
        return SpElement(
            A=_t(D.T), B=_t(-B.T), C=_t(-C.T), D=_t(A.T)
        )

    def compose(self, other: "SpElement") -> "SpElement":
        a1, b1, c1, d1 = self.blocks()
        a2, b2, c2, d2 = other.blocks()
        return SpElement(
            A=_t(a1 @ a2 + b1 @ c2),
            B=_t(a1 @ b2 + b1 @ d2),
            C=_t(c1 @ a2 + d1 @ c2),
            D=_t(c1 @ b2 + d1 @ d2),
        )

    @classmethod
    def identity(cls, g: int) -> "SpElement":
        eye = np.eye(g, dtype=np.int64)
        zero = np.zeros((g, g), dtype=np.int64)
        return cls(A=_t(eye), B=_t(zero), C=_t(zero), D=_t(eye))

    @classmethod
    def shear(cls, B: np.ndarray) -> "SpElement":
        """Omega -> Omega + B for symmetric integer B (a C = 0 element)."""
        B = np.array(B, dtype=np.int64)
        g = B.shape[0]
        eye = np.eye(g, dtype=np.int64)
        zero = np.zeros((g, g), dtype=np.int64)
        return cls(A=_t(eye), B=_t(B), C=_t(zero), D=_t(eye))

    @classmethod
    def inversion(cls, g: int) -> "SpElement":
        """Omega -> -Omega^{-1}: the block [[0, -I], [I, 0]]."""
        eye = np.eye(g, dtype=np.int64)
        zero = np.zeros((g, g), dtype=np.int64)
        return cls(A=_t(zero), B=_t(-eye), C=_t(eye), D=_t(zero))


def _t(m: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in np.asarray(m))


def random_sp(g: int, word_length: int = 6, rng: np.random.Generator | None = None) -> SpElement:
    """Product of random shear and inversion generators (and inverses).

    Shears use symmetric integer matrices with entries in {-1, 0, 1};
    together with the inversion they generate the full integer symplectic
    group.  Invariants are verified exactly on construction.
    """
    rng = rng or np.random.default_rng()
    out = SpElement.identity(g)
    for _ in range(word_length):
        if rng.integers(0, 3) == 0:
            gen = SpElement.inversion(g)
        else:
            b = rng.integers(-1, 2, size=(g, g))
            b = np.triu(b) + np.triu(b, 1).T
            gen = SpElement.shear(b)
        if rng.integers(0, 2) == 1:
            gen = gen.inverse()
        out = out.compose(gen)
    return out


@dataclass(frozen=True)
class ModularFrame:
    """Omega with the derived matrices of one symplectic element."""

    omega: np.ndarray
    sp: SpElement
    M: np.ndarray
    N: np.ndarray
    omega_new: np.ndarray

    def nc(self) -> np.ndarray:
        _, _, C, _ = self.sp.blocks()
        return self.N @ C


def transform_frame(omega: np.ndarray, sp: SpElement) -> ModularFrame:
    """Build M = C Omega + D, N = M^{-1}, Omega~ = (A Omega + B) N.

    Raises on a singular M (the element degenerates on this stratum;
    resample).
    """
    A, B, C, D = sp.blocks()
    omega = np.asarray(omega, dtype=complex)
    M = C @ omega + D
    if abs(np.linalg.det(M)) < 1e-12:
        raise ValueError("singular M = C Omega + D for this element")
    N = np.linalg.inv(M)
    omega_new = (A @ omega + B) @ N
    return ModularFrame(omega=omega, sp=sp, M=M, N=N, omega_new=omega_new)


def transformed_differentials(
    surface: Surface, sp: SpElement, x: complex, y: complex
) -> dict:
    """nu~, omega~ and s~ at the given points through the closed formulas.

    Everything is evaluated on the original surface; no re-uniformisation
    of the transformed marking takes place.
    """
    pm = surface.period_matrix()
    frame = transform_frame(pm.omega_cap, sp)
    nc = frame.nc()
    nu_x = surface.nu_vec(x)
    nu_y = surface.nu_vec(y)
    omega_t = surface.omega_raw(x, y) - (nu_x @ nc @ nu_y) / TWO_PI_I
    s_t = surface.s_raw(x) - 3.0 / (math.pi * 1j) * (nu_x @ nc @ nu_x)
    return {
        "frame": frame,
        "nu_new_x": nu_x @ frame.N,
        "omega_new": complex(omega_t),
        "s_new": complex(s_t),
    }


def logdet_gradient(frame: ModularFrame) -> dict[Pair, complex]:
    """d log det M / dtau_ab per unordered pair, from the NC matrix:

        d/dtau_ab = (1/2pi i) (2 - delta_ab) (NC)_ab.
    """
    g = frame.omega.shape[0]
    nc = frame.nc()
    out = {}
    for a in range(1, g + 1):
        for b in range(a, g + 1):
            out[(a, b)] = (2 - (a == b)) * nc[a - 1, b - 1] / TWO_PI_I
    return out


def logdet_gradient_fd(omega: np.ndarray, sp: SpElement, step: float = 1e-6) -> dict[Pair, complex]:
    """Independent oracle: central differences of log det(C Omega + D)
    in the Omega entries (symmetric off-diagonal perturbations), scaled
    to tau-derivatives."""
    A, B, C, D = sp.blocks()
    omega = np.asarray(omega, dtype=complex)
    g = omega.shape[0]

    def logdet(om: np.ndarray) -> complex:
        sign, ld = np.linalg.slogdet(C @ om + D)
        return complex(np.log(sign) + ld)

    out = {}
    for a in range(g):
        for b in range(a, g):
            dp = np.zeros_like(omega)
            dp[a, b] = step
            dp[b, a] = step  # one variable per unordered pair
            out[(a + 1, b + 1)] = (logdet(omega + dp) - logdet(omega - dp)) / (
                2.0 * step
            ) / TWO_PI_I
    return out


def logdetM_derivative_check(omega: np.ndarray, sp: SpElement, step: float = 1e-6) -> float:
    """Max deviation between the NC formula and the finite-difference
    oracle, over all unordered pairs."""
    frame = transform_frame(omega, sp)
    exact = logdet_gradient(frame)
    fd = logdet_gradient_fd(omega, sp, step)
    return max(abs(exact[k] - fd[k]) for k in exact)


def _pair_step(m: np.ndarray, p: Pair, h: float) -> np.ndarray:
    """Perturb the single symmetric variable behind an unordered pair."""
    a, b = _norm_pair(p)
    d = np.zeros_like(m)
    d[a - 1, b - 1] += h
    if a != b:
        d[b - 1, a - 1] += h
    return m + d


def _fd_pair_derivative(fun, m0: np.ndarray, pairs: tuple[Pair, ...], step: float) -> complex:
    """Mixed derivatives (order <= 2) of a symmetric-matrix function by
    central differences, one variable per unordered pair."""
    if len(pairs) == 0:
        return fun(m0)
    if len(pairs) == 1:
        p = pairs[0]
        d1 = (fun(_pair_step(m0, p, step)) - fun(_pair_step(m0, p, -step))) / (2 * step)
        d2 = (fun(_pair_step(m0, p, step / 2)) - fun(_pair_step(m0, p, -step / 2))) / step
        return (4.0 * d2 - d1) / 3.0
    if len(pairs) == 2:
        p, q = pairs

        def inner(m: np.ndarray) -> complex:
            return (fun(_pair_step(m, q, step)) - fun(_pair_step(m, q, -step))) / (2 * step)

        return (inner(_pair_step(m0, p, step)) - inner(_pair_step(m0, p, -step))) / (2 * step)
    raise ValueError("derivative order <= 2 supported")


def verify_automorphy(
    surface: Surface,
    sp: SpElement,
    n: int,
    c: complex,
    F: ModuliFunction,
    zs: tuple[complex, ...],
    fd_step: float = 1e-3,
) -> dict:
    """Relative residual of the automorphy identity at order n <= 2.

    The transformed operator is assembled honestly in the new marking:
    edge weights use s~ and omega~, chain endpoint one-forms use
    nu~ = nu N, and the chain derivatives act in the transformed
    period-matrix coordinates on the pulled-back operand

        G(tau~) := det(C Omega(tau~) + D)^{c/2} F(tau(tau~)),

    where tau(tau~) inverts the marking change through the inverse
    symplectic block matrix.  Mixed tau~-derivatives (order <= 2) are
    finite differences; they see the coordinate-change Hessian that a
    first-order substitution would miss.  The right side applies the
    untransformed operator to F with analytic supplier derivatives; both
    sides share the det power at the base point, so its branch cancels
    in the residual.
    """
    if n > 2:
        raise ValueError("automorphy check supports n <= 2")
    pm = surface.period_matrix()
    frame = transform_frame(pm.omega_cap, sp)
    nc = frame.nc()
    tau_new = TWO_PI_I * frame.omega_new
    Ai, Bi, Ci, Di = sp.inverse().blocks()
    _, _, C, D = sp.blocks()
    half_c = c / 2.0

    def tau_of(tnew: np.ndarray) -> np.ndarray:
        om_new = tnew / TWO_PI_I
        om = (Ai @ om_new + Bi) @ np.linalg.inv(Ci @ om_new + Di)
        return TWO_PI_I * om

    def operand(tnew: np.ndarray) -> complex:
        tau = tau_of(tnew)
        sign, ld = np.linalg.slogdet(C @ (tau / TWO_PI_I) + D)
        return complex(np.exp(half_c * (np.log(sign) + ld)) * F.value(tau))

    base_det = operand(tau_new) / F.value(pm.tau)

    nu_cache: dict = {}

    def nu_plain(z: complex) -> np.ndarray:
        if z not in nu_cache:
            nu_cache[z] = surface.nu_vec(z)
        return nu_cache[z]

    def nu_t(z: complex) -> np.ndarray:
        return nu_plain(z) @ frame.N

    def edge_t(zi: complex, zj: complex) -> complex:
        ni, nj = nu_plain(zi), nu_plain(zj)
        if zi == zj:
            return (surface.s_raw(zi) - 3.0 / (math.pi * 1j) * (ni @ nc @ ni)) / 6.0
        return surface.omega_raw(zi, zj) - (ni @ nc @ nj) / TWO_PI_I

    def chain_op(endpoints) -> complex:
        if not endpoints:
            return operand(tau_new)
        total = 0.0 + 0.0j
        for pairs in itertools.product(pm.index_set_K, repeat=len(endpoints)):
            coeff = 1.0 + 0.0j
            for (xi, yi), (a, b) in zip(endpoints, pairs):
                coeff *= nu_t(zs[xi - 1])[a - 1] * nu_t(zs[yi - 1])[b - 1]
            total += coeff * _fd_pair_derivative(operand, tau_new, pairs, fd_step)
        return total

    from .virgraphs import apply_Dn, enumerate_graphs

    lhs = 0.0 + 0.0j
    for gr in enumerate_graphs(n):
        w = (c / 2.0) ** gr.cycle_count
        for i, j in gr.mapping:
            w *= edge_t(zs[i - 1], zs[j - 1])
        lhs += w * chain_op(gr.chain_endpoints)
    rhs = base_det * apply_Dn(surface, n, c, F, zs)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs) / max(abs(rhs), 1e-300),
        "frame": frame,
    }
