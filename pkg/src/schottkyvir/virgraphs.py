"""Virasoro graphs and the n-point differential operator they assemble.

A graph of order n is an injective partial map on the vertex labels
{1..n}: every vertex has indegree and outdegree at most one, so the
graph splits into cycles and open chains (an isolated vertex is a
degenerate chain).  The census over all orders is

    #graphs(n) = sum_{i=0}^{n} i! C(n, i)^2.

Weights on the reference surface:

  * each directed edge (i, j) carries s(z_i)/6 when i = j and
    omega(z_i, z_j) otherwise;
  * a graph with L cycles carries the prefactor (c/2)^L;
  * the M chains, with start vertices x_m and end vertices y_m, carry
    the order-M differential operator

        sum over pairs (a_1,b_1)..(a_M,b_M) in K of
            prod_m nu_{a_m}(x_m) nu_{b_m}(y_m) d/dtau_{a_1 b_1} ...

    over the period-matrix coordinate pairs K; a degenerate chain
    reduces to the moduli gradient nu_a(z) nu_b(z) d/dtau_ab.

The order-n operator D_n is the sum of all graph weights; applied to a
supplier F(tau) it produces the normalised n-point function.  D_n obeys
the recursion

    D_{n+1}(z, z') = (nabla_form at z' with weights (2..2) + (c/12) s(z')) D_n(z)
                     + (c/2) sum_k omega_2(z_k, z') D_{n-1}(z minus z_k),

verified numerically by re-evaluating D_n F at perturbed sewing data
under the variational machinery.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .differentials import Surface, get_surface
from .moduli import ModuliFunction
from .variations import FDConfig, MeromorphicFamily, nabla_form_raw

__all__ = [
    "VirasoroGraph",
    "enumerate_graphs",
    "graph_count",
    "edge_weight",
    "apply_graph",
    "apply_Dn",
    "closed_form_D2",
    "verify_recursion",
]

MAX_ORDER = 8  # combinatorial guard


@dataclass(frozen=True)
class VirasoroGraph:
    """An injective partial map i -> j on {1..n}, stored as sorted edges."""

    n: int
    mapping: tuple[tuple[int, int], ...]

    def __post_init__(self):
        srcs = [i for i, _ in self.mapping]
        dsts = [j for _, j in self.mapping]
        if len(set(srcs)) != len(srcs) or len(set(dsts)) != len(dsts):
            raise ValueError("not a partial permutation")

    @cached_property
    def _succ(self) -> dict[int, int]:
        return dict(self.mapping)

    @cached_property
    def cycles(self) -> tuple[tuple[int, ...], ...]:
        succ = self._succ
        seen = set()
        out = []
        for start in range(1, self.n + 1):
            if start in seen or start not in succ:
                continue
            trail = [start]
            cur = succ[start]
            while cur in succ and cur != start:
                trail.append(cur)
                cur = succ[cur]
            if cur == start:
                seen.update(trail)
                out.append(tuple(trail))
            # otherwise this walk is part of a chain; handled below
        # canonical: rotate each cycle to start at its smallest label
        canon = []
        for cyc in out:
            k = cyc.index(min(cyc))
            canon.append(cyc[k:] + cyc[:k])
        return tuple(sorted(canon))

    @cached_property
    def chains(self) -> tuple[tuple[int, ...], ...]:
        """Maximal open paths, singletons included; disjoint from cycles."""
        succ = self._succ
        in_cycle = {v for cyc in self.cycles for v in cyc}
        has_in = set(succ.values())
        out = []
        for start in range(1, self.n + 1):
            if start in in_cycle or start in has_in:
                continue
            trail = [start]
            cur = start
            while cur in succ:
                cur = succ[cur]
                trail.append(cur)
            out.append(tuple(trail))
        return tuple(sorted(out))

    @property
    def cycle_count(self) -> int:
        return len(self.cycles)

    @property
    def chain_endpoints(self) -> tuple[tuple[int, int], ...]:
        """(start, end) vertex labels per chain; equal for singletons."""
        return tuple((c[0], c[-1]) for c in self.chains)


def graph_count(n: int) -> int:
    return sum(math.factorial(i) * math.comb(n, i) ** 2 for i in range(n + 1))


@lru_cache(maxsize=16)
def enumerate_graphs(n: int) -> tuple[VirasoroGraph, ...]:
    """All injective partial maps on {1..n}; count matches graph_count."""
    if n < 0:
        raise ValueError("order must be >= 0")
    if n > MAX_ORDER:
        raise ValueError(f"order {n} beyond the combinatorial guard {MAX_ORDER}")
    labels = range(1, n + 1)
    out = []
    for size in range(n + 1):
        for dom in itertools.combinations(labels, size):
            for img in itertools.combinations(labels, size):
                for perm in itertools.permutations(img):
                    out.append(VirasoroGraph(n=n, mapping=tuple(zip(dom, perm))))
    assert len(out) == graph_count(n)
    return tuple(out)


def edge_weight(surface: Surface, zi: complex, zj: complex) -> complex:
    """s(z)/6 on the diagonal, omega off it; symmetric in its arguments."""
    if zi == zj:
        return surface.s_raw(zi) / 6.0
    return surface.omega_raw(zi, zj)


def _chain_operator(surface: Surface, F: ModuliFunction,
                    endpoints: tuple[tuple[int, int], ...],
                    zs: tuple[complex, ...], nu_cache: dict) -> complex:
    """Contract the chain-endpoint one-forms with the mixed F derivatives."""
    if F.max_order is not None and len(endpoints) > F.max_order:
        raise ValueError(
            f"supplier provides derivatives to order {F.max_order}, "
            f"graph needs {len(endpoints)}"
        )
    pm = surface.period_matrix()
    tau = pm.tau
    if not endpoints:
        return F.value(tau)

    def nu_at(z: complex) -> np.ndarray:
        if z not in nu_cache:
            nu_cache[z] = surface.nu_vec(z)
        return nu_cache[z]

    total = 0.0 + 0.0j
    for pairs in itertools.product(pm.index_set_K, repeat=len(endpoints)):
        coeff = 1.0 + 0.0j
        for (xi, yi), (a, b) in zip(endpoints, pairs):
            coeff *= nu_at(zs[xi - 1])[a - 1] * nu_at(zs[yi - 1])[b - 1]
        total += coeff * F.derivative(tau, pairs)
    return total


def apply_graph(
    surface: Surface,
    graph: VirasoroGraph,
    c: complex,
    F: ModuliFunction,
    zs: tuple[complex, ...],
    nu_cache: dict | None = None,
) -> complex:
    """The total weight of one graph applied to the supplier:

        (c/2)^L  prod_edges E(z_i, z_j)  Delta_M F.
    """
    if len(zs) != graph.n:
        raise ValueError("need one point per vertex")
    if nu_cache is None:
        nu_cache = {}
    w = (c / 2.0) ** graph.cycle_count
    for i, j in graph.mapping:
        w *= edge_weight(surface, zs[i - 1], zs[j - 1])
    return w * _chain_operator(surface, F, graph.chain_endpoints, zs, nu_cache)


def apply_Dn(
    surface: Surface,
    n: int,
    c: complex,
    F: ModuliFunction,
    zs: tuple[complex, ...],
    per_graph: bool = False,
):
    """Sum of all order-n graph weights applied to F (the n-point value)."""
    if len(zs) != n:
        raise ValueError("need n points")
    nu_cache: dict = {}
    vals = [apply_graph(surface, gr, c, F, zs, nu_cache) for gr in enumerate_graphs(n)]
    total = complex(np.sum(np.array(vals, dtype=complex)))
    if per_graph:
        return total, vals
    return total


def _dn_family(policy, n: int, c: complex, F: ModuliFunction) -> MeromorphicFamily:
    """D_n F as a weight-(2..2) family over the sewing parameters."""

    def evaluate(params, pts):
        return apply_Dn(get_surface(params, policy), n, c, F, tuple(pts))

    return MeromorphicFamily(evaluate=evaluate, weights=(2,) * n)


def recursion_rhs(
    surface: Surface,
    n: int,
    c: complex,
    F: ModuliFunction,
    zs: tuple[complex, ...],
    z_new: complex,
    cfg: FDConfig = FDConfig(),
) -> complex:
    """Right side of the order-lowering recursion at z_new.

    Every classical form entering D_n is recomputed at the perturbed
    sewing data inside the variational stencil; z-point derivatives are
    central differences on the family.
    """
    pol = surface.policy
    total = nabla_form_raw(surface, z_new, _dn_family(pol, n, c, F), zs, cfg)
    dn = apply_Dn(surface, n, c, F, zs)
    total += c / 12.0 * surface.s_raw(z_new) * dn
    if n >= 1:
        for k in range(n):
            reduced = zs[:k] + zs[k + 1 :]
            total += (
                c / 2.0
                * surface.omega_n_raw(2, zs[k], z_new)
                * apply_Dn(surface, n - 1, c, F, reduced)
            )
    return total


def verify_recursion(
    surface: Surface,
    n: int,
    c: complex,
    F: ModuliFunction,
    zs: tuple[complex, ...],
    z_new: complex,
    cfg: FDConfig = FDConfig(),
) -> dict:
    """Relative residual between D_{n+1} and the recursion right side.

    The reported noise floor estimates how much of the residual the
    stencil arithmetic itself can produce (measured period-matrix
    roundoff amplified by the step); a residual at or below it is
    noise-limited, which the caller is warned about since further
    agreement cannot be resolved.
    """
    import warnings

    lhs = apply_Dn(surface, n + 1, c, F, zs + (z_new,))
    rhs = recursion_rhs(surface, n, c, F, zs, z_new, cfg)
    residual = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    # ~1e-12 non-smooth noise per period-matrix value, through the
    # central difference and the Theta contraction
    noise_floor = 1e-12 / cfg.rel_step
    if 0 < residual <= noise_floor:
        warnings.warn(
            f"recursion residual {residual:.2e} is at the stencil noise "
            f"floor {noise_floor:.2e}; agreement beyond it is unresolved",
            stacklevel=2,
        )
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": residual,
        "noise_floor": noise_floor,
    }


def closed_form_D2(
    surface: Surface,
    c: complex,
    F: ModuliFunction,
    z1: complex,
    z2: complex,
    cfg: FDConfig = FDConfig(),
) -> complex:
    """The two-point operator through the recursion shape,

        (nabla_form at z2 + (c/12) s(z2)) D_1(z1) + (c/2) omega_2(z1, z2),

    for cross-checking the direct graph sum."""
    return recursion_rhs(surface, 1, c, F, (z1,), z2, cfg)
