"""Functions of the period matrix with analytic derivatives.

Suppliers evaluate F(tau) and mixed derivatives with respect to the
unordered entry pairs (a, b), a <= b, treating tau_ab = tau_ba as one
variable.  The normalised matrix is Omega = tau / (2 pi i), so

    d/dtau_ab = (1/2pi i) d/dOmega_ab,

with the off-diagonal chain-rule factor of two absorbed here: for the
lattice sum below, d/dOmega_ab of the exponent i pi lam.Omega.lam brings
down i pi (2 - delta_ab) (lam_a . lam_b).

Two families ship: Siegel theta series of even positive-definite
lattices, summed over g-tuples of lattice vectors, and exact polynomial
test functions in the tau entries.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ModuliFunction",
    "EvenLattice",
    "SiegelTheta",
    "PolynomialModuli",
    "sqrt2_lattice",
    "e8_lattice",
    "parse_supplier",
]

TWO_PI_I = 2j * math.pi

Pair = tuple[int, int]


def _norm_pair(p: Pair) -> Pair:
    a, b = p
    return (a, b) if a <= b else (b, a)


class ModuliFunction:
    """Interface: value(tau) and analytic mixed tau-derivatives.

    derivative(tau, pairs) applies one d/dtau_ab per listed pair (order
    irrelevant); the empty tuple returns the value.  max_order is None
    for suppliers with derivatives of every order.
    """

    max_order: int | None = None

    def value(self, tau: np.ndarray) -> complex:
        return self.derivative(tau, ())

    def derivative(self, tau: np.ndarray, pairs: Sequence[Pair]) -> complex:
        raise NotImplementedError


@dataclass(frozen=True)
class EvenLattice:
    """An even positive-definite integral lattice given by its Gram matrix."""

    gram: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        g = np.array(self.gram, dtype=np.int64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.array_equal(g, g.T):
            raise ValueError("Gram matrix must be symmetric")
        if any(d % 2 for d in np.diag(g)):
            raise ValueError("even lattice needs even diagonal")
        if np.linalg.eigvalsh(g.astype(float)).min() <= 0:
            raise ValueError("Gram matrix must be positive definite")

    @property
    def rank(self) -> int:
        return len(self.gram)

    def gram_array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)


def sqrt2_lattice() -> EvenLattice:
    """Rank one, Gram [2]: the integer multiples of sqrt(2)."""
    return EvenLattice(gram=((2,),))


def e8_lattice() -> EvenLattice:
    """The E8 root lattice Gram matrix (rank 8)."""
    g = [
        [2, -1, 0, 0, 0, 0, 0, 0],
        [-1, 2, -1, 0, 0, 0, 0, 0],
        [0, -1, 2, -1, 0, 0, 0, 0],
        [0, 0, -1, 2, -1, 0, 0, 0],
        [0, 0, 0, -1, 2, -1, 0, -1],
        [0, 0, 0, 0, -1, 2, -1, 0],
        [0, 0, 0, 0, 0, -1, 2, 0],
        [0, 0, 0, 0, -1, 0, 0, 2],
    ]
    return EvenLattice(gram=tuple(tuple(r) for r in g))


_MAX_TUPLES = 2_000_000


class SiegelTheta(ModuliFunction):
    """Lattice theta series over g-tuples:

        theta(Omega) = sum_{lam in L^g} exp(i pi lam . Omega . lam),

    truncated to integer coordinate vectors n with n^T G n <= R^2.  The
    radius defaults to the tail bound e^{-pi mu_min R^2} < 1e-12 with
    mu_min the smallest eigenvalue of Im Omega times the lattice minimum;
    an explicit radius overrides it.  Derivatives of any order multiply
    each summand by (2 - delta_ab)(lam_a . lam_b)/2 factors.
    """

    max_order = None

    def __init__(self, lattice: EvenLattice, radius: float | None = None):
        self.lattice = lattice
        self.radius = radius
        self._vectors: dict[float, np.ndarray] = {}

    def _coordinate_vectors(self, r: float) -> np.ndarray:
        """All integer coordinate vectors with Gram norm <= r^2."""
        if r in self._vectors:
            return self._vectors[r]
        G = self.lattice.gram_array().astype(float)
        # coordinate box bound: n^T G n >= mu_min |n|^2
        mu = np.linalg.eigvalsh(G).min()
        bound = int(math.floor(r / math.sqrt(mu))) + 1
        rng = range(-bound, bound + 1)
        vs = [
            np.array(n)
            for n in itertools.product(rng, repeat=self.lattice.rank)
            if np.array(n) @ G @ np.array(n) <= r * r + 1e-12
        ]
        out = np.array(vs, dtype=np.int64)
        self._vectors[r] = out
        return out

    def _radius_for(self, omega: np.ndarray) -> float:
        if self.radius is not None:
            return self.radius
        G = self.lattice.gram_array().astype(float)
        mu_min = float(np.linalg.eigvalsh(omega.imag).min())
        lattice_min = float(np.linalg.eigvalsh(G).min())
        if mu_min <= 0:
            raise ValueError("Im Omega must be positive definite")
        # e^{-pi mu R^2} < 1e-12
        r2 = 12.0 * math.log(10.0) / (math.pi * mu_min * lattice_min)
        return math.sqrt(r2) + 1.0

    def derivative(self, tau: np.ndarray, pairs: Sequence[Pair]) -> complex:
        tau = np.asarray(tau, dtype=complex)
        g = tau.shape[0]
        omega = tau / TWO_PI_I
        if np.linalg.eigvalsh(omega.imag).min() <= 0:
            raise ValueError("Im(tau/2pi i) must be positive definite")
        r = self._radius_for(omega)
        vecs = self._coordinate_vectors(r)
        if len(vecs) ** g > _MAX_TUPLES:
            raise ValueError(
                f"{len(vecs)**g} lattice tuples exceed the size guard; "
                "pass a smaller radius or a smaller lattice"
            )
        G = self.lattice.gram_array()
        # inner products lam_i . lam_j for all pairs of truncated vectors
        dots = vecs @ G @ vecs.T  # (m, m) integers
        total = 0.0 + 0.0j
        for tup in itertools.product(range(len(vecs)), repeat=g):
            quad = sum(
                dots[tup[i], tup[j]] * omega[i, j] for i in range(g) for j in range(g)
            )
            term = np.exp(1j * math.pi * quad)
            for p in pairs:
                a, b = _norm_pair(p)
                factor = (2 - (a == b)) * dots[tup[a - 1], tup[b - 1]] / 2.0
                term *= factor
            total += term
        return complex(total)

    def tail_bound(self, tau: np.ndarray) -> float:
        """Crude bound on the dropped tail at the working radius."""
        omega = np.asarray(tau, dtype=complex) / TWO_PI_I
        mu_min = float(np.linalg.eigvalsh(omega.imag).min())
        lattice_min = float(np.linalg.eigvalsh(self.lattice.gram_array().astype(float)).min())
        r = self._radius_for(omega)
        return math.exp(-math.pi * mu_min * lattice_min * (r - 1.0) ** 2)


class PolynomialModuli(ModuliFunction):
    """Exact polynomial in the tau entries.

    Terms map a monomial, written as a tuple of unordered pairs with
    repetition, to its coefficient: tau_11 tau_22 is ((1,1),(2,2)),
    tau_12^2 is ((1,2),(1,2)).  Derivatives of every order are exact.
    """

    max_order = None

    def __init__(self, terms: dict[tuple[Pair, ...], complex]):
        self.terms = {
            tuple(sorted(_norm_pair(p) for p in mono)): complex(c)
            for mono, c in terms.items()
        }

    def derivative(self, tau: np.ndarray, pairs: Sequence[Pair]) -> complex:
        tau = np.asarray(tau, dtype=complex)
        total = 0.0 + 0.0j
        for mono, coeff in self.terms.items():
            total += coeff * _monomial_derivative(mono, tau, [_norm_pair(p) for p in pairs])
        return complex(total)


def _monomial_derivative(mono: tuple[Pair, ...], tau: np.ndarray, pairs: list[Pair]) -> complex:
    if not pairs:
        out = 1.0 + 0.0j
        for a, b in mono:
            out *= tau[a - 1, b - 1]
        return out
    head, rest = pairs[0], pairs[1:]
    total = 0.0 + 0.0j
    remaining = list(mono)
    for i, p in enumerate(mono):
        if p == head:
            sub = tuple(remaining[:i] + remaining[i + 1 :])
            total += _monomial_derivative(sub, tau, rest)
    return total


def parse_supplier(spec: str) -> ModuliFunction:
    """CLI supplier strings.

    lattice:sqrt2 | lattice:e8 | lattice:file=<gram.json> | poly:<json>

    The gram file holds {"gram": [[...], ...]}; the poly JSON holds
    {"terms": [{"c": [re, im], "pairs": [[a, b], ...]}, ...]}.
    """
    kind, _, arg = spec.partition(":")
    if kind == "lattice":
        if arg == "sqrt2":
            return SiegelTheta(sqrt2_lattice())
        if arg == "e8":
            return SiegelTheta(e8_lattice())
        if arg.startswith("file="):
            with open(arg[5:], encoding="utf-8") as fh:
                doc = json.load(fh)
            return SiegelTheta(EvenLattice(gram=tuple(tuple(r) for r in doc["gram"])))
        raise ValueError(f"unknown lattice {arg!r}")
    if kind == "poly":
        doc = json.loads(arg)
        terms = {}
        for t in doc["terms"]:
            mono = tuple((int(a), int(b)) for a, b in t["pairs"])
            terms[mono] = complex(t["c"][0], t["c"][1])
        return PolynomialModuli(terms)
    raise ValueError(f"unknown supplier kind {kind!r}")
