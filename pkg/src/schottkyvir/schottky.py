"""Schottky sewing data and the free group it generates.

A genus-g surface is presented by g pairs of circles on the sphere with
centres w_a, w_{-a} and common radius |rho_a|^(1/2), glued by the Mobius
maps

    gamma_a(z) = w_{-a} + rho_a / (z - w_a),      a = 1..g.

The configuration is admissible when every pair of circles is disjoint,

    |w_a - w_b| > |rho_a|^(1/2) + |rho_b|^(1/2)   for all signed a != b,

with rho_{-a} := rho_a.  Equivalent data per handle: the fixed points
W_a (repelling), W_{-a} (attracting) and multiplier q_a, 0 < |q_a| < 1,
related by

    w_a   = (W_a - q_a W_{-a}) / (1 - q_a),
    rho_a = -q_a (W_{-a} - W_a)^2 / (1 - q_a)^2
          = -q_a (w_{-a} - w_a)^2 / (1 + q_a)^2.

All objects here are immutable and hashable so they can key caches.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "SchottkyParams",
    "ValidationReport",
    "HandleData",
    "GroupElement",
    "MobiusMap",
    "SchottkyError",
    "validate",
    "derive_handle_data",
    "generator",
    "enumerate_group",
    "group_matrix_stack",
    "shell_count",
    "mobius_transform",
]


class SchottkyError(ValueError):
    """Raised for inadmissible sewing data or disallowed transformations."""


@dataclass(frozen=True)
class SchottkyParams:
    """The 3g complex sewing parameters (w_a, w_{-a}, rho_a), a = 1..g."""

    genus: int
    handles: tuple[tuple[complex, complex, complex], ...]

    def __post_init__(self):
        if self.genus < 1 or len(self.handles) != self.genus:
            raise SchottkyError("need one (w, w_neg, rho) triple per handle")
        for w, wn, rho in self.handles:
            if rho == 0:
                raise SchottkyError("rho must be nonzero")
            for v in (w, wn, rho):
                if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                    raise SchottkyError("parameters must be finite")

    # -- signed-index accessors (a in +-1..+-g) ------------------------------
    def w(self, a: int) -> complex:
        h = self.handles[abs(a) - 1]
        return h[0] if a > 0 else h[1]

    def rho(self, a: int) -> complex:
        return self.handles[abs(a) - 1][2]

    def radius(self, a: int) -> float:
        return abs(self.rho(a)) ** 0.5

    @property
    def signed_indices(self) -> tuple[int, ...]:
        g = self.genus
        return tuple(range(1, g + 1)) + tuple(range(-1, -g - 1, -1))

    def centers(self) -> np.ndarray:
        return np.array([self.w(a) for a in self.signed_indices])

    def radii(self) -> np.ndarray:
        return np.array([self.radius(a) for a in self.signed_indices])

    def diameter(self) -> float:
        """Configuration scale: largest distance between circle centres."""
        c = self.centers()
        return float(np.abs(c[:, None] - c[None, :]).max())

    # -- JSON wire format: complex numbers as [re, im] pairs ------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "SchottkyParams":
        handles = tuple(
            (_cx(h["w"]), _cx(h["w_neg"]), _cx(h["rho"])) for h in doc["handles"]
        )
        return cls(genus=int(doc["genus"]), handles=handles)

    @classmethod
    def from_json(cls, text: str) -> "SchottkyParams":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "genus": self.genus,
            "handles": [
                {"w": _pair(w), "w_neg": _pair(wn), "rho": _pair(r)}
                for w, wn, r in self.handles
            ],
        }


def _cx(pair: Sequence[float]) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[tuple[int, int, float], ...]  # (a, b, margin), margin < 0


def validate(params: SchottkyParams) -> ValidationReport:
    """Check the strict circle-separation inequality for every signed pair.

    The margin reported for (a, b) is |w_a - w_b| - r_a - r_b; a pair
    violates iff its margin is <= 0 (circles touch or overlap) and all
    pairs must also have distinct centres.
    """
    idx = params.signed_indices
    bad = []
    for i, a in enumerate(idx):
        for b in idx[i + 1 :]:
            margin = abs(params.w(a) - params.w(b)) - params.radius(a) - params.radius(b)
            if margin <= 0:
                bad.append((a, b, margin))
    return ValidationReport(ok=not bad, violations=tuple(bad))


@dataclass(frozen=True)
class HandleData:
    """Fixed points and multiplier equivalent to one (w, w_neg, rho) triple."""

    q: complex
    W: complex
    W_neg: complex


def _multiplier_roots(w: complex, wn: complex, rho: complex) -> tuple[complex, complex]:
    # -q (wn - w)^2 / (1 + q)^2 = rho resolves to k q^2 + (2k + 1) q + k = 0
    # with k = rho / (wn - w)^2; the two roots multiply to 1.  Take the
    # branch of the discriminant root that avoids cancellation against
    # -(2k+1), then recover the small root from the product identity.
    if w == wn:
        raise SchottkyError("degenerate handle: w == w_neg")
    k = rho / (wn - w) ** 2
    b = 2 * k + 1
    disc = cmath.sqrt(b * b - 4 * k * k)
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    big = -(b + disc) / (2 * k)
    return 1.0 / big, big


def derive_handle_data(params: SchottkyParams) -> list[HandleData]:
    """Solve each handle for (q, W, W_neg), taking the root with |q| < 1."""
    out = []
    for w, wn, rho in params.handles:
        r1, r2 = _multiplier_roots(w, wn, rho)
        q = r1 if abs(r1) < abs(r2) else r2
        # snap a roundoff-level imaginary part to the canonical +0 side:
        # log q sits on its branch cut for real configurations and the
        # handle-path marking must not flip with the last bits
        if abs(q.imag) < 1e-13 * abs(q.real):
            q = complex(q.real, 0.0)
        if abs(abs(q) - 1.0) < 1e-10:
            raise SchottkyError("multiplier on the unit circle: sewing boundary")
        if not abs(q) < 1.0:
            raise SchottkyError("no multiplier with |q| < 1: outside sewing domain")
        # invert w = (W - q W_neg)/(1-q), w_neg = (W_neg - q W)/(1-q)
        W = (w + q * wn) / (1 + q)
        W_neg = (wn + q * w) / (1 + q)
        out.append(HandleData(q=q, W=W, W_neg=W_neg))
    return out


@dataclass(frozen=True)
class GroupElement:
    """A reduced word in the generators with its unit-determinant matrix."""

    word: tuple[int, ...]
    matrix: np.ndarray  # (2, 2) complex, det = 1

    def apply(self, z: complex) -> complex:
        (a, b), (c, d) = self.matrix
        return (a * z + b) / (c * z + d)

    def derivative(self, z: complex) -> complex:
        c, d = self.matrix[1]
        return 1.0 / (c * z + d) ** 2


def _generator_matrix(params: SchottkyParams, a: int) -> np.ndarray:
    """Unit-determinant matrix of gamma_a (a > 0) or gamma_a^{-1} (a < 0)."""
    w, wn, rho = params.w(abs(a)), params.w(-abs(a)), params.rho(a)
    m = np.array([[wn, rho - w * wn], [1.0, -w]], dtype=complex)
    m /= cmath.sqrt(-rho)
    if a < 0:
        m = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    m.setflags(write=False)
    return m


def generator(params: SchottkyParams, a: int) -> GroupElement:
    if a == 0 or abs(a) > params.genus:
        raise SchottkyError(f"generator index {a} out of range")
    return GroupElement(word=(a,), matrix=_generator_matrix(params, a))


def shell_count(genus: int, k: int) -> int:
    """Number of reduced words of length k in the free group on g letters."""
    if k == 0:
        return 1
    return 2 * genus * (2 * genus - 1) ** (k - 1)


def enumerate_group(params: SchottkyParams, max_word_length: int) -> Iterator[GroupElement]:
    """Yield the identity, then all reduced words shell by shell.

    Exactly 1 + sum_{k<=L} 2g(2g-1)^(k-1) elements are produced.  Matrices
    are built by right-multiplication along the word, so each shell costs
    one matrix product per element.
    """
    if max_word_length < 0:
        raise SchottkyError("word length must be >= 0")
    gens = {a: _generator_matrix(params, a) for a in params.signed_indices}
    ident = np.eye(2, dtype=complex)
    ident.setflags(write=False)
    yield GroupElement(word=(), matrix=ident)
    shell = [((), ident)]
    for _ in range(max_word_length):
        nxt = []
        for word, mat in shell:
            last = word[-1] if word else 0
            for a in params.signed_indices:
                if a == -last:
                    continue
                m = mat @ gens[a]
                m.setflags(write=False)
                el = GroupElement(word=word + (a,), matrix=m)
                nxt.append((el.word, el.matrix))
                yield el
        shell = nxt


@lru_cache(maxsize=64)
def group_matrix_stack(
    params: SchottkyParams, max_word_length: int
) -> tuple[np.ndarray, np.ndarray]:
    """All group matrices up to the given word length, flattened for kernels.

    Returns (mats, offsets): mats has one row (A, B, C, D) per element,
    identity first, grouped in shells of increasing word length; offsets
    (n_shells + 1,) delimits the shells.
    """
    rows = []
    offsets = [0]
    length = 0
    for el in enumerate_group(params, max_word_length):
        if len(el.word) != length:
            offsets.append(len(rows))
            length = len(el.word)
        rows.append(el.matrix.reshape(4))
    offsets.append(len(rows))
    mats = np.array(rows, dtype=complex)
    mats.setflags(write=False)
    off = np.array(offsets, dtype=np.int64)
    off.setflags(write=False)
    return mats, off


@dataclass(frozen=True)
class MobiusMap:
    """A global SL2(C) map; the matrix is normalised to det = 1 on build."""

    A: complex
    B: complex
    C: complex
    D: complex

    def __post_init__(self):
        det = self.A * self.D - self.B * self.C
        if det == 0:
            raise SchottkyError("singular Mobius matrix")
        s = cmath.sqrt(det)
        object.__setattr__(self, "A", self.A / s)
        object.__setattr__(self, "B", self.B / s)
        object.__setattr__(self, "C", self.C / s)
        object.__setattr__(self, "D", self.D / s)

    def apply(self, z: complex) -> complex:
        return (self.A * z + self.B) / (self.C * z + self.D)

    def derivative(self, z: complex) -> complex:
        return 1.0 / (self.C * z + self.D) ** 2

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap(
            self.A * other.A + self.B * other.C,
            self.A * other.B + self.B * other.D,
            self.C * other.A + self.D * other.C,
            self.C * other.B + self.D * other.D,
        )

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)


def mobius_transform(params: SchottkyParams, sigma: MobiusMap) -> SchottkyParams:
    """Push the sewing data forward through a global Mobius map.

    Per handle the pair (w_a, rho_a) maps to

        w_a   -> ((A w_a + B)(C w_{-a} + D) - rho_a A C) / den,
        rho_a -> rho_a / den^2,
        den   := (C w_a + D)(C w_{-a} + D) - rho_a C^2,

    and symmetrically for w_{-a} (same denominator).  The image presents
    the same surface via the conjugated group sigma Gamma sigma^{-1}.
    """
    A, B, C, D = sigma.A, sigma.B, sigma.C, sigma.D
    handles = []
    for w, wn, rho in params.handles:
        den = (C * w + D) * (C * wn + D) - rho * C * C
        if abs(den) < 1e-14 * max(1.0, abs(w), abs(wn)):
            raise SchottkyError("Mobius image at infinity for this configuration")
        w2 = ((A * w + B) * (C * wn + D) - rho * A * C) / den
        wn2 = ((A * wn + B) * (C * w + D) - rho * A * C) / den
        rho2 = rho / den**2
        handles.append((w2, wn2, rho2))
    return SchottkyParams(genus=params.genus, handles=tuple(handles))
