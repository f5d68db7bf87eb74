"""Tagged values of meromorphic forms.

A FormValue is the stripped coefficient of a form together with its tuple
of weights, one per point argument: omega(x, y) carries (1, 1), the
projective connection (2,), the weight-(N, 1-N) quasiform (N, 1-N).
Addition insists on equal weights; multiplication of forms in the same
variables adds weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number


@dataclass(frozen=True)
class FormValue:
    value: complex
    weights: tuple[int, ...]

    def __add__(self, other: "FormValue") -> "FormValue":
        if not isinstance(other, FormValue):
            return NotImplemented
        if self.weights != other.weights:
            raise ValueError(f"weight mismatch: {self.weights} vs {other.weights}")
        return FormValue(self.value + other.value, self.weights)

    def __sub__(self, other: "FormValue") -> "FormValue":
        if not isinstance(other, FormValue):
            return NotImplemented
        if self.weights != other.weights:
            raise ValueError(f"weight mismatch: {self.weights} vs {other.weights}")
        return FormValue(self.value - other.value, self.weights)

    def __mul__(self, other):
        if isinstance(other, FormValue):
            if len(self.weights) != len(other.weights):
                raise ValueError("can only multiply forms in the same variables")
            w = tuple(a + b for a, b in zip(self.weights, other.weights))
            return FormValue(self.value * other.value, w)
        if isinstance(other, Number):
            return FormValue(self.value * other, self.weights)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self) -> "FormValue":
        return FormValue(-self.value, self.weights)

    def __complex__(self) -> complex:
        return complex(self.value)
