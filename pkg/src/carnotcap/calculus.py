"""Left/right-invariant derivatives of scalar fields along group flows.

Scalar fields are callables mapping coordinate arrays (..., N) -> (...).
The generic path differentiates along one-parameter flows with Richardson-
extrapolated central differences; for the Heisenberg group a second path
expresses the vector fields in coordinates (X = dx - (y/2) dt,
Y = dy + (x/2) dt) and differentiates coordinate-wise.  Both paths agree on
smooth fields and serve as mutual cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import HEISENBERG, GroupSpec

__all__ = [
    "OperatorWord",
    "apply_field",
    "horizontal_gradient",
    "sub_laplacian",
    "FieldEvaluationError",
]


class FieldEvaluationError(ValueError):
    """Field returned non-finite values where a derivative was requested."""


@dataclass(frozen=True)
class OperatorWord:
    """A composition X_{a_1} ... X_{a_l} of first-layer basis fields.

    Letters are 1-based indices into the horizontal layer; the leftmost
    letter is applied last.  ``side`` selects left- or right-invariant
    fields.  The homogeneity degree of the operator equals len(letters).
    """

    letters: tuple
    side: str = "left"

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")

    def validate(self, spec: GroupSpec):
        if any(not 1 <= a <= spec.m1 for a in self.letters):
            raise ValueError(
                f"word letters must lie in 1..{spec.m1}, got {self.letters}")

    @property
    def degree(self) -> int:
        return len(self.letters)


def _basis_shift(spec: GroupSpec, letter: int, h: float) -> np.ndarray:
    e = np.zeros(spec.N)
    e[letter - 1] = h
    return e


def _flow_derivative(f, letter, side, p, spec, h):
    """Richardson-extrapolated central difference along the flow of e_letter."""

    def diff(step):
        shift = _basis_shift(spec, letter, step)
        if side == "left":
            hi = f(spec.multiply(p, shift))
            lo = f(spec.multiply(p, -shift))
        else:
            hi = f(spec.multiply(shift, p))
            lo = f(spec.multiply(-shift, p))
        return (hi - lo) / (2.0 * step)

    d1 = diff(h)
    d2 = diff(h / 2.0)
    out = (4.0 * d2 - d1) / 3.0
    if not np.all(np.isfinite(out)):
        raise FieldEvaluationError("field is not finite near the base point")
    return out


def _coord_partial(f, p, axis, h):
    e = np.zeros(p.shape[-1])
    e[axis] = 1.0

    def diff(step):
        return (f(p + step * e) - f(p - step * e)) / (2.0 * step)

    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0


def _coord_apply_letter(f, letter, side, p, h):
    """Heisenberg coordinate expression of X_i / right-invariant variant."""
    x, y = p[..., 0], p[..., 1]
    sgn = -1.0 if side == "left" else 1.0
    if letter == 1:
        return _coord_partial(f, p, 0, h) + sgn * (y / 2.0) * _coord_partial(f, p, 2, h)
    return _coord_partial(f, p, 1, h) - sgn * (x / 2.0) * _coord_partial(f, p, 2, h)


def _base_step(p) -> float:
    return 1e-4 * (1.0 + float(np.max(np.abs(p), initial=0.0)))


def apply_field(f, word: OperatorWord, p, spec: GroupSpec = HEISENBERG,
                method: str = "flow", h: float | None = None):
    """Evaluate (X_w f)(p) by nested differentiation, leftmost letter last."""
    word.validate(spec)
    if word.degree < 1:
        raise ValueError("operator word must contain at least one letter")
    p = np.asarray(p, dtype=float)
    if h is None:
        h = _base_step(p)
    if method == "coord" and spec is not HEISENBERG and spec.N != 3:
        raise ValueError("coordinate-expression path only ships for Heisenberg")

    def rec(letters, q):
        if len(letters) == 1:
            if method == "flow":
                return _flow_derivative(f, letters[0], word.side, q, spec, h)
            out = _coord_apply_letter(f, letters[0], word.side, q, h)
            if not np.all(np.isfinite(out)):
                raise FieldEvaluationError("field is not finite near the base point")
            return out
        inner = lambda r: rec(letters[1:], r)  # noqa: E731
        if method == "flow":
            return _flow_derivative(inner, letters[0], word.side, q, spec, h)
        return _coord_apply_letter(inner, letters[0], word.side, q, h)

    return rec(word.letters, p)


def horizontal_gradient(f, p, spec: GroupSpec = HEISENBERG, method: str = "flow",
                        h: float | None = None) -> np.ndarray:
    """(X_1 f, ..., X_m1 f)(p), stacked on the trailing axis."""
    comps = [apply_field(f, OperatorWord((i,)), p, spec, method=method, h=h)
             for i in range(1, spec.m1 + 1)]
    return np.stack(comps, axis=-1)


def sub_laplacian(f, p, spec: GroupSpec = HEISENBERG, method: str = "flow",
                  h: float | None = None):
    """(sum_i X_i^2 f)(p).

    method "coord" uses the expanded Heisenberg stencil
    L = dxx + dyy - y dxt + x dyt + (x^2+y^2)/4 dtt, which needs one less
    nesting level than the flow path.
    """
    p = np.asarray(p, dtype=float)
    if h is None:
        h = _base_step(p)
    if method == "coord":
        if spec.N != 3:
            raise ValueError("coordinate-expression path only ships for Heisenberg")
        return _heisenberg_laplacian_stencil(f, p, h)
    total = None
    for i in range(1, spec.m1 + 1):
        term = apply_field(f, OperatorWord((i, i)), p, spec, method=method, h=h)
        total = term if total is None else total + term
    return total


def _second_partial(f, p, axis, h):
    e = np.zeros(3)
    e[axis] = 1.0

    def diff(step):
        return (f(p + step * e) - 2.0 * f(p) + f(p - step * e)) / (step * step)

    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0


def _mixed_partial(f, p, ax1, ax2, h):
    e1 = np.zeros(3)
    e1[ax1] = 1.0
    e2 = np.zeros(3)
    e2[ax2] = 1.0

    def diff(step):
        return (f(p + step * (e1 + e2)) - f(p + step * (e1 - e2))
                - f(p + step * (e2 - e1)) + f(p - step * (e1 + e2))) / (4.0 * step * step)

    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0


def _heisenberg_laplacian_stencil(f, p, h):
    x, y = p[..., 0], p[..., 1]
    out = (_second_partial(f, p, 0, h) + _second_partial(f, p, 1, h)
           - y * _mixed_partial(f, p, 0, 2, h)
           + x * _mixed_partial(f, p, 1, 2, h)
           + 0.25 * (x * x + y * y) * _second_partial(f, p, 2, h))
    if not np.all(np.isfinite(out)):
        raise FieldEvaluationError("field is not finite near the base point")
    return out
