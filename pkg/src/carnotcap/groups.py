"""Stratified nilpotent group arithmetic in exponential coordinates.

A group is presented by its layer dimensions and the Lie brackets of basis
elements (rational structure constants).  Products are evaluated with the
Baker-Campbell-Hausdorff series, which terminates and is exact for nilpotent
algebras; steps 1-3 are supported.  The first Heisenberg group is shipped as
the default instantiation together with fast closed-form array operations.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

__all__ = [
    "GroupSpec",
    "heisenberg_spec",
    "HEISENBERG",
    "hmul",
    "hinv",
    "hdilate",
    "check_points",
]


class GroupSpecError(ValueError):
    """Invalid group presentation or mismatched operands."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    raise GroupSpecError(f"structure constant must be rational, got {value!r}")


class GroupSpec:
    """A stratified Lie group presentation.

    Parameters
    ----------
    layer_dims : sequence of positive ints, dim v_1 ... dim v_s.
    brackets : mapping {(i, j): {k: Fraction}} on 1-based basis indices with
        i < j; [e_i, e_j] = sum_k c_k e_k.  Missing pairs bracket to zero.
    """

    def __init__(self, layer_dims, brackets):
        layer_dims = tuple(int(d) for d in layer_dims)
        if not layer_dims or any(d <= 0 for d in layer_dims):
            raise GroupSpecError("layer dimensions must be positive")
        self.layer_dims = layer_dims
        self.step = len(layer_dims)
        self.N = sum(layer_dims)
        self.Q = sum((i + 1) * d for i, d in enumerate(layer_dims))
        self.m1 = layer_dims[0]
        # weights[j] = layer index (1-based) of coordinate j
        weights = []
        for i, d in enumerate(layer_dims):
            weights.extend([i + 1] * d)
        self.weights = np.array(weights, dtype=float)

        self._brackets = {}
        for (i, j), out in brackets.items():
            if not (1 <= i < j <= self.N):
                raise GroupSpecError(f"bracket indices ({i},{j}) out of range")
            cleaned = {int(k): _as_fraction(c) for k, c in out.items() if _as_fraction(c) != 0}
            for k in cleaned:
                if not (1 <= k <= self.N):
                    raise GroupSpecError(f"bracket output index {k} out of range")
            if cleaned:
                self._brackets[(i, j)] = cleaned
        # sparse float view: list of (i0, j0, k0, coeff) with 0-based indices,
        # fixed order so float evaluation is reproducible
        entries = []
        for (i, j), out in sorted(self._brackets.items()):
            for k, c in sorted(out.items()):
                entries.append((i - 1, j - 1, k - 1, float(c)))
                entries.append((j - 1, i - 1, k - 1, -float(c)))
        self._bracket_entries = entries

        self._check_stratification()
        self._check_jacobi()

    # -- presentation checks ------------------------------------------------

    def layer_of(self, idx0: int) -> int:
        """Layer (1-based) of the 0-based coordinate index."""
        return int(self.weights[idx0])

    def _bracket_exact(self, i: int, j: int) -> dict:
        """[e_i, e_j] as {k: Fraction}, 1-based."""
        if i == j:
            return {}
        if i < j:
            return dict(self._brackets.get((i, j), {}))
        return {k: -c for k, c in self._brackets.get((j, i), {}).items()}

    def _check_stratification(self):
        for (i, j), out in self._brackets.items():
            li, lj = self.layer_of(i - 1), self.layer_of(j - 1)
            target = li + lj
            if target > self.step:
                raise GroupSpecError(
                    f"[e{i}, e{j}] must vanish (layers {li}+{lj} exceed step)")
            for k in out:
                if self.layer_of(k - 1) != target:
                    raise GroupSpecError(
                        f"[e{i}, e{j}] leaks outside layer {target}")

    def _check_jacobi(self):
        n = self.N
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                for c in range(b + 1, n + 1):
                    acc = {}
                    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                        inner = self._bracket_exact(y, z)
                        for k, coef in inner.items():
                            for m, coef2 in self._bracket_exact(x, k).items():
                                acc[m] = acc.get(m, Fraction(0)) + coef * coef2
                    if any(v != 0 for v in acc.values()):
                        raise GroupSpecError(
                            f"Jacobi identity fails on basis triple ({a},{b},{c})")

    # -- group operations ----------------------------------------------------

    def _validate(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.N:
            raise GroupSpecError(
                f"point has {p.shape[-1]} coordinates, spec needs {self.N}")
        return p

    def bracket(self, a, b) -> np.ndarray:
        """[a, b] evaluated on coordinate vectors (float, fixed term order)."""
        a = self._validate(a)
        b = self._validate(b)
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=float)
        for i0, j0, k0, coef in self._bracket_entries:
            out[..., k0] += coef * a[..., i0] * b[..., j0]
        return out

    def multiply(self, p, q) -> np.ndarray:
        """Group product via the BCH series (exact for step <= 3)."""
        p = self._validate(p)
        q = self._validate(q)
        if self.step > 3:
            raise NotImplementedError("BCH product implemented for step <= 3")
        out = p + q
        if self.step >= 2:
            c = self.bracket(p, q)
            out = out + 0.5 * c
            if self.step >= 3:
                out = out + (self.bracket(p, c) + self.bracket(q, self.bracket(q, p))) / 12.0
        return out

    def inverse(self, p) -> np.ndarray:
        """Exponential coordinates of the first kind: p^-1 = -p."""
        return -self._validate(p)

    def dilate(self, t: float, p) -> np.ndarray:
        """Anisotropic dilation: coordinate of layer i scales by t^i."""
        if t <= 0:
            raise GroupSpecError("dilation parameter must be positive")
        return self._validate(p) * (float(t) ** self.weights)

    def identity(self) -> np.ndarray:
        return np.zeros(self.N)

    # -- serialization --------------------------------------------------------

    @classmethod
    def from_json(cls, doc) -> "GroupSpec":
        """Load from {"layers": [...], "brackets": [{"i","j","out":[{"k","c"}]}]}.

        Coefficients are strings parsed as exact rationals ("1", "1/2", "0.5").
        """
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        brackets = {}
        for entry in doc.get("brackets", []):
            key = (int(entry["i"]), int(entry["j"]))
            out = {int(term["k"]): _as_fraction(term["c"]) for term in entry["out"]}
            brackets[key] = out
        return cls(doc["layers"], brackets)

    @classmethod
    def from_file(cls, path) -> "GroupSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __repr__(self):
        return f"GroupSpec(layers={list(self.layer_dims)}, Q={self.Q})"


def heisenberg_spec() -> GroupSpec:
    """The first Heisenberg group: layers (2, 1), [e1, e2] = e3."""
    return GroupSpec((2, 1), {(1, 2): {3: Fraction(1)}})


HEISENBERG = heisenberg_spec()


# -- fast closed-form Heisenberg operations on (..., 3) arrays ----------------

def check_points(p) -> np.ndarray:
    """Validate Heisenberg coordinates: float array with trailing axis 3."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise GroupSpecError("Heisenberg points need 3 coordinates")
    return p


def hmul(p, q) -> np.ndarray:
    """Heisenberg product (x1+x2, y1+y2, t1+t2 + (x1 y2 - y1 x2)/2)."""
    p = check_points(p)
    q = check_points(q)
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=float)
    out[..., 0] = p[..., 0] + q[..., 0]
    out[..., 1] = p[..., 1] + q[..., 1]
    out[..., 2] = (p[..., 2] + q[..., 2]) + 0.5 * (
        p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return out


def hinv(p) -> np.ndarray:
    return -check_points(p)


def hdilate(t, p) -> np.ndarray:
    """delta_t on Heisenberg coordinates: (t x, t y, t^2 s)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise GroupSpecError("dilation parameter must be positive")
    p = check_points(p)
    out = np.empty(np.broadcast_shapes(p.shape, t[..., None].shape), dtype=float)
    out[..., 0] = t * p[..., 0]
    out[..., 1] = t * p[..., 1]
    out[..., 2] = (t * t) * p[..., 2]
    return out
