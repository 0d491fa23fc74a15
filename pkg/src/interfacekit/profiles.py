"""Coefficient profiles with prescribed spatial asymptotics, and the bulk
systems they induce at infinity.

Each profile is a bounded function ``Z^l -> M_N(C)`` tagged with one of the
catalogued asymptotics families:

* ``compact``      -- finitely supported,
* ``domain_wall``  -- 1D, limits at both ends of the line,
* ``cartesian``    -- limits along every coordinate half-axis (recursive),
* ``radial``       -- a continuous limit function on the sphere of directions,
* ``cone``         -- supported near finitely many disjoint spherical caps,
* ``vanishing_oscillation`` -- translation differences vanish at infinity,

plus ``constant`` profiles, which belong to the common unital core of every
family and therefore mix with all of them.  Compactly supported profiles also
mix with everything (they die at infinity).

Every profile carries a *decay certificate*: the declared envelope is sampled
at radii 10, 50 and 100 at construction time, so a profile object existing at
all certifies its own asymptotics.  Limits are not decidable from finitely
many samples; the certificate makes the assumption explicit and testable.

The bulk systems at infinity are extracted by :func:`quasi_orbits`: each
quasi-orbit of the boundary at infinity contributes either a translation
invariant operator (a constant symbol) or, for Cartesian faces, a circle of
lower-dimensional interface operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CertificationError, SectorError, VariantMixError
from .operators import InterfaceOperator, Lattice, as_shift, probe_sites

CERT_RADII = (10, 50, 100)
CERT_SLACK = 1e-9


def opnorm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.atleast_2d(m), 2))


def _unit(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    return x / n if n > 0 else np.eye(len(x))[0]


def _angle_between(u, v) -> float:
    c = float(np.clip(np.dot(_unit(u), _unit(v)), -1.0, 1.0))
    return math.acos(c)


class CoefficientProfile:
    """Base class; concrete variants implement the closure operations."""

    variant = "abstract"

    def __init__(self, dimension: int, fiber_dim: int):
        self.dimension = int(dimension)
        self.fiber_dim = int(fiber_dim)

    # -- evaluation ----------------------------------------------------

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.stack([self.evaluate(p) for p in np.atleast_2d(points)])

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    # -- norms -----------------------------------------------------------

    def data_norms(self) -> list:
        return []

    def measured_sup(self, probes: np.ndarray) -> float:
        vals = self.evaluate_many(probes)
        m = float(np.max(np.linalg.norm(vals, ord=2, axis=(1, 2)))) if len(vals) else 0.0
        return max([m] + [float(v) for v in self.data_norms()])

    def sup_bound(self) -> float:
        if not hasattr(self, "_sup_bound"):
            self._sup_bound = self.measured_sup(probe_sites(self.dimension))
        return self._sup_bound

    # -- algebra closure ---------------------------------------------------

    def translate(self, g) -> "CoefficientProfile":
        raise NotImplementedError

    def map_values(self, fn, fiber_dim: int | None = None,
                   norm_scale: float = 1.0) -> "CoefficientProfile":
        """Apply a pointwise matrix map to all values and limit data."""
        raise NotImplementedError

    def htranspose(self) -> "CoefficientProfile":
        return self.map_values(lambda m: m.conj().T)

    def scale(self, z: complex) -> "CoefficientProfile":
        return self.map_values(lambda m: z * m, norm_scale=abs(z))

    def matmul_left(self, c: np.ndarray) -> "CoefficientProfile":
        return self.map_values(lambda m: c @ m, norm_scale=opnorm(c))

    def matmul_right(self, c: np.ndarray) -> "CoefficientProfile":
        return self.map_values(lambda m: m @ c, norm_scale=opnorm(c))

    def add(self, other: "CoefficientProfile") -> "CoefficientProfile":
        if type(other) is type(self):
            return self._add_same(other)
        if isinstance(other, ConstantProfile):
            out = self.absorb_constant(other.value)
            if other.compact:
                out = out.absorb_compact(CompactProfile(
                    other.compact, self.dimension, self.fiber_dim))
            return out
        if isinstance(self, ConstantProfile):
            out = other.absorb_constant(self.value)
            if self.compact:
                out = out.absorb_compact(CompactProfile(
                    self.compact, self.dimension, self.fiber_dim))
            return out
        if isinstance(other, CompactProfile):
            return self.absorb_compact(other)
        if isinstance(self, CompactProfile):
            return other.absorb_compact(self)
        raise VariantMixError(
            f"cannot add {self.variant} and {other.variant} profiles"
        )

    def product(self, other: "CoefficientProfile", shift) -> "CoefficientProfile":
        """Pointwise ``x -> self(x) @ other(x - shift)``."""
        shift = as_shift(shift, self.dimension)
        if isinstance(other, CompactProfile):
            support = {}
            for k, v in other.support.items():
                key = tuple(a + b for a, b in zip(k, shift))
                support[key] = self.evaluate(key) @ v
            return CompactProfile(support, self.dimension, self.fiber_dim)
        if isinstance(self, CompactProfile):
            support = {
                k: v @ other.evaluate(tuple(a - b for a, b in zip(k, shift)))
                for k, v in self.support.items()
            }
            return CompactProfile(support, self.dimension, self.fiber_dim)
        if isinstance(other, ConstantProfile):
            out = self.matmul_right(other.value)
            if other.compact:
                comp = {
                    tuple(a + b for a, b in zip(k, shift)): v
                    for k, v in other.compact.items()
                }
                out = out.absorb_compact(
                    CompactProfile(
                        {k: self.evaluate(k) @ v for k, v in comp.items()},
                        self.dimension, self.fiber_dim,
                    )
                )
            return out
        if isinstance(self, ConstantProfile):
            out = other.translate(shift).matmul_left(self.value)
            if self.compact:
                comp = {
                    k: v @ other.evaluate(tuple(a - b for a, b in zip(k, shift)))
                    for k, v in self.compact.items()
                }
                out = out.absorb_compact(
                    CompactProfile(comp, self.dimension, self.fiber_dim)
                )
            return out
        if type(other) is type(self):
            return self._product_same(other, shift)
        raise VariantMixError(
            f"cannot multiply {self.variant} and {other.variant} profiles"
        )

    # hooks overridden by the variants
    def _add_same(self, other):
        raise NotImplementedError

    def _product_same(self, other, shift):
        raise NotImplementedError

    def absorb_constant(self, c: np.ndarray):
        raise VariantMixError(
            f"constant offsets are not part of the {self.variant} family"
        )

    def absorb_compact(self, comp: "CompactProfile"):
        raise NotImplementedError


class ConstantProfile(CoefficientProfile):
    """Constant matrix value, optionally with a finitely supported correction."""

    variant = "constant"

    def __init__(self, value: np.ndarray, dimension: int, compact: dict | None = None):
        value = np.atleast_2d(np.asarray(value, dtype=complex))
        super().__init__(dimension, value.shape[0])
        self.value = value
        self.compact = dict(compact or {})

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        out = self.value
        if key in self.compact:
            out = out + self.compact[key]
        return out

    def data_norms(self):
        return [opnorm(self.value)] + [opnorm(v) for v in self.compact.values()]

    def translate(self, g):
        g = as_shift(g, self.dimension)
        comp = {
            tuple(a + b for a, b in zip(k, g)): v for k, v in self.compact.items()
        }
        return ConstantProfile(self.value, self.dimension, comp)

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        return ConstantProfile(
            fn(self.value), self.dimension,
            {k: fn(v) for k, v in self.compact.items()},
        )

    def _add_same(self, other):
        comp = dict(self.compact)
        for k, v in other.compact.items():
            comp[k] = comp[k] + v if k in comp else v
        return ConstantProfile(self.value + other.value, self.dimension, comp)

    def _product_same(self, other, shift):
        # cross terms between the constants and both compact pockets
        comp: dict = {}

        def bump(key, mat):
            comp[key] = comp[key] + mat if key in comp else mat

        for k, v in other.compact.items():
            bump(tuple(a + b for a, b in zip(k, shift)), self.value @ v)
        for k, v in self.compact.items():
            bump(k, v @ other.value)
        for k1, v1 in self.compact.items():
            k2 = tuple(a - b for a, b in zip(k1, shift))
            if k2 in other.compact:
                bump(k1, v1 @ other.compact[k2])
        return ConstantProfile(self.value @ other.value, self.dimension, comp)

    def absorb_constant(self, c):
        return ConstantProfile(self.value + c, self.dimension, self.compact)

    def absorb_compact(self, comp):
        merged = dict(self.compact)
        for k, v in comp.support.items():
            merged[k] = merged[k] + v if k in merged else v
        return ConstantProfile(self.value, self.dimension, merged)

    def limit_value(self) -> np.ndarray:
        return self.value


class CompactProfile(CoefficientProfile):
    """Finitely supported profile; absorbed by every asymptotics family."""

    variant = "compact"

    def __init__(self, support: dict, dimension: int, fiber_dim: int):
        super().__init__(dimension, fiber_dim)
        self.support = {
            as_shift(k, dimension): np.atleast_2d(np.asarray(v, dtype=complex))
            for k, v in support.items()
        }

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        if key in self.support:
            return self.support[key]
        return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)

    def data_norms(self):
        return [opnorm(v) for v in self.support.values()]

    def support_radius(self) -> int:
        if not self.support:
            return 0
        return max(max(abs(c) for c in k) for k in self.support)

    def translate(self, g):
        g = as_shift(g, self.dimension)
        return CompactProfile(
            {tuple(a + b for a, b in zip(k, g)): v for k, v in self.support.items()},
            self.dimension, self.fiber_dim,
        )

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        return CompactProfile(
            {k: fn(v) for k, v in self.support.items()},
            self.dimension, fiber_dim or self.fiber_dim,
        )

    def _add_same(self, other):
        support = dict(self.support)
        for k, v in other.support.items():
            support[k] = support[k] + v if k in support else v
        return CompactProfile(support, self.dimension, self.fiber_dim)

    def absorb_constant(self, c):
        return ConstantProfile(c, self.dimension, dict(self.support))

    def absorb_compact(self, comp):
        return self._add_same(comp)

    def limit_value(self) -> np.ndarray:
        return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)


def _wrap_add(f: Callable, extra: Callable) -> Callable:
    return lambda x: f(x) + extra(x)


def _env_add(e1: Callable, e2: Callable) -> Callable:
    return lambda r: e1(r) + e2(r)


def _env_product(env_f, sup_f, env_k, sup_k, shift_norm) -> Callable:
    return lambda r: env_f(r) * sup_k + sup_f * env_k(max(r - shift_norm, 1.0))


def _env_shift(env, shift_norm) -> Callable:
    return lambda r: env(max(r - shift_norm, 1.0))


def _env_scale(env, c) -> Callable:
    return lambda r: c * env(r)


class DomainWall1DProfile(CoefficientProfile):
    """1D profile with matrix limits at both ends of the line.

    ``transition`` is the full function ``Z -> M_N``; ``None`` means the sharp
    step (left value for x < 0, right value for x >= 0).  ``envelope`` bounds
    ``||f(+-R) - limit||``; it is sampled at R in {10, 50, 100} and a
    violation raises :class:`CertificationError`.
    """

    variant = "domain_wall"

    def __init__(self, left, right, transition: Callable | None = None,
                 envelope: Callable | None = None, fiber_dim: int | None = None,
                 _certify: bool = True):
        left = np.atleast_2d(np.asarray(left, dtype=complex))
        right = np.atleast_2d(np.asarray(right, dtype=complex))
        super().__init__(1, fiber_dim or left.shape[0])
        self.left = left
        self.right = right
        self.transition = transition
        self.envelope = envelope if envelope is not None else (lambda r: 0.0)
        if _certify:
            self._certify()

    def _certify(self):
        for r in CERT_RADII:
            for x, lim in (((-r,), self.left), ((r,), self.right)):
                dev = opnorm(self.evaluate(x) - lim)
                if dev > self.envelope(r) + CERT_SLACK:
                    raise CertificationError(
                        f"domain-wall profile violates its envelope at x={x}: "
                        f"deviation {dev:.3e} > {self.envelope(r):.3e}"
                    )

    def evaluate(self, x):
        key = as_shift(x, 1)
        if self.transition is None:
            return self.left if key[0] < 0 else self.right
        return np.atleast_2d(np.asarray(self.transition(key[0]), dtype=complex))

    def data_norms(self):
        return [opnorm(self.left), opnorm(self.right)]

    def translate(self, g):
        g = as_shift(g, 1)[0]
        trans = None
        if self.transition is not None:
            trans = lambda x, f=self.transition, g=g: f(x - g)
        elif g != 0:
            trans = lambda x, g=g: self.left if x - g < 0 else self.right
        return DomainWall1DProfile(
            self.left, self.right, trans, _env_shift(self.envelope, abs(g)),
            self.fiber_dim,
        )

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        trans = None
        if self.transition is not None:
            trans = lambda x, f=self.transition, fn=fn: fn(
                np.atleast_2d(np.asarray(f(x), dtype=complex)))
        return DomainWall1DProfile(
            fn(self.left), fn(self.right), trans,
            _env_scale(self.envelope, norm_scale),
            fiber_dim or self.fiber_dim,
        )

    def _add_same(self, other):
        trans = None
        if self.transition is not None or other.transition is not None:
            trans = lambda x, a=self, b=other: a.evaluate((x,)) + b.evaluate((x,))
        return DomainWall1DProfile(
            self.left + other.left, self.right + other.right, trans,
            _env_add(self.envelope, other.envelope), self.fiber_dim,
        )

    def _product_same(self, other, shift):
        s = shift[0]
        trans = None
        if self.transition is not None or other.transition is not None or s != 0:
            trans = lambda x, a=self, b=other, s=s: (
                a.evaluate((x,)) @ b.evaluate((x - s,))
            )
        env = _env_product(self.envelope, self.sup_bound(),
                           other.envelope, other.sup_bound(), abs(s))
        return DomainWall1DProfile(
            self.left @ other.left, self.right @ other.right, trans, env,
            self.fiber_dim,
        )

    def absorb_constant(self, c):
        trans = None
        if self.transition is not None:
            trans = lambda x, f=self.transition, c=c: (
                np.atleast_2d(np.asarray(f(x), dtype=complex)) + c)
        return DomainWall1DProfile(
            self.left + c, self.right + c, trans, self.envelope, self.fiber_dim,
        )

    def absorb_compact(self, comp):
        rad = comp.support_radius()
        trans = lambda x, a=self, b=comp: a.evaluate((x,)) + b.evaluate((x,))
        sup = max([opnorm(v) for v in comp.support.values()] + [0.0])
        env = lambda r, e=self.envelope, rad=rad, sup=sup: (
            e(r) + (sup if r <= rad else 0.0))
        return DomainWall1DProfile(
            self.left, self.right, trans, env, self.fiber_dim,
        )

    def limits(self):
        return self.left, self.right


class CartesianProfile(CoefficientProfile):
    """Profile on ``Z^l`` with limits along every coordinate half-axis.

    ``faces`` maps ``(j, sign)`` (1-based coordinate, sign +-1) to an
    ``(l-1)``-dimensional profile in the remaining variables.
    """

    variant = "cartesian"

    def __init__(self, dimension: int, fiber_dim: int, bulk: Callable,
                 faces: dict, envelope: Callable, _certify: bool = True):
        if dimension < 2:
            raise ValueError("cartesian anisotropy needs dimension >= 2")
        super().__init__(dimension, fiber_dim)
        self.bulk = bulk
        self.faces = dict(faces)
        self.envelope = envelope
        for (j, s), prof in self.faces.items():
            if not (1 <= j <= dimension and s in (-1, 1)):
                raise ValueError(f"bad face key {(j, s)}")
            if prof.dimension != dimension - 1 or prof.fiber_dim != fiber_dim:
                raise VariantMixError("face profile has wrong dimensions")
        if set(self.faces) != {(j, s) for j in range(1, dimension + 1)
                               for s in (-1, 1)}:
            raise ValueError("faces must cover every (coordinate, sign) pair")
        if _certify:
            self._certify()

    @staticmethod
    def _drop(x, j):
        return tuple(c for i, c in enumerate(x) if i != j - 1)

    def _certify(self):
        perp_offsets = [-7, 0, 5]
        for (j, s), prof in self.faces.items():
            for r in CERT_RADII:
                for off in perp_offsets:
                    x = [off] * self.dimension
                    x[j - 1] = s * r
                    dev = opnorm(self.evaluate(tuple(x))
                                 - prof.evaluate(self._drop(x, j)))
                    if dev > self.envelope(r) + CERT_SLACK:
                        raise CertificationError(
                            f"cartesian profile violates its envelope on face "
                            f"{(j, s)} at {tuple(x)}: {dev:.3e}"
                        )

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        return np.atleast_2d(np.asarray(self.bulk(key), dtype=complex))

    def face_profile(self, j: int, sign: int) -> CoefficientProfile:
        return self.faces[(j, sign)]

    def translate(self, g):
        g = as_shift(g, self.dimension)
        bulk = lambda x, f=self.bulk, g=g: f(tuple(a - b for a, b in zip(x, g)))
        faces = {
            (j, s): prof.translate(self._drop(g, j))
            for (j, s), prof in self.faces.items()
        }
        return CartesianProfile(
            self.dimension, self.fiber_dim, bulk, faces,
            _env_shift(self.envelope, max(abs(c) for c in g) if g else 0),
        )

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        nf = fiber_dim or self.fiber_dim
        bulk = lambda x, f=self.bulk, fn=fn: fn(
            np.atleast_2d(np.asarray(f(x), dtype=complex)))
        faces = {
            k: prof.map_values(fn, nf, norm_scale) for k, prof in self.faces.items()
        }
        return CartesianProfile(self.dimension, nf, bulk, faces,
                                _env_scale(self.envelope, norm_scale))

    def _add_same(self, other):
        bulk = lambda x, a=self, b=other: a.evaluate(x) + b.evaluate(x)
        faces = {k: p.add(other.faces[k]) for k, p in self.faces.items()}
        return CartesianProfile(self.dimension, self.fiber_dim, bulk, faces,
                                _env_add(self.envelope, other.envelope))

    def _product_same(self, other, shift):
        bulk = lambda x, a=self, b=other, s=shift: (
            a.evaluate(x) @ b.evaluate(tuple(p - q for p, q in zip(x, s))))
        faces = {
            (j, sgn): p.product(other.faces[(j, sgn)], self._drop(shift, j))
            for (j, sgn), p in self.faces.items()
        }
        env = _env_product(self.envelope, self.sup_bound(), other.envelope,
                           other.sup_bound(), max(abs(c) for c in shift))
        return CartesianProfile(self.dimension, self.fiber_dim, bulk, faces, env)

    def absorb_constant(self, c):
        bulk = lambda x, f=self.bulk, c=c: (
            np.atleast_2d(np.asarray(f(x), dtype=complex)) + c)
        faces = {k: p.absorb_constant(c) for k, p in self.faces.items()}
        return CartesianProfile(self.dimension, self.fiber_dim, bulk, faces,
                                self.envelope)

    def absorb_compact(self, comp):
        rad = comp.support_radius()
        sup = max([opnorm(v) for v in comp.support.values()] + [0.0])
        bulk = lambda x, a=self, b=comp: a.evaluate(x) + b.evaluate(x)
        env = lambda r, e=self.envelope, rad=rad, sup=sup: (
            e(r) + (sup if r <= rad else 0.0))
        return CartesianProfile(self.dimension, self.fiber_dim, bulk,
                                dict(self.faces), env)


class RadialProfile(CoefficientProfile):
    """Profile converging along rays to a continuous function on the sphere."""

    variant = "radial"

    def __init__(self, dimension: int, fiber_dim: int, sphere: Callable,
                 modulus: float, envelope: Callable,
                 func: Callable | None = None, _certify: bool = True):
        super().__init__(dimension, fiber_dim)
        self.sphere = sphere
        self.modulus = float(modulus)
        self.envelope = envelope
        # default realisation: exactly the directional limit away from 0
        self.func = func if func is not None else (
            lambda x: self._sphere_at(x))
        if _certify:
            self._certify()

    def _sphere_at(self, x):
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)
        return np.atleast_2d(np.asarray(self.sphere(_unit(x)), dtype=complex))

    def _certify(self):
        for r in CERT_RADII:
            for d in sphere_directions(self.dimension, 12):
                x = np.rint(r * d).astype(int)
                if not np.any(x):
                    continue
                dev = opnorm(self.evaluate(tuple(x)) - self._sphere_at(x))
                if dev > self.envelope(r) + CERT_SLACK:
                    raise CertificationError(
                        f"radial profile violates its envelope at {tuple(x)}: "
                        f"{dev:.3e}"
                    )

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        return np.atleast_2d(np.asarray(self.func(key), dtype=complex))

    def data_norms(self):
        return [opnorm(self._sphere_at(d))
                for d in sphere_directions(self.dimension, 12)]

    def sphere_value(self, omega) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.sphere(_unit(omega)), dtype=complex))

    def translate(self, g):
        g = as_shift(g, self.dimension)
        gn = max(abs(c) for c in g)
        func = lambda x, f=self.func, g=g: f(tuple(a - b for a, b in zip(x, g)))
        env = lambda r, e=self.envelope, gn=gn, m=self.modulus: (
            e(max(r - gn, 1.0)) + m * 2.0 * gn / max(r, 1.0))
        return RadialProfile(self.dimension, self.fiber_dim, self.sphere,
                             self.modulus, env, func)

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        nf = fiber_dim or self.fiber_dim
        sphere = lambda w, s=self.sphere, fn=fn: fn(
            np.atleast_2d(np.asarray(s(w), dtype=complex)))
        func = lambda x, f=self.func, fn=fn: fn(
            np.atleast_2d(np.asarray(f(x), dtype=complex)))
        return RadialProfile(self.dimension, nf, sphere,
                             norm_scale * self.modulus,
                             _env_scale(self.envelope, norm_scale), func)

    def _add_same(self, other):
        sphere = lambda w, a=self, b=other: a.sphere_value(w) + b.sphere_value(w)
        func = lambda x, a=self, b=other: a.evaluate(x) + b.evaluate(x)
        return RadialProfile(self.dimension, self.fiber_dim, sphere,
                             self.modulus + other.modulus,
                             _env_add(self.envelope, other.envelope), func)

    def _product_same(self, other, shift):
        gn = max(abs(c) for c in shift)
        sphere = lambda w, a=self, b=other: a.sphere_value(w) @ b.sphere_value(w)
        func = lambda x, a=self, b=other, s=shift: (
            a.evaluate(x) @ b.evaluate(tuple(p - q for p, q in zip(x, s))))
        mod = self.modulus * other.sup_bound() + self.sup_bound() * other.modulus
        env = lambda r, a=self, b=other, gn=gn: (
            a.envelope(r) * b.sup_bound()
            + a.sup_bound() * (b.envelope(max(r - gn, 1.0))
                               + b.modulus * 2.0 * gn / max(r, 1.0)))
        return RadialProfile(self.dimension, self.fiber_dim, sphere, mod, env, func)

    def absorb_constant(self, c):
        sphere = lambda w, s=self.sphere, c=c: (
            np.atleast_2d(np.asarray(s(w), dtype=complex)) + c)
        func = lambda x, f=self.func, c=c: (
            np.atleast_2d(np.asarray(f(x), dtype=complex)) + c)
        return RadialProfile(self.dimension, self.fiber_dim, sphere,
                             self.modulus, self.envelope, func)

    def absorb_compact(self, comp):
        rad = comp.support_radius()
        sup = max([opnorm(v) for v in comp.support.values()] + [0.0])
        func = lambda x, a=self, b=comp: a.evaluate(x) + b.evaluate(x)
        env = lambda r, e=self.envelope, rad=rad, sup=sup: (
            e(r) + (sup if r <= rad else 0.0))
        return RadialProfile(self.dimension, self.fiber_dim, self.sphere,
                             self.modulus, env, func)


@dataclass(frozen=True)
class Cap:
    """Closed spherical cap: all directions within ``angular_radius`` of
    ``center`` (angles in radians)."""

    center: tuple
    angular_radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        n = np.linalg.norm(c)
        if n == 0:
            raise ValueError("cap center cannot be the zero vector")
        object.__setattr__(self, "center", tuple(c / n))
        if not 0 < self.angular_radius < math.pi:
            raise ValueError("cap angular radius must lie in (0, pi)")

    def contains(self, omega) -> bool:
        return _angle_between(self.center, omega) <= self.angular_radius + 1e-12


def check_caps_disjoint(caps) -> None:
    for i, a in enumerate(caps):
        for b in caps[i + 1:]:
            sep = _angle_between(a.center, b.center)
            if sep <= a.angular_radius + b.angular_radius + 1e-9:
                raise SectorError(
                    f"caps around {a.center} and {b.center} are not disjoint "
                    f"(separation {sep:.3f} rad)"
                )


class ConeProfile(CoefficientProfile):
    """Profile asymptotically supported on finitely many disjoint closed caps.

    ``cap_values[j]`` is the limit function on cap ``j`` (a matrix or a
    callable on directions); the default realisation takes exactly that value
    along in-cap rays and zero elsewhere.
    """

    variant = "cone"

    def __init__(self, dimension: int, fiber_dim: int, caps: list,
                 cap_values: list, envelope: Callable,
                 func: Callable | None = None, _certify: bool = True):
        super().__init__(dimension, fiber_dim)
        if len(caps) != len(cap_values):
            raise ValueError("one value per cap required")
        check_caps_disjoint(caps)
        self.caps = list(caps)
        self.cap_values = [
            (v if callable(v) else
             (lambda w, m=np.atleast_2d(np.asarray(v, dtype=complex)): m))
            for v in cap_values
        ]
        self.envelope = envelope
        self.func = func if func is not None else (lambda x: self._limit_at(x))
        if _certify:
            self._certify()

    def _limit_at(self, x):
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)
        w = _unit(x)
        for cap, val in zip(self.caps, self.cap_values):
            if cap.contains(w):
                return np.atleast_2d(np.asarray(val(w), dtype=complex))
        return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)

    def _certify(self):
        dirs = [np.asarray(c.center) for c in self.caps]
        dirs += [d for d in sphere_directions(self.dimension, 12)
                 if all(_angle_between(d, c.center) > c.angular_radius + 0.1
                        for c in self.caps)]
        for r in CERT_RADII:
            for d in dirs:
                x = np.rint(r * np.asarray(d, dtype=float)).astype(int)
                if not np.any(x):
                    continue
                dev = opnorm(self.evaluate(tuple(x)) - self._limit_at(x))
                if dev > self.envelope(r) + CERT_SLACK:
                    raise CertificationError(
                        f"cone profile violates its envelope at {tuple(x)}"
                    )

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        return np.atleast_2d(np.asarray(self.func(key), dtype=complex))

    def data_norms(self):
        return [opnorm(val(np.asarray(cap.center)))
                for cap, val in zip(self.caps, self.cap_values)]

    def cap_value(self, j: int, omega) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.cap_values[j](_unit(omega)),
                                        dtype=complex))

    def directional_limit(self, omega):
        """Limit along the ray ``omega``; zero (flagged) outside every cap."""
        w = _unit(omega)
        for j, cap in enumerate(self.caps):
            if cap.contains(w):
                return self.cap_value(j, w), False
        return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex), True

    def _same_geometry(self, other) -> bool:
        return len(self.caps) == len(other.caps) and all(
            np.allclose(a.center, b.center) and
            abs(a.angular_radius - b.angular_radius) < 1e-12
            for a, b in zip(self.caps, other.caps)
        )

    def translate(self, g):
        g = as_shift(g, self.dimension)
        gn = max(abs(c) for c in g)
        func = lambda x, f=self.func, g=g: f(tuple(a - b for a, b in zip(x, g)))
        env = lambda r, e=self.envelope, gn=gn, s=self.sup_bound(): (
            e(max(r - gn, 1.0)) + s * 2.0 * gn / max(r, 1.0))
        return ConeProfile(self.dimension, self.fiber_dim, self.caps,
                           self.cap_values, env, func)

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        nf = fiber_dim or self.fiber_dim
        vals = [
            (lambda w, v=v, fn=fn: fn(np.atleast_2d(np.asarray(v(w), dtype=complex))))
            for v in self.cap_values
        ]
        func = lambda x, f=self.func, fn=fn: fn(
            np.atleast_2d(np.asarray(f(x), dtype=complex)))
        return ConeProfile(self.dimension, nf, self.caps, vals,
                           _env_scale(self.envelope, norm_scale), func)

    def _add_same(self, other):
        if not self._same_geometry(other):
            raise VariantMixError("cone profiles with different caps")
        vals = [
            (lambda w, a=a, b=b: np.atleast_2d(np.asarray(a(w), dtype=complex))
             + np.atleast_2d(np.asarray(b(w), dtype=complex)))
            for a, b in zip(self.cap_values, other.cap_values)
        ]
        func = lambda x, a=self, b=other: a.evaluate(x) + b.evaluate(x)
        return ConeProfile(self.dimension, self.fiber_dim, self.caps, vals,
                           _env_add(self.envelope, other.envelope), func)

    def _product_same(self, other, shift):
        if not self._same_geometry(other):
            raise VariantMixError("cone profiles with different caps")
        gn = max(abs(c) for c in shift)
        vals = [
            (lambda w, a=a, b=b: np.atleast_2d(np.asarray(a(w), dtype=complex))
             @ np.atleast_2d(np.asarray(b(w), dtype=complex)))
            for a, b in zip(self.cap_values, other.cap_values)
        ]
        func = lambda x, a=self, b=other, s=shift: (
            a.evaluate(x) @ b.evaluate(tuple(p - q for p, q in zip(x, s))))
        env = _env_product(self.envelope, self.sup_bound(), other.envelope,
                           other.sup_bound(), gn)
        return ConeProfile(self.dimension, self.fiber_dim, self.caps, vals,
                           env, func)

    def absorb_compact(self, comp):
        rad = comp.support_radius()
        sup = max([opnorm(v) for v in comp.support.values()] + [0.0])
        func = lambda x, a=self, b=comp: a.evaluate(x) + b.evaluate(x)
        env = lambda r, e=self.envelope, rad=rad, sup=sup: (
            e(r) + (sup if r <= rad else 0.0))
        return ConeProfile(self.dimension, self.fiber_dim, self.caps,
                           self.cap_values, env, func)


class VanishingOscillationProfile(CoefficientProfile):
    """Bounded profile whose translation differences vanish at infinity.

    The compactification of the lattice underlying this family has no
    constructive description, so the asymptotic range is user-supplied: the
    ``sampler`` list enumerates matrices claimed to cover the values at
    infinity; entry ``k`` of every profile of one operator refers to the same
    point at infinity.
    """

    variant = "vanishing_oscillation"

    def __init__(self, dimension: int, fiber_dim: int, func: Callable,
                 sampler: list, envelope: Callable, _certify: bool = True):
        super().__init__(dimension, fiber_dim)
        self.func = func
        self.sampler = [np.atleast_2d(np.asarray(h, dtype=complex))
                        for h in sampler]
        if not self.sampler:
            raise ValueError("asymptotic-range sampler must be non-empty")
        self.envelope = envelope
        if _certify:
            self._certify()

    def _certify(self):
        units = [as_shift(tuple(int(c) for c in row), self.dimension)
                 for row in np.eye(self.dimension, dtype=int)]
        for r in CERT_RADII:
            for d in sphere_directions(self.dimension, 8):
                x = np.rint(r * np.asarray(d, dtype=float)).astype(int)
                if not np.any(x):
                    continue
                for e in units:
                    dev = opnorm(
                        self.evaluate(tuple(x - np.asarray(e)))
                        - self.evaluate(tuple(x)))
                    if dev > self.envelope(r) + CERT_SLACK:
                        raise CertificationError(
                            f"oscillation of profile at {tuple(x)} exceeds the "
                            f"declared envelope: {dev:.3e}"
                        )

    def evaluate(self, x):
        key = as_shift(x, self.dimension)
        return np.atleast_2d(np.asarray(self.func(key), dtype=complex))

    def data_norms(self):
        return [opnorm(h) for h in self.sampler]

    def translate(self, g):
        g = as_shift(g, self.dimension)
        gn = max(abs(c) for c in g)
        func = lambda x, f=self.func, g=g: f(tuple(a - b for a, b in zip(x, g)))
        # each quasi-orbit at infinity is a fixed point, so the sampler stays
        return VanishingOscillationProfile(
            self.dimension, self.fiber_dim, func, self.sampler,
            _env_shift(self.envelope, gn),
        )

    def map_values(self, fn, fiber_dim=None, norm_scale=1.0):
        nf = fiber_dim or self.fiber_dim
        func = lambda x, f=self.func, fn=fn: fn(
            np.atleast_2d(np.asarray(f(x), dtype=complex)))
        return VanishingOscillationProfile(
            self.dimension, nf, func, [fn(h) for h in self.sampler],
            _env_scale(self.envelope, norm_scale),
        )

    @staticmethod
    def _align(s1, s2):
        if len(s1) == len(s2):
            return s1, s2
        if len(s1) == 1:
            return [s1[0]] * len(s2), s2
        if len(s2) == 1:
            return s1, [s2[0]] * len(s1)
        raise VariantMixError(
            f"asymptotic samplers of lengths {len(s1)} and {len(s2)} "
            "cannot be aligned"
        )

    def _add_same(self, other):
        s1, s2 = self._align(self.sampler, other.sampler)
        func = lambda x, a=self, b=other: a.evaluate(x) + b.evaluate(x)
        return VanishingOscillationProfile(
            self.dimension, self.fiber_dim, func,
            [a + b for a, b in zip(s1, s2)],
            _env_add(self.envelope, other.envelope),
        )

    def _product_same(self, other, shift):
        s1, s2 = self._align(self.sampler, other.sampler)
        func = lambda x, a=self, b=other, s=shift: (
            a.evaluate(x) @ b.evaluate(tuple(p - q for p, q in zip(x, s))))
        env = _env_product(self.envelope, self.sup_bound(), other.envelope,
                           other.sup_bound(), max(abs(c) for c in shift))
        return VanishingOscillationProfile(
            self.dimension, self.fiber_dim, func,
            [a @ b for a, b in zip(s1, s2)], env,
        )

    def absorb_constant(self, c):
        func = lambda x, f=self.func, c=c: (
            np.atleast_2d(np.asarray(f(x), dtype=complex)) + c)
        return VanishingOscillationProfile(
            self.dimension, self.fiber_dim, func,
            [h + c for h in self.sampler], self.envelope,
        )

    def absorb_compact(self, comp):
        rad = comp.support_radius()
        sup = max([opnorm(v) for v in comp.support.values()] + [0.0])
        func = lambda x, a=self, b=comp: a.evaluate(x) + b.evaluate(x)
        env = lambda r, e=self.envelope, rad=rad, sup=sup: (
            e(r) + (sup if r <= rad + 1 else 0.0))
        return VanishingOscillationProfile(
            self.dimension, self.fiber_dim, func, self.sampler, env,
        )


# ---------------------------------------------------------------------------
# sphere sampling
# ---------------------------------------------------------------------------

def sphere_directions(dimension: int, count: int = 360) -> list:
    """Sample directions on ``S^(l-1)``.

    l=1 gives the two points, l=2 a uniform circle grid, l=3 the vertices of a
    subdivided icosahedron (count is rounded to the nearest refinement level).
    """
    if dimension == 1:
        return [np.array([-1.0]), np.array([1.0])]
    if dimension == 2:
        phi = 2.0 * np.pi * np.arange(count) / max(count, 8)
        return [np.array([math.cos(p), math.sin(p)]) for p in phi[:max(count, 8)]]
    level = 0
    while 10 * 4**level + 2 < count and level < 4:
        level += 1
    return _icosphere(level)


def _icosphere(level: int) -> list:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.asarray(v, dtype=float) for v in verts]
    verts = [v / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        edge_mid: dict = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                edge_mid[key] = len(verts) - 1
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return verts


# ---------------------------------------------------------------------------
# bulk systems at infinity
# ---------------------------------------------------------------------------

@dataclass
class TranslationInvariantSystem:
    """Bulk system with a constant symbol ``{g: b_g}``."""

    label: str
    dimension: int
    fiber_dim: int
    symbol: dict
    hermitian: bool = False
    unitary: bool = False
    zero_limit_flag: bool = False

    def symbol_matrix(self, g) -> np.ndarray:
        g = as_shift(g, self.dimension)
        if g in self.symbol:
            return self.symbol[g]
        return np.zeros((self.fiber_dim, self.fiber_dim), dtype=complex)

    def lipschitz_bound(self) -> float:
        """Bound on ``||dH/dtheta||`` for the Bloch symbol of this system."""
        return float(sum(
            max(abs(c) for c in g) * opnorm(b) if any(g) else 0.0
            for g, b in self.symbol.items()
        ))

    def as_operator(self) -> InterfaceOperator:
        """The translation-invariant operator with this symbol."""
        terms = [(g, ConstantProfile(b, self.dimension))
                 for g, b in self.symbol.items()]
        return InterfaceOperator(Lattice(self.dimension, self.fiber_dim), terms,
                                 hermitian=self.hermitian, unitary=self.unitary)

    def same_symbol(self, other) -> bool:
        keys = set(self.symbol) | set(other.symbol)
        return all(
            np.array_equal(self.symbol_matrix(g), other.symbol_matrix(g))
            for g in keys
        )


@dataclass
class FaceFiberedSystem:
    """Circle of (l-1)-dimensional interface operators over one Cartesian face."""

    label: str
    coordinate: int
    sign: int
    dimension: int
    fiber_dim: int
    family: Callable  # angle -> InterfaceOperator of dimension l-1
    hermitian: bool = False
    unitary: bool = False

    def at(self, theta: float) -> InterfaceOperator:
        return self.family(float(theta))


BulkSystem = object  # union of the two dataclasses above


def _limit_of(prof, kind: str, data=None):
    """Dispatch the appropriate limit of a profile for a quasi-orbit kind."""
    if isinstance(prof, (ConstantProfile, CompactProfile)):
        return prof.limit_value()
    if kind == "complement":
        return np.zeros((prof.fiber_dim, prof.fiber_dim), dtype=complex)
    if kind == "left":
        return prof.left
    if kind == "right":
        return prof.right
    if kind == "direction":
        if isinstance(prof, RadialProfile):
            return prof.sphere_value(data)
        if isinstance(prof, ConeProfile):
            return prof.directional_limit(data)[0]
    if kind == "sampler":
        return prof.sampler[data] if len(prof.sampler) > 1 else prof.sampler[0]
    raise VariantMixError(f"no {kind} limit for {prof.variant} profile")


def _dominant_family(T: InterfaceOperator) -> type | None:
    families = {
        type(p) for p in T.terms.values()
        if not isinstance(p, (ConstantProfile, CompactProfile))
    }
    if len(families) > 1:
        names = sorted(f.variant for f in families)
        raise VariantMixError(f"operator mixes asymptotics families {names}")
    return families.pop() if families else None


def _ti_system(T, label: str, kind: str, data=None, flag=False):
    symbol = {}
    zero = np.zeros((T.lattice.fiber_dim,) * 2, dtype=complex)
    for g, prof in T.terms.items():
        b = _limit_of(prof, kind, data)
        if not np.array_equal(b, zero):
            symbol[g] = b
    return TranslationInvariantSystem(
        label=label, dimension=T.lattice.dimension,
        fiber_dim=T.lattice.fiber_dim, symbol=symbol,
        hermitian=T.hermitian, unitary=T.unitary, zero_limit_flag=flag,
    )


def quasi_orbits(T: InterfaceOperator, sphere_count: int = 360) -> list:
    """Enumerate the bulk systems at infinity of ``T``.

    One system per quasi-orbit of the boundary at infinity, according to the
    asymptotics family of the coefficient profiles.  Systems with exactly
    identical symbols are merged (their labels join with '|').  The sphere
    families are sampled on a finite grid of ``sphere_count`` directions; the
    spectra depend continuously on the direction through the symbol, so grid
    refinement converges (resolution is reported, not guaranteed).
    """
    if not T.terms:
        raise VariantMixError("operator with empty term list has no quasi-orbits")
    family = _dominant_family(T)

    systems: list = []
    if family is None:
        # constants and compacts only: the single limit system at infinity
        systems.append(_ti_system(T, "bulk", "complement"))
    elif family is DomainWall1DProfile:
        systems.append(_ti_system(T, "left", "left"))
        systems.append(_ti_system(T, "right", "right"))
    elif family is CartesianProfile:
        for j in range(1, T.lattice.dimension + 1):
            for s in (-1, 1):
                systems.append(face_limit(T, j, s))
    elif family is RadialProfile:
        for i, d in enumerate(sphere_directions(T.lattice.dimension, sphere_count)):
            systems.append(_ti_system(T, f"dir_{i:04d}", "direction", d))
    elif family is ConeProfile:
        caps = next(p for p in T.terms.values()
                    if isinstance(p, ConeProfile)).caps
        grid = sphere_directions(T.lattice.dimension, sphere_count)
        for j, cap in enumerate(caps):
            dirs = [np.asarray(cap.center, dtype=float)]
            dirs += [d for d in grid
                     if _angle_between(d, cap.center) <= cap.angular_radius
                     and _angle_between(d, cap.center) > 1e-12]
            for i, d in enumerate(dirs):
                systems.append(_ti_system(T, f"cap{j}_dir{i:04d}", "direction", d))
        systems.append(_ti_system(T, "complement", "complement", flag=True))
    elif family is VanishingOscillationProfile:
        lengths = {len(p.sampler) for p in T.terms.values()
                   if isinstance(p, VanishingOscillationProfile)}
        lengths.discard(1)
        if len(lengths) > 1:
            raise VariantMixError(
                f"inconsistent asymptotic sampler lengths {sorted(lengths)}"
            )
        count = lengths.pop() if lengths else 1
        for k in range(count):
            systems.append(_ti_system(T, f"asy_{k:04d}", "sampler", k))
    else:  # pragma: no cover
        raise VariantMixError(f"unknown profile family {family}")

    # merge systems with identical symbols (e.g. equal wall limits)
    merged: list = []
    for sys_ in systems:
        if isinstance(sys_, TranslationInvariantSystem):
            twin = next(
                (m for m in merged if isinstance(m, TranslationInvariantSystem)
                 and m.same_symbol(sys_)), None)
            if twin is not None:
                twin.label = f"{twin.label}|{sys_.label}"
                twin.zero_limit_flag = twin.zero_limit_flag and sys_.zero_limit_flag
                continue
        merged.append(sys_)
    return merged


def directional_limit(T: InterfaceOperator, omega) -> TranslationInvariantSystem:
    """Exact bulk symbol along the ray ``omega`` (radial, cone and 1D walls)."""
    family = _dominant_family(T)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if family is DomainWall1DProfile:
        side = "right" if omega[0] > 0 else "left"
        return _ti_system(T, side, side)
    if family is None:
        return _ti_system(T, "bulk", "direction", omega)
    if family not in (RadialProfile, ConeProfile):
        raise VariantMixError(
            f"directional limits need radial or cone asymptotics, got "
            f"{family.variant}"
        )
    flag = False
    if family is ConeProfile:
        prof = next(p for p in T.terms.values() if isinstance(p, ConeProfile))
        flag = all(not cap.contains(omega) for cap in prof.caps)
    sys_ = _ti_system(T, f"dir({','.join(f'{c:+.3f}' for c in omega)})",
                      "direction", omega, flag=flag)
    return sys_


def face_limit(T: InterfaceOperator, coordinate: int, sign: int) -> FaceFiberedSystem:
    """The fibered family over the face ``x_j -> sign * infinity``.

    The j-th shift component ``s`` contributes the scalar phase ``e^{i s
    theta}`` multiplying the face-limit profile on the remaining
    coordinates.
    """
    l = T.lattice.dimension
    if not 1 <= coordinate <= l:
        raise VariantMixError(f"coordinate {coordinate} out of range for l={l}")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    family = _dominant_family(T)
    if family not in (CartesianProfile, None):
        raise VariantMixError("face limits need cartesian-anisotropy profiles")
    N = T.lattice.fiber_dim
    small = Lattice(l - 1, N)

    pieces = []  # (g_perp, s_j, face profile on Z^{l-1})
    for g, prof in T.terms.items():
        s = g[coordinate - 1]
        g_perp = tuple(c for i, c in enumerate(g) if i != coordinate - 1)
        if isinstance(prof, CompactProfile):
            continue  # dies at infinity
        if isinstance(prof, ConstantProfile):
            face = ConstantProfile(prof.value, l - 1)
        else:
            face = prof.face_profile(coordinate, sign)
        pieces.append((g_perp, s, face))

    def family_at(theta: float, pieces=tuple(pieces)) -> InterfaceOperator:
        terms = [(gp, face.scale(np.exp(1j * s * theta)))
                 for gp, s, face in pieces]
        return InterfaceOperator(small, terms, hermitian=T.hermitian,
                                 unitary=T.unitary)

    return FaceFiberedSystem(
        label=f"face_{coordinate}{'+' if sign > 0 else '-'}",
        coordinate=coordinate, sign=sign, dimension=l, fiber_dim=N,
        family=family_at, hermitian=T.hermitian, unitary=T.unitary,
    )
