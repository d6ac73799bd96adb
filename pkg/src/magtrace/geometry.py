"""Upper half-plane and pseudosphere models, PSL(2,R) elements, and the
closed-form classification of constant-curvature (magnetic) trajectories.

Conventions: angles are radians normalized to (-pi, pi]; tangent directions
at a point of the half-plane are Euclidean angles measured from the positive
x-axis (the model is conformal, so these are also hyperbolic angles); the
orientation is the standard one, dx ^ dy / y^2 > 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DET_TOL = 1e-12  # determinant renormalization threshold
EPS = np.finfo(float).eps
REGIME_RTOL = 1e-12
NEAR_CRITICAL_RTOL = 1e-8


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    return a


@dataclass(frozen=True)
class MoebiusElement:
    """Unit-determinant real 2x2 matrix modulo sign.

    Construct through :meth:`from_entries` (or :func:`moebius`) to get the
    canonical representative: determinant renormalized to 1 and the first
    nonzero entry in reading order positive.
    """

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_entries(cls, a, b, c, d) -> "MoebiusElement":
        det = a * d - b * c
        if not det > 0:
            raise DomainError(f"determinant must be positive, got {det!r}")
        s = math.sqrt(det)
        return cls._signed(a / s, b / s, c / s, d / s)

    @classmethod
    def _renormalized(cls, a, b, c, d) -> "MoebiusElement":
        # rescale only when the drift is resolvable: for large entries a*d - b*c
        # cancels, and dividing by its rounding noise would inject error
        ad, bc = a * d, b * c
        det = ad - bc
        floor = 1024 * EPS * (abs(ad) + abs(bc))
        if abs(det - 1.0) > max(DET_TOL, floor):
            return cls.from_entries(a, b, c, d)
        return cls._signed(a, b, c, d)

    @classmethod
    def _signed(cls, a, b, c, d) -> "MoebiusElement":
        # sign normalization only; entries must already be unimodular
        for v in (a, b, c, d):
            if v != 0.0:
                if v < 0:
                    a, b, c, d = -a, -b, -c, -d
                break
        return cls(float(a), float(b), float(c), float(d))

    @classmethod
    def from_matrix(cls, m) -> "MoebiusElement":
        m = np.asarray(m, dtype=float)
        return cls.from_entries(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "MoebiusElement":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        """Trace of the canonical representative (sign is representative-dependent)."""
        return self.a + self.d

    def __matmul__(self, other: "MoebiusElement") -> "MoebiusElement":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        return MoebiusElement._renormalized(a, b, c, d)

    def inverse(self) -> "MoebiusElement":
        return MoebiusElement._signed(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "MoebiusElement":
        k = int(k)
        base = self if k >= 0 else self.inverse()
        out = MoebiusElement.identity()
        for _ in range(abs(k)):
            out = out @ base
        return out

    def close_to(self, other: "MoebiusElement", tol: float = 1e-10) -> bool:
        """Equality in PSL(2,R) up to ``tol`` (either sign)."""
        m, n = self.matrix, other.matrix
        return bool(min(np.abs(m - n).max(), np.abs(m + n).max()) <= tol)

    def is_identity(self, tol: float = 1e-10) -> bool:
        return self.close_to(MoebiusElement.identity(), tol)

    def __call__(self, z):
        return apply_isometry(self, z)


def moebius(a, b, c, d) -> MoebiusElement:
    return MoebiusElement.from_entries(a, b, c, d)


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"half-plane point needs y > 0, got y={self.y!r}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(float(z.real), float(z.imag))


@dataclass(frozen=True)
class PseudospherePoint:
    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"radial coordinate must be >= 0, got {self.r!r}")


@dataclass(frozen=True)
class RegimeClassification:
    regime: str  # "Circle", "Horocycle" or "Hypercycle"
    kappa_sq: float
    near_critical: bool = False


def _as_complex(z) -> complex:
    if isinstance(z, HPoint):
        return z.z
    return complex(z)


def pseudosphere_to_halfplane(p: PseudospherePoint) -> HPoint:
    """Isometry from geodesic polar coordinates about i to the half-plane."""
    w = math.tanh(p.r / 2) * complex(math.cos(p.phi), math.sin(p.phi))
    z = 1j * (1 - w) / (1 + w)
    return HPoint(z.real, z.imag)


def halfplane_to_pseudosphere(z) -> PseudospherePoint:
    """Inverse of :func:`pseudosphere_to_halfplane`."""
    z = _as_complex(z)
    w = (1j - z) / (1j + z)
    rho = min(abs(w), 1.0)
    return PseudospherePoint(2 * math.atanh(rho), math.atan2(w.imag, w.real))


def apply_isometry(h: MoebiusElement, z):
    """Fractional-linear action; returns the same type as ``z``."""
    zc = _as_complex(z)
    w = (h.a * zc + h.b) / (h.c * zc + h.d)
    if isinstance(z, HPoint):
        # imaginary part computed directly to keep it positive in rounding
        y = z.y / abs(h.c * zc + h.d) ** 2
        return HPoint(w.real, y)
    return w


def hyperbolic_distance(z1, z2) -> float:
    z1, z2 = _as_complex(z1), _as_complex(z2)
    if z1.imag <= 0 or z2.imag <= 0:
        raise DomainError("points must lie in the upper half-plane")
    return 2.0 * math.asinh(abs(z1 - z2) / (2.0 * math.sqrt(z1.imag * z2.imag)))


def magnetic_circle_radius(E0: float, B: float) -> float:
    """Hyperbolic radius R of magnetic trajectories, tanh R = sqrt(E0)/B."""
    if not (E0 > 0 and B > 0):
        raise DomainError("E0 and B must be positive")
    if E0 >= B * B:
        raise DomainError("no circular trajectories above critical ratio (E0 >= B^2)")
    return math.atanh(math.sqrt(E0) / B)


def circle_realization(R: float, lam: float, a: float):
    """Euclidean center and radius of the hyperbolic circle of radius R
    centered at a + i*lam (center returned in Euclidean terms)."""
    if not (R > 0 and lam > 0):
        raise DomainError("R and lambda must be positive")
    return HPoint(a, lam * math.cosh(R)), lam * math.sinh(R)


def classify_regime(E0: float, B: float) -> RegimeClassification:
    if not (E0 > 0 and B > 0):
        raise DomainError("E0 and B must be positive")
    k2 = B * B / E0
    gap = k2 - 1.0
    near = abs(gap) <= NEAR_CRITICAL_RTOL
    if abs(gap) <= REGIME_RTOL:
        regime = "Horocycle"
    elif gap > 0:
        regime = "Circle"
    else:
        regime = "Hypercycle"
    return RegimeClassification(regime, k2, near)


# Iwasawa-type building blocks ------------------------------------------------

def translation(x: float) -> MoebiusElement:
    return MoebiusElement(1.0, float(x), 0.0, 1.0)


def dilation(y: float) -> MoebiusElement:
    s = math.sqrt(y)
    return MoebiusElement(s, 0.0, 0.0, 1.0 / s)


def rotation(phi: float) -> MoebiusElement:
    """Elliptic element fixing i that turns tangent directions at i by +phi."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return MoebiusElement.from_entries(c, s, -s, c)


def frame(p, xi: float) -> MoebiusElement:
    """Isometry sending (i, upward) to (p, direction xi)."""
    p = p if isinstance(p, HPoint) else HPoint.from_complex(complex(p))
    return translation(p.x) @ dilation(p.y) @ rotation(xi - math.pi / 2)


def geodesic_point(p, xi: float, s: float) -> HPoint:
    """Point at signed arclength s on the unit-speed geodesic leaving p in
    direction xi."""
    g = frame(p, xi)
    return apply_isometry(g, HPoint(0.0, math.exp(s)))
