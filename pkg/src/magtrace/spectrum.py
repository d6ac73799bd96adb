"""Spectrum of the magnetic Laplacian on a compact hyperbolic surface.

Interior eigenvalues (Landau-level analogue) are exact integers. The
continuous series is nu = lambda_l + N^2 built from Laplace-Beltrami
eigenvalues lambda_l, which are read from a data file.

Maass operators (x + iy coordinates):
    K_N = i y d/dx + y d/dy + N
    L_N = -i y d/dx + y d/dy - N
    D_N = y^2 (d^2/dx^2 + d^2/dy^2) - 2 i N y d/dx
so that D_N = L_{N+1} K_N + N(N+1) = K_{N-1} L_N + N(N-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DataFormatError, DomainError

WEYL_RTOL = 0.25


@dataclass(frozen=True)
class SpectralDatum:
    nu: float
    multiplicity: int
    origin: str  # "interior" or "continuous"
    index: int   # k for interior data, l for continuous data

    def __post_init__(self):
        if self.multiplicity < 1:
            raise DomainError("multiplicity must be positive")
        if self.origin not in ("interior", "continuous"):
            raise DomainError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class LaplaceSpectrum:
    """Distinct eigenvalues with multiplicities, complete up to ``cutoff``."""

    lambdas: np.ndarray
    multiplicities: np.ndarray
    surface: str
    area: float
    cutoff: float
    provenance: tuple = field(default=())

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=np.int64)
        lam.setflags(write=False)
        mult.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def genus(self) -> int:
        return int(round(self.area / (4 * math.pi))) + 1

    def count(self, lam: float) -> int:
        """Eigenvalues <= lam counted with multiplicity."""
        return int(self.multiplicities[self.lambdas <= lam].sum())


def interior_eigenvalues(N: int, g: int) -> list:
    """nu = (2k+1)N - k(k+1) with multiplicity (g-1)(2N-2k-1), k = 0..N-1."""
    if N < 1 or g < 2:
        raise DomainError("need N >= 1 and g >= 2")
    return [SpectralDatum((2 * k + 1) * N - k * (k + 1), (g - 1) * (2 * N - 2 * k - 1),
                          "interior", k) for k in range(N)]


def continuous_eigenvalues(L: LaplaceSpectrum, N: int) -> list:
    return [SpectralDatum(float(lam) + N * N, int(m), "continuous", l)
            for l, (lam, m) in enumerate(zip(L.lambdas, L.multiplicities))]


def lambda_scaled(nu, N):
    """sqrt(nu + N^2); vectorized."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise DomainError("nu must be nonnegative")
    out = np.sqrt(nu + float(N) * N)
    return float(out) if out.ndim == 0 else out


def weyl_count(area: float, lam: float) -> float:
    return area / (4 * math.pi) * lam


def parse_laplace_spectrum(text: str, source: str = "<string>",
                           check_weyl: bool = True) -> LaplaceSpectrum:
    surface, area, cutoff = None, None, None
    provenance = []
    lam, mult = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("provenance:"):
                provenance.append(body[len("provenance:"):].strip())
            continue
        parts = line.split()
        try:
            if parts[0] == "surface" and len(parts) == 2:
                surface = parts[1]
            elif parts[0] == "area" and len(parts) == 2:
                area = float(parts[1])
            elif parts[0] == "cutoff" and len(parts) == 2:
                cutoff = float(parts[1])
            elif len(parts) == 2:
                lam.append(float(parts[0]))
                mult.append(int(parts[1]))
            else:
                raise ValueError
        except ValueError:
            raise DataFormatError(f"{source}:{lineno}: cannot parse {raw!r}") from None
    if surface is None or area is None:
        raise DataFormatError(f"{source}: missing surface or area header")
    if not area > 0:
        raise DataFormatError(f"{source}: area must be positive")
    if not lam:
        raise DataFormatError(f"{source}: no eigenvalues")
    lam = np.array(lam)
    mult = np.array(mult)
    if np.any(mult < 1):
        raise DataFormatError(f"{source}: multiplicities must be positive")
    if np.any(np.diff(lam) < 0):
        raise DataFormatError(f"{source}: eigenvalues must be nondecreasing")
    if lam[0] != 0.0 or mult[0] != 1:
        raise DataFormatError(f"{source}: missing zero mode (lambda_0 = 0 with multiplicity 1)")
    if np.any(lam[1:] <= 0):
        raise DataFormatError(f"{source}: zero mode must be simple")
    if cutoff is None:
        cutoff = float(lam[-1])
    if cutoff < lam[-1]:
        raise DataFormatError(f"{source}: cutoff below the largest eigenvalue")
    spec = LaplaceSpectrum(lam, mult, surface, area, cutoff, tuple(provenance))
    if check_weyl:
        expected = weyl_count(area, cutoff)
        got = spec.count(cutoff)
        if abs(got - expected) > WEYL_RTOL * expected:
            raise DataFormatError(f"{source}: Weyl-law check failed: {got} eigenvalues "
                                  f"up to {cutoff}, expected about {expected:.1f}")
    return spec


def load_laplace_spectrum(path, check_weyl: bool = True) -> LaplaceSpectrum:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    return parse_laplace_spectrum(text, str(path), check_weyl)


# Maass operators by finite differences --------------------------------------

def _dx(u, x, y, h):
    return (u(x + h, y) - u(x - h, y)) / (2 * h)


def _dy(u, x, y, h):
    return (u(x, y + h) - u(x, y - h)) / (2 * h)


def raising(u: Callable, N, h: float) -> Callable:
    """Finite-difference K_N u as a new function of (x, y)."""
    return lambda x, y: 1j * y * _dx(u, x, y, h) + y * _dy(u, x, y, h) + N * u(x, y)


def lowering(u: Callable, N, h: float) -> Callable:
    """Finite-difference L_N u as a new function of (x, y)."""
    return lambda x, y: -1j * y * _dx(u, x, y, h) + y * _dy(u, x, y, h) - N * u(x, y)


def d_operator(u: Callable, N, h: float) -> Callable:
    def f(x, y):
        lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / (h * h)
        return y * y * lap - 2j * N * y * _dx(u, x, y, h)
    return f


def maass_identity_residual(N, u: Callable, z, h: float, which: str = "raise") -> float:
    """|D_N u - (L_{N+1} K_N u + N(N+1) u)| at z, all operators by central
    differences of step h (``which="lower"`` checks K_{N-1} L_N + N(N-1)).

    The right-hand side composes two first-order difference operators, so the
    residual is a genuine O(h^2) discretization error.
    """
    if not (1e-4 <= h <= 1e-1):
        raise DomainError("step h must lie in [1e-4, 1e-1]")
    z = complex(z.z if hasattr(z, "z") else z)
    x, y = z.real, z.imag
    if y <= h:
        raise DomainError("stencil leaves the half-plane")
    lhs = d_operator(u, N, h)(x, y)
    if which == "raise":
        rhs = lowering(raising(u, N, h), N + 1, h)(x, y) + N * (N + 1) * u(x, y)
    elif which == "lower":
        rhs = raising(lowering(u, N, h), N - 1, h)(x, y) + N * (N - 1) * u(x, y)
    else:
        raise DomainError(f"unknown identity {which!r}")
    return float(abs(lhs - rhs))
