"""Test functions phi together with their Fourier transforms.

Convention (fixed throughout the package):
    phi_hat(xi) = integral phi(t) exp(-i xi t) dt,
    phi(t) = (1/2 pi) integral phi_hat(xi) exp(i xi t) dxi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad_vec
from scipy.interpolate import CubicSpline

from .errors import DomainError

CONVENTION = "phi_hat(xi) = int phi(t) exp(-i xi t) dt"
QUAD_TOL = 1e-10
SPLINE_STEP = 0.02  # grid step times the largest frequency


@dataclass(frozen=True)
class TestFunctionPair:
    """phi, phi_hat and derivatives of phi_hat.

    ``hat_deriv(m, xi)`` returns the m-th derivative of phi_hat (m <= 2 at
    least). ``envelope(t)`` is a rigorous upper bound for |phi(t)|.
    """

    __test__ = False  # not a pytest class

    phi: Callable
    phi_hat: Callable
    hat_deriv: Callable
    envelope: Callable
    support_hat: Optional[tuple] = None  # tuple of (lo, hi) intervals
    schwartz_certificate: dict = field(default_factory=dict)
    convention: str = CONVENTION
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    real: bool = True

    def hat_at_zero(self) -> float:
        return float(np.real(self.phi_hat(0.0)))

    def excludes_zero(self) -> bool:
        return self.support_hat is not None and all(lo > 0 or hi < 0 for lo, hi in self.support_hat)

    def support_max(self) -> float:
        if self.support_hat is None:
            return math.inf
        return max(max(abs(lo), abs(hi)) for lo, hi in self.support_hat)


def _scalar_or_array(v):
    v = np.asarray(v)
    return v.item() if v.ndim == 0 else v


# Gaussian -------------------------------------------------------------------

def gaussian_pair(sigma: float) -> TestFunctionPair:
    """phi(t) = exp(-t^2 / 2 sigma^2), phi_hat = sigma sqrt(2 pi) exp(-sigma^2 xi^2 / 2)."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    s2 = sigma * sigma
    amp = sigma * math.sqrt(2 * math.pi)

    def phi(t):
        t = np.asarray(t, dtype=float)
        return _scalar_or_array(np.exp(-t * t / (2 * s2)))

    def hat_deriv(m, xi):
        xi = np.asarray(xi, dtype=float)
        g = amp * np.exp(-s2 * xi * xi / 2)
        if m == 0:
            out = g
        elif m == 1:
            out = -s2 * xi * g
        elif m == 2:
            out = (s2 * s2 * xi * xi - s2) * g
        else:
            # probabilists' Hermite polynomials: d^m/dxi^m exp(-s2 xi^2/2)
            u = sigma * xi
            he_prev, he = np.ones_like(u), u
            for k in range(1, m):
                he_prev, he = he, u * he - k * he_prev
            out = (-sigma) ** m * he * g
        return _scalar_or_array(out)

    return TestFunctionPair(phi=phi, phi_hat=lambda xi: hat_deriv(0, xi), hat_deriv=hat_deriv,
                            envelope=lambda t: np.abs(phi(t)), support_hat=None,
                            schwartz_certificate={"kind": "gaussian", "exact": True},
                            kind="gaussian", params={"sigma": sigma})


# Mollifier bumps ------------------------------------------------------------

def _bump_polys(mmax):
    """P_m with b^(m)(u) = P_m(u) b(u) / (1-u^2)^(2m), b = exp(-1/(1-u^2))."""
    D = np.array([1.0, 0.0, -2.0, 0.0, 1.0])
    dD = npoly.polyder(D)
    P = [np.array([1.0])]
    for m in range(mmax):
        p = P[-1]
        nxt = npoly.polysub(npoly.polysub(npoly.polymul(npoly.polyder(p), D),
                                          m * npoly.polymul(p, dD)),
                            npoly.polymul([0.0, 2.0], p))
        P.append(nxt)
    return P


_POLYS = _bump_polys(8)


def _bump(m, u):
    """m-th derivative of e * exp(-1/(1-u^2)) (peak value 1), zero for |u| >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    ui = u[inside]
    q = 1 - ui * ui
    b = np.exp(1 - 1 / q)
    out[inside] = npoly.polyval(ui, _POLYS[m]) * b / q ** (2 * m)
    return out


class _InverseTransform:
    """phi(t) by adaptive Gauss-Kronrod quadrature over the support of phi_hat,
    memoized on a grid with cubic-spline interpolation (built once, then read-only)."""

    def __init__(self, hat, intervals, real, grid_T):
        self.hat = hat
        self.intervals = intervals
        self.real = real
        self.xi_max = max(max(abs(a), abs(b)) for a, b in intervals)
        self.grid_T = grid_T
        self._spline = None

    def direct(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tmax = float(np.max(np.abs(t))) if len(t) else 0.0
        total = np.zeros(2 * len(t))
        for a, b in self.intervals:
            # break points at the local period of exp(i xi t)
            n = max(1, int(math.ceil((b - a) * tmax / (2 * math.pi))))
            pts = np.linspace(a, b, n + 1)[1:-1]

            def f(xi):
                ph = xi * t
                h = float(self.hat(xi))
                return np.concatenate([h * np.cos(ph), h * np.sin(ph)])

            val, _ = quad_vec(f, a, b, epsabs=QUAD_TOL, epsrel=0.0, points=pts if len(pts) else None,
                              limit=20000)
            total += val
        re, im = total[: len(t)], total[len(t):]
        out = (re + 1j * im) / (2 * math.pi)
        return out.real if self.real else out

    def _build(self):
        step = SPLINE_STEP / self.xi_max
        n = int(math.ceil(self.grid_T / step))
        grid = np.linspace(-n * step, n * step, 2 * n + 1)
        vals = self.direct(grid)
        self._spline = CubicSpline(grid, vals)
        self._grid_edge = grid[-1]

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        if self._spline is None:
            self._build()
        out = np.empty(flat.shape, dtype=float if self.real else complex)
        inner = np.abs(flat) <= self._grid_edge
        if np.any(inner):
            out[inner] = self._spline(flat[inner])
        if np.any(~inner):
            out[~inner] = self.direct(flat[~inner])
        return _scalar_or_array(out.reshape(t_arr.shape))


def bump_hat_pair(center: float, half_width: float, symmetric: bool = False,
                  grid_T: Optional[float] = None) -> TestFunctionPair:
    """phi_hat = smooth bump on [center - w, center + w] (peak 1); with
    ``symmetric=True`` the mirrored bump is added so that phi is real and even."""
    if not half_width > 0 or not math.isfinite(half_width):
        raise DomainError("degenerate bump width")
    c, w = float(center), float(half_width)
    signs = (1.0, -1.0) if symmetric else (1.0,)

    def hat_deriv(m, xi):
        xi = np.asarray(xi, dtype=float)
        out = sum(_bump(m, (xi - s * c) / w) for s in signs) / w ** m
        return _scalar_or_array(out)

    intervals = tuple(sorted((s * c - w, s * c + w) for s in signs))
    # merge overlapping intervals
    merged = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    intervals = tuple(merged)
    real = symmetric
    # A_m = (1/2 pi) int |phi_hat^(m)|, so |phi(t)| <= A_m / |t|^m
    u = np.linspace(-1, 1, 20001)[1:-1]
    du = u[1] - u[0]
    A = [len(signs) * float(np.sum(np.abs(_bump(m, u)))) * du * w / w ** m / (2 * math.pi)
         for m in range(7)]

    def envelope(t):
        t = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            bounds = np.stack([A[m] / t ** m for m in range(len(A))])
        return _scalar_or_array(1.01 * bounds.min(axis=0))

    if grid_T is None:
        grid_T = 60.0 / w
    inv = _InverseTransform(lambda xi: hat_deriv(0, xi), intervals, real, grid_T)
    return TestFunctionPair(phi=inv, phi_hat=lambda xi: hat_deriv(0, xi), hat_deriv=hat_deriv,
                            envelope=envelope, support_hat=intervals,
                            schwartz_certificate={"kind": "bump", "A_m": A},
                            kind="bump", params={"center": c, "half_width": w,
                                                 "symmetric": symmetric},
                            real=real)


def scale_pair(p: TestFunctionPair, s: float) -> TestFunctionPair:
    """psi(t) = phi(s t), psi_hat(xi) = phi_hat(xi / s) / s."""
    if not s > 0:
        raise DomainError("scale must be positive")
    if s == 1:
        return p

    def hat_deriv(m, xi):
        return _scalar_or_array(np.asarray(p.hat_deriv(m, np.asarray(xi) / s)) / s ** (m + 1))

    support = None
    if p.support_hat is not None:
        support = tuple((lo * s, hi * s) for lo, hi in p.support_hat)
    return TestFunctionPair(phi=lambda t: p.phi(s * np.asarray(t)),
                            phi_hat=lambda xi: hat_deriv(0, xi), hat_deriv=hat_deriv,
                            envelope=lambda t: p.envelope(s * np.asarray(t)),
                            support_hat=support,
                            schwartz_certificate=dict(p.schwartz_certificate, scale=s),
                            kind=p.kind, params=dict(p.params, scale=s * p.params.get("scale", 1.0)),
                            real=p.real)


def fourier_check(p: TestFunctionPair, n: int = 20, seed: int = 0, t_max: float = 5.0) -> float:
    """Max |phi(t) - (1/2 pi) int phi_hat e^{i xi t}| over n random t.

    Quadrature is over the support of phi_hat, or over a 12-sigma window for
    Gaussians.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(-t_max, t_max, n)
    if p.support_hat is not None:
        intervals = p.support_hat
    else:
        sigma = p.params.get("sigma", 1.0) / p.params.get("scale", 1.0)
        intervals = ((-12 / sigma, 12 / sigma),)
    inv = _InverseTransform(p.phi_hat, intervals, p.real, 0.0)
    return float(np.max(np.abs(inv.direct(t) - np.asarray(p.phi(t)))))
