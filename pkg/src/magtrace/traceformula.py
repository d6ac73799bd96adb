"""Both sides of the trace formula for the magnetic Laplacian with B = 1.

Spectral side: Y_N(phi) = sum_j phi(lambda_{N,j} - E N), summed exactly over
interior data and ingested continuous data, with a Weyl-law tail bound.

Classical side: the coefficients c0, c1 of Y_N ~ c0 N + c1 + O(1/N) in the
three regimes 1 < E < sqrt2, E = sqrt2 and E > sqrt2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import quad

from .errors import DomainError, EnumerationError, RegimeError, SpectrumWindowError
from .spectrum import (
    LaplaceSpectrum,
    SpectralDatum,
    continuous_eigenvalues,
    interior_eigenvalues,
)
from .testfn import TestFunctionPair, gaussian_pair, scale_pair

SQRT2 = math.sqrt(2.0)
CRITICAL_TOL = 1e-12
NEAR_CRITICAL_RTOL = 1e-6
WEYL_SLACK = 0.25  # counting function assumed within 25% of the Weyl law
K_TAIL = 1e-17


@dataclass(frozen=True)
class EnergyRegime:
    E: float
    regime: str  # "Subcritical", "Critical" or "Supercritical"
    near_critical: bool = False

    @property
    def E0(self) -> float:
        return self.E * self.E - 1.0


def energy_regime(E: float, critical: bool = False) -> EnergyRegime:
    """Classify E. The critical regime needs the explicit flag (or E equal to
    sqrt 2 within 1e-12); nearby floats get a near-critical warning."""
    if not E > 1:
        raise DomainError("E must exceed 1")
    gap = E - SQRT2
    if critical:
        if abs(gap) > CRITICAL_TOL * SQRT2:
            raise RegimeError(f"critical flag given but E = {E!r} is not sqrt 2")
        return EnergyRegime(SQRT2, "Critical")
    if abs(gap) <= CRITICAL_TOL * SQRT2:
        return EnergyRegime(SQRT2, "Critical")
    near = abs(gap) <= NEAR_CRITICAL_RTOL * SQRT2
    if near:
        warnings.warn("near-critical energy, expect slow asymptotics", RuntimeWarning)
    return EnergyRegime(E, "Subcritical" if gap < 0 else "Supercritical", near)


# Y_N -----------------------------------------------------------------------

@dataclass(frozen=True)
class YNResult:
    value: complex
    interior: complex
    continuous: complex
    tail_bound: float
    cutoff: float


def _fsum(values):
    v = np.asarray(values)
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real), math.fsum(v.imag))
    return math.fsum(v)


def _tail_bound(phi, E, N, cutoff, count_at_cutoff, area, include_zero_mode):
    """Bound on sum over unknown eigenvalues lambda > cutoff of |phi|(t(lambda)),
    t(lambda) = sqrt(lambda + 2N^2) - E N, assuming count(lambda) <= 1.25 * Weyl."""
    t0 = math.sqrt(cutoff + 2.0 * N * N) - E * N
    if t0 <= 0:
        raise SpectrumWindowError(
            f"spectrum window insufficient for this (E, N) = ({E}, {N}): the cutoff "
            f"{cutoff} lies below the peak of the window")
    dens = (1 + WEYL_SLACK) * area / (4 * math.pi)
    F0 = float(phi.envelope(t0))
    S = max(0.0, dens * cutoff - count_at_cutoff)
    integral, _ = quad(lambda t: float(phi.envelope(t)) * 2.0 * (t + E * N), t0, math.inf,
                       epsabs=1e-300, epsrel=1e-8, limit=200)
    bound = S * F0 + dens * integral
    if include_zero_mode:
        bound += F0
    return bound


def Y_N_exact(interior: Sequence[SpectralDatum], continuous, E: float, N: int,
              phi: TestFunctionPair, tail_tol: float = 1e-10, *,
              laplace: Optional[LaplaceSpectrum] = None, area: Optional[float] = None,
              details: bool = False):
    """Sum of multiplicity * phi(sqrt(nu + N^2) - E N) over all data.

    ``continuous`` is a list of continuous-series data, a LaplaceSpectrum, or
    None (no continuous data: every Laplace eigenvalue is treated as unknown).
    The unknown part is bounded by the Weyl law; a bound above ``tail_tol``
    raises SpectrumWindowError.
    """
    if isinstance(continuous, LaplaceSpectrum):
        laplace = continuous
        continuous = continuous_eigenvalues(laplace, N)
    continuous = list(continuous or [])
    if area is None:
        if laplace is not None:
            area = laplace.area
        else:
            top = [d for d in interior if d.index == N - 1]
            if not top:
                raise DomainError("area needed to bound the continuous tail")
            area = 4 * math.pi * top[0].multiplicity
    if laplace is not None:
        cutoff, count = laplace.cutoff, laplace.count(laplace.cutoff)
        zero_unknown = False
    elif continuous:
        lam = [d.nu - N * N for d in continuous]
        cutoff, count = max(lam), sum(d.multiplicity for d in continuous)
        zero_unknown = False
    else:
        cutoff, count, zero_unknown = 0.0, 0, True

    def part(data):
        if not data:
            return 0.0
        nu = np.array([d.nu for d in data], dtype=float)
        m = np.array([d.multiplicity for d in data], dtype=float)
        vals = np.asarray(phi.phi(np.sqrt(nu + float(N) * N) - E * N))
        return _fsum(m * vals)

    yi, yc = part(list(interior)), part(continuous)
    tail = _tail_bound(phi, E, N, cutoff, count, area, zero_unknown)
    if tail > tail_tol:
        raise SpectrumWindowError(
            f"spectrum window insufficient for this (E, N) = ({E}, {N}): tail bound "
            f"{tail:.3e} exceeds {tail_tol:.1e}")
    total = yi + yc
    if details:
        return YNResult(total, yi, yc, tail, cutoff)
    return total


# coefficients ----------------------------------------------------------------

def volume_XE(E: float, g: int) -> float:
    return (2 * math.pi) ** 2 * (2 * g - 2) * E


def weyl_term(E: float, g: int, phi_hat_at_0: float) -> float:
    """(2g - 2) E phi_hat(0), i.e. (2 pi)^-2 phi_hat(0) Vol(X_E)."""
    if not E > 1:
        raise DomainError("E must exceed 1")
    return (2 * g - 2) * E * phi_hat_at_0


def _convention_lock():
    """The Weyl-term identity depends on the Fourier convention; check it once."""
    p = gaussian_pair(0.7)
    integral, _ = quad(lambda t: p.phi(t), -np.inf, np.inf, epsabs=1e-13)
    if abs(integral - p.phi_hat(0.0)) > 1e-10:
        raise AssertionError("Fourier convention mismatch")
    E, g = 1.3, 2
    if abs(volume_XE(E, g) * integral / (2 * math.pi) ** 2 - weyl_term(E, g, integral)) > 1e-12:
        raise AssertionError("Weyl-term identity mismatch")


_convention_lock()


@dataclass(frozen=True)
class OrbitContribution:
    class_ref: object
    k: int
    E: float
    T_primitive: float
    det_factor: float
    maslov: int
    action: float
    holonomy: float

    @property
    def period(self) -> float:
        return self.k * self.T_primitive

    def value(self, N: int, phi: TestFunctionPair) -> complex:
        phase = math.remainder(N * self.action, 2 * math.pi)
        amp = self.T_primitive / (2 * math.pi * self.det_factor)
        return complex(amp * complex(math.cos(phase), -math.sin(phase)) * phi.phi_hat(self.period))


@dataclass
class CoefficientReport:
    E: float
    N: int
    regime: str
    c0: complex
    c1: complex
    breakdown: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        def cx(z):
            z = complex(z)
            return {"re": z.real, "im": z.imag}
        out = {"E": self.E, "N": self.N, "regime": self.regime,
               "c0": cx(self.c0), "c1": cx(self.c1), "breakdown": [], "diagnostics": {}}
        for item in self.breakdown:
            out["breakdown"].append({k: (cx(v) if isinstance(v, complex) else v)
                                     for k, v in item.items()})
        for k, v in self.diagnostics.items():
            out["diagnostics"][k] = cx(v) if isinstance(v, complex) else v
        return out


def _subcritical_kmax(E, phi, s):
    step = 2 * math.pi * E / s
    if phi.support_hat is not None:
        return int(math.floor(phi.support_max() / step))
    k = 1
    while k < 10 ** 6:
        xi = np.array([k * step, -k * step])
        size = max(np.abs(phi.hat_deriv(m, xi)).max() for m in range(3)) * (1 + k * step)
        if size < K_TAIL:
            return k - 1
        k += 1
    raise DomainError("k-sum does not converge")


def coefficients_subcritical(N: int, E: float, g: int, phi: TestFunctionPair,
                             k_max: Optional[int] = None) -> CoefficientReport:
    """c0 and c1 for 1 < E < sqrt 2.

    ``c1`` follows the published expression term by term. The report also
    carries ``c1_rederived`` (Poisson-summation form) in its diagnostics; the
    two differ in the phi_hat' and phi_hat'' terms.
    """
    if not (1 < E < SQRT2):
        raise RegimeError("coefficients_subcritical needs 1 < E < sqrt 2")
    s = math.sqrt(2 - E * E)
    if k_max is None:
        k_max = _subcritical_kmax(E, phi, s)
    G = 2 * g - 2
    c0 = complex(G * E * phi.phi_hat(0.0))
    c1 = complex(G * 2j * phi.hat_deriv(1, 0.0))
    c1r = complex(G * 1j * phi.hat_deriv(1, 0.0))
    c0_terms, c1_terms, c1r_terms = [], [], []
    breakdown = []
    for k in [k for j in range(1, k_max + 1) for k in (j, -j)]:
        xi = 2 * math.pi * k * E / s
        f0, f1, f2 = (complex(phi.hat_deriv(m, xi)) for m in range(3))
        osc = (-1) ** (k % 2) * np.exp(1j * math.remainder(2 * math.pi * k * s * N, 2 * math.pi))
        t0 = G * E * f0 * osc
        t1 = (G * 2j * f1 + G * (math.pi * 1j * k * E / (4 * s)) * f0
              + G * 1j * (2j * math.pi * k * E / s ** 3) * f2) * osc
        t1r = (G * 1j * f1 + G * (math.pi * 1j * k * E / (4 * s)) * f0
               + G * (2j * math.pi * k * E / s ** 3) * f2) * osc
        c0_terms.append(t0)
        c1_terms.append(t1)
        c1r_terms.append(t1r)
        breakdown.append({"k": k, "frequency": xi, "c0_term": complex(t0), "c1_term": complex(t1)})
    c0 += _fsum(c0_terms) if c0_terms else 0.0
    c1 += _fsum(c1_terms) if c1_terms else 0.0
    c1r += _fsum(c1r_terms) if c1r_terms else 0.0
    return CoefficientReport(E, N, "Subcritical", complex(c0), complex(c1), breakdown,
                             {"k_max": k_max, "c1_rederived": complex(c1r),
                              "weyl": weyl_term(E, g, float(np.real(phi.phi_hat(0.0))))})


def orbit_contribution(rec, k: int, E: float) -> OrbitContribution:
    if not E > SQRT2:
        raise RegimeError("orbit contributions need E > sqrt 2")
    if k == 0:
        raise DomainError("k must be nonzero")
    root = math.sqrt(E * E - 2)
    Tp = E / root * rec.length
    det = abs(rec.norm ** (k / 2) - rec.norm ** (-k / 2))
    return OrbitContribution(rec, k, E, Tp, det, 0, k * rec.length * root, -k * Tp / E)


def _class_coverage(classes):
    cert = getattr(classes, "certificate", None)
    if cert is None or not getattr(classes, "exhaustive", False):
        return 0.0
    return float(cert.get("max_length", 0.0))


def c1_supercritical(N: int, E: float, classes, phi: TestFunctionPair,
                     assume_complete: bool = False) -> CoefficientReport:
    """Orbit sum for E > sqrt 2 and supp phi_hat compact, away from 0.

    Only (h, k) with k T#(h) in supp phi_hat contribute. The class list must
    be exhaustive up to the length implied by the support.
    """
    if not E > SQRT2:
        raise RegimeError("c1_supercritical needs E > sqrt 2")
    if phi.support_hat is None or not phi.excludes_zero():
        raise DomainError("phi_hat must have compact support excluding 0")
    root = math.sqrt(E * E - 2)
    rate = E / root
    need = phi.support_max() / rate
    have = math.inf if assume_complete else _class_coverage(classes)
    if have < need:
        raise EnumerationError(
            f"class list not exhaustive for the required norm window: norms in "
            f"({math.exp(have):.6g}, {math.exp(need):.6g}] are not certified")
    terms, breakdown = [], []
    signed_terms = []
    for rec in classes:
        if not rec.primitive:
            continue
        kmax = int(math.floor(phi.support_max() / (rate * rec.length)))
        for j in range(1, kmax + 1):
            for k in (j, -j):
                T = k * rate * rec.length
                if not any(lo <= T <= hi for lo, hi in phi.support_hat):
                    continue
                oc = orbit_contribution(rec, k, E)
                v = oc.value(N, phi)
                terms.append(v)
                sign = math.copysign(1.0, rec.norm ** (k / 2) - rec.norm ** (-k / 2))
                signed_terms.append(sign * v)
                breakdown.append({"word": rec.word, "k": k, "length": rec.length,
                                  "T_primitive": oc.T_primitive, "det_factor": oc.det_factor,
                                  "action": oc.action, "value": v})
    c1 = _fsum(terms) if terms else 0j
    c1_signed = _fsum(signed_terms) if signed_terms else 0j
    return CoefficientReport(E, N, "Supercritical", 0j, complex(c1), breakdown,
                             {"required_length": need, "certified_length": have,
                              "c1_signed_denominator": complex(c1_signed)})


def coefficients_critical(phi: TestFunctionPair, g: int = 2, N: int = 0) -> CoefficientReport:
    """E = sqrt 2: Weyl term only, all higher coefficients vanish."""
    c0 = weyl_term(SQRT2, g, float(np.real(phi.phi_hat(0.0))))
    return CoefficientReport(SQRT2, N, "Critical", complex(c0), 0j, [], {})


# reduction to the Laplace-Beltrami operator ----------------------------------

def reduction_map(E: float, phi: TestFunctionPair):
    """(E/sqrt 2, psi) with psi(t) = phi(sqrt2 t)."""
    if not E > SQRT2:
        raise RegimeError("reduction needs E > sqrt 2")
    return E / SQRT2, scale_pair(phi, SQRT2)


def reduced_weyl_term(E0_reduced: float, g: int, psi_hat_at_0: float) -> float:
    """(2 pi)^-2 psi_hat(0) Vol(X0) with Vol(X0) = 2 pi E0 * 4 pi (2g - 2)."""
    vol = 2 * math.pi * E0_reduced * 4 * math.pi * (2 * g - 2)
    return vol * psi_hat_at_0 / (2 * math.pi) ** 2


def reduced_orbit_data(rec, k: int, E: float):
    """(primitive period, action) on the reduced side."""
    root = math.sqrt(E * E - 2)
    return E * SQRT2 / root * rec.length, k * rec.length * root


# residual fitting ---------------------------------------------------------------

@dataclass
class FitReport:
    N: list
    residuals: dict  # j -> list of residual values
    slopes: dict     # j -> slope or "exact"
    intervals: dict  # j -> (lo, hi) 95% confidence interval

    def to_dict(self):
        return {"N": self.N, "residuals": self.residuals, "slopes": self.slopes,
                "intervals": self.intervals}


def loglog_slope(N, r):
    """Least-squares slope of log|r| against log N with a 95% interval.
    Returns ("exact", None) when every residual vanishes."""
    N = np.asarray(N, dtype=float)
    r = np.abs(np.asarray(r, dtype=complex))
    ok = r > 0
    if ok.sum() < 2:
        return "exact", None
    fit = stats.linregress(np.log(N[ok]), np.log(r[ok]))
    dof = int(ok.sum()) - 2
    half = stats.t.ppf(0.975, dof) * fit.stderr if dof > 0 else math.inf
    return float(fit.slope), (float(fit.slope - half), float(fit.slope + half))


def residual_analysis(evaluate: Callable, N_list) -> FitReport:
    """``evaluate(N)`` returns (Y_N, c0, c1). Fits r0 = Y - c0 N and
    r1 = r0 - c1 against N on a log-log scale."""
    N_list = list(N_list)
    if len(N_list) < 4 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("need at least 4 ascending N values")
    r0, r1 = [], []
    for N in N_list:
        Y, c0, c1 = evaluate(N)
        r0.append(complex(Y - c0 * N))
        r1.append(complex(Y - c0 * N - c1))
    s0, i0 = loglog_slope(N_list, r0)
    s1, i1 = loglog_slope(N_list, r1)
    return FitReport(N_list, {0: r0, 1: r1}, {0: s0, 1: s1}, {0: i0, 1: i1})


def coefficients(E: float, N: int, g: int, phi: TestFunctionPair, critical: bool = False,
                 classes=None) -> CoefficientReport:
    """Regime dispatch."""
    reg = energy_regime(E, critical)
    if reg.regime == "Critical":
        return coefficients_critical(phi, g, N)
    if reg.regime == "Subcritical":
        return coefficients_subcritical(N, E, g, phi)
    c0 = weyl_term(E, g, float(np.real(phi.phi_hat(0.0))))
    if classes is None:
        raise DomainError("supercritical c1 needs a class list")
    rep = c1_supercritical(N, E, classes, phi)
    rep.c0 = complex(c0)
    return rep
