"""Acceptance criteria as executable checks.

Each ``criterion_<n>`` returns a :class:`CriterionResult` with the measured
quantities, the tolerance applied and the wall-clock time. Tolerances and
runtime limits are pinned here and nowhere else.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import data_path
from .errors import SpectrumWindowError
from .flow import (
    FlowParams,
    PhaseState,
    conserved_quantities,
    holonomy_integral,
    integrate_flow,
    mane_first_integral,
    measure_return_time,
)
from .fuchsian import enumerate_classes, load_group
from .geometry import HPoint, hyperbolic_distance
from .spectrum import interior_eigenvalues, load_laplace_spectrum, maass_identity_residual
from .testfn import bump_hat_pair, gaussian_pair
from .traceformula import (
    SQRT2,
    Y_N_exact,
    c1_supercritical,
    coefficients_critical,
    coefficients_subcritical,
    loglog_slope,
    orbit_contribution,
    reduced_weyl_term,
    reduction_map,
    residual_analysis,
    weyl_term,
)

SYSTOLE = 2 * math.acosh(1 + math.sqrt(2))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    tolerance: str
    details: dict = field(default_factory=dict)
    runtime: float = 0.0
    limit: float = math.inf
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        lim = "" if not math.isfinite(self.limit) else f" / limit {self.limit:g} s"
        return (f"[{self.status}] criterion {self.number}: {self.title} "
                f"({self.tolerance}; {self.runtime:.2f} s{lim})")


def _timed(number, title, limit):
    def wrap(fn: Callable[..., tuple]):
        def run(**kw) -> CriterionResult:
            t0 = time.perf_counter()
            passed, tol, details = fn(**kw)
            dt = time.perf_counter() - t0
            ok = passed and dt <= limit
            if passed and not ok:
                details = dict(details, runtime_exceeded=True)
            return CriterionResult(number, title, ok, tol, details, dt, limit)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _bolza_group():
    return load_group(data_path("bolza.group"))


def _bolza_spectrum():
    return load_laplace_spectrum(data_path("bolza_laplace.txt"))


@_timed(1, "interior spectrum exactness", 1.0)
def criterion_1(g: int = 2, N_max: int = 200):
    bad = []
    for N in range(1, N_max + 1):
        data = interior_eigenvalues(N, g)
        for k, d in enumerate(data):
            if d.nu != (2 * k + 1) * N - k * (k + 1) or d.multiplicity != (g - 1) * (2 * N - 2 * k - 1):
                bad.append((N, k))
        if sum(d.multiplicity for d in data) != (g - 1) * N * N:
            bad.append((N, "total"))
    return not bad, "exact integer equality", {"N_max": N_max, "mismatches": bad[:10]}


@_timed(2, "subcritical trace formula, E=1.2, Gaussian sigma=1", 10.0)
def criterion_2(E: float = 1.2, sigma: float = 1.0, N_list=tuple(range(20, 201, 10))):
    L = _bolza_spectrum()
    phi = gaussian_pair(sigma)

    def evaluate(N):
        Y = Y_N_exact(interior_eigenvalues(N, 2), L, E, N, phi)
        rep = coefficients_subcritical(N, E, 2, phi)
        return Y, rep.c0, rep.c1

    fit = residual_analysis(evaluate, list(N_list))
    r0 = np.abs(np.array(fit.residuals[0]))
    ratio = r0 / np.array(N_list)
    slope1 = fit.slopes[1]
    s_ratio, _ = loglog_slope(N_list, ratio)
    ok_slope = slope1 == "exact" or slope1 <= -0.8
    ok_ratio = s_ratio == "exact" or s_ratio < 0
    return ok_slope and ok_ratio, "slope of log|r1| <= -0.8 and |Y - c0 N|/N decreasing", {
        "slope_r1": slope1, "ci_r1": fit.intervals[1], "slope_r0_over_N": s_ratio,
        "r0_over_N_last": float(ratio[-1])}


@_timed(3, "critical regime, Bolza spectrum", 30.0)
def criterion_3(sigma: float = 0.2, N_range=range(2, 400)):
    phi = gaussian_pair(sigma)
    rep = coefficients_critical(phi, g=2)
    exact_c0 = rep.c0 == complex(2 * SQRT2 * phi.phi_hat(0.0))
    exact_c1 = rep.c1 == 0
    L = _bolza_spectrum()
    Ns, r = [], []
    for N in N_range:
        try:
            Y = Y_N_exact(interior_eigenvalues(N, 2), L, SQRT2, N, phi)
        except SpectrumWindowError:
            continue
        Ns.append(N)
        r.append(Y - rep.c0.real * N)
    slope, ci = loglog_slope(Ns, r) if len(Ns) >= 4 else (math.nan, None)
    ok = exact_c0 and exact_c1 and (slope == "exact" or slope < 1)
    return ok, "c0, c1 exact; slope of log|Y - c0 N| < 1", {
        "c0_exact": exact_c0, "c1_zero": exact_c1, "lambda_max": L.cutoff,
        "certified_N": (Ns[0], Ns[-1]) if Ns else None, "n_points": len(Ns),
        "slope": slope, "ci": ci}


def _systole_orbit(E):
    G = _bolza_group()
    cl = enumerate_classes(G, math.exp(3.2))
    rec = cl[0]
    h = G.element(rec.word)
    T, traj = measure_return_time(h, FlowParams(1.0, E))
    return rec, h, T, traj


@_timed(4, "supercritical period vs measured return time", 5.0)
def criterion_4(E: float = 2.0):
    rec, h, T, _ = _systole_orbit(E)
    T_formula = orbit_contribution(rec, 1, E).T_primitive
    T_closed = E / math.sqrt(E * E - 2) * SYSTOLE
    err = max(abs(T - T_formula), abs(T - T_closed)) / T_closed
    return err <= 1e-6, "relative 1e-6", {"word": rec.word, "T_measured": T,
                                          "T_formula": T_formula, "rel_err": err}


@_timed(5, "holonomy identity", 5.0)
def criterion_5(E: float = 2.0):
    rec, h, T, traj = _systole_orbit(E)
    hol = holonomy_integral(traj, T, h)
    err = abs(hol + T / E)
    return err <= 1e-6, "absolute 1e-6", {"word": rec.word, "holonomy": hol,
                                          "minus_T_over_E": -T / E, "err": err}


@_timed(6, "reduction identity", math.inf)
def criterion_6(n: int = 10_000, seed: int = 0):
    rng = np.random.default_rng(seed)
    phi = gaussian_pair(1.0)
    E = 1.7
    E0, psi = reduction_map(E, phi)
    lam = rng.uniform(0, 1000, n)
    N = rng.integers(1, 201, n).astype(float)
    lhs = np.asarray(phi.phi(np.sqrt(lam + 2 * N * N) - E * N))
    rhs = np.asarray(psi.phi(np.sqrt(lam / 2 + N * N) - E0 * N))
    pt = float(np.max(np.abs(lhs - rhs)))
    w_direct = weyl_term(E, 2, phi.hat_at_zero())
    w_red = reduced_weyl_term(E0, 2, psi.hat_at_zero())
    wt = abs(w_direct - w_red)
    return pt <= 1e-12 and wt <= 1e-12, "absolute 1e-12", {
        "pointwise_max": pt, "weyl_diff": wt, "samples": n}


@_timed(7, "Maass identity O(h^2)", 1.0)
def criterion_7(n: int = 10, seed: int = 0, h: float = 0.02):
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n):
        a1, a2, b1, b2, c = rng.uniform(-1, 1, 5)

        def u(x, y, a1=a1, a2=a2, b1=b1, b2=b2, c=c):
            return np.exp(a1 * x + a2 * y) * np.sin(b1 * x + b2 * y + c) + 1j * np.cos(a2 * x * y)

        z = complex(rng.uniform(-1, 1), rng.uniform(0.5, 2.0))
        N = int(rng.integers(1, 6))
        ratios.append(maass_identity_residual(N, u, z, h) / maass_identity_residual(N, u, z, h / 2))
    ok = all(3.6 <= q <= 4.4 for q in ratios)
    return ok, "ratio in [3.6, 4.4]", {"ratios": ratios}


@_timed(8, "conservation suite", 20.0)
def criterion_8(n: int = 100, seed: int = 0, tol: float = 1e-10, T: float = 5.0):
    """c drift in angle coordinates, energy drift in cotangent coordinates
    (energy is exact by construction in angle coordinates)."""
    rng = np.random.default_rng(seed)
    worst = {}
    for label, E in (("subcritical", 1.2), ("critical", SQRT2), ("supercritical", 2.0)):
        p = FlowParams(1.0, E)
        we = wc = 0.0
        for _ in range(n):
            s = PhaseState(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), rng.uniform(0, 2 * math.pi))
            wc = max(wc, conserved_quantities(integrate_flow(s, p, T, tol, n_samples=51)).c_drift)
            we = max(we, conserved_quantities(
                integrate_flow(s, p, T, tol, coords="cotangent", n_samples=51)).energy_drift)
        worst[label] = {"energy_drift": we, "c_drift": wc}
    p = FlowParams.from_E0(1.0, 2.0)
    q0 = complex(0.3, 1.1)

    def f(q):
        return math.exp(-hyperbolic_distance(q, q0) ** 2)

    spread = 0.0
    for _ in range(3):
        s = PhaseState(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), rng.uniform(0, 2 * math.pi))
        traj = integrate_flow(s, p, 20.0, tol=1e-12)
        vals = [mane_first_integral(HPoint(st.x, st.y), st.theta, 2.0, f) for _, st in traj.samples]
        spread = max(spread, max(vals) - min(vals))
    ok = all(v["energy_drift"] <= 100 * tol and v["c_drift"] <= 100 * tol for v in worst.values())
    ok = ok and spread <= 1e-7
    return ok, f"drift <= {100 * tol:g}, F_B spread <= 1e-7", {"drift": worst, "F_B_spread": spread}


@_timed(9, "degeneration across the critical level", math.inf)
def criterion_9(n: int = 50):
    G = _bolza_group()
    cl = enumerate_classes(G, math.exp(3.2))
    ell = cl[0].length
    phi = bump_hat_pair(5.5, 0.5, symmetric=True)
    lo, hi = 5.0, 6.0
    # orbit frequency E / sqrt(E^2 - 2) * ell equals hi at E*
    E_star = math.sqrt(2 * hi * hi / (hi * hi - ell * ell))
    sup_nonzero = []
    for E in np.linspace(SQRT2, E_star, n + 2)[1:-1]:
        rep = c1_supercritical(10, float(E), cl, phi)
        if rep.c1 != 0 or rep.breakdown:
            sup_nonzero.append(float(E))
    sub_nonzero = []
    for E in np.linspace(1.0, SQRT2, n + 2)[1:-1]:
        E = float(E)
        if 2 * math.pi * E / math.sqrt(2 - E * E) <= hi:
            continue
        rep = coefficients_subcritical(10, E, 2, phi)
        if any(b["c0_term"] != 0 or b["c1_term"] != 0 for b in rep.breakdown) or rep.diagnostics["k_max"]:
            sub_nonzero.append(E)
    ok = not sup_nonzero and not sub_nonzero
    return ok, "exact zeros", {"E_star": E_star, "support": (lo, hi),
                               "supercritical_nonzero": sup_nonzero,
                               "subcritical_nonzero": sub_nonzero}


def criterion_10() -> CriterionResult:
    """Excluded criterion. Demonstrates the refusal path: supercritical Y_N at
    large N needs eigenvalues far beyond the shipped window."""
    t0 = time.perf_counter()
    L = _bolza_spectrum()
    phi = gaussian_pair(1.0)
    refused = []
    for N in (20, 50, 100):
        try:
            Y_N_exact(interior_eigenvalues(N, 2), L, 2.0, N, phi)
        except SpectrumWindowError:
            refused.append(N)
    return CriterionResult(10, "high-precision supercritical Y_N (excluded)", True,
                           "not reproducible with the shipped spectrum window",
                           {"refused_N": refused}, time.perf_counter() - t0,
                           status="EXCLUDED")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(emit: Callable[[str], None] = print) -> list:
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for crit in CRITERIA:
            res = crit()
            emit(res.line())
            results.append(res)
    return results
