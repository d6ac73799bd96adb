"""Magnetic geodesic flow on the hyperbolic plane.

Two descriptions are provided and cross-checked:

* the ODE on the energy shell in angle coordinates (x, y, theta), or in
  cotangent coordinates (x, y, p_x, p_y) when energy drift is of interest;
* right translation by exp(t (alpha e1 + beta e3)) in PSL(2,R), evaluated
  in closed form.

States and group elements are related by the chart g = N(x) A(y) K(theta - pi/2),
so that g maps i to x + iy and the upward direction at i to direction theta.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, IntegrationError, RegimeError
from .geometry import (
    HPoint,
    MoebiusElement,
    apply_isometry,
    classify_regime,
    dilation,
    geodesic_point,
    rotation,
    translation,
)

E1 = np.array([[0.5, 0.0], [0.0, -0.5]])
E3 = np.array([[0.0, 0.5], [-0.5, 0.0]])
NILPOTENT_CUTOFF = 1e-10


@dataclass(frozen=True)
class FlowParams:
    """Field strength B and Hamiltonian value E > 1, with derived constants."""

    B: float
    E: float
    E0: float = field(init=False)
    alpha: float = field(init=False)
    beta: float = field(init=False)
    delta: Optional[float] = field(init=False)  # None unless E0 > B^2

    def __post_init__(self):
        if not self.B > 0:
            raise DomainError("B must be positive")
        if not self.E > 1:
            raise DomainError("E must exceed 1")
        E0 = self.E * self.E - 1.0
        set_ = object.__setattr__
        set_(self, "E0", E0)
        set_(self, "alpha", math.sqrt(E0) / self.E)
        set_(self, "beta", -self.B / self.E)
        gap = E0 - self.B * self.B
        set_(self, "delta", math.sqrt(gap) / self.E if gap > 0 else None)
        if abs(self.alpha ** 2 - self.beta ** 2 - gap / self.E ** 2) > 1e-14:
            raise DomainError("inconsistent flow constants")

    @classmethod
    def from_E0(cls, E0: float, B: float) -> "FlowParams":
        return cls(B=B, E=math.sqrt(E0 + 1.0))

    @property
    def regime(self):
        return classify_regime(self.E0, self.B)


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"state needs y > 0, got {self.y!r}")

    def momenta(self, E0: float):
        r = math.sqrt(E0) / self.y
        return r * math.cos(self.theta), r * math.sin(self.theta)


@dataclass(frozen=True)
class Trajectory:
    """Samples of a solution; arrays are read-only."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    params: FlowParams
    coords: str = "angle"
    px: Optional[np.ndarray] = None
    py: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("t", "x", "y", "theta", "px", "py"):
            a = getattr(self, name)
            if a is not None:
                a = np.asarray(a, dtype=float)
                a.setflags(write=False)
                object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.t)

    @property
    def samples(self):
        return [(float(t), PhaseState(float(x), float(y), float(th)))
                for t, x, y, th in zip(self.t, self.x, self.y, self.theta)]

    def state_at(self, t: float) -> PhaseState:
        """Dense-output state at time t (angle coordinates)."""
        if self.dense is None:
            raise ValueError("trajectory was built without dense output")
        return PhaseState(*self.dense(t))

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "theta"])
        for row in zip(self.t, self.x, self.y, self.theta):
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


class Drift(NamedTuple):
    energy_drift: float
    c_drift: float


def hamiltonian(x, y, p_x, p_y):
    """H = sqrt(y^2 (p_x^2 + p_y^2) + 1); vectorized."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("hamiltonian needs y > 0")
    h = np.sqrt(y * y * (np.asarray(p_x) ** 2 + np.asarray(p_y) ** 2) + 1.0)
    return float(h) if h.ndim == 0 else h


def flow_rhs(s: PhaseState, p: FlowParams):
    a = p.alpha
    return (a * s.y * math.cos(s.theta),
            a * s.y * math.sin(s.theta),
            -a * math.cos(s.theta) - p.B / p.E)


def _angle_rhs(p):
    a, b = p.alpha, p.B / p.E

    def f(t, u):
        c, s = math.cos(u[2]), math.sin(u[2])
        return [a * u[1] * c, a * u[1] * s, -a * c - b]
    return f


def _cotangent_rhs(p):
    B = p.B

    def f(t, u):
        x, y, px, py = u
        q = px * px + py * py
        H = math.sqrt(y * y * q + 1.0)
        return [y * y * px / H, y * y * py / H, B * py / H, (-y * q - B * px) / H]
    return f


def integrate_flow(s0: PhaseState, p: FlowParams, T: float, tol: float = 1e-10,
                   coords: str = "angle", n_samples: int = 201,
                   t_eval=None) -> Trajectory:
    """Integrate the flow with DOP853 (rtol = atol = tol) and dense output.

    ``coords="cotangent"`` integrates Hamilton's equations for (x, y, p_x, p_y),
    in which the energy is not built in and its drift is a real diagnostic.
    """
    if not (1e-13 <= tol <= 1e-3):
        raise DomainError("tol must lie in [1e-13, 1e-3]")
    if coords not in ("angle", "cotangent"):
        raise DomainError(f"unknown coordinates {coords!r}")
    if p.regime.near_critical and p.regime.regime != "Horocycle":
        warnings.warn("near-critical energy, expect slow asymptotics", RuntimeWarning)
    if t_eval is None:
        t_eval = np.linspace(0.0, T, n_samples)
    if coords == "angle":
        u0 = [s0.x, s0.y, s0.theta]
        rhs = _angle_rhs(p)
    else:
        u0 = [s0.x, s0.y, *s0.momenta(p.E0)]
        rhs = _cotangent_rhs(p)
    sol = solve_ivp(rhs, (0.0, T), u0, method="DOP853", rtol=tol, atol=tol,
                    t_eval=t_eval, dense_output=True)
    diag = {"nfev": int(sol.nfev), "status": int(sol.status),
            "message": sol.message, "tol": tol}
    traj = _make_trajectory(sol.t, sol.y, p, coords, diag, sol.sol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}", partial=traj)
    return traj


def _make_trajectory(t, u, p, coords, diag, dense):
    if coords == "angle":
        x, y, th = u
        px = py = None
        dense_angle = dense
    else:
        x, y, px, py = u
        th = np.unwrap(np.arctan2(py, px)) if len(t) else np.array([])

        def dense_angle(tt, _d=dense):
            v = _d(tt)
            return np.array([v[0], v[1], math.atan2(v[3], v[2])])
    return Trajectory(t=t, x=x, y=y, theta=th, params=p, coords=coords,
                      px=px, py=py, diagnostics=diag, dense=dense_angle)


def c_invariant(y, theta, p: FlowParams):
    """c = theta_dot / y, constant along every trajectory."""
    return (-p.alpha * np.cos(theta) - p.B / p.E) / np.asarray(y)


def conserved_quantities(traj: Trajectory) -> Drift:
    """Maximum absolute drift of H and of c = theta_dot / y along the samples."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    p = traj.params
    if traj.coords == "cotangent":
        px, py = traj.px, traj.py
    else:
        r = math.sqrt(p.E0) / traj.y
        px, py = r * np.cos(traj.theta), r * np.sin(traj.theta)
    H = hamiltonian(traj.x, traj.y, px, py)
    c = c_invariant(traj.y, traj.theta, p)
    return Drift(float(np.max(np.abs(H - p.E))), float(np.max(np.abs(c - c[0]))))


def circle_period(p: FlowParams) -> float:
    """Period of the closed circular orbits, 2 pi E / sqrt(B^2 - E0)."""
    if not p.E0 < p.B ** 2:
        raise RegimeError("orbits are closed circles only when E0 < B^2")
    return 2 * math.pi * p.E / math.sqrt(p.B ** 2 - p.E0)


# Pseudosphere description ----------------------------------------------------

def pseudosphere_integral(r, phidot, B):
    """I = sinh^2 r * phi_dot + B cosh r."""
    r = np.asarray(r)
    return np.sinh(r) ** 2 * np.asarray(phidot) + B * np.cosh(r)


def integrate_pseudosphere(r0, phi0, rdot0, phidot0, B, T, tol=1e-11, n_samples=201):
    """Euler-Lagrange equations in geodesic polar coordinates.

    Returns (t, r, phi, rdot, phidot). Independent of the half-plane ODE.
    """
    def f(t, u):
        r, phi, rd, pd = u
        sh, ch = math.sinh(r), math.cosh(r)
        return [rd, pd, sh * pd * (ch * pd + B), -rd * (2 * ch * pd + B) / sh]

    te = np.linspace(0.0, T, n_samples)
    sol = solve_ivp(f, (0.0, T), [r0, phi0, rdot0, phidot0], method="DOP853",
                    rtol=tol, atol=tol, t_eval=te)
    if sol.status != 0:
        raise IntegrationError(sol.message, partial=sol)
    return (sol.t, *sol.y)


# Group picture ---------------------------------------------------------------

def generator(alpha: float, beta: float) -> np.ndarray:
    return alpha * E1 + beta * E3


def exp_generator(t: float, alpha: float, beta: float) -> np.ndarray:
    """exp(t (alpha e1 + beta e3)) in closed form.

    X^2 = (alpha^2 - beta^2)/4 * I, so exp(tX) = C I + S t X with
    C, S = cosh, sinh(sqrt(s))/sqrt(s) (s > 0) or their trigonometric
    counterparts (s < 0), s = t^2 (alpha^2 - beta^2)/4.
    """
    X = generator(alpha, beta)
    disc = alpha * alpha - beta * beta
    s = t * t * disc / 4.0
    if abs(disc) < NILPOTENT_CUTOFF:
        # affine regime: short power series in s
        C = 1.0 + s / 2 + s * s / 24 + s ** 3 / 720
        S = 1.0 + s / 6 + s * s / 120 + s ** 3 / 5040
    elif s > 0:
        r = math.sqrt(s)
        C, S = math.cosh(r), math.sinh(r) / r
    else:
        r = math.sqrt(-s)
        C, S = math.cos(r), (math.sin(r) / r if r else 1.0)
    return C * np.eye(2) + S * t * X


def group_flow(g: MoebiusElement, t: float, alpha: float, beta: float) -> MoebiusElement:
    return g @ MoebiusElement.from_matrix(exp_generator(t, alpha, beta))


def state_to_group(s: PhaseState) -> MoebiusElement:
    return translation(s.x) @ dilation(s.y) @ rotation(s.theta - math.pi / 2)


def group_to_state(g: MoebiusElement) -> PhaseState:
    z = apply_isometry(g, HPoint(0.0, 1.0))
    k = (dilation(z.y).inverse() @ translation(-z.x) @ g).matrix
    phi = 2.0 * math.atan2(k[0, 1], k[0, 0])
    return PhaseState(z.x, z.y, math.remainder(phi + math.pi / 2, 2 * math.pi))


def state_group_isomorphism(obj):
    """PhaseState -> MoebiusElement or back, depending on the argument type."""
    if isinstance(obj, PhaseState):
        return state_to_group(obj)
    if isinstance(obj, MoebiusElement):
        return group_to_state(obj)
    raise TypeError("expected PhaseState or MoebiusElement")


def conjugate_to_geodesic(p: FlowParams):
    """(delta, C) with C (alpha e1 + beta e3) C^-1 = delta e1."""
    if p.delta is None:
        raise RegimeError("not in hypercyclic regime (E0 <= B^2)")
    a, b = p.alpha, p.beta
    d = math.sqrt(a * a - b * b)
    n = math.sqrt(2 * d * (a + d))
    P = MoebiusElement.from_entries((a + d) / n, -b / n, -b / n, (a + d) / n)
    return d, P.inverse()


def mane_first_integral(p, xi: float, B: float, f: Callable) -> float:
    """First integral for E0 = 1 and B > 1: f at the center of the magnetic
    circle through (p, xi). The center lies on the clockwise normal."""
    if not B > 1:
        raise DomainError("evaluation distance diverges at or below B=1")
    s = 0.5 * math.log((B + 1) / (B - 1))
    q = geodesic_point(p, xi - math.pi / 2, s)
    return f(q)


# Closed orbits in a hyperbolic class ------------------------------------------

def _diagonalizer(h: MoebiusElement):
    """(P, N) with h = P diag(N^1/2, N^-1/2) P^-1, P in SL(2,R)."""
    m = h.matrix
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    t = m[0, 0] + m[1, 1]
    if not t > 2:
        raise DomainError("element is not hyperbolic")
    lp = (t + math.sqrt(t * t - 4)) / 2
    lm = 1 / lp

    def eigvec(lam):
        a, b, c, d = m.ravel()
        # pick the better-conditioned row of (m - lam I) v = 0
        if abs(b) + abs(a - lam) > abs(c) + abs(d - lam):
            v = np.array([b, lam - a])
        else:
            v = np.array([lam - d, c])
        return v / np.linalg.norm(v)

    P = np.column_stack([eigvec(lp), eigvec(lm)])
    det = np.linalg.det(P)
    if det < 0:
        P[:, 1] *= -1
        det = -det
    return P / math.sqrt(det), lp * lp


def closed_orbit_state(h: MoebiusElement, p: FlowParams) -> PhaseState:
    """Initial state on the magnetic hypercycle invariant under h."""
    _, C = conjugate_to_geodesic(p)
    P, _ = _diagonalizer(h)
    return group_to_state(MoebiusElement.from_matrix(P) @ C)


def measure_return_time(h: MoebiusElement, p: FlowParams, tol: float = 1e-12,
                        T_guess: Optional[float] = None):
    """Integrate from :func:`closed_orbit_state` and locate the time T with
    z(T) = h z(0). Returns (T, trajectory).

    The event is found on the dense output in coordinates w = P^-1 z in which
    h is the dilation w -> N w.
    """
    P, N = _diagonalizer(h)
    Pinv = MoebiusElement.from_matrix(P).inverse()
    s0 = closed_orbit_state(h, p)
    logN = math.log(N)
    if T_guess is None:
        T_guess = logN / p.delta
    traj = integrate_flow(s0, p, 1.5 * T_guess, tol=max(tol, 1e-13))

    def g(t):
        st = traj.state_at(t)
        w = apply_isometry(Pinv, complex(st.x, st.y))
        return math.log(abs(w))

    g0 = g(0.0)
    T = brentq(lambda t: g(t) - g0 - logN, 0.5 * T_guess, 1.5 * T_guess,
               xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return T, traj


def holonomy_integral(traj: Trajectory, T: float, h: MoebiusElement) -> float:
    """Line integral of A = B dx/y along the orbit segment [0, T] minus
    2 arg(c z0 + d), with (c, d) from whichever of h, h^-1 maps z(0) to z(T)."""
    p = traj.params
    val, _ = quad(lambda t: p.B * p.alpha * math.cos(traj.state_at(t).theta),
                  0.0, T, epsabs=1e-13, epsrel=1e-13, limit=400)
    s0, sT = traj.state_at(0.0), traj.state_at(T)
    z0, zT = complex(s0.x, s0.y), complex(sT.x, sT.y)
    best = min((h, h.inverse()), key=lambda k: abs(apply_isometry(k, z0) - zT))
    return val - 2 * np.angle(best.c * z0 + best.d)
