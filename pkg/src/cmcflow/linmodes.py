"""Linearized mean curvature equation on de Sitter space.

The linearization of H = d + 1 about dS is Box phi + (d + 1) phi = 0.  In the
coordinates (t, omega) with metric -dt^2/<t>^2 + <t>^2 domega^2,

    <t>^2 phi_tt + (d+1) t phi_t - <t>^-2 Lap_S phi = (d+1) phi,

so a spherical-harmonic component psi with -Lap_S Y = lambda Y obeys

    <t>^2 psi'' + (d+1) t psi' + (lambda/<t>^2) psi = (d+1) psi,

with lambda = l(l + d - 1).  Modes are integrated in the renormalized
variables u = psi/<t>, v = <t>^2 u', for which

    u' = v/<t>^2,   v' = -((d+1) t v + (lambda - d) u)/<t>^2,

and the mode energy E = v^2 + (lambda - d) u^2 decays at the rate
dE/dt = -2 (d+1) t v^2/<t>^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .dsgeom import jb


def eigenvalue(ell: int, d: int) -> float:
    """Eigenvalue l(l + d - 1) of -Lap on the unit d-sphere."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    return float(ell * (ell + d - 1))


@dataclass(frozen=True)
class ModeState:
    ell: int
    d: int
    t: float
    psi: float
    dpsi: float

    @property
    def lam(self) -> float:
        return eigenvalue(self.ell, self.d)


def mode_rhs(m: ModeState) -> float:
    """psi'' = ((d+1) psi - (d+1) t psi' - lambda psi/<t>^2)/<t>^2."""
    b2 = 1.0 + m.t * m.t
    d1 = m.d + 1
    return (d1 * m.psi - d1 * m.t * m.dpsi - m.lam * m.psi / b2) / b2


def mode_residual(t, psi, dpsi, ddpsi, ell: int, d: int):
    """Residual of the mode equation for a given trajectory and derivatives."""
    b2 = 1.0 + np.square(t)
    lam = eigenvalue(ell, d)
    return b2 * ddpsi + (d + 1) * t * dpsi + lam * psi / b2 - (d + 1) * psi


def to_renormalized(t, psi, dpsi):
    """(u, v) = (psi/<t>, <t>^2 d/dt(psi/<t>))."""
    b = jb(t)
    u = psi / b
    v = b * dpsi - t * psi / b
    return u, v


def from_renormalized(t, u, v):
    b = jb(t)
    return b * u, (t * u + v) / b


def mode_energy(m: ModeState) -> float:
    """<t>^4 (psi/<t>)'^2 + (lambda - d)(psi/<t>)^2."""
    u, v = to_renormalized(m.t, m.psi, m.dpsi)
    return float(v * v + (m.lam - m.d) * u * u)


def energy_from(t, psi, dpsi, ell: int, d: int):
    u, v = to_renormalized(t, psi, dpsi)
    return v * v + (eigenvalue(ell, d) - d) * u * u


def ell0_exact(t, C: float, Cp: float, t_ref: float, d: int):
    """l = 0 solution t (Cp + int_{t_ref}^t C/(s^2 <s>^(d+1)) ds)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if t_ref == 0 or np.any(t_arr == 0) or np.any(np.sign(t_arr) != np.sign(t_ref)):
        raise ValueError("t and t_ref must be nonzero with the same sign")
    out = np.empty_like(t_arr)
    for i, ti in enumerate(t_arr):
        if C == 0.0:
            out[i] = Cp * ti
            continue
        val, _ = quad(lambda s: 1.0 / (s * s * (1.0 + s * s) ** ((d + 1) / 2.0)), t_ref, ti, epsabs=1e-13, epsrel=1e-13, limit=200)
        out[i] = ti * (Cp + C * val)
    return out if np.ndim(t) else float(out[0])


def ell0_exact_derivative(t, C: float, Cp: float, t_ref: float, d: int):
    """d/dt of :func:`ell0_exact`."""
    t = np.asarray(t, dtype=float)
    hat = ell0_exact(t, C, Cp, t_ref, d) / t
    return hat + C / (t * (1.0 + t * t) ** ((d + 1) / 2.0))


@dataclass(frozen=True)
class ModeRun:
    ell: int
    d: int
    t: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    dense: object = None

    @property
    def energy(self) -> np.ndarray:
        return self.v**2 + (eigenvalue(self.ell, self.d) - self.d) * self.u**2

    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.psi, self.dpsi, self.energy])


def _mode_fun(lam: float, d: int):
    def fun(t, y):
        b2 = 1.0 + t * t
        return [y[1] / b2, -((d + 1) * t * y[1] + (lam - d) * y[0]) / b2]

    return fun


def integrate_mode(
    m0: ModeState,
    t_end: float,
    t_eval=None,
    rtol: float = 1e-10,
    atol: float = 1e-14,
) -> ModeRun:
    """Integrate one mode from m0.t to t_end with an embedded RK 5(4) pair."""
    u0, v0 = to_renormalized(m0.t, m0.psi, m0.dpsi)
    sol = solve_ivp(
        _mode_fun(m0.lam, m0.d),
        (m0.t, t_end),
        [u0, v0],
        method="RK45",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=True,
    )
    if sol.status < 0:
        raise RuntimeError(sol.message)
    psi, dpsi = from_renormalized(sol.t, sol.y[0], sol.y[1])
    return ModeRun(m0.ell, m0.d, sol.t, psi, dpsi, sol.y[0], sol.y[1], sol.sol)


# ---------------------------------------------------------------------------
# d = 1 fields on the circle


@dataclass(frozen=True)
class LinearField1D:
    t: float
    phi: np.ndarray
    dphi: np.ndarray

    def __post_init__(self):
        n = len(self.phi)
        if n < 16 or n & (n - 1):
            raise ValueError("N must be a power of two and at least 16")
        if len(self.dphi) != n:
            raise ValueError("phi and dphi must have the same length")

    @property
    def n(self) -> int:
        return len(self.phi)

    @property
    def theta(self) -> np.ndarray:
        return circle_grid(self.n)

    @property
    def spectrum(self):
        return np.fft.rfft(self.phi), np.fft.rfft(self.dphi)


def circle_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def spectral_d2(f: np.ndarray) -> np.ndarray:
    """Second theta-derivative of a periodic grid function."""
    n = len(f)
    k = np.fft.rfftfreq(n, 1.0 / n)
    fh = np.fft.rfft(f)
    return np.fft.irfft(-(k**2) * fh, n)


@dataclass(frozen=True)
class LinearTrajectory:
    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    theta: np.ndarray


def _fundamental_solutions(ks: np.ndarray, t0: float, times: np.ndarray, rtol: float):
    """Mode solutions with data (1, 0) and (0, 1) at t0 for every k, sampled at times.

    All modes are advanced together as one decoupled system in the
    renormalized variables.  Returns (psi, dpsi) arrays of shape
    (2, len(times), len(ks)).
    """
    lam = ks.astype(float) ** 2
    m = len(ks)
    u0 = np.empty(2 * m)
    v0 = np.empty(2 * m)
    for j, data in enumerate(((1.0, 0.0), (0.0, 1.0))):
        u, v = to_renormalized(t0, *data)
        u0[j * m:(j + 1) * m] = u
        v0[j * m:(j + 1) * m] = v
    lam2 = np.concatenate([lam, lam])

    def fun(t, y):
        b2 = 1.0 + t * t
        u, v = y[: 2 * m], y[2 * m:]
        return np.concatenate([v / b2, -(2.0 * t * v + (lam2 - 1.0) * u) / b2])

    sol = solve_ivp(fun, (t0, times[-1]), np.concatenate([u0, v0]), method="RK45", rtol=rtol, atol=1e-15, t_eval=times)
    if sol.status < 0:
        raise RuntimeError(sol.message)
    u = sol.y[: 2 * m].T.reshape(len(times), 2, m).transpose(1, 0, 2)
    v = sol.y[2 * m:].T.reshape(len(times), 2, m).transpose(1, 0, 2)
    return from_renormalized(times[None, :, None], u, v)


def evolve_linear_1d(
    field0: LinearField1D,
    t_end: float,
    t_eval=None,
    method: str = "modes",
    rtol: float = 1e-10,
) -> LinearTrajectory:
    """Evolve Box phi + 2 phi = 0 on dS_2 from field0.

    ``method="modes"`` diagonalizes in Fourier modes and integrates each mode
    exactly as an ODE; ``method="mol"`` is a collocation method of lines.
    """
    n = field0.n
    times = np.atleast_1d(np.asarray(t_eval if t_eval is not None else [t_end], dtype=float))
    t0 = field0.t
    if method == "modes":
        ph, dph = field0.spectrum
        ks = np.arange(len(ph))
        psi, dpsi = _fundamental_solutions(ks, t0, times, rtol)
        phi_hat = ph * psi[0] + dph * psi[1]
        dphi_hat = ph * dpsi[0] + dph * dpsi[1]
        phi = np.fft.irfft(phi_hat, n, axis=1)
        dphi = np.fft.irfft(dphi_hat, n, axis=1)
        return LinearTrajectory(times, phi, dphi, field0.theta)
    if method == "mol":

        def fun(t, y):
            p, q = y[:n], y[n:]
            b2 = 1.0 + t * t
            acc = (2.0 * p - 2.0 * t * q + spectral_d2(p) / b2) / b2
            return np.concatenate([q, acc])

        sol = solve_ivp(
            fun, (t0, times[-1]), np.concatenate([field0.phi, field0.dphi]), method="RK45", rtol=rtol, atol=1e-13, t_eval=times
        )
        if sol.status < 0:
            raise RuntimeError(sol.message)
        return LinearTrajectory(times, sol.y[:n].T, sol.y[n:].T, field0.theta)
    raise ValueError(f"unknown method {method!r}")


def light_cone_reach(t0: float) -> float:
    """Angular distance a null ray covers on [t0, inf): pi/2 - arctan t0."""
    return 0.5 * np.pi - np.arctan(t0)


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)

    def h(s):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    a, b = h(x), h(1.0 - x)
    return a / (a + b)


def angular_distance(theta, center):
    return np.abs((np.asarray(theta) - center + np.pi) % (2.0 * np.pi) - np.pi)


def plateau_bump(theta, center: float, plateau: float, support: float):
    """1 within ``plateau`` of center, 0 beyond ``support``, smooth in between."""
    r = angular_distance(theta, center)
    return 1.0 - smooth_step((r - plateau) / (support - plateau))


def _harmonic(theta, m: int, ell: int):
    return np.cos(ell * theta) if m == 0 else np.sin(ell * theta)


@dataclass(frozen=True)
class MultiBump:
    field: LinearField1D
    eps: np.ndarray
    points: np.ndarray
    plateau: float
    support: float
    projections: np.ndarray


def multibump_data(
    points,
    eps=None,
    forbidden_harmonics=(),
    t0: float = 4.0,
    n: int = 1024,
    plateau: float = 0.3,
    support: float = 0.8,
) -> MultiBump:
    """Bump data phi = t0 sum eps_i b_i, phi_t = sum eps_i b_i.

    With forbidden harmonics (m, l) (m = 0 for cos, 1 for sin), eps_1 is kept
    and eps_2.. are solved so that the data is orthogonal to each of them.
    Inside a plateau the solution is eps_i t until the light cone from the
    plateau edge arrives, which it never does for rays deeper than
    pi/2 - arctan t0.
    """
    points = np.asarray(points, dtype=float)
    k = len(points)
    theta = circle_grid(n)
    bumps = np.array([plateau_bump(theta, p, plateau, support) for p in points])
    for i in range(k):
        for j in range(i + 1, k):
            if angular_distance(points[i], points[j]) < 2 * support:
                raise ValueError("bump supports overlap")
    eps = np.ones(k) if eps is None else np.asarray(eps, dtype=float).copy()
    w = 2.0 * np.pi / n
    harmonics = np.array([_harmonic(theta, m, ell) for m, ell in forbidden_harmonics]).reshape(len(forbidden_harmonics), n)
    if len(forbidden_harmonics):
        if k < len(forbidden_harmonics) + 1:
            raise ValueError("need at least one more bump than constraints")
        # projections of each bump on each harmonic; solve for eps_2.. with eps_1 fixed
        P = harmonics @ bumps.T * w
        rhs = -P[:, 0] * eps[0]
        sol, *_ = np.linalg.lstsq(P[:, 1:], rhs, rcond=None)
        if np.linalg.norm(P[:, 1:] @ sol - rhs) > 1e-12 * max(1.0, np.linalg.norm(rhs)):
            raise ValueError("orthogonality constraints are infeasible")
        eps[1:] = sol
    profile = eps @ bumps
    proj = harmonics @ profile * w * t0 if len(forbidden_harmonics) else np.zeros(0)
    field = LinearField1D(t0, t0 * profile, profile)
    return MultiBump(field, eps, points, plateau, support, proj)


def harmonic_projections(phi: np.ndarray, harmonics) -> np.ndarray:
    """Trapezoid projections of grid functions (last axis) on cos/sin harmonics."""
    n = phi.shape[-1]
    theta = circle_grid(n)
    h = np.array([_harmonic(theta, m, ell) for m, ell in harmonics])
    return np.tensordot(phi, h.T, axes=([-1], [0])) * (2.0 * np.pi / n)
