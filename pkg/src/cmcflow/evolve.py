"""Nonlinear evolution of normal graphs over dS_2 (d = 1).

The unknown is the normal height phi(t, theta) of M = {(1 - phi) x}.  At
every collocation point the mean curvature is affine in phi_tt, so two
curvature evaluations give the acceleration that keeps H = 2.  Space is
Fourier collocation on the circle; time is the adaptive Dormand-Prince 5(4)
pair from scipy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import igm
from .dsgeom import jb
from .linmodes import LinearField1D, circle_grid, evolve_linear_1d, light_cone_reach, smooth_step
from .meanc import DegenerateMetric, TimelikeViolation, mean_curvature_fields, translated_ds_jet
from .stress import weighted_energy

D = 1
H_TARGET = D + 1.0


class GuardBreach(RuntimeError):
    """The evolution left the regime where the graph equation is hyperbolic."""

    def __init__(self, message: str, t: float, state: np.ndarray | None = None):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t
        self.state = state


class StepFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class GraphField1D:
    t: float
    phi: np.ndarray
    dphi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        dphi = np.asarray(self.dphi, dtype=float)
        n = phi.size
        if n < 16 or n & (n - 1):
            raise ValueError("N must be a power of two and at least 16")
        if dphi.shape != phi.shape:
            raise ValueError("phi and dphi must have the same shape")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
            raise ValueError("fields must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "dphi", dphi)

    @property
    def n(self) -> int:
        return self.phi.size

    @property
    def theta(self) -> np.ndarray:
        return circle_grid(self.n)


# ------------------------------------------------------------ spectral kit


def spectral_derivative(f: np.ndarray, order: int = 1) -> np.ndarray:
    """theta-derivative along the last axis; odd orders drop the Nyquist mode."""
    n = f.shape[-1]
    k = np.fft.rfftfreq(n, 1.0 / n)
    fh = np.fft.rfft(f, axis=-1) * (1j * k) ** order
    if order % 2 == 1:
        fh[..., -1] = 0.0
    return np.fft.irfft(fh, n, axis=-1)


def dealias(f: np.ndarray) -> np.ndarray:
    """Two-thirds rule: zero every mode with |k| > N/3."""
    n = f.shape[-1]
    fh = np.fft.rfft(f, axis=-1)
    fh[..., np.arange(fh.shape[-1]) > n // 3] = 0.0
    return np.fft.irfft(fh, n, axis=-1)


def _circle_frame(theta):
    omega = np.stack([np.cos(theta), np.sin(theta)], -1)
    basis = np.stack([-np.sin(theta), np.cos(theta)], -1)[..., None, :]
    return omega, basis


def curvature(t, theta, phi, phi_t, phi_th, phi_tt, phi_tth, phi_thth) -> np.ndarray:
    """H of the normal graph at every collocation point from the full 2-jet."""
    omega, basis = _circle_frame(theta)
    t = np.broadcast_to(np.asarray(t, dtype=float), np.shape(phi))
    grad = np.stack([phi_t, phi_th], -1)
    hess = np.stack([np.stack([phi_tt, phi_tth], -1), np.stack([phi_tth, phi_thth], -1)], -2)
    return mean_curvature_fields(t, omega, basis, phi, grad, hess)


@dataclass(frozen=True)
class EvolveOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    kappa_min: float = 0.1
    dealias: bool = True
    max_step: float = np.inf
    snapshot_times: tuple = ()
    diag_count: int = 60


def acceleration(t: float, phi: np.ndarray, dphi: np.ndarray, kappa_min: float = 0.1, filt: bool = True):
    """(phi_tt, kappa) solving H = 2 pointwise; kappa is the phi_tt coefficient of H."""
    theta = circle_grid(phi.size)
    phi_th = spectral_derivative(phi, 1)
    phi_thth = spectral_derivative(phi, 2)
    phi_tth = spectral_derivative(dphi, 1)
    try:
        h0 = curvature(t, theta, phi, dphi, phi_th, np.zeros_like(phi), phi_tth, phi_thth)
        h1 = curvature(t, theta, phi, dphi, phi_th, np.ones_like(phi), phi_tth, phi_thth)
    except (TimelikeViolation, DegenerateMetric) as exc:
        raise GuardBreach(str(exc), t, np.concatenate([phi, dphi])) from exc
    kappa = h1 - h0
    if np.min(np.abs(kappa)) < kappa_min:
        raise GuardBreach("principal coefficient below kappa_min", t, np.concatenate([phi, dphi]))
    acc = (H_TARGET - h0) / kappa
    if filt:
        acc = dealias(acc)
    return acc, kappa


def rhs_field(state: GraphField1D, opts: EvolveOptions | None = None) -> np.ndarray:
    """Grid values of phi_tt for the state."""
    opts = opts or EvolveOptions()
    acc, _ = acceleration(state.t, state.phi, state.dphi, opts.kappa_min, opts.dealias)
    return acc


# ------------------------------------------------------------ trajectories


@dataclass
class Trajectory:
    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    snapshots: dict
    energy: np.ndarray
    supnorm: np.ndarray
    ushift_range: np.ndarray
    nfev: int
    t0: float
    dense: object = field(default=None, repr=False)
    options: EvolveOptions = field(default_factory=EvolveOptions)

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return circle_grid(self.n)

    def at(self, t: float) -> GraphField1D:
        y = self.dense(t)
        n = self.n
        return GraphField1D(float(t), y[:n], y[n:])


def diag_times(t0: float, t_end: float, count: int) -> np.ndarray:
    return np.unique(np.concatenate([np.geomspace(t0, t_end, count), [t0, t_end]]))


def geometric_snapshots(t0: float, t_end: float) -> np.ndarray:
    """1, 2, 4, ... inside [t0, t_end], plus both ends."""
    k = np.arange(0, int(np.floor(np.log2(max(t_end, 1.0)))) + 1)
    pts = 2.0**k
    pts = pts[(pts > t0) & (pts < t_end)]
    return np.unique(np.concatenate([[t0], pts, [t_end]]))


def evolve(state0: GraphField1D, t_end: float, opts: EvolveOptions | None = None) -> Trajectory:
    """Advance state0 to t_end and record diagnostics on a geometric time grid."""
    opts = opts or EvolveOptions()
    if t_end <= state0.t:
        raise ValueError("t_end must exceed the initial time")
    n = state0.n

    def fun(t, y):
        acc, _ = acceleration(t, y[:n], y[n:], opts.kappa_min, opts.dealias)
        return np.concatenate([y[n:], acc])

    times = diag_times(state0.t, t_end, opts.diag_count)
    snaps = np.asarray(opts.snapshot_times) if len(opts.snapshot_times) else geometric_snapshots(state0.t, t_end)
    times = np.unique(np.concatenate([times, snaps]))
    sol = solve_ivp(
        fun,
        (state0.t, t_end),
        np.concatenate([state0.phi, state0.dphi]),
        method="RK45",
        rtol=opts.rtol,
        atol=opts.atol,
        t_eval=times,
        dense_output=True,
        max_step=opts.max_step,
    )
    if sol.status < 0:
        raise StepFailure(sol.message)
    phi = sol.y[:n].T
    dphi = sol.y[n:].T
    energy = np.empty(len(times))
    sup = np.max(np.abs(phi), axis=1)
    urange = np.empty(len(times))
    for i, t in enumerate(times):
        acc, _ = acceleration(t, phi[i], dphi[i], 0.0, opts.dealias)
        f = surface_igm_field(t, phi[i], dphi[i], acc)
        energy[i] = weighted_energy(t, f.phi)
        u = ushift_field(t, phi[i])
        urange[i] = u.max() - u.min()
    snapshots = {float(s): GraphField1D(float(s), *np.split(sol.sol(s), 2)) for s in snaps}
    return Trajectory(times, phi, dphi, snapshots, energy, sup, urange, sol.nfev, state0.t, sol.sol, opts)


# ------------------------------------------------------------ geometry of M


def surface_points(t, phi) -> np.ndarray:
    """Ambient points (1 - phi) x(t, theta) on the collocation grid."""
    theta = circle_grid(np.shape(phi)[-1])
    t = np.asarray(t, dtype=float)
    one = 1.0 - np.asarray(phi)
    b = jb(t)
    tt = np.broadcast_to(t[..., None] if t.ndim else t, one.shape)
    bb = np.broadcast_to(b[..., None] if t.ndim else b, one.shape)
    return np.stack([one * tt, one * bb * np.cos(theta), one * bb * np.sin(theta)], -1)


def ushift_field(t, phi) -> np.ndarray:
    """u = X^0 - |X_spatial| of the surface point over each base point."""
    return (1.0 - np.asarray(phi)) * (t - jb(t))


@dataclass(frozen=True)
class SurfaceIGM:
    phi: np.ndarray  # covariant frame components at the Gauss image
    gauss: np.ndarray  # Gauss image points p = -N
    tp: np.ndarray  # extrinsic time of p
    thetap: np.ndarray
    V: np.ndarray  # V[j, i, a]: frame components at p of d p / d z_i, z = (t, theta)


def _dS_frame(p):
    tp = p[..., 0]
    b = jb(tp)
    w = p[..., 1:] / b[..., None]
    th = np.arctan2(w[..., 1], w[..., 0])
    tau = np.concatenate([b[..., None], tp[..., None] * w], -1)
    e = np.stack([np.zeros_like(tp), -w[..., 1], w[..., 0]], -1)
    return tp, th, tau, e


def _frame_components(vec, tau, e):
    """(E_0, E_1) components of ambient tangent vectors; vec[..., i, A]."""
    c0 = vec[..., 0] * tau[..., None, 0] - np.sum(vec[..., 1:] * tau[..., None, 1:], -1)
    c1 = -vec[..., 0] * e[..., None, 0] + np.sum(vec[..., 1:] * e[..., None, 1:], -1)
    return np.stack([c0, c1], -1)


def surface_igm_field(t: float, phi, dphi, phi_tt) -> SurfaceIGM:
    """IGM field of the surface: A = C M^{-T} C^{-1}, phi = eta (A - I).

    M = k h^{-1} is the shape operator in chart coordinates, so that
    d_i p = M_i^l Phi_l for the Gauss map p = -N, and C holds the frame
    components (at p) of the chart tangent vectors Phi_l.
    """
    from .meanc import _second_fundamental, embedding_jet

    theta = circle_grid(np.size(phi))
    omega, basis = _circle_frame(theta)
    phi_th = spectral_derivative(phi, 1)
    phi_thth = spectral_derivative(phi, 2)
    phi_tth = spectral_derivative(dphi, 1)
    tt = np.full(np.shape(phi), float(t))
    grad = np.stack([dphi, phi_th], -1)
    hess = np.stack([np.stack([phi_tt, phi_tth], -1), np.stack([phi_tth, phi_thth], -1)], -2)
    h, k, N = _second_fundamental(tt, omega, basis, phi, grad, hess)
    x, dx, _ = embedding_jet(tt, omega, basis)
    dP = (1.0 - phi)[:, None, None] * dx - grad[..., :, None] * x[..., None, :]
    p = -N
    tp, thp, tau, e = _dS_frame(p)
    C = np.swapaxes(_frame_components(dP, tau, e), -1, -2)  # C[a, l]
    M = k @ np.linalg.inv(h)  # M[i, l]
    V = np.einsum("...il,...al->...ia", M, C)
    A = C @ np.linalg.inv(np.swapaxes(M, -1, -2)) @ np.linalg.inv(C)
    eta = np.diag([-1.0, 1.0])
    f = eta @ (A - np.eye(2))
    f = 0.5 * (f + np.swapaxes(f, -1, -2))
    return SurfaceIGM(f, p, tp, thp, V)


# ------------------------------------------------------------ scenarios


def scenario_zero(n: int = 256, t0: float = 0.5) -> GraphField1D:
    return GraphField1D(t0, np.zeros(n), np.zeros(n))


def bump_profile(theta, center: float = 0.0, width: float = 0.5):
    """Periodic Gaussian-like bump exp((cos(theta - c) - 1)/width^2), equal to 1 at c.

    Its Fourier coefficients decay faster than exponentially, so the
    two-thirds filter removes nothing above roundoff at moderate N.
    """
    return np.exp((np.cos(np.asarray(theta) - center) - 1.0) / width**2)


def scenario_bump(amp: float, n: int = 256, t0: float = 0.5, width: float = 0.5) -> GraphField1D:
    theta = circle_grid(n)
    return GraphField1D(t0, amp * bump_profile(theta, 0.0, width), np.zeros(n))


def default_cap(t0: float) -> float:
    """Half-width of each cap; larger than the light-cone reach from t0 so the cones survive."""
    reach = light_cone_reach(t0)
    return reach + 0.4 * (0.5 * np.pi - reach)


def translate_vector(eps: float, sign: int) -> np.ndarray:
    """Spatial shift by sign*eps along x^1, the axis through theta = 0."""
    return np.array([0.0, sign * eps, 0.0])


def exact_translate(eps: float, sign: int, t, theta):
    """(phi, phi_t) of the translated dS written as a normal graph."""
    omega, basis = _circle_frame(theta)
    tt = np.broadcast_to(np.asarray(t, dtype=float), np.shape(theta))
    v, g, _ = translated_ds_jet(translate_vector(eps, sign), tt, omega, basis)
    return v, g[..., 0]


def scenario_translated_patch(eps: float, t0: float = 1.0, n: int = 256, cap: float | None = None) -> GraphField1D:
    """+eps translate near theta = 0, -eps translate near theta = pi, smoothly joined.

    Each cap is pushed outward along its own axis.  The blending weight is
    a smooth step across the gap between the caps.
    """
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    cap = default_cap(t0) if cap is None else cap
    if not (light_cone_reach(t0) < cap < 0.5 * np.pi):
        raise ValueError("cap half-width must lie between the light-cone reach and pi/2")
    theta = circle_grid(n)
    if eps == 0:
        return GraphField1D(t0, np.zeros(n), np.zeros(n))
    p1, d1 = exact_translate(eps, +1, t0, theta)
    p2, d2 = exact_translate(eps, -1, t0, theta)
    w = patch_weight(theta, cap)
    return GraphField1D(t0, w * p1 + (1 - w) * p2, w * d1 + (1 - w) * d2)


def patch_weight(theta, cap: float):
    """1 on |theta| <= cap, 0 on |theta - pi| <= cap, smooth in between."""
    d = np.abs(np.angle(np.exp(1j * np.asarray(theta))))
    return smooth_step((np.pi - cap - d) / (np.pi - 2 * cap))


def cone_mask(theta, t, t0: float, cap: float, center: float):
    """Points still inside the domain of dependence of a cap at time t."""
    reach = np.arctan(t) - np.arctan(t0)
    d = np.abs(np.angle(np.exp(1j * (np.asarray(theta) - center))))
    return d <= cap - reach


@dataclass(frozen=True)
class PatchTracking:
    times: np.ndarray
    errors: np.ndarray
    max_error: float
    points: int


def patch_tracking(traj: Trajectory, eps: float, cap: float | None = None, margin: float = 0.0) -> PatchTracking:
    """Worst |phi - exact translate| inside both dependence cones along the run."""
    cap = default_cap(traj.t0) if cap is None else cap
    theta = traj.theta
    errs = np.zeros(len(traj.t))
    count = 0
    for i, t in enumerate(traj.t):
        for sign, center in ((+1, 0.0), (-1, np.pi)):
            m = cone_mask(theta, t, traj.t0, cap - margin, center)
            if not np.any(m):
                continue
            ex, _ = exact_translate(eps, sign, t, theta[m])
            errs[i] = max(errs[i], float(np.max(np.abs(traj.phi[i, m] - ex))))
            count += int(m.sum())
    return PatchTracking(traj.t, errs, float(errs.max()), count)


# ------------------------------------------------------------ u-shift


@dataclass(frozen=True)
class UShift:
    t: np.ndarray
    u: np.ndarray
    u_inf: np.ndarray
    error: np.ndarray
    lipschitz: float


def ushift(traj: Trajectory) -> UShift:
    """u(t, theta) along the run and its limit estimated at t_end.

    The error bar is |u(T) - u(T/2)|: with |d_t u| <~ <t>^-2 the remaining
    change after T is at most comparable to the change over [T/2, T].
    """
    u = np.array([ushift_field(t, p) for t, p in zip(traj.t, traj.phi)])
    T = traj.t[-1]
    half = traj.at(max(T / 2, traj.t0)).phi
    u_half = ushift_field(max(T / 2, traj.t0), half)
    u_inf = u[-1]
    err = np.abs(u_inf - u_half)
    lip = float(np.max(np.abs(spectral_derivative(u_inf, 1))))
    return UShift(traj.t, u, u_inf, err, lip)


# ------------------------------------------------------------ light-cone test


@dataclass(frozen=True)
class ConeTest:
    tau0: np.ndarray
    xi0: np.ndarray
    sup: np.ndarray
    threshold: float
    passed: bool


def cone_distance(X: np.ndarray, tau0: float, xi0) -> float:
    """sup over the points X of ||x - xi0| - t + tau0|."""
    xi0 = np.asarray(xi0, dtype=float)
    r = np.linalg.norm(X[..., 1:] - xi0, axis=-1)
    return float(np.max(np.abs(r - X[..., 0] + tau0)))


def cone_test(traj: Trajectory, eps: float, span: float = 2.0) -> ConeTest:
    """Evaluate the light-cone distance at t_end on a 5 x 5 grid of (tau0, xi0).

    tau0 runs over span*eps*{-1, -1/2, 0, 1/2, 1} and xi0 = s e_1 over the
    same values; the test passes when every sup exceeds eps/2.
    """
    X = surface_points(traj.t[-1], traj.phi[-1])
    vals = span * eps * np.linspace(-1.0, 1.0, 5)
    sup = np.empty((5, 5))
    for i, a in enumerate(vals):
        for j, s in enumerate(vals):
            sup[i, j] = cone_distance(X, a, [s, 0.0])
    return ConeTest(vals, vals, sup, 0.5 * eps, bool(np.all(sup >= 0.5 * eps)))


# ------------------------------------------------------------ audits


@dataclass(frozen=True)
class ResidualAudit:
    times: np.ndarray
    h_residual: np.ndarray
    curl: np.ndarray
    div: np.ndarray

    @property
    def max_h(self) -> float:
        return float(np.max(self.h_residual))


def _fd_time(values, delta: float, order: int):
    """Centred first derivative from samples at t + k delta, k = -2..2 (order 4) or -1..1."""
    if order == 4:
        vm2, vm1, _, vp1, vp2 = values
        return (vm2 - 8 * vm1 + 8 * vp1 - vp2) / (12 * delta)
    vm1, _, vp1 = values
    return (vp1 - vm1) / (2 * delta)


def _offsets(order: int):
    return (-2, -1, 0, 1, 2) if order == 4 else (-1, 0, 1)


def h_residual(traj: Trajectory, t: float, delta: float = 1e-3, order: int = 4) -> float:
    """max |H - 2| with phi_tt from centred differences of the dense solution.

    This is independent of the acceleration used by the solver, so it
    measures how well the computed surface is actually CPMC.
    """
    n = traj.n
    ys = [traj.dense(t + k * delta) for k in _offsets(order)]
    y0 = traj.dense(t)
    phi, dphi = y0[:n], y0[n:]
    phi_tt = _fd_time([y[n:] for y in ys], delta, order)
    theta = traj.theta
    H = curvature(
        t, theta, phi, dphi, spectral_derivative(phi, 1), phi_tt, spectral_derivative(dphi, 1), spectral_derivative(phi, 2)
    )
    return float(np.max(np.abs(H - H_TARGET)))


def igm_residual(traj: Trajectory, t: float, delta: float, stride: int = 1, method: str = "fd"):
    """Curl and divergence residuals of the surface IGM field near time t.

    ``method="fd"`` uses second-order centred differences in t (step delta)
    and in theta (every ``stride``-th grid point), for refinement studies.
    ``method="spectral"`` differentiates in theta spectrally on the full grid
    and uses a fourth-order stencil in t.
    """
    order = 4 if method == "spectral" else 2
    fields = []
    for k in _offsets(order):
        ts = t + k * delta
        st = traj.at(ts)
        acc, _ = acceleration(ts, st.phi, st.dphi, 0.0, traj.options.dealias)
        fields.append(surface_igm_field(ts, st.phi, st.dphi, acc))
    mid = fields[len(fields) // 2]
    if method == "spectral":
        stride = 1
    sel = slice(None, None, stride)
    f = [F.phi[sel] for F in fields]
    f0 = mid.phi[sel]
    d_t = _fd_time(f, delta, order)
    if method == "spectral":
        d_th = np.moveaxis(spectral_derivative(np.moveaxis(f0, 0, -1), 1), -1, 0)
    else:
        h = 2.0 * np.pi / traj.n * stride
        d_th = (np.roll(f0, -1, axis=0) - np.roll(f0, 1, axis=0)) / (2 * h)
    dphi_du = np.stack([d_t, d_th], axis=1)  # [j, i, b, c]
    nab = igm.covariant_derivative_d1(f0, dphi_du, mid.V[sel], mid.tp[sel])
    curl, div = igm.system_residuals(f0, nab)
    return float(np.max(np.abs(curl))), float(np.max(np.abs(div)))


def residual_audit(traj: Trajectory, times=None, rel_delta: float = 3e-3, method: str = "spectral") -> ResidualAudit:
    """H and IGM residuals at a handful of times along the run.

    The time step of the difference stencils is rel_delta * <t>, the natural
    scale once the solution has settled into its late-time regime.
    """
    times = np.asarray(times if times is not None else traj.t[1:-1:max(1, len(traj.t) // 8)], dtype=float)
    hr, cu, dv = [], [], []
    for t in times:
        delta = rel_delta * float(jb(t))
        delta = min(delta, (t - traj.t0) / 2.5, (traj.t[-1] - t) / 2.5)
        hr.append(h_residual(traj, t, delta))
        c, d = igm_residual(traj, t, delta, method=method)
        cu.append(c)
        dv.append(d)
    return ResidualAudit(times, np.array(hr), np.array(cu), np.array(dv))


def linear_counterpart(state0: GraphField1D, times) -> np.ndarray:
    """Linearized run from the same data, sampled at times."""
    lt = evolve_linear_1d(LinearField1D(state0.t, state0.phi, state0.dphi), float(np.max(times)), times)
    return lt.phi


@dataclass(frozen=True)
class FreezingReport:
    max_change: float
    region: np.ndarray
    times: np.ndarray


def horizon_freezing(base: GraphField1D, modified: GraphField1D, t_end: float, cap: float, opts: EvolveOptions | None = None) -> FreezingReport:
    """Change near theta = 0 caused by altering data only near theta = pi.

    The comparison region is the dependence cone of the cap around 0.
    """
    a = evolve(base, t_end, opts)
    b = evolve(modified, t_end, opts)
    m = cone_mask(a.theta, t_end, base.t, cap, 0.0)
    change = np.max(np.abs(a.phi[:, m] - b.phi[:, m]))
    return FreezingReport(float(change), a.theta[m], a.t)
