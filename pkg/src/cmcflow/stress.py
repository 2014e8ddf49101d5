"""Variable-coefficient Bel-Robinson type stress tensor for symmetric two-tensors.

Everything is expressed in an orthonormal frame (tau, e_1, ..., e_d) of the
background metric, whose frame components are eta = diag(-1, 1, ..., 1).
phi is stored with lower frame indices, the coefficients G = g^{ab} with
upper ones, and S[a, b, c, d] stands for S^{ab}_{cd}.  Index gymnastics use
the background metric throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dsgeom import grad_tau, jb, minkowski_metric


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------- pointwise


@dataclass(frozen=True)
class CoeffMetric:
    """Frame components g^{(mu)(nu)} of the coefficient metric."""

    G: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 2:
            raise DomainError("G must be a square matrix of size d+1 >= 2")
        if not np.allclose(G, G.T, rtol=0, atol=1e-14 * max(1.0, np.abs(G).max())):
            raise DomainError("G must be symmetric")
        object.__setattr__(self, "G", 0.5 * (G + G.T))

    @classmethod
    def background(cls, d: int) -> "CoeffMetric":
        return cls(minkowski_metric(d + 1))

    @property
    def d(self) -> int:
        return self.G.shape[0] - 1

    def deviation(self) -> float:
        return float(np.abs(self.G - minkowski_metric(self.d + 1)).max())

    @property
    def near_background(self) -> bool:
        return self.deviation() < 1.0 / (8 * (self.d + 1))


def _as_G(g) -> np.ndarray:
    return g.G if isinstance(g, CoeffMetric) else np.asarray(g, dtype=float)


def Z_tensor(g) -> np.ndarray:
    """Z[m, n, a, b] = G^{mn} delta^a_b - G^{an} delta^m_b - G^{ma} delta^n_b."""
    G = _as_G(g)
    I = np.eye(G.shape[-1])
    return (
        np.einsum("...mn,ab->...mnab", G, I)
        - np.einsum("...an,mb->...mnab", G, I)
        - np.einsum("...ma,nb->...mnab", G, I)
    )


def S_tensor(g, phi) -> np.ndarray:
    """S^{ab}_{cd} = phi_mo phi_np Z^{mn}|^a_c Z^{op}|^b_d (broadcasts over leading axes)."""
    Z = Z_tensor(g)
    phi = np.asarray(phi, dtype=float)
    return np.einsum("...mo,...np,...mnac,...opbd->...abcd", phi, phi, Z, Z, optimize=True)


def S_expanded(g, phi) -> np.ndarray:
    """The same tensor from its fully expanded form (second assembly path)."""
    G = _as_G(g)
    phi = np.asarray(phi, dtype=float)
    I = np.eye(G.shape[-1])
    # phi_mo G^{mn} phi_np G^{op}
    pG = np.einsum("...mo,...mn->...on", phi, G)
    trsq = np.einsum("...on,...no->...", pG, pG)
    # M[d, b] = phi_md G^{mn} phi_np G^{bp}
    M = np.einsum("...md,...mn,...np,...bp->...db", phi, G, phi, G, optimize=True)
    # N[c, a] = phi_co G^{op} phi_np G^{an}
    N = np.einsum("...co,...op,...np,...an->...ca", phi, G, phi, G, optimize=True)
    # R[c, d, a, b] = (phi_cd phi_np + phi_cp phi_nd) G^{na} G^{pb}
    up = np.einsum("...np,...na,...pb->...ab", phi, G, G)
    mix = np.einsum("...cp,...pb->...cb", phi, G)  # phi_c^b with G
    mix2 = np.einsum("...nd,...na->...da", phi, G)
    R = np.einsum("...cd,...ab->...abcd", phi, up) + np.einsum("...cb,...da->...abcd", mix, mix2)
    return (
        np.einsum("...,ac,bd->...abcd", trsq, I, I)
        - 2.0 * np.einsum("...db,ac->...abcd", M, I)
        - 2.0 * np.einsum("...ca,bd->...abcd", N, I)
        + 2.0 * R
    )


def S_tttt(S) -> np.ndarray:
    """S^{ab}_{cd} tau_a tau_b tau^c tau^d; in the frame tau_a tau_b = (+1) on the 0 slot."""
    return np.asarray(S)[..., 0, 0, 0, 0]


def lower_S(S) -> np.ndarray:
    """S_{abcd} = eta_ea eta_fb S^{ef}_{cd}."""
    n = np.shape(S)[-1]
    eta = minkowski_metric(n)
    return np.einsum("ea,fb,...efcd->...abcd", eta, eta, S)


def brendle_Q(S) -> np.ndarray:
    """(3/4) times the full symmetrization of the lowered tensor."""
    L = lower_S(S)
    perms = list(itertools.permutations(range(4)))
    lead = tuple(range(L.ndim - 4))
    acc = sum(np.transpose(L, lead + tuple(len(lead) + p for p in perm)) for perm in perms)
    return 0.75 * acc / len(perms)


def symmetry_defect(T) -> float:
    """Largest deviation of a four-slot array from its full symmetrization."""
    T = np.asarray(T)
    sym = sum(np.transpose(T, perm) for perm in itertools.permutations(range(4))) / 24.0
    return float(np.abs(T - sym).max())


def trace_free(phi) -> np.ndarray:
    """Remove the background trace: phi - (tr phi / (d+1)) eta."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[-1]
    eta = minkowski_metric(n)
    tr = np.einsum("ab,...ab->...", eta, phi)
    return phi - (tr / n)[..., None, None] * eta


def frame_norm_sq(phi) -> np.ndarray:
    """Sum of squared frame components, i.e. |phi|^2 in the hat metric."""
    return np.sum(np.square(phi), axis=(-2, -1))


# ----------------------------------------------------------- coercivity


def coercivity_margin(A: float, B: float, d: int) -> float:
    return min(A, B) / (4.0 * (d + 1))


@dataclass(frozen=True)
class CoercivityReport:
    hypotheses_hold: bool
    margin: float
    worst_deviation: float
    lhs: float
    bound: float
    holds: bool | None  # None when the hypotheses fail


def coercivity_check(g, A: float, B: float, phi) -> CoercivityReport:
    """Test S_tttt >= min(A,B)^2/2 sum phi_ij^2 when G is close to diag(-A, B, ..., B)."""
    if A <= 0 or B <= 0:
        raise DomainError("A and B must be positive")
    G = _as_G(g)
    d = G.shape[0] - 1
    m = coercivity_margin(A, B, d)
    ref = np.diag([-A] + [B] * d)
    dev = float(np.abs(G - ref).max())
    phi = np.asarray(phi, dtype=float)
    lhs = float(S_tttt(S_tensor(G, phi)))
    bound = 0.5 * min(A, B) ** 2 * float(frame_norm_sq(phi))
    ok = dev < m
    return CoercivityReport(ok, m, dev, lhs, bound, (lhs >= bound * (1 - 1e-12)) if ok else None)


def sample_near_metric(rng: np.random.Generator, A: float, B: float, d: int, fraction: float = 0.9) -> np.ndarray:
    """Random symmetric G whose entries deviate from diag(-A, B, ...) by < fraction*margin."""
    m = coercivity_margin(A, B, d)
    E = rng.uniform(-1.0, 1.0, size=(d + 1, d + 1))
    E = 0.5 * (E + E.T)
    return np.diag([-A] + [B] * d) + fraction * m * E


def random_sym(rng: np.random.Generator, n: int, size=()) -> np.ndarray:
    p = rng.normal(size=tuple(size) + (n, n))
    return 0.5 * (p + np.swapaxes(p, -1, -2))


# ----------------------------------------------------------- deformation


def _tau_frames(n: int):
    tu = np.zeros(n)
    tu[0] = 1.0
    tl = -tu
    eta = minkowski_metric(n)
    # projections with one index up or down, all in frame components
    Pl = eta + np.outer(tl, tl)  # gbar_ab + tau_a tau_b
    Pm = np.eye(n) + np.outer(tl, tu)  # delta_a^c + tau_a tau^c
    return tu, tl, Pl, Pm


def deformation_density(S) -> np.ndarray:
    """S^{ab}_{cd} [P_a^c tau_b tau^d + P_a^d tau_b tau^c + P_ab tau^c tau^d].

    This is S contracted with nabla_a(tau_b tau^c tau^d) divided by t/<t>.
    """
    n = np.shape(S)[-1]
    tu, tl, Pl, Pm = _tau_frames(n)
    return (
        np.einsum("...abcd,ac,b,d->...", S, Pm, tl, tu)
        + np.einsum("...abcd,ad,b,c->...", S, Pm, tl, tu)
        + np.einsum("...abcd,ab,c,d->...", S, Pl, tu, tu)
    )


def deformation_term(t, g, phi):
    """(<t>/t) S nabla(tau tau tau) + (d-2) S_tttt evaluated exactly."""
    t = np.asarray(t, dtype=float)
    if np.any(t == 0):
        raise DomainError("deformation term is singular at t = 0")
    S = S_tensor(g, phi)
    d = np.shape(S)[-1] - 1
    return deformation_density(S) + (d - 2) * S_tttt(S)


def deformation_main_terms(phi) -> np.ndarray:
    """Positive main terms at g = gbar (exact for trace-free phi)."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[-1]
    d = n - 1
    tu, _, _, _ = _tau_frames(n)
    eta = minkowski_metric(n)
    P = eta + np.outer(tu, tu)
    ghat = eta + 2.0 * np.outer(tu, tu)
    t1 = np.einsum("...mo,...np,mp,n,o->...", phi, phi, P, tu, tu)
    t2 = np.einsum("...mo,...np,mo,n,p->...", phi, phi, P, tu, tu)
    t3 = np.einsum("...mo,...np,m,n,op->...", phi, phi, tu, tu, ghat)
    return 4.0 * (t1 + t2) + 2.0 * (d - 1) * t3


def phi_tau_sq(phi) -> np.ndarray:
    """|phi . tau|^2 in the hat metric = sum_a phi_{a0}^2."""
    return np.sum(np.square(np.asarray(phi)[..., :, 0]), axis=-1)


# ----------------------------------------------------------- d = 1 fields


def _conn_d1(t):
    """conn[..., a, b, f]: f-component of nabla_{E_a} E_b on dS_2."""
    k = grad_tau(np.asarray(t, dtype=float))
    conn = np.zeros(np.shape(t) + (2, 2, 2))
    conn[..., 1, 0, 1] = k
    conn[..., 1, 1, 0] = k
    return conn


def _grid_derivs(f, t, theta):
    """(d/dt f, d/dtheta f) by second-order differences; theta periodic, axis order (t, theta, ...)."""
    h = theta[1] - theta[0]
    ft = np.gradient(f, t, axis=0, edge_order=2)
    fth = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * h)
    return ft, fth


def _frame_derivs(f, t, theta):
    """E_0 f = <t> d_t f and E_1 f = d_theta f / <t>, stacked on a new axis 2."""
    ft, fth = _grid_derivs(f, t, theta)
    b = jb(t).reshape((-1,) + (1,) * (f.ndim - 1))
    return np.stack([b * ft, fth / b], axis=2)


def hessian_phi_d1(t, u, ut, utt, uth, uthth, utth):
    """Frame components of phi = Hess u + u gbar on dS_2.

    This is the IGM field linearized around dS in terms of the normal
    height u.  It is curl free for every u and its trace is Box u + 2u.
    Arguments are u and its partials (uth = d_theta u, utth = d_t d_theta u);
    they broadcast together.
    """
    t = np.asarray(t, dtype=float)
    b2 = 1.0 + t * t
    p00 = b2 * utt + t * ut - u
    p01 = utth - t / b2 * uth
    p11 = uthth / b2 - t * ut + u
    p00, p01, p11 = np.broadcast_arrays(p00, p01, p11)
    return np.stack([np.stack([p00, p01], -1), np.stack([p01, p11], -1)], -2)


def covariant_div_S_fd(S, t, theta) -> np.ndarray:
    """nabla_a S^{ab}_{cd} on a (t, theta) grid by finite differences. Returns [..., b, c, d]."""
    ES = _frame_derivs(S, t, theta)  # [i, j, e, a, b, c, d]
    conn = _conn_d1(t)[:, None]  # [i, 1, e, x, y]
    div = np.einsum("...aabcd->...bcd", ES)
    div = div + np.einsum("...afa,...fbcd->...bcd", conn, S)
    div = div + np.einsum("...afb,...afcd->...bcd", conn, S)
    div = div - np.einsum("...acf,...abfd->...bcd", conn, S)
    div = div - np.einsum("...adf,...abcf->...bcd", conn, S)
    return div


def covariant_grad_phi_fd(phi, t, theta) -> np.ndarray:
    """nabla_a phi_bc by finite differences. Returns [..., a, b, c]."""
    Ep = _frame_derivs(phi, t, theta)
    conn = _conn_d1(t)[:, None]
    return Ep - np.einsum("...abf,...fc->...abc", conn, phi) - np.einsum("...acf,...bf->...abc", conn, phi)


def covariant_grad_G_fd(G, t, theta) -> np.ndarray:
    """nabla_e G^{mn} by finite differences. Returns [..., e, m, n]."""
    EG = _frame_derivs(G, t, theta)
    conn = _conn_d1(t)[:, None]
    return EG + np.einsum("...efm,...fn->...emn", conn, G) + np.einsum("...efn,...mf->...emn", conn, G)


def key_divergence(G, dG, phi, F) -> np.ndarray:
    """Right side of the divergence identity; no derivatives of phi appear.

    G[..., m, n] upper, dG[..., e, m, n] = nabla_e G^{mn}, phi lower, F lower.
    Returns [..., b, c, d] with b up and c, d down.
    """
    n = G.shape[-1]
    I = np.eye(n)
    # nabla_e (G^{mn} G^{op})
    dGG = np.einsum("...emn,...op->...emnop", dG, G) + np.einsum("...mn,...eop->...emnop", G, dG)
    t1 = np.einsum("bd,...mo,...np,...cmnop->...bcd", I, phi, phi, dGG, optimize=True)
    t2 = -2.0 * np.einsum("...md,...np,...cmnbp->...bcd", phi, phi, dGG, optimize=True)
    t3 = -2.0 * np.einsum("bd,...co,...np,...aopan->...bcd", I, phi, phi, dGG, optimize=True)
    t4 = -2.0 * np.einsum("bd,...co,...op,...p->...bcd", I, phi, G, F, optimize=True)
    W = np.einsum("...anapb->...npb", dGG)  # nabla_a(G^{na} G^{pb})
    t5 = 2.0 * (
        np.einsum("...cd,...np,...npb->...bcd", phi, phi, W, optimize=True)
        + np.einsum("...cp,...nd,...npb->...bcd", phi, phi, W, optimize=True)
    )
    t6 = 2.0 * np.einsum("...cd,...pb,...p->...bcd", phi, G, F) + 2.0 * np.einsum(
        "...cp,...pb,...d->...bcd", phi, G, F
    )
    return t1 + t2 + t3 + t4 + t5 + t6


@dataclass(frozen=True)
class DivergenceResidual:
    discrepancy: float
    scale: float
    curl: float
    fd_div: np.ndarray = field(repr=False)
    identity_div: np.ndarray = field(repr=False)


def S_divergence_identity(G_field, phi_field, t, theta, F_field=None, interior: int = 2) -> DivergenceResidual:
    """Compare the finite-difference divergence of S with the derivative-free identity.

    Fields live on a (t, theta) grid of dS_2 with axis order (t, theta, ...).
    When ``F_field`` is None the source is taken to be G^{ab} nabla_a phi_bc,
    computed by finite differences.  ``interior`` time rows at each end are
    left out of the norms.
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    G_field = np.broadcast_to(np.asarray(G_field, dtype=float), phi_field.shape)
    dphi = covariant_grad_phi_fd(phi_field, t, theta)
    if F_field is None:
        F_field = np.einsum("...ab,...abc->...c", G_field, dphi)
    dG = covariant_grad_G_fd(G_field, t, theta)
    S = S_tensor(G_field, phi_field)
    lhs = covariant_div_S_fd(S, t, theta)
    rhs = key_divergence(G_field, dG, phi_field, F_field)
    sl = slice(interior, len(t) - interior)
    diff = np.abs(lhs - rhs)[sl]
    curl = np.abs(dphi - np.swapaxes(dphi, -3, -2))[sl]
    return DivergenceResidual(float(diff.max()), float(np.abs(rhs[sl]).max()), float(curl.max()), lhs, rhs)


# ----------------------------------------------------------- energies


def weighted_energy(t, phi_field, G=None) -> float:
    """<t>^2 times the integral of S_tttt over the unit circle (d = 1 slice).

    phi_field[j, b, c] holds the frame components on a uniform periodic grid.
    """
    phi_field = np.asarray(phi_field, dtype=float)
    if G is None:
        G = minkowski_metric(phi_field.shape[-1])
    s = S_tttt(S_tensor(G, phi_field))
    n = s.shape[0]
    return float((1.0 + t * t) * np.sum(s) * 2.0 * np.pi / n)


def l2_sq_round(phi_field) -> float:
    """Integral of |phi|^2 against the round circle measure."""
    phi_field = np.asarray(phi_field, dtype=float)
    return float(np.sum(frame_norm_sq(phi_field)) * 2.0 * np.pi / phi_field.shape[0])


@dataclass(frozen=True)
class EnergyAudit:
    times: np.ndarray
    energy: np.ndarray
    lhs: float
    identity_residual: float
    majorant: float
    constant: float
    tolerance: float
    passed: bool


def basic_energy_audit(t, phi_field, G_field=None, F_field=None, constant: float = 10.0, tolerance: float | None = None) -> EnergyAudit:
    """Audit the basic energy inequality for a d = 1 field sampled on a (t, theta) grid.

    lhs = E(t2) + 4 int int (t/<t>) w |phi.tau|^2 dV - E(t1) with d = 1
    (w = <t>, dV = dt dtheta).  The exact energy identity is checked as
    well; its residual measures discretization error and sets the default
    tolerance.  The audit passes iff lhs <= constant * majorant + tolerance.
    """
    t = np.asarray(t, dtype=float)
    phi_field = np.asarray(phi_field, dtype=float)
    nt, nth = phi_field.shape[:2]
    theta = 2.0 * np.pi * np.arange(nth) / nth
    eta = minkowski_metric(2)
    if G_field is None:
        G_field = np.broadcast_to(eta, phi_field.shape)
    G_field = np.asarray(G_field, dtype=float)
    dphi = covariant_grad_phi_fd(phi_field, t, theta)
    if F_field is None:
        F_field = np.einsum("...ab,...abc->...c", G_field, dphi)
    dG = covariant_grad_G_fd(G_field, t, theta)
    S = S_tensor(G_field, phi_field)
    b = jb(t)[:, None]
    w = b  # <t>^(2-d) with d = 1
    dth = 2.0 * np.pi / nth
    energy = np.array([weighted_energy(tt, phi_field[i], G_field[i]) for i, tt in enumerate(t)])

    def tint(f):  # trapezoid in t of a theta-integrated quantity
        return float(np.trapezoid(np.sum(f, axis=1) * dth, t)) if hasattr(np, "trapezoid") else float(
            np.trapz(np.sum(f, axis=1) * dth, t)
        )

    # dV = <t>^(d-1) dt dtheta = dt dtheta for d = 1
    good = tint((t[:, None] / b) * w * 4.0 * phi_tau_sq(phi_field))
    lhs = energy[-1] + good - energy[0]
    # exact identity: E(t1) - E(t2) = int w [(t/<t>) deformation + (div S) tau tau tau] dV
    divS = key_divergence(G_field, dG, phi_field, F_field)
    div_ttt = -divS[..., 0, 0, 0]  # tau_b = -1 on slot 0, tau^c = tau^d = +1
    deform = deformation_density(S) - S_tttt(S)  # (d - 2) = -1
    identity = energy[0] - energy[-1] - tint(w * ((t[:, None] / b) * deform + div_ttt))
    # right-hand majorant
    dev = G_field - eta
    gnorm = np.abs(G_field).max(axis=(1, 2, 3))
    dnorm = np.abs(dev).max(axis=(1, 2, 3)) + np.abs(dG).max(axis=(1, 2, 3, 4))
    l2 = np.array([np.sum(frame_norm_sq(phi_field[i])) * dth * jb(tt) for i, tt in enumerate(t)])
    line1 = float(np.trapezoid(jb(t) * l2 * gnorm * dnorm / jb(t), t)) if hasattr(np, "trapezoid") else float(
        np.trapz(jb(t) * l2 * gnorm * dnorm / jb(t), t)
    )
    phiF = np.sqrt(frame_norm_sq(phi_field) * np.sum(np.square(F_field), axis=-1))
    tr = np.abs(np.einsum("ab,...ab->...", eta, phi_field))
    pn = np.sqrt(frame_norm_sq(phi_field))
    devn = np.sqrt(frame_norm_sq(dev))
    line2 = tint(w * (phiF * (1.0 + devn) + pn * tr))
    majorant = line1 + line2
    if tolerance is None:
        tolerance = 10.0 * abs(identity) + 1e-12 * max(1.0, float(np.abs(energy).max()))
    passed = bool(lhs <= constant * majorant + tolerance)
    return EnergyAudit(t, energy, float(lhs), float(identity), float(majorant), constant, float(tolerance), passed)


def _spectral_theta(f, order: int):
    n = f.shape[-1]
    k = np.fft.rfftfreq(n, 1.0 / n)
    fh = np.fft.rfft(f, axis=-1)
    if order == 1:
        fh = fh * (1j * k)
        if n % 2 == 0:
            fh[..., -1] = 0.0
    else:
        fh = fh * (-(k**order)) if order == 2 else fh * (1j * k) ** order
    return np.fft.irfft(fh, n, axis=-1)


def phi_from_linear(traj) -> np.ndarray:
    """IGM field of a linearized d = 1 run, shape (len(t), N, 2, 2).

    The height solves Box u + 2u = 0, so the field is trace free and
    divergence free; second time derivatives come from the equation itself.
    """
    t = np.asarray(traj.t, dtype=float)[:, None]
    u, ut = np.asarray(traj.phi), np.asarray(traj.dphi)
    b2 = 1.0 + t * t
    uth = _spectral_theta(u, 1)
    uthth = _spectral_theta(u, 2)
    utth = _spectral_theta(ut, 1)
    utt = (2.0 * u - 2.0 * t * ut + uthth / b2) / b2
    return hessian_phi_d1(t, u, ut, utt, uth, uthth, utth)


def sample_field_d1(n_theta: int, n_t: int | None = None, variable: bool = True, t_range=(0.5, 1.5)):
    """Smooth curl-free test field on a (t, theta) grid of dS_2 with optional variable G.

    phi = Hess u + u gbar for u = (sin t + 0.3 t^2)(cos 2theta + 0.5 sin theta);
    G is the background plus a smooth perturbation of size about 0.1.
    Returns (t, theta, G, phi).
    """
    n_t = n_theta // 4 + 1 if n_t is None else n_t
    t = np.linspace(*t_range, n_t)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    T, TH = np.meshgrid(t, th, indexing="ij")
    a, ap, app = np.sin(T) + 0.3 * T**2, np.cos(T) + 0.6 * T, -np.sin(T) + 0.6
    c = np.cos(2 * TH) + 0.5 * np.sin(TH)
    cp = -2 * np.sin(2 * TH) + 0.5 * np.cos(TH)
    cpp = -4 * np.cos(2 * TH) - 0.5 * np.sin(TH)
    phi = hessian_phi_d1(T, a * c, ap * c, app * c, a * cp, a * cpp, ap * cp)
    G = np.zeros(phi.shape)
    G[..., 0, 0] = -1.0
    G[..., 1, 1] = 1.0
    if variable:
        G[..., 0, 0] += 0.1 * np.sin(TH) / jb(T)
        G[..., 1, 1] += 0.1 * np.cos(2 * TH) * T
        G[..., 0, 1] = G[..., 1, 0] = 0.05 * np.cos(TH) * T
    return t, th, G, phi
