"""Inverse-Gauss-map gauge algebra on de Sitter space.

Tensors are stored as frame matrices in the orthonormal frame (tau, e_1..e_d)
with metric eta = diag(-1, 1, ..., 1).  A covariant symmetric matrix P has the
mixed form P @ eta (acting on contravariant components from the left after
transposition; for symmetric P the index placement only moves signs of the
tau row).  Self-adjointness with respect to the background metric is then
plain symmetry of the covariant matrix.

The spherically symmetric field is phi = eta_s tau tau + zeta gbar with the
constant-mean-curvature constraint tying eta_s to zeta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dsgeom import grad_tau, jb, minkowski_metric


class DomainError(ValueError):
    pass


class GaussMapDegenerate(ArithmeticError):
    pass


ZETA_GUARD = 1e-10


def _check_zeta(zeta, d: int):
    if np.any(np.asarray(zeta) <= -1.0 / (d + 1) + ZETA_GUARD):
        raise DomainError("zeta must exceed -1/(d+1)")


def nu_of(zeta, d: int):
    return (d + 1) * zeta + 1.0


def eta_from_zeta(zeta, d: int):
    """eta = zeta (1 + zeta)/(zeta + 1/(d+1))."""
    _check_zeta(zeta, d)
    return zeta * (1.0 + zeta) / (zeta + 1.0 / (d + 1))


@dataclass(frozen=True)
class IGMState:
    zeta: float
    t: float
    d: int

    def __post_init__(self):
        _check_zeta(self.zeta, self.d)

    @property
    def eta(self) -> float:
        return float(eta_from_zeta(self.zeta, self.d))

    @property
    def nu(self) -> float:
        return float(nu_of(self.zeta, self.d))


def _tt_mixed(n: int) -> np.ndarray:
    """tau_a tau^c as a matrix indexed [a, c]."""
    m = np.zeros((n, n))
    m[0, 0] = -1.0
    return m


def A_eigen(zeta: float, d: int):
    """(lam_time, lam_space) of A = I + phi for the symmetric background."""
    _check_zeta(zeta, d)
    lam_space = 1.0 + zeta
    return lam_space / nu_of(zeta, d), lam_space


def A_matrix(zeta: float, d: int) -> np.ndarray:
    """Mixed A_a^c = (1 + zeta)[(delta + tau tau) - tau tau / nu], indexed [a, c]."""
    _check_zeta(zeta, d)
    n = d + 1
    tt = _tt_mixed(n)
    return (1.0 + zeta) * (np.eye(n) + tt - tt / nu_of(zeta, d))


def A_inverse(zeta: float, d: int) -> np.ndarray:
    _check_zeta(zeta, d)
    n = d + 1
    tt = _tt_mixed(n)
    return ((np.eye(n) + tt) - nu_of(zeta, d) * tt) / (1.0 + zeta)


def background_phi(zeta: float, d: int) -> np.ndarray:
    """Covariant frame matrix of eta tau_a tau_b + zeta gbar_ab."""
    n = d + 1
    g = minkowski_metric(n)
    tau_l = np.zeros(n)
    tau_l[0] = -1.0
    return eta_from_zeta(zeta, d) * np.outer(tau_l, tau_l) + zeta * g


def mixed(p: np.ndarray) -> np.ndarray:
    """Raise the second index: P_a^b = P_ac g^cb."""
    return p @ minkowski_metric(p.shape[-1])


def lowered(m: np.ndarray) -> np.ndarray:
    """Lower the second index of a mixed matrix."""
    return m @ minkowski_metric(m.shape[-1])


def psi_from_phi(phi: np.ndarray) -> np.ndarray:
    """Covariant psi with (I + psi)(I + phi) = I in mixed form."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[-1]
    a = np.eye(n) + mixed(phi)
    if not np.all(np.isfinite(a)) or abs(np.linalg.det(a)) < 1e-14:
        raise GaussMapDegenerate("I + phi is singular")
    return lowered(np.linalg.inv(a) - np.eye(n))


def frame_norm(p: np.ndarray) -> float:
    """Riemannian frame norm: square root of the sum of squared components."""
    return float(np.sqrt(np.sum(np.square(p))))


def trace(p: np.ndarray) -> float:
    """Trace of the mixed form of a covariant matrix."""
    return float(np.trace(mixed(p)))


def cmc_project(phi: np.ndarray, bracket: float = 0.4) -> np.ndarray:
    """Shift phi by s gbar so that trace psi = 0.

    This is the one-parameter way of turning an arbitrary small symmetric
    field into one compatible with the mean curvature constraint.
    """
    n = phi.shape[-1]
    g = minkowski_metric(n)

    def tr_psi(s):
        return trace(psi_from_phi(phi + s * g))

    return phi + brentq(tr_psi, -bracket, bracket, xtol=1e-15) * g


@dataclass(frozen=True)
class BoundsReport:
    phi_norm: float
    psi_norm: float
    trace_phi: float
    trace_psi: float
    c_psi: float
    c_trace: float
    in_regime: bool
    cmc_consistent: bool


def pointwise_bounds_check(phi: np.ndarray) -> BoundsReport:
    """Empirical constants in |psi| <= C|phi| and |tr phi| <= C|phi|^2."""
    psi = psi_from_phi(phi)
    pn, qn = frame_norm(phi), frame_norm(psi)
    trp, trq = trace(phi), trace(psi)
    cp = qn / pn if pn > 0 else 0.0
    ct = abs(trp) / pn**2 if pn > 0 else 0.0
    return BoundsReport(pn, qn, trp, trq, cp, ct, pn < 0.5, abs(trq) <= 1e-10 * max(1.0, qn))


def zeta_rhs(t, zeta, d: int):
    """d zeta/dt = -(t/(1+t^2)) (1+zeta)/(1/(d+1)+zeta) zeta."""
    _check_zeta(zeta, d)
    return -(t / (1.0 + t * t)) * (1.0 + zeta) / (1.0 / (d + 1) + zeta) * zeta


@dataclass(frozen=True)
class ZetaRun:
    t: np.ndarray
    zeta: np.ndarray
    d: int
    exponent: float
    fit_residual: float
    fit_window: tuple

    @property
    def eta(self) -> np.ndarray:
        return eta_from_zeta(self.zeta, self.d)

    @property
    def nu(self) -> np.ndarray:
        return nu_of(self.zeta, self.d)

    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.zeta, self.eta, self.nu])


def fit_decay(t, y, window) -> tuple[float, float]:
    """Exponent p in |y| ~ <t>^-p by least squares in log-log; also rms residual."""
    t = np.asarray(t)
    y = np.asarray(y)
    sel = (t >= window[0]) & (t <= window[1])
    x = np.log(jb(t[sel]))
    v = np.log(np.abs(y[sel]))
    coef = np.polyfit(x, v, 1)
    res = v - np.polyval(coef, x)
    return float(-coef[0]), float(np.sqrt(np.mean(res**2)))


def integrate_zeta(
    zeta0: float,
    t0: float,
    t_end: float,
    d: int,
    n_samples: int = 2001,
    fit_window: tuple | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> ZetaRun:
    """Integrate the symmetric zeta flow and fit its decay exponent.

    log|zeta| is integrated directly (zeta keeps its sign), so tiny values
    late in the run stay accurate.  The fit window defaults to the final
    decade [t_end/10, t_end].  Samples are log-spaced.
    """
    _check_zeta(zeta0, d)
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    ts = np.geomspace(t0, t_end, n_samples)
    if fit_window is None:
        fit_window = (t_end / 10.0, t_end)
    if zeta0 == 0.0:
        z = np.zeros_like(ts)
        return ZetaRun(ts, z, d, float("nan"), 0.0, tuple(fit_window))
    sgn = np.sign(zeta0)

    def fun(t, y):
        z = sgn * np.exp(y[0])
        return [-(t / (1.0 + t * t)) * (1.0 + z) / (1.0 / (d + 1) + z)]

    sol = solve_ivp(fun, (t0, t_end), [np.log(abs(zeta0))], method="RK45", rtol=rtol, atol=atol, t_eval=ts)
    z = sgn * np.exp(sol.y[0])
    if np.any(z <= -1.0 / (d + 1)):
        raise GaussMapDegenerate("zeta left the admissible range")
    p, res = fit_decay(ts, z, fit_window)
    return ZetaRun(ts, z, d, p, res, tuple(fit_window))


# ---------------------------------------------------------------------------
# coefficient tensor of the curl equation


def B_dense(zeta: float, d: int) -> np.ndarray:
    """B^{ijk}_{abc} as an array indexed [i, j, k, a, b, c]."""
    n = d + 1
    nu = nu_of(zeta, d)
    if not nu > 0:
        raise DomainError("nu must be positive")
    eye = np.eye(n)
    tt = np.zeros((n, n))
    tt[0, 0] = -1.0  # tau^i tau_a
    a = 1.0 / nu - 1.0
    b = nu - 1.0

    def pat(x, y, z):
        # x^i_a y^j_b z^k_c - x^i_b y^j_a z^k_c + x^i_a y^j_c z^k_b - x^i_b y^j_c z^k_a
        return (
            np.einsum("ia,jb,kc->ijkabc", x, y, z)
            - np.einsum("ib,ja,kc->ijkabc", x, y, z)
            + np.einsum("ia,jc,kb->ijkabc", x, y, z)
            - np.einsum("ib,jc,ka->ijkabc", x, y, z)
        )

    out = np.einsum("ia,jb,kc->ijkabc", eye, eye, eye) - np.einsum("ib,ja,kc->ijkabc", eye, eye, eye)
    out = out - a * pat(tt, eye, eye) - b * pat(eye, eye, tt) + a * b * pat(tt, eye, tt)
    return out


def F_tensor(alpha: int, beta: int, gamma: int, n: int) -> np.ndarray:
    """Basis tensor with the symmetry type of a curl nabla_[i phi_j]k.

    f^a f^b f^c + f^a f^c f^b - f^b f^a f^c - f^c f^a f^b, antisymmetric in
    its first two slots and symmetric under beta <-> gamma.
    """
    e = np.eye(n)

    def o(x, y, z):
        return np.einsum("i,j,k->ijk", e[x], e[y], e[z])

    return o(alpha, beta, gamma) + o(alpha, gamma, beta) - o(beta, alpha, gamma) - o(gamma, alpha, beta)


def F_span_basis(d: int) -> np.ndarray:
    """Orthonormal basis (columns, flattened) of the span of all F tensors."""
    n = d + 1
    cols = [F_tensor(a, b, c, n).ravel() for a in range(n) for b in range(n) for c in range(b, n)]
    m = np.array(cols).T
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, s > 1e-10 * s[0]]


def B_spectrum_dense(zeta: float, d: int) -> np.ndarray:
    """Sorted eigenvalues of B restricted to the F span, by dense assembly."""
    n = d + 1
    q = F_span_basis(d)
    b = B_dense(zeta, d).reshape(n**3, n**3).T  # rows abc, columns ijk
    m = q.T @ b @ q
    ev = np.linalg.eigvals(m)
    if np.max(np.abs(ev.imag)) > 1e-10:
        raise ArithmeticError("unexpected complex spectrum")
    return np.sort(ev.real)


def B_mixing_block(nu: float) -> np.ndarray:
    """Action of B on the pair (F^{b0c}, F^{c0b}) for distinct spatial b, c."""
    s, dlt = nu + 1.0 / nu, nu - 1.0 / nu
    return np.array([[s, -dlt], [-dlt, s]])


@dataclass(frozen=True)
class BSpectrum:
    eigenvalues: np.ndarray
    by_case: dict
    invertible: bool
    nu: float


def B_spectrum(zeta: float, d: int) -> BSpectrum:
    """Eigenvalues of B on the F span from the three-case analysis.

    all indices spatial:            2, multiplicity d(d^2-1)/3
    one temporal index, F^{0bc}:    2/nu on the symmetric combinations
    F^{b0c} - F^{c0b} (b != c):     2 nu (antisymmetric eigenvector of the block)
    two temporal indices, F^{a00}:  2 nu, multiplicity d

    The symmetric combination F^{b0c} + F^{c0b} equals -F^{0bc}, so the
    2x2 block contributes 2/nu and 2 nu.
    """
    nu = float(nu_of(zeta, d))
    if not nu > 0:
        raise DomainError("nu must be positive")
    n_spatial = d * (d * d - 1) // 3
    pairs = d * (d - 1) // 2
    block = np.linalg.eigvalsh(B_mixing_block(nu)) if pairs else np.array([])
    diag_pairs = np.full(d, 2.0 / nu)  # beta = gamma
    by_case = {
        "spatial": np.full(n_spatial, 2.0),
        "one_temporal": np.concatenate([diag_pairs, np.tile(block, pairs)]),
        "two_temporal": np.full(d, 2.0 * nu),
    }
    ev = np.sort(np.concatenate(list(by_case.values())))
    return BSpectrum(ev, by_case, bool(np.all(np.abs(ev) > 0)), nu)


def coda_bracket(phi_mixed: np.ndarray) -> np.ndarray:
    """Minus the bracket of the curl equation written with A and its inverse.

    Indexed [i, j, k, a, b, c]; for the symmetric background it coincides
    with B_dense on the F span.
    """
    n = phi_mixed.shape[0]
    A = np.eye(n) + phi_mixed.T  # A^k_c indexed [k, c]
    Ai = np.linalg.inv(A)
    e = np.eye(n)
    br = (
        np.einsum("ib,ja,kc->ijkabc", Ai, e, A)
        - np.einsum("ia,jb,kc->ijkabc", Ai, e, A)
        + np.einsum("ib,jc,ka->ijkabc", Ai, e, A)
        - np.einsum("ia,jc,kb->ijkabc", Ai, e, A)
        + np.einsum("ic,jb,ka->ijkabc", e, e, e)
        - np.einsum("ic,ja,kb->ijkabc", e, e, e)
    )
    return -br


# ---------------------------------------------------------------------------
# background source tensor


def massterm(t: float, zeta: float, d: int) -> np.ndarray:
    """Covariant frame components of the background derivative nabla_a phi_bc.

    eta (div tau) [(1/d)(g_ab tau_c + g_bc tau_a + g_ca tau_b)
                   + (3/d) tau tau tau + nu^-2 tau tau tau]
    """
    n = d + 1
    g = minkowski_metric(n)
    tl = np.zeros(n)
    tl[0] = -1.0
    eta = eta_from_zeta(zeta, d)
    div = d * grad_tau(t)
    sym = (np.einsum("ab,c->abc", g, tl) + np.einsum("bc,a->abc", g, tl) + np.einsum("ca,b->abc", g, tl)) / d
    ttt = np.einsum("a,b,c->abc", tl, tl, tl)
    return eta * div * (sym + (3.0 / d) * ttt + ttt / nu_of(zeta, d) ** 2)


# ---------------------------------------------------------------------------
# residuals of the divergence-curl system (d = 1)


def frame_gradient_d1(dphi_du: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Frame directional derivatives E_a(phi) from derivatives along two coordinates.

    dphi_du[..., i, b, c] is d phi_bc / du_i and V[..., i, a] the frame
    components of the coordinate vector d/du_i, so that
    d phi/du_i = V_i^a E_a(phi).  Returns [..., a, b, c].
    """
    Vinv = np.linalg.inv(V)  # [..., a, i]
    return np.einsum("...ai,...ibc->...abc", Vinv, dphi_du)


def covariant_derivative_d1(phi: np.ndarray, dphi_du: np.ndarray, V: np.ndarray, t: np.ndarray) -> np.ndarray:
    """nabla_a phi_bc in the frame (tau, e) of dS_2, from coordinate derivatives."""
    Ephi = frame_gradient_d1(dphi_du, V)
    k = grad_tau(t)[..., None, None, None]
    # nabla_e tau = k e and nabla_e e = k tau; nabla_tau of the frame vanishes
    conn = np.zeros(np.shape(t) + (2, 2, 2))
    conn[..., 1, 0, 1] = 1.0
    conn[..., 1, 1, 0] = 1.0
    conn = conn * k  # conn[a, b, f]: f-component of nabla_{E_a} E_b
    return Ephi - np.einsum("...abf,...fc->...abc", conn, phi) - np.einsum("...acf,...bf->...abc", conn, phi)


def system_residuals(phi: np.ndarray, nabla_phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise curl and divergence residuals of the main system.

    curl_abc = nabla_a phi_bc - nabla_b phi_ac,
    div_c = G^{ab} nabla_a phi_bc with G = (I + psi) gbar^-1 (I + psi).
    """
    n = phi.shape[-1]
    g = minkowski_metric(n)
    curl = nabla_phi - np.swapaxes(nabla_phi, -3, -2)
    A = np.eye(n) + phi @ g  # mixed [a, b] = delta + phi_a^b
    Ainv = np.linalg.inv(A)  # (I + psi)_a^b
    G = np.einsum("...ea,ef,...fb->...ab", Ainv, g, Ainv)
    div = np.einsum("...ab,...abc->...c", G, nabla_phi)
    return curl, div


def _d_periodic(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)


def _d_open(f: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    return np.gradient(f, x, axis=axis, edge_order=2)


@dataclass(frozen=True)
class MainSystemResidual:
    curl: float
    div: float
    curl_field: np.ndarray
    div_field: np.ndarray


def residual_mainsystem(phi_field: np.ndarray, t: np.ndarray, theta: np.ndarray, interior: int = 1) -> MainSystemResidual:
    """Max-norm residuals of the main system for a field on a (t, theta) grid of dS_2.

    phi_field[i, j, b, c] holds covariant frame components at (t_i, theta_j).
    Derivatives are second-order central differences (periodic in theta);
    ``interior`` rows at each time edge are dropped from the norms.
    """
    phi = np.asarray(phi_field, dtype=float)
    T, _ = np.meshgrid(t, theta, indexing="ij")
    dt_phi = _d_open(phi, t, 0)
    h = theta[1] - theta[0]
    dth_phi = _d_periodic(phi, h, 1)
    V = np.zeros(T.shape + (2, 2))
    V[..., 0, 0] = 1.0 / jb(T)  # d/dt = tau/<t>
    V[..., 1, 1] = jb(T)  # d/dtheta = <t> e
    dphi = np.stack([dt_phi, dth_phi], axis=2)
    nab = covariant_derivative_d1(phi, dphi, V, T)
    curl, div = system_residuals(phi, nab)
    sl = slice(interior, T.shape[0] - interior) if interior else slice(None)
    return MainSystemResidual(
        float(np.max(np.abs(curl[sl]))), float(np.max(np.abs(div[sl]))), curl, div
    )


def background_field(t: np.ndarray, theta: np.ndarray, zeta_t: np.ndarray, d: int = 1) -> np.ndarray:
    """Symmetric background phi sampled on a (t, theta) grid."""
    out = np.empty((len(t), len(theta), d + 1, d + 1))
    for i, z in enumerate(zeta_t):
        out[i, :] = background_phi(float(z), d)
    return out
