"""Background de Sitter geometry in the ambient Minkowski space R^{1,d+1}.

dS is the hyperquadric <x, x> = 1.  Points are written x = (t, <t> omega) with
t the extrinsic time and omega a unit vector in R^{d+1}.  The ambient form has
signature (-, +, ..., +) and every contraction goes through :func:`mink`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ChartError(ValueError):
    """Raised when a coordinate chart degenerates."""


def jb(s):
    """Japanese bracket sqrt(1 + s^2); works on scalars and arrays."""
    return np.sqrt(1.0 + np.square(s))


def mink(a, b):
    """Minkowski product with signature (-, +, ..., +) over the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def minkowski_metric(n: int) -> np.ndarray:
    """diag(-1, 1, ..., 1) of size n."""
    m = np.eye(n)
    m[0, 0] = -1.0
    return m


def metric_components(t, d: int):
    """(g_tt, g_ww) of the cylindrical metric -dt^2/<t>^2 + <t>^2 domega^2."""
    b2 = 1.0 + np.square(t)
    return -1.0 / b2, b2


@dataclass(frozen=True)
class CylCoord:
    t: float
    omega: np.ndarray
    d: int

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if omega.shape != (self.d + 1,):
            raise ValueError(f"omega must have {self.d + 1} components")
        if abs(np.linalg.norm(omega) - 1.0) > 1e-13:
            raise ValueError("omega must be a unit vector")
        object.__setattr__(self, "omega", omega)

    @classmethod
    def from_angle(cls, t: float, theta: float) -> "CylCoord":
        """d = 1 angle chart, omega = (cos theta, sin theta)."""
        return cls(t, np.array([np.cos(theta), np.sin(theta)]), 1)


def embed(t, omega) -> np.ndarray:
    """Ambient point (t, <t> omega).  Broadcasts over leading axes."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    x0 = np.broadcast_to(t, omega.shape[:-1])
    return np.concatenate([x0[..., None], jb(t)[..., None] * omega], axis=-1)


def embed_coord(c: CylCoord) -> np.ndarray:
    return embed(c.t, c.omega)


def sphere_tangent_basis(omega) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent space of S^d at omega.

    For d = 1 this is the single vector d(omega)/d(theta).
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    if n == 2:
        return np.array([[-omega[1], omega[0]]])
    # complete omega to an orthonormal basis with a QR factorization
    m = np.column_stack([omega, np.eye(n)])
    q, _ = np.linalg.qr(m)
    basis = q[:, 1:n].T
    # QR may flip the first column; the rest is orthogonal to omega regardless
    return basis


@dataclass(frozen=True)
class FrameData:
    tau: np.ndarray
    spatial_frame: np.ndarray
    normal: np.ndarray


def frame(c: CylCoord) -> FrameData:
    """Orthonormal frame (tau, e_i) of T dS at c, plus the inward normal -x."""
    t = c.t
    tau = np.concatenate([[jb(t)], t * c.omega])
    vs = sphere_tangent_basis(c.omega)
    e = np.column_stack([np.zeros(len(vs)), vs])
    return FrameData(tau=tau, spatial_frame=e, normal=-embed_coord(c))


def tau_from_boosts(x) -> np.ndarray:
    """tau = sum_i x^i K_i / <x^0> with K_i = x^i d_0 + x^0 d_i."""
    x = np.asarray(x, dtype=float)
    xs = x[1:]
    k_sum = np.concatenate([[np.dot(xs, xs)], x[0] * xs])
    return k_sum / jb(x[0])


def grad_tau(t):
    """Coefficient t/<t> in nabla_b tau^c = (t/<t>)(delta_b^c + tau_b tau^c)."""
    return t / jb(t)


def div_tau(t, d: int):
    """nabla_a tau^a = d t/<t>."""
    return d * grad_tau(t)


def static_chart(zeta: float, rho: float, z):
    """Static slicing chart of dS.

    x^0 = sqrt(1-rho^2) sinh(zeta), x^{d+1} = sqrt(1-rho^2) cosh(zeta),
    x^mu = rho z^mu.  Returns the ambient point and the metric factors
    (g_zeta_zeta, g_rho_rho, coefficient of the round sphere metric).
    """
    if abs(rho) >= 1.0:
        raise ChartError("static chart requires |rho| < 1")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    s = np.sqrt(1.0 - rho * rho)
    x = np.concatenate([[s * np.sinh(zeta)], rho * z, [s * np.cosh(zeta)]])
    return x, (-(1.0 - rho * rho), 1.0 / (1.0 - rho * rho), rho * rho)


def boost_norm(x, i: int) -> float:
    """g(K_i, K_i) = (x^0)^2 - (x^i)^2 for the boost field K_i."""
    x = np.asarray(x, dtype=float)
    return x[0] ** 2 - x[i] ** 2


def boost_field(x, i: int) -> np.ndarray:
    """Ambient components of K_i = x^i d_0 + x^0 d_i."""
    x = np.asarray(x, dtype=float)
    k = np.zeros_like(x)
    k[0] = x[i]
    k[i] = x[0]
    return k


def volume_weights(t, d: int):
    """(area element <t>^d, time weight w = <t>^(2-d))."""
    b = jb(t)
    return b**d, b ** (2 - d)


def christoffel_d1(t):
    """Christoffel symbols of -dt^2/<t>^2 + <t>^2 dtheta^2 (d = 1).

    Returns (G^t_tt, G^t_thth, G^th_tth); all others vanish.
    """
    b2 = 1.0 + t * t
    return -t / b2, t * b2, t / b2


def frame_connection_d1(t):
    """Covariant derivatives of the frame (tau, e) on dS_2 in the same frame.

    Returns an array nab[a, b, c] = c-th frame component of nabla_{E_a} E_b
    with E_0 = tau, E_1 = e.
    """
    k = grad_tau(t)
    nab = np.zeros((2, 2, 2))
    nab[1, 0, 1] = k  # nabla_e tau = k e
    nab[1, 1, 0] = k  # nabla_e e = k tau
    return nab
