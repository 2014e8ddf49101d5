"""Mean curvature of graphs: flat-chart graphs and normal graphs over dS.

Normal graphs are Phi = x + phi n with n = -x the inward normal of dS, so
Phi = (1 - phi) x.  Jets of phi are taken in the chart (t, y) where y are
normal coordinates on the sphere around the base direction omega0:
omega(y) = cos|y| omega0 + sin|y| (y . v)/|y|.  In that chart the
derivatives of the embedding at y = 0 are exact and simple.

The curvature is evaluated from the first and second fundamental forms,
with the unit normal obtained as the Hodge dual of the wedge of tangent
vectors.  With this orientation H(dS) = +(d+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsgeom import CylCoord, embed, jb, minkowski_metric, mink, sphere_tangent_basis


class TimelikeViolation(ValueError):
    """The graph is not timelike at the evaluation point."""


class DegenerateMetric(ArithmeticError):
    """The induced metric of the graph is degenerate."""


class ChartLeft(ValueError):
    """The hypersurface leaves the normal-graph chart."""


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.grad, dtype=float))
        h = np.atleast_2d(np.asarray(self.hess, dtype=float))
        if h.shape != (g.size, g.size):
            raise ValueError("hess must be square with the size of grad")
        if not np.allclose(h, h.T, rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
            raise ValueError("hess must be symmetric")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "grad", g)
        object.__setattr__(self, "hess", 0.5 * (h + h.T))

    @classmethod
    def zero(cls, n: int) -> "Jet2":
        return cls(0.0, np.zeros(n), np.zeros((n, n)))

    def scaled(self, s: float) -> "Jet2":
        return Jet2(s * self.value, s * self.grad, s * self.hess)

    def with_hess(self, hess) -> "Jet2":
        return Jet2(self.value, self.grad, hess)


# -------------------------------------------------------------- flat chart


def graph_mean_curvature(j: Jet2, d: int) -> float:
    """d_i(m^{ij} d_j phi / sqrt(1 + m^{kl} d_k phi d_l phi)) expanded on the 2-jet.

    m = diag(-1, 1, ..., 1) on the coordinates (y_0, ..., y_d).  The value is
    computed with the height direction as the normal; the dS hyperboloid
    written as a graph over its tangent plane (height pointing away from
    the centre) gives -(d+1).
    """
    n = d + 1
    if j.grad.size != n:
        raise ValueError(f"jet must have {n} coordinates")
    m = minkowski_metric(n)
    p = m @ j.grad  # m^{ij} phi_j
    w2 = 1.0 + float(j.grad @ p)
    if w2 <= 0:
        raise TimelikeViolation("1 + m^{ij} phi_i phi_j must be positive")
    w = np.sqrt(w2)
    return float(np.einsum("ij,ij->", m, j.hess) / w - p @ j.hess @ p / w**3)


def hyperboloid_chart_jet(d: int) -> Jet2:
    """2-jet at 0 of sqrt(1 + y0^2 - sum yi^2) - 1."""
    h = -np.eye(d + 1)
    h[0, 0] = 1.0
    return Jet2(0.0, np.zeros(d + 1), h)


# ---------------------------------------------------------- normal graphs


def embedding_jet(t, omega0, basis=None):
    """x, dx[i], ddx[i, j] of x(t, y) = (t, <t> omega(y)) at y = 0.

    Coordinates are ordered (t, y_1, ..., y_d).  Broadcasts over leading
    axes of t and omega0 when ``basis`` (rows v_k, shape [..., d, d+1]) is
    supplied.
    """
    t = np.asarray(t, dtype=float)
    omega0 = np.asarray(omega0, dtype=float)
    if basis is None:
        basis = sphere_tangent_basis(omega0)
    basis = np.asarray(basis, dtype=float)
    d = basis.shape[-2]
    b = jb(t)[..., None]
    lead = np.broadcast_shapes(t.shape, omega0.shape[:-1], basis.shape[:-2])
    n = d + 2
    x = np.zeros(lead + (n,))
    dx = np.zeros(lead + (d + 1, n))
    ddx = np.zeros(lead + (d + 1, d + 1, n))
    x[..., 0] = t
    x[..., 1:] = b * omega0
    dx[..., 0, 0] = 1.0
    dx[..., 0, 1:] = (t[..., None] / b) * omega0
    dx[..., 1:, 1:] = b[..., None] * basis
    ddx[..., 0, 0, 1:] = omega0 / b**3
    mixed = (t[..., None] / b)[..., None] * basis
    ddx[..., 0, 1:, 1:] = mixed
    ddx[..., 1:, 0, 1:] = mixed
    eye = np.eye(d)
    ddx[..., 1:, 1:, 1:] = -(b[..., None, None] * eye[..., None]) * omega0[..., None, None, :]
    return x, dx, ddx


def hodge_normal(T) -> np.ndarray:
    """Vector Minkowski-orthogonal to the rows of T (shape [..., n-1, n]).

    Components are signed maximal minors with the first index raised, so
    the result depends polynomially on T.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[-1]
    low = np.empty(T.shape[:-2] + (n,))
    for mu in range(n):
        cols = [k for k in range(n) if k != mu]
        low[..., mu] = (-1) ** mu * np.linalg.det(T[..., cols])
    low[..., 0] *= -1.0  # raise the index with the Minkowski metric
    return low


@dataclass(frozen=True)
class NormalGraphPoint:
    base: CylCoord
    jet: Jet2

    def __post_init__(self):
        if self.jet.grad.size != self.base.d + 1:
            raise ValueError("jet must use the (t, y_1..y_d) chart")


def _second_fundamental(t, omega0, basis, value, grad, hess):
    """Induced metric h, second fundamental form k and the unit normal.

    value [...], grad [..., n], hess [..., n, n] with n = d + 1 chart
    coordinates.  Broadcasts over leading axes.
    """
    x, dx, ddx = embedding_jet(t, omega0, basis)
    value = np.asarray(value, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    one = (1.0 - value)[..., None]
    dP = one[..., None] * dx - grad[..., :, None] * x[..., None, :]
    ddP = (
        one[..., None, None] * ddx
        - grad[..., :, None, None] * dx[..., None, :, :]
        - grad[..., None, :, None] * dx[..., :, None, :]
        - hess[..., None] * x[..., None, None, :]
    )
    h = np.einsum("...ia,...ja->...ij", dP, dP * _sig(dP.shape[-1]))
    N = hodge_normal(dP)
    nn = mink(N, N)
    if np.any(nn <= 0):
        raise DegenerateMetric("graph normal is not spacelike")
    N = N / np.sqrt(nn)[..., None]
    # orient continuously from the dS normal -x
    flip = np.sign(-mink(N, x))
    N = N * np.where(flip == 0, 1.0, flip)[..., None]
    k = mink(ddP, N[..., None, None, :])
    return h, k, N


def _sig(n: int) -> np.ndarray:
    s = np.ones(n)
    s[0] = -1.0
    return s


def mean_curvature_fields(t, omega0, basis, value, grad, hess) -> np.ndarray:
    """Vectorized H = h^{ij} k_ij of the normal graph (see module docstring)."""
    h, k, _ = _second_fundamental(t, omega0, basis, value, grad, hess)
    det = np.linalg.det(h)
    if np.any(det >= 0):
        raise TimelikeViolation("induced metric is not Lorentzian")
    hinv = np.linalg.inv(h)
    return np.einsum("...ij,...ij->...", hinv, k)


def normal_graph_mean_curvature(p: NormalGraphPoint) -> float:
    """H of M_phi at the point over p.base, from the 2-jet p.jet."""
    c = p.base
    basis = sphere_tangent_basis(c.omega)
    h, k, _ = _second_fundamental(c.t, c.omega, basis, p.jet.value, p.jet.grad, p.jet.hess)
    ev = np.linalg.eigvalsh(h)
    scale = max(1.0, float(np.abs(ev).max()))
    if np.min(np.abs(ev)) < 1e-14 * scale:
        raise DegenerateMetric("induced metric is degenerate")
    if np.sum(ev < 0) != 1:
        raise TimelikeViolation("induced metric is not Lorentzian")
    return float(np.einsum("ij,ij->", np.linalg.inv(h), k))


def linearized_op(p: NormalGraphPoint) -> float:
    """Box_dS phi + (d+1) phi from the jet, in the (t, y) chart."""
    t = p.base.t
    d = p.base.d
    j = p.jet
    b2 = 1.0 + t * t
    box = -b2 * j.hess[0, 0] - (d + 1) * t * j.grad[0] + np.trace(j.hess[1:, 1:]) / b2
    return float(box + (d + 1) * j.value)


@dataclass(frozen=True)
class LinearizationReport:
    eps: np.ndarray
    quotients: np.ndarray
    errors: np.ndarray
    order: float
    limit: float
    expected: float
    discrepancy: float
    passed: bool


def fd_linearization_check(p: NormalGraphPoint, eps_list=(4e-3, 2e-3, 1e-3, 5e-4), tol: float = 1e-6) -> LinearizationReport:
    """Central quotients (H(eps f) - H(-eps f))/(2 eps) against the linear operator.

    p.jet is the jet of the test function f; the base surface is dS itself.
    The limit is a Richardson extrapolation of the last two quotients.
    """
    eps = np.asarray(eps_list, dtype=float)
    lin = linearized_op(p)
    q = np.array(
        [
            (
                normal_graph_mean_curvature(NormalGraphPoint(p.base, p.jet.scaled(e)))
                - normal_graph_mean_curvature(NormalGraphPoint(p.base, p.jet.scaled(-e)))
            )
            / (2.0 * e)
            for e in eps
        ]
    )
    err = np.abs(q - lin)
    r = eps[-2] / eps[-1]
    limit = float(q[-1] + (q[-1] - q[-2]) / (r * r - 1.0))
    good = err > 1e-13
    if good.sum() >= 2:
        order = float(np.polyfit(np.log(eps[good]), np.log(err[good]), 1)[0])
    else:
        order = float("nan")  # quotient is exact to roundoff
    disc = abs(limit - lin)
    return LinearizationReport(eps, q, err, order, limit, lin, disc, bool(disc <= tol))


# ------------------------------------------------------- translated dS


def translate_height(xi, x) -> np.ndarray:
    """Normal height s with (1 - s) x - xi on dS, the root with s -> 0 as xi -> 0."""
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    a = mink(x, xi)
    R = a * a - mink(xi, xi) + 1.0
    if np.any(R < 0):
        raise ChartLeft("translated dS leaves the normal-graph chart")
    return 1.0 - (a + np.sqrt(R))


def translated_ds_jet(xi, t, omega0, basis=None):
    """Exact (value, grad, hess) of the translate's normal height in the (t, y) chart.

    Broadcasts over leading axes of t / omega0.
    """
    xi = np.asarray(xi, dtype=float)
    x, dx, ddx = embedding_jet(t, omega0, basis)
    a = mink(x, xi)
    ai = mink(dx, xi)
    aij = mink(ddx, xi)
    R = a * a - mink(xi, xi) + 1.0
    if np.any(R < 0):
        raise ChartLeft("translated dS leaves the normal-graph chart")
    r = np.sqrt(R)
    ri = (a[..., None] * ai) / r[..., None]
    rij = (np.einsum("...i,...j->...ij", ai, ai) + a[..., None, None] * aij) / r[..., None, None] - (
        a * a / r**3
    )[..., None, None] * np.einsum("...i,...j->...ij", ai, ai)
    value = 1.0 - (a + r)
    grad = -(ai + ri)
    hess = -(aij + rij)
    return value, grad, hess


def translated_ds_graph(xi, c: CylCoord) -> Jet2:
    """2-jet of the normal height of the dS translate (1 - s) x - xi over c."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (c.d + 2,):
        raise ValueError(f"shift must have {c.d + 2} components")
    v, g, h = translated_ds_jet(xi, c.t, c.omega)
    return Jet2(float(v), g, h)


def fd_jet(fun, z0, h: float = 1e-5) -> Jet2:
    """2-jet of a scalar function of chart coordinates by 5-point central stencils."""
    z0 = np.asarray(z0, dtype=float)
    n = z0.size
    f0 = fun(z0)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    e = np.eye(n) * h
    for i in range(n):
        fp1, fm1 = fun(z0 + e[i]), fun(z0 - e[i])
        fp2, fm2 = fun(z0 + 2 * e[i]), fun(z0 - 2 * e[i])
        grad[i] = (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h)
        hess[i, i] = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for a, wa in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                for b, wb in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                    s += wa * wb * fun(z0 + a * e[i] + b * e[j])
            hess[i, j] = hess[j, i] = s / (144 * h * h)
    return Jet2(f0, grad, hess)


def chart_point(t: float, omega0, y) -> np.ndarray:
    """Ambient point of dS at chart coordinates (t, y) around omega0."""
    omega0 = np.asarray(omega0, dtype=float)
    basis = sphere_tangent_basis(omega0)
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y)
    w = np.cos(r) * omega0 + (np.sinc(r / np.pi)) * (y @ basis)
    return embed(t, w)
