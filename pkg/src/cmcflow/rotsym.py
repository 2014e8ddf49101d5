"""Spherically symmetric CMC hypersurfaces r = f(t) in Minkowski space.

The radial profile obeys

    f'' = (1 - f'^2) (c f sqrt(1 - f'^2) - d) / f,

with c the mean curvature (c = d + 1 is the de Sitter normalization).  The
static cylinder has radius d/c.  Integration is done in the variables
(f, gamma) with gamma = f'/sqrt(1 - f'^2), for which

    f' = gamma/sqrt(1 + gamma^2),    gamma' = c - d sqrt(1 + gamma^2)/f.

This keeps |f'| < 1 exact and avoids cancellation in 1 - f'^2 near the light
cone, which matters when resolving collapse rates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

COLLAPSE_RADIUS = 1e-8
DEGENERATE_GAP = 1e-12
HUG_BAND = 1e-6


class DomainError(ValueError):
    pass


class StepFailure(RuntimeError):
    pass


class UndecidedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SphSymState:
    f: float
    df: float
    t: float = 0.0
    d: int = 2
    c: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("d must be >= 1")
        if self.c is None:
            object.__setattr__(self, "c", float(self.d + 1))
        if not self.c > 0:
            raise DomainError("mean curvature c must be positive")
        if not self.f > 0:
            raise DomainError("radius f must be positive")
        if not abs(self.df) < 1:
            raise DomainError("timelike condition |f'| < 1 violated")

    @property
    def cylinder_radius(self) -> float:
        return self.d / self.c


def _ddf(f, df, d, c):
    s2 = 1.0 - df * df
    return s2 * (c * f * np.sqrt(s2) - d) / f


def rhs(s: SphSymState) -> float:
    """f'' at the state s."""
    return float(_ddf(s.f, s.df, s.d, s.c))


def invariants(s: SphSymState):
    """(gamma, eta) = (f'/sqrt(1-f'^2), f sqrt(1-f'^2))."""
    r = np.sqrt(1.0 - s.df * s.df)
    return s.df / r, s.f * r


class Termination(str, enum.Enum):
    REACHED = "ReachedHorizonTime"
    COLLAPSE = "CollapseDetected"
    DEGENERATE = "TimelikeDegenerate"
    TRAPPED = "Trapped"
    STEP_FAILURE = "StepFailure"


def one_minus_abs(gamma):
    """1 - |f'| computed without cancellation from gamma."""
    r = np.sqrt(1.0 + np.square(gamma))
    return 1.0 / (r * (r + np.abs(gamma)))


@dataclass(frozen=True)
class RunRecord:
    t: np.ndarray
    f: np.ndarray
    gamma: np.ndarray
    termination: Termination
    d: int
    c: float
    direction: int
    T: float | None = None
    stats: dict = field(default_factory=dict)
    dense: object = None

    @property
    def df(self) -> np.ndarray:
        return self.gamma / np.sqrt(1.0 + self.gamma**2)

    @property
    def eta(self) -> np.ndarray:
        return self.f / np.sqrt(1.0 + self.gamma**2)

    @property
    def t_end(self) -> float:
        return float(self.t[-1] if self.direction > 0 else self.t[0])

    def end_state(self) -> SphSymState:
        i = -1 if self.direction > 0 else 0
        return SphSymState(float(self.f[i]), float(self.df[i]), float(self.t[i]), self.d, self.c)

    def at(self, t):
        """(f, f') from the dense interpolant."""
        f, g = self.dense(t)
        return f, g / np.sqrt(1.0 + g * g)

    def at_gamma(self, t):
        """(f, gamma) from the dense interpolant."""
        return self.dense(t)

    def samples(self) -> np.ndarray:
        """Columns t, f, df, gamma, eta."""
        return np.column_stack([self.t, self.f, self.df, self.gamma, self.eta])


def _gamma_rhs(d, c):
    def fun(_t, y):
        f, g = y
        r = np.sqrt(1.0 + g * g)
        return [g / r, c - d * r / f]

    return fun


def integrate(
    s0: SphSymState,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = np.inf,
) -> RunRecord:
    """Integrate from s0.t to t_end (either direction).

    Stops on collapse (f <= 1e-8) and, for outward motion only, on
    1 - f'^2 <= 1e-12.  Inward motion is followed all the way to the collapse
    radius because the rate analysis needs the last decades before T; the
    collapse time T is extrapolated linearly from the stopping state.
    """
    direction = 1 if t_end >= s0.t else -1
    d, c = s0.d, s0.c
    log_gap = -np.log(DEGENERATE_GAP)

    def ev_collapse(_t, y):
        return y[0] - COLLAPSE_RADIUS

    ev_collapse.terminal = True

    def ev_degenerate(_t, y):
        if y[1] * direction <= 0:
            return 1.0
        return log_gap - np.log1p(y[1] * y[1])

    ev_degenerate.terminal = True

    g0 = s0.df / np.sqrt(1.0 - s0.df * s0.df)
    sol = solve_ivp(
        _gamma_rhs(d, c),
        (s0.t, t_end),
        [s0.f, g0],
        method="RK45",
        rtol=rtol,
        atol=atol,
        events=[ev_collapse, ev_degenerate],
        dense_output=True,
        max_step=max_step,
    )
    if sol.status == -1:
        raise StepFailure(sol.message)
    status = Termination.REACHED
    T = None
    if sol.status == 1:
        if len(sol.t_events[0]):
            status = Termination.COLLAPSE
            f_end, g_end = sol.y[:, -1]
            df_end = abs(g_end) / np.sqrt(1.0 + g_end * g_end)
            T = float(sol.t[-1] + direction * f_end / df_end)
        else:
            status = Termination.DEGENERATE
    t_s, f_s, g_s = sol.t, sol.y[0], sol.y[1]
    if direction < 0:
        t_s, f_s, g_s = t_s[::-1], f_s[::-1], g_s[::-1]
    stats = {"nfev": int(sol.nfev), "nsteps": int(len(sol.t) - 1), "rtol": rtol, "atol": atol}
    return RunRecord(
        t=np.ascontiguousarray(t_s),
        f=np.ascontiguousarray(f_s),
        gamma=np.ascontiguousarray(g_s),
        termination=status,
        d=d,
        c=c,
        direction=direction,
        T=T,
        stats=stats,
        dense=sol.sol,
    )


class Fate(str, enum.Enum):
    EXPAND = "expand"
    COLLAPSE = "collapse"
    CYLINDER = "cylinder"
    UNDECIDED = "undecided"


def direction_fate(f: float, df: float, d: int, c: float, direction: int) -> Fate | None:
    """Fate of a state that is already trapped, or None.

    Outward motion outside the cylinder keeps expanding forever; inward
    motion with eta below the cylinder radius collapses in finite time.
    """
    r_cyl = d / c
    v = df * direction
    if v >= 0 and f > r_cyl + HUG_BAND:
        return Fate.EXPAND
    if v <= 0 and f * np.sqrt(1.0 - df * df) < r_cyl - HUG_BAND:
        return Fate.COLLAPSE
    return None


def _is_cylinder(s: SphSymState) -> bool:
    return s.df == 0.0 and abs(s.f - s.cylinder_radius) <= 4 * np.finfo(float).eps * s.cylinder_radius


@dataclass(frozen=True)
class DirectionReport:
    fate: Fate
    t_stop: float
    f_stop: float
    df_stop: float
    termination: str
    collapse_time: float | None = None


def classify_direction(
    s0: SphSymState,
    direction: int,
    horizon: float = 50.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    chunk: float = 1.0,
) -> DirectionReport:
    """Fate of the solution through s0 in one time direction.

    The run advances in chunks and stops as soon as the state is trapped, so
    clear cases are cheap; only near-separatrix runs go to the horizon.
    """
    if _is_cylinder(s0):
        return DirectionReport(Fate.CYLINDER, s0.t, s0.f, s0.df, "exact cylinder")
    s = s0
    t_stop = s0.t + direction * horizon
    while True:
        fate = direction_fate(s.f, s.df, s.d, s.c, direction)
        if fate is not None:
            return DirectionReport(fate, s.t, s.f, s.df, Termination.TRAPPED.value)
        if (t_stop - s.t) * direction <= 0:
            return DirectionReport(Fate.UNDECIDED, s.t, s.f, s.df, Termination.REACHED.value)
        t_next = s.t + direction * chunk
        if (t_stop - t_next) * direction < 0:
            t_next = t_stop
        run = integrate(s, t_next, rtol=rtol, atol=atol)
        if run.termination is Termination.COLLAPSE:
            i = -1 if direction > 0 else 0
            return DirectionReport(
                Fate.COLLAPSE, float(run.t[i]), float(run.f[i]), float(run.df[i]), run.termination.value, run.T
            )
        if run.termination is not Termination.REACHED:
            i = -1 if direction > 0 else 0
            return DirectionReport(Fate.UNDECIDED, float(run.t[i]), float(run.f[i]), float(run.df[i]), run.termination.value)
        s = run.end_state()


class Kind(str, enum.Enum):
    EXPANDING = "Expanding"
    STATIC_CYLINDER = "StaticCylinder"
    BIG_BANG_BIG_CRUNCH = "BigBangBigCrunch"
    COLLAPSE_PAST_EXPAND_FUTURE = "CollapsePast_ExpandFuture"
    EXPAND_PAST_COLLAPSE_FUTURE = "ExpandPast_CollapseFuture"
    UNDECIDED = "Undecided"


_KINDS = {
    (Fate.EXPAND, Fate.EXPAND): Kind.EXPANDING,
    (Fate.COLLAPSE, Fate.COLLAPSE): Kind.BIG_BANG_BIG_CRUNCH,
    (Fate.COLLAPSE, Fate.EXPAND): Kind.COLLAPSE_PAST_EXPAND_FUTURE,
    (Fate.EXPAND, Fate.COLLAPSE): Kind.EXPAND_PAST_COLLAPSE_FUTURE,
    (Fate.CYLINDER, Fate.CYLINDER): Kind.STATIC_CYLINDER,
}


@dataclass(frozen=True)
class Classification:
    kind: Kind
    past: DirectionReport
    future: DirectionReport

    @property
    def evidence(self) -> dict:
        out = {}
        for name, rep in (("past", self.past), ("future", self.future)):
            out[name] = {
                "fate": rep.fate.value,
                "termination": rep.termination,
                "t_stop": rep.t_stop,
                "f_stop": rep.f_stop,
                "df_stop": rep.df_stop,
                "collapse_time": rep.collapse_time,
            }
        return out


def classify(s0: SphSymState, horizon: float = 50.0, rtol: float = 1e-10, atol: float = 1e-12) -> Classification:
    """Classify both time directions of the solution through s0.

    A direction still within 1e-6 of the cylinder (or otherwise not trapped)
    at the horizon is reported as undecided.
    """
    past = classify_direction(s0, -1, horizon, rtol, atol)
    future = classify_direction(s0, 1, horizon, rtol, atol)
    kind = _KINDS.get((past.fate, future.fate), Kind.UNDECIDED)
    return Classification(kind, past, future)


def separatrix_lambda(
    r0: float,
    d: int,
    direction: int = 1,
    horizon: float = 50.0,
    tol: float = 1e-10,
    c: float | None = None,
    t0: float = 0.0,
) -> float:
    """Slope lambda(r0) whose solution tends to the cylinder in the given direction.

    Bisection between the open sets of slopes that collapse and that expand.
    A slope whose run is still undecided at the horizon lies on the separatrix
    to within what the horizon can resolve and is returned directly.
    """
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    direction = 1 if direction in (1, "future", "+") else -1
    # moving outward (lambda * direction large) expands, inward collapses
    lo, hi = -1.0, 1.0

    def fate(lam):
        return classify_direction(SphSymState(r0, lam, t0, d, c), direction, horizon).fate

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= -1.0 or mid >= 1.0:
            break
        fm = fate(mid)
        if fm is Fate.CYLINDER:
            return mid
        if fm is Fate.UNDECIDED:
            return mid
        outward = fm is Fate.EXPAND
        if (outward and direction > 0) or (not outward and direction < 0):
            hi = mid
        else:
            lo = mid
    lam = 0.5 * (lo + hi)
    if lam - tol <= -1.0 or lam + tol >= 1.0:
        raise UndecidedError("no sign change found: horizon too small to separate")
    return lam


@dataclass(frozen=True)
class Tau0Estimate:
    tau0: float
    naive: float
    t_end: float
    tail_bound: float


def extract_tau0(run: RunRecord) -> Tau0Estimate:
    """Light-cone offset tau0 = lim (t - f(t)) of an expanding future run.

    The estimator t - f f' is exact on time translates of the pseudo-sphere
    and converges much faster than t - f; the naive value is kept for
    comparison.  ``tail_bound`` is the change of the estimator between t_end/2
    and t_end.
    """
    if run.direction < 0 or run.termination is not Termination.REACHED:
        raise DomainError("tau0 needs a future run that reached its end time")
    if not run.df[-1] > 0 or run.f[-1] <= run.d / run.c:
        raise DomainError("run is not expanding")
    t, f, df = run.t[-1], run.f[-1], run.df[-1]
    est = t - f * df
    t_half = run.t[0] + 0.5 * (t - run.t[0])
    fh, dfh = run.at(t_half)
    return Tau0Estimate(float(est), float(t - f), float(t), float(abs(est - (t_half - fh * dfh))))


@dataclass(frozen=True)
class CollapseProfile:
    T: float
    rate_constant: float
    sep: np.ndarray
    ratio_tangent: np.ndarray
    ratio_sqrt: np.ndarray
    ratio_eta: np.ndarray
    slopes: dict
    bounded: bool


def collapse_profile(run: RunRecord, k_min: float = 1.0, k_max: float = 5.0, n: int = 41) -> CollapseProfile:
    """Collapse-rate ratios on the window T - 10^-k, k in [k_min, k_max].

    The ratios (1-|f'|)/(T-t), sqrt(1-f'^2)/(T-t) and eta/(T-t)^2 are
    evaluated from dense output.  They count as bounded when none of them
    grows as T - t -> 0 (log-log slope >= -0.1).
    """
    if run.termination is not Termination.COLLAPSE or run.T is None:
        raise DomainError("run did not collapse")
    T = run.T
    sep = 10.0 ** -np.linspace(k_min, k_max, n)
    ts = T - run.direction * sep
    lo, hi = run.t[0], run.t[-1]
    if np.any(ts < lo) or np.any(ts > hi):
        raise DomainError("insufficient samples near the collapse time")
    f, g = run.at_gamma(ts)
    r = 1.0 / np.sqrt(1.0 + g * g)
    rt = one_minus_abs(g) / sep
    rs = r / sep
    re = f * r / sep**2
    slopes = {}
    for name, v in (("tangent", rt), ("sqrt", rs), ("eta", re)):
        slopes[name] = float(np.polyfit(np.log(sep), np.log(v), 1)[0])
    bounded = all(s >= -0.1 for s in slopes.values()) and np.all(np.isfinite(rt))
    return CollapseProfile(T, float(rt.max()), sep, rt, rs, re, slopes, bool(bounded))


@dataclass(frozen=True)
class MaxPrincipleReport:
    excluded: bool
    n_critical: int
    kinds: list
    passed: bool
    interval: tuple


def max_principle_check(run1: RunRecord, run2: RunRecord, n: int = 4001) -> MaxPrincipleReport:
    """Count strict local extrema of (f2 - f1)^2 on the common time interval."""
    a = max(run1.t[0], run2.t[0])
    b = min(run1.t[-1], run2.t[-1])
    if not b > a:
        raise DomainError("runs do not overlap")
    ts = np.linspace(a, b, n)
    f1, _ = run1.at(ts)
    f2, _ = run2.at(ts)
    diff = f2 - f1
    if np.max(np.abs(diff)) <= 1e-13:
        return MaxPrincipleReport(True, 0, [], True, (float(a), float(b)))
    q = diff * diff
    dq = np.diff(q)
    kinds = []
    for i in range(1, len(dq)):
        if dq[i - 1] < 0 <= dq[i] or dq[i - 1] <= 0 < dq[i]:
            kinds.append("min")
        elif dq[i - 1] > 0 >= dq[i] or dq[i - 1] >= 0 > dq[i]:
            kinds.append("max")
    passed = len(kinds) <= 1 and all(k == "min" for k in kinds)
    return MaxPrincipleReport(False, len(kinds), kinds, passed, (float(a), float(b)))
