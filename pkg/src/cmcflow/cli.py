"""Command line runner.

Every command reads an optional flat ``key = value`` config file, lets flags
override it, validates the merged parameters and writes CSV/JSON reports
(plus PNG figures) under an output root.

Exit codes: 0 all checks pass, 2 a checked invariant failed, 3 bad
configuration, 4 numerical guard breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import battery, igm, linmodes, rotsym, stress
from . import evolve as ev

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3, 4
RNG_NAME = "Philox4x64-10"


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


# ------------------------------------------------------------ parameters


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ints(s) -> tuple:
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    return tuple(int(x) for x in str(s).replace(",", " ").split())


_COMMON = {"seed": (int, 0), "out": (str, None), "plots": (_bool, True)}
_ROTSYM = {
    "d": (int, 2),
    "c": (float, None),
    "f0": (float, 1.0),
    "df0": (float, 0.0),
    "t0": (float, 0.0),
    "t_end": (float, 10.0),
    "rtol": (float, 1e-10),
    "atol": (float, 1e-12),
    "horizon": (float, 50.0),
}
_EVOLVE = {
    "scenario": (str, "bump"),
    "amp": (float, 1e-3),
    "eps": (float, 0.05),
    "n": (int, 256),
    "t0": (float, None),
    "t_end": (float, 200.0),
    "rtol": (float, 1e-10),
    "atol": (float, 1e-12),
    "dealias": (_bool, True),
    "kappa_min": (float, 0.1),
}
PARAMS = {
    ("rotsym", "run"): _ROTSYM,
    ("rotsym", "classify"): _ROTSYM | {"f0": (float, None)},
    ("rotsym", "separatrix"): _ROTSYM,
    ("rotsym", "tau0"): _ROTSYM | {"t_end": (float, 200.0)},
    ("igm", "zeta"): {
        "zeta0": (float, -0.1),
        "d": (int, 1),
        "t0": (float, 0.5),
        "t_end": (float, 1000.0),
        "n_samples": (int, 2001),
        "fit_lo": (float, 10.0),
        "rtol": (float, 1e-11),
        "atol": (float, 1e-13),
    },
    ("igm", "bspec"): {"zeta": (float, 0.5), "d": (int, 2)},
    ("modes", "run"): {
        "ell": (int, 2),
        "d": (int, 1),
        "psi0": (float, 1.0),
        "dpsi0": (float, 0.0),
        "t0": (float, 0.0),
        "t_end": (float, 100.0),
        "n_samples": (int, 401),
        "rtol": (float, 1e-10),
        "atol": (float, 1e-14),
    },
    ("modes", "horizon-demo"): {"bumps": (int, 3), "t0": (float, 4.0), "t_end": (float, 50.0), "n": (int, 1024)},
    ("evolve", None): _EVOLVE,
    ("audit", "stress"): {"samples": (int, 10_000), "seed": (int, 42)},
    ("audit", "energy"): {"run": (str, None), "window": (float, 4.0), "nt": (int, 201)},
    ("suite", None): {"only": (_ints, ()), "jobs": (int, 1)},
}
ACTIONS = {
    "rotsym": ("run", "classify", "separatrix", "tau0"),
    "igm": ("zeta", "bspec"),
    "modes": ("run", "horizon-demo"),
    "audit": ("stress", "energy"),
}


def _schema(command: str, action: str | None) -> dict:
    return _COMMON | PARAMS[(command, action)]


@dataclass
class RunConfig:
    command: str
    action: str | None
    params: dict
    out: str
    seed: int
    plots: bool = True
    sources: dict = field(default_factory=dict)

    def echo(self) -> dict:
        p = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"command": self.command, "action": self.action, "params": p, "seed": self.seed}


def read_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use - or _."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ConfigError(None, f"line {lineno}: empty key")
        out[k.replace("-", "_")] = v
    return out


def _coerce(schema: dict, key: str, value):
    if key not in schema:
        raise ConfigError(key, "unknown key")
    conv, _ = schema[key]
    if value is None:
        return None
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"bad value {value!r} ({exc})") from None


def validate(cfg: RunConfig) -> None:
    """Module preconditions, checked before anything runs."""
    p = cfg.params

    def need(key, ok, msg):
        if key in p and p[key] is not None and not ok(p[key]):
            raise ConfigError(key, msg)

    need("d", lambda v: v >= 1, "d must be >= 1")
    for k in ("rtol", "atol", "horizon", "window"):
        need(k, lambda v: v > 0 and math.isfinite(v), "must be positive")
    need("n", lambda v: v >= 16 and v & (v - 1) == 0, "must be a power of two >= 16")
    need("samples", lambda v: v >= 1, "must be >= 1")
    need("n_samples", lambda v: v >= 10, "must be >= 10")
    need("nt", lambda v: v >= 9, "must be >= 9")
    need("ell", lambda v: v >= 0, "must be >= 0")
    need("c", lambda v: v > 0, "must be positive")
    need("f0", lambda v: v > 0, "radius must be positive")
    need("df0", lambda v: abs(v) < 1, "|df0| < 1 is required (timelike)")
    need("eps", lambda v: 0 < v < 0.5, "must lie in (0, 0.5)")
    need("amp", lambda v: abs(v) < 0.1, "small-data runs need |amp| < 0.1")
    need("kappa_min", lambda v: v >= 0, "must be >= 0")
    need("bumps", lambda v: 1 <= v <= 3, "between 1 and 3 bumps fit on the circle")
    need("jobs", lambda v: v >= 1, "must be >= 1")
    need("scenario", lambda v: v in ("zero", "bump", "translated-patch"), "zero, bump or translated-patch")
    if "zeta0" in p:
        need("zeta0", lambda v: v > -1.0 / (p["d"] + 1), "zeta0 must exceed -1/(d+1)")
    if "zeta" in p:
        need("zeta", lambda v: v > -1.0 / (p["d"] + 1), "zeta must exceed -1/(d+1)")
    if "t0" in p and "t_end" in p and p["t0"] is not None and cfg.action not in ("classify", "separatrix"):
        if not p["t_end"] > p["t0"]:
            raise ConfigError("t_end", "must exceed t0")
    if cfg.command == "evolve" and p.get("t0") is not None and p["t0"] <= 0:
        raise ConfigError("t0", "nonlinear runs start at t0 > 0")
    if cfg.command == "audit" and cfg.action == "energy" and not p.get("run"):
        raise ConfigError("run", "a run summary file is required")
    if cfg.command == "suite":
        bad = [i for i in p["only"] if not 1 <= i <= len(battery.ALL)]
        if bad:
            raise ConfigError("only", f"no criterion {bad[0]}")


# ------------------------------------------------------------ argv


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="cmcflow", description=__doc__.splitlines()[0])
    cmds = top.add_subparsers(dest="command", required=True)

    def add_flags(p, schema):
        p.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value file; flags win")
        for key in schema:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS)

    for command in ("rotsym", "igm", "modes", "audit"):
        p = cmds.add_parser(command)
        sub = p.add_subparsers(dest="action", required=True)
        for action in ACTIONS[command]:
            add_flags(sub.add_parser(action), _schema(command, action))
    for command in ("evolve", "suite"):
        add_flags(cmds.add_parser(command), _schema(command, None))
    return top


def parse_config(argv=None, config_text: str | None = None) -> RunConfig:
    """Merge defaults, config file (or text) and flags, then validate."""
    try:
        ns = vars(build_parser().parse_args(argv))
    except SystemExit as exc:
        if exc.code in (0, None):
            raise
        raise ConfigError(None, "could not parse the command line") from None
    command, action = ns.pop("command"), ns.pop("action", None)
    schema = _schema(command, action)
    values = {k: default for k, (_, default) in schema.items()}
    sources = dict.fromkeys(values, "default")
    file_text = config_text
    path = ns.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                file_text = fh.read()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    if file_text is not None:
        for k, v in read_config_text(file_text).items():
            values[k] = _coerce(schema, k, v)
            sources[k] = "config"
    for k, v in ns.items():
        values[k] = _coerce(schema, k, v)
        sources[k] = "flag"
    out = values.pop("out")
    seed = values.pop("seed") if "seed" not in PARAMS[(command, action)] else values["seed"]
    plots = values.pop("plots")
    if out is None:
        out = os.environ.get("CMCFLOW_OUT_DIR") or "cmcflow_out"
    cfg = RunConfig(command, action, values, out, int(seed), plots, sources)
    validate(cfg)
    return cfg


# ------------------------------------------------------------ output


def _num(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    return "%.17g" % x


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(obj[k], indent + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def atomic_write(path: str, text: str) -> str:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


@dataclass
class Outputs:
    """Where a command writes: a directory plus a file stem."""

    root: str
    stem: str

    @classmethod
    def for_config(cls, cfg: RunConfig) -> "Outputs":
        default = "-".join(x for x in (cfg.command, cfg.action) if x)
        if cfg.out.endswith(".csv"):
            return cls(os.path.dirname(cfg.out) or ".", os.path.basename(cfg.out)[:-4])
        return cls(cfg.out, default)

    def path(self, suffix: str) -> str:
        return os.path.join(self.root, self.stem + suffix)


def write_report(out: Outputs, cfg: RunConfig, checks: dict, values: dict, files: list) -> dict:
    doc = {
        "scenario": "-".join(x for x in (cfg.command, cfg.action) if x),
        "config": cfg.echo(),
        "rng": RNG_NAME,
        "checks": checks,
        "pass": all(checks.values()),
        "values": values,
        "artifacts": sorted(os.path.basename(f) for f in files),
    }
    atomic_write(out.path(".json"), to_json(doc) + "\n")
    return doc


# ------------------------------------------------------------ commands


def _sphsym(p, f0=None, df0=None) -> rotsym.SphSymState:
    try:
        return rotsym.SphSymState(p["f0"] if f0 is None else f0, p["df0"] if df0 is None else df0, p["t0"], p["d"], p["c"])
    except rotsym.DomainError as exc:
        raise ConfigError("f0", str(exc)) from None


def _run_rows(run):
    return np.column_stack([run.t, run.f, run.df, run.gamma, run.eta])


def cmd_rotsym(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    files, checks, values = [], {}, {}
    if cfg.action == "run":
        run = rotsym.integrate(_sphsym(p), p["t_end"], p["rtol"], p["atol"])
        files.append(atomic_write(out.path(".csv"), csv_text(["t", "f", "df", "gamma", "eta"], _run_rows(run))))
        gamma0, eta0 = rotsym.invariants(_sphsym(p))
        values |= {"termination": run.termination.value, "t_stop": run.t_end, "collapse_time": run.T, "eta0": eta0, "gamma0": gamma0}
        checks["timelike"] = bool(np.all(np.isfinite(run.gamma)))  # f' itself rounds to -1 at collapse
        if cfg.plots:
            from . import plotting

            files.append(plotting.rotsym_run(run, out.path(".png")))
    elif cfg.action == "classify":
        if p["f0"] is None:
            return _classify_demo(cfg, out)
        cl = rotsym.classify(_sphsym(p), p["horizon"], p["rtol"], p["atol"])
        values |= {"kind": cl.kind.value, "evidence": cl.evidence}
        checks["decided"] = cl.kind is not rotsym.Kind.UNDECIDED
    elif cfg.action == "separatrix":
        lp = rotsym.separatrix_lambda(p["f0"], p["d"], 1, p["horizon"], c=p["c"], t0=p["t0"])
        lm = rotsym.separatrix_lambda(p["f0"], p["d"], -1, p["horizon"], c=p["c"], t0=p["t0"])
        values |= {"lambda_plus": lp, "lambda_minus": lm, "r0": p["f0"]}
        checks["antisymmetric"] = abs(lp + lm) <= 2e-10
    elif cfg.action == "tau0":
        run = rotsym.integrate(_sphsym(p), p["t_end"], p["rtol"], p["atol"])
        files.append(atomic_write(out.path(".csv"), csv_text(["t", "f", "df", "gamma", "eta"], _run_rows(run))))
        if run.termination is not rotsym.Termination.REACHED or not run.df[-1] > 0:
            values |= {"termination": run.termination.value}
            checks["expanding"] = False
        else:
            est = rotsym.extract_tau0(run)
            values |= {"tau0": est.tau0, "naive": est.naive, "t_end": est.t_end, "tail_bound": est.tail_bound}
            checks["expanding"] = True
            checks["tail_below_1e-4"] = est.tail_bound <= 1e-4
    return checks, values, files, out


def _classify_demo(cfg: RunConfig, out: Outputs):
    """Witnesses for each class in the chosen dimension."""
    p = cfg.params
    d = p["d"]
    c = p["c"] if p["c"] is not None else d + 1.0
    r = d / c
    witnesses = {
        "Expanding": [(1.0, 0.0), (1.5 * r, 0.3)],
        "BigBangBigCrunch": [(0.5 * r, 0.0), (0.6 * r, 0.2)],
        "CollapsePast_ExpandFuture": [(1.2 * r, 0.9)],
        "ExpandPast_CollapseFuture": [(1.2 * r, -0.9)],
        "StaticCylinder": [(r, 0.0)],
    }
    values, runs, ok = {}, {}, True
    rows = []
    for label, data in witnesses.items():
        found = []
        for f0, df0 in data:
            s = _sphsym(p, f0, df0)
            cl = rotsym.classify(s, p["horizon"], p["rtol"], p["atol"])
            found.append({"f0": f0, "df0": df0, "kind": cl.kind.value})
            ok &= cl.kind.value == label
            rows.append((f0, df0, list(witnesses).index(label)))
            if cfg.plots and label != "StaticCylinder":
                lo = rotsym.integrate(s, s.t - 6.0, p["rtol"], p["atol"])
                hi = rotsym.integrate(s, s.t + 6.0, p["rtol"], p["atol"])
                runs.setdefault(label, []).extend([lo, hi])
        values[label] = found
    files = [atomic_write(out.path(".csv"), csv_text(["f0", "df0", "class_index"], rows))]
    if cfg.plots:
        from . import plotting

        files.append(plotting.classification_portrait(runs, d, c, out.path(".png")))
    return {"witnesses_classified": bool(ok)}, {"classes": values, "class_order": list(witnesses)}, files, out


def cmd_igm(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    files, checks, values = [], {}, {}
    if cfg.action == "zeta":
        window = (p["fit_lo"], p["t_end"])
        run = igm.integrate_zeta(p["zeta0"], p["t0"], p["t_end"], p["d"], p["n_samples"], window, p["rtol"], p["atol"])
        files.append(atomic_write(out.path(".csv"), csv_text(["t", "zeta", "eta", "nu"], run.samples())))
        values |= {"exponent": run.exponent, "fit_residual": run.fit_residual, "fit_window": list(window)}
        if p["zeta0"] < 0:
            checks["exponent_d_plus_1"] = abs(run.exponent - (p["d"] + 1)) <= 0.05
        elif p["zeta0"] > 0:
            checks["exponent_at_least_d_plus_0.9"] = run.exponent >= p["d"] + 0.9
        if cfg.plots and p["zeta0"] != 0:
            from . import plotting

            files.append(plotting.zeta_decay(run, out.path(".png")))
    else:
        spec = igm.B_spectrum(p["zeta"], p["d"])
        dense = np.sort(igm.B_spectrum_dense(p["zeta"], p["d"]))
        err = float(np.max(np.abs(spec.eigenvalues - dense)))
        values |= {"nu": spec.nu, "closed_form": spec.eigenvalues, "dense": dense, "max_difference": err}
        checks["closed_form_matches_dense"] = err <= 1e-10
        checks["invertible"] = spec.invertible
    return checks, values, files, out


def cmd_modes(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    files, checks, values = [], {}, {}
    if cfg.action == "run":
        te = np.linspace(p["t0"], p["t_end"], p["n_samples"])
        m0 = linmodes.ModeState(p["ell"], p["d"], p["t0"], p["psi0"], p["dpsi0"])
        run = linmodes.integrate_mode(m0, p["t_end"], te, p["rtol"], p["atol"])
        files.append(atomic_write(out.path(".csv"), csv_text(["t", "psi", "dpsi", "energy"], run.samples())))
        E = run.energy
        values |= {"energy_initial": E[0], "energy_final": E[-1], "lambda": m0.lam}
        if p["ell"] >= 2:
            checks["energy_nonincreasing"] = bool(np.all(np.diff(E) <= 1e-12 * abs(E[0])))
        if cfg.plots:
            from . import plotting

            files.append(plotting.mode_run(run, out.path(".png")))
    else:
        rng = battery.philox(cfg.seed)
        k = p["bumps"]
        points = 2.0 * np.pi * np.arange(k) / k
        support = min(0.8, 0.45 * 2.0 * np.pi / k)
        eps = np.concatenate([[1.0], rng.uniform(-1.0, 1.0, k - 1)])
        forbidden = ((0, 1), (1, 1)) if k >= 3 else ()
        mb = linmodes.multibump_data(points, eps, forbidden, p["t0"], p["n"], 0.375 * support, support)
        times = np.linspace(p["t0"], p["t_end"], 41)
        run = linmodes.evolve_linear_1d(mb.field, p["t_end"], times)
        sup = np.max(np.abs(run.phi), axis=1)
        proj = linmodes.harmonic_projections(run.phi, forbidden) if forbidden else np.zeros((len(times), 0))
        pmax = np.max(np.abs(proj), axis=1) if proj.size else np.zeros(len(times))
        files.append(atomic_write(out.path(".csv"), csv_text(["t", "supnorm", "forbidden_projection"], np.column_stack([times, sup, pmax]))))
        prof = np.column_stack([np.full(p["n"], times[-1]), run.theta, run.phi[-1], run.dphi[-1]])
        files.append(atomic_write(out.path("-profile.csv"), csv_text(["t", "omega", "phi", "dphi"], prof)))
        need = 0.9 * float(np.max(np.abs(mb.eps))) * p["t_end"]
        values |= {"eps": mb.eps, "points": points, "sup_final": sup[-1], "required": need, "forbidden_max": float(pmax.max())}
        checks["linear_growth"] = bool(sup[-1] >= need)
        checks["forbidden_projection_below_1e-8"] = bool(pmax.max() <= 1e-8)
        if cfg.plots:
            from . import plotting

            idx = np.linspace(0, len(times) - 1, 5).astype(int)
            files.append(plotting.field_profiles(run.theta, times[idx], run.phi[idx], out.path(".png")))
    return checks, values, files, out


def _evolve_state(p) -> ev.GraphField1D:
    sc = p["scenario"]
    if sc == "zero":
        return ev.scenario_zero(p["n"], p["t0"] if p["t0"] is not None else 0.5)
    if sc == "bump":
        return ev.scenario_bump(p["amp"], p["n"], p["t0"] if p["t0"] is not None else 0.5)
    return ev.scenario_translated_patch(p["eps"], p["t0"] if p["t0"] is not None else 1.0, p["n"])


def _evolve_options(p) -> ev.EvolveOptions:
    return ev.EvolveOptions(rtol=p["rtol"], atol=p["atol"], kappa_min=p["kappa_min"], dealias=p["dealias"])


def cmd_evolve(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    out.stem = "evolve-" + p["scenario"] if not cfg.out.endswith(".csv") else out.stem
    s0 = _evolve_state(p)
    traj = ev.evolve(s0, p["t_end"], _evolve_options(p))
    files = []
    for t, snap in sorted(traj.snapshots.items()):
        rows = np.column_stack([np.full(traj.n, t), traj.theta, snap.phi, snap.dphi])
        files.append(atomic_write(out.path(f"-snap-t{t:09.3f}.csv"), csv_text(["t", "omega", "phi", "dphi"], rows)))
    diag = np.column_stack([traj.t, traj.energy, traj.supnorm, traj.ushift_range])
    files.append(atomic_write(out.path("-diagnostics.csv"), csv_text(["t", "energy", "supnorm", "ushift_range"], diag)))
    audit = ev.residual_audit(traj)
    E0 = traj.energy[0]
    checks = {"h_residual_below_1e-6": audit.max_h <= 1e-6}
    values = {
        "energy_initial": E0,
        "energy_max": float(np.max(traj.energy)),
        "h_residual": audit.max_h,
        "igm_curl": float(np.max(audit.curl)),
        "igm_div": float(np.max(audit.div)),
        "supnorm_final": traj.supnorm[-1],
        "nfev": traj.nfev,
    }
    if p["scenario"] == "bump":
        checks["energy_within_factor_2"] = bool(np.max(traj.energy) <= 2.0 * E0 + 1e-300)
    if p["scenario"] == "zero":
        checks["stays_zero"] = bool(traj.supnorm[-1] <= 1e-14)
    if p["scenario"] == "translated-patch":
        track = ev.patch_tracking(traj, p["eps"])
        us = ev.ushift(traj)
        cone = ev.cone_test(traj, p["eps"])
        checks["tracking_below_1e-6"] = track.max_error <= 1e-6
        checks["cone_test"] = cone.passed
        checks.pop("h_residual_below_1e-6")  # the join between caps is not resolved to 1e-6
        values |= {"tracking_error": track.max_error, "u_inf_min": float(us.u_inf.min()), "u_inf_max": float(us.u_inf.max())}
        u_rows = np.column_stack([np.full(traj.n, traj.t[-1]), traj.theta, us.u_inf, us.error])
        files.append(atomic_write(out.path("-ushift.csv"), csv_text(["t", "omega", "u_inf", "error"], u_rows)))
    if cfg.plots:
        from . import plotting

        files.append(plotting.evolve_diagnostics(traj, out.path("-diagnostics.png")))
        ts = sorted(traj.snapshots)
        files.append(plotting.field_profiles(traj.theta, ts, [traj.snapshots[t].phi for t in ts], out.path("-profiles.png")))
    return checks, values, files, out


def cmd_audit(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    if cfg.action == "stress":
        return _audit_stress(cfg, out)
    return _audit_energy(cfg, out)


def _audit_stress(cfg: RunConfig, out: Outputs):
    """Randomized dual-path and coercivity audit; JSON {check, samples, max_violation, pass}."""
    p = cfg.params
    rng = battery.philox(p["seed"])
    dual, viol, worst = 0.0, 0.0, np.inf
    pairs = ((1.0, 1.0), (0.5, 2.0), (3.0, 0.7))
    for i in range(p["samples"]):
        d = 1 + i % 3
        A, B = pairs[(i // 3) % 3]
        G = stress.sample_near_metric(rng, A, B, d)
        phi = stress.random_sym(rng, d + 1)
        S1, S2 = stress.S_tensor(G, phi), stress.S_expanded(G, phi)
        dual = max(dual, float(np.max(np.abs(S1 - S2)) / (1.0 + np.max(np.abs(S1)))))
        rep = stress.coercivity_check(G, A, B, phi)
        if rep.holds is not None:
            viol = max(viol, (rep.bound - rep.lhs) / max(rep.bound, 1e-300))
            worst = min(worst, rep.lhs / rep.bound if rep.bound > 0 else np.inf)
    max_violation = max(0.0, viol)
    ok = dual <= 1e-12 and max_violation == 0.0
    doc = {
        "check": "stress",
        "samples": p["samples"],
        "max_violation": max_violation,
        "pass": bool(ok),
        "dual_path": dual,
        "min_coercivity_ratio": worst,
        "seed": p["seed"],
        "rng": RNG_NAME,
    }
    atomic_write(out.path(".json"), to_json(doc) + "\n")
    return None, doc, [], out


def _audit_energy(cfg: RunConfig, out: Outputs):
    """Basic energy inequality along a run reproduced from its summary JSON."""
    p = cfg.params
    try:
        with open(p["run"], encoding="utf-8") as fh:
            doc = json.load(fh)
        conf = doc["config"]
        if conf["command"] != "evolve":
            raise ConfigError("run", "summary is not from an evolve run")
        rp = conf["params"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("run", f"unreadable run summary ({exc})") from None
    s0 = _evolve_state(rp)
    t1 = min(rp["t_end"], s0.t + p["window"])
    traj = ev.evolve(s0, t1, _evolve_options(rp) if "kappa_min" in rp else ev.EvolveOptions())
    ts = np.linspace(s0.t, t1, p["nt"])
    fields = []
    for t in ts:
        st = traj.at(t)
        acc, _ = ev.acceleration(t, st.phi, st.dphi, 0.0, traj.options.dealias)
        fields.append(ev.surface_igm_field(t, st.phi, st.dphi, acc).phi)
    rep = stress.basic_energy_audit(ts, np.array(fields))
    values = {
        "lhs": rep.lhs,
        "identity_residual": rep.identity_residual,
        "majorant": rep.majorant,
        "constant": rep.constant,
        "tolerance": rep.tolerance,
        "energy_initial": rep.energy[0],
        "energy_final": rep.energy[-1],
        "interval": [s0.t, t1],
    }
    rows = np.column_stack([ts, rep.energy])
    files = [atomic_write(out.path(".csv"), csv_text(["t", "energy"], rows))]
    return {"energy_inequality": rep.passed}, values, files, out


def _one(i: int) -> battery.Check:
    return battery.run(battery.ALL[i - 1])


def cmd_suite(cfg: RunConfig):
    p, out = cfg.params, Outputs.for_config(cfg)
    chosen = list(p["only"]) or list(range(1, len(battery.ALL) + 1))
    if p["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=p["jobs"]) as pool:
            results = list(pool.map(_one, chosen))
    else:
        results = [_one(i) for i in chosen]
    for c in results:
        print(c.line())
    rows = [(c.number, int(c.passed)) for c in results]
    files = [atomic_write(out.path(".csv"), "criterion,passed\n" + "".join(f"{a},{b}\n" for a, b in rows))]
    checks = {f"criterion_{c.number:02d}": c.passed for c in results}
    values = {f"criterion_{c.number:02d}": {"name": c.name, "metrics": c.metrics} for c in results}
    return checks, values, files, out


COMMANDS = {"rotsym": cmd_rotsym, "igm": cmd_igm, "modes": cmd_modes, "evolve": cmd_evolve, "audit": cmd_audit, "suite": cmd_suite}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Dispatch a validated config; returns (exit code, report)."""
    try:
        checks, values, files, out = COMMANDS[cfg.command](cfg)
    except (ev.GuardBreach, ev.StepFailure, rotsym.StepFailure, rotsym.UndecidedError, ev.DegenerateMetric, ev.TimelikeViolation) as exc:
        return EXIT_GUARD, {"error": type(exc).__name__, "message": str(exc)}
    if checks is None:  # command wrote its own report
        return (EXIT_OK if values["pass"] else EXIT_INVARIANT), values
    doc = write_report(out, cfg, checks, values, files + [out.path(".json")])
    return (EXIT_OK if doc["pass"] else EXIT_INVARIANT), doc


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"cmcflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, doc = run(cfg)
    except ConfigError as exc:
        print(f"cmcflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_GUARD:
        print(f"cmcflow: numerical guard breach: {doc['error']}: {doc['message']}", file=sys.stderr)
    elif cfg.command != "suite":
        status = "pass" if code == EXIT_OK else "FAIL"
        name = " ".join(x for x in (cfg.command, cfg.action) if x)
        print(f"{status}: {name} -> {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
