"""Batch front end: config parsing, pipeline orchestration, table/csv/json output.

Configuration is a flat ``key = value`` text file (# comments allowed),
every key overridable by the command-line flag of the same name; the
DIRAC_FEM_CONFIG environment variable names a default config file. Exit
codes: 0 success, 2 config error, 3 physics invariant, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from . import analysis
from .analysis import Label, classify, coincidence_report, truncate_to_genuine
from .assembly import SCHEME_SUPG, SCHEMES, assemble, compute_tau
from .discretization import build_exponential_mesh
from .eigensolver import solve
from .errors import ConfigError, InsufficientLevelsError, PhysicsError, SolverError
from .physics import (
    SPEED_OF_LIGHT,
    NucleusKind,
    OperatorParams,
    PotentialModel,
    reference_binding,
    reference_spectrum,
)

MODES = ("solve", "compare-schemes", "convergence", "coincidence", "verify-tau")
FORMATS = ("table", "csv", "json")
ENV_CONFIG = "DIRAC_FEM_CONFIG"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_SOLVER = 4


@dataclass
class RunConfig:
    Z: float = 1.0
    kappa: int | None = None
    abs_kappa: int | None = None
    m: float = 1.0
    c_value: float = SPEED_OF_LIGHT
    scheme: str = SCHEME_SUPG
    nucleus: str = "point"
    radius: float | None = None
    a: float | None = None
    b: float | None = None
    n: int = 100
    mesh_gamma: float = 6.0
    levels: int = 6
    match_tol: float | None = None
    reality_tol: float = 1e-8
    free_lower_slope: bool = False
    mode: str = "solve"
    format: str = "table"
    out: str | None = None
    n_list: tuple[int, ...] | None = None

    def finalize(self) -> "RunConfig":
        """Fill derived defaults and validate; raises ConfigError."""
        cfg = replace(self)
        if cfg.mode not in MODES:
            raise ConfigError(f"unknown mode {cfg.mode!r}; expected one of {MODES}")
        if cfg.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {cfg.scheme!r}; expected one of {SCHEMES}")
        if cfg.format not in FORMATS:
            raise ConfigError(f"unknown format {cfg.format!r}; expected one of {FORMATS}")
        if cfg.nucleus not in ("point", "extended"):
            raise ConfigError(f"nucleus must be 'point' or 'extended', got {cfg.nucleus!r}")
        if cfg.nucleus == "extended" and (cfg.radius is None or cfg.radius <= 0):
            raise ConfigError("extended nucleus requires a positive --radius")
        if cfg.kappa is not None and cfg.abs_kappa is not None:
            raise ConfigError("give either kappa or abs_kappa, not both")
        if cfg.kappa is None and cfg.abs_kappa is None:
            cfg.abs_kappa = 1
        if cfg.abs_kappa is not None and cfg.abs_kappa < 1:
            raise ConfigError("abs_kappa must be >= 1")
        if cfg.n < 1:
            raise ConfigError("n must be >= 1")
        if cfg.levels < 1:
            raise ConfigError("levels must be >= 1")
        if cfg.a is None:
            cfg.a = 1e-5
        if cfg.b is None:
            cfg.b = 60.0 / cfg.Z
        if cfg.n_list is None:
            cfg.n_list = (cfg.n, 2 * cfg.n, 4 * cfg.n)
        return cfg

    def matching_tolerance(self) -> float:
        """Explicit match_tol, or the per-scheme default."""
        if self.match_tol is not None:
            return self.match_tol
        return analysis.match_tol_for(self.scheme)

    def potential(self) -> PotentialModel:
        kind = NucleusKind.POINT if self.nucleus == "point" else NucleusKind.EXTENDED_UNIFORM
        return PotentialModel(kind=kind, Z=self.Z, R=self.radius)

    def params(self, kappa: int) -> OperatorParams:
        return OperatorParams(Z=self.Z, kappa=kappa, m=self.m, c=self.c_value)

    def kappas(self) -> tuple[int, ...]:
        if self.kappa is not None:
            return (self.kappa,)
        return (self.abs_kappa, -self.abs_kappa)


_BOOL_KEYS = {"free_lower_slope"}
_INT_KEYS = {"kappa", "abs_kappa", "n", "levels"}
_FLOAT_KEYS = {"Z", "m", "c_value", "radius", "a", "b", "mesh_gamma", "match_tol", "reality_tol"}
_STR_KEYS = {"scheme", "nucleus", "mode", "format", "out"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "n_list":
            return tuple(int(p) for p in raw.split(","))
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def load_config_file(path: str) -> dict:
    """Parse a flat key = value file into a field dict."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = line.split("=", 1)
                key = key.strip()
                values[key] = _parse_value(key, raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    for source in (file_values, flag_values):
        for key, value in source.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                setattr(cfg, key, value)
    return cfg.finalize()


# --- pipeline ----------------------------------------------------------------


def _solve_classified(cfg: RunConfig):
    """Solve and classify for every configured kappa; returns per-kappa data."""
    potential = cfg.potential()
    mesh = build_exponential_mesh(cfg.a, cfg.b, cfg.n, cfg.mesh_gamma)
    out = {}
    spectra = {}
    for kappa in sorted(cfg.kappas(), reverse=True):  # negative kappa last
        params = cfg.params(kappa)
        system = assemble(cfg.scheme, params, mesh, potential,
                          free_lower_slope=cfg.free_lower_slope)
        spectra[kappa] = solve(system, reality_tol=cfg.reality_tol)
    for kappa, spectrum in spectra.items():
        params = cfg.params(kappa)
        reference = reference_spectrum(params, cfg.levels)
        opposite = None
        if kappa > 0:
            neg = spectra.get(-kappa)
            if neg is not None and len(neg.bindings):
                opposite = float(neg.bindings[0])
            else:
                opposite = reference_binding(cfg.params(-kappa), 0).binding
        classified = classify(spectrum.bindings[:cfg.levels + 8], reference,
                              opposite_kappa_ground=opposite,
                              match_tol=cfg.matching_tolerance())
        out[kappa] = (spectrum, classified)
    # Rows are anchored on the kappa < 0 column: it must supply the requested
    # genuine levels; in pair mode the kappa > 0 column is cut to the same
    # row count so entries pair index by index.
    anchor = min(out)
    spectrum, classified = out[anchor]
    classified = truncate_to_genuine(classified, cfg.levels)
    if classified.count(Label.GENUINE) < cfg.levels:
        raise InsufficientLevelsError(
            f"kappa={anchor}: only {classified.count(Label.GENUINE)} of "
            f"{cfg.levels} genuine levels found"
        )
    out[anchor] = (spectrum, classified)
    depth = len(classified.entries)
    for kappa in out:
        if kappa != anchor:
            spectrum, other = out[kappa]
            out[kappa] = (spectrum, type(other)(entries=other.entries[:depth]))
    return out


def _long_rows(per_kappa, scheme: str | None = None):
    """One row per classified entry: the csv/json schema."""
    rows = []
    for kappa in sorted(per_kappa, reverse=True):
        _, classified = per_kappa[kappa]
        level = 0
        for e in classified.entries:
            if e.label is Label.GENUINE:
                level += 1
            row = {
                "level": level if e.label is Label.GENUINE else None,
                "kappa": kappa,
                "binding": float(e.binding),
                "reference": None if e.reference is None else float(e.reference.binding),
                "rel_error": None if e.rel_error is None else float(e.rel_error),
                "label": e.label.value,
            }
            if scheme is not None:
                row["scheme"] = scheme
            rows.append(row)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _render_csv(rows, columns) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _render_solve_table(per_kappa, title: str) -> str:
    kappas = sorted(per_kappa, reverse=True)
    heads = ["level"] + [f"kappa={k:+d}" for k in kappas] + ["reference", "label"]
    # pair classified entries row by row; levels count genuine rows
    entry_lists = [per_kappa[k][1].entries for k in kappas]
    depth = max(len(es) for es in entry_lists)
    lines = [title, "  ".join(f"{h:>18}" for h in heads)]
    level = 0
    for i in range(depth):
        cells = []
        row_entries = [es[i] if i < len(es) else None for es in entry_lists]
        anchor = row_entries[-1] or row_entries[0]
        genuine_row = anchor is not None and anchor.label is Label.GENUINE
        if genuine_row:
            level += 1
            cells.append(f"{level:>18}")
        else:
            cells.append(f"{'=>':>18}")
        for e in row_entries:
            cells.append(f"{_fmt(e.binding) if e else '':>18}")
        ref = anchor.reference.binding if (anchor and anchor.reference) else None
        label = anchor.label.value if anchor else ""
        if any(e is not None and e.label is Label.COINCIDENCE for e in row_entries):
            label = Label.COINCIDENCE.value
        cells.append(f"{_fmt(ref):>18}")
        cells.append(f"  {label}")
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


_SOLVE_COLUMNS = ("level", "kappa", "binding", "reference", "rel_error", "label")


def _mode_solve(cfg: RunConfig):
    per_kappa = _solve_classified(cfg)
    rows = _long_rows(per_kappa)
    title = (f"scheme={cfg.scheme} Z={_fmt(cfg.Z)} n={cfg.n} "
             f"a={_fmt(cfg.a)} b={_fmt(cfg.b)} gamma={_fmt(cfg.mesh_gamma)}")
    table = _render_solve_table(per_kappa, title)
    return rows, _SOLVE_COLUMNS, table


def _mode_compare(cfg: RunConfig):
    rows, tables = [], []
    for scheme in SCHEMES:
        sub = replace(cfg, scheme=scheme).finalize()
        per_kappa = _solve_classified(sub)
        rows.extend(_long_rows(per_kappa, scheme=scheme))
        tables.append(_render_solve_table(per_kappa, f"--- {scheme} ---"))
    return rows, _SOLVE_COLUMNS + ("scheme",), "\n".join(tables)


def _mode_convergence(cfg: RunConfig):
    kappa = cfg.kappas()[0]
    study = analysis.convergence_study(
        cfg.scheme, cfg.params(kappa), cfg.potential(), cfg.n_list, cfg.levels,
        a=cfg.a, b=cfg.b, gamma=cfg.mesh_gamma, match_tol=cfg.match_tol,
        reality_tol=cfg.reality_tol, free_lower_slope=cfg.free_lower_slope)
    rows = []
    for i, n in enumerate(study.n_values):
        for lvl in range(cfg.levels):
            err = study.errors[i, lvl]
            rows.append({"n": n, "level": lvl + 1, "kappa": kappa,
                         "rel_error": None if err != err else float(err),
                         "order": None})
    for lvl in range(cfg.levels):
        o = study.orders[lvl]
        rows.append({"n": None, "level": lvl + 1, "kappa": kappa,
                     "rel_error": None, "order": None if o != o else float(o)})
    lines = [f"convergence scheme={cfg.scheme} kappa={kappa:+d} Z={_fmt(cfg.Z)}",
             "  ".join([f"{'n':>8}"] + [f"{'lvl ' + str(l + 1):>12}" for l in range(cfg.levels)])]
    for i, n in enumerate(study.n_values):
        cells = [f"{n:>8}"] + [f"{_fmt(float(e)) if e == e else '-':>12}" for e in study.errors[i]]
        lines.append("  ".join(cells))
    cells = [f"{'order':>8}"] + [f"{_fmt(float(o)) if o == o else '-':>12}" for o in study.orders]
    lines.append("  ".join(cells))
    return rows, ("n", "level", "kappa", "rel_error", "order"), "\n".join(lines) + "\n"


def _mode_coincidence(cfg: RunConfig):
    if cfg.kappa is not None:
        raise ConfigError("coincidence mode requires abs_kappa (a +/- pair)")
    potential = cfg.potential()
    mesh = build_exponential_mesh(cfg.a, cfg.b, cfg.n, cfg.mesh_gamma)
    spectra = {}
    for kappa in (cfg.abs_kappa, -cfg.abs_kappa):
        system = assemble(cfg.scheme, cfg.params(kappa), mesh, potential,
                          free_lower_slope=cfg.free_lower_slope)
        spectra[kappa] = solve(system, reality_tol=cfg.reality_tol)
    report = coincidence_report(spectra[cfg.abs_kappa], spectra[-cfg.abs_kappa],
                                tol=cfg.matching_tolerance())
    rows = [{"pair": 0, "pos_binding": report.first_pos, "neg_binding": report.first_neg,
             "rel_diff": report.first_rel_diff,
             "note": "coincidence" if report.present else "distinct"}]
    for i, (p, m, r) in enumerate(report.pairs[:cfg.levels], start=1):
        rows.append({"pair": i, "pos_binding": p, "neg_binding": m, "rel_diff": r,
                     "note": "physical-degeneracy"})
    lines = [f"coincidence scheme={cfg.scheme} Z={_fmt(cfg.Z)} |kappa|={cfg.abs_kappa}: "
             f"{'PRESENT' if report.present else 'ABSENT'} "
             f"(first pair rel diff {_fmt(report.first_rel_diff)})"]
    for row in rows:
        lines.append(f"  pair {row['pair']:>2}: {_fmt(row['pos_binding']):>18} vs "
                     f"{_fmt(row['neg_binding']):>18}  rel={_fmt(row['rel_diff'])}  {row['note']}")
    return rows, ("pair", "pos_binding", "neg_binding", "rel_diff", "note"), "\n".join(lines) + "\n"


#: Element pair and c sweep used by the verify-tau report.
TAU_DEMO_H = (0.009, 0.011)
TAU_DEMO_C = (1e3, 1e4, 1e5)


def _mode_verify_tau(cfg: RunConfig):
    mesh = build_exponential_mesh(cfg.a, cfg.b, cfg.n, cfg.mesh_gamma)
    profile = compute_tau(mesh)
    h = mesh.h
    worst = 0.0
    for e in range(2, mesh.element_count + 1):
        r = analysis.tau_rule_residual(h[e - 2], h[e - 1], profile.tau[e - 1])
        worst = max(worst, abs(r) / h[e - 1] ** 2)
    rows = [{"check": "rule-residual", "c": None, "dev_stabilized": None,
             "dev_unstabilized": None, "value": worst,
             "passed": bool(worst < 1e-13)}]
    hj, hj1 = TAU_DEMO_H
    tau_star = (9.0 / 35.0) * hj1 * (hj1 - hj) / (hj1 + hj)
    for c in TAU_DEMO_C:
        lam_s = analysis.tau_limit_lambda(hj, hj1, tau_star, c)
        lam_0 = analysis.tau_limit_lambda(hj, hj1, 0.0, c)
        dev_s = abs(lam_s - c**2) / c**2
        dev_0 = abs(lam_0 - c**2) / c**2
        rows.append({"check": "limit-lambda", "c": c, "dev_stabilized": dev_s,
                     "dev_unstabilized": dev_0, "value": None,
                     "passed": bool(dev_s < dev_0)})
    lines = [f"stability-parameter verification (mesh n={cfg.n}, h pair {hj}/{hj1})",
             f"  max scaled rule residual over mesh: {worst:.3e}  "
             f"({'ok' if rows[0]['passed'] else 'FAIL'})"]
    for row in rows[1:]:
        lines.append(f"  c={_fmt(row['c']):>8}: |lam1-c^2|/c^2 stabilized={_fmt(row['dev_stabilized'])}"
                     f" unstabilized={_fmt(row['dev_unstabilized'])}  "
                     f"({'improved' if row['passed'] else 'NOT improved'})")
    ok = all(r["passed"] for r in rows)
    return rows, ("check", "c", "dev_stabilized", "dev_unstabilized", "value", "passed"), \
        "\n".join(lines) + "\n", ok


def run(config: RunConfig, stream=None) -> int:
    """Execute one mode and emit the result; returns the process exit code."""
    stream = stream if stream is not None else sys.stdout
    ok = True
    if config.mode == "solve":
        rows, columns, table = _mode_solve(config)
    elif config.mode == "compare-schemes":
        rows, columns, table = _mode_compare(config)
    elif config.mode == "convergence":
        rows, columns, table = _mode_convergence(config)
    elif config.mode == "coincidence":
        rows, columns, table = _mode_coincidence(config)
    else:
        rows, columns, table, ok = _mode_verify_tau(config)

    if config.format == "table":
        text = table
    elif config.format == "csv":
        text = _render_csv(rows, columns)
    else:
        text = json.dumps({"mode": config.mode, "scheme": config.scheme,
                           "rows": rows}, indent=2, sort_keys=True) + "\n"
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
    return EXIT_OK if ok else EXIT_SOLVER


def _make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirac-fem",
                                description="Radial Coulomb-Dirac finite element solver")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--Z", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--abs-kappa", dest="abs_kappa", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--c-value", dest="c_value", type=float)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--nucleus", choices=("point", "extended"))
    p.add_argument("--radius", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--mesh-gamma", dest="mesh_gamma", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--match-tol", dest="match_tol", type=float)
    p.add_argument("--reality-tol", dest="reality_tol", type=float)
    p.add_argument("--free-lower-slope", dest="free_lower_slope",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out")
    p.add_argument("--n-list", dest="n_list",
                   type=lambda s: tuple(int(x) for x in s.split(",")))
    return p


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        config_path = args.config or os.environ.get(ENV_CONFIG)
        file_values = load_config_file(config_path) if config_path else {}
        flag_values = {k: v for k, v in vars(args).items() if k != "config"}
        config = build_config(file_values, flag_values)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
