"""Command-line driver: ``magnus-lanczos {run,converge,weights,stability-demo,validate}``."""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .grid import make_grid
from .magnus import stability_demo
from .quad import POLYNOMIALS, appendix_weights, gl_rule, triangle_weights
from .sim import (
    SimulationAborted,
    SimulationConfig,
    convergence_study,
    l2_error,
    propagate,
    reference_solution,
)

OUT_ENV = "MAGNUS_OUT_DIR"
CORRUPT_ENV = "MAGNUS_VALIDATE_CORRUPT"

EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_FAIL = 1


class ConfigError(ValueError):
    pass


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s):
    return None if str(s).strip().lower() in ("", "none", "auto") else int(s)


def _int_list(s):
    return [int(v) for v in str(s).replace(",", " ").split()]


# section -> key -> parser
SCHEMA = {
    "grid": {"a": float, "b": float, "m": int},
    "time": {"t_final": float, "n_steps": int},
    "scheme": {
        "scheme": str,
        "n_knots": _opt_int,
        "literal": _bool,
        "exponentiator": str,
        "lanczos_m": int,
        "fd_order": _opt_int,
    },
    "potential": {
        "id": str,
        "amplitude": float,
        "omega": float,
        "envelope": str,
        "slope": float,
        "pulse_T": float,
        "expr": str,
    },
    "initial": {"state": str, "k": int},
    "output": {"energy_stride": int},
    "reference": {"n_steps": _opt_int, "scheme": str, "n_knots": _opt_int},
    "study": {"steps": _int_list, "fit_lo": float, "fit_hi": float},
}

_FLAT = {}
for _sec, _keys in SCHEMA.items():
    for _k in _keys:
        _FLAT.setdefault(_k, []).append(_sec)


def load_config(path: str | None, overrides=()) -> dict:
    """Parse an INI file plus ``key=value`` overrides into ``{section: {key: value}}``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")
    raw = {s: dict(cp[s]) for s in cp.sections()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        if "." in key:
            sec, key = key.split(".", 1)
        else:
            secs = _FLAT.get(key)
            if not secs:
                raise ConfigError(f"unknown config key {key!r}")
            # a bare key names its first section, e.g. n_steps -> time.n_steps
            sec = secs[0]
        raw.setdefault(sec, {})[key] = value
    out = {}
    for sec, items in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        out[sec] = {}
        for key, value in items.items():
            parser = SCHEMA[sec].get(key)
            if parser is None:
                raise ConfigError(f"unknown config key {key!r} in section [{sec}]")
            try:
                out[sec][key] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {exc}") from None
    return out


def simulation_config(conf: dict) -> SimulationConfig:
    from .sim import POTENTIAL_IDS

    g, t, s = conf.get("grid", {}), conf.get("time", {}), conf.get("scheme", {})
    p = dict(conf.get("potential", {}))
    pid = p.pop("id", "")
    if pid not in POTENTIAL_IDS:
        raise ConfigError(f"unknown potential {pid!r}; choose from {', '.join(POTENTIAL_IDS)}")
    init = conf.get("initial", {})
    kwargs = dict(
        potential=pid,
        potential_params=p,
        initial="plane" if init.get("state") == "plane" else init.get("state", "gaussian"),
        initial_k=init.get("k", 1),
        energy_stride=conf.get("output", {}).get("energy_stride", 100),
        **{k: v for k, v in g.items()},
        **{k: v for k, v in t.items()},
        **{k: v for k, v in s.items()},
    )
    try:
        cfg = SimulationConfig(**kwargs)
        from .magnus import MagnusScheme

        MagnusScheme(cfg.scheme, cfg.h, cfg.n_knots)
        cfg.make_potential()
        cfg.make_grid()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _reference(cfg, conf):
    ref = conf.get("reference", {})
    n = ref.get("n_steps")
    if not n:
        return None
    return reference_solution(cfg, n, ref.get("scheme", "theta4"), ref.get("n_knots"))


def cmd_run(args) -> int:
    conf = load_config(args.config, args.override)
    cfg = simulation_config(conf)
    out = _out_dir(args)
    stage = "reference"
    try:
        ref = _reference(cfg, conf)
        stage = "propagate"
        rep = propagate(cfg, ref)
    except SimulationAborted as exc:
        print(f"error: {stage}: {exc}", file=sys.stderr)
        return EXIT_ABORT
    grid = cfg.make_grid()
    write_csv(out / "final_state.csv", ["x", "re_u", "im_u"], zip(grid.nodes, rep.final.real, rep.final.imag))
    norms = rep.norms
    stride = cfg.energy_stride
    trace_rows = [(int(s), t, norms[int(s)], k, p, e) for s, t, k, p, e in rep.trace]
    write_csv(out / "trace.csv", ["step", "t", "norm", "kinetic", "potential", "total"], trace_rows)
    report = {
        "scheme": cfg.scheme,
        "n_knots": cfg.n_knots,
        "exponentiator": cfg.exponentiator,
        "lanczos_m": cfg.lanczos_m if cfg.exponentiator == "lanczos" else None,
        "potential": cfg.potential,
        "m": cfg.m,
        "t_final": cfg.t_final,
        "n_steps": cfg.n_steps,
        "h": cfg.h,
        "error": rep.error,
        "wall_time": rep.wall_time,
        "fft_count": rep.fft_count,
        "fft_per_apply": rep.fft_per_apply,
        "norm_drift": rep.norm_drift,
        "energy_stride": stride,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"{cfg.scheme} h={cfg.h:.6g} steps={cfg.n_steps} fft/apply={rep.fft_per_apply} "
          f"norm_drift={rep.norm_drift:.3g}" + ("" if rep.error is None else f" error={rep.error:.6g}"))
    return 0


def cmd_converge(args) -> int:
    conf = load_config(args.config, args.override)
    cfg = simulation_config(conf)
    study = conf.get("study", {})
    steps = study.get("steps")
    if not steps:
        raise ConfigError("converge needs study.steps")
    out = _out_dir(args)
    ref_conf = conf.get("reference", {})
    ref_steps = ref_conf.get("n_steps") or 16 * max(steps)
    try:
        reference = reference_solution(cfg, ref_steps, ref_conf.get("scheme", "theta4"), ref_conf.get("n_knots"))
        table = convergence_study(
            cfg, steps, reference=reference, jobs=args.jobs,
            fit_range=(study.get("fit_lo", 0.0), study.get("fit_hi", np.inf)),
        )
    except SimulationAborted as exc:
        print(f"error: converge: {exc}", file=sys.stderr)
        return EXIT_ABORT
    rows = [(r.h, r.error, r.slope_running, r.wall_time, r.fft_total) for r in table.rows]
    write_csv(out / "convergence.csv", ["h", "l2_error", "slope_running", "wall_time_s", "fft_total"], rows)
    for r in table.rows:
        print(f"h={r.h:.6g} error={r.error:.4e} slope={'' if r.slope_running is None else f'{r.slope_running:.3f}'}")
    print("fitted slope: " + ("n/a" if table.slope is None else f"{table.slope:.3f}"))
    return 0


def cmd_weights(args) -> int:
    rule = gl_rule(args.knots, args.h)
    names = list(POLYNOMIALS) if args.name == "all" else [args.name]
    out = _out_dir(args)
    rows = []
    for name in names:
        if name not in POLYNOMIALS:
            raise ConfigError(f"unknown weight function {name!r}; choose from {sorted(POLYNOMIALS)}")
        w = triangle_weights(POLYNOMIALS[name], rule).w
        gold = appendix_weights(name, args.h) if args.knots == 3 and name in ("psi", "varphi1", "varphi2", "phi1", "phi2") else None
        for j in range(rule.n_knots):
            for k in range(rule.n_knots):
                rows.append((name, j, k, w[j, k], None if gold is None else gold[j, k]))
        print(f"{name}:\n{np.array2string(w, precision=6)}")
    with open(out / "weights.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("name,j,k,weight,closed_form\n")
        for name, j, k, v, gv in rows:
            fh.write(f"{name},{j},{k},{_fmt(v)},{_fmt(gv)}\n")
    return 0


def cmd_stability(args) -> int:
    grid = make_grid(0, 2 * np.pi, args.m)
    from .sim import potential_catalogue

    V = potential_catalogue("custom", {"expr": args.expr})(grid.nodes, 0.0)
    ts = np.logspace(np.log10(args.t_min), np.log10(args.t_max), args.n_t)
    rows = stability_demo(grid, V, ts)
    out = _out_dir(args)
    write_csv(out / "stability.csv", ["t", "norm_commutator", "norm_naive"],
              [(r.t, r.norm_commutator, r.norm_naive) for r in rows])
    for r in rows[:: max(1, len(rows) // 8)] + [rows[-1]]:
        print(f"t={r.t:.3e}  |exp(tA)|={r.norm_commutator:.12f}  |exp(tB)|={r.norm_naive:.6g}")
    return 0


def cmd_validate(args) -> int:
    from .validation import run_all

    corrupt = args.corrupt or os.environ.get(CORRUPT_ENV)
    checks, elapsed = run_all(corrupt)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  value={c.value:.3e}  limit={c.limit:.1e}")
    failed = [c.name for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed in {elapsed:.1f} s")
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_FAIL
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magnus-lanczos", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", "-c", help="INI experiment file")
            p.add_argument("--override", "-o", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")

    p = sub.add_parser("run", help="propagate one configuration")
    common(p)
    p.set_defaults(fn=cmd_run)
    p = sub.add_parser("converge", help="error against a fine reference for several step counts")
    common(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_converge)
    p = sub.add_parser("weights", help="triangle weight matrices")
    common(p, config=False)
    p.add_argument("--name", default="all")
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--knots", type=int, default=3)
    p.set_defaults(fn=cmd_weights)
    p = sub.add_parser("stability-demo", help="exp(t[K2,D_V]) against the naive discretisation")
    common(p, config=False)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--expr", default="sin(x)")
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--n-t", type=int, default=40)
    p.set_defaults(fn=cmd_stability)
    p = sub.add_parser("validate", help="embedded oracle checks")
    common(p, config=False)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
