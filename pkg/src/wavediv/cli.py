"""Command line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 negative
mathematical result (e.g. no covering found).  Every command that writes to
a file also writes its resolved configuration to ``<output>.config.json``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .besov import besov_norm, scale_profile, sup_coefficient_bound, weighted_norm
from .divergence import EstimatorSettings, profiles, profiles_csv, summary_csv
from .dyadic import BesovParams, CoefficientField
from .generators import (SaturatingConfig, branch_field, canonical_rational_field, default_cutoff,
                         deterministic_e, holder_residual_field, lineability_combination, point_divergent,
                         residual_witness, saturating_random, scale_field)
from .spectrum import (coefficient_count_spectrum, estimate_spectrum, genericity_experiment, grid_points,
                       spectrum_csv)
from .systems import CoveringNotFound, DyadicCovering, find_dyadic_covering, system_by_name

SEED_ENV = "WAVEDIV_SEED"
KINDS = ("saturating", "deterministic", "lineability", "point", "residual", "holder")

EXIT_OK, EXIT_CONFIG, EXIT_NEGATIVE = 0, 1, 2


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer")


def _exp_json(v: float):
    return "inf" if math.isinf(v) else float(v)


def _exp_parse(v) -> float:
    return math.inf if v in ("inf", "Infinity", math.inf) else float(v)


@dataclass
class RunConfig:
    """Resolved configuration of one run; serializes with sorted keys so the
    text is stable across round trips."""

    command: str
    params: BesovParams | None = None
    system: dict = field(default_factory=dict)
    generator: dict = field(default_factory=dict)
    estimator: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int | None = None

    def to_json_obj(self) -> dict:
        p = self.params
        return {
            "command": self.command,
            "params": None if p is None else {"s": p.s, "p": _exp_json(p.p), "q": _exp_json(p.q), "d": p.d},
            "system": self.system,
            "generator": self.generator,
            "estimator": self.estimator,
            "outputs": self.outputs,
            "seed": self.seed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RunConfig":
        p = obj.get("params")
        params = None if p is None else BesovParams(float(p["s"]), _exp_parse(p["p"]), _exp_parse(p["q"]),
                                                    int(p.get("d", 1)))
        return cls(obj["command"], params, dict(obj.get("system") or {}), dict(obj.get("generator") or {}),
                   dict(obj.get("estimator") or {}), dict(obj.get("outputs") or {}), obj.get("seed"))

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_json_obj(json.loads(text))


# -- io helpers ---------------------------------------------------------------


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def _write_with_config(path: str, text: str, cfg: RunConfig) -> None:
    _write(path, text)
    if path != "-":
        Path(path + ".config.json").write_text(cfg.dumps())


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _load_field(path: str) -> CoefficientField:
    return CoefficientField.loads(_read(path))


def _params_from(obj: dict | None, fallback: BesovParams | None = None) -> BesovParams:
    if obj is None:
        if fallback is None:
            raise ConfigError("missing Besov parameters")
        return fallback
    try:
        return BesovParams(float(obj["s"]), _exp_parse(obj["p"]), _exp_parse(obj.get("q", obj["p"])),
                           int(obj.get("d", 1)))
    except KeyError as e:
        raise ConfigError(f"Besov parameters need {e.args[0]!r}")


def _system_cfg(obj: dict | None, d: int) -> dict:
    obj = dict(obj or {"name": "haar"})
    return {"name": str(obj.get("name", "haar")).lower(), "d": int(obj.get("d", d)), "n": int(obj.get("n", 1))}


def _system(sys_cfg: dict):
    return system_by_name(sys_cfg["name"], sys_cfg["d"], sys_cfg["n"])


def _resolve_covering(gen: dict, system) -> DyadicCovering:
    """Use a stored covering when given, else search and store the result."""
    cov = gen.get("covering")
    if cov and "triplets" in cov:
        return DyadicCovering.from_json_obj(cov)
    cov = dict(cov or {})
    res = find_dyadic_covering(system, int(cov.get("max_depth", 1)), float(cov.get("c0", 1.0)),
                               int(cov.get("grid", 8)))
    if isinstance(res, CoveringNotFound):
        raise ConfigError(f"no dyadic covering for this system: {res.to_json_obj()}")
    gen["covering"] = res.to_json_obj()
    return res


def _estimator(obj: dict | None, args=None) -> EstimatorSettings:
    obj = dict(obj or {})
    if args is not None:
        if args.j_min is not None:
            obj["j_min"] = args.j_min
        if args.mode is not None:
            obj["mode"] = args.mode
    return EstimatorSettings(int(obj.get("j_min", 4)), str(obj.get("mode", "max-ratio")),
                             obj.get("window_radius"))


def _estimator_json(st: EstimatorSettings) -> dict:
    return {"j_min": st.j_min, "mode": st.mode, "window_radius": st.window_radius}


def _float_list(text: str | None):
    if text is None:
        return None
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _int_list(text: str | None):
    if text is None:
        return None
    out = []
    for t in text.split(","):
        if ":" in t:
            a, b = t.split(":")
            out.extend(range(int(a), int(b) + 1))
        elif t.strip():
            out.append(int(t))
    return out


def _read_points(path: str, d: int) -> np.ndarray:
    text = _read(path).strip()
    if text.startswith("["):
        pts = np.asarray(json.loads(text), dtype=float)
    else:
        rows = [line.replace(",", " ").split() for line in text.splitlines()
                if line.strip() and not line.lstrip().startswith("#")]
        pts = np.asarray(rows, dtype=float)
    return pts.reshape(-1, d)


# -- commands -----------------------------------------------------------------


def cmd_check_covering(args) -> int:
    sys_cfg = _system_cfg({"name": args.system, "d": args.d, "n": args.n}, args.d)
    system = _system(sys_cfg)
    res = find_dyadic_covering(system, args.max_depth, args.c0, args.grid)
    cfg = RunConfig("check-covering", None, sys_cfg,
                    {"max_depth": args.max_depth, "c0": args.c0, "grid": args.grid},
                    outputs={"covering": args.output})
    if isinstance(res, CoveringNotFound):
        _write_with_config(args.output, json.dumps(res.to_json_obj(), sort_keys=True) + "\n", cfg)
        print(f"no covering: witness x={list(res.witness)}", file=sys.stderr)
        return EXIT_NEGATIVE
    obj = dict(res.to_json_obj(), found=True, L=res.L)
    _write_with_config(args.output, json.dumps(obj, sort_keys=True) + "\n", cfg)
    return EXIT_OK


def _generate(cfg: RunConfig) -> CoefficientField:
    gen = cfg.generator
    kind = gen.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    params = cfg.params
    if params is None:
        raise ConfigError("missing Besov parameters")
    jmax = int(gen.get("jmax", 0))
    if jmax < 1:
        raise ConfigError("jmax must be >= 1")
    N = int(gen.get("n_generators", 1))
    if kind == "deterministic":
        return deterministic_e(params, jmax, N)
    if kind == "lineability":
        if "a" not in gen or "k" not in gen:
            raise ConfigError("lineability needs lists 'a' and 'k'")
        return lineability_combination(params, gen["a"], gen["k"], jmax, N)
    if kind == "holder":
        n = int(gen.get("n", 1))
        src = deterministic_e(BesovParams(params.s, params.p if math.isfinite(params.p) else 2.0,
                                          params.q if math.isfinite(params.q) else 2.0, params.d), jmax, N)
        return holder_residual_field(params.s, n, jmax, src, N)
    sys_cfg = _system_cfg(cfg.system, params.d)
    cfg.system = sys_cfg
    system = _system(sys_cfg)
    cov = _resolve_covering(gen, system)
    if kind == "saturating":
        return saturating_random(SaturatingConfig(params, cov, jmax, int(cfg.seed), N))
    if kind == "point":
        if "x0" not in gen:
            raise ConfigError("point kind needs 'x0'")
        return point_divergent(params, system, cov, gen["x0"], jmax)
    n = int(gen.get("n", 3))
    gen.setdefault("N_n", default_cutoff(n, cov.M))
    F = canonical_rational_field(n, params, cov.M, N)
    return residual_witness(params, cov.M, F, n, jmax, int(gen["N_n"]), N).center


def _generate_config(args) -> RunConfig:
    if args.config:
        obj = json.loads(_read(args.config))
        if "command" in obj:
            cfg = RunConfig.from_json_obj(obj)
        else:
            # flat form: besov block plus generator keys at top level
            gen = {k: v for k, v in obj.items() if k not in ("besov", "params", "system", "seed")}
            cfg = RunConfig("generate", _params_from(obj.get("besov") or obj.get("params")),
                            dict(obj.get("system") or {}), gen, seed=obj.get("seed"))
    else:
        cfg = RunConfig("generate")
    if args.kind:
        cfg.generator["kind"] = args.kind
    if args.jmax is not None:
        cfg.generator["jmax"] = args.jmax
    if args.s is not None or args.p is not None:
        base = cfg.params
        cfg.params = BesovParams(args.s if args.s is not None else base.s,
                                 _exp_parse(args.p) if args.p is not None else base.p,
                                 _exp_parse(args.q) if args.q is not None else (base.q if base else
                                                                              _exp_parse(args.p)),
                                 args.d if args.d is not None else (base.d if base else 1))
    if args.x0 is not None:
        cfg.generator["x0"] = _float_list(args.x0)
    if args.system is not None:
        cfg.system = {"name": args.system}
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.seed is None:
        cfg.seed = default_seed()
    cfg.command = "generate"
    return cfg


def cmd_generate(args) -> int:
    cfg = _generate_config(args)
    fld = _generate(cfg)
    cfg.outputs = {"field": args.output}
    _write_with_config(args.output, fld.dumps() + "\n", cfg)
    return EXIT_OK


def _analysis_inputs(args):
    fld = _load_field(args.field)
    sys_cfg = _system_cfg({"name": args.system, "d": fld.d, "n": args.n}, fld.d)
    if args.d is not None and args.d != fld.d:
        raise ConfigError(f"field has dimension {fld.d}, system requested d={args.d}")
    return fld, sys_cfg, _system(sys_cfg)


def cmd_analyze(args) -> int:
    fld, sys_cfg, system = _analysis_inputs(args)
    if system.d != fld.d:
        raise ConfigError(f"field dimension {fld.d} differs from system dimension {system.d}")
    if (args.points is None) == (args.grid is None):
        raise ConfigError("give exactly one of --points or --grid")
    pts = _read_points(args.points, fld.d) if args.points else grid_points(args.grid, fld.d)
    st = _estimator(None, args)
    profs = profiles(fld, system, pts, st)
    cfg = RunConfig("analyze", fld.besov, sys_cfg, {"field": args.field}, _estimator_json(st),
                    {"profiles": args.output, "summary": args.summary},
                    seed=fld.meta.get("seed"))
    cfg.generator.update({"points": args.points, "grid": args.grid})
    _write_with_config(args.output, profiles_csv(profs), cfg)
    if args.summary:
        _write_with_config(args.summary, summary_csv(profs), cfg)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    fld, sys_cfg, system = _analysis_inputs(args)
    st = _estimator(None, args)
    gammas = _float_list(args.gammas)
    boxes = _int_list(args.box_scales)
    est = estimate_spectrum(fld, system, st, args.grid_bits, gammas, boxes)
    cnt = coefficient_count_spectrum(fld, fld.besov, est.gamma_grid)
    cfg = RunConfig("spectrum", fld.besov, sys_cfg,
                    {"field": args.field, "grid_bits": args.grid_bits, "box_scales": est.box_scales,
                     "gammas": [float(g) for g in est.gamma_grid]},
                    _estimator_json(st), {"spectrum": args.output}, seed=fld.meta.get("seed"))
    _write_with_config(args.output, spectrum_csv(est, cnt, fld.besov), cfg)
    return EXIT_OK


def _base_fields(names, params, jmax):
    out = []
    for name in names:
        if name == "zero":
            out.append(CoefficientField.zeros(params.d, jmax, params))
        elif name == "negate":
            out.append(lambda C: scale_field(C, -1.0))
        elif name.startswith("branch"):
            # single branch at x = 0 decaying like 2^{-(s+1) j} unless a rate is given
            rate = float(name.split(":")[1]) if ":" in name else -(params.s + 1.0)
            out.append(branch_field(params, jmax, rate, [0.0] * params.d))
        elif name.startswith("file:"):
            out.append(_load_field(name[5:]).with_besov(params))
        else:
            raise ConfigError(f"unknown base field {name!r}")
    return out


def cmd_experiment(args) -> int:
    obj = json.loads(_read(args.config))
    if "command" in obj:
        cfg = RunConfig.from_json_obj(obj)
    else:
        cfg = RunConfig("experiment", _params_from(obj.get("besov") or obj.get("params")),
                        dict(obj.get("system") or {}),
                        {k: v for k, v in obj.items() if k not in ("besov", "params", "system", "seed",
                                                                    "estimator")},
                        dict(obj.get("estimator") or {}), seed=obj.get("seed"))
    cfg.command = "experiment"
    if args.trials is not None:
        cfg.generator["trials"] = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.seed is None:
        cfg.seed = default_seed()
    gen = cfg.generator
    trials = int(gen.get("trials", 1))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    params = cfg.params
    cfg.system = _system_cfg(cfg.system, params.d)
    system = _system(cfg.system)
    cov = _resolve_covering(gen, system)
    jmax = int(gen.get("jmax", 14))
    gen["jmax"] = jmax
    names = list(gen.setdefault("base_fields", ["zero"]))
    st = _estimator(cfg.estimator)
    cfg.estimator = _estimator_json(st)
    opts = {k: gen[k] for k in ("n_uniform", "n_dyadic", "tol_min", "tol_median", "tol_slope", "alphas")
            if k in gen}
    report = genericity_experiment(_base_fields(names, params, jmax),
                                   SaturatingConfig(params, cov, jmax, int(cfg.seed)), system, trials, st,
                                   **opts)
    report["base_fields"] = names
    cfg.outputs = {"report": args.output}
    _write_with_config(args.output, json.dumps(report, sort_keys=True, indent=2) + "\n", cfg)
    return EXIT_OK


def cmd_norm(args) -> int:
    fld = _load_field(args.field)
    params = fld.besov
    if args.s is not None or args.p is not None or args.q is not None:
        params = BesovParams(args.s if args.s is not None else params.s,
                             _exp_parse(args.p) if args.p is not None else params.p,
                             _exp_parse(args.q) if args.q is not None else params.q, fld.d)
    out = {
        "params": {"s": params.s, "p": _exp_json(params.p), "q": _exp_json(params.q), "d": params.d},
        "besov_norm": besov_norm(fld, params),
        "weighted_norm": weighted_norm(fld, params),
        "sup_bound": sup_coefficient_bound(fld, params),
        "eps": [float(v) for v in scale_profile(fld, params)],
    }
    _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_system(p, with_d=True):
    p.add_argument("--system", default="haar", help="haar, schauder, indicator, db2, mexican_hat")
    p.add_argument("--n", type=int, default=1, help="generators for the indicator system")
    if with_d:
        p.add_argument("--d", type=int, default=None)


def _add_estimator(p):
    p.add_argument("--j-min", type=int, default=None)
    p.add_argument("--mode", choices=("max-ratio", "record-slope"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wavediv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-covering", help="search for a dyadic covering")
    _add_system(p, with_d=False)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=1)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=8, help="grid points per finest cube and axis")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_check_covering)

    p = sub.add_parser("generate", help="write a coefficient field")
    p.add_argument("--config", help="JSON config (flat or resolved)")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--jmax", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--d", type=int)
    p.add_argument("--x0", help="comma separated point for kind=point")
    p.add_argument("--system")
    p.add_argument("--seed", type=int, help=f"default from ${SEED_ENV} or 0")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="per-point profiles and divergence exponents")
    p.add_argument("field")
    _add_system(p)
    p.add_argument("--points", help="file with one point per line, or a JSON list")
    p.add_argument("--grid", type=int, help="use the 2^(n d) midpoint grid")
    _add_estimator(p)
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--summary", help="write one row per point here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("spectrum", help="box-counting and coefficient-count spectra")
    p.add_argument("field")
    _add_system(p)
    p.add_argument("--grid-bits", type=int, default=10)
    p.add_argument("--box-scales", help="e.g. 2:10 or 2,4,6")
    p.add_argument("--gammas", help="comma separated gamma values")
    _add_estimator(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("experiment", help="Monte Carlo genericity experiment")
    p.add_argument("config")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("norm", help="print Besov and weighted norms of a field")
    p.add_argument("field")
    p.add_argument("--s", type=float)
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_norm)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"wavediv {args.command}: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
