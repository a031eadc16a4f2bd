"""Command-line front end.

Exit codes: 0 on success, 1 on input errors, 2 when a hypothesis of the
requested transfer fails (growth condition, log-concavity).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import model1d, oracle1d, transfer
from .errors import HypothesisViolation
from .profile_core import INF, ConcProfileSpec, IsoProfile, MonotoneFn, Tail

COMMANDS = {
    "transfer-thm1": "convex-bound",
    "transfer-thm2": "semiconvex-bound",
    "iso-to-conc": None,
    "bobkov": "integrability-bound",
    "linear-bound": None,
    "model-profile": None,
    "oracle": None,
    "verify": None,
}
_ALIASES = {alias: name for name, alias in COMMANDS.items() if alias}

CONFIG_KEYS = {
    "command", "alpha", "beta", "gamma", "truth", "bound", "family", "density",
    "lambda", "lambda_sup", "variant", "form", "kind", "kappa", "delta0", "r0", "lambda0",
    "p", "s_p", "k", "grid_n", "vgrid", "rgrid", "out", "format",
}

DEFAULTS = {
    "vgrid": "log:50:1e-6:0.5",
    "rgrid": "linear:21:0:20",
    "format": "csv",
    "variant": "weak",
    "form": "inverse",
    "kind": "iso",
    "k": 2,
    "grid_n": 4000,
}


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def _parse_params(text):
    params = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise InputError(f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        params[key.strip()] = val.strip()
    return params


def _split_spec(text):
    name, _, rest = text.partition(":")
    return name.strip(), rest


def _floats(params, *keys):
    try:
        return [float(params[k]) for k in keys]
    except KeyError as exc:
        raise InputError(f"missing parameter {exc.args[0]!r}") from None


def parse_grid(text, kind="v"):
    """``log|linear:count:min:max`` or ``list:x1,x2,...``.

    v grids must lie in (0, 1/2], r grids in [0, inf).
    """
    head, _, body = str(text).partition(":")
    if head == "list":
        try:
            grid = [float(x) for x in body.split(",") if x.strip()]
        except ValueError:
            raise InputError(f"bad grid numbers in {text!r}") from None
        if not grid:
            raise InputError("list grid is empty")
        if kind == "v" and not all(0 < v <= 0.5 for v in grid):
            raise InputError("v grid must lie strictly inside (0, 1/2]")
        if kind == "r" and not all(r >= 0 for r in grid):
            raise InputError("r grid must be non-negative")
        return grid
    parts = str(text).split(":")
    if len(parts) != 4 or parts[0] not in ("log", "linear"):
        raise InputError(f"grid must look like log:COUNT:MIN:MAX, linear:COUNT:MIN:MAX or list:X,..., got {text!r}")
    try:
        count, lo, hi = int(parts[1]), float(parts[2]), float(parts[3])
    except ValueError:
        raise InputError(f"bad grid numbers in {text!r}") from None
    if count < 2:
        raise InputError("grid count must be at least 2")
    if not lo < hi:
        raise InputError("grid min must be below grid max")
    if kind == "v" and not (0 < lo and hi <= 0.5):
        raise InputError("v grid must lie strictly inside (0, 1/2]")
    if kind == "r" and not lo >= 0:
        raise InputError("r grid must be non-negative")
    if parts[0] == "log":
        if lo <= 0:
            raise InputError("log grid needs a positive minimum")
        grid = np.geomspace(lo, hi, count)
    else:
        grid = np.linspace(lo, hi, count)
    grid[0], grid[-1] = lo, hi
    return [float(v) for v in grid]


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def parse_monotone(text):
    """Profile spec for alpha or beta; returns (MonotoneFn, implied constants)."""
    name, rest = _split_spec(text)
    if name == "file":
        return MonotoneFn.from_json(_load_json(rest)), {}
    params = _parse_params(rest)
    if name == "quad":
        delta0, kappa = _floats(params, "delta0", "kappa")
        implied = {"delta0": delta0, "kappa": kappa}
        if "r0" in params:
            implied["r0"] = float(params["r0"])
        return MonotoneFn([(0.0, 0.0)], Tail.quadratic(delta0, kappa)), implied
    if name == "density-conc":
        return model1d.conc_profile_fn(_density_from_params(params)), {}
    if name in ("gaussian-conc", "exp-conc", "identity"):
        return MonotoneFn.named(name), {}
    if name in ("power", "power-conc", "constant"):
        return MonotoneFn.named(name, **{k: float(v) for k, v in params.items()}), {}
    raise InputError(f"unknown profile spec {name!r}")


def _density_from_params(params):
    params = dict(params)
    family = params.pop("family", None)
    if family is None:
        raise InputError("density spec needs family=")
    d = {"family": family}
    for key in ("p", "s_p", "kappa"):
        if key in params:
            d[key] = float(params.pop(key))
    if params:
        raise InputError(f"unknown density parameters: {sorted(params)}")
    return model1d.density_from_json(d)


def parse_density(text):
    """``gaussian``, ``p_exponential:p=..,s_p=..`` or ``file:PATH``."""
    name, rest = _split_spec(text)
    if name == "file":
        return model1d.density_from_json(_load_json(rest))
    params = _parse_params(rest)
    params["family"] = name
    return _density_from_params(params)


def _density_from_config(cfg):
    if cfg.get("density"):
        return parse_density(cfg["density"])
    family = cfg.get("family")
    if not family:
        raise InputError("give --family or --density")
    d = {"family": family}
    if cfg.get("p") is not None:
        d["p"] = float(cfg["p"])
    if cfg.get("s_p") is not None:
        d["s_p"] = float(cfg["s_p"])
    return model1d.density_from_json(d)


def exact_iso(d):
    return IsoProfile(lambda v: model1d.iso_profile_halfline(d, v), f"exact-halfline:{d.family}",
                      convex_setting=True)


def parse_gamma(text):
    """Rate for iso-to-conc: ``power:p=P`` (y^(1-1/p)), ``identity`` (y), ``constant:c=C``."""
    name, rest = _split_spec(text)
    params = _parse_params(rest)
    if name == "power":
        (p,) = _floats(params, "p")
        return lambda y: y ** (1.0 - 1.0 / p)
    if name == "identity":
        return lambda y: y
    if name == "constant":
        (c,) = _floats(params, "c")
        return lambda y: c
    if name == "density":
        return transfer.gamma_from_iso(exact_iso(_density_from_params(params)))
    raise InputError(f"unknown rate spec {name!r}")


def _read_profile_table(path):
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not lines or not lines[0].startswith("v,"):
        raise InputError(f"{path}: expected a table with header v,bound")
    table = {}
    for ln in lines[1:]:
        cells = ln.split(",")
        if cells[0] == "minslack":
            continue
        table[float(cells[0])] = float(cells[1])
    return table


# ---------------------------------------------------------------------------
# output


def _fmt(x):
    x = float(x)
    if x == INF:
        return "inf"
    return format(x, ".17g")


def table_text(columns, rows, fmt):
    if fmt == "json":
        enc = [[(_fmt(c) if not math.isfinite(c) else float(c)) for c in row] for row in rows]
        return json.dumps({"columns": list(columns), "rows": enc}, indent=2) + "\n"
    lines = [",".join(columns)] + [",".join(_fmt(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_output(text, path):
    if not path or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".isoprofile-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands


def _report_or_table(bound, cfg):
    vs = parse_grid(cfg["vgrid"], "v")
    if cfg.get("truth"):
        truth = exact_iso(parse_density(cfg["truth"]))
        rep = transfer.verify_bound(bound, truth, vs)
        return rep.to_json() if cfg["format"] == "json" else rep.to_csv()
    return table_text(("v", "bound"), [(v, bound(v)) for v in vs], cfg["format"])


def _float_opt(cfg, key, default=None):
    val = cfg.get(key)
    return default if val is None else float(val)


def cmd_convex(cfg):
    if not cfg.get("alpha"):
        raise InputError("--alpha is required")
    alpha, _ = parse_monotone(cfg["alpha"])
    lam = None if cfg.get("lambda_sup") or cfg.get("lambda") is None else float(cfg["lambda"])
    spec = ConcProfileSpec(alpha)
    bound = transfer.convex_bound(spec, lam, cfg["variant"])
    if not cfg.get("truth") and cfg["alpha"] == "gaussian-conc":
        cfg = dict(cfg, truth="gaussian")
    return _report_or_table(bound, cfg)


def cmd_semiconvex(cfg):
    if not cfg.get("alpha"):
        raise InputError("--alpha is required")
    alpha, implied = parse_monotone(cfg["alpha"])
    kappa = _float_opt(cfg, "kappa", implied.get("kappa", 0.0))
    delta0 = _float_opt(cfg, "delta0", implied.get("delta0"))
    r0 = _float_opt(cfg, "r0", implied.get("r0", 0.0 if kappa > 0 else None))
    spec = ConcProfileSpec(alpha, kappa, delta0, r0)
    bound = transfer.semiconvex_bound(spec)
    return _report_or_table(bound, cfg)


def cmd_integrability(cfg):
    if not cfg.get("beta"):
        raise InputError("--beta is required")
    beta, implied = parse_monotone(cfg["beta"])
    kappa = _float_opt(cfg, "kappa", implied.get("kappa", 0.0))
    delta0 = _float_opt(cfg, "delta0", implied.get("delta0"))
    r0 = _float_opt(cfg, "r0", implied.get("r0", 0.0 if kappa > 0 else None))
    bound = transfer.integrability_bound(beta, kappa, delta0, r0, cfg["form"])
    return _report_or_table(bound, cfg)


def cmd_iso_to_conc(cfg):
    if not cfg.get("gamma"):
        raise InputError("--gamma is required")
    rs = parse_grid(cfg["rgrid"], "r")
    spec = transfer.iso_to_conc(parse_gamma(cfg["gamma"]), r_max=max(20.0, rs[-1]))
    return table_text(("r", "alpha"), [(r, spec.alpha(r)) for r in rs], cfg["format"])


def cmd_linear(cfg):
    if cfg.get("lambda0") is None or cfg.get("r0") is None:
        raise InputError("--lambda0 and --r0 are required")
    lam0, r0 = float(cfg["lambda0"]), float(cfg["r0"])
    return table_text(("lambda0", "r0", "bound"), [(lam0, r0, transfer.linear_iso_bound(lam0, r0))],
                      cfg["format"])


def cmd_model(cfg):
    d = _density_from_config(cfg)
    if cfg["kind"] == "iso":
        vs = parse_grid(cfg["vgrid"], "v")
        rows = [(v, model1d.iso_profile_halfline(d, v)) for v in vs]
        return table_text(("v", "iso"), rows, cfg["format"])
    if cfg["kind"] == "conc":
        rs = parse_grid(cfg["rgrid"], "r")
        rows = [(r, model1d.conc_profile_1d(d, r)) for r in rs]
        return table_text(("r", "conc"), rows, cfg["format"])
    raise InputError("--kind must be iso or conc")


def cmd_oracle(cfg):
    d = _density_from_config(cfg)
    vs = parse_grid(cfg["vgrid"], "v")
    rep = oracle1d.oracle_vs_halfline(d, vs, int(cfg["grid_n"]), int(cfg["k"]))
    return rep.to_json() if cfg["format"] == "json" else rep.to_csv()


def cmd_verify(cfg):
    if not cfg.get("bound") or not cfg.get("truth"):
        raise InputError("--bound and --truth are required")
    table = _read_profile_table(cfg["bound"])
    truth = exact_iso(parse_density(cfg["truth"]))
    vs = sorted(table)
    rep = transfer.verify_bound(lambda v: table[v], truth, vs)
    return rep.to_json() if cfg["format"] == "json" else rep.to_csv()


HANDLERS = {
    "transfer-thm1": cmd_convex,
    "transfer-thm2": cmd_semiconvex,
    "iso-to-conc": cmd_iso_to_conc,
    "bobkov": cmd_integrability,
    "linear-bound": cmd_linear,
    "model-profile": cmd_model,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
}


def run(config):
    """Execute one validated configuration; returns the process exit code."""
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown configuration keys: {sorted(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in config.items() if v is not None})
    command = _ALIASES.get(cfg.get("command"), cfg.get("command"))
    if command not in HANDLERS:
        raise InputError(f"unknown or missing command {cfg.get('command')!r}")
    if cfg["format"] not in ("csv", "json"):
        raise InputError("--format must be csv or json")
    text = HANDLERS[command](cfg)
    write_output(text, cfg.get("out"))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--config", help="JSON file with run configuration; flags override it")
    p.add_argument("--vgrid", help="v grid, e.g. log:50:1e-6:0.5")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def _constants(p, *names):
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isoprofile",
        description="Transfer, compute and verify isoperimetric and concentration profiles.")
    parser.add_argument("--config", dest="root_config", help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("transfer-thm1", aliases=["convex-bound"],
                       help="isoperimetric bound from concentration, log-concave case")
    _common(p)
    p.add_argument("--alpha", help="concentration profile spec")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--lambda-sup", dest="lambda_sup", action="store_const", const=True,
                   help="maximize over the lambda grid (default when --lambda is absent)")
    p.add_argument("--variant", choices=("weak", "strong"))
    p.add_argument("--truth", help="reference density: gaussian, p_exponential:p=..., file:PATH")

    p = sub.add_parser("transfer-thm2", aliases=["semiconvex-bound"],
                       help="isoperimetric bound from concentration under curvature >= -kappa")
    _common(p)
    p.add_argument("--alpha")
    p.add_argument("--truth")
    _constants(p, "kappa", "delta0", "r0")

    p = sub.add_parser("iso-to-conc", help="integrate an isoperimetric rate into concentration")
    _common(p)
    p.add_argument("--gamma", help="power:p=P, identity, constant:c=C or density:family=...")
    p.add_argument("--rgrid", help="r grid, e.g. linear:21:0:20")

    p = sub.add_parser("bobkov", aliases=["integrability-bound"],
                       help="isoperimetric bound from an integrability profile beta")
    _common(p)
    p.add_argument("--beta")
    p.add_argument("--truth")
    p.add_argument("--form", choices=("inverse", "direct"))
    _constants(p, "kappa", "delta0", "r0")

    p = sub.add_parser("linear-bound", help="linear isoperimetric constant from one concentration point")
    _common(p)
    _constants(p, "lambda0", "r0")

    p = sub.add_parser("model-profile", help="exact profiles of a 1D model measure")
    _common(p)
    p.add_argument("--family", choices=("gaussian", "p_exponential"))
    p.add_argument("--density", help="density spec or file:PATH")
    p.add_argument("--kind", choices=("iso", "conc"))
    p.add_argument("--rgrid")
    _constants(p, "p", "s_p")

    p = sub.add_parser("oracle", help="brute-force oracle against the half-line profile")
    _common(p)
    p.add_argument("--family", choices=("gaussian", "p_exponential"))
    p.add_argument("--density")
    p.add_argument("--k", type=int)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    _constants(p, "p", "s_p")

    p = sub.add_parser("verify", help="compare a tabulated bound against an exact profile")
    _common(p)
    p.add_argument("--bound", help="CSV with header v,bound")
    p.add_argument("--truth")
    return parser


def main(argv=None):
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    cfg_path = args.pop("config", None) or args.pop("root_config", None)
    args.pop("root_config", None)
    try:
        config = {}
        if cfg_path:
            config = _load_json(cfg_path)
            if not isinstance(config, dict):
                raise InputError("configuration file must hold a JSON object")
            unknown = set(config) - CONFIG_KEYS
            if unknown:
                raise InputError(f"unknown configuration keys: {sorted(unknown)}")
        flag_cmd = _ALIASES.get(args.get("command"), args.get("command"))
        cfg_cmd = _ALIASES.get(config.get("command"), config.get("command"))
        if flag_cmd and cfg_cmd and flag_cmd != cfg_cmd:
            raise InputError(f"command {flag_cmd!r} conflicts with {cfg_cmd!r} in the configuration")
        merged = dict(config)
        merged.update({k: v for k, v in args.items() if v is not None})
        if flag_cmd:
            merged["command"] = flag_cmd
        return run(merged)
    except HypothesisViolation as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
