"""Command-line front end: ``totalpos {scan,reproduce,premium,schur,gamma}``.

Every run is described by a :class:`RunConfig`, assembled from built-in
defaults, then an optional JSON config file, then command-line flags.  Reports
go out as JSON lines.  Exit codes: 0 pass, 1 configuration error, 2 violation
or failure found.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields

from . import gammaratios as gr
from .numkernel import PrecisionContext, det
from .premium import (
    DivergenceError,
    loss_from_config,
    monotone_summary,
    premium_H,
    utility_from_config,
    vmr_curve,
)
from .quadrature import QuadratureError
from .symfunc import schur
from .tpcheck import Property, build_matrix, check_order, default_region, full_region
from .weights import DomainError, Region, weight

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    digits: int = 120
    seed: int = 0
    weight: str = "w1"
    weight_params: dict = field(default_factory=dict)
    property: str = "tp"
    order: int = 2
    samples: int = 200
    region: str = "default"
    extra: list = field(default_factory=list)
    workers: int = 1
    loss: dict = field(default_factory=lambda: {"family": "exponential", "rate": "1"})
    utility: dict = field(default_factory=lambda: {"family": "identity"})
    lambdas: list = field(default_factory=list)
    out: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


_INT_KEYS = {"digits", "seed", "order", "samples", "workers"}


def _merge(config_path: str | None, flags: dict) -> RunConfig:
    data: dict = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                # decimals stay strings so 0.211 never passes through a binary float
                data = json.load(fh, parse_float=str)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    data.update({k: v for k, v in flags.items() if v is not None and k in known})
    for key in _INT_KEYS & set(data):
        try:
            data[key] = int(data[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {data[key]!r}") from None
    return RunConfig(**data)


def _key_values(items, what: str) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"{what} must look like key=value, got {item!r}")
        out[key] = value
    return out


def _numbers(text: str, what: str) -> list[str]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    for p in parts:
        try:
            float(p)
        except ValueError:
            raise ConfigError(f"{what}: {p!r} is not a number") from None
    return parts


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _emit(lines, path: str | None):
    text = "".join(json.dumps(obj) + "\n" for obj in lines)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ctx(cfg: RunConfig) -> PrecisionContext:
    try:
        return PrecisionContext(cfg.digits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _spec(cfg: RunConfig):
    params = dict(cfg.weight_params)
    if "k" in params:
        params["k"] = int(params["k"])
    if "restricted" in params:
        params["restricted"] = str(params["restricted"]).lower() in ("1", "true", "yes")
    if cfg.weight == "w6" and cfg.region == "lx<1":
        params["restricted"] = True
    try:
        return weight(cfg.weight, **params)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None


def _region(cfg: RunConfig, spec) -> Region:
    name = cfg.region
    if name == "default":
        return default_region(spec)
    if name == "full":
        return full_region(spec)
    if name == "lx<1":
        base = default_region(spec)
        return Region(base.lam_lo, base.lam_hi, base.x_lo, base.x_hi, base.log_scale, True)
    parts = name.split(",")
    log = parts[-1].strip() == "log"
    nums = _numbers(",".join(parts[:-1] if log else parts), "region")
    if len(nums) != 4:
        raise ConfigError("explicit region is lam_lo,lam_hi,x_lo,x_hi[,log]")
    try:
        return Region(*map(float, nums), log_scale=log)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _extra(cfg: RunConfig, r: int):
    points = []
    for item in cfg.extra:
        lam_text, sep, x_text = item.partition("/") if isinstance(item, str) else ("", "", "")
        if isinstance(item, dict):
            lam_text, x_text, sep = ",".join(map(str, item["lambdas"])), ",".join(map(str, item["xs"])), "/"
        if not sep:
            raise ConfigError(f"extra point must be 'l1,..,lr/x1,..,xr', got {item!r}")
        lams, xs = _numbers(lam_text, "extra"), _numbers(x_text, "extra")
        if len(lams) != r or len(xs) != r:
            raise ConfigError(f"extra point needs {r} lambdas and {r} xs")
        points.append((tuple(lams), tuple(xs)))
    return points


# -- subcommands -------------------------------------------------------------


def cmd_scan(cfg: RunConfig) -> int:
    ctx = _ctx(cfg)
    spec = _spec(cfg)
    try:
        prop = Property(cfg.property)
    except ValueError:
        raise ConfigError(f"property must be one of tp, stp, rr, srr; got {cfg.property!r}") from None
    if cfg.order < 1 or cfg.samples < 0:
        raise ConfigError("order must be >= 1 and samples >= 0")
    region = _region(cfg, spec)
    try:
        verdict = check_order(spec, region, prop, cfg.order, cfg.samples, cfg.seed, ctx,
                              extra_points=_extra(cfg, cfg.order), workers=cfg.workers, keep_reports=True)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    lines = [{"kind": "sign_report", "sample": i} | rep.to_json(ctx, 20) for i, rep in enumerate(verdict.reports)]
    summary = {"kind": "verdict", "weight": spec.name, "property": prop.name, "order": cfg.order,
               "status": verdict.status, "samples": verdict.samples, "message": verdict.describe()}
    if verdict.witness is not None:
        summary["witness"] = verdict.witness.to_json(ctx, 30)
    _emit(lines + [summary], cfg.out)
    return EXIT_OK if verdict.consistent else EXIT_FAIL


def _case_r(ctx):
    return gr.r_det_uv(ctx, "3.5", ("4", "3", "2"), ("6", "5", "4")).value


def _case_c(ctx):
    return gr.c_det_cu(ctx, ("4.047", "1.210"), ("3.203", "0.189"), "0.211").value


def _case_w6(ctx):
    return det(build_matrix(weight("w6"), ctx, ("3", "0.4", "0.1"), ("20000", "0.3", "0.1")), ctx)


# case id -> (evaluator, printed value, absolute tolerance)
REPRODUCE_CASES = {
    "R_DET_704": (_case_r, "7.04", "0.005"),
    "C_DET_M026": (_case_c, "-0.026", "0.0005"),
    "W6_DET_M517488": (_case_w6, "-5.17488", "0.000005"),
}


def reproduce(case: str, digits: int = 120) -> dict:
    ctx = PrecisionContext(digits)
    fn, printed, tol = REPRODUCE_CASES[case]
    value = fn(ctx)
    ok = abs(value - ctx.big(printed)) <= ctx.big(tol)
    return {"case": case, "computed": ctx.fmt(value, 15), "expected": printed, "tolerance": tol, "pass": bool(ok)}


def cmd_reproduce(cfg: RunConfig, case: str) -> int:
    if case not in REPRODUCE_CASES:
        raise ConfigError(f"unknown case {case!r}; known: {', '.join(REPRODUCE_CASES)}")
    _ctx(cfg)
    rec = reproduce(case, cfg.digits)
    _emit([rec], cfg.out)
    return EXIT_OK if rec["pass"] else EXIT_FAIL


def cmd_premium(cfg: RunConfig) -> int:
    ctx = _ctx(cfg)
    spec = _spec(cfg)
    try:
        loss = loss_from_config(cfg.loss)
        util = utility_from_config(cfg.utility)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    lams = cfg.lambdas if isinstance(cfg.lambdas, list) else _numbers(str(cfg.lambdas), "lambdas")
    lams = [str(v) for v in lams]
    if not lams:
        raise ConfigError("premium needs a lambda grid (--lambdas)")
    try:
        reports = vmr_curve(spec, util, loss, lams, ctx, workers=cfg.workers)
    except ValueError as exc:
        if not isinstance(exc, DomainError):
            raise ConfigError(str(exc)) from None
        reports = None
    if reports is None:
        # find which grid points fail and report each one
        lines, failed = [], False
        for lam in lams:
            try:
                h = premium_H(spec, util, loss, lam, ctx)
                lines.append({"kind": "premium", "lam": lam, "H": ctx.fmt(h, 40)})
            except (DomainError, QuadratureError) as exc:
                failed = True
                lines.append({"kind": "error", "lam": lam, "error": str(exc)})
        _emit(lines, cfg.out)
        return EXIT_FAIL if failed else EXIT_OK
    summary = monotone_summary(reports, ctx)
    lines = [{"kind": "premium"} | r.to_json(ctx) for r in reports]
    lines.append({"kind": "summary", "weight": spec.name} | summary | {"pass": all(summary.values())})
    _emit(lines, cfg.out)
    return EXIT_OK if all(summary.values()) else EXIT_FAIL


def cmd_schur(cfg: RunConfig, theta: str, t: str) -> int:
    ctx = _ctx(cfg)
    try:
        parts = [int(p) for p in theta.split(",") if p.strip()]
        value = schur(ctx, parts, _numbers(t, "t"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit([{"theta": parts, "t": _numbers(t, "t"), "value": ctx.fmt(value, 40)}], cfg.out)
    return EXIT_OK


_GAMMA_FNS = {
    "upper": lambda ctx, a: gr.upper_gamma(ctx, a.u, a.v),
    "q": lambda ctx, a: gr.q(ctx, a.u, a.v),
    "qinv": lambda ctx, a: gr.q_inverse(ctx, a.u, a.p),
    "R": lambda ctx, a: gr.ratio_R(ctx, a.c, a.u, a.v),
    "C": lambda ctx, a: gr.ratio_C(ctx, a.c, a.u, a.v),
}


def cmd_gamma(cfg: RunConfig, args) -> int:
    ctx = _ctx(cfg)
    need = {"upper": "uv", "q": "uv", "qinv": "up", "R": "cuv", "C": "cuv"}[args.fn]
    vals = {}
    for name in need:
        raw = getattr(args, name)
        if raw is None:
            raise ConfigError(f"gamma {args.fn} needs --{name}")
        vals[name] = ctx.big(_numbers(raw, name)[0])
    try:
        value = _GAMMA_FNS[args.fn](ctx, argparse.Namespace(**vals))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit([{"fn": args.fn} | {k: getattr(args, k) for k in need} | {"value": ctx.fmt(value, 40)}], cfg.out)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--digits", type=int, help="working precision in decimal digits (default 120)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--out", help="write JSON lines here instead of stdout")
    common.add_argument("--workers", type=int, help="threads for sample evaluation")

    weighted = _Parser(add_help=False)
    weighted.add_argument("--weight", help="weight family name (w1, w2, cte, w3, w3_k, ...)")
    weighted.add_argument("--param", action="append", metavar="KEY=VALUE", help="weight parameter, repeatable")

    parser = _Parser(prog="totalpos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", parents=[common, weighted], help="sampled TP/STP/RR/SRR check")
    scan.add_argument("--property", choices=[p.value for p in Property])
    scan.add_argument("--order", type=int)
    scan.add_argument("--samples", type=int)
    scan.add_argument("--region", help="default | full | lx<1 | lam_lo,lam_hi,x_lo,x_hi[,log]")
    scan.add_argument("--extra", action="append", metavar="L1,..,LR/X1,..,XR",
                      help="grid evaluated before the random draws, repeatable")

    rep = sub.add_parser("reproduce", parents=[common], help="recompute a printed determinant")
    rep.add_argument("case", choices=sorted(REPRODUCE_CASES))

    prem = sub.add_parser("premium", parents=[common, weighted], help="premiums and dispersion over a lambda grid")
    prem.add_argument("--loss", help="exponential | gamma | uniform")
    prem.add_argument("--loss-param", action="append", metavar="KEY=VALUE")
    prem.add_argument("--utility", help="identity | power | capped | integrated_cdf")
    prem.add_argument("--utility-param", action="append", metavar="KEY=VALUE")
    prem.add_argument("--lambdas", help="comma-separated ascending grid")

    sch = sub.add_parser("schur", parents=[common], help="evaluate a Schur function")
    sch.add_argument("--theta", required=True, help="partition, e.g. 3,1")
    sch.add_argument("--t", required=True, help="positive distinct arguments")

    gam = sub.add_parser("gamma", parents=[common], help="incomplete gamma and its ratios")
    gam.add_argument("fn", choices=sorted(_GAMMA_FNS))
    for name in ("c", "u", "v", "p"):
        gam.add_argument(f"--{name}")
    return parser


def _flags(args) -> dict:
    flags = {k: getattr(args, k, None) for k in ("digits", "seed", "out", "workers", "weight",
                                                   "property", "order", "samples", "region")}
    if getattr(args, "param", None):
        flags["weight_params"] = _key_values(args.param, "--param")
    if getattr(args, "extra", None):
        flags["extra"] = args.extra
    if getattr(args, "lambdas", None):
        flags["lambdas"] = _numbers(args.lambdas, "lambdas")
    if getattr(args, "loss", None) or getattr(args, "loss_param", None):
        flags["loss"] = {"family": args.loss or "exponential"} | _key_values(args.loss_param, "--loss-param")
    if getattr(args, "utility", None) or getattr(args, "utility_param", None):
        flags["utility"] = {"family": args.utility or "identity"} | _key_values(args.utility_param, "--utility-param")
    return flags


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge(args.config, _flags(args))
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.case)
        if args.command == "premium":
            return cmd_premium(cfg)
        if args.command == "schur":
            return cmd_schur(cfg, args.theta, args.t)
        return cmd_gamma(cfg, args)
    except ConfigError as exc:
        print(f"totalpos: error: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, QuadratureError, DomainError) as exc:
        print(f"totalpos: failure: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
