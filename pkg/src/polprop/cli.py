"""Batch front-end: ``polprop <command> --config run.json``.

Commands read a JSON run configuration, compute, and write JSON (or CSV for
``geodesic``) to ``--out`` or stdout.  Floats are written with 17
significant digits so identical inputs give byte-identical output.

Exit codes: 0 success, 1 failed property (``verify``), 2 bad input.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from . import bichar as bc
from . import exprs as ex
from . import geometry as geo
from . import nhop as nh
from . import polsets as ps
from . import proca as pr
from . import symbols as sy
from . import verify as vf

__all__ = ["main", "ConfigError", "RunConfig", "load_config", "dumps"]


class ConfigError(ValueError):
    """Invalid run configuration; ``pointer`` is a JSON pointer into it."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.detail = message


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

_EXPR = {"type": ["string", "number"]}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _EXPR}}
_VEC = {"type": "array", "minItems": 2, "maxItems": 4, "items": {"type": "number"}}
_POINT = {
    "type": "object",
    "required": ["x", "k"],
    "additionalProperties": False,
    "properties": {"x": _VEC, "k": _VEC},
}
_TERM = {
    "type": "object",
    "required": ["alpha"],
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "re": _MATRIX,
        "im": _MATRIX,
    },
}
_SYMBOL = {
    "type": "object",
    "required": ["rank", "order", "terms"],
    "additionalProperties": False,
    "properties": {
        "rank": {"type": "integer", "minimum": 1, "maximum": 8},
        "order": {"type": "integer", "minimum": 0, "maximum": 6},
        "terms": {"type": "array", "items": _TERM},
    },
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["spacetime"],
    "additionalProperties": False,
    "properties": {
        "spacetime": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["minkowski", "flrw", "custom"]},
                "dim": {"type": "integer", "minimum": 2, "maximum": 4},
                "a": _EXPR,
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
                "metric": _MATRIX,
                "domain": {
                    "type": "array",
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                },
                "time_axis": {"type": "integer", "minimum": 0},
            },
        },
        "operator": {
            "type": "object",
            "required": ["rank"],
            "additionalProperties": False,
            "properties": {
                "rank": {"type": "integer", "minimum": 1, "maximum": 8},
                "C": {"type": "array", "items": _MATRIX},
                "V": _MATRIX,
            },
        },
        "proca": {
            "type": "object",
            "required": ["m"],
            "additionalProperties": False,
            "properties": {"m": {"type": "number", "exclusiveMinimum": 0}},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                name: {"type": "number", "exclusiveMinimum": 0}
                for name in ("tol_null", "tol_pos", "tol_cov", "lambda_max", "tol_rel", "membership_tol")
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "query": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": _POINT,
                "p_prime": _POINT,
                "lambda_range": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                "variant": {"enum": ["EP", "EP+", "EP-", "proca"]},
            },
        },
        "symbol": {
            "type": "object",
            "required": ["which"],
            "additionalProperties": False,
            "properties": {
                "which": {"enum": ["principal", "refined", "subprincipal", "compose", "dual"]},
                "a": _SYMBOL,
                "b": _SYMBOL,
                "drop_below": {"type": "integer", "minimum": 0},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    raw: dict
    model: geo.SpacetimeModel
    operator: nh.NHOperatorSpec | None
    proca: pr.ProcaContext | None
    tolerances: dict
    seed: int

    @property
    def spec(self) -> nh.NHOperatorSpec | None:
        """The operator whose transport defines the fibres."""
        return self.proca.kg1 if self.proca is not None else self.operator


def _parse_matrix(rows, dim: int, params, pointer: str, rank: int | None = None):
    if rank is not None and (len(rows) != rank or any(len(r) != rank for r in rows)):
        raise ConfigError(pointer, f"matrix must be {rank}x{rank}")
    out = []
    for i, row in enumerate(rows):
        parsed = []
        for j, v in enumerate(row):
            try:
                parsed.append(ex.parse(v, dim=dim, params=params) if isinstance(v, str) else ex.as_expr(v))
            except ex.ExprSyntaxError as err:
                raise ConfigError(f"{pointer}/{i}/{j}", str(err)) from err
        out.append(parsed)
    return out


def _build_model(block: dict) -> geo.SpacetimeModel:
    kind = block["kind"]
    params = block.get("params", {})
    dim = block.get("dim")
    domain = block.get("domain")
    if domain is not None:
        if dim is not None and len(domain) != dim:
            raise ConfigError("/spacetime/domain", f"need {dim} intervals")
        for i, (lo, hi) in enumerate(domain):
            if not lo < hi:
                raise ConfigError(f"/spacetime/domain/{i}", "interval must be increasing")
    if kind == "custom":
        if "metric" not in block:
            raise ConfigError("/spacetime", "custom spacetime needs 'metric'")
        n = len(block["metric"])
        if dim is not None and dim != n:
            raise ConfigError("/spacetime/metric", f"metric is {n}x{n} but dim is {dim}")
        g = _parse_matrix(block["metric"], n, params, "/spacetime/metric", n)
        if domain is None:
            raise ConfigError("/spacetime", "custom spacetime needs 'domain'")
        if len(domain) != n:
            raise ConfigError("/spacetime/domain", f"need {n} intervals")
        t = block.get("time_axis", 0)
        if t >= n:
            raise ConfigError("/spacetime/time_axis", f"must be below {n}")
        return geo.custom(g, [tuple(d) for d in domain], t, params)
    for key in ("metric", "time_axis"):
        if key in block:
            raise ConfigError(f"/spacetime/{key}", f"not allowed for kind {kind!r}")
    dim = 4 if dim is None else dim
    dom = None if domain is None else [tuple(d) for d in domain]
    if kind == "minkowski":
        if "a" in block:
            raise ConfigError("/spacetime/a", "not allowed for kind 'minkowski'")
        return geo.minkowski(dim, dom)
    a = block.get("a", "exp(H*x0)")
    params = {"H": 1.0, **params} if a == "exp(H*x0)" else params
    try:
        return geo.flrw(str(a), params, dim, dom)
    except ex.ExprSyntaxError as err:
        raise ConfigError("/spacetime/a", str(err)) from err
    except ValueError as err:
        raise ConfigError("/spacetime/a", str(err)) from err


def _build_operator(block: dict, M: geo.SpacetimeModel, params) -> nh.NHOperatorSpec:
    r = block["rank"]
    C = None
    if "C" in block:
        if len(block["C"]) != M.dim:
            raise ConfigError("/operator/C", f"need {M.dim} matrices (one per coordinate)")
        C = [_parse_matrix(m, M.dim, params, f"/operator/C/{nu}", r) for nu, m in enumerate(block["C"])]
    V = _parse_matrix(block["V"], M.dim, params, "/operator/V", r) if "V" in block else None
    return nh.make_spec(M, C=C, V=V, rank=r)


def build_config(raw: dict, seed: int | None = None) -> RunConfig:
    """Validate a parsed JSON document and build the run objects."""
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(_pointer(err.absolute_path), err.message)
    has_op, has_proca = "operator" in raw, "proca" in raw
    if has_op == has_proca:
        raise ConfigError("/", "exactly one of 'operator' or 'proca' is required")
    M = _build_model(raw["spacetime"])
    params = raw["spacetime"].get("params", {})
    op = _build_operator(raw["operator"], M, params) if has_op else None
    ctx = None
    if has_proca:
        try:
            ctx = pr.ProcaContext(M, float(raw["proca"]["m"]))
        except ValueError as err:
            raise ConfigError("/proca", str(err)) from err
    for name in ("p", "p_prime"):
        pt = raw.get("query", {}).get(name)
        if pt is None:
            continue
        for field in ("x", "k"):
            if len(pt[field]) != M.dim:
                raise ConfigError(f"/query/{name}/{field}", f"need {M.dim} components")
    s = raw.get("seed", 0) if seed is None else seed
    return RunConfig(raw, M, op, ctx, dict(raw.get("tolerances", {})), int(s))


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError("/", f"cannot read {path}: {err.strerror}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("/", f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    return build_config(raw, seed)


# ---------------------------------------------------------------------------
# Deterministic output
# ---------------------------------------------------------------------------


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    if v == 0.0:
        return "0.0"  # no signed zeros
    text = format(v, ".17g")
    # keep floats recognisable as floats
    return text if ("e" in text or "." in text or "n" in text) else text + ".0"


def _emit(obj, buf: io.StringIO, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            buf.write("{}")
            return
        buf.write("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            buf.write(f"{pad}  {json.dumps(str(k))}: ")
            _emit(v, buf, indent + 1)
            buf.write(",\n" if i < len(items) - 1 else "\n")
        buf.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            buf.write("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            buf.write("[")
            for i, v in enumerate(obj):
                if i:
                    buf.write(", ")
                _emit(v, buf, indent)
            buf.write("]")
            return
        buf.write("[\n")
        for i, v in enumerate(obj):
            buf.write(pad + "  ")
            _emit(v, buf, indent + 1)
            buf.write(",\n" if i < len(obj) - 1 else "\n")
        buf.write(pad + "]")
    elif isinstance(obj, np.ndarray):
        _emit(_plain(obj), buf, indent)
    elif isinstance(obj, (bool, np.bool_)):
        buf.write("true" if obj else "false")
    elif obj is None:
        buf.write("null")
    elif isinstance(obj, (int, np.integer)):
        buf.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        buf.write(_fmt_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _emit([float(obj.real), float(obj.imag)], buf, indent)
    else:
        buf.write(json.dumps(str(obj)))


def _plain(a):
    """Arrays to nested lists; complex entries become ``[re, im]``."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack((a.real, a.imag), axis=-1).tolist()
    return a.tolist()


def dumps(obj) -> str:
    """Deterministic JSON text (17 significant digits, trailing newline)."""
    buf = io.StringIO()
    _emit(obj, buf, 0)
    buf.write("\n")
    return buf.getvalue()


def strip_csv(strip: bc.BicharStrip) -> str:
    n = strip.model.dim
    header = ["lambda", *(f"x{i}" for i in range(n)), *(f"k{i}" for i in range(n)), "q"]
    lines = [",".join(header)]
    for row in strip.to_rows():
        lines.append(",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _tol(cfg: RunConfig, args, name: str, default: float) -> float:
    v = getattr(args, name, None)
    if v is not None:
        return v
    return float(cfg.tolerances.get(name, default))


def _point(cfg: RunConfig, name: str) -> geo.PhasePoint:
    pt = cfg.raw.get("query", {}).get(name)
    if pt is None:
        raise ConfigError(f"/query/{name}", "required by this command")
    return geo.PhasePoint(np.asarray(pt["x"], float), np.asarray(pt["k"], float))


def _relation_point(cfg: RunConfig, args) -> ps.RelationPoint:
    p, pp = _point(cfg, "p"), _point(cfg, "p_prime")
    return ps.in_R(
        cfg.model,
        p,
        pp.flipped(),
        tol_pos=_tol(cfg, args, "tol_pos", bc.DEFAULT_TOL_POS),
        tol_cov=_tol(cfg, args, "tol_cov", bc.DEFAULT_TOL_COV),
        lambda_max=_tol(cfg, args, "lambda_max", bc.DEFAULT_LAMBDA_MAX),
        tol_null=_tol(cfg, args, "tol_null", geo.DEFAULT_TOL_NULL),
    )


def _phase_json(p: geo.PhasePoint) -> dict:
    return {"x": [float(v) for v in p.x], "k": [float(v) for v in p.k]}


def _relation_json(rp: ps.RelationPoint) -> dict:
    rel = rp.relation
    w = rp.witness
    return {
        "p": _phase_json(rp.p),
        "p_prime_signed": _phase_json(rp.pp_signed),
        "verdict": rp.verdict,
        "causal": rp.causal,
        "in_plus": rp.in_signed("+"),
        "in_minus": rp.in_signed("-"),
        "diagonal": rp.diagonal,
        "reason": rel.reason if rel else "",
        "lambda_star": None if w is None else w.lam_dst - w.lam_src,
        "pos_residual": None if w is None else w.pos_residual,
        "cov_residual": None if w is None else w.cov_residual,
        "multiple_witnesses": bool(rel.multiple) if rel else False,
        "candidates": [
            {"lambda": c.lam, "pos_residual": c.pos_residual, "cov_residual": c.cov_residual, "accepted": c.accepted}
            for c in (rel.candidates if rel else [])
        ],
    }


def cmd_geodesic(cfg: RunConfig, args) -> tuple[str, bool]:
    p = _point(cfg, "p")
    lam_range = tuple(cfg.raw.get("query", {}).get("lambda_range", (0.0, 1.0)))
    if not lam_range[0] <= lam_range[1]:
        raise ConfigError("/query/lambda_range", "must be increasing")
    strip = bc.integrate_strip(cfg.model, p, lam_range)
    if args.format == "csv":
        return strip_csv(strip), True
    return dumps({
        "lambda": strip.lam,
        "x": strip.X,
        "k": strip.K,
        "q": [row[-1] for row in strip.to_rows()],
        "status_low": strip.status_low,
        "status_high": strip.status_high,
    }), True


def cmd_relate(cfg: RunConfig, args) -> tuple[str, bool]:
    return dumps(_relation_json(_relation_point(cfg, args))), True


def cmd_transport(cfg: RunConfig, args) -> tuple[str, bool]:
    rp = _relation_point(cfg, args)
    out = _relation_json(rp)
    if rp.verdict == "in":
        prop = ps.propagator(cfg.spec.connection, rp)
        out["propagator"] = {
            "matrix": prop.matrix,
            "src": _phase_json(prop.src),
            "dst": _phase_json(prop.dst),
            "condition": prop.condition,
        }
    else:
        out["propagator"] = None
    return dumps(out), True


def _symbol_from_block(block: dict, dim: int, params, pointer: str) -> sy.PolySymbol:
    r, order = block["rank"], block["order"]
    coeffs = {}
    for t, term in enumerate(block["terms"]):
        alpha = tuple(term["alpha"])
        if len(alpha) != dim:
            raise ConfigError(f"{pointer}/terms/{t}/alpha", f"need {dim} entries")
        if sum(alpha) > order:
            raise ConfigError(f"{pointer}/terms/{t}/alpha", f"degree exceeds order {order}")
        zero = [[ex.ZERO] * r for _ in range(r)]
        re = _parse_matrix(term["re"], dim, params, f"{pointer}/terms/{t}/re", r) if "re" in term else zero
        im = _parse_matrix(term["im"], dim, params, f"{pointer}/terms/{t}/im", r) if "im" in term else zero
        mat = tuple(tuple((re[i][j], im[i][j]) for j in range(r)) for i in range(r))
        coeffs[alpha] = sy.mat_add(coeffs[alpha], mat) if alpha in coeffs else mat
    return sy.PolySymbol(dim, r, order, coeffs)


def _symbol_json(a: sy.PolySymbol) -> dict:
    return {
        "dim": a.dim,
        "rank": a.rank,
        "order": a.order,
        "terms": [
            {
                "alpha": list(alpha),
                "re": [[ex.to_str(re) for re, _ in row] for row in mat],
                "im": [[ex.to_str(im) for _, im in row] for row in mat],
            }
            for alpha, mat in a.coeffs.items()
        ],
    }


def cmd_symbol(cfg: RunConfig, args) -> tuple[str, bool]:
    block = cfg.raw.get("symbol")
    if block is None:
        raise ConfigError("/symbol", "required by this command")
    params = cfg.raw["spacetime"].get("params", {})
    dim = cfg.model.dim
    a = (
        _symbol_from_block(block["a"], dim, params, "/symbol/a")
        if "a" in block
        else nh.full_symbol(cfg.spec)
    )
    which = block["which"]
    if which == "principal":
        result = _symbol_json(sy.principal(a))
    elif which == "refined":
        g = sy.refined_principal(a)
        result = {"layers": {str(d): _symbol_json(part) for d, part in sorted(g.parts.items(), reverse=True)}}
    elif which == "subprincipal":
        result = _symbol_json(sy.subprincipal(a))
    elif which == "dual":
        result = _symbol_json(sy.dual_symbol(a))
    else:
        if "b" not in block:
            raise ConfigError("/symbol/b", "required for 'compose'")
        b = _symbol_from_block(block["b"], dim, params, "/symbol/b")
        if a.rank != b.rank:
            raise ConfigError("/symbol/b/rank", "ranks of a and b differ")
        result = _symbol_json(sy.compose(a, b, block.get("drop_below", 0)))
    return dumps({"which": which, "convention": "coefficients of zeta^alpha, zeta = i xi", "result": result}), True


def cmd_polfibre(cfg: RunConfig, args) -> tuple[str, bool]:
    variant = cfg.raw.get("query", {}).get("variant", "EP")
    tol = float(cfg.tolerances.get("membership_tol", ps.DEFAULT_MEMBERSHIP_TOL))
    rp = _relation_point(cfg, args)
    if variant == "proca":
        if cfg.proca is None:
            raise ConfigError("/query/variant", "'proca' needs a proca block")
        if rp.verdict == "in":
            f = pr.predicted_proca_fibre(cfg.proca, rp)
        elif rp.verdict == "out":
            f = ps.PolFibre(None, tol)
        else:
            raise ValueError("membership undecided; fibre unavailable")
    elif variant == "EP":
        f = ps.fibre_EP(cfg.spec, rp, tol)
    else:
        f = ps.fibre_EPpm(cfg.spec, rp, "+" if variant == "EP+" else "-", tol)
    out = _relation_json(rp)
    out["variant"] = variant
    out["fibre"] = {"zero": f.is_zero, "basis": None if f.is_zero else f.basis}
    return dumps(out), True


def cmd_proca_demo(cfg: RunConfig, args) -> tuple[str, bool]:
    if cfg.proca is None:
        raise ConfigError("/proca", "required by this command")
    ctx = cfg.proca
    rp = _relation_point(cfg, args)
    out = _relation_json(rp)
    if rp.verdict != "in":
        out["proca"] = None
        return dumps(out), True
    fib = pr.predicted_proca_fibre(ctx, rp)
    left, right = pr.constraint_residuals(ctx, rp, fib.basis)
    tol_rel = float(cfg.tolerances.get("tol_rel", ps.DEFAULT_TOL_REL))
    pos = pr.proca_wf_claim(ctx, rp, tol_rel)
    neg = pr.proca_wf_claim(ctx, rp, tol_rel, negative_control=True)
    out["proca"] = {
        "m": ctx.m,
        "predicted_fibre": fib.basis,
        "annihilator_left": left,
        "annihilator_right": right,
        "chain_distance": pr.chain_distance(ctx, rp),
        "wf_claim": {k: v for k, v in pos.items()},
        "negative_control": {k: v for k, v in neg.items()},
    }
    ok = pos["nonzero"] and not neg["nonzero"]
    return dumps(out), ok


def cmd_verify(cfg: RunConfig | None, args) -> tuple[str, bool]:
    if cfg is None:
        results = vf.run_suite()
        scope = "builtin"
    else:
        results = vf.run_model_suite(cfg.model, cfg.spec, seed=cfg.seed)
        scope = "config"
    passed = all(r.passed for r in results)
    report = {
        "scope": scope,
        "passed": passed,
        "results": [
            {
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "value": r.value,
                "tolerance": r.tolerance,
                "budget_seconds": r.budget,
                "details": {k: v for k, v in sorted(r.details.items())},
            }
            for r in results
        ],
    }
    for r in results:
        print(r.line(), file=sys.stderr)
    return dumps(report), passed


COMMANDS = {
    "geodesic": cmd_geodesic,
    "relate": cmd_relate,
    "transport": cmd_transport,
    "symbol": cmd_symbol,
    "polfibre": cmd_polfibre,
    "proca-demo": cmd_proca_demo,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument("--tol-null", dest="tol_null", type=float, metavar="X")
    common.add_argument("--tol-pos", dest="tol_pos", type=float, metavar="X")
    common.add_argument("--tol-cov", dest="tol_cov", type=float, metavar="X")
    common.add_argument("--lambda-max", dest="lambda_max", type=float, metavar="X")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    parser = argparse.ArgumentParser(prog="polprop", description="Polarisation propagation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("tol_null", "tol_pos", "tol_cov", "lambda_max"):
        v = getattr(args, name)
        if v is not None and not v > 0:
            print(f"error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return 2
    if args.format == "csv" and args.command != "geodesic":
        print("error: --format csv is only available for 'geodesic'", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.seed) if args.config else None
        if cfg is None and args.command != "verify":
            raise ConfigError("/", f"'{args.command}' needs --config")
        text, ok = COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error at {err.pointer}: {err.detail}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
