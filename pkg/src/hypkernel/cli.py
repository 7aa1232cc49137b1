"""Batch command-line front end.

Exit status: 0 when every check of the command passes, 1 when a check
fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from fractions import Fraction

from .bounds_verifier import (STANDARD_GRID, EvalPoint, GridSpec, RegionConstants,
                              classify_region, dm_ratio_scan, resolvent_positivity_suite,
                              uncovered_nodes)
from .reports import atomic_write_text, csv_text, dumps_json, report_document

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

COMMANDS = ("eval", "verify-dm", "verify-regions", "verify-positivity", "li-yau",
            "riesz-range", "grad-norm", "fexp", "selftest")

# config key -> (parser, default)
_FIELDS = {
    "n": (int, None),
    "r": (float, None),
    "t": (float, None),
    "lambda": (str, None),
    "q": (str, None),
    "alpha": (float, 1.5),
    "grid": (str, None),
    "format": (str, "json"),
    "out": (str, None),
    "threads": (int, 1),
    "tol": (float, None),
    "regions": (str, None),
}


class UsageError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    """Everything one CLI run needs; round-trips through a flat ``key = value`` file."""

    command: str
    n: int | None = None
    r: float | None = None
    t: float | None = None
    lam: str | None = None
    q: str | None = None
    alpha: float = 1.5
    grid: str | None = None
    format: str = "json"
    out: str | None = None
    threads: int = 1
    tol: float | None = None
    regions: str | None = None

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for key in _FIELDS:
            val = getattr(self, "lam" if key == "lambda" else key)
            if val is not None:
                lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: str | None = None) -> "RunConfig":
        values = parse_config_text(text)
        cmd = command or values.pop("command", None)
        values.pop("command", None)
        if cmd is None:
            raise UsageError("no command given")
        kwargs = {("lam" if k == "lambda" else k): v for k, v in values.items()}
        return cls(command=cmd, **kwargs)

    def grid_spec(self, default: GridSpec = STANDARD_GRID) -> GridSpec:
        return parse_grid(self.grid) if self.grid else default

    def region_constants(self) -> RegionConstants:
        if not self.regions:
            return RegionConstants()
        try:
            vals = [float(x) for x in self.regions.split(",")]
            return RegionConstants(*vals)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad region constants {self.regions!r}: {exc}") from exc


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_") if key != "lambda" else key
        if key == "command":
            out[key] = val
            continue
        if key not in _FIELDS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _FIELDS[key][0](val)
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: {exc}") from exc
    return out


def parse_grid(text: str) -> GridSpec:
    """``r_min:r_max:points,t_min:t_max:points`` (log spacing)."""
    try:
        r_part, t_part = text.split(",")
        r0, r1, rn = r_part.split(":")
        t0, t1, tn = t_part.split(":")
        return GridSpec(float(r0), float(r1), float(t0), float(t1), int(rn), int(tn))
    except ValueError as exc:
        raise UsageError(f"bad --grid {text!r}: {exc}") from exc


def parse_number(text: str):
    """Exact Fraction for ints, ratios and short decimals; float otherwise."""
    try:
        return Fraction(text)
    except ValueError:
        try:
            return float(text)
        except ValueError as exc:
            raise UsageError(f"not a number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypkernel", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value file; flags override it")
    ap.add_argument("--n", type=int)
    ap.add_argument("--r", type=float)
    ap.add_argument("--t", type=float)
    ap.add_argument("--lambda", dest="lam")
    ap.add_argument("--q")
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--grid", help="r_min:r_max:points,t_min:t_max:points")
    ap.add_argument("--regions", help="region constants C,C1,C2,C3")
    ap.add_argument("--format", choices=("json", "csv"))
    ap.add_argument("--out")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--tol", type=float)
    return ap


def config_from_args(ns) -> RunConfig:
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = RunConfig.from_text(fh.read(), ns.command)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    else:
        cfg = RunConfig(ns.command)
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        val = getattr(ns, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    return cfg


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, "lam" if n == "lambda" else n) is None]
    if missing:
        raise UsageError(f"{cfg.command} needs " + ", ".join("--" + m for m in missing))


def _emit(cfg, kind, payload, csv_rows=None):
    doc = report_document(kind, payload)
    if cfg.format == "csv" and csv_rows is not None:
        text = csv_text(*csv_rows) if isinstance(csv_rows, tuple) else csv_rows
    else:
        text = dumps_json(doc)
    if cfg.out:
        atomic_write_text(cfg.out, text)
    else:
        sys.stdout.write(text)
    return doc


# --- commands ----------------------------------------------------------------------

def cmd_eval(cfg):
    from .model_kernels import dm_quantity, heat_kernel
    _need(cfg, "n", "r", "t")
    p = EvalPoint(cfg.r, cfg.t)
    h = heat_kernel(cfg.n, p.r, p.t)
    dm = dm_quantity(cfg.n, p.r, p.t)
    regions = sorted(reg.name for reg in classify_region(p, cfg.region_constants()))
    payload = {"dim": cfg.n, "r": p.r, "t": p.t, "log_H": h.log_magnitude, "H": h.value,
               "log_DM": dm.log_magnitude, "DM": dm.value,
               "ratio": math.exp(h.log_magnitude - dm.log_magnitude), "regions": regions,
               "reduced_accuracy": h.reduced_accuracy}
    row = (["n", "r", "t", "log_H", "log_DM", "ratio", "regions"],
           [(cfg.n, p.r, p.t, h.log_magnitude, dm.log_magnitude, payload["ratio"], "|".join(regions))])
    _emit(cfg, "eval", payload, row)
    return h.log_magnitude > -math.inf


def cmd_verify_dm(cfg):
    _need(cfg, "n")
    grid = cfg.grid_spec()
    rep = dm_ratio_scan(cfg.n, grid, cfg.region_constants(), threads=cfg.threads)
    payload = rep.to_dict()
    ok = rep.ok
    if cfg.tol is not None:
        fine = dm_ratio_scan(cfg.n, grid.refined(), cfg.region_constants(), threads=cfg.threads)
        change = max(abs(fine.inf_ratio / rep.inf_ratio - 1), abs(fine.sup_ratio / rep.sup_ratio - 1))
        payload["refinement_change"] = change
        ok &= change <= cfg.tol
    payload["passed"] = ok
    _emit(cfg, "dm_ratio_scan", payload, rep.nodes_csv())
    return ok


def cmd_verify_regions(cfg):
    grid = cfg.grid_spec(GridSpec(1e-3, 100.0, 1e-3, 100.0, 200, 200))
    consts = cfg.region_constants()
    bad = uncovered_nodes(grid, consts)
    payload = {"grid": grid, "constants": consts, "covering_condition": consts.covering,
               "uncovered_count": len(bad), "uncovered_sample": bad[:20], "passed": not bad}
    _emit(cfg, "region_covering", payload, (["r", "t"], bad))
    return not bad


def cmd_verify_positivity(cfg):
    _need(cfg, "n")
    rep = resolvent_positivity_suite(cfg.n, tolerance=cfg.tol if cfg.tol is not None else 0.05)
    _emit(cfg, "resolvent_positivity", rep.to_dict(),
          (["mu", "r", "value"], rep.failing_nodes))
    return rep.passed


def cmd_li_yau(cfg):
    from .gradient_riesz import li_yau_check
    _need(cfg, "n")
    rep = li_yau_check(cfg.n, cfg.alpha, cfg.grid_spec())
    tol = cfg.tol if cfg.tol is not None else 0.1
    ok = rep.finite and rep.refinement_change <= tol
    payload = rep.to_dict()
    payload["passed"] = ok
    _emit(cfg, "li_yau", payload, rep.nodes_csv())
    return ok


def cmd_riesz_range(cfg):
    from .gradient_riesz import riesz_range
    _need(cfg, "n", "lambda")
    rr = riesz_range(cfg.n, parse_number(cfg.lam))
    text = f"({rr.p_lo}, {'inf' if rr.p_hi == math.inf else rr.p_hi})"
    payload = {"dim": cfg.n, "lambda": str(rr.lam), "p_lo": str(rr.p_lo), "p_hi": str(rr.p_hi),
               "p_lo_float": float(rr.p_lo), "p_hi_float": float(rr.p_hi), "interval": text}
    if cfg.out:
        _emit(cfg, "riesz_range", payload, (["p_lo", "p_hi"], [(str(rr.p_lo), str(rr.p_hi))]))
    else:
        print(text)
    return True


def cmd_grad_norm(cfg):
    from .gradient_riesz import gradient_norm_bound
    _need(cfg, "n", "q")
    q = float(parse_number(cfg.q))
    est = gradient_norm_bound(cfg.n, q)
    ok = est.rate_ok and (est.small_t_ok if q == 1 else True)
    payload = est.to_dict()
    payload["passed"] = ok
    _emit(cfg, "gradient_norm", payload, (["t", "value"], list(zip(est.t_grid, est.bound_values))))
    return ok


def cmd_fexp(cfg):
    import numpy as np
    from .contour_quadrature import QuadratureConfig, fexp_leading
    t = cfg.t if cfg.t is not None else 1.0
    res = fexp_leading(lambda w: np.ones_like(w), t, quad=QuadratureConfig(rel_tol=1e-13))
    ok = abs(res.value * math.sqrt(t) - math.sqrt(math.pi)) < 1e-10
    payload = dataclasses.asdict(res)
    payload.update(t=t, constant_mismatch=res.constant_mismatch, passed=ok)
    _emit(cfg, "fexp", payload, (["t", "value", "leading", "constant_used", "literature_constant"],
                                  [(t, res.value, res.leading, res.constant_used, res.literature_constant)]))
    return ok


def cmd_selftest(cfg):
    from .acceptance import run_all
    results = run_all()
    for res in results:
        print(res.line)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if cfg.out:
        payload = {"criteria": [{"key": r.key, "title": r.title, "passed": r.passed,
                                 "budget": r.budget, "details": r.details} for r in results],
                   "passed": ok}
        atomic_write_text(cfg.out, dumps_json(report_document("selftest", payload)))
    return ok


HANDLERS = {
    "eval": cmd_eval, "verify-dm": cmd_verify_dm, "verify-regions": cmd_verify_regions,
    "verify-positivity": cmd_verify_positivity, "li-yau": cmd_li_yau,
    "riesz-range": cmd_riesz_range, "grad-norm": cmd_grad_norm, "fexp": cmd_fexp,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    if cfg.command not in HANDLERS:
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.format not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    if cfg.threads < 1:
        raise UsageError("threads must be >= 1")
    return EXIT_OK if HANDLERS[cfg.command](cfg) else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return run(config_from_args(ns))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # domain errors from validated inputs are usage errors too
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
