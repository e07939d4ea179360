"""Command-line batch runner for the verification suites.

Example::

    verify --suite axioms --model euclidean:n=2 --trials 10000 --seed 42

Exit codes: 0 when every check passes, 1 when an inequality is
violated, 2 for usage or configuration errors, 3 when a solver fails
or a check is inconclusive at its cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .models import ModelParams, instantiate_model, load_tree
from .space import SamplingError, SolverError, UsageError

SUITES = ("axioms", "cat0", "property_g", "lambda_convexity", "afp", "rates", "shadow", "prox")
OUT_DIR_ENV = "UCWLAB_OUT_DIR"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
DEFAULTS = {"suite": "all", "model": "euclidean:n=2", "trials": 1000, "seed": 0, "tol": None,
            "out": None, "format": "json"}

# trial caps used by ``--suite all`` so the whole run stays within minutes
ALL_CAPS = {"axioms": 2000, "cat0": 2000, "property_g": 2000, "lambda_convexity": 2000,
            "afp": 500, "rates": 1, "shadow": 1, "prox": 20}


@dataclass
class CampaignConfig:
    suite: str
    model: str
    trials: int
    seed: int
    tol: float | None
    out: str | None
    format: str

    def echo(self) -> dict:
        return {"suite": self.suite, "model": self.model, "trials": self.trials, "seed": self.seed,
                "tol": self.tol, "format": self.format}


def parse_model_spec(text: str) -> ModelParams:
    """``euclidean:n=2``, ``lp:n=3,p=4``, ``poincare:r=0.9``, ``tree`` or ``tree:path=edges.txt``."""
    kind, _, rest = text.strip().partition(":")
    opts = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            if kind == "tree" and "path" not in opts:
                opts["path"] = item
                continue
            raise UsageError(f"model option {item!r} is not of the form key=value")
        opts[key.strip()] = val.strip()
    allowed = {"euclidean": {"n", "r"}, "lp": {"n", "p", "r"}, "poincare": {"r"}, "tree": {"path"}}
    if kind not in allowed:
        raise UsageError(f"unknown model {kind!r}; expected one of {sorted(allowed)}")
    extra = set(opts) - allowed[kind]
    if extra:
        raise UsageError(f"unknown options {sorted(extra)} for model {kind}")
    try:
        n = int(opts.get("n", 2))
        p = float(opts.get("p", 4.0 if kind == "lp" else 2.0))
        r = float(opts["r"]) if "r" in opts else None
    except ValueError as exc:
        raise UsageError(f"bad model option in {text!r}: {exc}") from None
    if kind == "lp" and not p >= 2:
        raise UsageError(f"lp model requires p >= 2, got p={p:g}")
    if kind == "poincare" and r is not None and not 0 < r < 1:
        raise UsageError(f"poincare sampling radius must satisfy 0 < r < 1, got r={r:g}")
    edges = None
    if kind == "tree" and "path" in opts:
        path = Path(opts["path"])
        if not path.is_file():
            raise UsageError(f"tree file {path} does not exist")
        edges = load_tree(path)
    return ModelParams(kind, n=n, p=p, edges=edges, r_sample=r)


def read_config(path: str) -> dict:
    """Plain ``key=value`` lines; ``#`` starts a comment."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path} does not exist")
    out = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: expected one of {sorted(DEFAULTS)} as key=value")
        out[key] = val.strip()
    return out


def make_config(flags: dict, file_values: dict) -> CampaignConfig:
    merged = dict(DEFAULTS)
    merged.update(file_values)
    merged.update({k: v for k, v in flags.items() if v is not None})
    try:
        trials = int(merged["trials"])
        seed = int(merged["seed"])
        tol = None if merged["tol"] in (None, "") else float(merged["tol"])
    except ValueError as exc:
        raise UsageError(f"bad configuration value: {exc}") from None
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if tol is not None and not tol >= 0:
        raise UsageError("tol must be nonnegative")
    if merged["suite"] not in SUITES + ("all",):
        raise UsageError(f"unknown suite {merged['suite']!r}")
    if merged["format"] not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    return CampaignConfig(merged["suite"], merged["model"], trials, seed, tol, merged["out"], merged["format"])


# ---------------------------------------------------------------------------
# suites; each returns a list of check records with a "status" field


def sub_seed(seed: int, *labels) -> int:
    """Independent per-check seed so checks do not depend on run order."""
    import zlib

    key = [seed] + [zlib.crc32(str(s).encode()) for s in labels]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def _from_report(rep) -> dict:
    return {"check": rep.axiom, "status": "pass" if rep.ok else "fail", **rep.to_dict()}


def suite_axioms(model, trials, seed, tol):
    from .moduli import check_uniform_convexity
    from .space import check_axioms

    out = [_from_report(r) for r in check_axioms(model.space, sub_seed(seed, "axioms"), trials, tol)]
    out.append(_from_report(check_uniform_convexity(model, sub_seed(seed, "uc"), trials, tol)))
    return out


def suite_cat0(model, trials, seed, tol):
    from .models import check_cat0

    if not model.is_cat0:
        return [{"check": "cat0", "status": "skipped", "reason": f"{model.space.name} is not CAT(0)"}]
    return [_from_report(check_cat0(model, sub_seed(seed, "cat0"), trials, tol))]


def suite_property_g(model, trials, seed, tol):
    from .moduli import cat0_psi, check_property_G, derived_psi

    out = [_from_report(check_property_G(model, derived_psi(model.eta), sub_seed(seed, "G"), trials, tol))]
    if model.is_cat0:
        out.append(_from_report(check_property_G(model, cat0_psi(), sub_seed(seed, "G0"), trials, tol)))
    return out


def suite_lambda_convexity(model, trials, seed, tol):
    from .moduli import check_lambda_convexity

    return [_from_report(r) for r in check_lambda_convexity(model, sub_seed(seed, "lambda"), trials, tol)]


ADMISSIBLE_FLOOR = 0.5


def _from_campaign(res) -> dict:
    status = "fail" if res.failed else "pass"
    if status == "pass" and res.admissible_rate < ADMISSIBLE_FLOOR:
        status = "inconclusive"
    return {"check": res.name, "status": status, "admissible_rate": res.admissible_rate, **res.to_dict()}


def suite_afp(model, trials, seed, tol):
    from . import fixpoint as fp

    out = []
    for T in fp.mapping_library(model):
        out.append(_from_report(fp.check_mapping(model, T, sub_seed(seed, "lip", T.name), trials, tol)))
        out.append(_from_report(fp.check_fix_convex(model, T, sub_seed(seed, "fix", T.name), trials, tol)))
        out.append(_from_campaign(fp.afp_campaign(model, T, sub_seed(seed, "afp", T.name), trials)))
    for T in fp.asymptotic_library(model):
        fp.validate_moduli(T)
        out.append(_from_report(fp.check_mapping(model, T, sub_seed(seed, "lipn", T.name), trials, tol)))
        for mode in ("power_n", "single_step"):
            res = fp.afp_asymptotic_campaign(model, T, sub_seed(seed, mode, T.name), trials, mode)
            out.append(_from_campaign(res))
    return out


RATE_EPS = (1e-1, 1e-2, 1e-3)


def _rate_record(check: str, seq, rep) -> dict:
    return {"check": check, "status": rep.status, "sequence": seq.descriptor, **rep.to_dict()}


def suite_rates(model, trials, seed, tol):
    """Model independent: the sequence families against the counter-function family."""
    from . import rates

    out = []
    gs = rates.g_family(seed)
    for seq in rates.monotone_family():
        for g in gs:
            for eps in RATE_EPS:
                out.append(_rate_record("monotone", seq, rates.mono_metastability(seq, eps, g)))
    for seq in rates.quasi_monotone_family():
        for g in gs:
            for eps in RATE_EPS:
                out.append(_rate_record("quasi_monotone", seq, rates.summable_metastability(seq, eps, g)))
    return out


SHADOW_HORIZON = 10**4
TAIL_TOL = 1e-6


def suite_shadow(model, trials, seed, tol):
    from . import rates, shadow

    out = []
    gs = [rates.g_const(1), rates.g_const(10), rates.g_linear(), rates.g_exp(12), rates.g_random(seed)]
    for sc in shadow.shadow_scenarios(model):
        trace = sc.make_trace(SHADOW_HORIZON)
        if sc.convergent:
            tail = shadow.shadow_tail_oscillation(sc.S, trace, SHADOW_HORIZON - 1000, 1000)
            out.append({"check": "shadow_tail", "scenario": sc.name, "status": "pass" if tail < TAIL_TOL else "fail",
                        "tail_oscillation": tail, "threshold": TAIL_TOL})
        for g in gs:
            for eps in RATE_EPS:
                rep = sc.verify(trace, eps, g)
                out.append({"check": "quasi_fejer_shadow" if sc.quasi else "fejer_shadow", "scenario": sc.name,
                            "status": rep.status, **rep.to_dict()})
    return out


PROX_MATCH_TOL = 1e-6
PROX_TWO_START_TOL = 2e-6
PROX_INSTANCE_CAP = 100
PROX_LP_INSTANCE_CAP = 10  # the 3-D nested search is slow


def _prox_instances(model, trials: int, seed: int):
    cap = PROX_LP_INSTANCE_CAP if model.kind == "lp" else PROX_INSTANCE_CAP
    rng = np.random.default_rng(seed)
    space = model.space
    for _ in range(min(trials, cap)):
        yield space.sample(rng), space.sample(rng), float(rng.uniform(0.1, 3.0)), rng


def _max_check(name: str, errors: list, limit: float) -> dict:
    worst = max(errors) if errors else 0.0
    return {"check": name, "status": "pass" if worst <= limit else "fail", "instances": len(errors),
            "max_error": worst, "tol": limit}


def suite_prox(model, trials, seed, tol):
    from . import proximal as px
    from .shadow import ball_set

    space = model.space
    d = space.dist
    closed, starts, proj = [], [], []
    for a, p, lam, rng in _prox_instances(model, trials, sub_seed(seed, "prox")):
        prob = px.ProxProblem(model, px.half_sqdist(space, p), lam, a)
        x = px.prox(prob, method="generic")
        if model.kind in ("euclidean", "lp"):
            ref = a + lam / (1.0 + lam) * (p - a)
        else:
            ref = px.prox(prob)
        closed.append(d(x, ref))
        starts.append(d(x, px.prox(prob, method="generic", variant=1)))
        S = ball_set(space, space.sample(rng), float(rng.uniform(0.1, 0.6)))
        y = px.prox(px.ProxProblem(model, px.Indicator(S), lam, a), method="generic")
        proj.append(d(y, S.project(a)))
    out = [_max_check("prox_closed_form", closed, PROX_MATCH_TOL),
           _max_check("prox_two_start", starts, PROX_TWO_START_TOL),
           _max_check("prox_indicator_projection", proj, PROX_MATCH_TOL)]

    rng = np.random.default_rng(sub_seed(seed, "library"))
    small = model.kind == "lp"
    for name, f, minimizers in px.functional_library(model):
        out.append(_from_report(px.check_convexity(model, f, sub_seed(seed, "convex", name), min(trials, 500), tol)))
        cands = px.library_candidates(model, minimizers, rng, *((1, 2) if small else (3, 5)))
        verdicts = px.minimizer_fixed_point_check(model, f, cands)
        bad = [v.to_dict() for v in verdicts if not v.agrees]
        out.append({"check": f"fixed_point_iff_minimizer[{name}]", "status": "fail" if bad else "pass",
                    "candidates": len(verdicts), "disagreements": bad})
    return out


SUITE_FUNCS = {"axioms": suite_axioms, "cat0": suite_cat0, "property_g": suite_property_g,
               "lambda_convexity": suite_lambda_convexity, "afp": suite_afp, "rates": suite_rates,
               "shadow": suite_shadow, "prox": suite_prox}


# ---------------------------------------------------------------------------
# running and reporting


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _run_suite(name, model, cfg: CampaignConfig) -> dict:
    trials = min(cfg.trials, ALL_CAPS[name]) if cfg.suite == "all" else cfg.trials
    if cfg.suite == "cat0" and not model.is_cat0:
        raise UsageError(f"suite cat0 needs a CAT(0) model; {model.space.name} is not one")
    try:
        checks = SUITE_FUNCS[name](model, trials, cfg.seed, cfg.tol)
    except (SolverError, SamplingError) as exc:
        checks = [{"check": name, "status": "error", "error": f"{type(exc).__name__}: {exc}"}]
    counts = {s: sum(c["status"] == s for c in checks) for s in ("pass", "fail", "inconclusive", "error", "skipped")}
    return {"suite": name, "trials": trials, "counts": counts, "checks": checks}


def run(cfg: CampaignConfig) -> tuple[dict, int]:
    """Execute the configured suites; returns ``(report body, exit code)``."""
    if cfg.seed < 0:
        raise UsageError("seed must be a nonnegative integer")
    model = instantiate_model(parse_model_spec(cfg.model))
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    suites = [_run_suite(n, model, cfg) for n in names]
    totals = {k: sum(s["counts"][k] for s in suites) for k in suites[0]["counts"]}
    if totals["fail"]:
        code = EXIT_VIOLATION
    elif totals["error"] or totals["inconclusive"]:
        code = EXIT_SOLVER
    else:
        code = EXIT_OK
    body = {"version": __version__, "config": cfg.echo(), "model": model.space.name, "totals": totals,
            "exit_code": code, "suites": suites}
    return _clean(body), code


def render_json(body: dict, wall_clock: float | None = None) -> str:
    doc = {"report": body}
    if wall_clock is not None:
        doc["wall_clock_seconds"] = round(wall_clock, 3)
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render_csv(body: dict) -> str:
    """One row per non-passing check (violations, errors, inconclusive results)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "check", "status", "detail"])
    for s in body["suites"]:
        for c in s["checks"]:
            if c["status"] in ("pass", "skipped"):
                continue
            rest = {k: v for k, v in c.items() if k not in ("check", "status")}
            w.writerow([s["suite"], c["check"], c["status"], json.dumps(rest, allow_nan=False)])
    return buf.getvalue()


def output_path(out: str | None) -> Path | None:
    if out is None:
        return None
    env = os.environ.get(OUT_DIR_ENV)
    return Path(env) / Path(out).name if env else Path(out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="verify", description="Randomized verification suites for uniformly "
                                 "convex geodesic spaces.")
    ap.add_argument("--suite", choices=SUITES + ("all",), help="suite to run (default: all)")
    ap.add_argument("--model", help="model spec, e.g. euclidean:n=2, lp:n=3,p=4, poincare:r=0.9, tree[:path]")
    ap.add_argument("--trials", type=int, help="trials per check (default: 1000)")
    ap.add_argument("--seed", type=int, help="base seed (default: 0)")
    ap.add_argument("--tol", type=float, help="override the model tolerance for inequality checks")
    ap.add_argument("--out", help=f"write the report here (directory overridable via ${OUT_DIR_ENV})")
    ap.add_argument("--format", choices=("json", "csv"), help="report format (default: json)")
    ap.add_argument("--config", help="file of key=value lines; command-line flags win")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items() if k != "config"}
        cfg = make_config(flags, file_values)
        t0 = time.perf_counter()
        body, code = run(cfg)
        elapsed = time.perf_counter() - t0
    except UsageError as exc:
        print(f"verify: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render_json(body, elapsed) if cfg.format == "json" else render_csv(body)
    path = output_path(cfg.out)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    t = body["totals"]
    print(f"verify: {cfg.suite} on {body['model']}: {t['pass']} passed, {t['fail']} failed, "
          f"{t['inconclusive']} inconclusive, {t['error']} errors ({elapsed:.1f}s)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
