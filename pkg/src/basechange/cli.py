"""Seeded experiment campaigns and the built-in self-check.

    basechange verify-matching --config cfg.json --out runs/matching.jsonl
    basechange descend --seed 3 --trace
    basechange selfcheck
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .descent import LatticePair, cayley, cayley_inv, descend
from .errors import BaseChangeError, ConfigInvalid, UncertifiedComparison
from .localfield import is_prime, make_tower, theta_power
from .matgrp import (CongruenceLevel, MatrixE, TwistedElem, dth_root_tu, in_congruence,
                     is_top_unipotent, theta_fixed_level)
from .orbital import (DEFAULT_NORMALIZATION, TestFunction, check_matching,
                      normalizing_factor_H, normalizing_factor_twisted, orbital_integral)
from . import sampling

SCHEMA_VERSION = 1
MODES = ("matching", "descent", "invariants", "orbital")
CSV_COLUMNS = ("case_id", "verdict", "lhs", "rhs", "D", "depth", "certified", "ms")


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 3
    e: int = 2
    f: int = 1
    n: int = 1
    m: int = 1
    precision: int = 10
    depth: int = 6
    seed: int = 0
    sample_count: int = 10
    mode: str = "matching"
    output_path: str | None = None

    def __post_init__(self):
        for k in ("p", "e", "f", "n", "m", "precision", "depth", "seed", "sample_count"):
            v = getattr(self, k)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigInvalid(f"{k} must be an integer, got {v!r}")
        p, e, f = self.p, self.e, self.f
        if not is_prime(p) or p == 2:
            raise ConfigInvalid(f"p = {p} must be an odd prime")
        if e < 1 or f < 1:
            raise ConfigInvalid("e and f must be positive")
        if (e * f) % p == 0:
            raise ConfigInvalid(f"p = {p} divides d = {e * f}")
        if (p - 1) % e:
            raise ConfigInvalid(f"e = {e} does not divide p - 1")
        if math.gcd(e, f) != 1:
            raise ConfigInvalid("gcd(e, f) must be 1")
        if self.m < 1:
            raise ConfigInvalid("m must be >= 1")
        if self.n < 1 or self.precision < 1 or self.depth < 0 or self.sample_count < 0:
            raise ConfigInvalid("n, precision must be positive; depth, sample_count non-negative")
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a flat JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def tower(self):
        return make_tower(self.p, self.e, self.f, self.precision)


@dataclass
class CampaignReport:
    config: dict
    records: list
    summary: dict
    schema_version: int = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return self.summary["failed"] == 0 and self.summary["uncertified"] == 0

    def write(self, out: str | Path):
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        config = {k: v for k, v in self.config.items() if k != "output_path"}
        header = {"kind": "header", "schema_version": self.schema_version, "config": config}
        with out.open("w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.write(json.dumps({"kind": "summary", **self.summary}, sort_keys=True) + "\n")
        with (out.parent / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for rec in self.records:
                w.writerow([rec.get(c) for c in CSV_COLUMNS])

    def table(self) -> str:
        lines = [f"{'case':>5}  {'verdict':7}  {'lhs':>12}  {'rhs':>12}  {'D':>10}  depth  cert"]
        for r in self.records:
            lines.append(f"{r['case_id']:>5}  {r['verdict']:7}  {str(r.get('lhs')):>12}  "
                         f"{str(r.get('rhs')):>12}  {str(r.get('D')):>10}  {str(r.get('depth')):>5}  "
                         f"{r.get('certified')}")
        s = self.summary
        lines.append(f"passed {s['passed']}/{s['cases']}, uncertified {s['uncertified']}, "
                     f"max depth {s['max_depth']}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# cases

def _ser(M: MatrixE):
    return [str(a) for a in M.entries()]


def _frac(x):
    return None if x is None else f"{x.numerator}/{x.denominator}"


def _generate(cfg: ExperimentConfig):
    """Sample all case inputs up front so results do not depend on scheduling."""
    t = cfg.tower()
    rng = sampling.make_rng(cfg.seed)
    cases = []
    for i in range(cfg.sample_count):
        if cfg.mode == "descent":
            k = sampling.random_congruence(rng, t, cfg.n, max(cfg.m, t.e))
            cases.append({"case_id": i, "k": _ser(k)})
        elif cfg.mode == "matching" and cfg.n == 1:
            cases.append({"case_id": i, "gamma": [str(sampling.random_scalar(rng, t))]})
        else:
            g = sampling.random_tu_regular(rng, t, cfg.n)
            cases.append({"case_id": i, "gamma": _ser(g)})
    return cases


def _record(case_id, verdict, lhs=None, rhs=None, D=None, depth=None, certified=True, ms=0.0, **extra):
    rec = {"case_id": case_id, "verdict": verdict, "lhs": lhs, "rhs": rhs, "D": D,
           "depth": depth, "certified": certified, "ms": round(ms, 3)}
    rec.update(extra)
    return rec


def _run_case(cfg_dict, case, trace=False):
    cfg = ExperimentConfig(**cfg_dict)
    t = cfg.tower()
    start = time.perf_counter()
    cid = case["case_id"]
    try:
        if cfg.mode == "matching":
            gamma = MatrixE.parse(t, case["gamma"])
            try:
                rep = check_matching(gamma, cfg.m, DEFAULT_NORMALIZATION, cfg.depth)
            except UncertifiedComparison:
                rep = check_matching(gamma, cfg.m, DEFAULT_NORMALIZATION, cfg.depth,
                                     require_certified=False)
            d = rep.to_dict()
            d.pop("wall_ms")
            return _record(cid, rep.verdict, _frac(rep.lhs), _frac(rep.rhs), _frac(rep.D_H),
                           rep.depth_used, rep.certified, (time.perf_counter() - start) * 1e3,
                           report=d)
        if cfg.mode == "descent":
            k = MatrixE.parse(t, case["k"])
            tr = []
            g, h = descend(k, LatticePair(max(cfg.m, t.e), cfg.n, t.e), trace=tr, emit=trace)
            ok = h.is_theta_fixed() and (g @ h @ g.theta().inverse()).equals(k)
            return _record(cid, "PASS" if ok else "FAIL", depth=len(tr),
                           ms=(time.perf_counter() - start) * 1e3, iterations=tr)
        gamma = MatrixE.parse(t, case["gamma"])
        if cfg.mode == "invariants":
            checks = _invariant_checks(gamma)
            ok = all(checks.values())
            return _record(cid, "PASS" if ok else "FAIL", ms=(time.perf_counter() - start) * 1e3,
                           checks=checks)
        # orbital
        fH, fG = TestFunction.for_matching(t, cfg.m)
        H = orbital_integral(fH, gamma, DEFAULT_NORMALIZATION, cfg.depth)
        G = orbital_integral(fG, TwistedElem(dth_root_tu(gamma)), DEFAULT_NORMALIZATION, cfg.depth)
        ok = H.normalized_squared() == G.normalized_squared()
        return _record(cid, "PASS" if ok else "FAIL", _frac(H.value), _frac(G.value),
                       _frac(H.normalizing_factor), max(H.depth_used, G.depth_used),
                       H.certified and G.certified, (time.perf_counter() - start) * 1e3)
    except BaseChangeError as exc:
        return _record(cid, "ERROR", certified=False, ms=(time.perf_counter() - start) * 1e3,
                       error=f"{type(exc).__name__}: {exc}")


def _invariant_checks(gamma: MatrixE) -> dict:
    t = gamma.tower
    root = dth_root_tu(gamma)
    X = cayley_inv(gamma)
    return {
        "d_factor_coherence": normalizing_factor_twisted(TwistedElem(gamma)) == normalizing_factor_H(gamma),
        "root_power": (root ** t.d).equals(gamma),
        "power_root": dth_root_tu(gamma ** t.d).equals(gamma),
        "root_tu": is_top_unipotent(root),
        "cayley_roundtrip": cayley(X).equals(gamma),
        "cayley_theta": cayley(X.X.theta()).equals(gamma.theta()),
    }


def run_experiment(config: ExperimentConfig, *, workers: int = 1, trace: bool = False,
                   timing: bool = True) -> CampaignReport:
    start = time.perf_counter()
    cases = _generate(config)
    cfg_dict = dataclasses.asdict(config)
    if workers > 1 and len(cases) > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_case, [cfg_dict] * len(cases), cases))
    else:
        records = [_run_case(cfg_dict, c, trace) for c in cases]
    if not timing:
        for r in records:
            r["ms"] = 0.0
            if "report" in r:
                r["report"].pop("wall_ms", None)
    depths = [r["depth"] for r in records if isinstance(r.get("depth"), int)]
    summary = {
        "cases": len(records),
        "passed": sum(r["verdict"] == "PASS" for r in records),
        "failed": sum(r["verdict"] != "PASS" for r in records),
        "uncertified": sum(not r["certified"] for r in records),
        "max_depth": max(depths, default=0),
        "total_ms": round((time.perf_counter() - start) * 1e3, 3) if timing else 0.0,
        "regularity_slack": 2,
        "generator": "numpy.random.default_rng (PCG64)",
        "version": __version__,
    }
    return CampaignReport(cfg_dict, records, summary)


# ---------------------------------------------------------------------------
# self-check

def _suite_theta_order(t, rng, count=10):
    ok = True
    for _ in range(count):
        x = sampling.random_o(rng, t)
        ok &= theta_power(x, t.d).equals(x)
    return ok


def _suite_theta_level(towers, rng, count=20):
    ok = True
    for t in towers:
        for m in range(1, 5):
            kp = theta_fixed_level(t.e, m)
            for _ in range(count):
                a = int(rng.integers(0, m + 2))
                M = MatrixE.identity(t, 2) + sampling.random_F_matrix(rng, t, 2, a)
                ok &= in_congruence(M, CongruenceLevel("E", m)) == in_congruence(M, CongruenceLevel("F", kp))
    return ok


def _suite_cayley(t, rng, count=10):
    ok = True
    for _ in range(count):
        X = sampling.random_top_nilpotent(rng, t, 2)
        c = cayley(X)
        ok &= cayley_inv(c).X.equals(X)
        ok &= cayley(-X).equals(c.inverse())
        ok &= cayley(X.theta()).equals(c.theta())
    return ok


def _suite_descent(t, rng, count=5):
    ok = True
    L = LatticePair(max(2, t.e), 2, t.e)
    for _ in range(count):
        k = sampling.random_congruence(rng, t, 2, L.m)
        g, h = descend(k, L)
        ok &= h.is_theta_fixed() and (g @ h @ g.theta().inverse()).equals(k)
    return ok


def _suite_d_factor(t, rng, count=5):
    ok = True
    for _ in range(count):
        g = sampling.random_tu_regular(rng, t, 2)
        ok &= normalizing_factor_twisted(TwistedElem(g)) == normalizing_factor_H(g)
    return ok


def _suite_n1_matching(t, rng, count=8):
    ok = True
    for m in (1, 2):
        for _ in range(count):
            g = MatrixE(t, [[sampling.random_scalar(rng, t)]])
            ok &= check_matching(g, m).verdict == "PASS"
    return ok


def selfcheck(inject_fault: bool = False, seed: int = 20240601) -> CampaignReport:
    rng = sampling.make_rng(seed)
    zeta = 2 if inject_fault else None
    towers = [make_tower(3, 2, 1, 10, zeta_override=zeta), make_tower(3, 1, 2, 10),
              make_tower(5, 2, 1, 10, zeta_override=zeta)]
    suites = [
        ("theta_order", lambda: all(_suite_theta_order(t, rng) for t in towers)),
        ("theta_fixed_level", lambda: _suite_theta_level(towers, rng)),
        ("cayley_identities", lambda: all(_suite_cayley(t, rng) for t in towers)),
        ("descent_reconstruction", lambda: all(_suite_descent(t, rng) for t in towers[1:])),
        ("d_factor_coherence", lambda: all(_suite_d_factor(t, rng) for t in towers)),
        ("n1_matching", lambda: all(_suite_n1_matching(t, rng) for t in towers)),
    ]
    records = []
    for i, (name, fn) in enumerate(suites):
        t0 = time.perf_counter()
        try:
            ok = bool(fn())
            err = None
        except BaseChangeError as exc:
            ok, err = False, f"{type(exc).__name__}: {exc}"
        rec = _record(i, "PASS" if ok else "FAIL", ms=0.0, suite=name)
        if err:
            rec["error"] = err
        rec["elapsed_s"] = round(time.perf_counter() - t0, 2)
        records.append(rec)
    summary = {"cases": len(records), "passed": sum(r["verdict"] == "PASS" for r in records),
               "failed": sum(r["verdict"] != "PASS" for r in records), "uncertified": 0,
               "max_depth": 0, "fault_injected": inject_fault, "version": __version__}
    return CampaignReport({"selfcheck_seed": seed}, records, summary)


# ---------------------------------------------------------------------------
# entry point

def _config_from_args(args, mode):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(mode=mode)
    over = {"mode": mode}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.depth is not None:
        over["depth"] = args.depth
    if args.out is not None:
        over["output_path"] = args.out
    return dataclasses.replace(cfg, **over)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="basechange", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("verify-matching", "descend", "orbital", "invariants"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON ExperimentConfig")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--out", help="JSON-lines output; summary.csv is written alongside")
        sp.add_argument("--trace", action="store_true", help="per-iteration trace on stderr")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--no-timing", action="store_true", help="zero timing fields for byte-stable output")
    sc = sub.add_parser("selfcheck")
    sc.add_argument("--out")
    sc.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return ap


_MODE = {"verify-matching": "matching", "descend": "descent", "orbital": "orbital",
         "invariants": "invariants"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selfcheck":
            rep = selfcheck(inject_fault=args.inject_fault)
            print("\n".join(f"{r['suite']:<24} {r['verdict']}  {r['elapsed_s']:>6.2f}s"
                            + (f"  {r['error']}" if 'error' in r else "") for r in rep.records))
            print(f"passed {rep.summary['passed']}/{rep.summary['cases']}")
        else:
            cfg = _config_from_args(args, _MODE[args.command])
            rep = run_experiment(cfg, workers=args.workers, trace=args.trace,
                                 timing=not args.no_timing)
            print(rep.table())
        out = getattr(args, "out", None) or (None if args.command == "selfcheck" else cfg.output_path)
        if out:
            rep.write(out)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
