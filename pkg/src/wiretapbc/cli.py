"""Command-line interface: ``wiretapbc <command> ...``.

Every command is a pure function of its input files, flags and seed. Data
payloads (CSV and JSON) never contain timestamps; each output file gets a
``<stem>.manifest.json`` companion that records the command, the resolved
parameters, the seed, the package version and the wall-clock time.

Exit codes: 0 ok, 2 parse error, 3 premise failure, 4 inadmissible
parameters, 5 cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, becbsc, ordering, regions
from .hull import RateRegion
from .probcore import CapExceededError, Dmc, JointPmf, ProbabilityError, WiretapBc
from .sim import DesignError, SimConfig, config_for_target, interior_point, simulate
from .sim.scheme import TRIAL_FIELDS

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PREMISE = 3
EXIT_INADMISSIBLE = 4
EXIT_CAP = 5

CSV_DIGITS = 12


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# input files


def _load_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {what} {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}: line {exc.lineno}, column {exc.colno}: "
                                   f"{exc.msg}") from exc


def channel_from_obj(obj, source: str = "<channel>") -> WiretapBc:
    """Build a WiretapBc from a parsed channel-file object."""
    if not isinstance(obj, dict):
        raise CliError(EXIT_PARSE, f"{source}: expected a JSON object")
    missing = [k for k in ("input_size", "y1", "y2", "z") if k not in obj]
    if missing:
        raise CliError(EXIT_PARSE, f"{source}: missing field(s) {', '.join(missing)}")
    k = obj["input_size"]
    if not isinstance(k, int) or k < 1:
        raise CliError(EXIT_PARSE, f"{source}: input_size must be a positive integer")
    chans = []
    for name in ("y1", "y2", "z"):
        rows = obj[name]
        if not isinstance(rows, list) or len(rows) != k:
            raise CliError(EXIT_PARSE, f"{source}: channel {name} must have {k} rows")
        try:
            chans.append(Dmc(np.array(rows, dtype=float)))
        except (ProbabilityError, ValueError, TypeError) as exc:
            raise CliError(EXIT_PARSE, f"{source}: channel {name}: {exc}") from exc
    return WiretapBc(*chans, name=str(obj.get("name", "")))


def load_channel(path: str) -> WiretapBc:
    return channel_from_obj(_load_json(path, "channel file"), path)


def channel_to_obj(ch: WiretapBc) -> dict:
    return {"input_size": ch.input_size, "y1": ch.ch_y1.rows.tolist(),
            "y2": ch.ch_y2.rows.tolist(), "z": ch.ch_z.rows.tolist(), "name": ch.name}


def _parse_cards(text: Optional[str]) -> Optional[Dict[str, int]]:
    if not text:
        return None
    out = {}
    for item in text.split(","):
        name, sep, val = item.partition("=")
        if not sep:
            raise CliError(EXIT_PARSE, f"bad --cards entry {item!r}; use NAME=INT")
        try:
            out[name.strip()] = int(val)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"bad cardinality in {item!r}") from exc
    return out


def _parse_ns(text: str) -> List[int]:
    try:
        ns = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"bad --sweep-n list {text!r}") from exc
    if not ns or min(ns) < 1:
        raise CliError(EXIT_PARSE, "--sweep-n needs positive blocklengths")
    return ns


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{CSV_DIGITS}g}"
    return str(v)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def manifest_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".manifest.json")


class Emitter:
    """Writes payload files plus one manifest per invocation."""

    def __init__(self, args: argparse.Namespace, command: str, params: dict):
        self.out = getattr(args, "out", None)
        self.command = command
        self.params = params
        self.seed = getattr(args, "seed", None)
        self.files: List[str] = []

    def write(self, text: str, path: Optional[str] = None) -> None:
        target = path or self.out
        if target is None:
            sys.stdout.write(text)
            return
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="") as fh:
            fh.write(text)
        self.files.append(os.path.basename(target))

    def sibling(self, suffix: str) -> Optional[str]:
        if self.out is None:
            return None
        p = Path(self.out)
        return str(p.with_name(p.stem + suffix))

    def finish(self) -> None:
        if self.out is None:
            return
        man = {"command": self.command, "parameters": self.params, "seed": self.seed,
               "version": __version__, "files": self.files,
               "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}
        manifest_path(self.out).write_text(json_text(man))


def region_rows(region: RateRegion):
    """Frontier vertices; an empty sampled union still contains the origin."""
    if not region.feasible:
        return [(0.0, 0.0, 0)]
    return [(float(r1), float(r2), i) for i, (r1, r2) in enumerate(region.hull)]


REGION_HEADER = ("r1_bits", "r2_bits", "vertex_index")


# ---------------------------------------------------------------------------
# ordering


PAIRS = {"y1z": ("ch_y1", "ch_z"), "y2z": ("ch_y2", "ch_z"), "y1y2": ("ch_y1", "ch_y2")}


def cmd_ordering(args) -> int:
    ch = load_channel(args.channel)
    a, b = (getattr(ch, n) for n in PAIRS[args.pair])
    reps = ordering.check_all(a, b, seed=args.seed, samples=args.samples, grid=args.grid)
    payload = {"pair": args.pair, "strongest": ordering.strongest_relation(reps),
               "checks": {k: r.to_dict() for k, r in reps.items()}}
    for name, r in reps.items():
        tag = " (sampled)" if r.sampled and r.holds != ordering.REFUTED else ""
        print(f"{name}: {r.holds}{tag}", file=sys.stderr if args.out is None else sys.stdout)
    em = Emitter(args, "ordering", {"channel": args.channel, "pair": args.pair,
                                    "samples": args.samples, "grid": args.grid})
    em.write(json_text(payload))
    em.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# region


def _auto_candidates(ch: WiretapBc, cards, budget, seed, refine):
    """(label, premise check, evaluator) triples tried in order by capacity-auto."""
    sw = ch.swap_users()
    kw = dict(cards=cards, budget=budget, seed=seed, refine_iters=refine, check_premises=False)
    return [
        ("deterministic", lambda: regions.premises_deterministic(ch),
         lambda: regions.capacity_deterministic(ch)),
        ("semi-deterministic", lambda: regions.premises_semidet(ch, seed),
         lambda: regions.capacity_semidet(ch, **kw)),
        ("semi-deterministic (users swapped)", lambda: regions.premises_semidet(sw, seed),
         lambda: regions.swap_region(regions.capacity_semidet(sw, **kw))),
        ("degraded", lambda: regions.premises_degraded(ch, seed),
         lambda: regions.capacity_degraded(ch, **kw)),
        ("degraded (users swapped)", lambda: regions.premises_degraded(sw, seed),
         lambda: regions.swap_region(regions.capacity_degraded(sw, **kw))),
        ("less-noisy", lambda: regions.premises_less_noisy(ch, seed),
         lambda: regions.capacity_less_noisy(ch, **kw)),
        ("less-noisy (users swapped)", lambda: regions.premises_less_noisy(sw, seed),
         lambda: regions.swap_region(regions.capacity_less_noisy(sw, **kw))),
    ]


def _swap_names(msg: str) -> str:
    """Rename Y1 <-> Y2 so messages about a swapped channel use the file's names."""
    return msg.replace("Y1", "\0").replace("Y2", "Y1").replace("\0", "Y2")


def capacity_auto(ch: WiretapBc, cards=None, budget=regions.DEFAULT_BUDGET, seed=0,
                  refine_iters=regions.DEFAULT_REFINE_ITERS):
    """Dispatch to the first specialised evaluator whose premises hold."""
    failures = {}
    for label, premises, evaluate in _auto_candidates(ch, cards, budget, seed, refine_iters):
        prem = premises()
        if not prem["failed"]:
            region = evaluate()
            region.meta["dispatched_to"] = label
            return region, label, failures
        failed = prem["failed"]
        if "swapped" in label:
            failed = [_swap_names(m) for m in failed]
        failures[label] = failed
    lines = [f"{k}: {'; '.join(v)}" for k, v in failures.items()]
    raise regions.PremiseError("no capacity theorem applies\n  " + "\n  ".join(lines),
                               [f"{k}: {x}" for k, v in failures.items() for x in v])


def cmd_region(args) -> int:
    ch = load_channel(args.channel)
    cards = _parse_cards(args.cards)
    params = {"channel": args.channel, "bound": args.bound, "cards": cards,
              "budget": args.budget, "refine_iters": args.refine_iters}
    if args.bound == "capacity-auto":
        region, label, _ = capacity_auto(ch, cards, args.budget, args.seed, args.refine_iters)
        params["dispatched_to"] = label
        print(f"capacity-auto: {label}", file=sys.stderr)
    else:
        region = regions.search_region(ch, bound=args.bound.replace("-", "_"),
                                       budget=args.budget, seed=args.seed,
                                       refine_iters=args.refine_iters, cards=cards)
    if not region.feasible:
        print(f"note: {region.meta.get('infeasible_reason', 'empty region')}; "
              "only the origin is achievable", file=sys.stderr)
    em = Emitter(args, "region", params)
    em.write(csv_text(REGION_HEADER, region_rows(region)))
    em.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# becbsc


def _becbsc_params(args) -> becbsc.BecBscParams:
    return becbsc.BecBscParams(args.e, args.p2, args.p)


def cmd_becbsc(args) -> int:
    params = {"action": args.action, "e": args.e, "p2": args.p2, "p": args.p,
              "points": args.points}
    em = Emitter(args, "becbsc", params)
    act = args.action
    if act == "curve":
        prm = _becbsc_params(args)
        x, r1, r2 = becbsc.secrecy_arrays(prm, args.points)
        _, s1, s2 = becbsc.standard_arrays(args.e, args.p2, args.points)
        em.write(csv_text(("x", "r1_secrecy", "r2_secrecy", "r1_std", "r2_std"),
                          zip(x, r1, r2, s1, s2)))
    elif act == "standard":
        x, s1, s2 = becbsc.standard_arrays(args.e, args.p2, args.points)
        em.write(csv_text(("x", "r1_std", "r2_std"), zip(x, s1, s2)))
    elif act == "figure7":
        params.update(p_min=args.p_min, p_max=args.p_max, n_p=args.n_p)
        blocks = becbsc.figure7_data(args.p2, args.p_min, args.p_max, args.n_p, args.points)
        rows = []
        for b in blocks:
            if b.warning:
                print(f"warning: p={b.p:.6g}: {b.warning}", file=sys.stderr)
            for s, t in zip(b.secrecy, b.standard):
                rows.append((b.p, s.x, s.r1, s.r2, t.r1, t.r2, b.admissibility.ok))
        em.write(csv_text(("p", "x", "r1_secrecy", "r2_secrecy", "r1_std", "r2_std",
                           "admissible"), rows))
    elif act == "verify-convexity":
        prm = _becbsc_params(args)
        adm = becbsc.admissible(prm)
        if not adm:
            raise becbsc.InadmissibleError(adm.reasons)
        rep = becbsc.verify_convexity(prm, args.points)
        em.write(json_text(rep.to_dict()))
    elif act == "verify-series":
        a = 1 - 2 * args.p if args.a is None else args.a
        a2 = 1 - 2 * args.p2 if args.a2 is None else args.a2
        params.update(a=a, a2=a2, k_max=args.k_max)
        rep = becbsc.verify_series(a, a2, args.e, args.k_max)
        d = rep.to_dict()
        d["summary"] = "all claims pass" if rep.passed else "some claims fail"
        em.write(json_text(d))
    em.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _default_aux(x_size: int) -> JointPmf:
    """Q = X uniform, U1 and U2 trivial: a single common layer."""
    t = np.zeros((x_size, 1, 1, x_size))
    for x in range(x_size):
        t[x, 0, 0, x] = 1.0 / x_size
    return JointPmf(("Q", "U1", "U2", "X"), t)


SIM_KEYS = {"channel", "channel_file", "aux", "n", "t", "r0_split", "rbar", "rtilde",
            "target", "trials", "seed", "delta_coefficient", "leakage_samples", "name"}


def config_from_obj(obj: dict, base: Path = Path(".")) -> SimConfig:
    """Build a SimConfig from a parsed simulation-config object.

    Either give the scheme rates directly (``t``, ``r0_split``, ``rbar``,
    ``rtilde``) or a ``target`` with ``r1``/``r2`` or ``fraction``/``lam``,
    in which case rates are designed by linear programming.
    """
    if not isinstance(obj, dict):
        raise CliError(EXIT_PARSE, "simulation config must be a JSON object")
    unknown = sorted(set(obj) - SIM_KEYS)
    if unknown:
        raise CliError(EXIT_PARSE, f"unknown config field(s): {', '.join(unknown)}")
    if "channel" in obj:
        ch = channel_from_obj(obj["channel"], "config.channel")
    elif "channel_file" in obj:
        ch = load_channel(str(base / obj["channel_file"]))
    else:
        raise CliError(EXIT_PARSE, "config needs 'channel' or 'channel_file'")
    try:
        if "aux" in obj:
            aux = JointPmf(tuple(obj["aux"]["axes"]), np.array(obj["aux"]["table"], dtype=float))
        else:
            aux = _default_aux(ch.input_size)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"bad aux law: {exc}") from exc
    if "n" not in obj:
        raise CliError(EXIT_PARSE, "config needs a blocklength 'n'")
    kw = {k: obj[k] for k in ("trials", "seed", "delta_coefficient", "leakage_samples")
          if k in obj}
    if "target" in obj:
        tgt = obj["target"]
        if "r1" in tgt or "r2" in tgt:
            r1, r2 = float(tgt.get("r1", 0.0)), float(tgt.get("r2", 0.0))
        else:
            r1, r2 = interior_point(ch, aux, float(tgt.get("fraction", 0.85)),
                                    float(tgt.get("lam", 1.0)))
        return config_for_target(ch, aux, int(obj["n"]), r1, r2, **kw)
    if "t" not in obj:
        raise CliError(EXIT_PARSE, "config needs either 't' (scheme rates) or 'target'")
    rates = {k: obj[k] for k in ("t", "r0_split", "rbar", "rtilde") if k in obj}
    return SimConfig(ch, aux, int(obj["n"]), **rates, **kw)


def cmd_simulate(args) -> int:
    obj = _load_json(args.config, "simulation config")
    base = Path(args.config).parent
    try:
        cfg = config_from_obj(obj, base)
    except (TypeError, KeyError) as exc:
        raise CliError(EXIT_PARSE, f"{args.config}: {exc}") from exc
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    ns = _parse_ns(args.sweep_n) if args.sweep_n else [cfg.n]
    configs = [cfg.with_n(n) if n != cfg.n else cfg for n in ns]  # caps checked up front
    results, trial_rows = [], []
    for c in configs:
        res, rows = simulate(c, leakage=not args.no_leakage)
        results.append((c, res))
        trial_rows.extend((c.n,) + tuple(r) for r in rows)
    args.seed = cfg.seed
    em = Emitter(args, "simulate", {"config": args.config, "config_object": obj,
                                    "sweep_n": ns, "leakage": not args.no_leakage})
    payload = {"channel": channel_to_obj(cfg.channel), "rates": list(cfg.rates),
               "results": [{"config": c.to_dict(), "result": r.to_dict()}
                           for c, r in results]}
    em.write(json_text(payload))
    trial_csv = csv_text(("n",) + TRIAL_FIELDS, trial_rows)
    if em.out is not None:
        em.write(trial_csv, em.sibling("_trials.csv"))
    if len(ns) > 1:
        sweep = [(r.n, r.pe1.value, r.pe1.low, r.pe1.high, r.pe2.value, r.pe2.low, r.pe2.high,
                  r.enc_fail_rate, _nan(r.leakage_rate), _nan(r.leakage_stderr))
                 for _, r in results]
        text = csv_text(("n", "pe1", "pe1_low", "pe1_high", "pe2", "pe2_low", "pe2_high",
                         "enc_fail_rate", "leakage_rate", "leakage_stderr"), sweep)
        if em.out is not None:
            em.write(text, em.sibling("_sweep.csv"))
        else:
            sys.stdout.write(text)
    em.finish()
    return EXIT_OK


def _nan(v):
    return float("nan") if v is None else v


# ---------------------------------------------------------------------------
# selftest


def cmd_selftest(args) -> int:
    from .selftest import all_passed, run_selftest

    results = run_selftest()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} ({r.seconds:.2f}s){'' if r.passed else ': ' + r.message}")
    ok = all_passed(results)
    failed = [r.name for r in results if not r.passed]
    print("selftest: all passed" if ok else f"selftest: failed: {', '.join(failed)}")
    return EXIT_OK if ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wiretapbc",
                                description="Secrecy rate regions of wiretap broadcast "
                                            "channels and a desk-scale scheme simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("ordering", help="degraded / less-noisy / more-capable checks")
    o.add_argument("channel", help="channel JSON file")
    o.add_argument("--pair", choices=sorted(PAIRS), default="y1z",
                   help="which pair to test; the second channel is the weaker candidate")
    o.add_argument("--samples", type=int, default=ordering.DEFAULT_SAMPLES)
    o.add_argument("--grid", type=int, default=ordering.DEFAULT_GRID)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", help="JSON report path (default: stdout)")
    o.set_defaults(func=cmd_ordering)

    r = sub.add_parser("region", help="evaluate or search a rate region")
    r.add_argument("channel", help="channel JSON file")
    r.add_argument("--bound", choices=("inner", "outer-cor", "outer-thm1", "capacity-auto"),
                   default="inner")
    r.add_argument("--cards", help="auxiliary cardinalities, e.g. Q=4,U1=2,U2=1")
    r.add_argument("--budget", type=int, default=regions.DEFAULT_BUDGET)
    r.add_argument("--refine-iters", type=int, default=regions.DEFAULT_REFINE_ITERS)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", help="CSV path (default: stdout)")
    r.set_defaults(func=cmd_region)

    b = sub.add_parser("becbsc", help="closed-form BEC/BSC example")
    b.add_argument("action", choices=("curve", "standard", "figure7", "verify-convexity",
                                      "verify-series"))
    b.add_argument("--e", type=float, default=0.2)
    b.add_argument("--p2", type=float, default=0.1)
    b.add_argument("--p", type=float, default=0.25)
    b.add_argument("--points", type=int, default=257, help="x grid size on [0, 1/2]")
    b.add_argument("--p-min", type=float, default=None, help="figure7 sweep start (default p2)")
    b.add_argument("--p-max", type=float, default=0.5)
    b.add_argument("--n-p", type=int, default=41)
    b.add_argument("--a", type=float, default=None, help="series: a (default 1 - 2p)")
    b.add_argument("--a2", type=float, default=None, help="series: a2 (default 1 - 2p2)")
    b.add_argument("--k-max", type=int, default=41)
    b.add_argument("--out", help="output path (default: stdout)")
    b.set_defaults(func=cmd_becbsc)

    s = sub.add_parser("simulate", help="Monte Carlo run of the binned superposition scheme")
    s.add_argument("config", help="simulation config JSON file")
    s.add_argument("--sweep-n", help="comma-separated blocklengths, e.g. 50,100,200")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--no-leakage", action="store_true", help="skip the leakage estimate")
    s.add_argument("--out", help="result JSON path; trial log and sweep CSVs go alongside")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("selftest", help="fast invariant suite")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "action", None) == "figure7" and args.p_min is None:
        args.p_min = args.p2
    try:
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except CapExceededError as exc:
        code, msg = EXIT_CAP, f"cap exceeded: {exc}"
    except regions.PremiseError as exc:
        code, msg = EXIT_PREMISE, f"premise failure: {exc}"
    except (becbsc.InadmissibleError, becbsc.ParameterError) as exc:
        code, msg = EXIT_INADMISSIBLE, str(exc)
    except (ProbabilityError, DesignError, ValueError) as exc:
        code, msg = EXIT_PARSE, str(exc)
    print(f"wiretapbc: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
