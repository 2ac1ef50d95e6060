"""Command-line front end.

Exit status: 0 pass, 1 verdict failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import io
import itertools
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .infoverify import (
    BudgetExceeded,
    Config,
    key_isolation_check,
    measure_load,
    privacy_check,
    verify_decode_all,
)
from .model import ConfigError, DemandVector, InstanceParams, Library, blocked_sets, format_subset, parse_demands, window
from .privatizer import (
    DecodeError,
    expected_memory,
    generate_keys,
    private_deliver,
    private_place,
    user_decode,
)
from .schemes import SCHEMES, check_requirement1, check_requirement2, get_scheme, load_fixture
from .tradeoff import write_csv

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_DEMAND_VECTORS = 10**6


def frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class RunConfig:
    K: int
    L: int
    N: int
    B: int | None
    scheme: str
    privatize: bool
    mode: str
    demands: str
    seed: int

    def params(self) -> InstanceParams:
        base = get_scheme(self.scheme)
        probe = InstanceParams(self.K, self.L, self.N, 1)
        B = self.B if self.B is not None else base.granularity(probe)
        params = InstanceParams(self.K, self.L, self.N, B)
        base.validate(params)
        return params

    def resolved_mode(self, params: InstanceParams) -> str:
        if not self.privatize:
            return "none"
        if self.mode == "auto":
            return "pad" if params.pad_mode_allowed else "share"
        if self.mode == "pad" and not params.pad_mode_allowed:
            raise ConfigError(f"pad mode needs L < K/2 + 1 (K={params.K}, L={params.L}); use --mode share")
        return self.mode

    def demand_list(self, params: InstanceParams) -> list[DemandVector]:
        if self.demands == "all":
            count = params.N**params.K
            if count > MAX_DEMAND_VECTORS:
                raise ConfigError(f"'all' would enumerate {count} demand vectors (cap {MAX_DEMAND_VECTORS})")
            return [DemandVector(d) for d in itertools.product(range(1, params.N + 1), repeat=params.K)]
        try:
            return [parse_demands(self.demands).validate(params)]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        args.k, args.l, args.n, args.b, args.scheme, args.privatize, args.mode, args.demands, args.seed
    )


# ---------- simulate


def cmd_simulate(cfg: RunConfig) -> tuple[dict, int]:
    params = cfg.params()
    mode = cfg.resolved_mode(params)
    base = get_scheme(cfg.scheme)
    demands = cfg.demand_list(params)
    library = Library.random(params.N, params.B, random.Random(f"{cfg.seed}/library"))
    keys = generate_keys(base, params, cfg.seed, mode)
    placement = private_place(base, params, library, keys)
    runs = []
    ok = True
    for d in demands:
        bc = private_deliver(base, params, library, d, keys)
        load, header = measure_load(bc, params.B)
        failed = []
        for k in params.users:
            try:
                got = user_decode(k, bc, placement.view(k, params), d[k], base, params, keys.layout)
            except DecodeError as exc:
                failed.append({"user": k, "error": str(exc)})
                continue
            if got != library.file(d[k]):
                failed.append({"user": k, "error": "decoded file differs from library"})
        ok &= not failed
        runs.append({"demands": list(d), "payload_load": frac(load), "header_bits": header,
                     "packets": len(bc.packets), "decode": "OK" if not failed else "FAIL", "failures": failed})
    report = {
        "command": "simulate",
        "config": {"scheme": base.name, "K": params.K, "L": params.L, "N": params.N, "B": params.B,
                   "mode": mode, "omega": keys.omega, "seed": cfg.seed},
        "memory_per_node": {str(i): frac(placement.memory(i)) for i in params.users},
        "expected_memory": frac(expected_memory(base, params, mode)),
        "runs": runs,
        "verdict": "pass" if ok else "fail",
    }
    return report, EXIT_PASS if ok else EXIT_FAIL


def format_simulate(report: dict) -> str:
    c = report["config"]
    lines = [
        f"config: scheme={c['scheme']} K={c['K']} L={c['L']} N={c['N']} B={c['B']} mode={c['mode']} "
        f"omega={c['omega']} seed={c['seed']}",
        "memory per node: " + " ".join(f"C{i}={m}" for i, m in report["memory_per_node"].items())
        + f" (expected {report['expected_memory']})",
    ]
    for run in report["runs"]:
        d = ",".join(map(str, run["demands"]))
        lines.append(
            f"demands {d}: payload {run['payload_load']} packets {run['packets']} "
            f"header {run['header_bits']} bits decode {run['decode']}"
        )
        for f in run["failures"]:
            lines.append(f"  user {f['user']}: {f['error']}")
    lines.append(f"verdict: {report['verdict'].upper()}")
    return "\n".join(lines)


# ---------- verify


def cmd_verify(cfg: RunConfig, check: str, seeds: int = 1, budget: int | None = None,
               fixture: str | None = None) -> tuple[dict, int]:
    report: dict = {"command": "verify", "check": check}
    if check == "requirements":
        if fixture:
            fx = load_fixture(fixture)
            params, target = fx.params, fx
        else:
            params = cfg.params()
            target = get_scheme(cfg.scheme)
        r1, r2 = check_requirement1(target, params), check_requirement2(target, params)
        report.update({
            "config": {"source": fixture or cfg.scheme, "K": params.K, "L": params.L, "N": params.N},
            "requirement1": {"passed": r1.passed, "witness": r1.witness, "detail": r1.detail},
            "requirement2": {"passed": r2.passed, "witness": r2.witness, "detail": r2.detail},
        })
        ok = r1.passed and r2.passed
    elif check == "isolation":
        params = InstanceParams(cfg.K, cfg.L, cfg.N, 1)
        mode = cfg.mode if cfg.mode != "auto" else ("pad" if params.pad_mode_allowed else "share")
        res = key_isolation_check(params, mode)
        report.update({"config": {"K": params.K, "L": params.L, "mode": mode}, **res})
        ok = res["passed"]
    else:
        params = cfg.params()
        mode = cfg.resolved_mode(params)
        config = Config(get_scheme(cfg.scheme), params, mode)
        if check == "decode":
            res = verify_decode_all(config, list(range(cfg.seed, cfg.seed + seeds)))
            report.update({"config": res.config, "checked": res.checked, "failures": res.failures})
            ok = res.passed
        elif check == "privacy":
            kwargs = {} if budget is None else {"budget": budget}
            res = privacy_check(config, **kwargs)
            report.update({
                "config": res.config, "backend": res.backend, "evaluations": res.evaluations,
                "observers": {str(k): v for k, v in res.observers.items()},
                "placement_independence": {str(k): v for k, v in res.placement.items()},
            })
            ok = res.passed
        else:
            raise ConfigError(f"unknown check {check!r}")
    report["verdict"] = "pass" if ok else "fail"
    return report, EXIT_PASS if ok else EXIT_FAIL


def format_verify(report: dict) -> str:
    lines = [f"check: {report['check']}", f"config: {json.dumps(report.get('config'))}"]
    if report["check"] == "privacy":
        lines.append(f"enumerated {report['evaluations']} cells ({report['backend']} kernel)")
        for k, o in report["observers"].items():
            p = report["placement_independence"][k]
            lines.append(f"observer {k}: MI = {o['mutual_information']} "
                         f"({'private' if o['private'] else 'LEAKS'}); placement MI = {p['mutual_information']}")
    elif report["check"] == "decode":
        lines.append(f"decodes checked: {report['checked']}, failures: {len(report['failures'])}")
        lines.extend(f"  {json.dumps(f)}" for f in report["failures"][:10])
    elif report["check"] == "requirements":
        for name in ("requirement1", "requirement2"):
            r = report[name]
            lines.append(f"{name}: {'pass' if r['passed'] else 'FAIL ' + r['detail']}")
    else:
        lines.append(f"witness: {json.dumps(report.get('witness'))}")
    lines.append(f"verdict: {report['verdict'].upper()}")
    return "\n".join(lines)


# ---------- demo


def cmd_demo(seed: int = 7, bits_per_part: int = 2) -> str:
    """Transcript of the (K, L, N) = (3, 2, 3) private instance with demands (1, 2, 3)."""
    base = get_scheme("singleton")
    params = InstanceParams(3, 2, 3, 3 * bits_per_part)
    library = Library.random(params.N, params.B, random.Random(f"{seed}/library"))
    keys = generate_keys(base, params, seed, "pad")
    placement = private_place(base, params, library, keys)
    partition = base.partition(params)
    out = io.StringIO()

    def w(line: str = "") -> None:
        out.write(line + "\n")

    w(f"instance (K, L, N) = (3, 2, 3), singleton base, pad mode, B = {params.B}, seed = {seed}")
    for k in params.users:
        nodes = ", ".join(f"C{i}" for i in window(k, params))
        t = ", ".join(format_subset(q) for q in blocked_sets(k, partition, params))
        w(f"U{k}: window {{{nodes}}}; T{k} = {{{t}}}")
    w()
    w("placement")
    for i in params.users:
        node = placement.nodes[i]
        lib = ", ".join(f"W_n,{format_subset(q)}" for q in node.labels)
        items = []
        for label in node.keys:
            kind, k, q = label[0], label[1], label[2]
            items.append(f"S_{k},{format_subset(q)} xor A_{k},{format_subset(q)}" if kind == "mask"
                         else f"A_{k},{format_subset(q)}")
        w(f"C{i}: {lib} for n in [3]; P{i} = {{{', '.join(items)}}}; memory {frac(placement.memory(i))}")
    w()
    for n in range(1, params.N + 1):
        w(f"W{n} = {library.file(n)}")
    for k in params.users:
        w(f"p{k} = {''.join(map(str, keys.p_vector(k)))}")
    w()
    d = DemandVector((1, 2, 3))
    bc = private_deliver(base, params, library, d, keys)
    load, header = measure_load(bc, params.B)
    w(f"delivery for d = ({d})")
    w("header: " + " ".join(f"q{k}={''.join(map(str, q))}" for k, q in zip(params.users, bc.header)))
    for p in bc.packets:
        w(f"packet recipe {p.describe()} payload {p.payload}")
    w(f"payload load {frac(load)} files, header {header} bits")
    w()
    w("decoding")
    for k in params.users:
        view = placement.view(k, params)
        got = user_decode(k, bc, view, d[k], base, params, keys.layout)
        for q in blocked_sets(k, partition, params):
            items = {}
            for node in view.values():
                items.update(node.keys)
            key = items[("mask", k, q)] ^ items[("pad", k, q)]
            w(f"U{k}: S_{k},{format_subset(q)} = {key} from C{k} and C{window(k, params)[-1]}; "
              f"W_{d[k]},{format_subset(q)} = {partition.subfile(got, q)}")
        w(f"U{k}: decoded W{d[k]} = {got} {'OK' if got == library.file(d[k]) else 'MISMATCH'}")
    return out.getvalue()


def cmd_tradeoff(K: int, L: int, N: int, which: str, out: str | None) -> str | None:
    if out is None:
        buf = io.StringIO()
        write_csv(buf, K, L, N, which)
        return buf.getvalue()
    with open(out, "w", newline="") as fh:
        write_csv(fh, K, L, N, which)
    return None


# ---------- argument parsing


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file whose keys mirror the long flags")
    p.add_argument("--k", type=int, default=3, help="number of cache-nodes and users")
    p.add_argument("--l", type=int, default=2, help="cache-nodes per user")
    p.add_argument("--n", type=int, default=3, help="number of files")
    p.add_argument("--b", type=int, default=None, help="file size in bits (default: one bit per part)")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="singleton")
    p.add_argument("--privatize", action="store_true", help="apply the demand-private transformation")
    p.add_argument("--mode", choices=["auto", "pad", "share"], default="auto")
    p.add_argument("--demands", default="all", help="comma list such as 1,2,3, or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privcache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="place, deliver and decode one configuration")
    _add_instance_args(sim)

    ver = sub.add_parser("verify", help="run an exhaustive oracle")
    _add_instance_args(ver)
    ver.add_argument("--check", choices=["decode", "privacy", "requirements", "isolation"], required=True)
    ver.add_argument("--seeds", type=int, default=1, help="libraries to sample for --check decode")
    ver.add_argument("--budget", type=int, default=None, help="maximum enumeration cells for --check privacy")
    ver.add_argument("--fixture", help="placement fixture file for --check requirements")

    tr = sub.add_parser("tradeoff", help="emit memory-load points as CSV")
    tr.add_argument("--config")
    tr.add_argument("--k", type=int, required=True)
    tr.add_argument("--l", type=int, required=True)
    tr.add_argument("--n", type=int, required=True)
    tr.add_argument("--which", choices=["nonprivate", "private", "both"], default="both")
    tr.add_argument("--out")
    tr.add_argument("--seed", type=int, default=0, help="accepted for uniformity; output is deterministic")

    demo = sub.add_parser("demo", help="print the worked K=3, L=2, N=3 transcript")
    demo.add_argument("--seed", type=int, default=7)
    demo.add_argument("--out")
    return parser


def _parse(parser: argparse.ArgumentParser, argv: list[str] | None) -> argparse.Namespace:
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        overrides = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {path}: {exc}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest for a in subparser._actions}  # noqa: SLF001
    unknown = set(overrides) - known
    if unknown:
        parser.error(f"unknown config keys {sorted(unknown)}")
    subparser.set_defaults(**overrides)
    return parser.parse_args(argv)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = _parse(parser, argv)
    try:
        if args.command == "tradeoff":
            text = cmd_tradeoff(args.k, args.l, args.n, args.which, args.out)
            if text is not None:
                sys.stdout.write(text)
            return EXIT_PASS
        if args.command == "demo":
            _emit(cmd_demo(args.seed).rstrip("\n"), args.out)
            return EXIT_PASS
        cfg = _run_config(args)
        if args.command == "simulate":
            report, code = cmd_simulate(cfg)
            text = json.dumps(report, indent=2) if args.json else format_simulate(report)
        else:
            report, code = cmd_verify(cfg, args.check, args.seeds, args.budget, args.fixture)
            text = json.dumps(report, indent=2) if args.json else format_verify(report)
        _emit(text, args.out)
        return code
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
