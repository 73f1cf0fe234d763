"""Command line interface: ``capit verify | enumerate | search | cohomology``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from dataclasses import dataclass

from capit import __version__
from capit.abgroup import FiniteAbelianGroup
from capit.census import census
from capit.cohomology import (
    CohomologyError,
    GModule,
    cohomology,
    enumerate_extensions,
)
from capit.extension import (
    ExtensionError,
    ExtensionGroup,
    GAction,
    InvalidCocycle,
    TwoCocycle,
    log_is_isomorphism,
)
from capit.transfer import (
    check_principal_ideal,
    divisibility_over_intermediates,
    find_gammas,
    lemma_b_holds,
    miyake_criterion,
    over_derived,
    tannaka_terada_check,
    transfer,
    transfer_kernel,
    transfer_via_trace,
)

TOOL = "capit"
DEFAULT_MAX_ORDER = 64
ALL_CHECKS = (
    "cocycle",
    "log_isomorphism",
    "lemma_a",
    "lemma_b",
    "principal_ideal",
    "divisibility",
    "miyake",
    "tannaka_terada",
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ExtensionSpec:
    g_invariants: tuple[int, ...]
    a_invariants: tuple[int, ...]
    action: tuple
    cocycle: tuple

    def build(self) -> ExtensionGroup:
        g = FiniteAbelianGroup(self.g_invariants)
        a = FiniteAbelianGroup(self.a_invariants)
        act = GAction(g, a, [list(map(list, m)) for m in self.action])
        table = {(s, t): v for s, t, v in self.cocycle}
        return ExtensionGroup(TwoCocycle(act, table))

    def to_json(self) -> dict:
        return {
            "g_invariants": list(self.g_invariants),
            "a_invariants": list(self.a_invariants),
            "action": [[list(r) for r in m] for m in self.action],
            "cocycle": [[list(s), list(t), list(v)] for s, t, v in self.cocycle],
        }


def spec_from_extension(ext: ExtensionGroup) -> ExtensionSpec:
    return ExtensionSpec(
        g_invariants=ext.G.invariants,
        a_invariants=ext.A.invariants,
        action=tuple(tuple(tuple(r) for r in m) for m in ext.action.matrices),
        cocycle=tuple(ext.cocycle.entries()),
    )


def serialize(spec: ExtensionSpec, compact: bool = False) -> str:
    if compact:
        return json.dumps(spec.to_json(), sort_keys=True, separators=(",", ":"))
    return json.dumps(spec.to_json(), sort_keys=True, indent=2) + "\n"


def _key_position(text: str, key: str) -> tuple[int, int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return 1, 1
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def _int_list(value, key, text) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise ParseError(f"{key} must be a list of integers", *_key_position(text, key))
    return tuple(value)


def parse_spec(text: str) -> ExtensionSpec:
    """Parse and validate an extension spec; errors carry line and column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    for key in ("g_invariants", "a_invariants"):
        if key not in data:
            raise ParseError(f"missing key {key!r}")
    unknown = sorted(set(data) - {"g_invariants", "a_invariants", "action", "cocycle"})
    if unknown:
        raise ParseError(f"unknown key {unknown[0]!r}", *_key_position(text, unknown[0]))
    try:
        g = FiniteAbelianGroup(_int_list(data["g_invariants"], "g_invariants", text))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), *_key_position(text, "g_invariants")) from None
    try:
        a = FiniteAbelianGroup(_int_list(data["a_invariants"], "a_invariants", text))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), *_key_position(text, "a_invariants")) from None
    pos = _key_position(text, "action")
    raw_action = data.get("action")
    try:
        if raw_action is None:
            action = GAction.trivial(g, a)
        else:
            action = GAction(g, a, raw_action)
    except (ExtensionError, ValueError, TypeError) as exc:
        raise ParseError(f"invalid action: {exc}", *pos) from None
    pos = _key_position(text, "cocycle")
    table = {}
    raw = data.get("cocycle", [])
    if not isinstance(raw, list):
        raise ParseError("cocycle must be a list of triples", *pos)
    for n, entry in enumerate(raw):
        if not (isinstance(entry, list) and len(entry) == 3 and all(isinstance(p, list) for p in entry)):
            raise ParseError(f"cocycle entry {n} is not a triple of coordinate lists", *pos)
        s, t, v = entry
        if len(s) != g.rank or len(t) != g.rank or len(v) != a.rank:
            raise ParseError(f"cocycle entry {n} has wrong coordinate lengths", *pos)
        try:
            key = (g.check(s), g.check(t))
        except ValueError as exc:
            raise ParseError(f"cocycle entry {n}: {exc}", *pos) from None
        if key in table:
            raise ParseError(f"cocycle entry {n} repeats ({s}, {t})", *pos)
        table[key] = a.reduce(v)
    try:
        coc = TwoCocycle(action, table)
    except InvalidCocycle as exc:
        raise ParseError(str(exc), *pos) from None
    return ExtensionSpec(
        g_invariants=g.invariants,
        a_invariants=a.invariants,
        action=tuple(tuple(tuple(r) for r in m) for m in action.matrices),
        cocycle=tuple(coc.entries()),
    )


def _dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _check(name, ok, payload=None):
    status = "skip" if ok is None else ("pass" if ok else "fail")
    return {"name": name, "status": status, "payload": payload if payload is not None else {}}


def run_checks(ext: ExtensionGroup, checks, seed: int = 0) -> list[dict]:
    out = []
    for name in checks:
        if name == "cocycle":
            out.append(_check(name, True, {"nonzero_entries": len(ext.cocycle.values)}))
        elif name == "log_isomorphism":
            out.append(
                _check(name, log_is_isomorphism(ext), {"abelianization": list(ext.abelianization.group.invariants)})
            )
        elif name == "lemma_a":
            bad = [x for x in ext.element_list if transfer(ext, x) != transfer_via_trace(ext, x)]
            out.append(_check(name, not bad, {"elements": ext.order, "mismatches": len(bad)}))
        elif name == "lemma_b":
            out.append(_check(name, lemma_b_holds(ext), {"index_a_derived": ext.A.order // len(ext.derived_set)}))
        elif name == "principal_ideal":
            ok = check_principal_ideal(ext)
            _, rep = transfer_kernel(over_derived(ext))
            out.append(_check(name, ok, {"kernel_invariants": list(rep.kernel_invariants)}))
        elif name == "divisibility":
            _, rep = transfer_kernel(ext)
            inter = divisibility_over_intermediates(ext)
            ok = rep.divisible and rep.methods_agree and all(r["divisible"] and r["methods_agree"] for r in inter)
            payload = rep.as_dict()
            payload.pop("extension")
            payload["intermediates"] = inter
            out.append(_check(name, ok, payload))
        elif name == "miyake":
            res = miyake_criterion(ext, seed=seed)
            out.append(_check(name, res.ok, res.as_dict()))
        elif name == "tannaka_terada":
            gammas = find_gammas(ext, seed=seed)
            if not gammas:
                out.append(_check(name, None, {"gammas": 0}))
            else:
                ok = all(tannaka_terada_check(ext, g) for g in gammas)
                out.append(_check(name, ok, {"gammas": len(gammas)}))
        else:
            raise ValueError(f"unknown check {name!r}")
    return out


def _report(command: str, digest: str, checks: list[dict], extra: dict | None = None) -> dict:
    rep = {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "input_sha256": digest,
        "checks": checks,
        "status": "fail" if any(c["status"] == "fail" for c in checks) else "pass",
    }
    if extra:
        rep.update(extra)
    return rep


def _text(report: dict) -> str:
    lines = [f"{report['tool']} {report['version']} {report['command']} {report['status']}"]
    for c in report["checks"]:
        summary = ", ".join(f"{k}={v}" for k, v in sorted(c["payload"].items()) if not isinstance(v, (list, dict)))
        lines.append(f"  {c['name']}: {c['status']}" + (f" ({summary})" if summary else ""))
    return "\n".join(lines) + "\n"


def _emit(report: dict, fmt: str):
    sys.stdout.write(_dump(report) if fmt == "json" else _text(report))


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def cmd_verify(args) -> int:
    data = _read(args.file)
    spec = parse_spec(data.decode("utf-8"))
    ext = spec.build()
    checks = [c.strip() for c in args.checks.split(",")] if args.checks else list(ALL_CHECKS)
    for c in checks:
        if c not in ALL_CHECKS:
            raise ParseError(f"unknown check {c!r}")
    report = _report("verify", _sha(data), run_checks(ext, checks, seed=args.seed), {"seed": args.seed})
    _emit(report, args.format)
    return 0 if report["status"] == "pass" else 1


def _parse_invariants(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return FiniteAbelianGroup.from_orders(int(x) for x in text.split(",")).invariants
    except ValueError as exc:
        raise ParseError(f"bad invariants {text!r}: {exc}") from None


def _action_from(args, g, a) -> GAction:
    if not args.action:
        return GAction.trivial(g, a)
    text = _read(args.action).decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    mats = data.get("action") if isinstance(data, dict) else data
    try:
        return GAction(g, a, mats)
    except (ExtensionError, ValueError, TypeError) as exc:
        raise ParseError(f"invalid action: {exc}", *_key_position(text, "action")) from None


def cmd_enumerate(args) -> int:
    g = FiniteAbelianGroup(_parse_invariants(args.g))
    a = FiniteAbelianGroup(_parse_invariants(args.a))
    action = _action_from(args, g, a)
    for ext in enumerate_extensions(action, cap=args.max_classes, seed=args.seed):
        sys.stdout.write(serialize(spec_from_extension(ext), compact=True) + "\n")
    return 0


def max_order_cap() -> int:
    raw = os.environ.get("CAPIT_MAX_ORDER")
    return int(raw) if raw else DEFAULT_MAX_ORDER


def search(max_order: int, class_cap: int = 16, seed: int = 0) -> dict:
    cap = max_order_cap()
    if max_order > cap:
        raise CapExceeded(f"max order {max_order} exceeds the cap {cap} (set CAPIT_MAX_ORDER)")
    instances = 0
    pairs = 0
    violations = []
    for inst in census(max_order, class_cap=class_cap, seed=seed):
        instances += 1
        for row in divisibility_over_intermediates(inst.ext):
            pairs += 1
            if not (row["divisible"] and row["methods_agree"]):
                violations.append({"instance": inst.key, **row})
    violations.sort(key=lambda v: (v["instance"], v["a_prime"]))
    return {"instances": instances, "subgroup_pairs": pairs, "violations": violations}


def cmd_search(args) -> int:
    payload = search(args.max_order, class_cap=args.class_cap, seed=args.seed)
    digest = _sha(json.dumps({"max_order": args.max_order, "class_cap": args.class_cap, "seed": args.seed}).encode())
    report = _report("search", digest, [_check("divisibility", not payload["violations"], payload)])
    _emit(report, args.format)
    return 0 if report["status"] == "pass" else 1


def cmd_cohomology(args) -> int:
    if args.file:
        data = _read(args.file)
        spec = parse_spec(data.decode("utf-8"))
        g = FiniteAbelianGroup(spec.g_invariants)
        m = FiniteAbelianGroup(spec.a_invariants)
        action = GAction(g, m, [list(map(list, x)) for x in spec.action])
        digest = _sha(data)
    else:
        g = FiniteAbelianGroup(_parse_invariants(args.g or ""))
        m = FiniteAbelianGroup(_parse_invariants(args.m or ""))
        action = _action_from(args, g, m)
        digest = _sha(json.dumps({"g": list(g.invariants), "m": list(m.invariants), "action": action.matrices}).encode())
    res = cohomology(GModule(action), args.n)
    payload = {"degree": args.n, "invariants": list(res.invariants), "order": res.order}
    if args.representatives:
        payload["representatives"] = [
            [[[list(x) for x in key], list(val)] for key, val in sorted(rep.items())] for rep in res.representatives
        ]
    report = _report("cohomology", digest, [_check("cohomology", True, payload)])
    _emit(report, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=TOOL, description="Transfer kernels and cohomology of small metabelian groups.")
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run checks on one extension spec")
    v.add_argument("file")
    v.add_argument("--checks", help="comma-separated subset of: " + ",".join(ALL_CHECKS))
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("enumerate", help="one spec per class of H^2(G, A), as JSON lines")
    e.add_argument("--g", required=True, help="invariants of G, e.g. 2,2")
    e.add_argument("--a", required=True, help="invariants of A")
    e.add_argument("--action", help="JSON file with an 'action' list of matrices")
    e.add_argument("--max-classes", type=int, default=None)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("search", help="look for divisibility violations over the census")
    s.add_argument("--max-order", type=int, required=True)
    s.add_argument("--class-cap", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("json", "text"), default="json")
    s.set_defaults(func=cmd_search)

    c = sub.add_parser("cohomology", help="H^n(G, M) for n = 0, 1, 2")
    c.add_argument("--file", help="extension spec; its A is used as the module")
    c.add_argument("--g")
    c.add_argument("--m")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--action")
    c.add_argument("--representatives", action="store_true")
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.set_defaults(func=cmd_cohomology)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        where = getattr(args, "file", None) or getattr(args, "action", None) or "<input>"
        sys.stderr.write(f"{where}:{exc.line}:{exc.column}: {exc.message}\n")
        return 2
    except (CapExceeded, CohomologyError, ExtensionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
