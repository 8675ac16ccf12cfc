"""Command-line front end.

Exit codes: 0 success or Permit, 1 Deny/NotApplicable/Indeterminate or a
failed aggregation, 2 bad input, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .engine import evaluate
from .errors import AbucError
from .model import Outcome, Policy, Vocabulary, normalize_conjunct
from .oracle import DEFAULT_CAP, FiniteUniverse, check_cover, check_intersection, partition
from .ratification import (
    AggregationResult,
    ConflictKind,
    CSPState,
    aggregate_csp,
    intersect_policies,
    relation_matrix,
    rule_similarity,
)
from .recommend import rank
from .session import SessionLedger, augment_request
from .syntax import (
    format_value,
    parse_grid,
    parse_policy,
    parse_request,
    parse_vocabulary,
    serialize_policy,
    serialize_request,
)
from .syntax.printer import format_obligation, format_predicate

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line input that is not a parse or validation error."""


class Out:
    """Collects text lines or a JSON document and writes exactly one of them."""

    def __init__(self, fmt: str) -> None:
        self.fmt = fmt
        self.lines: list[str] = []
        self.doc: dict = {}

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def flush(self) -> None:
        if self.fmt == "json":
            sys.stdout.write(json.dumps(self.doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        elif self.lines:
            sys.stdout.write("\n".join(self.lines) + "\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None


def _vocab(path: str) -> Vocabulary:
    return parse_vocabulary(_read(path), file=path)


def _policy(path: str, v: Vocabulary) -> Policy:
    return parse_policy(_read(path), v, file=path)


# -- validate -------------------------------------------------------------------------


def cmd_validate(args, out: Out) -> int:
    v = _vocab(args.vocab)
    results = []
    status = EXIT_OK
    for path in args.files:
        try:
            text = _read(path)
            if path.endswith(".ucr"):
                parse_request(text, v, file=path)
            else:
                parse_policy(text, v, file=path)
            results.append({"file": path, "ok": True})
            out.line(f"OK {path}")
        except (AbucError, InputError) as e:
            status = EXIT_INPUT
            entry = {"file": path, "ok": False, "error": type(e).__name__, "message": str(e)}
            span = getattr(e, "span", None)
            if span is not None:
                entry["span"] = str(span)
            results.append(entry)
            out.line(f"ERROR {path}: {type(e).__name__}: {e}")
    out.doc = {"command": "validate", "results": results}
    return status


# -- eval -------------------------------------------------------------------------------


def decision_json(d) -> dict:
    return {
        "outcome": d.outcome.value,
        "granted_rights": sorted(d.granted_rights),
        "obligations": [format_obligation(o) for o in d.obligations],
        "restrictions": [format_predicate(p) for p in d.restrictions],
        "decision_time": d.decision_time,
        "trace": [
            {"rule": x.rule_id, "verdict": str(x), "missing": list(x.missing), "obligation_conflict": x.conflict}
            for x in d.trace
        ],
    }


def cmd_eval(args, out: Out) -> int:
    v = _vocab(args.vocab)
    p = _policy(args.policy, v)
    q = parse_request(_read(args.request), v, file=args.request)
    ledger = SessionLedger(args.ledger) if args.ledger else None
    if ledger is not None:
        q = augment_request(q, ledger, v)
    d = evaluate(p, q, v, flatten=args.flatten)
    if ledger is not None and args.record:
        recorded = d if d.outcome in (Outcome.PERMIT, Outcome.DENY) else evaluate(p, q, v, flatten=True)
        ledger.record_decision(recorded, q.subject, q.object)
    out.doc = {"command": "eval", **decision_json(d)}
    out.line(f"outcome: {d.outcome.value}")
    out.line(f"granted rights: {', '.join(sorted(d.granted_rights)) or '-'}")
    out.line(f"obligations: {'; '.join(format_obligation(o) for o in d.obligations) or '-'}")
    out.line(f"restrictions: {'; '.join(format_predicate(x) for x in d.restrictions) or '-'}")
    out.line(f"decision time: {d.decision_time}")
    out.line("trace:")
    for x in d.trace:
        extra = f" missing {', '.join(x.missing)}" if x.missing else ""
        extra += " (obligation conflict)" if x.conflict else ""
        out.line(f"  {x.rule_id}: {x}{extra}")
    return EXIT_OK if d.outcome is Outcome.PERMIT else EXIT_NEGATIVE


# -- aggregate --------------------------------------------------------------------------


def load_csp(directory: str, v: Vocabulary) -> CSPState:
    base = Path(directory)
    meta = json.loads(_read(str(base / "csp.json")))
    rop = _policy(str(base / meta["rop"]), v) if meta.get("rop") else None
    qop = _policy(str(base / meta["qop"]), v) if meta.get("qop") else None
    return CSPState(rop, qop, tuple(meta.get("members", [])))


def save_csp(directory: str, state: CSPState, reports: list[dict], notes: list[str]) -> None:
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    meta = {"members": list(state.members), "rop": None, "qop": None}
    for side, policy in (("rop", state.rop), ("qop", state.qop)):
        target = base / f"{side}_csp.ucp"
        if policy is not None:
            target.write_text(serialize_policy(policy), encoding="utf-8")
            meta[side] = target.name
        elif target.exists():
            target.unlink()
    (base / "csp.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    doc = {"reports": reports, "notes": notes}
    (base / "conflicts.json").write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_aggregate(args, out: Out) -> int:
    v = _vocab(args.vocab)
    state = load_csp(args.csp, v) if args.csp else CSPState()
    all_reports: list[dict] = []
    notes: list[str] = []
    folds = []
    any_failed = mismatch = False
    for partner, rop_path, qop_path in args.partner:
        rop = _policy(rop_path, v)
        qop = _policy(qop_path, v) if qop_path != "-" else None
        res = aggregate_csp(state, partner, rop, qop, v)
        reports = [dict(r.to_json(), partner=partner) for r in res.reports]
        all_reports.extend(reports)
        notes.extend(res.notes)
        folds.append({"partner": partner, "failed": res.failed})
        out.line(f"{partner}: {'FAILED' if res.failed else 'ok'}")
        for r in reports:
            ids = ", ".join(x["id"] for x in r["rules"] if x["id"])
            out.line(f"  {r['kind']}: {ids}" + (f" [{'; '.join(r['witness'])}]" if r["witness"] else ""))
        for n in res.notes:
            out.line(f"  note: {n}")
        any_failed |= res.failed
        mismatch |= any(r.kind is ConflictKind.VOCABULARY for r in res.reports)
        state = res.state
    if args.out:
        save_csp(args.out, state, all_reports, notes)
        out.line(f"wrote {args.out}")
    out.doc = {"command": "aggregate", "folds": folds, "reports": all_reports, "notes": notes,
               "members": list(state.members)}
    if mismatch:
        return EXIT_INPUT
    return EXIT_NEGATIVE if any_failed else EXIT_OK


# -- analyze ----------------------------------------------------------------------------


def _atoms(p: Policy) -> list[tuple[str, tuple]]:
    out = []
    for rule in p.rules:
        conjuncts = rule.condition.conjuncts
        for i, conj in enumerate(conjuncts):
            label = rule.id if len(conjuncts) == 1 else f"{rule.id}[{i}]"
            out.append((label, tuple(conj) + tuple(rule.restrictions)))
    return out


def cmd_analyze(args, out: Out) -> int:
    v = _vocab(args.vocab)
    p1 = _policy(args.policy1, v)
    p2 = _policy(args.policy2, v)
    pairs = []
    for l1, c1 in _atoms(p1):
        for l2, c2 in _atoms(p2):
            n1, n2 = normalize_conjunct(c1, v), normalize_conjunct(c2, v)
            if n1 is None or n2 is None:
                continue
            matrix = relation_matrix(n1, n2, v)
            sim = rule_similarity(n1, n2, v)
            pairs.append({
                "rule1": l1, "rule2": l2, "similarity": str(sim),
                "relations": [{"attribute": f"{k[0].value}.{k[1]}", "relation": str(r)} for k, r in matrix.items()],
            })
            out.line(f"{l1} vs {l2}: {sim}")
            for k, r in matrix.items():
                out.line(f"  {k[0].value}.{k[1]}: {r}")
    out.doc = {"command": "analyze", "pairs": pairs}
    return EXIT_OK


# -- recommend --------------------------------------------------------------------------


def _candidate(directory: str, v: Vocabulary) -> tuple[str, Policy, Policy | None]:
    base = Path(directory)
    if not base.is_dir():
        raise InputError(f"candidate {directory} is not a directory")
    rop_files = sorted(base.glob("rop*.ucp"))
    qop_files = sorted(base.glob("qop*.ucp"))
    if not rop_files:
        raise InputError(f"candidate {directory} has no rop*.ucp file")
    qop = _policy(str(qop_files[0]), v) if qop_files else None
    return base.name, _policy(str(rop_files[0]), v), qop


def cmd_recommend(args, out: Out) -> int:
    v = _vocab(args.vocab)
    csp = load_csp(args.csp, v) if args.csp else CSPState()
    candidates = [_candidate(d, v) for d in args.candidates]
    ranked = rank(candidates, v, csp=csp)
    rejected = sorted({c[0] for c in candidates} - {s.partner for s in ranked})
    rows = []
    out.line(f"{'rank':>4}  {'partner':<16} rop score | qop score")
    for i, s in enumerate(ranked, 1):
        rows.append({"rank": i, "partner": s.partner, "rop": s.rop.to_json(), "qop": s.qop.to_json()})
        rop = " ".join(str(x) for x in s.rop.key())
        qop = " ".join(str(x) for x in s.qop.key())
        out.line(f"{i:>4}  {s.partner:<16} {rop} | {qop}")
    for r in rejected:
        out.line(f"   -  {r:<16} rejected: conflicts with the context")
    out.doc = {"command": "recommend", "ranking": rows, "rejected": rejected}
    return EXIT_OK if ranked else EXIT_NEGATIVE


# -- oracle -------------------------------------------------------------------------------


def cmd_oracle(args, out: Out) -> int:
    v = _vocab(args.vocab)
    policies = [_policy(f, v) for f in args.policies]
    grids = parse_grid(_read(args.grid), v, file=args.grid) if args.grid else None
    rights = sorted({r for p in policies for r in p.rights()})
    keys = set().union(*(p.attributes() for p in policies))
    u = FiniteUniverse.from_vocabulary(v, rights, cap=args.cap, grids=grids, keys=keys)
    want = {"partition": 1, "intersect": (2, 3), "cover": 2}[args.mode]
    if (isinstance(want, int) and len(policies) != want) or (isinstance(want, tuple) and len(policies) not in want):
        raise InputError(f"mode {args.mode} takes {want} policy files, got {len(policies)}")
    if args.mode == "partition":
        part = partition(policies[0], u, v, flatten=args.flatten)
        rows = []
        for q in part.order:
            label = part.label(q)
            text = " ".join(f"{a.category.value}.{a.attr}={format_value(a.value)}" for a in q.assignments)
            rows.append({"label": label, "right": next(iter(q.demanded_rights)), "assignments": text})
            out.line(f"{label:<2} {next(iter(q.demanded_rights))}: {text}")
        out.line(f"Y={len(part.Q_Y)} N={len(part.Q_N)} NA={len(part.Q_NA)}")
        out.doc = {"command": "oracle", "mode": "partition", "counts":
                   {"Y": len(part.Q_Y), "N": len(part.Q_N), "NA": len(part.Q_NA)}, "requests": rows}
        return EXIT_OK
    if args.mode == "intersect":
        p1, p2 = policies[0], policies[1]
        if len(policies) == 3:
            p_i = policies[2]
        else:
            res: AggregationResult = intersect_policies(p1, p2, v)
            if res.policy is None:
                raise InputError("the two policies are not vocabulary-compatible")
            p_i = res.policy
        cex = check_intersection(p1, p2, p_i, u, v, flatten=args.flatten)
    else:
        cex = check_cover(policies[0], policies[1], u, v)
    doc = {"command": "oracle", "mode": args.mode, "pass": cex is None}
    if cex is None:
        out.line("PASS")
    else:
        witness = serialize_request(cex.request)
        doc["counterexample"] = {"request": witness, "expected": cex.expected, "actual": cex.actual}
        out.line(f"FAIL: expected {cex.expected}, got {cex.actual} for")
        out.line(witness.rstrip("\n"))
    out.doc = doc
    return EXIT_OK if cex is None else EXIT_NEGATIVE


# -- entry point -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--vocab", required=True, help="vocabulary file (.ucv)")
    common.add_argument("--format", choices=("text", "json"), default="text")

    ap = argparse.ArgumentParser(prog="abuc", description="Usage-control policy toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="parse and type-check policy or request files")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("eval", parents=[common], help="decide a request against a policy")
    s.add_argument("--policy", required=True)
    s.add_argument("--request", required=True)
    s.add_argument("--ledger", help="session ledger file; its CNAT snapshot is merged into the request")
    s.add_argument("--record", action="store_true", help="append the (flattened) decision to the ledger")
    s.add_argument("--flatten", action=argparse.BooleanOptionalAction, default=False)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("aggregate", parents=[common], help="fold partner policies into a context")
    s.add_argument("--csp", help="directory holding the current context (csp.json)")
    s.add_argument("--partner", nargs=3, action="append", required=True, metavar=("ID", "ROP", "QOP"),
                   help="partner id, RoP file and QoP file ('-' for none); repeatable")
    s.add_argument("--out", help="directory to write the updated context and conflicts.json to")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("analyze", parents=[common], help="predicate relations and rule similarity")
    s.add_argument("policy1")
    s.add_argument("policy2")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("recommend", parents=[common], help="rank candidate partners")
    s.add_argument("--csp", help="directory holding the current context (csp.json)")
    s.add_argument("candidates", nargs="*", help="candidate directories with rop*.ucp and optional qop*.ucp")
    s.set_defaults(func=cmd_recommend)

    s = sub.add_parser("oracle", parents=[common], help="brute-force checks over finite grids")
    s.add_argument("--mode", choices=("partition", "intersect", "cover"), required=True)
    s.add_argument("--grid", help="grid file overriding vocabulary grids")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    s.add_argument("--flatten", action=argparse.BooleanOptionalAction, default=False)
    s.add_argument("policies", nargs="+")
    s.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    out = Out(args.format)
    try:
        code = args.func(args, out)
    except (AbucError, InputError) as e:
        kind = type(e).__name__
        if args.format == "json":
            out.doc = {"command": args.command, "error": kind, "message": str(e)}
            out.flush()
        else:
            print(f"error: {kind}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001 - the exit-code contract covers every failure
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
