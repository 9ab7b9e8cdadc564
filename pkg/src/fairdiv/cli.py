"""Command-line entry point.

Exit codes separate findings from misuse: 0 means the command ran and
every checked property held, 1 means a property violation or profitable
deviation was found, 2 means the invocation or its inputs were malformed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from random import Random

from .bivalued import BiValuedProfile, bivalued_chores_mechanism, bivalued_goods_mechanism
from .core import (
    FairDivError,
    ParseError,
    ResourceGuardError,
    dumps_json,
    format_rational,
    parse_allocation,
    parse_instance,
    parse_lottery,
    parse_rational,
)
from .divisible import ps_run
from .fairness import (
    EquilibriumCertificate,
    check_ef,
    check_ef1,
    check_mms,
    check_po_bruteforce,
    check_prop,
    verify_equilibrium,
)
from .instances import random_profile
from .lottery import implement_lottery, sample_lottery, verify_lottery
from .picking_exchange import dualize_config, parse_pe_config, run_picking_exchange, validate_config
from .registry import get_mechanism, named_choice_set
from .report import (
    experiment_rows,
    render_table,
    scan_rows,
    write_csv,
    write_experiment_figure,
    write_scan_figure,
)
from .strategic import (
    HardFamilyConfig,
    bivalued_rows,
    combine_scan_records,
    efficiency_experiment,
    fairness_ratio_scan,
    grid_rows,
    manipulation_search,
    scan_instance,
)
from .transforms import divisible_chore_transform, opposite, swap_two_agent, symmetrize

EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunManifest:
    command: list[str]
    instances: list[str]
    mechanism: str | None
    seed: int | None
    output: str
    timestamp: str

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "instances": self.instances,
            "mechanism": self.mechanism,
            "seed": self.seed,
            "output": self.output,
            "timestamp": self.timestamp,
        }


def _write_manifest(argv: list[str], args: argparse.Namespace, output: Path) -> None:
    manifest = RunManifest(
        command=list(argv),
        instances=[str(getattr(args, "instance", ""))] if getattr(args, "instance", None) else [],
        mechanism=getattr(args, "mechanism", None),
        seed=getattr(args, "seed", None),
        output=str(output),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    Path(str(output) + ".manifest.json").write_text(dumps_json(manifest.to_json_dict()))


def replay_manifest(path: str | Path) -> int:
    """Re-run a recorded invocation; outputs are byte-identical by construction."""
    data = json.loads(Path(path).read_text())
    return dispatch(data["command"])


def _emit(payload: dict, args: argparse.Namespace, argv: list[str], table: str | None = None) -> None:
    text = table if (getattr(args, "format", "json") == "table" and table is not None) else dumps_json(payload)
    output = getattr(args, "output", None)
    if output:
        path = Path(output)
        path.write_text(text)
        _write_manifest(argv, args, path)
    else:
        sys.stdout.write(text)


def _load_instance(path: str):
    return parse_instance(Path(path).read_text())


def _cmd_run(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    mech = get_mechanism(args.mechanism, profile.kind, seed=args.seed, divisibility=profile.divisibility)
    allocation = mech(profile)
    _emit(allocation.to_json_dict(), args, argv)
    return EXIT_OK


def _cmd_transform(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    if args.which == "swap":
        inner = get_mechanism(args.mechanism, opposite(profile.kind), seed=args.seed, divisibility="indivisible")
        mech = swap_two_agent(inner)
    elif args.which == "divisible":
        inner = get_mechanism(args.mechanism, "goods", seed=args.seed)
        mech = divisible_chore_transform(inner)
    else:
        inner = get_mechanism(args.mechanism, "chores", seed=args.seed)
        mech = symmetrize(inner)
    allocation = mech(profile)
    _emit(allocation.to_json_dict(), args, argv)
    return EXIT_OK


def _cmd_pe(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = parse_pe_config(Path(args.config).read_text())
    if args.pe_command == "validate":
        problems = validate_config(cfg, args.items)
        _emit({"valid": not problems, "violations": problems}, args, argv)
        return EXIT_OK if not problems else EXIT_FINDING
    if args.pe_command == "dualize":
        _emit(dualize_config(cfg).to_json_dict(), args, argv)
        return EXIT_OK
    profile = _load_instance(args.instance)
    allocation = run_picking_exchange(cfg, profile)
    _emit(allocation.to_json_dict(), args, argv)
    return EXIT_OK


def _cmd_ps(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    allocation, schedule = ps_run(profile, args.tiebreak)
    payload = {"allocation": allocation.to_json_dict()}
    if args.emit_schedule:
        payload["schedule"] = schedule.to_json_dict()
    _emit(payload, args, argv)
    return EXIT_OK


def _cmd_bivalued(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    wrapped = BiValuedProfile.from_profile(profile)
    payload: dict = {}
    if profile.kind == "chores":
        run = bivalued_chores_mechanism(wrapped)
        payload["allocation"] = run.allocation.to_json_dict()
        if args.emit_certificate:
            payload["certificate"] = run.certificate.to_json_dict()
        if args.emit_schedule:
            payload["schedule"] = run.schedule.to_json_dict()
    else:
        run_g = bivalued_goods_mechanism(wrapped)
        payload["allocation"] = run_g.allocation.to_json_dict()
        if args.emit_certificate:
            raise ParseError("certificates are emitted for chores instances only")
        if args.emit_schedule:
            payload["schedule"] = run_g.schedule.to_json_dict()
    _emit(payload, args, argv)
    return EXIT_OK


def _cmd_lottery(args: argparse.Namespace, argv: list[str]) -> int:
    if args.lottery_command == "sample":
        lottery = parse_lottery(Path(args.lottery).read_text())
        index, outcome = sample_lottery(lottery, args.seed)
        _emit({"outcome_index": index, "allocation": outcome.to_json_dict()}, args, argv)
        return EXIT_OK
    profile = _load_instance(args.instance)
    if args.lottery_command == "implement":
        if args.allocation and args.schedule:
            allocation = parse_allocation(Path(args.allocation).read_text(), m=profile.m)
            from .divisible import EatingSchedule, Segment

            raw = json.loads(Path(args.schedule).read_text())
            schedule = EatingSchedule(
                segments=tuple(
                    tuple(
                        Segment(
                            item=s["item"],
                            start=parse_rational(s["start"]),
                            end=parse_rational(s["end"]),
                        )
                        for s in agent_segments
                    )
                    for agent_segments in raw["agents"]
                ),
                duration=parse_rational(raw["duration"]),
            )
        else:
            allocation, schedule = ps_run(profile, "lowest-index")
        implementation = implement_lottery(profile, allocation, schedule)  # type: ignore[arg-type]
        _emit(implementation.lottery.to_json_dict(), args, argv)
        return EXIT_OK
    allocation = parse_allocation(Path(args.allocation).read_text(), m=profile.m)
    lottery = parse_lottery(Path(args.lottery).read_text())
    report = verify_lottery(profile, allocation, lottery)  # type: ignore[arg-type]
    _emit(report.to_json_dict(), args, argv)
    return EXIT_OK if report.holds else EXIT_FINDING


def _cmd_audit(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    mech = get_mechanism(args.mechanism, profile.kind, seed=args.seed, divisibility=profile.divisibility)
    agents = [args.agent] if args.agent is not None else list(range(profile.n))
    results = {}
    any_profitable = False
    for agent in agents:
        if args.reports == "bivalued":
            distinct = sorted({v for row in profile.values for v in row})
            if len(distinct) != 2:
                raise ParseError("bivalued report space needs a two-valued instance")
            space = bivalued_rows(profile.m, distinct[1], distinct[0])
        else:
            values = [parse_rational(v) for v in args.grid_values.split(",")]
            space = grid_rows(profile.m, values)
        outcome = manipulation_search(mech, profile, agent, space)
        any_profitable |= outcome.profitable
        results[str(agent)] = {
            "gain": format_rational(outcome.gain),
            "profitable": outcome.profitable,
            "witness": [format_rational(v) for v in outcome.witness] if outcome.witness else None,
        }
    _emit({"mechanism": args.mechanism, "agents": results}, args, argv)
    return EXIT_FINDING if any_profitable else EXIT_OK


def _cmd_experiment(args: argparse.Namespace, argv: list[str]) -> int:
    cfg = HardFamilyConfig(k=args.k, p=parse_rational(args.p), q=parse_rational(args.q))
    choice = named_choice_set(args.mechanism)
    experiment = efficiency_experiment(cfg, choice)
    headers, rows = experiment_rows(experiment)
    payload = {
        "t": format_rational(experiment.t),
        "bound": format_rational(2 * experiment.t / (1 + experiment.t)),
        "worst_ratio": format_rational(experiment.worst_ratio),
        "max_consistent_delta": format_rational(experiment.max_consistent_delta),
        "dictate_all_hold": experiment.dictate_all_hold,
        "levels": [dict(zip(headers, row)) for row in rows],
    }
    if args.output:
        base = Path(args.output)
        write_csv(base, headers, rows)
        write_experiment_figure(experiment, base.with_suffix(".png"))
        _write_manifest(argv, args, base)
        sys.stdout.write(render_table(headers, rows))
    else:
        _emit(payload, args, argv, table=render_table(headers, rows))
    return EXIT_OK if experiment.dictate_all_hold else EXIT_FINDING


def _scan_worker(payload: tuple) -> object:
    mechanism, kind, seed, divisibility, notion, index, profile = payload
    mech = get_mechanism(mechanism, kind, seed=seed, divisibility=divisibility)
    return scan_instance(mech, notion, profile, index)


def _cmd_scan(args: argparse.Namespace, argv: list[str]) -> int:
    rng = Random(args.seed)
    divisibility = "indivisible" if args.notion in ("ef1", "mms") else "divisible"
    instances = [
        random_profile(rng, rng.randint(2, args.n), rng.randint(2, args.m), args.kind, divisibility)
        for _ in range(args.count)
    ]
    notion = "EF1" if args.notion == "ef1" else "MMS"
    if args.jobs > 1:
        payloads = [
            (args.mechanism, args.kind, args.seed, divisibility, notion, i, profile)
            for i, profile in enumerate(instances)
        ]
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_scan_worker, payloads))
        report = combine_scan_records(notion, args.kind, records)
    else:
        mech = get_mechanism(args.mechanism, args.kind, seed=args.seed, divisibility=divisibility)
        report = fairness_ratio_scan(mech, notion, instances)
    headers, rows = scan_rows(report)
    payload = {
        "notion": report.notion,
        "clean": report.clean,
        "worst_ef1_violations": report.worst_ef1_violations,
        "worst_mms_ratio": format_rational(report.worst_mms_ratio)
        if report.worst_mms_ratio is not None
        else None,
    }
    if args.output:
        base = Path(args.output)
        write_csv(base, headers, rows)
        write_scan_figure(report, base.with_suffix(".png"))
        _write_manifest(argv, args, base)
        sys.stdout.write(dumps_json(payload))
    else:
        _emit(payload, args, argv, table=render_table(headers, rows))
    if report.notion == "EF1" and not report.clean:
        return EXIT_FINDING
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, argv: list[str]) -> int:
    profile = _load_instance(args.instance)
    allocation = parse_allocation(Path(args.allocation).read_text(), m=profile.m)
    if args.property == "ef1":
        report = check_ef1(profile, allocation)  # type: ignore[arg-type]
    elif args.property == "ef":
        report = check_ef(profile, allocation)
    elif args.property == "prop":
        report = check_prop(profile, allocation)
    elif args.property == "mms":
        report = check_mms(profile, allocation, parse_rational(args.alpha))  # type: ignore[arg-type]
    elif args.property == "po":
        report = check_po_bruteforce(profile, allocation)
    else:
        cert_raw = json.loads(Path(args.certificate).read_text())
        cert = EquilibriumCertificate(
            prices=tuple(parse_rational(v, where="prices") for v in cert_raw["prices"]),
            budgets=tuple(parse_rational(v, where="budgets") for v in cert_raw["budgets"]),
            min_ratios=tuple(parse_rational(v, where="min_ratios") for v in cert_raw["min_ratios"]),
        )
        report = verify_equilibrium(profile, allocation, cert)  # type: ignore[arg-type]
    _emit(report.to_json_dict(), args, argv)
    return EXIT_OK if report.holds else EXIT_FINDING


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairdiv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = True) -> None:
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1, help="parallel instances (scan only)")
        p.add_argument("--output", type=str, default=None)
        p.add_argument("--format", choices=("json", "table"), default="json")

    p_run = sub.add_parser("run", help="run a named mechanism on an instance")
    p_run.add_argument("instance")
    p_run.add_argument("--mechanism", required=True)
    common(p_run)

    p_tr = sub.add_parser("transform", help="run a transformed mechanism on an instance")
    p_tr.add_argument("instance")
    p_tr.add_argument("--which", choices=("swap", "divisible", "symmetrize"), required=True)
    p_tr.add_argument("--mechanism", required=True, help="inner mechanism name")
    common(p_tr)

    p_pe = sub.add_parser("pe", help="picking-exchange mechanisms")
    pe_sub = p_pe.add_subparsers(dest="pe_command", required=True)
    pe_run = pe_sub.add_parser("run")
    pe_run.add_argument("instance")
    pe_run.add_argument("--config", required=True)
    common(pe_run)
    pe_dual = pe_sub.add_parser("dualize")
    pe_dual.add_argument("--config", required=True)
    common(pe_dual)
    pe_val = pe_sub.add_parser("validate")
    pe_val.add_argument("--config", required=True)
    pe_val.add_argument("--items", type=int, required=True)
    common(pe_val)

    p_ps = sub.add_parser("ps", help="probabilistic serial")
    ps_sub = p_ps.add_subparsers(dest="ps_command", required=True)
    ps_run_p = ps_sub.add_parser("run")
    ps_run_p.add_argument("instance")
    ps_run_p.add_argument("--tiebreak", choices=("lowest-index", "proportional"), default="lowest-index")
    ps_run_p.add_argument("--emit-schedule", action="store_true")
    common(ps_run_p)

    p_bv = sub.add_parser("bivalued", help="the bi-valued mechanism")
    bv_sub = p_bv.add_subparsers(dest="bv_command", required=True)
    bv_run = bv_sub.add_parser("run")
    bv_run.add_argument("instance")
    bv_run.add_argument("--emit-certificate", action="store_true")
    bv_run.add_argument("--emit-schedule", action="store_true")
    common(bv_run)

    p_lot = sub.add_parser("lottery", help="lottery implementation over integral allocations")
    lot_sub = p_lot.add_subparsers(dest="lottery_command", required=True)
    lot_impl = lot_sub.add_parser("implement")
    lot_impl.add_argument("instance")
    lot_impl.add_argument("--allocation")
    lot_impl.add_argument("--schedule")
    common(lot_impl)
    lot_ver = lot_sub.add_parser("verify")
    lot_ver.add_argument("instance")
    lot_ver.add_argument("--allocation", required=True)
    lot_ver.add_argument("--lottery", required=True)
    common(lot_ver)
    lot_samp = lot_sub.add_parser("sample")
    lot_samp.add_argument("--lottery", required=True)
    common(lot_samp)

    p_audit = sub.add_parser("audit", help="truthfulness audits")
    audit_sub = p_audit.add_subparsers(dest="audit_command", required=True)
    audit_truth = audit_sub.add_parser("truthfulness")
    audit_truth.add_argument("instance")
    audit_truth.add_argument("--mechanism", required=True)
    audit_truth.add_argument("--agent", type=int, default=None)
    audit_truth.add_argument("--reports", choices=("bivalued", "grid"), default="grid")
    audit_truth.add_argument("--grid-values", default="0,1,2,3")
    common(audit_truth)

    p_exp = sub.add_parser("experiment", help="hard-family efficiency experiment")
    exp_sub = p_exp.add_subparsers(dest="experiment_command", required=True)
    exp_eff = exp_sub.add_parser("efficiency")
    exp_eff.add_argument("--k", type=int, required=True)
    exp_eff.add_argument("--p", required=True)
    exp_eff.add_argument("--q", required=True)
    exp_eff.add_argument("--mechanism", required=True, help="equal-split, half-items, or an sd config path")
    common(exp_eff)

    p_scan = sub.add_parser("scan", help="worst-case fairness scans")
    scan_sub = p_scan.add_subparsers(dest="scan_command", required=True)
    scan_fair = scan_sub.add_parser("fairness")
    scan_fair.add_argument("--mechanism", required=True)
    scan_fair.add_argument("--notion", choices=("ef1", "mms"), required=True)
    scan_fair.add_argument("--kind", choices=("goods", "chores"), default="chores")
    scan_fair.add_argument("--n", type=int, default=3)
    scan_fair.add_argument("--m", type=int, default=5)
    scan_fair.add_argument("--count", type=int, default=50)
    common(scan_fair)

    p_ver = sub.add_parser("verify", help="fairness checkers")
    p_ver.add_argument("property", choices=("ef1", "ef", "prop", "mms", "po", "equilibrium"))
    p_ver.add_argument("instance")
    p_ver.add_argument("allocation")
    p_ver.add_argument("--alpha", default="1")
    p_ver.add_argument("--certificate")
    common(p_ver)

    return parser


_HANDLERS = {
    "run": _cmd_run,
    "transform": _cmd_transform,
    "pe": _cmd_pe,
    "ps": _cmd_ps,
    "bivalued": _cmd_bivalued,
    "lottery": _cmd_lottery,
    "audit": _cmd_audit,
    "experiment": _cmd_experiment,
    "scan": _cmd_scan,
    "verify": _cmd_verify,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _HANDLERS[args.command](args, argv)
    except (ParseError, ResourceGuardError, FileNotFoundError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except FairDivError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
