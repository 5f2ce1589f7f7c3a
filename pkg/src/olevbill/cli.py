"""Command line front end.

Exit codes: 0 success, 2 validation error, 3 audit discrepancy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config, validate
from .cspa import BillEntry
from .game import COL, ROW, TABLE2, Strategy, best_response, empirical_payoff, observed_profile, payoff, pure_nash
from .revocation import Warrant
from .sim import RevocationWorld, World, reconcile, report_bytes, run_revocation, run_world

EXIT_OK, EXIT_INVALID, EXIT_DISCREPANCY = 0, 2, 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_init(args) -> int:
    cfg = ScenarioConfig(seed=args.seed)
    cfg.crypto.j, cfg.crypto.t = args.j, args.t
    cfg.fleet.count, cfg.fleet.pool_size = args.vehicles, args.pool
    world = World(validate(cfg))
    data = RevocationWorld.from_world(world).to_json()
    data["pseudonyms"] = {str(v.index): [ps.to_bytes().hex() for ps in v.trm.pool] for v in world.vehicles}
    _write_json(Path(args.out), data)
    print(f"wrote {args.out}: j={args.j} t={args.t}, {args.vehicles} vehicle(s) x {args.pool} pseudonyms")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.scenario)
    world = World(cfg)
    report = run_world(world)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(report_bytes(report))
    stem = out.with_suffix("")
    ledger_path = Path(f"{stem}.ledger.jsonl")
    ledger_path.write_text(
        "".join(json.dumps(e, sort_keys=True) + "\n" for e in report["ledger"]["entries"]), encoding="utf-8"
    )
    obu_path = Path(f"{stem}.obu.jsonl")
    obu_path.write_text("".join(
        json.dumps({"vehicle": int(i), **e}, sort_keys=True) + "\n"
        for i, entries in sorted(report["obu_logs"].items(), key=lambda kv: int(kv[0]))
        for e in entries
    ), encoding="utf-8")
    written = [out, ledger_path, obu_path]
    if args.world_out:
        _write_json(Path(args.world_out), RevocationWorld.from_world(world).to_json())
        written.append(Path(args.world_out))
    if args.figures:
        from .plots import render_figures

        written.extend(render_figures(report, args.figures))
    recon = report["reconciliation"]
    status = "match" if recon["match"] else f"{len(recon['discrepancies'])} discrepancies"
    delivered = report["behavior"]["charges_delivered"]
    print(f"{cfg.protocol}: {len(report['vehicles'])} vehicles, {delivered} charges, reconciliation {status}")
    for path in written:
        print(f"  {path}")
    return EXIT_OK


def audit_report(report: dict) -> dict:
    x_obus = {v["index"]: [bytes.fromhex(x) for x in v["x_obus"]] for v in report["vehicles"]}
    logs = {int(i): [BillEntry.from_json(e) for e in entries] for i, entries in report["obu_logs"].items()}
    ledger = [BillEntry.from_json(e) for e in report["ledger"]["entries"]]
    return reconcile(logs, ledger, x_obus)


def cmd_audit(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    try:
        result = audit_report(report)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{args.report}: not a simulation report ({exc})") from exc
    _emit(result)
    return EXIT_OK if result["match"] else EXIT_DISCREPANCY


def cmd_revoke(args) -> int:
    world = RevocationWorld.from_json(json.loads(Path(args.world).read_text(encoding="utf-8")))
    ps = bytes.fromhex(args.pseudonym)
    participants = [int(p) for p in args.participants.split(",")] if args.participants else None
    _emit(run_revocation(world, ps, Warrant(args.case, ps), participants))
    return EXIT_OK


def _game_summary(matrix) -> dict:
    return {
        "matrix": matrix.as_json(),
        "best_responses": {
            f"{player}_vs_{s.value}": sorted(x.value for x in best_response(matrix, s, player))
            for player in (ROW, COL)
            for s in Strategy
        },
        "pure_nash": sorted(r.value + c.value for r, c in pure_nash(matrix)),
    }


def cmd_game(args) -> int:
    out = _game_summary(TABLE2)
    if args.from_report:
        report = json.loads(Path(args.from_report).read_text(encoding="utf-8"))
        row, col = observed_profile(report)
        out["observed_cell"] = row.value + col.value
        out["empirical_payoffs"] = {
            "row": payoff(empirical_payoff(report, ROW)),
            "col": payoff(empirical_payoff(report, COL)),
        }
    _emit(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="olevbill", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="set up DMV, RAs and a provisioned fleet; save the revocation world")
    p.add_argument("--j", type=int, default=5, help="number of revocation authorities")
    p.add_argument("--t", type=int, default=3, help="threshold of RAs needed to revoke")
    p.add_argument("--vehicles", type=int, default=1)
    p.add_argument("--pool", type=int, default=16, help="pseudonyms per vehicle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="run a scenario and write the report")
    p.add_argument("--scenario", required=True, help="scenario config (JSON)")
    p.add_argument("--out", required=True, help="report path (JSON)")
    p.add_argument("--world-out", help="also save the revocation world (JSON)")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="reconcile OBU logs against the CSPA ledger of a report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("revoke", help="de-anonymize a pseudonym under warrant")
    p.add_argument("--world", required=True)
    p.add_argument("--pseudonym", required=True, help="pseudonym bytes, hex")
    p.add_argument("--case", required=True, help="warrant case id")
    p.add_argument("--participants", help="comma-separated RA indices (default: all)")
    p.set_defaults(func=cmd_revoke)

    p = sub.add_parser("game", help="payoff matrix, best responses and pure Nash equilibria")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--matrix", choices=["table2"], default="table2")
    g.add_argument("--from-report", help="also map a report onto the matrix")
    p.set_defaults(func=cmd_game)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # every domain error (config, crypto, DMV, RA, wire) is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
