"""Command-line front end.

Thin client: every subcommand builds one request, sends it to the service
app through an in-process ASGI transport, and formats the response.  All
computation happens behind the same interface a deployed service exposes,
so CLI runs and HTTP runs cannot drift apart.

Exit codes: 0 success, 1 invalid chain (or failed validation), 2 bad
parameters or usage.  Set KDBENCH_NO_COLOR to disable ANSI styling.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from importlib import resources
from pathlib import Path

import httpx

from . import __version__
from .metric import canonical_json
from .service import create_app

_RESET = "\x1b[0m"
_BOLD = "\x1b[1m"
_GREEN = "\x1b[32m"
_RED = "\x1b[31m"


def _style(text: str, code: str) -> str:
    if os.environ.get("KDBENCH_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"{code}{text}{_RESET}"


class _UsageError(Exception):
    """CLI-level problem that should exit with code 2."""


def bundled_chain_names() -> list[str]:
    root = resources.files("kdbench") / "chains"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_chain_text(value: str) -> tuple[str, str]:
    """Return (document text, manifest reference) for a path or bundled name."""
    path = Path(value)
    if path.exists():
        return path.read_text(encoding="utf-8"), str(path)
    candidate = resources.files("kdbench") / "chains" / f"{value}.json"
    if candidate.is_file():
        return candidate.read_text(encoding="utf-8"), f"bundled:{value}"
    known = ", ".join(bundled_chain_names())
    raise _UsageError(f"no chain file {value!r} and no bundled chain of that name (bundled: {known})")


def run_manifest(subcommand: str, inputs: dict, outputs: dict, parameters: dict) -> dict:
    """Provenance block embedded in every artifact this tool writes.

    Worker count is an execution detail with no effect on results, so it
    stays out; identical runs must produce identical artifacts.
    """
    return {
        "tool": "kdbench",
        "tool_version": __version__,
        "subcommand": subcommand,
        "inputs": inputs,
        "outputs": outputs,
        "parameters": parameters,
    }


async def _post(path: str, payload: dict) -> httpx.Response:
    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://kdbench.internal", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _report_service_error(resp: httpx.Response) -> int:
    if resp.status_code == 400:
        body = resp.json()
        if body.get("error") == "invalid_chain":
            for d in body.get("diagnostics", []):
                print(f"{d['field']}: {d['message']}", file=sys.stderr)
            print(_style("invalid chain", _RED), file=sys.stderr)
            return 1
        print(f"invalid parameters: {body.get('detail', '')}", file=sys.stderr)
        return 2
    if resp.status_code == 422:
        print("malformed request", file=sys.stderr)
        return 2
    print(f"unexpected service response: {resp.status_code}", file=sys.stderr)
    return 2


def _write_artifact(out: str, text: str) -> None:
    Path(out).write_text(text, encoding="utf-8")
    print(f"wrote {out}")


def _numeric_params(args: argparse.Namespace) -> dict:
    return {
        "side": args.side,
        "resolution": args.resolution,
        "epsilon": args.epsilon,
        "limit_margin_fraction": args.limit_margin_frac,
        "seed": args.seed,
    }


def _cmd_kd(args: argparse.Namespace) -> int:
    text, ref = resolve_chain_text(args.chain)
    manifest = run_manifest(
        "kd",
        inputs={"chain": ref},
        outputs={"report": args.out},
        parameters=_numeric_params(args),
    )
    resp = asyncio.run(
        _post(
            "/kd",
            {
                "chain": text,
                "side": args.side,
                "resolution": args.resolution,
                "epsilon": args.epsilon,
                "limit_margin_fraction": args.limit_margin_frac,
                "workers": args.workers,
                "ik": {"seed": args.seed},
                "manifest": manifest,
            },
        )
    )
    if resp.status_code != 200:
        return _report_service_error(resp)
    doc = resp.json()
    if args.out:
        _write_artifact(args.out, canonical_json(doc))
    print(f"{doc['chain_name']} {doc['kd']:.4f} {doc['n_valid']}/{doc['n_total']}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    texts = []
    refs = []
    for value in args.chain:
        text, ref = resolve_chain_text(value)
        texts.append(text)
        refs.append(ref)
    manifest = run_manifest(
        "compare",
        inputs={"chains": refs},
        outputs={"comparison": args.out},
        parameters=_numeric_params(args),
    )
    resp = asyncio.run(
        _post(
            "/compare",
            {
                "chains": texts,
                "side": args.side,
                "resolution": args.resolution,
                "epsilon": args.epsilon,
                "limit_margin_fraction": args.limit_margin_frac,
                "workers": args.workers,
                "ik": {"seed": args.seed},
                "manifest": manifest,
            },
        )
    )
    if resp.status_code != 200:
        return _report_service_error(resp)
    doc = resp.json()
    if args.out:
        _write_artifact(args.out, canonical_json(doc))
    rows = doc["rows"]
    name_width = max([len("chain")] + [len(r["chain_name"]) for r in rows])
    header = f"{'chain':<{name_width}}  {'kd':>6}  {'valid':>12}"
    print(_style(header, _BOLD))
    for r in rows:
        valid = f"{r['n_valid']}/{r['n_total']}"
        print(f"{r['chain_name']:<{name_width}}  {r['kd']:>6.4f}  {valid:>12}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    report_path = Path(args.report)
    try:
        report_doc = json.loads(report_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise _UsageError(f"cannot read report {args.report!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"report {args.report!r} is not valid JSON: {exc}") from exc
    manifest = run_manifest(
        "plot",
        inputs={"report": str(report_path)},
        outputs={"plot": args.out},
        parameters={"slice_axis": args.slice_axis, "slice_index": args.slice_index},
    )
    resp = asyncio.run(
        _post(
            "/plot",
            {
                "report": report_doc,
                "slice_axis": args.slice_axis,
                "slice_index": args.slice_index,
                "manifest": manifest,
            },
        )
    )
    if resp.status_code != 200:
        return _report_service_error(resp)
    _write_artifact(args.out, resp.text)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    text, ref = resolve_chain_text(args.chain)
    resp = asyncio.run(_post("/validate", {"chain": text}))
    if resp.status_code != 200:
        return _report_service_error(resp)
    body = resp.json()
    if body["valid"]:
        print(f"{_style('valid', _GREEN)} {body['name']} dof={body['dof']} ({ref})")
        return 0
    for d in body["diagnostics"]:
        print(f"{d['field']}: {d['message']}", file=sys.stderr)
    print(f"{_style('invalid', _RED)} ({ref})", file=sys.stderr)
    return 1


def _add_grid_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--side", type=float, default=0.2, help="workspace cube edge length in meters")
    sub.add_argument("--resolution", type=int, default=9, help="grid points per cube edge")
    sub.add_argument("--epsilon", type=float, default=0.01, help="singular-value threshold")
    sub.add_argument(
        "--limit-margin-frac",
        type=float,
        default=0.02,
        help="fraction of each joint range treated as at-limit during screening",
    )
    sub.add_argument("--seed", type=int, default=0, help="restart sampling seed")
    sub.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes for grid evaluation (does not affect results)",
    )
    sub.add_argument("--out", default=None, help="write the JSON document here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdbench",
        description="Workspace dexterity scoring for serial kinematic chains",
    )
    parser.add_argument("--version", action="version", version=f"kdbench {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    kd = subs.add_parser("kd", help="score one chain over a workspace grid")
    kd.add_argument("--chain", required=True, help="chain file path or bundled chain name")
    _add_grid_options(kd)
    kd.set_defaults(func=_cmd_kd)

    compare = subs.add_parser("compare", help="score several chains and rank them")
    compare.add_argument(
        "--chain",
        action="append",
        required=True,
        help="chain file path or bundled chain name (repeatable)",
    )
    _add_grid_options(compare)
    compare.set_defaults(func=_cmd_compare)

    plot = subs.add_parser("plot", help="render one grid slice of a report as SVG")
    plot.add_argument("--report", required=True, help="report JSON produced by the kd subcommand")
    plot.add_argument("--slice-axis", choices=("x", "y", "z"), required=True)
    plot.add_argument("--slice-index", type=int, required=True)
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.set_defaults(func=_cmd_plot)

    validate = subs.add_parser("validate", help="check a chain document and report diagnostics")
    validate.add_argument("--chain", required=True, help="chain file path or bundled chain name")
    validate.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
