"""Command-line front end: a thin client of the service.

By default the client talks to the FastAPI app in-process through an
ASGI transport (no server or network involved); `--server URL` points
it at a running instance instead, and `cayleywalk serve` starts one.

Exit codes: 0 success, 2 config error, 3 vertex-budget exceeded,
4 a requested assumption check failed (or an assumption violation
surfaced mid-run).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_ASSUMPTION = 4

_CODE_TO_EXIT = {
    "config_error": EXIT_CONFIG,
    "resource_budget": EXIT_BUDGET,
    "assumption_violated": EXIT_ASSUMPTION,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cayleywalk",
        description="Random walks in i.i.d. random environments on regular trees.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, required=True, help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="parallel fan-out width")
        sp.add_argument("--seed-env", type=int, default=None, metavar="U64",
                        help="override the environment seed")
        sp.add_argument("--seed-traj", type=int, default=None, metavar="U64",
                        help="override the trajectory seed")
        sp.add_argument("--server", default=None, metavar="URL",
                        help="base URL of a running service (default: in-process)")

    sp = sub.add_parser("simulate", help="quenched/annealed walk ensemble")
    add_common(sp)
    sp.add_argument("--steps", type=int, default=None, help="override walk.steps")

    sp = sub.add_parser("flow", help="sphere log-resistance statistics and flow bound")
    add_common(sp)
    sp.add_argument("--delta", type=float, default=None, help="override flow.delta")
    sp.add_argument("--samples", type=int, default=None, help="override flow.samples")

    sp = sub.add_parser("resistance", help="escape probability sweep over truncation depths")
    add_common(sp)
    sp.add_argument("--depth", type=int, default=None, help="override network.max_depth")

    sp = sub.add_parser("speed", help="martingale decomposition ensemble")
    add_common(sp)
    sp.add_argument("--steps", type=int, default=None, help="override speed.steps")

    sp = sub.add_parser("check-assumptions", help="log-moment and ellipticity report")
    add_common(sp)
    sp.add_argument("--samples", type=int, default=None, help="override assumptions.samples")

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return parser


def _load_config(path: Path) -> dict:
    try:
        raw = path.read_text()
    except OSError as exc:
        raise _CliConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _CliConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise _CliConfigError(f"config {path} must contain a JSON object")
    return doc


class _CliConfigError(Exception):
    pass


def _apply_overrides(command: str, doc: dict, args: argparse.Namespace) -> dict:
    def block(name: str) -> dict:
        value = doc.setdefault(name, {})
        if not isinstance(value, dict):
            raise _CliConfigError(f"config key {name!r} must be an object")
        return value

    if args.seed_env is not None:
        block("seeds")["environment"] = args.seed_env
        env = block("env")
        env.pop("seed", None)
    if args.seed_traj is not None:
        block("seeds")["trajectory"] = args.seed_traj
    if command in ("simulate", "speed") and args.steps is not None:
        block("walk" if command == "simulate" else "speed")["steps"] = args.steps
    if command == "flow":
        if args.delta is not None:
            block("flow")["delta"] = args.delta
        if args.samples is not None:
            block("flow")["samples"] = args.samples
    if command == "resistance" and args.depth is not None:
        block("network")["max_depth"] = args.depth
    if command == "check-assumptions" and args.samples is not None:
        block("assumptions")["samples"] = args.samples
    return doc


def _post(server: str | None, path: str, body: dict) -> httpx.Response:
    if server is not None:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=body)

    from .service import app  # deferred: only the in-process default needs it

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://cayleywalk", timeout=None
        ) as client:
            return await client.post(path, json=body)

    return asyncio.run(call())


def _format_validation_error(payload) -> str:
    # pydantic validation errors arrive as a list of {loc, msg, ...}
    detail = payload.get("detail") if isinstance(payload, dict) else None
    if isinstance(detail, list):
        lines = []
        for item in detail:
            loc = ".".join(str(part) for part in item.get("loc", []) if part != "body")
            lines.append(f"{loc}: {item.get('msg', 'invalid')}")
        return "config error: " + "; ".join(lines)
    if isinstance(detail, dict):
        return f"{detail.get('code', 'error')}: {detail.get('message', '')}"
    return str(payload)


def run_client_command(command: str, args: argparse.Namespace) -> int:
    try:
        doc = _load_config(args.config)
        doc = _apply_overrides(command, doc, args)
    except _CliConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    body = {"config": doc, "threads": args.threads}
    response = _post(args.server, f"/{command}", body)

    if response.status_code != 200:
        try:
            payload = response.json()
        except ValueError:
            payload = {"detail": response.text}
        print(_format_validation_error(payload), file=sys.stderr)
        if response.status_code == 422:
            return EXIT_CONFIG
        detail = payload.get("detail") if isinstance(payload, dict) else None
        code = detail.get("code") if isinstance(detail, dict) else None
        return _CODE_TO_EXIT.get(code, EXIT_CONFIG)

    result = response.json()
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{command}.csv"
    summary_path = out_dir / f"{command}.summary.json"
    csv_path.write_bytes(result["csv"].encode("utf-8"))
    summary_doc = {
        "command": result["command"],
        "verdict": result["verdict"],
        "summary": result["summary"],
    }
    summary_path.write_text(json.dumps(summary_doc, sort_keys=True, indent=2) + "\n")
    print(result["verdict"])

    if command == "check-assumptions" and not result["summary"].get("a2_holds", True):
        return EXIT_ASSUMPTION
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    return run_client_command(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
