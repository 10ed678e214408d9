"""Command-line front door.

The CLI is a thin client of the HTTP service: requests are sent either to an
in-process application instance (default) or to a remote server via
``--server``.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .presets import preset_names

USAGE_EXIT = 2
FAILURE_EXIT = 1


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(args, path: str, payload: dict) -> dict:
    with _client(args.server) as client:
        response = client.post(path, json=payload)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        print(f"error ({response.status_code}): {detail}", file=sys.stderr)
        sys.exit(USAGE_EXIT if response.status_code in (400, 422) else FAILURE_EXIT)
    return response.json()


def _check_preset(name: str) -> None:
    if name not in preset_names():
        print(
            f"error: unknown preset {name!r}; available: {', '.join(preset_names())}",
            file=sys.stderr,
        )
        sys.exit(USAGE_EXIT)


def _print(data: dict) -> None:
    print(json.dumps(data, indent=2))


def cmd_train(args) -> None:
    _check_preset(args.preset)
    payload = {
        "preset": args.preset,
        "c": args.c,
        "seed": args.seed,
        "out_dir": args.out,
    }
    if args.steps:
        payload["steps"] = args.steps
    _print(_post(args, "/train", payload))


def cmd_sweep(args) -> None:
    _check_preset(args.preset)
    payload = {"preset": args.preset, "out_dir": args.out, "workers": args.workers}
    if args.steps:
        payload["steps"] = args.steps
    if args.c is not None:
        payload["c_values"] = [args.c]
    _print(_post(args, "/sweep", payload))


def cmd_baseline(args) -> None:
    _check_preset(args.preset)
    payload = {"preset": args.preset, "out_dir": args.out}
    if args.c is not None:
        payload["c_values"] = [args.c]
    _print(_post(args, "/baseline", payload))


def cmd_trace(args) -> None:
    payload = {
        "checkpoint_path": args.checkpoint,
        "n_steps": args.steps or 2000,
        "out_file": args.out,
        "seed": args.seed,
        "stochastic": args.stochastic,
    }
    _print(_post(args, "/trace", payload))


def cmd_eval(args) -> None:
    payload = {
        "checkpoint_path": args.checkpoint,
        "n_steps": args.steps or 20000,
        "seed": args.seed,
        "deterministic": args.deterministic,
    }
    _print(_post(args, "/eval", payload))


def cmd_presets(args) -> None:
    with _client(args.server) as client:
        response = client.get("/presets")
    _print(response.json())


def cmd_serve(args) -> None:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdemon",
        description="Feedback-controlled qubit cooling: train agents, sweep "
        "trade-offs, optimize baselines, and dump trajectories.",
    )
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one agent")
    p.add_argument("--preset", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train over the preset's c list")
    p.add_argument("--preset", required=True)
    p.add_argument("--c", type=float, default=None, help="restrict to one c")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="grid-optimize the interpretable policy")
    p.add_argument("--preset", required=True)
    p.add_argument("--c", type=float, default=None, help="restrict to one c")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("trace", help="dump a trajectory from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--stochastic", action="store_true", help="sample actions instead of the mode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--seed", type=int, default=123)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("presets", help="list available presets")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
