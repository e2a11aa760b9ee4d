"""Command-line entry points: serve, chat, bench."""

from __future__ import annotations

import argparse
import sys

from .config import RuntimeConfig
from .harness import format_console, load_dataset, run_benchmark
from .ledger import to_credits
from .runtime import build_runtime


def _load_config(path: str) -> RuntimeConfig:
    return RuntimeConfig.from_file(path)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    runtime = build_runtime(_load_config(args.config))
    app = create_app(runtime)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_chat(args) -> int:
    runtime = build_runtime(_load_config(args.config))
    orchestrator = runtime.orchestrator
    session = orchestrator.open_session()
    print(f"session {session.session_id}; empty line or Ctrl-D exits")
    while True:
        try:
            line = input("> ").strip()
        except (EOFError, KeyboardInterrupt):
            print()
            break
        if not line:
            break
        response = orchestrator.handle_query(session, line)
        print(response.text)
        snapshot = runtime.ledger.snapshot()
        charged = sum(
            e.detail["amount_microcredits"]
            for e in response.trace
            if e.kind == "charge"
        )
        print(
            f"[turn cost {to_credits(charged):.6f} cr; "
            f"spent {to_credits(snapshot.spent):.6f}/"
            f"{to_credits(snapshot.expense_limit):.6f} cr; "
            f"VRAM {snapshot.utilization_pct:.1f}%]"
        )
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    items = load_dataset(args.dataset)
    report = run_benchmark(
        config, items, parallel=args.parallel, out_path=args.out, console=False
    )
    print(format_console(report))
    if args.out:
        print(f"report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentfirm",
        description="Resource-aware hierarchical agent orchestration runtime.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to runtime config JSON")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)
    serve.set_defaults(func=cmd_serve)

    chat = sub.add_parser("chat", help="interactive REPL against one session")
    chat.add_argument("--config", required=True, help="path to runtime config JSON")
    chat.set_defaults(func=cmd_chat)

    bench = sub.add_parser("bench", help="run a benchmark dataset")
    bench.add_argument("--config", required=True, help="path to runtime config JSON")
    bench.add_argument("--dataset", required=True, help="path to JSONL dataset")
    bench.add_argument("--out", default=None, help="write the JSON report here")
    bench.add_argument("--parallel", type=int, default=1)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
