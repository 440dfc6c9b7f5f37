"""Command-line entry points.

    hashfleet coordinator  --listen host:port --store s.db --wordlist-dir wl/
    hashfleet agent        --coordinator ws://host:port/ws/agent --name nodeA
    hashfleet submit       --server http://host:port --token T ...
    hashfleet estimate     --mode brute --length 4 --hps 1e6

`submit` and `estimate` are thin clients: submit mirrors the HTTP API
status in its exit code (2 usage, 3 network trouble, 1 API rejection),
estimate runs the same arithmetic the service uses.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
from pathlib import Path

from .distribution import (
    BruteEstimate,
    CombinatorEstimate,
    DictionaryEstimate,
    RuleEstimate,
    estimate_time,
)
from .models import EngineKind

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NETWORK = 3


def humanize_duration(seconds: float) -> str:
    if seconds < 1:
        return f"{seconds * 1000:.3g} ms"
    rem = int(seconds)
    days, rem = divmod(rem, 86400)
    hours, rem = divmod(rem, 3600)
    minutes, secs = divmod(rem, 60)
    parts = []
    if days:
        parts.append(f"{days}d")
    if hours:
        parts.append(f"{hours}h")
    if minutes:
        parts.append(f"{minutes}m")
    parts.append(f"{secs}s")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hashfleet",
        description="Distributed password-analysis orchestrator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coordinator", help="run the coordinator service")
    p.add_argument("--listen", default="127.0.0.1:8450", metavar="HOST:PORT",
                   help="bind address (default 127.0.0.1:8450)")
    p.add_argument("--store", default="hashfleet.db", metavar="PATH",
                   help="sqlite store file (default hashfleet.db)")
    p.add_argument("--wordlist-dir", default="wordlists", metavar="PATH",
                   help="directory of wordlist files (default ./wordlists)")
    p.add_argument("--static-dir", default=None, metavar="PATH",
                   help="built dashboard bundle to serve at /")
    p.add_argument("--admin-password", default=None, metavar="PW",
                   help="bootstrap password for the 'admin' user on a fresh store")

    p = sub.add_parser("agent", help="run a compute agent")
    p.add_argument("--coordinator", required=True, metavar="URL",
                   help="coordinator websocket URL, e.g. ws://host:8450/ws/agent")
    p.add_argument("--name", required=True, help="unique agent name")
    p.add_argument("--engine", choices=["builtin", "external"], default="builtin")
    p.add_argument("--engine-path", default=None, metavar="PATH",
                   help="external cracker binary (with --engine external)")
    p.add_argument("--wordlist-dir", default="wordlists", metavar="PATH",
                   help="local wordlist directory (default ./wordlists)")

    p = sub.add_parser("submit", help="submit a job to a running coordinator")
    p.add_argument("--server", required=True, metavar="URL",
                   help="coordinator HTTP base URL, e.g. http://host:8450")
    p.add_argument("--token", required=True, help="bearer token from /auth/login")
    p.add_argument("--algorithm", required=True, choices=["md5", "sha1", "sha256"])
    p.add_argument("--mode", required=True,
                   choices=["brute", "dictionary", "rules", "combinator"])
    p.add_argument("--nodes", required=True, metavar="ID,ID,...",
                   help="comma-separated node ids")
    p.add_argument("--hashes-file", default=None, metavar="PATH",
                   help="hash list file, one hex digest per line")
    p.add_argument("--hashes", default=None, metavar="HEX,HEX,...",
                   help="inline comma-separated digests")
    p.add_argument("--wordlists", default=None, metavar="ID,ID,...",
                   help="wordlist ids (dictionary/rules modes)")
    p.add_argument("--rules", default=None, metavar="RULE,RULE,...",
                   help="rule strings (rules mode)")
    p.add_argument("--left", default=None, help="left wordlist id (combinator)")
    p.add_argument("--right", default=None, help="right wordlist id (combinator)")
    p.add_argument("--min-length", type=int, default=None, help="brute minimum length")
    p.add_argument("--max-length", type=int, default=None, help="brute maximum length")

    p = sub.add_parser("estimate", help="estimate attack duration offline")
    p.add_argument("--mode", required=True,
                   choices=["brute", "dictionary", "rules", "combinator"])
    p.add_argument("--hps", required=True, type=float,
                   help="node hash rate in hashes/second (e.g. 1e6)")
    p.add_argument("--length", type=int, default=None, help="brute password length")
    p.add_argument("--lines", type=int, default=None,
                   help="wordlist line count (dictionary/rules)")
    p.add_argument("--rules", type=int, default=None, help="rule count (rules mode)")
    p.add_argument("--lines1", type=int, default=None, help="left line count (combinator)")
    p.add_argument("--lines2", type=int, default=None, help="right line count (combinator)")
    return parser


def cmd_estimate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    need = lambda flag, value: parser.error(
        f"argument {flag} is required with --mode {args.mode}") if value is None else value
    if args.mode == "brute":
        spec = BruteEstimate(length=need("--length", args.length))
    elif args.mode == "dictionary":
        spec = DictionaryEstimate(lines=need("--lines", args.lines))
    elif args.mode == "rules":
        spec = RuleEstimate(lines=need("--lines", args.lines),
                            rules=need("--rules", args.rules))
    else:
        spec = CombinatorEstimate(lines_left=need("--lines1", args.lines1),
                                  lines_right=need("--lines2", args.lines2))
    try:
        seconds = estimate_time(spec, args.hps)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"{seconds!r} s ({humanize_duration(seconds)})")
    return EXIT_OK


def cmd_submit(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    import httpx

    mode: dict = {"mode": args.mode}
    if args.mode == "brute":
        if args.min_length is None or args.max_length is None:
            parser.error("arguments --min-length and --max-length are required "
                         "with --mode brute")
        mode["min_length"] = args.min_length
        mode["max_length"] = args.max_length
    elif args.mode in ("dictionary", "rules"):
        if not args.wordlists:
            parser.error(f"argument --wordlists is required with --mode {args.mode}")
        mode["wordlists"] = args.wordlists.split(",")
        if args.mode == "rules":
            if not args.rules:
                parser.error("argument --rules is required with --mode rules")
            mode["rules"] = args.rules.split(",")
    else:
        if not args.left or not args.right:
            parser.error("arguments --left and --right are required with "
                         "--mode combinator")
        mode["left"] = args.left
        mode["right"] = args.right

    spec = {"algorithm": args.algorithm, "mode": mode,
            "node_ids": args.nodes.split(",")}
    headers = {"Authorization": f"Bearer {args.token}"}
    url = args.server.rstrip("/") + "/jobs"
    try:
        if args.hashes_file:
            with open(args.hashes_file, "rb") as fh:
                response = httpx.post(
                    url, headers=headers,
                    data={"spec": json.dumps(spec)},
                    files={"hashes_file": (Path(args.hashes_file).name, fh)},
                    timeout=30.0,
                )
        else:
            if not args.hashes:
                parser.error("argument --hashes-file or --hashes is required")
            spec["hashes"] = args.hashes.split(",")
            response = httpx.post(url, headers=headers, json=spec, timeout=30.0)
    except OSError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except httpx.HTTPError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK

    if response.status_code == 201:
        print(response.json()["job_id"])
        return EXIT_OK
    try:
        body = response.json()
        print(f"error {response.status_code}: {body.get('code')}: "
              f"{body.get('message')}", file=sys.stderr)
    except ValueError:
        print(f"error {response.status_code}", file=sys.stderr)
    return EXIT_FAILURE


def cmd_coordinator(args: argparse.Namespace) -> int:
    import uvicorn

    from .api.app import create_app
    from .api.auth import TokenTable, create_user
    from .coordinator import Coordinator
    from .store import Store

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"error: --listen must look like host:port, got {args.listen!r}",
              file=sys.stderr)
        return EXIT_USAGE

    store = Store(args.store)
    coordinator = Coordinator(store, wordlist_dir=args.wordlist_dir)
    tokens = TokenTable()
    if store.count_users() == 0:
        import secrets

        password = args.admin_password or secrets.token_urlsafe(12)
        create_user(store, "admin", password, role="admin")
        shown = password if args.admin_password is None else "(as given)"
        print(f"created admin user 'admin' with password: {shown}")

    app = create_app(coordinator, store, tokens, static_dir=args.static_dir)
    uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    return EXIT_OK


def cmd_agent(args: argparse.Namespace) -> int:
    from .agent import Agent, AgentConfig, WebsocketTransport

    config = AgentConfig(
        agent_name=args.name,
        coordinator_url=args.coordinator,
        engine_kind=EngineKind(args.engine),
        external_engine_path=args.engine_path,
        wordlist_dir=args.wordlist_dir,
    )
    agent = Agent(config, lambda: WebsocketTransport(args.coordinator))
    signal.signal(signal.SIGINT, lambda *_: agent.stop())
    signal.signal(signal.SIGTERM, lambda *_: agent.stop())
    print(f"agent {args.name!r} connecting to {args.coordinator}")
    agent.run()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "estimate":
        return cmd_estimate(parser, args)
    if args.command == "submit":
        return cmd_submit(parser, args)
    if args.command == "coordinator":
        return cmd_coordinator(args)
    return cmd_agent(args)


if __name__ == "__main__":
    sys.exit(main())
