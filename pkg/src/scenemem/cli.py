"""Command-line client.

Subcommands: ingest, build, query, eval, serve. By default commands run
in-process against the workspace; with --server they go over HTTP to a
running service instead, using the same request/response models either
way. Exit codes: 0 success, 1 runtime failure, 2 usage or corpus/config
errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Any

import httpx

from .config import EngineConfig
from .engine import Engine, QUERY_MODES
from .errors import ConfigError, CorpusParseError, SceneMemError
from .evaluation import SWEEP_PARAMS
from .service import app as service
from .service.schemas import (
    BuildRequest,
    EvalRequest,
    IngestRequest,
    QueryRequest,
)

USAGE_ERROR_KINDS = ("CorpusParseError", "ConfigError")


class RemoteError(SceneMemError):
    def __init__(self, message: str, kind: str = ""):
        super().__init__(message)
        self.kind = kind


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", default=".", help="workspace directory (default: .)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="config override, repeatable (highest precedence)",
    )
    common.add_argument("--server", help="base URL of a running service; run remotely")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(
        prog="scenemem",
        description="Conversational memory engine with episodic and semantic retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser(
        "ingest", parents=[common], help="parse a corpus into the canonical store"
    )
    p_ingest.add_argument("corpus", help="corpus file")
    p_ingest.add_argument("--format", default="auto", choices=("auto", "canonical", "locomo"))
    p_ingest.add_argument("--sample", type=int, default=0, help="sample index for benchmark files")

    sub.add_parser("build", parents=[common], help="build and persist the episodic and semantic indices")

    p_query = sub.add_parser("query", parents=[common], help="retrieve evidence for a question")
    p_query.add_argument("question")
    p_query.add_argument("--mode", default="fused", choices=QUERY_MODES)
    p_query.add_argument(
        "--fused", dest="mode", action="store_const", const="fused", help="fused retrieval (default)"
    )
    p_query.add_argument(
        "--semantic-only", dest="mode", action="store_const", const="semantic",
        help="semantic path only",
    )
    p_query.add_argument(
        "--episodic-only", dest="mode", action="store_const", const="episodic",
        help="episodic path only",
    )
    p_query.add_argument("--k", type=int, help="number of results (default from config)")
    p_query.add_argument("--answer", action="store_true", help="also generate an answer")

    p_eval = sub.add_parser("eval", parents=[common], help="run the QA benchmark")
    p_eval.add_argument("questions", help="JSON file with question records")
    p_eval.add_argument("--repeats", type=int, default=1)
    p_eval.add_argument(
        "--sweep", metavar="PARAM=V1,V2,... or PARAM=A..B",
        help=f"vary one of {', '.join(SWEEP_PARAMS)} over a grid",
    )
    p_eval.add_argument(
        "--ablation", action="append", default=[], metavar="NAME",
        help="ablation switch (no-window, speaker_only, slot3); repeatable",
    )
    p_eval.add_argument("--no-judge", action="store_true", help="skip the judged score")
    p_eval.add_argument("--out", help="directory for report files (default: <workspace>/reports)")

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP service in the foreground")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def parse_override(raw: str) -> tuple[str, Any]:
    if "=" not in raw:
        raise ConfigError(f"override must look like KEY=VALUE, got {raw!r}")
    key, _, value = raw.partition("=")
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value


def load_config(args: argparse.Namespace) -> EngineConfig:
    overrides = dict(parse_override(raw) for raw in args.overrides)
    if args.config:
        return EngineConfig.from_file(args.config, overrides)
    return EngineConfig.load(overrides=overrides)


def parse_sweep(raw: str) -> tuple[str, list[Any]]:
    if "=" not in raw:
        raise ConfigError(f"--sweep must look like PARAM=V1,V2,..., got {raw!r}")
    param, _, grid = raw.partition("=")
    param = param.strip()
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"can only sweep one of {SWEEP_PARAMS}, not {param!r}")
    cast = int if param in ("w", "k") else float
    m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", grid.strip())
    if m and cast is int:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty sweep range {grid!r}")
        return param, list(range(lo, hi + 1))
    try:
        return param, [cast(v) for v in grid.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep grid {grid!r}: {exc}") from exc


class Client:
    """Dispatches requests locally or to a remote service."""

    def __init__(self, args: argparse.Namespace, config: EngineConfig):
        self.server = args.server.rstrip("/") if args.server else None
        self.engine = None if self.server else Engine(args.workspace, config)

    def _remote(self, method: str, route: str, payload: dict | None = None) -> dict:
        url = f"{self.server}{route}"
        try:
            if method == "GET":
                response = httpx.get(url, timeout=300.0)
            else:
                response = httpx.post(url, json=payload, timeout=300.0)
        except httpx.HTTPError as exc:
            raise RemoteError(f"cannot reach {url}: {exc}") from exc
        if response.status_code != 200:
            try:
                body = response.json()
                raise RemoteError(str(body.get("error", response.text)), str(body.get("kind", "")))
            except (json.JSONDecodeError, ValueError):
                raise RemoteError(f"{url} returned {response.status_code}") from None
        return response.json()

    def ingest(self, request: IngestRequest) -> dict:
        if self.engine is not None:
            return service.do_ingest(self.engine, request).model_dump()
        return self._remote("POST", "/ingest", request.model_dump())

    def build(self) -> dict:
        if self.engine is not None:
            return service.do_build(self.engine, BuildRequest()).model_dump()
        return self._remote("POST", "/build", {})

    def query(self, request: QueryRequest) -> dict:
        if self.engine is not None:
            return service.do_query(self.engine, request).model_dump()
        return self._remote("POST", "/query", request.model_dump())

    def eval(self, request: EvalRequest) -> dict:
        if self.engine is not None:
            return service.do_eval(self.engine, request).model_dump()
        return self._remote("POST", "/eval", request.model_dump())


def emit(args: argparse.Namespace, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def cmd_ingest(args: argparse.Namespace, client: Client) -> int:
    request = IngestRequest(corpus_path=str(Path(args.corpus)), format=args.format, sample=args.sample)
    result = client.ingest(request)
    emit(
        args,
        result,
        f"{result['sessions']} sessions, {result['messages']} messages -> {result['path']}",
    )
    return 0


def cmd_build(args: argparse.Namespace, client: Client) -> int:
    result = client.build()
    emit(
        args,
        result,
        f"{result['views']} views, {result['scenes']} scenes across {result['characters']} "
        f"characters; {result['phrases']} phrases, {result['triples']} triples -> {result['path']}",
    )
    return 0


def cmd_query(args: argparse.Namespace, client: Client) -> int:
    request = QueryRequest(question=args.question, mode=args.mode, k=args.k, answer=args.answer)
    result = client.query(request)
    if args.json:
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0
    lines = [f"mode: {result['mode']}  k: {result['k']}"]
    for entry in result["evidence"]:
        first_line = entry["text"].splitlines()[0] if entry["text"] else ""
        lines.append(f"  {entry['origin']:<9} {entry['id']:<12} {entry['score']:.4f}  {first_line}")
    if not result["evidence"]:
        lines.append("  (no evidence)")
    if result.get("answer") is not None:
        lines.append(f"answer: {result['answer']}")
    print("\n".join(lines))
    return 0


def _report_filename(label: str) -> str:
    safe = re.sub(r"[^\w.=-]+", "_", label)
    return f"report_{safe}.json"


def cmd_eval(args: argparse.Namespace, client: Client) -> int:
    try:
        records = json.loads(Path(args.questions).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorpusParseError(f"cannot read questions file {args.questions}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"questions file is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise CorpusParseError("questions file must hold a JSON list of records")
    sweep_param, sweep_values = (None, [])
    if args.sweep:
        sweep_param, sweep_values = parse_sweep(args.sweep)
    request = EvalRequest(
        questions=records,
        repeats=args.repeats,
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        ablations=args.ablation,
        judge=not args.no_judge,
    )
    result = client.eval(request)
    out_dir = Path(args.out) if args.out else Path(args.workspace) / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for report in result["reports"]:
        path = out_dir / _report_filename(report["label"])
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(str(path))
    if args.json:
        print(json.dumps({**result, "files": written}, indent=2, sort_keys=True))
    else:
        print(result["table"])
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_serve(args: argparse.Namespace, config: EngineConfig) -> int:
    import uvicorn

    application = service.create_app(args.workspace, config)
    uvicorn.run(application, host=args.host, port=args.port)
    return 0


def run(args: argparse.Namespace) -> int:
    config = load_config(args)
    if args.command == "serve":
        return cmd_serve(args, config)
    client = Client(args, config)
    if args.command == "ingest":
        return cmd_ingest(args, client)
    if args.command == "build":
        return cmd_build(args, client)
    if args.command == "query":
        return cmd_query(args, client)
    if args.command == "eval":
        return cmd_eval(args, client)
    raise AssertionError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if exc.kind in USAGE_ERROR_KINDS else 1
    except (CorpusParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SceneMemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
