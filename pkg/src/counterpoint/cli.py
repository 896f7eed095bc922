"""Command-line interface.

Five subcommands: annotate, context, qa, analyze, serve. Errors print one
JSON object per line on stderr ({"code", "message"}) and exit 1, except
provider failures which exit 2 so batch callers can retry those separately.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .analytics import Measure, compare_conditions, load_study_records
from .annotate import CounterParseFailure, annotate
from .api import create_app
from .config import AppConfig, ConfigError, load_config
from .context import SearchUnavailable, fetch_context, search_provider_from_env, summarize_context
from .core import EmptyDocument, Lean, ingest_document
from .gateway import GatewayError, gateway_from_env
from .ragqa import QaConversation, answer, build_index
from .storage import StorageError, annotations_to_dict, context_to_dict

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PROVIDER = 2


def _emit_error(code: str, message: str) -> None:
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)


def _read_document(path: str, title: str | None, lean: str):
    text = Path(path).read_text(encoding="utf-8")
    return ingest_document(text, title if title else Path(path).stem, lean=Lean(lean))


def _spans_only(payload: dict) -> dict:
    return {
        "doc_id": payload["document"]["doc_id"],
        "claims": [
            {
                "claim_id": claim["claim_id"],
                "start": claim["span"]["start"],
                "end": claim["span"]["end"],
                "match_kind": claim["match_kind"],
            }
            for claim in payload["claims"]
        ],
    }


def cmd_annotate(args: argparse.Namespace, config: AppConfig) -> int:
    doc = _read_document(args.file, args.title, args.lean)
    gateway = gateway_from_env()
    annotated = annotate(doc, gateway, fuzzy_threshold=config.pipeline.fuzzy_threshold)
    payload = annotations_to_dict(annotated)
    if args.format == "spans-only":
        payload = _spans_only(payload)
    rendered = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(rendered + "\n", encoding="utf-8")
    else:
        print(rendered)
    return EXIT_OK


def cmd_context(args: argparse.Namespace, config: AppConfig) -> int:
    doc = _read_document(args.file, args.title, args.lean)
    gateway = gateway_from_env()
    provider = search_provider_from_env()
    snippets = fetch_context(doc.title, provider, limit=config.pipeline.snippet_count)
    summary = summarize_context(doc, snippets, gateway)
    print(json.dumps(context_to_dict(summary), ensure_ascii=False, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_qa(args: argparse.Namespace, config: AppConfig) -> int:
    doc = _read_document(args.file, args.title, args.lean)
    gateway = gateway_from_env()
    index, chunks = build_index(
        doc, gateway, size=config.pipeline.chunk_size, overlap=config.pipeline.chunk_overlap
    )
    conversation = QaConversation(conversation_id="cli", doc_id=doc.doc_id)
    updated = answer(
        doc, index, chunks, conversation, args.question, gateway, k=config.pipeline.top_k
    )
    bot_turn = updated.turns[-1]
    print(
        json.dumps(
            {
                "question": args.question,
                "answer": bot_turn.text,
                "cited_chunks": list(bot_turn.cited_chunks),
            },
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        )
    )
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, config: AppConfig) -> int:
    records = load_study_records(args.csv)
    comparisons = compare_conditions(records, Measure(args.measure))
    if args.json:
        rows = [
            {
                "lean": c.lean.value,
                "measure": c.measure.value,
                "n_baseline": c.n_baseline,
                "n_system": c.n_system,
                "u": c.result.u,
                "method": c.result.method.value,
                "p": c.result.p_two_sided,
                "significant": c.significant,
            }
            for c in comparisons
        ]
        print(json.dumps(rows, sort_keys=True, indent=2))
        return EXIT_OK
    header = f"{'lean':<9}{'n_base':>7}{'n_sys':>7}{'U':>9}{'method':>15}{'p':>12}  sig"
    print(header)
    print("-" * len(header))
    for c in comparisons:
        flag = "*" if c.significant else ""
        print(
            f"{c.lean.value:<9}{c.n_baseline:>7}{c.n_system:>7}"
            f"{c.result.u:>9.1f}{c.result.method.value:>15}{c.result.p_two_sided:>12.6f}  {flag}"
        )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, config: AppConfig) -> int:
    import uvicorn

    service = replace(
        config.service,
        port=args.port if args.port is not None else config.service.port,
        host=args.host if args.host is not None else config.service.host,
        data_dir=args.data_dir if args.data_dir is not None else config.service.data_dir,
    )
    config = replace(config, service=service)
    app = create_app(config)
    app.state.service.resume_incomplete()
    uvicorn.run(app, host=service.host, port=service.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="counterpoint",
        description="Claim and counter-argument pipeline for opinion articles.",
    )
    parser.add_argument("--config", help="path to a JSON config file")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_document_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("file", help="path to the article text")
        sub.add_argument("--title", help="article title (default: file stem)")
        sub.add_argument(
            "--lean", default="unknown", choices=[lean.value for lean in Lean]
        )

    annotate_cmd = commands.add_parser("annotate", help="extract claims and counters")
    add_document_args(annotate_cmd)
    annotate_cmd.add_argument("--out", help="write JSON here instead of stdout")
    annotate_cmd.add_argument("--format", default="full", choices=["full", "spans-only"])
    annotate_cmd.set_defaults(func=cmd_annotate)

    context_cmd = commands.add_parser("context", help="summarize background context")
    add_document_args(context_cmd)
    context_cmd.set_defaults(func=cmd_context)

    qa_cmd = commands.add_parser("qa", help="one-shot grounded question answering")
    add_document_args(qa_cmd)
    qa_cmd.add_argument("--question", required=True)
    qa_cmd.set_defaults(func=cmd_qa)

    analyze_cmd = commands.add_parser("analyze", help="condition comparison over a study CSV")
    analyze_cmd.add_argument("csv", help="study records CSV")
    analyze_cmd.add_argument(
        "--measure", required=True, choices=[measure.value for measure in Measure]
    )
    analyze_cmd.add_argument("--json", action="store_true", help="machine-readable output")
    analyze_cmd.set_defaults(func=cmd_analyze)

    serve_cmd = commands.add_parser("serve", help="run the HTTP API")
    serve_cmd.add_argument("--port", type=int)
    serve_cmd.add_argument("--host")
    serve_cmd.add_argument("--data-dir")
    serve_cmd.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except (GatewayError, CounterParseFailure) as exc:
        _emit_error("ProviderUnavailable", str(exc))
        return EXIT_PROVIDER
    except SearchUnavailable as exc:
        _emit_error("SearchUnavailable", str(exc))
        return EXIT_PROVIDER
    except (EmptyDocument, ConfigError, StorageError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
