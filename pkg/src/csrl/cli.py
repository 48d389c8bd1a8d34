"""Command-line entry points.

Machine-readable JSON goes to stdout; logs (including the seed and the
config hash of every run) go to stderr. The seed resolution order is
``--seed`` flag, then the ``CSRL_SEED`` environment variable, then the
config file / default 0.

Exit codes for ``validate``: 0 clean, 1 violations found, 2 parse error.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import __version__
from .config import load_run_config
from .dialogue import compute_stats, validate_session
from .estimator import CsrlTagger
from .io import ParseError, partition_sessions, read_sessions, session_to_dict, write_jsonl
from .linearize import extract_triples, linearize
from .metrics import exact_match

logger = logging.getLogger("csrl")


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _resolve_seed(seed: int | None) -> int | None:
    if seed is not None:
        return seed
    env = os.environ.get("CSRL_SEED")
    return int(env) if env else None


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, ensure_ascii=False, indent=2)
    sys.stdout.write("\n")


def _checkpoint_hash(tagger: CsrlTagger) -> str:
    import hashlib

    payload = json.dumps(tagger.config_.to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


@click.group()
@click.version_option(version=__version__, prog_name="csrl")
@click.option("--verbose", is_flag=True, help="Debug logging on stderr.")
def main(verbose: bool) -> None:
    """Conversational semantic role labeling toolkit."""
    _setup_logging(verbose)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def validate(path: str) -> None:
    """Check a JSONL corpus against the annotation criteria."""
    try:
        sessions = read_sessions(path)
    except ParseError as exc:
        _emit({"error": str(exc), "line": exc.line_number})
        raise SystemExit(2)
    violations = [v.to_dict() for s in sessions for v in validate_session(s)]
    _emit({"sessions": len(sessions), "violations": violations})
    raise SystemExit(0 if not violations else 1)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def stats(path: str) -> None:
    """Corpus statistics: role proportions, cross ratios, sizes."""
    sessions = read_sessions(path)
    _emit(compute_stats(sessions).to_dict())


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Overrides config/CSRL_SEED.")
@click.option("--no-span-loss", is_flag=True, help="Drop the mention span loss.")
@click.option("--no-turn-indicator", is_flag=True)
@click.option("--no-speaker-indicator", is_flag=True)
def train(
    config_path: str,
    seed: int | None,
    no_span_loss: bool,
    no_turn_indicator: bool,
    no_speaker_indicator: bool,
) -> None:
    """Train a tagger per the run config and write its checkpoint."""
    run = load_run_config(config_path, seed_override=_resolve_seed(seed))
    logger.info("seed=%s config_hash=%s", run.seed, run.config_hash())
    sessions = read_sessions(run.paths["train"])
    if "dev" in run.paths:
        dev = read_sessions(run.paths["dev"])
    elif run.training.dev_split > 0:
        sessions, dev, _ = partition_sessions(
            sessions,
            seed=run.seed,
            train=1.0 - run.training.dev_split,
            dev=run.training.dev_split,
        )
        logger.info(
            "hash-partitioned corpus: %d train / %d dev", len(sessions), len(dev)
        )
        if not dev:
            logger.warning("dev partition came out empty; continuing without one")
            dev = None
    else:
        dev = None

    model = run.model.to_dict()
    model["seed"] = run.seed
    if no_span_loss:
        model["span_loss_weight"] = 0.0
    if no_turn_indicator:
        model["use_turn_indicator"] = False
    if no_speaker_indicator:
        model["use_speaker_indicator"] = False
    tagger = CsrlTagger(
        **model,
        epochs=run.training.epochs,
        batch_size=run.training.batch_size,
        learning_rate=run.training.learning_rate,
        eval_every=run.training.eval_every,
        early_stop_f1=run.training.early_stop_f1,
    )
    tagger.fit(sessions, dev_sessions=dev)
    checkpoint = run.paths["checkpoint"]
    Path(checkpoint).parent.mkdir(parents=True, exist_ok=True)
    tagger.save(checkpoint)
    _emit(
        {
            "checkpoint": checkpoint,
            "seed": run.seed,
            "config_hash": run.config_hash(),
            "epochs_run": len(tagger.history_),
            "final_loss": tagger.history_[-1]["loss"],
        }
    )


@main.command("eval")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
def eval_cmd(checkpoint: str, path: str, seed: int | None) -> None:
    """Score a checkpoint: F1_all / F1_intra / F1_cross."""
    seed = _resolve_seed(seed) or 0
    tagger = CsrlTagger.load(checkpoint)
    logger.info("seed=%s config_hash=%s", seed, _checkpoint_hash(tagger))
    sessions = read_sessions(path)
    report = tagger.evaluate(sessions)
    _emit(
        {
            "seed": seed,
            "fractions": report.to_dict(),
            "percent": report.to_dict(percent=True),
        }
    )


@main.command()
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(), default=None)
def predict(checkpoint: str, path: str, output: str | None) -> None:
    """Predict one frame per gold predicate; emits session JSONL."""
    tagger = CsrlTagger.load(checkpoint)
    logger.info("seed=%s config_hash=%s", _resolve_seed(None) or 0, _checkpoint_hash(tagger))
    sessions = read_sessions(path)
    predicted = tagger.predict(sessions)
    records = [
        session_to_dict(s, frames=frames) for s, frames in zip(sessions, predicted)
    ]
    if output:
        write_jsonl(output, records)
        logger.info("wrote %d sessions to %s", len(records), output)
    else:
        for record in records:
            sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")


@main.command("linearize")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", type=click.Choice(["bi", "triple"]), default="triple")
@click.option("--order-seed", type=int, default=0, help="0 = canonical order.")
@click.option("--no-attend-z", is_flag=True, help="Deny all attention into Z.")
@click.option("-o", "--output", type=click.Path(), default=None)
def linearize_cmd(
    path: str, mask: str, order_seed: int, no_attend_z: bool, output: str | None
) -> None:
    """Linearize each session's triples + context for generation.

    The last utterance plays the response; earlier turns are the context.
    """
    sessions = read_sessions(path)
    records = []
    for session in sessions:
        if session.n_turns < 2:
            logger.warning("skipping %s: needs >= 2 turns", session.session_id)
            continue
        triples = extract_triples(session, order_seed=order_seed)
        response = session.utterances[-1]
        built = linearize(
            triples,
            session.utterances[:-1],
            response.tokens,
            mask_kind=mask,  # type: ignore[arg-type]
            response_speaker=response.speaker,
            attend_z=not no_attend_z,
        )
        records.append({"session_id": session.session_id, **built.to_json_dict()})
    logger.info("linearized %d sessions (mask=%s, order_seed=%d)", len(records), mask, order_seed)
    if output:
        write_jsonl(output, records)
    else:
        for record in records:
            sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")


@main.command("rewrite-demo")
@click.option("--mask", type=click.Choice(["bi", "triple"]), default="triple")
@click.option("--seed", type=int, default=None)
@click.option("--epochs", type=int, default=300)
def rewrite_demo(mask: str, seed: int | None, epochs: int) -> None:
    """Overfit the compact generator on the built-in synthetic rewrite
    set and report exact match."""
    from .rewriter import RewriteGenerator
    from .synthetic import rewrite_demo_items

    seed = _resolve_seed(seed) or 0
    logger.info("seed=%s mask=%s epochs=%s", seed, mask, epochs)
    items = rewrite_demo_items()
    generator = RewriteGenerator(mask_kind=mask, seed=seed, epochs=epochs)  # type: ignore[arg-type]
    generator.fit(items)
    outputs = [
        generator.generate(it.triples, it.context, it.response_speaker)
        for it in items
    ]
    em = exact_match([list(it.target) for it in items], outputs)
    _emit(
        {
            "seed": seed,
            "mask": mask,
            "exact_match": em,
            "items": [
                {"target": list(it.target), "generated": out}
                for it, out in zip(items, outputs)
            ],
        }
    )


@main.command("import-duconv")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path())
def import_duconv(source: str, output: str) -> None:
    """Convert a paragraph-indexed release file to session JSONL."""
    from .adapters.duconv import convert_file

    records = [session_to_dict(s) for s in convert_file(source)]
    write_jsonl(output, records)
    logger.info("imported %d sessions to %s", len(records), output)


if __name__ == "__main__":
    main()
