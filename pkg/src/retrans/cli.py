"""Command-line orchestration for sessions, sweeps, metrics, and reports.

Subcommands:

* ``simulate``  -- run one session per utterance, writing revision logs.
* ``sweep``     -- run the K x F grid over a corpus; emit CSV + JSON rows
  and trade-off figures.
* ``metrics``   -- score previously written logs against their corpus.
* ``lexicon``   -- train a word-translation lexicon from a parallel corpus.
* ``significance`` -- paired sign-flip test between two score files.
* ``augment``   -- prefix-sampling data augmentation of a corpus.
* ``synth``     -- generate the deterministic synthetic corpus + dictionary.

The decoder is chosen with ``--decoder`` (``echo``, ``beam``, or
``exec:<command line>``); when the flag is absent the RETRANS_DECODER_CMD
environment variable names an external decoder command, and the built-in
echo decoder is the fallback.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import PrefixAugmentConfig, augment_prefixes, load_corpus, save_corpus
from .decode import (
    DEFAULT_MAX_TOKENS,
    Decoder,
    EchoLexiconDecoder,
    ExternalDecoder,
    MaskPolicy,
    NoisyBeamDecoder,
)
from .errors import CorpusError, DecoderError, DecoderResolutionError, SessionError
from .metrics import (
    SignificanceConfig,
    corpus_report,
    load_lexicon,
    reference_pairs,
    save_lexicon,
    session_report,
    significance,
    train_lexicon,
)
from .schedule import InterleavePolicy
from .stream import SessionConfig, load_log, run_session, save_log
from .synthetic import load_dictionary, save_dictionary, synthetic_corpus, synthetic_dictionary

DECODER_ENV_VAR = "RETRANS_DECODER_CMD"

DEFAULT_K_GRID = (0, 1, 2, 3, 4, 5, 7, 10, 100)
DEFAULT_F_GRID = (0, 1, 2, 3, 4, 5, 7, 10, 15, 20, 25, 100)

CSV_COLUMNS = (
    "k,f,bleu,wer,al_translation,al_transcript,ne_combined,ne_transcript,"
    "ne_translation,consistency,incremental_consistency,utterances"
)


@dataclass(frozen=True)
class DecoderSpec:
    """Picklable recipe for building a decoder inside worker processes."""

    kind: str  # "echo" | "beam" | "exec"
    command: str = ""
    dict_path: str = ""
    reorder_window: int = 0
    lookahead: int = 0

    def build(self) -> Decoder:
        if self.kind == "echo":
            dictionary = load_dictionary(self.dict_path) if self.dict_path else {}
            return EchoLexiconDecoder(
                dictionary=dictionary,
                reorder_window=self.reorder_window,
                lookahead=self.lookahead,
            )
        if self.kind == "beam":
            if not self.dict_path:
                raise DecoderResolutionError("the beam decoder needs --dict <lexicon.tsv>")
            return NoisyBeamDecoder.from_tsv(self.dict_path)
        if self.kind == "exec":
            return ExternalDecoder(self.command)
        raise DecoderResolutionError(f"unknown decoder kind {self.kind!r}")


def resolve_decoder_spec(args: argparse.Namespace) -> DecoderSpec:
    name = getattr(args, "decoder", None)
    if not name:
        env_cmd = os.environ.get(DECODER_ENV_VAR, "")
        if env_cmd:
            return DecoderSpec(kind="exec", command=env_cmd)
        name = "echo"
    if name.startswith("exec:"):
        command = name[len("exec:"):].strip()
        if not command:
            raise DecoderResolutionError("empty command in exec: decoder spec")
        return DecoderSpec(kind="exec", command=command)
    if name in ("echo", "beam"):
        return DecoderSpec(
            kind=name,
            dict_path=getattr(args, "dict", "") or "",
            reorder_window=getattr(args, "reorder_window", 0),
            lookahead=getattr(args, "lookahead", 0),
        )
    raise DecoderResolutionError(
        f"unknown decoder {name!r}; use 'echo', 'beam', or 'exec:<command>'"
    )


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep settings; defaults are the full published K/F value grids."""

    decoder_spec: DecoderSpec
    k_values: tuple[int, ...] = DEFAULT_K_GRID
    f_values: tuple[int, ...] = DEFAULT_F_GRID
    gamma: float = 0.0
    chunk_ms: int = 500
    beam_size: int = 5
    max_tokens: int = DEFAULT_MAX_TOKENS
    parallelism: int = 1
    em_iterations: int = 10

    def __post_init__(self) -> None:
        if not self.k_values or not self.f_values:
            raise ValueError("k_values and f_values must be nonempty")
        if any(k < 0 for k in self.k_values) or any(f < 0 for f in self.f_values):
            raise ValueError("grid values must be nonnegative")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def _session_config(cfg: SweepConfig, k: int, f: int) -> SessionConfig:
    return SessionConfig(
        mask=MaskPolicy.uniform(k),
        free_tokens=f,
        chunk_ms=cfg.chunk_ms,
        policy=InterleavePolicy(cfg.gamma),
        beam_size=cfg.beam_size,
        max_tokens=cfg.max_tokens,
    )


def _sweep_cell(task) -> dict:
    utterances, cfg, k, f, lex_st, lex_ts = task
    decoder = cfg.decoder_spec.build()
    try:
        pairs = [
            (utt, run_session(utt, decoder, _session_config(cfg, k, f))) for utt in utterances
        ]
    finally:
        decoder.close()
    report = corpus_report(pairs, lex_st, lex_ts)
    row = {"k": k, "f": f}
    for key, value in report.to_dict().items():
        name = {
            "al_translation_sec": "al_translation",
            "al_transcript_sec": "al_transcript",
        }.get(key, key)
        row[name] = 0.0 if value is None else value
    row["utterances"] = len(utterances)
    return row


def run_sweep(utterances, cfg: SweepConfig) -> list[dict]:
    """Run every (K, F) configuration and return one metrics row per cell."""
    lex_st = train_lexicon(reference_pairs(utterances), cfg.em_iterations, "src2tgt")
    lex_ts = train_lexicon(reference_pairs(utterances), cfg.em_iterations, "tgt2src")
    cells = [(k, f) for k in sorted(cfg.k_values) for f in sorted(cfg.f_values)]
    tasks = [(utterances, cfg, k, f, lex_st, lex_ts) for k, f in cells]
    if cfg.parallelism > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            rows = list(pool.map(_sweep_cell, tasks))
    else:
        rows = [_sweep_cell(task) for task in tasks]
    rows.sort(key=lambda r: (r["k"], r["f"]))
    return rows


ROW_ORDER = (
    "k", "f", "bleu", "wer", "al_translation", "al_transcript", "ne_combined",
    "ne_transcript", "ne_translation", "consistency", "incremental_consistency",
    "utterances",
)


def format_sweep_csv(rows: list[dict]) -> str:
    lines = [CSV_COLUMNS]
    for row in rows:
        cells = []
        for name in ROW_ORDER:
            value = row[name]
            cells.append(str(value) if isinstance(value, int) else f"{value:.6f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _safe_filename(utterance_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", utterance_id)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, args.format)
    spec = resolve_decoder_spec(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SessionConfig(
        mask=MaskPolicy.uniform(args.k),
        free_tokens=args.f,
        chunk_ms=args.chunk_ms,
        policy=InterleavePolicy(args.gamma),
        beam_size=args.beam,
        max_tokens=args.max_tokens,
    )
    decoder = spec.build()
    try:
        for utt in corpus:
            path = out_dir / f"{_safe_filename(utt.id)}.jsonl"
            try:
                log = run_session(utt, decoder, config)
            except SessionError as exc:
                if exc.partial_log is not None:
                    save_log(exc.partial_log, path)
                print(f"error: {exc}", file=sys.stderr)
                return 2
            save_log(log, path)
    finally:
        decoder.close()
    print(f"wrote {len(corpus)} revision logs to {out_dir}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, args.format)
    spec = resolve_decoder_spec(args)
    cfg = SweepConfig(
        decoder_spec=spec,
        k_values=tuple(args.k_grid),
        f_values=tuple(args.f_grid),
        gamma=args.gamma,
        chunk_ms=args.chunk_ms,
        beam_size=args.beam,
        max_tokens=args.max_tokens,
        parallelism=args.jobs,
        em_iterations=args.em_iterations,
    )
    rows = run_sweep(corpus, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    csv_path.write_text(format_sweep_csv(rows), encoding="utf-8")
    mirror = {
        "gamma": cfg.gamma,
        "chunk_ms": cfg.chunk_ms,
        "decoder": spec.kind if spec.kind != "exec" else spec.command,
        "k_values": sorted(cfg.k_values),
        "f_values": sorted(cfg.f_values),
        "rows": rows,
    }
    (out_dir / "sweep.json").write_text(json.dumps(mirror, indent=2) + "\n", encoding="utf-8")
    if not args.no_plots:
        from .report import render_sweep_figures

        figures = render_sweep_figures(rows, out_dir / "figures")
        print(f"wrote {csv_path} ({len(rows)} rows) and {len(figures)} figures")
    else:
        print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, args.format)
    by_id = {utt.id: utt for utt in corpus}
    logs_dir = Path(args.logs)
    pairs = []
    for path in sorted(logs_dir.glob("*.jsonl")):
        log = load_log(path)
        utt = by_id.get(log.utterance_id)
        if utt is None:
            print(f"warning: no utterance {log.utterance_id!r} in corpus; skipping", file=sys.stderr)
            continue
        pairs.append((utt, log))
    if not pairs:
        print(f"error: no usable logs in {logs_dir}", file=sys.stderr)
        return 1
    if args.lex_st and args.lex_ts:
        lex_st, lex_ts = load_lexicon(args.lex_st), load_lexicon(args.lex_ts)
    else:
        lex_st = train_lexicon(reference_pairs(corpus), args.em_iterations, "src2tgt")
        lex_ts = train_lexicon(reference_pairs(corpus), args.em_iterations, "tgt2src")
    payload = {
        "aggregate": corpus_report(pairs, lex_st, lex_ts).to_dict(),
        "per_utterance": {
            utt.id: session_report(utt, log, lex_st, lex_ts).to_dict() for utt, log in pairs
        },
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_lexicon(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, args.format)
    lexicon = train_lexicon(
        reference_pairs(corpus), args.iterations, args.direction, args.floor_prob
    )
    save_lexicon(lexicon, args.out)
    print(f"wrote {args.out} ({len(lexicon.probs)} source words, {args.iterations} EM iterations)")
    return 0


def _read_scores(path: str) -> list[float]:
    return [float(line) for line in Path(path).read_text(encoding="utf-8").split()]


def cmd_significance(args: argparse.Namespace) -> int:
    scores_a = _read_scores(args.scores_a)
    scores_b = _read_scores(args.scores_b)
    cfg = SignificanceConfig(alpha=args.alpha, resamples=args.resamples, seed=args.seed)
    result = significance(scores_a, scores_b, cfg)
    print(f"p={result.p_value:.4f} statistically_same={result.statistically_same}")
    if args.out:
        Path(args.out).write_text(
            json.dumps({"p_value": result.p_value, "statistically_same": result.statistically_same})
            + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, args.format)
    cfg = PrefixAugmentConfig(seed=args.seed)
    augmented = augment_prefixes(corpus, cfg)
    save_corpus(augmented, args.out)
    print(
        f"wrote {len(augmented)} utterances to {args.out} "
        f"(recommended_start_epoch={cfg.recommended_start_epoch})"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    corpus = synthetic_corpus(
        n_utterances=args.utterances,
        seed=args.seed,
        vocab_size=args.vocab_size,
        min_tokens=args.min_tokens,
        max_tokens=args.max_len,
        token_sec=args.token_sec,
    )
    save_corpus(corpus, args.out)
    if args.dict_out:
        save_dictionary(synthetic_dictionary(args.vocab_size), args.dict_out)
        print(f"wrote {len(corpus)} utterances to {args.out} and dictionary to {args.dict_out}")
    else:
        print(f"wrote {len(corpus)} utterances to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_corpus_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus file (JSONL or TSV)")
    p.add_argument("--format", choices=("jsonl", "tsv"), default=None, help="corpus format (default: by suffix)")


def _add_decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--decoder",
        default=None,
        help=f"'echo', 'beam', or 'exec:<command>' (default: ${DECODER_ENV_VAR} or echo)",
    )
    p.add_argument("--dict", default=None, help="dictionary/lexicon TSV for the toy decoders")
    p.add_argument("--reorder-window", type=int, default=0, help="echo decoder reordering window")
    p.add_argument("--lookahead", type=int, default=0, help="echo decoder lookahead guesses")
    p.add_argument("--beam", type=int, default=5, help="beam size")
    p.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)


def _add_session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=0.0, help="interleaving ratio in [0, 1]")
    p.add_argument("--chunk-ms", type=int, default=500, help="source chunk size in milliseconds")


def _grid(text: str) -> list[int]:
    values = [int(v) for v in text.split(",") if v.strip() != ""]
    if not values:
        raise argparse.ArgumentTypeError("grid must contain at least one value")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrans",
        description="Streaming re-translation simulator and evaluation toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one streaming session per utterance")
    _add_corpus_arg(p)
    _add_decoder_args(p)
    _add_session_args(p)
    p.add_argument("--k", type=int, default=0, help="mask size per stream")
    p.add_argument("--f", type=int, default=DEFAULT_MAX_TOKENS, help="free tokens per stream")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for revision logs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the K x F grid and emit trade-off curves")
    _add_corpus_arg(p)
    _add_decoder_args(p)
    _add_session_args(p)
    p.add_argument("--k-grid", type=_grid, default=list(DEFAULT_K_GRID), help="comma-separated K values")
    p.add_argument("--f-grid", type=_grid, default=list(DEFAULT_F_GRID), help="comma-separated F values")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--em-iterations", type=int, default=10)
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="score saved revision logs against a corpus")
    _add_corpus_arg(p)
    p.add_argument("--logs", required=True, help="directory of revision log JSONL files")
    p.add_argument("--lex-st", default=None, help="source->target lexicon TSV")
    p.add_argument("--lex-ts", default=None, help="target->source lexicon TSV")
    p.add_argument("--em-iterations", type=int, default=10)
    p.add_argument("--out", default=None, help="output JSON file (default: stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("lexicon", help="train a word-translation lexicon by EM")
    _add_corpus_arg(p)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--direction", choices=("src2tgt", "tgt2src"), default="src2tgt")
    p.add_argument("--floor-prob", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="output lexicon TSV")
    p.set_defaults(func=cmd_lexicon)

    p = sub.add_parser("significance", help="paired sign-flip randomization test")
    p.add_argument("--scores-a", required=True, help="per-segment scores, one per line")
    p.add_argument("--scores-b", required=True, help="per-segment scores, one per line")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional output JSON file")
    p.set_defaults(func=cmd_significance)

    p = sub.add_parser("augment", help="prefix-sampling augmentation (doubles the corpus)")
    _add_corpus_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("synth", help="generate a synthetic corpus and dictionary")
    p.add_argument("--utterances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab-size", type=int, default=40)
    p.add_argument("--min-tokens", type=int, default=6)
    p.add_argument("--max-len", type=int, default=14)
    p.add_argument("--token-sec", type=float, default=0.3)
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.add_argument("--dict-out", default=None, help="optional dictionary TSV")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CorpusError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return 3
    except (DecoderError, SessionError) as exc:
        print(f"decoder error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
