"""Command-line front end.

Exit codes: 0 reconciled frame (or finished command), 1 usage or protocol
error, 2 discarded frame, 3 transport failure. Reports go to stdout as JSON,
human-readable summaries to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .adversary import passive_attack
from .channel import SeededRng, make_frame
from .codec import as_bits, derive_halfwidth, encode
from .harness import (
    DEFAULT_QBER_GRID,
    DEFAULT_RANGE_GRID,
    QBER_SWEEP,
    RANGE_SWEEP,
    SweepSpec,
    emit_table,
    run_sweep,
)
from .peer import TransportError, run_peer
from .reconciliation import DEFAULT_MAX_ITERATIONS, SessionConfig, TranscriptEntry, reconcile
from .tpm import Rule, TpmParams
from .wire import ProtocolError

EXIT_OK, EXIT_USAGE, EXIT_DISCARDED, EXIT_TRANSPORT = 0, 1, 2, 3
TRANSCRIPT_FORMAT = "tpm-transcript/1"
DEFAULT_QBER = 0.01


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_network_flags(p: argparse.ArgumentParser, block_bits: bool = True) -> None:
    p.add_argument("--tpm-k", type=_positive, default=10, help="hidden units K")
    p.add_argument("--tpm-n", type=_positive, default=15, help="inputs per hidden unit N")
    if block_bits:
        p.add_argument("--block-bits", type=_positive, default=4, help="bits per weight b (L = 2^(b-1))")
    p.add_argument("--rule", choices=[r.value for r in Rule], default=Rule.HEBBIAN.value, help="learning rule")
    p.add_argument("--max-iterations", type=_positive, default=DEFAULT_MAX_ITERATIONS, help="iteration cap per frame")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit base seed")


def _session_config(args, record: bool = False) -> SessionConfig:
    try:
        L = derive_halfwidth(args.block_bits)
        params = TpmParams(args.tpm_k, args.tpm_n, L, Rule(args.rule))
        return SessionConfig(params, args.block_bits, args.max_iterations, record)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_transcript(path: str, config: SessionConfig, report) -> None:
    p = config.params
    doc = {
        "format": TRANSCRIPT_FORMAT,
        "params": {"K": p.K, "N": p.N, "L": p.L, "rule": p.rule.value},
        "b": config.b,
        "alice_bits": report.alice_bits,
        "transcript": [e.to_dict() for e in report.transcript],
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def _print_report(report, label: str) -> int:
    print(json.dumps(report.to_dict(include_transcript=False), indent=2))
    status = "reconciled" if report.success else "discarded"
    print(
        f"{label}: {status} after {report.rounds} rounds, {report.total_iterations} iterations, "
        f"entropy loss {report.entropy_loss:.4f}",
        file=sys.stderr,
    )
    return EXIT_OK if report.success else EXIT_DISCARDED


def cmd_reconcile(args) -> int:
    config = _session_config(args, record=args.transcript_out is not None)
    rng = SeededRng(args.seed)
    alice, bob = make_frame(config.key_length, args.qber, rng)
    report = reconcile(alice, bob, config, rng)
    if args.transcript_out:
        _write_transcript(args.transcript_out, config, report)
    return _print_report(report, "frame")


def cmd_sweep(args) -> int:
    try:
        if args.kind == QBER_SWEEP:
            spec = SweepSpec(
                QBER_SWEEP, args.grid, K=args.tpm_k, N=args.tpm_n, b=args.block_bits,
                trials=args.trials, seed=args.seed, rule=args.rule, max_iterations=args.max_iterations,
            )
        else:
            spec = SweepSpec(
                RANGE_SWEEP, args.grid, K=args.tpm_k, N=args.tpm_n, qber=args.qber,
                trials=args.trials, seed=args.seed, rule=args.rule, max_iterations=args.max_iterations,
            )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = args.out or f"{args.kind}_sweep.{args.format}"
    table = run_sweep(spec, args.threads)
    try:
        emit_table(table, args.format, out)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(out)
    return EXIT_OK


def _load_key(path: str, config: SessionConfig):
    try:
        key = as_bits(Path(path).read_text(encoding="ascii").strip())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read key file {path}: {exc}") from None
    if key.size != config.key_length:
        raise UsageError(f"key file holds {key.size} bits, expected {config.key_length}")
    return key


def cmd_peer(args) -> int:
    config = _session_config(args, record=args.transcript_out is not None)
    rng = SeededRng(args.seed)
    if args.key_file:
        key = _load_key(args.key_file, config)
    else:
        # both peers derive the same frame from the shared seed; each keeps its own half
        alice, bob = make_frame(config.key_length, args.qber, rng)
        key = alice if args.role == "alice" else bob
    endpoint = args.listen or args.connect
    try:
        report = run_peer(
            args.role, endpoint, config, key, rng,
            listen=args.listen is not None, session_id=args.session_id, timeout=args.timeout,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.transcript_out and args.role == "alice":
        _write_transcript(args.transcript_out, config, report)
    return _print_report(report, args.role)


def cmd_attack(args) -> int:
    try:
        doc = json.loads(Path(args.transcript).read_text(encoding="utf-8"))
        if doc.get("format") != TRANSCRIPT_FORMAT:
            raise ValueError(f"unsupported transcript format {doc.get('format')!r}")
        p = doc["params"]
        params = TpmParams(p["K"], p["N"], p["L"], Rule(p["rule"]))
        target = encode(doc["alice_bits"], doc["b"], params.K, params.N)
        transcript = [TranscriptEntry.from_dict(e) for e in doc["transcript"]]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot load transcript {args.transcript}: {exc}") from None
    result = passive_attack(transcript, params, args.eve_seed, target)
    print(json.dumps(result.to_dict(), indent=2))
    print(
        f"eve: overlap {result.overlap:.3f} after {result.iterations_observed} observed iterations, "
        f"synchronized={result.synchronized}",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="tpm-reconcile", description=__doc__.split("\n")[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log protocol progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconcile", help="reconcile one simulated frame", formatter_class=fmt)
    _add_network_flags(p)
    p.add_argument("--qber", type=_probability, default=DEFAULT_QBER, help="bit flip rate between the raw keys")
    p.add_argument("--transcript-out", metavar="PATH", help="write the public transcript as JSON")
    p.set_defaults(func=cmd_reconcile)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep", formatter_class=fmt)
    kinds = p.add_subparsers(dest="kind", required=True)
    for kind in (QBER_SWEEP, RANGE_SWEEP):
        if kind == QBER_SWEEP:
            k = kinds.add_parser(kind, help="sweep QBER at fixed block size", formatter_class=fmt)
            _add_network_flags(k)
            k.add_argument("--grid", type=_float_list, default=DEFAULT_QBER_GRID, help="comma-separated QBER values")
        else:
            k = kinds.add_parser(kind, help="sweep the weight half-width L at fixed QBER", formatter_class=fmt)
            _add_network_flags(k, block_bits=False)
            k.add_argument("--qber", type=_probability, default=0.15, help="fixed QBER")
            k.add_argument("--grid", type=_int_list, default=DEFAULT_RANGE_GRID, help="comma-separated powers of two")
        k.add_argument("--trials", type=_positive, default=1000, help="frames per grid point")
        k.add_argument("--format", choices=("csv", "json"), default="csv")
        k.add_argument("--out", metavar="PATH", help="output file (default: <kind>_sweep.<format>)")
        k.add_argument("--threads", type=int, default=None,
                       help="worker processes, 0 = all cores (default: $TPM_RECONCILE_THREADS or 1)")
        k.set_defaults(func=cmd_sweep)

    p = sub.add_parser("peer", help="run one side of a networked session", formatter_class=fmt)
    _add_network_flags(p)
    p.add_argument("--role", choices=("alice", "bob"), required=True)
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--listen", metavar="HOST:PORT")
    where.add_argument("--connect", metavar="HOST:PORT")
    p.add_argument("--qber", type=_probability, default=DEFAULT_QBER,
                   help="flip rate used to derive the shared simulated frame")
    p.add_argument("--key-file", metavar="PATH", help="read this side's raw key (ASCII 0/1) instead of simulating")
    p.add_argument("--session-id", type=_seed, default=0)
    p.add_argument("--timeout", type=float, default=30.0, help="socket timeout in seconds")
    p.add_argument("--transcript-out", metavar="PATH", help="(alice) write the public transcript as JSON")
    p.set_defaults(func=cmd_peer)

    p = sub.add_parser("attack", help="replay a transcript as a passive eavesdropper", formatter_class=fmt)
    p.add_argument("--transcript", required=True, metavar="PATH")
    p.add_argument("--eve-seed", type=_seed, default=1, help="seed for Eve's initial weights")
    p.set_defaults(func=cmd_attack)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
