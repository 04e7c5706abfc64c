"""Command-line pipeline: ``distance``, ``mask``, ``attend`` and ``check``.

Per-line work runs in a process pool when ``--jobs`` > 1; results are
always emitted in input order.  Any failing line makes the exit status
nonzero, but processing continues so that every failure is reported.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import __version__
from .attention import AttentionConfig, AttentionLayer, checksum, encoder_forward_cache, gradient_check
from .distance import DEFAULT_SENTINEL, concat_sentences, finalize, generate_distances, verify_sign_property
from .errors import SyntaxAttnError
from .localrange import LocalRangeMask, induce_from_distances, masks_equal, range_from_tree
from .maskfile import encode_mask, read_mask
from .softmask import DEFAULT_TAU, build_soft_mask
from .treebank import iter_tree_lines, parse_ptb

GRADCHECK_TOLERANCE = 1e-5


def _pmap(func: Callable, items: Sequence, jobs: int) -> Iterator:
    if jobs <= 1 or len(items) <= 1:
        return map(func, items)
    executor = ProcessPoolExecutor(max_workers=jobs)
    chunk = max(1, len(items) // (4 * jobs))
    try:
        return iter(list(executor.map(func, items, chunksize=chunk)))
    finally:
        executor.shutdown()


@contextmanager
def _open_output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _warn(message: str) -> None:
    print(message, file=sys.stderr)


# -- distance ----------------------------------------------------------------


def _group_documents(lines: Sequence[str], doc: bool) -> list[list[tuple[int, str]]]:
    """Split tree lines into records: one per line, or blank-line separated blocks."""
    if not doc:
        return [[item] for item in iter_tree_lines(lines)]
    groups: list[list[tuple[int, str]]] = [[]]
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            if groups[-1]:
                groups.append([])
        elif not stripped.startswith("#"):
            groups[-1].append((number, stripped))
    return [g for g in groups if g]


def _distance_job(job) -> tuple[dict | None, str | None]:
    sentences, sentinel = job
    tokens: list[str] = []
    subwords: list[str] = []
    vectors = []
    for number, text, pieces in sentences:
        try:
            tree = parse_ptb(text)
            vectors.append(finalize(tree, pieces))
        except (SyntaxAttnError, ValueError) as exc:
            return None, f"line {number}: {exc}"
        tokens.extend(tree.tokens)
        if pieces is not None:
            subwords.extend(pieces)
    try:
        distance = concat_sentences(vectors, sentinel)
    except SyntaxAttnError as exc:
        return None, f"line {sentences[0][0]}: {exc}"
    record = {"id": f"{sentences[0][0]:06d}", "tokens": tokens}
    if sentences[0][2] is not None:
        record["subwords"] = subwords
    record["distance"] = list(distance.values)
    return record, None


def cmd_distance(args) -> int:
    lines = _read_lines(args.trees)
    groups = _group_documents(lines, args.doc)
    pieces_by_line: dict[int, list[str]] = {}
    if args.subwords:
        tree_lines = [number for group in groups for number, _ in group]
        sub_lines = [text.split() for _, text in iter_tree_lines(_read_lines(args.subwords))]
        if len(sub_lines) != len(tree_lines):
            _warn(f"error: {len(tree_lines)} trees but {len(sub_lines)} subword lines")
            return 2
        pieces_by_line = dict(zip(tree_lines, sub_lines))
    jobs = [
        ([(number, text, pieces_by_line.get(number)) for number, text in group], args.sentinel)
        for group in groups
    ]
    status = 0
    with _open_output(args.output) as out:
        for record, error in _pmap(_distance_job, jobs, args.jobs):
            if error:
                _warn(error)
                status = 1
                continue
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return status


# -- mask --------------------------------------------------------------------


def _mask_job(job) -> tuple[str, bytes | None, str | None]:
    index, line, soft, tau = job
    try:
        record = json.loads(line)
        distance = record["distance"]
        if not isinstance(distance, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in distance
        ):
            raise ValueError("'distance' must be a list of numbers")
        units = record.get("subwords") or record.get("tokens")
        if units is not None and len(units) != len(distance) + 1:
            raise ValueError(f"{len(units)} tokens but {len(distance)} distances")
        rid = str(record.get("id", f"{index:06d}"))
        if not rid or os.sep in rid or rid.startswith("."):
            raise ValueError(f"unusable record id {rid!r}")
        mask = build_soft_mask(distance, tau) if soft else induce_from_distances(distance)
    except (KeyError, ValueError, SyntaxAttnError) as exc:
        return f"{index:06d}", None, f"record {index}: {exc}"
    return rid, encode_mask(mask), None


def cmd_mask(args) -> int:
    os.makedirs(args.output, exist_ok=True)
    lines = [(k, line) for k, line in enumerate(_read_lines(args.distances), start=1) if line.strip()]
    jobs = [(k, line, args.soft, args.tau) for k, line in lines]
    status = 0
    for rid, payload, error in _pmap(_mask_job, jobs, args.jobs):
        if error:
            _warn(error)
            status = 1
            continue
        with open(os.path.join(args.output, f"{rid}.sgam"), "wb") as fh:
            fh.write(payload)
    return status


# -- attend ------------------------------------------------------------------


def _parse_shape(text: str) -> tuple[int, int, int, int]:
    try:
        n, d_model, heads, grammar = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected four integers n,d_model,h,g") from None
    return n, d_model, heads, grammar


def cmd_attend(args) -> int:
    n, d_model, heads, grammar = args.demo_shape
    try:
        mask = read_mask(args.mask)
        if mask.n != n:
            raise SyntaxAttnError(f"mask has n={mask.n} but demo shape has n={n}")
        config = AttentionConfig(d_model=d_model, num_heads=heads, grammar_heads=grammar)
    except (OSError, ValueError, SyntaxAttnError) as exc:
        _warn(f"error: {exc}")
        return 2
    kind = "hard" if isinstance(mask, LocalRangeMask) else "soft"
    layer = AttentionLayer.random(config, args.seed)
    rng = np.random.default_rng([args.seed, 1])
    x = rng.normal(size=(n, d_model))
    cache = encoder_forward_cache(layer, x, mask)
    grammar_mask = cache.masks[0] if grammar else None

    status = 0
    print(f"mask: n={n} kind={kind}")
    for h in range(heads):
        weights = cache.attn[h]
        if h < grammar:
            ok = not np.any(weights[grammar_mask == 0])
            if kind == "hard":
                ok = ok and bool(np.all(weights[grammar_mask > 0] > 0))
            role = "grammar"
        else:
            ok = bool(np.all(weights > 0))
            role = "vanilla"
        print(f"head {h} [{role}]: support {'ok' if ok else 'MISMATCH'}")
        status |= 0 if ok else 1
    print(f"output checksum: {checksum(cache.output)}")
    if args.gradcheck:
        upstream = rng.normal(size=(n, d_model))
        errors = gradient_check(layer, x, mask, upstream)
        worst = max(errors, key=errors.get)
        passed = errors[worst] < GRADCHECK_TOLERANCE
        print(f"gradcheck max relative error: {errors[worst]:.3e} ({worst}) {'ok' if passed else 'FAIL'}")
        status |= 0 if passed else 1
    return status


# -- check -------------------------------------------------------------------


def _check_job(item) -> tuple[int, str | None]:
    number, text = item
    try:
        tree = parse_ptb(text)
        d = generate_distances(tree)
        if not verify_sign_property(tree, d):
            return number, "distance ranks disagree with LCA heights"
        if not masks_equal(induce_from_distances(d), range_from_tree(tree)):
            return number, "distance-induced ranges differ from tree ranges"
    except (SyntaxAttnError, ValueError) as exc:
        return number, str(exc)
    return number, None


def cmd_check(args) -> int:
    items = list(iter_tree_lines(_read_lines(args.trees)))
    failures = 0
    with _open_output(args.output) as out:
        for number, problem in _pmap(_check_job, items, args.jobs):
            if problem is None:
                out.write(f"line {number}: pass\n")
            else:
                failures += 1
                out.write(f"line {number}: FAIL {problem}\n")
        out.write(f"checked {len(items)} trees: {len(items) - failures} passed, {failures} failed\n")
    return 1 if failures else 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syntaxattn",
        description="Syntactic distances and syntax-guided attention masks from bracketed trees.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="trees -> JSON-lines distance records")
    p.add_argument("trees", help="one bracketed tree per line")
    p.add_argument("--subwords", help="one space-separated subword line per tree ('@@' continues a word)")
    p.add_argument("--doc", action="store_true", help="join blank-line separated blocks into one record")
    p.add_argument("--sentinel", type=int, default=DEFAULT_SENTINEL)
    p.add_argument("--output", "-o")
    p.add_argument("--jobs", "-j", type=int, default=1)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("mask", help="distance records -> SGAM mask files")
    p.add_argument("distances", help="JSON-lines output of 'distance'")
    p.add_argument("--output", "-o", required=True, help="directory for <id>.sgam files")
    p.add_argument("--soft", action="store_true")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--jobs", "-j", type=int, default=1)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("attend", help="run a seeded demo encoder layer on a mask")
    p.add_argument("mask", help="SGAM mask file")
    p.add_argument("--demo-shape", type=_parse_shape, required=True, metavar="n,d_model,h,g")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gradcheck", action="store_true")
    p.set_defaults(func=cmd_attend)

    p = sub.add_parser("check", help="verify ranks and range equivalence for every tree")
    p.add_argument("trees")
    p.add_argument("--output", "-o")
    p.add_argument("--jobs", "-j", type=int, default=1)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Iterable[str] | None = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    if getattr(args, "tau", 1.0) <= 0:
        _warn("error: --tau must be positive")
        return 2
    try:
        return args.func(args)
    except OSError as exc:
        _warn(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
