"""Command-line interface: train, sweep, encode, evaluate (alias compare),
export.

Every run writes a flat key=value manifest next to its primary output with
the fully resolved configuration; re-running with the manifest's settings
reproduces the outputs byte for byte. All randomness flows from --seed
(default 0), never from the clock. Exit codes: 0 success, 1 runtime error,
2 configuration error.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .bdrate import compare_lists
from .codec import CODING_BLOCK_SIZES, encode
from .errors import ConfigError
from .media_io import load_corpus, load_pnm, save_pnm
from .scaling import (
    ScalingList,
    assemble_list,
    flat_list,
    read_list,
    write_list,
    write_list_vtm,
)
from .taskloss import make_proxy
from .trainer import TrainConfig, train, write_report_csv
from .transform import BLOCK_SIZES


def _write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _write_manifest(path: str, subcommand: str, settings: dict) -> None:
    lines = [f"subcommand={subcommand}", f"version={__version__}"]
    lines += [f"{key}={settings[key]}" for key in sorted(settings)]
    _write_atomic(path, "\n".join(lines) + "\n")


def _stem(path: str) -> str:
    return os.path.splitext(path)[0]


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ConfigError(f"bad numeric list {text!r}") from None


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def _load_list_arg(path: str) -> ScalingList:
    """A scaling-list path, or flat:<value> for a constant synthetic list."""
    if path.startswith("flat:"):
        return flat_list(int(path.split(":", 1)[1]))
    return read_list(path)


def _fmt(value: float) -> str:
    return f"{value:g}"


def _trained_single_size_list(block_size, rounded) -> ScalingList:
    out = ScalingList()
    for component in ("Y", "Cb", "Cr"):
        out.put(block_size, component, "intra", rounded)
    return out


def _run_train_cell(corpus, args, noise_strength, rate_weight, out_path,
                    heat_path=None):
    proxy = make_proxy(args.proxy, timeout=args.proxy_timeout)
    config = TrainConfig(
        block_size=args.block_size,
        noise_strength=noise_strength,
        rate_weight=rate_weight,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
        patch_h=args.patch_h,
        patch_w=args.patch_w,
        proxy=proxy,
    )
    report = train(corpus, config)
    for row in report.epochs:
        print(
            f"epoch {row.epoch}: task_loss={row.task_loss:.6g} "
            f"rate_loss={row.rate_loss:.6g} mean_S={row.mean_scale:.4f}"
        )
    write_list(_trained_single_size_list(args.block_size, report.final_rounded),
               f"{out_path}.tmp")
    os.replace(f"{out_path}.tmp", out_path)
    telemetry = f"{_stem(out_path)}.telemetry.csv"
    write_report_csv(report, f"{telemetry}.tmp")
    os.replace(f"{telemetry}.tmp", telemetry)
    if heat_path is not None:
        rows = [",".join(f"{v:.10g}" for v in row) for row in report.final_matrix]
        _write_atomic(heat_path, "\n".join(rows) + "\n")
    return report


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    out_path = args.out or f"scaling_b{args.block_size}.txt"
    _run_train_cell(corpus, args, args.c, args.rate_weight, out_path)
    _write_manifest(
        f"{_stem(out_path)}.manifest",
        "train",
        {
            "corpus": args.corpus,
            "block_size": args.block_size,
            "c": _fmt(args.c),
            "lambda": _fmt(args.rate_weight),
            "epochs": args.epochs,
            "batch": args.batch,
            "seed": args.seed,
            "proxy": args.proxy,
            "patch_h": args.patch_h,
            "patch_w": args.patch_w,
            "out": out_path,
        },
    )
    return 0


def cmd_sweep(args) -> int:
    corpus = load_corpus(args.corpus)
    cs = _parse_float_list(args.c)
    lams = _parse_float_list(args.rate_weight)
    if not cs or not lams:
        raise ConfigError("sweep needs at least one c and one lambda value")
    os.makedirs(args.out_dir, exist_ok=True)
    for noise_strength in cs:
        for rate_weight in lams:
            tag = f"b{args.block_size}_c{_fmt(noise_strength)}_lam{_fmt(rate_weight)}"
            out_path = os.path.join(args.out_dir, f"scaling_{tag}.txt")
            heat_path = os.path.join(args.out_dir, f"heat_{tag}.csv")
            print(f"== cell c={_fmt(noise_strength)} lambda={_fmt(rate_weight)}")
            _run_train_cell(corpus, args, noise_strength, rate_weight, out_path,
                            heat_path=heat_path)
            _write_manifest(
                os.path.join(args.out_dir, f"scaling_{tag}.manifest"),
                "sweep",
                {
                    "corpus": args.corpus,
                    "block_size": args.block_size,
                    "c": _fmt(noise_strength),
                    "lambda": _fmt(rate_weight),
                    "epochs": args.epochs,
                    "batch": args.batch,
                    "seed": args.seed,
                    "proxy": args.proxy,
                    "patch_h": args.patch_h,
                    "patch_w": args.patch_w,
                    "out": out_path,
                },
            )
    return 0


def cmd_encode(args) -> int:
    img = load_pnm(args.input)
    slist = _load_list_arg(args.list)
    proxy = make_proxy(args.proxy, timeout=args.proxy_timeout)
    result = encode(img, args.qp, slist, args.block_size, proxy)
    pixels = img.shape[1] * img.shape[2]
    print(
        f"bits={result.bits} bpp={result.bits / pixels:.6g} "
        f"psnr_db={result.psnr:.6g} task_quality_db={result.task_quality:.6g}"
    )
    if args.recon:
        save_pnm(result.reconstruction, args.recon)
        _write_manifest(
            f"{_stem(args.recon)}.manifest",
            "encode",
            {
                "input": args.input,
                "qp": args.qp,
                "list": args.list,
                "block_size": args.block_size,
                "proxy": args.proxy,
                "recon": args.recon,
            },
        )
    return 0


def _parse_named_lists(text: str) -> dict[str, str]:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"expected name=FILE, got {item!r}")
        name, path = item.split("=", 1)
        if name in out:
            raise ConfigError(f"duplicate list name {name!r}")
        out[name] = path
    if not out:
        raise ConfigError("no lists given")
    return out


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.corpus)
    qps = _parse_int_list(args.qps)
    named = _parse_named_lists(args.lists)
    if args.anchor not in named:
        raise ConfigError(f"anchor {args.anchor!r} not among lists {sorted(named)}")
    lists = {name: _load_list_arg(path) for name, path in named.items()}
    proxy = make_proxy(args.proxy, timeout=args.proxy_timeout)
    report = compare_lists(
        corpus, qps, lists, args.block_size, proxy, args.anchor, threads=args.threads
    )
    os.makedirs(args.out_dir, exist_ok=True)
    for name, points in report.curves.items():
        lines = ["qp,bpp,psnr_db,task_quality_db"]
        for p in points:
            lines.append(
                f"{p.qp},{p.bpp:.10g},{p.psnr_db:.10g},{p.task_quality_db:.10g}"
            )
        _write_atomic(os.path.join(args.out_dir, f"rd_{name}.csv"), "\n".join(lines) + "\n")
    bd_lines = ["list_name,axis,bd_rate_percent"]
    for name, axis, value in report.rows:
        bd_lines.append(f"{name},{axis},{value:.10g}")
    _write_atomic(os.path.join(args.out_dir, "bd_report.csv"), "\n".join(bd_lines) + "\n")
    print(report.format_table())
    _write_manifest(
        os.path.join(args.out_dir, "evaluate.manifest"),
        "evaluate",
        {
            "corpus": args.corpus,
            "qps": args.qps,
            "lists": args.lists,
            "anchor": args.anchor,
            "proxy": args.proxy,
            "block_size": args.block_size,
            "threads": args.threads,
            "out_dir": args.out_dir,
        },
    )
    return 0


_EXPORT_SIZES = tuple(f"size{b}" for b in BLOCK_SIZES)


def cmd_export(args) -> int:
    named = _parse_named_lists(args.matrices)
    missing = [key for key in _EXPORT_SIZES if key not in named]
    if missing:
        raise ConfigError(f"missing matrices: {', '.join(missing)}")
    unknown = [key for key in named if key not in _EXPORT_SIZES]
    if unknown:
        raise ConfigError(f"unknown matrix keys: {', '.join(unknown)}")
    per_size = {}
    for size in BLOCK_SIZES:
        source = read_list(named[f"size{size}"])
        per_size[size] = source.resolve(size, "Y", "intra")
    assembled = assemble_list(per_size)
    if args.style == "vtm":
        write_list_vtm(assembled, args.out)
    else:
        write_list(assembled, args.out)
    _write_manifest(
        f"{_stem(args.out)}.manifest",
        "export",
        {"matrices": args.matrices, "out": args.out, "style": args.style},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqscale",
        description="Learn, apply and evaluate frequency-specific quantization "
        "scaling lists for block-DCT image coding.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_proxy(p):
        p.add_argument("--proxy", default="lowfreq-mse",
                       help="task-loss proxy: lowfreq-mse[:POOL], edge-mse, "
                            "external:<command> (default lowfreq-mse)")
        p.add_argument("--proxy-timeout", type=float, default=60.0,
                       help="external bridge timeout in seconds (default 60)")

    def add_train_options(p):
        p.add_argument("--corpus", required=True, help="directory of .ppm/.pgm images")
        p.add_argument("--block-size", type=int, required=True, choices=BLOCK_SIZES)
        p.add_argument("--epochs", type=int, default=20)
        p.add_argument("--batch", type=int, default=16)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--patch-h", type=int, default=64)
        p.add_argument("--patch-w", type=int, default=64)
        add_proxy(p)

    p_train = sub.add_parser("train", help="train one scaling matrix")
    add_train_options(p_train)
    p_train.add_argument("--c", type=float, required=True, help="noise strength")
    p_train.add_argument("--lambda", dest="rate_weight", type=float, required=True,
                         help="rate loss weight")
    p_train.add_argument("--out", default=None, help="scaling-list output file")
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="train a (c, lambda) grid")
    add_train_options(p_sweep)
    p_sweep.add_argument("--c", default="4,16,64",
                         help="comma-separated noise strengths (default 4,16,64)")
    p_sweep.add_argument("--lambda", dest="rate_weight", default="0.01,0.1,1,10",
                         help="comma-separated rate weights (default 0.01,0.1,1,10)")
    p_sweep.add_argument("--out-dir", default=".")
    p_sweep.set_defaults(func=cmd_sweep)

    p_encode = sub.add_parser("encode", help="code one image, report rate/quality")
    p_encode.add_argument("--input", required=True, help="PPM/PGM image")
    p_encode.add_argument("--qp", type=int, required=True)
    p_encode.add_argument("--list", required=True,
                          help="scaling-list file or flat:<value>")
    p_encode.add_argument("--block-size", type=int, default=8,
                          choices=CODING_BLOCK_SIZES)
    p_encode.add_argument("--recon", default=None, help="write reconstruction here")
    add_proxy(p_encode)
    p_encode.set_defaults(func=cmd_encode)

    p_eval = sub.add_parser(
        "evaluate", aliases=["compare"],
        help="RD-sweep scaling lists and report BD-rate vs an anchor",
    )
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--qps", default="12,17,22,27",
                        help="comma-separated ascending QPs, at least 4")
    p_eval.add_argument("--lists", required=True,
                        help="name=FILE[,name=FILE...]; FILE may be flat:<value>")
    p_eval.add_argument("--anchor", required=True, help="anchor list name")
    p_eval.add_argument("--block-size", type=int, default=8,
                        choices=CODING_BLOCK_SIZES)
    p_eval.add_argument("--threads", type=int, default=1,
                        help="parallel image encodes (default 1)")
    p_eval.add_argument("--out-dir", default=".")
    add_proxy(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_export = sub.add_parser("export", help="assemble per-size matrices into one list")
    p_export.add_argument(
        "--matrices", required=True,
        help="size2=FILE,size4=FILE,...,size64=FILE (all six sizes)",
    )
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--style", choices=("native", "vtm"), default="native")
    p_export.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"freqscale: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: I/O, parse, numeric, bridge
        print(f"freqscale: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
