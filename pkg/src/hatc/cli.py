"""Command-line front end.

Subcommands bind training, encoding, decoding and evaluation into
reproducible runs: `train`, `encode`, `decode`, `sweep`, `synth-corpus`.
All image input and output uses binary 8-bit PGM (P5).  Every command is
deterministic given its arguments and seed, and output files are written
atomically so an interrupted run never leaves partial artifacts behind.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .container import demux
from .corpus import make_corpus, make_training_images, write_corpus
from .entropy_model import DexelOrderModel
from .errors import HatcError, InsufficientData
from .image import read_pgm, write_pgm
from .pipeline import EncodeConfig, decode_atc, decode_cta, decode_hatc, encode
from .retrieval import default_grid, load_manifest, sweep, write_csv, write_svgs
from .training import train_from_images, training_summary


def _atomic_write_bytes(path, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def _read_images(images_dir) -> list:
    paths = sorted(glob.glob(os.path.join(images_dir, "*.pgm")))
    if not paths:
        raise HatcError(f"no .pgm images found in {images_dir}")
    return [read_pgm(p) for p in paths]


def _parse_q_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise HatcError(f"bad quality list {text!r}, expected e.g. 10,50")


def cmd_train(args) -> int:
    images = _read_images(args.images)
    if len(images) < 2:
        raise InsufficientData("training needs at least 2 images")
    os.makedirs(args.out, exist_ok=True)
    if args.kind == "intra":
        q_list = [0]
    else:
        q_list = _parse_q_list(args.q)
        if not q_list:
            raise HatcError("residual training needs --q, e.g. --q 10,50")
    for q in q_list:
        model = train_from_images(images, args.kind, q, args.threshold)
        if args.kind == "intra":
            path = os.path.join(args.out, "model_intra.hmdl")
        else:
            path = os.path.join(args.out, f"model_residual_q{q}.hmdl")
        model.save(path)
        summary = training_summary(images, model, args.threshold)
        print(
            f"{os.path.basename(path)}: {summary['vectors']} vectors, "
            f"chain bound {summary['chain_bound_greedy']:.2f} bits "
            f"(identity order {summary['chain_bound_identity']:.2f}), "
            f"model cross-entropy {summary['model_cross_entropy']:.2f}"
        )
    return 0


def cmd_encode(args) -> int:
    image = read_pgm(args.input)
    config = EncodeConfig(
        method=args.method,
        q=args.q,
        detector_threshold=args.threshold,
        refine_count=args.z,
        scale_bits=args.scale_bits,
    )
    model = None
    if args.method in ("atc", "hatc"):
        if args.model is None:
            raise HatcError(f"--model is required for method {args.method}")
        model = DexelOrderModel.load(args.model)
    data = encode(image, config, model)
    _atomic_write_bytes(args.out, data)
    print(f"{args.out}: {len(data)} bytes ({args.method})")
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as f:
        stream = demux(f.read())
    if stream.enhancement_layer is not None:
        if args.model is None:
            raise HatcError("--model is required to decode feature layers")
        model = DexelOrderModel.load(args.model)
        if stream.image_layer is not None:
            result = decode_hatc(stream, model)
        else:
            result = decode_atc(stream, model)
    elif stream.image_layer is not None:
        result = decode_cta(stream, args.threshold)
    else:
        raise HatcError("stream carries no decodable layers")

    prefix = args.out
    parent = os.path.dirname(os.path.abspath(prefix))
    os.makedirs(parent, exist_ok=True)
    written = []
    if result.image is not None:
        write_pgm(f"{prefix}.pgm", result.image)
        written.append(f"{prefix}.pgm")
    _atomic_write_bytes(f"{prefix}.hfts", result.features.to_bytes())
    written.append(f"{prefix}.hfts")
    rep = result.rate_report
    report = (
        f"bytes_image {rep.bytes_image}\n"
        f"bytes_loc {rep.bytes_loc}\n"
        f"bytes_enh {rep.bytes_enh}\n"
        f"bytes_container {rep.bytes_container}\n"
        f"bytes_total {rep.bytes_total}\n"
        f"features {len(result.features)}\n"
    )
    _atomic_write_bytes(f"{prefix}.rate.txt", report.encode())
    written.append(f"{prefix}.rate.txt")
    print("wrote " + ", ".join(written))
    return 0


def cmd_sweep(args) -> int:
    corpus = load_manifest(args.manifest)
    if not args.model:
        raise HatcError("sweep needs at least one --model (intra plus residual)")
    models = [DexelOrderModel.load(p) for p in args.model]
    grid = default_grid(detector_threshold=args.threshold)
    points = sweep(corpus, grid, models, db_threshold=args.threshold, jobs=args.jobs)
    write_csv(args.out, points)
    print(f"{args.out}: {len(points)} grid cells")
    if args.svg_dir:
        for path in write_svgs(args.svg_dir, points):
            print(f"wrote {path}")
    header = f"{'method':>6} {'q':>4} {'thr':>4} {'z':>4} {'bytes':>9} {'psnr':>6} {'map':>7}"
    print(header)
    for p in points:
        print(
            f"{p.method:>6} {p.q if p.q is not None else '-':>4} "
            f"{p.threshold:>4} {p.refine_z if p.refine_z is not None else '-':>4} "
            f"{p.bytes_total:>9.1f} "
            f"{f'{p.psnr_db:.2f}' if p.psnr_db is not None else '-':>6} "
            f"{p.map:>7.4f}"
        )
    return 0


def cmd_synth_corpus(args) -> int:
    corpus = make_corpus(args.seed, args.objects, args.views)
    manifest = write_corpus(args.out, corpus)
    train_dir = os.path.join(args.out, "train")
    os.makedirs(train_dir, exist_ok=True)
    for i, img in enumerate(make_training_images(args.seed, args.train_count)):
        write_pgm(os.path.join(train_dir, f"train{i:03d}.pgm"), img)
    print(
        f"{args.out}: {len(corpus.database)} db + {len(corpus.queries)} query images, "
        f"{args.train_count} training images, manifest {manifest}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatc",
        description="joint coding of images and binary local features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train descriptor coding models")
    p.add_argument("--images", required=True, help="directory of training PGMs")
    p.add_argument("--kind", choices=("residual", "intra"), default="residual")
    p.add_argument("--q", default="10,50", help="comma-separated qualities (residual only)")
    p.add_argument("--threshold", type=int, default=70, help="detector threshold")
    p.add_argument("--out", required=True, help="output directory for model files")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode one image to a layered stream")
    p.add_argument("input", help="input PGM")
    p.add_argument("--method", choices=("cta", "atc", "hatc"), default="hatc")
    p.add_argument("--q", type=int, default=50, help="image codec quality")
    p.add_argument("--threshold", type=int, default=70, help="detector threshold")
    p.add_argument("--z", type=int, default=50, help="number of refined features")
    p.add_argument("--scale-bits", type=int, default=8)
    p.add_argument("--model", help="coding model file (atc/hatc)")
    p.add_argument("--out", required=True, help="output stream file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a stream to image/features/rate report")
    p.add_argument("input", help="input stream file")
    p.add_argument("--model", help="coding model file (needed for feature layers)")
    p.add_argument("--threshold", type=int, default=70, help="detector threshold (image-only streams)")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="rate-accuracy sweep over a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", action="append", default=[], help="model file, repeatable")
    p.add_argument("--threshold", type=int, default=70, help="detector threshold")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg-dir", help="directory for SVG charts")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth-corpus", help="generate the synthetic mini-corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--objects", type=int, default=20)
    p.add_argument("--views", type=int, default=5)
    p.add_argument("--train-count", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth_corpus)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HatcError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
