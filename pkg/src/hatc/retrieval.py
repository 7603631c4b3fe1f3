"""Retrieval evaluation: Hamming matching, AP/MAP and rate-accuracy sweeps.

Matching uses a nearest/second-nearest ratio test (0.8) over Hamming
distances; a candidate with a single descriptor falls back to an absolute
64-bit cap.  The sweep harness runs the CTA/ATC/HATC grids over a corpus
manifest and emits one rate-accuracy row per grid cell plus optional SVG
curves.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .container import demux
from .entropy_model import DexelOrderModel, pick_model
from .features import FeatureSet, extract
from .image import psnr, read_pgm
from .pipeline import EncodeConfig, decode_atc, decode_cta, decode_hatc, encode
from .errors import HatcError

RATIO_TEST = 0.8
SINGLE_CANDIDATE_CAP = 64  # absolute Hamming cap when no second-nearest exists

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int32)


def hamming(a, b) -> int:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def _pack(bits: np.ndarray) -> np.ndarray:
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=1)


def distance_matrix(a_bits: np.ndarray, b_bits: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between two descriptor stacks."""
    pa = _pack(a_bits)
    pb = _pack(b_bits)
    xor = pa[:, None, :] ^ pb[None, :, :]
    return _POPCOUNT[xor].sum(axis=2)


def match_score(query: FeatureSet, candidate: FeatureSet):
    """(match count, summed nearest distances) for ranking candidates.

    A query descriptor matches when its nearest candidate distance passes
    the ratio test against the second nearest.  Lower distance sum breaks
    score ties.
    """
    if len(query) == 0:
        raise ValueError("empty query feature set")
    if len(candidate) == 0:
        return 0, 0.0
    dist = distance_matrix(query.descriptors, candidate.descriptors)
    if len(candidate) == 1:
        nearest = dist[:, 0]
        return int(np.count_nonzero(nearest <= SINGLE_CANDIDATE_CAP)), float(nearest.sum())
    part = np.partition(dist, 1, axis=1)
    d1 = part[:, 0].astype(np.float64)
    d2 = part[:, 1].astype(np.float64)
    passed = d1 <= RATIO_TEST * d2
    return int(np.count_nonzero(passed)), float(d1.sum())


@dataclass
class RankedList:
    query_id: str
    entries: list[str]  # database ids, best first

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("ranked list contains duplicate ids")

    @property
    def length(self) -> int:
        return len(self.entries)


def average_precision(ranked: RankedList, relevant: set) -> float:
    """Sum of precision at each relevant rank, normalized by |relevant|."""
    if not relevant:
        raise ValueError("no relevant documents for this query")
    hits = 0
    total = 0.0
    for k, entry in enumerate(ranked.entries, start=1):
        if entry in relevant:
            hits += 1
            total += hits / k
    return total / len(relevant)


def mean_average_precision(aps) -> float:
    aps = list(aps)
    if not aps:
        raise ValueError("no per-query AP values")
    return float(sum(aps) / len(aps))


@dataclass
class CorpusItem:
    name: str
    object_id: str
    image: np.ndarray


@dataclass
class Corpus:
    database: list[CorpusItem]
    queries: list[CorpusItem]

    def relevant_for(self, query: CorpusItem) -> set:
        return {it.name for it in self.database if it.object_id == query.object_id}


def load_manifest(path) -> Corpus:
    """Manifest: one record per line, `role path object_id`, paths relative
    to the manifest file."""
    base = os.path.dirname(os.path.abspath(path))
    db, queries = [], []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            role, rel, obj = line.split()
            item = CorpusItem(name=rel, object_id=obj, image=read_pgm(os.path.join(base, rel)))
            if role == "db":
                db.append(item)
            elif role == "query":
                queries.append(item)
            else:
                raise HatcError(f"unknown manifest role {role!r}")
    return Corpus(database=db, queries=queries)


@dataclass
class RateAccuracyPoint:
    method: str
    q: int | None
    threshold: int
    refine_z: int | None
    bytes_image: float
    bytes_loc: float
    bytes_enh: float
    bytes_total: float
    psnr_db: float | None
    map: float

    CSV_FIELDS = (
        "method", "q", "threshold", "refine_z", "bytes_image", "bytes_loc",
        "bytes_enh", "bytes_total", "psnr_db", "map",
    )

    def csv_row(self) -> dict:
        row = {}
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            if v is None:
                row[k] = ""
            elif isinstance(v, float):
                row[k] = f"{v:.6f}"
            else:
                row[k] = v
        return row


@dataclass
class GridCell:
    method: str
    q: int = 50
    threshold: int = 70
    refine_z: int = 50


def default_grid(
    q_values=(5, 10, 15, 20, 50, 70),
    thresholds=(70, 75, 80, 85, 90, 95, 100, 105),
    hatc_q=(10, 50),
    z_values=(25, 50, 100, 150),
    detector_threshold=70,
) -> list[GridCell]:
    cells = [GridCell("cta", q=q, threshold=detector_threshold) for q in q_values]
    cells += [GridCell("atc", threshold=t) for t in thresholds]
    cells += [
        GridCell("hatc", q=q, threshold=detector_threshold, refine_z=z)
        for q in hatc_q
        for z in z_values
    ]
    return cells


def _rank_database(query_fs: FeatureSet, db_features) -> RankedList:
    scored = []
    for idx, (name, fs) in enumerate(db_features):
        if len(query_fs) == 0:
            scored.append((0, 0.0, idx, name))
        else:
            count, dsum = match_score(query_fs, fs)
            scored.append((-count, dsum, idx, name))
    scored.sort()
    return RankedList(query_id="", entries=[name for *_, name in scored])


def evaluate_cell(
    cell: GridCell, corpus: Corpus, db_features, models: list[DexelOrderModel]
) -> RateAccuracyPoint:
    if cell.method == "hatc":
        model = pick_model([m for m in models if m.source_kind == "residual"], cell.q)
    elif cell.method == "atc":
        model = pick_model([m for m in models if m.source_kind == "intra"], 0)
    else:
        model = None

    aps, psnrs = [], []
    rep_img = rep_loc = rep_enh = rep_total = 0.0
    for query in corpus.queries:
        config = EncodeConfig(
            method=cell.method,
            q=cell.q,
            detector_threshold=cell.threshold,
            refine_count=cell.refine_z,
        )
        data = encode(query.image, config, model)
        stream = demux(data)
        if cell.method == "cta":
            result = decode_cta(stream, cell.threshold)
        elif cell.method == "atc":
            result = decode_atc(stream, model)
        else:
            result = decode_hatc(stream, model)
        ranked = _rank_database(result.features, db_features)
        ranked.query_id = query.name
        aps.append(average_precision(ranked, corpus.relevant_for(query)))
        if result.image is not None:
            psnrs.append(psnr(query.image, result.image))
        rep = result.rate_report
        rep_img += rep.bytes_image
        rep_loc += rep.bytes_loc
        rep_enh += rep.bytes_enh
        rep_total += len(data)
    n = len(corpus.queries)
    return RateAccuracyPoint(
        method=cell.method,
        q=cell.q if cell.method in ("cta", "hatc") else None,
        threshold=cell.threshold,
        refine_z=cell.refine_z if cell.method == "hatc" else None,
        bytes_image=rep_img / n,
        bytes_loc=rep_loc / n,
        bytes_enh=rep_enh / n,
        bytes_total=rep_total / n,
        psnr_db=(sum(psnrs) / len(psnrs)) if psnrs else None,
        map=mean_average_precision(aps),
    )


def sweep(
    corpus: Corpus,
    grid: list[GridCell],
    models: list[DexelOrderModel],
    db_threshold: int = 70,
    jobs: int = 1,
) -> list[RateAccuracyPoint]:
    """One rate-accuracy point per grid cell, in grid order."""
    db_features = [(it.name, extract(it.image, db_threshold)) for it in corpus.database]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(
                ex.map(lambda c: evaluate_cell(c, corpus, db_features, models), grid)
            )
    return [evaluate_cell(c, corpus, db_features, models) for c in grid]


def write_csv(path, points: list[RateAccuracyPoint]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RateAccuracyPoint.CSV_FIELDS)
        writer.writeheader()
        for p in points:
            writer.writerow(p.csv_row())
    os.replace(tmp, path)


def _svg_polyline_chart(path, title, xlabel, ylabel, curves) -> None:
    """Minimal polyline chart; curves is {label: [(x, y), ...]}."""
    width, height, margin = 640, 440, 60
    xs = [x for pts in curves.values() for x, _ in pts]
    ys = [y for pts in curves.values() for _, y in pts]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height-margin}" x2="{width-margin}" y2="{height-margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height-margin}" stroke="black"/>',
        f'<text x="{width/2}" y="{height-16}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="18" y="{height/2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {height/2})">{ylabel}</text>',
        f'<text x="{margin}" y="{height-margin+18}" font-size="11">{x0:.3g}</text>',
        f'<text x="{width-margin}" y="{height-margin+18}" text-anchor="end" font-size="11">{x1:.3g}</text>',
        f'<text x="{margin-6}" y="{height-margin}" text-anchor="end" font-size="11">{y0:.3g}</text>',
        f'<text x="{margin-6}" y="{margin+4}" text-anchor="end" font-size="11">{y1:.3g}</text>',
    ]
    for i, (label, pts) in enumerate(curves.items()):
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{width-margin-120}" y="{margin + 16*i}" font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        f.write("\n".join(parts))
    os.replace(tmp, path)


def write_svgs(out_dir, points: list[RateAccuracyPoint]) -> list[str]:
    """Rate-MAP, rate-PSNR and MAP-vs-PSNR iso-rate charts."""
    os.makedirs(out_dir, exist_ok=True)
    by_method: dict[str, list[RateAccuracyPoint]] = {}
    for p in points:
        by_method.setdefault(p.method, []).append(p)

    written = []
    path = os.path.join(out_dir, "rate_map.svg")
    _svg_polyline_chart(
        path,
        "Retrieval accuracy vs rate",
        "bytes per query",
        "MAP",
        {m: [(p.bytes_total, p.map) for p in pts] for m, pts in by_method.items()},
    )
    written.append(path)

    psnr_curves = {
        m: [(p.bytes_total, p.psnr_db) for p in pts if p.psnr_db is not None]
        for m, pts in by_method.items()
        if any(p.psnr_db is not None for p in pts)
    }
    path = os.path.join(out_dir, "rate_psnr.svg")
    _svg_polyline_chart(path, "Image quality vs rate", "bytes per query", "PSNR (dB)", psnr_curves)
    written.append(path)

    # Iso-rate view: MAP against PSNR for HATC points grouped by rate bucket.
    hatc = [p for p in by_method.get("hatc", []) if p.psnr_db is not None]
    iso: dict[str, list] = {}
    if hatc:
        rates = sorted(p.bytes_total for p in hatc)
        budgets = sorted({rates[len(rates) // 4], rates[len(rates) // 2], rates[-1]})
        for budget in budgets:
            pts = [
                (p.psnr_db, p.map)
                for p in hatc
                if abs(p.bytes_total - budget) <= 0.15 * budget
            ]
            if pts:
                iso[f"~{budget/1024:.1f} KB"] = pts
    path = os.path.join(out_dir, "map_psnr_iso_rate.svg")
    _svg_polyline_chart(path, "Accuracy vs image quality at fixed rate", "PSNR (dB)", "MAP", iso)
    written.append(path)
    return written
