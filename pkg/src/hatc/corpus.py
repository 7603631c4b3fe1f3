"""Synthetic mini-corpus generation.

Every object shares one base layout (gradient, soft blocks, background
texture) and differs only in which checker pattern sits at each of a few
fixed patch positions.  The patterns come from small per-position pools, so
telling objects apart requires reading fine patch detail rather than coarse
scene structure; lossy image coding therefore degrades retrieval in a
controlled way.  Views are perturbed geometrically and photometrically.
Everything is seeded, so acceptance runs without external downloads; real
datasets can be fed through the same manifest format instead.
"""

from __future__ import annotations

import os

import numpy as np

from .image import write_pgm
from .retrieval import Corpus, CorpusItem

IMAGE_W = 160
IMAGE_H = 120

PATCH_SIZE = 10
PATCH_CELLS = (2, 3)  # checker cell size cycles over the patch positions
N_POSITIONS = 5
POOL_SIZE = 4  # candidate patterns per position
PATCH_LEVELS = (60, 200)
NOISE_AMPLITUDE = 14.0


def _base_layout(seed: int):
    """Shared scene plus patch positions and per-position pattern pools."""
    h, w = IMAGE_H, IMAGE_W
    rng = np.random.default_rng([seed, 0xBA5E])
    img = (
        128.0
        + 30.0 * np.linspace(-1, 1, w)[None, :]
        + 20.0 * np.linspace(-1, 1, h)[:, None]
    )
    for _ in range(10):
        x0, y0 = int(rng.integers(0, w - 20)), int(rng.integers(0, h - 20))
        bw, bh = int(rng.integers(12, 40)), int(rng.integers(12, 40))
        img[y0 : min(h, y0 + bh), x0 : min(w, x0 + bw)] = 128 + rng.uniform(-35, 35)
    # Broadband low-amplitude texture: cheap to code at harsh quality
    # settings but expensive at mild ones, which spreads the image codec's
    # operating points over a useful byte range.
    img += rng.uniform(-NOISE_AMPLITUDE, NOISE_AMPLITUDE, (h, w))

    pos_rng = np.random.default_rng([seed, 0x505])
    positions: list[tuple[int, int]] = []
    tries = 0
    while len(positions) < N_POSITIONS and tries < 500:
        x = int(pos_rng.integers(18, w - 34))
        y = int(pos_rng.integers(18, h - 34))
        if all(abs(x - px) > 20 or abs(y - py) > 20 for px, py in positions):
            positions.append((x, y))
        tries += 1
    pools = []
    for k in range(N_POSITIONS):
        cell = PATCH_CELLS[k % len(PATCH_CELLS)]
        n = (PATCH_SIZE + cell - 1) // cell
        pools.append(pos_rng.integers(0, 2, (POOL_SIZE, n, n)))
    return img, positions, pools


def _object_image(seed: int, obj: int, layout, positions, pools) -> np.ndarray:
    """One object: the shared layout with a pattern drawn per position."""
    rng = np.random.default_rng([seed, obj])
    img = layout.copy()
    lo, hi = PATCH_LEVELS
    for k, (x, y) in enumerate(positions):
        cell = PATCH_CELLS[k % len(PATCH_CELLS)]
        pat = pools[k][int(rng.integers(0, POOL_SIZE))]
        pat = np.kron(pat, np.ones((cell, cell)))[:PATCH_SIZE, :PATCH_SIZE]
        img[y : y + PATCH_SIZE, x : x + PATCH_SIZE] = np.where(pat > 0, hi, lo)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def _view(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Perturbed view: small similarity warp plus brightness/contrast."""
    h, w = img.shape
    angle = rng.uniform(-0.09, 0.09)  # radians
    scale = rng.uniform(0.94, 1.06)
    dx, dy = rng.uniform(-4, 4), rng.uniform(-4, 4)
    contrast = rng.uniform(0.92, 1.08)
    brightness = rng.uniform(-12, 12)

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    # Inverse map: destination -> source, nearest-neighbour sampling.
    ca, sa = np.cos(angle), np.sin(angle)
    ux = (xx - cx - dx) / scale
    uy = (yy - cy - dy) / scale
    sx = np.clip(np.round(ca * ux + sa * uy + cx), 0, w - 1).astype(np.int64)
    sy = np.clip(np.round(-sa * ux + ca * uy + cy), 0, h - 1).astype(np.int64)
    warped = img[sy, sx].astype(np.float64)
    out = (warped - 128.0) * contrast + 128.0 + brightness
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def make_corpus(seed: int, n_objects: int = 20, views: int = 5) -> Corpus:
    """In-memory retrieval corpus: `views` database views plus one query per
    object."""
    layout, positions, pools = _base_layout(seed)
    db, queries = [], []
    for obj in range(n_objects):
        base = _object_image(seed, obj, layout, positions, pools)
        rng = np.random.default_rng([seed, 0xF1E1D, obj])
        obj_id = f"obj{obj:03d}"
        for v in range(views):
            db.append(CorpusItem(f"{obj_id}_v{v}.pgm", obj_id, _view(base, rng)))
        queries.append(CorpusItem(f"{obj_id}_query.pgm", obj_id, _view(base, rng)))
    return Corpus(database=db, queries=queries)


def make_training_images(seed: int, count: int) -> list[np.ndarray]:
    """Images for coding-model training, disjoint from the retrieval corpus."""
    layout, positions, pools = _base_layout(seed + 1000)
    return [
        _object_image(seed + 1000, i, layout, positions, pools) for i in range(count)
    ]


def write_corpus(out_dir, corpus: Corpus) -> str:
    """Write PGMs plus a `role path object_id` manifest; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for role, items in (("db", corpus.database), ("query", corpus.queries)):
        for it in items:
            write_pgm(os.path.join(out_dir, it.name), it.image)
            lines.append(f"{role} {it.name} {it.object_id}")
    manifest = os.path.join(out_dir, "manifest.txt")
    tmp = f"{manifest}.tmp"
    with open(tmp, "w") as f:
        f.write("\n".join(lines) + "\n")
    os.replace(tmp, manifest)
    return manifest
