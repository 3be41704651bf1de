"""Synthetic 2-D benchmark generators, CSV loading, and stratified splits.

All generators are pure functions of their parameters and seed: same inputs,
bit-identical arrays. Labels are int64 and balanced to within one sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Feature matrix plus integer labels in [0, class_count)."""

    features: np.ndarray          # (n, d) float64
    labels: np.ndarray            # (n,) int64
    class_count: int
    feature_names: list[str] | None = None
    class_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must be 1-D and aligned with features rows")
        if self.class_count < 2:
            raise ValueError("need at least two classes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("labels out of range for class_count")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.class_count,
                       self.feature_names, self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    """Train/val/test fractions; must sum to 1."""

    train: float = 0.6
    val: float = 0.2
    test: float = 0.2
    seed: int = 0

    def __post_init__(self):
        total = self.train + self.val + self.test
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1")
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split fractions must be non-negative")


def _halves(n: int) -> tuple[int, int]:
    # class sizes balanced to within one sample
    return n - n // 2, n // 2


def make_moons(n: int, noise: float = 0.25, seed: int = 0) -> Dataset:
    """Two interleaved half-circle arcs with isotropic Gaussian noise.

    Class 0 sits on the upper unit half-circle centred at the origin; class 1
    on a lower arc shifted by (1, 0.5). noise is the per-coordinate std.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    n0, n1 = _halves(n)
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    pts0 = np.column_stack([np.cos(t0), np.sin(t0)])
    pts1 = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    x = np.vstack([pts0, pts1])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    rng = np.random.default_rng(seed)
    x = x + noise * rng.standard_normal(x.shape)  # exact when noise == 0
    return Dataset(x, y, 2, feature_names=["x0", "x1"])


def make_circles(n: int, radius_ratio: float = 0.5, noise: float = 0.08,
                 seed: int = 0) -> Dataset:
    """Concentric circles: class 0 at radius 1, class 1 at radius_ratio."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0 < radius_ratio < 1:
        raise ValueError("radius_ratio must lie in (0, 1)")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    n0, n1 = _halves(n)
    t0 = np.linspace(0.0, 2.0 * np.pi, n0, endpoint=False)
    t1 = np.linspace(0.0, 2.0 * np.pi, n1, endpoint=False)
    pts0 = np.column_stack([np.cos(t0), np.sin(t0)])
    pts1 = radius_ratio * np.column_stack([np.cos(t1), np.sin(t1)])
    x = np.vstack([pts0, pts1])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    rng = np.random.default_rng(seed)
    x = x + noise * rng.standard_normal(x.shape)
    return Dataset(x, y, 2, feature_names=["x0", "x1"])


# Fixed shear applied to three unit-variance blobs on an equilateral triangle.
# Side length tuned so the best achievable accuracy sits near 0.85, leaving the
# problem genuinely overlapping rather than saturated.
_ANISO_SHEAR = np.array([[0.6, -0.6], [-0.4, 0.8]])
_ANISO_SIDE = 2.6


def make_aniso_blobs(n: int, seed: int = 0) -> Dataset:
    """Three overlapping Gaussian blobs sheared into anisotropic clusters."""
    if n < 3:
        raise ValueError("need n >= 3")
    base = _ANISO_SIDE * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
    centers = base - base.mean(axis=0)
    sizes = [n // 3 + (1 if r < n % 3 else 0) for r in range(3)]
    rng = np.random.default_rng(seed)
    parts, labels = [], []
    for c, sz in enumerate(sizes):
        parts.append(centers[c] + rng.normal(0.0, 1.0, size=(sz, 2)))
        labels.append(np.full(sz, c, dtype=np.int64))
    x = np.vstack(parts) @ _ANISO_SHEAR
    return Dataset(x, np.concatenate(labels), 3, feature_names=["x0", "x1"])


def make_two_spirals(n: int, turns: float = 2.0, seed: int = 0) -> Dataset:
    """Two interleaved Archimedean spirals (r proportional to angle), no noise.

    Class 1 is class 0 rotated by pi about the origin. turns sets how many
    full revolutions each arm makes; seed is accepted for interface symmetry
    but the construction is deterministic in (n, turns) alone.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if turns <= 0:
        raise ValueError("turns must be > 0")
    del seed  # noise-free by construction
    n0, n1 = _halves(n)
    theta_lo = 0.5 * np.pi                      # keep the arms off the origin
    theta_hi = theta_lo + 2.0 * np.pi * turns
    scale = 1.0 / theta_hi                      # max radius 1
    arms = []
    for m, sign in ((n0, 1.0), (n1, -1.0)):
        theta = np.linspace(theta_lo, theta_hi, m)
        r = scale * theta
        arms.append(np.column_stack([sign * r * np.cos(theta),
                                     sign * r * np.sin(theta)]))
    x = np.vstack(arms)
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return Dataset(x, y, 2, feature_names=["x0", "x1"])


def load_csv(path: str, label_column: str | int = "label",
             has_header: bool = True) -> Dataset:
    """Load a CSV of numeric features plus one label column.

    Labels may be arbitrary strings or numbers; they are re-encoded to
    0..C-1 in order of first appearance and the original values recorded in
    class_names. Malformed cells raise ValueError naming the row and column.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # drop blank lines
    if not rows:
        raise ValueError(f"{path}: empty file")

    if has_header:
        header, rows = rows[0], rows[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data rows")
    else:
        header = [f"f{j}" for j in range(len(rows[0]))]

    ncol = len(header)
    if isinstance(label_column, int):
        label_idx = label_column if label_column >= 0 else ncol + label_column
        if not 0 <= label_idx < ncol:
            raise ValueError(f"{path}: label column index {label_column} out of range")
    else:
        if not has_header:
            raise ValueError("named label_column requires has_header=True")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ValueError(f"{path}: no column named {label_column!r}") from None

    feat_names = [h for j, h in enumerate(header) if j != label_idx]
    feats = np.empty((len(rows), ncol - 1), dtype=np.float64)
    raw_labels = []
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} cells, expected {ncol}")
        k = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                feats[i, k] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: row {i + 1}, column {header[j]!r}: "
                    f"cannot parse {cell!r} as a number") from None
            k += 1

    # first-appearance encoding keeps the mapping reproducible
    encoding: dict[str, int] = {}
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        if lab not in encoding:
            encoding[lab] = len(encoding)
        labels[i] = encoding[lab]
    if len(encoding) < 2:
        raise ValueError(f"{path}: found {len(encoding)} distinct label(s), need >= 2")
    return Dataset(feats, labels, len(encoding),
                   feature_names=feat_names, class_names=list(encoding))


def _apportion(count: int, fractions: tuple[float, float, float]) -> list[int]:
    # largest-remainder rounding; ties broken by split order (train, val, test)
    exact = [count * f for f in fractions]
    base = [int(np.floor(e)) for e in exact]
    short = count - sum(base)
    order = sorted(range(3), key=lambda k: (-(exact[k] - base[k]), k))
    for k in order[:short]:
        base[k] += 1
    return base


def stratified_split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Split into train/val/test keeping per-class proportions within one sample.

    Deterministic in spec.seed; every class must have at least 3 members.
    """
    fractions = (spec.train, spec.val, spec.test)
    rng = np.random.default_rng(spec.seed)
    picks: list[list[np.ndarray]] = [[], [], []]
    for c in range(data.class_count):
        idx = np.flatnonzero(data.labels == c)
        if idx.size < 3:
            raise ValueError(f"class {c} has {idx.size} samples, need >= 3 to split")
        idx = rng.permutation(idx)
        counts = _apportion(idx.size, fractions)
        cuts = np.cumsum(counts)[:2]
        for part, chunk in zip(picks, np.split(idx, cuts)):
            part.append(chunk)
    out = []
    for part in picks:
        merged = np.sort(np.concatenate(part))
        out.append(data.subset(merged))
    return tuple(out)


def save_csv(data: Dataset, path: str) -> None:
    """Write features plus a trailing label column, with a header row."""
    names = data.feature_names or [f"f{j}" for j in range(data.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*names, "label"])
        for row, lab in zip(data.features, data.labels):
            name = data.class_names[lab] if data.class_names else str(int(lab))
            writer.writerow([*(repr(float(v)) for v in row), name])
