"""Per-class mixtures of hyperplanes pooled by a temperature-controlled soft-OR.

Each class c owns a block of planes. A plane scores an input by an affine map
in the lifted feature space; the class score is the softened maximum of its
plane scores,

    s_c(x) = (1/alpha) * log(sum_m exp(alpha * z_{c,m}(x))),

which approaches max_m z_{c,m} as alpha grows and always satisfies

    max_m z_{c,m} <= s_c <= max_m z_{c,m} + ln(M_c)/alpha.

Classes compete through an ordinary softmax over their pooled scores. All
score paths subtract the relevant maximum before exponentiating, so extreme
scores and sharp alphas do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeaturePipeline


@dataclass(frozen=True)
class PlaneMixture:
    """Frozen classifier: plane parameters, pooling sharpness, feature pipeline.

    Plane rows for class c live in weights[offsets[c]:offsets[c+1]]. Instances
    are immutable once built; reads are thread-safe.
    """

    weights: np.ndarray              # (m_total, lifted_dim) float64
    biases: np.ndarray               # (m_total,)
    offsets: np.ndarray              # (class_count + 1,) int, offsets[0] == 0
    alpha: float
    pipeline: FeaturePipeline
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        off = np.asarray(self.offsets, dtype=np.int64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "offsets", off)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("weights must be (m_total, dim) with aligned biases")
        if off[0] != 0 or off[-1] != w.shape[0] or np.any(np.diff(off) < 1):
            raise ValueError("offsets must start at 0, end at m_total, "
                             "and give every class at least one plane")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be finite and > 0")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("plane parameters must be finite")

    @property
    def class_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def plane_count(self) -> int:
        return self.weights.shape[0]

    @property
    def lifted_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def planes_per_class(self) -> np.ndarray:
        return np.diff(self.offsets)

    def planes_for(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[c], self.offsets[c + 1]
        return self.weights[lo:hi], self.biases[lo:hi]

    def with_alpha(self, alpha: float) -> "PlaneMixture":
        return PlaneMixture(self.weights, self.biases, self.offsets, alpha,
                            self.pipeline, self.class_names)


@dataclass(frozen=True)
class ForwardResult:
    plane_scores: tuple[np.ndarray, ...]       # per class, length M_c
    responsibilities: tuple[np.ndarray, ...]   # per class, sums to 1
    class_scores: np.ndarray                   # (class_count,)
    posterior: np.ndarray                      # (class_count,), sums to 1


def class_score(plane_scores: np.ndarray, alpha: float) -> float:
    """Soft-OR pooling of one class's plane scores."""
    z = np.asarray(plane_scores, dtype=np.float64)
    top = z.max()
    return float(top + np.log(np.exp(alpha * (z - top)).sum()) / alpha)


def responsibilities(plane_scores: np.ndarray, alpha: float) -> np.ndarray:
    """Within-class softmax at sharpness alpha over the last axis.

    Accepts one class's score vector or a batch of them stacked as rows;
    each vector's responsibilities sum to 1.
    """
    z = np.asarray(plane_scores, dtype=np.float64)
    e = np.exp(alpha * (z - z.max(axis=-1, keepdims=True)))
    return e / e.sum(axis=-1, keepdims=True)


def posterior(class_scores: np.ndarray) -> np.ndarray:
    s = np.asarray(class_scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def lifted_plane_scores(model: PlaneMixture, lifted: np.ndarray) -> np.ndarray:
    """(n, m_total) plane scores for rows already in the lifted space."""
    return lifted @ model.weights.T + model.biases


def pooled_scores(plane_mat: np.ndarray, offsets: np.ndarray,
                  alpha: float) -> np.ndarray:
    """Per-class soft-OR over columns of an (n, m_total) plane-score matrix."""
    n = plane_mat.shape[0]
    out = np.empty((n, len(offsets) - 1))
    for c in range(len(offsets) - 1):
        seg = plane_mat[:, offsets[c]:offsets[c + 1]]
        top = seg.max(axis=1)
        out[:, c] = top + np.log(
            np.exp(alpha * (seg - top[:, None])).sum(axis=1)) / alpha
    return out


def segment_responsibilities(plane_mat: np.ndarray, offsets: np.ndarray,
                             alpha: float) -> np.ndarray:
    """(n, m_total) responsibilities; each class block sums to 1 per row."""
    out = np.empty_like(plane_mat)
    for c in range(len(offsets) - 1):
        seg = plane_mat[:, offsets[c]:offsets[c + 1]]
        e = np.exp(alpha * (seg - seg.max(axis=1, keepdims=True)))
        out[:, offsets[c]:offsets[c + 1]] = e / e.sum(axis=1, keepdims=True)
    return out


def plane_scores(model: PlaneMixture, x: np.ndarray) -> list[np.ndarray]:
    """Ragged per-class plane scores for one raw input vector."""
    lifted = model.pipeline.apply(np.asarray(x, dtype=np.float64))
    flat = model.weights @ lifted + model.biases
    return [flat[model.offsets[c]:model.offsets[c + 1]]
            for c in range(model.class_count)]


def forward(model: PlaneMixture, x: np.ndarray) -> ForwardResult:
    """Full single-example pass: plane scores, responsibilities, posterior."""
    per_class = plane_scores(model, x)
    resp = tuple(responsibilities(z, model.alpha) for z in per_class)
    scores = np.array([class_score(z, model.alpha) for z in per_class])
    return ForwardResult(tuple(per_class), resp, scores, posterior(scores))


def class_scores(model: PlaneMixture, x: np.ndarray) -> np.ndarray:
    """(n, class_count) pooled scores for a batch of raw inputs."""
    lifted = model.pipeline.apply(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    return pooled_scores(lifted_plane_scores(model, lifted), model.offsets, model.alpha)


def log_posterior(model: PlaneMixture, x: np.ndarray) -> np.ndarray:
    s = class_scores(model, x)
    shifted = s - s.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def predict_proba(model: PlaneMixture, x: np.ndarray) -> np.ndarray:
    return posterior(class_scores(model, x))


def predict(model: PlaneMixture, x: np.ndarray) -> np.ndarray:
    """Batch argmax prediction; score ties resolve to the lower class index."""
    return np.argmax(class_scores(model, x), axis=1)
