"""Embedding visualisation: a two-unit embedding head, t-SNE/PCA projection and scatter plots."""

from __future__ import annotations

import os
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from matplotlib import colormaps
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from torch import nn

from padbench.dataset.manifest import Label, Manifest, SampleRecord
from padbench.errors import DomainError, FormatError
from padbench.model.backbone import FEATURE_DIM, Backbone, load_backbone, unit_of
from padbench.model.padnet import MODEL_SCHEMA_VERSION, FreezePlan, read_model_file
from padbench.model.preprocessing import PREPROCESSING, load_batch
from padbench.model.training import EpochStats, TrainConfig, fit

DEFAULT_PERPLEXITY = 30.0
DEFAULT_TSNE_ITER = 1000
# exact gradients up to this many points, Barnes-Hut above
EXACT_TSNE_LIMIT = 1000


@dataclass(frozen=True)
class EmbeddingPoint:
    sample_id: str
    coords: tuple[float, float]
    label: str

    def __post_init__(self) -> None:
        if not all(np.isfinite(self.coords)):
            raise DomainError(f"non-finite embedding coordinates for {self.sample_id!r}")


class Embedder(nn.Module):
    """Backbone + 2-unit linear embedding (+ a classifier used only while training)."""

    def __init__(self, backbone: Backbone, classes: Sequence[str], freeze_plan: FreezePlan | None = None):
        super().__init__()
        self.backbone = backbone
        self.embed = nn.Linear(FEATURE_DIM, 2)
        self.classes = list(classes)
        self.classifier: nn.Linear | None = nn.Linear(2, len(self.classes))
        plan = freeze_plan or FreezePlan.freeze_through(26)
        for name, p in self.backbone.named_parameters():
            p.requires_grad_(not plan.is_frozen(unit_of(name)))

    def train(self, mode: bool = True) -> "Embedder":
        super().train(mode)
        self.backbone.eval()
        return self

    def embedding(self, x: torch.Tensor) -> torch.Tensor:
        return self.embed(self.backbone(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.classifier is None:
            raise DomainError("embedder classifier was discarded after training")
        return self.classifier(self.embedding(x))


def _label_of(sample: SampleRecord, label_by: str) -> str | None:
    if label_by == "subject":
        return sample.subject_id if sample.label is Label.BONA_FIDE else None
    if label_by == "group":
        return sample.group
    raise DomainError(f"unknown label_by {label_by!r}")


def build_embedder(
    manifest: Manifest,
    checkpoint: str | os.PathLike | None = None,
    config: TrainConfig | None = None,
    label_by: str = "subject",
) -> tuple[Embedder, list[EpochStats]]:
    """Train a 2-D embedder on ``manifest``.

    With ``label_by="subject"`` the targets are the bona fide subject
    identities; ``"group"`` uses bona fide vs. each PAIS. The temporary
    classifier is discarded once training finishes.
    """
    config = config or TrainConfig(epochs=10)
    samples = [s for s in manifest.samples if _label_of(s, label_by) is not None]
    classes = sorted({_label_of(s, label_by) for s in samples})
    if len(classes) < 2:
        raise DomainError(f"embedding needs at least 2 classes, found {len(classes)}")
    backbone, _ = load_backbone(checkpoint)
    torch.manual_seed(config.seed)
    model = Embedder(backbone, classes)
    index = {c: i for i, c in enumerate(classes)}
    targets = F.one_hot(torch.tensor([index[_label_of(s, label_by)] for s in samples]), len(classes)).float()
    paths = [manifest.resolve(s) for s in samples]

    def correct(logits, y):
        return logits.argmax(1) == y.argmax(1)

    history = fit(model, paths, targets, config, correct)
    model.classifier = None
    model.eval()
    return model, history


@torch.no_grad()
def extract_features(backbone: Backbone, samples: Sequence[SampleRecord], root, batch_size: int = 32) -> np.ndarray:
    backbone.eval()
    chunks = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        chunks.append(backbone(load_batch([Path(root) / s.path for s in chunk])).numpy())
    return np.concatenate(chunks).astype(np.float64)


@torch.no_grad()
def embed(
    embedder: Embedder, samples: Sequence[SampleRecord], root, label_by: str = "subject", batch_size: int = 32
) -> list[EmbeddingPoint]:
    embedder.eval()
    out = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        coords = embedder.embedding(load_batch([Path(root) / s.path for s in chunk])).tolist()
        for s, (a, b) in zip(chunk, coords):
            out.append(EmbeddingPoint(s.path, (float(a), float(b)), _label_of(s, label_by) or s.group))
    return out


def save_embedder(embedder: Embedder, path: str | os.PathLike) -> None:
    state = {k: v for k, v in embedder.state_dict().items() if not k.startswith("classifier.")}
    torch.save(
        {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "embedder",
            "classes": embedder.classes,
            "preprocessing": PREPROCESSING,
            "state_dict": state,
        },
        path,
    )


def load_embedder(path: str | os.PathLike) -> Embedder:
    blob = read_model_file(path)
    if blob.get("kind") != "embedder":
        raise FormatError(f"{path}: expected an embedder, found {blob.get('kind')!r}")
    model = Embedder(Backbone(), blob["classes"])
    model.classifier = None
    try:
        model.load_state_dict(blob["state_dict"])
    except RuntimeError as exc:
        raise FormatError(f"{path}: inconsistent embedder file ({exc})") from exc
    return model.eval()


def tsne_project(
    features, perplexity: float = DEFAULT_PERPLEXITY, seed: int = 0, n_iter: int = DEFAULT_TSNE_ITER
) -> np.ndarray:
    """2-D t-SNE embedding (scikit-learn); one row per input vector."""
    from sklearn.manifold import TSNE

    try:
        x = np.asarray(features, dtype=np.float64)
    except ValueError as exc:
        raise DomainError(f"feature vectors must share one dimension: {exc}") from exc
    if x.ndim != 2:
        raise DomainError(f"features must be a 2-D array of vectors, got shape {x.shape}")
    if perplexity <= 0:
        raise DomainError("perplexity must be > 0")
    if x.shape[0] < 3 * perplexity:
        raise DomainError(f"t-SNE needs at least 3*perplexity = {3 * perplexity:g} samples, got {x.shape[0]}")
    if not np.any(x.std(axis=0) > 0):
        # all rows identical: every neighbourhood is the whole set
        return np.zeros((x.shape[0], 2))
    method = "exact" if x.shape[0] <= EXACT_TSNE_LIMIT else "barnes_hut"
    tsne = TSNE(
        n_components=2, perplexity=perplexity, random_state=seed, init="pca", max_iter=n_iter, method=method
    )
    return tsne.fit_transform(x)


def pca_project(features) -> np.ndarray:
    """Baseline linear projection onto the top two principal components."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DomainError("PCA needs at least two feature vectors")
    centred = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    comps = vt[:2]
    # deterministic sign: largest-magnitude loading positive
    signs = np.sign(comps[np.arange(comps.shape[0]), np.abs(comps).argmax(axis=1)])
    proj = centred @ (comps * signs[:, None]).T
    if proj.shape[1] < 2:
        proj = np.pad(proj, ((0, 0), (0, 2 - proj.shape[1])))
    return proj


def scatter_plot(points: Sequence[EmbeddingPoint], out_path: str | os.PathLike, title: str | None = None) -> Path:
    """Write a PNG scatter plot with one colour per label."""
    if not points:
        raise DomainError("nothing to plot")
    out_path = Path(out_path)
    labels = sorted({p.label for p in points})
    cmap = colormaps["tab10" if len(labels) <= 10 else "tab20"]
    fig = Figure(figsize=(6, 6), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    for i, lab in enumerate(labels):
        xy = np.array([p.coords for p in points if p.label == lab])
        ax.scatter(xy[:, 0], xy[:, 1], s=18, color=cmap(i % cmap.N), label=lab)
    ax.legend(loc="best", fontsize=7, markerscale=1.2, frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, format="png", metadata={"Software": None})
    return out_path


def neighbour_purity(coords, labels, k: int = 10) -> float:
    """Mean fraction of each point's ``k`` nearest neighbours sharing its label."""
    x = np.asarray(coords, dtype=np.float64)
    y = np.asarray(labels)
    d = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d, np.inf)
    nn_idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    return float((y[nn_idx] == y[:, None]).mean())
