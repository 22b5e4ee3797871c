import numpy as np
import pytest
from oracles import knn_purity, three_blobs

from padbench.dataset import FixtureConfig, synthesize_fixture
from padbench.errors import DomainError, FormatError
from padbench.model import PADNetSpec, TrainConfig, build_padnet, save_model
from padbench.viz import (
    EmbeddingPoint,
    build_embedder,
    embed,
    extract_features,
    load_embedder,
    neighbour_purity,
    pca_project,
    save_embedder,
    scatter_plot,
    tsne_project,
)

ONE_EPOCH = TrainConfig(epochs=1, batch_size=16)


@pytest.fixture(scope="module")
def ten_subjects(tmp_path_factory):
    out = tmp_path_factory.mktemp("ten")
    return synthesize_fixture(FixtureConfig(10, 10, ("Dell-GA7",), 1, 32, 4), out)


def test_embedder_one_point_per_sample(ten_subjects, backbone_ckpt):
    bona_fide = [s for s in ten_subjects.samples if s.pais is None]
    embedder, history = build_embedder(ten_subjects, backbone_ckpt, ONE_EPOCH)
    points = embed(embedder, bona_fide, ten_subjects.root)
    assert len(points) == 100 and len(history) == 1
    assert {p.label for p in points} == set(ten_subjects.subjects)
    assert embedder.classifier is None


def test_embedder_deterministic(tmp_path, backbone_ckpt):
    m = synthesize_fixture(FixtureConfig(2, 3, ("Dell-GA7",), 2, 32, 0), tmp_path)
    runs = []
    for _ in range(2):
        e, _ = build_embedder(m, backbone_ckpt, ONE_EPOCH)
        runs.append([p.coords for p in embed(e, list(m.samples), m.root)])
    assert runs[0] == runs[1]


def test_embedder_one_subject(tmp_path, backbone_ckpt):
    m = synthesize_fixture(FixtureConfig(1, 3, ("Dell-GA7",), 2, 32, 0), tmp_path)
    with pytest.raises(DomainError):
        build_embedder(m, backbone_ckpt, ONE_EPOCH)


def test_embedder_save_load(tmp_path, backbone_ckpt, multi_fixture):
    _, m = multi_fixture
    e, _ = build_embedder(m, backbone_ckpt, ONE_EPOCH, label_by="group")
    save_embedder(e, tmp_path / "e.pt")
    loaded = load_embedder(tmp_path / "e.pt")
    a = embed(e, list(m.samples), m.root, label_by="group")
    b = embed(loaded, list(m.samples), m.root, label_by="group")
    assert np.allclose([p.coords for p in a], [p.coords for p in b], atol=1e-6)
    assert loaded.classes == ["Dell-GA7", "Print-GA7", "S3D-GS9", "bona_fide"]


def test_load_embedder_rejects_padnet(tmp_path, backbone_ckpt):
    save_model(build_padnet(PADNetSpec.padnet1(), backbone_ckpt), tmp_path / "p.pt")
    with pytest.raises(FormatError):
        load_embedder(tmp_path / "p.pt")


def test_extract_features_shape(backbone_ckpt, multi_fixture):
    from padbench.model import load_backbone

    _, m = multi_fixture
    net, _ = load_backbone(backbone_ckpt)
    feats = extract_features(net, list(m.samples)[:5], m.root)
    assert feats.shape == (5, 1280) and np.isfinite(feats).all()


# -- projections --------------------------------------------------------------


def test_tsne_blob_purity():
    x, y = three_blobs(0)
    coords = tsne_project(x, perplexity=10, seed=0)
    assert coords.shape == (90, 2)
    assert knn_purity(coords, list(y)) >= 0.9
    assert neighbour_purity(coords, y) == pytest.approx(knn_purity(coords, list(y)))


def test_tsne_deterministic():
    x, _ = three_blobs(1)
    assert np.array_equal(tsne_project(x, 10, seed=3), tsne_project(x, 10, seed=3))


def test_tsne_rotation_invariant_purity():
    for seed in range(5):
        x, y = three_blobs(seed)
        q, _ = np.linalg.qr(np.random.default_rng(100 + seed).normal(size=(50, 50)))
        p0 = knn_purity(tsne_project(x, 10, seed), list(y))
        p1 = knn_purity(tsne_project(x @ q, 10, seed), list(y))
        assert abs(p0 - p1) <= 0.05


def test_tsne_identical_rows():
    coords = tsne_project(np.ones((30, 5)), perplexity=5)
    d = np.linalg.norm(coords[:, None] - coords[None], axis=-1)
    diameter = d.max()
    assert diameter == 0.0 or (d <= 0.01 * diameter).all()


def test_tsne_preconditions():
    with pytest.raises(DomainError):
        tsne_project(np.zeros((20, 4)), perplexity=50)
    with pytest.raises(DomainError):
        tsne_project(np.zeros((20, 4)), perplexity=0)
    with pytest.raises(DomainError):
        tsne_project([[1.0, 2.0], [1.0]], perplexity=1)


def test_pca_baseline():
    x, y = three_blobs(2)
    coords = pca_project(x)
    assert coords.shape == (90, 2)
    assert neighbour_purity(coords, y) >= 0.9
    assert np.array_equal(coords, pca_project(x))


# -- plotting -----------------------------------------------------------------


def _points(n=100, n_labels=10):
    rng = np.random.default_rng(0)
    return [EmbeddingPoint(f"s{i}", tuple(rng.normal(size=2)), f"L{i % n_labels}") for i in range(n)]


def test_scatter_plot_writes_png(tmp_path):
    out = scatter_plot(_points(), tmp_path / "a.png", title="t")
    assert out.exists() and out.stat().st_size > 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_scatter_plot_deterministic(tmp_path):
    scatter_plot(_points(), tmp_path / "a.png")
    scatter_plot(_points(), tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_scatter_plot_errors(tmp_path):
    with pytest.raises(DomainError):
        scatter_plot([], tmp_path / "a.png")
    with pytest.raises(OSError):
        scatter_plot(_points(5, 2), tmp_path / "no" / "dir" / "a.png")


def test_point_must_be_finite():
    with pytest.raises(DomainError):
        EmbeddingPoint("x", (float("nan"), 0.0), "a")
