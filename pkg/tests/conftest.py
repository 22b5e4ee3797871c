import pytest

from padbench.dataset import FixtureConfig, synthesize_fixture
from padbench.model import PADNetSpec, build_padnet, train, write_backbone_checkpoint

# 16 bona fide + 16 Dell-GA7 attacks at 64x64
LEARNABILITY_FIXTURE = FixtureConfig(
    n_subjects=2, n_bonafide_per_subject=8, pais_list=("Dell-GA7",), n_attack_per_pais=16, image_size=64, seed=0
)
MULTI_PAIS_FIXTURE = FixtureConfig(
    n_subjects=4,
    n_bonafide_per_subject=3,
    pais_list=("Dell-GA7", "S3D-GS9", "Print-GA7"),
    n_attack_per_pais=6,
    image_size=32,
    seed=3,
)


@pytest.fixture(scope="session")
def backbone_ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("backbone") / "mobilenet_v2.pth"
    write_backbone_checkpoint(path, seed=0)
    return path


@pytest.fixture(scope="session")
def learn_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("learn")
    return out, synthesize_fixture(LEARNABILITY_FIXTURE, out)


@pytest.fixture(scope="session")
def multi_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("multi")
    return out, synthesize_fixture(MULTI_PAIS_FIXTURE, out)


@pytest.fixture(scope="session")
def trained_padnet1(backbone_ckpt, learn_fixture):
    """PADNet-1 reduced to 5 epochs on the learnability fixture."""
    _, manifest = learn_fixture
    model = build_padnet(PADNetSpec.padnet1(epochs=5), backbone_ckpt)
    result = train(model, manifest)
    return result.model, result.history, manifest
