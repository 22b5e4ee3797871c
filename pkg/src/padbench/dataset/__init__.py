"""Dataset manifests, the capture filename grammar, splits and synthetic fixtures."""

from padbench.dataset.fixtures import FixtureConfig, synthesize_fixture
from padbench.dataset.manifest import (
    Finding,
    Label,
    Manifest,
    SampleRecord,
    build_manifest,
    load_manifest,
    published_manifest_stub,
    save_manifest,
    validate_manifest,
)
from padbench.dataset.split import SplitMode, SplitSpec, split
from padbench.dataset.taxonomy import (
    AttackType,
    FilenameInfo,
    PAISDescriptor,
    Position,
    Side,
    parse_filename,
)

__all__ = [
    "AttackType",
    "FilenameInfo",
    "Finding",
    "FixtureConfig",
    "Label",
    "Manifest",
    "PAISDescriptor",
    "Position",
    "SampleRecord",
    "Side",
    "SplitMode",
    "SplitSpec",
    "build_manifest",
    "load_manifest",
    "published_manifest_stub",
    "parse_filename",
    "save_manifest",
    "split",
    "synthesize_fixture",
    "validate_manifest",
]
