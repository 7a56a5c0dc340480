"""Keyword-spotting corpora: manifests, repositories, synthetic data and batching."""

from .loader import FeaturePipeline, batches, epoch_order
from .models import (
    KEYWORDS,
    SILENCE_LABEL,
    SPEECH_COMMANDS_CLASSES,
    UNKNOWN_LABEL,
    DatasetError,
    Example,
    Manifest,
    ManifestEntry,
    SilenceSource,
)
from .repositories import (
    DataRepository,
    MicroRepository,
    SpeechCommandsRepository,
    export_manifest,
    import_manifest,
    load_manifest,
    make_silence,
    rebalance,
)
from .synthetic import MICRO_CLASSES, micro_fixture

__all__ = [
    "DataRepository",
    "DatasetError",
    "Example",
    "FeaturePipeline",
    "KEYWORDS",
    "MICRO_CLASSES",
    "Manifest",
    "ManifestEntry",
    "MicroRepository",
    "SILENCE_LABEL",
    "SPEECH_COMMANDS_CLASSES",
    "SilenceSource",
    "SpeechCommandsRepository",
    "UNKNOWN_LABEL",
    "batches",
    "epoch_order",
    "export_manifest",
    "import_manifest",
    "load_manifest",
    "make_silence",
    "micro_fixture",
    "rebalance",
]
