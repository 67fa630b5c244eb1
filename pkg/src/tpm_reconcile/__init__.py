"""Tree Parity Machine key reconciliation for QKD post-processing."""

__version__ = "0.1.0"

from .tpm import Evaluation, Rule, TpmParams, clip, evaluate, train, weights_equal
from .codec import decode, derive_halfwidth, encode, sequence_length
from .channel import SeededRng, corrupt, generate_key, make_frame, trial_seed
from .reconciliation import ReconciliationReport, SessionConfig, TranscriptEntry, reconcile
from .metrics import SweepPoint, aggregate, entropy_loss, frame_error_rate

__all__ = [
    "Evaluation",
    "ReconciliationReport",
    "Rule",
    "SeededRng",
    "SessionConfig",
    "SweepPoint",
    "TpmParams",
    "TranscriptEntry",
    "aggregate",
    "clip",
    "corrupt",
    "decode",
    "derive_halfwidth",
    "encode",
    "entropy_loss",
    "evaluate",
    "frame_error_rate",
    "generate_key",
    "make_frame",
    "reconcile",
    "sequence_length",
    "train",
    "trial_seed",
    "weights_equal",
]
