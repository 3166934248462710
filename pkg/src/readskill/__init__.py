"""Batch screening toolkit: predicts a child reader's word-decoding skill
class from low-level acoustics of oral reading recordings, with lexical
miscue clustering, a staged random-forest classifier, a recognizer-output
comparison path and a deterministic synthetic-corpus generator."""

from .errors import ReadskillError
from .lexical import SkillClass

__version__ = "0.1.0"

__all__ = ["ReadskillError", "SkillClass", "__version__"]
