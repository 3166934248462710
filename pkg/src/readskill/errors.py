"""Exception types raised across the toolkit.

Every failure mode that callers are expected to branch on gets its own
class so batch drivers can report per-file errors without string matching.
"""


class ReadskillError(Exception):
    """Base class for all toolkit errors."""


# audio ingestion
class NotWav(ReadskillError):
    pass


class UnsupportedEncoding(ReadskillError):
    pass


class WrongChannelCount(ReadskillError):
    pass


class WrongSampleRate(ReadskillError):
    pass


# transcription parsing
class UnknownLabel(ReadskillError):
    pass


class WordCountMismatch(ReadskillError):
    pass


class MissingSubstitutionText(ReadskillError):
    pass


class UnexpectedSubstitutionText(ReadskillError):
    pass


class EmptyTranscription(ReadskillError):
    pass


# interval parsing
class EmptyIntervals(ReadskillError):
    pass


class Unsorted(ReadskillError):
    pass


class Overlap(ReadskillError):
    pass


class OutOfRange(ReadskillError):
    pass


class CoverageGap(ReadskillError):
    pass


# syllable counting
class EmptyWord(ReadskillError):
    pass


# framing / synthesis
class TooShort(ReadskillError):
    pass


# per-interval feature aggregation
class IntervalCountMismatch(ReadskillError):
    pass


# feature table I/O
class SchemaMismatch(ReadskillError):
    pass


# clustering
class TooFewPoints(ReadskillError):
    pass


class SingleCluster(ReadskillError):
    pass


class AmbiguousLabeling(ReadskillError):
    pass


# classification
class SingleClassTraining(ReadskillError):
    pass


class DimensionMismatch(ReadskillError):
    pass


class TooFewPerClass(ReadskillError):
    pass


class EmptyMatrix(ReadskillError):
    pass


# transcript alignment
class EmptyCanonical(ReadskillError):
    pass


class NoModel(ReadskillError):
    pass


# configuration
class ConfigError(ReadskillError):
    pass
