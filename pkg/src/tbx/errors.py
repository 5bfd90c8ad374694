"""Exception types shared across the toolkit.

Everything raised on bad input derives from TbxError so callers (and the
CLI) can catch one base class and report per-record failures.
"""


class TbxError(Exception):
    """Base class for all toolkit errors."""


# --- binary heatmap format ---

class BadMagic(TbxError):
    """File does not start with the heatmap magic bytes."""


class BadVersion(TbxError):
    """Unsupported format version byte."""


class BadHeader(TbxError):
    """Header fields are malformed (e.g. zero width or height)."""


class TruncatedPayload(TbxError):
    """Payload size does not match the header dimensions."""


class ValueOutOfRange(TbxError):
    """A cell value lies outside [0, 1] beyond tolerance."""


class IoFailure(TbxError):
    """Underlying OS-level read or write failure."""


# --- JSON documents ---

class SchemaError(TbxError):
    """Missing field, wrong type, or malformed JSON document."""


class BboxOutOfImage(TbxError):
    """Bounding box is degenerate or exceeds the image bounds."""


class ConfidenceOutOfRange(TbxError):
    """Detection confidence outside [0, 1]."""


class ProbSumError(TbxError):
    """Probability vector does not sum to 1 within tolerance."""


class DuplicateImageId(TbxError):
    """Manifest contains the same image_id twice."""


class CountMismatch(TbxError):
    """Stored total differs from the sum of per-class counts."""


# --- geometry ---

class DegenerateBbox(TbxError):
    """No pixel center falls inside the bounding box."""


# --- occurrence-weight model ---

class UnknownClass(TbxError):
    """Class name not present in the declared class list."""


class UnseenObject(TbxError):
    """Object label absent from the trained model (or zero total)."""


# --- pipeline ---

class MissingHeatmap(TbxError):
    """Scenario 1 selected but no heatmap was supplied."""


class DimensionMismatch(TbxError):
    """Heatmap resolution differs from the image resolution."""


class ClassListMismatch(TbxError):
    """Probability vector and trained model disagree on the class list."""


# --- sentence rendering ---

class EmptyObjectList(TbxError):
    """Object-bearing template rendered with no objects."""


# --- tuning / evaluation ---

class TooFewRecords(TbxError):
    """Not enough records for the requested number of folds."""


class MissingLabel(TbxError):
    """Record lacks the true label required for training or evaluation."""


class NoAnnotatedRecords(TbxError):
    """No record carries a usable (non-empty) annotation."""
