"""Exception hierarchy shared by all forgerykit modules."""


class ForgerykitError(Exception):
    """Base class for all errors raised by this package."""


class MalformedImageError(ForgerykitError):
    """An image stream could not be decoded."""


class UnsupportedFormatError(ForgerykitError):
    """An image stream is neither JPEG nor PNG."""


class EncodeFailureError(ForgerykitError):
    """The underlying codec failed to encode an image."""


class ShapeMismatchError(ForgerykitError):
    """Two tensors that must share a shape do not."""


class MissingDirectoryError(ForgerykitError):
    """A required dataset directory does not exist."""


class EmptyClassError(ForgerykitError):
    """A dataset class directory contains no images."""


class DegenerateClassError(ForgerykitError):
    """A split would leave a class with an empty train or test subset."""


class IoFailureError(ForgerykitError):
    """A file could not be read or written."""


class LengthMismatchError(ForgerykitError):
    """Two sequences that must have equal length do not."""


class EmptySplitError(ForgerykitError):
    """A manifest split required for training or scoring is empty."""


class MissingFileError(ForgerykitError):
    """A manifest record points at a file that does not exist."""


class EmptyInputError(ForgerykitError):
    """An operation received an empty score or sample list."""


class SingleClassInputError(ForgerykitError):
    """ROC construction requires at least one positive and one negative."""


class ParseError(ForgerykitError):
    """A persisted file is malformed or violates its schema."""


class RangeError(ForgerykitError):
    """A parsed value lies outside its permitted range."""


class DuplicateIdError(ForgerykitError):
    """Two records in one collection share an id."""
