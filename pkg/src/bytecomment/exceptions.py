"""Exception hierarchy.

Every error carries a ``category`` string, used by the CLI to report a
machine-readable error class, and an ``exit_code``.
"""


class BytecommentError(Exception):
    category = "Error"
    exit_code = 2


class InputError(BytecommentError, ValueError):
    category = "InputError"


class MalformedHex(InputError):
    category = "MalformedHex"


class EmptyCode(InputError):
    category = "EmptyCode"


class EmptyCfg(InputError):
    category = "EmptyCfg"


class EmptyComment(InputError):
    category = "EmptyComment"


class InsufficientData(InputError):
    category = "InsufficientData"


class EmptyCodebase(InputError):
    category = "EmptyCodebase"


class EmptyInput(InputError):
    category = "EmptyInput"


class UndefinedReference(InputError):
    category = "UndefinedReference"


class AlignmentError(InputError):
    category = "AlignmentError"


class ShapeError(InputError):
    category = "ShapeError"


class MaskError(InputError):
    category = "MaskError"


class StepError(InputError):
    category = "StepError"


class FormatError(InputError):
    """A persisted file (index, checkpoint, vocabulary) could not be read."""

    category = "FormatError"


class NumericFault(BytecommentError, ArithmeticError):
    category = "NumericFault"
    exit_code = 3
