"""Exception types shared across the package.

The CLI maps these onto exit codes: input/data problems exit 3, numeric
failures exit 4.
"""


class InputDataError(ValueError):
    """Raised when user-supplied data violates a documented precondition."""


class MidiParseError(InputDataError):
    """Malformed Standard MIDI File; carries the offending byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedMidiError(MidiParseError):
    """Structurally valid MIDI that this package does not handle (e.g. format 2)."""


class NumericalError(RuntimeError):
    """Raised when an iterative computation produces non-finite values."""
