"""Exception types shared across the toolkit."""


class DicomDeidError(Exception):
    """Base class for every error raised by this package."""


class DicomParseError(DicomDeidError):
    """The byte stream is not a DICOM structure we can parse."""


class InvalidMagic(DicomParseError):
    """No DICM marker and no recognizable bare dataset."""


class TruncatedFile(DicomParseError):
    """The stream ended in the middle of an element."""


class UnsupportedTransferSyntax(DicomParseError):
    """Compressed or big-endian transfer syntax; the file must be skipped, not guessed at."""

    def __init__(self, uid: str):
        super().__init__(f"unsupported transfer syntax: {uid}")
        self.uid = uid


class ValueTooLong(DicomDeidError):
    """Value exceeds the 16-bit length field of its VR in explicit encoding."""


class UnsupportedPixelFormat(DicomDeidError):
    """Pixel module outside the supported envelope (bits, samples, photometric)."""


class SizeMismatch(UnsupportedPixelFormat):
    """Declared rows*cols*samples*frames does not match the pixel data length."""


class SchemaError(DicomDeidError):
    """Configuration document failed validation."""


class InvalidTag(SchemaError):
    """A tag string is not of the form GGGG,EEEE."""


class InvalidAction(SchemaError):
    """An action is not legal for the VR of the tag it targets."""


class UnmappableValue(DicomDeidError):
    """A value could not be transformed by the requested action (strict mode)."""


class MalformedDate(UnmappableValue):
    pass


class MalformedTime(UnmappableValue):
    pass


class EngineUnavailable(DicomDeidError):
    """The OCR engine could not be started or stopped responding."""


class EmptySeeds(DicomDeidError):
    """Keyword mining was invoked without any seed values."""


class MissingCounterpart(DicomDeidError):
    """An original file has no de-identified counterpart at the same relative path."""
