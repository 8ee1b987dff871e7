"""DICOM de-identification toolkit."""

__version__ = "0.1.0"

from .dataset import DataElement, Dataset, DicomFile, EXPLICIT_VR_LE, IMPLICIT_VR_LE
from .parser import parse_file
from .tags import Tag
from .writer import write_file

__all__ = [
    "DataElement",
    "Dataset",
    "DicomFile",
    "EXPLICIT_VR_LE",
    "IMPLICIT_VR_LE",
    "Tag",
    "parse_file",
    "write_file",
    "__version__",
]
