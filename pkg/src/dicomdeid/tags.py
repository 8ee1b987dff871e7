"""Tags: the (group, element) pairs addressing header fields.

Also carries the built-in dictionary used to resolve VRs when parsing
implicit VR streams. The dictionary is intentionally partial: anything
not listed parses as UN and is preserved verbatim.
"""

from __future__ import annotations

import re
from typing import NamedTuple

from .errors import InvalidTag

_TAG_RE = re.compile(r"^\(?([0-9A-Fa-f]{4})\s*,\s*([0-9A-Fa-f]{4})\)?$")


class Tag(NamedTuple):
    group: int
    element: int

    def is_private(self) -> bool:
        return self.group % 2 == 1

    def is_group_length(self) -> bool:
        return self.element == 0x0000

    @classmethod
    def parse(cls, text: str) -> "Tag":
        m = _TAG_RE.match(text.strip())
        if not m:
            raise InvalidTag(f"not a GGGG,EEEE tag: {text!r}")
        return cls(int(m.group(1), 16), int(m.group(2), 16))

    def __str__(self) -> str:
        return f"{self.group:04X},{self.element:04X}"

    def __repr__(self) -> str:
        return f"Tag({self.group:#06x}, {self.element:#06x})"


# Delimiters used by sequence encoding.
ITEM = Tag(0xFFFE, 0xE000)
ITEM_DELIM = Tag(0xFFFE, 0xE00D)
SEQ_DELIM = Tag(0xFFFE, 0xE0DD)

# File meta
FILE_META_GROUP_LENGTH = Tag(0x0002, 0x0000)
MEDIA_SOP_CLASS_UID = Tag(0x0002, 0x0002)
MEDIA_SOP_INSTANCE_UID = Tag(0x0002, 0x0003)
TRANSFER_SYNTAX_UID = Tag(0x0002, 0x0010)

# Frequently consulted dataset tags
SOP_CLASS_UID = Tag(0x0008, 0x0016)
SOP_INSTANCE_UID = Tag(0x0008, 0x0018)
STUDY_INSTANCE_UID = Tag(0x0020, 0x000D)
SERIES_INSTANCE_UID = Tag(0x0020, 0x000E)
PATIENT_NAME = Tag(0x0010, 0x0010)
PATIENT_ID = Tag(0x0010, 0x0020)
PATIENT_BIRTH_DATE = Tag(0x0010, 0x0030)
PATIENT_AGE = Tag(0x0010, 0x1010)
INSTANCE_NUMBER = Tag(0x0020, 0x0013)
MODALITY = Tag(0x0008, 0x0060)
SPECIFIC_CHARACTER_SET = Tag(0x0008, 0x0005)
PATIENT_IDENTITY_REMOVED = Tag(0x0012, 0x0062)
DEIDENTIFICATION_METHOD = Tag(0x0012, 0x0063)

SAMPLES_PER_PIXEL = Tag(0x0028, 0x0002)
PHOTOMETRIC_INTERPRETATION = Tag(0x0028, 0x0004)
PLANAR_CONFIGURATION = Tag(0x0028, 0x0006)
NUMBER_OF_FRAMES = Tag(0x0028, 0x0008)
ROWS = Tag(0x0028, 0x0010)
COLUMNS = Tag(0x0028, 0x0011)
BITS_ALLOCATED = Tag(0x0028, 0x0100)
BITS_STORED = Tag(0x0028, 0x0101)
HIGH_BIT = Tag(0x0028, 0x0102)
PIXEL_REPRESENTATION = Tag(0x0028, 0x0103)
WINDOW_CENTER = Tag(0x0028, 0x1050)
WINDOW_WIDTH = Tag(0x0028, 0x1051)
RESCALE_INTERCEPT = Tag(0x0028, 0x1052)
RESCALE_SLOPE = Tag(0x0028, 0x1053)
PIXEL_DATA = Tag(0x7FE0, 0x0010)


def _t(group: int, element: int, vr: str, name: str):
    return Tag(group, element), (vr, name)


# VR dictionary for implicit VR parsing. Covers the patient, study, series,
# instance, equipment and image-pixel attributes this tool reads or rewrites,
# plus the common free-text fields where identifying data hides.
DICTIONARY: dict[Tag, tuple[str, str]] = dict(
    [
        _t(0x0002, 0x0001, "OB", "FileMetaInformationVersion"),
        _t(0x0002, 0x0002, "UI", "MediaStorageSOPClassUID"),
        _t(0x0002, 0x0003, "UI", "MediaStorageSOPInstanceUID"),
        _t(0x0002, 0x0010, "UI", "TransferSyntaxUID"),
        _t(0x0002, 0x0012, "UI", "ImplementationClassUID"),
        _t(0x0002, 0x0013, "SH", "ImplementationVersionName"),
        _t(0x0002, 0x0016, "AE", "SourceApplicationEntityTitle"),
        _t(0x0008, 0x0005, "CS", "SpecificCharacterSet"),
        _t(0x0008, 0x0008, "CS", "ImageType"),
        _t(0x0008, 0x0012, "DA", "InstanceCreationDate"),
        _t(0x0008, 0x0013, "TM", "InstanceCreationTime"),
        _t(0x0008, 0x0016, "UI", "SOPClassUID"),
        _t(0x0008, 0x0018, "UI", "SOPInstanceUID"),
        _t(0x0008, 0x0020, "DA", "StudyDate"),
        _t(0x0008, 0x0021, "DA", "SeriesDate"),
        _t(0x0008, 0x0022, "DA", "AcquisitionDate"),
        _t(0x0008, 0x0023, "DA", "ContentDate"),
        _t(0x0008, 0x002A, "DT", "AcquisitionDateTime"),
        _t(0x0008, 0x0030, "TM", "StudyTime"),
        _t(0x0008, 0x0031, "TM", "SeriesTime"),
        _t(0x0008, 0x0032, "TM", "AcquisitionTime"),
        _t(0x0008, 0x0033, "TM", "ContentTime"),
        _t(0x0008, 0x0050, "SH", "AccessionNumber"),
        _t(0x0008, 0x0060, "CS", "Modality"),
        _t(0x0008, 0x0064, "CS", "ConversionType"),
        _t(0x0008, 0x0070, "LO", "Manufacturer"),
        _t(0x0008, 0x0080, "LO", "InstitutionName"),
        _t(0x0008, 0x0081, "ST", "InstitutionAddress"),
        _t(0x0008, 0x0090, "PN", "ReferringPhysicianName"),
        _t(0x0008, 0x0092, "ST", "ReferringPhysicianAddress"),
        _t(0x0008, 0x0094, "SH", "ReferringPhysicianTelephoneNumbers"),
        _t(0x0008, 0x1010, "SH", "StationName"),
        _t(0x0008, 0x1030, "LO", "StudyDescription"),
        _t(0x0008, 0x103E, "LO", "SeriesDescription"),
        _t(0x0008, 0x1040, "LO", "InstitutionalDepartmentName"),
        _t(0x0008, 0x1048, "PN", "PhysiciansOfRecord"),
        _t(0x0008, 0x1050, "PN", "PerformingPhysicianName"),
        _t(0x0008, 0x1060, "PN", "NameOfPhysiciansReadingStudy"),
        _t(0x0008, 0x1070, "PN", "OperatorsName"),
        _t(0x0008, 0x1080, "LO", "AdmittingDiagnosesDescription"),
        _t(0x0008, 0x1090, "LO", "ManufacturerModelName"),
        _t(0x0008, 0x1110, "SQ", "ReferencedStudySequence"),
        _t(0x0008, 0x1111, "SQ", "ReferencedPerformedProcedureStepSequence"),
        _t(0x0008, 0x1115, "SQ", "ReferencedSeriesSequence"),
        _t(0x0008, 0x1120, "SQ", "ReferencedPatientSequence"),
        _t(0x0008, 0x1140, "SQ", "ReferencedImageSequence"),
        _t(0x0008, 0x1150, "UI", "ReferencedSOPClassUID"),
        _t(0x0008, 0x1155, "UI", "ReferencedSOPInstanceUID"),
        _t(0x0008, 0x2111, "ST", "DerivationDescription"),
        _t(0x0010, 0x0010, "PN", "PatientName"),
        _t(0x0010, 0x0020, "LO", "PatientID"),
        _t(0x0010, 0x0021, "LO", "IssuerOfPatientID"),
        _t(0x0010, 0x0030, "DA", "PatientBirthDate"),
        _t(0x0010, 0x0032, "TM", "PatientBirthTime"),
        _t(0x0010, 0x0040, "CS", "PatientSex"),
        _t(0x0010, 0x1000, "LO", "OtherPatientIDs"),
        _t(0x0010, 0x1001, "PN", "OtherPatientNames"),
        _t(0x0010, 0x1010, "AS", "PatientAge"),
        _t(0x0010, 0x1020, "DS", "PatientSize"),
        _t(0x0010, 0x1030, "DS", "PatientWeight"),
        _t(0x0010, 0x1040, "LO", "PatientAddress"),
        _t(0x0010, 0x1060, "PN", "PatientMotherBirthName"),
        _t(0x0010, 0x2154, "SH", "PatientTelephoneNumbers"),
        _t(0x0010, 0x21B0, "LT", "AdditionalPatientHistory"),
        _t(0x0010, 0x4000, "LT", "PatientComments"),
        _t(0x0012, 0x0062, "CS", "PatientIdentityRemoved"),
        _t(0x0012, 0x0063, "LO", "DeidentificationMethod"),
        _t(0x0018, 0x0010, "LO", "ContrastBolusAgent"),
        _t(0x0018, 0x0015, "CS", "BodyPartExamined"),
        _t(0x0018, 0x0050, "DS", "SliceThickness"),
        _t(0x0018, 0x0060, "DS", "KVP"),
        _t(0x0018, 0x1000, "LO", "DeviceSerialNumber"),
        _t(0x0018, 0x1016, "LO", "SecondaryCaptureDeviceManufacturer"),
        _t(0x0018, 0x1020, "LO", "SoftwareVersions"),
        _t(0x0018, 0x1030, "LO", "ProtocolName"),
        _t(0x0018, 0x1200, "DA", "DateOfLastCalibration"),
        _t(0x0018, 0x1201, "TM", "TimeOfLastCalibration"),
        _t(0x0018, 0x5100, "CS", "PatientPosition"),
        _t(0x0020, 0x000D, "UI", "StudyInstanceUID"),
        _t(0x0020, 0x000E, "UI", "SeriesInstanceUID"),
        _t(0x0020, 0x0010, "SH", "StudyID"),
        _t(0x0020, 0x0011, "IS", "SeriesNumber"),
        _t(0x0020, 0x0012, "IS", "AcquisitionNumber"),
        _t(0x0020, 0x0013, "IS", "InstanceNumber"),
        _t(0x0020, 0x0020, "CS", "PatientOrientation"),
        _t(0x0020, 0x0032, "DS", "ImagePositionPatient"),
        _t(0x0020, 0x0037, "DS", "ImageOrientationPatient"),
        _t(0x0020, 0x0052, "UI", "FrameOfReferenceUID"),
        _t(0x0020, 0x1040, "LO", "PositionReferenceIndicator"),
        _t(0x0020, 0x4000, "LT", "ImageComments"),
        _t(0x0028, 0x0002, "US", "SamplesPerPixel"),
        _t(0x0028, 0x0004, "CS", "PhotometricInterpretation"),
        _t(0x0028, 0x0006, "US", "PlanarConfiguration"),
        _t(0x0028, 0x0008, "IS", "NumberOfFrames"),
        _t(0x0028, 0x0010, "US", "Rows"),
        _t(0x0028, 0x0011, "US", "Columns"),
        _t(0x0028, 0x0030, "DS", "PixelSpacing"),
        _t(0x0028, 0x0100, "US", "BitsAllocated"),
        _t(0x0028, 0x0101, "US", "BitsStored"),
        _t(0x0028, 0x0102, "US", "HighBit"),
        _t(0x0028, 0x0103, "US", "PixelRepresentation"),
        _t(0x0028, 0x0301, "CS", "BurnedInAnnotation"),
        _t(0x0028, 0x1050, "DS", "WindowCenter"),
        _t(0x0028, 0x1051, "DS", "WindowWidth"),
        _t(0x0028, 0x1052, "DS", "RescaleIntercept"),
        _t(0x0028, 0x1053, "DS", "RescaleSlope"),
        _t(0x0028, 0x1054, "LO", "RescaleType"),
        _t(0x0032, 0x1032, "PN", "RequestingPhysician"),
        _t(0x0032, 0x1060, "LO", "RequestedProcedureDescription"),
        _t(0x0032, 0x4000, "LT", "StudyComments"),
        _t(0x0038, 0x0300, "LO", "CurrentPatientLocation"),
        _t(0x0038, 0x0400, "LO", "PatientInstitutionResidence"),
        _t(0x0040, 0x0006, "PN", "ScheduledPerformingPhysicianName"),
        _t(0x0040, 0x0241, "AE", "PerformedStationAETitle"),
        _t(0x0040, 0x0244, "DA", "PerformedProcedureStepStartDate"),
        _t(0x0040, 0x0245, "TM", "PerformedProcedureStepStartTime"),
        _t(0x0040, 0x0254, "LO", "PerformedProcedureStepDescription"),
        _t(0x0040, 0x0275, "SQ", "RequestAttributesSequence"),
        _t(0x0040, 0x1001, "SH", "RequestedProcedureID"),
        _t(0x0040, 0x2001, "LO", "ReasonForTheImagingServiceRequest"),
        _t(0x0040, 0xA123, "PN", "PersonName"),
        _t(0x7FE0, 0x0010, "OW", "PixelData"),
    ]
)


def vr_of(tag: Tag) -> str:
    """Dictionary VR for implicit streams; UN when unknown."""
    if tag.is_group_length():
        return "UL"
    entry = DICTIONARY.get(tag)
    return entry[0] if entry else "UN"


def name_of(tag: Tag) -> str:
    entry = DICTIONARY.get(tag)
    return entry[1] if entry else ("PrivateTag" if tag.is_private() else "Unknown")
