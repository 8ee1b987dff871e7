"""Value-representation tables.

Every VR maps to exactly one encoding rule in explicit VR little endian:
either a 2-byte length field, or 2 reserved bytes followed by a 4-byte
length field (DICOM PS3.5 7.1.2). The tables below drive both the parser
and the writer so the two can never disagree.
"""

# VRs using the long (reserved + 32-bit length) explicit form.
LONG_FORM_VRS = frozenset(
    {"OB", "OD", "OF", "OL", "OV", "OW", "SQ", "UC", "UN", "UR", "UT", "SV", "UV"}
)

# VRs using the short (16-bit length) explicit form.
SHORT_FORM_VRS = frozenset(
    {
        "AE", "AS", "AT", "CS", "DA", "DS", "DT", "FD", "FL", "IS",
        "LO", "LT", "PN", "SH", "SL", "SS", "ST", "TM", "UI", "UL", "US",
    }
)

KNOWN_VRS = LONG_FORM_VRS | SHORT_FORM_VRS

# VRs whose value is character data (decoded, searched, replaced as text).
STRING_VRS = frozenset(
    {"AE", "AS", "CS", "DA", "DS", "DT", "IS", "LO", "LT", "PN", "SH", "ST", "TM", "UI", "UT", "UC", "UR"}
)

# String VRs that are scanned for keywords and fuzzy matches. Numeric
# string VRs (DS, IS) and coded dates/times are handled by category rules
# instead of free-text scanning.
TEXT_SCAN_VRS = frozenset({"AE", "AS", "CS", "LO", "LT", "PN", "SH", "ST", "UT", "UC"})

# Binary numeric VRs and their struct codes (little endian).
BINARY_NUMERIC_VRS = {
    "US": "<H",
    "SS": "<h",
    "UL": "<I",
    "SL": "<i",
    "FL": "<f",
    "FD": "<d",
}

# Numeric VRs (binary or decimal strings) that default to Clean in
# classification and to a zero value under ReplaceDefault.
NUMERIC_VRS = frozenset(BINARY_NUMERIC_VRS) | {"DS", "IS"}

# Trailing pad byte used to even out odd-length values.
def pad_byte(vr: str) -> bytes:
    # UI pads with NUL, other string VRs with space, binary with NUL.
    if vr == "UI":
        return b"\x00"
    if vr in STRING_VRS:
        return b" "
    return b"\x00"


def is_string_vr(vr: str) -> bool:
    return vr in STRING_VRS


def is_long_form(vr: str) -> bool:
    """Length-field form for explicit VR encoding; unknown codes use the long form."""
    if vr in LONG_FORM_VRS:
        return True
    if vr in SHORT_FORM_VRS:
        return False
    # Unknown future VRs are defined to use the long form (PS3.5 6.2).
    return True
