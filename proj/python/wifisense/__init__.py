"""Wi-Fi CSI pose estimation and action recognition (C++ core)."""

from ._wifisense import (
    JOINTS,
    AuditError,
    ConfigError,
    DataError,
    DimensionError,
    NumericError,
    TedNet,
    WifisenseError,
    aligned_seqs,
    confusion,
    crc16,
    dgnn_audit,
    dgnn_parameter_count,
    encode_record,
    generate_motion,
    parse_record,
    pck,
    tednet_shapes,
)

__all__ = [
    "JOINTS",
    "AuditError",
    "ConfigError",
    "DataError",
    "DimensionError",
    "NumericError",
    "TedNet",
    "WifisenseError",
    "aligned_seqs",
    "confusion",
    "crc16",
    "dgnn_audit",
    "dgnn_parameter_count",
    "encode_record",
    "generate_motion",
    "parse_record",
    "pck",
    "tednet_shapes",
]
