"""Access-optimal regenerating codes for any sub-packetization level."""

from .codec import (
    CodedStripe,
    CoefficientTable,
    FieldSizeWarning,
    GeneralizedCode,
    MdsReport,
    Verification,
    assign_coefficients,
    build_code,
    encode,
    reconstruct,
    verify_mds,
)
from .galois import FieldDesc, GaloisField, gf
from .layout import CodeParams, Layout, ParityPattern, Partitioning, build_index_arrays
from .repair import (
    RepairPlan,
    RepairTrace,
    average_repair_bandwidth,
    bandwidth,
    execute_repair,
    msr_point,
    plan_repair,
)

__all__ = [
    "CodeParams",
    "CodedStripe",
    "CoefficientTable",
    "FieldDesc",
    "FieldSizeWarning",
    "GaloisField",
    "GeneralizedCode",
    "Layout",
    "MdsReport",
    "ParityPattern",
    "Partitioning",
    "RepairPlan",
    "RepairTrace",
    "Verification",
    "assign_coefficients",
    "average_repair_bandwidth",
    "bandwidth",
    "build_code",
    "build_index_arrays",
    "encode",
    "execute_repair",
    "gf",
    "msr_point",
    "plan_repair",
    "reconstruct",
    "verify_mds",
]
