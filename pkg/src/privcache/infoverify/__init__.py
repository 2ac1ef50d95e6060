"""Exhaustive oracles: decoding, exact demand privacy, key isolation, load."""

from .kernel import BACKEND, available_backends
from .oracles import (
    BudgetExceeded,
    Config,
    DecodeReport,
    JointDistribution,
    PrivacyReport,
    enumeration_cost,
    key_isolation_check,
    measure_load,
    privacy_check,
    verify_decode_all,
)

__all__ = [
    "BACKEND",
    "BudgetExceeded",
    "Config",
    "DecodeReport",
    "JointDistribution",
    "PrivacyReport",
    "available_backends",
    "enumeration_cost",
    "key_isolation_check",
    "measure_load",
    "privacy_check",
    "verify_decode_all",
]
