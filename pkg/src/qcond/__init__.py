"""Conditional-sampling property testers with simulated quantum oracles."""

from .compare import CompareOutcome, CompareParams, classical_compare, qcompare
from .distributions import Distribution, conditional, l1_distance, rationalize
from .estimators import add_est_prob, add_est_prob_qcond, mul_est_prob, mul_est_prob_qcond
from .oracle import EmulatorBackend, QueryLedger, StatevectorBackend
from .spectrum import DensityMatrix, maximally_mixed_test
from .testers import BooleanFunctionTable, balance_test, uniformity_test

__all__ = [
    "BooleanFunctionTable",
    "CompareOutcome",
    "CompareParams",
    "DensityMatrix",
    "Distribution",
    "EmulatorBackend",
    "QueryLedger",
    "StatevectorBackend",
    "add_est_prob",
    "add_est_prob_qcond",
    "balance_test",
    "classical_compare",
    "conditional",
    "l1_distance",
    "maximally_mixed_test",
    "mul_est_prob",
    "mul_est_prob_qcond",
    "qcompare",
    "rationalize",
    "uniformity_test",
]
