"""Desk-scale approximation toolkit for entrywise lp low-rank approximation
(0 < p < 2), generalized binary l0-rank-k over arbitrary inner-product
tables, and l0-rank-k over finite fields, with the sketching machinery the
solvers rest on and brute-force oracles to verify against."""

from .core import (
    BINARY,
    REAL,
    BudgetExceededError,
    ContractError,
    DenseMatrix,
    DimensionError,
    Domain,
    FactorPair,
    InnerProductTable,
    ParameterError,
    binary_matrix,
    fq_domain,
    fq_matrix,
    generalized_l0_cost,
    generalized_product,
    lp_cost,
    read_matrix_text,
    real_matrix,
    write_matrix_text,
)
from .eigen import ZeroResidualError, sigma_lower_bound
from .kernels import IMPL as KERNEL_IMPL

__version__ = "0.1.0"
