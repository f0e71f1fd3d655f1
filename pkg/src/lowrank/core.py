"""Dense matrices over three element domains, inner-product tables, factor
pairs, and the entrywise cost functionals the solvers and oracles share.

Conventions used throughout the package:

* Binary entries are stored as uint8 0/1, F_q residues as int16 in [0, q),
  reals as float64.  Arrays are frozen after construction, so every type in
  this module is safe to share across threads.
* A length-k bit vector maps to the integer whose binary expansion it is,
  most significant bit first.  Numeric order of codes therefore equals
  lexicographic order of bit vectors, which is what all the deterministic
  tie-breaking rules rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import gf

MAX_ENTRIES = 10**7
MAX_TABLE_RANK = 12
REAL_L0_TOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ContractError(ValueError):
    """An operation was called outside its contract (domain, rank, ...)."""


class ParameterError(ValueError):
    """A numeric parameter is outside its legal range."""


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed its budget; carries the required count."""

    def __init__(self, required, budget, what="enumeration"):
        self.required = required
        self.budget = budget
        super().__init__(f"{what} needs {required} candidates, budget is {budget}")


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    kind: str  # "real" | "binary" | "fq"
    q: int | None = None

    def __post_init__(self):
        if self.kind not in ("real", "binary", "fq"):
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if self.kind == "fq":
            gf.factor_prime_power(self.q)  # validates prime power <= 257
        elif self.q is not None:
            raise ParameterError(f"domain {self.kind!r} takes no modulus")

    @property
    def is_discrete(self):
        return self.kind != "real"

    def dtype(self):
        return {"real": np.float64, "binary": np.uint8, "fq": np.int16}[self.kind]

    def token(self):
        return f"fq:{self.q}" if self.kind == "fq" else self.kind

    @staticmethod
    def from_token(tok: str) -> "Domain":
        tok = tok.strip().lower()
        if tok == "real":
            return REAL
        if tok == "binary":
            return BINARY
        if tok.startswith("fq:"):
            return Domain("fq", int(tok[3:]))
        raise ParameterError(f"unknown domain token {tok!r}")


REAL = Domain("real")
BINARY = Domain("binary")


def fq_domain(q: int) -> Domain:
    return Domain("fq", q)


# --------------------------------------------------------------------------
# dense matrices


class DenseMatrix:
    """Immutable dense rectangular matrix over one of the three domains."""

    __slots__ = ("rows", "cols", "domain", "data")

    def __init__(self, data, domain: Domain):
        arr = np.asarray(data)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got ndim={arr.ndim}")
        if arr.size > MAX_ENTRIES:
            raise ParameterError(f"matrix with {arr.size} entries exceeds {MAX_ENTRIES}")
        if domain.kind == "real":
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ContractError("real entries must be finite")
        elif domain.kind == "binary":
            check = np.asarray(arr)
            if not np.isin(check, (0, 1)).all():
                raise ContractError("binary entries must be 0 or 1")
            arr = np.ascontiguousarray(arr, dtype=np.uint8)
        else:
            check = np.asarray(arr)
            if check.dtype.kind not in "iu" and not np.array_equal(check, check.astype(np.int64)):
                raise ContractError("F_q entries must be integers")
            ints = check.astype(np.int64)
            if ints.min(initial=0) < 0 or ints.max(initial=0) >= domain.q:
                raise ContractError(f"F_q entries must lie in [0, {domain.q})")
            arr = np.ascontiguousarray(ints, dtype=np.int16)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "rows", arr.shape[0])
        object.__setattr__(self, "cols", arr.shape[1])
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, name, value):
        raise AttributeError("DenseMatrix is immutable")

    @property
    def shape(self):
        return (self.rows, self.cols)

    def astype_float(self):
        return np.asarray(self.data, dtype=np.float64)

    def __eq__(self, other):
        return (
            isinstance(other, DenseMatrix)
            and self.domain == other.domain
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols}, {self.domain.token()})"

    @staticmethod
    def zeros(rows, cols, domain=REAL):
        return DenseMatrix(np.zeros((rows, cols)), domain)


def real_matrix(data):
    return DenseMatrix(data, REAL)


def binary_matrix(data):
    return DenseMatrix(data, BINARY)


def fq_matrix(data, q):
    return DenseMatrix(data, fq_domain(q))


# --------------------------------------------------------------------------
# text format: first line "n d domain[:q]", then n whitespace-separated rows


def write_matrix_text(mat: DenseMatrix) -> str:
    lines = [f"{mat.rows} {mat.cols} {mat.domain.token()}"]
    for row in mat.data:
        if mat.domain.kind == "real":
            lines.append(" ".join(repr(float(v)) for v in row))
        else:
            lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_matrix_text(text: str) -> DenseMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ContractError("empty matrix file")
    head = lines[0].split()
    if len(head) != 3:
        raise ContractError("header must be 'n d domain[:q]'")
    n, d = int(head[0]), int(head[1])
    domain = Domain.from_token(head[2])
    if len(lines) != n + 1:
        raise ContractError(f"expected {n} rows, found {len(lines) - 1}")
    conv = float if domain.kind == "real" else int
    rows = [[conv(v) for v in ln.split()] for ln in lines[1:]]
    if any(len(r) != d for r in rows):
        raise ContractError("row length does not match header")
    return DenseMatrix(np.array(rows), domain)


# --------------------------------------------------------------------------
# inner product tables


class InnerProductTable:
    """Materialized <.,.>: {0,1}^k x {0,1}^k -> R as a 2^k x 2^k array.

    values[x, y] is the product of the bit vectors encoded by x and y
    (most significant bit first).  Materialization caps k at 12.
    """

    __slots__ = ("k", "values", "_neq")

    def __init__(self, k: int, values):
        if not 1 <= k <= MAX_TABLE_RANK:
            raise ParameterError(f"table rank must be in [1, {MAX_TABLE_RANK}], got {k}")
        vals = np.ascontiguousarray(values, dtype=np.float64)
        if vals.shape != (1 << k, 1 << k):
            raise DimensionError(f"table must be {1 << k} x {1 << k}")
        vals.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_neq", None)

    def __setattr__(self, name, value):
        raise AttributeError("InnerProductTable is immutable")

    @classmethod
    def from_function(cls, k, fn):
        if not 1 <= k <= MAX_TABLE_RANK:
            raise ParameterError(f"table rank must be in [1, {MAX_TABLE_RANK}], got {k}")
        size = 1 << k
        vals = np.empty((size, size))
        for x in range(size):
            xb = code_to_bits(x, k)
            for y in range(size):
                vals[x, y] = fn(xb, code_to_bits(y, k))
        return cls(k, vals)

    @classmethod
    def reals(cls, k):
        """Standard dot product over the reals."""
        return cls.from_function(k, lambda x, y: float(np.dot(x, y)))

    @classmethod
    def f2(cls, k):
        """Parity of the bitwise AND - the GF(2) inner product."""
        return cls.from_function(k, lambda x, y: float(int(np.dot(x, y)) & 1))

    @classmethod
    def boolean(cls, k):
        """OR of ANDs - the Boolean semiring product."""
        return cls.from_function(k, lambda x, y: float(int(np.any(x & y))))

    @classmethod
    def from_file(cls, path):
        rows = []
        with open(path) as fh:
            for ln in fh:
                if ln.strip():
                    rows.append([float(v) for v in ln.split()])
        size = len(rows)
        k = size.bit_length() - 1
        if size != 1 << k:
            raise ContractError(f"table file must have a power-of-two line count, got {size}")
        return cls(k, np.array(rows))

    def mismatch_indicators(self):
        """(neq0, neq1) uint8 arrays: neq_c[x, y] = 1 iff c != values[x, y].
        Cached; the binary solvers hit this on every estimator call."""
        if self._neq is None:
            neq0 = (self.values != 0.0).astype(np.uint8)
            neq1 = (self.values != 1.0).astype(np.uint8)
            neq0.setflags(write=False)
            neq1.setflags(write=False)
            object.__setattr__(self, "_neq", (neq0, neq1))
        return self._neq


def code_to_bits(code: int, k: int) -> np.ndarray:
    return np.array([(code >> (k - 1 - i)) & 1 for i in range(k)], dtype=np.uint8)


def bits_to_codes(bits: np.ndarray) -> np.ndarray:
    """Pack rows of a (m, k) 0/1 array into integer codes, MSB first."""
    bits = np.asarray(bits)
    k = bits.shape[-1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return (bits.astype(np.int64) @ weights).astype(np.int64)


def codes_to_bits(codes: np.ndarray, k: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1)
    return ((codes[..., None] >> shifts) & 1).astype(np.uint8)


def semiring_table(name: str, k: int) -> InnerProductTable:
    """Resolve a CLI semiring token: f2 | bool | real | table:<file>."""
    if name == "f2":
        return InnerProductTable.f2(k)
    if name == "bool":
        return InnerProductTable.boolean(k)
    if name == "real":
        return InnerProductTable.reals(k)
    if name.startswith("table:"):
        table = InnerProductTable.from_file(name[6:])
        if table.k != k:
            raise ContractError(f"table file has rank {table.k}, expected {k}")
        return table
    raise ParameterError(f"unknown semiring {name!r}")


# --------------------------------------------------------------------------
# factor pairs


@dataclass(frozen=True)
class FactorPair:
    """A rank-k factorization candidate with its cached objective value."""

    U: DenseMatrix
    V: DenseMatrix
    cost: float

    def __post_init__(self):
        if self.U.cols != self.V.rows:
            raise DimensionError("inner ranks of U and V differ")
        if self.U.domain != self.V.domain:
            raise ContractError("U and V must share a domain")
        if self.cost < 0:
            raise ContractError("cost must be nonnegative")

    @property
    def k(self):
        return self.U.cols

    def to_json(self) -> str:
        return json.dumps(
            {
                "u": self.U.data.tolist(),
                "v": self.V.data.tolist(),
                "cost": self.cost,
                "domain": self.U.domain.token(),
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "FactorPair":
        obj = json.loads(text)
        dom = Domain.from_token(obj["domain"])
        return FactorPair(
            DenseMatrix(np.array(obj["u"]), dom),
            DenseMatrix(np.array(obj["v"]), dom),
            float(obj["cost"]),
        )


# --------------------------------------------------------------------------
# cost functionals


def _default_l0_tol(*mats):
    return REAL_L0_TOL if any(m.domain.kind == "real" for m in mats) else 0.0


def lp_cost(A: DenseMatrix, B: DenseMatrix, p: float, tol: float | None = None) -> float:
    """Entrywise cost: sum of |A_ij - B_ij|^p for p > 0, disagreement count
    for p = 0.  The p = 0 comparison tolerance defaults to 0 on discrete
    domains and 1e-9 when a real operand is involved."""
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    if p < 0:
        raise ParameterError("p must be nonnegative")
    if p == 0:
        if tol is None:
            tol = _default_l0_tol(A, B)
        diff = np.abs(A.astype_float() - B.astype_float())
        return float(np.count_nonzero(diff > tol))
    diff = np.abs(A.astype_float() - B.astype_float())
    if p == 1:
        return float(diff.sum())
    if p == 2:
        return float((diff * diff).sum())
    return float((diff**p).sum())


def generalized_product(U: DenseMatrix, V: DenseMatrix, ip: InnerProductTable) -> DenseMatrix:
    """B_ij = <U_{i,:}, V_{:,j}> under the table; binary factors only."""
    if U.domain.kind != "binary" or V.domain.kind != "binary":
        raise ContractError("generalized products need binary factors")
    if U.cols != ip.k or V.rows != ip.k:
        raise ContractError(f"factor rank must equal table rank {ip.k}")
    rcodes = bits_to_codes(U.data)
    ccodes = bits_to_codes(V.data.T)
    return DenseMatrix(ip.values[np.ix_(rcodes, ccodes)], REAL)


def generalized_l0_cost(A: DenseMatrix, U: DenseMatrix, V: DenseMatrix, ip: InnerProductTable) -> int:
    """Number of entries where A disagrees with the generalized product
    (exact scalar comparison)."""
    if A.domain.kind != "binary":
        raise ContractError("A must be binary")
    prod = generalized_product(U, V, ip)
    if A.shape != prod.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {prod.shape}")
    return int(np.count_nonzero(A.astype_float() != prod.data))


def factor_pair_from_codes(rowcodes, colcodes, k, cost) -> FactorPair:
    """Assemble a binary FactorPair from integer row/column codes."""
    U = DenseMatrix(codes_to_bits(np.asarray(rowcodes), k), BINARY)
    V = DenseMatrix(codes_to_bits(np.asarray(colcodes), k).T, BINARY)
    return FactorPair(U, V, float(cost))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labelled parts (blake2b based)."""
    import hashlib

    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")
