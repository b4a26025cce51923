"""Canonical complex edge weights.

Every weight stored in a decision diagram passes through a
:class:`WeightTable`, which maps values that agree within a tolerance onto a
single representative. Once canonical, two weights are equal exactly when
they are the same Python ``complex`` value, so node hashing can use plain
tuple equality.
"""

from __future__ import annotations

import math
from collections.abc import Iterable

ZERO = 0j
ONE = 1 + 0j
DEFAULT_TOLERANCE = 1e-10

_INF = math.inf
_MEMO_LIMIT = 1 << 20
_NEIGHBOURS = tuple((dr, di) for dr in (-1, 0, 1) for di in (-1, 0, 1) if dr or di)


class NumericDomainError(ValueError):
    """Raised for values outside the numeric domain (NaN, Inf, bad tolerance)."""


class NumericContractError(ArithmeticError):
    """Raised when a numerical post-condition fails (e.g. complex expectation value)."""


class WeightTable:
    """Tolerance-based uniquing of complex numbers.

    Values are bucketed by their coordinates rounded to multiples of the
    tolerance. A bucket holds at most one representative, and lookups probe
    the eight neighbouring buckets so that values close to a bucket boundary
    still unify. Components within ``tol`` of 0 or of +-1 snap to those
    values exactly.
    """

    def __init__(self, tol: float = DEFAULT_TOLERANCE):
        if not (isinstance(tol, (int, float)) and math.isfinite(tol) and tol > 0):
            raise NumericDomainError(f"tolerance must be a positive finite number, got {tol!r}")
        self.tol = float(tol)
        self._inv = 1.0 / self.tol
        self._buckets: dict[tuple[int, int], complex] = {}
        # raw value -> representative, skips the bucket arithmetic for repeats
        self._memo: dict[complex, complex] = {}

    def __len__(self) -> int:
        return len(self._buckets)

    def lookup(self, c: complex) -> complex:
        """Return the canonical representative for ``c``, inserting it if new."""
        got = self._memo.get(c)
        if got is not None:
            return got
        re = c.real
        im = c.imag
        if not (-_INF < re < _INF and -_INF < im < _INF):
            raise NumericDomainError(f"non-finite weight {c!r}")
        tol = self.tol
        a = abs(re)
        if a <= tol:
            re = 0.0
        elif -tol <= a - 1.0 <= tol:
            re = 1.0 if re > 0 else -1.0
        a = abs(im)
        if a <= tol:
            im = 0.0
        elif -tol <= a - 1.0 <= tol:
            im = 1.0 if im > 0 else -1.0
        if im == 0.0 and (re == 0.0 or re == 1.0):
            value = ONE if re else ZERO
        else:
            inv = self._inv
            kr = round(re * inv)
            ki = round(im * inv)
            buckets = self._buckets
            value = buckets.get((kr, ki))
            if value is None:
                for dr, di in _NEIGHBOURS:
                    v = buckets.get((kr + dr, ki + di))
                    if v is not None and abs(v.real - re) <= tol and abs(v.imag - im) <= tol:
                        value = v
                        break
                else:
                    value = complex(re, im)
                    buckets[(kr, ki)] = value
        if len(self._memo) < _MEMO_LIMIT:
            self._memo[c] = value
        return value

    __call__ = lookup

    def retain(self, values: Iterable[complex]) -> int:
        """Drop every stored value not in ``values``; return how many were dropped."""
        keep = set(values)
        before = len(self._buckets)
        self._buckets = {k: v for k, v in self._buckets.items() if v in keep}
        self._memo.clear()
        return before - len(self._buckets)

    def clear(self) -> None:
        self._buckets.clear()
        self._memo.clear()


def canonical_weight(c: complex, table: WeightTable) -> complex:
    """Canonicalize ``c`` in ``table``."""
    return table.lookup(complex(c))


def weight_arith(table: WeightTable, op: str, a: complex, b: complex | None = None) -> complex | float:
    """Arithmetic on canonical weights.

    ``op`` is one of ``add``, ``mul``, ``conj``, ``neg`` or ``abs2``. All
    results except ``abs2`` (a real number) are re-canonicalized.
    """
    if op == "add":
        return table.lookup(a + b)
    if op == "mul":
        return table.lookup(a * b)
    if op == "conj":
        return table.lookup(a.conjugate())
    if op == "neg":
        return table.lookup(-a)
    if op == "abs2":
        return a.real * a.real + a.imag * a.imag
    raise ValueError(f"unknown weight operation {op!r}")
