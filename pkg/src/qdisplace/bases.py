"""Sixteen-element maximally entangled bases on 16-dimensional registers.

Every family is built the same way: for each index ``a`` in 0..3 a
quadruple of orthonormal computational product states ``(A, B, C, D)`` is
chosen, and the four basis vectors are the signed half-sums

    W = (A + B + C + D) / 2      X = (A + B - C - D) / 2
    Y = (A - B + C - D) / 2      Z = (A - B - C + D) / 2

The map is its own inverse, which :func:`quadruple_from_wxyz` exposes.

A ququart level ``i`` corresponds to the qubit pair ``rs`` with
``i = 2r + s`` (:func:`iota_ket`).  Because registers are big-endian the
amplitude vectors of ``|i>`` and ``|rs>`` coincide; only the register
shape changes.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from qdisplace.errors import InvalidLabelError, NonOrthonormalError, ShapeMismatchError
from qdisplace.tensor import NORM_ATOL, Ket, RegisterShape, tensor_product

LETTERS = ("W", "X", "Y", "Z")

# Row m gives the coefficients of (A, B, C, D) in the m-th of (W, X, Y, Z).
SIGN_MATRIX = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


class BasisFamily(enum.Enum):
    QUQUART_PAIR = "QUQUART_PAIR"
    FOUR_QUBIT = "FOUR_QUBIT"
    COUPLED_FLIP_QI = "COUPLED_FLIP_QI"
    COUPLED_FLIP_IQ = "COUPLED_FLIP_IQ"
    COUPLED_SHIFT_QI = "COUPLED_SHIFT_QI"
    COUPLED_SHIFT_IQ = "COUPLED_SHIFT_IQ"

    @property
    def dims(self) -> tuple[int, ...]:
        return _FAMILY_DIMS[self]

    @property
    def default_labels(self) -> tuple[str, ...]:
        return _FAMILY_LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "BasisFamily":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise InvalidLabelError(f"unknown basis family {name!r}") from None


_FAMILY_DIMS = {
    BasisFamily.QUQUART_PAIR: (4, 4),
    BasisFamily.FOUR_QUBIT: (2, 2, 2, 2),
    BasisFamily.COUPLED_FLIP_QI: (4, 2, 2),
    BasisFamily.COUPLED_FLIP_IQ: (2, 2, 4),
    BasisFamily.COUPLED_SHIFT_QI: (4, 2, 2),
    BasisFamily.COUPLED_SHIFT_IQ: (2, 2, 4),
}

_FAMILY_LABELS = {
    BasisFamily.QUQUART_PAIR: ("I", "II"),
    BasisFamily.FOUR_QUBIT: ("1", "2", "3", "4"),
    BasisFamily.COUPLED_FLIP_QI: ("I", "1", "2"),
    BasisFamily.COUPLED_FLIP_IQ: ("1", "2", "I"),
    BasisFamily.COUPLED_SHIFT_QI: ("I", "1", "2"),
    BasisFamily.COUPLED_SHIFT_IQ: ("1", "2", "I"),
}


@dataclass(frozen=True, order=True)
class BasisLabel:
    """Letter W/X/Y/Z and index 0..3 (index ``2r + s`` for qubit-pair families)."""

    code: int  # 4 * letter + index; gives the canonical W_0..Z_3 order

    def __post_init__(self) -> None:
        if not 0 <= self.code < 16:
            raise InvalidLabelError(f"label code {self.code} out of range")

    @classmethod
    def of(cls, letter: str, index: int) -> "BasisLabel":
        if letter not in LETTERS:
            raise InvalidLabelError(f"unknown basis letter {letter!r}")
        if not 0 <= int(index) < 4:
            raise InvalidLabelError(f"basis index {index} outside 0..3")
        return cls(4 * LETTERS.index(letter) + int(index))

    @classmethod
    def parse(cls, text: str) -> "BasisLabel":
        """Accepts ``X_1``, ``X1``, ``x1`` or the qubit-pair form ``X_01``."""
        m = re.fullmatch(r"\s*([WXYZwxyz])_?([0-3]|[01][01])\s*", text)
        if not m:
            raise InvalidLabelError(f"cannot parse basis label {text!r}")
        idx = m.group(2)
        index = int(idx, 2) if len(idx) == 2 else int(idx)
        return cls.of(m.group(1).upper(), index)

    @property
    def letter(self) -> str:
        return LETTERS[self.code // 4]

    @property
    def index(self) -> int:
        return self.code % 4

    @property
    def rs(self) -> tuple[int, int]:
        return self.index >> 1, self.index & 1

    @property
    def bits(self) -> str:
        """Four-bit classical message encoding this label."""
        return format(self.code, "04b")

    def __str__(self) -> str:
        return f"{self.letter}_{self.index}"


ALL_LABELS: tuple[BasisLabel, ...] = tuple(BasisLabel(c) for c in range(16))


class NaturalQuadruple(NamedTuple):
    a: Ket
    b: Ket
    c: Ket
    d: Ket


def iota_ket(k: Ket, labels: tuple[str, str] = ("1", "2")) -> Ket:
    """Ququart ket -> qubit-pair ket with the same amplitudes (``i = 2r + s``)."""
    if k.dims != (4,):
        raise ShapeMismatchError(f"iota expects a single ququart, got dims {k.dims}")
    return Ket.from_amplitudes(labels, (2, 2), k.amplitudes)


def iota_inverse_ket(k: Ket, label: str = "I") -> Ket:
    if k.dims != (2, 2):
        raise ShapeMismatchError(f"iota inverse expects a qubit pair, got dims {k.dims}")
    return Ket.from_amplitudes((label,), (4,), k.amplitudes)


def _qq(i: int) -> Ket:
    return Ket.basis(("q",), (4,), (i % 4,))


def _pair(r: int, s: int) -> Ket:
    return Ket.basis(("r", "s"), (2, 2), (r, s))


def _as_pair(i: int) -> Ket:
    return iota_ket(_qq(i), ("r", "s"))


def _quadruple_states(family: BasisFamily, a: int) -> list[Ket]:
    r, s = a >> 1, a & 1
    if family is BasisFamily.QUQUART_PAIR:
        parts = [tensor_product(_qq(a + j), _qq(j).relabel(("p",))) for j in range(4)]
    elif family is BasisFamily.FOUR_QUBIT:
        bits = [(r, s, 0, 0), (1 - r, 1 - s, 0, 1), (1 - r, s, 1, 0), (r, 1 - s, 1, 1)]
        parts = [Ket.basis(("a", "b", "c", "d"), (2, 2, 2, 2), b) for b in bits]
    elif family in (BasisFamily.COUPLED_FLIP_QI, BasisFamily.COUPLED_FLIP_IQ):
        pairs = [(r, s), (1 - r, 1 - s), (1 - r, s), (r, 1 - s)]
        if family is BasisFamily.COUPLED_FLIP_QI:
            parts = [tensor_product(_qq(j), _pair(*p)) for j, p in enumerate(pairs)]
        else:
            parts = [tensor_product(_pair(*p), _qq(j)) for j, p in enumerate(pairs)]
    elif family is BasisFamily.COUPLED_SHIFT_QI:
        # ququart-pair recipe, second ququart replaced by its qubit-pair image
        parts = [tensor_product(_qq(a + j), _as_pair(j)) for j in range(4)]
    elif family is BasisFamily.COUPLED_SHIFT_IQ:
        # ququart-pair recipe, first ququart replaced by its qubit-pair image
        parts = [tensor_product(_as_pair(a + j), _qq(j)) for j in range(4)]
    else:  # pragma: no cover
        raise InvalidLabelError(f"unknown family {family}")
    return [p.relabel(family.default_labels) for p in parts]


def natural_quadruple(family: BasisFamily, index: int) -> NaturalQuadruple:
    """The product states ``(A, B, C, D)`` for basis index ``index``."""
    if not isinstance(index, (int, np.integer)) or not 0 <= index < 4:
        raise InvalidLabelError(f"basis index {index!r} outside 0..3")
    return NaturalQuadruple(*_quadruple_states(family, int(index)))


def _check_orthonormal(kets, what: str) -> None:
    kets = list(kets)
    shapes = {k.dims for k in kets}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"{what}: vectors on different registers")
    gram = np.array([[np.vdot(x.amplitudes, y.amplitudes) for y in kets] for x in kets])
    if not np.allclose(gram, np.eye(len(kets)), rtol=0.0, atol=NORM_ATOL):
        raise NonOrthonormalError(f"{what}: inputs are not orthonormal")


def _signed_sums(kets) -> list[Ket]:
    shape = kets[0].shape
    stack = np.stack([k.amplitudes for k in kets])
    return [Ket(shape, row) for row in SIGN_MATRIX @ stack]


def wxyz_from_quadruple(q) -> tuple[Ket, Ket, Ket, Ket]:
    _check_orthonormal(q, "quadruple")
    return tuple(_signed_sums(list(q)))


def quadruple_from_wxyz(w: Ket, x: Ket, y: Ket, z: Ket) -> NaturalQuadruple:
    _check_orthonormal((w, x, y, z), "W/X/Y/Z")
    return NaturalQuadruple(*_signed_sums([w, x, y, z]))


def basis_vector(family: BasisFamily, label: BasisLabel) -> Ket:
    """Basis vector ``label`` of ``family`` on the family's default labels."""
    if not isinstance(label, BasisLabel):
        raise InvalidLabelError(f"not a basis label: {label!r}")
    return _family_table(family)[label.code]


def full_basis(family: BasisFamily) -> list[tuple[BasisLabel, Ket]]:
    return list(zip(ALL_LABELS, _family_table(family)))


_CACHE: dict[BasisFamily, tuple[Ket, ...]] = {}


def _family_table(family: BasisFamily) -> tuple[Ket, ...]:
    # Kets are immutable, so caching the 16 vectors per family is safe.
    if family not in _CACHE:
        by_index = [wxyz_from_quadruple(natural_quadruple(family, a)) for a in range(4)]
        _CACHE[family] = tuple(by_index[a][m] for m in range(4) for a in range(4))
    return _CACHE[family]


def basis_matrix(family: BasisFamily) -> np.ndarray:
    """16 x 16 matrix whose rows are the basis vectors in W_0..Z_3 order."""
    return np.stack([k.amplitudes for k in _family_table(family)])


def gram_deviation(family: BasisFamily) -> float:
    m = basis_matrix(family)
    return float(np.max(np.abs(m.conj() @ m.T - np.eye(16))))


def _rational(x: complex) -> str:
    if abs(x.imag) > NORM_ATOL:
        raise ValueError(f"non-real amplitude {x}")
    frac = Fraction(x.real).limit_denominator(64)
    if abs(float(frac) - x.real) > NORM_ATOL:
        raise ValueError(f"amplitude {x.real} is not a small rational")
    if frac == 0:
        return "0"
    sign = "+" if frac > 0 else "-"
    return f"{sign}{abs(frac.numerator)}/{frac.denominator}" if frac.denominator != 1 else f"{sign}{abs(frac.numerator)}"


def basis_sign_table(family: BasisFamily) -> list[list[str]]:
    """Rows of signed rationals (``"+1/2"``, ``"-1/2"``, ``"0"``) for golden files."""
    return [[_rational(complex(v)) for v in row] for row in basis_matrix(family)]


def basis_state_names(family: BasisFamily) -> list[str]:
    """Column headers for :func:`basis_sign_table`, e.g. ``"3|10"``."""
    names = []
    for idx in np.ndindex(*family.dims):
        groups, cur = [], ""
        for v, d in zip(idx, family.dims):
            if d == 4:
                if cur:
                    groups.append(cur)
                    cur = ""
                groups.append(str(v))
            else:
                cur += str(v)
        if cur:
            groups.append(cur)
        names.append("|".join(groups))
    return names


def format_basis_dump(family: BasisFamily) -> str:
    """Plain-text 16 x 16 dump of ``family`` with label rows."""
    cols = basis_state_names(family)
    table = basis_sign_table(family)
    width = max(4, max(len(c) for c in cols))
    head = "label  " + " ".join(c.rjust(width) for c in cols)
    lines = [f"# {family.value} on {RegisterShape.of(family.default_labels, family.dims)}", head]
    for label, row in zip(ALL_LABELS, table):
        lines.append(f"{str(label):5s}  " + " ".join(v.rjust(width) for v in row))
    return "\n".join(lines)


def family_for_dims(dims: tuple[int, ...], flavor: str = "SHIFT") -> BasisFamily:
    """Pick the family whose register dims are ``dims`` (SHIFT or FLIP for coupled ones)."""
    if dims == (4, 4):
        return BasisFamily.QUQUART_PAIR
    if dims == (2, 2, 2, 2):
        return BasisFamily.FOUR_QUBIT
    if dims == (4, 2, 2):
        return BasisFamily[f"COUPLED_{flavor}_QI"]
    if dims == (2, 2, 4):
        return BasisFamily[f"COUPLED_{flavor}_IQ"]
    raise ShapeMismatchError(f"no 16-element family on dims {dims}")
