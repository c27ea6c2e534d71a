"""Dense state vectors over small mixed-radix registers.

Registers are ordered lists of labelled subsystems with dimension 2 (qubit)
or 4 (ququart).  Amplitudes are stored big-endian: the leftmost subsystem is
the most significant digit of the flat index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from qdisplace.errors import LabelError, ShapeMismatchError, ZeroBranchError

ALLOWED_DIMS = (2, 4)
MAX_TOTAL_DIM = 1024
NORM_ATOL = 1e-12
ZERO_BRANCH = 1e-15


@dataclass(frozen=True)
class RegisterShape:
    """Ordered ``(label, dim)`` pairs describing a register."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        subsystems = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subsystems)
        labels = [label for label, _ in subsystems]
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate subsystem labels in {labels}")
        for label, dim in subsystems:
            if dim not in ALLOWED_DIMS:
                raise ShapeMismatchError(f"subsystem {label!r} has dim {dim}; allowed {ALLOWED_DIMS}")
        if self.size > MAX_TOTAL_DIM:
            raise ShapeMismatchError(f"register dimension {self.size} exceeds {MAX_TOTAL_DIM}")

    @classmethod
    def of(cls, labels: Sequence[str], dims: Sequence[int]) -> "RegisterShape":
        if len(labels) != len(dims):
            raise ShapeMismatchError("labels and dims differ in length")
        return cls(tuple(zip(labels, dims)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def size(self) -> int:
        return math.prod(dim for _, dim in self.subsystems)

    def dim_of(self, label: str) -> int:
        for name, dim in self.subsystems:
            if name == label:
                return dim
        raise LabelError(f"unknown subsystem label {label!r}")

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown subsystem label {label!r}") from None

    def __str__(self) -> str:
        return "[" + ", ".join(f"{label}:{dim}" for label, dim in self.subsystems) + "]"


class Ket:
    """Immutable complex amplitude vector on a :class:`RegisterShape`.

    The amplitude array is copied on construction and marked read-only, so
    a Ket can be shared freely.  Normalisation is not enforced here; callers
    that need a state use :meth:`is_normalized` or :func:`normalized`.
    """

    __slots__ = ("_shape", "_amps")

    def __init__(self, shape: RegisterShape, amplitudes: Iterable[complex] | np.ndarray):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != shape.size:
            raise ShapeMismatchError(f"{amps.size} amplitudes for register {shape} of size {shape.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        self._shape = shape
        self._amps = amps

    @classmethod
    def from_amplitudes(cls, labels: Sequence[str], dims: Sequence[int], amplitudes) -> "Ket":
        return cls(RegisterShape.of(labels, dims), amplitudes)

    @classmethod
    def basis(cls, labels: Sequence[str], dims: Sequence[int], values: Sequence[int]) -> "Ket":
        """Computational basis state ``|values>``."""
        shape = RegisterShape.of(labels, dims)
        if len(values) != len(dims):
            raise ShapeMismatchError("one value per subsystem required")
        for v, d in zip(values, dims):
            if not 0 <= v < d:
                raise ValueError(f"basis value {v} out of range for dim {d}")
        amps = np.zeros(shape.size, dtype=np.complex128)
        amps[np.ravel_multi_index(tuple(values), tuple(dims))] = 1.0
        return cls(shape, amps)

    @property
    def shape(self) -> RegisterShape:
        return self._shape

    @property
    def labels(self) -> tuple[str, ...]:
        return self._shape.labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self._shape.dims

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    def norm(self) -> float:
        return float(np.linalg.norm(self._amps))

    def is_normalized(self, atol: float = NORM_ATOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= atol

    def relabel(self, labels: Sequence[str]) -> "Ket":
        """Same amplitudes, new subsystem labels (dims unchanged)."""
        return Ket(RegisterShape.of(labels, self.dims), self._amps)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem (read-only view)."""
        return self._amps.reshape(self.dims)

    def amplitude(self, values: Sequence[int]) -> complex:
        return complex(self._amps[np.ravel_multi_index(tuple(values), self.dims)])

    def __add__(self, other: "Ket") -> "Ket":
        _require_same_shape(self, other)
        return Ket(self._shape, self._amps + other._amps)

    def __sub__(self, other: "Ket") -> "Ket":
        _require_same_shape(self, other)
        return Ket(self._shape, self._amps - other._amps)

    def __neg__(self) -> "Ket":
        return Ket(self._shape, -self._amps)

    def __mul__(self, scalar: complex) -> "Ket":
        return Ket(self._shape, self._amps * scalar)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ket):
            return NotImplemented
        return self._shape == other._shape and bool(np.array_equal(self._amps, other._amps))

    def __hash__(self) -> int:
        return hash((self._shape, self._amps.tobytes()))

    def allclose(self, other: "Ket", atol: float = NORM_ATOL) -> bool:
        return self.dims == other.dims and bool(np.allclose(self._amps, other._amps, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"Ket({self._shape}, {np.array2string(self._amps, precision=4)})"


def _require_same_shape(a: Ket, b: Ket) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"register {a.shape} != {b.shape}")


def _require_same_dims(a: Ket, b: Ket) -> None:
    if a.dims != b.dims:
        raise ShapeMismatchError(f"dims {a.dims} != {b.dims}")


def normalized(k: Ket) -> Ket:
    n = k.norm()
    if n <= ZERO_BRANCH:
        raise ZeroBranchError("cannot normalise a zero vector")
    return Ket(k.shape, k.amplitudes / n)


def tensor_product(a: Ket, b: Ket, *more: Ket) -> Ket:
    """Kronecker product; the result's register is the concatenation of the operands'."""
    out = a
    for nxt in (b, *more):
        shape = RegisterShape(out.shape.subsystems + nxt.shape.subsystems)
        out = Ket(shape, np.kron(out.amplitudes, nxt.amplitudes))
    return out


def inner_product(a: Ket, b: Ket) -> complex:
    """``<a|b>``, conjugate-linear in ``a``.  Only the dims must agree."""
    _require_same_dims(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def permute_subsystems(k: Ket, perm: Sequence[str]) -> Ket:
    """Reorder subsystems so that they appear in the order ``perm``."""
    perm = tuple(perm)
    if sorted(perm) != sorted(k.labels) or len(set(perm)) != len(perm):
        raise LabelError(f"{list(perm)} is not a permutation of {list(k.labels)}")
    axes = [k.shape.index_of(label) for label in perm]
    shape = RegisterShape(tuple(k.shape.subsystems[i] for i in axes))
    data = np.transpose(k.tensor(), axes).reshape(-1)
    return Ket(shape, data)


def split_targets(k: Ket, targets: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Matrix view ``(prod target dims, prod rest dims)`` plus the rest labels."""
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise LabelError(f"duplicate target labels {targets}")
    for label in targets:
        k.shape.index_of(label)
    rest = tuple(label for label in k.labels if label not in targets)
    moved = permute_subsystems(k, targets + rest)
    dt = int(np.prod([k.shape.dim_of(label) for label in targets], dtype=np.int64))
    return moved.amplitudes.reshape(dt, -1), rest


def project_measure(
    k: Ket, targets: Sequence[str], probe: Ket, *, renormalize: bool = True
) -> tuple[float, Ket]:
    """Project ``targets`` of ``k`` onto ``probe``.

    Returns the branch probability and the conditional state of the remaining
    subsystems (in their original relative order).  With ``renormalize=False``
    the raw partial inner product is returned instead, keeping its norm.
    """
    targets = tuple(targets)
    target_dims = tuple(k.shape.dim_of(label) for label in targets)
    if probe.dims != target_dims:
        raise ShapeMismatchError(f"probe dims {probe.dims} do not match target dims {target_dims}")
    mat, rest = split_targets(k, targets)
    raw = probe.amplitudes.conj() @ mat
    prob = float(np.real(np.vdot(raw, raw)))
    rest_shape = RegisterShape(tuple((label, k.shape.dim_of(label)) for label in rest))
    if not renormalize:
        return prob, Ket(rest_shape, raw)
    if prob <= ZERO_BRANCH:
        raise ZeroBranchError(f"branch probability {prob:.3g} too small to renormalise")
    return prob, Ket(rest_shape, raw / np.sqrt(prob))


def is_unitary(u: np.ndarray, atol: float = NORM_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u @ u.conj().T, np.eye(u.shape[0]), rtol=0.0, atol=atol))


def apply_unitary(u: np.ndarray, k: Ket, targets: Sequence[str]) -> Ket:
    """Apply ``u`` to the (ordered) ``targets`` of ``k``; the register order is kept."""
    u = np.asarray(u, dtype=np.complex128)
    targets = tuple(targets)
    dt = int(np.prod([k.shape.dim_of(label) for label in targets], dtype=np.int64))
    if u.shape != (dt, dt):
        raise ShapeMismatchError(f"operator of shape {u.shape} cannot act on {dt}-dimensional targets")
    mat, rest = split_targets(k, targets)
    out = (u @ mat).reshape(-1)
    moved_shape = RegisterShape(
        tuple((label, k.shape.dim_of(label)) for label in targets + rest)
    )
    return permute_subsystems(Ket(moved_shape, out), k.labels)


def fidelity_up_to_phase(a: Ket, b: Ket) -> float:
    """``|<a|b>|**2`` clipped to [0, 1]."""
    return float(min(1.0, max(0.0, abs(inner_product(a, b)) ** 2)))


def random_ket(labels: Sequence[str], dims: Sequence[int], rng: np.random.Generator) -> Ket:
    """Haar-random unit vector (normalised complex Gaussian)."""
    shape = RegisterShape.of(labels, dims)
    v = rng.standard_normal(shape.size) + 1j * rng.standard_normal(shape.size)
    return Ket(shape, v / np.linalg.norm(v))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
