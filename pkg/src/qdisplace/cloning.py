"""Numerical cloning obstructions, including cloning across the ququart/qubit-pair encoding.

Two independent routes are provided:

* the inner-product route: a unitary cloner maps ``|Q>|psi>`` to
  ``|Q_psi>|psi>|enc psi>``; taking overlaps of two runs forces
  ``s = s * s_enc`` with ``s = |<psi|phi>|``, and since every encoding here is
  an isometry (``s_enc = s``) only ``s in {0, 1}`` survive;
* the linearity route: define the cloner on computational basis inputs,
  extend it linearly with a fixed machine state, and score the output of a
  superposition against the wanted product ``|psi> (x) |enc psi>``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from qdisplace.bases import iota_inverse_ket, iota_ket
from qdisplace.errors import ShapeMismatchError
from qdisplace.tensor import (
    NORM_ATOL,
    Ket,
    fidelity_up_to_phase,
    inner_product,
    random_ket,
    tensor_product,
)


class CloneTask(enum.Enum):
    PRECISE_QUBIT = "PRECISE_QUBIT"
    PRECISE_QUQUART = "PRECISE_QUQUART"
    IMPRECISE_22_TO_4 = "IMPRECISE_22_TO_4"
    IMPRECISE_4_TO_22 = "IMPRECISE_4_TO_22"

    @property
    def source_dims(self) -> tuple[int, ...]:
        return {
            CloneTask.PRECISE_QUBIT: (2,),
            CloneTask.PRECISE_QUQUART: (4,),
            CloneTask.IMPRECISE_22_TO_4: (2, 2),
            CloneTask.IMPRECISE_4_TO_22: (4,),
        }[self]

    @classmethod
    def parse(cls, name: str) -> "CloneTask":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown cloning task {name!r}") from None


def encode(task: CloneTask, k: Ket) -> Ket:
    """The second copy's encoding: identity, iota or iota inverse."""
    if k.dims != task.source_dims:
        raise ShapeMismatchError(f"{task.value} expects source dims {task.source_dims}, got {k.dims}")
    if task is CloneTask.IMPRECISE_4_TO_22:
        return iota_ket(k, ("c1", "c2"))
    if task is CloneTask.IMPRECISE_22_TO_4:
        return iota_inverse_ket(k, "c")
    return k.relabel(tuple(f"c{i}" for i in range(len(k.dims))))


@dataclass(frozen=True)
class ObstructionReport:
    overlap_s: float
    encoded_overlap: float
    required: float  # s * s_enc, what a unitary cloner would need <psi|phi> to equal
    deficit: float  # |s - required|
    linear_extension_fidelity: float

    @property
    def consistent(self) -> bool:
        return self.deficit <= NORM_ATOL


def overlap_obstruction(psi: Ket, phi: Ket, task: CloneTask) -> ObstructionReport:
    if psi.dims != task.source_dims or phi.dims != task.source_dims:
        raise ShapeMismatchError(f"{task.value} expects source dims {task.source_dims}")
    s = abs(inner_product(psi, phi))
    s_enc = abs(inner_product(encode(task, psi), encode(task, phi)))
    if abs(s_enc - s) > NORM_ATOL:  # pragma: no cover - encodings are isometries
        raise AssertionError(f"encoding changed the overlap: {s} -> {s_enc}")
    required = s * s_enc
    fid = min(_extension_or_one(task, psi), _extension_or_one(task, phi))
    return ObstructionReport(s, s_enc, required, abs(s - required), fid)


def _is_basis_state(k: Ket) -> bool:
    return int(np.count_nonzero(np.abs(k.amplitudes) > NORM_ATOL)) == 1


def _extension_or_one(task: CloneTask, k: Ket) -> float:
    return 1.0 if _is_basis_state(k) else linear_extension_deficit(task, k)


def linear_extension_output(task: CloneTask, k: Ket) -> Ket:
    """``sum_j c_j |j> (x) |enc j>`` for ``k = sum_j c_j |j>``.

    The machine register factors out (fixed post-state) and is omitted.
    """
    out = None
    for j in range(k.shape.size):
        c = k.amplitudes[j]
        if c == 0:
            continue
        e = np.zeros(k.shape.size, dtype=np.complex128)
        e[j] = 1.0
        ej = Ket(k.shape, e)
        term = tensor_product(ej, encode(task, ej)) * c
        out = term if out is None else out + term
    if out is None:
        raise ValueError("zero input")
    return out


def linear_extension_deficit(task: CloneTask, superposition: Ket, *, strict: bool = False) -> float:
    """Fidelity of the linearly extended basis cloner with the wanted product state.

    Equals 1 on computational basis inputs.  With ``strict=True`` a basis
    input raises ``ValueError`` instead.
    """
    if superposition.dims != task.source_dims:
        raise ShapeMismatchError(f"{task.value} expects source dims {task.source_dims}")
    if strict and _is_basis_state(superposition):
        raise ValueError("input is a computational basis state")
    got = linear_extension_output(task, superposition)
    want = tensor_product(superposition, encode(task, superposition))
    return fidelity_up_to_phase(got, want)


def equal_superposition(task: CloneTask, terms: int | None = None) -> Ket:
    """``(|0> + ... + |terms-1>) / sqrt(terms)`` on the task's source register."""
    dims = task.source_dims
    n = int(np.prod(dims))
    terms = n if terms is None else terms
    v = np.zeros(n, dtype=np.complex128)
    v[:terms] = 1.0 / np.sqrt(terms)
    return Ket.from_amplitudes([f"s{i}" for i in range(len(dims))], dims, v)


def state_pair_with_overlap(task: CloneTask, s: float) -> tuple[Ket, Ket]:
    """``|0>`` and ``s|0> + sqrt(1 - s^2)|1>`` on the task's source register."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"overlap {s} outside [0, 1]")
    dims = task.source_dims
    labels = [f"s{i}" for i in range(len(dims))]
    n = int(np.prod(dims))
    a = np.zeros(n, dtype=np.complex128)
    a[0] = 1.0
    b = np.zeros(n, dtype=np.complex128)
    b[0] = s
    b[1] = np.sqrt(max(0.0, 1.0 - s * s))
    return Ket.from_amplitudes(labels, dims, a), Ket.from_amplitudes(labels, dims, b)


def iota_isometry_check(samples: int, seed: int = 0) -> float:
    """Largest ``| |<iota a|iota b>| - |<a|b>| |`` over random ququart pairs."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a = random_ket(("q",), (4,), rng)
        b = random_ket(("q",), (4,), rng)
        dev = abs(abs(inner_product(iota_ket(a), iota_ket(b))) - abs(inner_product(a, b)))
        worst = max(worst, dev)
    return worst
