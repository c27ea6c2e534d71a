"""Displacement (teleportation across particle kinds) on ququart/qubit-pair registers.

Alice holds an unknown four-level state, either as a ququart or as a qubit
pair.  A 16-dimensional channel is shared between a half that goes to Alice
and a half that goes to Clara.  Alice measures her input together with her
channel half in one of the W/X/Y/Z families, sends the four-bit outcome,
and Clara applies the matching 4 x 4 correction.

Correction unitaries are derived by brute force (:func:`derive_correction_oracle`),
and the printed table (:func:`paper_correction_table`) is kept as a set of
claims to diff against, never as ground truth.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from qdisplace.bases import (
    ALL_LABELS,
    BasisFamily,
    BasisLabel,
    basis_matrix,
    basis_vector,
)
from qdisplace.errors import (
    DegenerateChannelError,
    InvalidLabelError,
    InvariantViolation,
    LabelError,
    NonOrthonormalError,
    ShapeMismatchError,
    ZeroBranchError,
)
from qdisplace.tensor import (
    NORM_ATOL,
    ZERO_BRANCH,
    Ket,
    RegisterShape,
    apply_unitary,
    fidelity_up_to_phase,
    is_unitary,
    permute_subsystems,
    project_measure,
    split_targets,
    tensor_product,
)

FIDELITY_TOL = 1e-10
PHASE_TOL = 1e-10


def fidelity_tolerance() -> float:
    """Fidelity gate; ``QDISPLACE_TOLERANCE`` overrides the default 1e-10."""
    raw = os.environ.get("QDISPLACE_TOLERANCE")
    if raw is None or raw == "":
        return FIDELITY_TOL
    value = float(raw)
    if not 0.0 < value < 1.0:
        raise ValueError(f"QDISPLACE_TOLERANCE must lie in (0, 1), got {raw!r}")
    return value


@dataclass(frozen=True)
class QuquartState:
    """Unit-norm amplitudes ``(alpha, beta, gamma, delta)`` of a four-level state."""

    amplitudes: tuple[complex, complex, complex, complex]

    def __post_init__(self) -> None:
        amps = tuple(complex(a) for a in self.amplitudes)
        if len(amps) != 4:
            raise ShapeMismatchError("a four-level state needs exactly 4 amplitudes")
        if not all(np.isfinite(a.real) and np.isfinite(a.imag) for a in amps):
            raise ValueError("amplitudes must be finite")
        norm2 = sum(abs(a) ** 2 for a in amps)
        if abs(norm2 - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalised: |amplitudes|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, values: Sequence[complex]) -> "QuquartState":
        v = np.asarray(values, dtype=np.complex128)
        n = float(np.linalg.norm(v))
        if not np.isfinite(n) or n <= ZERO_BRANCH:
            raise ValueError("cannot normalise a zero or non-finite amplitude vector")
        return cls(tuple(v / n))

    @classmethod
    def basis(cls, i: int) -> "QuquartState":
        amps = [0j] * 4
        amps[i] = 1.0 + 0j
        return cls(tuple(amps))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "QuquartState":
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        return cls.normalized(v)

    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=np.complex128)

    def as_ququart(self, label: str = "I") -> Ket:
        return Ket.from_amplitudes((label,), (4,), self.vector())

    def as_pair(self, labels: tuple[str, str] = ("1", "2")) -> Ket:
        return iota(self, labels)


def iota(q: QuquartState, labels: tuple[str, str] = ("1", "2")) -> Ket:
    """Map a ququart state to the qubit pair with ``|i> -> |rs>``, ``i = 2r + s``."""
    return Ket.from_amplitudes(labels, (2, 2), q.vector())


def iota_inverse(k: Ket) -> QuquartState:
    if k.dims != (2, 2):
        raise ShapeMismatchError(f"expected a qubit pair, got dims {k.dims}")
    return QuquartState(tuple(k.amplitudes))


def embed_input(q: QuquartState, labels: Sequence[str]) -> Ket:
    """Place ``q`` on a ququart (one label) or on a qubit pair via iota (two labels)."""
    labels = tuple(labels)
    if len(labels) == 1:
        return q.as_ququart(labels[0])
    if len(labels) == 2:
        return iota(q, labels)
    raise ShapeMismatchError(f"a four-level input needs 1 or 2 subsystems, got {labels}")


def _register_dims(labels: Sequence[str]) -> tuple[int, ...]:
    return (4,) if len(labels) == 1 else (2, 2)


@dataclass(frozen=True)
class ProtocolConfig:
    """Register wiring for one displacement run.

    ``input_labels`` are Alice's unknown-state subsystems, ``channel_labels``
    the channel register in the channel family's factor order,
    ``measured_labels`` the subsystems Alice measures (in the measure family's
    factor order) and ``correction_targets`` what Clara receives.
    """

    variant: str
    input_labels: tuple[str, ...]
    channel_labels: tuple[str, ...]
    channel_family: BasisFamily
    channel_label: BasisLabel
    measured_labels: tuple[str, ...]
    measure_family: BasisFamily
    correction_targets: tuple[str, ...]
    diagram: str = ""

    def __post_init__(self) -> None:
        register = self.input_labels + self.channel_labels
        if len(set(register)) != len(register):
            raise LabelError(f"variant {self.variant}: input and channel labels overlap")
        if len(self.channel_labels) != len(self.channel_family.dims):
            raise ShapeMismatchError(f"variant {self.variant}: channel labels do not fit {self.channel_family}")
        if len(self.measured_labels) != len(self.measure_family.dims):
            raise ShapeMismatchError(f"variant {self.variant}: measured labels do not fit {self.measure_family}")
        measured, clara = set(self.measured_labels), set(self.correction_targets)
        if measured & clara or measured | clara != set(register):
            raise LabelError(f"variant {self.variant}: measured/corrected labels must partition the register")
        if len(self.input_labels) not in (1, 2) or len(self.correction_targets) not in (1, 2):
            raise ShapeMismatchError(f"variant {self.variant}: input and output must be four-level")
        dims = self.register_dims
        measured_dims = tuple(dims[label] for label in self.measured_labels)
        if measured_dims != self.measure_family.dims:
            raise ShapeMismatchError(
                f"variant {self.variant}: measured dims {measured_dims} != {self.measure_family.dims}"
            )

    @property
    def register_dims(self) -> dict[str, int]:
        dims = dict(zip(self.input_labels, _register_dims(self.input_labels)))
        dims.update(zip(self.channel_labels, self.channel_family.dims))
        return dims

    @property
    def register_labels(self) -> tuple[str, ...]:
        return self.input_labels + self.channel_labels

    @property
    def displaces(self) -> bool:
        """True when the output particle kind differs from the input kind."""
        return len(self.input_labels) != len(self.correction_targets)

    def with_channel(self, label: BasisLabel) -> "ProtocolConfig":
        return replace(self, channel_label=label)


_X1 = BasisLabel.of("X", 1)
S_QI, S_IQ = BasisFamily.COUPLED_SHIFT_QI, BasisFamily.COUPLED_SHIFT_IQ
F_QI, F_IQ = BasisFamily.COUPLED_FLIP_QI, BasisFamily.COUPLED_FLIP_IQ
QP, FQ = BasisFamily.QUQUART_PAIR, BasisFamily.FOUR_QUBIT

# (input, channel labels, channel family, measured labels, measure family, Clara, diagram)
_VARIANTS = {
    "i": (("I",), ("II", "1", "2"), F_QI, ("I", "II"), QP, ("1", "2"),
          "I + II**1**2 -> I**II + 1**2  (flip-coupled channel)"),
    "ii": (("I",), ("1", "2", "II"), S_IQ, ("1", "2", "I"), S_IQ, ("II",),
           "I + 1**2**II -> 1**2**I + II"),
    "iii": (("I",), ("II", "III"), QP, ("I", "II"), QP, ("III",),
            "I + II**III -> I**II + III"),
    "iv": (("I",), ("II", "1", "2"), S_QI, ("I", "II"), QP, ("1", "2"),
           "I + II**1**2 -> I**II + 1**2  (shift-coupled channel)"),
    "v": (("1", "2"), ("I", "3", "4"), S_QI, ("1", "2", "I"), S_IQ, ("3", "4"),
          "1**2 + I**3**4 -> 1**2**I + 3**4  (shift-coupled)"),
    "vi": (("1", "2"), ("II", "3", "4"), F_QI, ("1", "2", "II"), F_IQ, ("3", "4"),
           "1**2 + II**3**4 -> 1**2**II + 3**4  (flip-coupled)"),
    "vii": (("1", "2"), ("3", "4", "II"), S_IQ, ("1", "2", "3", "4"), FQ, ("II",),
            "1**2 + 3**4**II -> 1**2**3**4 + II"),
    "viii": (("1", "2"), ("3", "4", "5", "6"), FQ, ("1", "2", "3", "4"), FQ, ("5", "6"),
             "1**2 + 3**4**5**6 -> 1**2**3**4 + 5**6"),
}

VARIANTS: tuple[str, ...] = tuple(_VARIANTS)


def variant_config(v: str, channel_label: BasisLabel = _X1) -> ProtocolConfig:
    key = str(v).strip().lower()
    if key not in _VARIANTS:
        raise InvalidLabelError(f"unknown displacement variant {v!r}; expected one of {VARIANTS}")
    inp, ch, chf, meas, mf, clara, diagram = _VARIANTS[key]
    return ProtocolConfig(key, inp, ch, chf, channel_label, meas, mf, clara, diagram)


def channel_state(config: ProtocolConfig) -> Ket:
    return basis_vector(config.channel_family, config.channel_label).relabel(config.channel_labels)


def build_total_state(
    state: QuquartState,
    channel_family: BasisFamily = S_QI,
    channel_label: BasisLabel = _X1,
    *,
    config: ProtocolConfig | None = None,
) -> Ket:
    """Input ``state`` tensored with the channel.

    Without ``config`` this is the ququart-input wiring ``[I, II, 1, 2]``, for
    which the channel family must live on ``[4, 2, 2]``.
    """
    if config is None:
        if channel_family.dims != (4, 2, 2):
            raise ShapeMismatchError(f"channel family {channel_family.value} is not on [4, 2, 2]")
        channel = basis_vector(channel_family, channel_label).relabel(("II", "1", "2"))
        return tensor_product(state.as_ququart("I"), channel)
    return tensor_product(embed_input(state, config.input_labels), channel_state(config))


@dataclass(frozen=True)
class Branch:
    label: BasisLabel
    probability: float
    conditional: Ket | None  # None for a zero-probability branch


def decompose(
    total: Ket,
    measure_family: BasisFamily = QP,
    measured_labels: Sequence[str] = ("I", "II"),
) -> list[Branch]:
    """Split ``total`` into the 16 outcomes of measuring ``measured_labels``."""
    measured_labels = tuple(measured_labels)
    target_dims = tuple(total.shape.dim_of(label) for label in measured_labels)
    if target_dims != measure_family.dims:
        raise ShapeMismatchError(f"{measured_labels} do not fit {measure_family.value}")
    # one matrix product covers all 16 projections
    mat, rest = split_targets(total, measured_labels)
    raw = basis_matrix(measure_family).conj() @ mat
    probs = np.real(np.einsum("ij,ij->i", raw.conj(), raw))
    rest_shape = RegisterShape(tuple((label, total.shape.dim_of(label)) for label in rest))
    branches = []
    for label, p, row in zip(ALL_LABELS, probs, raw):
        p = float(p)
        cond = Ket(rest_shape, row / np.sqrt(p)) if p > ZERO_BRANCH else None
        branches.append(Branch(label, p, cond))
    total_p = sum(b.probability for b in branches)
    if abs(total_p - total.norm() ** 2) > 1e-9:
        raise NonOrthonormalError(f"measure family is not complete: probabilities sum to {total_p}")
    return branches


class CorrectionTable(Mapping[BasisLabel, np.ndarray]):
    """Sixteen 4 x 4 correction matrices keyed by outcome label."""

    def __init__(self, entries: Mapping[BasisLabel, np.ndarray], source: str = ""):
        if set(entries) != set(ALL_LABELS):
            raise InvalidLabelError("a correction table needs all 16 labels")
        self._entries = {}
        for label in ALL_LABELS:
            u = np.array(entries[label], dtype=np.complex128)
            if u.shape != (4, 4):
                raise ShapeMismatchError(f"entry {label} has shape {u.shape}")
            u.setflags(write=False)
            self._entries[label] = u
        self.source = source

    def __getitem__(self, label: BasisLabel) -> np.ndarray:
        return self._entries[label]

    def __iter__(self):
        return iter(ALL_LABELS)

    def __len__(self) -> int:
        return 16

    def all_unitary(self, atol: float = NORM_ATOL) -> bool:
        return all(is_unitary(u, atol) for u in self._entries.values())

    def __neg__(self) -> "CorrectionTable":
        return CorrectionTable({k: -v for k, v in self._entries.items()}, self.source)


def _raw_conditionals(config: ProtocolConfig) -> dict[BasisLabel, np.ndarray]:
    """Columns ``k`` hold the unnormalised conditional state for input ``e_k``."""
    cols: dict[BasisLabel, np.ndarray] = {label: np.zeros((4, 4), dtype=np.complex128) for label in ALL_LABELS}
    for k in range(4):
        total = build_total_state(QuquartState.basis(k), config=config)
        for label in ALL_LABELS:
            probe = basis_vector(config.measure_family, label).relabel(config.measured_labels)
            _, raw = project_measure(total, config.measured_labels, probe, renormalize=False)
            cols[label][:, k] = _clara_vector(raw, config)
    return cols


def _clara_vector(k: Ket, config: ProtocolConfig) -> np.ndarray:
    # Clara's register in correction_targets order, flattened to a 4-vector
    return permute_subsystems(k, config.correction_targets).amplitudes


def derive_correction_oracle(config: ProtocolConfig | None = None) -> CorrectionTable:
    """Brute-force the correction for every outcome.

    For outcome ``mu`` the map ``input -> unnormalised conditional`` is a
    4 x 4 matrix ``M``.  With a maximally entangled channel ``M / sqrt(p)``
    is unitary (``p`` the branch probability) and the correction is its
    adjoint.  Anything else raises :class:`DegenerateChannelError`.
    """
    config = config or variant_config("iv")
    entries = {}
    for label, m in _raw_conditionals(config).items():
        col_norms = np.linalg.norm(m, axis=0)
        if col_norms.min() <= np.sqrt(ZERO_BRANCH) or np.ptp(col_norms) > 1e-9:
            raise DegenerateChannelError(f"outcome {label}: branch weight depends on the input")
        v = m / col_norms[0]
        if not is_unitary(v):
            raise DegenerateChannelError(f"outcome {label}: no unitary correction exists")
        u = v.conj().T
        u = np.where(np.abs(u) < 1e-14, 0.0, u)
        if not np.allclose(u @ v, np.eye(4), atol=NORM_ATOL):  # pragma: no cover
            raise InvariantViolation(f"outcome {label}: derived correction fails to invert")
        entries[label] = u
    return CorrectionTable(entries, source=f"oracle:{config.variant}:{config.channel_label}")


def _m(rows) -> np.ndarray:
    return np.array(rows, dtype=float)


# Printed correction matrices for the X_1 shift-coupled channel, as claims.
_PAPER_TABLE = {
    "W_0": [[0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0]],
    "W_1": [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]],
    "W_2": [[0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0]],
    "W_3": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]],
    "X_0": [[0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0]],
    "X_1": [[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]],
    "X_2": [[0, -1, 0, 0], [0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0]],
    "X_3": [[-1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]],
    "Y_0": [[0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
    "Y_1": [[0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0]],
    "Y_2": [[0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1], [-1, 0, 0, 0]],
    "Y_3": [[-1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, -1]],
    "Z_0": [[0, 0, 0, -1], [-1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0]],
    "Z_1": [[0, 0, -1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, -1, 0, 0]],
    "Z_2": [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0]],
    "Z_3": [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]],
}


def paper_correction_table() -> CorrectionTable:
    return CorrectionTable({BasisLabel.parse(k): _m(v) for k, v in _PAPER_TABLE.items()}, source="printed")


@dataclass(frozen=True)
class CorrectionVerdict:
    label: BasisLabel
    status: str  # "match-exact" | "match-up-to-global-phase" | "mismatch"
    phase: complex | None
    diff: np.ndarray | None  # derived - printed, only for mismatches

    @property
    def ok(self) -> bool:
        return self.status != "mismatch"


@dataclass(frozen=True)
class CorrectionReport:
    verdicts: tuple[CorrectionVerdict, ...]

    @property
    def mismatches(self) -> list[CorrectionVerdict]:
        return [v for v in self.verdicts if not v.ok]

    def verdict(self, label: BasisLabel) -> CorrectionVerdict:
        return self.verdicts[label.code]


def _global_phase(derived: np.ndarray, printed: np.ndarray, atol: float) -> complex | None:
    idx = np.unravel_index(np.argmax(np.abs(printed)), printed.shape)
    if abs(printed[idx]) <= atol or abs(derived[idx]) <= atol:
        return None
    phase = derived[idx] / printed[idx]
    if abs(abs(phase) - 1.0) > atol:
        return None
    if np.allclose(derived, phase * printed, rtol=0.0, atol=atol):
        return complex(phase)
    return None


def compare_correction_tables(
    derived: CorrectionTable, printed: CorrectionTable, atol: float = PHASE_TOL
) -> CorrectionReport:
    verdicts = []
    for label in ALL_LABELS:
        d, p = derived[label], printed[label]
        if np.allclose(d, p, rtol=0.0, atol=atol):
            verdicts.append(CorrectionVerdict(label, "match-exact", 1.0 + 0j, None))
            continue
        phase = _global_phase(d, p, atol)
        if phase is not None:
            verdicts.append(CorrectionVerdict(label, "match-up-to-global-phase", phase, None))
        else:
            verdicts.append(CorrectionVerdict(label, "mismatch", None, d - p))
    return CorrectionReport(tuple(verdicts))


def expected_output(config: ProtocolConfig, state: QuquartState) -> Ket:
    """The input's image on Clara's register (identity or iota, depending on kinds)."""
    return embed_input(state, config.correction_targets)


@dataclass(frozen=True)
class ProtocolTrace:
    """Record of one run.  ``input`` is only read when scoring ``fidelity``."""

    config: ProtocolConfig
    seed: int | None
    input: QuquartState
    channel: Ket
    outcome: BasisLabel
    probability: float
    classical_message: str
    pre_correction: Ket
    correction: np.ndarray
    final: Ket
    fidelity: float


def sample_outcome(probabilities: Sequence[float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw over outcomes in canonical label order."""
    cdf = np.cumsum(np.asarray(probabilities, dtype=float))
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


def run_protocol(
    config: ProtocolConfig,
    state: QuquartState,
    seed: int | None = None,
    *,
    forced_outcome: BasisLabel | None = None,
    table: CorrectionTable | None = None,
    rng: np.random.Generator | None = None,
) -> ProtocolTrace:
    """Run one displacement.

    The outcome is sampled from ``rng`` (or a generator seeded with ``seed``)
    unless ``forced_outcome`` is given.  ``table`` defaults to the oracle
    table for ``config``.
    """
    if forced_outcome is None and rng is None and seed is None:
        raise ValueError("a seed (or generator) is required to sample an outcome")
    table = table if table is not None else _cached_oracle(config)
    channel = channel_state(config)
    total = tensor_product(embed_input(state, config.input_labels), channel)
    branches = decompose(total, config.measure_family, config.measured_labels)
    if forced_outcome is None:
        rng = rng if rng is not None else np.random.default_rng(seed)
        pick = branches[sample_outcome([b.probability for b in branches], rng)]
    else:
        pick = branches[forced_outcome.code]
    if pick.conditional is None:
        raise ZeroBranchError(f"outcome {pick.label} has zero probability")
    pre = permute_subsystems(pick.conditional, config.correction_targets)
    correction = table[pick.label]
    final = apply_unitary(correction, pre, config.correction_targets)
    fid = fidelity_up_to_phase(final, expected_output(config, state))
    return ProtocolTrace(
        config=config,
        seed=seed,
        input=state,
        channel=channel,
        outcome=pick.label,
        probability=pick.probability,
        classical_message=pick.label.bits,
        pre_correction=pre,
        correction=correction,
        final=final,
        fidelity=fid,
    )


_ORACLE_CACHE: dict[ProtocolConfig, CorrectionTable] = {}


def _cached_oracle(config: ProtocolConfig) -> CorrectionTable:
    if config not in _ORACLE_CACHE:
        _ORACLE_CACHE[config] = derive_correction_oracle(config)
    return _ORACLE_CACHE[config]


def run_trials(
    config: ProtocolConfig,
    seed: int,
    trials: int,
    state: QuquartState | None = None,
) -> list[ProtocolTrace]:
    """Independent runs; trial ``t`` uses a generator seeded with ``seed + t``.

    With ``state=None`` each trial draws its own random input from its
    generator before sampling the outcome.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = []
    for t in range(trials):
        trial_seed = (seed + t) % 2**64
        rng = np.random.default_rng(trial_seed)
        inp = state if state is not None else QuquartState.random(rng)
        out.append(run_protocol(config, inp, trial_seed, rng=rng))
    return out
