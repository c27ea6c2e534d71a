"""Entanglement swapping with displacement.

Two 16-dimensional channel states are prepared side by side.  A joint
measurement on a group of their subsystems in one W/X/Y/Z family leaves the
remaining group in a state that is expanded in a second family.  The full
expansion of the product state in ``measured x retained`` basis pairs is the
"pairing table".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qdisplace.bases import ALL_LABELS, BasisFamily, BasisLabel, basis_matrix, basis_vector
from qdisplace.displacement import sample_outcome
from qdisplace.errors import InvalidLabelError, LabelError, PairingError, ShapeMismatchError, ZeroBranchError
from qdisplace.tensor import (
    NORM_ATOL,
    Ket,
    fidelity_up_to_phase,
    permute_subsystems,
    project_measure,
    tensor_product,
)

COEF_ATOL = 1e-12

_X1 = BasisLabel.of("X", 1)


@dataclass(frozen=True)
class ChannelSpec:
    labels: tuple[str, ...]
    family: BasisFamily
    label: BasisLabel

    def ket(self) -> Ket:
        return basis_vector(self.family, self.label).relabel(self.labels)


@dataclass(frozen=True)
class SwapConfig:
    """Two channels, a measured group and the retained group that gets entangled."""

    variant: str
    left: ChannelSpec
    right: ChannelSpec
    measured_labels: tuple[str, ...]
    measure_family: BasisFamily
    retained_labels: tuple[str, ...]
    residual_family: BasisFamily
    diagram: str = ""

    def __post_init__(self) -> None:
        register = self.left.labels + self.right.labels
        if len(set(register)) != len(register):
            raise LabelError(f"swap variant {self.variant}: channel registers overlap")
        m, r = set(self.measured_labels), set(self.retained_labels)
        if m & r or m | r != set(register):
            raise LabelError(f"swap variant {self.variant}: measured/retained must partition the register")
        dims = self.register_dims
        for labels, fam in ((self.measured_labels, self.measure_family), (self.retained_labels, self.residual_family)):
            if tuple(dims[x] for x in labels) != fam.dims:
                raise ShapeMismatchError(f"swap variant {self.variant}: {labels} do not fit {fam.value}")

    @property
    def register_dims(self) -> dict[str, int]:
        dims = dict(zip(self.left.labels, self.left.family.dims))
        dims.update(zip(self.right.labels, self.right.family.dims))
        return dims

    @property
    def register_labels(self) -> tuple[str, ...]:
        return self.left.labels + self.right.labels

    @property
    def register_shape(self) -> tuple[int, ...]:
        dims = self.register_dims
        return tuple(dims[x] for x in self.register_labels)


S_QI, S_IQ = BasisFamily.COUPLED_SHIFT_QI, BasisFamily.COUPLED_SHIFT_IQ
QP, FQ = BasisFamily.QUQUART_PAIR, BasisFamily.FOUR_QUBIT

_SWAP_VARIANTS = {
    # left channel, right channel, measured, measure family, retained, residual family
    "i": ((("I", "1", "2"), S_QI), (("3", "4", "II"), S_IQ), ("1", "2", "3", "4"), FQ, ("I", "II"), QP,
          "I**1**2 + 3**4**II -> 1**2**3**4 + I**II"),
    "ii": ((("I", "1", "2"), S_QI), (("3", "4", "5", "6"), FQ), ("1", "2", "3", "4"), FQ, ("I", "5", "6"), S_QI,
           "I**1**2 + 3**4**5**6 -> 1**2**3**4 + I**5**6"),
    "iii": ((("I", "1", "2"), S_QI), (("3", "4", "II"), S_IQ), ("1", "2", "II"), S_IQ, ("I", "3", "4"), S_QI,
            "I**1**2 + 3**4**II -> 1**2**II + I**3**4"),
    "iv": ((("I", "1", "2"), S_QI), (("III", "II"), QP), ("1", "2", "III"), S_IQ, ("I", "II"), QP,
           "I**1**2 + III**II -> 1**2**III + I**II"),
}

SWAP_VARIANTS: tuple[str, ...] = tuple(_SWAP_VARIANTS)


def swap_variant_config(v: str, left_label: BasisLabel = _X1, right_label: BasisLabel = _X1) -> SwapConfig:
    key = str(v).strip().lower()
    if key not in _SWAP_VARIANTS:
        raise InvalidLabelError(f"unknown swap variant {v!r}; expected one of {SWAP_VARIANTS}")
    (ll, lf), (rl, rf), meas, mf, ret, resf, diagram = _SWAP_VARIANTS[key]
    return SwapConfig(key, ChannelSpec(ll, lf, left_label), ChannelSpec(rl, rf, right_label),
                      meas, mf, ret, resf, diagram)


def transposed(cfg: SwapConfig, measured_label: BasisLabel, retained_label: BasisLabel) -> SwapConfig:
    """Reverse direction: start from ``|measured_label> |retained_label>`` and
    measure the original left channel's group, leaving the right channel's group."""
    return SwapConfig(
        cfg.variant + "'",
        ChannelSpec(cfg.measured_labels, cfg.measure_family, measured_label),
        ChannelSpec(cfg.retained_labels, cfg.residual_family, retained_label),
        cfg.left.labels,
        cfg.left.family,
        cfg.right.labels,
        cfg.right.family,
        "transposed " + cfg.diagram,
    )


def build_swap_total(cfg: SwapConfig) -> Ket:
    return tensor_product(cfg.left.ket(), cfg.right.ket())


def expansion_matrix(total: Ket, cfg: SwapConfig) -> np.ndarray:
    """``C[m, p] = <m (x) p | total>`` over measured label ``m`` and retained label ``p``."""
    moved = permute_subsystems(total, cfg.measured_labels + cfg.retained_labels)
    psi = moved.amplitudes.reshape(16, 16)
    bm = basis_matrix(cfg.measure_family)
    br = basis_matrix(cfg.residual_family)
    return bm.conj() @ psi @ br.conj().T


@dataclass(frozen=True)
class PairingEntry:
    """Expansion terms for one measured label, largest magnitude first."""

    measured_label: BasisLabel
    terms: tuple[tuple[BasisLabel, float], ...]

    @property
    def single(self) -> bool:
        return len(self.terms) == 1

    @property
    def partner_label(self) -> BasisLabel:
        if not self.single:
            raise PairingError(f"{self.measured_label} pairs with {len(self.terms)} partners")
        return self.terms[0][0]

    @property
    def coefficient(self) -> float:
        if not self.single:
            raise PairingError(f"{self.measured_label} pairs with {len(self.terms)} partners")
        return self.terms[0][1]


def _real(c: complex) -> float:
    if abs(c.imag) > COEF_ATOL:
        raise PairingError(f"complex pairing coefficient {c}")
    return float(c.real)


def derive_pairing_table(
    total: Ket | None = None, cfg: SwapConfig | None = None, *, strict: bool = False
) -> list[PairingEntry]:
    """Brute-force expansion of ``total`` in ``measured x retained`` basis pairs.

    Entries list every nonzero coefficient.  ``strict=True`` raises
    :class:`PairingError` unless each measured label has exactly one partner.
    """
    cfg = cfg or swap_variant_config("i")
    total = total if total is not None else build_swap_total(cfg)
    c = expansion_matrix(total, cfg)
    entries = []
    for m in ALL_LABELS:
        row = c[m.code]
        nz = [p for p in ALL_LABELS if abs(row[p.code]) > COEF_ATOL]
        nz.sort(key=lambda p: (-abs(row[p.code]), p.code))
        entries.append(PairingEntry(m, tuple((p, _real(complex(row[p.code]))) for p in nz)))
    if strict:
        bad = [e for e in entries if not e.single]
        if bad:
            raise PairingError(
                "measured labels with more than one partner: " + ", ".join(str(e.measured_label) for e in bad)
            )
    return entries


def is_bijective(entries: Sequence[PairingEntry]) -> bool:
    if not all(e.single for e in entries):
        return False
    return len({e.partner_label for e in entries}) == len(entries) == 16


def reconstruct(entries: Sequence[PairingEntry], cfg: SwapConfig) -> Ket:
    """``sum coefficient |measured> (x) |partner>`` on ``measured + retained`` labels."""
    labels = cfg.measured_labels + cfg.retained_labels
    dims = tuple(cfg.register_dims[x] for x in labels)
    bm, br = basis_matrix(cfg.measure_family), basis_matrix(cfg.residual_family)
    acc = np.zeros(256, dtype=np.complex128)
    for e in entries:
        for p, coef in e.terms:
            acc += coef * np.kron(bm[e.measured_label.code], br[p.code])
    return Ket.from_amplitudes(labels, dims, acc)


# Printed pairing for the X_1 (x) X_1 channel pair, kept verbatim as claims,
# including the repeated X_3 partner.
_PAPER_PAIRING = (
    ("W_0", "Z_2", +1), ("W_1", "X_3", -1), ("W_2", "Y_0", -1), ("W_3", "W_1", +1),
    ("X_0", "X_2", +1), ("X_1", "X_3", -1), ("X_2", "X_0", -1), ("X_3", "X_1", -1),
    ("Y_0", "W_2", -1), ("Y_1", "Y_3", +1), ("Y_2", "Z_0", +1), ("Y_3", "Z_1", -1),
    ("Z_0", "Y_2", -1), ("Z_1", "Z_3", -1), ("Z_2", "W_0", +1), ("Z_3", "Z_1", +1),
)


def paper_pairing_table() -> list[PairingEntry]:
    return [
        PairingEntry(BasisLabel.parse(m), ((BasisLabel.parse(p), sign * 0.25),))
        for m, p, sign in _PAPER_PAIRING
    ]


@dataclass(frozen=True)
class PairingVerdict:
    measured_label: BasisLabel
    status: str  # "match" | "sign-mismatch" | "partner-mismatch"
    claimed: tuple[tuple[BasisLabel, float], ...]
    derived: tuple[tuple[BasisLabel, float], ...]

    @property
    def ok(self) -> bool:
        return self.status == "match"


@dataclass(frozen=True)
class PairingReport:
    verdicts: tuple[PairingVerdict, ...]
    warnings: tuple[str, ...]

    @property
    def mismatches(self) -> list[PairingVerdict]:
        return [v for v in self.verdicts if not v.ok]


def duplicate_partners(entries: Sequence[PairingEntry]) -> dict[BasisLabel, list[BasisLabel]]:
    """Partners claimed by more than one single-partner measured label."""
    seen: dict[BasisLabel, list[BasisLabel]] = {}
    for e in entries:
        if e.single:
            seen.setdefault(e.partner_label, []).append(e.measured_label)
    return {p: ms for p, ms in seen.items() if len(ms) > 1}


def _fmt_terms(terms) -> str:
    return " ".join(f"{c:+.4g}*{p}" for p, c in terms) or "0"


def compare_pairing_tables(derived: Sequence[PairingEntry], printed: Sequence[PairingEntry]) -> PairingReport:
    d_by = {e.measured_label: e for e in derived}
    p_by = {e.measured_label: e for e in printed}
    if set(d_by) != set(ALL_LABELS) or set(p_by) != set(ALL_LABELS):
        raise InvalidLabelError("pairing tables must cover all 16 measured labels")
    verdicts = []
    for m in ALL_LABELS:
        d, p = d_by[m], p_by[m]
        d_map = {lab: c for lab, c in d.terms}
        p_map = {lab: c for lab, c in p.terms}
        if set(d_map) != set(p_map):
            status = "partner-mismatch"
        elif all(abs(d_map[k] - p_map[k]) <= COEF_ATOL for k in d_map):
            status = "match"
        else:
            status = "sign-mismatch"
        verdicts.append(PairingVerdict(m, status, p.terms, d.terms))
    warnings = []
    for partner, ms in duplicate_partners(printed).items():
        names = ", ".join(str(m) for m in ms)
        judged = "; ".join(
            f"{m}: oracle gives {_fmt_terms(d_by[m].terms)}" for m in ms
        )
        warnings.append(f"printed table assigns partner {partner}(I,II) to {names} ({judged})")
    dup_derived = duplicate_partners(derived)
    for partner, ms in dup_derived.items():
        warnings.append(f"derived table assigns partner {partner} to {', '.join(map(str, ms))}")
    multi = [str(e.measured_label) for e in derived if not e.single]
    if multi:
        warnings.append(
            "derived expansion is not one-to-one: " + ", ".join(multi) + " have several partners"
        )
    return PairingReport(tuple(verdicts), tuple(warnings))


@dataclass(frozen=True)
class SwapOutcome:
    outcome: BasisLabel
    probability: float
    residual: Ket
    residual_label: BasisLabel  # best-overlap residual-family vector
    residual_fidelity: float  # with that vector
    predicted_fidelity: float  # with the state predicted by the pairing row


def measure_swap(
    total: Ket,
    seed: int | None = None,
    cfg: SwapConfig | None = None,
    *,
    forced_outcome: BasisLabel | None = None,
    entries: Sequence[PairingEntry] | None = None,
) -> SwapOutcome:
    """Collapse the measured group and identify the retained state."""
    cfg = cfg or swap_variant_config("i")
    probes = [basis_vector(cfg.measure_family, m).relabel(cfg.measured_labels) for m in ALL_LABELS]
    if forced_outcome is None:
        if seed is None:
            raise ValueError("a seed is required to sample an outcome")
        probs = [project_measure(total, cfg.measured_labels, pr, renormalize=False)[0] for pr in probes]
        outcome = ALL_LABELS[sample_outcome(probs, np.random.default_rng(seed))]
    else:
        outcome = forced_outcome
    prob, residual = project_measure(total, cfg.measured_labels, probes[outcome.code])
    residual = permute_subsystems(residual, cfg.retained_labels)
    fids = [
        fidelity_up_to_phase(residual, basis_vector(cfg.residual_family, p).relabel(cfg.retained_labels))
        for p in ALL_LABELS
    ]
    best = int(np.argmax(fids))
    entries = entries if entries is not None else derive_pairing_table(total, cfg)
    row = entries[outcome.code]
    predicted = Ket.from_amplitudes(
        cfg.retained_labels,
        cfg.residual_family.dims,
        sum(c * basis_matrix(cfg.residual_family)[p.code] for p, c in row.terms),
    )
    if predicted.norm() <= NORM_ATOL:
        raise ZeroBranchError(f"outcome {outcome} has no partner in the expansion")
    pf = fidelity_up_to_phase(residual, Ket(predicted.shape, predicted.amplitudes / predicted.norm()))
    return SwapOutcome(outcome, prob, residual, ALL_LABELS[best], fids[best], pf)


def sweep_forced(cfg: SwapConfig | None = None, total: Ket | None = None) -> list[SwapOutcome]:
    """All 16 outcomes, forced in canonical order."""
    cfg = cfg or swap_variant_config("i")
    total = total if total is not None else build_swap_total(cfg)
    entries = derive_pairing_table(total, cfg)
    return [measure_swap(total, cfg=cfg, forced_outcome=m, entries=entries) for m in ALL_LABELS]


def format_pairing_table(entries: Sequence[PairingEntry]) -> str:
    """16-row text table: measured label, partner label, signed coefficient."""
    lines = ["measured  partner  coefficient"]
    for e in entries:
        for i, (p, c) in enumerate(e.terms):
            head = str(e.measured_label) if i == 0 else ""
            lines.append(f"{head:8s}  {str(p):7s}  {c:+.6g}")
    return "\n".join(lines)
