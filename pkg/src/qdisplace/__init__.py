"""Exact simulator for ququart / qubit-pair displacement, swapping and cloning obstructions."""

from qdisplace.bases import (
    ALL_LABELS,
    BasisFamily,
    BasisLabel,
    basis_vector,
    full_basis,
    natural_quadruple,
    quadruple_from_wxyz,
    wxyz_from_quadruple,
)
from qdisplace.displacement import (
    QuquartState,
    derive_correction_oracle,
    paper_correction_table,
    run_protocol,
    variant_config,
)
from qdisplace.swapping import derive_pairing_table, paper_pairing_table, swap_variant_config
from qdisplace.tensor import Ket, RegisterShape

__version__ = "0.1.0"

__all__ = [
    "ALL_LABELS",
    "BasisFamily",
    "BasisLabel",
    "Ket",
    "QuquartState",
    "RegisterShape",
    "basis_vector",
    "derive_correction_oracle",
    "derive_pairing_table",
    "full_basis",
    "natural_quadruple",
    "paper_correction_table",
    "paper_pairing_table",
    "quadruple_from_wxyz",
    "run_protocol",
    "swap_variant_config",
    "variant_config",
    "wxyz_from_quadruple",
]
