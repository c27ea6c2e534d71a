import numpy as np
import pytest

from qdisplace.bases import ALL_LABELS, BasisFamily, BasisLabel
from qdisplace.errors import InvalidLabelError, LabelError, PairingError, ShapeMismatchError
from qdisplace.swapping import (
    SWAP_VARIANTS,
    ChannelSpec,
    PairingEntry,
    SwapConfig,
    build_swap_total,
    compare_pairing_tables,
    derive_pairing_table,
    duplicate_partners,
    expansion_matrix,
    format_pairing_table,
    is_bijective,
    measure_swap,
    paper_pairing_table,
    reconstruct,
    swap_variant_config,
    sweep_forced,
    transposed,
)
from qdisplace.tensor import permute_subsystems

import oracles


def L(text):
    return BasisLabel.parse(text)


@pytest.fixture(scope="module")
def cfg():
    return swap_variant_config("i")


@pytest.fixture(scope="module")
def total(cfg):
    return build_swap_total(cfg)


@pytest.fixture(scope="module")
def derived(cfg, total):
    return derive_pairing_table(total, cfg)


class TestTotal:
    def test_register(self, total):
        assert total.labels == ("I", "1", "2", "3", "4", "II")
        assert total.dims == (4, 2, 2, 2, 2, 4)
        assert total.norm() == pytest.approx(1.0, abs=1e-15)

    def test_sixteen_quarter_amplitudes(self, total):
        nz = total.amplitudes[np.abs(total.amplitudes) > 1e-15]
        assert len(nz) == 16
        assert np.allclose(np.abs(nz), 0.25)

    def test_first_expanded_term(self, total):
        assert total.amplitude([1, 0, 0, 0, 1, 0]) == pytest.approx(0.25)

    def test_channels_overlap(self):
        c = swap_variant_config("i")
        with pytest.raises(LabelError):
            SwapConfig("x", c.left, ChannelSpec(("1", "5", "II"), c.right.family, c.right.label),
                       c.measured_labels, c.measure_family, c.retained_labels, c.residual_family)

    def test_family_must_fit(self):
        c = swap_variant_config("i")
        with pytest.raises(ShapeMismatchError):
            SwapConfig("x", c.left, c.right, ("1", "2", "3", "4"), BasisFamily.QUQUART_PAIR,
                       c.retained_labels, c.residual_family)

    def test_unknown_variant(self):
        with pytest.raises(InvalidLabelError):
            swap_variant_config("v")

    @pytest.mark.parametrize("v, shape", [
        ("i", (4, 2, 2, 2, 2, 4)), ("ii", (4, 2, 2, 2, 2, 2, 2)), ("iii", (4, 2, 2, 2, 2, 4)), ("iv", (4, 2, 2, 4, 4)),
    ])
    def test_variant_shapes(self, v, shape):
        assert swap_variant_config(v).register_shape == shape


class TestExpansion:
    def test_matches_brute_force(self, cfg, total):
        c = oracles.swap_coefficients(
            oracles.basis_rows("COUPLED_SHIFT_QI")[L("X_1").code],
            oracles.basis_rows("COUPLED_SHIFT_IQ")[L("X_1").code],
            oracles.basis_rows("FOUR_QUBIT"),
            oracles.basis_rows("QUQUART_PAIR"),
        )
        assert np.allclose(expansion_matrix(total, cfg), c, atol=1e-15)

    def test_parseval(self, cfg, total):
        assert np.sum(np.abs(expansion_matrix(total, cfg)) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_frozen_table(self, derived):
        singles = {str(e.measured_label): (str(e.partner_label), e.coefficient) for e in derived if e.single}
        assert singles == {
            "W_1": ("W_3", -0.25), "W_3": ("W_1", 0.25), "X_1": ("Z_3", -0.25), "X_3": ("Z_1", 0.25),
            "Y_1": ("Y_3", 0.25), "Y_3": ("Y_1", -0.25), "Z_1": ("X_3", 0.25), "Z_3": ("X_1", -0.25),
        }
        multi = [e for e in derived if not e.single]
        assert [str(e.measured_label) for e in multi] == ["W_0", "W_2", "X_0", "X_2", "Y_0", "Y_2", "Z_0", "Z_2"]
        assert all(len(e.terms) == 4 and all(abs(c) == 0.125 for _, c in e.terms) for e in multi)

    def test_strict_raises(self, cfg, total):
        with pytest.raises(PairingError):
            derive_pairing_table(total, cfg, strict=True)

    def test_multi_term_accessors(self, derived):
        with pytest.raises(PairingError):
            derived[0].partner_label
        with pytest.raises(PairingError):
            derived[0].coefficient

    def test_reconstruction(self, cfg, total, derived):
        back = reconstruct(derived, cfg)
        moved = permute_subsystems(total, cfg.measured_labels + cfg.retained_labels)
        assert np.max(np.abs(back.amplitudes - moved.amplitudes)) < 1e-12

    @pytest.mark.parametrize("v", ["iii", "iv"])
    def test_bijective_variants(self, v):
        c = swap_variant_config(v)
        entries = derive_pairing_table(build_swap_total(c), c, strict=True)
        assert is_bijective(entries)
        assert all(abs(abs(e.coefficient) - 0.25) < 1e-12 for e in entries)

    @pytest.mark.parametrize("v", SWAP_VARIANTS)
    def test_reconstruction_all_variants(self, v):
        c = swap_variant_config(v)
        t = build_swap_total(c)
        moved = permute_subsystems(t, c.measured_labels + c.retained_labels)
        assert reconstruct(derive_pairing_table(t, c), c).allclose(moved)

    def test_format(self, derived):
        text = format_pairing_table(derived)
        assert text.splitlines()[0].startswith("measured")
        assert "W_1       W_3      -0.25" in text


class TestPrinted:
    def test_entries(self):
        p = {str(e.measured_label): (str(e.partner_label), e.coefficient) for e in paper_pairing_table()}
        assert p["W_3"] == ("W_1", 0.25)
        assert p["X_2"] == ("X_0", -0.25)
        assert p["Z_2"] == ("W_0", 0.25)
        assert p["W_0"] == ("Z_2", 0.25)
        assert p["Y_0"] == ("W_2", -0.25)

    def test_duplicates(self):
        dup = duplicate_partners(paper_pairing_table())
        assert {str(k): sorted(map(str, v)) for k, v in dup.items()} == {
            "X_3": ["W_1", "X_1"], "Z_1": ["Y_3", "Z_3"],
        }

    def test_report(self, derived):
        r = compare_pairing_tables(derived, paper_pairing_table())
        assert [str(v.measured_label) for v in r.verdicts if v.ok] == ["W_3", "Y_1"]
        assert any("partner X_3" in w for w in r.warnings)
        assert any("partner Z_1" in w for w in r.warnings)
        assert any("not one-to-one" in w for w in r.warnings)

    def test_sign_mismatch(self):
        p = paper_pairing_table()
        flipped = [PairingEntry(e.measured_label, ((e.partner_label, -e.coefficient),)) for e in p]
        r = compare_pairing_tables(flipped, p)
        assert all(v.status == "sign-mismatch" for v in r.verdicts)

    def test_needs_all_labels(self, derived):
        with pytest.raises(InvalidLabelError):
            compare_pairing_tables(derived[:3], paper_pairing_table())


class TestCollapse:
    def test_uniform_forced(self, cfg, total):
        outs = sweep_forced(cfg, total)
        assert [o.outcome for o in outs] == list(ALL_LABELS)
        assert all(abs(o.probability - 1 / 16) < 1e-12 for o in outs)
        assert all(o.predicted_fidelity > 1 - 1e-10 for o in outs)

    def test_single_partner_outcomes_are_basis_vectors(self, cfg, total, derived):
        for e in derived:
            if not e.single:
                continue
            o = measure_swap(total, cfg=cfg, forced_outcome=e.measured_label)
            assert o.residual_label == e.partner_label
            assert o.residual_fidelity == pytest.approx(1.0, abs=1e-10)

    def test_multi_partner_outcomes_are_not(self, cfg, total):
        o = measure_swap(total, cfg=cfg, forced_outcome=L("W_0"))
        assert o.residual_fidelity == pytest.approx(0.25, abs=1e-12)
        assert o.residual.labels == ("I", "II")

    def test_seeded(self, cfg, total):
        a = measure_swap(total, 123, cfg)
        b = measure_swap(total, 123, cfg)
        assert a.outcome == b.outcome
        assert a.residual == b.residual

    def test_needs_seed(self, cfg, total):
        with pytest.raises(ValueError):
            measure_swap(total, cfg=cfg)

    @pytest.mark.parametrize("v", ["iii", "iv"])
    def test_bijective_collapse(self, v):
        c = swap_variant_config(v)
        for o in sweep_forced(c):
            assert o.residual_fidelity == pytest.approx(1.0, abs=1e-10)


class TestTransposed:
    @pytest.mark.parametrize("v", SWAP_VARIANTS)
    def test_uniform_and_consistent(self, v):
        c = swap_variant_config(v)
        t = transposed(c, L("W_1"), L("Z_2"))
        assert t.measured_labels == c.left.labels
        outs = sweep_forced(t)
        assert all(abs(o.probability - 1 / 16) < 1e-12 for o in outs)
        assert all(o.predicted_fidelity > 1 - 1e-10 for o in outs)

    def test_overlap_symmetry(self):
        # <m|<p| (L (x) R) equals the forward coefficient; check one entry
        c = swap_variant_config("iv")
        entries = derive_pairing_table(build_swap_total(c), c)
        e = entries[5]
        fwd = e.coefficient
        t = transposed(c, e.measured_label, e.partner_label)
        back = expansion_matrix(build_swap_total(t), t)
        assert back[c.left.label.code, c.right.label.code] == pytest.approx(fwd, abs=1e-12)


def test_residual_fidelity_is_best_overlap(cfg, total):
    rows = oracles.basis_rows("QUQUART_PAIR")
    for label in (L("Y_1"), L("Z_2")):
        o = measure_swap(total, cfg=cfg, forced_outcome=label)
        best = max(abs(np.dot(r, o.residual.amplitudes)) ** 2 for r in rows)
        assert o.residual_fidelity == pytest.approx(best, abs=1e-12)
