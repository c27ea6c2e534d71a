import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdisplace import records
from qdisplace.bases import ALL_LABELS, BasisFamily, BasisLabel, basis_matrix
from qdisplace.displacement import (
    VARIANTS,
    CorrectionTable,
    ProtocolConfig,
    QuquartState,
    build_total_state,
    compare_correction_tables,
    decompose,
    derive_correction_oracle,
    embed_input,
    expected_output,
    fidelity_tolerance,
    iota,
    iota_inverse,
    paper_correction_table,
    run_protocol,
    run_trials,
    sample_outcome,
    variant_config,
)
from qdisplace.errors import DegenerateChannelError, InvalidLabelError, LabelError, ShapeMismatchError
from qdisplace.tensor import fidelity_up_to_phase

import oracles


def L(text):
    return BasisLabel.parse(text)


def rand_state(seed):
    return QuquartState.random(np.random.default_rng(seed))


seeds = st.integers(0, 2**32 - 1)


class TestQuquartState:
    def test_iota_of_basis_2(self):
        k = iota(QuquartState.basis(2))
        assert k.amplitude([1, 0]) == 1

    def test_uniform(self):
        k = iota(QuquartState((0.5, 0.5, 0.5, 0.5)))
        assert np.allclose(k.amplitudes, 0.5)

    @given(seed=seeds)
    @settings(max_examples=30, deadline=None)
    def test_iota_round_trip(self, seed):
        q = rand_state(seed)
        assert iota_inverse(iota(q)) == q

    def test_rejects_unnormalised(self):
        with pytest.raises(ValueError):
            QuquartState((1, 1, 0, 0))

    def test_rejects_wrong_length(self):
        with pytest.raises(ShapeMismatchError):
            QuquartState((1, 0, 0))

    def test_normalized_zero(self):
        with pytest.raises(ValueError):
            QuquartState.normalized([0, 0, 0, 0])

    def test_embed(self):
        q = QuquartState.basis(3)
        assert embed_input(q, ["I"]).dims == (4,)
        assert embed_input(q, ["1", "2"]).amplitude([1, 1]) == 1
        with pytest.raises(ShapeMismatchError):
            embed_input(q, ["a", "b", "c"])


class TestTotalState:
    def test_basis_0_with_x1(self):
        t = build_total_state(QuquartState.basis(0))
        assert t.labels == ("I", "II", "1", "2")
        want = np.zeros(64)
        for coef, idx in [(0.5, (0, 1, 0, 0)), (0.5, (0, 2, 0, 1)), (-0.5, (0, 3, 1, 0)), (-0.5, (0, 0, 1, 1))]:
            want[oracles.flat(idx, (4, 4, 2, 2))] = coef
        assert np.array_equal(t.amplitudes, want)

    @given(seed=seeds)
    @settings(max_examples=30, deadline=None)
    def test_norm_and_support(self, seed):
        q = rand_state(seed)
        t = build_total_state(q)
        assert t.norm() == pytest.approx(1.0, abs=1e-12)
        mags = np.sort(np.abs(t.amplitudes))[::-1][:16]
        assert np.allclose(np.sort(mags), np.sort(np.repeat(np.abs(q.vector()), 4) / 2))
        assert np.count_nonzero(np.abs(t.amplitudes) > 1e-15) == 4 * np.count_nonzero(np.abs(q.vector()) > 1e-15)

    def test_wrong_channel_shape(self):
        with pytest.raises(ShapeMismatchError):
            build_total_state(QuquartState.basis(0), BasisFamily.QUQUART_PAIR)


class TestDecompose:
    @given(seed=seeds, channel=st.sampled_from(ALL_LABELS))
    @settings(max_examples=40, deadline=None)
    def test_uniform_probabilities(self, seed, channel):
        t = build_total_state(rand_state(seed), channel_label=channel)
        probs = [b.probability for b in decompose(t)]
        assert np.allclose(probs, 1 / 16, rtol=0, atol=1e-12)
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)

    def test_conditionals_match_brute_force(self):
        channel = basis_matrix(BasisFamily.COUPLED_SHIFT_QI)[L("X_1").code]
        rows = oracles.basis_rows("QUQUART_PAIR")
        for k in range(4):
            raw = oracles.displacement_conditionals(channel, rows, k)
            branches = decompose(build_total_state(QuquartState.basis(k)))
            for mu, b in enumerate(branches):
                assert np.allclose(b.conditional.amplitudes, raw[mu] * 4, atol=1e-14)

    def test_input_0_outcome_x3(self):
        # the raw conditional is +|00>; U_X3 from the oracle leaves it fixed
        b = decompose(build_total_state(QuquartState.basis(0)))[L("X_3").code]
        assert b.conditional.labels == ("1", "2")
        assert np.allclose(b.conditional.amplitudes, [1, 0, 0, 0], atol=1e-15)


class TestOracle:
    def test_w3(self):
        assert np.array_equal(derive_correction_oracle()[L("W_3")], np.diag([1, 1, -1, -1]))

    def test_z3(self):
        # the printed table says diag(1, -1, -1, -1); the derivation gives -I
        assert np.array_equal(derive_correction_oracle()[L("Z_3")], -np.eye(4))

    def test_x3(self):
        assert np.array_equal(derive_correction_oracle()[L("X_3")], np.diag([1, -1, 1, -1]))

    def test_all_unitary_and_real(self):
        t = derive_correction_oracle()
        assert t.all_unitary()
        assert all(np.all(t[x].imag == 0) for x in ALL_LABELS)

    def test_independent_inverse(self):
        # every correction undoes the brute-force conditional map
        channel = basis_matrix(BasisFamily.COUPLED_SHIFT_QI)[L("X_1").code]
        rows = oracles.basis_rows("QUQUART_PAIR")
        m = np.stack([oracles.displacement_conditionals(channel, rows, k) for k in range(4)], axis=2) * 4
        t = derive_correction_oracle()
        for mu, label in enumerate(ALL_LABELS):
            assert np.allclose(t[label] @ m[mu], np.eye(4), atol=1e-14)

    @pytest.mark.parametrize("v", VARIANTS)
    def test_every_variant_derivable(self, v):
        assert derive_correction_oracle(variant_config(v)).all_unitary()

    def test_degenerate_channel(self):
        # Clara keeps the input and Alice measures the channel alone: most
        # outcomes have zero weight, so no correction exists
        fake = ProtocolConfig("bad", ("1", "2"), ("I", "3", "4"), BasisFamily.COUPLED_SHIFT_QI, L("X_1"),
                              ("3", "4", "I"), BasisFamily.COUPLED_SHIFT_IQ, ("1", "2"), "")
        with pytest.raises(DegenerateChannelError):
            derive_correction_oracle(fake)


class TestPrintedTable:
    def test_entries(self):
        p = paper_correction_table()
        assert np.array_equal(p[L("W_0")][0], [0, 0, 0, -1])
        assert np.array_equal(p[L("X_3")], -np.eye(4))
        assert np.array_equal(p[L("Y_1")][2], [-1, 0, 0, 0])
        assert np.array_equal(p[L("W_3")], np.diag([1, 1, -1, -1]))
        assert np.array_equal(p[L("Z_3")], np.diag([1, -1, -1, -1]))

    def test_all_printed_matrices_unitary(self):
        assert paper_correction_table().all_unitary()


class TestCompare:
    def test_self(self):
        t = derive_correction_oracle()
        r = compare_correction_tables(t, t)
        assert all(v.status == "match-exact" for v in r.verdicts)

    def test_negated(self):
        t = derive_correction_oracle()
        r = compare_correction_tables(t, -t)
        assert all(v.status == "match-up-to-global-phase" for v in r.verdicts)
        assert all(v.phase == -1 for v in r.verdicts)

    def test_frozen_errata(self):
        r = compare_correction_tables(derive_correction_oracle(), paper_correction_table())
        assert [str(v.label) for v in r.mismatches] == ["X_0", "X_3", "Y_2", "Z_2", "Z_3"]
        assert r.verdict(L("W_3")).status == "match-exact"
        assert np.array_equal(r.verdict(L("X_3")).diff, np.diag([2, 0, 2, 0]))

    def test_table_needs_all_labels(self):
        with pytest.raises(InvalidLabelError):
            CorrectionTable({L("W_0"): np.eye(4)})


class TestVariants:
    @pytest.mark.parametrize(
        "v, dims",
        [
            ("i", ([4], [4, 2, 2])), ("ii", ([4], [2, 2, 4])), ("iii", ([4], [4, 4])), ("iv", ([4], [4, 2, 2])),
            ("v", ([2, 2], [4, 2, 2])), ("vi", ([2, 2], [4, 2, 2])), ("vii", ([2, 2], [2, 2, 4])),
            ("viii", ([2, 2], [2, 2, 2, 2])),
        ],
    )
    def test_shapes(self, v, dims):
        cfg = variant_config(v)
        d = cfg.register_dims
        assert [d[x] for x in cfg.input_labels] == dims[0]
        assert [d[x] for x in cfg.channel_labels] == dims[1]

    def test_ordinary_teleportation_variants_keep_kind(self):
        for v in ("ii", "iii", "viii"):
            assert not variant_config(v).displaces
        for v in ("i", "iv", "vii"):
            assert variant_config(v).displaces
        # v and vi route a qubit pair through a ququart-bearing channel back onto a pair
        for v in ("v", "vi"):
            assert not variant_config(v).displaces

    def test_i_and_iv_differ_by_grouping(self):
        a, b = variant_config("i"), variant_config("iv")
        assert a.register_dims == b.register_dims
        assert a.channel_family != b.channel_family

    def test_unknown(self):
        with pytest.raises(InvalidLabelError):
            variant_config("ix")

    def test_overlapping_labels(self):
        cfg = variant_config("iv")
        with pytest.raises(LabelError):
            ProtocolConfig("x", ("II",), cfg.channel_labels, cfg.channel_family, cfg.channel_label,
                           cfg.measured_labels, cfg.measure_family, cfg.correction_targets)


class TestRunProtocol:
    def test_seed_42(self):
        tr = run_protocol(variant_config("iv"), rand_state(1), 42)
        assert tr.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_basis_input(self):
        tr = run_protocol(variant_config("iv"), QuquartState.basis(0), 3)
        assert tr.outcome in ALL_LABELS
        assert tr.classical_message == tr.outcome.bits
        assert tr.probability == pytest.approx(1 / 16, abs=1e-12)

    def test_ququart_teleportation(self):
        tr = run_protocol(variant_config("iii"), rand_state(2), 9)
        assert tr.final.labels == ("III",)
        assert tr.fidelity == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("v", VARIANTS)
    def test_forced_outcomes_recover(self, v):
        cfg = variant_config(v)
        rng = np.random.default_rng(100)
        for _ in range(5):
            q = QuquartState.random(rng)
            for label in ALL_LABELS:
                tr = run_protocol(cfg, q, forced_outcome=label)
                assert tr.fidelity >= 1 - 1e-10

    def test_needs_seed(self):
        with pytest.raises(ValueError):
            run_protocol(variant_config("iv"), QuquartState.basis(0))

    def test_deterministic_bytes(self):
        cfg = variant_config("v")
        a = records.dumps(records.trace_record(run_protocol(cfg, rand_state(4), 77)))
        b = records.dumps(records.trace_record(run_protocol(cfg, rand_state(4), 77)))
        assert a == b

    def test_printed_table_fails_somewhere(self):
        # with the printed corrections some outcomes do not recover the input
        cfg, q = variant_config("iv"), QuquartState.normalized([1, 2, 3, 4j])
        fids = [run_protocol(cfg, q, forced_outcome=x, table=paper_correction_table()).fidelity for x in ALL_LABELS]
        assert min(fids) < 1 - 1e-3
        assert sum(f > 1 - 1e-10 for f in fids) == 11

    @pytest.mark.parametrize("label", [L("W_1"), L("X_3"), L("Z_2")])
    def test_linearity(self, label):
        cfg = variant_config("iv")
        basis_out = [run_protocol(cfg, QuquartState.basis(k), forced_outcome=label).final.amplitudes
                     for k in range(4)]
        for seed in range(3):
            q = rand_state(seed)
            out = run_protocol(cfg, q, forced_outcome=label).final.amplitudes
            # outputs carry the same global phase for every basis input
            assert np.allclose(out, sum(c * v for c, v in zip(q.vector(), basis_out)), atol=1e-12)

    def test_channel_dependence(self):
        t1 = derive_correction_oracle(variant_config("iv"))
        t2 = derive_correction_oracle(variant_config("iv", L("Y_2")))
        assert any(not np.array_equal(t1[x], t2[x]) for x in ALL_LABELS)
        cfg = variant_config("iv", L("Y_2"))
        q = rand_state(8)
        probs = [b.probability for b in decompose(build_total_state(q, channel_label=L("Y_2")))]
        assert np.allclose(probs, 1 / 16, atol=1e-12)
        assert all(run_protocol(cfg, q, forced_outcome=x).fidelity >= 1 - 1e-10 for x in ALL_LABELS)

    def test_expected_output_kind(self):
        q = QuquartState.basis(1)
        assert expected_output(variant_config("iv"), q).dims == (2, 2)
        assert expected_output(variant_config("vii"), q).dims == (4,)


class TestTrials:
    def test_trial_seeds(self):
        traces = run_trials(variant_config("iv"), 2**64 - 1, 3)
        assert [t.seed for t in traces] == [2**64 - 1, 0, 1]

    def test_uses_own_input(self):
        traces = run_trials(variant_config("iv"), 5, 2)
        assert traces[0].input != traces[1].input

    def test_bad_count(self):
        with pytest.raises(ValueError):
            run_trials(variant_config("iv"), 0, 0)


class TestSampling:
    def test_inverse_cdf(self):
        class Fixed:
            def __init__(self, u):
                self.u = u

            def random(self):
                return self.u

        probs = [1 / 16] * 16
        assert sample_outcome(probs, Fixed(0.0)) == 0
        assert sample_outcome(probs, Fixed(0.999999)) == 15
        assert sample_outcome(probs, Fixed(0.5)) == 8

    def test_skips_zero_branches(self):
        rng = np.random.default_rng(0)
        picks = {sample_outcome([0, 1, 0], rng) for _ in range(50)}
        assert picks == {1}


class TestTolerance:
    def test_default(self, monkeypatch):
        monkeypatch.delenv("QDISPLACE_TOLERANCE", raising=False)
        assert fidelity_tolerance() == 1e-10

    def test_override(self, monkeypatch):
        monkeypatch.setenv("QDISPLACE_TOLERANCE", "1e-6")
        assert fidelity_tolerance() == 1e-6

    @pytest.mark.parametrize("raw", ["abc", "0", "2"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("QDISPLACE_TOLERANCE", raw)
        with pytest.raises(ValueError):
            fidelity_tolerance()


def test_final_matches_expected_exactly_for_basis_input():
    cfg = variant_config("iv")
    tr = run_protocol(cfg, QuquartState.basis(2), forced_outcome=L("Y_1"))
    assert fidelity_up_to_phase(tr.final, expected_output(cfg, QuquartState.basis(2))) == 1.0
