"""Seeded corpus generators: determinism, orthonormality, admissibility, and
the declarative corpus spec."""

import json

import numpy as np
import pytest

from lplab import (
    ConfigurationError,
    CorpusSpec,
    DegenerateInputError,
    FiniteRankOperator,
    GridFunction,
    UNIT_BALL,
    forward_transform,
    lp_norm,
    philox_generator,
    power_bounded,
    project,
    random_band_limited,
    random_orthonormal_frame,
    single_spike,
    spike_sequences,
    validate_contract,
    wave_packet,
)

TAU = 2.0 * np.pi


class TestPhiloxStreams:
    def test_same_key_same_draws(self):
        a = philox_generator(12, member_index=3).standard_normal(8)
        b = philox_generator(12, member_index=3).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_members_and_streams_decorrelate(self):
        base = philox_generator(12, member_index=3).standard_normal(8)
        other_member = philox_generator(12, member_index=4).standard_normal(8)
        other_stream = philox_generator(12, member_index=3, stream=1).standard_normal(8)
        assert not np.array_equal(base, other_member)
        assert not np.array_equal(base, other_stream)

    def test_stream_range_guard(self):
        with pytest.raises(ValueError, match="stream"):
            philox_generator(1, stream=256)


class TestBandLimited:
    def test_deterministic_in_seed_and_index(self, grid1):
        f = random_band_limited(grid1, decay=1.0, seed=5, index=2)
        g = random_band_limited(grid1, decay=1.0, seed=5, index=2)
        np.testing.assert_array_equal(f.values, g.values)
        h = random_band_limited(grid1, decay=1.0, seed=5, index=3)
        assert not np.array_equal(f.values, h.values)

    def test_decay_shapes_spectrum(self, grid1):
        rough = random_band_limited(grid1, decay=0.0, seed=6)
        smooth = random_band_limited(grid1, decay=3.0, seed=6)
        # Energy fraction above radius 32 should collapse under strong decay.
        def high_fraction(f):
            energy = np.abs(forward_transform(f).coefficients) ** 2
            high = energy[grid1.frequency_norms > 32.0].sum()
            return high / energy.sum()

        assert high_fraction(smooth) < 1e-6
        assert high_fraction(rough) > 0.1

    def test_zero_mean_flag(self, grid2):
        f = random_band_limited(grid2, decay=1.0, seed=7, zero_mean=True)
        coeffs = forward_transform(f).coefficients
        # The zero mode is removed in the spectral domain; one FFT round trip
        # later it is only zero up to rounding noise.
        assert abs(coeffs[grid2.zero_mode_index]) <= 1e-13 * np.abs(coeffs).max()


class TestWavePacket:
    def test_width_must_be_positive(self, grid1):
        with pytest.raises(ValueError, match="width"):
            wave_packet(grid1, center=[np.pi], momentum_mode=[4], width=0.0)

    def test_center_length_checked(self, grid2):
        with pytest.raises(ValueError):
            wave_packet(grid2, center=[1.0], momentum_mode=[4, 0], width=0.5)

    def test_peak_sits_at_center(self, grid1):
        packet = wave_packet(grid1, center=[np.pi], momentum_mode=[8], width=0.3)
        magnitudes = np.abs(packet.values)
        peak = grid1.axis_coordinates[np.argmax(magnitudes)]
        assert abs(peak - np.pi) <= grid1.spacing

    def test_modulus_translates_with_center(self, grid1):
        # Shifting the center by 32 cells permutes the modulus profile.
        shift_cells = 32
        a = wave_packet(grid1, center=[np.pi], momentum_mode=[8], width=0.3)
        b = wave_packet(
            grid1,
            center=[np.pi + shift_cells * grid1.spacing],
            momentum_mode=[8],
            width=0.3,
        )
        np.testing.assert_allclose(
            np.roll(np.abs(a.values), shift_cells), np.abs(b.values), rtol=1e-9, atol=1e-12
        )

    def test_energy_concentrates_near_momentum_scale(self, grid1, blocks1):
        # Carrier mode 16 lives at radius 2^4; a moderately wide packet keeps
        # almost all of its energy in the adjacent blocks.
        packet = wave_packet(grid1, center=[2.0], momentum_mode=[16], width=1.0)
        total = lp_norm(packet, 2) ** 2
        near = sum(
            lp_norm(project(packet, blocks1, j), 2) ** 2 for j in (3, 4, 5)
        )
        assert near / total > 0.99


class TestOrthonormalFrame:
    def test_frame_is_orthonormal(self, grid1):
        op = random_orthonormal_frame(grid1, rank=5, decay=1.0, seed=21)
        flat = op.eigenfunctions.reshape(op.rank, -1)
        gram = grid1.cell_volume * flat @ flat.conj().T
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)

    def test_deterministic(self, grid1):
        a = random_orthonormal_frame(grid1, rank=3, decay=1.0, seed=22, index=1)
        b = random_orthonormal_frame(grid1, rank=3, decay=1.0, seed=22, index=1)
        np.testing.assert_array_equal(a.eigenfunctions, b.eigenfunctions)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)

    def test_uniform_weights_stay_in_unit_ball(self, grid1):
        op = random_orthonormal_frame(grid1, rank=4, decay=1.0, seed=23)
        assert op.contract == UNIT_BALL
        assert np.all(op.eigenvalues <= 1.0)
        assert np.all(op.eigenvalues >= 0.0)
        assert validate_contract(op).passed

    def test_ones_weights(self, grid2):
        op = random_orthonormal_frame(grid2, rank=3, decay=1.0, seed=24, weights="ones")
        np.testing.assert_array_equal(op.eigenvalues, np.ones(3))

    def test_unknown_weight_law(self, grid1):
        with pytest.raises(ValueError, match="weight law"):
            random_orthonormal_frame(grid1, rank=2, decay=1.0, seed=25, weights="zipf")

    def test_rank_bounds(self, grid1):
        with pytest.raises(ValueError, match="rank"):
            random_orthonormal_frame(grid1, rank=0, decay=1.0, seed=26)
        with pytest.raises(ValueError, match="exceeds"):
            random_orthonormal_frame(grid1, rank=grid1.size + 1, decay=1.0, seed=26)

    def test_zero_mean_frame(self, grid1):
        op = random_orthonormal_frame(grid1, rank=3, decay=1.0, seed=27, zero_mean=True)
        for k in range(op.rank):
            coeffs = forward_transform(op.eigenfunction(k)).coefficients
            assert abs(coeffs[grid1.zero_mode_index]) <= 1e-12

    @pytest.mark.parametrize("a", [1.0, 0.5, -0.25])
    def test_power_bound_contract_validates(self, grid1, a):
        op = random_orthonormal_frame(
            grid1, rank=3, decay=1.0, seed=28, power_bound=a
        )
        assert op.contract == power_bounded(a)
        report = validate_contract(op)
        assert report.passed, (a, report.checks)


class TestSpikeSequences:
    def test_admissible_by_construction(self):
        for dim in (1, 2, 3):
            for alpha in spike_sequences(dim, count=5, seed=31):
                for j, value in alpha.items():
                    assert 0.0 <= value <= 2.0 ** (j * dim), (dim, j)

    def test_deterministic_and_distinct(self):
        first = spike_sequences(2, count=3, seed=32)
        second = spike_sequences(2, count=3, seed=32)
        assert first == second
        assert first[0] != first[1]

    def test_index_window(self):
        alpha = spike_sequences(1, j_range=(-2, 4), count=1, seed=33)[0]
        assert sorted(alpha) == list(range(-2, 5))
        with pytest.raises(ValueError, match="empty index range"):
            spike_sequences(1, j_range=(3, 1))

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="dimension"):
            spike_sequences(4)

    def test_single_spike_saturates_cap(self):
        assert single_spike(2, 3) == {3: 64.0}
        assert single_spike(3, -1) == {-1: 0.125}


class TestCorpusSpec:
    def test_kind_checked(self):
        with pytest.raises(ConfigurationError, match="generator kind"):
            CorpusSpec("fourier_noise", count=1, seed=0)

    def test_count_checked(self):
        with pytest.raises(ConfigurationError, match="sample count"):
            CorpusSpec("fermi_sea", count=0, seed=0)

    def test_member_index_window(self, grid1):
        spec = CorpusSpec("random_band_limited", count=2, seed=40)
        with pytest.raises(IndexError):
            spec.member(grid1, 2)

    def test_member_dispatch(self, grid1):
        cases = {
            "random_band_limited": GridFunction,
            "wave_packet": GridFunction,
            "random_orthonormal_frame": FiniteRankOperator,
            "spike_sequence": dict,
        }
        for kind, expected in cases.items():
            spec = CorpusSpec(kind, count=2, seed=41)
            assert isinstance(spec.member(grid1, 1), expected), kind
        sea_spec = CorpusSpec(
            "fermi_sea", count=1, seed=0, params={"chemical_potential": 1.1}
        )
        sea = sea_spec.member(grid1, 0)
        assert isinstance(sea, FiniteRankOperator)
        assert sea.rank == 3

    def test_members_match_direct_calls(self, grid1):
        spec = CorpusSpec(
            "random_orthonormal_frame",
            count=3,
            seed=42,
            params={"rank": 2, "decay": 0.5},
        )
        member = spec.member(grid1, 1)
        direct = random_orthonormal_frame(grid1, rank=2, decay=0.5, seed=42, index=1)
        np.testing.assert_array_equal(member.eigenfunctions, direct.eigenfunctions)

    def test_dict_round_trip(self):
        spec = CorpusSpec("wave_packet", count=4, seed=43, params={"width": 0.5})
        assert CorpusSpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_missing_field(self):
        with pytest.raises(ConfigurationError, match="missing field"):
            CorpusSpec.from_dict({"kind": "fermi_sea", "count": 1})

    def test_from_file_json(self, tmp_path):
        path = tmp_path / "spec.json"
        payload = {
            "kind": "random_band_limited",
            "count": 7,
            "seed": 44,
            "params": {"decay": 1.5, "zero_mean": True},
        }
        path.write_text(json.dumps(payload))
        spec = CorpusSpec.from_file(path)
        assert spec.count == 7
        assert spec.params["zero_mean"] is True

    def test_from_file_key_value(self, tmp_path):
        path = tmp_path / "spec.txt"
        path.write_text(
            "# frame corpus\n"
            "kind = random_orthonormal_frame\n"
            "count = 5\n"
            "seed = 45\n"
            "rank = 4\n"
            "weights = ones\n"
        )
        spec = CorpusSpec.from_file(path)
        assert spec.kind == "random_orthonormal_frame"
        assert spec.count == 5
        assert spec.params == {"rank": 4, "weights": "ones"}

    def test_from_file_rejects_garbage(self, tmp_path):
        path = tmp_path / "spec.txt"
        path.write_text("kind random_band_limited\n")
        with pytest.raises(ConfigurationError, match="key=value"):
            CorpusSpec.from_file(path)


class TestDegenerateFrames:
    def test_collapse_is_reported(self, small1):
        # Requesting more orthonormal vectors than honestly supported spectral
        # degrees of freedom triggers the collapse error rather than silence.
        with pytest.raises((DegenerateInputError, ValueError)):
            random_orthonormal_frame(small1, rank=17, decay=50.0, seed=46)
