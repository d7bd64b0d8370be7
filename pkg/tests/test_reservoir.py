import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from memrc.device import DeviceParams, MemristorState, read_current, write_update
from memrc.encoding import PulseProgramSet
from memrc.reservoir import (ConfigurationError, QuantizerConfig, Reservoir, calibrated_range,
                             default_quantizer_range, quantize, quantize_bins, resolve_range, run)
from memrc.variability import DeviceBank, VariabilityConfig

P6 = DeviceParams(tau=6e-9)
LO, HI = default_quantizer_range(DeviceParams())


def programs(rows, max_len=None):
    progs = [np.asarray(r, np.uint8) for r in rows]
    return PulseProgramSet(progs, max_len if max_len is not None else max(map(len, progs)))


class TestQuantize:
    def test_default_range(self):
        assert LO == pytest.approx(5.46856e-6, abs=1e-11)
        assert HI == pytest.approx(5.466229e-5, abs=1e-10)

    @pytest.mark.parametrize("bits", [1, 2, 4, 7])
    def test_edges(self, bits):
        q = QuantizerConfig(bits, LO, HI)
        assert quantize([LO, HI], q).tolist() == [0.0, 1.0]

    def test_thirty_percent_two_bits(self):
        q = QuantizerConfig(2, 0.0, 1.0)
        assert quantize([0.3], q)[0] == pytest.approx(1 / 3)

    def test_clamps(self):
        q = QuantizerConfig(3, 1.0, 2.0)
        assert quantize_bins([-5.0, 0.999, 2.5], q).tolist() == [0, 0, 7]

    def test_xmin_is_zero(self):
        q = resolve_range(QuantizerConfig(4, range_mode="device"), DeviceParams())
        assert quantize([read_current(0.1, 0.6, DeviceParams())], q)[0] == 0.0

    def test_unresolved_range(self):
        with pytest.raises(ConfigurationError):
            quantize([1.0], QuantizerConfig(4))

    def test_calibrated(self):
        q = resolve_range(QuantizerConfig(3), DeviceParams(), currents=np.array([2.0, 5.0, 3.0]))
        assert (q.i_lo, q.i_hi) == (2.0, 5.0)

    def test_calibrated_degenerate(self):
        lo, hi = calibrated_range(np.full(4, 3e-6))
        assert lo == 3e-6 and hi > lo

    @pytest.mark.parametrize("kw", [{"bits": 0}, {"bits": 2, "i_lo": 2.0, "i_hi": 1.0},
                                    {"range_mode": "auto"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            QuantizerConfig(**kw)

    @given(arrays(float, 50, elements=st.floats(0, 1e-4)), st.integers(1, 7))
    def test_feature_lattice(self, currents, bits):
        f = quantize(currents, QuantizerConfig(bits, LO, HI))
        j = f * (2 ** bits - 1)
        assert np.allclose(j, np.round(j)) and f.min() >= 0 and f.max() <= 1


class TestRun:
    def test_empty_programs(self):
        res = Reservoir(P6, 3)
        out = run(res, programs([[], [], []], 0))
        assert np.all(out == read_current(0.1, 0.6, P6))

    def test_four_writes(self):
        s = MemristorState.initial(P6)
        for _ in range(4):
            s = write_update(s, 1.5, P6)
        out = Reservoir(P6, 1).run(programs([[1, 1, 1, 1]]))
        assert out[0] == pytest.approx(read_current(s, 0.6, P6), rel=1e-14)

    def test_identical_devices(self):
        out = Reservoir(P6, 2).run(programs([[1, 0, 1], [1, 0, 1]]))
        assert out[0] == out[1]

    def test_padding_decays(self):
        out = Reservoir(P6, 2).run(programs([[1], [1, 0, 0]]))
        assert out[0] == out[1]

    def test_count_mismatch(self):
        with pytest.raises(ConfigurationError):
            Reservoir(P6, 2).run(programs([[1]]))

    def test_reset_between_images(self):
        res = Reservoir(P6, 1)
        a = res.run(programs([[1, 1, 0]]))
        assert np.array_equal(res.run(programs([[1, 1, 0]])), a)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        batch = rng.integers(0, 2, (4, 6, 5), dtype=np.uint8)
        bank = DeviceBank.sample(VariabilityConfig(d2d_pct=0.2, vary_lambda_eta=True), P6, 6)
        res = Reservoir(P6, 6, bank=bank)
        got = res.run_batch(batch)
        for i in range(4):
            want = res.run(PulseProgramSet(list(batch[i]), 5))
            assert np.array_equal(got[i], want)

    def test_batch_c2c_matches_scalar(self):
        batch = np.array([[[1, 1, 0, 1]]], np.uint8)
        m = np.array([[[1.1, 0.9, 1.05, 0.95]]])
        got = Reservoir(P6, 1).run_batch(batch, m)
        it = iter(m.ravel())
        want = Reservoir(P6, 1).run(PulseProgramSet(list(batch[0]), 4), c2c=lambda: next(it))
        assert got[0, 0] == pytest.approx(want[0], rel=1e-15)

    def test_batch_shape_checked(self):
        with pytest.raises(ConfigurationError):
            Reservoir(P6, 3).final_states(np.zeros((2, 4, 5), np.uint8))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.uint8, (5, 8), elements=st.integers(0, 1)), st.permutations(range(5)))
    def test_permutation_commutes(self, progs, perm):
        res = Reservoir(P6, 5)
        out = res.run_batch(progs[None])[0]
        assert np.array_equal(res.run_batch(progs[None, list(perm)])[0], out[list(perm)])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 1), max_size=12), st.integers(1, 7),
           st.floats(1e-9, 50e-9))
    def test_extra_pulse_never_lowers_feature(self, prog, bits, tau):
        p = DeviceParams(tau=tau)
        res = Reservoir(p, 1)
        q = QuantizerConfig(bits, LO, HI)
        base = quantize(res.run(programs([prog], len(prog))), q)
        more = quantize(res.run(programs([prog + [1]])), q)
        assert more[0] >= base[0]

    def test_determinism(self):
        batch = np.random.default_rng(0).integers(0, 2, (20, 30, 4), dtype=np.uint8)
        res = Reservoir(P6, 30)
        assert np.array_equal(res.run_batch(batch), res.run_batch(batch))
