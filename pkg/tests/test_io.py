import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from dlds.config import CtTrainConfig, TrainConfig
from dlds.continuous import random_ct_model
from dlds.discrete import infer_sequence, one_step_predict, random_model, train_discrete
from dlds.errors import DomainError, IntegrityError, ParseError, VersionError
from dlds.io import (FORMAT_VERSION, MAGIC, decode_archive, encode_archive, load_archive, load_csv,
                     load_model, read_table, save_model, write_csv, zscore)
from dlds.systems import SystemSpec, generate


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestCsv:
    def test_zeros(self, tmp_path):
        traj = load_csv(write_text(tmp_path / "z.csv", "0,0\n0,0\n0,0\n"))
        assert traj.samples.shape == (3, 2) and np.all(traj.samples == 0)

    def test_header_and_dt(self, tmp_path):
        traj = load_csv(write_text(tmp_path / "h.csv", "a,b\n1,2\n3,4\n"), has_header=True, dt=0.5)
        np.testing.assert_array_equal(traj.samples, [[1, 2], [3, 4]])
        assert traj.dt == 0.5

    def test_blank_lines_skipped(self, tmp_path):
        traj = load_csv(write_text(tmp_path / "b.csv", "1,2\n\n3,4\n"))
        assert traj.T == 2

    def test_nan_cell_named(self, tmp_path):
        with pytest.raises(ParseError, match=r"line 2, column 2"):
            load_csv(write_text(tmp_path / "n.csv", "1,2\n3,nan\n"))

    def test_non_numeric_cell(self, tmp_path):
        with pytest.raises(ParseError, match=r"line 1, column 1.*'x'"):
            load_csv(write_text(tmp_path / "s.csv", "x,2\n3,4\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ParseError, match="line 3"):
            load_csv(write_text(tmp_path / "r.csv", "1,2\n3,4\n5\n"))

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(DomainError):
            load_csv(write_text(tmp_path / "one.csv", "1,2\n"))
        with pytest.raises(DomainError):
            load_csv(write_text(tmp_path / "empty.csv", ""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(str(tmp_path / "nope.csv"))

    @given(hnp.arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)),
                      elements=st.floats(-1e6, 1e6, allow_nan=False)))
    @settings(max_examples=30)
    def test_zscore_definition(self, Y):
        Z = zscore(Y)
        assert np.abs(Z.mean(axis=0)).max() < 1e-10
        live = np.ptp(Y, axis=0) > 0
        assert np.all(np.isfinite(Z))
        assert np.abs(Z.std(axis=0)[live] - 1).max(initial=0) < 1e-10

    def test_zscore_on_load(self, tmp_path, rng):
        path = str(tmp_path / "y.csv")
        write_csv(path, rng.standard_normal((50, 3)) * [1, 10, 100] + 7)
        Z = load_csv(path, zscore_channels=True).samples
        np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-10)

    @given(hnp.arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 4)),
                      elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
    @settings(max_examples=30)
    def test_write_read_bit_exact(self, Y):
        import tempfile
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "t.csv")
            write_csv(path, Y, [f"c{j}" for j in range(Y.shape[1])])
            back, header = read_table(path, has_header=True)
        np.testing.assert_array_equal(back, Y)
        assert header == [f"c{j}" for j in range(Y.shape[1])]


class TestArchive:
    def test_discrete_round_trip_bit_exact(self, tmp_path, rng):
        m = random_model(5, 3, 4, rng)
        path = str(tmp_path / "m.dlds")
        save_model(m, path, "discrete", {"tau": 0.3}, {"final_epoch": 2}, {"dt": 0.2})
        arc = load_archive(path)
        np.testing.assert_array_equal(arc.model.D, m.D)
        np.testing.assert_array_equal(arc.model.f, m.f)
        assert arc.variant == "discrete" and arc.config == {"tau": 0.3} and arc.meta["dt"] == 0.2

    def test_continuous_round_trip(self, tmp_path, rng):
        m = random_ct_model(3, 4, rng)
        path = str(tmp_path / "c.dlds")
        save_model(m, path, config=CtTrainConfig().to_dict())
        arc = load_archive(path)
        assert arc.variant == "continuous"
        np.testing.assert_array_equal(arc.model.G, m.G)
        assert CtTrainConfig.from_dict(arc.config) == CtTrainConfig()

    def test_save_load_save_identical_bytes(self, tmp_path, rng):
        m = random_model(4, 2, 3, rng)
        data = encode_archive(m, "discrete", TrainConfig().to_dict(), {"rmse": [0.5]}, {"name": "x"})
        arc = decode_archive(data)
        assert encode_archive(arc.model, arc.variant, arc.config, arc.trace, arc.meta) == data

    def test_bad_magic(self, rng):
        data = bytearray(encode_archive(random_model(3, 2, 1, rng)))
        data[0:8] = b"NOTMAGIC"
        with pytest.raises(IntegrityError, match="magic"):
            decode_archive(bytes(data))

    @pytest.mark.parametrize("cut", [1, 4, 20, 100])
    def test_truncated(self, rng, cut):
        data = encode_archive(random_model(3, 2, 2, rng))
        with pytest.raises(IntegrityError):
            decode_archive(data[:-cut])

    def test_truncated_to_nothing(self):
        with pytest.raises(IntegrityError):
            decode_archive(MAGIC[:5])

    def test_corrupted_payload(self, rng):
        data = bytearray(encode_archive(random_model(3, 2, 2, rng)))
        data[-10] ^= 0xFF
        with pytest.raises(IntegrityError, match="checksum"):
            decode_archive(bytes(data))

    def test_version_mismatch(self, rng):
        data = bytearray(encode_archive(random_model(3, 2, 1, rng)))
        struct.pack_into("<I", data, len(MAGIC), FORMAT_VERSION + 1)
        with pytest.raises(VersionError, match=str(FORMAT_VERSION + 1)):
            decode_archive(bytes(data))

    def test_variant_must_match_model(self, rng):
        with pytest.raises(DomainError):
            encode_archive(random_model(3, 2, 1, rng), "continuous")

    def test_atomic_write_leaves_no_temp(self, tmp_path, rng):
        save_model(random_model(3, 2, 1, rng), str(tmp_path / "a.dlds"))
        assert os.listdir(tmp_path) == ["a.dlds"]

    def test_trained_fhn_prediction_round_trip(self, tmp_path):
        traj = generate(SystemSpec("fhn", T=200))
        cfg = TrainConfig(tau=0.3, max_epochs=5)
        model, path, _ = train_discrete(traj, 2, 2, cfg)
        fname = str(tmp_path / "fhn.dlds")
        save_model(model, fname, "discrete", cfg.to_dict())
        arc = load_archive(fname)
        loaded = load_model(fname)
        cfg2 = TrainConfig.from_dict(arc.config)
        assert cfg2 == cfg
        a = one_step_predict(model, infer_sequence(traj, model, cfg))
        b = one_step_predict(loaded, infer_sequence(traj, loaded, cfg2))
        np.testing.assert_array_equal(a, b)
