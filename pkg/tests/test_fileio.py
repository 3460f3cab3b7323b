"""File formats: byte-exact round trips and parse diagnostics."""

import numpy as np
import pytest

from fmnet.fileio import (
    ParseError,
    fmt1_bytes,
    fmt1_parse,
    load_checkpoint,
    read_fmt1,
    read_pgm,
    read_ppm,
    restore_model,
    save_checkpoint,
    write_fmt1,
    write_pgm,
    write_ppm,
)
from fmnet.fourier import ComplexTensor
from fmnet.model import FMNet, ModelConfig
from fmnet.tensor import Tensor, no_grad


class TestFmt1:
    def test_f64_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        t = Tensor(rng.normal(size=(3, 4, 5)))
        path = tmp_path / "t.fmt1"
        write_fmt1(path, t)
        back = read_fmt1(path)
        np.testing.assert_array_equal(back.data, t.data)
        assert back.data.dtype == np.float64

    def test_f32_round_trip(self, tmp_path):
        t = Tensor(np.array([1.5, -2.25], dtype=np.float32))
        path = tmp_path / "t32.fmt1"
        write_fmt1(path, t)
        back = read_fmt1(path)
        assert back.data.dtype == np.float32
        np.testing.assert_array_equal(back.data, t.data)

    def test_complex_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        z = ComplexTensor(Tensor(rng.normal(size=(2, 3))), Tensor(rng.normal(size=(2, 3))))
        path = tmp_path / "z.fmt1"
        write_fmt1(path, z)
        back = read_fmt1(path)
        assert isinstance(back, ComplexTensor)
        np.testing.assert_array_equal(back.re.data, z.re.data)
        np.testing.assert_array_equal(back.im.data, z.im.data)

    def test_scalar_rank0(self):
        t = Tensor(np.float64(4.25))
        back, used = fmt1_parse(fmt1_bytes(t))
        assert back.data.reshape(()) == 4.25

    def test_write_read_bytes_identical(self):
        t = Tensor(np.arange(6, dtype=np.float64).reshape(2, 3))
        blob = fmt1_bytes(t)
        back, used = fmt1_parse(blob)
        assert used == len(blob)
        assert fmt1_bytes(back) == blob

    def test_bad_magic(self):
        with pytest.raises(ParseError, match="byte 0.*magic"):
            fmt1_parse(b"XXXX" + b"\0" * 16)

    def test_truncated_payload(self):
        t = Tensor(np.ones((4, 4)))
        blob = fmt1_bytes(t)
        with pytest.raises(ParseError, match="truncated payload"):
            fmt1_parse(blob[:-8])

    def test_unknown_dtype_tag(self):
        t = Tensor(np.ones(2))
        blob = bytearray(fmt1_bytes(t))
        blob[4 + 4 + 8] = 9  # dtype tag position for rank 1
        with pytest.raises(ParseError, match="unknown dtype tag"):
            fmt1_parse(bytes(blob))


class TestNetpbm:
    def test_pgm_round_trip_byte_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        img = rng.random((9, 7))
        p1 = tmp_path / "a.pgm"
        p2 = tmp_path / "b.pgm"
        write_pgm(p1, img)
        write_pgm(p2, read_pgm(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_pgm_mid_gray_value(self, tmp_path):
        path = tmp_path / "g.pgm"
        path.write_bytes(b"P5\n4 2\n255\n" + bytes([128] * 8))
        arr = read_pgm(path)
        np.testing.assert_allclose(arr, 128 / 255, atol=1e-12)
        assert arr.shape == (2, 4)

    def test_pgm_comment_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes(4))
        assert read_pgm(path).shape == (2, 2)

    def test_ppm_round_trip_byte_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        img = rng.random((3, 5, 6))
        p1 = tmp_path / "a.ppm"
        p2 = tmp_path / "b.ppm"
        write_ppm(p1, img)
        write_ppm(p2, read_ppm(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_maxval(self, tmp_path):
        path = tmp_path / "m.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(ParseError, match="maxval 255"):
            read_pgm(path)

    def test_truncated_pixels(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(ParseError, match="truncated payload"):
            read_pgm(path)

    def test_bad_magic_offset(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        with pytest.raises(ParseError, match="byte 0"):
            read_pgm(path)

    def test_nondigit_header(self, tmp_path):
        path = tmp_path / "h.pgm"
        path.write_bytes(b"P5\nab 2\n255\n" + bytes(4))
        with pytest.raises(ParseError, match="integer header"):
            read_pgm(path)


class TestCheckpoint:
    def test_save_load_restore(self, tmp_path):
        cfg = ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                          pfae_reduced=8, mfm_heads=1, seed=5)
        model = FMNet(cfg)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, model, {"note": "test"})
        config_dict, params = load_checkpoint(path)
        assert config_dict == {"note": "test"}
        assert len(params) == len(model.named_params())

        other = FMNet(ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                                  pfae_reduced=8, mfm_heads=1, seed=99))
        restore_model(other, params)
        img = Tensor(np.random.default_rng(1).normal(size=(1, 3, 64, 64)))
        with no_grad():
            a = model(img).logits[0].data
            b = other(img).logits[0].data
        np.testing.assert_array_equal(a, b)

    def test_missing_param_rejected(self, tmp_path):
        cfg = ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                          pfae_reduced=8, mfm_heads=1)
        model = FMNet(cfg)
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model, {})
        _, params = load_checkpoint(path)
        params.pop(next(iter(params)))
        with pytest.raises(KeyError, match="missing"):
            restore_model(model, params)
