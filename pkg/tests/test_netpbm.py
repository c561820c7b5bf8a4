import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfdiff.netpbm import ImageFormatError, decode, encode, quantize, read_image, write_image


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 3]), st.integers(1, 9), st.integers(1, 9))
def test_bytes_roundtrip(seed, c, h, w):
    px = np.random.default_rng(seed).integers(0, 256, size=(c, h, w))
    buf = encode(px / 255.0)
    assert np.array_equal(quantize(decode(buf)), px)
    assert encode(decode(buf)) == buf


def test_pixel_mapping():
    assert decode(b"P5\n1 1\n255\n\xff")[0, 0, 0] == 1.0
    assert quantize(np.array([0.5]))[0] == 128
    assert quantize(np.array([-0.3, 1.7]))[0] == 0 and quantize(np.array([1.7]))[0] == 255


def test_header_comments_and_layout():
    img = decode(b"P6 # colour\n2 1\n# max\n255\n\x01\x02\x03\x04\x05\x06")
    assert img.shape == (3, 1, 2)
    assert np.array_equal(quantize(img)[:, 0, 1], [4, 5, 6])


@pytest.mark.parametrize("buf, offset", [
    (b"P2\n1 1\n255\n7", 0),
    (b"P5\n1 1\n65535\n\0\0", 12),
    (b"P5\nx 1\n255\n\0", 3),
    (b"P5\n2 2\n255\n\0", 12),
    (b"P5\n1 1\n255\n\0\0", 12),
    (b"P5\n1 1", 6),
])
def test_errors_report_offset(buf, offset):
    with pytest.raises(ImageFormatError) as e:
        decode(buf)
    assert e.value.offset == offset
    assert str(e.value).endswith(f"at byte {offset}")


def test_file_roundtrip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, size=(1, 4, 6)) / 255.0
    write_image(tmp_path / "a.pgm", img)
    assert np.array_equal(read_image(tmp_path / "a.pgm"), img)
    with pytest.raises(OSError):
        read_image(tmp_path / "missing.pgm")


def test_encode_rejects_bad_shape():
    with pytest.raises(ValueError):
        encode(np.zeros((2, 3, 3)))
