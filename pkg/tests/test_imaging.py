import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalonet.errors import CropTooWideError, DimensionMismatchError, NotDivisibleError
from scalonet.imaging import (
    CropSpec,
    ImagePlane,
    Provenance,
    export_png,
    export_raw,
    import_png,
    import_raw,
    quantize,
    render_curve,
    resize,
    sliding_crops,
    split_bands,
    stack_channels,
    to_grayscale,
)
from scalonet.signal_io import Signal
from scalonet.transform import Scalogram, build_scale_grid, cwt
from scalonet.wavelets import DOG, Paul


def scalogram_of(matrix, wavelet="mexh"):
    m = np.asarray(matrix, dtype=float)
    return Scalogram(
        coefficients=m,
        grid=build_scale_grid(2.0, 0.25, m.shape[0]),
        sample_rate_hz=50.0,
        wavelet=wavelet,
    )


def plane(matrix, axis="x", wavelet="mexh"):
    return ImagePlane(np.asarray(matrix, dtype=np.float32), Provenance(axis, wavelet))


class TestGrayscale:
    def test_minmax(self):
        p = to_grayscale(scalogram_of([[0, 1], [2, 4]]), "minmax")
        np.testing.assert_allclose(p.pixels, [[0, 0.25], [0.5, 1.0]])

    def test_constant_is_half(self):
        p = to_grayscale(scalogram_of([[3.0, 3.0], [3.0, 3.0]]), "minmax")
        np.testing.assert_allclose(p.pixels, 0.5)
        z = to_grayscale(scalogram_of([[0.0, 0.0]]), "absmax")
        np.testing.assert_allclose(z.pixels, 0.5)

    def test_absmax(self):
        p = to_grayscale(scalogram_of([[-2, 0], [1, 2]]), "absmax")
        np.testing.assert_allclose(p.pixels, [[0.0, 0.5], [0.75, 1.0]])

    def test_default_mode_follows_wavelet(self):
        signed = scalogram_of([[-1.0, 1.0]], wavelet="dog:2")
        assert to_grayscale(signed).pixels[0, 0] == pytest.approx(0.0)
        modulus = scalogram_of([[0.0, 2.0]], wavelet="paul:4")
        assert to_grayscale(modulus).pixels[0, 0] == pytest.approx(0.0)

    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=4, max_size=4),
        st.sampled_from(["minmax", "absmax"]),
    )
    @settings(max_examples=80)
    def test_monotone(self, values, mode):
        sc = scalogram_of(np.array(values).reshape(2, 2))
        pix = to_grayscale(sc, mode).pixels.ravel()
        flat = np.array(values)
        order = np.argsort(flat, kind="stable")
        assert np.all(np.diff(pix[order]) >= -1e-7)


class TestStack:
    def test_three_axes(self):
        planes = [plane(np.zeros((64, 151)), axis=a) for a in ("x", "y", "z")]
        t = stack_channels(planes, label=3)
        assert t.shape == (3, 64, 151)
        assert [c.provenance.axis for c in t.channels] == ["x", "y", "z"]
        assert t.label == 3

    def test_axes_times_wavelets(self):
        planes = [
            plane(np.zeros((64, 151)), axis=a, wavelet=w)
            for a in ("x", "y", "z")
            for w in ("mexh", "paul:4")
        ]
        assert stack_channels(planes).shape[0] == 6

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            stack_channels([plane(np.zeros((64, 151))), plane(np.zeros((64, 150)))])


class TestCrops:
    def test_offsets(self):
        img = stack_channels([plane(np.arange(40, dtype=float).reshape(4, 10) / 40.0)])
        crops = sliding_crops(img, CropSpec(width=6, stride=2))
        assert len(crops) == 3
        for k, c in enumerate(crops):
            np.testing.assert_array_equal(
                c.channels[0].pixels, img.channels[0].pixels[:, 2 * k : 2 * k + 6]
            )

    def test_centered(self):
        img = stack_channels([plane(np.zeros((4, 10)))], label=1)
        crops = sliding_crops(img, CropSpec(width=6, stride=0))
        assert len(crops) == 1
        assert crops[0].label == 1
        assert crops[0].shape == (1, 4, 6)

    def test_too_wide(self):
        img = stack_channels([plane(np.zeros((4, 10)))])
        with pytest.raises(CropTooWideError):
            sliding_crops(img, CropSpec(width=11, stride=1))

    @given(
        width=st.integers(1, 64),
        crop=st.integers(1, 64),
        stride=st.integers(1, 16),
    )
    @settings(max_examples=100)
    def test_count_closed_form(self, width, crop, stride):
        img = stack_channels([plane(np.zeros((2, width)))])
        if crop > width:
            with pytest.raises(CropTooWideError):
                sliding_crops(img, CropSpec(crop, stride))
        else:
            crops = sliding_crops(img, CropSpec(crop, stride))
            assert len(crops) == (width - crop) // stride + 1


class TestBands:
    def test_halves(self):
        img = stack_channels([plane(np.random.default_rng(0).random((64, 151)))])
        bands = split_bands(img, 2)
        assert [b.shape for b in bands] == [(1, 32, 151), (1, 32, 151)]
        np.testing.assert_array_equal(bands[0].channels[0].pixels, img.channels[0].pixels[:32])
        np.testing.assert_array_equal(bands[1].channels[0].pixels, img.channels[0].pixels[32:])

    def test_identity(self):
        img = stack_channels([plane(np.zeros((8, 5)))])
        (band,) = split_bands(img, 1)
        np.testing.assert_array_equal(band.channels[0].pixels, img.channels[0].pixels)

    def test_not_divisible(self):
        img = stack_channels([plane(np.zeros((64, 151)))])
        with pytest.raises(NotDivisibleError):
            split_bands(img, 3)


class TestResize:
    def test_identity(self):
        rng = np.random.default_rng(1)
        img = stack_channels([plane(rng.random((6, 9)))])
        out = resize(img, 6, 9)
        np.testing.assert_array_equal(out.channels[0].pixels, img.channels[0].pixels)

    def test_checkerboard_average(self):
        img = stack_channels([plane([[0.0, 1.0], [1.0, 0.0]])])
        out = resize(img, 1, 1)
        assert out.channels[0].pixels[0, 0] == pytest.approx(0.5)

    def test_constant_survives_round_trip(self):
        img = stack_channels([plane(np.full((4, 6), 0.3))])
        out = resize(resize(img, 9, 13), 4, 6)
        np.testing.assert_allclose(out.channels[0].pixels, 0.3, atol=1e-6)

    def test_range_preserved(self):
        rng = np.random.default_rng(2)
        img = stack_channels([plane(rng.random((8, 8)))])
        out = resize(img, 21, 5)
        assert out.channels[0].pixels.min() >= 0.0
        assert out.channels[0].pixels.max() <= 1.0


class TestPng:
    def test_half_gray_quantizes_to_128(self):
        assert np.all(quantize(plane(np.full((3, 3), 0.5))) == 128)

    def test_round_trip_within_one_step(self, tmp_path):
        rng = np.random.default_rng(3)
        img = stack_channels([plane(rng.random((8, 12)), axis="x", wavelet="mexh")])
        (path,) = export_png(img, tmp_path, "sample0")
        assert path.name == "sample0_x_mexh.png"
        back = import_png(path)
        assert np.max(np.abs(back.pixels - img.channels[0].pixels)) <= 1.0 / 255.0
        assert back.provenance.axis == "x"

    def test_selector_sanitized(self, tmp_path):
        img = stack_channels([plane(np.zeros((2, 2)), axis="y", wavelet="dog:3")])
        (path,) = export_png(img, tmp_path, "s")
        assert ":" not in path.name

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        img = stack_channels([plane(np.zeros((2, 2)))])
        with pytest.raises(OSError):
            export_png(img, blocker / "sub", "s")


class TestRaw:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        img = stack_channels(
            [plane(rng.random((5, 7)), axis=a, wavelet="mexh") for a in ("x", "y")],
            label=1,
        )
        path = tmp_path / "img.cwts"
        export_raw(img, path)
        back = import_raw(path, provenance=[c.provenance for c in img.channels], label=1)
        np.testing.assert_array_equal(back.pixels(), img.pixels())
        assert back.label == 1
        assert back.channels[0].provenance == img.channels[0].provenance

    def test_rewrite_bit_identical(self, tmp_path):
        rng = np.random.default_rng(5)
        img = stack_channels([plane(rng.random((4, 4)))])
        export_raw(img, tmp_path / "a.cwts")
        export_raw(import_raw(tmp_path / "a.cwts"), tmp_path / "b.cwts")
        assert (tmp_path / "a.cwts").read_bytes() == (tmp_path / "b.cwts").read_bytes()


class TestPipelineChannelCounts:
    def test_cwt_planes_stack(self):
        rng = np.random.default_rng(6)
        sig = Signal(rng.normal(size=64), 50.0)
        grid = build_scale_grid(2.0, 0.3, 8)
        planes = [
            to_grayscale(cwt(sig, w, grid), axis="x") for w in (DOG(2), Paul(4))
        ]
        t = stack_channels(planes)
        assert t.shape == (2, 8, 64)
        assert [c.provenance.wavelet for c in t.channels] == ["dog:2", "paul:4"]


class TestRenderCurve:
    def test_shape_and_ink(self):
        img = render_curve(np.sin(np.linspace(0, 6, 200)), height=64)
        assert img.shape == (64, 200)
        assert (img == 0).any() and (img == 255).any()

    def test_resampled_width(self):
        img = render_curve(np.arange(100.0), height=32, width=50)
        assert img.shape == (32, 50)
