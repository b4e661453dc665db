import numpy as np
import pytest

from mggen.animdsl import parse, validate
from mggen.compositor import (
    EmptySequence,
    Frame,
    FrameSequence,
    composite,
    encode,
    over,
    place_layer,
    premultiply,
    quantize_frame,
    render,
)
from mggen.document import LayerImage, LayerKind, decode_png, new_document
from mggen.geometry import Rect
from mggen.kernels import numpy_impl
from mggen.timeline import PropertyState, compile_script

from conftest import make_tiny_doc


def solid(w, h, rgba):
    px = np.empty((h, w, 4), dtype=np.uint8)
    px[:, :] = rgba
    return px


def bg_layer(w, h, color=(0, 0, 0)):
    return LayerImage("layer_0", LayerKind.BACKGROUND, Rect(0, 0, w, h), solid(w, h, (*color, 255)))


class TestPremultiply:
    def test_closed_form(self):
        px = solid(1, 1, (255, 0, 0, 51))
        out = premultiply(px)
        a = 51.0 / 255.0
        assert out[0, 0, 0] == pytest.approx(a)
        assert out[0, 0, 1] == 0.0
        assert out[0, 0, 3] == pytest.approx(a)

    def test_quantize_round_trips_opaque(self):
        rng = np.random.default_rng(1)
        px = rng.integers(0, 256, (6, 5, 4), dtype=np.uint8)
        px[:, :, 3] = 255
        assert np.array_equal(quantize_frame(premultiply(px)), px)

    def test_quantize_round_trips_translucent(self):
        px = solid(2, 2, (255, 0, 0, 51))
        assert np.array_equal(quantize_frame(premultiply(px)), px)

    def test_quantize_fully_transparent(self):
        out = quantize_frame(np.zeros((2, 2, 4)))
        assert (out == 0).all()


class TestOver:
    def test_frozen_case(self):
        # red at alpha 51 over opaque blue -> (51, 0, 204)
        top = premultiply(solid(2, 2, (255, 0, 0, 51)))
        bottom = premultiply(solid(2, 2, (0, 0, 255, 255)))
        out = quantize_frame(over(top, bottom))
        assert (out[:, :] == (51, 0, 204, 255)).all()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            over(np.zeros((2, 2, 4)), np.zeros((3, 2, 4)))


class TestPlaceLayer:
    def layer(self, w=4, h=4, color=(10, 200, 30, 255), x=2, y=3):
        return LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(x, y, w, h), solid(w, h, color))

    def test_identity_is_plain_blit(self):
        layer = self.layer()
        tile, x0, y0 = place_layer(layer, PropertyState(), (16, 16))
        assert (x0, y0) == (2, 3)
        assert np.array_equal(tile, premultiply(layer.pixels))

    def test_integral_translation_blits(self):
        tile, x0, y0 = place_layer(self.layer(), PropertyState(tx=3.0, ty=-1.0), (16, 16))
        assert (x0, y0) == (5, 2)

    def test_blit_clips_to_canvas(self):
        tile, x0, y0 = place_layer(self.layer(x=0, y=0), PropertyState(tx=-2.0), (16, 16))
        assert (x0, y0) == (0, 0)
        assert tile.shape == (4, 2, 4)

    def test_fully_outside_returns_none(self):
        assert place_layer(self.layer(), PropertyState(tx=100.0), (16, 16)) is None

    def test_zero_opacity_returns_none(self):
        assert place_layer(self.layer(), PropertyState(opacity=0.0), (16, 16)) is None

    def test_opacity_scales_tile(self):
        full, _, _ = place_layer(self.layer(), PropertyState(), (16, 16))
        half, _, _ = place_layer(self.layer(), PropertyState(opacity=0.5), (16, 16))
        assert np.allclose(half, full * 0.5)


class TestComposite:
    def translucent_doc(self):
        doc = new_document(12, 9, bg_layer(12, 9, (40, 90, 160)))
        px = solid(5, 4, (250, 30, 10, 128))
        px[1, 1] = (0, 255, 0, 30)
        doc.add_layer(LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(3, 2, 5, 4), px))
        px2 = solid(4, 3, (255, 255, 0, 200))
        doc.add_layer(LayerImage("layer_2", LayerKind.TEXT, Rect(6, 4, 4, 3), px2))
        return doc

    def test_identity_matches_flatten_exactly(self):
        for doc in (self.translucent_doc(), make_tiny_doc(5, seed=9)):
            assert np.array_equal(composite(doc).pixels, doc.flatten())

    def test_alpha_opaque_everywhere(self):
        assert (composite(self.translucent_doc()).pixels[:, :, 3] == 255).all()

    def test_half_opacity_over_black_frozen(self):
        doc = new_document(4, 4, bg_layer(4, 4, (0, 0, 0)))
        doc.add_layer(
            LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(0, 0, 4, 4), solid(4, 4, (255, 0, 0, 255)))
        )
        frame = composite(doc, {1: PropertyState(opacity=0.5)})
        assert (frame.pixels[:, :] == (128, 0, 0, 255)).all()

    def test_rotation_90_matches_rot90(self):
        # square opaque tile, clockwise quarter turn about its own center
        doc = new_document(20, 20, bg_layer(20, 20, (1, 2, 3)))
        rng = np.random.default_rng(4)
        px = rng.integers(0, 256, (6, 6, 4), dtype=np.uint8)
        px[:, :, 3] = 255
        doc.add_layer(LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(7, 7, 6, 6), px))
        frame = composite(doc, {1: PropertyState(rotate=90.0)})
        got = frame.pixels[7:13, 7:13]
        want = np.rot90(px, k=-1)
        assert np.array_equal(got[:, :, :3], want[:, :, :3])

    def test_fractional_translation_interpolates(self):
        doc = new_document(10, 6, bg_layer(10, 6, (0, 0, 0)))
        doc.add_layer(
            LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(2, 2, 3, 2), solid(3, 2, (255, 255, 255, 255)))
        )
        frame = composite(doc, {1: PropertyState(tx=0.5)})
        px = frame.pixels
        # interior stays white, both edges blend halfway with the black ground
        assert (px[2, 4, :3] == 255).all()
        assert (px[2, 2, :3] == 128).all()
        assert (px[2, 5, :3] == 128).all()

    def test_scale_grows_footprint(self):
        doc = new_document(24, 24, bg_layer(24, 24, (0, 0, 0)))
        doc.add_layer(
            LayerImage("layer_1", LayerKind.RECTANGULAR, Rect(10, 10, 4, 4), solid(4, 4, (255, 255, 255, 255)))
        )
        base = composite(doc).pixels[:, :, 0]
        grown = composite(doc, {1: PropertyState(scale=2.0)}).pixels[:, :, 0]
        assert (base == 255).sum() == 16
        assert (grown == 255).sum() > 2 * 16  # solid core doubles in each axis
        assert (grown > 0).sum() >= 64  # full 8x8 geometric footprint covered


class TestRender:
    def make(self):
        doc = make_tiny_doc(3, seed=2)
        script = parse(
            "timeline(loop=false, autoplay=true) {\n"
            '  add("#layer_1", {translateX: [-10, 0], opacity: [0, 1]}, duration=100);\n'
            '  add("#layer_2", {scale: [0.5, 1]}, duration=60);\n'
            "}\n"
        )
        return doc, compile_script(validate(script, doc))

    def test_frame_count_and_stamps(self):
        doc, tl = self.make()
        seq = render(doc, tl, fps=25)
        assert tl.total_duration == 160.0
        assert [f.t_ms for f in seq.frames] == [0.0, 40.0, 80.0, 120.0, 160.0]
        assert seq.fps == 25

    def test_worker_count_is_invisible(self):
        doc, tl = self.make()
        a = render(doc, tl, fps=25, workers=1)
        b = render(doc, tl, fps=25, workers=4)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.pixels, fb.pixels)

    def test_final_frame_is_rest_state(self):
        doc, tl = self.make()
        seq = render(doc, tl, fps=25)
        assert np.array_equal(seq.frames[-1].pixels, doc.flatten())


class TestEncode:
    def seq(self, n=2, w=3, h=2):
        rng = np.random.default_rng(7)
        frames = []
        for k in range(n):
            px = rng.integers(0, 256, (h, w, 4), dtype=np.uint8)
            px[:, :, 3] = 255
            frames.append(Frame(t_ms=40.0 * k, pixels=px))
        return FrameSequence(fps=25, frames=frames)

    def test_png_seq_round_trip(self, tmp_path):
        seq = self.seq()
        paths = encode(seq, "png_seq", str(tmp_path / "frames"))
        assert [p.rsplit("/", 1)[1] for p in paths] == ["frame_00000.png", "frame_00001.png"]
        for p, frame in zip(paths, seq.frames):
            with open(p, "rb") as fh:
                assert np.array_equal(decode_png(fh.read()), frame.pixels)

    def test_y4m_layout(self, tmp_path):
        seq = self.seq(n=2, w=4, h=2)
        (path,) = encode(seq, "y4m", str(tmp_path / "out.y4m"))
        with open(path, "rb") as fh:
            data = fh.read()
        header = b"YUV4MPEG2 W4 H2 F25:1 Ip A1:1 C444\n"
        assert data.startswith(header)
        body = data[len(header):]
        plane = 4 * 2
        assert len(body) == 2 * (len(b"FRAME\n") + 3 * plane)
        for k, frame in enumerate(seq.frames):
            chunk = body[k * (6 + 3 * plane) : (k + 1) * (6 + 3 * plane)]
            assert chunk[:6] == b"FRAME\n"
            ycbcr = numpy_impl.rgb_to_ycbcr(frame.pixels[:, :, :3])
            assert chunk[6 : 6 + plane] == ycbcr[:, :, 0].tobytes()
            assert chunk[6 + plane : 6 + 2 * plane] == ycbcr[:, :, 1].tobytes()
            assert chunk[6 + 2 * plane :] == ycbcr[:, :, 2].tobytes()

    def test_empty_sequence_rejected(self, tmp_path):
        with pytest.raises(EmptySequence):
            encode(FrameSequence(fps=25, frames=[]), "y4m", str(tmp_path / "x.y4m"))

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            encode(self.seq(), "gif", str(tmp_path / "x.gif"))

    def test_y4m_needs_integer_fps(self, tmp_path):
        seq = self.seq()
        seq.fps = 12.5
        with pytest.raises(ValueError):
            encode(seq, "y4m", str(tmp_path / "x.y4m"))
