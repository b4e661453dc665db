import json

import numpy as np
import pytest

from mggen.document import (
    CAPTION_MAX_BYTES,
    DocumentError,
    DuplicateId,
    InvalidCanvas,
    LayerImage,
    LayerKind,
    ManifestError,
    NonOpaqueBackground,
    OutOfBounds,
    decode_png,
    encode_png,
    export_assets,
    export_html,
    export_manifest,
    import_manifest,
    new_document,
    truncate_caption,
)
from mggen.geometry import Rect

from conftest import make_tiny_doc


def solid(w, h, rgba):
    px = np.empty((h, w, 4), dtype=np.uint8)
    px[:, :] = rgba
    return px


def bg_layer(w, h, color=(10, 20, 30)):
    return LayerImage("layer_0", LayerKind.BACKGROUND, Rect(0, 0, w, h), solid(w, h, (*color, 255)))


class TestCaption:
    def test_short_untouched(self):
        assert truncate_caption("hello") == "hello"
        assert truncate_caption("") == ""

    def test_exact_limit_untouched(self):
        s = "a" * CAPTION_MAX_BYTES
        assert truncate_caption(s) == s

    def test_over_limit_marked(self):
        out = truncate_caption("a" * 2000)
        assert out.endswith("…")
        assert len(out.encode("utf-8")) <= CAPTION_MAX_BYTES

    def test_multibyte_boundary(self):
        # é is two bytes; truncation must not split a code point
        out = truncate_caption("é" * 1000)
        assert out.endswith("…")
        encoded = out.encode("utf-8")
        assert len(encoded) <= CAPTION_MAX_BYTES
        assert encoded.decode("utf-8")  # round-trips, so no split sequence

    def test_layer_applies_truncation(self):
        layer = LayerImage(
            "layer_1", LayerKind.TEXT, Rect(0, 0, 2, 2), solid(2, 2, (0, 0, 0, 255)),
            caption="x" * 3000,
        )
        assert len(layer.caption.encode("utf-8")) <= CAPTION_MAX_BYTES
        assert layer.caption.endswith("…")


class TestLayerImage:
    def test_id_pattern_enforced(self):
        px = solid(2, 2, (0, 0, 0, 255))
        for bad in ("layer1", "Layer_1", "layer_", "layer_1x", "1", ""):
            with pytest.raises(DocumentError):
                LayerImage(bad, LayerKind.TEXT, Rect(0, 0, 2, 2), px)

    def test_pixel_shape_must_match_bbox(self):
        with pytest.raises(DocumentError):
            LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 3, 2), solid(2, 2, (0, 0, 0, 255)))

    def test_dtype_enforced(self):
        px = np.zeros((2, 2, 4), dtype=np.float64)
        with pytest.raises(DocumentError):
            LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 2, 2), px)

    def test_empty_extent_rejected(self):
        with pytest.raises(DocumentError):
            LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 0, 2), solid(2, 2, (0, 0, 0, 255)))

    def test_equality_covers_pixels(self):
        a = LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 2, 2), solid(2, 2, (1, 2, 3, 255)))
        b = LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 2, 2), solid(2, 2, (1, 2, 3, 255)))
        c = LayerImage("layer_1", LayerKind.TEXT, Rect(0, 0, 2, 2), solid(2, 2, (1, 2, 4, 255)))
        assert a == b
        assert a != c


class TestNewDocument:
    def test_canvas_validated(self):
        with pytest.raises(InvalidCanvas):
            new_document(0, 10, bg_layer(10, 10))
        with pytest.raises(InvalidCanvas):
            new_document(10, -1, bg_layer(10, 10))

    def test_background_must_cover_canvas(self):
        layer = LayerImage(
            "layer_0", LayerKind.BACKGROUND, Rect(0, 0, 4, 4), solid(4, 4, (0, 0, 0, 255))
        )
        with pytest.raises(DocumentError):
            new_document(8, 8, layer)

    def test_background_must_be_opaque(self):
        px = solid(4, 4, (0, 0, 0, 255))
        px[1, 1, 3] = 254
        layer = LayerImage("layer_0", LayerKind.BACKGROUND, Rect(0, 0, 4, 4), px)
        with pytest.raises(NonOpaqueBackground):
            new_document(4, 4, layer)

    def test_background_kind_enforced(self):
        layer = LayerImage("layer_0", LayerKind.TEXT, Rect(0, 0, 4, 4), solid(4, 4, (0, 0, 0, 255)))
        with pytest.raises(DocumentError):
            new_document(4, 4, layer)


class TestAddLayer:
    def make(self):
        return new_document(16, 12, bg_layer(16, 12))

    def cut(self, lid, kind, x=1, y=1):
        return LayerImage(lid, kind, Rect(x, y, 3, 3), solid(3, 3, (5, 5, 5, 255)))

    def test_duplicate_id(self):
        doc = self.make()
        doc.add_layer(self.cut("layer_1", LayerKind.TEXT))
        with pytest.raises(DuplicateId):
            doc.add_layer(self.cut("layer_1", LayerKind.RECTANGULAR))

    def test_out_of_bounds(self):
        doc = self.make()
        with pytest.raises(OutOfBounds):
            doc.add_layer(self.cut("layer_1", LayerKind.TEXT, x=14))

    def test_second_background_rejected(self):
        doc = self.make()
        layer = LayerImage(
            "layer_9", LayerKind.BACKGROUND, Rect(0, 0, 16, 12), solid(16, 12, (0, 0, 0, 255))
        )
        with pytest.raises(DocumentError):
            doc.add_layer(layer)

    def test_text_stays_on_top(self):
        doc = self.make()
        doc.add_layer(self.cut("layer_1", LayerKind.TEXT))
        doc.add_layer(self.cut("layer_2", LayerKind.RECTANGULAR))
        doc.add_layer(self.cut("layer_3", LayerKind.TEXT))
        doc.add_layer(self.cut("layer_4", LayerKind.NONRECTANGULAR))
        assert doc.layer_ids() == ["layer_0", "layer_2", "layer_4", "layer_1", "layer_3"]

    def test_next_id_skips_used(self):
        doc = self.make()
        doc.add_layer(self.cut("layer_1", LayerKind.TEXT))
        doc.add_layer(self.cut("layer_3", LayerKind.TEXT))
        assert doc.next_id() == "layer_2"


class TestFlatten:
    def test_opaque_background_only(self):
        doc = new_document(5, 4, bg_layer(5, 4, (9, 120, 200)))
        out = doc.flatten()
        assert out.shape == (4, 5, 4)
        assert (out[:, :, :3] == (9, 120, 200)).all()
        assert (out[:, :, 3] == 255).all()

    def test_translucent_over_frozen_case(self):
        # red at alpha 51 over opaque blue: 51/255 of 255 red -> (51, 0, 204)
        doc = new_document(3, 3, bg_layer(3, 3, (0, 0, 255)))
        doc.add_layer(
            LayerImage(
                "layer_1", LayerKind.RECTANGULAR, Rect(0, 0, 3, 3), solid(3, 3, (255, 0, 0, 51))
            )
        )
        out = doc.flatten()
        assert (out[:, :, :3] == (51, 0, 204)).all()
        assert (out[:, :, 3] == 255).all()

    def test_fully_transparent_layer_is_invisible(self):
        doc = new_document(4, 4, bg_layer(4, 4, (7, 8, 9)))
        doc.add_layer(
            LayerImage(
                "layer_1", LayerKind.RECTANGULAR, Rect(1, 1, 2, 2), solid(2, 2, (255, 255, 255, 0))
            )
        )
        assert (doc.flatten()[:, :, :3] == (7, 8, 9)).all()


class TestPng:
    def test_rgba_round_trip(self):
        rng = np.random.default_rng(3)
        px = rng.integers(0, 256, (7, 5, 4), dtype=np.uint8)
        assert np.array_equal(decode_png(encode_png(px)), px)


class TestHtml:
    def test_exact_output(self):
        doc = new_document(20, 10, bg_layer(20, 10))
        doc.add_layer(
            LayerImage(
                "layer_1",
                LayerKind.TEXT,
                Rect(2, 3, 4, 5),
                solid(4, 5, (1, 1, 1, 255)),
                caption="hi",
            )
        )
        expected = (
            "<!DOCTYPE html>\n"
            '<html><head><meta charset="utf-8"></head><body>\n'
            '<div id="canvas" style="position:relative;width:20px;height:10px;overflow:hidden;">\n'
            '  <img id="layer_0" data-layer-type="background" data-caption="" '
            'src="layers/layer_0.png" '
            'style="position:absolute;left:0px;top:0px;width:20px;height:10px;">\n'
            '  <img id="layer_1" data-layer-type="text" data-caption="hi" '
            'src="layers/layer_1.png" '
            'style="position:absolute;left:2px;top:3px;width:4px;height:5px;">\n'
            "</div>\n"
            "</body></html>\n"
        )
        assert export_html(doc) == expected

    def test_caption_attribute_escaped(self):
        doc = new_document(8, 8, bg_layer(8, 8))
        doc.add_layer(
            LayerImage(
                "layer_1",
                LayerKind.TEXT,
                Rect(0, 0, 2, 2),
                solid(2, 2, (0, 0, 0, 255)),
                caption='say "<hi>" & bye',
            )
        )
        html = export_html(doc)
        assert 'data-caption="say &quot;&lt;hi&gt;&quot; &amp; bye"' in html
        assert '"<hi>"' not in html


class TestManifest:
    def test_round_trip(self):
        doc = make_tiny_doc(4, seed=11)
        doc.layers[1].caption = "a caption"
        text = export_manifest(doc)
        assets = export_assets(doc)
        back = import_manifest(text, assets)
        assert back == doc

    def test_manifest_is_json_with_trailing_newline(self):
        doc = make_tiny_doc(1)
        text = export_manifest(doc)
        assert text.endswith("\n")
        data = json.loads(text)
        assert data["canvas"] == {"width": doc.width, "height": doc.height}
        assert len(data["layers"]) == len(doc.layers)

    def tamper(self, mutate, expect=ManifestError):
        doc = make_tiny_doc(3, seed=5)
        data = json.loads(export_manifest(doc))
        assets = export_assets(doc)
        mutate(data, assets)
        with pytest.raises(expect):
            import_manifest(json.dumps(data), assets)

    def test_missing_key_rejected(self):
        self.tamper(lambda d, a: d.pop("canvas"))

    def test_first_layer_must_be_background(self):
        def mutate(d, a):
            d["layers"][0], d["layers"][1] = d["layers"][1], d["layers"][0]

        self.tamper(mutate)

    def test_duplicate_id_rejected(self):
        def mutate(d, a):
            d["layers"][2]["id"] = d["layers"][1]["id"]

        self.tamper(mutate, expect=DuplicateId)

    def test_out_of_bounds_rejected(self):
        def mutate(d, a):
            x, y, w, h = d["layers"][1]["bbox"]
            d["layers"][1]["bbox"] = [d["canvas"]["width"] - w + 1, y, w, h]

        self.tamper(mutate, expect=OutOfBounds)

    def test_missing_asset_rejected(self):
        def mutate(d, a):
            a.pop(d["layers"][1]["asset"])

        self.tamper(mutate)

    def test_text_below_nontext_rejected(self):
        doc = make_tiny_doc(3, seed=5)
        data = json.loads(export_manifest(doc))
        assets = export_assets(doc)
        layers = data["layers"]
        # tiny doc interleaves kinds; force a text entry below a rectangular one
        kinds = [e["kind"] for e in layers]
        ti = kinds.index("text")
        ri = kinds.index("rectangular")
        if ti < ri:
            layers[ti], layers[ri] = layers[ri], layers[ti]
        else:
            layers[1], layers[-1] = layers[-1], layers[1]
        with pytest.raises(ManifestError):
            import_manifest(json.dumps(data), assets)

    def test_unknown_kind_rejected(self):
        def mutate(d, a):
            d["layers"][1]["kind"] = "sprite"

        self.tamper(mutate)
