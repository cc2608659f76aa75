"""Tests for image codecs, resizing, synthetic samples, manifests and datasets."""

import numpy as np
import png
import pytest

from src.config.config_models import SynthConfig
from src.data import (
    ManifestParser,
    Sample,
    SampleRecord,
    SegmentationDataset,
    augment_hflip,
    generate_sample,
    load_dataset,
    load_manifest,
    load_mask,
    load_rgb,
    read_pnm,
    resize,
    resize_bilinear,
    save_map,
    synthetic_dataset,
    write_manifest,
    write_pgm,
    write_ppm,
    write_synthetic_dataset,
)
from src.data.image_io import read_image_u8, to_u8
from src.errors import ContractError, DimensionError, ImageFormatError, ManifestParseError
from src.tensor import Prng

# -- image codecs -------------------------------------------------------------


def test_pgm_roundtrip(tmp_path):
    pixels = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    path = write_pgm(tmp_path / "a.pgm", pixels)
    assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
    np.testing.assert_array_equal(read_pnm(path), pixels)


def test_ppm_roundtrip(tmp_path):
    pixels = Prng(1).integers(0, 256, size=(5, 6, 3)).astype(np.uint8)
    path = write_ppm(tmp_path / "a.ppm", pixels)
    np.testing.assert_array_equal(read_pnm(path), pixels)


def test_header_comments_are_skipped(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    np.testing.assert_array_equal(read_pnm(path), [[0, 255]])


@pytest.mark.parametrize(
    "payload",
    [b"P3\n1 1\n255\n0 0 0", b"P5\n2 2\n65535\n" + b"\x00" * 8, b"P5\n2 2\n255\n\x00", b"P5\n2"],
)
def test_bad_netpbm_files(tmp_path, payload):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(ImageFormatError):
        read_pnm(path)


def test_load_rgb_scales_and_replicates_grey(tmp_path):
    path = write_pgm(tmp_path / "g.pgm", np.array([[0, 255]], dtype=np.uint8))
    image = load_rgb(path)
    assert image.shape == (3, 1, 2)
    np.testing.assert_array_equal(image[:, 0, 1], [1.0, 1.0, 1.0])


def test_load_mask_thresholds_at_128(tmp_path):
    path = write_pgm(tmp_path / "m.pgm", np.array([[0, 127, 128, 255]], dtype=np.uint8))
    np.testing.assert_array_equal(load_mask(path), [[0.0, 0.0, 1.0, 1.0]])


def test_png_grey_and_rgba(tmp_path):
    grey = tmp_path / "g.png"
    with open(grey, "wb") as f:
        png.Writer(3, 1, greyscale=True, bitdepth=8).write(f, [[0, 128, 255]])
    np.testing.assert_array_equal(read_image_u8(grey), [[0, 128, 255]])

    rgba = tmp_path / "c.png"
    with open(rgba, "wb") as f:
        png.Writer(2, 1, greyscale=False, alpha=True, bitdepth=8).write(f, [[10, 20, 30, 255, 40, 50, 60, 0]])
    pixels = read_image_u8(rgba)
    assert pixels.shape == (1, 2, 3)
    np.testing.assert_array_equal(pixels[0, 1], [40, 50, 60])


def test_corrupt_png_raises(tmp_path):
    path = tmp_path / "x.png"
    path.write_bytes(b"not a png")
    with pytest.raises(ImageFormatError):
        read_image_u8(path)


def test_to_u8_rounds():
    np.testing.assert_array_equal(to_u8(np.array([0.0, 1.0, 0.5, 2.0, -1.0])), [0, 255, 128, 255, 0])


def test_save_map_quantises(tmp_path):
    path = save_map(tmp_path / "p.pgm", np.array([[0.0, 0.2, 1.0]]))
    np.testing.assert_array_equal(read_pnm(path), [[0, 51, 255]])


# -- transforms ---------------------------------------------------------------


def test_identity_resize_is_exact():
    values = Prng(2).uniform((3, 5, 7))
    np.testing.assert_array_equal(resize_bilinear(values, 5, 7), values)


def test_resize_stays_in_input_range():
    values = Prng(3).uniform((6, 6))
    out = resize(values, 17, 11)
    assert out.shape == (17, 11)
    assert out.min() >= values.min() and out.max() <= values.max()


def test_resize_nearest_keeps_values():
    values = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = resize(values, 4, 4, mode="nearest")
    np.testing.assert_array_equal(out[:2, :2], np.zeros((2, 2)))
    np.testing.assert_array_equal(out[:2, 2:], np.ones((2, 2)))


def test_resize_rejects_bad_input():
    with pytest.raises(DimensionError):
        resize(np.zeros((0, 3)), 4, 4)
    with pytest.raises(DimensionError):
        resize(np.zeros((3, 3)), 0, 4)
    with pytest.raises(ValueError):
        resize(np.zeros((3, 3)), 4, 4, mode="cubic")


def test_hflip_moves_image_and_mask_together():
    image = Prng(4).uniform((3, 4, 5))
    mask = (Prng(5).uniform((4, 5)) > 0.5).astype(np.float64)
    flipped_any = kept_any = False
    for seed in range(12):
        expect_flip = Prng(seed).random() < 0.5
        out_image, out_mask = augment_hflip(image, mask, Prng(seed))
        if expect_flip:
            flipped_any = True
            np.testing.assert_array_equal(out_image, image[..., ::-1])
            np.testing.assert_array_equal(out_mask, mask[..., ::-1])
        else:
            kept_any = True
            np.testing.assert_array_equal(out_image, image)
            np.testing.assert_array_equal(out_mask, mask)
    assert flipped_any and kept_any


def test_hflip_takes_one_draw():
    rng = Prng(9)
    augment_hflip(np.zeros((3, 2, 2)), np.zeros((2, 2)), rng)
    reference = Prng(9)
    reference.random()
    assert rng.random() == reference.random()


# -- synthetic samples --------------------------------------------------------


def test_synthetic_sample_is_deterministic():
    cfg = SynthConfig(size=32, seed=7)
    image_a, mask_a = generate_sample(cfg, 3)
    image_b, mask_b = generate_sample(cfg, 3)
    np.testing.assert_array_equal(image_a, image_b)
    np.testing.assert_array_equal(mask_a, mask_b)
    other, _ = generate_sample(cfg, 4)
    assert not np.array_equal(image_a, other)


def test_synthetic_sample_ranges():
    cfg = SynthConfig(size=48, seed=1)
    lo, hi = cfg.object_scale_range
    for index in range(4):
        image, mask = generate_sample(cfg, index)
        assert image.shape == (3, 48, 48)
        assert image.min() >= 0.0 and image.max() <= 1.0
        assert set(np.unique(mask)) <= {0.0, 1.0}
        assert lo <= mask.mean() <= hi


def _object_contrast(image, mask):
    inside = image[:, mask > 0.5].mean(axis=1)
    outside = image[:, mask < 0.5].mean(axis=1)
    return float(np.abs(inside - outside).mean())


def test_cod_targets_blend_in_more_than_sod_targets():
    for index in range(3):
        cod_image, cod_mask = generate_sample(SynthConfig(size=48, seed=2, mode="cod"), index)
        sod_image, sod_mask = generate_sample(SynthConfig(size=48, seed=2, mode="sod"), index)
        np.testing.assert_array_equal(cod_mask, sod_mask)
        assert _object_contrast(cod_image, cod_mask) < _object_contrast(sod_image, sod_mask)


def test_synth_config_defaults_follow_mode():
    assert SynthConfig(mode="cod").camo_similarity == 0.9
    assert SynthConfig(mode="sod").camo_similarity == 0.1
    with pytest.raises(ContractError):
        SynthConfig(mode="depth")
    with pytest.raises(ContractError):
        SynthConfig(object_scale_range=(0.5, 0.2))


# -- manifests ----------------------------------------------------------------


def test_manifest_content_parses_in_order(tmp_path):
    content = "a.ppm\ta.pgm\tcod\ttrain\n\nb.ppm\tb.pgm\tsod\ttest\n"
    records = ManifestParser.parse_manifest_content(content, tmp_path, check_files=False)
    assert [r.task for r in records] == ["cod", "sod"]
    assert records[1].image_path == tmp_path / "b.ppm"
    assert records[0].split == "train"


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("a.ppm\ta.pgm\tcod", "fields"),
        ("a.ppm\ta.pgm\tdepth\ttrain", "unknown task"),
        ("a.ppm\ta.pgm\tcod\tval", "unknown split"),
    ],
)
def test_manifest_errors_name_the_line(tmp_path, line, fragment):
    path = tmp_path / "m.tsv"
    path.write_text("a.ppm\ta.pgm\tcod\ttrain\n" + line + "\n", encoding="utf-8")
    with pytest.raises(ManifestParseError) as exc:
        load_manifest(path, check_files=False)
    assert fragment in str(exc.value)
    assert exc.value.line_number == 2
    assert "m.tsv:2" in str(exc.value)


def test_manifest_requires_referenced_files(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text("missing.ppm\tmissing.pgm\tcod\ttrain\n", encoding="utf-8")
    with pytest.raises(ManifestParseError) as exc:
        load_manifest(path)
    assert "does not exist" in str(exc.value)


def test_missing_manifest(tmp_path):
    with pytest.raises(ManifestParseError):
        load_manifest(tmp_path / "nope.tsv")


def test_manifest_write_uses_relative_paths(tmp_path):
    records = [SampleRecord(tmp_path / "img" / "a.ppm", tmp_path / "msk" / "a.pgm", "cod", "test")]
    path = write_manifest(tmp_path / "m.tsv", records)
    assert path.read_text(encoding="utf-8") == "img/a.ppm\tmsk/a.pgm\tcod\ttest\n"
    assert load_manifest(path, check_files=False) == records


# -- datasets -----------------------------------------------------------------


def test_written_synthetic_dataset_loads_back(tmp_path):
    cfg = SynthConfig(size=16, seed=3, mode="sod")
    manifest = write_synthetic_dataset(tmp_path / "sod", cfg, train_count=3, test_count=2)
    train = load_dataset(manifest, split="train")
    test = load_dataset(manifest, split="test")
    assert len(train) == 3 and len(test) == 2
    assert test.task == "sod"
    assert test[0].name == "sod_00003"
    image, mask = generate_sample(cfg, 3)
    np.testing.assert_allclose(test[0].image, image, atol=0.5 / 255 + 1e-12)
    np.testing.assert_array_equal(test[0].mask, mask)


def test_load_dataset_filters_by_task(tmp_path):
    manifest = write_synthetic_dataset(tmp_path, SynthConfig(size=16, mode="cod"), 2, 0)
    assert len(load_dataset(manifest, task="sod")) == 0
    assert len(load_dataset(manifest, task="cod")) == 2


def test_synthetic_dataset_indices_follow_start():
    cfg = SynthConfig(size=16, seed=5)
    dataset = synthetic_dataset(cfg, 2, start=4)
    assert [s.name for s in dataset] == ["cod_00004", "cod_00005"]
    np.testing.assert_array_equal(dataset[1].image, generate_sample(cfg, 5)[0])


def test_sample_rejects_mismatched_mask():
    with pytest.raises(DimensionError):
        Sample("x", np.zeros((3, 4, 4)), np.zeros((4, 5)), "cod")


def test_dataset_rejects_mixed_tasks():
    samples = [
        Sample("a", np.zeros((3, 2, 2)), np.zeros((2, 2)), "cod"),
        Sample("b", np.zeros((3, 2, 2)), np.zeros((2, 2)), "sod"),
    ]
    with pytest.raises(ContractError):
        _ = SegmentationDataset(samples).task
