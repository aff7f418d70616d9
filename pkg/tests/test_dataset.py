"""Dataset module: scanning, stratified splitting, synthetic generation."""

import numpy as np
import pytest

from forgerykit import codec, dataset as ds
from forgerykit.errors import (
    DegenerateClassError,
    EmptyClassError,
    MissingDirectoryError,
    ParseError,
)

from conftest import random_image


def _write_tree(root, n_auth, n_tamp, size=16, seed=0):
    rng = np.random.default_rng(seed)
    (root / "authentic").mkdir(parents=True)
    (root / "tampered").mkdir(parents=True)
    for i in range(n_auth):
        (root / "authentic" / f"a{i:03d}.png").write_bytes(
            codec.encode_png(random_image(rng, size, size))
        )
    for i in range(n_tamp):
        (root / "tampered" / f"t{i:03d}.jpg").write_bytes(
            codec.encode_jpeg(random_image(rng, size, size), 90)
        )


class TestScan:
    def test_counts_and_labels_follow_directories(self, tmp_path):
        _write_tree(tmp_path, 3, 2)
        manifest = ds.scan_dataset(tmp_path)
        assert len(manifest.records) == 5
        counts = manifest.class_counts()
        assert counts[ds.Label.AUTHENTIC] == 3
        assert counts[ds.Label.TAMPERED] == 2
        assert all(r.split is ds.Split.UNASSIGNED for r in manifest.records)

    def test_empty_class_rejected(self, tmp_path):
        _write_tree(tmp_path, 2, 1)
        for f in (tmp_path / "tampered").iterdir():
            f.unlink()
        with pytest.raises(EmptyClassError):
            ds.scan_dataset(tmp_path)

    def test_missing_directory_rejected(self, tmp_path):
        (tmp_path / "authentic").mkdir()
        with pytest.raises(MissingDirectoryError):
            ds.scan_dataset(tmp_path)

    def test_non_image_files_ignored(self, tmp_path):
        _write_tree(tmp_path, 2, 2)
        (tmp_path / "authentic" / "notes.txt").write_text("skip me")
        (tmp_path / "tampered" / "thumbs.db").write_bytes(b"\x00")
        manifest = ds.scan_dataset(tmp_path)
        assert len(manifest.records) == 4

    def test_scan_is_deterministic(self, tmp_path):
        _write_tree(tmp_path, 4, 3)
        first = ds.scan_dataset(tmp_path).to_jsonl()
        second = ds.scan_dataset(tmp_path).to_jsonl()
        assert first == second

    def test_custom_layout(self, tmp_path):
        rng = np.random.default_rng(1)
        (tmp_path / "Au").mkdir()
        (tmp_path / "Tp").mkdir()
        (tmp_path / "Au" / "x.png").write_bytes(codec.encode_png(random_image(rng, 16, 16)))
        (tmp_path / "Tp" / "y.png").write_bytes(codec.encode_png(random_image(rng, 16, 16)))
        manifest = ds.scan_dataset(tmp_path, ds.DatasetLayout("Au", "Tp"))
        assert [r.id for r in manifest.records] == ["Au/x.png", "Tp/y.png"]


def _manifest(n_auth, n_tamp):
    records = [
        ds.SampleRecord(f"authentic/a{i:04d}.png", ds.Label.AUTHENTIC)
        for i in range(n_auth)
    ] + [
        ds.SampleRecord(f"tampered/t{i:04d}.png", ds.Label.TAMPERED)
        for i in range(n_tamp)
    ]
    return ds.Manifest(sorted(records, key=lambda r: r.id))


class TestStratifiedSplit:
    def test_eighty_twenty_counts(self):
        split = ds.stratified_split(_manifest(60, 40), 0.8, seed=0)
        train = split.by_split(ds.Split.TRAIN)
        test = split.by_split(ds.Split.TEST)
        assert len(train) == 80 and len(test) == 20
        assert sum(r.label == ds.Label.AUTHENTIC for r in train) == 48
        assert sum(r.label == ds.Label.TAMPERED for r in train) == 32

    def test_same_seed_same_assignment(self):
        m = _manifest(17, 13)
        a = ds.stratified_split(m, 0.8, seed=9)
        b = ds.stratified_split(m, 0.8, seed=9)
        assert a.to_jsonl() == b.to_jsonl()

    def test_two_plus_two_at_half(self):
        split = ds.stratified_split(_manifest(2, 2), 0.5, seed=3)
        for label in (ds.Label.AUTHENTIC, ds.Label.TAMPERED):
            members = [r for r in split.records if r.label == label]
            assert sorted(r.split.value for r in members) == ["test", "train"]

    def test_partition_and_stratification_bound(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            n_auth = int(rng.integers(3, 60))
            n_tamp = int(rng.integers(3, 60))
            ratio = float(rng.uniform(0.2, 0.9))
            try:
                split = ds.stratified_split(_manifest(n_auth, n_tamp), ratio, seed=7)
            except DegenerateClassError:
                continue
            assert all(r.split in (ds.Split.TRAIN, ds.Split.TEST) for r in split.records)
            for label, count in ((ds.Label.AUTHENTIC, n_auth), (ds.Label.TAMPERED, n_tamp)):
                train_frac = sum(
                    1 for r in split.records if r.label == label and r.split is ds.Split.TRAIN
                ) / count
                assert abs(train_frac - ratio) <= 1.0 / count + 1e-12

    def test_degenerate_split_rejected(self):
        with pytest.raises(DegenerateClassError):
            ds.stratified_split(_manifest(2, 2), 0.9, seed=0)
        with pytest.raises(DegenerateClassError):
            ds.stratified_split(_manifest(1, 5), 0.5, seed=0)

    def test_three_way_counts(self):
        split = ds.stratified_split_three(_manifest(100, 100), 0.7, 0.1, seed=1)
        for label in (ds.Label.AUTHENTIC, ds.Label.TAMPERED):
            members = [r for r in split.records if r.label == label]
            counts = {s: sum(r.split is s for r in members) for s in ds.Split}
            assert counts[ds.Split.TRAIN] == 70
            assert counts[ds.Split.VAL] == 10
            assert counts[ds.Split.TEST] == 20

    def test_invalid_ratios_rejected(self):
        with pytest.raises(ValueError):
            ds.stratified_split(_manifest(4, 4), 0.0, seed=0)
        with pytest.raises(ValueError):
            ds.stratified_split_three(_manifest(4, 4), 0.7, 0.4, seed=0)


class TestManifestSerialization:
    def test_jsonl_golden_bytes(self):
        manifest = ds.Manifest(
            [
                ds.SampleRecord("authentic/a.png", ds.Label.AUTHENTIC, ds.Split.TRAIN),
                ds.SampleRecord("tampered/b.png", ds.Label.TAMPERED, ds.Split.TEST),
            ]
        )
        expected = (
            '{"id":"authentic/a.png","label":0,"split":"train"}\n'
            '{"id":"tampered/b.png","label":1,"split":"test"}\n'
        )
        assert manifest.to_jsonl() == expected

    def test_roundtrip(self, tmp_path):
        manifest = ds.stratified_split(_manifest(6, 5), 0.6, seed=2)
        path = tmp_path / "m.jsonl"
        manifest.save(path)
        loaded = ds.Manifest.load(path)
        assert loaded.records == manifest.records

    def test_bad_lines_reported(self):
        with pytest.raises(ParseError, match="line 2"):
            ds.Manifest.from_jsonl(
                '{"id":"a","label":0,"split":"train"}\n{"id":"b","label":7,"split":"train"}\n'
            )

    def test_unsorted_records_rejected(self):
        with pytest.raises(ValueError):
            ds.Manifest(
                [
                    ds.SampleRecord("b.png", ds.Label.AUTHENTIC),
                    ds.SampleRecord("a.png", ds.Label.TAMPERED),
                ]
            )


class TestSyntheticGeneration:
    def test_counts_and_labels(self, tmp_path):
        manifest = ds.generate_synthetic_dataset(10, 10, 64, seed=1, out_dir=tmp_path)
        counts = manifest.class_counts()
        assert counts[ds.Label.AUTHENTIC] == 10
        assert counts[ds.Label.TAMPERED] == 10
        pngs = list((tmp_path / "authentic").glob("*.png")) + list(
            (tmp_path / "tampered").glob("*.png")
        )
        assert len(pngs) == 20

    def test_deterministic_bytes(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        ds.generate_synthetic_dataset(4, 4, 32, seed=5, out_dir=a_dir)
        ds.generate_synthetic_dataset(4, 4, 32, seed=5, out_dir=b_dir)
        a_files = sorted(p.relative_to(a_dir) for p in a_dir.rglob("*") if p.is_file())
        b_files = sorted(p.relative_to(b_dir) for p in b_dir.rglob("*") if p.is_file())
        assert a_files == b_files
        for rel in a_files:
            assert (a_dir / rel).read_bytes() == (b_dir / rel).read_bytes()

    def test_patch_region_has_stronger_residual(self, tmp_path):
        import json

        manifest = ds.generate_synthetic_dataset(6, 12, 64, seed=3, out_dir=tmp_path)
        meta = json.loads((tmp_path / "synth_meta.json").read_text())
        inside, outside = [], []
        for record in manifest.by_label(ds.Label.TAMPERED):
            img = codec.decode_image((tmp_path / record.id).read_bytes())
            diff = codec.compute_fdiff(img, codec.jpeg_roundtrip(img, 90))
            x, y, w, h = meta["patches"][record.id]
            mask = np.zeros((64, 64), bool)
            mask[y : y + h, x : x + w] = True
            magnitude = np.abs(diff.values).mean(axis=2)
            inside.append(magnitude[mask].mean())
            outside.append(magnitude[~mask].mean())
        assert np.mean(inside) > np.mean(outside)

    def test_bad_parameters_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ds.generate_synthetic_dataset(0, 4, 64, seed=0, out_dir=tmp_path)
        with pytest.raises(ValueError):
            ds.generate_synthetic_dataset(4, 4, 8, seed=0, out_dir=tmp_path)
