from hdqual import pipeline
from hdqual.errors import (
    DegenerateDistributionError,
    DimensionMismatchError,
    EmptyClassError,
    ManifestError,
    StratificationError,
    WindowTooLongError,
)
import json
import numpy as np
import pytest


def _dataset(counts, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    labels = []
    for label, count in zip(("low", "average", "high"), counts):
        labels += [label] * count
    samples = rng.normal(size=(len(labels), dim))
    provenance = [("P{:03d}".format(ii), "f", 0) for ii in range(len(labels))]
    return pipeline.LabeledDataset(samples, labels, provenance, channel_count=1)


def test_window_floor():
    rec = pipeline.Recording(["a"], np.arange(10.0)[np.newaxis, :])
    vectors = pipeline.window(rec, pipeline.WindowSpec(3))
    assert vectors.shape == (3, 3)
    assert np.array_equal(vectors[-1], [6, 7, 8])


def test_window_channel_order():
    data = np.array([[0, 1, 2, 3, 4, 5], [10, 11, 12, 13, 14, 15]], dtype=float)
    rec = pipeline.Recording(["A", "B"], data)
    vectors = pipeline.window(rec, pipeline.WindowSpec(3))
    assert np.array_equal(vectors[0], [0, 1, 2, 10, 11, 12])
    assert np.array_equal(vectors[1], [3, 4, 5, 13, 14, 15])


def test_window_too_long():
    rec = pipeline.Recording(["a"], np.zeros((1, 5)))
    with pytest.raises(WindowTooLongError):
        pipeline.window(rec, pipeline.WindowSpec(6))


def test_label_deviation_examples():
    # standardized, so the z-scores are the values themselves
    values = np.array([-1.5, 0.0, 2.0, -0.5])
    values = (values - values.mean()) / values.std()
    labeling = pipeline.label_deviation(values)
    assert np.allclose(labeling.z_scores, values)
    assert labeling.categories == ["low", "average", "high", "average"]


def test_label_deviation_boundaries_inclusive():
    labeling = pipeline.label_deviation([-0.5, 0.5])
    assert np.allclose(labeling.z_scores, [-1.0, 1.0])
    assert labeling.categories == ["average", "average"]


def test_label_deviation_sample_std():
    devs = [0.01, 0.02, 0.03, 0.04, 0.09]
    pop = pipeline.label_deviation(devs, ddof=0)
    sample = pipeline.label_deviation(devs, ddof=1)
    assert sample.std > pop.std
    assert np.allclose(sample.z_scores, (np.array(devs) - np.mean(devs)) / sample.std)


def test_label_deviation_degenerate():
    with pytest.raises(DegenerateDistributionError):
        pipeline.label_deviation([0.05, 0.05, 0.05])
    with pytest.raises(DegenerateDistributionError):
        pipeline.label_deviation([0.05])
    for value in (0.1, 0.0312, 1e6):
        with pytest.raises(DegenerateDistributionError):
            pipeline.label_deviation([value] * 18)


def test_balance_minority():
    ds = _dataset((100, 50, 75))
    balanced = pipeline.balance(ds, seed=1)
    assert list(balanced.class_counts().values()) == [50, 50, 50]


def test_balance_fixpoint_and_determinism():
    ds = _dataset((20, 20, 20))
    balanced = pipeline.balance(ds, seed=3)
    assert sorted(balanced.provenance) == sorted(ds.provenance)

    ds = _dataset((30, 12, 17))
    first = pipeline.balance(ds, seed=5)
    second = pipeline.balance(ds, seed=5)
    assert first.provenance == second.provenance
    assert np.array_equal(first.samples, second.samples)


def test_balance_empty_class():
    with pytest.raises(EmptyClassError):
        pipeline.balance(_dataset((10, 10, 0)), seed=0)


def test_split_fraction():
    ds = _dataset((100, 100, 100))
    train, test = pipeline.split(ds, 0.8, seed=0)
    assert list(train.class_counts().values()) == [80, 80, 80]
    assert list(test.class_counts().values()) == [20, 20, 20]
    assert not set(train.provenance) & set(test.provenance)


def test_split_smallest_stratum():
    ds = _dataset((2, 2, 2))
    train, test = pipeline.split(ds, 0.5, seed=0)
    assert list(train.class_counts().values()) == [1, 1, 1]
    assert list(test.class_counts().values()) == [1, 1, 1]


def test_split_keeps_one_on_each_side():
    ds = _dataset((3, 3, 3))
    train, test = pipeline.split(ds, 0.99, seed=0)
    assert list(test.class_counts().values()) == [1, 1, 1]


def test_split_proportions():
    ds = _dataset((37, 23, 11))
    train, test = pipeline.split(ds, 0.8, seed=2)
    for label, count in ds.class_counts().items():
        assert abs(train.class_counts()[label] - 0.8 * count) <= 1
        assert train.class_counts()[label] + test.class_counts()[label] == count


def test_split_stratification_error():
    with pytest.raises(StratificationError):
        pipeline.split(_dataset((5, 1, 5)), 0.8, seed=0)


def test_channel_scaler():
    rng = np.random.default_rng(0)
    blocks = np.stack([rng.normal(3.0, 2.0, size=(50, 6)),
                       rng.normal(-1.0, 0.5, size=(50, 6))], axis=1)
    ds = pipeline.LabeledDataset(blocks.reshape(50, 12), ["low"] * 50,
                                 channel_count=2)
    scaler = pipeline.ChannelScaler().fit(ds)
    scaled = scaler.transform(ds).samples.reshape(50, 2, 6)
    assert np.allclose(scaled.mean(axis=(0, 2)), 0.0, atol=1e-12)
    assert np.allclose(scaled.std(axis=(0, 2)), 1.0)

    restored = pipeline.ChannelScaler.from_dict(scaler.to_dict())
    assert np.allclose(restored.transform(ds).samples, scaled.reshape(50, 12))


def test_build_dataset_provenance():
    recordings, deviations = pipeline.gen_synthetic(channels=2, samples=100,
                                                    parts_per_class=2, seed=1)
    ds = pipeline.build_dataset(recordings, deviations, pipeline.WindowSpec(10))
    assert len(ds) == len(recordings) * 10
    assert ds.dim_m == 20
    assert ds.channel_count == 2
    assert ds.provenance[0] == (recordings[0].part_id, recordings[0].feature_id, 0)
    assert list(ds.class_counts().values()) == [20, 20, 20]


def test_build_dataset_channel_mismatch():
    a = pipeline.Recording(["x"], np.zeros((1, 10)), part_id="P1")
    b = pipeline.Recording(["y"], np.zeros((1, 10)), part_id="P2")
    with pytest.raises(DimensionMismatchError):
        pipeline.build_dataset([a, b], [0.0, 1.0], pipeline.WindowSpec(5))


def test_gen_synthetic_defaults():
    recordings, deviations = pipeline.gen_synthetic(samples=200, seed=0)
    assert len(recordings) == 18
    labels = pipeline.label_deviation(deviations).categories
    assert [labels.count(c) for c in ("low", "average", "high")] == [6, 6, 6]
    assert recordings[0].data.shape == (8, 200)


def test_gen_synthetic_noiseless_duplicates():
    recordings, deviations = pipeline.gen_synthetic(samples=100, noise_sigma=0.0,
                                                    parts_per_class=3, seed=0)
    labels = pipeline.label_deviation(deviations).categories
    for label in ("low", "average", "high"):
        same = [r.data for r, lab in zip(recordings, labels) if lab == label]
        for data in same[1:]:
            assert np.array_equal(data, same[0])


def test_gen_synthetic_determinism():
    r1, d1 = pipeline.gen_synthetic(samples=100, seed=9)
    r2, d2 = pipeline.gen_synthetic(samples=100, seed=9)
    r3, _ = pipeline.gen_synthetic(samples=100, seed=10)
    assert d1 == d2
    assert all(np.array_equal(a.data, b.data) for a, b in zip(r1, r2))
    assert not np.array_equal(r1[0].data, r3[0].data)


def test_gen_synthetic_several_features():
    recordings, deviations = pipeline.gen_synthetic(
        samples=100, seed=0, parts_per_class=2, features=("bore", "pocket")
    )
    assert len(recordings) == 12
    ds = pipeline.build_dataset(recordings, deviations, pipeline.WindowSpec(20))
    assert set(f for _, f, _ in ds.provenance) == {"bore", "pocket"}


def test_dataset_files_roundtrip(tmp_path):
    recordings, deviations = pipeline.gen_synthetic(channels=3, samples=50,
                                                    parts_per_class=2, seed=4)
    manifest = pipeline.write_dataset(str(tmp_path), recordings, deviations)
    loaded, loaded_devs = pipeline.load_recordings(manifest)

    assert loaded_devs == deviations
    for a, b in zip(recordings, loaded):
        assert a.part_id == b.part_id
        assert a.channel_names == b.channel_names
        assert np.allclose(a.data, b.data, rtol=1e-9)


def test_dataset_files_deterministic(tmp_path):
    for name in ("a", "b"):
        recordings, deviations = pipeline.gen_synthetic(samples=50, seed=4)
        pipeline.write_dataset(str(tmp_path / name), recordings, deviations)
    for path in sorted((tmp_path / "a").iterdir()):
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError) as err:
        pipeline.read_manifest(str(tmp_path / "missing.json"))
    assert "missing.json" in str(err.value)

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format_version": 1, "channels": ["a"]}))
    with pytest.raises(ManifestError):
        pipeline.read_manifest(str(bad))

    nofile = tmp_path / "nofile.json"
    nofile.write_text(json.dumps({
        "format_version": 1, "sample_rate_hz": 10.0, "channels": ["a"],
        "parts": [{"part_id": "P1", "feature_id": "f", "file": "gone.csv",
                   "deviation_mm": 0.1}],
    }))
    with pytest.raises(ManifestError):
        pipeline.load_recordings(str(nofile))


def test_window_shapes_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        channels = int(rng.integers(1, 6))
        length = int(rng.integers(1, 300))
        n = int(rng.integers(1, length + 1))
        rec = pipeline.Recording(["c{}".format(c) for c in range(channels)],
                                 rng.normal(size=(channels, length)))
        vectors = pipeline.window(rec, pipeline.WindowSpec(n))
        assert vectors.shape == (length // n, n * channels)


def test_window_follows_channel_permutation():
    rng = np.random.default_rng(12)
    names = ["x", "y", "z", "w"]
    rec = pipeline.Recording(names, rng.normal(size=(4, 100)))
    order = [2, 0, 3, 1]

    plain = pipeline.window(rec, pipeline.WindowSpec(10))
    permuted = pipeline.window(rec.reordered([names[ii] for ii in order]),
                               pipeline.WindowSpec(10))
    blocks = plain.reshape(len(plain), 4, 10)[:, order, :]
    assert np.array_equal(permuted, blocks.reshape(len(plain), 40))


def test_label_deviation_affine_invariant():
    rng = np.random.default_rng(13)
    x = rng.normal(0.05, 0.02, size=40)
    expected = pipeline.label_deviation(x).categories
    for a, b in ((0.5, 0.0), (3.0, -5.0), (1e3, 0.2)):
        assert pipeline.label_deviation(a * x + b).categories == expected


def test_split_partitions_input():
    rng = np.random.default_rng(14)
    for _ in range(30):
        counts = rng.integers(2, 30, size=3)
        ds = _dataset(counts, seed=int(rng.integers(1000)))
        fraction = float(rng.uniform(0.05, 0.95))
        train, test = pipeline.split(ds, fraction, seed=int(rng.integers(1000)))

        together = sorted(zip(train.provenance + test.provenance,
                              train.labels + test.labels))
        assert together == sorted(zip(ds.provenance, ds.labels))
        rows = np.vstack([train.samples, test.samples])
        assert np.array_equal(rows[np.lexsort(rows.T)], ds.samples[np.lexsort(ds.samples.T)])
