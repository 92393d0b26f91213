"""End-to-end smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import sico


def make_set(features, labels, class_count=2):
    return sico.SampleSet(
        features=np.asarray(features, dtype=np.float64),
        labels=list(labels),
        class_count=class_count,
    )


def test_kappa_hand_value():
    counts = np.array([[40, 10], [10, 40]], dtype=np.uint64)
    assert sico.kappa(counts) == pytest.approx(0.6, abs=1e-12)


def test_sensitivity_specificity():
    sens, spec = sico.sensitivity_specificity(tn=6, fp=4, fn=2, tp=8)
    assert sens == pytest.approx(0.8)
    assert spec == pytest.approx(0.6)


def test_selection_matches_sorting_oracle():
    probs = np.array(
        [
            [0.6, 0.4],
            [0.05, 0.95],
            [0.9, 0.1],
            [0.45, 0.55],
            [0.8, 0.2],
            [0.3, 0.7],
        ]
    )
    indices, labels, per_class = sico.select(
        probs, criterion="top_m", m_initial=2, m_subsequent=2
    )
    assert list(indices) == [1, 2, 4, 5]
    assert list(labels) == [1, 0, 0, 1]
    assert list(per_class) == [2, 2]


def test_entropy_values():
    per_row, mean = sico.entropy_of(np.array([[0.5, 0.5]]))
    assert mean == pytest.approx(math.log(2.0), abs=1e-12)


def test_paired_t_test():
    t, critical, significant = sico.paired_t_one_tailed(
        [11, 12, 13, 14, 15], [10, 10, 10, 10, 10]
    )
    assert t == pytest.approx(4.2426, abs=1e-4)
    assert critical == pytest.approx(2.132, abs=1e-3)
    assert significant


def test_adaptation_improves_on_shifted_gaussians():
    source, target = sico.synth_shifted_gaussians(
        n_per_class=150, shift_x=1.5, shift_y=1.5, rotation=0.9, seed=7
    )
    src_train, src_test = sico.split(source, 0.25, seed=1)
    tgt_train, tgt_test = sico.split(target, 0.25, seed=2)

    spec = sico.preset_network("gauss-shift")
    h_src = sico.train_source(spec, src_train, budget=250, seed=3, batch_size=32)
    assert sico.accuracy_on(h_src, src_test) > 0.9

    h_tg, state = sico.sico_adapt(
        h_src,
        tgt_train,
        m_initial=30,
        m_subsequent=15,
        stage_epochs=12,
        batch_size=32,
        seed=4,
        evaluate=True,
        test_set=tgt_test,
    )
    src_acc = sico.accuracy_on(h_src, tgt_test)
    tgt_acc = sico.accuracy_on(h_tg, tgt_test)
    assert tgt_acc > src_acc

    history = state.history
    assert history[0].coverage == 0
    coverages = [rec.coverage for rec in history]
    assert coverages == sorted(coverages)
    assert state.stages_completed >= 1


def test_adaptation_is_deterministic(tmp_path):
    source, target = sico.synth_shifted_gaussians(
        n_per_class=60, shift_x=1.0, rotation=0.5, seed=11
    )
    spec = sico.preset_network("gauss-shift")
    h_src = sico.train_source(spec, source, budget=100, seed=5, batch_size=32)

    runs = []
    for _ in range(2):
        h_tg, _ = sico.sico_adapt(
            h_src, target, m_initial=20, m_subsequent=10, stage_epochs=5, seed=9
        )
        runs.append(sico.checkpoint_string(h_tg))
    assert runs[0] == runs[1]

    path = tmp_path / "h_tg.ckpt"
    sico.save_checkpoint(h_tg, str(path))
    loaded = sico.load_checkpoint(str(path))
    assert sico.checkpoint_string(loaded) == runs[1]


def test_delta_identity():
    source, _ = sico.synth_shifted_gaussians(n_per_class=40, seed=21)
    spec = sico.preset_network("gauss-shift")
    params = sico.init_network(spec, 13)

    features = source.features
    truth = list(source.labels)
    flipped = [1 - y for y in truth[:10]] + truth[10:]
    pseudo = np.zeros((len(flipped), 2))
    pseudo[np.arange(len(flipped)), flipped] = 1.0

    d, d_norm, mismatches = sico.delta(params, features, pseudo, truth)
    assert mismatches == 10
    probs = sico.predict_proba(params, features)
    l_true = -np.mean(np.log(probs[np.arange(len(truth)), truth]))
    l_hat = -np.mean(np.log(probs[np.arange(len(flipped)), flipped]))
    assert l_true - l_hat == pytest.approx(d_norm, abs=1e-9)


def test_preprocessing_round_trip(tmp_path):
    windows = sico.synth_apnea_like(n_windows=20, seed=3)
    std = sico.standardize_per_signal(windows)
    again = sico.standardize_per_signal(std)
    assert np.allclose(std.features, again.features, atol=1e-9)

    slow = sico.downsample_to_1hz(make_set(np.ones((3, 100)), [0, 1, 0]), 50)
    assert slow.length == 2
    assert np.allclose(slow.features, 1.0)

    path = tmp_path / "windows.csv"
    sico.save_signal_csv(windows, str(path))
    loaded = sico.load_signal_csv(str(path))
    assert np.array_equal(loaded.features, windows.features)
    assert list(loaded.labels) == list(windows.labels)


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(4, 16)).astype(np.float64)
    images = make_set(pixels, [0, 1, 0, 1], class_count=2)
    img = tmp_path / "images-idx3"
    lab = tmp_path / "labels-idx1"
    sico.save_idx(images, str(img), str(lab))
    loaded = sico.load_idx(str(img), str(lab))
    assert np.array_equal(loaded.features, pixels)
    with pytest.raises(sico.FormatError):
        sico.load_idx(str(lab), str(lab))
