from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cli.main import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from dataset.features import load_features
from storage.model_store import load_linear_model, load_model, read_model_file

FAST = ["--blocks", "2", "--batch-size", "16", "--node-size", "20"]


def _train_args(files, out, *extra):
    return [
        "train",
        "--source", files["source"],
        "--target-labeled", files["target_labeled"],
        "--target-unlabeled", files["target_unlabeled"],
        "--out", str(out),
        *extra,
    ]


def test_bootstrap_then_train_then_predict(test_dir, bundle_files):
    root = Path(test_dir)
    init = root / "init.json"
    assert main(["bootstrap-init", "--source", bundle_files["source"],
                 "--target-labeled", bundle_files["target_labeled"], "--out", str(init)]) == EXIT_OK
    assert read_model_file(init).blocks == []

    model_path = root / "model.json"
    code = main(_train_args(bundle_files, model_path, "--init-model", str(init), "--test", bundle_files["test"], *FAST))
    assert code == EXIT_OK
    assert len(load_model(model_path).blocks) == 4

    log = pd.read_csv(root / "model_log.csv")
    assert log["block_index"].tolist() == [1, 2, 3, 4]
    assert log["test_accuracy"].notna().all()

    preds = root / "preds.csv"
    assert main(["predict", "--model", str(model_path), "--features", bundle_files["test"], "--out", str(preds)]) == EXIT_OK
    frame = pd.read_csv(preds)
    assert list(frame.columns) == ["row", "predicted", "score_0", "score_1", "score_2"]
    assert len(frame) == len(pd.read_csv(bundle_files["test"]))


def test_same_flags_give_byte_identical_models(test_dir, bundle_files):
    root = Path(test_dir)
    for name in ("a.json", "b.json"):
        assert main(_train_args(bundle_files, root / name, "--bootstrap-init", "--seed", "5", *FAST)) == EXIT_OK
    assert (root / "a.json").read_bytes() == (root / "b.json").read_bytes()


def test_zero_blocks_predicts_like_the_initial_model(test_dir, bundle_files):
    root = Path(test_dir)
    main(["bootstrap-init", "--source", bundle_files["source"],
          "--target-labeled", bundle_files["target_labeled"], "--out", str(root / "init.json")])
    assert main(_train_args(bundle_files, root / "k0.json", "--init-model", str(root / "init.json"),
                            "--blocks", "0")) == EXIT_OK
    main(["predict", "--model", str(root / "k0.json"), "--features", bundle_files["test"], "--out", str(root / "a.csv")])
    main(["predict", "--model", str(root / "init.json"), "--features", bundle_files["test"], "--out", str(root / "b.csv")])
    assert pd.read_csv(root / "a.csv")["predicted"].tolist() == pd.read_csv(root / "b.csv")["predicted"].tolist()


def test_empty_feature_file_gives_empty_predictions(test_dir, source_only_model):
    from storage.model_store import save_model

    root = Path(test_dir)
    save_model(root / "m.json", source_only_model)
    (root / "empty.csv").write_text(",".join(f"f{i}" for i in range(6)) + "\n", encoding="utf-8")
    assert main(["predict", "--model", str(root / "m.json"), "--features", str(root / "empty.csv"),
                 "--out", str(root / "p.csv")]) == EXIT_OK
    assert len(pd.read_csv(root / "p.csv")) == 0


def test_synth_source_writes_balanced_labeled_csv(test_dir, bundle_files, source_only_model):
    from storage.model_store import save_model

    root = Path(test_dir)
    save_model(root / "theta.json", source_only_model)
    out = root / "virtual.csv"
    assert main(["synth-source", "--linear-layer", str(root / "theta.json"),
                 "--target-features", bundle_files["target_unlabeled"], "--per-class", "10", "--out", str(out)]) == EXIT_OK
    features, labels = load_features(out, has_labels=True)
    assert features.shape == (30, 6)
    np.testing.assert_array_equal(labels.sum(axis=0), [10, 10, 10])

    # the virtual source stands in for the real one during training
    files = dict(bundle_files, source=str(out))
    assert main(_train_args(files, root / "sf.json", "--init-model", str(root / "theta.json"), *FAST)) == EXIT_OK


def test_usage_errors_exit_1(test_dir, bundle_files):
    assert main([]) == EXIT_USAGE
    assert main(["train", "--source", bundle_files["source"]]) == EXIT_USAGE
    assert main(_train_args(bundle_files, Path(test_dir) / "m.json", "--bootstrap-init", "--batch-size", "0")) == EXIT_USAGE
    assert main(["bench", "--scenario", "nope", "--out", str(Path(test_dir) / "b.csv")]) == EXIT_USAGE
    assert main(_train_args(bundle_files, Path(test_dir) / "m.json", "--bootstrap-init",
                            "--config", str(Path(test_dir) / "missing.json"))) == EXIT_USAGE


def test_data_errors_exit_2(test_dir, bundle_files):
    root = Path(test_dir)
    wrong = root / "wrong.csv"
    wrong.write_text("f0,f1\n1,2\n", encoding="utf-8")
    main(["bootstrap-init", "--source", bundle_files["source"],
          "--target-labeled", bundle_files["target_labeled"], "--out", str(root / "init.json")])
    assert main(["predict", "--model", str(root / "init.json"), "--features", str(wrong),
                 "--out", str(root / "p.csv")]) == EXIT_DATA
    assert main(["predict", "--model", str(root / "missing.json"), "--features", bundle_files["test"],
                 "--out", str(root / "p.csv")]) == EXIT_DATA
    files = dict(bundle_files, target_unlabeled=str(wrong))
    assert main(_train_args(files, root / "m.json", "--bootstrap-init", *FAST)) == EXIT_DATA


def test_undecodable_files_exit_2(test_dir, bundle_files):
    root = Path(test_dir)
    binary = root / "binary.csv"
    binary.write_bytes(b"\xff\xfe\x00garbage\n")
    assert main(["predict", "--model", str(binary), "--features", bundle_files["test"],
                 "--out", str(root / "p.csv")]) == EXIT_DATA
    main(["bootstrap-init", "--source", bundle_files["source"],
          "--target-labeled", bundle_files["target_labeled"], "--out", str(root / "init.json")])
    assert main(["predict", "--model", str(root / "init.json"), "--features", str(binary),
                 "--out", str(root / "p.csv")]) == EXIT_DATA


def test_bootstrap_width_mismatch_exits_2(test_dir, bundle_files):
    root = Path(test_dir)
    narrow = root / "narrow.csv"
    narrow.write_text("f0,f1,label\n1,2,0\n3,4,1\n5,6,2\n", encoding="utf-8")
    assert main(["bootstrap-init", "--source", bundle_files["source"], "--target-labeled", str(narrow),
                 "--out", str(root / "init.json")]) == EXIT_DATA
    assert not (root / "init.json").exists()


def test_config_file_and_log_dir(test_dir, bundle_files):
    from settings.config_model import ProjectConfig, TrainConfig
    from settings.manager import SettingsManager

    root = Path(test_dir)
    config = root / "trboost.json"
    SettingsManager(str(config)).save_settings(ProjectConfig(train=TrainConfig(blocks=1, batch_size=8, node_size=10)))
    code = main(_train_args(bundle_files, root / "m.json", "--bootstrap-init",
                            "--config", str(config), "--log-dir", str(root / "logs")))
    assert code == EXIT_OK
    assert len(load_model(root / "m.json").blocks) == 2
    telemetry = (root / "logs" / "telemetry.log").read_text(encoding="utf-8")
    assert "command_started" in telemetry and "train_finished" in telemetry

    # flags beat file values
    main(_train_args(bundle_files, root / "m3.json", "--bootstrap-init", "--config", str(config), "--blocks", "3"))
    assert len(load_model(root / "m3.json").blocks) == 6


def test_bootstrap_separable_two_class_data(test_dir):
    from dataset.features import save_features
    from dataset.bundle import one_hot

    rng = np.random.default_rng(0)
    labels = np.repeat([0, 1], 15)
    x = rng.normal(scale=0.2, size=(30, 3)) + np.where(labels[:, None] == 1, 2.0, -2.0)
    root = Path(test_dir)
    save_features(root / "s.csv", x[:24], one_hot(labels[:24], 2))
    save_features(root / "t.csv", x[[0, 1, 28, 29]], one_hot(labels[[0, 1, 28, 29]], 2))
    assert main(["bootstrap-init", "--source", str(root / "s.csv"), "--target-labeled", str(root / "t.csv"),
                 "--out", str(root / "init.json")]) == EXIT_OK
    model = load_linear_model(root / "init.json")
    assert np.all((x @ model.weights.T + model.bias).argmax(axis=1) == labels)
