"""Training loop determinism, validation purity and edge cases."""

import numpy as np
import pytest

import pilectl as pc
from pilectl.checkpoint import save_checkpoint
from pilectl.dataset import Dataset


def small_config(**kw):
    base = dict(epochs=3, batch_size=256, lr=1e-3, seed=4)
    base.update(kw)
    return pc.TrainConfig(**base)


class TestTrainConfigDefaults:
    def test_match_the_recipe(self):
        config = pc.TrainConfig()
        assert config.epochs == 150
        assert config.batch_size == 512
        assert config.lr == 0.001
        assert config.dropout_p == 0.35
        assert config.shuffle is True


class TestTrain:
    def test_returns_curve_per_epoch(self, d1):
        _, curve = pc.train(pc.ControllerSpec("nnet", 4), d1, small_config())
        assert len(curve.train) == 3
        assert curve.val == []

    def test_val_curve_recorded(self, d1, d2):
        _, curve = pc.train(pc.ControllerSpec("nnet", 4), d1,
                            small_config(epochs=2), val_dataset=d2)
        assert len(curve.val) == 2

    def test_bit_identical_under_seed(self, tmp_path, d1):
        spec = pc.ControllerSpec("annet", 4, 4)
        for name in ("a", "b"):
            params, _ = pc.train(spec, d1, small_config(epochs=2))
            save_checkpoint(params, tmp_path / f"{name}.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_seed_changes_result(self, d1):
        spec = pc.ControllerSpec("nnet", 4)
        a, _ = pc.train(spec, d1, small_config(seed=1))
        b, _ = pc.train(spec, d1, small_config(seed=2))
        assert not np.array_equal(a.theta["w1"].value, b.theta["w1"].value)

    def test_zero_lr_leaves_initialization(self, d1):
        spec = pc.ControllerSpec("nnet", 4)
        config = small_config(lr=0.0, dropout_p=0.0, shuffle=False)
        params, curve = pc.train(spec, d1, config)
        init_rng = np.random.default_rng(config.seed).spawn(3)[0]
        reference = pc.build_controller(spec, init_rng)
        for (_, a), (_, b) in zip(params.all_tensors(), reference.all_tensors()):
            assert np.array_equal(a.value, b.value)
        assert len(set(curve.train)) == 1  # flat loss curve

    def test_loss_decreases(self, d1):
        _, curve = pc.train(pc.ControllerSpec("nnetv2", 4), d1,
                            small_config(epochs=8, dropout_p=0.0))
        assert curve.train[-1] < curve.train[0]

    def test_batch_clipped_to_dataset(self):
        rng = np.random.default_rng(0)
        tiny = Dataset(obs=rng.normal(size=(10, 7)),
                       u=np.clip(rng.normal(size=(10, 3)), -1, 1),
                       demo_ids=["a"], demo_index=np.zeros(10, dtype=np.int64))
        _, curve = pc.train(pc.ControllerSpec("nnet", 4), tiny,
                            small_config(batch_size=512, epochs=2))
        assert len(curve.train) == 2

    def test_norm_stats_copied_into_params(self, d1):
        params, _ = pc.train(pc.ControllerSpec("nnet", 4), d1,
                             small_config(epochs=1))
        assert np.array_equal(params.norm_mean, d1.mean)
        assert np.array_equal(params.norm_std, d1.std)

    def test_wrong_observation_width_rejected(self):
        bad = Dataset(obs=np.zeros((10, 4)), u=np.zeros((10, 3)),
                      demo_ids=["a"], demo_index=np.zeros(10, dtype=np.int64))
        with pytest.raises(ValueError, match="7-channel"):
            pc.train(pc.ControllerSpec("nnet", 4), bad, small_config())

    def test_empty_dataset_rejected(self):
        empty = Dataset(obs=np.zeros((0, 7)), u=np.zeros((0, 3)),
                        demo_ids=[], demo_index=np.zeros(0, dtype=np.int64))
        with pytest.raises(ValueError, match="empty"):
            pc.train(pc.ControllerSpec("nnet", 4), empty, small_config())


class TestValidate:
    def test_matches_train_loss_when_overfit(self, trained_nnet, d1):
        # eval-mode MSE on the training set is just the deterministic forward
        v1 = pc.validate(trained_nnet, d1)
        v2 = pc.validate(trained_nnet, d1)
        assert v1 == v2

    def test_does_not_mutate_params(self, tmp_path, trained_dannet, d1):
        save_checkpoint(trained_dannet, tmp_path / "before.ckpt")
        pc.validate(trained_dannet, d1)
        save_checkpoint(trained_dannet, tmp_path / "after.ckpt")
        assert ((tmp_path / "before.ckpt").read_bytes()
                == (tmp_path / "after.ckpt").read_bytes())

    def test_perfect_prediction_is_zero(self, trained_nnet, d1):
        u_pred, _, _ = pc.predict(trained_nnet, d1.obs)
        perfect = Dataset(obs=d1.obs, u=u_pred, demo_ids=d1.demo_ids,
                          demo_index=d1.demo_index, mean=d1.mean, std=d1.std)
        assert pc.validate(trained_nnet, perfect) == 0.0

    def test_empty_rejected(self, trained_nnet):
        empty = Dataset(obs=np.zeros((0, 7)), u=np.zeros((0, 3)),
                        demo_ids=[], demo_index=np.zeros(0, dtype=np.int64))
        with pytest.raises(ValueError):
            pc.validate(trained_nnet, empty)
