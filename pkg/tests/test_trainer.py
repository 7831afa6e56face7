import dataclasses

import numpy as np
import pytest
import torch
import torch.nn as nn

from ynet_dehaze.image_core import EmptyDatasetError, ImagePair
from ynet_dehaze.model import YNetConfig, build, save_checkpoint
from ynet_dehaze.trainer import (
    ConfigMismatchError, NonFiniteLossError, TrainConfig, Trainer, batch_indices, loss_step,
    read_config_file, resume, train, write_config_file,
)
from ynet_dehaze.wssim import weight_schedule


def tiny_config(**kw):
    base = dict(batch_size=2, iterations=10, image_size=32, dwt_levels=1, seed=11,
                model=YNetConfig(num_scales=3, encoder_channels=[4, 8, 8], decoder_channels=[8, 4]))
    base.update(kw)
    return TrainConfig(**base)


def make_pairs(n, size=32, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        clear = rng.random((3, size, size))
        pairs.append(ImagePair(0.5 * clear + 0.4, clear, f"p{i}"))
    return pairs


def test_accounting_five_steps():
    cfg = tiny_config(batch_size=1, iterations=5)
    _, log = train(cfg, make_pairs(2))
    assert [r[0] for r in log.records] == [1, 2, 3, 4, 5]
    assert all(np.isfinite(log.losses))


def test_batches_cover_each_epoch():
    n, bs = 7, 3
    seen = [i for it in range(1, 8) for i in batch_indices(5, n, bs, it)]
    for e in range(3):
        assert sorted(seen[e * n:(e + 1) * n]) == list(range(n))
    assert batch_indices(5, n, bs, 4) == batch_indices(5, n, bs, 4)


def test_determinism_bit_exact():
    pairs = make_pairs(6)
    _, a = train(tiny_config(), pairs)
    _, b = train(tiny_config(), pairs)
    assert a.losses == b.losses
    _, c = train(tiny_config(seed=12), pairs)
    assert c.losses != a.losses


def test_resume_equals_straight_run(tmp_path):
    pairs = make_pairs(6)
    ckpt_full, full = train(tiny_config(iterations=10), pairs, out_dir=tmp_path / "full")
    ckpt5, _ = train(tiny_config(iterations=5), pairs, out_dir=tmp_path / "half")
    ckpt10, resumed = resume(ckpt5, tiny_config(iterations=10), pairs, out_dir=tmp_path / "half")
    assert resumed.losses == full.losses
    a = torch.load(ckpt_full, weights_only=False)["params"]
    b = torch.load(ckpt10, weights_only=False)["params"]
    assert all(torch.equal(a[k], b[k]) for k in a)


def test_resume_rejects_config_change(tmp_path):
    pairs = make_pairs(4)
    ckpt, _ = train(tiny_config(iterations=2), pairs, out_dir=tmp_path)
    with pytest.raises(ConfigMismatchError, match="learning_rate"):
        resume(ckpt, tiny_config(iterations=4, learning_rate=1e-3), pairs)
    _, log = resume(ckpt, tiny_config(iterations=4, learning_rate=1e-3), pairs,
                    allow_config_change=True)
    assert len(log.records) == 4


def test_resume_without_optimizer_state(tmp_path):
    cfg = tiny_config()
    save_checkpoint(tmp_path / "bare.bin", build(cfg.model))
    with pytest.raises(ValueError, match="optimizer"):
        resume(tmp_path / "bare.bin", cfg, make_pairs(2))


def test_outputs_written(tmp_path):
    cfg = tiny_config(iterations=4, checkpoint_every=2, eval_every=2)
    ckpt, log = train(cfg, make_pairs(4), make_pairs(2, seed=1), out_dir=tmp_path)
    assert ckpt == tmp_path / "ckpt_4.bin"
    assert (tmp_path / "ckpt_2.bin").exists()
    rows = (tmp_path / "train_log.tsv").read_text().splitlines()
    assert rows[0] == "iteration\tloss\tseconds" and len(rows) == 5
    val = (tmp_path / "val_log.tsv").read_text().splitlines()
    assert val[0] == "iteration\tpsnr\tssim" and [r.split("\t")[0] for r in val[1:]] == ["2", "4"]


def test_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        train(tiny_config(), [])


def test_nonfinite_loss_aborts_with_dump(tmp_path):
    pairs = make_pairs(3)
    pairs[1] = ImagePair(np.full((3, 32, 32), np.nan), pairs[1].clear, "bad")
    with pytest.raises(NonFiniteLossError, match="bad"):
        train(tiny_config(batch_size=3, iterations=2), pairs, out_dir=tmp_path)
    assert "bad" in (tmp_path / "nonfinite_batch.json").read_text()


class Scale(nn.Module):
    def __init__(self):
        super().__init__()
        self.s = nn.Parameter(torch.ones(()))

    def forward(self, x):
        return x * self.s


def test_loss_step_fixed_point():
    cfg = tiny_config(loss_variant="L2")
    model = Scale()
    opt = torch.optim.Adam(model.parameters(), lr=1e-4)
    x = torch.rand(2, 3, 32, 32)
    assert loss_step(model, opt, x, x, cfg) == pytest.approx(0.0, abs=1e-12)


def test_consecutive_steps_change_parameters():
    cfg = tiny_config()
    trainer = Trainer(cfg, make_pairs(4))
    before = {k: v.clone() for k, v in trainer.model.state_dict().items()}
    trainer.run(until=1)
    mid = {k: v.clone() for k, v in trainer.model.state_dict().items()}
    trainer.run(until=2)
    after = trainer.model.state_dict()
    for k in before:
        assert not torch.equal(before[k], mid[k]), k
        assert not torch.equal(mid[k], after[k]), k


@pytest.mark.parametrize("variant", ["L2", "SSIM", "WSSIM", "WSSIM_PLUS_L2"])
def test_every_variant_trains(variant):
    _, log = train(tiny_config(loss_variant=variant, iterations=2), make_pairs(2))
    assert len(log.records) == 2 and all(np.isfinite(log.losses))


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(image_size=34).validate()
    with pytest.raises(ValueError):
        tiny_config(learning_rate=0).validate()
    with pytest.raises(ValueError):
        tiny_config(loss_variant="L1").validate()
    with pytest.raises(ValueError):
        tiny_config(dwt_levels=2).validate()
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.batch_size, cfg.iterations, cfg.image_size, cfg.r, cfg.dwt_levels) == (
        1e-4, 32, 400, 480, 0.4, 3)
    assert cfg.validate().loss_variant == "WSSIM_PLUS_L2"


def test_literal_weights_flag():
    cfg = tiny_config(literal_alg1_weights=True, dwt_levels=1)
    assert cfg.schedule() == weight_schedule(0.4, 1, literal=True)


def test_config_file_round_trip(tmp_path):
    cfg = tiny_config(learning_rate=3e-4, loss_variant="SSIM", grad_clip=1.5)
    write_config_file(cfg, tmp_path / "c.cfg")
    back = read_config_file(tmp_path / "c.cfg")
    assert dataclasses.asdict(back) == dataclasses.asdict(cfg)
    (tmp_path / "bad.cfg").write_text("nonsense = 3\n")
    with pytest.raises(ValueError):
        read_config_file(tmp_path / "bad.cfg")
