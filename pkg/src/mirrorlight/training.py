"""Teacher-student training loop.

One encoder is shared by both paths. The student decoder learns by
gradient descent on the low-light -> clean task; the teacher decoder sees
encoder features of the *clean* image and is updated only as an EMA of
the student after each optimizer step. Both decoders start from the same
random initialisation.

Every source of randomness in the loop (shuffle order, crop positions,
flips) is drawn from generators seeded by (seed, epoch, batch), so an
interrupted run resumed from a checkpoint replays the exact same batches
and reproduces the loss trajectory bit-for-bit at float32.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import Tensor

from .config import RunConfig, config_from_dict, config_to_dict
from .data import PairRecord, discover_pairs, flip_augment, load_image, random_crop_pair
from .errors import CheckpointCorrupt, ConfigMismatch, NonFiniteLoss
from .losses import LossBreakdown, SsimParams, total_loss
from .luminance import weights_from_image
from .unet import BackboneConfig, Decoder, DecoderOutput, Encoder

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def derive_seed(*parts: int) -> int:
    """Mix integers into a stable 63-bit seed (fixed across runs/platforms)."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h ^= (p + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        h = (h * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 31
    return h & 0x7FFFFFFFFFFFFFFF


def make_generator(*parts: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(derive_seed(*parts))
    return g


@dataclass
class TrainState:
    encoder: Encoder
    student: Decoder
    teacher: Decoder
    optimizer: torch.optim.Adam
    config: RunConfig
    epoch: int = 0
    batch_in_epoch: int = 0
    global_step: int = 0


def backbone_config(cfg: RunConfig) -> BackboneConfig:
    m = cfg.model
    return BackboneConfig(
        depth=m.depth,
        base_channels=m.base_channels,
        cbam_reduction=m.cbam_reduction,
        cbam_spatial_kernel=m.cbam_spatial_kernel,
    )


def _trainable_params(encoder: Encoder, student: Decoder):
    return list(encoder.parameters()) + list(student.parameters())


def init_state(cfg: RunConfig) -> TrainState:
    """Build encoder + twin decoders and the optimizer from scratch."""
    torch.manual_seed(cfg.train.seed)
    arch = backbone_config(cfg)
    encoder = Encoder(arch)
    student = Decoder(arch)
    teacher = copy.deepcopy(student)  # identical starting weights
    teacher.requires_grad_(False)
    opt = torch.optim.Adam(
        _trainable_params(encoder, student),
        lr=cfg.train.lr,
        betas=(cfg.train.beta1, cfg.train.beta2),
    )
    return TrainState(encoder=encoder, student=student, teacher=teacher,
                      optimizer=opt, config=cfg)


@torch.no_grad()
def ema_update(teacher: torch.nn.Module, student: torch.nn.Module,
               momentum: float) -> None:
    for p_t, p_s in zip(teacher.parameters(), student.parameters()):
        p_t.data.mul_(momentum).add_((1.0 - momentum) * p_s.data)
    for b_t, b_s in zip(teacher.buffers(), student.buffers()):
        b_t.copy_(b_s)


def cosine_lr(base_lr: float, epoch: int, total_epochs: int) -> float:
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * epoch / total_epochs))


def set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def forward_teacher(state: TrainState, clean: Tensor) -> DecoderOutput:
    with torch.no_grad():
        enc = state.encoder(clean, grad_enabled=False)
        return state.teacher(enc)


def train_step(state: TrainState, low: Tensor, clean: Tensor) -> LossBreakdown:
    """One optimization step: forward both paths, backprop, step, then EMA."""
    cfg = state.config
    enc_s = state.encoder(low, grad_enabled=True)
    out_s = state.student(enc_s)
    out_t = forward_teacher(state, clean)
    weights = weights_from_image(low, beta=cfg.loss.iaml.beta)

    breakdown = total_loss(
        out_s.image, clean, out_s.pyramid, out_t.pyramid, weights,
        lambda_=cfg.loss.lambda_,
        config_tag=cfg.loss.config_tag,
        ssim_params=SsimParams(window_size=cfg.loss.ssim.window,
                               gaussian_sigma=cfg.loss.ssim.sigma),
        iaml_eps=cfg.loss.iaml.eps,
        iaml_levels=cfg.loss.iaml.levels,
    )
    if not torch.isfinite(breakdown.total):
        raise NonFiniteLoss(
            f"non-finite loss at step {state.global_step}: "
            f"{breakdown.scalars()}"
        )
    state.optimizer.zero_grad(set_to_none=True)
    breakdown.total.backward()
    state.optimizer.step()
    ema_update(state.teacher, state.student, cfg.train.ema_momentum)
    return breakdown


def load_batch(
    records: list[PairRecord],
    indices: list[int],
    crop_size: int,
    augment: bool,
    rng: torch.Generator,
) -> tuple[Tensor, Tensor, list[str]]:
    lows, cleans, ids = [], [], []
    for i in indices:
        rec = records[i]
        low = load_image(rec.low_path)
        clean = load_image(rec.clean_path)
        if crop_size:
            low, clean = random_crop_pair(low, clean, crop_size, rng)
        if augment:
            low, clean = flip_augment(low, clean, rng)
        lows.append(low)
        cleans.append(clean)
        ids.append(rec.pair_id)
    return torch.cat(lows, dim=0), torch.cat(cleans, dim=0), ids


def _epoch_batches(n: int, batch_size: int, perm: Tensor) -> list[list[int]]:
    order = perm.tolist()
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config_to_dict(state.config),
        "epoch": state.epoch,
        "batch_in_epoch": state.batch_in_epoch,
        "global_step": state.global_step,
        "encoder": state.encoder.state_dict(),
        "student": state.student.state_dict(),
        "teacher": state.teacher.state_dict(),
        "optimizer": state.optimizer.state_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


_REQUIRED_KEYS = {"version", "config", "epoch", "batch_in_epoch", "global_step",
                  "encoder", "student", "teacher", "optimizer"}


def load_checkpoint(path: str | Path, expect: RunConfig | None = None) -> TrainState:
    """Rebuild a TrainState (model, optimizer, counters) from a checkpoint."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointCorrupt(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or not _REQUIRED_KEYS <= payload.keys():
        missing = _REQUIRED_KEYS - set(payload) if isinstance(payload, dict) else "all"
        raise CheckpointCorrupt(f"checkpoint {path} missing fields: {missing}")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointCorrupt(
            f"checkpoint version {payload['version']} != {CHECKPOINT_VERSION}"
        )
    cfg = config_from_dict(payload["config"])
    if expect is not None and config_to_dict(expect)["model"] != config_to_dict(cfg)["model"]:
        raise ConfigMismatch(
            "checkpoint model config does not match the requested one: "
            f"{config_to_dict(cfg)['model']} vs {config_to_dict(expect)['model']}"
        )
    state = init_state(cfg)
    try:
        state.encoder.load_state_dict(payload["encoder"])
        state.student.load_state_dict(payload["student"])
        state.teacher.load_state_dict(payload["teacher"])
        state.optimizer.load_state_dict(payload["optimizer"])
    except (RuntimeError, KeyError, ValueError) as exc:
        raise CheckpointCorrupt(f"checkpoint {path} has incompatible weights: {exc}") from exc
    state.epoch = payload["epoch"]
    state.batch_in_epoch = payload["batch_in_epoch"]
    state.global_step = payload["global_step"]
    return state


def train(
    state: TrainState,
    records: list[PairRecord],
    run_dir: str | Path,
    max_steps: int | None = None,
    val_records: list[PairRecord] | None = None,
) -> TrainState:
    """Run (or continue) training, writing logs and checkpoints under run_dir.

    Stops after cfg.train.epochs epochs, or earlier once global_step reaches
    max_steps; a checkpoint is saved either way, so training can resume.
    """
    cfg = state.config
    t = cfg.train
    run_dir = Path(run_dir)
    ckpt_dir = run_dir / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    log_path = run_dir / "log.jsonl"
    n = len(records)

    def reached_limit() -> bool:
        return max_steps is not None and state.global_step >= max_steps

    with open(log_path, "a") as log_fh:
        while state.epoch < t.epochs and not reached_limit():
            epoch = state.epoch
            lr = cosine_lr(t.lr, epoch, t.epochs)
            set_lr(state.optimizer, lr)
            perm = torch.randperm(n, generator=make_generator(t.seed, epoch))
            batches = _epoch_batches(n, t.batch_size, perm)

            for batch_idx, indices in enumerate(batches):
                if batch_idx < state.batch_in_epoch:
                    continue  # already consumed before an interruption
                rng = make_generator(t.seed, epoch, batch_idx)
                low, clean, pair_ids = load_batch(
                    records, indices, t.crop_size, t.augment, rng
                )
                breakdown = train_step(state, low, clean)
                state.global_step += 1
                state.batch_in_epoch = batch_idx + 1
                record = {
                    "event": "train",
                    "step": state.global_step,
                    "epoch": epoch,
                    "batch": batch_idx,
                    "lr": lr,
                    "pair_ids": pair_ids,
                    "loss": breakdown.scalars(),
                }
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
                if reached_limit():
                    break

            if state.batch_in_epoch >= len(batches):
                state.epoch += 1
                state.batch_in_epoch = 0
                if val_records:
                    ve = t.val_every
                    if ve and state.epoch % ve == 0:
                        stats = _quick_eval(state, val_records)
                        stats.update(event="val", epoch=state.epoch,
                                     step=state.global_step)
                        log_fh.write(json.dumps(stats) + "\n")
                        log_fh.flush()
                if t.checkpoint_every and state.epoch % t.checkpoint_every == 0:
                    save_checkpoint(state, ckpt_dir / f"epoch_{state.epoch:04d}.pt")
            save_checkpoint(state, ckpt_dir / "latest.pt")

    return state


def _quick_eval(state: TrainState, records: list[PairRecord]) -> dict:
    # local import: metrics pulls in nothing from training, but keep the
    # core loop importable without the eval stack
    from .metrics import psnr, ssim_metric

    psnrs, ssims = [], []
    for rec in records:
        low = load_image(rec.low_path)
        clean = load_image(rec.clean_path)
        pred = enhance(state, low)
        psnrs.append(psnr(pred, clean))
        ssims.append(ssim_metric(pred, clean))
    return {"psnr": sum(psnrs) / len(psnrs), "ssim": sum(ssims) / len(ssims)}


@torch.no_grad()
def enhance(state: TrainState, low: Tensor) -> Tensor:
    """Run the student path on a full image, reflect-padding so the
    spatial dims survive `depth` halvings, then cropping back."""
    depth = state.config.model.depth
    multiple = 2 ** depth
    h, w = low.shape[-2], low.shape[-1]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h or pad_w:
        padded = torch.nn.functional.pad(low, (0, pad_w, 0, pad_h), mode="reflect")
    else:
        padded = low
    enc = state.encoder(padded, grad_enabled=False)
    out = state.student(enc)
    return out.image[..., :h, :w]
