"""Command-line entry points: train / evaluate / enhance / ablate.

Every run writes into a run directory containing the merged config echo
(config.yaml), a JSONL training log, checkpoints/, and reports/.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config, save_config
from .data import discover_pairs, load_image, save_image
from .errors import MirrorlightError
from .losses import CONFIG_TAGS
from .metrics import evaluate_pairs, load_lpips, report_text, write_report
from .training import enhance, init_state, load_checkpoint, train

log = logging.getLogger(__name__)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="YAML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="shortcut for train.seed")
    p.add_argument("--out", type=Path, default=None,
                   help="run directory (default: output.dir from the config)")


def _resolve_config(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"train.seed={args.seed}")
    return load_config(args.config, overrides)


def _run_dir(args, cfg: RunConfig) -> Path:
    run_dir = args.out if args.out is not None else Path(cfg.output.dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def cmd_train(args) -> int:
    if args.checkpoint is not None:
        state = load_checkpoint(args.checkpoint)
        cfg = state.config
    else:
        cfg = _resolve_config(args)
        state = init_state(cfg)
    run_dir = _run_dir(args, cfg)
    save_config(cfg, run_dir / "config.yaml")

    records = discover_pairs(cfg.data.root, cfg.data.train_split)
    val_records = None
    if cfg.train.val_every:
        val_records = discover_pairs(cfg.data.root, cfg.data.val_split)
    log.info("training on %d pairs -> %s", len(records), run_dir)
    train(state, records, run_dir, max_steps=args.max_steps,
          val_records=val_records)
    print(f"done: step {state.global_step}, epoch {state.epoch}; "
          f"checkpoints in {run_dir / 'checkpoints'}")
    return 0


def cmd_evaluate(args) -> int:
    state = load_checkpoint(args.checkpoint)
    cfg = state.config
    for assignment in args.overrides:
        # allow eval-time tweaks like --set data.root=... without retraining
        from .config import _apply_override
        _apply_override(cfg, assignment)
    split = args.split or cfg.eval.split
    records = discover_pairs(cfg.data.root, split)
    lpips_path = args.lpips_model or cfg.eval.lpips_model
    lpips_model = load_lpips(lpips_path)

    report = evaluate_pairs(
        lambda low: enhance(state, low), records, load_image,
        split=split, lpips_model=lpips_model,
    )
    out_dir = args.out if args.out is not None else Path(cfg.output.dir) / "reports"
    paths = write_report(report, out_dir)
    print(report_text(report), end="")
    print(f"reports written to {paths['json'].parent}")
    return 0


def cmd_enhance(args) -> int:
    state = load_checkpoint(args.checkpoint)
    low = load_image(args.input)
    pred = enhance(state, low)
    save_image(args.output, pred)
    print(f"wrote {args.output}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _run_dir(args, cfg)
    save_config(cfg, run_dir / "config.yaml")
    records = discover_pairs(cfg.data.root, cfg.data.train_split)

    rows = []
    for tag in CONFIG_TAGS:
        tag_cfg = load_config(args.config, list(args.overrides) + [
            f"loss.config_tag={tag}",
            f"train.seed={cfg.train.seed}",
        ])
        state = init_state(tag_cfg)
        tag_dir = run_dir / tag
        tag_dir.mkdir(parents=True, exist_ok=True)
        save_config(tag_cfg, tag_dir / "config.yaml")
        train(state, records, tag_dir, max_steps=args.steps)
        report = evaluate_pairs(
            lambda low: enhance(state, low), records, load_image,
            split=tag_cfg.data.train_split,
        )
        rows.append({
            "config_tag": tag,
            "steps": state.global_step,
            "train_psnr": report.mean_psnr,
            "train_ssim": report.mean_ssim,
        })
        log.info("ablation %s: psnr=%.3f ssim=%.4f", tag,
                 report.mean_psnr, report.mean_ssim)

    csv_path = run_dir / "ablation.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    print(f"{'config':<16}{'steps':>8}{'psnr':>10}{'ssim':>10}")
    for r in rows:
        print(f"{r['config_tag']:<16}{r['steps']:>8}"
              f"{r['train_psnr']:>10.3f}{r['train_ssim']:>10.4f}")
    print(f"table written to {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorlight",
        description="Low-light enhancement with a mirror-distilled autoencoder",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    _add_config_flags(p_train)
    p_train.add_argument("--checkpoint", type=Path, default=None,
                         help="resume from this checkpoint")
    p_train.add_argument("--max-steps", type=int, default=None,
                         help="stop after this many optimizer steps")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a checkpoint on a split")
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--split", type=str, default=None)
    p_eval.add_argument("--lpips-model", type=Path, default=None,
                        help="TorchScript LPIPS model; omit to skip LPIPS")
    p_eval.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE")
    p_eval.add_argument("--out", type=Path, default=None)
    p_eval.set_defaults(fn=cmd_evaluate)

    p_enh = sub.add_parser("enhance", help="enhance one image")
    p_enh.add_argument("--checkpoint", type=Path, required=True)
    p_enh.add_argument("--input", type=Path, required=True)
    p_enh.add_argument("--output", type=Path, required=True)
    p_enh.set_defaults(fn=cmd_enhance)

    p_abl = sub.add_parser("ablate", help="train every loss configuration")
    _add_config_flags(p_abl)
    p_abl.add_argument("--steps", type=int, required=True,
                       help="optimizer steps per configuration")
    p_abl.set_defaults(fn=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except MirrorlightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
