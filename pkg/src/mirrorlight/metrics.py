"""Evaluation metrics and report writing.

PSNR and SSIM are computed in double precision on values clamped to
[0, 1]; SSIM goes through the same windowed implementation the training
loss uses, so the number you optimise is the number you report. LPIPS is
optional: it is loaded as a TorchScript module from a user-supplied path
and simply omitted from reports when no model is available.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import torch
from torch import Tensor

from .errors import ModelUnavailable, ShapeMismatch
from .losses import SsimParams, ssim_index

PSNR_CAP_DB = 100.0


def _prep(pred: Tensor, target: Tensor) -> tuple[Tensor, Tensor]:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {tuple(pred.shape)} vs target {tuple(target.shape)}")
    return pred.double().clamp(0.0, 1.0), target.double().clamp(0.0, 1.0)


def psnr_from_mse(mse: float, data_range: float = 1.0) -> float:
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(data_range ** 2 / mse))


def psnr(pred: Tensor, target: Tensor, data_range: float = 1.0) -> float:
    pred, target = _prep(pred, target)
    mse = torch.mean((pred - target) ** 2).item()
    return psnr_from_mse(mse, data_range)


def ssim_metric(pred: Tensor, target: Tensor, params: SsimParams | None = None) -> float:
    pred, target = _prep(pred, target)
    return ssim_index(pred, target, params or SsimParams()).item()


def load_lpips(path: str | Path | None) -> torch.jit.ScriptModule | None:
    """Load an LPIPS TorchScript module, or None when no path is given.

    The module must accept two (B,3,H,W) tensors in [0,1] and return a
    per-image or scalar distance.
    """
    if path is None:
        return None
    path = Path(path)
    if not path.is_file():
        raise ModelUnavailable(f"LPIPS model file not found: {path}")
    try:
        module = torch.jit.load(str(path), map_location="cpu")
    except Exception as exc:
        raise ModelUnavailable(f"cannot load LPIPS model {path}: {exc}") from exc
    module.eval()
    return module


def lpips_metric(module: torch.jit.ScriptModule, pred: Tensor, target: Tensor) -> float:
    pred, target = _prep(pred, target)
    with torch.no_grad():
        out = module(pred.float(), target.float())
    return float(out.mean().item() if isinstance(out, Tensor) else out)


@dataclass
class PairMetrics:
    pair_id: str
    psnr: float
    ssim: float
    lpips: float | None = None


@dataclass
class MetricsReport:
    split: str
    count: int
    mean_psnr: float
    mean_ssim: float
    mean_lpips: float | None
    pairs: list[PairMetrics] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "split": self.split,
            "count": self.count,
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "pairs": [],
        }
        if self.mean_lpips is not None:
            d["mean_lpips"] = self.mean_lpips
        for p in self.pairs:
            row = {"pair_id": p.pair_id, "psnr": p.psnr, "ssim": p.ssim}
            if p.lpips is not None:
                row["lpips"] = p.lpips
            d["pairs"].append(row)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        pairs = [
            PairMetrics(pair_id=r["pair_id"], psnr=r["psnr"], ssim=r["ssim"],
                        lpips=r.get("lpips"))
            for r in d["pairs"]
        ]
        return cls(split=d["split"], count=d["count"], mean_psnr=d["mean_psnr"],
                   mean_ssim=d["mean_ssim"], mean_lpips=d.get("mean_lpips"),
                   pairs=pairs)


def evaluate_pairs(
    enhance_fn: Callable[[Tensor], Tensor],
    records,
    load_fn: Callable[[Path], Tensor],
    split: str = "val",
    lpips_model: torch.jit.ScriptModule | None = None,
) -> MetricsReport:
    """Enhance every pair's low-light image and score it against the clean one."""
    rows = []
    for rec in records:
        low = load_fn(rec.low_path)
        clean = load_fn(rec.clean_path)
        pred = enhance_fn(low)
        row = PairMetrics(
            pair_id=rec.pair_id,
            psnr=psnr(pred, clean),
            ssim=ssim_metric(pred, clean),
        )
        if lpips_model is not None:
            row.lpips = lpips_metric(lpips_model, pred, clean)
        rows.append(row)

    n = len(rows)
    has_lpips = lpips_model is not None
    return MetricsReport(
        split=split,
        count=n,
        mean_psnr=sum(r.psnr for r in rows) / n,
        mean_ssim=sum(r.ssim for r in rows) / n,
        mean_lpips=(sum(r.lpips for r in rows) / n) if has_lpips else None,
        pairs=rows,
    )


def report_json(report: MetricsReport) -> str:
    return json.dumps(report.to_dict(), indent=2)


def report_text(report: MetricsReport) -> str:
    has_lpips = report.mean_lpips is not None
    headers = ["pair", "psnr", "ssim"] + (["lpips"] if has_lpips else [])
    rows = []
    for p in report.pairs:
        row = [p.pair_id, f"{p.psnr:.4f}", f"{p.ssim:.4f}"]
        if has_lpips:
            row.append(f"{p.lpips:.4f}")
        rows.append(row)
    mean_row = ["mean", f"{report.mean_psnr:.4f}", f"{report.mean_ssim:.4f}"]
    if has_lpips:
        mean_row.append(f"{report.mean_lpips:.4f}")

    widths = [max(len(h), *(len(r[i]) for r in rows + [mean_row]))
              for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(
            cell.ljust(w) if i == 0 else cell.rjust(w)
            for i, (cell, w) in enumerate(zip(row, widths))
        )

    lines = [f"split: {report.split}  ({report.count} pairs)", fmt(headers)]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(r) for r in rows)
    lines.append("  ".join("-" * w for w in widths))
    lines.append(fmt(mean_row))
    return "\n".join(lines) + "\n"


def report_csv(report: MetricsReport) -> str:
    has_lpips = report.mean_lpips is not None
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["pair_id", "psnr", "ssim"] + (["lpips"] if has_lpips else [])
    writer.writerow(header)
    for p in report.pairs:
        row = [p.pair_id, repr(p.psnr), repr(p.ssim)]
        if has_lpips:
            row.append(repr(p.lpips))
        writer.writerow(row)
    return buf.getvalue()


def write_report(report: MetricsReport, out_dir: str | Path, basename: str = "metrics") -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out_dir / f"{basename}.json",
        "txt": out_dir / f"{basename}.txt",
        "csv": out_dir / f"{basename}.csv",
    }
    paths["json"].write_text(report_json(report))
    paths["txt"].write_text(report_text(report))
    paths["csv"].write_text(report_csv(report))
    return paths
