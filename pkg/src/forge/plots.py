"""Matplotlib figures for suite reports (Agg backend, files only)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from forge.bounds import (  # noqa: E402
    chen_roughgarden_reference,
    chen_roughgarden_threshold,
    curve,
    fairshare_curve,
)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def tradeoff_figure(rows: Sequence, family: str, d: int, path: Path) -> Path:
    """Claimed (alpha, beta) curve with the certified points of every instance."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ok = [r for r in rows if r.certified_alpha is not None]
    if family != "fairshare":
        c = curve(family, d=d)
        pts = np.array(c.sample(81))
        ax.plot(pts[:, 1], pts[:, 2], color="black", lw=1.5, label=f"claimed {c.family}")
    else:
        claims = sorted({(float(r.claimed_alpha), float(r.claimed_beta)) for r in ok})
        if claims:
            a, b = zip(*claims)
            ax.scatter(a, b, marker="x", color="black", s=12, label="claimed")
    if ok:
        ax.scatter(
            [float(r.certified_alpha) for r in ok],
            [float(r.certified_beta) for r in ok],
            s=8, alpha=0.4, c=[float(r.lam) for r in ok], cmap="viridis", label="certified",
        )
    ax.set_xlabel("alpha")
    ax.set_ylabel("beta")
    ax.set_title(f"{family}" + (f" d={d}" if family in ("poly", "mixed") else ""))
    ax.legend(fontsize=8)
    return _save(fig, path)


def fairshare_alpha_figure(path: Path, w_lo: float = 1.0, w_hi: float = 100.0, samples: int = 200) -> Path:
    """Fair-share alpha at lambda=1 against the earlier threshold log2(e(1+w_max))."""
    ws = np.linspace(w_lo, w_hi, samples)
    ours = [fairshare_curve(1, w, max(w, 1.0))[0] for w in ws]
    theirs = [chen_roughgarden_threshold(w) for w in ws]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(ws, ours, label="lambda = 1")
    ax.plot(ws, theirs, "--", label="log2(e(1+w_max))")
    ax.set_xlabel("w_max")
    ax.set_ylabel("alpha")
    ax.legend(fontsize=8)
    return _save(fig, path)


def fairshare_tradeoff_figure(path: Path, w_max: float = 3.0, W: float = 50.0, samples: int = 120) -> Path:
    """(alpha, beta) trade-off for fair sharing next to the earlier curve."""
    lams = np.linspace(1.0, 12.0, samples)
    ours = np.array([fairshare_curve(lam, w_max, W) for lam in lams])
    lo = 2 * chen_roughgarden_threshold(w_max)
    fs = np.linspace(lo, lo + 12.0, samples)
    prior = np.array([chen_roughgarden_reference(w_max, W, f) for f in fs])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(ours[:, 0], ours[:, 1], label="ours")
    ax.plot(prior[:, 0], prior[:, 1], "--", label="earlier bound")
    ax.set_xlabel("alpha")
    ax.set_ylabel("beta")
    ax.set_title(f"w_max={w_max:g}, W={W:g}, ln W={math.log(W):.2f}")
    ax.legend(fontsize=8)
    return _save(fig, path)


def suite_figures(rows: Sequence, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.family, r.d), []).append(r)
    for (family, d), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        name = f"tradeoff_{family}" + (f"_d{d}" if family in ("poly", "mixed") else "") + ".png"
        written.append(tradeoff_figure(rs, family, d, out / name))
    if "fairshare" in {f for f, _ in groups}:
        written.append(fairshare_alpha_figure(out / "fairshare_alpha.png"))
        written.append(fairshare_tradeoff_figure(out / "fairshare_tradeoff.png"))
    return written
