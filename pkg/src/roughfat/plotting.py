"""Report figures written to image files (non-interactive Agg backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .roughsurf import Criterion, extract_correlation_length, kernel_acf  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_profile_acf(profile, acf, path, corr_length=None):
    """Profile z(x) and its ACF with the three correlation-length thresholds."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    ax1.plot(profile.x0, profile.z, lw=0.8)
    ax1.set_xlabel("x [um]")
    ax1.set_ylabel("z [um]")
    ax2.plot(acf.lags, acf.values, label="estimate")
    if corr_length is not None:
        ref = kernel_acf(acf.lags, corr_length)
        ax2.plot(ref.lags, ref.values, "k--", lw=0.8, label="target kernel")
    for crit, style in zip(Criterion, (":", "-.", "--")):
        ax2.axhline(crit.threshold, color="grey", ls=style, lw=0.7)
        try:
            tau = extract_correlation_length(acf, crit)
            ax2.plot([tau], [crit.threshold], "o", ms=4, label=f"{crit.name}: {tau:.3g} um")
        except ValueError:
            pass
    ax2.set_xlabel("lag [um]")
    ax2.set_ylabel("ACF")
    ax2.legend(fontsize=7)
    return _save(fig, path)


def plot_sn(groups, path, fits=None):
    """S-N scatter per group, with optional fitted Basquin lines.

    ``groups`` maps a label to a list of SNPoint; ``fits`` maps labels to BasquinFit.
    """
    fig, ax = plt.subplots(figsize=(5.5, 4))
    fits = fits or {}
    for label, pts in groups.items():
        n = [p.mean_nf for p in pts if not p.censored]
        s = [p.stress_amplitude for p in pts if not p.censored]
        line = ax.plot(n, s, "o", label=label)[0]
        cens = [p for p in pts if p.censored]
        if cens:
            ax.plot([p.mean_nf for p in cens], [p.stress_amplitude for p in cens], ">",
                    color=line.get_color(), mfc="none")
        if label in fits and n:
            nn = np.logspace(math.log10(min(n)) - 0.3, 6.0, 50)
            ax.plot(nn, fits[label].stress(nn), "-", color=line.get_color(), lw=0.8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("cycles to failure")
    ax.set_ylabel("stress amplitude [MPa]")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_ks_map(records, path, sigma_c=None):
    """Surface factor over the (Ra, lcor) grid, one panel for one strength."""
    recs = [r for r in records if sigma_c is None or math.isclose(r.sigma_c, sigma_c)]
    ras = sorted({r.ra for r in recs})
    lcs = sorted({r.corr_length for r in recs})
    grid = np.full((len(lcs), len(ras)), np.nan)
    for r in recs:
        grid[lcs.index(r.corr_length), ras.index(r.ra)] = r.ks
    fig, ax = plt.subplots(figsize=(5.5, 4))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis", vmin=min(0.5, np.nanmin(grid)),
                   vmax=1.0)
    ax.set_xticks(range(len(ras)), [f"{v:g}" for v in ras])
    ax.set_yticks(range(len(lcs)), [f"{v:g}" for v in lcs])
    ax.set_xlabel("Ra [um]")
    ax.set_ylabel("lcor [um]")
    for i in range(len(lcs)):
        for j in range(len(ras)):
            if np.isfinite(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center", fontsize=7,
                        color="w")
    fig.colorbar(im, ax=ax, label="Ks")
    return _save(fig, path)


def plot_me_evolution(nf_samples, path, me_limit=5.0):
    """Running mean life and margin of error against the sample count."""
    from .montecarlo import margin_of_error

    x = np.asarray(nf_samples, dtype=float)
    m = np.arange(1, x.size + 1)
    mean = np.cumsum(x) / m
    me = [np.nan] + [margin_of_error(x[:k]) for k in range(2, x.size + 1)]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.5, 5), sharex=True)
    ax1.plot(m, x, ".", color="grey", label="samples")
    ax1.plot(m, mean, "-", label="running mean")
    ax1.set_ylabel("cycles to failure")
    ax1.legend(fontsize=8)
    ax2.plot(m, me)
    ax2.axhline(me_limit, color="k", ls="--", lw=0.8)
    ax2.set_xlabel("samples")
    ax2.set_ylabel("ME [%]")
    return _save(fig, path)


def plot_mesh_fields(mesh, path, phi=None):
    fig, ax = plt.subplots(figsize=(6, 3))
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    if phi is None:
        ax.triplot(x, y, mesh.elements, lw=0.2)
    else:
        tc = ax.tripcolor(x, y, mesh.elements, phi, shading="gouraud", vmin=0, vmax=1)
        fig.colorbar(tc, ax=ax, label="phi")
    ax.set_aspect("equal")
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("y [mm]")
    return _save(fig, path)
