"""Report figures, rendered headlessly next to the delimited output.

matplotlib is imported lazily (and forced onto the Agg backend) so that
library users who never touch the report path pay nothing for it.
"""

from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def floquet_figure(fd, p0, path) -> None:
    """One period of the base potential and of the eigen-solution modulus."""
    plt = _plt()
    t = np.linspace(0.0, p0.period, 1024)
    phi0 = np.exp(1j * (fd.rotation * t + fd.phase.evaluate(fd.frequencies(), t)))
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax0.plot(t, p0.evaluate(t), color="tab:blue")
    ax0.set_ylabel("p0(t)")
    ax1.plot(t, np.abs(phi0), color="tab:orange")
    ax1.set_ylabel("|phi0(t)|")
    ax1.set_xlabel("t")
    ax0.set_title(f"rotation = {fd.rotation:.12g}, trace = {fd.trace:.12g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def expand_figure(result, path) -> None:
    """Per-order series norms and obstruction magnitudes."""
    plt = _plt()
    ks = np.arange(len(result.orders))
    norms = [u.l1_norm() for u in result.orders]
    gs = np.abs(np.asarray(result.obstructions))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(ks, np.maximum(norms, 1e-300), "o-", label="l1 norm of u^(k)")
    ax.semilogy(
        np.arange(1, len(gs) + 1),
        np.maximum(gs, 1e-300),
        "s--",
        label="|G_k|",
    )
    ax.set_xlabel("order")
    ax.legend()
    ax.set_title("expansion growth")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def scan_figure(report, path) -> None:
    """Admissible fraction per dyadic band, with the excluded points rugged."""
    plt = _plt()
    mids = [np.sqrt(lo * hi) for lo, hi in report.band_edges]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogx(mids, report.band_fractions, "o-", color="tab:green")
    bad = report.eps[report.excluded]
    if len(bad):
        ax.plot(bad, np.full(len(bad), min(report.band_fractions) - 0.01), "|", color="tab:red")
    ax.set_xlabel("eps (band geometric midpoints)")
    ax.set_ylabel("admissible fraction")
    ax.set_title("first-order admissibility surrogate")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def verify_figure(probe, reconstructed, path) -> None:
    """Integrated versus reconstructed modulus, and their pointwise gap."""
    plt = _plt()
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax0.plot(probe.times, np.abs(probe.values), label="integrated", lw=0.8)
    ax0.plot(probe.times, np.abs(reconstructed), "--", label="reconstructed", lw=0.8)
    ax0.set_ylabel("|phi|")
    ax0.legend(loc="upper right")
    gap = np.abs(probe.values - reconstructed)
    ax1.semilogy(probe.times, np.maximum(gap, 1e-300), color="tab:red", lw=0.8)
    ax1.set_ylabel("|difference|")
    ax1.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
