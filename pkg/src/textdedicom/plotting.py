"""Loss-curve figures written next to the CSV outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
COLORS = {"dedicom": "#1f4e9c", "nmf": "#d2691e", "svd": "#2e8b57"}


def plot_training_loss(trace, path, title=None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        epochs = [e for e, _ in trace.losses]
        values = [v for _, v in trace.losses]
        ax.plot(epochs, values, color=COLORS["dedicom"], lw=1.2)
        ax.set_xlabel("epoch")
        ax.set_ylabel("reconstruction loss")
        ax.set_yscale("log")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)


def plot_loss_comparison(dedicom_trace, final_losses, path):
    """DEDICOM training curve with the final NMF and SVD losses as horizontal lines."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        epochs = [e for e, _ in dedicom_trace.losses]
        ax.plot(epochs, [v for _, v in dedicom_trace.losses],
                color=COLORS["dedicom"], lw=1.2, label="DEDICOM")
        for method in ("nmf", "svd"):
            ax.axhline(final_losses[method], color=COLORS[method], ls="--", lw=1.0,
                       label=f"{method.upper()} (final)")
        ax.set_xlabel("epoch")
        ax.set_ylabel("reconstruction loss")
        ax.set_yscale("log")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
