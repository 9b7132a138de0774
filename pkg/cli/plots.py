"""Optional PNG figures rendered from the plot-ready report frames"""
import matplotlib as mpl
mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

FIGURE_STYLE = {
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.4, 4.0),
}
mpl.rcParams.update(FIGURE_STYLE)


def new(nrows=1, ncols=1):
    return plt.subplots(nrows=nrows, ncols=ncols)


def save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_rmse_traces(frame, path):
    fig, ax = new()
    for method, group in frame.groupby("method", sort=True):
        ax.semilogy(group["instance"], group["rmse"], label=method, linewidth=0.8)
    ax.set_xlabel("instance")
    ax.set_ylabel("normalized RMSE")
    if not frame.empty:
        ax.legend()
    return save(fig, path)


def plot_bus_errors(frame, path):
    fig, (ax_mag, ax_ang) = new(nrows=2)
    for column in frame.columns:
        if column.endswith("_magnitude_error"):
            ax_mag.plot(frame["bus"], frame[column].abs(), marker=".", label=column[:-len("_magnitude_error")])
        elif column.endswith("_angle_error"):
            ax_ang.plot(frame["bus"], frame[column].abs(), marker=".", label=column[:-len("_angle_error")])
    ax_mag.set_ylabel("|magnitude error| (p.u.)")
    ax_ang.set_ylabel("|angle error| (rad)")
    ax_ang.set_xlabel("bus")
    if len(frame.columns) > 1:
        ax_mag.legend()
    return save(fig, path)


def plot_bus_trace(frame, path):
    fig, (ax_mag, ax_ang) = new(nrows=2)
    truth_drawn = False
    for method, group in frame.groupby("method", sort=True):
        if not truth_drawn:
            ax_mag.plot(group["instance"], group["true_magnitude"], "k-", linewidth=1.2, label="ground truth")
            ax_ang.plot(group["instance"], group["true_angle"], "k-", linewidth=1.2)
            truth_drawn = True
        ax_mag.plot(group["instance"], group["magnitude"], "--", linewidth=0.8, label=method)
        ax_ang.plot(group["instance"], group["angle"], "--", linewidth=0.8)
    ax_mag.set_ylabel("magnitude (p.u.)")
    ax_ang.set_ylabel("angle (rad)")
    ax_ang.set_xlabel("instance")
    if truth_drawn:
        ax_mag.legend()
    return save(fig, path)


def render_report_figures(artifacts, frames):
    plotters = {"rmse_traces": plot_rmse_traces, "bus_errors": plot_bus_errors, "bus_trace": plot_bus_trace}
    paths = {}
    for name, plotter in plotters.items():
        path = artifacts.path("reports", f"{name}.png")
        paths[name] = plotter(frames[name], path)
    return paths
