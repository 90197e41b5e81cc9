"""Figure rendering for the CLI report path.

Every figure-producing subcommand writes a PNG next to its delimited
output; these helpers only consume the already-computed records.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_error_vs_gate_time(points, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    by_t = {}
    for p in points:
        by_t.setdefault(p.t_coh_us, []).append(p)
    for t_coh in sorted(by_t):
        pts = sorted(by_t[t_coh], key=lambda p: p.gate_time_ns)
        label = "no decoherence" if np.isinf(t_coh) else f"T1=T2={t_coh:g} us"
        ax.loglog([p.gate_time_ns for p in pts], [p.error for p in pts], "o-", ms=3, label=label)
    ax.set_xlabel("gate time (ns)")
    ax.set_ylabel("X/2 gate error")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_error_vs_pulse_number(points, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    by_t = {}
    for p in points:
        by_t.setdefault(p.t_coh_us, []).append(p)
    for t_coh in sorted(by_t):
        pts = sorted(by_t[t_coh], key=lambda p: p.n_p)
        label = "no decoherence" if np.isinf(t_coh) else f"T1=T2={t_coh:g} us"
        ax.semilogy([p.n_p for p in pts], [p.error for p in pts], "o-", ms=3, label=label)
    ax.set_xlabel("SFQ pulses per gate")
    ax.set_ylabel("X/2 gate error")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_rb_decay(result, path, label="survival p(0)"):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    m = np.asarray(result.lengths, dtype=float)
    ax.errorbar(m, result.mean_p0, yerr=result.stderr, fmt="o", ms=4, label="data")
    grid = np.linspace(m.min(), m.max(), 200)
    ax.plot(grid, result.a * result.alpha**grid + result.b, "--", label="fit")
    ax.set_xlabel("sequence length m")
    ax.set_ylabel(label)
    ax.set_title(f"alpha = {result.alpha:.5f}, F_cliff = {result.f_cliff:.5f}")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_purity_decay(result, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    m = np.asarray(result.lengths, dtype=float)
    ax.errorbar(m, result.mean_purity, yerr=result.stderr, fmt="s", ms=4, label="purity")
    ax.set_xlabel("sequence length m")
    ax.set_ylabel("Tr(rho^2)")
    ax.set_title(f"gamma = {result.gamma:.5f}, eps_PRB = {result.epsilon_prb:.2e}")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_orbit(result, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.errorbar(result.values, result.mean_p0, yerr=result.stderr, fmt="o-", ms=4)
    ax.axvline(result.best_value, color="k", ls=":", lw=1)
    ax.set_xlabel(result.parameter)
    ax.set_ylabel("mean p(0)")
    flag = " (inconclusive)" if result.inconclusive else ""
    ax.set_title(f"best {result.parameter} = {result.best_value:g}{flag}")
    _save(fig, path)


def render_crosstalk(lambda_db, path):
    lam = np.asarray(lambda_db)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(lam, cmap="viridis")
    for i in range(lam.shape[0]):
        for j in range(lam.shape[1]):
            ax.text(j, i, f"{lam[i, j]:.0f}", ha="center", va="center", fontsize=7, color="w")
    fig.colorbar(im, ax=ax, label="crosstalk (dB)")
    ax.set_xlabel("selected channel")
    ax.set_ylabel("qubit")
    _save(fig, path)


def render_tdm_populations(populations, path):
    pops = np.asarray(populations)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = np.arange(pops.shape[0])
    ax.bar(x - 0.2, pops[:, 0], width=0.4, label="p0")
    ax.bar(x + 0.2, pops[:, 1], width=0.4, label="p1")
    ax.set_xticks(x, [f"q{i}" for i in x])
    ax.set_ylabel("population at readout")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_qp_fit(times, populations, fit, path):
    from .fits import _qp_model

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(times, populations, "o", ms=3, label="data")
    grid = np.linspace(min(times), max(times), 300)
    ax.plot(grid, _qp_model(grid, fit.n_qp, fit.t_qp_us, fit.t_r_us), "-",
            label=f"double exp (n_qp={fit.n_qp:.2f})")
    ax.plot(grid, np.exp(-grid / fit.t_r_us), "--", label="single exp")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("P(1)")
    ax.set_title("valid double-exponential fit" if fit.valid else "single exponential preferred")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_limits(names, values, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.bar(names, [100 * v for v in values])
    ax.set_ylabel("coherence-limited fidelity (%)")
    ax.set_ylim(99.5, 100.0)
    _save(fig, path)


def render_budget(rows, path):
    fig, ax = plt.subplots(figsize=(6.5, 4))
    names = [r.name for r in rows]
    x = np.arange(len(rows))
    bottom = np.zeros(len(rows))
    for label, attr in (("passive", "passive_wiring_nw"), ("static", "static_nw"),
                        ("active", "active_nw"), ("switching", "switching_nw")):
        vals = np.array([getattr(r, attr) or 0.0 for r in rows])
        ax.bar(x, vals, bottom=bottom, label=label)
        bottom += vals
    ax.set_yscale("log")
    ax.set_xticks(x, names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("heat load (nW)")
    ax.legend(fontsize=8)
    _save(fig, path)
