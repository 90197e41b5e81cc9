"""Batch experiment runner.

Each subcommand loads device/scenario inputs, dispatches the corresponding
library pipeline, and writes delimited data, a JSON fit/report block where
declared, a rendered figure, and a run manifest into the output directory.

Exit codes: 0 success, 1 configuration error, 2 numerical-integrity or fit
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bench, dmx, fits, metrics, power, qdevice, sfqdrive
from .errors import CalibrationError, ConfigError, FitError, IntegrityError, SfqsimError

OUTDIR_ENV = "SFQSIM_OUT"

STOCHASTIC_COMMANDS = {"rb", "irb", "u3rb", "prb", "orbit", "qpfit"}


def _fmt(x) -> str:
    """Locale-independent number formatting at 12 significant digits."""
    if x is None:
        return "-"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isinf(x):
        return "inf"
    return f"{x:.12g}"


class Run:
    """Collects output files in memory and writes them only on success."""

    def __init__(self, args, params):
        self.command = args.command
        self.params = params
        self.seed = params.get("seed")
        self.out_dir = Path(params["out"])
        self.force = bool(params.get("force"))
        self.plot = not params.get("no_plot", False)
        self.files: dict[str, bytes] = {}
        self.t_start = time.monotonic()

    def add_csv(self, name: str, header, rows):
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
        self.files[name] = buf.getvalue().encode()

    def add_json(self, name: str, payload):
        self.files[name] = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()

    def add_figure(self, name: str, render, *render_args):
        if not self.plot:
            return
        buf = io.BytesIO()
        render(*render_args, buf)
        self.files[name] = buf.getvalue()

    def flush(self) -> list[str]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "parameters": {k: v for k, v in sorted(self.params.items()) if k != "force"},
            "seed": self.seed,
            "version": __version__,
            "wall_time_s": round(time.monotonic() - self.t_start, 3),
            "outputs": sorted(self.files),
        }
        self.files["run_manifest.json"] = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
        clobbered = [n for n in self.files if (self.out_dir / n).exists()]
        if clobbered and not self.force:
            raise ConfigError(
                f"refusing to overwrite {', '.join(sorted(clobbered))} (pass --force)"
            )
        for name, data in sorted(self.files.items()):
            (self.out_dir / name).write_bytes(data)
        return sorted(self.files)


# ---------------------------------------------------------------------------
# shared loading helpers


def _load_params(args) -> dict:
    params: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError:
            raise
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"malformed config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        if "command" in loaded and loaded["command"] != args.command:
            raise ConfigError(
                f"config is for command {loaded['command']!r}, not {args.command!r}"
            )
        params.update({k: v for k, v in loaded.items() if k != "command"})
    for key in ("device", "out", "seed", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.force:
        params["force"] = True
    if args.no_plot:
        params["no_plot"] = True
    params.setdefault("device", str(qdevice.bundled_device_file()))
    params.setdefault("out", os.environ.get(OUTDIR_ENV, "sfqsim_out"))
    params.setdefault("threads", 1)
    if args.command in STOCHASTIC_COMMANDS and params.get("seed") is None:
        raise ConfigError(f"{args.command} is stochastic: a seed is mandatory")
    return params


def _records_by_name(params) -> dict[str, qdevice.DeviceRecord]:
    return {rec.name: rec for rec in qdevice.load_device_file(params["device"])}


def _pick_qubit(params) -> qdevice.DeviceRecord:
    records = _records_by_name(params)
    name = params.get("qubit", next(iter(records)))
    if name not in records:
        raise ConfigError(f"unknown qubit {name!r}; device file has {sorted(records)}")
    return records[name]


def _engine_for(record, params) -> bench.SfqGateEngine:
    model = qdevice.build_model(record)
    return bench.SfqGateEngine(model)


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_fig2b(run: Run, params):
    record = _pick_qubit(params)
    e_j, e_c = qdevice.solve_ej_ec(record.f01_ghz, record.anharm_ghz)
    coherence = params.get("coherence_us", [20, 50, 80, 1000])
    cc_lo = float(params.get("cc_min_ff", 0.018))
    cc_hi = float(params.get("cc_max_ff", 0.30))
    n_cc = int(params.get("cc_points", 16))
    cc_values = np.geomspace(cc_lo, cc_hi, n_cc)

    def point(cc):
        base = qdevice.TransmonParams(
            e_j=e_j, e_c=e_c, c_q=record.cq_ff, c_c=cc, t1=record.t1_us, t2=record.t2_us
        )
        return sfqdrive.sweep_capacitance(base, [cc], coherence)

    with ThreadPoolExecutor(max_workers=int(params["threads"])) as pool:
        results = list(pool.map(point, cc_values))
    points = [p for chunk in results for p in chunk]
    points.sort(key=lambda p: (p.t_coh_us, p.gate_time_ns))
    run.add_csv(
        "fig2b.csv",
        ["gate_time_ns", "error", "leakage", "t_coh_us"],
        [(p.gate_time_ns, p.error, p.leakage, p.t_coh_us) for p in points],
    )
    from . import plotting

    run.add_figure("fig2b.png", plotting.render_error_vs_gate_time, points)


def _cmd_fig4d(run: Run, params):
    record = _pick_qubit(params)
    model = qdevice.build_model(record)
    clock = sfqdrive.ClockConfig.subharmonic(model.f01)
    chans = sfqdrive.DecoherenceChannels.from_times(record.t1_us, record.t2_us)
    gate = sfqdrive.calibrate_np(model, sfqdrive.PulseShape(), clock, chans)
    window = int(params.get("np_window", 10))
    coherence = params.get("coherence_us", [20, 50, 1000])
    np_range = range(gate.n_p - window, gate.n_p + window + 1)
    points = sfqdrive.sweep_pulse_number(model, gate, np_range, coherence)
    run.add_csv("fig4d.csv", ["np", "error", "t_coh_us"],
                [(p.n_p, p.error, p.t_coh_us) for p in points])
    from . import plotting

    run.add_figure("fig4d.png", plotting.render_error_vs_pulse_number, points)


def _rb_common(run: Run, params):
    record = _pick_qubit(params)
    engine = _engine_for(record, params)
    lengths = tuple(params.get("lengths", bench.DEFAULT_LENGTHS))
    k = int(params.get("k", 30))
    return record, engine, lengths, k


def _emit_rb(run: Run, result: bench.RBResult, stem: str, extra: dict | None = None):
    run.add_csv(f"{stem}.csv", ["m", "mean_p0", "stderr"],
                list(zip(result.lengths, result.mean_p0, result.stderr)))
    fit = {
        "A": result.a,
        "B": result.b,
        "n_tilde": None if np.isinf(result.n_tilde) else result.n_tilde,
        "alpha": result.alpha,
        "f_cliff": result.f_cliff,
        "alpha_std": result.alpha_std,
        "composition": result.composition,
    }
    if extra:
        fit.update(extra)
    run.add_json(f"{stem}_fit.json", fit)
    from . import plotting

    run.add_figure(f"{stem}.png", plotting.render_rb_decay, result)


def _cmd_rb(run: Run, params):
    record, engine, lengths, k = _rb_common(run, params)
    result = bench.run_rb(engine, lengths, k, int(params["seed"]))
    _emit_rb(run, result, "rb", {"qubit": record.name})


def _cmd_irb(run: Run, params):
    record, engine, lengths, k = _rb_common(run, params)
    result = bench.run_irb(engine, "x2", lengths, k, int(params["seed"]))
    _emit_rb(run, result.reference, "irb_reference", {"qubit": record.name})
    _emit_rb(run, result.interleaved, "irb_interleaved", {
        "qubit": record.name,
        "f_gate": result.f_gate,
        "unphysical_ratio": result.unphysical,
    })


def _cmd_u3rb(run: Run, params):
    record, engine, lengths, k = _rb_common(run, params)
    result = bench.run_u3rb(engine, lengths, k, int(params["seed"]))
    _emit_rb(run, result.rb, "u3rb", {"qubit": record.name, "x2_error": result.x2_error})


def _cmd_prb(run: Run, params):
    record, engine, lengths, k = _rb_common(run, params)
    result = bench.run_prb(engine, lengths, k, int(params["seed"]))
    run.add_csv("prb.csv", ["m", "mean_purity", "stderr"],
                list(zip(result.lengths, result.mean_purity, result.stderr)))
    run.add_json("prb_fit.json", {
        "qubit": record.name,
        "gamma": result.gamma,
        "gamma_std": result.gamma_std,
        "epsilon_prb": result.epsilon_prb,
    })
    from . import plotting

    run.add_figure("prb.png", plotting.render_purity_decay, result)


def _cmd_orbit(run: Run, params):
    record, engine, _, k = _rb_common(run, params)
    parameter = params.get("parameter", "n_p")
    if parameter == "n_p":
        default_values = [engine.gate.n_p + d for d in range(-10, 11)]
    elif parameter == "detuning":
        default_values = list(np.linspace(-2.0, 2.0, 21))
    else:
        default_values = list(np.linspace(-0.3, 0.3, 21))
    values = params.get("values", default_values)
    n_fixed = int(params.get("n_fixed", 0))
    if n_fixed < 1:
        # half the decay constant maximizes p(0) sensitivity
        n_est = bench.run_rb(engine, (2, 8, 32, 128), max(k // 3, 5), int(params["seed"]) + 17)
        n_fixed = 64 if np.isinf(n_est.n_tilde) else max(int(round(n_est.n_tilde / 2)), 2)
    result = bench.orbit_sweep(engine, parameter, values, n_fixed, k, int(params["seed"]))
    run.add_csv("orbit.csv", ["param_value", "mean_p0"],
                list(zip(result.values, result.mean_p0)))
    run.add_json("orbit_result.json", {
        "qubit": record.name,
        "parameter": parameter,
        "n_fixed": n_fixed,
        "best_value": result.best_value,
        "inconclusive": result.inconclusive,
    })
    from . import plotting

    run.add_figure("orbit.png", plotting.render_orbit, result)


def _cmd_tdm(run: Run, params):
    records = list(_records_by_name(params).values())
    outer = records[1:5] if len(records) >= 5 else records
    qubits = []
    for rec in outer:
        model = qdevice.build_model(rec)
        qubits.append(dmx.TdmQubit(
            model=model,
            clock=sfqdrive.ClockConfig.subharmonic(model.f01),
            chans=sfqdrive.DecoherenceChannels.from_times(rec.t1_us, rec.t2_us),
        ))
    if "schedule" in params:
        entries = tuple(
            dmx.TdmEntry(int(e["qubit"]), int(e["n_pulses"]), float(e["t_start_ns"]))
            for e in params["schedule"]
        )
        readout = float(params.get("readout_time_ns", entries[-1].t_start_ns + 1000.0))
    else:
        # serial pi pulses, one qubit after another
        entries = []
        cursor = 0.0
        for i, q in enumerate(qubits):
            gate = sfqdrive.calibrate_np(q.model, q.shape, q.clock, q.chans)
            n_pi = 2 * gate.n_p
            entries.append(dmx.TdmEntry(i, n_pi, cursor))
            cursor += n_pi * q.clock.tau_clk
        entries = tuple(entries)
        readout = float(params.get("readout_time_ns", cursor))
    lam = np.array(params["lambda_db"]) if "lambda_db" in params else None
    config = dmx.DmxConfig(n_out=4 if len(qubits) <= 4 else 8, lambda_db=lam) if lam is not None else None
    schedule = dmx.TdmSchedule(entries=entries, readout_time_ns=readout)
    rhos = dmx.simulate_tdm(schedule, qubits, config)
    pops = [np.real(np.diag(r)) for r in rhos]
    run.add_json("tdm_schedule.json", {
        "entries": [{"qubit": e.qubit, "n_pulses": e.n_pulses, "t_start_ns": e.t_start_ns}
                     for e in entries],
        "readout_time_ns": readout,
    })
    run.add_csv("tdm_populations.csv", ["qubit"] + [f"p{k}" for k in range(len(pops[0]))],
                [[outer[i].name] + list(p) for i, p in enumerate(pops)])
    from . import plotting

    run.add_figure("tdm.png", plotting.render_tdm_populations, [p[:2] for p in pops])


def _cmd_xtalk(run: Run, params):
    if "omega_csv" in params:
        omega = np.loadtxt(params["omega_csv"], delimiter=",")
    else:
        n = int(params.get("n_out", 4))
        level = float(params.get("uniform_db", -35.0))
        nominal = np.array(params.get("omega_nominal_mhz", [5.0] * n), dtype=float)
        omega = 10 ** (level / 20.0) * np.tile(nominal, (n, 1))
        np.fill_diagonal(omega, nominal)
    lam = dmx.crosstalk_matrix_from_rates(omega)
    run.add_csv("crosstalk_db.csv", [f"ch{j}" for j in range(lam.shape[1])],
                [list(row) for row in lam])
    from . import plotting

    run.add_figure("crosstalk.png", plotting.render_crosstalk, lam)


def _cmd_qpfit(run: Run, params):
    if "data" in params:
        raw = np.loadtxt(params["data"], delimiter=",", skiprows=1)
        times, populations = raw[:, 0], raw[:, 1]
    else:
        rng = np.random.default_rng(int(params["seed"]))
        n_qp = float(params.get("n_qp", 1.5))
        t_qp = float(params.get("t_qp_us", 20.0))
        t_r = float(params.get("t_r_us", 60.0))
        noise = float(params.get("noise", 0.01))
        times = np.linspace(0.2, 2.0 * t_r, int(params.get("points", 120)))
        populations = np.exp(n_qp * (np.exp(-times / t_qp) - 1.0) - times / t_r)
        populations = populations + noise * rng.standard_normal(times.size)
    fit = fits.fit_qp(times, populations)
    run.add_csv("qpfit_data.csv", ["t_us", "p1"], list(zip(times, populations)))
    run.add_json("qpfit.json", {
        "n_qp": fit.n_qp,
        "t_qp_us": fit.t_qp_us,
        "t_r_us": fit.t_r_us,
        "n_qp_std": None if np.isinf(fit.n_qp_std) else fit.n_qp_std,
        "chi2_red_double": fit.chi2_red_double,
        "chi2_red_single": fit.chi2_red_single,
        "valid": fit.valid,
        "unstable": fit.unstable,
    })
    from . import plotting

    run.add_figure("qpfit.png", plotting.render_qp_fit, times, populations, fit)


def _cmd_limits(run: Run, params):
    records = list(_records_by_name(params).values())
    rows = []
    for rec in records:
        if rec.f_clk_ghz is None or rec.omega_r_mhz is None:
            raise ConfigError(f"qubit {rec.name} lacks f_clk_ghz/omega_r_mhz needed for tau_pi/2")
        n_p = sfqdrive.pulses_per_halfpi(rec.f_clk_ghz, rec.omega_r_mhz)
        tau = n_p / rec.f_clk_ghz
        f_lim = metrics.coherence_limit(tau, rec.t1_us, rec.t2_us)
        rows.append((rec.name, n_p, tau, rec.t1_us, rec.t2_us, f_lim))
    run.add_csv("limits.csv",
                ["qubit", "n_pi2", "tau_pi2_ns", "t1_us", "t2_us", "f_lim"],
                rows)
    from . import plotting

    run.add_figure("limits.png", plotting.render_limits,
                   [r[0] for r in rows], [r[5] for r in rows])


BUDGET_ROWS = (
    ("technology", lambda r: {"rf": "RF", "sfq": "SFQ", "cryo_cmos": "Cryo-CMOS"}[r.scheme]),
    ("n_qubits", lambda r: r.n_qubits),
    ("rf_lines", lambda r: r.rf_lines),
    ("dio_lines", lambda r: r.dio_lines),
    ("dc_lines", lambda r: r.dc_lines),
    ("passive_wiring_nw", lambda r: r.passive_wiring_nw),
    ("static_nw", lambda r: r.static_nw),
    ("active_nw", lambda r: r.active_nw),
    ("switching_nw", lambda r: r.switching_nw),
    ("total_nw", lambda r: r.total_nw),
    ("per_qubit_nw", lambda r: r.per_qubit_nw),
)


def _cmd_budget(run: Run, params):
    path = params.get("scenarios", str(power.bundled_scenario_file()))
    scenarios = power.load_scenarios(path)
    rows = [power.heat_budget(s) for s in scenarios]
    table = [[label] + [_fmt(get(r)) if not isinstance(get(r), str) else get(r) for r in rows]
             for label, get in BUDGET_ROWS]
    run.add_csv("budget_table1.csv", ["quantity"] + [r.name for r in rows], table)
    run.add_json("budget.json", {
        r.name: {
            "scheme": r.scheme,
            "n_qubits": r.n_qubits,
            "passive_wiring_nw": r.passive_wiring_nw,
            "static_nw": r.static_nw,
            "active_nw": r.active_nw,
            "switching_nw": r.switching_nw,
            "total_nw": r.total_nw,
            "per_qubit_nw": r.per_qubit_nw,
        }
        for r in rows
    })
    from . import plotting

    run.add_figure("budget.png", plotting.render_budget, rows)


COMMANDS = {
    "fig2b": _cmd_fig2b,
    "fig4d": _cmd_fig4d,
    "rb": _cmd_rb,
    "irb": _cmd_irb,
    "u3rb": _cmd_u3rb,
    "prb": _cmd_prb,
    "orbit": _cmd_orbit,
    "tdm": _cmd_tdm,
    "xtalk": _cmd_xtalk,
    "qpfit": _cmd_qpfit,
    "limits": _cmd_limits,
    "budget": _cmd_budget,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfqsim",
        description="SFQ qubit-control simulation and benchmarking toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON parameter file (flags override it)")
        p.add_argument("--device", help="device parameter file")
        p.add_argument("--out", help=f"output directory (default ${OUTDIR_ENV} or ./sfqsim_out)")
        p.add_argument("--seed", type=int, help="master seed (mandatory for stochastic commands)")
        p.add_argument("--force", action="store_true", help="allow overwriting outputs")
        p.add_argument("--threads", type=int, help="worker threads for sweep points")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params = _load_params(args)
        run = Run(args, params)
        COMMANDS[args.command](run, params)
        written = run.flush()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IntegrityError, FitError, CalibrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except SfqsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name in written:
        print(run.out_dir / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
