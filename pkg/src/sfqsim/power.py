"""Cryogenic heat-budget accounting for RF, cryo-CMOS, and SFQ control
schemes: passive wiring loads, static dissipation, clocked SFQ dissipation
P_D = Phi0 I_b f_clk, and cryo-CMOS channel-switching loads.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParameterError

PHI0 = 2.067833848e-15  # Wb

SCHEMES = ("rf", "cryo_cmos", "sfq")


@dataclass(frozen=True)
class Scenario:
    """One column of the heat-load comparison."""

    name: str
    scheme: str
    n_qubits: int
    rf_lines: int = 0
    dio_lines: int = 0
    dc_lines: int = 0
    passive_per_coax_nw: float = 4.0
    static_nw: float = 0.0
    i_bias_ma: float | None = None  # sfq
    f_clk_ghz: float = 2.5  # sfq
    duty: float = 1.0  # sfq clock duty cycle
    active_per_line_nw: float | None = None  # rf
    f_switch_mhz: float | None = None  # cryo_cmos
    switch_ref_nw: float | None = None  # cryo_cmos, at switch_ref_mhz
    switch_ref_mhz: float = 20.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.n_qubits < 1:
            raise ParameterError("n_qubits must be >= 1")
        if min(self.rf_lines, self.dio_lines, self.dc_lines) < 0:
            raise ParameterError("line counts must be >= 0")
        for name in ("passive_per_coax_nw", "static_nw", "duty"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")


def active_power(i_bias_ma: float, f_clk_ghz: float, duty: float = 1.0) -> float:
    """Clocked SFQ dissipation P_D = Phi0 I_b f_clk, in nW."""
    if i_bias_ma < 0 or f_clk_ghz < 0 or duty < 0:
        raise ParameterError("active_power needs non-negative inputs")
    return PHI0 * (i_bias_ma * 1e-3) * (f_clk_ghz * 1e9) * duty * 1e9


@dataclass(frozen=True)
class BudgetRow:
    """Heat-budget components in nW; None marks a component that does not
    apply to the scheme (printed as '-')."""

    name: str
    scheme: str
    n_qubits: int
    rf_lines: int
    dio_lines: int
    dc_lines: int
    passive_wiring_nw: float
    static_nw: float | None
    active_nw: float | None
    switching_nw: float | None
    total_nw: float
    per_qubit_nw: float


def heat_budget(scenario: Scenario) -> BudgetRow:
    """Component loads and totals for one scenario.

    Passive wiring counts only the coaxial lines (twisted-pair dc lines
    carry a negligible load); ERSFQ scenarios have zero static dissipation.
    """
    if scenario.n_qubits == 0:
        raise ParameterError("n_qubits must be nonzero")
    passive = scenario.rf_lines * scenario.passive_per_coax_nw
    static: float | None
    active: float | None
    switching: float | None
    if scenario.scheme == "rf":
        static = None
        switching = None
        active = scenario.rf_lines * (scenario.active_per_line_nw or 0.0)
    elif scenario.scheme == "sfq":
        static = 0.0  # ERSFQ: biased below the limiting junction's critical current
        switching = 0.0  # dc-switch channel changes dissipate nothing
        if scenario.i_bias_ma is None:
            raise ParameterError("sfq scenario needs i_bias_ma")
        active = active_power(scenario.i_bias_ma, scenario.f_clk_ghz, scenario.duty)
    else:  # cryo_cmos
        static = scenario.static_nw
        active = None
        if scenario.switch_ref_nw is None or scenario.f_switch_mhz is None:
            raise ParameterError("cryo_cmos scenario needs switch_ref_nw and f_switch_mhz")
        switching = scenario.switch_ref_nw * (scenario.f_switch_mhz / scenario.switch_ref_mhz)
    total = passive + (static or 0.0) + (active or 0.0) + (switching or 0.0)
    return BudgetRow(
        name=scenario.name,
        scheme=scenario.scheme,
        n_qubits=scenario.n_qubits,
        rf_lines=scenario.rf_lines,
        dio_lines=scenario.dio_lines,
        dc_lines=scenario.dc_lines,
        passive_wiring_nw=passive,
        static_nw=static,
        active_nw=active,
        switching_nw=switching,
        total_nw=total,
        per_qubit_nw=total / scenario.n_qubits,
    )


_FLOAT_FIELDS = {
    "passive_per_coax_nw", "static_nw", "i_bias_ma", "f_clk_ghz", "duty",
    "active_per_line_nw", "f_switch_mhz", "switch_ref_nw", "switch_ref_mhz",
}
_INT_FIELDS = {"n_qubits", "rf_lines", "dio_lines", "dc_lines"}


def load_scenarios(path) -> list[Scenario]:
    """Parse a key-value scenario file with one section per column."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse scenario file {path}: {exc}") from exc
    scenarios = []
    for section in parser.sections():
        sec = parser[section]
        kwargs = {"name": section}
        for key in sec:
            if key == "scheme":
                kwargs["scheme"] = sec.get(key)
            elif key in _INT_FIELDS:
                kwargs[key] = sec.getint(key)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = sec.getfloat(key)
            else:
                raise ConfigError(f"unknown scenario field {key!r} in [{section}]")
        try:
            scenarios.append(Scenario(**kwargs))
        except (TypeError, ParameterError) as exc:
            raise ConfigError(f"bad scenario [{section}]: {exc}") from exc
    if not scenarios:
        raise ConfigError(f"scenario file {path} contains no sections")
    return scenarios


def bundled_scenario_file() -> Path:
    return Path(__file__).parent / "data" / "scenarios_table1.cfg"
