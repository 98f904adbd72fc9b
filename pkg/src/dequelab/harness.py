"""Scenario grids, comparison tables, and density-comparison exports.

Drives the three analytic engines (Poisson chain, the two diffusion models)
and the simulator over a grid of interarrival families, arrival-rate pairs,
and reneging multipliers, and renders the results as CSV / JSON tables with
relative errors against the simulation column.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import des, diffusion, poisson_ctmc
from .errors import ConfigError
from .params import QueueParams

__all__ = [
    "FAMILY_ALIASES",
    "BUDGETS",
    "ComparisonConfig",
    "ComparisonRow",
    "DensityComparison",
    "canonical_family",
    "relative_error_pct",
    "run_comparison",
    "export_density_comparison",
    "psi_density_grid",
    "comparison_to_csv",
    "comparison_to_json",
    "run_compare_command",
]

FAMILY_ALIASES = {
    "exp": "exponential",
    "exponential": "exponential",
    "uniform": "uniform",
    "erlang": "erlang",
    "erlang2": "erlang",
    "hyperexp": "hyperexponential",
    "hyperexponential": "hyperexponential",
}

BUDGETS = {
    "desk": {"replications": 50, "warmup": 250.0, "horizon": 1000.0},
    "paper": {"replications": 400, "warmup": 1000.0, "horizon": 4000.0},
}

_CSV_HEADER = (
    "dist,alpha,beta,theta,gamma,"
    "L1_s,L1_s_ci,L1_p,L1_p_err,L1_d1,L1_d1_err,L1_d2,L1_d2_err,"
    "L2_s,L2_s_ci,L2_p,L2_p_err,L2_d1,L2_d1_err,L2_d2,L2_d2_err"
)


def canonical_family(name: str) -> str:
    try:
        return FAMILY_ALIASES[name.lower()]
    except KeyError:
        valid = sorted(set(FAMILY_ALIASES))
        raise ConfigError(f"unknown distribution {name!r}; valid names: {valid}") from None


@dataclass(frozen=True)
class ComparisonConfig:
    """Axes of the comparison grid plus the simulation budget."""

    families: tuple[str, ...] = ("exponential", "uniform", "erlang", "hyperexponential")
    rate_pairs: tuple[tuple[float, float], ...] = ((1.0, 1.0), (1.0, 1.5), (1.0, 2.0))
    reneging_multipliers: tuple[float, ...] = (1.0, 0.1, 0.01)
    replications: int = 50
    warmup: float = 250.0
    horizon: float = 1000.0
    histogram_bound: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(canonical_family(f) for f in self.families))
        for pair in self.rate_pairs:
            if len(pair) != 2 or pair[0] <= 0 or pair[1] <= 0:
                raise ConfigError(f"rate pair must be two positive numbers, got {pair}")
        for mult in self.reneging_multipliers:
            if mult <= 0:
                raise ConfigError(f"reneging multiplier must be positive, got {mult}")
        if not (0 <= self.warmup < self.horizon):
            raise ConfigError("need 0 <= warmup < horizon")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict, budget_override: str | None = None) -> "ComparisonConfig":
        raw = dict(raw)
        budget = raw.pop("budget", "desk")
        if budget_override is not None:
            budget = budget_override
        if isinstance(budget, str):
            if budget not in BUDGETS:
                raise ConfigError(f"unknown budget {budget!r}; valid: {sorted(BUDGETS)} or an object")
            budget = BUDGETS[budget]
        kwargs = {
            "replications": int(budget["replications"]),
            "warmup": float(budget["warmup"]),
            "horizon": float(budget["horizon"]),
        }
        for key in ("families", "rate_pairs", "reneging_multipliers", "histogram_bound"):
            if key in raw:
                value = raw.pop(key)
                if key == "rate_pairs":
                    value = tuple(tuple(float(v) for v in pair) for pair in value)
                elif key == "families":
                    value = tuple(value)
                elif key == "reneging_multipliers":
                    value = tuple(float(v) for v in value)
                kwargs[key] = value
        if raw:
            raise ConfigError(f"unknown config keys: {sorted(raw)}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path, budget_override: str | None = None) -> "ComparisonConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, budget_override)


@dataclass(frozen=True)
class ComparisonRow:
    """One scenario cell: simulation estimates, the three analytic estimates,
    and percentage errors of each analytic column against the simulation.

    An error is None (rendered NA) when the simulated value's confidence
    interval covers zero, where the relative error is meaningless.
    """

    family: str
    alpha: float
    beta: float
    theta: float
    gamma: float
    L1_s: float
    L1_s_ci: float | None
    L1_p: float
    L1_d1: float
    L1_d2: float
    L2_s: float
    L2_s_ci: float | None
    L2_p: float
    L2_d1: float
    L2_d2: float
    L1_p_err: float | None = field(init=False)
    L1_d1_err: float | None = field(init=False)
    L1_d2_err: float | None = field(init=False)
    L2_p_err: float | None = field(init=False)
    L2_d1_err: float | None = field(init=False)
    L2_d2_err: float | None = field(init=False)

    def __post_init__(self):
        for target, sim, ci in (
            (("L1_p_err", "L1_d1_err", "L1_d2_err"), self.L1_s, self.L1_s_ci),
            (("L2_p_err", "L2_d1_err", "L2_d2_err"), self.L2_s, self.L2_s_ci),
        ):
            for name in target:
                analytic = getattr(self, name[:-4])
                object.__setattr__(self, name, relative_error_pct(analytic, sim, ci))


def relative_error_pct(analytic: float, simulated: float, ci_halfwidth: float | None) -> float | None:
    """|analytic - simulated| / |simulated| * 100, None when the CI covers zero."""
    if ci_halfwidth is not None and abs(simulated) <= ci_halfwidth:
        return None
    if simulated == 0.0:
        return None
    return abs(analytic - simulated) / abs(simulated) * 100.0


def _analytic_columns(family: str, alpha: float, beta: float, theta: float, gamma: float):
    poisson = QueueParams(alpha, beta, theta, gamma)
    l1_p, l2_p = poisson_ctmc.poisson_moment_estimates(poisson)
    diffused = QueueParams.for_family(family, alpha, beta, theta, gamma)
    m1 = diffusion.model_one(diffused)
    m2 = diffusion.model_two(diffused)
    return l1_p, l2_p, m1, m2


def _cells(config: ComparisonConfig):
    cell = 0
    for family in config.families:
        for alpha, beta in config.rate_pairs:
            for mult in config.reneging_multipliers:
                yield cell, family, alpha, beta, mult * alpha, mult * beta
                cell += 1


def _run_cell(config: ComparisonConfig, base_seed: int, cell: int, family: str,
              alpha: float, beta: float, theta: float, gamma: float):
    l1_p, l2_p, m1, m2 = _analytic_columns(family, alpha, beta, theta, gamma)
    scenario = des.Scenario.for_family(
        family,
        alpha,
        beta,
        theta,
        gamma,
        horizon=config.horizon,
        warmup=config.warmup,
        replications=config.replications,
        histogram_bound=config.histogram_bound,
    )
    sim = des.estimate(scenario, base_seed, stream_base=cell << 32)
    row = ComparisonRow(
        family=family,
        alpha=alpha,
        beta=beta,
        theta=theta,
        gamma=gamma,
        L1_s=sim.L1,
        L1_s_ci=sim.ci_halfwidth_L1,
        L1_p=l1_p,
        L1_d1=m1.L1,
        L1_d2=m2.L1,
        L2_s=sim.L2,
        L2_s_ci=sim.ci_halfwidth_L2,
        L2_p=l2_p,
        L2_d1=m1.L2,
        L2_d2=m2.L2,
    )
    return row, scenario, sim


def run_comparison(config: ComparisonConfig, base_seed: int = 0) -> list[ComparisonRow]:
    """All grid cells, in config order; cell randomness is independent by construction."""
    return [
        _run_cell(config, base_seed, *cell)[0] for cell in _cells(config)
    ]


def _fmt(value: float | None) -> str:
    if value is None:
        return "NA"
    return format(value, ".10g")


def comparison_to_csv(rows: list[ComparisonRow]) -> str:
    lines = [_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.family,
                    _fmt(r.alpha),
                    _fmt(r.beta),
                    _fmt(r.theta),
                    _fmt(r.gamma),
                    _fmt(r.L1_s),
                    _fmt(r.L1_s_ci),
                    _fmt(r.L1_p),
                    _fmt(r.L1_p_err),
                    _fmt(r.L1_d1),
                    _fmt(r.L1_d1_err),
                    _fmt(r.L1_d2),
                    _fmt(r.L1_d2_err),
                    _fmt(r.L2_s),
                    _fmt(r.L2_s_ci),
                    _fmt(r.L2_p),
                    _fmt(r.L2_p_err),
                    _fmt(r.L2_d1),
                    _fmt(r.L2_d1_err),
                    _fmt(r.L2_d2),
                    _fmt(r.L2_d2_err),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def comparison_to_json(rows: list[ComparisonRow]) -> str:
    payload = []
    for r in rows:
        entry = {name: getattr(r, name) for name in (
            "family", "alpha", "beta", "theta", "gamma",
            "L1_s", "L1_s_ci", "L1_p", "L1_p_err", "L1_d1", "L1_d1_err", "L1_d2", "L1_d2_err",
            "L2_s", "L2_s_ci", "L2_p", "L2_p_err", "L2_d1", "L2_d1_err", "L2_d2", "L2_d2_err",
        )}
        payload.append(entry)
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


@dataclass(frozen=True)
class DensityComparison:
    """Integer-lattice comparison of the heavy-traffic density against pmfs.

    With unit lattice spacing a pmf value is already a density sample; the
    cell-integrated density column is the alternative convention (mass of the
    unit cell around each state), so plots can be regenerated either way.
    """

    states: np.ndarray
    psi: np.ndarray
    psi_cell_mass: np.ndarray
    poisson_pmf: np.ndarray
    simulated_pmf: np.ndarray

    def to_csv(self) -> str:
        lines = ["x,psi,psi_cell_mass,pi_poisson,pi_sim"]
        for k in range(len(self.states)):
            lines.append(
                ",".join(
                    [
                        str(int(self.states[k])),
                        _fmt(float(self.psi[k])),
                        _fmt(float(self.psi_cell_mass[k])),
                        _fmt(float(self.poisson_pmf[k])),
                        _fmt(float(self.simulated_pmf[k])),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def heavy_traffic_density(family: str, alpha: float, beta: float, theta: float, gamma: float):
    """Stationary density of the constant-coefficient diffusion model."""
    params = QueueParams.for_family(family, alpha, beta, theta, gamma)
    a = params.diffusion_coeff
    mu = params.drift_offset
    return diffusion.psi_density(mu**2 / a**2, mu, a, theta, gamma)


def export_density_comparison(
    scenario: des.Scenario,
    base_seed: int = 0,
    span: int | None = None,
    simulated: des.SimulationEstimate | None = None,
) -> DensityComparison:
    """Tabulate psi, the Poisson pmf, and the simulated pmf on the integer lattice.

    span defaults to mean +- 6 sd of the Poisson chain; pass a precomputed
    SimulationEstimate to reuse existing replications.
    """
    alpha = scenario.seller_model.rate
    beta = scenario.buyer_model.rate
    family = scenario.seller_model.family
    params = QueueParams(alpha, beta, scenario.theta, scenario.gamma)
    pmf = poisson_ctmc.stationary_distribution(params, 1e-10)
    if span is None:
        sd = math.sqrt(max(pmf.second_moment() - pmf.mean() ** 2, 1.0))
        span = int(math.ceil(abs(pmf.mean()) + 6.0 * sd))
    states = np.arange(-span, span + 1)

    density = heavy_traffic_density(family, alpha, beta, scenario.theta, scenario.gamma)
    psi_vals = density.pdf(states.astype(float))
    cell_mass = density.cdf(states + 0.5) - density.cdf(states - 0.5)

    poisson_vals = np.array([pmf.prob(int(i)) for i in states])
    if simulated is None:
        simulated = des.estimate(scenario, base_seed)
    sim_vals = np.zeros(len(states))
    inside = np.abs(states) <= simulated.bound
    sim_vals[inside] = simulated.pmf[states[inside] + simulated.bound]

    return DensityComparison(
        states=states,
        psi=np.asarray(psi_vals),
        psi_cell_mass=np.asarray(cell_mass),
        poisson_pmf=poisson_vals,
        simulated_pmf=sim_vals,
    )


def psi_density_grid(
    density: diffusion.PsiDensity,
    lo: float | None = None,
    hi: float | None = None,
    count: int = 1024,
) -> tuple[np.ndarray, np.ndarray]:
    """(x, psi(x)) on a uniform grid; defaults to mean +- 6 sd with 1024 points."""
    if lo is None or hi is None:
        mean = density.mean()
        sd = math.sqrt(max(density.second_moment() - mean**2, 1e-300))
        lo = mean - 6.0 * sd if lo is None else lo
        hi = mean + 6.0 * sd if hi is None else hi
    if not hi > lo:
        raise ConfigError(f"need hi > lo, got [{lo}, {hi}]")
    if count < 2:
        raise ConfigError("grid needs at least 2 points")
    x = np.linspace(lo, hi, count)
    return x, density.pdf(x)


def run_compare_command(config: ComparisonConfig, base_seed: int, out_dir: str | Path) -> list[Path]:
    """Produce comparison tables and per-cell density grids under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    density_dir = out / "density"
    density_dir.mkdir(exist_ok=True)

    rows = []
    written = []
    for cell in _cells(config):
        row, scenario, sim = _run_cell(config, base_seed, *cell)
        rows.append(row)
        comparison = export_density_comparison(scenario, base_seed, simulated=sim)
        mult = row.theta / row.alpha
        name = f"{row.family}_a{row.alpha:g}_b{row.beta:g}_m{mult:g}.csv"
        path = density_dir / name
        path.write_text(comparison.to_csv(), encoding="utf-8")
        written.append(path)

    table_csv = out / "comparison.csv"
    table_csv.write_text(comparison_to_csv(rows), encoding="utf-8")
    table_json = out / "comparison.json"
    table_json.write_text(comparison_to_json(rows), encoding="utf-8")
    return [table_csv, table_json] + written
