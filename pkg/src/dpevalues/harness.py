"""Experiment orchestration: configs, paired trials, ECDF tables, validation checks."""

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .batch import calibrate_for, mixed_log_statistic
from .distributions import TestingPair, bernoulli, parse_distribution
from .dpsprt import DpSprt, DpSprtConfig
from .errors import ConfigError, DPEvalueError, ZeroRate
from .optimal import bernoulli_dual_rate, optimal_evariable, rate
from .rng import ObservationStream, derive_seed
from .sequential import (
    build_schedule,
    batch_null_mean,
    run_two_sided_test,
    simulate_finite_paths,
    stopping_time_lower_bound,
    two_sided_processes,
)
from .tslr import STATISTICS, tslr_evariable

log = logging.getLogger(__name__)

MODES = ("rate", "batch", "sequential", "compare", "validate")
TRIAL_FIELDS = ["method", "epsilon", "q", "trial", "decision", "N", "log_e", "seed", "censored"]


@dataclass
class ExperimentConfig:
    null: str = "bernoulli p=0.3"
    epsilons: tuple = (0.5, 1.0, 2.0, 5.0)
    qs: tuple = (0.5, 0.6, 0.7, 0.9)
    alpha: float = 1 / 40
    beta: float = 1 / 40
    rho: float = 3.0
    trials: int = 100
    max_n: int = 10**5
    seed: int = 0
    output_dir: str = "results"
    mode: str = "compare"
    statistic: str = "auto"
    workers: int = 1
    mc_trials: int = 20000

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1 or self.mc_trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.epsilons or not self.qs:
            raise ConfigError("epsilon and q grids must be nonempty")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError("all epsilon values must be positive")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ConfigError("alpha and beta must lie in (0, 1)")
        if not self.rho > 1:
            raise ConfigError("rho must exceed 1")
        if self.max_n < 1:
            raise ConfigError("max_n must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.statistic not in STATISTICS:
            raise ConfigError(f"statistic must be one of {STATISTICS}")
        try:
            parse_distribution(self.null)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, values):
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = _coerce(key, raw, types[key])
        return cls(**kw)

    def updated(self, **overrides):
        clean = {k: v for k, v in overrides.items() if v is not None}
        try:
            return replace(self, **clean)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _coerce(key, raw, typ):
    if not isinstance(raw, str):
        return tuple(raw) if typ is tuple else raw
    try:
        if typ is tuple:
            return tuple(_parse_number(v) for v in raw.strip("[]()").split(",") if v.strip())
        if typ is int:
            return int(float(raw))
        if typ is float:
            return _parse_number(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw.strip().strip('"')


def _parse_number(text):
    text = text.strip()
    if "/" in text:
        a, b = text.split("/")
        return float(a) / float(b)
    return float(text)


def parse_config_text(text):
    """``key = value`` lines; ``#`` starts a comment, lists are comma-separated."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path=None, **overrides):
    base = {}
    if path is not None:
        try:
            with open(path) as fh:
                base = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(base)


@dataclass
class TrialRecord:
    method: str
    epsilon: float
    q: float
    trial: int
    decision: str
    N: int
    log_e: float
    seed: int
    censored: bool

    def row(self):
        return [self.method, _fmt(self.epsilon), _fmt(self.q), self.trial, self.decision, self.N,
                _fmt(self.log_e), self.seed, int(self.censored)]


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def alternate_pair(config, q):
    null = parse_distribution(config.null)
    return TestingPair(null, bernoulli(q))


class TwoSidedEProcess:
    """The private two-sided e-process test behind the common method interface."""

    name = "eprocess"

    def __init__(self, pair, epsilon, rho, alpha, beta, max_n, statistic="auto"):
        self.args = (epsilon, rho, alpha, beta)
        self.statistic = statistic
        self.processes = two_sided_processes(pair, epsilon, rho, statistic=statistic, horizon=max_n)

    def run(self, pair, stream, max_n, seed):
        eps, rho, alpha, beta = self.args
        return run_two_sided_test(pair, eps, rho, alpha, beta, stream, max_n, seed=seed,
                                  statistic=self.statistic, processes=self.processes)


def _run_cell(args):
    config, i_eps, eps, i_q, q = args
    pair = alternate_pair(config, q)
    methods = [
        TwoSidedEProcess(pair, eps, config.rho, config.alpha, config.beta, config.max_n, config.statistic),
        DpSprt(DpSprtConfig.auto(eps, config.alpha, config.beta)),
    ]
    records = []
    for trial in range(config.trials):
        seed = derive_seed(config.seed, i_eps, i_q, trial)
        stream = ObservationStream(pair.alt, derive_seed(seed, 0))
        for method in methods:
            try:
                res = method.run(pair, stream, config.max_n, seed)
                records.append(TrialRecord(method.name, eps, q, trial, res.decision, res.stopping_time,
                                           res.log_e, seed, res.censored))
            except DPEvalueError as exc:
                log.warning("trial %d (%s) failed: %s", trial, method.name, exc)
                records.append(TrialRecord(method.name, eps, q, trial, f"error:{type(exc).__name__}",
                                           config.max_n, float("nan"), seed, True))
    return records


def ecdf_table(n_a, censored_a, n_b, censored_b):
    """Right-continuous ECDFs of two samples on the union of their stopping times.

    Censored runs count as not yet stopped, so F can stay below one.
    """
    n_a, n_b = np.asarray(n_a), np.asarray(n_b)
    ca, cb = np.asarray(censored_a, bool), np.asarray(censored_b, bool)
    grid = np.unique(np.concatenate([n_a, n_b]))
    fa = np.array([np.mean((n_a <= g) & ~ca) for g in grid])
    fb = np.array([np.mean((n_b <= g) & ~cb) for g in grid])
    return grid, fa, fb


@dataclass
class CompareResult:
    records: list
    cells: list = field(default_factory=list)
    output_dir: Optional[str] = None

    @property
    def dominance_fraction(self):
        return float(np.mean([c["dominates"] for c in self.cells]))


def run_compare(config, write=True):
    """Paired two-sided e-process vs DP-SPRT trials over the (epsilon, q) grid."""
    tasks = [(config, i, e, j, q) for i, e in enumerate(config.epsilons) for j, q in enumerate(config.qs)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    else:
        chunks = [_run_cell(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]

    cells = []
    for _, eps, _, q in [(t[1], t[2], t[3], t[4]) for t in tasks]:
        ep = [r for r in records if r.epsilon == eps and r.q == q and r.method == "eprocess"]
        dp = [r for r in records if r.epsilon == eps and r.q == q and r.method == "dpsprt"]
        med_e = float(np.median([r.N for r in ep]))
        med_d = float(np.median([r.N for r in dp]))
        grid, fe, fd = ecdf_table([r.N for r in ep], [r.censored for r in ep],
                                  [r.N for r in dp], [r.censored for r in dp])
        cells.append({
            "epsilon": eps, "q": q, "median_eprocess": med_e, "median_dpsprt": med_d,
            "dominates": med_e < med_d, "ecdf": (grid, fe, fd),
            "decided_eprocess": float(np.mean([not r.censored for r in ep])),
            "accept_q_eprocess": float(np.mean([r.decision == "accept-Q" for r in ep])),
            "accept_q_dpsprt": float(np.mean([r.decision == "accept-Q" for r in dp])),
        })
    result = CompareResult(records, cells)
    if write:
        result.output_dir = write_compare_outputs(config, result)
    return result


def _cell_tag(x):
    return f"{x:g}"


def write_compare_outputs(config, result):
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "trials.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_FIELDS)
        for r in result.records:
            w.writerow(r.row())
    for cell in result.cells:
        grid, fe, fd = cell["ecdf"]
        name = f"ecdf_{_cell_tag(cell['epsilon'])}_{_cell_tag(cell['q'])}.csv"
        with open(os.path.join(out, name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "F_eprocess", "F_dpsprt"])
            for g, a, b in zip(grid, fe, fd):
                w.writerow([int(g), repr(float(a)), repr(float(b))])
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(compare_report(config, result))
    try:
        _plot_ecdfs(config, result, out)
    except Exception as exc:  # plots are optional; CSVs are the contract
        log.warning("plotting failed, CSV output only: %s", exc)
    return out


def compare_report(config, result):
    buf = io.StringIO()
    buf.write(f"null: {config.null}  alpha={config.alpha:g} beta={config.beta:g} rho={config.rho:g} "
              f"trials={config.trials} max_n={config.max_n} seed={config.seed}\n")
    buf.write("epsilon  q      median_N_eprocess  median_N_dpsprt  eprocess_faster  "
              "decided_eprocess  accept_Q_eprocess  accept_Q_dpsprt\n")
    for c in result.cells:
        buf.write(f"{c['epsilon']:<8g} {c['q']:<6g} {c['median_eprocess']:>17g}  {c['median_dpsprt']:>15g}  "
                  f"{str(c['dominates']):>15}  {c['decided_eprocess']:>16.3f}  "
                  f"{c['accept_q_eprocess']:>17.3f}  {c['accept_q_dpsprt']:>15.3f}\n")
    buf.write(f"cells where the e-process median is smaller: {result.dominance_fraction:.1%}\n")
    return buf.getvalue()


def _plot_ecdfs(config, result, out):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "dpevalues"
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for q in config.qs:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for k, cell in enumerate(c for c in result.cells if c["q"] == q):
            grid, fe, fd = cell["ecdf"]
            color = colors[k % len(colors)]
            ax.step(grid, fe, where="post", color=color, label=f"eps={cell['epsilon']:g}")
            ax.step(grid, fd, where="post", color=color, linestyle="--")
        ax.set_xscale("log")
        ax.set_xlabel("stopping time N")
        ax.set_ylabel("empirical CDF")
        ax.set_title(f"q = {q:g} (solid: e-process, dashed: DP-SPRT)")
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(os.path.join(out, f"ecdf_q{_cell_tag(q)}.svg"), metadata={"Date": None})
        plt.close(fig)


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def text(self):
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status}  {c.name}: measured={c.measured:.6g} tolerance={c.tolerance:.6g} {c.detail}")
        lines.append("all checks passed" if self.passed else "validation FAILED")
        return "\n".join(lines) + "\n"


def run_validate(config=None, fault=None):
    """Cross-module oracle checks. ``fault='omit_compensator'`` injects a known bug."""
    config = config or ExperimentConfig(mode="validate")
    if fault not in (None, "omit_compensator"):
        raise ConfigError(f"unknown fault {fault!r}")
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    checks = []

    for eps in (0.25, 1.0, 4.0):
        primal = rate(pair, eps)
        dual, _ = bernoulli_dual_rate(0.3, 0.7, eps)
        err = abs(primal - dual)
        checks.append(Check(f"duality eps={eps:g}", err, 1e-6, err <= 1e-6))

    for eps in (0.5, 1.0, 2.0):
        ev = optimal_evariable(pair, eps)
        err = abs(ev.null_mean() - 1.0)
        checks.append(Check(f"E^P[E*]=1 eps={eps:g}", err, 1e-10, err <= 1e-10))
        tv = tslr_evariable(pair, eps)
        m = tv.null_mean()
        checks.append(Check(f"E^P[tsLR]<=1 eps={eps:g}", m, 1.0, m <= 1.0 + 1e-12))

    # batch release: null mean with the Laplace factor integrated out
    ev = optimal_evariable(pair, 1.0)
    n = 50
    cal = calibrate_for(ev, 1.0, n)
    comp = 0.0 if fault == "omit_compensator" else cal.compensator
    rng = np.random.default_rng(derive_seed(config.seed, 900))
    ones = rng.binomial(n, float(pair.null.probs[-1]), size=config.mc_trials)
    lam = cal.lam
    e1, e0 = ev(np.array([1.0]))[0], ev(np.array([0.0]))[0]
    stat = ones * np.log1p(lam * (e1 - 1)) + (n - ones) * np.log1p(lam * (e0 - 1))
    vals = np.exp(stat - math.log1p(-cal.b**2) - comp)
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(len(vals))
    checks.append(Check("batch null mean <= 1+3SE", mean, 1 + 3 * se, mean <= 1 + 3 * se,
                        f"(n={n}, {config.mc_trials} trials, noise integrated)"))

    # sensitivity audit on neighbouring datasets
    worst = 0.0
    for k in range(1000):
        r = np.random.default_rng(derive_seed(config.seed, 901, k))
        x = r.integers(0, 2, size=n).astype(float)
        y = x.copy()
        j = r.integers(n)
        y[j] = 1.0 - x[j]
        d = abs(mixed_log_statistic(ev(x), lam) - mixed_log_statistic(ev(y), lam))
        worst = max(worst, d)
    bound = cal.b * cal.epsilon * (1 + 1e-12)
    checks.append(Check("batch sensitivity <= b*eps", worst, bound, worst <= bound))

    for mu in (0.01, 0.1, 0.5):
        for rho in (1.5, 3.0, 10.0):
            s = build_schedule(1.0, 1.0, mu, rho)
            err = max(abs(s.t[j - 1] - s.closed_form(j)) / s.closed_form(j) for j in range(1, 21))
            checks.append(Check(f"schedule closed form mu={mu:g} rho={rho:g}", err, 1e-6, err <= 1e-6))

    ev1 = optimal_evariable(pair, 1.0)
    sched = build_schedule(1.0, 1.0, ev1.mu, config.rho)
    worst = max(batch_null_mean(ev1, sched, int(m)) for m in sched.batch_sizes()[:10])
    checks.append(Check("e-process batch factor E^P <= 1", worst, 1.0, worst <= 1.0 + 1e-12))

    if fault == "omit_compensator":
        sched = replace(sched, compensator=0.0)
    # Laplace factors integrated out: each boundary multiplies the mean by 1/(1-(lam c)^2)
    b, noise_free = simulate_finite_paths(sched, ev1, pair.null, config.mc_trials,
                                          derive_seed(config.seed, 902), horizon=1000, noise=False)
    k = np.arange(1, len(b) + 1)
    vals = np.exp(noise_free - k * math.log1p(-sched.noise_scale**2))
    means, ses = vals.mean(0), vals.std(0, ddof=1) / math.sqrt(len(vals))
    excess = float(np.max(means - (1 + 3 * ses)))
    checks.append(Check("e-process null mean <= 1+3SE at all boundaries", float(means.max()), 1.0,
                        excess <= 0, f"(boundaries up to {b[-1]})"))
    return ValidationReport(checks)


@dataclass
class PlanReport:
    rate: float
    bound: float
    t1: float
    lam: float
    alpha: float
    beta: float
    epsilon: float
    rho: float

    def text(self):
        return (f"rate (nats/sample) at eps={self.epsilon:g}: {self.rate:.6g}\n"
                f"expected stopping time lower bound (alpha={self.alpha:g}, beta={self.beta:g}): "
                f"{self.bound:.6g}\n"
                f"minimum stopping time t1 at rho={self.rho:g}: {self.t1:.6g} (lambda={self.lam:.6g})\n")


def plan(alpha, beta, pair, epsilon, rho=3.0):
    """Rate, stopping-time lower bound and minimum stopping time for a design."""
    r = rate(pair, epsilon)
    if r <= 1e-300:
        return PlanReport(r, math.inf, math.inf, float("nan"), alpha, beta, epsilon, rho)
    try:
        bound = stopping_time_lower_bound(alpha, beta, r)
    except ZeroRate:
        bound = math.inf
    s = build_schedule(1.0, epsilon, r, rho, horizon=1)
    return PlanReport(r, bound, s.t1, s.lam, alpha, beta, epsilon, rho)
