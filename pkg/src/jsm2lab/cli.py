"""Command-line front end: bounds tables, simulations, sweeps, verification.

Subcommands: bounds (closed-form report), simulate (one Monte Carlo point),
sweep (grid of points to CSV), find-m (smallest sufficient M search), and
verify (self-check suite of distributional and dominance properties).
Flags can also be supplied through a flat key=value config file; explicit
flags win over file entries. All randomness flows from --seed, which has a
fixed documented default so unseeded runs are still reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import (
    BOUND_REPORT_CSV_HEADER,
    SUFFICIENCY_CSV_HEADER,
    sufficiency_report,
    upper_bound_perr,
)
from .decoder import DEFAULT_ENUMERATION_CAP, projection_residual
from .ensemble import AMPLITUDE_FIXED, AMPLITUDE_MODES, ProblemParams
from .errors import ConfigError, EnumerationBudgetError, Jsm2LabError
from .montecarlo import (
    TrialPlan,
    find_M_star,
    run_trials,
    sweep,
    sweep_csv_lines,
    sweep_metadata,
    trend_residual,
)
from .quadstats import (
    QuadFormSpec,
    laurent_massart_check,
    quadform_mgf,
    sample_quadform,
    sample_z_correct,
    sample_z_incorrect,
    z_I_moments,
    z_J_moments,
)
from .seeding import ROLE_CHECK, derive_rng

DEFAULT_SEED = 24301  # 0x5EED
DEFAULT_TRIALS = 10_000
DEFAULT_RHO = 2.0
DEFAULT_XMIN2 = 1.0
DEFAULT_SIGMA2 = 1.0

_COMMANDS = ("bounds", "simulate", "sweep", "find-m", "verify")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved invocation: command, problem, and run knobs."""

    command: str
    params: Optional[ProblemParams]
    trials: int
    master_seed: int
    jobs: int
    out: Optional[str]
    axis: Optional[str]
    values: Optional[Tuple[float, ...]]
    target: Optional[float]
    amplitude_mode: str
    fix_signal: bool
    x_max: Optional[float]
    enumeration_cap: int


# ---- Flag and config-file parsing ----------------------------------------

_INT_KEYS = {"n", "k", "m", "s", "trials", "seed", "jobs", "cap"}
_FLOAT_KEYS = {"snr", "sigma2", "xmin2", "rho", "delta", "target", "xmax"}
_STR_KEYS = {"axis", "values", "out", "amplitude", "fix-signal"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _add_flags(sub: argparse.ArgumentParser) -> None:
    for key in sorted(_INT_KEYS):
        sub.add_argument(f"--{key}", type=int, default=None)
    for key in sorted(_FLOAT_KEYS):
        sub.add_argument(f"--{key}", type=float, default=None)
    sub.add_argument("--axis", type=str, default=None)
    sub.add_argument("--values", type=str, default=None)
    sub.add_argument("--out", type=str, default=None)
    sub.add_argument("--amplitude", type=str, default=None, choices=AMPLITUDE_MODES)
    sub.add_argument("--fix-signal", type=str, default=None, choices=("true", "false"))
    sub.add_argument("--config", type=str, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jsm2lab",
        description="Support-set recovery experiments for jointly sparse ensembles.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        _add_flags(subs.add_parser(name))
    return parser


def read_config_file(path: str) -> Dict[str, str]:
    """Parse a flat key=value document mirroring the flag names.

    Blank lines and '#' comments are ignored; keys may use '-' or '_'.
    """
    entries: Dict[str, str] = {}
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-") if key == "fix_signal" else key
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def _parse_bool(key: str, value: Optional[str], default: bool) -> bool:
    if value is None:
        return default
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"bad boolean for {key}: {value!r}")


def parse_config(argv: Sequence[str]) -> ExperimentConfig:
    """Turn argv (plus any --config file) into a validated ExperimentConfig."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("invalid command line (see message above)") from exc

    file_map: Dict[str, str] = {}
    if args.config:
        file_map = read_config_file(args.config)

    def pick(key: str):
        attr = key.replace("-", "_")
        flag_value = getattr(args, attr, None)
        if flag_value is not None:
            return flag_value
        return _coerce(key, file_map.get(key))

    command = args.command
    trials = pick("trials") or DEFAULT_TRIALS
    seed = pick("seed")
    seed = DEFAULT_SEED if seed is None else seed
    jobs = pick("jobs") or 1
    cap = pick("cap") or DEFAULT_ENUMERATION_CAP
    amplitude = pick("amplitude") or AMPLITUDE_FIXED
    if amplitude not in AMPLITUDE_MODES:
        raise ConfigError(f"amplitude must be one of {AMPLITUDE_MODES}, got {amplitude!r}")
    fix_signal = _parse_bool("fix-signal", pick("fix-signal"), True)
    x_max = pick("xmax")
    target = pick("target")
    axis = pick("axis")
    values_raw = pick("values")
    values: Optional[Tuple[float, ...]] = None
    if values_raw is not None:
        try:
            values = tuple(float(v) for v in str(values_raw).split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"bad --values list: {values_raw!r}") from exc
        if not values:
            raise ConfigError("--values must list at least one number")

    params = None
    if command != "verify":
        params = _build_params(pick, command, axis, values)

    if command == "sweep":
        if axis is None:
            raise ConfigError("sweep requires --axis (one of m, s, snr, n, k)")
        if values is None:
            raise ConfigError("sweep requires --values")
    if command == "find-m" and target is None:
        raise ConfigError("find-m requires --target")

    return ExperimentConfig(
        command=command,
        params=params,
        trials=int(trials),
        master_seed=int(seed),
        jobs=int(jobs),
        out=pick("out"),
        axis=str(axis).lower() if axis is not None else None,
        values=values,
        target=float(target) if target is not None else None,
        amplitude_mode=amplitude,
        fix_signal=fix_signal,
        x_max=float(x_max) if x_max is not None else None,
        enumeration_cap=int(cap),
    )


def _build_params(pick, command: str, axis: Optional[str], values) -> ProblemParams:
    n, k, m, s = pick("n"), pick("k"), pick("m"), pick("s")
    axis_key = str(axis).lower() if axis is not None else None
    if command == "sweep" and values:
        # The swept field may be omitted; seed it from the first grid value.
        first = values[0]
        if axis_key == "n" and n is None:
            n = int(first)
        elif axis_key == "k" and k is None:
            k = int(first)
        elif axis_key == "m" and m is None:
            m = int(first)
        elif axis_key == "s" and s is None:
            s = int(first)
    if command == "find-m" and m is None and k is not None:
        m = int(k) + 1
    missing = [name for name, v in (("--n", n), ("--k", k), ("--m", m), ("--s", s)) if v is None]
    if missing:
        raise ConfigError(f"{command} requires {', '.join(missing)}")

    snr = pick("snr")
    sigma2 = pick("sigma2")
    xmin2 = pick("xmin2")
    if xmin2 is None:
        xmin2 = DEFAULT_XMIN2
    if snr is not None and sigma2 is not None:
        raise ConfigError("give either --snr or --sigma2, not both")
    if sigma2 is None:
        sigma2 = xmin2 / snr if snr is not None else DEFAULT_SIGMA2
    rho = pick("rho")
    if rho is None:
        rho = DEFAULT_RHO
    try:
        return ProblemParams(
            n=int(n),
            k=int(k),
            m=int(m),
            s=int(s),
            sigma2=float(sigma2),
            xmin2=float(xmin2),
            rho=float(rho),
            delta_override=pick("delta"),
        )
    except Jsm2LabError as exc:
        raise ConfigError(str(exc)) from exc


# ---- Subcommand bodies ----------------------------------------------------


def _emit(text: str, out: Optional[str]) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")
    if out:
        with open(out, "w") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")


def _cmd_bounds(config: ExperimentConfig) -> int:
    params = config.params
    report = upper_bound_perr(params)
    suff = sufficiency_report(params)
    lines = [
        BOUND_REPORT_CSV_HEADER,
        report.csv_row(),
        SUFFICIENCY_CSV_HEADER,
        suff.csv_row(),
        f"below_necessary_m,{str(params.m < suff.M_necessary).lower()}",
    ]
    _emit("\n".join(lines) + "\n", config.out)
    return 0


def _grid_plans(config: ExperimentConfig) -> List[TrialPlan]:
    params = config.params
    plans = []
    for value in config.values:
        try:
            if config.axis == "snr":
                point = replace(params, sigma2=params.xmin2 / float(value))
            else:
                point = replace(params, **{config.axis: int(value)})
        except Jsm2LabError as exc:
            raise ConfigError(f"grid value {config.axis}={value}: {exc}") from exc
        plans.append(
            TrialPlan(
                params=point,
                trials=config.trials,
                master_seed=config.master_seed,
                amplitude_mode=config.amplitude_mode,
                fix_signal=config.fix_signal,
                x_max=config.x_max,
            )
        )
    return plans


def _write_sidecar(csv_path: str, rows, wall: float) -> None:
    with open(csv_path + ".meta.json", "w") as handle:
        json.dump(sweep_metadata(rows, wall), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _cmd_simulate(config: ExperimentConfig) -> int:
    params = config.params
    total = math.comb(params.n, params.k)
    if total > config.enumeration_cap:
        # A single requested point that cannot run is a budget failure,
        # not a recordable partial result like a sweep row.
        raise EnumerationBudgetError(
            f"C({params.n},{params.k}) = {total} exceeds enumeration cap "
            f"{config.enumeration_cap}"
        )
    plan = TrialPlan(
        params=params,
        trials=config.trials,
        master_seed=config.master_seed,
        amplitude_mode=config.amplitude_mode,
        fix_signal=config.fix_signal,
        x_max=config.x_max,
    )
    start = time.monotonic()
    rows = sweep([plan], axis="m", jobs=config.jobs, enumeration_cap=config.enumeration_cap)
    wall = time.monotonic() - start
    text = sweep_csv_lines(rows)
    sys.stdout.write(text)
    if config.out:
        with open(config.out, "w", newline="") as handle:
            handle.write(text)
        _write_sidecar(config.out, rows, wall)
    return 0


def _cmd_sweep(config: ExperimentConfig) -> int:
    plans = _grid_plans(config)
    start = time.monotonic()
    rows = sweep(plans, axis=config.axis, jobs=config.jobs, enumeration_cap=config.enumeration_cap)
    wall = time.monotonic() - start
    text = sweep_csv_lines(rows)
    if config.out:
        with open(config.out, "w", newline="") as handle:
            handle.write(text)
        _write_sidecar(config.out, rows, wall)
        sys.stdout.write(f"wrote {len(rows)} rows to {config.out}\n")
    else:
        sys.stdout.write(text)
    points = [r.rates.event_failure.point for r in rows if r.rates is not None]
    sys.stdout.write(f"trend_residual,{trend_residual(points)!r}\n")
    return 0


def _cmd_find_m(config: ExperimentConfig) -> int:
    result = find_M_star(
        config.params,
        target=config.target,
        trials=config.trials,
        seed=config.master_seed,
        jobs=config.jobs,
        amplitude_mode=config.amplitude_mode,
        fix_signal=config.fix_signal,
        x_max=config.x_max,
        enumeration_cap=config.enumeration_cap,
    )
    lines = [
        f"m_star,{'' if result.m_star is None else result.m_star}",
        f"saturated,{str(result.saturated).lower()}",
        f"non_monotone,{str(result.non_monotone).lower()}",
        f"bracket,{'' if result.bracket is None else '%d:%d' % result.bracket}",
        "m,event_fail,ci_low,ci_high",
    ]
    for m in sorted(result.evaluations):
        est = result.evaluations[m]
        lines.append(f"{m},{est.point!r},{est.ci_low!r},{est.ci_high!r}")
    _emit("\n".join(lines) + "\n", config.out)
    return 0


# ---- Verification suite ----------------------------------------------------


def _verify_rows(seed: int, trials: int) -> List[Tuple[str, float, float, float, bool]]:
    """Run every self-check; rows are (name, observed, reference, margin, ok).

    observed must stay within margin of reference (or below reference +
    margin for one-sided rows). Sample sizes follow the trials knob with
    floors keeping the binomial slack meaningful.
    """
    rows: List[Tuple[str, float, float, float, bool]] = []
    n_samples = max(int(trials), 2000)

    def add(name, observed, reference, margin):
        rows.append((name, float(observed), float(reference), float(margin), bool(abs(observed - reference) <= margin)))

    def add_upper(name, observed, limit, margin):
        rows.append((name, float(observed), float(limit), float(margin), bool(observed <= limit + margin)))

    # Residuals from the factorized projector match the dense solve.
    rng = derive_rng(seed, ROLE_CHECK, 0)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(3, 12))
        k = int(rng.integers(1, m))
        block = rng.standard_normal((m, k))
        y = rng.standard_normal(m)
        sol, _, _, _ = np.linalg.lstsq(block, y, rcond=None)
        dense = float(np.sum((y - block @ sol) ** 2))
        fast = projection_residual(block, y)
        worst = max(worst, abs(fast - dense) / max(1.0, dense))
    add_upper("projector_vs_dense", worst, 0.0, 1e-9)

    # Correct-support statistic: chi-square moments and MGF.
    m, k, s = 6, 2, 3
    mean_ref, var_ref = z_I_moments(m, k, s)
    z = sample_z_correct(m, k, s, n_samples, derive_rng(seed, ROLE_CHECK, 1))
    add("z_correct_mean", z.mean(), mean_ref, 5.0 * math.sqrt(var_ref / n_samples))
    z_var = z.var(ddof=1)
    # Band for the sample variance from the empirical fourth moment.
    centered = z - z.mean()
    var_of_var = np.mean(centered**4) - z_var**2
    add("z_correct_var", z_var, var_ref, 5.0 * math.sqrt(max(var_of_var, 1e-12) / n_samples))
    dof = s * (m - k)
    mgf_ref = (1.0 - 0.2) ** (-dof / 2)
    spec = QuadFormSpec.from_alpha([1.0] * s, m, k)
    add("mgf_closed_form", quadform_mgf(spec, 0.1), mgf_ref, 1e-12)
    q = sample_quadform(spec, n_samples, derive_rng(seed, ROLE_CHECK, 2))
    emp_mgf = float(np.mean(np.exp(0.1 * q)))
    add("mgf_empirical", emp_mgf, mgf_ref, 0.02 * mgf_ref)

    # Incorrect-support statistic moments at heterogeneous energies.
    alphas = (1.0, 3.0)
    mean_ref, var_ref = z_J_moments(alphas, 4, 2)
    zj = sample_z_incorrect(alphas, 4, 2, n_samples, derive_rng(seed, ROLE_CHECK, 3))
    add("z_incorrect_mean", zj.mean(), mean_ref, 5.0 * math.sqrt(var_ref / n_samples))
    centered = zj - zj.mean()
    vj = zj.var(ddof=1)
    var_of_var = np.mean(centered**4) - vj**2
    add("z_incorrect_var", vj, var_ref, 5.0 * math.sqrt(max(var_of_var, 1e-12) / n_samples))

    # Exponential tail inequalities at a homogeneous weight vector.
    check = laurent_massart_check([1.0] * 6, 1.0, n_samples, derive_rng(seed, ROLE_CHECK, 4))
    add_upper("tail_upper_rate", check.upper_rate, check.bound, check.allowance)
    add_upper("tail_lower_rate", check.lower_rate, check.bound, check.allowance)

    # Closed-form dominance and identities on a random parameter grid.
    rng = derive_rng(seed, ROLE_CHECK, 5)
    worst_p1 = -math.inf
    worst_p2 = -math.inf
    worst_d2 = 0.0
    worst_mu = 0.0
    for _ in range(200):
        n = int(rng.integers(6, 64))
        k = int(rng.integers(1, 5))
        m = int(rng.integers(k + 1, min(n, k + 12) + 1))
        s = int(rng.integers(1, 9))
        sigma2 = float(10.0 ** rng.uniform(-2, 1))
        xmin2 = float(10.0 ** rng.uniform(-1, 2))
        rho = float(rng.uniform(1.2, 4.0))
        p = ProblemParams(n=n, k=k, m=m, s=s, sigma2=sigma2, xmin2=xmin2, rho=rho)
        rep = upper_bound_perr(p)
        worst_p1 = max(worst_p1, rep.log_p_d1 - rep.log_p1_exp)
        worst_p2 = max(worst_p2, rep.log_p_d2 - rep.log_p2_exp)
        worst_d2 = max(worst_d2, abs(rep.d2_alpha_star - (1.0 - rep.t)))
        scale = 1.0 + abs(rep.log_p_d1) + abs(rep.log_p_d2)
        worst_mu = max(
            worst_mu,
            abs(rep.log_p_d1 - p.s * rep.log_mu_I) / scale,
            abs(rep.log_p_d2 - p.s * rep.log_mu_J) / scale,
        )
    add_upper("dominance_exp_vs_correct_tail", worst_p1, 0.0, 1e-12)
    add_upper("dominance_exp_vs_incorrect_tail", worst_p2, 0.0, 1e-12)
    add_upper("gap_identity_d2", worst_d2, 0.0, 1e-12)
    add_upper("per_vector_factor_identity", worst_mu, 0.0, 1e-9)
    return rows


def _cmd_verify(config: ExperimentConfig) -> int:
    rows = _verify_rows(config.master_seed, config.trials)
    lines = ["name,observed,reference,margin,status"]
    for name, observed, reference, margin, ok in rows:
        lines.append(f"{name},{observed!r},{reference!r},{margin!r},{'pass' if ok else 'fail'}")
    _emit("\n".join(lines) + "\n", config.out)
    return 0 if all(row[4] for row in rows) else 3


def run(config: ExperimentConfig) -> int:
    """Dispatch a parsed config; returns the process exit code."""
    handlers = {
        "bounds": _cmd_bounds,
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "find-m": _cmd_find_m,
        "verify": _cmd_verify,
    }
    return handlers[config.command](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
