"""Batch experiment driver.

Subcommands:

* ``qi-check`` - report whether the configured policy subspace is
  quadratically invariant for the configured plant (exit 0 iff it is).
* ``solve``    - model-based global optimum via the convex reformulation
  (or damped Newton on f with ``--direct``); writes solution.json.
* ``learn``    - one-point zeroth-order runs, one CSV per seed plus a
  summary.json with final optimality gaps.
* ``sweep``    - precision sweep: for each target accuracy, scaled
  (eta, r) runs measured by first passage of the true gap; writes
  sweep.csv with empirical and theoretical step counts.
* ``probe``    - numeric estimates of the theory constants (mu, tau,
  mu_delta, L_delta, M_delta, D) and the theoretical schedule; writes
  constants.json.

All commands read a JSON config (``--config``).  Unknown keys anywhere in
the config are rejected.  Every CSV starts with a comment line carrying
the config hash and the seed(s) that produced it, making outputs
self-identifying and bitwise reproducible.

Exit codes: 0 success, 2 config error, 3 precondition (e.g. non-QI)
error, 4 internal-consistency error, 1 run failure under ``--strict``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .cost import CostContext, f_of_z, fd_hessian
from .fixtures import FIXTURES, Fixture, get_fixture
from .learner import (DivergenceError, LearnerConfig, ScheduleConstants,
                      ScheduleError, compute_D, compute_schedule, learn,
                      noise_floor)
from .oracle import (OracleError, SamplingError, estimate_gd_constants,
                     estimate_smoothness, newton_minimize_f, solve_qi_oracle)
from .policy_space import (SparsityPattern, SubspaceBasis, basis_from_pattern,
                           causal_mask, qi_check_detailed)
from .system import NoiseModel, SystemSpec, assemble_block_operators

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_INTERNAL = 4


class ConfigError(ValueError):
    """Invalid experiment configuration; `where` names the offending field."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _require_keys(block: dict, allowed: set[str], required: set[str],
                  where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} "
                          f"(allowed: {sorted(allowed)})", where)
    missing = required - set(block)
    if missing:
        raise ConfigError(f"missing required keys {sorted(missing)}", where)


def _matrix_seq(raw, count: int, where: str) -> list:
    """A single matrix (replicated over time) or a list of per-time matrices."""
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 2:
        return [arr] * count
    if arr.ndim == 3:
        if arr.shape[0] != count:
            raise ConfigError(
                f"expected {count} matrices, got {arr.shape[0]}", where)
        return list(arr)
    raise ConfigError("expected a matrix or a list of matrices", where)


@dataclass(frozen=True)
class LearnerSettings:
    eta: float
    r: float
    T: int
    seeds: tuple[int, ...]
    z0: Optional[np.ndarray]
    oracle_minus: Optional[np.ndarray]
    log_true_cost_every: int


@dataclass(frozen=True)
class SweepSettings:
    epsilons: tuple[float, ...]
    runs: int
    delta: float
    check_every: int
    max_iters: Optional[int]
    constants_samples: int
    constants_seed: int
    rho0: float


@dataclass(frozen=True)
class ProbeSettings:
    delta: float
    epsilon: float
    n_samples: int
    rho0: float
    seed: int
    gap0: Optional[float]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description."""

    fixture: Fixture
    learner: Optional[LearnerSettings]
    sweep: Optional[SweepSettings]
    probe: Optional[ProbeSettings]
    out_dir: Path
    formats: tuple[str, ...]
    csv_stride: int
    resolved: dict
    config_hash: str

    @property
    def ctx(self) -> CostContext:
        return CostContext(ops=self.fixture.ops, basis=self.fixture.basis)


def _parse_system(block: dict, noise: NoiseModel) -> SystemSpec:
    _require_keys(block, {"N", "n", "m", "p", "A", "B", "C", "M", "R", "mu0",
                          "fixture"},
                  {"N", "n", "m", "p", "A", "B", "C", "M", "R", "mu0"},
                  "system")
    N = int(block["N"])
    try:
        return SystemSpec(
            N=N, n=int(block["n"]), m=int(block["m"]), p=int(block["p"]),
            A_seq=_matrix_seq(block["A"], N + 1, "system.A"),
            B_seq=_matrix_seq(block["B"], N, "system.B"),
            C_seq=_matrix_seq(block["C"], N + 1, "system.C"),
            M_seq=_matrix_seq(block["M"], N + 1, "system.M"),
            R_seq=_matrix_seq(block["R"], N, "system.R"),
            mu0=np.asarray(block["mu0"], dtype=float),
            noise=noise,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "system") from exc


def _parse_pattern(block: dict, spec: SystemSpec) -> SubspaceBasis:
    _require_keys(block, {"S", "causal", "fixture"}, set(), "pattern")
    if block.get("causal"):
        return basis_from_pattern(causal_mask(spec.N, spec.m, spec.p))
    if "S" in block:
        S = np.asarray(block["S"])
        try:
            pattern = SparsityPattern(S=S, m=spec.m, p=spec.p, N=spec.N)
            return basis_from_pattern(pattern)
        except ValueError as exc:
            raise ConfigError(str(exc), "pattern.S") from exc
    raise ConfigError("need one of 'S', 'causal: true' or 'fixture'",
                      "pattern")


def _parse_noise(block: dict) -> NoiseModel:
    _require_keys(block, {"delta0_halfwidth", "w_halfwidth", "v_halfwidth"},
                  {"delta0_halfwidth", "w_halfwidth", "v_halfwidth"}, "noise")
    try:
        return NoiseModel(delta0_halfwidth=float(block["delta0_halfwidth"]),
                          w_halfwidth=float(block["w_halfwidth"]),
                          v_halfwidth=float(block["v_halfwidth"]))
    except ValueError as exc:
        raise ConfigError(str(exc), "noise") from exc


def _parse_learner(block: dict) -> LearnerSettings:
    _require_keys(block, {"eta", "r", "T", "seeds", "z0", "oracle_minus",
                          "log_true_cost_every"},
                  {"eta", "r", "T", "seeds"}, "learner")
    if ("z0" in block) == ("oracle_minus" in block):
        raise ConfigError("exactly one of 'z0' and 'oracle_minus' is required",
                          "learner")
    seeds = tuple(int(s) for s in block["seeds"])
    if not seeds:
        raise ConfigError("seeds list is empty", "learner.seeds")
    return LearnerSettings(
        eta=float(block["eta"]), r=float(block["r"]), T=int(block["T"]),
        seeds=seeds,
        z0=None if "z0" not in block else np.asarray(block["z0"], dtype=float),
        oracle_minus=None if "oracle_minus" not in block
        else np.asarray(block["oracle_minus"], dtype=float),
        log_true_cost_every=int(block.get("log_true_cost_every", 0)),
    )


def _parse_sweep(block: dict) -> SweepSettings:
    _require_keys(block, {"epsilons", "runs", "delta", "check_every",
                          "max_iters", "constants_samples", "constants_seed",
                          "rho0"},
                  {"epsilons", "runs"}, "sweep")
    epsilons = tuple(float(e) for e in block["epsilons"])
    if len(epsilons) < 1:
        raise ConfigError("epsilon list is empty", "sweep.epsilons")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ConfigError("epsilon list must be strictly descending",
                          "sweep.epsilons")
    return SweepSettings(
        epsilons=epsilons, runs=int(block["runs"]),
        delta=float(block.get("delta", 0.5)),
        check_every=int(block.get("check_every", 10)),
        max_iters=None if "max_iters" not in block else int(block["max_iters"]),
        constants_samples=int(block.get("constants_samples", 100)),
        constants_seed=int(block.get("constants_seed", 0)),
        rho0=float(block.get("rho0", 1.0)),
    )


def _parse_probe(block: dict) -> ProbeSettings:
    _require_keys(block, {"delta", "epsilon", "n_samples", "rho0", "seed",
                          "gap0"}, set(), "probe")
    return ProbeSettings(
        delta=float(block.get("delta", 0.5)),
        epsilon=float(block.get("epsilon", 0.1)),
        n_samples=int(block.get("n_samples", 200)),
        rho0=float(block.get("rho0", 1.0)),
        seed=int(block.get("seed", 0)),
        gap0=None if block.get("gap0") is None else float(block["gap0"]),
    )


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict and resolve it into runnable objects."""
    _require_keys(raw, {"fixture", "system", "pattern", "noise", "learner",
                        "sweep", "probe", "output"}, set(), "config")

    if "fixture" in raw:
        name = raw["fixture"]
        if name not in FIXTURES:
            raise ConfigError(f"unknown fixture {name!r} "
                              f"(known: {sorted(FIXTURES)})", "fixture")
        for key in ("system", "pattern", "noise"):
            if key in raw:
                raise ConfigError(
                    f"'{key}' block conflicts with the named fixture",
                    key)
        fixture = get_fixture(name)
    else:
        for key in ("system", "pattern", "noise"):
            if key not in raw:
                raise ConfigError(f"missing '{key}' block (or use 'fixture')",
                                  key)
        noise = _parse_noise(raw["noise"])
        spec = _parse_system(raw["system"], noise)
        basis = _parse_pattern(raw["pattern"], spec)
        fixture = Fixture(name="custom", spec=spec, basis=basis,
                          ops=assemble_block_operators(spec))

    learner = _parse_learner(raw["learner"]) if "learner" in raw else None
    sweep = _parse_sweep(raw["sweep"]) if "sweep" in raw else None
    probe = _parse_probe(raw["probe"]) if "probe" in raw else None

    out_block = raw.get("output", {})
    _require_keys(out_block, {"directory", "formats", "csv_stride"}, set(),
                  "output")
    out_dir = Path(out_block.get("directory", "out"))
    formats = tuple(out_block.get("formats", ("csv", "json")))
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {fmt!r}", "output.formats")
    csv_stride = int(out_block.get("csv_stride", 1))
    if csv_stride < 1:
        raise ConfigError("csv_stride must be >= 1", "output.csv_stride")

    resolved = json.loads(json.dumps(raw, sort_keys=True))
    config_hash = hashlib.sha256(
        json.dumps(resolved, sort_keys=True, separators=(",", ":"))
        .encode()).hexdigest()
    return ExperimentConfig(fixture=fixture, learner=learner, sweep=sweep,
                            probe=probe, out_dir=out_dir, formats=formats,
                            csv_stride=csv_stride, resolved=resolved,
                            config_hash=config_hash)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON text of a parsed config; parse(serialize(.)) is identity."""
    return json.dumps(cfg.resolved, sort_keys=True, indent=2)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    return parse_config(raw)


def _resolve_z0(cfg: ExperimentConfig) -> tuple[np.ndarray, Optional[float]]:
    """Starting point and, when obtainable, the true optimum J*."""
    settings = cfg.learner
    d = cfg.fixture.basis.d
    if settings.z0 is not None:
        z0 = settings.z0
        if z0.shape != (d,):
            raise ConfigError(f"z0 has {z0.size} entries, subspace needs {d}",
                              "learner.z0")
        try:
            j_star = solve_qi_oracle(cfg.ctx).J_star
        except OracleError:
            j_star = None
        return z0, j_star
    offset = settings.oracle_minus
    if offset.shape != (d,):
        raise ConfigError(
            f"oracle_minus has {offset.size} entries, subspace needs {d}",
            "learner.oracle_minus")
    sol = solve_qi_oracle(cfg.ctx)
    return sol.z_star - offset, sol.J_star


def _format_float(x: float) -> str:
    return "" if x != x else repr(float(x))


def _write_run_csv(path: Path, log, config_hash: str, with_f_true: bool,
                   stride: int) -> None:
    lines = [f"# config_hash={config_hash} seed={log.seed}"]
    header = "iter,f_hat,z_norm" + (",f_true" if with_f_true else "")
    lines.append(header)
    for idx in range(0, log.iters.size, stride):
        row = (f"{log.iters[idx]},{_format_float(log.f_hat[idx])},"
               f"{_format_float(log.z_norm[idx])}")
        if with_f_true:
            row += f",{_format_float(log.f_true[idx])}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n")


def _ensure_out(cfg: ExperimentConfig, override: Optional[str]) -> Path:
    out = Path(override) if override else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_qi_check(cfg: ExperimentConfig, args) -> int:
    verdict = qi_check_detailed(cfg.fixture.basis, cfg.fixture.ops.CP12)
    d = cfg.fixture.basis.d
    if verdict.qi:
        print(f"QI: true, d={d}")
        return EXIT_OK
    i, j = verdict.witness
    print(f"QI: false, d={d}")
    print(f"witness: basis pair ({i}, {j}) leaves the subspace with "
          f"relative residual {verdict.witness_residual:.3e}")
    return EXIT_PRECONDITION


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    out = _ensure_out(cfg, args.out)
    if args.direct:
        d = cfg.fixture.basis.d
        result = newton_minimize_f(cfg.ctx, np.zeros(d))
        if not result.converged:
            print(f"newton did not converge: ||grad|| = {result.grad_norm:.3e}"
                  f" after {result.iterations} iterations", file=sys.stderr)
            return EXIT_INTERNAL
        payload = {
            "method": "newton",
            "J_star": result.f,
            "z_star": result.z.tolist(),
            "grad_norm": result.grad_norm,
            "iterations": result.iterations,
            "config_hash": cfg.config_hash,
        }
        print(f"J_star = {result.f:.6f} (direct)")
    else:
        try:
            sol = solve_qi_oracle(cfg.ctx)
        except OracleError as exc:
            print(f"error: {exc}\nhint: pass --direct to minimize f without "
                  "the convex reformulation", file=sys.stderr)
            return EXIT_PRECONDITION
        mu = float(np.linalg.eigvalsh(2.0 * sol.quadratic.G).min())
        payload = {
            "method": "qi-oracle",
            "J_star": sol.J_star,
            "z_star": sol.z_star.tolist(),
            "q_star": sol.q_star.tolist(),
            "K_star": sol.K_star.tolist(),
            "mu": mu,
            "config_hash": cfg.config_hash,
        }
        print(f"J_star = {sol.J_star:.6f}")
    if "json" in cfg.formats:
        (out / "solution.json").write_text(json.dumps(payload, indent=2)
                                           + "\n")
    return EXIT_OK


def _learn_one(fixture: Fixture, settings: LearnerSettings, z0: np.ndarray,
               seed: int):
    config = LearnerConfig(eta=settings.eta, r=settings.r, T=settings.T,
                           z0=z0, seed=seed,
                           log_true_cost_every=settings.log_true_cost_every)
    try:
        _, log = learn(fixture, config)
        return seed, log, None
    except DivergenceError as exc:
        return seed, exc.log, str(exc)


def _run_seeds(fixture, settings, z0, seeds, jobs):
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_learn_one, fixture, settings, z0, s)
                       for s in seeds]
            results = [f.result() for f in futures]
    else:
        results = [_learn_one(fixture, settings, z0, s) for s in seeds]
    return sorted(results, key=lambda item: item[0])


def cmd_learn(cfg: ExperimentConfig, args) -> int:
    if cfg.learner is None:
        print("error: config has no 'learner' block", file=sys.stderr)
        return EXIT_CONFIG
    out = _ensure_out(cfg, args.out)
    try:
        z0, j_star = _resolve_z0(cfg)
    except OracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    settings = cfg.learner
    ctx = cfg.ctx
    results = _run_seeds(cfg.fixture, settings, z0, settings.seeds, args.jobs)

    with_f_true = settings.log_true_cost_every > 0
    summary_runs = []
    failed = 0
    for seed, log, error in results:
        if "csv" in cfg.formats:
            _write_run_csv(out / f"run_{seed}.csv", log, cfg.config_hash,
                           with_f_true, cfg.csv_stride)
        final_f = None if error else f_of_z(ctx, log.z_final)
        entry = {
            "seed": seed,
            "iterations": int(log.iters.size),
            "final_f": final_f,
            "final_gap": (None if final_f is None or j_star is None
                          else final_f - j_star),
            "diverged": bool(log.diverged),
            "wall_time_s": log.wall_time,
        }
        if error:
            entry["error"] = error
            failed += 1
        summary_runs.append(entry)

    summary = {
        "fixture": cfg.fixture.name,
        "config_hash": cfg.config_hash,
        "J_star": j_star,
        "eta": settings.eta,
        "r": settings.r,
        "T": settings.T,
        "z0": z0.tolist(),
        "runs": summary_runs,
    }
    if "json" in cfg.formats:
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    gaps = [run["final_gap"] for run in summary_runs
            if run["final_gap"] is not None]
    if gaps:
        print(f"{len(gaps)} runs, final gap median "
              f"{float(np.median(gaps)):.4g}, max {max(gaps):.4g}")
    if failed:
        print(f"{failed} run(s) diverged", file=sys.stderr)
        if args.strict:
            return EXIT_RUN_FAILURE
    return EXIT_OK


def _estimate_schedule_constants(cfg: ExperimentConfig, delta: float,
                                 rho0: float, n_samples: int, seed: int,
                                 z0: np.ndarray, j_star: float
                                 ) -> ScheduleConstants:
    ctx = cfg.ctx
    spec = cfg.fixture.spec
    f_z0 = f_of_z(ctx, z0)
    gap0 = max(f_z0 - j_star, 1e-12)
    sol_center = None
    gd = estimate_gd_constants(ctx, delta, j_star, n_samples,
                               np.random.default_rng(seed), gap0=gap0)
    smooth = estimate_smoothness(ctx, delta, j_star, n_samples, rho0,
                                 np.random.default_rng(seed + 1), gap0=gap0)
    W, V, lam_w, lam_v = noise_floor(spec.noise, spec.n, spec.p, spec.N)
    return ScheduleConstants(
        mu_delta=gd.mu_delta, L_delta=smooth.L_delta,
        M_delta=smooth.M_delta, rho0=rho0,
        D=compute_D(spec.noise, spec.n, spec.p, spec.N),
        W=W, V=V, lambda_w=lam_w, lambda_v=lam_v,
        f_z0=f_z0, Delta0=gap0, d=cfg.fixture.basis.d)


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    if cfg.learner is None or cfg.sweep is None:
        print("error: sweep needs both 'learner' and 'sweep' blocks",
              file=sys.stderr)
        return EXIT_CONFIG
    out = _ensure_out(cfg, args.out)
    sweep = cfg.sweep
    try:
        z0, j_star = _resolve_z0(cfg)
        if j_star is None:
            raise OracleError("sweep needs the true optimum as referee; "
                              "the fixture must be QI")
        constants = _estimate_schedule_constants(
            cfg, sweep.delta, sweep.rho0, sweep.constants_samples,
            sweep.constants_seed, z0, j_star)
    except (OracleError, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    settings = cfg.learner
    base_eps = sweep.epsilons[0]
    max_iters = sweep.max_iters if sweep.max_iters is not None else settings.T
    seeds = list(range(sweep.runs))
    rows = []
    for eps in sweep.epsilons:
        ratio = eps / base_eps
        eta_k = settings.eta * ratio ** 2
        r_k = settings.r * np.sqrt(ratio)
        try:
            theo = compute_schedule(constants, eps, sweep.delta).T
        except ScheduleError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        passages = []
        for seed in seeds:
            config = LearnerConfig(eta=eta_k, r=r_k, T=max_iters, z0=z0,
                                   seed=seed)
            try:
                _, log = learn(cfg.fixture, config, stop_gap=eps,
                               j_star=j_star, check_every=sweep.check_every,
                               ctx=cfg.ctx)
                passages.append(log.stopped_at)
            except DivergenceError:
                passages.append(None)
        hits = [s for s in passages if s is not None]
        rows.append({
            "epsilon": eps,
            "mean_steps": float(np.mean(hits)) if hits else float("nan"),
            "min_steps": min(hits) if hits else float("nan"),
            "max_steps": max(hits) if hits else float("nan"),
            "successes": len(hits),
            "runs": sweep.runs,
            "theoretical_T": theo,
        })
        if hits:
            print(f"epsilon={eps:g}: {len(hits)}/{sweep.runs} runs, mean "
                  f"first passage {rows[-1]['mean_steps']:.1f}")
        else:
            print(f"epsilon={eps:g}: 0/{sweep.runs} runs reached the target")

    seed_span = f"0-{sweep.runs - 1}" if sweep.runs > 1 else "0"
    lines = [f"# config_hash={cfg.config_hash} seeds={seed_span}",
             "epsilon,mean_steps,min_steps,max_steps,successes,runs,"
             "theoretical_T"]
    for row in rows:
        lines.append(
            f"{_format_float(row['epsilon'])},"
            f"{_format_float(row['mean_steps'])},"
            f"{_format_float(row['min_steps'])},"
            f"{_format_float(row['max_steps'])},"
            f"{row['successes']},{row['runs']},{row['theoretical_T']}")
    if "csv" in cfg.formats:
        (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_probe(cfg: ExperimentConfig, args) -> int:
    out = _ensure_out(cfg, args.out)
    probe = cfg.probe if cfg.probe is not None else _parse_probe({})
    ctx = cfg.ctx
    spec = cfg.fixture.spec
    payload: dict = {"fixture": cfg.fixture.name,
                     "config_hash": cfg.config_hash,
                     "delta": probe.delta}
    try:
        D = compute_D(spec.noise, spec.n, spec.p, spec.N)
        payload["D"] = D
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.direct:
            result = newton_minimize_f(ctx, np.zeros(cfg.fixture.basis.d))
            j_star = result.f
            z_star = result.z
            payload["method"] = "direct"
            mu = float(np.linalg.eigvalsh(fd_hessian(ctx, z_star)).min())
            payload["mu"] = mu
            payload["tau"] = None
            payload["mu_delta"] = 2.0 * mu
        else:
            sol = solve_qi_oracle(ctx)
            j_star = sol.J_star
            z_star = sol.z_star
            payload["method"] = "qi-oracle"
            gap0 = probe.gap0 if probe.gap0 is not None else 1.0
            gd = estimate_gd_constants(ctx, probe.delta, j_star,
                                       probe.n_samples,
                                       np.random.default_rng(probe.seed),
                                       gap0=gap0, z_center=z_star)
            payload["mu"] = gd.mu
            payload["tau"] = gd.tau
            payload["mu_delta"] = gd.mu_delta
            payload["ratio_min"] = gd.ratio_min
        payload["J_star"] = j_star

        gap0 = probe.gap0 if probe.gap0 is not None else 1.0
        smooth = estimate_smoothness(ctx, probe.delta, j_star,
                                     probe.n_samples, probe.rho0,
                                     np.random.default_rng(probe.seed + 1),
                                     gap0=gap0, z_center=z_star)
        payload["L_delta"] = smooth.L_delta
        payload["M_delta"] = smooth.M_delta
        payload["rho0"] = smooth.rho0
    except (OracleError, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    spec_n = cfg.fixture.spec
    W, V, lam_w, lam_v = noise_floor(spec_n.noise, spec_n.n, spec_n.p,
                                     spec_n.N)
    try:
        constants = ScheduleConstants(
            mu_delta=payload["mu_delta"], L_delta=payload["L_delta"],
            M_delta=payload["M_delta"], rho0=probe.rho0, D=D,
            W=W, V=V, lambda_w=lam_w, lambda_v=lam_v,
            f_z0=max(j_star + gap0, 1e-12), Delta0=gap0,
            d=cfg.fixture.basis.d)
        schedule = compute_schedule(constants, probe.epsilon, probe.delta)
        payload["schedule"] = {
            "epsilon": schedule.epsilon,
            "delta": schedule.delta,
            "eta": schedule.eta,
            "r": schedule.r,
            "T": schedule.T,
            "theta_delta": schedule.theta_delta,
            "success_probability": schedule.success_probability,
        }
    except (ScheduleError, ValueError) as exc:
        payload["schedule"] = {"error": str(exc)}

    if "json" in cfg.formats:
        (out / "constants.json").write_text(json.dumps(payload, indent=2)
                                            + "\n")
    shown = {k: payload[k] for k in ("mu", "tau", "mu_delta", "L_delta",
                                     "M_delta", "D") if k in payload}
    print(json.dumps(shown, indent=2))
    return EXIT_OK


COMMANDS = {
    "qi-check": cmd_qi_check,
    "solve": cmd_solve,
    "learn": cmd_learn,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distlq",
        description="Model-free learning of distributed finite-horizon "
                    "LQ output-feedback controllers")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True,
                         help="path to the JSON experiment config")
        cmd.add_argument("--out", default=None,
                         help="output directory (overrides config)")
        cmd.add_argument("--direct", action="store_true",
                         help="bypass the convex reformulation and work on "
                              "f directly (Newton)")
        cmd.add_argument("--strict", action="store_true",
                         help="nonzero exit if any run diverges")
        cmd.add_argument("--jobs", type=int, default=1,
                         help="parallel processes for multi-seed commands")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except OracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
