"""Seeded experiment instances and the scenario runners behind the CLI.

Scenarios
---------
denoise
    Single-channel image, identity forward model, Huber finite-difference
    penalty on the magnitude and Tikhonov finite-difference penalty on the
    phase. Initialized from the noisy image.
recon
    Multi-coil SENSE model with a Cartesian undersampling mask, l1 penalty
    on the wavelet detail coefficients of the magnitude, Huber penalty on
    the wavelet detail coefficients of the phase. Initialized from the
    zero-filled coil combination ``A^H b``.
combine
    Several noisy repetitions sharing one magnitude, each with its own
    phase. Same penalties as ``denoise``.
ablation
    The ``denoise`` instance solved by PALM, PALM with momentum, PALM with
    uncoupled steps, and PALMNUT.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io as pio
from .errors import ConfigError
from .kernels import unit_modulus
from .operators import Daubechies4, Diagonal, FiniteDifferenceStack, Identity, Sense
from .phantom import PHASE_VARIANTS, add_noise, make_mask, make_phantom, make_sensitivities, nrmse
from .problem import MagPhaseProblem, MultiRepProblem
from .regularizers import HuberStackReg, L1UnitaryReg, TikhonovReg
from .rng import derive_seed
from .solvers import SOLVERS, SolverConfig, SolverState

SCENARIOS = ("denoise", "recon", "combine", "ablation")
ABLATION_VARIANTS = ("palm", "palm_momentum", "palm_ut", "palmnut")

#: Per-scenario defaults. Regularization weights come from
#: ``scripts/sweep_lambdas.py`` and are mirrored in ``configs/*.toml``.
SCENARIO_DEFAULTS = {
    "denoise": dict(lambda1=0.0316, lambda2=0.316, xi=0.01, size="64", max_iter=300),
    "recon": dict(lambda1=0.001, lambda2=0.01, xi=0.001, size="64", max_iter=300, accel=4.0, sigma=0.002),
    "combine": dict(lambda1=0.1, lambda2=0.316, xi=0.01, size="128x64", max_iter=300),
    "ablation": dict(lambda1=0.0316, lambda2=0.316, xi=0.01, size="64", max_iter=1000),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings.

    ``sigma = None`` picks the noise level that gives the input NRMSE
    ``target_input_nrmse`` (denoise, combine, ablation).
    ``size`` is ``"N"`` or ``"WxH"``.
    """

    scenario: str = "denoise"
    solver: str = "palmnut"
    lambda1: float = 0.0316
    lambda2: float = 0.316
    xi: float = 0.01
    size: str = "64"
    accel: float = 4.0
    sigma: float | None = None
    seed: int = 0
    max_iter: int = 300
    out: str = "out"
    timing: str = "wall"
    coils: int = 8
    center_frac: float = 0.08
    reps: int = 4
    levels: int = 4
    inner_iter: int = 10
    target_input_nrmse: float = 0.15
    phantom: str = "ellipses"
    wall_clock_limit_s: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {sorted(SOLVERS)}")
        for name in ("lambda1", "lambda2", "xi"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        self.dims  # validates size
        if not self.accel >= 1:
            raise ConfigError("accel must be >= 1")
        if self.sigma is not None and not self.sigma >= 0:
            raise ConfigError("sigma must be >= 0")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not isinstance(self.max_iter, int) or self.max_iter < 0:
            raise ConfigError("max_iter must be a nonnegative integer")
        if self.timing not in ("wall", "off"):
            raise ConfigError("timing must be 'wall' or 'off'")
        if self.coils < 1 or self.reps < 1 or self.levels < 1 or self.inner_iter < 0:
            raise ConfigError("coils, reps and levels must be >= 1; inner_iter >= 0")
        if self.reps > PHASE_VARIANTS:
            raise ConfigError(f"at most {PHASE_VARIANTS} repetitions have distinct ground-truth phases")
        w, h = self.dims
        if self.scenario == "recon" and (w % 2**self.levels or h % 2**self.levels):
            raise ConfigError(f"recon size {w}x{h} is not divisible by 2**levels = {2**self.levels}")

    @property
    def dims(self):
        """``(width, height)``."""
        text = str(self.size).lower()
        try:
            if "x" in text:
                w, h = (int(t) for t in text.split("x"))
            else:
                w = h = int(text)
        except ValueError:
            raise ConfigError(f"size must look like 64 or 128x64, got {self.size!r}") from None
        for n in (w, h):
            if n < 8 or n & (n - 1):
                raise ConfigError(f"image sides must be powers of two >= 8, got {w}x{h}")
        return w, h

    @classmethod
    def from_mapping(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = dict(values)
        if "size" in values:
            values["size"] = str(values["size"])
        for key in ("lambda1", "lambda2", "xi", "accel", "center_frac", "target_input_nrmse"):
            if isinstance(values.get(key), int) and not isinstance(values.get(key), bool):
                values[key] = float(values[key])
        return cls(**values)


def resolve_config(scenario, overrides):
    """Scenario defaults updated by ``overrides`` (config file, then flags)."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    values = dict(SCENARIO_DEFAULTS[scenario], scenario=scenario)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(values)


def sigma_for_nrmse(image, mask, target):
    """Per-component std giving expected masked input NRMSE ``target``."""
    return target * float(np.linalg.norm(image[mask])) / math.sqrt(2.0 * int(mask.sum()))


@dataclass
class Instance:
    """A problem plus everything needed to score and save it."""

    prob: object
    init: SolverState
    truth: np.ndarray
    mask: np.ndarray
    metric: object
    input_nrmse: float
    arrays: dict


def _fd_regs(cfg, shape):
    fd = FiniteDifferenceStack(shape)
    return HuberStackReg(cfg.lambda1, cfg.xi, fd.ops), TikhonovReg(cfg.lambda2, fd)


def build_denoise(cfg):
    w, h = cfg.dims
    ph = make_phantom(w, h, cfg.phantom)
    truth = ph.image
    sigma = cfg.sigma if cfg.sigma is not None else sigma_for_nrmse(truth, ph.mask, cfg.target_input_nrmse)
    noisy = add_noise(truth, sigma, derive_seed(cfg.seed, "noise"))
    r1, r2 = _fd_regs(cfg, (h, w))
    prob = MagPhaseProblem(Identity((h, w)), noisy, r1, r2, norm_a_sq=1.0)
    init = SolverState(np.abs(noisy), unit_modulus(noisy))

    def metric(m, q):
        return nrmse(m * q, truth, ph.mask)

    return Instance(prob, init, truth, ph.mask, metric, nrmse(noisy, truth, ph.mask), {"noisy": noisy})


def build_recon(cfg):
    w, h = cfg.dims
    ph = make_phantom(w, h, cfg.phantom)
    truth = ph.image
    maps = make_sensitivities(w, h, cfg.coils, derive_seed(cfg.seed, "coils"))
    kmask = make_mask(w, h, cfg.accel, cfg.center_frac, derive_seed(cfg.seed, "mask"))
    a_op = Sense(maps, kmask)
    sigma = 0.0 if cfg.sigma is None else cfg.sigma
    b = a_op.mask * add_noise(a_op.apply(truth), sigma, derive_seed(cfg.seed, "noise"))
    dwt = Daubechies4((h, w), cfg.levels)
    detail = dwt.detail_mask()
    r1 = L1UnitaryReg(cfg.lambda1, dwt, weights=detail.astype(np.float64))
    r2 = HuberStackReg(cfg.lambda2, cfg.xi, Diagonal(detail.astype(np.float64)) @ dwt)
    prob = MagPhaseProblem(a_op, b, r1, r2)
    zero_filled = a_op.adjoint_apply(b)
    init = SolverState(np.abs(zero_filled), unit_modulus(zero_filled))

    def metric(m, q):
        return nrmse(m * q, truth, ph.mask)

    arrays = {"zero_filled": zero_filled, "kmask": kmask.astype(np.float64)}
    return Instance(prob, init, truth, ph.mask, metric, nrmse(zero_filled, truth, ph.mask), arrays)


def build_combine(cfg):
    w, h = cfg.dims
    base = make_phantom(w, h, cfg.phantom)
    phases = [make_phantom(w, h, cfg.phantom, phase_variant=j).phase for j in range(cfg.reps)]
    truth_reps = np.stack([base.magnitude * np.exp(1j * p) for p in phases])
    mask = base.mask
    sigma = cfg.sigma
    if sigma is None:
        sigma = sigma_for_nrmse(truth_reps[0], mask, cfg.target_input_nrmse)
    b = np.stack([add_noise(t, sigma, derive_seed(cfg.seed, f"noise{j}")) for j, t in enumerate(truth_reps)])
    r1, r2 = _fd_regs(cfg, (h, w))
    prob = MultiRepProblem(b, r1, r2)
    init = SolverState(np.mean(np.abs(b), axis=0), unit_modulus(b))
    truth_mag = base.magnitude

    def metric(m, q):
        return nrmse(m, truth_mag, mask)

    single = nrmse(np.abs(b[0]), truth_mag, mask)
    return Instance(prob, init, truth_mag, mask, metric, single, {"noisy": b, "truth_reps": truth_reps})


BUILDERS = {"denoise": build_denoise, "recon": build_recon, "combine": build_combine, "ablation": build_denoise}


def solver_config(cfg):
    return SolverConfig(
        max_outer_iter=cfg.max_iter,
        inner_iter=cfg.inner_iter,
        record_nrmse=True,
        wall_clock_limit_s=cfg.wall_clock_limit_s,
    )


def _save_image_set(out, name, image, width, height):
    pio.write_vector(out / f"{name}.cvec", image)
    pio.export_pgm(np.abs(image), width, height, out / f"{name}_mag.pgm")
    pio.export_pgm(np.angle(image), width, height, out / f"{name}_phase.pgm")


def _write_summary(out, summary):
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _prepare(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out, BUILDERS[cfg.scenario](cfg), cfg.timing == "wall"


def _single_image_command(cfg):
    out, inst, timing = _prepare(cfg)
    w, h = cfg.dims
    state, trace = SOLVERS[cfg.solver](inst.prob, inst.init, solver_config(cfg), inst.metric)
    result = state.m_hat * state.q_hat
    pio.write_trace(out / "trace.csv", trace, timing)
    _save_image_set(out, "truth", inst.truth, w, h)
    _save_image_set(out, "result", result, w, h)
    for name, arr in inst.arrays.items():
        if np.iscomplexobj(arr):
            _save_image_set(out, name, arr, w, h)
        else:
            pio.write_vector(out / f"{name}.rvec", arr)
    summary = {
        "scenario": cfg.scenario,
        "solver": cfg.solver,
        "iterations": state.k,
        "initial_objective": trace.records[0][2],
        "final_objective": trace.records[-1][2],
        "input_nrmse": inst.input_nrmse,
        "final_nrmse": inst.metric(state.m_hat, state.q_hat),
        "config": asdict(cfg),
    }
    _write_summary(out, summary)
    return summary


def cmd_denoise(cfg):
    return _single_image_command(cfg)


def cmd_recon(cfg):
    return _single_image_command(cfg)


def cmd_combine(cfg):
    out, inst, timing = _prepare(cfg)
    w, h = cfg.dims
    state, trace = SOLVERS[cfg.solver](inst.prob, inst.init, solver_config(cfg), inst.metric)
    pio.write_trace(out / "trace.csv", trace, timing)
    pio.write_vector(out / "truth_mag.rvec", inst.truth)
    pio.export_pgm(inst.truth, w, h, out / "truth_mag.pgm")
    pio.write_vector(out / "result_mag.rvec", state.m_hat)
    pio.export_pgm(state.m_hat, w, h, out / "result_mag.pgm")
    pio.export_pgm(np.abs(inst.arrays["noisy"][0]), w, h, out / "noisy0_mag.pgm")
    for j in range(cfg.reps):
        pio.write_vector(out / f"noisy{j}.cvec", inst.arrays["noisy"][j])
        pio.write_vector(out / f"result_q{j}.cvec", state.q_hat[j])
        pio.export_pgm(np.angle(state.q_hat[j]), w, h, out / f"result_phase{j}.pgm")
    summary = {
        "scenario": cfg.scenario,
        "solver": cfg.solver,
        "iterations": state.k,
        "initial_objective": trace.records[0][2],
        "final_objective": trace.records[-1][2],
        "single_image_nrmse": inst.input_nrmse,
        "average_magnitude_nrmse": inst.metric(inst.init.m_hat, inst.init.q_hat),
        "final_nrmse": inst.metric(state.m_hat, state.q_hat),
        "config": asdict(cfg),
    }
    _write_summary(out, summary)
    return summary


def iterations_to_within(objectives, target):
    """First index whose objective is <= ``target``; None if never reached."""
    hits = np.flatnonzero(np.asarray(objectives) <= target)
    return int(hits[0]) if hits.size else None


def cmd_ablation(cfg):
    out, inst, timing = _prepare(cfg)
    scfg = solver_config(cfg)
    traces = {}
    for name in ABLATION_VARIANTS:
        _, traces[name] = SOLVERS[name](inst.prob, inst.init, scfg, inst.metric)
    pio.write_ablation(out / "ablation.csv", traces, timing)
    best = min(float(np.min(tr.objectives)) for tr in traces.values())
    target = best + 0.01 * abs(best)
    summary = {
        "scenario": cfg.scenario,
        "best_objective": best,
        "iters_to_1pct": {n: iterations_to_within(tr.objectives, target) for n, tr in traces.items()},
        "final_objective": {n: float(tr.objectives[-1]) for n, tr in traces.items()},
        "final_nrmse": {n: float(tr.nrmses[-1]) for n, tr in traces.items()},
        "config": asdict(cfg),
    }
    _write_summary(out, summary)
    return summary


COMMANDS = {"denoise": cmd_denoise, "recon": cmd_recon, "combine": cmd_combine, "ablation": cmd_ablation}


def run_experiment(cfg):
    return COMMANDS[cfg.scenario](cfg)


__all__ = [
    "ExperimentConfig",
    "Instance",
    "SCENARIOS",
    "SCENARIO_DEFAULTS",
    "build_combine",
    "build_denoise",
    "build_recon",
    "cmd_ablation",
    "cmd_combine",
    "cmd_denoise",
    "cmd_recon",
    "iterations_to_within",
    "resolve_config",
    "run_experiment",
    "sigma_for_nrmse",
]
