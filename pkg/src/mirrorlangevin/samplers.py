"""One-step kernels and chain drivers for ULA, TULA, NLA, MLA, PLA, and MALA.

All kernels are pure functions of (potential, state, step size, noise); the
chain drivers own the random stream. Replica r of an ensemble draws from an
independent Philox stream keyed by (seed, r), so ensembles are deterministic
regardless of execution order.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from mirrorlangevin import rng as rng_mod
from mirrorlangevin.conjugate import ConvergenceError, InvertSettings, StepFailureError
from mirrorlangevin.mirrors import MirrorMap, PotentialMirror
from mirrorlangevin.potentials import Potential


class StepError(RuntimeError):
    """A sampler step failed irrecoverably (diagnostics in the message)."""


class UniformBox(Potential):
    """Pseudo-potential of the uniform distribution on a box: 0 inside, +inf out."""

    def __init__(self, half_widths):
        self.half_widths = np.atleast_1d(np.asarray(half_widths, dtype=float))
        if np.any(self.half_widths <= 0):
            raise ValueError("half widths must be positive")
        self.dim = self.half_widths.size

    def contains(self, x):
        return bool(np.all(np.abs(np.asarray(x, dtype=float)) <= self.half_widths))

    def value(self, x):
        return 0.0 if self.contains(x) else math.inf

    def gradient(self, x):
        return np.zeros(self.dim)


@dataclass(frozen=True)
class SamplerConfig:
    """Step size, chain length, burn-in, and the reproducibility seed."""

    h: float
    steps: int
    burn_in: int = 0
    seed: int = 0
    run_index: int = 0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")
        if not self.steps > self.burn_in >= 0:
            raise ValueError(
                f"need steps > burn_in >= 0, got steps={self.steps}, burn_in={self.burn_in}"
            )


@dataclass
class ChainState:
    """Current iterate, optional dual cache grad_phi(x), and step counter."""

    x: np.ndarray
    dual: np.ndarray | None = None
    step_count: int = 0


# ---------------------------------------------------------------------------
# one-step kernels


def ula_step(pot: Potential, state: ChainState, h: float, xi: np.ndarray) -> ChainState:
    """Euler-Maruyama step: x - h grad V(x) + sqrt(2h) xi."""
    x = state.x - h * pot.gradient(state.x) + math.sqrt(2.0 * h) * xi
    return ChainState(x=x, step_count=state.step_count + 1)


def tula_step(
    pot: Potential, state: ChainState, h: float, xi: np.ndarray, taming: float = 0.1
) -> ChainState:
    """ULA with the tamed drift grad V / (1 + h ||grad V||).

    ``taming`` is carried in configs for provenance but does not enter the
    drift formula used here.
    """
    g = pot.gradient(state.x)
    drift = g / (1.0 + h * np.linalg.norm(g))
    x = state.x - h * drift + math.sqrt(2.0 * h) * xi
    return ChainState(x=x, step_count=state.step_count + 1)


def _dual_update(mirror: MirrorMap, pot: Potential, state, h, xi, contraction: float):
    """Shared dual-space update of NLA/MLA.

    NLA uses contraction = 1 - h on the dual iterate (phi = V); MLA keeps the
    dual iterate and subtracts h grad V.
    """
    if state.dual is not None:
        y = state.dual
    else:
        y = mirror.grad(state.x)
    m = mirror.hess_factor(state.x)
    if contraction is None:
        y_new = y - h * pot.gradient(state.x) + math.sqrt(2.0 * h) * (m @ xi)
    else:
        y_new = contraction * y + math.sqrt(2.0 * h) * (m @ xi)
    return y_new


def nla_step(
    pot: Potential,
    state: ChainState,
    h: float,
    xi: np.ndarray,
    invert_settings: InvertSettings | None = None,
) -> ChainState:
    """Newton-Langevin step: grad V(x') = (1-h) grad V(x) + sqrt(2h) M xi.

    M M^T = hess V(x). Requires h <= 1 so the dual contraction factor stays
    nonnegative. On inversion failure the step is retried once with h/2; a
    second failure raises :class:`StepError`.
    """
    if h > 1.0:
        raise ValueError(f"NLA requires h <= 1, got {h}")
    mirror = PotentialMirror(pot)
    last_exc = None
    for h_try in (h, 0.5 * h):
        y_new = _dual_update(mirror, pot, state, h_try, xi, contraction=1.0 - h_try)
        try:
            x_new = mirror.dual_grad(y_new, warm_start=state.x, settings=invert_settings)
            return ChainState(x=x_new, dual=y_new, step_count=state.step_count + 1)
        except (ConvergenceError, StepFailureError) as exc:
            last_exc = exc
    raise StepError(
        f"NLA gradient inversion failed at step {state.step_count + 1} "
        f"(retried with halved step): {last_exc}"
    ) from last_exc


def mla_step(
    pot: Potential,
    mirror: MirrorMap,
    state: ChainState,
    h: float,
    xi: np.ndarray,
    invert_settings: InvertSettings | None = None,
) -> ChainState:
    """Mirror-Langevin step: grad phi(x') = grad phi(x) - h grad V(x) + sqrt(2h) M xi."""
    last_exc = None
    for h_try in (h, 0.5 * h):
        y_new = _dual_update(mirror, pot, state, h_try, xi, contraction=None)
        try:
            x_new = mirror.dual_grad(y_new, warm_start=state.x, settings=invert_settings)
            return ChainState(x=x_new, dual=y_new, step_count=state.step_count + 1)
        except (ConvergenceError, StepFailureError) as exc:
            last_exc = exc
    raise StepError(
        f"MLA gradient inversion failed at step {state.step_count + 1} "
        f"(retried with halved step): {last_exc}"
    ) from last_exc


def pla_step(half_widths, state: ChainState, h: float, xi: np.ndarray) -> ChainState:
    """Projected step for the uniform box target: clamp(x + sqrt(2h) xi)."""
    a = np.atleast_1d(np.asarray(half_widths, dtype=float))
    x = np.clip(state.x + math.sqrt(2.0 * h) * xi, -a, a)
    return ChainState(x=x, step_count=state.step_count + 1)


def mala_step(
    pot: Potential, state: ChainState, h: float, uniform_draw: float, xi: np.ndarray
) -> ChainState:
    """Metropolis-adjusted Langevin step.

    Proposal x' = x - h grad V(x) + sqrt(2h) xi, accepted with the usual
    Hastings ratio under the Gaussian proposal density. For uniform-body
    targets (zero drift, +inf outside) this reduces to rejecting proposals
    that exit the body.
    """
    x = state.x
    vx = pot.value(x)
    if not vx < math.inf:
        raise ValueError("MALA requires a current point of positive density")
    gx = pot.gradient(x)
    prop = x - h * gx + math.sqrt(2.0 * h) * xi
    vp = pot.value(prop)
    if vp == math.inf:
        accept = False
    else:
        gp = pot.gradient(prop)
        # log q(prop -> x) - log q(x -> prop)
        fwd = x - prop + h * gp
        bwd = prop - x + h * gx
        log_ratio = (vx - vp) + (float(bwd @ bwd) - float(fwd @ fwd)) / (4.0 * h)
        accept = math.log(max(uniform_draw, 1e-300)) < min(0.0, log_ratio)
    x_new = prop if accept else x.copy()
    return ChainState(x=x_new, step_count=state.step_count + 1)


# ---------------------------------------------------------------------------
# sampler kinds (tag + noise demand + step wiring)


class SamplerKind:
    tag: str

    def init_state(self, pot: Potential, x0: np.ndarray) -> ChainState:
        return ChainState(x=np.asarray(x0, dtype=float).copy())

    def step(self, pot, state, h, stream: rng_mod.SamplerRng) -> ChainState:
        raise NotImplementedError


class Ula(SamplerKind):
    tag = "ula"

    def step(self, pot, state, h, stream):
        return ula_step(pot, state, h, stream.standard_normal(pot.dim))


class Tula(SamplerKind):
    def __init__(self, taming: float = 0.1):
        if not taming > 0:
            raise ValueError("taming parameter must be positive")
        self.taming = taming
        self.tag = "tula"

    def step(self, pot, state, h, stream):
        return tula_step(pot, state, h, stream.standard_normal(pot.dim), self.taming)


class Nla(SamplerKind):
    tag = "nla"

    def __init__(self, invert_settings: InvertSettings | None = None):
        self.invert_settings = invert_settings

    def init_state(self, pot, x0):
        x0 = np.asarray(x0, dtype=float).copy()
        return ChainState(x=x0, dual=pot.gradient(x0))

    def step(self, pot, state, h, stream):
        return nla_step(pot, state, h, stream.standard_normal(pot.dim), self.invert_settings)


class Mla(SamplerKind):
    def __init__(self, mirror: MirrorMap, invert_settings: InvertSettings | None = None):
        self.mirror = mirror
        self.invert_settings = invert_settings
        self.tag = "mla"

    def init_state(self, pot, x0):
        x0 = np.asarray(x0, dtype=float).copy()
        return ChainState(x=x0, dual=self.mirror.grad(x0))

    def step(self, pot, state, h, stream):
        return mla_step(
            pot, self.mirror, state, h, stream.standard_normal(pot.dim), self.invert_settings
        )


class Pla(SamplerKind):
    def __init__(self, half_widths):
        self.half_widths = np.atleast_1d(np.asarray(half_widths, dtype=float))
        self.tag = "pla"

    def step(self, pot, state, h, stream):
        return pla_step(self.half_widths, state, h, stream.standard_normal(pot.dim))


class Mala(SamplerKind):
    tag = "mala"

    def step(self, pot, state, h, stream):
        # Draw order is part of the contract: d normals, then one uniform.
        xi = stream.standard_normal(pot.dim)
        u = float(stream.uniform())
        return mala_step(pot, state, h, u, xi)


# ---------------------------------------------------------------------------
# chain and ensemble drivers


@dataclass
class ChainResult:
    """Post burn-in trajectory plus failure metadata for one replica."""

    config: SamplerConfig
    iterations: np.ndarray  # 1-based step indices, burn-in excluded
    states: np.ndarray  # matching iterates, shape (len(iterations), d)
    error: str | None = None
    completed_steps: int = 0


def run_chain(
    kind: SamplerKind,
    pot: Potential,
    config: SamplerConfig,
    x0,
    recorder=None,
) -> ChainResult:
    """Drive one chain; deterministic given (kind, pot, config, x0).

    ``recorder``, when given, is called with (iteration, state) after every
    step including burn-in. Step failures abort the chain; the partial
    trajectory and the error message are returned rather than raised.
    """
    stream = rng_mod.replica_rng(config.seed, config.run_index)
    state = kind.init_state(pot, x0)
    kept_iters: list[int] = []
    kept_states: list[np.ndarray] = []
    error = None
    completed = 0
    for k in range(1, config.steps + 1):
        try:
            state = kind.step(pot, state, config.h, stream)
        except (StepError, ValueError, FloatingPointError) as exc:
            error = f"step {k}: {exc}"
            break
        completed = k
        if recorder is not None:
            recorder(k, state)
        if k > config.burn_in:
            kept_iters.append(k)
            kept_states.append(state.x.copy())
    return ChainResult(
        config=config,
        iterations=np.asarray(kept_iters, dtype=int),
        states=(
            np.asarray(kept_states)
            if kept_states
            else np.empty((0, np.asarray(x0).size))
        ),
        error=error,
        completed_steps=completed,
    )


@dataclass
class EnsembleResult:
    """Per-iteration metric means across surviving replicas."""

    iterations: np.ndarray
    metrics: dict  # name -> mean array over runs
    per_run: dict  # name -> (runs, iterations) array, NaN rows for failures
    surviving_runs: int = 0
    failures: list = field(default_factory=list)


def run_ensemble(
    kind: SamplerKind,
    pot: Potential,
    base_config: SamplerConfig,
    num_runs: int,
    x0_fn,
    metric_fn,
) -> EnsembleResult:
    """Run ``num_runs`` independent replicas and average per-iteration metrics.

    ``x0_fn(run_index)`` supplies the start point; ``metric_fn(result)`` maps a
    :class:`ChainResult` to a dict of per-iteration metric arrays. Replica r
    uses the stream (seed, r), so half-ensembles agree with full ensembles
    run-for-run.
    """
    per_run: dict[str, list] = {}
    failures = []
    iters = None
    surviving = 0
    for r in range(num_runs):
        cfg = replace(base_config, run_index=r)
        result = run_chain(kind, pot, cfg, x0_fn(r))
        if result.error is not None or len(result.iterations) == 0:
            failures.append((r, result.error or "empty trajectory"))
            for name in per_run:
                per_run[name].append(None)
            continue
        surviving += 1
        if iters is None:
            iters = result.iterations
        mets = metric_fn(result)
        for name, arr in mets.items():
            per_run.setdefault(name, [None] * r)
            per_run[name].append(np.asarray(arr, dtype=float))

    if iters is None:
        raise StepError(f"all {num_runs} runs failed: {failures}")

    n = len(iters)
    per_run_arrays = {}
    means = {}
    for name, rows in per_run.items():
        mat = np.full((num_runs, n), np.nan)
        for r, row in enumerate(rows):
            if row is not None:
                mat[r] = row
        per_run_arrays[name] = mat
        means[name] = np.nanmean(mat, axis=0)
    return EnsembleResult(
        iterations=iters,
        metrics=means,
        per_run=per_run_arrays,
        surviving_runs=surviving,
        failures=failures,
    )
