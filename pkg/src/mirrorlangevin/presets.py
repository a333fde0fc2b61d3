"""Named experiment presets and their override schemas.

Each preset fixes a target, a sampler roster, and run lengths; the harness
resolves overrides against the keys listed in ``overridable`` and refuses
anything else. Desk-scale variants (reduced dimension and run counts) ship
alongside the full-scale ones so the test suite can exercise the same code
paths quickly.
"""

from dataclasses import dataclass

# Type coercions for override values (CLI strings and config scalars).
OVERRIDE_TYPES = {
    "h": float,
    "steps": int,
    "burn_in": int,
    "runs": int,
    "seed": int,
    "beta": float,
    "gamma": float,
    "dimension": int,
    "epsilon_sinkhorn": float,
    "record_every": int,
}


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str
    description: str
    params: dict
    metrics: tuple
    samplers: tuple
    overridable: tuple


def _ensemble(name, dim, gamma, runs, description):
    return Preset(
        name=name,
        kind="ensemble",
        description=description,
        params={
            "dimension": dim,
            "gamma": gamma,
            "runs": runs,
            "steps": 500,
            "burn_in": 0,
            "h_grid": (0.7, 0.05),
            "record_every": 1,
        },
        metrics=("mean_sq_error", "scatter_rel_sq_error"),
        samplers=("nla", "ula", "tula"),
        overridable=("h", "steps", "burn_in", "runs", "gamma", "dimension", "record_every"),
    )


def _rectangle_e3(name, n_points, runs, description):
    return Preset(
        name=name,
        kind="rectangle-e3",
        description=description,
        params={
            "half_widths": (0.01, 1.0),
            "beta": 1e-4,
            "n_points": n_points,
            "runs": runs,
            "steps": 1000,
            "h": 1e-5,
            "h_mala": 0.01,
            "epsilon_sinkhorn": 0.01,
            # Marginal tolerance for the cloud comparisons; looser than the
            # library default because the metric itself is O(1e-2).
            "sinkhorn_tol": 1e-6,
            "record_every": 50,
            "w2_subsample": 64,
        },
        metrics=("sinkhorn_w2", "exact_w2"),
        samplers=("nla", "pla", "mala"),
        overridable=("h", "steps", "runs", "beta", "epsilon_sinkhorn", "record_every"),
    )


PRESETS = {
    p.name: p
    for p in [
        _ensemble(
            "gengauss",
            100,
            0.75,
            50,
            "Generalized Gaussian, d=100, Sigma=diag(1..100), gamma=3/4; "
            "NLA/ULA/TULA running-moment errors at h in {0.7, 0.05}",
        ),
        _ensemble(
            "gauss",
            100,
            1.0,
            50,
            "Gaussian special case (gamma=1) of the gengauss preset",
        ),
        _ensemble(
            "gengauss-desk",
            10,
            0.75,
            20,
            "Desk-scale generalized Gaussian, d=10, Sigma=diag(1..10), 20 runs",
        ),
        Preset(
            name="logistic",
            kind="logistic",
            description="Bayesian logistic regression posterior, synthetic n=100 "
            "dataset, burn-in 1e4, h in {0.1, 0.05, 0.01}",
            params={
                "n_data": 100,
                "prior_variance": 10.0,
                "runs": 5,
                "steps": 11000,
                "burn_in": 10000,
                "h_grid": (0.1, 0.05, 0.01),
                "record_every": 1,
            },
            metrics=("mean_sq_error",),
            samplers=("nla", "ula", "tula"),
            overridable=("h", "steps", "burn_in", "runs", "record_every"),
        ),
        Preset(
            name="rectangle-fig3",
            kind="rectangle-fig3",
            description="Single NLA and PLA trajectories on the rectangle "
            "(0.01, 1), barrier scale beta=1e-4, 200 iterations, h=1e-4",
            params={
                "half_widths": (0.01, 1.0),
                "beta": 1e-4,
                "runs": 1,
                "steps": 200,
                "h": 1e-4,
                "w2_subsample": 64,
            },
            metrics=("exact_w2",),
            samplers=("nla", "pla"),
            overridable=("h", "steps", "runs", "beta"),
        ),
        _rectangle_e3(
            "rectangle-e3",
            1000,
            30,
            "Uniform sampling on the rectangle: NLA/PLA (h=1e-5) and MALA "
            "(h=0.01) particle clouds vs fresh uniform references, Sinkhorn "
            "eps=0.01, 30 runs",
        ),
        _rectangle_e3(
            "rectangle-e3-desk",
            200,
            10,
            "Desk-scale rectangle cloud comparison: 200 points, 10 runs",
        ),
        Preset(
            name="laplace",
            kind="laplace",
            description="Norm-plus-quadratic target, d=2, beta=5e-4; far "
            "initialization |X0|=1000, 1000 burn-in + 1000 recorded iterations",
            params={
                "dimension": 2,
                "beta": 0.0005,
                "runs": 10,
                "steps": 2000,
                "burn_in": 1000,
                "h": 0.1,
                "x0_norm": 1000.0,
                "power": 1.5,
                "record_every": 1,
            },
            metrics=("mean_sq_error",),
            samplers=("nla", "ula", "tula", "mla"),
            overridable=("h", "steps", "burn_in", "runs", "beta", "record_every"),
        ),
        Preset(
            name="fp-gaussian-sigma-sweep",
            kind="fp",
            description="Density-flow chi2 decay on 1-D Gaussians, sigma in "
            "{1, 10}, Newton geometry (rate 2 for both)",
            params={"sigmas": (1.0, 10.0), "cells": 512, "t_end": 6.0, "records": 200},
            metrics=("chi2", "kl", "tv", "hellinger2"),
            samplers=("newton",),
            overridable=("steps", "record_every"),
        ),
        Preset(
            name="fp-nongaussian",
            kind="fp",
            description="Density-flow chi2 decay for V = cosh(x) - 1, Newton "
            "geometry (rate at least 2)",
            # The doubly exponential tails need a finer grid than the
            # Gaussian cases: adjacent-cell mass ratios must stay bounded for
            # the arithmetic interface average to be stable.
            params={"cells": 2048, "t_end": 6.0, "records": 200, "tilt": 0.5},
            metrics=("chi2", "kl", "tv", "hellinger2"),
            samplers=("newton",),
            overridable=("steps", "record_every"),
        ),
        Preset(
            name="fp-langevin-contrast",
            kind="fp",
            description="Density-flow decay with the identity geometry on "
            "N(0, sigma^2): rate 2/sigma^2, contrasting the Newton rate 2",
            params={
                "sigmas": (1.0, 10.0),
                "cells": 512,
                "t_end_by_sigma": {1.0: 6.0, 10.0: 400.0},
                "records": 200,
            },
            metrics=("chi2", "kl", "tv", "hellinger2"),
            samplers=("langevin",),
            overridable=("steps", "record_every"),
        ),
        Preset(
            name="inequality-suite",
            kind="inequality",
            description="Quadrature checks of the functional inequalities: "
            "curvature-weighted Poincare, exp-concave KL, Lojasiewicz, "
            "transport bound, and the quadratic-tilt KL bound",
            params={"cells": 16384, "test_functions": 20},
            metrics=("chi2", "kl"),
            samplers=(),
            overridable=(),
        ),
    ]
}


def resolve_params(preset: Preset, overrides: dict) -> dict:
    """Apply type-checked overrides to a preset's default parameters."""
    params = dict(preset.params)
    for key, value in overrides.items():
        if key not in OVERRIDE_TYPES:
            raise ValueError(f"unknown override key {key!r}")
        if key not in preset.overridable:
            raise ValueError(f"preset {preset.name!r} does not accept override {key!r}")
        try:
            value = OVERRIDE_TYPES[key](value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"override {key!r}: {exc}") from exc
        if key in ("h", "beta", "gamma", "epsilon_sinkhorn") and not value > 0:
            raise ValueError(f"override {key!r} must be positive, got {value}")
        if key in ("steps", "runs", "dimension", "record_every") and value < 1:
            raise ValueError(f"override {key!r} must be at least 1, got {value}")
        if key == "burn_in" and value < 0:
            raise ValueError(f"override burn_in must be nonnegative, got {value}")
        if key == "h" and "h_grid" in params:
            params["h_grid"] = (value,)
        elif key == "steps" and preset.kind == "fp":
            params["euler_steps_cap"] = value
        else:
            params[key] = value
    if "burn_in" in params and "steps" in params and preset.kind != "fp":
        if params["steps"] <= params["burn_in"]:
            raise ValueError(
                f"steps ({params['steps']}) must exceed burn_in ({params['burn_in']})"
            )
    return params
