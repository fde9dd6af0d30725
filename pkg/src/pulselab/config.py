"""Strict JSON experiment configuration.

One document configures every command; unknown keys are fatal at every
nesting level so typos cannot silently corrupt a sweep.  The parsed object
exposes factory methods for the model, grid, noise spec, and pulse so the
command layer never touches raw dictionaries.
"""

import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import Grid1D
from .models import fhn_model, fhn_multiplicative
from .noise import NoiseSpec
import numpy as np


_MODEL_KEYS = {"nu": 0.05, "a": 0.1, "eps": 0.01, "gamma": 2.0,
               "noise_shape": "additive"}
_GRID_KEYS = {"length": 20, "npoints": 512}
_NOISE_KEYS = {"K": 2, "alpha": None, "sigma": 0.1, "sigma_list": None}
_SOLVER_KEYS = {
    "tol_bvp": 1e-8,
    "tol_eig": 1e-6,
    "guess_speed": 0.1,
    "relax_duration": 600.0,
    "dt_pde": 0.02,
    "t_relax": None,       # default: 4 decades of the spectral gap
    "eps_fd": 1e-3,        # second-variation finite-difference step
}
_RUN_KEYS = {
    "dt": None,            # default: coefficient-scaled rule, capped at 1e-3
    "horizon": 1000.0,
    "reps": 20,
    "seed": 0,
    "threshold": 0.01,
    "record_stride": None,
    "burn_in": None,
    "x0": 2.0,
    "y0": 2.3,
    "tube_mult": 5.0,
    "gain": 2.0,
    "checkpoint_stride": None,
    "horizon_factor": 200.0,
    "n_fp": 256,
    "backend": None,
}
_TOP_KEYS = {
    "model": None,
    "grid": None,
    "noise": None,
    "solver": None,
    "run": None,
    "reduced_model": None,  # path to a serialized ReducedModel (skips the PDE)
    "pulse_file": None,     # path to a serialized pulse
    "output_dir": "out",
}


def _merge_section(name, given, allowed):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(name, "must be an object")
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigError(name, f"unknown keys: {sorted(unknown)}")
    out = dict(allowed)
    out.update(given)
    return out


@dataclass
class ExperimentConfig:
    """Validated experiment configuration with typed accessors."""

    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    reduced_model: str = None
    pulse_file: str = None
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be an object")
        unknown = set(doc) - set(_TOP_KEYS)
        if unknown:
            raise ConfigError("config", f"unknown keys: {sorted(unknown)}")
        return cls(
            model=_merge_section("model", doc.get("model"), _MODEL_KEYS),
            grid=_merge_section("grid", doc.get("grid"), _GRID_KEYS),
            noise=_merge_section("noise", doc.get("noise"), _NOISE_KEYS),
            solver=_merge_section("solver", doc.get("solver"), _SOLVER_KEYS),
            run=_merge_section("run", doc.get("run"), _RUN_KEYS),
            reduced_model=doc.get("reduced_model"),
            pulse_file=doc.get("pulse_file"),
            output_dir=doc.get("output_dir", "out"),
        )

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "model": dict(self.model),
            "grid": dict(self.grid),
            "noise": dict(self.noise),
            "solver": dict(self.solver),
            "run": dict(self.run),
            "reduced_model": self.reduced_model,
            "pulse_file": self.pulse_file,
            "output_dir": self.output_dir,
        }

    # -- typed accessors -------------------------------------------------

    def make_grid(self):
        try:
            return Grid1D(length=int(self.grid["length"]),
                          npoints=int(self.grid["npoints"]))
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from exc

    def make_model(self):
        shape = self.model["noise_shape"]
        kwargs = dict(nu=self.model["nu"], a=self.model["a"],
                      eps=self.model["eps"], gamma=self.model["gamma"])
        try:
            if shape == "additive":
                return fhn_model(**kwargs)
            if shape == "multiplicative":
                return fhn_multiplicative(**kwargs)
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from exc
        raise ConfigError("model.noise_shape",
                          f"unknown noise shape {shape!r}")

    def make_noise(self, sigma=None):
        K = int(self.noise["K"])
        table = self.noise["alpha"]
        if table is None:
            table = {"0": 0.4, "1": 1.5, "-1": 1.5, "2": 0.2, "-2": 0.2}
        alpha = np.zeros(2 * K + 1)
        for key, value in table.items():
            try:
                k = int(key)
            except ValueError:
                raise ConfigError("noise.alpha", f"bad mode index {key!r}")
            if abs(k) > K:
                raise ConfigError("noise.alpha",
                                  f"mode {k} outside truncation K={K}")
            alpha[K + k] = float(value)
        if sigma is None:
            sigma = float(self.noise["sigma"])
        return NoiseSpec(K=K, alpha=alpha, sigma=float(sigma))

    def sigma_list(self):
        lst = self.noise["sigma_list"]
        if lst is None:
            return [float(self.noise["sigma"])]
        return [float(s) for s in lst]
