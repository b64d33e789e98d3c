"""Blow-up experiments: witness trains, anchor sets, restricted norms and log fits."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, engine
from .kernels import BACKEND
from .rational_core import RationalVector, lift_hash, solve_moment_orthogonal, to_fraction
from .symbols import FrequencySymbol, make_paraproduct_symbol, make_smooth_line_symbol, make_trilinear_sgn_symbol
from .witnesses import Bump, BumpTrain, make_bump_train, make_dyadic_chirps

log = logging.getLogger(__name__)

THEOREMS = ("MT**", "IT", "MT*", "TechThm", "control")
RUNNABLE = ("MT**", "IT", "control")


class ConfigError(ValueError):
    """The experiment configuration is malformed or unsupported."""


@dataclass
class ExperimentConfig:
    theorem: str
    N_schedule: list
    n: int = 3
    d: int = 1
    q: list | None = None
    alpha: list | None = None
    beta: list | None = None
    A: float | None = None
    p: list | None = None
    h: float | None = None
    anchor_window: list | None = None
    c_alpha: float | None = None
    x_nodes: int | None = None
    refine: int = 1
    part: str = "singular"
    control_L: float | None = None
    output: str | None = None
    seed: int = 0
    plot: bool = False
    assertions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ConfigError(f"theorem must be one of {THEOREMS}")
        sched = [int(v) for v in self.N_schedule]
        if len(sched) < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("N_schedule must be strictly increasing")
        if sched[0] < 1:
            raise ConfigError("N values must be positive")
        self.N_schedule = sched
        if self.part not in ("singular", "full"):
            raise ConfigError("part must be 'singular' or 'full'")
        if self.p is not None and any(float(v) <= 0 for v in self.p):
            raise ConfigError("exponents must be positive")
        if self.refine < 1:
            raise ConfigError("refine must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"theorem", "N_schedule"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        """JSON or YAML (the YAML loader also reads JSON)."""
        import yaml

        try:
            data = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentRecord:
    config: dict
    N: list
    ratios: list
    numerators: list
    denominators: list
    anchors: list
    extra: dict
    fit: dict | None
    checks: dict
    environment: dict
    elapsed: float = 0.0

    @property
    def passes(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = self.passes
        return out

    def digest(self) -> str:
        """Hash of the numerical content (configuration and ratios, not timing)."""
        body = json.dumps({"config": self.config, "ratios": self.ratios, "extra": self.extra}, sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()


def environment_fingerprint() -> dict:
    import scipy

    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "backend": BACKEND, "package": __version__, "platform": platform.platform()}


# ---------------------------------------------------------------- configuration helpers

def integerize(values: Sequence) -> list[int]:
    """Smallest integer multiple of a rational vector, sign kept."""
    return [int(v) for v in RationalVector(values).integerize()]


def hash_slopes(q: Sequence) -> tuple[list[int], list[int]]:
    """(alpha, slopes): alpha the integer multiple of 1/q, slopes the integer multiple of #.

    # solves sum #_j alpha_j = sum #_j alpha_j^2 = 0; via tilde_j = #_j alpha_j^2 this is
    sum tilde_j = sum tilde_j q_j = 0.
    """
    qf = [to_fraction(v) for v in q]
    alpha = integerize([1 / v for v in qf])
    hv = solve_moment_orthogonal(qf, {0, 1})
    slopes = integerize(lift_hash(hv, alpha))
    return alpha, slopes


def _defaults(cfg: ExperimentConfig) -> dict:
    t = cfg.theorem
    out = {}
    if t in ("MT**", "control"):
        if cfg.alpha is not None:
            alpha = [int(v) if float(v).is_integer() else float(v) for v in cfg.alpha]
            q = cfg.q or [Fraction(1) / to_fraction(v) for v in alpha]
        else:
            q = cfg.q or [1, 2, 3]
            alpha = None
        a_int, slopes = hash_slopes(q)
        alpha = alpha or a_int
        if list(alpha) != list(a_int):
            # alpha given explicitly: recompute # against it
            hv = solve_moment_orthogonal([Fraction(1) / to_fraction(v) for v in alpha], {0, 1})
            slopes = integerize(lift_hash(hv, [to_fraction(v) for v in alpha]))
        A = float(cfg.A or 32)
        out.update(alpha=list(alpha), slopes=slopes, A=A, h=cfg.h or 0.5,
                   window=cfg.anchor_window or [0.5, 1.0],
                   c=cfg.c_alpha or 1.0 / (10.0 * (max(abs(float(v)) for v in alpha)
                                                  + max([abs(float(v)) for v in (cfg.beta or [0])]))),
                   x_nodes=cfg.x_nodes or 3, p=cfg.p or [6.0] * len(alpha))
        out["width"] = out["c"] / A
    elif t == "IT":
        A = float(cfg.A or 128)
        out.update(A=A, window=cfg.anchor_window or [0.5, 2.0 / 3.0], width=1.0, x_nodes=cfg.x_nodes or 4,
                   p=cfg.p or [6.0, 6.0, 6.0], h=cfg.h or 0.25)
    else:
        raise ConfigError(f"run_blowup supports {RUNNABLE}; {t} has no evaluator at blow-up scale")
    if len(out["p"]) != (3 if t == "IT" else len(out["alpha"])):
        raise ConfigError("need one exponent per input function")
    return out


def anchor_set(N: int, window: Sequence[float]) -> list[int]:
    lo, hi = window
    return list(range(math.ceil(lo * N), math.floor(hi * N) + 1))


def anchor_nodes(anchors: Sequence[int], A: float, width: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights on every interval [A n, A n + width]."""
    g, w = np.polynomial.legendre.leggauss(k)
    xs = np.concatenate([A * n + width * (g + 1) / 2 for n in anchors])
    ws = np.tile(width * w / 2, len(anchors))
    return xs, ws


def restricted_norm(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    return float(np.sum(weights * np.abs(values) ** p) ** (1.0 / p))


def target_exponent(ps: Sequence[float]) -> float:
    inv = sum(1.0 / float(v) for v in ps)
    if inv <= 0:
        raise ConfigError("sum of 1/p_j must be positive")
    return 1.0 / inv


# ---------------------------------------------------------------- runs

def _selector_grid(A: float, slope_last: float, N: int) -> list[float]:
    """A #_n n + 5 #_n for n = -N-1..N: one cutoff between every pair of last-input pieces."""
    return [A * slope_last * n + 5 * slope_last for n in range(-N - 1, N + 1)]


def witnesses_for(cfg: ExperimentConfig, N: int, par: dict) -> list[BumpTrain]:
    if cfg.theorem == "IT":
        return list(make_dyadic_chirps(N, A=par["A"], base=Bump(par["h"])))
    base = Bump(par["h"])
    return [make_bump_train(base, N, par["A"], s) for s in par["slopes"]]


def _evaluate(cfg: ExperimentConfig, N: int, par: dict, trains, xs, part: str) -> np.ndarray:
    if cfg.theorem == "MT**":
        grid = _selector_grid(par["A"], par["slopes"][-1], N)
        return engine.apply_ncarleson(par["alpha"], trains, xs, grid, part=part, refine=cfg.refine)
    return np.abs(engine.apply_multiplier(symbol_for(cfg, N, par), trains, xs, refine=cfg.refine))


def symbol_for(cfg: ExperimentConfig, N: int, par: dict) -> FrequencySymbol:
    if cfg.theorem == "control":
        return make_smooth_line_symbol(par["alpha"], cfg.control_L or par["A"] / 4.0)
    if cfg.theorem == "IT":
        return make_trilinear_sgn_symbol(make_paraproduct_symbol(N + 1))
    raise ConfigError(f"no single symbol for {cfg.theorem}")


def run_blowup(cfg: ExperimentConfig) -> ExperimentRecord:
    started = time.perf_counter()
    par = _defaults(cfg)
    p = target_exponent(par["p"])
    ratios, nums, dens, anchors_used = [], [], [], []
    extra: dict = {"p": p}
    if cfg.theorem == "MT**":
        extra.update(alpha=par["alpha"], slopes=par["slopes"], other_part=[])
    for N in cfg.N_schedule:
        anchors = anchor_set(N, par["window"])
        if not anchors:
            raise ConfigError(f"anchor window {par['window']} is empty at N = {N}")
        trains = witnesses_for(cfg, N, par)
        xs, ws = anchor_nodes(anchors, par["A"], par["width"], par["x_nodes"])
        vals = _evaluate(cfg, N, par, trains, xs, cfg.part)
        den = float(np.prod([tr.lp_norm(pj) for tr, pj in zip(trains, par["p"])]))
        num = restricted_norm(vals, ws, p)
        if not num > 0:
            raise RuntimeError(f"operator vanished on the anchor set at N = {N}")
        nums.append(num)
        dens.append(den)
        ratios.append(num / den)
        anchors_used.append([anchors[0], anchors[-1]])
        if cfg.theorem == "MT**":
            other = "full" if cfg.part == "singular" else "singular"
            extra["other_part"].append(restricted_norm(_evaluate(cfg, N, par, trains, xs, other), ws, p) / den)
        log.info("N=%d R=%.6g", N, ratios[-1])
    if cfg.theorem == "MT**":
        extra["other_part_name"] = "full" if cfg.part == "singular" else "singular"
    fit = None
    if len(ratios) >= 3:
        s, b, r = fit_log_growth(cfg.N_schedule, ratios)
        fit = {"slope": s, "intercept": b, "residual": r}
    checks = evaluate_assertions(cfg.assertions, ratios, fit)
    cfg_dict = cfg.to_dict()
    cfg_dict["resolved"] = {k: v for k, v in par.items()}
    return ExperimentRecord(cfg_dict, list(cfg.N_schedule), ratios, nums, dens, anchors_used, extra, fit, checks,
                            environment_fingerprint(), time.perf_counter() - started)


def evaluate_assertions(wanted: dict, ratios: Sequence[float], fit: dict | None) -> dict:
    known = {"increasing", "slope_positive", "max_residual", "max_spread"}
    unknown = set(wanted) - known
    if unknown:
        raise ConfigError(f"unknown assertions: {sorted(unknown)}")
    out = {}
    if wanted.get("increasing"):
        out["increasing"] = all(b > a for a, b in zip(ratios, ratios[1:]))
    if wanted.get("slope_positive"):
        out["slope_positive"] = fit is not None and fit["slope"] > 0
    if "max_residual" in wanted:
        out["max_residual"] = fit is not None and fit["residual"] < float(wanted["max_residual"])
    if "max_spread" in wanted:
        out["max_spread"] = max(ratios) / min(ratios) <= float(wanted["max_spread"])
    return out


def fit_log_growth(N: Sequence[float] | ExperimentRecord, R: Sequence[float] | None = None):
    """Least squares R ~ slope ln N + intercept; residual is the max relative deviation."""
    if isinstance(N, ExperimentRecord):
        N, R = N.N, N.ratios
    N = np.asarray(N, dtype=float)
    R = np.asarray(R, dtype=float)
    if len(N) < 3:
        raise ValueError("a log fit needs at least 3 points")
    slope, intercept = np.polyfit(np.log(N), R, 1)
    pred = slope * np.log(N) + intercept
    residual = float(np.max(np.abs(R - pred) / np.abs(R)))
    return float(slope), float(intercept), residual


# ---------------------------------------------------------------- oracles and calibration

def oracle_cross_check(m: FrequencySymbol, trains: Sequence[BumpTrain], grid, refine: int = 1) -> dict:
    """Engine (structured when available) against dense tensor quadrature at 4x resolution."""
    if len(trains) > 3 or max(tr.N for tr in trains) > 4:
        raise ValueError("the dense oracle is limited to n <= 3 and N <= 4")
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    if m.terms is not None:
        method = "structured"
        got = engine.apply_multiplier(m, trains, xs, method=method, refine=refine)
        ref = engine.apply_multiplier(m, trains, xs, method="quadrature", refine=refine)
    else:
        # no structured route: the quadrature is checked against itself at doubled resolution
        method = "quadrature"
        got = engine.apply_multiplier(m, trains, xs, method=method, refine=refine)
        ref = engine.apply_multiplier(m, trains, xs, method=method, refine=2 * refine)
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    err = float(np.max(np.abs(got - ref))) / scale
    return {"method": method, "max_rel_error": err, "points": int(len(xs)), "scale": scale}


def calibrate_A(cfg: ExperimentConfig, N: int | None = None, ratio: float = 0.25, max_doublings: int = 4) -> float:
    """Double A until |T| between anchors is below ``ratio`` times |T| on the anchors."""
    N = N or cfg.N_schedule[0]
    par = _defaults(cfg)
    A = par["A"]
    for _ in range(max_doublings + 1):
        par["A"] = A
        if cfg.theorem != "IT":
            par["width"] = par["c"] / A
        anchors = anchor_set(N, par["window"])
        trains = witnesses_for(cfg, N, par)
        on, _ = anchor_nodes(anchors, A, par["width"], 1)
        off = np.array([A * (n + 0.5) for n in anchors])
        v_on = np.abs(_evaluate(cfg, N, par, trains, on, cfg.part))
        v_off = np.abs(_evaluate(cfg, N, par, trains, off, cfg.part))
        if float(np.mean(v_off)) < ratio * float(np.mean(v_on)):
            return A
        A *= 2
    raise RuntimeError(f"off-anchor contribution stayed above {ratio} of the main term up to A = {A / 2}")


# ---------------------------------------------------------------- persistence

def write_outputs(record: ExperimentRecord, out_dir: str | Path, plot: bool = False) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"record": out / "record.json", "ratios": out / "ratios.csv"}
    paths["record"].write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True, default=_json_default))
    with paths["ratios"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "R"])
        for n, r in zip(record.N, record.ratios):
            w.writerow([n, repr(r)])
    if plot:
        paths["plot"] = out / "ratios.svg"
        _plot(record, paths["plot"])
    return {k: str(v) for k, v in paths.items()}


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _plot(record: ExperimentRecord, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(record.N, record.ratios, "o-", label="R(N)")
    if record.fit:
        grid = np.geomspace(min(record.N), max(record.N), 50)
        ax.plot(grid, record.fit["slope"] * np.log(grid) + record.fit["intercept"], "--", label="log fit")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel("R(N)")
    ax.set_title(record.config["theorem"])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
