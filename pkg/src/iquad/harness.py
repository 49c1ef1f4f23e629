"""Experiment harness: declarative configs in, per-run CSV reports out.

A config is a flat JSON object. ``run_experiment`` builds the problem
(target, integrand, oracle, initial proposals), runs the requested method once
per seed and writes

* ``runs.csv``: one row per seed, iteration, estimator scope and quantity;
* ``summary.csv``: squared errors averaged over seeds.

Both files start with ``#`` metadata lines (config echo, seeds, evaluation
totals). Apart from the ``# created:`` line, a fixed config produces
byte-identical files.
"""

import copy
import csv
import datetime as _dt
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Callable, List, Optional

import numpy as np

from . import __version__
from .adapt import am_igh, m_pigh
from .baselines import amis, is_estimate, m_pmc, qmc_is_estimate
from .errors import ConfigError, DegenerateWeightsError
from .igh import igh_estimate, igh_weights, resample_thin
from .migh import migh_estimate, migh_weights
from .proposals import EvalCounter, GaussianProposal
from .reference import brute_force_reference
from .targets import (load_exoplanet_csv, load_gp_csv, make_exoplanet,
                      make_gaussian_mixture_5, make_gaussian_target, make_gp_posterior,
                      make_nakagami, simulate_exoplanet_data, simulate_gp_data)

__all__ = [
    "EXPERIMENTS",
    "METHODS",
    "ExperimentConfig",
    "Problem",
    "RunResult",
    "build_problem",
    "run_experiment",
    "run_sweep",
    "write_reference",
    "load_config",
    "EXOPLANET_INIT_BOX",
    "GP_BOUNDS",
]

EXPERIMENTS = ("toy1", "toy2", "multimodal", "exoplanet", "gp", "custom")
METHODS = ("igh", "sm_igh", "dm_igh", "am_igh", "am_igh_dm", "m_pigh",
           "is", "snis", "qmc_is", "amis", "m_pmc")
ADAPTIVE = ("am_igh", "am_igh_dm", "m_pigh", "amis", "m_pmc")
QUADRATURE = ("igh", "sm_igh", "dm_igh", "am_igh", "am_igh_dm", "m_pigh")
CUSTOM_KINDS = ("gaussian", "nakagami", "mixture5", "exoplanet", "gp")

EXOPLANET_DATA_SEED = 2020
EXOPLANET_INIT_BOX = [[-1.5, 6.0], [1.0, 4.0], [100.0, 400.0], [np.pi / 2, 2 * np.pi], [0.1, 0.4]]
EXOPLANET_INIT_SCALE = 0.05  # initial std per axis, as a fraction of the init box width
EXOPLANET_REF_BOX = [[-15.0, 15.0], [0.0, 50.0], [1.0, 365.0], [0.0, 2 * np.pi], [0.0, 1.0]]

GP_DATA_SEED = 3
GP_DELTA = (1.0, 3.0)
GP_FULL_DELTA = (1.0, 3.0, 1.0)
GP_SIGMA = 0.5
GP_BOUNDS = [[1e-4, 30.0], [1e-4, 30.0], [1e-3, 3.0]]
GP_INIT_BOX = [[0.5, 5.0], [0.5, 5.0], [0.1, 1.0]]
GP_INIT_VAR = 0.4

# large-budget settings behind ``full_scale``: 10**5 exoplanet nodes, 100 runs
FULL_SCALE = {"exoplanet": {"alpha": 10, "seeds": 100}, "gp": {"seeds": 100}}

RUN_COLUMNS = [
    "param", "value", "experiment", "method", "seed", "t", "scope", "quantity",
    "estimate", "estimate_unnormalized", "oracle", "sq_error", "sq_error_unnormalized",
    "rel_error", "rel_error_unnormalized", "z_hat", "log_z_hat", "sq_error_z", "ess_igh",
    "target_evals", "proposal_evals", "weight_evals",
]
ERROR_COLUMNS = ("oracle", "sq_error", "sq_error_unnormalized", "rel_error",
                 "rel_error_unnormalized", "sq_error_z")
SUMMARY_COLUMNS = [
    "param", "value", "experiment", "method", "t", "scope", "quantity", "n_runs",
    "mean_estimate", "mse", "mse_unnormalized", "mean_rel_error",
    "mean_rel_error_unnormalized", "mse_z", "mean_ess_igh",
    "target_evals", "proposal_evals", "weight_evals",
]


# ---------------------------------------------------------------------------
# configuration


def _choice(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"invalid {name} {value!r}; allowed values: {', '.join(allowed)}")
    return value


def _positive_int(name, value, allow_none=True):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ConfigError(f"invalid {name} {value!r}; allowed values: positive integers")
    return int(value)


@dataclass
class ExperimentConfig:
    """One experiment: a problem, a method and the seeds to run it with.

    Attributes
    ----------
    experiment : {"toy1", "toy2", "multimodal", "exoplanet", "gp", "custom"}
    method : {"igh", "sm_igh", "dm_igh", "am_igh", "am_igh_dm", "m_pigh",
              "is", "snis", "qmc_is", "amis", "m_pmc"}
    alpha : int, optional
        Hermite nodes per dimension for quadrature methods.
    N : int, optional
        Samples per proposal and iteration for Monte Carlo methods; defaults
        to ``alpha**d`` so that budgets match.
    M : int, optional
        Number of proposals or kernels.
    T : int, optional
        Iterations of adaptive methods.
    seeds : int or list of int
        A count ``n`` means seeds ``0..n-1``.
    init : dict
        ``mean`` (fixed) or ``box`` (means drawn uniformly per seed and
        kernel), plus ``cov`` (scalar, variances or matrix).
    sigma : float, optional
        Proposal standard deviation; overrides ``init["cov"]`` with
        ``sigma**2 I``.
    target : dict
        Target parameters; for ``custom`` it must name a ``kind``.
    moments : list of int, optional
        Powers ``p`` of ``f(x) = x**p`` (toy1).
    n_prime : int, optional
        Thinned node count per grid (quadrature methods).
    output : str, optional
        Directory for ``runs.csv`` and ``summary.csv``.
    workers : int
        Threads across seeds.
    full_scale : bool
        Switch exoplanet and GP to the large-budget setting.
    """

    experiment: str
    method: str
    alpha: Optional[int] = None
    N: Optional[int] = None
    M: Optional[int] = None
    T: Optional[int] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    init: dict = field(default_factory=dict)
    sigma: Optional[float] = None
    target: dict = field(default_factory=dict)
    moments: Optional[List[int]] = None
    n_prime: Optional[int] = None
    output: Optional[str] = None
    workers: int = 1
    full_scale: bool = False
    base_dir: str = field(default=".", repr=False, compare=False)

    @classmethod
    def from_dict(cls, raw, base_dir="."):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = [f for f in cls.__dataclass_fields__ if f != "base_dir"]
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"invalid field {unknown[0]!r}; allowed fields: {', '.join(known)}")
        for req in ("experiment", "method"):
            if req not in raw:
                raise ConfigError(f"missing field {req!r}")
        cfg = cls(**copy.deepcopy(raw), base_dir=base_dir)
        cfg._validate()
        return cfg

    def _validate(self):
        _choice("experiment", self.experiment, EXPERIMENTS)
        _choice("method", self.method, METHODS)
        for name in ("alpha", "N", "M", "T", "n_prime"):
            setattr(self, name, _positive_int(name, getattr(self, name)))
        self.workers = _positive_int("workers", self.workers, allow_none=False)
        if isinstance(self.seeds, bool):
            raise ConfigError("invalid seeds; allowed values: a positive count or a list of integers")
        if isinstance(self.seeds, (int, np.integer)):
            self.seeds = list(range(_positive_int("seeds", self.seeds, allow_none=False)))
        elif isinstance(self.seeds, list) and self.seeds and all(
                isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in self.seeds):
            self.seeds = list(self.seeds)
        else:
            raise ConfigError("invalid seeds; allowed values: a positive count or a list of "
                              "non-negative integers")
        if not isinstance(self.init, dict) or set(self.init) - {"mean", "box", "cov"}:
            raise ConfigError("invalid init; allowed keys: mean, box, cov")
        if not isinstance(self.target, dict):
            raise ConfigError("invalid target; expected an object of target parameters")
        if self.sigma is not None and not (isinstance(self.sigma, (int, float)) and self.sigma > 0):
            raise ConfigError(f"invalid sigma {self.sigma!r}; allowed values: positive reals")
        if self.moments is not None and (not isinstance(self.moments, list) or not all(
                isinstance(p, int) and p >= 0 for p in self.moments)):
            raise ConfigError("invalid moments; allowed values: list of non-negative integers")
        if self.full_scale and self.experiment in FULL_SCALE:
            budget = FULL_SCALE[self.experiment]
            if "alpha" in budget:
                self.alpha, self.N = budget["alpha"], None
            if len(self.seeds) < budget["seeds"]:
                self.seeds = list(range(budget["seeds"]))
        if self.method in QUADRATURE and self.alpha is None:
            self.alpha = 5
        if self.method in ADAPTIVE and self.T is None:
            self.T = 20 if self.experiment in ("multimodal", "exoplanet", "gp") else 10
        if self.method in ("m_pigh", "m_pmc") and self.M is None:
            self.M = 25 if self.experiment == "multimodal" else 1
        if self.experiment == "custom":
            _choice("target kind", self.target.get("kind"), CUSTOM_KINDS)
        if self.method == "snis" and self.n_prime is not None:
            raise ConfigError("invalid n_prime for method snis; thinning applies to quadrature methods")

    def to_dict(self):
        out = asdict(self)
        out.pop("base_dir")
        return out


def load_config(path):
    """Read a JSON config file; relative paths inside resolve against its folder."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# problems


@dataclass
class Problem:
    """Everything a run needs besides the method."""

    target: object
    quantities: List[str]
    f: Optional[Callable] = None
    oracle: Optional[np.ndarray] = None
    log_z: Optional[float] = None
    z_oracle: Optional[float] = None
    init_mean: Optional[np.ndarray] = None
    init_box: Optional[np.ndarray] = None
    init_cov: object = 1.0
    average: bool = False
    notes: List[str] = field(default_factory=list)


def _data_path(name):
    return resources.files("iquad").joinpath("data", name)


def _resolve(cfg, path):
    return path if os.path.isabs(path) else os.path.join(cfg.base_dir, path)


def _read_reference(cfg, default_name):
    path = cfg.target.get("reference")
    if path is None:
        res = _data_path(default_name)
        if not res.is_file():
            return None, None
        text = res.read_text(encoding="utf-8")
        label = f"package data {default_name}"
    else:
        path = _resolve(cfg, path)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        label = path
    return json.loads(text), label


def _sha256_file(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _exoplanet_problem(cfg, tp):
    if "data" in tp:
        times, obs = load_exoplanet_csv(_resolve(cfg, tp["data"]))
    else:
        with resources.as_file(_data_path("exoplanet_data.csv")) as p:
            times, obs = load_exoplanet_csv(str(p))
    return make_exoplanet(times, obs, tp.get("sigma_o", np.sqrt(2.0)), tp.get("prior_box"),
                          bool(tp.get("swap_e_omega", False)))


def _gp_problem(cfg, tp):
    bounds = tp.get("bounds", GP_BOUNDS)
    if "data" in tp:
        z, y = load_gp_csv(_resolve(cfg, tp["data"]))
    elif cfg.full_scale:
        z, y = simulate_gp_data(np.random.default_rng(GP_DATA_SEED), n_points=500,
                                delta=GP_FULL_DELTA, sigma=GP_SIGMA)
        if "bounds" not in tp:
            bounds = GP_BOUNDS[:1] * len(GP_FULL_DELTA) + GP_BOUNDS[-1:]
    else:
        with resources.as_file(_data_path("gp_data.csv")) as p:
            z, y = load_gp_csv(str(p))
    return make_gp_posterior(z, y, tp.get("beta", 1.3), bounds)


def _attach_reference(cfg, prob, default_name):
    # the full-scale GP data set differs from the packaged one
    if cfg.full_scale and cfg.experiment == "gp" and "reference" not in cfg.target:
        ref, label = None, None
    else:
        ref, label = _read_reference(cfg, default_name)
    if ref is None:
        prob.notes.append("warning: no reference mean for this target; error columns omitted")
        return prob
    if len(ref["mean"]) != prob.target.dim:
        raise ConfigError(f"reference {label} has dimension {len(ref['mean'])}, "
                          f"target has {prob.target.dim}")
    prob.oracle = np.asarray(ref["mean"], dtype=float)
    prob.z_oracle = float(np.exp(ref["log_z"]))
    prov = ref.get("provenance", {})
    prob.notes.append(f"reference: {label}; {prov.get('method', 'unknown method')}; "
                      f"{prov.get('n_evaluations', '?')} evaluations")
    return prob


def _custom_target(cfg, tp):
    kind = tp["kind"]
    params = {k: v for k, v in tp.items() if k not in ("kind", "data", "reference")}
    try:
        if kind == "gaussian":
            return make_gaussian_target(**params)
        if kind == "nakagami":
            return make_nakagami(**params)
        if kind == "mixture5":
            return make_gaussian_mixture_5()
        if kind == "exoplanet":
            return _exoplanet_problem(cfg, tp)
        return _gp_problem(cfg, tp)
    except TypeError as exc:
        raise ConfigError(f"invalid target parameters for kind {kind!r}: {exc}") from exc


def build_problem(cfg):
    """Target, integrand, oracle and initial proposal layout for ``cfg``."""
    tp = dict(cfg.target)
    exp = cfg.experiment
    if exp == "toy1":
        target = make_nakagami(tp.get("mu", 0.0), tp.get("sigma", 1.0), tp.get("r", 4.0))
        powers = cfg.moments or [2, 4, 6, 8, 10]
        prob = Problem(target, [f"x^{p}" for p in powers],
                       f=lambda x: x[:, :1] ** np.asarray(powers, dtype=float),
                       oracle=np.array([target.moment(p) for p in powers]),
                       log_z=target.log_z, z_oracle=float(np.exp(target.log_z)),
                       init_mean=np.zeros(1), init_cov=1.0)
    elif exp == "toy2":
        mean, std = tp.get("mean", 1.0), tp.get("std", 1.0)
        target = make_gaussian_target(mean, std)
        prob = Problem(target, ["x"], oracle=np.array([float(mean)]), log_z=0.0, z_oracle=1.0,
                       init_mean=np.array([float(tp.get("proposal_mean", mean))]),
                       init_cov=1.5**2)
    elif exp == "multimodal":
        target = make_gaussian_mixture_5()
        prob = Problem(target, ["x_1", "x_2"], oracle=target.true_mean, log_z=0.0,
                       z_oracle=1.0, init_box=np.array([[-4.0, 4.0], [-4.0, 4.0]]),
                       init_cov=25.0, average=True)
    elif exp == "exoplanet":
        target = _exoplanet_problem(cfg, tp)
        box = np.array(EXOPLANET_INIT_BOX)
        prob = Problem(target, [f"x_{i + 1}" for i in range(5)], init_box=box,
                       init_cov=(EXOPLANET_INIT_SCALE * (box[:, 1] - box[:, 0])) ** 2,
                       average=True)
        _attach_reference(cfg, prob, "exoplanet_reference.json")
    elif exp == "gp":
        target = _gp_problem(cfg, tp)
        d = target.dim
        box = np.array(GP_INIT_BOX[:1] * (d - 1) + GP_INIT_BOX[-1:])
        prob = Problem(target, [f"x_{i + 1}" for i in range(d)], init_box=box,
                       init_cov=GP_INIT_VAR, average=True)
        _attach_reference(cfg, prob, "gp_reference.json")
    else:
        target = _custom_target(cfg, tp)
        names = [f"x_{i + 1}" for i in range(target.dim)]
        prob = Problem(target, names, oracle=target.true_mean, log_z=target.log_z,
                       z_oracle=None if target.log_z is None else float(np.exp(target.log_z)),
                       init_mean=np.zeros(target.dim), average=target.dim > 1)
        if tp["kind"] in ("exoplanet", "gp") and "reference" in tp:
            _attach_reference(cfg, prob, "")
        elif prob.oracle is None:
            prob.notes.append("warning: target has no oracle mean; error columns omitted")
    if "mean" in cfg.init:
        prob.init_mean = np.atleast_1d(np.asarray(cfg.init["mean"], dtype=float))
        prob.init_box = None
    if "box" in cfg.init:
        prob.init_box = np.asarray(cfg.init["box"], dtype=float)
        prob.init_mean = None
    if "cov" in cfg.init:
        prob.init_cov = cfg.init["cov"]
    if cfg.sigma is not None:
        prob.init_cov = float(cfg.sigma) ** 2
    d = prob.target.dim
    if prob.init_box is not None and prob.init_box.shape != (d, 2):
        raise ConfigError(f"invalid init box; expected {d} [low, high] pairs")
    if prob.init_mean is not None and prob.init_mean.shape != (d,):
        raise ConfigError(f"invalid init mean; expected {d} values")
    return prob


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    seed: int
    rows: List[dict]
    counts: tuple


def _seed_streams(seed):
    init_ss, method_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(method_ss)


def _inits(prob, M, rng):
    out = []
    for _ in range(M):
        if prob.init_box is not None:
            mu = rng.uniform(prob.init_box[:, 0], prob.init_box[:, 1])
        else:
            mu = prob.init_mean
        out.append((mu, prob.init_cov))
    return out


def _mc_budget(cfg, dim):
    if cfg.N is not None:
        return cfg.N
    if cfg.alpha is not None:
        return cfg.alpha**dim
    return 5**dim


def _rows(prob, seed, t, scope, est, counts):
    tgt_ev, prop_ev, w_ev = counts
    base = {"seed": seed, "t": t, "scope": scope, "target_evals": tgt_ev,
            "proposal_evals": prop_ev, "weight_evals": w_ev}
    k = len(prob.quantities)
    if est is None:
        sn = np.full(k, np.nan)
        un = None
        base.update(z_hat=np.nan, log_z_hat=np.nan, ess_igh=np.nan)
    else:
        sn = np.asarray(est.self_normalized, dtype=float).reshape(-1)
        un = None if est.unnormalized is None else np.asarray(est.unnormalized).reshape(-1)
        base.update(z_hat=est.z_hat, log_z_hat=est.log_z_hat, ess_igh=est.ess_igh)
    if prob.z_oracle is not None:
        base["sq_error_z"] = (base["z_hat"] - prob.z_oracle) ** 2
    rows = []
    for i, name in enumerate(prob.quantities):
        row = dict(base, quantity=name, estimate=sn[i],
                   estimate_unnormalized=None if un is None else un[i])
        if prob.oracle is not None:
            o = float(prob.oracle[i])
            row["oracle"] = o
            row["sq_error"] = (sn[i] - o) ** 2
            row["rel_error"] = abs(sn[i] - o) / abs(o) if o != 0 else abs(sn[i])
            if un is not None:
                row["sq_error_unnormalized"] = (un[i] - o) ** 2
                row["rel_error_unnormalized"] = abs(un[i] - o) / abs(o) if o != 0 else abs(un[i])
        rows.append(row)
    if prob.average and prob.oracle is not None:
        avg = dict(base, quantity="avg")
        avg["sq_error"] = float(np.mean([r["sq_error"] for r in rows]))
        if un is not None:
            avg["sq_error_unnormalized"] = float(np.mean([r["sq_error_unnormalized"] for r in rows]))
        rows.append(avg)
    return rows


def _single_shot(cfg, prob, seed):
    init_rng, rng = _seed_streams(seed)
    target, d = prob.target, prob.target.dim
    counter = EvalCounter()
    method = cfg.method
    if method == "igh":
        (mu, cov), = _inits(prob, 1, init_rng)
        q = GaussianProposal(mu, cov)
        ps = q.points(cfg.alpha)
        if cfg.n_prime is not None:
            ps = resample_thin(ps, cfg.n_prime, rng)
        est = igh_estimate(igh_weights(ps, target, q, counter), prob.f, prob.log_z)
    elif method in ("sm_igh", "dm_igh"):
        qs = [GaussianProposal(mu, cov) for mu, cov in _inits(prob, cfg.M or 1, init_rng)]
        sets = [q.points(cfg.alpha) for q in qs]
        if cfg.n_prime is not None:
            sets = [resample_thin(ps, cfg.n_prime, rng) for ps in sets]
        pooled = migh_weights(sets, target, qs, method[:2], counter)
        est = migh_estimate(pooled, prob.f, prob.log_z)
    else:
        (mu, cov), = _inits(prob, 1, init_rng)
        q = GaussianProposal(mu, cov)
        n = _mc_budget(cfg, d)
        if method == "qmc_is":
            est = qmc_is_estimate(target, q, prob.f, n, rng, prob.log_z, counter=counter)
        else:
            est = is_estimate(target, q, prob.f, n, rng, prob.log_z, counter)
    counts = counter.snapshot()
    return RunResult(seed, _rows(prob, seed, 1, "iteration", est, counts), counts)


def _adaptive(cfg, prob, seed):
    init_rng, rng = _seed_streams(seed)
    target = prob.target
    counter = EvalCounter()
    method = cfg.method
    if method in ("am_igh", "am_igh_dm", "amis"):
        (mu, cov), = _inits(prob, 1, init_rng)
        if method == "amis":
            trace = amis(target, mu, cov, _mc_budget(cfg, target.dim), cfg.T, rng, prob.f,
                         prob.log_z, counter)
        else:
            variant = "last" if method == "am_igh" else "temporal_dm"
            trace = am_igh(target, mu, cov, cfg.alpha, cfg.T, variant, prob.f, prob.log_z,
                           cfg.n_prime, rng if cfg.n_prime else None, counter)
    else:
        inits = _inits(prob, cfg.M or 1, init_rng)
        if method == "m_pigh":
            trace = m_pigh(target, inits, cfg.alpha, cfg.T, prob.f, prob.log_z, counter)
        else:
            trace = m_pmc(target, inits, _mc_budget(cfg, target.dim), cfg.T, rng, prob.f,
                          prob.log_z, counter)
    final = trace.final
    if final.estimates is None and final.estimates_iter is None:
        raise DegenerateWeightsError(
            f"seed {seed}: every weight of the final iteration is zero")
    rows = []
    for rec in trace.records:
        counts = (rec.target_evals, rec.proposal_evals, rec.weight_evals)
        rows += _rows(prob, seed, rec.t, "iteration", rec.estimates_iter, counts)
        rows += _rows(prob, seed, rec.t, "cumulative", rec.estimates, counts)
    return RunResult(seed, rows, counter.snapshot())


def _run_seed(cfg, prob, seed):
    if cfg.method in ADAPTIVE:
        return _adaptive(cfg, prob, seed)
    return _single_shot(cfg, prob, seed)


def _execute(cfg, prob):
    if cfg.workers == 1 or len(cfg.seeds) == 1:
        return [_run_seed(cfg, prob, s) for s in cfg.seeds]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda s: _run_seed(cfg, prob, s), cfg.seeds))


# ---------------------------------------------------------------------------
# reports


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _nanmean(values):
    vals = np.array([np.nan if v is None or v == "" else float(v) for v in values])
    if vals.size == 0 or np.all(np.isnan(vals)):
        return None
    return float(np.nanmean(vals))


def _summarize(rows):
    groups = {}
    for r in rows:
        key = (r["param"], r["value"], r["experiment"], r["method"], r["t"], r["scope"],
               r["quantity"])
        groups.setdefault(key, []).append(r)
    out = []
    for key, grp in groups.items():
        s = dict(zip(["param", "value", "experiment", "method", "t", "scope", "quantity"], key))
        s["n_runs"] = len(grp)
        for col, src in (("mean_estimate", "estimate"), ("mse", "sq_error"),
                         ("mse_unnormalized", "sq_error_unnormalized"),
                         ("mean_rel_error", "rel_error"),
                         ("mean_rel_error_unnormalized", "rel_error_unnormalized"),
                         ("mse_z", "sq_error_z"), ("mean_ess_igh", "ess_igh"),
                         ("target_evals", "target_evals"), ("proposal_evals", "proposal_evals"),
                         ("weight_evals", "weight_evals")):
            s[col] = _nanmean([g.get(src) for g in grp])
        out.append(s)
    return out


def _header(cfg_dicts, seeds, totals, notes, timestamp):
    lines = [f"# iq {__version__}"]
    if timestamp:
        lines.append(f"# created: {_dt.datetime.now(_dt.timezone.utc).isoformat()}")
    for c in cfg_dicts:
        lines.append("# config: " + json.dumps(c, sort_keys=True, separators=(",", ":")))
    lines.append("# seeds: " + ",".join(str(s) for s in seeds))
    lines.append("# totals: target_evals={} proposal_evals={} weight_evals={}".format(*totals))
    lines += [f"# {n}" for n in notes]
    return lines


def _write_csv(path, header, columns, rows):
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


@dataclass
class Report:
    rows: List[dict]
    summary: List[dict]
    notes: List[str]
    runs_path: Optional[str] = None
    summary_path: Optional[str] = None


def _collect(cfg, param="", value=""):
    prob = build_problem(cfg)
    results = _execute(cfg, prob)
    rows = []
    totals = np.zeros(3, dtype=np.int64)
    for res in results:
        totals += np.asarray(res.counts, dtype=np.int64)
        for r in res.rows:
            rows.append(dict(r, param=param, value=value, experiment=cfg.experiment,
                             method=cfg.method))
    return rows, prob.notes, prob.oracle is not None, tuple(int(t) for t in totals)


def _finish(cfg_dicts, seeds, rows, notes, has_oracle, totals, output, timestamp=True):
    columns = [c for c in RUN_COLUMNS if has_oracle or c not in ERROR_COLUMNS]
    summary = _summarize(rows)
    sum_cols = [c for c in SUMMARY_COLUMNS
                if has_oracle or c not in ("mse", "mse_unnormalized", "mean_rel_error",
                                           "mean_rel_error_unnormalized", "mse_z")]
    report = Report(rows, summary, notes)
    if output:
        os.makedirs(output, exist_ok=True)
        header = _header(cfg_dicts, seeds, totals, notes, timestamp)
        report.runs_path = os.path.join(output, "runs.csv")
        report.summary_path = os.path.join(output, "summary.csv")
        _write_csv(report.runs_path, header, columns, rows)
        _write_csv(report.summary_path, header, sum_cols, summary)
    return report


def _output_dir(cfg):
    return None if cfg.output is None else _resolve(cfg, cfg.output)


def run_experiment(config, timestamp=True):
    """Run ``config`` (an :class:`ExperimentConfig` or a dict) for every seed.

    Returns a :class:`Report` with the per-run rows and the seed-averaged
    summary; when ``output`` is set both are also written as CSV.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    rows, notes, has_oracle, totals = _collect(cfg)
    return _finish([cfg.to_dict()], cfg.seeds, rows, notes, has_oracle, totals,
                   _output_dir(cfg), timestamp)


def _set_param(raw, param, value):
    raw = copy.deepcopy(raw)
    node = raw
    keys = param.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"invalid sweep parameter {param!r}")
    node[keys[-1]] = value
    return raw


def run_sweep(config, param, grid, timestamp=True):
    """Run ``config`` once per value of ``param`` (dotted paths reach into
    ``target`` and ``init``) and report all rows together."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if not grid:
        raise ConfigError("sweep grid is empty")
    raw = cfg.to_dict()
    if param.split(".")[0] not in raw:
        raise ConfigError(f"invalid sweep parameter {param!r}; allowed fields: "
                          f"{', '.join(raw)}")
    rows, notes, cfgs = [], [], []
    totals = np.zeros(3, dtype=np.int64)
    has_oracle = True
    for value in grid:
        sub = ExperimentConfig.from_dict(_set_param(raw, param, value), cfg.base_dir)
        r, n, o, t = _collect(sub, param, value)
        rows += r
        notes += [x for x in n if x not in notes]
        has_oracle &= o
        totals += np.asarray(t, dtype=np.int64)
        cfgs.append(sub.to_dict())
    return _finish(cfgs, cfg.seeds, rows, notes, has_oracle, tuple(int(t) for t in totals),
                   _output_dir(cfg), timestamp)


# ---------------------------------------------------------------------------
# reference generation


def _write_table(path, columns, data):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def write_reference(experiment, out_dir, seed=0, final_log2=20, replicates=8):
    """Simulate the desk-scale data set of ``experiment`` and store it with a
    brute-force reference of its posterior mean.

    Writes ``<experiment>_data.csv`` and ``<experiment>_reference.json``.
    """
    _choice("experiment", experiment, ("exoplanet", "gp"))
    os.makedirs(out_dir, exist_ok=True)
    data_path = os.path.join(out_dir, f"{experiment}_data.csv")
    if experiment == "exoplanet":
        times, obs = simulate_exoplanet_data(np.random.default_rng(EXOPLANET_DATA_SEED))
        _write_table(data_path, ["t", "y"], np.column_stack([times, obs]))
        times, obs = load_exoplanet_csv(data_path)
        target = make_exoplanet(times, obs)
        box = EXOPLANET_REF_BOX
        data_info = {"data_seed": EXOPLANET_DATA_SEED, "truth": [3.0, 2.0, 200.0, np.pi, 0.2],
                     "n_obs": int(times.size), "sigma_o": float(np.sqrt(2.0))}
    else:
        z, y = simulate_gp_data(np.random.default_rng(GP_DATA_SEED), delta=GP_DELTA,
                                sigma=GP_SIGMA)
        cols = [f"z_{i + 1}" for i in range(z.shape[1])] + ["y"]
        _write_table(data_path, cols, np.column_stack([z, y]))
        z, y = load_gp_csv(data_path)
        target = make_gp_posterior(z, y, 1.3, GP_BOUNDS)
        box = GP_BOUNDS
        data_info = {"data_seed": GP_DATA_SEED, "delta": list(GP_DELTA), "sigma": GP_SIGMA,
                     "n_points": int(y.size), "beta": 1.3, "bounds": GP_BOUNDS}
    with open(data_path, encoding="utf-8") as fh:
        data_info["data_sha256"] = _sha256_file(fh.read())
    res = brute_force_reference(target, box, seed=seed, final_log2=final_log2,
                                replicates=replicates)
    prov = dict(res.provenance, generator=f"iq reference {experiment}",
                version=__version__, data=data_info)
    doc = {"experiment": experiment, "mean": res.mean.tolist(),
           "std_error": res.std_error.tolist(), "sd": res.sd.tolist(), "log_z": res.log_z,
           "ess": res.ess, "provenance": prov}
    ref_path = os.path.join(out_dir, f"{experiment}_reference.json")
    with open(ref_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return data_path, ref_path
