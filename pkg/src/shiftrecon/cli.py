"""Seeded experiment runner and command-line entry point.

Every subcommand reads an optional flat ``key=value`` config, runs a
deterministic computation and writes CSV. Per-trial random streams are
``default_rng([seed, setting, trial])``; trials run in a thread pool but are
collected in index order, so the bytes never depend on ``--threads``.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import decouple as dc
from .bounds import bound_report
from .errors import RankDeficientError, ShiftReconError, UnsamplableComponentError
from .exppoly import ExpPoly, FitConstraints, NoisySamples, add_noise
from .geometry import SamplingSet, metric_span, recommend_points
from .lsqfit import fit_error_vs_truth, fit_least_squares, random_feasible
from .prony import min_max_matching

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_CERTIFICATE = 0, 2, 3
TRUTH_GAP_FRACTION = 0.05
AMP_RANGE = (0.5, 2.0)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- config


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment; later keys override."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


@dataclass
class ExperimentConfig:
    """Typed view over the raw key/value pairs."""

    experiment: str
    values: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    trials: int | None = None
    threads: int = 1
    certify: bool = False
    base_dir: Path = Path(".")

    def _raw(self, key: str, default: Any) -> Any:
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self.experiment}: missing required key '{key}'")
        return default

    def real(self, key: str, default: Any = None) -> float:
        v = self._raw(key, default)
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not a number: {v!r}") from None

    def integer(self, key: str, default: Any = None) -> int:
        v = self._raw(key, default)
        try:
            return int(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not an integer: {v!r}") from None

    def reals(self, key: str, default: Any = None) -> list[float]:
        v = self._raw(key, default)
        try:
            out = [float(x) for x in v.split(",")] if isinstance(v, str) else [float(x) for x in v]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not a list of numbers: {v!r}") from None
        if not out:
            raise ConfigError(f"{key}: empty list")
        return out

    def integers(self, key: str, default: Any = None) -> list[int]:
        v = self._raw(key, default)
        try:
            out = [int(x) for x in v.split(",")] if isinstance(v, str) else [int(x) for x in v]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not a list of integers: {v!r}") from None
        if not out:
            raise ConfigError(f"{key}: empty list")
        return out

    def complexes(self, key: str, default: Any = None) -> list[complex]:
        v = self._raw(key, default)
        try:
            return [complex(x.strip().replace(" ", "")) for x in v.split(",")]
        except (AttributeError, ValueError):
            raise ConfigError(f"{key}: not a list of complex numbers: {v!r}") from None

    def path(self, key: str) -> Path:
        p = Path(self._raw(key, _REQUIRED))
        return p if p.is_absolute() else self.base_dir / p

    def trial_count(self, default: int) -> int:
        k = self.trials if self.trials is not None else self.integer("trials", default)
        if k < 1:
            raise ConfigError("trials must be >= 1")
        return k


_REQUIRED = object()


# ---------------------------------------------------------------- output


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]
    meta: list[tuple[str, Any]] = field(default_factory=list)
    certified: bool = True


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    for key, value in table.meta:
        buf.write(f"# {key}={_cell(value)}\n")
    buf.write(",".join(table.header) + "\n")
    for row in table.rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _parallel(fn: Callable[[Any], Any], items: Sequence[Any], threads: int) -> list[Any]:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def trial_rng(seed: int, setting: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, setting, trial])


def random_truth(N: int, lam: float, rng: np.random.Generator, gap_fraction: float = TRUTH_GAP_FRACTION) -> ExpPoly:
    """Frequencies uniform-feasible under ``(lam, gap_fraction * lam)``, amplitudes of
    modulus ``U[0.5, 2]`` with uniform phase; returned in ascending frequency order."""
    phi = random_feasible(N, FitConstraints(lam, gap_fraction * lam), rng)
    amps = rng.uniform(*AMP_RANGE, N) * np.exp(2j * np.pi * rng.random(N))
    return ExpPoly(amps, phi).sorted()


def _headline(N: int) -> int:
    # the second frequency (ascending) is the reported column, or the only one
    return 1 if N > 1 else 0


def _fit_trial(truth: ExpPoly, S, eps1: float, eps2: float, lam: float, rng: np.random.Generator,
               starts: int) -> float:
    N = truth.degree
    constraints = FitConstraints(lam, TRUTH_GAP_FRACTION * lam)
    samples = NoisySamples(S, add_noise(truth(S), eps1, rng), eps1)
    init = truth.frequencies + rng.uniform(-eps2, eps2, N)
    res = fit_least_squares(samples, N, constraints, init=init, starts=starts, seed=int(rng.integers(2**32)))
    return float(fit_error_vs_truth(res, truth)[1][_headline(N)])


# ---------------------------------------------------------------- experiments


def exp1_layout(n: int, d: float, R: float) -> np.ndarray:
    """Endpoints fixed at 0 and R with the remaining points at spacing ``d`` from 0."""
    if n < 3:
        raise ConfigError("exp1 needs n >= 3")
    if not d > 0 or (n - 2) * d >= R:
        raise ConfigError(f"interior points at spacing d={d!r} leave [0, R]")
    return np.concatenate([np.arange(n - 1) * d, [R]])


def run_exp1(cfg: ExperimentConfig) -> Table:
    N, lam, R, n = cfg.integer("N", 2), cfg.real("lambda", 1.0), cfg.real("R", 60.0), cfg.integer("n", 35)
    eps1, eps2 = cfg.real("eps1", 1e-8), cfg.real("eps2", 1e-5)
    starts = cfg.integer("starts", 0)
    if "d" in cfg.values:
        ds = cfg.reals("d")
    else:
        d_max = cfg.real("d_max", R / (n - 1))
        d_min = cfg.real("d_min", d_max / 10)
        ds = list(np.geomspace(d_min, d_max, cfg.integer("d_count", 9)))
    trials = cfg.trial_count(20)
    truth = random_truth(N, lam, np.random.default_rng(cfg.seed))
    layouts = [exp1_layout(n, d, R) for d in ds]
    reports = [bound_report(S, N, lam, TRUTH_GAP_FRACTION * lam, eps1, truth.amplitudes) for S in layouts]
    jobs = [(i, t) for i in range(len(ds)) for t in range(trials)]

    def job(it):
        i, t = it
        return _fit_trial(truth, layouts[i], eps1, eps2, lam, trial_rng(cfg.seed, i, t), starts)

    errs = _parallel(job, jobs, cfg.threads)
    hl = _headline(N)
    rows = [[ds[i], t, e, reports[i].omega, reports[i].freq_bound[hl]] for (i, t), e in zip(jobs, errs)]
    meta = _truth_meta(truth, cfg.seed) + [("layout", "left-cluster"), ("eps1", eps1), ("eps2", eps2), ("n", n)]
    return Table(["d", "trial", "freq_err", "omega", "bound"], rows, meta,
                 all(r.certified for r in reports))


def run_exp2(cfg: ExperimentConfig) -> Table:
    N, lam, R = cfg.integer("N", 2), cfg.real("lambda", 0.1), cfg.real("R", 10.0)
    eps1, eps2 = cfg.real("eps1", 1e-8), cfg.real("eps2", 1e-2)
    starts = cfg.integer("starts", 0)
    ns = cfg.integers("n", list(range(4, 26)))
    if any(n < 2 for n in ns):
        raise ConfigError("each n must be >= 2 (both endpoints are sampled)")
    trials = cfg.trial_count(20)
    truth = random_truth(N, lam, np.random.default_rng(cfg.seed))
    sets = [np.linspace(0.0, R, n) for n in ns]
    spans = [metric_span(S, 2 * N, lam) for S in sets]
    jobs = [(i, t) for i in range(len(ns)) for t in range(trials)]

    def job(it):
        i, t = it
        if ns[i] < 2 * N:
            return math.nan, "underdetermined"
        try:
            return _fit_trial(truth, sets[i], eps1, eps2, lam, trial_rng(cfg.seed, i, t), starts), "ok"
        except RankDeficientError:
            return math.nan, "rank_deficient"

    out = _parallel(job, jobs, cfg.threads)
    rows = [[ns[i], t, e, spans[i].omega, spans[i].M_bound, st] for (i, t), (e, st) in zip(jobs, out)]
    meta = _truth_meta(truth, cfg.seed) + [("eps1", eps1), ("eps2", eps2)]
    return Table(["n", "trial", "freq_err", "omega", "M", "status"], rows, meta,
                 all(s.omega > 0 for s in spans))


def _truth_meta(truth: ExpPoly, seed: int) -> list[tuple[str, Any]]:
    recs = ";".join(f"{_cell(a)} {_cell(b)} {_cell(c)}" for a, b, c in truth.to_records())
    return [("seed", seed), ("truth", "uniform feasible frequencies gap 0.05*lambda, |a|~U[0.5,2], uniform phase"),
            ("truth_records", recs)]


def _mixture_errors(fit: dc.Reconstruction, truth: dc.ShiftMixture) -> tuple[float, float]:
    shift_err = amp_err = 0.0
    for f, c in zip(fit.fits, truth.components):
        cost_x = np.abs(c.shifts[:, None] - f.shifts[None, :])
        cost_a = np.abs(c.amplitudes[:, None] - f.amplitudes[None, :])
        p = np.array(min_max_matching(cost_x, cost_a))
        idx = np.arange(c.q)
        shift_err = max(shift_err, float(cost_x[idx, p].max()))
        amp_err = max(amp_err, float(cost_a[idx, p].max()))
    return shift_err, amp_err


def _reconstruct_truth(truth: dc.ShiftMixture, sets, etas, sigmas, noise: float, rng, starts: int,
                       init_truth: bool, threads: int = 1):
    """Sample ``F(F)`` on each ``S_j`` (plus noise) and reconstruct under the declared bounds."""
    measured = []
    for S in sets:
        vals = dc.fourier_of_mixture(truth, S)
        measured.append(add_noise(vals, noise, rng) if noise > 0 else vals)
    inits = [c.shifts for c in truth.components] if init_truth else None
    return dc.reconstruct(measured, sets, truth.models, [c.q for c in truth.components], etas, sigmas,
                          noise_bounds=[noise] * truth.k, init_shifts=inits, starts=starts,
                          seed=int(rng.integers(2**32)), beta=truth.beta, threads=threads), measured


def run_example3(cfg: ExperimentConfig) -> Table:
    etas = cfg.reals("eta", [0.5, 1.0])
    ms = cfg.integers("m", [10, 32])
    N = cfg.integer("N", 2)
    delta = cfg.real("delta", 0.0)
    starts = cfg.integer("starts", 0)
    for eta in etas:
        if not 0 < eta <= 1:
            raise ConfigError("eta must lie in (0, 1]")
    jobs = [(i, k) for i in range(len(etas)) for k in range(len(ms))]

    def job(it):
        i, k = it
        eta, m = etas[i], ms[k]
        truth = dc.example_mixture(eta, seed=cfg.seed, N=N)
        sets = dc.example_sampling_sets(m)
        rng = trial_rng(cfg.seed, i, k)
        declared = [TRUTH_GAP_FRACTION * eta] * truth.k
        fit, measured = _reconstruct_truth(truth, sets, [eta] * truth.k, declared, delta, rng, starts,
                                           init_truth=True)
        sx, sa = _mixture_errors(fit, truth)
        c_max = max(float(np.max(np.abs(f.system.rhs))) for f in fit.fits)
        return [eta, m, fit.fits[0].bounds.omega, fit.fits[1].bounds.omega, sx, sa, fit.certified], c_max

    out = _parallel(job, jobs, cfg.threads)
    rows = [r for r, _ in out]
    meta: list[tuple[str, Any]] = [("seed", cfg.seed), ("delta", delta)]
    for eta in dict.fromkeys(etas):
        if eta < 1.0:
            meta.append((f"threshold_m_eta{_cell(eta)}", (4 * N * N - 1) / (1 - eta)))
    for (i, k), (_, c_max) in zip(jobs, out):
        if etas[i] == 1.0:
            meta.append((f"witness_max_abs_c_m{ms[k]}", c_max))
    return Table(["eta", "m", "omega1", "omega2", "max_shift_err", "max_amp_err", "certified"], rows, meta,
                 all(r[-1] for r in rows))


def _load_points(cfg: ExperimentConfig) -> SamplingSet:
    if "points" in cfg.values:
        return SamplingSet.read(cfg.path("points"))
    if "m" in cfg.values and "R" in cfg.values:
        return SamplingSet.equidistant(cfg.real("R"), cfg.integer("m"))
    raise ConfigError("need 'points' (file) or both 'R' and 'm'")


def run_span(cfg: ExperimentConfig) -> Table:
    S = _load_points(cfg)
    rep = metric_span(S, cfg.integer("N", _REQUIRED), cfg.real("lambda", _REQUIRED))
    return Table(["omega", "M", "argmax_epsilon", "covering"],
                 [[rep.omega, rep.M_bound, rep.argmax_epsilon, rep.covering_at_argmax]], [], rep.omega > 0)


def run_bounds(cfg: ExperimentConfig) -> Table:
    S = _load_points(cfg)
    N = cfg.integer("N", _REQUIRED)
    amps = cfg.complexes("amplitudes", ",".join(["1"] * N))
    dfreq = cfg.real("delta_freq", math.inf) if N > 1 else None
    kappa = cfg.real("kappa") if "kappa" in cfg.values else None
    rep = bound_report(S, N, cfg.real("lambda", _REQUIRED), dfreq, cfg.real("noise", 0.0), amps, kappa=kappa)
    row = rep.row()
    return Table(list(row), [list(row.values())], [("amp_bound_alt", rep.amp_bound_alt)], rep.certified)


def _read_samples(path: Path) -> NoisySamples:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(x) for x in line.replace(",", " ").split()])
    arr = np.array(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ConfigError(f"{path}: expected rows 's re im'")
    return NoisySamples(arr[:, 0], arr[:, 1] + 1j * arr[:, 2])


def run_fit(cfg: ExperimentConfig) -> Table:
    samples = _read_samples(cfg.path("data"))
    N = cfg.integer("N", _REQUIRED)
    lam = cfg.real("lambda", _REQUIRED)
    constraints = FitConstraints(lam, cfg.real("delta", _REQUIRED))
    init = cfg.reals("init") if "init" in cfg.values else None
    noise = cfg.real("noise", 0.0)
    res = fit_least_squares(samples, N, constraints, init=init, starts=cfg.integer("starts", 20), seed=cfg.seed)
    rep = bound_report(samples.points, N, lam, constraints.delta if N > 1 else None, noise, res.amplitudes)
    order = np.argsort(res.frequencies)
    rows = [[j, res.amplitudes[k].real, res.amplitudes[k].imag, res.frequencies[k], rep.freq_bound[k]]
            for j, k in enumerate(order)]
    meta = [("objective", res.objective), ("converged", res.converged), ("omega", rep.omega),
            ("amp_bound", rep.amp_bound)]
    return Table(["term", "re", "im", "phi", "freq_bound"], rows, meta, rep.certified)


def load_mixture(path: Path) -> tuple[dc.ShiftMixture, list[float], list[float | None]]:
    """Read a JSON mixture and its declared a-priori bounds.

    Layout: ``{"beta": 6.28.., "components": [{"signal": "BOX", "shifts": [..],
    "amplitudes": [[re, im], ..], "eta": .., "sigma": ..}, ..]}``. ``eta`` and
    ``sigma`` default to the true values; TABULATED components add
    ``"table": [[s, re, im], ..]``.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        comps, etas, sigmas = [], [], []
        for i, c in enumerate(doc["components"]):
            name = str(c["signal"]).upper()
            if name == "TABULATED":
                model = dc.tabulated_signal(c.get("name", f"TABULATED{i}"), c["table"])
            elif name in dc.BUILTIN_SIGNALS:
                model = dc.BUILTIN_SIGNALS[name]
            else:
                raise ConfigError(f"unknown signal '{c['signal']}'")
            amps = [complex(re, im) for re, im in c["amplitudes"]]
            comp = dc.Component(model, np.array(c["shifts"], dtype=float), np.array(amps))
            comps.append(comp)
            etas.append(float(c["eta"]) if "eta" in c else None)
            sigmas.append(float(c["sigma"]) if "sigma" in c else None)
        mix = dc.ShiftMixture(tuple(comps), float(doc.get("beta", dc.BETA)))
        etas = [e if e is not None else c.max_frequency(mix.beta) for e, c in zip(etas, comps)]
        sigmas = [g if g is not None else (c.min_gap(mix.beta) if c.q > 1 else None) for g, c in zip(sigmas, comps)]
        return mix, etas, sigmas
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: malformed mixture file ({exc})") from None


def run_decouple(cfg: ExperimentConfig) -> Table:
    truth, etas, sigmas = load_mixture(cfg.path("mixture"))
    R = cfg.real("R", _REQUIRED)
    thin = cfg.integer("thin", 1)
    sets = [dc.common_zero_set(truth.models, j, R, thin=thin) for j in range(truth.k)]
    for j, S in enumerate(sets):
        if S.size == 0:
            raise UnsamplableComponentError(f"component {j} has an empty sampling set on [0, {R!r}]")
    init_truth = cfg._raw("init", "truth") == "truth"
    fit, _ = _reconstruct_truth(truth, sets, etas, sigmas, cfg.real("delta", 0.0), np.random.default_rng(cfg.seed),
                                cfg.integer("starts", 0 if init_truth else 20), init_truth, cfg.threads)
    rows = []
    for f, c in zip(fit.fits, truth.components):
        sub = dc.Reconstruction([f], truth.beta)
        sx, sa = _mixture_errors(sub, dc.ShiftMixture((c,), truth.beta))
        rows.append([f.j, c.q, f.system.sample_points.size, f.bounds.omega, f.system.kappa, sx, sa,
                     f.bounds.amp_bound, f.certified])
    return Table(["component", "q", "samples", "omega", "kappa", "max_shift_err", "max_amp_err", "amp_bound",
                  "certified"], rows, [("seed", cfg.seed), ("R", R)], fit.certified)


def run_recommend(cfg: ExperimentConfig) -> Table:
    N, lam, R = cfg.integer("N", _REQUIRED), cfg.real("lambda", _REQUIRED), cfg.real("R", _REQUIRED)
    factors = cfg.integers("factors", [1, 2, 3, 4, 5])
    rows = [list(r) for r in recommend_points(N, lam, R, factors)]
    return Table(["factor", "m", "omega"], rows, [], all(r[2] > 0 for r in rows))


RUNNERS: dict[str, Callable[[ExperimentConfig], Table]] = {
    "span": run_span, "bounds": run_bounds, "fit": run_fit, "decouple": run_decouple,
    "exp1": run_exp1, "exp2": run_exp2, "example3": run_example3, "recommend": run_recommend,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiftrecon", description="Exponential-polynomial recovery and certification")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="key=value config file")
        sp.add_argument("--seed", type=int, help="overrides the config seed (default 0)")
        sp.add_argument("--out", type=Path, help="CSV destination (default stdout)")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--certify", action="store_true", help="exit 3 if a metric span is zero")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extra config entry")
    return p


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, str] = {}
    base = Path(".")
    if args.config is not None:
        values.update(parse_config(args.config.read_text(encoding="utf-8")))
        base = args.config.parent
    for item in args.set:
        values.update(parse_config(item))
    seed = args.seed if args.seed is not None else int(values.get("seed", 0))
    if seed < 0 or seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if args.threads < 1:
        raise ConfigError("threads must be >= 1")
    return ExperimentConfig(args.command, values, seed, args.trials, args.threads,
                            args.certify or values.get("certify", "false").lower() == "true", base)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = make_config(args)
        table = RUNNERS[args.command](cfg)
    except (ConfigError, OSError, ShiftReconError, ValueError) as exc:
        print(f"shiftrecon {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render_csv(table)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if cfg.certify and not table.certified:
        print(f"shiftrecon {args.command}: no uniqueness certificate (zero metric span)", file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
