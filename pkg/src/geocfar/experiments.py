"""Monte Carlo experiment drivers behind the command line.

Every experiment draws clutter from per-trial RNG streams (see
:func:`geocfar.sim.trial_rng`) and reuses the same draws across SCR values,
targets, measures and enhanced dimensions (common random numbers). Only the
target echo changes between points, which keeps curve comparisons tight.

Outputs are lists of row dicts; :func:`write_csv` and :func:`write_manifest`
serialize them.
"""

import configparser
import csv
import dataclasses
import json
import math
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from .detector import DetectorConfig, quantile_threshold
from .enhance import enhanced_objective
from .exceptions import ConfigError, DomainError
from .linalg import eigvalsh_desc, hermitian_part, matrix_function
from .mean import MeanConfig, mean_matrix
from .measures import MeasureKind, measure
from .signal_model import toeplitz_covariance
from .sim import (STREAM_CALIBRATION, STREAM_H0, STREAM_H1, KClutterParams,
                  Scenario, TargetSpec, clutter_batch, gen_target, scale_to_scr,
                  split_cells)
from .spectrum import CLIP_FLOOR, extremal_spectra, lattice_maximize

CSV_DIGITS = 17
DESK_PF = 1e-2
DESK_TRIALS = 10_000
DEFAULT_SCR_DB = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------------------
# Monte Carlo windows with cached reference means

def _mean_key(kind, mean_cfg):
    # JSD and LDD share the fixed-point mean
    kind = MeasureKind.parse(kind)
    family = MeasureKind.LDD if kind is MeasureKind.JSD else kind
    cfg = mean_cfg or MeanConfig(kind=family)
    return (family, cfg.max_iters, cfg.tol, cfg.step)


class WindowBank:
    """Clutter windows for a range of trials plus cached reference data.

    Parameters
    ----------
    scenario : Scenario
    seed, stream : int
        RNG stream ids; trial ``t`` uses ``(seed, stream, t)``.
    trials : int
        Number of windows, trial indices ``0 .. trials-1``.
    guard_cells : int
    chunk : int
        Batch size for the reference-mean computation.
    """

    def __init__(self, scenario, seed, stream, trials, guard_cells=0, chunk=500):
        self.scenario = scenario
        self.seed, self.stream, self.trials = int(seed), int(stream), int(trials)
        self.chunk = int(chunk)
        cells = clutter_batch(scenario, seed, stream, np.arange(self.trials))
        self.primary, self.secondary = split_cells(cells, scenario.target_cell,
                                                   guard_cells)
        self._means = {}

    def reference(self, kind, mean_cfg=None):
        """``(C_hat, C_hat^{-1/2})`` per window for the mean family of ``kind``."""
        key = _mean_key(kind, mean_cfg)
        if key not in self._means:
            family, iters, tol, step = key
            cfg = MeanConfig(kind=family, max_iters=iters, tol=tol, step=step)
            m = self.primary.shape[-1]
            C_hat = np.empty((self.trials, m, m), dtype=np.complex128)
            for s in range(0, self.trials, self.chunk):
                # secondary covariances are rebuilt per chunk to bound memory
                Cs = toeplitz_covariance(self.secondary[s:s + self.chunk])
                C_hat[s:s + self.chunk] = mean_matrix(family, Cs, cfg).matrix
            self._means[key] = (C_hat, matrix_function(C_hat, "inv_sqrt"))
        return self._means[key]

    def primary_covariances(self, target=None, scr_db=None):
        """Toeplitz covariances of the cell under test, optionally with a target."""
        x = self.primary
        if target is not None:
            s = gen_target(target, self.scenario.num_pulses, self.scenario.prf)
            x = x + scale_to_scr(s, self.scenario.clutter.mean_power, scr_db)
        return toeplitz_covariance(x)


_BANKS = {}
_BANK_CACHE_SIZE = 3


def get_bank(scenario, seed, stream, trials, guard_cells=0):
    """Shared :class:`WindowBank`; recent banks are reused across experiments."""
    key = (scenario.num_cells, scenario.num_pulses, scenario.target_cell,
           scenario.prf, scenario.clutter, int(seed), int(stream), int(trials),
           int(guard_cells))
    if key not in _BANKS:
        while len(_BANKS) >= _BANK_CACHE_SIZE:
            _BANKS.pop(next(iter(_BANKS)))
        _BANKS[key] = WindowBank(scenario, seed, stream, trials, guard_cells)
    return _BANKS[key]


def clear_bank_cache():
    _BANKS.clear()


def statistics(cfgs, Cx, C_hat, S):
    """Detection statistics for several configs sharing ``(Cx, C_hat)``.

    Plain configs use :func:`~geocfar.measures.measure`; enhanced configs
    use the closed-form objective on the whitened spectrum ``S Cx S``,
    computed once.
    """
    out = []
    lam = None
    for cfg in cfgs:
        if cfg.enhanced:
            if lam is None:
                lam = np.maximum(eigvalsh_desc(hermitian_part(S @ Cx @ S)),
                                 CLIP_FLOOR)
            out.append(np.asarray(enhanced_objective(cfg.kind, lam, cfg.n)))
        else:
            out.append(np.asarray(measure(cfg.kind, Cx, C_hat)))
    return out


def wilson_interval(k, n, z=1.959963984540054):
    """Wilson score interval for a binomial proportion ``k / n``."""
    if n <= 0:
        return (float("nan"), float("nan"))
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


# ---------------------------------------------------------------------------
# Run description

@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run."""

    command: str
    scenario: Scenario
    detectors: list
    trials_per_point: int = DESK_TRIALS
    calibration_trials: Optional[int] = None
    targets: list = field(default_factory=list)
    n_grid: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    tool_version: str = field(default_factory=tool_version)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        def enc(obj):
            if dataclasses.is_dataclass(obj):
                return {f.name: enc(getattr(obj, f.name))
                        for f in dataclasses.fields(obj)}
            if isinstance(obj, MeasureKind):
                return obj.value
            if isinstance(obj, (list, tuple)):
                return [enc(v) for v in obj]
            if isinstance(obj, dict):
                return {k: enc(v) for k, v in obj.items()}
            if isinstance(obj, np.generic):
                return obj.item()
            return obj

        d = enc({f.name: getattr(self, f.name) for f in dataclasses.fields(self)})
        d["python"] = platform.python_version()
        d["numpy"] = np.__version__
        return d


def _calibration_trials(manifest, cfg):
    if manifest.calibration_trials is not None:
        return int(manifest.calibration_trials)
    return cfg.calibration_trials


# ---------------------------------------------------------------------------
# Experiments

def _thresholds(manifest, cfgs):
    """Calibrated threshold per config, sharing clutter across configs."""
    sc = manifest.scenario
    by_guard = {}
    for cfg in cfgs:
        by_guard.setdefault((cfg.guard_cells, _calibration_trials(manifest, cfg)),
                            []).append(cfg)
    eta = {}
    for (guard, N), group in by_guard.items():
        bank = get_bank(sc, sc.seed, STREAM_CALIBRATION, N, guard)
        Cx = bank.primary_covariances()
        for cfg in group:
            C_hat, S = bank.reference(cfg.kind, cfg.mean_cfg)
            stat = statistics([cfg], Cx, C_hat, S)[0]
            eta[cfg] = quantile_threshold(stat, cfg.pf)
    return eta


def _feasible(cfg, m):
    if cfg.enhanced and not 1 <= cfg.n <= m // 2:
        return f"n={cfg.n} outside 1..{m // 2}"
    return ""


def run_pd_sweep(manifest):
    """Detection probability per (detector, target, SCR).

    Columns: measure, enhanced, n, target, scr_db, pd, pd_lo, pd_hi, trials,
    threshold, status. Infeasible detector configs yield rows with
    ``status`` set and empty numbers rather than aborting the run.
    """
    sc = manifest.scenario
    m = sc.num_pulses
    targets = manifest.targets or [sc.target]
    cfgs = list(manifest.detectors)
    ok = [c for c in cfgs if not _feasible(c, m)]
    eta = _thresholds(manifest, ok)
    bank = get_bank(sc, sc.seed, STREAM_H1, manifest.trials_per_point,
                    ok[0].guard_cells if ok else sc.guard_cells)
    rows = []
    for tgt in targets:
        for scr in sc.scr_grid_db:
            Cx = bank.primary_covariances(tgt, scr)
            for cfg in cfgs:
                row = dict(measure=cfg.kind.value, enhanced=cfg.enhanced,
                           n=cfg.n if cfg.enhanced else "",
                           target=target_label(tgt), scr_db=float(scr))
                reason = _feasible(cfg, m)
                if reason:
                    row.update(pd="", pd_lo="", pd_hi="", trials=0,
                               threshold="", status=f"rejected: {reason}")
                    rows.append(row)
                    continue
                C_hat, S = bank.reference(cfg.kind, cfg.mean_cfg)
                stat = statistics([cfg], Cx, C_hat, S)[0]
                k = int(np.count_nonzero(stat > eta[cfg]))
                lo, hi = wilson_interval(k, bank.trials)
                row.update(pd=k / bank.trials, pd_lo=lo, pd_hi=hi,
                           trials=bank.trials, threshold=eta[cfg], status="ok")
                rows.append(row)
    return rows


def run_false_alarm_check(manifest):
    """Empirical false-alarm rate at the calibrated threshold.

    Thresholds come from the calibration stream; the check uses independent
    clutter-only windows from a separate stream.
    """
    sc = manifest.scenario
    cfgs = list(manifest.detectors)
    eta = _thresholds(manifest, cfgs)
    bank = get_bank(sc, sc.seed, STREAM_H0, manifest.trials_per_point,
                    cfgs[0].guard_cells)
    Cx = bank.primary_covariances()
    rows = []
    for cfg in cfgs:
        C_hat, S = bank.reference(cfg.kind, cfg.mean_cfg)
        stat = statistics([cfg], Cx, C_hat, S)[0]
        k = int(np.count_nonzero(stat > eta[cfg]))
        N = bank.trials
        lo, hi = wilson_interval(k, N)
        rows.append(dict(measure=cfg.kind.value, enhanced=cfg.enhanced,
                         n=cfg.n if cfg.enhanced else "", pf=cfg.pf,
                         calibration_trials=_calibration_trials(manifest, cfg),
                         threshold=eta[cfg], trials=N, pfa=k / N,
                         pfa_lo=lo, pfa_hi=hi,
                         tolerance=3.0 * math.sqrt(cfg.pf * (1 - cfg.pf) / N)))
    return rows


def target_label(spec):
    if spec.variant == "doppler":
        return f"doppler:{spec.doppler_hz:g}"
    return f"band:{spec.bandwidth}"


def bandlimited_targets(widths):
    return [TargetSpec(variant="bandlimited", bandwidth=int(b)) for b in widths]


def true_clutter_covariance(params, m):
    """Covariance of the clutter model: ``shape * scale * toeplitz(rho^|k|)``."""
    k = np.abs(np.arange(m)[:, None] - np.arange(m)[None, :])
    return (params.mean_power * params.rho ** k).astype(np.complex128)


def run_measure_ordering(manifest, reference="true"):
    """Mean statistic per band-limited target, normalized across targets.

    The reference matrix is idealized. ``"clutter-component"`` uses the
    Toeplitz covariance of the clutter part of the cell under test itself;
    ``"true"`` uses the model clutter covariance.

    Columns: measure, scr_db, bandwidth, mean_statistic, normalized, trials.
    """
    sc = manifest.scenario
    m = sc.num_pulses
    targets = manifest.targets or bandlimited_targets(range(1, 6))
    kinds = []
    for cfg in manifest.detectors:
        if cfg.kind not in kinds:
            kinds.append(cfg.kind)
    bank = get_bank(sc, sc.seed, STREAM_H1, manifest.trials_per_point,
                    sc.guard_cells)
    if reference == "clutter-component":
        C_ref = bank.primary_covariances()
    elif reference == "true":
        C_ref = true_clutter_covariance(sc.clutter, m)
    else:
        raise ConfigError(f"unknown reference {reference!r}")
    rows = []
    for scr in sc.scr_grid_db:
        Cx = {t.bandwidth: bank.primary_covariances(t, scr) for t in targets}
        for kind in kinds:
            means = {b: float(np.mean(measure(kind, C, np.broadcast_to(C_ref, C.shape))))
                     for b, C in Cx.items()}
            avg = float(np.mean(list(means.values())))
            for b, v in means.items():
                rows.append(dict(measure=kind.value, scr_db=float(scr),
                                 bandwidth=b, mean_statistic=v,
                                 normalized=v / avg if avg > 0 else 1.0,
                                 trials=bank.trials))
    return rows


def run_enhancement_study(manifest):
    """Pd per (measure, target bandwidth, n, SCR), plus the plain detector.

    Rows of the plain detector carry ``enhanced=False`` and an empty ``n``.
    Every ``n`` must satisfy ``1 <= n <= m/2``.

    Columns: measure, bandwidth, enhanced, n, scr_db, pd, pd_lo, pd_hi,
    trials, threshold.
    """
    sc = manifest.scenario
    m = sc.num_pulses
    n_grid = list(manifest.n_grid or [1, 2, 3])
    bad = [n for n in n_grid if not 1 <= n <= m // 2]
    if bad:
        raise DomainError(f"enhanced dimensions {bad} violate 1 <= n <= m/2 = {m // 2}")
    targets = manifest.targets or bandlimited_targets([1, 2, 3])
    kinds = []
    for cfg in manifest.detectors:
        if cfg.kind not in kinds:
            kinds.append(cfg.kind)
    pf = manifest.detectors[0].pf
    g = sc.guard_cells
    cfgs = []
    for kind in kinds:
        cfgs.append(DetectorConfig(kind=kind, pf=pf, guard_cells=g))
        cfgs += [DetectorConfig(kind=kind, enhanced=True, n=n, pf=pf, guard_cells=g)
                 for n in n_grid]
    eta = _thresholds(manifest, cfgs)
    bank = get_bank(sc, sc.seed, STREAM_H1, manifest.trials_per_point, g)
    rows = []
    for tgt in targets:
        for scr in sc.scr_grid_db:
            Cx = bank.primary_covariances(tgt, scr)
            for kind in kinds:
                group = [c for c in cfgs if c.kind is kind]
                C_hat, S = bank.reference(kind)
                for cfg, stat in zip(group, statistics(group, Cx, C_hat, S)):
                    k = int(np.count_nonzero(stat > eta[cfg]))
                    lo, hi = wilson_interval(k, bank.trials)
                    rows.append(dict(measure=kind.value, bandwidth=tgt.bandwidth,
                                     enhanced=cfg.enhanced,
                                     n=cfg.n if cfg.enhanced else "",
                                     scr_db=float(scr), pd=k / bank.trials,
                                     pd_lo=lo, pd_hi=hi, trials=bank.trials,
                                     threshold=eta[cfg]))
    return rows


def run_analysis_report(kinds, m, scr_grid, lattice_steps=20, lattice_max_m=5):
    """Adjusted-potential values of the flat candidate spectra.

    One row per (measure, scr, k). ``is_argmax`` marks the analytic maximizer;
    for ``m <= lattice_max_m`` a brute-force lattice search cross-checks it
    (``lattice_agrees``), otherwise that column is empty.

    Columns: measure, m, scr, k, value, is_argmax, lattice_value,
    lattice_agrees.
    """
    rows = []
    for kind in kinds:
        kind = MeasureKind.parse(kind)
        if kind is MeasureKind.JSD:
            kind_eval = MeasureKind.LDD
        else:
            kind_eval = kind
        for scr in scr_grid:
            ext = extremal_spectra(kind_eval, m, scr)
            lat_val, agrees = "", ""
            if m <= lattice_max_m:
                lv, _ = lattice_maximize(kind_eval, m, scr, steps=lattice_steps)
                lat_val = lv
                agrees = bool(abs(lv - ext.max_value) <= 1e-9 * max(1.0, abs(lv)))
            for k, val in enumerate(ext.values, start=1):
                rows.append(dict(measure=kind.value, m=m, scr=float(scr), k=k,
                                 value=float(val), is_argmax=(k == ext.best_k),
                                 lattice_value=lat_val, lattice_agrees=agrees))
    return rows


# ---------------------------------------------------------------------------
# Files

def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{CSV_DIGITS}g")
    return str(v)


def write_csv(rows, path):
    """Write rows as UTF-8 CSV with LF endings and 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([format_value(r[c]) for c in cols])
    return path


def manifest_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.name + ".json")


def write_manifest(manifest, csv_path):
    path = manifest_path(csv_path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Config files

# Flat ``key = value`` text. Keys mirror the scenario table; CONFIG_ALIASES
# maps accepted alternative spellings.
CONFIG_KEYS = {
    "number_of_range_cells": int,
    "number_of_pulses": int,
    "false_alarm_probability": float,
    "target_cell": int,
    "pulse_repetition_frequency": float,
    "shape_parameter": float,
    "scalar_parameter": float,
    "speckle_correlation": float,
    "doppler_frequency": float,
    "target_variant": str,
    "bandwidth": int,
    "guard_cells": int,
    "seed": int,
    "trials": int,
    "calibration_trials": int,
    "scr_db": str,
    "measure": str,
    "enhanced": str,
    "n": str,
}
CONFIG_ALIASES = {"scale_parameter": "scalar_parameter"}


def parse_config(text):
    """Parse flat ``key = value`` config text into a typed dict.

    ``#`` and ``;`` start comments. Unknown keys and bad values raise
    :class:`~geocfar.exceptions.ConfigError`.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       delimiters=("=", ":"))
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    out = {}
    for key, raw in parser["run"].items():
        key = CONFIG_ALIASES.get(key.strip().lower().replace("-", "_"), key)
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](raw.strip())
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return out


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def parse_float_list(text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def scenario_from_config(cfg, pf=DESK_PF):
    """Build a :class:`Scenario` from parsed config values."""
    try:
        target = TargetSpec(
            variant=cfg.get("target_variant", "doppler"),
            doppler_hz=cfg.get("doppler_frequency", 135.0),
            bandwidth=cfg.get("bandwidth"))
        clutter = KClutterParams(shape=cfg.get("shape_parameter", 1.0),
                                 scale=cfg.get("scalar_parameter", 0.5),
                                 rho=cfg.get("speckle_correlation", 0.0))
        return Scenario(
            num_cells=cfg.get("number_of_range_cells", 17),
            num_pulses=cfg.get("number_of_pulses", 15),
            target_cell=cfg.get("target_cell", 9),
            pf=cfg.get("false_alarm_probability", pf),
            prf=cfg.get("pulse_repetition_frequency", 1000.0),
            clutter=clutter, target=target,
            scr_grid_db=tuple(parse_float_list(cfg["scr_db"]))
            if "scr_db" in cfg else DEFAULT_SCR_DB,
            seed=cfg.get("seed", 0),
            guard_cells=cfg.get("guard_cells", 0))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
