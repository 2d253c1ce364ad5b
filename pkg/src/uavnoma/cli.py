"""Experiment front-end: scenario files in, CSV tables and SVG plots out.

Scenario files are line-oriented ``key = value`` under ``[section]`` headers
(INI syntax, ``#`` comments).  Every key is optional except ``schemes.list``;
omitted keys take the defaults shown below.

    [geometry]
    user_distances      = 10.0, 12.92, 16.69, 21.58  # ascending, from the serving transmitter
    inter_user_distance = 5.0                      # near-user -> far-user relaying link
    bs_uav_distance     = 1.0                      # first relay hop
    uav_user_baseline   = 1.0                      # second-hop baseline (1.0 = fading only)
    wavelength          = 0.125
    path_loss_exponent  = 2.7

    [fading]
    kind     = rayleigh        # deterministic | rayleigh | rician
    rician_k = 0.0

    [schemes]
    list    = tdma             # coop-noma, noncoop-noma, oma, hybrid-nf, hybrid-nnff,
                               # sc-noma, tdma; append +uav to route through the relay
    metrics = sum-rate         # sum-rate and/or outage

    [power]
    pair_split = 0.25, 0.75    # strongest user first, strictly increasing, sums to 1
    sc_split   = 0.10, 0.20, 0.30, 0.40

    [pairing]                  # optional per-scheme strategy override
    hybrid-nf = best           # nf | nnff | random | best

    [snr]
    grid_db = 0, 5, 10, 15, 20, 25, 30

    [outage]
    target_rates = 1.0, 1.0, 1.0, 1.0
    mode         = per-user    # per-user | any-user
    user_index   = -1          # watched user for per-user mode (-1 = far user)

    [monte_carlo]
    trials      = 100000
    master_seed = 42
    workers     = 1

    [output]
    csv  = results.csv
    plot =                     # empty = no plot unless --plot is given

CSV schema (bit-exact, shortest round-trip float text): columns
``snr_db, scheme, metric, value, ci_half_width, trials``, rows sorted by
scheme label, then metric, then SNR.  Exit codes: 0 success, 2 validation
error, 3 runtime error.
"""

import argparse
import configparser
import csv
import io
import os
import sys
from dataclasses import dataclass, replace

from .channel import FadingKind, FadingSpec, NetworkGeometry
from .pairing import PairingStrategy
from .schemes import PowerSplit, SchemeFamily, SchemeId
from .sim import (
    MonteCarloConfig,
    OutageMode,
    OutageSpec,
    SnrGrid,
    estimate_ergodic_sum_rate,
    estimate_outage_curve,
)

METRICS = ("outage", "sum-rate")

_TWO_USER = (SchemeFamily.COOP_NOMA, SchemeFamily.NONCOOP_NOMA, SchemeFamily.OMA)
_HYBRID = (SchemeFamily.HYBRID_NF, SchemeFamily.HYBRID_NNFF)

_KNOWN_KEYS = {
    "geometry": ("user_distances", "inter_user_distance", "bs_uav_distance",
                 "uav_user_baseline", "wavelength", "path_loss_exponent"),
    "fading": ("kind", "rician_k"),
    "schemes": ("list", "metrics"),
    "power": ("pair_split", "sc_split"),
    "pairing": None,  # keys are scheme labels, validated against the scheme list
    "snr": ("grid_db",),
    "outage": ("target_rates", "mode", "user_index"),
    "monte_carlo": ("trials", "master_seed", "workers"),
    "output": ("csv", "plot"),
}

_DEFAULTS = {
    "user_distances": (10.0, 12.92, 16.69, 21.58),
    "inter_user_distance": 5.0,
    "bs_uav_distance": 1.0,
    "uav_user_baseline": 1.0,
    "wavelength": 0.125,
    "path_loss_exponent": 2.7,
    "fading_kind": FadingKind.RAYLEIGH,
    "rician_k": 0.0,
    "metrics": ("sum-rate",),
    "pair_split": (0.25, 0.75),
    "sc_split": (0.10, 0.20, 0.30, 0.40),
    "grid_db": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
    "target_rate": 1.0,
    "mode": OutageMode.PER_USER,
    "user_index": -1,
    "trials": 100000,
    "master_seed": 42,
    "workers": 1,
    "csv": "results.csv",
}


class ScenarioError(ValueError):
    """A scenario file violated its grammar or an invariant; message names the key."""


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: NetworkGeometry
    fading: FadingSpec
    schemes: tuple
    metrics: tuple
    pair_split: PowerSplit
    sc_split: PowerSplit
    pairing_overrides: tuple  # sorted ((scheme label, PairingStrategy), ...)
    grid: SnrGrid
    outage: OutageSpec
    mc: MonteCarloConfig
    csv_path: str
    plot_path: str = None

    def strategy_for(self, scheme: SchemeId) -> PairingStrategy:
        for label, strategy in self.pairing_overrides:
            if label == scheme.label:
                return strategy
        return None  # simulator falls back to the scheme family's own pairing

    def splits_for(self, scheme: SchemeId):
        if scheme.family is SchemeFamily.SC_NOMA:
            return self.sc_split
        if scheme.family in (SchemeFamily.OMA, SchemeFamily.TDMA):
            return None
        return self.pair_split


def _fail(key: str, message: str):
    raise ScenarioError(f"{key}: {message}")


def _parse_floats(key: str, raw: str) -> tuple:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        _fail(key, "expected a comma-separated list of numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        _fail(key, f"expected numbers, got {raw!r}")


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        _fail(key, f"expected a number, got {raw!r}")


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        _fail(key, f"expected an integer, got {raw!r}")


def _build(key: str, factory, *args, **kwargs):
    """Construct a validated object, rewriting its complaint to name the key."""
    try:
        return factory(*args, **kwargs)
    except ValueError as exc:
        _fail(key, str(exc))


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and fully validate scenario-file contents.

    Raises :class:`ScenarioError` naming the offending key and constraint.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"scenario syntax: {exc}") from None

    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            _fail(section, f"unknown section; known sections: {', '.join(_KNOWN_KEYS)}")
        known = _KNOWN_KEYS[section]
        if known is not None:
            for key in cp[section]:
                if key not in known:
                    _fail(f"{section}.{key}", f"unknown key; known keys: {', '.join(known)}")

    def get(section, key, default=None):
        return cp.get(section, key, fallback=default)

    distances_raw = get("geometry", "user_distances")
    geometry = _build(
        "geometry", NetworkGeometry,
        user_distances=(_parse_floats("geometry.user_distances", distances_raw)
                        if distances_raw is not None else _DEFAULTS["user_distances"]),
        inter_user_distance=_parse_float("geometry.inter_user_distance",
                                         get("geometry", "inter_user_distance",
                                             str(_DEFAULTS["inter_user_distance"]))),
        uav_hop_distances=(
            _parse_float("geometry.bs_uav_distance",
                         get("geometry", "bs_uav_distance", str(_DEFAULTS["bs_uav_distance"]))),
            _parse_float("geometry.uav_user_baseline",
                         get("geometry", "uav_user_baseline", str(_DEFAULTS["uav_user_baseline"]))),
        ),
        wavelength=_parse_float("geometry.wavelength",
                                get("geometry", "wavelength", str(_DEFAULTS["wavelength"]))),
        path_loss_exponent=_parse_float("geometry.path_loss_exponent",
                                        get("geometry", "path_loss_exponent",
                                            str(_DEFAULTS["path_loss_exponent"]))),
    )
    n_users = geometry.num_users

    kind_raw = get("fading", "kind", _DEFAULTS["fading_kind"].value)
    try:
        kind = FadingKind(kind_raw.strip().lower())
    except ValueError:
        _fail("fading.kind", f"unknown kind {kind_raw!r}; valid kinds: "
                             f"{', '.join(k.value for k in FadingKind)}")
    fading = _build("fading.rician_k", FadingSpec, kind=kind,
                    rician_k=_parse_float("fading.rician_k",
                                          get("fading", "rician_k", str(_DEFAULTS["rician_k"]))))

    schemes_raw = get("schemes", "list")
    if not schemes_raw or not schemes_raw.strip():
        _fail("schemes.list", "at least one scheme is required")
    schemes = []
    for token in schemes_raw.split(","):
        token = token.strip()
        if not token:
            continue
        schemes.append(_build("schemes.list", SchemeId.parse, token))
    if not schemes:
        _fail("schemes.list", "at least one scheme is required")
    if len(set(s.label for s in schemes)) != len(schemes):
        _fail("schemes.list", "duplicate scheme entries")

    metrics_raw = get("schemes", "metrics", ", ".join(_DEFAULTS["metrics"]))
    metrics = tuple(m.strip().lower() for m in metrics_raw.split(",") if m.strip())
    if not metrics:
        _fail("schemes.metrics", "at least one metric is required")
    for m in metrics:
        if m not in METRICS:
            _fail("schemes.metrics", f"unknown metric {m!r}; valid metrics: {', '.join(METRICS)}")
    if len(set(metrics)) != len(metrics):
        _fail("schemes.metrics", "duplicate metric entries")

    pair_split = _build("power.pair_split", PowerSplit,
                        _parse_floats("power.pair_split",
                                      get("power", "pair_split",
                                          ", ".join(map(str, _DEFAULTS["pair_split"])))))
    sc_split = _build("power.sc_split", PowerSplit,
                      _parse_floats("power.sc_split",
                                    get("power", "sc_split",
                                        ", ".join(map(str, _DEFAULTS["sc_split"])))))

    overrides = []
    if cp.has_section("pairing"):
        labels = {s.label for s in schemes}
        for key, value in cp["pairing"].items():
            if key not in labels:
                _fail(f"pairing.{key}", "not in schemes.list")
            try:
                strategy = PairingStrategy(value.strip().lower())
            except ValueError:
                _fail(f"pairing.{key}", f"unknown strategy {value!r}; valid strategies: "
                                        f"{', '.join(s.value for s in PairingStrategy)}")
            overrides.append((key, strategy))

    grid = _build("snr.grid_db", SnrGrid,
                  _parse_floats("snr.grid_db",
                                get("snr", "grid_db", ", ".join(map(str, _DEFAULTS["grid_db"])))))

    targets_raw = get("outage", "target_rates")
    targets = (_parse_floats("outage.target_rates", targets_raw) if targets_raw is not None
               else (_DEFAULTS["target_rate"],) * n_users)
    mode_raw = get("outage", "mode", _DEFAULTS["mode"].value)
    try:
        mode = OutageMode(mode_raw.strip().lower())
    except ValueError:
        _fail("outage.mode", f"unknown mode {mode_raw!r}; valid modes: "
                             f"{', '.join(m.value for m in OutageMode)}")
    outage = _build("outage.target_rates", OutageSpec, target_rates=targets, mode=mode,
                    user_index=_parse_int("outage.user_index",
                                          get("outage", "user_index", str(_DEFAULTS["user_index"]))))

    mc = _build("monte_carlo", MonteCarloConfig,
                trials=_parse_int("monte_carlo.trials",
                                  get("monte_carlo", "trials", str(_DEFAULTS["trials"]))),
                master_seed=_parse_int("monte_carlo.master_seed",
                                       get("monte_carlo", "master_seed",
                                           str(_DEFAULTS["master_seed"]))),
                workers=_parse_int("monte_carlo.workers",
                                   get("monte_carlo", "workers", str(_DEFAULTS["workers"]))))

    csv_path = (get("output", "csv", _DEFAULTS["csv"]) or _DEFAULTS["csv"]).strip()
    plot_path = (get("output", "plot", "") or "").strip() or None

    config = ScenarioConfig(
        geometry=geometry, fading=fading, schemes=tuple(schemes), metrics=metrics,
        pair_split=pair_split, sc_split=sc_split,
        pairing_overrides=tuple(sorted(overrides)),
        grid=grid, outage=outage, mc=mc, csv_path=csv_path, plot_path=plot_path,
    )
    _validate_config(config)
    return config


def _validate_config(config: ScenarioConfig):
    """Cross-field checks shared by parsing and CLI overrides."""
    n = config.geometry.num_users
    for scheme in config.schemes:
        fam = scheme.family
        if fam in _TWO_USER and n != 2:
            _fail("schemes.list", f"scheme {scheme.label!r} serves exactly two users, "
                                  f"geometry has {n}")
        if fam in _HYBRID and n % 2 != 0:
            _fail("schemes.list", f"scheme {scheme.label!r} needs an even user count, "
                                  f"geometry has {n}")
        if fam is SchemeFamily.SC_NOMA and len(config.sc_split) != n:
            _fail("power.sc_split", f"sc-noma needs one coefficient per user: "
                                    f"{n} users, {len(config.sc_split)} coefficients")
    if "outage" in config.metrics and len(config.outage.target_rates) != n:
        _fail("outage.target_rates", f"need one target per user: {n} users, "
                                     f"{len(config.outage.target_rates)} targets")
    idx = config.outage.user_index
    if not (-n <= idx < n):
        _fail("outage.user_index", f"index {idx} out of range for {n} users")


def format_scenario(config: ScenarioConfig) -> str:
    """Canonical scenario text; parse_scenario(format_scenario(c)) == c."""
    def floats(values):
        return ", ".join(repr(float(v)) for v in values)

    lines = [
        "[geometry]",
        f"user_distances = {floats(config.geometry.user_distances)}",
        f"inter_user_distance = {config.geometry.inter_user_distance!r}",
        f"bs_uav_distance = {config.geometry.uav_hop_distances[0]!r}",
        f"uav_user_baseline = {config.geometry.uav_hop_distances[1]!r}",
        f"wavelength = {config.geometry.wavelength!r}",
        f"path_loss_exponent = {config.geometry.path_loss_exponent!r}",
        "",
        "[fading]",
        f"kind = {config.fading.kind.value}",
        f"rician_k = {config.fading.rician_k!r}",
        "",
        "[schemes]",
        f"list = {', '.join(s.label for s in config.schemes)}",
        f"metrics = {', '.join(config.metrics)}",
        "",
        "[power]",
        f"pair_split = {floats(config.pair_split.coefficients)}",
        f"sc_split = {floats(config.sc_split.coefficients)}",
    ]
    if config.pairing_overrides:
        lines += ["", "[pairing]"]
        lines += [f"{label} = {strategy.value}" for label, strategy in config.pairing_overrides]
    lines += [
        "",
        "[snr]",
        f"grid_db = {floats(config.grid.points_db)}",
        "",
        "[outage]",
        f"target_rates = {floats(config.outage.target_rates)}",
        f"mode = {config.outage.mode.value}",
        f"user_index = {config.outage.user_index}",
        "",
        "[monte_carlo]",
        f"trials = {config.mc.trials}",
        f"master_seed = {config.mc.master_seed}",
        f"workers = {config.mc.workers}",
        "",
        "[output]",
        f"csv = {config.csv_path}",
        f"plot = {config.plot_path or ''}",
        "",
    ]
    return "\n".join(lines)


def run_experiment(config: ScenarioConfig) -> tuple:
    """One CurveResult per (scheme, metric), sorted by scheme label then metric.

    Every curve reuses the same per-trial streams, so scheme comparisons ride
    on common random numbers and reruns with the same seed are bit-identical.
    """
    _validate_config(config)
    results = []
    for scheme in sorted(config.schemes, key=lambda s: s.label):
        for metric in sorted(config.metrics):
            splits = config.splits_for(scheme)
            strategy = config.strategy_for(scheme)
            if metric == "outage":
                curve = estimate_outage_curve(scheme, config.outage, config.geometry,
                                              config.fading, splits, strategy,
                                              config.grid, config.mc)
            else:
                curve = estimate_ergodic_sum_rate(scheme, config.geometry, config.fading,
                                                  splits, strategy, config.grid, config.mc)
            results.append(curve)
    return tuple(results)


def render_csv(results) -> str:
    """CSV text for a set of curves (schema fixed; floats shortest round-trip)."""
    if not results:
        raise ValueError("no results to emit")
    rows = []
    for curve in results:
        for db, value, ci in zip(curve.snr_db, curve.values, curve.ci_half_width):
            rows.append((curve.scheme.label, curve.metric, db, value, ci, curve.trials))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["snr_db", "scheme", "metric", "value", "ci_half_width", "trials"])
    for label, metric, db, value, ci, trials in rows:
        writer.writerow([repr(db), label, metric, repr(value), repr(ci), trials])
    return buf.getvalue()


def emit_csv(results, path: str) -> str:
    """Write the CSV table; returns the path."""
    text = render_csv(results)
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path!r}: {exc}") from exc
    return path


def emit_plot(results, path: str) -> str:
    """Write an SVG with one series per scheme, one panel per metric."""
    if not results:
        raise ValueError("no results to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metrics = sorted({c.metric for c in results})
    fig, axes = plt.subplots(1, len(metrics), figsize=(6.4 * len(metrics), 4.8), squeeze=False)
    for ax, metric in zip(axes[0], metrics):
        for curve in sorted((c for c in results if c.metric == metric),
                            key=lambda c: c.scheme.label):
            ax.errorbar(curve.snr_db, curve.values, yerr=curve.ci_half_width,
                        marker="o", capsize=2, label=curve.scheme.label)
        if metric == "outage":
            ax.set_yscale("log")
            ax.set_ylabel("outage probability")
        else:
            ax.set_ylabel("ergodic sum rate (bit/s/Hz)")
        ax.set_xlabel("transmit SNR (dB)")
        ax.grid(True, alpha=0.4)
        ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path!r}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    mc_overrides = {}
    if args.seed is not None:
        mc_overrides["master_seed"] = args.seed
    if args.trials is not None:
        mc_overrides["trials"] = args.trials
    if mc_overrides:
        config = replace(config, mc=_build("monte_carlo", replace, config.mc, **mc_overrides))
    if args.schemes:
        schemes = tuple(_build("schemes.list", SchemeId.parse, token.strip())
                        for token in args.schemes.split(",") if token.strip())
        if not schemes:
            _fail("schemes.list", "at least one scheme is required")
        config = replace(config, schemes=schemes)
    if args.plot and not config.plot_path:
        config = replace(config, plot_path="results.svg")
    _validate_config(config)
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uavnoma",
        description="Monte-Carlo link simulator for cooperative NOMA over a UAV relay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run the experiment described by a scenario file")
    run_p.add_argument("scenario", help="path to the scenario file")
    run_p.add_argument("--seed", type=int, default=None, help="override monte_carlo.master_seed")
    run_p.add_argument("--trials", type=int, default=None, help="override monte_carlo.trials")
    run_p.add_argument("--out-dir", default=".", help="directory for output files")
    run_p.add_argument("--plot", action="store_true", help="emit the SVG plot")
    run_p.add_argument("--schemes", default=None, help="comma-separated scheme override")
    args = parser.parse_args(argv)

    try:
        try:
            with open(args.scenario, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read scenario {args.scenario!r}: {exc}", file=sys.stderr)
            return 2
        config = parse_scenario(text)
        config = _apply_overrides(config, args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        results = run_experiment(config)
        os.makedirs(args.out_dir, exist_ok=True)
        csv_path = emit_csv(results, os.path.join(args.out_dir, config.csv_path))
        print(f"wrote {csv_path}")
        for curve in results:
            if curve.metric == "outage" and curve.low_event_flags and any(curve.low_event_flags):
                points = [repr(db) for db, flag in zip(curve.snr_db, curve.low_event_flags) if flag]
                print(f"note: {curve.scheme.label} outage has fewer than 10 events at "
                      f"{', '.join(points)} dB; the normal confidence interval is "
                      f"unreliable there", file=sys.stderr)
        if config.plot_path:
            plot_path = emit_plot(results, os.path.join(args.out_dir, config.plot_path))
            print(f"wrote {plot_path}")
    except Exception as exc:  # runtime failures map to exit code 3
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
