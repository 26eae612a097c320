"""Command-line front end: ``gaugearb {simulate,detect,backtest,price,pde}``.

Parameters come from built-in defaults, then the matching section of an INI
file given with ``--config``, then ``--<key> value`` flags of the same name.
All parameters are validated before any work starts and every problem is
reported at once.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error, 5 internal error.  Failures print one JSON line to stderr with the
error ``category``, ``message`` and ``problems``.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .detector import DetectionConfig, run_detection, summarize
from .errors import ConfigError, GaugeArbError
from .estimators import spectral_gaps
from .io import (emit_panel, file_digest, ingest_csv, load_signal, save_signal, write_json,
                 write_series_csv)
from .market import MarketModel, change_numeraire, decompose_drift, three_asset_model
from .portfolio import (arbitrage_strategy, buy_and_hold, ledger_identity_residual,
                        self_financing_residual)
from .pricer import (PdeGrid, PdeProblem, PricingProblem, call_payoff, constant_arbitrage,
                     mc_price, put_payoff, solve_pde, volatility_arbitrage)
from .simulate import SimConfig, random_arbitrage_market, simulate

EXIT_CODES = {"config": 2, "data": 3, "numerical": 4, "internal": 5}
IDENTITY_TOL = 1e-12


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _opt_float(raw: str):
    return None if raw.strip().lower() in ("", "none") else float(raw)


def _opt_str(raw: str):
    return None if raw.strip().lower() in ("", "none") else raw.strip()


def _path(raw: str):
    return Path(raw.strip())


# name -> (parser, default, help); a default of None means optional,
# ``...`` means required
SCHEMAS = {
    "simulate": {
        "out": (_path, ..., "output directory"),
        "n_assets": (int, 21, "assets including the savings account"),
        "n_factors": (int, 18, "Brownian factors"),
        "market_seed": (int, 2, "seed of the random market parameters"),
        "seed": (int, 7, "seed of the price path"),
        "n_steps": (int, 2100, "number of steps"),
        "eta2": (float, 0.0, "microstructure log-price noise variance"),
        "beta_scale": (float, 1e-4, "risk premia ~ U[-s, s]"),
        "sigma_scale": (float, 1e-3, "loadings ~ U[-s, s]"),
        "arb_scale": (float, 1e-4, "arbitrage components ~ U[-s, s]"),
    },
    "detect": {
        "input": (_path, ..., "price panel CSV"),
        "out": (_path, ..., "output directory"),
        "window_len": (int, 100, "estimation window L"),
        "null_dim": (int, 2, "null dimension k"),
        "rolling": (_bool, False, "re-estimate every step and align"),
        "sweep": (_bool, True, "repeat detection in every numéraire"),
        "add_numeraire": (_bool, False, "prepend a constant-one cash column"),
        "numeraire": (_opt_str, None, "asset id to use as unit of account"),
        "known_a2": (_opt_float, None, "centre the noise band here instead of 0"),
        "debug": (_bool, False, "keep per-numéraire alpha series"),
    },
    "backtest": {
        "input": (_path, ..., "price panel CSV used by detect"),
        "signal": (_path, ..., "signal.npz written by detect"),
        "out": (_path, ..., "output directory"),
        "benchmark": (_opt_str, None, "asset id for a buy-and-hold comparison"),
        "benchmark_scale": (float, 1.0, "wealth invested in the benchmark"),
    },
    "price": {
        "out": (_path, ..., "output directory"),
        "model": (str, "three-asset", "three-asset or random"),
        "rate": (float, 0.01, "three-asset: savings rate"),
        "beta": (float, 0.3, "three-asset: market price of risk"),
        "alpha_tilde": (float, 0.05, "three-asset: arbitrage coefficient"),
        "sigma1": (float, 0.2, "three-asset: volatility of asset 1"),
        "sigma2": (float, 0.3, "three-asset: volatility of asset 2"),
        "x1": (float, 100.0, "three-asset: initial price of asset 1"),
        "x2": (float, 50.0, "three-asset: initial price of asset 2"),
        "n_assets": (int, 21, "random: assets"),
        "n_factors": (int, 18, "random: factors"),
        "market_seed": (int, 2, "random: market seed"),
        "horizon": (float, 1.0, "pricing horizon"),
        "paths": (int, 100_000, "Monte Carlo paths"),
        "mc_seed": (int, 0, "Monte Carlo seed"),
        "asset": (int, 1, "asset index to price"),
    },
    "pde": {
        "out": (_path, ..., "output directory"),
        "rate": (float, 0.05, "short rate"),
        "sigma": (float, 0.2, "volatility of the underlying"),
        "maturity": (float, 1.0, "time to expiry"),
        "strike": (float, 100.0, "strike"),
        "spot": (float, 100.0, "underlying price to report"),
        "payoff": (str, "call", "call or put"),
        "x_min": (float, 100.0 * math.exp(-2), "lower grid edge"),
        "x_max": (float, 100.0 * math.exp(2), "upper grid edge"),
        "n_space": (int, 401, "grid nodes"),
        "n_time": (int, 200, "time steps"),
        "arbitrage": (str, "none", "none, constant or volatility"),
        "alpha_tilde": (float, 0.0, "constant arbitrage field"),
        "sigma_tilde": (float, 0.25, "volatility seen by the volatility-arbitrage field"),
        "scheme": (str, "crank-nicolson", "crank-nicolson or explicit"),
    },
}

CHOICES = {
    ("price", "model"): ("three-asset", "random"),
    ("pde", "payoff"): ("call", "put"),
    ("pde", "arbitrage"): ("none", "constant", "volatility"),
    ("pde", "scheme"): ("crank-nicolson", "explicit"),
}


def resolve_config(command: str, config_file, overrides: dict) -> dict:
    """Merge defaults, the INI section ``[command]`` and flag overrides.

    Raises
    ------
    ConfigError
        Listing every missing, unknown or unparsable key.
    """
    schema = SCHEMAS[command]
    raw = {}
    problems = []
    if config_file is not None:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            read = cp.read(config_file)
        except configparser.Error as exc:
            raise ConfigError(f"{config_file}: {exc}") from exc
        if not read:
            raise ConfigError(f"cannot read config file {config_file}")
        if cp.has_section(command):
            for key, value in cp.items(command):
                if key not in schema:
                    problems.append(f"[{command}] unknown key {key!r}")
                else:
                    raw[key] = value
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    out = {}
    for key, (parse, default, _) in schema.items():
        if key in raw:
            try:
                out[key] = parse(raw[key])
            except ValueError as exc:
                problems.append(f"{key}: {exc}")
                continue
        elif default is ...:
            problems.append(f"{key}: required")
            continue
        else:
            out[key] = default
        allowed = CHOICES.get((command, key))
        if allowed and out[key] not in allowed:
            problems.append(f"{key}: must be one of {', '.join(allowed)}, got {out[key]!r}")
    problems.extend(_semantic_problems(command, out))
    if problems:
        raise ConfigError(f"{len(problems)} invalid setting(s): " + "; ".join(problems), problems)
    return out


def _semantic_problems(command: str, c: dict) -> list[str]:
    p = []

    def need(cond, msg):
        if not cond:
            p.append(msg)

    if command == "simulate":
        need(c.get("n_assets", 2) >= 2, "n_assets must be >= 2")
        need(c.get("n_factors", 0) >= 0, "n_factors must be >= 0")
        need(c.get("n_steps", 2) >= 2, "n_steps must be >= 2")
        need(c.get("eta2", 0.0) >= 0, "eta2 must be >= 0")
    elif command == "detect":
        need(c.get("window_len", 2) >= 2, "window_len must be >= 2")
        need(c.get("null_dim", 1) >= 1, "null_dim must be >= 1")
    elif command == "price":
        need(c.get("horizon", 1) >= 1, "horizon must be >= 1")
        need(c.get("paths", 1) >= 1, "paths must be >= 1")
        need(c.get("asset", 0) >= 0, "asset must be >= 0")
        need(c.get("x1", 1) > 0 and c.get("x2", 1) > 0, "initial prices must be > 0")
    elif command == "pde":
        need(c.get("x_min", 1) > 0, "x_min must be > 0")
        need(c.get("x_max", 2) > c.get("x_min", 1), "x_max must exceed x_min")
        need(c.get("n_space", 3) >= 3, "n_space must be >= 3")
        need(c.get("n_time", 1) >= 1, "n_time must be >= 1")
        need(c.get("maturity", 1) > 0, "maturity must be > 0")
        need(c.get("spot", 1) > 0, "spot must be > 0")
    return p


def _provenance(cfg: dict, inputs=()) -> dict:
    return {
        "package": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "seeds": {k: v for k, v in cfg.items() if "seed" in k},
    }


def _report(out: Path, cfg: dict, summary: dict, spectra=None, gauge_spread=None,
            inputs=(), **extra) -> Path:
    payload = {
        "config": cfg,
        "summary": summary,
        "spectra": spectra,
        "gauge_spread": gauge_spread,
        "provenance": _provenance(cfg, inputs),
    }
    payload.update(extra)
    return write_json(out / "report.json", payload)


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: dict) -> dict:
    out = cfg["out"]
    market = random_arbitrage_market(
        n_assets=cfg["n_assets"], n_factors=cfg["n_factors"], seed=cfg["market_seed"],
        beta_scale=cfg["beta_scale"], sigma_scale=cfg["sigma_scale"],
        arb_scale=cfg["arb_scale"])
    result = simulate(SimConfig(market.model, cfg["n_steps"], seed=cfg["seed"],
                                microstructure_var=cfg["eta2"]))
    emit_panel(result.observed, out / "prices.csv")
    if cfg["eta2"] > 0:
        emit_panel(result.clean, out / "clean_prices.csv")
    dec = decompose_drift(market.model)
    summary = {
        "true_a2": market.curvature,
        "null_dim": int(market.null_basis.shape[1]),
        "arb_components": market.arb_components,
        "n_steps": cfg["n_steps"],
        "n_assets": cfg["n_assets"],
        "mean_drift": dec.mean_drift,
    }
    _report(out, cfg, summary)
    return summary


def _prepare_panel(cfg: dict):
    panel = ingest_csv(cfg["input"], add_numeraire=cfg.get("add_numeraire", False))
    if cfg.get("numeraire"):
        panel = change_numeraire(panel, cfg["numeraire"])
    return panel


def cmd_detect(cfg: dict) -> dict:
    out = cfg["out"]
    panel = _prepare_panel(cfg)
    dcfg = DetectionConfig(
        window_len=cfg["window_len"],
        null_dim=cfg["null_dim"],
        rolling=cfg["rolling"],
        numeraire_sweep=cfg["sweep"],
        assume_zero_mean_noise=cfg["known_a2"] is None,
        known_a2=cfg["known_a2"],
        debug=cfg["debug"],
    )
    signal = run_detection(panel, dcfg)
    summary = summarize(signal).to_dict()
    summary["warnings"] = signal.warnings
    summary["degenerate_windows"] = int(signal.degenerate.sum())
    summary["inside_band_fraction"] = float(np.mean(
        (signal.a2_hat >= signal.noise_lo) & (signal.a2_hat <= signal.noise_hi))) \
        if signal.a2_hat.size else math.nan

    write_series_csv(out / "a2.csv", {
        "time [step]": signal.times,
        "a2_hat [1/step^2]": signal.a2_hat,
        "noise_lo [1/step^2]": signal.noise_lo,
        "noise_hi [1/step^2]": signal.noise_hi,
    })
    alpha_cols = {"time [step]": signal.alpha_times}
    for a in range(signal.k):
        alpha_cols[f"alpha_hat_{a + 1} [1/step]"] = signal.alpha_hat[:, a]
    alpha_cols["lambda_k [1/step]"] = signal.lambda_k
    write_series_csv(out / "alpha.csv", alpha_cols)
    write_series_csv(out / "eta2.csv", {
        "time [step]": signal.eta2_times,
        "eta2_hat [log-price^2]": signal.eta2_hat,
    })
    spec_cols = {"time [step]": signal.alpha_times}
    for j in range(signal.spectra.shape[1]):
        spec_cols[f"lambda_{j} [1/step]"] = signal.spectra[:, j]
    write_series_csv(out / "spectra.csv", spec_cols)

    gauge = None
    if signal.per_numeraire_a2 is not None:
        spread = signal.gauge_spread("std")
        write_series_csv(out / "gauge.csv", {
            "time [step]": signal.times,
            "mean_a2 [1/step^2]": signal.gauge_mean,
            "min_a2 [1/step^2]": signal.gauge_min,
            "max_a2 [1/step^2]": signal.gauge_max,
            "rel_std [1]": spread,
            "rel_range [1]": signal.gauge_spread("range"),
        })
        per = {"time [step]": signal.times}
        for j, name in enumerate(signal.asset_ids):
            per[f"a2_in_{name} [1/step^2]"] = signal.per_numeraire_a2[:, j]
        write_series_csv(out / "per_numeraire.csv", per)
        gauge = {
            "rel_std_mean": summary["gauge_spread_mean"],
            "rel_std_max": summary["gauge_spread_max"],
            "rel_range_mean": summary["gauge_range_mean"],
            "rel_range_max": summary["gauge_range_max"],
        }
    first, last = signal.spectra[0], signal.spectra[-1]
    spectra = {
        "first_window": first,
        "last_window": last,
        "first_window_log10_gaps": spectral_gaps(first),
        "n_windows": int(signal.spectra.shape[0]),
    }
    save_signal(signal, out / "signal.npz",
                extra={"add_numeraire": cfg["add_numeraire"], "numeraire": cfg["numeraire"]})
    _report(out, cfg, summary, spectra, gauge, inputs=[cfg["input"]])
    return summary


def cmd_backtest(cfg: dict) -> dict:
    out = cfg["out"]
    signal, extra = load_signal(cfg["signal"])
    cfg_panel = dict(cfg, add_numeraire=extra.get("add_numeraire", False),
                     numeraire=extra.get("numeraire"))
    panel = _prepare_panel(cfg_panel)
    ledger = arbitrage_strategy(signal, panel)
    resid = ledger_identity_residual(ledger, signal)
    sf = self_financing_residual(ledger, panel)
    cols = {
        "time [step]": ledger.times,
        "value [numeraire]": ledger.value,
        "increment [numeraire]": ledger.increments,
    }
    for j, name in enumerate(panel.asset_ids):
        cols[f"phi_{name} [units]"] = ledger.nominals[:, j]
    write_series_csv(out / "ledger.csv", cols)
    summary = {
        "final_value": float(ledger.value[-1]),
        "steps": int(ledger.times.size - 1),
        "value_per_step": float(ledger.value[-1] / max(ledger.times.size - 1, 1)),
        "identity_residual": resid,
        "identity_check": "PASS" if resid <= IDENTITY_TOL else "FAIL",
        "self_financing_residual": sf,
    }
    if cfg["benchmark"]:
        bench = buy_and_hold(panel, cfg["benchmark"], cfg["benchmark_scale"])
        write_series_csv(out / "benchmark.csv", {
            "time [step]": bench.times,
            "value [numeraire]": bench.value,
        })
        summary["benchmark_final_value"] = float(bench.value[-1])
    _report(out, cfg, summary, inputs=[cfg["input"], cfg["signal"]])
    return summary


def _price_model(cfg: dict) -> MarketModel:
    if cfg["model"] == "three-asset":
        return three_asset_model(cfg["rate"], cfg["beta"], cfg["alpha_tilde"], cfg["sigma1"],
                                 cfg["sigma2"], [1.0, cfg["x1"], cfg["x2"]])
    return random_arbitrage_market(cfg["n_assets"], cfg["n_factors"], cfg["market_seed"]).model


def cmd_price(cfg: dict) -> dict:
    model = _price_model(cfg)
    if cfg["asset"] >= model.n_assets:
        raise ConfigError(f"asset {cfg['asset']} out of range for {model.n_assets} assets")
    problem = PricingProblem.from_model(model, cfg["horizon"], mc_paths=cfg["paths"],
                                        mc_seed=cfg["mc_seed"])
    est, se = mc_price(problem, cfg["asset"])
    x0 = float(model.init_prices[cfg["asset"]])
    summary = {
        "estimate": est,
        "std_error": se,
        "initial_price": x0,
        "z_score": (est - x0) / se if se > 0 else (0.0 if est == x0 else math.inf),
        "pricing_rate": float(problem.pricing_drift()[cfg["asset"]]),
        "arb_components": problem.decomposition.arb_components,
    }
    _report(cfg["out"], cfg, summary)
    return summary


def cmd_pde(cfg: dict) -> dict:
    payoff = call_payoff(cfg["strike"]) if cfg["payoff"] == "call" else put_payoff(cfg["strike"])
    field = {
        "none": None,
        "constant": constant_arbitrage(cfg["alpha_tilde"]),
        "volatility": volatility_arbitrage(cfg["sigma_tilde"], cfg["sigma"]),
    }[cfg["arbitrage"]]
    problem = PdeProblem(
        rate=cfg["rate"], sigma=cfg["sigma"], maturity=cfg["maturity"], terminal_payoff=payoff,
        grid=PdeGrid(cfg["x_min"], cfg["x_max"], cfg["n_space"], cfg["n_time"]),
        arb_field=field, scheme=cfg["scheme"])
    sol = solve_pde(problem)
    write_series_csv(cfg["out"] / "pde_slice.csv", {
        "price [numeraire]": sol.prices,
        "value_t0 [numeraire]": sol.values[0],
        "payoff [numeraire]": sol.values[-1],
    })
    summary = {
        "value_at_spot": sol.value_at(cfg["spot"]),
        "max_fixed_point_iterations": int(sol.iterations.max()),
    }
    _report(cfg["out"], cfg, summary)
    return summary


COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "backtest": cmd_backtest,
    "price": cmd_price,
    "pde": cmd_pde,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugearb", description="Gauge-invariant arbitrage detection and pricing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", ""))
        p.add_argument("--config", type=Path, help="INI file with a [%s] section" % name)
        for key, (_, default, help_) in schema.items():
            shown = "required" if default is ... else f"default {default}"
            p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE",
                           help=f"{help_} ({shown})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    overrides = {k: v for k, v in vars(args).items() if k in SCHEMAS[command]}
    try:
        cfg = resolve_config(command, args.config, overrides)
        COMMANDS[command](cfg)
    except GaugeArbError as exc:
        return _fail(exc.category, str(exc), getattr(exc, "problems", None))
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to an exit code
        return _fail("internal", f"{type(exc).__name__}: {exc}", None)
    print(json.dumps({"command": command, "out": str(cfg["out"]), "status": "ok"}))
    return 0


def _fail(category: str, message: str, problems) -> int:
    print(json.dumps({"error": category, "message": message, "problems": problems or [message]}),
          file=sys.stderr)
    return EXIT_CODES.get(category, 5)
