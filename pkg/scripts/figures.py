# scripts/figures.py
# Batch commands behind the CLI: smile, error surface, Vasicek term structure and
# single prices. Each table command returns a DataFrame and writes a versioned CSV.

import os
import sys
import logging
import concurrent.futures
from dataclasses import replace

import numpy as np
import pandas as pd

# --- Setup Paths ---
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from config import config
from pricing.blackscholes import implied_vol
from pricing.errors import CapabilityError, ParameterError, PricingError
from pricing.fourier import forward_call_prices
from pricing.ivol import QuadratureConfig, expand, price_approximation, sigma0
from pricing.lsv import coefficients
from pricing.models import FongVasicekModel, VasicekModel, vasicek_sigma
from pricing.montecarlo import forward_call_mc
from pricing.scenario import ScenarioConfig

logger = logging.getLogger(__name__)


def schema_line(command: str, digest: str) -> str:
    return f"# schema=bond-iv-csv/v{config.CSV_SCHEMA_VERSION} command={command} config={digest}"


def write_csv(frame: pd.DataFrame, path: str | None, command: str, digest: str) -> None:
    """Writes the schema comment line and the table; path None or "-" means stdout."""
    if path in (None, "-"):
        sys.stdout.write(schema_line(command, digest) + "\n")
        frame.to_csv(sys.stdout, index=False, lineterminator="\n")
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(schema_line(command, digest) + "\n")
        frame.to_csv(f, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")


def _map_ordered(func, items, prefix: str):
    """Evaluates func over items in a thread pool, results in input order."""
    items = list(items)
    if len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=min(config.MAX_WORKERS, len(items)), thread_name_prefix=prefix
    ) as pool:
        return list(pool.map(func, items))


def _exact_vols(model, t, x, ytilde, T, Tbar, strikes, scenario: ScenarioConfig):
    """Fourier implied vols per strike plus per-strike flags; never raises for a single strike."""
    n = len(strikes)
    flags = [[] for _ in range(n)]
    try:
        prices = forward_call_prices(model, t, x, ytilde, T, Tbar, strikes, scenario.fourier)
    except CapabilityError as e:
        logger.warning(f"Exact engine skipped: {e.message}")
        return np.full(n, np.nan), [["exact_unavailable"] for _ in range(n)]
    except PricingError as e:
        logger.error(f"Exact engine failed at T={T}: {e.message}")
        return np.full(n, np.nan), [[f"exact_failed:{e.code}"] for _ in range(n)]

    vols = np.full(n, np.nan)
    for i, (price, k) in enumerate(zip(prices, strikes)):
        try:
            vols[i] = implied_vol(price, x, k, T - t)
        except PricingError as e:
            flags[i].append(f"exact_iv_failed:{e.code}")
    return vols, flags


def _mc_columns(model, t, x, ytilde, T, Tbar, strikes, scenario: ScenarioConfig):
    rows = []
    for k in strikes:
        try:
            est = forward_call_mc(model, t, x, ytilde, T, Tbar, k, scenario.mc)
        except PricingError as e:
            logger.error(f"MC engine failed at T={T}, k={k}: {e.message}")
            rows.append((np.nan, np.nan, np.nan, [f"mc_failed:{e.code}"]))
            continue
        try:
            vol = implied_vol(est.mean, x, k, T - t)
            rows.append((est.mean, est.stderr, vol, []))
        except PricingError as e:
            rows.append((est.mean, est.stderr, np.nan, [f"mc_iv_failed:{e.code}"]))
    return rows


def _smile_block(scenario: ScenarioConfig, overrides: dict, t: float, T: float, Tbar: float) -> pd.DataFrame:
    model = scenario.build_model(**overrides)
    x, ytilde = scenario.point(model, t, T, Tbar)
    offsets = np.asarray(scenario.strikes)
    strikes = x + offsets
    engines = scenario.engines
    flags = [[] for _ in strikes]

    if "exact" in engines:
        exact, exact_flags = _exact_vols(model, t, x, ytilde, T, Tbar, strikes, scenario)
        for row, extra in zip(flags, exact_flags):
            row.extend(extra)
    else:
        exact = np.full(len(strikes), np.nan)

    bars = {n: np.full(len(strikes), np.nan) for n in (0, 1, 2)}
    if any(e.startswith("sigma_bar") for e in engines):
        expansion = expand(model, t, x, ytilde, T, Tbar, scenario.quadrature)
        for n in bars:
            bars[n] = np.atleast_1d(expansion.sigma_bar(n, strikes))
        for row, k in zip(flags, strikes):
            row.extend(expansion.flags(k))

    frame = pd.DataFrame(
        {
            **{key: [value] * len(strikes) for key, value in overrides.items()},
            "t": t,
            "T": T,
            "Tbar": Tbar,
            "k_minus_x": offsets,
            "sigma_exact": exact,
            "sigma_bar0": bars[0],
            "sigma_bar1": bars[1],
            "sigma_bar2": bars[2],
        }
    )
    if "mc" in engines:
        mc_rows = _mc_columns(model, t, x, ytilde, T, Tbar, strikes, scenario)
        frame["price_mc"] = [r[0] for r in mc_rows]
        frame["stderr_mc"] = [r[1] for r in mc_rows]
        frame["sigma_mc"] = [r[2] for r in mc_rows]
        for row, r in zip(flags, mc_rows):
            row.extend(r[3])
    frame["flags"] = [";".join(f) for f in flags]
    return frame


def _cells(scenario: ScenarioConfig):
    return [
        (overrides, t, T, Tbar)
        for overrides in scenario.sweep_points()
        for Tbar in scenario.Tbar
        for T in scenario.T
        for t in scenario.t
    ]


def cmd_smile(scenario: ScenarioConfig, write: bool = True) -> pd.DataFrame:
    """Exact and approximate implied vols over the strike grid, one block per (sweep, T)."""
    blocks = _map_ordered(lambda cell: _smile_block(scenario, *cell), _cells(scenario), "smile")
    frame = pd.concat(blocks, ignore_index=True)
    if write:
        write_csv(frame, scenario.output, "smile", scenario.digest)
    return frame


def cmd_error_surface(scenario: ScenarioConfig, write: bool = True) -> pd.DataFrame:
    """|Sigma_bar_2 - Sigma| / Sigma over the (k - x, T) grid."""
    if "exact" not in scenario.engines or "sigma_bar2" not in scenario.engines:
        scenario = replace(scenario, engines=("exact", "sigma_bar2"))
    model = scenario.build_model(**scenario.sweep_points()[0])
    if isinstance(model, FongVasicekModel):
        raise CapabilityError(
            "error surface needs the exact engine, which is unavailable for this model",
            model=model.name,
        )
    blocks = _map_ordered(lambda cell: _smile_block(scenario, *cell), _cells(scenario), "surface")
    smile = pd.concat(blocks, ignore_index=True)
    frame = smile[[c for c in smile.columns if c not in ("sigma_bar0", "sigma_bar1")]].copy()
    frame["rel_error"] = (frame["sigma_bar2"] - frame["sigma_exact"]).abs() / frame["sigma_exact"]
    frame = frame[[c for c in frame.columns if c != "flags"] + ["flags"]]
    if write:
        write_csv(frame, scenario.output, "error-surface", scenario.digest)
    return frame


def _vasicek_row(model: VasicekModel, t: float, T: float, Tbar: float, quadrature: QuadratureConfig, x: float):
    closed = vasicek_sigma(model.params, t, T, Tbar)
    if Tbar == T:
        return closed, 0.0
    coeffs = coefficients(model, t, x, (), T, Tbar)
    return closed, sigma0(coeffs, t, T, quadrature)


def cmd_vasicek_term(scenario: ScenarioConfig, write: bool = True) -> pd.DataFrame:
    """Vasicek implied volatility as a function of t for each Tbar: closed form and numeric Sigma_0."""
    model = scenario.build_model()
    if not isinstance(model, VasicekModel):
        raise ParameterError(f"vasicek-term needs the Vasicek model, got {scenario.model!r}")
    T = scenario.T[0]
    rows = []
    for Tbar in scenario.Tbar:
        for t in scenario.t:
            x, _ = scenario.point(model, t, T, Tbar) if Tbar > T else (0.0, ())
            closed, numeric = _vasicek_row(model, t, T, Tbar, scenario.quadrature, x)
            rows.append({"Tbar": Tbar, "t": t, "T": T, "sigma": closed, "sigma0_numeric": numeric})
    frame = pd.DataFrame(rows, columns=["Tbar", "t", "T", "sigma", "sigma0_numeric"])
    if write:
        write_csv(frame, scenario.output, "vasicek-term", scenario.digest)
    return frame


def price_record(model, t: float, x: float, ytilde, T: float, Tbar: float, k: float, engine: str, scenario: ScenarioConfig) -> dict:
    """Forward call price and implied vol of one (t, T, Tbar, k) through one engine."""
    record = {"model": model.name, "engine": engine, "t": t, "T": T, "Tbar": Tbar, "x": x, "k": k}
    if t == T:
        record.update({"price": max(float(np.exp(x) - np.exp(k)), 0.0), "implied_vol": None, "flags": ["intrinsic"]})
        return record

    if engine == "exact":
        price = float(forward_call_prices(model, t, x, ytilde, T, Tbar, [k], scenario.fourier)[0])
        record.update({"price": price, "implied_vol": implied_vol(price, x, k, T - t), "flags": []})
    elif engine == "mc":
        est = forward_call_mc(model, t, x, ytilde, T, Tbar, k, scenario.mc)
        record.update({"price": est.mean, "stderr": est.stderr, "paths": est.paths, "flags": []})
        try:
            record["implied_vol"] = implied_vol(est.mean, x, k, T - t)
        except PricingError as e:
            record["implied_vol"] = None
            record["flags"].append(f"mc_iv_failed:{e.code}")
    else:
        n = int(engine[-1])
        expansion = expand(model, t, x, ytilde, T, Tbar, scenario.quadrature)
        sigma = expansion.sigma_bar(n, k)
        flags = expansion.flags(k)
        price = float(price_approximation(expansion, n, k)) if sigma > 0 else None
        record.update({"price": price, "implied_vol": sigma, "flags": flags})
    return record


def cmd_price(scenario: ScenarioConfig) -> dict:
    """One (model, t, T, Tbar, k) evaluation through the first configured engine."""
    overrides = scenario.sweep_points()[0]
    model = scenario.build_model(**overrides)
    t, T, Tbar = scenario.t[0], scenario.T[0], scenario.Tbar[0]
    x, ytilde = scenario.point(model, t, T, Tbar)
    k = x + scenario.strikes[0]
    record = {"status": "ok", "command": "price", "scenario": scenario.name, "config": scenario.digest, **overrides}
    record.update(price_record(model, t, x, ytilde, T, Tbar, k, scenario.engines[0], scenario))
    return record


if __name__ == "__main__":
    from cli import main

    main()
