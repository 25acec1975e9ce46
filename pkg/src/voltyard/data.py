"""Exogenous inputs: prices, arrival rates, car catalogs, user scenarios.

Everything here evolves independently of agent actions.  Datasets are
immutable bundles of hourly price series, a per-step arrival-rate curve, a
weighted car catalog and a parametric user-scenario model, optionally
extended with hourly emissions (MOER) and grid-demand series.

CSV schemas (header row required, see README):
    prices.csv    timestamp,buy_eur_per_kwh[,sell_grid_eur_per_kwh]
    arrivals.csv  step_of_day,lambda
    cars.csv      name,capacity_kwh,r_max_ac_kw,r_max_dc_kw,tau,weight
    aux.csv       timestamp,moer_kg_per_kwh,grid_demand_kwh

The bundled synthetic generators produce clearly labelled stand-in data
with the same schemas; real exports can be dropped in per file.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .rng import Stream, stream_key
from .vehicles import CarProfile, UserProfile

SCENARIOS = ("highway", "residential", "work", "shopping")
TRAFFIC_FACTORS = {"low": 0.5, "medium": 1.0, "high": 2.0}
REGIONS = ("eu", "us", "world")

_TS_FMT = "%Y-%m-%dT%H:%M"


@dataclass(frozen=True)
class PriceSeries:
    """Hourly day-ahead buy prices and grid sell-back prices (EUR/kWh)."""

    start_date: dt.date
    buy: np.ndarray
    sell_grid: np.ndarray
    region: str = ""

    def __post_init__(self):
        buy = np.asarray(self.buy, dtype=np.float64)
        sell = np.asarray(self.sell_grid, dtype=np.float64)
        object.__setattr__(self, "buy", buy)
        object.__setattr__(self, "sell_grid", sell)
        if buy.shape != sell.shape:
            raise DataError("buy and sell_grid series must have equal length")
        if len(buy) == 0 or len(buy) % 24 != 0:
            raise DataError(f"price series length must be a positive multiple of 24, got {len(buy)}")
        if not (np.isfinite(buy).all() and np.isfinite(sell).all()):
            raise DataError("price series contains non-finite values")

    @property
    def n_days(self) -> int:
        return len(self.buy) // 24

    def is_weekday(self, day: int) -> bool:
        return (self.start_date + dt.timedelta(days=day)).weekday() < 5


@dataclass(frozen=True)
class ArrivalProfile:
    """Mean arrivals per step over one day, with weekday/weekend multipliers."""

    rates_per_step: np.ndarray
    weekday_scale: float = 1.0
    weekend_scale: float = 1.0
    scenario: str = ""

    def __post_init__(self):
        rates = np.asarray(self.rates_per_step, dtype=np.float64)
        object.__setattr__(self, "rates_per_step", rates)
        if len(rates) == 0:
            raise DataError("arrival profile is empty")
        if not np.isfinite(rates).all() or (rates < 0).any():
            raise DataError("arrival rates must be finite and >= 0")
        if self.weekday_scale < 0 or self.weekend_scale < 0:
            raise DataError("arrival scales must be >= 0")


@dataclass(frozen=True)
class CatalogEntry:
    profile: CarProfile
    weight: float


@dataclass(frozen=True)
class CarCatalog:
    """Weighted distribution over car models."""

    entries: tuple[CatalogEntry, ...]
    region: str = ""

    def __post_init__(self):
        if not self.entries:
            raise DataError("car catalog is empty")
        total = sum(e.weight for e in self.entries)
        for e in self.entries:
            if e.weight < 0:
                raise DataError(f"negative weight for {e.profile.name!r}")
        if total <= 0:
            raise DataError("car catalog weights sum to zero")

    def cumulative_weights(self) -> np.ndarray:
        w = np.array([e.weight for e in self.entries], dtype=np.float64)
        return np.cumsum(w / w.sum())


@dataclass(frozen=True)
class UserScenarioModel:
    """Parametric distribution of owner behaviour at one location type."""

    stay_steps_range: tuple[int, int]
    requested_fraction_range: tuple[float, float]
    soc_arrival_range: tuple[float, float]
    p_charge_sensitive: float
    scenario: str = ""

    def __post_init__(self):
        lo, hi = self.stay_steps_range
        if not 1 <= lo <= hi:
            raise DataError("stay_steps_range must satisfy 1 <= lo <= hi")
        for name, (a, b), dom in (
            ("requested_fraction_range", self.requested_fraction_range, (0.0, 1.0)),
            ("soc_arrival_range", self.soc_arrival_range, (0.0, 1.0)),
        ):
            if not dom[0] <= a <= b <= dom[1]:
                raise DataError(f"{name} must be ordered within {dom}")
        if not 0.0 <= self.p_charge_sensitive <= 1.0:
            raise DataError("p_charge_sensitive must be in [0, 1]")


@dataclass(frozen=True)
class AuxSeries:
    """Optional hourly emissions rate and grid-demand signals."""

    moer_kg_per_kwh: np.ndarray | None = None
    grid_demand_kwh: np.ndarray | None = None


@dataclass(frozen=True)
class ExogenousFrame:
    """Agent-independent signals for one (day, step)."""

    p_buy: float
    p_sell_grid: float
    lambda_arrivals: float
    moer_kg_per_kwh: float | None
    grid_demand_kwh: float | None
    day_index: int
    is_weekday: bool
    step_of_day: int


@dataclass(frozen=True)
class Dataset:
    """Everything exogenous an environment needs, as one immutable bundle."""

    prices: PriceSeries
    arrivals: ArrivalProfile
    cars: CarCatalog
    scenario: UserScenarioModel
    aux: AuxSeries = field(default_factory=AuxSeries)

    def meta(self) -> dict:
        return {
            "price_region": self.prices.region,
            "days": self.prices.n_days,
            "start_date": self.prices.start_date.isoformat(),
            "arrival_scenario": self.arrivals.scenario,
            "car_region": self.cars.region,
            "user_scenario": self.scenario.scenario,
            "has_moer": self.aux.moer_kg_per_kwh is not None,
            "has_grid_demand": self.aux.grid_demand_kwh is not None,
        }


# --- sampling ---------------------------------------------------------------

def sample_arrival_count(stream: Stream, lam: float) -> int:
    """Poisson-distributed arrival count for one step."""
    if lam < 0:
        raise ValueError(f"arrival rate must be >= 0, got {lam}")
    return stream.poisson(lam)


def sample_car(stream: Stream, catalog: CarCatalog) -> CarProfile:
    idx = stream.choice_cum(catalog.cumulative_weights())
    return catalog.entries[idx].profile


def sample_user(stream: Stream, model: UserScenarioModel, car: CarProfile) -> UserProfile:
    """Draw one user profile; the request never exceeds the car's free capacity.

    Draw order (stay, soc, fraction, preference) is fixed: the kernels
    replay it verbatim.
    """
    lo, hi = model.stay_steps_range
    stay = lo + stream.randint(hi - lo + 1)
    s_lo, s_hi = model.soc_arrival_range
    soc0 = s_lo + stream.uniform() * (s_hi - s_lo)
    f_lo, f_hi = model.requested_fraction_range
    frac = f_lo + stream.uniform() * (f_hi - f_lo)
    requested = frac * car.capacity_kwh * (1.0 - soc0)
    pref = 1 if stream.uniform() < model.p_charge_sensitive else 0
    return UserProfile(
        stay_steps=stay,
        energy_requested_kwh=requested,
        soc_arrival=soc0,
        preference=pref,
    )


def frame_at(
    prices: PriceSeries,
    arrivals: ArrivalProfile,
    aux: AuxSeries | None,
    day: int,
    step: int,
    dt_min: int,
) -> ExogenousFrame:
    """Exogenous signals at (day, step): hourly zero-order hold on prices.

    Steps past midnight roll into the following day; running off the end of
    the loaded series raises DataError.
    """
    minutes = step * dt_min
    eff_day = day + minutes // 1440
    if not 0 <= day < prices.n_days or eff_day >= prices.n_days:
        raise DataError(f"day {eff_day} outside loaded range of {prices.n_days} days")
    hour = (minutes // 60) % 24
    h = eff_day * 24 + hour
    steps_per_day = len(arrivals.rates_per_step)
    weekday = prices.is_weekday(eff_day)
    scale = arrivals.weekday_scale if weekday else arrivals.weekend_scale
    lam = float(arrivals.rates_per_step[step % steps_per_day]) * scale
    moer = None
    demand = None
    if aux is not None:
        if aux.moer_kg_per_kwh is not None:
            moer = float(aux.moer_kg_per_kwh[h % len(aux.moer_kg_per_kwh)])
        if aux.grid_demand_kwh is not None:
            demand = float(aux.grid_demand_kwh[h % len(aux.grid_demand_kwh)])
    return ExogenousFrame(
        p_buy=float(prices.buy[h]),
        p_sell_grid=float(prices.sell_grid[h]),
        lambda_arrivals=lam,
        moer_kg_per_kwh=moer,
        grid_demand_kwh=demand,
        day_index=eff_day,
        is_weekday=weekday,
        step_of_day=step % steps_per_day,
    )


# --- CSV loaders -------------------------------------------------------------

def _open_rows(path: Path, required: tuple[str, ...]):
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        fh.close()
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    return fh, reader


def load_prices(path) -> PriceSeries:
    """Load an hourly price CSV; validates contiguous, duplicate-free hours."""
    path = Path(path)
    fh, reader = _open_rows(path, ("timestamp", "buy_eur_per_kwh"))
    has_sell = "sell_grid_eur_per_kwh" in (reader.fieldnames or [])
    buy: list[float] = []
    sell: list[float] = []
    start: dt.datetime | None = None
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = dt.datetime.fromisoformat(row["timestamp"])
                b = float(row["buy_eur_per_kwh"])
                s = float(row["sell_grid_eur_per_kwh"]) if has_sell else b
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}: unparseable row at line {lineno}: {exc}") from exc
            if start is None:
                start = ts
                if ts.minute or ts.second:
                    raise DataError(f"{path}: series must start on the hour (line {lineno})")
            expected = start + dt.timedelta(hours=len(buy))
            if ts != expected:
                kind = "duplicate or out-of-order hour" if ts < expected else "gap"
                raise DataError(
                    f"{path}: {kind} at line {lineno}: expected {expected.strftime(_TS_FMT)}"
                )
            buy.append(b)
            sell.append(s)
    if start is None:
        raise DataError(f"{path}: no data rows")
    return PriceSeries(
        start_date=start.date(),
        buy=np.asarray(buy),
        sell_grid=np.asarray(sell),
        region=path.stem,
    )


def save_prices(series: PriceSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "buy_eur_per_kwh", "sell_grid_eur_per_kwh"])
        t0 = dt.datetime.combine(series.start_date, dt.time())
        for h in range(len(series.buy)):
            ts = (t0 + dt.timedelta(hours=h)).strftime(_TS_FMT)
            w.writerow([ts, repr(float(series.buy[h])), repr(float(series.sell_grid[h]))])


def load_arrivals(path, weekday_scale: float = 1.0, weekend_scale: float = 1.0) -> ArrivalProfile:
    path = Path(path)
    fh, reader = _open_rows(path, ("step_of_day", "lambda"))
    rates: list[float] = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                step = int(row["step_of_day"])
                lam = float(row["lambda"])
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}: unparseable row at line {lineno}: {exc}") from exc
            if step != len(rates):
                raise DataError(f"{path}: steps must be 0,1,2,... (line {lineno})")
            if lam < 0:
                raise DataError(f"{path}: negative rate at line {lineno}")
            rates.append(lam)
    if not rates:
        raise DataError(f"{path}: no data rows")
    return ArrivalProfile(
        rates_per_step=np.asarray(rates),
        weekday_scale=weekday_scale,
        weekend_scale=weekend_scale,
        scenario=path.stem,
    )


def save_arrivals(profile: ArrivalProfile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step_of_day", "lambda"])
        for s, lam in enumerate(profile.rates_per_step):
            w.writerow([s, repr(float(lam))])


def load_car_catalog(path) -> CarCatalog:
    path = Path(path)
    fh, reader = _open_rows(
        path, ("name", "capacity_kwh", "r_max_ac_kw", "r_max_dc_kw", "tau", "weight")
    )
    entries: list[CatalogEntry] = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                cap = float(row["capacity_kwh"])
                rac = float(row["r_max_ac_kw"])
                rdc = float(row["r_max_dc_kw"])
                tau = float(row["tau"])
                weight = float(row["weight"])
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}: unparseable row at line {lineno}: {exc}") from exc
            if cap <= 0:
                raise DataError(f"{path}: capacity must be positive at line {lineno}")
            if not 0.0 < tau < 1.0:
                raise DataError(f"{path}: tau must be in (0, 1) at line {lineno}")
            if weight < 0:
                raise DataError(f"{path}: negative weight at line {lineno}")
            entries.append(
                CatalogEntry(
                    CarProfile(
                        capacity_kwh=cap, r_max_ac_kw=rac, r_max_dc_kw=rdc,
                        tau=tau, name=row["name"],
                    ),
                    weight,
                )
            )
    if not entries:
        raise DataError(f"{path}: no data rows")
    if sum(e.weight for e in entries) <= 0:
        raise DataError(f"{path}: all weights are zero")
    return CarCatalog(entries=tuple(entries), region=path.stem)


def save_car_catalog(catalog: CarCatalog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "capacity_kwh", "r_max_ac_kw", "r_max_dc_kw", "tau", "weight"])
        for e in catalog.entries:
            p = e.profile
            w.writerow(
                [p.name, repr(p.capacity_kwh), repr(p.r_max_ac_kw),
                 repr(p.r_max_dc_kw), repr(p.tau), repr(e.weight)]
            )


def load_aux(path) -> AuxSeries:
    path = Path(path)
    fh, reader = _open_rows(path, ("timestamp",))
    names = reader.fieldnames or []
    has_moer = "moer_kg_per_kwh" in names
    has_demand = "grid_demand_kwh" in names
    if not (has_moer or has_demand):
        raise DataError(f"{path}: needs moer_kg_per_kwh and/or grid_demand_kwh")
    moer: list[float] = []
    demand: list[float] = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                if has_moer:
                    moer.append(float(row["moer_kg_per_kwh"]))
                if has_demand:
                    demand.append(float(row["grid_demand_kwh"]))
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}: unparseable row at line {lineno}: {exc}") from exc
    if not (moer or demand):
        raise DataError(f"{path}: no data rows")
    return AuxSeries(
        moer_kg_per_kwh=np.asarray(moer) if has_moer else None,
        grid_demand_kwh=np.asarray(demand) if has_demand else None,
    )


def save_aux(aux: AuxSeries, start_date: dt.date, path) -> None:
    cols = ["timestamp"]
    if aux.moer_kg_per_kwh is not None:
        cols.append("moer_kg_per_kwh")
    if aux.grid_demand_kwh is not None:
        cols.append("grid_demand_kwh")
    n = max(
        len(aux.moer_kg_per_kwh) if aux.moer_kg_per_kwh is not None else 0,
        len(aux.grid_demand_kwh) if aux.grid_demand_kwh is not None else 0,
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        t0 = dt.datetime.combine(start_date, dt.time())
        for h in range(n):
            row = [(t0 + dt.timedelta(hours=h)).strftime(_TS_FMT)]
            if aux.moer_kg_per_kwh is not None:
                row.append(repr(float(aux.moer_kg_per_kwh[h])))
            if aux.grid_demand_kwh is not None:
                row.append(repr(float(aux.grid_demand_kwh[h])))
            w.writerow(row)


_SCENARIO_JSON = "scenario.json"


def load_dataset(data_dir, weekday_scale: float | None = None,
                 weekend_scale: float | None = None) -> Dataset:
    """Load a dataset directory (prices/arrivals/cars CSVs + optional extras).

    scenario.json, when present, carries the user-scenario parameters and
    the arrival-day multipliers; otherwise the shopping defaults apply.
    """
    d = Path(data_dir)
    scen_path = d / _SCENARIO_JSON
    scen_obj = {}
    if scen_path.exists():
        try:
            scen_obj = json.loads(scen_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"{scen_path}: {exc}") from exc
    wk = weekday_scale if weekday_scale is not None else float(scen_obj.get("weekday_scale", 1.0))
    we = weekend_scale if weekend_scale is not None else float(scen_obj.get("weekend_scale", 1.0))
    if "stay_steps_range" in scen_obj:
        scenario = UserScenarioModel(
            stay_steps_range=tuple(scen_obj["stay_steps_range"]),
            requested_fraction_range=tuple(scen_obj["requested_fraction_range"]),
            soc_arrival_range=tuple(scen_obj["soc_arrival_range"]),
            p_charge_sensitive=float(scen_obj["p_charge_sensitive"]),
            scenario=str(scen_obj.get("scenario", "custom")),
        )
    else:
        scenario = scenario_model(scen_obj.get("scenario", "shopping"))
    aux_path = d / "aux.csv"
    return Dataset(
        prices=load_prices(d / "prices.csv"),
        arrivals=load_arrivals(d / "arrivals.csv", weekday_scale=wk, weekend_scale=we),
        cars=load_car_catalog(d / "cars.csv"),
        scenario=scenario,
        aux=load_aux(aux_path) if aux_path.exists() else AuxSeries(),
    )


def save_dataset(ds: Dataset, data_dir) -> None:
    d = Path(data_dir)
    d.mkdir(parents=True, exist_ok=True)
    save_prices(ds.prices, d / "prices.csv")
    save_arrivals(ds.arrivals, d / "arrivals.csv")
    save_car_catalog(ds.cars, d / "cars.csv")
    if ds.aux.moer_kg_per_kwh is not None or ds.aux.grid_demand_kwh is not None:
        save_aux(ds.aux, ds.prices.start_date, d / "aux.csv")
    scen = ds.scenario
    (d / _SCENARIO_JSON).write_text(
        json.dumps(
            {
                "scenario": scen.scenario,
                "stay_steps_range": list(scen.stay_steps_range),
                "requested_fraction_range": list(scen.requested_fraction_range),
                "soc_arrival_range": list(scen.soc_arrival_range),
                "p_charge_sensitive": scen.p_charge_sensitive,
                "weekday_scale": ds.arrivals.weekday_scale,
                "weekend_scale": ds.arrivals.weekend_scale,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )


# --- synthetic defaults -------------------------------------------------------

# (base EUR/kWh, daily swing EUR/kWh, noise EUR/kWh) stand-ins per market.
_PRICE_PARAMS = {"nl": (0.11, 0.07, 0.012), "fr": (0.10, 0.05, 0.010), "de": (0.12, 0.08, 0.014)}
_REGION_TO_MARKET = {"eu": "nl", "us": "fr", "world": "de"}

_DAILY_ARRIVALS_BASE = 60.0

# (weekday_scale, weekend_scale) per scenario.
_DAY_SCALES = {
    "highway": (1.0, 1.2),
    "residential": (1.0, 1.1),
    "work": (1.0, 0.3),
    "shopping": (1.0, 1.3),
}

# Stay ranges in minutes; converted to steps at the configured resolution.
_SCENARIO_PARAMS = {
    "highway": dict(stay_min=(15, 60), frac=(0.4, 0.9), soc=(0.1, 0.5), p_charge=0.7),
    "residential": dict(stay_min=(480, 840), frac=(0.5, 1.0), soc=(0.2, 0.6), p_charge=0.1),
    "work": dict(stay_min=(420, 570), frac=(0.3, 0.9), soc=(0.3, 0.7), p_charge=0.05),
    "shopping": dict(stay_min=(45, 180), frac=(0.2, 0.8), soc=(0.3, 0.8), p_charge=0.3),
}

_CATALOGS = {
    "eu": [
        ("compact", 40.0, 7.4, 60.0, 0.80, 0.35),
        ("midsize", 62.0, 11.0, 120.0, 0.80, 0.45),
        ("executive", 90.0, 11.0, 180.0, 0.85, 0.20),
    ],
    "us": [
        ("crossover", 75.0, 9.6, 120.0, 0.80, 0.50),
        ("pickup", 130.0, 11.5, 190.0, 0.85, 0.30),
        ("sedan", 100.0, 11.5, 250.0, 0.85, 0.20),
    ],
    "world": [
        ("city", 30.0, 6.6, 50.0, 0.80, 0.30),
        ("compact", 45.0, 7.4, 80.0, 0.80, 0.30),
        ("midsize", 62.0, 11.0, 120.0, 0.80, 0.25),
        ("executive", 95.0, 11.0, 200.0, 0.85, 0.15),
    ],
}


def _hour_shape(scenario: str, hour: float) -> float:
    if scenario == "shopping":
        return 0.05 + math.exp(-(((hour - 13.5) / 2.5) ** 2))
    if scenario == "work":
        return 0.03 + math.exp(-(((hour - 8.5) / 1.5) ** 2)) + 0.3 * math.exp(-(((hour - 13.0) / 2.0) ** 2))
    if scenario == "residential":
        return 0.08 + math.exp(-(((hour - 19.0) / 2.5) ** 2)) + 0.3 * math.exp(-(((hour - 7.5) / 1.5) ** 2))
    # highway: near-flat with a broad afternoon hump
    return 0.6 + 0.4 * math.exp(-(((hour - 14.0) / 6.0) ** 2))


def scenario_model(scenario: str, dt_min: int = 5) -> UserScenarioModel:
    if scenario not in SCENARIOS:
        raise DataError(f"unknown scenario {scenario!r}; pick one of {SCENARIOS}")
    p = _SCENARIO_PARAMS[scenario]
    lo_min, hi_min = p["stay_min"]
    return UserScenarioModel(
        stay_steps_range=(max(1, round(lo_min / dt_min)), max(1, round(hi_min / dt_min))),
        requested_fraction_range=p["frac"],
        soc_arrival_range=p["soc"],
        p_charge_sensitive=p["p_charge"],
        scenario=scenario,
    )


def car_catalog(region: str) -> CarCatalog:
    if region not in REGIONS:
        raise DataError(f"unknown region {region!r}; pick one of {REGIONS}")
    entries = tuple(
        CatalogEntry(CarProfile(capacity_kwh=c, r_max_ac_kw=rac, r_max_dc_kw=rdc, tau=tau, name=n), w)
        for n, c, rac, rdc, tau, w in _CATALOGS[region]
    )
    return CarCatalog(entries=entries, region=region)


def synthetic_prices(region: str = "eu", seed: int = 0, days: int = 365) -> PriceSeries:
    """Two-peak daily curve plus noise; a labelled stand-in, not market data."""
    market = _REGION_TO_MARKET.get(region, region)
    if market not in _PRICE_PARAMS:
        raise DataError(f"unknown price region {region!r}")
    base, amp, noise = _PRICE_PARAMS[market]
    s = Stream(stream_key(seed, 101))
    buy = np.empty(days * 24, dtype=np.float64)
    for d in range(days):
        for h in range(24):
            shape = math.exp(-(((h - 8.0) / 3.0) ** 2)) + math.exp(-(((h - 19.0) / 3.0) ** 2))
            buy[d * 24 + h] = base + amp * (shape - 0.5) + noise * (2.0 * s.uniform() - 1.0)
    sell = buy - 0.01
    # start on a Monday so the weekday pattern is easy to reason about
    return PriceSeries(start_date=dt.date(2022, 1, 3), buy=buy, sell_grid=sell, region=market)


def synthetic_arrivals(scenario: str = "shopping", traffic: str = "medium",
                       dt_min: int = 5) -> ArrivalProfile:
    if traffic not in TRAFFIC_FACTORS:
        raise DataError(f"unknown traffic level {traffic!r}; pick one of {tuple(TRAFFIC_FACTORS)}")
    if scenario not in SCENARIOS:
        raise DataError(f"unknown scenario {scenario!r}; pick one of {SCENARIOS}")
    steps = 1440 // dt_min
    shape = np.array([_hour_shape(scenario, s * dt_min / 60.0) for s in range(steps)])
    base_curve = _DAILY_ARRIVALS_BASE * shape / shape.sum()
    wk, we = _DAY_SCALES[scenario]
    return ArrivalProfile(
        rates_per_step=TRAFFIC_FACTORS[traffic] * base_curve,
        weekday_scale=wk,
        weekend_scale=we,
        scenario=f"{scenario}-{traffic}",
    )


def synthetic_aux(seed: int = 0, days: int = 365) -> AuxSeries:
    s = Stream(stream_key(seed, 202))
    n = days * 24
    moer = np.empty(n)
    demand = np.empty(n)
    for h in range(n):
        hod = h % 24
        moer[h] = 0.30 + 0.12 * math.sin(2.0 * math.pi * (hod - 4.0) / 24.0) + 0.02 * (2.0 * s.uniform() - 1.0)
        demand[h] = 20.0 + 15.0 * math.sin(2.0 * math.pi * (hod - 10.0) / 24.0) + 2.0 * (2.0 * s.uniform() - 1.0)
    return AuxSeries(moer_kg_per_kwh=moer, grid_demand_kwh=demand)


def generate_synthetic_defaults(
    scenario: str = "shopping",
    traffic: str = "medium",
    region: str = "eu",
    seed: int = 0,
    days: int = 365,
    dt_min: int = 5,
    with_aux: bool = False,
) -> Dataset:
    """Reproducible bundled dataset; identical output for identical arguments."""
    return Dataset(
        prices=synthetic_prices(region=region, seed=seed, days=days),
        arrivals=synthetic_arrivals(scenario=scenario, traffic=traffic, dt_min=dt_min),
        cars=car_catalog(region),
        scenario=scenario_model(scenario, dt_min=dt_min),
        aux=synthetic_aux(seed=seed, days=days) if with_aux else AuxSeries(),
    )
