"""Car and station-battery charge physics.

The charging-rate envelope is piecewise linear in the state of charge: a
constant bulk stage up to the transition point tau, then a linear taper to
zero at full.  The discharge envelope is the charge envelope mirrored at
SoC = 0.5.  Energy integration assumes a constant current over the
timestep; delivered energy is truncated so the SoC stays in [0, 1] and, for
charging, never exceeds the customer's remaining request.

These functions are the semantic reference for the stepping kernels: both
the pure-Python and the compiled kernel inline exactly these formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

PREF_TIME = 0    # leaves when the stay runs out
PREF_CHARGE = 1  # leaves when the requested energy has been delivered


def charge_limit(soc: float, tau: float, r_bar_kw: float) -> float:
    """Maximum charging rate (kW) at the given state of charge.

    r_bar below tau, tapering linearly to 0 at soc = 1; continuous at tau.
    """
    if not 0.0 <= soc <= 1.0:
        raise ValueError(f"soc must be in [0, 1], got {soc}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    if r_bar_kw < 0.0:
        raise ValueError(f"r_bar_kw must be >= 0, got {r_bar_kw}")
    if soc <= tau:
        return r_bar_kw
    return (1.0 - soc) * r_bar_kw / (1.0 - tau)


def discharge_limit(soc: float, tau: float, r_bar_kw: float) -> float:
    """Maximum discharging rate (kW): the charge curve flipped at SoC 0.5."""
    return charge_limit(1.0 - soc, tau, r_bar_kw)


def power_to_current(p_kw: float, voltage_v: float) -> float:
    """Convert a power bound (kW) to the equivalent current (A) at a port."""
    if voltage_v <= 0.0:
        raise ValueError(f"voltage must be positive, got {voltage_v}")
    return 1000.0 * p_kw / voltage_v


@dataclass(frozen=True)
class CarProfile:
    """Physical properties of a car model."""

    capacity_kwh: float
    r_max_ac_kw: float
    r_max_dc_kw: float
    tau: float
    name: str = ""

    def __post_init__(self):
        if self.capacity_kwh <= 0:
            raise ValueError("capacity_kwh must be positive")
        if self.r_max_ac_kw < 0 or self.r_max_dc_kw < 0:
            raise ValueError("max charge rates must be >= 0")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")


@dataclass(frozen=True)
class UserProfile:
    """Owner-induced demand: stay, requested energy, arrival SoC, preference."""

    stay_steps: int
    energy_requested_kwh: float
    soc_arrival: float
    preference: int = PREF_TIME

    def __post_init__(self):
        if self.stay_steps < 1:
            raise ValueError("stay_steps must be >= 1")
        if self.energy_requested_kwh < 0:
            raise ValueError("energy_requested_kwh must be >= 0")
        if not 0.0 <= self.soc_arrival <= 1.0:
            raise ValueError("soc_arrival must be in [0, 1]")
        if self.preference not in (PREF_TIME, PREF_CHARGE):
            raise ValueError("preference must be 0 (time) or 1 (charge)")


@dataclass(frozen=True)
class CarState:
    """Mutable-per-step view of a parked car.

    Carries the port-applicable max rate (picked by charger kind at
    arrival) rather than the full per-kind profile.
    """

    de_remain_kwh: float
    dt_remain_steps: int
    soc: float
    r_hat_kw: float
    capacity_kwh: float
    r_bar_kw: float
    tau: float
    preference: int


@dataclass(frozen=True)
class BatterySpec:
    """Stationary buffer battery, modelled like one more charging pole."""

    voltage_v: float
    capacity_kwh: float
    r_max_kw: float
    tau: float = 0.8
    eta_charge: float = 1.0
    eta_discharge: float = 1.0

    def __post_init__(self):
        if self.voltage_v <= 0 or self.capacity_kwh <= 0:
            raise ValueError("battery voltage and capacity must be positive")
        if self.r_max_kw < 0:
            raise ValueError("battery r_max_kw must be >= 0")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("battery tau must be in (0, 1)")
        for eta in (self.eta_charge, self.eta_discharge):
            if not 0.0 < eta <= 1.0:
                raise ValueError("battery efficiencies must be in (0, 1]")


@dataclass(frozen=True)
class BatteryState:
    i_battery_a: float
    soc: float
    r_hat_kw: float


def integrate_charge(
    car: CarState, voltage_v: float, current_a: float, dt_h: float
) -> tuple[CarState, float]:
    """Advance a car by one constant-current interval.

    Returns the new state and the signed energy delivered into the car
    (kWh).  Charging is truncated at the remaining request and at a full
    battery; discharging is truncated at an empty battery.  The stay clock
    is owned by the caller and is not decremented here.
    """
    raw = dt_h * voltage_v * current_a / 1000.0
    if raw >= 0.0:
        delivered = raw
        if car.de_remain_kwh < delivered:
            delivered = car.de_remain_kwh
        room = car.capacity_kwh * (1.0 - car.soc)
        if room < delivered:
            delivered = room
    else:
        delivered = raw
        floor = -car.capacity_kwh * car.soc
        if delivered < floor:
            delivered = floor
    soc = car.soc + delivered / car.capacity_kwh
    if soc < 0.0:
        soc = 0.0
    elif soc > 1.0:
        soc = 1.0
    de = car.de_remain_kwh - delivered
    if de < 0.0:
        de = 0.0
    new = replace(
        car,
        soc=soc,
        de_remain_kwh=de,
        r_hat_kw=charge_limit(soc, car.tau, car.r_bar_kw),
    )
    return new, delivered


def integrate_battery(
    batt: BatteryState, spec: BatterySpec, current_a: float, dt_h: float
) -> tuple[BatteryState, float]:
    """Advance the station battery by one interval.

    Returns the new state and the signed grid-side energy (kWh): positive
    when the battery charges (draws from the grid), negative when it
    discharges into the station.  Charging losses mean the grid supplies
    delivered/eta_charge; discharging returns delivered*eta_discharge.
    """
    raw = dt_h * spec.voltage_v * current_a / 1000.0
    delivered = raw
    if delivered >= 0.0:
        room = spec.capacity_kwh * (1.0 - batt.soc)
        if room < delivered:
            delivered = room
    else:
        floor = -spec.capacity_kwh * batt.soc
        if delivered < floor:
            delivered = floor
    soc = batt.soc + delivered / spec.capacity_kwh
    if soc < 0.0:
        soc = 0.0
    elif soc > 1.0:
        soc = 1.0
    grid_side = delivered / spec.eta_charge if delivered > 0.0 else delivered * spec.eta_discharge
    new = BatteryState(
        i_battery_a=current_a,
        soc=soc,
        r_hat_kw=charge_limit(soc, spec.tau, spec.r_max_kw),
    )
    return new, grid_side
