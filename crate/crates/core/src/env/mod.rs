//! Hourly simulator of the building-scale PV / battery / EV system.
//!
//! Power sign convention: **positive power charges** the respective battery
//! (stationary or EV) and therefore consumes power on the building bus;
//! negative power discharges it.

mod physics;
mod sim;

pub use physics::{
    advance_clock, annuity_factor, clamp_battery_power, clamp_ev_power, grid_exchange,
    hourly_investment_cost, step_reward, update_soc, GridExchange,
};
pub use sim::{Dataset, Env, InitMode, StepOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Techno-economic constants of the system. Defaults reproduce the reference
/// building case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConstants {
    pub pv_lifetime_years: f64,
    /// CHF per year.
    pub pv_opex_fixed: f64,
    /// CHF per kWp per year.
    pub pv_opex_var: f64,
    /// CHF.
    pub pv_capex_fixed: f64,
    /// CHF per kWp.
    pub pv_capex_var: f64,

    pub battery_efficiency: f64,
    pub battery_lifetime_years: f64,
    pub battery_opex_fixed: f64,
    /// CHF per kWh per year.
    pub battery_opex_var: f64,
    pub battery_capex_fixed: f64,
    /// CHF per kWh.
    pub battery_capex_var: f64,

    /// kWh.
    pub ev_capacity: f64,
    /// kWh.
    pub ev_soc_min: f64,
    /// kW.
    pub ev_max_power: f64,
    pub ev_efficiency: f64,
    /// Reward rate for energy drawn from the EV, CHF/kWh (negative: a cost).
    pub ev_import_price: f64,
    /// Reward rate for energy delivered to the EV, CHF/kWh.
    pub ev_export_price: f64,
    /// Whether EV exchange prices enter the reward.
    pub ev_exchange_reward: bool,

    /// Hours per step.
    pub dt: f64,
    /// Annual discount rate.
    pub discount_rate: f64,
}

impl Default for EnvConstants {
    fn default() -> Self {
        Self {
            pv_lifetime_years: 20.0,
            pv_opex_fixed: 0.0,
            pv_opex_var: 100.0,
            pv_capex_fixed: 100.0,
            pv_capex_var: 775.0,
            battery_efficiency: 0.9,
            battery_lifetime_years: 10.0,
            battery_opex_fixed: 0.0,
            battery_opex_var: 10.0,
            battery_capex_fixed: 50.0,
            battery_capex_var: 300.0,
            ev_capacity: 80.0,
            ev_soc_min: 32.0,
            ev_max_power: 5.0,
            ev_efficiency: 1.0,
            ev_import_price: -1.5,
            ev_export_price: 1.0,
            ev_exchange_reward: true,
            dt: 1.0,
            discount_rate: 0.05,
        }
    }
}

impl EnvConstants {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !unit(self.battery_efficiency) || !unit(self.ev_efficiency) {
            return fail("efficiencies must lie in (0, 1]");
        }
        if self.pv_lifetime_years < 1.0 || self.battery_lifetime_years < 1.0 {
            return fail("lifetimes must be at least one year");
        }
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if !(self.ev_capacity > 0.0) {
            return fail("EV capacity must be positive");
        }
        if !(0.0..=self.ev_capacity).contains(&self.ev_soc_min) {
            return fail("EV minimum SoC must lie in [0, EV capacity]");
        }
        if !(self.ev_max_power > 0.0) {
            return fail("EV max power must be positive");
        }
        if !(self.discount_rate > 0.0) {
            return fail("discount rate must be positive");
        }
        Ok(())
    }

    /// All costs and prices zeroed; used to check reward neutrality.
    pub fn zero_cost(mut self) -> Self {
        self.pv_opex_fixed = 0.0;
        self.pv_opex_var = 0.0;
        self.pv_capex_fixed = 0.0;
        self.pv_capex_var = 0.0;
        self.battery_opex_fixed = 0.0;
        self.battery_opex_var = 0.0;
        self.battery_capex_fixed = 0.0;
        self.battery_capex_var = 0.0;
        self.ev_import_price = 0.0;
        self.ev_export_price = 0.0;
        self
    }
}

/// System sizing: PV peak power and stationary battery capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub pv_kwp: f64,
    pub battery_kwh: f64,
}

impl Design {
    /// Accepts any finite non-negative sizing; zero is a legal "not installed".
    pub fn new(pv_kwp: f64, battery_kwh: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(pv_kwp) || !ok(battery_kwh) {
            return Err(Error::Domain {
                pv_kwp,
                battery_kwh,
            });
        }
        Ok(Self {
            pv_kwp,
            battery_kwh,
        })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.pv_kwp, self.battery_kwh]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.pv_kwp > 0.0 && self.battery_kwh > 0.0
    }
}

/// Markov state of the system at the start of an hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub hour: usize,
    pub day: usize,
    /// kWh.
    pub soc: f64,
    /// kW.
    pub pv_prod: f64,
    /// kW.
    pub load: f64,
    pub import_price: f64,
    pub export_price: f64,
    pub ev_present: bool,
    /// kWh; zero when no EV is connected.
    pub soc_ev: f64,
}

/// Requested power set-points, kW, positive = charging.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub battery_kw: f64,
    pub ev_kw: f64,
}

impl Action {
    pub fn new(battery_kw: f64, ev_kw: f64) -> Self {
        Self { battery_kw, ev_kw }
    }

    /// Upper bounds of the action box for a given design; the box is symmetric.
    pub fn bounds(design: &Design, consts: &EnvConstants) -> [f64; 2] {
        [design.battery_kwh / consts.dt, consts.ev_max_power]
    }

    pub fn clip_to_box(self, design: &Design, consts: &EnvConstants) -> Self {
        let [bb, be] = Self::bounds(design, consts);
        Self {
            battery_kw: self.battery_kw.clamp(-bb, bb),
            ev_kw: self.ev_kw.clamp(-be, be),
        }
    }
}

/// A connected EV's stay at the charging point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub arrival_hour: usize,
    pub duration_hours: u32,
    pub initial_soc: f64,
}

pub const EV_MIN_STAY_HOURS: u32 = 5;
pub const EV_MAX_STAY_HOURS: u32 = 8;
