use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::physics::{
    advance_clock, clamp_battery_power, clamp_ev_power, exchange_reward, grid_exchange,
    hourly_investment_cost, update_soc, GridExchange,
};
use super::{Action, Design, EnvConstants, EnvState, EV_MAX_STAY_HOURS, EV_MIN_STAY_HOURS};
use crate::data::{DatasetSplit, SplitKind, YearSeries, DAYS_PER_YEAR};
use crate::error::{Error, Result};

/// A year of data together with its day split. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub series: YearSeries,
    pub split: DatasetSplit,
}

/// How the initial state of an episode is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Random day of the split, SoC uniform in `[0, B]`.
    Training,
    /// Earliest day of the split, SoC at `B / 2`.
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub truncated: bool,
    /// Battery power actually exchanged after clamping, kW.
    pub battery_kw: f64,
    /// EV power actually exchanged after clamping, kW.
    pub ev_kw: f64,
    pub grid: GridExchange,
}

/// Episodic simulator restricted to the days of one split. When the clock
/// leaves the split (for example the training clock reaching a validation
/// week) it jumps to the next day that belongs to the split.
#[derive(Debug, Clone)]
pub struct Env {
    data: Arc<Dataset>,
    consts: EnvConstants,
    split: SplitKind,
    next_allowed: Vec<usize>,
    horizon: usize,
    design: Design,
    state: EnvState,
    ev_remaining: u32,
    steps: usize,
    hourly_cost: f64,
    ev_rng: ChaCha8Rng,
}

impl Env {
    pub fn new(
        data: Arc<Dataset>,
        consts: EnvConstants,
        split: SplitKind,
        horizon: usize,
    ) -> Result<Self> {
        consts.validate()?;
        if horizon == 0 {
            return Err(Error::Config("episode horizon must be at least 1".into()));
        }
        let days = data.split.days(split);
        if days.is_empty() {
            return Err(Error::Config(format!("dataset split {split:?} is empty")));
        }
        let mut next_allowed = vec![0; DAYS_PER_YEAR];
        for (d, slot) in next_allowed.iter_mut().enumerate() {
            *slot = days
                .iter()
                .copied()
                .find(|&a| a >= d)
                .unwrap_or(days[0]);
        }
        let design = Design {
            pv_kwp: 0.0,
            battery_kwh: 0.0,
        };
        let first_day = days[0];
        Ok(Self {
            data,
            consts,
            split,
            next_allowed,
            horizon,
            design,
            state: EnvState {
                hour: 0,
                day: first_day,
                soc: 0.0,
                pv_prod: 0.0,
                load: 0.0,
                import_price: 0.0,
                export_price: 0.0,
                ev_present: false,
                soc_ev: 0.0,
            },
            ev_remaining: 0,
            steps: 0,
            hourly_cost: 0.0,
            ev_rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn constants(&self) -> &EnvConstants {
        &self.consts
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn split(&self) -> SplitKind {
        self.split
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Starts a new episode. The EV arrival process gets its own stream seeded
    /// from `rng`, so two episodes reset from equal RNG states see the same
    /// arrivals regardless of design or actions.
    pub fn reset<R: Rng + ?Sized>(
        &mut self,
        mode: InitMode,
        design: Design,
        rng: &mut R,
    ) -> Result<EnvState> {
        let design = Design::new(design.pv_kwp, design.battery_kwh)?;
        let days = self.data.split.days(self.split);
        let (day, soc) = match mode {
            InitMode::Training => {
                let day = days[rng.random_range(0..days.len())];
                let u: f64 = rng.random();
                (day, u * design.battery_kwh)
            }
            InitMode::Validation => (days[0], design.battery_kwh / 2.0),
        };
        self.ev_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        self.design = design;
        self.steps = 0;
        self.hourly_cost = hourly_investment_cost(&design, &self.consts, self.horizon as f64);
        self.ev_remaining = 0;
        self.state = EnvState {
            hour: 0,
            day,
            soc,
            pv_prod: 0.0,
            load: 0.0,
            import_price: 0.0,
            export_price: 0.0,
            ev_present: false,
            soc_ev: 0.0,
        };
        self.refresh_exogenous();
        self.ev_process(false);
        Ok(self.state)
    }

    fn refresh_exogenous(&mut self) {
        let s = &mut self.state;
        let series = &self.data.series;
        s.pv_prod = self.design.pv_kwp * series.pv(s.hour, s.day);
        s.load = series.load(s.hour, s.day);
        s.import_price = series.import_price(s.hour);
        s.export_price = series.export_price(s.hour);
    }

    /// Departure of the connected EV, or possibly a new arrival when none is
    /// connected. Two uniforms are always drawn so the stream stays aligned.
    fn ev_process(&mut self, elapsed: bool) {
        let c = &self.consts;
        if self.state.ev_present {
            if elapsed {
                self.ev_remaining = self.ev_remaining.saturating_sub(1);
            }
            if self.ev_remaining == 0 {
                self.state.ev_present = false;
                self.state.soc_ev = 0.0;
            }
            return;
        }
        let arrive: f64 = self.ev_rng.random();
        let soc_u: f64 = self.ev_rng.random();
        let stay = self.ev_rng.random_range(EV_MIN_STAY_HOURS..=EV_MAX_STAY_HOURS);
        if arrive < self.data.series.ev_arrival_prob(self.state.hour) {
            self.state.ev_present = true;
            self.state.soc_ev = c.ev_soc_min + soc_u * (c.ev_capacity - c.ev_soc_min);
            self.ev_remaining = stay;
        }
    }

    /// Advances one hour under `action` (positive = charging).
    pub fn step(&mut self, action: Action) -> StepOutcome {
        let c = self.consts;
        let cap = self.design.battery_kwh;
        let current = self.state;

        let battery_kw = clamp_battery_power(action.battery_kw, current.soc, cap, c.dt);
        let ev_kw = clamp_ev_power(action.ev_kw, current.soc_ev, current.ev_present, &c);
        let grid = grid_exchange(current.load, current.pv_prod, battery_kw, ev_kw);
        let reward = exchange_reward(&current, grid, ev_kw, &c) - self.hourly_cost;

        let soc = update_soc(current.soc, battery_kw, c.battery_efficiency, c.dt);
        self.state.soc = soc.clamp(0.0, cap);
        if current.ev_present {
            let soc_ev = update_soc(current.soc_ev, ev_kw, c.ev_efficiency, c.dt);
            self.state.soc_ev = soc_ev.clamp(c.ev_soc_min, c.ev_capacity);
        }

        let (hour, mut day) = advance_clock(current.hour, current.day);
        if hour == 0 {
            day = self.next_allowed[day];
        }
        self.state.hour = hour;
        self.state.day = day;
        self.refresh_exogenous();
        self.ev_process(true);

        self.steps += 1;
        StepOutcome {
            state: self.state,
            reward,
            truncated: self.steps >= self.horizon,
            battery_kw,
            ev_kw,
            grid,
        }
    }
}
