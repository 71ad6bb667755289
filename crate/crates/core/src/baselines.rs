//! Expert rule-based dispatch and an exhaustive design lattice search.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::RuleBasedController;
use crate::data::SplitKind;
use crate::env::{Action, Design, EnvConstants, EnvState, InitMode};
use crate::error::{Error, Result};
use crate::experiment::{evaluate, EnvSpec};

/// Battery-first self-consumption rule. Surplus PV charges the stationary
/// battery up to its headroom and then the EV; a deficit is covered from the
/// battery and then the EV. A balanced hour yields the zero action.
pub fn rule_based_action(state: &EnvState, design: &Design, consts: &EnvConstants) -> Action {
    let dt = consts.dt;
    let surplus = state.pv_prod - state.load;
    let cap = design.battery_kwh;
    let ev_max = consts.ev_max_power;
    if surplus > 0.0 {
        let battery = surplus.min(((cap - state.soc) / dt).max(0.0));
        let residual = surplus - battery;
        let ev = if state.ev_present {
            residual
                .min(((consts.ev_capacity - state.soc_ev) / dt).max(0.0))
                .min(ev_max)
        } else {
            0.0
        };
        Action::new(battery, ev)
    } else if surplus < 0.0 {
        let deficit = -surplus;
        let battery = deficit.min((state.soc / dt).max(0.0));
        let residual = deficit - battery;
        let ev = if state.ev_present {
            residual
                .min(((state.soc_ev - consts.ev_soc_min) / dt).max(0.0))
                .min(ev_max)
        } else {
            0.0
        };
        Action::new(-battery, -ev)
    } else {
        Action::default()
    }
}

/// Candidate values for each design coordinate; the lattice is their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignLattice {
    pub pv_kwp: Vec<f64>,
    pub battery_kwh: Vec<f64>,
}

impl Default for DesignLattice {
    /// PV 0.5 to 12 kWp in 0.5 steps, battery 0 to 20 kWh in 1 kWh steps.
    fn default() -> Self {
        Self {
            pv_kwp: (1..=24).map(|k| k as f64 * 0.5).collect(),
            battery_kwh: (0..=20).map(f64::from).collect(),
        }
    }
}

impl DesignLattice {
    pub fn len(&self) -> usize {
        self.pv_kwp.len() * self.battery_kwh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order (PV outer, battery inner).
    pub fn points(&self) -> Result<Vec<Design>> {
        let mut out = Vec::with_capacity(self.len());
        for &pv in &self.pv_kwp {
            for &b in &self.battery_kwh {
                out.push(Design::new(pv, b)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub pv_kwp: f64,
    pub battery_kwh: f64,
    pub mean_return: f64,
    pub std_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: Design,
    pub best_index: usize,
    pub table: Vec<GridEntry>,
}

impl GridSearchResult {
    pub fn best_entry(&self) -> &GridEntry {
        &self.table[self.best_index]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.table {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Settings of a lattice search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSearchConfig {
    pub lattice: DesignLattice,
    /// Episode length in hours; `None` uses every hour of the training split.
    pub horizon: Option<usize>,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self {
            lattice: DesignLattice::default(),
            horizon: None,
            episodes: 4,
            seed: 0,
        }
    }
}

/// Mean training-split return of the rule-based controller at every lattice
/// point. Every point is evaluated from the same seed, so all designs face
/// identical EV arrivals. Ties keep the first point in lattice order.
pub fn grid_search_design(env: &EnvSpec, config: &GridSearchConfig) -> Result<GridSearchResult> {
    if config.lattice.is_empty() {
        return Err(Error::Config("design lattice is empty".into()));
    }
    if config.episodes == 0 {
        return Err(Error::Config("grid search needs at least one episode".into()));
    }
    let horizon = config
        .horizon
        .unwrap_or_else(|| env.data.split.hours(SplitKind::Training));
    let controller = RuleBasedController::new(env.consts);
    let mut table = Vec::with_capacity(config.lattice.len());
    for design in config.lattice.points()? {
        let designs = vec![design; config.episodes];
        let ev = evaluate(
            &controller,
            &designs,
            env,
            SplitKind::Training,
            horizon,
            InitMode::Validation,
            config.seed,
        )?;
        table.push(GridEntry {
            pv_kwp: design.pv_kwp,
            battery_kwh: design.battery_kwh,
            mean_return: ev.mean,
            std_return: ev.std,
        });
    }
    let best_index = table
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| {
            if e.mean_return > table[best].mean_return {
                i
            } else {
                best
            }
        });
    let best = Design::new(table[best_index].pv_kwp, table[best_index].battery_kwh)?;
    Ok(GridSearchResult {
        best,
        best_index,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(pv: f64, load: f64, soc: f64) -> EnvState {
        EnvState {
            hour: 12,
            day: 0,
            soc,
            pv_prod: pv,
            load,
            import_price: -0.3,
            export_price: 0.0,
            ev_present: false,
            soc_ev: 0.0,
        }
    }

    fn design(b: f64) -> Design {
        Design::new(5.0, b).unwrap()
    }

    #[test]
    fn surplus_goes_to_battery() {
        let a = rule_based_action(&state(5.0, 2.0, 0.0), &design(10.0), &EnvConstants::default());
        assert_eq!(a, Action::new(3.0, 0.0));
    }

    #[test]
    fn deficit_drawn_from_battery() {
        let a = rule_based_action(&state(1.0, 4.0, 10.0), &design(10.0), &EnvConstants::default());
        assert_eq!(a, Action::new(-3.0, 0.0));
    }

    #[test]
    fn balanced_hour_is_idle() {
        let a = rule_based_action(&state(2.0, 2.0, 5.0), &design(10.0), &EnvConstants::default());
        assert_eq!(a, Action::default());
    }

    #[test]
    fn ev_takes_the_residual() {
        let consts = EnvConstants::default();
        let mut s = state(9.0, 1.0, 9.0);
        s.ev_present = true;
        s.soc_ev = 50.0;
        // 1 kW fills the battery, 5 kW (power cap) to the EV, 2 kW exported.
        assert_eq!(rule_based_action(&s, &design(10.0), &consts), Action::new(1.0, 5.0));

        let mut s = state(0.0, 4.0, 1.0);
        s.ev_present = true;
        s.soc_ev = 33.5;
        // 1 kW from the battery, then only 1.5 kW before the EV floor.
        assert_eq!(rule_based_action(&s, &design(10.0), &consts), Action::new(-1.0, -1.5));
    }

    fn arb_case() -> impl Strategy<Value = (EnvState, Design)> {
        (
            0.0..12.0f64,
            0.0..8.0f64,
            0.0..1.0f64,
            0.0..20.0f64,
            any::<bool>(),
            0.0..1.0f64,
        )
            .prop_map(|(pv, load, frac, cap, present, ev)| {
                let consts = EnvConstants::default();
                let mut s = state(pv, load, frac * cap);
                s.ev_present = present;
                s.soc_ev = if present {
                    consts.ev_soc_min + ev * (consts.ev_capacity - consts.ev_soc_min)
                } else {
                    0.0
                };
                (s, Design::new(pv.max(0.1), cap).unwrap())
            })
    }

    proptest! {
        #[test]
        fn sign_follows_surplus((s, d) in arb_case()) {
            let consts = EnvConstants::default();
            let a = rule_based_action(&s, &d, &consts);
            if s.pv_prod < s.load {
                prop_assert!(a.battery_kw <= 0.0 && a.ev_kw <= 0.0);
            }
            if s.pv_prod > s.load {
                prop_assert!(a.battery_kw >= 0.0 && a.ev_kw >= 0.0);
            }
            let [bb, be] = Action::bounds(&d, &consts);
            prop_assert!(a.battery_kw.abs() <= bb + 1e-12);
            prop_assert!(a.ev_kw.abs() <= be);
            // Never moves more power than the imbalance.
            prop_assert!((a.battery_kw + a.ev_kw).abs() <= (s.pv_prod - s.load).abs() + 1e-12);
        }
    }

    #[test]
    fn lattice_default_brackets_and_empty_errors() {
        let l = DesignLattice::default();
        assert_eq!(l.pv_kwp.first(), Some(&0.5));
        assert_eq!(l.pv_kwp.last(), Some(&12.0));
        assert_eq!(l.battery_kwh.first(), Some(&0.0));
        assert_eq!(l.battery_kwh.last(), Some(&20.0));
        assert_eq!(l.len(), 24 * 21);
        let empty = DesignLattice {
            pv_kwp: vec![],
            battery_kwh: vec![1.0],
        };
        assert!(empty.is_empty());
    }
}
