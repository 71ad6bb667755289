use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Design, EnvConstants, EnvState};

pub const STATE_FEATURES: usize = 9;
pub const DESIGN_FEATURES: usize = 2;
pub const ACTION_DIM: usize = 2;

/// Fixed normalization constants for network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureScales {
    /// kW.
    pub power: f64,
    /// CHF/kWh.
    pub price: f64,
    /// kWp.
    pub pv_reference: f64,
    /// kWh.
    pub battery_reference: f64,
}

impl Default for FeatureScales {
    fn default() -> Self {
        Self {
            power: 10.0,
            price: 0.5,
            pv_reference: 10.0,
            battery_reference: 20.0,
        }
    }
}

pub fn state_features(
    s: &EnvState,
    design: &Design,
    consts: &EnvConstants,
    scales: &FeatureScales,
) -> [f64; STATE_FEATURES] {
    let soc = if design.battery_kwh > 0.0 {
        s.soc / design.battery_kwh
    } else {
        0.0
    };
    [
        s.hour as f64 / 23.0,
        s.day as f64 / 364.0,
        soc,
        s.pv_prod / scales.power,
        s.load / scales.power,
        s.import_price / scales.price,
        s.export_price / scales.price,
        if s.ev_present { 1.0 } else { 0.0 },
        s.soc_ev / consts.ev_capacity,
    ]
}

pub fn design_features(design: &Design, scales: &FeatureScales) -> [f64; DESIGN_FEATURES] {
    [
        design.pv_kwp / scales.pv_reference,
        design.battery_kwh / scales.battery_reference,
    ]
}

/// Maps a point of `[-1, 1]^2` onto the design's action box.
pub fn action_from_unit(unit: [f64; ACTION_DIM], design: &Design, consts: &EnvConstants) -> Action {
    let [bb, be] = Action::bounds(design, consts);
    Action {
        battery_kw: unit[0] * bb,
        ev_kw: unit[1] * be,
    }
}

/// Rows of `[state | design]`.
pub fn actor_input<'a>(
    rows: impl ExactSizeIterator<Item = (&'a [f64; STATE_FEATURES], &'a [f64; DESIGN_FEATURES])>,
) -> Array2<f64> {
    let n = rows.len();
    let mut m = Array2::zeros((n, STATE_FEATURES + DESIGN_FEATURES));
    for (i, (s, x)) in rows.enumerate() {
        let mut row = m.row_mut(i);
        for (j, v) in s.iter().chain(x.iter()).enumerate() {
            row[j] = *v;
        }
    }
    m
}

/// Rows of `[state | action | design]` built from actor-input rows and actions.
pub fn critic_input(actor_rows: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    let n = actor_rows.nrows();
    assert_eq!(actions.nrows(), n);
    let mut m = Array2::zeros((n, STATE_FEATURES + ACTION_DIM + DESIGN_FEATURES));
    for i in 0..n {
        let mut row = m.row_mut(i);
        for j in 0..STATE_FEATURES {
            row[j] = actor_rows[[i, j]];
        }
        for j in 0..ACTION_DIM {
            row[STATE_FEATURES + j] = actions[[i, j]];
        }
        for j in 0..DESIGN_FEATURES {
            row[STATE_FEATURES + ACTION_DIM + j] = actor_rows[[i, STATE_FEATURES + j]];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_endpoints_map_to_box_corners() {
        let c = EnvConstants::default();
        let d = Design::new(3.0, 10.0).unwrap();
        assert_eq!(action_from_unit([1.0, -1.0], &d, &c), Action::new(10.0, -5.0));
        let small = Design::new(3.0, 5.0).unwrap();
        let a = action_from_unit([0.4, 0.0], &d, &c);
        let b = action_from_unit([0.4, 0.0], &small, &c);
        assert_eq!(a.battery_kw, 2.0 * b.battery_kw);
    }

    #[test]
    fn zero_battery_has_finite_features() {
        let c = EnvConstants::default();
        let d = Design::new(3.0, 0.0).unwrap();
        let s = EnvState {
            hour: 5,
            day: 3,
            soc: 0.0,
            pv_prod: 0.0,
            load: 1.0,
            import_price: -0.3,
            export_price: 0.0,
            ev_present: false,
            soc_ev: 0.0,
        };
        assert!(state_features(&s, &d, &c, &FeatureScales::default())
            .iter()
            .all(|v| v.is_finite()));
    }
}
