use super::{Design, EnvConstants, EnvState};
use crate::data::{DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR};

/// Limits the requested battery power to what the current SoC allows.
pub fn clamp_battery_power(requested: f64, soc: f64, capacity: f64, dt: f64) -> f64 {
    let max_charge = (capacity - soc) / dt;
    let max_discharge = soc / dt;
    if requested > max_charge {
        max_charge
    } else if requested < -max_discharge {
        -max_discharge
    } else {
        requested
    }
}

/// Limits the requested EV power so the EV SoC stays within
/// `[ev_soc_min, ev_capacity]`; zero when no EV is connected.
pub fn clamp_ev_power(requested: f64, soc_ev: f64, present: bool, consts: &EnvConstants) -> f64 {
    if !present {
        return 0.0;
    }
    let max_charge = ((consts.ev_capacity - soc_ev) / consts.dt).max(0.0);
    let max_discharge = ((soc_ev - consts.ev_soc_min) / consts.dt).max(0.0);
    if requested > max_charge {
        max_charge
    } else if requested < -max_discharge {
        -max_discharge
    } else {
        requested
    }
}

/// Next-hour SoC with charge/discharge losses.
pub fn update_soc(soc: f64, power: f64, efficiency: f64, dt: f64) -> f64 {
    if power >= 0.0 {
        soc + power * dt * efficiency
    } else {
        soc + power * dt / efficiency
    }
}

/// Hour increments modulo 24; the day advances when the hour wraps.
pub fn advance_clock(hour: usize, day: usize) -> (usize, usize) {
    let next_hour = (hour + 1) % HOURS_PER_DAY;
    let next_day = if next_hour == 0 {
        (day + 1) % DAYS_PER_YEAR
    } else {
        day
    };
    (next_hour, next_day)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridExchange {
    pub import_kw: f64,
    pub export_kw: f64,
}

/// Resolves the building bus balance against the grid.
pub fn grid_exchange(load: f64, pv: f64, battery_kw: f64, ev_kw: f64) -> GridExchange {
    let net = load - pv + battery_kw + ev_kw;
    GridExchange {
        import_kw: net.max(0.0),
        export_kw: (-net).max(0.0),
    }
}

/// Share of an upfront investment attributable to a horizon of `horizon_hours`.
pub fn annuity_factor(rate: f64, lifetime_years: f64, horizon_hours: f64) -> f64 {
    let growth = (1.0 + rate).powf(lifetime_years);
    rate * growth / (growth - 1.0) * horizon_hours / HOURS_PER_YEAR as f64
}

/// Capex plus opex charged per step, spread evenly over the horizon.
pub fn hourly_investment_cost(design: &Design, consts: &EnvConstants, horizon_hours: f64) -> f64 {
    let r = consts.discount_rate;
    let r_pv = annuity_factor(r, consts.pv_lifetime_years, horizon_hours);
    let r_b = annuity_factor(r, consts.battery_lifetime_years, horizon_hours);
    let capex = (consts.pv_capex_fixed + consts.pv_capex_var * design.pv_kwp) * r_pv
        + (consts.battery_capex_fixed + consts.battery_capex_var * design.battery_kwh) * r_b;
    let annual_opex = consts.pv_opex_fixed
        + consts.pv_opex_var * design.pv_kwp
        + consts.battery_opex_fixed
        + consts.battery_opex_var * design.battery_kwh;
    let opex = annual_opex * horizon_hours / HOURS_PER_YEAR as f64;
    (capex + opex) / horizon_hours * consts.dt
}

/// Reward for one step; prices are signed reward rates, so importing at a
/// negative tariff lowers the reward.
pub fn step_reward(
    state: &EnvState,
    grid: GridExchange,
    ev_kw: f64,
    design: &Design,
    consts: &EnvConstants,
    horizon_hours: f64,
) -> f64 {
    exchange_reward(state, grid, ev_kw, consts) - hourly_investment_cost(design, consts, horizon_hours)
}

/// Grid and EV terms of the step reward.
pub(crate) fn exchange_reward(
    state: &EnvState,
    grid: GridExchange,
    ev_kw: f64,
    consts: &EnvConstants,
) -> f64 {
    let dt = consts.dt;
    let grid_term = grid.import_kw * dt * state.import_price + grid.export_kw * dt * state.export_price;
    let ev_term = if consts.ev_exchange_reward && state.ev_present {
        let discharge = (-ev_kw).max(0.0);
        let charge = ev_kw.max(0.0);
        discharge * dt * consts.ev_import_price + charge * dt * consts.ev_export_price
    } else {
        0.0
    };
    grid_term + ev_term
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn battery_clamp_examples() {
        assert_eq!(clamp_battery_power(5.0, 9.0, 10.0, 1.0), 1.0);
        assert_eq!(clamp_battery_power(-7.0, 4.0, 10.0, 1.0), -4.0);
        assert_eq!(clamp_battery_power(0.5, 5.0, 10.0, 1.0), 0.5);
    }

    /// Projection of the post-step EV SoC onto the feasible interval, found by
    /// scanning candidate powers on a fine grid.
    fn brute_force_ev_power(requested: f64, soc_ev: f64, c: &EnvConstants) -> f64 {
        let mut best = 0.0;
        let mut best_dist = f64::INFINITY;
        let steps = 200_000;
        for i in 0..=steps {
            let p = -c.ev_max_power + 2.0 * c.ev_max_power * i as f64 / steps as f64;
            let next = soc_ev + p * c.dt;
            if next < c.ev_soc_min - 1e-12 || next > c.ev_capacity + 1e-12 {
                continue;
            }
            let dist = (p - requested).abs();
            if dist < best_dist {
                best_dist = dist;
                best = p;
            }
        }
        best
    }

    #[test]
    fn ev_clamp_examples() {
        let c = EnvConstants::default();
        assert_eq!(clamp_ev_power(3.0, 80.0, true, &c), 0.0);
        assert_eq!(clamp_ev_power(-5.0, 33.0, true, &c), -1.0);
        assert!(approx(brute_force_ev_power(-5.0, 33.0, &c), -1.0, 1e-4));
        assert_eq!(clamp_ev_power(4.0, 0.0, false, &c), 0.0);
    }

    #[test]
    fn ev_clamp_matches_projection_oracle() {
        let c = EnvConstants::default();
        for &(req, soc) in &[(4.9, 76.3), (-4.9, 35.0), (2.0, 50.0), (-0.3, 32.1), (5.0, 79.99)] {
            let got = clamp_ev_power(req, soc, true, &c);
            assert!(approx(got, brute_force_ev_power(req, soc, &c), 1e-4), "{req} {soc}");
        }
    }

    #[test]
    fn soc_update_examples() {
        assert!(approx(update_soc(5.0, 2.0, 0.9, 1.0), 6.8, 1e-12));
        assert!(approx(update_soc(5.0, -2.0, 0.9, 1.0), 5.0 - 2.0 / 0.9, 1e-12));
        assert!(approx(update_soc(5.0, -2.0, 0.9, 1.0), 2.7778, 1e-4));
        assert_eq!(update_soc(5.0, 0.0, 0.9, 1.0), 5.0);
    }

    #[test]
    fn clock_examples() {
        assert_eq!(advance_clock(23, 10), (0, 11));
        assert_eq!(advance_clock(5, 10), (6, 10));
        assert_eq!(advance_clock(23, 364), (0, 0));
    }

    #[test]
    fn clock_full_year_returns_to_start() {
        let (mut h, mut d) = (0, 17);
        let mut prev = (h, d);
        for _ in 0..HOURS_PER_YEAR {
            (h, d) = advance_clock(h, d);
            let lex_next = prev.0 + 1 == h && prev.1 == d
                || (prev.0 == 23 && h == 0 && d == (prev.1 + 1) % 365);
            assert!(lex_next);
            prev = (h, d);
        }
        assert_eq!((h, d), (0, 17));
    }

    #[test]
    fn grid_examples() {
        let g = grid_exchange(3.0, 1.0, 1.0, 0.0);
        assert_eq!((g.import_kw, g.export_kw), (3.0, 0.0));
        let g = grid_exchange(1.0, 4.0, 2.0, 0.0);
        assert_eq!((g.import_kw, g.export_kw), (0.0, 1.0));
        let g = grid_exchange(2.0, 2.0, 0.0, 0.0);
        assert_eq!((g.import_kw, g.export_kw), (0.0, 0.0));
    }

    #[test]
    fn annuity_examples() {
        // Frozen from a 50-digit evaluation of the closed form.
        assert!(approx(annuity_factor(0.05, 20.0, 8760.0), 0.080_242_587_190_691_32, 1e-15));
        assert!(approx(annuity_factor(0.05, 10.0, 8760.0), 0.129_504_574_965_456_7, 1e-15));
        let weekly = annuity_factor(0.05, 20.0, 168.0);
        assert!(approx(weekly, 0.080_242_587_190_691_32 * 168.0 / 8760.0, 1e-15));
        assert!(approx(weekly, 0.0015389, 1e-7));
    }

    fn state_at(hour: usize, import_price: f64) -> EnvState {
        EnvState {
            hour,
            day: 0,
            soc: 0.0,
            pv_prod: 0.0,
            load: 0.0,
            import_price,
            export_price: 0.0,
            ev_present: false,
            soc_ev: 0.0,
        }
    }

    #[test]
    fn reward_import_cost() {
        let c = EnvConstants::default();
        let d = Design::new(3.0, 5.0).unwrap();
        let k = hourly_investment_cost(&d, &c, 168.0);
        let grid = GridExchange {
            import_kw: 3.0,
            export_kw: 0.0,
        };
        let r = step_reward(&state_at(0, -0.3), grid, 0.0, &d, &c, 168.0);
        assert!(approx(r, -k - 0.9, 1e-12));
    }

    #[test]
    fn reward_export_at_zero_price() {
        let c = EnvConstants::default().zero_cost();
        let d = Design::new(3.0, 5.0).unwrap();
        let grid = GridExchange {
            import_kw: 0.0,
            export_kw: 2.0,
        };
        assert_eq!(step_reward(&state_at(0, -0.3), grid, 0.0, &d, &c, 168.0), 0.0);
    }

    #[test]
    fn reward_fixed_costs_only() {
        let c = EnvConstants::default();
        let d = Design::new(0.0, 0.0).unwrap();
        let t = 168.0;
        let grid = GridExchange {
            import_kw: 0.0,
            export_kw: 0.0,
        };
        let expected = -(c.pv_capex_fixed * annuity_factor(0.05, 20.0, t)
            + c.battery_capex_fixed * annuity_factor(0.05, 10.0, t))
            / t;
        let r = step_reward(&state_at(3, -0.3), grid, 0.0, &d, &c, t);
        assert!(approx(r, expected, 1e-12));
    }

    #[test]
    fn episode_cost_equals_horizon_totex() {
        let c = EnvConstants::default();
        let d = Design::new(4.0, 8.0).unwrap();
        let t = 168.0;
        let per_step = hourly_investment_cost(&d, &c, t);
        let totex = (c.pv_capex_fixed + c.pv_capex_var * 4.0) * annuity_factor(0.05, 20.0, t)
            + (c.battery_capex_fixed + c.battery_capex_var * 8.0) * annuity_factor(0.05, 10.0, t)
            + (c.pv_opex_var * 4.0 + c.battery_opex_var * 8.0) * t / 8760.0;
        assert!(approx(per_step * t, totex, 1e-9));
    }

    #[test]
    fn ev_exchange_term() {
        let c = EnvConstants::default().zero_cost();
        let d = Design::new(1.0, 1.0).unwrap();
        let mut s = state_at(9, 0.0);
        s.ev_present = true;
        let none = GridExchange {
            import_kw: 0.0,
            export_kw: 0.0,
        };
        assert_eq!(step_reward(&s, none, 2.0, &d, &c, 168.0), 0.0);
        let c = EnvConstants::default();
        let base = -hourly_investment_cost(&d, &c, 168.0);
        assert!(approx(step_reward(&s, none, 2.0, &d, &c, 168.0) - base, 2.0, 1e-12));
        assert!(approx(step_reward(&s, none, -2.0, &d, &c, 168.0) - base, -3.0, 1e-12));
        let gated = EnvConstants {
            ev_exchange_reward: false,
            ..c
        };
        assert!(approx(step_reward(&s, none, -2.0, &d, &gated, 168.0), base, 1e-12));
    }
}
