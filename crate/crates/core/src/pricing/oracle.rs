//! Brute-force dynamic programming over a discretized price set.
//!
//! Solves the pricing problem without using the quadratic value-function
//! structure: the value function is tabulated on a uniform grid of expected
//! waits, interpolated with local three-point polynomials, and minimized by
//! exhaustive scan over an evenly spaced price grid on `[0, b]`.

use super::{PricingParams, PricingSchedule};
use crate::{Error, Result};

/// Default spacing of the expected-wait grid, in slots.
pub const DEFAULT_STATE_STEP: f64 = 0.01;

/// Price grids coarser than this fraction of `b` raise the warning flag.
const COARSE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSchedule {
    /// Greedy trajectory from `W(0) = 0`.
    pub schedule: PricingSchedule,
    /// Tabulated optimal cost-to-go at `t = 0`, `W = 0`.
    pub value: f64,
    /// Spacing of the price grid.
    pub price_step: f64,
    /// The price grid is coarser than 1% of `b`.
    pub coarse: bool,
}

struct ValueTable {
    step: f64,
    values: Vec<f64>,
}

impl ValueTable {
    fn eval(&self, w: f64) -> f64 {
        let n = self.values.len();
        let x = w / self.step;
        // centre node of the three-point stencil, kept inside the table
        let c = (x.round() as isize).clamp(1, n as isize - 2) as usize;
        let t = x - c as f64;
        let (y0, y1, y2) = (self.values[c - 1], self.values[c], self.values[c + 1]);
        y1 + 0.5 * t * (y2 - y0) + 0.5 * t * t * (y2 - 2.0 * y1 + y0)
    }
}

pub fn dp_oracle(params: &PricingParams, price_grid_size: usize) -> Result<OracleSchedule> {
    dp_oracle_with_state_step(params, price_grid_size, DEFAULT_STATE_STEP)
}

pub fn dp_oracle_with_state_step(
    params: &PricingParams,
    price_grid_size: usize,
    state_step: f64,
) -> Result<OracleSchedule> {
    params.validate()?;
    if price_grid_size < 2 {
        return Err(Error::Parameter("price grid needs at least two points".into()));
    }
    if !(state_step > 0.0) {
        return Err(Error::Parameter("state step must be positive".into()));
    }
    let horizon = params.horizon;
    let k = params.k();
    let rho = params.rho;
    let price_step = params.b / (price_grid_size - 1) as f64;
    let prices: Vec<f64> = (0..price_grid_size).map(|i| i as f64 * price_step).collect();

    // Expected waits never exceed the slot index, so [0, horizon + 1] covers
    // every reachable state including one step of look-ahead.
    let n_states = ((horizon as f64 + 1.0) / state_step).ceil() as usize + 3;
    let grid: Vec<f64> = (0..n_states).map(|i| i as f64 * state_step).collect();

    let best_action = |next: &ValueTable, w: f64| -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for &p in &prices {
            let v = k * p * p + rho * next.eval(w + 1.0 - k * p);
            if v < best.0 {
                best = (v, p);
            }
        }
        best
    };

    // tables[t] tabulates V_t; the terminal slot pays W^2 with price zero.
    let mut tables: Vec<ValueTable> = Vec::with_capacity(horizon + 1);
    tables.push(ValueTable {
        step: state_step,
        values: grid.iter().map(|w| w * w).collect(),
    });
    for _ in 0..horizon {
        let next = tables.last().expect("terminal table");
        let values = grid
            .iter()
            .map(|&w| w * w + best_action(next, w).0)
            .collect();
        tables.push(ValueTable {
            step: state_step,
            values,
        });
    }
    tables.reverse();

    let mut price = vec![0.0; horizon + 1];
    let mut wait = vec![0.0; horizon + 1];
    for t in 0..horizon {
        let (_, p) = best_action(&tables[t + 1], wait[t]);
        price[t] = p;
        wait[t + 1] = wait[t] + 1.0 - k * p;
    }
    let value = tables[0].eval(0.0);

    Ok(OracleSchedule {
        schedule: PricingSchedule {
            price,
            expected_wait: wait,
            clamped: false,
        },
        value,
        price_step,
        coarse: price_step > COARSE_FRACTION * params.b,
    })
}
