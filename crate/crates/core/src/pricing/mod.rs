//! Dynamic hitching prices at a single interchange point.
//!
//! A UAV waiting at an interchange posts a price `p(t)` each time slot. A
//! vehicle shows up with probability `alpha` and accepts when its private
//! carrying cost, uniform on `[0, b]`, is at most the price. The platform
//! trades the discounted squared expected wait against the expected payment,
//! which gives a scalar linear-quadratic control problem. Its value function
//! is `Q_t w^2 + M_t w + S_t`; the coefficients follow a backward Riccati-type
//! recursion and the optimal price is affine in the current expected wait.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng::seeded, Error, Result};

pub mod oracle;

pub use oracle::{dp_oracle, dp_oracle_with_state_step, OracleSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingParams {
    /// Per-slot probability that a suitable vehicle passes the interchange.
    pub alpha: f64,
    /// Upper bound of the vehicles' private carrying cost.
    pub b: f64,
    /// Discount factor.
    pub rho: f64,
    /// Number of time slots `T_w`.
    pub horizon: usize,
}

impl PricingParams {
    pub fn new(alpha: f64, b: f64, rho: f64, horizon: usize) -> Result<Self> {
        let params = Self {
            alpha,
            b,
            rho,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Parameter(format!("b must be positive, got {}", self.b)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Parameter(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if self.horizon < 1 {
            return Err(Error::Parameter("horizon must be at least one slot".into()));
        }
        Ok(())
    }

    /// `alpha / b`, the acceptance probability gained per unit of price.
    pub fn k(&self) -> f64 {
        self.alpha / self.b
    }
}

/// Backward-recursion coefficients, indexed by slot `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiCoefficients {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
}

impl RiccatiCoefficients {
    pub fn horizon(&self) -> usize {
        self.q.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSchedule {
    pub price: Vec<f64>,
    pub expected_wait: Vec<f64>,
    /// Set when at least one price had to be clipped into `[0, b]`.
    pub clamped: bool,
}

impl PricingSchedule {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    /// Writes `t,price,expected_wait` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "price", "expected_wait"])?;
        for (t, (p, w)) in self.price.iter().zip(&self.expected_wait).enumerate() {
            wtr.write_record([t.to_string(), p.to_string(), w.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub q_star: f64,
    pub m_star: f64,
    pub wait_star: f64,
    pub price_limit: f64,
}

/// One backward step of the coefficient recursion: `(Q_t, M_t)` from
/// `(Q_{t+1}, M_{t+1})`.
pub fn recursion_step(params: &PricingParams, q_next: f64, m_next: f64) -> (f64, f64) {
    let denom = 1.0 + params.rho * q_next * params.k();
    let q = 1.0 + params.rho * q_next / denom;
    let m = params.rho * (m_next + 2.0 * q_next) / denom;
    (q, m)
}

pub fn backward_recursion(params: &PricingParams) -> Result<RiccatiCoefficients> {
    params.validate()?;
    let n = params.horizon;
    let mut q = vec![0.0; n + 1];
    let mut m = vec![0.0; n + 1];
    q[n] = 1.0;
    m[n] = 0.0;
    for t in (0..n).rev() {
        let (qt, mt) = recursion_step(params, q[t + 1], m[t + 1]);
        q[t] = qt;
        m[t] = mt;
    }
    Ok(RiccatiCoefficients { q, m })
}

/// Unclipped optimal price for expected wait `wait`, given the coefficients
/// of the following slot. Strictly increasing in `wait`.
pub fn policy_price(params: &PricingParams, q_next: f64, m_next: f64, wait: f64) -> f64 {
    let rho = params.rho;
    (rho * m_next + 2.0 * rho * q_next * (wait + 1.0)) / (2.0 + 2.0 * rho * q_next * params.k())
}

pub fn optimal_schedule(
    params: &PricingParams,
    coeffs: &RiccatiCoefficients,
) -> Result<PricingSchedule> {
    params.validate()?;
    let n = params.horizon;
    if coeffs.q.len() != n + 1 || coeffs.m.len() != n + 1 {
        return Err(Error::Consistency(format!(
            "coefficients cover {} / {} slots, horizon needs {}",
            coeffs.q.len(),
            coeffs.m.len(),
            n + 1
        )));
    }
    let k = params.k();
    let mut price = vec![0.0; n + 1];
    let mut wait = vec![0.0; n + 1];
    let mut clamped = false;
    for t in 0..n {
        let raw = policy_price(params, coeffs.q[t + 1], coeffs.m[t + 1], wait[t]);
        let p = raw.clamp(0.0, params.b);
        if p != raw {
            clamped = true;
        }
        price[t] = p;
        wait[t + 1] = wait[t] + 1.0 - k * p;
    }
    // p(T_w) = 0: the last slot's price no longer affects any future wait.
    price[n] = 0.0;
    Ok(PricingSchedule {
        price,
        expected_wait: wait,
        clamped,
    })
}

/// Expected wait at slot `t` from the explicit sum-product form, valid while
/// no price is clipped. Used to cross-check the forward simulation.
pub fn expected_wait_closed_form(
    params: &PricingParams,
    coeffs: &RiccatiCoefficients,
    t: usize,
) -> f64 {
    let k = params.k();
    let rho = params.rho;
    let drift = |s: usize| (2.0 - rho * coeffs.m[s] * k) / (2.0 + 2.0 * rho * coeffs.q[s] * k);
    let decay = |i: usize| 1.0 / (1.0 + rho * coeffs.q[i] * k);
    (1..=t)
        .map(|s| drift(s) * ((s + 1)..=t).map(decay).product::<f64>())
        .sum()
}

/// Discounted objective `sum_t rho^t (W(t)^2 + (alpha/b) p(t)^2)` of a schedule.
pub fn schedule_cost(params: &PricingParams, schedule: &PricingSchedule) -> f64 {
    let k = params.k();
    let mut discount = 1.0;
    let mut total = 0.0;
    for (p, w) in schedule.price.iter().zip(&schedule.expected_wait) {
        total += discount * (w * w + k * p * p);
        discount *= params.rho;
    }
    total
}

/// Closed-form limits of the recursion as the horizon grows without bound.
/// The horizon field is ignored.
pub fn steady_state(params: &PricingParams) -> Result<SteadyState> {
    params.validate()?;
    let PricingParams { alpha, b, rho, .. } = *params;
    let k = params.k();
    let x = 1.0 - b * (1.0 - rho) / (rho * alpha);
    let q_star = 0.5 * (x + (x * x + 4.0 * b / (rho * alpha)).sqrt());
    let m_star = 2.0 * rho * q_star / (1.0 - rho + rho * q_star * k);
    let wait_star =
        (1.0 - rho) * (1.0 + rho * q_star * k) / (rho * q_star * (k * (1.0 - rho) + rho * q_star * k * k));
    Ok(SteadyState {
        q_star,
        m_star,
        wait_star,
        price_limit: b / alpha,
    })
}

/// Stationary policy built from the steady-state coefficients, evaluated for
/// slots `0..=t_max`. Prices are reported unclipped; the flag records whether
/// any of them leaves `[0, b]`.
pub fn infinite_horizon_schedule(params: &PricingParams, t_max: usize) -> Result<PricingSchedule> {
    if t_max < 1 {
        return Err(Error::Parameter("t_max must be at least 1".into()));
    }
    let ss = steady_state(params)?;
    let k = params.k();
    let rho = params.rho;
    let drift = (2.0 - rho * ss.m_star * k) / (2.0 + 2.0 * rho * ss.q_star * k);
    let decay = 1.0 / (1.0 + rho * ss.q_star * k);
    let mut price = Vec::with_capacity(t_max + 1);
    let mut wait = Vec::with_capacity(t_max + 1);
    let mut clamped = false;
    for t in 0..=t_max {
        let w = drift * (1.0 - decay.powi(t as i32)) / (1.0 - decay);
        let p = policy_price(params, ss.q_star, ss.m_star, w);
        if !(0.0..=params.b).contains(&p) {
            clamped = true;
        }
        wait.push(w);
        price.push(p);
    }
    Ok(PricingSchedule {
        price,
        expected_wait: wait,
        clamped,
    })
}

/// Per-slot empirical mean of the realized wait and its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingStats {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trials: usize,
}

/// Monte-Carlo run of the stochastic wait process under a fixed price
/// schedule. Each slot a vehicle arrives with probability `alpha` and draws a
/// cost uniformly from `[0, b]`; the wait stops growing only when the vehicle
/// arrives and accepts.
pub fn simulate_waiting(
    params: &PricingParams,
    schedule: &PricingSchedule,
    trials: usize,
    seed: u64,
) -> Result<WaitingStats> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let n = schedule.len();
    let mut rng = seeded(seed);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for _ in 0..trials {
        let mut w = 0.0f64;
        for t in 0..n {
            sum[t] += w;
            sum_sq[t] += w * w;
            let arrived = rng.gen_bool(params.alpha);
            let cost: f64 = rng.gen_range(0.0..=params.b);
            if !(arrived && cost <= schedule.price[t]) {
                w += 1.0;
            }
        }
    }
    let nf = trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, mu)| {
            if trials < 2 {
                return 0.0;
            }
            let var = ((sq - nf * mu * mu) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    Ok(WaitingStats {
        mean,
        std_err,
        trials,
    })
}
