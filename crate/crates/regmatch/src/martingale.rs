//! Tail bounds for sums of bounded variables with bounded conditional means,
//! and Monte Carlo checks of those bounds on synthetic processes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// `P[S_t ≥ λ] ≤ exp(−(λ−P)² / (8MP + 2M(λ−P)/3))` for `λ > P`.
pub fn upper_tail_bound(lambda: f64, p: f64, m: f64) -> f64 {
    if lambda <= p {
        return 1.0;
    }
    let d = lambda - p;
    (-(d * d) / (8.0 * m * p + 2.0 * m * d / 3.0)).exp().min(1.0)
}

/// `P[S_t ≤ λ] ≤ exp(−(P^ℓ−λ)² / (8M·P^h + 2M(P^ℓ−λ)/3))` for `λ < P^ℓ`.
pub fn lower_tail_bound(lambda: f64, p_low: f64, p_high: f64, m: f64) -> f64 {
    if lambda >= p_low {
        return 1.0;
    }
    let d = p_low - lambda;
    (-(d * d) / (8.0 * m * p_high + 2.0 * m * d / 3.0)).exp().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
}

/// Boolean processes `X_1..X_t` with known conditional means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Process {
    /// Independent Bernoulli(p).
    IidBernoulli { p: f64 },
    /// `X_i = 0`.
    Zero,
    /// `p_i = 0` on odd `i`, `p` on even `i`; declared `P_i = p`.
    Alternating { p: f64 },
    /// `p_i = high` while `S_{i−1}` is even, else `low`; declared
    /// `P^ℓ_i = low`, `P^h_i = high`.
    Switching { low: f64, high: f64 },
}

impl Process {
    /// Declared `(P^ℓ_i, P^h_i)`, the same for every `i`.
    pub fn declared(&self) -> (f64, f64) {
        match *self {
            Process::IidBernoulli { p } => (p, p),
            Process::Zero => (0.0, 0.0),
            Process::Alternating { p } => (0.0, p),
            Process::Switching { low, high } => (low, high),
        }
    }

    fn mean(&self, i: usize, s: u64) -> f64 {
        match *self {
            Process::IidBernoulli { p } => p,
            Process::Zero => 0.0,
            Process::Alternating { p } => {
                if i % 2 == 1 {
                    0.0
                } else {
                    p
                }
            }
            Process::Switching { low, high } => {
                if s % 2 == 0 {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// One sample of `S_t`, checking each step against the declared bounds.
    pub fn sample_sum(&self, t: usize, rng: &mut impl Rng) -> Result<u64> {
        let (lo, hi) = self.declared();
        let mut s = 0u64;
        for i in 1..=t {
            let p = self.mean(i, s);
            if !(p >= lo - 1e-12 && p <= hi + 1e-12 && (0.0..=1.0).contains(&p)) {
                return Err(Error::SpecViolation(format!("step {i} has mean {p} outside [{lo}, {hi}]")));
            }
            if rng.gen::<f64>() < p {
                s += 1;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub bound: f64,
    /// `empirical − 3·std_err > bound`.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub tail: Tail,
    pub process: Process,
    pub t: usize,
    pub m: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub trials: usize,
    pub rows: Vec<TailRow>,
    pub any_violation: bool,
}

/// Offsets, in units of `sqrt(P)`, of the default λ grid from the mean bound.
pub const DEFAULT_OFFSETS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];

/// Default grid: `λ = P + c·sqrt(P)` for the upper tail, `P^ℓ − c·sqrt(P^ℓ)`
/// for the lower tail. For `P = 0` the upper grid is `1..=6`; the lower grid
/// is empty when `P^ℓ = 0`.
pub fn default_grid(tail: Tail, process: &Process, t: usize) -> Vec<f64> {
    let (lo, hi) = process.declared();
    match tail {
        Tail::Upper => {
            let p = hi * t as f64;
            if p == 0.0 {
                (1..=6).map(f64::from).collect()
            } else {
                DEFAULT_OFFSETS.iter().map(|c| p + c * p.sqrt()).collect()
            }
        }
        Tail::Lower => {
            let p = lo * t as f64;
            DEFAULT_OFFSETS.iter().map(|c| p - c * p.sqrt()).filter(|&l| l > 0.0 && p > 0.0).collect()
        }
    }
}

/// Empirical tail frequencies of `S_t` at each `λ` against the closed-form
/// bound (`M = 1`).
pub fn mc_martingale_check(
    tail: Tail,
    process: Process,
    t: usize,
    lambdas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    if trials == 0 || t == 0 {
        return Err(Error::Range("t and trials must be positive".into()));
    }
    let m = 1.0;
    let (lo, hi) = process.declared();
    let (p_low, p_high) = (lo * t as f64, hi * t as f64);
    let mut sums = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut rng = rng::bulk(seed, stream::TRIAL, i as u64);
        sums.push(process.sample_sum(t, &mut rng)? as f64);
    }
    let n = trials as f64;
    let rows: Vec<TailRow> = lambdas
        .iter()
        .map(|&lambda| {
            let hits = sums
                .iter()
                .filter(|&&s| match tail {
                    Tail::Upper => s >= lambda,
                    Tail::Lower => s <= lambda,
                })
                .count() as f64;
            let f = hits / n;
            let std_err = (f * (1.0 - f) / n).sqrt();
            let bound = match tail {
                Tail::Upper => upper_tail_bound(lambda, p_high, m),
                Tail::Lower => lower_tail_bound(lambda, p_low, p_high, m),
            };
            TailRow { lambda, empirical: f, std_err, bound, violated: f - 3.0 * std_err > bound }
        })
        .collect();
    let any_violation = rows.iter().any(|r| r.violated);
    Ok(MartingaleReport { tail, process, t, m, p_low, p_high, trials, rows, any_violation })
}
