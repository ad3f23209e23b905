//! The iid extension: `X = Σ_{i∈[n]} C(Y_i, r)` with independent
//! `Y_i ~ Bin(n, p)` — exact distribution by convolution, seeded sampling,
//! the deterministic dyadic chain on sample vectors, and the tail-bound
//! pipelines run with the model's exact moments.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{
    deviation_scale, pipeline_const_eps_with, pipeline_general_with, BoundReport, Constants,
    TailModel,
};
use crate::combin::{binomial, binomial_f64, ceil_guarded};
use crate::oracles::Distribution;
use crate::prob::{pow_rational, EdgeProb};
use crate::{Error, Result};

/// Support budget for the exact convolution.
pub const MAX_SUPPORT: u128 = 10_000_000;

/// `X = Σ_i C(Y_i, r)` with `Y_i ~ Bin(n, p)` iid; the summand count and
/// the binomial size share the same n.
#[derive(Clone, Debug)]
pub struct IidSumModel {
    pub n: u64,
    pub p: EdgeProb,
    pub r: u64,
}

impl IidSumModel {
    pub fn new(n: u64, p: EdgeProb, r: u64) -> Result<Self> {
        if r < 1 {
            return Err(Error::InvalidParameter("r must be >= 1".into()));
        }
        Ok(IidSumModel { n, p, r })
    }

    /// `μ = n·C(n, r)·p^r` (note `C(n, r)`, not `C(n−1, r)`).
    pub fn mean(&self) -> f64 {
        self.n as f64 * binomial_f64(self.n, self.r) * self.p.as_f64().powi(self.r as i32)
    }

    /// Largest possible value `n·C(n, r)`.
    pub fn max_value(&self) -> u128 {
        self.n as u128 * binomial(self.n, self.r)
    }

    /// Law of a single summand `C(Y, r)`: binomial probabilities with the
    /// values collapsed through `y ↦ C(y, r)` (all `y < r` map to 0).
    pub fn per_term_law(&self) -> Distribution {
        let n = self.n;
        match &self.p {
            EdgeProb::Exact(q) => {
                let comp = BigRational::one() - q;
                let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
                for y in 0..=n {
                    let mass = BigRational::from(BigInt::from(binomial(n, y)))
                        * pow_rational(q, y)
                        * pow_rational(&comp, n - y);
                    if mass.is_zero() {
                        continue;
                    }
                    let value = u64::try_from(binomial(y, self.r)).expect("value fits u64");
                    out.entry(value).and_modify(|m| *m += &mass).or_insert(mass);
                }
                Distribution::Exact(out)
            }
            EdgeProb::Approx(p) => {
                let mut out: BTreeMap<u64, f64> = BTreeMap::new();
                for y in 0..=n {
                    let mass =
                        binomial_f64(n, y) * p.powi(y as i32) * (1.0 - p).powi((n - y) as i32);
                    if mass == 0.0 {
                        continue;
                    }
                    let value = u64::try_from(binomial(y, self.r)).expect("value fits u64");
                    *out.entry(value).or_insert(0.0) += mass;
                }
                Distribution::Approx(out)
            }
        }
    }

    /// Moments for the tail pipelines, exact from the per-term law:
    /// `σ² = n·Var C(Y, r)`.
    pub fn tail_model(&self) -> TailModel {
        let per = self.per_term_law();
        let mu = self.n as f64 * per.mean().to_f64();
        let sigma2 = self.n as f64 * per.variance().to_f64();
        let np = self.n as f64 * self.p.as_f64();
        TailModel {
            n: self.n,
            p: self.p.as_f64(),
            r: self.r,
            mu,
            sigma2,
            lambda: mu * (1.0 + np.powi(self.r as i32 - 1)),
            count_max: self.max_value() as f64,
        }
    }
}

fn convolve_exact(
    acc: &BTreeMap<u64, BigRational>,
    term: &BTreeMap<u64, BigRational>,
    cap: u64,
) -> BTreeMap<u64, BigRational> {
    let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (&va, qa) in acc {
        for (&vt, qt) in term {
            let v = va.saturating_add(vt).min(cap);
            let mass = qa * qt;
            out.entry(v).and_modify(|m| *m += &mass).or_insert(mass);
        }
    }
    out
}

fn convolve_approx(acc: &[f64], term: &[(u64, f64)], cap: u64) -> Vec<f64> {
    let max = acc.len() as u64 - 1;
    let top = (max + term.last().map_or(0, |(v, _)| *v)).min(cap);
    let mut out = vec![0.0f64; top as usize + 1];
    for (va, qa) in acc.iter().enumerate() {
        if *qa == 0.0 {
            continue;
        }
        for &(vt, qt) in term {
            let v = (va as u64 + vt).min(cap);
            out[v as usize] += qa * qt;
        }
    }
    out
}

/// Exact law of `Σ_i C(Y_i, r)` by n-fold convolution of the per-term law.
pub fn iid_exact_distribution(model: &IidSumModel) -> Result<Distribution> {
    iid_exact_distribution_capped(model, u64::MAX)
}

/// Same, with all mass at values ≥ `cap` lumped onto `cap`; tails at
/// thresholds ≤ cap are unaffected, and the state space stays ≤ cap+1.
pub fn iid_exact_distribution_capped(model: &IidSumModel, cap: u64) -> Result<Distribution> {
    let states = model.max_value().min(cap as u128);
    if states > MAX_SUPPORT {
        return Err(Error::BudgetExceeded(format!(
            "support of {states} states > {MAX_SUPPORT}"
        )));
    }
    // n convolutions over ≤ states·(n+1) products each; refuse runs that
    // would take hours rather than letting them hang
    let ops = states
        .saturating_mul(model.n as u128 + 1)
        .saturating_mul(model.n as u128);
    let ops_budget: u128 = if model.p.is_exact() {
        5_000_000
    } else {
        2_000_000_000
    };
    if ops > ops_budget {
        return Err(Error::BudgetExceeded(format!(
            "convolution cost ~{ops} products > {ops_budget} \
             (lower the cap or pass p as a float)"
        )));
    }
    let per = model.per_term_law();
    match per {
        Distribution::Exact(term) => {
            let mut acc: BTreeMap<u64, BigRational> = BTreeMap::new();
            acc.insert(0, BigRational::one());
            for _ in 0..model.n {
                acc = convolve_exact(&acc, &term, cap);
            }
            Ok(Distribution::Exact(acc))
        }
        Distribution::Approx(term) => {
            let term: Vec<(u64, f64)> = term.into_iter().collect();
            let mut acc = vec![1.0f64];
            for _ in 0..model.n {
                acc = convolve_approx(&acc, &term, cap);
            }
            Ok(Distribution::Approx(
                acc.into_iter()
                    .enumerate()
                    .filter(|(_, q)| *q > 0.0)
                    .map(|(v, q)| (v as u64, q))
                    .collect(),
            ))
        }
    }
}

/// Seeded sample vector `(Y_1, …, Y_n)` with `Y_i ~ Bin(n, p)`.
pub fn iid_sample(n: u64, p: f64, seed: u64) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (1u64 << 53) as f64;
    Ok((0..n)
        .map(|_| {
            (0..n)
                .filter(|_| ((rng.next_u64() >> 11) as f64 * scale) < p)
                .count() as u64
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct IidCertLevel {
    pub j: u32,
    pub d_j: f64,
    /// `⌈D_j⌉`.
    pub arm: u64,
    /// `N_{D_j}` = number of i with `Y_i ≥ ⌈D_j⌉` (exact count).
    pub count: u64,
    pub threshold: f64,
    pub holds: bool,
}

/// Outcome of the deterministic dyadic chain on one sample vector.
#[derive(Clone, Debug, Serialize)]
pub struct IidSandwichReport {
    /// All level thresholds held and the windows cover every `Y_i`.
    pub certified: bool,
    /// `max Y_i ≤ n`; false means the vector cannot come from the model,
    /// and the `t/2` step is then only checked numerically, not guaranteed.
    pub in_model: bool,
    pub x_total: u64,
    /// `X_D = Σ_{i: Y_i ≤ ⌊D⌋} C(Y_i, r)`.
    pub x_d: u64,
    /// `Σ_j N_{D_j}·C(⌊D_{j+1}⌋, r)` over the dyadic windows.
    pub window_sum_binomial: u128,
    /// `2·Σ_j N_{D_j}·D_j^r`.
    pub window_sum_power: f64,
    pub t_half: f64,
    pub window_count: u32,
    pub levels: Vec<IidCertLevel>,
}

/// Certifies the per-level thresholds on a sample vector and, when they
/// hold, asserts the deterministic chain
/// `X ≤ X_D + Σ_j N_{D_j}·C(⌊D_{j+1}⌋, r) ≤ X_D + 2·Σ_j N_{D_j}·D_j^r
/// ≤ X_D + t/2`. A violated link on a certified vector is a hard error.
pub fn iid_peel_and_sandwich(
    samples: &[u64],
    r: u64,
    d: f64,
    t: f64,
    beta: f64,
) -> Result<IidSandwichReport> {
    if r < 1 || d <= 0.0 || t <= 0.0 || !(0.0 < beta && beta <= 1.0 / 32.0) {
        return Err(Error::InvalidParameter(format!(
            "iid sandwich params: r={r}, D={d}, t={t}, beta={beta}"
        )));
    }
    let n = samples.len() as u64;
    let y_max = samples.iter().copied().max().unwrap_or(0);
    let m = deviation_scale(t, n, r);
    let x_total: u128 = samples.iter().map(|&y| binomial(y, r)).sum();
    let x_total = u64::try_from(x_total).expect("total fits u64");
    let x_d: u128 = samples
        .iter()
        .filter(|&&y| (y as f64) <= d.floor())
        .map(|&y| binomial(y, r))
        .sum();
    let x_d = u64::try_from(x_d).expect("capped total fits u64");

    // smallest J with ⌊D_J⌋ ≥ max Y_i: the windows 0..J cover every
    // excluded summand
    let mut window_count = 0u32;
    while (2f64.powi(window_count as i32) * d).floor() < y_max as f64 && window_count < 200 {
        window_count += 1;
    }

    let mut levels = Vec::new();
    let mut certified = true;
    for j in 0..=window_count {
        let d_j = 2f64.powi(j as i32) * d;
        let arm = ceil_guarded(d_j).max(1);
        let count = samples.iter().filter(|&&y| y >= arm).count() as u64;
        let threshold = beta * m / d_j;
        let holds = (count as f64) < threshold;
        certified &= holds;
        levels.push(IidCertLevel {
            j,
            d_j,
            arm,
            count,
            threshold,
            holds,
        });
    }

    let mut window_sum_binomial: u128 = 0;
    let mut window_sum_power = 0.0f64;
    for level in levels.iter().take(window_count as usize) {
        let cap_next = (2.0 * level.d_j).floor() as u64;
        window_sum_binomial =
            window_sum_binomial.saturating_add(level.count as u128 * binomial(cap_next, r));
        window_sum_power += 2.0 * level.count as f64 * level.d_j.powi(r as i32);
    }

    let t_half = t / 2.0;
    let report = IidSandwichReport {
        certified,
        in_model: y_max <= n,
        x_total,
        x_d,
        window_sum_binomial,
        window_sum_power,
        t_half,
        window_count,
        levels,
    };
    if certified {
        if (x_total - x_d) as u128 > report.window_sum_binomial {
            return Err(Error::InequalityViolated(format!(
                "X - X_D = {} exceeds the window sum {}",
                x_total - x_d,
                report.window_sum_binomial
            )));
        }
        if report.window_sum_binomial as f64 > report.window_sum_power {
            return Err(Error::InequalityViolated(format!(
                "binomial window sum {} exceeds the power bound {}",
                report.window_sum_binomial, report.window_sum_power
            )));
        }
        if report.window_sum_power > t_half {
            return Err(Error::InequalityViolated(format!(
                "power bound {} exceeds t/2 = {t_half}",
                report.window_sum_power
            )));
        }
    }
    Ok(report)
}

/// Both tail pipelines evaluated with the iid model's exact moments.
#[derive(Debug, Serialize)]
pub struct IidBoundTransfer {
    pub mu: f64,
    pub sigma2: f64,
    /// Constant-ε pipeline at ε = t/μ (absent when μ = 0).
    pub const_eps: Option<BoundReport>,
    /// General pipeline at deviation t with γ = 1/(16r).
    pub general: BoundReport,
}

pub fn iid_bound_transfer(
    model: &IidSumModel,
    t: f64,
    consts: &Constants,
) -> Result<IidBoundTransfer> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let tail = model.tail_model();
    let const_eps = if tail.mu > 0.0 {
        Some(pipeline_const_eps_with(&tail, t / tail.mu, consts)?)
    } else {
        None
    };
    let general = pipeline_general_with(&tail, t, 1.0 / (16.0 * model.r as f64), consts)?;
    Ok(IidBoundTransfer {
        mu: tail.mu,
        sigma2: tail.sigma2,
        const_eps,
        general,
    })
}
