//! Closed-form moments, the Chernoff rate function, and every tail-bound
//! exponent and probability pipeline, evaluated with literal constants.
//!
//! All pipelines work in log-space (sweeps reach tails far below e^-700)
//! and report both clamped and unclamped totals. Quantities the underlying
//! statements leave unspecified (n₀, d, b, α, …) are configuration fields
//! defaulting to 1 and are surfaced in every report rather than silently
//! assumed.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::combin::{binomial, binomial_f64};
use crate::{Error, Result};

/// Configuration for constants that are only known to exist, not valued.
/// Every report that uses one echoes it back.
#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    pub c: f64,
    pub d: f64,
    pub b: f64,
    pub n0: f64,
    pub alpha: f64,
    /// Range constant of the edge-deviation lower bound (t ≤ β·μ).
    pub beta: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: 1.0,
            d: 1.0,
            b: 1.0,
            n0: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// The moment data a tail pipeline needs. `gnp` fills it from the random
/// graph model; the iid-sum module substitutes its own exact moments.
#[derive(Clone, Debug)]
pub struct TailModel {
    pub n: u64,
    pub p: f64,
    pub r: u64,
    pub mu: f64,
    pub sigma2: f64,
    /// Variance proxy μ(1 + (np)^{r-1}).
    pub lambda: f64,
    /// Largest possible count (the p = 1 value).
    pub count_max: f64,
}

impl TailModel {
    pub fn gnp(n: u64, p: f64, r: u64) -> Self {
        let mu = star_mean(n, p, r);
        TailModel {
            n,
            p,
            r,
            mu,
            sigma2: star_variance(n, p, r),
            lambda: mu * (1.0 + (n as f64 * p).powi(r as i32 - 1)),
            count_max: n as f64 * binomial_f64(n.saturating_sub(1), r),
        }
    }
}

/// `μ = E X = n·C(n−1, r)·p^r`.
pub fn star_mean(n: u64, p: f64, r: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    n as f64 * binomial_f64(n - 1, r) * p.powi(r as i32)
}

/// Exact-rational `μ` for oracle cross-checks.
pub fn star_mean_exact(n: u64, p: &BigRational, r: u64) -> BigRational {
    if n == 0 {
        return BigRational::from(BigInt::from(0));
    }
    let copies = BigInt::from(n) * BigInt::from(binomial(n - 1, r));
    BigRational::from(copies) * pow_ratio(p, r)
}

fn pow_ratio(q: &BigRational, k: u64) -> BigRational {
    let mut acc = BigRational::from(BigInt::from(1));
    for _ in 0..k {
        acc *= q;
    }
    acc
}

/// Exact `Var X` in closed form, by enumerating ordered pairs of star
/// copies sharing at least one edge:
///
/// * identical copies: `X₁·(p^r − p^{2r})`;
/// * same center, i shared leaves (1 ≤ i < r):
///   `n·C(n−1,r)·C(r,i)·C(n−1−r, r−i)·(p^{2r−i} − p^{2r})`;
/// * distinct centers sharing the center-center edge:
///   `n(n−1)·C(n−2, r−1)²·(p^{2r−1} − p^{2r})`.
pub fn star_variance(n: u64, p: f64, r: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let copies = n as f64 * binomial_f64(n - 1, r);
    let p2r = p.powi(2 * r as i32);
    let mut var = copies * (p.powi(r as i32) - p2r);
    for i in 1..r {
        let pairs = copies * binomial_f64(r, i) * binomial_f64((n - 1).saturating_sub(r), r - i);
        var += pairs * (p.powi((2 * r - i) as i32) - p2r);
    }
    if n >= 2 {
        let cross = n as f64 * (n - 1) as f64 * binomial_f64(n - 2, r - 1).powi(2);
        var += cross * (p.powi(2 * r as i32 - 1) - p2r);
    }
    var
}

/// Exact-rational variance (same pair enumeration).
pub fn star_variance_exact(n: u64, p: &BigRational, r: u64) -> BigRational {
    let zero = BigRational::from(BigInt::from(0));
    if n == 0 {
        return zero;
    }
    let copies = BigRational::from(BigInt::from(n) * BigInt::from(binomial(n - 1, r)));
    let p2r = pow_ratio(p, 2 * r);
    let mut var = &copies * (pow_ratio(p, r) - &p2r);
    for i in 1..r {
        let pairs = &copies
            * BigRational::from(
                BigInt::from(binomial(r, i))
                    * BigInt::from(binomial((n - 1).saturating_sub(r), r - i)),
            );
        var += pairs * (pow_ratio(p, 2 * r - i) - &p2r);
    }
    if n >= 2 {
        let c = BigInt::from(binomial(n - 2, r - 1));
        let cross = BigRational::from(BigInt::from(n) * BigInt::from(n - 1) * &c * &c);
        var += cross * (pow_ratio(p, 2 * r - 1) - &p2r);
    }
    var
}

/// Chernoff rate function `φ(x) = (1+x)·ln(1+x) − x` for `x ≥ 0`.
pub fn chernoff_phi(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "phi needs x >= 0, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + x) * (1.0 + x).ln() - x)
}

/// `φ(t/μ)·μ`, extended by its limit `+∞` as μ → 0 (for t > 0).
pub fn phi_times_mu(t: f64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if t > 0.0 { f64::INFINITY } else { 0.0 };
    }
    chernoff_phi(t / mu).expect("t/mu >= 0") * mu
}

/// Deviation scale `M(t) = max{t^{1/r}, t/n^{r−1}}`.
pub fn deviation_scale(t: f64, n: u64, r: u64) -> f64 {
    debug_assert!(r >= 1);
    let root = t.powf(1.0 / r as f64);
    let ratio = t / (n as f64).powi(r as i32 - 1);
    root.max(ratio)
}

/// `Φ = min{μ, max{μ^{1/r}, μ/n^{r−1}}·ln(1/p)}` — the constant-ε exponent.
pub fn exponent_const_eps(n: u64, p: f64, r: u64) -> f64 {
    let mu = star_mean(n, p, r);
    let m = deviation_scale(mu, n, r);
    mu.min(m * (1.0 / p).ln())
}

/// `Φ(ε) = min{φ(ε)·μ²/σ², M(εμ)·ln(e/p)}` — the ε-dependent exponent.
pub fn exponent_eps(n: u64, p: f64, r: u64, eps: f64) -> Result<f64> {
    exponent_eps_with(&TailModel::gnp(n, p, r), eps)
}

pub fn exponent_eps_with(model: &TailModel, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    if model.sigma2 <= 0.0 {
        return Err(Error::InvalidParameter("sigma^2 = 0".into()));
    }
    let normal = chernoff_phi(eps)? * model.mu * model.mu / model.sigma2;
    let clustered =
        deviation_scale(eps * model.mu, model.n, model.r) * (std::f64::consts::E / model.p).ln();
    Ok(normal.min(clustered))
}

/// `Ψ(t) = min{t²/σ², M(t)·ln(e/p)}` — the absolute-deviation exponent.
pub fn exponent_psi(n: u64, p: f64, r: u64, t: f64) -> Result<f64> {
    exponent_psi_with(&TailModel::gnp(n, p, r), t)
}

pub fn exponent_psi_with(model: &TailModel, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    if model.sigma2 <= 0.0 {
        return Err(Error::InvalidParameter("sigma^2 = 0".into()));
    }
    let normal = t * t / model.sigma2;
    let clustered = deviation_scale(t, model.n, model.r) * (std::f64::consts::E / model.p).ln();
    Ok(normal.min(clustered))
}

/// The overlap-capped tail inequality: `Pr(Z_C ≥ μ+t) ≤ exp(−φ(t/μ)μ/C)
/// ≤ exp(−t²/(2C(μ+t)))`. Returns both right-hand sides (tight, weak).
pub fn zc_tail_bound(mu: f64, c: f64, t: f64) -> (f64, f64) {
    assert!(mu > 0.0 && c > 0.0 && t >= 0.0);
    let tight = (-phi_times_mu(t, mu) / c).exp();
    let weak = (-(t * t) / (2.0 * c * (mu + t))).exp();
    (tight, weak)
}

/// Degree-capped star-count tail: `Pr(X_D ≥ μ + t/2) ≤ exp(−φ(t/μ)μ/(16·D^{r−1}))
/// ≤ exp(−min{t²/μ, t}/(48·D^{r−1}))`.
pub fn bounded_star_tail_bound(mu: f64, d: f64, r: u64, t: f64) -> (f64, f64) {
    assert!(mu > 0.0 && d > 0.0 && t >= 0.0);
    let dpow = d.powi(r as i32 - 1);
    let tight = (-phi_times_mu(t, mu) / (16.0 * dpow)).exp();
    let weak = (-(t * t / mu).min(t) / (48.0 * dpow)).exp();
    (tight, weak)
}

/// Outcome of the packing tail estimate for `N_{D_j}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PackingTailBound {
    /// The validity gate `(e³np/D)^D ≤ n⁻⁸` failed; no bound is asserted.
    GateFailed { gate_log: f64 },
    /// `D_j > n`: the packing count is deterministically zero.
    ZeroBeyondN,
    /// `n⁻³·(np/(e·⌈D_j⌉))^{x·D_j/2}` in log-space and clamped form.
    Bound { log_value: f64, value: f64 },
}

/// Tail estimate `Pr(N_{D_j} ≥ x)` for the dyadic cap `D_j = 2^j·D`,
/// guarded by the gate `(e³np/D)^D ≤ n⁻⁸`.
pub fn packing_tail_bound(n: u64, p: f64, d: f64, j: u32, x: f64) -> Result<PackingTailBound> {
    if n < 1 || !(0.0 < p && p <= 1.0) || d <= 0.0 || x <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "packing_tail_bound(n={n}, p={p}, d={d}, x={x})"
        )));
    }
    let nf = n as f64;
    let gate_log = d * (3.0 + (nf * p / d).ln());
    if gate_log > -8.0 * nf.ln() {
        return Ok(PackingTailBound::GateFailed { gate_log });
    }
    let d_j = 2f64.powi(j as i32) * d;
    if d_j > nf {
        return Ok(PackingTailBound::ZeroBeyondN);
    }
    let ceil_dj = crate::combin::ceil_guarded(d_j) as f64;
    let log_value =
        -3.0 * nf.ln() + (x * d_j / 2.0) * (nf * p / (std::f64::consts::E * ceil_dj)).ln();
    Ok(PackingTailBound::Bound {
        log_value,
        value: log_value.exp(),
    })
}

/// One named scalar of a [`BoundReport`].
#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    pub name: String,
    /// None when the quantity is not finite.
    pub value: Option<f64>,
    /// Natural log where meaningful (tail terms), else None.
    pub log_value: Option<f64>,
    /// The defining expression, for auditability.
    pub formula: String,
}

/// Auditable record of a full bound evaluation: every named scalar, the
/// assumption flags, and the final probability (clamped and raw).
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub pipeline: String,
    pub entries: Vec<ReportEntry>,
    pub flags: Vec<String>,
    pub regime_case: Option<String>,
    pub constants: Constants,
    /// Final probability bound clamped to [0, 1].
    pub total: f64,
    /// The raw sum of terms (may exceed 1 in uninteresting regimes).
    pub total_unclamped: Option<f64>,
    /// log of the unclamped total.
    pub log_total: Option<f64>,
}

impl BoundReport {
    fn new(pipeline: &str, constants: &Constants) -> Self {
        BoundReport {
            pipeline: pipeline.into(),
            entries: Vec::new(),
            flags: Vec::new(),
            regime_case: None,
            constants: constants.clone(),
            total: 1.0,
            total_unclamped: None,
            log_total: None,
        }
    }

    fn push(&mut self, name: &str, value: f64, formula: &str) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value: value.is_finite().then_some(value),
            log_value: None,
            formula: formula.into(),
        });
    }

    fn push_prob(&mut self, name: &str, log_value: f64, formula: &str) {
        let value = log_value.exp();
        self.entries.push(ReportEntry {
            name: name.into(),
            value: value.is_finite().then_some(value),
            log_value: log_value.is_finite().then_some(log_value),
            formula: formula.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.value)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization")
    }

    fn finish(&mut self, term_logs: &[f64]) {
        let log_total = log_sum_exp(term_logs);
        self.log_total = log_total.is_finite().then_some(log_total);
        let raw = log_total.exp();
        self.total_unclamped = raw.is_finite().then_some(raw);
        self.total = raw.clamp(0.0, 1.0);
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + logs.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
}

/// Number of dyadic levels: smallest `J ≥ 0` with `2^J·D ≥ min{M, n}`.
pub fn dyadic_level_count(d: f64, m: f64, n: u64) -> u32 {
    let m_bar = m.min(n as f64);
    let mut j = 0u32;
    let mut dj = d;
    while dj < m_bar && j < 200 {
        dj *= 2.0;
        j += 1;
    }
    j
}

/// Constant-ε upper-tail pipeline with its literal constants
/// (β = 1/32, γ = 1/(16r), A = max{e⁴, 8/γ}).
///
/// Emits the two-term bound
/// `exp(−min{ε,ε²}·μ/(48·D^{r−1})) + n⁻²·exp(−β·M·s/2)`
/// plus the Markov fallback `exp(−ε/(1+ε))`.
pub fn pipeline_const_eps(
    n: u64,
    p: f64,
    r: u64,
    eps: f64,
    consts: &Constants,
) -> Result<BoundReport> {
    pipeline_const_eps_with(&TailModel::gnp(n, p, r), eps, consts)
}

pub fn pipeline_const_eps_with(
    model: &TailModel,
    eps: f64,
    consts: &Constants,
) -> Result<BoundReport> {
    let (n, p, r) = (model.n, model.p, model.r);
    if r < 2 {
        return Err(Error::InvalidParameter("pipeline needs r >= 2".into()));
    }
    if !(0.0 < p && p <= 1.0) || eps <= 0.0 || n < 1 {
        return Err(Error::InvalidParameter(format!(
            "pipeline_const_eps(n={n}, p={p}, eps={eps})"
        )));
    }
    let mut rep = BoundReport::new("const_eps", consts);
    let nf = n as f64;
    let mu = model.mu;
    let beta = 1.0 / 32.0;
    let gamma = 1.0 / (16.0 * r as f64);
    let a = (8.0 / gamma).max(std::f64::consts::E.powi(4));
    let s = 1.0 + gamma * (1.0 / p).ln();
    let d = a * (1f64).max(mu.powf(1.0 / r as f64).min(nf) / s.powf(1.0 / (r as f64 - 1.0)));
    let t = eps * mu;
    let m = deviation_scale(t, n, r);
    let m_bar = m.min(nf);
    let j_levels = dyadic_level_count(d, m, n);

    rep.push("mu", mu, "n*C(n-1,r)*p^r");
    rep.push("sigma2", model.sigma2, "Var X (closed form)");
    rep.push("lambda", model.lambda, "mu*(1+(n*p)^(r-1))");
    rep.push("eps", eps, "relative deviation");
    rep.push("t", t, "eps*mu");
    rep.push("beta", beta, "1/32");
    rep.push("gamma", gamma, "1/(16r)");
    rep.push("A", a, "max{e^4, 8/gamma}");
    rep.push("s", s, "log(e/p^gamma)");
    rep.push("D", d, "A*max{1, min{mu^(1/r), n}/s^(1/(r-1))}");
    rep.push("C", 4.0 * d.powi(r as i32 - 1), "4*D^(r-1)");
    rep.push("M", m, "max{t^(1/r), t/n^(r-1)}");
    rep.push("M_bar", m_bar, "min{M, n}");
    rep.push("J", j_levels as f64, "smallest J with 2^J*D >= min{M, n}");
    if mu > 0.0 {
        rep.push("phi_t_over_mu", phi_times_mu(t, mu) / mu, "phi(t/mu)");
    }
    rep.push(
        "Phi",
        exponent_const_eps(n, p, r),
        "min{mu, max{mu^(1/r), mu/n^(r-1)}*log(1/p)}",
    );
    if model.sigma2 > 0.0 {
        rep.push(
            "Phi_eps",
            exponent_eps_with(model, eps)?,
            "min{phi(eps)*mu^2/sigma^2, M(eps*mu)*log(e/p)}",
        );
        rep.push(
            "Psi_t",
            exponent_psi_with(model, t.max(f64::MIN_POSITIVE))?,
            "min{t^2/sigma^2, M(t)*log(e/p)}",
        );
    } else {
        rep.flags
            .push("sigma2 = 0: Phi_eps and Psi_t undefined".into());
    }
    let zeta = eps.min(eps * eps).min(eps.powf(1.0 / r as f64));
    let pi = mu.min(deviation_scale(mu, n, r) * s);
    rep.push("zeta", zeta, "min{eps, eps^2, eps^(1/r)}");
    rep.push("Pi", pi, "min{mu, max{mu^(1/r), mu/n^(r-1)}*s}");

    let term1_log = -(eps.min(eps * eps)) * mu / (48.0 * d.powi(r as i32 - 1));
    let term2_log = -2.0 * nf.ln() - beta * m * s / 2.0;
    let markov_log = -eps / (1.0 + eps);
    rep.push_prob(
        "term_capped_count",
        term1_log,
        "exp(-min{eps,eps^2}*mu/(48*D^(r-1)))",
    );
    rep.push_prob("term_packing_event", term2_log, "n^-2*exp(-beta*M*s/2)");
    rep.push_prob("markov_fallback", markov_log, "exp(-eps/(1+eps))");

    let gate_log = d * (3.0 + (nf * p / d).ln());
    if gate_log > -8.0 * nf.ln() {
        rep.flags
            .push("packing-tail gate (e^3*n*p/D)^D <= n^-8 fails at these parameters".into());
    }
    if (1.0 + eps) * mu < 1.0 {
        rep.flags
            .push("(1+eps)*mu < 1: tail is not exponentially small".into());
    }
    if (1.0 + eps) * mu > model.count_max {
        rep.flags
            .push("(1+eps)*mu exceeds the maximum possible count".into());
    }
    if nf < consts.n0 {
        rep.flags.push(format!("n < configured n0 = {}", consts.n0));
    }
    if mu == 0.0 {
        rep.flags.push("mu = 0".into());
    }

    rep.finish(&[term1_log, term2_log]);
    Ok(rep)
}

/// General-deviation pipeline with β = 1/64 and
/// `A = max{e⁴, 8·(3/γ)^{1/(r−1)}, 8/γ}`; labels which regime case
/// applies: (i) np ≥ γ·log n, (ii) np ≤ n^−γ, (iii) the t²/μ condition.
pub fn pipeline_general(
    n: u64,
    p: f64,
    r: u64,
    t: f64,
    gamma: f64,
    consts: &Constants,
) -> Result<BoundReport> {
    pipeline_general_with(&TailModel::gnp(n, p, r), t, gamma, consts)
}

pub fn pipeline_general_with(
    model: &TailModel,
    t: f64,
    gamma: f64,
    consts: &Constants,
) -> Result<BoundReport> {
    let (n, p, r) = (model.n, model.p, model.r);
    if r < 2 {
        return Err(Error::InvalidParameter("pipeline needs r >= 2".into()));
    }
    if !(0.0 < p && p <= 1.0) || t <= 0.0 || n < 1 {
        return Err(Error::InvalidParameter(format!(
            "pipeline_general(n={n}, p={p}, t={t})"
        )));
    }
    if !(0.0 < gamma && gamma <= 1.0 / (16.0 * r as f64)) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1/(16r)], got {gamma}"
        )));
    }
    let mut rep = BoundReport::new("general", consts);
    let nf = n as f64;
    let mu = model.mu;
    if mu <= 0.0 {
        rep.flags
            .push("mu = 0: the count is identically zero".into());
        rep.total = 0.0;
        rep.total_unclamped = Some(0.0);
        return Ok(rep);
    }
    let beta = 1.0 / 64.0;
    let rm1 = r as f64 - 1.0;
    let a = (std::f64::consts::E.powi(4))
        .max(8.0 * (3.0 / gamma).powf(1.0 / rm1))
        .max(8.0 / gamma);
    let s = 1.0 + gamma * (1.0 / p).ln();
    let m = deviation_scale(t, n, r);
    let phimu = phi_times_mu(t, mu);
    let d = a * (1.0 + nf * p).max((phimu / (m * s)).powf(1.0 / rm1));
    let lambda = model.lambda;
    let psi = phimu * mu / lambda;

    rep.push("mu", mu, "E X");
    rep.push("sigma2", model.sigma2, "Var X");
    rep.push("lambda", lambda, "mu*(1+(n*p)^(r-1))");
    rep.push("t", t, "absolute deviation");
    rep.push("beta", beta, "1/64");
    rep.push("gamma", gamma, "log-tilt exponent");
    rep.push("A", a, "max{e^4, 8*(3/gamma)^(1/(r-1)), 8/gamma}");
    rep.push("s", s, "log(e/p^gamma)");
    rep.push("M", m, "max{t^(1/r), t/n^(r-1)}");
    rep.push("M_bar", m.min(nf), "min{M, n}");
    rep.push("phi_mu", phimu, "phi(t/mu)*mu");
    rep.push("D", d, "A*max{1+n*p, (phi(t/mu)*mu/(M*s))^(1/(r-1))}");
    rep.push("C", 4.0 * d.powi(r as i32 - 1), "4*D^(r-1)");
    rep.push(
        "J",
        dyadic_level_count(d, m, n) as f64,
        "smallest J with 2^J*D >= min{M, n}",
    );
    rep.push("Psi", psi, "phi(t/mu)*mu^2/lambda");
    rep.push("Ms", m * s, "M*s");
    if model.sigma2 > 0.0 {
        rep.push(
            "Psi_t",
            exponent_psi_with(model, t)?,
            "min{t^2/sigma^2, M(t)*log(e/p)}",
        );
    }

    // regime cases
    let case_i = nf * p >= gamma * nf.ln();
    let case_ii = nf * p <= nf.powf(-gamma);
    let indicator = if t <= mu.min(nf.powi(r as i32)) {
        1.0
    } else {
        0.0
    };
    let case_iii = t * t / mu
        >= indicator
            * gamma
            * (t.powf(1.0 / r as f64) * nf.ln().powi(r as i32))
                .min(m * s * nf.ln().powi(r as i32 - 1));
    rep.regime_case = Some(
        if case_i {
            "i: np >= gamma*log n"
        } else if case_ii {
            "ii: np <= n^-gamma"
        } else if case_iii {
            "iii: t^2/mu condition"
        } else {
            "none: parameters not covered"
        }
        .to_string(),
    );
    if !(case_i || case_ii || case_iii) {
        rep.flags
            .push("no regime case applies; bound not asserted by theory".into());
    }

    let term1_log = -phimu / (16.0 * d.powi(r as i32 - 1));
    let term2_log = -nf.ln() - (beta / 2.0) * psi.min(m * s);
    rep.push_prob(
        "term_capped_count",
        term1_log,
        "exp(-phi(t/mu)*mu/(16*D^(r-1)))",
    );
    rep.push_prob(
        "term_packing_event",
        term2_log,
        "n^-1*exp(-(beta/2)*min{Psi, M*s})",
    );

    let gate_log = d * (3.0 + (nf * p / d).ln());
    if gate_log > -8.0 * nf.ln() {
        rep.flags
            .push("packing-tail gate (e^3*n*p/D)^D <= n^-8 fails at these parameters".into());
    }
    if mu + t > model.count_max {
        rep.flags
            .push("mu + t exceeds the maximum possible count".into());
    }
    if nf < consts.n0 {
        rep.flags.push(format!("n < configured n0 = {}", consts.n0));
    }

    rep.finish(&[term1_log, term2_log]);
    Ok(rep)
}

/// Comparison data for the regime simplifications: which of the three
/// reduction claims applies and the four quantities they relate.
#[derive(Clone, Debug, Serialize)]
pub struct RegimeComparison {
    pub t2_over_sigma2: f64,
    pub phi_mu2_over_sigma2: f64,
    pub phi_mu2_over_lambda: f64,
    pub m_log_e_over_p: f64,
    /// t ≤ μ: the two φ-based quantities and t²/σ² agree up to constants.
    pub small_deviation: bool,
    /// t ≥ μ with t^{1−1/r} ≥ (log n)·1{p<1/n} and p ≥ n⁻⁹.
    pub large_deviation: bool,
    /// t²/σ² ≥ min{M, 1} and μ+t ≥ 1 force t = Ω(1).
    pub t_bounded_below: bool,
    /// p ≤ 1 − ξ.
    pub p_in_range: bool,
}

pub fn regime_simplify(n: u64, p: f64, r: u64, t: f64, xi: f64) -> Result<RegimeComparison> {
    if t <= 0.0 || !(0.0 < xi && xi < 1.0) || !(0.0 < p && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "regime_simplify(p={p}, t={t}, xi={xi})"
        )));
    }
    let model = TailModel::gnp(n, p, r);
    let (mu, sigma2, lambda) = (model.mu, model.sigma2, model.lambda);
    let nf = n as f64;
    let m = deviation_scale(t, n, r);
    let phimu = phi_times_mu(t, mu);
    Ok(RegimeComparison {
        t2_over_sigma2: t * t / sigma2,
        phi_mu2_over_sigma2: phimu * mu / sigma2,
        phi_mu2_over_lambda: phimu * mu / lambda,
        m_log_e_over_p: m * (std::f64::consts::E / p).ln(),
        small_deviation: t <= mu,
        large_deviation: t >= mu
            && t.powf(1.0 - 1.0 / r as f64) >= if p < 1.0 / nf { nf.ln() } else { 0.0 }
            && p >= nf.powi(-9),
        t_bounded_below: t * t / sigma2 >= m.min(1.0) && mu + t >= 1.0,
        p_in_range: p <= 1.0 - xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{exact_star_distribution, exact_variance_bruteforce};
    use crate::prob::EdgeProb;

    #[test]
    fn star_mean_examples() {
        assert_eq!(star_mean(4, 0.5, 2), 3.0);
        assert_eq!(star_mean(3, 1.0, 2), 3.0);
        assert_eq!(star_mean(2, 0.7, 2), 0.0);
        // oracle cross-check
        let d = exact_star_distribution(4, &EdgeProb::from_fraction(1, 2).unwrap(), 2).unwrap();
        assert_eq!(d.mean().to_f64(), star_mean(4, 0.5, 2));
    }

    #[test]
    fn star_variance_matches_bruteforce() {
        assert_eq!(star_variance(3, 0.5, 2), 0.9375);
        assert_eq!(star_variance(5, 0.0, 2), 0.0);
        for n in 2..=5u64 {
            for r in [2u64, 3] {
                for k in 1..=9u64 {
                    let p = EdgeProb::from_fraction(k, 10).unwrap();
                    let brute = exact_variance_bruteforce(n as usize, &p, r).unwrap();
                    let closed = star_variance(n, k as f64 / 10.0, r);
                    assert!(
                        (brute.to_f64() - closed).abs() <= 1e-12,
                        "n={n} r={r} p={k}/10: {} vs {closed}",
                        brute.to_f64()
                    );
                    let exact_closed = star_variance_exact(n, p.exact().unwrap(), r);
                    assert_eq!(brute.exact().unwrap(), &exact_closed);
                }
            }
        }
    }

    #[test]
    fn phi_values_and_domain() {
        assert_eq!(chernoff_phi(0.0).unwrap(), 0.0);
        assert!((chernoff_phi(1.0).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((chernoff_phi(2.0).unwrap() - (3.0 * 3f64.ln() - 2.0)).abs() < 1e-15);
        assert!(chernoff_phi(-0.5).is_err());
    }

    #[test]
    fn phi_grid_inequalities() {
        // phi(x/2) >= phi(x)/4; x^2 >= phi(x) >= min{x, x^2}/3;
        // phi(x) >= x*ln(x)/2 for x >= e^2
        for i in 0..=10_000u64 {
            let x = i as f64 * 0.1;
            let phi = chernoff_phi(x).unwrap();
            let half = chernoff_phi(x / 2.0).unwrap();
            assert!(half >= phi / 4.0 - 1e-12, "x={x}");
            assert!(x * x >= phi - 1e-12, "x={x}");
            assert!(phi >= (x.min(x * x)) / 3.0 - 1e-12, "x={x}");
            if x >= std::f64::consts::E.powi(2) {
                assert!(phi >= x * x.ln() / 2.0, "x={x}");
            }
        }
    }

    #[test]
    fn deviation_scale_examples() {
        assert_eq!(deviation_scale(16.0, 10, 2), 4.0);
        assert_eq!(deviation_scale(16.0, 2, 2), 8.0);
        assert_eq!(deviation_scale(1.0, 7, 3), 1.0);
    }

    #[test]
    fn exponent_const_eps_examples() {
        assert_eq!(exponent_const_eps(5, 1.0, 2), 0.0);
        assert_eq!(exponent_const_eps(2, 0.5, 2), 0.0); // mu = 0
        let phi = exponent_const_eps(4, 0.5, 2);
        let expected = (3f64).sqrt() * 2f64.ln(); // min{3, sqrt(3)*ln 2}
        assert!((phi - expected).abs() < 1e-12, "{phi} vs {expected}");
    }

    #[test]
    fn exponent_eps_small_eps_is_gaussian() {
        // phi(eps) ~ eps^2/2, so Phi(eps) -> eps^2*mu^2/(2 sigma^2)
        let n = 4;
        let (p, r, eps) = (0.5, 2, 1e-6);
        let mu = star_mean(n, p, r);
        let sigma2 = star_variance(n, p, r);
        let phi = exponent_eps(n, p, r, eps).unwrap();
        let gaussian = eps * eps / 2.0 * mu * mu / sigma2;
        assert!((phi / gaussian - 1.0).abs() < 1e-3, "{phi} vs {gaussian}");
    }

    #[test]
    fn exponent_eps_p1_second_term_is_m() {
        // log(e/1) = 1, so the clustered term equals M(eps*mu)
        let n = 4;
        let model = TailModel::gnp(n, 1.0, 2);
        assert_eq!(model.sigma2, 0.0); // p = 1 is deterministic
        assert!(exponent_eps(n, 1.0, 2, 1.0).is_err());
        // synthetic sigma2 isolates the clustered term
        let model = TailModel {
            sigma2: 1e-30,
            ..model
        };
        let phi = exponent_eps_with(&model, 1.0).unwrap();
        let m = deviation_scale(model.mu, n, 2);
        assert_eq!(phi, m); // normal term is huge, min picks M * 1
    }

    #[test]
    fn exponent_eps_composite_example() {
        // n=4, p=1/2, r=2, eps=1: min{phi(1)*9/sigma^2, sqrt(3)*(1+ln 2)}
        let sigma2 = star_variance(4, 0.5, 2);
        let phi1 = 2.0 * 2f64.ln() - 1.0;
        let expected = (phi1 * 9.0 / sigma2).min(3f64.sqrt() * (1.0 + 2f64.ln()));
        assert!((exponent_eps(4, 0.5, 2, 1.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn exponent_psi_examples() {
        let psi = exponent_psi(3, 0.5, 2, 1.0).unwrap();
        assert!((psi - 16.0 / 15.0).abs() < 1e-12);
        // t = sigma forces first term 1 when it is the smaller one
        let sigma = star_variance(4, 0.5, 2).sqrt();
        let psi = exponent_psi(4, 0.5, 2, sigma).unwrap();
        let second = deviation_scale(sigma, 4, 2) * (std::f64::consts::E / 0.5).ln();
        assert!((psi - 1.0f64.min(second)).abs() < 1e-12);
        // huge t: the clustered term takes over exactly when it is smaller
        let (n, p, r, t) = (4u64, 0.5f64, 2u64, 1e9f64);
        let sigma2 = star_variance(n, p, r);
        let clustered = deviation_scale(t, n, r) * (std::f64::consts::E / p).ln();
        assert!(clustered < t * t / sigma2);
        assert_eq!(exponent_psi(n, p, r, t).unwrap(), clustered);
    }

    #[test]
    fn zc_tail_bound_values() {
        let (tight, weak) = zc_tail_bound(1.0, 1.0, 1.0);
        assert!((tight - (-(2.0 * 2f64.ln() - 1.0)).exp()).abs() < 1e-12);
        assert!((weak - (-0.25f64).exp()).abs() < 1e-12);
        assert!(tight <= weak);
        let (t2, w2) = zc_tail_bound(1.0, 2.0, 1.0);
        assert!((t2 - (-(2.0 * 2f64.ln() - 1.0) / 2.0).exp()).abs() < 1e-12);
        assert!((w2 - (-0.125f64).exp()).abs() < 1e-12);
        // t -> 0 sends both to 1
        let (t0, w0) = zc_tail_bound(1.0, 1.0, 1e-300);
        assert!((t0 - 1.0).abs() < 1e-9 && (w0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zc_tail_bound_chain_holds_broadly() {
        for mu in [0.1, 1.0, 3.0, 50.0] {
            for c in [1.0, 2.0, 7.5] {
                for t in [0.01, 0.5, 1.0, 10.0, 1e4] {
                    let (tight, weak) = zc_tail_bound(mu, c, t);
                    assert!(tight <= weak * (1.0 + 1e-14), "mu={mu} c={c} t={t}");
                }
            }
        }
    }

    #[test]
    fn bounded_star_tail_values() {
        let (tight, weak) = bounded_star_tail_bound(3.0, 1.0, 2, 3.0);
        let phi1 = 2.0 * 2f64.ln() - 1.0;
        assert!((tight - (-phi1 * 3.0 / 16.0).exp()).abs() < 1e-12);
        assert!((weak - (-3.0f64 / 48.0).exp()).abs() < 1e-12);
        // doubling D with r = 2 halves both exponents
        let (t2, w2) = bounded_star_tail_bound(3.0, 2.0, 2, 3.0);
        assert!((t2.ln() - tight.ln() / 2.0).abs() < 1e-12);
        assert!((w2.ln() - weak.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn packing_tail_bound_gate_and_value() {
        // gate passes: (e^3*0.01/8)^8 ~ 1.6e-13 <= 10^-8
        match packing_tail_bound(10, 0.001, 8.0, 0, 1.0).unwrap() {
            PackingTailBound::Bound { log_value, .. } => {
                let expected = -3.0 * 10f64.ln() + 4.0 * (0.01 / (std::f64::consts::E * 8.0)).ln();
                assert!((log_value - expected).abs() < 1e-12);
            }
            other => panic!("expected bound, got {other:?}"),
        }
        // gate fails at p = 0.9
        assert!(matches!(
            packing_tail_bound(10, 0.9, 8.0, 0, 1.0).unwrap(),
            PackingTailBound::GateFailed { .. }
        ));
        // D_j beyond n is deterministically zero
        assert!(matches!(
            packing_tail_bound(10, 0.001, 8.0, 1, 1.0).unwrap(),
            PackingTailBound::ZeroBeyondN
        ));
    }

    #[test]
    fn pipeline_const_eps_smoke() {
        let rep = pipeline_const_eps(30, 0.1, 2, 1.0, &Constants::default()).unwrap();
        assert!(rep.total <= 1.0 && rep.total >= 0.0);
        assert_eq!(rep.get("beta"), Some(1.0 / 32.0));
        assert_eq!(rep.get("gamma"), Some(1.0 / 32.0));
        assert!(rep.get("mu").unwrap() > 0.0);
        // p = 1: s = 1 and D = A*max{1, min{mu^{1/r}, n}}
        let rep1 = pipeline_const_eps(30, 1.0, 2, 1.0, &Constants::default()).unwrap();
        assert_eq!(rep1.get("s"), Some(1.0));
        let a = rep1.get("A").unwrap();
        let mu = rep1.get("mu").unwrap();
        assert_eq!(rep1.get("D"), Some(a * mu.sqrt().clamp(1.0, 30.0)));
        // huge eps still clamps to [0, 1]
        let big = pipeline_const_eps(10, 0.5, 2, 1e9, &Constants::default()).unwrap();
        assert!(big.total <= 1.0);
    }

    #[test]
    fn pipeline_total_is_sum_of_its_terms() {
        let rep = pipeline_const_eps(30, 0.1, 2, 1.0, &Constants::default()).unwrap();
        let expected =
            rep.get("term_capped_count").unwrap() + rep.get("term_packing_event").unwrap();
        let total = rep.total_unclamped.unwrap();
        assert!(
            (total - expected).abs() <= 1e-12 * expected.max(1.0),
            "{total} vs {expected}"
        );
        let rep = pipeline_general(100, 0.3, 2, 200.0, 1.0 / 32.0, &Constants::default()).unwrap();
        let expected =
            rep.get("term_capped_count").unwrap() + rep.get("term_packing_event").unwrap();
        let total = rep.total_unclamped.unwrap();
        assert!(
            (total - expected).abs() <= 1e-12 * expected.max(1.0),
            "{total} vs {expected}"
        );
    }

    #[test]
    fn pipeline_general_regimes() {
        let c = Constants::default();
        let rep = pipeline_general(100, 0.5, 2, 10.0, 1.0 / 32.0, &c).unwrap();
        assert!(rep.regime_case.as_deref().unwrap().starts_with("i:"));
        let rep = pipeline_general(100, 1e-4, 2, 10.0, 1.0 / 32.0, &c).unwrap();
        assert!(rep.regime_case.as_deref().unwrap().starts_with("ii:"));
        // p = 1, t = mu: s = 1 and Psi = phi(1)*mu^2/Lambda
        let mu = star_mean(50, 1.0, 2);
        let rep = pipeline_general(50, 1.0, 2, mu, 1.0 / 32.0, &c).unwrap();
        assert_eq!(rep.get("s"), Some(1.0));
        let lambda = rep.get("lambda").unwrap();
        let psi = rep.get("Psi").unwrap();
        let phi1 = 2.0 * 2f64.ln() - 1.0;
        assert!((psi - phi1 * mu * mu / lambda).abs() / psi < 1e-12);
    }

    #[test]
    fn pipeline_rejects_bad_gamma() {
        assert!(pipeline_general(100, 0.5, 2, 10.0, 0.5, &Constants::default()).is_err());
        assert!(pipeline_general(100, 0.5, 2, 10.0, 0.0, &Constants::default()).is_err());
    }

    #[test]
    fn regime_simplify_flags() {
        // t = mu: phi(1)*mu^2/sigma^2
        let n = 20;
        let (p, r) = (0.3, 2);
        let mu = star_mean(n, p, r);
        let sigma2 = star_variance(n, p, r);
        let cmp = regime_simplify(n, p, r, mu, 0.1).unwrap();
        let phi1 = 2.0 * 2f64.ln() - 1.0;
        assert!((cmp.phi_mu2_over_sigma2 - phi1 * mu * mu / sigma2).abs() < 1e-9);
        assert!(cmp.small_deviation);
        assert!(cmp.p_in_range);
        // t <= mu: phi-based quantity brackets t^2/sigma^2 per the
        // elementary phi inequalities
        for t in [mu / 10.0, mu / 2.0, mu] {
            let c = regime_simplify(n, p, r, t, 0.1).unwrap();
            assert!(c.phi_mu2_over_sigma2 <= c.t2_over_sigma2 + 1e-9);
            let lower = c.t2_over_sigma2 / 3.0 * (mu / t).min(1.0);
            assert!(c.phi_mu2_over_sigma2 >= lower - 1e-9, "t={t}");
        }
    }

    #[test]
    fn variance_theta_window_is_stable() {
        // sigma^2 / ((1-p)*mu*(1+(np)^{r-1})) stays in a fixed window
        for r in [2u64, 3] {
            for n in [5u64, 20, 50, 200] {
                for p in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9] {
                    let mu = star_mean(n, p, r);
                    if mu == 0.0 {
                        continue;
                    }
                    let ratio = star_variance(n, p, r)
                        / ((1.0 - p) * mu * (1.0 + (n as f64 * p).powi(r as i32 - 1)));
                    assert!(
                        (0.01..=100.0).contains(&ratio),
                        "n={n} p={p} r={r}: ratio {ratio}"
                    );
                }
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let rep = pipeline_const_eps(10, 0.5, 2, 1.0, &Constants::default()).unwrap();
        let json = rep.to_json();
        let entries = json["entries"].as_array().unwrap();
        assert!(entries.iter().any(|e| e["name"] == "mu"));
        for e in entries {
            assert!(e.get("value").is_some());
            assert!(e.get("log_value").is_some());
            assert!(e.get("formula").is_some());
        }
    }
}
