//! The iterative degree-reduction chain `G_J ⊇ … ⊇ G_0` and certification
//! of the per-level packing events that make the chain useful.
//!
//! Peeling level j+1 → j extracts a maximal edge-disjoint collection of
//! stars `K_{1,⌈D_j⌉}` and deletes every edge incident to one of its
//! centers. When the certified event holds — `N_{D_j}` below its level
//! threshold for every j — the final graph has maximum degree at most `D`
//! and the total star count moves by at most `t/2`:
//! `X(G_0) ≤ X ≤ X(G_0) + t/2`. That sandwich is deterministic, so any
//! violation on a certified instance is an implementation bug, and
//! [`verify_sandwich`] treats it as a hard error.

use serde::Serialize;

use crate::combin::ceil_guarded;
use crate::graph::{
    greedy_star_packing, packing_upper_bound, remove_center_incident_edges, Graph, StarPacking,
};
use crate::oracles::{exact_bounded_star_count, exact_max_star_packing, MAX_SEARCH_EDGES};
use crate::{Error, Result};

/// Parameters of a peeling run / event certificate.
///
/// `M = max{t^{1/r}, t/n^{r−1}}` and `M̄ = min{M, n}` are derived on
/// demand (never stored), and `D_j = 2^j·D`.
#[derive(Clone, Debug, Serialize)]
pub struct PeelingParams {
    pub r: u64,
    /// Base degree cap D > 0.
    pub d: f64,
    /// Absolute deviation t > 0.
    pub t: f64,
    /// Packing slack β; (0, 1/32] for the plain event, (0, 1/64] for the
    /// two-tier event.
    pub beta: f64,
    /// Log-tilt exponent γ > 0; present exactly for the two-tier event.
    pub gamma: Option<f64>,
    /// Edge probability, used by `s = log(e/p^γ)`.
    pub p: f64,
}

impl PeelingParams {
    /// Plain single-tier event parameters.
    pub fn event_t(r: u64, d: f64, t: f64, beta: f64, p: f64) -> Result<Self> {
        if r < 1 || d <= 0.0 || t <= 0.0 || !(0.0 < beta && beta <= 1.0 / 32.0) {
            return Err(Error::InvalidParameter(format!(
                "event T params: r={r}, D={d}, t={t}, beta={beta}"
            )));
        }
        if !(0.0 < p && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(PeelingParams {
            r,
            d,
            t,
            beta,
            gamma: None,
            p,
        })
    }

    /// Two-tier event parameters (γ > 0 required, r ≥ 2 for `s^{1/(r−1)}`).
    pub fn event_t_plus(r: u64, d: f64, t: f64, beta: f64, gamma: f64, p: f64) -> Result<Self> {
        if r < 2 || d <= 0.0 || t <= 0.0 || !(0.0 < beta && beta <= 1.0 / 64.0) || gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "event T+ params: r={r}, D={d}, t={t}, beta={beta}, gamma={gamma}"
            )));
        }
        if !(0.0 < p && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(PeelingParams {
            r,
            d,
            t,
            beta,
            gamma: Some(gamma),
            p,
        })
    }

    pub fn m(&self, n: usize) -> f64 {
        crate::bounds::deviation_scale(self.t, n as u64, self.r)
    }

    pub fn m_bar(&self, n: usize) -> f64 {
        self.m(n).min(n as f64)
    }

    pub fn d_j(&self, j: u32) -> f64 {
        2f64.powi(j as i32) * self.d
    }

    /// `s = log(e/p^γ) = 1 + γ·log(1/p)`; 1 when no γ is set.
    pub fn s(&self) -> f64 {
        match self.gamma {
            Some(g) => 1.0 + g * (1.0 / self.p).ln(),
            None => 1.0,
        }
    }

    /// Smallest `J ≥ 0` with `D_J ≥ M̄`.
    pub fn level_count(&self, n: usize) -> u32 {
        let m_bar = self.m_bar(n);
        let mut j = 0u32;
        let mut dj = self.d;
        while dj < m_bar && j < 200 {
            dj *= 2.0;
            j += 1;
        }
        j
    }

    /// Per-level threshold on `N_{D_j}`: `βM/D_j` for the plain event;
    /// for the two-tier event `βMs/D_j` while `D_j < M̄/s^{1/(r−1)}`.
    pub fn threshold(&self, n: usize, j: u32) -> f64 {
        let m = self.m(n);
        let d_j = self.d_j(j);
        match self.gamma {
            None => self.beta * m / d_j,
            Some(_) => {
                let s = self.s();
                let cut = self.m_bar(n) / s.powf(1.0 / (self.r as f64 - 1.0));
                if d_j < cut {
                    self.beta * m * s / d_j
                } else {
                    self.beta * m / d_j
                }
            }
        }
    }
}

/// One level of a peeling trace.
#[derive(Clone, Debug, Serialize)]
pub struct PeelLevel {
    pub j: u32,
    pub d_j: f64,
    /// Maximum degree of `G_j`.
    pub delta: u64,
    /// Edges removed when producing `G_j` (0 at the top level).
    pub edges_removed: usize,
    /// The maximal collection used to produce `G_j` from `G_{j+1}`
    /// (`None` at the top level, whose graph is the input).
    #[serde(skip)]
    pub collection: Option<StarPacking>,
    #[serde(skip)]
    pub graph: Graph,
}

/// The chain `G_J ⊇ … ⊇ G_0` with all per-level data.
#[derive(Clone, Debug)]
pub struct PeelingTrace {
    pub level_count: u32,
    /// Levels ordered j = J down to 0.
    pub levels: Vec<PeelLevel>,
    /// `X(G_0)`.
    pub final_star_count: u64,
}

impl PeelingTrace {
    pub fn top(&self) -> &PeelLevel {
        self.levels.first().expect("trace has a top level")
    }

    pub fn bottom(&self) -> &PeelLevel {
        self.levels.last().expect("trace has a bottom level")
    }

    /// JSON with per-level edge lists embedded in the plain-text format.
    pub fn to_json(&self) -> serde_json::Value {
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .map(|l| {
                let collection = l.collection.as_ref().map(|c| {
                    serde_json::json!({
                        "k": c.k,
                        "stars": c
                            .stars
                            .iter()
                            .map(|(center, leaves)| {
                                serde_json::json!([center, leaves.iter().collect::<Vec<_>>()])
                            })
                            .collect::<Vec<_>>(),
                    })
                });
                serde_json::json!({
                    "j": l.j,
                    "d_j": l.d_j,
                    "delta": l.delta,
                    "edges_removed": l.edges_removed,
                    "collection": collection,
                    "graph": l.graph.to_edge_list_text(),
                })
            })
            .collect();
        serde_json::json!({
            "level_count": self.level_count,
            "final_star_count": self.final_star_count,
            "levels": levels,
        })
    }
}

/// Runs the peeling chain: `G_J` is the input; for j = J−1 down to 0,
/// `G_j` is `G_{j+1}` minus all edges incident to centers of a maximal
/// edge-disjoint `K_{1,⌈D_j⌉}` collection. Degenerate `D ≥ M̄` yields
/// J = 0 and a single-level trace.
pub fn peel(g: &Graph, params: &PeelingParams) -> PeelingTrace {
    let n = g.n();
    let j_levels = params.level_count(n);
    let mut levels = Vec::with_capacity(j_levels as usize + 1);
    levels.push(PeelLevel {
        j: j_levels,
        d_j: params.d_j(j_levels),
        delta: g.max_degree() as u64,
        edges_removed: 0,
        collection: None,
        graph: g.clone(),
    });
    let mut current = g.clone();
    for j in (0..j_levels).rev() {
        let arm = ceil_guarded(params.d_j(j)).max(1);
        let collection = greedy_star_packing(&current, arm);
        let next = remove_center_incident_edges(&current, &collection)
            .expect("greedy packing is always valid in its host");
        levels.push(PeelLevel {
            j,
            d_j: params.d_j(j),
            delta: next.max_degree() as u64,
            edges_removed: current.edge_count() - next.edge_count(),
            collection: Some(collection),
            graph: next.clone(),
        });
        current = next;
    }
    let final_star_count = current.count_stars(params.r);
    PeelingTrace {
        level_count: j_levels,
        levels,
        final_star_count,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

/// How a level's packing number was pinned down.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum NEvidence {
    /// No vertex reaches degree `⌈D_j⌉`, so N = 0.
    DegreeZero,
    /// Exact maximum packing from the oracle.
    Exact(u64),
    /// `Σ_v ⌊deg(v)/k⌋`, certified below the threshold.
    Upper(u64),
    /// A greedy packing at or above the threshold witnesses failure.
    GreedyWitness(u64),
    /// Cheap bounds straddle the threshold.
    Inconclusive { greedy: u64, upper: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CertLevel {
    pub j: u32,
    pub d_j: f64,
    /// `⌈D_j⌉`, the arm count of the stars this level talks about.
    pub arm: u64,
    pub threshold: f64,
    pub evidence: NEvidence,
    pub verdict: Verdict,
}

/// Per-level certificate for the packing event. `Holds` means every level
/// is certified strictly below its threshold; `Fails` means some level
/// exhibits a packing at or above its threshold.
#[derive(Clone, Debug, Serialize)]
pub struct EventCertificate {
    /// false = single-tier thresholds, true = two-tier.
    pub two_tier: bool,
    pub verdict: Verdict,
    pub m: f64,
    pub s: f64,
    pub levels: Vec<CertLevel>,
}

fn certify(g: &Graph, params: &PeelingParams) -> EventCertificate {
    let n = g.n();
    let delta = g.max_degree() as u64;
    let mut levels = Vec::new();
    let mut verdict = Verdict::Holds;
    let mut j = 0u32;
    // Levels with D_j > n have N = 0 < threshold automatically; stop there.
    while params.d_j(j) <= n as f64 && j < 200 {
        let d_j = params.d_j(j);
        let arm = ceil_guarded(d_j).max(1);
        let threshold = params.threshold(n, j);
        let (evidence, level_verdict) = if arm > delta {
            (NEvidence::DegreeZero, Verdict::Holds)
        } else if g.edge_count() <= MAX_SEARCH_EDGES {
            let exact = exact_max_star_packing(g, arm).expect("within budget");
            let v = if (exact as f64) < threshold {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            (NEvidence::Exact(exact), v)
        } else {
            let upper = packing_upper_bound(g, arm);
            if (upper as f64) < threshold {
                (NEvidence::Upper(upper), Verdict::Holds)
            } else {
                let greedy = greedy_star_packing(g, arm).size() as u64;
                if greedy as f64 >= threshold {
                    (NEvidence::GreedyWitness(greedy), Verdict::Fails)
                } else {
                    (NEvidence::Inconclusive { greedy, upper }, Verdict::Unknown)
                }
            }
        };
        match level_verdict {
            Verdict::Fails => verdict = Verdict::Fails,
            Verdict::Unknown if verdict == Verdict::Holds => verdict = Verdict::Unknown,
            _ => {}
        }
        levels.push(CertLevel {
            j,
            d_j,
            arm,
            threshold,
            evidence,
            verdict: level_verdict,
        });
        j += 1;
    }
    EventCertificate {
        two_tier: params.gamma.is_some(),
        verdict,
        m: params.m(n),
        s: params.s(),
        levels,
    }
}

/// Certifies the single-tier event `N_{D_j} < βM/D_j` for all j.
pub fn certify_event_t(g: &Graph, params: &PeelingParams) -> Result<EventCertificate> {
    if params.gamma.is_some() {
        return Err(Error::InvalidParameter(
            "params carry gamma; use certify_event_t_plus".into(),
        ));
    }
    Ok(certify(g, params))
}

/// Certifies the two-tier event: threshold `βMs/D_j` while
/// `D_j < M̄/s^{1/(r−1)}`, and `βM/D_j` beyond.
pub fn certify_event_t_plus(g: &Graph, params: &PeelingParams) -> Result<EventCertificate> {
    if params.gamma.is_none() {
        return Err(Error::InvalidParameter(
            "params carry no gamma; use certify_event_t".into(),
        ));
    }
    Ok(certify(g, params))
}

/// Oracle-side cross-checks of a sandwich run (only on small graphs).
#[derive(Clone, Debug, Serialize)]
pub struct OracleCut {
    /// Exact `X_D` from the bounded-subgraph oracle.
    pub x_d: u64,
    /// `X(G_0) ≤ X_D` held.
    pub lower_ok: bool,
    /// `X ≤ X_D + t/2` held.
    pub upper_ok: bool,
}

/// Outcome of a full certified-sandwich verification.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub certificate: EventCertificate,
    /// Whether the certificate held, i.e. the assertions actually ran.
    pub checked: bool,
    pub level_count: u32,
    pub x_full: u64,
    pub x_final: u64,
    pub t_half: f64,
    pub oracle: Option<OracleCut>,
}

/// Certifies the event and, when it holds, peels and asserts the
/// deterministic consequences: `Δ(G_j) ≤ D_j` at every level,
/// `X(G_0) ≤ X ≤ X(G_0) + t/2`, the per-level edge-removal bounds, and —
/// within oracle budget — the `X_D` sandwich. Any violated inequality is
/// a hard error.
pub fn verify_sandwich(g: &Graph, params: &PeelingParams) -> Result<SandwichReport> {
    let certificate = certify(g, params);
    let x_full = g.count_stars(params.r);
    if certificate.verdict != Verdict::Holds {
        return Ok(SandwichReport {
            certificate,
            checked: false,
            level_count: params.level_count(g.n()),
            x_full,
            x_final: x_full,
            t_half: params.t / 2.0,
            oracle: None,
        });
    }
    let trace = peel(g, params);
    for level in &trace.levels {
        if level.delta as f64 > level.d_j {
            return Err(Error::InequalityViolated(format!(
                "certified instance has Delta(G_{}) = {} > D_{} = {}",
                level.j, level.delta, level.j, level.d_j
            )));
        }
    }
    // edges removed at level j is at most |C|·Δ_{j+1} ≤ 2·|C|·D_j
    for w in trace.levels.windows(2) {
        let (above, below) = (&w[0], &w[1]);
        if let Some(c) = &below.collection {
            let size = c.size() as f64;
            if below.edges_removed as f64 > size * above.delta as f64
                || below.edges_removed as f64 > 2.0 * size * below.d_j
            {
                return Err(Error::InequalityViolated(format!(
                    "level {} removed {} edges with |C| = {}, Delta_above = {}, D_j = {}",
                    below.j,
                    below.edges_removed,
                    c.size(),
                    above.delta,
                    below.d_j
                )));
            }
        }
    }
    let x_final = trace.final_star_count;
    let t_half = params.t / 2.0;
    if x_final > x_full {
        return Err(Error::InequalityViolated(format!(
            "X(G_0) = {x_final} exceeds X = {x_full}"
        )));
    }
    if (x_full - x_final) as f64 > t_half {
        return Err(Error::InequalityViolated(format!(
            "X - X(G_0) = {} exceeds t/2 = {t_half}",
            x_full - x_final
        )));
    }
    let oracle = if g.edge_count() <= MAX_SEARCH_EDGES {
        let x_d = exact_bounded_star_count(g, params.r, params.d)?;
        let lower_ok = x_final <= x_d;
        let upper_ok = x_full as f64 <= x_d as f64 + t_half;
        if !lower_ok || !upper_ok {
            return Err(Error::InequalityViolated(format!(
                "oracle sandwich failed: X(G_0) = {x_final}, X_D = {x_d}, X = {x_full}, t/2 = {t_half}"
            )));
        }
        Some(OracleCut {
            x_d,
            lower_ok,
            upper_ok,
        })
    } else {
        None
    };
    Ok(SandwichReport {
        certificate,
        checked: true,
        level_count: trace.level_count,
        x_full,
        x_final,
        t_half,
        oracle,
    })
}
