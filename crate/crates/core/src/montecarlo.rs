//! Naive Monte-Carlo tail estimation with Wilson intervals, and the
//! parameter-sweep runner that joins estimates with every analytic bound.
//!
//! Replicate i draws its graph from seed ⊕ i, so estimates are pure
//! functions of the inputs: reruns and different worker counts produce
//! byte-identical output. There is deliberately no rare-event sampler —
//! regimes Monte Carlo cannot resolve are served by the exact oracles or
//! reported as below resolution, never extrapolated.

use serde::Serialize;

use crate::bounds::{
    deviation_scale, exponent_const_eps, exponent_eps_with, exponent_psi_with,
    pipeline_const_eps_with, pipeline_general_with, Constants, TailModel,
};
use crate::constructions::{appendix_lower_bounds, cluster_lower_bound, disjoint_lower_bound};
use crate::exec::{map_indexed, map_reduce_chunks};
use crate::graph::sample_gnp;
use crate::oracles::exact_star_distribution;
use crate::prob::EdgeProb;
use crate::{Error, Result};

/// A Monte-Carlo tail estimate with its 95% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub replicates: u64,
    pub hits: u64,
    pub point: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
}

fn wilson_ci(hits: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054; // 97.5% normal quantile
    let nf = n as f64;
    let phat = hits as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (phat + z2 / (2.0 * nf)) / denom;
    let half = Z * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimates `Pr(X ≥ threshold)` over `G(n,p)` from `replicates`
/// independent seeded samples (replicate i uses seed ⊕ i).
pub fn mc_tail(
    n: usize,
    p: f64,
    r: u64,
    threshold: f64,
    replicates: u64,
    seed: u64,
) -> Result<McEstimate> {
    if replicates < 1 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let hits = map_reduce_chunks(
        replicates,
        1024,
        |range| {
            let mut local = 0u64;
            for i in range {
                let g = sample_gnp(n, p, seed ^ i).expect("validated p");
                if g.count_stars(r) as f64 >= threshold {
                    local += 1;
                }
            }
            local
        },
        |a, b| a + b,
        0u64,
    );
    Ok(McEstimate {
        replicates,
        hits,
        point: hits as f64 / replicates as f64,
        ci95: wilson_ci(hits, replicates),
        seed,
    })
}

/// Cartesian sweep grid; rows are ordered n-major, then p, r, ε.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub n: Vec<u64>,
    pub p: Vec<EdgeProb>,
    pub r: Vec<u64>,
    pub eps: Vec<f64>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.n.len() * self.p.len() * self.r.len() * self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty sweep grid".into()));
        }
        if self.eps.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParameter("eps must be > 0".into()));
        }
        if self.r.iter().any(|&r| r < 1) {
            return Err(Error::InvalidParameter("r must be >= 1".into()));
        }
        Ok(())
    }

    fn point(&self, idx: usize) -> (u64, &EdgeProb, u64, f64) {
        let ne = self.eps.len();
        let nr = self.r.len() * ne;
        let np = self.p.len() * nr;
        (
            self.n[idx / np],
            &self.p[idx % np / nr],
            self.r[idx % nr / ne],
            self.eps[idx % ne],
        )
    }
}

/// Tail estimator used by a sweep.
#[derive(Clone, Debug)]
pub enum Estimator {
    /// Exact enumeration oracle (tiny n only).
    Exact,
    /// Monte Carlo with the given replicate count and base seed;
    /// grid point i uses base seed + i·2^32.
    Mc { replicates: u64, seed: u64 },
}

/// All floating-point values in sweep output carry 17 significant digits.
fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NA".to_string()
    }
}

pub const SWEEP_HEADER: &str = "idx,n,p,r,eps,threshold,mu,sigma2,lambda,m_t,estimator,tail,ci_lo,ci_hi,hits,replicates,below_mc_resolution,phi_const,phi_eps,psi_t,pipeline_eps_log_total,pipeline_eps_total,pipeline_t_log_total,pipeline_t_total,cluster_lb_log,disjoint_lb_log,disjoint_p_in_range,refined_clustering_log,chernoff_type_log,chernoff_type_in_range,edge_deviation_log,edge_deviation_in_range";

/// Runs the sweep and renders the CSV (header plus one row per grid
/// point, ordered by grid index). Output is a pure function of the
/// arguments: reruns and different worker counts are byte-identical.
pub fn sweep(grid: &GridSpec, estimator: &Estimator, consts: &Constants) -> Result<String> {
    grid.validate()?;
    let rows: Vec<Result<String>> = map_indexed(grid.len(), |idx| {
        let (n, p, r, eps) = grid.point(idx);
        sweep_row(idx, n, p, r, eps, estimator, consts)
    });
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row?);
        out.push('\n');
    }
    Ok(out)
}

fn sweep_row(
    idx: usize,
    n: u64,
    p: &EdgeProb,
    r: u64,
    eps: f64,
    estimator: &Estimator,
    consts: &Constants,
) -> Result<String> {
    let pf = p.as_f64();
    let model = TailModel::gnp(n, pf, r);
    let threshold = (1.0 + eps) * model.mu;
    let t = eps * model.mu;

    let (tail, ci_lo, ci_hi, hits, reps, below) = match estimator {
        Estimator::Exact => {
            let dist = exact_star_distribution(n as usize, p, r)?;
            let tail = dist.tail_ge(threshold).to_f64();
            (
                fmt(tail),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "false".into(),
            )
        }
        Estimator::Mc { replicates, seed } => {
            let est = mc_tail(
                n as usize,
                pf,
                r,
                threshold,
                *replicates,
                seed.wrapping_add((idx as u64) << 32),
            )?;
            (
                fmt(est.point),
                fmt(est.ci95.0),
                fmt(est.ci95.1),
                est.hits.to_string(),
                est.replicates.to_string(),
                (est.hits == 0).to_string(),
            )
        }
    };

    let phi_eps = if model.sigma2 > 0.0 {
        fmt(exponent_eps_with(&model, eps)?)
    } else {
        "NA".into()
    };
    let psi_t = if model.sigma2 > 0.0 && t > 0.0 {
        fmt(exponent_psi_with(&model, t)?)
    } else {
        "NA".into()
    };
    let (pconst_log, pconst_total) = if pf > 0.0 && model.mu > 0.0 {
        let rep = pipeline_const_eps_with(&model, eps, consts)?;
        (rep.log_total.map_or("NA".into(), fmt), fmt(rep.total))
    } else {
        ("NA".into(), "NA".into())
    };
    let (pgen_log, pgen_total) = if pf > 0.0 && t > 0.0 {
        let rep = pipeline_general_with(&model, t, 1.0 / (16.0 * r as f64), consts)?;
        (rep.log_total.map_or("NA".into(), fmt), fmt(rep.total))
    } else {
        ("NA".into(), "NA".into())
    };

    let x_plant = threshold.ceil().max(1.0) as u128;
    let cluster_log = if pf > 0.0 && x_plant <= crate::constructions::max_star_count(n, r) {
        fmt(cluster_lower_bound(n, pf, r, x_plant)?.log_prob)
    } else {
        "NA".into()
    };
    let m_disjoint = threshold.ceil().max(0.0) as u64;
    let disjoint = disjoint_lower_bound(n, pf, r, m_disjoint, consts)?;
    let (appendix_cols, appendix_flags) = if pf > 0.0 && t > 0.0 {
        let a = appendix_lower_bounds(n, pf, r, t, 0.1, consts)?;
        (
            (
                fmt(a.refined_clustering.log_value),
                fmt(a.chernoff_type.log_value),
                fmt(a.edge_deviation.log_value),
            ),
            (a.chernoff_type.in_range, a.edge_deviation.in_range),
        )
    } else {
        (("NA".into(), "NA".into(), "NA".into()), (false, false))
    };

    Ok(format!(
        "{idx},{n},{},{r},{},{},{},{},{},{},{},{tail},{ci_lo},{ci_hi},{hits},{reps},{below},{},{phi_eps},{psi_t},{pconst_log},{pconst_total},{pgen_log},{pgen_total},{cluster_log},{},{},{},{},{},{},{}",
        fmt(pf),
        fmt(eps),
        fmt(threshold),
        fmt(model.mu),
        fmt(model.sigma2),
        fmt(model.lambda),
        fmt(deviation_scale(t.max(0.0), n, r)),
        match estimator {
            Estimator::Exact => "exact",
            Estimator::Mc { .. } => "mc",
        },
        fmt(exponent_const_eps(n, pf, r)),
        fmt(disjoint.log_factor),
        disjoint.p_in_range,
        appendix_cols.0,
        appendix_cols.1,
        appendix_flags.0,
        appendix_cols.2,
        appendix_flags.1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_zero_always_hits() {
        let est = mc_tail(5, 0.3, 2, 0.0, 100, 7).unwrap();
        assert_eq!(est.hits, 100);
        assert_eq!(est.point, 1.0);
        assert!(est.ci95.0 <= est.point && est.point <= est.ci95.1);
    }

    #[test]
    fn complete_graph_hits_max_count() {
        let x_max = crate::constructions::max_star_count(5, 2) as f64;
        let est = mc_tail(5, 1.0, 2, x_max, 50, 3).unwrap();
        assert_eq!(est.point, 1.0);
    }

    #[test]
    fn mc_matches_exact_oracle_within_3_sigma() {
        // Pr(X >= 1) = 1/2 at n=3, p=1/2, r=2
        let reps = 1_000_000u64;
        let est = mc_tail(3, 0.5, 2, 1.0, reps, 12345).unwrap();
        let se = (0.25 / reps as f64).sqrt();
        assert!(
            (est.point - 0.5).abs() <= 3.0 * se,
            "point {} off by more than 3 s.e. {se}",
            est.point
        );
    }

    #[test]
    fn mc_is_deterministic() {
        let a = mc_tail(6, 0.4, 2, 5.0, 2_000, 99).unwrap();
        let b = mc_tail(6, 0.4, 2, 5.0, 2_000, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_tails_monotone_in_p_at_fixed_threshold() {
        use crate::oracles::exact_star_distribution;
        for threshold in [1.0f64, 3.0, 6.0] {
            let mut last = 0.0f64;
            for k in 1..=9u64 {
                let p = EdgeProb::from_fraction(k, 10).unwrap();
                let tail = exact_star_distribution(4, &p, 2)
                    .unwrap()
                    .tail_ge(threshold)
                    .to_f64();
                assert!(tail >= last - 1e-15, "threshold {threshold} p {k}/10");
                last = tail;
            }
        }
    }

    #[test]
    fn mc_monotone_in_p_up_to_ci_overlap() {
        let threshold = 3.0;
        let mut prev: Option<McEstimate> = None;
        for k in 1..=9u64 {
            let est = mc_tail(5, k as f64 / 10.0, 2, threshold, 4_000, 42).unwrap();
            if let Some(prev) = &prev {
                let ok = est.point >= prev.point || est.ci95.1 >= prev.ci95.0;
                assert!(ok, "non-monotone beyond CI overlap at p = {k}/10");
            }
            prev = Some(est);
        }
    }

    #[test]
    fn sweep_single_point() {
        let grid = GridSpec {
            n: vec![4],
            p: vec![EdgeProb::from_fraction(1, 2).unwrap()],
            r: vec![2],
            eps: vec![1.0],
        };
        let csv = sweep(&grid, &Estimator::Exact, &Constants::default()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], SWEEP_HEADER);
        assert!(lines[1].starts_with("0,4,"));
    }

    #[test]
    fn sweep_exact_matches_oracle() {
        let grid = GridSpec {
            n: vec![4],
            p: vec![
                EdgeProb::from_fraction(2, 10).unwrap(),
                EdgeProb::from_fraction(5, 10).unwrap(),
                EdgeProb::from_fraction(8, 10).unwrap(),
            ],
            r: vec![2],
            eps: vec![1.0],
        };
        let csv = sweep(&grid, &Estimator::Exact, &Constants::default()).unwrap();
        let tail_col = SWEEP_HEADER.split(',').position(|c| c == "tail").unwrap();
        for (i, line) in csv.lines().skip(1).enumerate() {
            let p = EdgeProb::from_fraction([2, 5, 8][i], 10).unwrap();
            let mu = crate::bounds::star_mean(4, p.as_f64(), 2);
            let expected = exact_star_distribution(4, &p, 2)
                .unwrap()
                .tail_ge(2.0 * mu)
                .to_f64();
            let got: f64 = line.split(',').nth(tail_col).unwrap().parse().unwrap();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn sweep_exact_golden_row() {
        // hand-derived anchors at (n=4, p=1/2, r=2, eps=1): mu = 3,
        // sigma2 = (12 + 24 + 48)*(p^3-p^4) + 12*(p^2-p^3) = 6.75
        // (identical pairs, shared-leaf pairs, center-edge pairs),
        // threshold 6, and Pr(X >= 6) = 7/64 (the graphs with >= 5 edges)
        let grid = GridSpec {
            n: vec![4],
            p: vec![EdgeProb::from_fraction(1, 2).unwrap()],
            r: vec![2],
            eps: vec![1.0],
        };
        let csv = sweep(&grid, &Estimator::Exact, &Constants::default()).unwrap();
        let row = csv.lines().nth(1).unwrap();
        let field = |name: &str| {
            let idx = SWEEP_HEADER.split(',').position(|c| c == name).unwrap();
            row.split(',').nth(idx).unwrap().to_string()
        };
        assert_eq!(field("mu"), "3.0000000000000000e0");
        assert_eq!(field("sigma2"), "6.7500000000000000e0");
        assert_eq!(field("threshold"), "6.0000000000000000e0");
        assert_eq!(field("tail"), "1.0937500000000000e-1"); // 7/64
        assert_eq!(field("estimator"), "exact");
        assert_eq!(field("below_mc_resolution"), "false");
    }

    #[test]
    fn sweep_is_byte_identical_across_runs() {
        let grid = GridSpec {
            n: vec![5, 6],
            p: vec![EdgeProb::from_fraction(3, 10).unwrap()],
            r: vec![2],
            eps: vec![0.5, 1.0],
        };
        let est = Estimator::Mc {
            replicates: 500,
            seed: 7,
        };
        let a = sweep(&grid, &est, &Constants::default()).unwrap();
        let b = sweep(&grid, &est, &Constants::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let grid = GridSpec {
            n: vec![],
            p: vec![],
            r: vec![],
            eps: vec![],
        };
        assert!(sweep(&grid, &Estimator::Exact, &Constants::default()).is_err());
    }
}
