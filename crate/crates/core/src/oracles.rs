//! Exhaustive brute-force ground truth at tiny scale.
//!
//! Everything here is exact: graph enumeration runs over all `2^C(n,2)`
//! edge subsets, searches carry admissible pruning bounds only, and masses
//! are exact rationals whenever the edge probability is one.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::combin::binomial;
use crate::exec::map_reduce_chunks;
use crate::graph::{greedy_star_packing, Graph};
use crate::prob::{ratio_strings, EdgeProb, Value};
use crate::{Error, Result};

/// Largest pair count C(n,2) we are willing to enumerate (2^24 graphs).
pub const MAX_ENUM_PAIRS: usize = 24;
/// Largest edge count for the subgraph searches (X_D and max packing).
pub const MAX_SEARCH_EDGES: usize = 20;

/// Exact finite distribution of an integer statistic.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Exact(BTreeMap<u64, BigRational>),
    Approx(BTreeMap<u64, f64>),
}

impl Distribution {
    pub fn is_exact(&self) -> bool {
        matches!(self, Distribution::Exact(_))
    }

    pub fn support(&self) -> Vec<u64> {
        match self {
            Distribution::Exact(m) => m.keys().copied().collect(),
            Distribution::Approx(m) => m.keys().copied().collect(),
        }
    }

    pub fn mass_f64(&self, v: u64) -> f64 {
        match self {
            Distribution::Exact(m) => m.get(&v).map_or(0.0, |q| q.to_f64().unwrap()),
            Distribution::Approx(m) => m.get(&v).copied().unwrap_or(0.0),
        }
    }

    pub fn total_mass(&self) -> Value {
        match self {
            Distribution::Exact(m) => Value::Exact(m.values().sum()),
            Distribution::Approx(m) => Value::Approx(m.values().sum()),
        }
    }

    pub fn mean(&self) -> Value {
        match self {
            Distribution::Exact(m) => Value::Exact(
                m.iter()
                    .map(|(v, q)| q * BigRational::from(BigInt::from(*v)))
                    .sum(),
            ),
            Distribution::Approx(m) => Value::Approx(m.iter().map(|(v, q)| *v as f64 * q).sum()),
        }
    }

    pub fn variance(&self) -> Value {
        match self {
            Distribution::Exact(m) => {
                let mean: BigRational = m
                    .iter()
                    .map(|(v, q)| q * BigRational::from(BigInt::from(*v)))
                    .sum();
                let ex2: BigRational = m
                    .iter()
                    .map(|(v, q)| q * BigRational::from(BigInt::from(*v) * BigInt::from(*v)))
                    .sum();
                Value::Exact(ex2 - &mean * &mean)
            }
            Distribution::Approx(m) => {
                let mean: f64 = m.iter().map(|(v, q)| *v as f64 * q).sum();
                let ex2: f64 = m.iter().map(|(v, q)| (*v as f64) * (*v as f64) * q).sum();
                Value::Approx(ex2 - mean * mean)
            }
        }
    }

    /// `Pr(X ≥ x)` for a real threshold.
    pub fn tail_ge(&self, x: f64) -> Value {
        match self {
            Distribution::Exact(m) => Value::Exact(
                m.iter()
                    .filter(|(v, _)| **v as f64 >= x)
                    .map(|(_, q)| q.clone())
                    .sum(),
            ),
            Distribution::Approx(m) => Value::Approx(
                m.iter()
                    .filter(|(v, _)| **v as f64 >= x)
                    .map(|(_, q)| *q)
                    .sum(),
            ),
        }
    }

    /// JSON: `{"support": [[value, "num", "den"], ...]}` in exact mode,
    /// `{"support": [[value, mass], ...]}` otherwise.
    pub fn to_json(&self) -> serde_json::Value {
        let support: Vec<serde_json::Value> = match self {
            Distribution::Exact(m) => m
                .iter()
                .map(|(v, q)| {
                    let (num, den) = ratio_strings(q);
                    serde_json::json!([v, num, den])
                })
                .collect(),
            Distribution::Approx(m) => m.iter().map(|(v, q)| serde_json::json!([v, q])).collect(),
        };
        serde_json::json!({ "support": support })
    }
}

/// Integer profile of an enumeration: multiplicity of each (value, edge
/// count) pair. Probabilities are applied only once at the end, so the
/// enumeration itself is exact integer arithmetic and order-independent.
type Profile = BTreeMap<(u64, u32), u64>;

fn merge_profiles(mut a: Profile, b: Profile) -> Profile {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn profile_to_distribution(profile: &Profile, pair_count: u32, p: &EdgeProb) -> Distribution {
    match p {
        EdgeProb::Exact(q) => {
            let one = BigRational::one();
            let comp = &one - q;
            let mut pow_p = vec![BigRational::one()];
            let mut pow_q = vec![BigRational::one()];
            for k in 1..=pair_count as usize {
                pow_p.push(&pow_p[k - 1] * q);
                pow_q.push(&pow_q[k - 1] * &comp);
            }
            let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
            for (&(value, edges), &count) in profile {
                let mass = &pow_p[edges as usize]
                    * &pow_q[(pair_count - edges) as usize]
                    * BigRational::from(BigInt::from(count));
                if mass.is_zero() {
                    continue;
                }
                out.entry(value).and_modify(|m| *m += &mass).or_insert(mass);
            }
            Distribution::Exact(out)
        }
        EdgeProb::Approx(p) => {
            let mut pow_p = vec![1.0f64];
            let mut pow_q = vec![1.0f64];
            for k in 1..=pair_count as usize {
                pow_p.push(pow_p[k - 1] * p);
                pow_q.push(pow_q[k - 1] * (1.0 - p));
            }
            let mut out: BTreeMap<u64, f64> = BTreeMap::new();
            for (&(value, edges), &count) in profile {
                let mass =
                    pow_p[edges as usize] * pow_q[(pair_count - edges) as usize] * count as f64;
                if mass == 0.0 {
                    continue;
                }
                *out.entry(value).or_insert(0.0) += mass;
            }
            Distribution::Approx(out)
        }
    }
}

fn pair_masks(n: usize) -> (usize, Vec<u32>) {
    // lexicographic pair order (0,1), (0,2), ..., matching Graph::edges
    let mut inc = vec![0u32; n];
    let mut idx = 0usize;
    for u in 0..n {
        for v in (u + 1)..n {
            inc[u] |= 1 << idx;
            inc[v] |= 1 << idx;
            idx += 1;
        }
    }
    (idx, inc)
}

fn check_enum_budget(n: usize) -> Result<usize> {
    let m = n * n.saturating_sub(1) / 2;
    if m > MAX_ENUM_PAIRS {
        return Err(Error::BudgetExceeded(format!(
            "C({n},2) = {m} pairs > {MAX_ENUM_PAIRS}"
        )));
    }
    Ok(m)
}

/// Exact law of the star count over `G(n,p)`, by enumerating all
/// `2^C(n,2)` graphs.
pub fn exact_star_distribution(n: usize, p: &EdgeProb, r: u64) -> Result<Distribution> {
    if r < 1 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    let m = check_enum_budget(n)?;
    let (_, inc) = pair_masks(n);
    let total: u64 = 1u64 << m;
    let profile = map_reduce_chunks(
        total,
        1 << 14,
        |range| {
            let mut local: Profile = BTreeMap::new();
            for mask in range {
                let mask = mask as u32;
                let stars: u128 = inc
                    .iter()
                    .map(|&vmask| binomial((mask & vmask).count_ones() as u64, r))
                    .sum();
                let key = (stars as u64, mask.count_ones());
                *local.entry(key).or_insert(0) += 1;
            }
            local
        },
        merge_profiles,
        Profile::new(),
    );
    Ok(profile_to_distribution(&profile, m as u32, p))
}

/// Exact `X_D(G)`: the maximum star count over spanning edge-subgraphs `H`
/// with `Δ(H) ≤ ⌊cap⌋`, by branch and bound over edge subsets.
pub fn exact_bounded_star_count(g: &Graph, r: u64, cap: f64) -> Result<u64> {
    if r < 1 || cap < 0.0 || !cap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exact_bounded_star_count: r={r}, cap={cap}"
        )));
    }
    if g.edge_count() > MAX_SEARCH_EDGES {
        return Err(Error::BudgetExceeded(format!(
            "{} edges > {MAX_SEARCH_EDGES}",
            g.edge_count()
        )));
    }
    let d = cap.floor() as u64;
    if d as usize >= g.max_degree() {
        // cap inactive: H = G is optimal
        return Ok(g.count_stars(r));
    }
    let edges = g.edges();
    let n = g.n();
    let mut undecided = vec![0u64; n];
    for &(u, v) in &edges {
        undecided[u as usize] += 1;
        undecided[v as usize] += 1;
    }
    struct Search<'a> {
        edges: &'a [(u32, u32)],
        r: u64,
        d: u64,
        deg: Vec<u64>,
        undecided: Vec<u64>,
        current: u128,
        best: u128,
    }
    impl Search<'_> {
        // Σ_v C(min(deg_v + undecided_v, D), r) dominates anything reachable
        fn upper_bound(&self) -> u128 {
            self.deg
                .iter()
                .zip(&self.undecided)
                .map(|(&d0, &f)| binomial((d0 + f).min(self.d), self.r))
                .sum()
        }
        fn go(&mut self, i: usize) {
            if self.upper_bound() <= self.best {
                return;
            }
            if i == self.edges.len() {
                self.best = self.best.max(self.current);
                return;
            }
            let (u, v) = self.edges[i];
            let (u, v) = (u as usize, v as usize);
            self.undecided[u] -= 1;
            self.undecided[v] -= 1;
            // include the edge if both endpoints stay under the cap
            if self.deg[u] < self.d && self.deg[v] < self.d {
                let gain = binomial(self.deg[u], self.r - 1) + binomial(self.deg[v], self.r - 1);
                self.deg[u] += 1;
                self.deg[v] += 1;
                self.current += gain;
                self.go(i + 1);
                self.current -= gain;
                self.deg[u] -= 1;
                self.deg[v] -= 1;
            }
            // exclude
            self.go(i + 1);
            self.undecided[u] += 1;
            self.undecided[v] += 1;
        }
    }
    let mut search = Search {
        edges: &edges,
        r,
        d,
        deg: vec![0; n],
        undecided,
        current: 0,
        best: 0,
    };
    search.go(0);
    Ok(u64::try_from(search.best).expect("bounded star count exceeds u64"))
}

/// Exact maximum size of an edge-disjoint collection of `K_{1,k}`.
///
/// Uses the orientation view: a packing of size s exists iff some
/// orientation of the edges has `Σ_v ⌊indeg(v)/k⌋ ≥ s`, so we branch over
/// edge orientations with the degree-slack bound for pruning.
pub fn exact_max_star_packing(g: &Graph, k: u64) -> Result<u64> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if g.edge_count() > MAX_SEARCH_EDGES {
        return Err(Error::BudgetExceeded(format!(
            "{} edges > {MAX_SEARCH_EDGES}",
            g.edge_count()
        )));
    }
    if k as usize > g.max_degree() {
        return Ok(0);
    }
    let edges = g.edges();
    let n = g.n();
    let mut undecided = vec![0u64; n];
    for &(u, v) in &edges {
        undecided[u as usize] += 1;
        undecided[v as usize] += 1;
    }
    struct Search<'a> {
        edges: &'a [(u32, u32)],
        k: u64,
        indeg: Vec<u64>,
        undecided: Vec<u64>,
        best: u64,
    }
    impl Search<'_> {
        fn upper_bound(&self) -> u64 {
            self.indeg
                .iter()
                .zip(&self.undecided)
                .map(|(&d, &f)| (d + f) / self.k)
                .sum()
        }
        fn score(&self) -> u64 {
            self.indeg.iter().map(|&d| d / self.k).sum()
        }
        fn go(&mut self, i: usize) {
            if self.upper_bound() <= self.best {
                return;
            }
            if i == self.edges.len() {
                self.best = self.best.max(self.score());
                return;
            }
            let (u, v) = self.edges[i];
            let (u, v) = (u as usize, v as usize);
            self.undecided[u] -= 1;
            self.undecided[v] -= 1;
            for c in [u, v] {
                self.indeg[c] += 1;
                self.go(i + 1);
                self.indeg[c] -= 1;
            }
            self.undecided[u] += 1;
            self.undecided[v] += 1;
        }
    }
    let mut search = Search {
        edges: &edges,
        k,
        indeg: vec![0; n],
        undecided,
        best: greedy_star_packing(g, k).size() as u64,
    };
    search.go(0);
    Ok(search.best)
}

/// Exact `Pr(N_k ≥ x)` over `G(n,p)`: the probability that the maximum
/// edge-disjoint `K_{1,k}` packing has size at least `x`.
pub fn exact_packing_tail(n: usize, p: &EdgeProb, k: u64, x: u64) -> Result<Value> {
    let m = check_enum_budget(n)?;
    if m > MAX_SEARCH_EDGES {
        return Err(Error::BudgetExceeded(format!(
            "packing tail enumeration needs C(n,2) = {m} <= {MAX_SEARCH_EDGES}"
        )));
    }
    if x == 0 {
        return Ok(match p {
            EdgeProb::Exact(_) => Value::Exact(BigRational::one()),
            EdgeProb::Approx(_) => Value::Approx(1.0),
        });
    }
    let pairs: Vec<(u32, u32)> = Graph::complete(n).edges();
    let total: u64 = 1 << m;
    let profile = map_reduce_chunks(
        total,
        1 << 10,
        |range| {
            let mut local: Profile = BTreeMap::new();
            for mask in range {
                let g = Graph::from_edges(
                    n,
                    pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, e)| *e),
                )
                .unwrap();
                if exact_max_star_packing(&g, k).unwrap() >= x {
                    *local.entry((1, mask.count_ones())).or_insert(0) += 1;
                }
            }
            local
        },
        merge_profiles,
        Profile::new(),
    );
    let dist = profile_to_distribution(&profile, m as u32, p);
    Ok(dist.tail_ge(1.0))
}

/// A finite family of independent 0/1 variables and subsets of them.
#[derive(Clone, Debug)]
pub struct IndicatorFamily {
    /// Per-element success probabilities of the ground set.
    pub probs: Vec<EdgeProb>,
    /// The subset family; `Y_α = Π_{i∈α} ξ_i`.
    pub sets: Vec<BTreeSet<usize>>,
}

impl IndicatorFamily {
    pub fn validate(&self) -> Result<()> {
        if self.probs.len() > 20 {
            return Err(Error::BudgetExceeded(format!(
                "ground set size {} > 20",
                self.probs.len()
            )));
        }
        if self.sets.len() > 12 {
            return Err(Error::BudgetExceeded(format!(
                "family size {} > 12",
                self.sets.len()
            )));
        }
        for s in &self.sets {
            if s.is_empty() {
                return Err(Error::InvalidParameter("empty subset in family".into()));
            }
            if s.iter().any(|&i| i >= self.probs.len()) {
                return Err(Error::InvalidParameter(
                    "subset references element outside ground set".into(),
                ));
            }
        }
        Ok(())
    }

    fn all_exact(&self) -> bool {
        self.probs.iter().all(|p| p.is_exact())
    }

    /// `Σ_α E Y_α = Σ_α Π_{i∈α} p_i`.
    pub fn expected_sum(&self) -> Value {
        if self.all_exact() {
            let mut acc = BigRational::zero();
            for s in &self.sets {
                let mut term = BigRational::one();
                for &i in s {
                    term *= self.probs[i].exact().unwrap();
                }
                acc += term;
            }
            Value::Exact(acc)
        } else {
            let mut acc = 0.0f64;
            for s in &self.sets {
                acc += s.iter().map(|&i| self.probs[i].as_f64()).product::<f64>();
            }
            Value::Approx(acc)
        }
    }
}

/// Exact `Pr(Z_C ≥ threshold)`, where `Z_C` maximizes `Σ_{α∈𝒥} Y_α` over
/// subfamilies `𝒥` whose pairwise-overlap degree
/// `max_{β∈𝒥} |{α∈𝒥 : α∩β≠∅}|` is at most `c`.
pub fn exact_zc_tail(family: &IndicatorFamily, c: f64, threshold: f64) -> Result<Value> {
    family.validate()?;
    if c <= 0.0 {
        return Err(Error::InvalidParameter("overlap cap must be > 0".into()));
    }
    let exact = family.all_exact();
    if threshold <= 0.0 {
        // Z_C >= 0 always (the empty subfamily is admissible)
        return Ok(if exact {
            Value::Exact(BigRational::one())
        } else {
            Value::Approx(1.0)
        });
    }
    let f = family.sets.len();

    // compress the ground set to the elements actually used
    let mut relevant: Vec<usize> = family
        .sets
        .iter()
        .flat_map(|s| s.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    relevant.sort_unstable();
    let elem_index = |e: usize| relevant.binary_search(&e).unwrap();
    let set_masks: Vec<u32> = family
        .sets
        .iter()
        .map(|s| s.iter().fold(0u32, |m, &e| m | 1 << elem_index(e)))
        .collect();

    // admissible subfamilies and the best admissible size inside each live set
    let intersects: Vec<Vec<bool>> = (0..f)
        .map(|a| (0..f).map(|b| set_masks[a] & set_masks[b] != 0).collect())
        .collect();
    let subfamilies = 1usize << f;
    let mut valid = vec![false; subfamilies];
    for (j, slot) in valid.iter_mut().enumerate() {
        // overlap degree: every member β may meet at most c members α
        *slot = (0..f).filter(|&beta| j >> beta & 1 == 1).all(|beta| {
            let overlap = intersects[beta]
                .iter()
                .enumerate()
                .filter(|&(alpha, &hit)| j >> alpha & 1 == 1 && hit)
                .count();
            overlap as f64 <= c
        });
    }
    let mut zmax = vec![0u32; subfamilies];
    for (live, slot) in zmax.iter_mut().enumerate() {
        let mut best = 0u32;
        let mut sub = live;
        loop {
            if valid[sub] {
                best = best.max(sub.count_ones());
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & live;
        }
        *slot = best;
    }

    // enumerate outcomes of the relevant ground elements
    let s = relevant.len();
    let hit = |on: u32| -> bool {
        let mut live = 0usize;
        for (a, &mask) in set_masks.iter().enumerate() {
            if mask & !on == 0 {
                live |= 1 << a;
            }
        }
        zmax[live] as f64 >= threshold
    };
    if exact {
        let probs: Vec<BigRational> = relevant
            .iter()
            .map(|&e| family.probs[e].exact().unwrap().clone())
            .collect();
        fn walk(
            i: usize,
            on: u32,
            weight: BigRational,
            probs: &[BigRational],
            hit: &dyn Fn(u32) -> bool,
            acc: &mut BigRational,
        ) {
            if i == probs.len() {
                if hit(on) {
                    *acc += weight;
                }
                return;
            }
            let p = &probs[i];
            if !p.is_zero() {
                walk(i + 1, on | 1 << i, &weight * p, probs, hit, acc);
            }
            let q = BigRational::one() - p;
            if !q.is_zero() {
                walk(i + 1, on, &weight * q, probs, hit, acc);
            }
        }
        let mut acc = BigRational::zero();
        walk(0, 0, BigRational::one(), &probs, &hit, &mut acc);
        Ok(Value::Exact(acc))
    } else {
        let probs: Vec<f64> = relevant.iter().map(|&e| family.probs[e].as_f64()).collect();
        let mut acc = 0.0f64;
        for on in 0..(1u32 << s) {
            let mut w = 1.0;
            for (i, &p) in probs.iter().enumerate() {
                w *= if on >> i & 1 == 1 { p } else { 1.0 - p };
            }
            if hit(on) {
                acc += w;
            }
        }
        Ok(Value::Approx(acc))
    }
}

/// `Var X` over `G(n,p)`, straight from the enumerated distribution.
pub fn exact_variance_bruteforce(n: usize, p: &EdgeProb, r: u64) -> Result<Value> {
    Ok(exact_star_distribution(n, p, r)?.variance())
}
