//! Fuzzy-measurement channels and coarse-graining maps.
//!
//! A [`FuzzyChannel`] is a convex mixture of particle permutations acting by
//! conjugation, `F[rho] = sum_P p_P P rho P†`. A [`CoarseGraining`] is a fuzzy
//! channel followed by a partial trace over a fixed set of particles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{partial_trace, DenseOperator, Permutation, SystemShape, C64};

/// Tolerance on the total weight of a channel.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Default memory budget for dense superoperators (2 GiB).
pub const DEFAULT_MEM_BUDGET_BYTES: u64 = 2 << 30;

/// Environment variable overriding the dense-superoperator budget, in MiB.
pub const MEM_BUDGET_ENV: &str = "FUZZGRAIN_MEM_BUDGET_MB";

/// Budget in bytes, honoring [`MEM_BUDGET_ENV`] when it parses.
pub fn memory_budget_bytes() -> u64 {
    std::env::var(MEM_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map(|mb| mb.saturating_mul(1 << 20))
        .unwrap_or(DEFAULT_MEM_BUDGET_BYTES)
}

/// One weighted permutation of a fuzzy channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub perm: Permutation,
}

/// Convex mixture of particle permutations.
///
/// Terms are kept sorted by permutation image with duplicates merged and
/// zero weights dropped, so two channels describing the same map compare
/// equal structurally (up to floating-point rounding of merged weights).
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyChannel {
    shape: SystemShape,
    terms: Vec<Term>,
}

impl FuzzyChannel {
    pub fn identity(shape: SystemShape) -> Self {
        FuzzyChannel {
            shape,
            terms: vec![Term { weight: 1.0, perm: Permutation::identity(shape.n()) }],
        }
    }

    /// Normalizes and canonicalizes raw terms.
    fn canonical(shape: SystemShape, raw: Vec<(f64, Permutation)>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("a fuzzy channel needs at least one term".into()));
        }
        let mut merged: BTreeMap<Permutation, f64> = BTreeMap::new();
        for (w, p) in raw {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!("weight {w} is not a probability")));
            }
            if p.len() != shape.n() {
                return Err(Error::Dimension(format!(
                    "permutation {p} does not act on {} particles",
                    shape.n()
                )));
            }
            *merged.entry(p).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        // Weights already summing to one are kept bit-exact.
        let scale = if (total - 1.0).abs() <= WEIGHT_TOL { 1.0 } else { total };
        let terms = merged
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(perm, w)| Term { weight: w / scale, perm })
            .collect();
        Ok(FuzzyChannel { shape, terms })
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn weight_of(&self, p: &Permutation) -> f64 {
        self.terms.iter().find(|t| &t.perm == p).map_or(0.0, |t| t.weight)
    }

    pub fn is_identity(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].perm.is_identity()
    }

    /// Every element of the symmetric group carries positive weight.
    pub fn is_generic(&self) -> bool {
        let order: usize = (1..=self.shape.n()).product();
        self.terms.len() == order
    }

    /// The channel `self ∘ inner`; weights are convolved over the group.
    pub fn compose(&self, inner: &FuzzyChannel) -> Result<FuzzyChannel> {
        if self.shape != inner.shape {
            return Err(Error::Dimension("composing channels on different shapes".into()));
        }
        let raw = self
            .terms
            .iter()
            .flat_map(|a| {
                inner.terms.iter().map(move |b| (a.weight * b.weight, a.perm.compose(&b.perm)))
            })
            .collect();
        FuzzyChannel::canonical(self.shape, raw)
    }

    /// `p·id + (1 − p)·self`.
    pub fn mixed_with_identity(&self, p: f64) -> Result<FuzzyChannel> {
        check_probability(p)?;
        let mut raw: Vec<(f64, Permutation)> =
            self.terms.iter().map(|t| ((1.0 - p) * t.weight, t.perm.clone())).collect();
        raw.push((p, Permutation::identity(self.shape.n())));
        FuzzyChannel::canonical(self.shape, raw)
    }

    /// `sum_P p_P P rho P†`.
    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        if rho.shape() != self.shape {
            return Err(Error::Dimension(format!(
                "channel on {} applied to operator on {}",
                self.shape,
                rho.shape()
            )));
        }
        let dim = rho.dim();
        let src = rho.matrix();
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for term in &self.terms {
            let map = term.perm.hilbert_map(self.shape);
            for c in 0..dim {
                for r in 0..dim {
                    out[(map[r], map[c])] += src[(r, c)] * term.weight;
                }
            }
        }
        DenseOperator::from_matrix(self.shape, out)
    }

    /// Dense superoperator under the default or environment budget.
    pub fn superoperator(&self) -> Result<DMatrix<C64>> {
        self.superoperator_with_budget(memory_budget_bytes())
    }

    /// Matrix `M` with `M vec(rho) = vec(F[rho])`, using row-major
    /// vectorization `vec(rho)[r·D + c] = rho[r, c]`. It equals
    /// `sum_P p_P (Π_P ⊗ Π_P)`.
    pub fn superoperator_with_budget(&self, budget_bytes: u64) -> Result<DMatrix<C64>> {
        let dim = self.shape.hilbert_dim();
        let side = self
            .shape
            .operator_dim()
            .ok_or_else(|| Error::Budget(format!("operator space of {} overflows", self.shape)))?;
        let bytes = (side as u128) * (side as u128) * std::mem::size_of::<C64>() as u128;
        if bytes > budget_bytes as u128 {
            return Err(Error::Budget(format!(
                "dense superoperator for {} needs {bytes} bytes, budget is {budget_bytes}; use the block-wise path",
                self.shape
            )));
        }
        let mut m = DMatrix::<C64>::zeros(side, side);
        for term in &self.terms {
            let map = term.perm.hilbert_map(self.shape);
            for r in 0..dim {
                for c in 0..dim {
                    m[(map[r] * dim + map[c], r * dim + c)] += C64::new(term.weight, 0.0);
                }
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        ChannelRecord::from_parts(self, &[]).to_json()
    }
}

impl fmt::Display for FuzzyChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FuzzyChannel({}; ", self.shape)?;
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:.6}·{}", t.weight, t.perm)?;
        }
        write!(f, ")")
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// General fuzzy channel from weighted permutations. Weights are normalized
/// and duplicate permutations merged.
pub fn fuzzy_general(shape: SystemShape, terms: Vec<(f64, Permutation)>) -> Result<FuzzyChannel> {
    FuzzyChannel::canonical(shape, terms)
}

/// `p·id + (1 − p) sum_{i<j} p_ij S_ij`. Pair weights are normalized.
pub fn fuzzy_two_body(
    shape: SystemShape,
    p: f64,
    pair_weights: &[((usize, usize), f64)],
) -> Result<FuzzyChannel> {
    check_probability(p)?;
    let n = shape.n();
    let mut raw = vec![(p, Permutation::identity(n))];
    let total: f64 = pair_weights.iter().map(|(_, w)| *w).sum();
    if pair_weights.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("pair weights must be non-negative".into()));
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("pair weights cannot be normalized".into()));
    }
    for &((i, j), w) in pair_weights {
        if i == j {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) is not a swap")));
        }
        raw.push(((1.0 - p) * w / total, Permutation::transposition(n, i, j)?));
    }
    FuzzyChannel::canonical(shape, raw)
}

/// Every unordered pair with equal weight.
pub fn uniform_pairs(n: usize) -> Vec<((usize, usize), f64)> {
    let count = n * n.saturating_sub(1) / 2;
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| ((i, j), 1.0 / count as f64)))
        .collect()
}

/// Periodic nearest-neighbor channel `p·id + (1 − p) sum_i p_i S_{i,i+1}`.
pub fn fuzzy_chain(shape: SystemShape, p: f64, site_weights: &[f64]) -> Result<FuzzyChannel> {
    check_probability(p)?;
    let n = shape.n();
    if n < 2 {
        return Err(Error::InvalidArgument("a chain needs at least two particles".into()));
    }
    if site_weights.len() != n {
        return Err(Error::Dimension(format!(
            "expected {n} site weights, got {}",
            site_weights.len()
        )));
    }
    let pairs: Vec<((usize, usize), f64)> =
        site_weights.iter().enumerate().map(|(i, &w)| ((i, (i + 1) % n), w)).collect();
    fuzzy_two_body(shape, p, &pairs)
}

/// Permutation sets of the random fuzzy-measurement models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomModel {
    /// Every non-identity permutation.
    General,
    /// Every transposition.
    TwoBody,
    /// Periodic nearest-neighbor transpositions.
    Chain,
}

impl RandomModel {
    pub const ALL: [RandomModel; 3] = [RandomModel::General, RandomModel::TwoBody, RandomModel::Chain];

    /// Distinct non-identity permutations the model draws weights over.
    pub fn permutations(&self, n: usize) -> Vec<Permutation> {
        let mut perms: Vec<Permutation> = match self {
            RandomModel::General => Permutation::all(n),
            RandomModel::TwoBody => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| Permutation::transposition(n, i, j).unwrap())
                .collect(),
            RandomModel::Chain if n >= 2 => (0..n)
                .map(|i| Permutation::transposition(n, i, (i + 1) % n).unwrap())
                .collect(),
            RandomModel::Chain => Vec::new(),
        };
        perms.retain(|p| !p.is_identity());
        perms.sort();
        perms.dedup();
        perms
    }
}

impl fmt::Display for RandomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomModel::General => "general",
            RandomModel::TwoBody => "two-body",
            RandomModel::Chain => "chain",
        })
    }
}

impl FromStr for RandomModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" | "random" => Ok(RandomModel::General),
            "two-body" | "two_body" => Ok(RandomModel::TwoBody),
            "chain" | "1d" => Ok(RandomModel::Chain),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

/// How weights are drawn on the probability simplex.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexSampling {
    /// Normalized unit exponentials: the flat Dirichlet(1) measure.
    #[default]
    Dirichlet,
    /// Normalized independent uniform variates.
    NormalizedUniform,
}

impl FromStr for SimplexSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(SimplexSampling::Dirichlet),
            "normalized-uniform" => Ok(SimplexSampling::NormalizedUniform),
            other => Err(Error::InvalidArgument(format!("unknown simplex sampling '{other}'"))),
        }
    }
}

/// Generator for realization `index` of a run rooted at `seed`. Each
/// realization reads its own ChaCha stream, so results do not depend on
/// evaluation order.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random channel `p·id + (1 − p) sum_P p_P P` over the model's set.
pub fn fuzzy_random(
    shape: SystemShape,
    p: f64,
    model: RandomModel,
    seed: u64,
) -> Result<FuzzyChannel> {
    fuzzy_random_with(shape, p, model, SimplexSampling::default(), &mut realization_rng(seed, 0))
}

pub fn fuzzy_random_with<R: Rng + ?Sized>(
    shape: SystemShape,
    p: f64,
    model: RandomModel,
    sampling: SimplexSampling,
    rng: &mut R,
) -> Result<FuzzyChannel> {
    check_probability(p)?;
    let n = shape.n();
    let perms = model.permutations(n);
    let draws: Vec<f64> = perms
        .iter()
        .map(|_| match sampling {
            SimplexSampling::Dirichlet => Exp1.sample(rng),
            // (0, 1] so that no weight vanishes
            SimplexSampling::NormalizedUniform => 1.0 - rng.random::<f64>(),
        })
        .collect();
    let total: f64 = draws.iter().sum();
    let mut raw = vec![(p, Permutation::identity(n))];
    raw.extend(perms.into_iter().zip(draws).map(|(perm, w)| ((1.0 - p) * w / total, perm)));
    FuzzyChannel::canonical(shape, raw)
}

/// A fuzzy channel followed by a partial trace, `C[rho] = Tr_τ F[rho]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseGraining {
    fuzzy: FuzzyChannel,
    traced: Vec<usize>,
}

impl CoarseGraining {
    pub fn new(fuzzy: FuzzyChannel, mut traced: Vec<usize>) -> Result<Self> {
        let n = fuzzy.shape().n();
        traced.sort_unstable();
        traced.dedup();
        if let Some(&bad) = traced.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if traced.len() == n {
            return Err(Error::InvalidArgument("cannot trace out every particle".into()));
        }
        Ok(CoarseGraining { fuzzy, traced })
    }

    pub fn fuzzy(&self) -> &FuzzyChannel {
        &self.fuzzy
    }

    pub fn traced(&self) -> &[usize] {
        &self.traced
    }

    pub fn output_shape(&self) -> SystemShape {
        let s = self.fuzzy.shape();
        SystemShape::new(s.n() - self.traced.len(), s.d()).expect("proper subset traced")
    }

    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        partial_trace(&self.fuzzy.apply(rho)?, &self.traced)
    }

    pub fn to_json(&self) -> String {
        ChannelRecord::from_parts(&self.fuzzy, &self.traced).to_json()
    }
}

/// `Tr_τ F[rho]`.
pub fn apply_cg(cg: &CoarseGraining, rho: &DenseOperator) -> Result<DenseOperator> {
    cg.apply(rho)
}

/// Grouping map on consecutive particle ranges of the given sizes.
pub fn cg_uniform_groups(shape: SystemShape, group_sizes: &[usize]) -> Result<CoarseGraining> {
    if group_sizes.contains(&0) {
        return Err(Error::InvalidArgument("empty group".into()));
    }
    let total: usize = group_sizes.iter().sum();
    if total != shape.n() {
        return Err(Error::InvalidArgument(format!(
            "group sizes sum to {total}, expected {}",
            shape.n()
        )));
    }
    let mut start = 0;
    let groups: Vec<Vec<usize>> = group_sizes
        .iter()
        .map(|&m| {
            let g = (start..start + m).collect();
            start += m;
            g
        })
        .collect();
    cg_groups(shape, &groups)
}

/// Grouping map for explicit particle groups partitioning the system.
///
/// Each group is represented by its first listed particle, which takes the
/// state of a uniformly chosen member: the fuzzy part is
/// `⊗_k (1/m_k) sum_{i in group k} S_{first(k), i}` and every non-representative
/// particle is traced out. Output particles follow ascending representative index.
pub fn cg_groups(shape: SystemShape, groups: &[Vec<usize>]) -> Result<CoarseGraining> {
    let n = shape.n();
    let mut seen = vec![false; n];
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidArgument("empty group".into()));
        }
        for &i in g {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!("particle {i} is in two groups")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("groups do not cover every particle".into()));
    }
    let mut raw = vec![(1.0, Permutation::identity(n))];
    for g in groups {
        let w = 1.0 / g.len() as f64;
        let mut next = Vec::with_capacity(raw.len() * g.len());
        for (acc_w, acc_p) in &raw {
            for &i in g {
                let swap = Permutation::transposition(n, g[0], i)?;
                next.push((acc_w * w, swap.compose(acc_p)));
            }
        }
        raw = next;
    }
    let fuzzy = FuzzyChannel::canonical(shape, raw)?;
    let traced = groups.iter().flat_map(|g| g[1..].iter().copied()).collect();
    CoarseGraining::new(fuzzy, traced)
}

/// Nearest-neighbor fuzzy chain followed by tracing out the odd particles.
pub fn cg_alternating(shape: SystemShape, p: f64, site_weights: &[f64]) -> Result<CoarseGraining> {
    if shape.n() % 2 != 0 {
        return Err(Error::InvalidArgument("alternating coarse graining needs an even chain".into()));
    }
    let fuzzy = fuzzy_chain(shape, p, site_weights)?;
    CoarseGraining::new(fuzzy, (1..shape.n()).step_by(2).collect())
}

/// JSON record of a channel: `{"n", "d", "terms": [{"perm", "weight"}], "traced"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub n: usize,
    pub d: usize,
    pub terms: Vec<TermRecord>,
    #[serde(default)]
    pub traced: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub perm: Vec<usize>,
    #[serde(serialize_with = "crate::report::serialize_f64")]
    pub weight: f64,
}

impl ChannelRecord {
    fn from_parts(fuzzy: &FuzzyChannel, traced: &[usize]) -> Self {
        ChannelRecord {
            n: fuzzy.shape.n(),
            d: fuzzy.shape.d(),
            terms: fuzzy
                .terms
                .iter()
                .map(|t| TermRecord { perm: t.perm.image().to_vec(), weight: t.weight })
                .collect(),
            traced: traced.to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("channel JSON: {e}")))
    }

    pub fn fuzzy(&self) -> Result<FuzzyChannel> {
        let shape = SystemShape::new(self.n, self.d)?;
        let raw = self
            .terms
            .iter()
            .map(|t| Ok((t.weight, Permutation::new(t.perm.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("channel weights sum to {total}")));
        }
        FuzzyChannel::canonical(shape, raw)
    }

    pub fn coarse_graining(&self) -> Result<CoarseGraining> {
        CoarseGraining::new(self.fuzzy()?, self.traced.clone())
    }
}
