//! Single-impurity dynamics of the XX chain and two-site concurrence under
//! exact, shift-fuzzy and grouping coarse-grained detection.
//!
//! A single spin-up excitation starting at site 0 spreads as
//! `psi(t) = sum_j phi_j(t) |j>` with `phi_j(t) = i^j J_j(t)` (units with
//! `hbar = J_ex = 1`). Sites are integers in `[-L, L]`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bessel::bessel_j_upto;
use crate::channels::cg_groups;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::report::{csv_row, fmt_f64};
use crate::tensor::{DenseOperator, SystemShape, C64};

/// Largest norm deficit accepted for a truncated window.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// Fuzzy strength used when none is given.
pub const DEFAULT_P: f64 = 0.8;

/// Default time grid.
pub const DEFAULT_TIMES: [f64; 3] = [2.0, 4.0, 6.0];

/// Largest number of sites handled by a dense grouped pair state.
pub const MAX_GROUPED_SITES: usize = 8;

const NEG_TOL: f64 = 1e-10;
const EIGEN_CUTOFF: f64 = 1e-14;

/// Half-width that always satisfies the truncation check at time `t`.
pub fn default_window(t: f64) -> usize {
    t.abs().ceil() as usize + 30
}

fn site_offset(window: usize, j: i64) -> Option<usize> {
    let k = j + window as i64;
    (0..=2 * window as i64).contains(&k).then_some(k as usize)
}

/// Single-excitation amplitudes on the sites `-window..=window`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpurityState {
    window: usize,
    time: Option<f64>,
    amps: Vec<C64>,
}

impl ImpurityState {
    /// `phi_j = i^j J_j(t)` on `[-window, window]`; fails when the
    /// amplitude outside the window exceeds [`TRUNCATION_TOL`] in norm.
    pub fn at_time(t: f64, window: usize) -> Result<Self> {
        let bessel = bessel_j_upto(window, t);
        let amps: Vec<C64> = (-(window as i64)..=window as i64)
            .map(|j| {
                let k = j.unsigned_abs() as usize;
                let value = if j < 0 && k % 2 == 1 { -bessel[k] } else { bessel[k] };
                let phase = match j.rem_euclid(4) {
                    0 => C64::new(1.0, 0.0),
                    1 => C64::new(0.0, 1.0),
                    2 => C64::new(-1.0, 0.0),
                    _ => C64::new(0.0, -1.0),
                };
                phase * value
            })
            .collect();
        let deficit = 1.0 - amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if deficit > TRUNCATION_TOL {
            return Err(Error::Truncation(format!(
                "window {window} misses norm {deficit:e} at t={t}"
            )));
        }
        Ok(ImpurityState { window, time: Some(t), amps })
    }

    /// Uses `window` when it passes the truncation check, otherwise [`default_window`].
    pub fn at_time_auto(t: f64, window: Option<usize>) -> Result<Self> {
        match window.map(|w| Self::at_time(t, w)) {
            Some(Ok(state)) => Ok(state),
            Some(Err(e)) if !e.is_feasibility() => Err(e),
            _ => Self::at_time(t, default_window(t)),
        }
    }

    /// Arbitrary amplitudes for sites `-window..=window`; their squared norm
    /// must lie within [`TRUNCATION_TOL`] of 1.
    pub fn from_amplitudes(window: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 2 * window + 1 {
            return Err(Error::Dimension(format!(
                "{} amplitudes for window {window}, expected {}",
                amps.len(),
                2 * window + 1
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRUNCATION_TOL {
            return Err(Error::InvalidArgument(format!("amplitudes have norm {norm}")));
        }
        Ok(ImpurityState { window, time: None, amps })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        -(self.window as i64)..=self.window as i64
    }

    pub fn contains(&self, j: i64) -> bool {
        site_offset(self.window, j).is_some()
    }

    /// `phi_j`, zero outside the window.
    pub fn amplitude(&self, j: i64) -> C64 {
        site_offset(self.window, j).map_or(C64::new(0.0, 0.0), |k| self.amps[k])
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Translation by `offset` sites, `phi'_j = phi_{j - offset}`, together with
    /// the weight that left the window.
    pub fn shifted(&self, offset: i64) -> (ImpurityState, f64) {
        let amps: Vec<C64> = self.sites().map(|j| self.amplitude(j - offset)).collect();
        let moved = ImpurityState { window: self.window, time: self.time, amps };
        let loss = self.norm_sqr() - moved.norm_sqr();
        (moved, loss.max(0.0))
    }
}

/// Convex combination of impurity states on a common window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedStateMixture {
    components: Vec<(f64, ImpurityState)>,
    edge_loss: f64,
}

impl From<ImpurityState> for WeightedStateMixture {
    fn from(state: ImpurityState) -> Self {
        WeightedStateMixture { components: vec![(1.0, state)], edge_loss: 0.0 }
    }
}

impl WeightedStateMixture {
    pub fn components(&self) -> &[(f64, ImpurityState)] {
        &self.components
    }

    /// Weighted norm that left the window when components were shifted.
    pub fn edge_loss(&self) -> f64 {
        self.edge_loss
    }

    pub fn window(&self) -> usize {
        self.components[0].1.window
    }

    pub fn contains(&self, j: i64) -> bool {
        self.components[0].1.contains(j)
    }

    /// Probability of finding the excitation at site `j`.
    pub fn occupation(&self, j: i64) -> f64 {
        self.components.iter().map(|(w, s)| w * s.amplitude(j).norm_sqr()).sum()
    }
}

/// The state seen by a detector that with probability `1 − p` is displaced
/// one site left or right with equal odds.
pub fn shift_fuzzy_mixture(state: &ImpurityState, p: f64) -> Result<WeightedStateMixture> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} is not a probability")));
    }
    let mut components = Vec::with_capacity(3);
    let mut edge_loss = 0.0;
    if p > 0.0 {
        components.push((p, state.clone()));
    }
    if p < 1.0 {
        let w = (1.0 - p) / 2.0;
        for offset in [1, -1] {
            let (moved, loss) = state.shifted(offset);
            edge_loss += w * loss;
            components.push((w, moved));
        }
    }
    Ok(WeightedStateMixture { components, edge_loss })
}

fn qubit_shape(n: usize) -> SystemShape {
    SystemShape::new(n, 2).expect("qubit register")
}

/// Two-site reduced state on sites `(i, j)`, site `i` being the first qubit.
pub fn reduced_pair_state(mixture: &WeightedStateMixture, i: i64, j: i64) -> Result<DenseOperator> {
    if i == j {
        return Err(Error::InvalidArgument(format!("pair ({i}, {j}) repeats a site")));
    }
    for s in [i, j] {
        if !mixture.contains(s) {
            return Err(Error::InvalidArgument(format!(
                "site {s} is outside the window ±{}",
                mixture.window()
            )));
        }
    }
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for (w, state) in &mixture.components {
        let (a, b) = (state.amplitude(i), state.amplitude(j));
        // basis |00>, |01>, |10>, |11> with site i the left qubit
        m[(0, 0)] += *w * (1.0 - a.norm_sqr() - b.norm_sqr());
        m[(1, 1)] += *w * b.norm_sqr();
        m[(2, 2)] += *w * a.norm_sqr();
        m[(2, 1)] += *w * a * b.conj();
        m[(1, 2)] += *w * b * a.conj();
    }
    DenseOperator::from_matrix(qubit_shape(2), m)
}

/// Reduced state on `sites`, in the listed order, as a dense operator.
fn union_state(mixture: &WeightedStateMixture, sites: &[i64]) -> DenseOperator {
    let n = sites.len();
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (w, state) in &mixture.components {
        let psi = DVector::from_fn(dim, |k, _| {
            match (0..n).find(|&q| k == 1 << (n - 1 - q)) {
                Some(q) => state.amplitude(sites[q]),
                None => C64::new(0.0, 0.0),
            }
        });
        let vacuum = 1.0 - psi.norm_squared();
        m += (&psi * psi.adjoint()) * C64::new(*w, 0.0);
        m[(0, 0)] += *w * vacuum;
    }
    DenseOperator::from_matrix(qubit_shape(n), m).expect("dimension matches")
}

/// Two-qubit state of the effective particles for `group_a` and `group_b`:
/// the reduced state on their union with each group replaced by one
/// particle taking the state of a uniformly chosen member.
pub fn cg_pair_state(mixture: &WeightedStateMixture, group_a: &[i64], group_b: &[i64]) -> Result<DenseOperator> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InvalidArgument("empty group".into()));
    }
    let sites: Vec<i64> = group_a.iter().chain(group_b).copied().collect();
    if sites.len() > MAX_GROUPED_SITES {
        return Err(Error::Budget(format!(
            "{} sites exceed the dense limit of {MAX_GROUPED_SITES}",
            sites.len()
        )));
    }
    for (k, s) in sites.iter().enumerate() {
        if sites[..k].contains(s) {
            return Err(Error::InvalidArgument(format!("site {s} appears twice")));
        }
        if !mixture.contains(*s) {
            return Err(Error::InvalidArgument(format!(
                "site {s} is outside the window ±{}",
                mixture.window()
            )));
        }
    }
    let rho = union_state(mixture, &sites);
    let (na, n) = (group_a.len(), sites.len());
    let cg = cg_groups(qubit_shape(n), &[(0..na).collect(), (na..n).collect()])?;
    cg.apply(&rho)
}

fn yy() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m
}

/// Wootters concurrence `max(0, l1 − l2 − l3 − l4)`, the `l_k` being the
/// decreasing square roots of the eigenvalues of `rho (Y⊗Y) rho* (Y⊗Y)`.
/// Eigenvalues of `rho` below `1e-14` are treated as zero.
pub fn concurrence(rho: &DenseOperator) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!("expected a 4x4 state, got {}x{}", rho.dim(), rho.dim())));
    }
    if !rho.is_hermitian(NEG_TOL) || (rho.trace().re - 1.0).abs() > NEG_TOL {
        return Err(Error::Domain("not a normalized Hermitian state".into()));
    }
    let (values, vectors) = hermitian_eigen(rho.matrix());
    if values[0] < -NEG_TOL {
        return Err(Error::Domain(format!("state has eigenvalue {:e}", values[0])));
    }
    // rho = W W^dagger over the numerically nonzero eigenvalues; the l_k are
    // the singular values of W^T (Y⊗Y) W
    let kept: Vec<usize> = (0..4).filter(|&k| values[k] > EIGEN_CUTOFF).collect();
    if kept.is_empty() {
        return Ok(0.0);
    }
    let w = DMatrix::from_fn(4, kept.len(), |r, c| vectors[(r, kept[c])] * values[kept[c]].sqrt());
    let tau = w.transpose() * yy() * &w;
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l.resize(4, 0.0);
    let c = l[0] - l[1] - l[2] - l[3];
    // differences at the rounding level of l[0] are not resolvable
    if c <= 8.0 * f64::EPSILON * l[0] {
        return Ok(0.0);
    }
    Ok(c.min(1.0))
}

/// Detection scheme for a concurrence map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "scheme")]
pub enum Scheme {
    Exact,
    /// Shift-fuzzy detector with probability `p` of reading the right site.
    Fuzzy { p: f64 },
    /// Sites grouped in blocks of `size` on each side, site 0 alone.
    Grouped { size: usize },
}

impl Scheme {
    /// `exact`, `fuzzy` (taking `p`), `cg2`, `cg4`, or any `cg<m>`.
    pub fn parse(name: &str, p: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Scheme::Exact),
            "fuzzy" | "fm" => Ok(Scheme::Fuzzy { p }),
            other => other
                .strip_prefix("cg")
                .and_then(|m| m.parse::<usize>().ok())
                .filter(|&m| m >= 1)
                .map(|size| Scheme::Grouped { size })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{name}'"))),
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            Scheme::Fuzzy { p } => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Exact => f.write_str("exact"),
            Scheme::Fuzzy { .. } => f.write_str("fuzzy"),
            Scheme::Grouped { size } => write!(f, "cg{size}"),
        }
    }
}

/// Groups `±{1..m}, ±{m+1..2m}, …` clipped to the window, with `{0}` in the
/// middle, labelled `-G..=G`.
pub fn site_groups(window: usize, size: usize) -> Vec<(i64, Vec<i64>)> {
    let w = window as i64;
    let m = size as i64;
    let count = (w + m - 1) / m;
    (-count..=count)
        .map(|g| {
            let sites: Vec<i64> = if g == 0 {
                vec![0]
            } else {
                let lo = (g.abs() - 1) * m + 1;
                let hi = (g.abs() * m).min(w);
                (lo..=hi).map(|s| s * g.signum()).collect()
            };
            (g, sites)
        })
        .collect()
}

/// Pair concurrences over sites or site groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrenceField {
    pub scheme: Scheme,
    pub t: f64,
    pub window: usize,
    /// Row/column labels: sites, or group indices for grouped schemes.
    pub labels: Vec<i64>,
    /// Sites covered by each label.
    pub members: Vec<Vec<i64>>,
    /// Symmetric `labels.len()²` matrix, row-major, zero diagonal.
    pub values: Vec<f64>,
}

impl ConcurrenceField {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn position(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn get(&self, i: i64, j: i64) -> Option<f64> {
        Some(self.values[self.position(i)? * self.len() + self.position(j)?])
    }

    /// `(i, j, C)` for `i < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(i64, i64, f64)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| (self.labels[a], self.labels[b], self.values[a * n + b]))
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest deviation from `C(i, j) = C(−j, −i)`.
    pub fn mirror_defect(&self) -> f64 {
        self.pairs()
            .iter()
            .map(|&(i, j, c)| self.get(-j, -i).map_or(f64::INFINITY, |m| (m - c).abs()))
            .fold(0.0, f64::max)
    }

    /// Per-site layout: sites `(s, u)` carry the value of their labels' pair,
    /// zero within a single label.
    pub fn site_expanded(&self) -> ConcurrenceField {
        let mut owner = Vec::new();
        for (k, sites) in self.members.iter().enumerate() {
            for &s in sites {
                owner.push((s, k));
            }
        }
        owner.sort();
        let n = owner.len();
        let mut values = vec![0.0; n * n];
        for (a, &(_, ka)) in owner.iter().enumerate() {
            for (b, &(_, kb)) in owner.iter().enumerate() {
                if ka != kb {
                    values[a * n + b] = self.values[ka * self.len() + kb];
                }
            }
        }
        ConcurrenceField {
            scheme: self.scheme,
            t: self.t,
            window: self.window,
            labels: owner.iter().map(|&(s, _)| s).collect(),
            members: owner.iter().map(|&(s, _)| vec![s]).collect(),
            values,
        }
    }

    /// Rows `t,scheme,i,j,concurrence,p,window` for `i < j`; `p` is empty
    /// for schemes without one.
    pub fn csv_rows(&self) -> String {
        let p = self.scheme.p().map(fmt_f64).unwrap_or_default();
        let mut out = String::new();
        for (i, j, c) in self.pairs() {
            out.push_str(&csv_row([
                fmt_f64(self.t),
                self.scheme.to_string(),
                i.to_string(),
                j.to_string(),
                fmt_f64(c),
                p.clone(),
                self.window.to_string(),
            ]));
        }
        out
    }

    /// Matrix layout: a header of column labels, then one row per label.
    pub fn matrix_csv(&self) -> String {
        let n = self.len();
        let mut out = csv_row(std::iter::once("i\\j".to_string()).chain(self.labels.iter().map(i64::to_string)));
        for a in 0..n {
            out.push_str(&csv_row(
                std::iter::once(self.labels[a].to_string())
                    .chain(self.values[a * n..(a + 1) * n].iter().map(|&v| fmt_f64(v))),
            ));
        }
        out
    }
}

/// Concurrence of every pair of sites (or groups) at time `t`.
///
/// `window` is enlarged to [`default_window`] when it fails the truncation check.
pub fn concurrence_map(t: f64, scheme: Scheme, window: Option<usize>) -> Result<ConcurrenceField> {
    let state = ImpurityState::at_time_auto(t, window)?;
    let window = state.window();
    let (mixture, groups) = match scheme {
        Scheme::Exact => (WeightedStateMixture::from(state), site_groups(window, 1)),
        Scheme::Fuzzy { p } => (shift_fuzzy_mixture(&state, p)?, site_groups(window, 1)),
        Scheme::Grouped { size } => {
            if 2 * size > MAX_GROUPED_SITES {
                return Err(Error::Budget(format!(
                    "groups of {size} exceed the dense limit of {MAX_GROUPED_SITES} sites per pair"
                )));
            }
            (WeightedStateMixture::from(state), site_groups(window, size))
        }
    };
    let n = groups.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let rho = match (&groups[a].1[..], &groups[b].1[..]) {
                ([i], [j]) => reduced_pair_state(&mixture, *i, *j)?,
                (ga, gb) => cg_pair_state(&mixture, ga, gb)?,
            };
            let c = concurrence(&rho)?;
            values[a * n + b] = c;
            values[b * n + a] = c;
        }
    }
    Ok(ConcurrenceField {
        scheme,
        t,
        window,
        labels: groups.iter().map(|(g, _)| *g).collect(),
        members: groups.into_iter().map(|(_, s)| s).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn bell() -> DenseOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = DVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]);
        DenseOperator::pure(qubit_shape(2), &psi).unwrap()
    }

    /// Reduced two-site state from the full state vector of a finite chain
    /// holding the same amplitudes, by summing over the other sites.
    fn brute_pair(state: &ImpurityState, i: i64, j: i64) -> DMatrix<C64> {
        let sites: Vec<i64> = state.sites().collect();
        let n = sites.len();
        let bit = |s: i64| n - 1 - sites.iter().position(|&x| x == s).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); 1 << n];
        for &s in &sites {
            psi[1 << bit(s)] = state.amplitude(s);
        }
        let (bi, bj) = (bit(i), bit(j));
        let mut out = DMatrix::<C64>::zeros(4, 4);
        for k in 0..psi.len() {
            for l in 0..psi.len() {
                let rest = !((1 << bi) | (1 << bj));
                if k & rest != l & rest {
                    continue;
                }
                let r = 2 * ((k >> bi) & 1) + ((k >> bj) & 1);
                let c = 2 * ((l >> bi) & 1) + ((l >> bj) & 1);
                out[(r, c)] += psi[k] * psi[l].conj();
            }
        }
        out
    }

    #[test]
    fn initial_state() {
        let s = ImpurityState::at_time(0.0, 5).unwrap();
        assert_eq!(s.amplitude(0), C64::new(1.0, 0.0));
        assert!(s.sites().filter(|&j| j != 0).all(|j| s.amplitude(j) == C64::new(0.0, 0.0)));
    }

    #[test]
    fn amplitudes_follow_bessel() {
        let s = ImpurityState::at_time(6.0, 40).unwrap();
        assert!((1.0 - s.norm_sqr()).abs() < 1e-12);
        assert!(s.sites().filter(|j| j.abs() > 20).all(|j| s.amplitude(j).norm() < 1e-9));
        assert!(s.sites().filter(|j| j.abs() >= 24).all(|j| s.amplitude(j).norm() < 1e-12));
        assert!((s.amplitude(1) - C64::new(0.0, bessel_j(1, 6.0).unwrap())).norm() < 1e-15);
        assert!((s.amplitude(-3) - C64::new(0.0, bessel_j(-3, 6.0).unwrap())).norm() < 1e-15);
        assert!((s.amplitude(2) + bessel_j(2, 6.0).unwrap()).norm() < 1e-15);
        for j in 0..20 {
            assert!((s.amplitude(j).norm() - s.amplitude(-j).norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn small_window_is_rejected_or_enlarged() {
        assert!(matches!(ImpurityState::at_time(6.0, 5), Err(Error::Truncation(_))));
        let s = ImpurityState::at_time_auto(6.0, Some(5)).unwrap();
        assert_eq!(s.window(), default_window(6.0));
    }

    #[test]
    fn shift_mixture_components() {
        let s = ImpurityState::at_time(2.0, 30).unwrap();
        let one = shift_fuzzy_mixture(&s, 1.0).unwrap();
        assert_eq!(one.components(), &[(1.0, s.clone())]);
        let zero = shift_fuzzy_mixture(&s, 0.0).unwrap();
        assert_eq!(zero.components().len(), 2);
        assert_eq!(zero.components()[0].0, 0.5);
        assert!(shift_fuzzy_mixture(&s, 1.5).is_err());

        let p = 0.7;
        let mix = shift_fuzzy_mixture(&s, p).unwrap();
        assert!(mix.edge_loss() < TRUNCATION_TOL);
        for j in -10..=10 {
            let n = |k: i64| s.amplitude(k).norm_sqr();
            let want = p * n(j) + (1.0 - p) / 2.0 * (n(j - 1) + n(j + 1));
            assert!((mix.occupation(j) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_state_matches_brute_force() {
        // 12 occupied sites -6..=5 of a 13-site window
        let t = 1.3;
        let bessel: Vec<C64> = (-6..=6i64)
            .map(|j| if j == 6 { C64::new(0.0, 0.0) } else { ImpurityState::at_time(t, 30).unwrap().amplitude(j) })
            .collect();
        let norm = bessel.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let state = ImpurityState::from_amplitudes(6, bessel.iter().map(|a| a / norm).collect()).unwrap();
        let mix = WeightedStateMixture::from(state.clone());
        for (i, j) in [(-6, 5), (0, 1), (1, 0), (-2, 3), (4, -4), (0, 6)] {
            let ours = reduced_pair_state(&mix, i, j).unwrap();
            let oracle = brute_pair(&state, i, j);
            assert!(max_abs(&(ours.matrix() - oracle)) < 1e-14, "({i},{j})");
            assert!((ours.trace().re - 1.0).abs() < 1e-14);
            assert!(ours.hermitian_eigenvalues()[0] > -1e-14);
        }
        assert!(reduced_pair_state(&mix, 2, 2).is_err());
        assert!(reduced_pair_state(&mix, 2, 7).is_err());
    }

    #[test]
    fn pair_state_at_time_zero() {
        let mix = WeightedStateMixture::from(ImpurityState::at_time(0.0, 4).unwrap());
        let rho = reduced_pair_state(&mix, 1, 2).unwrap();
        let mut vac = DMatrix::<C64>::zeros(4, 4);
        vac[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(rho.matrix(), &vac);
        let cg = cg_pair_state(&mix, &[1, 2], &[3, 4]).unwrap();
        assert!(max_abs(&(cg.matrix() - &vac)) < 1e-15);
    }

    #[test]
    fn grouped_state_is_average_of_pair_states() {
        let state = ImpurityState::at_time(3.0, 40).unwrap();
        let mix = shift_fuzzy_mixture(&state, 0.6).unwrap();
        for (ga, gb) in [(vec![1, 2], vec![3, 4]), (vec![-4, -3, -2, -1], vec![1, 2, 3, 4]), (vec![0], vec![5, 6])] {
            let got = cg_pair_state(&mix, &ga, &gb).unwrap();
            let mut want = DMatrix::<C64>::zeros(4, 4);
            for &i in &ga {
                for &j in &gb {
                    want += reduced_pair_state(&mix, i, j).unwrap().into_matrix();
                }
            }
            want /= C64::new((ga.len() * gb.len()) as f64, 0.0);
            assert!(max_abs(&(got.matrix() - want)) < 1e-14);
        }
        let single = cg_pair_state(&mix, &[2], &[-5]).unwrap();
        assert!(single.max_abs_diff(&reduced_pair_state(&mix, 2, -5).unwrap()) < 1e-15);
        assert!(cg_pair_state(&mix, &[1, 2], &[2, 3]).is_err());
        assert!(cg_pair_state(&mix, &[1, 2, 3, 4, 5], &[6, 7, 8, 9]).is_err());
    }

    #[test]
    fn grouped_marginal_without_excitation() {
        let mut amps = vec![C64::new(0.0, 0.0); 11];
        amps[5 + 1] = C64::new(0.6, 0.0);
        amps[5 + 2] = C64::new(0.0, 0.8);
        let mix = WeightedStateMixture::from(ImpurityState::from_amplitudes(5, amps).unwrap());
        let rho = cg_pair_state(&mix, &[1, 2], &[3, 4]).unwrap();
        // marginal of the second effective qubit
        let b00 = rho.get(0, 0) + rho.get(2, 2);
        assert!((b00 - 1.0).norm() < 1e-15);
        assert!((rho.get(2, 2).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&bell()).unwrap() - 1.0).abs() < 1e-12);
        assert!(concurrence(&DenseOperator::maximally_mixed(qubit_shape(2))).unwrap().abs() < 1e-12);
        let product = DenseOperator::pure(qubit_shape(2), &DVector::from_vec(vec![
            C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0),
        ]))
        .unwrap();
        assert!(concurrence(&product).unwrap() < 1e-7);
        // unit trace with a negative eigenvalue
        let mut bad = bell().scaled(C64::new(-1.0, 0.0));
        bad.add_scaled(&DenseOperator::identity(qubit_shape(2)), C64::new(0.5, 0.0)).unwrap();
        assert!(concurrence(&bad).is_err());
    }

    #[test]
    fn pure_pair_concurrence_closed_form() {
        let state = ImpurityState::at_time(4.5, 40).unwrap();
        let mix = WeightedStateMixture::from(state.clone());
        for (i, j) in [(0, 1), (-3, 3), (2, 7), (-5, 1)] {
            let c = concurrence(&reduced_pair_state(&mix, i, j).unwrap()).unwrap();
            let want = 2.0 * (state.amplitude(i) * state.amplitude(j)).norm();
            assert!((c - want).abs() < 1e-10, "({i},{j}) {c} {want}");
        }
    }

    #[test]
    fn concurrence_is_convex_on_mixtures() {
        let state = ImpurityState::at_time(5.0, 40).unwrap();
        let mix = shift_fuzzy_mixture(&state, 0.5).unwrap();
        for (i, j) in [(0, 1), (-4, 4), (2, 3)] {
            let mixed = concurrence(&reduced_pair_state(&mix, i, j).unwrap()).unwrap();
            let bound: f64 = mix
                .components()
                .iter()
                .map(|(w, s)| {
                    let single = WeightedStateMixture::from(s.clone());
                    w * concurrence(&reduced_pair_state(&single, i, j).unwrap()).unwrap()
                })
                .sum();
            assert!(mixed <= bound + 1e-12);
        }
    }

    #[test]
    fn groups_layout() {
        let g = site_groups(5, 2);
        assert_eq!(g.len(), 7);
        assert_eq!(g[3], (0, vec![0]));
        assert_eq!(g[4], (1, vec![1, 2]));
        assert_eq!(g[6], (3, vec![5]));
        assert_eq!(g[0], (-3, vec![-5]));
        assert_eq!(g[2], (-1, vec![-1, -2]));
    }

    #[test]
    fn maps_at_time_zero_vanish() {
        for scheme in [Scheme::Exact, Scheme::Fuzzy { p: 0.8 }, Scheme::Grouped { size: 2 }] {
            assert_eq!(concurrence_map(0.0, scheme, Some(4)).unwrap().max(), 0.0);
        }
    }

    #[test]
    fn maps_reduce_to_exact() {
        let exact = concurrence_map(3.0, Scheme::Exact, None).unwrap();
        let sharp = concurrence_map(3.0, Scheme::Fuzzy { p: 1.0 }, None).unwrap();
        let single = concurrence_map(3.0, Scheme::Grouped { size: 1 }, None).unwrap();
        assert_eq!(exact.labels, single.labels);
        for k in 0..exact.values.len() {
            assert!((exact.values[k] - sharp.values[k]).abs() < 1e-12);
            assert!((exact.values[k] - single.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn map_layouts() {
        let cg = concurrence_map(2.0, Scheme::Grouped { size: 2 }, Some(32)).unwrap();
        assert_eq!(cg.labels.first(), Some(&-16));
        let sites = cg.site_expanded();
        assert_eq!(sites.len(), 65);
        assert_eq!(sites.get(1, 3), cg.get(1, 2));
        assert_eq!(sites.get(1, 2), Some(0.0));
        assert!(cg.mirror_defect() < 1e-12);
        let rows = cg.csv_rows();
        assert_eq!(rows.lines().count(), 33 * 32 / 2);
        assert!(rows.lines().next().unwrap().starts_with("2.0000000000000000e0,cg2,-16,-15,"));
        assert!(cg.matrix_csv().lines().count() == 34);
        assert_eq!(Scheme::parse("cg4", 0.8).unwrap(), Scheme::Grouped { size: 4 });
        assert_eq!(Scheme::parse("fuzzy", 0.3).unwrap().p(), Some(0.3));
        assert!(Scheme::parse("cgx", 0.3).is_err());
    }
}
