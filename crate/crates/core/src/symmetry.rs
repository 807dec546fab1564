//! Symmetry sectors of fuzzy channels.
//!
//! The operators `Γ_{l,l'}` count how many particles carry the single-particle
//! ket-bra `|l><l'|`. They commute with every particle permutation, so each
//! computational ket-bra `|x><y|` lies in a sector labeled by the `d x d`
//! count matrix `γ`, and a fuzzy channel maps each sector to itself. The
//! restriction of the channel to one sector is a convex mixture of
//! permutation matrices over the sector's ket-bras.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::FuzzyChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseOperator, KetBra, Permutation, SystemShape, C64};

/// Count matrix `γ_{l,l'}` of a sector, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GammaSignature {
    d: usize,
    counts: Vec<usize>,
}

impl GammaSignature {
    pub fn new(d: usize, counts: Vec<usize>) -> Result<Self> {
        if d < 2 || counts.len() != d * d {
            return Err(Error::Dimension(format!(
                "a signature for d={d} needs {} counts, got {}",
                d * d,
                counts.len()
            )));
        }
        Ok(GammaSignature { d, counts })
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("signature rows must form a square matrix".into()));
        }
        GammaSignature::new(d, rows.concat())
    }

    /// `diag(c_0, …, c_{d-1})`.
    pub fn diagonal(diag: &[usize]) -> Result<Self> {
        let d = diag.len();
        let mut counts = vec![0; d * d];
        for (l, &c) in diag.iter().enumerate() {
            counts[l * d + l] = c;
        }
        GammaSignature::new(d, counts)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Total particle count.
    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn get(&self, ket: usize, bra: usize) -> usize {
        self.counts[ket * self.d + bra]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.counts.chunks(self.d).map(<[usize]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let d = self.d;
        let counts = (0..d * d).map(|k| self.counts[(k % d) * d + k / d]).collect();
        GammaSignature { d, counts }
    }

    /// Only `|l><l|` single-particle factors occur: the sector of physical
    /// (diagonal-block) states.
    pub fn is_diagonal(&self) -> bool {
        (0..self.d).all(|l| (0..self.d).all(|m| l == m || self.get(l, m) == 0))
    }

    /// Number of ket-bras in the sector, `n! / prod γ_{l,l'}!`.
    pub fn sector_size(&self) -> u128 {
        multinomial(&self.counts)
    }

    fn check_shape(&self, shape: SystemShape) -> Result<()> {
        if self.d != shape.d() || self.n() != shape.n() {
            return Err(Error::InvalidArgument(format!(
                "signature {self} (d={}, n={}) does not belong to {shape}",
                self.d,
                self.n()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GammaSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            .collect();
        f.write_str(&rows.join(";"))
    }
}

/// Parses `"g00,g01;g10,g11"`.
impl FromStr for GammaSignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| {
                        v.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidArgument(format!("bad signature entry '{v}' in '{s}'"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GammaSignature::from_rows(&rows)
    }
}

impl Serialize for GammaSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GammaSignature {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<usize>>::deserialize(de)?;
        GammaSignature::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn multinomial(counts: &[usize]) -> u128 {
    let mut result: u128 = 1;
    let mut placed: u128 = 0;
    for &c in counts {
        for k in 1..=c as u128 {
            placed += 1;
            result = result * placed / k;
        }
    }
    result
}

/// `C(n, k)` with exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Number of sectors, `C(d² + n − 1, n)`.
pub fn sector_count(shape: SystemShape) -> u128 {
    let d2 = (shape.d() * shape.d()) as u64;
    binomial(d2 + shape.n() as u64 - 1, shape.n() as u64)
}

/// `counts[l][l'] = |{i : x_i = l, y_i = l'}|`.
pub fn gamma_of(kb: &KetBra, d: usize) -> GammaSignature {
    let mut counts = vec![0; d * d];
    for (&x, &y) in kb.x.iter().zip(&kb.y) {
        counts[x as usize * d + y as usize] += 1;
    }
    GammaSignature { d, counts }
}

/// Every signature of the shape, in lexicographic order of the row-major counts.
pub fn enumerate_sectors(shape: SystemShape) -> Vec<GammaSignature> {
    fn rec(slots: usize, remaining: usize, prefix: &mut Vec<usize>, d: usize, out: &mut Vec<GammaSignature>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(GammaSignature { d, counts: prefix.clone() });
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            rec(slots - 1, remaining - c, prefix, d, out);
            prefix.pop();
        }
    }
    let d = shape.d();
    let mut out = Vec::new();
    rec(d * d, shape.n(), &mut Vec::with_capacity(d * d), d, &mut out);
    out
}

/// Every ket-bra with signature `gamma`, ordered lexicographically in `(x, y)`.
pub fn sector_basis(gamma: &GammaSignature, shape: SystemShape) -> Result<Vec<KetBra>> {
    gamma.check_shape(shape)?;
    fn rec(
        remaining: &mut [usize],
        d: usize,
        x: &mut Vec<u8>,
        y: &mut Vec<u8>,
        n: usize,
        out: &mut Vec<KetBra>,
    ) {
        if x.len() == n {
            out.push(KetBra { x: x.clone(), y: y.clone() });
            return;
        }
        for label in 0..d * d {
            if remaining[label] == 0 {
                continue;
            }
            remaining[label] -= 1;
            x.push((label / d) as u8);
            y.push((label % d) as u8);
            rec(remaining, d, x, y, n, out);
            x.pop();
            y.pop();
            remaining[label] += 1;
        }
    }
    let mut out = Vec::with_capacity(gamma.sector_size() as usize);
    let mut remaining = gamma.counts.clone();
    let n = shape.n();
    rec(&mut remaining, gamma.d, &mut Vec::with_capacity(n), &mut Vec::with_capacity(n), n, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// The channel restricted to one sector.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBlock {
    pub gamma: GammaSignature,
    pub basis: Vec<KetBra>,
    /// Entry `(a, b)` sums the weights of permutations taking `basis[b]` to `basis[a]`.
    pub matrix: DMatrix<f64>,
}

impl SectorBlock {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Eigenvalues ordered by decreasing modulus, then increasing phase.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let mut ev = if linalg::is_symmetric(&self.matrix) {
            linalg::symmetric_eigenvalues(&self.matrix)
        } else {
            linalg::real_eigenvalues(&self.matrix)?
        };
        ev.sort_by(linalg::spectral_order);
        Ok(ev)
    }

    /// Largest deviation of a row or column sum from one.
    pub fn stochasticity_defect(&self) -> f64 {
        let rows = self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs());
        let cols = self.matrix.column_iter().map(|c| (c.sum() - 1.0).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

/// Matrix of `ch` on the sector `gamma`.
pub fn block(ch: &FuzzyChannel, gamma: &GammaSignature) -> Result<SectorBlock> {
    let shape = ch.shape();
    let basis = sector_basis(gamma, shape)?;
    let dim = shape.hilbert_dim();
    let index: HashMap<usize, usize> = basis
        .iter()
        .enumerate()
        .map(|(k, kb)| {
            let (r, c) = kb.position(shape);
            (r * dim + c, k)
        })
        .collect();
    let positions: Vec<(usize, usize)> = basis.iter().map(|kb| kb.position(shape)).collect();
    let size = basis.len();
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    for term in ch.terms() {
        let map = term.perm.hilbert_map(shape);
        for (b, &(r, c)) in positions.iter().enumerate() {
            let a = index[&(map[r] * dim + map[c])];
            matrix[(a, b)] += term.weight;
        }
    }
    Ok(SectorBlock { gamma: gamma.clone(), basis, matrix })
}

/// Applies `ch` sector by sector, never forming the dense superoperator.
pub fn apply_blockwise(ch: &FuzzyChannel, rho: &DenseOperator) -> Result<DenseOperator> {
    let shape = ch.shape();
    if rho.shape() != shape {
        return Err(Error::Dimension(format!(
            "channel on {shape} applied to operator on {}",
            rho.shape()
        )));
    }
    let mut out = DMatrix::<C64>::zeros(rho.dim(), rho.dim());
    for gamma in enumerate_sectors(shape) {
        let blk = block(ch, &gamma)?;
        let positions: Vec<(usize, usize)> = blk.basis.iter().map(|kb| kb.position(shape)).collect();
        for (a, &(ra, ca)) in positions.iter().enumerate() {
            out[(ra, ca)] = positions
                .iter()
                .enumerate()
                .map(|(b, &(rb, cb))| rho.get(rb, cb) * blk.matrix[(a, b)])
                .sum();
        }
    }
    DenseOperator::from_matrix(shape, out)
}

/// The sector's reference ket-bra: `γ_00` copies of `|0><0|`, then `γ_01`
/// copies of `|0><1|`, and so on in row-major order of `(l, l')`.
pub fn reference_ketbra(gamma: &GammaSignature) -> KetBra {
    let d = gamma.d;
    let mut x = Vec::with_capacity(gamma.n());
    let mut y = Vec::with_capacity(gamma.n());
    for (label, &c) in gamma.counts.iter().enumerate() {
        for _ in 0..c {
            x.push((label / d) as u8);
            y.push((label % d) as u8);
        }
    }
    KetBra { x, y }
}

/// Permutation taking `kb` to its reference ket-bra: a stable sort of the
/// particles by single-particle label `(x_i, y_i)`.
fn to_reference(kb: &KetBra, d: usize) -> Permutation {
    let mut order: Vec<usize> = (0..kb.n()).collect();
    order.sort_by_key(|&i| kb.x[i] as usize * d + kb.y[i] as usize);
    let mut image = vec![0; kb.n()];
    for (slot, &particle) in order.iter().enumerate() {
        image[particle] = slot;
    }
    Permutation::new(image).expect("sorting yields a bijection")
}

/// A permutation `P` with `P |x1><y1| P† = |x2><y2|`, built by routing
/// through the common reference ket-bra.
pub fn connecting_permutation(kb1: &KetBra, kb2: &KetBra, d: usize) -> Result<Permutation> {
    if kb1.n() != kb2.n() || gamma_of(kb1, d) != gamma_of(kb2, d) {
        return Err(Error::NoConnection);
    }
    let p1 = to_reference(kb1, d);
    let p2 = to_reference(kb2, d);
    Ok(p2.inverse().compose(&p1))
}

/// Images of `gamma` under transposition and independent relabelings of
/// ket levels and bra levels.
pub fn gamma_orbit(gamma: &GammaSignature) -> BTreeSet<GammaSignature> {
    let d = gamma.d;
    let relabelings = Permutation::all(d);
    let mut orbit = BTreeSet::new();
    for g in [gamma.clone(), gamma.transpose()] {
        for rows in &relabelings {
            for cols in &relabelings {
                let mut counts = vec![0; d * d];
                for l in 0..d {
                    for m in 0..d {
                        counts[rows.apply(l) * d + cols.apply(m)] = g.get(l, m);
                    }
                }
                orbit.insert(GammaSignature { d, counts });
            }
        }
    }
    orbit
}

/// Lexicographically smallest member of the orbit; blocks of signatures with
/// the same canonical form have identical spectra.
pub fn canonical_gamma(gamma: &GammaSignature) -> GammaSignature {
    gamma_orbit(gamma).into_iter().next().expect("orbit contains gamma itself")
}

/// Qubit sector parametrization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSectorLabel {
    /// Excitations in the ket, `γ_10 + γ_11`.
    pub alpha: usize,
    /// Excitations in the bra, `γ_01 + γ_11`.
    pub beta: usize,
    pub gamma11: usize,
    /// Orbit size under transposition and level relabelings.
    pub degeneracy: usize,
}

pub fn qubit_label(gamma: &GammaSignature) -> Result<QubitSectorLabel> {
    if gamma.d != 2 {
        return Err(Error::InvalidArgument(format!(
            "qubit labels need d = 2, got d = {}",
            gamma.d
        )));
    }
    Ok(QubitSectorLabel {
        alpha: gamma.get(1, 0) + gamma.get(1, 1),
        beta: gamma.get(0, 1) + gamma.get(1, 1),
        gamma11: gamma.get(1, 1),
        degeneracy: gamma_orbit(gamma).len(),
    })
}

/// Per-block spectrum record: `{"gamma": [[..]], "size": int, "eigenvalues": [[re, im]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockReport {
    pub gamma: GammaSignature,
    pub size: usize,
    #[serde(serialize_with = "crate::report::serialize_complex_list")]
    pub eigenvalues: Vec<[f64; 2]>,
}

impl BlockReport {
    pub fn new(gamma: GammaSignature, eigenvalues: &[C64]) -> Self {
        BlockReport {
            gamma,
            size: eigenvalues.len(),
            eigenvalues: eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("block reports always serialize")
    }
}
