//! Dense multi-particle operator algebra.
//!
//! Operators on `n` particles of local dimension `d` are stored as dense
//! `d^n x d^n` complex matrices. A row or column index is read as a base-`d`
//! digit string with particle 0 in the most significant position.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used by Hermiticity and positivity checks.
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Number of particles and local dimension of a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemShape {
    n: usize,
    d: usize,
}

impl SystemShape {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("particle count must be positive".into()));
        }
        if !(2..=256).contains(&d) {
            return Err(Error::InvalidArgument(format!(
                "local dimension must lie in 2..=256, got {d}"
            )));
        }
        let shape = SystemShape { n, d };
        shape.checked_hilbert_dim().ok_or_else(|| {
            Error::Budget(format!("{d}^{n} does not fit in machine addressing"))
        })?;
        Ok(shape)
    }

    /// Shape of the scalar left over when every particle is traced out.
    pub(crate) fn scalar(d: usize) -> Self {
        SystemShape { n: 0, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn checked_hilbert_dim(&self) -> Option<usize> {
        self.d.checked_pow(self.n as u32)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// Dimension of the operator space, `d^(2n)`, if it fits in a `usize`.
    pub fn operator_dim(&self) -> Option<usize> {
        self.hilbert_dim().checked_mul(self.hilbert_dim())
    }

    /// Digits of a Hilbert-space index, particle 0 first.
    pub fn digits(&self, mut index: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.n];
        for slot in out.iter_mut().rev() {
            *slot = (index % self.d) as u8;
            index /= self.d;
        }
        out
    }

    pub fn index(&self, digits: &[u8]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.d + x as usize)
    }

    /// Place value of particle `i` in a Hilbert-space index.
    pub fn stride(&self, i: usize) -> usize {
        self.d.pow((self.n - 1 - i) as u32)
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}, d={}", self.n, self.d)
    }
}

/// A bijection on particle labels `0..n`. Particle `i` is moved to
/// position `image[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    image: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(image: Vec<usize>) -> Result<Self> {
        Permutation::new(image)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.image
    }
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &j in &image {
            if j >= n || seen[j] {
                return Err(Error::InvalidArgument(format!("{image:?} is not a bijection")));
            }
            seen[j] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (0..n).collect() }
    }

    /// The swap of particles `i` and `j` (the identity when `i == j`).
    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n });
        }
        let mut image: Vec<usize> = (0..n).collect();
        image.swap(i, j);
        Ok(Permutation { image })
    }

    /// Every permutation of `n` labels, in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut current: Vec<usize> = (0..n).collect();
        let mut out = vec![Permutation { image: current.clone() }];
        loop {
            let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| current[k] < current[k + 1])
            else {
                return out;
            };
            let l = (k + 1..n).rev().find(|&l| current[k] < current[l]).unwrap();
            current.swap(k, l);
            current[k + 1..].reverse();
            out.push(Permutation { image: current.clone() });
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Permutation) -> Permutation {
        assert_eq!(self.len(), inner.len(), "composing permutations of different sizes");
        Permutation { image: inner.image.iter().map(|&j| self.image[j]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut image = vec![0; self.len()];
        for (i, &j) in self.image.iter().enumerate() {
            image[j] = i;
        }
        Permutation { image }
    }

    /// Relabel a digit string: `out[P(i)] = digits[i]`.
    pub fn act_on_digits(&self, digits: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; digits.len()];
        for (i, &x) in digits.iter().enumerate() {
            out[self.image[i]] = x;
        }
        out
    }

    /// Table of the induced map on Hilbert-space indices.
    pub fn hilbert_map(&self, shape: SystemShape) -> Vec<usize> {
        assert_eq!(self.len(), shape.n());
        let dim = shape.hilbert_dim();
        let strides: Vec<usize> = (0..shape.n()).map(|i| shape.stride(i)).collect();
        let mut map = vec![0usize; dim];
        let mut digits = vec![0usize; shape.n()];
        for (index, slot) in map.iter_mut().enumerate() {
            let mut rest = index;
            for k in (0..shape.n()).rev() {
                digits[k] = rest % shape.d();
                rest /= shape.d();
            }
            *slot = digits
                .iter()
                .enumerate()
                .map(|(i, &x)| x * strides[self.image[i]])
                .sum();
        }
        map
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.image)
    }
}

/// A computational-basis ket-bra `|x><y|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KetBra {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

impl KetBra {
    pub fn new(shape: SystemShape, x: Vec<u8>, y: Vec<u8>) -> Result<Self> {
        if x.len() != shape.n() || y.len() != shape.n() {
            return Err(Error::Dimension(format!(
                "ket-bra digit strings must have length {}",
                shape.n()
            )));
        }
        if x.iter().chain(&y).any(|&v| v as usize >= shape.d()) {
            return Err(Error::InvalidArgument(format!("digit out of range for d={}", shape.d())));
        }
        Ok(KetBra { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn permuted(&self, p: &Permutation) -> KetBra {
        KetBra { x: p.act_on_digits(&self.x), y: p.act_on_digits(&self.y) }
    }

    /// Row and column of the unit entry in the dense representation.
    pub fn position(&self, shape: SystemShape) -> (usize, usize) {
        (shape.index(&self.x), shape.index(&self.y))
    }

    pub fn to_operator(&self, shape: SystemShape) -> DenseOperator {
        let mut op = DenseOperator::zeros(shape);
        let (r, c) = self.position(shape);
        op.data[(r, c)] = C64::new(1.0, 0.0);
        op
    }
}

impl fmt::Display for KetBra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[u8]| v.iter().map(|x| x.to_string()).collect::<String>();
        write!(f, "|{}><{}|", s(&self.x), s(&self.y))
    }
}

/// A dense operator on a multi-particle register.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    shape: SystemShape,
    data: DMatrix<C64>,
}

impl DenseOperator {
    pub fn zeros(shape: SystemShape) -> Self {
        let dim = shape.hilbert_dim();
        DenseOperator { shape, data: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(shape: SystemShape) -> Self {
        let dim = shape.hilbert_dim();
        DenseOperator { shape, data: DMatrix::identity(dim, dim) }
    }

    /// The maximally mixed state `1/d^n`.
    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let mut op = Self::identity(shape);
        op.data /= C64::new(shape.hilbert_dim() as f64, 0.0);
        op
    }

    pub fn from_matrix(shape: SystemShape, data: DMatrix<C64>) -> Result<Self> {
        let dim = shape.hilbert_dim();
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::Dimension(format!(
                "expected a {dim}x{dim} matrix for {shape}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(DenseOperator { shape, data })
    }

    /// `|psi><psi|` for a state vector (not normalized here).
    pub fn pure(shape: SystemShape, psi: &DVector<C64>) -> Result<Self> {
        if psi.len() != shape.hilbert_dim() {
            return Err(Error::Dimension(format!(
                "state vector of length {} for {shape}",
                psi.len()
            )));
        }
        Ok(DenseOperator { shape, data: psi * psi.adjoint() })
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { shape: self.shape, data: self.data.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        DenseOperator { shape: self.shape, data: self.data.transpose() }
    }

    pub fn scaled(&self, s: C64) -> Self {
        DenseOperator { shape: self.shape, data: &self.data * s }
    }

    pub fn add_scaled(&mut self, other: &DenseOperator, s: C64) -> Result<()> {
        self.check_same_shape(other)?;
        self.data += &other.data * s;
        Ok(())
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let data = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        DenseOperator { shape: self.shape, data }
    }

    /// Tensor product with the particles of `other` appended after `self`'s.
    pub fn kron(&self, other: &DenseOperator) -> Result<Self> {
        if self.shape.d() != other.shape.d() {
            return Err(Error::Dimension("tensor product of different local dimensions".into()));
        }
        let shape = SystemShape::new(self.shape.n() + other.shape.n(), self.shape.d())?;
        Ok(DenseOperator { shape, data: self.data.kronecker(&other.data) })
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.hermitian_part().data)
    }

    /// Hermitian, positive semidefinite and unit trace within `tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && (self.trace() - C64::new(1.0, 0.0)).norm() <= tol
            && self.hermitian_eigenvalues().first().is_none_or(|&l| l >= -tol)
    }

    pub(crate) fn check_same_shape(&self, other: &DenseOperator) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "operators on {} and {} cannot be combined",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// `P rho P†` for a particle permutation `P`.
pub fn permute_particles(op: &DenseOperator, p: &Permutation) -> Result<DenseOperator> {
    if p.len() != op.shape.n() {
        return Err(Error::Dimension(format!(
            "permutation on {} particles applied to {}",
            p.len(),
            op.shape
        )));
    }
    let map = p.hilbert_map(op.shape);
    let dim = op.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            out[(map[r], map[c])] = op.data[(r, c)];
        }
    }
    Ok(DenseOperator { shape: op.shape, data: out })
}

/// Trace out the particles in `traced`. Remaining particles keep their
/// relative order. Tracing every particle yields a 1x1 operator holding
/// the full trace.
pub fn partial_trace(op: &DenseOperator, traced: &[usize]) -> Result<DenseOperator> {
    let shape = op.shape;
    let n = shape.n();
    let mut is_traced = vec![false; n];
    for &i in traced {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        is_traced[i] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !is_traced[i]).collect();
    let gone: Vec<usize> = (0..n).filter(|&i| is_traced[i]).collect();
    if gone.is_empty() {
        return Ok(op.clone());
    }
    let out_shape = if kept.is_empty() {
        SystemShape::scalar(shape.d())
    } else {
        SystemShape::new(kept.len(), shape.d())?
    };
    let offsets = |sites: &[usize]| -> Vec<usize> {
        let count = shape.d().pow(sites.len() as u32);
        (0..count)
            .map(|k| {
                let mut rest = k;
                let mut off = 0;
                for &site in sites.iter().rev() {
                    off += (rest % shape.d()) * shape.stride(site);
                    rest /= shape.d();
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept);
    let env_off = offsets(&gone);
    let m = kept_off.len();
    let mut out = DMatrix::zeros(m, m);
    for (a, &ka) in kept_off.iter().enumerate() {
        for (b, &kb) in kept_off.iter().enumerate() {
            out[(a, b)] = env_off.iter().map(|&e| op.data[(ka + e, kb + e)]).sum();
        }
    }
    Ok(DenseOperator { shape: out_shape, data: out })
}

/// Hilbert–Schmidt pairing `Tr(a† b)`.
pub fn hs_inner(a: &DenseOperator, b: &DenseOperator) -> Result<C64> {
    a.check_same_shape(b)?;
    Ok(a.data.iter().zip(b.data.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// A random full-rank density matrix `G†G / Tr(G†G)` with `G` a matrix of
/// independent standard complex Gaussians.
pub fn random_density(shape: SystemShape, seed: u64) -> DenseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = shape.hilbert_dim();
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let mut rho = g.adjoint() * g;
    let tr = rho.trace();
    rho /= tr;
    let rho = DenseOperator { shape, data: rho };
    rho.hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize, d: usize) -> SystemShape {
        SystemShape::new(n, d).unwrap()
    }

    fn ket_op(s: SystemShape, x: &[u8], y: &[u8]) -> DenseOperator {
        KetBra::new(s, x.to_vec(), y.to_vec()).unwrap().to_operator(s)
    }

    /// Explicit permutation matrix `Π|x> = |x'>`, `x'_{P(i)} = x_i`.
    fn permutation_matrix(s: SystemShape, p: &Permutation) -> DMatrix<C64> {
        let dim = s.hilbert_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            let xp = s.index(&p.act_on_digits(&s.digits(x)));
            m[(xp, x)] = C64::new(1.0, 0.0);
        }
        m
    }

    #[test]
    fn shape_validation() {
        assert!(SystemShape::new(0, 2).is_err());
        assert!(SystemShape::new(3, 1).is_err());
        assert!(SystemShape::new(200, 2).is_err());
        let s = shape(3, 3);
        assert_eq!(s.hilbert_dim(), 27);
        assert_eq!(s.digits(5), vec![0, 1, 2]);
        assert_eq!(s.index(&[0, 1, 2]), 5);
    }

    #[test]
    fn permutation_basics() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(Permutation::all(4).len(), 24);
        let all = Permutation::all(3);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identity_permutation_is_noop() {
        let s = shape(3, 2);
        let rho = random_density(s, 4);
        let out = permute_particles(&rho, &Permutation::identity(3)).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn swap_relabels_basis() {
        let s = shape(2, 2);
        let swap = Permutation::transposition(2, 0, 1).unwrap();
        let out = permute_particles(&ket_op(s, &[0, 1], &[0, 1]), &swap).unwrap();
        assert_eq!(out, ket_op(s, &[1, 0], &[1, 0]));
    }

    #[test]
    fn three_cycle_matches_explicit_conjugation() {
        let s = shape(3, 2);
        let cycle = Permutation::new(vec![1, 2, 0]).unwrap();
        let rho = ket_op(s, &[0, 0, 1], &[0, 1, 0]);
        let out = permute_particles(&rho, &cycle).unwrap();
        assert_eq!(out, ket_op(s, &[1, 0, 0], &[0, 0, 1]));
        let pm = permutation_matrix(s, &cycle);
        let oracle = &pm * rho.matrix() * pm.adjoint();
        assert_eq!(out.matrix(), &oracle);
    }

    #[test]
    fn permute_rejects_wrong_size() {
        let rho = random_density(shape(2, 2), 1);
        assert!(permute_particles(&rho, &Permutation::identity(3)).is_err());
    }

    #[test]
    fn permutation_action_composes_exhaustively() {
        for n in 1..=4 {
            let s = shape(n, 2);
            let rho = random_density(s, 10 + n as u64);
            let perms = Permutation::all(n);
            for p in &perms {
                let once = permute_particles(&rho, p).unwrap();
                for q in &perms {
                    let twice = permute_particles(&once, q).unwrap();
                    let direct = permute_particles(&rho, &q.compose(p)).unwrap();
                    assert!(twice.max_abs_diff(&direct) == 0.0);
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let one = shape(1, 2);
        let sigma = random_density(one, 1);
        let tau = random_density(one, 2).scaled(C64::new(3.0, 0.0));
        let prod = sigma.kron(&tau).unwrap();
        let reduced = partial_trace(&prod, &[1]).unwrap();
        let expected = sigma.scaled(tau.trace());
        assert!(reduced.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = shape(2, 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = DVector::from_vec(vec![
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
        ]);
        let bell = DenseOperator::pure(s, &psi).unwrap();
        for k in 0..2 {
            let r = partial_trace(&bell, &[k]).unwrap();
            assert!(r.max_abs_diff(&DenseOperator::maximally_mixed(shape(1, 2))) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let s = shape(3, 2);
        let rho = random_density(s, 77);
        let r = partial_trace(&rho, &[0, 2]).unwrap();
        assert_eq!(r.dim(), 2);
        for a in 0..2u8 {
            for b in 0..2u8 {
                let mut acc = C64::new(0.0, 0.0);
                for e0 in 0..2u8 {
                    for e2 in 0..2u8 {
                        let row = s.index(&[e0, a, e2]);
                        let col = s.index(&[e0, b, e2]);
                        acc += rho.get(row, col);
                    }
                }
                assert!((r.get(a as usize, b as usize) - acc).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_edges() {
        let rho = random_density(shape(2, 3), 5);
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
        let scalar = partial_trace(&rho, &[0, 1]).unwrap();
        assert_eq!(scalar.dim(), 1);
        assert!((scalar.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_commutes_with_untouched_permutations() {
        let s = shape(4, 2);
        let rho = random_density(s, 31);
        // Swap particles 1 and 3, tracing {0, 2}: kept particles 1, 3 become 0, 1.
        let p = Permutation::transposition(4, 1, 3).unwrap();
        let lhs = partial_trace(&permute_particles(&rho, &p).unwrap(), &[0, 2]).unwrap();
        let induced = Permutation::transposition(2, 0, 1).unwrap();
        let rhs = permute_particles(&partial_trace(&rho, &[0, 2]).unwrap(), &induced).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn hs_inner_cases() {
        let s = shape(2, 2);
        let mut psi = DVector::from_element(4, C64::new(0.0, 0.0));
        psi[1] = C64::new(0.6, 0.0);
        psi[2] = C64::new(0.0, 0.8);
        let pure = DenseOperator::pure(s, &psi).unwrap();
        assert!((hs_inner(&pure, &pure).unwrap() - 1.0).norm() < 1e-15);

        let a = ket_op(s, &[0, 1], &[1, 1]);
        let b = ket_op(s, &[0, 1], &[1, 0]);
        assert_eq!(hs_inner(&a, &a).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(hs_inner(&a, &b).unwrap(), C64::new(0.0, 0.0));

        let r1 = random_density(s, 1);
        let r2 = DenseOperator::from_matrix(
            s,
            DMatrix::from_fn(4, 4, |r, c| C64::new(r as f64 - 1.5, c as f64 * 0.25)),
        )
        .unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                acc += r1.get(r, c).conj() * r2.get(r, c);
            }
        }
        let got = hs_inner(&r1, &r2).unwrap();
        assert!((got - acc).norm() < 1e-14);
        assert!((hs_inner(&r2, &r1).unwrap() - got.conj()).norm() < 1e-14);
        assert!(hs_inner(&r1, &random_density(shape(3, 2), 0)).is_err());
    }

    #[test]
    fn hs_inner_moves_permutation_across() {
        let s = shape(3, 2);
        let rho = random_density(s, 8);
        let sigma = random_density(s, 9);
        for p in Permutation::all(3) {
            let lhs = hs_inner(&rho, &permute_particles(&sigma, &p).unwrap()).unwrap();
            let rhs = hs_inner(&permute_particles(&rho, &p.inverse()).unwrap(), &sigma).unwrap();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn random_density_contract() {
        let s = shape(3, 2);
        for seed in 0..5 {
            let rho = random_density(s, seed);
            assert!(rho.hermitian_eigenvalues()[0] >= -1e-12);
            assert!((rho.trace() - 1.0).norm() <= 1e-12);
            assert!(rho.is_density(PHYSICAL_TOL));
            assert_eq!(rho, random_density(s, seed));
            assert_ne!(rho, random_density(s, seed + 1));
        }
    }
}
