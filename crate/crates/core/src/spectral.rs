//! Spectra, invariant states and volume contraction of fuzzy channels.
//!
//! Every quantity here is computed sector by sector: the spectrum of a
//! fuzzy channel is the union of the spectra of its `γ` blocks, so the
//! `d^(2n)`-dimensional superoperator is never formed.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{fuzzy_random_with, realization_rng, FuzzyChannel, RandomModel, SimplexSampling};
use crate::error::{Error, Result};
use crate::linalg;
use crate::report::{csv_row, fmt_f64};
use crate::symmetry::{block, enumerate_sectors, sector_basis, sector_count, BlockReport, GammaSignature};
use crate::tensor::{permute_particles, DenseOperator, Permutation, SystemShape, C64, PHYSICAL_TOL};

/// Eigenvalues within this distance of 1 count as unit eigenvalues.
pub const UNIT_TOL: f64 = 1e-9;

/// Moduli within this distance of 1 are excluded from the spectral gap.
pub const GAP_TOL: f64 = 1e-9;

/// Largest sector handed to the dense eigensolver.
pub const DEFAULT_MAX_BLOCK: usize = 5000;

pub fn is_unit(z: &C64) -> bool {
    (z - 1.0).norm() < UNIT_TOL
}

/// Eigenvalues of one sector block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpectrum {
    pub gamma: GammaSignature,
    pub eigenvalues: Vec<C64>,
}

/// Sign and log-modulus of a product of eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeRatio {
    /// `sum log|λ|`.
    pub log_abs: f64,
    /// Sign of the determinant: `±1`, or `0` when an eigenvalue vanishes.
    pub sign: f64,
}

impl VolumeRatio {
    fn from_eigenvalues<'a>(eigenvalues: impl IntoIterator<Item = &'a C64>) -> Self {
        let mut log_abs = 0.0;
        let mut sign = 1.0;
        for z in eigenvalues {
            log_abs += z.norm().ln();
            // complex eigenvalues come in conjugate pairs with positive product
            if z.im == 0.0 {
                sign *= z.re.signum();
            }
            if z.norm() == 0.0 {
                sign = 0.0;
            }
        }
        VolumeRatio { log_abs, sign }
    }

    /// `|det|`, the factor by which state-space volume shrinks.
    pub fn ratio(&self) -> f64 {
        self.log_abs.exp()
    }

    pub fn signed(&self) -> f64 {
        self.sign * self.ratio()
    }
}

/// Spectrum of a channel assembled from its sector blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// All eigenvalues, by block then by decreasing modulus and increasing phase.
    pub eigenvalues: Vec<C64>,
    pub unit_count: usize,
    /// `1 − max{|λ| : |λ| < 1 − GAP_TOL}`; `None` when every eigenvalue has unit modulus.
    pub spectral_gap: Option<f64>,
    pub log_volume_ratio: f64,
    pub volume_sign: f64,
    pub per_block: Vec<BlockSpectrum>,
}

impl SpectralReport {
    pub fn from_blocks(per_block: Vec<BlockSpectrum>) -> Self {
        let eigenvalues: Vec<C64> =
            per_block.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect();
        let unit_count = eigenvalues.iter().filter(|z| is_unit(z)).count();
        let spectral_gap = eigenvalues
            .iter()
            .map(|z| z.norm())
            .filter(|&m| m < 1.0 - GAP_TOL)
            .reduce(f64::max)
            .map(|m| 1.0 - m);
        let volume = VolumeRatio::from_eigenvalues(&eigenvalues);
        SpectralReport {
            eigenvalues,
            unit_count,
            spectral_gap,
            log_volume_ratio: volume.log_abs,
            volume_sign: volume.sign,
            per_block,
        }
    }

    pub fn volume(&self) -> VolumeRatio {
        VolumeRatio { log_abs: self.log_volume_ratio, sign: self.volume_sign }
    }

    pub fn non_unit(&self) -> Vec<C64> {
        self.eigenvalues.iter().copied().filter(|z| !is_unit(z)).collect()
    }

    pub fn block_reports(&self) -> Vec<BlockReport> {
        self.per_block.iter().map(|b| BlockReport::new(b.gamma.clone(), &b.eigenvalues)).collect()
    }

    /// Rows `block_gamma,re,im`, with the signature quoted as `"g00,g01;g10,g11"`.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for b in &self.per_block {
            let label = format!("\"{}\"", b.gamma);
            for z in &b.eigenvalues {
                out.push_str(&csv_row([label.clone(), fmt_f64(z.re), fmt_f64(z.im)]));
            }
        }
        out
    }
}

pub fn block_spectrum(ch: &FuzzyChannel, gamma: &GammaSignature, max_block: usize) -> Result<BlockSpectrum> {
    let size = gamma.sector_size();
    if size > max_block as u128 {
        return Err(Error::Budget(format!(
            "sector {gamma} has {size} ket-bras, eigensolver budget is {max_block}"
        )));
    }
    let eigenvalues = block(ch, gamma)?.eigenvalues()?;
    Ok(BlockSpectrum { gamma: gamma.clone(), eigenvalues })
}

pub fn full_spectrum(ch: &FuzzyChannel) -> Result<SpectralReport> {
    full_spectrum_with_budget(ch, DEFAULT_MAX_BLOCK)
}

pub fn full_spectrum_with_budget(ch: &FuzzyChannel, max_block: usize) -> Result<SpectralReport> {
    let per_block = enumerate_sectors(ch.shape())
        .iter()
        .map(|gamma| block_spectrum(ch, gamma, max_block))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport::from_blocks(per_block))
}

/// Checks `Spec(p·1 + (1 − p)F) = p + (1 − p)·Spec(F)` block by block, to `UNIT_TOL`.
pub fn rescaled_spectrum_identity_check(ch: &FuzzyChannel, p: f64) -> Result<bool> {
    let mixed = ch.mixed_with_identity(p)?;
    for gamma in enumerate_sectors(ch.shape()) {
        let base = block_spectrum(ch, &gamma, DEFAULT_MAX_BLOCK)?;
        let shifted: Vec<C64> = base.eigenvalues.iter().map(|z| z * (1.0 - p) + p).collect();
        let direct = block_spectrum(&mixed, &gamma, DEFAULT_MAX_BLOCK)?;
        if !linalg::multiset_close(&shifted, &direct.eigenvalues, UNIT_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Determinant of the superoperator, from the block spectra.
pub fn volume_ratio(ch: &FuzzyChannel) -> Result<VolumeRatio> {
    Ok(full_spectrum(ch)?.volume())
}

/// Number of non-unit eigenvalues of a generic channel, `d^(2n) − C(d² + n − 1, n)`.
pub fn ansatz_exponent(d: usize, n: usize) -> Result<u128> {
    let shape = SystemShape::new(n, d)?;
    let total = (d as u128).checked_pow(2 * n as u32).ok_or_else(|| {
        Error::Budget(format!("d^(2n) overflows for d={d}, n={n}"))
    })?;
    Ok(total - sector_count(shape))
}

/// Natural log of [`ansatz_volume`].
pub fn ansatz_log_volume(d: usize, n: usize, p: f64) -> Result<f64> {
    Ok(ansatz_exponent(d, n)? as f64 * p.ln())
}

/// `p^(d^(2n) − C(d² + n − 1, n))`: every non-unit eigenvalue replaced by `p`.
pub fn ansatz_volume(d: usize, n: usize, p: f64) -> Result<f64> {
    Ok(ansatz_log_volume(d, n, p)?.exp())
}

/// Uniform combination `(1/|B_γ|) sum_{kb in B_γ} kb` of a sector's ket-bras.
pub fn invariant_state(gamma: &GammaSignature, shape: SystemShape) -> Result<DenseOperator> {
    let basis = sector_basis(gamma, shape)?;
    let weight = C64::new(1.0 / basis.len() as f64, 0.0);
    let mut out = DenseOperator::zeros(shape);
    for kb in &basis {
        out.add_scaled(&kb.to_operator(shape), weight)?;
    }
    Ok(out)
}

/// Outcome of [`check_group_invariance`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroupInvariance {
    /// `F[Δ] = Δ`.
    pub fixed: bool,
    /// `P[Δ] = Δ` for every permutation with positive weight (checked only when fixed).
    pub generators_invariant: bool,
    /// `P[Δ] = Δ` for sampled products of those permutations.
    pub products_invariant: bool,
    pub products_checked: usize,
}

const PRODUCT_SAMPLES: usize = 64;

/// Tests whether a positive-definite `Δ` is fixed by `ch`, and if so whether
/// it is invariant under the group generated by the channel's permutations.
pub fn check_group_invariance(ch: &FuzzyChannel, delta: &DenseOperator) -> Result<GroupInvariance> {
    if !delta.is_hermitian(PHYSICAL_TOL) {
        return Err(Error::Domain("operator is not Hermitian".into()));
    }
    let lowest = delta.hermitian_eigenvalues()[0];
    if lowest <= PHYSICAL_TOL {
        return Err(Error::Domain(format!(
            "operator is not positive definite (smallest eigenvalue {lowest:e})"
        )));
    }
    let scale = delta.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = PHYSICAL_TOL * scale.max(1.0);
    let fixed = ch.apply(delta)?.max_abs_diff(delta) <= tol;
    if !fixed {
        return Ok(GroupInvariance {
            fixed,
            generators_invariant: false,
            products_invariant: false,
            products_checked: 0,
        });
    }
    let invariant = |p: &Permutation| -> Result<bool> {
        Ok(permute_particles(delta, p)?.max_abs_diff(delta) <= tol)
    };
    let generators: Vec<&Permutation> = ch.terms().iter().map(|t| &t.perm).collect();
    let mut generators_invariant = true;
    for p in &generators {
        generators_invariant &= invariant(p)?;
    }
    let n = ch.shape().n();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut products_invariant = true;
    for _ in 0..PRODUCT_SAMPLES {
        let len = rng.random_range(2..=2 * n.max(1));
        let word = (0..len).fold(Permutation::identity(n), |acc, _| {
            generators[rng.random_range(0..generators.len())].compose(&acc)
        });
        products_invariant &= invariant(&word)?;
    }
    Ok(GroupInvariance {
        fixed,
        generators_invariant,
        products_invariant,
        products_checked: PRODUCT_SAMPLES,
    })
}

/// A random positive-definite fixed point of `ch`: a random combination of
/// the unit eigenvectors of every sector block, made Hermitian and shifted
/// by a multiple of the identity.
pub fn random_fixed_point(ch: &FuzzyChannel, seed: u64) -> Result<DenseOperator> {
    let shape = ch.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = shape.hilbert_dim();
    let mut acc = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for gamma in enumerate_sectors(shape) {
        let blk = block(ch, &gamma)?;
        for v in linalg::unit_eigenvectors(&blk.matrix, 1e-9) {
            let coeff = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for (kb, &amp) in blk.basis.iter().zip(v.iter()) {
                let (r, c) = kb.position(shape);
                acc[(r, c)] += coeff * amp;
            }
        }
    }
    let herm = DenseOperator::from_matrix(shape, acc)?.hermitian_part();
    let lowest = herm.hermitian_eigenvalues()[0];
    let mut delta = herm;
    delta.add_scaled(&DenseOperator::identity(shape), C64::new(lowest.abs() + 1.0, 0.0))?;
    Ok(delta)
}

/// Von Neumann entropy `−Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DenseOperator) -> f64 {
    rho.hermitian_eigenvalues().iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

/// Result of comparing `F[ρ]` with `ρ` in the majorization order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MajorizationReport {
    /// Every partial sum of the decreasing spectrum of `F[ρ]` is at most that of `ρ`.
    pub majorized: bool,
    /// Largest excess of a partial sum of `F[ρ]` over that of `ρ` (≤ 0 when strict).
    pub max_excess: f64,
    pub entropy_before: f64,
    pub entropy_after: f64,
}

impl MajorizationReport {
    pub fn entropy_nondecreasing(&self) -> bool {
        self.entropy_after >= self.entropy_before - PHYSICAL_TOL
    }
}

pub fn majorization_check(ch: &FuzzyChannel, rho: &DenseOperator) -> Result<MajorizationReport> {
    if !rho.is_density(PHYSICAL_TOL) {
        return Err(Error::Domain("input is not a density matrix".into()));
    }
    let out = ch.apply(rho)?;
    let descending = |op: &DenseOperator| {
        let mut ev = op.hermitian_eigenvalues();
        ev.reverse();
        ev
    };
    let before = descending(rho);
    let after = descending(&out);
    let mut max_excess = f64::NEG_INFINITY;
    let (mut sb, mut sa) = (0.0, 0.0);
    for (b, a) in before.iter().zip(&after) {
        sb += b;
        sa += a;
        max_excess = max_excess.max(sa - sb);
    }
    Ok(MajorizationReport {
        majorized: max_excess <= PHYSICAL_TOL,
        max_excess,
        entropy_before: von_neumann_entropy(rho),
        entropy_after: von_neumann_entropy(&out),
    })
}

/// Non-unit block eigenvalues collected over random channel realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpectrum {
    pub model: RandomModel,
    pub realizations: usize,
    /// Samples in realization order; realization `r` owns `samples[offsets[r]..offsets[r + 1]]`.
    pub samples: Vec<C64>,
    pub offsets: Vec<usize>,
    pub mean: C64,
    /// `sqrt(mean |λ − mean|²)`.
    pub std: f64,
}

/// One histogram bin over the real parts of the samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub density: f64,
    /// Spread of the density over realization groups, when requested.
    pub density_std: Option<f64>,
}

impl EnsembleSpectrum {
    fn from_samples(model: RandomModel, samples: Vec<C64>, offsets: Vec<usize>) -> Self {
        let count = samples.len().max(1) as f64;
        let mean = samples.iter().sum::<C64>() / count;
        let std = (samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / count).sqrt();
        EnsembleSpectrum { model, realizations: offsets.len() - 1, samples, offsets, mean, std }
    }

    pub fn realization(&self, r: usize) -> &[C64] {
        &self.samples[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    fn range(&self) -> (f64, f64) {
        let lo = self.samples.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || lo == hi {
            let c = if lo.is_finite() { lo } else { 0.0 };
            (c - 0.5, c + 0.5)
        } else {
            (lo, hi)
        }
    }

    fn densities(values: &[C64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for z in values {
            let k = (((z.re - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let total = values.len().max(1) as f64;
        counts.iter().map(|&c| c as f64 / (total * width)).collect()
    }

    /// Density histogram of the real parts over `bins` equal-width bins.
    /// With `groups > 1`, realizations are split into that many contiguous
    /// groups and the standard deviation of the per-group densities is
    /// reported for each bin.
    pub fn histogram(&self, bins: usize, groups: usize) -> Vec<HistogramBin> {
        let bins = bins.max(1);
        let (lo, hi) = self.range();
        let width = (hi - lo) / bins as f64;
        let density = Self::densities(&self.samples, lo, hi, bins);
        let spread = (groups > 1 && self.realizations >= groups).then(|| {
            let per_group: Vec<Vec<f64>> = (0..groups)
                .map(|g| {
                    let first = g * self.realizations / groups;
                    let last = (g + 1) * self.realizations / groups;
                    let slice = &self.samples[self.offsets[first]..self.offsets[last]];
                    Self::densities(slice, lo, hi, bins)
                })
                .collect();
            (0..bins)
                .map(|k| {
                    let m = per_group.iter().map(|d| d[k]).sum::<f64>() / groups as f64;
                    (per_group.iter().map(|d| (d[k] - m).powi(2)).sum::<f64>() / (groups - 1) as f64)
                        .sqrt()
                })
                .collect::<Vec<f64>>()
        });
        (0..bins)
            .map(|k| HistogramBin {
                left: lo + k as f64 * width,
                right: lo + (k + 1) as f64 * width,
                density: density[k],
                density_std: spread.as_ref().map(|s| s[k]),
            })
            .collect()
    }
}

/// Draws `realizations` random channels of `model` and collects the non-unit
/// eigenvalues of their `gamma` block. Realization `r` uses
/// [`realization_rng`]`(seed, r)`.
pub fn ensemble_spectrum(
    model: RandomModel,
    shape: SystemShape,
    p: f64,
    gamma: &GammaSignature,
    realizations: usize,
    seed: u64,
) -> Result<EnsembleSpectrum> {
    ensemble_spectrum_with(model, shape, p, gamma, realizations, seed, SimplexSampling::default())
}

pub fn ensemble_spectrum_with(
    model: RandomModel,
    shape: SystemShape,
    p: f64,
    gamma: &GammaSignature,
    realizations: usize,
    seed: u64,
    sampling: SimplexSampling,
) -> Result<EnsembleSpectrum> {
    if realizations == 0 {
        return Err(Error::InvalidArgument("at least one realization is required".into()));
    }
    let mut samples = Vec::new();
    let mut offsets = vec![0];
    for r in 0..realizations {
        let mut rng = realization_rng(seed, r as u64);
        let ch = fuzzy_random_with(shape, p, model, sampling, &mut rng)?;
        let spectrum = block_spectrum(&ch, gamma, DEFAULT_MAX_BLOCK)?;
        samples.extend(spectrum.eigenvalues.into_iter().filter(|z| !is_unit(z)));
        offsets.push(samples.len());
    }
    Ok(EnsembleSpectrum::from_samples(model, samples, offsets))
}

/// One row of a volume scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub n: usize,
    /// `sum log|λ|` of a single realization.
    pub log_ratio_measured: f64,
    /// `(d^(2n) − C(d² + n − 1, n)) · ln p`.
    pub log_ratio_ansatz: f64,
    /// `(d^(2n) − C(d² + n − 1, n)) · ln c`, `c` the mean modulus of the
    /// realization's non-unit eigenvalues.
    pub log_ratio_empirical: f64,
    pub cluster_center: f64,
    pub non_unit_count: usize,
}

/// One random channel per `n`, comparing its measured volume contraction
/// with the constant-eigenvalue estimates. The channel for particle count
/// `n` uses [`realization_rng`]`(seed, n)`.
pub fn volume_scan(
    model: RandomModel,
    d: usize,
    p: f64,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<VolumeRow>> {
    n_range
        .map(|n| {
            let shape = SystemShape::new(n, d)?;
            let mut rng = realization_rng(seed, n as u64);
            let ch = fuzzy_random_with(shape, p, model, SimplexSampling::default(), &mut rng)?;
            let report = full_spectrum(&ch)?;
            let non_unit = report.non_unit();
            let exponent = ansatz_exponent(d, n)? as f64;
            let center = if non_unit.is_empty() {
                1.0
            } else {
                non_unit.iter().map(|z| z.norm()).sum::<f64>() / non_unit.len() as f64
            };
            Ok(VolumeRow {
                n,
                log_ratio_measured: report.log_volume_ratio,
                log_ratio_ansatz: if exponent == 0.0 { 0.0 } else { exponent * p.ln() },
                log_ratio_empirical: if exponent == 0.0 { 0.0 } else { exponent * center.ln() },
                cluster_center: center,
                non_unit_count: non_unit.len(),
            })
        })
        .collect()
}

/// Dense `log|det|` of the superoperator, for cross-checks on small systems.
pub fn dense_log_abs_det(ch: &FuzzyChannel) -> Result<f64> {
    let m = ch.superoperator()?;
    let lu = m.lu();
    let u = lu.u();
    Ok(u.diagonal().iter().map(|z| z.norm().ln()).sum())
}

/// `vec` of an operator in the row-major convention of [`FuzzyChannel::superoperator`].
pub fn vectorize(op: &DenseOperator) -> DVector<C64> {
    let dim = op.dim();
    DVector::from_iterator(dim * dim, (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| op.get(r, c)))
}
