//! Fuzzy-measurement and coarse-graining channels on registers of `n`
//! qudits, analyzed through their permutation-symmetry sectors.
//!
//! * [`tensor`]: dense operators, particle permutations, partial traces.
//! * [`channels`]: fuzzy channels (convex mixtures of permutations) and
//!   coarse-graining maps (fuzzy channel plus partial trace).
//! * [`symmetry`]: the `γ` sectors that block-diagonalize every fuzzy channel.
//! * [`spectral`]: spectra, invariant states, volume contraction, ensembles.
//! * [`xxchain`]: single-impurity XX-chain concurrence under imperfect detection.

pub mod bessel;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod report;
pub mod spectral;
pub mod symmetry;
pub mod tensor;
pub mod xxchain;

pub use channels::{
    apply_cg, cg_alternating, cg_groups, cg_uniform_groups, fuzzy_chain, fuzzy_general,
    fuzzy_random, fuzzy_two_body, uniform_pairs, ChannelRecord, CoarseGraining, FuzzyChannel, RandomModel,
    SimplexSampling, Term,
};
pub use error::{Error, Result};
pub use spectral::{
    ansatz_volume, check_group_invariance, ensemble_spectrum, full_spectrum, invariant_state,
    majorization_check, rescaled_spectrum_identity_check, volume_ratio, volume_scan,
    EnsembleSpectrum, SpectralReport, VolumeRatio, VolumeRow,
};
pub use symmetry::{
    apply_blockwise, block, canonical_gamma, connecting_permutation, enumerate_sectors, gamma_of, qubit_label,
    reference_ketbra, sector_basis, GammaSignature, QubitSectorLabel, SectorBlock,
};
pub use tensor::{
    hs_inner, partial_trace, permute_particles, random_density, DenseOperator, KetBra,
    Permutation, SystemShape, C64,
};
pub use xxchain::{
    concurrence, concurrence_map, reduced_pair_state, shift_fuzzy_mixture, ConcurrenceField,
    ImpurityState, Scheme, WeightedStateMixture,
};
