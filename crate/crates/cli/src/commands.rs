use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fuzzgrain::report::{fmt_f64, Float};
use fuzzgrain::spectral::{block_spectrum, DEFAULT_MAX_BLOCK};
use fuzzgrain::symmetry::{qubit_label, sector_count, BlockReport};
use fuzzgrain::xxchain::{DEFAULT_P, DEFAULT_TIMES};
use fuzzgrain::*;
use serde::Serialize;

use crate::output::{emit, render_json, sibling, Format, RunConfig, Table};
use crate::CliError;

type CliResult<T> = std::result::Result<T, CliError>;

/// Sector listings beyond this many rows are refused.
const MAX_SECTORS: u128 = 1_000_000;

#[derive(Args, Debug)]
pub struct Common {
    /// Root seed; realization `r` draws from its own counter-derived stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Random weights on every permutation.
    General,
    /// Random weights on every transposition.
    TwoBody,
    /// Random weights on nearest-neighbor transpositions of a ring.
    Chain,
    /// `p` identity plus `1 - p` swap of particles 0 and 1.
    SwapPair,
    /// `p` identity plus equal weights on every transposition.
    TwoBodyUniform,
    /// `p` identity plus equal weights on the ring's neighbor swaps.
    ChainUniform,
}

impl Model {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    fn random(self) -> Option<RandomModel> {
        match self {
            Model::General => Some(RandomModel::General),
            Model::TwoBody => Some(RandomModel::TwoBody),
            Model::Chain => Some(RandomModel::Chain),
            _ => None,
        }
    }

    fn require_random(self) -> CliResult<RandomModel> {
        self.random().ok_or_else(|| {
            CliError::Usage(format!("model '{}' is not random; use general, two-body or chain", self.name()))
        })
    }

    fn build(self, shape: SystemShape, p: f64, seed: u64) -> CliResult<FuzzyChannel> {
        let ch = match self {
            Model::SwapPair => {
                if shape.n() < 2 {
                    return Err(CliError::Usage("swap-pair needs n >= 2".into()));
                }
                fuzzy_general(
                    shape,
                    vec![(p, Permutation::identity(shape.n())), (1.0 - p, Permutation::transposition(shape.n(), 0, 1)?)],
                )?
            }
            Model::TwoBodyUniform => fuzzy_two_body(shape, p, &uniform_pairs(shape.n()))?,
            Model::ChainUniform => fuzzy_chain(shape, p, &vec![1.0; shape.n()])?,
            random => fuzzy_random(shape, p, random.random().expect("random model"), seed)?,
        };
        Ok(ch)
    }
}

fn parse_gamma(text: &str, shape: SystemShape) -> CliResult<GammaSignature> {
    let gamma: GammaSignature = text.parse()?;
    if gamma.d() != shape.d() || gamma.n() != shape.n() {
        return Err(CliError::Usage(format!(
            "gamma {gamma} describes n={}, d={}, but the system has n={}, d={}",
            gamma.n(),
            gamma.d(),
            shape.n(),
            shape.d()
        )));
    }
    Ok(gamma)
}

fn finish<T: Serialize>(common: &Common, config: &RunConfig, table: impl FnOnce() -> Table, data: &T) -> CliResult<()> {
    let text = match common.format {
        Format::Json => render_json(config, data),
        Format::Csv => table().render(config),
    };
    emit(common.out.as_deref(), &text)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct BlocksArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct SectorRow {
    gamma: GammaSignature,
    size: u128,
    canonical: GammaSignature,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubit: Option<symmetry::QubitSectorLabel>,
}

pub fn blocks(args: BlocksArgs) -> CliResult<()> {
    let shape = SystemShape::new(args.n, args.d)?;
    let count = sector_count(shape);
    if count > MAX_SECTORS {
        return Err(Error::Budget(format!("{count} sectors exceed the listing limit of {MAX_SECTORS}")).into());
    }
    let mut config = RunConfig::new("blocks", args.common.seed, &args.common.out, args.common.format);
    config.n = Some(args.n);
    config.d = Some(args.d);
    let rows = enumerate_sectors(shape)
        .into_iter()
        .map(|gamma| {
            let qubit = if args.d == 2 { Some(qubit_label(&gamma)?) } else { None };
            Ok(SectorRow { size: gamma.sector_size(), canonical: canonical_gamma(&gamma), gamma, qubit })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = || {
        let mut columns = vec!["gamma", "size", "canonical"];
        if args.d == 2 {
            columns.extend(["alpha", "beta", "gamma11", "degeneracy"]);
        }
        let mut text = String::new();
        for row in &rows {
            let mut fields = vec![format!("\"{}\"", row.gamma), row.size.to_string(), format!("\"{}\"", row.canonical)];
            if let Some(q) = row.qubit {
                fields.extend([q.alpha, q.beta, q.gamma11, q.degeneracy].map(|v| v.to_string()));
            }
            text.push_str(&fuzzgrain::report::csv_row(fields));
        }
        Table::new(columns, text)
    };
    finish(&args.common, &config, table, &rows)
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = Model::General)]
    pub model: Model,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Weight of the identity (probability of a correct detection).
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Restrict to one sector, written "g00,g01;g10,g11".
    #[arg(long)]
    pub gamma: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct SpectrumData {
    eigenvalue_count: usize,
    unit_count: usize,
    spectral_gap: Option<Float>,
    log_volume_ratio: Float,
    volume_sign: Float,
    blocks: Vec<BlockReport>,
}

pub fn spectrum(args: SpectrumArgs) -> CliResult<()> {
    let shape = SystemShape::new(args.n, args.d)?;
    let ch = args.model.build(shape, args.p, args.common.seed)?;
    let mut config = RunConfig::new("spectrum", args.common.seed, &args.common.out, args.common.format);
    config.n = Some(args.n);
    config.d = Some(args.d);
    config.p = Some(Float(args.p));
    config.model = Some(args.model.name());
    config.gamma = args.gamma.clone();
    let report = match &args.gamma {
        Some(text) => {
            let gamma = parse_gamma(text, shape)?;
            SpectralReport::from_blocks(vec![block_spectrum(&ch, &gamma, DEFAULT_MAX_BLOCK)?])
        }
        None => full_spectrum(&ch)?,
    };
    let data = SpectrumData {
        eigenvalue_count: report.eigenvalues.len(),
        unit_count: report.unit_count,
        spectral_gap: report.spectral_gap.map(Float),
        log_volume_ratio: Float(report.log_volume_ratio),
        volume_sign: Float(report.volume_sign),
        blocks: report.block_reports(),
    };
    let table = || {
        let mut t = Table::new(vec!["block_gamma", "re", "im"], report.csv_rows());
        t.meta.push(("unit_count".into(), report.unit_count.to_string()));
        t.meta.push(("spectral_gap".into(), report.spectral_gap.map(fmt_f64).unwrap_or_else(|| "none".into())));
        t.meta.push(("log_volume_ratio".into(), fmt_f64(report.log_volume_ratio)));
        t
    };
    finish(&args.common, &config, table, &data)
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    #[arg(long, value_enum, default_value_t = Model::General)]
    pub model: Model,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct VolumeRecord {
    n: usize,
    log_ratio_measured: Float,
    log_ratio_ansatz: Float,
    log_ratio_empirical: Float,
    cluster_center: Float,
    non_unit_count: usize,
}

pub fn volume(args: VolumeArgs) -> CliResult<()> {
    let model = args.model.require_random()?;
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err(CliError::Usage(format!("invalid n range {}..={}", args.n_min, args.n_max)));
    }
    let rows = volume_scan(model, args.d, args.p, args.n_min..=args.n_max, args.common.seed)?;
    let mut config = RunConfig::new("volume", args.common.seed, &args.common.out, args.common.format);
    config.n_min = Some(args.n_min);
    config.n_max = Some(args.n_max);
    config.d = Some(args.d);
    config.p = Some(Float(args.p));
    config.model = Some(args.model.name());
    let records: Vec<VolumeRecord> = rows
        .iter()
        .map(|r| VolumeRecord {
            n: r.n,
            log_ratio_measured: Float(r.log_ratio_measured),
            log_ratio_ansatz: Float(r.log_ratio_ansatz),
            log_ratio_empirical: Float(r.log_ratio_empirical),
            cluster_center: Float(r.cluster_center),
            non_unit_count: r.non_unit_count,
        })
        .collect();
    let table = || {
        let mut text = String::new();
        for r in &rows {
            text.push_str(&fuzzgrain::report::csv_row([
                r.n.to_string(),
                fmt_f64(r.log_ratio_measured),
                fmt_f64(r.log_ratio_ansatz),
                fmt_f64(r.log_ratio_empirical),
                fmt_f64(r.cluster_center),
                r.non_unit_count.to_string(),
            ]));
        }
        Table::new(
            vec!["n", "log_ratio_measured", "log_ratio_ansatz", "log_ratio_empirical", "cluster_center", "non_unit_count"],
            text,
        )
    };
    finish(&args.common, &config, table, &records)
}

#[derive(Args, Debug)]
pub struct EntwaveArgs {
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TIMES)]
    pub t: Vec<f64>,
    /// Schemes, comma separated: exact, fuzzy, cg2, cg4.
    #[arg(long, value_delimiter = ',', default_values_t = ["exact".to_string(), "fuzzy".into(), "cg2".into(), "cg4".into()])]
    pub scheme: Vec<String>,
    /// Probability that the fuzzy detector reads the right site.
    #[arg(long, default_value_t = DEFAULT_P)]
    pub p: f64,
    /// Half-width of the chain window; enlarged automatically when too small.
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct MapRecord {
    t: Float,
    scheme: String,
    p: Option<Float>,
    window: usize,
    labels: Vec<i64>,
    members: Vec<Vec<i64>>,
    max: Float,
    values: Vec<Vec<Float>>,
}

pub fn entwave(args: EntwaveArgs) -> CliResult<()> {
    let schemes = args.scheme.iter().map(|s| Scheme::parse(s, args.p)).collect::<Result<Vec<_>>>()?;
    let mut config = RunConfig::new("entwave", args.common.seed, &args.common.out, args.common.format);
    config.t = Some(args.t.iter().copied().map(Float).collect());
    config.scheme = Some(schemes.iter().map(|s| s.to_string()).collect());
    config.p = Some(Float(args.p));
    config.window = args.window;
    let mut fields = Vec::new();
    for &t in &args.t {
        for &scheme in &schemes {
            fields.push(concurrence_map(t, scheme, args.window)?);
        }
    }
    if let Some(out) = &args.common.out {
        for field in &fields {
            let layouts = match field.scheme {
                Scheme::Grouped { .. } => vec![("matrix", field.clone()), ("sites", field.site_expanded())],
                _ => vec![("matrix", field.clone())],
            };
            for (layout, f) in layouts {
                let mut table = Table::new(vec![], f.matrix_csv());
                table.meta.push(("map".into(), format!("t={} scheme={} window={} layout={layout}", f.t, f.scheme, f.window)));
                let path = sibling(out, &format!("t{}.{}.{layout}.csv", f.t, f.scheme));
                emit(Some(&path), &table.render(&config))?;
            }
        }
    }
    let records: Vec<MapRecord> = fields
        .iter()
        .map(|f| MapRecord {
            t: Float(f.t),
            scheme: f.scheme.to_string(),
            p: f.scheme.p().map(Float),
            window: f.window,
            labels: f.labels.clone(),
            members: f.members.clone(),
            max: Float(f.max()),
            values: f.values.chunks(f.len()).map(|row| row.iter().copied().map(Float).collect()).collect(),
        })
        .collect();
    let table = || {
        let rows = fields.iter().map(|f| f.csv_rows()).collect::<String>();
        Table::new(vec!["t", "scheme", "i", "j", "concurrence", "p", "window"], rows)
    };
    finish(&args.common, &config, table, &records)
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    #[arg(long, value_enum, default_value_t = Model::General)]
    pub model: Model,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Sector, written "g00,g01;g10,g11"; defaults to diag(n - 1, 1, 0, ...).
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct EnsembleSummary {
    realizations: usize,
    samples: usize,
    mean_re: Float,
    mean_im: Float,
    std: Float,
    max_abs_imag: Float,
    groups: usize,
}

#[derive(Serialize)]
struct HistogramRecord {
    left: Float,
    right: Float,
    density: Float,
    density_std: Option<Float>,
}

#[derive(Serialize)]
struct EnsembleData {
    summary: EnsembleSummary,
    histogram: Vec<HistogramRecord>,
}

/// Realization groups used for the spread of the structured models' histograms.
const HISTOGRAM_GROUPS: usize = 10;

pub fn ensemble(args: EnsembleArgs) -> CliResult<()> {
    let model = args.model.require_random()?;
    let shape = SystemShape::new(args.n, args.d)?;
    let gamma = match &args.gamma {
        Some(text) => parse_gamma(text, shape)?,
        None => {
            let mut diag = vec![0; args.d];
            diag[0] = args.n - 1;
            diag[1] = 1;
            GammaSignature::diagonal(&diag)?
        }
    };
    if args.bins == 0 {
        return Err(CliError::Usage("bins must be positive".into()));
    }
    let e = ensemble_spectrum(model, shape, args.p, &gamma, args.realizations, args.common.seed)?;
    let groups = if model == RandomModel::General { 1 } else { HISTOGRAM_GROUPS };
    let mut config = RunConfig::new("ensemble", args.common.seed, &args.common.out, args.common.format);
    config.n = Some(args.n);
    config.d = Some(args.d);
    config.p = Some(Float(args.p));
    config.model = Some(args.model.name());
    config.gamma = Some(gamma.to_string());
    config.realizations = Some(args.realizations);
    config.bins = Some(args.bins);
    let histogram = e.histogram(args.bins, groups);
    let data = EnsembleData {
        summary: EnsembleSummary {
            realizations: e.realizations,
            samples: e.samples.len(),
            mean_re: Float(e.mean.re),
            mean_im: Float(e.mean.im),
            std: Float(e.std),
            max_abs_imag: Float(e.max_abs_imag()),
            groups,
        },
        histogram: histogram
            .iter()
            .map(|b| HistogramRecord {
                left: Float(b.left),
                right: Float(b.right),
                density: Float(b.density),
                density_std: b.density_std.map(Float),
            })
            .collect(),
    };
    let table = || {
        let mut text = String::new();
        for b in &histogram {
            text.push_str(&fuzzgrain::report::csv_row([
                fmt_f64(b.left),
                fmt_f64(b.right),
                fmt_f64(b.density),
                b.density_std.map(fmt_f64).unwrap_or_default(),
            ]));
        }
        let mut t = Table::new(vec!["bin_left", "bin_right", "density", "density_std"], text);
        t.meta.push(("summary".into(), serde_json::to_string(&data.summary).expect("summary serializes")));
        t
    };
    finish(&args.common, &config, table, &data)
}

#[derive(Args, Debug)]
pub struct ChannelArgs {
    #[arg(long, value_enum, default_value_t = Model::General)]
    pub model: Model,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[command(flatten)]
    pub common: Common,
}

pub fn channel(args: ChannelArgs) -> CliResult<()> {
    let shape = SystemShape::new(args.n, args.d)?;
    let ch = args.model.build(shape, args.p, args.common.seed)?;
    let mut config = RunConfig::new("channel", args.common.seed, &args.common.out, args.common.format);
    config.n = Some(args.n);
    config.d = Some(args.d);
    config.p = Some(Float(args.p));
    config.model = Some(args.model.name());
    let table = || {
        let rows = ch
            .terms()
            .iter()
            .map(|t| {
                let perm = t.perm.image().iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                fuzzgrain::report::csv_row([perm, fmt_f64(t.weight)])
            })
            .collect();
        Table::new(vec!["perm", "weight"], rows)
    };
    let text = match args.common.format {
        Format::Json => format!("{{\"config\":{},\"data\":{}}}\n", config.to_json(), ch.to_json()),
        Format::Csv => table().render(&config),
    };
    emit(args.common.out.as_deref(), &text)?;
    Ok(())
}
