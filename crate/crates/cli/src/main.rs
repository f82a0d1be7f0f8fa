use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use singleshot::confinement::{check_confinement, ConfinementError, ConfinementFunction, EnumerationLimits};
use singleshot::fitting::{
    fit_scaling, fit_sustainable, fit_threshold, FitConfig, FitError, FitResult, Param, ScalingConfig, ThresholdPoint,
};
use singleshot::lattice::embed;
use singleshot::montecarlo::{records_from_csv, run_campaign_on, CampaignError, CampaignSpec, Record};
use singleshot::product_code::{derive_code, BuiltinCode, ClassicalSeed, CodeBundle, CodeError, ProductCode, SCHEMA_VERSION};
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "singleshot", version, about = "Homological product codes and single-shot decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a product code from three seed matrices and write its bundle.
    BuildCode {
        /// Seed file (JSON) or builtin:toric:L, builtin:surface:L, builtin:table1:i.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Skip the per-matrix alist files written next to the bundle.
        #[arg(long)]
        no_alist: bool,
    },
    /// Run a Monte Carlo campaign and write a CSV plus a JSON mirror.
    Simulate {
        /// Code bundles; when absent the campaign's builtin list is used.
        #[arg(long, num_args = 1..)]
        code: Vec<String>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit a model to campaign results.
    Fit {
        #[arg(long, value_enum)]
        kind: FitKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one cycle count.
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        /// Weight points by their inverse squared confidence interval.
        #[arg(long)]
        ci_weighted: bool,
        #[arg(long, default_value_t = singleshot::fitting::DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Threshold used by the scaling fit.
        #[arg(long)]
        p_th: Option<f64>,
        /// Scaling fit: drop even lattice sizes.
        #[arg(long)]
        odd_only: bool,
        #[arg(long, default_value_t = singleshot::fitting::DEFAULT_MIN_FAILURES)]
        min_failures: u64,
    },
    /// Exhaustively check confinement of low-weight errors.
    ConfinementCheck {
        #[arg(long)]
        code: String,
        #[arg(long)]
        t: usize,
        /// cubic, linear:K, constant:C or power:A,B.
        #[arg(long, default_value = "cubic")]
        f: String,
        #[arg(long)]
        out: PathBuf,
        /// Also enumerate X errors against HZ.
        #[arg(long)]
        all_paulis: bool,
        #[arg(long, default_value_t = singleshot::confinement::DEFAULT_WEIGHT_CAP)]
        weight_cap: usize,
        #[arg(long, default_value_t = singleshot::confinement::DEFAULT_MAX_ENUMERATION)]
        max_enumeration: u128,
    },
    /// Write lattice coordinates of every qubit, stabiliser and metacheck.
    LatticeExport {
        #[arg(long)]
        code: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKind {
    Threshold,
    Sustainable,
    Scaling,
}

enum CliError {
    Usage(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Internal(m) => write!(f, "internal consistency error: {m}"),
        }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        match e {
            CodeError::Inconsistent(_) => Self::Internal(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Code(c) => c.into(),
            CampaignError::Protocol(_) => Self::Internal(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<ConfinementError> for CliError {
    fn from(e: ConfinementError) -> Self {
        Self::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parses JSON, reporting the failing field path and position.
fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Usage(format!("{}: field '{field}': {inner}", path.display()))
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write(path, &(text + "\n"))
}

/// Accepted seed files: a list of three matrices, or an object with a
/// `seeds` list whose entries are matrices or `{matrix: ...}` (as in a code
/// bundle).
#[derive(Deserialize)]
#[serde(untagged)]
enum SeedFile {
    Object { seeds: Vec<SeedItem> },
    List(Vec<SeedItem>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedItem {
    Wrapped { matrix: singleshot::gf2::SparseBitMatrix },
    Bare(singleshot::gf2::SparseBitMatrix),
}

fn builtin(arg: &str) -> Result<Option<BuiltinCode>> {
    match arg.strip_prefix("builtin:") {
        Some(_) => arg.parse().map(Some).map_err(CliError::Usage),
        None => Ok(None),
    }
}

fn load_seeds(arg: &str) -> Result<ProductCode> {
    if let Some(b) = builtin(arg)? {
        return Ok(b.build()?);
    }
    let path = Path::new(arg);
    let file: SeedFile = parse_json(path, &read(path)?)?;
    let items = match file {
        SeedFile::Object { seeds } | SeedFile::List(seeds) => seeds,
    };
    let seeds: Vec<ClassicalSeed> = items
        .into_iter()
        .map(|s| match s {
            SeedItem::Wrapped { matrix } | SeedItem::Bare(matrix) => ClassicalSeed::new(matrix),
        })
        .collect();
    let seeds: [ClassicalSeed; 3] =
        seeds.try_into().map_err(|v: Vec<_>| CliError::Usage(format!("expected 3 seed matrices, found {}", v.len())))?;
    Ok(derive_code(seeds)?)
}

/// A code bundle file, or a builtin name.
fn load_code(arg: &str) -> Result<ProductCode> {
    if let Some(b) = builtin(arg)? {
        return Ok(b.build()?);
    }
    let path = Path::new(arg);
    let bundle: CodeBundle = parse_json(path, &read(path)?)?;
    Ok(ProductCode::from_bundle(&bundle)?)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn build_code(seeds: &str, out: &Path, no_alist: bool) -> Result<()> {
    let code = load_seeds(seeds)?;
    if code.k_formula != code.params.k {
        eprintln!("warning: seed formula gives k = {}, ranks give k = {}", code.k_formula, code.params.k);
    }
    let bundle = code.to_bundle();
    write_json(out, &bundle)?;
    if !no_alist {
        for (name, m) in [("hx", &bundle.hx), ("hz", &bundle.hz), ("meta", &bundle.meta)] {
            write(&with_suffix(out, &format!(".{name}.alist")), &m.to_alist())?;
        }
    }
    eprintln!("{}", code.params);
    Ok(())
}

fn simulate(codes: &[String], config: &Path, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let mut spec: CampaignSpec = parse_json(config, &read(config)?)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    let labelled: Vec<(usize, ProductCode)> = if codes.is_empty() {
        if spec.codes.is_empty() {
            return Err(CliError::Usage("no codes: pass --code or list builtin codes in the campaign".into()));
        }
        spec.codes.iter().map(|c| Ok((c.size(), c.build()?))).collect::<Result<_>>()?
    } else {
        // the first seed's length is the lattice size for toric and surface codes
        codes.iter().map(|c| load_code(c).map(|code| (code.seeds[0].n, code))).collect::<Result<_>>()?
    };
    let dataset = run_campaign_on(&spec, &labelled, threads)?;
    write(out, &dataset.to_csv())?;
    write_json(&out.with_extension("json"), &dataset)
}

fn select(records: Vec<Record>, cycles: Option<usize>, p_min: Option<f64>, p_max: Option<f64>) -> Vec<Record> {
    records
        .into_iter()
        .filter(|r| cycles.is_none_or(|n| r.n == n))
        .filter(|r| p_min.is_none_or(|lo| r.p >= lo) && p_max.is_none_or(|hi| r.p <= hi))
        .collect()
}

fn fit(args: &Command) -> Result<()> {
    let Command::Fit {
        kind,
        input,
        out,
        cycles,
        p_min,
        p_max,
        ci_weighted,
        bootstrap,
        seed,
        p_th,
        odd_only,
        min_failures,
    } = args
    else {
        unreachable!()
    };
    let all = records_from_csv(&read(input)?)?;
    let records = select(all, *cycles, *p_min, *p_max);
    if records.is_empty() {
        return Err(CliError::Usage("no records left after filtering".into()));
    }
    let cfg = FitConfig { ci_weighted: *ci_weighted, bootstrap: *bootstrap, seed: *seed, ..FitConfig::default() };
    let ns: BTreeSet<usize> = records.iter().map(|r| r.n).collect();
    let points = |n: usize| -> Vec<ThresholdPoint> { records.iter().filter(|r| r.n == n).map(ThresholdPoint::from).collect() };
    let result: FitResult = match kind {
        FitKind::Threshold => {
            if ns.len() > 1 {
                return Err(CliError::Usage(format!("records span cycle counts {ns:?}; choose one with --cycles")));
            }
            fit_threshold(&points(*ns.first().unwrap()), &cfg)?
        }
        FitKind::Sustainable => {
            let mut per_n = Vec::new();
            let mut aux = Vec::new();
            for &n in &ns {
                let f = fit_threshold(&points(n), &cfg)?;
                let v = f.get("p_th").unwrap();
                aux.push(Param { name: format!("p_th(N={n})"), value: v, stderr: f.stderr("p_th") });
                per_n.push((n, v));
            }
            let mut f = fit_sustainable(&per_n, &cfg)?;
            f.auxiliary = aux;
            f
        }
        FitKind::Scaling => {
            let p_th = p_th.ok_or_else(|| CliError::Usage("--p-th is required for a scaling fit".into()))?;
            if ns.len() > 1 {
                return Err(CliError::Usage(format!("records span cycle counts {ns:?}; choose one with --cycles")));
            }
            fit_scaling(&records, p_th, &ScalingConfig { odd_only: *odd_only, min_failures: *min_failures })?
        }
    };
    write_json(out, &result)
}

fn confinement(code: &str, t: usize, f: &str, out: &Path, all: bool, weight_cap: usize, max_enum: u128) -> Result<()> {
    let code = load_code(code)?;
    let f: ConfinementFunction = f.parse()?;
    let limits = EnumerationLimits { weight_cap, max_enumeration: max_enum };
    let report = check_confinement(&code, t, f, !all, limits)?;
    write_json(out, &report)
}

fn lattice_export(code: &str, out: &Path) -> Result<()> {
    let code = load_code(code)?;
    let export = embed(&code).export();
    debug_assert_eq!(export.schema_version, SCHEMA_VERSION);
    write_json(out, &export)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::BuildCode { seeds, out, no_alist } => build_code(seeds, out, *no_alist),
        Command::Simulate { code, config, out, seed, threads } => simulate(code, config, out, *seed, *threads),
        c @ Command::Fit { .. } => fit(c),
        Command::ConfinementCheck { code, t, f, out, all_paulis, weight_cap, max_enumeration } => {
            confinement(code, *t, f, out, *all_paulis, *weight_cap, *max_enumeration)
        }
        Command::LatticeExport { code, out } => lattice_export(code, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Internal(_) => 2,
            })
        }
    }
}
