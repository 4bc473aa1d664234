use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use harper_core::diagnostics::classical_energy_grid;
use harper_core::drift::{propagate, refine_until_converged, transition_matrix, DriftSchedule, TransitionReport};
use harper_core::mathieu::{align_spectra, mathieu_characteristics, q_from_eps};
use harper_core::operators::build_harper;
use harper_core::spectrum::{
    eigen_decompose, min_spacing, min_spacing_model, precision_budget, separatrix_energies, Spectrum,
};
use harper_core::symmetry::{run_battery, SymmetryReport, SymmetrySuite};
use harper_core::{Basis, Error, HarperParams, PrecisionContext};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{fmt_f64, fmt_log10, resolve_out, write_csv, write_json, write_sidecar};
use crate::schema::{self, DataKind};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
    CheckFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                Error::InvalidDimension(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidPrecision(_)
                | Error::RequiresUnitAmplitude(_)
                | Error::RequiresZeroOffset(_)
                | Error::OddDimension(_)
                | Error::EvenDimension(_)
                | Error::EmptyBracket(..) => 2,
                Error::RegionOverlap { .. } => 4,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::CheckFailed(k) => write!(f, "{k} check(s) failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Decimal digits; above 16 the extended-precision path is used.
    #[arg(long, default_value_t = 16)]
    pub digits: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn compute_spectrum(p: &HarperParams, ctx: PrecisionContext) -> Result<Spectrum, Error> {
    let basis = if ctx.is_machine() {
        Basis::Conventional
    } else {
        Basis::Fourier
    };
    eigen_decompose(&build_harper(p, basis, ctx)?, false)
}

fn spectrum_rows(s: &Spectrum) -> Vec<Vec<String>> {
    (0..s.len())
        .map(|j| {
            let value = if s.extended.is_some() {
                s.eigenvalue_string(j)
            } else {
                fmt_f64(s.eigenvalues[j])
            };
            vec![j.to_string(), value, fmt_log10(s.spacings[j])]
        })
        .collect()
}

#[derive(Serialize)]
struct SpectrumJson {
    params: HarperParams,
    digits: u32,
    eigenvalues: Vec<f64>,
    /// Full-precision decimals when digits > 16.
    eigenvalues_decimal: Option<Vec<String>>,
    /// null where the spacing is zero at working precision.
    log10_nearest_spacing: Vec<Option<f64>>,
}

pub fn spectrum(args: SpectrumArgs) -> CliResult {
    let p = HarperParams::new(args.n, args.a, args.b, args.eps)?;
    let ctx = PrecisionContext::new(args.digits)?;
    let s = compute_spectrum(&p, ctx)?;
    let out = resolve_out(args.out);
    match args.format {
        Format::Csv => write_csv(out.as_deref(), schema::SPECTRUM, &spectrum_rows(&s))?,
        Format::Json => {
            let doc = SpectrumJson {
                params: p,
                digits: args.digits,
                eigenvalues: s.eigenvalues.clone(),
                eigenvalues_decimal: s
                    .extended
                    .as_ref()
                    .map(|_| (0..s.len()).map(|j| s.eigenvalue_string(j)).collect()),
                log10_nearest_spacing: s
                    .spacings
                    .iter()
                    .map(|d| Some(d.log10()).filter(|x| x.is_finite()))
                    .collect(),
            };
            write_json(out.as_deref(), &doc)?
        }
    }
    write_sidecar(
        out.as_deref(),
        "spectrum",
        json!({"params": p, "digits": args.digits, "separatrix": separatrix_energies(&p)}),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Swept {
    Eps,
    B,
    /// ε and b move together; sweep_value is the fraction t ∈ [0, 1].
    Both,
    N,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub swept: Swept,
    #[arg(long)]
    pub count: usize,
    #[arg(long, num_args = 2, value_names = ["START", "STOP"], allow_hyphen_values = true)]
    pub eps_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["START", "STOP"], allow_hyphen_values = true)]
    pub b_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["START", "STOP"])]
    pub n_range: Option<Vec<usize>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 16)]
    pub digits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                start + (stop - start) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn need<T: Clone>(v: &Option<Vec<T>>, flag: &str) -> Result<(T, T), CliError> {
    match v {
        Some(x) => Ok((x[0].clone(), x[1].clone())),
        None => Err(CliError::Usage(format!("{flag} START STOP is required for this sweep"))),
    }
}

/// (sweep value, params) per grid point, in output order.
fn sweep_grid(args: &SweepArgs) -> Result<Vec<(f64, HarperParams)>, CliError> {
    if args.count < 2 {
        return Err(CliError::Usage(format!(
            "--count must be at least 2, got {}",
            args.count
        )));
    }
    let fixed_n = || {
        args.n
            .ok_or_else(|| CliError::Usage("--n is required unless sweeping n".into()))
    };
    let mut grid = Vec::with_capacity(args.count);
    match args.swept {
        Swept::Eps => {
            let (s, e) = need(&args.eps_range, "--eps-range")?;
            let n = fixed_n()?;
            for v in linspace(s, e, args.count) {
                grid.push((v, HarperParams::new(n, args.a, args.b, v)?));
            }
        }
        Swept::B => {
            let (s, e) = need(&args.b_range, "--b-range")?;
            let n = fixed_n()?;
            for v in linspace(s, e, args.count) {
                grid.push((v, HarperParams::new(n, args.a, v, args.eps)?));
            }
        }
        Swept::Both => {
            let (es, ee) = need(&args.eps_range, "--eps-range")?;
            let (bs, be) = need(&args.b_range, "--b-range")?;
            let n = fixed_n()?;
            for t in linspace(0.0, 1.0, args.count) {
                grid.push((t, HarperParams::new(n, args.a, bs + (be - bs) * t, es + (ee - es) * t)?));
            }
        }
        Swept::N => {
            let (s, e) = need(&args.n_range, "--n-range")?;
            let ns: Vec<usize> = linspace(s as f64, e as f64, args.count)
                .iter()
                .map(|x| x.round() as usize)
                .collect();
            if ns.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::Usage(format!(
                    "--count {} exceeds the integers in [{s}, {e}]",
                    args.count
                )));
            }
            for n in ns {
                grid.push((n as f64, HarperParams::new(n, args.a, args.b, args.eps)?));
            }
        }
    }
    for (v, _) in &grid {
        if !v.is_finite() {
            return Err(CliError::Usage("sweep range must be finite".into()));
        }
    }
    Ok(grid)
}

pub fn sweep(args: SweepArgs) -> CliResult {
    let grid = sweep_grid(&args)?;
    let ctx = PrecisionContext::new(args.digits)?;
    // Each grid point is independent; collect() keeps grid order.
    let spectra: Vec<Spectrum> = grid
        .par_iter()
        .map(|(_, p)| compute_spectrum(p, ctx))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for ((v, _), s) in grid.iter().zip(&spectra) {
        let value = fmt_f64(*v);
        for mut r in spectrum_rows(s) {
            r.insert(0, value.clone());
            rows.push(r);
        }
    }
    let out = resolve_out(args.out);
    write_csv(out.as_deref(), schema::SWEEP, &rows)?;
    let points: Vec<_> = grid
        .iter()
        .map(|(v, p)| json!({"sweep_value": v, "params": p, "separatrix": separatrix_energies(p)}))
        .collect();
    write_sidecar(
        out.as_deref(),
        "sweep",
        json!({"swept": format!("{:?}", args.swept).to_lowercase(), "digits": args.digits, "points": points}),
    )?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub duration_over_hbar: f64,
    /// Entrywise amplitude change accepted between step doublings.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Fixed step count; skips the doubling refinement.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DriftJson<'a> {
    params0: HarperParams,
    params1: HarperParams,
    duration_over_hbar: f64,
    steps: usize,
    tol: Option<f64>,
    last_delta: Option<f64>,
    amplitudes: &'a Vec<Vec<f64>>,
    energies_init: &'a Vec<f64>,
    energies_final: &'a Vec<f64>,
    labels_init: Vec<&'static str>,
    labels_final: Vec<&'static str>,
    boundary_indices: &'a harper_core::drift::BoundaryIndices,
    region_probs: &'a [Option<[f64; 3]>; 3],
    diagnostics: &'a harper_core::diagnostics::DiagnosticsBundle,
}

fn drift_json(r: &TransitionReport, t_over_hbar: f64, tol: Option<f64>) -> DriftJson<'_> {
    DriftJson {
        params0: r.schedule.params0(),
        params1: r.schedule.params1(),
        duration_over_hbar: t_over_hbar,
        steps: r.steps,
        tol,
        last_delta: r.last_delta,
        amplitudes: &r.amplitudes,
        energies_init: &r.energies_init,
        energies_final: &r.energies_final,
        labels_init: r.labels_init.iter().map(|l| l.as_str()).collect(),
        labels_final: r.labels_final.iter().map(|l| l.as_str()).collect(),
        boundary_indices: &r.boundary_indices,
        region_probs: &r.region_probs,
        diagnostics: &r.diagnostics,
    }
}

pub fn drift(args: DriftArgs) -> CliResult {
    if !(args.duration_over_hbar > 0.0) {
        return Err(CliError::Usage(format!(
            "--duration-over-hbar must be positive, got {}",
            args.duration_over_hbar
        )));
    }
    let s = DriftSchedule::with_duration_over_hbar(
        args.n,
        args.a,
        args.b0,
        args.b1,
        args.eps0,
        args.eps1,
        args.duration_over_hbar,
        args.steps.unwrap_or(1),
    )?;
    s.check_regions()?;
    let report = match args.steps {
        Some(_) => transition_matrix(&s, &propagate(&s)?)?,
        None => refine_until_converged(&s, args.tol)?,
    };
    let tol = args.steps.is_none().then_some(args.tol);
    let out = resolve_out(args.out);
    write_json(out.as_deref(), &drift_json(&report, args.duration_over_hbar, tol))?;
    write_sidecar(out.as_deref(), "drift", json!({"schedule": report.schedule}))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[arg(long, default_value_t = 9)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.37 * PI / 9.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub eps: f64,
    /// Also run the randomised battery with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter tuples drawn by the battery.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Inject a fault of this size into the operators under test.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
}

fn report_line(name: &str, residual: f64, tolerance: f64, passed: bool) -> String {
    let verdict = if passed { "PASS" } else { "FAIL" };
    format!("{name:<40} {residual:>12.3e} {tolerance:>10.1e} {verdict}")
}

pub fn symmetry_check(args: SymmetryArgs) -> CliResult {
    if !(args.perturb >= 0.0 && args.perturb.is_finite()) {
        return Err(CliError::Usage(format!(
            "--perturb must be non-negative, got {}",
            args.perturb
        )));
    }
    let p = HarperParams::new(args.n, args.a, args.b, args.eps)?;
    let suite = SymmetrySuite::with_fault(args.perturb);
    let mut failed = 0;
    println!("{:<40} {:>12} {:>10} verdict", "check", "residual", "tolerance");
    for (name, r) in suite.run_all(&p) {
        let r = r?;
        failed += usize::from(!r.passed);
        println!("{}", report_line(&name, r.residual, r.tolerance, r.passed));
    }
    if let Some(seed) = args.seed {
        let reports = run_battery(&suite, seed, args.count)?;
        // One line per check: worst residual/tolerance over the draws.
        let mut names: Vec<&str> = Vec::new();
        for r in &reports {
            if !names.contains(&r.check_name.as_str()) {
                names.push(&r.check_name);
            }
        }
        for name in names {
            let mine: Vec<&SymmetryReport> = reports.iter().filter(|r| r.check_name == name).collect();
            let worst = mine.iter().map(|r| r.residual / r.tolerance).fold(0.0, f64::max);
            let fails = mine.iter().filter(|r| !r.passed).count();
            failed += fails;
            println!(
                "{}",
                report_line(&format!("battery/{name} ({})", mine.len()), worst, 1.0, fails == 0)
            );
        }
    }
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MathieuArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// Highest Mathieu index m; default covers the n Harper levels.
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn mathieu_compare(args: MathieuArgs) -> CliResult {
    let p = HarperParams::new(args.n, 1.0, 0.0, args.eps)?;
    let harper = compute_spectrum(&p, PrecisionContext::MACHINE)?;
    let q = q_from_eps(args.eps, args.n)?;
    let m_max = args.m_max.unwrap_or(args.n.div_ceil(2)).max(1);
    let m = mathieu_characteristics(q, m_max, None)?;
    let cmp = align_spectra(&harper, &m)?;
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                fmt_f64(r.harper_eigenvalue),
                fmt_f64(r.mathieu_scaled_eigenvalue),
                fmt_f64(r.difference),
                fmt_f64(r.harper_spacing),
                fmt_f64(r.mathieu_spacing),
            ]
        })
        .collect();
    let out = resolve_out(args.out);
    write_csv(out.as_deref(), schema::MATHIEU, &rows)?;
    write_sidecar(
        out.as_deref(),
        "mathieu-compare",
        json!({"params": p, "q": q, "m_max": m_max, "truncation_r": m.truncation_r, "offset": cmp.offset,
               "separatrix": separatrix_energies(&p)}),
    )?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct MinSpacingArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    #[arg(long)]
    pub digits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct MinSpacingRow {
    pub n: usize,
    pub eps: f64,
    pub measured: f64,
    pub model: f64,
    pub lower_index: usize,
}

impl MinSpacingRow {
    /// log10(measured/model); 0/0 is undefined.
    pub fn log10_ratio(&self) -> f64 {
        match (self.measured == 0.0, self.model == 0.0) {
            (true, true) => f64::NAN,
            _ => (self.measured / self.model).log10(),
        }
    }
}

pub fn min_spacing_row(n: usize, eps: f64, ctx: PrecisionContext) -> Result<MinSpacingRow, Error> {
    let required = precision_budget(n, eps)?;
    if required > ctx.digits() {
        return Err(Error::PrecisionBudget {
            required,
            available: ctx.digits(),
        });
    }
    let p = HarperParams::new(n, 1.0, 0.0, eps)?;
    let s = compute_spectrum(&p, ctx)?;
    let (d, lower_index) = min_spacing(&s);
    let measured = if d < ctx.resolution() { 0.0 } else { d };
    Ok(MinSpacingRow {
        n,
        eps,
        measured,
        model: min_spacing_model(n, eps)?,
        lower_index,
    })
}

pub fn min_spacing_cmd(args: MinSpacingArgs) -> CliResult {
    let (n_list, eps_list) = (args.n_list, args.eps_list);
    if n_list.is_empty() || eps_list.is_empty() {
        return Err(CliError::Usage("--n-list and --eps-list must be non-empty".into()));
    }
    let ctx = PrecisionContext::new(args.digits)?;
    let pairs: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| eps_list.iter().map(move |&e| (n, e)))
        .collect();
    // Budget first, so an under-resolved request fails before any work.
    for &(n, e) in &pairs {
        let required = precision_budget(n, e)?;
        if required > ctx.digits() {
            return Err(Error::PrecisionBudget {
                required,
                available: ctx.digits(),
            }
            .into());
        }
    }
    let results: Vec<MinSpacingRow> = pairs
        .par_iter()
        .map(|&(n, e)| min_spacing_row(n, e, ctx))
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.eps),
                fmt_f64(r.measured),
                fmt_f64(r.model),
                fmt_f64(r.log10_ratio()),
                r.lower_index.to_string(),
            ]
        })
        .collect();
    let out = resolve_out(args.out);
    write_csv(out.as_deref(), schema::MIN_SPACING, &rows)?;
    write_sidecar(
        out.as_deref(),
        "min-spacing",
        json!({"digits": args.digits, "resolution": ctx.resolution()}),
    )?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct LevelCurvesArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    /// Samples per axis over [−π, π].
    #[arg(long, default_value_t = 129)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn level_curves(args: LevelCurvesArgs) -> CliResult {
    // The classical energy does not depend on n.
    let p = HarperParams::new(2, args.a, args.b, args.eps)?;
    let g = classical_energy_grid(&p, args.resolution)?;
    let mut rows = Vec::with_capacity(g.p.len() * g.phi.len());
    for (i, &pv) in g.p.iter().enumerate() {
        for (j, &phi) in g.phi.iter().enumerate() {
            rows.push(vec![fmt_f64(pv), fmt_f64(phi), fmt_f64(g.energy[i][j])]);
        }
    }
    let out = resolve_out(args.out);
    write_csv(out.as_deref(), schema::LEVEL_CURVES, &rows)?;
    write_sidecar(
        out.as_deref(),
        "level-curves",
        json!({"a": args.a, "b": args.b, "eps": args.eps, "resolution": args.resolution, "separatrix": g.separatrix}),
    )?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    pub path: PathBuf,
}

pub fn validate(args: ValidateArgs) -> CliResult {
    let text = fs::read_to_string(&args.path)?;
    match schema::validate(args.kind, &text) {
        Ok(rows) => {
            println!("{}: ok ({rows} rows)", args.path.display());
            Ok(())
        }
        Err(e) => Err(CliError::Usage(format!("{}: {e}", args.path.display()))),
    }
}
