use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lrlab_core::compare::{self, SweepInput};
use lrlab_core::imaging::{self, GrayImage};
use lrlab_core::recognition::{self, Gallery};
use lrlab_core::solvers::{self, ResolvedParams};
use lrlab_core::sweep::{self, format_sig6, ParamGrid, SweepConfig, Variant};
use lrlab_core::synth::{self, OcclusionKind, SynthSpec};
use lrlab_core::{metrics, Error as CoreError, SolverConfig, SolverKind};
use serde::Serialize;

use crate::args::{Common, CompareArgs, DecomposeArgs, MetricsArgs, RecognizeArgs, SweepArgs, SynthArgs};
use crate::config::{AutoOr, ConfigFile};
use crate::error::{CliError, CliResult};

/// Everything a subcommand needs besides its own arguments.
pub struct Context {
    pub common: Common,
    pub config: ConfigFile,
}

impl Context {
    fn out(&self, what: &str) -> CliResult<PathBuf> {
        self.config
            .pick(self.common.out.clone(), "out")?
            .ok_or_else(|| CliError::usage(format!("--out is required: {what}")))
    }

    fn p_values(&self) -> CliResult<Vec<f64>> {
        if !self.common.p.is_empty() {
            return Ok(self.common.p.clone());
        }
        Ok(self.config.get_list("p")?.unwrap_or_else(|| vec![0.8]))
    }

    /// Solver settings shared by all cells, with the solver kind resolved.
    fn base_config(&self, default_kind: SolverKind) -> CliResult<SolverConfig> {
        let kind = self.config.pick(self.common.solver, "solver")?.unwrap_or(default_kind);
        let mut cfg = SolverConfig::new(kind);
        cfg.lambda = self.config.pick(self.common.lambda, "lambda")?.and_then(AutoOr::value);
        cfg.c_weight = self.config.pick(self.common.c, "c")?.and_then(AutoOr::value);
        if let Some(tol) = self.config.pick(self.common.tol, "tol")? {
            cfg.tol = tol;
        }
        if let Some(max_iter) = self.config.pick(self.common.max_iter, "max_iter")? {
            cfg.max_iter = max_iter;
        }
        if let Some(rho) = self.config.get("rho")? {
            cfg.rho = rho;
        }
        if let Some(eps) = self.config.get("epsilon")? {
            cfg.epsilon = eps;
        }
        Ok(cfg)
    }

    /// Configuration for a single solve; at most one `--p`.
    fn solver_config(&self) -> CliResult<SolverConfig> {
        let mut cfg = self.base_config(SolverKind::Wsnm)?;
        let ps = self.p_values()?;
        match (cfg.kind, ps.as_slice()) {
            (SolverKind::Wsnm, [p]) => cfg.p = *p,
            (SolverKind::Wsnm, _) => return Err(CliError::usage("give exactly one --p for a single solve")),
            _ => {}
        }
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }

    fn bins(&self) -> CliResult<usize> {
        Ok(self
            .config
            .pick(self.common.bins, "bins")?
            .unwrap_or(recognition::DEFAULT_BINS))
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `dir/stem_suffix.csv` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> CliResult<()> {
    let out = ctx.out("dataset directory")?;
    let cfg = &ctx.config;
    let defaults = SynthSpec::default();
    let kinds = match args.kinds.clone().or(cfg.get("kinds")?) {
        Some(list) => list
            .split(',')
            .map(|k| k.trim().parse::<OcclusionKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::usage(e.to_string()))?,
        None => defaults.kinds.clone(),
    };
    let spec = SynthSpec {
        subjects: cfg.pick(args.subjects, "subjects")?.unwrap_or(defaults.subjects),
        images_per_subject: cfg.pick(args.images, "images")?.unwrap_or(defaults.images_per_subject),
        width: cfg.pick(args.width, "width")?.unwrap_or(defaults.width),
        height: cfg.pick(args.height, "height")?.unwrap_or(defaults.height),
        kinds,
        seed: cfg.pick(ctx.common.seed, "seed")?.unwrap_or(defaults.seed),
        rank: cfg.pick(args.rank, "rank")?.unwrap_or(defaults.rank),
        severity: cfg.pick(args.severity, "severity")?.unwrap_or(defaults.severity),
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let name = match cfg.pick(args.name.clone(), "name")? {
        Some(n) => n,
        None => out
            .file_name()
            .map_or_else(|| "dataset".into(), |n| n.to_string_lossy().into_owned()),
    };
    let cases = synth::synth_dataset(&spec)?;
    synth::write_dataset(&out, &name, &spec, &cases)?;
    println!(
        "wrote {} cases ({} images of {}x{} each) to {}",
        cases.len(),
        spec.images_per_subject,
        spec.width,
        spec.height,
        out.display()
    );
    Ok(())
}

/// Expands directories into their image files, keeping argument order.
fn collect_images(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            files.extend(synth::image_files(input)?);
        } else if input.exists() {
            files.push(input.clone());
        } else {
            return Err(CoreError::MissingFile(input.clone()).into());
        }
    }
    if files.is_empty() {
        let path = inputs.first().cloned().unwrap_or_default();
        return Err(CoreError::MalformedData {
            path,
            reason: "no .pgm or .png images found".into(),
        }
        .into());
    }
    Ok(files)
}

#[derive(Serialize)]
struct DecomposeManifest {
    inputs: Vec<PathBuf>,
    width: usize,
    height: usize,
    config: SolverConfig,
    resolved: ResolvedParams,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    rank: usize,
    sparsity: f64,
    low_rank: Vec<String>,
    sparse: Vec<String>,
}

pub fn decompose(ctx: &Context, args: &DecomposeArgs) -> CliResult<()> {
    let cfg = ctx.solver_config()?;
    let out = ctx.out("output directory")?;
    let files = collect_images(&args.inputs)?;
    let images = files.iter().map(imaging::load_image).collect::<Result<Vec<_>, _>>()?;
    let stack = imaging::stack(&images)?;
    let (w, h) = (stack.width(), stack.height());
    let d = solvers::solve(stack.matrix(), &cfg)?;

    create_dir(&out)?;
    let (mut low_names, mut sparse_names) = (Vec::new(), Vec::new());
    for j in 0..images.len() {
        let low = GrayImage::from_clamped(w, h, &d.low_rank.column(j))?;
        let sparse = GrayImage::new(w, h, recognition::sparse_display_transform(&d.sparse.column(j)))?;
        let (ln, sn) = (format!("low_rank_{j:02}.pgm"), format!("sparse_{j:02}.pgm"));
        imaging::save_image(&low, out.join(&ln))?;
        imaging::save_image(&sparse, out.join(&sn))?;
        low_names.push(ln);
        sparse_names.push(sn);
    }
    let manifest = DecomposeManifest {
        inputs: files,
        width: w,
        height: h,
        config: cfg,
        resolved: d.params,
        iterations: d.iterations,
        converged: d.converged,
        final_residual: d.final_residual,
        rank: d.rank_estimate,
        sparsity: d.sparsity,
        low_rank: low_names,
        sparse: sparse_names,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&out.join("manifest.json"), &(json + "\n"))?;
    println!(
        "{} images, rank {}, {} iterations{}, residual {}",
        images.len(),
        d.rank_estimate,
        d.iterations,
        if d.converged { "" } else { " (not converged)" },
        format_sig6(d.final_residual)
    );
    Ok(())
}

fn parse_list(key: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad value '{}' in {key}", v.trim())))
        })
        .collect()
}

fn sweep_config(ctx: &Context, args: &SweepArgs) -> CliResult<SweepConfig> {
    let cfg = &ctx.config;
    let base = ctx.base_config(SolverKind::Rpca)?;
    let variants = match base.kind {
        SolverKind::Wsnm => ctx
            .p_values()?
            .into_iter()
            .map(|p| Variant::new(SolverKind::Wsnm, p))
            .collect(),
        kind => vec![Variant::new(kind, 1.0)],
    };
    let fixed = match base.kind {
        SolverKind::Rpca => base.lambda,
        _ => base.c_weight,
    };
    let grid = if let Some(values) = args.grid_values.clone().or(cfg.get("grid_values")?) {
        ParamGrid::Absolute(parse_list("grid_values", &values)?)
    } else if let Some(v) = fixed {
        ParamGrid::Absolute(vec![v])
    } else {
        ParamGrid::Relative(sweep::log_grid(
            cfg.pick(args.grid_points, "grid_points")?
                .unwrap_or(sweep::DEFAULT_GRID_POINTS),
            cfg.pick(args.grid_low, "grid_low")?.unwrap_or(sweep::DEFAULT_GRID_LOW),
            cfg.pick(args.grid_high, "grid_high")?
                .unwrap_or(sweep::DEFAULT_GRID_HIGH),
        ))
    };
    let sc = SweepConfig { variants, grid, base };
    sc.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(sc)
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> CliResult<()> {
    let sc = sweep_config(ctx, args)?;
    let out = ctx.out("results CSV path")?;
    let cases = synth::load_dataset(&args.dataset)?;
    let report = sweep::sweep(&cases, &sc)?;
    let failed = report.rows.iter().filter(|r| r.psnr_db.is_nan()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} cells failed; recorded with converged=false",
            report.rows.len()
        );
    }
    write_text(&out, &report.results_csv())?;
    let summary_path = sibling(&out, "summary");
    write_text(&summary_path, &report.summary_csv())?;
    print!("{}", sweep::summary_table(&report.summary));
    println!(
        "{} rows -> {}, summary -> {}",
        report.rows.len(),
        out.display(),
        summary_path.display()
    );
    Ok(())
}

fn load_galleries(root: &Path) -> CliResult<Vec<Gallery>> {
    if !root.is_dir() {
        return Err(CoreError::MissingFile(root.to_path_buf()).into());
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| CliError::io(root, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| CliError::io(root, e)))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CoreError::MalformedData {
            path: root.to_path_buf(),
            reason: "no subject subdirectories".into(),
        }
        .into());
    }
    dirs.iter()
        .map(|dir| {
            let files = synth::image_files(dir)?;
            if files.is_empty() {
                return Err(CoreError::MalformedData {
                    path: dir.clone(),
                    reason: "subject directory holds no images".into(),
                }
                .into());
            }
            Ok(Gallery {
                subject: dir.file_name().unwrap().to_string_lossy().into_owned(),
                images: files.iter().map(imaging::load_image).collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

pub fn recognize(ctx: &Context, args: &RecognizeArgs) -> CliResult<()> {
    let cfg = ctx.solver_config()?;
    let bins = ctx.bins()?;
    if bins < 2 {
        return Err(CliError::usage(format!("--bins must be at least 2, got {bins}")));
    }
    let out = ctx.out("histogram directory")?;
    let test = imaging::load_image(&args.test)?;
    let galleries = load_galleries(&args.gallery)?;
    let result = recognition::recognize(&test, &galleries, &cfg, bins)?;

    create_dir(&out)?;
    let mut scores = String::from("subject,peak_score,entropy,predicted\n");
    for s in &result.scores {
        let _ = writeln!(
            scores,
            "{},{},{},{}",
            s.subject,
            format_sig6(s.peak_score),
            format_sig6(s.entropy),
            s.subject == result.predicted_subject
        );
    }
    write_text(&out.join("scores.csv"), &scores)?;
    for (subject, hist) in &result.histograms {
        write_text(&out.join(format!("{subject}_histogram.csv")), &hist.to_csv())?;
    }

    println!("{:<4} {:<16} {:>10} {:>10}", "rank", "subject", "peak", "entropy");
    for (i, s) in result.ranked().iter().enumerate() {
        println!(
            "{:<4} {:<16} {:>10} {:>10}",
            i + 1,
            s.subject,
            format_sig6(s.peak_score),
            format_sig6(s.entropy)
        );
    }
    println!("predicted: {}", result.predicted_subject);
    Ok(())
}

pub fn compare(ctx: &Context, args: &CompareArgs) -> CliResult<()> {
    let out = ctx.out("comparison CSV path")?;
    let inputs = args
        .inputs
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let rows = sweep::parse_results_csv(&text).map_err(|e| CoreError::MalformedData {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            Ok(SweepInput {
                source: path.display().to_string(),
                rows,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = compare::compare(&inputs)?;
    for (case, missing) in &report.dropped {
        if missing.is_empty() {
            log::warn!("case {case} lacks results for some variant; dropped");
        } else {
            log::warn!("case {case} missing from {}; dropped", missing.join(", "));
        }
    }
    write_text(&out, &report.to_csv())?;
    let medians = report.median_csv();
    write_text(&sibling(&out, "medians"), &medians)?;
    print!("{medians}");
    Ok(())
}

pub fn metrics(ctx: &Context, args: &MetricsArgs) -> CliResult<()> {
    let reference = imaging::load_image(&args.reference)?;
    let test = imaging::load_image(&args.test)?;
    let q = metrics::score(&reference, &test)?;
    let text = format!(
        "psnr_db,ssim,mse\n{},{},{}\n",
        format_sig6(q.psnr_db),
        format_sig6(q.ssim),
        format_sig6(q.mse)
    );
    if let Some(out) = ctx.config.pick(ctx.common.out.clone(), "out")? {
        write_text(&out, &text)?;
    }
    print!("{text}");
    Ok(())
}
