use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use moran_core::dimension::{assouad_cantor, assouad_moran, DimensionOptions, DimensionReport};
use moran_core::geometry::{
    empirical_assouad, estimate_on_set, realize_level, EmpiricalEstimate, EmpiricalOptions, IntervalSet, Placement,
    SignRule,
};
use moran_core::scale::{
    assouad_from_scale_ln, matched_lambdas, scale_from_schedule, write_psi_csv, RGrid, ScaleEstimate, ScaleFunction,
};
use moran_core::spec_model::{read_spec, spec_hash, validate, Ratio, SetSpec, Severity};
use moran_core::symbolic::{cutset, dyadic_classes, identity_residual, lower_bound_witness, Word};

use crate::args::{parse_grid, Cli, Command, DimsArgs, EmpiricalArgs, Format, LayoutArgs, ScaleArgs};
use crate::error::{CliError, CliResult, Status};
use crate::report;

/// Where the report and artifacts go.
struct Sink {
    format: Format,
    dir: Option<PathBuf>,
    stem: String,
    stdout: Vec<u8>,
    written: Vec<PathBuf>,
}

impl Sink {
    fn text(&mut self, text: &str) {
        if self.format == Format::Text {
            self.stdout.extend_from_slice(text.as_bytes());
        }
    }

    /// The command's main table: on stdout under `--format csv`, and always as
    /// a file when an output directory is set.
    fn table(&mut self, name: &str, write: impl Fn(&mut Vec<u8>) -> CliResult<()>) -> CliResult<()> {
        if self.format == Format::Csv {
            write(&mut self.stdout)?;
        }
        self.artifact(name, write)
    }

    fn artifact(&mut self, name: &str, write: impl Fn(&mut Vec<u8>) -> CliResult<()>) -> CliResult<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{}_{name}.csv", self.stem));
        let mut buf = Vec::new();
        write(&mut buf)?;
        let mut f = BufWriter::new(
            File::create(&path).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", path.display())))?,
        );
        f.write_all(&buf)?;
        f.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn finish(self) -> CliResult<()> {
        let mut out = std::io::stdout().lock();
        out.write_all(&self.stdout)?;
        if self.format == Format::Text {
            for p in &self.written {
                writeln!(out, "wrote {}", p.display())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::new(Status::Io, e.to_string())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn load(path: &Path) -> CliResult<SetSpec> {
    Ok(read_spec(path)?)
}

/// Fails with the validation status unless the spec is admissible.
fn admissible(spec: &SetSpec) -> CliResult<()> {
    let report = validate(spec);
    if report.is_admissible() {
        Ok(())
    } else {
        Err(CliError::new(
            Status::Validation,
            report.to_string().trim_end().to_string(),
        ))
    }
}

fn label(path: &Path, spec: &SetSpec) -> String {
    format!(
        "{} ({}, d = {}, hash {})",
        path.display(),
        spec.kind_name(),
        spec.dimension(),
        spec_hash(spec)
    )
}

fn grid(text: &str, what: &str) -> CliResult<Vec<f64>> {
    parse_grid(text).map_err(|e| CliError::usage(format!("--{what}: {e}")))
}

fn positive(value: f64, what: &str) -> CliResult<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{what} = {value} must be positive")))
    }
}

fn placement(args: &LayoutArgs) -> CliResult<Placement> {
    let p: Placement = args.placement.parse()?;
    match (p, args.gamma) {
        (_, None) => Ok(p),
        (Placement::UniformGap { .. }, Some(g)) => Ok(Placement::uniform_gap(g)?),
        (Placement::LeftPacked, Some(_)) => Err(CliError::usage("--gamma applies only to uniform-gap placement")),
    }
}

fn signs(args: &LayoutArgs) -> SignRule {
    args.seed.map(SignRule::Seeded).unwrap_or_default()
}

pub fn run(cli: Cli) -> CliResult<()> {
    positive(cli.tol, "tol")?;
    let stem_of = |p: Option<&PathBuf>| p.map(|p| stem(p)).unwrap_or_else(|| "out".into());
    let stem = match &cli.command {
        Command::Validate { spec }
        | Command::Dims { spec, .. }
        | Command::Cutset { spec, .. }
        | Command::Witness { spec, .. }
        | Command::Realize { spec, .. }
        | Command::Compare { spec, .. } => stem(spec),
        Command::Empirical { spec, intervals, .. } => stem_of(spec.as_ref().or(intervals.as_ref())),
        Command::Scale { spec, import, .. } => stem_of(spec.as_ref().or(import.as_ref())),
    };
    let mut sink = Sink {
        format: cli.format,
        dir: cli.out.clone(),
        stem,
        stdout: Vec::new(),
        written: Vec::new(),
    };
    let tol = cli.tol;
    let outcome = match cli.command {
        Command::Validate { spec } => cmd_validate(&mut sink, &spec),
        Command::Dims { spec, dims } => cmd_dims(&mut sink, &spec, &dims, tol),
        Command::Cutset {
            spec,
            delta,
            word,
            start,
            s,
            budget,
        } => cmd_cutset(&mut sink, &spec, &delta, word.as_deref(), start, s, budget),
        Command::Witness {
            spec,
            k_lo,
            k_hi,
            s,
            eps,
            budget,
        } => cmd_witness(&mut sink, &spec, k_lo, k_hi, s, eps, tol, budget),
        Command::Realize { spec, depth, layout } => cmd_realize(&mut sink, &spec, depth, &layout),
        Command::Empirical {
            spec,
            intervals,
            grids,
            layout,
        } => cmd_empirical(&mut sink, spec.as_deref(), intervals.as_deref(), &grids, &layout),
        Command::Scale { spec, import, scale } => cmd_scale(&mut sink, spec.as_deref(), import.as_deref(), &scale),
        Command::Compare {
            spec,
            dims,
            grids,
            layout,
            depth,
        } => cmd_compare(&mut sink, &spec, &dims, &grids, &layout, depth, tol),
    };
    // Reports explaining a failure are still printed.
    let flushed = sink.finish();
    outcome.and(flushed)
}

fn cmd_validate(sink: &mut Sink, path: &Path) -> CliResult<()> {
    let spec = load(path)?;
    let report = validate(&spec);
    sink.text(&format!("{}\n{report}", label(path, &spec)));
    if report.is_admissible() {
        sink.text("admissible\n");
        Ok(())
    } else {
        let errors: Vec<String> = report.errors().map(|i| i.to_string()).collect();
        Err(CliError::new(
            Status::Validation,
            format!("not admissible: {}", errors.join("; ")),
        ))
    }
}

fn dims_report(spec: &SetSpec, args: &DimsArgs, tol: f64) -> CliResult<DimensionReport> {
    let opts = DimensionOptions {
        m_max: args.m_max,
        k_max: args.k_max,
        horizon: args.horizon,
        tol,
        tail_fraction: args.tail_fraction,
    };
    Ok(match spec {
        SetSpec::Moran(m) => assouad_moran(m, &opts)?,
        SetSpec::CantorLike(c) => assouad_cantor(c, &opts)?,
    })
}

fn cmd_dims(sink: &mut Sink, path: &Path, args: &DimsArgs, tol: f64) -> CliResult<()> {
    let spec = load(path)?;
    let mut report = dims_report(&spec, args, tol)?;
    let notes = validate(&spec)
        .issues
        .into_iter()
        .filter(|i| i.severity != Severity::Error);
    report.warnings.extend(notes.map(|i| i.to_string()));
    sink.text(&report::dims_text(&label(path, &spec), &report));
    sink.table("theta", |out| report::theta_csv(&report, out).map_err(csv_err))
}

fn cmd_cutset(
    sink: &mut Sink,
    path: &Path,
    delta: &str,
    word: Option<&str>,
    start: u64,
    s: f64,
    budget: usize,
) -> CliResult<()> {
    let spec = load(path)?;
    admissible(&spec)?;
    let moran = spec.moran();
    let delta: Ratio = delta.parse().map_err(|e| CliError::usage(format!("--delta: {e}")))?;
    let letters = match word {
        None | Some("") => Vec::new(),
        Some(w) => w
            .split('.')
            .map(|l| l.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::usage(format!("--word {w:?} must be dotted positive integers")))?,
    };
    let base = Word::new(&moran.schedule, start, letters)?;
    let cut = cutset(&moran, &base, delta, budget)?;
    let residual = identity_residual(&moran, &cut, s);
    let span = if base.letters().is_empty() {
        format!("empty, after level {}", base.start())
    } else {
        format!("levels {}..={}", base.start() + 1, base.end())
    };
    sink.text(&format!(
        "spec             {}\nbase word        {base} ({span})\ndelta            {delta}\nmembers          {}\nlongest suffix   {}\nnear ties        {}\nidentity residual at s = {s}: {residual:.3e}\n",
        label(path, &spec),
        cut.len(),
        cut.max_suffix_len(),
        cut.near_ties(),
    ));
    sink.table("cutset", |out| cut.write_csv(out).map_err(csv_err))
}

#[allow(clippy::too_many_arguments)]
fn cmd_witness(
    sink: &mut Sink,
    path: &Path,
    k_lo: u64,
    k_hi: u64,
    s: f64,
    eps: f64,
    tol: f64,
    budget: usize,
) -> CliResult<()> {
    let spec = load(path)?;
    admissible(&spec)?;
    let moran = spec.moran();
    let classes = dyadic_classes(&moran, k_lo, k_hi, budget)?;
    sink.table("classes", |out| classes.write_csv(out).map_err(csv_err))?;
    let witness = lower_bound_witness(&moran, k_lo, k_hi, s, eps, tol, budget)?;
    let head = format!(
        "spec             {}\nwindow           levels {}..={}\nwords            {}\nclasses          {}\n",
        label(path, &spec),
        k_lo + 1,
        k_hi,
        classes.total,
        classes.classes.len()
    );
    match witness {
        Some(w) => {
            sink.text(&format!(
                "{head}witness          q = {}, #B_q = {}, log margin = {:.6}\n",
                w.q, w.count, w.margin
            ));
            Ok(())
        }
        None => {
            sink.text(&head);
            Err(CliError::new(
                Status::Compute,
                format!("no class satisfies the witness inequality at s = {s}, ε = {eps}"),
            ))
        }
    }
}

fn cmd_realize(sink: &mut Sink, path: &Path, depth: u64, layout: &LayoutArgs) -> CliResult<()> {
    let spec = load(path)?;
    admissible(&spec)?;
    let set = realize_level(&spec, placement(layout)?, depth, signs(layout), layout.budget)?;
    sink.text(&format!(
        "spec             {}\ndepth            {}\nintervals        {}\nlongest          {:e}\nplacement        {}\n",
        label(path, &spec),
        set.depth(),
        set.len(),
        set.max_length(),
        set.meta().placement
    ));
    sink.table("intervals", |out| set.write_csv(out).map_err(CliError::from))
}

fn empirical_options(grids: &EmpiricalArgs, layout: &LayoutArgs) -> CliResult<EmpiricalOptions> {
    Ok(EmpiricalOptions {
        rho_grid: grid(&grids.rho_grid, "rho-grid")?,
        r_grid: grid(&grids.r_grid, "r-grid")?,
        centers_per_r: grids.centers,
        placement: placement(layout)?,
        signs: signs(layout),
        budget: layout.budget,
    })
}

fn empirical_for(spec: &SetSpec, grids: &EmpiricalArgs, layout: &LayoutArgs) -> CliResult<EmpiricalEstimate> {
    Ok(empirical_assouad(spec, &empirical_options(grids, layout)?)?)
}

fn cmd_empirical(
    sink: &mut Sink,
    path: Option<&Path>,
    intervals: Option<&Path>,
    grids: &EmpiricalArgs,
    layout: &LayoutArgs,
) -> CliResult<()> {
    let (source, estimate) = match (path, intervals) {
        (Some(path), None) => {
            let spec = load(path)?;
            admissible(&spec)?;
            (label(path, &spec), empirical_for(&spec, grids, layout)?)
        }
        (None, Some(file)) => {
            let f = File::open(file).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", file.display())))?;
            let set = IntervalSet::read_csv(BufReader::new(f))?;
            if set.is_empty() {
                return Err(CliError::new(
                    Status::Parse,
                    format!("{} holds no intervals", file.display()),
                ));
            }
            let starts: Vec<f64> = set.intervals().iter().map(|iv| iv.0).collect();
            let n = grids.centers.clamp(1, starts.len());
            let centers: Vec<f64> = (0..n).map(|i| starts[i * starts.len() / n]).collect();
            let est = estimate_on_set(
                &set,
                &grid(&grids.rho_grid, "rho-grid")?,
                &grid(&grids.r_grid, "r-grid")?,
                &centers,
            )?;
            (format!("{} (depth {})", file.display(), set.depth()), est)
        }
        _ => return Err(CliError::usage("give either a spec or --intervals")),
    };
    sink.text(&report::empirical_text(&source, &estimate));
    sink.table("empirical", |out| {
        report::empirical_csv(&estimate, out).map_err(csv_err)
    })
}

struct ScaleRun {
    h: ScaleFunction,
    estimate: ScaleEstimate,
}

fn scale_for(h: ScaleFunction, lambdas: Vec<f64>, r_grid: Option<&str>) -> CliResult<ScaleRun> {
    let r_grid = match r_grid {
        None => RGrid::Represented,
        Some(text) => RGrid::Points(grid(text, "r-grid")?),
    };
    let estimate = assouad_from_scale_ln(&h, &lambdas, &r_grid)?;
    Ok(ScaleRun { h, estimate })
}

fn lambdas_from(rho_grid: &str) -> CliResult<Vec<f64>> {
    let rho = grid(rho_grid, "rho-grid")?;
    if let Some(bad) = rho.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(CliError::usage(format!("--rho-grid: ρ = {bad} must lie in (0, 1)")));
    }
    Ok(rho.iter().map(|r| -r.ln()).collect())
}

fn cmd_scale(sink: &mut Sink, path: Option<&Path>, import: Option<&Path>, args: &ScaleArgs) -> CliResult<()> {
    let (source, h, default_lambdas) = match (path, import) {
        (Some(path), None) => {
            let spec = load(path)?;
            admissible(&spec)?;
            let depth = args.depth.unwrap_or(args.k_max + args.m_max);
            let h = scale_from_schedule(spec.schedule(), depth)?;
            (
                label(path, &spec),
                h,
                Some(matched_lambdas(spec.schedule(), args.m_max)),
            )
        }
        (None, Some(file)) => {
            let f = File::open(file).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", file.display())))?;
            (
                file.display().to_string(),
                ScaleFunction::read_csv(BufReader::new(f))?,
                None,
            )
        }
        _ => return Err(CliError::usage("give either a spec or --import")),
    };
    let lambdas = match (&args.rho_grid, default_lambdas) {
        (Some(text), _) => lambdas_from(text)?,
        (None, Some(l)) => l,
        (None, None) => return Err(CliError::usage("--rho-grid is required with --import")),
    };
    let run = scale_for(h, lambdas, args.r_grid.as_deref())?;
    sink.text(&report::scale_text(
        &source,
        run.h.len(),
        run.h.tail_extrema(0.125),
        &run.estimate,
    ));
    sink.table("psi", |out| {
        write_psi_csv(&run.estimate.rows, out).map_err(CliError::from)
    })?;
    sink.artifact("scale", |out| run.h.write_csv(out).map_err(CliError::from))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    sink: &mut Sink,
    path: &Path,
    dims: &DimsArgs,
    grids: &EmpiricalArgs,
    layout: &LayoutArgs,
    depth: Option<u64>,
    tol: f64,
) -> CliResult<()> {
    let spec = load(path)?;
    admissible(&spec)?;
    let formula = dims_report(&spec, dims, tol)?;
    let mut rows: Vec<(String, Option<f64>, String)> = vec![(
        "formula".into(),
        Some(formula.s_assouad),
        format!(
            "running inf of θ_m, m ≤ {}, gap {:.3e}",
            dims.m_max, formula.convergence_gap
        ),
    )];
    let empirical = if spec.dimension() == 1 {
        let e = empirical_for(&spec, grids, layout)?;
        let smallest = e.per_rho.last().map(|p| p.0).unwrap_or(f64::NAN);
        rows.push((
            "empirical".into(),
            Some(e.estimate),
            format!("covering numbers at ρ = {smallest:.3e}, depth {}", e.max_depth),
        ));
        Some(e)
    } else {
        rows.push(("empirical".into(), None, "needs d = 1".into()));
        None
    };
    if spec.schedule().has_uniform_levels() {
        let depth = depth.unwrap_or(dims.k_max + dims.m_max);
        let h = scale_from_schedule(spec.schedule(), depth)?;
        let run = scale_for(h, matched_lambdas(spec.schedule(), dims.m_max), None)?;
        rows.push((
            "scale".into(),
            Some(run.estimate.estimate),
            format!("sup_R ψ at ρ = c_max^{}, depth {depth}", dims.m_max),
        ));
    } else {
        rows.push((
            "scale".into(),
            None,
            "levels with unequal ratios have no scale function here".into(),
        ));
    }
    let mut text = format!("spec             {}\n", label(path, &spec));
    text.push_str("method      dim_A estimate   note\n");
    for (method, value, note) in &rows {
        let v = value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        text.push_str(&format!("{method:<11} {v:<16} {note}\n"));
    }
    report::warnings(&mut text, &formula.warnings);
    sink.text(&text);
    sink.table("compare", |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "estimate", "note"]).map_err(csv_err)?;
        for (method, value, note) in &rows {
            let v = value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([method.as_str(), v.as_str(), note.as_str()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    })?;
    sink.artifact("theta", |out| report::theta_csv(&formula, out).map_err(csv_err))?;
    if let Some(e) = &empirical {
        sink.artifact("empirical", |out| report::empirical_csv(e, out).map_err(csv_err))?;
    }
    Ok(())
}
