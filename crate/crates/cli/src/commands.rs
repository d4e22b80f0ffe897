use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hrdea::bench::{run_benchmark, BenchConfig, Scenario};
use hrdea::dataset::{load_dataset, DataSet, Direction, Schema};
use hrdea::dea::{solve_dataset, DeaModel, DeaOptions};
use hrdea::inference::{
    analyze, beta_expected_distance, beta_to_gaussian, fit_beta, histogram, ks_statistic,
    BetaSupport, RobustnessReport,
};
use hrdea::pipeline::{degenerate_sets, run_hr_dea, DistanceMatrix, PipelineConfig};
use hrdea::sampler::{ChordRule, DirectionLaw};

use crate::setspec;
use crate::{
    AnalysisArgs, AnalyzeArgs, BenchArgs, ChordArg, Cli, Command, DataArgs, DensityArgs,
    DirectionLawArg, ModelArg, ModelArgs, RunArgs, SolveArgs,
};

const MATRIX_FILE: &str = "distances.csv";
const REPORT_FILE: &str = "report.csv";
const HISTOGRAM_DIR: &str = "histograms";

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot start worker threads")?;
            pool.install(|| execute(cli.command))
        }
        None => execute(cli.command),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Density(a) => density(a),
    }
}

fn sidecar_schema(path: &Path) -> Result<Option<Schema>> {
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".schema");
    let sidecar = PathBuf::from(sidecar);
    if !sidecar.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&sidecar)
        .with_context(|| format!("cannot read {}", sidecar.display()))?;
    let mut schema = Schema::new("");
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", sidecar.display(), i + 1))?;
        let list = || v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>();
        match k.trim() {
            "id" => schema.id = v.trim().to_string(),
            "inputs" => schema.inputs = list(),
            "outputs" => schema.outputs = list(),
            "undesirables" => schema.undesirables = list(),
            other => bail!("{}:{}: unknown key '{other}'", sidecar.display(), i + 1),
        }
    }
    Ok(Some(schema))
}

fn inferred_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header = text.lines().next().ok_or_else(|| anyhow!("{}: file is empty", path.display()))?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut schema = Schema::new(cols[0].clone());
    for c in &cols[1..] {
        match c.chars().next().map(|ch| ch.to_ascii_lowercase()) {
            Some('x') => schema.inputs.push(c.clone()),
            Some('y') => schema.outputs.push(c.clone()),
            Some('u') => schema.undesirables.push(c.clone()),
            _ => {}
        }
    }
    Ok(schema)
}

fn load(args: &DataArgs) -> Result<DataSet> {
    let mut schema = if !args.inputs.is_empty() || !args.outputs.is_empty() {
        Schema::new("")
            .inputs(args.inputs.clone())
            .outputs(args.outputs.clone())
            .undesirables(args.undesirables.clone())
    } else if let Some(s) = sidecar_schema(&args.data)? {
        s
    } else {
        inferred_schema(&args.data)?
    };
    if schema.id.is_empty() {
        schema.id = args.id.clone().unwrap_or_else(|| "dmu".into());
    } else if let Some(id) = &args.id {
        schema.id = id.clone();
    }
    if schema.inputs.is_empty() {
        bail!("--inputs: no input columns given or found");
    }
    if schema.outputs.is_empty() {
        bail!("--outputs: no output columns given or found");
    }
    load_dataset(&args.data, &schema).with_context(|| format!("--data {}", args.data.display()))
}

fn model_of(args: &ModelArgs) -> Result<(Direction, DeaModel)> {
    let dir: Direction = args
        .orientation
        .parse()
        .map_err(|e| anyhow!("--orientation: {e}"))?;
    let model = match args.model {
        ModelArg::Directional => DeaModel::Directional,
        ModelArg::Weak => DeaModel::WeakDisposability,
    };
    if !(args.epsilon.is_finite() && args.epsilon >= 0.0) {
        bail!("--epsilon must be a non-negative number, got {}", args.epsilon);
    }
    Ok((dir, model))
}

fn model_name(m: DeaModel) -> &'static str {
    match m {
        DeaModel::Directional => "directional",
        DeaModel::WeakDisposability => "weak-disposability",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn header(w: &mut dyn Write, meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let data = load(&a.data)?;
    let (dir, model) = model_of(&a.model)?;
    let opts = DeaOptions { epsilon: a.model.epsilon, ..DeaOptions::default() };
    let mut rows = Vec::with_capacity(data.n());
    for k in 0..data.n() {
        let sol = solve_dataset(&data, k, &dir, model, &opts)
            .with_context(|| format!("DMU '{}'", data.ids()[k]))?;
        rows.push(sol);
    }
    let mut w = sink(&a.out)?;
    header(
        &mut *w,
        &[
            ("command".into(), "solve".into()),
            ("data".into(), a.data.data.display().to_string()),
            ("direction".into(), dir.to_string()),
            ("model".into(), model_name(model).into()),
            ("epsilon".into(), opts.epsilon.to_string()),
            ("n".into(), data.n().to_string()),
        ],
    )?;
    writeln!(w, "dmu,distance,slack_sum,objective")?;
    for (id, s) in data.ids().iter().zip(&rows) {
        writeln!(w, "{id},{},{},{}", s.distance, s.slack_sum(), s.objective)?;
    }
    w.flush()?;
    Ok(())
}

fn check_analysis(a: &AnalysisArgs) -> Result<()> {
    if !(a.tau > 0.0 && a.tau < 1.0) {
        bail!("--tau must lie strictly between 0 and 1, got {}", a.tau);
    }
    if !(a.width.is_finite() && a.width > 0.0) {
        bail!("--width must be positive, got {}", a.width);
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    if a.t == 0 {
        bail!("--t must be at least 1");
    }
    if a.thin == 0 {
        bail!("--thin must be at least 1");
    }
    if a.analyze {
        check_analysis(&a.analysis)?;
    }
    let data = load(&a.data)?;
    let (direction, model) = model_of(&a.model)?;
    let (sets, xi_laws) = match &a.sets {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("--sets: cannot read {}", path.display()))?;
            let records = setspec::parse(&text).with_context(|| format!("--sets {}", path.display()))?;
            setspec::resolve(&records, &data).with_context(|| format!("--sets {}", path.display()))?
        }
        None => (degenerate_sets(&data)?, Vec::new()),
    };
    let cfg = PipelineConfig {
        direction,
        model,
        t: a.t,
        seed: a.seed,
        dea: DeaOptions { epsilon: a.model.epsilon, ..DeaOptions::distance_only() },
        rule: match a.chord_rule {
            ChordArg::Full => ChordRule::Full,
            ChordArg::Forward => ChordRule::Forward,
        },
        direction_law: match a.direction_law {
            DirectionLawArg::Coordinatewise => DirectionLaw::Coordinatewise,
            DirectionLawArg::Sphere => DirectionLaw::Sphere,
        },
        xi_laws,
        burn_in: a.burn_in,
        thin: a.thin,
    };
    let mut matrix = run_hr_dea(&data, &sets, &cfg)?;
    matrix.metadata.push(("data".into(), a.data.data.display().to_string()));
    if let Some(s) = &a.sets {
        matrix.metadata.push(("sets".into(), s.display().to_string()));
    }
    let path = a.out_dir.join(MATRIX_FILE);
    let mut w = create(&path)?;
    matrix.write_csv(&mut w)?;
    w.flush()?;
    if a.analyze {
        write_analysis(&matrix, &a.analysis, &a.out_dir)?;
    }
    Ok(())
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn write_analysis(matrix: &DistanceMatrix, a: &AnalysisArgs, dir: &Path) -> Result<RobustnessReport> {
    let report = analyze(matrix, a.tau, a.width)?;
    let mut w = create(&dir.join(REPORT_FILE))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    for (j, e) in report.erii.iter().enumerate() {
        let id = &matrix.ids[j];
        let mut w = create(&dir.join(HISTOGRAM_DIR).join(format!("{}.csv", file_stem(id))))?;
        header(&mut w, &report.metadata)?;
        writeln!(w, "# dmu={id}")?;
        writeln!(w, "x,y")?;
        for (x, y) in histogram(e, &report.scheme) {
            writeln!(w, "{x},{y}")?;
        }
        w.flush()?;
    }
    Ok(report)
}

fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let f = File::open(path).with_context(|| format!("--matrix: cannot open {}", path.display()))?;
    DistanceMatrix::read_csv(std::io::BufReader::new(f)).with_context(|| format!("--matrix {}", path.display()))
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    check_analysis(&a.analysis)?;
    let path = a.matrix.clone().unwrap_or_else(|| a.out_dir.join(MATRIX_FILE));
    let matrix = read_matrix(&path)?;
    write_analysis(&matrix, &a.analysis, &a.out_dir)?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let scenarios = a
        .scenarios
        .iter()
        .map(|s| s.parse::<Scenario>().map_err(|e| anyhow!("--scenarios: {e}")))
        .collect::<Result<Vec<_>>>()?;
    if a.reps == 0 {
        bail!("--reps must be at least 1");
    }
    if a.t == 0 {
        bail!("--t must be at least 1");
    }
    if a.n < 2 {
        bail!("--n must be at least 2");
    }
    let cfg = BenchConfig { scenarios, n: a.n, reps: a.reps, gaps: a.gaps, t: a.t, seed: a.seed };
    let report = run_benchmark(&cfg)?;
    let mut w = sink(&a.out)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn density(a: DensityArgs) -> Result<()> {
    let matrix = read_matrix(&a.matrix)?;
    let j = matrix
        .ids
        .iter()
        .position(|id| *id == a.dmu)
        .ok_or_else(|| anyhow!("--dmu: '{}' is not in the matrix", a.dmu))?;
    let support = if a.support == "range" {
        BetaSupport::SampleRange
    } else {
        let v: Vec<f64> = a
            .support
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| anyhow!("--support must be 'range' or 'q1,q2', got '{}'", a.support))?;
        if v.len() != 2 {
            bail!("--support must be 'range' or 'q1,q2', got '{}'", a.support);
        }
        BetaSupport::Fixed(v[0], v[1])
    };
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    let samples = matrix.row(j);
    let fit = fit_beta(samples, support).with_context(|| format!("DMU '{}'", a.dmu))?;
    let (rho, sigma) = beta_to_gaussian(fit.alpha, fit.beta);
    let span = fit.q2 - fit.q1;
    let mut meta = matrix.metadata.clone();
    meta.extend([
        ("dmu".to_string(), a.dmu.clone()),
        ("alpha".into(), fit.alpha.to_string()),
        ("beta".into(), fit.beta.to_string()),
        ("q1".into(), fit.q1.to_string()),
        ("q2".into(), fit.q2.to_string()),
        ("expected_distance".into(), beta_expected_distance(&fit).to_string()),
        ("ks".into(), ks_statistic(samples, &fit).to_string()),
        ("gaussian_mean".into(), (fit.q1 + span * rho).to_string()),
        ("gaussian_sd".into(), (span * sigma).to_string()),
    ]);
    let mut w = sink(&a.out)?;
    header(&mut *w, &meta)?;
    writeln!(w, "x,y")?;
    for (x, y) in fit.density_curve(a.points) {
        writeln!(w, "{x},{y}")?;
    }
    w.flush()?;
    Ok(())
}
