use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use salem_lab::constructions::{
    isotropic_subspace, random_s_sidon, random_salem_subset, random_subset, salem_subset_size, sidon_parabola,
    weak_not_strong_set, Construction, DEFAULT_MAX_ATTEMPTS, DEFAULT_SALEM_C,
};
use salem_lab::energy::{additive_energy, geometric_thresholds, representation_counts, salem_assess, sidon_profile, RepKind};
use salem_lab::experiment::{point_seed, run_sweep, sharpness_experiment, sumproduct_from_spec, SeedConfig, SweepConfig};
use salem_lab::incidence::{count_incidences, count_incidences_lifted, evaluate_bounds, spheres_as_objects};
use salem_lab::report::{emit_report, OutputFormat};
use salem_lab::verify::{run_suite, Suite, VerifyOptions};
use salem_lab::{FieldDesc, LabError, Limits, PointSet, Result, SValue, Sphere, Vector};

#[derive(Parser)]
#[command(name = "salem-lab", version, about = "Incidence and additive-energy experiments over finite fields")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Field spec: `q`, `p^n` or `p^n/c0,...,cn`. Repeat for sweeps.
    #[arg(long, global = true)]
    field: Vec<String>,
    /// Ambient dimension d. Repeat for sweeps.
    #[arg(long, global = true)]
    dim: Vec<usize>,
    /// Salem exponent s, as a decimal or fraction. Repeat for sweeps.
    #[arg(long = "s", global = true)]
    s: Vec<SValue>,
    /// Even moment u. Repeat for sweeps.
    #[arg(long = "u", global = true)]
    u: Vec<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<u32>,
    /// Largest q^d that may be enumerated.
    #[arg(long, global = true)]
    limit_grid: Option<u64>,
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write a report even when there are no rows.
    #[arg(long, global = true)]
    allow_empty: bool,
    /// Sweep configuration file (JSON); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Record wall-clock time per row.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Describe a field.
    Field,
    /// Build a point set.
    Construct {
        recipe: Recipe,
        /// Set size for `random-subset`.
        #[arg(long)]
        size: Option<u64>,
        /// Acceptance constant C for `salem-subset`.
        #[arg(long)]
        c: Option<SValue>,
    },
    /// Additive energy and Salem constants of a point set.
    Energy {
        #[command(flatten)]
        input: PointsInput,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Difference-representation profile of a point set.
    Profile {
        #[command(flatten)]
        input: PointsInput,
    },
    /// Point-sphere incidences with every bound evaluated.
    Incidence {
        #[command(flatten)]
        input: PointsInput,
        /// Spheres as `(c1,..,cd):r;...`, or `points:r` for radius-r spheres at every point.
        #[arg(long, conflicts_with = "spheres_file")]
        spheres: Option<String>,
        /// JSON array of spheres.
        #[arg(long)]
        spheres_file: Option<PathBuf>,
        /// Also count through the lifting and check agreement.
        #[arg(long)]
        lifted: bool,
    },
    /// Run a seeded verification battery.
    Verify { theorem: Suite },
    /// Run a parameter sweep.
    Sweep,
    /// Zero-radius spheres on an isotropic subspace against a Salem subset.
    Sharpness,
    /// Sum-product incidence experiment.
    Sumproduct {
        /// `squares:N`, `interval:N`, `random:N` or a list such as `0,1,3`.
        #[arg(long)]
        set: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Recipe {
    IsotropicSubspace,
    SalemSubset,
    SidonParabola,
    WeakNotStrong,
    RandomSSidon,
    RandomSubset,
    FullGrid,
}

#[derive(Args)]
struct PointsInput {
    /// Points as `(x1,..,xd);(y1,..,yd)`.
    #[arg(long, conflicts_with = "points_file")]
    points: Option<String>,
    /// JSON point set or construction, as written by `construct`.
    #[arg(long)]
    points_file: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointsFile {
    Construction(Construction),
    Points(PointSet),
}

impl Common {
    fn limits(&self) -> Limits {
        let mut l = Limits::default();
        if let Some(g) = self.limit_grid {
            l.grid = g;
        }
        l
    }

    fn one<'a, T>(&self, values: &'a [T], what: &str) -> Result<Option<&'a T>> {
        match values {
            [] => Ok(None),
            [v] => Ok(Some(v)),
            _ => Err(LabError::OutOfRange(format!("{what} takes a single value here"))),
        }
    }

    fn field(&self) -> Result<FieldDesc> {
        let spec = self.one(&self.field, "--field")?.ok_or_else(|| LabError::OutOfRange("--field is required".into()))?;
        FieldDesc::from_spec(spec)
    }

    fn dim(&self) -> Result<usize> {
        self.one(&self.dim, "--dim")?.copied().ok_or_else(|| LabError::OutOfRange("--dim is required".into()))
    }

    fn s(&self) -> Result<SValue> {
        Ok(self.one(&self.s, "--s")?.copied().unwrap_or_else(SValue::half))
    }

    fn u(&self) -> Result<u32> {
        Ok(self.one(&self.u, "--u")?.copied().unwrap_or(4))
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> LabError {
    LabError::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn load_points(c: &Common, input: &PointsInput) -> Result<PointSet> {
    match (&input.points, &input.points_file) {
        (Some(text), _) => PointSet::parse(&c.field()?, c.dim()?, text),
        (None, Some(path)) => {
            let parsed: PointsFile = serde_json::from_str(&read(path)?)
                .map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
            Ok(match parsed {
                PointsFile::Construction(c) => c.points,
                PointsFile::Points(p) => p,
            })
        }
        (None, None) => Err(LabError::OutOfRange("give --points or --points-file".into())),
    }
}

fn parse_spheres(points: &PointSet, text: &str) -> Result<Vec<Sphere>> {
    let field = points.field();
    if let Some(r) = text.trim().strip_prefix("points:") {
        let r = field.parse_scalar(r)?;
        return Ok(points.iter().map(|a| Sphere::new(a.clone(), r)).collect());
    }
    text.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (c, r) = t.rsplit_once(':').ok_or_else(|| LabError::Parse(format!("sphere {t:?}; expected center:radius")))?;
            let center = Vector::parse(field, c)?;
            if center.dim() != points.dim() {
                return Err(LabError::DimensionMismatch { expected: points.dim(), got: center.dim() });
            }
            Ok(Sphere::new(center, field.parse_scalar(r)?))
        })
        .collect()
}

fn write_json<T: Serialize>(c: &Common, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Io(e.to_string()))?;
    text.push('\n');
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct FieldInfo {
    spec: String,
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    q_mod_4: u32,
    sqrt_minus_one: Option<u32>,
}

fn construct(c: &Common, recipe: Recipe, size: Option<u64>, salem_c: Option<SValue>) -> Result<Construction> {
    let limits = c.limits();
    let field = c.field()?;
    let seed = c.seed();
    let s = c.s()?;
    Ok(match recipe {
        Recipe::IsotropicSubspace => {
            let w = isotropic_subspace(&field, c.dim()?, &limits)?;
            Construction { points: w.elements, recipe: w.recipe }
        }
        Recipe::SalemSubset => {
            let w = isotropic_subspace(&field, c.dim()?, &limits)?;
            random_salem_subset(&w, s, seed, salem_c.unwrap_or(DEFAULT_SALEM_C), DEFAULT_MAX_ATTEMPTS, &limits)?
        }
        Recipe::SidonParabola => sidon_parabola(field.p() as u64, field.n(), c.dim()?, &limits)?,
        Recipe::WeakNotStrong => weak_not_strong_set(field.q() as u64)?,
        Recipe::RandomSSidon => random_s_sidon(&field, c.dim()?, s, seed, DEFAULT_MAX_ATTEMPTS, &limits)?,
        Recipe::RandomSubset => {
            let d = c.dim()?;
            let size = size.unwrap_or_else(|| salem_subset_size(field.q(), d, s));
            random_subset(&field, d, size, seed, &limits)?
        }
        Recipe::FullGrid => {
            let d = c.dim()?;
            let points = PointSet::full_grid(&field, d, limits.grid)?;
            let recipe = salem_lab::constructions::ConstructionRecipe::new(
                salem_lab::constructions::ConstructionKind::FullGrid,
                &field,
                d,
                "every point of F_q^d",
            );
            Construction { points, recipe }
        }
    })
}

fn sweep_config(c: &Common) -> Result<SweepConfig> {
    let mut cfg = match &c.config {
        Some(path) => SweepConfig::from_json(&read(path)?)?,
        None => SweepConfig::default(),
    };
    if !c.field.is_empty() {
        cfg.fields = c.field.clone();
    }
    if !c.dim.is_empty() {
        cfg.dims = c.dim.clone();
    }
    if !c.s.is_empty() {
        cfg.s_values = c.s.clone();
    }
    if !c.u.is_empty() {
        cfg.u_values = c.u.clone();
    }
    let seeds = SeedConfig {
        master: c.seed.unwrap_or(cfg.seeds.master),
        replicates: c.replicates.unwrap_or(cfg.seeds.replicates),
    };
    cfg.seeds = seeds;
    if let Some(g) = c.limit_grid {
        cfg.limits.grid = g;
    }
    if let Some(f) = c.format {
        cfg.output.format = f;
    }
    if let Some(p) = &c.out {
        cfg.output.path = Some(p.display().to_string());
    }
    cfg.timing |= c.timing;
    Ok(cfg)
}

/// Returns whether an exact identity failed.
fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    let limits = c.limits();
    let format = c.format.unwrap_or_default();
    match cli.command {
        Command::Field => {
            let f = c.field()?;
            write_json(c, &FieldInfo {
                spec: f.spec_string(),
                p: f.p(),
                n: f.n(),
                q: f.q(),
                modulus: f.modulus().to_vec(),
                q_mod_4: f.q() % 4,
                sqrt_minus_one: f.sqrt_of_minus_one().map(|x| x.code()),
            })?;
        }
        Command::Construct { recipe, size, c: salem_c } => write_json(c, &construct(c, recipe, size, salem_c)?)?,
        Command::Energy { input, k } => {
            let p = load_points(c, &input)?;
            let report = additive_energy(&p, k, &limits)?.with_structured_terms(&[c.s()?]);
            let salem = if p.is_empty() { None } else { Some(salem_assess(&p, c.s()?, k, &limits)?) };
            write_json(c, &serde_json::json!({ "energy": report, "salem": salem }))?;
        }
        Command::Profile { input } => {
            let p = load_points(c, &input)?;
            let rep = representation_counts(&p, RepKind::Difference, &limits)?;
            let m = rep.entries().iter().filter(|e| e.0 != 0).map(|e| e.1).max().unwrap_or(0);
            let s_values = if c.s.is_empty() { vec![SValue::half()] } else { c.s.clone() };
            write_json(c, &sidon_profile(&p, &geometric_thresholds(m), &s_values, &limits)?)?;
        }
        Command::Incidence { input, spheres, spheres_file, lifted } => {
            let p = load_points(c, &input)?;
            let spheres = match (spheres, spheres_file) {
                (Some(text), _) => parse_spheres(&p, &text)?,
                (None, Some(path)) => serde_json::from_str(&read(&path)?)
                    .map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?,
                (None, None) => return Err(LabError::OutOfRange("give --spheres or --spheres-file".into())),
            };
            let report = if lifted {
                count_incidences_lifted(&p, &spheres, &limits)?
            } else {
                count_incidences(&p, &spheres_as_objects(&spheres), &limits)?
            };
            let bounds = evaluate_bounds(&report, c.s()?, c.u()?, None);
            write_json(c, &serde_json::json!({ "incidence": report, "bounds": bounds }))?;
        }
        Command::Verify { theorem } => {
            let mut o = VerifyOptions::new(c.field()?, c.dim()?);
            o.s = c.s()?;
            o.u = c.u()?;
            o.seed = c.seed();
            o.replicates = c.replicates.unwrap_or(o.replicates);
            o.limits = limits;
            let report = run_suite(theorem, &o)?;
            write_json(c, &report)?;
            return Ok(!report.passed());
        }
        Command::Sweep => {
            let cfg = sweep_config(c)?;
            let rows = run_sweep(&cfg)?;
            let path = cfg.output.path.as_deref().map(Path::new);
            emit_report(&rows, cfg.output.format, path, c.allow_empty)?;
            return Ok(rows.iter().any(|r| r.status == salem_lab::experiment::RowStatus::Error));
        }
        Command::Sharpness => {
            let field = c.field()?;
            let (d, s) = (c.dim()?, c.s()?);
            let rows = (0..c.replicates.unwrap_or(1) as u64)
                .map(|i| {
                    let mut row = sharpness_experiment(&field, d, s, point_seed(c.seed(), i), &limits)?;
                    row.index = i;
                    row.replicate = i as u32;
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            emit_report(&rows, format, c.out.as_deref(), c.allow_empty)?;
        }
        Command::Sumproduct { set } => {
            let row = sumproduct_from_spec(&c.field()?, &set, c.dim()?, c.s()?, c.seed(), &limits)?;
            emit_report(&[row], format, c.out.as_deref(), c.allow_empty)?;
        }
    }
    Ok(false)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SALEM_LAB_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| LabError::Parse(format!("SALEM_LAB_THREADS={value:?}")))?;
    if n == 0 {
        return Err(LabError::OutOfRange("SALEM_LAB_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| LabError::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("salem-lab: an exact identity was violated");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("salem-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
