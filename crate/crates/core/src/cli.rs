//! Command-line front end. `main.rs` only calls [`main`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::error::{Error, Result};
use crate::experiments::{self, config_hash, ConfigFile, Report};
use crate::imageboundary as ib;
use crate::limits;
use crate::math::{parse_rational, trial_rng, wilson};
use crate::metrics::{distance_to_property, earthmover_distance, hamming, mixing_set, EarthmoverMode};
use crate::properties::{by_name, chessboard, er_profile, Property};
use crate::regularity::{
    is_regular_partition, satisfies_instance, satisfies_phi, PhiInstance, Refinement, RegularityInstance,
};
use crate::structures::{
    Alphabet, Image, OrderedGraph, OrderedString, OrderedStructure, Permutation, StructureKind, Symbol,
};
use crate::testers::{
    canonical_to_tolerant, run_canonical, run_piecewise, string_er_test, CanonicalTest, SimulatedCanonical,
    TesterReport, TolerantToPiecewise,
};

#[derive(Parser, Debug)]
#[command(name = "ordtest", version, about = "Property testing of ordered strings, images and graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance between two structures, or from one structure to a property.
    Dist(DistArgs),
    /// Earthmover-resilience profile of a property's sampler.
    Profile(ProfileArgs),
    /// Run a tester on an input file or a generated structure.
    Test(TestArgs),
    /// Shape boundaries of a binary image.
    Boundary(BoundaryArgs),
    /// Regularity checks on an ordered graph.
    Reg(RegArgs),
    /// Run the experiments listed in a config file.
    Run(RunArgs),
    /// Name and describe every experiment.
    ListExperiments,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Hamming,
    Earthmover,
    Mixing,
    Property,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// string, image or graph; guessed from the file when absent
    #[arg(long)]
    pub structure: Option<String>,
    /// alphabet size for string and image files
    #[arg(long, default_value_t = 2)]
    pub sigma: usize,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub kind: DistKind,
    #[arg(long, conflicts_with = "sampled")]
    pub exact: bool,
    /// heuristic earthmover search (an upper bound)
    #[arg(long)]
    pub sampled: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub property: Option<String>,
    #[command(flatten)]
    pub input: InputArgs,
    /// one file for mixing and property, two otherwise
    pub files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(long)]
    pub property: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.001,0.01,0.05")]
    pub budgets: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TesterKind {
    Canonical,
    Piecewise,
    Simulated,
    StringEr,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub tester: TesterKind,
    #[arg(long)]
    pub property: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// block size of the simulated tester
    #[arg(long)]
    pub t: Option<usize>,
    /// number of intervals of the piecewise tester
    #[arg(long)]
    pub k: Option<usize>,
    /// query count of the canonical table
    #[arg(long, default_value_t = 3)]
    pub q: usize,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// uniform[:σ], property:<name> or planted:chessboard|disk|ring
    #[arg(long, conflicts_with = "input")]
    pub generate: Option<String>,
    /// size of the generated structure
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[command(flatten)]
    pub fmt: InputArgs,
}

#[derive(Args, Debug)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub img: PathBuf,
    #[arg(long)]
    pub report: bool,
    #[arg(long)]
    pub regularize: Option<f64>,
    #[arg(long)]
    pub census: Option<usize>,
    #[arg(long)]
    pub er: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// where --regularize writes the recolored image
    #[arg(long)]
    pub out_img: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RegArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub refinement: Option<PathBuf>,
    /// γ for --refinement, as a fraction or decimal
    #[arg(long, default_value = "1/4")]
    pub gamma: String,
    #[arg(long, default_value = "exact")]
    pub mode: String,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// directory for the CSV reports
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Kind of a structure file: a two-number header followed by exactly C(n,2)
/// labels is a graph, several non-empty lines an image, anything else a string.
pub fn guess_kind(text: &str) -> StructureKind {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    if let Some(first) = lines.first() {
        let head: Vec<&str> = first.split_whitespace().collect();
        if head.len() == 2 && head.iter().all(|t| t.parse::<usize>().is_ok()) {
            let n: usize = head[0].parse().unwrap_or(0);
            let rest = lines[1..].iter().flat_map(|l| l.split_whitespace()).count();
            if rest == n * n.saturating_sub(1) / 2 {
                return StructureKind::Graph;
            }
        }
        if first.starts_with("P2") || lines.len() > 1 {
            return StructureKind::Image;
        }
    }
    StructureKind::String
}

pub fn read_structure(path: &Path, fmt: &InputArgs) -> Result<OrderedStructure> {
    let text = read(path)?;
    let kind = match &fmt.structure {
        Some(s) => StructureKind::parse(s)?,
        None => guess_kind(&text),
    };
    let alphabet = Alphabet::numeric(fmt.sigma);
    Ok(match kind {
        StructureKind::String => OrderedString::parse(&text, &alphabet)?.into(),
        StructureKind::Image => Image::parse(&text, &alphabet)?.into(),
        StructureKind::Graph => OrderedGraph::parse(&text, None)?.into(),
    })
}

/// Deterministic structure generator. `dist` is `uniform[:σ]`,
/// `property:<name>` or `planted:chessboard|disk|ring`.
pub fn generate(kind: StructureKind, n: usize, dist: &str, seed: u64) -> Result<OrderedStructure> {
    let mut rng = trial_rng(seed, 0);
    let (head, arg) = dist.split_once(':').unwrap_or((dist, ""));
    match head {
        "uniform" => {
            let sigma = if arg.is_empty() {
                2
            } else {
                arg.parse().map_err(|_| Error::Parameter(format!("bad alphabet size {arg:?}")))?
            };
            if sigma < 1 || sigma > 255 {
                return Err(Error::Parameter("alphabet size must be in 1..=255".into()));
            }
            let mut sym = || rng.gen_range(0..sigma) as Symbol;
            Ok(match kind {
                StructureKind::String => OrderedString::new((0..n).map(|_| sym()).collect(), sigma)?.into(),
                StructureKind::Image => Image::from_fn(n, n, sigma, |_, _| sym())?.into(),
                StructureKind::Graph => OrderedGraph::from_fn(n, sigma, |_, _| sym())?.into(),
            })
        }
        "property" => {
            let p = by_name(arg)?;
            if p.kind() != kind {
                return Err(Error::Parameter(format!("{} is about {}s", p.name(), p.kind().name())));
            }
            p.sample(n, &mut rng)
                .ok_or_else(|| Error::Capability(format!("{} has no sampler at n = {n}", p.name())))
        }
        "planted" if kind == StructureKind::Image => match arg {
            "chessboard" => Ok(chessboard(n)?.into()),
            "disk" => Ok(ib::disk_image(n, 0.35).into()),
            "ring" => Ok(ib::ring_image(n).into()),
            other => Err(Error::Parameter(format!("unknown planted image {other:?}"))),
        },
        _ => Err(Error::Parameter(format!("unknown distribution {dist:?} for {}s", kind.name()))),
    }
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cells).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let h: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    print!("{}", csv_line(&h));
    for r in rows {
        print!("{}", csv_line(r));
    }
}

fn want_files(files: &[PathBuf], n: usize) -> Result<()> {
    if files.len() != n {
        return Err(Error::Parameter(format!("expected {n} input file(s), got {}", files.len())));
    }
    Ok(())
}

fn cmd_dist(a: &DistArgs) -> Result<bool> {
    let header = ["kind", "n", "absolute", "relative", "witness"];
    let row = match a.kind {
        DistKind::Hamming | DistKind::Earthmover => {
            want_files(&a.files, 2)?;
            let f = read_structure(&a.files[0], &a.input)?;
            let g = read_structure(&a.files[1], &a.input)?;
            let (d, witness) = if a.kind == DistKind::Hamming {
                (hamming(&f, &g)?, None)
            } else {
                let mode = if a.sampled { EarthmoverMode::Heuristic } else { EarthmoverMode::Exact };
                let r = earthmover_distance(&f, &g, mode)?;
                (r.distance, r.witness)
            };
            vec![
                format!("{:?}", a.kind).to_lowercase(),
                f.base_len().to_string(),
                d.absolute().map_or("inf".into(), |v| v.to_string()),
                d.relative().map_or("inf".into(), |v| v.to_string()),
                witness.map_or(String::new(), |w| w.to_string()),
            ]
        }
        DistKind::Mixing => {
            want_files(&a.files, 1)?;
            let values: Vec<usize> = read(&a.files[0])?
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad permutation entry {t:?}"))))
                .collect::<Result<_>>()?;
            let p = Permutation::from_one_based(&values)?;
            let m = mixing_set(&p);
            let pairs: Vec<String> = m.pairs_one_based().iter().map(|(i, j)| format!("({i} {j})")).collect();
            vec!["mixing".into(), p.len().to_string(), m.absolute.to_string(), m.relative.to_string(), pairs.join(" ")]
        }
        DistKind::Property => {
            want_files(&a.files, 1)?;
            let name = a.property.as_deref().ok_or_else(|| Error::Parameter("--property is required".into()))?;
            let p = by_name(name)?;
            let f = read_structure(&a.files[0], &a.input)?;
            let d = distance_to_property(&f, p.as_ref())?;
            let cells = f.values().len() as i128;
            vec![
                "property".into(),
                f.base_len().to_string(),
                (d * cells).to_integer().to_string(),
                d.to_string(),
                String::new(),
            ]
        }
    };
    print_table(&header, &[row]);
    Ok(true)
}

fn cmd_profile(a: &ProfileArgs) -> Result<bool> {
    let p = by_name(&a.property)?;
    let prof = er_profile(p.as_ref(), a.n, &a.budgets, a.trials, a.seed)?;
    let rows: Vec<Vec<String>> = (0..prof.budgets.len())
        .map(|i| {
            vec![
                prof.budgets[i].to_string(),
                prof.worst_dh[i].to_string(),
                format!("{:.6}", prof.mean_dh[i]),
                prof.trials.to_string(),
            ]
        })
        .collect();
    print_table(&["budget", "worst_dH", "mean_dH", "trials"], &rows);
    Ok(true)
}

fn tester_input(a: &TestArgs, p: &dyn Property) -> Result<OrderedStructure> {
    match (&a.input, &a.generate) {
        (Some(path), _) => read_structure(path, &a.fmt),
        (None, Some(dist)) => generate(p.kind(), a.n, dist, a.seed),
        (None, None) => generate(p.kind(), a.n, &format!("property:{}", a.property), a.seed),
    }
}

fn cmd_test(a: &TestArgs) -> Result<bool> {
    let p = by_name(&a.property)?;
    let f = tester_input(a, p.as_ref())?;
    let report = match a.tester {
        TesterKind::StringEr => {
            let s = f
                .as_string()
                .ok_or_else(|| Error::Parameter("string-er needs a string input".into()))?;
            let delta = |e: f64| p.er_bound(e).unwrap_or(0.0);
            let mut accepts = 0;
            let mut q = 0;
            for i in 0..a.trials {
                let r = string_er_test(s, p.as_ref(), a.eps, &delta, a.seed.wrapping_add(i))?;
                accepts += u64::from(r.accept);
                q = r.samples as usize;
            }
            TesterReport::new("string-er".into(), s.len(), q, a.trials, accepts, a.seed)
        }
        kind => {
            let test = CanonicalTest::from_property(p.as_ref(), a.q, f.sigma())?;
            match kind {
                TesterKind::Canonical => run_canonical(&f, &test, a.trials, a.seed)?,
                _ => {
                    let k = a.k.unwrap_or(2);
                    let pw = TolerantToPiecewise::new(canonical_to_tolerant(test)?, k)?;
                    if kind == TesterKind::Piecewise {
                        run_piecewise(&f, &pw, a.trials, a.seed)?
                    } else {
                        let t = match a.t {
                            Some(t) => t,
                            None => crate::testers::default_block_size(k, a.q)
                                .ok_or_else(|| Error::Parameter("block size overflows".into()))?,
                        };
                        SimulatedCanonical::with_block_size(pw, t)?.run(&f, a.trials, a.seed)?
                    }
                }
            }
        }
    };
    let (lo, hi) = wilson(report.accepts, report.trials);
    print_table(
        &["tester", "n", "q", "trials", "accepts", "rate", "ci_lo", "ci_hi"],
        &[vec![
            report.tester.clone(),
            report.n.to_string(),
            report.q.to_string(),
            report.trials.to_string(),
            report.accepts.to_string(),
            format!("{:.6}", report.rate),
            format!("{lo:.6}"),
            format!("{hi:.6}"),
        ]],
    );
    Ok(true)
}

fn cmd_boundary(a: &BoundaryArgs) -> Result<bool> {
    let img = Image::parse(&read(&a.img)?, &Alphabet::binary())?;
    let mut did = false;
    if a.report || (a.regularize.is_none() && a.census.is_none() && a.er.is_none()) {
        did = true;
        let r = ib::boundary_report(&img)?;
        let rows: Vec<Vec<String>> = r
            .per_shape
            .iter()
            .map(|s| {
                vec![
                    (s.shape + 1).to_string(),
                    s.color.to_string(),
                    s.size.to_string(),
                    s.boundary.to_string(),
                    s.encircled.to_string(),
                ]
            })
            .collect();
        println!(
            "# side: {}, total_boundary: {}, sparsity: {:.6}, black_boundary: {}, c: {:.6}, boundary_pixel_violations: {}",
            r.side, r.total_boundary, r.sparsity, r.black_boundary, r.c, r.boundary_pixel_violations
        );
        print_table(&["shape", "color", "size", "boundary", "encircled"], &rows);
    }
    if let Some(delta) = a.regularize {
        did = true;
        let r = ib::regularize(&img, delta)?;
        println!(
            "# iterations: {}, modified: {}, strictly_decreasing: {}",
            r.iterations, r.modified, r.strictly_decreasing
        );
        let rows: Vec<Vec<String>> = r
            .boundary_sizes
            .iter()
            .enumerate()
            .map(|(i, b)| vec![(i + 1).to_string(), b.to_string()])
            .collect();
        print_table(&["iteration", "boundary_size"], &rows);
        if let Some(out) = &a.out_img {
            fs::write(out, r.image.to_text(&Alphabet::binary()))?;
        }
    }
    if let Some(d) = a.census {
        did = true;
        let c = ib::boundary_distance_census(&img, d)?;
        print_table(
            &["d", "count", "boundary", "inner_shapes", "ratio"],
            &[vec![
                c.d.to_string(),
                c.count.to_string(),
                c.boundary.to_string(),
                c.inner_shapes.to_string(),
                c.ratio.map_or(String::new(), |r| format!("{r:.6}")),
            ]],
        );
    }
    if let Some(delta) = a.er {
        did = true;
        let e = ib::er_experiment(&img, delta, a.trials, a.seed)?;
        print_table(
            &["n", "delta", "budget", "c", "trials", "worst_random", "worst_adversarial", "worst_schedule", "ratio"],
            &[vec![
                e.n.to_string(),
                e.delta.to_string(),
                e.budget.to_string(),
                format!("{:.6}", e.c),
                e.trials.to_string(),
                format!("{:.6}", e.worst_random),
                format!("{:.6}", e.worst_adversarial),
                e.worst_schedule.clone(),
                format!("{:.6}", e.ratio),
            ]],
        );
    }
    Ok(did)
}

fn cmd_reg(a: &RegArgs) -> Result<bool> {
    if a.mode != "exact" {
        return Err(Error::Parameter(format!("only --mode exact is supported here, got {:?}", a.mode)));
    }
    let g = OrderedGraph::parse(&read(&a.graph)?, None)?;
    let mut ok = true;
    if let Some(path) = &a.instance {
        let inst = RegularityInstance::parse(&read(path)?)?;
        let v = satisfies_instance(&g, &inst)?;
        ok &= v.satisfied;
        println!("check,satisfied,candidates");
        println!("instance,{},{}", v.satisfied, v.candidates);
        if let Some(w) = v.witness {
            print!("{}", w.to_text());
        }
    }
    if let Some(path) = &a.phi {
        let phi = PhiInstance::parse(&read(path)?)?;
        let v = satisfies_phi(&g, &phi)?;
        ok &= v.satisfied;
        println!("check,satisfied,candidates");
        println!("phi,{},{}", v.satisfied, v.candidates);
    }
    if let Some(path) = &a.refinement {
        let r = Refinement::parse(&read(path)?)?;
        let gamma = parse_rational(&a.gamma).ok_or_else(|| Error::Parse(format!("bad γ {:?}", a.gamma)))?;
        let v = is_regular_partition(&g, &r, &gamma)?;
        ok &= v.regular;
        println!("check,regular,irregular_pairs,total_pairs,fraction");
        println!("refinement,{},{},{},{}", v.regular, v.irregular.len(), v.total, v.fraction);
    }
    if a.instance.is_none() && a.phi.is_none() && a.refinement.is_none() {
        return Err(Error::Parameter("give --instance, --phi or --refinement".into()));
    }
    Ok(ok)
}

/// Runs every experiment of a config and writes `<output or name>.csv` files.
pub fn run_config(text: &str, out: &Path) -> Result<Vec<Report>> {
    let cfg = ConfigFile::parse(text)?;
    limits::set(cfg.limits.apply(limits::Limits::default()));
    fs::create_dir_all(out)?;
    let hash = config_hash(text);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut reports = Vec::new();
    for e in &cfg.experiment {
        log::info!("running {} (seed {})", e.name, e.seed);
        let report = experiments::run_experiment(e)?;
        let prov = vec![
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), e.seed.to_string()),
            ("config_sha256".to_string(), hash.clone()),
            ("timestamp_unix".to_string(), stamp.to_string()),
        ];
        let file = out.join(e.output.clone().unwrap_or_else(|| format!("{}.csv", e.name)));
        fs::write(&file, report.to_csv(&prov)?)?;
        for c in &report.checks {
            println!("{} {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, e.name, c.name, c.detail);
        }
        reports.push(report);
    }
    limits::reset();
    Ok(reports)
}

pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Dist(a) => cmd_dist(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Test(a) => cmd_test(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Reg(a) => cmd_reg(a),
        Command::Run(a) => Ok(run_config(&read(&a.config)?, &a.out)?.iter().all(Report::passed)),
        Command::ListExperiments => {
            for (name, what) in experiments::EXPERIMENTS {
                println!("{name:<26} {what}");
            }
            Ok(true)
        }
    }
}

/// 0 on success, 1 on a failed check or capacity error, 2 on bad input.
pub fn exit_code(r: &Result<bool>) -> i32 {
    match r {
        Ok(true) => 0,
        Ok(false) | Err(Error::Capacity(_)) | Err(Error::InputTooSmall(_)) => 1,
        Err(_) => 2,
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(t) = std::env::var("ORDTEST_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("ORDTEST_THREADS ignored: {e}");
        }
    }
    let cli = Cli::parse();
    let result = execute(&cli);
    if let Err(e) = &result {
        eprintln!("ordtest: {e}");
    }
    exit_code(&result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::properties::MonotoneString;

    #[test]
    fn generate_is_deterministic() {
        let a = generate(StructureKind::String, 4, "uniform", 9).unwrap();
        assert_eq!(a, generate(StructureKind::String, 4, "uniform", 9).unwrap());
        let m = generate(StructureKind::String, 30, "property:monotone_string", 2).unwrap();
        assert!(MonotoneString::default().contains(&m));
        let c = generate(StructureKind::Image, 8, "planted:chessboard", 0).unwrap();
        let img = c.as_image().unwrap();
        for r in 0..8 {
            for col in 0..7 {
                assert_ne!(img.get(r, col), img.get(r, col + 1));
            }
        }
        assert!(matches!(generate(StructureKind::String, 4, "zipf", 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn kind_guessing() {
        assert_eq!(guess_kind("3 2\n0 1 1\n"), StructureKind::Graph);
        assert_eq!(guess_kind("010\n110\n"), StructureKind::Image);
        assert_eq!(guess_kind("0011\n"), StructureKind::String);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(true)), 0);
        assert_eq!(exit_code(&Ok(false)), 1);
        assert_eq!(exit_code(&Err(Error::Capacity("x".into()))), 1);
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
