use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use ppvt::analysis::{
    check_closed_form_domain, coverage_closed_form, mean_ues_closed_form, w_approx, w_closed_form,
};
use ppvt::geometry::Window;
use ppvt::identities::{verify_identity as run_identity, FieldSet, Identity, IdentityConfig};
use ppvt::mc::Estimate;
use ppvt::netsim::{estimate_coverage_mc, estimate_mean_ues, estimate_w_mc, estimate_w_mc_grid};
use ppvt::ppp;
use ppvt::quadrature::QuadratureSpec;
use ppvt::report::fmt_g;
use ppvt::voronoi::check_membership_equivalence;

use crate::config::{
    db_to_linear, linear_to_db, parse_grid, parse_list, CliError, CliResult, FileConfig, RunConfig,
    ScenarioFlags,
};

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn value_line(e: &Estimate) -> String {
    format!("{},{}\n", fmt_g(e.mean), fmt_g(e.stderr))
}

#[derive(Debug, Args)]
pub struct SamplePppArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// points per unit area
    #[arg(long, allow_hyphen_values = true)]
    intensity: Option<f64>,
    /// radius of the origin-centered disk window
    #[arg(long, allow_hyphen_values = true)]
    window_radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn sample_ppp(a: &SamplePppArgs) -> CliResult<()> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let intensity = a.intensity.map_or_else(|| file.get("intensity"), |v| Ok(Some(v)))?.unwrap_or(1.0);
    let radius = a.window_radius.map_or_else(|| file.get("window_radius"), |v| Ok(Some(v)))?.unwrap_or(5.0);
    let seed = a.seed.map_or_else(|| file.get("seed"), |v| Ok(Some(v)))?.unwrap_or(1);
    let out = a.out.clone().or_else(|| file.raw("output").map(PathBuf::from));
    let window = Window::centered_disk(radius)
        .map_err(|_| CliError::Usage(format!("invalid value for window_radius: {radius}")))?;
    let sample = ppp::sample_ppp(intensity, window, seed)?;
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    emit(out.as_deref(), &String::from_utf8_lossy(&buf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdentityChoice {
    Lemma1,
    Lemma2,
    RemarkSum,
    RemarkProduct,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyIdentityArgs {
    #[arg(long, value_enum)]
    identity: IdentityChoice,
    #[command(flatten)]
    flags: ScenarioFlags,
}

const IDENTITY_HEADER: &str = "identity,field_set,closed_form,mc_mean,mc_stderr,n_rep,pass\n";

pub fn verify_identity(a: &VerifyIdentityArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(&a.flags, 100_000)?;
    let cfg = IdentityConfig {
        lambda1: rc.scenario.lambda_u,
        lambda2: rc.scenario.lambda_b,
        ..IdentityConfig::default()
    };
    let mut text = String::from(IDENTITY_HEADER);
    let mut all_pass = true;
    let wanted: Vec<IdentityChoice> = match a.identity {
        IdentityChoice::All => vec![
            IdentityChoice::Lemma1,
            IdentityChoice::Lemma2,
            IdentityChoice::RemarkSum,
            IdentityChoice::RemarkProduct,
        ],
        one => vec![one],
    };
    for choice in wanted {
        let identity = match choice {
            IdentityChoice::Lemma2 => {
                let r = check_membership_equivalence(rc.n_rep, rc.seed);
                let agree = if r.checked == 0 {
                    0.0
                } else {
                    (r.checked - r.mismatches) as f64 / r.checked as f64
                };
                let pass = r.mismatches == 0 && r.checked > 0;
                all_pass &= pass;
                writeln!(text, "lemma2,random_sites,1,{},0,{},{pass}", fmt_g(agree), r.checked).unwrap();
                continue;
            }
            IdentityChoice::Lemma1 => Identity::Lemma1,
            IdentityChoice::RemarkSum => Identity::RemarkSum,
            IdentityChoice::RemarkProduct => Identity::RemarkProduct,
            IdentityChoice::All => unreachable!(),
        };
        for fs in FieldSet::ALL {
            match run_identity(identity, fs, &cfg, rc.n_rep, rc.seed) {
                Ok(c) => {
                    all_pass &= c.pass();
                    writeln!(
                        text,
                        "{},{},{},{},{},{},{}",
                        identity.name(),
                        fs.name(),
                        fmt_g(c.closed_form),
                        fmt_g(c.estimate.mean),
                        fmt_g(c.estimate.stderr),
                        c.estimate.n_replications,
                        c.pass()
                    )
                    .unwrap();
                }
                Err(ppvt::Error::Validation { key, reason }) => {
                    return Err(CliError::Usage(format!("invalid {key}: {reason}")))
                }
                Err(e) => {
                    all_pass = false;
                    eprintln!("ppvt: {}/{}: {e}", identity.name(), fs.name());
                    writeln!(text, "{},{},nan,nan,nan,{},error", identity.name(), fs.name(), rc.n_rep).unwrap();
                }
            }
        }
    }
    emit(rc.output_path.as_deref(), &text)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Failure("not every identity check passed".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Closed,
    Approx,
    Mc,
}

#[derive(Debug, Args)]
pub struct MeanUesArgs {
    #[arg(long, value_enum, default_value = "closed")]
    mode: Mode,
    #[command(flatten)]
    flags: ScenarioFlags,
}

pub fn mean_ues(a: &MeanUesArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(&a.flags, 20_000)?;
    rc.scenario.validate()?;
    let line = match a.mode {
        Mode::Closed => format!("{}\n", fmt_g(mean_ues_closed_form(rc.scenario.lambda_u, rc.scenario.lambda_b)?)),
        Mode::Mc => value_line(&estimate_mean_ues(&rc.scenario, rc.n_rep, rc.seed)?),
        Mode::Approx => return Err(CliError::Usage("mean-ues supports --mode closed|mc".into())),
    };
    emit(rc.output_path.as_deref(), &line)
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long, value_enum, default_value = "closed")]
    mode: Mode,
    #[command(flatten)]
    flags: ScenarioFlags,
}

pub fn coverage(a: &CoverageArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(&a.flags, 100_000)?;
    let line = match a.mode {
        Mode::Closed => {
            check_closed_form_domain(&rc.scenario)?;
            format!("{}\n", fmt_g(coverage_closed_form(rc.scenario.gamma)?))
        }
        Mode::Mc => value_line(&estimate_coverage_mc(&rc.scenario, rc.n_rep, rc.seed)?),
        Mode::Approx => return Err(CliError::Usage("coverage supports --mode closed|mc".into())),
    };
    emit(rc.output_path.as_deref(), &line)
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[arg(long, value_enum, default_value = "closed")]
    mode: Mode,
    #[command(flatten)]
    flags: ScenarioFlags,
}

pub fn bandwidth(a: &BandwidthArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(&a.flags, 20_000)?;
    let q = QuadratureSpec::default();
    let line = match a.mode {
        Mode::Closed => format!("{}\n", fmt_g(w_closed_form(&rc.scenario, &q)?)),
        Mode::Approx => format!("{}\n", fmt_g(w_approx(&rc.scenario, &q)?)),
        Mode::Mc => value_line(&estimate_w_mc(&rc.scenario, rc.n_rep, rc.seed)?),
    };
    emit(rc.output_path.as_deref(), &line)
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// 1: both curves; 2: adds their difference
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    figure: u8,
    /// comma-separated target rates, bits/s
    #[arg(long)]
    rates: Option<String>,
    /// lambda_u / lambda_b
    #[arg(long)]
    ratio: Option<f64>,
    /// dB grid as lo:step:hi or a comma list
    #[arg(long, allow_hyphen_values = true)]
    gamma_grid_db: Option<String>,
    /// linear grid as a comma list (overrides the dB grid)
    #[arg(long)]
    gamma_grid: Option<String>,
    /// add Monte Carlo columns
    #[arg(long)]
    with_mc: bool,
    #[command(flatten)]
    flags: ScenarioFlags,
}

fn figure_grid_db(a: &FigureArgs, file: &FileConfig) -> CliResult<Vec<f64>> {
    if let Some(g) = a.gamma_grid.as_deref() {
        return Ok(parse_list("gamma_grid", g)?.into_iter().map(linear_to_db).collect());
    }
    if let Some(g) = a.gamma_grid_db.as_deref() {
        return parse_grid("gamma_grid_db", g);
    }
    if let Some(g) = file.raw("gamma_grid") {
        return Ok(parse_list("gamma_grid", g)?.into_iter().map(linear_to_db).collect());
    }
    parse_grid("gamma_grid_db", file.raw("gamma_grid_db").unwrap_or("-20:1:30"))
}

fn cell(v: &ppvt::Result<f64>) -> String {
    match v {
        Ok(x) => fmt_g(*x),
        Err(_) => "error".to_string(),
    }
}

pub fn figure(a: &FigureArgs) -> CliResult<()> {
    let rc = RunConfig::resolve(&a.flags, 20_000)?;
    let rates = match a.rates.as_deref().or(rc.file.raw("rates")) {
        Some(r) => parse_list("rates", r)?,
        None => vec![1e3, 1e4, 1e5],
    };
    let ratio = match a.ratio {
        Some(r) => r,
        None => rc.file.get("ratio")?.unwrap_or(10.0),
    };
    let grid_db = figure_grid_db(a, &rc.file)?;
    let base = ppvt::netsim::NetworkScenario {
        lambda_u: ratio * rc.scenario.lambda_b,
        ..rc.scenario
    };
    base.validate()?;
    check_closed_form_domain(&base)?;
    for r in &rates {
        ppvt::netsim::NetworkScenario { rate: *r, ..base }.validate()?;
    }
    let q = QuadratureSpec::default();
    let mut text = String::from("gamma_db,rate,W_exact,W_approx");
    if a.with_mc {
        text.push_str(",W_mc_mean,W_mc_stderr");
    }
    if a.figure == 2 {
        text.push_str(",diff");
    }
    text.push('\n');
    let mut failed = false;
    for &rate in &rates {
        let s = ppvt::netsim::NetworkScenario { rate, ..base };
        let gammas: Vec<f64> = grid_db.iter().map(|d| db_to_linear(*d)).collect();
        let mc = if a.with_mc {
            match estimate_w_mc_grid(&s, &gammas, rc.n_rep, rc.seed) {
                Ok(v) => Some(Ok(v)),
                Err(ppvt::Error::Validation { key, reason }) => {
                    return Err(CliError::Usage(format!("invalid {key}: {reason}")))
                }
                Err(e) => Some(Err(e)),
            }
        } else {
            None
        };
        for (i, (&db, &g)) in grid_db.iter().zip(&gammas).enumerate() {
            let sg = s.with_gamma(g);
            let exact = w_closed_form(&sg, &q);
            let approx = w_approx(&sg, &q);
            failed |= exact.is_err() || approx.is_err();
            write!(text, "{},{},{},{}", fmt_g(db), fmt_g(rate), cell(&exact), cell(&approx)).unwrap();
            match &mc {
                Some(Ok(est)) => write!(text, ",{},{}", fmt_g(est[i].mean), fmt_g(est[i].stderr)).unwrap(),
                Some(Err(_)) => {
                    failed = true;
                    text.push_str(",error,error");
                }
                None => {}
            }
            if a.figure == 2 {
                let diff = match (&exact, &approx) {
                    (Ok(e), Ok(w)) => Ok(w - e),
                    (Err(_), _) | (_, Err(_)) => Err(ppvt::Error::Validation {
                        key: "diff",
                        reason: String::new(),
                    }),
                };
                write!(text, ",{}", cell(&diff)).unwrap();
            }
            text.push('\n');
        }
        if let Some(Err(e)) = &mc {
            eprintln!("ppvt: rate {}: {e}", fmt_g(rate));
        }
    }
    emit(rc.output_path.as_deref(), &text)?;
    if failed {
        Err(CliError::Failure("some rows could not be evaluated".into()))
    } else {
        Ok(())
    }
}
