use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crnkit::complex_map::{check_inward, check_negativity, omega_build, run_counterexample, GhatContext};
use crnkit::json;
use crnkit::{find_steady_state, parse_network, simulate, Error, MassActionSystem, SolverOptions};

#[derive(Parser)]
#[command(
    name = "crnkit",
    version,
    about = "Steady states and certificates for weakly reversible mass-action networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural summary of a network file.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Positive steady state in the stoichiometric class of a point.
    SteadyState {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Integrate the mass-action ODE from a point.
    Simulate {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
        /// Write the trajectory as CSV, one row per output time.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sampling checks of thresholds, Ω and the two-pair counterexample.
    Verify {
        check: Check,
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        /// Perturbation radius for the perturbed threshold check.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Lemmas,
    Omega,
    Counterexample,
}

/// Output of a command and whether it counts as success.
struct Outcome {
    text: String,
    ok: bool,
}

fn load(path: &Path) -> Result<MassActionSystem, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidNetwork(format!("cannot read {}: {e}", path.display())))?;
    parse_network(&text)
}

fn fmt_vec(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x:.10}")).collect::<Vec<_>>().join(", ")
}

fn analyze(file: &Path, as_json: bool) -> Result<Outcome, Error> {
    let sys = load(file)?;
    let v = json::analyze(&sys);
    if as_json {
        return Ok(Outcome { text: json::emit(&v), ok: true });
    }
    let net = sys.network();
    let mut s = String::new();
    let _ = writeln!(s, "species        {} ({})", net.n(), net.species().join(", "));
    let _ = writeln!(s, "complexes      {}", net.m());
    let _ = writeln!(s, "linkage        {}", net.ell());
    for (i, r) in net.linkage().iter().enumerate() {
        let labels: Vec<String> = r.clone().map(|c| json::complex_label(net, c)).collect();
        let _ = writeln!(s, "  class {}: {}", i + 1, labels.join(", "));
    }
    let _ = writeln!(s, "weakly rev.    {}", net.is_weakly_reversible());
    let _ = writeln!(s, "stoich. rank   {}", net.stoichiometric_rank());
    let _ = write!(s, "deficiency     {}", net.deficiency());
    Ok(Outcome { text: s, ok: true })
}

fn steady_text(r: &crnkit::SteadyStateResult) -> String {
    format!(
        "x                 [{}]\nresidual          {:e}\ncomplex residual  {:e}\nclass error       {:e}\niterations        {}\nmethod            {}",
        fmt_vec(&r.x),
        r.residual_species,
        r.residual_complex,
        r.class_error,
        r.iterations,
        r.method
    )
}

fn steady_state(file: &Path, point: Vec<f64>, opts: SolverOptions, as_json: bool) -> Result<Outcome, Error> {
    let sys = load(file)?;
    let class = sys.stoich_class(DVector::from_vec(point))?;
    match find_steady_state(&sys, &class, opts) {
        Ok(r) => {
            let text = if as_json { json::emit(&json::steady_state(&r)) } else { steady_text(&r) };
            Ok(Outcome { text, ok: true })
        }
        Err(Error::NoConvergence(best)) => {
            let text = if as_json {
                json::emit(&json::steady_state(&best))
            } else {
                format!("no convergence; best iterate:\n{}", steady_text(&best))
            };
            print_out(&text);
            Err(Error::NoConvergence(best))
        }
        Err(e) => Err(e),
    }
}

fn simulate_cmd(
    file: &Path,
    x0: Vec<f64>,
    t_end: f64,
    tol: f64,
    as_json: bool,
    csv: Option<PathBuf>,
) -> Result<Outcome, Error> {
    let sys = load(file)?;
    let x0 = DVector::from_vec(x0);
    let traj = simulate(&sys, &x0, t_end, tol)?;
    let class = sys.stoich_class(x0)?;
    let class_error = class.membership_error(traj.final_state());
    if let Some(path) = csv {
        let mut out = String::from("t");
        for name in sys.network().species() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let _ = write!(out, "{t:e}");
            for v in x.iter() {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        std::fs::write(&path, out).map_err(|e| Error::Integration(format!("cannot write {}: {e}", path.display())))?;
    }
    let text = if as_json {
        json::emit(&json::trajectory(&traj, class_error))
    } else {
        format!(
            "t                 {}\nx                 [{}]\nresidual          {:e}\nconverged         {}\nsteps             {}",
            traj.times.last().unwrap(),
            fmt_vec(traj.final_state()),
            traj.final_residual,
            traj.converged,
            traj.times.len() - 1
        )
    };
    Ok(Outcome { text, ok: true })
}

fn need_file(file: Option<PathBuf>, check: &str) -> Result<PathBuf, Error> {
    file.ok_or_else(|| Error::Precondition(format!("`verify {check}` needs a network file")))
}

fn verify_lemmas(file: &Path, samples: usize, seed: u64, rho: f64, as_json: bool) -> Result<Outcome, Error> {
    let sys = load(file)?;
    if !sys.network().is_weakly_reversible() {
        return Err(Error::NotWeaklyReversible);
    }
    let checks = check_negativity(&sys, rho, samples, seed)?;
    let total: usize = checks.iter().map(|c| 2 * c.samples).sum();
    let violations: usize = checks.iter().map(|c| c.violations + c.perturbed_violations).sum();
    let thresholds: Vec<Value> = checks
        .iter()
        .map(|c| json!({"class": c.class + 1, "L": json::float(c.l), "rho": json::float(c.rho), "R": json::float(c.r)}))
        .collect();
    let text = if as_json {
        let details: Vec<Value> = checks
            .iter()
            .map(|c| {
                json!({
                    "class": c.class + 1,
                    "violations": c.violations,
                    "perturbed_violations": c.perturbed_violations,
                    "worst_margin": json::float(c.worst),
                    "worst_perturbed_margin": json::float(c.worst_perturbed),
                })
            })
            .collect();
        let mut extra = Map::new();
        extra.insert("classes".into(), Value::Array(details));
        json::emit(&json::verify("lemmas", total, violations, Value::Array(thresholds), extra))
    } else {
        let mut s = String::new();
        for c in &checks {
            let _ = writeln!(
                s,
                "class {}: L = {:.6e}, R(rho={}) = {:.6e}, violations {}/{} unperturbed, {}/{} perturbed, worst margins {:.3e} / {:.3e}",
                c.class + 1,
                c.l,
                c.rho,
                c.r,
                c.violations,
                c.samples,
                c.perturbed_violations,
                c.samples,
                c.worst,
                c.worst_perturbed
            );
        }
        let _ = write!(s, "total violations: {violations} of {total} samples");
        s
    };
    Ok(Outcome { text, ok: violations == 0 })
}

fn verify_omega(
    file: &Path,
    point: Option<Vec<f64>>,
    samples: usize,
    seed: u64,
    as_json: bool,
) -> Result<Outcome, Error> {
    let sys = load(file)?;
    if !sys.network().is_weakly_reversible() {
        return Err(Error::NotWeaklyReversible);
    }
    let point = point.ok_or_else(|| Error::Precondition("`verify omega` needs --point".into()))?;
    let class = sys.stoich_class(DVector::from_vec(point))?;
    let ctx = GhatContext::with_birch(sys, &class)?;
    let spec = omega_build(ctx)?;
    let report = check_inward(&spec, samples, seed);
    let text = if as_json {
        json::emit(&json::verify(
            "omega",
            report.samples,
            report.violations,
            json::omega_thresholds(&spec),
            json::inward_extra(&report),
        ))
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "dim H = {}", spec.context().h().dim());
        for (k, r) in spec.radii().iter().enumerate() {
            let _ = writeln!(s, "r_{k} = {r:.6e}");
        }
        for (k, e) in spec.epsilons().iter().enumerate() {
            match e {
                Some(e) => {
                    let _ = writeln!(s, "eps_{} = {e:.6e}, R = {:.6e}", k + 1, spec.level_thresholds()[k]);
                }
                None => {
                    let _ = writeln!(s, "eps_{} unused (every block vanishes)", k + 1);
                }
            }
        }
        for st in &report.strata {
            let set: Vec<String> = st.set.iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(
                s,
                "Q = {{{}}}: {} samples, {} violations, worst margin {:.3e}",
                set.join(","),
                st.samples,
                st.violations,
                st.worst_margin
            );
        }
        let _ = write!(s, "total violations: {} of {} samples", report.violations, report.samples);
        s
    };
    Ok(Outcome { text, ok: report.violations == 0 && report.samples > 0 })
}

fn verify_counterexample(samples: usize, seed: u64, as_json: bool) -> Result<Outcome, Error> {
    let report = run_counterexample(&[5.0, 6.0, 10.0], 0.2, samples, seed)?;
    let text = if as_json {
        json::emit(&json::counterexample(&report))
    } else {
        let mut s = String::new();
        for p in &report.points {
            let _ = writeln!(
                s,
                "alpha = {}, beta = {}: <Ghat(z), z> = {:+.6e} (closed form {:+.6e})",
                p.alpha, p.beta, p.pairing, p.closed_form
            );
        }
        let _ = write!(
            s,
            "ball of radius {:.6}: {} violations in {} samples",
            report.ball_radius, report.ball.violations, report.ball.samples
        );
        s
    };
    Ok(Outcome { text, ok: report.all_positive() })
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Analyze { file, json } => analyze(&file, json),
        Command::SteadyState { file, point, tol, max_iter, seed, json } => {
            steady_state(&file, point, SolverOptions { tol, max_iter, seed }, json)
        }
        Command::Simulate { file, x0, t_end, tol, json, csv } => simulate_cmd(&file, x0, t_end, tol, json, csv),
        Command::Verify { check, file, samples, seed, point, rho, json } => match check {
            Check::Lemmas => verify_lemmas(&need_file(file, "lemmas")?, samples, seed, rho, json),
            Check::Omega => verify_omega(&need_file(file, "omega")?, point, samples, seed, json),
            Check::Counterexample => verify_counterexample(samples, seed, json),
        },
    }
}

fn print_out(text: &str) {
    println!("{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print_out(&out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
