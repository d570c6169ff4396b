use bergman_core::integrals::{j_integral, kernel_mass};
use bergman_core::report::{write_csv, GridBuilder};
use bergman_core::scenario::{self, Scenario, ScenarioConfig, TGrid};
use bergman_core::{Bergman, BuiltinForm, Domain, DomainPoint, Error, McConfig, McEstimate, McMethod, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "bergman", version, about = "Bergman kernel experiments on bounded symmetric domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one quantity at a point.
    Eval {
        #[command(subcommand)]
        what: Eval,
    },
    /// Run a verification scenario and write its JSON/CSV report.
    Scenario(ScenarioArgs),
}

#[derive(Args, Debug)]
struct DomainArg {
    /// Domain descriptor: I(m,n), II(n), III(n), IV(n), D(n) or B(n).
    #[arg(long)]
    domain: Domain,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sample count; defaults by dimension.
    #[arg(long, env = "BERGMAN_SAMPLES")]
    samples: Option<u64>,
    #[arg(long, default_value = "plain")]
    method: McMethod,
    /// Reuse (or create) a binary sample cache.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Append the result as a CSV row to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl McArgs {
    fn config(&self, d: &Domain) -> McConfig {
        let mut cfg = McConfig::new(self.seed, self.samples.unwrap_or_else(|| McConfig::default_samples(d.dim())))
            .with_method(self.method);
        if let Some(p) = &self.cache {
            cfg = cfg.with_cache(p);
        }
        cfg
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormName {
    Zero,
    Dbarlogk,
    PolydiscExample,
}

#[derive(Subcommand, Debug)]
enum Eval {
    /// K(z, w).
    Kernel {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        z: String,
        #[arg(long)]
        w: String,
    },
    /// Bergman-type metric and its inverse at a point.
    Metric {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        point: String,
    },
    /// Squared metric norm of a (0,1)-form.
    Formnorm {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long, value_enum)]
        form: FormName,
        #[arg(long)]
        point: String,
    },
    /// Kernel mass ∫|K(z,w)| dv(w).
    Mass {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        point: String,
        #[command(flatten)]
        mc: McArgs,
    },
    /// J_{β,c}(z).
    Jint {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// One of example1, example3, sharp, blowup, theorem53, delta-bound,
    /// ball-logmass, comparability.
    #[arg(required_unless_present = "scenario")]
    name: Option<Scenario>,
    #[arg(long = "scenario", conflicts_with = "name")]
    scenario: Option<Scenario>,
    #[arg(long)]
    domain: Option<Domain>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, env = "BERGMAN_SAMPLES")]
    samples: Option<u64>,
    #[arg(long, default_value = "plain")]
    method: McMethod,
    /// `start:stop:count` or a comma list.
    #[arg(long)]
    tgrid: Option<TGrid>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Allow domains of dimension 10 and above.
    #[arg(long)]
    opt_in_heavy: bool,
    #[arg(long)]
    threads: Option<usize>,
}

/// Failure with its exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidDescriptor(_)
            | Error::Parse(_)
            | Error::Dimension { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownScenario(_) => 2,
            Error::OutsideDomain { .. } => 3,
            Error::NumericalGuard(_) | Error::NonFinite { .. } => 4,
            _ => 1,
        };
        Failure(code, e.to_string())
    }
}

/// Comma-separated reals (one per coordinate), re/im pairs, a lone `0`
/// for the origin, or `path:t,T`.
fn parse_point(d: &Domain, s: &str) -> Result<DomainPoint, Error> {
    let numbers = |text: &str| -> Result<Vec<f64>, Error> {
        text.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{x}` in `{s}`"))))
            .collect()
    };
    if let Some(rest) = s.strip_prefix("path:") {
        let v = numbers(rest)?;
        if v.len() != 2 {
            return Err(Error::Parse(format!("path point needs `t,T`, got `{s}`")));
        }
        return d.test_path(v[0], v[1]);
    }
    let v = numbers(s)?;
    let n = d.dim();
    if v.len() == 1 && v[0] == 0.0 {
        Ok(DomainPoint::origin(n))
    } else if v.len() == 2 * n {
        Ok(DomainPoint::new(v.chunks(2).map(|p| C64::new(p[0], p[1])).collect()))
    } else if v.len() == n {
        Ok(DomainPoint::from_reals(&v))
    } else {
        Err(Error::Dimension { expected: 2 * n, got: v.len() })
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.15e} {:+.15e}i", z.re, z.im)
}

fn append_csv(path: Option<&PathBuf>, d: &Domain, name: &str, t: f64, beta: f64, c: f64, e: &McEstimate) -> Result<(), Error> {
    if let Some(p) = path {
        let mut g = GridBuilder::new(d.to_string(), name);
        g.push(t, t, beta, c, e);
        write_csv(p, &g.build().rows)?;
    }
    Ok(())
}

fn eval(what: Eval) -> Result<(), Failure> {
    match what {
        Eval::Kernel { domain: DomainArg { domain }, z, w } => {
            let b = Bergman::new(domain);
            let k = b.kernel(&parse_point(&domain, &z)?, &parse_point(&domain, &w)?)?;
            println!("kernel {}", fmt_c(k.value));
            println!("log_modulus {:.15e}", k.log_modulus);
        }
        Eval::Metric { domain: DomainArg { domain }, point } => {
            let b = Bergman::new(domain);
            let m = b.metric_at(&parse_point(&domain, &point)?)?;
            for (label, mat) in [("g", &m.g), ("g_inv", &m.g_inv)] {
                for i in 0..mat.rows() {
                    let row: Vec<String> = (0..mat.cols()).map(|j| fmt_c(mat[(i, j)])).collect();
                    println!("{label}[{i}] {}", row.join(", "));
                }
            }
        }
        Eval::Formnorm { domain: DomainArg { domain }, form, point } => {
            let b = Bergman::new(domain);
            let f = match form {
                FormName::Zero => BuiltinForm::Zero,
                FormName::Dbarlogk => BuiltinForm::DbarLogK,
                FormName::PolydiscExample => BuiltinForm::PolydiscExample,
            };
            println!("form_norm_sq {:.15e}", b.form_norm_sq(&parse_point(&domain, &point)?, &f)?);
        }
        Eval::Mass { domain: DomainArg { domain }, point, mc } => {
            let b = Bergman::new(domain);
            let e = kernel_mass(&b, &parse_point(&domain, &point)?, &mc.config(&domain))?;
            print_estimate("kernel_mass", &e);
            append_csv(mc.csv.as_ref(), &domain, "kernel_mass", f64::NAN, 0.0, 0.0, &e)?;
        }
        Eval::Jint { domain: DomainArg { domain }, point, beta, c, mc } => {
            let b = Bergman::new(domain);
            let e = j_integral(&b, beta, c, &parse_point(&domain, &point)?, &mc.config(&domain))?;
            print_estimate("j_integral", &e);
            append_csv(mc.csv.as_ref(), &domain, "j_integral", f64::NAN, beta, c, &e)?;
        }
    }
    Ok(())
}

fn print_estimate(label: &str, e: &McEstimate) {
    println!("{label} {:.10e}", e.value);
    println!("std_error {:.3e}", e.std_error);
    println!("samples {} seed {} method {}", e.samples, e.seed, e.method);
}

fn run_scenario(a: ScenarioArgs) -> Result<(), Failure> {
    let which = a.name.or(a.scenario).expect("clap enforces a scenario name");
    let cfg = ScenarioConfig {
        domain: a.domain,
        seed: a.seed,
        samples: a.samples,
        method: a.method,
        t_grid: a.tgrid.map(|g| g.0),
        opt_in_heavy: a.opt_in_heavy,
        cache_path: a.cache,
        threads: a.threads,
    };
    let rep = scenario::run(which, &cfg)?;
    let (json, csv) = rep.write(&a.out)?;
    for x in &rep.assertions {
        println!("{} {} = {:.6e} (bound {})", if x.pass { "PASS" } else { "FAIL" }, x.name, x.value, x.bound);
    }
    println!("report {}", json.display());
    println!("grid {}", csv.display());
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure(1, format!("{} assertion(s) failed", rep.assertions.iter().filter(|x| !x.pass).count())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Eval { what } => eval(what),
        Command::Scenario(a) => run_scenario(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
