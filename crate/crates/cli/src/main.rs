mod job;
mod selftest;

use clap::{Args, Parser, Subcommand};
use job::{Command, Job};
use pdcris::cechalex::Cech;
use pdcris::compare::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const OUT_DIR_VAR: &str = "PDCRIS_OUT_DIR";

#[derive(Parser)]
#[command(name = "pdcris", version, about = "Divided-power envelopes and crystalline comparison checks over Z/p^e")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads for SNF and cohomology blocks.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump the truncated PD envelope.
    Envelope(JobArgs),
    /// Cohomology of the de Rham complex, with representatives.
    Derham(JobArgs),
    /// The Cech-Alexander row and its cohomology.
    Cech(JobArgs),
    /// de Rham against the double complex and the Cech-Alexander row.
    Compare(JobArgs),
    /// Derived reduction to a lower precision against the direct computation.
    BaseChange(JobArgs),
    /// p-torsion horizontal sections and H^-1 mod p.
    Torsion(JobArgs),
    /// Run the command named in the job document.
    Run(JobArgs),
    /// Built-in invariant checks.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct JobArgs {
    #[arg(long)]
    job: PathBuf,
    /// Output path; defaults to the job's output key, then $PDCRIS_OUT_DIR, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation degree d, overriding the job.
    #[arg(long)]
    degree: Option<u32>,
    /// Level cap L, overriding the job.
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, default_value_t = 2)]
    stability_margin: u32,
}

enum Failure {
    Input(String),
    Math(String),
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::Complex(_) => Failure::Math(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn exit_code(s: Status) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive => 3,
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CechDocument {
    report: ComparisonReport,
    ranks: Vec<usize>,
    complex: Vec<String>,
}

fn run_job(cmd: Command, job: &Job, a: &JobArgs) -> Result<(String, Status), Failure> {
    let mut job = job.clone();
    if let Some(d) = a.degree {
        job.truncation = d;
    }
    if let Some(l) = a.level {
        job.level = Some(l);
    }
    let spec = job.spec(a.stability_margin);
    if let Some(c) = spec.crystal.as_ref().filter(|_| cmd != Command::Envelope) {
        let env = spec.envelope_at(spec.e, spec.degree)?;
        let cd = spec.crystal_on(env)?;
        for (name, r) in [("integrable", cd.check_integrability()), ("quasi-nilpotent", cd.check_quasi_nilpotent())] {
            if !r.pass {
                return Err(Failure::Input(format!("crystal of rank {} is not {name}: {}", c.rank, r.witness.unwrap_or_default())));
            }
        }
    }
    let report = |r: ComparisonReport| {
        let s = r.status;
        (json(&r), s)
    };
    Ok(match cmd {
        Command::Envelope => {
            spec.validate()?;
            (spec.envelope_at(spec.e, spec.degree)?.dump(), Status::Pass)
        }
        Command::Derham => report(de_rham_experiment(&spec)?),
        Command::Cech => {
            let rep = cech_alexander_experiment(&spec)?;
            let env = spec.envelope_at(spec.e, spec.degree)?;
            let row = Cech::new(&spec.crystal_on(env)?, spec.levels).and_then(|c| c.row(0, spec.levels)).map_err(CompareError::from)?;
            let ranks = (row.lo..=row.hi()).map(|k| row.rank(k)).collect();
            let complex = row.dump().lines().map(str::to_string).collect();
            let s = rep.status;
            (json(&CechDocument { report: rep, ranks, complex }), s)
        }
        Command::Compare => report(compare_derham_ca(&spec)?),
        Command::BaseChange => {
            let e2 = job.reduce_to.unwrap_or(job.precision.saturating_sub(1));
            if e2 == 0 {
                return Err(Failure::Input("base_change needs precision >= 2 or reduce_to".into()));
            }
            report(base_change_check(&spec, e2)?)
        }
        Command::Torsion => report(torsion_experiment(&spec)?),
    })
}

fn destination(a: &JobArgs, job: &Job, cmd: Command) -> Option<PathBuf> {
    if let Some(p) = &a.out {
        return Some(p.clone());
    }
    if let Some(p) = &job.output {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_VAR)?;
    let stem = a.job.file_stem().map_or("job".into(), |s| s.to_string_lossy().into_owned());
    let ext = if cmd == Command::Envelope { "txt" } else { "json" };
    Some(Path::new(&dir).join(format!("{stem}.{}.{ext}", cmd.name())))
}

fn write_out(dest: Option<&Path>, text: &str) -> Result<(), Failure> {
    match dest {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn job_command(sub: Option<Command>, a: &JobArgs) -> Result<(Command, Job), Failure> {
    let text = std::fs::read_to_string(&a.job).map_err(|e| Failure::Input(format!("{}: {e}", a.job.display())))?;
    let job = Job::parse(&text).map_err(Failure::Input)?;
    let cmd = match (sub, job.command) {
        (Some(s), Some(j)) if s != j => {
            return Err(Failure::Input(format!("job is for {}, not {}", j.name(), s.name())));
        }
        (Some(s), _) => s,
        (None, Some(j)) => j,
        (None, None) => return Err(Failure::Input("job document has no command".into())),
    };
    Ok((cmd, job))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let t = Instant::now();
    let (sub, args) = match &cli.cmd {
        Cmd::Envelope(a) => (Some(Command::Envelope), a),
        Cmd::Derham(a) => (Some(Command::Derham), a),
        Cmd::Cech(a) => (Some(Command::Cech), a),
        Cmd::Compare(a) => (Some(Command::Compare), a),
        Cmd::BaseChange(a) => (Some(Command::BaseChange), a),
        Cmd::Torsion(a) => (Some(Command::Torsion), a),
        Cmd::Run(a) => (None, a),
        Cmd::Selftest { out } => {
            let code = match selftest::run() {
                Ok(r) => {
                    for (k, v) in &r.checks {
                        eprintln!("{} {k}", if *v { "PASS" } else { "FAIL" });
                    }
                    match write_out(out.as_deref(), &json(&r)) {
                        Ok(()) => exit_code(r.status),
                        Err(Failure::Input(m) | Failure::Math(m)) => {
                            eprintln!("error: {m}");
                            2
                        }
                    }
                }
                Err(m) => {
                    eprintln!("error: {m}");
                    1
                }
            };
            eprintln!("selftest: {:.3} s", t.elapsed().as_secs_f64());
            return ExitCode::from(code);
        }
    };
    let result = job_command(sub, args).and_then(|(cmd, job)| {
        let (text, status) = run_job(cmd, &job, args)?;
        write_out(destination(args, &job, cmd).as_deref(), &text)?;
        eprintln!("{}: {:?}", cmd.name(), status);
        Ok(status)
    });
    eprintln!("time: {:.3} s", t.elapsed().as_secs_f64());
    match result {
        Ok(s) => ExitCode::from(exit_code(s)),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Math(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
