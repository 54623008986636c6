use super::config::RunConfig;
use super::report::{to_csv, to_json};
use super::suites::{run_suite, SuiteRecord};
use crate::assocweight::AssociatedWeight;
use crate::error::{Error, Result};
use crate::kernel::FlatKernel;
use crate::metivier::evaluate::evaluate_u;
use crate::metivier::verify::verify_vector_growth;
use crate::weightseq::{
    analytic_inclusion, derivation_closed, gamma_index, no_names, quasianalyticity_sum, strong_nonquasianalyticity,
    Descriptor, WeightSequence,
};
use clap::{Parser, Subcommand};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "ultradiff", version, about = "Weight sequences, flat kernels and ultradifferentiable vectors")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all sampling; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; reports go to stdout when absent (except `run`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest iterate or moment order.
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Default truncation K of sequence tables.
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predicate table of a sequence (config name or shorthand such as `gevrey:2`).
    Classify { sequence: String },
    /// `omega_M(t)` and `h_M(t)` at the given `t`.
    Omega {
        sequence: String,
        #[arg(required = true)]
        t: Vec<f64>,
    },
    /// Kernel moments `I_k` against `N_k`.
    Moments { sequence: String },
    /// Builds the configured instance and prints its parameters.
    ConstructU,
    /// Sup and L2 norms of the iterates `P^k u`.
    Iterates,
    /// Runs one suite and prints its verdict record.
    Verify { suite: String },
    /// Runs every configured suite and writes reports to the output directory.
    Run,
}

const DEFAULT_MOMENT_KMAX: usize = 30;

struct Ctx {
    cfg: Option<RunConfig>,
    cli: Cli,
}

impl Ctx {
    fn config(&self) -> Result<&RunConfig> {
        self.cfg
            .as_ref()
            .ok_or_else(|| Error::invalid("this command needs --config"))
    }

    fn sequence(&self, name: &str) -> Result<WeightSequence> {
        let k = self.cli.truncation.unwrap_or(super::config::DEFAULT_TRUNCATION);
        if let Some(cfg) = &self.cfg {
            if cfg.sequences.contains_key(name) {
                return cfg.sequence(name);
            }
        }
        Descriptor::parse_shorthand(name)?.resolve(&no_names, k)
    }

    /// Writes `body` to `<out>/<file>` or to stdout.
    fn emit(&self, file: &str, body: &str, stdout: &mut dyn Write) -> Result<()> {
        match &self.cli.out {
            Some(dir) => write_file(dir, file, body),
            None => Ok(stdout.write_all(body.as_bytes())?),
        }
    }
}

fn write_file(dir: &Path, file: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(file), body)?;
    Ok(())
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>> {
    let Some(path) = &cli.config else { return Ok(None) };
    let raw = std::fs::read_to_string(path)?;
    let mut cfg = RunConfig::parse(&raw)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(k) = cli.kmax {
        cfg.options.kmax = k;
    }
    if let Some(k) = cli.truncation {
        cfg.truncation = Some(k);
    }
    Ok(Some(cfg))
}

/// Parses `args` (program name first), runs, and returns the exit status:
/// 0 when everything holds, 1 when a suite fails, 2 on usage, config or runtime errors.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match load_config(&cli).and_then(|cfg| dispatch(&Ctx { cfg, cli }, stdout)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn dispatch(ctx: &Ctx, stdout: &mut dyn Write) -> Result<i32> {
    match &ctx.cli.command {
        Command::Classify { sequence } => {
            let m = ctx.sequence(sequence)?;
            let k = m.truncation();
            let qa = quasianalyticity_sum(&m, k - 1)?;
            let snqa = strong_nonquasianalyticity(&m, k / 2)?;
            let gamma = gamma_index(&m, 64.0, 1e-3)?;
            let body = to_json(&json!({
                "sequence": sequence,
                "truncation": k,
                "quasianalyticity": qa.verdict,
                "stronglyNonQuasianalytic": snqa.verdict,
                "analyticInclusion": analytic_inclusion(&m).verdict,
                "derivationClosed": derivation_closed(&m).verdict,
                "gamma": gamma.value.as_f64(),
                "gammaInfinite": gamma.value.is_infinite(),
            }))?;
            ctx.emit("classify.json", &body, stdout)?;
        }
        Command::Omega { sequence, t } => {
            let m = ctx.sequence(sequence)?;
            let w = AssociatedWeight::new(&m);
            let rows = t
                .iter()
                .map(|&t| {
                    if !(t > 0.0) {
                        return Err(Error::invalid(format!("t must be positive, got {t}")));
                    }
                    Ok(vec![t, w.omega(t.ln())?, w.h_weight(t.ln())?])
                })
                .collect::<Result<Vec<_>>>()?;
            ctx.emit("omega.csv", &to_csv(&["t", "omega", "h"], &rows), stdout)?;
        }
        Command::Moments { sequence } => {
            let m = ctx.sequence(sequence)?;
            let kernel = FlatKernel::new(&m);
            let kmax = ctx.cli.kmax.unwrap_or(DEFAULT_MOMENT_KMAX);
            let rows: Vec<Vec<f64>> = kernel
                .moments(kmax, 0.0)?
                .iter()
                .map(|r| vec![r.k as f64, r.log_i, r.log_n, r.normalized(), r.log_tail])
                .collect();
            let header = ["k", "logI", "logN", "logIMinusLogN", "tailRemainder"];
            ctx.emit("moments.csv", &to_csv(&header, &rows), stdout)?;
        }
        Command::ConstructU => {
            let cfg = ctx.config()?;
            let inst = cfg.build_instance(None)?;
            let u0 = evaluate_u(&inst, &inst.x0)?;
            let body = to_json(&json!({
                "operator": cfg.operator.as_ref().map(|o| o.expr.clone()),
                "dimension": inst.dimension(),
                "witness": inst.witness,
                "x0": inst.x0,
                "xi0": inst.xi0,
                "delta": inst.delta,
                "eps": inst.eps,
                "regime": inst.regime,
                "sequences": inst.sequences(),
                "bump": inst.bump,
                "coefficientConstant": inst.coefficient_constant,
                "constraints": inst.constraints,
                "relations": inst.relations,
                "logAbsUAtX0": u0.norm().ln(),
            }))?;
            ctx.emit("instance.json", &body, stdout)?;
        }
        Command::Iterates => {
            let cfg = ctx.config()?;
            let inst = cfg.build_instance(None)?;
            let g = verify_vector_growth(&inst, cfg.options.kmax, cfg.seed)?;
            let rows: Vec<Vec<f64>> = g
                .norms
                .iter()
                .zip(&g.reference)
                .zip(&g.sup.residuals)
                .map(|((n, r), res)| vec![n.k as f64, n.log_sup, n.log_l2, *r, *res])
                .collect();
            let header = ["k", "supNorm", "l2Norm", "logMtilde", "residual"];
            ctx.emit("iterates.csv", &to_csv(&header, &rows), stdout)?;
        }
        Command::Verify { suite } => {
            let rec = run_suite(suite, ctx.config()?)?;
            ctx.emit(&format!("{suite}.json"), &to_json(&rec)?, stdout)?;
            return Ok(if rec.holds { 0 } else { 1 });
        }
        Command::Run => {
            let cfg = ctx.config()?;
            let dir = ctx
                .cli
                .out
                .clone()
                .or_else(|| cfg.out.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::invalid("run needs --out or an \"out\" entry in the config"))?;
            let records = run_all(cfg)?;
            for r in &records {
                write_file(&dir, &format!("{}.json", r.suite), &to_json(r)?)?;
            }
            let summary = summarize(&records);
            write_file(&dir, "summary.json", &to_json(&summary)?)?;
            stdout.write_all(to_json(&summary)?.as_bytes())?;
            return Ok(if records.iter().all(|r| r.holds) { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Runs the configured suites in declaration order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<SuiteRecord>> {
    cfg.suites.iter().map(|s| run_suite(s, cfg)).collect()
}

pub fn summarize(records: &[SuiteRecord]) -> serde_json::Value {
    json!({
        "holds": records.iter().all(|r| r.holds),
        "suites": records
            .iter()
            .map(|r| json!({"suite": r.suite, "holds": r.holds, "error": r.error}))
            .collect::<Vec<_>>(),
    })
}
