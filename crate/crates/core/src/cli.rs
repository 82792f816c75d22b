//! `rotorlab` command line.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 step cap exhausted,
//! 4 I/O failure. Machine-readable results go to stdout, progress to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::aggregation::{self, AggregationState};
use crate::checkpoint;
use crate::config::ConfigRule;
use crate::error::Error;
use crate::experiments::{self, ConjectureSweep, SweepControl, SweepStatus, PROGRESS_INTERVAL};
use crate::lattice::{Dimension, LatticeBox};
use crate::output::{write_atomic, CsvDoc, COUNTING_CONVENTION, ENGINE_VERSION};
use crate::rotor::{snapshot_digest, RotorOrder, WalkState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_IO: i32 = 4;

fn counting_help() -> String {
    format!("Counting convention: {COUNTING_CONVENTION}")
}

/// Accepts plain integers plus `1e8` and `10^8` shorthands.
fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let (base, exp) = if let Some((b, e)) = s.split_once('^') {
        (b.parse::<u64>(), e.parse::<u32>())
    } else if let Some((m, e)) = s.split_once(['e', 'E']) {
        let exp = e.parse::<u32>();
        let mantissa = m.parse::<u64>();
        return match (mantissa, exp) {
            (Ok(m), Ok(e)) => 10u64
                .checked_pow(e)
                .and_then(|p| p.checked_mul(m))
                .ok_or_else(|| format!("{s} overflows")),
            _ => Err(format!("not a count: {s}")),
        };
    } else {
        return Err(format!("not a count: {s}"));
    };
    match (base, exp) {
        (Ok(b), Ok(e)) => b.checked_pow(e).ok_or_else(|| format!("{s} overflows")),
        _ => Err(format!("not a count: {s}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "rotorlab", version, about = "Rotor-router walks on Z^d", after_help = counting_help())]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Lattice dimension [default: 3]
    #[arg(long = "d", global = true)]
    d: Option<usize>,
    /// toward-origin | paper-literal | uniform:<label> | table:<path> [default: toward-origin]
    #[arg(long, global = true)]
    rule: Option<String>,
    /// `default` (i -> i+1 mod 2d) or a comma-separated cycle of labels
    #[arg(long, global = true)]
    order: Option<String>,
    /// Output directory [default: $ROTORLAB_OUT or .]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Step cap for the run
    #[arg(long, global = true, value_parser = parse_count)]
    cap: Option<u64>,
    /// Suppress progress reports on stderr
    #[arg(long, global = true)]
    quiet: bool,
    /// JSON file with RunConfig fields; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one walk from the origin until it leaves B[0,n]
    #[command(after_help = counting_help())]
    Walk {
        #[arg(long)]
        n: Option<u64>,
        /// Also write trajectory.csv (one line per step)
        #[arg(long)]
        trajectory: bool,
        /// Radius of the exported snapshot [default: n]
        #[arg(long)]
        snapshot_radius: Option<u64>,
    },
    /// Origin visits before the first exit of every B[0,m], m <= n-max
    #[command(after_help = counting_help())]
    Conjecture {
        #[arg(long)]
        n_max: Option<u64>,
        /// Checkpoint file [default: <out>/conjecture.ckpt.json]
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_parser = parse_count)]
        checkpoint_every: Option<u64>,
        /// Continue from a checkpoint written by an earlier run
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Pause after this many steps, saving a checkpoint
        #[arg(long, value_parser = parse_count)]
        stop_after: Option<u64>,
        /// Fill the elapsed_s column with wall-clock seconds
        #[arg(long)]
        timing: bool,
    },
    /// Labels of B[0,inner-radius] at each box exit up to n-max
    #[command(after_help = counting_help())]
    Stabilize {
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        inner_radius: Option<u64>,
    },
    /// Per-site direction balance after a sweep to n-max
    #[command(after_help = counting_help())]
    Balance {
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Seeded simple random walk baseline
    #[command(after_help = counting_help())]
    Srw {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rotor-router aggregation of k particles
    #[command(after_help = counting_help())]
    Aggregate {
        #[arg(long)]
        k: Option<u64>,
        /// Also run this many seeded IDLA trials for comparison
        #[arg(long, value_parser = parse_count)]
        idla_trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Everything that determines a run's output. Loaded from `--config`,
/// overridden by flags, then filled with defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    /// Output directory; not part of the echoed config.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub checkpoint_every: Option<u64>,
}

impl RunConfig {
    fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            d: flags.d.or(self.d),
            rule: flags.rule.or(self.rule),
            order: flags.order.or(self.order),
            n: flags.n.or(self.n),
            n_max: flags.n_max.or(self.n_max),
            inner_radius: flags.inner_radius.or(self.inner_radius),
            k: flags.k.or(self.k),
            trials: flags.trials.or(self.trials),
            seed: flags.seed.or(self.seed),
            cap: flags.cap.or(self.cap),
            out: flags.out.or(self.out),
            checkpoint_every: flags.checkpoint_every.or(self.checkpoint_every),
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        message: message.into(),
    }
}

/// Validated engine inputs shared by every subcommand.
struct Resolved {
    dim: Dimension,
    rule: ConfigRule,
    order: RotorOrder,
    out: PathBuf,
    cap: Option<u64>,
    quiet: bool,
    echo: RunConfig,
}

impl Resolved {
    fn comment(&self) -> String {
        format!(
            "{ENGINE_VERSION}; rule={}; order={}; counting: {COUNTING_CONVENTION}; config={}",
            self.rule,
            self.order,
            serde_json::to_string(&self.echo).expect("config serializes")
        )
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn progress(&self, what: &str) -> impl FnMut(&WalkState) + '_ {
        let what = what.to_string();
        move |s: &WalkState| {
            if !self.quiet {
                eprintln!(
                    "[{what}] {} steps, max norm {}, origin visits {}",
                    s.step_count(),
                    s.max_norm_seen(),
                    s.origin_visits()
                );
            }
        }
    }
}

fn resolve(config: &RunConfig, quiet: bool) -> Result<Resolved, Error> {
    let d = config.d.unwrap_or(3);
    let dim = Dimension::new(d).map_err(|e| invalid("d", e.to_string()))?;
    let rule_spec = config
        .rule
        .clone()
        .unwrap_or_else(|| "toward-origin".into());
    let rule = ConfigRule::parse(&rule_spec, dim).map_err(|e| invalid("rule", e.to_string()))?;
    let order_spec = config.order.clone().unwrap_or_else(|| "default".into());
    let order = RotorOrder::parse(&order_spec, dim).map_err(|e| invalid("order", e.to_string()))?;
    let out = config
        .out
        .clone()
        .or_else(|| std::env::var_os("ROTORLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Some(0) = config.trials {
        return Err(invalid("trials", "must be at least 1"));
    }
    if let Some(0) = config.checkpoint_every {
        return Err(invalid("checkpoint_every", "must be at least 1"));
    }
    let mut echo = config.clone();
    echo.d = Some(d);
    echo.rule = Some(rule_spec);
    echo.order = Some(order_spec);
    Ok(Resolved {
        dim,
        rule,
        order,
        out,
        cap: config.cap,
        quiet,
        echo,
    })
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CapExhausted { .. } => EXIT_CAP,
        Error::Io { .. } | Error::CorruptCheckpoint { .. } | Error::CheckpointVersion { .. } => {
            EXIT_IO
        }
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rotorlab: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let from_file = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| invalid("config", format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let mut flags = RunConfig {
        d: cli.global.d,
        rule: cli.global.rule.clone(),
        order: cli.global.order.clone(),
        cap: cli.global.cap,
        out: cli.global.out.clone(),
        ..RunConfig::default()
    };
    match &cli.command {
        Command::Walk { n, .. } => flags.n = *n,
        Command::Conjecture {
            n_max,
            checkpoint_every,
            ..
        } => {
            flags.n_max = *n_max;
            flags.checkpoint_every = *checkpoint_every;
        }
        Command::Stabilize {
            n_max,
            inner_radius,
        } => {
            flags.n_max = *n_max;
            flags.inner_radius = *inner_radius;
        }
        Command::Balance { n_max } => flags.n_max = *n_max,
        Command::Srw { n, trials, seed } => {
            flags.n = *n;
            flags.trials = *trials;
            flags.seed = *seed;
        }
        Command::Aggregate { k, seed, .. } => {
            flags.k = *k;
            flags.seed = *seed;
        }
    }
    let mut config = from_file.overlay(flags);
    // keep only the fields the subcommand reads, so the echoed header is stable
    let mut pick = RunConfig {
        d: config.d,
        rule: config.rule.take(),
        order: config.order.take(),
        cap: config.cap,
        out: config.out.take(),
        ..RunConfig::default()
    };
    match &cli.command {
        Command::Walk { .. } => pick.n = Some(config.n.unwrap_or(20)),
        Command::Conjecture { .. } => {
            pick.n_max = Some(config.n_max.unwrap_or(20));
            pick.checkpoint_every = config.checkpoint_every;
        }
        Command::Stabilize { .. } => {
            pick.n_max = Some(config.n_max.unwrap_or(15));
            pick.inner_radius = Some(config.inner_radius.unwrap_or(3));
        }
        Command::Balance { .. } => pick.n_max = Some(config.n_max.unwrap_or(10)),
        Command::Srw { .. } => {
            pick.n = Some(config.n.unwrap_or(20));
            pick.trials = Some(config.trials.unwrap_or(10_000));
            pick.seed = Some(config.seed.unwrap_or(42));
        }
        Command::Aggregate { idla_trials, .. } => {
            pick.k = Some(config.k.unwrap_or(500));
            if idla_trials.is_some_and(|t| t > 0) {
                pick.trials = *idla_trials;
                pick.seed = Some(config.seed.unwrap_or(42));
            }
        }
    }
    let r = resolve(&pick, cli.global.quiet)?;
    std::fs::create_dir_all(&r.out).map_err(|e| Error::io(&r.out, e))?;
    match cli.command {
        Command::Walk {
            trajectory,
            snapshot_radius,
            ..
        } => cmd_walk(&r, pick.n.unwrap_or_default(), trajectory, snapshot_radius),
        Command::Conjecture {
            checkpoint,
            resume,
            stop_after,
            timing,
            ..
        } => cmd_conjecture(
            &r,
            pick.n_max.unwrap_or_default(),
            ConjectureOptions {
                checkpoint,
                checkpoint_every: pick.checkpoint_every,
                resume,
                stop_after,
                timing,
            },
        ),
        Command::Stabilize { .. } => cmd_stabilize(
            &r,
            pick.n_max.unwrap_or_default(),
            pick.inner_radius.unwrap_or_default(),
        ),
        Command::Balance { .. } => cmd_balance(&r, pick.n_max.unwrap_or_default()),
        Command::Srw { .. } => cmd_srw(
            &r,
            pick.n.unwrap_or_default(),
            pick.trials.unwrap_or(1),
            pick.seed.unwrap_or_default(),
        ),
        Command::Aggregate { .. } => {
            cmd_aggregate(&r, pick.k.unwrap_or_default(), pick.trials, pick.seed)
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("json serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn cmd_walk(
    r: &Resolved,
    n: u64,
    trajectory: bool,
    snapshot_radius: Option<u64>,
) -> Result<(), Error> {
    let cap = r
        .cap
        .unwrap_or_else(|| crate::rotor::default_cap_for_box(LatticeBox::new(r.dim, n)));
    let mut state = WalkState::new(r.rule.clone(), r.order.clone())?.with_dense_box(n + 1);
    let mut path_points = None;
    if trajectory {
        let (_, traj) = state.trace_until_norm_exceeds(n, cap)?;
        path_points = Some(traj);
    } else {
        let mut progress = r.progress("walk");
        while state.position().infinity_norm() <= n {
            let remaining = cap.saturating_sub(state.step_count());
            if remaining == 0 {
                return Err(Error::CapExhausted { cap });
            }
            match state.advance_past(n, remaining.min(PROGRESS_INTERVAL)) {
                Ok(_) => break,
                Err(Error::CapExhausted { .. }) => progress(&state),
                Err(e) => return Err(e),
            }
        }
    }
    let snap_box = LatticeBox::new(r.dim, snapshot_radius.unwrap_or(n));
    let labels = state.snapshot(snap_box);
    let exit_box_digest = snapshot_digest(&state.snapshot(LatticeBox::new(r.dim, n)));
    let record = serde_json::json!({
        "engine": ENGINE_VERSION,
        "counting": COUNTING_CONVENTION,
        "config": r.echo,
        "radius": n,
        "first_exit_step": state.step_count(),
        "origin_visits": state.origin_visits(),
        "digest": format!("{exit_box_digest:016x}"),
        "exit_position": state.position(),
    });
    let snapshot = serde_json::json!({
        "d": r.dim.get(),
        "radius": snap_box.radius,
        "digest": format!("{:016x}", snapshot_digest(&labels)),
        "labels": labels,
    });
    if let Some(traj) = path_points {
        let mut header = crate::output::coord_headers(r.dim.get());
        header.insert(0, "step".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut doc = CsvDoc::new(&r.comment(), &header);
        for (i, p) in traj.points.iter().enumerate() {
            doc.row(std::iter::once(i.to_string()).chain(p.coords().iter().map(|c| c.to_string())));
        }
        doc.write(&r.path("trajectory.csv"))?;
    }
    write_json(&r.path("snapshot.json"), &snapshot)?;
    write_json(&r.path("exit_record.json"), &record)?;
    println!(
        "{}",
        serde_json::to_string(&record).expect("json serializes")
    );
    Ok(())
}

struct ConjectureOptions {
    checkpoint: Option<PathBuf>,
    checkpoint_every: Option<u64>,
    resume: Option<PathBuf>,
    stop_after: Option<u64>,
    timing: bool,
}

fn cmd_conjecture(r: &Resolved, n_max: u64, opts: ConjectureOptions) -> Result<(), Error> {
    let mut sweep = match &opts.resume {
        Some(path) => {
            let ck = checkpoint::load_expecting(path, r.dim)?;
            if ck.state.rule() != &r.rule {
                return Err(invalid(
                    "resume",
                    format!(
                        "checkpoint rule is {}, config rule is {}",
                        ck.state.rule(),
                        r.rule
                    ),
                ));
            }
            if ck.state.order() != &r.order {
                return Err(invalid(
                    "resume",
                    "checkpoint rotor order differs from config",
                ));
            }
            ConjectureSweep::resume(ck, n_max)?
        }
        None => ConjectureSweep::new(r.rule.clone(), r.order.clone(), n_max)?,
    };
    if let Some(cap) = r.cap {
        sweep = sweep.with_cap(cap);
    }
    let checkpoint_path =
        (opts.checkpoint_every.is_some() || opts.stop_after.is_some()).then(|| {
            opts.checkpoint
                .clone()
                .unwrap_or_else(|| r.path("conjecture.ckpt.json"))
        });
    let mut progress = r.progress("conjecture");
    let mut control = SweepControl {
        step_budget: opts.stop_after,
        checkpoint_path: checkpoint_path.clone(),
        checkpoint_every: opts.checkpoint_every,
        record_timing: opts.timing,
        progress: Some(&mut progress),
    };
    match sweep.run(&mut control)? {
        SweepStatus::Paused => {
            eprintln!(
                "rotorlab: paused after {} steps at radius {}; resume with --resume {}",
                sweep.state().step_count(),
                sweep.records().len(),
                checkpoint_path
                    .as_deref()
                    .unwrap_or(Path::new("?"))
                    .display()
            );
            Ok(())
        }
        SweepStatus::Complete => {
            let rows = sweep.rows();
            let doc = experiments::conjecture_csv(&rows, &r.comment());
            doc.write(&r.path("conjecture.csv"))?;
            print!("{}", doc.as_str());
            if !r.quiet {
                let matched = rows.iter().filter(|row| row.matches).count();
                eprintln!(
                    "rotorlab: {matched}/{} rows match the predicted count",
                    rows.len()
                );
            }
            Ok(())
        }
    }
}

fn cmd_stabilize(r: &Resolved, n_max: u64, inner_radius: u64) -> Result<(), Error> {
    let rows = experiments::stabilization_study(
        r.rule.clone(),
        r.order.clone(),
        n_max,
        inner_radius,
        r.cap,
    )?;
    let doc = experiments::stabilization_csv(&rows, r.dim, &r.comment());
    doc.write(&r.path("stabilization.csv"))?;
    let unstable = rows
        .iter()
        .filter(|row| row.stabilized_at.is_none())
        .count();
    let latest = rows.iter().filter_map(|row| row.stabilized_at).max();
    println!(
        "{}",
        serde_json::json!({"sites": rows.len(), "unstable": unstable, "max_stabilized_at": latest})
    );
    Ok(())
}

fn cmd_balance(r: &Resolved, n_max: u64) -> Result<(), Error> {
    let mut sweep =
        ConjectureSweep::new(r.rule.clone(), r.order.clone(), n_max)?.with_instrumentation();
    if let Some(cap) = r.cap {
        sweep = sweep.with_cap(cap);
    }
    let mut progress = r.progress("balance");
    sweep.run(&mut SweepControl {
        progress: Some(&mut progress),
        ..SweepControl::default()
    })?;
    let rows = experiments::balance_report(sweep.state())?;
    let doc = experiments::balance_csv(&rows, r.dim, &r.comment());
    doc.write(&r.path("balance.csv"))?;
    let violations = rows.iter().filter(|row| !row.balanced).count();
    println!(
        "{}",
        serde_json::json!({"sites": rows.len(), "steps": sweep.state().step_count(), "violations": violations})
    );
    Ok(())
}

fn cmd_srw(r: &Resolved, n: u64, trials: u64, seed: u64) -> Result<(), Error> {
    let summary = experiments::srw_comparison(r.dim, n, trials, seed)?;
    let doc = experiments::srw_csv(&summary, &r.comment());
    doc.write(&r.path("srw.csv"))?;
    print!("{}", doc.as_str());
    Ok(())
}

fn cmd_aggregate(
    r: &Resolved,
    k: u64,
    idla_trials: Option<u64>,
    seed: Option<u64>,
) -> Result<(), Error> {
    let mut state = AggregationState::new(r.rule.clone(), r.order.clone())?;
    for _ in 0..k {
        state.release(r.cap)?;
    }
    let shape = state.shape_report();
    let idla = match idla_trials {
        Some(trials) => Some(aggregation::idla_baseline(
            r.dim,
            k,
            seed.unwrap_or(42),
            trials,
        )?),
        None => None,
    };
    let cluster = aggregation::cluster_json(&state);
    let shells = aggregation::shells_csv(state.occupied(), r.dim, &r.comment());
    let summary = serde_json::json!({
        "engine": ENGINE_VERSION,
        "config": r.echo,
        "sites": state.occupied().len(),
        "shape": shape,
        "idla": idla,
    });
    shells.write(&r.path("shells.csv"))?;
    write_json(&r.path("cluster.json"), &cluster)?;
    write_json(&r.path("shape.json"), &summary)?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("json serializes")
    );
    Ok(())
}
