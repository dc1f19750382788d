//! Batch command line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::algebra::BlockMatrix;
use crate::devices::BlockForm;
use crate::network::{solve_powerflow, BusKind, SystemCase};
use crate::simulator::{simulate, validate, Event, Injection, PowerSystem, SimOptions, Trajectory};
use crate::strength::{analyze, normalize_report, sweep, Disturbance, NormalizedReport, INDICATOR_NAMES, ORDER_NAMES};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Solve the power flow and write powerflow.csv.
    Powerflow,
    /// Strength matrices for a step at --bus; writes strength_matrices.json,
    /// indicators.csv and normalized.csv.
    Strength,
    /// Time-domain simulation, optionally with a step at --bus; writes trajectory.csv.
    Simulate,
    /// Compare predicted and simulated jumps for a step at --bus; writes validation.json.
    Validate,
    /// Indicators at every bus, each for a step at that bus; writes report.csv and report.json.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Boxed,
    Exact,
}

#[derive(Debug, Parser)]
#[command(name = "gridstrength", version, about = "Bus strength indicators from step current injections")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Case file (JSON).
    #[arg(long, global = true)]
    case: Option<PathBuf>,
    /// Optional JSON file with any of the options below; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bus id of the step current.
    #[arg(long, global = true)]
    bus: Option<u32>,
    /// Active current drawn from the bus by the step, pu.
    #[arg(long, global = true, allow_hyphen_values = true)]
    ip: Option<f64>,
    /// Reactive current drawn from the bus by the step, pu.
    #[arg(long, global = true, allow_hyphen_values = true)]
    iq: Option<f64>,
    /// Time of the step, s.
    #[arg(long, global = true)]
    t_event: Option<f64>,
    /// End of the simulation, s.
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Integration step, s.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, env = "GRIDSTRENGTH_OUT")]
    out: Option<PathBuf>,
    /// Fold impedance loads into the admittance matrix.
    #[arg(long, global = true)]
    embed_zloads: bool,
    /// Also write per-bus CSV series suitable for plotting.
    #[arg(long, global = true)]
    emit_plot_data: bool,
    /// Converter jump blocks: closed-form (boxed) or traced through the model (exact).
    #[arg(long, global = true, value_enum)]
    gfl_blocks: Option<FormArg>,
}

/// Options read from a config file. Same names as the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    case: Option<PathBuf>,
    bus: Option<u32>,
    ip: Option<f64>,
    iq: Option<f64>,
    t_event: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    out: Option<PathBuf>,
    embed_zloads: Option<bool>,
    emit_plot_data: Option<bool>,
    gfl_blocks: Option<BlockForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub case: PathBuf,
    pub bus: Option<u32>,
    /// Drawn active current, pu.
    pub ip: f64,
    /// Drawn reactive current, pu.
    pub iq: f64,
    pub t_event: f64,
    pub t_end: f64,
    pub dt: f64,
    pub out: PathBuf,
    pub embed_zloads: bool,
    pub emit_plot_data: bool,
    pub gfl_blocks: BlockForm,
}

impl RunConfig {
    fn resolve(a: Args) -> Result<Self, Error> {
        let file = match &a.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize::<_, FileConfig>(de)
                    .map_err(|e| Error::Config(format!("config `{}`: {}", e.path(), e.inner())))?
            }
            None => FileConfig::default(),
        };
        let case = a
            .case
            .or(file.case)
            .ok_or_else(|| Error::Config("missing --case".into()))?;
        let cfg = RunConfig {
            command: a.command,
            case,
            bus: a.bus.or(file.bus),
            ip: a.ip.or(file.ip).unwrap_or(1.0),
            iq: a.iq.or(file.iq).unwrap_or(0.0),
            t_event: a.t_event.or(file.t_event).unwrap_or(1.0),
            t_end: a.t_end.or(file.t_end).unwrap_or(5.0),
            dt: a.dt.or(file.dt).unwrap_or(1e-3),
            out: a.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            embed_zloads: a.embed_zloads || file.embed_zloads.unwrap_or(false),
            emit_plot_data: a.emit_plot_data || file.emit_plot_data.unwrap_or(false),
            gfl_blocks: match a.gfl_blocks {
                Some(FormArg::Boxed) => BlockForm::Boxed,
                Some(FormArg::Exact) => BlockForm::Exact,
                None => file.gfl_blocks.unwrap_or_default(),
            },
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), Error> {
        let needs_bus = matches!(self.command, Command::Strength | Command::Validate);
        if needs_bus && self.bus.is_none() {
            return Err(Error::Config("this command needs --bus".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let timed = matches!(self.command, Command::Simulate | Command::Validate);
        if timed && self.bus.is_some() && !(self.t_end > self.t_event && self.t_event >= 0.0) {
            return Err(Error::Config(format!(
                "need 0 <= t_event < t_end, got t_event = {}, t_end = {}",
                self.t_event, self.t_end
            )));
        }
        if timed && !(self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions {
            dt: self.dt,
            t_end: self.t_end,
            ..SimOptions::default()
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::resolve(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_case(cfg: &RunConfig) -> Result<SystemCase, Error> {
    let mut case = SystemCase::from_file(&cfg.case)?;
    case.embed_zloads |= cfg.embed_zloads;
    Ok(case)
}

fn disturbance(case: &SystemCase, cfg: &RunConfig) -> Result<Option<Disturbance>, Error> {
    match cfg.bus {
        None => Ok(None),
        Some(id) => {
            let k = case
                .bus_index(id)
                .ok_or_else(|| Error::Config(format!("unknown bus {id}")))?;
            Ok(Some(Disturbance::drawn(k, cfg.ip, cfg.iq)))
        }
    }
}

/// Executes one command, writing its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<(), Error> {
    let case = load_case(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|source| Error::Io {
        path: cfg.out.display().to_string(),
        source,
    })?;
    match cfg.command {
        Command::Powerflow => cmd_powerflow(cfg, &case),
        Command::Strength => cmd_strength(cfg, &case),
        Command::Simulate => cmd_simulate(cfg, &case),
        Command::Validate => cmd_validate(cfg, &case),
        Command::Report => cmd_report(cfg, &case),
    }
}

fn write_file(dir: &Path, name: &str, content: &[u8]) -> Result<(), Error> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, Error> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Error::Config(format!("json: {e}")))?;
    b.push(b'\n');
    Ok(b)
}

fn f(x: f64) -> String {
    format!("{x:e}")
}

fn cmd_powerflow(cfg: &RunConfig, case: &SystemCase) -> Result<(), Error> {
    let pf = solve_powerflow(case)?;
    let header: Vec<String> = ["bus", "kind", "v", "theta", "p", "q"].map(String::from).to_vec();
    let rows = case.buses.iter().enumerate().map(|(k, b)| {
        let kind = match b.kind {
            BusKind::Pq => "pq",
            BusKind::Pv => "pv",
            BusKind::Slack => "slack",
        };
        vec![b.id.to_string(), kind.into(), f(pf.v[k]), f(pf.theta[k]), f(pf.p[k]), f(pf.q[k])]
    });
    write_file(&cfg.out, "powerflow.csv", &csv_bytes(&header, rows)?)?;
    println!(
        "power flow converged in {} iterations, max mismatch {:.3e} pu",
        pf.iterations, pf.max_mismatch
    );
    Ok(())
}

#[derive(Serialize)]
struct MatrixOut {
    /// Side of the real matrix, twice the bus count.
    dim: usize,
    rows: Vec<Vec<f64>>,
}

fn matrix_out(m: &BlockMatrix<f64>) -> MatrixOut {
    let d = m.dim();
    MatrixOut {
        dim: d,
        rows: (0..d).map(|i| (0..d).map(|j| m.get(i, j)).collect()).collect(),
    }
}

#[derive(Serialize)]
struct StrengthOut {
    bus_ids: Vec<u32>,
    disturbance_bus: u32,
    /// Injected current in the post-event voltage frame (negative of the drawn current).
    i_pq: [f64; 2],
    block_form: BlockForm,
    s: MatrixOut,
    s1: MatrixOut,
    s2: MatrixOut,
    zeq: MatrixOut,
    zeq1: MatrixOut,
    zeq2: MatrixOut,
}

fn indicator_header() -> Vec<String> {
    ["bus", "order", "ip_1", "iq_1", "ip_2", "iq_2"].map(String::from).to_vec()
}

fn normalized_rows(rep: &NormalizedReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["bus".to_string()];
    for names in INDICATOR_NAMES {
        header.extend(names.iter().map(|s| s.to_string()));
    }
    let rows = rep
        .bus_ids
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let mut r = vec![id.to_string()];
            for o in &rep.orders {
                r.extend(o.normalized[k].iter().map(|x| f(*x)));
            }
            r
        })
        .collect();
    (header, rows)
}

fn cmd_strength(cfg: &RunConfig, case: &SystemCase) -> Result<(), Error> {
    let sys = PowerSystem::from_case(case)?;
    let dist = disturbance(case, cfg)?.expect("checked");
    let an = analyze(&sys, dist, cfg.gfl_blocks)?;
    let ids = sys.bus_ids();
    let out = StrengthOut {
        bus_ids: ids.clone(),
        disturbance_bus: ids[dist.bus],
        i_pq: [dist.i_pq.re, dist.i_pq.im],
        block_form: cfg.gfl_blocks,
        s: matrix_out(&an.result.s),
        s1: matrix_out(&an.result.s1),
        s2: matrix_out(&an.result.s2),
        zeq: matrix_out(&an.chain.zeq),
        zeq1: matrix_out(&an.chain.zeq1),
        zeq2: matrix_out(&an.chain.zeq2),
    };
    write_file(&cfg.out, "strength_matrices.json", &json_bytes(&out)?)?;

    let ind = an.result.all_indicators();
    let rows = ind.iter().flat_map(|b| {
        (0..3).map(move |o| {
            let v = b.order(o);
            vec![b.bus.to_string(), ORDER_NAMES[o].to_string(), f(v[0]), f(v[1]), f(v[2]), f(v[3])]
        })
    });
    write_file(&cfg.out, "indicators.csv", &csv_bytes(&indicator_header(), rows)?)?;

    let rep = normalize_report(&ind);
    let (h, rows) = normalized_rows(&rep);
    write_file(&cfg.out, "normalized.csv", &csv_bytes(&h, rows)?)?;

    let b = an.result.indicators(dist.bus);
    println!("strength at bus {} (block form {:?})", ids[dist.bus], cfg.gfl_blocks);
    for o in 0..3 {
        let v = b.order(o);
        let names = INDICATOR_NAMES[o];
        println!(
            "  {:<7} {}={:+.6e} {}={:+.6e} {}={:+.6e} {}={:+.6e}",
            ORDER_NAMES[o], names[0], v[0], names[1], v[1], names[2], v[2], names[3], v[3]
        );
    }
    Ok(())
}

fn trajectory_csv(traj: &Trajectory, buses: &[usize], ids: &[u32]) -> Result<Vec<u8>, Error> {
    let mut header = vec!["t".to_string()];
    for &k in buses {
        for q in ["v", "theta", "rho", "omega", "sigma", "gamma"] {
            header.push(format!("{q}_{}", ids[k]));
        }
    }
    let rows = traj.points.iter().map(|p| {
        let mut r = vec![f(p.t)];
        for &k in buses {
            let e1 = p.eta1(k);
            let e2 = p.eta2(k);
            r.extend([p.magnitude(k), p.angle(k), e1.rho, e1.omega, e2.sigma, e2.gamma].map(f));
        }
        r
    });
    csv_bytes(&header, rows)
}

fn cmd_simulate(cfg: &RunConfig, case: &SystemCase) -> Result<(), Error> {
    let sys = PowerSystem::from_case(case)?;
    let events: Vec<Event> = disturbance(case, cfg)?
        .map(|d| Event {
            t: cfg.t_event,
            injection: Injection {
                bus: d.bus,
                current: d.i_pq,
                oriented: true,
            },
        })
        .into_iter()
        .collect();
    let traj = simulate(&sys, &events, cfg.sim_options())?;
    let ids = sys.bus_ids();
    let all: Vec<usize> = (0..sys.n()).collect();
    write_file(&cfg.out, "trajectory.csv", &trajectory_csv(&traj, &all, &ids)?)?;
    println!("simulated {} points to t = {} s", traj.points.len(), cfg.t_end);
    Ok(())
}

fn cmd_validate(cfg: &RunConfig, case: &SystemCase) -> Result<(), Error> {
    let sys = PowerSystem::from_case(case)?;
    let dist = disturbance(case, cfg)?.expect("checked");
    let (rep, _, traj) = validate(&sys, dist, cfg.t_event, cfg.sim_options(), cfg.gfl_blocks)?;
    write_file(&cfg.out, "validation.json", &json_bytes(&rep)?)?;
    if cfg.emit_plot_data {
        let ids = sys.bus_ids();
        write_file(&cfg.out, "validation_trajectory.csv", &trajectory_csv(&traj, &[dist.bus], &ids)?)?;
    }
    print!("{}", rep.to_table());
    Ok(())
}

fn cmd_report(cfg: &RunConfig, case: &SystemCase) -> Result<(), Error> {
    let sys = PowerSystem::from_case(case)?;
    let i_pq = -num_complex::Complex64::new(cfg.ip, cfg.iq);
    let ind = sweep(&sys, i_pq, cfg.gfl_blocks)?;
    let rep = normalize_report(&ind);
    let (h, rows) = normalized_rows(&rep);
    write_file(&cfg.out, "report.csv", &csv_bytes(&h, rows)?)?;
    write_file(&cfg.out, "report.json", &json_bytes(&rep)?)?;
    if cfg.emit_plot_data {
        let rows = ind.iter().flat_map(|b| {
            (0..3).map(move |o| {
                let v = b.order(o);
                vec![b.bus.to_string(), ORDER_NAMES[o].to_string(), f(v[0]), f(v[1]), f(v[2]), f(v[3])]
            })
        });
        write_file(&cfg.out, "report_raw.csv", &csv_bytes(&indicator_header(), rows)?)?;
    }
    for (o, t) in rep.orders.iter().enumerate() {
        if t.infinitely_strong {
            println!("{} order: all indicators zero (infinitely strong)", ORDER_NAMES[o]);
        } else {
            let weakest: Vec<String> = (0..4)
                .map(|c| format!("{}: bus {}", t.names[c], t.ranking[c][0]))
                .collect();
            println!("{} order weakest: {}", ORDER_NAMES[o], weakest.join(", "));
        }
    }
    Ok(())
}
