#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xyclock::constructions::{AnyField, FieldSpec};
use xyclock::energy::{clock_energy, xy_energy, EnergyReport};
use xyclock::flat_metric::flat_distance;
use xyclock::harness::{cone, jacobian_equivalence_check, run_sweep, write_sweep_csv, RegimeSweepSpec};
use xyclock::lattice::project_clock;
use xyclock::minimization::{
    core_energy, core_options, harmonic_r0, m_tilde, m_tilde_options, renormalized_energy_with, RelaxOptions,
    RenormalizedInput,
};
use xyclock::render::render_svg;
use xyclock::vorticity::{triangle_vorticity, vorticity_measure, vorticity_measure_centered};
use xyclock::{fieldio, ClockParams, Domain, Error, Point, VortexMeasure};

#[derive(Parser)]
#[command(name = "xyclock", version, about = "Discrete XY and N-clock spin fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    /// Charges at the upper-right plaquette corner.
    Corner,
    /// Charges at plaquette centers.
    Center,
    /// Charges of the two triangles of each square.
    Triangles,
}

#[derive(Subcommand)]
enum Command {
    /// Build a field from a JSON field spec and write it as CLOCKFIELD v1.
    MakeField {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy report of a field as JSON.
    Energy {
        #[arg(long)]
        field: PathBuf,
        /// Restrict to bonds inside `rect:xmin,xmax,ymin,ymax` or `disk:cx,cy,r`.
        #[arg(long)]
        region: Option<String>,
    },
    /// Vorticity measure of a field as JSON.
    Vorticity {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum, default_value = "corner")]
        placement: Placement,
    },
    /// Flat distance between two measures, with a witness.
    FlatDist {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Minimal energy of a degree-one vortex in a ball with radial boundary data.
    CoreEnergy {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, value_parser = parse_point, default_value = "0,0")]
        center: Point,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
    },
    /// Excised-ball minima against the renormalized energy, as CSV.
    Renorm {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eta_list: Vec<f64>,
        /// Lattice spacing of the excised-ball problems.
        #[arg(long, default_value_t = 1.0 / 128.0)]
        eps: f64,
        /// Grid step of the regular-part solve.
        #[arg(long, default_value_t = 1.0 / 256.0)]
        h: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a regime sweep from a JSON config and write CSV.
    RegimeSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the vorticity and Jacobian pairings against a cone test function.
    JacobianCheck {
        #[arg(long)]
        field: PathBuf,
        /// `cx,cy,r_in,r_out`; 1 inside `r_in`, 0 outside `r_out`.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.25, 0.5])]
        cone: Vec<f64>,
        /// Project a free field onto this clock first.
        #[arg(long)]
        n: Option<u32>,
    },
    /// Draw a field and its vortices as SVG.
    Render {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_overlay: bool,
    },
}

enum Failure {
    Lib(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => e.into(),
            other => Failure::Lib(Error::InvalidArgument(format!("{other:?}"))),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Resource(_) | Error::Io(_) => 3,
        _ => 2,
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate {t:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y] => Ok(Point::new(x, y)),
        _ => Err("expected X,Y".into()),
    }
}

fn parse_region(s: &str) -> Result<Domain, Error> {
    let bad = || Error::InvalidArgument(format!("bad region {s:?}"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let v: Vec<f64> = rest.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match (kind, &v[..]) {
        ("rect", &[a, b, c, d]) => Domain::rectangle(a, b, c, d),
        ("disk", &[x, y, r]) => Domain::disk(Point::new(x, y), r),
        _ => Err(bad()),
    }
}

fn with_path(path: &Path) -> impl Fn(io::Error) -> io::Error + '_ {
    move |e| io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    Ok(BufReader::new(File::open(path).map_err(with_path(path))?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    Ok(serde_json::from_reader(open(path)?)?)
}

fn read_measure(path: &Path) -> Result<VortexMeasure, Failure> {
    Ok(VortexMeasure::from_json(&std::fs::read_to_string(path).map_err(with_path(path))?)?)
}

fn read_field(path: &Path) -> Result<AnyField, Failure> {
    Ok(fieldio::read_field(open(path)?)?)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(with_path(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(v: &impl Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn relax_opts(base: RelaxOptions, tol: Option<f64>, max_sweeps: Option<usize>) -> Result<RelaxOptions, Failure> {
    let opts = RelaxOptions { tol: tol.unwrap_or(base.tol), max_sweeps: max_sweeps.unwrap_or(base.max_sweeps), ..base };
    if !(opts.tol > 0.0) || opts.max_sweeps == 0 {
        return Err(Error::InvalidArgument("tol and max-sweeps must be positive".into()).into());
    }
    Ok(opts)
}

#[derive(Serialize)]
struct CoreEnergyOut {
    eps: f64,
    r: f64,
    center: Point,
    gamma: f64,
    gamma_minus_log: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

#[derive(Serialize)]
struct RenormRow {
    eta: f64,
    m_tilde: f64,
    m_tilde_minus_log: f64,
    w: f64,
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::MakeField { spec, out } => {
            let spec: FieldSpec = read_json(&spec)?;
            spec.domain.validate()?;
            let field = spec.build()?;
            let mut w = output(&out)?;
            fieldio::write_field(&field, &mut w)?;
            w.flush()?;
        }
        Command::Energy { field, region } => {
            let region = region.as_deref().map(parse_region).transpose()?;
            let report = match read_field(&field)? {
                AnyField::Clock(u) => {
                    let raw = clock_energy(&u, region.as_ref());
                    EnergyReport::new(raw, u.lattice().eps(), Some(u.clock().theta()), region)
                }
                AnyField::Spin(u) => EnergyReport::new(xy_energy(&u, region.as_ref()), u.lattice().eps(), None, region),
            };
            print_json(&report)?;
        }
        Command::Vorticity { field, placement } => {
            let u = read_field(&field)?.spin();
            let m = match placement {
                Placement::Corner => vorticity_measure(&u)?,
                Placement::Center => vorticity_measure_centered(&u)?,
                Placement::Triangles => triangle_vorticity(&u)?,
            };
            print_json(&m)?;
        }
        Command::FlatDist { mu, nu } => {
            let res = flat_distance(&read_measure(&mu)?, &read_measure(&nu)?)?;
            print_json(&res)?;
        }
        Command::CoreEnergy { eps, r, center, tol, max_sweeps } => {
            if !(eps > 0.0 && r > 0.0) {
                return Err(Error::InvalidArgument("eps and r must be positive".into()).into());
            }
            let opts = relax_opts(core_options(eps, r), tol, max_sweeps)?;
            let c = core_energy(eps, r, center, &opts)?;
            print_json(&CoreEnergyOut {
                eps,
                r,
                center,
                gamma: c.gamma,
                gamma_minus_log: c.gamma - std::f64::consts::TAU * (r / eps).ln(),
                iterations: c.result.iterations,
                residual: c.result.residual,
                converged: c.result.converged,
            })?;
            if !c.result.converged {
                return Err(Failure::NotConverged(format!("relaxation stopped at residual {:e}", c.result.residual)));
            }
        }
        Command::Renorm { measure, eta_list, eps, h, tol, max_sweeps, out } => {
            let mu = read_measure(&measure)?;
            if mu.is_empty() {
                return Err(Error::InvalidArgument("measure has no atoms".into()).into());
            }
            let r0 = harmonic_r0(&mu, h)?;
            let w = renormalized_energy_with(&mu, &r0)?;
            let mass = mu.total_variation() as f64;
            let opts = relax_opts(m_tilde_options(eps, mu.domain.diameter()), tol, max_sweeps)?;
            let mut writer = csv::Writer::from_writer(output(&out)?);
            let mut stalled = Vec::new();
            if !r0.converged(1e-10) {
                stalled.push(format!("regular part residual {:e}", r0.residual));
            }
            for eta in eta_list {
                let m = m_tilde(&RenormalizedInput { measure: mu.clone(), eta, grid_h: eps }, &opts)?;
                if !m.result.converged {
                    stalled.push(format!("eta = {eta}"));
                }
                writer.serialize(RenormRow {
                    eta,
                    m_tilde: m.value,
                    m_tilde_minus_log: m.value - std::f64::consts::TAU * mass * (1.0 / eta).ln(),
                    w,
                })?;
            }
            writer.flush()?;
            if !stalled.is_empty() {
                return Err(Failure::NotConverged(format!("not converged: {}", stalled.join(", "))));
            }
        }
        Command::RegimeSweep { config, out } => {
            let spec: RegimeSweepSpec = read_json(&config)?;
            let rows = run_sweep(&spec)?;
            let mut w = output(&out)?;
            write_sweep_csv(&spec, &rows, &mut w)?;
            w.flush()?;
        }
        Command::JacobianCheck { field, cone: c, n } => {
            if c.len() != 4 || !(c[2] >= 0.0 && c[3] > c[2]) {
                return Err(Error::InvalidArgument("cone needs 0 <= r_in < r_out".into()).into());
            }
            let u = match (read_field(&field)?, n) {
                (AnyField::Clock(u), None) => u,
                (f, Some(n)) => project_clock(&f.spin(), ClockParams::new(n)?),
                (AnyField::Spin(_), None) => {
                    return Err(Error::InvalidArgument("free field: pass --n to project it".into()).into())
                }
            };
            let check = jacobian_equivalence_check(&u, cone(Point::new(c[0], c[1]), c[2], c[3]))?;
            print_json(&check)?;
        }
        Command::Render { field, out, no_overlay } => {
            let u = read_field(&field)?.spin();
            let overlay = if no_overlay { None } else { Some(vorticity_measure(&u)?) };
            std::fs::write(&out, render_svg(&u, overlay.as_ref())).map_err(with_path(&out))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(4)
        }
    }
}
