use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bsflow::assembly::Scheme;
use bsflow::config::{self, ExperimentConfig};
use bsflow::runner;
use bsflow::{Error, Result};

#[derive(Parser)]
#[command(name = "bsflow", version, about = "Two-phase flow with a viscous, massive, surfactant-laden interface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl From<Toggle> for bool {
    fn from(t: Toggle) -> bool {
        matches!(t, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Gd,
    Bgn,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Gd => Scheme::Gd,
            SchemeArg::Bgn => Scheme::Bgn,
        }
    }
}

#[derive(clap::Args)]
struct Overrides {
    #[arg(long)]
    scheme: Option<SchemeArg>,
    /// Fine mesh resolution N_f.
    #[arg(long)]
    nf: Option<usize>,
    /// Coarse mesh resolution N_c.
    #[arg(long)]
    nc: Option<usize>,
    /// Number of interface vertices.
    #[arg(long)]
    kgamma: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    xfem: Option<Toggle>,
    #[arg(long)]
    numdiff: Option<Toggle>,
}

impl Overrides {
    fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(s) = self.scheme {
            c.scheme = s.into();
        }
        if let Some(n) = self.nf {
            c.disc.n_fine = n;
        }
        if let Some(n) = self.nc {
            c.disc.n_coarse = n;
        }
        if let Some(k) = self.kgamma {
            c.initial.k_gamma = k;
        }
        if let Some(t) = self.tau {
            c.disc.tau = t;
        }
        if let Some(t) = self.tmax {
            c.t_end = t;
        }
        if let Some(x) = self.xfem {
            c.disc.xfem = x.into();
        }
        if let Some(x) = self.numdiff {
            c.disc.numdiff = x.into();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its outputs.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Expanding-bubble convergence table.
    Study {
        #[arg(long, default_value = "expanding")]
        preset: String,
        /// Rows as inv_h:tau pairs separated by commas, e.g. 3:1e-2,6:1e-3
        #[arg(long)]
        rows: String,
        #[arg(long, default_value = "bgn")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1.0)]
        tmax: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset with both schemes and write their edge-ratio series side by side.
    Compare {
        #[arg(long, default_value = "rising2d")]
        preset: String,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

fn parse_rows(spec: &str) -> Result<Vec<(usize, f64)>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|row| {
            let (h, t) = row
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("row '{row}' is not of the form inv_h:tau")))?;
            let h = h.trim().parse().map_err(|_| Error::Config(format!("bad inv_h in '{row}'")))?;
            let t = t.trim().parse().map_err(|_| Error::Config(format!("bad tau in '{row}'")))?;
            Ok((h, t))
        })
        .collect()
}

fn set_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BSFLOW_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("BSFLOW_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("BSFLOW_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    set_threads()?;
    match cli.command {
        Command::Run { config, preset, overrides, out } => {
            let mut c = match (config, preset) {
                (Some(path), _) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
                (None, Some(name)) => config::preset(&name)?,
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            };
            overrides.apply(&mut c);
            let summary = runner::run_experiment(c, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Study { preset, rows, scheme, tmax, out } => {
            if preset != "expanding" {
                return Err(Error::Config(format!("convergence studies need an exact solution; preset '{preset}' has none")));
            }
            let rows = parse_rows(&rows)?;
            let table = runner::study_csv(&runner::convergence_study(scheme.into(), &rows, tmax)?);
            match out {
                Some(path) => fs::write(path, table)?,
                None => print!("{table}"),
            }
        }
        Command::Compare { preset, overrides, out } => {
            let mut series = Vec::new();
            for scheme in [Scheme::Gd, Scheme::Bgn] {
                let mut c = config::preset(&preset)?;
                overrides.apply(&mut c);
                c.scheme = scheme;
                let name = format!("{scheme:?}").to_lowercase();
                let mut run = runner::Run::new(c)?;
                // a geometric breakdown of one scheme still leaves its series up to the failure
                if let Err(e) = run.run_to_end(|_| Ok(())) {
                    eprintln!("{name}: {e}");
                }
                series.push((name, run.history));
            }
            fs::create_dir_all(&out)?;
            let mut csv = String::from("scheme,step,t,edge_ratio,area\n");
            for (name, hist) in &series {
                for d in hist {
                    csv.push_str(&format!("{name},{},{:.10e},{:.10e},{:.16e}\n", d.step, d.t, d.edge_ratio, d.area));
                }
            }
            fs::write(out.join("edge_ratio.csv"), csv)?;
            for (name, hist) in &series {
                let last = hist.last().unwrap();
                println!("{name}: t={:.4} edge_ratio={:.4} area={:.10}", last.t, last.edge_ratio, last.area);
            }
        }
        Command::Presets => {
            for p in config::PRESETS {
                println!("{p}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors exit with 1: code 2 is reserved for geometric failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
