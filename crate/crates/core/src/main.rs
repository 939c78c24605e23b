//! Command-line front end.
//!
//! Config resolution: `--preset` supplies a base, `--config` is merged over
//! it, and each `--set key.path=value` is applied last.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lzsm::runner::config::{apply_override, merge_tables, read_table};
use lzsm::runner::output::read_csv;
use lzsm::runner::{self, compare, detect_steps, preset, ScenarioConfig, StepParams, PRESETS};
use lzsm::{Error, Result};

#[derive(Parser)]
#[command(name = "lzsm", version, about = "LZSM dynamics of a driven spin-1 system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Named preset (see `presets list`)
    #[arg(long)]
    preset: Option<String>,
    /// Override one config value, e.g. `--set grid.t_end=20`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write a matplotlib script next to the CSV
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a scenario with its configured engine
    Simulate(Common),
    /// Evaluate the closed-form engine matching the scenario
    Analytic(Common),
    /// Evaluate the [sweep] grid of a scenario
    Sweep(Common),
    /// Numeric vs closed form, or two CSV traces against each other
    Compare {
        #[command(flatten)]
        common: Common,
        /// Reference trace CSV
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        /// Trace CSV compared against `a`
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
    },
    /// Count population steps of a scenario run or of a trace CSV
    Steps {
        #[command(flatten)]
        common: Common,
        /// Trace CSV (time axis in units of 1/sqrt(alpha))
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Asymptotic crossing-chain populations of a block scenario
    Chain(Common),
    /// Preset catalogue
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names
    List,
    /// Print a preset as TOML
    Show { name: String },
}

fn resolve(c: &Common) -> Result<ScenarioConfig> {
    let mut table = match &c.preset {
        Some(name) => preset(name)?.to_table()?,
        None => toml::Table::new(),
    };
    if let Some(path) = &c.config {
        merge_tables(&mut table, read_table(path)?);
    } else if c.preset.is_none() {
        return Err(Error::Config("give --preset and/or --config".into()));
    }
    for o in &c.overrides {
        apply_override(&mut table, o)?;
    }
    if c.plot {
        apply_override(&mut table, "output.plot_script=true")?;
    }
    ScenarioConfig::from_table(table)
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn simulate(c: &Common, analytic: bool) -> Result<()> {
    let mut cfg = resolve(c)?;
    if analytic {
        cfg = runner::analytic_counterpart(&cfg)?;
    }
    let outcome = runner::run_scenario(&cfg)?;
    let command = if analytic { "analytic" } else { "simulate" };
    let files = runner::write_run(&outcome, &c.out, command)?;
    report_files(&files);
    let d = outcome.trace.diagnostics;
    if cfg.scenario.engine.is_numeric() {
        println!(
            "max drift: trace {:.2e}, hermiticity {:.2e}, norm {:.2e}",
            d.max_trace_drift, d.max_hermiticity_drift, d.max_norm_drift
        );
    }
    Ok(())
}

fn compare_cmd(c: &Common, a: &Option<PathBuf>, b: &Option<PathBuf>) -> Result<()> {
    if let (Some(a), Some(b)) = (a, b) {
        let ta = read_csv(a)?.to_trace()?;
        let tb = read_csv(b)?.to_trace()?;
        let report = compare(&ta, &tb)?;
        for col in &report.columns {
            println!("p{}: max {:.3e} (t = {}), rms {:.3e}", col.level, col.max_abs, col.t_max, col.rms);
        }
        let path = c.out.join("compare.csv");
        let meta = vec![format!("a: {}", a.display()), format!("b: {}", b.display())];
        lzsm::runner::output::write_atomic(&path, &report.per_time_csv(&meta))?;
        report_files(&[path]);
        return Ok(());
    }
    let cfg = resolve(c)?;
    let (report, files) = runner::write_compare(&cfg, &c.out)?;
    for col in &report.columns {
        println!("p{}: max {:.3e}, rms {:.3e}", col.level, col.max_abs, col.rms);
    }
    report_files(&files);
    Ok(())
}

fn steps_cmd(c: &Common, csv: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = csv {
        let params = match (&c.config, &c.preset) {
            (None, None) => {
                let mut t = toml::Table::new();
                for o in &c.overrides {
                    apply_override(&mut t, o)?;
                }
                match t.remove("steps") {
                    Some(v) => v.try_into().map_err(|e| Error::Config(format!("{e}")))?,
                    None => StepParams::default(),
                }
            }
            _ => resolve(c)?.steps,
        };
        return steps_from_csv(path, &params);
    }
    let cfg = resolve(c)?;
    let (steps, files) = runner::write_steps(&cfg, &c.out)?;
    println!("{} steps in level {}", steps.len(), cfg.steps.level);
    report_files(&files);
    Ok(())
}

fn steps_from_csv(path: &Path, params: &StepParams) -> Result<()> {
    let trace = read_csv(path)?.to_trace()?;
    if params.level == 0 || params.level > trace.dim() {
        return Err(Error::Config(format!("steps.level {} outside 1..={}", params.level, trace.dim())));
    }
    // the CSV time axis is already t·√α
    let steps = detect_steps(&trace.times, &trace.level(params.level - 1), params, 1.0)?;
    println!("{} steps in level {}", steps.len(), params.level);
    for s in &steps {
        println!("  t in [{:.2}, {:.2}], drop {:.3e}", s.t_first, s.t_last, s.drop);
    }
    Ok(())
}

fn chain_cmd(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let (closed, composed, files) = runner::write_chain(&cfg, &c.out)?;
    for (k, (a, b)) in closed.iter().zip(&composed).enumerate() {
        println!("level {}: closed form {a:.12}, composed {b:.12}", k + 1);
    }
    report_files(&files);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => simulate(&c, false),
        Command::Analytic(c) => simulate(&c, true),
        Command::Sweep(c) => {
            let cfg = resolve(&c)?;
            let (grid, files) = runner::write_sweep(&cfg, &c.out)?;
            println!("{} x {} cells", grid.xs.len(), grid.ys.len());
            report_files(&files);
            Ok(())
        }
        Command::Compare { common, a, b } => compare_cmd(&common, &a, &b),
        Command::Steps { common, csv } => steps_cmd(&common, &csv),
        Command::Chain(c) => chain_cmd(&c),
        Command::Presets { action: PresetAction::List } => {
            for p in PRESETS {
                println!("{:<14} {}", p.name, p.about);
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            print!("{}", preset(&name)?.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("lzsm-cli-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    fn run(args: &[&str]) -> Result<()> {
        let cli = Cli::try_parse_from(std::iter::once("lzsm").chain(args.iter().copied()))
            .map_err(|e| Error::Config(e.to_string()))?;
        execute(cli)
    }

    #[test]
    fn simulate_with_overrides() {
        let dir = scratch("sim");
        let out = dir.to_str().unwrap();
        run(&["simulate", "--preset", "fig2a", "--out", out, "--set", "grid.t_start=-3", "--set", "grid.t_end=3", "--plot"])
            .unwrap();
        for ext in ["csv", "plot.py", "manifest.toml"] {
            assert!(dir.join(format!("fig2a.{ext}")).exists(), "{ext}");
        }
        let table = read_csv(&dir.join("fig2a.csv")).unwrap();
        assert_eq!(table.header[..4], ["t_sqrt_alpha", "p1", "p2", "p3"]);
        assert_eq!(table.rows[0][0], -3.0);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn config_file_overrides_preset() {
        let dir = scratch("cfg");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.toml");
        std::fs::write(&path, "[grid]\nt_start = -2.0\nt_end = 2.0\n[output]\nstem = \"mine\"\n").unwrap();
        let c = Common {
            config: Some(path),
            out: dir.clone(),
            preset: Some("fig3a".into()),
            overrides: vec!["grid.t_end=1.5".into()],
            plot: false,
        };
        let cfg = resolve(&c).unwrap();
        assert_eq!((cfg.grid.t_start, cfg.grid.t_end), (-2.0, 1.5));
        assert_eq!(cfg.stem(), "mine");
        assert_eq!(cfg.model.d_aniso, 12.0);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn compare_and_steps_from_files() {
        let dir = scratch("cmp");
        let out = dir.to_str().unwrap();
        let window = ["--set", "grid.t_start=-20", "--set", "grid.t_end=20"];
        let mut args = vec!["simulate", "--preset", "fig2a", "--out", out];
        args.extend(window);
        run(&args).unwrap();
        let mut args = vec!["analytic", "--preset", "fig2a", "--out", out, "--set", "output.stem=fig2a-ana"];
        args.extend(window);
        run(&args).unwrap();
        let a = dir.join("fig2a.csv");
        let b = dir.join("fig2a-ana.csv");
        run(&["compare", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--out", out]).unwrap();
        let report = read_csv(&dir.join("compare.csv")).unwrap();
        assert!(report.rows.len() > 100);
        run(&["steps", "--csv", a.to_str().unwrap()]).unwrap();
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(&["simulate"]).unwrap_err().exit_code(), 2);
        assert_eq!(run(&["simulate", "--preset", "nope"]).unwrap_err().exit_code(), 2);
        assert_eq!(run(&["simulate", "--preset", "fig2a", "--set", "model.alpha=-1"]).unwrap_err().exit_code(), 2);
        assert_eq!(run(&["chain", "--preset", "fig2a"]).unwrap_err().exit_code(), 2);
        assert!(run(&["presets", "show", "fig9-wd"]).is_ok());
        assert!(run(&["presets", "list"]).is_ok());
    }

    #[test]
    fn chain_and_sweep() {
        let dir = scratch("chain");
        let out = dir.to_str().unwrap();
        run(&["chain", "--preset", "fig8-wd", "--out", out]).unwrap();
        assert!(dir.join("fig8-wd.chain.csv").exists());
        run(&["sweep", "--preset", "fig5", "--out", out, "--set", "sweep.nx=20", "--set", "sweep.ny=10"]).unwrap();
        let grid = read_csv(&dir.join("fig5.sweep.csv")).unwrap();
        assert_eq!(grid.rows.len(), 200);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
