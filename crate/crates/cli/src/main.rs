//! `slidekit` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 validation error,
//! 3 off-scale reading, 64 usage error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slidekit::catalog::{builtin, list_builtins, CatalogEntry};
use slidekit::dsl::parse_program;
use slidekit::sheet::{export_sheet, ScaleSheet};
use slidekit::simulator::{chain, error_profile, power_mean, ReadingModel, RuleState, DEFAULT_LENGTH_MM};
use slidekit::svg::{render_svg, SvgStyle};
use slidekit::ticks::TickPolicy;
use slidekit::{Error, Params, RuleSpec};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_OFF_SCALE: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "slidekit", version, about = "Design, render and simulate two-variable slide rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a rule file into a scale sheet
    Compile {
        /// Rule definition file
        dsl: PathBuf,
        /// Output sheet (stdout when omitted)
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_LENGTH_MM)]
        length: f64,
        /// Only report diagnostics, write nothing
        #[arg(long)]
        validate_only: bool,
    },
    /// Read z for one pair of operands
    #[command(allow_negative_numbers = true)]
    Compute {
        /// Catalog name or sheet file
        rule: String,
        /// Operand set on the stator
        x: f64,
        /// Operand read on the slide
        y: f64,
        #[command(flatten)]
        reading: Reading,
        #[command(flatten)]
        source: Source,
    },
    /// Fold several operands through a rule, or take their power mean
    #[command(allow_negative_numbers = true)]
    Chain {
        rule: String,
        #[arg(num_args = 2.., required = true)]
        xs: Vec<f64>,
        /// Print the power mean with this exponent instead of the fold
        #[arg(long, value_name = "ALPHA")]
        mean: Option<f64>,
        #[command(flatten)]
        reading: Reading,
        #[command(flatten)]
        source: Source,
    },
    /// Render a sheet to SVG
    Render {
        sheet: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Style file (JSON); the flags below override it
        #[arg(long)]
        style: Option<PathBuf>,
        #[arg(long)]
        px_per_mm: Option<f64>,
        #[arg(long)]
        font: Option<String>,
        #[arg(long)]
        font_size_mm: Option<f64>,
        #[arg(long)]
        ink: Option<String>,
        #[arg(long)]
        gauge_color: Option<String>,
    },
    /// Tabulate quantized reading error over a grid
    Profile {
        rule: String,
        /// Points per axis
        #[arg(long, default_value_t = 50)]
        grid: usize,
        /// x interval as lo:hi (default: the x domain)
        #[arg(long, value_parser = parse_range)]
        x_range: Option<(f64, f64)>,
        /// y interval as lo:hi (default: the y domain)
        #[arg(long, value_parser = parse_range)]
        y_range: Option<(f64, f64)>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        resolution: f64,
        #[arg(long, default_value_t = DEFAULT_LENGTH_MM)]
        length: f64,
        #[command(flatten)]
        source: Source,
    },
    /// List catalog rules
    List,
    /// Export catalog rules as a scale sheet
    Export {
        /// Catalog names (default: replus quadplus)
        names: Vec<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_LENGTH_MM)]
        length: f64,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Args)]
struct Reading {
    /// Setting and reading resolution in mm (0 reads ideally)
    #[arg(long, default_value_t = 0.0)]
    resolution: f64,
    #[arg(long, default_value_t = DEFAULT_LENGTH_MM)]
    length: f64,
}

#[derive(Args)]
struct Source {
    /// Catalog parameter, repeatable
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Rule to use from a sheet file (default: the first)
    #[arg(long = "rule-name")]
    rule_name: Option<String>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("`{lo}` is not a number"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("`{hi}` is not a number"))?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err("LO must be below HI".into())
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Dsl { .. } | Error::Serialization(_) => EXIT_IO,
            Error::OffScale { .. } => EXIT_OFF_SCALE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type Outcome = Result<(), Failure>;

/// Shortest round-trip form of `v` rounded to 9 significant digits.
fn num(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    if (1e-4..1e9).contains(&rounded.abs()) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_failure(Path::new("<stdout>"), e)),
                _ => Ok(()),
            }
        }
    }
}

/// A rule from the catalog, or from a sheet when the argument is a file.
struct Resolved {
    rule: RuleSpec,
    entry: Option<CatalogEntry>,
}

fn resolve(name: &str, source: &Source) -> Result<Resolved, Failure> {
    let path = Path::new(name);
    if path.is_file() {
        if !source.params.is_empty() {
            return Err(Error::InvalidInput("--param only applies to catalog rules".into()).into());
        }
        let sheet = ScaleSheet::from_json(&read_file(path)?)?;
        let rule = match &source.rule_name {
            Some(n) => sheet.rule(n).ok_or_else(|| {
                let names: Vec<_> = sheet.rules.iter().map(|r| r.name.clone()).collect();
                Error::UnknownEntry {
                    name: n.clone(),
                    valid: names,
                }
            })?,
            None => sheet
                .rules
                .first()
                .ok_or_else(|| Error::InvalidInput(format!("{name} contains no rules")))?,
        };
        return Ok(Resolved {
            rule: rule.to_rule()?,
            entry: None,
        });
    }
    let params: Params = source.params.iter().cloned().collect();
    let entry = builtin(name, &params)?;
    Ok(Resolved {
        rule: entry.rule.clone(),
        entry: Some(entry),
    })
}

fn cmd_compile(dsl: &Path, out: Option<&Path>, length: f64, validate_only: bool) -> Outcome {
    let source = read_file(dsl)?;
    let program = parse_program(&source).map_err(|e| match e {
        Error::Dsl { line, column, message } => Failure {
            code: EXIT_IO,
            message: format!("{}:{line}:{column}: {message}", dsl.display()),
        },
        other => other.into(),
    })?;
    let compiled = program.compile();
    if !compiled.diagnostics.is_empty() {
        let lines: Vec<String> = compiled
            .diagnostics
            .iter()
            .map(|d| format!("{}:{d}", dsl.display()))
            .collect();
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: lines.join("\n"),
        });
    }
    if validate_only {
        println!("ok: {} rule(s)", compiled.rules.len());
        return Ok(());
    }
    let sheet = export_sheet(&compiled.rules, length, &TickPolicy::default())?;
    write_output(out, &sheet.to_json()?)
}

/// Full roots for the solver entries, whose scales give only the radical.
fn solver_roots(name: &str, x: f64, y: f64, z: f64) -> Option<String> {
    match name {
        "quadratic_solver" => Some(format!("roots {} {}", num(-x / 2.0 + z), num(-x / 2.0 - z))),
        "cubic_solver" => {
            let root = (-y / 2.0 + z).cbrt() + (-y / 2.0 - z).cbrt();
            Some(format!("cardano_root {}", num(root)))
        }
        _ => None,
    }
}

fn cmd_compute(name: &str, x: f64, y: f64, reading: &Reading, source: &Source) -> Outcome {
    let resolved = resolve(name, source)?;
    if let Some(entry) = &resolved.entry {
        entry.check_operands(x, y)?;
    }
    let model = ReadingModel::new(reading.resolution, reading.length)?;
    let state = RuleState::new(&resolved.rule, reading.length)?.slide_set(x)?;
    let z = state.read_result(y, &model)?;
    println!("{}", num(z));
    if reading.resolution > 0.0 {
        let ideal = state.read_result(y, &ReadingModel::ideal())?;
        println!("ideal {}", num(ideal));
        println!("rel_err {}", num((z - ideal).abs() / ideal.abs().max(f64::MIN_POSITIVE)));
    }
    if let Some(line) = resolved.entry.as_ref().and_then(|e| solver_roots(&e.name, x, y, z)) {
        println!("{line}");
    }
    Ok(())
}

fn cmd_chain(name: &str, xs: &[f64], mean: Option<f64>, reading: &Reading, source: &Source) -> Outcome {
    let resolved = resolve(name, source)?;
    let model = ReadingModel::new(reading.resolution, reading.length)?;
    let z = match mean {
        Some(alpha) => power_mean(xs, alpha, &model)?,
        None => chain(&resolved.rule, xs, &model)?,
    };
    println!("{}", num(z));
    Ok(())
}

fn load_style(path: Option<&Path>) -> Result<SvgStyle, Failure> {
    match path {
        None => Ok(SvgStyle::default()),
        Some(p) => serde_json::from_str(&read_file(p)?).map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("{}: {e}", p.display()),
        }),
    }
}

fn cmd_profile(
    name: &str,
    grid: usize,
    ranges: (Option<(f64, f64)>, Option<(f64, f64)>),
    out: Option<&Path>,
    model: ReadingModel,
    source: &Source,
) -> Outcome {
    if grid < 2 {
        return Err(Error::InvalidInput("--grid needs at least 2 points".into()).into());
    }
    let rule = resolve(name, source)?.rule;
    let axis = |range: Option<(f64, f64)>, domain: slidekit::Domain| match range {
        Some((lo, hi)) => (0..grid)
            .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
            .collect(),
        None => domain.grid(grid),
    };
    let xs: Vec<f64> = axis(ranges.0, rule.x_fn.domain());
    let ys: Vec<f64> = axis(ranges.1, rule.y_fn.domain());
    let profile = error_profile(&rule, &xs, &ys, &model)?;
    write_output(out, &profile.to_csv())?;
    eprintln!(
        "max_rel_err {} mean_rel_err {} off_scale {}",
        num(profile.max_rel_err),
        num(profile.mean_rel_err),
        profile.off_scale
    );
    Ok(())
}

fn cmd_list() -> Outcome {
    let mut text = String::new();
    for info in list_builtins() {
        let params: Vec<String> = info.params.iter().map(|p| format!("{}={}", p.name, num(p.default))).collect();
        let params = if params.is_empty() {
            String::new()
        } else {
            format!(" [{}]", params.join(", "))
        };
        text.push_str(&format!("{}{params}\t{}\n", info.name, info.description));
    }
    write_output(None, &text)
}

fn cmd_export(names: &[String], out: Option<&Path>, length: f64, params: &[(String, f64)]) -> Outcome {
    let defaults = ["replus".to_string(), "quadplus".to_string()];
    let names = if names.is_empty() { &defaults[..] } else { names };
    let infos = list_builtins();
    let mut used = vec![false; params.len()];
    let mut rules = Vec::new();
    for name in names {
        let schema = infos.iter().find(|i| i.name == name).map(|i| i.params).unwrap_or(&[]);
        let bindings: Params = params
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| schema.iter().any(|p| p.name == k))
            .map(|(i, (k, v))| {
                used[i] = true;
                (k.clone(), *v)
            })
            .collect();
        rules.push(builtin(name, &bindings)?.rule);
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::InvalidInput(format!("no exported rule has parameter `{}`", params[i].0)).into());
    }
    let sheet = export_sheet(&rules, length, &TickPolicy::default())?;
    write_output(out, &sheet.to_json()?)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compile {
            dsl,
            out,
            length,
            validate_only,
        } => cmd_compile(&dsl, out.as_deref(), length, validate_only),
        Command::Compute {
            rule,
            x,
            y,
            reading,
            source,
        } => cmd_compute(&rule, x, y, &reading, &source),
        Command::Chain {
            rule,
            xs,
            mean,
            reading,
            source,
        } => cmd_chain(&rule, &xs, mean, &reading, &source),
        Command::Render {
            sheet,
            out,
            style,
            px_per_mm,
            font,
            font_size_mm,
            ink,
            gauge_color,
        } => {
            let mut style = load_style(style.as_deref())?;
            if let Some(v) = px_per_mm {
                style.mm_to_px = v;
            }
            if let Some(v) = font {
                style.font = v;
            }
            if let Some(v) = font_size_mm {
                style.font_size_mm = v;
            }
            if let Some(v) = ink {
                style.colors.ink = v;
            }
            if let Some(v) = gauge_color {
                style.colors.gauge = v;
            }
            let sheet = ScaleSheet::from_json(&read_file(&sheet)?)?;
            write_output(out.as_deref(), &render_svg(&sheet, &style))
        }
        Command::Profile {
            rule,
            grid,
            x_range,
            y_range,
            out,
            resolution,
            length,
            source,
        } => {
            let model = ReadingModel::new(resolution, length)?;
            cmd_profile(&rule, grid, (x_range, y_range), out.as_deref(), model, &source)
        }
        Command::List => cmd_list(),
        Command::Export {
            names,
            out,
            length,
            params,
        } => cmd_export(&names, out.as_deref(), length, &params),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
