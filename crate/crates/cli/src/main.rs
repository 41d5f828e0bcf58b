//! `straus`: command-line front end. Results go to stdout as JSON, summaries to stderr.
//!
//! Exit codes: 0 success, 1 a verified negative result (solution found, tree died, audit
//! violation, rejected witness), 2 bad input or failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use straus_core::abelian::{self, Element, GroupSpec};
use straus_core::diagonal::{Driver, EventOracle, Mode, StageState, Until};
use straus_core::io::{
    coloring_from_json, coloring_to_json, parse_group, read_table_csv, write_group_csv,
    write_table_csv,
};
use straus_core::machine::{
    brute_force_dnc, diag_pair_closure, eval_diagonal, find_case_witness, jockusch_reduce,
    parse_fixture, CaseWitness,
};
use straus_core::straus::{
    straus_coloring, straus_star_coloring, Coloring, EquationSpec, GroupMap,
};
use straus_core::verify::{
    constant_solution, finite_order_coloring, greedy_color, non_pr_certificate, parse_system,
    verify_on, CertEquation, Ring, VerificationReport, Window,
};
use straus_core::wkl::ColoringTree;
use straus_core::Error;

#[derive(Parser)]
#[command(
    name = "straus",
    version,
    about = "Straus colorings and partition regularity tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Straus coloring for `Σ (x_i - y_i) = b` as JSON.
    Color(ColorArgs),
    /// Search a coloring for a pairwise monochromatic solution.
    Verify(VerifyArgs),
    /// Decide partition regularity of `Ax = b` via constant solutions.
    Rado(RadoArgs),
    /// Greedy coloring with no monochromatic `x - y = b` on an enumeration prefix.
    Greedy(GreedyArgs),
    /// Run the stage construction and report its state.
    Diagonalize(DiagonalizeArgs),
    /// Run the stage construction and read a function off a coloring.
    Extract(ExtractArgs),
    /// Grow the tree of partial colorings with no pairwise monochromatic solution.
    Tree(TreeArgs),
    /// Reduce a bound-`k²` DNC function to a bound-`k` one.
    Jockusch(JockuschArgs),
}

#[derive(Args)]
struct EquationArgs {
    /// `Z`, `Zm:<m>`, `Zw` or `free:<group.csv>`.
    #[arg(long)]
    group: String,
    #[arg(long, allow_hyphen_values = true)]
    b: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Comma-separated slot maps (`id`, `x<k>`); one per slot, or one for all slots.
    #[arg(long, value_delimiter = ',')]
    maps: Vec<String>,
}

struct Equation {
    spec: GroupSpec,
    eq: EquationSpec,
    maps: Vec<GroupMap>,
}

impl EquationArgs {
    /// With `product_only`, the maps only select the product factors and need not match `n`.
    fn load(&self, product_only: bool) -> Result<Equation, Error> {
        let spec = parse_group(&self.group)?;
        let b = spec.parse_element(&self.b)?;
        let maps: Vec<GroupMap> = self
            .maps
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, _>>()?;
        let eq = match maps.len() {
            0 => EquationSpec::new(self.n, b)?,
            _ if product_only => EquationSpec::new(self.n, b)?,
            1 => EquationSpec::with_maps(self.n, b, vec![maps[0].clone(); self.n])?,
            _ => EquationSpec::with_maps(self.n, b, maps.clone())?,
        };
        Ok(Equation { spec, eq, maps })
    }
}

impl Equation {
    fn straus(&self) -> Result<Coloring, Error> {
        if self.maps.is_empty() {
            straus_coloring(&self.spec, &self.eq.b, self.eq.n as u64)
        } else {
            straus_star_coloring(&self.spec, &self.eq.b, self.eq.n as u64, &self.maps)
        }
    }
}

#[derive(Args)]
struct ColorArgs {
    #[command(flatten)]
    eq: EquationArgs,
    /// Also write the JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    eq: EquationArgs,
    /// `straus`, `parity`, `finite`, or a `.json` rule / `.csv` table file.
    #[arg(long, default_value = "straus")]
    coloring: String,
    /// Radius for `Z`; prefix length for `Zw`. Finite and constructed groups are searched whole.
    #[arg(long, default_value_t = 50)]
    window: i64,
}

#[derive(Args)]
struct RadoArgs {
    /// `Z` or `Zm:<m>`.
    #[arg(long, default_value = "Z")]
    ring: String,
    /// Rows `a_1 … a_n b`; `#` starts a comment.
    #[arg(long)]
    system: PathBuf,
    /// Window radius used to check a certificate over `Z`.
    #[arg(long, default_value_t = 50)]
    radius: i64,
}

#[derive(Args)]
struct GreedyArgs {
    #[arg(long)]
    group: String,
    #[arg(long, allow_hyphen_values = true)]
    b: String,
    /// Length of the enumeration prefix to color.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 3)]
    palette: u32,
    /// Write the `element,color` table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "31")]
    M31,
    #[value(name = "32")]
    M32,
}

#[derive(Args)]
struct ConstructionArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Number of difference pairs (mode 32).
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Period bound: the acted multiplier is `lcm(1..=bound)·k + 1` (mode 32).
    #[arg(long, default_value_t = 12)]
    m_bound: u64,
    /// Toy index fixture driving the requirements.
    #[arg(long, conflicts_with = "events", required_unless_present = "events")]
    fixture: Option<PathBuf>,
    /// Separation events `e phi0|phi1 stage` (mode 31).
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    fuel: u64,
    /// Stop after this stage; by default run until every halting index has acted.
    #[arg(long)]
    stages: Option<u64>,
    /// Maximum number of stages when running until every halting index has acted.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
}

impl ConstructionArgs {
    fn run(&self) -> Result<StageState, Error> {
        let mode = match self.mode {
            ModeArg::M31 => Mode::Mode31,
            ModeArg::M32 => Mode::Mode32 {
                n: self.n,
                m_bound: self.m_bound,
            },
        };
        let driver = match (&self.fixture, &self.events) {
            (Some(path), _) => Driver::Machine {
                fixture: parse_fixture(&read(path)?)?,
                fuel: self.fuel,
            },
            (None, Some(path)) => Driver::Events(read(path)?.parse::<EventOracle>()?),
            (None, None) => {
                return Err(Error::InvalidArgument("need --fixture or --events".into()))
            }
        };
        let mut state = StageState::init(mode, driver)?;
        let spent = match self.stages {
            Some(s) => state.run_until(Until::Stage(s), s)?,
            None => state.run_until(Until::AllHaltingActed, self.budget)?,
        };
        eprintln!(
            "ran {spent} stages: carrier {} ids, {} actions",
            state.carrier_size(),
            state.actions().len()
        );
        Ok(state)
    }

    fn index_count(&self, state: &StageState) -> u64 {
        match state.driver() {
            Driver::Machine { fixture, .. } => fixture.len() as u64,
            Driver::Events(oracle) => oracle.indices().max().map_or(0, |e| e + 1),
        }
    }
}

#[derive(Args)]
struct DiagonalizeArgs {
    #[command(flatten)]
    run: ConstructionArgs,
    /// Write one JSON object per stage event to this file.
    #[arg(long)]
    dump_events: Option<PathBuf>,
    /// Write the constructed group as `id,image` CSV.
    #[arg(long)]
    group_csv: Option<PathBuf>,
    /// Write the parity coloring of the constructed group as `element,color` CSV.
    #[arg(long)]
    coloring_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtractKind {
    Pa,
    Separator,
    Dnc,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    run: ConstructionArgs,
    #[arg(long, value_enum)]
    kind: ExtractKind,
    /// `reference` (parity of the first coordinate) or an `element,color` CSV over the ids.
    #[arg(long, default_value = "reference")]
    coloring: String,
    /// Number of indices to extract; defaults to the fixture length.
    #[arg(long)]
    count: Option<u64>,
    /// For `dnc`: a period whose multiples of `b` the coloring keeps monochromatic.
    #[arg(long)]
    period: Option<u64>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    eq: EquationArgs,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    depth: usize,
    /// Explore every color sequence instead of canonical ones.
    #[arg(long)]
    no_symmetry: bool,
}

#[derive(Args)]
struct JockuschArgs {
    /// Base toy indices; the oracle is built on their `DiagPair` closure.
    #[arg(long)]
    fixture: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: u64,
    #[arg(long, default_value_t = 50)]
    fuel: u64,
}

/// A successful run: its JSON result and whether it is positive.
struct Outcome {
    result: Value,
    positive: bool,
}

fn positive(result: Value) -> Outcome {
    Outcome {
        result,
        positive: true,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(x)?)
}

fn load_coloring(spec: &GroupSpec, eq: &Equation, source: &str) -> Result<Coloring, Error> {
    match source {
        "straus" => eq.straus(),
        "parity" => {
            let c = straus_coloring(spec, &spec.parse_element("1")?, 1)?;
            if c.k() != 2 {
                return Err(Error::Unsupported(format!("no parity coloring on {spec}")));
            }
            Ok(c)
        }
        "finite" => Ok(Coloring::Table(finite_order_coloring(spec, &eq.eq.b)?)),
        path if path.ends_with(".csv") => Ok(Coloring::Table(read_table_csv(
            spec,
            fs::File::open(path)?,
            None,
        )?)),
        path => coloring_from_json(spec, &read(Path::new(path))?),
    }
}

fn search_elements(spec: &GroupSpec, window: i64) -> Result<(Window, Vec<Element>), Error> {
    match spec {
        GroupSpec::Integers | GroupSpec::Cyclic(_) => {
            let w = Window::default_for(spec, window)?;
            let elements = w.elements(spec)?;
            Ok((w, elements))
        }
        GroupSpec::Sequences => {
            let count = usize::try_from(window)
                .map_err(|_| Error::InvalidArgument("window must be nonnegative".into()))?;
            let elements = abelian::enumerate(spec, count)?;
            Ok((Window::Explicit { size: count }, elements))
        }
        GroupSpec::FreeOmega(log) => {
            let elements: Vec<Element> = log.ids().iter().map(|id| Element::Id(*id)).collect();
            Ok((
                Window::Explicit {
                    size: elements.len(),
                },
                elements,
            ))
        }
    }
}

fn report_with_window(
    spec: &GroupSpec,
    coloring: &Coloring,
    eq: &EquationSpec,
    window: i64,
) -> Result<VerificationReport, Error> {
    let (w, elements) = search_elements(spec, window)?;
    let mut report = verify_on(spec, coloring, eq, &elements)?;
    report.window = w;
    Ok(report)
}

fn cmd_color(args: &ColorArgs) -> Result<Outcome, Error> {
    let eq = args.eq.load(true)?;
    let coloring = eq.straus()?;
    let text = coloring_to_json(&coloring)?;
    if let Some(path) = &args.out {
        fs::write(path, format!("{text}\n"))?;
    }
    eprintln!("{} colors for {} over {}", coloring.k(), eq.eq.b, eq.spec);
    Ok(positive(serde_json::from_str(&text)?))
}

fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, Error> {
    let eq = args.eq.load(false)?;
    let coloring = load_coloring(&eq.spec, &eq, &args.coloring)?;
    let report = report_with_window(&eq.spec, &coloring, &eq.eq, args.window)?;
    eprintln!(
        "{}: {}",
        args.coloring,
        if report.is_none() {
            "no pairwise monochromatic solution"
        } else {
            "pairwise monochromatic solution found"
        }
    );
    Ok(Outcome {
        positive: report.is_none(),
        result: to_value(&report)?,
    })
}

fn cmd_rado(args: &RadoArgs) -> Result<Outcome, Error> {
    let ring: Ring = args.ring.parse()?;
    let (matrix, rhs) = parse_system(&read(&args.system)?)?;
    if let Some(t) = constant_solution(&matrix, &rhs, ring)? {
        eprintln!("partition regular: constant solution t = {t}");
        return Ok(positive(json!({
            "ring": ring.to_string(),
            "pr": true,
            "t": t.to_string(),
        })));
    }
    let shape = match (matrix.as_slice(), rhs.as_slice()) {
        ([row], [b]) => CertEquation::from_row(row, b, ring),
        _ => None,
    };
    let certificate = match shape {
        Some(shape) => match non_pr_certificate(&shape, ring, args.radius) {
            Ok(cert) => Some(cert),
            Err(Error::Unsupported(why)) => {
                eprintln!("no certificate: {why}");
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    eprintln!("not partition regular: no constant solution");
    let (cert_json, checked) = match &certificate {
        Some(cert) => (
            json!({
                "coloring": serde_json::from_str::<Value>(&coloring_to_json(&cert.coloring)?)?,
                "report": to_value(&cert.report)?,
            }),
            cert.report.is_none(),
        ),
        None => (Value::Null, true),
    };
    Ok(Outcome {
        result: json!({
            "ring": ring.to_string(),
            "pr": false,
            "certificate": cert_json,
        }),
        positive: checked,
    })
}

fn cmd_greedy(args: &GreedyArgs) -> Result<Outcome, Error> {
    let spec = parse_group(&args.group)?;
    let b = spec.parse_element(&args.b)?;
    let table = greedy_color(&spec, &b, args.count, args.palette)?;
    if let Some(path) = &args.out {
        write_table_csv(&table, fs::File::create(path)?)?;
    }
    let elements: Vec<Element> = table.domain().cloned().collect();
    let used = table.used_colors();
    let report = verify_on(
        &spec,
        &Coloring::Table(table),
        &EquationSpec::new(1, b)?,
        &elements,
    )?;
    eprintln!("colored {} elements with {used} colors", elements.len());
    Ok(Outcome {
        positive: report.is_none(),
        result: json!({
            "count": elements.len(),
            "palette": args.palette,
            "used_colors": used,
            "report": to_value(&report)?,
        }),
    })
}

fn actions_json(state: &StageState) -> Value {
    state
        .actions()
        .iter()
        .map(|(e, a)| {
            json!({
                "e": e,
                "stage": a.stage,
                "value": a.value,
                "k": a.k.to_string(),
                "multiplier": a.multiplier.to_string(),
                "positions": [a.positions.0, a.positions.1],
                "pair": [a.pair.0, a.pair.1],
            })
        })
        .collect()
}

fn cmd_diagonalize(args: &DiagonalizeArgs) -> Result<Outcome, Error> {
    let state = args.run.run()?;
    if let Some(path) = &args.dump_events {
        fs::write(path, state.events_jsonl()?)?;
    }
    if let Some(path) = &args.group_csv {
        write_group_csv(&state.snapshot()?, fs::File::create(path)?)?;
    }
    if let Some(path) = &args.coloring_csv {
        write_table_csv(&state.reference_bad_coloring()?, fs::File::create(path)?)?;
    }
    let audit = state.audit();
    if !audit.is_clean() {
        eprintln!("audit found {} violations", audit.violations.len());
    }
    Ok(Outcome {
        positive: audit.is_clean(),
        result: json!({
            "stage": state.stage(),
            "carrier_size": state.carrier_size(),
            "actions": actions_json(&state),
            "audit": to_value(&audit)?,
            "unstabilized": state.unstabilized_ids(),
        }),
    })
}

fn cmd_extract(args: &ExtractArgs) -> Result<Outcome, Error> {
    let state = args.run.run()?;
    let count = args.count.unwrap_or_else(|| args.run.index_count(&state));
    let group = state.group()?;
    let coloring = match args.coloring.as_str() {
        "reference" => Coloring::Table(state.reference_bad_coloring()?),
        path => Coloring::Table(read_table_csv(&group, fs::File::open(path)?, None)?),
    };
    let mut result = json!({ "count": count });
    let g = match args.kind {
        ExtractKind::Pa => state.extract_pa(&coloring, count)?,
        ExtractKind::Dnc => state.extract_dnc(&coloring, count, args.period)?,
        ExtractKind::Separator => {
            let report = state.check_no_mono_pair(&coloring)?;
            if !report.is_none() {
                eprintln!("coloring has a monochromatic x - y = b on the carrier");
                result["report"] = to_value(&report)?;
                return Ok(Outcome {
                    result,
                    positive: false,
                });
            }
            result["separator"] = to_value(&state.extract_separator(&coloring, count)?)?;
            return Ok(positive(result));
        }
    };
    result["g"] = map_json(&g);
    let Driver::Machine { fixture, fuel } = state.driver() else {
        return Ok(positive(result));
    };
    // Compare with the fixture's halting diagonal values.
    let mut mismatch = None;
    for (e, idx) in fixture.iter().enumerate().take(count as usize) {
        let Some(v) = eval_diagonal(idx, *fuel).value() else {
            continue;
        };
        let ok = match args.kind {
            ExtractKind::Pa => g[&(e as u64)] == v,
            _ => g[&(e as u64)] != v,
        };
        if !ok && mismatch.is_none() {
            mismatch = Some(e);
        }
    }
    let key = match args.kind {
        ExtractKind::Pa => "extends_diagonal",
        _ => "dnc",
    };
    result[key] = json!(mismatch.is_none());
    if let Some(e) = mismatch {
        eprintln!("check `{key}` fails at index {e} ({})", fixture[e]);
    }
    Ok(Outcome {
        result,
        positive: mismatch.is_none(),
    })
}

fn map_json(m: &std::collections::BTreeMap<u64, u64>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn cmd_tree(args: &TreeArgs) -> Result<Outcome, Error> {
    let eq = args.eq.load(false)?;
    let mut tree = ColoringTree::new(&eq.spec, eq.eq.clone(), args.k, !args.no_symmetry)?;
    let died = match tree.grow(args.depth) {
        Ok(()) => false,
        Err(Error::TreeDied { level }) => {
            eprintln!("every {}-coloring fails by level {level}", args.k);
            true
        }
        Err(e) => return Err(e),
    };
    if !died {
        eprintln!(
            "{} colorings survive at depth {}",
            tree.level_size(args.depth)?,
            args.depth
        );
    }
    Ok(Outcome {
        positive: !died,
        result: to_value(&tree.report())?,
    })
}

fn cmd_jockusch(args: &JockuschArgs) -> Result<Outcome, Error> {
    let base = parse_fixture(&read(&args.fixture)?)?;
    let k = args.k;
    let closure = diag_pair_closure(k, &base);
    let oracle_fuel = 2 * args.fuel + 1;
    let g = brute_force_dnc(k * k, &closure, oracle_fuel)?;
    let Some(witness) = find_case_witness(&g, k, &base, args.fuel)? else {
        eprintln!("no case witness on these indices");
        return Ok(Outcome {
            result: json!({ "k": k, "witness": Value::Null }),
            positive: false,
        });
    };
    let case = match &witness {
        CaseWitness::Case1(_) => json!({ "case": 1 }),
        CaseWitness::Case2(a) => json!({ "case": 2, "a": a.to_string() }),
    };
    let h = match jockusch_reduce(&g, k, &witness, &base, args.fuel) {
        Ok(h) => h,
        Err(Error::InvalidWitness { index }) => {
            eprintln!("reduction fails at {index}");
            return Ok(Outcome {
                result: json!({ "k": k, "witness": case, "dnc": false, "failed_at": index }),
                positive: false,
            });
        }
        Err(e) => return Err(e),
    };
    eprintln!(
        "DNC_{} oracle on {} indices reduced to DNC_{k}",
        k * k,
        closure.len()
    );
    Ok(positive(json!({
        "k": k,
        "oracle_bound": k * k,
        "oracle_indices": closure.len(),
        "witness": case,
        "h": Value::Object(h.iter().map(|(e, v)| (e.to_string(), json!(v))).collect()),
        "dnc": true,
    })))
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Color(a) => cmd_color(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Rado(a) => cmd_rado(a),
        Command::Greedy(a) => cmd_greedy(a),
        Command::Diagonalize(a) => cmd_diagonalize(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Tree(a) => cmd_tree(a),
        Command::Jockusch(a) => cmd_jockusch(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.result).expect("JSON values serialize");
            // A closed pipe is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if out.positive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
