//! Command-line front end for the repeater toolkit.
//!
//! Subcommands: `measures`, `single-node`, `chain`, `sweep`, `table1`,
//! `resources`, `robustness`. Every subcommand accepts `--json` for machine
//! output. Exit codes: 0 success, 2 input error, 3 I/O error. The env var
//! REPEATER_SEED sets the default Monte-Carlo seed; identical inputs and
//! seeds produce byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use repeater_core::measures::{
    measure_report, ofef_family, sampled_fef, teleport_avg_fidelity_mc,
};
use repeater_core::protocols::{
    average_ofef_single_node, family_params_extract, feasibility_single_node, fold_alphas,
    post_states_closed_form, reduce_chain_end_noise, reduce_chain_mid_noise,
};
use repeater_core::resources::{
    copies_required, resource_report, saved_resource_at_position, saved_resource_bound,
    saved_resource_limit,
};
use repeater_core::robustness::{
    engine_average_fef, me_vs_nme_photonloss, me_vs_nme_white, robustness_point, table1,
    RobustnessCase, RobustnessPoint, POVM_CASE_P, TABLE1_P, TABLE1_Q,
};
use repeater_core::scenario::{ChainScenario, SegmentSpec};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

const EXIT_INPUT: i32 = 2;
const EXIT_IO: i32 = 3;

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<repeater_core::Error> for CliError {
    fn from(e: repeater_core::Error) -> Self {
        CliError::input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid {what}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value")
}

/// Default Monte-Carlo seed: REPEATER_SEED if set, else 12345.
fn default_seed() -> u64 {
    std::env::var("REPEATER_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(12345)
}

/// 17-significant-digit, locale-independent float for CSV cells.
fn csv_num(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// Argument declarations
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "repeater",
    version,
    about = "Entanglement swapping over repeater chains with one imperfect segment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement and fidelity measures of one two-qubit state
    Measures(MeasuresArgs),
    /// Feasibility and per-outcome fidelities of a single swap
    SingleNode(SingleNodeArgs),
    /// Fold a configured chain down to its effective pairs
    Chain(ChainArgs),
    /// Evaluate a parameter sweep into a CSV file
    Sweep(SweepArgs),
    /// Percentage fidelity drop under white noise on the reference grid
    Table1(Table1Args),
    /// Saved-resource and distillation-cost report
    Resources(ResourcesArgs),
    /// Fidelity retention of one noise scenario at one point
    Robustness(RobustnessArgs),
}

#[derive(Args)]
struct MeasuresArgs {
    /// State as a JSON segment spec, e.g. {"kind":"family","p":0.3,"delta":0.7}
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    /// Read the JSON segment spec from a file instead
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Also report sampled FEF and simulated teleportation fidelity
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Monte-Carlo seed (default: REPEATER_SEED or 12345)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SingleNodeArgs {
    /// Product weight of the noisy link
    #[arg(long)]
    p: f64,
    /// Schmidt weight of the noisy link's entangled branch
    #[arg(long)]
    delta: f64,
    /// Schmidt weight of the free pair
    #[arg(long)]
    alpha: f64,
    /// Weight of the node measurement basis
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ChainArgs {
    /// Path to a JSON chain scenario
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to a JSON sweep spec
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Also print the rows as JSON to stdout
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Table1Args {
    /// Optional CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ResourcesArgs {
    /// Number of free segments
    #[arg(long)]
    n: usize,
    /// Product weight of the noisy link
    #[arg(long)]
    p: f64,
    /// Schmidt weight of the noisy link's entangled branch
    #[arg(long)]
    delta: f64,
    /// Werner fidelity of the raw copies used for distillation
    #[arg(long, visible_alias = "f")]
    fidelity: f64,
    /// Also report the copy count rounded up to an integer
    #[arg(long)]
    ceil: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RobustnessArgs {
    /// Scenario: white | photon_loss | povm_white | povm_loss |
    /// me_vs_nme_white | me_vs_nme_loss
    #[arg(long)]
    case: String,
    /// Product weight of the noisy link (fixed at 0.8 for povm_* cases)
    #[arg(long)]
    p: Option<f64>,
    /// Noise weight in the free segment
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Outcome-bit flip probability (povm_* cases only)
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    json: bool,
}

// ---------------------------------------------------------------------------
// measures
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct McReport {
    samples: usize,
    seed: u64,
    sampled_fef: f64,
    teleport_avg_fidelity: f64,
}

fn cmd_measures(args: MeasuresArgs) -> CliResult<()> {
    let text = match (&args.spec, &args.spec_file) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => read_file(path)?,
        (None, None) => return Err(CliError::input("provide --spec or --spec-file")),
    };
    let spec: SegmentSpec = parse_json("state spec", &text)?;
    let state = spec.build()?;
    let report = measure_report(&state)?;
    let mc = match args.mc_samples {
        Some(samples) => {
            let seed = args.seed.unwrap_or_else(default_seed);
            Some(McReport {
                samples,
                seed,
                sampled_fef: sampled_fef(&state, samples, seed)?,
                teleport_avg_fidelity: teleport_avg_fidelity_mc(&state, samples, seed)?,
            })
        }
        None => None,
    };
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            state: &'a SegmentSpec,
            report: &'a repeater_core::measures::MeasureReport,
            #[serde(skip_serializing_if = "Option::is_none")]
            mc: Option<&'a McReport>,
        }
        println!(
            "{}",
            to_json(&Out {
                state: &spec,
                report: &report,
                mc: mc.as_ref()
            })
        );
        return Ok(());
    }
    println!("state: {}", serde_json::to_string(&spec).expect("spec"));
    println!("concurrence = {:.12}", report.concurrence);
    println!("negativity  = {:.12}", report.negativity);
    println!("fef         = {:.12}", report.fef);
    println!("ofef_upper  = {:.12}", report.ofef_upper);
    println!("otf         = {:.12}", report.otf);
    if let Some(mc) = mc {
        println!(
            "sampled_fef ({} samples, seed {})           = {:.12}",
            mc.samples, mc.seed, mc.sampled_fef
        );
        println!(
            "teleport_avg_fidelity ({} samples, seed {}) = {:.12}",
            mc.samples, mc.seed, mc.teleport_avg_fidelity
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// single-node
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OutcomeRow {
    label: usize,
    probability: f64,
    p_eff: f64,
    delta_eff: f64,
    best_fidelity: f64,
}

fn best_fidelity_of(p_eff: f64, delta_eff: f64) -> CliResult<f64> {
    if delta_eff >= 1.0 {
        Ok(0.5)
    } else {
        Ok(ofef_family(p_eff, delta_eff)?)
    }
}

fn cmd_single_node(args: SingleNodeArgs) -> CliResult<()> {
    let (p, delta, alpha, beta) = (args.p, args.delta, args.alpha, args.beta);
    let feasibility = feasibility_single_node(p, delta, alpha, beta)?;
    let ensemble = post_states_closed_form(p, delta, alpha, beta)?;
    let mut rows = Vec::new();
    for outcome in &ensemble.outcomes {
        let state = outcome
            .state
            .as_ref()
            .ok_or_else(|| CliError::input("an outcome has vanishing probability"))?;
        let params = family_params_extract(state)?;
        rows.push(OutcomeRow {
            label: outcome.label,
            probability: outcome.probability,
            p_eff: params.p_eff,
            delta_eff: params.delta_eff,
            best_fidelity: best_fidelity_of(params.p_eff, params.delta_eff)?,
        });
    }
    let average = average_ofef_single_node(p, delta, alpha, beta)?;
    let link_optimum = ofef_family(p, delta)?;
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            p: f64,
            delta: f64,
            alpha: f64,
            beta: f64,
            feasibility: &'a repeater_core::protocols::FeasibilityReport,
            outcomes: &'a [OutcomeRow],
            average_best_fidelity: f64,
            link_optimum: f64,
        }
        println!(
            "{}",
            to_json(&Out {
                p,
                delta,
                alpha,
                beta,
                feasibility: &feasibility,
                outcomes: &rows,
                average_best_fidelity: average,
                link_optimum,
            })
        );
        return Ok(());
    }
    println!("single swap at p = {p}, delta = {delta}, alpha = {alpha}, beta = {beta}");
    println!(
        "feasible = {} (outcomes {:?}, alpha bound {:.6}, beta bound {:.6})",
        feasibility.feasible,
        feasibility.outcome_feasible,
        feasibility.alpha_bound,
        feasibility.beta_bound
    );
    if let Some(floor) = feasibility.delta_floor {
        println!("small-p branch: delta floor = {floor:.6}");
    }
    println!("outcome  probability         p_eff               delta_eff           best_fidelity");
    for r in &rows {
        println!(
            "{:<8} {:<19.12} {:<19.12} {:<19.12} {:.12}",
            r.label, r.probability, r.p_eff, r.delta_eff, r.best_fidelity
        );
    }
    println!("average best fidelity = {average:.12}");
    println!("link optimum          = {link_optimum:.12}");
    Ok(())
}

// ---------------------------------------------------------------------------
// chain
// ---------------------------------------------------------------------------

fn running_folds(alphas: &[f64]) -> CliResult<Vec<f64>> {
    let mut steps = Vec::with_capacity(alphas.len());
    for end in 1..=alphas.len() {
        steps.push(fold_alphas(&alphas[..end])?);
    }
    Ok(steps)
}

fn cmd_chain(args: ChainArgs) -> CliResult<()> {
    let scenario: ChainScenario = parse_json("chain config", &read_file(&args.config)?)?;
    scenario.validate()?;
    let reduction = reduce_chain_mid_noise(&scenario)?;
    let at_end =
        scenario.noisy_index == 1 || scenario.noisy_index == scenario.segments.len();
    let end_reduction = if at_end {
        Some(reduce_chain_end_noise(&scenario)?)
    } else {
        None
    };
    let (left, right) = scenario.split_free_alphas()?;
    let left_steps = running_folds(&left)?;
    let right_steps = running_folds(&right)?;
    let rv: f64 = left
        .iter()
        .chain(right.iter())
        .map(|&a| 1.0 - 2.0 * (a * (1.0 - a)).sqrt())
        .sum();
    let link_optimum = ofef_family(reduction.p, reduction.delta)?;
    let achieved = reduction.feasible.then_some(link_optimum);
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            reduction: &'a repeater_core::protocols::TwoNodeReduction,
            #[serde(skip_serializing_if = "Option::is_none")]
            end_reduction: Option<&'a repeater_core::protocols::EndReduction>,
            left_fold_steps: &'a [f64],
            right_fold_steps: &'a [f64],
            saved_resource: f64,
            link_optimum: f64,
            achieved_fidelity: Option<f64>,
        }
        println!(
            "{}",
            to_json(&Out {
                reduction: &reduction,
                end_reduction: end_reduction.as_ref(),
                left_fold_steps: &left_steps,
                right_fold_steps: &right_steps,
                saved_resource: rv,
                link_optimum,
                achieved_fidelity: achieved,
            })
        );
        return Ok(());
    }
    println!(
        "chain: {} segments, noisy link at position {} (p = {}, delta = {})",
        scenario.segments.len(),
        scenario.noisy_index,
        reduction.p,
        reduction.delta
    );
    let describe = |side: &str, alphas: &[f64], steps: &[f64], folded: f64| {
        if alphas.is_empty() {
            println!("{side}: no free segments (neutral weight 0.5)");
        } else {
            let mut line = format!("{side}: alphas {alphas:?} fold to");
            for s in steps {
                let _ = write!(line, " {s:.6}");
            }
            println!("{line} -> alpha' = {folded:.12}");
        }
    };
    describe("left ", &left, &left_steps, reduction.alpha_left);
    describe("right", &right, &right_steps, reduction.alpha_right);
    println!("feasible = {}", reduction.feasible);
    if let Some(end) = &end_reduction {
        println!(
            "end reduction: alpha' = {:.12}, threshold = {:.12}",
            end.alpha_prime, end.alpha_threshold
        );
    }
    println!("link optimum fidelity = {link_optimum:.12}");
    match achieved {
        Some(f) => println!("achieved fidelity     = {f:.12}"),
        None => println!("achieved fidelity     = below link optimum (infeasible)"),
    }
    println!("saved resource R_v    = {rv:.12}");
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AxisSpec {
    name: String,
    min: f64,
    max: f64,
    steps: usize,
}

impl AxisSpec {
    fn value(&self, index: usize) -> f64 {
        if self.steps == 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * index as f64 / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SweepSpec {
    axes: Vec<AxisSpec>,
    #[serde(default)]
    fixed: BTreeMap<String, serde_json::Value>,
    target: String,
}

struct ParamSet<'a> {
    fixed: &'a BTreeMap<String, serde_json::Value>,
    axis_names: [Option<&'a str>; 2],
    axis_values: [f64; 2],
}

impl ParamSet<'_> {
    fn get(&self, name: &str) -> CliResult<f64> {
        for (slot, value) in self.axis_names.iter().zip(self.axis_values) {
            if *slot == Some(name) {
                return Ok(value);
            }
        }
        match self.fixed.get(name) {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::input(format!("parameter `{name}` must be numeric"))),
            None => Err(CliError::input(format!(
                "missing parameter `{name}` (fix it or sweep it)"
            ))),
        }
    }

    fn get_usize(&self, name: &str) -> CliResult<usize> {
        let x = self.get(name)?;
        let rounded = x.round();
        if rounded < 0.0 || (x - rounded).abs() > 1e-9 {
            return Err(CliError::input(format!(
                "parameter `{name}` must be a nonnegative integer, got {x}"
            )));
        }
        Ok(rounded as usize)
    }

    fn get_str(&self, name: &str) -> CliResult<&str> {
        match self.fixed.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s),
            Some(_) => Err(CliError::input(format!("parameter `{name}` must be a string"))),
            None => Err(CliError::input(format!("missing fixed parameter `{name}`"))),
        }
    }
}

fn sweep_targets() -> &'static [&'static str] {
    &[
        "rv_bound",
        "rv_limit",
        "rv_position",
        "copies",
        "ofef",
        "single_node_average",
        "robustness",
        "pct_change",
    ]
}

fn evaluate_target(target: &str, params: &ParamSet) -> CliResult<f64> {
    match target {
        "rv_bound" => Ok(saved_resource_bound(
            params.get_usize("n")?,
            params.get("p")?,
            params.get("delta")?,
        )?),
        "rv_limit" => Ok(saved_resource_limit(params.get("p")?, params.get("delta")?)?),
        "rv_position" => Ok(saved_resource_at_position(
            params.get_usize("n")?,
            params.get_usize("m")?,
            params.get("p")?,
            params.get("delta")?,
        )?),
        "copies" => Ok(copies_required(
            params.get_usize("n")?,
            params.get("p")?,
            params.get("fidelity")?,
        )?),
        "ofef" => Ok(ofef_family(params.get("p")?, params.get("delta")?)?),
        "single_node_average" => Ok(average_ofef_single_node(
            params.get("p")?,
            params.get("delta")?,
            params.get("alpha")?,
            params.get("beta")?,
        )?),
        "robustness" | "pct_change" => {
            let case = RobustnessCase::parse(params.get_str("case")?)?;
            let p = if case.uses_eta() {
                POVM_CASE_P
            } else {
                params.get("p")?
            };
            let eta = if case.uses_eta() {
                Some(params.get("eta").unwrap_or(0.0))
            } else {
                None
            };
            let point = robustness_point(case, p, params.get("q").unwrap_or(0.0), eta)?;
            Ok(if target == "robustness" {
                point.f_noisy
            } else {
                point.pct_change
            })
        }
        other => Err(CliError::input(format!(
            "unknown sweep target `{other}` (expected one of {})",
            sweep_targets().join(", ")
        ))),
    }
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let spec: SweepSpec = parse_json("sweep spec", &read_file(&args.spec)?)?;
    if spec.axes.is_empty() || spec.axes.len() > 2 {
        return Err(CliError::input("a sweep needs 1 or 2 axes"));
    }
    for axis in &spec.axes {
        if axis.steps < 2 {
            return Err(CliError::input(format!(
                "axis `{}` needs at least 2 steps",
                axis.name
            )));
        }
    }
    let outer = spec.axes[0].clone();
    let inner = spec.axes.get(1).cloned();
    let inner_steps = inner.as_ref().map_or(1, |a| a.steps);
    let total = outer.steps * inner_steps;

    // Row-major over (outer, inner); indexed map keeps the merge order
    // deterministic regardless of worker scheduling.
    let rows: Vec<CliResult<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let i = flat / inner_steps;
            let j = flat % inner_steps;
            let x = outer.value(i);
            let y = inner.as_ref().map(|a| a.value(j));
            let params = ParamSet {
                fixed: &spec.fixed,
                axis_names: [Some(outer.name.as_str()), inner.as_ref().map(|a| a.name.as_str())],
                axis_values: [x, y.unwrap_or(0.0)],
            };
            let value = evaluate_target(&spec.target, &params)?;
            let mut row = vec![x];
            if let Some(y) = y {
                row.push(y);
            }
            row.push(value);
            Ok(row)
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<CliResult<_>>()?;

    let mut csv = String::new();
    let meta = serde_json::json!({
        "axes": spec.axes,
        "fixed": spec.fixed,
        "target": spec.target,
        "seed": default_seed(),
    });
    let _ = writeln!(csv, "# meta: {meta}");
    let mut header: Vec<&str> = vec![outer.name.as_str()];
    if let Some(a) = &inner {
        header.push(a.name.as_str());
    }
    header.push(spec.target.as_str());
    let _ = writeln!(csv, "{}", header.join(","));
    for row in &rows {
        let cells: Vec<String> = row.iter().map(|&x| csv_num(x)).collect();
        let _ = writeln!(csv, "{}", cells.join(","));
    }
    write_file(&args.out, &csv)?;

    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            spec: &'a SweepSpec,
            header: Vec<&'a str>,
            rows: &'a [Vec<f64>],
        }
        println!(
            "{}",
            to_json(&Out {
                spec: &spec,
                header,
                rows: &rows
            })
        );
    } else {
        println!(
            "wrote {} rows ({} -> {}) to {}",
            rows.len(),
            header[..header.len() - 1].join(" x "),
            spec.target,
            args.out.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

fn cmd_table1(args: Table1Args) -> CliResult<()> {
    let pct = table1(&TABLE1_P, &TABLE1_Q)?;
    if let Some(out) = &args.out {
        let mut csv = String::new();
        let meta = serde_json::json!({
            "command": "table1",
            "p": TABLE1_P,
            "q": TABLE1_Q,
        });
        let _ = writeln!(csv, "# meta: {meta}");
        let _ = writeln!(csv, "p,q,pct_change");
        for (i, &p) in TABLE1_P.iter().enumerate() {
            for (j, &q) in TABLE1_Q.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{}", csv_num(p), csv_num(q), csv_num(pct[i][j]));
            }
        }
        write_file(out, &csv)?;
    }
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            p: &'a [f64],
            q: &'a [f64],
            pct_change: &'a [Vec<f64>],
        }
        println!(
            "{}",
            to_json(&Out {
                p: &TABLE1_P,
                q: &TABLE1_Q,
                pct_change: &pct
            })
        );
        return Ok(());
    }
    println!("percentage fidelity drop under white noise in the free segment");
    let mut header = String::from("p \\ q ");
    for q in TABLE1_Q {
        let _ = write!(header, "{q:>9.2}");
    }
    println!("{header}");
    for (i, p) in TABLE1_P.iter().enumerate() {
        let mut line = format!("{p:<6.2}");
        for v in &pct[i] {
            let _ = write!(line, "{v:>9.4}");
        }
        println!("{line}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// resources
// ---------------------------------------------------------------------------

fn cmd_resources(args: ResourcesArgs) -> CliResult<()> {
    let report = resource_report(args.n, args.p, args.delta, args.fidelity)?;
    let copies_ceil = args.ceil.then(|| report.copies_required.ceil() as u64);
    if args.json {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(flatten)]
            report: &'a repeater_core::resources::ResourceReport,
            #[serde(skip_serializing_if = "Option::is_none")]
            copies_ceil: Option<u64>,
        }
        println!(
            "{}",
            to_json(&Out {
                report: &report,
                copies_ceil
            })
        );
        return Ok(());
    }
    println!("free segments (n)       = {}", report.n);
    println!(
        "concurrence per segment = {:.12}",
        report.concurrence_per_segment
    );
    println!("saved resource R_v      = {:.12}", report.rv);
    println!("R_v upper bound         = {:.12}", report.rv_upper);
    println!("R_v limit (n -> inf)    = {:.12}", report.rv_limit);
    println!("copies required         = {:.12}", report.copies_required);
    if let Some(c) = copies_ceil {
        println!("copies required (ceil)  = {c}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// robustness
// ---------------------------------------------------------------------------

fn cmd_robustness(args: RobustnessArgs) -> CliResult<()> {
    let case = RobustnessCase::parse(&args.case)?;
    let p = match (case.uses_eta(), args.p) {
        (true, _) => POVM_CASE_P,
        (false, Some(p)) => p,
        (false, None) => {
            return Err(CliError::input(format!(
                "case `{}` needs --p",
                args.case
            )))
        }
    };
    let point = robustness_point(case, p, args.q, args.eta)?;
    if args.json {
        println!("{}", to_json(&point));
        return Ok(());
    }
    print_point(&point)?;
    // Independent cross-check: the plain (filter-free) outcome average.
    let plain = engine_average_fef(case, point.p, point.q, point.eta.unwrap_or(0.0))?;
    println!(
        "plain outcome-averaged fef = {:.12} (protocol gains {:.12})",
        plain,
        point.f_noisy - plain
    );
    if matches!(
        case,
        RobustnessCase::MeVsNmeWhite | RobustnessCase::MeVsNmeLoss
    ) {
        let (f_me, f_nme, pct, valid) = match case {
            RobustnessCase::MeVsNmeWhite => me_vs_nme_white(point.p, point.q)?,
            _ => me_vs_nme_photonloss(point.p, point.q)?,
        };
        println!(
            "maximal vs non-maximal resource: f_me = {f_me:.12}, f_nme = {f_nme:.12}, \
             gap = {pct:.6} % (valid = {valid})"
        );
    }
    Ok(())
}

fn print_point(point: &RobustnessPoint) -> CliResult<()> {
    println!(
        "case = {}",
        serde_json::to_value(point.case)
            .expect("case name")
            .as_str()
            .expect("string enum")
    );
    println!("p    = {:.6}", point.p);
    println!("q    = {:.6}", point.q);
    match point.eta {
        Some(eta) => println!("eta  = {eta:.6}"),
        None => println!("eta  = -"),
    }
    println!("noiseless fidelity = {:.12}", point.f_opt);
    println!("retained fidelity  = {:.12}", point.f_noisy);
    println!("drop               = {:.6} %", point.pct_change);
    println!("within validity    = {}", point.in_validity_range);
    Ok(())
}

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Measures(args) => cmd_measures(args),
        Command::SingleNode(args) => cmd_single_node(args),
        Command::Chain(args) => cmd_chain(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Resources(args) => cmd_resources(args),
        Command::Robustness(args) => cmd_robustness(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
