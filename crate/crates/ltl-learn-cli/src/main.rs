//! Batch command-line surface for the learning pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ltl_learn::config::Config;
use ltl_learn::falsify::{self, FalsifyOptions};
use ltl_learn::kkt::{self, TemplateOptions};
use ltl_learn::ltl::{self, Formula, LeafValuation, OpKind};
use ltl_learn::milp::SolveStatus;
use ltl_learn::planner;
use ltl_learn::problem::{DemoFile, Demonstration, Problem, ProblemFile};
use ltl_learn::queries::{self, QueryBase, QueryOptions, Verdict};
use ltl_learn::structure::{Grammar, SpecOptConfig, WeightOrder};

/// Exit codes per failure class.
const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_TIME_LIMIT: u8 = 4;
const EXIT_CAP_REACHED: u8 = 5;

#[derive(Parser)]
#[command(
    name = "ltl-learn",
    about = "Learn bounded-LTL task specifications, AP regions and cost weights from demonstrations",
    version
)]
struct Cli {
    /// JSON config file (defaults to $LTL_LEARN_CONFIG, then built-ins).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on parallel jobs (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Per-solve wall clock limit in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Solver random seed.
    #[arg(long, global = true)]
    seed: Option<i32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LearnCommon {
    /// Problem JSON file.
    problem: PathBuf,
    /// Demonstration JSON files.
    demos: Vec<PathBuf>,
    /// Operators admitted in the grammar (comma list of and,or,always,
    /// until,eventually,seq,avoid,after). Default: all.
    #[arg(long)]
    ops: Option<String>,
    /// Drop negated-AP leaves from the grammar.
    #[arg(long)]
    no_negated_leaves: bool,
    /// Spec-optimality order mu (omit to disable).
    #[arg(long)]
    mu: Option<usize>,
    /// Enforce spec-optimality on the first K demonstrations only.
    #[arg(long)]
    spec_opt_demos: Option<usize>,
    /// Disable salient-index preprocessing.
    #[arg(long)]
    no_salient: bool,
    /// Candidate ordering by node weight.
    #[arg(long, value_parser = ["none", "strongest", "weakest"], default_value = "none")]
    order: String,
    /// Exclude already-returned structures with no-good cuts.
    #[arg(long)]
    block_structures: bool,
    /// Cap on the DAG size sweep.
    #[arg(long)]
    ndag_max: Option<usize>,
    /// Write the run report JSON here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a trace and print the verdict.
    Check {
        /// Formula in prefix syntax.
        formula: String,
        /// Trace JSON (demonstration file).
        trace: PathBuf,
        /// Problem JSON for geometric membership when the trace has no
        /// complete labels.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Evaluation start time (1-based).
        #[arg(long, default_value_t = 1)]
        at: usize,
    },
    /// Learn AP parameters under a fixed formula structure.
    LearnParams {
        problem: PathBuf,
        demos: Vec<PathBuf>,
        #[arg(long)]
        formula: String,
        /// Minimize the l1 distance to the declared nominals.
        #[arg(long)]
        nominal: bool,
        /// Relax stationarity/complementarity to penalties.
        #[arg(long)]
        suboptimal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn structure and parameters by counterexample-guided search.
    Learn(LearnCommon),
    /// Learn structure, parameters and cost weights.
    LearnCost(LearnCommon),
    /// Guaranteed-membership query for one constraint state.
    Query {
        problem: PathBuf,
        demos: Vec<PathBuf>,
        /// Fixed formula text (or use --model).
        #[arg(long)]
        formula: Option<String>,
        /// Learned-model JSON from a learn run.
        #[arg(long)]
        model: Option<PathBuf>,
        /// AP index (1-based).
        #[arg(long)]
        ap: usize,
        /// Constraint state, comma-separated.
        #[arg(long)]
        point: String,
        /// Also impose spec-optimality with this mu.
        #[arg(long)]
        mu: Option<usize>,
    },
    /// Radius of the largest guaranteed box around a point.
    ExtractVolume {
        problem: PathBuf,
        demos: Vec<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        ap: usize,
        #[arg(long)]
        point: String,
        /// Which guarantee to extend: "in" or "out".
        #[arg(long, value_parser = ["in", "out"])]
        side: String,
        #[arg(long)]
        mu: Option<usize>,
    },
    /// Classify a grid of constraint states and write JSON/CSV (and an
    /// optional PNG plot).
    Render {
        problem: PathBuf,
        demos: Vec<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        ap: usize,
        /// Per-axis bounds, e.g. "0:5,0:5".
        #[arg(long)]
        bounds: String,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Output stem; writes <stem>.json and <stem>.csv.
        #[arg(long, default_value = "grid")]
        grid: String,
        /// Optional PNG heat map (2D grids only).
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        mu: Option<usize>,
    },
    /// Plan a formula-satisfying trajectory.
    Plan {
        problem: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Start state, comma-separated (default: the problem's).
        #[arg(long)]
        start: Option<String>,
        /// Goal state, comma-separated (default: the problem's).
        #[arg(long)]
        goal: Option<String>,
        /// Horizon T.
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
        /// AP parameters JSON (as emitted by learn-params); defaults to the
        /// model's parameters or the problem nominals.
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate optimal (optionally noisy) demonstrations.
    GenDemos {
        problem: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// AP parameters JSON; defaults to the problem nominals.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "demos")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: anyhow::Error,
}

impl CliError {
    fn new(code: u8, message: impl Into<anyhow::Error>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError {
            code: 1,
            message: e.into(),
        }
    }
}

fn classify_falsify(e: falsify::FalsifyError) -> CliError {
    use falsify::FalsifyError::*;
    let code = match &e {
        NoConsistentFormula(_) => EXIT_INFEASIBLE,
        InnerCapReached(_) | OuterCapReached(_) => EXIT_CAP_REACHED,
        _ => 1,
    };
    CliError::new(code, anyhow::anyhow!(e.to_string()))
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_json_file(p).map_err(|e| CliError::new(EXIT_PARSE, e))?,
        None => Config::from_env().map_err(|e| CliError::new(EXIT_PARSE, e))?,
    };
    if let Some(tl) = cli.time_limit {
        cfg.time_limit = Some(tl);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.jobs > 0 {
        cfg.jobs = cli.jobs;
    }
    cfg.validate().map_err(|e| CliError::new(EXIT_PARSE, e))?;
    ltl_learn::par_limit(cfg.jobs);
    Ok(cfg)
}

fn parse_formula(text: &str) -> Result<Formula, CliError> {
    ltl::parse(text).map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))
}

fn load_problem(path: &Path) -> Result<Problem, CliError> {
    ProblemFile::load(path).map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))
}

fn load_demos(problem: &Problem, paths: &[PathBuf]) -> Result<Vec<Demonstration>, CliError> {
    if paths.is_empty() {
        return Err(CliError::new(
            EXIT_PARSE,
            anyhow::anyhow!("at least one demonstration file is required"),
        ));
    }
    paths
        .iter()
        .map(|p| {
            DemoFile::load(p, problem)
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!("{}: {e}", p.display())))
        })
        .collect()
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!("bad coordinate: {e}")))
        })
        .collect()
}

fn parse_ops(text: &Option<String>) -> Result<Vec<OpKind>, CliError> {
    match text {
        None => Ok(OpKind::ALL.to_vec()),
        Some(t) => t
            .split(',')
            .map(|s| match s.trim() {
                "and" => Ok(OpKind::And),
                "or" => Ok(OpKind::Or),
                "always" => Ok(OpKind::Always),
                "until" => Ok(OpKind::Until),
                "eventually" => Ok(OpKind::Eventually),
                "seq" => Ok(OpKind::Seq),
                "avoid" => Ok(OpKind::Avoid),
                "after" => Ok(OpKind::After),
                other => Err(CliError::new(
                    EXIT_PARSE,
                    anyhow::anyhow!("unknown operator '{other}'"),
                )),
            })
            .collect(),
    }
}

fn formula_from_args(
    formula: &Option<String>,
    model: &Option<PathBuf>,
) -> Result<Formula, CliError> {
    match (formula, model) {
        (Some(f), _) => parse_formula(f),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let learned: falsify::LearnedModel = serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
            parse_formula(&learned.formula_text)
        }
        (None, None) => Err(CliError::new(
            EXIT_PARSE,
            anyhow::anyhow!("provide --formula or --model"),
        )),
    }
}

fn theta_from_args(
    problem: &Problem,
    theta: &Option<PathBuf>,
    model: &Option<PathBuf>,
) -> Result<Vec<Vec<f64>>, CliError> {
    if let Some(p) = theta {
        let text = std::fs::read_to_string(p)?;
        let map: std::collections::BTreeMap<String, Vec<f64>> = serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
        return problem
            .aps
            .iter()
            .map(|ap| {
                map.get(&ap.index.to_string()).cloned().ok_or_else(|| {
                    CliError::new(
                        EXIT_PARSE,
                        anyhow::anyhow!("theta file lacks AP {}", ap.index),
                    )
                })
            })
            .collect();
    }
    if let Some(p) = model {
        let text = std::fs::read_to_string(p)?;
        let learned: falsify::LearnedModel = serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
        if let Some(tp) = learned.theta_p {
            return Ok(tp);
        }
    }
    problem
        .aps
        .iter()
        .map(|ap| {
            ap.nominal.as_ref().map(|n| n.theta.clone()).ok_or_else(|| {
                CliError::new(
                    EXIT_PARSE,
                    anyhow::anyhow!("no parameters for AP {}: pass --theta or --model", ap.index),
                )
            })
        })
        .collect()
}

fn write_json<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn theta_json(problem: &Problem, theta: &[Vec<f64>]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (ap, th) in problem.aps.iter().zip(theta) {
        map.insert(ap.index.to_string(), serde_json::json!(th));
    }
    serde_json::Value::Object(map)
}

fn geometric_valuation(
    problem: &Problem,
    demo: &Demonstration,
    theta: &[Vec<f64>],
) -> LeafValuation {
    let t_max = demo.trajectory.duration();
    LeafValuation::from_rows(
        problem
            .aps
            .iter()
            .enumerate()
            .map(|(ai, ap)| {
                (1..=t_max)
                    .map(|t| {
                        let kappa = ap.eta.apply(demo.trajectory.state(t));
                        ap.margin(&kappa, &theta[ai]).0 <= 0.0
                    })
                    .collect()
            })
            .collect(),
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Check {
            formula,
            trace,
            problem,
            at,
        } => {
            let f = parse_formula(formula)?;
            let text = std::fs::read_to_string(trace)?;
            let file: DemoFile = serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
            let demo = file.into_demo();
            let complete_labels = demo
                .labels
                .as_ref()
                .is_some_and(|ls| ls.iter().all(|row| row.iter().all(|v| v.is_some())));
            let valuation = if complete_labels {
                LeafValuation::from_rows(
                    demo.labels
                        .as_ref()
                        .unwrap()
                        .iter()
                        .map(|row| row.iter().map(|v| v.unwrap()).collect())
                        .collect(),
                )
            } else {
                let p = problem.as_ref().ok_or_else(|| {
                    CliError::new(
                        EXIT_PARSE,
                        anyhow::anyhow!("trace has no complete labels; pass --problem"),
                    )
                })?;
                let p = load_problem(p)?;
                let theta = match demo.theta_p.clone() {
                    Some(t) => t,
                    None => theta_from_args(&p, &None, &None)?,
                };
                geometric_valuation(&p, &demo, &theta)
            };
            match ltl::evaluate(&f, &valuation, *at) {
                Ok(true) => println!("SATISFIED"),
                Ok(false) => {
                    println!("VIOLATED");
                    return Err(CliError::new(
                        EXIT_INFEASIBLE,
                        anyhow::anyhow!("trace violates the formula"),
                    ));
                }
                Err(e) => return Err(CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string()))),
            }
        }
        Command::LearnParams {
            problem,
            demos,
            formula,
            nominal,
            suboptimal,
            out,
        } => {
            let p = load_problem(problem)?;
            let ds = load_demos(&p, demos)?;
            let f = parse_formula(formula)?;
            let opts = TemplateOptions {
                nominal_objective: *nominal,
            };
            let res = if *suboptimal {
                kkt::solve_suboptimal(&p, &ds, &f, opts, &cfg)?
            } else {
                kkt::solve_fixed_template(&p, &ds, &f, opts, &cfg)?
            };
            match res.status {
                SolveStatus::Infeasible => {
                    return Err(CliError::new(
                        EXIT_INFEASIBLE,
                        anyhow::anyhow!("no consistent AP parameters exist"),
                    ))
                }
                SolveStatus::TimeLimit => {
                    return Err(CliError::new(
                        EXIT_TIME_LIMIT,
                        anyhow::anyhow!("solver hit the time limit"),
                    ))
                }
                _ => {}
            }
            let theta = res.theta_p.clone().unwrap_or_default();
            let report = serde_json::json!({
                "theta_p": theta_json(&p, &theta),
                "residual": res.residual,
                "per_demo_membership": res.z,
            });
            write_json(out, &report)?;
        }
        Command::Learn(common) => {
            let model = run_learn(common, &cfg, false)?;
            println!("learned: {}", model.formula_text);
            write_json(&common.out, &model)?;
        }
        Command::LearnCost(common) => {
            let model = run_learn(common, &cfg, true)?;
            println!("learned: {}", model.formula_text);
            write_json(&common.out, &model)?;
        }
        Command::Query {
            problem,
            demos,
            formula,
            model,
            ap,
            point,
            mu,
        } => {
            let p = load_problem(problem)?;
            let ds = load_demos(&p, demos)?;
            let f = formula_from_args(formula, model)?;
            let kappa = parse_point(point)?;
            let base = QueryBase::build(
                &p,
                &ds,
                &f,
                QueryOptions {
                    spec_opt_mu: *mu,
                    salient: true,
                },
                &cfg,
            )?;
            let verdict = base.query_point(&p, ap_position(&p, *ap)?, &kappa, &cfg)?;
            match verdict.verdict {
                Verdict::GuaranteedIn => println!("GUARANTEED-IN"),
                Verdict::GuaranteedOut => println!("GUARANTEED-OUT"),
                Verdict::Unknown => println!("UNKNOWN"),
            }
        }
        Command::ExtractVolume {
            problem,
            demos,
            formula,
            model,
            ap,
            point,
            side,
            mu,
        } => {
            let p = load_problem(problem)?;
            let ds = load_demos(&p, demos)?;
            let f = formula_from_args(formula, model)?;
            let kappa = parse_point(point)?;
            let base = QueryBase::build(
                &p,
                &ds,
                &f,
                QueryOptions {
                    spec_opt_mu: *mu,
                    salient: true,
                },
                &cfg,
            )?;
            let side = if side == "in" {
                Verdict::GuaranteedIn
            } else {
                Verdict::GuaranteedOut
            };
            let eps = base.extract_volume(&p, ap_position(&p, *ap)?, &kappa, side, &cfg)?;
            println!("{eps}");
        }
        Command::Render {
            problem,
            demos,
            formula,
            model,
            ap,
            bounds,
            step,
            grid,
            plot,
            mu,
        } => {
            let p = load_problem(problem)?;
            let ds = load_demos(&p, demos)?;
            let f = formula_from_args(formula, model)?;
            let bounds = parse_bounds(bounds)?;
            let base = QueryBase::build(
                &p,
                &ds,
                &f,
                QueryOptions {
                    spec_opt_mu: *mu,
                    salient: true,
                },
                &cfg,
            )?;
            let out_grid =
                queries::render_regions(&base, &p, ap_position(&p, *ap)?, &bounds, *step, &cfg)?;
            std::fs::write(
                format!("{grid}.json"),
                serde_json::to_string_pretty(&out_grid)?,
            )?;
            std::fs::write(format!("{grid}.csv"), out_grid.to_csv())?;
            if let Some(plot_path) = plot {
                write_plot(&out_grid, plot_path)?;
            }
            println!(
                "coverage: in {:.3} out {:.3} unknown {:.3}",
                out_grid.coverage(Verdict::GuaranteedIn),
                out_grid.coverage(Verdict::GuaranteedOut),
                out_grid.coverage(Verdict::Unknown)
            );
        }
        Command::Plan {
            problem,
            formula,
            model,
            start,
            goal,
            horizon,
            theta,
            out,
        } => {
            let p = load_problem(problem)?;
            let f = formula_from_args(formula, model)?;
            let th = theta_from_args(&p, theta, model)?;
            let start = match start {
                Some(s) => parse_point(s)?,
                None => p.start.clone(),
            };
            let goal = match goal {
                Some(g) => Some(parse_point(g)?),
                None => p.goal.clone(),
            };
            let t_max = horizon.or(p.horizon).ok_or_else(|| {
                CliError::new(
                    EXIT_PARSE,
                    anyhow::anyhow!("pass -T or set the problem horizon"),
                )
            })?;
            let cost = p
                .known_cost()
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
            match planner::plan(&p, &f, &th, &cost, t_max, &start, goal.as_deref(), &cfg) {
                Ok(planner::PlanOutcome::Optimal(res)) => {
                    let mut demo = Demonstration::new(res.trajectory, 0.0);
                    demo.goal = goal;
                    let file = DemoFile::from_demo(&demo);
                    let report = serde_json::json!({
                        "trajectory": file,
                        "cost": res.cost,
                    });
                    write_json(out, &report)?;
                }
                Ok(planner::PlanOutcome::Infeasible) => {
                    return Err(CliError::new(
                        EXIT_INFEASIBLE,
                        anyhow::anyhow!("the specification is infeasible"),
                    ))
                }
                Err(planner::PlannerError::NoProof) => {
                    return Err(CliError::new(
                        EXIT_TIME_LIMIT,
                        anyhow::anyhow!("planner hit the time limit"),
                    ))
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::GenDemos {
            problem,
            formula,
            count,
            noise,
            theta,
            out,
            rng_seed,
        } => {
            let p = load_problem(problem)?;
            let f = parse_formula(formula)?;
            let th = theta_from_args(&p, theta, &None)?;
            let cost = p
                .known_cost()
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow::anyhow!(e.to_string())))?;
            let t_max = p.horizon.ok_or_else(|| {
                CliError::new(EXIT_PARSE, anyhow::anyhow!("the problem needs a horizon"))
            })?;
            std::fs::create_dir_all(out)?;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*rng_seed);
            for k in 0..*count {
                let demo = planner::generate_demo(
                    &p,
                    &f,
                    &th,
                    &cost,
                    t_max,
                    &p.start,
                    p.goal.as_deref(),
                    *noise,
                    &mut rng,
                    &cfg,
                )?;
                let file = DemoFile::from_demo(&demo);
                let path = out.join(format!("demo_{k}.json"));
                std::fs::write(&path, serde_json::to_string_pretty(&file)?)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn ap_position(problem: &Problem, index: usize) -> Result<usize, CliError> {
    problem
        .aps
        .iter()
        .position(|a| a.index == index)
        .ok_or_else(|| CliError::new(EXIT_PARSE, anyhow::anyhow!("AP {index} is not declared")))
}

fn parse_bounds(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    text.split(',')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(':').collect();
            if parts.len() != 2 {
                return Err(CliError::new(
                    EXIT_PARSE,
                    anyhow::anyhow!("bounds must look like lo:hi,lo:hi"),
                ));
            }
            let lo = parts[0].trim().parse::<f64>();
            let hi = parts[1].trim().parse::<f64>();
            match (lo, hi) {
                (Ok(lo), Ok(hi)) if lo <= hi => Ok((lo, hi)),
                _ => Err(CliError::new(
                    EXIT_PARSE,
                    anyhow::anyhow!("bad bounds '{axis}'"),
                )),
            }
        })
        .collect()
}

fn run_learn(
    common: &LearnCommon,
    cfg: &Config,
    unknown_cost: bool,
) -> Result<falsify::LearnedModel, CliError> {
    let p = load_problem(&common.problem)?;
    let ds = load_demos(&p, &common.demos)?;
    let ops = parse_ops(&common.ops)?;
    let grammar = Grammar::with_ops(p.n_aps(), &ops, !common.no_negated_leaves);
    let mut opts = FalsifyOptions::new(grammar);
    if let Some(mu) = common.mu {
        opts.spec_opt = Some(SpecOptConfig {
            mu,
            demos: common.spec_opt_demos.unwrap_or(usize::MAX),
            salient: !common.no_salient,
        });
    }
    opts.order = match common.order.as_str() {
        "strongest" => WeightOrder::Strongest,
        "weakest" => WeightOrder::Weakest,
        _ => WeightOrder::None,
    };
    opts.block_structures = common.block_structures;
    let mut cfg = cfg.clone();
    if let Some(n) = common.ndag_max {
        cfg.n_dag_max = n;
    }
    let run = if unknown_cost {
        falsify::falsify_unknown_cost(&p, &ds, &opts, &cfg)
    } else {
        falsify::falsify(&p, &ds, &opts, &cfg)
    };
    run.map_err(classify_falsify)
}

fn write_plot(grid: &queries::RegionGrid, path: &Path) -> Result<(), CliError> {
    if grid.shape.len() != 2 {
        return Err(CliError::new(
            EXIT_PARSE,
            anyhow::anyhow!("plots need a 2D grid"),
        ));
    }
    let (nx, ny) = (grid.shape[0], grid.shape[1]);
    let scale = 16usize;
    let mut img = image::RgbImage::new((nx * scale) as u32, (ny * scale) as u32);
    for (k, cell) in grid.cells.iter().enumerate() {
        let iy = k % ny;
        let ix = k / ny;
        let color = match cell.verdict {
            Verdict::GuaranteedIn => image::Rgb([46u8, 139, 87]),
            Verdict::GuaranteedOut => image::Rgb([178u8, 34, 34]),
            Verdict::Unknown => image::Rgb([190u8, 190, 190]),
        };
        for px in 0..scale {
            for py in 0..scale {
                // Flip y so larger coordinates draw upward.
                let x = (ix * scale + px) as u32;
                let y = ((ny - 1 - iy) * scale + py) as u32;
                img.put_pixel(x, y, color);
            }
        }
    }
    img.save(path)
        .map_err(|e| CliError::new(1, anyhow::anyhow!(e.to_string())))?;
    Ok(())
}
