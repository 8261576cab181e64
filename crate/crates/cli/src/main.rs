use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use torusboot::analysis::{
    estimate_diameter, exact_diameter, exact_long_degree_distribution_auto, long_degree_histogram,
    poisson_pmf, tv_distance, ALL_PAIRS_MAX_SIDE,
};
use torusboot::dynamics::{mf_chain_run, run, ActivationConfig, RunOutcome};
use torusboot::graph::{build_graph, parse, Graph, RngSeed};
use torusboot::meanfield::{find_fixed_points, pc_curve, MeanFieldModel};
use torusboot::torus::TorusParams;
use torusboot_cli::sweep::{run_sweep, CellResult, SweepBackend, SweepSpec, LN2};
use torusboot_cli::{emit, parse_grid, resolve_out_path, CliError, Result};

#[derive(Parser)]
#[command(
    name = "torusboot",
    version,
    about = "Torus-coupled long-range random graphs: generation, statistics, activation dynamics, mean-field phase diagrams",
    after_help = "Relative --out paths are joined onto $TORUSBOOT_OUT_DIR when set.\n\
                  Exit codes: 0 ok, 2 validation error, 3 numeric diagnostic."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DegreeBackend {
    Poisson,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph instance and write its text serialization
    Generate {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// RNG stream id (replica index)
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Long-edge degree histogram plus Poisson-approximation summary
    Stats {
        #[arg(long, required_unless_present = "input")]
        n: Option<u32>,
        #[arg(long, required_unless_present = "input")]
        c: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read an existing graph file instead of sampling
        #[arg(long = "in", value_name = "FILE")]
        input: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Diameter reports: all-pairs BFS for N ≤ 64, double-sweep beyond
    Diameter {
        #[arg(long, required_unless_present = "input")]
        n: Option<u32>,
        #[arg(long, required_unless_present = "input")]
        c: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent graph replicas (streams 0..replicas)
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        /// Double-sweep source count for large N
        #[arg(long, default_value_t = 10)]
        sources: u32,
        #[arg(long = "in", value_name = "FILE")]
        input: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the activation process on a sampled graph
    Simulate {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        excitatory_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        /// csv: trajectory "t,rho"; json: outcome record
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the mean-field density chain
    Mfchain {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        p: f64,
        /// Poisson rate; default 4·c·ln2 when --c is given
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum, default_value_t = DegreeBackend::Poisson)]
        degree_backend: DegreeBackend,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// p_c(λ) curve over a grid, or a fixed-point report at a single λ
    Meanfield {
        #[arg(long)]
        k: u32,
        /// Grid spec: "a,b,c", "lin:LO:HI:N", or "log:LO:HI:N"
        #[arg(long, required_unless_present = "lambda")]
        lambda_grid: Option<String>,
        /// Single λ: emit the fixed-point report instead of a curve
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Phase-diagram sweep over λ × p cells
    Sweep {
        #[arg(long, value_enum)]
        backend: SweepBackendArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, required_unless_present_any = ["lambda", "c"])]
        lambda_grid: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Alternative to --lambda: λ = 4·c·ln2
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        p_grid: String,
        #[arg(long, default_value_t = 20)]
        replicas: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepBackendArg {
    Graph,
    Mfchain,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn load_or_sample(
    input: Option<&str>,
    n: Option<u32>,
    c: Option<f64>,
    seed: u64,
    stream: u64,
) -> Result<Graph> {
    match input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(parse(&text).map_err(torusboot::Error::from)?)
        }
        None => {
            let params = TorusParams::new(
                n.ok_or_else(|| CliError::Validation("--n is required".into()))?,
                c.ok_or_else(|| CliError::Validation("--c is required".into()))?,
            )?;
            Ok(build_graph(&params, RngSeed::with_stream(seed, stream)))
        }
    }
}

fn outcome_json(config: serde_json::Value, outcome: &RunOutcome) -> String {
    let record = json!({
        "config": config,
        "status": outcome.status,
        "steps": outcome.steps_taken,
        "cycle_length": outcome.cycle_length,
    });
    format!("{}\n", serde_json::to_string_pretty(&record).unwrap())
}

fn trajectory_csv(config: &serde_json::Value, outcome: &RunOutcome) -> String {
    let mut out = format!("# {config}\nt,rho\n");
    for (t, rho) in outcome.trajectory.iter().enumerate() {
        out.push_str(&format!("{t},{rho}\n"));
    }
    out
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate {
            n,
            c,
            seed,
            stream,
            out,
        } => {
            let params = TorusParams::new(n, c)?;
            let graph = build_graph(&params, RngSeed::with_stream(seed, stream));
            emit(out.as_deref(), &graph.serialize())
        }

        Command::Stats {
            n,
            c,
            seed,
            input,
            format,
            out,
        } => {
            let graph = load_or_sample(input.as_deref(), n, c, seed, 0)?;
            let hist = long_degree_histogram(&graph);
            let params = *graph.params();
            let exact = exact_long_degree_distribution_auto(&params);
            let lambda = params.lambda();
            let tv_exact = tv_distance(&hist, &exact);
            let tv_poisson = if lambda > 0.0 {
                Some(tv_distance(&hist, &poisson_pmf(lambda, 80)?))
            } else {
                None
            };
            let config = json!({
                "command": "stats",
                "n": params.n(), "c": params.c(), "seed": graph.seed(),
                "lambda": lambda,
            });
            let summary = json!({
                "mean": hist.mean(),
                "lambda": lambda,
                "tv_vs_exact": tv_exact,
                "tv_vs_poisson": tv_poisson,
            });
            match format {
                Format::Csv => {
                    let body = format!("# {config}\n# summary: {summary}\n{}", hist.to_csv());
                    emit(out.as_deref(), &body)
                }
                Format::Json => {
                    let rows: Vec<_> = hist
                        .pmf()
                        .iter()
                        .enumerate()
                        .map(|(degree, p)| json!({"degree": degree, "probability": p}))
                        .collect();
                    let record = json!({"config": config, "histogram": rows, "summary": summary});
                    emit(
                        out.as_deref(),
                        &format!("{}\n", serde_json::to_string_pretty(&record).unwrap()),
                    )
                }
            }
        }

        Command::Diameter {
            n,
            c,
            seed,
            replicas,
            sources,
            input,
            format,
            out,
        } => {
            if replicas == 0 {
                return Err(CliError::Validation("replicas must be ≥ 1".into()));
            }
            let mut reports = Vec::new();
            for r in 0..replicas {
                let graph = load_or_sample(input.as_deref(), n, c, seed, r)?;
                let report = if graph.n() <= ALL_PAIRS_MAX_SIDE {
                    exact_diameter(&graph)?
                } else {
                    estimate_diameter(&graph, sources, RngSeed::with_stream(seed ^ 0xd1a, r))?
                };
                reports.push(json!({
                    "N": graph.n(),
                    "c": graph.params().c(),
                    "seed": graph.seed(),
                    "stream": r,
                    "method": report.method,
                    "value": report.value,
                    "sources_used": report.sources_used,
                }));
                if input.is_some() {
                    break; // a fixed input file has no replicas
                }
            }
            let config = json!({
                "command": "diameter", "seed": seed, "replicas": replicas,
                "sources": sources,
            });
            match format {
                Format::Json => {
                    let record = json!({"config": config, "reports": reports});
                    emit(
                        out.as_deref(),
                        &format!("{}\n", serde_json::to_string_pretty(&record).unwrap()),
                    )
                }
                Format::Csv => {
                    let mut body =
                        format!("# {config}\nN,c,seed,stream,method,value,sources_used\n");
                    for r in &reports {
                        body.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            r["N"],
                            r["c"],
                            r["seed"],
                            r["stream"],
                            r["method"].as_str().unwrap_or(""),
                            r["value"],
                            r["sources_used"],
                        ));
                    }
                    emit(out.as_deref(), &body)
                }
            }
        }

        Command::Simulate {
            n,
            c,
            k,
            p,
            excitatory_fraction,
            seed,
            max_steps,
            format,
            out,
        } => {
            let params = TorusParams::new(n, c)?;
            let graph = build_graph(&params, RngSeed::with_stream(seed, 0));
            let cfg = ActivationConfig::new(k, p)
                .with_excitatory_fraction(excitatory_fraction)
                .with_max_steps(max_steps);
            let outcome = run(&graph, &cfg, RngSeed::with_stream(seed, 1))?;
            let config = json!({
                "command": "simulate", "n": n, "c": c, "k": k, "p": p,
                "excitatory_fraction": excitatory_fraction,
                "max_steps": max_steps, "seed": seed,
            });
            match format {
                Format::Csv => emit(out.as_deref(), &trajectory_csv(&config, &outcome)),
                Format::Json => emit(out.as_deref(), &outcome_json(config, &outcome)),
            }
        }

        Command::Mfchain {
            n,
            k,
            p,
            lambda,
            c,
            degree_backend,
            seed,
            max_steps,
            format,
            out,
        } => {
            let model = match degree_backend {
                DegreeBackend::Poisson => {
                    let lambda = match (lambda, c) {
                        (Some(l), _) => l,
                        (None, Some(c)) => 4.0 * c * LN2,
                        (None, None) => {
                            return Err(CliError::Validation(
                                "--lambda or --c is required for the Poisson backend".into(),
                            ))
                        }
                    };
                    MeanFieldModel::poisson(k, lambda)?
                }
                DegreeBackend::Exact => {
                    let c = c.ok_or_else(|| {
                        CliError::Validation("--c is required for the exact backend".into())
                    })?;
                    MeanFieldModel::exact(k, &TorusParams::new(n, c)?)?
                }
            };
            let cfg = ActivationConfig::new(k, p).with_max_steps(max_steps);
            let outcome = mf_chain_run(n, &cfg, &model, RngSeed::with_stream(seed, 0))?;
            let config = json!({
                "command": "mfchain", "n": n, "k": k, "p": p,
                "lambda": model.lambda(), "degree_backend": model.backend(),
                "max_steps": max_steps, "seed": seed,
            });
            match format {
                Format::Csv => emit(out.as_deref(), &trajectory_csv(&config, &outcome)),
                Format::Json => emit(out.as_deref(), &outcome_json(config, &outcome)),
            }
        }

        Command::Meanfield {
            k,
            lambda_grid,
            lambda,
            format,
            out,
        } => {
            if let Some(lambda) = lambda {
                let points = find_fixed_points(lambda, k)?;
                match format {
                    Format::Json => {
                        let record = json!({"lambda": lambda, "k": k, "points": points});
                        emit(
                            out.as_deref(),
                            &format!("{}\n", serde_json::to_string_pretty(&record).unwrap()),
                        )
                    }
                    Format::Csv => {
                        let mut body = String::from("lambda,k,x,stability,derivative\n");
                        for fp in &points {
                            body.push_str(&format!(
                                "{lambda},{k},{},{},{}\n",
                                fp.x,
                                serde_json::to_value(fp.stability)
                                    .unwrap()
                                    .as_str()
                                    .unwrap(),
                                fp.derivative
                            ));
                        }
                        emit(out.as_deref(), &body)
                    }
                }
            } else {
                let grid = parse_grid(lambda_grid.as_deref().unwrap())?;
                let curve = pc_curve(&grid, k)?;
                let config = json!({"command": "meanfield", "k": k, "lambda_grid": lambda_grid});
                match format {
                    Format::Csv => {
                        let mut body = format!("# {config}\nlambda,p_c,k\n");
                        for &(lam, pc) in &curve {
                            body.push_str(&format!("{lam},{pc},{k}\n"));
                        }
                        emit(out.as_deref(), &body)
                    }
                    Format::Json => {
                        let rows: Vec<_> = curve
                            .iter()
                            .map(|&(lam, pc)| json!({"lambda": lam, "p_c": pc, "k": k}))
                            .collect();
                        let record = json!({"config": config, "rows": rows});
                        emit(
                            out.as_deref(),
                            &format!("{}\n", serde_json::to_string_pretty(&record).unwrap()),
                        )
                    }
                }
            }
        }

        Command::Sweep {
            backend,
            k,
            n,
            lambda_grid,
            lambda,
            c,
            p_grid,
            replicas,
            seed,
            max_steps,
            format,
            out,
        } => {
            let lambdas = match (lambda_grid.as_deref(), lambda, c) {
                (Some(spec), _, _) => parse_grid(spec)?,
                (None, Some(l), _) => vec![l],
                (None, None, Some(c)) => vec![4.0 * c * LN2],
                (None, None, None) => {
                    return Err(CliError::Validation(
                        "--lambda-grid, --lambda, or --c is required".into(),
                    ))
                }
            };
            for &l in &lambdas {
                if l < 0.0 || !l.is_finite() {
                    return Err(CliError::Validation(format!(
                        "lambda grid entries must be ≥ 0 (got {l})"
                    )));
                }
            }
            let ps = parse_grid(&p_grid)?;
            let spec = SweepSpec {
                backend: match backend {
                    SweepBackendArg::Graph => SweepBackend::Graph,
                    SweepBackendArg::Mfchain => SweepBackend::Mfchain,
                },
                k,
                n,
                replicas,
                max_steps,
                seed,
            };
            let out_path = resolve_out_path(out.as_deref());
            let cells = run_sweep(&spec, &lambdas, &ps, out_path.as_deref())?;
            let config = json!({
                "command": "sweep", "backend": spec.backend, "k": k, "n": n,
                "lambda_grid": lambdas, "p_grid": ps, "replicas": replicas,
                "max_steps": max_steps, "seed": seed,
            });
            let body = match format {
                Format::Csv => {
                    let mut body = format!("# {config}\n{}\n", CellResult::csv_header());
                    for cell in &cells {
                        body.push_str(&cell.csv_row());
                        body.push('\n');
                    }
                    body
                }
                Format::Json => {
                    let record = json!({"config": config, "rows": cells});
                    format!("{}\n", serde_json::to_string_pretty(&record).unwrap())
                }
            };
            emit(out.as_deref(), &body)?;
            if let Some(path) = &out_path {
                torusboot_cli::sweep::clear_checkpoint(path);
            }
            Ok(())
        }
    }
}
