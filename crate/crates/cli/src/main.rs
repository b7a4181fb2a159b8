use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use gambler_cli::config::Config;
use gambler_cli::{experiments, output, validate};
use gambler_core::models::{self, GwOffspring};
use gambler_core::rng::{label_seed, stream};
use gambler_core::solver::{refine_and_estimate_error, solvent_probability, Grid, Problem};
use gambler_core::{oracle, MeetingModel};

#[derive(Parser)]
#[command(name = "cg", version, about = "Compulsive-gambler process toolkit")]
struct Cli {
    /// Master RNG seed; every replicate derives its own stream from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 or absent = all cores); never changes results
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (for file-producing commands)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file (flat key-value with [section] headers)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a registered experiment and write JSON/CSV results
    Simulate {
        /// Experiment name (overrides [experiment] name in the config)
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Solve a tree recursion and write the phi table plus an error estimate
    Solve {
        /// dary | regular | gw-poisson | gw-pmf | tree-file
        #[arg(long)]
        family: Option<String>,
    },
    /// Evaluate a closed-form oracle quantity and print it as JSON
    Oracle {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Run the acceptance suite; exit 0 iff every gated criterion passes
    Validate {
        /// fast | full
        #[arg(long, default_value = "fast")]
        suite: validate::Suite,
        /// Wall-time budget in seconds; later criteria are skipped past it
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Meeting-model utilities
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Generate a model and write its text form
    Gen {
        /// complete | path | er | ring | torus | dary-tree | regular-tree |
        /// gw-tree | random-regular
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Output file (defaults to stdout)
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

/// Exit codes: 0 success, 1 validation failure, 2 invalid configuration or
/// arguments, 3 invariant violation during runs.
fn run(cli: Cli) -> i32 {
    if let Some(threads) = cli.threads {
        if threads > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if format!("{e:#}").contains("invariant violation") {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.set("run", "seed", seed.to_string());
    }
    if let Some(threads) = cli.threads {
        config.set("run", "threads", threads.to_string());
    }
    if let Some(out) = &cli.out {
        config.set("output", "dir", out.display().to_string());
    }

    match &cli.cmd {
        Cmd::Simulate { experiment } => cmd_simulate(&mut config, experiment.as_deref()),
        Cmd::Solve { family } => cmd_solve(&mut config, family.as_deref()),
        Cmd::Oracle {
            name,
            n,
            r,
            d,
            m,
            c,
            z,
            t,
            delta,
            rate,
        } => cmd_oracle(
            name,
            *n,
            *r,
            *d,
            *m,
            *c,
            *z,
            *t,
            *delta,
            *rate,
            cli.out.as_deref(),
        ),
        Cmd::Validate { suite, budget } => cmd_validate(&config, *suite, *budget),
        Cmd::Model {
            cmd:
                ModelCmd::Gen {
                    family,
                    n,
                    rate,
                    c,
                    r,
                    k,
                    d,
                    depth,
                    m,
                    dim,
                    alpha,
                    file,
                },
        } => cmd_model_gen(
            family,
            *n,
            *rate,
            *c,
            *r,
            *k,
            *d,
            *depth,
            *m,
            *dim,
            *alpha,
            file.as_deref(),
            config.u64_or("run", "seed", 0)?,
        ),
    }
}

fn out_dir(config: &Config) -> Result<PathBuf> {
    let dir = PathBuf::from(config.get_or("output", "dir", "out"));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output dir {}", dir.display()))?;
    Ok(dir)
}

fn cmd_simulate(config: &mut Config, experiment: Option<&str>) -> Result<i32> {
    let name = match experiment {
        Some(n) => n.to_string(),
        None => config
            .get("experiment", "name")
            .ok_or_else(|| anyhow!("no experiment named: pass --experiment or [experiment] name"))?
            .to_string(),
    };
    experiments::require_registered(&name)?;
    config.set("experiment", "name", name.clone());
    let seed = config.u64_or("run", "seed", 0)?;
    let dir = out_dir(config)?;

    let results = match name.as_str() {
        "kingman" => {
            let n = config.usize_or("model", "n", 200)?;
            let reps = config.usize_or("run", "replicates", 2_000)?;
            serde_json::to_value(experiments::kingman(n, reps, seed)?)?
        }
        "winner-uniformity" => {
            let n = config.usize_or("model", "n", 6)?;
            let reps = config.usize_or("run", "replicates", 60_000)?;
            serde_json::to_value(experiments::winner_uniformity(n, reps, 50_000, seed)?)?
        }
        "pair-moment" => {
            let n = config.usize_or("model", "n", 50)?;
            let reps = config.usize_or("run", "replicates", 20_000)?;
            let times = config.times_or(&[0.25, 0.5, 1.0])?;
            let s = experiments::pair_moment(n, &times, reps, seed)?;
            let rows: Vec<Vec<String>> = s
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.t.to_string(),
                        r.estimate.mean.to_string(),
                        r.estimate.std_error.to_string(),
                        r.exact.to_string(),
                    ]
                })
                .collect();
            output::write_csv(
                &dir.join("pair-moment.csv"),
                &["t", "mean", "std_error", "exact"],
                &rows,
            )?;
            serde_json::to_value(s)?
        }
        "construction-equivalence" => {
            let reps = config.usize_or("run", "replicates", 100_000)?;
            let t = config.times_or(&[0.5])?[0];
            serde_json::to_value(experiments::construction_equivalence(reps, t, seed)?)?
        }
        "exchangeability" => {
            let reps = config.usize_or("run", "replicates", 100_000)?;
            let t = config.times_or(&[0.4])?[0];
            serde_json::to_value(experiments::exchangeability(reps, t, seed)?)?
        }
        "er-density" => {
            let n = config.usize_or("model", "n", 20_000)?;
            let c = config.f64_or("model", "c", 1.0)?;
            let reps = config.usize_or("run", "replicates", 20)?;
            serde_json::to_value(experiments::er_density(n, c, reps, seed)?)?
        }
        "rtree-density" => {
            let n = config.usize_or("model", "n", 10_000)?;
            let r = config.usize_or("model", "r", 10)?;
            let reps = config.usize_or("run", "replicates", 20)?;
            let m_z = config.usize_or("solver", "m_z", 201)?;
            let t_step = config.f64_or("solver", "t_step", 0.005)?;
            serde_json::to_value(experiments::rtree_density(n, r, reps, m_z, t_step, seed)?)?
        }
        "near-clique-bounds" => {
            let r = config.usize_or("model", "r", 6)?;
            let k = config.usize_or("model", "k", 50)?;
            let reps = config.usize_or("run", "replicates", 2_000)?;
            serde_json::to_value(experiments::near_clique_bounds(r, k, reps, seed)?)?
        }
        "pgw-geometric" => {
            let c = config.f64_or("model", "c", 1.0)?;
            let depth = config.usize_or("model", "depth", 12)?;
            let reps = config.usize_or("run", "replicates", 50_000)?;
            serde_json::to_value(experiments::pgw_geometric(c, depth, reps, seed)?)?
        }
        "torus-exponent" => {
            let m = config.usize_or("model", "m", 512)?;
            let dim = config.usize_or("model", "dim", 1)?;
            let alpha = config.f64_or("model", "alpha", 1.5)?;
            let default_times: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
            let times = config.times_or(&default_times)?;
            let reps = config.usize_or("run", "replicates", 300)?;
            let s = experiments::torus_exponent(m, dim, alpha, &times, reps, seed)?;
            let rows: Vec<Vec<String>> = s
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.t.to_string(),
                        r.estimate.mean.to_string(),
                        r.estimate.std_error.to_string(),
                    ]
                })
                .collect();
            output::write_csv(
                &dir.join("torus-exponent.csv"),
                &["t", "mean_density", "std_error"],
                &rows,
            )?;
            serde_json::to_value(s)?
        }
        other => bail!("unknown experiment `{other}`"),
    };

    let path = dir.join(format!("{name}.json"));
    output::write_json(&path, &output::summary(config, results))?;
    println!("{}", path.display());
    Ok(0)
}

fn cmd_solve(config: &mut Config, family: Option<&str>) -> Result<i32> {
    let family = match family {
        Some(f) => f.to_string(),
        None => config
            .get("model", "family")
            .ok_or_else(|| anyhow!("no family: pass --family or [model] family"))?
            .to_string(),
    };
    config.set("model", "family", family.clone());
    let m_z = config.usize_or("solver", "m_z", 201)?;
    let t_step = config.f64_or("solver", "t_step", 0.005)?;
    let t_max = config.f64_or("solver", "t_max", 1.0)?;
    let grid = Grid::new(m_z, t_step, t_max).map_err(|e| anyhow!("{e}"))?;
    let dir = out_dir(config)?;

    let offspring;
    let tree;
    let problem = match family.as_str() {
        "dary" => Problem::Dary(config.usize_or("model", "d", 2)?),
        "regular" => Problem::Regular(config.usize_or("model", "r", 3)?),
        "gw-poisson" => {
            offspring = GwOffspring::poisson(config.f64_or("model", "c", 1.0)?)?;
            Problem::Gw(&offspring)
        }
        "gw-pmf" => {
            let text = config
                .get("model", "weights")
                .ok_or_else(|| anyhow!("gw-pmf needs [model] weights = p0,p1,..."))?;
            let pmf: Vec<f64> = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| anyhow!("pmf entry {s}: {e}"))
                })
                .collect::<Result<_>>()?;
            offspring = GwOffspring::new(pmf)?;
            Problem::Gw(&offspring)
        }
        "tree-file" => {
            let path = config
                .get("model", "path")
                .ok_or_else(|| anyhow!("tree-file needs [model] path = <model file>"))?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            tree = MeetingModel::from_text(&text)?;
            Problem::Tree(&tree, 0)
        }
        other => bail!(
            "unknown family `{other}`; expected dary, regular, gw-poisson, gw-pmf or tree-file"
        ),
    };

    let table = problem.solve(grid)?;
    table.validate()?;
    let (value, error_estimate) = refine_and_estimate_error(&problem, grid)?;

    let z_points = table.grid().z_points();
    let t_points = table.grid().t_points();
    let mut rows = Vec::new();
    for (ti, &t) in t_points.iter().enumerate() {
        for (zi, &z) in z_points.iter().enumerate() {
            rows.push(vec![
                t.to_string(),
                z.to_string(),
                table.phi(zi, ti).to_string(),
                table.psi(zi, ti).to_string(),
            ]);
        }
    }
    output::write_csv(&dir.join("phi-table.csv"), &["t", "z", "phi", "psi"], &rows)?;

    let (phi_origin, _) = solvent_probability(&table, t_max);
    let mut results = json!({
        "family": family,
        "phi_at_origin_tmax": phi_origin,
        "refined_phi_at_origin_tmax": value,
        "error_estimate": error_estimate,
    });
    if let Problem::Regular(r) = problem {
        // companion sandwich report against the (r-1)-ary solution
        let dary = Problem::Dary(r - 1).solve(grid)?;
        let eps = oracle::epsilon_d(r - 1);
        let mut max_upper_breach = 0.0f64;
        let mut max_lower_breach = 0.0f64;
        for ti in 0..t_points.len() {
            for zi in 0..z_points.len() {
                let phi_star = table.phi(zi, ti);
                let phi_d = dary.phi(zi, ti);
                max_upper_breach = max_upper_breach.max(phi_star - phi_d);
                max_lower_breach = max_lower_breach.max((1.0 - eps) * phi_d - phi_star);
            }
        }
        results["sandwich"] = json!({
            "epsilon": eps,
            "max_upper_breach": max_upper_breach,
            "max_lower_breach": max_lower_breach,
        });
    }
    let path = dir.join("solve.json");
    output::write_json(&path, &output::summary(config, results))?;
    println!("{}", path.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    name: &str,
    n: Option<usize>,
    r: Option<usize>,
    d: Option<usize>,
    m: Option<usize>,
    c: Option<f64>,
    z: Option<f64>,
    t: Option<f64>,
    delta: Option<f64>,
    rate: Option<f64>,
    out: Option<&Path>,
) -> Result<i32> {
    fn need<T: Copy>(v: Option<T>, flag: &str, name: &str) -> Result<T> {
        v.ok_or_else(|| anyhow!("oracle `{name}` needs --{flag}"))
    }
    let value = match name {
        "kingman-fixation" => {
            json!({ "expected_fixation_time": oracle::kingman_expected_fixation(need(n, "n", name)?)? })
        }
        "pair-moment" => {
            json!({ "pair_moment": oracle::pair_moment_exact(rate.unwrap_or(1.0), need(t, "t", name)?) })
        }
        "tail-bound" => {
            let (capped, raw) = oracle::kingman_tail_bound(
                need(r, "r", name)?,
                need(delta, "delta", name)?,
                need(t, "t", name)?,
            )?;
            json!({ "bound": capped, "raw": raw })
        }
        "sigma" => json!({ "sigma": oracle::sigma_m(need(m, "m", name)?)? }),
        "kappa" => json!({ "kappa": oracle::kappa_r(need(r, "r", name)?)? }),
        "near-clique-bounds" => {
            let (lower, upper) = oracle::near_clique_density_bounds(need(r, "r", name)?)?;
            json!({ "lower": lower, "upper": upper })
        }
        "epsilon" => json!({ "epsilon": oracle::epsilon_d(need(d, "d", name)?) }),
        "dary-bounds" => {
            let b = oracle::dary_phi_bounds(
                need(d, "d", name)?,
                need(z, "z", name)?,
                need(t, "t", name)?,
            )?;
            json!({ "lower": b.lower, "upper": b.upper, "epsilon": b.epsilon_d })
        }
        "pgw-phi" => {
            json!({ "phi": oracle::pgw_phi(need(c, "c", name)?, need(z, "z", name)?, need(t, "t", name)?)? })
        }
        "pgw-solvent" => {
            json!({ "solvent_probability": oracle::pgw_solvent_prob(need(c, "c", name)?, need(t, "t", name)?)? })
        }
        "er-limit" => json!({ "limit_density": oracle::er_limit_density(need(c, "c", name)?) }),
        other => bail!(
            "unknown oracle `{other}`; known: kingman-fixation, pair-moment, tail-bound, sigma, \
             kappa, near-clique-bounds, epsilon, dary-bounds, pgw-phi, pgw-solvent, er-limit"
        ),
    };
    let wrapped = json!({ "name": name, "value": value, "version": output::VERSION });
    let text = serde_json::to_string_pretty(&wrapped)?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        output::write_json(&dir.join(format!("oracle-{name}.json")), &wrapped)?;
    }
    Ok(0)
}

fn cmd_validate(config: &Config, suite: validate::Suite, budget: Option<u64>) -> Result<i32> {
    let seed = config.u64_or("run", "seed", 0)?;
    let results = validate::run_suite(suite, seed, budget.map(Duration::from_secs));
    for r in &results {
        let status = if r.pass {
            "PASS"
        } else if r.gated {
            "FAIL"
        } else {
            "INFO"
        };
        println!(
            "{status} criterion {:>2} {}: {} ({} ms)",
            r.id, r.name, r.detail, r.elapsed_ms
        );
    }
    if let Some(dir) = config.get("output", "dir") {
        let dir = PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        let report = json!({
            "criteria": results.iter().map(|r| serde_json::to_value(r).unwrap()).collect::<Vec<_>>(),
            "seed": seed,
            "suite": suite,
            "version": output::VERSION,
        });
        output::write_json(&dir.join("validate.json"), &report)?;
    }
    Ok(if validate::all_passed(&results) { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_model_gen(
    family: &str,
    n: Option<usize>,
    rate: Option<f64>,
    c: Option<f64>,
    r: Option<usize>,
    k: Option<usize>,
    d: Option<usize>,
    depth: Option<usize>,
    m: Option<usize>,
    dim: Option<usize>,
    alpha: Option<f64>,
    file: Option<&Path>,
    seed: u64,
) -> Result<i32> {
    fn need<T: Copy>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
        v.ok_or_else(|| anyhow!("family `{family}` needs --{flag}"))
    }
    let mut rng = stream(label_seed(seed, "model-gen"), 0);
    let model = match family {
        "complete" => models::complete_graph(need(n, "n", family)?, rate.unwrap_or(1.0))?,
        "path" => {
            let n = need(n, "n", family)?;
            let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
            models::from_edge_list(n, &edges)?
        }
        "er" => models::erdos_renyi(need(n, "n", family)?, need(c, "c", family)?, &mut rng)?,
        "ring" => models::ring_of_near_cliques(need(r, "r", family)?, need(k, "k", family)?)?,
        "torus" => models::torus_power_law(
            need(m, "m", family)?,
            need(dim, "dim", family)?,
            need(alpha, "alpha", family)?,
        )?,
        "dary-tree" => models::dary_tree(need(d, "d", family)?, need(depth, "depth", family)?)?,
        "regular-tree" => {
            models::regular_tree(need(r, "r", family)?, need(depth, "depth", family)?)?
        }
        "gw-tree" => {
            let offspring = GwOffspring::poisson(need(c, "c", family)?)?;
            models::galton_watson_tree(&offspring, need(depth, "depth", family)?, &mut rng)?
        }
        "random-regular" => {
            models::random_regular_graph(need(n, "n", family)?, need(r, "r", family)?, &mut rng)?
        }
        other => bail!(
            "unknown family `{other}`; known: complete, path, er, ring, torus, dary-tree, \
             regular-tree, gw-tree, random-regular"
        ),
    };
    let text = model.to_text();
    match file {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}
