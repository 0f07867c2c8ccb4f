use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use darts_core::eval::{non_strategic_baseline, write_gain_csv, Combo, StrategyTables};
use darts_core::rules::ZsgState;
use darts_core::skill::{fit_skill_model, AimDataset, EmConfig, Quadrature};
use darts_core::store::{self, Cache};
use darts_core::zsg::heatmap;
use darts_core::{solve_ns, BoardGeometry, Exec, HitTable, Player, SkillModel, SolveConfig, ZsgSolution};

const DEFAULT_SEED: u64 = 20190501;

#[derive(Parser)]
#[command(name = "darts", version, about = "Solve, evaluate and serve 501 darts strategies")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Board geometry JSON; defaults to the standard board.
    #[arg(long, global = true)]
    board: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a skill model to aim/outcome counts by EM.
    Fit {
        /// CSV with header `target_region,outcome,count`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5000)]
        m_samples: usize,
        /// Model name; defaults to the data file stem.
        #[arg(long)]
        name: Option<String>,
        /// Fit one covariance for all targets instead of the six standard
        /// region groups.
        #[arg(long)]
        single: bool,
    },
    /// Write the synthetic pro-level skill model.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Multiplies every standard deviation.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value = "pro")]
        name: String,
    },
    /// Integrate a skill model over the action grid.
    Hits {
        #[arg(long, required_unless_present = "perfect")]
        skill: Option<PathBuf>,
        /// A zero-error thrower instead of a skill model.
        #[arg(long, conflicts_with = "skill")]
        perfect: bool,
        /// Grid cell size in millimetres.
        #[arg(long, default_value_t = 1.0)]
        cell: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for optimal policies.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Evaluate strategy combinations from an equilibrium solution.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Gain of every aim over the non-strategic baseline at one state.
    Heatmap {
        #[command(flatten)]
        pair: PairArgs,
        /// `sA,sB,i,u` with `i` darts left and `u` points scored this turn.
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "A")]
        player: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the advisor API over the artifacts in a directory.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        solutions: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    hits: PathBuf,
    #[arg(long, default_value_t = 501)]
    start: u32,
    /// Expected cell size of the hit table, checked if given.
    #[arg(long)]
    cell: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the CSV export.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Single-player policy minimising expected turns.
    Ns {
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Equilibrium of the two-player leg.
    Zsg {
        #[command(flatten)]
        args: SolveArgs,
        #[arg(long)]
        opp_hits: PathBuf,
    },
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    hits: PathBuf,
    #[arg(long)]
    opp_hits: PathBuf,
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Leg win probabilities for strategy combinations.
    Legs {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_delimiter = ',', default_value = "EE,NN,NE,EN,NB,BN")]
        combos: Vec<Combo>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match-level gain of equilibrium over non-strategic play.
    Gain {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,21,31,35")]
        legs: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_hits(path: &Path) -> Result<HitTable> {
    store::load_hits(path).with_context(|| format!("loading {}", path.display()))
}

fn solve_config(args: &SolveArgs, hits: &HitTable) -> Result<SolveConfig> {
    if let Some(cell) = args.cell {
        if cell != hits.grid().cell_size() {
            bail!("hit table has cell size {} mm, not {cell}", hits.grid().cell_size());
        }
    }
    let cfg = SolveConfig { start_score: args.start, rel_tol: args.tol, ..SolveConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

/// Solution plus both hit tables, checked against each other.
fn load_pair(pair: &PairArgs) -> Result<(ZsgSolution, HitTable, HitTable)> {
    let sol = store::load_zsg(&pair.solution).with_context(|| format!("loading {}", pair.solution.display()))?;
    let (a, b) = (load_hits(&pair.hits)?, load_hits(&pair.opp_hits)?);
    if a.content_hash() != sol.hits_a_hash || b.content_hash() != sol.hits_b_hash {
        bail!("hit tables do not match the ones the solution was computed from");
    }
    Ok((sol, a, b))
}

fn parse_state(s: &str) -> Result<ZsgState> {
    let v: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("state '{s}' is not four integers"))?;
    let [s_a, s_b, i, u] = v[..] else { bail!("state '{s}' must be sA,sB,i,u") };
    Ok(ZsgState { s_a, s_b, i: u8::try_from(i)?, u })
}

fn run(cli: Cli) -> Result<()> {
    eprintln!("seed: {}", cli.seed);
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        darts_core::par::set_threads(t);
    }
    let geom = match &cli.board {
        Some(p) => BoardGeometry::from_json(&fs::read_to_string(p)?)?,
        None => BoardGeometry::default(),
    };
    let cache = Cache::from_env();
    match cli.cmd {
        Cmd::Fit { data, out, m_samples, name, single } => {
            let ds = AimDataset::from_path(&data).with_context(|| format!("reading {}", data.display()))?;
            let name =
                name.unwrap_or_else(|| data.file_stem().map_or("fitted".into(), |s| s.to_string_lossy().into_owned()));
            let sigma0 = EmConfig::default().sigma0;
            let template =
                if single { SkillModel::uniform(name, sigma0) } else { SkillModel::standard(name, [sigma0; 6]) };
            let cfg = EmConfig { m_samples, seed: cli.seed, ..EmConfig::default() };
            let model = fit_skill_model(&geom, &ds, &template, &cfg)?;
            store::save_skill(&out, &model)?;
            for (k, p) in model.parts.iter().enumerate() {
                println!("part {k}: sigma = {:?}", p.sigma.matrix());
            }
        }
        Cmd::Synth { out, scale, name } => {
            store::save_skill(&out, &SkillModel::synthetic_pro(name, scale))?;
        }
        Cmd::Hits { skill, perfect, cell, out } => {
            let grid = geom.make_grid(cell)?;
            let hits = if perfect {
                HitTable::perfect(&geom, &grid)
            } else {
                let path = skill.expect("required by clap");
                let skill = store::load_skill(&path).with_context(|| format!("loading {}", path.display()))?;
                let q = Quadrature::default();
                match &cache {
                    Some(c) => c.hits(&geom, &skill, &grid, q, Default::default())?,
                    None => HitTable::build(&geom, &skill, &grid, q, Default::default()),
                }
            };
            store::save_hits(&out, &hits)?;
            println!("targets: {}", hits.len());
        }
        Cmd::Solve(SolveCmd::Ns { args }) => {
            let hits = load_hits(&args.hits)?;
            let cfg = solve_config(&args, &hits)?;
            let sol = match &cache {
                Some(c) => c.ns(&hits, &cfg)?,
                None => solve_ns(&hits, &cfg)?,
            };
            store::save_ns(&args.out, &sol)?;
            if let Some(p) = &args.csv {
                sol.write_csv(&hits, &geom, create(p)?)?;
            }
            println!("V({}) = {} turns", cfg.start_score, sol.turns(cfg.start_score));
        }
        Cmd::Solve(SolveCmd::Zsg { args, opp_hits }) => {
            let hits_a = load_hits(&args.hits)?;
            let hits_b = load_hits(&opp_hits)?;
            let cfg = solve_config(&args, &hits_a)?;
            let sol = match &cache {
                Some(c) => c.zsg(&hits_a, &hits_b, &cfg)?,
                None => darts_core::solve_equilibrium(&hits_a, &hits_b, &cfg)?,
            };
            store::save_zsg(&args.out, &sol)?;
            if let Some(p) = &args.csv {
                sol.write_surface_csv(&hits_a, &geom, create(p)?)?;
            }
            let s = cfg.start_score;
            println!("J*({s},{s}) = {}", sol.values.a_wins(Player::A, s, s));
            println!("alternations: {:?}", sol.alternation_histogram());
        }
        Cmd::Eval(EvalCmd::Legs { pair, combos, out }) => {
            let (sol, a, b) = load_pair(&pair)?;
            let t = StrategyTables::compute(&sol, &a, &b, &combos, &SolveConfig::default())?;
            t.write_matrix_csv(create(&out)?)?;
        }
        Cmd::Eval(EvalCmd::Gain { pair, legs, out }) => {
            let (sol, a, b) = load_pair(&pair)?;
            let t = StrategyTables::compute(&sol, &a, &b, &[Combo::EE, Combo::NE], &SolveConfig::default())?;
            write_gain_csv(&t.gain_rows(&legs)?, create(&out)?)?;
        }
        Cmd::Heatmap { pair, state, player, out } => {
            let (sol, a, b) = load_pair(&pair)?;
            let st = parse_state(&state)?;
            let (p, hits) = match player.to_ascii_uppercase().as_str() {
                "A" => (Player::A, &a),
                "B" => (Player::B, &b),
                _ => bail!("--player must be A or B"),
            };
            let base = non_strategic_baseline(&sol, &a, &b, p, Exec::default())?;
            let h = heatmap(&sol, hits, p, st, &base)?;
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(["x", "y", "label", "q", "delta"])?;
            for ((t, q), d) in h.targets.iter().zip(&h.q).zip(&h.delta) {
                w.write_record([
                    t.x.to_string(),
                    t.y.to_string(),
                    geom.classify_target(*t).to_string(),
                    format!("{q:.17e}"),
                    format!("{d:.17e}"),
                ])?;
            }
            w.flush()?;
            let best = h.targets[h.argmax()];
            println!("max delta = {:e} at ({}, {}) {}", h.max_delta(), best.x, best.y, geom.classify_target(best));
        }
        Cmd::Serve { port, host, solutions } => {
            let catalog = darts_service::Catalog::load_dir(&solutions)
                .with_context(|| format!("loading {}", solutions.display()))?;
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(darts_service::serve(catalog, addr))?;
        }
    }
    if let Some(c) = &cache {
        log::info!("cache {}: {} artifacts computed", c.dir().display(), c.computations());
    }
    let _ = std::io::stdout().flush();
    Ok(())
}
