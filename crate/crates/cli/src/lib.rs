//! Experiment runner behind the `spherevc` binary.
//!
//! Every run is described by an [`ExperimentConfig`]: a subcommand plus a
//! flat map of parameters. Configs are written one `key = value` per line
//! and resolve in three layers: built-in defaults, then a config file, then
//! flags given on the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;
use spherevc::fixtures::fixture;
use spherevc::graph::graph_by_name;
use spherevc::integrals::{
    epsilon_sweep, lambda, lambda_bruteforce_with_budget, write_results_csv, write_sweep_csv, Method, ResultRow,
    SweepOptions,
};
use spherevc::measure::{ball_mass_profile, build_ifs, riesz_energy};
use spherevc::pac::{paired_vc_instances, sample_complexity_curve, write_curve_csv};
use spherevc::search::{find_4cycles, shatter_witness_search, MAX_SEARCH_K};
use spherevc::thresholds::{verify_remarks, write_reports_csv};
use spherevc::{DiscreteMeasure, Error, KernelSpec, PointSet};

#[derive(Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub help: &'static str,
    /// Empty means unset; the command then derives a value or ignores it.
    pub default: &'static str,
}

pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub output: &'static str,
    pub params: &'static [Param],
}

const fn p(key: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { key, help, default }
}

/// Parameters accepted by every subcommand.
pub const COMMON: &[Param] = &[
    p("seed", "0", "master seed for every random stream"),
    p("threads", "0", "worker threads; 0 uses the available parallelism"),
    p("out", "", "output file; standard output when unset"),
];

const SOURCE: [Param; 2] = [
    p("input", "", "point or measure CSV with columns x_1..x_d[,weight]"),
    p("fixture", "", "named fixture used when no input file is given"),
];

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "thresholds",
        about: "Evaluate the dimensional thresholds s_d, the 4-cycle exponent (17d+2-sqrt(25d^2+68d-92))/12, \
                the chain threshold and (d+1)/2, and check the comparison remarks for d = 3..d_max",
        output: "CSV d,s_d,four_cycle,chain,falconer_classical,all_hold,min_slack",
        params: &[p("d_max", "50", "largest dimension in the table")],
    },
    CommandSpec {
        name: "measure",
        about: "Build the product Cantor measure of dimension s in R^d at a given depth and report its \
                empirical Frostman exponent and Riesz energy",
        output: "CSV x_1..x_d,weight of the atoms",
        params: &[
            p("d", "3", "ambient dimension"),
            p("s", "", "target dimension in (0, d]; defaults to d"),
            p("depth", "2", "construction depth"),
            p("energy_s", "", "Riesz exponent in (0, d); defaults to s/2"),
            p("centers", "256", "atoms sampled as ball centers"),
        ],
    },
    CommandSpec {
        name: "lambda",
        about: "Estimate the configuration integral Λ_{G,t,c}^ε μ of a configuration graph over a discrete measure",
        output: "CSV graph,t,epsilon,c,method,value,std_error,samples,seed",
        params: &[
            p("graph", "four_cycle", "four_cycle, G, H, B, chain_m or shatter_k"),
            SOURCE[0],
            SOURCE[1],
            p("d", "3", "ambient dimension of the generated measure"),
            p("s", "", "dimension of the generated measure; defaults to d"),
            p("depth", "2", "depth of the generated measure"),
            p("t", "0.25", "sphere radius"),
            p("epsilon", "0.0625", "kernel width"),
            p("c", "0.025", "non-degeneracy distance"),
            p("method", "factorized", "brute_force, factorized, monte_carlo or sequential_mc"),
            p("samples", "100000", "samples for the sampling methods"),
            p("budget", "100000000", "partial tuples allowed to the brute-force sum"),
        ],
    },
    CommandSpec {
        name: "sweep",
        about: "Evaluate Λ_{G,t,c}^ε over the product Cantor measure of dimension s along decreasing widths ε, \
                discretizing at cylinder scale ε",
        output: "CSV epsilon,depth,atoms,method,value,std_error,samples,seed",
        params: &[
            p("graph", "four_cycle", "four_cycle, G, H, B, chain_m or shatter_k"),
            p("d", "3", "ambient dimension"),
            p("s", "", "measure dimension; defaults to d"),
            p("t", "0.25", "sphere radius"),
            p("eps_list", "0.125,0.0625,0.03125,0.015625", "strictly decreasing kernel widths"),
            p("c", "0.025", "non-degeneracy distance"),
            p("samples", "20000", "samples for the sequential estimator"),
            p("work_limit", "2e8", "predicted work above which sampling replaces the exact sum"),
        ],
    },
    CommandSpec {
        name: "cycles",
        about: "Search a point set for t-distance 4-cycles x ~ y ~ z ~ w ~ x with sides within delta of t",
        output: "JSON list of cycles with coordinates, sides and slacks",
        params: &[
            SOURCE[0],
            SOURCE[1],
            p("t", "", "cycle side; defaults to the fixture's radius"),
            p("delta", "", "side tolerance; defaults to 1e-6 t"),
            p("max_results", "1000", "stop after this many cycles"),
        ],
    },
    CommandSpec {
        name: "shatter",
        about: "Search a point set for k-shattering witnesses of the sphere classifiers h_y(x) = 1[|x - y| = t] \
                and report the resulting VC-dimension lower bound",
        output: "JSON with the bound, per-k search status and the witness",
        params: &[
            SOURCE[0],
            SOURCE[1],
            p("t", "", "sphere radius; defaults to the fixture's radius"),
            p("delta", "1e-6", "tolerance on member distances"),
            p("margin", "2e-6", "separation of non-member distances from t"),
            p("budget", "1000000", "candidate tuples examined per k"),
            p("k", "", "search only this k; all of 3, 2, 1 when unset"),
        ],
    },
    CommandSpec {
        name: "pac",
        about: "Simulate ERM learning of sphere classifiers on the planted 3-shattering instance and report \
                the empirical sample complexity m_H(ε, δ)",
        output: "CSV m,success_fraction,median_risk,trials,seed",
        params: &[
            p("class", "small", "small (VC dimension 2) or large (VC dimension 3)"),
            p("m_list", "1..40", "sample sizes, as a..b or a comma list"),
            p("trials", "500", "trials per sample size"),
            p("epsilon", "0.1", "accuracy"),
            p("delta", "0.1", "confidence"),
        ],
    },
    CommandSpec {
        name: "fixture",
        about: "Write a deterministic fixture point set or measure (planted square, shattering witnesses, \
                Cantor measures)",
        output: "CSV x_1..x_d[,weight]",
        params: &[p("name", "planted-square", "fixture name")],
    },
];

pub fn command(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

impl CommandSpec {
    pub fn all_params(&self) -> impl Iterator<Item = &'static Param> {
        self.params.iter().chain(COMMON)
    }

    fn accepts(&self, key: &str) -> bool {
        self.all_params().any(|p| p.key == key)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults of `subcommand`.
    pub fn defaults(subcommand: &str) -> Result<Self> {
        let spec = command(subcommand).ok_or_else(|| anyhow!("unknown subcommand `{subcommand}`"))?;
        let values = spec
            .all_params()
            .map(|p| (p.key.to_string(), p.default.to_string()))
            .collect();
        Ok(Self {
            subcommand: subcommand.to_string(),
            values,
        })
    }

    /// Overrides `key`, rejecting keys the subcommand does not know.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = command(&self.subcommand).expect("validated subcommand");
        if !spec.accepts(key) {
            bail!("field `{key}`: not a parameter of `{}`", self.subcommand);
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("subcommand = {}\n", self.subcommand);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys missing from
    /// the text keep their defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut sub = None;
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "subcommand" {
                sub = Some(v.to_string());
            } else {
                pairs.push((k.to_string(), v.to_string()));
            }
        }
        let sub = sub.ok_or_else(|| anyhow!("config has no `subcommand` line"))?;
        let mut cfg = Self::defaults(&sub)?;
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| anyhow!("field `{key}`: required"))?;
        v.parse().map_err(|e| anyhow!("field `{key}`: cannot parse `{v}`: {e}"))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, fallback: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(_) => self.get(key),
            None => Ok(fallback),
        }
    }

    pub fn threads(&self) -> Result<usize> {
        self.get("threads")
    }
}

/// Artifact bytes and the one-line summary of a run.
pub struct Outcome {
    pub artifact: Vec<u8>,
    pub summary: String,
}

/// Runs `cfg` inside a pool with the configured thread count.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let threads = cfg.threads()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.subcommand.as_str() {
        "thresholds" => thresholds(cfg),
        "measure" => measure(cfg),
        "lambda" => lambda_cmd(cfg),
        "sweep" => sweep(cfg),
        "cycles" => cycles(cfg),
        "shatter" => shatter(cfg),
        "pac" => pac(cfg),
        "fixture" => fixture_cmd(cfg),
        other => bail!("unknown subcommand `{other}`"),
    }
}

fn field<T>(key: &str, r: spherevc::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("field `{key}`: {e}"))
}

fn thresholds(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d_max: u64 = cfg.get("d_max")?;
    let reports = field("d_max", verify_remarks(d_max))?;
    let mut artifact = Vec::new();
    write_reports_csv(&mut artifact, &reports)?;
    let failing: Vec<u64> = reports.iter().filter(|r| !r.all_hold()).map(|r| r.d).collect();
    let verdict = if failing.is_empty() {
        "all checks hold".to_string()
    } else {
        format!("checks fail at d = {failing:?}")
    };
    Ok(Outcome {
        artifact,
        summary: format!("thresholds: d = 3..{d_max}, {} rows, {verdict}", reports.len()),
    })
}

fn ifs_from(cfg: &ExperimentConfig) -> Result<spherevc::IfsSpec> {
    let d: usize = cfg.get("d")?;
    let s: f64 = cfg.get_or("s", d as f64)?;
    let depth: u32 = cfg.get_or("depth", 0)?;
    field("s", build_ifs(d, s, depth))
}

const ENERGY_ATOMS: usize = 16384;

fn measure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = ifs_from(cfg)?;
    let mu = field("depth", spec.atoms())?;
    let s = spec.dimension();
    let energy_s: f64 = cfg.get_or("energy_s", s / 2.0)?;
    // pairwise energy is quadratic, so it runs on the deepest level with few enough atoms
    let per_level = spec.m.pow(spec.d as u32);
    let mut energy_depth = spec.depth;
    while energy_depth > 0 && per_level.saturating_pow(energy_depth) > ENERGY_ATOMS {
        energy_depth -= 1;
    }
    let coarse = if energy_depth == spec.depth {
        mu.clone()
    } else {
        field("depth", spherevc::IfsSpec { depth: energy_depth, ..spec.clone() }.atoms())?
    };
    let energy = field("energy_s", riesz_energy(&coarse, energy_s))?;
    let centers: usize = cfg.get("centers")?;
    let step = (mu.len() / centers.max(1)).max(1);
    let sample: Vec<usize> = (0..mu.len()).step_by(step).take(centers.max(1)).collect();
    // radii just below the cylinder sides r^j keep ball boundaries off the lattice
    let radii: Vec<f64> = (1..=spec.depth).rev().map(|j| 0.999 * spec.r.powi(j as i32)).collect();
    let slope = if radii.len() >= 2 {
        ball_mass_profile(&mu, &radii, &sample)?.slope
    } else {
        None
    };
    let mut artifact = Vec::new();
    mu.write_csv(&mut artifact)?;
    let slope = slope.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    Ok(Outcome {
        artifact,
        summary: format!(
            "measure: d = {}, s = {s}, r = {}, depth = {}, {} atoms, empirical Frostman slope {slope} (heuristic), \
             Riesz energy at {energy_s} = {energy} (depth {energy_depth})",
            spec.d,
            spec.r,
            spec.depth,
            mu.len()
        ),
    })
}

/// Points and optional weights from `input`, else `fixture`.
fn load_points(cfg: &ExperimentConfig) -> Result<Option<(PointSet, Option<Vec<f64>>, f64)>> {
    if let Some(path) = cfg.raw("input") {
        let file = std::fs::File::open(path).with_context(|| format!("field `input`: opening {path}"))?;
        let (pts, w) = field("input", PointSet::read_csv(file))?;
        return Ok(Some((pts, w, f64::NAN)));
    }
    if let Some(name) = cfg.raw("fixture") {
        let f = field("fixture", fixture(name))?;
        return Ok(Some((f.points, f.weights, f.t)));
    }
    Ok(None)
}

fn load_measure(cfg: &ExperimentConfig) -> Result<DiscreteMeasure> {
    match load_points(cfg)? {
        Some((pts, Some(w), _)) => field("input", DiscreteMeasure::new(pts, w)),
        Some((pts, None, _)) => field("input", DiscreteMeasure::uniform(pts)),
        None => Ok(field("depth", ifs_from(cfg)?.atoms())?),
    }
}

fn lambda_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let name: String = cfg.get("graph")?;
    let g = field("graph", graph_by_name(&name))?;
    let mu = load_measure(cfg)?;
    let (t, eps, c): (f64, f64, f64) = (cfg.get("t")?, cfg.get("epsilon")?, cfg.get("c")?);
    let k = field("epsilon", KernelSpec::new(t, eps, mu.dim()))?;
    let method: Method = field("method", cfg.get::<String>("method")?.parse())?;
    let samples: u64 = cfg.get("samples")?;
    let seed: u64 = cfg.get("seed")?;
    let estimate = if method == Method::BruteForce {
        lambda_bruteforce_with_budget(&g, &mu, &k, c, cfg.get("budget")?)
    } else {
        lambda(&g, &mu, &k, c, method, samples, seed)
    };
    let estimate = estimate.map_err(|e| match e {
        Error::BudgetExceeded { .. } => anyhow!("field `budget`: {e}; no partial value is reported"),
        other => anyhow!(other),
    })?;
    let mut artifact = Vec::new();
    let row = ResultRow {
        graph: name.clone(),
        t,
        epsilon: eps,
        c,
        estimate: estimate.clone(),
    };
    write_results_csv(&mut artifact, &[row])?;
    let err = if method.is_exact() {
        String::new()
    } else {
        format!(" ± {}", estimate.std_error)
    };
    Ok(Outcome {
        artifact,
        summary: format!(
            "lambda: {name} on {} atoms, t = {t}, epsilon = {eps}, c = {c}, {method} = {}{err}",
            mu.len(),
            estimate.value
        ),
    })
}

fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse().map_err(|e| anyhow!("field `{key}`: cannot parse `{s}`: {e}")))
        .collect()
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let name: String = cfg.get("graph")?;
    let g = field("graph", graph_by_name(&name))?;
    let family = ifs_from(cfg)?;
    let eps_list: Vec<f64> = parse_list("eps_list", &cfg.get::<String>("eps_list")?)?;
    let largest = eps_list.first().copied().unwrap_or(f64::NAN);
    let k = field("t", KernelSpec::new(cfg.get("t")?, largest, family.d))?;
    let opts = SweepOptions {
        samples: cfg.get("samples")?,
        seed: cfg.get("seed")?,
        exact_work_limit: cfg.get("work_limit")?,
    };
    let c: f64 = cfg.get("c")?;
    let rows = field("eps_list", epsilon_sweep(&g, &family, &k, &eps_list, c, &opts))?;
    let mut artifact = Vec::new();
    write_sweep_csv(&mut artifact, &rows)?;
    let values: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(Outcome {
        artifact,
        summary: format!(
            "sweep: {name} on the dimension {} measure in R^{}, {} widths, values in [{lo}, {hi}]",
            family.dimension(),
            family.d,
            rows.len()
        ),
    })
}

fn search_points(cfg: &ExperimentConfig) -> Result<(PointSet, f64)> {
    let (pts, _, natural_t) = load_points(cfg)?.ok_or_else(|| anyhow!("field `input`: give an input file or a fixture"))?;
    let t = match cfg.raw("t") {
        Some(_) => cfg.get("t")?,
        None if natural_t.is_finite() => natural_t,
        None => bail!("field `t`: required for input files"),
    };
    Ok((pts, t))
}

fn cycles(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (pts, t) = search_points(cfg)?;
    let delta: f64 = cfg.get_or("delta", 1e-6 * t)?;
    let max_results: usize = cfg.get("max_results")?;
    let found = field("delta", find_4cycles(&pts, t, delta, max_results))?;
    let reports: Vec<_> = found.iter().map(|c| c.report(&pts)).collect();
    let artifact = serde_json::to_vec_pretty(&reports)?;
    let truncated = if found.len() == max_results { " (truncated)" } else { "" };
    Ok(Outcome {
        artifact,
        summary: format!(
            "cycles: {} points, t = {t}, delta = {delta}, {} cycles{truncated}",
            pts.len(),
            found.len()
        ),
    })
}

fn shatter(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (pts, t) = search_points(cfg)?;
    let (delta, margin): (f64, f64) = (cfg.get("delta")?, cfg.get("margin")?);
    let budget: u64 = cfg.get("budget")?;
    let ks: Vec<usize> = match cfg.raw("k") {
        Some(_) => vec![cfg.get("k")?],
        None => (1..=MAX_SEARCH_K).rev().collect(),
    };
    let mut searches = Vec::new();
    let mut best = None;
    let mut partial = false;
    for k in ks {
        match shatter_witness_search(&pts, t, delta, margin, k, budget) {
            Ok(Some(w)) => {
                searches.push(json!({"k": k, "status": "found"}));
                best = Some(w);
                break;
            }
            Ok(None) => searches.push(json!({"k": k, "status": "none"})),
            Err(Error::BudgetExhausted { examined }) => {
                partial = true;
                searches.push(json!({"k": k, "status": "budget_exhausted", "examined": examined}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let bound = best.as_ref().map_or(0, |w| w.k);
    let doc = json!({
        "points": pts.len(),
        "t": t,
        "delta": delta,
        "margin": margin,
        "budget": budget,
        "vc_lower_bound": bound,
        "partial": partial,
        "searches": searches,
        "witness": best.as_ref().map(|w| w.report(&pts)),
    });
    let artifact = serde_json::to_vec_pretty(&doc)?;
    let note = if partial { ", some searches hit the budget" } else { "" };
    Ok(Outcome {
        artifact,
        summary: format!("shatter: {} points, t = {t}, VC-dimension lower bound {bound}{note}", pts.len()),
    })
}

fn parse_m_list(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| anyhow!("field `m_list`: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| anyhow!("field `m_list`: {e}"))?;
        return Ok((a..=b).collect());
    }
    parse_list("m_list", text)
}

fn pac(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (small, large) = paired_vc_instances()?;
    let class: String = cfg.get("class")?;
    let task = match class.as_str() {
        "small" => small,
        "large" => large,
        other => bail!("field `class`: `{other}` is neither small nor large"),
    };
    let m_list = parse_m_list(&cfg.get::<String>("m_list")?)?;
    let (eps, delta): (f64, f64) = (cfg.get("epsilon")?, cfg.get("delta")?);
    let curve = field(
        "m_list",
        sample_complexity_curve(&task, &m_list, cfg.get("trials")?, eps, delta, cfg.get("seed")?),
    )?;
    let mut artifact = Vec::new();
    write_curve_csv(&mut artifact, &curve.rows)?;
    let m_star = curve.m_star.map_or("not reached".to_string(), |m| m.to_string());
    Ok(Outcome {
        artifact,
        summary: format!(
            "pac: {class} class (VC dimension {}), epsilon = {eps}, delta = {delta}, empirical m* = {m_star}, \
             reference shape (n log(1/ε) + log(1/δ))/ε = {:.2}",
            curve.vc_dimension, curve.reference_shape
        ),
    })
}

fn fixture_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let name: String = cfg.get("name")?;
    let f = field("name", fixture(&name))?;
    let mut artifact = Vec::new();
    f.write_csv(&mut artifact)?;
    Ok(Outcome {
        artifact,
        summary: format!("fixture: {name}, {} points in R^{}", f.points.len(), f.points.dim()),
    })
}
