//! Flat `section.key=value` configuration with defaults and typed validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ael_core::equilibrium::SolverConfig;
use ael_core::model::{FeeScheme, MarketParams, PriorScale};
use ael_core::simulator::SimConfig;

use crate::error::CliError;

/// Every recognised key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("market.sigma_minus", "0.1", "lower end of the noise range"),
    ("market.sigma_plus", "1.1", "upper end of the noise range"),
    ("market.rho", "0", "correlation of the two noise terms"),
    ("market.v", "inf", "prior scale of the efficient price (inf or a positive number)"),
    ("fees.scheme", "spread_quad", "none, mid_quad, spread_quad or linear_demand"),
    ("fees.gamma", "2", "penalty level"),
    ("fees.kbar", "1", "demand slope under linear_demand"),
    ("solver.grid_n", "101", "sigma grid size"),
    ("solver.damping", "0.5", "weight of the new best response"),
    ("solver.tol", "1e-9", "sup-norm residual accepted as converged"),
    ("solver.max_iter", "2000", "iteration cap"),
    ("solver.search_cap", "1", "initial upper end of the argmax search"),
    ("solver.quad_nodes", "64", "Gauss-Legendre nodes for sigma averages"),
    ("sim.samples", "100000", "Monte Carlo draws"),
    ("sim.seed", "7", "random seed"),
    ("strategy.delta", "0", "constant half-spread used when no strategy file is given"),
    ("strategy.file", "", "CSV written by solve-ne; its first delta column is used"),
    ("sweep.gammas", "", "gamma list a,b,c or range lo:hi:n (empty: fees.gamma only)"),
    ("payoff.sigma_a", "0.6", "noise level of the evaluating player"),
    ("payoff.x_min", "-0.5", "left end of the payoff curve"),
    ("payoff.x_max", "1", "right end of the payoff curve"),
    ("payoff.points", "151", "samples on the payoff curve"),
    ("output.path", "-", "output file, - for stdout"),
];

/// Where a value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

/// Raw key/value store before typing.
#[derive(Debug, Clone)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Origin)>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), (v.to_string(), Origin::Default))).collect(),
        }
    }
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

impl RawConfig {
    /// Parses `key=value` lines; blank lines and `#` comments are skipped. A file written
    /// by this tool (first line `# ael ...`) is read back from its header block instead.
    pub fn merge_text(&mut self, text: &str, path: &str) -> Result<(), CliError> {
        let from_output = text.starts_with("# ael ");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let body = if from_output {
                match line.strip_prefix("# ") {
                    Some(b) if b.contains('=') && !b.starts_with("ael ") && !b.starts_with("result ") => b,
                    _ => continue,
                }
            } else {
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                line
            };
            let origin = Origin::File { path: path.to_string(), line: i + 1 };
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}: expected key=value, found '{body}'")))?;
            let k = k.trim();
            if !known(k) {
                return Err(CliError::Config(format!("{origin}: unknown key '{k}'")));
            }
            self.values.insert(k.to_string(), (v.trim().to_string(), origin));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
        if !known(key) {
            return Err(CliError::Config(format!("{origin}: unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), (value.trim().to_string(), origin));
        Ok(())
    }

    fn get(&self, key: &str) -> (&str, &Origin) {
        let (v, o) = &self.values[key];
        (v.as_str(), o)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let (v, o) = self.get(key);
        v.parse()
            .map_err(|_| CliError::Config(format!("{o}: key '{key}': cannot parse '{v}'")))
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let wrap = |key: &str, e: ael_core::Error| {
            let (_, o) = self.get(key);
            CliError::Config(format!("{o}: key '{key}': {e}"))
        };
        let v = match self.get("market.v").0 {
            "inf" | "infinite" => PriorScale::Infinite,
            _ => PriorScale::Finite(self.parse("market.v")?),
        };
        let market = MarketParams::new(self.parse("market.sigma_minus")?, self.parse("market.sigma_plus")?, self.parse("market.rho")?, v)
            .map_err(|e| wrap("market.sigma_minus", e))?;

        let gamma: f64 = self.parse("fees.gamma")?;
        let kbar: f64 = self.parse("fees.kbar")?;
        let fees = match self.get("fees.scheme").0 {
            "none" => FeeScheme::NoFee,
            "mid_quad" => FeeScheme::MidQuad { gamma },
            "spread_quad" => FeeScheme::SpreadQuad { gamma },
            "linear_demand" => FeeScheme::LinearDemand { kbar, gamma },
            other => {
                let (_, o) = self.get("fees.scheme");
                return Err(CliError::Config(format!("{o}: key 'fees.scheme': unknown scheme '{other}'")));
            }
        };
        fees.validate().map_err(|e| wrap("fees.gamma", e))?;

        let solver = SolverConfig {
            grid_n: self.parse("solver.grid_n")?,
            damping: self.parse("solver.damping")?,
            tol: self.parse("solver.tol")?,
            max_iter: self.parse("solver.max_iter")?,
            search_cap: self.parse("solver.search_cap")?,
            quad_nodes: self.parse("solver.quad_nodes")?,
        };
        solver.validate().map_err(|e| wrap("solver.grid_n", e))?;

        let sim = SimConfig::new(self.parse("sim.samples")?, self.parse("sim.seed")?, v).map_err(|e| wrap("sim.samples", e))?;

        let file = self.get("strategy.file").0;
        let strategy = if file.is_empty() {
            let d: f64 = self.parse("strategy.delta")?;
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::Config(format!("{}: key 'strategy.delta' must be >= 0", self.get("strategy.delta").1)));
            }
            StrategySource::Constant(d)
        } else {
            StrategySource::File(PathBuf::from(file))
        };

        let gammas = parse_gammas(self.get("sweep.gammas").0)
            .map_err(|e| CliError::Config(format!("{}: key 'sweep.gammas': {e}", self.get("sweep.gammas").1)))?;

        let payoff = PayoffSpec {
            sigma_a: self.parse("payoff.sigma_a")?,
            x_min: self.parse("payoff.x_min")?,
            x_max: self.parse("payoff.x_max")?,
            points: self.parse("payoff.points")?,
        };
        if !(payoff.x_min < payoff.x_max) || payoff.points < 2 {
            return Err(CliError::Config("payoff curve needs x_min < x_max and at least 2 points".into()));
        }

        Ok(RunConfig { market, fees, solver, sim, strategy, gammas, payoff, output: self.get("output.path").0.to_string() })
    }
}

fn parse_gammas(text: &str) -> Result<Vec<f64>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |s: &str| format!("cannot parse '{s}'");
    let out: Vec<f64> = if let Some((lo, rest)) = text.split_once(':') {
        let (hi, n) = rest.split_once(':').ok_or_else(|| "range must be lo:hi:n".to_string())?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad(lo))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad(hi))?;
        let n: usize = n.trim().parse().map_err(|_| bad(n))?;
        match n {
            0 => return Err("range needs at least one point".into()),
            1 => vec![lo],
            _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
        }
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad(s))).collect::<Result<_, _>>()?
    };
    if out.iter().any(|g| !(*g > 0.0 && g.is_finite())) || out.windows(2).any(|w| !(w[0] < w[1])) {
        return Err("gammas must be positive and strictly increasing".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategySource {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub sigma_a: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

/// Typed, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub market: MarketParams,
    pub fees: FeeScheme,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    pub strategy: StrategySource,
    pub gammas: Vec<f64>,
    pub payoff: PayoffSpec,
    pub output: String,
}

impl RunConfig {
    /// Effective configuration as `key=value` pairs in key order, with numbers in
    /// shortest round-trip form.
    pub fn effective(&self) -> Vec<(String, String)> {
        let (gamma, kbar) = match self.fees {
            FeeScheme::NoFee => (0.0, 1.0),
            FeeScheme::MidQuad { gamma } | FeeScheme::SpreadQuad { gamma } => (gamma, 1.0),
            FeeScheme::LinearDemand { kbar, gamma } => (gamma, kbar),
        };
        let (delta, file) = match &self.strategy {
            StrategySource::Constant(d) => (format!("{d:?}"), String::new()),
            StrategySource::File(p) => ("0".to_string(), p.display().to_string()),
        };
        let gammas = self.gammas.iter().map(|g| format!("{g:?}")).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("market.sigma_minus", format!("{:?}", self.market.sigma_minus())),
            ("market.sigma_plus", format!("{:?}", self.market.sigma_plus())),
            ("market.rho", format!("{:?}", self.market.rho())),
            ("market.v", self.market.v().to_string()),
            ("fees.scheme", self.fees.name().to_string()),
            ("fees.gamma", format!("{gamma:?}")),
            ("fees.kbar", format!("{kbar:?}")),
            ("solver.grid_n", self.solver.grid_n.to_string()),
            ("solver.damping", format!("{:?}", self.solver.damping)),
            ("solver.tol", format!("{:?}", self.solver.tol)),
            ("solver.max_iter", self.solver.max_iter.to_string()),
            ("solver.search_cap", format!("{:?}", self.solver.search_cap)),
            ("solver.quad_nodes", self.solver.quad_nodes.to_string()),
            ("sim.samples", self.sim.samples.to_string()),
            ("sim.seed", self.sim.seed.to_string()),
            ("strategy.delta", delta),
            ("strategy.file", file),
            ("sweep.gammas", gammas),
            ("payoff.sigma_a", format!("{:?}", self.payoff.sigma_a)),
            ("payoff.x_min", format!("{:?}", self.payoff.x_min)),
            ("payoff.x_max", format!("{:?}", self.payoff.x_max)),
            ("payoff.points", self.payoff.points.to_string()),
            ("output.path", self.output.clone()),
        ];
        out.sort_by(|a, b| a.0.cmp(b.0));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The γ values to sweep: `sweep.gammas`, or the configured γ alone.
    pub fn gamma_list(&self) -> Vec<f64> {
        if self.gammas.is_empty() {
            vec![self.fees.gamma()]
        } else {
            self.gammas.clone()
        }
    }
}
