use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::read_schedule_csv;
use crate::continuous::{ContinuousConfig, ContinuousProblem, Scheme};
use crate::dmp::{ControlSchedule, Sense, TargetSpec};
use crate::error::{Error, Result};
use crate::network::{EdgeListDialect, InitialCondition, NetworkJson, SpreadingNetwork};
use crate::optim::{InitScheme, Mode, OptimizerConfig, ProblemSpec};

/// A network given inline, as a bare path, or as a path with edge-list options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Path(PathBuf),
    File {
        path: PathBuf,
        #[serde(default)]
        undirected: bool,
        #[serde(default)]
        default_alpha: Option<f64>,
        #[serde(default)]
        lenient: bool,
    },
    Inline(NetworkJson),
}

impl GraphSpec {
    /// Paths are resolved against `base`.
    pub fn load(&self, base: &Path) -> Result<SpreadingNetwork> {
        match self {
            GraphSpec::Path(p) => SpreadingNetwork::load_path(&base.join(p), &EdgeListDialect::default()),
            GraphSpec::File {
                path,
                undirected,
                default_alpha,
                lenient,
            } => {
                let dialect = EdgeListDialect {
                    undirected: *undirected,
                    default_alpha: *default_alpha,
                    lenient: *lenient,
                };
                SpreadingNetwork::load_path(&base.join(path), &dialect)
            }
            GraphSpec::Inline(json) => json.clone().into_network(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProbability {
    pub node: String,
    pub ps: f64,
    pub pi: f64,
    pub pr: f64,
}

/// Initial state: listed nodes infected or recovered, explicit probability
/// triples for others, everything else susceptible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialJson {
    #[serde(default)]
    pub infected: Vec<String>,
    #[serde(default)]
    pub recovered: Vec<String>,
    #[serde(default)]
    pub probabilities: Vec<NodeProbability>,
}

impl InitialJson {
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn resolve(&self, net: &SpreadingNetwork) -> Result<InitialCondition> {
        let mut probs = vec![[1.0, 0.0, 0.0]; net.node_count()];
        let mut seen = vec![false; net.node_count()];
        let mut claim = |label: &str, p: [f64; 3]| -> Result<()> {
            let i = net.node_by_label(label)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(format!("initial state of {label:?} given twice")));
            }
            probs[i] = p;
            Ok(())
        };
        for l in &self.infected {
            claim(l, [0.0, 1.0, 0.0])?;
        }
        for l in &self.recovered {
            claim(l, [0.0, 0.0, 1.0])?;
        }
        for p in &self.probabilities {
            claim(&p.node, [p.ps, p.pi, p.pr])?;
        }
        InitialCondition::from_triples(probs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetJson {
    pub node: String,
    pub time: usize,
}

/// A scalar applied to every step or one value per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Scalar(f64),
    PerStep(Vec<f64>),
}

impl Budget {
    fn expand(&self, steps: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Budget::Scalar(b) => Ok(vec![*b; steps]),
            Budget::PerStep(v) if v.len() == steps => Ok(v.clone()),
            Budget::PerStep(v) => Err(Error::Invalid(format!(
                "{what} has {} entries, expected {steps}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsJson {
    #[serde(default = "unit")]
    pub nu: [f64; 2],
    #[serde(default = "unit")]
    pub mu: [f64; 2],
}

fn unit() -> [f64; 2] {
    [0.0, 1.0]
}

impl Default for BoundsJson {
    fn default() -> Self {
        Self { nu: unit(), mu: unit() }
    }
}

/// `"uniform"` or `{"schedule": "path.csv"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitJson {
    Named(String),
    Schedule { schedule: PathBuf },
}

/// On-disk optimization problem.
///
/// The budget of the optimized quantity (`budget_nu` for targeting and
/// seeding, `budget_mu` for vaccination) is required. The other one, when
/// present, is a fixed background split evenly over the controllable set.
/// Without targets every node at the horizon is targeted; the sense defaults
/// to maximizing for activation modes and minimizing for vaccination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mode: Mode,
    pub horizon: usize,
    #[serde(default)]
    pub targets: Vec<TargetJson>,
    #[serde(default)]
    pub sense: Option<Sense>,
    #[serde(default)]
    pub budget_nu: Option<Budget>,
    #[serde(default)]
    pub budget_mu: Option<Budget>,
    #[serde(default)]
    pub controllable: Option<Vec<String>>,
    #[serde(default)]
    pub bounds: BoundsJson,
    #[serde(default)]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub init: Option<InitJson>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub initial: InitialJson,
}

/// A problem file with its network loaded and every reference resolved.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub network: SpreadingNetwork,
    pub initial: InitialCondition,
    pub horizon: usize,
    pub mode: Mode,
    pub target: TargetSpec,
    pub budget: Vec<f64>,
    pub base: ControlSchedule,
    pub config: OptimizerConfig,
}

impl LoadedProblem {
    pub fn spec(&self) -> ProblemSpec<'_> {
        ProblemSpec {
            network: &self.network,
            initial: self.initial.clone(),
            horizon: self.horizon,
            mode: self.mode,
            target: self.target.clone(),
            budget: self.budget.clone(),
            base: self.base.clone(),
        }
    }
}

fn resolve_targets(net: &SpreadingNetwork, targets: &[TargetJson], horizon: usize, sense: Sense) -> Result<TargetSpec> {
    if targets.is_empty() {
        return TargetSpec::total_spread(net.node_count(), horizon, sense);
    }
    let list = targets
        .iter()
        .map(|t| Ok((net.node_by_label(&t.node)?, t.time)))
        .collect::<Result<Vec<_>>>()?;
    TargetSpec::new(list, sense)
}

fn controllable_mask(net: &SpreadingNetwork, labels: &Option<Vec<String>>) -> Result<Vec<bool>> {
    match labels {
        None => Ok(vec![true; net.node_count()]),
        Some(list) => {
            let mut mask = vec![false; net.node_count()];
            for l in list {
                mask[net.node_by_label(l)?] = true;
            }
            Ok(mask)
        }
    }
}

impl ProblemFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Loads the network and resolves labels; relative paths are taken from `base`.
    pub fn load(&self, dir: &Path) -> Result<LoadedProblem> {
        let network = self.graph.load(dir)?;
        let n = network.node_count();
        let h = self.horizon;
        if h == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        let initial = self.initial.resolve(&network)?;
        let sense = self.sense.unwrap_or(match self.mode {
            Mode::Vaccination => Sense::MinimizeInfected,
            _ => Sense::MaximizeInfected,
        });
        let target = resolve_targets(&network, &self.targets, h, sense)?;

        let mut base = ControlSchedule::zeros(n, h);
        base.set_all_bounds(
            (self.bounds.nu[0], self.bounds.nu[1]),
            (self.bounds.mu[0], self.bounds.mu[1]),
        )?;
        let mask = controllable_mask(&network, &self.controllable)?;
        let w: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        base.set_controllable(mask)?;
        if w.is_empty() {
            return Err(Error::Invalid("no controllable nodes".into()));
        }

        let steps = if self.mode == Mode::Seeding { 1 } else { h };
        let (main, background) = match self.mode {
            Mode::Vaccination => (&self.budget_mu, &self.budget_nu),
            _ => (&self.budget_nu, &self.budget_mu),
        };
        let main_name = if self.mode == Mode::Vaccination { "budget_mu" } else { "budget_nu" };
        let mut budget = main
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("{main_name} is required in {:?} mode", self.mode)))?
            .expand(steps, main_name)?;
        if self.mode == Mode::Vaccination {
            // Doses beyond vaccinating every controllable node go unused.
            let cap = w.len() as f64 * self.bounds.mu[1];
            for b in budget.iter_mut().filter(|b| **b > cap) {
                log::warn!("vaccination budget {b} exceeds the reachable {cap}; clamping");
                *b = cap;
            }
        }
        if let Some(bg) = background {
            let values = bg.expand(h, "background budget")?;
            for (t, v) in values.iter().enumerate() {
                for &i in &w {
                    let x = v / w.len() as f64;
                    if self.mode == Mode::Vaccination {
                        base.set_nu(i, t, x);
                    } else {
                        base.set_mu(i, t, x);
                    }
                }
            }
        }

        let mut config = OptimizerConfig::default();
        if let Some(g) = &self.epsilon_grid {
            config.epsilon_grid = g.clone();
        }
        if let Some(m) = self.max_iters {
            config.max_iters = m;
        }
        config.restarts = self.restarts.unwrap_or(0);
        config.seed = self.seed.unwrap_or(0);
        config.init = match &self.init {
            None => InitScheme::Uniform,
            Some(InitJson::Named(s)) if s == "uniform" => InitScheme::Uniform,
            Some(InitJson::Named(s)) => return Err(Error::Invalid(format!("unknown init scheme {s:?}"))),
            Some(InitJson::Schedule { schedule }) => {
                let f = std::fs::File::open(dir.join(schedule))?;
                let mut s = read_schedule_csv(&network, h, f)?;
                s.set_controllable((0..n).map(|i| base.is_controllable(i)).collect())?;
                InitScheme::Schedule(s)
            }
        };
        Ok(LoadedProblem {
            network,
            initial,
            horizon: h,
            mode: self.mode,
            target,
            budget,
            base,
            config,
        })
    }
}

/// On-disk continuous-time problem. `budget_nu` is per grid cell or a scalar;
/// target times are in the horizon's time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousFile {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub targets: Vec<TargetJson>,
    #[serde(default)]
    pub sense: Option<Sense>,
    pub budget_nu: Budget,
    #[serde(default)]
    pub controllable: Option<Vec<String>>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub initial: InitialJson,
}

#[derive(Debug, Clone)]
pub struct LoadedContinuous {
    pub problem: ContinuousProblem,
    pub config: ContinuousConfig,
}

impl ContinuousFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn load(&self, base: &Path) -> Result<LoadedContinuous> {
        let network = self.graph.load(base)?;
        let initial = self.initial.resolve(&network)?;
        let sense = self.sense.unwrap_or(Sense::MaximizeInfected);
        let horizon_steps = self.horizon.round();
        if self.targets.is_empty() && (horizon_steps - self.horizon).abs() > 1e-12 {
            return Err(Error::Invalid(
                "full-spread targets need an integer horizon; list targets explicitly".into(),
            ));
        }
        let target = resolve_targets(&network, &self.targets, horizon_steps as usize, sense)?;
        let controllable = controllable_mask(&network, &self.controllable)?;
        let mut problem = ContinuousProblem {
            network,
            initial,
            horizon: self.horizon,
            dt: self.dt,
            target,
            controllable,
            budget: Vec::new(),
        };
        problem.budget = self.budget_nu.expand(problem.steps()?, "budget_nu")?;
        let mut config = ContinuousConfig {
            scheme: self.scheme,
            ..ContinuousConfig::default()
        };
        if let Some(m) = self.max_iters {
            config.max_iters = m;
        }
        if let Some(t) = self.tol {
            config.tol = t;
        }
        Ok(LoadedContinuous { problem, config })
    }
}
