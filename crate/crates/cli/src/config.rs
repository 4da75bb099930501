//! Experiment configuration: one JSON document, validated before any work.

use std::collections::HashMap;

use returnlab::cylinder::CylinderSet;
use returnlab::openset::{Direction, ExplicitUnion, OpenSetSpec, PatternOccurs};
use returnlab::potential::Potential;
use returnlab::sft::{ForbiddenCompilation, Sft, Symbol};
use returnlab::verify::Tolerances;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub sft: SftSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    /// Set whose return times are studied (`rate`, `simulate`, `approx`).
    #[serde(default)]
    pub target: Option<TargetSpec>,
    /// Holes whose survivor pressures `pressure` reports.
    #[serde(default)]
    pub holes: Vec<CylinderSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub pressure: PressureParams,
    #[serde(default)]
    pub rate: RateParams,
    #[serde(default)]
    pub simulate: SimulateParams,
    #[serde(default)]
    pub verify: VerifyParams,
}

fn default_seed() -> u64 {
    Tolerances::default().seed
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SftSpec {
    /// `FULL2` or `GOLD`.
    Fixture(String),
    /// Dense 0/1 transition matrix.
    Matrix(Vec<Vec<u8>>),
    /// Forbidden words over `alphabet` symbols.
    Forbidden { alphabet: usize, words: Vec<String> },
}

impl Default for SftSpec {
    fn default() -> Self {
        SftSpec::Fixture("FULL2".into())
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Constant(f64),
    /// `φ(x) = log p_{x_0}`.
    Bernoulli(Vec<f64>),
    /// Values on the words covering coordinates `left..=right`.
    Table {
        left: i64,
        right: i64,
        values: HashMap<String, f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    #[serde(default)]
    pub anchor: i64,
    /// Words of equal length, written on the original alphabet.
    pub words: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Cylinder(CylinderSpec),
    OpenSet(OpenSetConfig),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenSetConfig {
    /// `FUTURE11` or `NEXT0`.
    #[serde(default)]
    pub fixture: Option<String>,
    #[serde(default)]
    pub pattern: Option<PatternSpec>,
    /// A clopen set given as cylinders; inner and outer coincide.
    #[serde(default)]
    pub union: Option<CylinderSpec>,
    #[serde(default = "one")]
    pub min_depth: usize,
    #[serde(default = "ten")]
    pub max_depth: usize,
    /// Largest `|Ψ_inner - Ψ_outer|` accepted as converged.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn one() -> usize {
    1
}
fn ten() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub prefix: String,
    #[serde(default)]
    pub prefix_anchor: i64,
    pub pattern: String,
    #[serde(default)]
    pub direction: DirectionSpec,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    #[default]
    Future,
    Past,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureParams {
    /// Depth of the empirical Gibbs-constant envelope.
    #[serde(default = "default_gibbs_depth")]
    pub gibbs_depth: usize,
}

fn default_gibbs_depth() -> usize {
    6
}

impl Default for PressureParams {
    fn default() -> Self {
        PressureParams {
            gibbs_depth: default_gibbs_depth(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    /// Explicit α grid; otherwise a Chebyshev grid of `points` nodes.
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub points: Option<usize>,
    /// Explicit u grid; otherwise the slopes of the α grid.
    #[serde(default)]
    pub u: Option<Vec<f64>>,
    /// Also evaluate the rate through the complement of the target.
    #[serde(default)]
    pub complement: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub method: TailMethodSpec,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Depth of the inner/outer pair for open-set targets.
    #[serde(default)]
    pub depth: Option<usize>,
    /// Write per-trial return times to `raw.csv`.
    #[serde(default)]
    pub raw: bool,
}

fn default_n() -> usize {
    100
}
fn default_trials() -> u64 {
    100_000
}
fn default_horizon() -> u64 {
    returnlab::simulate::DEFAULT_HORIZON
}
fn default_batches() -> usize {
    100
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            n: default_n(),
            trials: default_trials(),
            alpha: Vec::new(),
            u: Vec::new(),
            method: TailMethodSpec::default(),
            horizon: default_horizon(),
            batches: default_batches(),
            depth: None,
            raw: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethodSpec {
    Direct,
    #[default]
    Tilted,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    /// Subset of check ids; all by default.
    #[serde(default)]
    pub criteria: Option<Vec<usize>>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    /// Multiplies every numeric tolerance (0 makes every comparison exact).
    #[serde(default)]
    pub tolerance_scale: Option<f64>,
}

/// Why a configuration was rejected.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

/// The shift an experiment runs on, with the recoding from the alphabet the
/// configuration is written in.
pub struct Model {
    pub sft: Sft,
    pub source: Sft,
    compilation: Option<ForbiddenCompilation>,
    pub potential: Potential,
}

impl Model {
    fn parse_word(&self, text: &str) -> Result<Vec<Symbol>, ConfigError> {
        Ok(self.source.parse_symbols(text)?)
    }

    /// Lifts words on the configured alphabet to the compiled shift.
    pub fn cylinder(&self, spec: &CylinderSpec) -> Result<CylinderSet, ConfigError> {
        let words = spec
            .words
            .iter()
            .map(|w| self.parse_word(w))
            .collect::<Result<Vec<_>, _>>()?;
        let Some(len) = words.first().map(Vec::len) else {
            return Err(ConfigError("a cylinder set needs at least one word".into()));
        };
        if words.iter().any(|w| w.len() != len) {
            return Err(ConfigError("all words of a cylinder set must have the same length".into()));
        }
        for w in &words {
            if !self.source.is_admissible(w) {
                return Err(ConfigError(format!("word {} is not admissible", self.source.format_symbols(w))));
            }
        }
        match &self.compilation {
            None => Ok(CylinderSet::new(&self.sft, spec.anchor, len, words)?),
            Some(c) => {
                let k = c.block_length();
                let lifted_len = if len >= k { len - k + 1 } else { 1 };
                let lifted: Vec<Vec<Symbol>> = words.iter().flat_map(|w| c.lift_word(w)).collect();
                Ok(CylinderSet::new(&self.sft, spec.anchor, lifted_len, lifted)?)
            }
        }
    }

    pub fn open_set(&self, cfg: &OpenSetConfig) -> Result<Box<dyn OpenSetSpec>, ConfigError> {
        let given = [cfg.fixture.is_some(), cfg.pattern.is_some(), cfg.union.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(ConfigError("an open set needs exactly one of fixture, pattern, union".into()));
        }
        if cfg.min_depth == 0 || cfg.min_depth > cfg.max_depth {
            return Err(ConfigError("need 1 <= min_depth <= max_depth".into()));
        }
        if !(cfg.tol >= 0.0) {
            return Err(ConfigError("tol must be >= 0".into()));
        }
        if let Some(u) = &cfg.union {
            return Ok(Box::new(ExplicitUnion::new(&self.sft, self.cylinder(u)?)));
        }
        if self.compilation.is_some() {
            return Err(ConfigError(
                "pattern open sets need a one-step shift (forbidden words of length 2)".into(),
            ));
        }
        if let Some(name) = &cfg.fixture {
            if self.sft.alphabet_size() != 2 {
                return Err(ConfigError(format!("{name} is defined on two symbols")));
            }
            return match name.to_ascii_uppercase().as_str() {
                "FUTURE11" => Ok(Box::new(PatternOccurs::future11())),
                "NEXT0" => Ok(Box::new(PatternOccurs::next0())),
                _ => Err(ConfigError(format!("unknown open-set fixture {name:?}"))),
            };
        }
        let p = cfg.pattern.as_ref().expect("checked above");
        let prefix = self.sft.word(self.parse_word(&p.prefix)?, p.prefix_anchor)?;
        let dir = match p.direction {
            DirectionSpec::Future => Direction::Future,
            DirectionSpec::Past => Direction::Past,
        };
        Ok(Box::new(PatternOccurs::new(&self.sft, prefix, self.parse_word(&p.pattern)?, dir)?))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let model = self.model()?;
        for h in &self.holes {
            model.cylinder(h)?;
        }
        match &self.target {
            Some(TargetSpec::Cylinder(c)) => {
                model.cylinder(c)?;
            }
            Some(TargetSpec::OpenSet(o)) => {
                model.open_set(o)?;
            }
            None => {}
        }
        if let Some(p) = self.rate.points {
            if p < 3 {
                return Err(ConfigError("rate.points must be >= 3".into()));
            }
        }
        let s = &self.simulate;
        if s.n == 0 || s.trials == 0 || s.horizon == 0 {
            return Err(ConfigError("simulate.n, trials and horizon must be positive".into()));
        }
        if s.batches < returnlab::simulate::MIN_BATCHES {
            return Err(ConfigError(format!(
                "simulate.batches must be at least {}",
                returnlab::simulate::MIN_BATCHES
            )));
        }
        if s.u.iter().any(|&u| !(u > 0.0)) {
            return Err(ConfigError("simulate.u values must be positive".into()));
        }
        if let Some(ids) = &self.verify.criteria {
            if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > returnlab::verify::CHECK_COUNT) {
                return Err(ConfigError(format!("verify.criteria: no check {bad}")));
            }
        }
        if matches!(self.verify.tolerance_scale, Some(f) if !(f >= 0.0)) {
            return Err(ConfigError("verify.tolerance_scale must be >= 0".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        let (sft, source, compilation) = match &self.sft {
            SftSpec::Fixture(name) => {
                let s = Sft::fixture(name).ok_or_else(|| ConfigError(format!("unknown shift fixture {name:?}")))?;
                (s.clone(), s, None)
            }
            SftSpec::Matrix(m) => {
                let s = Sft::from_matrix(m)?;
                (s.clone(), s, None)
            }
            SftSpec::Forbidden { alphabet, words } => {
                let full = Sft::full(*alphabet);
                let forbidden = words
                    .iter()
                    .map(|w| full.parse_symbols(w))
                    .collect::<Result<Vec<_>, _>>()?;
                let c = Sft::from_forbidden(*alphabet, &forbidden)?;
                if c.is_one_step() {
                    (c.sft().clone(), c.sft().clone(), None)
                } else {
                    // admissibility of configured words is checked on the
                    // full shift and then by lifting
                    (c.sft().clone(), full, Some(c))
                }
            }
        };
        let potential = self.potential(&source, &sft, compilation.as_ref())?;
        Ok(Model {
            sft,
            source,
            compilation,
            potential,
        })
    }

    fn potential(
        &self,
        source: &Sft,
        sft: &Sft,
        compilation: Option<&ForbiddenCompilation>,
    ) -> Result<Potential, ConfigError> {
        // a potential on the original alphabet, seen through the compiled
        // symbols: block u at coordinate i covers coordinates i..i+k-1
        let decode = |w: &[Symbol]| -> Vec<Symbol> {
            match compilation {
                None => w.to_vec(),
                Some(c) => {
                    let mut out = c.block(w[0]).to_vec();
                    out.extend(w[1..].iter().map(|&u| *c.block(u).last().expect("nonempty block")));
                    out
                }
            }
        };
        let p = match &self.potential {
            PotentialSpec::Zero => Potential::zero(sft),
            PotentialSpec::Constant(c) => Potential::constant(sft, *c)?,
            PotentialSpec::Bernoulli(probs) => {
                if probs.len() != source.alphabet_size() {
                    return Err(ConfigError(format!(
                        "bernoulli needs {} weights, got {}",
                        source.alphabet_size(),
                        probs.len()
                    )));
                }
                if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
                    return Err(ConfigError("bernoulli weights must be positive".into()));
                }
                Potential::from_fn(sft, 0, 0, |w| probs[decode(w)[0]].ln())?
            }
            PotentialSpec::Table { left, right, values } => {
                let table = values
                    .iter()
                    .map(|(k, v)| Ok((source.parse_symbols(k)?, *v)))
                    .collect::<Result<HashMap<_, _>, ConfigError>>()?;
                let span = (right - left + 1).max(0) as usize;
                let missing = std::cell::RefCell::new(None);
                let p = Potential::from_fn(sft, *left, *right, |w| {
                    let key: Vec<Symbol> = decode(w).into_iter().take(span).collect();
                    match table.get(&key) {
                        Some(&v) => v,
                        None => {
                            missing.borrow_mut().get_or_insert(key);
                            0.0
                        }
                    }
                })?;
                if let Some(key) = missing.into_inner() {
                    return Err(ConfigError(format!(
                        "potential table has no value for {}",
                        source.format_symbols(&key)
                    )));
                }
                p
            }
        };
        Ok(p)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&canonical_value(self)).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

/// Serialized form with map keys sorted, so equal configs hash equally.
fn canonical_value(cfg: &Config) -> serde_json::Value {
    fn sort(v: serde_json::Value) -> serde_json::Value {
        match v {
            serde_json::Value::Object(m) => {
                let mut entries: Vec<_> = m.into_iter().collect();
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                serde_json::Value::Object(entries.into_iter().map(|(k, v)| (k, sort(v))).collect())
            }
            serde_json::Value::Array(a) => serde_json::Value::Array(a.into_iter().map(sort).collect()),
            other => other,
        }
    }
    sort(serde_json::to_value(cfg).expect("config serializes"))
}
