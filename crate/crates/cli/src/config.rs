//! Problem files: TOML with coefficient arrays in ascending powers of `s`.

use std::path::Path;

use hinfstab::plant::{DelayPlant, WeightPair};
use hinfstab::{FrequencyGrid, RationalFn};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tf {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Tf {
    fn build(&self, field: &str) -> Result<RationalFn, CliError> {
        RationalFn::from_coeffs(&self.num, &self.den).map_err(|e| CliError::Input(format!("{field}: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum W2Spec {
    Named(String),
    Tf(Tf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub h: f64,
    #[serde(rename = "M")]
    pub m: Tf,
    pub m_d: Option<Tf>,
    #[serde(rename = "N_o")]
    pub n_o: Option<Tf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(rename = "W1")]
    pub w1: Tf,
    #[serde(rename = "W2")]
    pub w2: W2Spec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo: 1e-3, hi: 1e4, points: 4000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpec {
    pub uinf_step: f64,
    pub up_grid: Vec<f64>,
    pub uz_grid: Vec<f64>,
    pub scan_budget: usize,
    /// Parameter of the map `z = (s - a)/(s + a)` onto the disk.
    pub conformal_a: f64,
    pub mu_factors: Vec<f64>,
    pub mu_max: Option<f64>,
    pub q_step: f64,
    pub integer_bound: i64,
    /// Extra levels tried after `rho` when the finite-case search is exhausted.
    pub rho_schedule: Vec<f64>,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            uinf_step: 1e-3,
            up_grid: vec![0.0],
            uz_grid: vec![0.0],
            scan_budget: 25,
            conformal_a: 1.0,
            mu_factors: vec![1.02, 1.05, 1.1, 1.2, 1.5, 2.0],
            mu_max: None,
            q_step: 1e-3,
            integer_bound: 20,
            rho_schedule: Vec::new(),
        }
    }
}

fn default_a() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Extra interpolation point of the suboptimal problem.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Bracket `[lo, hi]` for the optimal level search.
    pub gamma_bracket: Option<[f64; 2]>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub search: SearchSpec,
}

impl Default for Options {
    fn default() -> Self {
        Options { a: default_a(), gamma_bracket: None, grid: GridSpec::default(), search: SearchSpec::default() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub plant: PlantSpec,
    pub weights: WeightSpec,
    #[serde(default)]
    pub options: Options,
}

/// A parsed and validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub plant: DelayPlant,
    pub weights: WeightPair,
    pub grid: FrequencyGrid,
}

impl Problem {
    pub fn bracket(&self) -> Result<(f64, f64), CliError> {
        match self.config.options.gamma_bracket {
            Some([lo, hi]) => Ok((lo, hi)),
            None => Err(CliError::Input("options.gamma_bracket: required for the optimal level search".into())),
        }
    }
}

pub fn parse(text: &str) -> Result<ProblemConfig, CliError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("{path}: {}", e.into_inner().message().trim()))
    })
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    build(parse(&text)?)
}

pub fn build(config: ProblemConfig) -> Result<Problem, CliError> {
    let g = &config.options.grid;
    if !(g.lo > 0.0 && g.hi > g.lo && g.points >= 2) {
        return Err(CliError::Input("options.grid: need 0 < lo < hi and at least 2 points".into()));
    }
    let grid = FrequencyGrid::log(g.lo, g.hi, g.points);
    let p = &config.plant;
    if !(p.h >= 0.0 && p.h.is_finite()) {
        return Err(CliError::Input(format!("plant.h: delay {} must be finite and nonnegative", p.h)));
    }
    let one = || RationalFn::one();
    let m = p.m.build("plant.M")?;
    let m_d = p.m_d.as_ref().map(|t| t.build("plant.m_d")).transpose()?.unwrap_or_else(one);
    let n_o = p.n_o.as_ref().map(|t| t.build("plant.N_o")).transpose()?.unwrap_or_else(one);
    let plant = DelayPlant::new(p.h, m, m_d, n_o, &grid).map_err(|e| CliError::Input(format!("plant: {e}")))?;
    let w1 = config.weights.w1.build("weights.W1")?;
    let w2 = match &config.weights.w2 {
        W2Spec::Named(s) if s == "zero" => RationalFn::zero(),
        W2Spec::Named(s) => return Err(CliError::Input(format!("weights.W2: expected \"zero\" or a {{num, den}} table, got \"{s}\""))),
        W2Spec::Tf(t) => t.build("weights.W2")?,
    };
    let weights = WeightPair::new(w1, w2).map_err(|e| CliError::Input(format!("weights: {e}")))?;
    weights.validate_against(&plant).map_err(|e| CliError::Input(format!("weights: {e}")))?;
    let o = &config.options;
    if !(o.a > 0.0) {
        return Err(CliError::Input(format!("options.a: interpolation point {} must be positive", o.a)));
    }
    if !(o.search.conformal_a > 0.0) {
        return Err(CliError::Input("options.search.conformal_a: must be positive".into()));
    }
    if let Some([lo, hi]) = o.gamma_bracket {
        if !(lo > 0.0 && hi > lo) {
            return Err(CliError::Input(format!("options.gamma_bracket: need 0 < lo < hi, got [{lo}, {hi}]")));
        }
    }
    Ok(Problem { config, plant, weights, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"
[plant]
h = 0.1
M = { num = [-1.0, 1.0], den = [1.0, 1.0] }

[weights]
W1 = { num = [1.0, 0.6], den = [1.0, 1.0] }
W2 = "zero"

[options]
a = 1.985
gamma_bracket = [0.61, 0.99]
"#;

    #[test]
    fn parses_minimal_config() {
        let p = build(parse(EX1).unwrap()).unwrap();
        assert!(p.weights.one_block());
        assert_eq!(p.config.options.search.integer_bound, 20);
        assert_eq!(p.bracket().unwrap(), (0.61, 0.99));
    }

    #[test]
    fn reports_field_path() {
        let bad = EX1.replace("h = 0.1", "h = \"fast\"");
        match parse(&bad) {
            Err(CliError::Input(m)) => assert!(m.starts_with("plant.h"), "{m}"),
            other => panic!("{other:?}"),
        }
        let bad = EX1.replace("points", "pts").replace("[options]", "[options]\ngrid = { lo = 1e-3, hi = 1e4, pts = 10 }");
        match parse(&bad) {
            Err(CliError::Input(m)) => assert!(m.starts_with("options.grid"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_inner_m() {
        let bad = EX1.replace("M = { num = [-1.0, 1.0], den = [1.0, 1.0] }", "M = { num = [2.0], den = [1.0, 1.0] }");
        match build(parse(&bad).unwrap()) {
            Err(CliError::Input(m)) => assert!(m.contains("plant") && m.contains("inner"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn w2_name_must_be_zero() {
        let bad = EX1.replace("W2 = \"zero\"", "W2 = \"none\"");
        assert!(matches!(build(parse(&bad).unwrap()), Err(CliError::Input(_))));
    }
}
