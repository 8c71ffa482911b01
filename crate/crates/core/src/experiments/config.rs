use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{FlexError, Result};
use crate::rng::DEFAULT_SEED;
use crate::solvers::{BetaFormula, MemoryPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentId {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

impl ExperimentId {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentId::Fig1 => "fig1",
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentId {
    type Err = FlexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(ExperimentId::Fig1),
            "fig2" => Ok(ExperimentId::Fig2),
            "fig3" => Ok(ExperimentId::Fig3),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(FlexError::invalid(format!("unknown experiment '{other}' (fig1, fig2, fig3, custom)"))),
        }
    }
}

/// System matrix of a custom run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorChoice {
    /// `tridiag(-1, 2, -1)`.
    Laplacian,
    /// `diag(1, 2, ..., n)`.
    Diagonal,
}

impl FromStr for OperatorChoice {
    type Err = FlexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(OperatorChoice::Laplacian),
            "diagonal" => Ok(OperatorChoice::Diagonal),
            other => Err(FlexError::invalid(format!("unknown operator '{other}' (laplacian, diagonal)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerChoice {
    Identity,
    Jacobi,
    Adversarial,
    ConeRandom,
    InnerCg,
    TwoGridFixed,
    TwoGridRerandomized,
    /// Both two-grid modes.
    TwoGrid,
}

impl FromStr for PreconditionerChoice {
    type Err = FlexError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => PreconditionerChoice::Identity,
            "jacobi" => PreconditionerChoice::Jacobi,
            "adversarial" => PreconditionerChoice::Adversarial,
            "cone-random" => PreconditionerChoice::ConeRandom,
            "inner-cg" => PreconditionerChoice::InnerCg,
            "two-grid-fixed" => PreconditionerChoice::TwoGridFixed,
            "two-grid-rerandomized" => PreconditionerChoice::TwoGridRerandomized,
            "two-grid" => PreconditionerChoice::TwoGrid,
            other => {
                return Err(FlexError::invalid(format!(
                    "unknown preconditioner '{other}' (identity, jacobi, adversarial, cone-random, inner-cg, \
                     two-grid-fixed, two-grid-rerandomized, two-grid)"
                )))
            }
        })
    }
}

/// One outer method of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodChoice {
    Flexible(MemoryPolicy),
    Alg1(BetaFormula),
}

impl MethodChoice {
    pub fn label(&self) -> String {
        match self {
            MethodChoice::Flexible(p) => p.label(),
            MethodChoice::Alg1(b) => b.label().to_string(),
        }
    }

    /// Whether the method belongs to the locally optimal family, for which
    /// the steepest-descent envelope is a theorem.
    pub fn in_family(&self) -> bool {
        !matches!(self, MethodChoice::Alg1(BetaFormula::Standard))
    }
}

impl FromStr for MethodChoice {
    type Err = FlexError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "psd" => MethodChoice::Flexible(MemoryPolicy::Psd),
            "pcg" => MethodChoice::Flexible(MemoryPolicy::pcg()),
            "full" => MethodChoice::Flexible(MemoryPolicy::Full),
            "alg1-standard" => MethodChoice::Alg1(BetaFormula::Standard),
            "alg1-modified" => MethodChoice::Alg1(BetaFormula::Modified),
            other => match other.strip_prefix("truncated").map(str::parse::<usize>) {
                Some(Ok(m)) => MethodChoice::Flexible(MemoryPolicy::Truncated(m)),
                _ => {
                    return Err(FlexError::invalid(format!(
                        "unknown method '{other}' (psd, pcg, full, truncatedN, alg1-standard, alg1-modified)"
                    )))
                }
            },
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitFlags {
    pub csv: bool,
    pub svg: bool,
    pub audit: bool,
}

impl EmitFlags {
    pub fn any(&self) -> bool {
        self.csv || self.svg || self.audit
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n: usize,
    pub kappa_max: f64,
    pub eta_list: Vec<f64>,
    pub coarse_count: usize,
    pub iterations: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub emit: EmitFlags,
    /// Relative A-error at which runs stop early.
    pub tolerance: Option<f64>,
    pub operator: OperatorChoice,
    pub preconditioner: PreconditionerChoice,
    pub methods: Vec<MethodChoice>,
}

/// Keys accepted in a configuration file or map. Dashes and underscores are
/// interchangeable.
pub const CONFIG_KEYS: &[&str] = &[
    "experiment",
    "n",
    "kappa_max",
    "eta",
    "coarse",
    "iters",
    "seed",
    "out",
    "csv",
    "svg",
    "audit",
    "tolerance",
    "operator",
    "preconditioner",
    "methods",
];

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FlexError::invalid(format!("line {}: expected key=value", lineno + 1)))?;
        let key = normalize_key(k);
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(FlexError::invalid(format!("line {}: unknown key '{}'", lineno + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| FlexError::Io { path: path.to_path_buf(), source })?;
    parse_key_values(&text)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| FlexError::invalid(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(FlexError::invalid(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

fn parse_list<T: FromStr<Err = FlexError>>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

impl ExperimentConfig {
    /// Defaults of an experiment before any overrides.
    pub fn defaults(experiment: ExperimentId) -> Self {
        let base = ExperimentConfig {
            experiment,
            n: 200,
            kappa_max: 2.0,
            eta_list: vec![0.2, 0.4, 0.6, 0.8],
            coarse_count: 600,
            iterations: 60,
            seed: DEFAULT_SEED,
            out_dir: None,
            emit: EmitFlags::default(),
            tolerance: None,
            operator: OperatorChoice::Laplacian,
            preconditioner: PreconditionerChoice::Adversarial,
            methods: vec![
                MethodChoice::Flexible(MemoryPolicy::Full),
                MethodChoice::Alg1(BetaFormula::Modified),
                MethodChoice::Alg1(BetaFormula::Standard),
            ],
        };
        match experiment {
            ExperimentId::Fig1 => base,
            ExperimentId::Fig2 => ExperimentConfig {
                n: 2000,
                iterations: 100,
                operator: OperatorChoice::Diagonal,
                preconditioner: PreconditionerChoice::InnerCg,
                methods: vec![MethodChoice::Flexible(MemoryPolicy::Psd), MethodChoice::Flexible(MemoryPolicy::pcg())],
                ..base
            },
            ExperimentId::Fig3 => ExperimentConfig {
                n: 3000,
                iterations: 400,
                tolerance: Some(1e-8),
                preconditioner: PreconditionerChoice::TwoGrid,
                methods: vec![
                    MethodChoice::Flexible(MemoryPolicy::Psd),
                    MethodChoice::Flexible(MemoryPolicy::pcg()),
                    MethodChoice::Flexible(MemoryPolicy::Full),
                ],
                ..base
            },
            ExperimentId::Custom => ExperimentConfig {
                iterations: 100,
                coarse_count: 40,
                methods: vec![
                    MethodChoice::Flexible(MemoryPolicy::Psd),
                    MethodChoice::Flexible(MemoryPolicy::pcg()),
                    MethodChoice::Flexible(MemoryPolicy::Full),
                ],
                ..base
            },
        }
    }

    /// Builds a configuration from a key/value map (file contents merged with
    /// command-line flags). `experiment` is required; everything else falls
    /// back to the experiment's defaults. The operator, preconditioner and
    /// method list of the three figures are fixed.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let experiment: ExperimentId = map
            .get("experiment")
            .ok_or_else(|| FlexError::invalid("missing required key 'experiment'"))?
            .parse()?;
        let mut c = Self::defaults(experiment);
        for (key, v) in map {
            match key.as_str() {
                "experiment" => {}
                "n" => c.n = parse_num(key, v)?,
                "kappa_max" => c.kappa_max = parse_num(key, v)?,
                "eta" => {
                    c.eta_list = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(key, s))
                        .collect::<Result<_>>()?
                }
                "coarse" => c.coarse_count = parse_num(key, v)?,
                "iters" => c.iterations = parse_num(key, v)?,
                "seed" => c.seed = parse_num(key, v)?,
                "out" => c.out_dir = Some(PathBuf::from(v)),
                "csv" => c.emit.csv = parse_bool(key, v)?,
                "svg" => c.emit.svg = parse_bool(key, v)?,
                "audit" => c.emit.audit = parse_bool(key, v)?,
                "tolerance" => c.tolerance = Some(parse_num(key, v)?),
                "operator" | "preconditioner" | "methods" if experiment != ExperimentId::Custom => {
                    return Err(FlexError::invalid(format!("'{key}' is only configurable for the custom experiment")))
                }
                "operator" => c.operator = v.parse()?,
                "preconditioner" => c.preconditioner = v.parse()?,
                "methods" => c.methods = parse_list(v)?,
                other => return Err(FlexError::invalid(format!("unknown key '{other}'"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(FlexError::invalid("n must be at least 2"));
        }
        if self.iterations == 0 {
            return Err(FlexError::invalid("iters must be positive"));
        }
        if !(self.kappa_max > 1.0) || !self.kappa_max.is_finite() {
            return Err(FlexError::invalid("kappa-max must be a finite number greater than 1"));
        }
        let needs_eta = self.preconditioner == PreconditionerChoice::InnerCg;
        if needs_eta && self.eta_list.is_empty() {
            return Err(FlexError::invalid("eta list is empty"));
        }
        if let Some(e) = self.eta_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(FlexError::invalid(format!("eta values must lie in (0, 1), got {e}")));
        }
        let two_grid = matches!(
            self.preconditioner,
            PreconditionerChoice::TwoGrid | PreconditionerChoice::TwoGridFixed | PreconditionerChoice::TwoGridRerandomized
        );
        if two_grid {
            if self.operator != OperatorChoice::Laplacian && self.operator != OperatorChoice::Diagonal {
                return Err(FlexError::invalid("two-grid needs a tridiagonal operator"));
            }
            if self.coarse_count == 0 || self.coarse_count > self.n {
                return Err(FlexError::invalid(format!("coarse must lie in 1..={}", self.n)));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t < 1.0) {
                return Err(FlexError::invalid("tolerance must lie in (0, 1)"));
            }
        }
        if self.methods.is_empty() {
            return Err(FlexError::invalid("method list is empty"));
        }
        if self.emit.any() && self.out_dir.is_none() {
            return Err(FlexError::invalid("--csv, --svg and --audit need an output directory (--out)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn figure_defaults() {
        let c = ExperimentConfig::from_map(&map(&[("experiment", "fig1")])).unwrap();
        assert_eq!((c.n, c.iterations, c.seed, c.kappa_max), (200, 60, 42, 2.0));
        let c = ExperimentConfig::from_map(&map(&[("experiment", "fig2")])).unwrap();
        assert_eq!((c.n, c.iterations), (2000, 100));
        assert_eq!(c.eta_list, vec![0.2, 0.4, 0.6, 0.8]);
        let c = ExperimentConfig::from_map(&map(&[("experiment", "fig3")])).unwrap();
        assert_eq!((c.n, c.coarse_count, c.iterations, c.tolerance), (3000, 600, 400, Some(1e-8)));
    }

    #[test]
    fn file_parsing() {
        let text = "# comment\nexperiment = fig2\n\neta=0.3, 0.5 # trailing\nkappa-max=3\n";
        let m = parse_key_values(text).unwrap();
        assert_eq!(m["kappa_max"], "3");
        let c = ExperimentConfig::from_map(&m).unwrap();
        assert_eq!(c.eta_list, vec![0.3, 0.5]);
        assert!(parse_key_values("bogus=1").is_err());
        assert!(parse_key_values("no equals sign").is_err());
    }

    #[test]
    fn custom_keys() {
        let c = ExperimentConfig::from_map(&map(&[
            ("experiment", "custom"),
            ("operator", "diagonal"),
            ("preconditioner", "cone-random"),
            ("methods", "psd,truncated3,alg1-modified"),
        ]))
        .unwrap();
        assert_eq!(c.methods[1], MethodChoice::Flexible(MemoryPolicy::Truncated(3)));
        assert!(ExperimentConfig::from_map(&map(&[("experiment", "fig1"), ("methods", "psd")])).is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [
            vec![("experiment", "fig9")],
            vec![("experiment", "fig1"), ("n", "1")],
            vec![("experiment", "fig1"), ("n", "abc")],
            vec![("experiment", "fig1"), ("kappa_max", "1")],
            vec![("experiment", "fig2"), ("eta", "1.5")],
            vec![("experiment", "fig3"), ("coarse", "0")],
            vec![("experiment", "fig1"), ("iters", "0")],
            vec![("experiment", "fig1"), ("csv", "true")],
            vec![("n", "10")],
        ] {
            assert!(ExperimentConfig::from_map(&map(&bad)).is_err(), "{bad:?}");
        }
    }
}
