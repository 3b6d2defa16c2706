use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainShape, VectorField};
use crate::kernels::KernelFamily;
use crate::scenarios::{find, EigenSelect, NamedField, RuleSpec, Scenario, Specialization};
use crate::shape::{Embedding, DEFAULT_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Hadamard,
    Pullback,
    EigfunDerivative,
    FaberKrahn,
    RearrangeSuite,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Hadamard => "hadamard",
            Task::Pullback => "pullback",
            Task::EigfunDerivative => "eigfun-derivative",
            Task::FaberKrahn => "faber-krahn",
            Task::RearrangeSuite => "rearrange-suite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub delta: f64,
}

/// A field of the base scenario by name, or an explicit descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Named(String),
    Custom(VectorField),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Formula against FD, relative.
    pub rel: f64,
    /// `|λ1|` for Neumann rules.
    pub neumann_zero: f64,
    /// Hausdorff distance of the pullback eigenvalue lists.
    pub pullback: f64,
    pub eigfun_residual: f64,
    pub solvability: f64,
    pub orthogonality: f64,
    /// Hardy–Littlewood and Riesz slack floor.
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 0.02,
            neumann_zero: 1e-10,
            pullback: 1e-8,
            eigfun_residual: 1e-8,
            solvability: 1e-4,
            orthogonality: 1e-12,
            slack: 1e-8,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("rel", self.rel),
            ("neumann_zero", self.neumann_zero),
            ("pullback", self.pullback),
            ("eigfun_residual", self.eigfun_residual),
            ("solvability", self.solvability),
            ("orthogonality", self.orthogonality),
            ("slack", self.slack),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("tolerance `{name}` must be positive (got {v})")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// File name prefix; defaults to the run label.
    pub prefix: Option<String>,
}

/// Contents of a run configuration file. A built-in `scenario` supplies
/// defaults for every descriptor; explicit sections override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub domain: Option<DomainShape>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub refined: Option<usize>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub rule: Option<RuleSpec>,
    #[serde(default)]
    pub eigen: Option<EigenSelect>,
    /// Fields to evaluate; all fields of the base scenario when omitted.
    #[serde(default)]
    pub fields: Option<Vec<FieldSpec>>,
    #[serde(default)]
    pub fd_steps: Option<Vec<f64>>,
    #[serde(default)]
    pub embedding: Option<Embedding>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated configuration with every descriptor resolved.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub label: String,
    pub scenario: Scenario,
    pub fields: Vec<NamedField>,
    pub steps: Vec<f64>,
    pub embedding: Embedding,
    pub trials: usize,
}

/// Parses `key=value` where `value` is read as a TOML value, falling back
/// to a plain string.
fn parse_override(item: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::InvalidParameter(format!("override `{item}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::InvalidParameter(format!("override key `{key}` is malformed")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::InvalidParameter(format!("override path `{}` crosses a non-table", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Reads `text`, applies `--set` overrides (flags win over the file) and
/// deserializes the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config is not valid TOML: {e}")))?;
    for item in overrides {
        let (path, value) = parse_override(item)?;
        apply_override(&mut table, &path, value)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::InvalidParameter(format!("config: {e}")))
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

fn custom_scenario() -> Scenario {
    Scenario {
        name: "custom",
        description: "configured domain",
        shape: DomainShape::Interval { a: 0.0, b: 1.0 },
        family: KernelFamily::Tent,
        delta: 0.25,
        rule: RuleSpec::Dirichlet,
        eigen: EigenSelect::Index { index: 0 },
        resolution: 100,
        refined: 140,
        sweep: [50, 100, 200],
        fields: vec![
            NamedField {
                name: "translation".into(),
                field: VectorField::Translation { direction: [1.0, 0.0, 0.0] },
            },
            NamedField {
                name: "dilation".into(),
                field: VectorField::Dilation { center: [0.0; 3] },
            },
        ],
        specialization: Specialization::Dirichlet,
    }
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        self.tolerances.validate()?;
        let mut sc = match &self.scenario {
            Some(name) => find(name)?,
            None => {
                if self.task != Task::RearrangeSuite && (self.domain.is_none() || self.kernel.is_none() || self.rule.is_none()) {
                    return Err(Error::InvalidParameter(
                        "without a built-in `scenario`, `domain`, `kernel` and `rule` are required".into(),
                    ));
                }
                custom_scenario()
            }
        };
        let customized = self.domain.is_some() || self.kernel.is_some() || self.rule.is_some();
        if let Some(d) = &self.domain {
            sc.shape = d.clone();
        }
        if let Some(k) = self.kernel {
            if !(k.delta > 0.0 && k.delta.is_finite()) {
                return Err(Error::InvalidParameter(format!("kernel delta must be positive (got {})", k.delta)));
            }
            sc.family = k.family;
            sc.delta = k.delta;
        }
        if let Some(r) = &self.rule {
            sc.rule = r.clone();
        }
        if customized {
            sc.specialization = match sc.rule {
                RuleSpec::Neumann => Specialization::Neumann,
                _ => Specialization::Dirichlet,
            };
        }
        if let Some(e) = self.eigen {
            sc.eigen = e;
        }
        if let Some(r) = self.resolution {
            if r < 2 {
                return Err(Error::InvalidParameter(format!("resolution must be at least 2 (got {r})")));
            }
            sc.resolution = r;
            sc.refined = self.refined.unwrap_or((r as f64 * 1.4).round() as usize);
        } else if let Some(r) = self.refined {
            sc.refined = r;
        }
        if sc.refined <= sc.resolution {
            return Err(Error::InvalidParameter(format!(
                "refined resolution {} must exceed {}",
                sc.refined, sc.resolution
            )));
        }

        let fields = match &self.fields {
            None => sc.fields.clone(),
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, f)| match f {
                    FieldSpec::Named(n) => sc.field(n).cloned(),
                    FieldSpec::Custom(v) => Ok(NamedField {
                        name: format!("custom-{i}"),
                        field: v.clone(),
                    }),
                })
                .collect::<Result<_>>()?,
        };
        let steps = self.fd_steps.clone().unwrap_or_else(|| DEFAULT_STEPS.to_vec());
        if steps.is_empty() || steps.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("FD steps must be positive and non-empty".into()));
        }
        let label = self
            .output
            .prefix
            .clone()
            .or_else(|| self.name.clone())
            .or_else(|| self.scenario.clone())
            .unwrap_or_else(|| "custom".into());
        Ok(Resolved {
            config: self.clone(),
            label,
            scenario: sc,
            fields,
            steps,
            embedding: self.embedding.clone().unwrap_or(Embedding::Scale { factor: 2.0 }),
            trials: self.trials.unwrap_or(100),
        })
    }
}
