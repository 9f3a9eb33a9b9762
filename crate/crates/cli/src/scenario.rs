//! Scenario files: one JSON document per run.
//!
//! Every number that ends up in a state, scale or tolerance is written as a
//! decimal string (`"0.01"`, `"1e-6"`) and parsed exactly. Counts such as
//! `product_stride` are plain integers.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use adiabat_core::scale::DEFAULT_DENOMINATOR_BOUND;
use adiabat_core::{CompositeState, EntropyFn, ModelConfig, NormalSystem, Scale, SpaceCatalog, StateRef};
use anyhow::{anyhow, bail, Context, Result};
use serde::de::{self, Deserializer};
use serde::Deserialize;

/// A number written as a string.
#[derive(Clone, Debug, PartialEq)]
pub struct Decimal(pub String);

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text =
            String::deserialize(d).map_err(|_| de::Error::custom("expected a decimal string such as \"0.5\""))?;
        Scale::parse_decimal(&text, i64::MAX).map_err(de::Error::custom)?;
        Ok(Decimal(text))
    }
}

impl Decimal {
    pub fn scale(&self) -> Result<Scale> {
        Ok(Scale::parse_decimal(&self.0, DEFAULT_DENOMINATOR_BOUND)?)
    }

    pub fn value(&self) -> f64 {
        self.0.trim().parse().expect("validated on load")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub spaces: Vec<SpaceDecl>,
    #[serde(default)]
    pub config: ConfigDecl,
    #[serde(default)]
    pub generators: Vec<EdgeDecl>,
    /// Extra composites to include in the closure universe.
    #[serde(default)]
    pub universe: Vec<String>,
    /// Pairs the modeler believes hold; `validate` compares them with the
    /// closure.
    pub intended: Option<Vec<EdgeDecl>>,
    /// Joint potential per generic state, for ground-truth relations.
    pub potential: Option<BTreeMap<String, Decimal>>,
    pub canonical: Option<CanonicalDecl>,
    pub meter: Option<MeterDecl>,
    pub noneq: Option<NoneqDecl>,
    pub charts: Option<ChartsDecl>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKindDecl {
    Generic,
    Normal,
}

/// Generic spaces list `states`. Normal spaces give either `interval` with
/// `entropy`, or `values` (entropy per named state).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDecl {
    pub kind: SpaceKindDecl,
    pub id: String,
    pub states: Option<Vec<String>>,
    pub interval: Option<IntervalDecl>,
    pub entropy: Option<EntropyDecl>,
    pub values: Option<BTreeMap<String, Decimal>>,
    pub max_gap: Option<Decimal>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalDecl {
    pub lo: Decimal,
    pub hi: Decimal,
    pub step: Decimal,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "fn", rename_all = "lowercase", deny_unknown_fields)]
pub enum EntropyDecl {
    Linear { a: Decimal, b: Decimal },
    Log1p { a: Decimal },
    Power { a: Decimal, p: Decimal },
    Table { knots: Vec<(Decimal, Decimal)> },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDecl {
    pub arity_cap: Option<usize>,
    pub stability_epsilons: Option<Vec<Decimal>>,
    pub max_universe: Option<usize>,
    /// Close the universe under composition (off by default).
    pub compose: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDecl {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalDecl {
    pub space: String,
    pub x0: String,
    pub x1: String,
    pub tol: Option<Decimal>,
    /// States to tabulate; all grid states when absent.
    pub states: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefsDecl {
    pub z0: String,
    pub x1: String,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RelationSource {
    /// Closure of the generators (plus edges recorded from `potential`).
    #[default]
    Closure,
    /// The joint-potential relation itself.
    Potential,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CoverageDecl {
    /// Only what the entropy table needs.
    Basic,
    /// Also products and `Γ×Γ0` composites for the additivity and envelope checks.
    #[default]
    Full,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterDecl {
    pub system: Vec<String>,
    pub meter: String,
    pub z0: String,
    pub x1: String,
    pub alt: Option<RefsDecl>,
    pub product_stride: Option<usize>,
    #[serde(default)]
    pub relation: RelationSource,
    #[serde(default)]
    pub coverage: CoverageDecl,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoneqDecl {
    pub hat: String,
    pub eq: String,
    pub cross_check: Option<RefsDecl>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDecl {
    pub id: String,
    /// Local entropies given directly.
    pub values: Option<BTreeMap<String, Decimal>>,
    /// Or measured with a meter over this region (needs `potential`).
    pub region: Option<Vec<String>>,
    pub meter: Option<String>,
    pub z0: Option<String>,
    pub x1: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleMeterDecl {
    pub meter: String,
    pub z0: String,
    pub x1: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartsDecl {
    pub anchor: String,
    pub tol: Decimal,
    pub neighbours: Option<Vec<(String, String)>>,
    pub charts: Vec<ChartDecl>,
    /// Re-measure every chart state with one large meter and compare.
    pub single_meter: Option<SingleMeterDecl>,
}

/// Reads and parses a scenario. Schema errors carry the JSON path.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| anyhow!("at `{}`: {}", e.path(), e.inner()))
}

impl Scenario {
    pub fn catalog(&self) -> Result<Arc<SpaceCatalog>> {
        let mut cat = SpaceCatalog::new();
        for (i, s) in self.spaces.iter().enumerate() {
            let at = |e: anyhow::Error| e.context(format!("at `spaces[{i}]`"));
            match s.kind {
                SpaceKindDecl::Generic => {
                    let states = match (&s.states, &s.interval, &s.entropy, &s.values, &s.max_gap) {
                        (Some(states), None, None, None, None) if !states.is_empty() => states,
                        (Some(_), None, None, None, None) => {
                            return Err(at(anyhow!("generic space `{}` has no states", s.id)))
                        }
                        _ => return Err(at(anyhow!("generic space `{}` takes only `states`", s.id))),
                    };
                    cat.add_generic(&s.id, states.iter().cloned());
                }
                SpaceKindDecl::Normal => {
                    if s.states.is_some() {
                        return Err(at(anyhow!("normal space `{}` does not take `states`", s.id)));
                    }
                    cat.add_normal(normal_system(&s.id, &s.interval, &s.entropy, &s.values, &s.max_gap).map_err(at)?);
                }
            }
        }
        Ok(Arc::new(cat))
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let mut c = ModelConfig::explicit();
        if let Some(n) = self.config.arity_cap {
            c.arity_cap = n;
        }
        if let Some(eps) = &self.config.stability_epsilons {
            c.stability_epsilons =
                eps.iter().map(Decimal::scale).collect::<Result<_>>().context("at `config.stability_epsilons`")?;
        }
        if let Some(n) = self.config.max_universe {
            c.max_universe = n;
        }
        if let Some(b) = self.config.compose {
            c.compose = b;
        }
        Ok(c)
    }
}

fn normal_system(
    id: &str,
    interval: &Option<IntervalDecl>,
    entropy: &Option<EntropyDecl>,
    values: &Option<BTreeMap<String, Decimal>>,
    max_gap: &Option<Decimal>,
) -> Result<NormalSystem> {
    let gap = max_gap.as_ref().map_or(adiabat_core::normal::DEFAULT_MAX_GAP, Decimal::value);
    match (interval, entropy, values) {
        (Some(iv), Some(f), None) => {
            let f = match f {
                EntropyDecl::Linear { a, b } => EntropyFn::linear(a.value(), b.value()),
                EntropyDecl::Log1p { a } => EntropyFn::log1p(a.value()),
                EntropyDecl::Power { a, p } => EntropyFn::power(a.value(), p.value()),
                EntropyDecl::Table { knots } => {
                    EntropyFn::table(knots.iter().map(|(u, s)| (u.value(), s.value())).collect())
                }
            };
            Ok(NormalSystem::interval_with_gap(id, iv.lo.scale()?, iv.hi.scale()?, iv.step.scale()?, f, gap)?)
        }
        (None, None, Some(v)) => {
            Ok(NormalSystem::finite_with_gap(id, v.iter().map(|(k, s)| (k.clone(), s.value())).collect(), gap)?)
        }
        _ => bail!("normal space `{id}` needs either `interval` with `entropy`, or `values`"),
    }
}

/// `"space:state"`.
pub fn state_ref(cat: &SpaceCatalog, text: &str) -> Result<StateRef> {
    let (space, state) =
        text.trim().split_once(':').ok_or_else(|| anyhow!("state `{text}` must be written as `space:state`"))?;
    Ok(cat.resolve(space.trim(), state.trim())?)
}

/// `"2*sys:a + 0.5*meter:0.3"`.
pub fn composite(cat: &SpaceCatalog, text: &str) -> Result<CompositeState> {
    let mut parts = Vec::new();
    for term in text.split('+') {
        let term = term.trim();
        if term.is_empty() {
            bail!("empty term in composite `{text}`");
        }
        let (scale, state) = match term.split_once('*') {
            Some((s, rest)) => (Scale::parse_decimal(s.trim(), DEFAULT_DENOMINATOR_BOUND)?, rest),
            None => (Scale::ONE, term),
        };
        parts.push((state_ref(cat, state)?, scale));
    }
    Ok(cat.canonicalize(parts)?)
}

pub fn edges(
    cat: &SpaceCatalog,
    decls: &[EdgeDecl],
    field: &str,
) -> Result<Vec<(CompositeState, CompositeState, String)>> {
    decls
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let at = || format!("at `{field}[{i}]`");
            let from = composite(cat, &e.from).with_context(at)?;
            let to = composite(cat, &e.to).with_context(at)?;
            let label = if e.label.is_empty() { format!("{field}[{i}]") } else { e.label.clone() };
            Ok((from, to, label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "spaces": [
            {"kind": "generic", "id": "g", "states": ["a", "b"]},
            {"kind": "normal", "id": "m", "interval": {"lo": "0", "hi": "1", "step": "0.1"},
             "entropy": {"fn": "linear", "a": "1", "b": "0"}}
        ],
        "generators": [{"from": "g:a + 0.5*m:0.3", "to": "g:b + 0.5*m:0.1"}]
    }"#;

    #[test]
    fn parses_minimal_scenario() {
        let s = parse(MINIMAL).unwrap();
        let cat = s.catalog().unwrap();
        let e = edges(&cat, &s.generators, "generators").unwrap();
        assert_eq!(e[0].0.to_string(), "g:a + 1/2*m:0.3");
        assert_eq!(e[0].2, "generators[0]");
    }

    #[test]
    fn schema_errors_name_the_path() {
        let bad = MINIMAL.replace(r#""step": "0.1""#, r#""step": 0.1"#);
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("spaces[1].interval.step"), "{err}");
        let bad = MINIMAL.replace(r#""states""#, r#""stats""#);
        assert!(parse(&bad).unwrap_err().to_string().contains("spaces[0]"));
    }

    #[test]
    fn composite_errors() {
        let cat = parse(MINIMAL).unwrap().catalog().unwrap();
        assert!(composite(&cat, "g:a + ").is_err());
        assert!(composite(&cat, "0.5*g:a").is_err());
        assert!(composite(&cat, "m:1.5").is_err());
        assert!(composite(&cat, "nospace").is_err());
        assert_eq!(composite(&cat, "m:0.3 + m:0.3").unwrap().to_string(), "2*m:0.3");
    }
}
