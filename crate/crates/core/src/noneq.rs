//! Entropy bounds for states outside equilibrium.
//!
//! The equilibrium states `Γ` of a normal system sit inside a larger space
//! `Γ̂`. For `X ∈ Γ̂`,
//!
//! ```text
//! S-(X) = max { S(X') : X' ∈ Γ, X' ≺ X }
//! S+(X) = min { S(X'') : X'' ∈ Γ, X ≺ X'' }
//! ```
//!
//! over the equilibrium grid.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result, Side};
use crate::meter::{scan_bounds, Bounds, Coverage, EntropyEstimate, MeterReading, MeterSetup, MeterSpec};
use crate::normal::{entropy_key, NormalSystem};
use crate::relation::{Accessibility, AccessibilityModel, ClosedModel, ModelConfig};
use crate::state::{CompositeState, SpaceCatalog, SpaceKind, StateRef};

const EXACT: f64 = 1e-9;

/// `Γ̂ = hat states ∪ equilibrium grid`, with a closed relation over it.
#[derive(Clone, Debug)]
pub struct ExtendedSpace {
    relation: Arc<ClosedModel>,
    hat: Vec<StateRef>,
    eq: NormalSystem,
    scale: Vec<MeterReading>,
}

impl ExtendedSpace {
    /// Closes `generators` over `Γ̂`. When `cross_check` names meter
    /// references `(Z0, X1)` in the equilibrium space, the universe also
    /// covers the composites of a measurement with `Γ` as its own meter.
    pub fn build(
        catalog: Arc<SpaceCatalog>,
        hat_space: &str,
        eq_space: &str,
        generators: &[(CompositeState, CompositeState)],
        cross_check: Option<(StateRef, StateRef)>,
    ) -> Result<Self> {
        let eq = catalog.normal(eq_space)?.clone();
        let hat: Vec<StateRef> = match catalog.get(hat_space)? {
            SpaceKind::Generic(g) => g.states.iter().map(|s| StateRef::named(hat_space, s.as_str())).collect(),
            SpaceKind::Normal(_) => {
                return Err(Error::InvalidStateSet {
                    space: hat_space.to_string(),
                    reason: "must be a generic space".into(),
                })
            }
        };
        let mut model = AccessibilityModel::new(catalog, ModelConfig::explicit());
        let scale: Vec<MeterReading> = eq.grid().iter().map(|(id, s)| (eq.state(id.clone()).unit(), *s)).collect();
        model.extend_universe(hat.iter().map(StateRef::unit))?;
        model.extend_universe(scale.iter().map(|(m, _)| m.clone()))?;
        if let Some((z0, x1)) = &cross_check {
            let spec = Self::meter_spec_for(&hat, &eq, z0.clone(), x1.clone());
            model.extend_universe(spec.universe(&eq, &Coverage::default()))?;
        }
        for (i, (from, to)) in generators.iter().enumerate() {
            model.add_generator(from.clone(), to.clone(), &format!("g{i}"))?;
        }
        let relation = Arc::new(model.close()?);
        Ok(ExtendedSpace { relation, hat, eq, scale })
    }

    pub fn relation(&self) -> &Arc<ClosedModel> {
        &self.relation
    }

    pub fn equilibrium(&self) -> &NormalSystem {
        &self.eq
    }

    /// Hat states followed by the equilibrium grid.
    pub fn states(&self) -> Vec<StateRef> {
        let mut out = self.hat.clone();
        out.extend(self.scale.iter().map(|(m, _)| m.parts()[0].state.clone()));
        out
    }

    pub fn tol(&self) -> f64 {
        self.eq.resolution()
    }

    /// Disagreements between the closed relation and the entropy order on
    /// the equilibrium grid.
    pub fn equilibrium_disagreements(&self) -> Result<usize> {
        let mut bad = 0;
        for (a, sa) in &self.scale {
            for (b, sb) in &self.scale {
                if self.relation.precedes(a, b)? != (entropy_key(*sa) <= entropy_key(*sb)) {
                    bad += 1;
                }
            }
        }
        Ok(bad)
    }

    fn bounds(&self, x: &StateRef) -> Result<Bounds> {
        let none = CompositeState::default();
        scan_bounds(&*self.relation, &none, &none, &x.unit(), &self.scale)
    }

    pub fn check_bracketing(&self) -> Result<Vec<BracketRow>> {
        self.states()
            .into_iter()
            .map(|x| {
                let (lo, hi) = self.bounds(&x)?;
                let state = |b: Option<(f64, CompositeState)>| b.map(|(_, c)| c.parts()[0].state.clone());
                Ok(BracketRow { state: x, lower: state(lo), upper: state(hi) })
            })
            .collect()
    }

    pub fn s_hat(&self, x: &StateRef) -> Result<EntropyEstimate> {
        let (lo, hi) = self.bounds(x)?;
        let missing = |side| Error::BracketMissing { state: x.to_string(), side };
        let lo = lo.ok_or_else(|| missing(Side::Lower))?;
        let hi = hi.ok_or_else(|| missing(Side::Upper))?;
        Ok(EntropyEstimate::new(x.unit(), lo, hi, self.tol()))
    }

    /// Estimates for every state whose brackets exist.
    pub fn table(&self) -> Result<Vec<EntropyEstimate>> {
        let mut out = Vec::new();
        for x in self.states() {
            match self.s_hat(&x) {
                Ok(e) => out.push(e),
                Err(Error::BracketMissing { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Violations of `X ≺ Y ⇒ S±(X) ≤ S±(Y)` among bracketed states.
    pub fn monotonicity_violations(&self) -> Result<usize> {
        let rows = self.table()?;
        let mut bad = 0;
        for a in &rows {
            for b in &rows {
                if self.relation.precedes(&a.state, &b.state)?
                    && (a.s_minus > b.s_minus + EXACT || a.s_plus > b.s_plus + EXACT)
                {
                    bad += 1;
                }
            }
        }
        Ok(bad)
    }

    /// Checks a function on `Γ̂` against the bounds. It is admissible when
    /// it is monotone on the bracketed states and equals `S` on `Γ`.
    pub fn sandwich(&self, name: &str, f: impl Fn(&StateRef) -> Option<f64>) -> Result<HatSandwich> {
        let rows = self.table()?;
        let mut agrees_on_eq = true;
        for (m, s) in &self.scale {
            match f(&m.parts()[0].state) {
                Some(v) if (v - s).abs() <= EXACT => {}
                _ => agrees_on_eq = false,
            }
        }
        let values: Vec<Option<f64>> = rows.iter().map(|r| f(&r.state.parts()[0].state)).collect();
        let mut monotone = values.iter().all(Option::is_some);
        let mut within = true;
        for (i, a) in rows.iter().enumerate() {
            let Some(va) = values[i] else { continue };
            if va < a.s_minus - EXACT || va > a.s_plus + EXACT {
                within = false;
            }
            for (j, b) in rows.iter().enumerate() {
                if let Some(vb) = values[j] {
                    if self.relation.precedes(&a.state, &b.state)? && va > vb + EXACT {
                        monotone = false;
                    }
                }
            }
        }
        Ok(HatSandwich { candidate: name.to_string(), admissible: agrees_on_eq && monotone, within_bounds: within })
    }

    fn meter_spec_for(hat: &[StateRef], eq: &NormalSystem, z0: StateRef, x1: StateRef) -> MeterSpec {
        let mut system = hat.to_vec();
        system.extend(eq.grid().iter().map(|(id, _)| eq.state(id.clone())));
        MeterSpec::new(system, eq.id(), z0, x1)
    }

    /// Measures `Γ̂` with `Γ` as its own entropy meter and compares with
    /// [`Self::s_hat`]. The additive constant is the median difference over
    /// states comparable in both measurements.
    pub fn cross_check(&self, z0: StateRef, x1: StateRef) -> Result<CrossCheckReport> {
        let spec = Self::meter_spec_for(&self.hat, &self.eq, z0, x1);
        let setup = MeterSetup::new(spec.clone(), self.relation.clone())?;
        let tol = setup.tol().max(self.tol());
        let mut rows = Vec::new();
        for x in &spec.system {
            let hat = match self.s_hat(x) {
                Ok(e) => e,
                Err(Error::BracketMissing { .. }) => continue,
                Err(e) => return Err(e),
            };
            let meter = match setup.measure(x) {
                Ok(e) => e,
                Err(Error::BracketMissing { .. }) => continue,
                Err(e) => return Err(e),
            };
            rows.push(CrossCheckRow {
                state: x.clone(),
                comparable: hat.comparable && meter.comparable,
                hat: (hat.s_minus, hat.s_plus),
                meter: (meter.s_minus, meter.s_plus),
                residual: 0.0,
            });
        }
        let mut diffs: Vec<f64> = rows.iter().filter(|r| r.comparable).map(|r| r.meter.0 - r.hat.0).collect();
        if diffs.is_empty() {
            diffs = rows.iter().map(|r| r.meter.0 - r.hat.0).collect();
        }
        let constant = median(&mut diffs);
        for r in &mut rows {
            r.residual = (r.meter.0 - r.hat.0 - constant).abs().max((r.meter.1 - r.hat.1 - constant).abs());
        }
        let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        Ok(CrossCheckReport {
            constant,
            max_residual,
            bound: 4.0 * tol,
            passed: max_residual <= 4.0 * tol + EXACT,
            rows,
        })
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketRow {
    pub state: StateRef,
    pub lower: Option<StateRef>,
    pub upper: Option<StateRef>,
}

impl BracketRow {
    pub fn bracketed(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HatSandwich {
    pub candidate: String,
    pub admissible: bool,
    pub within_bounds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheckRow {
    pub state: StateRef,
    pub comparable: bool,
    pub hat: (f64, f64),
    pub meter: (f64, f64),
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheckReport {
    pub constant: f64,
    pub max_residual: f64,
    pub bound: f64,
    pub passed: bool,
    pub rows: Vec<CrossCheckRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn hat(name: &str) -> StateRef {
        StateRef::named("hat", name)
    }

    #[test]
    fn wedge_bounds() {
        let ext = fixtures::wedge(false).unwrap();
        let e = ext.s_hat(&hat("xhat")).unwrap();
        assert_eq!((e.s_minus, e.s_plus), (0.4, 0.6));
        assert!(!e.comparable);
        assert_eq!(e.witness_lower, StateRef::at("eq", 0.4).unit());
    }

    #[test]
    fn equilibrium_states_read_their_entropy() {
        let ext = fixtures::wedge(false).unwrap();
        for (id, s) in ext.equilibrium().grid() {
            let e = ext.s_hat(&ext.equilibrium().state(id.clone())).unwrap();
            assert_eq!((e.s_minus, e.s_plus), (*s, *s));
        }
        assert_eq!(ext.equilibrium_disagreements().unwrap(), 0);
    }

    #[test]
    fn chain_tightens_upper_bound() {
        let ext = fixtures::wedge(true).unwrap();
        let e = ext.s_hat(&hat("xhat")).unwrap();
        assert_eq!((e.s_minus, e.s_plus), (0.4, 0.55));
        let y = ext.s_hat(&hat("yhat")).unwrap();
        assert!(y.s_minus >= e.s_minus && y.s_plus <= 0.55);
        assert_eq!(ext.monotonicity_violations().unwrap(), 0);
    }

    #[test]
    fn missing_upper_bracket_is_flagged() {
        let ext = fixtures::wedge_open().unwrap();
        let rows = ext.check_bracketing().unwrap();
        let row = rows.iter().find(|r| r.state == hat("xhat")).unwrap();
        assert!(row.lower.is_some() && row.upper.is_none());
        assert!(matches!(ext.s_hat(&hat("xhat")), Err(Error::BracketMissing { side: Side::Upper, .. })));
    }

    #[test]
    fn sandwich_midpoint_is_admissible() {
        let ext = fixtures::wedge(false).unwrap();
        let eq = ext.equilibrium().clone();
        let f = |x: &StateRef| if x.space == "eq" { eq.entropy(&x.state).ok() } else { Some(0.5) };
        let row = ext.sandwich("mid", f).unwrap();
        assert!(row.admissible && row.within_bounds);
        let g = |x: &StateRef| if x.space == "eq" { eq.entropy(&x.state).ok() } else { Some(0.9) };
        let row = ext.sandwich("high", g).unwrap();
        assert!(!row.admissible && !row.within_bounds);
    }

    #[test]
    fn cross_check_constant() {
        let ext = fixtures::wedge_cross_checked().unwrap();
        let (z0, x1) = fixtures::wedge_cross_refs();
        let report = ext.cross_check(z0, x1).unwrap();
        assert!((report.constant - 0.1).abs() < 1e-9, "{report:?}");
        assert!(report.passed, "{report:?}");
    }
}
