//! Joint-potential relations: `(X, Z) ≺ (X', Z')` iff
//! `f(X) + S(Z) ≤ f(X') + S(Z')`.
//!
//! Every generic state carries a potential `f`, normal parts contribute
//! `scale · S`. The relation satisfies reflexivity, transitivity,
//! consistency and cancellation by construction and gives closed-form
//! answers for every composite, which makes it the ground truth for
//! entropy-meter fixtures.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::normal::entropy_key;
use crate::relation::Accessibility;
use crate::scale::Scale;
use crate::state::{CompositeState, SpaceCatalog, StateRef};

#[derive(Clone, Debug)]
pub struct PotentialRelation {
    catalog: Arc<SpaceCatalog>,
    potential: BTreeMap<StateRef, f64>,
}

impl PotentialRelation {
    pub fn new(catalog: Arc<SpaceCatalog>, potential: BTreeMap<StateRef, f64>) -> Result<Self> {
        for s in potential.keys() {
            catalog.contains(s)?;
        }
        Ok(PotentialRelation { catalog, potential })
    }

    pub fn catalog_arc(&self) -> &Arc<SpaceCatalog> {
        &self.catalog
    }

    pub fn potential(&self, s: &StateRef) -> Option<f64> {
        self.potential.get(s).copied()
    }

    /// `Σ scale · (f or S)` over the parts, in canonical order.
    pub fn value(&self, c: &CompositeState) -> Result<f64> {
        let mut sum = 0.0;
        for p in c.parts() {
            let v = if self.catalog.is_normal(&p.state.space) {
                self.catalog.normal(&p.state.space)?.entropy(&p.state.state)?
            } else {
                self.potential.get(&p.state).copied().ok_or_else(|| Error::UnknownState {
                    space: p.state.space.clone(),
                    state: p.state.state.to_string(),
                })?
            };
            sum += p.scale.to_f64() * v;
        }
        Ok(sum)
    }

    /// Generator edges between `(x1, Z)` and `(X, z0)` in whichever
    /// directions the potential allows, for every system state `X` and
    /// meter state `Z`. This is the finite evidence an experimenter would
    /// record with an entropy meter.
    pub fn meter_generators(
        &self,
        system: &[StateRef],
        meter: &[StateRef],
        z0: &StateRef,
        x1: &StateRef,
    ) -> Result<Vec<(CompositeState, CompositeState)>> {
        let mut out = Vec::new();
        for x in system {
            let xz0 = CompositeState::from_parts_unchecked([(x.clone(), Scale::ONE), (z0.clone(), Scale::ONE)]);
            for z in meter {
                let x1z = CompositeState::from_parts_unchecked([(x1.clone(), Scale::ONE), (z.clone(), Scale::ONE)]);
                if xz0 == x1z {
                    continue;
                }
                if self.precedes(&x1z, &xz0)? {
                    out.push((x1z.clone(), xz0.clone()));
                }
                if self.precedes(&xz0, &x1z)? {
                    out.push((xz0.clone(), x1z));
                }
            }
        }
        Ok(out)
    }
}

impl Accessibility for PotentialRelation {
    fn catalog(&self) -> &SpaceCatalog {
        &self.catalog
    }

    fn precedes(&self, x: &CompositeState, y: &CompositeState) -> Result<bool> {
        let mx = x.matter();
        let my = y.matter();
        for space in mx.keys().chain(my.keys()) {
            let a = mx.get(space).copied().unwrap_or(Scale::ZERO);
            let b = my.get(space).copied().unwrap_or(Scale::ZERO);
            if a != b {
                return Err(Error::MatterMismatch { space: space.to_string(), lhs: a.to_string(), rhs: b.to_string() });
            }
        }
        Ok(entropy_key(self.value(x)?) <= entropy_key(self.value(y)?))
    }
}
