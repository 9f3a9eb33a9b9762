//! Entropy meters for systems without scaling.
//!
//! A normal system `Γ0` with known entropy is composed with the system `Γ`
//! under study. With reference states `Z0 ∈ Γ0` and `X1 ∈ Γ`,
//!
//! ```text
//! S-(X) = max { S(Z') : (X1, Z') ≺ (X, Z0) }
//! S+(X) = min { S(Z'') : (X, Z0) ≺ (X1, Z'') }
//! ```
//!
//! taken over the meter grid. Nothing here assumes comparability: the gap
//! `S+ - S-` is measured and reported.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result, Side};
use crate::normal::{entropy_key, NormalSystem};
use crate::relation::Accessibility;
use crate::scale::Scale;
use crate::state::{CompositeState, StateRef};

/// Slack for comparisons that hold exactly up to float summation.
const EXACT: f64 = 1e-9;

/// Which composites a meter closure must contain.
#[derive(Clone, Debug, Default)]
pub struct Coverage {
    pub alt_refs: Option<(StateRef, StateRef)>,
    /// `Γ×Γ` pairs and the product meter `Γ0×Γ0`.
    pub products: bool,
    /// `Γ×Γ0` with reference `(X1, Z0)`.
    pub extended: bool,
}

impl Coverage {
    pub fn full(alt_refs: Option<(StateRef, StateRef)>) -> Self {
        Coverage { alt_refs, products: true, extended: true }
    }
}

fn pair(a: &StateRef, b: &StateRef) -> CompositeState {
    CompositeState::from_parts_unchecked([(a.clone(), Scale::ONE), (b.clone(), Scale::ONE)])
}

fn join(parts: &[&StateRef]) -> CompositeState {
    CompositeState::from_parts_unchecked(parts.iter().map(|s| ((*s).clone(), Scale::ONE)))
}

/// Static description of a meter measurement.
#[derive(Clone, Debug)]
pub struct MeterSpec {
    /// States of `Γ` to be measured.
    pub system: Vec<StateRef>,
    /// Id of the normal meter space `Γ0`.
    pub meter: String,
    pub z0: StateRef,
    pub x1: StateRef,
    /// Product-meter scans use every `product_stride`-th grid state.
    pub product_stride: usize,
}

impl MeterSpec {
    pub fn new(system: Vec<StateRef>, meter: &str, z0: StateRef, x1: StateRef) -> Self {
        MeterSpec { system, meter: meter.to_string(), z0, x1, product_stride: 1 }
    }

    pub fn with_product_stride(mut self, stride: usize) -> Self {
        self.product_stride = stride.max(1);
        self
    }

    fn grid(&self, sys: &NormalSystem) -> Vec<StateRef> {
        sys.grid().iter().map(|(id, _)| sys.state(id.clone())).collect()
    }

    fn strided(&self, sys: &NormalSystem) -> Vec<StateRef> {
        self.grid(sys).into_iter().step_by(self.product_stride).collect()
    }

    /// Composites that queries of the requested coverage will touch.
    pub fn universe(&self, meter: &NormalSystem, coverage: &Coverage) -> Vec<CompositeState> {
        let grid = self.grid(meter);
        let mut out = Vec::new();
        let mut refs = vec![(self.z0.clone(), self.x1.clone())];
        if let Some(alt) = &coverage.alt_refs {
            refs.push(alt.clone());
        }
        for (z0, x1) in &refs {
            out.extend(self.system.iter().map(|x| pair(x, z0)));
            out.extend(grid.iter().map(|z| pair(x1, z)));
        }
        if coverage.products {
            let sub = self.strided(meter);
            for (i, x) in self.system.iter().enumerate() {
                for y in &self.system[i..] {
                    out.push(pair(x, y));
                    out.push(join(&[x, y, &self.z0, &self.z0]));
                }
            }
            out.push(pair(&self.x1, &self.x1));
            out.push(pair(&self.z0, &self.z0));
            for (i, z) in sub.iter().enumerate() {
                for w in &sub[i..] {
                    out.push(pair(z, w));
                    out.push(join(&[&self.x1, &self.x1, z, w]));
                }
            }
        }
        if coverage.extended {
            out.extend(grid.iter().map(|z| join(&[&self.x1, &self.z0, z])));
            out.extend(self.system.iter().map(|x| join(&[x, &self.z0, &self.z0])));
        }
        out
    }
}

/// `S-`, `S+` with their attaining meter states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub state: CompositeState,
    pub s_minus: f64,
    pub s_plus: f64,
    pub gap: f64,
    pub witness_lower: CompositeState,
    pub witness_upper: CompositeState,
    pub tol: f64,
    pub comparable: bool,
}

impl EntropyEstimate {
    pub(crate) fn new(
        state: CompositeState,
        lower: (f64, CompositeState),
        upper: (f64, CompositeState),
        tol: f64,
    ) -> Self {
        let gap = upper.0 - lower.0;
        EntropyEstimate {
            state,
            s_minus: lower.0,
            s_plus: upper.0,
            gap,
            witness_lower: lower.1,
            witness_upper: upper.1,
            tol,
            comparable: gap <= 2.0 * tol + EXACT,
        }
    }
}

/// One candidate meter reading: a meter composite and its entropy.
pub type MeterReading = (CompositeState, f64);

/// Lower and upper bound with their witnesses, if any.
pub type Bounds = (Option<(f64, CompositeState)>, Option<(f64, CompositeState)>);

/// Exhaustive scan for the double variational bounds. Ties keep the first
/// reading, so a lexicographically sorted scale gives the smallest witness.
pub fn scan_bounds(
    rel: &dyn Accessibility,
    reference: &CompositeState,
    meter_ref: &CompositeState,
    target: &CompositeState,
    scale: &[MeterReading],
) -> Result<Bounds> {
    let measured = target.compose(meter_ref);
    let mut lower: Option<(f64, CompositeState)> = None;
    let mut upper: Option<(f64, CompositeState)> = None;
    for (m, s) in scale {
        let probe = reference.compose(m);
        if rel.precedes(&probe, &measured)?
            && lower.as_ref().is_none_or(|(best, _)| entropy_key(*s) > entropy_key(*best))
        {
            lower = Some((*s, m.clone()));
        }
        if rel.precedes(&measured, &probe)?
            && upper.as_ref().is_none_or(|(best, _)| entropy_key(*s) < entropy_key(*best))
        {
            upper = Some((*s, m.clone()));
        }
    }
    Ok((lower, upper))
}

fn resolution_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// A meter measurement bound to a relation. Immutable; measurements are
/// independent of each other.
#[derive(Clone)]
pub struct MeterSetup {
    spec: MeterSpec,
    relation: Arc<dyn Accessibility>,
    meter: NormalSystem,
    scale: Vec<MeterReading>,
    tol: f64,
}

impl std::fmt::Debug for MeterSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeterSetup").field("spec", &self.spec).field("tol", &self.tol).finish()
    }
}

impl MeterSetup {
    pub fn new(spec: MeterSpec, relation: Arc<dyn Accessibility>) -> Result<Self> {
        let catalog = relation.catalog();
        let meter = catalog.normal(&spec.meter)?.clone();
        catalog.contains(&spec.z0)?;
        catalog.contains(&spec.x1)?;
        if spec.z0.space != spec.meter {
            return Err(Error::UnknownState { space: spec.meter.clone(), state: spec.z0.to_string() });
        }
        for x in &spec.system {
            catalog.contains(x)?;
        }
        let scale = meter.grid().iter().map(|(id, s)| (meter.state(id.clone()).unit(), *s)).collect();
        let tol = meter.resolution();
        Ok(MeterSetup { spec, relation, meter, scale, tol })
    }

    pub fn spec(&self) -> &MeterSpec {
        &self.spec
    }

    pub fn relation(&self) -> &Arc<dyn Accessibility> {
        &self.relation
    }

    pub fn meter(&self) -> &NormalSystem {
        &self.meter
    }

    /// Entropy resolution of the meter grid.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn meter_scale(&self) -> &[MeterReading] {
        &self.scale
    }

    /// Same relation and meter, other reference states.
    pub fn with_refs(&self, z0: StateRef, x1: StateRef) -> Result<Self> {
        let spec = MeterSpec { z0, x1, ..self.spec.clone() };
        MeterSetup::new(spec, self.relation.clone())
    }

    fn s_meter(&self, z: &StateRef) -> Result<f64> {
        self.meter.entropy(&z.state)
    }

    /// Which sides of the bracketing assumption hold for each system state.
    pub fn check_bracketing(&self) -> Result<BracketReport> {
        let mut rows = Vec::new();
        for x in &self.spec.system {
            let (lo, hi) =
                scan_bounds(&*self.relation, &self.spec.x1.unit(), &self.spec.z0.unit(), &x.unit(), &self.scale)?;
            rows.push(BracketCheck { state: x.clone(), lower: lo.is_some(), upper: hi.is_some() });
        }
        Ok(BracketReport { rows })
    }

    pub fn measure(&self, x: &StateRef) -> Result<EntropyEstimate> {
        self.measure_composite(&x.unit(), &self.spec.x1.unit(), &self.spec.z0.unit(), &self.scale, self.tol)
    }

    /// General form: `reference` plays `X1`, `meter_ref` plays `Z0`, the
    /// readings are the candidate `Z`.
    pub fn measure_composite(
        &self,
        target: &CompositeState,
        reference: &CompositeState,
        meter_ref: &CompositeState,
        scale: &[MeterReading],
        tol: f64,
    ) -> Result<EntropyEstimate> {
        let (lo, hi) = scan_bounds(&*self.relation, reference, meter_ref, target, scale)?;
        let missing = |side| Error::BracketMissing { state: target.to_string(), side };
        let lo = lo.ok_or_else(|| missing(Side::Lower))?;
        let hi = hi.ok_or_else(|| missing(Side::Upper))?;
        Ok(EntropyEstimate::new(target.clone(), lo, hi, tol))
    }

    /// Per-state table in system order.
    pub fn measure_all(&self) -> Result<Vec<EntropyEstimate>> {
        self.spec.system.iter().map(|x| self.measure(x)).collect()
    }

    /// A meter state `Z_X` with `(X, Z0) ∼ (X1, Z_X)`.
    pub fn find_equivalent_meter_state(&self, x: &StateRef) -> Result<EquivalentMeterState> {
        let est = self.measure(x)?;
        if !est.comparable {
            return Err(Error::NotComparable { state: x.to_string(), gap: est.gap, bound: 2.0 * self.tol });
        }
        let measured = pair(x, &self.spec.z0);
        let mut best = None;
        for w in [&est.witness_lower, &est.witness_upper] {
            let probe = self.spec.x1.unit().compose(w);
            let forward = self.relation.precedes(&measured, &probe)?;
            let backward = self.relation.precedes(&probe, &measured)?;
            let z = w.parts()[0].state.clone();
            let entropy = self.s_meter(&z)?;
            let cand = EquivalentMeterState { state: z, entropy, forward, backward };
            if forward && backward {
                return Ok(cand);
            }
            best.get_or_insert(cand);
        }
        Ok(best.expect("two witnesses scanned"))
    }

    fn product_scale(&self) -> Result<(Vec<MeterReading>, f64)> {
        let sub: Vec<(StateRef, f64)> = self
            .meter
            .grid()
            .iter()
            .step_by(self.spec.product_stride)
            .map(|(id, s)| (self.meter.state(id.clone()), *s))
            .collect();
        let mut readings = Vec::new();
        for (i, (z, sz)) in sub.iter().enumerate() {
            for (w, sw) in &sub[i..] {
                readings.push((pair(z, w), sz + sw));
            }
        }
        readings.sort_by(|a, b| a.0.cmp(&b.0));
        let tol = resolution_of(readings.iter().map(|r| r.1));
        Ok((readings, tol))
    }

    /// Checks equality of the bounds, the entropy property, additivity and
    /// the reference-shift identity.
    pub fn verify_meter_laws(&self, alt_refs: Option<(StateRef, StateRef)>) -> Result<MeterLawsReport> {
        let tol = self.tol;
        let states = &self.spec.system;
        let mut report = MeterLawsReport::default();

        let mut estimates = Vec::new();
        for x in states {
            match self.measure(x) {
                Ok(e) => estimates.push(e),
                Err(e @ Error::BracketMissing { .. }) => {
                    report.all_inapplicable(&format!("bracketing fails: {e}"));
                    return Ok(report);
                }
                Err(e) => return Err(e),
            }
        }
        report.rows = estimates.clone();

        // comparability of every (X, Z0) with every (X1, Z)
        for x in states {
            let measured = pair(x, &self.spec.z0);
            for (m, _) in &self.scale {
                let probe = self.spec.x1.unit().compose(m);
                if !self.relation.classify(&measured, &probe)?.comparable() {
                    report.comparable_everywhere = false;
                    report.all_inapplicable(&format!("comparability fails: {measured} and {probe} are incomparable"));
                    return Ok(report);
                }
            }
        }
        report.comparable_everywhere = true;

        let max_gap = estimates.iter().map(|e| e.gap).fold(0.0, f64::max);
        report.equality = CheckOutcome::bounded(max_gap, 2.0 * tol, "max S+ - S-");

        let s: Vec<f64> = estimates.iter().map(|e| e.s_minus).collect();
        let mut violations = 0;
        let mut checked = 0;
        for (i, x) in states.iter().enumerate() {
            for (j, y) in states.iter().enumerate() {
                checked += 1;
                let derived = self.relation.precedes(&x.unit(), &y.unit())?;
                let forward_ok = !derived || s[i] <= s[j] + 2.0 * tol;
                let backward_ok = entropy_key(s[i]) > entropy_key(s[j]) || derived;
                if !(forward_ok && backward_ok) {
                    violations += 1;
                }
            }
        }
        report.entropy_property = CheckOutcome::count(violations, checked, "X ≺ Y iff S(X) ≤ S(Y)");

        report.additivity = self.additivity(&s, tol)?;

        if let Some((z0_alt, x1_alt)) = alt_refs {
            report.reference_shift = self.reference_shift(&estimates, &z0_alt, &x1_alt)?;
        } else {
            report.reference_shift = CheckOutcome::inapplicable("no alternative references supplied");
        }
        Ok(report)
    }

    fn additivity(&self, s: &[f64], tol: f64) -> Result<CheckOutcome> {
        let states = &self.spec.system;
        let mut pairs = Vec::new();
        for i in 0..states.len() {
            for j in i..states.len() {
                pairs.push((pair(&states[i], &states[j]), s[i] + s[j]));
            }
        }
        let mut violations = 0;
        let mut checked = 0;
        for (a, sa) in &pairs {
            for (b, sb) in &pairs {
                let derived = match self.relation.precedes(a, b) {
                    Ok(d) => d,
                    Err(Error::OutsideUniverse(c)) => {
                        return Ok(CheckOutcome::inapplicable(&format!("product {c} outside the universe")))
                    }
                    Err(e) => return Err(e),
                };
                checked += 1;
                let forward_ok = !derived || *sa <= *sb + 4.0 * tol;
                let backward_ok = entropy_key(*sa) > entropy_key(*sb) || derived;
                if !(forward_ok && backward_ok) {
                    violations += 1;
                }
            }
        }
        Ok(CheckOutcome::count(violations, checked, "(X,Y) ≺ (X',Y') iff S(X)+S(Y) ≤ S(X')+S(Y')"))
    }

    fn reference_shift(
        &self,
        estimates: &[EntropyEstimate],
        z0_alt: &StateRef,
        x1_alt: &StateRef,
    ) -> Result<CheckOutcome> {
        let tol = self.tol;
        let alt = self.with_refs(z0_alt.clone(), x1_alt.clone())?;
        let shifts = self
            .spec
            .system
            .iter()
            .zip(estimates)
            .map(|(x, e)| alt.measure(x).map(|a| a.s_minus - e.s_minus))
            .collect::<Result<Vec<f64>>>()?;
        if shifts.is_empty() {
            return Ok(CheckOutcome::pass(0.0, "no states"));
        }
        let lo = shifts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = shifts.iter().sum::<f64>() / shifts.len() as f64;
        // S(X) + S(Z0~) = S(X1~) + S~(X)
        let expected = self.s_meter(z0_alt)? - self.measure(x1_alt)?.s_minus;
        let ok = hi - lo <= 4.0 * tol + EXACT && (mean - expected).abs() <= 4.0 * tol + EXACT;
        Ok(CheckOutcome {
            status: if ok { Status::Pass } else { Status::Fail },
            value: Some(mean),
            detail: format!("shift {mean} (spread {}), expected {expected} from the reference identity", hi - lo),
        })
    }

    /// Candidates built from the measured bounds themselves:
    /// `S∓(X) - S(Z0) + S(Z)`. Both are normalized on `(X1, Z)`.
    pub fn envelope_candidates(&self) -> Result<Vec<MonotoneCandidate>> {
        let s_z0 = self.s_meter(&self.spec.z0)?;
        let mut lower = BTreeMap::new();
        let mut upper = BTreeMap::new();
        for x in &self.spec.system {
            if let Ok(e) = self.measure(x) {
                lower.insert(x.clone(), e.s_minus);
                upper.insert(x.clone(), e.s_plus);
            }
        }
        let x1 = self.spec.x1.clone();
        let meter = self.meter.clone();
        let make = |name: &str, table: BTreeMap<StateRef, f64>| {
            let meter = meter.clone();
            let x1 = x1.clone();
            MonotoneCandidate::new(name, move |x: &StateRef, z: &StateRef| {
                let sz = meter.entropy(&z.state).ok()?;
                if *x == x1 {
                    return Some(sz);
                }
                Some(table.get(x)? - s_z0 + sz)
            })
        };
        Ok(vec![make("lower-envelope", lower), make("upper-envelope", upper)])
    }

    /// Checks the bound laws that hold without comparability.
    pub fn check_bound_laws(&self, candidates: &[MonotoneCandidate]) -> Result<BoundLawsReport> {
        let states = &self.spec.system;
        let mut est: BTreeMap<StateRef, EntropyEstimate> = BTreeMap::new();
        let mut skipped = Vec::new();
        for x in states {
            match self.measure(x) {
                Ok(e) => {
                    est.insert(x.clone(), e);
                }
                Err(e @ Error::BracketMissing { .. }) => skipped.push(e.to_string()),
                Err(e) => return Err(e),
            }
        }

        // (1) monotonicity
        let mut v1 = 0;
        let mut n1 = 0;
        for (x, ex) in &est {
            for (y, ey) in &est {
                if self.relation.precedes(&x.unit(), &y.unit())? {
                    n1 += 1;
                    if ex.s_minus > ey.s_minus + EXACT || ex.s_plus > ey.s_plus + EXACT {
                        v1 += 1;
                    }
                }
            }
        }
        let monotonicity = CheckOutcome::count(v1, n1, "X ≺ Y implies S±(X) ≤ S±(Y)");

        // (2) S+(X) ≤ S-(Y) forces X ≺ Y
        let mut v2 = 0;
        let mut n2 = 0;
        for (x, ex) in &est {
            for (y, ey) in &est {
                if entropy_key(ex.s_plus) <= entropy_key(ey.s_minus) {
                    n2 += 1;
                    if !self.relation.precedes(&x.unit(), &y.unit())? {
                        v2 += 1;
                    }
                }
            }
        }
        let separation = CheckOutcome::count(v2, n2, "S+(X) ≤ S-(Y) implies X ≺ Y");

        let composite_bounds = self.composite_bound_check(&est)?;
        let (reference_values, sandwich) = self.reference_value_check(&est, candidates)?;
        Ok(BoundLawsReport {
            skipped,
            rows: est.into_values().collect(),
            monotonicity,
            separation,
            composite_bounds,
            reference_values,
            sandwich,
        })
    }

    fn composite_bound_check(&self, est: &BTreeMap<StateRef, EntropyEstimate>) -> Result<CheckOutcome> {
        let (scale, ptol) = self.product_scale()?;
        let slack = if self.spec.product_stride > 1 { 2.0 * ptol } else { 0.0 } + EXACT;
        let reference = pair(&self.spec.x1, &self.spec.x1);
        let meter_ref = pair(&self.spec.z0, &self.spec.z0);
        let keys: Vec<&StateRef> = est.keys().collect();
        let mut violations = 0;
        let mut checked = 0;
        let mut worst = 0.0f64;
        for i in 0..keys.len() {
            for j in i..keys.len() {
                let target = pair(keys[i], keys[j]);
                let e = match self.measure_composite(&target, &reference, &meter_ref, &scale, ptol) {
                    Ok(e) => e,
                    Err(Error::OutsideUniverse(c)) => {
                        return Ok(CheckOutcome::inapplicable(&format!("product {c} outside the universe")))
                    }
                    Err(Error::BracketMissing { state, side }) => {
                        return Ok(CheckOutcome::inapplicable(&format!(
                            "product meter misses the {side} bound of {state}"
                        )))
                    }
                    Err(e) => return Err(e),
                };
                let (ex, ey) = (&est[keys[i]], &est[keys[j]]);
                let chain =
                    [ex.s_minus + ey.s_minus - e.s_minus, e.s_minus - e.s_plus, e.s_plus - (ex.s_plus + ey.s_plus)];
                checked += 1;
                let excess = chain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(excess);
                if excess > slack {
                    violations += 1;
                }
            }
        }
        let mut out = CheckOutcome::count(violations, checked, "S-(X)+S-(Y) ≤ S-(X,Y) ≤ S+(X,Y) ≤ S+(X)+S+(Y)");
        out.value = Some(worst.max(0.0));
        Ok(out)
    }

    fn reference_value_check(
        &self,
        est: &BTreeMap<StateRef, EntropyEstimate>,
        candidates: &[MonotoneCandidate],
    ) -> Result<(CheckOutcome, Vec<SandwichRow>)> {
        let tol = self.tol;
        let reference = pair(&self.spec.x1, &self.spec.z0);
        let z0 = self.spec.z0.unit();
        let mut worst = 0.0f64;
        let mut checked = 0;
        let mut violations = 0;
        let inapplicable = |e: Error| match e {
            Error::OutsideUniverse(c) => Ok(format!("composite {c} outside the universe")),
            Error::BracketMissing { state, side } => Ok(format!("no {side} bound for {state}")),
            other => Err(other),
        };
        for (x, ex) in est {
            let target = pair(x, &self.spec.z0);
            match self.measure_composite(&target, &reference, &z0, &self.scale, tol) {
                Ok(e) => {
                    checked += 1;
                    let dev = (e.s_minus - ex.s_minus).abs().max((e.s_plus - ex.s_plus).abs());
                    worst = worst.max(dev);
                    if dev > 2.0 * tol + EXACT {
                        violations += 1;
                    }
                }
                Err(e) => return Ok((CheckOutcome::inapplicable(&inapplicable(e)?), Vec::new())),
            }
        }
        for (m, sz) in &self.scale {
            let target = self.spec.x1.unit().compose(m);
            match self.measure_composite(&target, &reference, &z0, &self.scale, tol) {
                Ok(e) => {
                    checked += 1;
                    let dev = (e.s_minus - sz).abs().max((e.s_plus - sz).abs());
                    worst = worst.max(dev);
                    if dev > 2.0 * tol + EXACT {
                        violations += 1;
                    }
                }
                Err(e) => return Ok((CheckOutcome::inapplicable(&inapplicable(e)?), Vec::new())),
            }
        }
        let mut reference_values = CheckOutcome::count(violations, checked, "S±(X,Z0) = S±(X) and S±(X1,Z) = S(Z)");
        reference_values.value = Some(worst);

        let mut sandwich = Vec::new();
        for cand in candidates {
            sandwich.push(self.sandwich_row(est, cand)?);
        }
        if sandwich.iter().any(|r| r.admissible && !r.within_bounds) {
            reference_values.status = Status::Fail;
            reference_values.detail.push_str("; an admissible monotone function escapes [S-, S+]");
        }
        Ok((reference_values, sandwich))
    }

    fn sandwich_row(&self, est: &BTreeMap<StateRef, EntropyEstimate>, cand: &MonotoneCandidate) -> Result<SandwichRow> {
        let meter_states: Vec<StateRef> = self.scale.iter().map(|(m, _)| m.parts()[0].state.clone()).collect();
        let mut normalized = true;
        for (z, (_, sz)) in meter_states.iter().zip(&self.scale) {
            match cand.eval(&self.spec.x1, z) {
                Some(v) if (v - sz).abs() <= EXACT => {}
                _ => normalized = false,
            }
        }
        // monotonicity on the measured composites (X, Z0) and (X1, Z)
        let mut points: Vec<(CompositeState, Option<f64>)> = Vec::new();
        for x in est.keys() {
            points.push((pair(x, &self.spec.z0), cand.eval(x, &self.spec.z0)));
        }
        for z in &meter_states {
            points.push((pair(&self.spec.x1, z), cand.eval(&self.spec.x1, z)));
        }
        let mut monotone = true;
        for (a, va) in &points {
            for (b, vb) in &points {
                if let (Some(va), Some(vb)) = (va, vb) {
                    if self.relation.precedes(a, b)? && *va > *vb + EXACT {
                        monotone = false;
                    }
                } else {
                    monotone = false;
                }
            }
        }
        let mut within = true;
        let mut tight_lower = true;
        for (x, e) in est {
            match cand.eval(x, &self.spec.z0) {
                Some(v) => {
                    if v < e.s_minus - EXACT || v > e.s_plus + EXACT {
                        within = false;
                    }
                    if (v - e.s_minus).abs() > EXACT {
                        tight_lower = false;
                    }
                }
                None => within = false,
            }
        }
        Ok(SandwichRow {
            candidate: cand.name.clone(),
            admissible: normalized && monotone,
            normalized,
            monotone,
            within_bounds: within,
            tight_lower,
        })
    }
}

/// A user-registered function `Ŝ(X, Z)` on `Γ×Γ0`.
#[derive(Clone)]
pub struct MonotoneCandidate {
    pub name: String,
    f: Arc<dyn Fn(&StateRef, &StateRef) -> Option<f64> + Send + Sync>,
}

impl MonotoneCandidate {
    pub fn new(name: &str, f: impl Fn(&StateRef, &StateRef) -> Option<f64> + Send + Sync + 'static) -> Self {
        MonotoneCandidate { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: &StateRef, z: &StateRef) -> Option<f64> {
        (self.f)(x, z)
    }
}

impl std::fmt::Debug for MonotoneCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneCandidate").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalentMeterState {
    pub state: StateRef,
    pub entropy: f64,
    /// `(X, Z0) ≺ (X1, Z_X)`
    pub forward: bool,
    /// `(X1, Z_X) ≺ (X, Z0)`
    pub backward: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketCheck {
    pub state: StateRef,
    pub lower: bool,
    pub upper: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub rows: Vec<BracketCheck>,
}

impl BracketReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.lower && r.upper)
    }

    pub fn failures(&self) -> Vec<(StateRef, Side)> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !r.lower {
                out.push((r.state.clone(), Side::Lower));
            }
            if !r.upper {
                out.push((r.state.clone(), Side::Upper));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct CheckOutcome {
    pub status: Status,
    pub value: Option<f64>,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(value: f64, detail: &str) -> Self {
        CheckOutcome { status: Status::Pass, value: Some(value), detail: detail.to_string() }
    }

    fn inapplicable(detail: &str) -> Self {
        CheckOutcome { status: Status::Inapplicable, value: None, detail: detail.to_string() }
    }

    fn bounded(value: f64, bound: f64, what: &str) -> Self {
        let status = if value <= bound + EXACT { Status::Pass } else { Status::Fail };
        CheckOutcome { status, value: Some(value), detail: format!("{what} = {value} (bound {bound})") }
    }

    fn count(violations: usize, checked: usize, what: &str) -> Self {
        let status = if violations == 0 { Status::Pass } else { Status::Fail };
        CheckOutcome {
            status,
            value: Some(violations as f64),
            detail: format!("{what}: {violations} violation(s) in {checked} instance(s)"),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Pass or not applicable.
    pub fn not_failed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct MeterLawsReport {
    pub comparable_everywhere: bool,
    pub rows: Vec<EntropyEstimate>,
    pub equality: CheckOutcome,
    pub entropy_property: CheckOutcome,
    pub additivity: CheckOutcome,
    pub reference_shift: CheckOutcome,
}

impl MeterLawsReport {
    fn all_inapplicable(&mut self, why: &str) {
        for c in [&mut self.equality, &mut self.entropy_property, &mut self.additivity, &mut self.reference_shift] {
            *c = CheckOutcome::inapplicable(why);
        }
    }

    pub fn checks(&self) -> [(&'static str, &CheckOutcome); 4] {
        [
            ("equality", &self.equality),
            ("entropy-property", &self.entropy_property),
            ("additivity", &self.additivity),
            ("reference-shift", &self.reference_shift),
        ]
    }

    pub fn failed(&self) -> bool {
        self.checks().iter().any(|(_, c)| c.status == Status::Fail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichRow {
    pub candidate: String,
    pub admissible: bool,
    pub normalized: bool,
    pub monotone: bool,
    pub within_bounds: bool,
    /// Equal to `S-` at every `(X, Z0)`.
    pub tight_lower: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundLawsReport {
    pub skipped: Vec<String>,
    pub rows: Vec<EntropyEstimate>,
    pub monotonicity: CheckOutcome,
    pub separation: CheckOutcome,
    pub composite_bounds: CheckOutcome,
    pub reference_values: CheckOutcome,
    pub sandwich: Vec<SandwichRow>,
}

impl BoundLawsReport {
    pub fn parts(&self) -> [(&'static str, &CheckOutcome); 4] {
        [
            ("monotonicity", &self.monotonicity),
            ("separation", &self.separation),
            ("composite-bounds", &self.composite_bounds),
            ("reference-values", &self.reference_values),
        ]
    }

    pub fn failed(&self) -> bool {
        self.parts().iter().any(|(_, c)| c.status == Status::Fail)
    }
}
