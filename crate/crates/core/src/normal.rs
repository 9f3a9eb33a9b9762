//! Scalable normal systems with an explicit entropy function.
//!
//! On scaled products of normal systems the accessibility relation is decided
//! analytically: a composite precedes another iff the amount of matter in
//! every space agrees and the total entropy does not decrease. The canonical
//! entropy is then recovered from that relation alone by bisection on the
//! mixing fraction of two reference states.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scale::{Scale, DEFAULT_DENOMINATOR_BOUND};
use crate::state::{CompositeState, StateId, StateRef};

/// Entropy values closer than this compare equal in analytic queries.
pub const ENTROPY_QUANTUM: f64 = 1e-9;

/// Default bound on gaps between neighbouring entropy values of a grid.
pub const DEFAULT_MAX_GAP: f64 = 0.1;

pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;
pub const MAX_BISECTION_ITERATIONS: usize = 60;
const MAX_DOUBLINGS: u32 = 40;

/// Integer key of an entropy value. Comparing keys is a total preorder, so
/// analytic accessibility stays exactly reflexive and transitive.
pub fn entropy_key(x: f64) -> i64 {
    (x / ENTROPY_QUANTUM).round() as i64
}

/// Named closed forms plus tabulated entropies.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "fn", rename_all = "lowercase")]
pub enum EntropyFn {
    /// `a * u + b`
    Linear { a: f64, b: f64 },
    /// `a * ln(1 + u)`
    Log1p { a: f64 },
    /// `a * u^p`
    Power { a: f64, p: f64 },
    /// Piecewise linear through `(u, S)` knots, sorted by `u`.
    Table { knots: Vec<(f64, f64)> },
    /// One value per named state of a finite space.
    Named { values: BTreeMap<String, f64> },
}

impl EntropyFn {
    pub fn linear(a: f64, b: f64) -> Self {
        EntropyFn::Linear { a, b }
    }

    pub fn log1p(a: f64) -> Self {
        EntropyFn::Log1p { a }
    }

    pub fn power(a: f64, p: f64) -> Self {
        EntropyFn::Power { a, p }
    }

    pub fn table(mut knots: Vec<(f64, f64)>) -> Self {
        knots.sort_by(|x, y| x.0.total_cmp(&y.0));
        EntropyFn::Table { knots }
    }

    fn at_coord(&self, u: f64) -> Option<f64> {
        match self {
            EntropyFn::Linear { a, b } => Some(a * u + b),
            EntropyFn::Log1p { a } => Some(a * u.ln_1p()),
            EntropyFn::Power { a, p } => Some(a * u.powf(*p)),
            EntropyFn::Table { knots } => interpolate(knots, u),
            EntropyFn::Named { .. } => None,
        }
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> Option<f64> {
    let first = knots.first()?;
    let last = knots.last()?;
    if u < first.0 || u > last.0 {
        return None;
    }
    let i = knots.partition_point(|k| k.0 <= u);
    if i == knots.len() {
        return Some(last.1);
    }
    if i == 0 {
        return Some(first.1);
    }
    let (u0, s0) = knots[i - 1];
    let (u1, s1) = knots[i];
    if u1 == u0 {
        return Some(s0);
    }
    Some(s0 + (s1 - s0) * (u - u0) / (u1 - u0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSet {
    /// `[lo, hi]`, enumerated on `lo + i * step`.
    Interval {
        lo: Scale,
        hi: Scale,
        step: Scale,
    },
    Finite(Vec<String>),
}

#[derive(Clone, Debug)]
pub struct NormalSystem {
    id: String,
    states: StateSet,
    entropy: EntropyFn,
    unit: String,
    grid: Vec<(StateId, f64)>,
}

impl NormalSystem {
    /// Interval space from float bounds, rounded onto the default
    /// denominator bound.
    pub fn interval(id: &str, lo: f64, hi: f64, step: f64, entropy: EntropyFn) -> Result<Self> {
        let b = DEFAULT_DENOMINATOR_BOUND;
        Self::interval_exact(
            id,
            Scale::from_f64_bounded(lo, b)?,
            Scale::from_f64_bounded(hi, b)?,
            Scale::from_f64_bounded(step, b)?,
            entropy,
        )
    }

    pub fn interval_exact(id: &str, lo: Scale, hi: Scale, step: Scale, entropy: EntropyFn) -> Result<Self> {
        Self::interval_with_gap(id, lo, hi, step, entropy, DEFAULT_MAX_GAP)
    }

    /// Interval space whose grid entropies may not be further apart than
    /// `max_gap` (the finite stand-in for a connected entropy range).
    pub fn interval_with_gap(
        id: &str,
        lo: Scale,
        hi: Scale,
        step: Scale,
        entropy: EntropyFn,
        max_gap: f64,
    ) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidStateSet { space: id.to_string(), reason: reason.to_string() };
        if !step.is_positive() {
            return Err(invalid("grid step must be positive"));
        }
        if hi < lo {
            return Err(invalid("upper bound below lower bound"));
        }
        if matches!(entropy, EntropyFn::Named { .. }) {
            return Err(invalid("named entropy table needs a finite state list"));
        }
        let mut grid = Vec::new();
        let mut x = lo;
        while x <= hi {
            let u = x.to_f64();
            let s = entropy.at_coord(u).ok_or_else(|| invalid("entropy undefined on part of the interval"))?;
            if !s.is_finite() {
                return Err(invalid("entropy is not finite on the interval"));
            }
            grid.push((StateId::coord(u), s));
            x = x + step;
        }
        let sys = NormalSystem {
            id: id.to_string(),
            states: StateSet::Interval { lo, hi, step },
            entropy,
            unit: "1".to_string(),
            grid,
        };
        sys.check_gaps(max_gap)?;
        Ok(sys)
    }

    pub fn finite(id: &str, values: BTreeMap<String, f64>) -> Result<Self> {
        Self::finite_with_gap(id, values, DEFAULT_MAX_GAP)
    }

    pub fn finite_with_gap(id: &str, values: BTreeMap<String, f64>, max_gap: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidStateSet { space: id.to_string(), reason: "no states".into() });
        }
        let grid = values.iter().map(|(k, v)| (StateId::name(k.clone()), *v)).collect();
        let sys = NormalSystem {
            id: id.to_string(),
            states: StateSet::Finite(values.keys().cloned().collect()),
            entropy: EntropyFn::Named { values },
            unit: "1".to_string(),
            grid,
        };
        sys.check_gaps(max_gap)?;
        Ok(sys)
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = unit.to_string();
        self
    }

    fn check_gaps(&self, bound: f64) -> Result<()> {
        let gap = self.largest_gap();
        if gap > bound + ENTROPY_QUANTUM {
            return Err(Error::DisconnectedRange { space: self.id.clone(), gap, bound });
        }
        Ok(())
    }

    fn largest_gap(&self) -> f64 {
        let mut values: Vec<f64> = self.grid.iter().map(|g| g.1).collect();
        values.sort_by(f64::total_cmp);
        values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn state_set(&self) -> &StateSet {
        &self.states
    }

    pub fn entropy_fn(&self) -> &EntropyFn {
        &self.entropy
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.states, StateSet::Interval { .. })
    }

    pub fn contains(&self, state: &StateId) -> bool {
        match (&self.states, state) {
            (StateSet::Interval { lo, hi, .. }, StateId::Coord(c)) => {
                lo.to_f64() <= c.value() && c.value() <= hi.to_f64()
            }
            (StateSet::Finite(names), StateId::Name(n)) => names.contains(n),
            _ => false,
        }
    }

    pub fn entropy(&self, state: &StateId) -> Result<f64> {
        let missing = || Error::UnknownState { space: self.id.clone(), state: state.to_string() };
        if !self.contains(state) {
            return Err(missing());
        }
        match (&self.entropy, state) {
            (EntropyFn::Named { values }, StateId::Name(n)) => values.get(n).copied().ok_or_else(missing),
            (f, StateId::Coord(c)) => f.at_coord(c.value()).ok_or_else(missing),
            _ => Err(missing()),
        }
    }

    pub fn state(&self, id: StateId) -> StateRef {
        StateRef { space: self.id.clone(), state: id }
    }

    /// Grid states in state order, with their entropies.
    pub fn grid(&self) -> &[(StateId, f64)] {
        &self.grid
    }

    /// Largest entropy step between neighbouring grid states; the
    /// resolution of any scan over this grid.
    pub fn resolution(&self) -> f64 {
        self.largest_gap()
    }

    /// Grid state closest to entropy `s`, ties to the smaller state.
    pub fn state_with_entropy(&self, s: f64) -> Option<StateRef> {
        self.grid
            .iter()
            .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()).then(a.0.cmp(&b.0)))
            .map(|(id, _)| self.state(id.clone()))
    }

    /// Analytic accessibility between composites of this system alone.
    pub fn precedes(&self, a: &CompositeState, b: &CompositeState) -> Result<bool> {
        let this: &NormalSystem = self;
        analytic_precedes(|id: &str| (id == this.id).then_some(this), a, b)
    }

    /// Signed combinations: negative coefficients move to the other side
    /// before the analytic comparison.
    fn combo_precedes(&self, lhs: &[(StateId, Scale)], rhs: &[(StateId, Scale)]) -> Result<bool> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (id, c) in lhs {
            if c.is_negative() {
                right.push((self.state(id.clone()), -*c));
            } else {
                left.push((self.state(id.clone()), *c));
            }
        }
        for (id, c) in rhs {
            if c.is_negative() {
                left.push((self.state(id.clone()), -*c));
            } else {
                right.push((self.state(id.clone()), *c));
            }
        }
        self.precedes(&CompositeState::from_parts_unchecked(left), &CompositeState::from_parts_unchecked(right))
    }

    /// Entropy of `x` in the units fixed by `refs`, from both the sup and
    /// the inf form of the double variational principle.
    pub fn canonical_entropy(&self, refs: &ReferencePair, x: &StateId, tol: f64) -> Result<CanonicalEntropy> {
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        if !self.contains(x) {
            return Err(Error::UnknownState { space: self.id.clone(), state: x.to_string() });
        }
        let x0 = refs.x0.clone();
        let x1 = refs.x1.clone();
        let mix = |lambda: Scale| vec![(x0.clone(), Scale::ONE - lambda), (x1.clone(), lambda)];
        let target = vec![(x.clone(), Scale::ONE)];

        // sup{ λ : ((1-λ)X0, λX1) ≺ X }
        let lower_holds = |lambda: Scale| self.combo_precedes(&mix(lambda), &target);
        // inf{ λ : X ≺ ((1-λ)X0, λX1) }
        let upper_holds = |lambda: Scale| self.combo_precedes(&target, &mix(lambda));

        let (s_minus, branch) = sup_of_downset(&lower_holds, tol, x)?;
        let s_plus = inf_of_upset(&upper_holds, tol, x)?;
        let s_minus = s_minus.to_f64();
        let s_plus = s_plus.to_f64();
        Ok(CanonicalEntropy {
            value: 0.5 * (s_minus + s_plus),
            s_minus,
            s_plus,
            agree: (s_plus - s_minus).abs() <= 2.0 * tol,
            branch,
        })
    }

    /// Comparison property on `(1-λ)Γ × λΓ` for each λ, over all pairs of
    /// composites built from the sampled state pairs.
    pub fn verify_cp(&self, lambdas: &[Scale], sample: &[(StateId, StateId)]) -> Result<CpReport> {
        let mut report = CpReport { checked: 0, failures: Vec::new() };
        for &lambda in lambdas {
            let composites: Vec<CompositeState> = sample
                .iter()
                .map(|(a, b)| {
                    CompositeState::from_parts_unchecked([
                        (self.state(a.clone()), Scale::ONE - lambda),
                        (self.state(b.clone()), lambda),
                    ])
                })
                .collect();
            for i in 0..composites.len() {
                for j in i + 1..composites.len() {
                    report.checked += 1;
                    let (p, q) = (&composites[i], &composites[j]);
                    if !(self.precedes(p, q)? || self.precedes(q, p)?) {
                        report.failures.push(CpFailure {
                            lambda: lambda.to_f64(),
                            first: p.clone(),
                            second: q.clone(),
                        });
                    }
                }
            }
        }
        Ok(report)
    }
}

/// Where the bisection bracket was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `X0 ≺ X ≺ X1`
    Between,
    /// `X1 ≺ X`: the entropy is at least 1.
    Above,
    /// `X ≺≺ X0`: the entropy is negative.
    Below,
}

fn bisect<P>(holds: &P, mut good: Scale, mut bad: Scale, tol: f64) -> Result<Scale>
where
    P: Fn(Scale) -> Result<bool>,
{
    for _ in 0..MAX_BISECTION_ITERATIONS {
        if (bad - good).abs().to_f64() <= tol {
            break;
        }
        let mid = (good + bad).half();
        if holds(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// `holds` is true on `(-inf, λ*]` and false above; returns the last
/// true point found.
fn sup_of_downset<P>(holds: &P, tol: f64, x: &StateId) -> Result<(Scale, Branch)>
where
    P: Fn(Scale) -> Result<bool>,
{
    if holds(Scale::ONE)? {
        let mut good = Scale::ONE;
        let mut bad = Scale::integer(2);
        let mut n = 0;
        while holds(bad)? {
            good = bad;
            bad = bad * Scale::integer(2);
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(Error::Unbracketed(x.to_string()));
            }
        }
        Ok((bisect(holds, good, bad, tol)?, Branch::Above))
    } else if holds(Scale::ZERO)? {
        Ok((bisect(holds, Scale::ZERO, Scale::ONE, tol)?, Branch::Between))
    } else {
        let mut bad = Scale::ZERO;
        let mut good = -Scale::ONE;
        let mut n = 0;
        while !holds(good)? {
            bad = good;
            good = good * Scale::integer(2);
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(Error::Unbracketed(x.to_string()));
            }
        }
        Ok((bisect(holds, good, bad, tol)?, Branch::Below))
    }
}

/// `holds` is true on `[λ*, inf)`; returns the last true point found.
fn inf_of_upset<P>(holds: &P, tol: f64, x: &StateId) -> Result<Scale>
where
    P: Fn(Scale) -> Result<bool>,
{
    // mirror λ -> -λ and reuse the downset search
    let mirrored = |lambda: Scale| holds(-lambda);
    let (neg, _) = sup_of_downset(&mirrored, tol, x)?;
    Ok(-neg)
}

/// The two reference states fixing zero and unit of the canonical entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePair {
    pub x0: StateId,
    pub x1: StateId,
}

impl ReferencePair {
    /// Requires `X0 ≺≺ X1`, i.e. `S(X0) < S(X1)`.
    pub fn new(sys: &NormalSystem, x0: StateId, x1: StateId) -> Result<Self> {
        let s0 = sys.entropy(&x0)?;
        let s1 = sys.entropy(&x1)?;
        if entropy_key(s0) >= entropy_key(s1) {
            return Err(Error::InvalidReferencePair { s0, s1 });
        }
        Ok(ReferencePair { x0, x1 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalEntropy {
    pub value: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// Sup and inf forms agree within `2 * tol`.
    pub agree: bool,
    pub branch: Branch,
}

#[derive(Clone, Debug, Serialize)]
pub struct CpFailure {
    pub lambda: f64,
    pub first: CompositeState,
    pub second: CompositeState,
}

#[derive(Clone, Debug, Serialize)]
pub struct CpReport {
    pub checked: usize,
    pub failures: Vec<CpFailure>,
}

impl CpReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Total entropy `Σ scale · S(state)` in canonical part order.
pub fn total_entropy<'a, L>(lookup: L, c: &CompositeState) -> Result<f64>
where
    L: Fn(&str) -> Option<&'a NormalSystem>,
{
    let mut sum = 0.0;
    for p in c.parts() {
        let sys = lookup(&p.state.space).ok_or_else(|| Error::NotAnalytic(p.state.space.clone()))?;
        sum += p.scale.to_f64() * sys.entropy(&p.state.state)?;
    }
    Ok(sum)
}

/// Analytic accessibility on scaled products of normal systems.
pub fn analytic_precedes<'a, L>(lookup: L, a: &CompositeState, b: &CompositeState) -> Result<bool>
where
    L: Fn(&str) -> Option<&'a NormalSystem>,
{
    let ma = a.matter();
    let mb = b.matter();
    for space in ma.keys().chain(mb.keys()) {
        let lhs = ma.get(space).copied().unwrap_or(Scale::ZERO);
        let rhs = mb.get(space).copied().unwrap_or(Scale::ZERO);
        if lhs != rhs {
            return Err(Error::MatterMismatch { space: space.to_string(), lhs: lhs.to_string(), rhs: rhs.to_string() });
        }
    }
    let sa = total_entropy(&lookup, a)?;
    let sb = total_entropy(&lookup, b)?;
    Ok(entropy_key(sa) <= entropy_key(sb))
}
