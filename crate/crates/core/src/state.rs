//! States, composites and the catalog of declared state spaces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::normal::NormalSystem;
use crate::scale::Scale;

/// A real coordinate with a total order, so it can key maps and sets.
#[derive(Clone, Copy, Debug)]
pub struct Coord(f64);

impl Coord {
    pub fn new(x: f64) -> Self {
        // -0.0 and 0.0 must be the same state
        Coord(if x == 0.0 { 0.0 } else { x })
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl PartialEq for Coord {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Coord {}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Coord {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

/// A point of a state space: a name, or a coordinate on a 1-D interval.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateId {
    Name(String),
    Coord(Coord),
}

impl StateId {
    pub fn name(s: impl Into<String>) -> Self {
        StateId::Name(s.into())
    }

    pub fn coord(x: f64) -> Self {
        StateId::Coord(Coord::new(x))
    }

    pub fn coord_value(&self) -> Option<f64> {
        match self {
            StateId::Coord(c) => Some(c.value()),
            StateId::Name(_) => None,
        }
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateId::Name(n) => f.write_str(n),
            StateId::Coord(c) => write!(f, "{}", c.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateRef {
    pub space: String,
    pub state: StateId,
}

impl StateRef {
    pub fn named(space: impl Into<String>, name: impl Into<String>) -> Self {
        StateRef { space: space.into(), state: StateId::name(name) }
    }

    pub fn at(space: impl Into<String>, x: f64) -> Self {
        StateRef { space: space.into(), state: StateId::coord(x) }
    }

    /// The single-part composite holding this state once.
    pub fn unit(&self) -> CompositeState {
        CompositeState::single(self.clone(), Scale::ONE)
    }
}

impl fmt::Display for StateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.space, self.state)
    }
}

impl Serialize for StateRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    pub state: StateRef,
    pub scale: Scale,
}

/// A canonical multiset of scaled states: sorted, merged, no zero parts.
///
/// The empty composite is allowed as a value (it is the neutral element of
/// composition) but never enters a model universe.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CompositeState {
    parts: Vec<Part>,
}

impl CompositeState {
    pub fn single(state: StateRef, scale: Scale) -> Self {
        Self::from_parts_unchecked([(state, scale)])
    }

    /// Canonicalizes without consulting a catalog. Negative scales are kept
    /// out by callers; zero parts are dropped.
    pub fn from_parts_unchecked(parts: impl IntoIterator<Item = (StateRef, Scale)>) -> Self {
        let mut merged: BTreeMap<StateRef, Scale> = BTreeMap::new();
        for (state, scale) in parts {
            let entry = merged.entry(state).or_insert(Scale::ZERO);
            *entry = *entry + scale;
        }
        let parts =
            merged.into_iter().filter(|(_, s)| !s.is_zero()).map(|(state, scale)| Part { state, scale }).collect();
        CompositeState { parts }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Number of constituents: integer scales count their copies.
    pub fn arity(&self) -> usize {
        self.parts.iter().map(|p| if p.scale.is_integer() { p.scale.floor_int().max(1) as usize } else { 1 }).sum()
    }

    pub fn compose(&self, other: &CompositeState) -> CompositeState {
        Self::from_parts_unchecked(self.parts.iter().chain(other.parts.iter()).map(|p| (p.state.clone(), p.scale)))
    }

    pub fn scaled(&self, factor: Scale) -> CompositeState {
        Self::from_parts_unchecked(self.parts.iter().map(|p| (p.state.clone(), p.scale * factor)))
    }

    /// `self - other` as multisets, if `other` is contained in `self`.
    pub fn minus(&self, other: &CompositeState) -> Option<CompositeState> {
        let mut left: BTreeMap<StateRef, Scale> = self.parts.iter().map(|p| (p.state.clone(), p.scale)).collect();
        for p in &other.parts {
            let have = left.get_mut(&p.state)?;
            if *have < p.scale {
                return None;
            }
            *have = *have - p.scale;
        }
        Some(Self::from_parts_unchecked(left))
    }

    /// Total scale per space.
    pub fn matter(&self) -> BTreeMap<&str, Scale> {
        let mut out: BTreeMap<&str, Scale> = BTreeMap::new();
        for p in &self.parts {
            let e = out.entry(p.state.space.as_str()).or_insert(Scale::ZERO);
            *e = *e + p.scale;
        }
        out
    }

    /// All ways to write `self = w + rest` with both sides nonempty.
    ///
    /// A part of scale `s` contributes `0`, `s`, or (for `s > 1`) an integer
    /// number of unit copies to `w`. Fractional splitting of a single part is
    /// not enumerated.
    pub fn splits(&self) -> Vec<(CompositeState, CompositeState)> {
        let options: Vec<Vec<Scale>> = self.parts.iter().map(|p| part_options(p.scale)).collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; options.len()];
        loop {
            let mut w = Vec::new();
            let mut rest = Vec::new();
            for (i, p) in self.parts.iter().enumerate() {
                let take = options[i][choice[i]];
                w.push((p.state.clone(), take));
                rest.push((p.state.clone(), p.scale - take));
            }
            let w = Self::from_parts_unchecked(w);
            let rest = Self::from_parts_unchecked(rest);
            if !w.is_empty() && !rest.is_empty() {
                out.push((w, rest));
            }
            // odometer
            let mut i = 0;
            loop {
                if i == options.len() {
                    return out;
                }
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
}

fn part_options(scale: Scale) -> Vec<Scale> {
    let mut opts = BTreeSet::from([Scale::ZERO, scale]);
    let mut k = 1;
    while Scale::integer(k) < scale {
        opts.insert(Scale::integer(k));
        opts.insert(scale - Scale::integer(k));
        k += 1;
    }
    opts.into_iter().collect()
}

impl fmt::Display for CompositeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("()");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if !p.scale.is_one() {
                write!(f, "{}*", p.scale)?;
            }
            write!(f, "{}", p.state)?;
        }
        Ok(())
    }
}

impl Serialize for CompositeState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A space without scaling: a finite list of named states.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericSpace {
    pub id: String,
    pub states: BTreeSet<String>,
}

#[derive(Clone, Debug)]
pub enum SpaceKind {
    Generic(GenericSpace),
    Normal(NormalSystem),
}

/// Declared state spaces, keyed by id.
#[derive(Clone, Debug, Default)]
pub struct SpaceCatalog {
    spaces: BTreeMap<String, SpaceKind>,
}

impl SpaceCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_generic<I, S>(mut self, id: &str, states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.add_generic(id, states);
        self
    }

    pub fn with_normal(mut self, sys: NormalSystem) -> Self {
        self.add_normal(sys);
        self
    }

    pub fn add_generic<I, S>(&mut self, id: &str, states: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let space = GenericSpace { id: id.to_string(), states: states.into_iter().map(Into::into).collect() };
        self.spaces.insert(id.to_string(), SpaceKind::Generic(space));
    }

    pub fn add_normal(&mut self, sys: NormalSystem) {
        self.spaces.insert(sys.id().to_string(), SpaceKind::Normal(sys));
    }

    pub fn get(&self, id: &str) -> Result<&SpaceKind> {
        self.spaces.get(id).ok_or_else(|| Error::UnknownSpace(id.to_string()))
    }

    pub fn normal(&self, id: &str) -> Result<&NormalSystem> {
        match self.get(id)? {
            SpaceKind::Normal(n) => Ok(n),
            SpaceKind::Generic(_) => Err(Error::NotAnalytic(id.to_string())),
        }
    }

    pub fn is_normal(&self, id: &str) -> bool {
        matches!(self.spaces.get(id), Some(SpaceKind::Normal(_)))
    }

    pub fn spaces(&self) -> impl Iterator<Item = (&String, &SpaceKind)> {
        self.spaces.iter()
    }

    pub fn contains(&self, state: &StateRef) -> Result<()> {
        let missing = || Error::UnknownState { space: state.space.clone(), state: state.state.to_string() };
        match self.get(&state.space)? {
            SpaceKind::Generic(g) => match &state.state {
                StateId::Name(n) if g.states.contains(n) => Ok(()),
                _ => Err(missing()),
            },
            SpaceKind::Normal(n) => {
                if n.contains(&state.state) {
                    Ok(())
                } else {
                    Err(missing())
                }
            }
        }
    }

    /// Resolves a textual state id against the space's kind: coordinates
    /// for interval spaces, names otherwise.
    pub fn resolve(&self, space: &str, text: &str) -> Result<StateRef> {
        let state = match self.get(space)? {
            SpaceKind::Normal(n) if n.is_interval() => {
                let x: f64 = text.trim().parse().map_err(|_| Error::InvalidNumber(text.to_string()))?;
                StateId::coord(x)
            }
            _ => StateId::name(text.trim()),
        };
        let r = StateRef { space: space.to_string(), state };
        self.contains(&r)?;
        Ok(r)
    }

    /// Builds the canonical composite for a list of scaled states.
    ///
    /// Generic spaces accept only scale 0 or 1 per listed part; repeated
    /// listing of the same generic state gives an integer multiplicity.
    pub fn canonicalize<I>(&self, parts: I) -> Result<CompositeState>
    where
        I: IntoIterator<Item = (StateRef, Scale)>,
    {
        let mut checked = Vec::new();
        for (state, scale) in parts {
            self.contains(&state)?;
            if scale.is_negative() {
                return Err(Error::NegativeScale { part: state.to_string(), scale: scale.to_string() });
            }
            if !self.is_normal(&state.space) && !(scale.is_zero() || scale.is_one()) {
                return Err(Error::FractionalScale { space: state.space.clone(), scale: scale.to_string() });
            }
            checked.push((state, scale));
        }
        Ok(CompositeState::from_parts_unchecked(checked))
    }

    /// True when every part lives in a normal space.
    pub fn all_normal(&self, c: &CompositeState) -> bool {
        c.parts().iter().all(|p| self.is_normal(&p.state.space))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::{EntropyFn, NormalSystem};

    fn catalog() -> SpaceCatalog {
        SpaceCatalog::new().with_generic("g", ["a", "b"]).with_normal(
            NormalSystem::interval_with_gap(
                "z",
                Scale::ZERO,
                Scale::ONE,
                Scale::new(1, 4),
                EntropyFn::linear(1.0, 0.0),
                0.25,
            )
            .unwrap(),
        )
    }

    #[test]
    fn order_independent() {
        let c = catalog();
        let a = StateRef::named("g", "a");
        let b = StateRef::named("g", "b");
        let x = c.canonicalize([(a.clone(), Scale::ONE), (b.clone(), Scale::ONE)]).unwrap();
        let y = c.canonicalize([(b, Scale::ONE), (a, Scale::ONE)]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn zero_parts_dropped() {
        let c = catalog();
        let a = StateRef::named("g", "a");
        let x = c.canonicalize([(a.clone(), Scale::ONE), (a.clone(), Scale::ZERO)]).unwrap();
        assert_eq!(x, a.unit());
    }

    #[test]
    fn identical_normal_parts_merge() {
        let c = catalog();
        let z = StateRef::at("z", 0.25);
        let q = Scale::new(1, 4);
        let x = c.canonicalize([(z.clone(), q), (z.clone(), q)]).unwrap();
        assert_eq!(x, CompositeState::single(z, Scale::new(1, 2)));
    }

    #[test]
    fn errors() {
        let c = catalog();
        assert_eq!(
            c.canonicalize([(StateRef::named("nope", "a"), Scale::ONE)]),
            Err(Error::UnknownSpace("nope".into()))
        );
        assert!(matches!(c.canonicalize([(StateRef::named("g", "zz"), Scale::ONE)]), Err(Error::UnknownState { .. })));
        assert!(matches!(
            c.canonicalize([(StateRef::named("g", "a"), Scale::new(1, 2))]),
            Err(Error::FractionalScale { .. })
        ));
        assert!(matches!(c.canonicalize([(StateRef::at("z", 2.0), Scale::ONE)]), Err(Error::UnknownState { .. })));
    }

    #[test]
    fn splits_cover_unit_copies() {
        let a = StateRef::named("g", "a");
        let z = StateRef::at("z", 0.5);
        let c = CompositeState::from_parts_unchecked([(a.clone(), Scale::integer(2)), (z.clone(), Scale::ONE)]);
        let splits = c.splits();
        // w takes 0..=2 copies of a and 0..=1 of z, minus the two trivial splits
        assert_eq!(splits.len(), 3 * 2 - 2);
        assert!(splits.contains(&(
            CompositeState::from_parts_unchecked([(a.clone(), Scale::ONE), (z.clone(), Scale::ONE)]),
            a.unit()
        )));
        assert_eq!(c.arity(), 3);
    }

    #[test]
    fn minus_inverts_compose() {
        let a = StateRef::named("g", "a").unit();
        let b = StateRef::named("g", "b").unit();
        let ab = a.compose(&b);
        assert_eq!(ab.minus(&a), Some(b.clone()));
        assert_eq!(b.minus(&a), None);
    }
}
