//! The accessibility preorder over a finite universe of composites.
//!
//! User generators are closed under reflexivity, transitivity, consistency
//! (composition of two derived pairs), cancellation of a common component
//! and a finite stability rule. Pairs between composites made only of
//! normal systems are seeded from the analytic entropy comparison.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scale::Scale;
use crate::state::{CompositeState, SpaceCatalog, StateRef};

pub const DEFAULT_ARITY_CAP: usize = 4;
pub const DEFAULT_MAX_UNIVERSE: usize = 10_000;

/// Anything that can answer `X ≺ Y`.
pub trait Accessibility: Send + Sync {
    fn catalog(&self) -> &SpaceCatalog;

    /// `Ok(false)` means "not accessible within this model", never a claim
    /// about physical impossibility.
    fn precedes(&self, x: &CompositeState, y: &CompositeState) -> Result<bool>;

    fn classify(&self, x: &CompositeState, y: &CompositeState) -> Result<Classification> {
        Ok(Classification::from_directions(self.precedes(x, y)?, self.precedes(y, x)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Equivalent,
    Strict,
    StrictReverse,
    Incomparable,
}

impl Classification {
    pub fn from_directions(forward: bool, backward: bool) -> Self {
        match (forward, backward) {
            (true, true) => Classification::Equivalent,
            (true, false) => Classification::Strict,
            (false, true) => Classification::StrictReverse,
            (false, false) => Classification::Incomparable,
        }
    }

    pub fn comparable(&self) -> bool {
        *self != Classification::Incomparable
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Largest composite produced when the universe is closed under
    /// composition.
    pub arity_cap: usize,
    /// Decreasing scale factors that must all satisfy the stability premise.
    pub stability_epsilons: Vec<Scale>,
    pub max_universe: usize,
    /// Close the seeded universe under pairwise composition.
    pub compose: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arity_cap: DEFAULT_ARITY_CAP,
            stability_epsilons: (1..=6).map(Scale::dyadic).collect(),
            max_universe: DEFAULT_MAX_UNIVERSE,
            compose: true,
        }
    }
}

impl ModelConfig {
    /// Universe = seeds, generator endpoints and their factors only.
    pub fn explicit() -> Self {
        ModelConfig { compose: false, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GeneratorEdge {
    pub from: CompositeState,
    pub to: CompositeState,
    pub label: String,
}

/// An open model: declared spaces, generators and universe seeds.
#[derive(Clone, Debug)]
pub struct AccessibilityModel {
    catalog: Arc<SpaceCatalog>,
    config: ModelConfig,
    generators: Vec<GeneratorEdge>,
    seeds: BTreeSet<CompositeState>,
}

impl AccessibilityModel {
    pub fn new(catalog: Arc<SpaceCatalog>, config: ModelConfig) -> Self {
        AccessibilityModel { catalog, config, generators: Vec::new(), seeds: BTreeSet::new() }
    }

    pub fn catalog(&self) -> &Arc<SpaceCatalog> {
        &self.catalog
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn generators(&self) -> &[GeneratorEdge] {
        &self.generators
    }

    pub fn generator_pairs(&self) -> Vec<(CompositeState, CompositeState)> {
        self.generators.iter().map(|g| (g.from.clone(), g.to.clone())).collect()
    }

    fn check(&self, c: &CompositeState) -> Result<()> {
        for p in c.parts() {
            self.catalog.contains(&p.state)?;
        }
        Ok(())
    }

    pub fn add_generator(&mut self, from: CompositeState, to: CompositeState, label: &str) -> Result<()> {
        self.check(&from)?;
        self.check(&to)?;
        self.generators.push(GeneratorEdge { from, to, label: label.to_string() });
        Ok(())
    }

    pub fn add_to_universe(&mut self, c: CompositeState) -> Result<()> {
        self.check(&c)?;
        if !c.is_empty() {
            self.seeds.insert(c);
        }
        Ok(())
    }

    pub fn extend_universe(&mut self, cs: impl IntoIterator<Item = CompositeState>) -> Result<()> {
        for c in cs {
            self.add_to_universe(c)?;
        }
        Ok(())
    }

    /// Seeds and generator endpoints, their single parts and their
    /// one-part-removed remainders, then (optionally) all pairwise
    /// compositions up to the arity cap.
    pub fn build_universe(&self) -> Result<Vec<CompositeState>> {
        let budget = self.config.max_universe;
        let over = |size: usize| Error::UniverseTooLarge { size, budget };
        let mut set: BTreeSet<CompositeState> = self.seeds.clone();
        for g in &self.generators {
            set.insert(g.from.clone());
            set.insert(g.to.clone());
        }
        let mentioned: Vec<CompositeState> = set.iter().cloned().collect();
        for c in &mentioned {
            for p in c.parts() {
                set.insert(CompositeState::single(p.state.clone(), p.scale));
                if p.scale > Scale::ONE && p.scale.is_integer() {
                    set.insert(CompositeState::single(p.state.clone(), Scale::ONE));
                }
                let single = CompositeState::single(p.state.clone(), p.scale);
                if let Some(rest) = c.minus(&single) {
                    set.insert(rest);
                }
            }
        }
        set.remove(&CompositeState::default());
        if set.len() > budget {
            return Err(over(set.len()));
        }
        if self.config.compose {
            let mut frontier: Vec<CompositeState> = set.iter().cloned().collect();
            while !frontier.is_empty() {
                let members: Vec<CompositeState> = set.iter().cloned().collect();
                let mut fresh = BTreeSet::new();
                for a in &frontier {
                    for b in &members {
                        let ab = a.compose(b);
                        if ab.arity() <= self.config.arity_cap
                            && !set.contains(&ab)
                            && fresh.insert(ab)
                            && set.len() + fresh.len() > budget
                        {
                            return Err(over(set.len() + fresh.len()));
                        }
                    }
                }
                frontier = fresh.iter().cloned().collect();
                set.extend(fresh);
            }
        }
        Ok(set.into_iter().collect())
    }

    /// Least fixed point of the inference rules over the universe.
    pub fn close(&self) -> Result<ClosedModel> {
        let universe = self.build_universe()?;
        ClosedModel::compute(self.catalog.clone(), self.config.clone(), self.generators.clone(), universe)
    }
}

/// Square bit matrix, one `u64` word per 64 columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Returns true when the bit was newly set.
    #[inline]
    fn set(&mut self, i: usize, j: usize) -> bool {
        let w = &mut self.bits[i * self.words + j / 64];
        let mask = 1u64 << (j % 64);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Warshall's algorithm on bit rows.
    fn transitive_closure(&mut self) -> bool {
        let before = self.bits.clone();
        for k in 0..self.n {
            let row_k: Vec<u64> = self.row(k).to_vec();
            for i in 0..self.n {
                if self.get(i, k) {
                    let start = i * self.words;
                    for (w, src) in self.bits[start..start + self.words].iter_mut().zip(&row_k) {
                        *w |= *src;
                    }
                }
            }
        }
        before != self.bits
    }

    fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn row_subset(&self, sub: usize, sup: usize) -> bool {
        self.row(sub).iter().zip(self.row(sup)).all(|(a, b)| a & !b == 0)
    }
}

/// Per-composite decompositions used by the inference rules.
struct RuleIndex {
    /// Ordered `(i, j)` with `universe[i] + universe[j] == universe[k]`.
    splits: Vec<Vec<(usize, usize)>>,
    /// `(w, x)` with `universe[k] == W_w + universe[x]`, `W_w` any composite.
    cancel: Vec<Vec<(usize, usize)>>,
    /// Stability groups: remainder `x` and meter state `z`, keyed by ε.
    stability: Vec<(usize, BTreeMap<Scale, usize>)>,
}

impl RuleIndex {
    fn build(
        catalog: &SpaceCatalog,
        universe: &[CompositeState],
        index: &HashMap<CompositeState, usize>,
        eps: &[Scale],
    ) -> Self {
        let mut splits = vec![Vec::new(); universe.len()];
        let mut cancel = vec![Vec::new(); universe.len()];
        let mut w_ids: HashMap<CompositeState, usize> = HashMap::new();
        let eps_set: BTreeSet<Scale> = eps.iter().copied().collect();
        let mut groups: BTreeMap<(usize, StateRef), BTreeMap<Scale, usize>> = BTreeMap::new();
        for (k, c) in universe.iter().enumerate() {
            if c.parts().len() + usize::from(c.arity() > c.parts().len()) < 2 {
                continue;
            }
            for (w, rest) in c.splits() {
                let wi = index.get(&w);
                let ri = index.get(&rest);
                if let (Some(&a), Some(&b)) = (wi, ri) {
                    splits[k].push((a, b));
                }
                if let Some(&x) = ri {
                    let next = w_ids.len();
                    let id = *w_ids.entry(w).or_insert(next);
                    cancel[k].push((id, x));
                }
            }
            for p in c.parts() {
                if !eps_set.contains(&p.scale) || !catalog.is_normal(&p.state.space) {
                    continue;
                }
                let single = CompositeState::single(p.state.clone(), p.scale);
                if let Some(&x) = c.minus(&single).and_then(|rest| index.get(&rest)) {
                    let unit = StateRef { space: p.state.space.clone(), state: p.state.state.clone() };
                    groups.entry((x, unit)).or_default().insert(p.scale, k);
                }
            }
        }
        let stability = groups
            .into_iter()
            .filter(|(_, by_eps)| eps_set.iter().all(|e| by_eps.contains_key(e)))
            .map(|((x, _), by_eps)| (x, by_eps))
            .collect();
        RuleIndex { splits, cancel, stability }
    }
}

/// A closed, immutable model. Queries are read-only.
#[derive(Clone, Debug)]
pub struct ClosedModel {
    catalog: Arc<SpaceCatalog>,
    config: ModelConfig,
    generators: Vec<GeneratorEdge>,
    universe: Vec<CompositeState>,
    index: HashMap<CompositeState, usize>,
    rel: BitMatrix,
    approximate: BTreeSet<(usize, usize)>,
    rounds: usize,
}

impl ClosedModel {
    fn compute(
        catalog: Arc<SpaceCatalog>,
        config: ModelConfig,
        generators: Vec<GeneratorEdge>,
        universe: Vec<CompositeState>,
    ) -> Result<Self> {
        let n = universe.len();
        let index: HashMap<CompositeState, usize> = universe.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut rel = BitMatrix::new(n);
        for i in 0..n {
            rel.set(i, i);
        }
        for g in &generators {
            rel.set(index[&g.from], index[&g.to]);
        }
        // analytic seeds between purely normal composites of equal matter
        let normal: Vec<usize> = (0..n).filter(|&i| catalog.all_normal(&universe[i])).collect();
        let lookup = |id: &str| catalog.normal(id).ok();
        let mut totals = HashMap::new();
        for &i in &normal {
            totals.insert(i, crate::normal::entropy_key(crate::normal::total_entropy(lookup, &universe[i])?));
        }
        for &i in &normal {
            let mi = universe[i].matter();
            for &j in &normal {
                if i != j && mi == universe[j].matter() && totals[&i] <= totals[&j] {
                    rel.set(i, j);
                }
            }
        }

        let rules = RuleIndex::build(&catalog, &universe, &index, &config.stability_epsilons);
        let composite_ks: Vec<usize> = (0..n).filter(|&k| !rules.splits[k].is_empty()).collect();
        let cancel_ks: Vec<usize> = (0..n).filter(|&k| !rules.cancel[k].is_empty()).collect();
        let mut approximate = BTreeSet::new();
        let mut rounds = 0;
        loop {
            rounds += 1;
            rel.transitive_closure();
            let mut changed = false;

            // consistency: X ≺ X', Y ≺ Y'  =>  (X, Y) ≺ (X', Y')
            for &k in &composite_ks {
                for &k2 in &composite_ks {
                    if rel.get(k, k2) {
                        continue;
                    }
                    let hit = rules.splits[k]
                        .iter()
                        .any(|&(i, j)| rules.splits[k2].iter().any(|&(i2, j2)| rel.get(i, i2) && rel.get(j, j2)));
                    if hit {
                        changed |= rel.set(k, k2);
                    }
                }
            }

            // cancellation: (W, X) ≺ (W, Y)  =>  X ≺ Y
            for &k in &cancel_ks {
                for &k2 in &cancel_ks {
                    if !rel.get(k, k2) {
                        continue;
                    }
                    for &(w, x) in &rules.cancel[k] {
                        for &(w2, y) in &rules.cancel[k2] {
                            if w == w2 {
                                changed |= rel.set(x, y);
                            }
                        }
                    }
                }
            }

            // stability: (X, εZa) ≺ (Y, εZb) for every configured ε  =>  X ≺ Y
            for (x, by_eps_x) in &rules.stability {
                for (y, by_eps_y) in &rules.stability {
                    if rel.get(*x, *y) {
                        continue;
                    }
                    let all = by_eps_x.iter().all(|(e, &kx)| by_eps_y.get(e).is_some_and(|&ky| rel.get(kx, ky)));
                    if all && rel.set(*x, *y) {
                        approximate.insert((*x, *y));
                        changed = true;
                    }
                }
            }

            if !changed {
                break;
            }
        }
        Ok(ClosedModel { catalog, config, generators, universe, index, rel, approximate, rounds })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn generators(&self) -> &[GeneratorEdge] {
        &self.generators
    }

    pub fn universe(&self) -> &[CompositeState] {
        &self.universe
    }

    pub fn contains(&self, c: &CompositeState) -> bool {
        self.index.contains_key(c)
    }

    pub fn index_of(&self, c: &CompositeState) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Number of rule rounds until the fixed point.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn pair_count(&self) -> usize {
        self.rel.count()
    }

    pub fn derived_by_index(&self, i: usize, j: usize) -> bool {
        self.rel.get(i, j)
    }

    /// Every derived pair, reflexive ones included.
    pub fn pairs(&self) -> BTreeSet<(CompositeState, CompositeState)> {
        let mut out = BTreeSet::new();
        for i in 0..self.universe.len() {
            for j in 0..self.universe.len() {
                if self.rel.get(i, j) {
                    out.insert((self.universe[i].clone(), self.universe[j].clone()));
                }
            }
        }
        out
    }

    /// Pairs first obtained through the finite stability rule.
    pub fn approximate_pairs(&self) -> Vec<(CompositeState, CompositeState)> {
        self.approximate.iter().map(|&(i, j)| (self.universe[i].clone(), self.universe[j].clone())).collect()
    }

    pub fn is_approximate(&self, x: &CompositeState, y: &CompositeState) -> bool {
        match (self.index_of(x), self.index_of(y)) {
            (Some(i), Some(j)) => self.approximate.contains(&(i, j)),
            _ => false,
        }
    }

    /// A fresh model whose generators are all derived pairs, over the same
    /// universe. Closing it again must not add anything.
    pub fn as_generators(&self) -> AccessibilityModel {
        let mut m =
            AccessibilityModel::new(self.catalog.clone(), ModelConfig { compose: false, ..self.config.clone() });
        for (a, b) in self.pairs() {
            if a != b {
                m.generators.push(GeneratorEdge { from: a, to: b, label: "derived".into() });
            }
        }
        m.seeds.extend(self.universe.iter().cloned());
        m
    }

    /// Re-checks the structural axioms on the closure and compares it with
    /// an optional intended relation.
    pub fn validate_axioms(&self, intended: Option<&[(CompositeState, CompositeState)]>) -> AxiomReport {
        const LIMIT: usize = 20;
        let n = self.universe.len();
        let pair = |i: usize, j: usize| (self.universe[i].clone(), self.universe[j].clone());

        let mut reflexivity = AxiomCheck::new("reflexivity");
        for i in 0..n {
            if !self.rel.get(i, i) {
                reflexivity.fail(pair(i, i), LIMIT);
            }
        }

        let mut transitivity = AxiomCheck::new("transitivity");
        for i in 0..n {
            for j in 0..n {
                if i != j && self.rel.get(i, j) && !self.rel.row_subset(j, i) {
                    let k = (0..n).find(|&k| self.rel.get(j, k) && !self.rel.get(i, k)).unwrap_or(j);
                    transitivity.fail(pair(i, k), LIMIT);
                }
            }
        }

        let mut consistency = AxiomCheck::new("consistency");
        let mut cancellation = AxiomCheck::new("cancellation");
        // (w index, rest index, w key) for every split of every composite
        let mut w_keys: HashMap<CompositeState, usize> = HashMap::new();
        let decomposed: Vec<Vec<(Option<usize>, Option<usize>, usize)>> = self
            .universe
            .iter()
            .map(|c| {
                c.splits()
                    .into_iter()
                    .map(|(w, rest)| {
                        let next = w_keys.len();
                        let wi = self.index_of(&w);
                        let key = *w_keys.entry(w).or_insert(next);
                        (wi, self.index_of(&rest), key)
                    })
                    .collect()
            })
            .collect();
        for k in 0..n {
            if decomposed[k].is_empty() {
                continue;
            }
            for k2 in 0..n {
                let forward = self.rel.get(k, k2);
                for &(w, x, wk) in &decomposed[k] {
                    for &(w2, y, wk2) in &decomposed[k2] {
                        if let (Some(iw), Some(ix), Some(iw2), Some(iy)) = (w, x, w2, y) {
                            if !forward && self.rel.get(iw, iw2) && self.rel.get(ix, iy) {
                                consistency.fail(pair(k, k2), LIMIT);
                            }
                        }
                        if forward && wk == wk2 {
                            if let (Some(ix), Some(iy)) = (x, y) {
                                if !self.rel.get(ix, iy) {
                                    cancellation.fail(pair(ix, iy), LIMIT);
                                }
                            }
                        }
                    }
                }
            }
        }

        let stability = self
            .approximate_pairs()
            .into_iter()
            .map(|(from, to)| StabilityInference { from, to, note: "inferred by stability (approximate)".into() })
            .collect();

        let intended = intended.map(|pairs| self.compare_intended(pairs));
        AxiomReport { reflexivity, transitivity, consistency, cancellation, stability, intended }
    }

    fn compare_intended(&self, pairs: &[(CompositeState, CompositeState)]) -> IntendedCheck {
        let set: BTreeSet<(CompositeState, CompositeState)> = pairs.iter().cloned().collect();
        let nodes: BTreeSet<CompositeState> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let mut unsupported = Vec::new();
        for (a, b) in &set {
            if !self.precedes(a, b).unwrap_or(false) {
                unsupported.push((a.clone(), b.clone()));
            }
        }
        let mut missing = Vec::new();
        for a in &nodes {
            for b in &nodes {
                if a != b && !set.contains(&(a.clone(), b.clone())) && self.precedes(a, b).unwrap_or(false) {
                    missing.push((a.clone(), b.clone()));
                }
            }
        }
        let mut not_closed = Vec::new();
        for (a, b) in &set {
            for (b2, c) in &set {
                if b == b2 && a != c && !set.contains(&(a.clone(), c.clone())) {
                    not_closed.push((a.clone(), c.clone()));
                }
            }
        }
        not_closed.sort();
        not_closed.dedup();
        let mut flags = Vec::new();
        if !not_closed.is_empty() {
            flags.push("intended relation not transitively closed".to_string());
        }
        if !missing.is_empty() {
            flags.push("intended relation omits pairs implied by the generators".to_string());
        }
        if !unsupported.is_empty() {
            flags.push("intended relation contains pairs the generators do not imply".to_string());
        }
        IntendedCheck { flags, transitivity_gaps: not_closed, missing_from_intended: missing, unsupported }
    }
}

impl Accessibility for ClosedModel {
    fn catalog(&self) -> &SpaceCatalog {
        &self.catalog
    }

    fn precedes(&self, x: &CompositeState, y: &CompositeState) -> Result<bool> {
        match (self.index_of(x), self.index_of(y)) {
            (Some(i), Some(j)) => Ok(self.rel.get(i, j)),
            _ if self.catalog.all_normal(x) && self.catalog.all_normal(y) => self.catalog.analytic_precedes(x, y),
            (None, _) => Err(Error::OutsideUniverse(x.to_string())),
            (_, None) => Err(Error::OutsideUniverse(y.to_string())),
        }
    }
}

impl SpaceCatalog {
    pub fn analytic_precedes(&self, x: &CompositeState, y: &CompositeState) -> Result<bool> {
        crate::normal::analytic_precedes(|id| self.normal(id).ok(), x, y)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub violations: usize,
    pub counterexamples: Vec<(CompositeState, CompositeState)>,
}

impl AxiomCheck {
    fn new(name: &str) -> Self {
        AxiomCheck { name: name.to_string(), passed: true, violations: 0, counterexamples: Vec::new() }
    }

    fn fail(&mut self, pair: (CompositeState, CompositeState), limit: usize) {
        self.passed = false;
        self.violations += 1;
        if self.counterexamples.len() < limit {
            self.counterexamples.push(pair);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityInference {
    pub from: CompositeState,
    pub to: CompositeState,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntendedCheck {
    pub flags: Vec<String>,
    /// Pairs the intended relation's own transitivity demands.
    pub transitivity_gaps: Vec<(CompositeState, CompositeState)>,
    pub missing_from_intended: Vec<(CompositeState, CompositeState)>,
    pub unsupported: Vec<(CompositeState, CompositeState)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub reflexivity: AxiomCheck,
    pub transitivity: AxiomCheck,
    pub consistency: AxiomCheck,
    pub cancellation: AxiomCheck,
    pub stability: Vec<StabilityInference>,
    pub intended: Option<IntendedCheck>,
}

impl AxiomReport {
    pub fn structural_passed(&self) -> bool {
        self.reflexivity.passed && self.transitivity.passed && self.consistency.passed && self.cancellation.passed
    }

    pub fn passed(&self) -> bool {
        self.structural_passed() && self.intended.as_ref().is_none_or(|i| i.flags.is_empty())
    }
}
