//! Brute-force reference closure and meter scan.
//!
//! Deliberately naive: a dense `Vec<Vec<bool>>`, composites expanded into
//! atoms and sub-multisets enumerated by bitmask, every rule re-applied
//! until nothing changes. Shares only the data types with the engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::scale::Scale;
use crate::state::{CompositeState, SpaceCatalog, SpaceKind, StateRef};

#[derive(Clone, Debug)]
pub struct BruteModel {
    pub universe: Vec<CompositeState>,
    matrix: Vec<Vec<bool>>,
    position: HashMap<CompositeState, usize>,
}

impl BruteModel {
    pub fn precedes(&self, x: &CompositeState, y: &CompositeState) -> Option<bool> {
        Some(self.matrix[*self.position.get(x)?][*self.position.get(y)?])
    }

    pub fn pairs(&self) -> BTreeSet<(CompositeState, CompositeState)> {
        let mut out = BTreeSet::new();
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                if b {
                    out.insert((self.universe[i].clone(), self.universe[j].clone()));
                }
            }
        }
        out
    }

    pub fn pair_count(&self) -> usize {
        self.matrix.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }
}

/// Unit copies for the integer part, then the fractional rest.
fn atoms(c: &CompositeState) -> Vec<(StateRef, Scale)> {
    let mut out = Vec::new();
    for p in c.parts() {
        let mut left = p.scale;
        while left >= Scale::ONE {
            out.push((p.state.clone(), Scale::ONE));
            left = left - Scale::ONE;
        }
        if !left.is_zero() {
            out.push((p.state.clone(), left));
        }
    }
    out
}

/// Every `(w, rest)` with both nonempty, deduplicated.
fn decompositions(c: &CompositeState) -> Vec<(CompositeState, CompositeState)> {
    let a = atoms(c);
    let mut seen = BTreeSet::new();
    for mask in 1u64..(1u64 << a.len()) - 1 {
        let mut w = Vec::new();
        let mut rest = Vec::new();
        for (bit, atom) in a.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                w.push(atom.clone());
            } else {
                rest.push(atom.clone());
            }
        }
        seen.insert((CompositeState::from_parts_unchecked(w), CompositeState::from_parts_unchecked(rest)));
    }
    seen.into_iter().collect()
}

fn per_space(c: &CompositeState) -> BTreeMap<String, Scale> {
    let mut m = BTreeMap::new();
    for p in c.parts() {
        let e = m.entry(p.state.space.clone()).or_insert(Scale::ZERO);
        *e = *e + p.scale;
    }
    m
}

fn normal_total(catalog: &SpaceCatalog, c: &CompositeState) -> Option<f64> {
    let mut total = 0.0;
    for p in c.parts() {
        let SpaceKind::Normal(sys) = catalog.get(&p.state.space).ok()? else { return None };
        total += p.scale.to_f64() * sys.entropy(&p.state.state).ok()?;
    }
    Some(total)
}

/// Naive least fixed point of the inference rules over `universe`.
pub fn brute_close(
    catalog: &SpaceCatalog,
    generators: &[(CompositeState, CompositeState)],
    universe: &[CompositeState],
    epsilons: &[Scale],
    cap: usize,
) -> Result<BruteModel> {
    let mut universe: Vec<CompositeState> = universe.to_vec();
    universe.sort();
    universe.dedup();
    if universe.len() > cap {
        return Err(Error::UniverseTooLarge { size: universe.len(), budget: cap });
    }
    let n = universe.len();
    let position: HashMap<CompositeState, usize> = universe.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let at = |c: &CompositeState| position.get(c).copied();
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for (from, to) in generators {
        let i = at(from).ok_or_else(|| Error::OutsideUniverse(from.to_string()))?;
        let j = at(to).ok_or_else(|| Error::OutsideUniverse(to.to_string()))?;
        m[i][j] = true;
    }
    let totals: Vec<Option<i64>> =
        universe.iter().map(|c| normal_total(catalog, c).map(|t| (t / 1e-9).round() as i64)).collect();
    let matter: Vec<BTreeMap<String, Scale>> = universe.iter().map(per_space).collect();
    for i in 0..n {
        for j in 0..n {
            if let (Some(a), Some(b)) = (totals[i], totals[j]) {
                if a <= b && matter[i] == matter[j] {
                    m[i][j] = true;
                }
            }
        }
    }

    let decomp: Vec<Vec<(CompositeState, CompositeState)>> = universe.iter().map(decompositions).collect();
    // index pairs for the composition rule
    let halves: Vec<Vec<(usize, usize)>> =
        decomp.iter().map(|ds| ds.iter().filter_map(|(w, r)| Some((at(w)?, at(r)?))).collect()).collect();
    // (w, rest index) for cancellation
    let cancels: Vec<Vec<(&CompositeState, usize)>> =
        decomp.iter().map(|ds| ds.iter().filter_map(|(w, r)| Some((w, at(r)?))).collect()).collect();
    // (x, meter unit, ε) -> composite x + ε·z with z a separate part
    let mut eps_lookup: HashMap<(usize, StateRef, Scale), usize> = HashMap::new();
    let mut stable_bases: BTreeMap<usize, BTreeSet<StateRef>> = BTreeMap::new();
    for (k, c) in universe.iter().enumerate() {
        for p in c.parts() {
            if !epsilons.contains(&p.scale) || !catalog.is_normal(&p.state.space) {
                continue;
            }
            let rest: Vec<(StateRef, Scale)> =
                c.parts().iter().filter(|q| q.state != p.state).map(|q| (q.state.clone(), q.scale)).collect();
            if let Some(x) = at(&CompositeState::from_parts_unchecked(rest)) {
                eps_lookup.insert((x, p.state.clone(), p.scale), k);
                stable_bases.entry(x).or_default().insert(p.state.clone());
            }
        }
    }

    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                if m[i][k] {
                    for j in 0..n {
                        if m[k][j] && !m[i][j] {
                            m[i][j] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if m[x][y] {
                    continue;
                }
                if halves[x].iter().any(|&(a, b)| halves[y].iter().any(|&(c, d)| m[a][c] && m[b][d])) {
                    m[x][y] = true;
                    changed = true;
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if !m[x][y] {
                    continue;
                }
                for (w, a) in &cancels[x] {
                    for (w2, b) in &cancels[y] {
                        if w == w2 && !m[*a][*b] {
                            m[*a][*b] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !epsilons.is_empty() {
            for (&x, zs) in &stable_bases {
                for (&y, zs2) in &stable_bases {
                    if m[x][y] {
                        continue;
                    }
                    let holds = zs.iter().any(|za| {
                        zs2.iter().any(|zb| {
                            epsilons.iter().all(|e| {
                                match (eps_lookup.get(&(x, za.clone(), *e)), eps_lookup.get(&(y, zb.clone(), *e))) {
                                    (Some(&a), Some(&b)) => m[a][b],
                                    _ => false,
                                }
                            })
                        })
                    });
                    if holds {
                        m[x][y] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(BruteModel { universe, matrix: m, position })
}

/// `(S-, S+)` by exhaustive scan of `(reference, Z) ≺ (target, meter_ref)`
/// and its reverse over the readings.
pub fn brute_s(
    model: &BruteModel,
    reference: &CompositeState,
    meter_ref: &CompositeState,
    target: &CompositeState,
    readings: &[(CompositeState, f64)],
) -> Result<(Option<f64>, Option<f64>)> {
    let measured = target.compose(meter_ref);
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    for (z, s) in readings {
        let probe = reference.compose(z);
        let outside = |c: &CompositeState| Error::OutsideUniverse(c.to_string());
        if model.precedes(&probe, &measured).ok_or_else(|| outside(&probe))? {
            lo = Some(lo.map_or(*s, |v| v.max(*s)));
        }
        if model.precedes(&measured, &probe).ok_or_else(|| outside(&measured))? {
            hi = Some(hi.map_or(*s, |v| v.min(*s)));
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::relation::Accessibility;

    #[test]
    fn chain3_has_six_pairs() {
        let m = fixtures::chain3();
        let u = m.build_universe().unwrap();
        let b = brute_close(m.catalog(), &m.generator_pairs(), &u, &[], 10_000).unwrap();
        assert_eq!(b.pair_count(), 6);
    }

    #[test]
    fn empty_generators_two_states() {
        let catalog = SpaceCatalog::new().with_generic("g", ["a", "b"]);
        let u = vec![StateRef::named("g", "a").unit(), StateRef::named("g", "b").unit()];
        assert_eq!(brute_close(&catalog, &[], &u, &[], 10).unwrap().pair_count(), 2);
    }

    #[test]
    fn cap_is_enforced() {
        let m = fixtures::chain3();
        let u = m.build_universe().unwrap();
        assert!(matches!(
            brute_close(m.catalog(), &m.generator_pairs(), &u, &[], 2),
            Err(Error::UniverseTooLarge { size: 3, budget: 2 })
        ));
    }

    #[test]
    fn decompositions_match_counting() {
        let c = CompositeState::from_parts_unchecked([
            (StateRef::named("g", "a"), Scale::integer(2)),
            (StateRef::named("g", "z"), Scale::ONE),
        ]);
        assert_eq!(decompositions(&c).len(), 4);
    }

    #[test]
    fn agrees_with_engine_on_small_fixtures() {
        for (name, m) in fixtures::relation_fixtures() {
            let closed = m.close().unwrap();
            let eps = &m.config().stability_epsilons;
            let brute = brute_close(m.catalog(), &m.generator_pairs(), closed.universe(), eps, 10_000).unwrap();
            assert_eq!(brute.pairs(), closed.pairs(), "{name}");
            for x in closed.universe() {
                for y in closed.universe() {
                    assert_eq!(brute.precedes(x, y), Some(closed.precedes(x, y).unwrap()));
                }
            }
        }
    }
}
