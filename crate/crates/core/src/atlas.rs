//! Gluing locally measured entropies into a global one.
//!
//! Each chart carries entropies measured with its own references, so two
//! charts agree on their overlap only up to a constant. Calibration finds
//! one offset per chart by least squares over the overlap graph; loop sums
//! over fundamental cycles expose inconsistencies that no choice of offsets
//! can remove.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meter::EntropyEstimate;
use crate::state::StateRef;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chart {
    pub id: String,
    pub local: BTreeMap<StateRef, f64>,
}

impl Chart {
    pub fn new(id: &str, local: BTreeMap<StateRef, f64>) -> Result<Self> {
        if local.is_empty() {
            return Err(Error::EmptyChart(id.to_string()));
        }
        Ok(Chart { id: id.to_string(), local })
    }

    /// Chart from meter estimates of single states. Uses `S-`; incomparable
    /// states are dropped.
    pub fn from_estimates(id: &str, estimates: &[EntropyEstimate]) -> Result<Self> {
        let local = estimates
            .iter()
            .filter(|e| e.comparable && e.state.parts().len() == 1)
            .map(|e| (e.state.parts()[0].state.clone(), e.s_minus))
            .collect();
        Chart::new(id, local)
    }

    pub fn region(&self) -> impl Iterator<Item = &StateRef> {
        self.local.keys()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Overlap {
    pub a: String,
    pub b: String,
    pub size: usize,
    /// Mean of `local_a - local_b`; equals `offset_b - offset_a` when
    /// consistent.
    pub mean_difference: f64,
    /// Largest pointwise disagreement after calibration.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleResidual {
    /// Charts around the loop, closed by the non-tree edge.
    pub charts: Vec<String>,
    pub sum: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub anchor: String,
    pub tol: f64,
    pub offsets: BTreeMap<String, f64>,
    pub unreachable: Vec<String>,
    pub overlaps: Vec<Overlap>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub cycles: Vec<CycleResidual>,
    pub tol: f64,
}

impl LoopReport {
    pub fn consistent(&self) -> bool {
        self.cycles.iter().all(|c| !c.flagged)
    }

    pub fn worst(&self) -> f64 {
        self.cycles.iter().map(|c| c.sum.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalEntropy {
    pub values: BTreeMap<StateRef, f64>,
    /// Largest spread of glued values at a state covered by several charts.
    pub max_spread: f64,
}

#[derive(Clone, Debug)]
pub struct Atlas {
    charts: Vec<Chart>,
    declared: Option<Vec<(String, String)>>,
}

struct Edge {
    a: usize,
    b: usize,
    diff: f64,
}

impl Atlas {
    pub fn new(charts: Vec<Chart>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for c in &charts {
            if c.local.is_empty() {
                return Err(Error::EmptyChart(c.id.clone()));
            }
            if !ids.insert(c.id.clone()) {
                return Err(Error::InvalidStateSet { space: c.id.clone(), reason: "duplicate chart id".into() });
            }
        }
        Ok(Atlas { charts, declared: None })
    }

    /// Restricts the overlap graph to declared neighbours. A declared pair
    /// with no common state is an error at calibration.
    pub fn with_neighbours(mut self, pairs: Vec<(String, String)>) -> Result<Self> {
        for (a, b) in &pairs {
            self.position(a)?;
            self.position(b)?;
        }
        self.declared = Some(pairs);
        Ok(self)
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.charts.iter().position(|c| c.id == id).ok_or_else(|| Error::UnknownChart(id.to_string()))
    }

    fn mean_difference(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        let (ca, cb) = (&self.charts[a], &self.charts[b]);
        let diffs: Vec<f64> = ca.local.iter().filter_map(|(s, va)| cb.local.get(s).map(|vb| va - vb)).collect();
        if diffs.is_empty() {
            return None;
        }
        Some((diffs.len(), diffs.iter().sum::<f64>() / diffs.len() as f64))
    }

    fn edges(&self) -> Result<Vec<Edge>> {
        let mut out = Vec::new();
        match &self.declared {
            Some(pairs) => {
                for (a, b) in pairs {
                    let (i, j) = (self.position(a)?, self.position(b)?);
                    let (_, diff) =
                        self.mean_difference(i, j).ok_or_else(|| Error::EmptyOverlap { a: a.clone(), b: b.clone() })?;
                    out.push(Edge { a: i, b: j, diff });
                }
            }
            None => {
                for i in 0..self.charts.len() {
                    for j in i + 1..self.charts.len() {
                        if let Some((_, diff)) = self.mean_difference(i, j) {
                            out.push(Edge { a: i, b: j, diff });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// BFS tree from `root`: parent edge per reached chart, in visit order.
    fn spanning_tree(&self, root: usize, edges: &[Edge]) -> (Vec<usize>, Vec<Option<usize>>, Vec<bool>) {
        let n = self.charts.len();
        let mut parent_edge = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = vec![root];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for (k, e) in edges.iter().enumerate() {
                let v = if e.a == u {
                    e.b
                } else if e.b == u {
                    e.a
                } else {
                    continue;
                };
                if !seen[v] {
                    seen[v] = true;
                    parent_edge[v] = Some(k);
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
        (order, parent_edge, seen)
    }

    /// Offsets minimizing `Σ (offset_b - offset_a - mean_difference)^2` over
    /// overlaps in the anchor's component, with the anchor fixed at 0.
    pub fn calibrate(&self, anchor: &str, tol: f64) -> Result<Calibration> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        let root = self.position(anchor)?;
        let edges = self.edges()?;
        let (order, _, seen) = self.spanning_tree(root, &edges);
        let unknowns: Vec<usize> = order.iter().copied().filter(|&c| c != root).collect();
        let column: BTreeMap<usize, usize> = unknowns.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let inner: Vec<&Edge> = edges.iter().filter(|e| seen[e.a] && seen[e.b]).collect();

        let mut offsets = vec![0.0; self.charts.len()];
        if !unknowns.is_empty() {
            let mut a = DMatrix::<f64>::zeros(inner.len(), unknowns.len());
            let mut rhs = DVector::<f64>::zeros(inner.len());
            for (r, e) in inner.iter().enumerate() {
                if let Some(&c) = column.get(&e.b) {
                    a[(r, c)] += 1.0;
                }
                if let Some(&c) = column.get(&e.a) {
                    a[(r, c)] -= 1.0;
                }
                rhs[r] = e.diff;
            }
            let normal = a.transpose() * &a;
            let solution = normal.cholesky().ok_or(Error::SingularCalibration)?.solve(&(a.transpose() * rhs));
            for (&c, &k) in &column {
                offsets[c] = solution[k];
            }
        }

        let mut overlaps = Vec::new();
        for e in &edges {
            let (ca, cb) = (&self.charts[e.a], &self.charts[e.b]);
            let (size, _) = self.mean_difference(e.a, e.b).unwrap_or((0, 0.0));
            let residual = if seen[e.a] && seen[e.b] {
                ca.local
                    .iter()
                    .filter_map(|(s, va)| cb.local.get(s).map(|vb| ((va + offsets[e.a]) - (vb + offsets[e.b])).abs()))
                    .fold(0.0, f64::max)
            } else {
                f64::NAN
            };
            overlaps.push(Overlap { a: ca.id.clone(), b: cb.id.clone(), size, mean_difference: e.diff, residual });
        }
        let max_residual = overlaps.iter().map(|o| o.residual).filter(|r| !r.is_nan()).fold(0.0, f64::max);
        Ok(Calibration {
            anchor: anchor.to_string(),
            tol,
            offsets: order.iter().map(|&c| (self.charts[c].id.clone(), offsets[c])).collect(),
            unreachable: (0..self.charts.len()).filter(|&c| !seen[c]).map(|c| self.charts[c].id.clone()).collect(),
            overlaps,
            max_residual,
        })
    }

    /// Signed loop sums over the fundamental cycles of a BFS tree rooted at
    /// `root`, one per non-tree overlap in each component.
    pub fn check_loops(&self, root: &str, tol: f64) -> Result<LoopReport> {
        let edges = self.edges()?;
        let n = self.charts.len();
        let mut potential = vec![0.0; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut tree = BTreeSet::new();
        let mut covered = vec![false; n];
        let first = self.position(root)?;
        for start in std::iter::once(first).chain(0..n) {
            if covered[start] {
                continue;
            }
            let (order, parent_edge, seen) = self.spanning_tree(start, &edges);
            for &v in &order {
                covered[v] = true;
                if let Some(k) = parent_edge[v] {
                    let e = &edges[k];
                    let u = if e.a == v { e.b } else { e.a };
                    // offset_b - offset_a = diff along a -> b
                    potential[v] = potential[u] + if e.b == v { e.diff } else { -e.diff };
                    parent[v] = Some(u);
                    depth[v] = depth[u] + 1;
                    tree.insert(k);
                }
            }
            debug_assert!(order.iter().all(|&v| seen[v]));
        }
        let mut cycles = Vec::new();
        for (k, e) in edges.iter().enumerate() {
            if tree.contains(&k) {
                continue;
            }
            // a -> (tree) -> b, then back along the overlap
            let sum = potential[e.b] - potential[e.a] - e.diff;
            let charts =
                self.tree_path(e.a, e.b, &parent, &depth).into_iter().map(|c| self.charts[c].id.clone()).collect();
            cycles.push(CycleResidual { charts, sum, flagged: sum.abs() > tol });
        }
        Ok(LoopReport { cycles, tol })
    }

    fn tree_path(&self, a: usize, b: usize, parent: &[Option<usize>], depth: &[usize]) -> Vec<usize> {
        let (mut x, mut y) = (a, b);
        let mut left = vec![x];
        let mut right = vec![y];
        while depth[x] > depth[y] {
            x = parent[x].expect("deeper node has a parent");
            left.push(x);
        }
        while depth[y] > depth[x] {
            y = parent[y].expect("deeper node has a parent");
            right.push(y);
        }
        while x != y {
            x = parent[x].expect("distinct nodes below the root");
            y = parent[y].expect("distinct nodes below the root");
            left.push(x);
            right.push(y);
        }
        right.pop();
        left.extend(right.into_iter().rev());
        left
    }

    /// Global entropy from calibrated offsets. Refuses when a loop is
    /// inconsistent or overlapping charts disagree by more than `tol`.
    pub fn glue_global(&self, calibration: &Calibration, loops: &LoopReport) -> Result<GlobalEntropy> {
        if !loops.consistent() {
            let flagged = loops.cycles.iter().filter(|c| c.flagged).count();
            return Err(Error::InconsistentLoops { count: flagged, worst: loops.worst() });
        }
        let mut glued: BTreeMap<StateRef, Vec<f64>> = BTreeMap::new();
        for chart in &self.charts {
            let Some(offset) = calibration.offsets.get(&chart.id) else { continue };
            for (s, v) in &chart.local {
                glued.entry(s.clone()).or_default().push(v + offset);
            }
        }
        let mut values = BTreeMap::new();
        let mut max_spread = 0.0f64;
        for (s, vs) in glued {
            let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > calibration.tol {
                return Err(Error::GlueMismatch { state: s.to_string(), spread: hi - lo });
            }
            max_spread = max_spread.max(hi - lo);
            values.insert(s, vs[0]);
        }
        Ok(GlobalEntropy { values, max_spread })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn two_charts_offset_by_one() {
        let atlas = fixtures::two_charts();
        let cal = atlas.calibrate("left", 1e-9).unwrap();
        assert!((cal.offsets["right"] - 1.0).abs() < 1e-12);
        assert!(cal.max_residual < 1e-12);
        let loops = atlas.check_loops("left", 1e-9).unwrap();
        assert!(loops.cycles.is_empty());
        let global = atlas.glue_global(&cal, &loops).unwrap();
        for (s, v) in &global.values {
            assert!((v - s.state.coord_value().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_chart() {
        let atlas = Atlas::new(vec![fixtures::two_charts().charts()[0].clone()]).unwrap();
        let cal = atlas.calibrate("left", 1e-9).unwrap();
        assert_eq!(cal.offsets.len(), 1);
        assert_eq!(cal.offsets["left"], 0.0);
        assert!(cal.overlaps.is_empty());
    }

    #[test]
    fn line_of_three_telescopes() {
        let cal = fixtures::three_charts_line().calibrate("c0", 1e-9).unwrap();
        let got: Vec<f64> = ["c0", "c1", "c2"].iter().map(|c| cal.offsets[*c]).collect();
        for (g, want) in got.iter().zip([0.0, 1.0, 2.5]) {
            assert!((g - want).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn loop_mismatch_is_reported() {
        let ok = fixtures::three_cycle(0.0);
        let report = ok.check_loops("c0", 1e-9).unwrap();
        assert_eq!(report.cycles.len(), 1);
        assert!(report.consistent() && report.worst() < 1e-12);

        let bad = fixtures::three_cycle(0.1);
        let report = bad.check_loops("c0", 1e-9).unwrap();
        assert!(!report.consistent());
        assert!((report.worst() - 0.1).abs() < 1e-12);
        assert_eq!(report.cycles[0].charts.len(), 3);
        let cal = bad.calibrate("c0", 1e-9).unwrap();
        assert!(matches!(bad.glue_global(&cal, &report), Err(Error::InconsistentLoops { count: 1, .. })));
    }

    #[test]
    fn loop_sum_does_not_depend_on_root() {
        let bad = fixtures::three_cycle(0.1);
        for root in ["c0", "c1", "c2"] {
            assert!((bad.check_loops(root, 1e-9).unwrap().worst() - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_and_empty_overlaps() {
        let mut charts = fixtures::two_charts().charts().to_vec();
        let far = BTreeMap::from([(StateRef::at("u", 9.0), 0.0)]);
        charts.push(Chart::new("far", far).unwrap());
        let atlas = Atlas::new(charts).unwrap();
        let cal = atlas.calibrate("left", 1e-9).unwrap();
        assert_eq!(cal.unreachable, vec!["far".to_string()]);
        assert!(!cal.offsets.contains_key("far"));

        let declared = atlas.with_neighbours(vec![("left".into(), "far".into())]).unwrap();
        assert!(matches!(declared.calibrate("left", 1e-9), Err(Error::EmptyOverlap { .. })));
    }

    #[test]
    fn gauge_shift_moves_glued_values_only() {
        let atlas = fixtures::three_charts_line();
        let cal = atlas.calibrate("c0", 1e-9).unwrap();
        let loops = atlas.check_loops("c0", 1e-9).unwrap();
        let base = atlas.glue_global(&cal, &loops).unwrap();
        let mut shifted = cal.clone();
        for v in shifted.offsets.values_mut() {
            *v += 3.25;
        }
        let moved = atlas.glue_global(&shifted, &loops).unwrap();
        for (s, v) in &base.values {
            assert!((moved.values[s] - v - 3.25).abs() < 1e-12);
        }
    }
}
