//! Arithmetic of sums of two squares.
//!
//! Lattice points on the circle `|ξ|² = E`, the set `S` of representable
//! energies, and counts of minimally vanishing subsets used by the
//! `I(γ, B)` correlation condition.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

/// Integer lattice point `(ξ₁, ξ₂)`.
pub type Point = (i64, i64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("{0} is not a sum of two squares")]
    NotRepresentable(u64),
    #[error("energy 0 has the degenerate point set {{(0,0)}}")]
    ZeroEnergy,
    #[error("subset length {len} exceeds the exhaustive-search cap {cap}")]
    LengthCap { len: usize, cap: usize },
    #[error("search too large: more than {budget} partial nodes for E={energy}, l={len}")]
    SearchTooLarge { energy: u64, len: usize, budget: u64 },
    #[error("gamma must lie in (0, 1/2), got {0}")]
    Gamma(f64),
    #[error("B must be at least 3, got {0}")]
    MaxLength(usize),
}

/// All lattice points on the circle of radius `√E`, in lexicographic order.
///
/// Because negation reverses lexicographic order, the antipode of
/// `points[i]` is `points[N - 1 - i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePointSet {
    energy: u64,
    points: Vec<Point>,
}

impl LatticePointSet {
    pub fn energy(&self) -> u64 {
        self.energy
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `false` when `E ∉ S`; the point set is then empty.
    pub fn is_representable(&self) -> bool {
        !self.points.is_empty()
    }

    /// Index of `-points[i]`.
    pub fn antipode(&self, i: usize) -> usize {
        self.points.len() - 1 - i
    }

    pub fn index_of(&self, p: Point) -> Option<usize> {
        self.points.binary_search(&p).ok()
    }

    /// Fails unless the set is a non-degenerate circle (`E ≥ 1`, `E ∈ S`).
    pub fn require_circle(&self) -> Result<(), LatticeError> {
        if self.energy == 0 {
            Err(LatticeError::ZeroEnergy)
        } else if self.points.is_empty() {
            Err(LatticeError::NotRepresentable(self.energy))
        } else {
            Ok(())
        }
    }
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Ascending list of `n ≤ limit` with `n = a² + b²`.
pub fn sum_two_squares_sieve(limit: u64) -> Vec<u64> {
    let limit_us = limit as usize;
    let mut hit = vec![false; limit_us + 1];
    let top = isqrt(limit);
    for a in 0..=top {
        let a2 = a * a;
        let mut b = a;
        while a2 + b * b <= limit {
            hit[(a2 + b * b) as usize] = true;
            b += 1;
        }
    }
    hit.iter()
        .enumerate()
        .filter_map(|(n, &h)| h.then_some(n as u64))
        .collect()
}

/// `E ∈ S`, decided by scanning `a ≤ √(E/2)`.
pub fn is_sum_of_two_squares(energy: u64) -> bool {
    let mut a = 0u64;
    while 2 * a * a <= energy {
        let rest = energy - a * a;
        let b = isqrt(rest);
        if b * b == rest {
            return true;
        }
        a += 1;
    }
    false
}

/// `ℰ_E = {ξ ∈ ℤ² : |ξ|² = E}`; empty when `E ∉ S`.
pub fn lattice_points(energy: u64) -> LatticePointSet {
    let r = isqrt(energy) as i64;
    let mut points = Vec::new();
    for x in -r..=r {
        let rest = energy - (x * x) as u64;
        let y = isqrt(rest) as i64;
        if (y * y) as u64 == rest {
            if y == 0 {
                points.push((x, 0));
            } else {
                points.push((x, -y));
                points.push((x, y));
            }
        }
    }
    LatticePointSet { energy, points }
}

/// Limits for the exhaustive subset search.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// Largest subset length accepted.
    pub max_len: usize,
    /// Maximum number of partial-sum nodes visited per search.
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_len: 8,
            max_nodes: 10_000_000,
        }
    }
}

/// Number of `l`-subsets of `ℰ_E` summing to zero with no vanishing proper
/// sub-sum.
pub fn minimally_vanishing_count(
    energy: u64,
    len: usize,
    budget: SearchBudget,
) -> Result<u64, LatticeError> {
    if len > budget.max_len {
        return Err(LatticeError::LengthCap {
            len,
            cap: budget.max_len,
        });
    }
    let set = lattice_points(energy);
    if set.is_empty() {
        return Err(LatticeError::NotRepresentable(energy));
    }
    if len == 0 || len > set.len() {
        return Ok(0);
    }
    let mut search = SubsetSearch {
        points: set.points(),
        radius: (energy as f64).sqrt(),
        len,
        chosen: Vec::with_capacity(len),
        nodes: 0,
        budget: budget.max_nodes,
        count: 0,
    };
    if search.descend(0, (0, 0)) {
        Ok(search.count)
    } else {
        Err(LatticeError::SearchTooLarge {
            energy,
            len,
            budget: budget.max_nodes,
        })
    }
}

struct SubsetSearch<'a> {
    points: &'a [Point],
    radius: f64,
    len: usize,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
    count: u64,
}

impl SubsetSearch<'_> {
    /// Returns `false` once the node budget is exhausted.
    fn descend(&mut self, start: usize, sum: Point) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let depth = self.chosen.len();
        if depth == self.len {
            if sum == (0, 0) && self.is_minimal() {
                self.count += 1;
            }
            return true;
        }
        let remaining = self.len - depth;
        // The remaining points can move the partial sum by at most remaining·√E.
        let norm = ((sum.0 * sum.0 + sum.1 * sum.1) as f64).sqrt();
        if norm > remaining as f64 * self.radius + 1e-9 {
            return true;
        }
        let n = self.points.len();
        for i in start..=(n - remaining) {
            let p = self.points[i];
            self.chosen.push(i);
            let ok = self.descend(i + 1, (sum.0 + p.0, sum.1 + p.1));
            self.chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    fn is_minimal(&self) -> bool {
        let l = self.chosen.len();
        let full = (1u32 << l) - 1;
        (1..full).all(|mask| {
            let mut s = (0i64, 0i64);
            for (bit, &i) in self.chosen.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    s.0 += self.points[i].0;
                    s.1 += self.points[i].1;
                }
            }
            s != (0, 0)
        })
    }
}

/// Minimally vanishing subset counts for `3 ≤ l ≤ B` and the `I(γ, B)`
/// verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub energy: u64,
    pub size: usize,
    pub gamma: f64,
    pub max_len: usize,
    pub counts: BTreeMap<usize, u64>,
    pub passes: bool,
}

impl CorrelationReport {
    /// `N^{γ l}`.
    pub fn bound(&self, len: usize) -> f64 {
        (self.size as f64).powf(self.gamma * len as f64)
    }
}

pub fn condition_i_report(
    energy: u64,
    gamma: f64,
    max_len: usize,
    budget: SearchBudget,
) -> Result<CorrelationReport, LatticeError> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(LatticeError::Gamma(gamma));
    }
    if max_len < 3 {
        return Err(LatticeError::MaxLength(max_len));
    }
    let size = lattice_points(energy).len();
    let counts = (3..=max_len)
        .into_par_iter()
        .map(|l| minimally_vanishing_count(energy, l, budget).map(|c| (l, c)))
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    let n = size as f64;
    let passes = counts
        .iter()
        .all(|(&l, &c)| c as f64 <= n.powf(gamma * l as f64));
    Ok(CorrelationReport {
        energy,
        size,
        gamma,
        max_len,
        counts,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_sieve(limit: u64) -> Vec<u64> {
        (0..=limit)
            .filter(|&n| (0..=n).any(|a| (0..=n).any(|b| a * a + b * b == n)))
            .collect()
    }

    fn brute_minimal(energy: u64, len: usize) -> u64 {
        let pts = lattice_points(energy).points().to_vec();
        let n = pts.len();
        let mut count = 0;
        for mask in 0u64..(1 << n) {
            if mask.count_ones() as usize != len {
                continue;
            }
            let sel: Vec<Point> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
            let sum = |m: u64| {
                sel.iter().enumerate().filter(|(b, _)| m & (1 << b) != 0).fold((0, 0), |s, (_, p)| (s.0 + p.0, s.1 + p.1))
            };
            let full = (1u64 << len) - 1;
            if sum(full) == (0, 0) && (1..full).all(|m| sum(m) != (0, 0)) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sum_two_squares_sieve(10), vec![0, 1, 2, 4, 5, 8, 9, 10]);
        assert_eq!(sum_two_squares_sieve(0), vec![0]);
        assert_eq!(sum_two_squares_sieve(3), vec![0, 1, 2]);
        assert_eq!(sum_two_squares_sieve(200), brute_sieve(200));
    }

    #[test]
    fn point_examples() {
        let one = lattice_points(1);
        assert_eq!(one.points(), &[(-1, 0), (0, -1), (0, 1), (1, 0)]);
        let five = lattice_points(5);
        assert_eq!(five.len(), 8);
        assert!(five.points().iter().all(|&(a, b)| a * a + b * b == 5));
        let tf = lattice_points(25);
        assert_eq!(tf.len(), 12);
        for p in [(3, 4), (-4, 3), (5, 0), (0, -5)] {
            assert!(tf.index_of(p).is_some());
        }
        assert!(!lattice_points(3).is_representable());
        assert_eq!(lattice_points(0).points(), &[(0, 0)]);
        assert_eq!(lattice_points(0).require_circle(), Err(LatticeError::ZeroEnergy));
    }

    #[test]
    fn antipode_index() {
        let set = lattice_points(325);
        for i in 0..set.len() {
            let p = set.points()[i];
            assert_eq!(set.points()[set.antipode(i)], (-p.0, -p.1));
        }
    }

    #[test]
    fn minimal_examples() {
        let b = SearchBudget::default();
        assert_eq!(minimally_vanishing_count(25, 3, b).unwrap(), 0);
        assert_eq!(minimally_vanishing_count(5, 4, b).unwrap(), 0);
        assert_eq!(minimally_vanishing_count(5, 6, b).unwrap(), 0);
        for (e, l) in [(5, 3), (25, 4), (25, 5), (65, 4), (10, 6)] {
            assert_eq!(minimally_vanishing_count(e, l, b).unwrap(), brute_minimal(e, l), "E={e} l={l}");
        }
    }

    #[test]
    fn pair_count_is_antipodes() {
        // l = 2 subsets are exactly the antipodal pairs.
        let b = SearchBudget { max_len: 8, max_nodes: 1_000_000 };
        assert_eq!(minimally_vanishing_count(25, 2, b).unwrap(), 6);
    }

    #[test]
    fn budget_and_cap_errors() {
        let tiny = SearchBudget { max_len: 8, max_nodes: 10 };
        assert!(matches!(
            minimally_vanishing_count(1105, 4, tiny),
            Err(LatticeError::SearchTooLarge { .. })
        ));
        assert!(matches!(
            minimally_vanishing_count(25, 9, SearchBudget::default()),
            Err(LatticeError::LengthCap { .. })
        ));
        assert!(matches!(
            minimally_vanishing_count(3, 3, SearchBudget::default()),
            Err(LatticeError::NotRepresentable(3))
        ));
    }

    #[test]
    fn report_examples() {
        let b = SearchBudget::default();
        let r = condition_i_report(25, 0.4, 4, b).unwrap();
        assert!(r.passes);
        assert_eq!(r.counts, BTreeMap::from([(3, 0), (4, 0)]));
        let r = condition_i_report(1, 0.4, 3, b).unwrap();
        assert!(r.passes);
        assert_eq!(r.counts[&3], 0);
        let r = condition_i_report(5, 0.1, 6, b).unwrap();
        assert!(r.passes);
        assert!(r.counts.values().all(|&c| c == 0));
        assert!(condition_i_report(5, 0.5, 6, b).is_err());
        assert!(condition_i_report(5, 0.2, 2, b).is_err());
    }

    #[test]
    fn invariants_on_small_energies() {
        let s = sum_two_squares_sieve(400);
        for e in 0..=400u64 {
            let set = lattice_points(e);
            assert_eq!(set.is_representable(), s.contains(&e));
            assert_eq!(set.is_representable(), is_sum_of_two_squares(e));
            if e >= 1 && set.is_representable() {
                assert_eq!(set.len() % 2, 0);
                let sum = set.points().iter().fold((0, 0), |s, p| (s.0 + p.0, s.1 + p.1));
                assert_eq!(sum, (0, 0));
            }
        }
    }
}
