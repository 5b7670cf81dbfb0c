//! Symmetric probability measures on the unit circle.
//!
//! The circle is parametrized by angle in `(-1/2, 1/2]` with unit
//! circumference, so the direction `ζ = (cos 2πθ, sin 2πθ)` and the
//! antipode `-ζ` sits at `θ + 1/2`. Distances are arc lengths in the same
//! units (at most 1/2).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticePointSet;
use crate::maxflow::FlowNetwork;

/// Total mass tolerance.
pub const MASS_TOL: f64 = 1e-12;
/// Angles closer than this are merged into one atom.
pub const ANGLE_MERGE: f64 = 1e-12;
/// Tolerance of the antipodal symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Default number of equal atoms replacing a uniform component.
pub const DEFAULT_ATOMIZATION: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("negative or non-finite mass {0}")]
    BadMass(f64),
    #[error("total mass {0} differs from 1")]
    TotalMass(f64),
    #[error("measure is not antipodally symmetric near angle {0}")]
    NotSymmetric(f64),
    #[error("measure has a uniform component and atomization is disabled")]
    NonAtomic,
    #[error("number of arcs K must be at least 1")]
    ArcCount,
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("unknown named measure {0:?}")]
    UnknownName(String),
    #[error("invalid measure JSON: {0}")]
    Json(String),
    #[error("{got} coefficients for {expected} lattice points")]
    IndexMismatch { expected: usize, got: usize },
}

/// Point mass at `angle` (in `(-1/2, 1/2]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

impl Atom {
    /// Unit vector `(cos 2πθ, sin 2πθ)`.
    pub fn direction(&self) -> [f64; 2] {
        direction(self.angle)
    }
}

pub fn direction(angle: f64) -> [f64; 2] {
    let (s, c) = (TAU * angle).sin_cos();
    [c, s]
}

/// Maps any real angle into `(-1/2, 1/2]`.
pub fn normalize_angle(t: f64) -> f64 {
    let r = t - t.floor();
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Arc-length distance between two angles.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Angle of the lattice direction `ξ/|ξ|`.
pub fn angle_of(p: (i64, i64)) -> f64 {
    normalize_angle((p.1 as f64).atan2(p.0 as f64) / TAU)
}

#[derive(Deserialize)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    uniform_mass: f64,
}

/// Symmetric probability measure: finitely many atoms plus an optional
/// multiple of the uniform measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    uniform_mass: f64,
}

impl<'de> Deserialize<'de> for SpectralMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        SpectralMeasure::new(raw.atoms, raw.uniform_mass).map_err(serde::de::Error::custom)
    }
}

impl SpectralMeasure {
    /// Validates mass and symmetry; angles are normalized, sorted and
    /// merged.
    pub fn new(atoms: Vec<Atom>, uniform_mass: f64) -> Result<Self, MeasureError> {
        let m = Self::assemble(atoms, uniform_mass)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::TotalMass(total));
        }
        m.check_symmetry()?;
        Ok(m)
    }

    /// Like [`SpectralMeasure::new`] but rescales to unit mass first.
    pub fn normalized(atoms: Vec<Atom>, uniform_mass: f64) -> Result<Self, MeasureError> {
        let mut m = Self::assemble(atoms, uniform_mass)?;
        let total = m.total_mass();
        if total <= 0.0 {
            return Err(MeasureError::TotalMass(total));
        }
        for a in &mut m.atoms {
            a.mass /= total;
        }
        m.uniform_mass /= total;
        m.check_symmetry()?;
        Ok(m)
    }

    fn assemble(atoms: Vec<Atom>, uniform_mass: f64) -> Result<Self, MeasureError> {
        if !(uniform_mass.is_finite() && uniform_mass >= 0.0) {
            return Err(MeasureError::BadMass(uniform_mass));
        }
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| {
                if a.mass.is_finite() && a.mass >= 0.0 && a.angle.is_finite() {
                    Ok(Atom {
                        angle: normalize_angle(a.angle),
                        mass: a.mass,
                    })
                } else {
                    Err(MeasureError::BadMass(a.mass))
                }
            })
            .filter(|a| !matches!(a, Ok(a) if a.mass == 0.0))
            .collect::<Result<_, _>>()?;
        atoms.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.angle - last.angle < ANGLE_MERGE => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        // -1/2 and 1/2 are the same point.
        if merged.len() > 1 {
            let first = merged[0];
            let last = merged[merged.len() - 1];
            if arc_distance(first.angle, last.angle) < ANGLE_MERGE {
                merged.pop();
                merged[0] = Atom {
                    angle: 0.5,
                    mass: first.mass + last.mass,
                };
                merged.sort_by(|a, b| a.angle.total_cmp(&b.angle));
            }
        }
        Ok(Self {
            atoms: merged,
            uniform_mass,
        })
    }

    fn check_symmetry(&self) -> Result<(), MeasureError> {
        for a in &self.atoms {
            let target = normalize_angle(a.angle + 0.5);
            let partner = self
                .atoms
                .iter()
                .find(|b| arc_distance(b.angle, target) < SYMMETRY_TOL);
            match partner {
                Some(b) if (b.mass - a.mass).abs() <= SYMMETRY_TOL => {}
                _ => return Err(MeasureError::NotSymmetric(a.angle)),
            }
        }
        Ok(())
    }

    pub fn uniform() -> Self {
        Self {
            atoms: Vec::new(),
            uniform_mass: 1.0,
        }
    }

    /// `¼(δ₁ + δ_i + δ₋₁ + δ₋ᵢ)`.
    pub fn cilleruelo() -> Self {
        Self::equal_atoms(&[0.0, 0.25, 0.5, -0.25])
    }

    /// The Cilleruelo measure rotated by π/4.
    pub fn tilted_cilleruelo() -> Self {
        Self::equal_atoms(&[0.125, 0.375, -0.125, -0.375])
    }

    /// `½(δ_ζ + δ_{-ζ})` with `ζ` at `angle`.
    pub fn antipodal_pair(angle: f64) -> Self {
        Self::equal_atoms(&[angle, angle + 0.5])
    }

    /// `2·pairs` equal atoms at the cell centres of a uniform partition.
    pub fn atomized_uniform(pairs: usize) -> Self {
        let n = 2 * pairs.max(1);
        let atoms = (0..n)
            .map(|j| Atom {
                angle: (j as f64 + 0.5) / n as f64 - 0.5,
                mass: 1.0 / n as f64,
            })
            .collect();
        Self::assemble(atoms, 0.0).expect("valid atoms")
    }

    fn equal_atoms(angles: &[f64]) -> Self {
        let m = 1.0 / angles.len() as f64;
        Self::new(
            angles.iter().map(|&angle| Atom { angle, mass: m }).collect(),
            0.0,
        )
        .expect("symmetric named measure")
    }

    /// `cilleruelo`, `tilted`, `uniform`, `pair:<angle>` or `atomized:<pairs>`.
    pub fn named(name: &str) -> Result<Self, MeasureError> {
        let unknown = || MeasureError::UnknownName(name.to_string());
        match name {
            "cilleruelo" => Ok(Self::cilleruelo()),
            "tilted" => Ok(Self::tilted_cilleruelo()),
            "uniform" => Ok(Self::uniform()),
            _ => {
                if let Some(a) = name.strip_prefix("pair:") {
                    a.parse().map(Self::antipodal_pair).map_err(|_| unknown())
                } else if let Some(p) = name.strip_prefix("atomized:") {
                    p.parse().map(Self::atomized_uniform).map_err(|_| unknown())
                } else {
                    Err(unknown())
                }
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MeasureError> {
        serde_json::from_str(text).map_err(|e| MeasureError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn uniform_mass(&self) -> f64 {
        self.uniform_mass
    }

    pub fn is_atomic(&self) -> bool {
        self.uniform_mass == 0.0
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.uniform_mass
    }

    /// Replaces the uniform component by `2·pairs` equal atoms.
    pub fn atomize(&self, pairs: usize) -> Self {
        if self.is_atomic() {
            return self.clone();
        }
        let n = 2 * pairs.max(1);
        let mut atoms = self.atoms.clone();
        atoms.extend((0..n).map(|j| Atom {
            angle: (j as f64 + 0.5) / n as f64 - 0.5,
            mass: self.uniform_mass / n as f64,
        }));
        Self::assemble(atoms, 0.0).expect("valid atoms")
    }

    /// `μ̂(n) = ∫ e(-nθ) dμ(θ)`.
    pub fn fourier_coefficient(&self, n: i64) -> Complex64 {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| {
                let (s, c) = (-TAU * n as f64 * a.angle).sin_cos();
                Complex64::new(c, s) * a.mass
            })
            .sum();
        atoms + if n == 0 { self.uniform_mass } else { 0.0 }
    }

    /// `∫ ⟨v, θ⟩² dμ(θ)` for a unit vector `v`.
    pub fn directional_second_moment(&self, v: [f64; 2]) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let d = a.direction();
                a.mass * (d[0] * v[0] + d[1] * v[1]).powi(2)
            })
            .sum();
        atoms + 0.5 * self.uniform_mass * (v[0] * v[0] + v[1] * v[1])
    }

    /// Mass of the half-open arc `(lo, hi]` (angles, `hi - lo ≤ 1`).
    pub fn arc_mass(&self, lo: f64, hi: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| {
                let rel = (a.angle - lo).rem_euclid(1.0);
                rel > 0.0 && rel <= hi - lo
            })
            .map(|a| a.mass)
            .sum();
        atoms + self.uniform_mass * (hi - lo)
    }
}

/// `μ_{E,a} = Σ_ξ |a_ξ|² δ_{ξ/√E}`; `amplitudes[i]` belongs to
/// `points.points()[i]`.
pub fn measure_from_coefficients(
    points: &LatticePointSet,
    amplitudes: &[Complex64],
) -> Result<SpectralMeasure, MeasureError> {
    if points.len() != amplitudes.len() {
        return Err(MeasureError::IndexMismatch {
            expected: points.len(),
            got: amplitudes.len(),
        });
    }
    let atoms = points
        .points()
        .iter()
        .zip(amplitudes)
        .map(|(&p, a)| Atom {
            angle: angle_of(p),
            mass: a.norm_sqr(),
        })
        .collect();
    SpectralMeasure::new(atoms, 0.0)
}

/// Index `k ∈ {-K+1, …, K}` of the arc `((k-1)/2K, k/2K]` containing
/// `angle`.
pub fn arc_index(angle: f64, arcs: usize) -> i64 {
    let k2 = 2 * arcs as i64;
    let x = normalize_angle(angle) * k2 as f64;
    let r = x.round();
    let mut k = if (x - r).abs() < 1e-9 { r as i64 } else { x.ceil() as i64 };
    if k <= -(arcs as i64) {
        k += k2;
    }
    k
}

/// Angle of the midpoint `ζ^{(k)}` of arc `k`.
pub fn arc_midpoint(k: i64, arcs: usize) -> f64 {
    (k as f64 - 0.5) / (2 * arcs) as f64
}

/// One kept arc of an [`ArcBinning`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeptArc {
    pub index: i64,
    /// `μ(I_k)` before renormalization.
    pub mass: f64,
    pub midpoint: f64,
}

impl KeptArc {
    pub fn direction(&self) -> [f64; 2] {
        direction(self.midpoint)
    }
}

/// Partition of the circle into `2K` arcs of length `1/2K`, keeping the
/// arcs of mass at least `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcBinning {
    arcs: usize,
    delta: f64,
    masses: Vec<f64>,
    kept: Vec<KeptArc>,
    binned: Option<SpectralMeasure>,
}

impl ArcBinning {
    pub fn arcs(&self) -> usize {
        self.arcs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `μ(I_k)` for every arc, indexed by `k`.
    pub fn arc_mass(&self, k: i64) -> f64 {
        self.masses[(k + self.arcs as i64 - 1) as usize]
    }

    /// Kept arcs `𝒦` in increasing index order.
    pub fn kept(&self) -> &[KeptArc] {
        &self.kept
    }

    /// `𝒦⁺`.
    pub fn positive(&self) -> impl Iterator<Item = &KeptArc> {
        self.kept.iter().filter(|a| a.index > 0)
    }

    pub fn get(&self, k: i64) -> Option<&KeptArc> {
        self.kept.iter().find(|a| a.index == k)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.get(k).is_some()
    }

    /// `k ↦ k - K` on `𝒦⁺` and `k ↦ k + K` on `𝒦⁻`.
    pub fn partner(&self, k: i64) -> i64 {
        if k > 0 {
            k - self.arcs as i64
        } else {
            k + self.arcs as i64
        }
    }

    pub fn arc_of(&self, angle: f64) -> i64 {
        arc_index(angle, self.arcs)
    }

    /// `Σ_{k∈𝒦} μ(I_k)`.
    pub fn kept_mass(&self) -> f64 {
        self.kept.iter().map(|a| a.mass).sum()
    }

    /// `true` when no arc reaches mass `δ`.
    pub fn is_degenerate(&self) -> bool {
        self.binned.is_none()
    }

    /// `μ_K = Σ_{k∈𝒦} μ_k δ_{ζ^{(k)}}` with `μ_k = μ(I_k)/Σ_{𝒦} μ(I_k)`.
    pub fn binned(&self) -> Option<&SpectralMeasure> {
        self.binned.as_ref()
    }

    /// Renormalized mass `μ_k` of a kept arc.
    pub fn normalized_mass(&self, k: i64) -> Option<f64> {
        let total = self.kept_mass();
        self.get(k).map(|a| a.mass / total)
    }
}

pub fn bin_measure(mu: &SpectralMeasure, arcs: usize, delta: f64) -> Result<ArcBinning, MeasureError> {
    if arcs == 0 {
        return Err(MeasureError::ArcCount);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MeasureError::Delta(delta));
    }
    let k_max = arcs as i64;
    let mut masses = vec![mu.uniform_mass / (2 * arcs) as f64; 2 * arcs];
    let slot = |k: i64| (k + k_max - 1) as usize;
    for a in &mu.atoms {
        masses[slot(arc_index(a.angle, arcs))] += a.mass;
    }
    // Antipodal arcs carry equal mass; average away rounding so the kept
    // set is exactly symmetric.
    for k in 1..=k_max {
        let m = 0.5 * (masses[slot(k)] + masses[slot(k - k_max)]);
        masses[slot(k)] = m;
        masses[slot(k - k_max)] = m;
    }
    let kept: Vec<KeptArc> = (-k_max + 1..=k_max)
        .filter(|&k| masses[slot(k)] >= delta)
        .map(|k| KeptArc {
            index: k,
            mass: masses[slot(k)],
            midpoint: arc_midpoint(k, arcs),
        })
        .collect();
    let total: f64 = kept.iter().map(|a| a.mass).sum();
    let binned = if kept.is_empty() || total <= 0.0 {
        None
    } else {
        let atoms = kept
            .iter()
            .map(|a| Atom {
                angle: a.midpoint,
                mass: a.mass / total,
            })
            .collect();
        Some(SpectralMeasure::normalized(atoms, 0.0)?)
    };
    Ok(ArcBinning {
        arcs,
        delta,
        masses,
        kept,
        binned,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ProkhorovOptions {
    /// Atoms per uniform component; `None` rejects non-atomic input.
    pub atomization: Option<usize>,
}

impl Default for ProkhorovOptions {
    fn default() -> Self {
        Self {
            atomization: Some(DEFAULT_ATOMIZATION),
        }
    }
}

/// Prokhorov distance between two measures on the circle.
///
/// By Strassen's theorem `d(μ,ν) ≤ η` iff some coupling moves all but
/// mass `η` by arc distance at most `η`, i.e. iff the maximum flow `F(η)`
/// through the bipartite atom graph with edges of length `≤ η` is at least
/// `1 - η`. `F` is a non-decreasing step function jumping only at pairwise
/// distances `d_i`, so the distance equals `min_i max(d_i, 1 - F(d_i))`;
/// since the first term increases and the second decreases along `i`, a
/// binary search over the sorted candidates locates the optimum exactly.
pub fn prokhorov_distance(
    mu: &SpectralMeasure,
    nu: &SpectralMeasure,
    opts: ProkhorovOptions,
) -> Result<f64, MeasureError> {
    let atoms = |m: &SpectralMeasure| -> Result<Vec<Atom>, MeasureError> {
        if m.is_atomic() {
            Ok(m.atoms.clone())
        } else {
            match opts.atomization {
                Some(n) => Ok(m.atomize(n.div_ceil(2)).atoms),
                None => Err(MeasureError::NonAtomic),
            }
        }
    };
    let a = atoms(mu)?;
    let b = atoms(nu)?;
    let mut dist = Vec::with_capacity(a.len() * b.len() + 1);
    dist.push(0.0);
    for x in &a {
        for y in &b {
            dist.push(arc_distance(x.angle, y.angle));
        }
    }
    dist.sort_by(f64::total_cmp);
    dist.dedup_by(|p, q| (*p - *q).abs() < 1e-15);

    let deficit = |eta: f64| 1.0 - transport_flow(&a, &b, eta);
    // First index with d_i ≥ 1 - F(d_i).
    let (mut lo, mut hi) = (0usize, dist.len() - 1);
    if dist[hi] < deficit(dist[hi]) {
        // Cannot happen for probability measures: F(1/2) = 1.
        return Ok(deficit(dist[hi]).max(dist[hi]));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if dist[mid] >= deficit(dist[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best = dist[lo];
    if lo > 0 {
        best = best.min(deficit(dist[lo - 1]).max(dist[lo - 1]));
    }
    Ok(best.max(0.0))
}

/// Maximum mass movable from `a` to `b` along arcs of length `≤ eta`.
fn transport_flow(a: &[Atom], b: &[Atom], eta: f64) -> f64 {
    let s = a.len() + b.len();
    let t = s + 1;
    let mut net = FlowNetwork::new(t + 1);
    for (i, x) in a.iter().enumerate() {
        net.add_edge(s, i, x.mass);
        for (j, y) in b.iter().enumerate() {
            if arc_distance(x.angle, y.angle) <= eta + 1e-15 {
                net.add_edge(i, a.len() + j, f64::INFINITY);
            }
        }
    }
    for (j, y) in b.iter().enumerate() {
        net.add_edge(a.len() + j, t, y.mass);
    }
    net.max_flow(s, t)
}
