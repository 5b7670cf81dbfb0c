//! Joint moments and cube probabilities of the arc coefficients
//! `b_k(x) = μ(I_k)^{-1/2} Σ_{ξ∈ℰ^{(k)}} a_ξ e(⟨ξ,x⟩)`, with `x` uniform on
//! the torus, compared against i.i.d. standard complex Gaussians `c_k`.
//!
//! Moments are indexed by the positive kept arcs 𝒦⁺ only; the coefficient on
//! the partner arc is the conjugate of the one on `k`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::eigen::CoefficientVector;
use crate::measure::ArcBinning;
use crate::rng;

/// Default cap on `Σ |dictionary| · |ℰ^{(k)}|` during exact convolution.
pub const DEFAULT_CONVOLUTION_BUDGET: u64 = 2_000_000_000;
/// Default cap on the number of sub-cubes.
pub const DEFAULT_CUBE_BUDGET: u64 = 4_000_000;
/// Default total-order bound for sweeps.
pub const DEFAULT_MAX_ORDER: u32 = 6;

#[derive(Debug, Error)]
pub enum DerandomError {
    #[error("degenerate binning: no arc has mass at least delta")]
    DegenerateBinning,
    #[error("arc {0} is not a kept arc")]
    NotKept(i64),
    #[error("arc {0} is not in the positive half of the kept set")]
    NotPositive(i64),
    #[error("moment spec: {0}")]
    Spec(String),
    #[error("convolution budget exceeded: {needed} > {limit}")]
    Budget { needed: u64, limit: u64 },
    #[error("cube grid has {needed} cells, budget is {limit}")]
    CubeBudget { needed: u64, limit: u64 },
    #[error("total order {order} is not below the bound {bound}")]
    Order { order: u32, bound: u32 },
    #[error("invalid cube parameters: {0}")]
    Cube(String),
    #[error("grid must be at least 1")]
    Grid,
}

/// Exponents `r_k, s_k` on a list of arcs from 𝒦⁺.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentSpec {
    arcs: Vec<i64>,
    r: Vec<u32>,
    s: Vec<u32>,
}

impl MomentSpec {
    pub fn new(arcs: Vec<i64>, r: Vec<u32>, s: Vec<u32>) -> Result<Self, DerandomError> {
        if arcs.len() != r.len() || arcs.len() != s.len() {
            return Err(DerandomError::Spec("arcs, r and s must have equal length".into()));
        }
        let mut seen = arcs.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != arcs.len() {
            return Err(DerandomError::Spec("repeated arc".into()));
        }
        Ok(Self { arcs, r, s })
    }

    pub fn single(k: i64, r: u32, s: u32) -> Self {
        Self { arcs: vec![k], r: vec![r], s: vec![s] }
    }

    pub fn arcs(&self) -> &[i64] {
        &self.arcs
    }

    pub fn r(&self) -> &[u32] {
        &self.r
    }

    pub fn s(&self) -> &[u32] {
        &self.s
    }

    /// `Σ (r_k + s_k)`.
    pub fn order(&self) -> u32 {
        self.r.iter().chain(&self.s).sum()
    }

    /// Same arcs with `r` and `s` exchanged; its moment is the conjugate.
    pub fn swapped(&self) -> Self {
        Self { arcs: self.arcs.clone(), r: self.s.clone(), s: self.r.clone() }
    }

    pub fn is_balanced(&self) -> bool {
        self.r == self.s
    }

    pub fn check_bound(&self, bound: u32) -> Result<(), DerandomError> {
        if self.order() >= bound {
            return Err(DerandomError::Order { order: self.order(), bound });
        }
        Ok(())
    }

    /// Parses `k:r:s` entries separated by `;`.
    pub fn parse(text: &str) -> Result<Self, DerandomError> {
        let (mut arcs, mut r, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let f: Vec<&str> = part.split(':').collect();
            let bad = || DerandomError::Spec(format!("bad entry '{part}', expected k:r:s"));
            if f.len() != 3 {
                return Err(bad());
            }
            arcs.push(f[0].trim().parse().map_err(|_| bad())?);
            r.push(f[1].trim().parse().map_err(|_| bad())?);
            s.push(f[2].trim().parse().map_err(|_| bad())?);
        }
        Self::new(arcs, r, s)
    }
}

impl fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.arcs.len())
            .filter(|&i| self.r[i] + self.s[i] > 0)
            .map(|i| format!("{}:{}:{}", self.arcs[i], self.r[i], self.s[i]))
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(";"))
        }
    }
}

/// `E[Π c_k^{r_k} c̄_k^{s_k}] = Π δ_{r_k,s_k} r_k!` for i.i.d. standard complex Gaussians.
pub fn gaussian_joint_moment(spec: &MomentSpec) -> f64 {
    spec.r
        .iter()
        .zip(&spec.s)
        .map(|(&r, &s)| if r == s { (1..=r).map(f64::from).product() } else { 0.0 })
        .product()
}

/// All specs on `arcs` with `0 < order < bound`, in lexicographic exponent order.
pub fn enumerate_specs(arcs: &[i64], bound: u32) -> Vec<MomentSpec> {
    let slots = 2 * arcs.len();
    let mut out = Vec::new();
    let mut exps = vec![0u32; slots];
    fn rec(i: usize, left: u32, exps: &mut Vec<u32>, arcs: &[i64], out: &mut Vec<MomentSpec>) {
        if i == exps.len() {
            if exps.iter().any(|&e| e > 0) {
                let n = arcs.len();
                out.push(MomentSpec {
                    arcs: arcs.to_vec(),
                    r: exps[..n].to_vec(),
                    s: exps[n..].to_vec(),
                });
            }
            return;
        }
        for e in 0..=left {
            exps[i] = e;
            rec(i + 1, left - e, exps, arcs, out);
        }
        exps[i] = 0;
    }
    if bound > 0 {
        rec(0, bound - 1, &mut exps, arcs, &mut out);
    }
    out
}

/// Lattice points and coefficients on one arc.
#[derive(Debug, Clone)]
struct ArcTerms {
    mass: f64,
    points: Vec<(i64, i64)>,
    coeffs: Vec<Complex64>,
}

fn arc_terms(a: &CoefficientVector, binning: &ArcBinning, k: i64) -> Result<ArcTerms, DerandomError> {
    let arc = binning.get(k).ok_or(DerandomError::NotKept(k))?;
    let members = a.arc_members(binning, k);
    Ok(ArcTerms {
        mass: arc.mass,
        points: members.iter().map(|&i| a.points().points()[i]).collect(),
        coeffs: members.iter().map(|&i| a.entries()[i]).collect(),
    })
}

fn spec_terms(a: &CoefficientVector, binning: &ArcBinning, spec: &MomentSpec) -> Result<Vec<ArcTerms>, DerandomError> {
    if binning.is_degenerate() {
        return Err(DerandomError::DegenerateBinning);
    }
    spec.arcs
        .iter()
        .map(|&k| {
            if k <= 0 {
                return Err(DerandomError::NotPositive(k));
            }
            arc_terms(a, binning, k)
        })
        .collect()
}

/// Exact quasi-moment with its diagonal and off-diagonal parts.
#[derive(Debug, Clone)]
pub struct ExactMoment {
    pub value: Complex64,
    pub diagonal: f64,
    pub off_diagonal: Complex64,
    /// Number of tuples `(ξ, ξ')` whose signed sum vanishes.
    pub vanishing_tuples: u64,
    /// Number of those in which ξ' re-orders ξ within every arc.
    pub diagonal_tuples: u64,
    /// `Π μ(I_k)^{-(r_k+s_k)/2}`.
    pub normalization: f64,
}

impl ExactMoment {
    /// Off-diagonal tuple count `J`.
    pub fn off_diagonal_tuples(&self) -> u64 {
        self.vanishing_tuples - self.diagonal_tuples
    }
}

type Dictionary = HashMap<(i64, i64), (Complex64, u64)>;

fn convolve(
    dict: &Dictionary,
    points: &[(i64, i64)],
    coeffs: &[Complex64],
    conjugate: bool,
    work: &mut u64,
    limit: u64,
) -> Result<Dictionary, DerandomError> {
    *work += dict.len() as u64 * points.len() as u64;
    if *work > limit {
        return Err(DerandomError::Budget { needed: *work, limit });
    }
    let mut out: Dictionary = HashMap::with_capacity(dict.len() * points.len());
    for (&(u, v), &(w, n)) in dict {
        for (&(p, q), &c) in points.iter().zip(coeffs) {
            let (key, c) = if conjugate { ((u - p, v - q), c.conj()) } else { ((u + p, v + q), c) };
            let e = out.entry(key).or_insert((Complex64::new(0.0, 0.0), 0));
            e.0 += w * c;
            e.1 += n;
        }
    }
    Ok(out)
}

/// `Σ_{multisets of size r} (r!/Π m!)² Π |a|^{2m}` and the matching tuple count.
fn diagonal_arc(coeffs: &[Complex64], r: u32) -> (f64, u64) {
    let masses: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
    let fact = |n: u32| -> f64 { (1..=n).map(f64::from).product() };
    let mut value = 0.0;
    let mut count = 0u64;
    let mut mult = vec![0u32; masses.len()];
    fn rec(
        i: usize,
        left: u32,
        mult: &mut Vec<u32>,
        masses: &[f64],
        r: u32,
        fact: &dyn Fn(u32) -> f64,
        value: &mut f64,
        count: &mut u64,
    ) {
        if i == masses.len() {
            if left == 0 {
                let multinomial = fact(r) / mult.iter().map(|&m| fact(m)).product::<f64>();
                let weight: f64 = mult.iter().zip(masses).map(|(&m, &w)| w.powi(m as i32)).product();
                *value += multinomial * multinomial * weight;
                *count += (multinomial * multinomial).round() as u64;
            }
            return;
        }
        for m in 0..=left {
            mult[i] = m;
            rec(i + 1, left - m, mult, masses, r, fact, value, count);
        }
        mult[i] = 0;
    }
    rec(0, r, &mut mult, &masses, r, &fact, &mut value, &mut count);
    (value, count)
}

pub fn bk_moment_exact(a: &CoefficientVector, binning: &ArcBinning, spec: &MomentSpec) -> Result<ExactMoment, DerandomError> {
    bk_moment_exact_with_budget(a, binning, spec, DEFAULT_CONVOLUTION_BUDGET)
}

/// Sums `Π a_ξ Π ā_{ξ'}` over tuples with repetition whose signed sum is zero.
pub fn bk_moment_exact_with_budget(
    a: &CoefficientVector,
    binning: &ArcBinning,
    spec: &MomentSpec,
    budget: u64,
) -> Result<ExactMoment, DerandomError> {
    let terms = spec_terms(a, binning, spec)?;
    let mut dict: Dictionary = HashMap::from([((0, 0), (Complex64::new(1.0, 0.0), 1))]);
    let mut work = 0u64;
    let mut normalization = 1.0;
    let mut diagonal = 1.0;
    let mut diagonal_tuples = 1u64;
    for (i, t) in terms.iter().enumerate() {
        let (r, s) = (spec.r[i], spec.s[i]);
        for _ in 0..r {
            dict = convolve(&dict, &t.points, &t.coeffs, false, &mut work, budget)?;
        }
        for _ in 0..s {
            dict = convolve(&dict, &t.points, &t.coeffs, true, &mut work, budget)?;
        }
        normalization *= t.mass.powf(-f64::from(r + s) / 2.0);
        if r == s {
            let (v, c) = diagonal_arc(&t.coeffs, r);
            diagonal *= v;
            diagonal_tuples *= c;
        } else {
            diagonal = 0.0;
            diagonal_tuples = 0;
        }
    }
    let (raw, vanishing_tuples) = dict.get(&(0, 0)).copied().unwrap_or((Complex64::new(0.0, 0.0), 0));
    let value = raw * normalization;
    let diagonal = diagonal * normalization;
    Ok(ExactMoment {
        value,
        diagonal,
        off_diagonal: value - diagonal,
        vanishing_tuples,
        diagonal_tuples,
        normalization,
    })
}

/// Smallest grid at which the rectangle rule integrates the moment exactly.
pub fn quadrature_threshold(energy: u64, spec: &MomentSpec) -> usize {
    let root = (energy as f64).sqrt().floor() as usize;
    2 * spec.order() as usize * root + 1
}

/// `b_k` for every arc in 𝒦⁺ sampled at `x = (i/G, j/G)`.
#[derive(Debug, Clone)]
pub struct BkGrid {
    grid: usize,
    energy: u64,
    arcs: Vec<i64>,
    values: Vec<Vec<Complex64>>,
}

impl BkGrid {
    pub fn new(a: &CoefficientVector, binning: &ArcBinning, grid: usize) -> Result<Self, DerandomError> {
        if grid == 0 {
            return Err(DerandomError::Grid);
        }
        if binning.is_degenerate() {
            return Err(DerandomError::DegenerateBinning);
        }
        let roots: Vec<Complex64> = (0..grid).map(|t| Complex64::from_polar(1.0, TAU * t as f64 / grid as f64)).collect();
        let g = grid as i64;
        let arcs: Vec<i64> = binning.positive().map(|k| k.index).collect();
        let values = arcs
            .iter()
            .map(|&k| {
                let t = arc_terms(a, binning, k)?;
                let scale = t.mass.sqrt().recip();
                let v: Vec<Complex64> = (0..grid * grid)
                    .into_par_iter()
                    .map(|idx| {
                        let (i, j) = ((idx / grid) as i64, (idx % grid) as i64);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (&(p, q), &c) in t.points.iter().zip(&t.coeffs) {
                            acc += c * roots[(p * i + q * j).rem_euclid(g) as usize];
                        }
                        acc * scale
                    })
                    .collect();
                Ok(v)
            })
            .collect::<Result<_, DerandomError>>()?;
        Ok(Self { grid, energy: a.energy(), arcs, values })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn arcs(&self) -> &[i64] {
        &self.arcs
    }

    /// Sampled `b_k` on the grid, row-major.
    pub fn values(&self, k: i64) -> Option<&[Complex64]> {
        self.arcs.iter().position(|&a| a == k).map(|i| self.values[i].as_slice())
    }

    pub fn moment(&self, spec: &MomentSpec) -> Result<Quadrature, DerandomError> {
        let mut factors = Vec::new();
        for (i, &k) in spec.arcs.iter().enumerate() {
            let (r, s) = (spec.r[i], spec.s[i]);
            if r + s == 0 {
                continue;
            }
            if k <= 0 {
                return Err(DerandomError::NotPositive(k));
            }
            let v = self.values(k).ok_or(DerandomError::NotKept(k))?;
            factors.push((v, r as i32, s as i32));
        }
        let n = self.grid * self.grid;
        let sum: Complex64 = (0..n)
            .into_par_iter()
            .map(|idx| {
                factors
                    .iter()
                    .map(|&(v, r, s)| v[idx].powi(r) * v[idx].conj().powi(s))
                    .product::<Complex64>()
            })
            .sum();
        let threshold = quadrature_threshold(self.energy, spec);
        Ok(Quadrature {
            value: sum / n as f64,
            grid: self.grid,
            threshold,
            exact: self.grid >= threshold,
        })
    }
}

/// Rectangle-rule quasi-moment and whether the grid is at the exactness threshold.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub grid: usize,
    pub threshold: usize,
    pub exact: bool,
}

pub fn bk_moment_quadrature(
    a: &CoefficientVector,
    binning: &ArcBinning,
    spec: &MomentSpec,
    grid: usize,
) -> Result<Quadrature, DerandomError> {
    spec_terms(a, binning, spec)?;
    BkGrid::new(a, binning, grid)?.moment(spec)
}

#[derive(Debug, Clone)]
pub struct MomentComparison {
    pub spec: MomentSpec,
    pub gaussian: f64,
    pub exact: ExactMoment,
    pub quadrature: Option<Quadrature>,
}

impl MomentComparison {
    /// `|gaussian − exact|`.
    pub fn gap(&self) -> f64 {
        (Complex64::new(self.gaussian, 0.0) - self.exact.value).norm()
    }

    pub fn quadrature_error(&self) -> Option<f64> {
        self.quadrature.map(|q| (q.value - self.exact.value).norm())
    }

    pub const CSV_HEADER: &'static str =
        "spec,gaussian,exact_re,exact_im,quadrature_re,quadrature_im,gap,diagonal,off_diagonal_abs,off_diagonal_tuples";

    pub fn csv_row(&self) -> String {
        let (qr, qi) = match self.quadrature {
            Some(q) => (format!("{:.12e}", q.value.re), format!("{:.12e}", q.value.im)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{:.12e},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{}",
            self.spec,
            self.gaussian,
            self.exact.value.re,
            self.exact.value.im,
            qr,
            qi,
            self.gap(),
            self.exact.diagonal,
            self.exact.off_diagonal.norm(),
            self.exact.off_diagonal_tuples()
        )
    }
}

/// Result of comparing every spec with `0 < order < bound`.
#[derive(Debug, Clone)]
pub struct GapSweep {
    pub bound: u32,
    pub max_coefficient_mass: f64,
    pub comparisons: Vec<MomentComparison>,
}

impl GapSweep {
    pub fn max_gap(&self) -> f64 {
        self.comparisons.iter().map(MomentComparison::gap).fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> Option<&MomentComparison> {
        self.comparisons.iter().max_by(|a, b| a.gap().total_cmp(&b.gap()))
    }

    /// Max over specs of `|off-diagonal| / (M^{order/2} · J · Π μ_k^{-(r_k+s_k)/2})`,
    /// over specs with `J > 0`. Never exceeds 1.
    pub fn off_diagonal_shape_ratio(&self) -> f64 {
        self.comparisons
            .iter()
            .filter(|c| c.exact.off_diagonal_tuples() > 0)
            .map(|c| {
                let shape = self.max_coefficient_mass.powf(f64::from(c.spec.order()) / 2.0)
                    * c.exact.off_diagonal_tuples() as f64
                    * c.exact.normalization;
                c.exact.off_diagonal.norm() / shape
            })
            .fold(0.0, f64::max)
    }

    /// Max gap over specs of order exactly 2.
    pub fn order_two_gap(&self) -> f64 {
        self.comparisons
            .iter()
            .filter(|c| c.spec.order() == 2)
            .map(MomentComparison::gap)
            .fold(0.0, f64::max)
    }
}

/// Exact moments for every spec on 𝒦⁺ with `0 < order < bound`.
/// With `quadrature`, each is also cross-checked on the exactness grid.
pub fn moment_gap_sweep(
    a: &CoefficientVector,
    binning: &ArcBinning,
    bound: u32,
    quadrature: bool,
) -> Result<GapSweep, DerandomError> {
    if binning.is_degenerate() {
        return Err(DerandomError::DegenerateBinning);
    }
    if bound > DEFAULT_MAX_ORDER {
        return Err(DerandomError::Order { order: bound, bound: DEFAULT_MAX_ORDER });
    }
    let arcs: Vec<i64> = binning.positive().map(|k| k.index).collect();
    let specs = enumerate_specs(&arcs, bound);
    let grid = match (quadrature, specs.iter().map(MomentSpec::order).max()) {
        (true, Some(order)) => {
            let top = MomentSpec::single(1, order, 0);
            Some(BkGrid::new(a, binning, quadrature_threshold(a.energy(), &top))?)
        }
        _ => None,
    };
    let comparisons = specs
        .into_iter()
        .map(|spec| {
            let exact = bk_moment_exact(a, binning, &spec)?;
            let quadrature = grid.as_ref().map(|g| g.moment(&spec)).transpose()?;
            Ok(MomentComparison { gaussian: gaussian_joint_moment(&spec), spec, exact, quadrature })
        })
        .collect::<Result<_, DerandomError>>()?;
    Ok(GapSweep { bound, max_coefficient_mass: a.max_mass(), comparisons })
}

/// How `P(c ∈ Q_β)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianReference {
    /// Product of 1-d normal interval probabilities.
    ClosedForm,
    MonteCarlo { trials: usize },
}

#[derive(Debug, Clone)]
pub struct CubeOptions {
    /// Side `L` of the cube `[−L/2, L/2]^{2κ}`.
    pub side: f64,
    /// Sub-cube side bound `η`; each axis is split into `⌈L/η⌉` equal cells.
    pub eta: f64,
    pub x_samples: usize,
    pub reference: GaussianReference,
    pub seed: u64,
    /// Half-width of the reported boundary band, as a fraction of the cell side.
    pub band_fraction: f64,
    pub max_cells: u64,
}

impl CubeOptions {
    pub fn new(side: f64, eta: f64, x_samples: usize, seed: u64) -> Self {
        Self {
            side,
            eta,
            x_samples,
            reference: GaussianReference::ClosedForm,
            seed,
            band_fraction: 0.05,
            max_cells: DEFAULT_CUBE_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CubeGap {
    /// `κ = |𝒦⁺|`; the cube lives in `ℝ^{2κ}`.
    pub kappa: usize,
    pub cells_per_axis: usize,
    pub cell_count: u64,
    /// `sup_β |P_x(b ∈ Q_β) − P(c ∈ Q_β)|`.
    pub gap: f64,
    pub argmax_cell: Vec<usize>,
    /// Max over cells of the binomial standard error of the comparison.
    pub stderr_ceiling: f64,
    /// Fraction of x-samples with some coordinate within the band of a cell face.
    pub boundary_band_mass: f64,
    pub band_width: f64,
    pub x_samples: usize,
}

impl CubeGap {
    pub fn within_band(&self, sigmas: f64) -> bool {
        self.gap <= sigmas * self.stderr_ceiling
    }
}

struct CellGrid {
    lo: f64,
    width: f64,
    m: usize,
}

impl CellGrid {
    fn locate(&self, t: f64) -> Option<usize> {
        let u = (t - self.lo) / self.width;
        if !(0.0..self.m as f64).contains(&u) {
            return None;
        }
        Some((u.floor() as usize).min(self.m - 1))
    }

    fn near_face(&self, t: f64, band: f64) -> bool {
        let u = (t - self.lo) / self.width;
        let frac = u - u.round();
        frac.abs() * self.width < band
    }
}

fn cell_key(coords: &[f64], cells: &CellGrid) -> Option<u64> {
    let mut key = 0u64;
    for &t in coords {
        key = key * cells.m as u64 + cells.locate(t)? as u64;
    }
    Some(key)
}

fn decode_key(mut key: u64, m: usize, dims: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    for slot in out.iter_mut().rev() {
        *slot = (key % m as u64) as usize;
        key /= m as u64;
    }
    out
}

/// Compares the x-distribution of `(Re b_k, Im b_k)_{k∈𝒦⁺}` with the Gaussian
/// one on the sub-cubes of `[−L/2, L/2]^{2κ}` (shift `λ = 0`).
pub fn cube_probability_gap(a: &CoefficientVector, binning: &ArcBinning, opts: &CubeOptions) -> Result<CubeGap, DerandomError> {
    if binning.is_degenerate() {
        return Err(DerandomError::DegenerateBinning);
    }
    if !(opts.side >= 0.0 && opts.side.is_finite()) || !(opts.eta > 0.0) {
        return Err(DerandomError::Cube("need L >= 0 and eta > 0".into()));
    }
    if opts.x_samples == 0 {
        return Err(DerandomError::Cube("need at least one x-sample".into()));
    }
    let terms: Vec<ArcTerms> = binning
        .positive()
        .map(|k| arc_terms(a, binning, k.index))
        .collect::<Result<_, _>>()?;
    let kappa = terms.len();
    let dims = 2 * kappa;
    let m = ((opts.side / opts.eta).ceil() as usize).max(1);
    let cell_count = (m as u64).checked_pow(dims as u32).unwrap_or(u64::MAX);
    if cell_count > opts.max_cells {
        return Err(DerandomError::CubeBudget { needed: cell_count, limit: opts.max_cells });
    }
    let width = opts.side / m as f64;
    let cells = CellGrid { lo: -opts.side / 2.0, width, m };
    let band = opts.band_fraction * width;

    let mut rng_x = rng::stream(opts.seed, 0);
    let mut empirical: HashMap<u64, u64> = HashMap::new();
    let mut band_hits = 0usize;
    let mut coords = vec![0.0; dims];
    for _ in 0..opts.x_samples {
        let x = [rng_x.random::<f64>(), rng_x.random::<f64>()];
        for (i, t) in terms.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&(p, q), &c) in t.points.iter().zip(&t.coeffs) {
                acc += c * Complex64::from_polar(1.0, TAU * (p as f64 * x[0] + q as f64 * x[1]));
            }
            let b = acc / t.mass.sqrt();
            coords[2 * i] = b.re;
            coords[2 * i + 1] = b.im;
        }
        if width > 0.0 && coords.iter().any(|&c| cells.near_face(c, band)) {
            band_hits += 1;
        }
        if width > 0.0 {
            if let Some(key) = cell_key(&coords, &cells) {
                *empirical.entry(key).or_default() += 1;
            }
        }
    }
    let n = opts.x_samples as f64;

    enum Reference {
        Axis(Vec<f64>),
        Sampled(HashMap<u64, u64>, f64),
    }
    let reference = match opts.reference {
        GaussianReference::ClosedForm => {
            let normal = Normal::new(0.0, FRAC_1_SQRT_2).expect("valid normal");
            let axis = (0..m)
                .map(|j| {
                    let lo = cells.lo + j as f64 * width;
                    normal.cdf(lo + width) - normal.cdf(lo)
                })
                .collect();
            Reference::Axis(axis)
        }
        GaussianReference::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(DerandomError::Cube("need at least one Gaussian trial".into()));
            }
            let mut rng_c = rng::stream(opts.seed, 1);
            let mut counts: HashMap<u64, u64> = HashMap::new();
            for _ in 0..trials {
                for i in 0..kappa {
                    let c = rng::complex_normal(&mut rng_c);
                    coords[2 * i] = c.re;
                    coords[2 * i + 1] = c.im;
                }
                if width > 0.0 {
                    if let Some(key) = cell_key(&coords, &cells) {
                        *counts.entry(key).or_default() += 1;
                    }
                }
            }
            Reference::Sampled(counts, trials as f64)
        }
    };

    let mut gap = 0.0;
    let mut argmax = 0u64;
    let mut ceiling: f64 = 0.0;
    for key in 0..if width > 0.0 { cell_count } else { 0 } {
        let idx = decode_key(key, m, dims);
        let p_emp = empirical.get(&key).copied().unwrap_or(0) as f64 / n;
        let (p_ref, var_ref) = match &reference {
            Reference::Axis(axis) => (idx.iter().map(|&j| axis[j]).product::<f64>(), 0.0),
            Reference::Sampled(counts, t) => {
                let p = counts.get(&key).copied().unwrap_or(0) as f64 / t;
                (p, p * (1.0 - p) / t)
            }
        };
        let d = (p_emp - p_ref).abs();
        if d > gap {
            gap = d;
            argmax = key;
        }
        ceiling = ceiling.max((p_ref * (1.0 - p_ref) / n + var_ref).sqrt());
    }
    Ok(CubeGap {
        kappa,
        cells_per_axis: m,
        cell_count,
        gap,
        argmax_cell: decode_key(argmax, m, dims),
        stderr_ceiling: ceiling,
        boundary_band_mass: band_hits as f64 / n,
        band_width: band,
        x_samples: opts.x_samples,
    })
}

/// `det` of the Jacobian of `x ↦ (Re b_k(x), Im b_k(x))`:
/// `(4π²/μ(I_k)) · Im Σ_{ξ,ξ'} ξ₁ ξ'₂ ā_ξ a_{ξ'} e(⟨ξ'−ξ, x⟩)`, for any kept `k`.
pub fn bk_jacobian_det(a: &CoefficientVector, binning: &ArcBinning, k: i64, x: [f64; 2]) -> Result<f64, DerandomError> {
    let t = arc_terms(a, binning, k)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(p1, p2), &c1) in t.points.iter().zip(&t.coeffs) {
        for (&(q1, q2), &c2) in t.points.iter().zip(&t.coeffs) {
            let arg = TAU * ((q1 - p1) as f64 * x[0] + (q2 - p2) as f64 * x[1]);
            acc += (p1 * q2) as f64 * c1.conj() * c2 * Complex64::from_polar(1.0, arg);
        }
    }
    Ok(TAU * TAU / t.mass * acc.im)
}

/// Five-point finite-difference determinant of the same map; the step is
/// `h / (2π√E)` in each coordinate.
pub fn bk_jacobian_fd(a: &CoefficientVector, binning: &ArcBinning, k: i64, x: [f64; 2], h: f64) -> Result<f64, DerandomError> {
    let t = arc_terms(a, binning, k)?;
    let b = |y: [f64; 2]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&(p, q), &c) in t.points.iter().zip(&t.coeffs) {
            acc += c * Complex64::from_polar(1.0, TAU * (p as f64 * y[0] + q as f64 * y[1]));
        }
        acc / t.mass.sqrt()
    };
    let step = h / (TAU * (a.energy() as f64).sqrt());
    let deriv = |axis: usize| -> Complex64 {
        let at = |m: f64| {
            let mut y = x;
            y[axis] += m * step;
            b(y)
        };
        (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * step)
    };
    let (d1, d2) = (deriv(0), deriv(1));
    Ok(d1.re * d2.im - d2.re * d1.im)
}
