//! Toral eigenfunctions `f(x) = Σ_ξ a_ξ e(⟨ξ, x⟩)`, their blow-ups and the
//! arc-gathering decomposition.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{nodes, Field, Wave, WaveField};
use crate::lattice::{LatticeError, LatticePointSet, Point};
use crate::measure::{self, angle_of, arc_index, ArcBinning, MeasureError, SpectralMeasure};
use crate::rng;

/// Tolerance for explicit coefficient lists.
pub const INPUT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("random coefficients need at least one Hermitian pair")]
    TooFewPoints,
    #[error("{0:?} does not lie on the circle")]
    NotOnCircle(Point),
    #[error("coefficient at {0:?} is not the conjugate of its antipode")]
    NotHermitian(Point),
    #[error("squared norm {0} differs from 1")]
    Norm(f64),
    #[error("R = {r} must lie in (1, {max})")]
    Radius { r: f64, max: f64 },
    #[error("no arc carries mass at least delta")]
    DegenerateBinning,
    #[error("grid step must be positive and at most 1e-2, got {0}")]
    GridStep(f64),
    #[error("at least {min} samples required, got {got}")]
    Samples { min: usize, got: usize },
    #[error("invalid coefficient file: {0}")]
    Parse(String),
}

/// How to choose the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    /// `a_ξ = 1/√N`.
    Equal,
    /// Uniform on the unit sphere of Hermitian vectors.
    RandomSphere(u64),
    /// Listed entries; omitted points get 0.
    Explicit(Vec<(Point, Complex64)>),
}

impl CoefficientSpec {
    /// `equal`, `random:<seed>`; file specs are handled by the caller.
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "equal" => Some(Self::Equal),
            _ => text
                .strip_prefix("random:")
                .and_then(|s| s.parse().ok())
                .map(Self::RandomSphere),
        }
    }

    /// Short identifier used in tables and cache keys.
    pub fn id(&self) -> String {
        match self {
            Self::Equal => "equal".into(),
            Self::RandomSphere(s) => format!("random:{s}"),
            Self::Explicit(v) => {
                let body: Vec<String> = v
                    .iter()
                    .map(|((p, q), a)| format!("{p}:{q}:{:e}:{:e}", a.re, a.im))
                    .collect();
                format!("explicit[{}]", body.join(";"))
            }
        }
    }
}

/// Parses CSV rows `xi1,xi2,re,im`; a header line and `#` comments are
/// skipped.
pub fn parse_coefficient_csv(text: &str) -> Result<Vec<(Point, Complex64)>, EigenError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("xi1") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || EigenError::Parse(format!("line {}: {line:?}", lineno + 1));
        if cols.len() != 4 {
            return Err(bad());
        }
        let p = (cols[0].parse().map_err(|_| bad())?, cols[1].parse().map_err(|_| bad())?);
        let a = Complex64::new(cols[2].parse().map_err(|_| bad())?, cols[3].parse().map_err(|_| bad())?);
        out.push((p, a));
    }
    Ok(out)
}

/// Hermitian-symmetric unit vector `(a_ξ)` over `ℰ_E`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    points: LatticePointSet,
    entries: Vec<Complex64>,
}

pub fn build_coefficients(points: &LatticePointSet, spec: &CoefficientSpec) -> Result<CoefficientVector, EigenError> {
    points.require_circle()?;
    let n = points.len();
    let entries = match spec {
        CoefficientSpec::Equal => vec![Complex64::new((n as f64).recip().sqrt(), 0.0); n],
        CoefficientSpec::RandomSphere(seed) => {
            if n < 2 {
                return Err(EigenError::TooFewPoints);
            }
            let mut r = rng::stream(*seed, 0);
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for i in n / 2..n {
                let z = rng::complex_normal(&mut r);
                v[i] = z;
                v[points.antipode(i)] = z.conj();
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter().map(|z| z / norm).collect()
        }
        CoefficientSpec::Explicit(list) => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for &(p, a) in list {
                let i = points.index_of(p).ok_or(EigenError::NotOnCircle(p))?;
                v[i] = a;
            }
            for i in 0..n {
                if (v[i] - v[points.antipode(i)].conj()).norm() > INPUT_TOL {
                    return Err(EigenError::NotHermitian(points.points()[i]));
                }
            }
            let sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if (sq - 1.0).abs() > INPUT_TOL {
                return Err(EigenError::Norm(sq));
            }
            // Snap to exact symmetry and unit norm.
            let norm = sq.sqrt();
            let mut w = v.clone();
            for i in n / 2..n {
                w[i] = v[i] / norm;
                w[points.antipode(i)] = w[i].conj();
            }
            w
        }
    };
    Ok(CoefficientVector {
        points: points.clone(),
        entries,
    })
}

/// Slowly growing functions for the class `𝒜(g)` check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlowGrowth {
    Constant(f64),
    /// `log₊ x = max(log x, 0)`.
    Log,
    /// `(log₊ x)^p`.
    LogPow(f64),
}

impl SlowGrowth {
    pub fn eval(&self, x: f64) -> f64 {
        let lp = x.ln().max(0.0);
        match *self {
            Self::Constant(c) => c,
            Self::Log => lp,
            Self::LogPow(p) => lp.powf(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassACheck {
    pub max_mass: f64,
    pub bound: f64,
    pub passes: bool,
}

impl CoefficientVector {
    pub fn points(&self) -> &LatticePointSet {
        &self.points
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn energy(&self) -> u64 {
        self.points.energy()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: Point) -> Option<Complex64> {
        self.points.index_of(p).map(|i| self.entries[i])
    }

    /// `M = max |a_ξ|²`.
    pub fn max_mass(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    /// `M ≤ g(N)/N`.
    pub fn class_a_check(&self, g: SlowGrowth) -> ClassACheck {
        let n = self.len() as f64;
        let max_mass = self.max_mass();
        let bound = g.eval(n) / n;
        ClassACheck {
            max_mass,
            bound,
            // 1/N computed as |1/√N|² may exceed 1/N by one ulp
            passes: max_mass <= bound * (1.0 + 1e-12),
        }
    }

    pub fn spectral_measure(&self) -> SpectralMeasure {
        measure::measure_from_coefficients(&self.points, &self.entries).expect("coefficient invariants give a valid measure")
    }

    /// Complex sum `Σ a_ξ e(⟨ξ,x⟩)`; its imaginary part is rounding noise.
    pub fn evaluate_complex(&self, x: [f64; 2]) -> Complex64 {
        self.points
            .points()
            .iter()
            .zip(&self.entries)
            .map(|(&(p, q), a)| a * phase(p as f64 * x[0] + q as f64 * x[1]))
            .sum()
    }

    /// `f(x)` and `∇f(x)`.
    pub fn evaluate(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let f = self.torus_field();
        (f.value(x), f.gradient(x))
    }

    /// `f` as a plane-wave field on the torus (one wave per Hermitian pair).
    pub fn torus_field(&self) -> WaveField {
        let waves = self
            .upper_half()
            .map(|i| {
                let (p, q) = self.points.points()[i];
                Wave {
                    amplitude: 2.0 * self.entries[i],
                    frequency: [p as f64, q as f64],
                }
            })
            .collect();
        WaveField::new(waves, (self.energy() as f64).sqrt())
    }

    /// `F_x(y) = f(x + R y/√E)`.
    pub fn blow_up(&self, x: [f64; 2], r: f64) -> Result<WaveField, EigenError> {
        let sqrt_e = self.check_radius(r)?;
        let waves = self
            .upper_half()
            .map(|i| {
                let (p, q) = self.points.points()[i];
                Wave {
                    amplitude: 2.0 * self.entries[i] * phase(p as f64 * x[0] + q as f64 * x[1]),
                    frequency: [r * p as f64 / sqrt_e, r * q as f64 / sqrt_e],
                }
            })
            .collect();
        Ok(WaveField::new(waves, r))
    }

    fn check_radius(&self, r: f64) -> Result<f64, EigenError> {
        let sqrt_e = (self.energy() as f64).sqrt();
        if r > 1.0 && r < sqrt_e {
            Ok(sqrt_e)
        } else {
            Err(EigenError::Radius { r, max: sqrt_e })
        }
    }

    fn upper_half(&self) -> std::ops::Range<usize> {
        self.len() / 2..self.len()
    }

    /// Arc index of every point under `binning`; antipodes are assigned
    /// the partner arc so the pairing is exact.
    fn arc_labels(&self, binning: &ArcBinning) -> Vec<i64> {
        let mut labels = vec![0; self.len()];
        for i in self.upper_half() {
            let k = arc_index(angle_of(self.points.points()[i]), binning.arcs());
            labels[i] = k;
            labels[self.points.antipode(i)] = binning.partner(k);
        }
        labels
    }

    /// `b_k(x) = μ(I_k)^{-1/2} Σ_{ξ∈ℰ^{(k)}} a_ξ e(⟨ξ,x⟩)` for every kept arc,
    /// in the order of `binning.kept()`.
    pub fn arc_coefficients(&self, binning: &ArcBinning, x: [f64; 2]) -> Vec<Complex64> {
        let parts = self.arc_partial_sums(binning, x);
        binning
            .kept()
            .iter()
            .zip(parts)
            .map(|(arc, s)| s / arc.mass.sqrt())
            .collect()
    }

    fn arc_partial_sums(&self, binning: &ArcBinning, x: [f64; 2]) -> Vec<Complex64> {
        let labels = self.arc_labels(binning);
        let mut sums = vec![Complex64::new(0.0, 0.0); binning.kept().len()];
        for (i, &(p, q)) in self.points.points().iter().enumerate() {
            if let Some(slot) = binning.kept().iter().position(|a| a.index == labels[i]) {
                sums[slot] += self.entries[i] * phase(p as f64 * x[0] + q as f64 * x[1]);
            }
        }
        sums
    }

    /// Members `ℰ^{(k)}` of a kept arc as indices into the point list.
    pub fn arc_members(&self, binning: &ArcBinning, k: i64) -> Vec<usize> {
        let labels = self.arc_labels(binning);
        (0..self.len()).filter(|&i| labels[i] == k).collect()
    }

    /// Splits `F_x = ψ̃_{0,x} + φ_x + (F̃_x - φ_x)`.
    pub fn gather_local(&self, x: [f64; 2], r: f64, arcs: usize, delta: f64) -> Result<LocalDecomposition, EigenError> {
        let sqrt_e = self.check_radius(r)?;
        let binning = measure::bin_measure(&self.spectral_measure(), arcs, delta)?;
        if binning.is_degenerate() {
            return Err(EigenError::DegenerateBinning);
        }
        let labels = self.arc_labels(&binning);
        let mut phi = Vec::new();
        let mut leftover = Vec::new();
        let mut residual = Vec::new();
        for i in self.upper_half() {
            let (p, q) = self.points.points()[i];
            let amp = 2.0 * self.entries[i] * phase(p as f64 * x[0] + q as f64 * x[1]);
            let freq = [r * p as f64 / sqrt_e, r * q as f64 / sqrt_e];
            match binning.get(labels[i]) {
                Some(arc) => {
                    let d = arc.direction();
                    let mid = [r * d[0], r * d[1]];
                    phi.push(Wave {
                        amplitude: amp,
                        frequency: mid,
                    });
                    residual.push(Wave {
                        amplitude: amp,
                        frequency: freq,
                    });
                    residual.push(Wave {
                        amplitude: -amp,
                        frequency: mid,
                    });
                }
                None => leftover.push(Wave {
                    amplitude: amp,
                    frequency: freq,
                }),
            }
        }
        let bk = self.arc_coefficients(&binning, x);
        Ok(LocalDecomposition {
            x,
            r,
            bk,
            binning,
            phi: WaveField::new(phi, r),
            leftover: WaveField::new(leftover, r),
            residual: WaveField::new(residual, r),
        })
    }
}

#[inline]
fn phase(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Local picture of `f` near `x` at scale `R/√E`.
#[derive(Debug, Clone)]
pub struct LocalDecomposition {
    pub x: [f64; 2],
    pub r: f64,
    pub binning: ArcBinning,
    /// `b_k(x)` in the order of `binning.kept()`.
    pub bk: Vec<Complex64>,
    /// `φ_x(y) = Σ_{k∈𝒦} μ(I_k)^{1/2} b_k(x) e(⟨Rζ^{(k)}, y⟩)`.
    pub phi: WaveField,
    /// `ψ̃_{0,x}`: frequencies in discarded arcs.
    pub leftover: WaveField,
    /// `F̃_x - φ_x`.
    pub residual: WaveField,
}

impl LocalDecomposition {
    pub fn bk_of(&self, k: i64) -> Option<Complex64> {
        self.binning
            .kept()
            .iter()
            .position(|a| a.index == k)
            .map(|i| self.bk[i])
    }
}

/// `‖f‖_∞ + ‖∂₁f‖_∞ + ‖∂₂f‖_∞` over the nodes of `[-1,1]²` at spacing
/// `grid_step`.
pub fn c1_norm(field: &dyn Field, grid_step: f64) -> Result<f64, EigenError> {
    if !(grid_step > 0.0 && grid_step <= 1e-2) {
        return Err(EigenError::GridStep(grid_step));
    }
    let n = (2.0 / grid_step).ceil() as usize;
    let g = nodes(-1.0, 2.0 / n as f64, n);
    let s = field.sample_with_gradient(&g, &g);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(sup(&s.value) + sup(&s.d1) + sup(&s.d2))
}

/// Monte Carlo means of the squared `C¹` norms of `ψ̃_{0,x}` and
/// `F̃_x - φ_x` against the bounds `R⁶δK` and `R⁸/K²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStatistics {
    pub samples: usize,
    pub leftover_mean: f64,
    pub leftover_stderr: f64,
    pub residual_mean: f64,
    pub residual_stderr: f64,
    pub leftover_bound: f64,
    pub residual_bound: f64,
}

impl ResidualStatistics {
    pub fn leftover_ratio(&self) -> f64 {
        self.leftover_mean / self.leftover_bound
    }

    pub fn residual_ratio(&self) -> f64 {
        self.residual_mean / self.residual_bound
    }
}

pub const MIN_RESIDUAL_SAMPLES: usize = 16;
/// Grid step for the sampled `C¹` norms.
pub const RESIDUAL_GRID_STEP: f64 = 1e-2;

pub fn residual_statistics(
    a: &CoefficientVector,
    r: f64,
    arcs: usize,
    delta: f64,
    x_samples: usize,
    seed: u64,
) -> Result<ResidualStatistics, EigenError> {
    if x_samples < MIN_RESIDUAL_SAMPLES {
        return Err(EigenError::Samples {
            min: MIN_RESIDUAL_SAMPLES,
            got: x_samples,
        });
    }
    // Surface configuration errors before the parallel loop.
    a.gather_local([0.0, 0.0], r, arcs, delta)?;
    let pairs: Vec<(f64, f64)> = (0..x_samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i as u64);
            let x = [g.random::<f64>(), g.random::<f64>()];
            let d = a.gather_local(x, r, arcs, delta).expect("validated");
            let l = c1_norm(&d.leftover, RESIDUAL_GRID_STEP).expect("valid step");
            let q = c1_norm(&d.residual, RESIDUAL_GRID_STEP).expect("valid step");
            (l * l, q * q)
        })
        .collect();
    let (lm, ls) = mean_stderr(pairs.iter().map(|p| p.0));
    let (qm, qs) = mean_stderr(pairs.iter().map(|p| p.1));
    let k = arcs as f64;
    Ok(ResidualStatistics {
        samples: x_samples,
        leftover_mean: lm,
        leftover_stderr: ls,
        residual_mean: qm,
        residual_stderr: qs,
        leftover_bound: r.powi(6) * delta * k,
        residual_bound: r.powi(8) / (k * k),
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::lattice_points;
    use crate::measure::bin_measure;

    fn equal(e: u64) -> CoefficientVector {
        build_coefficients(&lattice_points(e), &CoefficientSpec::Equal).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficient_examples() {
        let a = equal(1);
        assert!(a.entries().iter().all(|&z| z == c(0.5, 0.0)));
        assert_eq!(a.max_mass(), 0.25);
        let a = equal(5);
        assert!((a.max_mass() - 0.125).abs() < 1e-15);
        assert!(a.class_a_check(SlowGrowth::Constant(1.0)).passes);

        let h = 0.5f64.sqrt();
        let two = build_coefficients(
            &lattice_points(25),
            &CoefficientSpec::Explicit(vec![((3, 4), c(h, 0.0)), ((-3, -4), c(h, 0.0))]),
        )
        .unwrap();
        assert!((two.max_mass() - 0.5).abs() < 1e-15);
        assert!(!two.class_a_check(SlowGrowth::Constant(1.0)).passes);

        let chk = equal(25).class_a_check(SlowGrowth::Log);
        assert!((chk.bound - 12f64.ln() / 12.0).abs() < 1e-15);
        assert!((chk.bound - 0.2071).abs() < 1e-4);
        assert!(chk.passes);
    }

    #[test]
    fn coefficient_errors() {
        let pts = lattice_points(25);
        assert_eq!(
            build_coefficients(&pts, &CoefficientSpec::Explicit(vec![((3, 4), c(1.0, 0.0))])),
            Err(EigenError::NotHermitian((-3, -4)))
        );
        assert!(matches!(
            build_coefficients(&pts, &CoefficientSpec::Explicit(vec![((3, 4), c(0.5, 0.0)), ((-3, -4), c(0.5, 0.0))])),
            Err(EigenError::Norm(_))
        ));
        assert_eq!(
            build_coefficients(&pts, &CoefficientSpec::Explicit(vec![((1, 1), c(1.0, 0.0))])),
            Err(EigenError::NotOnCircle((1, 1)))
        );
        assert!(build_coefficients(&lattice_points(3), &CoefficientSpec::Equal).is_err());
    }

    #[test]
    fn random_sphere_is_hermitian_and_reproducible() {
        let pts = lattice_points(325);
        let a = build_coefficients(&pts, &CoefficientSpec::RandomSphere(9)).unwrap();
        let b = build_coefficients(&pts, &CoefficientSpec::RandomSphere(9)).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.entries().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for i in 0..a.len() {
            assert_eq!(a.entries()[i], a.entries()[pts.antipode(i)].conj());
        }
    }

    #[test]
    fn evaluation_examples() {
        let a = equal(1);
        assert!((a.evaluate([0.0, 0.0]).0 - 2.0).abs() < 1e-12);
        assert!(a.evaluate([0.25, 0.25]).0.abs() < 1e-12);
        assert!((a.evaluate([0.5, 0.5]).0 + 2.0).abs() < 1e-12);
        let z = a.evaluate_complex([0.3, 0.1]);
        assert!(z.im.abs() < 1e-12);
        assert!((z.re - a.evaluate([0.3, 0.1]).0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_examples() {
        let a = equal(25);
        let x = [0.13, 0.71];
        let f = a.blow_up(x, 2.0).unwrap();
        assert!((f.value([0.0, 0.0]) - a.evaluate(x).0).abs() < 1e-12);
        let f0 = a.blow_up([0.0, 0.0], 2.0).unwrap();
        assert!((f0.value([0.5, 0.0]) - a.evaluate([0.2, 0.0]).0).abs() < 1e-12);
        assert!(matches!(equal(1).blow_up([0.0, 0.0], 1.5), Err(EigenError::Radius { .. })));
        assert!(a.blow_up(x, 5.0).is_err());
        assert!(a.blow_up(x, 1.0).is_err());
    }

    #[test]
    fn blow_up_is_an_eigenfunction() {
        let a = build_coefficients(&lattice_points(325), &CoefficientSpec::RandomSphere(3)).unwrap();
        let r = 4.0;
        let f = a.blow_up([0.2, 0.4], r).unwrap();
        let h = 1e-3;
        for y in [[0.1, -0.3], [0.45, 0.2], [-0.7, 0.6]] {
            let lap = (f.value([y[0] + h, y[1]]) + f.value([y[0] - h, y[1]]) + f.value([y[0], y[1] + h])
                + f.value([y[0], y[1] - h])
                - 4.0 * f.value(y))
                / (h * h);
            let expect = -TAU * TAU * r * r * f.value(y);
            assert!((lap - expect).abs() <= 1e-4 * expect.abs().max(1.0), "{lap} vs {expect}");
        }
    }

    #[test]
    fn decomposition_is_complete() {
        let a = build_coefficients(&lattice_points(325), &CoefficientSpec::RandomSphere(5)).unwrap();
        let x = [0.31, 0.77];
        let d = a.gather_local(x, 3.0, 8, 0.05).unwrap();
        let f = a.blow_up(x, 3.0).unwrap();
        for y in [[0.0, 0.0], [0.3, -0.9], [-0.5, 0.5], [0.99, 0.1]] {
            let sum = d.leftover.value(y) + d.phi.value(y) + d.residual.value(y);
            assert!((sum - f.value(y)).abs() < 1e-10);
        }
        for arc in d.binning.positive() {
            let p = d.binning.partner(arc.index);
            if let (Some(b), Some(bp)) = (d.bk_of(arc.index), d.bk_of(p)) {
                assert!((b - bp.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gather_examples() {
        // small delta keeps every occupied arc: leftover vanishes
        let a = equal(25);
        let d = a.gather_local([0.1, 0.2], 3.0, 8, 1e-3).unwrap();
        assert!(d.leftover.waves().is_empty());

        // atoms at arc midpoints: residual vanishes
        let h = 0.5f64.sqrt();
        let two = build_coefficients(
            &lattice_points(25),
            &CoefficientSpec::Explicit(vec![((0, 5), c(0.0, h)), ((0, -5), c(0.0, -h))]),
        )
        .unwrap();
        // (0,5) sits at angle 1/4, the midpoint of arc 1 when K = 1
        let d = two.gather_local([0.3, 0.4], 2.0, 1, 0.1).unwrap();
        assert!(c1_norm(&d.residual, 1e-2).unwrap() < 1e-12);

        // b_k equals the normalized partial sum over its arc
        let x = [0.0, 0.0];
        let d = a.gather_local(x, 2.0, 8, 1e-3).unwrap();
        for (arc, b) in d.binning.kept().iter().zip(&d.bk) {
            let members = a.arc_members(&d.binning, arc.index);
            let s: Complex64 = members.iter().map(|&i| a.entries()[i]).sum();
            let mass: f64 = members.iter().map(|&i| a.entries()[i].norm_sqr()).sum();
            assert!((s / mass.sqrt() - b).norm() < 1e-12);
        }
        assert!(matches!(a.gather_local(x, 2.0, 8, 0.5), Err(EigenError::DegenerateBinning)));
    }

    #[test]
    fn bk_mean_square_is_one() {
        let a = build_coefficients(&lattice_points(65), &CoefficientSpec::RandomSphere(1)).unwrap();
        let binning = bin_measure(&a.spectral_measure(), 4, 1e-3).unwrap();
        // |b_k|² has frequencies ξ - ξ' with components of size at most 16
        let n = 33;
        let mut acc = vec![0.0; binning.kept().len()];
        for i in 0..n {
            for j in 0..n {
                let b = a.arc_coefficients(&binning, [i as f64 / n as f64, j as f64 / n as f64]);
                for (s, v) in acc.iter_mut().zip(b) {
                    *s += v.norm_sqr();
                }
            }
        }
        for s in acc {
            assert!((s / (n * n) as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn c1_norm_examples() {
        assert_eq!(c1_norm(&WaveField::zero(), 1e-2).unwrap(), 0.0);
        assert_eq!(c1_norm(&WaveField::constant(1.0), 1e-2).unwrap(), 1.0);
        let s = c1_norm(&WaveField::sine([1.0, 0.0]), 1e-3).unwrap();
        assert!((s - (1.0 + TAU)).abs() < 1e-3);
        assert!(c1_norm(&WaveField::zero(), 0.1).is_err());
    }

    #[test]
    fn coefficient_csv() {
        let rows = parse_coefficient_csv("xi1,xi2,re,im\n3,4,0.5,0.1\n# note\n-3,-4,0.5,-0.1\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], ((-3, -4), c(0.5, -0.1)));
        assert!(parse_coefficient_csv("1,2,3").is_err());
    }
}
