//! Gaussian monochromatic waves with atomic spectral measure.
//!
//! For atoms `ζ_j` with masses `m_j` the field is
//! `h(y) = Σ_j √m_j c_j e(ν⟨ζ_j, y⟩)` with `c_j` standard complex Gaussian on
//! one atom of each antipodal pair and `c_{-j} = c̄_j`; it is real, has unit
//! variance and covariance `Σ_j m_j cos(2πν⟨ζ_j, y⟩)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::mean_stderr;
use crate::field::{nodes, Field, Wave, WaveField};
use crate::measure::{direction, ArcBinning, SpectralMeasure};
use crate::nodal::{self, CensusOptions, Domain, NodalCensus, NodalError};
use crate::rng;

/// Default number of antipodal pairs replacing a uniform component.
pub const DEFAULT_UNIFORM_PAIRS: usize = 128;
pub const MIN_CNS_TRIALS: usize = 8;
/// Largest fraction of discarded trials before an estimate is abandoned.
pub const MAX_DISCARD_FRACTION: f64 = 0.1;
/// Relative count tolerance between successive resolutions in Monte
/// Carlo trials.
pub const CNS_STABILITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("measure must be atomic (atomize the uniform component first)")]
    NonAtomic,
    #[error("wavenumber must be positive, got {0}")]
    Wavenumber(f64),
    #[error("at least {min} trials required, got {got}")]
    Trials { min: usize, got: usize },
    #[error("{discarded} of {trials} trials unresolved")]
    TooManyDiscards { discarded: usize, trials: usize },
    #[error("binning is degenerate")]
    DegenerateBinning,
    #[error("epsilon {epsilon} must be below barrier/4 = {limit}")]
    Epsilon { epsilon: f64, limit: f64 },
    #[error(transparent)]
    Nodal(#[from] NodalError),
}

/// One draw of the Gaussian coefficients together with the field.
#[derive(Debug, Clone)]
pub struct GaussianSample {
    pub seed: u64,
    pub stream: u64,
    /// `(angle, mass, c)` for the free atom of every antipodal pair.
    pub coefficients: Vec<(f64, f64, Complex64)>,
    pub field: WaveField,
    /// Factor the unit-variance field was divided by (1 for probability
    /// measures, `√Σ_{𝒦} μ(I_k)` for binned surrogates).
    pub scale: f64,
}

/// Free atoms: angle in `(-1/2, 0]`, whose antipodes lie in `(0, 1/2]`.
fn free_atoms(mu: &SpectralMeasure) -> Vec<(f64, f64)> {
    mu.atoms()
        .iter()
        .filter(|a| a.angle <= 0.0)
        .map(|a| (a.angle, a.mass))
        .collect()
}

/// Replaces a uniform component by equally spaced atoms.
pub fn atomic_version(mu: &SpectralMeasure, pairs: usize) -> SpectralMeasure {
    mu.atomize(pairs)
}

/// Draws `h_μ` at wavenumber `ν` from stream `(seed, stream)`.
pub fn sample_field(mu: &SpectralMeasure, wavenumber: f64, seed: u64, stream: u64) -> Result<GaussianSample, GaussianError> {
    if !mu.is_atomic() {
        return Err(GaussianError::NonAtomic);
    }
    if !(wavenumber > 0.0) {
        return Err(GaussianError::Wavenumber(wavenumber));
    }
    let mut g = rng::stream(seed, stream);
    let mut coefficients = Vec::new();
    let mut waves = Vec::new();
    for (angle, mass) in free_atoms(mu) {
        let c = rng::complex_normal(&mut g);
        let d = direction(angle);
        waves.push(Wave {
            amplitude: 2.0 * mass.sqrt() * c,
            frequency: [wavenumber * d[0], wavenumber * d[1]],
        });
        coefficients.push((angle, mass, c));
    }
    Ok(GaussianSample {
        seed,
        stream,
        coefficients,
        field: WaveField::new(waves, wavenumber),
        scale: 1.0,
    })
}

/// `Φ(y) = Σ_{k∈𝒦} μ_k^{1/2} c_k e(⟨Rζ^{(k)}, y⟩)` with renormalized
/// masses; `scale` records `√Σ_{𝒦} μ(I_k)`.
pub fn sample_binned(binning: &ArcBinning, r: f64, seed: u64, stream: u64) -> Result<GaussianSample, GaussianError> {
    let mu = binning.binned().ok_or(GaussianError::DegenerateBinning)?;
    let mut s = sample_field(mu, r, seed, stream)?;
    s.scale = binning.kept_mass().sqrt();
    Ok(s)
}

/// `Σ_j m_j cos(2πν⟨ζ_j, y⟩)`.
pub fn covariance(mu: &SpectralMeasure, wavenumber: f64, y: [f64; 2]) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| {
            let d = a.direction();
            a.mass * (TAU * wavenumber * (d[0] * y[0] + d[1] * y[1])).cos()
        })
        .sum::<f64>()
        + if mu.uniform_mass() > 0.0 {
            // ∫ cos(2πν⟨θ,y⟩) dθ = J₀(2πν|y|)
            mu.uniform_mass() * bessel_j0(TAU * wavenumber * y[0].hypot(y[1]))
        } else {
            0.0
        }
}

/// `J₀` by its integral representation (trapezoid rule, spectrally
/// accurate for the periodic integrand).
fn bessel_j0(x: f64) -> f64 {
    let n = 256;
    (0..n).map(|k| (x * (TAU * k as f64 / n as f64).sin()).cos()).sum::<f64>() / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Count in `(-R, R)²`, area `4R²`.
    Square,
    /// Count in the disc of radius `R`, area `πR²`.
    Disc,
}

impl Convention {
    pub fn area(&self, r: f64) -> f64 {
        match self {
            Self::Square => 4.0 * r * r,
            Self::Disc => std::f64::consts::PI * r * r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::Disc => "disc",
        }
    }
}

/// Monte Carlo estimate of the nodal-domain density.
#[derive(Debug, Clone, PartialEq)]
pub struct CnsEstimate {
    pub measure_id: String,
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    pub convention: Convention,
    pub resolution: usize,
    /// Domains contained in the counting region, per kept trial.
    pub counts: Vec<usize>,
    /// All domains meeting the counting square, per kept trial.
    pub total_counts: Vec<usize>,
    /// Indices of unresolved trials.
    pub discarded: Vec<usize>,
    pub area: f64,
    pub estimate: f64,
    pub stderr: f64,
}

impl CnsEstimate {
    /// Density of all (including truncated) domains meeting the square.
    pub fn total_estimate(&self) -> f64 {
        mean_stderr(self.total_counts.iter().map(|&c| c as f64)).0 / self.area
    }

    /// `trial,count,area,estimate` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,count,area,estimate\n");
        let kept = (0..self.trials).filter(|t| !self.discarded.contains(t));
        for (t, c) in kept.zip(&self.counts) {
            s.push_str(&format!("{t},{c},{},{}\n", self.area, *c as f64 / self.area));
        }
        s
    }
}

/// Components contained in the open disc of radius `r` about the centre
/// of a square census.
pub fn count_in_disc(census: &NodalCensus, r: f64) -> usize {
    let n = census.resolution;
    let h = census.cell_size();
    let (xs, ys) = census.domain.axes(n);
    let Domain::Square { center, .. } = census.domain else {
        return 0;
    };
    let mut outside = vec![false; census.components.len()];
    let reach = h * std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in 0..n {
            if let Some(l) = census.labels[i * n + j] {
                if (xs[i] - center[0]).hypot(ys[j] - center[1]) + reach >= r {
                    outside[l as usize] = true;
                }
            }
        }
    }
    census
        .components
        .iter()
        .zip(&outside)
        .filter(|(c, &o)| !o && !c.touches_boundary)
        .count()
}

/// Monte Carlo nodal-domain density of `h_μ` at unit wavenumber.
pub fn estimate_cns(
    mu: &SpectralMeasure,
    measure_id: &str,
    r: f64,
    trials: usize,
    seed: u64,
    convention: Convention,
) -> Result<CnsEstimate, GaussianError> {
    if trials < MIN_CNS_TRIALS {
        return Err(GaussianError::Trials {
            min: MIN_CNS_TRIALS,
            got: trials,
        });
    }
    let mu = atomic_version(mu, DEFAULT_UNIFORM_PAIRS);
    let domain = Domain::square([0.0, 0.0], 2.0 * r);
    let probe = sample_field(&mu, 1.0, seed, 0)?;
    let resolution = nodal::auto_resolution(&probe.field, domain);
    let opts = CensusOptions {
        resolution,
        max_resolution: 4 * resolution,
        interior_only: true,
        tolerance: CNS_STABILITY_TOLERANCE,
    };
    let outcomes: Vec<Result<(usize, usize), NodalError>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = sample_field(&mu, 1.0, seed, t as u64).expect("validated measure");
            let stable = nodal::count_nodal_domains(&s.field, domain, opts)?;
            let count = match convention {
                Convention::Square => stable.census.count_interior(),
                Convention::Disc => count_in_disc(&stable.census, r),
            };
            Ok((count, stable.census.count_total()))
        })
        .collect();
    let mut counts = Vec::new();
    let mut total_counts = Vec::new();
    let mut discarded = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((c, tot)) => {
                counts.push(c);
                total_counts.push(tot);
            }
            Err(NodalError::Unresolved { .. }) => discarded.push(t),
            Err(e) => return Err(e.into()),
        }
    }
    if discarded.len() as f64 > MAX_DISCARD_FRACTION * trials as f64 {
        return Err(GaussianError::TooManyDiscards {
            discarded: discarded.len(),
            trials,
        });
    }
    let area = convention.area(r);
    let (m, se) = mean_stderr(counts.iter().map(|&c| c as f64));
    Ok(CnsEstimate {
        measure_id: measure_id.to_string(),
        r,
        trials,
        seed,
        convention,
        resolution,
        counts,
        total_counts,
        discarded,
        area,
        estimate: m / area,
        stderr: se / area,
    })
}

/// Expected zeros per unit length along a line in direction `v`:
/// `2ν √(∫⟨v,θ⟩² dμ(θ))`.
pub fn kac_rice_line_intensity(mu: &SpectralMeasure, v: [f64; 2], wavenumber: f64) -> f64 {
    let norm = v[0].hypot(v[1]);
    let u = [v[0] / norm, v[1] / norm];
    let q = mu.directional_second_moment(u);
    // squared rounding noise of unit-vector components is below 1e-30
    if q <= 1e-24 {
        0.0
    } else {
        2.0 * wavenumber * q.sqrt()
    }
}

/// Zero crossings per unit length along random unit segments, one fresh
/// field per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct LineZeroRate {
    pub segments: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Counts sign changes of `h_μ` along `segments` random unit segments,
/// sampled at `points` equally spaced positions.
pub fn line_zero_rate(
    mu: &SpectralMeasure,
    wavenumber: f64,
    segments: usize,
    points: usize,
    direction: Option<[f64; 2]>,
    seed: u64,
) -> Result<LineZeroRate, GaussianError> {
    let mu = atomic_version(mu, DEFAULT_UNIFORM_PAIRS);
    let counts: Vec<f64> = (0..segments)
        .into_par_iter()
        .map(|t| {
            let s = sample_field(&mu, wavenumber, seed, t as u64).expect("validated");
            // geometry comes from a separate stream so it is independent of
            // the coefficients
            let mut g = rng::stream(seed ^ 0x5eed_5eed_5eed_5eed, t as u64);
            let start = [g.random::<f64>() * 10.0, g.random::<f64>() * 10.0];
            let v = direction.unwrap_or_else(|| {
                let a: f64 = g.random::<f64>() * TAU;
                [a.cos(), a.sin()]
            });
            let mut prev = s.field.value(start);
            let mut zeros = 0usize;
            for i in 1..points {
                let t = i as f64 / (points - 1) as f64;
                let cur = s.field.value([start[0] + t * v[0], start[1] + t * v[1]]);
                if (cur > 0.0) != (prev > 0.0) {
                    zeros += 1;
                }
                prev = cur;
            }
            zeros as f64
        })
        .collect();
    let (mean, stderr) = mean_stderr(counts.iter().copied());
    Ok(LineZeroRate { segments, mean, stderr })
}

/// `Σ_{k,k'∈𝒦} μ_k μ_{k'} sin²(φ_k - φ_{k'})`, the determinant of the
/// gradient covariance with the factor `8π⁴R⁴` removed.
pub fn degeneracy_det(binning: &ArcBinning) -> Result<f64, GaussianError> {
    let mu = binning.binned().ok_or(GaussianError::DegenerateBinning)?;
    Ok(atom_degeneracy(mu))
}

/// The same sum over the atoms of an atomic measure.
pub fn atom_degeneracy(mu: &SpectralMeasure) -> f64 {
    let a = mu.atoms();
    let mut s = 0.0;
    for p in a {
        for q in a {
            s += p.mass * q.mass * (TAU * (p.angle - q.angle)).sin().powi(2);
        }
    }
    s
}

/// `min_{y∈Q} max(|h(y)|, |∇h(y)|)` over the nodes of `Q`, refined by
/// successive zooms around the smallest nodes.
pub fn barrier_statistic(field: &dyn Field, q: Domain, resolution: usize) -> f64 {
    let side = q.side();
    let center = match q {
        Domain::Square { center, .. } => center,
        Domain::Torus => [0.5, 0.5],
    };
    let lo = [center[0] - side / 2.0, center[1] - side / 2.0];
    let h = side / resolution as f64;
    let xs = nodes(lo[0], h, resolution);
    let ys = nodes(lo[1], h, resolution);
    let s = field.sample_with_gradient(&xs, &ys);
    let stat = |v: f64, a: f64, b: f64| v.abs().max(a.hypot(b));
    let m = ys.len();
    let mut best: Vec<(f64, usize)> = (0..s.value.len())
        .map(|i| (stat(s.value[i], s.d1[i], s.d2[i]), i))
        .collect();
    let keep = 8.min(best.len());
    best.select_nth_unstable_by(keep - 1, |a, b| a.0.total_cmp(&b.0));
    best.truncate(keep);
    let mut result = best.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let clamp = |t: f64, a: f64| t.clamp(a, a + side);
    for &(_, idx) in &best {
        let mut c = [xs[idx / m], ys[idx % m]];
        let mut step = h;
        for _ in 0..6 {
            let sub = 8;
            let gx: Vec<f64> = (0..=sub).map(|k| clamp(c[0] - step + 2.0 * step * k as f64 / sub as f64, lo[0])).collect();
            let gy: Vec<f64> = (0..=sub).map(|k| clamp(c[1] - step + 2.0 * step * k as f64 / sub as f64, lo[1])).collect();
            let z = field.sample_with_gradient(&gx, &gy);
            let (mut bv, mut bi) = (f64::INFINITY, 0);
            for i in 0..z.value.len() {
                let v = stat(z.value[i], z.d1[i], z.d2[i]);
                if v < bv {
                    bv = v;
                    bi = i;
                }
            }
            result = result.min(bv);
            c = [gx[bi / (sub + 1)], gy[bi % (sub + 1)]];
            step /= 4.0;
        }
    }
    result
}

/// Outcome of [`perturbation_stability`].
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub barrier: f64,
    pub epsilon: f64,
    pub base_interior: usize,
    pub base_total: usize,
    /// `(interior count, band components)` per trial.
    pub trials: Vec<(usize, usize)>,
    pub worst_change: usize,
    /// Every trial changed by at most its band count.
    pub within_band: bool,
}

/// Degree of the random trigonometric perturbations.
pub const PERTURBATION_DEGREE: i32 = 3;

/// Adds random trigonometric polynomials of sup norm `epsilon` and
/// compares interior counts in `window`.
pub fn perturbation_stability(
    field: &WaveField,
    window: Domain,
    resolution: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport, GaussianError> {
    let barrier = barrier_statistic(field, window, resolution);
    if epsilon >= barrier / 4.0 {
        return Err(GaussianError::Epsilon {
            epsilon,
            limit: barrier / 4.0,
        });
    }
    let base = nodal::census(field, window, resolution, true)?;
    let h = window.side() / resolution as f64;
    // components reaching within ε/τ of the window edge
    let band_cells = ((epsilon / barrier) / h).ceil() as usize;
    let band = base
        .components
        .iter()
        .filter(|c| {
            let n = resolution;
            c.rows.start <= band_cells
                || c.cols.start <= band_cells
                || c.rows.start + c.rows.len + band_cells >= n
                || c.cols.start + c.cols.len + band_cells >= n
        })
        .count();
    let (xs, ys) = window.axes(resolution);
    let side = window.side();
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut g = rng::stream(seed, t as u64);
        let mut waves = Vec::new();
        for p in 0..=PERTURBATION_DEGREE {
            for q in -PERTURBATION_DEGREE..=PERTURBATION_DEGREE {
                if p == 0 && q <= 0 {
                    continue;
                }
                waves.push(Wave {
                    amplitude: rng::complex_normal(&mut g),
                    frequency: [p as f64 / side, q as f64 / side],
                });
            }
        }
        let pert = WaveField::new(waves, 0.0).plus(&WaveField::constant(g.random::<f64>() - 0.5));
        let pv = pert.sample(&xs, &ys);
        let sup = pv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if sup > 0.0 { epsilon / sup } else { 0.0 };
        let values: Vec<f64> = field
            .sample(&xs, &ys)
            .iter()
            .zip(&pv)
            .map(|(f, p)| f + scale * p)
            .collect();
        let c = nodal::census_from_values(&values, window, resolution, true)?;
        out.push((c.count_interior(), band));
    }
    let base_interior = base.count_interior();
    let worst_change = out.iter().map(|(c, _)| c.abs_diff(base_interior)).max().unwrap_or(0);
    let within_band = out.iter().all(|(c, b)| c.abs_diff(base_interior) <= *b);
    Ok(StabilityReport {
        barrier,
        epsilon,
        base_interior,
        base_total: base.count_total(),
        trials: out,
        worst_change,
        within_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::measure::bin_measure;

    #[test]
    fn pair_sample_is_a_plane_wave() {
        let mu = SpectralMeasure::antipodal_pair(0.0);
        let s = sample_field(&mu, 3.0, 11, 0).unwrap();
        assert_eq!(s.field.waves().len(), 1);
        let w = s.field.waves()[0];
        assert!((w.frequency[1]).abs() < 1e-12);
        assert!((w.frequency[0].abs() - 3.0).abs() < 1e-12);
        // constant along y₂
        assert!((s.field.value([0.3, 0.1]) - s.field.value([0.3, 5.0])).abs() < 1e-12);
    }

    #[test]
    fn conjugate_pairing_and_reproducibility() {
        let mu = SpectralMeasure::cilleruelo();
        let a = sample_field(&mu, 1.0, 5, 2).unwrap();
        let b = sample_field(&mu, 1.0, 5, 2).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.coefficients.len(), 2);
        // explicit sum over all four atoms with conjugate partners
        let y = [0.37, -1.2];
        let mut z = Complex64::new(0.0, 0.0);
        for &(angle, mass, c) in &a.coefficients {
            for (ang, cc) in [(angle, c), (angle + 0.5, c.conj())] {
                let d = direction(ang);
                let (sn, cs) = (TAU * (d[0] * y[0] + d[1] * y[1])).sin_cos();
                z += mass.sqrt() * cc * Complex64::new(cs, sn);
            }
        }
        assert!(z.im.abs() < 1e-12);
        assert!((z.re - a.field.value(y)).abs() < 1e-12);
        assert!(sample_field(&SpectralMeasure::uniform(), 1.0, 0, 0).is_err());
    }

    #[test]
    fn covariance_of_uniform_is_bessel() {
        let u = SpectralMeasure::uniform();
        assert!((covariance(&u, 1.0, [0.0, 0.0]) - 1.0).abs() < 1e-14);
        // J₀(2.404825557695773) = 0
        let r = 2.404825557695773 / TAU;
        assert!(covariance(&u, 1.0, [r, 0.0]).abs() < 1e-12);
        let a = SpectralMeasure::atomized_uniform(512);
        assert!((covariance(&a, 1.0, [0.3, 0.2]) - covariance(&u, 1.0, [0.3, 0.2])).abs() < 1e-9);
    }

    #[test]
    fn kac_rice_examples() {
        let s2 = 2f64.sqrt();
        assert!((kac_rice_line_intensity(&SpectralMeasure::uniform(), [0.6, 0.8], 1.0) - s2).abs() < 1e-14);
        assert!((kac_rice_line_intensity(&SpectralMeasure::cilleruelo(), [1.0, 0.0], 1.0) - s2).abs() < 1e-14);
        assert_eq!(kac_rice_line_intensity(&SpectralMeasure::antipodal_pair(0.0), [0.0, 1.0], 1.0), 0.0);
    }

    #[test]
    fn degeneracy_examples() {
        let pair = bin_measure(&SpectralMeasure::antipodal_pair(0.1), 8, 0.1).unwrap();
        assert!(degeneracy_det(&pair).unwrap().abs() < 1e-15);
        let nu0 = bin_measure(&SpectralMeasure::cilleruelo(), 4, 0.2).unwrap();
        assert!((degeneracy_det(&nu0).unwrap() - 0.5).abs() < 1e-15);
        // E sin²(θ - θ') = 1/2 for independent uniform angles
        let u = SpectralMeasure::atomized_uniform(256);
        assert!((atom_degeneracy(&u) - 0.5).abs() < 1e-12);
        let rotated = SpectralMeasure::new(
            SpectralMeasure::tilted_cilleruelo().atoms().to_vec(),
            0.0,
        )
        .unwrap();
        assert!((atom_degeneracy(&rotated) - atom_degeneracy(&SpectralMeasure::cilleruelo())).abs() < 1e-15);
    }

    #[test]
    fn barrier_examples() {
        let q = Domain::square([0.0, 0.0], 2.0);
        assert!((barrier_statistic(&WaveField::constant(1.0), q, 64) - 1.0).abs() < 1e-15);
        // min over t of max(|cos t|, 2π|sin t|) at tan t = 1/(2π)
        let oracle = TAU / (1.0 + TAU * TAU).sqrt();
        let b = barrier_statistic(&WaveField::cosine([1.0, 0.0]), q, 512);
        assert!((b - oracle).abs() < 1e-3, "{b} vs {oracle}");
        let saddle = FnField::new(|y| y[0] * y[1], |y| [y[1], y[0]]);
        assert!(barrier_statistic(&saddle, q, 64) < 1e-12);
    }

    #[test]
    fn perturbation_examples() {
        let q = Domain::square([0.0, 0.0], 2.0);
        let f = WaveField::cosine([1.0, 0.0]);
        let r = perturbation_stability(&f, q, 256, 0.0, 3, 1).unwrap();
        assert!(r.trials.iter().all(|t| t.0 == r.base_interior));
        let r = perturbation_stability(&f, q, 256, 0.1, 4, 1).unwrap();
        assert_eq!(r.worst_change, 0);
        assert!(r.within_band);
        assert!(perturbation_stability(&f, q, 256, 0.5, 1, 1).is_err());
    }

    #[test]
    fn disc_counts_are_at_most_square_counts() {
        let s = sample_field(&SpectralMeasure::atomized_uniform(32), 1.0, 3, 0).unwrap();
        let c = nodal::census(&s.field, Domain::square([0.0, 0.0], 8.0), 256, true).unwrap();
        let disc = count_in_disc(&c, 4.0);
        assert!(disc <= c.count_interior());
        assert!(disc > 0);
    }
}
