//! Real planar fields with analytic gradients.
//!
//! [`WaveField`] covers every concrete field in the crate (toral
//! eigenfunctions, blow-ups, arc surrogates, Gaussian wave samples); it
//! stores `y ↦ c + Re Σ_t A_t e(⟨k_t, y⟩)` with `e(t) = exp(2πit)` and
//! evaluates whole grids with two real matrix products.

use std::f64::consts::TAU;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

/// A real-valued field on the plane with analytic gradient.
pub trait Field: Send + Sync {
    fn value(&self, y: [f64; 2]) -> f64;

    fn gradient(&self, y: [f64; 2]) -> [f64; 2];

    /// Largest frequency magnitude, when known; used for resolution guards.
    fn wavenumber_hint(&self) -> Option<f64> {
        None
    }

    /// Values at `(xs[i], ys[j])`, row-major in `i`.
    fn sample(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                out.push(self.value([x, y]));
            }
        }
        out
    }

    /// Values and both partial derivatives on the same grid as
    /// [`Field::sample`].
    fn sample_with_gradient(&self, xs: &[f64], ys: &[f64]) -> GridSample {
        let n = xs.len() * ys.len();
        let mut s = GridSample {
            value: Vec::with_capacity(n),
            d1: Vec::with_capacity(n),
            d2: Vec::with_capacity(n),
        };
        for &x in xs {
            for &y in ys {
                s.value.push(self.value([x, y]));
                let g = self.gradient([x, y]);
                s.d1.push(g[0]);
                s.d2.push(g[1]);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// One complex plane wave `A e(⟨k, y⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amplitude: Complex64,
    pub frequency: [f64; 2],
}

/// `y ↦ c + Re Σ_t A_t e(⟨k_t, y⟩)`.
///
/// A Hermitian pair `A e(⟨k,y⟩) + Ā e(-⟨k,y⟩)` is stored as the single
/// wave `2A e(⟨k, y⟩)`; the real part is unchanged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaveField {
    waves: Vec<Wave>,
    constant: f64,
    wavenumber: f64,
}

#[inline]
fn phase(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

impl WaveField {
    pub fn new(waves: Vec<Wave>, wavenumber: f64) -> Self {
        Self {
            waves,
            constant: 0.0,
            wavenumber,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            waves: Vec::new(),
            constant: c,
            wavenumber: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `cos(2π⟨k, y⟩)`.
    pub fn cosine(k: [f64; 2]) -> Self {
        let wn = k[0].hypot(k[1]);
        Self::new(
            vec![Wave {
                amplitude: Complex64::new(1.0, 0.0),
                frequency: k,
            }],
            wn,
        )
    }

    /// `sin(2π⟨k, y⟩)`.
    pub fn sine(k: [f64; 2]) -> Self {
        let wn = k[0].hypot(k[1]);
        Self::new(
            vec![Wave {
                amplitude: Complex64::new(0.0, -1.0),
                frequency: k,
            }],
            wn,
        )
    }

    pub fn waves(&self) -> &[Wave] {
        &self.waves
    }

    pub fn offset(&self) -> f64 {
        self.constant
    }

    /// Largest `|k|` among the stored waves, or the value given at
    /// construction.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for w in &mut self.waves {
            w.amplitude *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn plus(mut self, other: &WaveField) -> Self {
        self.waves.extend_from_slice(&other.waves);
        self.constant += other.constant;
        self.wavenumber = self.wavenumber.max(other.wavenumber);
        self
    }

    /// Product of two fields, expanded into plane waves.
    pub fn times(&self, other: &WaveField) -> Self {
        // Re(a)Re(b) = (Re(ab) + Re(a b̄)) / 2
        let mut waves = Vec::new();
        for a in &self.waves {
            for b in &other.waves {
                let f_sum = [a.frequency[0] + b.frequency[0], a.frequency[1] + b.frequency[1]];
                let f_diff = [a.frequency[0] - b.frequency[0], a.frequency[1] - b.frequency[1]];
                waves.push(Wave {
                    amplitude: a.amplitude * b.amplitude * 0.5,
                    frequency: f_sum,
                });
                waves.push(Wave {
                    amplitude: a.amplitude * b.amplitude.conj() * 0.5,
                    frequency: f_diff,
                });
            }
            if other.constant != 0.0 {
                waves.push(Wave {
                    amplitude: a.amplitude * other.constant,
                    frequency: a.frequency,
                });
            }
        }
        if self.constant != 0.0 {
            for b in &other.waves {
                waves.push(Wave {
                    amplitude: b.amplitude * self.constant,
                    frequency: b.frequency,
                });
            }
        }
        Self {
            waves,
            constant: self.constant * other.constant,
            wavenumber: self.wavenumber + other.wavenumber,
        }
    }

    /// Complex sum `Σ A_t e(⟨k_t, y⟩)` without taking the real part.
    pub fn complex_value(&self, y: [f64; 2]) -> Complex64 {
        self.waves
            .iter()
            .map(|w| w.amplitude * phase(w.frequency[0] * y[0] + w.frequency[1] * y[1]))
            .sum::<Complex64>()
            + self.constant
    }

    /// Row factors `A_t e(k_{t,1} x_i)` split into `[Re | -Im]`, times an
    /// optional per-wave multiplier.
    fn left_factor(&self, xs: &[f64], mult: impl Fn(&Wave) -> Complex64) -> Array2<f64> {
        let t = self.waves.len();
        let mut m = Array2::<f64>::zeros((xs.len(), 2 * t));
        for (j, w) in self.waves.iter().enumerate() {
            let a = w.amplitude * mult(w);
            for (i, &x) in xs.iter().enumerate() {
                let z = a * phase(w.frequency[0] * x);
                m[[i, j]] = z.re;
                m[[i, t + j]] = -z.im;
            }
        }
        m
    }

    /// Column factors `e(k_{t,2} y_j)` stacked as `[Re; Im]`.
    fn right_factor(&self, ys: &[f64]) -> Array2<f64> {
        let t = self.waves.len();
        let mut m = Array2::<f64>::zeros((2 * t, ys.len()));
        for (j, w) in self.waves.iter().enumerate() {
            for (i, &y) in ys.iter().enumerate() {
                let z = phase(w.frequency[1] * y);
                m[[j, i]] = z.re;
                m[[t + j, i]] = z.im;
            }
        }
        m
    }

    fn product(left: &Array2<f64>, right: ArrayView2<f64>, constant: f64) -> Vec<f64> {
        let mut out = left.dot(&right);
        if constant != 0.0 {
            out.mapv_inplace(|v| v + constant);
        }
        let (v, offset) = out.into_raw_vec_and_offset();
        debug_assert_eq!(offset.unwrap_or(0), 0);
        v
    }
}

impl Field for WaveField {
    fn wavenumber_hint(&self) -> Option<f64> {
        (self.wavenumber > 0.0).then_some(self.wavenumber)
    }

    fn value(&self, y: [f64; 2]) -> f64 {
        self.constant
            + self
                .waves
                .iter()
                .map(|w| (w.amplitude * phase(w.frequency[0] * y[0] + w.frequency[1] * y[1])).re)
                .sum::<f64>()
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for w in &self.waves {
            let z = w.amplitude * phase(w.frequency[0] * y[0] + w.frequency[1] * y[1]);
            // d/dy Re(z) with z' = 2πi k z
            let dz = Complex64::new(0.0, TAU) * z;
            g[0] += (dz * w.frequency[0]).re;
            g[1] += (dz * w.frequency[1]).re;
        }
        g
    }

    fn sample(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        if self.waves.is_empty() {
            return vec![self.constant; xs.len() * ys.len()];
        }
        let left = self.left_factor(xs, |_| Complex64::new(1.0, 0.0));
        let right = self.right_factor(ys);
        Self::product(&left, right.view(), self.constant)
    }

    fn sample_with_gradient(&self, xs: &[f64], ys: &[f64]) -> GridSample {
        if self.waves.is_empty() {
            let n = xs.len() * ys.len();
            return GridSample {
                value: vec![self.constant; n],
                d1: vec![0.0; n],
                d2: vec![0.0; n],
            };
        }
        let right = self.right_factor(ys);
        let i_tau = Complex64::new(0.0, TAU);
        let value = Self::product(&self.left_factor(xs, |_| Complex64::new(1.0, 0.0)), right.view(), self.constant);
        let d1 = Self::product(&self.left_factor(xs, |w| i_tau * w.frequency[0]), right.view(), 0.0);
        let d2 = Self::product(&self.left_factor(xs, |w| i_tau * w.frequency[1]), right.view(), 0.0);
        GridSample { value, d1, d2 }
    }
}

type ValueFn = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type GradFn = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;

/// A field given by closures; used for test fields that are not plane-wave
/// sums.
pub struct FnField {
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
}

impl FnField {
    pub fn new(
        value: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }
}

impl Field for FnField {
    fn value(&self, y: [f64; 2]) -> f64 {
        (self.value)(y)
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        (self.gradient)(y)
    }
}

/// Pointwise sum of borrowed fields.
pub struct SumField<'a>(pub Vec<&'a dyn Field>);

impl Field for SumField<'_> {
    fn value(&self, y: [f64; 2]) -> f64 {
        self.0.iter().map(|f| f.value(y)).sum()
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        self.0.iter().fold([0.0; 2], |acc, f| {
            let g = f.gradient(y);
            [acc[0] + g[0], acc[1] + g[1]]
        })
    }

    fn sample(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; xs.len() * ys.len()];
        for f in &self.0 {
            for (o, v) in out.iter_mut().zip(f.sample(xs, ys)) {
                *o += v;
            }
        }
        out
    }
}

/// `n` equally spaced cell centres of `[start, start + n·step)`.
pub fn cell_centres(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + (i as f64 + 0.5) * step).collect()
}

/// `n + 1` nodes `start, start + step, …, start + n·step`.
pub fn nodes(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| start + i as f64 * step).collect()
}
