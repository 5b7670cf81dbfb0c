//! Grid censuses of nodal domains.
//!
//! A field is sampled at the centres of an `n × n` cell grid; cells of equal
//! nonzero sign are joined along edges (4-connectivity) and exact zeros
//! separate. On the torus `[0,1)²` the grid wraps in both directions.

use std::fmt::Write as _;

use thiserror::Error;

use crate::eigen::{CoefficientVector, EigenError};
use crate::field::{cell_centres, Field};
use crate::union_find::UnionFind;

pub const MIN_RESOLUTION: usize = 64;
pub const DEFAULT_MAX_RESOLUTION: usize = 4096;
/// Guard: cells per unit wavelength.
pub const CELLS_PER_WAVELENGTH: f64 = 16.0;
/// Largest tolerated fraction of exactly-zero samples.
pub const ZERO_FRACTION_LIMIT: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodalError {
    #[error("resolution {got} below the minimum {min}")]
    Resolution { got: usize, min: usize },
    #[error("{0:.3}% of samples are exactly zero")]
    DegenerateSampling(f64),
    #[error("count did not stabilize up to resolution {max}: {counts:?}")]
    Unresolved {
        max: usize,
        counts: Vec<(usize, usize)>,
    },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Where the field is counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[0,1)²` with periodic seams.
    Torus,
    /// Axis-parallel square.
    Square { center: [f64; 2], side: f64 },
}

impl Domain {
    pub fn square(center: [f64; 2], side: f64) -> Self {
        Self::Square { center, side }
    }

    pub fn side(&self) -> f64 {
        match *self {
            Self::Torus => 1.0,
            Self::Square { side, .. } => side,
        }
    }

    fn origin(&self) -> [f64; 2] {
        match *self {
            Self::Torus => [0.0, 0.0],
            Self::Square { center, side } => [center[0] - side / 2.0, center[1] - side / 2.0],
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Self::Torus)
    }

    /// Cell-centre coordinates along each axis.
    pub fn axes(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let o = self.origin();
        let h = self.side() / n as f64;
        (cell_centres(o[0], h, n), cell_centres(o[1], h, n))
    }
}

/// Run of grid indices `start, …, start + len - 1` (cyclic on the torus).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extent {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub sign: i8,
    pub cells: usize,
    pub area: f64,
    /// Extent along the first coordinate.
    pub rows: Extent,
    /// Extent along the second coordinate.
    pub cols: Extent,
    /// Bounding-box diagonal.
    pub diameter: f64,
    pub touches_boundary: bool,
}

/// Labelled sign partition of one sampled grid.
#[derive(Debug, Clone)]
pub struct NodalCensus {
    pub resolution: usize,
    pub domain: Domain,
    /// Cell `(i, j)` at `i·n + j`; `None` marks an exact zero.
    pub labels: Vec<Option<u32>>,
    pub components: Vec<Component>,
    pub zero_set_length: f64,
    pub interior_only: bool,
}

impl NodalCensus {
    pub fn cell_size(&self) -> f64 {
        self.domain.side() / self.resolution as f64
    }

    pub fn count_total(&self) -> usize {
        self.components.len()
    }

    /// Components not touching the boundary of a square domain.
    pub fn count_interior(&self) -> usize {
        self.components.iter().filter(|c| !c.touches_boundary).count()
    }

    /// The count selected by `interior_only`.
    pub fn count(&self) -> usize {
        if self.interior_only {
            self.count_interior()
        } else {
            self.count_total()
        }
    }

    pub fn count_sign(&self, sign: i8) -> usize {
        self.components.iter().filter(|c| c.sign == sign).count()
    }

    /// `id,sign,cells,area,diameter,touches_boundary` rows.
    pub fn components_csv(&self) -> String {
        let mut s = String::from("id,sign,cells,area,diameter,touches_boundary\n");
        for (i, c) in self.components.iter().enumerate() {
            writeln!(s, "{i},{},{},{},{},{}", c.sign, c.cells, c.area, c.diameter, c.touches_boundary as u8).unwrap();
        }
        s
    }

    /// Binary PGM of the label grid; zeros are black, labels cycle through
    /// grey levels 1..=255.
    pub fn labels_pgm(&self) -> Vec<u8> {
        let n = self.resolution;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        out.extend(self.labels.iter().map(|l| match l {
            None => 0u8,
            Some(id) => (1 + id % 255) as u8,
        }));
        out
    }

    /// Label grid as CSV, one grid row per line, `-1` for zeros.
    pub fn labels_csv(&self) -> String {
        let n = self.resolution;
        let mut s = String::with_capacity(n * n * 4);
        for row in self.labels.chunks(n) {
            let line: Vec<String> = row.iter().map(|l| l.map_or(-1, |v| v as i64).to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Census of `field` on an `n × n` grid.
pub fn census(field: &dyn Field, domain: Domain, n: usize, interior_only: bool) -> Result<NodalCensus, NodalError> {
    let (xs, ys) = domain.axes(n);
    let values = field.sample(&xs, &ys);
    census_from_values(&values, domain, n, interior_only)
}

/// Census of precomputed samples (`values[i·n + j]` at cell `(i, j)`).
pub fn census_from_values(values: &[f64], domain: Domain, n: usize, interior_only: bool) -> Result<NodalCensus, NodalError> {
    assert_eq!(values.len(), n * n, "sample grid has the wrong size");
    let zeros = values.iter().filter(|v| **v == 0.0).count();
    let frac = zeros as f64 / (n * n) as f64;
    if frac > ZERO_FRACTION_LIMIT {
        return Err(NodalError::DegenerateSampling(100.0 * frac));
    }
    let periodic = domain.is_periodic();
    let sign = |v: f64| -> i8 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let mut uf = UnionFind::new(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = sign(values[i * n + j]);
            if s == 0 {
                continue;
            }
            let right = if j + 1 < n { Some(j + 1) } else if periodic { Some(0) } else { None };
            let down = if i + 1 < n { Some(i + 1) } else if periodic { Some(0) } else { None };
            if let Some(jj) = right {
                if sign(values[i * n + jj]) == s {
                    uf.union(i * n + j, i * n + jj);
                }
            }
            if let Some(ii) = down {
                if sign(values[ii * n + j]) == s {
                    uf.union(i * n + j, ii * n + j);
                }
            }
        }
    }

    let mut root_label = vec![u32::MAX; n * n];
    let mut labels = vec![None; n * n];
    let mut signs: Vec<i8> = Vec::new();
    for idx in 0..n * n {
        let s = sign(values[idx]);
        if s == 0 {
            continue;
        }
        let r = uf.find(idx);
        if root_label[r] == u32::MAX {
            root_label[r] = signs.len() as u32;
            signs.push(s);
        }
        labels[idx] = Some(root_label[r]);
    }

    let m = signs.len();
    let mut cells = vec![0usize; m];
    let mut row_occ = vec![false; m * n];
    let mut col_occ = vec![false; m * n];
    let mut boundary = vec![false; m];
    for i in 0..n {
        for j in 0..n {
            if let Some(l) = labels[i * n + j] {
                let l = l as usize;
                cells[l] += 1;
                row_occ[l * n + i] = true;
                col_occ[l * n + j] = true;
                if !periodic && (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
                    boundary[l] = true;
                }
            }
        }
    }
    let h = domain.side() / n as f64;
    let components = (0..m)
        .map(|l| {
            let rows = extent(&row_occ[l * n..(l + 1) * n], periodic);
            let cols = extent(&col_occ[l * n..(l + 1) * n], periodic);
            Component {
                sign: signs[l],
                cells: cells[l],
                area: cells[l] as f64 * h * h,
                rows,
                cols,
                diameter: h * (rows.len as f64).hypot(cols.len as f64),
                touches_boundary: boundary[l],
            }
        })
        .collect();
    Ok(NodalCensus {
        resolution: n,
        domain,
        labels,
        components,
        zero_set_length: marching_squares_length(values, n, periodic, h),
        interior_only,
    })
}

/// Smallest run covering the occupied indices; cyclic runs take the
/// complement of the largest empty gap.
fn extent(occ: &[bool], periodic: bool) -> Extent {
    let n = occ.len();
    if !periodic {
        let first = occ.iter().position(|&b| b).unwrap_or(0);
        let last = occ.iter().rposition(|&b| b).unwrap_or(0);
        return Extent {
            start: first,
            len: last + 1 - first,
        };
    }
    if occ.iter().all(|&b| b) {
        return Extent { start: 0, len: n };
    }
    // Walk twice around to find the longest cyclic gap.
    let (mut best_len, mut best_end) = (0usize, 0usize);
    let mut run = 0usize;
    for t in 0..2 * n {
        if occ[t % n] {
            run = 0;
        } else {
            run += 1;
            if run > best_len && run <= n {
                best_len = run;
                best_end = t % n;
            }
        }
    }
    Extent {
        start: (best_end + 1) % n,
        len: n - best_len,
    }
}

/// Total length of the piecewise-linear zero contour through the cell
/// centres.
pub fn marching_squares_length(values: &[f64], n: usize, periodic: bool, h: f64) -> f64 {
    let squares = if periodic { n } else { n - 1 };
    let idx = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut total = 0.0;
    for i in 0..squares {
        for j in 0..squares {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let c = [
                values[idx(i, j)],
                values[idx(i + 1, j)],
                values[idx(i + 1, j + 1)],
                values[idx(i, j + 1)],
            ];
            let pos = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            let mut pts: Vec<[f64; 2]> = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a > 0.0) != (b > 0.0) {
                    let t = a / (a - b);
                    let (p, q) = (pos[e], pos[(e + 1) % 4]);
                    pts.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            let seg = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
            match pts.len() {
                2 => total += seg(pts[0], pts[1]),
                4 => {
                    // saddle: the centre value decides which corners connect
                    let centre = 0.25 * c.iter().sum::<f64>();
                    if (centre > 0.0) == (c[0] > 0.0) {
                        total += seg(pts[0], pts[3]) + seg(pts[1], pts[2]);
                    } else {
                        total += seg(pts[0], pts[1]) + seg(pts[2], pts[3]);
                    }
                }
                _ => {}
            }
        }
    }
    total * h
}

pub fn nodal_set_length(field: &dyn Field, domain: Domain, n: usize) -> Result<f64, NodalError> {
    check_resolution(field, domain, n)?;
    let (xs, ys) = domain.axes(n);
    let values = field.sample(&xs, &ys);
    let zeros = values.iter().filter(|v| **v == 0.0).count() as f64 / (n * n) as f64;
    if zeros > ZERO_FRACTION_LIMIT {
        return Err(NodalError::DegenerateSampling(100.0 * zeros));
    }
    Ok(marching_squares_length(&values, n, domain.is_periodic(), domain.side() / n as f64))
}

/// Parameters of the refinement protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    pub resolution: usize,
    pub max_resolution: usize,
    pub interior_only: bool,
    /// Accepted relative difference between successive counts; 0 demands
    /// equality.
    pub tolerance: f64,
}

impl CensusOptions {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            max_resolution: DEFAULT_MAX_RESOLUTION,
            interior_only: false,
            tolerance: 0.0,
        }
    }

    pub fn interior_only(mut self) -> Self {
        self.interior_only = true;
        self
    }
}

/// Census at the finest resolution visited plus the refinement history.
#[derive(Debug, Clone)]
pub struct StableCount {
    pub census: NodalCensus,
    /// `(resolution, count)` for every resolution visited.
    pub history: Vec<(usize, usize)>,
}

impl StableCount {
    pub fn count(&self) -> usize {
        self.census.count()
    }
}

fn check_resolution(field: &dyn Field, domain: Domain, n: usize) -> Result<(), NodalError> {
    let guard = field
        .wavenumber_hint()
        .map_or(0, |k| (CELLS_PER_WAVELENGTH * k * domain.side()).ceil() as usize);
    let min = MIN_RESOLUTION.max(guard);
    if n < min {
        Err(NodalError::Resolution { got: n, min })
    } else {
        Ok(())
    }
}

/// Smallest resolution meeting both guards for `field` on `domain`.
pub fn auto_resolution(field: &dyn Field, domain: Domain) -> usize {
    let guard = field
        .wavenumber_hint()
        .map_or(0, |k| (CELLS_PER_WAVELENGTH * k * domain.side()).ceil() as usize);
    MIN_RESOLUTION.max(guard)
}

/// Counts at `n, 2n, 4n, …` until two successive counts agree.
pub fn count_nodal_domains(field: &dyn Field, domain: Domain, opts: CensusOptions) -> Result<StableCount, NodalError> {
    check_resolution(field, domain, opts.resolution)?;
    let mut n = opts.resolution;
    let mut prev = census(field, domain, n, opts.interior_only)?;
    let mut history = vec![(n, prev.count())];
    while 2 * n <= opts.max_resolution.max(2 * opts.resolution) {
        n *= 2;
        let next = census(field, domain, n, opts.interior_only)?;
        let (a, b) = (prev.count() as f64, next.count() as f64);
        history.push((n, next.count()));
        if (a - b).abs() <= opts.tolerance * a.max(b) {
            return Ok(StableCount { census: next, history });
        }
        prev = next;
    }
    Err(NodalError::Unresolved {
        max: n,
        counts: history,
    })
}

/// Number of components contained in the open box of side `eps` centred
/// at `x` (torus census).
pub fn box_count(census: &NodalCensus, x: [f64; 2], eps: f64) -> usize {
    let h = census.cell_size();
    let inside = |e: Extent, c: f64| {
        let w = e.len as f64 * h;
        if w >= eps {
            return false;
        }
        // left edge of the hull relative to the box's left edge, mod 1
        let offset = (e.start as f64 * h - (c - eps / 2.0)).rem_euclid(1.0);
        offset > 0.0 && offset + w < eps
    };
    census
        .components
        .iter()
        .filter(|d| inside(d.rows, x[0]) && inside(d.cols, x[1]))
        .count()
}

/// Mean of [`box_count`] over the grid `x = (i/G, j/G)`, computed per
/// component from the interval of admissible centres.
pub fn mean_box_count(census: &NodalCensus, eps: f64, x_grid: usize) -> f64 {
    let h = census.cell_size();
    let g = x_grid as f64;
    // grid points i/G with the box (i/G - eps/2, i/G + eps/2) ⊃ [s, s + w]
    let admissible = |e: Extent| -> f64 {
        let (s, w) = (e.start as f64 * h, e.len as f64 * h);
        if w >= eps {
            return 0.0;
        }
        // centres c with s + w - eps/2 < c < s + eps/2
        let lo = (s + w - eps / 2.0) * g;
        let hi = (s + eps / 2.0) * g;
        let count = (hi.ceil() - lo.floor() - 1.0).max(0.0);
        count.min(g)
    };
    let total: f64 = census
        .components
        .iter()
        .map(|d| admissible(d.rows) * admissible(d.cols))
        .sum();
    total / (g * g)
}

/// `Σ_D (ε - |π₁D|)₊ (ε - |π₂D|)₊`, the integral of [`box_count`] over
/// the torus.
pub fn box_count_integral(census: &NodalCensus, eps: f64) -> f64 {
    let h = census.cell_size();
    census
        .components
        .iter()
        .map(|d| (eps - d.rows.len as f64 * h).max(0.0) * (eps - d.cols.len as f64 * h).max(0.0))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub energy: u64,
    pub r: f64,
    pub x_grid: usize,
    pub resolution: usize,
    /// `𝒩_f`.
    pub lhs: f64,
    /// `(E/R²)·mean_x 𝒩_f(x, R/√E)`.
    pub rhs: f64,
    /// `E/R`.
    pub error_scale: f64,
}

impl SandwichReport {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn ratio(&self) -> f64 {
        self.gap() / self.error_scale
    }
}

/// Global count against the averaged local box counts.
pub fn localized_count_integral(
    a: &CoefficientVector,
    r: f64,
    x_grid: usize,
    opts: CensusOptions,
) -> Result<SandwichReport, NodalError> {
    let e = a.energy() as f64;
    let sqrt_e = e.sqrt();
    if !(r > 1.0 && r < sqrt_e) {
        return Err(EigenError::Radius { r, max: sqrt_e }.into());
    }
    let f = a.torus_field();
    let stable = count_nodal_domains(&f, Domain::Torus, opts)?;
    let eps = r / sqrt_e;
    Ok(SandwichReport {
        energy: a.energy(),
        r,
        x_grid,
        resolution: stable.census.resolution,
        lhs: stable.census.count_total() as f64,
        rhs: e / (r * r) * mean_box_count(&stable.census, eps, x_grid),
        error_scale: e / r,
    })
}
