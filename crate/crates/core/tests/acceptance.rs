//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{SQRT_2, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use toral_nodal::derandom::{
    bk_jacobian_det, bk_jacobian_fd, enumerate_specs, gaussian_joint_moment, moment_gap_sweep, MomentSpec,
};
use toral_nodal::eigen::{build_coefficients, CoefficientSpec, CoefficientVector};
use toral_nodal::experiment::{comparison_csv, run_comparison, ExperimentConfig};
use toral_nodal::field::{Field, WaveField};
use toral_nodal::gaussian::{estimate_cns, line_zero_rate, sample_field, Convention};
use toral_nodal::lattice::{is_sum_of_two_squares, lattice_points, minimally_vanishing_count, SearchBudget};
use toral_nodal::measure::{bin_measure, prokhorov_distance, Atom, ProkhorovOptions, SpectralMeasure};
use toral_nodal::nodal::{auto_resolution, count_nodal_domains, localized_count_integral, CensusOptions, Domain};
use toral_nodal::{rng, Complex64};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Check {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Check {
    ensure(elapsed <= limit, format!("{detail}; {:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
}

fn equal(e: u64) -> CoefficientVector {
    build_coefficients(&lattice_points(e), &CoefficientSpec::Equal).unwrap()
}

fn lattice_oracle() -> Check {
    let t = Instant::now();
    let limit = 10_000u64;
    let r = 100i64;
    let mut brute: BTreeMap<u64, Vec<(i64, i64)>> = BTreeMap::new();
    for x in -r..=r {
        for y in -r..=r {
            let n = (x * x + y * y) as u64;
            if n >= 1 && n <= limit {
                brute.entry(n).or_default().push((x, y));
            }
        }
    }
    for e in 1..=limit {
        let got = lattice_points(e);
        let mut want = brute.remove(&e).unwrap_or_default();
        want.sort_unstable();
        if got.points() != want.as_slice() {
            return Err(format!("mismatch at E={e}"));
        }
        if is_sum_of_two_squares(e) == want.is_empty() {
            return Err(format!("membership mismatch at E={e}"));
        }
    }
    let n25 = lattice_points(25).len();
    if n25 != 12 {
        return Err(format!("N(25) = {n25}"));
    }
    within_time(t.elapsed(), Duration::from_secs(5), "E <= 10^4 agree, N(25) = 12".into())
}

fn correlation_zeros() -> Check {
    let t = Instant::now();
    let mut checked = 0;
    for e in (1..=2000u64).filter(|&e| is_sum_of_two_squares(e)) {
        for l in [3, 4] {
            let c = minimally_vanishing_count(e, l, SearchBudget::default()).map_err(|err| err.to_string())?;
            if c != 0 {
                return Err(format!("E={e} l={l} count {c}"));
            }
        }
        checked += 1;
    }
    within_time(t.elapsed(), Duration::from_secs(60), format!("{checked} energies, l in {{3,4}} all zero"))
}

fn gaussian_moments() -> Check {
    let n = 1_000_000usize;
    let mut g = rng::stream(2024, 0);
    let samples: Vec<[Complex64; 2]> = (0..n).map(|_| [rng::complex_normal(&mut g), rng::complex_normal(&mut g)]).collect();
    let specs = enumerate_specs(&[1, 2], 5);
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let z: Vec<Complex64> = samples
            .iter()
            .map(|c| {
                (0..2)
                    .map(|i| c[i].powi(spec.r()[i] as i32) * c[i].conj().powi(spec.s()[i] as i32))
                    .product()
            })
            .collect();
        let mean = z.iter().sum::<Complex64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let dev = (mean - gaussian_joint_moment(spec)).norm() / se;
        worst = worst.max(dev);
        if dev > 3.0 {
            return Err(format!("spec {spec}: {dev:.2} stderr"));
        }
    }
    let one = gaussian_joint_moment(&MomentSpec::single(1, 1, 1));
    let two = gaussian_joint_moment(&MomentSpec::single(1, 2, 2));
    ensure(
        one == 1.0 && two == 2.0,
        format!("{} specs within 3 stderr (worst {worst:.2}); r=s=(1) -> {one}, r=s=(2) -> {two}", specs.len()),
    )
}

fn dual_method() -> Check {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for e in [25u64, 65] {
        let a = equal(e);
        let bin = bin_measure(&a.spectral_measure(), 8, 1e-3).unwrap();
        let sweep = moment_gap_sweep(&a, &bin, 5, true).map_err(|err| err.to_string())?;
        for c in &sweep.comparisons {
            worst = worst.max(c.quadrature_error().unwrap());
            if !c.quadrature.unwrap().exact {
                return Err(format!("grid below exactness threshold for {}", c.spec));
            }
        }
        count += sweep.comparisons.len();
    }
    if worst > 1e-9 {
        return Err(format!("max |exact - quadrature| = {worst:e}"));
    }
    within_time(t.elapsed(), Duration::from_secs(300), format!("{count} specs, max deviation {worst:.1e}"))
}

fn derandomisation_trend() -> Check {
    let mut gaps = Vec::new();
    for e in [25u64, 65, 325, 1105] {
        let a = equal(e);
        let bin = bin_measure(&a.spectral_measure(), 2, 1e-3).unwrap();
        gaps.push(moment_gap_sweep(&a, &bin, 5, false).map_err(|err| err.to_string())?.max_gap());
    }
    let ok = gaps.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let strict = gaps.windows(2).all(|w| w[1] < w[0]);
    ensure(ok, format!("K=2 gaps {gaps:.4?}; strictly decreasing: {strict}"))
}

fn analytic_counts() -> Check {
    let t = Instant::now();
    let fields: [(&str, WaveField, usize); 3] = [
        ("cos x1", WaveField::cosine([1.0, 0.0]), 2),
        ("cos x1 cos x2", WaveField::cosine([1.0, 0.0]).times(&WaveField::cosine([0.0, 1.0])), 4),
        ("cos x1 + cos x2", WaveField::cosine([1.0, 0.0]).plus(&WaveField::cosine([0.0, 1.0])), 2),
    ];
    let mut parts = Vec::new();
    for (name, f, want) in &fields {
        let s = count_nodal_domains(f, Domain::Torus, CensusOptions::new(64)).map_err(|e| e.to_string())?;
        let agree = s.history.windows(2).any(|w| w[0].1 == w[1].1);
        if s.count() != *want || !agree {
            return Err(format!("{name}: {:?}", s.history));
        }
        parts.push(format!("{name} -> {}", s.count()));
    }
    within_time(t.elapsed(), Duration::from_secs(30), parts.join(", "))
}

fn sandwich() -> Check {
    let mut ratios = BTreeMap::new();
    for e in [325u64, 1105] {
        let a = equal(e);
        let n = auto_resolution(&a.torus_field(), Domain::Torus);
        // equal-coefficient fields drift by about 2% per doubling near their
        // degenerate saddles, so exact agreement is not attainable
        let opts = CensusOptions { tolerance: 0.03, ..CensusOptions::new(n) };
        for r in [2.0, 4.0] {
            let rep = localized_count_integral(&a, r, 256, opts).map_err(|err| err.to_string())?;
            ratios.insert((e, r as u32), rep.ratio());
        }
    }
    let ok = [2, 4].iter().all(|&r| ratios[&(1105, r)] <= 2.0 * ratios[&(325, r)]);
    ensure(ok, format!("ratios {ratios:.4?}"))
}

fn kac_rice() -> Check {
    let t = Instant::now();
    let rate = line_zero_rate(&SpectralMeasure::uniform(), 1.0, 500, 2000, None, 88).map_err(|e| e.to_string())?;
    let rel = (rate.mean - SQRT_2).abs() / SQRT_2;
    if rel > 0.05 {
        return Err(format!("rate {:.4} ± {:.4}, {:.1}% off", rate.mean, rate.stderr, 100.0 * rel));
    }
    within_time(
        t.elapsed(),
        Duration::from_secs(120),
        format!("rate {:.4} ± {:.4} vs sqrt 2 ({:.2}% off, 3 stderr = {:.4})", rate.mean, rate.stderr, 100.0 * rel, 3.0 * rate.stderr),
    )
}

fn degenerate_cns() -> Check {
    let trials = 16;
    let mut parts = Vec::new();
    for (name, mu) in [("nu0", SpectralMeasure::cilleruelo()), ("pair", SpectralMeasure::antipodal_pair(0.0))] {
        let e20 = estimate_cns(&mu, name, 20.0, trials, 99, Convention::Square).map_err(|e| e.to_string())?;
        let e40 = estimate_cns(&mu, name, 40.0, trials, 99, Convention::Square).map_err(|e| e.to_string())?;
        let interior_ok = e40.estimate < e20.estimate / 1.5 || (e40.estimate == 0.0 && e20.estimate == 0.0);
        let total_ok = e40.total_estimate() < e20.total_estimate() / 1.5;
        parts.push(format!(
            "{name}: {:.4}/{:.4} (truncated {:.4}/{:.4})",
            e20.estimate,
            e40.estimate,
            e20.total_estimate(),
            e40.total_estimate()
        ));
        if !(interior_ok && total_ok) {
            return Err(parts.join("; "));
        }
    }
    let mu = SpectralMeasure::uniform();
    let u20 = estimate_cns(&mu, "uniform", 20.0, trials, 99, Convention::Square).map_err(|e| e.to_string())?;
    let u40 = estimate_cns(&mu, "uniform", 40.0, trials, 99, Convention::Square).map_err(|e| e.to_string())?;
    let combined = u20.stderr.hypot(u40.stderr);
    parts.push(format!("uniform: {:.4}±{:.4} / {:.4}±{:.4}", u20.estimate, u20.stderr, u40.estimate, u40.stderr));
    let ok = (u20.estimate - u40.estimate).abs() <= 3.0 * combined && u20.estimate > 0.0 && u40.estimate > 0.0;
    ensure(ok, parts.join("; "))
}

fn covariance_oracle() -> Check {
    let mu = SpectralMeasure::normalized(
        [(0.05, 0.3), (0.18, 0.5), (0.31, 0.2), (0.44, 0.4)]
            .iter()
            .flat_map(|&(t, m)| [Atom { angle: t, mass: m }, Atom { angle: t - 0.5, mass: m }])
            .collect(),
        0.0,
    )
    .unwrap();
    let n = 10_000u64;
    let probes: Vec<[f64; 2]> = (0..10).map(|j| [0.13 * j as f64, 0.21 * (j as f64).sqrt() - 0.05 * j as f64]).collect();
    let fields: Vec<WaveField> = (0..n).map(|t| sample_field(&mu, 1.0, 4242, t).unwrap().field).collect();
    let mut worst: f64 = 0.0;
    for y in &probes {
        let want: f64 = mu
            .atoms()
            .iter()
            .map(|a| a.mass * (TAU * (a.angle * TAU).cos().mul_add(y[0], (a.angle * TAU).sin() * y[1])).cos())
            .sum();
        let prods: Vec<f64> = fields.iter().map(|f| f.value([0.3, 0.4]) * f.value([0.3 + y[0], 0.4 + y[1]])).collect();
        let mean = prods.iter().sum::<f64>() / n as f64;
        let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let dev = (mean - want).abs() / (var / n as f64).sqrt();
        worst = worst.max(dev);
        if dev > 3.0 {
            return Err(format!("offset {y:?}: {mean:.4} vs {want:.4} ({dev:.2} stderr)"));
        }
    }
    Ok(format!("10 offsets within 3 stderr over {n} samples (worst {worst:.2})"))
}

fn random_measure<R: Rng>(g: &mut R) -> SpectralMeasure {
    let pairs = g.random_range(1..=4);
    let atoms = (0..pairs)
        .flat_map(|_| {
            let t: f64 = -g.random::<f64>() * 0.5;
            let m: f64 = g.random::<f64>() + 0.05;
            [Atom { angle: t, mass: m }, Atom { angle: t + 0.5, mass: m }]
        })
        .collect();
    SpectralMeasure::normalized(atoms, 0.0).unwrap()
}

fn prokhorov() -> Check {
    let opts = ProkhorovOptions::default();
    let d = |a: &SpectralMeasure, b: &SpectralMeasure| prokhorov_distance(a, b, opts).unwrap();
    let mut g = rng::stream(77, 0);
    for i in 0..100 {
        let (a, b, c) = (random_measure(&mut g), random_measure(&mut g), random_measure(&mut g));
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        if d(&a, &a) > 1e-9 || (ab - ba).abs() > 1e-9 || ac > ab + bc + 1e-9 {
            return Err(format!("axioms fail on triple {i}: ab={ab} ba={ba} bc={bc} ac={ac}"));
        }
    }
    let nu = d(&SpectralMeasure::cilleruelo(), &SpectralMeasure::tilted_cilleruelo());
    if (nu - 0.125).abs() > 1e-9 {
        return Err(format!("d(nu0, nu1) = {nu}"));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mu = random_measure(&mut g);
        let k = g.random_range(1..=8);
        let delta = 10f64.powf(-g.random_range(1.5..3.0));
        let bin = bin_measure(&mu, k, delta).unwrap();
        let Some(binned) = bin.binned() else { continue };
        let bound = 1.0 / (2.0 * k as f64) + 2.0 * delta * k as f64;
        let dist = d(binned, &mu);
        worst = worst.max(dist / bound);
        if dist > bound + 1e-9 {
            return Err(format!("binning bound: d = {dist} > {bound} (K={k}, delta={delta})"));
        }
    }
    Ok(format!("100 triples satisfy the axioms; d(nu0, nu1) = {nu}; binning bound holds (max d/bound {worst:.3})"))
}

fn jacobian() -> Check {
    let pts = lattice_points(325);
    let mut g = rng::stream(5150, 0);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for seed in 1..=5u64 {
        let a = build_coefficients(&pts, &CoefficientSpec::RandomSphere(seed)).unwrap();
        let bin = bin_measure(&a.spectral_measure(), 2, 1e-3).unwrap();
        let k = bin.positive().next().unwrap().index;
        for _ in 0..100 {
            let x = [g.random::<f64>(), g.random::<f64>()];
            let det = bk_jacobian_det(&a, &bin, k, x).map_err(|e| e.to_string())?;
            let fd = bk_jacobian_fd(&a, &bin, k, x, 0.01).map_err(|e| e.to_string())?;
            let rel = (det - fd).abs() / det.abs();
            worst = worst.max(rel);
            checks += 1;
            if !(rel <= 1e-4) {
                return Err(format!("seed {seed} x {x:?}: {det} vs {fd} (relative {rel:e})"));
            }
        }
    }
    Ok(format!("{checks} points, max relative deviation {worst:.1e}"))
}

fn determinism() -> Check {
    let cfg = ExperimentConfig::parse("energies=25,65,3\nR=4\ntrials=8\nseeds=11\n").map_err(|e| e.to_string())?;
    let first = comparison_csv(&run_comparison(&cfg).map_err(|e| e.to_string())?);
    let second = comparison_csv(&run_comparison(&cfg).map_err(|e| e.to_string())?);
    ensure(first == second, format!("{} bytes, identical: {}", first.len(), first == second))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("lattice oracle", lattice_oracle),
        ("correlation zeros", correlation_zeros),
        ("gaussian moments", gaussian_moments),
        ("dual-method moments", dual_method),
        ("de-randomisation trend", derandomisation_trend),
        ("analytic nodal counts", analytic_counts),
        ("sandwich", sandwich),
        ("kac-rice", kac_rice),
        ("degenerate c_NS", degenerate_cns),
        ("covariance oracle", covariance_oracle),
        ("prokhorov", prokhorov),
        ("jacobian formula", jacobian),
        ("end-to-end determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
