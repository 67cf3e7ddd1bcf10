//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rp_lab::boundary::{
    construction_gap, dn_monotonicity, half_difference_residual, image_covariances, quotient_covariances, HalfRegion,
};
use rp_lab::clifford::{a_matrix, clifford_residual, gamma_matrices};
use rp_lab::dirac::{
    assemble_dirac, boundary_sum, boundary_term_check, contour_self_test, dirac_gram_lattice, dirac_gram_momentum,
    positive_spinor_deltas, solve_shifted, spatial_transform, square_form_value, theta_map, MomentumFunction, MomentumGrid,
};
use rp_lab::geometry::{
    build_lattice, build_reflection, partition_regions, LatticeGeometry, LatticeSpec, ReflectionStructure,
    StaticMetric,
};
use rp_lab::linalg::max_abs;
use rp_lab::quantization::os_quotient;
use rp_lab::scalar_rp::{
    action_identity_residual, assemble_operator, flat_operator, positive_time_sites, rp_gram, PotentialField,
    ScalarOperator,
};
use rp_lab::{Error, GramReport, Result, SolverConfig, C64};

type Outcome = Result<(bool, String)>;

fn lattice(extent: &[usize], h: f64) -> (LatticeGeometry, ReflectionStructure) {
    let geom = build_lattice(&LatticeSpec::periodic(extent, h)).expect("valid lattice");
    let refl = build_reflection(&geom);
    (geom, refl)
}

/// `L^{-1}` by dense LU; `C f = L^{-1} f`.
fn dense_covariance(op: &ScalarOperator) -> DMatrix<C64> {
    op.to_dense().lu().try_inverse().expect("invertible operator")
}

/// Largest entrywise distance between a sparse Gram and its dense-inverse
/// counterpart.
fn gram_oracle_gap(op: &ScalarOperator, refl: &ReflectionStructure, sites: &[usize], gram: &GramReport) -> f64 {
    let c = dense_covariance(op);
    let mu = op.measure();
    let oracle = DMatrix::from_fn(sites.len(), sites.len(), |a, b| {
        let mirror = refl.image(sites[a]);
        c[(mirror, sites[b])] * mu[mirror]
    });
    max_abs(&(oracle - &gram.matrix))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in 1..=8 {
        worst = worst.max(clifford_residual(&gamma_matrices(d)?));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-13 && secs < 5.0,
        format!("max residual {worst:.1e} (tol 1e-13), {secs:.3}s (limit 5s)"),
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut deviation, mut omega_res, mut multiplicity_ok) = (0.0f64, 0.0f64, true);
    for d in 2..=4 {
        let rep = gamma_matrices(d)?;
        let half = rep.spinor_dim() / 2;
        for _ in 0..100 {
            let p: Vec<f64> = (0..d - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let m = rng.random_range(0.05..3.0);
            let report = a_matrix(&rep, &p, m)?;
            deviation = deviation.max(report.level_deviation);
            omega_res = omega_res.max(report.omega_residual);
            multiplicity_ok &= report.lower.len() == half && report.upper.len() == half;
        }
    }
    Ok((
        deviation <= 1e-9 && omega_res <= 1e-12 && multiplicity_ok,
        format!(
            "level deviation {deviation:.1e} (tol 1e-9), |Ω²-ω²| {omega_res:.1e} (tol 1e-12), multiplicities {}",
            if multiplicity_ok { "S/2 each" } else { "WRONG" }
        ),
    ))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.0, 0.3, 1.0] {
        for omega in [0.5, 1.0, 2.0] {
            worst = worst.max(contour_self_test(t, omega)?.relative_error);
        }
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.1e} (tol 1e-6)")))
}

fn criterion_4() -> Outcome {
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for extent in [vec![16, 16], vec![8, 8, 8]] {
        for m in [0.2, 1.0] {
            let start = Instant::now();
            let (geom, refl) = lattice(&extent, 1.0);
            let op = flat_operator(&geom, m)?;
            let gram = rp_gram(&op, &refl, &positive_time_sites(&geom, &refl), &cfg)?;
            let secs = start.elapsed().as_secs_f64();
            let ok = gram.hermiticity <= 1e-10 && gram.min_eigenvalue >= -1e-8 && secs < 120.0;
            pass &= ok;
            parts.push(format!(
                "d={} m={m}: herm {:.1e}, min eig {:.2e}, {secs:.1}s",
                extent.len(),
                gram.hermiticity,
                gram.min_eigenvalue
            ));
        }
    }
    Ok((pass, parts.join("; ")))
}

fn cosine_lapse_operator() -> Result<(LatticeGeometry, ReflectionStructure, ScalarOperator)> {
    let (geom, refl) = lattice(&[12, 12], 0.5);
    let width = 12.0 * 0.5;
    let metric = StaticMetric::from_fn(&geom, |x| 1.0 + 0.5 * (2.0 * PI * x[0] / width).cos(), |_, _| 1.0);
    let curvature: Vec<f64> = (0..geom.n_sites())
        .map(|s| 2.0 * (2.0 * PI * geom.position(s)[1] / width).sin())
        .collect();
    let potential = PotentialField::with_curvature(0.8, 0.25, &curvature)?;
    let op = assemble_operator(&geom, &metric, &potential)?;
    Ok((geom, refl, op))
}

fn criterion_5() -> Outcome {
    let (geom, refl, op) = cosine_lapse_operator()?;
    let gram = rp_gram(&op, &refl, &positive_time_sites(&geom, &refl), &SolverConfig::default())?;
    Ok((
        gram.min_eigenvalue >= -1e-8,
        format!(
            "cosine lapse, xi R with min V {:.3}: min eig {:.2e} (tol -1e-8)",
            op.potential().min(),
            gram.min_eigenvalue
        ),
    ))
}

fn criterion_6() -> Outcome {
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for extent in [vec![16], vec![16, 8]] {
        let (geom, refl) = lattice(&extent, 1.0);
        let op = flat_operator(&geom, 0.7)?;
        let region = HalfRegion::new(&geom, &refl);
        let image = image_covariances(&op, &refl, &region, &cfg)?;
        let quotient = quotient_covariances(&op, &refl, &region, &cfg)?;
        let gap = construction_gap(&image, &quotient)?;
        let half = half_difference_residual(&op, &refl, &region, &image, &cfg)?;
        let mono = dn_monotonicity(&image)?;
        let ok = gap <= 1e-8 && half <= 1e-10 && mono.min_eigenvalue >= -1e-8;
        pass &= ok;
        parts.push(format!(
            "{}D: image/quotient {gap:.1e}, half-difference {half:.1e}, min eig(C_N-C_D) {:.2e}",
            extent.len(),
            mono.min_eigenvalue
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let cfg = SolverConfig::default();
    let mut gaps = Vec::new();
    for h in [0.25, 0.125, 0.0625] {
        let (geom, refl) = lattice(&[(4.0 / h) as usize, (2.0 / h) as usize], h);
        let op = flat_operator(&geom, 1.0)?;
        let partition = partition_regions(&geom, &refl);
        let mut f = vec![C64::new(0.0, 0.0); geom.n_sites()];
        for &s in &partition.omega_plus {
            let x = geom.position(s);
            f[s] = C64::new((-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)) / 0.1).exp(), 0.0);
        }
        gaps.push(action_identity_residual(&op, &refl, &partition, &f, &cfg)?.residual);
    }
    let ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]];
    Ok((
        ratios.iter().all(|&r| r >= 1.5),
        format!(
            "gaps {:.2e}, {:.2e}, {:.2e}; ratios {:.2}, {:.2} (need >= 1.5)",
            gaps[0], gaps[1], gaps[2], ratios[0], ratios[1]
        ),
    ))
}

fn criterion_8() -> Outcome {
    let mut anti = 0.0f64;
    for extent in [vec![8], vec![8, 8], vec![6, 4, 4], vec![4, 4, 2, 4], vec![8, 6]] {
        let (geom, refl) = lattice(&extent, 0.5);
        let rep = gamma_matrices(extent.len())?;
        for lapse in [1.0, 4.0] {
            let d = assemble_dirac(&geom, &rep, lapse)?;
            anti = anti.max(theta_map(&geom, &refl, &rep)?.anticommutation_residual(&d));
        }
    }
    let (geom, refl) = lattice(&[8, 8], 1.0);
    let rep = gamma_matrices(2)?;
    let d = assemble_dirac(&geom, &rep, 1.0)?;
    let theta = theta_map(&geom, &refl, &rep)?;
    let basis = positive_spinor_deltas(&d, &refl);
    let gram = dirac_gram_lattice(&d, 1.0, &theta, &refl, &basis, &SolverConfig::default())?;
    Ok((
        anti <= 1e-14 && gram.hermiticity <= 1e-10,
        format!(
            "anticommutator {anti:.1e} (tol 1e-14), Gram hermiticity {:.1e} (tol 1e-10); finite-h min eig {:.2e} (reported only)",
            gram.hermiticity, gram.min_eigenvalue
        ),
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pass = true;
    let mut parts = Vec::new();
    for d in 2..=4usize {
        let rep = gamma_matrices(d)?;
        let s = rep.spinor_dim();
        let h = 0.25;
        let extent = vec![16; d - 1];
        let grid = MomentumGrid::new(&extent, h, 0.9)?;
        let n_spatial = grid.n_modes();
        let points: Vec<usize> = (0..3).map(|_| rng.random_range(0..n_spatial)).collect();
        let mut basis: Vec<MomentumFunction> = Vec::new();
        for &x in &points {
            for i in 1..=3 {
                for a in 0..s {
                    let mut slice = vec![C64::new(0.0, 0.0); n_spatial * s];
                    slice[x * s + a] = C64::new(1.0, 0.0);
                    basis.push(vec![spatial_transform(&grid, s, i as f64 * h, &slice)?]);
                }
            }
        }
        let gram = dirac_gram_momentum(&grid, &rep, &basis)?;
        let scale = gram.spectrum.last().copied().unwrap_or(1.0);
        let mut agreement = 0.0f64;
        for (a, f) in basis.iter().enumerate() {
            let value = square_form_value(&grid, &rep, f)?;
            agreement = agreement.max((value - gram.matrix[(a, a)].re).abs() / value.max(scale * 1e-3));
        }
        for _ in 0..4 {
            let coeffs: Vec<C64> = (0..basis.len())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let combined: MomentumFunction = (0..3)
                .map(|i| {
                    let t = (i + 1) as f64 * h;
                    let coefficients = (0..n_spatial * s)
                        .map(|j| {
                            basis
                                .iter()
                                .zip(&coeffs)
                                .filter(|(f, _)| f[0].t == t)
                                .map(|(f, c)| f[0].coefficients[j] * c)
                                .sum()
                        })
                        .collect();
                    rp_lab::dirac::TimeSample { t, coefficients }
                })
                .collect();
            let c = DVector::from_column_slice(&coeffs);
            let quadratic = (c.adjoint() * &gram.matrix * &c)[(0, 0)].re;
            let value = square_form_value(&grid, &rep, &combined)?;
            agreement = agreement.max((value - quadratic).abs() / value);
        }
        let ok = gram.min_eigenvalue >= -1e-12 && agreement <= 1e-10;
        pass &= ok;
        parts.push(format!(
            "d={d} ({} modes, {} functions): min eig {:.1e}, square-form gap {agreement:.1e}",
            n_spatial,
            basis.len(),
            gram.min_eigenvalue
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn gaussian_spinor(geom: &LatticeGeometry, t0: f64, width: f64) -> Vec<C64> {
    let half = geom.time_extent() as i64 / 2;
    let centre = geom.extent(1) as f64 * geom.spacing() / 2.0;
    let spinor = [C64::new(1.0, 0.0), C64::new(0.3, 0.5)];
    let mut f = vec![C64::new(0.0, 0.0); geom.n_sites() * 2];
    for site in 0..geom.n_sites() {
        let label = geom.time_label(site);
        if label < 1 || label >= half {
            continue;
        }
        let x = geom.position(site);
        let g = (-((x[0] - t0).powi(2) + (x[1] - centre).powi(2)) / (width * width)).exp();
        for a in 0..2 {
            f[site * 2 + a] = spinor[a] * g;
        }
    }
    f
}

fn criterion_10() -> Outcome {
    let cfg = SolverConfig::default();
    let rep = gamma_matrices(2)?;
    let mut gaps = Vec::new();
    let mut flux_gap = 0.0f64;
    let mut scaling_gap = 0.0f64;
    for h in [0.25, 0.125, 0.0625] {
        let (geom, refl) = lattice(&[(16.0 / h) as usize, (4.0 / h) as usize], h);
        let theta = theta_map(&geom, &refl, &rep)?;
        let f = gaussian_spinor(&geom, 1.0, 0.4);
        let mut values = Vec::new();
        for lapse in [1.0, 4.0] {
            let d = assemble_dirac(&geom, &rep, lapse)?;
            let b = boundary_term_check(&d, 1.0, &theta, &refl, &f, &cfg)?;
            flux_gap = flux_gap.max((b.flux_value - b.gram_value).abs() / b.gram_value);
            values.push(b);
        }
        gaps.push(values[0].gap);
        if h == 0.25 {
            // The same u seen through both lapses: √F |F^{-1/2} γ₀ u|² halves
            // from F = 1 to F = 4, exactly in floating point.
            let d = assemble_dirac(&geom, &rep, 1.0)?;
            let (u, _) = solve_shifted(&d, 1.0, &f, &cfg)?;
            let one = boundary_sum(&geom, 2, &u, 1.0)?;
            let four = boundary_sum(&geom, 2, &u, 4.0)?;
            scaling_gap = (four - one / 2.0).abs();
        }
    }
    let ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]];
    Ok((
        ratios.iter().all(|&r| r >= 1.5) && flux_gap <= 1e-10 && scaling_gap == 0.0,
        format!(
            "gaps {:.2e}, {:.2e}, {:.2e}; ratios {:.2}, {:.2} (need >= 1.5); exact flux identity for F in {{1,4}}: {flux_gap:.1e}; sqrt(F) scaling defect {scaling_gap:.1e}",
            gaps[0], gaps[1], gaps[2], ratios[0], ratios[1]
        ),
    ))
}

fn criterion_11() -> Outcome {
    let (geom, refl) = lattice(&[8, 4], 1.0);
    let op = flat_operator(&geom, 0.5)?;
    let gram = rp_gram(&op, &refl, &positive_time_sites(&geom, &refl), &SolverConfig::default())?;
    let q = os_quotient(&gram, None)?;
    let residual = q.quotient_residual(&gram.matrix);

    let mut fixture = DMatrix::<C64>::identity(4, 4);
    fixture[(3, 3)] = C64::new(-1e-3, 0.0);
    let refused = matches!(
        os_quotient(&GramReport::from_matrix(fixture, "fixture", Vec::new()), None),
        Err(Error::NotReflectionPositive { eigenvalue, .. }) if (eigenvalue + 1e-3).abs() < 1e-12
    );
    Ok((
        residual <= 1e-10 && refused,
        format!(
            "rank {}/{}, |Q†MQ - I| {residual:.1e} (tol 1e-10), refusal at -1e-3: {}",
            q.rank,
            q.basis_size,
            if refused { "yes" } else { "NO" }
        ),
    ))
}

fn criterion_12() -> Outcome {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for (extent, m) in [(vec![16, 16], 0.2), (vec![16, 16], 1.0), (vec![8, 8, 8], 0.2), (vec![8, 8, 8], 1.0)] {
        let (geom, refl) = lattice(&extent, 1.0);
        let op = flat_operator(&geom, m)?;
        let sites = positive_time_sites(&geom, &refl);
        let gram = rp_gram(&op, &refl, &sites, &cfg)?;
        worst = worst.max(gram_oracle_gap(&op, &refl, &sites, &gram));
    }
    let (geom, refl, op) = cosine_lapse_operator()?;
    let sites = positive_time_sites(&geom, &refl);
    let gram = rp_gram(&op, &refl, &sites, &cfg)?;
    worst = worst.max(gram_oracle_gap(&op, &refl, &sites, &gram));

    for extent in [vec![16], vec![16, 8]] {
        let (geom, refl) = lattice(&extent, 1.0);
        let op = flat_operator(&geom, 0.7)?;
        let region = HalfRegion::new(&geom, &refl);
        let image = image_covariances(&op, &refl, &region, &cfg)?;
        let c = dense_covariance(&op);
        let mu = op.measure();
        let k = region.len();
        let kernel = |x: usize, y: usize| c[(x, y)] / mu[y];
        let cn = DMatrix::from_fn(k, k, |i, j| {
            let (x, y) = (region.sites[i], region.sites[j]);
            kernel(x, y) + kernel(refl.image(x), y)
        });
        let cd = DMatrix::from_fn(k, k, |i, j| {
            let (x, y) = (region.sites[i], region.sites[j]);
            kernel(x, y) - kernel(refl.image(x), y)
        });
        worst = worst.max(max_abs(&(cn - &image.cn))).max(max_abs(&(cd - &image.cd)));
    }
    Ok((worst <= 1e-8, format!("max sparse/dense gap {worst:.1e} (tol 1e-8)")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("Clifford relations", criterion_1),
        ("A-matrix spectrum", criterion_2),
        ("contour formulas", criterion_3),
        ("scalar reflection positivity", criterion_4),
        ("static metric with curvature coupling", criterion_5),
        ("Dirichlet/Neumann identities and monotonicity", criterion_6),
        ("Euclidean action identity", criterion_7),
        ("Dirac anticommutation", criterion_8),
        ("Dirac momentum-space positivity", criterion_9),
        ("Dirac boundary term", criterion_10),
        ("OS quotient", criterion_11),
        ("dense oracle equivalence", criterion_12),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(result) => result,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
