//! Runs each experiment through the library and fills a report.

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
    kernel_rank, lattice_to_momentum, solve_shifted, square_form_value, theta_map, DiracOperator, MomentumGrid,
    SpinorField,
};
use rp_lab::geometry::{
    build_lattice, build_reflection, partition_regions, LatticeGeometry, ReflectionStructure, StaticMetric,
};
use rp_lab::linalg::max_abs;
use rp_lab::quantization::{one_particle_norm, os_quotient};
use rp_lab::scalar_rp::{
    action_identity_residual, assemble_operator, reflection_commutation_residual, rp_gram, rp_gram_fields,
    PotentialField, ScalarOperator,
};
use rp_lab::{Error, C64};

use crate::config::{config_error, ConfigError, Experiment, ExperimentConfig, Profile};
use crate::report::{Check, ReportDocument};

/// Largest lattice for which the dense-inverse oracle is run.
pub const DENSE_ORACLE_SITES: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Where a library error lands: bad input, a solver breakdown, or a failed
/// certificate.
enum Failure {
    Config(ConfigError),
    Solver(String),
    Check(String),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::NotConverged { .. } | Error::Singular => Failure::Solver(e.to_string()),
        Error::NotHermitian { .. } | Error::NotReflectionPositive { .. } => Failure::Check(e.to_string()),
        Error::InvalidPotential(_) => Failure::Config(config_error("xi", e.to_string())),
        Error::InvalidMetric(_) => Failure::Config(config_error("metric", e.to_string())),
        Error::InvalidLattice(_) => Failure::Config(config_error("lattice", e.to_string())),
        Error::BasisOutsideRegion { .. } => Failure::Config(config_error("basis", e.to_string())),
        Error::InvalidArgument { name, .. } => Failure::Config(config_error(name, e.to_string())),
        Error::DimensionMismatch { .. } => Failure::Config(config_error("config", e.to_string())),
    }
}

fn setup_err(e: Error) -> ConfigError {
    match classify(e) {
        Failure::Config(c) => c,
        Failure::Solver(m) | Failure::Check(m) => config_error("config", m),
    }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }

    fn stop(self, report: &mut ReportDocument, stage: &str) {
        report.timings.insert(stage.to_string(), self.0.elapsed().as_secs_f64());
    }
}

fn metric(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<StaticMetric, ConfigError> {
    let m = &cfg.metric;
    match m.profile {
        Profile::Flat => Ok(StaticMetric::flat(geom)),
        Profile::CosineLapse => {
            if geom.dims() < 2 {
                return Err(config_error("metric", "cosine-lapse needs a spatial axis"));
            }
            let a = m.amplitude.unwrap_or(0.5);
            if !(a.abs() < 1.0) {
                return Err(config_error("metric.amplitude", format!("{a} must lie in (-1, 1)")));
            }
            let width = geom.extent(1) as f64 * geom.spacing();
            Ok(StaticMetric::from_fn(geom, |x| 1.0 + a * (2.0 * PI * x[0] / width).cos(), |_, _| 1.0))
        }
        Profile::Table => {
            let n = geom.n_spatial();
            let lapse = m.lapse.clone().unwrap_or_else(|| vec![1.0; n]);
            let spatial = m.spatial.clone().unwrap_or_else(|| vec![vec![1.0; n]; geom.dims() - 1]);
            let table = StaticMetric { lapse, spatial };
            table.to_sites(geom).map_err(|e| config_error("metric", e.to_string()))?;
            Ok(table)
        }
    }
}

fn curvature(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<Vec<f64>, ConfigError> {
    let m = &cfg.metric;
    let n = geom.n_sites();
    if let Some(r) = &m.curvature {
        if m.curvature_amplitude.is_some() {
            return Err(config_error("metric.curvature", "give either a table or an amplitude"));
        }
        if r.len() == n {
            return Ok(r.clone());
        }
        if r.len() == geom.n_spatial() {
            return Ok((0..n).map(|s| r[geom.spatial_index(s)]).collect());
        }
        return Err(config_error(
            "metric.curvature",
            format!("{} entries; expected {} (spatial) or {n} (sites)", r.len(), geom.n_spatial()),
        ));
    }
    if let Some(b) = m.curvature_amplitude {
        if geom.dims() < 2 {
            return Err(config_error("metric.curvature_amplitude", "needs a spatial axis"));
        }
        let width = geom.extent(1) as f64 * geom.spacing();
        return Ok((0..n).map(|s| b * (2.0 * PI * geom.position(s)[1] / width).sin()).collect());
    }
    Ok(vec![0.0; n])
}

fn scalar_operator(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<ScalarOperator, ConfigError> {
    let metric = metric(cfg, geom)?;
    let r = curvature(cfg, geom)?;
    let potential = PotentialField::with_curvature(cfg.mass, cfg.xi, &r).map_err(setup_err)?;
    assemble_operator(geom, &metric, &potential).map_err(setup_err)
}

/// Sites of the basis: `Ω₊` restricted by the configured times and spatial
/// indices.
fn basis_sites(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<Vec<usize>, ConfigError> {
    let half = geom.time_extent() as i64 / 2;
    let times: Vec<i64> = match &cfg.basis.times {
        Some(t) => t.clone(),
        None => (1..half).collect(),
    };
    for &t in &times {
        if t < 1 || t >= half {
            return Err(config_error("basis.times", format!("{t} is outside 1..{half}")));
        }
    }
    let spatial: Vec<usize> = match &cfg.basis.spatial {
        Some(x) => x.clone(),
        None => (0..geom.n_spatial()).collect(),
    };
    for &x in &spatial {
        if x >= geom.n_spatial() {
            return Err(config_error(
                "basis.spatial",
                format!("{x} is outside 0..{}", geom.n_spatial()),
            ));
        }
    }
    let sites: Vec<usize> = times
        .iter()
        .flat_map(|&t| spatial.iter().map(move |&x| (t, x)))
        .map(|(t, x)| geom.site_from_time(t, x))
        .collect();
    if sites.is_empty() {
        return Err(config_error("basis", "selects no sites"));
    }
    Ok(sites)
}

/// Lattice with the same physical box as the configured one at spacing `h`.
fn rescaled(cfg: &ExperimentConfig, h: f64) -> Result<LatticeGeometry, ConfigError> {
    let base = cfg.lattice_config()?;
    let mut spec = base.spec();
    for (axis, n) in spec.extent.iter_mut().enumerate() {
        let count = *n as f64 * base.spacing / h;
        if (count - count.round()).abs() > 1e-9 * count {
            return Err(config_error(
                "spacings",
                format!("{h} does not divide the box along axis {axis}"),
            ));
        }
        *n = count.round() as usize;
    }
    spec.spacing = h;
    build_lattice(&spec).map_err(|e| config_error("spacings", e.to_string()))
}

fn spacings(cfg: &ExperimentConfig, default: bool) -> Result<Vec<f64>, ConfigError> {
    let h = cfg.lattice_config()?.spacing;
    let list = match &cfg.spacings {
        Some(s) => s.clone(),
        None if default => vec![h, h / 2.0, h / 4.0],
        None => return Ok(Vec::new()),
    };
    if list.len() < 2 {
        return Err(config_error("spacings", "a convergence study needs at least two spacings"));
    }
    for &s in &list {
        if !(s > 0.0 && s.is_finite()) {
            return Err(config_error("spacings", format!("{s} is not positive")));
        }
        rescaled(cfg, s)?;
    }
    Ok(list)
}

/// Gaussian profile centred at `(t₀, box centre)`, restricted to `Ω₊`.
fn source_profile(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Vec<f64> {
    let box_time = geom.time_extent() as f64 * geom.spacing();
    let (t0, width) = match cfg.source {
        Some(s) => (s.center, s.width),
        None => {
            let t0 = (box_time / 4.0).min(1.0);
            (t0, 0.4 * t0)
        }
    };
    let half = geom.time_extent() as i64 / 2;
    (0..geom.n_sites())
        .map(|s| {
            let label = geom.time_label(s);
            if label < 1 || label >= half {
                return 0.0;
            }
            let x = geom.position(s);
            let mut r2 = (x[0] - t0).powi(2);
            for (a, xa) in x.iter().enumerate().skip(1) {
                let centre = geom.extent(a) as f64 * geom.spacing() / 2.0;
                r2 += (xa - centre).powi(2);
            }
            (-r2 / (width * width)).exp()
        })
        .collect()
}

fn spinor_source(cfg: &ExperimentConfig, geom: &LatticeGeometry, s: usize) -> SpinorField {
    let profile = source_profile(cfg, geom);
    let mut f = vec![C64::new(0.0, 0.0); geom.n_sites() * s];
    for (site, g) in profile.iter().enumerate() {
        for a in 0..s {
            f[site * s + a] = C64::new(1.0 / (1.0 + a as f64), 0.3 * a as f64) * g;
        }
    }
    f
}

pub fn validate_setup(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<(), ConfigError> {
    match cfg.experiment {
        Experiment::ScalarRp | Experiment::Quantize => {
            scalar_operator(cfg, geom)?;
            basis_sites(cfg, geom)?;
        }
        Experiment::DnCompare => {
            scalar_operator(cfg, geom)?;
        }
        Experiment::ActionIdentity => {
            if matches!(cfg.metric.profile, Profile::Table) || cfg.metric.curvature.is_some() {
                return Err(config_error("metric", "tables cannot follow a change of spacing; use a named profile"));
            }
            scalar_operator(cfg, geom)?;
            spacings(cfg, true)?;
        }
        Experiment::DiracRp => {
            let rep = gamma_matrices(geom.dims()).map_err(|e| config_error("lattice", e.to_string()))?;
            assemble_dirac(geom, &rep, cfg.lapse).map_err(|e| config_error("lattice", e.to_string()))?;
            basis_sites(cfg, geom)?;
            spacings(cfg, false)?;
        }
        Experiment::CliffordCheck | Experiment::ContourCheck => {}
    }
    Ok(())
}

/// Runs a validated config. Certificates that fail become failed checks;
/// solver breakdowns are recorded in the report and returned as
/// [`RunError::Solver`] alongside it.
pub fn run(cfg: &ExperimentConfig) -> Result<(ReportDocument, Option<RunError>), RunError> {
    cfg.validate()?;
    let mut report = ReportDocument::new(cfg);
    let total = Timer::start();
    let outcome = match cfg.experiment {
        Experiment::ScalarRp => scalar_rp(cfg, &mut report),
        Experiment::DnCompare => dn_compare(cfg, &mut report),
        Experiment::DiracRp => dirac_rp(cfg, &mut report),
        Experiment::CliffordCheck => clifford_check(cfg, &mut report),
        Experiment::ActionIdentity => action_identity(cfg, &mut report),
        Experiment::Quantize => quantize(cfg, &mut report),
        Experiment::ContourCheck => contour_check(cfg, &mut report),
    };
    total.stop(&mut report, "total");
    match outcome {
        Ok(()) => Ok((report, None)),
        Err(e) => match classify(e) {
            Failure::Config(c) => Err(RunError::Config(c)),
            Failure::Solver(message) => {
                report.check(Check::at_most(format!("solver: {message}"), 1.0, 0.0));
                Ok((report, Some(RunError::Solver(message))))
            }
            Failure::Check(message) => {
                report.check(Check::at_most(format!("certificate: {message}"), 1.0, 0.0));
                Ok((report, None))
            }
        },
    }
}

type Step = Result<(), Error>;

fn geometry_and_reflection(cfg: &ExperimentConfig) -> Result<(LatticeGeometry, ReflectionStructure), Error> {
    let geom = cfg.geometry().map_err(|e| Error::InvalidLattice(e.reason))?;
    let refl = build_reflection(&geom);
    Ok((geom, refl))
}

fn operator(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<ScalarOperator, Error> {
    scalar_operator(cfg, geom).map_err(|e| Error::InvalidArgument {
        name: "config",
        reason: e.to_string(),
    })
}

fn sites(cfg: &ExperimentConfig, geom: &LatticeGeometry) -> Result<Vec<usize>, Error> {
    basis_sites(cfg, geom).map_err(|e| Error::InvalidArgument {
        name: "basis",
        reason: e.reason,
    })
}

fn scalar_rp(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let (geom, refl) = geometry_and_reflection(cfg)?;
    let timer = Timer::start();
    let op = operator(cfg, &geom)?;
    let basis = sites(cfg, &geom)?;
    timer.stop(report, "assemble");

    let commutation = reflection_commutation_residual(&op, &refl);
    report.residuals.insert("reflection_commutation".into(), commutation);
    report.check(Check::at_most("reflection commutation", commutation, 1e-12));

    let timer = Timer::start();
    let gram = rp_gram(&op, &refl, &basis, &cfg.solver.solver())?;
    timer.stop(report, "gram");
    report.residuals.insert("max_solver_residual".into(), gram.max_solver_residual());
    report.check(Check::at_most("gram hermiticity", gram.hermiticity, 1e-10));
    report.check(Check::at_least("gram min eigenvalue", gram.min_eigenvalue, -1e-8));
    report.check(Check::at_most(
        "max solver residual",
        gram.max_solver_residual(),
        cfg.solver.tolerance,
    ));
    report.observations.insert("basis_size".into(), basis.len() as f64);
    report.observations.insert("min_potential".into(), op.potential().min());

    if geom.n_sites() <= DENSE_ORACLE_SITES {
        let timer = Timer::start();
        let c = op.to_dense().lu().try_inverse().ok_or(Error::Singular)?;
        let mu = op.measure();
        let oracle = DMatrix::from_fn(basis.len(), basis.len(), |a, b| {
            let mirror = refl.image(basis[a]);
            c[(mirror, basis[b])] * mu[mirror]
        });
        timer.stop(report, "dense_oracle");
        report.check(Check::at_most("dense oracle gap", max_abs(&(oracle - &gram.matrix)), 1e-8));
    }
    report.spectrum("gram", gram.spectrum);
    Ok(())
}

fn dn_compare(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let (geom, refl) = geometry_and_reflection(cfg)?;
    let op = operator(cfg, &geom)?;
    let region = HalfRegion::new(&geom, &refl);
    let solver = cfg.solver.solver();

    let timer = Timer::start();
    let image = image_covariances(&op, &refl, &region, &solver)?;
    timer.stop(report, "image");
    let timer = Timer::start();
    let quotient = quotient_covariances(&op, &refl, &region, &solver)?;
    timer.stop(report, "quotient");

    let gap = construction_gap(&image, &quotient)?;
    let half = half_difference_residual(&op, &refl, &region, &image, &solver)?;
    let mono = dn_monotonicity(&image)?;
    report.residuals.insert("max_solver_residual".into(), image.solver_residual);
    report.check(Check::at_most("image vs quotient", gap, 1e-8));
    report.check(Check::at_most("reflected covariance vs (C_N - C_D)/2", half, 1e-10));
    report.check(Check::at_least("min eigenvalue of C_N - C_D", mono.min_eigenvalue, -mono.tolerance));
    report.observations.insert("half_region_size".into(), region.len() as f64);
    report.spectrum("cn_minus_cd", mono.spectrum);
    Ok(())
}

fn quantize(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let (geom, refl) = geometry_and_reflection(cfg)?;
    let op = operator(cfg, &geom)?;
    let basis = sites(cfg, &geom)?;
    let solver = cfg.solver.solver();
    let timer = Timer::start();
    let gram = rp_gram(&op, &refl, &basis, &solver)?;
    timer.stop(report, "gram");
    report.spectrum("gram", gram.spectrum.clone());
    report.residuals.insert("max_solver_residual".into(), gram.max_solver_residual());

    let hilbert = match os_quotient(&gram, cfg.rank_tol) {
        Ok(h) => h,
        Err(Error::NotReflectionPositive { eigenvalue, tolerance }) => {
            report.check(Check::at_least("reflection positivity", eigenvalue, -tolerance));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let scale = hilbert.spectrum.last().copied().unwrap_or(0.0).max(1.0);
    report.check(Check::at_least(
        "reflection positivity",
        gram.min_eigenvalue,
        -hilbert.rank_tolerance,
    ));
    report.check(Check::at_most(
        "quotient gram vs identity",
        hilbert.quotient_residual(&gram.matrix),
        1e-10,
    ));
    report.check(Check::at_most(
        "null space residual",
        hilbert.null_residual(&gram.matrix),
        1e-8 * scale,
    ));
    let p = hilbert.projector(&gram.matrix);
    report.check(Check::at_most("projector idempotency", max_abs(&(&p * &p - &p)), 1e-10));
    report.check(Check::equal(
        "rank + null dimension",
        (hilbert.rank + hilbert.null_dimension) as f64,
        basis.len() as f64,
    ));

    // One-particle norm of a random section against a direct solve.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coeffs: Vec<C64> = (0..basis.len())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut field = vec![C64::new(0.0, 0.0); geom.n_sites()];
    for (c, &s) in coeffs.iter().zip(&basis) {
        field[s] = *c;
    }
    let norm = one_particle_norm(&gram, &coeffs)?;
    let direct = rp_gram_fields(&op, &refl, &[field], &solver)?.matrix[(0, 0)].re;
    report.check(Check::at_most(
        "one-particle norm vs direct solve",
        (norm - direct).abs() / direct.abs().max(1e-300),
        1e-10,
    ));

    report.observations.insert("rank".into(), hilbert.rank as f64);
    report.observations.insert("null_dimension".into(), hilbert.null_dimension as f64);
    report.observations.insert("rank_tolerance".into(), hilbert.rank_tolerance);
    Ok(())
}

fn action_identity(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let list = spacings(cfg, true).map_err(|e| Error::InvalidArgument {
        name: "spacings",
        reason: e.reason,
    })?;
    let mut gaps = Vec::new();
    for &h in &list {
        let timer = Timer::start();
        let geom = rescaled(cfg, h).map_err(|e| Error::InvalidLattice(e.reason))?;
        let refl = build_reflection(&geom);
        let op = operator(cfg, &geom)?;
        let partition = partition_regions(&geom, &refl);
        let f: Vec<C64> = source_profile(cfg, &geom).into_iter().map(|g| C64::new(g, 0.0)).collect();
        let id = action_identity_residual(&op, &refl, &partition, &f, &cfg.solver.solver())?;
        timer.stop(report, &format!("h={h}"));
        report.observations.insert(format!("gap h={h}"), id.residual);
        report.observations.insert(format!("lhs h={h}"), id.lhs);
        gaps.push((h, id.residual));
    }
    for pair in gaps.windows(2) {
        let ((h0, g0), (h1, g1)) = (pair[0], pair[1]);
        report.check(Check::at_least(format!("gap reduction h={h0} -> h={h1}"), g0 / g1, 1.5));
    }
    Ok(())
}

fn dirac_basis(dirac: &DiracOperator, sites: &[usize]) -> Vec<SpinorField> {
    let s = dirac.spinor_dim();
    sites
        .iter()
        .flat_map(|&site| {
            (0..s).map(move |a| {
                let mut e = vec![C64::new(0.0, 0.0); dirac.len()];
                e[site * s + a] = C64::new(1.0, 0.0);
                e
            })
        })
        .collect()
}

fn dirac_rp(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let (geom, refl) = geometry_and_reflection(cfg)?;
    let rep = gamma_matrices(geom.dims())?;
    let s = rep.spinor_dim();
    let m = cfg.mass;
    let solver = cfg.solver.solver();
    let timer = Timer::start();
    let dirac = assemble_dirac(&geom, &rep, cfg.lapse)?;
    let theta = theta_map(&geom, &refl, &rep)?;
    timer.stop(report, "assemble");

    report.check(Check::at_most("anticommutator {theta, D}", theta.anticommutation_residual(&dirac), 1e-14));
    report.check(Check::at_most("D + D^dagger", dirac.skew_residual(), 1e-14));

    let basis = dirac_basis(&dirac, &sites(cfg, &geom)?);
    let timer = Timer::start();
    let lattice = dirac_gram_lattice(&dirac, m, &theta, &refl, &basis, &solver)?;
    timer.stop(report, "lattice_gram");
    report.check(Check::at_most("lattice gram hermiticity", lattice.hermiticity, 1e-10));
    report.check(Check::at_most(
        "max solver residual",
        lattice.max_solver_residual(),
        solver.tolerance,
    ));
    report.residuals.insert("max_solver_residual".into(), lattice.max_solver_residual());
    // Finite-spacing positivity of the naive operator is not a certificate.
    report.observations.insert("lattice_gram_min_eigenvalue".into(), lattice.min_eigenvalue);
    report.spectrum("lattice_gram", lattice.spectrum.clone());

    let timer = Timer::start();
    let grid = MomentumGrid::from_geometry(&geom, m)?;
    let functions = basis
        .iter()
        .map(|f| lattice_to_momentum(&geom, &grid, s, f))
        .collect::<Result<Vec<_>, _>>()?;
    let momentum = dirac_gram_momentum(&grid, &rep, &functions)?;
    let mut agreement = 0.0f64;
    let scale = momentum.spectrum.last().copied().unwrap_or(0.0);
    for (a, f) in functions.iter().enumerate() {
        let value = square_form_value(&grid, &rep, f)?;
        agreement = agreement.max((value - momentum.matrix[(a, a)].re).abs() / value.max(1e-3 * scale).max(1e-300));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coeffs: Vec<C64> = (0..basis.len())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut combined = vec![C64::new(0.0, 0.0); dirac.len()];
    for (c, f) in coeffs.iter().zip(&basis) {
        for (z, v) in combined.iter_mut().zip(f) {
            *z += c * v;
        }
    }
    let combined_value = square_form_value(&grid, &rep, &lattice_to_momentum(&geom, &grid, s, &combined)?)?;
    let c = DVector::from_column_slice(&coeffs);
    let quadratic = (c.adjoint() * &momentum.matrix * &c)[(0, 0)].re;
    agreement = agreement.max((combined_value - quadratic).abs() / combined_value.max(1e-300));
    let rank_defect = (0..grid.n_modes())
        .map(|k| kernel_rank(&rep, grid.momentum(k), m, 1e-9).abs_diff(s / 2))
        .max()
        .unwrap_or(0);
    timer.stop(report, "momentum_gram");
    report.check(Check::at_least("momentum gram min eigenvalue", momentum.min_eigenvalue, -1e-12));
    report.check(Check::at_most("momentum gram vs square form", agreement, 1e-10));
    report.check(Check::equal("per-mode kernel rank defect", rank_defect as f64, 0.0));
    report.spectrum("momentum_gram", momentum.spectrum);

    let timer = Timer::start();
    let f = spinor_source(cfg, &geom, s);
    let boundary = boundary_term_check(&dirac, m, &theta, &refl, &f, &solver)?;
    report.check(Check::at_most(
        "lattice flux identity",
        (boundary.flux_value - boundary.gram_value).abs() / boundary.gram_value.abs().max(1e-300),
        1e-10,
    ));
    let (u, _) = solve_shifted(&dirac, m, &f, &solver)?;
    let unit = boundary_sum(&geom, s, &u, 1.0)?;
    let scaled = boundary_sum(&geom, s, &u, cfg.lapse)?;
    report.check(Check::at_most(
        "sqrt(F) boundary scaling",
        (scaled * cfg.lapse.sqrt() - unit).abs() / unit.max(1e-300),
        1e-14,
    ));
    report.observations.insert("boundary_gap".into(), boundary.gap);
    report.observations.insert("boundary_value".into(), boundary.boundary_value);
    report.observations.insert("gram_value".into(), boundary.gram_value);
    // The momentum form is lapse-free; compare only on the flat lattice.
    if cfg.lapse == 1.0 {
        let source = lattice_to_momentum(&geom, &grid, s, &f)?;
        let semi_analytic = square_form_value(&grid, &rep, &source)?;
        report.observations.insert(
            "lattice_vs_momentum_relative_gap".into(),
            (boundary.gram_value - semi_analytic).abs() / semi_analytic.max(1e-300),
        );
    }
    timer.stop(report, "boundary");

    let list = spacings(cfg, false).map_err(|e| Error::InvalidArgument {
        name: "spacings",
        reason: e.reason,
    })?;
    let mut gaps = Vec::new();
    for &h in &list {
        let timer = Timer::start();
        let g = rescaled(cfg, h).map_err(|e| Error::InvalidLattice(e.reason))?;
        let r = build_reflection(&g);
        let d = assemble_dirac(&g, &rep, cfg.lapse)?;
        let t = theta_map(&g, &r, &rep)?;
        let b = boundary_term_check(&d, m, &t, &r, &spinor_source(cfg, &g, s), &solver)?;
        timer.stop(report, &format!("boundary h={h}"));
        report.observations.insert(format!("boundary gap h={h}"), b.gap);
        gaps.push((h, b.gap));
    }
    for pair in gaps.windows(2) {
        let ((h0, g0), (h1, g1)) = (pair[0], pair[1]);
        report.check(Check::at_least(format!("boundary gap reduction h={h0} -> h={h1}"), g0 / g1, 1.5));
    }
    Ok(())
}

fn clifford_check(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let dims: Vec<usize> = cfg.dimensions.clone().unwrap_or_else(|| (1..=8).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for d in dims {
        let rep = gamma_matrices(d)?;
        report.check(Check::at_most(format!("clifford relations d={d}"), clifford_residual(&rep), 1e-13));
        let (mut deviation, mut omega_res, mut multiplicity) = (0.0f64, 0.0f64, 0usize);
        for _ in 0..cfg.samples {
            let p: Vec<f64> = (0..d - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mass = rng.random_range(0.05..3.0);
            let a = a_matrix(&rep, &p, mass)?;
            deviation = deviation.max(a.level_deviation);
            omega_res = omega_res.max(a.omega_residual);
            multiplicity = multiplicity.max(a.lower.len().abs_diff(rep.spinor_dim() / 2));
        }
        report.check(Check::at_most(format!("A-matrix levels d={d}"), deviation, 1e-9));
        report.check(Check::at_most(format!("Omega^2 - omega^2 d={d}"), omega_res, 1e-12));
        report.check(Check::equal(format!("A-matrix multiplicity defect d={d}"), multiplicity as f64, 0.0));
    }
    Ok(())
}

fn contour_check(cfg: &ExperimentConfig, report: &mut ReportDocument) -> Step {
    let times = cfg.times.clone().unwrap_or_else(|| vec![0.0, 0.3, 1.0]);
    let omegas = cfg.omegas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    for &t in &times {
        for &w in &omegas {
            let c = contour_self_test(t, w)?;
            report.check(Check::at_most(format!("contour t={t} omega={w}"), c.relative_error, 1e-6));
        }
    }
    Ok(())
}
