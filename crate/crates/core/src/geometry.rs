//! Reflection-symmetric hypercubic lattices.
//!
//! Sites are enumerated row-major over integer coordinates with axis 0 (time)
//! slowest. The time coordinate of index `i0` is `t = (i0 - N0/2 + 1) * h`, so
//! the lattice covers `t ∈ {-N0/2+1, …, N0/2} · h` and the reflection
//! `t ↦ -t` maps sites onto sites. The plane `t = 0` is fixed, and on the
//! periodic time axis so is the antipodal plane `t = N0/2 · h`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub dims: usize,
    pub extent: Vec<usize>,
    pub spacing: f64,
    pub periodic: Vec<bool>,
}

impl LatticeSpec {
    /// Fully periodic lattice with uniform spacing.
    pub fn periodic(extent: &[usize], spacing: f64) -> Self {
        LatticeSpec {
            dims: extent.len(),
            extent: extent.to_vec(),
            spacing,
            periodic: vec![true; extent.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::InvalidLattice("dims must be at least 1".into()));
        }
        if self.extent.len() != self.dims || self.periodic.len() != self.dims {
            return Err(Error::InvalidLattice(format!(
                "extent and periodic must have {} entries",
                self.dims
            )));
        }
        if let Some(axis) = self.extent.iter().position(|&n| n < 2) {
            return Err(Error::InvalidLattice(format!(
                "axis {axis} has fewer than 2 sites"
            )));
        }
        if !self.extent[0].is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "time extent {} must be even",
                self.extent[0]
            )));
        }
        if !self.periodic[0] {
            return Err(Error::InvalidLattice(
                "time axis must be periodic for the site reflection to be an isometry".into(),
            ));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        Ok(())
    }
}

/// Neighbor pair of a site along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub forward: Option<usize>,
    pub backward: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    spec: LatticeSpec,
    strides: Vec<usize>,
    n_sites: usize,
    links: Vec<Link>,
}

pub fn build_lattice(spec: &LatticeSpec) -> Result<LatticeGeometry> {
    spec.validate()?;
    let d = spec.dims;
    let mut strides = vec![1usize; d];
    for axis in (0..d.saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * spec.extent[axis + 1];
    }
    let n_sites: usize = spec.extent.iter().product();

    let mut links = Vec::with_capacity(n_sites * d);
    let mut coords = vec![0usize; d];
    for site in 0..n_sites {
        decompose(site, &strides, &mut coords);
        for axis in 0..d {
            let n = spec.extent[axis];
            let c = coords[axis];
            let base = site - c * strides[axis];
            let forward = if c + 1 < n {
                Some(base + (c + 1) * strides[axis])
            } else if spec.periodic[axis] {
                Some(base)
            } else {
                None
            };
            let backward = if c > 0 {
                Some(base + (c - 1) * strides[axis])
            } else if spec.periodic[axis] {
                Some(base + (n - 1) * strides[axis])
            } else {
                None
            };
            links.push(Link { forward, backward });
        }
    }

    Ok(LatticeGeometry {
        spec: spec.clone(),
        strides,
        n_sites,
        links,
    })
}

fn decompose(mut site: usize, strides: &[usize], out: &mut [usize]) {
    for (axis, &stride) in strides.iter().enumerate() {
        out[axis] = site / stride;
        site %= stride;
    }
}

impl LatticeGeometry {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dims(&self) -> usize {
        self.spec.dims
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.spec.extent[axis]
    }

    pub fn time_extent(&self) -> usize {
        self.spec.extent[0]
    }

    /// Number of points on a constant-time slice.
    pub fn n_spatial(&self) -> usize {
        self.strides[0]
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut out = vec![0; self.spec.dims];
        decompose(site, &self.strides, &mut out);
        out
    }

    pub fn site_at(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| c * s)
            .sum()
    }

    /// Integer time label `t / h`, in `-N0/2+1 ..= N0/2`.
    pub fn time_label(&self, site: usize) -> i64 {
        let i0 = (site / self.strides[0]) as i64;
        i0 - self.time_extent() as i64 / 2 + 1
    }

    pub fn time(&self, site: usize) -> f64 {
        self.time_label(site) as f64 * self.spec.spacing
    }

    /// Site with the given time label and spatial index.
    pub fn site_from_time(&self, label: i64, spatial: usize) -> usize {
        let n0 = self.time_extent() as i64;
        let i0 = (label + n0 / 2 - 1).rem_euclid(n0) as usize;
        i0 * self.strides[0] + spatial
    }

    /// Row-major index of the spatial point of a site.
    pub fn spatial_index(&self, site: usize) -> usize {
        site % self.strides[0]
    }

    /// Coordinate `(t, x_1, …, x_{d-1})` of a site, spatial coordinates
    /// running from 0.
    pub fn position(&self, site: usize) -> Vec<f64> {
        let h = self.spec.spacing;
        let mut pos: Vec<f64> = self.coords(site).iter().map(|&c| c as f64 * h).collect();
        pos[0] = self.time(site);
        pos
    }

    pub fn link(&self, site: usize, axis: usize) -> Link {
        self.links[site * self.spec.dims + axis]
    }

    /// All neighbors of a site, with multiplicity.
    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.spec.dims).flat_map(move |axis| {
            let link = self.link(site, axis);
            link.forward
                .into_iter()
                .chain(link.backward)
                .map(move |n| (axis, n))
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReflectionStructure {
    perm: Vec<usize>,
    fixed: Vec<usize>,
}

impl ReflectionStructure {
    /// Reflected axis; always time.
    pub fn axis(&self) -> usize {
        0
    }

    pub fn image(&self, site: usize) -> usize {
        self.perm[site]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn fixed_set(&self) -> &[usize] {
        &self.fixed
    }

    pub fn is_fixed(&self, site: usize) -> bool {
        self.perm[site] == site
    }

    /// `(U_θ f)(s) = f(θ s)`.
    pub fn apply<T: Copy>(&self, f: &[T]) -> Vec<T> {
        self.perm.iter().map(|&s| f[s]).collect()
    }
}

pub fn build_reflection(geom: &LatticeGeometry) -> ReflectionStructure {
    let n_spatial = geom.n_spatial();
    let perm: Vec<usize> = (0..geom.n_sites())
        .map(|s| geom.site_from_time(-geom.time_label(s), s % n_spatial))
        .collect();
    let fixed = (0..geom.n_sites()).filter(|&s| perm[s] == s).collect();
    ReflectionStructure { perm, fixed }
}

#[derive(Debug, Clone)]
pub struct RegionPartition {
    pub omega_plus: Vec<usize>,
    pub omega_minus: Vec<usize>,
    pub sigma: Vec<usize>,
}

pub fn partition_regions(geom: &LatticeGeometry, refl: &ReflectionStructure) -> RegionPartition {
    let half = geom.time_extent() as i64 / 2;
    let mut omega_plus = Vec::new();
    let mut sigma = Vec::new();
    let mut omega_minus = Vec::new();
    for s in 0..geom.n_sites() {
        let t = geom.time_label(s);
        if refl.is_fixed(s) {
            sigma.push(s);
        } else if t > 0 && t < half {
            omega_plus.push(s);
        } else {
            omega_minus.push(s);
        }
    }
    RegionPartition {
        omega_plus,
        omega_minus,
        sigma,
    }
}

/// Static metric `F dt² + Σ_a G_aa dx_a²` sampled on the spatial points.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticMetric {
    /// Lapse squared `F`, one entry per spatial point.
    pub lapse: Vec<f64>,
    /// `G_aa` for `a = 1..d`, each with one entry per spatial point.
    pub spatial: Vec<Vec<f64>>,
}

impl StaticMetric {
    pub fn flat(geom: &LatticeGeometry) -> Self {
        let n = geom.n_spatial();
        StaticMetric {
            lapse: vec![1.0; n],
            spatial: vec![vec![1.0; n]; geom.dims() - 1],
        }
    }

    pub fn constant_lapse(geom: &LatticeGeometry, lapse: f64) -> Self {
        let mut m = Self::flat(geom);
        m.lapse.fill(lapse);
        m
    }

    /// Builds the metric from functions of the spatial coordinates
    /// `(x_1, …, x_{d-1})`.
    pub fn from_fn(
        geom: &LatticeGeometry,
        lapse: impl Fn(&[f64]) -> f64,
        spatial: impl Fn(usize, &[f64]) -> f64,
    ) -> Self {
        let points: Vec<Vec<f64>> = (0..geom.n_spatial())
            .map(|i| geom.position(i)[1..].to_vec())
            .collect();
        StaticMetric {
            lapse: points.iter().map(|x| lapse(x)).collect(),
            spatial: (1..geom.dims())
                .map(|a| points.iter().map(|x| spatial(a, x)).collect())
                .collect(),
        }
    }

    fn check(&self, geom: &LatticeGeometry) -> Result<()> {
        let n = geom.n_spatial();
        if self.lapse.len() != n {
            return Err(Error::InvalidMetric(format!(
                "lapse has {} entries, lattice has {n} spatial points",
                self.lapse.len()
            )));
        }
        if self.spatial.len() != geom.dims() - 1 || self.spatial.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidMetric(
                "spatial metric shape does not match the lattice".into(),
            ));
        }
        if self.lapse.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidMetric("lapse F must be positive".into()));
        }
        if self.spatial.iter().flatten().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidMetric("spatial metric G must be positive".into()));
        }
        Ok(())
    }

    /// Expands the metric onto every site.
    pub fn to_sites(&self, geom: &LatticeGeometry) -> Result<SiteMetric> {
        self.check(geom)?;
        let n_spatial = geom.n_spatial();
        let mut inverse = Vec::with_capacity(geom.n_sites() * geom.dims());
        let mut volume = Vec::with_capacity(geom.n_sites());
        for s in 0..geom.n_sites() {
            let x = s % n_spatial;
            inverse.push(1.0 / self.lapse[x]);
            let mut det = self.lapse[x];
            for g in &self.spatial {
                inverse.push(1.0 / g[x]);
                det *= g[x];
            }
            volume.push(det.sqrt());
        }
        Ok(SiteMetric {
            dims: geom.dims(),
            inverse,
            volume,
        })
    }
}

/// Diagonal metric data on every site: inverse components `g^{jj}` and the
/// volume density `√det g`. Unlike [`StaticMetric`] it may depend on time.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteMetric {
    dims: usize,
    inverse: Vec<f64>,
    volume: Vec<f64>,
}

impl SiteMetric {
    /// Site metric from per-site diagonal entries `g_jj`.
    pub fn from_diagonal(geom: &LatticeGeometry, diag: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let d = geom.dims();
        let mut inverse = Vec::with_capacity(geom.n_sites() * d);
        let mut volume = Vec::with_capacity(geom.n_sites());
        for s in 0..geom.n_sites() {
            let mut det = 1.0;
            for j in 0..d {
                let g = diag(s, j);
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidMetric(format!(
                        "g_{j}{j} = {g} at site {s} is not positive"
                    )));
                }
                inverse.push(1.0 / g);
                det *= g;
            }
            volume.push(det.sqrt());
        }
        Ok(SiteMetric {
            dims: d,
            inverse,
            volume,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.volume.len()
    }

    pub fn inverse(&self, site: usize, axis: usize) -> f64 {
        self.inverse[site * self.dims + axis]
    }

    pub fn volume_density(&self, site: usize) -> f64 {
        self.volume[site]
    }
}

/// Per-site weights `μ(s) = √(F det G) h^d` of the metric inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureField(pub Vec<f64>);

impl MeasureField {
    pub fn from_site_metric(geom: &LatticeGeometry, metric: &SiteMetric) -> Self {
        let hd = geom.spacing().powi(geom.dims() as i32);
        MeasureField((0..geom.n_sites()).map(|s| metric.volume_density(s) * hd).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for MeasureField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn measure_weights(geom: &LatticeGeometry, metric: &StaticMetric) -> Result<MeasureField> {
    let sites = metric.to_sites(geom)?;
    Ok(MeasureField::from_site_metric(geom, &sites))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(extent: &[usize], h: f64) -> LatticeGeometry {
        build_lattice(&LatticeSpec::periodic(extent, h)).unwrap()
    }

    #[test]
    fn one_dimensional_time_labels() {
        let g = lattice(&[8], 1.0);
        assert_eq!(g.n_sites(), 8);
        let labels: Vec<i64> = (0..8).map(|s| g.time_label(s)).collect();
        assert_eq!(labels, vec![-3, -2, -1, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn torus_has_four_neighbors() {
        let g = lattice(&[8, 4], 0.5);
        assert_eq!(g.n_sites(), 32);
        for s in 0..32 {
            let n: Vec<_> = g.neighbors(s).collect();
            assert_eq!(n.len(), 4);
            for (axis, t) in n {
                assert!(g.neighbors(t).any(|(a, u)| a == axis && u == s));
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_lattice(&LatticeSpec::periodic(&[7], 1.0)),
            Err(Error::InvalidLattice(_))
        ));
        assert!(build_lattice(&LatticeSpec::periodic(&[8, 1], 1.0)).is_err());
        assert!(build_lattice(&LatticeSpec::periodic(&[8], 0.0)).is_err());
        let mut open_time = LatticeSpec::periodic(&[8, 4], 1.0);
        open_time.periodic[0] = false;
        assert!(build_lattice(&open_time).is_err());
    }

    #[test]
    fn open_spatial_axis_drops_boundary_links() {
        let mut spec = LatticeSpec::periodic(&[4, 3], 1.0);
        spec.periodic[1] = false;
        let g = build_lattice(&spec).unwrap();
        assert_eq!(g.neighbors(0).count(), 3);
        assert_eq!(g.neighbors(1).count(), 4);
    }

    #[test]
    fn reflection_in_one_dimension() {
        let g = lattice(&[8], 1.0);
        let r = build_reflection(&g);
        let at = |t: i64| g.site_from_time(t, 0);
        assert_eq!(r.image(at(1)), at(-1));
        assert_eq!(r.image(at(3)), at(-3));
        let fixed: Vec<i64> = r.fixed_set().iter().map(|&s| g.time_label(s)).collect();
        assert_eq!(fixed, vec![0, 4]);
    }

    #[test]
    fn reflection_is_an_involutive_isometry() {
        let g = lattice(&[8, 4, 2], 1.0);
        let r = build_reflection(&g);
        for s in 0..g.n_sites() {
            assert_eq!(r.image(r.image(s)), s);
            let mut a: Vec<_> = g.neighbors(s).map(|(ax, n)| (ax, r.image(n))).collect();
            let mut b: Vec<_> = g.neighbors(r.image(s)).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
        let g2 = lattice(&[8, 4], 1.0);
        assert_eq!(build_reflection(&g2).fixed_set().len(), 8);
    }

    #[test]
    fn partition_covers_sites_once() {
        let g = lattice(&[8], 1.0);
        let r = build_reflection(&g);
        let p = partition_regions(&g, &r);
        let plus: Vec<i64> = p.omega_plus.iter().map(|&s| g.time_label(s)).collect();
        let sigma: Vec<i64> = p.sigma.iter().map(|&s| g.time_label(s)).collect();
        assert_eq!(plus, vec![1, 2, 3]);
        assert_eq!(sigma, vec![0, 4]);

        let g = lattice(&[8, 4], 1.0);
        let r = build_reflection(&g);
        let p = partition_regions(&g, &r);
        assert_eq!(p.omega_plus.len(), 12);
        assert_eq!(p.omega_minus.len(), 12);
        let mut all: Vec<_> = p
            .omega_plus
            .iter()
            .chain(&p.sigma)
            .chain(&p.omega_minus)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
        let mut mirrored: Vec<_> = p.omega_plus.iter().map(|&s| r.image(s)).collect();
        mirrored.sort();
        assert_eq!(mirrored, p.omega_minus);
    }

    #[test]
    fn measure_examples() {
        let g = lattice(&[4, 4], 1.0);
        let flat = measure_weights(&g, &StaticMetric::flat(&g)).unwrap();
        assert!(flat.weights().iter().all(|&w| w == 1.0));
        let lapse4 = measure_weights(&g, &StaticMetric::constant_lapse(&g, 4.0)).unwrap();
        assert!(lapse4.weights().iter().all(|&w| w == 2.0));

        let g = lattice(&[8, 6], 0.5);
        let n1 = 6.0;
        let f = |x: &[f64]| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * (x[0] / 0.5) / n1).cos();
        let metric = StaticMetric::from_fn(&g, f, |_, _| 1.0);
        let mu = measure_weights(&g, &metric).unwrap();
        let r = build_reflection(&g);
        for s in 0..g.n_sites() {
            let x1 = g.coords(s)[1] as f64;
            let expected = (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x1 / n1).cos()).sqrt() * 0.25;
            assert!((mu[s] - expected).abs() < 1e-15);
            assert_eq!(mu[s], mu[r.image(s)]);
        }
    }

    #[test]
    fn measure_rejects_nonpositive_metric() {
        let g = lattice(&[4, 4], 1.0);
        let mut m = StaticMetric::flat(&g);
        m.lapse[2] = 0.0;
        assert!(matches!(measure_weights(&g, &m), Err(Error::InvalidMetric(_))));
        let mut m = StaticMetric::flat(&g);
        m.spatial[0][1] = -1.0;
        assert!(measure_weights(&g, &m).is_err());
    }
}
