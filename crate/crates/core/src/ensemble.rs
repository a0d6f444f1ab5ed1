//! Weighted particle clouds on `T^d x R^d`, density deposition and moments.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{TorusPoint, Vector, Velocity};
use crate::sum::pairwise_sum_by;

/// Tolerance on the total weight of an ensemble.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseParticle<const D: usize> {
    pub position: TorusPoint<D>,
    pub velocity: Velocity<D>,
    pub weight: f64,
}

/// Empirical probability measure on phase space.
///
/// Immutable once built: weights are positive, sum to one and every velocity
/// is finite. Only `D = 2` and `D = 3` are accepted.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseEnsemble<const D: usize> {
    particles: Vec<PhaseParticle<D>>,
}

impl<const D: usize> PhaseEnsemble<D> {
    pub fn new(particles: Vec<PhaseParticle<D>>) -> Result<Self> {
        if D != 2 && D != 3 {
            return Err(Error::Domain(format!(
                "phase space dimension must be 2 or 3, got {D}"
            )));
        }
        if particles.is_empty() {
            return Err(Error::Domain("ensemble needs at least one particle".into()));
        }
        for (i, p) in particles.iter().enumerate() {
            if !(p.weight > 0.0) || !p.weight.is_finite() {
                return Err(Error::Domain(format!(
                    "particle {i} has non-positive weight {}",
                    p.weight
                )));
            }
            if p.velocity.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain(format!(
                    "particle {i} has a non-finite velocity"
                )));
            }
        }
        let total = pairwise_sum_by(particles.len(), |i| particles[i].weight);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { particles })
    }

    /// Builds an ensemble, rescaling the weights to unit total mass.
    pub fn normalized(mut particles: Vec<PhaseParticle<D>>) -> Result<Self> {
        let total = pairwise_sum_by(particles.len(), |i| particles[i].weight);
        if !(total > 0.0) {
            return Err(Error::Domain("total weight must be positive".into()));
        }
        for p in &mut particles {
            p.weight /= total;
        }
        Self::new(particles)
    }

    /// Equal weights `1/N`.
    pub fn equal_weight(states: Vec<(TorusPoint<D>, Velocity<D>)>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(
            states
                .into_iter()
                .map(|(position, velocity)| PhaseParticle {
                    position,
                    velocity,
                    weight: w,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[PhaseParticle<D>] {
        &self.particles
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.particles[i].weight
    }

    pub fn has_uniform_weights(&self) -> bool {
        let w0 = self.particles[0].weight;
        self.particles.iter().all(|p| p.weight == w0)
    }

    /// Same weights, new states. Used by the integrators, which only move
    /// particles and never touch the weights.
    pub fn with_states<F>(&self, f: F) -> Self
    where
        F: Fn(usize, &PhaseParticle<D>) -> (TorusPoint<D>, Velocity<D>),
    {
        let particles = self
            .particles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (position, velocity) = f(i, p);
                PhaseParticle {
                    position,
                    velocity,
                    weight: p.weight,
                }
            })
            .collect();
        Self { particles }
    }

    /// Rigid shift of every particle in positions and velocities.
    pub fn shifted(&self, dx: &Vector<D>, dv: &Vector<D>) -> Self {
        self.with_states(|_, p| (p.position.translate(dx), p.velocity + dv))
    }

    /// Writes `x1..xd,v1..vd,w`, one particle per row, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=D).map(|k| format!("x{k}")).collect();
        header.extend((1..=D).map(|k| format!("v{k}")));
        header.push("w".into());
        w.write_record(&header)?;
        for p in &self.particles {
            let mut row: Vec<String> = p.position.coords().iter().map(|c| fmt17(*c)).collect();
            row.extend(p.velocity.iter().map(|c| fmt17(*c)));
            row.push(fmt17(p.weight));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let cols = r.headers()?.len();
        if cols != 2 * D + 1 {
            return Err(Error::Parse(format!(
                "expected {} columns for d={D}, found {cols}",
                2 * D + 1
            )));
        }
        let mut particles = Vec::new();
        for record in r.records() {
            let record = record?;
            let vals: Vec<f64> = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            particles.push(PhaseParticle {
                position: TorusPoint::wrap(Vector::from_fn(|i, _| vals[i]))?,
                velocity: Vector::from_fn(|i, _| vals[D + i]),
                weight: vals[2 * D],
            });
        }
        Self::new(particles)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Phase-space dimension recorded in an ensemble CSV header.
pub fn csv_dimension(path: &Path) -> Result<usize> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    if cols < 3 || (cols - 1) % 2 != 0 {
        return Err(Error::Parse(format!(
            "{} columns cannot describe an ensemble",
            cols
        )));
    }
    Ok((cols - 1) / 2)
}

/// Decimal text with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Named families of initial data.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Uniform positions, zero velocities.
    UniformCold,
    /// Uniform positions, centered Gaussian velocities with standard deviation `sigma` per component.
    Maxwellian { sigma: f64 },
    /// Position density `1 + alpha cos(2 pi x1)`, Gaussian velocities.
    Landau { sigma: f64, alpha: f64 },
}

impl InitialCondition {
    /// Resolves a family by name. Parameters not used by the family are ignored.
    pub fn from_name(name: &str, sigma: f64, alpha: f64) -> Result<Self> {
        match name {
            "uniform_cold" | "uniform-x-zero-v" => Ok(Self::UniformCold),
            "maxwellian" => {
                if !(sigma > 0.0) {
                    return Err(Error::Config(format!(
                        "maxwellian needs sigma > 0, got {sigma}"
                    )));
                }
                Ok(Self::Maxwellian { sigma })
            }
            "landau" => {
                if !(sigma > 0.0) || !(0.0..1.0).contains(&alpha.abs()) {
                    return Err(Error::Config(
                        "landau needs sigma > 0 and |alpha| < 1".into(),
                    ));
                }
                Ok(Self::Landau { sigma, alpha })
            }
            other => Err(Error::Config(format!(
                "unknown initial-condition family {other:?}"
            ))),
        }
    }
}

/// Draws `n` equal-weight particles. Deterministic in `(init, n, seed)`.
pub fn sample_ensemble<const D: usize>(
    init: &InitialCondition,
    n: usize,
    seed: u64,
) -> Result<PhaseEnsemble<D>> {
    if n == 0 {
        return Err(Error::Domain("particle count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let state = match init {
            InitialCondition::UniformCold => (uniform_point(&mut rng), Vector::zeros()),
            InitialCondition::Maxwellian { sigma } => {
                let x = uniform_point(&mut rng);
                (x, gaussian_velocity(&mut rng, *sigma))
            }
            InitialCondition::Landau { sigma, alpha } => {
                let mut x = *uniform_point::<D, _>(&mut rng).coords();
                // rejection on the first coordinate
                loop {
                    let x1: f64 = rng.random();
                    let u: f64 = rng.random();
                    if u * (1.0 + alpha.abs())
                        <= 1.0 + alpha * (2.0 * std::f64::consts::PI * x1).cos()
                    {
                        x[0] = x1;
                        break;
                    }
                }
                (
                    TorusPoint::wrap_finite(x),
                    gaussian_velocity(&mut rng, *sigma),
                )
            }
        };
        states.push(state);
    }
    PhaseEnsemble::equal_weight(states)
}

fn uniform_point<const D: usize, R: Rng>(rng: &mut R) -> TorusPoint<D> {
    TorusPoint::wrap_finite(Vector::from_fn(|_, _| rng.random::<f64>()))
}

fn gaussian_velocity<const D: usize, R: Rng>(rng: &mut R, sigma: f64) -> Velocity<D> {
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    Vector::from_fn(|_, _| normal.sample(rng))
}

/// Density sampled on the nodes of a uniform `n^d` grid over the unit torus.
///
/// Values are densities (mass per unit volume), so a uniform measure gives 1
/// everywhere. Storage is row-major with the first coordinate slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || !(1..=3).contains(&d) || values.len() != n.pow(d as u32) {
            return Err(Error::Domain(format!(
                "grid of {} values does not fit n={n}, d={d}",
                values.len()
            )));
        }
        Ok(Self { n, d, values })
    }

    /// Samples `f` at the grid nodes `i / n`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(n: usize, d: usize, f: F) -> Result<Self> {
        let len = n.pow(d as u32);
        let mut x = vec![0.0; d];
        let values = (0..len)
            .map(|flat| {
                let idx = unflatten(flat, n, d);
                for k in 0..d {
                    x[k] = idx[k] as f64 / n as f64;
                }
                f(&x)
            })
            .collect();
        Self::new(n, d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        (self.n as f64).powi(-(self.d as i32))
    }

    /// Integral over the torus (node values times cell volume).
    pub fn total_mass(&self) -> f64 {
        crate::sum::pairwise_sum(&self.values) * self.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row-major export: a `# n=..,d=..` line, then `i1,..,id,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# n={},d={}", self.n, self.d)?;
        let mut header: Vec<String> = (1..=self.d).map(|k| format!("i{k}")).collect();
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (flat, v) in self.values.iter().enumerate() {
            let idx = unflatten(flat, self.n, self.d);
            let cells: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{},{}", cells.join(","), fmt17(*v))?;
        }
        Ok(())
    }
}

pub(crate) fn unflatten(mut flat: usize, n: usize, d: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for k in (0..d).rev() {
        idx[k] = flat % n;
        flat /= n;
    }
    idx
}

pub(crate) fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Cloud-in-cell (multilinear) weights of a torus point on an `n`-grid:
/// the `2^D` surrounding nodes and their weights.
pub(crate) fn cic_stencil<const D: usize>(
    x: &TorusPoint<D>,
    n: usize,
) -> impl Iterator<Item = (usize, f64)> {
    let mut base = [0usize; D];
    let mut frac = [0.0f64; D];
    for k in 0..D {
        let s = x.coords()[k] * n as f64;
        let mut i = s.floor() as usize;
        let mut f = s - s.floor();
        if i >= n {
            i = n - 1;
            f = 1.0;
        }
        base[k] = i;
        frac[k] = f;
    }
    (0..(1usize << D)).map(move |corner| {
        let mut w = 1.0;
        let mut idx = [0usize; D];
        for k in 0..D {
            if corner >> k & 1 == 1 {
                w *= frac[k];
                idx[k] = (base[k] + 1) % n;
            } else {
                w *= 1.0 - frac[k];
                idx[k] = base[k];
            }
        }
        (flatten(&idx, n), w)
    })
}

/// Cloud-in-cell deposition with periodic wrapping. The grid integrates to 1.
pub fn deposit_density<const D: usize>(ens: &PhaseEnsemble<D>, n: usize) -> Result<DensityGrid> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "grid resolution must be at least 2, got {n}"
        )));
    }
    let scale = (n as f64).powi(D as i32);
    let mut values = vec![0.0; n.pow(D as u32)];
    for p in ens.particles() {
        for (node, w) in cic_stencil(&p.position, n) {
            values[node] += p.weight * w * scale;
        }
    }
    DensityGrid::new(n, D, values)
}

/// `L^p` norm of a grid density; `p = f64::INFINITY` gives the maximum.
pub fn lp_norm(g: &DensityGrid, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(g.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let s = pairwise_sum_by(g.values.len(), |i| g.values[i].abs().powf(p));
    Ok((s * g.cell_volume()).powf(1.0 / p))
}

/// `sum_i w_i |v_i|^k`.
pub fn velocity_moment<const D: usize>(ens: &PhaseEnsemble<D>, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    let ps = ens.particles();
    Ok(pairwise_sum_by(ps.len(), |i| {
        ps[i].weight * ps[i].velocity.norm().powi(k as i32)
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentVerdict {
    pub passed: bool,
    /// Smallest `k` with `int |v|^k df > (C0 k)^k`.
    pub first_failure: Option<u32>,
    pub moments: Vec<f64>,
}

/// Checks the exponential velocity-moment condition `int |v|^k df <= (C0 k)^k` for `k = 1..=k_max`.
pub fn moment_condition_check<const D: usize>(
    ens: &PhaseEnsemble<D>,
    c0: f64,
    k_max: u32,
) -> Result<MomentVerdict> {
    if !(c0 > 0.0) || k_max == 0 {
        return Err(Error::Domain(
            "moment check needs C0 > 0 and k_max >= 1".into(),
        ));
    }
    let mut moments = Vec::with_capacity(k_max as usize);
    let mut first_failure = None;
    for k in 1..=k_max {
        let m = velocity_moment(ens, k)?;
        if first_failure.is_none() && m > (c0 * k as f64).powi(k as i32) {
            first_failure = Some(k);
        }
        moments.push(m);
    }
    Ok(MomentVerdict {
        passed: first_failure.is_none(),
        first_failure,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single<const D: usize>(x: [f64; D], v: [f64; D]) -> PhaseEnsemble<D> {
        PhaseEnsemble::equal_weight(vec![(TorusPoint::from_array(x).unwrap(), Vector::from(v))])
            .unwrap()
    }

    #[test]
    fn construction_enforces_probability_measure() {
        let p = PhaseParticle {
            position: TorusPoint::<2>::origin(),
            velocity: Vector::zeros(),
            weight: 0.5,
        };
        assert!(PhaseEnsemble::new(vec![p]).is_err());
        assert!(PhaseEnsemble::new(vec![p, p]).is_ok());
        let bad = PhaseParticle { weight: -0.5, ..p };
        assert!(PhaseEnsemble::new(vec![bad, p, p, p]).is_err());
        let nan = PhaseParticle {
            velocity: Vector::<2>::new(f64::NAN, 0.0),
            ..p
        };
        assert!(PhaseEnsemble::new(vec![nan, p]).is_err());
        let e = PhaseEnsemble::normalized(vec![p, p, p]).unwrap();
        assert!((e.weight(0) - 1.0 / 3.0).abs() < 1e-16);
        let p4 = PhaseParticle {
            position: TorusPoint::<4>::origin(),
            velocity: Vector::zeros(),
            weight: 1.0,
        };
        assert!(PhaseEnsemble::new(vec![p4]).is_err());
    }

    #[test]
    fn uniform_cold_sample() {
        let e = sample_ensemble::<2>(&InitialCondition::UniformCold, 4, 0).unwrap();
        assert_eq!(e.len(), 4);
        for p in e.particles() {
            assert_eq!(p.velocity, Vector::<2>::zeros());
            assert_eq!(p.weight, 0.25);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let init = InitialCondition::Maxwellian { sigma: 1.0 };
        let a = sample_ensemble::<3>(&init, 100, 9).unwrap();
        let b = sample_ensemble::<3>(&init, 100, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_ensemble::<3>(&init, 100, 10).unwrap());
    }

    #[test]
    fn unknown_family_is_config_error() {
        assert!(matches!(
            InitialCondition::from_name("plasma-soup", 1.0, 0.0),
            Err(Error::Config(_))
        ));
        assert!(sample_ensemble::<2>(&InitialCondition::UniformCold, 0, 0).is_err());
    }

    #[test]
    fn maxwellian_second_moment() {
        // E|v|^2 = d sigma^2, Monte-Carlo standard error sqrt(2d/N)
        let e =
            sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 10_000, 1).unwrap();
        let m2 = velocity_moment(&e, 2).unwrap();
        assert!((m2 - 2.0).abs() < 0.05 * 2.0, "m2 = {m2}");
        let e =
            sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 100_000, 5).unwrap();
        assert!((velocity_moment(&e, 2).unwrap() - 2.0).abs() < 0.1);
    }

    #[test]
    fn landau_density_has_the_requested_mode() {
        let e = sample_ensemble::<2>(
            &InitialCondition::Landau {
                sigma: 1.0,
                alpha: 0.5,
            },
            200_000,
            3,
        )
        .unwrap();
        // E[cos(2 pi x1)] = alpha / 2
        let c = pairwise_sum_by(e.len(), |i| {
            e.weight(i) * (2.0 * std::f64::consts::PI * e.particles()[i].position.coords()[0]).cos()
        });
        assert!((c - 0.25).abs() < 0.01, "{c}");
    }

    #[test]
    fn deposit_node_and_center() {
        let g = deposit_density(&single([0.25, 0.5], [0.0, 0.0]), 4).unwrap();
        let node = flatten(&[1, 2], 4);
        assert!((g.values()[node] - 16.0).abs() < 1e-12);
        assert!((g.values().iter().sum::<f64>() - 16.0).abs() < 1e-12);

        // cell center of cell (0,0) on n=4
        let g = deposit_density(&single([0.125, 0.125], [0.0, 0.0]), 4).unwrap();
        for idx in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!((g.values()[flatten(&idx, 4)] - 4.0).abs() < 1e-12);
        }
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deposit_rejects_tiny_grid() {
        assert!(deposit_density(&single([0.1, 0.1], [0.0, 0.0]), 1).is_err());
    }

    #[test]
    fn uniform_deposit_concentrates() {
        // Binomial oracle for CIC in 2D: each node collects ~N/n^2 particles from
        // its 4 neighbouring cells with hat weights, so the relative standard
        // deviation is sqrt(E[w^2] / (4 N/n^2)) / E[w] with E[w] = 1/4, E[w^2] = 1/9.
        let n = 32;
        let count = 1_000_000;
        let e = sample_ensemble::<2>(&InitialCondition::UniformCold, count, 11).unwrap();
        let g = deposit_density(&e, n).unwrap();
        let m = 4.0 * count as f64 / (n * n) as f64;
        let sigma = (m / 9.0).sqrt() / (m / 4.0);
        let worst = g
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!((g.total_mass() - 1.0).abs() < 1e-10);
        assert!(worst < 5.0 * sigma, "worst {worst}, sigma {sigma}");
        // the same check at n = 16 stays under 5%
        let g16 = deposit_density(&e, 16).unwrap();
        let worst16 = g16
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst16 < 0.05, "{worst16}");
    }

    #[test]
    fn lp_norm_examples() {
        let ones = DensityGrid::from_fn(8, 2, |_| 1.0).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&ones, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let half = DensityGrid::from_fn(8, 2, |x| if x[0] < 0.5 { 2.0 } else { 0.0 }).unwrap();
        assert!((lp_norm(&half, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let tau = 2.0 * std::f64::consts::PI;
        let g = DensityGrid::from_fn(64, 2, |x| 1.0 + (tau * x[0]).cos()).unwrap();
        assert!((lp_norm(&g, 2.0).unwrap() - 1.5f64.sqrt()).abs() < 1e-6);
        assert!(matches!(lp_norm(&g, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn moment_examples() {
        let cold = sample_ensemble::<2>(&InitialCondition::UniformCold, 10, 0).unwrap();
        for k in 1..5 {
            assert_eq!(velocity_moment(&cold, k).unwrap(), 0.0);
        }
        let two = PhaseEnsemble::equal_weight(vec![
            (TorusPoint::origin(), Vector::<2>::new(1.0, 0.0)),
            (TorusPoint::origin(), Vector::<2>::new(0.0, 3.0)),
        ])
        .unwrap();
        assert_eq!(velocity_moment(&two, 2).unwrap(), 5.0);
        assert!(velocity_moment(&two, 0).is_err());
    }

    #[test]
    fn moment_condition_examples() {
        let cold = sample_ensemble::<3>(&InitialCondition::UniformCold, 10, 0).unwrap();
        assert!(moment_condition_check(&cold, 0.1, 6).unwrap().passed);
        let fast = single([0.0, 0.0], [10.0, 0.0]);
        let v = moment_condition_check(&fast, 1.0, 5).unwrap();
        assert!(!v.passed);
        assert_eq!(v.first_failure, Some(1));
    }

    // E|v|^k for a standard Gaussian in d dimensions:
    // m_0 = 1, m_1 = sqrt(2) Gamma((d+1)/2) / Gamma(d/2), m_k = (d + k - 2) m_{k-2}.
    fn gaussian_moments(d: usize, kmax: usize) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        let m1 = match d {
            2 => (pi / 2.0).sqrt(),
            3 => 2.0 * 2f64.sqrt() / pi.sqrt(),
            _ => unreachable!(),
        };
        let mut m = vec![1.0, m1];
        for k in 2..=kmax {
            m.push((d + k - 2) as f64 * m[k - 2]);
        }
        m
    }

    #[test]
    fn maxwellian_passes_moment_condition() {
        let e =
            sample_ensemble::<2>(&InitialCondition::Maxwellian { sigma: 1.0 }, 100_000, 2).unwrap();
        let v = moment_condition_check(&e, 2.0, 8).unwrap();
        assert!(v.passed);
        let exact = gaussian_moments(2, 8);
        for k in 1..=8usize {
            assert!(exact[k] <= (2.0 * k as f64).powi(k as i32));
            // high moments are noisy; 10% at k = 8 is several standard errors
            assert!((v.moments[k - 1] / exact[k] - 1.0).abs() < 0.1, "k={k}");
        }
        let e3 =
            sample_ensemble::<3>(&InitialCondition::Maxwellian { sigma: 1.0 }, 100_000, 2).unwrap();
        let m3 = gaussian_moments(3, 4);
        assert!((velocity_moment(&e3, 2).unwrap() / m3[2] - 1.0).abs() < 0.02);
        assert!((velocity_moment(&e3, 1).unwrap() / m3[1] - 1.0).abs() < 0.02);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let e = sample_ensemble::<3>(&InitialCondition::Maxwellian { sigma: 0.7 }, 17, 4).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3,v1,v2,v3,w\n"));
        let back = PhaseEnsemble::<3>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, e);
        assert!(PhaseEnsemble::<2>::read_csv(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn deposit_conserves_mass(pts in proptest::collection::vec(proptest::array::uniform3(0.0..1.0f64), 1..40), n in 2usize..9) {
            let states = pts.iter().map(|p| (TorusPoint::from_array(*p).unwrap(), Vector::<3>::zeros())).collect();
            let e = PhaseEnsemble::equal_weight(states).unwrap();
            let g = deposit_density(&e, n).unwrap();
            prop_assert!((g.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!(g.values().iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn deposit_is_shift_equivariant(pts in proptest::collection::vec(proptest::array::uniform2(0.0..1.0f64), 1..20), s1 in 0usize..8, s2 in 0usize..8) {
            let n = 8;
            let states: Vec<_> = pts.iter().map(|p| (TorusPoint::from_array(*p).unwrap(), Vector::<2>::zeros())).collect();
            let e = PhaseEnsemble::equal_weight(states).unwrap();
            let shift = Vector::<2>::new(s1 as f64 / n as f64, s2 as f64 / n as f64);
            let g = deposit_density(&e, n).unwrap();
            let gs = deposit_density(&e.shifted(&shift, &Vector::zeros()), n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let a = g.values()[flatten(&[i, j], n)];
                    let b = gs.values()[flatten(&[(i + s1) % n, (j + s2) % n], n)];
                    prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
                }
            }
        }

        #[test]
        fn moments_are_log_convex(speeds in proptest::collection::vec(0.0..4.0f64, 1..30)) {
            let states: Vec<_> = speeds.iter().map(|s| (TorusPoint::origin(), Vector::<2>::new(*s, 0.0))).collect();
            let e = PhaseEnsemble::equal_weight(states).unwrap();
            for k in 2..8u32 {
                let (a, b, c) = (velocity_moment(&e, k - 1).unwrap(), velocity_moment(&e, k).unwrap(), velocity_moment(&e, k + 1).unwrap());
                prop_assert!(b * b <= a * c * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn moments_monotone_for_fast_particles(speeds in proptest::collection::vec(1.0..4.0f64, 1..30)) {
            let states: Vec<_> = speeds.iter().map(|s| (TorusPoint::origin(), Vector::<2>::new(0.0, *s))).collect();
            let e = PhaseEnsemble::equal_weight(states).unwrap();
            for k in 1..8u32 {
                prop_assert!(velocity_moment(&e, k).unwrap() <= velocity_moment(&e, k + 1).unwrap() * (1.0 + 1e-14));
            }
        }
    }
}
