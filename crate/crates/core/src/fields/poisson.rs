//! Spectral solver for `ΔU = 1 - ρ` on the unit torus.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::ensemble::{cic_stencil, fmt17, lp_norm, unflatten, DensityGrid};
use crate::error::{Error, Result};
use crate::geometry::{TorusPoint, Vector};

/// Mass mismatch tolerated before the periodic problem is declared unsolvable.
pub const POISSON_MASS_TOLERANCE: f64 = 1e-8;

/// Potential and electric field on the same node grid as the density.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    n: usize,
    d: usize,
    potential: Vec<f64>,
    efield: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Component `k` of the electric field at every node.
    pub fn efield(&self, k: usize) -> &[f64] {
        &self.efield[k]
    }

    /// `max_nodes |E|`. Multilinear interpolation never exceeds it.
    pub fn efield_sup(&self) -> f64 {
        (0..self.potential.len())
            .map(|i| self.efield.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Cloud-in-cell interpolation of `E` at a torus point, the adjoint of
    /// the deposition stencil.
    pub fn efield_at<const D: usize>(&self, x: &TorusPoint<D>) -> Vector<D> {
        debug_assert_eq!(D, self.d);
        let mut out = Vector::<D>::zeros();
        for (node, w) in cic_stencil(x, self.n) {
            for k in 0..D {
                out[k] += w * self.efield[k][node];
            }
        }
        out
    }

    /// Row-major export: `# n=..,d=..`, then `i1..id,potential,e1..ed`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# n={},d={}", self.n, self.d)?;
        let mut header: Vec<String> = (1..=self.d).map(|k| format!("i{k}")).collect();
        header.push("potential".into());
        header.extend((1..=self.d).map(|k| format!("e{k}")));
        writeln!(out, "{}", header.join(","))?;
        for flat in 0..self.potential.len() {
            let idx = unflatten(flat, self.n, self.d);
            let mut row: Vec<String> = idx[..self.d].iter().map(|i| i.to_string()).collect();
            row.push(fmt17(self.potential[flat]));
            row.extend(self.efield.iter().map(|c| fmt17(c[flat])));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Signed wavenumber of FFT bin `i` on an `n`-point axis.
fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// In-place d-dimensional FFT by successive 1D transforms along each axis.
fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let total = data.len();
        for start in 0..total {
            // start must have a zero index along `axis`
            if (start / stride) % n != 0 {
                continue;
            }
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, value) in line.iter().enumerate() {
                data[start + j * stride] = *value;
            }
        }
    }
    if inverse {
        let scale = 1.0 / total_len(n, d) as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

fn total_len(n: usize, d: usize) -> usize {
    n.pow(d as u32)
}

fn to_spectrum(g: &DensityGrid) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = g.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, g.n(), g.dim(), false);
    data
}

fn mode_of(flat: usize, n: usize, d: usize) -> [i64; 3] {
    let idx = unflatten(flat, n, d);
    let mut k = [0i64; 3];
    for a in 0..d {
        k[a] = wavenumber(idx[a], n);
    }
    k
}

/// Gaussian smoothing `exp(-|2πk|^2 δ^2 / 2)` applied in Fourier space.
/// The zero mode, hence the mass, is untouched.
pub fn mollify(rho: &DensityGrid, delta: f64) -> Result<DensityGrid> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!(
            "mollification radius must be >= 0, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(rho.clone());
    }
    let (n, d) = (rho.n(), rho.dim());
    let mut modes = to_spectrum(rho);
    for (flat, z) in modes.iter_mut().enumerate() {
        let k = mode_of(flat, n, d);
        let k2: f64 = k[..d].iter().map(|&m| (2.0 * PI * m as f64).powi(2)).sum();
        *z *= (-0.5 * k2 * delta * delta).exp();
    }
    fft_nd(&mut modes, n, d, true);
    DensityGrid::new(n, d, modes.iter().map(|z| z.re).collect())
}

/// Zero-mean solution of `ΔU = 1 - ρ` and `E = -∇U`, both computed spectrally.
///
/// The Nyquist mode of the gradient is dropped so that `E` stays real.
pub fn solve_poisson(rho: &DensityGrid) -> Result<FieldSample> {
    let mass = rho.total_mass();
    if (mass - 1.0).abs() > POISSON_MASS_TOLERANCE {
        return Err(Error::Precondition(format!(
            "density integrates to {mass}, expected 1"
        )));
    }
    let (n, d) = (rho.n(), rho.dim());
    let rho_hat = to_spectrum(rho);
    // ΔU = 1 - ρ  =>  -|2πk|^2 Û = -ρ̂ for k != 0
    let mut u_hat = vec![Complex64::new(0.0, 0.0); rho_hat.len()];
    let mut e_hat = vec![vec![Complex64::new(0.0, 0.0); rho_hat.len()]; d];
    for flat in 0..rho_hat.len() {
        let k = mode_of(flat, n, d);
        if k[..d].iter().all(|&m| m == 0) {
            continue;
        }
        let k2: f64 = k[..d].iter().map(|&m| (2.0 * PI * m as f64).powi(2)).sum();
        let u = rho_hat[flat] / k2;
        u_hat[flat] = u;
        for a in 0..d {
            if n % 2 == 0 && k[a].unsigned_abs() as usize == n / 2 {
                continue;
            }
            // E = -∇U  =>  Ê = -i 2πk Û
            e_hat[a][flat] = Complex64::new(0.0, -2.0 * PI * k[a] as f64) * u;
        }
    }
    fft_nd(&mut u_hat, n, d, true);
    let potential = u_hat.iter().map(|z| z.re).collect();
    let efield = e_hat
        .into_iter()
        .map(|mut c| {
            fft_nd(&mut c, n, d, true);
            c.iter().map(|z| z.re).collect()
        })
        .collect();
    Ok(FieldSample {
        n,
        d,
        potential,
        efield,
    })
}

/// Spectral Laplacian of a node field. Used to check the solver.
pub fn spectral_laplacian(values: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, n, d, false);
    for (flat, z) in data.iter_mut().enumerate() {
        let k = mode_of(flat, n, d);
        let k2: f64 = k[..d].iter().map(|&m| (2.0 * PI * m as f64).powi(2)).sum();
        *z *= -k2;
    }
    fft_nd(&mut data, n, d, true);
    data.iter().map(|z| z.re).collect()
}

/// Measured `‖E‖_∞` next to the reference scale `1 + ‖ρ‖_{L^p}`; the ratio
/// estimates the constant of the field bound for this density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfieldBoundReport {
    pub measured_sup: f64,
    pub reference: f64,
    pub p: f64,
}

impl EfieldBoundReport {
    pub fn ratio(&self) -> f64 {
        self.measured_sup / self.reference
    }
}

pub fn efield_bound_report(rho: &DensityGrid, p: f64) -> Result<EfieldBoundReport> {
    if !(p > rho.dim() as f64) {
        return Err(Error::Domain(format!(
            "field bound needs p > d = {}, got {p}",
            rho.dim()
        )));
    }
    let field = solve_poisson(rho)?;
    Ok(EfieldBoundReport {
        measured_sup: field.efield_sup(),
        reference: 1.0 + lp_norm(rho, p)?,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{deposit_density, sample_ensemble, InitialCondition};

    const TAU: f64 = 2.0 * PI;

    fn max_err(a: &[f64], f: impl Fn(usize) -> f64) -> f64 {
        a.iter()
            .enumerate()
            .map(|(i, v)| (v - f(i)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn homogeneous_density_has_no_field() {
        let rho = DensityGrid::from_fn(16, 2, |_| 1.0).unwrap();
        let f = solve_poisson(&rho).unwrap();
        assert!(f.potential().iter().all(|u| u.abs() < 1e-15));
        assert_eq!(f.efield_sup(), 0.0);
    }

    #[test]
    fn manufactured_single_mode() {
        let n = 64;
        let rho = DensityGrid::from_fn(n, 2, |x| 1.0 + (TAU * x[0]).cos()).unwrap();
        let f = solve_poisson(&rho).unwrap();
        let x1 = |i: usize| unflatten(i, n, 2)[0] as f64 / n as f64;
        assert!(max_err(f.potential(), |i| (TAU * x1(i)).cos() / (TAU * TAU)) < 1e-10);
        assert!(max_err(f.efield(0), |i| (TAU * x1(i)).sin() / TAU) < 1e-10);
        assert!(max_err(f.efield(1), |_| 0.0) < 1e-10);
    }

    #[test]
    fn superposition_of_modes() {
        let n = 32;
        let rho =
            DensityGrid::from_fn(n, 2, |x| 1.0 + (TAU * x[0]).cos() + (TAU * x[1]).cos()).unwrap();
        let f = solve_poisson(&rho).unwrap();
        let xs = |i: usize| {
            let idx = unflatten(i, n, 2);
            (idx[0] as f64 / n as f64, idx[1] as f64 / n as f64)
        };
        assert!(
            max_err(f.potential(), |i| {
                let (a, b) = xs(i);
                ((TAU * a).cos() + (TAU * b).cos()) / (TAU * TAU)
            }) < 1e-10
        );
        assert!(max_err(f.efield(1), |i| (TAU * xs(i).1).sin() / TAU) < 1e-10);
    }

    #[test]
    fn three_dimensional_mode() {
        let n = 16;
        let rho = DensityGrid::from_fn(n, 3, |x| 1.0 + 0.5 * (TAU * x[2]).sin()).unwrap();
        let f = solve_poisson(&rho).unwrap();
        let x3 = |i: usize| unflatten(i, n, 3)[2] as f64 / n as f64;
        // ΔU = -0.5 sin  =>  U = 0.5 sin / (2π)^2, E3 = -0.5 cos / (2π)
        assert!(max_err(f.potential(), |i| 0.5 * (TAU * x3(i)).sin() / (TAU * TAU)) < 1e-12);
        assert!(max_err(f.efield(2), |i| -0.5 * (TAU * x3(i)).cos() / TAU) < 1e-12);
    }

    #[test]
    fn rejects_wrong_mass() {
        let rho = DensityGrid::from_fn(8, 2, |_| 1.1).unwrap();
        assert!(matches!(solve_poisson(&rho), Err(Error::Precondition(_))));
    }

    #[test]
    fn laplacian_of_solution_reproduces_source() {
        let e = sample_ensemble::<2>(
            &InitialCondition::Landau {
                sigma: 1.0,
                alpha: 0.3,
            },
            2000,
            1,
        )
        .unwrap();
        let rho = deposit_density(&e, 32).unwrap();
        let f = solve_poisson(&rho).unwrap();
        let mean: f64 = f.potential().iter().sum::<f64>() / f.potential().len() as f64;
        assert!(mean.abs() < 1e-12);
        let lap = spectral_laplacian(f.potential(), 32, 2);
        let rho_mean = rho.values().iter().sum::<f64>() / rho.values().len() as f64;
        for (l, r) in lap.iter().zip(rho.values()) {
            // mode 0 excluded: compare against 1 - (ρ - mean(ρ) + 1)
            assert!((l - (rho_mean - r)).abs() < 1e-10);
        }
    }

    #[test]
    fn efield_bound_examples() {
        let rho = DensityGrid::from_fn(16, 2, |_| 1.0).unwrap();
        let r = efield_bound_report(&rho, 3.0).unwrap();
        assert_eq!(r.measured_sup, 0.0);
        assert!((r.reference - 2.0).abs() < 1e-14);
        assert_eq!(r.ratio(), 0.0);

        let rho = DensityGrid::from_fn(64, 2, |x| 1.0 + (TAU * x[0]).cos()).unwrap();
        let r = efield_bound_report(&rho, 3.0).unwrap();
        assert!((r.measured_sup - 1.0 / TAU).abs() < 1e-10);
        assert!((r.reference - (1.0 + 2.5f64.powf(1.0 / 3.0))).abs() < 1e-10);

        assert!(efield_bound_report(&rho, 2.0).is_err());
    }

    #[test]
    fn sharpening_bumps_keep_a_bounded_ratio() {
        // bumps of growing height at fixed L^p norm: the ratio ‖E‖∞ / (1 + ‖ρ‖_p) stays bounded
        let p = 3.0;
        let n = 128;
        let mut ratios = Vec::new();
        for width in [0.25, 0.125, 0.0625, 0.03125] {
            let bump = |x: &[f64]| {
                let r2: f64 = x.iter().map(|c| (c - 0.5).powi(2)).sum();
                (-r2 / (2.0 * width * width)).exp()
            };
            let raw = DensityGrid::from_fn(n, 2, bump).unwrap();
            let m = raw.total_mass();
            let rho = DensityGrid::new(
                n,
                2,
                raw.values().iter().map(|v| 0.5 + 0.5 * v / m).collect(),
            )
            .unwrap();
            let r = efield_bound_report(&rho, p).unwrap();
            ratios.push(r.ratio());
        }
        let fitted = ratios.iter().copied().fold(0.0, f64::max);
        assert!(fitted.is_finite() && fitted < 1.0, "{ratios:?}");
    }

    #[test]
    fn mollification_preserves_mass_and_damps_modes() {
        let rho = DensityGrid::from_fn(32, 2, |x| 1.0 + 0.5 * (TAU * 3.0 * x[0]).cos()).unwrap();
        let m = mollify(&rho, 0.05).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let expected = 0.5 * (-0.5 * (TAU * 3.0 * 0.05f64).powi(2)).exp();
        assert!((m.max() - 1.0 - expected).abs() < 1e-12);
        assert_eq!(mollify(&rho, 0.0).unwrap(), rho);
    }

    #[test]
    fn interpolation_matches_nodes_and_stays_bounded() {
        let n = 16;
        let rho = DensityGrid::from_fn(n, 2, |x| 1.0 + (TAU * x[0]).cos()).unwrap();
        let f = solve_poisson(&rho).unwrap();
        let at_node = f.efield_at(&TorusPoint::<2>::from_array([0.25, 0.5]).unwrap());
        assert!((at_node[0] - 1.0 / TAU).abs() < 1e-12);
        for k in 0..50 {
            let x = TorusPoint::<2>::from_array([k as f64 * 0.0371, k as f64 * 0.117]).unwrap();
            assert!(f.efield_at(&x).norm() <= f.efield_sup() + 1e-15);
        }
    }
}
