//! Log-normal permeability fields from spectrally synthesized Gaussian noise
//! with a power-law spectrum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSpec {
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
    /// Target arithmetic mean (mD).
    pub mean_perm: f64,
    /// Coefficient of variation, std / mean.
    pub cv: f64,
    /// Exponent β of the Gaussian power spectrum `|k|^-β`.
    pub spectral_exponent: f64,
}

impl FieldSpec {
    pub const DEFAULT_SPECTRAL_EXPONENT: f64 = 1.5;

    pub fn new(nx: usize, ny: usize, seed: u64, mean_perm: f64, cv: f64) -> Self {
        Self {
            nx,
            ny,
            seed,
            mean_perm,
            cv,
            spectral_exponent: Self::DEFAULT_SPECTRAL_EXPONENT,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Config(format!(
                "permeability field needs at least 2x2 cells, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.mean_perm > 0.0 && self.mean_perm.is_finite()) {
            return Err(Error::Config(format!("mean permeability must be positive, got {}", self.mean_perm)));
        }
        if !(self.cv >= 0.0 && self.cv.is_finite()) {
            return Err(Error::Config(format!("coefficient of variation must be >= 0, got {}", self.cv)));
        }
        if !self.spectral_exponent.is_finite() {
            return Err(Error::Config("spectral exponent must be finite".into()));
        }
        Ok(())
    }
}

/// Standard deviation of `ln K` giving a log-normal population with the
/// requested coefficient of variation: `σ² = ln(1 + cv²)`.
pub fn log_std(cv: f64) -> f64 {
    cv.mul_add(cv, 1.0).ln().sqrt()
}

/// Standardized Gaussian field: white complex noise shaped by `|k|^(-β/2)`,
/// inverse transformed, real part taken, then shifted and scaled to zero
/// sample mean and unit sample variance.
pub fn gaussian_field(spec: &FieldSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let freq = |i: usize, n: usize| {
        let i = i as f64;
        let n_f = n as f64;
        if i <= n_f / 2.0 {
            i / n_f
        } else {
            (i - n_f) / n_f
        }
    };
    let mut data = vec![Complex64::new(0.0, 0.0); nx * ny];
    for ky in 0..ny {
        for kx in 0..nx {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let k = freq(kx, nx).hypot(freq(ky, ny));
            let amp = if k > 0.0 { k.powf(-0.5 * spec.spectral_exponent) } else { 0.0 };
            data[ky * nx + kx] = Complex64::new(re * amp, im * amp);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_inverse(nx);
    for row in data.chunks_exact_mut(nx) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_inverse(ny);
    let mut column = vec![Complex64::new(0.0, 0.0); ny];
    for j in 0..nx {
        for k in 0..ny {
            column[k] = data[k * nx + j];
        }
        col_fft.process(&mut column);
        for k in 0..ny {
            data[k * nx + j] = column[k];
        }
    }

    let mut xi: Vec<f64> = data.iter().map(|c| c.re).collect();
    let n = xi.len() as f64;
    let mean = xi.iter().sum::<f64>() / n;
    let var = xi.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in &mut xi {
        *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
    }
    Ok(xi)
}

/// Log-normal permeability `K = mean_perm · e^{σξ} / mean(e^{σξ})` on a grid
/// with unit spacing; use [`generate_on`] to attach a physical grid.
pub fn generate(spec: &FieldSpec) -> Result<CellField> {
    let grid = Grid2D::new(spec.nx, spec.ny, 1.0, 1.0)?;
    generate_on(spec, grid)
}

pub fn generate_on(spec: &FieldSpec, grid: Grid2D) -> Result<CellField> {
    if grid.nx() != spec.nx || grid.ny() != spec.ny {
        return Err(Error::Config(format!(
            "field spec is {}x{} but the grid is {}x{}",
            spec.nx,
            spec.ny,
            grid.nx(),
            grid.ny()
        )));
    }
    spec.validate()?;
    if spec.cv == 0.0 {
        return Ok(CellField::constant(grid, spec.mean_perm));
    }
    let sigma = log_std(spec.cv);
    let mut k: Vec<f64> = gaussian_field(spec)?.into_iter().map(|x| (sigma * x).exp()).collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    for v in &mut k {
        *v = spec.mean_perm * (*v / mean);
    }
    CellField::from_values(grid, k)
}

/// Sample mean and coefficient of variation.
pub fn sample_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt() / mean)
}
