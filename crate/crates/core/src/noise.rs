// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Colored Gaussian noise on a time grid.
//!
//! A [`NoiseSampler`] draws paths `η` with covariance equal to the discretized
//! noise kernel `M`. Delta kernels are sampled i.i.d. with variance `a/dt`,
//! long stationary grids use circulant embedding, everything else a
//! (floored) Cholesky factor of `M`.

use std::io::{self, Write};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{discretize_kernel, KernelSpec, TimeGrid};
use crate::rng;

/// Eigenvalues below `-NEGATIVE_TOLERANCE · λ_max` are genuine negativity.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;
/// Floor applied to the spectrum before refactorizing, relative to `λ_max`.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Grids at least this long use circulant embedding for stationary kernels.
pub const CIRCULANT_MIN_STEPS: usize = 256;

/// Cholesky factor of a symmetric PSD matrix, floored if necessary.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    lower: DMatrix<f64>,
    floored: bool,
}

impl PsdFactor {
    /// Factor `m`, flooring its spectrum at `1e-12·λ_max` when plain Cholesky
    /// fails. Genuinely indefinite matrices are rejected with their most
    /// negative eigenvalue.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let sym = (m + m.transpose()) * 0.5;
        if let Some(ch) = sym.clone().cholesky() {
            return Ok(Self {
                lower: ch.l(),
                floored: false,
            });
        }
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min < -NEGATIVE_TOLERANCE * max {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        let floor = EIGENVALUE_FLOOR * max;
        let lambda = eig.eigenvalues.map(|l| l.max(floor));
        let q = &eig.eigenvectors;
        let rebuilt = q * DMatrix::from_diagonal(&lambda) * q.transpose();
        let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
        let ch = rebuilt
            .cholesky()
            .ok_or(Error::NotPositiveSemidefinite { min_eigenvalue: min })?;
        Ok(Self {
            lower: ch.l(),
            floored: true,
        })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn was_floored(&self) -> bool {
        self.floored
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `M⁻¹ b` by two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let z = self.forward(b);
        let x = self
            .lower
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        x.iter().copied().collect()
    }

    fn forward(&self, b: &[f64]) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(&DVector::from_column_slice(b))
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `bᵀ M⁻¹ b`.
    pub fn quadratic_form(&self, b: &[f64]) -> f64 {
        self.forward(b).norm_squared()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Sampled noise values `η_k`, one per step of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl NoisePath {
    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_steps()],
        }
    }

    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "noise path has {} values for {} steps",
                values.len(),
                grid.n_steps()
            )));
        }
        Ok(Self { grid, values })
    }
}

/// Which factorization backs a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerBackend {
    #[default]
    Auto,
    Dense,
    Circulant,
}

enum Backend {
    Zero,
    White { std: f64 },
    Dense(PsdFactor),
    Circulant(Circulant),
}

struct Circulant {
    fft: Arc<dyn Fft<f64>>,
    /// `sqrt(λ_k / m)` for the embedding eigenvalues.
    scale: Vec<f64>,
    /// Dense factor for diagnostics, built on first use.
    dense: OnceLock<Result<PsdFactor>>,
}

impl Circulant {
    /// Embed the Toeplitz matrix with first row `c` into a circulant of size
    /// `2(n−1)`. Returns `None` if the embedding is not PSD.
    fn new(first_row: &[f64]) -> Option<Self> {
        let n = first_row.len();
        let m = 2 * (n - 1);
        let mut buf: Vec<Complex<f64>> = first_row
            .iter()
            .chain(first_row[1..n - 1].iter().rev())
            .map(|&c| Complex::new(c, 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut buf);
        let max = buf.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        if buf.iter().any(|z| z.re < -NEGATIVE_TOLERANCE * max) {
            return None;
        }
        Some(Self {
            fft,
            scale: buf.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect(),
            dense: OnceLock::new(),
        })
    }
}

/// Draws noise paths with covariance equal to the discretized kernel.
pub struct NoiseSampler {
    grid: TimeGrid,
    kernel: KernelSpec,
    seed: u64,
    backend: Backend,
}

impl std::fmt::Debug for NoiseSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSampler")
            .field("grid", &self.grid)
            .field("kernel", &self.kernel)
            .field("seed", &self.seed)
            .field("backend", &self.backend_name())
            .finish()
    }
}

pub fn build_sampler(kernel: &KernelSpec, grid: &TimeGrid, seed: u64) -> Result<NoiseSampler> {
    build_sampler_with(kernel, grid, seed, SamplerBackend::Auto)
}

pub fn build_sampler_with(
    kernel: &KernelSpec,
    grid: &TimeGrid,
    seed: u64,
    choice: SamplerBackend,
) -> Result<NoiseSampler> {
    kernel.validate()?;
    if !kernel.is_symmetric() {
        return Err(Error::Kernel("noise kernel must be symmetric".into()));
    }
    let backend = match kernel {
        _ if kernel.is_zero() => Backend::Zero,
        KernelSpec::Delta { amplitude } => {
            if *amplitude < 0.0 {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: amplitude / grid.dt(),
                });
            }
            Backend::White {
                std: (amplitude / grid.dt()).sqrt(),
            }
        }
        _ => {
            let n = grid.n_steps();
            let circulant = match choice {
                SamplerBackend::Dense => None,
                SamplerBackend::Auto if n < CIRCULANT_MIN_STEPS => None,
                _ if !kernel.is_stationary() || n < 2 => {
                    if choice == SamplerBackend::Circulant {
                        return Err(Error::Kernel(
                            "circulant embedding needs a stationary kernel and at least two steps".into(),
                        ));
                    }
                    None
                }
                _ => {
                    let row: Vec<f64> = (0..n)
                        .map(|k| kernel.value(0.0, k as f64 * grid.dt()))
                        .collect::<Result<_>>()?;
                    let c = Circulant::new(&row);
                    if c.is_none() && choice == SamplerBackend::Circulant {
                        return Err(Error::Kernel("circulant embedding is not positive semidefinite".into()));
                    }
                    c
                }
            };
            match circulant {
                Some(c) => Backend::Circulant(c),
                None => Backend::Dense(PsdFactor::new(&discretize_kernel(kernel, grid)?.matrix)?),
            }
        }
    };
    Ok(NoiseSampler {
        grid: *grid,
        kernel: kernel.clone(),
        seed,
        backend,
    })
}

impl NoiseSampler {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backend_name(&self) -> &'static str {
        match self.backend {
            Backend::Zero => "zero",
            Backend::White { .. } => "white",
            Backend::Dense(_) => "dense",
            Backend::Circulant(_) => "circulant",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.backend, Backend::Zero)
    }

    /// Per-step standard deviation for white noise.
    pub fn white_std(&self) -> Option<f64> {
        match self.backend {
            Backend::White { std } => Some(std),
            _ => None,
        }
    }

    /// Lower-triangular factor of the discretized kernel (dense backend only).
    pub fn factor(&self) -> Option<&PsdFactor> {
        match &self.backend {
            Backend::Dense(f) => Some(f),
            _ => None,
        }
    }

    /// Deterministic draw keyed by `(seed, draw_index)`.
    pub fn sample(&self, draw_index: u64) -> NoisePath {
        let n = self.grid.n_steps();
        let mut rng = rng::stream(self.seed, rng::domain::NOISE, draw_index);
        let values = match &self.backend {
            Backend::Zero => vec![0.0; n],
            Backend::White { std } => (0..n)
                .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Backend::Dense(f) => {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                (f.lower() * z).iter().copied().collect()
            }
            Backend::Circulant(c) => {
                let mut buf: Vec<Complex<f64>> = c
                    .scale
                    .iter()
                    .map(|s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                c.fft.process(&mut buf);
                buf[..n].iter().map(|z| z.re).collect()
            }
        };
        NoisePath {
            grid: self.grid,
            values,
        }
    }

    fn dense_factor(&self) -> Result<&PsdFactor> {
        match &self.backend {
            Backend::Dense(f) => Ok(f),
            Backend::Circulant(c) => c
                .dense
                .get_or_init(|| PsdFactor::new(&discretize_kernel(&self.kernel, &self.grid)?.matrix))
                .as_ref()
                .map_err(Clone::clone),
            _ => Err(Error::Kernel("no dense factor for delta kernels".into())),
        }
    }

    /// Gaussian exponent `½ ηᵀ M⁻¹ η` of a path. Its mean over draws is `n/2`.
    pub fn quadratic_form(&self, path: &NoisePath) -> Result<f64> {
        if path.values.len() != self.grid.n_steps() {
            return Err(Error::GridMismatch("noise path length differs from sampler grid".into()));
        }
        match &self.backend {
            Backend::Zero => Err(Error::Kernel("zero noise kernel has no inverse".into())),
            Backend::White { std } => Ok(0.5 * path.values.iter().map(|e| (e / std).powi(2)).sum::<f64>()),
            _ => Ok(0.5 * self.dense_factor()?.quadratic_form(&path.values)),
        }
    }

    /// `log det M` of the discretized kernel, a diagnostic for the
    /// normalization prefactor on this grid.
    pub fn log_det(&self) -> Result<f64> {
        match &self.backend {
            Backend::Zero => Ok(f64::NEG_INFINITY),
            Backend::White { std } => Ok(self.grid.n_steps() as f64 * (std * std).ln()),
            _ => Ok(self.dense_factor()?.log_det()),
        }
    }
}

/// Dump noise draws as CSV with columns `draw_index,t,eta`.
pub fn write_noise_csv<W: Write>(mut out: W, draws: &[(u64, NoisePath)]) -> io::Result<()> {
    writeln!(out, "draw_index,t,eta")?;
    for (index, path) in draws {
        for (k, eta) in path.values.iter().enumerate() {
            writeln!(out, "{index},{:.16e},{:.16e}", path.grid.time(k), eta)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_kernel() -> KernelSpec {
        KernelSpec::Exponential {
            amplitude: 1.0,
            correlation_time: 0.5,
        }
    }

    #[test]
    fn zero_kernel_draws_are_zero() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let s = build_sampler(&KernelSpec::Delta { amplitude: 0.0 }, &g, 1).unwrap();
        for i in 0..5 {
            assert!(s.sample(i).values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn draws_are_deterministic_per_index() {
        let g = TimeGrid::new(2.0, 40).unwrap();
        for kernel in [KernelSpec::Delta { amplitude: 2.0 }, exp_kernel()] {
            let s = build_sampler(&kernel, &g, 99).unwrap();
            assert_eq!(s.sample(3), s.sample(3));
            assert_ne!(s.sample(3), s.sample(4));
            let other = build_sampler(&kernel, &g, 100).unwrap();
            assert_ne!(s.sample(3), other.sample(3));
        }
    }

    #[test]
    fn white_noise_variance_is_amplitude_over_dt() {
        let g = TimeGrid::new(0.1, 10).unwrap();
        let s = build_sampler(&KernelSpec::Delta { amplitude: 2.0 }, &g, 5).unwrap();
        let draws = 10_000;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for i in 0..draws {
            let v = s.sample(i).values[4];
            sum2 += v * v;
            sum4 += v.powi(4);
        }
        let n = draws as f64;
        let mean2 = sum2 / n;
        let se = ((sum4 / n - mean2 * mean2) / n).sqrt();
        assert!((mean2 - 200.0).abs() < 5.0 * se, "var {mean2} se {se}");
    }

    #[test]
    fn dense_factor_reconstructs_kernel() {
        let g = TimeGrid::new(5.0, 100).unwrap();
        let m = discretize_kernel(&exp_kernel(), &g).unwrap().matrix;
        let s = build_sampler(&exp_kernel(), &g, 0).unwrap();
        assert_eq!(s.backend_name(), "dense");
        let l = s.factor().unwrap().lower();
        let rel = (l * l.transpose() - &m).norm() / m.norm();
        assert!(rel < 1e-10, "relative error {rel}");
    }

    #[test]
    fn flooring_rescues_rank_deficient_kernels() {
        // Rank-one kernel K(t,s) = 1: PSD only up to rounding.
        let m = DMatrix::from_element(20, 20, 1.0);
        let f = PsdFactor::new(&m).unwrap();
        assert!(f.was_floored());
        let l = f.lower();
        let rel = (l * l.transpose() - &m).norm() / m.norm();
        assert!(rel < 1e-10, "relative error {rel}");
    }

    #[test]
    fn indefinite_kernel_reports_negative_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match PsdFactor::new(&m) {
            Err(Error::NotPositiveSemidefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("expected PSD error, got {other:?}"),
        }
        use crate::model::TabulatedKernel;
        let tab = TabulatedKernel::from_fn(0.0, 0.1, 11, true, |t, s| if t == s { 0.0 } else { 1.0 });
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert!(matches!(
            build_sampler(&KernelSpec::Tabulated(tab), &g, 0),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn circulant_and_dense_share_covariance() {
        let g = TimeGrid::new(25.6, 512).unwrap();
        let circ = build_sampler(&exp_kernel(), &g, 11).unwrap();
        assert_eq!(circ.backend_name(), "circulant");
        let draws = 4000u64;
        // Lag-0 and lag-0.5 covariance at a fixed interior time.
        let (i, j) = (200, 210);
        let (mut c00, mut c01) = (0.0, 0.0);
        for d in 0..draws {
            let p = circ.sample(d);
            c00 += p.values[i] * p.values[i];
            c01 += p.values[i] * p.values[j];
        }
        let n = draws as f64;
        let (c00, c01) = (c00 / n, c01 / n);
        let m = discretize_kernel(&exp_kernel(), &g).unwrap().matrix;
        let se = |k: f64| ((m[(i, i)] * m[(j, j)] + k * k) / n).sqrt();
        assert!((c00 - m[(i, i)]).abs() < 5.0 * se(m[(i, i)]) * 2f64.sqrt());
        assert!((c01 - m[(i, j)]).abs() < 5.0 * se(m[(i, j)]));
        // Quadratic form falls back to the dense factor.
        let q = circ.quadratic_form(&circ.sample(0)).unwrap();
        assert!(q > 0.0);
    }

    #[test]
    fn csv_dump_has_one_row_per_value() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let s = build_sampler(&KernelSpec::Delta { amplitude: 1.0 }, &g, 0).unwrap();
        let mut buf = Vec::new();
        write_noise_csv(&mut buf, &[(0, s.sample(0)), (1, s.sample(1))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("draw_index,t,eta\n0,0.0000000000000000e0,"));
    }
}
