//! Population covariances and observation-matrix generators.
//!
//! The population covariance has `K` distinct spike eigenvalues
//! `α_k + σ²` (multiplicity `m_k`) above an isotropic noise floor `σ²`:
//!
//! ```text
//! Σ = U · diag((α_1+σ²) I_{m_1}, …, (α_K+σ²) I_{m_K}, σ² I_{p−m}) · Uᴴ
//! ```
//!
//! Observations are generated either directly as `X = Σ^{1/2} Y` with `Y`
//! i.i.d. standard complex Gaussian, or through the array model
//! `X = A(θ) P^{1/2} S + σ N` with unit-norm steering columns
//! `a(θ) = p^{−1/2} [exp(−i v sin(θ) π)]_{v=0}^{p−1}`. Since `Aᴴ A → I_m`
//! as `p → ∞`, both models share the same limiting spectrum.
//!
//! All generators are pure functions of `(spec, seed)`: calling twice with
//! the same arguments returns bit-identical matrices.

use faer::{c64, Mat};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::rng;

/// Ground-truth parameter set of the spiked model.
///
/// Invariants are enforced at construction: spike values strictly decreasing
/// and positive, one multiplicity per spike, total spike count `m < p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeSpec {
    alphas: Vec<f64>,
    mults: Vec<usize>,
    sigma2: f64,
    p: usize,
    n: usize,
}

impl SpikeSpec {
    pub fn new(alphas: Vec<f64>, mults: Vec<usize>, sigma2: f64, p: usize, n: usize) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("at least one spike value is required"));
        }
        if alphas.len() != mults.len() {
            return Err(Error::invalid(format!(
                "{} spike values but {} multiplicities",
                alphas.len(),
                mults.len()
            )));
        }
        if alphas.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::invalid("spike values must be positive and finite"));
        }
        if alphas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid("spike values must be strictly decreasing"));
        }
        if mults.iter().any(|&m| m == 0) {
            return Err(Error::invalid("multiplicities must be positive"));
        }
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::invalid("noise power must be nonnegative and finite"));
        }
        let m: usize = mults.iter().sum();
        if p == 0 || n == 0 {
            return Err(Error::invalid("dimensions p and n must be positive"));
        }
        if m >= p {
            return Err(Error::invalid(format!(
                "total spike count m = {m} must be smaller than the dimension p = {p}"
            )));
        }
        Ok(Self { alphas, mults, sigma2, p, n })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct spikes `K`.
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    /// Total number of spiked directions `m = Σ m_k`.
    pub fn total_spikes(&self) -> usize {
        self.mults.iter().sum()
    }

    /// Aspect ratio `γ = p / n`, always derived from the dimensions.
    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// Spike values repeated according to their multiplicities (length `m`).
    pub fn expanded_alphas(&self) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.mults)
            .flat_map(|(&a, &m)| std::iter::repeat(a).take(m))
            .collect()
    }

    /// The population eigenvalue multiset, descending: `α_k + σ²` with
    /// multiplicity `m_k`, then `σ²` with multiplicity `p − m`.
    pub fn population_eigenvalues(&self) -> Vec<f64> {
        let mut evs: Vec<f64> = self.expanded_alphas().iter().map(|a| a + self.sigma2).collect();
        evs.resize(self.p, self.sigma2);
        evs
    }
}

// Deserialization re-runs the constructor so invalid configs are rejected at
// the parse boundary.
impl<'de> Deserialize<'de> for SpikeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            alphas: Vec<f64>,
            mults: Vec<usize>,
            sigma2: f64,
            p: usize,
            n: usize,
        }
        let raw = Raw::deserialize(deserializer)?;
        SpikeSpec::new(raw.alphas, raw.mults, raw.sigma2, raw.p, raw.n).map_err(serde::de::Error::custom)
    }
}

/// A generated `p × n` observation matrix together with its provenance.
#[derive(Clone, Debug)]
pub struct ObservationMatrix {
    pub entries: Mat<c64>,
    pub spec: SpikeSpec,
    pub seed: u64,
}

/// Choice of the unitary conjugation in [`population_covariance`].
///
/// The spectral estimators are rotation invariant, so `Identity` is the
/// default; `Haar` draws a uniformly random unitary for integration tests.
#[derive(Clone, Copy, Debug)]
pub enum Unitary {
    Identity,
    Haar { seed: u64 },
}

/// Whether a spike survives the eigenvalue phase transition:
/// `α > σ² √γ` (strictly; the boundary case is not detectable).
pub fn detectable<F: Scalar>(alpha: F, sigma2: F, gamma: F) -> bool {
    alpha > sigma2 * gamma.sqrt()
}

/// One draw of the standard complex Gaussian: independent real and imaginary
/// parts of variance 1/2, unit total variance.
#[inline]
pub fn standard_complex_gaussian(rng: &mut ChaCha8Rng) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

/// Fill a matrix with i.i.d. standard complex Gaussians, column by column.
fn complex_gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let mut m = Mat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = standard_complex_gaussian(rng);
        }
    }
    m
}

/// The `p × p` Hermitian population covariance `U diag(...) Uᴴ`.
///
/// Its eigenvalue multiset is exactly `{α_k + σ² : m_k}` ∪ `{σ² : p − m}`.
pub fn population_covariance(spec: &SpikeSpec, unitary: Unitary) -> Mat<c64> {
    let evs = spec.population_eigenvalues();
    match unitary {
        Unitary::Identity => {
            let mut cov = Mat::zeros(spec.p, spec.p);
            for (i, &ev) in evs.iter().enumerate() {
                cov[(i, i)] = c64::new(ev, 0.0);
            }
            cov
        }
        Unitary::Haar { seed } => {
            let mut rng = rng::stream(seed, "haar-unitary", 0);
            let u = haar_unitary(spec.p, &mut rng);
            // U · diag(evs) · Uᴴ, scaling columns of U before the product
            let mut scaled = u.clone();
            for j in 0..spec.p {
                for i in 0..spec.p {
                    scaled[(i, j)] *= c64::new(evs[j], 0.0);
                }
            }
            &scaled * u.adjoint()
        }
    }
}

/// Haar-distributed unitary via Gram–Schmidt on a Ginibre matrix.
///
/// Modified Gram–Schmidt with reorthogonalization; the R factor has a
/// positive real diagonal by construction, which is what makes Q Haar.
/// Intended for test-scale dimensions.
fn haar_unitary(p: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let mut q = complex_gaussian_matrix(p, p, rng);
    for j in 0..p {
        for _ in 0..2 {
            for i in 0..j {
                let mut dot = c64::new(0.0, 0.0);
                for r in 0..p {
                    dot += q[(r, i)].conj() * q[(r, j)];
                }
                for r in 0..p {
                    let qi = q[(r, i)];
                    q[(r, j)] -= dot * qi;
                }
            }
        }
        let norm: f64 = (0..p).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..p {
            q[(r, j)] /= c64::new(norm, 0.0);
        }
    }
    q
}

/// Draw `X = Σ^{1/2} Y` under the isotropic spiked model (identity `U`).
pub fn generate_isotropic(spec: &SpikeSpec, seed: u64) -> ObservationMatrix {
    let mut rng = rng::stream(seed, "generate-isotropic", 0);
    let scales: Vec<f64> = spec.population_eigenvalues().iter().map(|ev| ev.sqrt()).collect();
    let mut x = Mat::zeros(spec.p, spec.n);
    for j in 0..spec.n {
        for i in 0..spec.p {
            x[(i, j)] = standard_complex_gaussian(&mut rng) * c64::new(scales[i], 0.0);
        }
    }
    ObservationMatrix { entries: x, spec: spec.clone(), seed }
}

/// The `p × m` steering matrix with columns
/// `a(θ_i) = p^{−1/2} [exp(−i v sin(θ_i) π)]_{v=0}^{p−1}`.
///
/// Every column has unit Euclidean norm.
pub fn steering_matrix(thetas: &[f64], p: usize) -> Result<Mat<c64>> {
    if thetas.is_empty() {
        return Err(Error::invalid("at least one steering angle is required"));
    }
    if thetas.len() > p {
        return Err(Error::invalid(format!(
            "{} steering angles exceed the array dimension p = {p}",
            thetas.len()
        )));
    }
    let scale = 1.0 / (p as f64).sqrt();
    let mut a = Mat::zeros(p, thetas.len());
    for (j, &theta) in thetas.iter().enumerate() {
        let omega = theta.sin() * std::f64::consts::PI;
        for v in 0..p {
            let phase = -(v as f64) * omega;
            a[(v, j)] = c64::new(phase.cos() * scale, phase.sin() * scale);
        }
    }
    Ok(a)
}

/// Draw `m` steering angles i.i.d. uniform on `[0, 2π)`.
pub fn draw_angles(count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..count).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect()
}

/// Draw `X = A(θ) P^{1/2} S + σ N` under the array model.
///
/// `thetas` must supply one angle per spiked direction (`Σ m_k` angles);
/// `P = diag(α_1 I_{m_1}, …, α_K I_{m_K})`, `S` and `N` are i.i.d. standard
/// complex Gaussian.
pub fn generate_doa(spec: &SpikeSpec, thetas: &[f64], seed: u64) -> Result<ObservationMatrix> {
    let m = spec.total_spikes();
    if thetas.len() != m {
        return Err(Error::invalid(format!(
            "{} steering angles supplied but the model has m = {m} spiked directions",
            thetas.len()
        )));
    }
    let mut rng = rng::stream(seed, "generate-doa", 0);
    let a = steering_matrix(thetas, spec.p)?;

    // P^{1/2} S: scale each signal row by the square root of its spike power.
    let mut signals = complex_gaussian_matrix(m, spec.n, &mut rng);
    let row_scales: Vec<f64> = spec.expanded_alphas().iter().map(|al| al.sqrt()).collect();
    for j in 0..spec.n {
        for i in 0..m {
            signals[(i, j)] *= c64::new(row_scales[i], 0.0);
        }
    }

    let mut x = &a * &signals;
    let sigma = spec.sigma2.sqrt();
    for j in 0..spec.n {
        for i in 0..spec.p {
            x[(i, j)] += standard_complex_gaussian(&mut rng) * c64::new(sigma, 0.0);
        }
    }
    Ok(ObservationMatrix { entries: x, spec: spec.clone(), seed })
}
