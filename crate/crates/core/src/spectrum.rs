//! Sample spectra and the spike-forward map.
//!
//! For a detectable spike `α > σ²√γ`, the sample eigenvalues of its cluster
//! converge almost surely to
//!
//! ```text
//! φ(α) = α + σ² + γσ²(1 + σ²/α),
//! ```
//!
//! while the noise eigenvalues fill the Marčenko–Pastur bulk
//! `[σ²(1−√γ)², σ²(1+√γ)²]`. This module computes sample covariances,
//! descending eigenvalue summaries with consecutive gaps, cluster sums over
//! index blocks, `φ` and its analytic inverse, the bulk edges, histogram
//! bins for spectrum plots, and a subspace-iteration routine for the top few
//! sample eigenvalues of very large matrices.

use faer::{c64, Mat, MatRef, Side};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{standard_complex_gaussian, ObservationMatrix};
use crate::num::{cast, Scalar};

/// Descending sample eigenvalues plus derived consecutive gaps.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary<F: Scalar = f64> {
    eigenvalues: Vec<F>,
    gaps: Vec<F>,
    p: usize,
    n: usize,
}

impl<F: Scalar> SpectrumSummary<F> {
    /// Build a summary from raw eigenvalues (any order).
    ///
    /// Sorts descending (ties keep their original relative order), clamps
    /// roundoff negatives in `[−tol, 0)` to zero and rejects anything more
    /// negative, with `tol = 1e−10 · max(1, λ_max)`.
    pub fn from_eigenvalues(mut eigenvalues: Vec<F>, n: usize) -> Result<Self> {
        if eigenvalues.is_empty() || n == 0 {
            return Err(Error::invalid("a spectrum needs p ≥ 1 eigenvalues and n ≥ 1 samples"));
        }
        if eigenvalues.iter().any(|ev| !ev.is_finite()) {
            return Err(Error::Validation("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        let max = eigenvalues[0];
        let tol = cast::<F>(1e-10) * if max > F::one() { max } else { F::one() };
        let mut clamped = 0usize;
        for ev in eigenvalues.iter_mut() {
            if *ev < F::zero() {
                if *ev < -tol {
                    return Err(Error::Validation(format!(
                        "eigenvalue {ev} is negative beyond the PSD tolerance"
                    )));
                }
                *ev = F::zero();
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::debug!("clamped {clamped} tiny negative eigenvalues to zero");
        }
        let gaps = eigenvalues.windows(2).map(|w| w[0] - w[1]).collect();
        Ok(Self { eigenvalues: eigenvalues.clone(), gaps, p: eigenvalues.len(), n })
    }

    pub fn eigenvalues(&self) -> &[F] {
        &self.eigenvalues
    }

    /// Consecutive differences `δ_j = λ_j − λ_{j+1}`, length `p − 1`.
    pub fn gaps(&self) -> &[F] {
        &self.gaps
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> F {
        cast::<F>(self.p as f64) / cast::<F>(self.n as f64)
    }

    pub fn trace(&self) -> F {
        self.eigenvalues.iter().fold(F::zero(), |a, &b| a + b)
    }
}

impl SpectrumSummary<f64> {
    /// Eigen-decompose a Hermitian matrix into a descending summary.
    ///
    /// `n` is the sample count behind the matrix (kept for `γ = p/n`).
    /// Inputs that deviate from Hermitian symmetry by more than
    /// `1e−8 · max|entry|` are rejected, as are spectra whose eigenvalue sum
    /// disagrees with the matrix trace by more than `1e−8` relative.
    pub fn from_hermitian(matrix: MatRef<'_, c64>, n: usize) -> Result<Self> {
        let p = matrix.nrows();
        if p == 0 || matrix.ncols() != p {
            return Err(Error::invalid("matrix must be square and nonempty"));
        }
        let mut scale = 0.0f64;
        for j in 0..p {
            for i in 0..p {
                scale = scale.max(matrix[(i, j)].norm());
            }
        }
        let tol = 1e-8 * scale.max(1.0);
        for j in 0..p {
            for i in 0..=j {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if dev > tol {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: |S[{i},{j}] − conj(S[{j},{i}])| = {dev:.3e}"
                    )));
                }
            }
        }
        let evs = matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Validation(format!("eigenvalue decomposition failed: {e:?}")))?;
        let summary = Self::from_eigenvalues(evs, n)?;

        let trace: f64 = (0..p).map(|i| matrix[(i, i)].re).sum();
        let sum = summary.trace();
        if (sum - trace).abs() > 1e-8 * trace.abs().max(1.0) {
            return Err(Error::Validation(format!(
                "eigenvalue sum {sum} disagrees with trace {trace}"
            )));
        }
        Ok(summary)
    }

    /// Sample covariance of an observation matrix, then eigen-decompose.
    pub fn from_observation(x: &ObservationMatrix) -> Result<Self> {
        let s = sample_covariance(x);
        Self::from_hermitian(s.as_ref(), x.spec.n())
    }
}

/// `S = (1/n) X Xᴴ`, symmetrized so it is Hermitian to the last bit.
pub fn sample_covariance(x: &ObservationMatrix) -> Mat<c64> {
    let n = x.entries.ncols();
    let p = x.entries.nrows();
    let mut s = &x.entries * x.entries.adjoint();
    let inv_n = 1.0 / n as f64;
    for j in 0..p {
        for i in 0..=j {
            let avg = (s[(i, j)] + s[(j, i)].conj()) * c64::new(0.5 * inv_n, 0.0);
            s[(i, j)] = avg;
            s[(j, i)] = avg.conj();
        }
    }
    s
}

/// Cluster index blocks `J_k = {s_{k−1}+1, …, s_k}` induced by multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterPartition {
    mults: Vec<usize>,
    boundaries: Vec<usize>,
}

impl ClusterPartition {
    pub fn new(mults: Vec<usize>) -> Result<Self> {
        if mults.is_empty() || mults.iter().any(|&m| m == 0) {
            return Err(Error::invalid("multiplicities must be nonempty and positive"));
        }
        let boundaries = mults
            .iter()
            .scan(0usize, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Ok(Self { mults, boundaries })
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    /// Cumulative boundaries `s_k = m_1 + … + m_k` (1-based eigenvalue index
    /// of each cluster's last member).
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn k(&self) -> usize {
        self.mults.len()
    }

    /// Total number of spiked eigenvalues `m = s_K`.
    pub fn total(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    /// Zero-based index range of cluster `k`.
    pub fn index_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = if k == 0 { 0 } else { self.boundaries[k - 1] };
        start..self.boundaries[k]
    }
}

/// Per-cluster sums `g_k = Σ_{j ∈ J_k} λ_j` of the descending spectrum.
pub fn cluster_sums<F: Scalar>(summary: &SpectrumSummary<F>, partition: &ClusterPartition) -> Result<Vec<F>> {
    if partition.total() > summary.p() {
        return Err(Error::invalid(format!(
            "partition covers {} eigenvalues but the spectrum has only {}",
            partition.total(),
            summary.p()
        )));
    }
    Ok((0..partition.k())
        .map(|k| {
            partition.index_range(k).fold(F::zero(), |acc, j| acc + summary.eigenvalues()[j])
        })
        .collect())
}

/// The spike-forward map `φ(x) = x + σ² + γσ²(1 + σ²/x)` for `x ≠ 0`.
pub fn phi<F: Scalar>(x: F, sigma2: F, gamma: F) -> Result<F> {
    if x == F::zero() {
        return Err(Error::domain("φ is undefined at x = 0"));
    }
    Ok(x + sigma2 + gamma * sigma2 * (F::one() + sigma2 / x))
}

/// Marčenko–Pastur bulk edges `(σ²(1−√γ)², σ²(1+√γ)²)`.
pub fn mp_bulk_edges<F: Scalar>(sigma2: F, gamma: F) -> (F, F) {
    let root = gamma.sqrt();
    let lower = sigma2 * (F::one() - root) * (F::one() - root);
    let upper = sigma2 * (F::one() + root) * (F::one() + root);
    (lower, upper)
}

/// Analytic inverse of `φ` above the bulk: the larger root of
/// `x² + (σ² + γσ² − λ)x + γσ⁴ = 0`.
///
/// Defined for `λ` strictly above the upper bulk edge; the returned `x`
/// satisfies `φ(x) = λ` and `x > σ²√γ`.
pub fn phi_inverse<F: Scalar>(lambda: F, sigma2: F, gamma: F) -> Result<F> {
    let (_, upper) = mp_bulk_edges(sigma2, gamma);
    if lambda <= upper {
        return Err(Error::OutOfRange(format!(
            "λ = {lambda} is not above the bulk edge {upper}"
        )));
    }
    // λ − σ²(1+γ) > 2σ²√γ ≥ 0 above the edge, so the + root has no cancellation
    let half = cast::<F>(0.5);
    let b = lambda - sigma2 * (F::one() + gamma);
    let discriminant = b * b - cast::<F>(4.0) * gamma * sigma2 * sigma2;
    Ok(half * (b + discriminant.max(F::zero()).sqrt()))
}

/// Histogram of a spectrum: `bins` equal-width bins over `[0, λ_1 · 1.05]`.
///
/// The final bin is closed on the right, so the counts always total `p`.
#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

pub fn histogram<F: Scalar>(summary: &SpectrumSummary<F>, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let top = summary.eigenvalues()[0].to_f64().unwrap();
    let hi = if top > 0.0 { top * 1.05 } else { 1.0 };
    let width = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    for ev in summary.eigenvalues() {
        let v = ev.to_f64().unwrap();
        let idx = ((v / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            left: i as f64 * width,
            right: (i + 1) as f64 * width,
            count,
        })
        .collect())
}

/// Top `count` eigenvalues of `(1/n) X Xᴴ` without forming the `p × p`
/// matrix, via blocked subspace iteration with Rayleigh–Ritz extraction.
///
/// Converges fast when the wanted eigenvalues sit above the bulk, which is
/// the regime the CLT diagnostic runs in. Start vectors come from `rng`, so
/// the result is deterministic given the stream.
pub fn top_sample_eigenvalues(x: MatRef<'_, c64>, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let p = x.nrows();
    let n = x.ncols();
    if count == 0 || count > p {
        return Err(Error::invalid(format!("cannot extract {count} eigenvalues from a {p}-dim matrix")));
    }
    let block = (count + 2).min(p);
    let inv_n = c64::new(1.0 / n as f64, 0.0);

    let mut basis = Mat::<c64>::zeros(p, block);
    for j in 0..block {
        for i in 0..p {
            basis[(i, j)] = standard_complex_gaussian(rng);
        }
    }
    orthonormalize(&mut basis);

    let mut previous: Vec<f64> = vec![f64::INFINITY; count];
    for _ in 0..500 {
        // S·V = X (Xᴴ V) / n, never materializing S
        let w = x.adjoint() * &basis;
        let mut sv = x * &w;
        for j in 0..block {
            for i in 0..p {
                sv[(i, j)] *= inv_n;
            }
        }
        // Rayleigh–Ritz on the current basis
        let projected = basis.adjoint() * &sv;
        let mut ritz = projected
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Validation(format!("projected eigenproblem failed: {e:?}")))?;
        ritz.reverse();
        let done = ritz[..count]
            .iter()
            .zip(&previous)
            .all(|(now, before)| (now - before).abs() <= 1e-11 * now.abs().max(1.0));
        previous.copy_from_slice(&ritz[..count]);
        if done {
            break;
        }
        basis = sv;
        orthonormalize(&mut basis);
    }
    Ok(previous)
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
fn orthonormalize(m: &mut Mat<c64>) {
    let (rows, cols) = (m.nrows(), m.ncols());
    for j in 0..cols {
        for _ in 0..2 {
            for i in 0..j {
                let mut dot = c64::new(0.0, 0.0);
                for r in 0..rows {
                    dot += m[(r, i)].conj() * m[(r, j)];
                }
                for r in 0..rows {
                    let mi = m[(r, i)];
                    m[(r, j)] -= dot * mi;
                }
            }
        }
        let norm: f64 = (0..rows).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        let scale = c64::new(1.0 / norm, 0.0);
        for r in 0..rows {
            m[(r, j)] *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_isotropic, SpikeSpec};
    use crate::rng;
    use approx::assert_relative_eq;

    fn mat_from_rows(rows: &[&[(f64, f64)]]) -> Mat<c64> {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &(re, im)) in row.iter().enumerate() {
                m[(i, j)] = c64::new(re, im);
            }
        }
        m
    }

    fn obs(entries: Mat<c64>, n: usize) -> ObservationMatrix {
        let p = entries.nrows();
        ObservationMatrix {
            entries,
            spec: SpikeSpec::new(vec![1.0], vec![1], 1.0, p, n).unwrap(),
            seed: 0,
        }
    }

    #[test]
    fn sample_covariance_single_column() {
        let x = obs(mat_from_rows(&[&[(1.0, 0.0)], &[(0.0, 0.0)]]), 1);
        let s = sample_covariance(&x);
        assert_eq!(s[(0, 0)], c64::new(1.0, 0.0));
        assert_eq!(s[(0, 1)], c64::new(0.0, 0.0));
        assert_eq!(s[(1, 0)], c64::new(0.0, 0.0));
        assert_eq!(s[(1, 1)], c64::new(0.0, 0.0));
    }

    #[test]
    fn sample_covariance_all_ones() {
        let x = obs(
            mat_from_rows(&[&[(1.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (1.0, 0.0)]]),
            2,
        );
        let s = sample_covariance(&x);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s[(i, j)], c64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn sample_covariance_trace_equals_frobenius_norm() {
        let spec = SpikeSpec::new(vec![4.0, 2.0], vec![2, 1], 0.7, 12, 30).unwrap();
        let x = generate_isotropic(&spec, 17);
        let s = sample_covariance(&x);
        let trace: f64 = (0..12).map(|i| s[(i, i)].re).sum();
        let frob2: f64 = (0..12)
            .map(|i| (0..30).map(|j| x.entries[(i, j)].norm_sqr()).sum::<f64>())
            .sum();
        assert_relative_eq!(trace, frob2 / 30.0, max_relative = 1e-12);
    }

    #[test]
    fn eigenvalues_desc_of_a_diagonal() {
        let m = mat_from_rows(&[
            &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            &[(0.0, 0.0), (3.0, 0.0), (0.0, 0.0)],
            &[(0.0, 0.0), (0.0, 0.0), (2.0, 0.0)],
        ]);
        let summary = SpectrumSummary::from_hermitian(m.as_ref(), 4).unwrap();
        assert_eq!(summary.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(summary.gaps(), &[1.0, 1.0]);
    }

    #[test]
    fn eigenvalues_desc_of_the_identity() {
        let mut m = Mat::<c64>::zeros(5, 5);
        for i in 0..5 {
            m[(i, i)] = c64::new(1.0, 0.0);
        }
        let summary = SpectrumSummary::from_hermitian(m.as_ref(), 5).unwrap();
        assert_eq!(summary.eigenvalues(), &[1.0; 5]);
        assert_eq!(summary.gaps(), &[0.0; 4]);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = mat_from_rows(&[&[(1.0, 0.0), (2.0, 0.0)], &[(0.5, 0.0), (1.0, 0.0)]]);
        match SpectrumSummary::from_hermitian(m.as_ref(), 2) {
            Err(Error::Validation(_)) => {}
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn tolerates_hermitian_roundoff() {
        let eps = 1e-12;
        let m = mat_from_rows(&[&[(1.0, 0.0), (0.3, eps)], &[(0.3, -eps - 1e-13), (2.0, 0.0)]]);
        assert!(SpectrumSummary::from_hermitian(m.as_ref(), 2).is_ok());
    }

    #[test]
    fn summary_rejects_strongly_negative_eigenvalues() {
        assert!(SpectrumSummary::from_eigenvalues(vec![1.0, -0.5], 2).is_err());
        let s = SpectrumSummary::from_eigenvalues(vec![1.0, -5e-11], 2).unwrap();
        assert_eq!(s.eigenvalues()[1], 0.0);
    }

    #[test]
    fn summary_sorting_is_stable_for_ties() {
        let s = SpectrumSummary::from_eigenvalues(vec![2.0, 5.0, 2.0, 5.0], 4).unwrap();
        assert_eq!(s.eigenvalues(), &[5.0, 5.0, 2.0, 2.0]);
    }

    #[test]
    fn phi_matches_direct_evaluations() {
        assert_relative_eq!(phi(5.0, 1.0, 0.5).unwrap(), 6.6, max_relative = 1e-12);
        assert_relative_eq!(phi(3.0, 1.0, 0.5).unwrap(), 14.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(phi(7.0, 1.0, 0.5).unwrap(), 60.0 / 7.0, max_relative = 1e-12);
        // noiseless degeneracy: φ(x) = x
        assert_eq!(phi(3.7, 0.0, 0.9).unwrap(), 3.7);
        assert!(phi(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn phi_inverse_round_trips_the_reference_point() {
        assert_relative_eq!(phi_inverse(6.6, 1.0, 0.5).unwrap(), 5.0, max_relative = 1e-12);
        // σ² = 0 reduces to the identity
        assert_relative_eq!(phi_inverse(4.2, 0.0, 0.5).unwrap(), 4.2, max_relative = 1e-14);
        assert!(phi_inverse(2.0, 1.0, 0.5).is_err()); // below the bulk edge
    }

    #[test]
    fn bulk_edges_match_direct_evaluations() {
        let (lo, hi) = mp_bulk_edges(1.0, 0.5);
        assert_relative_eq!(lo, 0.0858, max_relative = 1e-3);
        assert_relative_eq!(hi, 2.9142, max_relative = 1e-4);
        let (lo, hi) = mp_bulk_edges(1.0, 1.0);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 4.0);
        // γ → 0: both edges collapse onto σ²
        let (lo, hi) = mp_bulk_edges(2.0, 1e-12);
        assert_relative_eq!(lo, 2.0, max_relative = 1e-5);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-5);
    }

    #[test]
    fn cluster_sums_by_block() {
        let summary =
            SpectrumSummary::from_eigenvalues(vec![8.6, 6.6, 6.6, 4.7, 1.0, 0.9], 6).unwrap();
        let part = ClusterPartition::new(vec![1, 2, 1]).unwrap();
        let g = cluster_sums(&summary, &part).unwrap();
        assert_relative_eq!(g[0], 8.6);
        assert_relative_eq!(g[1], 13.2);
        assert_relative_eq!(g[2], 4.7);
    }

    #[test]
    fn single_cluster_sum_is_the_trace() {
        let summary = SpectrumSummary::from_eigenvalues(vec![3.0, 2.0, 0.5, 0.25], 4).unwrap();
        let part = ClusterPartition::new(vec![4]).unwrap();
        let g = cluster_sums(&summary, &part).unwrap();
        assert_relative_eq!(g[0], summary.trace());
    }

    #[test]
    fn cluster_sums_reject_boundary_overflow() {
        let summary = SpectrumSummary::from_eigenvalues(vec![3.0, 2.0], 2).unwrap();
        let part = ClusterPartition::new(vec![1, 2]).unwrap();
        assert!(cluster_sums(&summary, &part).is_err());
    }

    #[test]
    fn histogram_counts_total_p() {
        let summary =
            SpectrumSummary::from_eigenvalues((1..=37).map(|i| i as f64 / 7.0).collect(), 40)
                .unwrap();
        for bins in [1, 2, 200] {
            let h = histogram(&summary, bins).unwrap();
            assert_eq!(h.len(), bins);
            assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 37);
        }
        let single = histogram(&summary, 1).unwrap();
        assert_eq!(single[0].count, 37);
        assert_relative_eq!(single[0].right, summary.eigenvalues()[0] * 1.05);
    }

    #[test]
    fn top_eigenvalues_match_the_dense_solver() {
        let spec = SpikeSpec::new(vec![6.0, 2.5], vec![2, 1], 0.5, 60, 150).unwrap();
        let x = generate_isotropic(&spec, 5);
        let dense = SpectrumSummary::from_observation(&x).unwrap();
        let mut stream = rng::stream(5, "subspace-test", 0);
        let top = top_sample_eigenvalues(x.entries.as_ref(), 3, &mut stream).unwrap();
        for (a, b) in top.iter().zip(dense.eigenvalues()) {
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn top_eigenvalues_handle_block_larger_than_dimension() {
        let spec = SpikeSpec::new(vec![2.0], vec![1], 0.3, 3, 9).unwrap();
        let x = generate_isotropic(&spec, 1);
        let dense = SpectrumSummary::from_observation(&x).unwrap();
        let mut stream = rng::stream(1, "subspace-test", 1);
        let top = top_sample_eigenvalues(x.entries.as_ref(), 3, &mut stream).unwrap();
        for (a, b) in top.iter().zip(dense.eigenvalues()) {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }
}
