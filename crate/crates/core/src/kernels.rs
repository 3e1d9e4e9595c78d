//! Complete-data kernels: standardization, slicing, SIR and SAVE.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::dataset::DataSet;
use crate::error::{Result, SdrError, Warning};
use crate::linalg::{self, EigenPairs, SymMatrix};

/// Moment estimates `μ̂`, `Σ̂` (1/n normalization) and `Σ̂^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mu_hat: Array1<f64>,
    pub sigma_hat: SymMatrix,
    pub sigma_inv_sqrt: SymMatrix,
}

impl Standardizer {
    pub fn fit(data: &DataSet) -> Result<Self> {
        Self::fit_with_ridge(data, 0.0)
    }

    /// As [`Standardizer::fit`], inverting `Σ̂ + ridge·I` instead of `Σ̂`.
    pub fn fit_with_ridge(data: &DataSet, ridge: f64) -> Result<Self> {
        let x = data.x();
        let n = x.nrows() as f64;
        let mu_hat = x.mean_axis(Axis(0)).ok_or(SdrError::EmptyData)?;
        let centered = x - &mu_hat;
        let sigma_hat = SymMatrix::new(centered.t().dot(&centered) / n)?;
        let sigma_inv_sqrt = linalg::inv_sqrt_with_ridge(&sigma_hat, ridge)?;
        Ok(Standardizer {
            mu_hat,
            sigma_hat,
            sigma_inv_sqrt,
        })
    }

    /// Identity standardizer centered at `mu`.
    pub fn identity(mu: Array1<f64>) -> Self {
        let p = mu.len();
        Standardizer {
            mu_hat: mu,
            sigma_hat: SymMatrix::identity(p),
            sigma_inv_sqrt: SymMatrix::identity(p),
        }
    }

    pub fn p(&self) -> usize {
        self.mu_hat.len()
    }

    /// Rows `Σ̂^{-1/2}(x_i - μ̂)`.
    pub fn standardize(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.p() {
            return Err(SdrError::DimensionError(format!(
                "data has {} columns, standardizer expects {}",
                x.ncols(),
                self.p()
            )));
        }
        Ok((&x - &self.mu_hat).dot(self.sigma_inv_sqrt.as_array()))
    }

    /// Maps a Z-scale basis back to the X scale: `Σ̂^{-1/2} B`.
    pub fn to_x_scale(&self, basis: ArrayView2<f64>) -> Array2<f64> {
        self.sigma_inv_sqrt.as_array().dot(&basis)
    }
}

pub fn fit_standardizer(data: &DataSet) -> Result<Standardizer> {
    Standardizer::fit(data)
}

pub fn standardize(data: &DataSet, std: &Standardizer) -> Result<Array2<f64>> {
    std.standardize(data.x().view())
}

/// Slice membership. Labels are 0-based slice indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceAssignment {
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
}

impl SliceAssignment {
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(SdrError::EmptyData);
        }
        let s = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0; s];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(SdrError::InvalidSlicing(format!("slice {empty} is empty")));
        }
        Ok(SliceAssignment { labels, counts })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_slices(&self) -> usize {
        self.counts.len()
    }

    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Partition `y` into at most `h` slices of roughly equal size by sorted order.
///
/// Tied responses always share a slice. When no more distinct values remain
/// than slices, every remaining value gets a slice of its own, so a discrete
/// response with at most `h` levels is sliced by level.
pub fn slice_response(y: &[f64], h: usize) -> Result<SliceAssignment> {
    if h < 2 {
        return Err(SdrError::InvalidSlicing(format!("need h >= 2, got {h}")));
    }
    if y.len() < h {
        return Err(SdrError::InvalidSlicing(format!(
            "{} observations cannot fill {h} slices",
            y.len()
        )));
    }
    slice_sorted(y, h)
}

pub(crate) fn slice_sorted(y: &[f64], h: usize) -> Result<SliceAssignment> {
    let n = y.len();
    if n == 0 {
        return Err(SdrError::EmptyData);
    }
    if h == 0 {
        return Err(SdrError::InvalidSlicing("h must be positive".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SdrError::InvalidData("non-finite response".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    // runs of equal values in sorted order
    let mut groups: Vec<&[usize]> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || y[order[k]] != y[order[start]] {
            groups.push(&order[start..k]);
            start = k;
        }
    }

    let mut labels = vec![0; n];
    let mut slice = 0;
    let mut current = 0usize;
    let mut remaining = n;
    let mut slices_left = h;
    for (gi, group) in groups.iter().enumerate() {
        for &i in group.iter() {
            labels[i] = slice;
        }
        current += group.len();
        let groups_after = groups.len() - gi - 1;
        if slices_left > 1 && groups_after > 0 {
            let target = remaining as f64 / slices_left as f64;
            if current as f64 >= target - 1e-9 || groups_after < slices_left {
                slice += 1;
                remaining -= current;
                current = 0;
                slices_left -= 1;
            }
        }
    }
    SliceAssignment::from_labels(labels)
}

/// Symmetric kernel with its spectrum and slicing diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub matrix: SymMatrix,
    pub eigen: EigenPairs,
    pub slice_counts: Option<Vec<usize>>,
    pub warnings: Vec<Warning>,
}

impl KernelEstimate {
    pub fn new(matrix: SymMatrix) -> Result<Self> {
        let eigen = linalg::sym_eigen(&matrix)?;
        Ok(KernelEstimate {
            matrix,
            eigen,
            slice_counts: None,
            warnings: Vec::new(),
        })
    }
}

/// SIR kernel on standardized covariates: `Σ_k f̂_k m̂_k m̂_kᵀ` over slice means.
pub fn sir_kernel(z: ArrayView2<f64>, slices: &SliceAssignment) -> Result<SymMatrix> {
    let (n, p) = z.dim();
    if slices.n() != n {
        return Err(SdrError::DimensionError(format!(
            "{} slice labels for {n} rows",
            slices.n()
        )));
    }
    let s = slices.num_slices();
    let mut sums = Array2::<f64>::zeros((s, p));
    for (row, &label) in z.axis_iter(Axis(0)).zip(&slices.labels) {
        let mut acc = sums.row_mut(label);
        acc += &row;
    }
    // f_k m_k m_kᵀ = (sum_k sum_kᵀ) / (n · n_k)
    let mut scaled = sums;
    for (k, mut row) in scaled.axis_iter_mut(Axis(0)).enumerate() {
        row /= (n as f64 * slices.counts[k] as f64).sqrt();
    }
    Ok(SymMatrix::gram(scaled.t()))
}

/// Mean and 1/n covariance of the selected rows.
pub(crate) fn group_moments(
    x: ArrayView2<f64>,
    rows: impl Iterator<Item = usize> + Clone,
) -> (Array1<f64>, Array2<f64>, usize) {
    let p = x.ncols();
    let mut mean = Array1::<f64>::zeros(p);
    let mut count = 0usize;
    for i in rows.clone() {
        mean += &x.row(i);
        count += 1;
    }
    mean /= count as f64;
    let mut cov = Array2::<f64>::zeros((p, p));
    for i in rows {
        let d = &x.row(i) - &mean;
        for a in 0..p {
            for b in 0..p {
                cov[[a, b]] += d[a] * d[b];
            }
        }
    }
    cov /= count as f64;
    (mean, cov, count)
}

/// `[m_1 - m_0 | C_1 - C_0]` as one `p x (1 + p)` block.
pub(crate) fn save_block(mean_diff: &Array1<f64>, cov_diff: &Array2<f64>) -> Array2<f64> {
    let p = mean_diff.len();
    let mut block = Array2::<f64>::zeros((p, p + 1));
    block.column_mut(0).assign(mean_diff);
    block.slice_mut(s![.., 1..]).assign(cov_diff);
    block
}

/// SAVE kernel for a binary response on standardized covariates, symmetrized
/// as `K Kᵀ` with `K = [m̂_1 - m̂_0 | Σ̂_{Z,1} - Σ̂_{Z,0}]`. `labels[i] == true`
/// places row `i` in group 1.
pub fn save_kernel_binary(z: ArrayView2<f64>, labels: &[bool]) -> Result<SymMatrix> {
    let n = z.nrows();
    if labels.len() != n {
        return Err(SdrError::DimensionError(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    for (group, flag) in [(0usize, false), (1, true)] {
        let size = labels.iter().filter(|&&l| l == flag).count();
        if size < 2 {
            return Err(SdrError::GroupTooSmall {
                group,
                size,
                required: 2,
            });
        }
    }
    let ones = (0..n).filter(|&i| labels[i]);
    let zeros = (0..n).filter(|&i| !labels[i]);
    let (m1, c1, _) = group_moments(z, ones);
    let (m0, c0, _) = group_moments(z, zeros);
    let block = save_block(&(m1 - m0), &(c1 - c0));
    Ok(SymMatrix::gram(block.view()))
}

/// `Σ̂^{-1/2} Eig(K_Z; d)`: the X-scale estimate spanned by the `d` leading
/// eigenvectors of a Z-scale kernel. Columns are not orthonormal in general.
pub fn kernel_in_x_scale(k_z: &SymMatrix, std: &Standardizer, d: usize) -> Result<Array2<f64>> {
    if k_z.dim() != std.p() {
        return Err(SdrError::DimensionError(format!(
            "kernel is {}x{}, standardizer has p = {}",
            k_z.dim(),
            k_z.dim(),
            std.p()
        )));
    }
    let b = linalg::leading_subspace(k_z, d)?;
    Ok(std.to_x_scale(b.basis().view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn standardizer_on_unit_square() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let data = DataSet::new(x, array![1.0, 2.0, 3.0, 4.0], None).unwrap();
        let st = fit_standardizer(&data).unwrap();
        assert_eq!(st.mu_hat, array![0.5, 0.5]);
        assert!(max_abs(st.sigma_hat.as_array(), &array![[0.25, 0.0], [0.0, 0.25]]) < 1e-15);
        assert!(
            max_abs(
                st.sigma_inv_sqrt.as_array(),
                &array![[2.0, 0.0], [0.0, 2.0]]
            ) < 1e-12
        );
    }

    #[test]
    fn standardizer_rejects_degenerate_covariance() {
        let data = DataSet::new(array![[0.0, 0.0], [2.0, 2.0]], array![0.0, 1.0], None).unwrap();
        match fit_standardizer(&data) {
            Err(SdrError::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
        // mean is still the column average
        let mu = data.x().mean_axis(Axis(0)).unwrap();
        assert_eq!(mu, array![1.0, 1.0]);
    }

    #[test]
    fn standardized_data_has_zero_mean_identity_cov() {
        let x = array![
            [1.0, 2.0, 0.5],
            [2.0, 1.0, 0.0],
            [0.0, 3.0, 1.0],
            [4.0, 1.0, 2.0],
            [2.5, 0.5, 3.0],
            [1.0, 1.0, 1.0]
        ];
        let data = DataSet::new(x, Array1::linspace(0.0, 1.0, 6), None).unwrap();
        let st = fit_standardizer(&data).unwrap();
        let z = standardize(&data, &st).unwrap();
        let mean = z.mean_axis(Axis(0)).unwrap();
        assert!(mean.iter().all(|v| v.abs() < 1e-12));
        let cov = z.t().dot(&z) / 6.0;
        assert!(max_abs(&cov, &Array2::eye(3)) < 1e-8);
        // X = μ̂ + Ẑ Σ̂^{1/2}
        let root = linalg::sqrt_psd(&st.sigma_hat).unwrap();
        let back = z.dot(root.as_array()) + &st.mu_hat;
        assert!(max_abs(&back, data.x()) < 1e-8);
    }

    #[test]
    fn identity_standardizer_leaves_centered_data() {
        let x = array![[1.0, -1.0], [-1.0, 1.0]];
        let st = Standardizer::identity(Array1::zeros(2));
        assert_eq!(st.standardize(x.view()).unwrap(), x);
    }

    #[test]
    fn slicing_examples() {
        let y: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = slice_response(&y, 5).unwrap();
        assert_eq!(s.labels, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);

        let s = slice_response(&[1.0, 1.0, 1.0, 1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(s.counts, vec![4, 1, 1]);
        assert_eq!(s.labels, vec![0, 0, 0, 0, 1, 2]);

        let y: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let s = slice_response(&y, 10).unwrap();
        assert_eq!(s.num_slices(), 2);

        // levels stay separate even when unbalanced
        let mut y = vec![0.0];
        y.extend(std::iter::repeat_n(1.0, 50));
        y.extend(std::iter::repeat_n(2.0, 49));
        assert_eq!(slice_response(&y, 3).unwrap().counts, vec![1, 50, 49]);

        assert!(slice_response(&[1.0, 2.0], 1).is_err());
        assert!(slice_response(&[1.0, 2.0], 3).is_err());
        let p: f64 = slice_response(&y, 7).unwrap().proportions().iter().sum();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sir_kernel_zero_when_slice_means_vanish() {
        let z = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let slices = SliceAssignment::from_labels(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(sir_kernel(z.view(), &slices).unwrap(), SymMatrix::zeros(2));
    }

    #[test]
    fn sir_kernel_two_clusters() {
        // slice means are exactly (±1, 0): K = ½ e1e1ᵀ + ½ e1e1ᵀ = e1e1ᵀ
        let eps = 0.05;
        let z = array![
            [1.0 + eps, eps],
            [1.0 - eps, -eps],
            [1.0 + eps, -eps],
            [1.0 - eps, eps],
            [-1.0 + eps, eps],
            [-1.0 - eps, -eps],
            [-1.0 + eps, -eps],
            [-1.0 - eps, eps],
        ];
        let slices = SliceAssignment::from_labels(vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        let k = sir_kernel(z.view(), &slices).unwrap();
        assert!(max_abs(k.as_array(), &array![[1.0, 0.0], [0.0, 0.0]]) < 1e-12);
        let lead = linalg::leading_subspace(&k, 1).unwrap();
        assert_abs_diff_eq!(lead.basis()[[0, 0]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn save_kernel_examples() {
        // identical groups
        let z = array![[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]];
        let k = save_kernel_binary(z.view(), &[true, true, false, false]).unwrap();
        assert_eq!(k, SymMatrix::zeros(2));

        // means ±e1, same spread: block [2e1 | 0] so KKᵀ = 4 e1e1ᵀ
        let z = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let k = save_kernel_binary(z.view(), &[true, true, false, false]).unwrap();
        assert!(max_abs(k.as_array(), &array![[4.0, 0.0], [0.0, 0.0]]) < 1e-12);

        // equal means, covariances diag(3,1) vs diag(1,1): block [0 | diag(2,0)]
        let a = 3.0_f64.sqrt();
        let z = array![
            [a, 1.0],
            [-a, -1.0],
            [a, -1.0],
            [-a, 1.0],
            [1.0, 1.0],
            [-1.0, -1.0],
            [1.0, -1.0],
            [-1.0, 1.0]
        ];
        let labels = [true, true, true, true, false, false, false, false];
        let k = save_kernel_binary(z.view(), &labels).unwrap();
        assert!(max_abs(k.as_array(), &array![[4.0, 0.0], [0.0, 0.0]]) < 1e-12);

        // label swap leaves KKᵀ unchanged
        let swapped: Vec<bool> = labels.iter().map(|l| !l).collect();
        assert_eq!(save_kernel_binary(z.view(), &swapped).unwrap(), k);

        assert!(matches!(
            save_kernel_binary(
                z.view(),
                &[true, false, false, false, false, false, false, false]
            ),
            Err(SdrError::GroupTooSmall {
                group: 1,
                size: 1,
                ..
            })
        ));
    }

    #[test]
    fn x_scale_basis() {
        let k = SymMatrix::from_diag(&[1.0, 0.0]).unwrap();
        let st = Standardizer::identity(Array1::zeros(2));
        let g = kernel_in_x_scale(&k, &st, 1).unwrap();
        assert_eq!(g, array![[1.0], [0.0]]);

        let st = Standardizer {
            mu_hat: Array1::zeros(2),
            sigma_hat: SymMatrix::from_diag(&[4.0, 4.0]).unwrap(),
            sigma_inv_sqrt: SymMatrix::from_diag(&[0.5, 0.5]).unwrap(),
        };
        let g = kernel_in_x_scale(&k, &st, 1).unwrap();
        assert_eq!(g, array![[0.5], [0.0]]);
    }
}
