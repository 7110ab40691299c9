//! Kernel discriminative common vectors.
//!
//! Fitting works entirely through the centered Gram matrix `K`:
//!
//! 1. Eigendecompose `K` and keep the strictly positive eigenpairs above
//!    `rank_tol * lambda_max`. The kept eigenvectors `U` and eigenvalues
//!    `Lambda` give coordinates `z = Lambda^{-1/2} U^T k` of every sample in the
//!    range of the feature-space total scatter.
//! 2. In those coordinates form the within-class scatter and take its null
//!    space `V0`.
//! 3. Restrict the between-class scatter to `V0`, drop its null directions
//!    and keep at most `C - 1` of the most discriminative ones, giving `V`.
//! 4. The projection of a sample is `A^T k` with `A = U Lambda^{-1/2} V`.
//!
//! All training samples of one class land on the same point, their common
//! vector, which is the class template used for matching.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{center, gram, raw_kernel_vector, CenteringStats, KernelSpec};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// One row per class, indexed by class id.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonVectors {
    rows: Vec<Vec<f64>>,
}

impl CommonVectors {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 {
            return Err(Error::InvalidParameter("no class templates".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::dims(dim, bad.len(), "class template"));
        }
        Ok(Self { rows })
    }

    pub fn num_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.rows[class]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn max_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Fitted model. Immutable; projection is safe from many threads.
#[derive(Debug, Clone)]
pub struct KdcvModel {
    train_features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    kernel: KernelSpec,
    centering: CenteringStats,
    eig_values: Vec<f64>,
    eig_vectors: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    coeff: DMatrix<f64>,
    common: CommonVectors,
    rank_tol: f64,
}

/// Eigenpairs sorted by descending eigenvalue (ties keep solver order).
fn sorted_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn class_sizes(labels: &[usize]) -> Result<Vec<usize>> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; classes];
    for &l in labels {
        sizes[l] += 1;
    }
    if classes < 2 {
        return Err(Error::Fit(format!("need at least 2 classes, got {classes}")));
    }
    if let Some(missing) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::Fit(format!(
            "class ids must be contiguous; class {missing} has no samples"
        )));
    }
    if let Some(single) = sizes.iter().position(|&n| n < 2) {
        return Err(Error::Fit(format!(
            "class {single} has a single training sample; within-class scatter needs at least 2"
        )));
    }
    Ok(sizes)
}

pub fn fit(
    features: &[Vec<f64>],
    labels: &[usize],
    kernel: KernelSpec,
    rank_tol: f64,
) -> Result<KdcvModel> {
    if features.len() != labels.len() {
        return Err(Error::dims(features.len(), labels.len(), "labels per feature vector"));
    }
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(Error::InvalidParameter(format!(
            "rank tolerance {rank_tol} outside [0, 1)"
        )));
    }
    let sizes = class_sizes(labels)?;
    let num_classes = sizes.len();
    let m = features.len();

    let kernel = kernel.resolve(features)?;
    let raw = gram(&kernel, features)?;
    let centering = CenteringStats::from_gram(&raw)?;
    let centered = center(&raw)?.into_entries();

    // kernel PCA onto the range of the total scatter
    let (all_values, all_vectors) = sorted_eigen(centered.clone());
    let lambda_max = all_values[0];
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(Error::Fit(
            "centered Gram matrix has no positive eigenvalue (all samples coincide in feature space)"
                .into(),
        ));
    }
    let cutoff = rank_tol * lambda_max;
    let r = all_values.iter().take_while(|&&l| l > cutoff && l > 0.0).count();
    let eig_values = all_values[..r].to_vec();
    let eig_vectors = all_vectors.columns(0, r).into_owned();

    let inv_sqrt = DVector::from_iterator(r, eig_values.iter().map(|l| 1.0 / l.sqrt()));
    let mut reduced = eig_vectors.transpose() * &centered; // r x M
    for (mut row, s) in reduced.row_iter_mut().zip(inv_sqrt.iter()) {
        row *= *s;
    }

    // within-class and between-class scatter of the reduced samples
    let mut class_means = DMatrix::zeros(r, num_classes);
    for (j, &l) in labels.iter().enumerate() {
        let mut col = class_means.column_mut(l);
        col += reduced.column(j);
    }
    for (i, &n) in sizes.iter().enumerate() {
        let mut col = class_means.column_mut(i);
        col /= n as f64;
    }
    let mut diffs = reduced.clone();
    for (j, &l) in labels.iter().enumerate() {
        let mut col = diffs.column_mut(j);
        col -= class_means.column(l);
    }
    let within = &diffs * diffs.transpose();
    let grand = reduced.column_mean();
    let mut weighted = DMatrix::zeros(r, num_classes);
    for (i, &n) in sizes.iter().enumerate() {
        weighted.set_column(i, &((class_means.column(i) - &grand) * (n as f64).sqrt()));
    }
    let between = &weighted * weighted.transpose();

    let (w_values, w_vectors) = sorted_eigen(within.clone());
    let w_cutoff = rank_tol * (within.trace() / r as f64).max(f64::MIN_POSITIVE);
    let null_cols: Vec<usize> = (0..r).filter(|&i| w_values[i] < w_cutoff).collect();
    if null_cols.is_empty() {
        return Err(Error::Fit(format!(
            "within-class scatter has an empty null space (rank {r}); use a larger feature \
             dimension or fewer training samples per class"
        )));
    }
    let null_space = w_vectors.select_columns(&null_cols);

    let restricted = null_space.transpose() * &between * &null_space;
    let (b_values, b_vectors) = sorted_eigen(restricted);
    let b_cutoff = rank_tol * b_values[0].max(0.0);
    let p = b_values
        .iter()
        .take_while(|&&v| v > b_cutoff && v > 0.0)
        .count()
        .min(num_classes - 1);
    if p == 0 {
        return Err(Error::Fit(
            "no discriminative direction: between-class scatter vanishes on the within-class \
             null space; use a larger feature dimension or fewer training samples per class"
                .into(),
        ));
    }
    let null_basis = &null_space * b_vectors.columns(0, p);

    let mut scaled_u = eig_vectors.clone();
    for (mut col, s) in scaled_u.column_iter_mut().zip(inv_sqrt.iter()) {
        col *= *s;
    }
    let coeff = scaled_u * &null_basis; // M x p

    let mut model = KdcvModel {
        train_features: features.to_vec(),
        labels: labels.to_vec(),
        kernel,
        centering,
        eig_values,
        eig_vectors,
        null_basis,
        coeff,
        common: CommonVectors {
            rows: vec![vec![0.0; p]; num_classes],
        },
        rank_tol,
    };

    let mut sums = vec![vec![0.0; p]; num_classes];
    for (x, &l) in features.iter().zip(labels) {
        for (acc, v) in sums[l].iter_mut().zip(model.project(x)?) {
            *acc += v;
        }
    }
    for (row, &n) in sums.iter_mut().zip(&sizes) {
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    model.common = CommonVectors { rows: sums };
    log::debug!("fitted KDCV: M={m}, C={num_classes}, r={r}, p={p}");
    Ok(model)
}

impl KdcvModel {
    /// Reassemble a model from persisted parts. Centering statistics are
    /// recomputed from the training features.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        train_features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        kernel: KernelSpec,
        eig_values: Vec<f64>,
        eig_vectors: DMatrix<f64>,
        null_basis: DMatrix<f64>,
        coeff: DMatrix<f64>,
        common: CommonVectors,
        rank_tol: f64,
    ) -> Result<Self> {
        let m = train_features.len();
        let (r, p) = (eig_values.len(), common.dim());
        let checks = [
            (labels.len(), m, "labels"),
            (eig_vectors.nrows(), m, "eigenvector rows"),
            (eig_vectors.ncols(), r, "eigenvector columns"),
            (null_basis.nrows(), r, "null basis rows"),
            (null_basis.ncols(), p, "null basis columns"),
            (coeff.nrows(), m, "coefficient rows"),
            (coeff.ncols(), p, "coefficient columns"),
        ];
        for (actual, expected, what) in checks {
            if actual != expected {
                return Err(Error::dims(expected, actual, what));
            }
        }
        let sizes = class_sizes(&labels)?;
        if sizes.len() != common.num_classes() {
            return Err(Error::dims(sizes.len(), common.num_classes(), "common vectors"));
        }
        if kernel.validate().is_err() || matches!(kernel.kind, crate::kernel::KernelKind::Cosine { scale: None }) {
            return Err(Error::InvalidParameter(format!("model kernel {kernel} is not fitted")));
        }
        let centering = CenteringStats::from_gram(&gram(&kernel, &train_features)?)?;
        Ok(Self {
            train_features,
            labels,
            kernel,
            centering,
            eig_values,
            eig_vectors,
            null_basis,
            coeff,
            common,
            rank_tol,
        })
    }

    /// Discriminant vector `A^T k(x)` of one sample.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim() {
            return Err(Error::dims(self.feature_dim(), x.len(), "feature vector length"));
        }
        let raw = raw_kernel_vector(&self.kernel, &self.train_features, x)?;
        let k = self.centering.center_vector(&raw);
        Ok(self
            .coeff
            .column_iter()
            .map(|col| col.iter().zip(&k).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn project_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter().map(|x| self.project(x)).collect()
    }

    pub fn common_vectors(&self) -> &CommonVectors {
        &self.common
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_features(&self) -> &[Vec<f64>] {
        &self.train_features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn eig_values(&self) -> &[f64] {
        &self.eig_values
    }

    pub fn eig_vectors(&self) -> &DMatrix<f64> {
        &self.eig_vectors
    }

    pub fn null_basis(&self) -> &DMatrix<f64> {
        &self.null_basis
    }

    pub fn coeff(&self) -> &DMatrix<f64> {
        &self.coeff
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn num_samples(&self) -> usize {
        self.train_features.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.train_features[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.common.num_classes()
    }

    /// Kernel PCA rank `r`.
    pub fn rank(&self) -> usize {
        self.eig_values.len()
    }

    /// Number of discriminant directions `p`.
    pub fn dim(&self) -> usize {
        self.common.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn clusters(seed: u64, classes: usize, per_class: usize, dim: usize, sep: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let centers: Vec<Vec<f64>> = (0..classes)
            .map(|_| (0..dim).map(|_| sep * noise.sample(&mut rng)).collect())
            .collect();
        let mut xs = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                xs.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
                labels.push(c);
            }
        }
        (xs, labels)
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn two_by_two_collapses_to_scalars() {
        let (xs, labels) = clusters(1, 2, 2, 10, 5.0);
        let model = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(model.dim(), 1);
        for (x, &l) in xs.iter().zip(&labels) {
            let y = model.project(x).unwrap();
            assert!((y[0] - model.common_vectors().row(l)[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn separated_clusters_give_c_minus_one_directions() {
        for kernel in [KernelSpec::linear(), KernelSpec::cosine(), KernelSpec::rbf(30.0)] {
            let (xs, labels) = clusters(2, 4, 3, 30, 10.0);
            let model = fit(&xs, &labels, kernel, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(model.dim(), 3, "{kernel}");
            assert!(model.eig_values().iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn training_samples_project_to_common_vectors() {
        let (xs, labels) = clusters(3, 5, 4, 50, 10.0);
        let model = fit(&xs, &labels, KernelSpec::cosine(), DEFAULT_RANK_TOL).unwrap();
        let scale = model.common_vectors().max_norm();
        for (x, &l) in xs.iter().zip(&labels) {
            let y = model.project(x).unwrap();
            assert!(dist(&y, model.common_vectors().row(l)) < 1e-6 * scale);
        }
    }

    #[test]
    fn projection_directions_are_orthonormal_in_feature_space() {
        let (xs, labels) = clusters(4, 3, 4, 20, 8.0);
        let model = fit(&xs, &labels, KernelSpec::rbf(25.0), DEFAULT_RANK_TOL).unwrap();
        let k = center(&gram(model.kernel(), &xs).unwrap()).unwrap().into_entries();
        let a = model.coeff();
        let ata = a.transpose() * k * a;
        assert!((ata - DMatrix::identity(model.dim(), model.dim())).amax() < 1e-8);
        let u = model.eig_vectors();
        assert!((u.transpose() * u - DMatrix::identity(model.rank(), model.rank())).amax() < 1e-10);
        let v = model.null_basis();
        assert!((v.transpose() * v - DMatrix::identity(model.dim(), model.dim())).amax() < 1e-10);
    }

    #[test]
    fn midpoint_of_class_samples_maps_to_common_vector() {
        let (xs, labels) = clusters(5, 3, 3, 15, 6.0);
        let model = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap();
        let mid: Vec<f64> = xs[0].iter().zip(&xs[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let y = model.project(&mid).unwrap();
        assert!(dist(&y, model.common_vectors().row(0)) < 1e-6 * model.common_vectors().max_norm());
    }

    #[test]
    fn relabeling_swaps_rows() {
        let (xs, labels) = clusters(6, 2, 3, 12, 6.0);
        let swapped: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
        let a = fit(&xs, &labels, KernelSpec::cosine(), DEFAULT_RANK_TOL).unwrap();
        let b = fit(&xs, &swapped, KernelSpec::cosine(), DEFAULT_RANK_TOL).unwrap();
        for c in 0..2 {
            let (ra, rb) = (a.common_vectors().row(c), b.common_vectors().row(1 - c));
            assert!(dist(ra, rb) < 1e-10);
        }
    }

    #[test]
    fn duplicated_sample_keeps_template_geometry() {
        // the discriminant subspace is unchanged; its basis and origin may move,
        // so compare the distances between templates
        let (mut xs, mut labels) = clusters(7, 3, 3, 20, 8.0);
        let before = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap();
        xs.push(xs[4].clone());
        labels.push(labels[4]);
        let after = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap();
        let (cb, ca) = (before.common_vectors(), after.common_vectors());
        for i in 0..3 {
            for j in 0..3 {
                let (db, da) = (dist(cb.row(i), cb.row(j)), dist(ca.row(i), ca.row(j)));
                assert!((db - da).abs() <= 1e-6 * cb.max_norm());
            }
        }
    }

    #[test]
    fn fit_preconditions() {
        let (xs, labels) = clusters(8, 2, 3, 5, 5.0);
        let mut single = labels.clone();
        single[5] = 2; // class 2 with one sample
        assert!(fit(&xs, &single, KernelSpec::linear(), DEFAULT_RANK_TOL).is_err());
        // the same samples under one class id
        assert!(fit(&xs, &[0; 6], KernelSpec::linear(), DEFAULT_RANK_TOL).is_err());
        assert!(fit(&xs, &labels[..5], KernelSpec::linear(), DEFAULT_RANK_TOL).is_err());
        let gap: Vec<usize> = labels.iter().map(|l| l * 2).collect();
        assert!(fit(&xs, &gap, KernelSpec::linear(), DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn empty_null_space_is_reported() {
        // 2-D inputs with 3 samples per class: within-class scatter spans the
        // whole linear feature space
        let xs = vec![
            vec![0.0, 0.0], vec![1.0, 0.2], vec![0.3, 1.0],
            vec![5.0, 5.0], vec![6.0, 5.1], vec![5.2, 6.3],
        ];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let err = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap_err();
        assert!(err.to_string().contains("null space"), "{err}");
    }

    #[test]
    fn projection_rejects_wrong_length() {
        let (xs, labels) = clusters(9, 2, 2, 6, 5.0);
        let model = fit(&xs, &labels, KernelSpec::linear(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(model.project(&[0.0; 5]).unwrap_err().category(), "dimension");
    }
}
