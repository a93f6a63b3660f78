use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Result, TdaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k rows of length d, orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Nonincreasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse(&self, reduced: &[Vec<f64>]) -> Vec<Vec<f64>> {
        reduced
            .iter()
            .map(|y| {
                let mut x = self.mean.clone();
                for (yc, comp) in y.iter().zip(&self.components) {
                    for (xi, ci) in x.iter_mut().zip(comp) {
                        *xi += yc * ci;
                    }
                }
                x
            })
            .collect()
    }
}

fn to_matrix(coords: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = coords.first().map_or(0, Vec::len);
    if let Some(bad) = coords.iter().find(|r| r.len() != d) {
        return Err(TdaError::ShapeMismatch { expected: d, got: bad.len() });
    }
    Ok(DMatrix::from_fn(coords.len(), d, |i, j| coords[i][j]))
}

/// Top-`k` principal axes of the mean-centred rows.
pub fn pca_fit(coords: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let x = to_matrix(coords)?;
    let (n, d) = x.shape();
    if n < 2 || k == 0 || k > (n - 1).min(d) {
        return Err(TdaError::InvalidDimension { k, n, d });
    }
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    if centred.iter().all(|&v| v == 0.0) {
        return Err(TdaError::DegenerateInput);
    }

    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &r in order.iter().take(k) {
        let mut row: Vec<f64> = v_t.row(r).iter().copied().collect();
        // sign: the largest-magnitude entry is positive (first one on ties)
        let pivot = row
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > row[best].abs() { i } else { best });
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        let s = svd.singular_values[r];
        explained_variance.push(s * s / (n as f64 - 1.0));
    }
    Ok(PcaModel { mean, components, explained_variance })
}

/// `(coords − mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, coords: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    coords
        .iter()
        .map(|row| {
            if row.len() != model.dim() {
                return Err(TdaError::ShapeMismatch { expected: model.dim(), got: row.len() });
            }
            Ok(model
                .components
                .iter()
                .map(|c| c.iter().zip(row.iter().zip(&model.mean)).map(|(ci, (x, m))| ci * (x - m)).sum())
                .collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn mean_maps_to_origin() {
        let data = gaussian(1, 30, 4);
        let m = pca_fit(&data, 3).unwrap();
        let out = pca_transform(&m, &[m.mean.clone()]).unwrap();
        assert!(out[0].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(out[0].len(), 3);
    }

    #[test]
    fn full_rank_transform_preserves_distances() {
        let data = gaussian(2, 25, 4);
        let m = pca_fit(&data, 4).unwrap();
        let y = pca_transform(&m, &data).unwrap();
        for i in 0..data.len() {
            for j in 0..i {
                assert!((dist(&data[i], &data[j]) - dist(&y[i], &y[j])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn isotropic_first_component_takes_about_one_share() {
        let data = gaussian(3, 4000, 4);
        let m = pca_fit(&data, 1).unwrap();
        // top eigenvalue of a 4000-sample isotropic covariance sits a little above 1
        assert!((m.explained_variance[0] - 1.0).abs() < 0.15, "{}", m.explained_variance[0]);
    }

    #[test]
    fn degenerate_and_invalid() {
        assert!(matches!(pca_fit(&vec![vec![1.0, 2.0]; 5], 1), Err(TdaError::DegenerateInput)));
        assert!(matches!(pca_fit(&[vec![1.0, 2.0]], 1), Err(TdaError::InvalidDimension { .. })));
        assert!(matches!(pca_fit(&gaussian(4, 3, 5), 3), Err(TdaError::InvalidDimension { .. })));
        let m = pca_fit(&gaussian(4, 10, 3), 2).unwrap();
        assert!(matches!(pca_transform(&m, &[vec![0.0; 2]]), Err(TdaError::ShapeMismatch { .. })));
    }

    #[test]
    fn sign_convention() {
        let m = pca_fit(&gaussian(5, 40, 6), 4).unwrap();
        for c in &m.components {
            let max = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let first = c.iter().find(|v| v.abs() == max).unwrap();
            assert!(*first > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn orthonormal_ordered_and_projective(seed in any::<u64>(), n in 6usize..40, d in 2usize..7) {
            let data = gaussian(seed, n, d);
            let kmax = (n - 1).min(d);
            let m = pca_fit(&data, kmax).unwrap();
            for i in 0..kmax {
                for j in 0..kmax {
                    let dot: f64 = m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - expected).abs() <= 1e-9);
                }
            }
            prop_assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));

            let mut previous = f64::INFINITY;
            for k in 1..=kmax {
                let mk = pca_fit(&data, k).unwrap();
                let back = mk.inverse(&pca_transform(&mk, &data).unwrap());
                let err: f64 = data.iter().zip(&back).map(|(a, b)| dist(a, b).powi(2)).sum();
                prop_assert!(err <= previous + 1e-9);
                previous = err;

                // inverse(transform(x)) is the orthogonal projection onto the span
                for (x, p) in data.iter().zip(&back) {
                    let r: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
                    for c in &mk.components {
                        let dot: f64 = r.iter().zip(c).map(|(a, b)| a * b).sum();
                        prop_assert!(dot.abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
