use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Shift-then-rotate map `z = Mᵀ(x − o)`.
///
/// `rotation` is stored row-major; `None` stands for the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub shift: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
}

impl TransformSpec {
    pub fn identity(n: usize) -> Self {
        TransformSpec {
            shift: vec![0.0; n],
            rotation: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Applies the transform to `x` (already restricted to the component's coordinates).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.shift).map(|(a, o)| a - o).collect();
        match &self.rotation {
            None => y,
            Some(m) => {
                let n = y.len();
                let mut z = vec![0.0; n];
                for (row, yi) in m.iter().zip(&y) {
                    for (zj, mij) in z.iter_mut().zip(row) {
                        *zj += mij * yi;
                    }
                }
                z
            }
        }
    }

    /// Inverse map: the `x` with `apply(x) = z`, i.e. `x = o + M z`.
    pub fn preimage(&self, z: &[f64]) -> Vec<f64> {
        match &self.rotation {
            None => z.iter().zip(&self.shift).map(|(a, o)| a + o).collect(),
            Some(m) => m
                .iter()
                .zip(&self.shift)
                .map(|(row, o)| o + row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                .collect(),
        }
    }
}

/// Random orthogonal matrix from the QR factorization of a seeded Gaussian
/// matrix, with column signs fixed so the draw is Haar-distributed.
pub fn make_rotation(dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = seed::rng(seed);
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok((0..dim)
        .map(|i| (0..dim).map(|j| q[(i, j)]).collect())
        .collect())
}

/// `max |MᵀM − I|` over all entries.
pub fn orthogonality_error(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = (0..n).map(|k| m[k][a] * m[k][b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_is_plus_or_minus_one() {
        for s in 0..10 {
            let m = make_rotation(1, s).unwrap();
            assert_eq!(m.len(), 1);
            assert_eq!(m[0][0].abs(), 1.0);
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(make_rotation(0, 1), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn deterministic_and_orthogonal() {
        assert_eq!(make_rotation(8, 7).unwrap(), make_rotation(8, 7).unwrap());
        assert_ne!(make_rotation(8, 7).unwrap(), make_rotation(8, 8).unwrap());
        let m = make_rotation(16, 3).unwrap();
        assert!(orthogonality_error(&m) <= 1e-9);
        let det = DMatrix::from_fn(16, 16, |i, j| m[i][j]).determinant();
        assert!((det.abs() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn preimage_inverts_apply() {
        let t = TransformSpec {
            shift: vec![1.5, -2.0, 3.25],
            rotation: Some(make_rotation(3, 9).unwrap()),
        };
        let z = [0.3, -0.7, 2.0];
        let back = t.apply(&t.preimage(&z));
        for (a, b) in back.iter().zip(z) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
