//! Dense linear-algebra helpers shared by simulation and estimation.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch, LltRegularization};
use faer::{Mat, MatMut, Par};

use crate::error::{Error, Result};

/// Diagonal jitter tried in turn, relative to the matrix scale.
pub const JITTER_LADDER: [f64; 5] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Cholesky factor of a symmetric matrix written by `fill` (lower triangle),
/// retrying with increasing diagonal jitter. Returns the factor (lower
/// triangle meaningful) and the jitter that succeeded.
pub fn cholesky_jittered(n: usize, scale: f64, fill: impl Fn(MatMut<'_, f64>)) -> Result<(Mat<f64>, f64)> {
    let mut a = Mat::<f64>::zeros(n, n);
    let mut buf = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
    let mut last_pivot = 0;
    for &rel in &JITTER_LADDER {
        fill(a.as_mut());
        let jitter = rel * scale;
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        match cholesky_in_place(
            a.as_mut(),
            LltRegularization::default(),
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        ) {
            Ok(_) => return Ok((a, jitter)),
            Err(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => last_pivot = index,
        }
    }
    Err(Error::Simulation(format!(
        "covariance of {n} points not positive definite after jitter {:.1e} x scale {scale:.3e} \
         (first non-positive pivot at {last_pivot})",
        JITTER_LADDER[JITTER_LADDER.len() - 1]
    )))
}

/// `y = L z` for a lower-triangular factor stored in the lower part of `l`.
pub fn lower_mul(l: &Mat<f64>, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut y = vec![0.0; n];
    for j in 0..n {
        let col = l.col_as_slice(j);
        let zj = z[j];
        for i in j..n {
            y[i] += col[i] * zj;
        }
    }
    y
}

/// `(log det S, y' S^{-1} y)` for symmetric `s` via Cholesky with the jitter
/// ladder; `None` when the matrix is not positive definite.
pub fn logdet_and_quadratic(s: &Mat<f64>, y: &[f64]) -> Option<(f64, f64)> {
    let n = s.nrows();
    let scale = (0..n).map(|i| s[(i, i)].abs()).sum::<f64>() / n.max(1) as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (l, _) = cholesky_jittered(n, scale, |mut a| {
        for j in 0..n {
            for i in j..n {
                a[(i, j)] = s[(i, j)];
            }
        }
    })
    .ok()?;
    let mut logdet = 0.0;
    for i in 0..n {
        logdet += l[(i, i)].ln();
    }
    // Forward substitution L w = y.
    let mut w = y.to_vec();
    for j in 0..n {
        let col = l.col_as_slice(j);
        w[j] /= col[j];
        let wj = w[j];
        for i in j + 1..n {
            w[i] -= col[i] * wj;
        }
    }
    let quad = w.iter().map(|v| v * v).sum();
    Some((2.0 * logdet, quad))
}
