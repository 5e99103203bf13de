//! Fast direct solver for the 5-point Dirichlet Poisson problem via the
//! type-I discrete sine transform.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// DST-I of length `n`, computed through a complex FFT of the odd extension of
/// length `2(n + 1)`. Unnormalized: applying it twice multiplies by
/// `(n + 1) / 2`.
struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        Self { n, fft: planner.plan_fft_forward(2 * (n + 1)) }
    }

    fn apply(&self, x: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        buf.fill(Complex64::new(0.0, 0.0));
        for k in 0..n {
            buf[k + 1].re = x[k];
            buf[2 * n + 1 - k].re = -x[k];
        }
        self.fft.process(buf);
        for k in 0..n {
            x[k] = -buf[k + 1].im / 2.0;
        }
    }
}

/// Solves `Δu = rhs` with the 5-point Laplacian on the lattice of `rhs`
/// (spacings `dx`, `dy`) and `u = 0` on the outer ring of nodes. Boundary
/// values of `rhs` are ignored.
pub fn poisson_solve_dirichlet(rhs: &Grid) -> Result<Grid> {
    let l = *rhs.lattice();
    if l.nx < 3 || l.ny < 3 {
        return Err(Error::Invalid(format!("Poisson grid must be at least 3x3, got {}x{}", l.nx, l.ny)));
    }
    if rhs.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("Poisson right-hand side has non-finite values".into()));
    }
    let (mx, my) = (l.nx - 2, l.ny - 2);
    let mut planner = FftPlanner::new();
    let tx = Dst1::new(mx, &mut planner);
    let ty = Dst1::new(my, &mut planner);
    // Interior block, row-major in x.
    let mut a = vec![0.0; mx * my];
    for j in 0..my {
        for i in 0..mx {
            a[j * mx + i] = rhs.at(i + 1, j + 1);
        }
    }
    let transform = |a: &mut [f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (mx + 1)];
        for row in a.chunks_mut(mx) {
            tx.apply(row, &mut buf);
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (my + 1)];
        let mut col = vec![0.0; my];
        for i in 0..mx {
            for j in 0..my {
                col[j] = a[j * mx + i];
            }
            ty.apply(&mut col, &mut buf);
            for j in 0..my {
                a[j * mx + i] = col[j];
            }
        }
    };
    transform(&mut a);
    let eig = |k: usize, n: usize, h: f64| {
        let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
        -4.0 * s * s / (h * h)
    };
    let ex: Vec<f64> = (1..=mx).map(|k| eig(k, mx, l.dx)).collect();
    let ey: Vec<f64> = (1..=my).map(|k| eig(k, my, l.dy)).collect();
    for j in 0..my {
        for i in 0..mx {
            a[j * mx + i] /= ex[i] + ey[j];
        }
    }
    transform(&mut a);
    let norm = 4.0 / ((mx + 1) * (my + 1)) as f64;
    let mut u = Grid::filled(l, 0.0);
    for j in 0..my {
        for i in 0..mx {
            u.values_mut()[l.index(i + 1, j + 1)] = a[j * mx + i] * norm;
        }
    }
    Ok(u)
}

/// 5-point Laplacian at interior nodes (zero on the boundary ring).
pub fn laplacian(u: &Grid) -> Grid {
    let l = *u.lattice();
    let mut out = Grid::filled(l, 0.0);
    for j in 1..l.ny.saturating_sub(1) {
        for i in 1..l.nx.saturating_sub(1) {
            let c = u.at(i, j);
            let lap = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) / (l.dx * l.dx)
                + (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) / (l.dy * l.dy);
            out.values_mut()[l.index(i, j)] = lap;
        }
    }
    out
}

/// `max |Δu - rhs| / max |rhs|` over interior nodes.
pub fn relative_residual(u: &Grid, rhs: &Grid) -> f64 {
    let l = *u.lattice();
    let lap = laplacian(u);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for j in 1..l.ny - 1 {
        for i in 1..l.nx - 1 {
            num = num.max((lap.at(i, j) - rhs.at(i, j)).abs());
            den = den.max(rhs.at(i, j).abs());
        }
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
