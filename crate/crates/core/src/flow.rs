//! Reconstruction of a quasiconformal map with prescribed dilatation by
//! integrating a vector-field flow from the identity, with the velocity at
//! each time obtained from two Dirichlet Poisson problems.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dilatation::numeric_dilatation;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Grid, Lattice};
use crate::poisson::poisson_solve_dirichlet;

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub steps: usize,
    /// Fractional margin added on each side of the point cloud's bounding box.
    pub margin: f64,
    /// Node spacing of the Poisson grid; defaults to the site spacing.
    pub box_spacing: Option<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { steps: 20, margin: 0.1, box_spacing: None }
    }
}

/// Tracked images of the lattice sites and the running Wirtinger
/// derivatives of the map at each site.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub lattice: Lattice,
    pub points: Vec<Complex64>,
    pub dz: Vec<Complex64>,
    pub dzbar: Vec<Complex64>,
}

impl FlowState {
    pub fn identity(lattice: Lattice) -> Self {
        let n = lattice.len();
        Self {
            t: 0.0,
            lattice,
            points: lattice.points(),
            dz: vec![Complex64::new(1.0, 0.0); n],
            dzbar: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Lower-left and upper-right corners of the point cloud.
    pub fn bounds(&self) -> (Complex64, Complex64) {
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        (lo, hi)
    }

    pub fn map(&self) -> Result<ComplexGrid> {
        ComplexGrid::new(self.lattice, self.points.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub max_speed: f64,
    pub box_lo: Complex64,
    pub box_hi: Complex64,
}

/// Regular grid covering the state's point cloud with the configured margin.
pub fn enclosing_box(state: &FlowState, opts: &FlowOptions) -> Result<Lattice> {
    let (lo, hi) = state.bounds();
    let size = hi - lo;
    let h = opts.box_spacing.unwrap_or(state.lattice.dx.min(state.lattice.dy));
    let pad = opts.margin * size.re.max(size.im);
    let (x0, y0) = (lo.re - pad, lo.im - pad);
    let nx = ((size.re + 2.0 * pad) / h).ceil() as usize + 1;
    let ny = ((size.im + 2.0 * pad) / h).ceil() as usize + 1;
    if !x0.is_finite() || !y0.is_finite() || nx * ny > 50_000_000 {
        return Err(Error::Flow { t: state.t, reason: "point cloud has no usable bounding box".into() });
    }
    Lattice::new(nx.max(3), ny.max(3), x0, y0, h, h)
}

/// Per-site values `mu*/(1 - t^2 |mu*|^2) * dz/conj(dz)` for the schedule
/// `mu_t = t mu*`.
pub fn sigma_values(mu_star: &ComplexGrid, state: &FlowState) -> Result<Vec<Complex64>> {
    let t = state.t;
    mu_star
        .values()
        .iter()
        .zip(&state.dz)
        .enumerate()
        .map(|(k, (&m, &dz))| {
            let tm = t * m.norm();
            if tm >= 1.0 {
                return Err(Error::Distortion { site: k, modulus: tm });
            }
            if dz.norm() == 0.0 {
                return Err(Error::Flow { t, reason: format!("vanishing derivative at site {k}") });
            }
            Ok(m / (1.0 - tm * tm) * (dz / dz.conj()))
        })
        .collect()
}

/// Linear interpolation of per-site values, placed at the tracked images,
/// onto `grid` through the two-triangle split of each lattice cell; nodes
/// outside the image of the lattice get zero.
pub fn rasterize(values: &[Complex64], state: &FlowState, grid: &Lattice) -> ComplexGrid {
    let l = state.lattice;
    let mut out = ComplexGrid::filled(*grid, Complex64::new(0.0, 0.0));
    let mut covered = vec![false; grid.len()];
    let p = &state.points;
    for j in 0..l.ny - 1 {
        for i in 0..l.nx - 1 {
            let a = l.index(i, j);
            let b = l.index(i + 1, j);
            let c = l.index(i + 1, j + 1);
            let d = l.index(i, j + 1);
            for tri in [[a, b, c], [a, c, d]] {
                let [p0, p1, p2] = tri.map(|k| p[k]);
                let det = (p1.re - p0.re) * (p2.im - p0.im) - (p2.re - p0.re) * (p1.im - p0.im);
                if det.abs() < 1e-300 {
                    continue;
                }
                let xmin = p0.re.min(p1.re).min(p2.re);
                let xmax = p0.re.max(p1.re).max(p2.re);
                let ymin = p0.im.min(p1.im).min(p2.im);
                let ymax = p0.im.max(p1.im).max(p2.im);
                let i0 = ((xmin - grid.x0) / grid.dx).ceil().max(0.0) as usize;
                let i1 = (((xmax - grid.x0) / grid.dx).floor() as isize).min(grid.nx as isize - 1);
                let j0 = ((ymin - grid.y0) / grid.dy).ceil().max(0.0) as usize;
                let j1 = (((ymax - grid.y0) / grid.dy).floor() as isize).min(grid.ny as isize - 1);
                if i1 < 0 || j1 < 0 {
                    continue;
                }
                for gj in j0..=j1 as usize {
                    for gi in i0..=i1 as usize {
                        let g = grid.index(gi, gj);
                        if covered[g] {
                            continue;
                        }
                        let q = grid.point(gi, gj);
                        let l1 = ((q.re - p0.re) * (p2.im - p0.im) - (p2.re - p0.re) * (q.im - p0.im)) / det;
                        let l2 = ((p1.re - p0.re) * (q.im - p0.im) - (q.re - p0.re) * (p1.im - p0.im)) / det;
                        let l0 = 1.0 - l1 - l2;
                        let tol = -1e-12;
                        if l0 >= tol && l1 >= tol && l2 >= tol {
                            out.values_mut()[g] = values[tri[0]] * l0 + values[tri[1]] * l1 + values[tri[2]] * l2;
                            covered[g] = true;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `sigma_t` on the enclosing box of the current state.
pub fn sigma_field(mu_star: &ComplexGrid, state: &FlowState, opts: &FlowOptions) -> Result<ComplexGrid> {
    let values = sigma_values(mu_star, state)?;
    Ok(rasterize(&values, state, &enclosing_box(state, opts)?))
}

/// Potential, stream function and velocity `u + iv` on a box grid.
#[derive(Clone, Debug)]
pub struct VelocityField {
    pub potential: Grid,
    pub stream: Grid,
    pub velocity: ComplexGrid,
}

fn partial(g: &Grid, i: usize, j: usize, along_x: bool) -> f64 {
    let l = g.lattice();
    let (k, n, h) = if along_x { (i, l.nx, l.dx) } else { (j, l.ny, l.dy) };
    let at = |m: usize| if along_x { g.at(m, j) } else { g.at(i, m) };
    if k == 0 {
        (at(1) - at(0)) / h
    } else if k == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

/// Solves `ΔΨ = 2 Re σ`, `ΔΦ = 2 Im σ` with zero boundary values and forms
/// `u = Φ_y + Ψ_x`, `v = Φ_x - Ψ_y`, so that `d/dwbar (u + iv) = σ`.
pub fn velocity_field(sigma: &ComplexGrid) -> Result<VelocityField> {
    let l = *sigma.lattice();
    let stream = poisson_solve_dirichlet(&sigma.map(|s| 2.0 * s.re))?;
    let potential = poisson_solve_dirichlet(&sigma.map(|s| 2.0 * s.im))?;
    let mut v = Vec::with_capacity(l.len());
    for j in 0..l.ny {
        for i in 0..l.nx {
            let u = partial(&potential, i, j, false) + partial(&stream, i, j, true);
            let w = partial(&potential, i, j, true) - partial(&stream, i, j, false);
            v.push(Complex64::new(u, w));
        }
    }
    Ok(VelocityField { potential, stream, velocity: ComplexGrid::new(l, v)? })
}

/// `(V_w, V_wbar)` of a complex velocity grid by differences.
fn velocity_derivatives(v: &ComplexGrid) -> Result<(ComplexGrid, ComplexGrid)> {
    let l = *v.lattice();
    let re = v.map(|c| c.re);
    let im = v.map(|c| c.im);
    let mut vw = Vec::with_capacity(l.len());
    let mut vwbar = Vec::with_capacity(l.len());
    for j in 0..l.ny {
        for i in 0..l.nx {
            let vx = Complex64::new(partial(&re, i, j, true), partial(&im, i, j, true));
            let vy = Complex64::new(partial(&re, i, j, false), partial(&im, i, j, false));
            let ivy = Complex64::i() * vy;
            vw.push(0.5 * (vx - ivy));
            vwbar.push(0.5 * (vx + ivy));
        }
    }
    Ok((ComplexGrid::new(l, vw)?, ComplexGrid::new(l, vwbar)?))
}

/// One explicit Euler step `f <- f + eps V(f)`. Derivatives follow the chain
/// rule `dz <- dz + eps (V_w dz + V_wbar conj(dzbar))` and
/// `dzbar <- dzbar + eps (V_w dzbar + V_wbar conj(dz))`.
pub fn flow_step(
    state: &FlowState,
    eps: f64,
    mu_star: &ComplexGrid,
    opts: &FlowOptions,
) -> Result<(FlowState, StepDiagnostics)> {
    if !(eps > 0.0) || state.t + eps > 1.0 + 1e-12 {
        return Err(Error::Invalid(format!("step {eps} from t = {} leaves [0, 1]", state.t)));
    }
    if mu_star.lattice() != &state.lattice {
        return Err(Error::Invalid("target dilatation and flow state live on different lattices".into()));
    }
    let boxl = enclosing_box(state, opts)?;
    let sigma = rasterize(&sigma_values(mu_star, state)?, state, &boxl);
    let field = velocity_field(&sigma)?;
    let (vw, vwbar) = velocity_derivatives(&field.velocity)?;
    let max_speed = field.velocity.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !max_speed.is_finite() {
        return Err(Error::Flow { t: state.t, reason: "non-finite velocity".into() });
    }
    let updates: Vec<(Complex64, Complex64, Complex64)> = (0..state.points.len())
        .into_par_iter()
        .map(|k| {
            let p = state.points[k];
            let v = field.velocity.sample_bilinear_clamped(p);
            let a = vw.sample_bilinear_clamped(p);
            let b = vwbar.sample_bilinear_clamped(p);
            let (dz, dzbar) = (state.dz[k], state.dzbar[k]);
            (p + eps * v, dz + eps * (a * dz + b * dzbar.conj()), dzbar + eps * (a * dzbar + b * dz.conj()))
        })
        .collect();
    let next = FlowState {
        t: (state.t + eps).min(1.0),
        lattice: state.lattice,
        points: updates.iter().map(|u| u.0).collect(),
        dz: updates.iter().map(|u| u.1).collect(),
        dzbar: updates.iter().map(|u| u.2).collect(),
    };
    let (lo, hi) = next.bounds();
    Ok((next, StepDiagnostics { t: state.t + eps, max_speed, box_lo: lo, box_hi: hi }))
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Final map on the original lattice.
    pub map: ComplexGrid,
    /// Its measured dilatation and scale.
    pub mu: ComplexGrid,
    pub phi: Grid,
    pub log: Vec<StepDiagnostics>,
}

/// Integrates the flow from the identity to `t = 1` in `opts.steps` uniform
/// steps. Dilatation and scale of the result come from finite differences of
/// the final map.
pub fn reconstruct_map(mu_star: &ComplexGrid, opts: &FlowOptions) -> Result<Reconstruction> {
    if opts.steps == 0 {
        return Err(Error::Invalid("flow needs at least one step".into()));
    }
    let worst = mu_star.values().iter().map(|m| m.norm()).fold(0.0, f64::max);
    if worst > 1.0 - 1e-3 {
        return Err(Error::Invalid(format!("target dilatation reaches modulus {worst}, above 1 - 1e-3")));
    }
    let eps = 1.0 / opts.steps as f64;
    let mut state = FlowState::identity(*mu_star.lattice());
    let mut log = Vec::with_capacity(opts.steps);
    for s in 0..opts.steps {
        let (next, diag) = flow_step(&state, eps, mu_star, opts)
            .map_err(|e| Error::Flow { t: state.t, reason: format!("step {s} failed: {e}") })?;
        log::debug!("flow t={:.3} max speed {:.4e}", diag.t, diag.max_speed);
        state = next;
        state.t = (s + 1) as f64 * eps;
        log.push(diag);
    }
    let map = state.map()?;
    let (mu, phi) = numeric_dilatation(&map).map_err(|e| Error::Flow { t: 1.0, reason: e.to_string() })?;
    Ok(Reconstruction { map, mu, phi, log })
}

/// Per-step diagnostics as CSV: `t,max_speed,box_x0,box_y0,box_x1,box_y1`.
pub fn write_diagnostics_csv<W: std::io::Write>(log: &[StepDiagnostics], mut w: W) -> Result<()> {
    writeln!(w, "t,max_speed,box_x0,box_y0,box_x1,box_y1")?;
    for d in log {
        writeln!(w, "{},{},{},{},{},{}", d.t, d.max_speed, d.box_lo.re, d.box_lo.im, d.box_hi.re, d.box_hi.im)?;
    }
    Ok(())
}
