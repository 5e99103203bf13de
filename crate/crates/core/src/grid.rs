//! Regular planar lattices of real or complex samples and their on-disk forms.
//!
//! Values are stored row-major with `x` varying fastest: cell `(i, j)` lives at
//! index `j * nx + i` and sits at `(x0 + i*dx, y0 + j*dy)`.
//!
//! The binary `GRD1` layout is, all little-endian:
//!
//! ```text
//! b"GRD1" | u8 kind (0 real, 1 complex) | u32 nx | u32 ny | f64 x0 y0 dx dy | values
//! ```
//!
//! with complex values interleaved as `re, im`.

use std::io::{Read, Write};
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GRD1";

/// Geometry shared by every grid: size, origin and spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Invalid(format!("lattice must be non-empty, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::Invalid(format!("lattice spacing must be positive, got ({dx}, {dy})")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::Invalid("lattice origin must be finite".into()));
        }
        Ok(Self { nx, ny, x0, y0, dx, dy })
    }

    /// `nx` by `ny` sites spanning `[0, 1]^2`, edges included.
    pub fn unit_square(nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2, "unit_square needs at least 2 sites per side");
        Self { nx, ny, x0: 0.0, y0: 0.0, dx: 1.0 / (nx - 1) as f64, dy: 1.0 / (ny - 1) as f64 }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.coords(k);
                self.point(i, j)
            })
            .collect()
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.dy
    }

    /// Area of the rectangle spanned by the sites.
    pub fn area(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx * (self.ny - 1) as f64 * self.dy
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let tol = 1e-12 * (self.dx + self.dy);
        z.re >= self.x0 - tol && z.re <= self.x_max() + tol && z.im >= self.y0 - tol && z.im <= self.y_max() + tol
    }

    /// Locate `z` as a cell index plus fractional offsets in `[0, 1]`.
    /// Points outside the lattice are clamped onto it.
    pub fn locate_clamped(&self, z: Complex64) -> (usize, usize, f64, f64) {
        let fx = ((z.re - self.x0) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((z.im - self.y0) / self.dy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        (i, j, fx - i as f64, fy - j as f64)
    }
}

/// Sample values that can live on a lattice and be written as `GRD1`.
pub trait GridValue: Copy + Default + PartialEq + std::fmt::Debug + Send + Sync {
    const KIND: u8;
    fn is_finite_value(&self) -> bool;
    fn write_le(&self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> (Self, usize);
    fn csv_header() -> &'static str;
    fn csv_fields(&self) -> String;
}

impl GridValue for f64 {
    const KIND: u8 = 0;

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> (Self, usize) {
        (read_f64(bytes, 0), 8)
    }

    fn csv_header() -> &'static str {
        "x,y,value"
    }

    fn csv_fields(&self) -> String {
        format!("{self}")
    }
}

impl GridValue for Complex64 {
    const KIND: u8 = 1;

    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> (Self, usize) {
        (Complex64::new(read_f64(bytes, 0), read_f64(bytes, 8)), 16)
    }

    fn csv_header() -> &'static str {
        "x,y,re,im"
    }

    fn csv_fields(&self) -> String {
        format!("{},{}", self.re, self.im)
    }
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    let mut b = [0u8; 8];
    b.copy_from_slice(&bytes[at..at + 8]);
    f64::from_le_bytes(b)
}

/// Values of type `T` on a [`Lattice`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    lattice: Lattice,
    values: Vec<T>,
}

/// Real-valued grid (fields, scale maps).
pub type Grid = Field<f64>;
/// Complex-valued grid (maps, dilatation fields).
pub type ComplexGrid = Field<Complex64>;

impl<T: GridValue> Field<T> {
    pub fn new(lattice: Lattice, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::Invalid(format!("grid expects {} values, got {}", lattice.len(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::Invalid(format!("non-finite grid value at index {k}")));
        }
        Ok(Self { lattice, values })
    }

    pub fn filled(lattice: Lattice, value: T) -> Self {
        Self { lattice, values: vec![value; lattice.len()] }
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(Complex64) -> T) -> Self {
        let values = lattice.points().into_iter().map(&mut f).collect();
        Self { lattice, values }
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.lattice.index(i, j)]
    }

    pub fn map<U: GridValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { lattice: self.lattice, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn to_grd1_bytes(&self) -> Vec<u8> {
        let l = &self.lattice;
        let width = if T::KIND == 0 { 8 } else { 16 };
        let mut out = Vec::with_capacity(4 + 1 + 8 + 32 + width * l.len());
        out.extend_from_slice(MAGIC);
        out.push(T::KIND);
        out.extend_from_slice(&(l.nx as u32).to_le_bytes());
        out.extend_from_slice(&(l.ny as u32).to_le_bytes());
        for v in [l.x0, l.y0, l.dx, l.dy] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.values {
            v.write_le(&mut out);
        }
        out
    }

    pub fn write_grd1<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_grd1_bytes())?;
        Ok(())
    }

    pub fn from_grd1_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 1 + 4 + 4 + 32;
        if bytes.len() < HEADER || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing GRD1 magic".into()));
        }
        if bytes[4] != T::KIND {
            return Err(Error::Format(format!("GRD1 kind {} where {} was expected", bytes[4], T::KIND)));
        }
        let nx = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let ny = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let lattice =
            Lattice::new(nx, ny, read_f64(bytes, 13), read_f64(bytes, 21), read_f64(bytes, 29), read_f64(bytes, 37))?;
        let width = if T::KIND == 0 { 8 } else { 16 };
        let body = &bytes[HEADER..];
        if body.len() != width * lattice.len() {
            return Err(Error::Format(format!(
                "GRD1 body holds {} bytes, expected {}",
                body.len(),
                width * lattice.len()
            )));
        }
        let values = body.chunks_exact(width).map(|c| T::read_le(c).0).collect();
        Self::new(lattice, values)
    }

    pub fn read_grd1<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_grd1_bytes(&bytes)
    }

    /// CSV with one row per site: `x,y,value` or `x,y,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", T::csv_header())?;
        for (k, v) in self.values.iter().enumerate() {
            let (i, j) = self.lattice.coords(k);
            let z = self.lattice.point(i, j);
            writeln!(w, "{},{},{}", z.re, z.im, v.csv_fields())?;
        }
        Ok(())
    }
}

impl<T> Field<T>
where
    T: GridValue + Add<Output = T> + Mul<f64, Output = T>,
{
    /// Bilinear interpolation; `None` outside the lattice rectangle.
    pub fn sample_bilinear(&self, z: Complex64) -> Option<T> {
        if !self.lattice.contains(z) {
            return None;
        }
        Some(self.sample_bilinear_clamped(z))
    }

    /// Bilinear interpolation with coordinates clamped onto the lattice.
    pub fn sample_bilinear_clamped(&self, z: Complex64) -> T {
        let l = &self.lattice;
        if l.nx == 1 || l.ny == 1 {
            let (i, j, _, _) = l.locate_clamped(z);
            return self.at(i.min(l.nx - 1), j.min(l.ny - 1));
        }
        let (i, j, s, t) = l.locate_clamped(z);
        self.at(i, j) * ((1.0 - s) * (1.0 - t))
            + self.at(i + 1, j) * (s * (1.0 - t))
            + self.at(i, j + 1) * ((1.0 - s) * t)
            + self.at(i + 1, j + 1) * (s * t)
    }
}
