use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

/// Fixed chunk length for parallel sums, so results do not depend on thread count.
pub(crate) const SUM_CHUNK: usize = 4096;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SABG";
const VERSION: u32 = 1;

/// Axis-aligned box sampled at the centers of an `n x n` cell array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Complex64,
    pub half_width_x: f64,
    pub half_width_y: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(center: Complex64, half_width_x: f64, half_width_y: f64, n: usize) -> Result<Self> {
        if !(half_width_x > 0.0) || !(half_width_y > 0.0) || !half_width_x.is_finite() || !half_width_y.is_finite() {
            return Err(Error::InvalidArgument("half-widths must be positive and finite".into()));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid size must be a power of two >= 4, got {n}")));
        }
        Ok(GridSpec {
            center,
            half_width_x,
            half_width_y,
            n,
        })
    }

    /// Square box centered at the origin.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), half_width, half_width, n)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width_x / self.n as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_width_y / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, col: usize) -> f64 {
        self.center.re - self.half_width_x + (col as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, row: usize) -> f64 {
        self.center.im - self.half_width_y + (row as f64 + 0.5) * self.dy()
    }

    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.x(col), self.y(row))
    }

    pub fn point_at(&self, index: usize) -> Complex64 {
        self.point(index / self.n, index % self.n)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= self.half_width_x && (z.im - self.center.im).abs() <= self.half_width_y
    }

    /// Inside the central sub-box of half the size (the region away from zero padding).
    pub fn in_inner_half(&self, z: Complex64) -> bool {
        (z.re - self.center.re).abs() <= 0.5 * self.half_width_x
            && (z.im - self.center.im).abs() <= 0.5 * self.half_width_y
    }

    /// Fractional (row, col) index of `z`; cell centers sit at integers.
    pub fn fractional_index(&self, z: Complex64) -> (f64, f64) {
        let col = (z.re - self.center.re + self.half_width_x) / self.dx() - 0.5;
        let row = (z.im - self.center.im + self.half_width_y) / self.dy() - 0.5;
        (row, col)
    }

    pub fn same_geometry(&self, other: &GridSpec) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    /// Pairs of little-endian `f32`.
    Complex64,
    /// Pairs of little-endian `f64`.
    Complex128,
}

impl Dtype {
    fn tag(self) -> u32 {
        match self {
            Dtype::Complex64 => 1,
            Dtype::Complex128 => 2,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            1 => Ok(Dtype::Complex64),
            2 => Ok(Dtype::Complex128),
            t => Err(Error::Io(format!("unknown dtype tag {t}"))),
        }
    }
}

/// Complex samples at cell centers, row-major with rows along `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    spec: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        ComplexGrid {
            spec,
            data: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    pub fn from_data(spec: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::GridMismatch(format!("expected {} samples, got {}", spec.len(), data.len())));
        }
        Ok(ComplexGrid { spec, data })
    }

    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let data = (0..spec.len()).into_par_iter().map(|i| f(spec.point_at(i))).collect();
        ComplexGrid { spec, data }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.spec.n + col]
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        ComplexGrid {
            spec: self.spec,
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<F>(&self, other: &ComplexGrid, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        self.check_same(other)?;
        Ok(ComplexGrid {
            spec: self.spec,
            data: self.data.par_iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same(&self, other: &ComplexGrid) -> Result<()> {
        if self.spec.same_geometry(&other.spec) {
            Ok(())
        } else {
            Err(Error::GridMismatch("grids have different geometry".into()))
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.par_iter().map(|v| v.norm()).reduce(|| 0.0, f64::max)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let parts: Vec<f64> = self
            .data
            .par_chunks(SUM_CHUNK)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum())
            .collect();
        parts.iter().sum()
    }

    pub fn mean(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() / self.data.len() as f64
    }

    /// First nonzero sample outside the inner half-box, if any.
    pub fn support_outside_inner_half(&self) -> Option<Complex64> {
        (0..self.spec.len())
            .find(|&i| self.data[i] != Complex64::new(0.0, 0.0) && !self.spec.in_inner_half(self.spec.point_at(i)))
            .map(|i| self.spec.point_at(i))
    }

    /// Bilinear interpolation; points outside the node hull are clamped to the edge cells.
    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        let n = self.spec.n;
        let (r, c) = self.spec.fractional_index(z);
        let r = r.clamp(0.0, (n - 1) as f64);
        let c = c.clamp(0.0, (n - 1) as f64);
        let r0 = (r.floor() as usize).min(n - 2);
        let c0 = (c.floor() as usize).min(n - 2);
        let tr = r - r0 as f64;
        let tc = c - c0 as f64;
        let v00 = self.get(r0, c0);
        let v01 = self.get(r0, c0 + 1);
        let v10 = self.get(r0 + 1, c0);
        let v11 = self.get(r0 + 1, c0 + 1);
        (v00 * (1.0 - tc) + v01 * tc) * (1.0 - tr) + (v10 * (1.0 - tc) + v11 * tc) * tr
    }

    pub fn write_binary<W: Write>(&self, mut w: W, dtype: Dtype) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&dtype.tag().to_le_bytes())?;
        w.write_all(&(self.spec.n as u64).to_le_bytes())?;
        for v in [
            self.spec.center.re,
            self.spec.center.im,
            self.spec.half_width_x,
            self.spec.half_width_y,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for v in &self.data {
            match dtype {
                Dtype::Complex64 => {
                    buf.extend_from_slice(&(v.re as f32).to_le_bytes());
                    buf.extend_from_slice(&(v.im as f32).to_le_bytes());
                }
                Dtype::Complex128 => {
                    buf.extend_from_slice(&v.re.to_le_bytes());
                    buf.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Io(format!("unsupported version {version}")));
        }
        let dtype = Dtype::from_tag(read_u32(&mut r)?)?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::Io("grid size overflow".into()))?;
        let mut f = [0f64; 4];
        for v in f.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        let spec = GridSpec::new(Complex64::new(f[0], f[1]), f[2], f[3], n)?;
        let width = match dtype {
            Dtype::Complex64 => 8,
            Dtype::Complex128 => 16,
        };
        let mut buf = vec![0u8; spec.len() * width];
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(width)
            .map(|c| match dtype {
                Dtype::Complex64 => Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                ),
                Dtype::Complex128 => Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                ),
            })
            .collect();
        ComplexGrid::from_data(spec, data)
    }

    /// `x,y,re,im` lines with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,re,im")?;
        for (i, v) in self.data.iter().enumerate() {
            let p = self.spec.point_at(i);
            writeln!(w, "{},{},{},{}", p.re, p.im, v.re, v.im)?;
        }
        Ok(())
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
