//! Coefficient fields a^{ij}(x): symmetric, uniformly elliptic, and by design
//! allowed to be rough (piecewise constant with jumps across block seams).
//!
//! Fields are sampled per cell from a descriptor. Random blocks draw their
//! matrices from a counter-based stream keyed on (seed, block coordinates), so
//! the same physical field is reproduced on any grid resolution and extent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{as_f64, flt, Scalar};

/// Serializable construction recipe for a coefficient field.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientDescriptor {
    /// a = scale * I everywhere.
    Constant { scale: f64 },
    /// a = alpha * I or beta * I on alternating blocks of the given side length.
    Checkerboard { alpha: f64, beta: f64, block: f64 },
    /// Per-block symmetric matrices with spectrum in [lower, upper]. The
    /// rotation angle of the eigenbasis is bounded by `anisotropy` radians;
    /// zero (the default) keeps every block diagonal.
    RandomPiecewise {
        lower: f64,
        upper: f64,
        block: f64,
        seed: u64,
        #[serde(default)]
        anisotropy: f64,
    },
}

impl CoefficientDescriptor {
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        match *self {
            CoefficientDescriptor::Constant { scale } => (scale, scale),
            CoefficientDescriptor::Checkerboard { alpha, beta, .. } => {
                (alpha.min(beta), alpha.max(beta))
            }
            CoefficientDescriptor::RandomPiecewise { lower, upper, .. } => (lower, upper),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ellipticity_bounds();
        if lo <= 0.0 || hi < lo {
            return Err(Error::InvalidParameter(format!(
                "ellipticity bounds must satisfy 0 < lambda <= Lambda, got [{lo}, {hi}]"
            )));
        }
        match *self {
            CoefficientDescriptor::Checkerboard { block, .. }
            | CoefficientDescriptor::RandomPiecewise { block, .. } => {
                if block <= 0.0 {
                    return Err(Error::InvalidParameter("block size must be positive".into()));
                }
            }
            CoefficientDescriptor::Constant { .. } => {}
        }
        Ok(())
    }
}

/// Symmetric dim x dim matrix sample; `off = [a12, a13, a23]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymTensor<T> {
    pub diag: [T; 3],
    pub off: [T; 3],
}

impl<T: Scalar> SymTensor<T> {
    pub fn isotropic(s: T) -> Self {
        SymTensor {
            diag: [s, s, s],
            off: [T::zero(); 3],
        }
    }

    /// xi^T a xi for a direction xi.
    pub fn quad_form(&self, xi: [T; 3]) -> T {
        let d = self.diag;
        let o = self.off;
        d[0] * xi[0] * xi[0]
            + d[1] * xi[1] * xi[1]
            + d[2] * xi[2] * xi[2]
            + flt::<T>(2.0) * (o[0] * xi[0] * xi[1] + o[1] * xi[0] * xi[2] + o[2] * xi[1] * xi[2])
    }
}

/// Per-cell symmetric coefficient matrices with recorded ellipticity bounds.
#[derive(Clone, Debug)]
pub struct CoefficientField<T> {
    grid: Grid<T>,
    cells: Vec<SymTensor<T>>,
    pub lower: T,
    pub upper: T,
    pub descriptor: CoefficientDescriptor,
}

/// splitmix64 step, used to key per-block RNG streams.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn block_seed(seed: u64, b: [i64; 3]) -> u64 {
    let mut state = seed ^ 0x6d76735f636f7265; // stream tag
    let mut out = splitmix64(&mut state);
    for c in b {
        state ^= c as u64;
        out ^= splitmix64(&mut state);
    }
    out
}

fn block_of(x: f64, block: f64) -> i64 {
    // Nudge so cell centers landing exactly on a seam pick the right block.
    ((x / block) + 1e-12).floor() as i64
}

/// 2D rotation of diag(e0, e1) by angle theta.
fn rotated_2d(e: [f64; 2], theta: f64) -> ([f64; 2], f64) {
    let (s, c) = theta.sin_cos();
    let a11 = c * c * e[0] + s * s * e[1];
    let a22 = s * s * e[0] + c * c * e[1];
    let a12 = s * c * (e[0] - e[1]);
    ([a11, a22], a12)
}

/// 3D rotation of diag(e) by plane rotations in (xy, xz, yz).
fn rotated_3d(e: [f64; 3], angles: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Build R = Rxy * Rxz * Ryz as a dense 3x3, then A = R D R^T.
    let mut r = [[0.0f64; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let planes = [(0usize, 1usize), (0, 2), (1, 2)];
    for (k, &(p, q)) in planes.iter().enumerate() {
        let (s, c) = angles[k].sin_cos();
        let mut rot = [[0.0f64; 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        rot[p][p] = c;
        rot[q][q] = c;
        rot[p][q] = -s;
        rot[q][p] = s;
        let mut next = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for (k2, rot_row) in rot.iter().enumerate() {
                    next[i][j] += r[i][k2] * rot_row[j];
                }
            }
        }
        r = next;
    }
    let mut a = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                a[i][j] += r[i][k] * e[k] * r[j][k];
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], [a[0][1], a[0][2], a[1][2]])
}

/// Builds a coefficient field on the grid, optionally translating the sample
/// locations by `offset` (which is how a source away from the origin is
/// realized: the field moves, the source stays at the center node).
pub fn make_coefficients<T: Scalar>(
    grid: &Grid<T>,
    descriptor: &CoefficientDescriptor,
    offset: [f64; 3],
) -> Result<CoefficientField<T>> {
    descriptor.validate()?;
    let (lo, hi) = descriptor.ellipticity_bounds();
    let n = grid.node_count();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let c = grid.coord(i);
        let x = [
            as_f64(c[0]) + offset[0],
            as_f64(c[1]) + offset[1],
            as_f64(c[2]) + offset[2],
        ];
        let tensor = match *descriptor {
            CoefficientDescriptor::Constant { scale } => SymTensor::isotropic(flt::<T>(scale)),
            CoefficientDescriptor::Checkerboard { alpha, beta, block } => {
                let parity: i64 = (0..grid.dim()).map(|k| block_of(x[k], block)).sum();
                let v = if parity.rem_euclid(2) == 0 { alpha } else { beta };
                SymTensor::isotropic(flt::<T>(v))
            }
            CoefficientDescriptor::RandomPiecewise {
                lower,
                upper,
                block,
                seed,
                anisotropy,
            } => {
                let b = [
                    block_of(x[0], block),
                    block_of(x[1], block),
                    if grid.dim() == 3 { block_of(x[2], block) } else { 0 },
                ];
                let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, b));
                let mut eig = [0.0f64; 3];
                for e in eig.iter_mut().take(grid.dim()) {
                    *e = lower + (upper - lower) * rng.gen::<f64>();
                }
                if anisotropy == 0.0 {
                    let mut t = SymTensor::<T>::default();
                    for k in 0..grid.dim() {
                        t.diag[k] = flt::<T>(eig[k]);
                    }
                    t
                } else if grid.dim() == 2 {
                    let theta = rng.gen_range(-anisotropy..anisotropy);
                    let (d, o) = rotated_2d([eig[0], eig[1]], theta);
                    SymTensor {
                        diag: [flt::<T>(d[0]), flt::<T>(d[1]), T::zero()],
                        off: [flt::<T>(o), T::zero(), T::zero()],
                    }
                } else {
                    let angles = [
                        rng.gen_range(-anisotropy..anisotropy),
                        rng.gen_range(-anisotropy..anisotropy),
                        rng.gen_range(-anisotropy..anisotropy),
                    ];
                    let (d, o) = rotated_3d(eig, angles);
                    SymTensor {
                        diag: [flt::<T>(d[0]), flt::<T>(d[1]), flt::<T>(d[2])],
                        off: [flt::<T>(o[0]), flt::<T>(o[1]), flt::<T>(o[2])],
                    }
                }
            }
        };
        cells.push(tensor);
    }
    let field = CoefficientField {
        grid: *grid,
        cells,
        lower: flt::<T>(lo),
        upper: flt::<T>(hi),
        descriptor: descriptor.clone(),
    };
    field.check_ellipticity()?;
    Ok(field)
}

impl<T: Scalar> CoefficientField<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn cell(&self, i: usize) -> &SymTensor<T> {
        &self.cells[i]
    }

    #[cfg(test)]
    pub(crate) fn set_cell_for_tests(&mut self, i: usize, t: SymTensor<T>) {
        self.cells[i] = t;
    }

    /// Checks symmetry is structural (it is, by storage) and that the
    /// quadratic form stays inside [lambda, Lambda] on a direction sample.
    pub fn check_ellipticity(&self) -> Result<()> {
        let dirs: Vec<[T; 3]> = if self.grid.dim() == 2 {
            let s = flt::<T>(std::f64::consts::FRAC_1_SQRT_2);
            vec![
                [T::one(), T::zero(), T::zero()],
                [T::zero(), T::one(), T::zero()],
                [s, s, T::zero()],
                [s, -s, T::zero()],
                [flt::<T>(0.6), flt::<T>(0.8), T::zero()],
            ]
        } else {
            let s = flt::<T>(std::f64::consts::FRAC_1_SQRT_2);
            let t = flt::<T>(1.0 / 3.0f64.sqrt());
            vec![
                [T::one(), T::zero(), T::zero()],
                [T::zero(), T::one(), T::zero()],
                [T::zero(), T::zero(), T::one()],
                [s, s, T::zero()],
                [s, T::zero(), s],
                [T::zero(), s, -s],
                [t, t, t],
                [t, -t, t],
            ]
        };
        let slack = flt::<T>(1e-7);
        let lo = self.lower * (T::one() - slack);
        let hi = self.upper * (T::one() + slack);
        for (idx, cell) in self.cells.iter().enumerate() {
            for d in &dirs {
                let q = cell.quad_form(*d);
                if q < lo || q > hi {
                    return Err(Error::Ellipticity {
                        cell: idx,
                        value: as_f64(q),
                        lower: as_f64(self.lower),
                        upper: as_f64(self.upper),
                    });
                }
            }
        }
        Ok(())
    }
}
