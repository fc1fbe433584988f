//! Structured box grid of cell centers covering `[-M, M]^dim`.
//!
//! Nodes sit at lattice points `-M + i*h`; the requirement that `2M/h` is an
//! even integer puts one node exactly at the origin, which hosts the source.

use crate::error::{Error, Result};
use crate::scalar::{as_f64, count, flt, Scalar};

/// Cell-centered box grid. Cheap to copy; all fields derived from `(dim, M, h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    half_width: T,
    spacing: T,
    nodes_per_axis: usize,
}

impl<T: Scalar> Grid<T> {
    /// Builds a grid on `[-M, M]^dim`. `2M/h` must be an even integer `>= 8`.
    pub fn build(dim: usize, half_width: T, spacing: T) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if half_width <= T::zero() || spacing <= T::zero() {
            return Err(Error::InvalidParameter(
                "half width and spacing must be positive".into(),
            ));
        }
        let ratio = as_f64(half_width) * 2.0 / as_f64(spacing);
        let n = ratio.round();
        let ok = (ratio - n).abs() <= 1e-9 * n.max(1.0) && n >= 8.0 && (n as u64) % 2 == 0;
        if !ok {
            return Err(Error::GridSizing {
                ratio,
                half_width: as_f64(half_width),
                spacing: as_f64(spacing),
            });
        }
        Ok(Grid {
            dim,
            half_width,
            spacing,
            nodes_per_axis: n as usize + 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    /// Measure of one cell, `h^dim`.
    pub fn cell_measure(&self) -> T {
        let mut m = T::one();
        for _ in 0..self.dim {
            m = m * self.spacing;
        }
        m
    }

    /// Flat index from per-axis indices (the third entry is ignored in 2D).
    #[inline]
    pub fn index(&self, ix: [usize; 3]) -> usize {
        let n = self.nodes_per_axis;
        if self.dim == 2 {
            ix[0] + n * ix[1]
        } else {
            ix[0] + n * (ix[1] + n * ix[2])
        }
    }

    /// Per-axis indices of a flat index (third entry 0 in 2D).
    #[inline]
    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let n = self.nodes_per_axis;
        if self.dim == 2 {
            [i % n, i / n, 0]
        } else {
            [i % n, (i / n) % n, i / (n * n)]
        }
    }

    /// Physical coordinates of a node (third entry 0 in 2D).
    #[inline]
    pub fn coord(&self, i: usize) -> [T; 3] {
        let m = self.multi_index(i);
        let mut c = [T::zero(); 3];
        for k in 0..self.dim {
            c[k] = count::<T>(m[k]) * self.spacing - self.half_width;
        }
        c
    }

    /// Euclidean distance of a node from the origin.
    #[inline]
    pub fn radius(&self, i: usize) -> T {
        let c = self.coord(i);
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    /// Euclidean distance between two nodes.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> T {
        let a = self.coord(i);
        let b = self.coord(j);
        let mut s = T::zero();
        for k in 0..3 {
            let d = a[k] - b[k];
            s += d * d;
        }
        s.sqrt()
    }

    /// Node hosting the origin.
    pub fn center_index(&self) -> usize {
        let mid = (self.nodes_per_axis - 1) / 2;
        let mut m = [0usize; 3];
        for k in 0..self.dim {
            m[k] = mid;
        }
        self.index(m)
    }

    /// True when the node lies in the outermost layer (Dirichlet layer).
    #[inline]
    pub fn is_boundary(&self, i: usize) -> bool {
        let m = self.multi_index(i);
        let last = self.nodes_per_axis - 1;
        (0..self.dim).any(|k| m[k] == 0 || m[k] == last)
    }

    /// Face neighbor along `axis` shifted by `step` in `{-1, +1}`.
    #[inline]
    pub fn neighbor(&self, i: usize, axis: usize, step: isize) -> Option<usize> {
        let mut m = self.multi_index(i);
        let moved = m[axis] as isize + step;
        if moved < 0 || moved >= self.nodes_per_axis as isize {
            return None;
        }
        m[axis] = moved as usize;
        Some(self.index(m))
    }

    /// Neighbor shifted by one cell along each axis as given (diagonal moves allowed).
    #[inline]
    pub fn offset_neighbor(&self, i: usize, offset: [isize; 3]) -> Option<usize> {
        let m = self.multi_index(i);
        let mut out = [0usize; 3];
        for k in 0..self.dim {
            let moved = m[k] as isize + offset[k];
            if moved < 0 || moved >= self.nodes_per_axis as isize {
                return None;
            }
            out[k] = moved as usize;
        }
        Some(self.index(out))
    }

    /// All face neighbors of a node.
    pub fn face_neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for step in [-1isize, 1] {
                if let Some(j) = self.neighbor(i, axis, step) {
                    out.push(j);
                }
            }
        }
        out
    }

    /// Iterator over interior (non-boundary) node indices in lexicographic order.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.is_boundary(i))
    }

    /// Nodes whose distance from the origin is within `h/2` of `r`.
    pub fn sphere_shell(&self, r: T) -> Vec<usize> {
        let half = self.spacing * flt::<T>(0.5);
        (0..self.node_count())
            .filter(|&i| (self.radius(i) - r).abs() <= half)
            .collect()
    }

    /// Nodes with `r_in <= |x| <= r_out`.
    pub fn annulus(&self, r_in: T, r_out: T) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| {
                let r = self.radius(i);
                r >= r_in && r <= r_out
            })
            .collect()
    }

    /// True when both grids index the same lattice.
    pub fn same_layout(&self, other: &Grid<T>) -> bool {
        self.dim == other.dim
            && self.nodes_per_axis == other.nodes_per_axis
            && (self.spacing - other.spacing).abs()
                <= flt::<T>(1e-12) * self.spacing
            && (self.half_width - other.half_width).abs()
                <= flt::<T>(1e-12) * self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_and_center() {
        let g = Grid::<f64>::build(2, 1.0, 0.25).unwrap();
        assert_eq!(g.nodes_per_axis(), 9);
        assert_eq!(g.node_count(), 81);
        assert_eq!(g.multi_index(g.center_index()), [4, 4, 0]);
        let c = g.coord(g.center_index());
        assert_eq!(c, [0.0, 0.0, 0.0]);

        let g3 = Grid::<f64>::build(3, 2.0, 0.5).unwrap();
        assert_eq!(g3.node_count(), 9 * 9 * 9);
        assert_eq!(g3.coord(g3.center_index()), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_sizing() {
        // 2M/h = 6.67 is not an integer
        assert!(Grid::<f64>::build(2, 1.0, 0.3).is_err());
        // odd ratio
        assert!(Grid::<f64>::build(2, 0.9, 0.2).is_err());
        // too coarse
        assert!(Grid::<f64>::build(2, 1.0, 0.5).is_err());
        // bad dimension
        assert!(Grid::<f64>::build(4, 1.0, 0.25).is_err());
    }

    #[test]
    fn interior_nodes_have_full_neighborhoods() {
        let g = Grid::<f64>::build(3, 1.0, 0.25).unwrap();
        for i in g.interior() {
            assert_eq!(g.face_neighbors(i).len(), 6);
        }
        // boundary corner has only dim neighbors
        assert_eq!(g.face_neighbors(0).len(), 3);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::<f64>::build(3, 1.0, 0.25).unwrap();
        for i in (0..g.node_count()).step_by(7) {
            assert_eq!(g.index(g.multi_index(i)), i);
        }
    }

    #[test]
    fn shell_is_nonempty_at_reasonable_radius() {
        let g = Grid::<f64>::build(2, 1.0, 0.125).unwrap();
        let shell = g.sphere_shell(0.5);
        assert!(!shell.is_empty());
        for i in shell {
            assert!((g.radius(i) - 0.5).abs() <= 0.0625 + 1e-12);
        }
    }
}
