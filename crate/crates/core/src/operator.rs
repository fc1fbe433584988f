//! Finite-volume assembly of the divergence-form operator on the box grid.
//!
//! The matrix is the negative of the discrete operator, so it is positive
//! definite on interior nodes: `A ~ -D_j a^{ij} D_i`. It is built as a graph
//! Laplacian over edges, which makes symmetry and zero row sums structural.
//!
//! Axis edges carry transmissibilities obtained by harmonic averaging of the
//! two adjacent cells' normal coefficients. Off-diagonal a^{pq} is carried by
//! corner (plane-diagonal) edges: the cross term is split as a second
//! difference along the diagonal whose orientation matches the sign of a^{pq}.
//! That split keeps the matrix an M-matrix exactly when
//! `a_pp >= sum_q |a_pq|` cell-wise; cells breaking the condition produce
//! negative edge weights and the offending rows are reported.

use crate::coeff::CoefficientField;
use crate::error::Result;
use crate::grid::Grid;
use crate::scalar::{flt, Scalar};
use crate::sparse::SparseMatrix;

/// Assembled operator: sparse SPD-on-interior matrix plus grid metadata.
#[derive(Clone, Debug)]
pub struct DiscreteOperator<T> {
    matrix: SparseMatrix<T>,
    grid: Grid<T>,
    free: Vec<bool>,
    /// Rows incident to a negative edge weight (discrete maximum principle lost there).
    pub mmatrix_violations: Vec<usize>,
}

/// Harmonic mean for positive weights; falls back to the arithmetic mean when
/// a weight is non-positive so the sign violation stays visible.
fn edge_weight<T: Scalar>(a: T, b: T) -> T {
    if a > T::zero() && b > T::zero() {
        flt::<T>(2.0) * a * b / (a + b)
    } else {
        (a + b) * flt::<T>(0.5)
    }
}

/// Builds the discrete operator from a coefficient field sampled on the grid.
pub fn assemble<T: Scalar>(grid: &Grid<T>, coeff: &CoefficientField<T>) -> Result<DiscreteOperator<T>> {
    coeff.check_ellipticity()?;
    let n = grid.node_count();
    let dim = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let inv_h2 = T::one() / h2;

    // Per-cell axis weights: a_kk minus |off-diagonals| moved to corner edges.
    let pairs: &[(usize, usize, usize)] = if dim == 2 {
        &[(0, 1, 0)] // (p, q, off index)
    } else {
        &[(0, 1, 0), (0, 2, 1), (1, 2, 2)]
    };
    let axis_weight = |cell: usize, k: usize| -> T {
        let t = coeff.cell(cell);
        let mut w = t.diag[k];
        for &(p, q, o) in pairs {
            if p == k || q == k {
                w = w - t.off[o].abs();
            }
        }
        w
    };

    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::with_capacity(2 * dim + 2); n];
    let mut violations: Vec<usize> = Vec::new();
    let mut add_edge = |rows: &mut Vec<Vec<(usize, T)>>, i: usize, j: usize, w: T| {
        if w == T::zero() {
            return;
        }
        if w < T::zero() {
            violations.push(i);
            violations.push(j);
        }
        let v = w * inv_h2;
        rows[i].push((i, v));
        rows[i].push((j, -v));
        rows[j].push((j, v));
        rows[j].push((i, -v));
    };

    for i in 0..n {
        // axis edges, positive direction only so each edge is added once
        for k in 0..dim {
            if let Some(j) = grid.neighbor(i, k, 1) {
                let w = edge_weight(axis_weight(i, k), axis_weight(j, k));
                add_edge(&mut rows, i, j, w);
            }
        }
        // corner edges for each off-diagonal pair
        for &(p, q, o) in pairs {
            let s_i = coeff.cell(i).off[o];
            // orientation (+e_p, +e_q) carries positive a_pq, (+e_p, -e_q) negative
            for sign in [1isize, -1] {
                let mut off = [0isize; 3];
                off[p] = 1;
                off[q] = sign;
                if let Some(j) = grid.offset_neighbor(i, off) {
                    let s_j = coeff.cell(j).off[o];
                    let want = if sign == 1 { T::one() } else { -T::one() };
                    let a = s_i * want;
                    let b = s_j * want;
                    // both cells must agree with the orientation, else the
                    // cross term cancels locally
                    if a > T::zero() && b > T::zero() {
                        add_edge(&mut rows, i, j, edge_weight(a, b));
                    }
                }
            }
        }
    }

    violations.sort_unstable();
    violations.dedup();
    let free = (0..n).map(|i| !grid.is_boundary(i)).collect();
    Ok(DiscreteOperator {
        matrix: SparseMatrix::from_rows(rows),
        grid: *grid,
        free,
        mmatrix_violations: violations,
    })
}

impl<T: Scalar> DiscreteOperator<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    /// Mask of non-Dirichlet nodes.
    pub fn free_mask(&self) -> &[bool] {
        &self.free
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.free[i]
    }

    /// Full matvec including boundary rows.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.apply(x)
    }

    /// Largest interior row sum magnitude relative to the diagonal scale.
    pub fn max_relative_row_sum(&self) -> T {
        let diag = self.matrix.diagonal();
        let mut worst = T::zero();
        for i in self.grid.interior() {
            let r = self.matrix.row_sum(i).abs() / diag[i];
            worst = worst.max(r);
        }
        worst
    }

    /// True when all off-diagonal entries are non-positive and diagonals positive.
    pub fn is_m_matrix(&self) -> bool {
        for i in 0..self.matrix.nrows() {
            let (cols, vals) = self.matrix.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if *c == i {
                    if *v <= T::zero() {
                        return false;
                    }
                } else if *v > T::zero() {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{make_coefficients, CoefficientDescriptor};
    use crate::sparse::cg_masked;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_op(dim: usize, m: f64, h: f64) -> DiscreteOperator<f64> {
        let g = Grid::build(dim, m, h).unwrap();
        let c = make_coefficients(&g, &CoefficientDescriptor::Constant { scale: 1.0 }, [0.0; 3])
            .unwrap();
        assemble(&g, &c).unwrap()
    }

    #[test]
    fn five_point_stencil_for_identity_2d() {
        let op = identity_op(2, 1.0, 0.25);
        let g = *op.grid();
        let h2 = 0.25 * 0.25;
        let i = g.center_index();
        let (cols, vals) = op.matrix().row(i);
        assert_eq!(cols.len(), 5);
        for (c, v) in cols.iter().zip(vals) {
            if *c == i {
                assert!((v - 4.0 / h2).abs() < 1e-12);
            } else {
                assert!((v + 1.0 / h2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seven_point_stencil_for_identity_3d() {
        let op = identity_op(3, 1.0, 0.25);
        let g = *op.grid();
        let h2 = 0.25 * 0.25;
        let i = g.center_index();
        let (cols, vals) = op.matrix().row(i);
        assert_eq!(cols.len(), 7);
        let diag = cols
            .iter()
            .zip(vals)
            .find(|(c, _)| **c == i)
            .map(|(_, v)| *v)
            .unwrap();
        assert!((diag - 6.0 / h2).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_matrix_is_symmetric_with_zero_row_sums() {
        let g = Grid::build(2, 1.0, 0.0625).unwrap();
        let c = make_coefficients(
            &g,
            &CoefficientDescriptor::Checkerboard {
                alpha: 1.0,
                beta: 10.0,
                block: 0.5,
            },
            [0.0; 3],
        )
        .unwrap();
        let op = assemble(&g, &c).unwrap();
        assert_eq!(op.matrix().max_asymmetry(), 0.0);
        // oracle: direct summation of each interior row
        let mut worst: f64 = 0.0;
        for i in g.interior() {
            worst = worst.max(op.matrix().row_sum(i).abs());
        }
        let h2 = 0.0625 * 0.0625;
        assert!(worst <= 1e-12 / h2, "worst interior row sum {worst}");
        assert!(op.max_relative_row_sum() <= 1e-12);
        assert!(op.is_m_matrix());
        assert!(op.mmatrix_violations.is_empty());
    }

    #[test]
    fn consistency_on_quadratic_for_identity() {
        // A |x|^2 = -2*dim at interior nodes with full neighborhoods
        for (dim, expect) in [(2usize, -4.0f64), (3, -6.0)] {
            let op = identity_op(dim, 1.0, 0.25);
            let g = *op.grid();
            let u: Vec<f64> = (0..g.node_count())
                .map(|i| {
                    let c = g.coord(i);
                    c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
                })
                .collect();
            let au = op.apply(&u);
            for i in g.interior() {
                assert!(
                    (au[i] - expect).abs() < 1e-9,
                    "dim {dim} node {i}: {} vs {expect}",
                    au[i]
                );
            }
        }
    }

    #[test]
    fn cross_terms_are_consistent_for_mild_anisotropy() {
        // constant a = [[2, 0.5], [0.5, 1]]; u = (x + y)^2 has
        // L u = 2*a11 + 4*a12 + 2*a22 = 8, so A u = -8.
        let g = Grid::<f64>::build(2, 1.0, 0.125).unwrap();
        let mut field =
            make_coefficients(&g, &CoefficientDescriptor::Constant { scale: 1.0 }, [0.0; 3])
                .unwrap();
        for i in 0..g.node_count() {
            field.set_cell_for_tests(
                i,
                crate::coeff::SymTensor {
                    diag: [2.0, 1.0, 0.0],
                    off: [0.5, 0.0, 0.0],
                },
            );
        }
        field.lower = 0.7; // spectrum of [[2, .5], [.5, 1]] is ~{0.79, 2.21}
        field.upper = 2.3;
        let op = assemble(&g, &field).unwrap();
        assert!(op.mmatrix_violations.is_empty());
        assert!(op.is_m_matrix());
        let u: Vec<f64> = (0..g.node_count())
            .map(|i| {
                let c = g.coord(i);
                (c[0] + c[1]) * (c[0] + c[1])
            })
            .collect();
        let au = op.apply(&u);
        for i in g.interior() {
            let m = g.multi_index(i);
            // skip nodes whose diagonal neighbors leave the grid
            if m[0] == 0 || m[1] == 0 || m[0] == g.nodes_per_axis() - 1 || m[1] == g.nodes_per_axis() - 1 {
                continue;
            }
            assert!((au[i] + 8.0).abs() < 1e-9, "node {i}: {}", au[i]);
        }
    }

    #[test]
    fn strong_anisotropy_is_reported() {
        // diag(1, 10) rotated by 20 degrees: a12 > a11, sign condition breaks
        let g = Grid::<f64>::build(2, 1.0, 0.25).unwrap();
        let mut field =
            make_coefficients(&g, &CoefficientDescriptor::Constant { scale: 1.0 }, [0.0; 3])
                .unwrap();
        let th = 20f64.to_radians();
        let (s, c) = th.sin_cos();
        let e = [1.0, 10.0];
        let a11 = c * c * e[0] + s * s * e[1];
        let a22 = s * s * e[0] + c * c * e[1];
        let a12 = s * c * (e[0] - e[1]);
        for i in 0..g.node_count() {
            field.set_cell_for_tests(
                i,
                crate::coeff::SymTensor {
                    diag: [a11, a22, 0.0],
                    off: [a12, 0.0, 0.0],
                },
            );
        }
        // widen recorded bounds so the ellipticity check passes (spectrum is {1, 10})
        field.lower = 1.0;
        field.upper = 10.0;
        let op = assemble(&g, &field).unwrap();
        assert!(!op.mmatrix_violations.is_empty());
        assert!(!op.is_m_matrix());
    }

    #[test]
    fn discrete_maximum_principle_on_random_boundary_data() {
        let g = Grid::<f64>::build(2, 1.0, 0.125).unwrap();
        let c = make_coefficients(
            &g,
            &CoefficientDescriptor::Checkerboard {
                alpha: 1.0,
                beta: 10.0,
                block: 0.5,
            },
            [0.0; 3],
        )
        .unwrap();
        let op = assemble(&g, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..10 {
            let mut x = vec![0.0f64; g.node_count()];
            for i in 0..g.node_count() {
                if g.is_boundary(i) {
                    x[i] = rng.gen::<f64>();
                }
            }
            let b = vec![0.0; g.node_count()];
            let rep = cg_masked(op.matrix(), None, &b, &mut x, op.free_mask(), 1e-12, 20_000)
                .unwrap();
            assert!(rep.converged, "trial {trial}");
            for i in 0..g.node_count() {
                assert!(
                    (-1e-9..=1.0 + 1e-9).contains(&x[i]),
                    "trial {trial} node {i}: {}",
                    x[i]
                );
            }
        }
    }
}
