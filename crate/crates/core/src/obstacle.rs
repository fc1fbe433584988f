//! Obstacle-problem solvers for the mean value set construction.
//!
//! All three routes work in the normal form `v = G - w >= 0`:
//!
//! * `solve_lcp` — projected SOR on the complementarity system
//!   `v >= 0, Av - b + q >= 0, v .* (Av - b + q) = 0`,
//! * `solve_penalized_semilinear` — damped Newton with load continuation on
//!   `A v = b - q Phi_s(v)`, the smooth ramp approximation of the
//!   characteristic function,
//! * `solve_variational_penalty` — relaxed proximal coordinate descent on the
//!   convex energy with the one-sided penalty `(1/eps) max(-v, 0)`.
//!
//! Here `A ~ -L` is the assembled operator, `b` the discrete point source and
//! `q = R^{-dim}` the density of the mean value set of scale `R`. The general
//! problem with data `(f, g)` keeps its natural `w` variable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{delta_rhs, GreensFunction};
use crate::operator::DiscreteOperator;
use crate::scalar::{as_f64, count, flt, Scalar};
use crate::sparse::cg_masked;

/// Smooth ramp `Phi_s`: 0 below the transition window, 1 above it, a cubic
/// smoothstep inside. Negative `s` shifts the window to `[s, 0]` so ramps of
/// both signs bracket the sharp characteristic function.
#[derive(Clone, Copy, Debug)]
pub struct PenaltyProfile<T> {
    s: T,
}

impl<T: Scalar> PenaltyProfile<T> {
    /// `|s|` must lie in (0, 1].
    pub fn new(s: T) -> Result<Self> {
        let a = s.abs();
        if a <= T::zero() || a > T::one() {
            return Err(Error::InvalidParameter(format!(
                "transition width must have |s| in (0, 1], got {}",
                as_f64(s)
            )));
        }
        Ok(PenaltyProfile { s })
    }

    pub fn width(&self) -> T {
        self.s
    }

    /// Lower edge of the transition window.
    pub fn lower_edge(&self) -> T {
        if self.s > T::zero() {
            T::zero()
        } else {
            self.s
        }
    }

    /// Upper edge of the transition window.
    pub fn upper_edge(&self) -> T {
        if self.s > T::zero() {
            self.s
        } else {
            T::zero()
        }
    }

    #[inline]
    pub fn value(&self, x: T) -> T {
        let w = self.s.abs();
        let u = ((x - self.lower_edge()) / w).max(T::zero()).min(T::one());
        u * u * (flt::<T>(3.0) - flt::<T>(2.0) * u)
    }

    #[inline]
    pub fn derivative(&self, x: T) -> T {
        let w = self.s.abs();
        let u = (x - self.lower_edge()) / w;
        if u <= T::zero() || u >= T::one() {
            T::zero()
        } else {
            flt::<T>(6.0) * u * (T::one() - u) / w
        }
    }
}

/// Which route produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverRoute {
    Lcp,
    Semilinear,
    Variational,
}

/// Iteration bookkeeping shared by the solvers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// The source-at-center obstacle problem defining `D_R`.
pub struct ObstacleProblem<'a, T> {
    pub op: &'a DiscreteOperator<T>,
    pub greens: &'a GreensFunction<T>,
    pub radius: T,
    /// Density `q = R^{-dim}` unless overridden for degenerate tests.
    pub density: T,
}

impl<'a, T: Scalar> ObstacleProblem<'a, T> {
    pub fn new(
        op: &'a DiscreteOperator<T>,
        greens: &'a GreensFunction<T>,
        radius: T,
    ) -> Result<Self> {
        if radius <= T::zero() {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        if op.grid().is_boundary(greens.source_index) {
            return Err(Error::InvalidParameter("source must be interior".into()));
        }
        let dim = op.grid().dim() as i32;
        Ok(ObstacleProblem {
            op,
            greens,
            radius,
            density: radius.powi(-dim),
        })
    }

    /// Same problem with an explicit density (used by the `q = 0` edge cases).
    pub fn with_density(
        op: &'a DiscreteOperator<T>,
        greens: &'a GreensFunction<T>,
        radius: T,
        density: T,
    ) -> Result<Self> {
        let mut p = Self::new(op, greens, radius)?;
        if density < T::zero() {
            return Err(Error::InvalidParameter("density must be nonnegative".into()));
        }
        p.density = density;
        Ok(p)
    }

    pub fn source_index(&self) -> usize {
        self.greens.source_index
    }

    pub fn rhs(&self) -> Vec<T> {
        delta_rhs(self.op.grid(), self.greens.source_index)
    }
}

/// Converged complementarity solution in the `v = G - w` variable.
#[derive(Clone, Debug)]
pub struct ObstacleSolution<T> {
    pub v: Vec<T>,
    /// Activation threshold: nodes with `v > threshold` count as noncontact.
    pub threshold: T,
    pub comp_residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub route: SolverRoute,
    pub tolerance: T,
}

impl<T: Scalar> ObstacleSolution<T> {
    #[inline]
    pub fn is_active(&self, i: usize) -> bool {
        self.v[i] > self.threshold
    }

    pub fn active_indicator(&self) -> Vec<bool> {
        self.v.iter().map(|&x| x > self.threshold).collect()
    }

    pub fn active_count(&self) -> usize {
        self.v.iter().filter(|&&x| x > self.threshold).count()
    }

    pub fn max_v(&self) -> T {
        self.v.iter().cloned().fold(T::neg_infinity(), T::max)
    }
}

/// Near-optimal SOR relaxation for the model operator on this grid.
pub fn suggested_omega<T: Scalar>(op: &DiscreteOperator<T>) -> T {
    let g = op.grid();
    let arg = as_f64(g.spacing()) * std::f64::consts::PI / (2.0 * as_f64(g.half_width()));
    let w = 2.0 / (1.0 + arg.sin());
    flt::<T>(w.clamp(1.0, 1.98))
}

/// Parameters for the projected SOR route.
#[derive(Clone, Copy, Debug)]
pub struct LcpParams<T> {
    pub tol: T,
    /// Relaxation in (0, 2); `None` picks a grid-tuned value.
    pub omega: Option<T>,
    /// Sweep cap; `None` uses 200 * nodes_per_axis.
    pub max_sweeps: Option<usize>,
}

impl<T: Scalar> Default for LcpParams<T> {
    fn default() -> Self {
        LcpParams {
            tol: flt::<T>(1e-10),
            omega: Some(flt::<T>(1.7)),
            max_sweeps: None,
        }
    }
}

impl<T: Scalar> LcpParams<T> {
    pub fn with_tuned_omega(tol: T) -> Self {
        LcpParams {
            tol,
            omega: None,
            max_sweeps: None,
        }
    }
}

/// Max-norm of `min(v, Av - b + q)` over free nodes.
pub fn complementarity_residual<T: Scalar>(
    op: &DiscreteOperator<T>,
    rhs: &[T],
    q: T,
    v: &[T],
) -> T {
    let av = op.apply(v);
    let mut worst = T::zero();
    for i in 0..v.len() {
        if !op.is_free(i) {
            continue;
        }
        let r = av[i] - rhs[i] + q;
        worst = worst.max(v[i].min(r).abs());
    }
    worst
}

/// Projected SOR for `v >= 0, Av - rhs + q >= 0`, complementary. Deterministic
/// lexicographic sweeps; the projection keeps `v >= 0` exactly.
pub fn solve_lcp_with_rhs<T: Scalar>(
    op: &DiscreteOperator<T>,
    rhs: &[T],
    q: T,
    params: &LcpParams<T>,
) -> Result<ObstacleSolution<T>> {
    if params.tol < flt::<T>(1e-14) {
        return Err(Error::InvalidParameter("tolerance too small".into()));
    }
    let grid = op.grid();
    let n = grid.node_count();
    let omega = params.omega.unwrap_or_else(|| suggested_omega(op));
    if omega <= T::zero() || omega >= flt::<T>(2.0) {
        return Err(Error::InvalidParameter(
            "relaxation must lie in (0, 2)".into(),
        ));
    }
    let cap = params
        .max_sweeps
        .unwrap_or(200 * grid.nodes_per_axis());
    let interior: Vec<usize> = (0..n).filter(|&i| op.is_free(i)).collect();
    let matrix = op.matrix();
    let diag = matrix.diagonal();

    let mut v = vec![T::zero(); n];
    let one_m_omega = T::one() - omega;
    let mut residual = T::infinity();
    let mut sweeps = 0usize;
    let check_every = 4usize;
    while sweeps < cap {
        for &i in &interior {
            let (cols, vals) = matrix.row(i);
            let mut s = T::zero();
            for (c, a) in cols.iter().zip(vals) {
                s += *a * v[*c];
            }
            // s includes the diagonal term; remove it for the GS target
            let gs = (rhs[i] - q - (s - diag[i] * v[i])) / diag[i];
            let relaxed = one_m_omega * v[i] + omega * gs;
            v[i] = relaxed.max(T::zero());
        }
        sweeps += 1;
        if sweeps % check_every == 0 || sweeps == cap {
            residual = complementarity_residual(op, rhs, q, &v);
            if residual <= params.tol {
                break;
            }
        }
    }
    let converged = residual <= params.tol;
    Ok(ObstacleSolution {
        v,
        threshold: flt::<T>(10.0) * params.tol,
        comp_residual: residual,
        iterations: sweeps,
        converged,
        route: SolverRoute::Lcp,
        tolerance: params.tol,
    })
}

/// Projected SOR on the mean-value-set obstacle problem.
pub fn solve_lcp<T: Scalar>(
    prob: &ObstacleProblem<'_, T>,
    params: &LcpParams<T>,
) -> Result<ObstacleSolution<T>> {
    solve_lcp_with_rhs(prob.op, &prob.rhs(), prob.density, params)
}

/// Parameters for the semilinear continuation route.
#[derive(Clone, Copy, Debug)]
pub struct SemilinearParams<T> {
    pub tol: T,
    pub continuation_steps: usize,
    pub max_newton: usize,
}

impl<T: Scalar> Default for SemilinearParams<T> {
    fn default() -> Self {
        SemilinearParams {
            tol: flt::<T>(1e-8),
            continuation_steps: 10,
            max_newton: 40,
        }
    }
}

/// Damped Newton for `A x + t * weight .* Phi(x) = b` at fixed load `t`,
/// with `x` pinned to its boundary values. Returns the interior residual.
fn newton_at_load<T: Scalar>(
    op: &DiscreteOperator<T>,
    b: &[T],
    weight: &[T],
    profile: &PenaltyProfile<T>,
    t: T,
    x: &mut Vec<T>,
    tol: T,
    max_newton: usize,
) -> Result<IterStats> {
    let n = x.len();
    let matrix = op.matrix();
    let residual = |x: &[T], out: &mut Vec<T>| {
        matrix.matvec(x, &mut out[..]);
        for i in 0..n {
            if op.is_free(i) {
                out[i] = out[i] + t * weight[i] * profile.value(x[i]) - b[i];
            } else {
                out[i] = T::zero();
            }
        }
    };
    let inf = |r: &[T]| r.iter().fold(T::zero(), |a, v| a.max(v.abs()));

    let mut f = vec![T::zero(); n];
    residual(x, &mut f);
    let mut fnorm = inf(&f);
    let cg_cap = 40 * op.grid().nodes_per_axis().max(100);
    for it in 0..max_newton {
        if fnorm <= tol {
            return Ok(IterStats {
                iterations: it,
                residual: as_f64(fnorm),
                converged: true,
            });
        }
        let extra: Vec<T> = (0..n)
            .map(|i| {
                if op.is_free(i) {
                    t * weight[i] * profile.derivative(x[i])
                } else {
                    T::zero()
                }
            })
            .collect();
        let neg_f: Vec<T> = f.iter().map(|&v| -v).collect();
        let mut delta = vec![T::zero(); n];
        cg_masked(
            matrix,
            Some(&extra),
            &neg_f,
            &mut delta,
            op.free_mask(),
            flt::<T>(1e-6),
            cg_cap,
        )?;
        // backtracking on the residual norm
        let mut eta = T::one();
        let mut accepted = false;
        let mut trial = vec![T::zero(); n];
        for _ in 0..24 {
            for i in 0..n {
                trial[i] = if op.is_free(i) { x[i] + eta * delta[i] } else { x[i] };
            }
            let mut ftrial = vec![T::zero(); n];
            residual(&trial, &mut ftrial);
            let fn_trial = inf(&ftrial);
            if fn_trial < fnorm * (T::one() - flt::<T>(1e-3) * eta) || fn_trial <= tol {
                x.copy_from_slice(&trial);
                f = ftrial;
                fnorm = fn_trial;
                accepted = true;
                break;
            }
            eta = eta * flt::<T>(0.5);
        }
        if !accepted {
            return Err(Error::IterationCap {
                cap: max_newton,
                residual: as_f64(fnorm),
            });
        }
    }
    if fnorm <= tol {
        Ok(IterStats {
            iterations: max_newton,
            residual: as_f64(fnorm),
            converged: true,
        })
    } else {
        Err(Error::IterationCap {
            cap: max_newton,
            residual: as_f64(fnorm),
        })
    }
}

/// Continuation in the load factor `t: 0 -> 1` with warm starts; a diverging
/// step is bisected and reported if the step underflows.
fn continuation_solve<T: Scalar>(
    op: &DiscreteOperator<T>,
    b: &[T],
    weight: &[T],
    profile: &PenaltyProfile<T>,
    init: Vec<T>,
    tol: T,
    params: &SemilinearParams<T>,
) -> Result<(Vec<T>, IterStats)> {
    let mut x = init;
    let base_step = 1.0 / params.continuation_steps.max(1) as f64;
    let mut t = 0.0f64;
    let mut dt = base_step;
    let mut total_newton = 0usize;
    let mut last = IterStats {
        iterations: 0,
        residual: 0.0,
        converged: true,
    };
    while t < 1.0 - 1e-12 {
        let target = (t + dt).min(1.0);
        let mut attempt = x.clone();
        match newton_at_load(
            op,
            b,
            weight,
            profile,
            flt::<T>(target),
            &mut attempt,
            tol,
            params.max_newton,
        ) {
            Ok(stats) => {
                x = attempt;
                t = target;
                total_newton += stats.iterations;
                last = stats;
                dt = (dt * 2.0).min(base_step);
            }
            Err(_) => {
                dt *= 0.5;
                if dt < 1e-4 {
                    return Err(Error::ContinuationUnderflow { t, step: dt });
                }
            }
        }
    }
    last.iterations = total_newton;
    Ok((x, last))
}

/// Semilinear penalization route. Returns the `v` field.
pub fn solve_penalized_semilinear<T: Scalar>(
    prob: &ObstacleProblem<'_, T>,
    profile: &PenaltyProfile<T>,
    params: &SemilinearParams<T>,
) -> Result<(Vec<T>, IterStats)> {
    let b = prob.rhs();
    let n = prob.op.grid().node_count();
    let weight = vec![prob.density; n];
    // t = 0 makes the system linear with solution G: exact warm start
    let init = prob.greens.values.clone();
    continuation_solve(prob.op, &b, &weight, profile, init, params.tol, params)
}

/// Parameters for the variational penalty route.
#[derive(Clone, Copy, Debug)]
pub struct VariationalParams<T> {
    pub tol: T,
    pub omega: Option<T>,
    pub max_sweeps: Option<usize>,
}

impl<T: Scalar> Default for VariationalParams<T> {
    fn default() -> Self {
        VariationalParams {
            tol: flt::<T>(1e-8),
            omega: None,
            max_sweeps: None,
        }
    }
}

/// Energy of the penalized variational problem (up to an additive constant):
/// `1/2 v'Av - (b - q)'v + (1/eps) sum max(-v, 0)`.
fn penalty_energy<T: Scalar>(
    op: &DiscreteOperator<T>,
    rhs: &[T],
    q: T,
    inv_eps: T,
    v: &[T],
) -> T {
    let av = op.apply(v);
    let mut e = T::zero();
    for i in 0..v.len() {
        if !op.is_free(i) {
            continue;
        }
        e += flt::<T>(0.5) * v[i] * av[i] - (rhs[i] - q) * v[i] + inv_eps * (-v[i]).max(T::zero());
    }
    e
}

/// First-order residual: distance of `Av - b + q` to the penalty subgradient.
fn penalty_residual<T: Scalar>(
    op: &DiscreteOperator<T>,
    rhs: &[T],
    q: T,
    inv_eps: T,
    v: &[T],
) -> T {
    let av = op.apply(v);
    let mut worst = T::zero();
    for i in 0..v.len() {
        if !op.is_free(i) {
            continue;
        }
        let r = av[i] - rhs[i] + q;
        let d = if v[i] > T::zero() {
            r.abs()
        } else if v[i] < T::zero() {
            (r - inv_eps).abs()
        } else {
            // subdifferential [0, 1/eps]
            (-r).max(r - inv_eps).max(T::zero())
        };
        worst = worst.max(d);
    }
    worst
}

/// Minimizes the penalized energy by relaxed proximal coordinate descent and
/// returns the minimizer in the `w = G - v` variable together with `v`.
pub fn solve_variational_penalty<T: Scalar>(
    prob: &ObstacleProblem<'_, T>,
    epsilon: T,
    params: &VariationalParams<T>,
) -> Result<(Vec<T>, Vec<T>, IterStats)> {
    if epsilon <= T::zero() {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let op = prob.op;
    let grid = op.grid();
    let n = grid.node_count();
    let rhs = prob.rhs();
    let q = prob.density;
    let inv_eps = T::one() / epsilon;
    let mut omega = params.omega.unwrap_or_else(|| suggested_omega(op));
    let cap = params.max_sweeps.unwrap_or(200 * grid.nodes_per_axis());
    let interior: Vec<usize> = (0..n).filter(|&i| op.is_free(i)).collect();
    let matrix = op.matrix();
    let diag = matrix.diagonal();

    let mut v = vec![T::zero(); n];
    let mut sweeps = 0usize;
    let mut residual = T::infinity();
    let mut energy_mark = penalty_energy(op, &rhs, q, inv_eps, &v);
    let check_every = 4usize;
    while sweeps < cap {
        for &i in &interior {
            let (cols, vals) = matrix.row(i);
            let mut s = T::zero();
            for (c, a) in cols.iter().zip(vals) {
                s += *a * v[*c];
            }
            let gs = (rhs[i] - q - (s - diag[i] * v[i])) / diag[i];
            let y = (T::one() - omega) * v[i] + omega * gs;
            // prox of (1/eps) max(-z, 0) scaled by the diagonal
            let knee = -inv_eps / diag[i];
            v[i] = if y >= T::zero() {
                y
            } else if y >= knee {
                T::zero()
            } else {
                y - knee
            };
        }
        sweeps += 1;
        if sweeps % check_every == 0 || sweeps == cap {
            residual = penalty_residual(op, &rhs, q, inv_eps, &v);
            if residual <= params.tol {
                break;
            }
            // over-relaxation safeguard: back off towards plain descent if
            // the energy ever increases
            let e = penalty_energy(op, &rhs, q, inv_eps, &v);
            if e > energy_mark + flt::<T>(1e-12) * energy_mark.abs().max(T::one()) {
                omega = T::one() + (omega - T::one()) * flt::<T>(0.5);
            }
            energy_mark = e;
        }
    }
    let converged = residual <= params.tol;
    let stats = IterStats {
        iterations: sweeps,
        residual: as_f64(residual),
        converged,
    };
    if !converged {
        return Err(Error::IterationCap {
            cap,
            residual: as_f64(residual),
        });
    }
    let w: Vec<T> = prob
        .greens
        .values
        .iter()
        .zip(&v)
        .map(|(&g, &vi)| g - vi)
        .collect();
    Ok((w, v, stats))
}

/// Obstacle problem with general data on a unit-box-like grid:
/// `L w = chi_{w > 0} f` with boundary values `g >= 0`.
pub struct GeneralObstacleProblem<'a, T> {
    pub op: &'a DiscreteOperator<T>,
    pub f: Vec<T>,
    pub f_lower: T,
    pub f_upper: T,
    /// Full-length field; only boundary entries are read.
    pub g: Vec<T>,
}

impl<'a, T: Scalar> GeneralObstacleProblem<'a, T> {
    pub fn new(
        op: &'a DiscreteOperator<T>,
        f: Vec<T>,
        f_lower: T,
        f_upper: T,
        g: Vec<T>,
    ) -> Result<Self> {
        let grid = op.grid();
        if f.len() != grid.node_count() || g.len() != grid.node_count() {
            return Err(Error::MismatchedGrids);
        }
        if f_lower <= T::zero() || f_upper < f_lower {
            return Err(Error::InvalidParameter(
                "density bounds must satisfy 0 < lower <= upper".into(),
            ));
        }
        for (i, &fi) in f.iter().enumerate() {
            if fi < f_lower || fi > f_upper {
                return Err(Error::InvalidParameter(format!(
                    "f out of bounds at node {i}"
                )));
            }
        }
        let mut any_positive = false;
        for i in 0..grid.node_count() {
            if grid.is_boundary(i) {
                if g[i] < T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "boundary data negative at node {i}"
                    )));
                }
                any_positive |= g[i] > T::zero();
            }
        }
        if !any_positive {
            return Err(Error::InvalidParameter(
                "boundary data must not vanish identically".into(),
            ));
        }
        Ok(GeneralObstacleProblem {
            op,
            f,
            f_lower,
            f_upper,
            g,
        })
    }
}

/// Semilinear solve of the general problem. Returns `(w, h_diag, stats)` where
/// `h_diag = Phi_s(w) f` is the effective density: equal to `f` where
/// `w > s`, zero where `w <= lower edge`, intermediate on the one-cell free
/// boundary band (reported as computed).
pub fn solve_general_gap<T: Scalar>(
    prob: &GeneralObstacleProblem<'_, T>,
    profile: &PenaltyProfile<T>,
    params: &SemilinearParams<T>,
) -> Result<(Vec<T>, Vec<T>, IterStats)> {
    let op = prob.op;
    let grid = op.grid();
    let n = grid.node_count();
    // start from the harmonic extension of g: the t = 0 solution
    let mut init = prob.g.clone();
    for i in 0..n {
        if op.is_free(i) {
            init[i] = T::zero();
        }
    }
    let zero = vec![T::zero(); n];
    cg_masked(
        op.matrix(),
        None,
        &zero,
        &mut init,
        op.free_mask(),
        flt::<T>(1e-10),
        40 * grid.nodes_per_axis().max(100),
    )?;
    let (w, stats) = continuation_solve(op, &zero, &prob.f, profile, init, params.tol, params)?;
    let h_diag: Vec<T> = (0..n)
        .map(|i| prob.f[i] * profile.value(w[i]))
        .collect();
    Ok((w, h_diag, stats))
}

/// One comparison statement between penalized solutions.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonItem {
    pub name: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub worst_node: Option<usize>,
}

/// Report of the four basic comparisons between `w_{-s0}`, `w_{s0}`, `w_{s1}`.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub s0: f64,
    pub s1: f64,
    pub tol: f64,
    pub items: Vec<ComparisonItem>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

fn nodewise_check<T: Scalar>(
    name: &str,
    violation: impl Fn(usize) -> T,
    n: usize,
    tol: T,
) -> ComparisonItem {
    let mut worst = T::neg_infinity();
    let mut worst_node = None;
    for i in 0..n {
        let v = violation(i);
        if v > worst {
            worst = v;
            worst_node = Some(i);
        }
    }
    ComparisonItem {
        name: name.into(),
        pass: worst <= tol,
        worst_violation: as_f64(worst),
        worst_node,
    }
}

/// Runs the penalized family at widths `{-s0, s0, s1}` (0 < s1 < s0 <= 1) and
/// checks the comparison principles nodewise:
/// 1. `w_{s0} >= 0`
/// 2. `w_{-s0} >= -s0`
/// 3. `w_{s1} <= w_{s0}` — sharper ramps push the solution down
/// 4. `w_{s0} <= w_{-s0} + 2 s0`
pub fn comparison_suite<T: Scalar>(
    prob: &GeneralObstacleProblem<'_, T>,
    s0: T,
    s1: T,
    tol: T,
    params: &SemilinearParams<T>,
) -> Result<ComparisonReport> {
    if !(s1 > T::zero() && s1 < s0 && s0 <= T::one()) {
        return Err(Error::InvalidParameter(
            "need 0 < s1 < s0 <= 1 for the comparison suite".into(),
        ));
    }
    let n = prob.op.grid().node_count();
    let (w_pos, _, _) = solve_general_gap(prob, &PenaltyProfile::new(s0)?, params)?;
    let (w_neg, _, _) = solve_general_gap(prob, &PenaltyProfile::new(-s0)?, params)?;
    let (w_mid, _, _) = solve_general_gap(prob, &PenaltyProfile::new(s1)?, params)?;

    let items = vec![
        nodewise_check("w_pos_nonnegative", |i| -w_pos[i], n, tol),
        nodewise_check("w_neg_above_minus_s0", |i| -s0 - w_neg[i], n, tol),
        nodewise_check("sharper_ramp_lies_below", |i| w_mid[i] - w_pos[i], n, tol),
        nodewise_check(
            "two_sided_bracket",
            |i| w_pos[i] - w_neg[i] - flt::<T>(2.0) * s0,
            n,
            tol,
        ),
    ];
    Ok(ComparisonReport {
        s0: as_f64(s0),
        s1: as_f64(s1),
        tol: as_f64(tol),
        items,
    })
}

/// Quadratic part of the obstacle energy: `1/2 v'Av - (b - q)'v` over free
/// nodes. The constrained minimizer over `v >= 0` is the LCP solution.
pub fn obstacle_energy<T: Scalar>(op: &DiscreteOperator<T>, rhs: &[T], q: T, v: &[T]) -> T {
    let av = op.apply(v);
    let mut e = T::zero();
    for i in 0..v.len() {
        if op.is_free(i) {
            e += flt::<T>(0.5) * v[i] * av[i] - (rhs[i] - q) * v[i];
        }
    }
    e
}

/// `w = G - v` for presenting solutions in the obstacle's original variable.
pub fn w_from_v<T: Scalar>(greens: &GreensFunction<T>, v: &[T]) -> Vec<T> {
    greens
        .values
        .iter()
        .zip(v)
        .map(|(&g, &vi)| g - vi)
        .collect()
}
