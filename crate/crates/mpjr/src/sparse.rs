//! Sparse linear solve behind the Newton loop.
//!
//! The assembled tangent is symmetric but turns indefinite on the softening
//! branch of the interface law, so the factorization uses sparse LU with
//! pivoting rather than Cholesky. The solve is verified against a backward
//! error bound and refined once if needed; systems that cannot reach the
//! bound (singular tangents at limit points) are reported as errors, which
//! the caller handles by substepping.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Once;

/// Backward error bound the solve must meet.
const BACKWARD_TOL: f64 = 1e-12;

thread_local! {
    static SUPPRESS_PANIC_OUTPUT: Cell<bool> = const { Cell::new(false) };
}
static HOOK: Once = Once::new();

/// Runs `f`, converting panics into `None` without printing them. The faer
/// sparse LU factorization panics on structurally singular matrices; a
/// singular tangent is an expected event near snap-back, not a bug.
fn catch_quiet<T>(f: impl FnOnce() -> T) -> Option<T> {
    HOOK.call_once(|| {
        let previous = panic::take_hook();
        panic::set_hook(Box::new(move |info| {
            if !SUPPRESS_PANIC_OUTPUT.with(|s| s.get()) {
                previous(info);
            }
        }));
    });
    SUPPRESS_PANIC_OUTPUT.with(|s| s.set(true));
    let result = panic::catch_unwind(AssertUnwindSafe(f));
    SUPPRESS_PANIC_OUTPUT.with(|s| s.set(false));
    result.ok()
}

/// Solves `A x = b` for a sparse symmetric `A` given as triplets (duplicates
/// are summed). Meets a backward error of [`BACKWARD_TOL`] or fails.
pub fn solve_sparse(n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(rhs.len(), n);
    let trips: Vec<Triplet<usize, usize, f64>> = triplets
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::LinearSolve(format!("bad triplets: {e:?}")))?;

    let lu = catch_quiet(|| mat.sp_lu())
        .ok_or_else(|| Error::LinearSolve("factorization panicked (singular tangent)".into()))?
        .map_err(|e| Error::LinearSolve(format!("factorization failed: {e:?}")))?;

    let b = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let mut x = lu.solve(&b);

    let norm = |v: &faer::Mat<f64>| (0..n).map(|i| v[(i, 0)] * v[(i, 0)]).sum::<f64>().sqrt();
    let a_inf = triplets.iter().map(|t| t.2.abs()).fold(0.0, f64::max);
    let b_norm = norm(&b);

    for _ in 0..2 {
        let mut res = b.clone();
        for &(r, c, v) in triplets {
            res[(r, 0)] -= v * x[(c, 0)];
        }
        let backward = norm(&res) / (a_inf * norm(&x) + b_norm).max(f64::MIN_POSITIVE);
        if !backward.is_finite() {
            return Err(Error::LinearSolve("solution is not finite".into()));
        }
        if backward <= BACKWARD_TOL {
            return Ok((0..n).map(|i| x[(i, 0)]).collect());
        }
        let dx = lu.solve(&res);
        x += &dx;
    }

    let mut res = b.clone();
    for &(r, c, v) in triplets {
        res[(r, 0)] -= v * x[(c, 0)];
    }
    let backward = norm(&res) / (a_inf * norm(&x) + b_norm).max(f64::MIN_POSITIVE);
    if backward <= BACKWARD_TOL {
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    } else {
        Err(Error::LinearSolve(format!(
            "backward error {backward:.3e} exceeds {BACKWARD_TOL:.0e} after refinement"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_spd_system() {
        // [[4, 1], [1, 3]] x = [1, 2]
        let trips = vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let x = solve_sparse(2, &trips, &[1.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 7.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn sums_duplicate_triplets() {
        let trips = vec![
            (0, 0, 2.0),
            (0, 0, 2.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, 3.0),
        ];
        let x = solve_sparse(2, &trips, &[1.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn handles_indefinite_symmetric_systems() {
        // [[1, 2], [2, 1]] has eigenvalues 3 and -1
        let trips = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)];
        let x = solve_sparse(2, &trips, &[3.0, 0.0]).unwrap();
        assert_relative_eq!(x[0], -1.0, max_relative = 1e-13);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-13);
    }

    #[test]
    fn reports_singular_systems() {
        let trips = vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)];
        assert!(solve_sparse(2, &trips, &[1.0, 2.0]).is_err());
        // structurally singular: empty row
        let trips = vec![(0, 0, 1.0)];
        assert!(solve_sparse(2, &trips, &[1.0, 2.0]).is_err());
    }
}
