//! Minimal C ABI around the Clarabel conic solver.
//!
//! The C++ side assembles the problem
//!     min  q'x   s.t.  A x + s = b,  s in K
//! with K a product of cones described by (tag, dim) pairs, and calls
//! `rci_clarabel_solve`. The quadratic cost term is always zero here.

use clarabel::algebra::CscMatrix;
use clarabel::solver::*;

pub const CONE_ZERO: i32 = 0;
pub const CONE_NONNEG: i32 = 1;
pub const CONE_SOC: i32 = 2;
pub const CONE_PSD_TRIANGLE: i32 = 3;
pub const CONE_EXP: i32 = 4;

pub const STATUS_OPTIMAL: i32 = 0;
pub const STATUS_ALMOST_OPTIMAL: i32 = 1;
pub const STATUS_PRIMAL_INFEASIBLE: i32 = 2;
pub const STATUS_DUAL_INFEASIBLE: i32 = 3;
pub const STATUS_NUMERICAL: i32 = 4;

/// Returns 0 on success (solver ran), nonzero on malformed input.
/// `x_out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rci_clarabel_solve(
    n: i64,
    m: i64,
    colptr: *const i64,
    rowval: *const i64,
    nzval: *const f64,
    nnz: i64,
    q: *const f64,
    b: *const f64,
    cone_tags: *const i32,
    cone_dims: *const i64,
    n_cones: i64,
    max_iter: i64,
    time_limit_secs: f64,
    tol_gap_abs: f64,
    tol_gap_rel: f64,
    tol_feas: f64,
    verbose: i32,
    x_out: *mut f64,
    status_out: *mut i32,
    obj_out: *mut f64,
    iters_out: *mut i32,
    solve_time_out: *mut f64,
) -> i32 {
    if n < 0 || m < 0 || nnz < 0 || n_cones < 0 {
        return 1;
    }
    let n = n as usize;
    let m = m as usize;
    let nnz = nnz as usize;
    let n_cones = n_cones as usize;

    let colptr = std::slice::from_raw_parts(colptr, n + 1);
    let rowval = std::slice::from_raw_parts(rowval, nnz);
    let nzval = std::slice::from_raw_parts(nzval, nnz).to_vec();
    let q = std::slice::from_raw_parts(q, n).to_vec();
    let b = std::slice::from_raw_parts(b, m).to_vec();
    let tags = std::slice::from_raw_parts(cone_tags, n_cones);
    let dims = std::slice::from_raw_parts(cone_dims, n_cones);

    let colptr_us: Vec<usize> = colptr.iter().map(|&v| v as usize).collect();
    let rowval_us: Vec<usize> = rowval.iter().map(|&v| v as usize).collect();

    let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(n_cones);
    for i in 0..n_cones {
        let dim = dims[i] as usize;
        match tags[i] {
            CONE_ZERO => cones.push(ZeroConeT(dim)),
            CONE_NONNEG => cones.push(NonnegativeConeT(dim)),
            CONE_SOC => cones.push(SecondOrderConeT(dim)),
            CONE_PSD_TRIANGLE => cones.push(PSDTriangleConeT(dim)),
            CONE_EXP => cones.push(ExponentialConeT()),
            _ => return 2,
        }
    }

    let p = CscMatrix::<f64>::zeros((n, n));
    let a = CscMatrix::new(m, n, colptr_us, rowval_us, nzval);

    // The LMI blocks here are small (side <= ~20); chordal decomposition
    // only fragments them and hurts convergence on the larger instances.
    let settings = match DefaultSettingsBuilder::default()
        .verbose(verbose != 0)
        .max_iter(max_iter.max(1) as u32)
        .time_limit(if time_limit_secs > 0.0 {
            time_limit_secs
        } else {
            f64::INFINITY
        })
        .tol_gap_abs(tol_gap_abs)
        .tol_gap_rel(tol_gap_rel)
        .tol_feas(tol_feas)
        .chordal_decomposition_enable(false)
        .build()
    {
        Ok(s) => s,
        Err(_) => return 3,
    };

    let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(_) => return 4,
    };
    solver.solve();

    let sol = &solver.solution;
    let xs = std::slice::from_raw_parts_mut(x_out, n);
    xs.copy_from_slice(&sol.x);
    *obj_out = sol.obj_val;
    *iters_out = solver.info.iterations as i32;
    *solve_time_out = solver.info.solve_time;
    *status_out = match sol.status {
        SolverStatus::Solved => STATUS_OPTIMAL,
        SolverStatus::AlmostSolved => STATUS_ALMOST_OPTIMAL,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            STATUS_PRIMAL_INFEASIBLE
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            STATUS_DUAL_INFEASIBLE
        }
        _ => STATUS_NUMERICAL,
    };
    0
}
