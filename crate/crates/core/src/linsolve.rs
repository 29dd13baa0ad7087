//! Conjugate gradients with Jacobi preconditioning.
//!
//! Every linear system in this crate is symmetric positive definite after
//! Dirichlet elimination, so a single well-tested Krylov solver suffices.
//! The solver is deterministic: no randomization, fixed evaluation order.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::CsrMatrix;
use crate::fmath;
use crate::Error;

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Convergence threshold on `||b - A x|| / ||b||`.
    pub rel_tol: f64,
    /// Iteration cap; 0 means the default `10 n`.
    pub max_iter: usize,
    /// Use the inverse diagonal as preconditioner.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 0,
            jacobi: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgSummary {
    pub iterations: usize,
    /// True relative residual `||b - A x|| / ||b||`, recomputed from the
    /// returned solution (not the recurrence value).
    pub rel_residual: f64,
}

fn norm2(v: &[f64]) -> f64 {
    fmath::sqrt(v.iter().map(|x| x * x).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for SPD `A`, optionally warm-started from `x0`.
///
/// A zero right-hand side returns the zero vector immediately. Convergence
/// is always confirmed against the recomputed true residual; if the
/// recurrence residual passes but the true one does not, iteration
/// continues. Non-convergence within the iteration cap and non-finite
/// arithmetic are reported as errors, never as a silently inaccurate
/// solution.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<(Vec<f64>, CgSummary), Error> {
    let n = b.len();
    if a.n_rows != n || a.n_cols != n {
        return Err(Error::InvalidArgument("cg needs a square system"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cg right-hand side"));
    }
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            CgSummary {
                iterations: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let max_iter = if opts.max_iter == 0 { 10 * n } else { opts.max_iter };
    let m_inv: Vec<f64> = if opts.jacobi {
        a.diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    } else {
        vec![1.0; n]
    };

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.spmv(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    if norm2(&r) <= opts.rel_tol * norm_b {
        let rel = norm2(&r) / norm_b;
        return Ok((
            x,
            CgSummary {
                iterations: 0,
                rel_residual: rel,
            },
        ));
    }

    let mut z: Vec<f64> = r.iter().zip(&m_inv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    // True residual at the last recurrence drift, for stagnation detection.
    let mut last_drift = f64::INFINITY;
    for iter in 1..=max_iter {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                what: "cg (matrix not positive definite or non-finite)",
                iterations: iter,
                residual: norm2(&r) / norm_b,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm2(&r);
        if !rn.is_finite() {
            return Err(Error::SolverFailure {
                what: "cg (non-finite residual)",
                iterations: iter,
                residual: f64::NAN,
            });
        }
        let mut restarted = false;
        if rn <= opts.rel_tol * norm_b {
            // Confirm against the true residual before declaring victory.
            let ax = a.spmv(&x);
            let mut true_r = b.to_vec();
            for i in 0..n {
                true_r[i] -= ax[i];
            }
            let true_norm = norm2(&true_r);
            if true_norm <= opts.rel_tol * norm_b {
                return Ok((
                    x,
                    CgSummary {
                        iterations: iter,
                        rel_residual: true_norm / norm_b,
                    },
                ));
            }
            // The recurrence drifted from the true residual: restart from
            // the recomputed residual with a fresh search direction. If a
            // restart cycle no longer gains a decimal factor, rounding has
            // exhausted the attainable accuracy and iterating further
            // cannot help.
            if true_norm > 0.9 * last_drift {
                return Err(Error::SolverFailure {
                    what: "cg (stagnated at the attainable accuracy)",
                    iterations: iter,
                    residual: true_norm / norm_b,
                });
            }
            last_drift = true_norm;
            r = true_r;
            restarted = true;
        }
        for i in 0..n {
            z[i] = r[i] * m_inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = if restarted { 0.0 } else { rz_new / rz };
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        what: "cg",
        iterations: max_iter,
        residual: norm2(&r) / norm_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        apply_dirichlet, pressure_mass, pressure_stiffness, zero_constrained, CsrMatrix,
    };
    use crate::fespace::{FeSpace, SpaceKind};
    use crate::mesh::RectMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_converges_in_one_iteration() {
        let eye = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let (x, s) = cg_solve(&eye, &[3.0, -1.0, 0.5], None, &CgOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(x, vec![3.0, -1.0, 0.5]);
    }

    #[test]
    fn two_by_two_oracle() {
        // [[4, 1], [1, 3]] x = (1, 2) has the exact solution (1/11, 7/11).
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        let (x, s) = cg_solve(&a, &[1.0, 2.0], None, &CgOptions::default()).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
        assert!(s.iterations <= 2);
        assert!(s.rel_residual <= 1e-12);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 4.0), (1, 1, 3.0)]);
        let (x, s) = cg_solve(&a, &[0.0, 0.0], None, &CgOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(s.iterations, 0);
        assert_eq!(s.rel_residual, 0.0);
    }

    #[test]
    fn warm_start_with_the_solution_costs_nothing() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        let b = [1.0, 2.0];
        let (x, _) = cg_solve(&a, &b, None, &CgOptions::default()).unwrap();
        let (_, s) = cg_solve(&a, &b, Some(&x), &CgOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn reported_residual_matches_recomputation() {
        let mesh = RectMesh::unit(8, 8).unwrap();
        let pspace = FeSpace::new(&mesh, SpaceKind::P1Scalar);
        let mut sys = pressure_stiffness(&mesh, &pspace, 2.0, 2).unwrap();
        apply_dirichlet(&mut sys, &pspace.dirichlet);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut b: Vec<f64> = (0..pspace.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        zero_constrained(&mut b, &pspace.dirichlet);
        let (x, s) = cg_solve(&sys, &b, None, &CgOptions::default()).unwrap();
        let ax = sys.spmv(&x);
        let res: f64 = b
            .iter()
            .zip(&ax)
            .map(|(bi, axi)| (bi - axi) * (bi - axi))
            .sum::<f64>()
            .sqrt();
        let norm_b: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((s.rel_residual - res / norm_b).abs() <= 1e-13);
        assert!(s.rel_residual <= 1e-12);
    }

    #[test]
    fn pressure_system_converges_within_default_cap() {
        // The default cap is 10 n; the preconditioned pressure system needs
        // far fewer iterations.
        let mesh = RectMesh::unit(16, 16).unwrap();
        let pspace = FeSpace::new(&mesh, SpaceKind::P1Scalar);
        let m = pressure_mass(&mesh, &pspace, 2).unwrap();
        let b = pressure_stiffness(&mesh, &pspace, 1.0, 2).unwrap();
        let mut sys = CsrMatrix::linear_combination(&[(0.1, &m), (1.0, &b)]);
        apply_dirichlet(&mut sys, &pspace.dirichlet);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut rhs: Vec<f64> = (0..pspace.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        zero_constrained(&mut rhs, &pspace.dirichlet);
        let (_, s) = cg_solve(&sys, &rhs, None, &CgOptions::default()).unwrap();
        assert!(s.iterations <= 10 * pspace.n_dofs);
        assert!(s.rel_residual <= 1e-12);
    }

    #[test]
    fn failure_modes_are_explicit() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        match cg_solve(
            &a,
            &[1.0, 2.0],
            None,
            &CgOptions {
                rel_tol: 1e-15,
                max_iter: 1,
                jacobi: false,
            },
        ) {
            Err(Error::SolverFailure { iterations, residual, .. }) => {
                assert_eq!(iterations, 1);
                assert!(residual.is_finite());
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
        assert!(matches!(
            cg_solve(&a, &[f64::NAN, 0.0], None, &CgOptions::default()),
            Err(Error::NonFinite(_))
        ));
        // Indefinite matrix is detected.
        let indef = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(
            cg_solve(&indef, &[0.0, 1.0], None, &CgOptions::default()),
            Err(Error::SolverFailure { .. })
        ));
    }

    #[test]
    fn matches_dense_cholesky_on_random_spd_systems() {
        // Dense reference: A = L L^T with a well-conditioned random L.
        fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
            let n = b.len();
            let mut l = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let mut sum = a[i][j];
                    for k in 0..j {
                        sum -= l[i][k] * l[j][k];
                    }
                    if i == j {
                        l[i][j] = sum.sqrt();
                    } else {
                        l[i][j] = sum / l[j][j];
                    }
                }
            }
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut sum = b[i];
                for k in 0..i {
                    sum -= l[i][k] * y[k];
                }
                y[i] = sum / l[i][i];
            }
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let mut sum = y[i];
                for k in i + 1..n {
                    sum -= l[k][i] * x[k];
                }
                x[i] = sum / l[i][i];
            }
            x
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..10 {
            let n = rng.gen_range(2..=50);
            // SPD with a bounded condition number: G G^T + n I.
            let g: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut dense = vec![vec![0.0; n]; n];
            let mut triplets = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let mut v = if i == j { n as f64 } else { 0.0 };
                    for k in 0..n {
                        v += g[i][k] * g[j][k];
                    }
                    dense[i][j] = v;
                    triplets.push((i, j, v));
                }
            }
            let sparse = CsrMatrix::from_triplets(n, n, triplets);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let reference = cholesky_solve(&dense, &b);
            let (x, _) = cg_solve(
                &sparse,
                &b,
                None,
                &CgOptions {
                    rel_tol: 1e-14,
                    ..CgOptions::default()
                },
            )
            .unwrap();
            let num: f64 = x
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den <= 1e-10, "trial {trial}: rel err {}", num / den);
        }
    }
}
