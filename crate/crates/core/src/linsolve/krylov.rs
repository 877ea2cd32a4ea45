use super::{check_dims, dot, norm, relative_residual, SolveError, SolveReport, SolverConfig};
use crate::operators::SparseOperator;

fn jacobi(a: &SparseOperator) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
        .collect()
}

fn residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.apply(x);
    b.iter().zip(&ax).map(|(p, q)| p - q).collect()
}

fn remove_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn finish(a: &SparseOperator, x: Vec<f64>, b: &[f64], iterations: usize, target: f64) -> (Vec<f64>, SolveReport) {
    let relative_residual = relative_residual(a, &x, b);
    let nb = norm(b);
    let absolute = if nb > 0.0 { relative_residual * nb } else { relative_residual };
    (
        x,
        SolveReport {
            iterations,
            relative_residual,
            converged: absolute <= target,
        },
    )
}

/// Preconditioned conjugate gradients. `A` must be symmetric positive definite.
pub fn solve_spd(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolveError> {
    config.validate()?;
    check_dims(a, b)?;
    pcg(a, b, config, false)
}

/// Conjugate gradients on a symmetric positive semidefinite matrix whose
/// kernel is spanned by the constant vector.
///
/// The right-hand side is projected onto the range (its mean is removed),
/// preconditioned residuals are kept orthogonal to the constants, and the
/// returned solution has zero (unweighted) mean. The reported residual
/// refers to the projected right-hand side.
pub fn solve_spd_semidefinite(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolveError> {
    config.validate()?;
    check_dims(a, b)?;
    let mut b = b.to_vec();
    remove_mean(&mut b);
    pcg(a, &b, config, true)
}

fn pcg(a: &SparseOperator, b: &[f64], config: &SolverConfig, deflate: bool) -> Result<(Vec<f64>, SolveReport), SolveError> {
    let n = b.len();
    let target = (config.rel_tolerance * norm(b)).max(config.abs_tolerance);
    let mut x = vec![0.0; n];
    if norm(b) <= config.abs_tolerance {
        return Ok(finish(a, x, b, 0, target));
    }
    let inv_diag = jacobi(a);
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        if deflate {
            remove_mean(&mut z);
        }
        z
    };

    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = config.iteration_cap(n);
    for it in 1..=cap {
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            if norm(&r) <= target {
                return Ok(finish(a, x, b, it - 1, target));
            }
            return Err(SolveError::Breakdown { iterations: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= target {
            // Residual replacement guards against drift of the recursive residual.
            r = residual(a, &x, b);
            if norm(&r) <= target {
                if deflate {
                    remove_mean(&mut x);
                }
                return Ok(finish(a, x, b, it, target));
            }
            z = precondition(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if deflate {
        remove_mean(&mut x);
    }
    Ok(finish(a, x, b, cap, target))
}

/// Right-preconditioned BiCGStab with Jacobi preconditioning.
pub fn solve_nonsymmetric(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolveError> {
    config.validate()?;
    check_dims(a, b)?;
    let n = b.len();
    let target = (config.rel_tolerance * norm(b)).max(config.abs_tolerance);
    let mut x = vec![0.0; n];
    if norm(b) <= config.abs_tolerance {
        return Ok(finish(a, x, b, 0, target));
    }
    let inv_diag = jacobi(a);
    let precondition = |r: &[f64]| -> Vec<f64> { r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect() };

    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut restarts = 0;
    let cap = config.iteration_cap(n);
    let mut it = 0;
    while it < cap {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= f64::EPSILON * norm(&r_hat) * norm(&r) {
            // Lost bi-orthogonality: restart from the current residual.
            restarts += 1;
            if restarts > 5 {
                return Err(SolveError::Breakdown { iterations: it });
            }
            r = residual(a, &x, b);
            r_hat = r.clone();
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precondition(&p);
        a.apply_into(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return Err(SolveError::Breakdown { iterations: it });
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        for i in 0..n {
            x[i] += alpha * y[i];
        }
        if norm(&s) <= target {
            let true_r = residual(a, &x, b);
            if norm(&true_r) <= target {
                return Ok(finish(a, x, b, it, target));
            }
            r = true_r;
            continue;
        }
        let z = precondition(&s);
        let t = a.apply(&z);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(SolveError::Breakdown { iterations: it });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            let true_r = residual(a, &x, b);
            if norm(&true_r) <= target {
                return Ok(finish(a, x, b, it, target));
            }
            r = true_r;
        }
        if omega == 0.0 {
            return Err(SolveError::Breakdown { iterations: it });
        }
    }
    Ok(finish(a, x, b, cap, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::dense::lu_solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_m_matrix(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut offsum = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.4) {
                    let v = -rng.gen_range(0.0..1.0);
                    offsum -= v;
                    triplets.push((i, j, v));
                }
            }
            triplets.push((i, i, offsum + rng.gen_range(0.1..1.0)));
        }
        SparseOperator::from_triplets(n, n, triplets, false)
    }

    #[test]
    fn identity_takes_one_cg_iteration() {
        let a = SparseOperator::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let (x, report) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        assert_eq!(x, b);
        assert!(report.iterations <= 1 && report.converged);
    }

    #[test]
    fn diagonal_bicgstab_is_exact_in_one_iteration() {
        let a = SparseOperator::from_diagonal(&[2.0, 4.0, 8.0]);
        let (x, report) = solve_nonsymmetric(&a, &[2.0, 2.0, 2.0], &SolverConfig::nonsymmetric()).unwrap();
        assert_eq!(report.iterations, 1);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15 && (x[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn random_m_matrix_matches_dense_oracle() {
        let a = random_m_matrix(10, 7);
        let b: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let (x, report) = solve_nonsymmetric(&a, &b, &SolverConfig::nonsymmetric()).unwrap();
        assert!(report.converged);
        let oracle = lu_solve(&a.to_dense(), &b).unwrap();
        let diff = x.iter().zip(&oracle).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(diff <= 1e-9, "max diff {diff}");
    }

    #[test]
    fn semidefinite_path_laplacian() {
        // 1-D Neumann Laplacian: kernel = constants.
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = SparseOperator::from_triplets(n, n, t, true);
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        remove_mean(&mut b);
        let (x, report) = solve_spd_semidefinite(&a, &b, &SolverConfig::default()).unwrap();
        assert!(report.converged && report.relative_residual <= 1e-10);
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn rejects_mismatched_rhs() {
        let a = SparseOperator::identity(3);
        assert!(matches!(
            solve_spd(&a, &[1.0], &SolverConfig::default()),
            Err(SolveError::DimensionMismatch { .. })
        ));
    }
}
