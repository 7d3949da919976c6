use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;
use ucp_lab::discretize::{assemble_laplacian, classify_grid, NodeClass, SparseSymmetricOperator};
use ucp_lab::geometry::{BallUnion, ConvexDomain};
use ucp_lab::spectral::*;
use ucp_lab::Error;

fn dense_oracle(a: &SparseSymmetricOperator<f64>) -> nalgebra::SymmetricEigen<f64, nalgebra::Dyn> {
    let n = a.n();
    DMatrix::from_row_slice(n, n, &a.to_dense()).symmetric_eigen()
}

fn sorted_values(e: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>) -> Vec<f64> {
    let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Random sparse PSD matrix: a weighted graph Laplacian plus a nonnegative
/// diagonal.
fn random_psd(n: usize, seed: u64, density: f64) -> SparseSymmetricOperator<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    let mut diag = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            if rng.gen::<f64>() < density {
                let w = rng.gen_range(0.1..2.0);
                trip.push((i, j, -w));
                diag[i] += w;
                diag[j] += w;
            }
        }
        diag[i] += rng.gen_range(0.0..0.5);
    }
    for (i, d) in diag.into_iter().enumerate() {
        trip.push((i, i, d));
    }
    SparseSymmetricOperator::from_lower_triplets(n, &trip).unwrap()
}

fn expm_oracle(a: &SparseSymmetricOperator<f64>, t: f64, f: &[f64]) -> Vec<f64> {
    let e = dense_oracle(a);
    let q = &e.eigenvectors;
    let c = q.transpose() * DVector::from_column_slice(f);
    let scaled = DVector::from_iterator(c.len(), c.iter().zip(e.eigenvalues.iter()).map(|(ci, l)| ci * (-t * l).exp()));
    (q * scaled).iter().copied().collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn l2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn neumann_box(n_side: usize) -> SparseSymmetricOperator<f64> {
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let grid = classify_grid(&g, &BallUnion::empty(3), 1.0 / (n_side - 1) as f64, None).unwrap();
    assemble_laplacian(&grid, 0.0, &BallUnion::empty(3)).unwrap()
}

fn box_with_ball(n_side: usize, rho: f64) -> SparseSymmetricOperator<f64> {
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let s = BallUnion::new(3, vec![vec![0.5; 3]], vec![rho]).unwrap();
    let grid = classify_grid(&g, &s, 1.0 / (n_side - 1) as f64, None).unwrap();
    assemble_laplacian(&grid, 0.0, &BallUnion::empty(3)).unwrap()
}

/// Independent route to the ground state of a positive definite operator:
/// inverse iteration with conjugate-gradient solves.
fn inverse_iteration_ground(a: &SparseSymmetricOperator<f64>) -> f64 {
    let n = a.n();
    let mut x = vec![1.0; n];
    let mut lam = 0.0;
    for _ in 0..200 {
        let nx = l2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = a.apply_vec(&x);
        let new = x.iter().zip(&ax).map(|(p, q)| p * q).sum::<f64>();
        if (new - lam).abs() < 1e-15 * new {
            return new;
        }
        lam = new;
        // Solve A y = x by CG.
        let mut y = vec![0.0; n];
        let mut r = x.clone();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        for _ in 0..10 * n {
            let ap = a.apply_vec(&p);
            let alpha = rr / p.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>();
            for i in 0..n {
                y[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            if rr_new.sqrt() < 1e-14 {
                break;
            }
            for i in 0..n {
                p[i] = r[i] + rr_new / rr * p[i];
            }
            rr = rr_new;
        }
        x = y;
    }
    lam
}

#[test]
fn diagonal_operator() {
    let a = SparseSymmetricOperator::<f64>::from_dense(&[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0], 3).unwrap();
    let r = smallest_eigs(&a, 2, 1e-10).unwrap();
    assert!(r.converged);
    assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12 && (r.eigenvalues[1] - 2.0).abs() < 1e-12);
    assert!(r.residuals.iter().all(|&x| x < 1e-10));
}

#[test]
fn neumann_box_has_constant_ground_state() {
    let a = neumann_box(8);
    let r = smallest_eigs(&a, 1, 1e-9).unwrap();
    assert!(r.converged);
    assert!(r.eigenvalues[0].abs() < 1e-9);
    let v = &r.eigenvectors[0];
    let c = 1.0 / (v.len() as f64).sqrt();
    let sign = v[0].signum();
    assert!(v.iter().all(|x| (sign * x - c).abs() < 1e-7));
}

#[test]
fn ball_in_box_matches_dense_solver() {
    // 12 nodes per side: small enough for the dense oracle.
    let a = box_with_ball(12, 0.15);
    let r = smallest_eigs(&a, 3, 1e-10).unwrap();
    let want = sorted_values(&dense_oracle(&a));
    for i in 0..3 {
        assert!((r.eigenvalues[i] - want[i]).abs() < 1e-8, "{i}: {} vs {}", r.eigenvalues[i], want[i]);
    }
}

#[test]
fn ball_in_box_20_cubed_matches_inverse_iteration() {
    let a = box_with_ball(20, 0.15);
    let r = smallest_eigs(&a, 1, 1e-10).unwrap();
    let want = inverse_iteration_ground(&a);
    assert!((r.eigenvalues[0] - want).abs() < 1e-8, "{} vs {want}", r.eigenvalues[0]);
}

#[test]
fn degenerate_spectrum_is_resolved() {
    // Full cube with the Neumann Laplacian: the first excited level has
    // multiplicity three.
    let a = neumann_box(7);
    let r = smallest_eigs(&a, 5, 1e-9).unwrap();
    let want = sorted_values(&dense_oracle(&a));
    for i in 0..5 {
        assert!((r.eigenvalues[i] - want[i]).abs() < 1e-8, "{i}: {:?} vs {:?}", r.eigenvalues, &want[..5]);
    }
    assert!(r.max_overlap() < 1e-8);
}

#[test]
fn reports_non_convergence() {
    let a = random_psd(300, 3, 0.05);
    let opts = EigOptions { max_matvecs: 40, ..EigOptions::default() };
    let r = smallest_eigs_with(&a, 4, 1e-12, &opts).unwrap();
    assert!(!r.converged);
    assert_eq!(r.eigenvalues.len(), 4);
}

#[test]
fn seeded_runs_are_identical() {
    let a = random_psd(150, 9, 0.05);
    let r1 = smallest_eigs(&a, 3, 1e-9).unwrap();
    let r2 = smallest_eigs(&a, 3, 1e-9).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn rejects_bad_arguments() {
    let a = random_psd(5, 1, 0.5);
    assert!(matches!(smallest_eigs(&a, 0, 1e-8), Err(Error::InvalidParams(_))));
    assert!(matches!(smallest_eigs(&a, 6, 1e-8), Err(Error::InvalidParams(_))));
    assert!(matches!(smallest_eigs(&a, 1, 0.0), Err(Error::InvalidParams(_))));
}

#[test]
fn heat_of_zero_operator_is_identity() {
    let a = SparseSymmetricOperator::from_dense(&[0.0; 9], 3).unwrap();
    let f = [1.0, -2.0, 0.5];
    let h = apply_heat(&a, &HeatActionParams::new(3.0, 1e-12), &f).unwrap();
    assert_eq!(h.v, f);
}

#[test]
fn heat_of_diagonal_operator() {
    let lams = [0.0f64, 0.3, 2.0, 7.5];
    let mut dense = vec![0.0; 16];
    for (i, l) in lams.iter().enumerate() {
        dense[i * 4 + i] = *l;
    }
    let a = SparseSymmetricOperator::from_dense(&dense, 4).unwrap();
    for i in 0..4 {
        let mut f = [0.0; 4];
        f[i] = 1.0;
        let h = apply_heat(&a, &HeatActionParams::new(1.3, 1e-10), &f).unwrap();
        for j in 0..4 {
            let want = if i == j { (-1.3 * lams[i]).exp() } else { 0.0 };
            assert!((h.v[j] - want).abs() <= 1e-10f64);
        }
    }
}

#[test]
fn heat_matches_dense_exponential() {
    let a = random_psd(200, 42, 0.04);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for &(t, tol) in &[(0.05, 1e-10), (1.0, 1e-8), (10.0, 1e-6)] {
        let h = apply_heat(&a, &HeatActionParams::new(t, tol), &f).unwrap();
        let want = expm_oracle(&a, t, &f);
        assert!(dist(&h.v, &want) <= tol * l2(&f), "t={t}: {}", dist(&h.v, &want));
        assert!(h.truncation_error <= tol);
    }
}

#[test]
fn heat_degree_check_passes_and_fails_as_it_should() {
    let a = random_psd(60, 5, 0.1);
    let f = vec![1.0; 60];
    let mut p = HeatActionParams::new(2.0, 1e-9);
    p.check = true;
    let h = apply_heat(&a, &p, &f).unwrap();
    assert!(h.check_disagreement.unwrap() <= 2e-9);
    // An understated spectral bound makes the expansion wrong on the true
    // spectrum; the degree check must notice.
    p.spectral_bound = Some(a.gershgorin_bound() * 0.05);
    p.tolerance = 1e-6;
    assert!(matches!(apply_heat(&a, &p, &f), Err(Error::AccuracyFailure { .. })));
}

#[test]
fn neumann_heat_conserves_constants() {
    let a = neumann_box(9);
    let f = vec![1.0; a.n()];
    let tol = 1e-10;
    let h = apply_heat(&a, &HeatActionParams::new(0.7, tol), &f).unwrap();
    assert!(dist(&h.v, &f) <= tol * l2(&f));
}

#[test]
fn heat_positivity_and_contraction() {
    let a = box_with_ball(10, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let f: Vec<f64> = (0..a.n()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let tol = 1e-9;
        let h = apply_heat(&a, &HeatActionParams::new(0.01, tol), &f).unwrap();
        let nf = l2(&f);
        assert!(h.v.iter().all(|&x| x >= -tol * nf));
        assert!(l2(&h.v) <= (1.0 + tol) * nf);
    }
}

#[test]
fn heat_rejects_bad_input() {
    let a = random_psd(4, 1, 0.5);
    assert!(apply_heat(&a, &HeatActionParams::new(-1.0, 1e-8), &[1.0; 4]).is_err());
    assert!(apply_heat(&a, &HeatActionParams::new(1.0, 0.0), &[1.0; 4]).is_err());
    assert!(apply_heat(&a, &HeatActionParams::new(1.0, 1e-8), &[f64::NAN, 0.0, 0.0, 0.0]).is_err());
    assert!(apply_heat(&a, &HeatActionParams::new(1.0, 1e-8), &[1.0; 3]).is_err());
}

/// Picks the widest gap after one of the eigenvalues 3..8 and returns the
/// count below it, an energy threshold inside it and the remaining gap.
fn gap_threshold(values: &[f64]) -> (usize, f64, f64) {
    let below = (3..9).max_by(|&i, &j| (values[i] - values[i - 1]).partial_cmp(&(values[j] - values[j - 1])).unwrap()).unwrap();
    let lo = values[below - 1];
    let hi = values[below];
    let gap = hi - lo;
    (below, lo + 0.25 * gap, 0.5 * gap)
}

#[test]
fn projector_fixes_and_kills_eigenvectors() {
    let a = random_psd(80, 21, 0.08);
    let e = dense_oracle(&a);
    let vals = sorted_values(&e);
    let (below, energy, gap) = gap_threshold(&vals);
    let mut order: Vec<usize> = (0..80).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    for via in [ProjectorRoute::Eigenpairs, ProjectorRoute::PolynomialFilter] {
        let p = ProjectorParams::new(energy, gap, 1e-9, via);
        for &(rank, idx) in [(2usize, order[2]), (20, order[20])].iter() {
            let f: Vec<f64> = e.eigenvectors.column(idx).iter().copied().collect();
            let out = spectral_projector_apply(&a, &p, &f).unwrap();
            if rank < below {
                assert!(dist(&out.v, &f) < 1e-7, "{via:?}");
            } else {
                assert!(l2(&out.v) < 1e-7, "{via:?}");
            }
        }
    }
}

#[test]
fn projector_routes_agree() {
    let a = random_psd(200, 77, 0.03);
    let vals = sorted_values(&dense_oracle(&a));
    let (below, energy, gap) = gap_threshold(&vals);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut f: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nf = l2(&f);
    f.iter_mut().for_each(|x| *x /= nf);
    let e = spectral_projector_apply(&a, &ProjectorParams::new(energy, gap, 1e-9, ProjectorRoute::Eigenpairs), &f).unwrap();
    let p = spectral_projector_apply(&a, &ProjectorParams::new(energy, gap, 1e-8, ProjectorRoute::PolynomialFilter), &f).unwrap();
    assert_eq!(e.eigenvalues.len(), below);
    assert!(p.achieved_error <= 1e-8);
    assert!(dist(&e.v, &p.v) < 1e-6, "{}", dist(&e.v, &p.v));
}

#[test]
fn projector_detects_straddling_eigenvalue() {
    let a = random_psd(40, 2, 0.2);
    let vals = sorted_values(&dense_oracle(&a));
    let f = vec![1.0; 40];
    let p = ProjectorParams::new(vals[3], 0.01, 1e-8, ProjectorRoute::Eigenpairs);
    assert!(matches!(spectral_projector_apply(&a, &p, &f), Err(Error::GapUnresolved { .. })));
}

#[test]
fn semigroup_difference_of_equal_operators_vanishes() {
    let a = random_psd(50, 8, 0.1);
    let emb: Vec<usize> = (0..50).collect();
    let opts = SemigroupDiffOptions::default();
    let r = semigroup_diff_norm(&a, &a, &emb, 1.0, &opts).unwrap();
    assert!(r.estimate <= 2.0 * opts.heat_tolerance);
    assert_eq!(r.lower_bound, 0.0);
}

#[test]
fn semigroup_difference_one_by_one() {
    let a = SparseSymmetricOperator::from_dense(&[0.0], 1).unwrap();
    let b = SparseSymmetricOperator::from_dense(&[1.0], 1).unwrap();
    let r = semigroup_diff_norm(&a, &b, &[0], 1.0, &SemigroupDiffOptions::default()).unwrap();
    assert!((r.estimate - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
    assert!(r.lower_bound <= 1.0 - (-1.0f64).exp());
}

#[test]
fn semigroup_difference_matches_dense_norm_with_removed_dofs() {
    let a = random_psd(40, 13, 0.15);
    let keep: Vec<usize> = (0..40).filter(|i| i % 3 != 0).collect();
    let b = a.principal_submatrix(&keep).unwrap();
    let t = 0.8;
    // Dense oracle for the difference.
    let ea = dense_oracle(&a);
    let eb = dense_oracle(&b);
    let expa = &ea.eigenvectors * DMatrix::from_diagonal(&ea.eigenvalues.map(|l| (-t * l).exp())) * ea.eigenvectors.transpose();
    let expb = &eb.eigenvectors * DMatrix::from_diagonal(&eb.eigenvalues.map(|l| (-t * l).exp())) * eb.eigenvectors.transpose();
    let mut d = expa;
    for (p, &i) in keep.iter().enumerate() {
        for (q, &j) in keep.iter().enumerate() {
            d[(i, j)] -= expb[(p, q)];
        }
    }
    let want = d.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = semigroup_diff_norm(&a, &b, &keep, t, &SemigroupDiffOptions::default()).unwrap();
    assert!(r.lower_bound <= want + 1e-12);
    assert!(r.estimate >= 0.99 * want, "{} vs {want}", r.estimate);
}

#[test]
fn spectral_result_round_trip() {
    let a = random_psd(30, 4, 0.2);
    let r = smallest_eigs(&a, 3, 1e-10).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("eig.bin");
    write_spectral_result(&path, &r).unwrap();
    let back: SpectralResult<f64> = read_spectral_result(&path).unwrap();
    assert_eq!(back, r);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_spectral_result::<f64>(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lanczos_matches_dense(n in 3usize..120, seed in 0u64..1000, k in 1usize..5) {
        let a = random_psd(n, seed, 0.1);
        let k = k.min(n);
        let r = smallest_eigs(&a, k, 1e-10).unwrap();
        prop_assert!(r.converged);
        let want = sorted_values(&dense_oracle(&a));
        for i in 0..k {
            prop_assert!((r.eigenvalues[i] - want[i]).abs() < 1e-8, "{} vs {}", r.eigenvalues[i], want[i]);
            prop_assert!(r.residuals[i] <= 1e-10);
        }
        prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.max_overlap() <= 1e-8);
    }

    #[test]
    fn removing_dofs_never_lowers_ground_state(seed in 0u64..1000, drop in 1usize..10) {
        let a = random_psd(40, seed, 0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let keep: Vec<usize> = (0..40).filter(|_| rng.gen_range(0..40) >= drop).collect();
        prop_assume!(!keep.is_empty());
        let b = a.principal_submatrix(&keep).unwrap();
        let la = smallest_eigs(&a, 1, 1e-11).unwrap().eigenvalues[0];
        let lb = smallest_eigs(&b, 1, 1e-11).unwrap().eigenvalues[0];
        prop_assert!(lb >= la - 1e-10);
    }
}

#[test]
fn grid_ground_state_uses_removed_nodes() {
    // Sanity link with the grid classes: the removed ball shows up in the
    // mask and lifts the Neumann ground state off zero.
    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let s = BallUnion::new(3, vec![vec![0.5; 3]], vec![0.2]).unwrap();
    let grid = classify_grid(&g, &s, 0.1, None).unwrap();
    assert!(grid.count(NodeClass::DirichletRemoved) > 0);
    let a = assemble_laplacian(&grid, 0.0, &BallUnion::empty(3)).unwrap();
    let r = smallest_eigs(&a, 1, 1e-10).unwrap();
    assert!(r.eigenvalues[0] > 0.1);
}
