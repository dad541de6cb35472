use bosewell::eigensolve::{eigh_tridiagonal, eigvalsh_tridiagonal, ground_vector, sign_changes};
use bosewell::model::{
    build_hamiltonian, imbalance_matrix_element, ModelParams, TridiagonalMatrix,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// Two-mode Fock state (n1, n2).
type Fock = (usize, usize);

fn annihilate(s: Fock, mode: usize) -> Option<(f64, Fock)> {
    match mode {
        0 if s.0 > 0 => Some(((s.0 as f64).sqrt(), (s.0 - 1, s.1))),
        1 if s.1 > 0 => Some(((s.1 as f64).sqrt(), (s.0, s.1 - 1))),
        _ => None,
    }
}

fn create(s: Fock, mode: usize) -> (f64, Fock) {
    match mode {
        0 => (((s.0 + 1) as f64).sqrt(), (s.0 + 1, s.1)),
        _ => (((s.1 + 1) as f64).sqrt(), (s.0, s.1 + 1)),
    }
}

/// H assembled term by term from ladder-operator action on every basis state.
fn dense_ladder_hamiltonian(n: usize, j: f64, u: f64, delta: f64) -> DMatrix<f64> {
    let dim = n + 1;
    let index = |s: Fock| s.0;
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let s = (k, n - k);
        // hopping: -J (a1† a2 + a2† a1)
        for (from, to) in [(1, 0), (0, 1)] {
            if let Some((c1, s1)) = annihilate(s, from) {
                let (c2, s2) = create(s1, to);
                h[(index(s2), k)] += -j * c1 * c2;
            }
        }
        // interaction: (U/2) a_i† a_i† a_i a_i
        for mode in 0..2 {
            if let Some((c1, s1)) = annihilate(s, mode) {
                if let Some((c2, s2)) = annihilate(s1, mode) {
                    let (c3, s3) = create(s2, mode);
                    let (c4, s4) = create(s3, mode);
                    h[(index(s4), k)] += 0.5 * u * c1 * c2 * c3 * c4;
                }
            }
        }
        // tilt: (δ/2)(n1 - n2)
        h[(k, k)] += 0.5 * delta * (s.0 as f64 - s.1 as f64);
    }
    h
}

fn dense(t: &TridiagonalMatrix) -> DMatrix<f64> {
    let rows = t.to_dense();
    DMatrix::from_fn(t.dim(), t.dim(), |i, j| rows[i][j])
}

#[test]
fn hamiltonian_matches_ladder_construction() {
    for n in 1..=8 {
        for &(j, u, delta) in &[
            (1.0, 1.0, 0.0),
            (0.37, 1.0, -0.8),
            (2.5, 0.0, 0.3),
            (0.0, 1.0, 1.1),
        ] {
            let t = build_hamiltonian(&ModelParams::new(n, j, u, delta).unwrap());
            let reference = dense_ladder_hamiltonian(n, j, u, delta);
            let built = dense(&t);
            for a in 0..=n {
                for b in 0..=n {
                    assert!(
                        (built[(a, b)] - reference[(a, b)]).abs()
                            <= 1e-14 * (1.0 + reference[(a, b)].abs()),
                        "N={n} J={j} U={u} delta={delta} ({a},{b}): {} vs {}",
                        built[(a, b)],
                        reference[(a, b)]
                    );
                }
            }
        }
    }
}

#[test]
fn matrix_element_matches_dense_sandwich() {
    let n = 2;
    let s = eigh_tridiagonal(&build_hamiltonian(
        &ModelParams::new(n, 1.0, 1.0, 0.0).unwrap(),
    ))
    .unwrap();
    // (n1 - n2)/N from number operators a_i† a_i
    let z = DMatrix::from_fn(n + 1, n + 1, |a, b| {
        if a == b {
            let st = (a, n - a);
            let n1 = annihilate(st, 0).map_or(0.0, |(c, s1)| c * create(s1, 0).0);
            let n2 = annihilate(st, 1).map_or(0.0, |(c, s1)| c * create(s1, 1).0);
            (n1 - n2) / n as f64
        } else {
            0.0
        }
    });
    for m in 0..=n {
        for m2 in 0..=n {
            let v = nalgebra::DVector::from_column_slice(s.vector(m));
            let w = nalgebra::DVector::from_column_slice(s.vector(m2));
            let expected = v.dot(&(&z * &w));
            let got = imbalance_matrix_element(&s, m, m2, n).unwrap();
            assert!(
                (got - expected).abs() < 1e-14,
                "({m},{m2}): {got} vs {expected}"
            );
        }
    }
    assert!(imbalance_matrix_element(&s, 0, 1, n).unwrap().abs() > 0.1);
}

#[test]
fn single_particle_matrix_element() {
    let s = eigh_tridiagonal(&build_hamiltonian(
        &ModelParams::new(1, 1.0, 0.0, 0.0).unwrap(),
    ))
    .unwrap();
    assert!((imbalance_matrix_element(&s, 0, 1, 1).unwrap() + 1.0).abs() < 1e-15);
    assert!(imbalance_matrix_element(&s, 0, 0, 1).unwrap().abs() < 1e-15);
}

#[test]
fn ground_vector_examples() {
    let (e, v) =
        ground_vector(&TridiagonalMatrix::new(vec![0.0, 0.0], vec![-0.5]).unwrap()).unwrap();
    assert!((e + 0.5).abs() < 1e-15);
    assert!(v
        .iter()
        .all(|x| (x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let t = TridiagonalMatrix::new(vec![1.0, 0.0, 1.0], vec![-r, -r]).unwrap();
    let (e, v) = ground_vector(&t).unwrap();
    assert!((e - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
    assert!(v.iter().all(|&x| x > 0.0));

    let (e, v) = ground_vector(&build_hamiltonian(
        &ModelParams::new(4, 0.0, 1.0, 0.0).unwrap(),
    ))
    .unwrap();
    assert_eq!(e, 2.0);
    assert_eq!(v, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
}

fn tridiagonal_strategy(max_dim: usize) -> impl Strategy<Value = TridiagonalMatrix> {
    (1..=max_dim).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n - 1),
        )
            .prop_map(|(d, e)| TridiagonalMatrix::new(d, e).unwrap())
    })
}

fn hamiltonian_strategy(max_n: usize) -> impl Strategy<Value = ModelParams> {
    (1..=max_n, 0.02..20.0f64, -5.0..5.0f64)
        .prop_map(|(n, j, delta)| ModelParams::new(n, j, 1.0, delta).unwrap())
}

fn symmetric_strategy(max_n: usize) -> impl Strategy<Value = ModelParams> {
    (1..=max_n, 0.02..20.0f64).prop_map(|(n, j)| ModelParams::symmetric(n, j).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eigenvalues_match_dense_oracle(t in tridiagonal_strategy(50)) {
        let ours = eigvalsh_tridiagonal(&t).unwrap();
        let full = eigh_tridiagonal(&t).unwrap();
        let mut reference: Vec<f64> = SymmetricEigen::new(dense(&t)).eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for ((a, b), c) in ours.iter().zip(&reference).zip(full.values()) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
            prop_assert!((c - b).abs() <= 1e-10, "{} vs {}", c, b);
        }
    }

    #[test]
    fn decomposition_quality(t in tridiagonal_strategy(60)) {
        let s = eigh_tridiagonal(&t).unwrap();
        prop_assert!(s.orthonormality_error() <= 1e-10);
        prop_assert!(s.max_residual(&t) <= 1e-10 * t.frobenius_norm().max(1e-300));
        let trace_err = (s.values().iter().sum::<f64>() - t.trace()).abs();
        let scale: f64 = t.diag().iter().map(|d| d.abs()).sum::<f64>().max(t.frobenius_norm());
        prop_assert!(trace_err <= 1e-12 * scale.max(1.0));
        for m in 0..s.dim() {
            let v = s.vector(m);
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
                prop_assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn hamiltonian_decomposition(p in hamiltonian_strategy(80)) {
        let t = build_hamiltonian(&p);
        let s = eigh_tridiagonal(&t).unwrap();
        prop_assert!(s.orthonormality_error() <= 1e-10);
        prop_assert!(s.max_residual(&t) <= 1e-10 * t.frobenius_norm());
        let rel = (s.values().iter().sum::<f64>() - t.trace()).abs() / t.trace().abs().max(1.0);
        prop_assert!(rel <= 1e-12, "trace relative error {}", rel);
        // unreduced Jacobi matrix: simple spectrum
        prop_assert!(s.values().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scaling_covariance(p in hamiltonian_strategy(40), alpha in 0.01..100.0f64) {
        let t = build_hamiltonian(&p);
        let s = eigh_tridiagonal(&t).unwrap();
        let scaled = eigh_tridiagonal(&t.scaled(alpha)).unwrap();
        let norm = t.frobenius_norm();
        for (a, b) in s.values().iter().zip(scaled.values()) {
            prop_assert!((alpha * a - b).abs() <= 1e-12 * alpha * norm, "{} vs {}", alpha * a, b);
        }
        let v = s.values();
        for m in 0..s.dim() {
            let gap = [m.checked_sub(1).map(|l| v[m] - v[l]), v.get(m + 1).map(|u| u - v[m])]
                .into_iter()
                .flatten()
                .fold(f64::INFINITY, f64::min);
            if gap < 1e-6 * norm {
                continue;
            }
            let (x, y) = (s.vector(m), scaled.vector(m));
            let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            let dev = x.iter().zip(y).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
            prop_assert!(dev <= 1e-8, "eigenvector {} deviates by {}", m, dev);
        }
    }

    #[test]
    fn negative_scaling_reverses_spectrum(t in tridiagonal_strategy(30)) {
        let v = eigvalsh_tridiagonal(&t).unwrap();
        let w = eigvalsh_tridiagonal(&t.scaled(-1.0)).unwrap();
        for (a, b) in v.iter().zip(w.iter().rev()) {
            prop_assert!((a + b).abs() <= 1e-12 * t.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn symmetric_model_parity(p in symmetric_strategy(120)) {
        let n = p.n_particles();
        let t = build_hamiltonian(&p);
        let diag = t.diag();
        prop_assert!((0..=n).all(|k| diag[k] == diag[n - k]));
        let s = eigh_tridiagonal(&t).unwrap();
        for m in 0..=n {
            let v = s.vector(m);
            prop_assert!(imbalance_matrix_element(&s, m, m, n).unwrap().abs() <= 1e-12);
            let peak = (0..=n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            let sign = if v[peak] * v[n - peak] > 0.0 { 1.0 } else { -1.0 };
            let dev = (0..=n).map(|i| (v[n - i] - sign * v[i]).abs()).fold(0.0, f64::max);
            prop_assert!(dev <= 1e-9);
            prop_assert_eq!(sign_changes(v, 0.0), m);
        }
        let (e0, g) = ground_vector(&t).unwrap();
        prop_assert!((e0 - s.values()[0]).abs() <= 1e-12 * t.frobenius_norm());
        prop_assert!(g.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn coupling_is_reflection_symmetric(p in hamiltonian_strategy(60)) {
        let t = build_hamiltonian(&p);
        let e = t.offdiag();
        let n = p.n_particles();
        prop_assert!((0..n).all(|k| e[k] == e[n - 1 - k]));
    }

    #[test]
    fn matrix_element_is_symmetric(p in hamiltonian_strategy(30), a in 0usize..31, b in 0usize..31) {
        let n = p.n_particles();
        let s = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let (a, b) = (a % (n + 1), b % (n + 1));
        let ab = imbalance_matrix_element(&s, a, b, n).unwrap();
        let ba = imbalance_matrix_element(&s, b, a, n).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.abs() <= 1.0 + 1e-12);
    }
}
