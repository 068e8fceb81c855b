use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::trajectory::TrajectoryRecord;

fn identity_e(spec: &PolyModelSpec, c: &mut ModelCoefficients) {
    for i in 0..spec.n {
        let mut exps = vec![0; spec.n];
        exps[i] = 1;
        let k = spec.basis_e.iter().position(|b| b.0 == exps).unwrap();
        c.coef_e[(i, k)] = 1.0;
    }
}

fn random_coefs(spec: &PolyModelSpec, rng: &mut ChaCha8Rng) -> ModelCoefficients {
    let v: Vec<f64> = (0..spec.n_coef()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ModelCoefficients::from_vector(spec, &v).unwrap()
}

/// Term-by-term sum with exponents expanded as repeated products.
fn brute_force(coef: &DMatrix<f64>, basis: &[Monomial], z: &[f64]) -> Vec<f64> {
    (0..coef.nrows())
        .map(|r| {
            basis
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let mut term = coef[(r, k)];
                    for (e, v) in b.0.iter().zip(z) {
                        for _ in 0..*e {
                            term *= v;
                        }
                    }
                    term
                })
                .sum()
        })
        .collect()
}

fn random_record(spec: &PolyModelSpec, len: usize, rng: &mut ChaCha8Rng) -> TrajectoryRecord {
    let mut row = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(-1.5..1.5)).collect() };
    let mut rec = TrajectoryRecord {
        dt: 0.1,
        t0: 0.0,
        x: Vec::new(),
        xdot: Vec::new(),
        xddot: Vec::new(),
        u: Vec::new(),
        y: Vec::new(),
    };
    for _ in 0..len {
        rec.x.push(row(spec.n));
        rec.xdot.push(row(spec.n));
        rec.xddot.push(row(spec.n));
        rec.u.push(row(spec.m));
        rec.y.push(row(spec.p));
    }
    rec
}

#[test]
fn identity_and_single_monomial() {
    let spec = PolyModelSpec::dense(2, 1, 1, 1, 1, 1, 1).unwrap();
    let mut c = ModelCoefficients::zeros(&spec);
    identity_e(&spec, &mut c);
    let e = eval_e(&spec, &c, &[1.0, 2.0]).unwrap();
    assert_eq!(e.as_slice(), &[1.0, 2.0]);
    assert_eq!(jacobian_e(&spec, &c, &[5.0, -3.0]).unwrap(), DMatrix::identity(2, 2));

    let k = spec.basis_f.iter().position(|b| b.0 == vec![1, 0, 1]).unwrap();
    c.coef_f[(1, k)] = 1.0;
    let f = eval_f(&spec, &c, &[3.0, 7.0], &[2.0]).unwrap();
    assert_eq!(f[1], 6.0);
    assert!(eval_f(&spec, &c, &[3.0], &[2.0]).is_err());
}

#[test]
fn hand_differentiated_jacobian() {
    let basis_e = vec![Monomial(vec![2, 0]), Monomial(vec![0, 1])];
    let spec = PolyModelSpec::with_bases(
        2,
        0,
        1,
        2,
        1,
        0,
        1,
        basis_e,
        monomials_xu(2, 0, 1, 0),
        monomials_up_to(2, 0, 1),
    )
    .unwrap();
    let mut c = ModelCoefficients::zeros(&spec);
    c.coef_e[(0, 0)] = 1.0;
    c.coef_e[(1, 1)] = 1.0;
    let e = jacobian_e(&spec, &c, &[3.0, 1.0]).unwrap();
    assert_eq!(e, DMatrix::from_row_slice(2, 2, &[6.0, 0.0, 0.0, 1.0]));
}

#[test]
fn evaluation_matches_brute_force() {
    let spec = PolyModelSpec::dense(2, 1, 2, 3, 3, 2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = random_coefs(&spec, &mut rng);
    for _ in 0..100 {
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let u = [rng.random_range(-2.0..2.0)];
        let z = [x[0], x[1], u[0]];
        let pairs = [
            (eval_e(&spec, &c, &x).unwrap(), brute_force(&c.coef_e, &spec.basis_e, &x)),
            (eval_f(&spec, &c, &x, &u).unwrap(), brute_force(&c.coef_f, &spec.basis_f, &z)),
            (eval_g(&spec, &c, &x, &u).unwrap(), brute_force(&c.coef_g, &spec.basis_g, &z)),
        ];
        for (got, want) in pairs {
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let spec = PolyModelSpec::dense(3, 1, 1, 3, 3, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = random_coefs(&spec, &mut rng);
    let h = 1e-6;
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = [rng.random_range(-1.0..1.0)];
        let fd = |f: &dyn Fn(&[f64]) -> DVector<f64>, rows: usize| {
            DMatrix::from_fn(rows, 3, |r, j| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                (f(&xp)[r] - f(&xm)[r]) / (2.0 * h)
            })
        };
        let checks = [
            (jacobian_e(&spec, &c, &x).unwrap(), fd(&|z| eval_e(&spec, &c, z).unwrap(), 3)),
            (jacobian_f_x(&spec, &c, &x, &u).unwrap(), fd(&|z| eval_f(&spec, &c, z, &u).unwrap(), 3)),
            (jacobian_g_x(&spec, &c, &x, &u).unwrap(), fd(&|z| eval_g(&spec, &c, z, &u).unwrap(), 1)),
        ];
        for (a, b) in checks {
            assert!((&a - &b).abs().max() <= 1e-6 * (1.0 + b.abs().max()));
        }
    }
}

#[test]
fn zero_dynamics_errors_are_the_data() {
    let spec = PolyModelSpec::dense(2, 1, 1, 1, 1, 1, 1).unwrap();
    let mut c = ModelCoefficients::zeros(&spec);
    identity_e(&spec, &mut c);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rec = random_record(&spec, 5, &mut rng);
    for (i, (ex, ey)) in equation_errors(&spec, &c, &rec).unwrap().into_iter().enumerate() {
        assert_eq!(ex.as_slice(), rec.xdot[i].as_slice());
        assert_eq!(ey.as_slice(), rec.y[i].as_slice());
    }
}

#[test]
fn linear_model_on_linear_data() {
    use crate::trajectory::{gen_synthetic, SyntheticRun, SyntheticSystem};
    let (_, rec) = gen_synthetic(&SyntheticRun::new(SyntheticSystem::LinearOsc { omega: 2.0, zeta: 0.2 }, 5.0, 0.01)).unwrap();
    let spec = PolyModelSpec::dense(2, 1, 1, 1, 1, 1, 1).unwrap();
    let mut c = ModelCoefficients::zeros(&spec);
    identity_e(&spec, &mut c);
    let idx = |e: Vec<u32>| spec.basis_f.iter().position(|b| b.0 == e).unwrap();
    c.coef_f[(0, idx(vec![0, 1, 0]))] = 1.0;
    c.coef_f[(1, idx(vec![1, 0, 0]))] = -4.0;
    c.coef_f[(1, idx(vec![0, 1, 0]))] = -0.8;
    c.coef_f[(1, idx(vec![0, 0, 1]))] = 1.0;
    c.coef_g[(0, spec.basis_g.iter().position(|b| b.0 == vec![1, 0, 0]).unwrap())] = 1.0;
    for (ex, ey) in equation_errors(&spec, &c, &rec).unwrap() {
        assert!(ex.norm() < 1e-12 && ey.norm() < 1e-15);
    }
}

#[test]
fn affine_maps_constant_part_and_probing() {
    let spec = PolyModelSpec::dense(2, 1, 1, 2, 2, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rec = random_record(&spec, 4, &mut rng);
    let maps = affine_maps(&spec, &rec).unwrap();
    let zero = vec![0.0; spec.n_coef()];
    for (i, m) in maps.iter().enumerate() {
        let d = m.eval(&zero, None);
        assert_eq!(d.e, DMatrix::zeros(2, 2));
        assert_eq!(d.eps_x, DVector::zeros(2));
        assert_eq!(d.eps_y.as_slice(), rec.y[i].as_slice());
    }
    // one-hot on an f coefficient: ε_x gains −monomial in that row
    let k = spec.index_f(1, 3);
    let mut hot = zero.clone();
    hot[k] = 1.0;
    let z = [rec.x[0][0], rec.x[0][1], rec.u[0][0]];
    let d = maps[0].eval(&hot, None);
    assert!((d.eps_x[1] + spec.basis_f[3].eval(&z)).abs() < 1e-15);
    assert_eq!(d.eps_x[0], 0.0);
}

#[test]
fn affine_maps_match_direct_evaluation() {
    let spec = PolyModelSpec::dense(3, 1, 2, 3, 3, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rec = random_record(&spec, 10, &mut rng);
    let c = random_coefs(&spec, &mut rng);
    let direct = sample_data(&spec, &c, &rec, None).unwrap();
    let v = c.to_vector();
    for (m, d) in affine_maps(&spec, &rec).unwrap().iter().zip(&direct) {
        let a = m.eval(&v, None);
        for (x, y) in [(&a.e, &d.e), (&a.f, &d.f), (&a.g, &d.g)] {
            assert!((x - y).abs().max() <= 1e-12 * (1.0 + y.abs().max()));
        }
        assert!((&a.eps_x - &d.eps_x).abs().max() <= 1e-12 * (1.0 + d.eps_x.abs().max()));
        assert!((&a.eps_y - &d.eps_y).abs().max() <= 1e-12 * (1.0 + d.eps_y.abs().max()));
    }
}

#[test]
fn chain_rule_along_analytic_path() {
    let spec = PolyModelSpec::dense(2, 0, 1, 3, 1, 0, 1).unwrap();
    let c = random_coefs(&spec, &mut ChaCha8Rng::seed_from_u64(21));
    let path = |t: f64| [t.cos() + 0.2, (2.0 * t).sin()];
    let vel = |t: f64| DVector::from_column_slice(&[-t.sin(), 2.0 * (2.0 * t).cos()]);
    let gap = |h: f64| {
        let t = 0.7;
        let fd = (eval_e(&spec, &c, &path(t + h)).unwrap() - eval_e(&spec, &c, &path(t - h)).unwrap()) / (2.0 * h);
        (fd - jacobian_e(&spec, &c, &path(t)).unwrap() * vel(t)).norm()
    };
    let (a, b) = (gap(1e-2), gap(5e-3));
    assert!(a < 1e-3 && (a / b - 4.0).abs() < 0.2, "{a} {b}");
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    let spec = PolyModelSpec::dense(2, 1, 1, 3, 3, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut c = random_coefs(&spec, &mut rng);
    c.coef_f[(0, 0)] = 0.1 + 0.2;
    c.coef_g[(0, 1)] = f64::MIN_POSITIVE;
    let q = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.1, 0.1, 2.0]);
    let file = ModelFile::new(&spec, &c, Some(&q), None);
    let back = ModelFile::from_json(&file.to_json()).unwrap();
    assert_eq!(back.spec, spec);
    let c2 = back.coefficients().unwrap();
    for (a, b) in c.to_vector().iter().zip(c2.to_vector()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(back.metric().unwrap().unwrap(), q);
    assert!(ModelFile::from_json("{\"format\":\"other\"}").is_err());
}

#[test]
fn spec_validation() {
    assert!(PolyModelSpec::dense(2, 0, 1, 0, 1, 0, 1).is_err());
    let dup = vec![Monomial(vec![1, 0]), Monomial(vec![1, 0])];
    assert!(PolyModelSpec::with_bases(2, 0, 1, 1, 1, 0, 1, dup, monomials_xu(2, 0, 1, 0), monomials_up_to(2, 0, 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_maps_are_linear(seed in 0u64..100_000, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let spec = PolyModelSpec::dense(2, 1, 1, 3, 2, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = random_record(&spec, 2, &mut rng);
        let c1 = random_coefs(&spec, &mut rng).to_vector();
        let c2 = random_coefs(&spec, &mut rng).to_vector();
        let mix: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| alpha * a + beta * b).collect();
        for m in affine_maps(&spec, &rec).unwrap() {
            for part in [&m.e, &m.f, &m.g, &m.eps_x, &m.eps_y] {
                let want = part.eval_linear(&c1) * alpha + part.eval_linear(&c2) * beta;
                let got = part.eval_linear(&mix);
                prop_assert!((&got - &want).abs().max() <= 1e-12 * (1.0 + want.abs().max()));
            }
        }
    }
}
