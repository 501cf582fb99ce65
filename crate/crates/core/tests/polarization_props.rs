use proptest::prelude::*;

use rpdc_core::{
    density_to_stokes, fidelity, jones_to_density, purity, retarder_jones, stokes_to_density,
    DensityMatrix, JonesVector, Mat2, RotatedRetarder, StokesVector, C64,
};

fn bloch() -> impl Strategy<Value = [f64; 3]> {
    (-1.0..=1.0f64, 0.0..std::f64::consts::TAU, 0.0..=1.0f64).prop_map(|(z, phi, r)| {
        let s = (1.0 - z * z).sqrt();
        [r * s * phi.cos(), r * s * phi.sin(), r * z]
    })
}

fn state() -> impl Strategy<Value = DensityMatrix> {
    bloch().prop_map(|b| stokes_to_density(&StokesVector::new(1.0, b[0], b[1], b[2])).unwrap())
}

fn jones() -> impl Strategy<Value = JonesVector> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(a, b, c, d)| {
            a * a + b * b + c * c + d * d > 1e-3
        })
        .prop_map(|(a, b, c, d)| JonesVector::new(C64::new(a, b), C64::new(c, d)))
}

/// Random SU(2) element from a unit quaternion.
fn unitary() -> impl Strategy<Value = Mat2> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(a, b, c, d)| {
            a * a + b * b + c * c + d * d > 1e-3
        })
        .prop_map(|(a, b, c, d)| {
            let n = (a * a + b * b + c * c + d * d).sqrt();
            let (p, q) = (C64::new(a / n, b / n), C64::new(c / n, d / n));
            Mat2::new(p, -q.conj(), q, p.conj())
        })
}

fn unitarity_error(m: &Mat2) -> f64 {
    (m.adjoint() * *m).max_abs_diff(&Mat2::IDENTITY)
}

proptest! {
    #[test]
    fn stokes_density_round_trip(s in bloch(), s0 in 0.1..10.0f64) {
        let sv = StokesVector::new(s0, s0 * s[0], s0 * s[1], s0 * s[2]);
        let back = density_to_stokes(&stokes_to_density(&sv).unwrap());
        let n = sv.normalized().unwrap();
        for (a, b) in back.as_array().iter().zip(n.as_array()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_states_have_unit_purity(v in jones()) {
        let rho = jones_to_density(&v).unwrap();
        prop_assert!((purity(&rho) - 1.0).abs() < 1e-12);
        prop_assert!((density_to_stokes(&rho).degree_of_polarization() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_unitarily_invariant(a in state(), b in state(), u in unitary()) {
        let f = fidelity(&a, &b).unwrap();
        let ua = DensityMatrix::from_unnormalized(u.conjugate(a.matrix())).unwrap();
        let ub = DensityMatrix::from_unnormalized(u.conjugate(b.matrix())).unwrap();
        prop_assert!((fidelity(&ua, &ub).unwrap() - f).abs() < 1e-10);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn fidelity_is_symmetric_and_one_on_diagonal(a in state(), b in state()) {
        prop_assert!((fidelity(&a, &b).unwrap() - fidelity(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn retarder_axis_has_period_180(alpha in 0.0..180.0f64, delta in 0.0..7.0f64) {
        let a = retarder_jones(&RotatedRetarder::lossless(alpha, delta).unwrap());
        let b = retarder_jones(&RotatedRetarder::lossless(alpha + 180.0, delta).unwrap());
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

#[test]
fn lossless_retarders_are_unitary() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let r =
            RotatedRetarder::lossless(rng.gen_range(0.0..180.0), rng.gen_range(0.0..20.0)).unwrap();
        assert!(unitarity_error(&retarder_jones(&r)) < 1e-12);
    }
}

#[test]
fn crossed_transmission_has_period_90_in_axis() {
    use rpdc_core::crossed_polarizer_transmission;
    for i in 0..90 {
        let alpha = i as f64 * 2.0;
        let a = RotatedRetarder::new(alpha, 1.3, 0.8).unwrap();
        let b = RotatedRetarder::new(alpha + 90.0, 1.3, 0.8).unwrap();
        for p in [0.0, 17.0, 45.0, 101.0] {
            assert!(
                (crossed_polarizer_transmission(&a, p) - crossed_polarizer_transmission(&b, p))
                    .abs()
                    < 1e-12
            );
        }
    }
}
