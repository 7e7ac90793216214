use std::sync::Arc;

use polyga::algebra::{builtin, h4_psi, BUILTIN_NAMES};
use polyga::fields::{cr_residual, gamma_from_prescribed, RandomField};
use polyga::geodesics::{extremal_rhs, geodesic_rhs, momenta_from_velocity};
use polyga::h4::{
    e_to_psi, finsler_length, gaussian_kappa_consistency, indicatrix, metric_connection, momenta, H4Constants,
};
use polyga::tensor::max_abs_diff;
use polyga::{change_basis, invert, multiply, DiffConfig, FinslerConfig, GeodesicState, Orientation, PolyNumber};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec4(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 4)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = 1.0 + a.iter().chain(b).fold(0.0_f64, |m, v| m.max(v.abs()));
    max_abs_diff(a, b) <= tol * scale
}

proptest! {
    #[test]
    fn builtin_products_commute_and_associate(
        idx in 0..BUILTIN_NAMES.len(),
        seed in any::<u64>(),
    ) {
        let s = builtin(BUILTIN_NAMES[idx]).unwrap();
        let n = s.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rand::Rng::gen_range(rng, -2.0..2.0)).collect() };
        let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        prop_assert!(close(&s.mul(&a, &b), &s.mul(&b, &a), 1e-14));
        prop_assert!(close(&s.mul(&s.mul(&a, &b), &c), &s.mul(&a, &s.mul(&b, &c)), 1e-13));
        if let Some(u) = s.unit() {
            prop_assert!(close(&s.mul(u, &a), &a, 1e-14));
        }
    }

    #[test]
    fn basis_change_is_a_homomorphism(a in vec4(-2.0, 2.0), b in vec4(-2.0, 2.0)) {
        let h = H4Constants::default();
        let map = e_to_psi();
        let (ae, be) = (PolyNumber::new(a, "h4-e".into()), PolyNumber::new(b, "h4-e".into()));
        let lhs = change_basis(&multiply(&ae, &be, &h.e).unwrap(), &map).unwrap();
        let rhs = multiply(
            &change_basis(&ae, &map).unwrap(),
            &change_basis(&be, &map).unwrap(),
            &h.psi,
        ).unwrap();
        prop_assert!(close(lhs.coords(), rhs.coords(), 1e-13));
    }

    #[test]
    fn inverse_away_from_zero_divisors(a in vec4(0.2, 3.0), signs in prop::collection::vec(any::<bool>(), 4)) {
        let s = h4_psi();
        let coords: Vec<f64> = a.iter().zip(&signs).map(|(v, &neg)| if neg { -v } else { *v }).collect();
        let x = s.element(coords).unwrap();
        let inv = invert(&x, &s).unwrap();
        prop_assert!(close(multiply(&x, &inv, &s).unwrap().coords(), s.unit().unwrap(), 1e-12));
    }

    #[test]
    fn finsler_length_is_one_homogeneous(dxi in vec4(0.01, 2.0), xi in vec4(-0.5, 0.5), t in 0.1..10.0f64) {
        let m = FinslerConfig::gaussian(2.5, 1.0);
        let scaled: Vec<f64> = dxi.iter().map(|v| t * v).collect();
        let (l1, l2) = (finsler_length(&dxi, &xi, &m).unwrap(), finsler_length(&scaled, &xi, &m).unwrap());
        prop_assert!((l2 - t * l1).abs() <= 1e-12 * l2.abs().max(1.0));
    }

    #[test]
    fn momenta_lie_on_the_indicatrix(dxi in vec4(0.05, 2.0), xi in vec4(-0.5, 0.5)) {
        let m = FinslerConfig::gaussian(2.5, 1.0);
        let p = momenta(&dxi, &xi, &m).unwrap();
        let rel = indicatrix(&p, &xi, &m).unwrap() / (m.kappa_at(&xi).unwrap() / 4.0).powi(4);
        prop_assert!(rel.abs() < 1e-12);
        // Euler: p·dξ = ds.
        let pv: f64 = p.iter().zip(&dxi).map(|(a, b)| a * b).sum();
        let ds = finsler_length(&dxi, &xi, &m).unwrap();
        prop_assert!((pv - ds).abs() < 1e-12 * ds.max(1.0));
    }

    #[test]
    fn geodesic_rhs_is_quadratic_in_velocity(v in vec4(0.05, 2.0), xi in vec4(-0.4, 0.4), t in 0.1..5.0f64) {
        let conn = metric_connection(&FinslerConfig::gaussian(2.5, 1.0), Orientation::Transposed);
        let a1 = geodesic_rhs(&conn, &GeodesicState { x: xi.clone(), v: v.clone(), sigma: 0.0 }).unwrap();
        let tv: Vec<f64> = v.iter().map(|c| t * c).collect();
        let a2 = geodesic_rhs(&conn, &GeodesicState { x: xi, v: tv, sigma: 0.0 }).unwrap();
        let want: Vec<f64> = a1.iter().map(|c| t * t * c).collect();
        prop_assert!(close(&a2, &want, 1e-12));
    }

    #[test]
    fn orientations_share_the_geodesic_spray(v in vec4(-2.0, 2.0), xi in vec4(-0.4, 0.4)) {
        let m = FinslerConfig::gaussian(2.5, 1.0);
        let state = GeodesicState { x: xi, v, sigma: 0.0 };
        let a = geodesic_rhs(&metric_connection(&m, Orientation::AsPrinted), &state).unwrap();
        let b = geodesic_rhs(&metric_connection(&m, Orientation::Transposed), &state).unwrap();
        prop_assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn extremal_velocity_recovers_momenta(p in vec4(0.1, 2.0), xi in vec4(-0.4, 0.4)) {
        let m = FinslerConfig::gaussian(2.5, 1.0);
        // Put p on the indicatrix first.
        let scale = ((m.kappa_at(&xi).unwrap() / 4.0).powi(4) / p.iter().product::<f64>()).powf(0.25);
        let p: Vec<f64> = p.iter().map(|c| c * scale).collect();
        let rhs = extremal_rhs(&m, &xi, &p).unwrap();
        let back = momenta_from_velocity(&m, &xi, &rhs[..4]);
        prop_assert!(close(&back, &p, 1e-10));
    }

    #[test]
    fn gaussian_kappa_matches_across_bases(x in vec4(-0.4, 0.4), kappa0 in 0.5..4.0f64) {
        prop_assert!(gaussian_kappa_consistency(kappa0, &x).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prescribed_pairs_satisfy_cr(idx in 0..BUILTIN_NAMES.len(), seed in any::<u64>(), x in vec4(-0.5, 0.5)) {
        let s = Arc::new(builtin(BUILTIN_NAMES[idx]).unwrap());
        let n = s.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = RandomField::sample(n, &mut rng).field();
        let fp = RandomField::sample(n, &mut rng).field();
        let pair = gamma_from_prescribed(&f, &fp, s).unwrap();
        let r = cr_residual(&pair, &x[..n], &DiffConfig::default()).unwrap();
        let worst = r.amax();
        prop_assert!(worst < 1e-7, "residual {}", worst);
    }
}
