use fpnoise::attack::invert_box_muller;
use fpnoise::sampler::{box_muller_pair, symmetric_cos};
use fpnoise::stats::{ks_statistic, moments, sort_samples};
use fpnoise::urand::{neighbors, round_to_multiple, Precision, UniformVariate};
use proptest::prelude::*;

fn variate() -> impl Strategy<Value = UniformVariate> {
    (1u32..=53).prop_flat_map(|bits| {
        let p = Precision::new(bits).unwrap();
        (0..p.grid_size()).prop_map(move |m| UniformVariate::new(m, p).unwrap())
    })
}

proptest! {
    #[test]
    fn variates_sit_on_the_grid(u in variate()) {
        let p = u.precision();
        prop_assert!(u.value() >= 0.0 && u.value() < 1.0);
        prop_assert_eq!(u.value() * p.grid_size() as f64, u.numerator() as f64);
        prop_assert_eq!(u.complement(), 1.0 - u.value());
        prop_assert_eq!(UniformVariate::from_value(u.value(), p).unwrap(), u);
    }

    #[test]
    fn neighbours_are_a_clamped_run(u in variate(), w in 0u64..6) {
        let near = neighbors(u, w);
        prop_assert!(near.contains(&u));
        prop_assert!(near.len() as u64 <= 2 * w + 1);
        let lo = u.numerator().saturating_sub(w);
        let hi = (u.numerator() + w).min(u.precision().grid_size() - 1);
        let got: Vec<u64> = near.iter().map(|v| v.numerator()).collect();
        prop_assert_eq!(got, (lo..=hi).collect::<Vec<_>>());
    }

    #[test]
    fn rounding_lands_within_half_a_step(x in -1e6f64..1e6, k in -20i32..20) {
        let step = 2f64.powi(k);
        let r = round_to_multiple(x, step).unwrap();
        prop_assert_eq!((r / step).fract(), 0.0);
        prop_assert!((r - x).abs() <= step / 2.0);
    }

    #[test]
    fn ks_is_affine_invariant(
        mut xs in prop::collection::vec(-50.0f64..50.0, 1..200),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        sort_samples(&mut xs);
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        let d = ks_statistic(&xs, logistic).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let d2 = ks_statistic(&ys, |y| logistic((y - b) / a)).unwrap();
        prop_assert!((d - d2).abs() < 1e-9, "{} vs {}", d, d2);
    }

    #[test]
    fn moments_ignore_order(xs in prop::collection::vec(-1e3f64..1e3, 4..100), seed in any::<u64>()) {
        let mut shuffled = xs.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        match (moments(&xs), moments(&shuffled)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
                prop_assert!((a.variance - b.variance).abs() <= 1e-9 * (1.0 + a.variance));
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn box_muller_inverts(m1 in 1u64..(1 << 53), m2 in 0u64..(1 << 53)) {
        let p = Precision::DOUBLE;
        let (u1, u2) = (m1 as f64 * p.step(), m2 as f64 * p.step());
        let (n1, n2) = box_muller_pair(u1, u2);
        let (v1, v2) = invert_box_muller(n1, n2);
        prop_assert!((v1 - u1).abs() <= 2f64.powi(-50), "{} {}", u1, v1);
        // u2 near 0 may come back near 1; the angle is the same.
        let d2 = (v2 - u2).abs();
        prop_assert!(d2.min(1.0 - d2) <= 2f64.powi(-50), "{} {}", u2, v2);
    }

    #[test]
    fn symmetric_cos_is_odd_under_the_top_bit(bits in 2u32..=53, m in any::<u64>()) {
        let p = Precision::new(bits).unwrap();
        let half = p.grid_size() / 2;
        let low = m % half;
        let pos = symmetric_cos(UniformVariate::new(low, p).unwrap());
        let neg = symmetric_cos(UniformVariate::new(low + half, p).unwrap());
        prop_assert_eq!(pos, -neg);
        prop_assert!(pos > 0.0);
    }
}
