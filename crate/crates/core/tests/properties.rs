//! Property tests against direct, independent computations.

use proptest::prelude::*;
use ultradiff::assocweight::AssociatedWeight;
use ultradiff::cli::report::real;
use ultradiff::kernel::FlatKernel;
use ultradiff::numerics::LogValue;
use ultradiff::WeightSequence;

fn ln_fact(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `max_k (k log t - log M_k)` by scanning the whole table.
fn omega_scan(m: &WeightSequence, logt: f64) -> f64 {
    m.log_m()
        .iter()
        .enumerate()
        .map(|(k, lm)| k as f64 * logt - lm)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn family(i: u8, k: usize) -> WeightSequence {
    match i % 4 {
        0 => WeightSequence::gevrey(2.0, k),
        1 => WeightSequence::gevrey(1.5, k),
        2 => WeightSequence::qpower(2.0, 1.5, k),
        _ => WeightSequence::logpower(1.0, k),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gevrey_table_is_factorial_power(s in 1.0f64..4.0, k in 0usize..200) {
        let m = WeightSequence::gevrey(s, 256).unwrap();
        prop_assert!((m.log_m()[k] - s * ln_fact(k)).abs() <= 1e-9 * (1.0 + s * ln_fact(k)));
    }

    #[test]
    fn omega_matches_scan(i in 0u8..4, logt in -2.0f64..40.0) {
        let m = family(i, 512);
        let w = AssociatedWeight::new(&m);
        prop_assume!(logt < w.domain_cap());
        let a = w.omega(logt).unwrap();
        let b = omega_scan(&m, logt).max(0.0);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn weight_inverts_to_sequence(i in 0u8..4, k in 0usize..=50) {
        let m = family(i, 2048);
        let w = AssociatedWeight::new(&m);
        let back = w.invert_weight(k).unwrap();
        let lm = m.log_m()[k];
        prop_assert!((back - lm).abs() <= 1e-9 * lm.abs().max(1.0), "k = {}: {} vs {}", k, back, lm);
    }

    #[test]
    fn power_scales_omega(a in 0.3f64..3.0, logt in 0.0f64..20.0) {
        let m = WeightSequence::gevrey(2.0, 1024).unwrap();
        let ma = m.power(a).unwrap();
        let lhs = omega_scan(&ma, logt).max(0.0);
        let rhs = a * omega_scan(&m, logt / a).max(0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn splitting_inequality(
        i in 0u8..4,
        j in 0usize..120,
        k in 0usize..120,
        l in 0usize..120,
        lr in 0.0f64..8.0,
        lrr in 0.0f64..8.0,
    ) {
        let m = family(i, 512);
        let lm = m.log_m();
        let (jf, lf) = (j as f64, l as f64);
        let lhs = jf * lr + lm[k + l] + lf * lrr;
        let a = (jf + lf) * lr + lm[k];
        let b = lm[j + k + l] + (jf + lf) * lrr;
        let rhs = a.max(b) + (-(a - b).abs()).exp().ln_1p();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn reals_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
        prop_assert_eq!(real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn log_values_multiply(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let x = LogValue::from_f64(a);
        let y = LogValue::from_f64(b);
        let p = LogValue::from_sign_log(x.sign() * y.sign(), x.log_abs() + y.log_abs());
        prop_assert!((p.to_f64() - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
    }
}

/// Composite Simpson on `[0, b]` in `t` with `omega` from the table scan.
fn moment_simpson(m: &WeightSequence, k: f64, b: f64, n: usize) -> f64 {
    let f = |t: f64| {
        if t == 0.0 {
            return if k == 0.0 { 1.0 } else { 0.0 };
        }
        let lt = t.ln();
        (k * lt - omega_scan(m, lt).max(0.0)).exp()
    };
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn kernel_moments_match_simpson() {
    let m = WeightSequence::gevrey(2.0, 512).unwrap();
    let kernel = FlatKernel::new(&m);
    for k in [0.0, 1.0, 3.0, 6.5] {
        let closed = kernel.raw_moment(k, 0.0).unwrap().log_value.exp();
        let simpson = moment_simpson(&m, k, 4000.0, 400_000);
        assert!((closed - simpson).abs() <= 1e-6 * closed, "k = {k}: {closed} vs {simpson}");
    }
}

#[test]
fn g1_omega_at_integer_points() {
    let m = WeightSequence::gevrey(1.0, 512).unwrap();
    let w = AssociatedWeight::new(&m);
    for n in 1..=40usize {
        let t = n as f64;
        // max of t^k / k! sits at k = n
        let direct = n as f64 * t.ln() - ln_fact(n);
        assert!((w.omega(t.ln()).unwrap() - direct).abs() < 1e-10);
    }
}
