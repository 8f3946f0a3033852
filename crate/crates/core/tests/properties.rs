use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use asap_core::analysis::{closed_loop_map, fixed_point_bisect, fixed_point_iterate, Monotonicity, PowerLaw};
use asap_core::events::{read_trace, write_trace};
use asap_core::gamma::{compute_gamma, update_gamma_hat, EventFilter, GammaParams, RandomRemoval};
use asap_core::packager::{inflection_point, phi, second_inflection_point, PackagerParams, TaylorTable};
use asap_core::rate::RateBounds;
use asap_core::{Event, Polarity};

fn events_strategy() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0u64..50, any::<u16>(), any::<u16>(), any::<bool>()), 0..200).prop_map(|raw| {
        let mut t = 0;
        raw.into_iter()
            .map(|(dt, x, y, p)| {
                t += dt;
                Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative })
            })
            .collect()
    })
}

fn params_strategy() -> impl Strategy<Value = PackagerParams<f64>> {
    (1usize..100, 10usize..5000, -7.0f64..-3.0, 0.5f64..4.0, 1.0f64..11.0).prop_map(|(s_min, extra, lt, span, kappa)| {
        let t_min = 10f64.powf(lt);
        let t_max = t_min * 10f64.powf(span);
        PackagerParams::new(s_min, s_min + extra, t_min, t_max, kappa).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_round_trip(events in events_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&events, &path).unwrap();
        let back: Vec<Event> = read_trace(&path).unwrap().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, events);
    }

    #[test]
    fn bounds_enclose_rate(alpha in 0.5f64..1.0, rates in prop::collection::vec(0.0f64..1e7, 1..300)) {
        let mut b = RateBounds::new(alpha).unwrap();
        for r in rates {
            let (lo, hi) = b.update(r);
            prop_assert!(lo <= r && r <= hi);
        }
    }

    #[test]
    fn bounds_monotone_in_rate(lo in 1.0f64..1e6, width in 0.0f64..1e6, a in 0.0f64..3e6, b in 0.0f64..3e6) {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let mut x = RateBounds::with_state(0.99, lo, lo + width).unwrap();
        let mut y = x.clone();
        let (lo_s, hi_s) = x.update(small);
        let (lo_l, hi_l) = y.update(large);
        // r_min follows r_i below the old minimum, so both extremes rise with r_i.
        prop_assert!(hi_l >= hi_s);
        prop_assert!(lo_l >= lo_s);
    }

    #[test]
    fn bounds_decay_geometrically(lo in 1.0f64..100.0, r in 100.0f64..1000.0, hi in 1000.0f64..1e5, n in 1usize..200) {
        let alpha: f64 = 0.97;
        let mut b = RateBounds::with_state(alpha, lo, hi).unwrap();
        let mut last = (lo, hi);
        for _ in 0..n {
            last = b.update(r);
        }
        let f = alpha.powi(n as i32);
        prop_assert!(last.1 - r <= f * (hi - r) * (1.0 + 1e-9));
        prop_assert!(r - last.0 <= (r - lo) * (1.0 + 1e-9));
        prop_assert!(last.1 >= r && last.0 <= r);
    }

    #[test]
    fn gamma_hat_non_increasing(t1 in 1e-7f64..1.0, t2 in 1e-7f64..1.0) {
        let p = GammaParams::<f64>::default();
        let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(update_gamma_hat(&p, b) <= update_gamma_hat(&p, a));
    }

    #[test]
    fn gamma_non_increasing_in_rate(hat in 0.2f64..1.0, lo in 0.0f64..1e6, width in 0.0f64..1e6, r1 in 0.0f64..3e6, r2 in 0.0f64..3e6) {
        let p = GammaParams::<f64>::default();
        let (a, b) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let ga = compute_gamma(hat, &p, a, lo, lo + width);
        let gb = compute_gamma(hat, &p, b, lo, lo + width);
        prop_assert!(gb <= ga);
        prop_assert!(gb >= p.gamma_min - 1e-12 && ga <= hat + 1e-12);
    }

    #[test]
    fn calibration_hits_bounds(p in params_strategy()) {
        prop_assert_eq!(p.target_size(p.t_min()), p.s_min());
        prop_assert_eq!(p.target_size(p.t_max()), p.s_max());
        let s = p.sizing(p.t_min()).unwrap();
        prop_assert!((s - p.s_min() as f64).abs() <= 1e-6 * p.s_max() as f64);
    }

    #[test]
    fn target_size_monotone(p in params_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        let span = (p.t_max() / p.t_min()).ln();
        // Reach a little outside the range to cover the clamp.
        let ta = p.t_min() * (span * (1.2 * a - 0.1)).exp();
        let tb = p.t_min() * (span * (1.2 * b - 0.1)).exp();
        prop_assert!(p.target_size(tb) >= p.target_size(ta));
    }

    #[test]
    fn closed_loop_preserves_order(p in params_strategy(), b0 in 1e-7f64..0.1, b1 in 1e-9f64..0.1, x in 0.1f64..1e4, dx in 1e-3f64..1e3) {
        let g = PowerLaw::affine(b0, b1).unwrap();
        let (lo, hi) = (closed_loop_map(&p, &g, x), closed_loop_map(&p, &g, x + dx));
        prop_assert!(hi >= lo);
        // Strict while neither cost hits a clamp.
        let (ga, gb) = (b0 + b1 * x, b0 + b1 * (x + dx));
        if ga > p.t_min() && gb < p.t_max() {
            prop_assert!(hi > lo);
        }
    }

    #[test]
    fn iterates_never_mix(b0 in 1e-6f64..0.1, b1 in 1e-8f64..1e-3, s0 in 1.0f64..1000.0) {
        let p = PackagerParams::new(1, 1000, 1e-6, 0.1, 5.0).unwrap();
        let g = PowerLaw::affine(b0, b1).unwrap();
        let tr = fixed_point_iterate(&p, &g, s0, 1e-9, 20_000).unwrap();
        prop_assert_ne!(tr.classification, Monotonicity::Mixed);
    }
}

#[test]
fn keep_fraction_matches_gamma() {
    let e = Event::new(0, 0, 0, Polarity::Positive);
    for (seed, gamma) in [(1u64, 0.2f64), (2, 0.5), (3, 0.8)] {
        let n = 1_000_000u32;
        let mut f = RandomRemoval::new(seed);
        let kept = (0..n).filter(|_| EventFilter::<f64>::decide(&mut f, &e, gamma).is_keep()).count() as f64;
        let sigma = (n as f64 * gamma * (1.0 - gamma)).sqrt();
        assert!((kept - n as f64 * gamma).abs() <= 3.0 * sigma, "gamma {gamma}: kept {kept}");
    }
}

#[test]
fn removal_is_deterministic() {
    let e = Event::new(0, 0, 0, Polarity::Negative);
    let run = |seed| {
        let mut f = RandomRemoval::new(seed);
        (0..5000).map(|i| EventFilter::<f64>::decide(&mut f, &e, (i % 10) as f64 / 10.0).is_keep()).collect::<Vec<_>>()
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}

#[test]
fn phi_increasing_with_one_inflection() {
    // Wide enough to contain the lower inflection, short of the upper one.
    let (t_min, t_max, kappa) = (1e-6f64, 0.5, 5.0);
    let n = 10_000;
    let ts: Vec<f64> = (0..n).map(|j| t_min * (t_max / t_min).powf(j as f64 / (n - 1) as f64)).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| phi(t, kappa).unwrap()).collect();
    assert!(ys.windows(2).all(|w| w[1] > w[0]));

    let t_flex = inflection_point(kappa).unwrap();
    assert!(t_min < t_flex && t_flex < t_max);
    assert!(second_inflection_point(kappa).unwrap() > t_max);
    let mut signs = Vec::new();
    for j in 1..n - 1 {
        let h1 = ts[j] - ts[j - 1];
        let h2 = ts[j + 1] - ts[j];
        let d2 = 2.0 * ((ys[j + 1] - ys[j]) / h2 - (ys[j] - ys[j - 1]) / h1) / (h1 + h2);
        if d2 != 0.0 {
            signs.push(d2 > 0.0);
        }
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1);
    let flip = signs.windows(2).position(|w| w[0] != w[1]).unwrap();
    let t_at = ts[flip + 1];
    assert!((t_at / t_flex).ln().abs() < 0.01, "sign change at {t_at}, expected {t_flex}");
}

#[test]
fn taylor_table_within_one_event() {
    let p = PackagerParams::<f64>::default();
    let table = TaylorTable::build(p.t_min(), p.t_max(), p.kappa(), 5, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let span = (p.t_max() / p.t_min()).ln();
    for _ in 0..10_000 {
        let t = p.t_min() * (span * rng.random::<f64>()).exp();
        let exact = p.target_size(t) as i64;
        let approx = p.target_size_with(&table, t).unwrap() as i64;
        assert!((exact - approx).abs() <= 1, "t={t}: {exact} vs {approx}");
    }
}

#[test]
fn sizing_derivative_matches_difference_quotient() {
    let p = PackagerParams::<f64>::default();
    for j in 0..100 {
        let t = p.t_min() * (p.t_max() / p.t_min()).powf(j as f64 / 99.0);
        let h = t * 1e-6;
        let fd = (p.sizing(t + h).unwrap() - p.sizing(t - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(fd, p.sizing_derivative(t), max_relative = 1e-6);
    }
}

#[test]
fn iterate_agrees_with_bisection() {
    let p = PackagerParams::new(1, 1000, 1e-6, 0.1, 5.0).unwrap();
    for (b0, b1) in [(1e-5f64, 1e-6f64), (1e-4, 1e-5), (1e-3, 1e-7)] {
        let g = PowerLaw::affine(b0, b1).unwrap();
        let root = fixed_point_bisect(&p, &g, 1e-10).unwrap();
        let tr = fixed_point_iterate(&p, &g, 10.0, 1e-10, 100_000).unwrap();
        let limit = tr.limit.expect("converges");
        assert!((limit - root).abs() < 1e-6 * 1000.0, "{b0},{b1}: {limit} vs {root}");
    }
}
