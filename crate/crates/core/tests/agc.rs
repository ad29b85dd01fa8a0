use bessbid_core::agc::{
    generate_signal, read_signal_csv, samples_for, simulate_tracking, track_schedule, zero_mean_bounded, AgcTrace,
    TrackingInterval,
};
use bessbid_core::scenario::BessParams;
use proptest::prelude::*;

fn bess() -> BessParams {
    BessParams::new(40.0, 10.0)
}

#[test]
fn sample_count_follows_interval_length() {
    assert_eq!(samples_for(0.25), 225);
    assert_eq!(samples_for(1.0), 900);
}

#[test]
fn constant_noise_becomes_zero() {
    let v = zero_mean_bounded(vec![0.3; 225]);
    assert!(v.iter().all(|x| x.abs() <= 1e-15), "{:?}", &v[..3]);
}

#[test]
fn oversized_noise_is_brought_into_range() {
    let raw: Vec<f64> = (0..100).map(|i| if i == 0 { 50.0 } else { -0.2 }).collect();
    let v = zero_mean_bounded(raw);
    assert!(v.iter().all(|x| x.abs() <= 1.0));
    assert!((v.iter().sum::<f64>() / 100.0).abs() <= 1e-12);
}

#[test]
fn seeds_give_distinct_valid_traces() {
    let a = generate_signal(1, 225);
    let b = generate_signal(2, 225);
    assert_ne!(a, b);
    assert_eq!(generate_signal(1, 225), a);
    for t in [&a, &b] {
        assert_eq!(t.signal.len(), 225);
        assert!(t.mean().abs() <= 1e-12);
        assert!(t.signal.iter().all(|x| x.abs() <= 1.0));
    }
}

#[test]
fn zero_award_has_zero_excursion() {
    let iv = TrackingInterval { soc_start: 20.0, supply: 3.0, demand: 0.0, regcap: 0.0, delta_t: 0.25 };
    let r = simulate_tracking(&iv, &bess(), &generate_signal(7, 225));
    assert_eq!(r.max_excursion, 0.0);
    assert_eq!(r.regulation_delta, 0.0);
    assert!((r.soc_end - 19.25).abs() <= 1e-12);
}

#[test]
fn full_award_at_the_floor_is_the_boundary() {
    // Soc sits exactly one full-power interval above the floor; a signal
    // asking for injection throughout drains it to the floor and no further.
    let b = bess();
    let full_down = AgcTrace::from_samples(vec![1.0; 225]).unwrap();
    let iv =
        TrackingInterval { soc_start: b.soc_min + 10.0 * 0.25, supply: 0.0, demand: 0.0, regcap: 10.0, delta_t: 0.25 };
    let r = simulate_tracking(&iv, &b, &full_down);
    assert!((r.min_soc - b.soc_min).abs() <= 1e-9);
    assert!(!r.below_min);
    let tighter = TrackingInterval { soc_start: iv.soc_start - 1e-6, ..iv };
    assert!(simulate_tracking(&tighter, &b, &full_down).below_min);
}

#[test]
fn regulation_only_interval_keeps_soc() {
    let iv = TrackingInterval { soc_start: 20.0, supply: 0.0, demand: 0.0, regcap: 10.0, delta_t: 0.25 };
    let r = simulate_tracking(&iv, &bess(), &generate_signal(3, 225));
    assert!(r.regulation_delta.abs() <= 1e-9);
    assert!((r.soc_end - 20.0).abs() <= 1e-9);
    assert!(r.max_excursion > 0.0);
}

#[test]
fn csv_signal_is_split_into_intervals() {
    let mut text = String::from("signal\n");
    for i in 0..450 {
        text.push_str(&format!("{}\n", if i % 2 == 0 { 0.5 } else { -0.5 }));
    }
    let traces = read_signal_csv(text.as_bytes(), 225).unwrap();
    assert_eq!(traces.len(), 2);
    assert!(read_signal_csv(text.as_bytes(), 200).is_err());
    assert!(read_signal_csv("1.5\n-1\n".as_bytes(), 2).is_err());
}

#[test]
fn schedule_tracking_is_per_interval() {
    let ivs = vec![
        TrackingInterval { soc_start: 0.0, supply: 0.0, demand: 10.0, regcap: 0.0, delta_t: 1.0 },
        TrackingInterval { soc_start: 10.0, supply: 0.0, demand: 0.0, regcap: 5.0, delta_t: 1.0 },
    ];
    let r = track_schedule(&ivs, &bess(), 42);
    assert_eq!(r.len(), 2);
    assert!((r[0].soc_end - 10.0).abs() <= 1e-9);
    assert!(r.iter().all(|x| !x.violates_headroom()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_soc_ignores_the_award(seed in any::<u64>(), award in 0.0f64..10.0, net in -10.0f64..10.0) {
        let trace = generate_signal(seed, 225);
        let (supply, demand) = if net > 0.0 { (0.0, net) } else { (-net, 0.0) };
        let base = TrackingInterval { soc_start: 20.0, supply, demand, regcap: 0.0, delta_t: 0.25 };
        let with = TrackingInterval { regcap: award, ..base };
        let a = simulate_tracking(&base, &bess(), &trace);
        let b = simulate_tracking(&with, &bess(), &trace);
        prop_assert!((a.soc_end - b.soc_end).abs() <= 1e-9);
    }

    #[test]
    fn excursion_scales_with_capacity(seed in any::<u64>(), award in 0.1f64..5.0, k in 0.5f64..2.0) {
        let trace = generate_signal(seed, 225);
        let iv = TrackingInterval { soc_start: 20.0, supply: 0.0, demand: 0.0, regcap: award, delta_t: 0.25 };
        let a = simulate_tracking(&iv, &bess(), &trace);
        let b = simulate_tracking(&TrackingInterval { regcap: award * k, ..iv }, &bess(), &trace);
        prop_assert!((b.max_excursion - k * a.max_excursion).abs() <= 1e-9 * a.max_excursion.max(1.0));
    }
}
