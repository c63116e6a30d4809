use loadlens::features::{extract_features, write_features_csv};
use loadlens::ingest::{accel_magnitude, MagnitudeSeries};
use loadlens::learn::{evaluate, fit_lrm, Dataset};
use loadlens::momentplane::{classify_zone, to_plane, Zone, ZoneParams};
use loadlens::stats::sliding_windows;
use loadlens::synth::{gen_rr, gen_rr_labeled, gen_sessions, load_response, GenConfig, Protocol};
use loadlens::Feature;

#[test]
fn rest_windows_sit_near_the_normal() {
    let (mut normal, mut total) = (0, 0);
    for seed in 0..50 {
        let rr = gen_rr(&Protocol::rest(300.0), &GenConfig::with_seed(seed)).unwrap();
        for w in sliding_windows(&MagnitudeSeries::from_rr(&rr), 300, 30).unwrap() {
            let p = to_plane(w.moments.as_ref().unwrap(), w.t_mid_ms()).unwrap();
            total += 1;
            normal += usize::from(classify_zone(&p, ZoneParams::default()) == Zone::NormalVicinity);
        }
    }
    assert!(total >= 50);
    assert!(normal * 5 >= total * 4, "{normal}/{total}");
}

#[test]
fn staircase_load_and_recovery_shape() {
    let labeled = gen_rr_labeled(&Protocol::staircase(), &GenConfig::with_seed(7)).unwrap();
    let r = load_response(&labeled, 60, 10).unwrap();
    assert!(r.last_load_metric1.unwrap() > 2.0 * r.first_rest_metric1.unwrap(), "{r:?}");
    assert!(r.spearman_load.unwrap() > 0.5, "{r:?}");
    assert!(r.final_recovery_minute.unwrap() < r.final_load_minute.unwrap(), "{r:?}");
}

#[test]
fn staircase_shape_holds_across_seeds() {
    // a single 60-beat window is noisy: the last-load/first-rest ratio
    // misses 2 for a few percent of seeds, the aggregate shape never does
    let (mut ratio, mut shape) = (0, 0);
    for seed in 0..100 {
        let labeled = gen_rr_labeled(&Protocol::staircase(), &GenConfig::with_seed(seed)).unwrap();
        let r = load_response(&labeled, 60, 10).unwrap();
        ratio += usize::from(r.last_load_metric1.unwrap() > 2.0 * r.first_rest_metric1.unwrap());
        shape += usize::from(
            r.spearman_load.unwrap() > 0.5 && r.final_recovery_minute.unwrap() < r.final_load_minute.unwrap(),
        );
    }
    assert!(ratio >= 90, "{ratio}/100");
    assert!(shape >= 98, "{shape}/100");
}

fn session_features(n: usize, seed: u64) -> Vec<loadlens::SessionFeatures> {
    gen_sessions(n, seed)
        .unwrap()
        .iter()
        .map(|s| extract_features(&s.meta, &accel_magnitude(&s.accel, false).unwrap(), &s.rr).unwrap())
        .collect()
}

#[test]
fn features_are_reproducible() {
    let render = || {
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &session_features(30, 7)).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn pace_alone_separates_classes() {
    let rows = session_features(100, 7);
    let (ds, skipped) = Dataset::from_sessions(&rows, &[Feature::Pace]);
    assert_eq!(skipped, 0);
    let m = fit_lrm(&ds).unwrap();
    let e = evaluate(&m, &ds).unwrap();
    assert!(e.accuracy >= 0.95, "{e:?}");
}
