use aev_core::cycles::bundled;
use aev_core::degradation::{simulate_longevity, CellModel, DailySchedule, DegradationParams, LongevityOptions};
use aev_core::vehicles::bundled_vehicle;
use aev_core::Environment;

#[test]
fn longevity_days_fall_with_daily_miles() {
    let spec = bundled_vehicle("model3").unwrap();
    let cycle = bundled("composite").unwrap();
    let env = Environment::default();
    let runs: Vec<_> = [20.0, 50.0, 120.0]
        .iter()
        .map(|&miles| {
            let s = DailySchedule::for_vehicle(&spec, &env, &cycle, None, miles, 40.0).unwrap();
            let r = simulate_longevity(&spec, &s, &DegradationParams::default(), &CellModel::default(), &LongevityOptions::default())
                .unwrap();
            println!("{miles} mi/day: {} days, {} mi", r.days, r.longevity_miles);
            r
        })
        .collect();
    for w in runs.windows(2) {
        assert!(w[1].days <= w[0].days);
    }
}

#[test]
fn fade_curve_starts_fresh_and_ends_at_threshold() {
    let spec = bundled_vehicle("model3").unwrap();
    let s = DailySchedule::for_vehicle(&spec, &Environment::default(), &bundled("udds").unwrap(), None, 40.0, 40.0).unwrap();
    let opts = LongevityOptions { threshold: 0.95, ..Default::default() };
    let r = simulate_longevity(&spec, &s, &DegradationParams::default(), &CellModel::default(), &opts).unwrap();
    assert_eq!(r.fade_curve[0], (0.0, 1.0));
    let last = *r.fade_curve.last().unwrap();
    assert!(last.1 <= 0.95);
    assert!(r.fade_curve[r.fade_curve.len() - 2].1 > 0.95);
    assert_eq!(last.0, r.longevity_miles);
    assert_eq!(r.fade_curve.len(), r.days as usize + 1);
}
