mod common;

use lingdiv::diversity::{DiversityConfig, Measure};
use lingdiv::effectiveness::{all_effectiveness, concurrent_compare, lagged_compare};
use lingdiv::synthgen::{generate, scenario, Scenario};

#[test]
fn diversity_drift_without_skill_link_is_not_significant() {
    let (mut cfg, profiles) = scenario(Scenario::Diversification, 90, 14);
    cfg.rating_skill_gain = 0.0;
    let corpus = common::load(&generate(&cfg, &profiles).unwrap());
    let dcfg = DiversityConfig::default();
    let lagged = lagged_compare(&corpus, &dcfg, Measure::Within, 14).unwrap();
    let concurrent = concurrent_compare(&corpus, &dcfg, Measure::Within, 14).unwrap();
    assert!(lagged.comparison.p_value > 0.05, "{lagged:?}");
    assert!(concurrent.comparison.p_value > 0.05, "{concurrent:?}");
    assert_eq!(lagged.comparison.tercile_size, lagged.comparison.n_individuals / 3);
}

#[test]
fn effectiveness_rate_matches_generator() {
    let (cfg, profiles) = scenario(Scenario::Null, 60, 15);
    let corpus = common::load(&generate(&cfg, &profiles).unwrap());
    let records = all_effectiveness(&corpus, 0..120);
    assert_eq!(records.len(), 60);
    let rated: usize = records.iter().map(|r| r.n_ratings).sum();
    let rate = rated as f64 / (60.0 * 120.0);
    assert!((rate - cfg.rating_rate).abs() < 0.02, "rating rate {rate}");
}
