mod common;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lingdiv::diversity::{compute_all, compute_scope, DiversityConfig, Measure, Scope};
use lingdiv::segmentation::Component;
use lingdiv::synthgen::{generate, null_corpus, scenario, GenConfig, Scenario};
use lingdiv::trends::heatmap;

const MESSAGES: usize = 20;
const WORDS: usize = 15;

fn message(rng: &mut ChaCha8Rng, words: &[&str], dist: &WeightedIndex<f64>) -> String {
    (0..WORDS).map(|_| words[dist.sample(rng)]).collect::<Vec<_>>().join(" ")
}

#[test]
fn iid_speaker_within_matches_source_entropy() {
    let probs: [f64; 4] = [0.5, 0.25, 0.125, 0.125];
    let entropy: f64 = probs.iter().map(|p| -p * p.log2()).sum();
    let words = ["aa", "bb", "cc", "dd"];
    let dist = WeightedIndex::new(probs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut records = Vec::new();
    for ind in ["x", "y", "z"] {
        for i in 0..120 {
            let msgs = (0..MESSAGES).map(|_| message(&mut rng, &words, &dist)).collect();
            records.push(common::record(ind, i, None, None, msgs));
        }
    }
    let run = compute_all(&common::corpus(records), &DiversityConfig::default(), 3).unwrap();
    let within: Vec<f64> = run.of_measure(Measure::Within).map(|r| r.value).collect();
    assert_eq!(within.len(), 18);
    for v in within {
        // test pools hold 3000 tokens, so the pool mean has sd near 0.015 bits
        assert!((v - entropy).abs() < 0.07, "within {v} vs entropy {entropy}");
    }
    for r in run.of_measure(Measure::Relative) {
        assert!(r.value.abs() < 0.07, "relative {}", r.value);
    }
}

#[test]
fn mixing_two_topics_raises_within() {
    let topic_a: Vec<String> = (0..30).map(|i| format!("a{i}")).collect();
    let topic_b: Vec<String> = (0..30).map(|i| format!("b{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let conv = |rng: &mut ChaCha8Rng, topic: &[String]| -> Vec<String> {
        (0..MESSAGES)
            .map(|_| (0..WORDS).map(|_| topic[rng.gen_range(0..topic.len())].as_str()).collect::<Vec<_>>().join(" "))
            .collect()
    };
    let mut records = Vec::new();
    for i in 0..120 {
        records.push(common::record("single", i, None, None, conv(&mut rng, &topic_a)));
        let topic = if rng.gen_bool(0.5) { &topic_a } else { &topic_b };
        records.push(common::record("mixed", i, None, None, conv(&mut rng, topic)));
    }
    let corpus = common::corpus(records);
    let run = compute_all(&corpus, &DiversityConfig::default(), 4).unwrap();
    for stage in 0..6 {
        let single = run.value("single", stage, Measure::Within).unwrap();
        let mixed = run.value("mixed", stage, Measure::Within).unwrap();
        assert!(mixed > single + 0.5, "stage {stage}: mixed {mixed} single {single}");
    }
}

#[test]
fn null_relative_values_take_both_signs() {
    let generated = null_corpus(&GenConfig { seed: 5, ..GenConfig::default() }, 20).unwrap();
    let run = compute_all(&common::load(&generated), &DiversityConfig::default(), 5).unwrap();
    let values: Vec<f64> = run.of_measure(Measure::Relative).map(|r| r.value).collect();
    assert!(values.iter().any(|&v| v < 0.0));
    assert!(values.iter().any(|&v| v > 0.0));
}

#[test]
fn scripted_closing_is_least_diverse_component() {
    let (cfg, profiles) = scenario(Scenario::ComponentDrift, 30, 6);
    let corpus = common::load(&generate(&cfg, &profiles).unwrap());
    let dcfg = DiversityConfig::component_default();
    let mean_within = |c: Component| {
        let run = compute_scope(&corpus, &dcfg, Scope::Component(c), 6).unwrap();
        let v: Vec<f64> = run.of_measure(Measure::Within).filter(|r| r.stage_index == 0).map(|r| r.value).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let goodbye = mean_within(Component::Goodbye);
    for c in Component::ALL.into_iter().filter(|&c| c != Component::Goodbye) {
        assert!(goodbye < mean_within(c) - 0.5, "goodbye {goodbye} vs {c}");
    }
}

#[test]
fn null_heatmap_false_positive_rate_is_low() {
    let cfg = GenConfig { seed: 7, messages_per_conv: 26.0, min_messages_per_conv: 20, ..GenConfig::default() };
    let generated = null_corpus(&cfg, 60).unwrap();
    let map = heatmap(&common::load(&generated), &DiversityConfig::default(), 7).unwrap();
    let computed: Vec<_> = map.cells.iter().filter(|c| c.cell.is_some()).collect();
    let significant = computed.iter().filter(|c| c.significant()).count();
    assert!(computed.len() >= 60);
    assert!(
        (significant as f64) / (computed.len() as f64) <= 0.15,
        "{significant} of {} cells significant",
        computed.len()
    );
}
