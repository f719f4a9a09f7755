use std::path::Path;

use dea_core::madea::{
    evaluate_allocation, madea_all, madea_oracle, madea_score, summarize, ActivityIo, ActivityScores,
    ActivityStructure, AlphaMode, ScenarioSpec,
};
use dea_core::{Dataset, DmuRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Both inputs shared; outputs: teaching-only, research-only, split.
fn toy_structure() -> ActivityStructure {
    ActivityStructure {
        teaching: ActivityIo {
            name: "teaching".into(),
            inputs: vec![],
            outputs: vec![0],
        },
        research: ActivityIo {
            name: "research".into(),
            inputs: vec![],
            outputs: vec![1],
        },
        shared_inputs: vec![0, 1],
        split_outputs: vec![2],
    }
}

fn toy_instance(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.gen_range(2..=4);
    let records = (0..s)
        .map(|k| DmuRecord {
            id: format!("U{k}"),
            inputs: (0..2).map(|_| rng.gen_range(1.0..10.0)).collect(),
            outputs: (0..3).map(|_| rng.gen_range(1.0..10.0)).collect(),
        })
        .collect();
    Dataset::new(
        vec!["GE".into(), "IE".into()],
        vec!["UGS".into(), "PUB".into(), "DrS".into()],
        records,
    )
    .unwrap()
}

fn scenarios() -> [ScenarioSpec; 2] {
    [ScenarioSpec::fixed_priorities(), ScenarioSpec::endogenous_priorities()]
}

#[test]
fn optimum_dominates_grid_bound() {
    let structure = toy_structure();
    for seed in 0..8 {
        let ds = toy_instance(seed);
        for scenario in scenarios() {
            for k in 0..ds.len() {
                let r = madea_score(&ds, &structure, &scenario, k).unwrap();
                let bound = madea_oracle(&ds, &structure, &scenario, k, 9).unwrap();
                assert!(r.total >= bound - 1e-2, "seed {seed} k {k}: {} < {bound}", r.total);
            }
        }
    }
}

#[test]
fn reported_optimum_is_feasible_and_consistent() {
    let structure = toy_structure();
    for seed in 100..110 {
        let ds = toy_instance(seed);
        for scenario in scenarios() {
            let run = madea_all(&ds, &structure, &scenario).unwrap();
            for (k, r) in run.results.iter().enumerate() {
                let eval = evaluate_allocation(
                    &ds,
                    &structure,
                    &r.lambdas,
                    &r.betas,
                    &r.input_weights,
                    &r.output_weights,
                );
                let combined = r.alpha_teaching * eval.teaching[k] + r.alpha_research * eval.research[k];
                assert!((r.total - combined).abs() <= 1e-9);
                assert!((r.alpha_teaching + r.alpha_research - 1.0).abs() <= 1e-12);
                for s in 0..ds.len() {
                    assert!(eval.teaching[s] <= 1.0 + 1e-9);
                    assert!(eval.research[s] <= 1.0 + 1e-9);
                }
                for l in &r.lambdas {
                    assert!((scenario.lambda_box.0..=scenario.lambda_box.1).contains(l));
                }
                for b in &r.betas {
                    assert!((scenario.beta_box.0..=scenario.beta_box.1).contains(b));
                }
                if let AlphaMode::Endogenous = scenario.alpha {
                    assert!((r.alpha_teaching - eval.teaching_input_share[k]).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn finer_grid_never_lowers_the_bound() {
    let structure = toy_structure();
    for seed in 200..204 {
        let ds = toy_instance(seed);
        for scenario in scenarios() {
            let coarse = madea_oracle(&ds, &structure, &scenario, 0, 5).unwrap();
            let fine = madea_oracle(&ds, &structure, &scenario, 0, 9).unwrap();
            assert!(fine >= coarse);
        }
    }
}

#[test]
fn tighter_epsilon_never_raises_the_optimum() {
    let structure = toy_structure();
    let ds = toy_instance(300);
    let base = ScenarioSpec::endogenous_priorities();
    let mut tight = base;
    tight.solver.epsilon = 1e-2;
    for k in 0..ds.len() {
        let loose = madea_score(&ds, &structure, &base, k).unwrap();
        let strict = madea_score(&ds, &structure, &tight, k).unwrap();
        assert!(strict.total <= loose.total + 1e-9);
    }
}

#[test]
fn same_seed_same_answer() {
    let ds = toy_instance(400);
    let sc = ScenarioSpec::fixed_priorities();
    let a = madea_all(&ds, &toy_structure(), &sc).unwrap();
    let b = madea_all(&ds, &toy_structure(), &sc).unwrap();
    assert_eq!(a, b);
}

fn reference_rows() -> (Vec<ActivityScores>, Vec<ActivityScores>, Vec<f64>) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_scores.csv");
    let mut reader = csv::Reader::from_path(path).unwrap();
    let (mut s1, mut s2, mut dea) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.records() {
        let row = row.unwrap();
        let v = |i: usize| row[i].parse::<f64>().unwrap();
        dea.push(v(1));
        s1.push(ActivityScores {
            total: v(2),
            teaching: v(3),
            research: v(4),
            alpha_teaching: 0.5,
        });
        s2.push(ActivityScores {
            total: v(6),
            teaching: v(7),
            research: v(8),
            alpha_teaching: v(5),
        });
    }
    (s1, s2, dea)
}

#[test]
fn reference_table_summary() {
    // values computed independently from the 45-row table
    let (s1, s2, _) = reference_rows();
    assert_eq!(s1.len(), 45);
    let a = summarize(&s1).unwrap();
    let b = summarize(&s2).unwrap();
    let close = |x: f64, y: f64| (x - y).abs() < 5e-5;
    assert!(close(a.total.mean, 0.6684));
    assert!(close(a.teaching.mean, 0.6533));
    assert!(close(a.research.mean, 0.6756));
    assert!(close(a.total.std_dev, 0.1289));
    assert!(close(a.teaching.std_dev, 0.2084));
    assert!(close(a.research.std_dev, 0.1706));
    assert!(close(b.total.mean, 0.7193));
    assert!(close(b.teaching.mean, 0.6416));
    assert!(close(b.research.mean, 0.6602));
    assert!(close(b.alpha_teaching.mean, 0.5491));
    assert_eq!(
        (a.efficient_total, a.efficient_teaching, a.efficient_research),
        (2, 6, 4)
    );
    assert_eq!(
        (b.efficient_total, b.efficient_teaching, b.efficient_research),
        (2, 6, 4)
    );
}
