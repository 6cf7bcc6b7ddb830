//! Harness contract: configuration round-trip, CSV shape, determinism and
//! independence from the worker count.

use std::fs;

use belman::harness::{
    emit_csv, percentile_75, preset, presets, run_experiment, ExperimentResult, Runs, AGG_HEADER, QUEUE_RUNS_HEADER,
    RUNS_HEADER,
};
use belman::{BanditError, ExperimentConfig};

fn small_bandit() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{"schema_version":1,"name":"small","mode":"exploit",
            "instance":{"family":"bernoulli","theta":[0.3,0.5,0.6]},
            "algorithms":["belman","ucb","thompson","random"],
            "horizon":60,"n_runs":5,"base_seed":99}"#,
    )
    .unwrap()
}

fn small_queue() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{"schema_version":1,"name":"q","mode":"queueing",
            "queue":{"lambda":0.3,"mu":[0.5,0.2,0.4]},
            "algorithms":["belman-q","q-ucb","opt","random"],
            "horizon":80,"n_runs":4,"base_seed":5}"#,
    )
    .unwrap()
}

fn csv_bytes(res: &ExperimentResult) -> (Vec<u8>, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    emit_csv(res, dir.path()).unwrap();
    (
        fs::read(dir.path().join("runs.csv")).unwrap(),
        fs::read(dir.path().join("agg.csv")).unwrap(),
    )
}

#[test]
fn config_json_round_trips() {
    for p in presets() {
        let back = ExperimentConfig::from_json(&p.config.to_json()).unwrap();
        assert_eq!(back, p.config, "{}", p.name);
    }
}

#[test]
fn unknown_fields_and_bad_values_are_rejected() {
    let unknown = r#"{"schema_version":1,"mode":"exploit","instance":{"family":"bernoulli","theta":[0.1,0.2]},
        "algorithms":["ucb"],"horizon":10,"n_runs":1,"colour":"red"}"#;
    assert!(ExperimentConfig::from_json(unknown).is_err());

    let mut cfg = small_bandit();
    cfg.horizon = 0;
    cfg.n_runs = 0;
    cfg.algorithms.push("nope".into());
    match cfg.validate() {
        Err(BanditError::Validation(p)) => assert_eq!(p.len(), 3, "{p:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_preset_validates() {
    for p in presets() {
        p.config.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
    }
}

#[test]
fn csv_shapes_and_exact_round_trip() {
    let cfg = small_bandit();
    let res = run_experiment(&cfg, 2).unwrap();
    let (runs, agg) = csv_bytes(&res);
    let runs = String::from_utf8(runs).unwrap();
    let agg = String::from_utf8(agg).unwrap();
    let mut lines = runs.lines();
    assert_eq!(lines.next(), Some(RUNS_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), cfg.algorithms.len() * cfg.n_runs * cfg.horizon);

    // every real parses back to the value in memory
    let Runs::Bandit(list) = &res.runs else { panic!() };
    for (row, (run, i)) in rows
        .iter()
        .zip(list.iter().flat_map(|r| (0..r.trace.len()).map(move |i| (r, i))))
    {
        assert_eq!(row[0].parse::<usize>().unwrap(), run.run_id);
        assert_eq!(row[1], run.algorithm);
        assert_eq!(row[4].parse::<f64>().unwrap(), run.trace.records[i].reward);
        assert_eq!(row[5].parse::<f64>().unwrap(), run.cum_regret[i]);
    }

    let mut agg_lines = agg.lines();
    assert_eq!(agg_lines.next(), Some(AGG_HEADER));
    // two metrics per algorithm, one row per step
    assert_eq!(agg_lines.count(), cfg.algorithms.len() * 2 * cfg.horizon);
}

#[test]
fn queue_csv_leaves_idle_slots_empty() {
    let res = run_experiment(&small_queue(), 1).unwrap();
    let (runs, _) = csv_bytes(&res);
    let runs = String::from_utf8(runs).unwrap();
    let mut lines = runs.lines();
    assert_eq!(lines.next(), Some(QUEUE_RUNS_HEADER));
    let mut idle = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 9);
        if cols[3].is_empty() {
            assert!(cols[4].is_empty());
            idle += 1;
        }
    }
    assert!(idle > 0, "a lightly loaded queue has idle slots");
}

#[test]
fn opt_has_zero_queue_regret() {
    let res = run_experiment(&small_queue(), 2).unwrap();
    for run in res.queue_runs("opt") {
        assert!(run.queue_regret.iter().all(|&r| r == 0.0));
    }
}

#[test]
fn reruns_are_byte_identical() {
    for cfg in [small_bandit(), small_queue()] {
        let a = csv_bytes(&run_experiment(&cfg, 2).unwrap());
        let b = csv_bytes(&run_experiment(&cfg, 2).unwrap());
        assert_eq!(a, b, "{}", cfg.name);
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    for cfg in [small_bandit(), small_queue()] {
        let one = run_experiment(&cfg, 1).unwrap();
        let many = run_experiment(&cfg, 5).unwrap();
        assert_eq!(one, many, "{}", cfg.name);
    }
}

#[test]
fn seeds_change_the_output() {
    let cfg = small_bandit();
    let mut other = cfg.clone();
    other.base_seed += 1;
    assert_ne!(
        csv_bytes(&run_experiment(&cfg, 1).unwrap()),
        csv_bytes(&run_experiment(&other, 1).unwrap())
    );
}

#[test]
fn adding_an_algorithm_leaves_the_others_unchanged() {
    let cfg = small_bandit();
    let mut more = cfg.clone();
    more.algorithms.insert(0, "ucb-tuned".into());
    let a = run_experiment(&cfg, 1).unwrap();
    let b = run_experiment(&more, 1).unwrap();
    for name in &cfg.algorithms {
        let ra: Vec<_> = a.bandit_runs(name).into_iter().map(|r| &r.trace).collect();
        let rb: Vec<_> = b.bandit_runs(name).into_iter().map(|r| &r.trace).collect();
        assert_eq!(ra, rb, "{name}");
    }
}

#[test]
fn single_run_p75_equals_the_run() {
    let mut cfg = small_bandit();
    cfg.n_runs = 1;
    let res = run_experiment(&cfg, 1).unwrap();
    for agg in &res.aggregates {
        assert_eq!(agg.mean, agg.p75);
    }
}

#[test]
fn empty_inputs_are_errors() {
    assert!(matches!(percentile_75(&[]), Err(BanditError::Empty(_))));
}

#[test]
fn presets_are_listed_by_name() {
    for name in [
        "fig1",
        "fig2",
        "fig3",
        "fig4_longhorizon",
        "fig4_longhorizon_full",
        "fig5_twophase",
        "fig8_queueing_a",
        "fig8_queueing_b",
        "fig8_queueing_c",
    ] {
        assert!(preset(name).is_some(), "{name}");
    }
    assert!(preset("fig9").is_none());
}

#[test]
fn baseline_constants_are_configurable() {
    let text = r#"{"schema_version":1,"name":"c","mode":"exploit",
        "instance":{"family":"bernoulli","theta":[0.3,0.5,0.6]},
        "algorithms":["kl-ucb","bayes-ucb","ucb"],"horizon":200,"n_runs":3,"base_seed":4,
        "baselines":{"klucb_c":0.0,"bayes_ucb_c":5.0}}"#;
    let tuned = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(tuned.baselines.klucb_c, 0.0);
    assert_eq!(tuned.baselines.q_ths_explore, 3.0);
    assert_eq!(ExperimentConfig::from_json(&tuned.to_json()).unwrap(), tuned);

    let mut plain = tuned.clone();
    plain.baselines = Default::default();
    assert!(!plain.to_json().contains("baselines"), "defaults are not written out");
    let a = run_experiment(&tuned, 1).unwrap();
    let b = run_experiment(&plain, 1).unwrap();
    let traces = |r: &ExperimentResult, n: &str| r.bandit_runs(n).into_iter().map(|x| x.trace.clone()).collect::<Vec<_>>();
    assert_ne!(traces(&a, "kl-ucb"), traces(&b, "kl-ucb"));
    assert_ne!(traces(&a, "bayes-ucb"), traces(&b, "bayes-ucb"));
    assert_eq!(traces(&a, "ucb"), traces(&b, "ucb"));

    for bad in [r#""klucb_c":-1"#, r#""q_ucb_scale":0"#, r#""q_ths_explore":-0.5"#, r#""colour":1"#] {
        let text = text.replace(r#""klucb_c":0.0"#, bad);
        assert!(ExperimentConfig::from_json(&text).is_err(), "{bad}");
    }
}

#[test]
fn queue_constants_reach_the_schedulers() {
    let mut cfg = small_queue();
    cfg.horizon = 400;
    let base = run_experiment(&cfg, 1).unwrap();
    cfg.baselines.q_ucb_scale = 0.1;
    cfg.baselines.q_ths_explore = 0.0;
    let tuned = run_experiment(&cfg, 1).unwrap();
    let arms = |r: &ExperimentResult, n: &str| {
        r.queue_runs(n).into_iter().map(|x| x.trace.clone()).collect::<Vec<_>>()
    };
    assert_ne!(arms(&base, "q-ucb"), arms(&tuned, "q-ucb"));
    assert_eq!(arms(&base, "belman-q"), arms(&tuned, "belman-q"));
}
