use khop_core::experiment::{
    oversmoothing_demo, run_pair, run_sweep, Axis, BaseConfig, SweepSpec, SWEEP_CSV_HEADER,
};
use khop_core::khop::GenConfig;
use khop_core::reach::is_k_hop_similar;
use khop_core::sbm::{Dataset, SbmConfig};
use khop_core::train::TrainConfig;
use khop_core::Graph;

fn small_base() -> BaseConfig {
    BaseConfig {
        sbm: SbmConfig {
            n: 40,
            feature_dim: 8,
            ..SbmConfig::default()
        },
        gen: GenConfig::default(),
        train: TrainConfig {
            max_epochs: 30,
            hidden: 8,
            ..TrainConfig::default()
        },
    }
}

#[test]
fn sweep_writes_one_row_per_value_and_verifiable_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::new(small_base(), Axis::Classes, vec![2.0, 3.0, 4.0]);
    spec.runs_per_point = 2;
    spec.output_path = Some(dir.path().join("sweep.csv"));
    spec.records_path = Some(dir.path().join("runs.jsonl"));
    spec.graphs_dir = Some(dir.path().join("graphs"));
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 3);

    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SWEEP_CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("2,"));

    let records = std::fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 6);

    for value in [2, 3, 4] {
        for run in 0..2 {
            let graphs = dir.path().join("graphs");
            let original =
                Graph::load(graphs.join(format!("classes_{value}_run{run}_original.edges")))
                    .unwrap();
            let khop =
                Graph::load(graphs.join(format!("classes_{value}_run{run}_khop.edges"))).unwrap();
            assert!(is_k_hop_similar(&original, &khop, 2).unwrap());
        }
    }
}

#[test]
fn sweep_output_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::new(small_base(), Axis::Inter, vec![0.1, 0.3]);
    spec.runs_per_point = 2;
    spec.base_seed = 11;
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        spec.output_path = Some(dir.path().join(name));
        run_sweep(&spec).unwrap();
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_seeds_follow_base_plus_run() {
    let mut spec = SweepSpec::new(small_base(), Axis::Nodes, vec![30.0]);
    spec.runs_per_point = 3;
    spec.base_seed = 5;
    let rows = run_sweep(&spec).unwrap();
    let seeds: Vec<u64> = rows[0].runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![5, 6, 7]);
}

#[test]
fn zero_threshold_pair_agrees_everywhere() {
    let ds = Dataset::generate(&SbmConfig {
        n: 60,
        feature_dim: 8,
        seed: 2,
        ..SbmConfig::default()
    })
    .unwrap();
    let gen = GenConfig {
        threshold_fraction: 0.0,
        ..GenConfig::default()
    };
    let outcome = run_pair(
        &ds,
        &gen,
        &TrainConfig {
            max_epochs: 20,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(outcome.khop_graph, ds.graph);
    assert_eq!(outcome.pair.disagreement(), 0.0);
    assert_eq!(outcome.pair.result_original, outcome.pair.result_khop);
}

#[test]
fn oversmoothing_report_checks_power_completeness() {
    let ds = Dataset::generate(&SbmConfig {
        n: 60,
        p_inter: 0.0,
        feature_dim: 8,
        seed: 3,
        ..SbmConfig::default()
    })
    .unwrap();
    let report = oversmoothing_demo(
        &ds,
        8,
        &TrainConfig {
            max_epochs: 20,
            hidden: 8,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(report.components.iter().map(|c| c.size).sum::<usize>(), 60);
    // p_intra = 0.5 on 30 nodes gives diameter 2, well under 8
    assert!(report.components.iter().all(|c| c.power_complete));
    assert!(!report.graphs_identical);
    for c in &report.components {
        let (first, last) = (
            c.first_hidden_variance.unwrap(),
            c.last_hidden_variance.unwrap(),
        );
        assert!((0.0..=1.0).contains(&first) && (0.0..=1.0).contains(&last));
    }
}
