use mhpm::checkpoint::Checkpoint;
use mhpm::harness::{charlm, RunConfig};
use mhpm::heterarchy::{tick_counts, HeterarchyGraph};

fn small(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.set("general", "seed", &seed.to_string()).unwrap();
    cfg.set("env", "corpus_len", "3000").unwrap();
    cfg.set("env", "log_every", "50").unwrap();
    cfg
}

#[test]
fn clock_counts_after_64_ticks() {
    let (lm, metrics) = charlm::run(&small(1), 64, None).unwrap();
    let fired: Vec<u64> = lm.graph().nodes().iter().map(|n| n.fire_count()).collect();
    assert_eq!(fired, vec![64, 16, 4]);
    assert_eq!(fired, tick_counts(64, 4, 3));
    assert_eq!(metrics.last("layer3", "fire_count"), Some(4.0));
    assert_eq!(metrics.last("layer3", "emit_count"), Some(1.0));
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = small(4);
    let (full, full_metrics) = charlm::run(&cfg, 400, None).unwrap();
    let (half, _) = charlm::run(&cfg, 200, None).unwrap();
    let mut ckpt = Checkpoint::new();
    half.save(&mut ckpt);
    // Round-trip through text, as the CLI does.
    let ckpt = Checkpoint::parse(&ckpt.to_text()).unwrap();
    let (resumed, resumed_metrics) = charlm::run(&cfg, 400, Some(&ckpt)).unwrap();

    let mut a = Checkpoint::new();
    full.save(&mut a);
    let mut b = Checkpoint::new();
    resumed.save(&mut b);
    assert_eq!(a.to_text(), b.to_text());

    let tail: Vec<_> = full_metrics.rows.iter().filter(|r| r.tick > 200).cloned().collect();
    assert_eq!(tail, resumed_metrics.rows);
}

#[test]
fn updates_touch_only_own_parameters() {
    let cfg = small(2);
    let ((lm, _), report) = HeterarchyGraph::audited(|| charlm::run(&cfg, 1000, None).unwrap());
    assert_eq!(lm.tick(), 1000);
    assert!(report.checked > 0);
    assert_eq!(report.violations, 0);
}

#[test]
fn same_seed_same_metrics() {
    let cfg = small(9);
    let a = charlm::run(&cfg, 300, None).unwrap().1.to_csv().unwrap();
    let b = charlm::run(&cfg, 300, None).unwrap().1.to_csv().unwrap();
    assert_eq!(a, b);
    let c = charlm::run(&small(10), 300, None).unwrap().1.to_csv().unwrap();
    assert_ne!(a, c);
}

#[test]
fn summary_reads_first_and_last_tenth() {
    assert_eq!(charlm::first_last_tenth(&(1..=20).map(f64::from).collect::<Vec<_>>()), (1.5, 19.5));
    assert_eq!(charlm::first_last_tenth(&[3.0, 5.0]), (3.0, 5.0));
}
