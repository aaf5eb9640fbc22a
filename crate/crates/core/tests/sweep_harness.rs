use nkge_core::harness::cache::ReferenceCache;
use nkge_core::harness::config::SweepConfig;
use nkge_core::harness::{self, Execution, PointStatus};

const SPATIAL: &str = r#"
name = "small-spatial"
scheme = "cnfd"
mode = "standard"
beta = 1.0
eps_list = [1.0, 0.5]
axis = "spatial"
resolutions = [0.7853981633974483, 0.39269908169872414, 0.19634954084936207]
fixed = 0.01
preset = "paper-4.1"
reference_h = 0.04908738521234052
reference_tau = 0.005
"#;

const UNSTABLE: &str = r#"
scheme = "lffd"
mode = "standard"
beta = 0.0
eps_list = [1.0]
axis = "temporal"
resolutions = [0.4, 0.1, 0.05]
fixed = 0.19634954084936207
t0 = 20.0
preset = "paper-4.1"
reference_h = 0.19634954084936207
reference_tau = 0.05
"#;

fn csv_of(cfg: &SweepConfig, exec: Execution) -> Vec<u8> {
    let records = harness::run_sweep_with(cfg, exec, &ReferenceCache::in_memory()).unwrap();
    let mut out = Vec::new();
    harness::write_records(&mut out, &records).unwrap();
    out
}

#[test]
fn sweeps_are_deterministic() {
    let cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    let a = csv_of(&cfg, Execution::Sequential);
    let b = csv_of(&cfg, Execution::Sequential);
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("scheme,mode,beta,eps,h,tau,t_final,error,order,status\n"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[cfg(feature = "parallel")]
#[test]
fn parallel_and_sequential_runners_agree_bitwise() {
    let mut cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    cfg.threads = Some(3);
    assert_eq!(csv_of(&cfg, Execution::Sequential), csv_of(&cfg, Execution::Parallel));
}

#[test]
fn blow_up_does_not_poison_its_neighbours() {
    let cfg = SweepConfig::from_toml_str(UNSTABLE).unwrap();
    let all = harness::run_sweep_sequential(&cfg, &ReferenceCache::in_memory()).unwrap();
    assert_eq!(all[0].status, PointStatus::BlowUp);
    assert_eq!(all[0].error, None);
    assert!(all[0].message.is_some());

    let mut trimmed = cfg.clone();
    trimmed.resolutions.remove(0);
    let rest = harness::run_sweep_sequential(&trimmed, &ReferenceCache::in_memory()).unwrap();
    assert_eq!(rest.len(), 2);
    for (a, b) in all[1..].iter().zip(&rest) {
        assert_eq!(a.status, PointStatus::Ok);
        assert_eq!(a.error, b.error);
        assert_eq!(a.order, b.order);
        assert_eq!(a.to_row(), b.to_row());
    }
    assert_eq!(all[1].order, None);
    assert!(all[2].order.is_some());
}

#[test]
fn single_resolution_sweep_has_no_orders() {
    let mut cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    cfg.resolutions.truncate(1);
    let records = harness::run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.order.is_none() && r.error.is_some()));
}

#[test]
fn cached_references_are_reused_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    let first = harness::run_sweep_sequential(&cfg, &ReferenceCache::with_dir(dir.path()).unwrap()).unwrap();
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, cfg.eps_list.len());
    let second = harness::run_sweep_sequential(&cfg, &ReferenceCache::with_dir(dir.path()).unwrap()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn records_survive_a_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    let records = harness::run_sweep(&cfg).unwrap();
    harness::write_records_to_path(&path, &records).unwrap();
    let rows = nkge_core::io::read_sweep_rows(&path).unwrap();
    let back = harness::records_from_rows(&rows).unwrap();
    let a = harness::check_scalability(&records, cfg.beta, 4.0).unwrap();
    let b = harness::check_scalability(&back, cfg.beta, 4.0).unwrap();
    assert_eq!(a, b);
    for (x, y) in records.iter().zip(&back) {
        assert_eq!((x.eps_index, x.res_index, x.axis), (y.eps_index, y.res_index, y.axis));
    }
}

#[test]
fn orders_are_second_order_on_a_small_sweep() {
    let cfg = SweepConfig::from_toml_str(SPATIAL).unwrap();
    let records = harness::run_sweep(&cfg).unwrap();
    for r in records.iter().filter(|r| r.res_index > 0) {
        let p = r.order.unwrap();
        assert!((p - 2.0).abs() < 0.3, "eps = {}, h = {}: order {p}", r.eps, r.h);
    }
}
