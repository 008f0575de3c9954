use std::fs;
use std::path::Path;

use envex::alignment::CSV_HEADER;
use envex::attribution::AttributionFile;
use envex_harness::config::{ModelKind, Stratum};
use envex_harness::stages::{StrataFile, Summary};
use envex_harness::{resolve_output, run_all, run_stage, ExperimentConfig, HarnessError, Layout, Stage};

const TINY: &str = r#"
seed = 3

[dataset]
d = 1024
n_train = 48
n_holdout = 32
n_real = 16
n_generalize = 16
fault_noise = [0.0, 0.1]

[training]
epochs = 8
learning_rate = 0.01
momentum = 0.9
batch_size = 8

[attribution]
sample_size = 3
background = 4

[[attribution.methods]]
method = "integrated_gradients"
steps = 16

[[attribution.methods]]
method = "grad_shap"
n_samples = 16
seed = 11

[[attribution.methods]]
method = "shapley"
n_permutations = 8
group_width = 64
seed = 12
exact = false

[[attribution.methods]]
method = "lime"
n_samples = 120
group_width = 64
kernel_width = 0.75
ridge_lambda = 1.0
seed = 13
"#;

fn tiny(out: &Path) -> ExperimentConfig {
    let mut cfg: ExperimentConfig = toml::from_str(TINY).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn run_tiny(out: &Path) -> ExperimentConfig {
    let cfg = tiny(out);
    run_all(&cfg, &Layout::new(out)).unwrap();
    cfg
}

#[test]
fn tiny_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_tiny(dir.path());
    let layout = Layout::new(dir.path());

    for p in [layout.detection(), layout.strata(), layout.alignment_csv(), layout.alignment_json(), layout.summary_json(), layout.summary_txt(), layout.manifest()] {
        assert!(p.exists(), "{} missing", p.display());
    }
    let csv = fs::read_to_string(layout.alignment_csv()).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));

    let summary: Summary = serde_json::from_slice(&fs::read(layout.summary_json()).unwrap()).unwrap();
    assert_eq!(summary.config_hash, cfg.hash());
    // two networks plus BASE, four splits each
    assert_eq!(summary.detection.len(), 3 * 4);

    let strata = StrataFile::load(&layout).unwrap();
    let explained: Vec<_> = strata.models.iter().filter(|m| m.skipped.is_none()).collect();
    assert_eq!(summary.alignment.len(), explained.len() * cfg.attribution.methods.len() * Stratum::ALL.len());
    for m in &explained {
        for sel in &m.strata {
            assert!(sel.indices.len() <= cfg.attribution.sample_size);
            assert!(sel.indices.windows(2).all(|w| w[0] < w[1]));
            let file = AttributionFile::load(&layout.attribution(m.model, "integrated_gradients", sel.stratum)).unwrap();
            assert_eq!(file.signals.len(), sel.indices.len());
            for s in &file.signals {
                assert_eq!(s.binned.len(), cfg.dataset.d / 2 + 1);
                assert!(s.score > 0.5);
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_tiny(a.path());
    run_tiny(b.path());
    let (la, lb) = (Layout::new(a.path()), Layout::new(b.path()));
    for (pa, pb) in [
        (la.model(ModelKind::Cnn), lb.model(ModelKind::Cnn)),
        (la.model(ModelKind::Fcn), lb.model(ModelKind::Fcn)),
        (la.detection(), lb.detection()),
        (la.strata(), lb.strata()),
        (la.alignment_csv(), lb.alignment_csv()),
        (la.summary_json(), lb.summary_json()),
    ] {
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{} differs", pa.display());
    }
}

#[test]
fn stages_report_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let layout = Layout::new(dir.path());

    match run_stage(Stage::Train, &cfg, &layout) {
        Err(HarnessError::MissingInput { stage, .. }) => assert_eq!(stage, "synth"),
        other => panic!("expected missing input, got {other:?}"),
    }
    run_stage(Stage::Synth, &cfg, &layout).unwrap();
    match run_stage(Stage::Report, &cfg, &layout) {
        Err(HarnessError::MissingStages(s)) => assert_eq!(s, ["train", "attribute", "align"]),
        other => panic!("expected missing stages, got {other:?}"),
    }
    assert!(!layout.summary_json().exists());
}

#[test]
fn changed_config_invalidates_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let layout = Layout::new(dir.path());
    run_stage(Stage::Synth, &cfg, &layout).unwrap();
    let mut other = cfg.clone();
    other.seed += 1;
    match run_stage(Stage::Report, &other, &layout) {
        Err(HarnessError::MissingStages(s)) => assert_eq!(s, ["synth", "train", "attribute", "align"]),
        other => panic!("expected missing stages, got {other:?}"),
    }
}

#[test]
fn cli_output_wins() {
    let cfg = tiny(Path::new("from-config"));
    assert_eq!(resolve_output(&cfg, Some(Path::new("cli"))), Path::new("cli"));
}
