use std::fs;

use featforge_core::pipeline::{recommend, run_pipeline, KernelGrid, PipelineConfig, PipelineError};
use featforge_core::signal_io::{load_manifest, save_manifest, DatasetManifest};
use featforge_core::synth::{generate, Recipe, SynthSpec};

fn spectral_band(dir: &std::path::Path, per_class: usize) -> DatasetManifest {
    let spec = SynthSpec {
        per_class,
        seed: 11,
        ..SynthSpec::defaults(Recipe::SpectralBand)
    };
    generate(&spec, dir).unwrap().unwrap()
}

fn quick() -> PipelineConfig {
    PipelineConfig {
        grid: KernelGrid::Linear,
        k_schedule: vec![2, 4],
        ..Default::default()
    }
}

#[test]
fn zero_tau_halts_after_first_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = spectral_band(dir.path(), 15);
    let config = PipelineConfig { tau: 0.0, ..quick() };
    let report = run_pipeline(&manifest, &config).unwrap();
    assert_eq!(report.layers.len(), 1);
    assert_eq!(report.halting_layer, 1);
    assert!(report.converged);
    assert_eq!(report.layers[0].history.len(), 1);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = spectral_band(dir.path(), 15);
    let a = run_pipeline(&manifest, &quick()).unwrap().to_json();
    let b = run_pipeline(&manifest, &quick()).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn recommendations_resolve_to_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = spectral_band(dir.path(), 15);
    let report = run_pipeline(&manifest, &quick()).unwrap();
    let halting = report.halting_record().unwrap();
    let recs = recommend(&report, 100).unwrap();
    assert_eq!(recs.len(), halting.z.len());
    for (r, name) in recs.iter().zip(&halting.z_names) {
        assert_eq!(&r.name, name);
        assert!(r.explanation.contains("layer=1"));
    }
    for l in &report.layers {
        assert!(l.leakage_free && l.dual_feasible);
    }
}

#[test]
fn layers_escalate_in_order_with_growing_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = spectral_band(dir.path(), 15);
    let config = PipelineConfig { tau: 1.0, ..quick() };
    let report = run_pipeline(&manifest, &config).unwrap();
    let ids: Vec<u8> = report.layers.iter().map(|l| l.layer).collect();
    assert_eq!(ids, (1..=ids.len() as u8).collect::<Vec<_>>());
    for w in report.layers.windows(2) {
        assert!(w[0].feature_count < w[1].feature_count);
        assert!(w[0].score < 1.0);
    }
    if !report.converged {
        assert_eq!(ids.len(), 3);
        let best = report.layers.iter().map(|l| l.score).fold(f64::MIN, f64::max);
        assert_eq!(report.halting_record().unwrap().score, best);
    }
}

#[test]
fn broken_and_ragged_signals_become_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = spectral_band(dir.path(), 15);
    fs::write(&manifest.entries[0].path, "1.0\nnot-a-number\n").unwrap();
    let text = fs::read_to_string(&manifest.entries[1].path).unwrap();
    fs::write(&manifest.entries[1].path, format!("{text}0.5\n0.25\n")).unwrap();
    let reloaded = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let report = run_pipeline(&reloaded, &quick()).unwrap();
    assert_eq!(report.instances, 29);
    assert_eq!(report.signal_len, 1024);
    assert!(report.warnings.iter().any(|w| w.contains("dropped")));
    assert!(report.warnings.iter().any(|w| w.contains("truncated")));
}

#[test]
fn missing_rate_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = spectral_band(dir.path(), 5);
    manifest.fs = None;
    save_manifest(&manifest, &dir.path().join("nofs.csv")).unwrap();
    let m = load_manifest(&dir.path().join("nofs.csv")).unwrap();
    assert!(matches!(run_pipeline(&m, &quick()), Err(PipelineError::Config(_))));
    let with_fs = PipelineConfig {
        fs: Some(256.0),
        tau: 0.0,
        ..quick()
    };
    assert!(run_pipeline(&m, &with_fs).is_ok());
}
