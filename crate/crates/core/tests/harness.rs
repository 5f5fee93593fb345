mod common;

use std::sync::Arc;

use nalgebra::DVector;
use pasm_core::channel::ChannelRealization;
use pasm_core::detect::{detect, effective_channel, DetectorKind};
use pasm_core::harness::{
    compare, metadata_path, run_bound, run_pssm_baseline, run_sweep, substream, to_csv, write_csv, write_metadata,
    Baseline, Scenario, SweepConfig, CSV_HEADER,
};
use pasm_core::linalg::sample_cn;
use pasm_core::modem::{map_bits, spectral_efficiency};
use pasm_core::Vamp;
use rand::Rng;

fn quick(profile: &str, frames: u64) -> SweepConfig {
    let mut sc = SweepConfig::profile(profile).unwrap();
    sc.frames = frames;
    sc.powers_dbm.truncate(3);
    sc
}

#[test]
fn csv_does_not_depend_on_thread_count() {
    let sc = quick("fig6a", 300);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| to_csv(&run_sweep(&sc).unwrap()))
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert!(one.starts_with(CSV_HEADER));
}

#[test]
fn early_stop_and_ml_cap() {
    let mut sc = quick("fig6a", 2_000);
    sc.powers_dbm = vec![0.0];
    sc.max_bit_errors = 50;
    let recs = run_sweep(&sc).unwrap();
    for r in &recs {
        assert!(r.frames <= 2_000 && r.frames % sc.chunk_frames == 0);
        if r.detector == "ML" {
            assert!(r.frames <= 1_000);
        }
    }
    assert!(recs.iter().any(|r| r.frames < 2_000));
}

#[test]
fn pasm_beats_the_fixed_array() {
    let mut sc = SweepConfig::profile("fig5").unwrap();
    sc.frames = 2_000;
    sc.powers_dbm = vec![10.0];
    let pasm = &run_sweep(&sc).unwrap()[0];
    let pssm = &run_pssm_baseline(&sc).unwrap()[0];
    assert!(pasm.upper() < pssm.lower(), "{} vs {}", pasm.ber, pssm.ber);
}

#[test]
fn comparison_labels_both_systems() {
    let mut sc = SweepConfig::profile("fig5").unwrap();
    sc.frames = 500;
    let cmp = compare(&sc).unwrap();
    let names: Vec<String> = cmp.records().into_iter().map(|r| r.detector).collect();
    assert!(names.iter().any(|n| n == "PASM-ML") && names.iter().any(|n| n == "PSSM-ML"));
    assert!(cmp.gap_db("ML", 0.1).unwrap() > 0.0);
}

#[test]
fn bound_sits_above_simulation_on_average() {
    let mut sc = SweepConfig::profile("fig4").unwrap();
    sc.frames = 20_000;
    sc.powers_dbm = vec![-10.0, 10.0];
    let sim = run_sweep(&sc).unwrap();
    let bound = run_bound(&sc).unwrap();
    for (s, b) in sim.iter().zip(&bound) {
        assert_eq!(b.detector, "BOUND");
        assert!(b.ber >= s.lower(), "{} vs {}", b.ber, s.ber);
    }
}

#[test]
fn vamp_matches_ml_on_a_tiny_constellation() {
    let mut sc = SweepConfig::profile("fig4").unwrap();
    sc.system.n_a = 2;
    sc.system.n_r = 2;
    let cfg = sc.system.clone().with_power_dbm(40.0);
    let scn = Scenario::new(&cfg, Baseline::Pasm).unwrap();
    let vamp = Vamp::default();
    let frames = 10_000u64;
    let mut agree = 0;
    for f in 0..frames {
        let large = Arc::new(scn.large_scale(5, f / 100));
        let mut rng = substream(5, 1, 0, f);
        let bits: Vec<u8> = (0..spectral_efficiency(&cfg)).map(|_| rng.random_range(0..2u8)).collect();
        let x = map_bits(&bits, &cfg, &scn.constellation).unwrap().x;
        let ch = ChannelRealization::draw(large, &mut rng);
        let noise = DVector::from_fn(cfg.n_r, |_, _| sample_cn::<f64, _>(&mut rng) * cfg.noise_w.sqrt());
        let y = effective_channel(&ch.h, &cfg) * x + noise;
        let ml = detect(DetectorKind::Ml, &y, &ch.h, &cfg, &scn.constellation, &vamp).unwrap();
        let vp = detect(DetectorKind::Vamp, &y, &ch.h, &cfg, &scn.constellation, &vamp).unwrap();
        agree += u64::from(ml.bits == vp.bits);
    }
    assert!(agree as f64 >= 0.99 * frames as f64, "{agree}/{frames}");
}

#[test]
fn output_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("pasm-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("out.csv");
    let sc = quick("fig4", 200);
    let recs = run_sweep(&sc).unwrap();
    write_csv(&csv, &recs).unwrap();
    write_metadata(&csv, "sweep --profile fig4", &sc, 0.5).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text, to_csv(&recs));
    let meta: toml::Value = toml::from_str(&std::fs::read_to_string(metadata_path(&csv)).unwrap()).unwrap();
    assert_eq!(meta["seed"].as_integer(), Some(1));
    let back: SweepConfig = meta["config"].clone().try_into().unwrap();
    assert_eq!(back, sc);
    std::fs::remove_dir_all(&dir).unwrap();
}
