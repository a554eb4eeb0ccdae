use holo_secrecy::experiments::{
    run_csi_sweep, run_snr_sweep, run_spacing_sweep, write_csv, PaMode, ScenarioConfig, Scheme,
    CSV_COLUMNS,
};

fn cfg(trials: usize, snr: &[f64]) -> ScenarioConfig {
    ScenarioConfig {
        trials,
        snr_db: snr.to_vec(),
        seed: 11,
        pa: PaMode::Both,
        ..ScenarioConfig::default()
    }
}

#[test]
fn proposed_never_lowers_min_secrecy_with_perfect_csi() {
    let snrs = [-10.0, 0.0, 10.0, 20.0];
    let r = run_snr_sweep(&cfg(12, &snrs)).unwrap();
    for snr in snrs {
        let p = &r.find(Scheme::Proposed, 0.25, snr).unwrap().stats;
        let f = &r.find(Scheme::Fixed(0.5), 0.25, snr).unwrap().stats;
        for (t, (a, b)) in p.min_samples.iter().zip(&f.min_samples).enumerate() {
            assert!(a >= &(b - 1e-6), "trial {t} at {snr} dB: {a} < {b}");
        }
    }
}

#[test]
fn secrecy_grows_with_snr() {
    let snrs = [-10.0, 0.0, 10.0, 20.0];
    let r = run_snr_sweep(&cfg(12, &snrs)).unwrap();
    for scheme in [Scheme::Proposed, Scheme::Fixed(0.5)] {
        let v: Vec<f64> = snrs
            .iter()
            .map(|&s| r.find(scheme, 0.25, s).unwrap().mean_sum)
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{scheme:?}: {v:?}");
    }
}

#[test]
fn finer_spacing_helps_at_high_snr() {
    let c = ScenarioConfig {
        pa: PaMode::Proposed,
        ..cfg(16, &[20.0])
    };
    let r = run_spacing_sweep(&c, &[0.125, 0.5]).unwrap();
    let fine = r.find(Scheme::Proposed, 0.125, 20.0).unwrap().mean_sum;
    let coarse = r.find(Scheme::Proposed, 0.5, 20.0).unwrap().mean_sum;
    assert!(fine > coarse, "{fine} vs {coarse}");
}

#[test]
fn csi_error_costs_secrecy() {
    let r = run_csi_sweep(&cfg(16, &[20.0]), &[0.0, 0.2]).unwrap();
    for scheme in [Scheme::Proposed, Scheme::Fixed(0.5)] {
        let clean = r.find(scheme, 0.0, 20.0).unwrap().mean_sum;
        let noisy = r.find(scheme, 0.2, 20.0).unwrap().mean_sum;
        assert!(noisy < clean, "{scheme:?}: {noisy} vs {clean}");
    }
}

#[test]
fn csv_file_round_trips() {
    let r = run_snr_sweep(&cfg(3, &[0.0, 10.0])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_csv(&r, &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), CSV_COLUMNS.to_vec());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), r.rows.len());
    for (rec, row) in rows.iter().zip(&r.rows) {
        assert_eq!(&rec[1], row.scheme);
        assert_eq!(rec[7].parse::<f64>().unwrap(), row.mean_sum);
        assert_eq!(rec[11].parse::<usize>().unwrap(), 3);
    }
}
