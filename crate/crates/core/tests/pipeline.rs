use phc_core::bandsweep::Manifests;
use phc_core::cellgen::{derive_seed, masks_from_archive, masks_to_archive};
use phc_core::dataset::{make_split, normalization_stats};
use phc_core::metrics::DEFAULT_DELTA;
use phc_core::{
    bilinear_upsample, generate_p4m_cell, mre, read_pcbd, sweep, write_pcbd, BandTensor, Mode, PcbdMeta,
    SweepOptions, UnitCellMask,
};

fn cells(n: u64, m: usize) -> Vec<UnitCellMask> {
    (0..n).map(|i| generate_p4m_cell(derive_seed(42, i), m, 3).unwrap()).collect()
}

#[test]
fn swept_archive_survives_disk_round_trip() {
    let masks = cells(3, 8);
    let archive = masks_to_archive(&masks);
    assert_eq!(masks_from_archive(&archive).unwrap(), masks);

    let opts = SweepOptions {
        bands: 5,
        ..SweepOptions::default()
    };
    let mut progress = Vec::new();
    let mut records = Vec::new();
    let summary = sweep(
        &masks,
        Mode::Tm,
        &[4, 8],
        &opts,
        Manifests {
            progress: Some(&mut progress),
            failures: None,
        },
        |r| {
            records.push(r);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(summary.records, 3);
    assert!(summary.failures.is_empty());
    assert_eq!(String::from_utf8(progress).unwrap().lines().count(), 3);

    for r in &records {
        assert_eq!(r.surfaces.len(), 2);
        for s in &r.surfaces {
            s.check_invariants().unwrap();
            assert_eq!(s.get(0, 0, 0), 0.0);
        }
        // The coarse grid is a subset of the fine one.
        for n in 0..5 {
            for p in 0..4 {
                for q in 0..4 {
                    assert_eq!(r.surfaces[0].get(n, p, q), r.surfaces[1].get(n, 2 * p, 2 * q));
                }
            }
        }
    }

    let meta = PcbdMeta {
        m_cell: 8,
        bands: 5,
        resolutions: vec![4, 8],
        mode: Mode::Tm,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bands.pcbd");
    write_pcbd(&path, &meta, &records).unwrap();
    let (meta2, back) = read_pcbd(&path).unwrap();
    assert_eq!(meta2, meta);
    assert_eq!(back, records);
}

#[test]
fn split_and_baseline_on_small_dataset() {
    let masks = cells(10, 8);
    let mut records = Vec::new();
    let opts = SweepOptions {
        bands: 3,
        ..SweepOptions::default()
    };
    sweep(&masks, Mode::Te, &[4, 16], &opts, Manifests::default(), |r| {
        records.push(r);
        Ok(())
    })
    .unwrap();

    let ids: Vec<u64> = records.iter().map(|r| r.cell_id).collect();
    let split = make_split(&ids, 5).unwrap();
    assert_eq!(split.train.len() + split.val.len() + split.test.len(), 10);
    let norm = normalization_stats(&records, &split.train).unwrap();
    assert!(norm.omega_min == 0.0 && norm.omega_max > 0.0);

    let preds: Vec<_> = records.iter().map(|r| bilinear_upsample(&r.surfaces[0], 4).unwrap()).collect();
    let truth: Vec<_> = records.iter().map(|r| r.surfaces[1].clone()).collect();
    let pred = BandTensor::from_surfaces(&preds).unwrap();
    let truth = BandTensor::from_surfaces(&truth).unwrap();
    let report = mre(&pred, &truth, DEFAULT_DELTA).unwrap();
    assert!(report.aggregate > 0.0 && report.aggregate < 0.5);
    assert_eq!(report.per_band.len(), 3);
    let same = mre(&truth, &truth, DEFAULT_DELTA).unwrap();
    assert_eq!(same.aggregate, 0.0);
}
