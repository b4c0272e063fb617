use flash_demo::{channel_view, error_rate_sweep, uda_alignment};

#[test]
fn channel_view_has_one_curve_per_state() {
    let v = channel_view("tlc", "gaussian", 1e3, 1e3).unwrap();
    assert_eq!(v.pdfs.len(), 8);
    assert!(v.pdfs.iter().all(|c| c.len() == v.voltages.len()));
    assert_eq!((v.optimal.len(), v.mmi.len()), (7, 7));
    assert!(v.mi_mmi >= v.mi_optimal - 1e-12);
    assert!(v.ber_optimal > 0.0 && v.ber_optimal < 0.01);
    // Each density integrates to about one on the grid.
    let dv = v.voltages[1] - v.voltages[0];
    for c in &v.pdfs {
        let mass: f64 = c.iter().sum::<f64>() * dv;
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }
}

#[test]
fn sweep_orders_the_three_curves() {
    let s = error_rate_sweep("mlc", "gaussian", 1.2e4).unwrap();
    assert_eq!(s.n_pe.len(), s.optimum.len());
    assert!(s.optimum.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-9)));
    for i in 0..s.n_pe.len() {
        assert!(s.optimum[i] <= s.source_thresholds[i] * (1.0 + 1e-9));
    }
    let last = s.n_pe.len() - 1;
    assert!(s.aligned[last] < s.source_thresholds[last]);
}

#[test]
fn alignment_reports_histograms_and_monotone_objective() {
    let a = uda_alignment("mlc", "gaussian", 1e4, 1e4, 20_000, 3).unwrap();
    assert_eq!(a.target_counts.iter().sum::<usize>(), 20_000);
    assert_eq!(a.aligned_counts.iter().sum::<usize>(), 20_000);
    assert_eq!(a.bin_edges.len(), a.target_counts.len() + 1);
    assert!(a.objective_history.windows(2).all(|w| w[1] <= w[0]));
    for (c, t) in a.centroids.iter().zip(&a.true_means) {
        assert!((c - t).abs() < 0.1);
    }
    assert!(a.ber_aligned < a.ber_source);
    assert!(a.ber_optimum <= a.ber_aligned);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(channel_view("slc", "gaussian", 0.0, 0.0).is_err());
    assert!(channel_view("mlc", "cauchy", 0.0, 0.0).is_err());
    assert!(error_rate_sweep("mlc", "gaussian", -1.0).is_err());
}
