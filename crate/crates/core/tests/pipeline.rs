use bayesbin::diagnostics::chi_square_uniformity;
use bayesbin::homodyne::pair_samples;
use bayesbin::{
    run_online, run_pipeline, run_with_parameter, BinningConfig64, Channel, Error,
    HomodyneModel64, HomodyneStats64, MeasurementModel, MeasurementRecord64, Method, ModelKind,
    SufficientStats, SymbolHistogram, ToaConfig64, ToaModel64, ToaStats64,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toa() -> ToaModel64 {
    ToaModel64::new(ToaConfig64::new(0.0, 0.0).unwrap())
}

fn toa_record(n: usize, seed: u64) -> MeasurementRecord64 {
    MeasurementRecord64::new(ModelKind::Toa, toa().simulate(n, 1.0, seed).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn bayesian_log_respects_threshold() {
    let rec = toa_record(20_000, 1);
    for (bits, pa) in [(3, 0.6), (4, 0.95), (6, 0.99)] {
        let cfg = BinningConfig64::new(bits, pa, Method::Bayesian).unwrap();
        let out = run_pipeline(&rec, &toa(), &cfg).unwrap();
        assert_eq!(out.assignments.len(), rec.len());
        for a in &out.assignments {
            assert_eq!(a.accepted, a.bin_probability >= pa);
            assert!(a.bin_index < 1 << bits);
        }
        assert_eq!(out.stream.accepted_count, out.stream.symbols.len());
        assert!(out.stream.accepted_count <= out.stream.total_input);
    }
}

#[test]
fn threshold_one_needs_all_the_mass() {
    let cfg = BinningConfig64::new(4, 1.0, Method::Bayesian).unwrap();
    let out = run_pipeline(&toa_record(5_000, 2), &toa(), &cfg).unwrap();
    for a in out.assignments.iter().filter(|a| a.accepted) {
        assert_eq!(a.bin_probability, 1.0);
    }
    let out = run_pipeline(&toa_record(20, 2), &toa(), &cfg).unwrap();
    assert!(out.stream.symbols.is_empty());
}

#[test]
fn conventional_with_true_parameter_is_uniform() {
    let rec = toa_record(50_000, 3);
    let out = run_with_parameter(&rec, &toa(), 4, 1.0).unwrap();
    assert_eq!(out.stream.accepted_count, rec.len());
    let chi = chi_square_uniformity(&SymbolHistogram::from_stream(&out.stream).unwrap()).unwrap();
    assert!(chi.p_value > 0.01, "toa p = {}", chi.p_value);

    let hom = HomodyneModel64::new();
    let xs = hom.simulate(50_000, 1.0, 0.1, 4).unwrap();
    let rec = MeasurementRecord64::new(ModelKind::Homodyne, xs);
    let out = run_with_parameter(&rec, &hom, 6, 1.01).unwrap();
    let chi = chi_square_uniformity(&SymbolHistogram::from_stream(&out.stream).unwrap()).unwrap();
    assert!(chi.p_value > 0.01, "homodyne p = {}", chi.p_value);
}

#[test]
fn empty_and_mismatched_records() {
    let empty = MeasurementRecord64::new(ModelKind::Toa, vec![]);
    let conv = BinningConfig64::new(4, 0.95, Method::ConventionalMle).unwrap();
    let out = run_pipeline(&empty, &toa(), &conv).unwrap();
    assert_eq!(out.stream.total_input, 0);
    assert!(out.stream.symbols.is_empty());

    let bayes = BinningConfig64::new(4, 0.95, Method::Bayesian).unwrap();
    assert!(matches!(
        run_pipeline(&empty, &toa(), &bayes),
        Err(Error::InsufficientData { .. })
    ));
    let wrong = MeasurementRecord64::new(ModelKind::Homodyne, vec![0.1, 0.2]);
    assert!(matches!(
        run_pipeline(&wrong, &toa(), &bayes),
        Err(Error::ModelMismatch { .. })
    ));
}

#[test]
fn sample_at_afterpulse_time_is_rejected_at_binning() {
    let model = ToaModel64::new(ToaConfig64::new(0.5, 0.0).unwrap());
    let mut samples = model.simulate(200, 1.0, 5).unwrap();
    samples[7] = 0.5;
    let (kept, removed) = model.filter_afterpulse(&samples);
    assert_eq!((kept.len(), removed), (200, 0));
    let rec = MeasurementRecord64::new(ModelKind::Toa, kept);
    let cfg = BinningConfig64::new(2, 0.6, Method::Bayesian).unwrap();
    let out = run_pipeline(&rec, &model, &cfg).unwrap();
    assert!(!out.assignments[7].accepted);
}

#[test]
fn homodyne_pairs_emit_radius_then_angle() {
    let hom = HomodyneModel64::new();
    let mut xs = hom.simulate(2_001, 1.0, 0.1, 6).unwrap();
    xs[10] = 0.0;
    xs[11] = 0.0;
    let rec = MeasurementRecord64::new(ModelKind::Homodyne, xs.clone());
    let cfg = BinningConfig64::new(3, 0.95, Method::Bayesian).unwrap();
    let out = run_pipeline(&rec, &hom, &cfg).unwrap();
    let (pairs, dropped) = pair_samples(&xs);
    assert_eq!(dropped, 1);
    assert_eq!(out.assignments.len(), 2 * pairs.len());
    for (k, unit) in out.assignments.chunks(2).enumerate() {
        assert_eq!(unit[0].channel, Channel::Radius);
        assert_eq!(unit[1].channel, Channel::Angle);
        assert_eq!(unit[0].measurement_index, 2 * k);
        if k == 5 {
            assert!(!unit[0].accepted && !unit[1].accepted);
        } else {
            assert!(unit[1].accepted);
        }
    }
    let angle = out.symbols_on(Channel::Angle);
    assert_eq!(angle.len(), pairs.len() - 1);
    // At most two symbols per pair, in radius-then-angle order.
    let mut expected = Vec::new();
    for unit in out.assignments.chunks(2) {
        expected.extend(unit.iter().filter(|a| a.accepted).map(|a| a.bin_index));
    }
    assert_eq!(out.stream.symbols, expected);
}

#[test]
fn online_first_measurement_is_rejected() {
    let rec = toa_record(1_000, 7);
    let cfg = BinningConfig64::new(2, 0.95, Method::Bayesian).unwrap();
    let out = run_online(&rec, &toa(), &cfg).unwrap();
    assert!(!out.assignments[0].accepted);
    let conv = BinningConfig64::new(2, 0.95, Method::ConventionalMle).unwrap();
    assert!(run_online(&rec, &toa(), &conv).is_err());
}

#[test]
fn online_final_statistics_equal_batch() {
    let rec = toa_record(30_001, 8);
    let cfg = BinningConfig64::new(4, 0.95, Method::Bayesian).unwrap();
    let online = run_online(&rec, &toa(), &cfg).unwrap();
    let batch = run_pipeline(&rec, &toa(), &cfg).unwrap();
    assert_eq!(online.stats.n(), batch.stats.n());
    assert!(rel_close(online.stats.offset_sum(), batch.stats.offset_sum(), 1e-12));

    let hom = HomodyneModel64::new();
    let xs = hom.simulate(10_001, 1.0, 0.1, 9).unwrap();
    let rec = MeasurementRecord64::new(ModelKind::Homodyne, xs);
    let online = run_online(&rec, &hom, &cfg).unwrap();
    let batch = run_pipeline(&rec, &hom, &cfg).unwrap();
    assert_eq!(online.stats.n(), batch.stats.n());
    assert!(rel_close(online.stats.sum_sq(), batch.stats.sum_sq(), 1e-12));
}

#[test]
fn online_acceptance_approaches_batch() {
    let rec = toa_record(100_000, 10);
    let fraction = |out: &bayesbin::PipelineOutput<f64, ToaStats64>, from: usize| {
        let tail = &out.assignments[from..];
        tail.iter().filter(|a| a.accepted).count() as f64 / tail.len() as f64
    };
    // Whole stream at one bit.
    let cfg = BinningConfig64::new(1, 0.95, Method::Bayesian).unwrap();
    let online = run_online(&rec, &toa(), &cfg).unwrap();
    let batch = run_pipeline(&rec, &toa(), &cfg).unwrap();
    let (a, b) = (fraction(&online, 0), fraction(&batch, 0));
    assert!((a - b).abs() < 0.01, "b = 1: online {a}, batch {b}");
    // Second half at four bits, once the posterior has narrowed.
    let cfg = BinningConfig64::new(4, 0.95, Method::Bayesian).unwrap();
    let online = run_online(&rec, &toa(), &cfg).unwrap();
    let batch = run_pipeline(&rec, &toa(), &cfg).unwrap();
    let (a, b) = (fraction(&online, 50_000), fraction(&batch, 50_000));
    assert!((a - b).abs() < 0.01, "b = 4: online {a}, batch {b}");
}

#[test]
fn shuffling_changes_nothing_downstream() {
    let model = toa();
    let samples = model.simulate(20_000, 1.3, 11).unwrap();
    let mut shuffled = samples.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let a = model.accumulate(&samples).unwrap();
    let b = model.accumulate(&shuffled).unwrap();
    assert_eq!(a.n(), b.n());
    assert!(rel_close(a.offset_sum(), b.offset_sum(), 1e-12));
    let (pa, pb) = (model.posterior(&a).unwrap(), model.posterior(&b).unwrap());
    for theta in [1.2, 1.3, 1.35] {
        assert!(rel_close(pa.density(theta).unwrap(), pb.density(theta).unwrap(), 1e-12));
    }
    for &tau in samples.iter().take(50) {
        let x = model.bin_probabilities(tau, 16, &a).unwrap();
        let y = model.bin_probabilities(tau, 16, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-12 * p.max(*q) + 1e-300, "{p} vs {q}");
        }
    }

    let hom = HomodyneModel64::new();
    let xs = hom.simulate(20_000, 1.0, 0.1, 12).unwrap();
    let mut ys = xs.clone();
    ys.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let (a, b) = (hom.accumulate(&xs).unwrap(), hom.accumulate(&ys).unwrap());
    assert!(rel_close(a.sum_sq(), b.sum_sq(), 1e-12));
    let (pairs, _) = pair_samples(&xs);
    for p in pairs.iter().take(50) {
        let x = hom.bin_probabilities_u1(p, 64, &a).unwrap();
        let y = hom.bin_probabilities_u1(p, 64, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-12 * p.max(*q) + 1e-300);
        }
    }
}

#[test]
fn parallel_accumulation_equals_sequential() {
    let model = toa();
    let samples = model.simulate(100_003, 2.0, 13).unwrap();
    let chunked = model.accumulate(&samples).unwrap();
    let mut seq = ToaStats64::default();
    for &t in &samples {
        model.observe(&mut seq, t).unwrap();
    }
    assert_eq!(chunked.count(), seq.count());
    assert!(rel_close(chunked.offset_sum(), seq.offset_sum(), 1e-12));

    let hom = HomodyneModel64::new();
    let xs = hom.simulate(100_003, 1.0, 0.1, 14).unwrap();
    let chunked = hom.accumulate(&xs).unwrap();
    let mut seq = HomodyneStats64::default();
    for &x in &xs {
        seq = seq.update(x);
    }
    assert!(rel_close(chunked.sum_sq(), seq.sum_sq(), 1e-12));
}

#[test]
fn pipeline_is_deterministic() {
    let rec = toa_record(40_000, 15);
    let cfg = BinningConfig64::new(5, 0.95, Method::Bayesian).unwrap();
    let a = run_pipeline(&rec, &toa(), &cfg).unwrap();
    let b = run_pipeline(&rec, &toa(), &cfg).unwrap();
    assert_eq!(a, b);
}
