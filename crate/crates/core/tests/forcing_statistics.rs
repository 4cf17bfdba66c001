use nalgebra::Vector3;
use proptest::prelude::*;

use stoch_euler::forcing::{basis_field, sample_increment, trace_bilinear, BrownianDriver, NoiseMode, NoiseModel};
use stoch_euler::spectral::{SobolevIndex, SpectralField};

fn r0() -> SobolevIndex {
    SobolevIndex::new(0.0).unwrap()
}

fn mixed_model() -> NoiseModel {
    let modes = [((1, 0), 1.0), ((1, 1), 0.5), ((0, 2), 0.25), ((2, -1), 0.1)];
    NoiseModel::new(modes.iter().map(|&(k, q)| NoiseMode { k, q }).collect(), r0()).unwrap()
}

/// Coordinates `⟨ΔW, e_j⟩` of each increment of one path.
fn coordinates(model: &NoiseModel, dt: f64, steps: u64, n: usize) -> Vec<Vec<f64>> {
    let basis: Vec<SpectralField> = model.basis().map(|e| basis_field(&e, n)).collect();
    let driver = BrownianDriver::new(11, dt);
    (0..steps)
        .map(|s| {
            let dw = sample_increment(&driver, model, s, n).unwrap();
            basis.iter().map(|e| dw.inner_l2(e)).collect()
        })
        .collect()
}

#[test]
fn single_mode_energy_and_element_variance() {
    let model = NoiseModel::single((1, 0), 1.0).unwrap();
    let samples = coordinates(&model, 1.0, 100_000, 1);
    let n = samples.len() as f64;
    let energy: Vec<f64> = samples.iter().map(|a| a.iter().map(|v| v * v).sum()).collect();
    let mean = energy.iter().sum::<f64>() / n;
    let se = (energy.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    // Two basis elements (cos and sin), each with variance q·dt = 1.
    assert!((mean - 2.0).abs() <= 3.0 * se, "{mean} ± {se}");
    for j in 0..2 {
        let sq: Vec<f64> = samples.iter().map(|a| a[j] * a[j]).collect();
        let m = sq.iter().sum::<f64>() / n;
        let s = (sq.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!((m - 1.0).abs() <= 3.0 * s, "element {j}: {m} ± {s}");
    }
}

#[test]
fn increment_covariance_is_diagonal_q_dt() {
    let model = mixed_model();
    let dt = 0.01;
    let q: Vec<f64> = model.basis().map(|e| e.q).collect();
    let samples = coordinates(&model, dt, 10_000, 3);
    let n = samples.len() as f64;
    for i in 0..q.len() {
        for j in 0..q.len() {
            let prod: Vec<f64> = samples.iter().map(|a| a[i] * a[j]).collect();
            let c = prod.iter().sum::<f64>() / n;
            let se = (prod.iter().map(|p| (p - c).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            let expected = if i == j { q[i] * dt } else { 0.0 };
            assert!((c - expected).abs() <= 5.0 * se, "C[{i}][{j}] = {c}, expected {expected} ± {se}");
        }
    }
}

#[test]
fn increments_are_uncorrelated_across_steps() {
    let model = mixed_model();
    let samples = coordinates(&model, 0.01, 10_000, 3);
    let n = samples.len();
    let bound = 3.0 / (n as f64).sqrt();
    for j in 0..samples[0].len() {
        let num: f64 = (0..n - 1).map(|t| samples[t][j] * samples[t + 1][j]).sum();
        let den: f64 = samples.iter().map(|a| a[j] * a[j]).sum();
        let rho = num / den;
        assert!(rho.abs() <= bound, "element {j}: lag-1 correlation {rho}");
    }
}

#[test]
fn vector_valued_trace_is_linear() {
    let model = mixed_model();
    let v = Vector3::new(1.0, -2.0, 0.5);
    let t = trace_bilinear(&model, 3, Vector3::zeros(), |a, b| a.inner_l2(b) * v).unwrap();
    let expected = model.trace_q() * v;
    assert!((t - expected).norm() <= 1e-12);
    assert_eq!(trace_bilinear(&model, 3, 0.0, |_, _| 0.0).unwrap(), 0.0);
    let doubled = trace_bilinear(&model.scaled(2.0), 3, 0.0, |a, b| a.inner_l2(b)).unwrap();
    let single = trace_bilinear(&model, 3, 0.0, |a, b| a.inner_l2(b)).unwrap();
    assert!((doubled - 2.0 * single).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increments_are_solenoidal_and_mean_free(k_max in 1usize..5, seed in any::<u64>(), step in 0u64..1_000_000, path in 0u64..64) {
        let model = NoiseModel::power_law(k_max, 3.0, 1.0, r0());
        let driver = BrownianDriver::new(seed, 1e-3).with_path(path);
        let dw = sample_increment(&driver, &model, step, k_max + 1).unwrap();
        prop_assert!(dw.divergence_defect() <= 1e-12);
        prop_assert!(dw.is_divergence_free());
        prop_assert!(dw.mean().iter().all(|m| m.norm() == 0.0));
        prop_assert_eq!(dw.hermitian_defect(), 0.0);
    }
}
