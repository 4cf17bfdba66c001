use nalgebra::DVector;
use proptest::prelude::*;

use stoch_euler::manifold::{simulate, variational_derivative, CircleBrownian, Integrator, SdeProblem, SphereBrownian};
use stoch_euler::rng::BrownianDriver;

const DT: f64 = 1e-2;
const T: f64 = 0.5;

fn unit(v: [f64; 3]) -> DVector<f64> {
    let x = DVector::from_column_slice(&v);
    let n = x.norm();
    x / n
}

fn end_state<P: SdeProblem>(p: &P, x0: &DVector<f64>, driver: &BrownianDriver) -> DVector<f64> {
    simulate(p, x0, driver, T, Integrator::HEUN_PROJECTED).unwrap().last().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projected_paths_stay_on_the_sphere(seed in 0u64..1000, w in prop::array::uniform3(-3.0f64..3.0), x in prop::array::uniform3(0.1f64..1.0)) {
        let p = SphereBrownian::new(w, 1.0);
        let path = simulate(&p, &unit(x), &BrownianDriver::new(seed, DT), T, Integrator::HEUN_PROJECTED).unwrap();
        for s in &path.states {
            prop_assert!((s.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projected_circle_paths_stay_on_the_circle(seed in 0u64..1000, theta in 0.0f64..6.28) {
        let x0 = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
        let path = simulate(&CircleBrownian, &x0, &BrownianDriver::new(seed, DT), T, Integrator::HEUN_PROJECTED).unwrap();
        prop_assert!(path.states.iter().all(|s| (s.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn derivative_is_linear_in_the_direction(seed in 0u64..1000, h1 in prop::array::uniform3(-1.0f64..1.0), h2 in prop::array::uniform3(-1.0f64..1.0), c in -2.0f64..2.0) {
        let p = SphereBrownian::new([1.0, 0.5, -0.5], 1.0);
        let x0 = unit([0.3, -0.4, 0.8]);
        let d = BrownianDriver::new(seed, DT);
        let (h1, h2) = (DVector::from_column_slice(&h1), DVector::from_column_slice(&h2));
        let a = |h: &DVector<f64>| variational_derivative(&p, &x0, h, &d, T, true).unwrap().derivative.last().unwrap().clone();
        let lhs = a(&(&h1 + &h2 * c));
        let rhs = a(&h1) + a(&h2) * c;
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}

// Central differences of the discrete solution map, same noise.
#[test]
fn derivative_matches_finite_differences_of_the_solution_map() {
    let p = SphereBrownian::new([1.0, 0.5, -0.5], 1.0);
    let x0 = unit([0.3, -0.4, 0.8]);
    let h = DVector::from_column_slice(&[0.2, 0.7, -0.1]);
    let eps = 1e-5;
    for seed in 0..8 {
        let d = BrownianDriver::new(seed, DT);
        let a = variational_derivative(&p, &x0, &h, &d, T, true).unwrap().derivative.last().unwrap().clone();
        let fd = (end_state(&p, &(&x0 + &h * eps), &d) - end_state(&p, &(&x0 - &h * eps), &d)) / (2.0 * eps);
        let err = (&a - &fd).norm() / a.norm().max(1e-12);
        assert!(err < 1e-6, "seed {seed}: relative error {err:e}");
    }
}
