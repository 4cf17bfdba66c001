//! Square 2D complex FFTs with per-thread cached plans.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Fft2>>> = RefCell::new(HashMap::new());
}

/// Returns the cached plan for an `len × len` grid.
pub(crate) fn plan(len: usize) -> Rc<Fft2> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(len)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Rc::new(Fft2 {
                    len,
                    forward: planner.plan_fft_forward(len),
                    inverse: planner.plan_fft_inverse(len),
                })
            })
            .clone()
    })
}

impl Fft2 {
    /// Unnormalized in-place transform of a row-major `len × len` array.
    /// The inverse direction computes `Σ_k c_k e^{+2πi k·n/len}`.
    pub(crate) fn process(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len * self.len);
        let fft = if inverse { &self.inverse } else { &self.forward };
        fft.process(data);
        transpose(data, self.len);
        fft.process(data);
        transpose(data, self.len);
    }
}

fn transpose(data: &mut [Complex64], len: usize) {
    for i in 0..len {
        for j in (i + 1)..len {
            data.swap(i * len + j, j * len + i);
        }
    }
}

/// Smallest 5-smooth integer not below `min`.
pub(crate) fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(97), 100);
        assert_eq!(smooth_size(49), 50);
        assert_eq!(smooth_size(64), 64);
        assert_eq!(smooth_size(7), 8);
    }

    #[test]
    fn forward_then_inverse_is_scaled_identity() {
        let len = 12;
        let p = plan(len);
        let orig: Vec<Complex64> = (0..len * len)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        p.process(&mut data, false);
        p.process(&mut data, true);
        let scale = (len * len) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-13);
        }
    }
}
