use num_complex::Complex64;

use super::field::wrap;
use super::{plan, smooth_size, FourierMultiplier, SobolevIndex, SpectralError, SpectralField};

/// `‖f‖_{H^s} = (Σ_k (1+|k|²)^s Σ_c |û_{k,c}|²)^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, s: SobolevIndex) -> f64 {
    let mut acc = 0.0;
    for (k1, k2) in f.modes() {
        let w = s.weight(k1, k2);
        for c in 0..f.components() {
            acc += w * f.get(c, k1, k2).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Leray–Helmholtz projection onto divergence-free fields; the mean mode passes through.
pub fn leray_project(u: &SpectralField) -> Result<SpectralField, SpectralError> {
    FourierMultiplier::Leray.apply(u)
}

/// `R_δ f`, multiplying mode `k` by `1/(1 + δ|k|²)`.
pub fn regularize(f: &SpectralField, delta: f64) -> Result<SpectralField, SpectralError> {
    FourierMultiplier::Regularization { delta }.apply(f)
}

/// Smallest resolution accepted by [`convective_term`].
pub const MIN_CONVECTIVE_RESOLUTION: usize = 4;

/// `Π[(u·∇)u]` for a divergence-free velocity field.
///
/// Products are formed on a grid of at least `3N + 1` points per direction, so
/// the retained band `|k|∞ ≤ N` lies inside the inner two thirds of the transform
/// and receives no aliased contributions. The nonlinearity is evaluated in
/// divergence form `∂ⱼ(uⱼ uᵢ)`, which equals `(u·∇)u` when `∇·u = 0`.
pub fn convective_term(u: &SpectralField) -> Result<SpectralField, SpectralError> {
    if u.components() != 2 {
        return Err(SpectralError::ComponentMismatch { expected: 2, got: u.components() });
    }
    let n = u.resolution();
    if n < MIN_CONVECTIVE_RESOLUTION {
        return Err(SpectralError::ResolutionTooSmall { n, min: MIN_CONVECTIVE_RESOLUTION });
    }
    let len = smooth_size(3 * n + 1);
    let p = plan(len);
    let ni = n as i64;

    // Both real components in one complex transform: z = u₁ + i u₂.
    let zero = Complex64::new(0.0, 0.0);
    let mut z = vec![zero; len * len];
    let i_unit = Complex64::new(0.0, 1.0);
    for k1 in -ni..=ni {
        for k2 in -ni..=ni {
            z[wrap(k1, len) * len + wrap(k2, len)] = u.get(0, k1, k2) + i_unit * u.get(1, k1, k2);
        }
    }
    p.process(&mut z, true);

    let mut p11_p12 = vec![zero; len * len];
    let mut p22 = vec![zero; len * len];
    for ((v, a), b) in z.iter().zip(p11_p12.iter_mut()).zip(p22.iter_mut()) {
        let (u1, u2) = (v.re, v.im);
        *a = Complex64::new(u1 * u1, u1 * u2);
        *b = Complex64::new(u2 * u2, 0.0);
    }
    p.process(&mut p11_p12, false);
    p.process(&mut p22, false);

    let scale = 1.0 / (len * len) as f64;
    let mut out = SpectralField::zeros(n, 2);
    let side_sq = out.side() * out.side();
    {
        let coeffs = out.coeffs_mut();
        for k1 in -ni..=ni {
            for k2 in -ni..=ni {
                let zk = p11_p12[wrap(k1, len) * len + wrap(k2, len)];
                let zm = p11_p12[wrap(-k1, len) * len + wrap(-k2, len)].conj();
                let a11 = (zk + zm) * 0.5 * scale;
                let a12 = (zk - zm) * Complex64::new(0.0, -0.5) * scale;
                let a22 = p22[wrap(k1, len) * len + wrap(k2, len)] * scale;
                let (kx, ky) = (k1 as f64, k2 as f64);
                let idx = ((k1 + ni) as usize) * (2 * n + 1) + (k2 + ni) as usize;
                coeffs[idx] = i_unit * (a11 * kx + a12 * ky);
                coeffs[side_sq + idx] = i_unit * (a12 * kx + a22 * ky);
            }
        }
    }
    out.symmetrize();
    leray_project(&out)
}

/// Point values `Σ_k û_k e^{ik·x}` at arbitrary torus points (first entry for scalars).
///
/// This is the direct trigonometric sum; for many points use [`super::FieldEvaluator`].
pub fn evaluate_at(f: &SpectralField, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = f.resolution() as i64;
    let side = f.side();
    let scale: f64 = f.coeffs().iter().map(|z| z.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    points
        .iter()
        .map(|&[x, y]| {
            let ex: Vec<Complex64> = (-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect();
            let ey: Vec<Complex64> = (-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * y)).collect();
            let mut out = [0.0; 2];
            for (c, o) in out.iter_mut().enumerate().take(f.components()) {
                let block = f.component(c);
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, exi) in ex.iter().enumerate() {
                    let row = &block[i * side..(i + 1) * side];
                    let inner: Complex64 = row.iter().zip(&ey).map(|(a, b)| a * b).sum();
                    acc += inner * exi;
                }
                debug_assert!(
                    acc.im.abs() <= 1e-10 * scale,
                    "imaginary residue {} in evaluation of a real field",
                    acc.im
                );
                *o = acc.re;
            }
            out
        })
        .collect()
}
