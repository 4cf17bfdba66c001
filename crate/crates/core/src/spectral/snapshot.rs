//! Binary snapshot format for [`SpectralField`].
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 0..8  | magic `T2SPECTR` |
//! | 8..12 | format version (`u32`, currently 1) |
//! | 12..16| reserved, zero |
//! | 16..20| `N` (`u32`) |
//! | 20..24| component count (`u32`) |
//! | 24    | flags (`u8`, bit 0 = divergence-free) |
//! | 25..  | coefficients as `(re, im)` `f64` pairs, component-major, each component in row-major order `k₁ = −N..=N`, `k₂ = −N..=N` |
//!
//! Coefficients follow the normalization `û_k = (2π)⁻² ∫ f e^{-ik·x} dx`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{SpectralError, SpectralField};

pub const MAGIC: &[u8; 8] = b"T2SPECTR";
pub const VERSION: u32 = 1;
const FLAG_DIVERGENCE_FREE: u8 = 1;

pub fn write<W: Write>(field: &SpectralField, mut w: W) -> Result<(), SpectralError> {
    let mut header = Vec::with_capacity(25);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&(field.resolution() as u32).to_le_bytes());
    header.extend_from_slice(&(field.components() as u32).to_le_bytes());
    header.push(if field.is_divergence_free() { FLAG_DIVERGENCE_FREE } else { 0 });
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(field.coeffs().len() * 16);
    for z in field.coeffs() {
        body.extend_from_slice(&z.re.to_le_bytes());
        body.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn to_bytes(field: &SpectralField) -> Vec<u8> {
    let mut out = Vec::new();
    write(field, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn read<R: Read>(mut r: R) -> Result<SpectralField, SpectralError> {
    let mut header = [0u8; 25];
    r.read_exact(&mut header)
        .map_err(|_| SpectralError::Snapshot("truncated header".into()))?;
    if &header[0..8] != MAGIC {
        return Err(SpectralError::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(SpectralError::Snapshot(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    let components = u32::from_le_bytes(header[20..24].try_into().unwrap()) as usize;
    if components != 1 && components != 2 {
        return Err(SpectralError::Snapshot(format!("invalid component count {components}")));
    }
    if n > 4096 {
        return Err(SpectralError::Snapshot(format!("resolution {n} out of range")));
    }
    let flags = header[24];
    let count = components * (2 * n + 1) * (2 * n + 1);
    let mut body = vec![0u8; count * 16];
    r.read_exact(&mut body)
        .map_err(|_| SpectralError::Snapshot("truncated coefficient block".into()))?;
    let coeffs: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let mut field = SpectralField::zeros(n, components);
    field.coeffs_mut().copy_from_slice(&coeffs);
    field.set_divergence_free(flags & FLAG_DIVERGENCE_FREE != 0);
    if field.hermitian_defect() > 0.0 {
        return Err(SpectralError::Snapshot("coefficients are not Hermitian-symmetric".into()));
    }
    Ok(field)
}

pub fn save(field: &SpectralField, path: &std::path::Path) -> Result<(), SpectralError> {
    std::fs::write(path, to_bytes(field))?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<SpectralField, SpectralError> {
    read(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let f = SpectralField::zeros(2, 2);
        let b = to_bytes(&f);
        assert_eq!(&b[0..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[20..24].try_into().unwrap()), 2);
        assert_eq!(b[24], 1);
        assert_eq!(b.len(), 25 + 2 * 25 * 16);
    }

    #[test]
    fn rejects_corruption() {
        let f = SpectralField::from_fn(3, 1, |x, y| [x.sin() + y.cos(), 0.0]);
        let mut b = to_bytes(&f);
        assert!(read(&b[..30]).is_err());
        b[0] = b'X';
        assert!(read(&b[..]).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(n in 0usize..6, comps in 1usize..3, seed in any::<u64>()) {
            let mut f = SpectralField::zeros(n, comps);
            let mut state = seed;
            let modes: Vec<_> = f.modes().collect();
            for c in 0..comps {
                for &(k1, k2) in &modes {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let re = f64::from_bits((state >> 12) | 0x3ff0_0000_0000_0000) - 1.5;
                    let im = f64::from_bits((state.rotate_left(17) >> 12) | 0x3ff0_0000_0000_0000) - 1.5;
                    f.set_mode(c, k1, k2, Complex64::new(re, im));
                }
            }
            let bytes = to_bytes(&f);
            let back = read(&bytes[..]).unwrap();
            prop_assert_eq!(to_bytes(&back), bytes);
            prop_assert_eq!(back, f);
        }
    }
}
