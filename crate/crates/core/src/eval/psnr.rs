use crate::data::Image;
use crate::error::{Error, Result};

/// `10 log10(peak² / MSE)` in dB, with `test` clipped to `[0, 1]` first and
/// the MSE taken over all channels jointly. Identical images give `+∞`.
pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<f64> {
    if (reference.h(), reference.w(), reference.channels()) != (test.h(), test.w(), test.channels()) {
        return Err(Error::Shape(format!(
            "psnr: {}x{}x{} reference vs {}x{}x{} test",
            reference.channels(),
            reference.h(),
            reference.w(),
            test.channels(),
            test.h(),
            test.w()
        )));
    }
    let n = reference.values().len() as f64;
    let mse = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(r, t)| {
            let d = r - t.clamp(0.0, 1.0);
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_infinite() {
        let a = Image::filled(3, 3, 1, 0.4).unwrap();
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mse_equal_peak_squared_is_zero_db() {
        let a = Image::filled(2, 2, 1, 0.0).unwrap();
        let b = Image::filled(2, 2, 1, 1.0).unwrap();
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn one_code_value_off() {
        let a = Image::filled(4, 5, 3, 0.0).unwrap();
        let b = Image::filled(4, 5, 3, 1.0 / 255.0).unwrap();
        let db = psnr(&a, &b, 1.0).unwrap();
        assert!((db - 20.0 * 255f64.log10()).abs() < 1e-10);
        assert!((db - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn clipping_never_lowers_psnr() {
        let clean = Image::new(1, 4, 1, vec![0.0, 0.2, 0.9, 1.0]).unwrap();
        let noisy = Image::new(1, 4, 1, vec![-0.3, 0.25, 1.4, 1.1]).unwrap();
        let unclipped_mse: f64 = clean
            .values()
            .iter()
            .zip(noisy.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 4.0;
        assert!(psnr(&clean, &noisy, 1.0).unwrap() >= 10.0 * (1.0 / unclipped_mse).log10());
    }
}
