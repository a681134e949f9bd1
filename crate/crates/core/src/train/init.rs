use crate::data::Rng;

/// He (Kaiming) normal initialisation: i.i.d. `N(0, 2 / (c_in * f * f))`
/// for a weight array shaped `(n_out, c_in, f, f)`. Biases stay zero.
pub fn he_init(shape: (usize, usize, usize, usize), rng: &mut Rng) -> Vec<f64> {
    let (n_out, c_in, f, f2) = shape;
    let fan_in = (c_in * f * f2).max(1);
    let std = (2.0 / fan_in as f64).sqrt();
    (0..n_out * c_in * f * f2).map(|_| std * rng.gaussian()).collect()
}
