use std::f64::consts::FRAC_PI_4;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn linear_to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

/// Constant-power pan law: `pan` in `[-1, 1]` (clamped), left at -1.
pub fn pan_gains(pan: f64) -> (f64, f64) {
    let p = if pan.is_nan() { 0.0 } else { pan.clamp(-1.0, 1.0) };
    let theta = (p + 1.0) * FRAC_PI_4;
    (theta.cos(), theta.sin())
}
