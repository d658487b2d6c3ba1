//! Scale grids.

/// `count` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min, "log grid needs 0 < min <= max");
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            let step = (b - a) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
            v[0] = min;
            v[count - 1] = max;
            v
        }
    }
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| min + step * i as f64).collect();
            v[count - 1] = max;
            v
        }
    }
}

pub fn is_strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}
