//! Small numeric helpers shared across the pipeline.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator). Zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pearson correlation. `None` when either side has zero variance or the
/// lengths differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Rounds to the microsecond / micro-unit resolution of the session format.
pub fn quantize6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// `floor(x)` that tolerates representation error just below an integer,
/// so that e.g. `0.29 * 100.0` counts as 29 samples.
pub(crate) fn floor_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    (x + 1e-9).floor() as usize
}

/// Range-maximum queries in O(1) after O(n log n) preprocessing.
pub(crate) struct RangeMax {
    levels: Vec<Vec<f64>>,
}

impl RangeMax {
    pub fn new(values: &[f64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..=values.len() - 2 * width)
                .map(|i| prev[i].max(prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        RangeMax { levels }
    }

    /// Maximum over the inclusive index range `[lo, hi]`.
    pub fn query(&self, lo: usize, hi: usize) -> f64 {
        debug_assert!(lo <= hi);
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let level = &self.levels[k];
        level[lo].max(level[hi + 1 - (1 << k)])
    }
}
