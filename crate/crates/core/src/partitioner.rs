//! Adaptive temporal partitioning of a pixel's intervals.
//!
//! Intervals are cut into basic segments of `basic_len`, each summarised by
//! a method-of-moments gamma fit, and adjacent segments with similar
//! parameters are merged until no neighbouring pair is similar.

use crate::error::{Error, Result};

/// Shape assigned to a zero-variance sample.
pub const ALPHA_MAX: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaParams {
    pub fn is_degenerate(&self) -> bool {
        self.alpha == ALPHA_MAX
    }
}

fn moments(isis: &[u32]) -> (f64, f64) {
    let n = isis.len() as f64;
    let mean = isis.iter().map(|&t| t as f64).sum::<f64>() / n;
    let var = if isis.len() < 2 {
        0.0
    } else {
        isis.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

fn params_from_moments(mean: f64, var: f64) -> GammaParams {
    if var == 0.0 {
        GammaParams {
            alpha: ALPHA_MAX,
            beta: mean / ALPHA_MAX,
        }
    } else {
        GammaParams {
            alpha: mean * mean / var,
            beta: var / mean,
        }
    }
}

/// `alpha = mean^2 / var`, `beta = var / mean` with the unbiased sample
/// variance. Constant samples return `(ALPHA_MAX, mean / ALPHA_MAX)`.
pub fn fit_gamma_moments(isis: &[u32]) -> Result<GammaParams> {
    if isis.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: isis.len(),
        });
    }
    let (mean, var) = moments(isis);
    Ok(params_from_moments(mean, var))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionConfig {
    pub basic_len: usize,
    pub tolerance: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            basic_len: 32,
            tolerance: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// Ordinal of the segment within its pixel.
    pub index: usize,
    /// Index of the first interval within the pixel's interval list.
    pub start: usize,
    pub isis: Vec<u32>,
    pub mean: f64,
    pub params: GammaParams,
}

impl Segment {
    fn new(start: usize, isis: Vec<u32>) -> Self {
        let (mean, var) = moments(&isis);
        Segment {
            index: 0,
            start,
            isis,
            mean,
            params: params_from_moments(mean, var),
        }
    }

    pub fn len(&self) -> usize {
        self.isis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.isis.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.isis.len()
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b)
}

/// Whether two adjacent segments look like draws from one distribution.
pub fn similar(a: &Segment, b: &Segment, tolerance: f64) -> bool {
    match (a.params.is_degenerate(), b.params.is_degenerate()) {
        (true, true) => a.mean == b.mean,
        _ => {
            rel_diff(a.params.alpha, b.params.alpha) <= tolerance
                && rel_diff(a.params.beta, b.params.beta) <= tolerance
        }
    }
}

pub fn partition(isis: &[u32], cfg: &PartitionConfig) -> Result<Vec<Segment>> {
    if cfg.basic_len < 2 {
        return Err(Error::Config(format!("basic segment length {}", cfg.basic_len)));
    }
    let mut segs: Vec<Segment> = isis
        .chunks(cfg.basic_len)
        .enumerate()
        .map(|(i, c)| Segment::new(i * cfg.basic_len, c.to_vec()))
        .collect();

    loop {
        let mut merged_any = false;
        let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
        for seg in segs {
            match out.last_mut() {
                Some(prev) if similar(prev, &seg, cfg.tolerance) => {
                    let mut union = std::mem::take(&mut prev.isis);
                    union.extend_from_slice(&seg.isis);
                    *prev = Segment::new(prev.start, union);
                    merged_any = true;
                }
                _ => out.push(seg),
            }
        }
        segs = out;
        if !merged_any {
            break;
        }
    }
    for (i, s) in segs.iter_mut().enumerate() {
        s.index = i;
    }
    Ok(segs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn gamma_isis(n: usize, shape: f64, scale: f64, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gamma::new(shape, scale).unwrap();
        (0..n).map(|_| (g.sample(&mut rng).round() as u32).max(1)).collect()
    }

    #[test]
    fn hand_computed_fit() {
        let p = fit_gamma_moments(&[2, 4]).unwrap();
        assert!((p.alpha - 4.5).abs() < 1e-12);
        assert!((p.beta - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_sentinel() {
        let p = fit_gamma_moments(&[5; 8]).unwrap();
        assert_eq!(p.alpha, ALPHA_MAX);
        assert_eq!(p.beta, 5.0 / ALPHA_MAX);
        assert!(p.is_degenerate());
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_gamma_moments(&[3]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn moments_recover_gamma() {
        use rand_distr::Gamma;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = Gamma::<f64>::new(4.0, 2.0).unwrap();
        // Scaled by 1000 so integer rounding does not bias the moments.
        let xs: Vec<u32> = (0..100_000)
            .map(|_| (g.sample(&mut rng) * 1000.0).round() as u32)
            .collect();
        let p = fit_gamma_moments(&xs).unwrap();
        assert!((p.alpha / 4.0 - 1.0).abs() < 0.05, "{p:?}");
        assert!((p.beta / 2000.0 - 1.0).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn short_sequence_is_one_segment() {
        let isis = gamma_isis(10, 4.0, 5.0, 1);
        let segs = partition(&isis, &PartitionConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].isis, isis);
    }

    #[test]
    fn empty_input() {
        assert!(partition(&[], &PartitionConfig::default()).unwrap().is_empty());
        let bad = PartitionConfig {
            basic_len: 1,
            tolerance: 0.5,
        };
        assert!(partition(&[1, 2], &bad).is_err());
    }

    #[test]
    fn rate_change_splits() {
        let mut isis = gamma_isis(32, 16.0, 0.25, 5);
        isis.extend(gamma_isis(32, 16.0, 2.5, 6));
        let segs = partition(&isis, &PartitionConfig::default()).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].len(), 32);
        assert_eq!(segs[1].start, 32);
    }

    #[test]
    fn constant_background_merges() {
        let mut isis = vec![9u32; 100];
        isis.extend([3u32; 40]);
        let segs = partition(&isis, &PartitionConfig::default()).unwrap();
        // 9s in chunks [0,32) [32,64) [64,96) merge; [96,128) is mixed.
        assert_eq!(segs[0].len(), 96);
        assert!(segs.iter().map(|s| s.len()).sum::<usize>() == 140);
    }

    #[test]
    fn stationary_gamma_mostly_merges() {
        let merged = (0..200u64)
            .filter(|&seed| {
                let isis = gamma_isis(128, 16.0, 2.0, seed);
                partition(&isis, &PartitionConfig::default()).unwrap().len() == 1
            })
            .count();
        assert!(merged >= 180, "{merged}/200");
    }

    proptest::proptest! {
        #[test]
        fn segments_tile_input(
            isis in proptest::collection::vec(1u32..200, 0..400),
            basic_len in 2usize..40,
            tolerance in 0.0f64..1.0,
        ) {
            let cfg = PartitionConfig { basic_len, tolerance };
            let segs = partition(&isis, &cfg).unwrap();
            let joined: Vec<u32> = segs.iter().flat_map(|s| s.isis.iter().copied()).collect();
            proptest::prop_assert_eq!(&joined, &isis);
            let mut start = 0;
            for (i, s) in segs.iter().enumerate() {
                proptest::prop_assert_eq!(s.index, i);
                proptest::prop_assert_eq!(s.start, start);
                proptest::prop_assert!(!s.is_empty());
                if i + 1 < segs.len() {
                    proptest::prop_assert_eq!(s.len() % basic_len, 0);
                }
                if s.len() >= 2 {
                    proptest::prop_assert_eq!(s.params, fit_gamma_moments(&s.isis).unwrap());
                }
                start = s.end();
            }
            proptest::prop_assert_eq!(partition(&isis, &cfg).unwrap(), segs);
        }
    }
}
