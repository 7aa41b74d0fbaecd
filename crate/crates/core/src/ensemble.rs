//! Reproducible parallel Monte Carlo averaging.
//!
//! Sample `i` draws from its own ChaCha stream keyed by `(seed, i)`, samples
//! are grouped into fixed-size blocks, and block statistics are merged in
//! block order. The result is therefore bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per reduction block.
pub const BLOCK_SIZE: u64 = 2048;

/// RNG substream for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Running mean and centered second moment of a vector statistic.
#[derive(Clone, Debug, PartialEq)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(width: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn merge(mut self, other: &Moments) -> Moments {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other.clone();
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.n += other.n;
        self
    }
}

/// Sample mean of a vector statistic with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    /// Standard error of each mean; infinite with fewer than two samples.
    pub std_error: Vec<f64>,
    pub samples: u64,
}

/// Averages `statistic` over `samples` independent draws.
///
/// `statistic` receives the sample's private RNG and writes `width` values
/// into the output slice.
pub fn ensemble_average<F>(samples: u64, seed: u64, width: usize, statistic: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut moments = Moments::new(width);
            let mut buf = vec![0.0; width];
            let end = ((b + 1) * BLOCK_SIZE).min(samples);
            for i in b * BLOCK_SIZE..end {
                let mut rng = sample_rng(seed, i);
                statistic(&mut rng, &mut buf);
                moments.push(&buf);
            }
            moments
        })
        .collect();
    let total = partials
        .iter()
        .fold(Moments::new(width), |acc, m| acc.merge(m));

    let std_error = if total.n < 2 {
        vec![f64::INFINITY; width]
    } else {
        let n = total.n as f64;
        total
            .m2
            .iter()
            .map(|s| (s / (n - 1.0) / n).sqrt())
            .collect()
    };
    Estimate {
        mean: total.mean,
        std_error,
        samples: total.n,
    }
}
