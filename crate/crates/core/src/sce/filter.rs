use std::collections::VecDeque;

use num_complex::Complex64;

use super::ecf::EcfGrid;
use super::grid::FrequencyGrid;

/// Smallest admissible `|C(t)|^2` for a sample of size `n`: `4(n-1)/n^2`.
pub fn filter_threshold(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n - 1.0) / (n * n)
}

/// Frequencies kept by the low-pass filter: the face-connected set of nodes around `t = 0`
/// on which `|C(t)|^2` reaches the threshold.
#[derive(Debug, Clone)]
pub struct FilterMask {
    pub freq: FrequencyGrid,
    pub included: Vec<bool>,
    pub threshold: f64,
}

impl FilterMask {
    pub fn contains(&self, k: [i64; 2]) -> bool {
        self.freq.contains(k) && self.included[self.freq.flat(k)]
    }

    /// Number of included nodes.
    pub fn count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }
}

/// Flood fill from `t = 0` over the ECF grid.
pub fn build_filter(ecf: &EcfGrid) -> FilterMask {
    let threshold = filter_threshold(ecf.n);
    let region = flood_fill(&ecf.freq, threshold, |k| Some(ecf.at(k)))
        .expect("dense evaluation never aborts");
    FilterMask {
        freq: ecf.freq.clone(),
        included: region.mask,
        threshold,
    }
}

/// Included nodes with the ECF values seen while filling.
pub(crate) struct Region {
    pub nodes: Vec<[i64; 2]>,
    pub values: Vec<Complex64>,
    pub mask: Vec<bool>,
}

const QUEUED: u8 = 1;
const CACHED: u8 = 2;

/// Breadth-first fill from the origin. `eval` is called at most once per conjugate pair of
/// nodes; returning `None` aborts the fill.
///
/// The origin is included unconditionally, since `C(0) = 1` and the threshold never exceeds 1.
pub(crate) fn flood_fill(
    freq: &FrequencyGrid,
    threshold: f64,
    mut eval: impl FnMut([i64; 2]) -> Option<Complex64>,
) -> Option<Region> {
    let len = freq.len();
    // Zero-initialised buffers are allocated lazily, which keeps small fits on large grids cheap.
    let mut state = vec![0u8; len];
    let mut cache = vec![0.0f64; 2 * len];
    let mut mask = vec![false; len];
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    let mut queue = VecDeque::new();

    let origin = freq.zero_index();
    state[origin] = QUEUED;
    queue.push_back([0i64, 0i64]);
    let mut first = true;
    while let Some(k) = queue.pop_front() {
        let i = freq.flat(k);
        let c = if state[i] & CACHED != 0 {
            Complex64::new(cache[2 * i], cache[2 * i + 1])
        } else {
            let c = eval(k)?;
            let j = freq.flat([-k[0], -k[1]]);
            cache[2 * j] = c.re;
            cache[2 * j + 1] = -c.im;
            state[j] |= CACHED;
            c
        };
        if !first && c.norm_sqr() < threshold {
            continue;
        }
        first = false;
        mask[i] = true;
        nodes.push(k);
        values.push(c);
        for nb in freq.neighbours(k) {
            let j = freq.flat(nb);
            if state[j] & QUEUED == 0 {
                state[j] |= QUEUED;
                queue.push_back(nb);
            }
        }
    }
    Some(Region {
        nodes,
        values,
        mask,
    })
}
