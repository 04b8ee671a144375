use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

/// Cached plan of length `len`. `Forward` computes `sum x_q e^{-2 pi i q l / len}`.
pub(crate) fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .plan_fft(len, direction)
}

/// In-place 2D transform of a row-major `rows x cols` buffer.
pub(crate) fn transform_2d(buf: &mut [Complex64], rows: usize, cols: usize, direction: FftDirection) {
    debug_assert_eq!(buf.len(), rows * cols);
    plan(cols, direction).process(buf);
    let col_plan = plan(rows, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_plan.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
}
