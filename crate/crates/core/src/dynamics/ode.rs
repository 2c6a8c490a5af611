//! Dormand–Prince 5(4) embedded Runge–Kutta pair with adaptive steps, for
//! autonomous systems.

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// difference between the 5th and 4th order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
}

/// Adaptive integrator state. `derivative` holds f(t, y) at the current
/// point (first-same-as-last).
pub struct DormandPrince<F> {
    f: F,
    pub t: f64,
    pub y: Vec<f64>,
    pub derivative: Vec<f64>,
    h: f64,
    control: StepControl,
    k: [Vec<f64>; 7],
    scratch: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<F: FnMut(&[f64], &mut [f64])> DormandPrince<F> {
    pub fn new(mut f: F, y0: Vec<f64>, control: StepControl) -> Self {
        let n = y0.len();
        let mut derivative = vec![0.0; n];
        f(&y0, &mut derivative);
        DormandPrince {
            f,
            t: 0.0,
            y: y0,
            derivative,
            h: control.h0,
            control,
            k: std::array::from_fn(|_| vec![0.0; n]),
            scratch: vec![0.0; n],
            accepted: 0,
            rejected: 0,
        }
    }

    /// Advances by one accepted step. Returns the step size taken, or
    /// `None` when the step size underflows.
    #[allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
    pub fn step(&mut self) -> Option<f64> {
        let n = self.y.len();
        loop {
            let h = self.h.min(self.control.h_max);
            // also stops on NaN
            if !(h > 1e-14 * self.t.abs().max(1.0)) {
                return None;
            }
            self.k[0].copy_from_slice(&self.derivative);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for (r, kr) in self.k.iter().enumerate().take(s) {
                        acc += h * A[s][r] * kr[i];
                    }
                    self.scratch[i] = acc;
                }
                (self.f)(&self.scratch, &mut self.k[s]);
            }
            // scratch now holds the 5th order solution (stage 7 point)
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (r, kr) in self.k.iter().enumerate() {
                    e += E[r] * kr[i];
                }
                let sc = self.control.atol + self.control.rtol * self.y[i].abs().max(self.scratch[i].abs());
                err = err.max((h * e).abs() / sc);
            }
            if !err.is_finite() {
                self.h = h * 0.1;
                self.rejected += 1;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t += h;
                self.y.copy_from_slice(&self.scratch);
                self.derivative.copy_from_slice(&self.k[6]);
                self.h = h * factor;
                self.accepted += 1;
                return Some(h);
            }
            self.h = h * factor.min(1.0);
            self.rejected += 1;
        }
    }
}
