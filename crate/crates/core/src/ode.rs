//! Embedded Dormand-Prince 5(4) integrator with step-size control.

use crate::error::{LabError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integrator state for `y' = f(t, y)`.
pub struct DormandPrince<F> {
    rhs: F,
    pub t: f64,
    pub y: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    step: f64,
    max_steps: usize,
}

impl<F: Fn(f64, &[f64], &mut [f64])> DormandPrince<F> {
    pub fn new(rhs: F, t0: f64, y0: Vec<f64>, rtol: f64, atol: f64) -> Self {
        Self { rhs, t: t0, y: y0, rtol, atol, step: 1e-3, max_steps: 1_000_000 }
    }

    pub fn with_initial_step(mut self, h: f64) -> Self {
        self.step = h.abs();
        self
    }

    /// Advance to `t_end` exactly (direction taken from the sign of
    /// `t_end - t`).
    pub fn integrate_to(&mut self, t_end: f64) -> Result<()> {
        let n = self.y.len();
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut steps = 0;
        while (t_end - self.t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(LabError::NoConvergence(format!("ODE step budget exhausted at t = {}", self.t)));
            }
            let remaining = (t_end - self.t).abs();
            let mut h = self.step.min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;
            (self.rhs)(self.t, &self.y, &mut k[0]);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hs * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                (self.rhs)(self.t + C[s] * hs, &tmp, &mut tail[0]);
            }
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut s5 = 0.0;
                let mut s4 = 0.0;
                for s in 0..7 {
                    s5 += B5[s] * k[s][i];
                    s4 += B4[s] * k[s][i];
                }
                y5[i] = self.y[i] + hs * s5;
                let sc = self.atol + self.rtol * self.y[i].abs().max(y5[i].abs());
                err = err.max((hs * (s5 - s4)).abs() / sc);
            }
            if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
                if h < 1e-14 {
                    return Err(LabError::NoConvergence(format!("non-finite ODE state near t = {}", self.t)));
                }
                self.step = 0.25 * h;
                continue;
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + hs };
                self.y.copy_from_slice(&y5);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    self.step = h * fac;
                } else {
                    self.step = self.step.max(h * fac.min(1.0));
                }
            } else {
                self.step = h * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                if self.step < 1e-15 * (1.0 + self.t.abs()) {
                    return Err(LabError::NoConvergence(format!("ODE step underflow at t = {}", self.t)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_harmonic_oscillator() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let mut dp = DormandPrince::new(rhs, 0.0, vec![0.0, 1.0], 1e-12, 1e-14);
        dp.integrate_to(10.0).unwrap();
        assert!((dp.y[0] - 10f64.sin()).abs() < 1e-10);
        dp.integrate_to(0.0).unwrap();
        assert!(dp.y[0].abs() < 1e-9);
    }
}
