//! Dormand-Prince 5(4) for autonomous fields on R^3.

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &Vec3, terms: &[(f64, &Vec3)], h: f64) -> Vec3 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand-Prince step: fifth-order solution and error estimate.
pub fn dp45_step<F: Fn(&Vec3) -> Vec3>(f: &F, y: &Vec3, h: f64) -> (Vec3, Vec3) {
    let k1 = f(y);
    let k2 = f(&axpy(y, &[(A21, &k1)], h));
    let k3 = f(&axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(&axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(&axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(&axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
    let y5 = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = f(&y5);
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive step-size state carried between calls.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub tol: Tolerances,
    pub h: f64,
    pub h_min: f64,
    pub stats: StepStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub y: Vec3,
    pub h: f64,
}

impl Stepper {
    pub fn new(tol: Tolerances, h0: f64) -> Self {
        Self { tol, h: h0, h_min: 1e-14, stats: StepStats::default() }
    }

    fn err_norm(&self, y: &Vec3, y1: &Vec3, e: &Vec3) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y1[i].abs());
            m = m.max((e[i] / sc).abs());
        }
        m
    }

    /// Takes one accepted step of signed direction `dir` with |h| at most
    /// `h_cap`. Returns `None` when the step size collapses.
    pub fn advance<F: Fn(&Vec3) -> Vec3>(&mut self, f: &F, y: &Vec3, dir: f64, h_cap: f64) -> Option<Step> {
        let mut h = self.h.min(h_cap).max(self.h_min);
        loop {
            let (y1, e) = dp45_step(f, y, dir * h);
            let en = self.err_norm(y, &y1, &e);
            if en.is_finite() && en <= 1.0 && y1.iter().all(|v| v.is_finite()) {
                self.stats.accepted += 1;
                let grow = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = h * grow;
                return Some(Step { y: y1, h: dir * h });
            }
            self.stats.rejected += 1;
            let shrink = if en.is_finite() { (0.9 * en.powf(-0.25)).clamp(0.1, 0.5) } else { 0.1 };
            h *= shrink;
            if h < self.h_min {
                return None;
            }
        }
    }
}

/// Fixed-step integration, used for convergence-order checks.
pub fn integrate_fixed<F: Fn(&Vec3) -> Vec3>(f: &F, y0: Vec3, t: f64, n: usize) -> Vec3 {
    let h = t / n as f64;
    let mut y = y0;
    for _ in 0..n {
        y = dp45_step(f, &y, h).0;
    }
    y
}

/// Adaptive integration to a fixed final time (no step caps).
pub fn integrate_to<F: Fn(&Vec3) -> Vec3>(f: &F, y0: Vec3, t: f64, tol: Tolerances) -> Option<Vec3> {
    let mut st = Stepper::new(tol, (t.abs() / 100.0).max(1e-6));
    let dir = t.signum();
    let (mut s, mut y) = (0.0, y0);
    while s < t.abs() {
        let step = st.advance(f, &y, dir, t.abs() - s)?;
        s += step.h.abs();
        y = step.y;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spiral(y: &Vec3) -> Vec3 {
        [-y[0] - y[1], y[0] - y[1], -3.0 * y[2]]
    }

    fn exact(t: f64) -> Vec3 {
        let e = (-t).exp();
        [e * t.cos(), e * t.sin(), 0.5 * (-3.0 * t).exp()]
    }

    fn dist(a: Vec3, b: Vec3) -> f64 {
        (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn fixed_step_order_is_at_least_four() {
        let y0 = [1.0, 0.0, 0.5];
        let e1 = dist(integrate_fixed(&spiral, y0, 2.0, 20), exact(2.0));
        let e2 = dist(integrate_fixed(&spiral, y0, 2.0, 40), exact(2.0));
        assert!(e1 / e2 >= 16.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn adaptive_meets_tolerance() {
        let y = integrate_to(&spiral, [1.0, 0.0, 0.5], 3.0, Tolerances::default()).unwrap();
        assert!(dist(y, exact(3.0)) < 1e-9);
        let yb = integrate_to(&spiral, y, -3.0, Tolerances::default()).unwrap();
        assert!(dist(yb, [1.0, 0.0, 0.5]) < 1e-8);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let loose = Tolerances { rtol: 1e-6, atol: 1e-9 };
        let tight = Tolerances { rtol: 1e-6 / 32.0, atol: 1e-9 / 32.0 };
        let a = dist(integrate_to(&spiral, [1.0, 0.0, 0.5], 4.0, loose).unwrap(), exact(4.0));
        let b = dist(integrate_to(&spiral, [1.0, 0.0, 0.5], 4.0, tight).unwrap(), exact(4.0));
        assert!(a / b >= 4.0, "{a} {b}");
    }
}
