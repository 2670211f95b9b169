//! Dormand–Prince 5(4) with step-size control and the standard fourth-order
//! continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrator state for `y' = f(t, y)`.
pub struct Dopri5<F> {
    f: F,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub stats: StepStats,
}

/// Coefficients of the interpolant over one accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i] + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
    }
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(f: F, rel_tol: f64, abs_tol: f64, max_steps: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(Error::Integrator("tolerances must be positive".into()));
        }
        Ok(Self {
            f,
            rel_tol,
            abs_tol,
            max_steps,
            stats: StepStats::default(),
        })
    }

    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.stats.evaluations += 1;
        (self.f)(t, y, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integrator(format!("non-finite derivative at t = {t}")));
        }
        Ok(())
    }

    fn norm(&self, err: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        let n = err.len() as f64;
        let sum: f64 = err
            .iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| {
                let sc = self.abs_tol + self.rel_tol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn initial_step(&mut self, t0: f64, y0: &[f64], f0: &[f64], span: f64) -> Result<f64> {
        let zero = vec![0.0; y0.len()];
        let d0 = self.norm(y0, &zero, y0);
        let d1 = self.norm(f0, &zero, y0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs());
        let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
        let mut f1 = vec![0.0; y0.len()];
        self.eval(t0 + h0, &y1, &mut f1)?;
        let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = self.norm(&df, &zero, y0) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span.abs()))
    }

    /// Integrates from `(t0, y0)` and returns the states at `times`, which
    /// must be sorted and lie in `[t0, t_end]`.
    pub fn solve_dense(&mut self, t0: f64, y0: &[f64], t_end: f64, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        if t_end <= t0 {
            return Err(Error::Integrator("t_end must exceed the start time".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&s| s < t0 || s > t_end) {
            return Err(Error::Integrator("sample times must be sorted within the span".into()));
        }
        let n = y0.len();
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        while next < times.len() && times[next] == t0 {
            out.push(y0.to_vec());
            next += 1;
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        self.eval(t, &y, &mut k1)?;
        let mut h = self.initial_step(t, &y, &k1, t_end - t0)?;
        let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        );
        let mut tmp = vec![0.0; n];
        let mut y1 = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut steps = 0usize;

        while t < t_end {
            if steps >= self.max_steps {
                return Err(Error::Integrator(format!(
                    "step limit {} reached at t = {t}",
                    self.max_steps
                )));
            }
            steps += 1;
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            if h.abs() <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integrator(format!("step size underflow at t = {t}")));
            }

            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            self.eval(t + C2 * h, &tmp, &mut k2)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            self.eval(t + C3 * h, &tmp, &mut k3)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            self.eval(t + C4 * h, &tmp, &mut k4)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            self.eval(t + C5 * h, &tmp, &mut k5)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            self.eval(t + h, &tmp, &mut k6)?;
            for i in 0..n {
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            self.eval(t + h, &y1, &mut k7)?;
            for i in 0..n {
                err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let e = self.norm(&err, &y, &y1);
            let factor = if e == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };

            if e <= 1.0 {
                self.stats.accepted += 1;
                let t1 = if last { t_end } else { t + h };
                if next < times.len() && times[next] <= t1 {
                    let diff: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
                    let bspl: Vec<f64> = (0..n).map(|i| h * k1[i] - diff[i]).collect();
                    let r3: Vec<f64> = (0..n).map(|i| diff[i] - h * k7[i] - bspl[i]).collect();
                    let r4: Vec<f64> = (0..n)
                        .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                        .collect();
                    let dense = Dense {
                        t0: t,
                        h,
                        r: [y.clone(), diff, bspl, r3, r4],
                    };
                    while next < times.len() && times[next] <= t1 {
                        let mut v = vec![0.0; n];
                        dense.eval(times[next], &mut v);
                        out.push(v);
                        next += 1;
                    }
                }
                t = t1;
                std::mem::swap(&mut y, &mut y1);
                std::mem::swap(&mut k1, &mut k7);
                h *= factor;
            } else {
                self.stats.rejected += 1;
                h *= factor.min(1.0);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut s = Dopri5::new(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = -y[0];
                Ok(())
            },
            1e-10,
            1e-12,
            100_000,
        )
        .unwrap();
        let times: Vec<f64> = (0..=20).map(|i| 0.25 * f64::from(i)).collect();
        let ys = s.solve_dense(0.0, &[1.0], 5.0, &times).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn dense_output_between_steps_is_accurate() {
        // y'' = -y: sin/cos with large steps; dense samples are off-grid.
        let mut s = Dopri5::new(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            1e-9,
            1e-12,
            100_000,
        )
        .unwrap();
        let times: Vec<f64> = (0..=300).map(|i| 0.0333 * f64::from(i)).collect();
        let ys = s.solve_dense(0.0, &[0.0, 1.0], 10.0, &times).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-7, "t = {t}");
        }
        assert!(s.stats.accepted < 300);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = |_t: f64, _y: &[f64], _dy: &mut [f64]| Ok(());
        assert!(Dopri5::new(f, 0.0, 1e-12, 10).is_err());
        let mut s = Dopri5::new(f, 1e-8, 1e-12, 10).unwrap();
        assert!(s.solve_dense(1.0, &[0.0], 0.0, &[]).is_err());
        assert!(s.solve_dense(0.0, &[0.0], 1.0, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let mut s = Dopri5::new(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            1e-10,
            1e-12,
            100_000,
        )
        .unwrap();
        assert!(s.solve_dense(0.0, &[1.0], 2.0, &[2.0]).is_err());
    }
}
