//! Adaptive Dormand-Prince 5(4) integration on plain values.

use crate::error::{AdError, Result};

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

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Tolerances and step budget for [`rk45_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum accepted plus rejected steps between two output times.
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 100_000,
        }
    }
}

/// Checks that output times are finite, strictly ascending and after `t0`.
pub fn check_output_times(t0: f64, ts: &[f64]) -> Result<()> {
    let invalid = |value: String, requirement: &str| AdError::Validation {
        function: "integrate_ode",
        argument: "output times".into(),
        value,
        requirement: requirement.into(),
    };
    if ts.is_empty() {
        return Err(invalid("empty".into(), "non-empty"));
    }
    if !t0.is_finite() || ts.iter().any(|t| !t.is_finite()) {
        return Err(invalid(format!("{ts:?}"), "finite"));
    }
    if ts[0] <= t0 {
        return Err(invalid(
            format!("{}", ts[0]),
            "greater than the initial time",
        ));
    }
    if let Some(w) = ts.windows(2).find(|w| w[1] <= w[0]) {
        return Err(invalid(
            format!("{} after {}", w[1], w[0]),
            "strictly ascending",
        ));
    }
    Ok(())
}

struct Stepper<'f, F> {
    rhs: &'f mut F,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    evaluations: usize,
}

impl<F> Stepper<'_, F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&mut self, t: f64, stage: usize) -> Result<()> {
        let mut out = std::mem::take(&mut self.k[stage]);
        let res = (self.rhs)(t, &self.tmp, &mut out);
        self.k[stage] = out;
        res?;
        self.evaluations += 1;
        if let Some(i) = self.k[stage].iter().position(|v| !v.is_finite()) {
            return Err(AdError::Integration(format!(
                "non-finite derivative in component {i} at t = {t}"
            )));
        }
        Ok(())
    }

    fn combine(&mut self, y: &[f64], h: f64, coeffs: &[(usize, f64)]) {
        for (i, (out, yi)) in self.tmp.iter_mut().zip(y).enumerate() {
            let acc: f64 = coeffs.iter().map(|&(s, c)| c * self.k[s][i]).sum();
            *out = yi + h * acc;
        }
    }

    /// One trial step from `(t, y)` with `k[0] = f(t, y)`; leaves the
    /// candidate in `y_new`, its derivative in `k[6]`, and returns the
    /// scaled error norm.
    fn try_step(&mut self, t: f64, y: &[f64], h: f64, opts: &Rk45Options) -> Result<f64> {
        self.combine(y, h, &[(0, A21)]);
        self.eval(t + C2 * h, 1)?;
        self.combine(y, h, &[(0, A31), (1, A32)]);
        self.eval(t + C3 * h, 2)?;
        self.combine(y, h, &[(0, A41), (1, A42), (2, A43)]);
        self.eval(t + C4 * h, 3)?;
        self.combine(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        self.eval(t + C5 * h, 4)?;
        self.combine(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        self.eval(t + h, 5)?;
        self.combine(y, h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        self.y_new.copy_from_slice(&self.tmp);
        self.eval(t + h, 6)?;

        let mut err = 0.0f64;
        for (i, yi) in y.iter().enumerate() {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let scale = opts.atol + opts.rtol * yi.abs().max(self.y_new[i].abs());
            err = err.max(e.abs() / scale);
        }
        Ok(err)
    }
}

fn initial_step<F>(
    st: &mut Stepper<'_, F>,
    t0: f64,
    y0: &[f64],
    span: f64,
    opts: &Rk45Options,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len().max(1) as f64;
    let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() / n).sqrt();
    let scale: Vec<f64> = y0.iter().map(|y| opts.atol + opts.rtol * y.abs()).collect();
    let d0 = rms(&mut y0.iter().zip(&scale).map(|(y, s)| y / s));
    let d1 = rms(&mut st.k[0].iter().zip(&scale).map(|(f, s)| f / s));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    for ((out, y), f) in st.tmp.iter_mut().zip(y0).zip(&st.k[0]) {
        *out = y + h0 * f;
    }
    st.eval(t0 + h0, 1)?;
    let d2 = rms(&mut st.k[1]
        .iter()
        .zip(&st.k[0])
        .zip(&scale)
        .map(|((f1, f0), s)| (f1 - f0) / s))
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Integrates `dy/dt = rhs(t, y)` from `(t0, y0)` and returns the state at
/// each of `ts`. Steps are shortened to land exactly on every output time.
pub fn rk45_integrate<F>(
    mut rhs: F,
    y0: &[f64],
    t0: f64,
    ts: &[f64],
    opts: &Rk45Options,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    check_output_times(t0, ts)?;
    let n = y0.len();
    let mut st = Stepper {
        rhs: &mut rhs,
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: y0.to_vec(),
        y_new: vec![0.0; n],
        evaluations: 0,
    };
    let mut y = y0.to_vec();
    let mut t = t0;
    st.eval(t, 0)?;
    let mut h = initial_step(&mut st, t0, y0, ts[ts.len() - 1] - t0, opts)?;
    let mut out = Vec::with_capacity(ts.len());

    for &t_out in ts {
        let mut steps = 0usize;
        while t < t_out {
            if steps >= opts.max_steps {
                return Err(AdError::Integration(format!(
                    "exceeded {} steps before t = {t_out} (reached t = {t})",
                    opts.max_steps
                )));
            }
            steps += 1;
            let remaining = t_out - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_try = if landing { remaining } else { h };
            if t + h_try == t {
                return Err(AdError::Integration(format!(
                    "step size underflow at t = {t}"
                )));
            }
            let err = st.try_step(t, &y, h_try, opts)?;
            if err <= 1.0 {
                t = if landing { t_out } else { t + h_try };
                y.copy_from_slice(&st.y_new);
                st.k.swap(0, 6);
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                h = h_try * factor;
            } else {
                let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                h = h_try * factor;
            }
            st.tmp.copy_from_slice(&y);
        }
        out.push(y.clone());
    }
    Ok(out)
}
