use crate::error::{Error, Result};

/// Stage buffers for [`rk4_step`].
#[derive(Clone, Debug, Default)]
pub struct Rk4Scratch {
    k: Vec<f64>,
    stage: Vec<f64>,
    acc: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(len: usize) -> Self {
        Self { k: vec![0.0; len], stage: vec![0.0; len], acc: vec![0.0; len] }
    }
}

/// One classic four-stage Runge–Kutta step of `y' = f(t, y)`, in place.
///
/// `rate(t, y, out)` must overwrite `out`. Any non-finite stage aborts with
/// [`Error::NonFiniteState`] carrying `step`.
pub fn rk4_step<F>(y: &mut [f64], t: f64, dt: f64, step: usize, scratch: &mut Rk4Scratch, mut rate: F) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    if scratch.k.len() != n {
        *scratch = Rk4Scratch::new(n);
    }
    let Rk4Scratch { k, stage, acc } = scratch;
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());

    // Stage weights and the offsets at which the next stage is evaluated.
    const WEIGHT: [f64; 4] = [1.0, 2.0, 2.0, 1.0];
    const NEXT: [f64; 3] = [0.5, 0.5, 1.0];

    rate(t, y, k)?;
    if !finite(k) {
        return Err(Error::NonFiniteState { step });
    }
    acc.copy_from_slice(k);
    for s in 0..3 {
        let c = NEXT[s];
        for ((st, yi), ki) in stage.iter_mut().zip(y.iter()).zip(k.iter()) {
            *st = yi + c * dt * ki;
        }
        rate(t + c * dt, stage, k)?;
        if !finite(k) {
            return Err(Error::NonFiniteState { step });
        }
        let w = WEIGHT[s + 1];
        for (a, ki) in acc.iter_mut().zip(k.iter()) {
            *a += w * ki;
        }
    }
    for (yi, a) in y.iter_mut().zip(acc.iter()) {
        *yi += dt / 6.0 * a;
    }
    if !finite(y) {
        return Err(Error::NonFiniteState { step });
    }
    Ok(())
}

/// Stable time step `C h / (c_max N²)`.
pub fn cfl_time_step(courant: f64, h: f64, max_speed: f64, order: usize) -> f64 {
    courant * h / (max_speed * (order * order) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, v) in out.iter_mut().zip(y) {
            *o = -v;
        }
        Ok(())
    }

    #[test]
    fn zero_rate_leaves_state() {
        let mut y = vec![1.0, -2.0, 3.5];
        let mut s = Rk4Scratch::default();
        rk4_step(&mut y, 0.0, 0.3, 0, &mut s, |_, _, out| {
            out.fill(0.0);
            Ok(())
        })
        .unwrap();
        assert_eq!(y, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn taylor_polynomial_for_decay() {
        let mut y = vec![1.0];
        rk4_step(&mut y, 0.0, 0.1, 0, &mut Rk4Scratch::default(), decay).unwrap();
        let h: f64 = 0.1;
        let want = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((y[0] - want).abs() < 1e-15);
        assert!((y[0] - 0.904_837_5).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |dt: f64| {
            let mut y = vec![1.0];
            let steps = (1.0 / dt).round() as usize;
            let mut s = Rk4Scratch::default();
            for i in 0..steps {
                rk4_step(&mut y, i as f64 * dt, dt, i, &mut s, decay).unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        let slope1 = (e1 / e2).log2();
        let slope2 = (e2 / e3).log2();
        assert!((slope1 - 4.0).abs() < 0.1 && (slope2 - 4.0).abs() < 0.1, "{slope1} {slope2}");
    }

    #[test]
    fn time_dependent_rate_uses_stage_times() {
        // y' = t integrates exactly.
        let mut y = vec![0.0];
        rk4_step(&mut y, 1.0, 0.5, 0, &mut Rk4Scratch::default(), |t, _, out| {
            out[0] = t;
            Ok(())
        })
        .unwrap();
        assert!((y[0] - (1.5f64.powi(2) - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn nan_aborts_with_step() {
        let mut y = vec![1.0];
        let r = rk4_step(&mut y, 0.0, 0.1, 42, &mut Rk4Scratch::default(), |t, _, out| {
            out[0] = if t > 0.0 { f64::NAN } else { 1.0 };
            Ok(())
        });
        assert!(matches!(r, Err(Error::NonFiniteState { step: 42 })));
    }
}
