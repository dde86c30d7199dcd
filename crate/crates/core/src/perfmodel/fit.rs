use crate::error::{Error, Result};

/// Least-squares line `t = a + b K` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    /// Outliers were dropped or the slope had to be forced positive.
    pub flagged: bool,
}

/// Relative drop between consecutive (by `K`) timings that counts as
/// non-monotone rather than noise.
const MONOTONE_TOLERANCE: f64 = 0.1;

fn least_squares(samples: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    (a, b, r_squared(samples, a, b))
}

fn r_squared(samples: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let n = samples.len() as f64;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let ss_tot: f64 = samples.iter().map(|s| (s.1 - my).powi(2)).sum();
    let ss_res: f64 = samples.iter().map(|s| (s.1 - a - b * s.0).powi(2)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn non_monotone(samples: &[(f64, f64)]) -> bool {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    sorted.windows(2).any(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1 * (1.0 - MONOTONE_TOLERANCE))
}

/// Fit `(K, seconds)` samples spanning at least three distinct `K`.
///
/// Timings that fall by more than 10% as `K` grows trigger outlier
/// rejection: the worst-residual sample is dropped (while more than three
/// remain) and the line refitted. A slope that is still not positive falls
/// back to a line through the origin. Either path sets `flagged`.
pub fn fit_affine(samples: &[(f64, f64)]) -> Result<AffineFit> {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFewSamples(distinct.len()));
    }

    let mut kept = samples.to_vec();
    let mut flagged = false;
    let (mut a, mut b, mut r2) = least_squares(&kept);
    while non_monotone(&kept) && kept.len() > 3 {
        let worst = (0..kept.len())
            .max_by(|&i, &j| {
                let ri = (kept[i].1 - a - b * kept[i].0).abs();
                let rj = (kept[j].1 - a - b * kept[j].0).abs();
                ri.total_cmp(&rj)
            })
            .expect("non-empty");
        kept.remove(worst);
        flagged = true;
        (a, b, r2) = least_squares(&kept);
    }
    if flagged || non_monotone(&kept) {
        flagged = true;
    }
    if !(b > 0.0) {
        let sxy: f64 = kept.iter().map(|s| s.0 * s.1).sum();
        let sxx: f64 = kept.iter().map(|s| s.0 * s.0).sum();
        b = (sxy / sxx).max(f64::MIN_POSITIVE);
        a = 0.0;
        r2 = r_squared(&kept, a, b);
        flagged = true;
    }
    Ok(AffineFit { a, b, r2, flagged })
}
