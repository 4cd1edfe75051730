//! Adaptive embedded Runge-Kutta stepper: the Dormand-Prince 5(4) pair
//! with PI step-size control and FSAL reuse.
//!
//! The right-hand side is fallible so that domain guards can interrupt a
//! step. A guard violation during a trial stage is treated as a rejected
//! step (the step was too long); a violation at an accepted point, or a
//! step-size underflow while guards keep firing, aborts the integration.

use crate::error::{Error, Result};

/// Accepted/rejected step counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
}

const STAGE_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
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
// fifth-order weights (also the last stage row: FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: b5 - b4th.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// The stepper lands exactly on every time in `checkpoints` (which must be
/// strictly increasing and end with `t1`). `observer` is called at `t0`
/// and then either at every accepted step (`record_every_step`) or only at
/// the checkpoints.
pub fn integrate_adaptive<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
    checkpoints: &[f64],
    record_every_step: bool,
    mut observer: O,
) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]),
{
    let t1 = *checkpoints
        .last()
        .ok_or_else(|| Error::InvalidArgument("integration needs at least one checkpoint".into()))?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "integration span must be forward in time, got [{t0}, {t1}]"
        )));
    }
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerances must be positive, got rtol = {rtol}, atol = {atol}"
        )));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = StepStats::default();
    let mut err_prev: f64 = 1.0;

    let mut k = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    // guard-wall detector: repeated stage failures without real progress
    // in time mean the solution is wedged against a domain guard.
    let mut guard_strikes = 0u32;
    let mut progress_mark = t0;
    let mut just_rejected = false;

    // first derivative evaluation happens at an accepted point: a guard
    // failure here is genuine, not a step-size artifact.
    rhs(t, &y, &mut k[0])?;
    observer(t, &y);

    let span = t1 - t0;
    let mut h = (span * 1e-4).min(span);
    let mut cp_idx = 0;
    while checkpoints[cp_idx] <= t0 {
        cp_idx += 1;
        if cp_idx == checkpoints.len() {
            return Err(Error::InvalidArgument(
                "checkpoints must lie beyond the initial time".into(),
            ));
        }
    }

    'outer: loop {
        let target = checkpoints[cp_idx];
        // clamp the attempted step onto the next checkpoint, but keep the
        // controller's proposal so dense checkpoints do not shrink it.
        let mut h_step = h;
        let mut hit_checkpoint = false;
        if t + h_step >= target - 1e-14 * span {
            h_step = target - t;
            hit_checkpoint = true;
        }
        if h_step <= f64::EPSILON * 4.0 * t.abs().max(span) {
            return Err(Error::StepUnderflow { t, h: h_step });
        }

        // six fresh stages; k[0] is FSAL from the previous step.
        let mut stage_failed: Option<Error> = None;
        'stages: for s in 1..7 {
            for i in 0..n {
                let acc = match s {
                    1 => A21 * k[0][i],
                    2 => A31 * k[0][i] + A32 * k[1][i],
                    3 => A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i],
                    4 => A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i],
                    5 => {
                        A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i]
                            + A65 * k[4][i]
                    }
                    // stage 7 is evaluated at the candidate solution.
                    _ => {
                        B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]
                    }
                };
                y_stage[i] = y[i] + h_step * acc;
            }
            let ts = if s == 6 { t + h_step } else { t + STAGE_C[s - 1] * h_step };
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if let Err(e) = rhs(ts, &y_stage, &mut tail[0]) {
                stage_failed = Some(e);
                break 'stages;
            }
            if s == 6 {
                y_new.copy_from_slice(&y_stage);
            }
        }

        if let Some(guard_err) = stage_failed {
            stats.rejected += 1;
            guard_strikes += 1;
            just_rejected = true;
            h = h_step * 0.25;
            if guard_strikes > 100 || h <= f64::EPSILON * 4.0 * t.abs().max(span) {
                return Err(guard_err);
            }
            continue 'outer;
        }

        // embedded error estimate against the mixed tolerance.
        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h_step
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt().max(1e-16);

        if err <= 1.0 {
            stats.accepted += 1;
            t = if hit_checkpoint { target } else { t + h_step };
            y.copy_from_slice(&y_new);
            k.swap(0, 6); // FSAL
            if t - progress_mark > 1e-6 * span {
                guard_strikes = 0;
                progress_mark = t;
            }
            if record_every_step || hit_checkpoint {
                observer(t, &y);
            }
            if hit_checkpoint {
                cp_idx += 1;
                if cp_idx == checkpoints.len() {
                    return Ok((y, stats));
                }
            }
            let max_scale = if just_rejected { 1.0 } else { MAX_SCALE };
            just_rejected = false;
            let scale = (SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA))
                .clamp(MIN_SCALE, max_scale);
            // scale the controller's proposal, not the checkpoint-clamped step.
            h = if hit_checkpoint { h * scale } else { h_step * scale };
            err_prev = err;
        } else {
            stats.rejected += 1;
            just_rejected = true;
            h = h_step * (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
        }
    }
}
