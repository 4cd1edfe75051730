//! Trajectory integration of the coherent-state flow, Floquet monodromy
//! and stability analysis, parameter-plane scans, and quasienergy
//! spectra.

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::disk::{self, CoherentProductState, DiskPoint, Mode};
use crate::error::{Error, Result};
use crate::husimi::{assemble, HusimiCoefficients};
use crate::rk::{integrate_adaptive, StepStats};
use crate::trap::{voltages_for_mathieu, DriveMode, TrapConfig};

/// Integrated coherent-state trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CoherentProductState>,
    /// Energy at each recorded time (J).
    pub energy: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn max_abs_z(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| [s.axial().point.z().norm(), s.radial().point.z().norm()])
            .fold(0.0, f64::max)
    }

    /// `max_t |E(t) - E(0)| / |E(0)|`.
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs().max(f64::MIN_POSITIVE)
    }
}

fn flow_state(
    template: &CoherentProductState,
    y: &[f64],
    t: f64,
) -> Result<CoherentProductState> {
    let make = |re: f64, im: f64, which: &'static str| {
        DiskPoint::from_re_im(re, im).map_err(|_| Error::BoundaryProximity {
            which,
            abs_z: (re * re + im * im).sqrt(),
            t: Some(t),
        })
    };
    Ok(template.with_points(
        make(y[0], y[1], "axial mode")?,
        make(y[2], y[3], "radial mode")?,
    ))
}

/// The Hamilton flow in the packed real coordinates
/// `[Re z_a, Im z_a, Re z_r, Im z_r]`. The energy polynomial carries
/// joules, so the vector field divides by hbar once.
fn flow_rhs<'a>(
    h: &'a HusimiCoefficients,
    template: &'a CoherentProductState,
    hbar: f64,
) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<()> + 'a {
    move |t, y, dy| {
        let s = flow_state(template, y, t)?;
        let set = h.at_time(t);
        let (za_dot, zr_dot) = disk::hamiltonian_vector_field(&set, &s, t);
        dy[0] = za_dot.re / hbar;
        dy[1] = za_dot.im / hbar;
        dy[2] = zr_dot.re / hbar;
        dy[3] = zr_dot.im / hbar;
        Ok(())
    }
}

fn integrate_inner(
    cfg: &TrapConfig,
    s0: &CoherentProductState,
    t_span: (f64, f64),
    tol: f64,
    checkpoints: &[f64],
    record_every_step: bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    let (t0, _t1) = t_span;
    let h = assemble(cfg, t0)?;
    let y0 = [
        s0.axial().point.z().re,
        s0.axial().point.z().im,
        s0.radial().point.z().re,
        s0.radial().point.z().im,
    ];
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energy = Vec::new();
    let rhs = flow_rhs(&h, s0, cfg.hbar);
    // `tol` is the target global accuracy of the run; the per-step
    // tolerances are tighter by fixed factors, calibrated so that a
    // static-drive run of a thousand mode periods keeps the relative
    // energy drift about an order of magnitude below `tol`.
    let rtol = (tol * 1e-3).max(1e-14);
    let atol = (tol * 1e-5).max(1e-16);
    let (_, stats) = integrate_adaptive(
        &rhs,
        t0,
        &y0,
        rtol,
        atol,
        checkpoints,
        record_every_step,
        |t, y| {
            let s = flow_state(s0, y, t).expect("accepted states stay inside the guard");
            energy.push(crate::husimi::evaluate(
                &HusimiCoefficients {
                    current: h.at_time(t),
                    ..h
                },
                &s,
            ));
            times.push(t);
            states.push(s);
        },
    )?;
    Ok(Trajectory {
        times,
        states,
        energy,
        stats,
    })
}

/// Integrate the flow over `t_span`, recording every accepted step.
pub fn integrate(
    cfg: &TrapConfig,
    s0: &CoherentProductState,
    t_span: (f64, f64),
    tol: f64,
) -> Result<Trajectory> {
    integrate_inner(cfg, s0, t_span, tol, &[t_span.1], true)
}

/// Integrate the flow, recording at `n_samples` uniformly spaced times
/// (the initial time is recorded additionally).
pub fn integrate_sampled(
    cfg: &TrapConfig,
    s0: &CoherentProductState,
    t_span: (f64, f64),
    tol: f64,
    n_samples: usize,
) -> Result<Trajectory> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let (t0, t1) = t_span;
    let dt = (t1 - t0) / n_samples as f64;
    let checkpoints: Vec<f64> = (1..=n_samples).map(|i| t0 + i as f64 * dt).collect();
    integrate_inner(cfg, s0, t_span, tol, &checkpoints, false)
}

/// Per-mode frequency coefficients of the quadratic (quadrupole) flow in
/// the mode's quadrature pair `(X, P)`: `dX/dt = a P`, `dP/dt = -b(t) X`
/// with `a = A/(hbar (k+m))` and `b(t) = B(t)/(hbar (k+m))`. Derived from
/// the assembled energy coefficients, so any error in the operator
/// dictionary shows up against the bare Newton dynamics.
struct QuadratureCoeffs {
    a_static: f64,
    a_cosine: f64,
    b_static: f64,
    b_cosine: f64,
    omega_rf: f64,
}

impl QuadratureCoeffs {
    fn from_config(cfg: &TrapConfig, mode: Mode) -> Result<Self> {
        let h = assemble(cfg, 0.0)?;
        let n = match mode {
            Mode::Axial => cfg.axial_weight().k_plus_m(),
            Mode::Radial => cfg.radial_weight()?.k_plus_m(),
        };
        let scale = 1.0 / (cfg.hbar * n);
        let pick = |set: &crate::husimi::CoefficientSet| match mode {
            Mode::Axial => (set.a_a * scale, set.b_a * scale),
            Mode::Radial => (set.a_r * scale, set.b_r * scale),
        };
        let (a_s, b_s) = pick(&h.static_part);
        let (a_c, b_c) = pick(&h.cosine_part);
        Ok(Self {
            a_static: a_s,
            a_cosine: a_c,
            b_static: b_s,
            b_cosine: b_c,
            omega_rf: cfg.omega_rf,
        })
    }

    fn a(&self, t: f64) -> f64 {
        self.a_static + self.a_cosine * (self.omega_rf * t).cos()
    }

    fn b(&self, t: f64) -> f64 {
        self.b_static + self.b_cosine * (self.omega_rf * t).cos()
    }
}

/// Fundamental matrix over one RF period of the mode's linear quadrature
/// dynamics about the disk origin (quadrupole coefficients only).
///
/// The disk flow of a quadratic energy acts by Moebius maps; its linear
/// representative is the quadrature system above, whose monodromy carries
/// the stability content (rotation angle or hyperbolic stretch).
pub fn linearized_monodromy(cfg: &TrapConfig, mode: Mode) -> Result<Matrix2<f64>> {
    if !matches!(cfg.drive_mode, DriveMode::TimeDependent) {
        return Err(Error::InvalidArgument(
            "monodromy analysis needs the time-dependent drive mode".into(),
        ));
    }
    cfg.validate()?;
    let qc = QuadratureCoeffs::from_config(cfg, mode)?;
    let period = cfg.rf_period();
    // two columns of the fundamental matrix, packed as [x1, p1, x2, p2].
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (a, b) = (qc.a(t), qc.b(t));
        dy[0] = a * y[1];
        dy[1] = -b * y[0];
        dy[2] = a * y[3];
        dy[3] = -b * y[2];
        Ok(())
    };
    let (y, _) = integrate_adaptive(
        rhs,
        0.0,
        &[1.0, 0.0, 0.0, 1.0],
        1e-12,
        1e-12,
        &[period],
        false,
        |_, _| {},
    )?;
    Ok(Matrix2::new(y[0], y[2], y[1], y[3]))
}

/// Stability data of one mode at the configured drive point.
#[derive(Debug, Clone, Copy)]
pub struct FloquetInfo {
    pub monodromy: Matrix2<f64>,
    pub trace: f64,
    pub stable: bool,
    /// `| |trace| - 2 | <= 1e-9`: on the stability boundary.
    pub marginal: bool,
    /// Principal-branch characteristic exponent in `[0, Omega/2]` (rad/s);
    /// NaN when the mode is unstable.
    pub nu: f64,
    /// Sense of the monodromy rotation (+1/-1), from its antisymmetric part.
    pub rotation_sign: f64,
}

pub fn mode_floquet(cfg: &TrapConfig, mode: Mode) -> Result<FloquetInfo> {
    let m = linearized_monodromy(cfg, mode)?;
    let period = cfg.rf_period();
    let trace = m.trace();
    let stable = trace.abs() <= 2.0;
    let marginal = (trace.abs() - 2.0).abs() <= 1e-9;
    let rotation_sign = if m[(0, 1)] - m[(1, 0)] >= 0.0 { 1.0 } else { -1.0 };
    let nu = if stable {
        (trace / 2.0).clamp(-1.0, 1.0).acos() / period
    } else {
        f64::NAN
    };
    Ok(FloquetInfo {
        monodromy: m,
        trace,
        stable,
        marginal,
        nu,
        rotation_sign,
    })
}

/// Which parameter plane a scan walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    /// `(a_z, q_z)` of the axial Mathieu map; voltages are derived.
    MathieuAQ,
    /// Raw voltages `(U0, V0)`.
    Voltage,
}

/// Rectangular scan grid; `x` is the outer (row) coordinate.
#[derive(Debug, Clone, Copy)]
pub struct ScanGrid {
    pub kind: ScanKind,
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl ScanGrid {
    fn value(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }
}

/// Stability classification of both modes at one scan point.
#[derive(Debug, Clone)]
pub struct StabilityRecord {
    pub coords: (f64, f64),
    pub trace_a: f64,
    pub trace_r: f64,
    pub stable_a: bool,
    pub stable_r: bool,
    pub marginal_a: bool,
    pub marginal_r: bool,
    /// Principal Floquet exponents (rad/s); NaN where unstable or failed.
    pub nu_a: f64,
    pub nu_r: f64,
    pub diagnostic: Option<String>,
}

/// Configuration at one scan point.
pub fn scan_point_config(cfg: &TrapConfig, kind: ScanKind, x: f64, y: f64) -> TrapConfig {
    let mut point = cfg.clone();
    point.drive_mode = DriveMode::TimeDependent;
    match kind {
        ScanKind::MathieuAQ => {
            let (u0, v0) = voltages_for_mathieu(cfg, x, y);
            point.u0 = u0;
            point.v0 = v0;
        }
        ScanKind::Voltage => {
            point.u0 = x;
            point.v0 = y;
        }
    }
    point
}

/// Classify every grid point. Points are independent and evaluated in
/// parallel; the output is row-major regardless of completion order.
/// Per-point failures land in the record's diagnostic and do not abort
/// the scan.
pub fn stability_scan(cfg: &TrapConfig, grid: &ScanGrid) -> Vec<StabilityRecord> {
    let items: Vec<(usize, usize)> = (0..grid.nx)
        .flat_map(|i| (0..grid.ny).map(move |j| (i, j)))
        .collect();
    items
        .par_iter()
        .map(|&(i, j)| {
            let x = ScanGrid::value(grid.x_min, grid.x_max, grid.nx, i);
            let y = ScanGrid::value(grid.y_min, grid.y_max, grid.ny, j);
            let point = scan_point_config(cfg, grid.kind, x, y);
            let result: Result<(FloquetInfo, FloquetInfo)> = (|| {
                Ok((
                    mode_floquet(&point, Mode::Axial)?,
                    mode_floquet(&point, Mode::Radial)?,
                ))
            })();
            match result {
                Ok((fa, fr)) => StabilityRecord {
                    coords: (x, y),
                    trace_a: fa.trace,
                    trace_r: fr.trace,
                    stable_a: fa.stable,
                    stable_r: fr.stable,
                    marginal_a: fa.marginal,
                    marginal_r: fr.marginal,
                    nu_a: fa.nu,
                    nu_r: fr.nu,
                    diagnostic: None,
                },
                Err(e) => StabilityRecord {
                    coords: (x, y),
                    trace_a: f64::NAN,
                    trace_r: f64::NAN,
                    stable_a: false,
                    stable_r: false,
                    marginal_a: false,
                    marginal_r: false,
                    nu_a: f64::NAN,
                    nu_r: f64::NAN,
                    diagnostic: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Quasienergy ladder of a stable mode: `eps_n = 2 (k + n) hbar nu`
/// reduced modulo `hbar Omega`, for `n = 0 .. n_levels-1`, with `k` the
/// mode's Bargmann index and `nu` the principal Floquet exponent.
pub fn quasienergy_spectrum(cfg: &TrapConfig, mode: Mode, n_levels: usize) -> Result<Vec<f64>> {
    let info = mode_floquet(cfg, mode)?;
    if !info.stable {
        return Err(Error::UnstableMode {
            trace_abs: info.trace.abs(),
        });
    }
    let k = match mode {
        Mode::Axial => cfg.axial_sector.k(),
        Mode::Radial => (f64::from(cfg.l) + 1.0) / 2.0,
    };
    let quantum = cfg.hbar * cfg.omega_rf;
    Ok((0..n_levels)
        .map(|n| (2.0 * (k + n as f64) * cfg.hbar * info.nu).rem_euclid(quantum))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::husimi::{evaluate, position_sq_expectation};
    use crate::trap::{mathieu_parameters, spring_constants, AxialSector};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cfg_static(omega_a_ref: f64, omega_r_ref: f64) -> TrapConfig {
        // K_a = 1, K_r = 0.5 at M = 1 (b0 = 2, u0 = -0.75, c_quad = -1/3).
        TrapConfig {
            charge: 1.0,
            mass: 1.0,
            b0: 2.0,
            u0: -0.75,
            v0: 0.0,
            omega_rf: 10.0,
            r0: 1.0,
            z0: 1.0,
            c_oct: 0.0,
            c_hex: 0.0,
            omega_a_ref,
            omega_r_ref,
            l: 0,
            m_a: 0,
            m_r: 0,
            axial_sector: AxialSector::Even,
            drive_mode: DriveMode::Static,
            hbar: 1.0,
        }
    }

    fn cfg_driven(a_z: f64, q_z: f64) -> TrapConfig {
        let mut cfg = cfg_static(0.7, 0.9);
        cfg.drive_mode = DriveMode::TimeDependent;
        cfg.b0 = 1.3;
        cfg.omega_rf = 1.0;
        let (u0, v0) = voltages_for_mathieu(&cfg, a_z, q_z);
        cfg.u0 = u0;
        cfg.v0 = v0;
        cfg
    }

    #[test]
    fn matched_origin_is_a_fixed_point() {
        let cfg = cfg_static(1.0, 0.5f64.sqrt());
        let s0 = cfg
            .product_state(DiskPoint::origin(), DiskPoint::origin())
            .unwrap();
        let traj = integrate(&cfg, &s0, (0.0, 40.0), 1e-10).unwrap();
        assert!(traj.max_abs_z() <= 1e-12);
        assert!(traj.relative_energy_drift() <= 1e-12);
    }

    #[test]
    fn static_energy_is_conserved() {
        let cfg = cfg_static(1.0, 1.3);
        let s0 = cfg
            .product_state(
                DiskPoint::from_re_im(0.3, 0.1).unwrap(),
                DiskPoint::from_re_im(-0.2, 0.25).unwrap(),
            )
            .unwrap();
        let period = std::f64::consts::TAU; // K_a/M = 1
        let traj = integrate(&cfg, &s0, (0.0, 50.0 * period), 1e-10).unwrap();
        assert!(
            traj.relative_energy_drift() <= 1e-10,
            "drift {:e}",
            traj.relative_energy_drift()
        );
        assert!(traj.max_abs_z() < 1.0);
    }

    /// Crossing-count frequency fit of a periodic signal.
    fn fitted_angular_frequency(times: &[f64], signal: &[f64]) -> f64 {
        let mean = signal.iter().sum::<f64>() / signal.len() as f64;
        let mut crossings = Vec::new();
        for i in 1..signal.len() {
            let (a, b) = (signal[i - 1] - mean, signal[i] - mean);
            if a.signum() != b.signum() && a != 0.0 {
                crossings.push(times[i - 1] + (times[i] - times[i - 1]) * a / (a - b));
            }
        }
        assert!(crossings.len() >= 10, "too few crossings");
        let n = crossings.len();
        std::f64::consts::PI * (n - 1) as f64 / (crossings[n - 1] - crossings[0])
    }

    #[test]
    fn squared_position_oscillates_at_twice_the_mode_frequency() {
        // mismatched reference: the disk point moves, and <z^2>(t)
        // oscillates at 2 sqrt(K_a / M).
        let cfg = cfg_static(1.7, 1.1);
        let s0 = cfg
            .product_state(
                DiskPoint::from_re_im(0.25, -0.1).unwrap(),
                DiskPoint::origin(),
            )
            .unwrap();
        let omega = (spring_constants(&cfg, 0.0).k_a / cfg.mass).sqrt();
        let horizon = 30.0 * std::f64::consts::TAU / omega;
        let traj = integrate_sampled(&cfg, &s0, (0.0, horizon), 1e-10, 6000).unwrap();
        let zsq: Vec<f64> = traj
            .states
            .iter()
            .map(|s| position_sq_expectation(&cfg, s, Mode::Axial).unwrap())
            .collect();
        let fitted = fitted_angular_frequency(&traj.times, &zsq);
        assert_relative_eq!(fitted, 2.0 * omega, max_relative = 1e-4);
    }

    #[test]
    fn unstable_mode_escapes_loudly() {
        // axial defocusing: the trajectory must abort at the guard or on
        // step underflow rather than silently leaving the disk.
        let mut cfg = cfg_static(1.0, 1.0);
        cfg.u0 = 0.75; // K_a = -1
        cfg.b0 = 3.0;
        let s0 = cfg
            .product_state(
                DiskPoint::from_re_im(0.1, 0.0).unwrap(),
                DiskPoint::origin(),
            )
            .unwrap();
        let err = integrate(&cfg, &s0, (0.0, 60.0), 1e-10).unwrap_err();
        assert!(matches!(
            err,
            Error::BoundaryProximity { .. } | Error::StepUnderflow { .. }
        ));
    }

    #[test]
    fn monodromy_static_periodic_limit() {
        // V0 = 0 under the periodic drive: rotation by the mode frequency,
        // trace 2 cos(omega T), unit determinant.
        let mut cfg = cfg_driven(0.0, 0.0);
        let (u0, _) = voltages_for_mathieu(&cfg, -0.08, 0.0); // K_a = 0.02 Omega^2-ish
        cfg.u0 = u0;
        cfg.v0 = 0.0;
        let k_a = spring_constants(&cfg, 0.0).k_a;
        assert!(k_a > 0.0);
        let omega = (k_a / cfg.mass).sqrt();
        let m = linearized_monodromy(&cfg, Mode::Axial).unwrap();
        assert_relative_eq!(m.trace(), 2.0 * (omega * cfg.rf_period()).cos(), max_relative = 1e-9);
        assert_relative_eq!(m.determinant(), 1.0, max_relative = 1e-10);
        // exact rotation matrix once the reference is matched.
        let mut matched = cfg.clone();
        matched.omega_a_ref = omega;
        let m = linearized_monodromy(&matched, Mode::Axial).unwrap();
        let th = omega * matched.rf_period();
        assert_abs_diff_eq!(m[(0, 0)], th.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(m[(0, 1)], th.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(m[(1, 0)], -th.sin(), epsilon = 1e-9);
    }

    /// Newton oracle: fixed-step RK4 of M x'' = -K(t) x over one period,
    /// conjugated into the engine's quadrature coordinates.
    fn newton_monodromy(cfg: &TrapConfig, mode: Mode) -> Matrix2<f64> {
        let n_steps = 40_000usize;
        let period = cfg.rf_period();
        let h = period / n_steps as f64;
        let spring = |t: f64| match mode {
            Mode::Axial => spring_constants(cfg, t).k_a,
            Mode::Radial => spring_constants(cfg, t).k_r,
        };
        let deriv = |t: f64, y: [f64; 4]| {
            let km = spring(t) / cfg.mass;
            [y[1], -km * y[0], y[3], -km * y[2]]
        };
        let mut y = [1.0, 0.0, 0.0, 1.0];
        for i in 0..n_steps {
            let t = i as f64 * h;
            let k1 = deriv(t, y);
            let add = |y: [f64; 4], k: [f64; 4], f: f64| {
                [y[0] + f * k[0], y[1] + f * k[1], y[2] + f * k[2], y[3] + f * k[3]]
            };
            let k2 = deriv(t + 0.5 * h, add(y, k1, 0.5 * h));
            let k3 = deriv(t + 0.5 * h, add(y, k2, 0.5 * h));
            let k4 = deriv(t + h, add(y, k3, h));
            for j in 0..4 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        let psi = Matrix2::new(y[0], y[2], y[1], y[3]);
        let omega_ref = match mode {
            Mode::Axial => cfg.omega_a_ref,
            Mode::Radial => cfg.omega_r_ref,
        };
        // X = sqrt(M omega/hbar) x, P = sqrt(M/(hbar omega)) v.
        let alpha = (cfg.mass * omega_ref / cfg.hbar).sqrt();
        let delta = (cfg.mass / (cfg.hbar * omega_ref)).sqrt();
        let d = Matrix2::new(alpha, 0.0, 0.0, delta);
        let d_inv = Matrix2::new(1.0 / alpha, 0.0, 0.0, 1.0 / delta);
        d * psi * d_inv
    }

    #[test]
    fn monodromy_matches_newton_oracle() {
        for (a_z, q_z) in [(0.0, 0.3), (0.02, 0.4), (-0.01, 0.25)] {
            let cfg = cfg_driven(a_z, q_z);
            for mode in [Mode::Axial, Mode::Radial] {
                let engine = linearized_monodromy(&cfg, mode).unwrap();
                let oracle = newton_monodromy(&cfg, mode);
                for i in 0..2 {
                    for j in 0..2 {
                        assert_abs_diff_eq!(engine[(i, j)], oracle[(i, j)], epsilon = 1e-6);
                    }
                }
                assert_relative_eq!(engine.determinant(), 1.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn mathieu_parameters_roundtrip_through_scan_config() {
        let cfg = cfg_driven(0.1, 0.5);
        let p = mathieu_parameters(&cfg).unwrap();
        assert_relative_eq!(p.a_z, 0.1, max_relative = 1e-12);
        assert_relative_eq!(p.q_z, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn scan_dc_column_stability_and_rf_sign_symmetry() {
        let template = cfg_driven(0.0, 0.0);
        let grid = ScanGrid {
            kind: ScanKind::MathieuAQ,
            x_min: -0.2,
            x_max: 0.2,
            nx: 9,
            y_min: 0.0,
            y_max: 0.0,
            ny: 1,
        };
        for rec in stability_scan(&template, &grid) {
            let a_z = rec.coords.0;
            if a_z > 1e-12 {
                assert!(rec.stable_a, "a_z = {a_z} should be stable");
            } else if a_z < -1e-12 {
                assert!(!rec.stable_a, "a_z = {a_z} should be unstable");
            } else {
                assert!(rec.marginal_a);
            }
        }
        // V0 -> -V0 is a half-period shift of the drive: identical records.
        let grid_pos = ScanGrid {
            kind: ScanKind::MathieuAQ,
            x_min: 0.05,
            x_max: 0.05,
            nx: 1,
            y_min: 0.1,
            y_max: 0.6,
            ny: 6,
        };
        let grid_neg = ScanGrid {
            y_min: -0.1,
            y_max: -0.6,
            ..grid_pos
        };
        let pos = stability_scan(&template, &grid_pos);
        let neg = stability_scan(&template, &grid_neg);
        for (p, n) in pos.iter().zip(neg.iter()) {
            assert_eq!(p.stable_a, n.stable_a);
            assert_eq!(p.stable_r, n.stable_r);
            assert_relative_eq!(p.trace_a, n.trace_a, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn quasienergy_static_limit_interleaves_parity_sectors() {
        // V0 = 0, omega chosen with Omega > 2 omega so the principal branch
        // is the physical frequency; the 1/4 and 3/4 ladders interleave
        // into spacing hbar omega.
        let mut cfg = cfg_driven(0.0, 0.0);
        cfg.v0 = 0.0;
        let (u0, _) = voltages_for_mathieu(&cfg, 0.04, 0.0);
        cfg.u0 = u0;
        let omega = (spring_constants(&cfg, 0.0).k_a / cfg.mass).sqrt();
        assert!(cfg.omega_rf > 2.0 * omega);
        let even = quasienergy_spectrum(&cfg, Mode::Axial, 3).unwrap();
        let mut odd_cfg = cfg.clone();
        odd_cfg.axial_sector = AxialSector::Odd;
        let odd = quasienergy_spectrum(&odd_cfg, Mode::Axial, 3).unwrap();
        for (n, e) in even.iter().enumerate() {
            assert_relative_eq!(*e, 2.0 * (0.25 + n as f64) * omega, max_relative = 1e-8);
        }
        let mut all: Vec<f64> = even.iter().chain(odd.iter()).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in all.windows(2) {
            assert_relative_eq!(w[1] - w[0], omega, max_relative = 1e-7);
        }
    }

    #[test]
    fn quasienergy_refuses_unstable_mode() {
        let cfg = cfg_driven(-0.3, 0.0);
        match quasienergy_spectrum(&cfg, Mode::Axial, 4) {
            Err(Error::UnstableMode { trace_abs }) => assert!(trace_abs > 2.0),
            other => panic!("expected UnstableMode, got {other:?}"),
        }
    }

    #[test]
    fn floquet_exponent_is_reference_gauge_invariant() {
        let cfg = cfg_driven(0.01, 0.3);
        let f1 = mode_floquet(&cfg, Mode::Axial).unwrap();
        let mut doubled = cfg.clone();
        doubled.omega_a_ref *= 2.0;
        let f2 = mode_floquet(&doubled, Mode::Axial).unwrap();
        assert_relative_eq!(f1.nu, f2.nu, max_relative = 1e-9);
        assert_relative_eq!(f1.trace, f2.trace, max_relative = 1e-9);
    }

    #[test]
    fn gauge_change_preserves_physical_observables() {
        // same physical initial state expressed in two reference gauges:
        // the <z^2>(t) curves coincide.
        let cfg = cfg_driven(0.02, 0.3);
        let z0 = DiskPoint::from_re_im(0.2, 0.15).unwrap();
        let s0 = cfg.product_state(z0, DiskPoint::origin()).unwrap();
        let horizon = 6.0 * cfg.rf_period();
        let t1 = integrate_sampled(&cfg, &s0, (0.0, horizon), 1e-10, 400).unwrap();

        let mut cfg2 = cfg.clone();
        cfg2.omega_a_ref *= 2.0;
        let z0b = disk::rescale_reference_frequency(z0, 2.0).unwrap();
        let s0b = cfg2.product_state(z0b, DiskPoint::origin()).unwrap();
        let t2 = integrate_sampled(&cfg2, &s0b, (0.0, horizon), 1e-10, 400).unwrap();

        for i in 0..t1.times.len() {
            let a = position_sq_expectation(&cfg, &t1.states[i], Mode::Axial).unwrap();
            let b = position_sq_expectation(&cfg2, &t2.states[i], Mode::Axial).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn trajectory_energy_matches_polynomial_evaluation() {
        let cfg = cfg_static(1.0, 1.0);
        let s0 = cfg
            .product_state(
                DiskPoint::from_re_im(0.2, 0.0).unwrap(),
                DiskPoint::from_re_im(0.0, 0.3).unwrap(),
            )
            .unwrap();
        let traj = integrate_sampled(&cfg, &s0, (0.0, 5.0), 1e-10, 50).unwrap();
        let h = assemble(&cfg, 0.0).unwrap();
        for (s, e) in traj.states.iter().zip(traj.energy.iter()) {
            assert_relative_eq!(evaluate(&h, s), *e, max_relative = 1e-12);
        }
    }
}
