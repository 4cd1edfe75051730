//! Assembly and evaluation of the classical energy function: the
//! coherent-state expectation of the trap Hamiltonian, polynomial in the
//! disk coordinates `(xi_j, eta_j)`.
//!
//! Operator dictionary. With the reference frequencies `omega_j` defining
//! the disk coordinates, the mode quadratures satisfy
//! `x^2 = (2 hbar / (M omega_a)) (K0a + K1a)` and
//! `p^2 / (2M) = hbar omega_a (K0a - K1a)` (likewise radially, where the
//! kinetic part also absorbs the centrifugal term). Taking expectations in
//! a product coherent state turns the quadrupole Hamiltonian into
//!
//! `H_cl = A_a eta_a + A_r eta_r + B_a xi_a + B_r xi_r + const`
//!
//! with `A_j = hbar omega_j (k_j + m_j)` and
//! `B_j = (hbar K_j(t) / (M omega_j)) (k_j + m_j)`; the octopole term adds
//! a quadratic polynomial in `(xi_a, xi_r)` through the moments `S_j`,
//! and an optional sextic term fills the cubic row.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::disk::{
    xi_eta, CoherentProductState, DiskPoint, Mode, PhaseSpaceEnergy, XiEtaPartials,
};
use crate::error::{Error, Result};
use crate::su11::{q_moment, s_moment};
use crate::trap::{drive, spring_constants, spring_profile, DriveMode, TrapConfig};

/// Scale relating the squared position of a mode to the first moment:
/// `<x_j^2> = position_sq_scale * S_1(z_j)` with the scale
/// `hbar / (M omega_j)`.
pub fn position_sq_scale(cfg: &TrapConfig, mode: Mode) -> f64 {
    let omega = match mode {
        Mode::Axial => cfg.omega_a_ref,
        Mode::Radial => cfg.omega_r_ref,
    };
    cfg.hbar / (cfg.mass * omega)
}

/// `<x^2>` (axial) or `<rho^2>` (radial) in the given product state.
pub fn position_sq_expectation(cfg: &TrapConfig, s: &CoherentProductState, mode: Mode) -> Result<f64> {
    let ms = s.mode(mode);
    Ok(position_sq_scale(cfg, mode) * s_moment(1, ms.point.z(), ms.weight)?)
}

/// Coherent expectation of the octopole polynomial
/// `<H4> = 8 la^2 S_2a - 24 la lr S_1a S_1r + 3 lr^2 S_2r` (m^4), with
/// `l_j = hbar/(M omega_j)` and product-state factorization of the cross
/// term.
pub fn expectation_h4(s: &CoherentProductState, cfg: &TrapConfig) -> Result<f64> {
    let la = position_sq_scale(cfg, Mode::Axial);
    let lr = position_sq_scale(cfg, Mode::Radial);
    let (za, wa) = (s.axial().point.z(), s.axial().weight);
    let (zr, wr) = (s.radial().point.z(), s.radial().weight);
    Ok(8.0 * la * la * s_moment(2, za, wa)?
        - 24.0 * la * lr * s_moment(1, za, wa)? * s_moment(1, zr, wr)?
        + 3.0 * lr * lr * s_moment(2, zr, wr)?)
}

/// Coherent expectation of the sextic polynomial
/// `<H6> = 16 la^3 S_3a - 120 la^2 lr S_2a S_1r + 90 la lr^2 S_1a S_2r - 5 lr^3 S_3r` (m^6).
pub fn expectation_h6(s: &CoherentProductState, cfg: &TrapConfig) -> Result<f64> {
    let la = position_sq_scale(cfg, Mode::Axial);
    let lr = position_sq_scale(cfg, Mode::Radial);
    let (za, wa) = (s.axial().point.z(), s.axial().weight);
    let (zr, wr) = (s.radial().point.z(), s.radial().weight);
    Ok(16.0 * la.powi(3) * s_moment(3, za, wa)?
        - 120.0 * la * la * lr * s_moment(2, za, wa)? * s_moment(1, zr, wr)?
        + 90.0 * la * lr * lr * s_moment(1, za, wa)? * s_moment(2, zr, wr)?
        - 5.0 * lr.powi(3) * s_moment(3, zr, wr)?)
}

/// One full set of polynomial coefficients (J). `c20` multiplies `xi_r^2`,
/// `c11` multiplies `xi_r xi_a`, `c02` multiplies `xi_a^2`; the cubic row
/// follows the same index convention with `d30` on `xi_r^3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoefficientSet {
    pub a_a: f64,
    pub a_r: f64,
    pub b_a: f64,
    pub b_r: f64,
    pub c20: f64,
    pub c11: f64,
    pub c02: f64,
    pub d30: f64,
    pub d21: f64,
    pub d12: f64,
    pub d03: f64,
    pub const_term: f64,
}

impl CoefficientSet {
    fn add_scaled(&self, other: &CoefficientSet, factor: f64) -> CoefficientSet {
        CoefficientSet {
            a_a: self.a_a + factor * other.a_a,
            a_r: self.a_r + factor * other.a_r,
            b_a: self.b_a + factor * other.b_a,
            b_r: self.b_r + factor * other.b_r,
            c20: self.c20 + factor * other.c20,
            c11: self.c11 + factor * other.c11,
            c02: self.c02 + factor * other.c02,
            d30: self.d30 + factor * other.d30,
            d21: self.d21 + factor * other.d21,
            d12: self.d12 + factor * other.d12,
            d03: self.d03 + factor * other.d03,
            const_term: self.const_term + factor * other.const_term,
        }
    }

    pub fn evaluate_at(&self, xi_a: f64, eta_a: f64, xi_r: f64, eta_r: f64) -> f64 {
        self.a_r * eta_r
            + self.a_a * eta_a
            + self.b_r * xi_r
            + self.b_a * xi_a
            + self.c20 * xi_r * xi_r
            + self.c11 * xi_r * xi_a
            + self.c02 * xi_a * xi_a
            + self.d30 * xi_r.powi(3)
            + self.d21 * xi_r * xi_r * xi_a
            + self.d12 * xi_r * xi_a * xi_a
            + self.d03 * xi_a.powi(3)
            + self.const_term
    }
}

/// The energy polynomial at a fixed time, together with its affine
/// decomposition in the drive: every coefficient satisfies
/// `current = static_part + cos(Omega t) * cosine_part` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiCoefficients {
    pub t: f64,
    pub omega_rf: f64,
    pub current: CoefficientSet,
    pub static_part: CoefficientSet,
    pub cosine_part: CoefficientSet,
}

impl HusimiCoefficients {
    /// Coefficients at another time, using the stored affine profile.
    pub fn at_time(&self, t: f64) -> CoefficientSet {
        if self.cosine_part == CoefficientSet::default() {
            self.static_part
        } else {
            self.static_part
                .add_scaled(&self.cosine_part, (self.omega_rf * t).cos())
        }
    }
}

/// Coefficients produced by given spring constants and drive voltage.
/// `with_constants` controls whether the drive-independent terms (kinetic
/// rows and the constant shift) are included; the cosine part of the
/// profile must not carry them.
fn coefficient_set(
    cfg: &TrapConfig,
    k_a: f64,
    k_r: f64,
    volt: f64,
    with_constants: bool,
) -> Result<CoefficientSet> {
    let wa = cfg.axial_weight();
    let wr = cfg.radial_weight()?;
    let (na, nr) = (wa.k_plus_m(), wr.k_plus_m());
    let la = position_sq_scale(cfg, Mode::Axial);
    let lr = position_sq_scale(cfg, Mode::Radial);
    let hbar = cfg.hbar;

    let mut set = CoefficientSet::default();
    if with_constants {
        set.a_a = hbar * cfg.omega_a_ref * na;
        set.a_r = hbar * cfg.omega_r_ref * nr;
        set.const_term = -0.5 * cfg.omega_c() * hbar * f64::from(cfg.l);
    }
    set.b_a = hbar * k_a * na / (cfg.mass * cfg.omega_a_ref);
    set.b_r = hbar * k_r * nr / (cfg.mass * cfg.omega_r_ref);

    if cfg.c_oct != 0.0 {
        let g4 = cfg.charge * volt * cfg.c_oct;
        set.c02 = g4 * 8.0 * la * la * q_moment(2, wa)?;
        set.c11 = g4 * (-24.0) * la * lr * q_moment(1, wa)? * q_moment(1, wr)?;
        set.c20 = g4 * 3.0 * lr * lr * q_moment(2, wr)?;
    }
    if cfg.c_hex != 0.0 {
        let g6 = cfg.charge * volt * cfg.c_hex;
        set.d03 = g6 * 16.0 * la.powi(3) * q_moment(3, wa)?;
        set.d12 = g6 * (-120.0) * la * la * lr * q_moment(2, wa)? * q_moment(1, wr)?;
        set.d21 = g6 * 90.0 * la * lr * lr * q_moment(1, wa)? * q_moment(2, wr)?;
        set.d30 = g6 * (-5.0) * lr.powi(3) * q_moment(3, wr)?;
    }
    Ok(set)
}

/// Assemble the energy polynomial for the configuration at time `t`.
pub fn assemble(cfg: &TrapConfig, t: f64) -> Result<HusimiCoefficients> {
    let (static_part, cosine_part) = match cfg.drive_mode {
        DriveMode::TimeDependent => {
            let p = spring_profile(cfg);
            (
                coefficient_set(cfg, p.k_a_dc, p.k_r_dc, cfg.u0, true)?,
                coefficient_set(cfg, p.k_a_ac, p.k_r_ac, cfg.v0, false)?,
            )
        }
        DriveMode::Static | DriveMode::Pseudopotential => {
            let s = spring_constants(cfg, t);
            (
                coefficient_set(cfg, s.k_a, s.k_r, drive(cfg, t), true)?,
                CoefficientSet::default(),
            )
        }
    };
    let mut h = HusimiCoefficients {
        t,
        omega_rf: cfg.omega_rf,
        current: static_part,
        static_part,
        cosine_part,
    };
    h.current = h.at_time(t);
    Ok(h)
}

/// `H_cl` at the given product state (J).
pub fn evaluate(h: &HusimiCoefficients, s: &CoherentProductState) -> f64 {
    let (xi_a, eta_a) = xi_eta(s.axial().point);
    let (xi_r, eta_r) = xi_eta(s.radial().point);
    h.current.evaluate_at(xi_a, eta_a, xi_r, eta_r)
}

impl PhaseSpaceEnergy for CoefficientSet {
    fn xi_eta_partials(&self, s: &CoherentProductState, _t: f64) -> [XiEtaPartials; 2] {
        let (xi_a, _) = xi_eta(s.axial().point);
        let (xi_r, _) = xi_eta(s.radial().point);
        [
            XiEtaPartials {
                d_xi: self.b_a
                    + self.c11 * xi_r
                    + 2.0 * self.c02 * xi_a
                    + self.d21 * xi_r * xi_r
                    + 2.0 * self.d12 * xi_r * xi_a
                    + 3.0 * self.d03 * xi_a * xi_a,
                d_eta: self.a_a,
            },
            XiEtaPartials {
                d_xi: self.b_r
                    + 2.0 * self.c20 * xi_r
                    + self.c11 * xi_a
                    + 3.0 * self.d30 * xi_r * xi_r
                    + 2.0 * self.d21 * xi_r * xi_a
                    + self.d12 * xi_a * xi_a,
                d_eta: self.a_r,
            },
        ]
    }
}

impl PhaseSpaceEnergy for HusimiCoefficients {
    /// Time-aware partials: coefficients are re-evaluated from the affine
    /// profile at the requested time.
    fn xi_eta_partials(&self, s: &CoherentProductState, t: f64) -> [XiEtaPartials; 2] {
        self.at_time(t).xi_eta_partials(s, t)
    }
}

/// Analytic Wirtinger gradient `(dH/dzbar_a, dH/dzbar_r)` of the frozen
/// polynomial.
pub fn gradient(h: &HusimiCoefficients, s: &CoherentProductState) -> (Complex64, Complex64) {
    crate::disk::wirtinger_gradients(&h.current, s, h.t)
}

/// Nature of a critical point, from the eigenvalue signs of the real
/// 4x4 Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Minimum => "minimum",
            Classification::Maximum => "maximum",
            Classification::Saddle => "saddle",
            Classification::Degenerate => "degenerate",
        }
    }
}

/// A critical point of the frozen energy function.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: CoherentProductState,
    pub classification: Classification,
    pub energy: f64,
    pub hessian_eigenvalues: [f64; 4],
    pub gradient_norm: f64,
}

/// Result of the multistart search: converged points plus per-seed
/// diagnostics for the failures.
#[derive(Debug, Clone, Default)]
pub struct EquilibriaReport {
    pub equilibria: Vec<Equilibrium>,
    pub diagnostics: Vec<String>,
}

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_STEP_TOL: f64 = 1e-12;
const GRAD_TOL_SCALED: f64 = 1e-10;
const SEED_VALUES: [f64; 7] = [0.0, 0.2, -0.2, 0.5, -0.5, 0.8, -0.8];

fn real_gradient(set: &CoefficientSet, s: &CoherentProductState) -> Vector4<f64> {
    let (ga, gr) = crate::disk::wirtinger_gradients(set, s, 0.0);
    // dH/dx = 2 Re dH/dzbar, dH/dy = 2 Im dH/dzbar for real H.
    Vector4::new(2.0 * ga.re, 2.0 * ga.im, 2.0 * gr.re, 2.0 * gr.im)
}

fn state_from_vec(template: &CoherentProductState, x: &Vector4<f64>) -> Result<CoherentProductState> {
    Ok(template.with_points(
        DiskPoint::from_re_im(x[0], x[1])?,
        DiskPoint::from_re_im(x[2], x[3])?,
    ))
}

/// Central-difference Jacobian of the real gradient (the Hessian of H).
fn hessian_fd(
    set: &CoefficientSet,
    template: &CoherentProductState,
    x: &Vector4<f64>,
) -> Result<Matrix4<f64>> {
    let h = 1e-5;
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let mut xp = *x;
        let mut xm = *x;
        xp[col] += h;
        xm[col] -= h;
        let gp = real_gradient(set, &state_from_vec(template, &xp)?);
        let gm = real_gradient(set, &state_from_vec(template, &xm)?);
        j.set_column(col, &((gp - gm) / (2.0 * h)));
    }
    Ok(j)
}

fn classify(hess: &Matrix4<f64>) -> (Classification, [f64; 4]) {
    if hess.iter().any(|v| !v.is_finite()) {
        return (Classification::Degenerate, [f64::NAN; 4]);
    }
    let sym = (hess + hess.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut vals = [0.0; 4];
    for (i, v) in eig.eigenvalues.iter().enumerate() {
        vals[i] = *v;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-7 * scale.max(1e-300);
    if vals.iter().any(|v| v.abs() <= tol) {
        (Classification::Degenerate, vals)
    } else if vals.iter().all(|v| *v > 0.0) {
        (Classification::Minimum, vals)
    } else if vals.iter().all(|v| *v < 0.0) {
        (Classification::Maximum, vals)
    } else {
        (Classification::Saddle, vals)
    }
}

/// Critical points of the frozen energy function over both disks.
///
/// Damped Newton iteration on the real gradient from a deterministic grid
/// of real-axis seeds. Requires a drive mode with time-independent
/// coefficients. The damping is on the gradient norm so that saddle
/// points remain reachable.
pub fn find_equilibria(cfg: &TrapConfig) -> Result<EquilibriaReport> {
    if matches!(cfg.drive_mode, DriveMode::TimeDependent) {
        return Err(Error::InvalidArgument(
            "equilibria are defined for static or pseudopotential drive modes".into(),
        ));
    }
    cfg.validate()?;
    let h = assemble(cfg, 0.0)?;
    let set = h.current;
    let template = cfg.product_state(DiskPoint::origin(), DiskPoint::origin())?;
    let scale = set.a_a.abs()
        + set.a_r.abs()
        + set.b_a.abs()
        + set.b_r.abs()
        + set.c20.abs()
        + set.c11.abs()
        + set.c02.abs()
        + set.d30.abs()
        + set.d21.abs()
        + set.d12.abs()
        + set.d03.abs();
    let grad_tol = GRAD_TOL_SCALED * scale.max(1e-300);

    let mut report = EquilibriaReport::default();
    for &xa in &SEED_VALUES {
        for &xr in &SEED_VALUES {
            let mut x = Vector4::new(xa, 0.0, xr, 0.0);
            let mut converged = false;
            let mut failure = String::new();
            for _ in 0..NEWTON_MAX_ITER {
                let s = match state_from_vec(&template, &x) {
                    Ok(s) => s,
                    Err(e) => {
                        failure = format!("iterate left the disk: {e}");
                        break;
                    }
                };
                let g = real_gradient(&set, &s);
                if g.norm() <= grad_tol {
                    converged = true;
                    break;
                }
                let jac = match hessian_fd(&set, &template, &x) {
                    Ok(j) => j,
                    Err(e) => {
                        failure = format!("Hessian probe left the disk: {e}");
                        break;
                    }
                };
                // Newton direction; near-singular Hessians fall back to a
                // Levenberg-regularized least-squares direction, which is
                // always a descent direction for |g|^2.
                let mut step = jac.lu().solve(&(-g));
                if step.is_none() || step.as_ref().is_some_and(|s| !s.norm().is_finite()) {
                    let scale = jac.norm().max(1e-300);
                    let jj = jac.transpose() * jac;
                    let rhs_v = jac.transpose() * (-g);
                    for exp in [-8, -5, -2] {
                        let mu = scale * scale * 10f64.powi(exp);
                        if let Some(s) = (jj + Matrix4::identity() * mu).lu().solve(&rhs_v) {
                            if s.norm().is_finite() {
                                step = Some(s);
                                break;
                            }
                        }
                    }
                }
                let Some(mut step) = step else {
                    failure = "singular Hessian in Newton step".into();
                    break;
                };
                // keep trial moves commensurate with the disk.
                if step.norm() > 0.5 {
                    step *= 0.5 / step.norm();
                }
                // halve until the gradient norm decreases and the iterate
                // stays well inside the disk.
                let mut lambda: f64 = 1.0;
                let mut accepted = false;
                while lambda >= 2f64.powi(-24) {
                    let trial = x + step * lambda;
                    let in_disk = trial.xy().norm() < 0.95
                        && Vector4::new(trial[2], trial[3], 0.0, 0.0).xy().norm() < 0.95;
                    if in_disk {
                        if let Ok(ts) = state_from_vec(&template, &trial) {
                            if real_gradient(&set, &ts).norm() < g.norm() {
                                x = trial;
                                accepted = true;
                                break;
                            }
                        }
                    }
                    lambda *= 0.5;
                }
                if !accepted {
                    failure = "damping exhausted without gradient decrease".into();
                    break;
                }
                if (step * lambda).norm() <= NEWTON_STEP_TOL * (1.0 + x.norm()) {
                    let s = state_from_vec(&template, &x);
                    if let Ok(s) = s {
                        converged = real_gradient(&set, &s).norm() <= grad_tol;
                    }
                    if !converged {
                        failure = "step collapsed before the gradient tolerance".into();
                    }
                    break;
                }
            }
            if !converged {
                if failure.is_empty() {
                    failure = "no convergence within the iteration budget".into();
                }
                report
                    .diagnostics
                    .push(format!("seed ({xa}, {xr}): {failure}"));
                continue;
            }
            let duplicate = report.equilibria.iter().any(|e| {
                let za = e.state.axial().point.z();
                let zr = e.state.radial().point.z();
                (za - Complex64::new(x[0], x[1])).norm() + (zr - Complex64::new(x[2], x[3])).norm()
                    < 1e-8
            });
            if duplicate {
                continue;
            }
            let s = state_from_vec(&template, &x)?;
            let hess = hessian_fd(&set, &template, &x)?;
            let (classification, eigs) = classify(&hess);
            report.equilibria.push(Equilibrium {
                state: s,
                classification,
                energy: evaluate(&h, &s),
                hessian_eigenvalues: eigs,
                gradient_norm: real_gradient(&set, &s).norm(),
            });
        }
    }
    Ok(report)
}
