//! Phase-space geometry: one open unit disk per mode, their product, the
//! hyperbolic Poisson bracket and the Hamiltonian vector field.
//!
//! A mode's coherent states are labelled by a point of the open unit
//! disk. The log of the unnormalized overlap induces the symplectic form,
//! whose inverse appears in the Poisson bracket
//! `{f, g} = (1 - z conj z)^2 / (2 i (k+m)) (f_z g_zbar - f_zbar g_z)`
//! and hence in the equation of motion
//! `dz/dt = (1 - z conj z)^2 / (2 i (k+m)) dH/dzbar`.
//! Energies here carry whatever unit the caller supplies; the flow formula
//! is the dimensionless one, so callers working in SI divide by hbar first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::su11::BargmannWeight;

/// Hard lower bound on the distance to the disk boundary. Construction
/// and integration both refuse to cross it.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// A point of the open unit disk, the coherent-state label of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    z: Complex64,
}

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() >= 1.0 - BOUNDARY_GUARD {
            return Err(Error::BoundaryProximity {
                which: "disk point construction",
                abs_z: z.norm(),
                t: None,
            });
        }
        Ok(Self { z })
    }

    pub fn from_re_im(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn origin() -> Self {
        Self {
            z: Complex64::new(0.0, 0.0),
        }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// One mode: disk point plus irrep label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub point: DiskPoint,
    pub weight: BargmannWeight,
}

/// Which of the two modes of the product phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Axial,
    Radial,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Axial => 0,
            Mode::Radial => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Axial => "axial",
            Mode::Radial => "radial",
        }
    }
}

/// Product coherent state of the axial and radial modes at fixed orbital
/// quantum number `l`. The radial Bargmann index is tied to `l` by
/// `k_r = (l+1)/2`; the axial one lives in the parity doublet {1/4, 3/4}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentProductState {
    axial: ModeState,
    radial: ModeState,
    l: u32,
}

impl CoherentProductState {
    pub fn new(axial: ModeState, radial: ModeState, l: u32) -> Result<Self> {
        let ka = axial.weight.k();
        if (ka - 0.25).abs() > 1e-12 && (ka - 0.75).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "axial Bargmann index must be 1/4 or 3/4, got {ka}"
            )));
        }
        let kr_expected = (f64::from(l) + 1.0) / 2.0;
        if (radial.weight.k() - kr_expected).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "radial Bargmann index {} inconsistent with l = {l} (expected {kr_expected})",
                radial.weight.k()
            )));
        }
        Ok(Self { axial, radial, l })
    }

    pub fn axial(&self) -> &ModeState {
        &self.axial
    }

    pub fn radial(&self) -> &ModeState {
        &self.radial
    }

    pub fn mode(&self, mode: Mode) -> &ModeState {
        match mode {
            Mode::Axial => &self.axial,
            Mode::Radial => &self.radial,
        }
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Same labels, new disk points.
    pub fn with_points(&self, z_a: DiskPoint, z_r: DiskPoint) -> Self {
        Self {
            axial: ModeState {
                point: z_a,
                weight: self.axial.weight,
            },
            radial: ModeState {
                point: z_r,
                weight: self.radial.weight,
            },
            l: self.l,
        }
    }
}

/// The real disk coordinates in which the trap energy is polynomial:
/// `xi = (1+z)(1+conj z)/(1 - z conj z)`, `eta = (1-z)(1-conj z)/(1 - z conj z)`.
/// Both are manifestly real and positive; `xi + eta >= 2` with equality
/// only at the origin.
pub fn xi_eta(p: DiskPoint) -> (f64, f64) {
    let z = p.z();
    let r2 = z.norm_sqr();
    let denom = 1.0 - r2;
    let xi = (1.0 + 2.0 * z.re + r2) / denom;
    let eta = (1.0 - 2.0 * z.re + r2) / denom;
    (xi, eta)
}

/// Second mixed derivative of the log-overlap of the holomorphic (m = 0)
/// coherent family, `d^2 ln N / dz dzbar` with `N = (1 - z conj z)^(-2k)`:
/// equals `2k / (1 - z conj z)^2`. This is the symplectic-structure
/// density whose inverse scales the Poisson bracket.
pub fn log_overlap_form(p: DiskPoint, w: BargmannWeight) -> Result<f64> {
    if w.m() != 0 {
        return Err(Error::Unsupported(
            "closed-form overlap is only available for the m = 0 family".into(),
        ));
    }
    let denom = 1.0 - p.z().norm_sqr();
    Ok(2.0 * w.k() / (denom * denom))
}

/// A scalar field on one disk, supplied with its Wirtinger derivatives.
pub trait DiskField {
    fn value(&self, z: Complex64) -> Complex64;
    fn d_z(&self, z: Complex64) -> Complex64;
    fn d_zbar(&self, z: Complex64) -> Complex64;
}

/// Field given by closures for the value and both analytic derivatives.
pub struct AnalyticField<V, D, Db>
where
    V: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
    Db: Fn(Complex64) -> Complex64,
{
    pub value: V,
    pub d_z: D,
    pub d_zbar: Db,
}

impl<V, D, Db> DiskField for AnalyticField<V, D, Db>
where
    V: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
    Db: Fn(Complex64) -> Complex64,
{
    fn value(&self, z: Complex64) -> Complex64 {
        (self.value)(z)
    }
    fn d_z(&self, z: Complex64) -> Complex64 {
        (self.d_z)(z)
    }
    fn d_zbar(&self, z: Complex64) -> Complex64 {
        (self.d_zbar)(z)
    }
}

/// Central-difference fallback for fields without analytic derivatives.
/// Testing aid only; integration always uses analytic gradients.
pub struct CentralDifferenceField<V: Fn(Complex64) -> Complex64> {
    pub value: V,
    pub step: f64,
}

impl<V: Fn(Complex64) -> Complex64> DiskField for CentralDifferenceField<V> {
    fn value(&self, z: Complex64) -> Complex64 {
        (self.value)(z)
    }
    fn d_z(&self, z: Complex64) -> Complex64 {
        let h = self.step;
        let fx = ((self.value)(z + h) - (self.value)(z - h)) / (2.0 * h);
        let fy = ((self.value)(z + Complex64::new(0.0, h)) - (self.value)(z - Complex64::new(0.0, h)))
            / (2.0 * h);
        (fx - Complex64::i() * fy) * 0.5
    }
    fn d_zbar(&self, z: Complex64) -> Complex64 {
        let h = self.step;
        let fx = ((self.value)(z + h) - (self.value)(z - h)) / (2.0 * h);
        let fy = ((self.value)(z + Complex64::new(0.0, h)) - (self.value)(z - Complex64::new(0.0, h)))
            / (2.0 * h);
        (fx + Complex64::i() * fy) * 0.5
    }
}

/// Raw (complex-valued) bracket; exposed for tests that use the complex
/// extensions of coordinate functions.
pub fn poisson_bracket_complex(
    f: &dyn DiskField,
    g: &dyn DiskField,
    p: DiskPoint,
    w: BargmannWeight,
) -> Complex64 {
    let z = p.z();
    let coeff = (1.0 - z.norm_sqr()).powi(2) / (Complex64::new(0.0, 2.0) * w.k_plus_m());
    coeff * (f.d_z(z) * g.d_zbar(z) - f.d_zbar(z) * g.d_z(z))
}

/// Poisson bracket of two real fields. The imaginary residue is an
/// assembly-error detector: for genuinely real fields it vanishes
/// identically, so anything above 1e-12 of the bracket scale aborts.
pub fn poisson_bracket(
    f: &dyn DiskField,
    g: &dyn DiskField,
    p: DiskPoint,
    w: BargmannWeight,
) -> f64 {
    let b = poisson_bracket_complex(f, g, p, w);
    let scale = b.norm().max(1.0);
    assert!(
        b.im.abs() <= 1e-12 * scale,
        "Poisson bracket of supposedly real fields has imaginary residue {:e}",
        b.im
    );
    b.re
}

/// `d xi / d zbar = (1+z)^2 / (1 - z conj z)^2`.
pub fn xi_d_zbar(z: Complex64) -> Complex64 {
    let d = 1.0 - z.norm_sqr();
    (1.0 + z) * (1.0 + z) / (d * d)
}

/// `d eta / d zbar = -(1-z)^2 / (1 - z conj z)^2`.
pub fn eta_d_zbar(z: Complex64) -> Complex64 {
    let d = 1.0 - z.norm_sqr();
    -(1.0 - z) * (1.0 - z) / (d * d)
}

/// Partial derivatives of an energy function with respect to one mode's
/// `(xi, eta)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiEtaPartials {
    pub d_xi: f64,
    pub d_eta: f64,
}

/// An energy function on the product phase space, polynomial in the
/// `(xi_j, eta_j)` coordinates, exposed through its partials. The time
/// argument lets driven coefficients enter.
pub trait PhaseSpaceEnergy {
    /// `[axial, radial]` partials at the given state and time.
    fn xi_eta_partials(&self, s: &CoherentProductState, t: f64) -> [XiEtaPartials; 2];
}

/// Wirtinger gradient `dH/dzbar` for each mode, by the chain rule through
/// the `(xi, eta)` maps.
pub fn wirtinger_gradients(
    h: &dyn PhaseSpaceEnergy,
    s: &CoherentProductState,
    t: f64,
) -> (Complex64, Complex64) {
    let parts = h.xi_eta_partials(s, t);
    let grad = |mode: &ModeState, p: &XiEtaPartials| {
        let z = mode.point.z();
        p.d_xi * xi_d_zbar(z) + p.d_eta * eta_d_zbar(z)
    };
    (
        grad(s.axial(), &parts[0]),
        grad(s.radial(), &parts[1]),
    )
}

/// Hamilton equation on the product of disks:
/// `dz_j/dt = (1 - z_j conj z_j)^2 / (2 i (k_j + m_j)) dH/dzbar_j`.
pub fn hamiltonian_vector_field(
    h: &dyn PhaseSpaceEnergy,
    s: &CoherentProductState,
    t: f64,
) -> (Complex64, Complex64) {
    let (ga, gr) = wirtinger_gradients(h, s, t);
    let rate = |mode: &ModeState, g: Complex64| {
        let z = mode.point.z();
        let coeff = (1.0 - z.norm_sqr()).powi(2)
            / (Complex64::new(0.0, 2.0) * mode.weight.k_plus_m());
        coeff * g
    };
    (rate(s.axial(), ga), rate(s.radial(), gr))
}

/// Rates of the `(xi, eta)` coordinates of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiEtaRates {
    pub xi_dot: f64,
    pub eta_dot: f64,
}

/// Transport `(dz/dt)` through the `(xi, eta)` maps and cross-check the
/// result against the direct phase-space form
/// `xi_dot = (2/(i(k+m))) (z - conj z)/(1 - z conj z) dH/deta` (and the
/// matching `eta_dot`). The two routes are algebraically identical; a
/// relative mismatch above 1e-9 means the gradient assembly is broken and
/// is returned as an error. The transported values are returned.
pub fn xi_eta_flow_check(
    h: &dyn PhaseSpaceEnergy,
    s: &CoherentProductState,
    t: f64,
) -> Result<[XiEtaRates; 2]> {
    let parts = h.xi_eta_partials(s, t);
    let (za_dot, zr_dot) = hamiltonian_vector_field(h, s, t);
    let mut out = [XiEtaRates {
        xi_dot: 0.0,
        eta_dot: 0.0,
    }; 2];
    for (i, (mode, zdot)) in [(s.axial(), za_dot), (s.radial(), zr_dot)]
        .into_iter()
        .enumerate()
    {
        let z = mode.point.z();
        // chain rule: xi is real, so d(xi)/dt = 2 Re[conj(d xi/d zbar) dz/dt].
        let chain = XiEtaRates {
            xi_dot: 2.0 * (xi_d_zbar(z).conj() * zdot).re,
            eta_dot: 2.0 * (eta_d_zbar(z).conj() * zdot).re,
        };
        // direct phase-space form, with (k+m) in place of the lowest-weight k.
        let pref = 4.0 * z.im / (mode.weight.k_plus_m() * (1.0 - z.norm_sqr()));
        let direct = XiEtaRates {
            xi_dot: pref * parts[i].d_eta,
            eta_dot: -pref * parts[i].d_xi,
        };
        let scale = chain
            .xi_dot
            .abs()
            .max(chain.eta_dot.abs())
            .max(direct.xi_dot.abs())
            .max(direct.eta_dot.abs())
            .max(1e-300);
        let mismatch = (chain.xi_dot - direct.xi_dot)
            .abs()
            .max((chain.eta_dot - direct.eta_dot).abs());
        if mismatch > 1e-9 * scale.max(1.0) {
            return Err(Error::ConsistencyFailure(format!(
                "xi/eta rates disagree between chain rule and direct form by {mismatch:e} (scale {scale:e})"
            )));
        }
        out[i] = chain;
    }
    Ok(out)
}

/// Re-express a disk point when the mode's reference frequency changes by
/// `ratio = omega_new / omega_old`, keeping the physical state fixed.
/// The second moments of position and momentum scale as `xi -> ratio xi`,
/// `eta -> eta / ratio`, while the cross moment (hence
/// `Im z / (1 - z conj z)`) is invariant; those three determine the new
/// point uniquely.
pub fn rescale_reference_frequency(p: DiskPoint, ratio: f64) -> Result<DiskPoint> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "frequency ratio must be positive and finite, got {ratio}"
        )));
    }
    let z = p.z();
    let (xi, eta) = xi_eta(p);
    let im_density = z.im / (1.0 - z.norm_sqr());
    let xi_new = ratio * xi;
    let eta_new = eta / ratio;
    let s = xi_new + eta_new;
    let r2 = (s - 2.0) / (s + 2.0);
    let re = (xi_new - eta_new) * (1.0 - r2) / 4.0;
    let im = im_density * (1.0 - r2);
    DiskPoint::from_re_im(re, im)
}
