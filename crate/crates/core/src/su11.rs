//! Discrete-series su(1,1) algebra: exact ladder matrix elements,
//! closed-form coherent-state expectations, moment polynomials, and a
//! truncated Fock-space numeric backend that serves as the independent
//! oracle for every closed form in the crate.
//!
//! Conventions. The three generators obey
//! `[K0, K±] = ±K±`, `[K-, K+] = 2 K0`, with `K± = K1 ± i K2`. A positive
//! discrete-series irrep is labelled by the Bargmann index `k > 0`; the
//! basis vector `|m, k>` satisfies `K0 |m,k> = (k+m) |m,k>`. Coherent
//! states are `U(z) |m,k>` with the disentangled displacement
//! `U(z) = exp(z K+) exp(beta K0) exp(-conj(z) K-)`, `beta = ln(1 - z conj(z))`,
//! defined for `|z| < 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// Norm allowed in the top five components of an oracle state before the
/// truncation is declared insufficient.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-12;

/// Irreducible-representation label of one mode: Bargmann index `k` and
/// excitation number `m` of the weight vector the coherent family is
/// built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargmannWeight {
    k: f64,
    m: u32,
}

impl BargmannWeight {
    pub fn new(k: f64, m: u32) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Bargmann index must be positive and finite, got {k}"
            )));
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `k + m`, the `K0` eigenvalue of the weight vector. This is the
    /// constant that scales every coherent expectation of the generators.
    pub fn k_plus_m(&self) -> f64 {
        self.k + f64::from(self.m)
    }
}

/// Exact matrix elements of the ladder action on `|m, k>`:
/// `K+ |m,k> = raise_amp |m+1,k>`, `K- |m,k> = lower_amp |m-1,k>`,
/// `K0 |m,k> = diag |m,k>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderElements {
    pub raise_amp: f64,
    pub lower_amp: f64,
    pub diag: f64,
}

pub fn ladder_elements(w: BargmannWeight) -> LadderElements {
    let k = w.k();
    let m = f64::from(w.m());
    LadderElements {
        raise_amp: ((m + 1.0) * (m + 2.0 * k)).sqrt(),
        lower_amp: (m * (m + 2.0 * k - 1.0)).sqrt(),
        diag: k + m,
    }
}

/// Casimir eigenvalue `k (k - 1)` of the irrep labelled by `w`.
pub fn casimir_eigenvalue(w: BargmannWeight) -> f64 {
    w.k() * (w.k() - 1.0)
}

/// Sign label of the combinations `K0 + eps K1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Epsilon {
    Plus,
    Minus,
}

impl Epsilon {
    pub fn sign(self) -> f64 {
        match self {
            Epsilon::Plus => 1.0,
            Epsilon::Minus => -1.0,
        }
    }
}

/// Dense matrices of the generators on the first `cutoff` basis vectors.
///
/// `K+` is strictly lower triangular and `K-` strictly upper triangular,
/// so their exponentials are finite polynomials at any cutoff; truncation
/// error enters only through components pushed past row `cutoff - 1`.
#[derive(Debug, Clone)]
pub struct TruncatedRep {
    pub weight: BargmannWeight,
    pub cutoff: usize,
    pub k0: DMatrix<Complex64>,
    pub kplus: DMatrix<Complex64>,
    pub kminus: DMatrix<Complex64>,
}

impl TruncatedRep {
    /// `K1 = (K+ + K-) / 2`.
    pub fn k1(&self) -> DMatrix<Complex64> {
        (&self.kplus + &self.kminus).scale(0.5)
    }

    /// `K2 = (K+ - K-) / (2i)`.
    pub fn k2(&self) -> DMatrix<Complex64> {
        (&self.kplus - &self.kminus) * Complex64::new(0.0, -0.5)
    }

    /// `K0 + eps K1`.
    pub fn omega(&self, eps: Epsilon) -> DMatrix<Complex64> {
        &self.k0 + self.k1().scale(eps.sign())
    }

    /// `<state| op |state>` for a unit-norm `state`.
    pub fn expectation(&self, op: &DMatrix<Complex64>, state: &DVector<Complex64>) -> Complex64 {
        state.dotc(&(op * state))
    }

    /// The `m`-th basis vector of the truncation.
    pub fn basis_vector(&self, m: usize) -> Result<DVector<Complex64>> {
        if m >= self.cutoff {
            return Err(Error::InvalidArgument(format!(
                "basis index {m} outside truncation of size {}",
                self.cutoff
            )));
        }
        let mut v = DVector::zeros(self.cutoff);
        v[m] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Build dense generator matrices for the irrep of `w` on a basis of size
/// `cutoff`.
pub fn build_truncated_rep(w: BargmannWeight, cutoff: usize) -> Result<TruncatedRep> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument(format!(
            "truncation cutoff must be at least 2, got {cutoff}"
        )));
    }
    let k = w.k();
    let mut k0 = DMatrix::zeros(cutoff, cutoff);
    let mut kplus = DMatrix::zeros(cutoff, cutoff);
    for m in 0..cutoff {
        let mf = m as f64;
        k0[(m, m)] = Complex64::new(k + mf, 0.0);
        if m + 1 < cutoff {
            kplus[(m + 1, m)] = Complex64::new(((mf + 1.0) * (mf + 2.0 * k)).sqrt(), 0.0);
        }
    }
    let kminus = kplus.adjoint();
    Ok(TruncatedRep {
        weight: w,
        cutoff,
        k0,
        kplus,
        kminus,
    })
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm_sqr() >= 1.0 {
        return Err(Error::OutOfDomain { z });
    }
    Ok(())
}

/// Apply `exp(c A)` to `v` where `A` is one of the nilpotent-at-truncation
/// ladder matrices. The series terminates after at most `dim` terms, so
/// the result is exact in the truncated space.
fn apply_exp_nilpotent(a: &DMatrix<Complex64>, c: Complex64, v: &DVector<Complex64>) -> DVector<Complex64> {
    let mut acc = v.clone();
    let mut term = v.clone();
    for j in 1..=a.nrows() {
        term = (a * &term) * (c / j as f64);
        if term.norm() == 0.0 {
            break;
        }
        acc += &term;
    }
    acc
}

/// Numerically evaluate the coherent vector `U(z) |m, k>` in the truncated
/// basis. The disentangled factors are each exact at finite cutoff; the
/// only error is the raised tail, which is checked against
/// [`TRUNCATION_TAIL_LIMIT`] over the top five components. The returned
/// vector is normalized to unit norm.
pub fn displacement_numeric(
    z: Complex64,
    w: BargmannWeight,
    cutoff: usize,
) -> Result<DVector<Complex64>> {
    check_disk(z)?;
    let rep = build_truncated_rep(w, cutoff)?;
    let m = w.m() as usize;
    let mut v = rep.basis_vector(m)?;

    // exp(-conj(z) K-): strictly upper triangular, never leaves the space.
    v = apply_exp_nilpotent(&rep.kminus, Complex64::new(-z.re, z.im), &v);
    // exp(beta K0): diagonal scaling by (1 - z conj(z))^(k + j).
    let one_minus = 1.0 - z.norm_sqr();
    for j in 0..cutoff {
        v[j] *= Complex64::new(one_minus.powf(w.k() + j as f64), 0.0);
    }
    // exp(z K+): strictly lower triangular; raises components toward the
    // truncation edge, producing the only tail error.
    v = apply_exp_nilpotent(&rep.kplus, z, &v);

    let tail_start = cutoff.saturating_sub(5);
    let tail_norm: f64 = v
        .iter()
        .skip(tail_start)
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if tail_norm > TRUNCATION_TAIL_LIMIT {
        return Err(Error::TruncationInsufficient {
            tail_norm,
            limit: TRUNCATION_TAIL_LIMIT,
        });
    }
    let n = v.norm();
    Ok(v / Complex64::new(n, 0.0))
}

/// Closed-form coherent expectations of the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KExpectations {
    pub k0: f64,
    pub kplus: Complex64,
    pub kminus: Complex64,
}

/// `<z,k,m| K0 |z,k,m>`, `<K+>`, `<K->` read off the diagonal parts of the
/// similarity-transformed generators:
/// `<K0> = (k+m)(1 + z conj z)/(1 - z conj z)`,
/// `<K+> = 2 conj(z) (k+m)/(1 - z conj z)`, `<K-> = conj <K+>`.
pub fn coherent_expectation_k(z: Complex64, w: BargmannWeight) -> Result<KExpectations> {
    check_disk(z)?;
    let kp_m = w.k_plus_m();
    let denom = 1.0 - z.norm_sqr();
    let kplus = z.conj() * (2.0 * kp_m / denom);
    Ok(KExpectations {
        k0: kp_m * (1.0 + z.norm_sqr()) / denom,
        kplus,
        kminus: kplus.conj(),
    })
}

/// Basis-state moment `<m,k| (K0 + eps K1)^n |m,k>`, computed exactly from
/// the truncated matrices (a cutoff of `m + n + 2` already holds every
/// closed walk of length `n`).
pub fn basis_omega_moment(eps: Epsilon, n: u32, w: BargmannWeight) -> Result<f64> {
    let m = w.m() as usize;
    let cutoff = m + n as usize + 2;
    let rep = build_truncated_rep(w, cutoff)?;
    let omega = rep.omega(eps);
    let mut v = rep.basis_vector(m)?;
    for _ in 0..n {
        v = &omega * &v;
    }
    let mut e = DVector::zeros(cutoff);
    e[m] = Complex64::new(1.0, 0.0);
    Ok(e.dotc(&v).re)
}

/// Coherent-state moment of `Omega_eps = K0 + eps K1`:
/// `<z,k,m| Omega_eps^n |z,k,m> = [ (1+eps z)(1+eps conj z)/(1 - z conj z) ]^n <m,k| Omega_eps^n |m,k>`.
///
/// The basis moment on the right is independent of `z`; the similarity
/// transform that maps the coherent moment onto it is diagonal, so only
/// the scalar prefactor survives.
pub fn omega_moment(eps: Epsilon, n: u32, z: Complex64, w: BargmannWeight) -> Result<f64> {
    check_disk(z)?;
    let s = eps.sign();
    let pref = (1.0 + s * z).norm_sqr() / (1.0 - z.norm_sqr());
    Ok(pref.powi(n as i32) * basis_omega_moment(eps, n, w)?)
}

/// Moment polynomials `Q_j(k, m) = <m,k| (2 (K0 + K1))^j |m,k>`, `j = 1..3`.
///
/// Closed forms (the `m`-dependent coefficients of the cubic are fixed by
/// the exact walk sum over ladder matrix elements; see the rational
/// evaluator and its tests):
/// `Q1 = 2 (k + m)`
/// `Q2 = 2k(2k+1) + 12 k m + 6 m^2`
/// `Q3 = 4k(k+1)(2k+1) + 4 m (12 k^2 + 3 k + 1) + 60 k m^2 + 20 m^3`
pub fn q_moment(j: u8, w: BargmannWeight) -> Result<f64> {
    let k = w.k();
    let m = f64::from(w.m());
    match j {
        1 => Ok(2.0 * (k + m)),
        2 => Ok(2.0 * k * (2.0 * k + 1.0) + 12.0 * k * m + 6.0 * m * m),
        3 => Ok(4.0 * k * (k + 1.0) * (2.0 * k + 1.0)
            + 4.0 * m * (12.0 * k * k + 3.0 * k + 1.0)
            + 60.0 * k * m * m
            + 20.0 * m * m * m),
        _ => Err(Error::Unsupported(format!(
            "Q_{j} has no closed form here; use omega_moment for higher orders"
        ))),
    }
}

/// `Q_j` in exact rational arithmetic; `k` is supplied as a rational so
/// quarter-integer indices stay exact.
pub fn q_moment_rational(j: u8, k: Ratio<i64>, m: u32) -> Result<Ratio<i64>> {
    let m = Ratio::from_integer(i64::from(m));
    let one = Ratio::from_integer(1);
    let r = |n: i64| Ratio::from_integer(n);
    match j {
        1 => Ok(r(2) * (k + m)),
        2 => Ok(r(2) * k * (r(2) * k + one) + r(12) * k * m + r(6) * m * m),
        3 => Ok(r(4) * k * (k + one) * (r(2) * k + one)
            + r(4) * m * (r(12) * k * k + r(3) * k + one)
            + r(60) * k * m * m
            + r(20) * m * m * m),
        _ => Err(Error::Unsupported(format!("Q_{j} has no closed form here"))),
    }
}

/// `S_j(z, k, m) = [ (1+z)(1+conj z)/(1 - z conj z) ]^j Q_j(k, m)`, the
/// coherent-state moment of `(2 (K0 + K1))^j`.
pub fn s_moment(j: u8, z: Complex64, w: BargmannWeight) -> Result<f64> {
    check_disk(z)?;
    let xi = (1.0 + z).norm_sqr() / (1.0 - z.norm_sqr());
    Ok(xi.powi(i32::from(j)) * q_moment(j, w)?)
}
