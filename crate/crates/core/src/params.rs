//! Problem instance, twist factorization and the derived constants.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rational::Kernels;
use crate::sampling::{in_annulus, SeededRng};
use crate::scalar::{Real, C};

/// Entries of the 2x2 twist `K = [[kappa_tilde, kappa_plus], [kappa_minus, kappa]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistMatrix<T: Real> {
    pub kappa_tilde: C<T>,
    pub kappa: C<T>,
    pub kappa_plus: C<T>,
    pub kappa_minus: C<T>,
}

impl<T: Real> TwistMatrix<T> {
    pub fn new(kappa_tilde: C<T>, kappa: C<T>, kappa_plus: C<T>, kappa_minus: C<T>) -> Self {
        Self {
            kappa_tilde,
            kappa,
            kappa_plus,
            kappa_minus,
        }
    }

    /// `kappa_tilde * kappa - kappa_plus * kappa_minus`
    pub fn gamma(&self) -> C<T> {
        self.kappa_tilde * self.kappa - self.kappa_plus * self.kappa_minus
    }

    pub fn matrix(&self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = self.kappa_tilde;
        m[(0, 1)] = self.kappa_plus;
        m[(1, 0)] = self.kappa_minus;
        m[(1, 1)] = self.kappa;
        m
    }

    fn magnitude(&self) -> T {
        [self.kappa_tilde, self.kappa, self.kappa_plus, self.kappa_minus]
            .iter()
            .fold(T::one(), |a, z| a.max(z.norm()))
    }
}

/// The global problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T: Real> {
    pub c: C<T>,
    pub theta: Vec<C<T>>,
    pub twist: TwistMatrix<T>,
    /// Free gauge parameter of the factorization.
    pub rho1: C<T>,
    /// Minimum pairwise distance of the inhomogeneities; defaults to `1e-3 max|theta|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn new(c: C<T>, theta: Vec<C<T>>, twist: TwistMatrix<T>, rho1: C<T>) -> Result<Self> {
        let p = Self {
            c,
            theta,
            twist,
            rho1,
            min_gap: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn gap(&self) -> T {
        self.min_gap.unwrap_or_else(|| {
            let m = self.theta.iter().fold(T::zero(), |a, t| a.max(t.norm()));
            T::lit(1e-3) * m
        })
    }

    pub fn with_rho1(&self, rho1: C<T>) -> Self {
        Self { rho1, ..self.clone() }
    }

    /// Checks the instance invariants, then the factorization.
    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::InvalidParams("chain needs at least one site".into()));
        }
        if self.c.norm() == T::zero() || !self.c.norm().is_finite() {
            return Err(Error::InvalidParams(
                "crossing parameter c must be finite and nonzero".into(),
            ));
        }
        if self.theta.iter().any(|t| !t.norm().is_finite()) {
            return Err(Error::InvalidParams("inhomogeneities must be finite".into()));
        }
        let gap = self.gap();
        for i in 0..self.theta.len() {
            for j in i + 1..self.theta.len() {
                let d = (self.theta[i] - self.theta[j]).norm();
                if d < gap || d == T::zero() {
                    return Err(Error::InvalidParams(format!(
                        "theta[{i}] and theta[{j}] are {d} apart, below the minimum gap {gap}"
                    )));
                }
            }
        }
        decompose_twist(&self.twist, self.rho1).map(|_| ())
    }
}

/// Derived gauge quantities of `K = B D A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistDecomposition<T: Real> {
    pub rho1: C<T>,
    pub rho2: C<T>,
    pub mu: C<T>,
    pub beta1: C<T>,
    pub beta2: C<T>,
    pub beta: C<T>,
    pub alpha: C<T>,
    pub eta: C<T>,
    pub xi: C<T>,
    pub d_plus: C<T>,
    pub d_minus: C<T>,
}

fn near_zero<T: Real>(x: C<T>, scale: T) -> bool {
    x.norm() <= T::lit(1e-12) * scale
}

/// Factorizes the twist for the gauge `rho1`.
pub fn decompose_twist<T: Real>(tw: &TwistMatrix<T>, rho1: C<T>) -> Result<TwistDecomposition<T>> {
    let s = tw.magnitude().max(rho1.norm());
    let (kt, k, kp, km) = (tw.kappa_tilde, tw.kappa, tw.kappa_plus, tw.kappa_minus);
    if near_zero(kp, s) || near_zero(km, s) {
        return Err(Error::DegenerateTwist(
            "kappa_plus and kappa_minus must be nonzero".into(),
        ));
    }
    if near_zero(tw.gamma(), s * s) {
        return Err(Error::DegenerateTwist(
            "gamma = kappa_tilde kappa - kappa_plus kappa_minus vanishes".into(),
        ));
    }
    if near_zero(rho1 - kt, s) {
        return Err(Error::DegenerateTwist(
            "rho1 = kappa_tilde leaves rho2 and alpha undefined".into(),
        ));
    }
    if near_zero(rho1, s) {
        return Err(Error::DegenerateTwist("rho1 = 0 leaves 1/beta undefined".into()));
    }
    let rho2 = (rho1 * k - kp * km) / (rho1 - kt);
    if near_zero(rho2, s) {
        return Err(Error::DegenerateTwist("rho2 = 0 leaves beta undefined".into()));
    }
    if near_zero(rho1 * rho2 - kp * km, s * s) {
        return Err(Error::DegenerateTwist(
            "rho1 rho2 = kappa_plus kappa_minus puts mu at a pole".into(),
        ));
    }
    if near_zero(k - rho2, s) {
        return Err(Error::DegenerateTwist("kappa = rho2 leaves eta undefined".into()));
    }
    let one = C::<T>::one();
    let mu = one / (one - rho1 * rho2 / (kp * km));
    let beta1 = rho1 / kp;
    let beta2 = rho2 / kp;
    let beta = rho1 / rho2;
    let alpha = (k - rho2) / (kt - rho1);
    let eta = ((mu - one) / beta + mu) * (kt - rho1) / (k - rho2);
    let two = C::new(T::lit(2.0), T::zero());
    let xi = mu / beta * (beta + one) * (beta + one) * (mu - one);
    let disc = ((k + kt) * (k + kt) - two * two * (k - rho2) * (kt - rho1)).sqrt();
    let d_plus = (k + kt + disc) / (two * (kt - rho1));
    let d_minus = (k + kt - disc) / (two * (kt - rho1));
    Ok(TwistDecomposition {
        rho1,
        rho2,
        mu,
        beta1,
        beta2,
        beta,
        alpha,
        eta,
        xi,
        d_plus,
        d_minus,
    })
}

impl<T: Real> TwistDecomposition<T> {
    /// `mu + (mu - 1)/beta`, the deformation of the on-shell Izergin factor.
    pub fn zeta(&self) -> C<T> {
        self.mu + (self.mu - C::one()) / self.beta
    }

    pub fn gauge_a(&self, tw: &TwistMatrix<T>) -> CMatrix<T> {
        let s = self.mu.sqrt();
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = s;
        a[(0, 1)] = s * self.rho2 / tw.kappa_minus;
        a[(1, 0)] = s * self.rho1 / tw.kappa_plus;
        a[(1, 1)] = s;
        a
    }

    pub fn gauge_b(&self, tw: &TwistMatrix<T>) -> CMatrix<T> {
        let s = self.mu.sqrt();
        let mut b = CMatrix::zeros(2, 2);
        b[(0, 0)] = s;
        b[(0, 1)] = s * self.rho1 / tw.kappa_minus;
        b[(1, 0)] = s * self.rho2 / tw.kappa_plus;
        b[(1, 1)] = s;
        b
    }

    pub fn gauge_d(&self, tw: &TwistMatrix<T>) -> CMatrix<T> {
        let mut d = CMatrix::zeros(2, 2);
        d[(0, 0)] = tw.kappa_tilde - self.rho1;
        d[(1, 1)] = tw.kappa - self.rho2;
        d
    }

    /// Residuals of every defining relation against `tw`, as `(name, relative error)`.
    pub fn invariant_residuals(&self, tw: &TwistMatrix<T>) -> Vec<(&'static str, T)> {
        let (kt, k, kp, km) = (tw.kappa_tilde, tw.kappa, tw.kappa_plus, tw.kappa_minus);
        let (r1, r2) = (self.rho1, self.rho2);
        let one = C::<T>::one();
        let rel = |x: C<T>, terms: &[C<T>]| {
            let s = terms.iter().fold(T::zero(), |a, t| a.max(t.norm()));
            x.norm() / s.max(T::min_positive_value())
        };
        let constraint = rel(
            r1 * r2 - r2 * kt - r1 * k + kp * km,
            &[r1 * r2, r2 * kt, r1 * k, kp * km],
        );
        let mu_rel = rel(self.mu * (one - r1 * r2 / (kp * km)) - one, &[one]);
        let bda = &(&self.gauge_b(tw) * &self.gauge_d(tw)) * &self.gauge_a(tw);
        let kmat = tw.matrix();
        let bda_rel = (&bda - &kmat).max_abs() / kmat.max_abs();
        let quad = |d: C<T>| {
            rel(
                (kt - r1) * d * d - (k + kt) * d + (k - r2),
                &[(kt - r1) * d * d, (k + kt) * d, k - r2],
            )
        };
        let alpha = rel(self.alpha - (k - r2) / (kt - r1), &[self.alpha]);
        let eta = rel(
            self.eta - ((self.mu - one) / self.beta + self.mu) * (kt - r1) / (k - r2),
            &[self.eta],
        );
        let xi = rel(
            self.xi - self.mu / self.beta * (self.beta + one) * (self.beta + one) * (self.mu - one),
            &[self.xi],
        );
        let betas = rel(self.beta1 - r1 / kp, &[self.beta1])
            .max(rel(self.beta2 - r2 / kp, &[self.beta2]))
            .max(rel(self.beta - r1 / r2, &[self.beta]));
        vec![
            ("rho-constraint", constraint),
            ("mu-constraint", mu_rel),
            ("bda-equals-k", bda_rel),
            ("d-plus-root", quad(self.d_plus)),
            ("d-minus-root", quad(self.d_minus)),
            ("alpha", alpha),
            ("eta", eta),
            ("xi", xi),
            ("betas", betas),
        ]
    }
}

/// Draws a gauge `rho1` of modulus in `[0.5, 2]` whose factorization is
/// comfortably away from every excluded point.
pub fn random_gauge<T: Real>(tw: &TwistMatrix<T>, rng: &mut SeededRng) -> Result<C<T>> {
    let margin = T::lit(0.05);
    for _ in 0..10_000 {
        let r1: C<T> = in_annulus(rng, 0.5, 2.0);
        let Ok(d) = decompose_twist(tw, r1) else {
            continue;
        };
        let s = tw.magnitude();
        let far = [
            r1 - tw.kappa_tilde,
            tw.kappa - d.rho2,
            d.rho2,
            r1 * d.rho2 - tw.kappa_plus * tw.kappa_minus,
            d.mu - C::one(),
            d.beta * tw.kappa + tw.kappa_tilde - r1 * T::lit(2.0),
            d.zeta(),
            d.eta,
        ]
        .iter()
        .all(|x| x.norm() > margin * s);
        if far && d.mu.norm() < T::lit(50.0) {
            return Ok(r1);
        }
    }
    Err(Error::DegenerateTwist("no admissible gauge found".into()))
}

/// Validated instance with its factorization and kernels, shared by every computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real> {
    params: ModelParams<T>,
    dec: TwistDecomposition<T>,
    kern: Kernels<T>,
}

impl<T: Real> Model<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        params.validate()?;
        let dec = decompose_twist(&params.twist, params.rho1)?;
        let kern = Kernels::new(params.c);
        Ok(Self { params, dec, kern })
    }

    pub fn with_rho1(&self, rho1: C<T>) -> Result<Self> {
        Self::new(self.params.with_rho1(rho1))
    }

    /// Same twist, gauge and `c` on other inhomogeneities.
    pub fn with_theta(&self, theta: Vec<C<T>>) -> Result<Self> {
        Self::new(ModelParams {
            theta,
            ..self.params.clone()
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn dec(&self) -> &TwistDecomposition<T> {
        &self.dec
    }

    pub fn kern(&self) -> &Kernels<T> {
        &self.kern
    }

    pub fn twist(&self) -> &TwistMatrix<T> {
        &self.params.twist
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn c(&self) -> C<T> {
        self.params.c
    }

    pub fn theta(&self) -> &[C<T>] {
        &self.params.theta
    }

    /// `kappa_tilde - rho1`
    pub fn a1(&self) -> C<T> {
        self.params.twist.kappa_tilde - self.dec.rho1
    }

    /// `kappa - rho2`
    pub fn a2(&self) -> C<T> {
        self.params.twist.kappa - self.dec.rho2
    }

    /// `rho1 + rho2`
    pub fn rho_sum(&self) -> C<T> {
        self.dec.rho1 + self.dec.rho2
    }

    /// `beta kappa + kappa_tilde - 2 rho1`
    pub fn norm_denominator(&self) -> C<T> {
        self.dec.beta * self.params.twist.kappa + self.params.twist.kappa_tilde - self.dec.rho1 * T::lit(2.0)
    }

    pub fn lambda1(&self, u: C<T>) -> C<T> {
        self.kern.lambda1(u, &self.params.theta)
    }

    pub fn lambda2(&self, u: C<T>) -> C<T> {
        self.kern.lambda2(u, &self.params.theta)
    }

    pub fn lambda2_set(&self, u: &[C<T>]) -> C<T> {
        u.iter().fold(C::one(), |a, &x| a * self.lambda2(x))
    }

    pub fn lambda1_set(&self, u: &[C<T>]) -> C<T> {
        u.iter().fold(C::one(), |a, &x| a * self.lambda1(x))
    }

    /// Largest magnitude among `theta`, `c` and one.
    pub fn length_scale(&self) -> T {
        self.params
            .theta
            .iter()
            .fold(T::one().max(self.params.c.norm()), |a, t| a.max(t.norm()))
    }

    pub fn zero() -> C<T> {
        C::zero()
    }
}
