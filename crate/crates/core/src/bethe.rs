//! Inhomogeneous Bethe equations: eigenvalue, the function `Y`, all residual
//! forms, a Newton solver with an analytic Jacobian, multi-start search and
//! oracle certification.

use itertools::Itertools;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, sort_lex, CMatrix, Lu};
use crate::oracle::{Chain, Side};
use crate::params::Model;
use crate::rational::ParameterSet;
use crate::sampling::{in_disk, stream, SeededRng};
use crate::scalar::{cpowi, Real, C};

/// A root set of the Bethe equations with convergence metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheSolution<T: Real> {
    pub roots: ParameterSet<T>,
    /// `max_j |Y(u_j|u)|`
    pub residual: f64,
    /// Largest term magnitude in `Y(u_j|u)`, floored at one.
    pub scale: f64,
    pub iterations: usize,
    /// `(z, Lambda(z|u))` at the certification points.
    pub eigenvalue_samples: Vec<(C<T>, C<T>)>,
    pub certified: bool,
    /// Worst `||Tr(z) B - Lambda B|| / (max(1,|Lambda|) ||B||)` seen while certifying.
    pub certificate_error: f64,
}

/// `Lambda(z|u)`. At a root `z = u_j` the pole of `g(z,u)` cancels on-shell and
/// the value is taken as the mean over a small circle, exact for a polynomial.
pub fn eigenvalue_lambda<T: Real>(model: &Model<T>, z: C<T>, u: &[C<T>]) -> Result<C<T>> {
    let kern = model.kern();
    if let Some(j) = u.iter().position(|&x| kern.is_pole(z, x)) {
        return lambda_by_circle(model, z, u, j);
    }
    lambda_direct(model, z, u)
}

fn lambda_direct<T: Real>(model: &Model<T>, z: C<T>, u: &[C<T>]) -> Result<C<T>> {
    let kern = model.kern();
    let (l1, l2) = (model.lambda1(z), model.lambda2(z));
    let zs = std::slice::from_ref(&z);
    Ok(model.a1() * l1 * kern.prod_f(u, zs)?
        + model.a2() * l2 * kern.prod_f(zs, u)?
        + model.rho_sum() * l1 * l2 * kern.prod_g(zs, u)?)
}

fn lambda_by_circle<T: Real>(model: &Model<T>, z: C<T>, u: &[C<T>], j: usize) -> Result<C<T>> {
    let mut r = T::lit(0.1) * model.length_scale();
    for (i, &x) in u.iter().enumerate() {
        if i != j {
            r = r.min((x - u[j]).norm() * T::lit(0.25));
        }
    }
    let k = model.n() + 3;
    let mut acc = C::zero();
    for s in 0..k {
        let phi = T::lit(std::f64::consts::TAU * (s as f64 + 0.5) / k as f64);
        acc += lambda_direct(model, z + C::from_polar(r, phi), u)?;
    }
    Ok(acc / T::from_usize(k).unwrap())
}

/// `Y(z|u) = (-1)^{#u} (kappa_tilde - rho1) f(z,theta) h(u,z) + (kappa - rho2) h(z,u) + (rho1 + rho2) lambda_1(z)`
pub fn y_function<T: Real>(model: &Model<T>, z: C<T>, u: &[C<T>]) -> Result<C<T>> {
    Ok(y_terms(model, z, u)?.iter().copied().sum())
}

fn y_terms<T: Real>(model: &Model<T>, z: C<T>, u: &[C<T>]) -> Result<[C<T>; 3]> {
    let kern = model.kern();
    let zs = std::slice::from_ref(&z);
    let sign = if u.len().is_multiple_of(2) { T::one() } else { -T::one() };
    Ok([
        model.a1() * kern.prod_f(zs, model.theta())? * kern.prod_h(u, zs) * sign,
        model.a2() * kern.prod_h(zs, u),
        model.rho_sum() * model.lambda1(z),
    ])
}

/// The vector `(Y(u_j|u))_j` and the largest term magnitude (floored at one).
pub fn y_system<T: Real>(model: &Model<T>, u: &[C<T>]) -> Result<(Vec<C<T>>, T)> {
    let mut scale = T::one();
    let mut out = Vec::with_capacity(u.len());
    for &uj in u {
        let t = y_terms(model, uj, u)?;
        for x in &t {
            scale = scale.max(x.norm());
        }
        out.push(t.iter().copied().sum());
    }
    Ok((out, scale))
}

// (value, derivative) of a product of (value, derivative) factors
fn prod_rule<T: Real>(factors: impl IntoIterator<Item = (C<T>, C<T>)>) -> (C<T>, C<T>) {
    factors
        .into_iter()
        .fold((C::one(), C::zero()), |(p, dp), (a, da)| (p * a, dp * a + p * da))
}

/// Analytic Jacobian `J[k][j] = d Y(u_k|u) / d u_j`.
pub fn y_jacobian<T: Real>(model: &Model<T>, u: &[C<T>]) -> Result<CMatrix<T>> {
    let n = u.len();
    let c = model.c();
    let kern = model.kern();
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    let inv_c = C::<T>::one() / c;
    let mut jac = CMatrix::zeros(n, n);
    for k in 0..n {
        let uk = u[k];
        let f_theta = prod_rule(model.theta().iter().map(|&t| {
            let x = uk - t;
            if kern.is_pole(uk, t) {
                (C::from(T::nan()), C::from(T::nan()))
            } else {
                ((x + c) / x, -c / (x * x))
            }
        }));
        if f_theta.0.norm().is_nan() {
            return Err(Error::pole(uk, model.theta()[0]));
        }
        let h_in = prod_rule((0..n).filter(|&l| l != k).map(|l| (kern.h(u[l], uk), -inv_c)));
        let h_out = prod_rule((0..n).filter(|&l| l != k).map(|l| (kern.h(uk, u[l]), inv_c)));
        let lam1 = prod_rule(model.theta().iter().map(|&t| ((uk - t + c) / c, inv_c)));
        let d_first = f_theta.1 * h_in.0 + f_theta.0 * h_in.1;
        jac[(k, k)] = model.a1() * d_first * sign + model.a2() * h_out.1 + model.rho_sum() * lam1.1;
        for j in 0..n {
            if j == k {
                continue;
            }
            let rest_in: C<T> = (0..n)
                .filter(|&l| l != k && l != j)
                .map(|l| kern.h(u[l], uk))
                .fold(C::one(), |a, b| a * b);
            let rest_out: C<T> = (0..n)
                .filter(|&l| l != k && l != j)
                .map(|l| kern.h(uk, u[l]))
                .fold(C::one(), |a, b| a * b);
            jac[(k, j)] = model.a1() * f_theta.0 * rest_in * inv_c * sign - model.a2() * rest_out * inv_c;
        }
    }
    Ok(jac)
}

fn coincidence_weights<T: Real>(u: &[C<T>], len: T) -> Result<Vec<C<T>>> {
    (0..u.len())
        .map(|j| {
            let mut w = C::one();
            for k in 0..u.len() {
                if k != j {
                    let d = u[j] - u[k];
                    if d.norm() == T::zero() {
                        return Err(Error::pole(u[j], u[k]));
                    }
                    w = w * len / d;
                }
            }
            Ok(w)
        })
        .collect()
}

fn deflated_system<T: Real>(model: &Model<T>, u: &[C<T>], len: T) -> Result<(Vec<C<T>>, T)> {
    let (y, s) = y_system(model, u)?;
    let w = coincidence_weights(u, len)?;
    let wmax = w.iter().fold(T::one(), |a, x| a.max(x.norm()));
    Ok((y.iter().zip(&w).map(|(&a, &b)| a * b).collect(), s * wmax))
}

fn deflated_jacobian<T: Real>(model: &Model<T>, u: &[C<T>], len: T) -> Result<CMatrix<T>> {
    let (y, _) = y_system(model, u)?;
    let w = coincidence_weights(u, len)?;
    let mut jac = y_jacobian(model, u)?;
    let n = u.len();
    for j in 0..n {
        let mut dlog = vec![C::<T>::zero(); n];
        for k in 0..n {
            if k != j {
                let inv = C::<T>::one() / (u[j] - u[k]);
                dlog[j] -= inv;
                dlog[k] += inv;
            }
        }
        for l in 0..n {
            jac[(j, l)] = jac[(j, l)] * w[j] + y[j] * w[j] * dlog[l];
        }
    }
    Ok(jac)
}

/// Monic polynomial given by its roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonicPolynomial<T: Real> {
    pub roots: Vec<C<T>>,
}

impl<T: Real> MonicPolynomial<T> {
    pub fn new(roots: Vec<C<T>>) -> Self {
        Self { roots }
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn eval(&self, z: C<T>) -> C<T> {
        self.roots.iter().fold(C::one(), |a, &r| a * (z - r))
    }

    /// `prod_{k != j} (z - theta_k + c)`
    pub fn h_type(theta: &[C<T>], c: C<T>, j: usize) -> Self {
        Self::new(
            theta
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &t)| t - c)
                .collect(),
        )
    }

    /// `prod_{k != j} (z - theta_k)`
    pub fn g_type(theta: &[C<T>], j: usize) -> Self {
        Self::new(
            theta
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &t)| t)
                .collect(),
        )
    }

    /// `prod_{a in A} (z - theta_a + c) prod_{b in B, b != j} (z - theta_b)` for `j` in `B`.
    pub fn interpolating(theta: &[C<T>], c: C<T>, in_a: &[bool], j: usize) -> Result<Self> {
        if in_a.len() != theta.len() || in_a[j] {
            return Err(Error::Dimension(
                "interpolating polynomial needs j outside the subset A".into(),
            ));
        }
        Ok(Self::new(
            theta
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(k, &t)| if in_a[k] { t - c } else { t })
                .collect(),
        ))
    }
}

/// Which rewriting of the Bethe equations to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualForm<T: Real> {
    /// The original products of `lambda`, `f` and `g`.
    Products,
    /// `Y(u_j|u)`
    Y,
    /// Sum over inhomogeneities weighted by `f(u, theta_k)`.
    ThetaWeighted,
    /// Sum over inhomogeneities weighted by `1/f(u, theta_k)`.
    ThetaInverseWeighted,
    /// One equation per supplied monic polynomial of degree below `N`.
    Polynomial(Vec<MonicPolynomial<T>>),
}

/// Residual values with the largest term magnitude of each equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals<T: Real> {
    pub values: Vec<C<T>>,
    pub scales: Vec<T>,
}

impl<T: Real> Residuals<T> {
    /// `max_j |r_j| / max(1, scale_j)`
    pub fn max_scaled(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.scales)
            .map(|(v, &s)| (v.norm() / s.max(T::one())).to_f64_lossy())
            .fold(0.0, f64::max)
    }

    fn push(&mut self, terms: &[C<T>]) {
        self.values.push(terms.iter().copied().sum());
        self.scales.push(terms.iter().fold(T::zero(), |a, t| a.max(t.norm())));
    }
}

/// Evaluates one form of the Bethe equations. All forms vanish together on-shell.
pub fn residual<T: Real>(model: &Model<T>, form: &ResidualForm<T>, u: &[C<T>]) -> Result<Residuals<T>> {
    let kern = model.kern();
    let theta = model.theta();
    let n = theta.len();
    let (a1, a2) = (model.a1(), model.a2());
    let kk = model.twist().kappa + model.twist().kappa_tilde;
    let mut out = Residuals {
        values: Vec::new(),
        scales: Vec::new(),
    };
    match form {
        ResidualForm::Products => {
            for (j, &uj) in u.iter().enumerate() {
                let rest = ParameterSet::from(u.to_vec()).without(j);
                let (l1, l2) = (model.lambda1(uj), model.lambda2(uj));
                out.push(&[
                    a2 * l2 * kern.f_pt_set(uj, &rest)?,
                    -a1 * l1 * kern.f_set_pt(&rest, uj)?,
                    model.rho_sum() * kern.prod_g(&[uj], &rest)? * l1 * l2,
                ]);
            }
        }
        ResidualForm::Y => {
            for &uj in u {
                out.push(&y_terms(model, uj, u)?);
            }
        }
        ResidualForm::ThetaWeighted => {
            let fu: Vec<C<T>> = theta.iter().map(|&t| kern.f_set_pt(u, t)).collect::<Result<_>>()?;
            let w: Vec<C<T>> = (0..n).map(|k| kern.f_pt_rest(theta, k)).collect::<Result<_>>()?;
            for j in 0..n {
                let mut terms = vec![a2 / fu[j], -kk];
                for k in 0..n {
                    terms.push(a1 * w[k] * kern.inv_h(theta[k], theta[j])? * fu[k]);
                }
                out.push(&terms);
            }
        }
        ResidualForm::ThetaInverseWeighted => {
            let fu: Vec<C<T>> = theta.iter().map(|&t| kern.f_set_pt(u, t)).collect::<Result<_>>()?;
            let w: Vec<C<T>> = (0..n).map(|k| kern.f_rest_pt(theta, k)).collect::<Result<_>>()?;
            for j in 0..n {
                let mut terms = vec![a1 * fu[j], -kk];
                for k in 0..n {
                    terms.push(a2 * w[k] * kern.inv_h(theta[j], theta[k])? / fu[k]);
                }
                out.push(&terms);
            }
        }
        ResidualForm::Polynomial(polys) => {
            let c = model.c();
            let fu: Vec<C<T>> = theta.iter().map(|&t| kern.f_set_pt(u, t)).collect::<Result<_>>()?;
            let gk: Vec<C<T>> = (0..n).map(|k| kern.g_pt_rest(theta, k)).collect::<Result<_>>()?;
            for p in polys {
                if p.degree() >= n {
                    return Err(Error::Dimension(format!(
                        "polynomial degree {} must be below N = {n}",
                        p.degree()
                    )));
                }
                let mut terms = Vec::with_capacity(2 * n + 1);
                for k in 0..n {
                    terms.push(a2 * p.eval(theta[k] - c) / fu[k] * gk[k]);
                    terms.push(a1 * fu[k] * p.eval(theta[k]) * gk[k]);
                }
                if p.degree() == n - 1 {
                    terms.push(-cpowi(c, n as i64 - 1) * kk);
                }
                out.push(&terms);
            }
        }
    }
    Ok(out)
}

/// Settings for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Converged when `max_j |Y(u_j|u)| <= tol * scale`.
    pub tol: f64,
    pub max_iter: usize,
    pub certify: bool,
    pub certify_tol: f64,
    pub z_samples: usize,
    pub seed: u64,
    /// Iterate on `Y(u_j|u) prod_{k != j} L/(u_j - u_k)` before polishing, so
    /// that Newton is not drawn to root sets with coinciding members.
    pub deflate_coincidences: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            certify: true,
            certify_tol: 1e-8,
            z_samples: 3,
            seed: 0,
            deflate_coincidences: true,
        }
    }
}

/// Result of a damped Newton iteration on a square system.
#[derive(Debug, Clone)]
pub struct NewtonOutcome<T: Real> {
    pub x: Vec<C<T>>,
    pub residual: T,
    pub scale: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton iteration. `eval` returns the system and its scale; `jac`
/// its Jacobian. Steps are halved until the residual norm decreases.
pub fn newton<T, E, J>(x0: &[C<T>], tol: f64, max_iter: usize, eval: E, jac: J) -> Result<NewtonOutcome<T>>
where
    T: Real,
    E: Fn(&[C<T>]) -> Result<(Vec<C<T>>, T)>,
    J: Fn(&[C<T>]) -> Result<CMatrix<T>>,
{
    let tol = T::lit(tol);
    let mut x = x0.to_vec();
    let (mut fx, mut scale) = eval(&x)?;
    let max_abs = |v: &[C<T>]| v.iter().fold(T::zero(), |a, z| a.max(z.norm()));
    let mut res = max_abs(&fx);
    let mut it = 0;
    while it < max_iter {
        if res <= tol * scale {
            return Ok(NewtonOutcome {
                x,
                residual: res,
                scale,
                iterations: it,
                converged: true,
            });
        }
        it += 1;
        let j = jac(&x)?;
        let lu = Lu::new(j).ok_or(Error::SingularJacobian { iteration: it })?;
        let neg: Vec<C<T>> = fx.iter().map(|&v| -v).collect();
        let step = lu.solve(&neg);
        if step.iter().any(|s| !s.norm().is_finite()) {
            return Err(Error::SingularJacobian { iteration: it });
        }
        let norm0 = norm2(&fx);
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<C<T>> = x.iter().zip(&step).map(|(&a, &s)| a + s * t).collect();
            if let Ok((ft, st)) = eval(&trial) {
                if norm2(&ft) < norm0 || t < T::lit(1e-6) {
                    accepted = Some((trial, ft, st));
                    break;
                }
            }
            t *= T::lit(0.5);
        }
        let Some((xn, fnx, sn)) = accepted else {
            break;
        };
        x = xn;
        fx = fnx;
        scale = sn;
        res = max_abs(&fx);
    }
    let converged = res <= tol * scale;
    Ok(NewtonOutcome {
        x,
        residual: res,
        scale,
        iterations: it,
        converged,
    })
}

/// Solves `Y(u_j|u) = 0` from `initial` and certifies the result against the oracle.
pub fn solve<T: Real>(
    model: &Model<T>,
    initial: &[C<T>],
    opts: &SolveOptions,
    chain: Option<&Chain<T>>,
) -> Result<BetheSolution<T>> {
    if initial.len() != model.n() {
        return Err(Error::Dimension(format!(
            "expected {} initial roots, got {}",
            model.n(),
            initial.len()
        )));
    }
    let (y0, s0) = y_system(model, initial)?;
    let done = y0.iter().all(|v| v.norm() <= T::lit(opts.tol) * s0);
    let mut start = initial.to_vec();
    let mut used = 0;
    if opts.deflate_coincidences && !done && initial.len() > 1 {
        let len = model.length_scale();
        let pre = newton(
            initial,
            opts.tol,
            opts.max_iter,
            |u| deflated_system(model, u, len),
            |u| deflated_jacobian(model, u, len),
        )?;
        used = pre.iterations;
        start = pre.x;
    }
    let mut out = newton(
        &start,
        opts.tol,
        opts.max_iter.saturating_sub(used).max(8),
        |u| y_system(model, u),
        |u| y_jacobian(model, u),
    )?;
    out.iterations += used;
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.residual.to_f64_lossy(),
        });
    }
    let mut sol = BetheSolution {
        roots: ParameterSet::new(out.x),
        residual: out.residual.to_f64_lossy(),
        scale: out.scale.to_f64_lossy(),
        iterations: out.iterations,
        eigenvalue_samples: Vec::new(),
        certified: false,
        certificate_error: f64::INFINITY,
    };
    if opts.certify {
        if let Some(ch) = chain {
            certify(model, ch, &mut sol, opts)?;
        }
    }
    Ok(sol)
}

/// Spectral points for certification: random, away from the roots and inhomogeneities.
pub fn sample_points<T: Real>(model: &Model<T>, roots: &[C<T>], count: usize, rng: &mut SeededRng) -> Vec<C<T>> {
    let spread = model.length_scale().to_f64_lossy() + 0.5;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: C<T> = in_disk(rng, spread);
        let far = roots
            .iter()
            .chain(model.theta())
            .all(|&x| (z - x).norm() > T::lit(0.05));
        if far {
            out.push(z);
        }
    }
    out
}

/// Checks `Tr(z) B(u) = Lambda(z|u) B(u)` at the sample points and records the samples.
pub fn certify<T: Real>(
    model: &Model<T>,
    chain: &Chain<T>,
    sol: &mut BetheSolution<T>,
    opts: &SolveOptions,
) -> Result<()> {
    let u = sol.roots.values().to_vec();
    let ket = chain.bethe_vector(&u, Side::Ket);
    let bn = ket.norm();
    let mut rng = stream(opts.seed, &[0xce27, u.len() as u64]);
    let zs = sample_points(model, &u, opts.z_samples.max(1), &mut rng);
    let mut worst = 0.0f64;
    let mut samples = Vec::with_capacity(zs.len());
    for z in zs {
        let lam = eigenvalue_lambda(model, z, &u)?;
        let e = chain.eigen_residual(z, &ket.data, lam) / lam.norm().max(T::one());
        worst = worst.max(e.to_f64_lossy());
        samples.push((z, lam));
    }
    let vanishing = !bn.is_finite() || bn <= T::lit(1e-10);
    sol.eigenvalue_samples = samples;
    sol.certificate_error = if vanishing { f64::INFINITY } else { worst };
    sol.certified = !vanishing && worst <= opts.certify_tol && sol.residual <= opts.tol * sol.scale;
    Ok(())
}

/// Set distance: minimum over pairings of the largest componentwise distance.
pub fn set_distance<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    let n = a.len();
    if n <= 7 {
        (0..n)
            .permutations(n)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .fold(T::zero(), |m, (i, &j)| m.max((a[i] - b[j]).norm()))
            })
            .fold(T::infinity(), |m, d| m.min(d))
    } else {
        let (mut x, mut y) = (a.to_vec(), b.to_vec());
        sort_lex(&mut x);
        sort_lex(&mut y);
        x.iter().zip(&y).fold(T::zero(), |m, (&p, &q)| m.max((p - q).norm()))
    }
}

/// Settings for [`find_all_solutions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FindOptions {
    pub seed: u64,
    /// Starts per expected solution; the total is this times `2^N`.
    pub starts_per_state: usize,
    pub dedup_tol: f64,
    /// Roots closer than this to each other, to `theta_k` or to `theta_k - c` are rejected.
    pub min_separation: f64,
    /// Extra rounds of starts, each repelled from every solution found so far.
    pub deflation_rounds: usize,
    pub solve: SolveOptions,
}

impl Default for FindOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            starts_per_state: 64,
            dedup_tol: 1e-6,
            min_separation: 1e-6,
            deflation_rounds: 4,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet<T: Real> {
    pub solutions: Vec<BetheSolution<T>>,
    pub starts: usize,
    pub converged_runs: usize,
    /// Distinct certified solutions divided by `2^N`.
    pub coverage: f64,
}

/// Radius containing the roots in practice: the inhomogeneity spread plus the
/// large root of the one-site quadratic.
pub fn root_radius<T: Real>(model: &Model<T>) -> T {
    let tw = model.twist();
    let big = (tw.kappa - tw.kappa_tilde + model.dec().rho1 * T::lit(2.0)).norm() + model.a1().norm();
    let rs = model.rho_sum().norm().max(T::lit(1e-12));
    model.length_scale() + model.c().norm() * big / rs
}

/// Root of the one-site quadratic farthest from the inhomogeneities,
/// `x ~ -c (kappa - kappa_tilde + 2 rho1) / (rho1 + rho2)` about their centre.
fn far_root<T: Real>(model: &Model<T>) -> C<T> {
    let theta = model.theta();
    let centre = theta.iter().copied().sum::<C<T>>() / T::from_usize(theta.len()).unwrap();
    let tw = model.twist();
    let c = model.c();
    let (a, b, k) = (
        model.rho_sum() / c,
        tw.kappa - tw.kappa_tilde + model.dec().rho1 * T::lit(2.0),
        -model.a1() * c,
    );
    if a.norm() < T::lit(1e-12) {
        return centre;
    }
    let disc = (b * b - a * k * T::lit(4.0)).sqrt();
    let (x1, x2) = ((-b + disc) / (a * T::lit(2.0)), (-b - disc) / (a * T::lit(2.0)));
    centre + if x1.norm() > x2.norm() { x1 } else { x2 }
}

pub fn random_start<T: Real>(model: &Model<T>, rng: &mut SeededRng) -> Vec<C<T>> {
    use rand::Rng;
    let theta = model.theta();
    let n = theta.len();
    let c = model.c();
    let mut sep = model.length_scale();
    for i in 0..n {
        for j in i + 1..n {
            sep = sep.min((theta[i] - theta[j]).norm());
        }
    }
    let noise = (sep * T::lit(0.5)).to_f64_lossy();
    let centre = theta.iter().copied().sum::<C<T>>() / T::from_usize(n).unwrap();
    let (lo, hi) = (
        (model.length_scale() * T::lit(0.1)).to_f64_lossy().ln(),
        (root_radius(model) * T::lit(3.0)).to_f64_lossy().ln(),
    );
    let far = far_root(model);
    if rng.gen_bool(0.15) {
        let far_noise = (far - centre).norm().to_f64_lossy();
        return (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => centre + crate::sampling::in_annulus::<T>(rng, 0.0, 1.0) * T::lit(rng.gen_range(lo..=hi).exp()),
                1 => far + in_disk::<T>(rng, far_noise),
                _ => theta[rng.gen_range(0..n)] + in_disk::<T>(rng, noise),
            })
            .collect();
    }
    // k roots evenly spaced on one circle, the rest next to distinct theta_k or theta_k - c
    let k = rng.gen_range(0..=n);
    let r = T::lit(rng.gen_range(lo..=hi).exp());
    let phase = rng.gen::<f64>() * std::f64::consts::TAU;
    let ring_centre = if rng.gen_bool(0.5) { centre } else { far } + in_disk::<T>(rng, 0.3 * r.to_f64_lossy());
    let even = rng.gen_bool(0.5);
    let mut sites: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        sites.swap(i, rng.gen_range(0..=i));
    }
    let mut out: Vec<C<T>> = (0..k)
        .map(|i| {
            let phi = if even {
                phase + std::f64::consts::TAU * i as f64 / k as f64
            } else {
                rng.gen::<f64>() * std::f64::consts::TAU
            };
            let ri = if even { r } else { r * T::lit(rng.gen_range(0.6..1.4)) };
            ring_centre + C::from_polar(ri, T::lit(phi)) + in_disk::<T>(rng, noise)
        })
        .collect();
    for &site in &sites[..n - k] {
        let base = if rng.gen_bool(0.5) {
            theta[site]
        } else {
            theta[site] - c
        };
        out.push(base + in_disk::<T>(rng, noise));
    }
    out
}

pub fn admissible<T: Real>(model: &Model<T>, u: &[C<T>], min_sep: f64) -> bool {
    let s = T::lit(min_sep) * model.length_scale();
    let c = model.c();
    for (i, &x) in u.iter().enumerate() {
        if !x.norm().is_finite() {
            return false;
        }
        for &t in model.theta() {
            if (x - t).norm() < s || (x - t + c).norm() < s {
                return false;
            }
        }
        for &y in &u[i + 1..] {
            if (x - y).norm() < s {
                return false;
            }
        }
    }
    true
}

/// Coefficients of `prod_i (z - u_i)` below the leading one, the `k`-th scaled by `len^-k`.
fn scaled_coefficients<T: Real>(u: &[C<T>], len: T) -> Vec<C<T>> {
    let mut e = vec![C::<T>::one()];
    for &x in u {
        let mut next = vec![C::zero(); e.len() + 1];
        for (k, &a) in e.iter().enumerate() {
            next[k] += a;
            next[k + 1] -= a * x;
        }
        e = next;
    }
    e.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a / cpowi(C::from(len), k as i64))
        .collect()
}

/// `ln prod_s (1 + 1/d_s^2)` with `d_s` the coefficient distance from `u` to the known set `s`.
fn log_repulsion<T: Real>(u: &[C<T>], known: &[Vec<C<T>>], len: T) -> T {
    let e = scaled_coefficients(u, len);
    known
        .iter()
        .map(|s| {
            let d2 = e.iter().zip(s).fold(T::zero(), |a, (&x, &y)| a + (x - y).norm_sqr());
            (T::one() + T::one() / d2).ln()
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Newton iteration repelled from known solutions. The step of the deflated
/// system `m(u) G(u)` is the plain step scaled by `1/(1 - D)`, `D` the
/// derivative of `ln m` along it. Returns the point where `G` vanishes.
fn repelled_newton<T: Real>(
    model: &Model<T>,
    x0: &[C<T>],
    known: &[Vec<C<T>>],
    opts: &SolveOptions,
) -> Option<Vec<C<T>>> {
    let len = model.length_scale();
    let coeffs: Vec<Vec<C<T>>> = known.iter().map(|s| scaled_coefficients(s, len)).collect();
    let eval = |u: &[C<T>]| deflated_system(model, u, len);
    let tol = T::lit(opts.tol);
    let mut x = x0.to_vec();
    let (mut g, mut scale) = eval(&x).ok()?;
    for it in 0..opts.max_iter {
        if g.iter().all(|v| v.norm() <= tol * scale) {
            return Some(x);
        }
        let lu = Lu::new(deflated_jacobian(model, &x, len).ok()?)?;
        let neg: Vec<C<T>> = g.iter().map(|&v| -v).collect();
        let step = lu.solve(&neg);
        let sn = norm2(&step);
        if !sn.is_finite() {
            return None;
        }
        let h = T::lit(1e-7) * len / sn.max(T::lit(1e-300));
        let at = |t: T| -> Vec<C<T>> { x.iter().zip(&step).map(|(&a, &d)| a + d * t).collect() };
        let d = (log_repulsion(&at(h), &coeffs, len) - log_repulsion(&at(-h), &coeffs, len)) / (h * T::lit(2.0));
        let denom = T::one() - d;
        let tau = if denom > T::lit(0.1) {
            T::one() / denom
        } else {
            T::one()
        };
        let merit = |gv: &[C<T>], u: &[C<T>]| norm2(gv) * log_repulsion(u, &coeffs, len).exp();
        let m0 = merit(&g, &x);
        let mut t = tau;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = at(t);
            if let Ok((gt, st)) = eval(&trial) {
                if merit(&gt, &trial) < m0 || t < T::lit(1e-6) {
                    accepted = Some((trial, gt, st));
                    break;
                }
            }
            t *= T::lit(0.5);
        }
        let (xn, gn, s2) = accepted?;
        x = xn;
        g = gn;
        scale = s2;
        if it + 1 == opts.max_iter {
            break;
        }
    }
    None
}

/// Seeded multi-start search. Runs are independent and may execute in parallel;
/// deduplication and certification are a serial reduction in run order. After
/// the first pass, each deflation round starts afresh repelled from every
/// solution found so far, which reaches states with small basins.
pub fn find_all_solutions<T: Real>(model: &Model<T>, opts: &FindOptions) -> Result<SolutionSet<T>> {
    let n = model.n();
    let chain = Chain::new(model)?;
    let states = 1usize << n;
    let total = opts.starts_per_state.max(1) << n;
    let mut no_certify = opts.solve;
    no_certify.certify = false;
    let polish = |u: Vec<C<T>>| {
        solve(model, &u, &no_certify, None)
            .ok()
            .filter(|s| admissible(model, s.roots.values(), opts.min_separation))
    };
    let mut found: Vec<BetheSolution<T>> = Vec::new();
    let mut starts = 0;
    let mut converged_runs = 0;
    for round in 0..=opts.deflation_rounds {
        if round > 0 && found.len() >= states {
            break;
        }
        let batch = if round == 0 { total } else { (total / 4).max(1) };
        let known: Vec<Vec<C<T>>> = found.iter().map(|s| s.roots.values().to_vec()).collect();
        let runs: Vec<Option<BetheSolution<T>>> = (0..batch)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(opts.seed, &[0x57a7, round as u64, i as u64]);
                let start = random_start(model, &mut rng);
                if round == 0 {
                    polish(start)
                } else {
                    repelled_newton(model, &start, &known, &no_certify).and_then(polish)
                }
            })
            .collect();
        starts += batch;
        converged_runs += runs.iter().filter(|r| r.is_some()).count();
        for mut sol in runs.into_iter().flatten() {
            let dup = found
                .iter()
                .any(|f| set_distance(f.roots.values(), sol.roots.values()) < T::lit(opts.dedup_tol));
            if dup {
                continue;
            }
            certify(model, &chain, &mut sol, &opts.solve)?;
            if sol.certified {
                let mut r = sol.roots.values().to_vec();
                sort_lex(&mut r);
                sol.roots = ParameterSet::new(r);
                found.push(sol);
            }
        }
    }
    found.sort_by(|a, b| {
        let (x, y) = (a.roots.values(), b.roots.values());
        x.iter()
            .zip(y)
            .map(|(p, q)| p.re.partial_cmp(&q.re).unwrap().then(p.im.partial_cmp(&q.im).unwrap()))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let coverage = found.len() as f64 / states as f64;
    Ok(SolutionSet {
        solutions: found,
        starts,
        converged_runs,
        coverage,
    })
}

/// Worst distance of each solution's `Lambda(z|u)` to the dense spectrum of `Tr(z)`,
/// relative to `max(1, |Lambda|)`, over the recorded samples.
pub fn spectrum_match<T: Real>(chain: &Chain<T>, sols: &[BetheSolution<T>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in sols {
        for &(z, lam) in &s.eigenvalue_samples {
            let ev = chain.transfer_matrix(z).eigenvalues();
            let d = ev
                .iter()
                .map(|&e| (e - lam).norm())
                .fold(T::infinity(), |m, d| m.min(d));
            worst = worst.max((d / lam.norm().max(T::one())).to_f64_lossy());
        }
    }
    Ok(worst)
}

/// Outcome of the diagonal-twist analog of the on-shell Izergin identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalReport<T: Real> {
    pub roots: Vec<C<T>>,
    pub d: Vec<C<T>>,
    /// Largest distance of a `d_i` to the nearer of `1` and `kappa/kappa_tilde`.
    pub classification_error: f64,
    /// `(z, relative error)` of `K^{(z)}_{M,N}(u|theta) = prod (d_i - z)`.
    pub errors: Vec<(C<T>, f64)>,
    pub residual: f64,
}

/// `kappa f(u_j,u\u_j) lambda_2(u_j) - kappa_tilde f(u\u_j,u_j) lambda_1(u_j)` for a diagonal twist.
pub fn diagonal_system<T: Real>(
    kern: &crate::rational::Kernels<T>,
    theta: &[C<T>],
    kappa: C<T>,
    kappa_tilde: C<T>,
    u: &[C<T>],
) -> Result<(Vec<C<T>>, T)> {
    let mut scale = T::one();
    let mut out = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let a = kappa * kern.f_pt_rest(u, j)? * kern.lambda2(u[j], theta);
        let b = kappa_tilde * kern.f_rest_pt(u, j)? * kern.lambda1(u[j], theta);
        scale = scale.max(a.norm()).max(b.norm());
        out.push(a - b);
    }
    Ok((out, scale))
}

/// Central finite-difference Jacobian of a holomorphic system.
pub fn fd_jacobian<T: Real>(
    x: &[C<T>],
    step: T,
    eval: impl Fn(&[C<T>]) -> Result<(Vec<C<T>>, T)>,
) -> Result<CMatrix<T>> {
    let n = x.len();
    let mut jac = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += C::new(step, T::zero());
        xm[j] -= C::new(step, T::zero());
        let (fp, _) = eval(&xp)?;
        let (fm, _) = eval(&xm)?;
        for k in 0..n {
            jac[(k, j)] = (fp[k] - fm[k]) / (step * T::lit(2.0));
        }
    }
    Ok(jac)
}

/// Solves the diagonal-twist equations for `M` roots from `start` and checks
/// `K^{(z)}_{M,N}(u|theta) = prod_i (d_i - z)` at each `z`, with `d_i` the
/// eigenvalues of `B^{-1} diag(f(u_j,theta))`, `B_jk = f(u_j,u\u_j)/h(u_j,u_k)`,
/// completed by `N - M` ones.
pub fn diagonal_onshell_check<T: Real>(model: &Model<T>, start: &[C<T>], zs: &[C<T>]) -> Result<DiagonalReport<T>> {
    let kern = *model.kern();
    let theta = model.theta().to_vec();
    let tw = model.twist();
    let (k, kt) = (tw.kappa, tw.kappa_tilde);
    let eval = |u: &[C<T>]| diagonal_system(&kern, &theta, k, kt, u);
    let h = T::lit(1e-6) * model.length_scale();
    let out = newton(start, 1e-13, 200, eval, |u| fd_jacobian(u, h, eval))?;
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            residual: out.residual.to_f64_lossy(),
        });
    }
    let u = out.x;
    let m = u.len();
    let n = theta.len();
    let b = CMatrix::try_from_fn(m, m, |j, l| Ok(kern.f_pt_rest(&u, j)? * kern.inv_h(u[j], u[l])?))?;
    let fdiag = CMatrix::try_from_fn(m, m, |j, l| {
        Ok(if j == l {
            kern.f_pt_set(u[j], &theta)?
        } else {
            C::zero()
        })
    })?;
    let mut d = if m > 0 {
        (&b.inverse()? * &fdiag).eigenvalues()
    } else {
        Vec::new()
    };
    d.extend(std::iter::repeat_n(C::one(), n - m));
    sort_lex(&mut d);
    let ratio = k / kt;
    let classification_error = d
        .iter()
        .map(|&x| (x - C::one()).norm().min((x - ratio).norm()).to_f64_lossy())
        .fold(0.0, f64::max);
    let mut errors = Vec::with_capacity(zs.len());
    for &z in zs {
        let lhs = crate::izergin::k_mod(&kern, z, &u, &theta)?;
        let rhs = crate::rational::root_product(&d, z);
        errors.push((z, crate::scalar::scaled_err(lhs, rhs).to_f64_lossy()));
    }
    Ok(DiagonalReport {
        roots: u,
        d,
        classification_error,
        errors,
        residual: out.residual.to_f64_lossy(),
    })
}
