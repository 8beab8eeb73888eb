//! Modified Izergin determinant, its conjugate, the ordinary Izergin
//! determinant, and executable checks of the determinant's properties.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lagrange_eval, CMatrix};
use crate::rational::{bipartitions, Kernels};
use crate::report::{Check, CheckRecord};
use crate::sampling::{in_annulus, in_disk, separated, stream, unit_phase};
use crate::scalar::{cpowi, Real, C};

/// Which determinant evaluates `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    /// `m x m` determinant indexed by `v`.
    #[default]
    V,
    /// `n x n` determinant indexed by `u`, times `(1-z)^{m-n}`.
    U,
}

/// `K^{(z)}_{n,m}(u|v)` through the `v`-indexed determinant.
pub fn k_mod<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    k_mod_via(kern, z, u, v, Form::V)
}

pub fn k_mod_via<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>], form: Form) -> Result<C<T>> {
    match form {
        Form::V => v_form(kern, z, u, v),
        Form::U => u_form(kern, z, u, v),
    }
}

fn v_form<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    let m = v.len();
    if m == 0 {
        return Ok(C::one());
    }
    let row: Vec<C<T>> = (0..m)
        .map(|j| Ok(kern.prod_f(u, &v[j..=j])? * kern.f_pt_rest(v, j)?))
        .collect::<Result<_>>()?;
    let mat = CMatrix::try_from_fn(m, m, |j, k| {
        let d = if j == k { -z } else { C::zero() };
        Ok(d + row[j] * kern.inv_h(v[j], v[k])?)
    })?;
    Ok(mat.det())
}

fn u_form<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    let (n, m) = (u.len(), v.len());
    if n != m && z == C::one() {
        return Err(Error::FormUndefined { n, m });
    }
    let pre = cpowi(C::<T>::one() - z, m as i64 - n as i64);
    if n == 0 {
        return Ok(pre);
    }
    let diag: Vec<C<T>> = (0..n).map(|j| kern.prod_f(&u[j..=j], v)).collect::<Result<_>>()?;
    let rest: Vec<C<T>> = (0..n).map(|j| kern.f_pt_rest(u, j)).collect::<Result<_>>()?;
    let mat = CMatrix::try_from_fn(n, n, |j, k| {
        let d = if j == k { diag[j] } else { C::zero() };
        Ok(d - z * rest[j] * kern.inv_h(u[j], u[k])?)
    })?;
    Ok(pre * mat.det())
}

/// Conjugated determinant: `K` with `c -> -c`.
pub fn k_conj<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    k_mod(&kern.conjugate(), z, u, v)
}

/// Ordinary Izergin determinant `h(u,v) Delta'(u) Delta(v) det[g(u_j,v_k)/h(u_j,v_k)]`.
pub fn k_ordinary<T: Real>(kern: &Kernels<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    let n = u.len();
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "ordinary Izergin determinant needs equal sizes, got {n} and {}",
            v.len()
        )));
    }
    let mat = CMatrix::try_from_fn(n, n, |j, k| Ok(kern.g(u[j], v[k])? * kern.inv_h(u[j], v[k])?))?;
    Ok(kern.prod_h(u, v) * kern.delta_prime(u)? * kern.delta(v)? * mat.det())
}

/// Sum over partitions of `v`: `sum (-z)^{|v_II|} f(u, v_I) f(v_I, v_II)`.
pub fn k_sum_over_v<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    let mut acc = C::zero();
    for p in bipartitions(v.len())? {
        let s = p.split(v);
        acc += cpowi(-z, s[1].len() as i64) * kern.prod_f(u, &s[0])? * kern.prod_f(&s[0], &s[1])?;
    }
    Ok(acc)
}

/// Sum over partitions of `u`: `(1-z)^{m-n} sum (-z)^{|u_I|} f(u_II, v) f(u_I, u_II)`.
pub fn k_sum_over_u<T: Real>(kern: &Kernels<T>, z: C<T>, u: &[C<T>], v: &[C<T>]) -> Result<C<T>> {
    let mut acc = C::<T>::zero();
    for p in bipartitions(u.len())? {
        let s = p.split(u);
        acc += cpowi(-z, s[0].len() as i64) * kern.prod_f(&s[1], v)? * kern.prod_f(&s[0], &s[1])?;
    }
    Ok(acc * cpowi(C::<T>::one() - z, v.len() as i64 - u.len() as i64))
}

/// Settings for [`verify_izergin_properties`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IzerginSuiteConfig {
    pub seed: u64,
    pub max_n: usize,
    pub draws: usize,
    pub exact_tol: f64,
    pub limit_tol: f64,
    /// Tolerance of the permutation symmetry check.
    pub symmetry_tol: f64,
}

impl Default for IzerginSuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_n: 6,
            draws: 50,
            exact_tol: 1e-9,
            limit_tol: 1e-4,
            symmetry_tol: 1e-11,
        }
    }
}

/// Largest accepted `max_n`.
pub const IZERGIN_SUITE_CAP: usize = 8;

const LARGE_ARGUMENT: f64 = 1e6;
const EPS_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy)]
enum P {
    Forms,
    Ordinary,
    Conjugate,
    Reflection,
    Symmetry,
    Polynomial,
    Shift,
    Initial,
    LimitU,
    LimitV,
    Kz,
    SumV,
    SumU,
    Exchange,
    Residue,
    Paired,
    Convolution,
}

const PROPS: [(P, &str, &str, bool); 17] = [
    (P::Forms, "form-agreement", "det_m(-z delta + f(u,v_j) f(v_j,v\\v_j)/h(v_j,v_k)) = (1-z)^(m-n) det_n(delta f(u_j,v) - z f(u_j,u\\u_j)/h(u_j,u_k))", false),
    (P::Ordinary, "ordinary-form", "K^(1)_(n,n)(u|v) = h(u,v) Delta'(u) Delta(v) det(g(u_j,v_k)/h(u_j,v_k))", false),
    (P::Conjugate, "conjugate-relation", "Kbar_(n,m)(u|v) = (1-z)^(m-n) K_(m,n)(v|u)", false),
    (P::Reflection, "reflection", "K(-u|-v) = Kbar(u|v)", false),
    (P::Symmetry, "permutation-symmetry", "K(u|v) symmetric in u and in v", false),
    (P::Polynomial, "z-polynomiality", "K^(z)_(n,m) is a polynomial of degree m in z", false),
    (P::Shift, "shift", "K(u-w|v) = K(u|v+w)", false),
    (P::Initial, "initial-conditions", "K_(n,0)(u|{}) = 1, K_(0,m)({}|v) = (1-z)^m", false),
    (P::LimitU, "limit-u-infinity", "K_(n,m)(u|v) -> K_(n-1,m)(u\\u_k|v) as u_k -> infinity", true),
    (P::LimitV, "limit-v-infinity", "K_(n,m)(u|v) -> (1-z) K_(n,m-1)(u|v\\v_k) as v_k -> infinity", true),
    (P::Kz, "kz-reduction", "K_(n+1,m+1)({u,w-c}|{v,w}) = -z K_(n,m)(u|v)", false),
    (P::SumV, "partition-expansion-v", "K(u|v) = sum (-z)^|v_II| f(u,v_I) f(v_I,v_II)", false),
    (P::SumU, "partition-expansion-u", "K(u|v) = (1-z)^(m-n) sum (-z)^|u_I| f(u_II,v) f(u_I,u_II)", false),
    (P::Exchange, "set-exchange", "K^(z)_(n,m)(u|v+c) = (-z)^n (1-z)^(m-n) K^(1/z)_(m,n)(v|u) / f(v,u)", false),
    (P::Residue, "residue", "K_(n,m) ~ g(u_n,v_m) f(u\\u_n,u_n) f(v_m,v\\v_m) K_(n-1,m-1) as u_n -> v_m", true),
    (P::Paired, "paired-limit", "K_(n+l,m+l)({u,w'}|{v,w}) / f(w',w) -> f(u,w) f(w,v) K_(n,m)(u|v) as w' -> w", true),
    (P::Convolution, "convolution", "sum z1^|v_II| K^(z2)(u|v_I) f(v_I,v_II) = K^(z2-z1)(u|v)", false),
];

fn fresh_checks(cfg: &IzerginSuiteConfig) -> Vec<Check> {
    PROPS
        .iter()
        .map(|&(p, name, anchor, is_limit)| {
            let tol = if is_limit {
                cfg.limit_tol
            } else if matches!(p, P::Symmetry) {
                cfg.symmetry_tol
            } else if matches!(p, P::Polynomial) {
                cfg.exact_tol.max(1e-8)
            } else {
                cfg.exact_tol
            };
            Check::new(name, anchor, tol)
        })
        .collect()
}

/// Runs every listed property at seeded random arguments for all
/// `0 <= n, m <= max_n`. Limits use large arguments or Richardson-extrapolated
/// small offsets and are judged against `limit_tol`.
pub fn verify_izergin_properties(cfg: &IzerginSuiteConfig) -> Result<Vec<CheckRecord>> {
    if cfg.max_n > IZERGIN_SUITE_CAP {
        return Err(Error::CapExceeded {
            what: "Izergin suite size",
            value: cfg.max_n,
            cap: IZERGIN_SUITE_CAP,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..=cfg.max_n)
        .flat_map(|n| (0..=cfg.max_n).map(move |m| (n, m)))
        .collect();
    let partial: Vec<Vec<Check>> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let mut checks = fresh_checks(cfg);
            for d in 0..cfg.draws {
                run_draw::<f64>(cfg, n, m, d, &mut checks);
            }
            checks
        })
        .collect();
    let mut total = fresh_checks(cfg);
    for part in partial {
        for (t, p) in total.iter_mut().zip(part) {
            t.absorb(p);
        }
    }
    Ok(total.into_iter().map(Check::finish).collect())
}

fn run_draw<T: Real>(cfg: &IzerginSuiteConfig, n: usize, m: usize, d: usize, ck: &mut [Check]) {
    let mut rng = stream(cfg.seed, &[n as u64, m as u64, d as u64]);
    let c: C<T> = in_annulus(&mut rng, 0.6, 1.4);
    let kern = Kernels::new(c);
    let radius = 1.0 + 0.35 * (n + m + 3) as f64;
    let pts = separated(&mut rng, n + m + 3, radius, 0.15, &[c, -c], &[]);
    let u = &pts[..n];
    let v = &pts[n..n + m];
    let (w1, w2, w3) = (pts[n + m], pts[n + m + 1], pts[n + m + 2]);
    let z: C<T> = loop {
        let z: C<T> = in_disk(&mut rng, 1.5);
        if (z - C::<T>::one()).norm() > T::lit(0.5) && z.norm() > T::lit(0.2) {
            break z;
        }
    };
    let k = |z: C<T>, u: &[C<T>], v: &[C<T>]| k_mod(&kern, z, u, v);
    let Some(base) = ck[P::Forms as usize].guard(k(z, u, v)) else {
        return;
    };

    let c0 = &mut ck[P::Forms as usize];
    if let Some(uf) = c0.guard(k_mod_via(&kern, z, u, v, Form::U)) {
        c0.compare(uf, base);
    }

    if n == m {
        let c1 = &mut ck[P::Ordinary as usize];
        if let (Some(a), Some(b)) = (c1.guard(k(C::one(), u, v)), c1.guard(k_ordinary(&kern, u, v))) {
            c1.compare(a, b);
        }
    }

    let cc = &mut ck[P::Conjugate as usize];
    if let (Some(a), Some(b)) = (cc.guard(k_conj(&kern, z, u, v)), cc.guard(k(z, v, u))) {
        cc.compare(a, cpowi(C::<T>::one() - z, m as i64 - n as i64) * b);
    }
    let cr = &mut ck[P::Reflection as usize];
    let (nu, nv): (Vec<_>, Vec<_>) = (u.iter().map(|&x| -x).collect(), v.iter().map(|&x| -x).collect());
    if let (Some(a), Some(b)) = (cr.guard(k(z, &nu, &nv)), cr.guard(k_conj(&kern, z, u, v))) {
        cr.compare(a, b);
    }

    let cs = &mut ck[P::Symmetry as usize];
    let mut pu = u.to_vec();
    let mut pv = v.to_vec();
    shuffle(&mut rng, &mut pu);
    shuffle(&mut rng, &mut pv);
    if let Some(a) = cs.guard(k(z, &pu, &pv)) {
        cs.compare(a, base);
    }

    let cp = &mut ck[P::Polynomial as usize];
    let nodes: Vec<C<T>> = (0..=m)
        .map(|j| {
            let phi = std::f64::consts::TAU * (j as f64 + 0.5) / (m + 1) as f64;
            C::new(T::lit(1.3 * phi.cos()), T::lit(1.3 * phi.sin()))
        })
        .collect();
    let vals: Option<Vec<C<T>>> = nodes.iter().map(|&zz| cp.guard(k(zz, u, v))).collect();
    if let Some(vals) = vals {
        let scale = crate::scalar::scale_of(&vals).to_f64_lossy().max(1.0);
        cp.compare_at(
            lagrange_eval(&nodes, &vals, z),
            base,
            scale.max(base.norm().to_f64_lossy()),
        );
    }

    let csh = &mut ck[P::Shift as usize];
    let w: C<T> = in_disk(&mut rng, 1.0);
    let us: Vec<C<T>> = u.iter().map(|&x| x - w).collect();
    let vs: Vec<C<T>> = v.iter().map(|&x| x + w).collect();
    if let (Some(a), Some(b)) = (csh.guard(k(z, &us, v)), csh.guard(k(z, u, &vs))) {
        csh.compare(a, b);
    }

    let ci = &mut ck[P::Initial as usize];
    if let (Some(a), Some(b)) = (ci.guard(k(z, u, &[])), ci.guard(k(z, &[], v))) {
        ci.compare(a, C::one());
        ci.compare(b, cpowi(C::<T>::one() - z, m as i64));
    }

    if n >= 1 {
        let cl = &mut ck[P::LimitU as usize];
        let j = rng_index(&mut rng, n);
        let mut big = u.to_vec();
        big[j] = unit_phase::<T>(&mut rng) * T::lit(LARGE_ARGUMENT);
        let rest: Vec<C<T>> = without(u, j);
        if let (Some(a), Some(b)) = (cl.guard(k(z, &big, v)), cl.guard(k(z, &rest, v))) {
            cl.compare(a, b);
        }
    }
    if m >= 1 {
        let cl = &mut ck[P::LimitV as usize];
        let j = rng_index(&mut rng, m);
        let mut big = v.to_vec();
        big[j] = unit_phase::<T>(&mut rng) * T::lit(LARGE_ARGUMENT);
        let rest: Vec<C<T>> = without(v, j);
        if let (Some(a), Some(b)) = (cl.guard(k(z, u, &big)), cl.guard(k(z, u, &rest))) {
            cl.compare(a, (C::<T>::one() - z) * b);
        }
    }

    let ckz = &mut ck[P::Kz as usize];
    let mut ue = u.to_vec();
    ue.push(w1 - c);
    let mut ve = v.to_vec();
    ve.push(w1);
    if let Some(a) = ckz.guard(k(z, &ue, &ve)) {
        ckz.compare(a, -z * base);
    }

    let csv = &mut ck[P::SumV as usize];
    if let Some(a) = csv.guard(k_sum_over_v(&kern, z, u, v)) {
        csv.compare(a, base);
    }
    let csu = &mut ck[P::SumU as usize];
    if let Some(a) = csu.guard(k_sum_over_u(&kern, z, u, v)) {
        csu.compare(a, base);
    }

    let cx = &mut ck[P::Exchange as usize];
    let vc: Vec<C<T>> = v.iter().map(|&x| x + c).collect();
    let rhs = || -> Result<C<T>> {
        let pre = cpowi(-z, n as i64) * cpowi(C::<T>::one() - z, m as i64 - n as i64);
        Ok(pre * k(z.inv(), v, u)? / kern.prod_f(v, u)?)
    };
    if let (Some(a), Some(b)) = (cx.guard(k(z, u, &vc)), cx.guard(rhs())) {
        cx.compare(a, b);
    }

    if n >= 1 && m >= 1 {
        let cres = &mut ck[P::Residue as usize];
        let dir = unit_phase::<T>(&mut rng);
        let vm = v[m - 1];
        let x = |eps: f64| -> Result<C<T>> {
            let mut ue = u.to_vec();
            ue[n - 1] = vm + dir * T::lit(eps);
            Ok(k(z, &ue, v)? / kern.g(ue[n - 1], vm)?)
        };
        let target = || -> Result<C<T>> {
            let un = &u[..n - 1];
            let vr = &v[..m - 1];
            Ok(kern.f_set_pt(un, vm)? * kern.f_pt_set(vm, vr)? * k(z, un, vr)?)
        };
        if let (Some(a), Some(b), Some(t)) = (
            cres.guard(x(EPS_LIMIT)),
            cres.guard(x(EPS_LIMIT / 2.0)),
            cres.guard(target()),
        ) {
            cres.compare(b * T::lit(2.0) - a, t);
        }
    }

    let cpl = &mut ck[P::Paired as usize];
    for l in 1..=2usize {
        let ws: Vec<C<T>> = [w2, w3][..l].to_vec();
        let dirs: Vec<C<T>> = (0..l).map(|_| unit_phase::<T>(&mut rng)).collect();
        let x = |eps: f64| -> Result<C<T>> {
            let wp: Vec<C<T>> = ws.iter().zip(&dirs).map(|(&w, &d)| w + d * T::lit(eps)).collect();
            let mut ue = u.to_vec();
            ue.extend_from_slice(&wp);
            let mut ve = v.to_vec();
            ve.extend_from_slice(&ws);
            Ok(k(z, &ue, &ve)? / kern.prod_f(&wp, &ws)?)
        };
        let target = || -> Result<C<T>> { Ok(kern.prod_f(u, &ws)? * kern.prod_f(&ws, v)? * base) };
        if let (Some(a), Some(b), Some(t)) = (
            cpl.guard(x(EPS_LIMIT)),
            cpl.guard(x(EPS_LIMIT / 2.0)),
            cpl.guard(target()),
        ) {
            cpl.compare(b * T::lit(2.0) - a, t);
        }
    }

    let cv = &mut ck[P::Convolution as usize];
    let z1: C<T> = in_disk(&mut rng, 1.5);
    let conv = || -> Result<C<T>> {
        let mut acc = C::zero();
        for p in bipartitions(m)? {
            let s = p.split(v);
            acc += cpowi(z1, s[1].len() as i64) * k(z, u, &s[0])? * kern.prod_f(&s[0], &s[1])?;
        }
        Ok(acc)
    };
    if let (Some(a), Some(b)) = (cv.guard(conv()), cv.guard(k(z - z1, u, v))) {
        cv.compare(a, b);
    }
}

fn without<T: Real>(xs: &[C<T>], j: usize) -> Vec<C<T>> {
    xs.iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &x)| x)
        .collect()
}

fn rng_index(rng: &mut crate::sampling::SeededRng, n: usize) -> usize {
    use rand::Rng;
    rng.gen_range(0..n)
}

fn shuffle<T>(rng: &mut crate::sampling::SeededRng, xs: &mut [T]) {
    use rand::seq::SliceRandom;
    xs.shuffle(rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c64, rel_err};

    fn pts(seed: u64, count: usize, c: C<f64>) -> Vec<C<f64>> {
        let mut rng = stream(seed, &[]);
        separated(&mut rng, count, 2.0, 0.2, &[c, -c], &[])
    }

    #[test]
    fn initial_conditions() {
        let kern = Kernels::new(c64(1.0, 0.0));
        let z = c64(0.3, 0.4);
        let u = pts(1, 3, kern.c());
        assert_eq!(k_mod(&kern, z, &u, &[]).unwrap(), c64(1.0, 0.0));
        let want = cpowi(c64(1.0, 0.0) - z, 3);
        assert!(rel_err(k_mod(&kern, z, &[], &u).unwrap(), want) < 1e-14);
        assert!(rel_err(k_mod_via(&kern, z, &[], &u, Form::U).unwrap(), want) < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let kern = Kernels::new(c64(0.8, 0.1));
        let (u, v, z) = (c64(0.3, 0.2), c64(-0.4, 0.7), c64(0.5, -0.2));
        let want = -z + kern.f(u, v).unwrap();
        for form in [Form::V, Form::U] {
            assert!(rel_err(k_mod_via(&kern, z, &[u], &[v], form).unwrap(), want) < 1e-14);
        }
        let conj = k_conj(&kern, z, &[u], &[v]).unwrap();
        assert!(rel_err(conj, -z + kern.f(v, u).unwrap()) < 1e-14);
        assert!(rel_err(k_ordinary(&kern, &[u], &[v]).unwrap(), kern.g(u, v).unwrap()) < 1e-14);
    }

    #[test]
    fn forms_agree_three_by_three() {
        let kern = Kernels::new(c64(1.0, 0.3));
        let p = pts(7, 6, kern.c());
        let z = c64(-0.4, 0.9);
        let a = k_mod_via(&kern, z, &p[..3], &p[3..], Form::V).unwrap();
        let b = k_mod_via(&kern, z, &p[..3], &p[3..], Form::U).unwrap();
        assert!(rel_err(a, b) < 1e-10);
    }

    #[test]
    fn ordinary_matches_unit_z() {
        let kern = Kernels::new(c64(1.0, 0.0));
        for n in 2..=3 {
            let p = pts(n as u64, 2 * n, kern.c());
            let a = k_ordinary(&kern, &p[..n], &p[n..]).unwrap();
            let b = k_mod(&kern, c64(1.0, 0.0), &p[..n], &p[n..]).unwrap();
            assert!(rel_err(a, b) < 1e-10);
        }
    }

    #[test]
    fn conjugate_relations_rectangular() {
        let kern = Kernels::new(c64(0.9, -0.2));
        let p = pts(21, 5, kern.c());
        let (u, v) = (&p[..2], &p[2..]);
        let z = c64(0.6, 0.5);
        let kb = k_conj(&kern, z, u, v).unwrap();
        let swapped = k_mod(&kern, z, v, u).unwrap() * (c64(1.0, 0.0) - z);
        assert!(rel_err(kb, swapped) < 1e-10);
        let nu: Vec<_> = u.iter().map(|&x| -x).collect();
        let nv: Vec<_> = v.iter().map(|&x| -x).collect();
        assert!(rel_err(k_mod(&kern, z, &nu, &nv).unwrap(), kb) < 1e-10);
    }

    #[test]
    fn u_form_undefined_at_unit_z_for_unequal_sizes() {
        let kern = Kernels::new(c64(1.0, 0.0));
        let p = pts(2, 3, kern.c());
        let r = k_mod_via(&kern, c64(1.0, 0.0), &p[..1], &p[1..], Form::U);
        assert_eq!(r, Err(Error::FormUndefined { n: 1, m: 2 }));
        assert!(k_mod(&kern, c64(1.0, 0.0), &p[..1], &p[1..]).is_ok());
    }

    #[test]
    fn zero_z_is_product() {
        let kern = Kernels::new(c64(1.0, 0.0));
        let p = pts(5, 5, kern.c());
        let a = k_mod(&kern, c64(0.0, 0.0), &p[..2], &p[2..]).unwrap();
        assert!(rel_err(a, kern.prod_f(&p[..2], &p[2..]).unwrap()) < 1e-12);
    }

    #[test]
    fn small_property_suite_passes() {
        let cfg = IzerginSuiteConfig {
            seed: 3,
            max_n: 3,
            draws: 4,
            ..Default::default()
        };
        let recs = verify_izergin_properties(&cfg).unwrap();
        assert_eq!(recs.len(), PROPS.len());
        for r in &recs {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn suite_rejects_large_sizes() {
        let cfg = IzerginSuiteConfig {
            max_n: 9,
            ..Default::default()
        };
        assert!(matches!(
            verify_izergin_properties(&cfg),
            Err(Error::CapExceeded { .. })
        ));
    }
}
