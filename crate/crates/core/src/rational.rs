//! Rational kernels `g`, `f`, `h`, their set products, vacuum eigenvalues,
//! partition enumeration, and the rational summation / matrix identities.

use std::ops::Deref;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cpowi, Real, C};

/// Ordered list of complex parameters that every consumer treats as a set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSet<T: Real>(pub Vec<C<T>>);

impl<T: Real> ParameterSet<T> {
    pub fn new(values: Vec<C<T>>) -> Self {
        Self(values)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn values(&self) -> &[C<T>] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.0
    }

    /// The set with element `k` removed.
    pub fn without(&self, k: usize) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &z)| z)
                .collect(),
        )
    }

    pub fn shifted(&self, w: C<T>) -> Self {
        Self(self.0.iter().map(|&z| z + w).collect())
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&z| -z).collect())
    }

    pub fn union(&self, other: &[C<T>]) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        Self(v)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.select(perm)
    }
}

impl<T: Real> Deref for ParameterSet<T> {
    type Target = [C<T>];
    fn deref(&self) -> &[C<T>] {
        &self.0
    }
}

impl<T: Real> From<Vec<C<T>>> for ParameterSet<T> {
    fn from(v: Vec<C<T>>) -> Self {
        Self(v)
    }
}

impl<T: Real> FromIterator<C<T>> for ParameterSet<T> {
    fn from_iter<I: IntoIterator<Item = C<T>>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    G,
    F,
    H,
}

/// The rational kernels at a fixed crossing constant `c`.
///
/// `g(u,v) = c/(u-v)`, `f = 1 + g`, `h = f/g = (u-v+c)/c`. Evaluating `g`
/// or `f` closer than the pole guard to `u = v` is an error rather than a
/// huge number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels<T: Real> {
    c: C<T>,
    guard: T,
}

impl<T: Real> Kernels<T> {
    pub fn new(c: C<T>) -> Self {
        Self {
            c,
            guard: default_guard(),
        }
    }

    pub fn with_guard(mut self, guard: T) -> Self {
        self.guard = guard;
        self
    }

    pub fn c(&self) -> C<T> {
        self.c
    }

    pub fn guard(&self) -> T {
        self.guard
    }

    /// Kernels with `c -> -c`.
    pub fn conjugate(&self) -> Self {
        Self {
            c: -self.c,
            guard: self.guard,
        }
    }

    pub fn is_pole(&self, u: C<T>, v: C<T>) -> bool {
        let scale = T::one().max(u.norm()).max(v.norm());
        (u - v).norm() < self.guard * scale
    }

    fn check(&self, u: C<T>, v: C<T>) -> Result<()> {
        if self.is_pole(u, v) {
            Err(Error::pole(u, v))
        } else {
            Ok(())
        }
    }

    pub fn g(&self, u: C<T>, v: C<T>) -> Result<C<T>> {
        self.check(u, v)?;
        Ok(self.c / (u - v))
    }

    pub fn f(&self, u: C<T>, v: C<T>) -> Result<C<T>> {
        self.check(u, v)?;
        Ok((u - v + self.c) / (u - v))
    }

    pub fn h(&self, u: C<T>, v: C<T>) -> C<T> {
        (u - v + self.c) / self.c
    }

    /// `1 / h(u,v)`, guarded against the zero of `h` at `u = v - c`.
    pub fn inv_h(&self, u: C<T>, v: C<T>) -> Result<C<T>> {
        self.check(u + self.c, v)?;
        Ok(self.c / (u - v + self.c))
    }

    pub fn eval(&self, kernel: Kernel, u: C<T>, v: C<T>) -> Result<C<T>> {
        match kernel {
            Kernel::G => self.g(u, v),
            Kernel::F => self.f(u, v),
            Kernel::H => Ok(self.h(u, v)),
        }
    }

    /// Double product of `kernel` over `left x right`; one if either is empty.
    pub fn prod(&self, kernel: Kernel, left: &[C<T>], right: &[C<T>]) -> Result<C<T>> {
        let mut acc = C::one();
        for &u in left {
            for &v in right {
                acc *= self.eval(kernel, u, v)?;
            }
        }
        Ok(acc)
    }

    pub fn prod_g(&self, left: &[C<T>], right: &[C<T>]) -> Result<C<T>> {
        self.prod(Kernel::G, left, right)
    }

    pub fn prod_f(&self, left: &[C<T>], right: &[C<T>]) -> Result<C<T>> {
        self.prod(Kernel::F, left, right)
    }

    pub fn prod_h(&self, left: &[C<T>], right: &[C<T>]) -> C<T> {
        let mut acc = C::one();
        for &u in left {
            for &v in right {
                acc *= self.h(u, v);
            }
        }
        acc
    }

    /// `f(z, xs)`
    pub fn f_pt_set(&self, z: C<T>, xs: &[C<T>]) -> Result<C<T>> {
        self.prod_f(std::slice::from_ref(&z), xs)
    }

    /// `f(xs, z)`
    pub fn f_set_pt(&self, xs: &[C<T>], z: C<T>) -> Result<C<T>> {
        self.prod_f(xs, std::slice::from_ref(&z))
    }

    /// `f(x_k, xs \ x_k)`
    pub fn f_pt_rest(&self, xs: &[C<T>], k: usize) -> Result<C<T>> {
        let mut acc = C::one();
        for (i, &x) in xs.iter().enumerate() {
            if i != k {
                acc *= self.f(xs[k], x)?;
            }
        }
        Ok(acc)
    }

    /// `f(xs \ x_k, x_k)`
    pub fn f_rest_pt(&self, xs: &[C<T>], k: usize) -> Result<C<T>> {
        let mut acc = C::one();
        for (i, &x) in xs.iter().enumerate() {
            if i != k {
                acc *= self.f(x, xs[k])?;
            }
        }
        Ok(acc)
    }

    /// `g(x_k, xs \ x_k)`
    pub fn g_pt_rest(&self, xs: &[C<T>], k: usize) -> Result<C<T>> {
        let mut acc = C::one();
        for (i, &x) in xs.iter().enumerate() {
            if i != k {
                acc *= self.g(xs[k], x)?;
            }
        }
        Ok(acc)
    }

    /// `lambda_1(u) = c^{-N} prod (u - theta_k + c)`, computed without kernels.
    pub fn lambda1(&self, u: C<T>, theta: &[C<T>]) -> C<T> {
        theta.iter().fold(C::one(), |acc, &t| acc * (u - t + self.c) / self.c)
    }

    /// `lambda_2(u) = c^{-N} prod (u - theta_k)`.
    pub fn lambda2(&self, u: C<T>, theta: &[C<T>]) -> C<T> {
        theta.iter().fold(C::one(), |acc, &t| acc * (u - t) / self.c)
    }

    /// `Delta(v) = prod_{j<k} g(v_k, v_j)`
    pub fn delta(&self, v: &[C<T>]) -> Result<C<T>> {
        let mut acc = C::one();
        for j in 0..v.len() {
            for k in j + 1..v.len() {
                acc *= self.g(v[k], v[j])?;
            }
        }
        Ok(acc)
    }

    /// `Delta'(u) = prod_{j<k} g(u_j, u_k)`
    pub fn delta_prime(&self, u: &[C<T>]) -> Result<C<T>> {
        let mut acc = C::one();
        for j in 0..u.len() {
            for k in j + 1..u.len() {
                acc *= self.g(u[j], u[k])?;
            }
        }
        Ok(acc)
    }
}

fn default_guard<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

/// One ordered partition of the index range `0..n` into labelled parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionSpec {
    /// Membership code: digit `i` (base `parts`, element 0 most significant)
    /// is the part containing element `i`.
    pub code: u64,
    pub parts: Vec<Vec<usize>>,
}

impl PartitionSpec {
    pub fn part(&self, p: usize) -> &[usize] {
        &self.parts[p]
    }

    pub fn split<T: Real>(&self, set: &[C<T>]) -> Vec<ParameterSet<T>> {
        self.parts
            .iter()
            .map(|idx| idx.iter().map(|&i| set[i]).collect())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }
}

/// Largest set size accepted by [`enumerate_partitions`] for a given number of parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCaps {
    pub two_part: usize,
    pub three_part: usize,
    pub four_part: usize,
}

impl Default for PartitionCaps {
    fn default() -> Self {
        Self {
            two_part: 14,
            three_part: 12,
            four_part: 10,
        }
    }
}

impl PartitionCaps {
    pub fn cap(&self, parts: usize) -> usize {
        match parts {
            0 | 1 => 64,
            2 => self.two_part,
            3 => self.three_part,
            _ => self.four_part,
        }
    }
}

/// Inclusive bounds on the size of one part.
pub type SizeBounds = Option<(usize, usize)>;

/// Iterator over every ordered partition of `0..n` into `num_parts` (possibly
/// empty) parts, in increasing membership-code order.
pub struct Partitions {
    n: usize,
    num_parts: usize,
    next: u64,
    end: u64,
    bounds: Vec<SizeBounds>,
}

impl Iterator for Partitions {
    type Item = PartitionSpec;

    fn next(&mut self) -> Option<PartitionSpec> {
        while self.next < self.end {
            let code = self.next;
            self.next += 1;
            let mut parts = vec![Vec::new(); self.num_parts];
            let mut rest = code;
            let base = self.num_parts as u64;
            let mut digits = vec![0usize; self.n];
            for i in (0..self.n).rev() {
                digits[i] = (rest % base) as usize;
                rest /= base;
            }
            for (i, &d) in digits.iter().enumerate() {
                parts[d].push(i);
            }
            let ok = self
                .bounds
                .iter()
                .zip(&parts)
                .all(|(b, p)| b.is_none_or(|(lo, hi)| p.len() >= lo && p.len() <= hi));
            if ok {
                return Some(PartitionSpec { code, parts });
            }
        }
        None
    }
}

pub fn enumerate_partitions(
    n: usize,
    num_parts: usize,
    bounds: &[SizeBounds],
    caps: &PartitionCaps,
) -> Result<Partitions> {
    if num_parts == 0 {
        return Err(Error::Dimension("a partition needs at least one part".into()));
    }
    let cap = caps.cap(num_parts);
    if n > cap {
        return Err(Error::CapExceeded {
            what: "partitioned set size",
            value: n,
            cap,
        });
    }
    let end = (num_parts as u64).pow(n as u32);
    let mut b = bounds.to_vec();
    b.resize(num_parts, None);
    Ok(Partitions {
        n,
        num_parts,
        next: 0,
        end,
        bounds: b,
    })
}

/// Two-part partitions with default caps, the common case.
pub fn bipartitions(n: usize) -> Result<Partitions> {
    enumerate_partitions(n, 2, &[], &PartitionCaps::default())
}

/// Errors of the rational summation identities for one choice of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumIdentityErrors {
    pub g_over_h_left: f64,
    pub g_over_h_right: f64,
    pub g_sum: f64,
    pub omega_row_sums: f64,
}

impl SumIdentityErrors {
    pub fn max(&self) -> f64 {
        self.g_over_h_left
            .max(self.g_over_h_right)
            .max(self.g_sum)
            .max(self.omega_row_sums)
    }
}

/// Checks the three contour-integral summation formulas for `|u| = |v|` at
/// index `k` of `v`, plus `sum_j Omega_{ij}(x) = 1` for the rows of `Omega(x)`.
pub fn verify_sum_identities<T: Real>(
    kern: &Kernels<T>,
    u: &[C<T>],
    v: &[C<T>],
    k: usize,
    x: &[C<T>],
) -> Result<SumIdentityErrors> {
    if u.len() != v.len() {
        return Err(Error::Dimension("summation identities need |u| = |v|".into()));
    }
    let gamma: Vec<C<T>> = (0..u.len())
        .map(|j| Ok(kern.g_pt_rest(u, j)? / kern.prod_g(&u[j..=j], v)?))
        .collect::<Result<_>>()?;
    let vk = v[k];
    let mut s1 = C::<T>::zero();
    let mut s2 = C::<T>::zero();
    let mut s3 = C::<T>::zero();
    for (j, &uj) in u.iter().enumerate() {
        s1 += kern.g(uj, vk)? * kern.inv_h(uj, vk)? * gamma[j];
        s2 += kern.g(vk, uj)? * kern.inv_h(vk, uj)? * gamma[j];
        s3 += kern.g(vk, uj)? * gamma[j];
    }
    let vk1 = std::slice::from_ref(&vk);
    let r1 = kern.prod_h(v, vk1) / kern.prod_h(u, vk1);
    let r2 = -kern.prod_h(vk1, v) / kern.prod_h(vk1, u);
    let r3 = -C::one();
    let omega = omega_matrix(kern, x)?;
    let row_err = (0..omega.rows())
        .map(|i| {
            let s: C<T> = omega.row(i).iter().copied().sum();
            (s - C::one()).norm().to_f64_lossy()
        })
        .fold(0.0, f64::max);
    Ok(SumIdentityErrors {
        g_over_h_left: crate::scalar::rel_err(s1, r1).to_f64_lossy(),
        g_over_h_right: crate::scalar::rel_err(s2, r2).to_f64_lossy(),
        g_sum: crate::scalar::rel_err(s3, r3).to_f64_lossy(),
        omega_row_sums: row_err,
    })
}

/// `Omega_{jk}(x) = f(x \ x_k, x_k) / h(x_j, x_k)`
pub fn omega_matrix<T: Real>(kern: &Kernels<T>, x: &[C<T>]) -> Result<CMatrix<T>> {
    let n = x.len();
    let col: Vec<C<T>> = (0..n).map(|k| kern.f_rest_pt(x, k)).collect::<Result<_>>()?;
    CMatrix::try_from_fn(n, n, |j, k| Ok(col[k] * kern.inv_h(x[j], x[k])?))
}

/// The closed-form inverse: `Omega_{jk}` with `c -> -c`,
/// i.e. `f(x_k, x \ x_k) / h(x_k, x_j)`.
pub fn omega_inverse<T: Real>(kern: &Kernels<T>, x: &[C<T>]) -> Result<CMatrix<T>> {
    omega_matrix(&kern.conjugate(), x)
}

/// `max |Omega * Omega^{-1} - I|` using the closed-form inverse.
pub fn omega_inverse_check<T: Real>(kern: &Kernels<T>, x: &[C<T>]) -> Result<T> {
    let prod = &omega_matrix(kern, x)? * &omega_inverse(kern, x)?;
    Ok((&prod - &CMatrix::identity(x.len())).max_abs())
}

/// `prod_i (d_i - z)`
pub fn root_product<T: Real>(roots: &[C<T>], z: C<T>) -> C<T> {
    roots.iter().fold(C::one(), |acc, &d| acc * (d - z))
}

/// `(1 - z)^k` for signed `k`.
pub fn one_minus_pow<T: Real>(z: C<T>, k: i64) -> C<T> {
    cpowi(C::<T>::one() - z, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c64, rel_err};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn kern1() -> Kernels<f64> {
        Kernels::new(c64(1.0, 0.0))
    }

    fn rnd(rng: &mut ChaCha8Rng) -> C<f64> {
        c64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn kernels_at_unit_c() {
        let k = kern1();
        let (u, v) = (c64(2.0, 0.0), c64(1.0, 0.0));
        assert_eq!(k.g(u, v).unwrap(), c64(1.0, 0.0));
        assert_eq!(k.f(u, v).unwrap(), c64(2.0, 0.0));
        assert_eq!(k.h(u, v), c64(2.0, 0.0));
    }

    #[test]
    fn shifted_kernel_identities() {
        let k = Kernels::new(c64(0.7, -0.3));
        let c = k.c();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (u, v) = (rnd(&mut rng), rnd(&mut rng));
            assert!((k.h(u, v + c) * k.g(u, v).unwrap() - c64(1.0, 0.0)).norm() < 1e-12);
            assert!((k.f(u, v + c).unwrap() * k.f(v, u).unwrap() - c64(1.0, 0.0)).norm() < 1e-12);
            assert!((k.g(u, v - c).unwrap() * k.h(u, v) - c64(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_reflections() {
        let k = Kernels::new(c64(1.1, 0.4));
        let c = k.c();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let (u, v) = (rnd(&mut rng), rnd(&mut rng));
            for kernel in [Kernel::G, Kernel::F, Kernel::H] {
                let a = k.eval(kernel, -u, -v).unwrap();
                let b = k.eval(kernel, v, u).unwrap();
                assert!(rel_err(a, b) < 1e-12);
                let a = k.eval(kernel, u - c, v).unwrap();
                let b = k.eval(kernel, u, v + c).unwrap();
                assert!(rel_err(a, b) < 1e-12);
                let a = k.conjugate().eval(kernel, u, v).unwrap();
                assert!(rel_err(a, k.eval(kernel, v, u).unwrap()) < 1e-12);
            }
        }
    }

    #[test]
    fn pole_guard_rejects_coincidence() {
        let k = kern1();
        let u = c64(0.3, 0.1);
        assert!(matches!(k.g(u, u), Err(Error::PoleAtCoincidence { .. })));
        assert!(matches!(
            k.f(u, u + c64(1e-14, 0.0)),
            Err(Error::PoleAtCoincidence { .. })
        ));
        assert!(k.f(u, u + c64(1e-6, 0.0)).is_ok());
        assert_eq!(k.h(u, u), c64(1.0, 0.0));
    }

    #[test]
    fn set_products() {
        let k = kern1();
        let z = c64(0.2, 0.5);
        assert_eq!(k.prod_f(&[z], &[]).unwrap(), c64(1.0, 0.0));
        assert_eq!(k.prod_f(&[], &[z]).unwrap(), c64(1.0, 0.0));
        let (u1, u2, v1, v2) = (c64(0.1, 0.0), c64(0.4, 1.0), c64(-1.0, 0.3), c64(2.0, -0.5));
        assert_eq!(k.prod_f(&[u1], &[v1]).unwrap(), k.f(u1, v1).unwrap());
        let four = k.f(u1, v1).unwrap() * k.f(u1, v2).unwrap() * k.f(u2, v1).unwrap() * k.f(u2, v2).unwrap();
        assert!(rel_err(k.prod_f(&[u1, u2], &[v1, v2]).unwrap(), four) < 1e-14);
    }

    #[test]
    fn vacuum_eigenvalues() {
        let k = Kernels::new(c64(0.9, 0.2));
        let c = k.c();
        let theta = [c64(0.3, 0.1), c64(-0.4, 0.2), c64(0.9, -0.3)];
        for &t in &theta {
            assert_eq!(k.lambda2(t, &theta), c64(0.0, 0.0));
            assert!(k.lambda1(t - c, &theta).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let u = rnd(&mut rng);
            let ratio = k.lambda1(u, &theta) / k.lambda2(u, &theta);
            assert!(rel_err(ratio, k.f_pt_set(u, &theta).unwrap()) < 1e-12);
            assert!(rel_err(k.lambda1(u, &theta), k.prod_h(&[u], &theta)) < 1e-12);
            assert!(rel_err(k.lambda2(u, &theta), k.prod_g(&[u], &theta).unwrap().inv()) < 1e-12);
        }
    }

    #[test]
    fn vandermonde_like_deltas() {
        let k = kern1();
        let v = [c64(0.5, 0.0), c64(-0.2, 1.0)];
        assert_eq!(k.delta(&v[..1]).unwrap(), c64(1.0, 0.0));
        assert_eq!(k.delta(&v).unwrap(), k.g(v[1], v[0]).unwrap());
        assert_eq!(k.delta_prime(&v).unwrap(), k.g(v[0], v[1]).unwrap());
        let u = [c64(0.1, 0.2), c64(1.0, -1.0), c64(-0.7, 0.4)];
        let mut both = c64(1.0, 0.0);
        for j in 0..3 {
            for l in j + 1..3 {
                both *= k.g(u[l], u[j]).unwrap() * k.g(u[j], u[l]).unwrap();
            }
        }
        assert!(rel_err(k.delta(&u).unwrap() * k.delta_prime(&u).unwrap(), both) < 1e-14);
    }

    #[test]
    fn partition_counts() {
        let caps = PartitionCaps::default();
        assert_eq!(enumerate_partitions(2, 2, &[], &caps).unwrap().count(), 4);
        assert_eq!(enumerate_partitions(5, 2, &[Some((1, 1))], &caps).unwrap().count(), 5);
        assert_eq!(enumerate_partitions(3, 4, &[], &caps).unwrap().count(), 64);
        assert!(matches!(
            enumerate_partitions(15, 2, &[], &caps),
            Err(Error::CapExceeded { .. })
        ));
        assert!(matches!(
            enumerate_partitions(11, 4, &[], &caps),
            Err(Error::CapExceeded { .. })
        ));
        let first = enumerate_partitions(3, 2, &[], &caps).unwrap().next().unwrap();
        assert_eq!(first.parts, vec![vec![0, 1, 2], vec![]]);
    }

    #[test]
    fn omega_small_cases() {
        let k = kern1();
        let x = [c64(0.4, 0.1)];
        assert_eq!(omega_matrix(&k, &x).unwrap()[(0, 0)], c64(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<_> = (0..4).map(|_| rnd(&mut rng)).collect();
        assert!(omega_inverse_check(&k, &x).unwrap() < 1e-10);
        let x: Vec<_> = (0..5).map(|_| rnd(&mut rng)).collect();
        let om = omega_matrix(&k, &x).unwrap();
        for i in 0..5 {
            let s: C<f64> = om.row(i).iter().copied().sum();
            assert!((s - c64(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn sum_identities_single_element() {
        // N = 1: gamma = 1/g(u,v) so g(v,u) * gamma = g(v,u)/g(u,v) = -1
        let k = kern1();
        let (u, v) = (c64(0.3, 0.2), c64(-0.5, 0.9));
        let e = verify_sum_identities(&k, &[u], &[v], 0, &[u]).unwrap();
        assert!(e.max() < 1e-14);
    }

    #[test]
    fn sum_identities_random_and_shifted() {
        let k = Kernels::new(c64(1.0, 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<_> = (0..3).map(|_| rnd(&mut rng)).collect();
        let v: Vec<_> = (0..3).map(|_| rnd(&mut rng)).collect();
        for kk in 0..3 {
            assert!(verify_sum_identities(&k, &u, &v, kk, &v).unwrap().max() < 1e-10);
        }
        let shifted: Vec<_> = u.iter().map(|&z| z + c64(0.31, -0.17)).collect();
        assert!(verify_sum_identities(&k, &u, &shifted, 1, &u).unwrap().max() < 1e-10);
    }

    proptest! {
        #[test]
        fn product_is_order_independent(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..6),
            rot in 0usize..6,
        ) {
            let k = Kernels::new(c64(1.0, 0.0));
            let z: Vec<C<f64>> = pts.iter().map(|&(a, b)| c64(a, b)).collect();
            let (left, right) = z.split_at(z.len() / 2);
            let mut l2 = left.to_vec();
            l2.rotate_left(rot % left.len().max(1));
            let mut r2 = right.to_vec();
            r2.reverse();
            if let (Ok(a), Ok(b)) = (k.prod_f(left, right), k.prod_f(&l2, &r2)) {
                prop_assert!(rel_err(a, b) < 1e-12);
            }
            let a = k.prod_h(left, right);
            let b = k.prod_h(&l2, &r2);
            prop_assert!(rel_err(a, b) < 1e-12);
        }

        #[test]
        fn partitions_are_exhaustive_and_unique(n in 0usize..8, parts in 1usize..5) {
            let all: Vec<_> = enumerate_partitions(n, parts, &[], &PartitionCaps::default())
                .unwrap()
                .collect();
            prop_assert_eq!(all.len(), parts.pow(n as u32));
            let codes: HashSet<Vec<usize>> = all
                .iter()
                .map(|p| {
                    let mut member = vec![0; n];
                    for (pi, idx) in p.parts.iter().enumerate() {
                        for &i in idx { member[i] = pi; }
                    }
                    member
                })
                .collect();
            prop_assert_eq!(codes.len(), all.len());
            for p in &all {
                let mut seen: Vec<usize> = p.parts.concat();
                seen.sort();
                prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
