//! Dense construction of the monodromy matrix on the full `2^N` space.
//!
//! Site 1 is the most significant bit of a basis index and spin up is bit
//! value 0, so the vacuum is basis vector 0. Nothing in this module uses the
//! determinant formulas; it is the reference every formula is checked against.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, lagrange_eval, norm2, sort_lex, CMatrix};
use crate::params::Model;
use crate::report::{Check, CheckRecord};
use crate::sampling::{in_disk, stream};
use crate::scalar::{bits_key, scale_of, Real, C};

/// Dense operator on the chain space.
pub type OperatorMatrix<T> = CMatrix<T>;

/// An eigenvalue with its unit eigenvector.
pub type Eigenpair<T> = (C<T>, Vec<C<T>>);

pub const DEFAULT_ORACLE_CAP: usize = 10;
pub const SPECTRUM_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ket,
    Bra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    pub side: Side,
    pub data: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn norm(&self) -> T {
        norm2(&self.data)
    }
}

/// `R(u,v) = ((u-v)/c) I + P` on `C^2 (x) C^2`.
pub fn r_matrix<T: Real>(c: C<T>, u: C<T>, v: C<T>) -> CMatrix<T> {
    let x = (u - v) / c;
    CMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i >> 1, i & 1);
        let (p, q) = (j >> 1, j & 1);
        let perm = if a == q && b == p { C::one() } else { C::zero() };
        let id = if i == j { x } else { C::zero() };
        id + perm
    })
}

/// All four entries of `T(u)` and of the gauged `A T(u) B` at one spectral value.
#[derive(Debug, Clone)]
pub struct Monodromy<T: Real> {
    pub t: [[CMatrix<T>; 2]; 2],
    pub nu: [[CMatrix<T>; 2]; 2],
}

type Key = [(u64, i16, i8); 2];

/// Brute-force chain for a fixed model, with a per-chain memo of monodromy blocks.
pub struct Chain<T: Real> {
    model: Model<T>,
    dim: usize,
    memo: Mutex<HashMap<Key, Arc<Monodromy<T>>>>,
    memo_limit: usize,
}

impl<T: Real> Chain<T> {
    pub fn new(model: &Model<T>) -> Result<Self> {
        Self::with_cap(model, DEFAULT_ORACLE_CAP)
    }

    pub fn with_cap(model: &Model<T>, cap: usize) -> Result<Self> {
        let n = model.n();
        if n > cap {
            return Err(Error::CapExceeded {
                what: "oracle chain length",
                value: n,
                cap,
            });
        }
        let dim = 1usize << n;
        // eight dim x dim blocks per entry; keep the memo near 256 MiB
        let bytes = 8 * dim * dim * std::mem::size_of::<C<T>>();
        let memo_limit = ((256usize << 20) / bytes).clamp(2, 4096);
        Ok(Self {
            model: model.clone(),
            dim,
            memo: Mutex::new(HashMap::new()),
            memo_limit,
        })
    }

    pub fn model(&self) -> &Model<T> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vacuum(&self) -> Vec<C<T>> {
        let mut v = vec![C::zero(); self.dim];
        v[0] = C::one();
        v
    }

    /// Monodromy blocks at `u`, memoized by the exact bit pattern of `u`.
    pub fn monodromy(&self, u: C<T>) -> Arc<Monodromy<T>> {
        let key = bits_key(u);
        if let Some(m) = self.memo.lock().expect("memo lock").get(&key) {
            return m.clone();
        }
        let built = Arc::new(self.build(u));
        let mut memo = self.memo.lock().expect("memo lock");
        if memo.len() >= self.memo_limit {
            memo.clear();
        }
        memo.entry(key).or_insert(built).clone()
    }

    fn build(&self, u: C<T>) -> Monodromy<T> {
        let n = self.model.n();
        let dim = self.dim;
        let c = self.model.c();
        let mut t = [
            [CMatrix::identity(dim), CMatrix::zeros(dim, dim)],
            [CMatrix::zeros(dim, dim), CMatrix::identity(dim)],
        ];
        for (k, &theta) in self.model.theta().iter().enumerate() {
            let x = (u - theta) / c;
            let bit = n - 1 - k;
            // new[a][b] = x t[a][b] + sum_l (e_{la} on site k) t[l][b]
            let mut next = [
                [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)],
                [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    let out = &mut next[a][b];
                    for r in 0..dim {
                        let l = (r >> bit) & 1;
                        let src = (r & !(1 << bit)) | (a << bit);
                        let row_out = r * dim;
                        for col in 0..dim {
                            let v = x * t[a][b][(r, col)] + t[l][b][(src, col)];
                            out.as_mut_slice()[row_out + col] = v;
                        }
                    }
                }
            }
            t = next;
        }
        let dec = self.model.dec();
        let tw = self.model.twist();
        let (am, bm) = (dec.gauge_a(tw), dec.gauge_b(tw));
        let mut nu = [
            [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)],
            [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)],
        ];
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        nu[i][j].axpy(am[(i, a)] * bm[(b, j)], &t[a][b]);
                    }
                }
            }
        }
        Monodromy { t, nu }
    }

    /// `t_{ij}(u)` with 1-based indices.
    pub fn monodromy_entry(&self, i: usize, j: usize, u: C<T>) -> OperatorMatrix<T> {
        self.monodromy(u).t[i - 1][j - 1].clone()
    }

    /// `nu_{ij}(u)` with 1-based indices.
    pub fn nu_entry(&self, i: usize, j: usize, u: C<T>) -> OperatorMatrix<T> {
        self.monodromy(u).nu[i - 1][j - 1].clone()
    }

    /// `(kappa_tilde - rho1) nu_11 + (kappa - rho2) nu_22`
    pub fn transfer_matrix(&self, u: C<T>) -> OperatorMatrix<T> {
        let m = self.monodromy(u);
        let mut out = m.nu[0][0].scale(self.model.a1());
        out.axpy(self.model.a2(), &m.nu[1][1]);
        out
    }

    /// `tr(K T(u))`, independent of the gauge.
    pub fn transfer_matrix_trace(&self, u: C<T>) -> OperatorMatrix<T> {
        let m = self.monodromy(u);
        let tw = self.model.twist();
        let mut out = m.t[0][0].scale(tw.kappa_tilde);
        out.axpy(tw.kappa_plus, &m.t[1][0]);
        out.axpy(tw.kappa_minus, &m.t[0][1]);
        out.axpy(tw.kappa, &m.t[1][1]);
        out
    }

    /// Ket `prod nu_12(v_i)|0>` or bra `<0| prod nu_21(v_i)`.
    pub fn bethe_vector(&self, v: &[C<T>], side: Side) -> StateVector<T> {
        let mut x = self.vacuum();
        for &vi in v {
            let m = self.monodromy(vi);
            x = match side {
                Side::Ket => m.nu[0][1].mat_vec(&x),
                Side::Bra => m.nu[1][0].vec_mat(&x),
            };
        }
        StateVector { side, data: x }
    }

    /// `<0| nu_21(v) nu_12(u) |0>` by dense products.
    pub fn scalar_product(&self, v: &[C<T>], u: &[C<T>]) -> C<T> {
        let bra = self.bethe_vector(v, Side::Bra);
        let ket = self.bethe_vector(u, Side::Ket);
        dot(&bra.data, &ket.data)
    }

    /// Eigenvalues of the transfer matrix at `u` with unit eigenvectors,
    /// ordered lexicographically by `(re, im)`.
    pub fn spectrum(&self, u: C<T>) -> Result<Vec<Eigenpair<T>>> {
        let n = self.model.n();
        if n > SPECTRUM_CAP {
            return Err(Error::CapExceeded {
                what: "dense spectrum chain length",
                value: n,
                cap: SPECTRUM_CAP,
            });
        }
        let tm = self.transfer_matrix(u);
        let mut ev = tm.eigenvalues();
        sort_lex(&mut ev);
        Ok(ev
            .into_iter()
            .map(|l| {
                let x = tm.eigenvector(l);
                (l, x)
            })
            .collect())
    }

    /// `|| Tr(z) x - lambda x || / ||x||`
    pub fn eigen_residual(&self, z: C<T>, x: &[C<T>], lambda: C<T>) -> T {
        let tx = self.transfer_matrix(z).mat_vec(x);
        let r: Vec<C<T>> = tx.iter().zip(x).map(|(&a, &b)| a - lambda * b).collect();
        norm2(&r) / norm2(x)
    }
}

fn mat_scale<T: Real>(ms: &[&CMatrix<T>]) -> f64 {
    let v: Vec<C<T>> = ms.iter().map(|m| C::new(m.max_abs(), T::zero())).collect();
    scale_of(&v).to_f64_lossy()
}

fn compare_mats<T: Real>(ck: &mut Check, a: &CMatrix<T>, b: &CMatrix<T>) {
    let s = mat_scale(&[a, b]);
    let d = (a - b).max_abs().to_f64_lossy();
    ck.observe(d, d / s);
}

fn compare_vecs<T: Real>(ck: &mut Check, a: &[C<T>], b: &[C<T>]) {
    let s = scale_of(&[C::new(norm2(a), T::zero()), C::new(norm2(b), T::zero())]).to_f64_lossy();
    let d = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).norm().to_f64_lossy()));
    ck.observe(d, d / s);
}

/// Checks of the oracle's own algebra: intertwining, exchange relations,
/// vacuum actions, polynomial degrees, the two transfer-matrix forms and
/// commutativity. Errors are absolute, divided by the operator scale.
pub fn verify_oracle<T: Real>(model: &Model<T>, seed: u64, draws: usize, tol: f64) -> Result<Vec<CheckRecord>> {
    let chain = Chain::new(model)?;
    let n = model.n();
    let c = model.c();
    let dec = *model.dec();
    let kern = model.kern();
    let mut rng = stream(seed, &[0x0_7ac1e]);
    let spread = 1.0 + model.length_scale().to_f64_lossy();

    let mut gl2 = Check::new("r-matrix-gl2-invariance", "[R(u,v), G (x) G] = 0 for any 2x2 G", tol);
    for _ in 0..draws {
        let (u, v) = (in_disk::<T>(&mut rng, spread), in_disk::<T>(&mut rng, spread));
        let r = r_matrix(c, u, v);
        let g: CMatrix<T> = CMatrix::from_fn(2, 2, |_, _| in_disk(&mut rng, 1.5));
        let gg = CMatrix::from_fn(4, 4, |i, j| g[(i >> 1, j >> 1)] * g[(i & 1, j & 1)]);
        compare_mats(&mut gl2, &(&r * &gg), &(&gg * &r));
    }
    let mut rpt = Check::new("r-matrix-special-points", "R(u,u) = P, R(u,u-c) = I + P", tol);
    {
        let u = in_disk::<T>(&mut rng, spread);
        let p = r_matrix(c, u, u);
        let ip = r_matrix(c, u, u - c);
        compare_mats(&mut rpt, &(&ip - &p), &CMatrix::identity(4));
        let swap = CMatrix::from_fn(4, 4, |i, j| {
            if (i >> 1) == (j & 1) && (i & 1) == (j >> 1) {
                C::one()
            } else {
                C::zero()
            }
        });
        compare_mats(&mut rpt, &p, &swap);
    }

    let mut rtt = Check::new(
        "rtt-exchange",
        "[t_ij(u), t_kl(v)] = g(u,v) (t_kj(v) t_il(u) - t_kj(u) t_il(v))",
        tol,
    );
    let mut nu_comm = Check::new("nu12-commute", "[nu_12(u), nu_12(v)] = 0", tol);
    let mut tcomm = Check::new("transfer-commute", "[Tr(u), Tr(v)] = 0", tol);
    let mut tforms = Check::new(
        "transfer-two-forms",
        "tr(K T(u)) = (kappa_tilde - rho1) nu_11(u) + (kappa - rho2) nu_22(u)",
        tol,
    );
    for _ in 0..draws {
        let (u, v) = (in_disk::<T>(&mut rng, spread), in_disk::<T>(&mut rng, spread));
        let (mu_, mv) = (chain.monodromy(u), chain.monodromy(v));
        let g = match kern.g(u, v) {
            Ok(g) => g,
            Err(_) => continue,
        };
        for idx in 0..16 {
            let (i, j, k, l) = (idx >> 3, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
            let lhs = mu_.t[i][j].commutator(&mv.t[k][l]);
            let mut rhs = &mv.t[k][j] * &mu_.t[i][l];
            rhs = &rhs - &(&mu_.t[k][j] * &mv.t[i][l]);
            let rhs = rhs.scale(g);
            compare_mats(&mut rtt, &lhs, &rhs);
        }
        compare_mats(
            &mut nu_comm,
            &mu_.nu[0][1].commutator(&mv.nu[0][1]),
            &CMatrix::zeros(chain.dim, chain.dim),
        );
        let (tu, tv) = (chain.transfer_matrix(u), chain.transfer_matrix(v));
        let s = mat_scale(&[&tu, &tv]);
        let d = tu.commutator(&tv).max_abs().to_f64_lossy();
        tcomm.observe(d, d / (s * s).max(1.0));
        compare_mats(&mut tforms, &tu, &chain.transfer_matrix_trace(u));
    }

    let mut vac = Check::new(
        "vacuum-actions",
        "t_ii(u)|0> = lambda_i(u)|0>, t_21(u)|0> = 0, <0|t_ii(u) = lambda_i(u)<0|, <0|t_12(u) = 0",
        tol,
    );
    let mut vac_nu = Check::new(
        "gauged-vacuum-actions",
        "nu_11|0> = l1|0> + b2 nu_12|0>, nu_22|0> = l2|0> + b1 nu_12|0>, nu_21|0> = (b1 l1 + b2 l2)|0> + b1 b2 nu_12|0>",
        tol,
    );
    let zero = vec![C::<T>::zero(); chain.dim];
    for _ in 0..draws {
        let u = in_disk::<T>(&mut rng, spread);
        let m = chain.monodromy(u);
        let (l1, l2) = (model.lambda1(u), model.lambda2(u));
        let vac0 = chain.vacuum();
        let scaled = |s: C<T>| vac0.iter().map(|&x| x * s).collect::<Vec<_>>();
        compare_vecs(&mut vac, &m.t[0][0].mat_vec(&vac0), &scaled(l1));
        compare_vecs(&mut vac, &m.t[1][1].mat_vec(&vac0), &scaled(l2));
        compare_vecs(&mut vac, &m.t[1][0].mat_vec(&vac0), &zero);
        compare_vecs(&mut vac, &m.t[0][0].vec_mat(&vac0), &scaled(l1));
        compare_vecs(&mut vac, &m.t[1][1].vec_mat(&vac0), &scaled(l2));
        compare_vecs(&mut vac, &m.t[0][1].vec_mat(&vac0), &zero);

        let b = m.nu[0][1].mat_vec(&vac0);
        let plus = |s: C<T>, w: C<T>| -> Vec<C<T>> { vac0.iter().zip(&b).map(|(&x, &y)| x * s + y * w).collect() };
        compare_vecs(&mut vac_nu, &m.nu[0][0].mat_vec(&vac0), &plus(l1, dec.beta2));
        compare_vecs(&mut vac_nu, &m.nu[1][1].mat_vec(&vac0), &plus(l2, dec.beta1));
        compare_vecs(
            &mut vac_nu,
            &m.nu[1][0].mat_vec(&vac0),
            &plus(dec.beta1 * l1 + dec.beta2 * l2, dec.beta1 * dec.beta2),
        );
    }

    let mut deg = Check::new(
        "operator-degrees",
        "t_ii of degree N, t_ij (i != j) of degree N-1, nu_ij of degree N in u",
        tol,
    );
    for _ in 0..draws.clamp(1, 4) {
        let radius = T::lit(spread);
        let nodes = |count: usize| -> Vec<C<T>> {
            (0..count)
                .map(|k| {
                    let phi = std::f64::consts::TAU * (k as f64 + 0.25) / count as f64;
                    C::new(radius * T::lit(phi.cos()), radius * T::lit(phi.sin()))
                })
                .collect()
        };
        let probe = in_disk::<T>(&mut rng, spread);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for gauged in [false, true] {
                let d = if gauged || i == j { n } else { n - 1 };
                let xs = nodes(d + 1);
                let get = |u: C<T>| -> CMatrix<T> {
                    let m = chain.monodromy(u);
                    if gauged {
                        m.nu[i][j].clone()
                    } else {
                        m.t[i][j].clone()
                    }
                };
                let samples: Vec<CMatrix<T>> = xs.iter().map(|&x| get(x)).collect();
                let direct = get(probe);
                let interp = CMatrix::from_fn(chain.dim, chain.dim, |r, col| {
                    let vals: Vec<C<T>> = samples.iter().map(|m| m[(r, col)]).collect();
                    lagrange_eval(&xs, &vals, probe)
                });
                compare_mats(&mut deg, &interp, &direct);
                if d > 0 {
                    // one node fewer must fail to reproduce a genuine degree-d polynomial
                    let xs = nodes(d);
                    let samples: Vec<CMatrix<T>> = xs.iter().map(|&x| get(x)).collect();
                    let under = CMatrix::from_fn(chain.dim, chain.dim, |r, col| {
                        let vals: Vec<C<T>> = samples.iter().map(|m| m[(r, col)]).collect();
                        lagrange_eval(&xs, &vals, probe)
                    });
                    let gap = (&under - &direct).max_abs().to_f64_lossy() / mat_scale(&[&direct]);
                    if gap < 1e-6 {
                        deg.fail(format!("entry ({},{}) has degree below {d}", i + 1, j + 1));
                    }
                }
            }
        }
    }

    Ok(vec![
        gl2.finish(),
        rpt.finish(),
        rtt.finish(),
        nu_comm.finish(),
        tcomm.finish(),
        tforms.finish(),
        vac.finish(),
        vac_nu.finish(),
        deg.finish(),
    ])
}

/// `Tr(u)` for two gauges must agree entrywise.
pub fn gauge_independence<T: Real>(model: &Model<T>, other_rho1: C<T>, u: C<T>) -> Result<f64> {
    let a = Chain::new(model)?.transfer_matrix(u);
    let other = model.with_rho1(other_rho1)?;
    let b = Chain::new(&other)?.transfer_matrix(u);
    Ok((&a - &b).max_abs().to_f64_lossy() / mat_scale(&[&a, &b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{random_gauge, ModelParams, TwistMatrix};
    use crate::scalar::{c64, rel_err};

    pub(crate) fn model(n: usize, seed: u64) -> Model<f64> {
        let theta = [
            c64(0.3, 0.1),
            c64(-0.4, 0.2),
            c64(0.9, -0.3),
            c64(-0.1, -0.6),
            c64(0.5, 0.7),
        ];
        let tw = TwistMatrix::new(c64(2.0, 0.1), c64(1.0, -0.2), c64(1.0, 0.3), c64(3.0, -0.1));
        let mut rng = stream(seed, &[]);
        let r1 = random_gauge(&tw, &mut rng).unwrap();
        Model::new(ModelParams::new(c64(1.0, 0.0), theta[..n].to_vec(), tw, r1).unwrap()).unwrap()
    }

    #[test]
    fn r_matrix_special_points() {
        let c = c64(0.7, 0.2);
        let u = c64(0.3, -0.1);
        let p = r_matrix(c, u, u);
        assert_eq!(p[(1, 2)], c64(1.0, 0.0));
        assert_eq!(p[(0, 0)], c64(1.0, 0.0));
        assert_eq!(p[(1, 1)], c64(0.0, 0.0));
        let ip = r_matrix(c, u + c, u);
        assert!((ip[(1, 1)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((ip[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn one_site_blocks() {
        let m = model(1, 1);
        let chain = Chain::new(&m).unwrap();
        let u = c64(0.37, 0.1);
        let x = (u - m.theta()[0]) / m.c();
        let t11 = chain.monodromy_entry(1, 1, u);
        assert!((t11[(0, 0)] - (x + 1.0)).norm() < 1e-15);
        assert!((t11[(1, 1)] - x).norm() < 1e-15);
        let t12 = chain.monodromy_entry(1, 2, u);
        assert_eq!(t12[(1, 0)], c64(1.0, 0.0));
        assert_eq!(t12[(0, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn one_site_bethe_vector_by_hand() {
        let m = model(1, 2);
        let chain = Chain::new(&m).unwrap();
        let v = c64(-0.2, 0.45);
        let x = (v - m.theta()[0]) / m.c();
        let (a, b) = (m.dec().gauge_a(m.twist()), m.dec().gauge_b(m.twist()));
        let up = a[(0, 0)] * b[(0, 1)] * (x + 1.0) + a[(0, 1)] * b[(1, 1)] * x;
        let down = a[(0, 0)] * b[(1, 1)];
        let ket = chain.bethe_vector(&[v], Side::Ket);
        assert!((ket.data[0] - up).norm() < 1e-14);
        assert!((ket.data[1] - down).norm() < 1e-14);
    }

    #[test]
    fn empty_scalar_product_is_one() {
        let chain = Chain::new(&model(2, 3)).unwrap();
        assert_eq!(chain.scalar_product(&[], &[]), c64(1.0, 0.0));
        assert_eq!(chain.bethe_vector(&[], Side::Bra).data, chain.vacuum());
    }

    #[test]
    fn bethe_vector_order_independent() {
        let chain = Chain::new(&model(3, 4)).unwrap();
        let v = [c64(0.2, 0.5), c64(-0.7, 0.1), c64(0.4, -0.8)];
        let w = [v[2], v[0], v[1]];
        for side in [Side::Ket, Side::Bra] {
            let a = chain.bethe_vector(&v, side);
            let b = chain.bethe_vector(&w, side);
            let d = a
                .data
                .iter()
                .zip(&b.data)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-12 * a.norm().max(1.0));
        }
        let u = [c64(0.9, 0.3), c64(-0.3, -0.4)];
        let s1 = chain.scalar_product(&v[..2], &u);
        let s2 = chain.scalar_product(&[v[1], v[0]], &[u[1], u[0]]);
        assert!(rel_err(s1, s2) < 1e-12);
    }

    #[test]
    fn oracle_algebra_n3() {
        let m = model(3, 5);
        for r in verify_oracle(&m, 1, 4, 1e-10).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn transfer_matrix_gauge_independent() {
        let m = model(3, 6);
        let mut rng = stream(77, &[]);
        let other = random_gauge(m.twist(), &mut rng).unwrap();
        assert!(gauge_independence(&m, other, c64(0.3, -0.2)).unwrap() < 1e-10);
    }

    #[test]
    fn spectrum_trace_and_commuting_eigenvectors() {
        let m = model(3, 7);
        let chain = Chain::new(&m).unwrap();
        let (u, w) = (c64(0.21, 0.4), c64(-0.6, 0.15));
        let spec = chain.spectrum(u).unwrap();
        assert_eq!(spec.len(), 8);
        let sum: C<f64> = spec.iter().map(|(l, _)| *l).sum();
        assert!(rel_err(sum, chain.transfer_matrix(u).trace()) < 1e-9);
        for (l, x) in &spec {
            assert!(chain.eigen_residual(u, x, *l) < 1e-8 * l.norm().max(1.0));
            // same vector is an eigenvector at another spectral value
            let tx = chain.transfer_matrix(w).mat_vec(x);
            let lw = dot(&x.iter().map(|z| z.conj()).collect::<Vec<_>>(), &tx);
            assert!(chain.eigen_residual(w, x, lw) < 1e-7 * lw.norm().max(1.0));
        }
        for pair in spec.windows(2) {
            let (a, b) = (pair[0].0, pair[1].0);
            assert!(a.re < b.re || (a.re == b.re && a.im <= b.im));
        }
    }

    #[test]
    fn caps_are_enforced() {
        let m = model(3, 8);
        assert!(matches!(Chain::with_cap(&m, 2), Err(Error::CapExceeded { .. })));
    }
}
