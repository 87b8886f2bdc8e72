//! Linear solves of the implicit stage.

use crate::surface::stencil::GHOST_WEIGHTS;
use crate::surface::HemisphereGrid;

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored with
/// `kl` extra super-diagonals for the fill-in of partial pivoting.
#[derive(Clone, Debug)]
pub(crate) struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            a: vec![0.0; n * width],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + j + self.kl - i
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.a[k] += v;
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` if a pivot vanishes.
    pub fn solve(mut self, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.a[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.a[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) {
                return None;
            }
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let (i1, i2) = (self.idx(k, c), self.idx(p, c));
                    self.a.swap(i1, i2);
                }
                b.swap(k, p);
            }
            let pivot = self.a[self.idx(k, k)];
            for r in k + 1..=last_row {
                let m = self.a[self.idx(r, k)] / pivot;
                if m == 0.0 {
                    continue;
                }
                for c in k..=last_col {
                    let v = self.a[self.idx(k, c)];
                    let i = self.idx(r, c);
                    self.a[i] -= m * v;
                }
                b[r] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=last_col {
                s -= self.a[self.idx(k, c)] * x[c];
            }
            x[k] = s / self.a[self.idx(k, k)];
        }
        Some(x)
    }
}

/// `I - dt J` for the axisymmetric principal part `c_i u_bb + d_i u_b`,
/// discretized with the same fourth-order stencils and homogeneous ghosts
/// as the right-hand side.
pub(crate) fn axisym_implicit_matrix(c: &[f64], d: &[f64], h: f64, dt: f64) -> Banded {
    let n = c.len();
    let mut m = Banded::zeros(n, 4, 2);
    let d1 = [1.0, -8.0, 0.0, 8.0, -1.0].map(|w| w / (12.0 * h));
    let d2 = [-1.0, 16.0, -30.0, 16.0, -1.0].map(|w| w / (12.0 * h * h));
    for i in 0..n {
        m.add(i, i, 1.0);
        for k in 0..5 {
            let w = -dt * (c[i] * d2[k] + d[i] * d1[k]);
            if w == 0.0 {
                continue;
            }
            // position in the extended vector, which carries two pole ghosts in front
            let e = i + k;
            if e < 2 {
                m.add(i, 2 - e, w);
            } else if e < n + 2 {
                m.add(i, e - 2, w);
            } else {
                let g = e - n - 2;
                for (j, gw) in GHOST_WEIGHTS[g].iter().enumerate() {
                    m.add(i, n - 1 - j, w * gw);
                }
            }
        }
    }
    m
}

/// Coefficients of the lagged principal operator on a full 2-D grid.
#[derive(Clone, Debug)]
pub(crate) struct Full2dOperator {
    pub grid: HemisphereGrid,
    pub dt: f64,
    /// Per node: `[c_bb, c_pp, c_bp, c_b, c_p]`; the pole rows use `c_bb` as
    /// the coefficient of the Laplacian.
    pub coef: Vec<[f64; 5]>,
}

impl Full2dOperator {
    fn principal(&self, x: &[f64], k: usize) -> f64 {
        let grid = &self.grid;
        let (nb, nx) = (grid.n_beta, grid.n_xi);
        let (hb, hx) = (grid.h_beta(), grid.h_xi());
        let (i, j) = grid.split(k);
        let c = &self.coef[k];
        if i == 0 {
            let ring: f64 = x[nx..2 * nx].iter().sum::<f64>() / nx as f64;
            return c[0] * 4.0 * (ring - x[k]) / (hb * hb);
        }
        let at = |ii: usize, jj: usize| -> f64 {
            let jj = jj % nx;
            if ii == nb {
                let e = |r: usize| x[grid.node(r, jj)];
                (-3.0 * e(nb - 1) + 6.0 * e(nb - 2) - e(nb - 3)) / 2.0
            } else {
                x[grid.node(ii, jj)]
            }
        };
        let (jm, jp) = (j + nx - 1, j + 1);
        let v = x[k];
        let ub = (at(i + 1, j) - at(i - 1, j)) / (2.0 * hb);
        let ubb = (at(i + 1, j) - 2.0 * v + at(i - 1, j)) / (hb * hb);
        let up = (at(i, jp) - at(i, jm)) / (2.0 * hx);
        let upp = (at(i, jp) - 2.0 * v + at(i, jm)) / (hx * hx);
        let ubp = (at(i + 1, jp) - at(i + 1, jm) - at(i - 1, jp) + at(i - 1, jm)) / (4.0 * hb * hx);
        c[0] * ubb + c[1] * upp + c[2] * ubp + c[3] * ub + c[4] * up
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        crate::par::map_indices(x.len(), |k| x[k] - self.dt * self.principal(x, k))
    }

    fn diagonal(&self) -> Vec<f64> {
        let grid = &self.grid;
        let (hb, hx) = (grid.h_beta(), grid.h_xi());
        (0..grid.node_count())
            .map(|k| {
                let (i, _) = grid.split(k);
                let c = &self.coef[k];
                let d = if i == 0 {
                    -4.0 * c[0] / (hb * hb)
                } else {
                    -2.0 * c[0] / (hb * hb) - 2.0 * c[1] / (hx * hx)
                };
                1.0 - self.dt * d
            })
            .collect()
    }

    /// Jacobi-preconditioned BiCGSTAB for `(I - dt L) x = b`.
    pub fn solve(&self, b: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
        let n = b.len();
        let dinv: Vec<f64> = self.diagonal().iter().map(|d| 1.0 / d).collect();
        let prec = |v: &[f64]| -> Vec<f64> { v.iter().zip(&dinv).map(|(a, d)| a * d).collect() };
        let dotp = |a: &[f64], c: &[f64]| -> f64 {
            let t: Vec<f64> = a.iter().zip(c).map(|(x, y)| x * y).collect();
            crate::par::pairwise_sum(&t)
        };
        let bnorm = dotp(b, b).sqrt();
        if bnorm == 0.0 {
            return Some(vec![0.0; n]);
        }
        let mut x = prec(b);
        let ax = self.apply(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for _ in 0..max_iter {
            let rho_new = dotp(&r0, &r);
            if rho_new == 0.0 {
                return None;
            }
            let beta = rho_new / rho * alpha / omega;
            rho = rho_new;
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
            }
            let y = prec(&p);
            v = self.apply(&y);
            alpha = rho / dotp(&r0, &v);
            let s: Vec<f64> = (0..n).map(|k| r[k] - alpha * v[k]).collect();
            if dotp(&s, &s).sqrt() < tol * bnorm {
                for k in 0..n {
                    x[k] += alpha * y[k];
                }
                return Some(x);
            }
            let z = prec(&s);
            let t = self.apply(&z);
            omega = dotp(&t, &s) / dotp(&t, &t);
            for k in 0..n {
                x[k] += alpha * y[k] + omega * z[k];
                r[k] = s[k] - omega * t[k];
            }
            let res = dotp(&r, &r).sqrt();
            if !res.is_finite() {
                return None;
            }
            if res < tol * bnorm {
                return Some(x);
            }
        }
        None
    }
}
