//! Truncated multivariate Taylor polynomials.
//!
//! Coefficients are stored per monomial in graded-lexicographic order, so
//! the monomials of total degree `< k` form a prefix that does not depend
//! on the truncation order. Every arithmetic routine visits contributing
//! pairs in the same relative order at every truncation, which makes a
//! jet of order `k` restricted to order `k-1` bit-identical to a direct
//! evaluation at order `k-1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

/// Highest supported differentiation order.
pub const MAX_ORDER: usize = 3;

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)`: monomial `i` times monomial `j` is monomial `k`.
    products: Vec<(u32, u32, u32)>,
    /// Product of factorials of the exponents (Taylor coefficient to partial).
    factorial: Vec<f64>,
}

fn graded_monomials(nvars: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for deg in 0..=order {
        let mut exps = vec![0u8; nvars];
        fill(&mut out, &mut exps, 0, deg);
    }
    out
}

// Lexicographic within a degree: first variable's exponent descending.
fn fill(out: &mut Vec<Vec<u8>>, exps: &mut [u8], pos: usize, left: usize) {
    if pos + 1 >= exps.len() {
        if let Some(last) = exps.len().checked_sub(1) {
            exps[last] = left as u8;
            out.push(exps.to_vec());
            exps[last] = 0;
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=left).rev() {
        exps[pos] = e as u8;
        fill(out, exps, pos + 1, left - e);
    }
    exps[pos] = 0;
}

impl JetSpace {
    fn new(nvars: usize, order: usize) -> Self {
        let monomials = graded_monomials(nvars, order);
        let degree: Vec<usize> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = mi.iter().zip(mj).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        let factorial = monomials
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&e| (1..=e as u32).product::<u32>() as f64)
                    .product()
            })
            .collect();
        JetSpace {
            nvars,
            order,
            monomials,
            degree,
            index,
            products,
            factorial,
        }
    }

    /// Process-wide cached space for `(nvars, order)`.
    pub fn shared(nvars: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::new(nvars, order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Number of monomials of degree at most `order`.
    pub(crate) fn prefix_len(&self, order: usize) -> usize {
        self.degree.iter().take_while(|&&d| d <= order).count()
    }

    pub(crate) fn constant(&self, c: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        v[0] = c;
        v
    }

    pub(crate) fn variable(&self, var: usize, c: f64) -> Vec<f64> {
        let mut v = self.constant(c);
        if self.order >= 1 {
            // Degree-one monomials follow the constant in variable order.
            v[1 + var] = 1.0;
        }
        v
    }

    pub(crate) fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &(i, j, k) in &self.products {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
        out
    }

    /// `f(a)` from the derivatives `f^(k)(a_0)`, `k = 0..=order`.
    pub(crate) fn compose(&self, a: &[f64], derivs: &[f64]) -> Vec<f64> {
        let mut out = self.constant(derivs[0]);
        if self.order == 0 {
            return out;
        }
        let mut delta = a.to_vec();
        delta[0] = 0.0;
        let mut power = delta.clone();
        let mut kfact = 1.0;
        for k in 1..=self.order {
            kfact *= k as f64;
            let c = derivs[k] / kfact;
            if c != 0.0 {
                for (m, p) in power.iter().enumerate() {
                    if self.degree[m] >= k {
                        out[m] += c * p;
                    }
                }
            }
            if k < self.order {
                power = self.mul(&power, &delta);
            }
        }
        out
    }
}

/// Value and partial derivatives of a scalar field at one point.
///
/// Variables are ordered `x_1..x_d, t_1..t_s`.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    d: usize,
    coeffs: Vec<f64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && self.space.nvars == other.space.nvars
            && self.space.order == other.space.order
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub(crate) fn from_parts(space: Arc<JetSpace>, d: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), space.len());
        Jet { space, d, coeffs }
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.space.nvars - self.d
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficients in graded order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial derivative for exponents over all variables (x first).
    pub fn partial_exps(&self, exps: &[u8]) -> Option<f64> {
        let i = self.space.index_of(exps)?;
        Some(self.coeffs[i] * self.space.factorial[i])
    }

    /// `D_x^beta D_t^alpha` of the field; `None` beyond the jet order.
    pub fn partial(&self, beta: &[usize], alpha: &[usize]) -> Option<f64> {
        assert_eq!(beta.len(), self.d);
        assert_eq!(alpha.len(), self.s());
        let exps: Vec<u8> = beta.iter().chain(alpha).map(|&e| e as u8).collect();
        self.partial_exps(&exps)
    }

    /// Derivative along the listed variables (repeats allowed).
    pub fn derivative(&self, vars: &[usize]) -> f64 {
        let mut exps = vec![0u8; self.space.nvars];
        for &v in vars {
            exps[v] += 1;
        }
        self.partial_exps(&exps)
            .expect("derivative order exceeds jet order")
    }

    pub fn grad(&self) -> Vec<f64> {
        assert!(self.order() >= 1, "gradient needs a first-order jet");
        self.coeffs[1..=self.space.nvars].to_vec()
    }

    pub fn grad_x(&self) -> Vec<f64> {
        let g = self.grad();
        g[..self.d].to_vec()
    }

    pub fn grad_t(&self) -> Vec<f64> {
        let g = self.grad();
        g[self.d..].to_vec()
    }

    /// Full Hessian over all variables.
    pub fn hessian(&self) -> DMatrix<f64> {
        let n = self.space.nvars;
        DMatrix::from_fn(n, n, |i, j| self.derivative(&[i, j]))
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
        let (r0, c0) = (rows.start, cols.start);
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.derivative(&[r0 + i, c0 + j])
        })
    }

    pub fn hess_xx(&self) -> DMatrix<f64> {
        self.block(0..self.d, 0..self.d)
    }

    pub fn hess_tt(&self) -> DMatrix<f64> {
        let n = self.space.nvars;
        self.block(self.d..n, self.d..n)
    }

    /// Rows indexed by x, columns by t.
    pub fn hess_xt(&self) -> DMatrix<f64> {
        let n = self.space.nvars;
        self.block(0..self.d, self.d..n)
    }

    /// All partials as `(exponents, value)` in graded order.
    pub fn partials(&self) -> impl Iterator<Item = (&[u8], f64)> + '_ {
        (0..self.space.len()).map(move |i| {
            (
                self.space.monomial(i),
                self.coeffs[i] * self.space.factorial[i],
            )
        })
    }

    /// Truncation to a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let space = JetSpace::shared(self.space.nvars, order);
        let n = self.space.prefix_len(order);
        Jet::from_parts(space, self.d, self.coeffs[..n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts_are_binomial() {
        for n in 0..5 {
            for k in 0..=MAX_ORDER {
                let space = JetSpace::new(n, k);
                let expected = (1..=k).fold(1usize, |acc, i| acc * (n + i) / i);
                assert_eq!(space.len(), expected, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lower_orders_form_a_prefix() {
        let hi = JetSpace::new(3, 3);
        for k in 0..3 {
            let lo = JetSpace::new(3, k);
            assert_eq!(&hi.monomials[..lo.len()], &lo.monomials[..]);
            assert_eq!(hi.prefix_len(k), lo.len());
        }
    }

    #[test]
    fn compose_exp_of_variable() {
        let sp = JetSpace::new(1, 3);
        let x = sp.variable(0, 0.0);
        let e = sp.compose(&x, &[1.0; 4]);
        assert_eq!(e, vec![1.0, 1.0, 0.5, 1.0 / 6.0]);
    }
}
