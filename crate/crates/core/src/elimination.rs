//! Sum-product variable elimination over small discrete domains.
//!
//! Used for the exact height-function sums on dual graphs and for the
//! periodic quadrature of spin correlations.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul};

/// Largest intermediate table the eliminator will build.
pub const TABLE_GUARD: f64 = 6.0e7;

pub trait FactorValue: Copy + Add<Output = Self> + Mul<Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn magnitude(&self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl FactorValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl FactorValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Table over the listed variables (sorted ascending), row-major with the
/// last variable varying fastest.
#[derive(Clone, Debug)]
pub struct Factor<T> {
    pub vars: Vec<usize>,
    pub table: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct FactorGraph<T> {
    domains: Vec<usize>,
    factors: Vec<Factor<T>>,
    log_scale: f64,
}

impl<T: FactorValue> FactorGraph<T> {
    pub fn new(domains: Vec<usize>) -> Self {
        FactorGraph {
            domains,
            factors: Vec::new(),
            log_scale: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    /// Multiplies a constant into the total.
    pub fn add_constant(&mut self, c: T) {
        self.factors.push(Factor {
            vars: Vec::new(),
            table: vec![c],
        });
    }

    /// Adds a factor whose value at an assignment is `f(values of vars)`.
    pub fn add_fn<F: Fn(&[usize]) -> T>(&mut self, vars: &[usize], f: F) {
        let mut sorted: Vec<usize> = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), vars.len(), "repeated variable in factor");
        let dims: Vec<usize> = sorted.iter().map(|&v| self.domains[v]).collect();
        let size: usize = dims.iter().product();
        let pos: Vec<usize> = vars.iter().map(|v| sorted.iter().position(|s| s == v).unwrap()).collect();
        let mut table = Vec::with_capacity(size);
        let mut idx = vec![0usize; sorted.len()];
        let mut args = vec![0usize; vars.len()];
        for _ in 0..size {
            for (i, &p) in pos.iter().enumerate() {
                args[i] = idx[p];
            }
            table.push(f(&args));
            increment(&mut idx, &dims);
        }
        self.factors.push(Factor { vars: sorted, table });
    }

    fn min_degree_order(&self, keep: &[usize]) -> Vec<usize> {
        let n = self.domains.len();
        let mut adj = vec![std::collections::BTreeSet::new(); n];
        for f in &self.factors {
            for &a in &f.vars {
                for &b in &f.vars {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
        }
        let mut alive: Vec<bool> = (0..n).map(|v| !keep.contains(&v)).collect();
        let mut order = Vec::new();
        while let Some(v) = (0..n).filter(|&v| alive[v]).min_by_key(|&v| (adj[v].len(), v)) {
            alive[v] = false;
            order.push(v);
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            for &a in &nb {
                adj[a].remove(&v);
                for &b in &nb {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
            adj[v].clear();
        }
        order
    }

    fn product_sum(&self, parts: &[Factor<T>], x: Option<usize>) -> Result<Factor<T>> {
        let mut union: Vec<usize> = parts.iter().flat_map(|f| f.vars.iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let dims: Vec<usize> = union.iter().map(|&v| self.domains[v]).collect();
        let size: f64 = dims.iter().map(|&d| d as f64).product();
        if size > TABLE_GUARD {
            return Err(Error::Guard {
                what: "elimination table".into(),
                estimate: size,
                limit: TABLE_GUARD,
            });
        }
        let out_vars: Vec<usize> = union.iter().copied().filter(|&v| Some(v) != x).collect();
        let out_dims: Vec<usize> = out_vars.iter().map(|&v| self.domains[v]).collect();
        let out_size: usize = out_dims.iter().product();
        // strides of each part and of the output, expressed over the union index
        let strides_for = |vars: &[usize]| -> Vec<usize> {
            let mut s = vec![0usize; union.len()];
            let mut acc = 1;
            for &v in vars.iter().rev() {
                let p = union.iter().position(|&u| u == v).unwrap();
                s[p] = acc;
                acc *= self.domains[v];
            }
            s
        };
        let part_strides: Vec<Vec<usize>> = parts.iter().map(|f| strides_for(&f.vars)).collect();
        let out_strides = strides_for(&out_vars);
        let mut table = vec![T::zero(); out_size];
        let mut idx = vec![0usize; union.len()];
        let mut offs = vec![0usize; parts.len()];
        let total = size as usize;
        for _ in 0..total {
            let mut p = T::one();
            for (k, f) in parts.iter().enumerate() {
                p = p * f.table[offs[k]];
            }
            let o: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
            table[o] = table[o] + p;
            // advance the mixed-radix counter and the part offsets together
            let mut d = union.len();
            while d > 0 {
                d -= 1;
                idx[d] += 1;
                for (k, st) in part_strides.iter().enumerate() {
                    offs[k] += st[d];
                }
                if idx[d] < dims[d] {
                    break;
                }
                for (k, st) in part_strides.iter().enumerate() {
                    offs[k] -= st[d] * dims[d];
                }
                idx[d] = 0;
            }
        }
        Ok(Factor { vars: out_vars, table })
    }

    fn normalize(&mut self, f: &mut Factor<T>) {
        let m = f.table.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            let inv = 1.0 / m;
            for x in f.table.iter_mut() {
                *x = x.scale(inv);
            }
            self.log_scale += m.ln();
        }
    }

    /// Sums out every variable not in `keep`; returns the factor over `keep`
    /// and the log of the scale it must be multiplied by.
    pub fn eliminate(mut self, keep: &[usize]) -> Result<(Factor<T>, f64)> {
        for x in self.min_degree_order(keep) {
            let (with, without): (Vec<_>, Vec<_>) = std::mem::take(&mut self.factors)
                .into_iter()
                .partition(|f| f.vars.contains(&x));
            self.factors = without;
            let mut nf = if with.is_empty() {
                let d = self.domains[x] as f64;
                Factor {
                    vars: Vec::new(),
                    table: vec![T::one().scale(d)],
                }
            } else {
                self.product_sum(&with, Some(x))?
            };
            self.normalize(&mut nf);
            self.factors.push(nf);
        }
        let all = std::mem::take(&mut self.factors);
        let mut result = self.product_sum(&all, None)?;
        // product_sum over keep orders variables ascending; add missing kept vars as flat
        for &v in keep {
            if !result.vars.contains(&v) {
                let flat = Factor {
                    vars: vec![v],
                    table: vec![T::one(); self.domains[v]],
                };
                result = self.product_sum(&[result, flat], None)?;
            }
        }
        Ok((result, self.log_scale))
    }

    /// Sum over all assignments, as `(mantissa, log_scale)`.
    pub fn total(self) -> Result<(T, f64)> {
        let (f, s) = self.eliminate(&[])?;
        Ok((f.table[0], s))
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    let mut d = idx.len();
    while d > 0 {
        d -= 1;
        idx[d] += 1;
        if idx[d] < dims[d] {
            return;
        }
        idx[d] = 0;
    }
}
