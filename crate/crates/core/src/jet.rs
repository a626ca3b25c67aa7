//! Truncated multivariate Taylor series in four variables, total degree ≤ 4.
//!
//! Used for exact Hessians of the restricted Hamiltonian and for the quartic
//! Taylor expansion that feeds the Birkhoff normal form.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

pub const NVARS: usize = 4;
pub const MAX_DEGREE: usize = 4;
/// Number of monomials of total degree ≤ 4 in four variables.
pub const NTERMS: usize = 70;

pub type Exponents = [u8; NVARS];

pub(crate) struct Tables {
    pub exps: Vec<Exponents>,
    lookup: [u16; 625],
    pub products: Vec<(u8, u8, u8)>,
    /// Start index of each homogeneous degree block.
    pub degree_start: [usize; MAX_DEGREE + 2],
}

fn key(e: &Exponents) -> usize {
    e[0] as usize * 125 + e[1] as usize * 25 + e[2] as usize * 5 + e[3] as usize
}

pub(crate) fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut exps = Vec::with_capacity(NTERMS);
        let mut degree_start = [0usize; MAX_DEGREE + 2];
        for d in 0..=MAX_DEGREE {
            degree_start[d] = exps.len();
            // Lexicographically descending within a degree.
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    for c in (0..=d - a - b).rev() {
                        let e = d - a - b - c;
                        exps.push([a as u8, b as u8, c as u8, e as u8]);
                    }
                }
            }
        }
        degree_start[MAX_DEGREE + 1] = exps.len();
        let mut lookup = [u16::MAX; 625];
        for (i, e) in exps.iter().enumerate() {
            lookup[key(e)] = i as u16;
        }
        let mut products = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                let deg: u8 = ei.iter().sum::<u8>() + ej.iter().sum::<u8>();
                if deg as usize <= MAX_DEGREE {
                    let s = [ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2], ei[3] + ej[3]];
                    products.push((i as u8, j as u8, lookup[key(&s)] as u8));
                }
            }
        }
        Tables { exps, lookup, products, degree_start }
    })
}

/// Index of a monomial, or `None` when its degree exceeds four.
pub fn monomial_index(e: Exponents) -> Option<usize> {
    if e.iter().map(|&x| x as usize).sum::<usize>() > MAX_DEGREE {
        return None;
    }
    Some(tables().lookup[key(&e)] as usize)
}

pub fn monomial_exponents(i: usize) -> Exponents {
    tables().exps[i]
}

pub fn degree_range(d: usize) -> std::ops::Range<usize> {
    let t = tables();
    t.degree_start[d]..t.degree_start[d + 1]
}

/// Dense truncated Taylor series.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet4 {
    pub c: [f64; NTERMS],
}

impl Default for Jet4 {
    fn default() -> Self {
        Jet4 { c: [0.0; NTERMS] }
    }
}

impl Jet4 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(v: f64) -> Self {
        let mut j = Self::zero();
        j.c[0] = v;
        j
    }

    /// The coordinate function `value + δx_i`.
    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        let mut e = [0u8; NVARS];
        e[i] = 1;
        j.c[monomial_index(e).unwrap()] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeff(&self, e: Exponents) -> f64 {
        monomial_index(e).map_or(0.0, |i| self.c[i])
    }

    pub fn set_coeff(&mut self, e: Exponents, v: f64) {
        let i = monomial_index(e).expect("monomial degree exceeds truncation order");
        self.c[i] = v;
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.c.iter_mut().for_each(|x| *x *= s);
        r
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn mul_jet(&self, other: &Jet4) -> Self {
        let mut r = Self::zero();
        for &(i, j, k) in &tables().products {
            let (a, b) = (self.c[i as usize], other.c[j as usize]);
            if a != 0.0 && b != 0.0 {
                r.c[k as usize] += a * b;
            }
        }
        r
    }

    /// `f(self)` given `[f(a), f'(a), …, f⁗(a)]` at the constant term `a`.
    pub fn compose(&self, d: [f64; 5]) -> Self {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let coeffs = [d[0], d[1], d[2] / 2.0, d[3] / 6.0, d[4] / 24.0];
        let mut r = Self::constant(coeffs[4]);
        for k in (0..4).rev() {
            r = r.mul_jet(&h).add_const(coeffs[k]);
        }
        r
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([s, c, s, c, s])
    }

    pub fn cosh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([c, s, c, s, c])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; 5])
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        self.compose([a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a)])
    }

    pub fn sqrt(&self) -> Self {
        let a = self.value();
        let s = a.sqrt();
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * a),
            0.375 / (s * a * a),
            -0.9375 / (s * a * a * a),
        ])
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    pub fn div_jet(&self, other: &Jet4) -> Self {
        self.mul_jet(&other.recip())
    }

    pub fn square(&self) -> Self {
        self.mul_jet(self)
    }

    /// Partial derivative with respect to variable `i` (degree drops by one).
    pub fn derivative(&self, i: usize) -> Self {
        let mut r = Self::zero();
        for (idx, e) in tables().exps.iter().enumerate() {
            if e[i] > 0 && self.c[idx] != 0.0 {
                let mut f = *e;
                f[i] -= 1;
                r.c[monomial_index(f).unwrap()] += self.c[idx] * e[i] as f64;
            }
        }
        r
    }

    pub fn gradient(&self) -> [f64; NVARS] {
        let mut g = [0.0; NVARS];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut e = [0u8; NVARS];
            e[i] = 1;
            *gi = self.coeff(e);
        }
        g
    }

    pub fn hessian(&self) -> [[f64; NVARS]; NVARS] {
        let mut h = [[0.0; NVARS]; NVARS];
        for i in 0..NVARS {
            for j in 0..NVARS {
                let mut e = [0u8; NVARS];
                e[i] += 1;
                e[j] += 1;
                let c = self.coeff(e);
                h[i][j] = if i == j { 2.0 * c } else { c };
            }
        }
        h
    }

    /// Homogeneous part of degree `d`.
    pub fn homogeneous(&self, d: usize) -> Self {
        let mut r = Self::zero();
        for i in degree_range(d) {
            r.c[i] = self.c[i];
        }
        r
    }

    pub fn eval(&self, x: [f64; NVARS]) -> f64 {
        let mut powers = [[1.0; MAX_DEGREE + 1]; NVARS];
        for v in 0..NVARS {
            for k in 1..=MAX_DEGREE {
                powers[v][k] = powers[v][k - 1] * x[v];
            }
        }
        tables()
            .exps
            .iter()
            .zip(self.c.iter())
            .map(|(e, &c)| {
                c * powers[0][e[0] as usize]
                    * powers[1][e[1] as usize]
                    * powers[2][e[2] as usize]
                    * powers[3][e[3] as usize]
            })
            .sum()
    }

    /// Substitute `x = T w`, i.e. returns `w ↦ self(T w)`.
    pub fn compose_linear(&self, t: &[[f64; NVARS]; NVARS]) -> Self {
        let vars: Vec<Jet4> = (0..NVARS)
            .map(|i| {
                let mut j = Self::zero();
                for k in 0..NVARS {
                    let mut e = [0u8; NVARS];
                    e[k] = 1;
                    j.set_coeff(e, t[i][k]);
                }
                j
            })
            .collect();
        let mut powers: Vec<Vec<Jet4>> = Vec::with_capacity(NVARS);
        for v in &vars {
            let mut p = vec![Self::constant(1.0)];
            for k in 1..=MAX_DEGREE {
                let next = p[k - 1].mul_jet(v);
                p.push(next);
            }
            powers.push(p);
        }
        let mut r = Self::zero();
        for (idx, e) in tables().exps.iter().enumerate() {
            let c = self.c[idx];
            if c == 0.0 {
                continue;
            }
            let mut term = Self::constant(c);
            for v in 0..NVARS {
                if e[v] > 0 {
                    term = term.mul_jet(&powers[v][e[v] as usize]);
                }
            }
            r = &r + &term;
        }
        r
    }

    /// Reorder variables: new variable `i` is old variable `perm[i]`.
    pub fn permute(&self, perm: [usize; NVARS]) -> Self {
        let mut r = Self::zero();
        for (idx, e) in tables().exps.iter().enumerate() {
            let mut f = [0u8; NVARS];
            for i in 0..NVARS {
                f[i] = e[perm[i]];
            }
            r.c[monomial_index(f).unwrap()] = self.c[idx];
        }
        r
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Add for &Jet4 {
    type Output = Jet4;
    fn add(self, o: &Jet4) -> Jet4 {
        let mut r = self.clone();
        r.c.iter_mut().zip(o.c.iter()).for_each(|(a, b)| *a += b);
        r
    }
}

impl Sub for &Jet4 {
    type Output = Jet4;
    fn sub(self, o: &Jet4) -> Jet4 {
        let mut r = self.clone();
        r.c.iter_mut().zip(o.c.iter()).for_each(|(a, b)| *a -= b);
        r
    }
}

impl Mul for &Jet4 {
    type Output = Jet4;
    fn mul(self, o: &Jet4) -> Jet4 {
        self.mul_jet(o)
    }
}

impl Neg for &Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}
