//! Dense complex polynomials and the root machinery used by the factor
//! computations.
//!
//! Roots are found as eigenvalues of the (real) companion matrix, then
//! polished with a few Newton steps so their accuracy does not depend on the
//! last digits of the eigensolver. Near-coincident roots are merged into a
//! single root with multiplicity before residues are extracted.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FluctError, Result};

/// Pairwise distance below which roots are treated as one root with
/// multiplicity. Numeric root finders split multiple roots by about the
/// m-th root of machine epsilon, so this is deliberately loose.
pub const ROOT_CLUSTER_TOL: f64 = 1e-7;

/// Dense polynomial with complex coefficients, ascending order
/// (`coeffs[k]` multiplies `s^k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn constant(value: Complex64) -> Self {
        Poly::new(vec![value])
    }

    pub fn one() -> Self {
        Poly::constant(c(1.0))
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    /// Monic product of (s - r) over the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, c(1.0)]));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn trim(&mut self) {
        // Drop a numerically vanished leading coefficient so the degree (and
        // with it the companion dimension) reflects the true polynomial.
        let scale = self
            .coeffs
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= scale * 1e-14 || last.norm() == 0.0 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            acc = acc * s + a;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| a * c(k as f64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &a) in self.coeffs.iter().enumerate() {
            out[k] += a;
        }
        for (k, &b) in other.coeffs.iter().enumerate() {
            out[k] += b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, factor: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * factor).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// The polynomial p(-s): flips the sign of odd coefficients.
    pub fn compose_neg(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| if k % 2 == 1 { -a } else { a })
                .collect(),
        )
    }

    /// Exact synthetic division by (s - root); returns the quotient and
    /// discards the (assumed negligible) remainder.
    pub fn deflate(&self, root: Complex64) -> Poly {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly::zero();
        }
        let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut carry = self.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            q[k] = carry;
            carry = self.coeffs[k] + root * carry;
        }
        Poly { coeffs: q }
    }

    /// Coefficients of p(z0 + u) in powers of u, up to `order` (inclusive),
    /// computed by repeated Horner shifts (exact in the synthetic-division
    /// sense, no numeric differentiation).
    pub fn taylor_at(&self, z0: Complex64, order: usize) -> Vec<Complex64> {
        let n = self.coeffs.len();
        let mut b = self.coeffs.clone();
        if n == 0 {
            return vec![Complex64::new(0.0, 0.0); order + 1];
        }
        for k in 0..n.saturating_sub(1) {
            for j in (k..n - 1).rev() {
                let t = b[j + 1];
                b[j] += z0 * t;
            }
        }
        b.resize(order + 1, Complex64::new(0.0, 0.0));
        b.truncate(order + 1);
        b
    }

    /// True when every coefficient is real up to rounding noise.
    pub fn is_real(&self) -> bool {
        let scale = self
            .coeffs
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        self.coeffs.iter().all(|z| z.im.abs() <= 1e-10 * scale)
    }

    /// All complex roots (with repeats for multiple roots), via the companion
    /// matrix of the monic normalization followed by Newton polishing.
    /// Requires real coefficients.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if !self.is_real() {
            return Err(FluctError::IllConditioned {
                detail: "companion-matrix root finding expects real coefficients".into(),
            });
        }
        let n = self.degree();
        if n == 0 {
            return Ok(vec![]);
        }
        let lead = self.coeffs[n];
        // Peel off exact zero roots first; the companion matrix handles them
        // too, but deflating keeps the polish loop away from the origin.
        let mut work = self.clone();
        let mut zero_roots = 0usize;
        let scale = work.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        while !work.coeffs.is_empty() && work.coeffs[0].norm() <= 1e-14 * scale && work.degree() > 0
        {
            work.coeffs.remove(0);
            zero_roots += 1;
        }
        let m = work.degree();
        let mut roots = Vec::with_capacity(n);
        roots.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zero_roots));
        if m > 0 {
            let lead_w = work.coeffs[m];
            let mut comp = DMatrix::<f64>::zeros(m, m);
            for i in 1..m {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..m {
                comp[(i, m - 1)] = -(work.coeffs[i] / lead_w).re;
            }
            let eig = comp.complex_eigenvalues();
            let p = self.clone();
            let dp = self.derivative();
            for ev in eig.iter() {
                let z0 = Complex64::new(ev.re, ev.im);
                roots.push(polish_root(&p, &dp, z0));
            }
        }
        let _ = lead;
        symmetrize_conjugates(&mut roots);
        Ok(roots)
    }
}

/// A handful of Newton steps; keeps the better of the start and end points.
fn polish_root(p: &Poly, dp: &Poly, start: Complex64) -> Complex64 {
    let mut z = start;
    let mut best = start;
    let mut best_val = p.eval(start).norm();
    for _ in 0..24 {
        let pv = p.eval(z);
        let dv = dp.eval(z);
        if dv.norm() < 1e-300 {
            break;
        }
        let step = pv / dv;
        z -= step;
        let v = p.eval(z).norm();
        if v < best_val {
            best_val = v;
            best = z;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    best
}

/// Snaps near-real roots onto the axis and forces complex roots into exact
/// conjugate pairs (a real-coefficient polynomial guarantees the pairing; the
/// polish loop can break it in the last digits).
fn symmetrize_conjugates(roots: &mut [Complex64]) {
    for r in roots.iter_mut() {
        if r.im.abs() <= 1e-9 * (1.0 + r.norm()) {
            *r = Complex64::new(r.re, 0.0);
        }
    }
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] || roots[i].im <= 0.0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..roots.len() {
            if i == j || used[j] || roots[j].im >= 0.0 {
                continue;
            }
            let d = (roots[i] - roots[j].conj()).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            if d <= 1e-6 * (1.0 + roots[i].norm()) {
                let avg = (roots[i] + roots[j].conj()) * Complex64::new(0.5, 0.0);
                roots[i] = avg;
                roots[j] = avg.conj();
                used[i] = true;
                used[j] = true;
            }
        }
    }
}

/// Groups roots whose pairwise distance is below `tol` into a single root
/// (the cluster mean) with multiplicity.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut members = vec![seed];
        loop {
            let centroid = members.iter().sum::<Complex64>() / c(members.len() as f64);
            let mut pulled = false;
            let mut k = 0;
            while k < remaining.len() {
                if (remaining[k] - centroid).norm() < tol {
                    members.push(remaining.remove(k));
                    pulled = true;
                } else {
                    k += 1;
                }
            }
            if !pulled {
                break;
            }
        }
        let centroid = members.iter().sum::<Complex64>() / c(members.len() as f64);
        clusters.push((centroid, members.len()));
    }
    clusters.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    clusters
}

/// Power-series division num/den to the requested order, where `num` and
/// `den` are Taylor coefficient slices about the same point.
pub fn series_div(num: &[Complex64], den: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    let d0 = den[0];
    if d0.norm() < 1e-300 {
        return Err(FluctError::IllConditioned {
            detail: "series division by a vanishing leading denominator coefficient".into(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for i in 0..=order {
        let mut acc = if i < num.len() {
            num[i]
        } else {
            Complex64::new(0.0, 0.0)
        };
        for l in 1..=i {
            let dl = if l < den.len() {
                den[l]
            } else {
                Complex64::new(0.0, 0.0)
            };
            acc -= dl * out[i - l];
        }
        out[i] = acc / d0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_cubic_with_known_real_roots() {
        // (s+1)(s+2)(s+3) = s^3 + 6s^2 + 11s + 6
        let p = Poly::from_real(&[6.0, 11.0, 6.0, 1.0]);
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let expected = [-3.0, -2.0, -1.0];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r.re - e).abs() < 1e-10, "root {r} vs {e}");
            assert_eq!(r.im, 0.0);
        }
    }

    #[test]
    fn roots_come_in_conjugate_pairs() {
        // (s^2 + 2s + 5)(s + 1): roots -1 +- 2i and -1
        let p = Poly::from_real(&[5.0, 2.0, 1.0]).mul(&Poly::from_real(&[1.0, 1.0]));
        let roots = p.roots().unwrap();
        let pos: Vec<_> = roots.iter().filter(|r| r.im > 0.0).collect();
        let neg: Vec<_> = roots.iter().filter(|r| r.im < 0.0).collect();
        assert_eq!(pos.len(), 1);
        assert_eq!(neg.len(), 1);
        assert_eq!(*pos[0], neg[0].conj());
        assert!((pos[0] - cx(-1.0, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn repeated_roots_cluster() {
        // (s+1)^2 (s+2)
        let p = Poly::from_roots(&[cx(-1.0, 0.0), cx(-1.0, 0.0), cx(-2.0, 0.0)]);
        let roots = p.roots().unwrap();
        let clusters = cluster_roots(&roots, ROOT_CLUSTER_TOL);
        assert_eq!(clusters.len(), 2);
        let double = clusters.iter().find(|(_, m)| *m == 2).expect("double root");
        assert!((double.0 - cx(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn deflate_inverts_from_roots() {
        let p = Poly::from_roots(&[cx(-1.5, 0.0), cx(2.0, 1.0), cx(2.0, -1.0)]);
        let q = p.deflate(cx(-1.5, 0.0));
        // q should be (s - (2+i))(s - (2-i)) = s^2 - 4s + 5
        assert!((q.eval(cx(0.0, 0.0)) - cx(5.0, 0.0)).norm() < 1e-12);
        assert!((q.eval(cx(1.0, 0.0)) - cx(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn taylor_shift_matches_direct_expansion() {
        // p(s) = s^3 at z0 = 1: (1+u)^3 = 1 + 3u + 3u^2 + u^3
        let p = Poly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        let t = p.taylor_at(cx(1.0, 0.0), 3);
        let expected = [1.0, 3.0, 3.0, 1.0];
        for (a, e) in t.iter().zip(expected) {
            assert!((a - cx(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn series_division_reproduces_geometric_series() {
        // 1 / (1 - u) = 1 + u + u^2 + ...
        let num = [cx(1.0, 0.0)];
        let den = [cx(1.0, 0.0), cx(-1.0, 0.0)];
        let q = series_div(&num, &den, 4).unwrap();
        for a in q {
            assert!((a - cx(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_constant_term_yields_zero_root() {
        // s(s+2)
        let p = Poly::from_real(&[0.0, 2.0, 1.0]);
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - cx(-2.0, 0.0)).norm() < 1e-12);
        assert_eq!(roots[1], cx(0.0, 0.0));
    }
}
