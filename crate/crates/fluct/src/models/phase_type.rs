//! Phase-type jump-size laws.
//!
//! A phase-type law is the absorption time of a finite-state Markov chain
//! with `m` transient phases: initial row vector `a`, subintensity matrix `T`
//! (the restriction of the intensity matrix to the transient states) and exit
//! vector `t = -T 1`. The density is `a e^{Tx} t`, the Laplace transform is
//! `a (sI - T)^{-1} t`, a rational function with poles at the eigenvalues
//! of `T`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{FluctError, Result};
use crate::poly::Poly;

/// Minimum allowed distance from an evaluation point to a pole of the
/// transform before we refuse to evaluate.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseType {
    a: Vec<f64>,
    t_mat: DMatrix<f64>,
    exit: Vec<f64>,
    eigenvalues: Vec<Complex64>,
}

impl PhaseType {
    /// Validates and builds a phase-type law from the initial distribution
    /// and subintensity rows. The exit vector is derived, never supplied.
    pub fn new(a: Vec<f64>, t_rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = a.len();
        if m == 0 {
            return Err(FluctError::validation("a", "needs at least one phase"));
        }
        if t_rows.len() != m {
            return Err(FluctError::validation(
                "T",
                format!("expected {m} rows to match a, got {}", t_rows.len()),
            ));
        }
        for (i, row) in t_rows.iter().enumerate() {
            if row.len() != m {
                return Err(FluctError::validation(
                    format!("T[{i}]"),
                    format!("expected {m} entries, got {}", row.len()),
                ));
            }
        }
        let mut sum_a = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            if !(ai >= 0.0) {
                return Err(FluctError::validation(
                    format!("a[{i}]"),
                    format!("initial probabilities must be >= 0, got {ai}"),
                ));
            }
            sum_a += ai;
        }
        if (sum_a - 1.0).abs() > 1e-12 {
            return Err(FluctError::validation(
                "a",
                format!("initial probabilities must sum to 1, got {sum_a}"),
            ));
        }
        for (i, row) in t_rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i == j && !(v < 0.0) {
                    return Err(FluctError::validation(
                        format!("T[{i}][{j}]"),
                        format!("diagonal entries must be strictly negative, got {v}"),
                    ));
                }
                if i != j && !(v >= 0.0) {
                    return Err(FluctError::validation(
                        format!("T[{i}][{j}]"),
                        format!("off-diagonal entries must be >= 0, got {v}"),
                    ));
                }
            }
        }
        let mut exit = Vec::with_capacity(m);
        for (i, row) in t_rows.iter().enumerate() {
            let rs: f64 = row.iter().sum();
            if rs > 1e-12 {
                return Err(FluctError::validation(
                    format!("T[{i}]"),
                    format!("row sum must be <= 0, got {rs}"),
                ));
            }
            exit.push((-rs).max(0.0));
        }
        if !exit.iter().any(|&t| t > 0.0) {
            return Err(FluctError::validation(
                "T",
                "at least one exit rate must be positive (no absorption possible)",
            ));
        }
        let t_mat = DMatrix::from_fn(m, m, |i, j| t_rows[i][j]);
        let eig = t_mat.complex_eigenvalues();
        let eigenvalues: Vec<Complex64> = eig.iter().map(|e| Complex64::new(e.re, e.im)).collect();
        if let Some(bad) = eigenvalues.iter().find(|e| e.re >= -1e-12) {
            return Err(FluctError::validation(
                "T",
                format!("subintensity eigenvalue {bad} does not have strictly negative real part"),
            ));
        }
        Ok(PhaseType {
            a,
            t_mat,
            exit,
            eigenvalues,
        })
    }

    /// Exponential law with the given rate (single phase).
    pub fn exponential(rate: f64) -> Result<Self> {
        PhaseType::new(vec![1.0], vec![vec![-rate]])
    }

    /// Erlang law: `k` sequential phases at the same rate.
    pub fn erlang(k: usize, rate: f64) -> Result<Self> {
        let mut a = vec![0.0; k];
        a[0] = 1.0;
        let mut rows = vec![vec![0.0; k]; k];
        for i in 0..k {
            rows[i][i] = -rate;
            if i + 1 < k {
                rows[i][i + 1] = rate;
            }
        }
        PhaseType::new(a, rows)
    }

    /// Hyperexponential mixture of exponentials.
    pub fn hyperexponential(weights: &[f64], rates: &[f64]) -> Result<Self> {
        let m = weights.len();
        let mut rows = vec![vec![0.0; m]; m];
        for i in 0..m {
            rows[i][i] = -rates[i];
        }
        PhaseType::new(weights.to_vec(), rows)
    }

    pub fn phases(&self) -> usize {
        self.a.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.a
    }

    pub fn subintensity(&self) -> &DMatrix<f64> {
        &self.t_mat
    }

    pub fn exit_rates(&self) -> &[f64] {
        &self.exit
    }

    /// Eigenvalues of the subintensity matrix (the poles of the transform).
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    fn check_pole(&self, s: Complex64) -> Result<()> {
        for &ev in &self.eigenvalues {
            let d = (s - ev).norm();
            if d <= POLE_TOL {
                return Err(FluctError::PoleEvaluation {
                    at: s,
                    eigenvalue: ev,
                    distance: d,
                });
            }
        }
        Ok(())
    }

    /// Laplace transform `a (sI - T)^{-1} t`, extended to complex `s` away
    /// from the eigenvalues of `T`.
    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        self.check_pole(s)?;
        let m = self.phases();
        let sys = DMatrix::from_fn(m, m, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(self.t_mat[(i, j)], 0.0)
        });
        let rhs = DVector::from_fn(m, |i, _| Complex64::new(self.exit[i], 0.0));
        let sol = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| FluctError::IllConditioned {
                detail: format!("singular (sI - T) at s = {s}"),
            })?;
        Ok(self
            .a
            .iter()
            .zip(sol.iter())
            .map(|(&ai, &xi)| xi * ai)
            .sum())
    }

    /// Real-axis transform value, by a real solve.
    pub fn laplace_real(&self, s: f64) -> Result<f64> {
        self.check_pole(Complex64::new(s, 0.0))?;
        let m = self.phases();
        let sys = DMatrix::from_fn(m, m, |i, j| {
            (if i == j { s } else { 0.0 }) - self.t_mat[(i, j)]
        });
        let rhs = DVector::from_fn(m, |i, _| self.exit[i]);
        let lu = sys.lu();
        let sol = lu.solve(&rhs).ok_or_else(|| FluctError::IllConditioned {
            detail: format!("singular (sI - T) at s = {s}"),
        })?;
        Ok(self.a.iter().zip(sol.iter()).map(|(&ai, &xi)| ai * xi).sum())
    }

    /// d/ds of the real-axis transform: `-a (sI - T)^{-2} t`.
    pub fn laplace_deriv_real(&self, s: f64) -> Result<f64> {
        self.check_pole(Complex64::new(s, 0.0))?;
        let m = self.phases();
        let sys = DMatrix::from_fn(m, m, |i, j| {
            (if i == j { s } else { 0.0 }) - self.t_mat[(i, j)]
        });
        let lu = sys.lu();
        let rhs = DVector::from_fn(m, |i, _| self.exit[i]);
        let w = lu.solve(&rhs).ok_or_else(|| FluctError::IllConditioned {
            detail: format!("singular (sI - T) at s = {s}"),
        })?;
        let u = lu.solve(&w).ok_or_else(|| FluctError::IllConditioned {
            detail: format!("singular (sI - T) at s = {s}"),
        })?;
        Ok(-self
            .a
            .iter()
            .zip(u.iter())
            .map(|(&ai, &xi)| ai * xi)
            .sum::<f64>())
    }

    /// Density `a e^{Tx} t` at `x >= 0`.
    pub fn density(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "phase-type density needs x >= 0");
        let e = matrix_exp(&(&self.t_mat * x));
        let m = self.phases();
        let mut out = 0.0;
        for i in 0..m {
            for j in 0..m {
                out += self.a[i] * e[(i, j)] * self.exit[j];
            }
        }
        out.max(0.0)
    }

    /// Mean jump size `a (-T)^{-1} 1`.
    pub fn mean(&self) -> f64 {
        let m = self.phases();
        let neg_t = -&self.t_mat;
        let ones = DVector::from_element(m, 1.0);
        let w = neg_t.lu().solve(&ones).expect("subintensity is invertible");
        self.a.iter().zip(w.iter()).map(|(&ai, &wi)| ai * wi).sum()
    }

    /// Numerator/denominator polynomials of the transform: `F(s) = N(s)/D(s)`
    /// with `D(s) = det(sI - T)` monic of degree m and `deg N <= m - 1`,
    /// computed by the Faddeev-LeVerrier recursion (char poly + adjugate).
    pub fn rational(&self) -> (Poly, Poly) {
        let m = self.phases();
        let a_mat = &self.t_mat;
        let mut char_coeffs = vec![0.0; m + 1];
        char_coeffs[m] = 1.0;
        let mut num_coeffs = vec![0.0; m];
        let mut mk = DMatrix::<f64>::identity(m, m);
        for k in 1..=m {
            // a M_k t is the coefficient of s^{m-k} in the numerator
            let mut amt = 0.0;
            for i in 0..m {
                for j in 0..m {
                    amt += self.a[i] * mk[(i, j)] * self.exit[j];
                }
            }
            num_coeffs[m - k] = amt;
            let amk = a_mat * &mk;
            let ck = -amk.trace() / k as f64;
            char_coeffs[m - k] = ck;
            if k < m {
                mk = amk + DMatrix::<f64>::identity(m, m) * ck;
            }
        }
        (Poly::from_real(&num_coeffs), Poly::from_real(&char_coeffs))
    }

    /// Exact jump-size sample, simulating the absorbing chain phase by phase.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.phases();
        let mut phase = sample_index(&self.a, rng);
        let mut total = 0.0;
        loop {
            let out_rate = -self.t_mat[(phase, phase)];
            total += -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / out_rate;
            // Choose the next state among transitions out of `phase`.
            let u = rng.gen::<f64>() * out_rate;
            let mut acc = self.exit[phase];
            if u < acc {
                return total;
            }
            let mut next = phase;
            for j in 0..m {
                if j == phase {
                    continue;
                }
                acc += self.t_mat[(phase, j)];
                if u < acc {
                    next = j;
                    break;
                }
            }
            phase = next;
        }
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Scaling-and-squaring matrix exponential with a truncated Taylor series.
/// Plenty of accuracy for the small (m <= 8) subintensity blocks used here.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let norm = a
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let k = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(k as i32);
    let mut term = DMatrix::<f64>::identity(m, m);
    let mut sum = DMatrix::<f64>::identity(m, m);
    for j in 1..=24 {
        term = (&term * &scaled) / j as f64;
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..k {
        out = &out * &out;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn exponential_transform_values() {
        let pt = PhaseType::exponential(2.0).unwrap();
        // Total probability mass at s = 0.
        let at0 = pt.laplace_real(0.0).unwrap();
        assert!((at0 - 1.0).abs() < 1e-14);
        // eta / (eta + s) with eta = s = 2.
        let at2 = pt.laplace_real(2.0).unwrap();
        assert!((at2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn hyperexponential_transform_matches_direct_solve() {
        let pt = PhaseType::hyperexponential(&[0.3, 0.7], &[1.0, 3.0]).unwrap();
        // Oracle: diagonal system solved by hand, 0.3/(1+s) + 2.1/(3+s) at s=1.
        let expected = 0.3 / 2.0 + 2.1 / 4.0;
        assert!((pt.laplace_real(1.0).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.675).abs() < 1e-15);
    }

    #[test]
    fn densities_at_known_points() {
        let exp2 = PhaseType::exponential(2.0).unwrap();
        assert!((exp2.density(0.0) - 2.0).abs() < 1e-12);
        assert!((exp2.density(1.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        let erl = PhaseType::erlang(2, 1.0).unwrap();
        // x e^{-x} at x = 1
        assert!((erl.density(1.0) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn density_integrates_to_one() {
        let pt = PhaseType::new(
            vec![0.4, 0.6],
            vec![vec![-2.0, 0.5], vec![0.3, -1.0]],
        )
        .unwrap();
        let span = 40.0 * pt.mean();
        let mass = integrate(&|x| pt.density(x), 0.0, span, 1e-10);
        assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
    }

    #[test]
    fn laplace_matches_quadrature_of_density() {
        let pt = PhaseType::erlang(3, 2.0).unwrap();
        for s in [0.5, 1.0, 2.0] {
            let direct = pt.laplace_real(s).unwrap();
            let span = 40.0 * pt.mean();
            let quad = integrate(&|x| (-s * x).exp() * pt.density(x), 0.0, span, 1e-10);
            assert!((direct - quad).abs() < 1e-6, "s={s}: {direct} vs {quad}");
        }
    }

    #[test]
    fn pole_evaluation_is_reported() {
        let pt = PhaseType::exponential(2.0).unwrap();
        let err = pt.laplace(Complex64::new(-2.0, 0.0)).unwrap_err();
        match err {
            FluctError::PoleEvaluation { eigenvalue, .. } => {
                assert!((eigenvalue - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
            }
            other => panic!("expected pole error, got {other}"),
        }
    }

    #[test]
    fn rational_form_agrees_with_solve() {
        let pt = PhaseType::new(
            vec![0.25, 0.75],
            vec![vec![-3.0, 1.0], vec![0.5, -2.0]],
        )
        .unwrap();
        let (n, d) = pt.rational();
        for s in [0.0, 0.7, 2.5, 10.0] {
            let via_poly = (n.eval(Complex64::new(s, 0.0)) / d.eval(Complex64::new(s, 0.0))).re;
            let direct = pt.laplace_real(s).unwrap();
            assert!((via_poly - direct).abs() < 1e-11, "s={s}");
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(PhaseType::new(vec![0.5, 0.4], vec![vec![-1.0, 0.0], vec![0.0, -1.0]]).is_err());
        assert!(PhaseType::new(vec![1.0], vec![vec![1.0]]).is_err());
        assert!(PhaseType::new(vec![0.5, 0.5], vec![vec![-1.0, 2.0], vec![0.0, -1.0]]).is_err());
        // No absorption: zero row sums.
        assert!(PhaseType::new(
            vec![0.5, 0.5],
            vec![vec![-1.0, 1.0], vec![1.0, -1.0]]
        )
        .is_err());
    }

    #[test]
    fn mean_of_erlang() {
        let pt = PhaseType::erlang(3, 2.0).unwrap();
        assert!((pt.mean() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_matches_mean() {
        use rand::SeedableRng;
        let pt = PhaseType::erlang(2, 3.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 20000;
        let mean: f64 = (0..n).map(|_| pt.sample(&mut rng)).sum::<f64>() / n as f64;
        // Erlang(2, 3) has mean 2/3 and sd sqrt(2)/3.
        let se = (2.0f64.sqrt() / 3.0) / (n as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * se, "mean {mean}");
    }
}
