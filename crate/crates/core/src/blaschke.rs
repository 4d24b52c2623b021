//! Finite Blaschke products, their model spaces `K_B = H^2 ⊖ B H^2`, and the
//! rescaled factorization `B(z/s) = b(z) F_s(z)`.
//!
//! All factor-level work (Taylor expansion, multiplication by `B`, the
//! co-analytic Toeplitz operator `T_{conj B}`) runs through one O(degree)
//! recurrence per factor, so nothing here materializes a dense matrix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::series::{pair, TruncatedSeries};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `z^m0 * prod_n u_n (a_n - z) / (1 - conj(a_n) z)` where `u_n = |a_n| / a_n`
/// when `normalized`, otherwise `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlaschkeJson", into = "BlaschkeJson")]
pub struct FiniteBlaschke {
    origin_multiplicity: usize,
    zeros: Vec<C64>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct BlaschkeJson {
    #[serde(default)]
    origin_multiplicity: usize,
    #[serde(default, with = "pair::vec")]
    zeros: Vec<C64>,
    #[serde(default = "default_normalized")]
    normalized: bool,
}

fn default_normalized() -> bool {
    true
}

impl TryFrom<BlaschkeJson> for FiniteBlaschke {
    type Error = Error;
    fn try_from(raw: BlaschkeJson) -> Result<Self> {
        FiniteBlaschke::new(raw.origin_multiplicity, raw.zeros, raw.normalized)
    }
}

impl From<FiniteBlaschke> for BlaschkeJson {
    fn from(b: FiniteBlaschke) -> Self {
        Self {
            origin_multiplicity: b.origin_multiplicity,
            zeros: b.zeros,
            normalized: b.normalized,
        }
    }
}

impl FiniteBlaschke {
    pub fn new(origin_multiplicity: usize, zeros: Vec<C64>, normalized: bool) -> Result<Self> {
        if origin_multiplicity + zeros.len() == 0 {
            return invalid("a Blaschke product needs degree at least 1");
        }
        for a in &zeros {
            if !a.re.is_finite() || !a.im.is_finite() {
                return invalid("Blaschke zeros must be finite");
            }
            let r = a.norm();
            if r == 0.0 {
                return invalid("zeros at the origin go in origin_multiplicity");
            }
            if r >= 1.0 {
                return invalid(format!("zero {a} is not inside the unit disc"));
            }
        }
        Ok(Self {
            origin_multiplicity,
            zeros,
            normalized,
        })
    }

    /// `z^m`.
    pub fn z_power(m: usize) -> Result<Self> {
        Self::new(m, Vec::new(), true)
    }

    /// Normalized product over the given zeros (no origin zeros).
    pub fn from_zeros(zeros: &[C64]) -> Result<Self> {
        Self::new(0, zeros.to_vec(), true)
    }

    /// The disc automorphism `(a - z) / (1 - conj(a) z)` without the
    /// unimodular constant.
    pub fn automorphism(a: C64) -> Result<Self> {
        Self::new(0, vec![a], false)
    }

    pub fn degree(&self) -> usize {
        self.origin_multiplicity + self.zeros.len()
    }

    pub fn origin_multiplicity(&self) -> usize {
        self.origin_multiplicity
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Every zero with multiplicity, origin zeros first.
    pub fn all_zeros(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.origin_multiplicity];
        out.extend_from_slice(&self.zeros);
        out
    }

    pub fn max_zero_modulus(&self) -> f64 {
        self.zeros.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `true` when `B = c z^m`, i.e. multiplication by `B` maps polynomials
    /// to polynomials.
    pub fn is_monomial(&self) -> bool {
        self.zeros.is_empty()
    }

    fn unimodular(&self, a: C64) -> C64 {
        if self.normalized {
            a.norm() / a
        } else {
            ONE
        }
    }

    /// Product with another finite Blaschke product. Normalization must agree.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.normalized != other.normalized && !(self.zeros.is_empty() || other.zeros.is_empty())
        {
            return invalid("cannot multiply Blaschke products with different normalizations");
        }
        let normalized = if self.zeros.is_empty() {
            other.normalized
        } else {
            self.normalized
        };
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        Self::new(
            self.origin_multiplicity + other.origin_multiplicity,
            zeros,
            normalized,
        )
    }

    /// `B^k` for `k >= 1`.
    pub fn power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("power must be at least 1");
        }
        let mut zeros = Vec::with_capacity(self.zeros.len() * k);
        for _ in 0..k {
            zeros.extend_from_slice(&self.zeros);
        }
        Self::new(self.origin_multiplicity * k, zeros, self.normalized)
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return invalid("evaluation point must be finite");
        }
        let mut value = z.powu(self.origin_multiplicity as u32);
        for &a in &self.zeros {
            let den = ONE - a.conj() * z;
            if den.norm() <= 1e-14 {
                return invalid(format!("{z} is a pole of the Blaschke product"));
            }
            value *= self.unimodular(a) * (a - z) / den;
        }
        Ok(value)
    }

    /// Taylor coefficients of `B` at the origin through `degree`.
    pub fn taylor(&self, degree: usize) -> TruncatedSeries {
        self.mul_series(&TruncatedSeries::constant(ONE, degree), degree)
    }

    /// Taylor coefficients of `z -> B(c z)`; `c` may exceed 1 as long as the
    /// poles `1 / (c conj(a_n))` stay outside the closed unit disc.
    pub fn taylor_scaled(&self, c: f64, degree: usize) -> TruncatedSeries {
        let mut f = TruncatedSeries::constant(ONE, degree).into_coeffs();
        let cm = c.powi(self.origin_multiplicity as i32);
        f = shift_coeffs(&f, self.origin_multiplicity);
        for v in f.iter_mut() {
            *v *= cm;
        }
        for &a in &self.zeros {
            apply_factor(&mut f, a, c, self.unimodular(a));
        }
        TruncatedSeries::from_vec(f)
    }

    /// `B * f` truncated at `out_degree`.
    pub fn mul_series(&self, f: &TruncatedSeries, out_degree: usize) -> TruncatedSeries {
        let mut coeffs = shift_coeffs(f.resize(out_degree).coeffs(), self.origin_multiplicity);
        for &a in &self.zeros {
            apply_factor(&mut coeffs, a, 1.0, self.unimodular(a));
        }
        TruncatedSeries::from_vec(coeffs)
    }

    /// `T_{conj B} f = P_+(conj(B) f)`. Exact for the polynomial `f`; the
    /// degree is preserved.
    pub fn conj_toeplitz_apply(&self, f: &TruncatedSeries) -> TruncatedSeries {
        let mut g = f.coeffs().to_vec();
        let n = g.len();
        for _ in 0..self.origin_multiplicity {
            g.rotate_left(1);
            g[n - 1] = ZERO;
        }
        for &a in &self.zeros {
            let u = self.unimodular(a).conj();
            let scale = a.norm_sqr() - 1.0;
            // tail_j = sum_{m > j} a^{m-j-1} g_m
            let mut tail = ZERO;
            for j in (0..n).rev() {
                let gj = g[j];
                g[j] = u * (a.conj() * gj + scale * tail);
                tail = gj + a * tail;
            }
        }
        TruncatedSeries::from_vec(g)
    }

    /// Maximum of `|B|` on the circle `|z| = s`.
    pub fn sup_on_circle(&self, s: f64) -> Result<f64> {
        self.sup_on_circle_with_grid(s, 4096)
    }

    /// Grid search followed by golden-section refinement around the best
    /// grid point.
    pub fn sup_on_circle_with_grid(&self, s: f64, grid: usize) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return invalid(format!("radius must lie in (0, 1), got {s}"));
        }
        let grid = grid.max(8);
        let modulus = |t: f64| -> f64 {
            // |z| = s < 1 is never a pole.
            self.eval(C64::from_polar(s, t))
                .map(|v| v.norm())
                .unwrap_or(f64::NAN)
        };
        let step = std::f64::consts::TAU / grid as f64;
        let (best_idx, best) = (0..grid).map(|i| (i, modulus(i as f64 * step))).fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
        let refined = golden_max(
            &modulus,
            (best_idx as f64 - 1.0) * step,
            (best_idx as f64 + 1.0) * step,
        );
        Ok(best.max(refined))
    }

    /// Orthonormal basis of `K_B`, truncated at `degree`.
    pub fn model_space_basis(&self, degree: usize) -> Result<ModelSpaceBasis> {
        ModelSpaceBasis::new(self.clone(), degree)
    }

    /// `B(z/s) = b(z) F_s(z)` with `b` the Blaschke product with zeros `s a_n`.
    pub fn scaled_factorization(&self, s: f64, degree: usize) -> Result<ScaledFactorization> {
        ScaledFactorization::new(self, s, degree)
    }
}

fn shift_coeffs(f: &[C64], k: usize) -> Vec<C64> {
    let n = f.len();
    let mut out = vec![ZERO; n];
    if k < n {
        out[k..].copy_from_slice(&f[..n - k]);
    }
    out
}

/// In place `f <- u (a - c z) / (1 - conj(a) c z) * f`, truncated.
fn apply_factor(f: &mut [C64], a: C64, c: f64, u: C64) {
    let r = a.conj() * c;
    let mut prev_y = ZERO;
    for v in f.iter_mut() {
        let y = *v + r * prev_y;
        *v = u * (a * y - c * prev_y);
        prev_y = y;
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Takenaka–Malmquist–Walsh basis of `K_B`:
/// `e_k = sqrt(1 - |w_k|^2) / (1 - conj(w_k) z) * prod_{j<k} beta_j(z)`,
/// with zeros `w_k` ordered origin first, `beta_j = z` for an origin zero and
/// the normalized automorphism otherwise.
#[derive(Debug, Clone)]
pub struct ModelSpaceBasis {
    source: FiniteBlaschke,
    degree: usize,
    basis: Vec<TruncatedSeries>,
}

impl ModelSpaceBasis {
    fn new(source: FiniteBlaschke, degree: usize) -> Result<Self> {
        if degree < source.degree() {
            return precondition(format!(
                "working degree {degree} is below deg B = {}",
                source.degree()
            ));
        }
        let zeros = source.all_zeros();
        let mut basis = Vec::with_capacity(zeros.len());
        let mut partial = TruncatedSeries::constant(ONE, degree).into_coeffs();
        for &w in &zeros {
            let mut e = partial.clone();
            // divide by (1 - conj(w) z) and scale
            let mut prev = ZERO;
            let norm = (1.0 - w.norm_sqr()).sqrt();
            for v in e.iter_mut() {
                let y = *v + w.conj() * prev;
                prev = y;
                *v = y;
            }
            for v in e.iter_mut() {
                *v *= norm;
            }
            basis.push(TruncatedSeries::from_vec(e));
            if w == ZERO {
                partial = shift_coeffs(&partial, 1);
            } else {
                apply_factor(&mut partial, w, 1.0, w.norm() / w);
            }
        }
        Ok(Self {
            source,
            degree,
            basis,
        })
    }

    pub fn source(&self) -> &FiniteBlaschke {
        &self.source
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &[TruncatedSeries] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `<f, e_j>_{H^2}` for each basis element. Exact when `deg f <= degree`.
    pub fn coords(&self, f: &TruncatedSeries) -> Vec<C64> {
        self.basis.iter().map(|e| f.inner_h2(e)).collect()
    }

    /// `sum_j c_j e_j` at the basis degree.
    pub fn combine(&self, coords: &[C64]) -> TruncatedSeries {
        let mut out = vec![ZERO; self.degree + 1];
        for (c, e) in coords.iter().zip(&self.basis) {
            for (o, v) in out.iter_mut().zip(e.coeffs()) {
                *o += c * v;
            }
        }
        TruncatedSeries::from_vec(out)
    }
}

/// `B(z/s) = b(z) F_s(z)` for `s` with every zero of `B` inside `s D`.
#[derive(Debug, Clone)]
pub struct ScaledFactorization {
    pub b: FiniteBlaschke,
    pub f_s: TruncatedSeries,
    pub s: f64,
    /// Max coefficient gap between `taylor(B(z/s))` and `taylor(b) * F_s`.
    pub product_residual: f64,
    /// Minimum of `|F_s|` over a polar grid of the closed disc.
    pub min_modulus: f64,
}

impl ScaledFactorization {
    fn new(source: &FiniteBlaschke, s: f64, degree: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return invalid(format!("s must lie in (0, 1), got {s}"));
        }
        if source.max_zero_modulus() >= s {
            return precondition(format!(
                "zero of modulus {} lies outside the disc of radius {s}",
                source.max_zero_modulus()
            ));
        }
        let b = FiniteBlaschke::new(
            source.origin_multiplicity,
            source.zeros.iter().map(|a| a * s).collect(),
            source.normalized,
        )?;
        // Closed form F_s = s^{-m0} prod_n (1/s)(1 - s conj(a) z) / (1 - conj(a) z / s).
        // Power-series long division by taylor(b) would be unstable: 1/b has
        // poles inside the disc.
        let mut f = TruncatedSeries::constant(
            C64::new(s.powi(-(source.origin_multiplicity as i32)), 0.0),
            degree,
        );
        for &a in &source.zeros {
            let num =
                TruncatedSeries::new(vec![C64::new(1.0 / s, 0.0), -a.conj()]).expect("finite");
            let den = TruncatedSeries::geometric(a.conj() / s, degree);
            f = f.mul(&num.mul(&den, degree), degree);
        }
        let target = source.taylor_scaled(1.0 / s, degree);
        let product = b.taylor(degree).mul(&f, degree);
        let product_residual = target.max_abs_diff(&product);
        if !product_residual.is_finite() {
            return Err(Error::Numeric(
                "scaled factorization produced non-finite values".into(),
            ));
        }
        let mut min_modulus = f64::INFINITY;
        for ri in 0..=8 {
            let r = ri as f64 / 8.0;
            for ti in 0..256 {
                let z = C64::from_polar(r, ti as f64 * std::f64::consts::TAU / 256.0);
                min_modulus = min_modulus.min(f.eval(z)?.norm());
            }
        }
        Ok(Self {
            b,
            f_s: f,
            s,
            product_residual,
            min_modulus,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn gram_defect(basis: &[TruncatedSeries]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner_h2(b) - target).norm());
            }
        }
        worst
    }

    #[test]
    fn rejects_bad_zeros() {
        assert!(FiniteBlaschke::new(0, vec![], true).is_err());
        assert!(FiniteBlaschke::new(0, vec![c(1.0, 0.0)], true).is_err());
        assert!(FiniteBlaschke::new(0, vec![c(0.0, 0.0)], true).is_err());
        assert!(FiniteBlaschke::new(1, vec![c(0.3, 0.99)], true).is_err());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let b: FiniteBlaschke =
            serde_json::from_str(r#"{"origin_multiplicity":2,"zeros":[]}"#).unwrap();
        assert_eq!(b, FiniteBlaschke::z_power(2).unwrap());
        let b = FiniteBlaschke::new(1, vec![c(0.5, -0.1)], false).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(
            text,
            r#"{"origin_multiplicity":1,"zeros":[[0.5,-0.1]],"normalized":false}"#
        );
        assert_eq!(serde_json::from_str::<FiniteBlaschke>(&text).unwrap(), b);
        assert!(serde_json::from_str::<FiniteBlaschke>(r#"{"zeros":[[2,0]]}"#).is_err());
    }

    #[test]
    fn eval_basic_values() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0)]).unwrap();
        assert_abs_diff_eq!(b.eval(c(0.0, 0.0)).unwrap().re, 0.5, epsilon = 1e-15);
        let b = FiniteBlaschke::new(1, vec![c(0.2, 0.4), c(-0.6, 0.1)], true).unwrap();
        for &a in b.zeros() {
            assert!(b.eval(a).unwrap().norm() < 1e-15);
        }
        assert!(b.eval(c(0.2, 0.4).inv().conj()).is_err());
    }

    #[test]
    fn unimodular_on_circle() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.0, -0.3)]).unwrap();
        let z = C64::from_polar(1.0, std::f64::consts::PI / 7.0);
        assert!((b.eval(z).unwrap().norm() - 1.0).abs() < 1e-12);
        let b =
            FiniteBlaschke::new(2, vec![c(0.9, 0.0), c(-0.2, 0.7), c(0.1, 0.1)], false).unwrap();
        for k in 0..512 {
            let z = C64::from_polar(1.0, k as f64 * std::f64::consts::TAU / 512.0);
            assert!((b.eval(z).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn taylor_of_monomial_and_automorphism() {
        let b = FiniteBlaschke::z_power(2).unwrap();
        assert_eq!(
            b.taylor(4),
            TruncatedSeries::from_real(&[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap()
        );
        // (0.5 - z) * sum (0.5 z)^k
        let phi = FiniteBlaschke::automorphism(c(0.5, 0.0)).unwrap();
        let t = phi.taylor(3);
        let expected = [0.5, -0.75, -0.375, -0.1875];
        for (k, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(t.coeffs()[k].re, *e, epsilon = 1e-15);
            assert_eq!(t.coeffs()[k].im, 0.0);
        }
    }

    #[test]
    fn taylor_matches_evaluation() {
        let b =
            FiniteBlaschke::new(1, vec![c(0.5, 0.0), c(0.0, -0.3), c(-0.4, 0.4)], true).unwrap();
        let series = b.taylor(60);
        for z in [c(0.3, 0.0), c(-0.1, 0.25), c(0.0, -0.3)] {
            assert!((series.eval(z).unwrap() - b.eval(z).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn taylor_scaled_matches_evaluation() {
        let b = FiniteBlaschke::from_zeros(&[c(0.3, 0.2), c(-0.1, 0.0)]).unwrap();
        let s = 0.6;
        let series = b.taylor_scaled(1.0 / s, 80);
        let z = c(0.4, -0.3);
        assert!((series.eval(z).unwrap() - b.eval(z / s).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn conj_toeplitz_matches_dense_definition() {
        let b = FiniteBlaschke::new(1, vec![c(0.3, -0.2), c(-0.5, 0.1)], true).unwrap();
        let d = 20;
        let coeffs = b.taylor(d);
        let mut g = crate::rng::Lcg64::new(5);
        let f = TruncatedSeries::new(g.complex_vec(d + 1)).unwrap();
        let fast = b.conj_toeplitz_apply(&f);
        for j in 0..=d {
            let dense: C64 = (j..=d)
                .map(|k| coeffs.coeffs()[k - j].conj() * f.coeffs()[k])
                .sum();
            assert!((fast.coeffs()[j] - dense).norm() < 1e-13);
        }
    }

    #[test]
    fn model_space_basis_for_z_squared() {
        let b = FiniteBlaschke::z_power(2).unwrap();
        let basis = b.model_space_basis(5).unwrap();
        assert_eq!(basis.basis()[0], TruncatedSeries::monomial(0, 5));
        assert_eq!(basis.basis()[1], TruncatedSeries::monomial(1, 5));
    }

    #[test]
    fn model_space_basis_is_normalized_kernel_for_single_zero() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0)]).unwrap();
        let basis = b.model_space_basis(30).unwrap();
        let e = &basis.basis()[0];
        for k in 0..=30 {
            assert_abs_diff_eq!(
                e.coeffs()[k].re,
                0.75f64.sqrt() * 0.5f64.powi(k as i32),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn model_space_basis_is_orthonormal_and_orthogonal_to_range() {
        let b = FiniteBlaschke::new(1, vec![c(0.4, 0.3), c(-0.2, -0.5)], true).unwrap();
        let d = 96;
        let basis = b.model_space_basis(d).unwrap();
        assert_eq!(basis.dim(), 3);
        assert!(gram_defect(basis.basis()) < 1e-10);
        for j in 0..=(d - 3) {
            let bz = b.mul_series(&TruncatedSeries::monomial(j, d), d);
            for e in basis.basis() {
                assert!(e.inner_h2(&bz).norm() < 1e-8, "j = {j}");
            }
        }
        assert!(b.model_space_basis(2).is_err());
    }

    #[test]
    fn model_space_basis_with_repeated_zero() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let basis = b.model_space_basis(80).unwrap();
        assert!(gram_defect(basis.basis()) < 1e-10);
    }

    #[test]
    fn sup_on_circle_values() {
        let z2 = FiniteBlaschke::z_power(2).unwrap();
        assert_abs_diff_eq!(z2.sup_on_circle(0.8).unwrap(), 0.64, epsilon = 1e-12);
        for normalized in [true, false] {
            let phi = FiniteBlaschke::new(0, vec![c(0.5, 0.0)], normalized).unwrap();
            // 1-D oracle: dense scan of |phi(0.8 e^{it})| plus the analytic max at z = -0.8.
            let dense = (0..200_000)
                .map(|k| {
                    phi.eval(C64::from_polar(
                        0.8,
                        k as f64 * std::f64::consts::TAU / 200_000.0,
                    ))
                    .unwrap()
                    .norm()
                })
                .fold(0.0, f64::max);
            let got = phi.sup_on_circle(0.8).unwrap();
            assert_abs_diff_eq!(got, 1.3 / 1.4, epsilon = 1e-9);
            assert!(got >= dense - 1e-12);
        }
        assert!(z2.sup_on_circle(1.0).is_err());
        assert!(z2.sup_on_circle(0.0).is_err());
    }

    #[test]
    fn sup_on_circle_monotone_in_radius() {
        let b = FiniteBlaschke::new(1, vec![c(0.3, 0.4), c(-0.6, 0.0)], true).unwrap();
        let v: Vec<f64> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&s| b.sup_on_circle(s).unwrap())
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2] && v[2] < 1.0);
    }

    #[test]
    fn scaled_factorization_trivial_cases() {
        let z = FiniteBlaschke::z_power(1).unwrap();
        let f = z.scaled_factorization(0.5, 10).unwrap();
        assert_eq!(f.b, z);
        assert_eq!(f.f_s, TruncatedSeries::constant(c(2.0, 0.0), 10));

        let z2 = FiniteBlaschke::z_power(2).unwrap();
        let f = z2.scaled_factorization(0.8, 10).unwrap();
        assert_abs_diff_eq!(f.f_s.coeffs()[0].re, 1.5625, epsilon = 1e-14);
        assert!(f.f_s.coeffs()[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn scaled_factorization_general() {
        let b = FiniteBlaschke::from_zeros(&[c(0.4, 0.0)]).unwrap();
        let f = b.scaled_factorization(0.8, 40).unwrap();
        assert!(f.product_residual < 1e-9);
        assert!(f.min_modulus > 0.0);
        assert!(f.b.eval(c(0.32, 0.0)).unwrap().norm() < 1e-10);

        let b = FiniteBlaschke::new(1, vec![c(0.3, 0.3), c(-0.5, 0.1)], true).unwrap();
        let s = 0.75;
        let f = b.scaled_factorization(s, 40).unwrap();
        assert!(f.product_residual < 1e-9);
        for &a in b.zeros() {
            assert!(f.b.eval(a * s).unwrap().norm() < 1e-10);
        }
        assert!(matches!(
            b.scaled_factorization(0.5, 40),
            Err(Error::Precondition(_))
        ));
    }
}
