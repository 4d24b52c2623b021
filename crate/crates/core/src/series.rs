//! Truncated Taylor series on the unit disc and the weighted sequence norms
//! that define the Dirichlet-type spaces.
//!
//! A [`TruncatedSeries`] of degree `D` stores `a_0, ..., a_D`. Every
//! operation states its output degree; nothing is silently extended. Value
//! equality is exact coefficient equality after zero padding, and
//! [`TruncatedSeries::approx_eq`] is the separate tolerance-based comparison.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::{CVector, C64};

#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    coeffs: Vec<C64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("a series needs at least one coefficient");
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return invalid("series coefficients must be finite");
        }
        Ok(Self { coeffs })
    }

    /// Builds a series from coefficients already known to be finite.
    pub(crate) fn from_vec(coeffs: Vec<C64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(degree: usize) -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0); degree + 1],
        }
    }

    pub fn constant(c: C64, degree: usize) -> Self {
        let mut s = Self::zeros(degree);
        s.coeffs[0] = c;
        s
    }

    /// `z^k` at the given degree (zero if `k > degree`).
    pub fn monomial(k: usize, degree: usize) -> Self {
        let mut s = Self::zeros(degree);
        if k <= degree {
            s.coeffs[k] = C64::new(1.0, 0.0);
        }
        s
    }

    /// `sum_k c^k z^k`, the expansion of `1 / (1 - c z)`.
    pub fn geometric(c: C64, degree: usize) -> Self {
        let mut coeffs = Vec::with_capacity(degree + 1);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..=degree {
            coeffs.push(p);
            p *= c;
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return invalid("evaluation point must be finite");
        }
        Ok(self
            .coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c))
    }

    /// Cauchy product truncated at `out_degree`.
    pub fn mul(&self, other: &Self, out_degree: usize) -> Self {
        let mut out = vec![C64::new(0.0, 0.0); out_degree + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(out_degree + 1) {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(out_degree + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// Pads with zeros or truncates to the requested degree.
    pub fn resize(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, C64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree().max(other.degree());
        Self {
            coeffs: (0..=d).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.degree().max(other.degree());
        Self {
            coeffs: (0..=d).map(|k| self.coeff(k) - other.coeff(k)).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
        }
    }

    /// `self + c * other`, at the larger of the two degrees.
    pub fn axpy(&self, c: C64, other: &Self) -> Self {
        let d = self.degree().max(other.degree());
        Self {
            coeffs: (0..=d)
                .map(|k| self.coeff(k) + c * other.coeff(k))
                .collect(),
        }
    }

    /// Multiplication by `z^k`, truncated at `out_degree`.
    pub fn shift_up(&self, k: usize, out_degree: usize) -> Self {
        let mut out = vec![C64::new(0.0, 0.0); out_degree + 1];
        for (n, &a) in self.coeffs.iter().enumerate() {
            if n + k <= out_degree {
                out[n + k] = a;
            }
        }
        Self { coeffs: out }
    }

    /// Backward shift `(f - f(0)) / z`; the degree is kept.
    pub fn backward_shift(&self) -> Self {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len()];
        out[..self.coeffs.len() - 1].copy_from_slice(&self.coeffs[1..]);
        Self { coeffs: out }
    }

    /// `(sum |a_k|^2 (k+1)^alpha)^(1/2)`.
    pub fn norm_alpha(&self, alpha: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a.norm_sqr() * ((k + 1) as f64).powf(alpha))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_h2(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Coefficient form of `f(z) -> f(s z)`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 {
            return invalid(format!("dilation factor must be positive, got {s}"));
        }
        let mut p = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| {
                let c = a * p;
                p *= s;
                c
            })
            .collect();
        Ok(Self { coeffs })
    }

    /// `sum w_k a_k conj(b_k)`.
    pub fn inner_weighted(&self, other: &Self, weights: &[f64]) -> Result<C64> {
        let d = self.degree().max(other.degree());
        if weights.len() < d + 1 {
            return invalid(format!("need {} weights, got {}", d + 1, weights.len()));
        }
        if weights[..=d].iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return invalid("weights must be positive and finite");
        }
        Ok((0..=d)
            .map(|k| self.coeff(k) * other.coeff(k).conj() * weights[k])
            .sum())
    }

    /// Unweighted `sum a_k conj(b_k)` over the common support.
    pub fn inner_h2(&self, other: &Self) -> C64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// Max coefficient difference after padding.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.degree().max(other.degree());
        (0..=d)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.coeffs)
    }

    pub fn from_vector(v: &CVector) -> Self {
        Self {
            coeffs: v.iter().copied().collect(),
        }
    }
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        let d = self.degree().max(other.degree());
        (0..=d).all(|k| self.coeff(k) == other.coeff(k))
    }
}

/// A `C^l`-valued truncated series; all components share one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSeries {
    components: Vec<TruncatedSeries>,
}

impl VectorSeries {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self> {
        let Some(first) = components.first() else {
            return invalid("a vector series needs at least one component");
        };
        let d = first.degree();
        if components.iter().any(|c| c.degree() != d) {
            return invalid("vector series components must share one degree");
        }
        Ok(Self { components })
    }

    pub fn zeros(l: usize, degree: usize) -> Self {
        Self {
            components: vec![TruncatedSeries::zeros(degree); l.max(1)],
        }
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    pub fn norm_h2(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm_h2().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise product with a scalar series.
    pub fn mul_scalar(&self, h: &TruncatedSeries, out_degree: usize) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| c.mul(h, out_degree))
                .collect(),
        }
    }

    pub fn backward_shift(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.backward_shift()).collect(),
        }
    }

    /// Component-major flattening: component `i`, coefficient `n` lands at
    /// `i * (degree + 1) + n`.
    pub fn flatten(&self) -> CVector {
        let d1 = self.degree() + 1;
        let mut v = CVector::zeros(self.len() * d1);
        for (i, c) in self.components.iter().enumerate() {
            v.rows_mut(i * d1, d1).copy_from_slice(c.coeffs());
        }
        v
    }

    pub fn from_flat(v: &CVector, l: usize, degree: usize) -> Result<Self> {
        if l == 0 || v.len() != l * (degree + 1) {
            return invalid(format!(
                "flat vector of length {} does not match {l} components of degree {degree}",
                v.len()
            ));
        }
        let d1 = degree + 1;
        Ok(Self {
            components: (0..l)
                .map(|i| TruncatedSeries::from_vec(v.rows(i * d1, d1).iter().copied().collect()))
                .collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    degree: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            degree: self.degree(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SeriesJson::deserialize(deserializer)?;
        if raw.coeffs.len() != raw.degree + 1 {
            return Err(serde::de::Error::custom(format!(
                "degree {} requires {} coefficients, got {}",
                raw.degree,
                raw.degree + 1,
                raw.coeffs.len()
            )));
        }
        TruncatedSeries::new(raw.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect())
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorSeriesJson {
    components: Vec<TruncatedSeries>,
}

impl Serialize for VectorSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VectorSeriesJson {
            components: self.components.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VectorSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = VectorSeriesJson::deserialize(deserializer)?;
        VectorSeries::new(raw.components).map_err(serde::de::Error::custom)
    }
}

/// Serde helper for complex numbers written as `[re, im]`.
pub(crate) mod pair {
    pub mod vec {
        use crate::C64;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|c| [c.re, c.im]))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            let raw = Vec::<[f64; 2]>::deserialize(d)?;
            Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Lcg64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_series(g: &mut Lcg64, degree: usize) -> TruncatedSeries {
        TruncatedSeries::new(g.complex_vec(degree + 1)).unwrap()
    }

    #[test]
    fn eval_constant_term_and_monomial() {
        let f = TruncatedSeries::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(f.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let z3 = TruncatedSeries::monomial(3, 3);
        assert_eq!(z3.eval(c(2.0, 0.0)).unwrap(), c(8.0, 0.0));
    }

    #[test]
    fn eval_rejects_non_finite_point() {
        let f = TruncatedSeries::monomial(1, 2);
        assert!(matches!(
            f.eval(c(f64::NAN, 0.0)),
            Err(crate::Error::InvalidInput(_))
        ));
        assert!(f.eval(c(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn eval_matches_rational_function() {
        // (0.5 - z) / (1 - 0.5 z) = 0.5 + sum_{k>=1} (0.25 - 1) 0.5^{k-1} z^k
        let mut coeffs = vec![c(0.5, 0.0)];
        for k in 1..=30 {
            coeffs.push(c(-0.75 * 0.5f64.powi(k - 1), 0.0));
        }
        let f = TruncatedSeries::new(coeffs).unwrap();
        let z = 0.3;
        let direct = (0.5 - z) / (1.0 - 0.5 * z);
        assert!((f.eval(c(z, 0.0)).unwrap().re - direct).abs() < 1e-9);
        assert!((direct - 0.2 / 0.85).abs() < 1e-15);
    }

    #[test]
    fn mul_truncates() {
        let f = TruncatedSeries::from_real(&[1.0, 1.0]).unwrap();
        let g = TruncatedSeries::from_real(&[1.0, -1.0]).unwrap();
        assert_eq!(
            f.mul(&g, 2),
            TruncatedSeries::from_real(&[1.0, 0.0, -1.0]).unwrap()
        );
        let z = TruncatedSeries::monomial(1, 1);
        assert_eq!(z.mul(&z, 1), TruncatedSeries::zeros(1));
    }

    #[test]
    fn mul_matches_double_loop_convolution() {
        let mut g = Lcg64::new(11);
        let a = random_series(&mut g, 8);
        let b = random_series(&mut g, 8);
        let mut oracle = vec![c(0.0, 0.0); 17];
        for i in 0..=8 {
            for j in 0..=8 {
                oracle[i + j] += a.coeffs()[i] * b.coeffs()[j];
            }
        }
        let got = a.mul(&b, 16);
        assert_eq!(got.coeffs().len(), oracle.len());
        for (g, o) in got.coeffs().iter().zip(&oracle) {
            assert!((g - o).norm() < 1e-14);
        }
    }

    #[test]
    fn alpha_norms() {
        let z3 = TruncatedSeries::monomial(3, 3);
        assert_eq!(z3.norm_alpha(1.0), 2.0);
        assert_eq!(z3.norm_alpha(-1.0), 0.5);
        let f = TruncatedSeries::from_real(&[1.0, 1.0]).unwrap();
        assert!((f.norm_alpha(0.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dilate_cases() {
        let z2 = TruncatedSeries::monomial(2, 2);
        assert_eq!(z2.dilate(0.5).unwrap(), z2.scale(c(0.25, 0.0)));
        let mut g = Lcg64::new(3);
        let f = random_series(&mut g, 6);
        assert_eq!(f.dilate(1.0).unwrap(), f);
        assert!(f.dilate(0.0).is_err());
        assert!(f.dilate(-0.5).is_err());

        let ones = TruncatedSeries::from_real(&[1.0; 11]).unwrap();
        let d = ones.dilate(0.8).unwrap();
        let geometric: f64 = (0..=10).map(|k| 0.64f64.powi(k)).sum();
        assert!((d.norm_h2() - geometric.sqrt()).abs() < 1e-14);
        for k in 0..=10 {
            assert!((d.coeffs()[k].re - 0.8f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_inner_products() {
        let alpha = 0.7;
        let w: Vec<f64> = (0..6).map(|j| ((j + 1) as f64).powf(alpha)).collect();
        let z4 = TruncatedSeries::monomial(4, 5);
        let got = z4.inner_weighted(&z4, &w).unwrap();
        assert!((got.re - 5f64.powf(alpha)).abs() < 1e-14 && got.im == 0.0);

        let one = TruncatedSeries::constant(c(1.0, 0.0), 1);
        let z = TruncatedSeries::monomial(1, 1);
        assert_eq!(one.inner_weighted(&z, &w).unwrap(), c(0.0, 0.0));

        assert!(one.inner_weighted(&z, &w[..1]).is_err());
        assert!(one.inner_weighted(&z, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn value_equality_pads_with_zeros() {
        let a = TruncatedSeries::from_real(&[1.0, 2.0]).unwrap();
        let b = TruncatedSeries::from_real(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, TruncatedSeries::from_real(&[1.0, 2.0, 1e-300]).unwrap());
    }

    #[test]
    fn rejects_non_finite_coefficients() {
        assert!(TruncatedSeries::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(TruncatedSeries::new(vec![]).is_err());
    }

    #[test]
    fn json_format() {
        let f = TruncatedSeries::new(vec![c(1.0, 0.0), c(0.5, -2.0)]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"degree":1,"coeffs":[[1.0,0.0],[0.5,-2.0]]}"#);
        let back: TruncatedSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(
            serde_json::from_str::<TruncatedSeries>(r#"{"degree":2,"coeffs":[[1,0]]}"#).is_err()
        );

        let v = VectorSeries::new(vec![f.clone(), f]).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.starts_with(r#"{"components":[{"degree":1"#));
        assert_eq!(serde_json::from_str::<VectorSeries>(&text).unwrap(), v);
    }

    #[test]
    fn vector_series_flatten_is_component_major() {
        let a = TruncatedSeries::from_real(&[1.0, 2.0]).unwrap();
        let b = TruncatedSeries::from_real(&[3.0, 4.0]).unwrap();
        let v = VectorSeries::new(vec![a, b]).unwrap();
        let flat = v.flatten();
        assert_eq!(
            flat.iter().map(|c| c.re).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(VectorSeries::from_flat(&flat, 2, 1).unwrap(), v);
        assert!(
            VectorSeries::new(vec![TruncatedSeries::zeros(1), TruncatedSeries::zeros(2)]).is_err()
        );
    }

    fn arb_series(max_degree: usize) -> impl Strategy<Value = TruncatedSeries> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..=max_degree + 1).prop_map(|v| {
            TruncatedSeries::new(v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn h2_norm_is_coefficient_l2(f in arb_series(16)) {
            let direct: f64 = f.coeffs().iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((f.norm_alpha(0.0).powi(2) - direct).abs() <= 1e-12 * direct.max(1e-300));
        }

        #[test]
        fn mul_is_commutative_and_bilinear(
            f in arb_series(16), g in arb_series(16), h in arb_series(16),
            s in -3.0f64..3.0,
        ) {
            let d = 32;
            let scale = 1.0 + f.norm_h2() * (g.norm_h2() + h.norm_h2());
            prop_assert!(f.mul(&g, d).max_abs_diff(&g.mul(&f, d)) <= 1e-12 * scale);
            let lhs = f.mul(&g.axpy(C64::new(s, 0.0), &h), d);
            let rhs = f.mul(&g, d).axpy(C64::new(s, 0.0), &f.mul(&h, d));
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale * (1.0 + s.abs()));
        }

        #[test]
        fn dilation_round_trip(f in arb_series(64), s in 0.5f64..=1.0) {
            let back = f.dilate(s).unwrap().dilate(1.0 / s).unwrap();
            prop_assert!(back.sub(&f).norm_h2() <= 1e-10 * f.norm_h2().max(1e-300));
        }

        #[test]
        fn inner_is_hermitian_and_positive(f in arb_series(12), g in arb_series(12), alpha in -1.0f64..1.0) {
            let w: Vec<f64> = (0..13).map(|j| ((j + 1) as f64).powf(alpha)).collect();
            let fg = f.inner_weighted(&g, &w).unwrap();
            let gf = g.inner_weighted(&f, &w).unwrap();
            prop_assert!((fg - gf.conj()).norm() <= 1e-12 * (1.0 + fg.norm()));
            let ff = f.inner_weighted(&f, &w).unwrap();
            prop_assert!(ff.im == 0.0 && ff.re >= 0.0);
        }
    }
}
