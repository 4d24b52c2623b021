//! Wold coordinates `f = sum_k B^k h_k` (`h_k` in `K_B`), the three norms
//! built on them, and the parameter choice `(N, gamma_2, s)` for `alpha < 0`.
//!
//! The decomposition is exact on polynomials: `h_k = P_{K_B} f_k` and
//! `f_{k+1} = T_{conj B} f_k`. `T_{conj B}` keeps the degree, so the pieces
//! never lose information to truncation. For a non-monomial `B` a polynomial
//! has infinitely many nonzero levels that decay geometrically; levels are
//! therefore taken until the remainder `|f_K|` is negligible and that
//! remainder is reported rather than hidden.

use serde::{Deserialize, Serialize};

use crate::blaschke::{FiniteBlaschke, ModelSpaceBasis};
use crate::error::{invalid, precondition, Error, Result};
use crate::rng::Lcg64;
use crate::series::TruncatedSeries;
use crate::{CMatrix, C64};

/// Relative remainder accepted by default: `|f_K| <= 1e-8 |f|`.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormVariant {
    AlphaStandard,
    WoldOne,
    WoldTwo,
}

/// Which norm to use. Wold variants carry the Blaschke product they are
/// built on; `wold-two` also carries `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormSpecJson", into = "NormSpecJson")]
pub struct NormSpec {
    variant: NormVariant,
    alpha: f64,
    n: Option<usize>,
    blaschke: Option<FiniteBlaschke>,
}

#[derive(Serialize, Deserialize)]
struct NormSpecJson {
    variant: NormVariant,
    #[serde(default)]
    alpha: f64,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blaschke: Option<FiniteBlaschke>,
}

impl TryFrom<NormSpecJson> for NormSpec {
    type Error = Error;
    fn try_from(raw: NormSpecJson) -> Result<Self> {
        let spec = NormSpec {
            variant: raw.variant,
            alpha: raw.alpha,
            n: raw.n,
            blaschke: raw.blaschke,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<NormSpec> for NormSpecJson {
    fn from(s: NormSpec) -> Self {
        Self {
            variant: s.variant,
            alpha: s.alpha,
            n: s.n,
            blaschke: s.blaschke,
        }
    }
}

impl NormSpec {
    pub fn alpha_standard(alpha: f64) -> Result<Self> {
        let spec = Self {
            variant: NormVariant::AlphaStandard,
            alpha,
            n: None,
            blaschke: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn h2() -> Self {
        Self {
            variant: NormVariant::AlphaStandard,
            alpha: 0.0,
            n: None,
            blaschke: None,
        }
    }

    pub fn wold_one(alpha: f64, b: FiniteBlaschke) -> Result<Self> {
        let spec = Self {
            variant: NormVariant::WoldOne,
            alpha,
            n: None,
            blaschke: Some(b),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn wold_two(alpha: f64, n: usize, b: FiniteBlaschke) -> Result<Self> {
        let spec = Self {
            variant: NormVariant::WoldTwo,
            alpha,
            n: Some(n),
            blaschke: Some(b),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return invalid("alpha must be finite");
        }
        match self.variant {
            NormVariant::AlphaStandard => Ok(()),
            NormVariant::WoldOne => {
                if !(0.0..=1.0).contains(&self.alpha) {
                    return invalid(format!(
                        "wold-one needs alpha in [0, 1], got {}",
                        self.alpha
                    ));
                }
                Ok(())
            }
            NormVariant::WoldTwo => {
                if !(-1.0..0.0).contains(&self.alpha) {
                    return invalid(format!(
                        "wold-two needs alpha in [-1, 0), got {}",
                        self.alpha
                    ));
                }
                match self.n {
                    Some(n) if n >= 1 => Ok(()),
                    _ => invalid("wold-two needs N >= 1"),
                }
            }
        }
    }

    pub fn variant(&self) -> NormVariant {
        self.variant
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn blaschke(&self) -> Option<&FiniteBlaschke> {
        self.blaschke.as_ref()
    }

    pub fn with_blaschke(mut self, b: FiniteBlaschke) -> Self {
        self.blaschke = Some(b);
        self
    }

    pub fn is_wold(&self) -> bool {
        self.variant != NormVariant::AlphaStandard
    }

    /// Weight of Wold level `k` (or of Taylor coefficient `k` for
    /// alpha-standard).
    pub fn level_weight(&self, k: usize) -> f64 {
        let kk = (k + 1) as f64;
        match self.variant {
            NormVariant::AlphaStandard | NormVariant::WoldOne => kk.powf(self.alpha),
            NormVariant::WoldTwo => {
                let n = self.n.unwrap_or(1);
                if k < n {
                    (n as f64).powf(self.alpha)
                } else {
                    kk.powf(self.alpha)
                }
            }
        }
    }

    pub fn level_weights(&self, count: usize) -> Vec<f64> {
        (0..count).map(|k| self.level_weight(k)).collect()
    }

    /// Lower bound of `T_B` in this norm: 1 for wold-one, `gamma_2` for wold-two.
    pub fn lower_bound(&self) -> Option<f64> {
        match self.variant {
            NormVariant::AlphaStandard => None,
            NormVariant::WoldOne => Some(1.0),
            NormVariant::WoldTwo => Some(gamma2(self.alpha, self.n.unwrap_or(1))),
        }
    }
}

/// The pieces `h_0, ..., h_{K-1}` in the Takenaka–Malmquist–Walsh basis of
/// `K_B`, plus the norm of what is left, `f_K = T_{conj B}^K f`.
#[derive(Debug, Clone, Serialize)]
pub struct WoldCoordinates {
    #[serde(rename = "blaschke")]
    source: FiniteBlaschke,
    levels: usize,
    #[serde(serialize_with = "serialize_rows")]
    coords: CMatrix,
    remainder: f64,
    input_norm: f64,
    tolerance: f64,
    truncation_warning: bool,
}

fn serialize_rows<S: serde::Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<[f64; 2]> = m.row(r).iter().map(|c| [c.re, c.im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl WoldCoordinates {
    /// Coordinates given level by level; used for synthetic inputs.
    pub fn from_coords(source: FiniteBlaschke, coords: CMatrix) -> Result<Self> {
        if coords.ncols() != source.degree() || coords.nrows() == 0 {
            return invalid(format!(
                "coordinates must be K x {} with K >= 1, got {} x {}",
                source.degree(),
                coords.nrows(),
                coords.ncols()
            ));
        }
        let input_norm = coords.norm();
        Ok(Self {
            source,
            levels: coords.nrows(),
            coords,
            remainder: 0.0,
            input_norm,
            tolerance: DEFAULT_TOLERANCE,
            truncation_warning: false,
        })
    }

    pub fn source(&self) -> &FiniteBlaschke {
        &self.source
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Row `k` holds the coordinates of `h_k`.
    pub fn coords(&self) -> &CMatrix {
        &self.coords
    }

    /// `|f_K|_{H^2}` after the last level.
    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    pub fn truncation_warning(&self) -> bool {
        self.truncation_warning
    }

    /// Errors when the remainder exceeds the tolerance.
    pub fn strict(self) -> Result<Self> {
        if self.truncation_warning {
            return Err(Error::TruncationInsufficient {
                residual: self.remainder,
                tolerance: self.tolerance * self.input_norm,
            });
        }
        Ok(self)
    }

    /// `|h_k|_{H^2}` for each level.
    pub fn level_norms(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|k| self.coords.row(k).norm())
            .collect()
    }

    /// `(sum_k w_k |h_k|^2)^{1/2}` with the level weights of `spec`.
    pub fn weighted_norm(&self, spec: &NormSpec) -> f64 {
        self.weighted_norm_shifted(spec, 0)
    }

    /// Norm of `B^shift f`, whose Wold pieces are those of `f` moved up
    /// `shift` levels.
    pub fn weighted_norm_shifted(&self, spec: &NormSpec, shift: usize) -> f64 {
        self.level_norms()
            .iter()
            .enumerate()
            .map(|(k, n)| spec.level_weight(k + shift) * n * n)
            .sum::<f64>()
            .sqrt()
    }

    /// `sum_k B^k h_k` truncated at `degree`.
    pub fn reconstruct(&self, degree: usize) -> Result<TruncatedSeries> {
        let basis = self
            .source
            .model_space_basis(degree.max(self.source.degree()))?;
        Ok(reconstruct_with(&basis, &self.source, &self.coords).resize(degree))
    }
}

/// Horner evaluation of `sum_k B^k h_k`: `acc <- h_k + B acc`.
pub(crate) fn reconstruct_with(
    basis: &ModelSpaceBasis,
    b: &FiniteBlaschke,
    coords: &CMatrix,
) -> TruncatedSeries {
    let degree = basis.degree();
    let mut acc = TruncatedSeries::zeros(degree);
    for k in (0..coords.nrows()).rev() {
        let row: Vec<C64> = coords.row(k).iter().copied().collect();
        acc = basis.combine(&row).add(&b.mul_series(&acc, degree));
    }
    acc
}

/// A generous level cap: enough for the remainder of any polynomial of the
/// given degree to reach round-off when the zeros of `B` stay away from the
/// circle.
pub fn default_max_levels(degree: usize, b: &FiniteBlaschke) -> usize {
    let per_level = b.degree().max(1);
    4 * (degree + 1) / per_level + 128
}

/// Exactly `levels` levels.
pub fn wold_decompose(
    f: &TruncatedSeries,
    b: &FiniteBlaschke,
    levels: usize,
) -> Result<WoldCoordinates> {
    decompose(f, b, levels, None, DEFAULT_TOLERANCE)
}

/// Levels are added until `|f_K| <= tol |f|` or `max_levels` is reached;
/// the shape is trimmed to the levels actually used.
pub fn wold_decompose_adaptive(
    f: &TruncatedSeries,
    b: &FiniteBlaschke,
    tol: f64,
    max_levels: usize,
) -> Result<WoldCoordinates> {
    decompose(f, b, max_levels, Some(tol), tol)
}

/// Adaptive decomposition with the default tolerance, and a stopping
/// threshold well below it so that round trips are accurate to round-off.
pub fn wold_decompose_auto(f: &TruncatedSeries, b: &FiniteBlaschke) -> Result<WoldCoordinates> {
    let mut w = decompose(
        f,
        b,
        default_max_levels(f.degree(), b),
        Some(1e-15),
        DEFAULT_TOLERANCE,
    )?;
    w.tolerance = DEFAULT_TOLERANCE;
    Ok(w)
}

fn decompose(
    f: &TruncatedSeries,
    b: &FiniteBlaschke,
    levels: usize,
    stop: Option<f64>,
    tolerance: f64,
) -> Result<WoldCoordinates> {
    if levels == 0 {
        return invalid("at least one level is required");
    }
    let degree = f.degree().max(b.degree());
    let basis = b.model_space_basis(degree)?;
    let m = b.degree();
    let input_norm = f.norm_h2();
    let mut current = f.resize(degree);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut remainder = current.norm_h2();
    for _ in 0..levels {
        if let Some(t) = stop {
            if remainder <= t * input_norm {
                break;
            }
        }
        rows.push(basis.coords(&current));
        current = b.conj_toeplitz_apply(&current);
        remainder = current.norm_h2();
    }
    if rows.is_empty() {
        rows.push(vec![C64::new(0.0, 0.0); m]);
    }
    if !remainder.is_finite() {
        return Err(Error::Numeric(
            "Wold decomposition produced non-finite values".into(),
        ));
    }
    let coords = CMatrix::from_fn(rows.len(), m, |k, j| rows[k][j]);
    Ok(WoldCoordinates {
        source: b.clone(),
        levels: rows.len(),
        coords,
        remainder,
        input_norm,
        tolerance,
        truncation_warning: remainder > tolerance * input_norm,
    })
}

/// `sum_k B^k h_k` truncated at `degree`.
pub fn wold_reconstruct(w: &WoldCoordinates, degree: usize) -> Result<TruncatedSeries> {
    w.reconstruct(degree)
}

/// The norm of `f` under `spec`. Wold variants decompose `f` adaptively and
/// fail if the remainder stays above tolerance.
pub fn space_norm(f: &TruncatedSeries, spec: &NormSpec) -> Result<f64> {
    match spec.variant {
        NormVariant::AlphaStandard => Ok(f.norm_alpha(spec.alpha)),
        _ => {
            let b = spec
                .blaschke
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("Wold norms need a Blaschke product".into()))?;
            let w = wold_decompose_auto(f, b)?.strict()?;
            Ok(w.weighted_norm(spec))
        }
    }
}

/// Gram matrix of `spec` on polynomials of degree `<= degree`, in the
/// monomial basis: `G_{ij} = <z^j, z^i>_spec`.
pub fn wold_gram(spec: &NormSpec, degree: usize) -> Result<CMatrix> {
    let b = spec
        .blaschke
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("Wold norms need a Blaschke product".into()))?;
    let pieces: Vec<WoldCoordinates> = (0..=degree)
        .map(|j| {
            wold_decompose_auto(&TruncatedSeries::monomial(j, degree), b).and_then(|w| w.strict())
        })
        .collect::<Result<_>>()?;
    let levels = pieces.iter().map(|w| w.levels).max().unwrap_or(1);
    let m = b.degree();
    // Rows: (level, basis index) weighted by sqrt(w_k); columns: monomials.
    let mut x = CMatrix::zeros(levels * m, degree + 1);
    for (j, w) in pieces.iter().enumerate() {
        for k in 0..w.levels {
            let sw = spec.level_weight(k).sqrt();
            for i in 0..m {
                x[(k * m + i, j)] = w.coords[(k, i)] * sw;
            }
        }
    }
    Ok(x.adjoint() * x)
}

/// `gamma_2(N) = (1 - 1/(N+1))^{-alpha/2}`.
pub fn gamma2(alpha: f64, n: usize) -> f64 {
    (1.0 - 1.0 / (n as f64 + 1.0)).powf(-alpha / 2.0)
}

/// `s = (1 + max |a_n|) / 2`, a radius whose disc contains every zero.
pub fn suggest_s(b: &FiniteBlaschke) -> f64 {
    (1.0 + b.max_zero_modulus()) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormParameters {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: f64,
    /// `sup_{|z| = s} |B(z)|`.
    pub beta: f64,
    /// `beta / gamma`.
    pub contraction: f64,
}

/// Smallest `N >= 1` with `gamma_2(N) > beta`.
pub fn select_parameters(b: &FiniteBlaschke, alpha: f64, s: f64) -> Result<NormParameters> {
    if !(-1.0..0.0).contains(&alpha) {
        return invalid(format!("alpha must lie in [-1, 0), got {alpha}"));
    }
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("s must lie in (0, 1), got {s}"));
    }
    if b.max_zero_modulus() >= s {
        return precondition(format!(
            "zero of modulus {} is not inside the disc of radius {s}",
            b.max_zero_modulus()
        ));
    }
    let beta = b.sup_on_circle(s)?;
    let mut n = 1usize;
    while gamma2(alpha, n) <= beta {
        n += 1;
        if n > 100_000_000 {
            return Err(Error::Numeric(format!(
                "no N found with gamma_2(N) > {beta}"
            )));
        }
    }
    let gamma = gamma2(alpha, n);
    Ok(NormParameters {
        alpha,
        gamma,
        n,
        s,
        beta,
        contraction: beta / gamma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub variant: NormVariant,
    pub alpha: f64,
    pub gamma: f64,
    pub trials: usize,
    pub min_ratio: f64,
    pub min_ratio_trial: usize,
    /// `B^{N-1} e_0` for wold-two, `e_0` for wold-one.
    pub witness: TruncatedSeries,
    pub witness_ratio: f64,
    /// `true` when the witness is expected to attain `gamma` exactly.
    pub witness_is_tight: bool,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

/// `|B f|_spec >= gamma |f|_spec` on seeded random polynomials of the given
/// degree. `B f` is measured through its Wold pieces, which are those of `f`
/// moved up one level.
pub fn verify_lower_bound(
    b: &FiniteBlaschke,
    spec: &NormSpec,
    trials: usize,
    seed: u64,
    degree: usize,
) -> Result<LowerBoundReport> {
    if !spec.is_wold() {
        return invalid("the lower-bound check needs a Wold norm");
    }
    let gamma = spec.lower_bound().unwrap_or(1.0);
    let spec = spec.clone().with_blaschke(b.clone());
    let mut min_ratio = f64::INFINITY;
    let mut min_ratio_trial = 0;
    let mut violations = Vec::new();
    for t in 0..trials {
        let mut g = Lcg64::for_trial(seed, t as u64);
        let f = TruncatedSeries::new(g.complex_vec(degree + 1))?;
        let w = wold_decompose_auto(&f, b)?.strict()?;
        let ratio = w.weighted_norm_shifted(&spec, 1) / w.weighted_norm(&spec);
        if ratio < min_ratio {
            min_ratio = ratio;
            min_ratio_trial = t;
        }
        if ratio < gamma - 1e-9 {
            violations.push(Violation { trial: t, ratio });
        }
    }
    let (power, tight) = match spec.variant {
        NormVariant::WoldTwo => (spec.n.unwrap_or(1) - 1, true),
        _ => (0, spec.alpha == 0.0),
    };
    // Deep enough that the Taylor tail of B^{N-1} e_0 is below round-off.
    let witness_degree = degree.max((power + 1) * b.degree() + 160);
    let e0 = b.model_space_basis(witness_degree)?.basis()[0].clone();
    let bp = if power == 0 {
        None
    } else {
        Some(b.power(power)?)
    };
    let witness = match &bp {
        Some(p) => p.mul_series(&e0, witness_degree),
        None => e0,
    };
    let ww = wold_decompose_auto(&witness, b)?.strict()?;
    let witness_ratio = ww.weighted_norm_shifted(&spec, 1) / ww.weighted_norm(&spec);
    let witness_ok = !tight || (witness_ratio - gamma).abs() <= 1e-9;
    Ok(LowerBoundReport {
        variant: spec.variant,
        alpha: spec.alpha,
        gamma,
        trials,
        min_ratio,
        min_ratio_trial,
        witness,
        witness_ratio,
        witness_is_tight: tight,
        pass: violations.is_empty() && witness_ok,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn z2() -> FiniteBlaschke {
        FiniteBlaschke::z_power(2).unwrap()
    }

    #[test]
    fn b_equal_z_gives_taylor_coefficients() {
        let b = FiniteBlaschke::z_power(1).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(3).complex_vec(9)).unwrap();
        let w = wold_decompose(&f, &b, 9).unwrap();
        for k in 0..9 {
            assert_eq!(w.coords()[(k, 0)], f.coeffs()[k]);
        }
        assert_eq!(w.remainder(), 0.0);
    }

    #[test]
    fn b_equal_z_squared_groups_pairs() {
        let f = TruncatedSeries::from_real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let w = wold_decompose(&f, &z2(), 2).unwrap();
        for k in 0..2 {
            assert_eq!(w.coords()[(k, 0)], c(1.0, 0.0));
            assert_eq!(w.coords()[(k, 1)], c(1.0, 0.0));
        }
    }

    #[test]
    fn reconstruct_single_row_and_zero() {
        let b = FiniteBlaschke::from_zeros(&[c(0.3, 0.1), c(-0.2, 0.4)]).unwrap();
        let mut coords = CMatrix::zeros(3, 2);
        coords[(0, 0)] = c(1.0, 0.0);
        let w = WoldCoordinates::from_coords(b.clone(), coords).unwrap();
        let e0 = b.model_space_basis(30).unwrap().basis()[0].clone();
        assert!(w.reconstruct(30).unwrap().max_abs_diff(&e0) < 1e-15);
        let zero = WoldCoordinates::from_coords(b, CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero.reconstruct(10).unwrap(), TruncatedSeries::zeros(10));
    }

    #[test]
    fn round_trip_and_parseval_for_general_b() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.0, -0.3)]).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(11).complex_vec(49))
            .unwrap()
            .resize(64);
        let w = wold_decompose_auto(&f, &b).unwrap().strict().unwrap();
        let back = w.reconstruct(64).unwrap();
        assert!(back.sub(&f).norm_h2() < 1e-12 * f.norm_h2());
        let parseval: f64 = w.level_norms().iter().map(|n| n * n).sum();
        assert!((parseval - f.norm_h2().powi(2)).abs() < 1e-12 * f.norm_h2().powi(2));
    }

    #[test]
    fn fixed_levels_flag_truncation() {
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0)]).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(1).complex_vec(30)).unwrap();
        let w = wold_decompose(&f, &b, 3).unwrap();
        assert!(w.truncation_warning());
        assert!(matches!(
            w.strict(),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn least_squares_oracle_for_double_zero() {
        // Regress f on {B^k e_j} (k < 4, j < 2) built at high degree.
        let b = FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(7).complex_vec(13)).unwrap();
        let levels = 4;
        let big = 400;
        let basis = b.model_space_basis(big).unwrap();
        let mut cols = Vec::new();
        for k in 0..levels {
            for e in basis.basis() {
                let mut v = e.clone();
                for _ in 0..k {
                    v = b.mul_series(&v, big);
                }
                cols.push(v.to_vector());
            }
        }
        let a = CMatrix::from_columns(&cols);
        let rhs = f.resize(big).to_vector();
        let x = a.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
        let w = wold_decompose(&f, &b, levels).unwrap();
        for k in 0..levels {
            for j in 0..2 {
                assert!((w.coords()[(k, j)] - x[k * 2 + j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn space_norm_examples() {
        let spec = NormSpec::wold_one(1.0, z2()).unwrap();
        let f = TruncatedSeries::monomial(2, 6);
        assert_abs_diff_eq!(space_norm(&f, &spec).unwrap(), 2f64.sqrt(), epsilon = 1e-15);

        let spec = NormSpec::wold_two(-1.0, 3, z2()).unwrap();
        let f = TruncatedSeries::from_real(&[0.3, -1.2]).unwrap();
        assert_abs_diff_eq!(
            space_norm(&f, &spec).unwrap(),
            f.norm_h2() / 3f64.sqrt(),
            epsilon = 1e-15
        );

        let b = FiniteBlaschke::new(1, vec![c(0.4, 0.0)], true).unwrap();
        let spec = NormSpec::wold_one(0.0, b).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(2).complex_vec(20)).unwrap();
        assert!((space_norm(&f, &spec).unwrap() - f.norm_h2()).abs() < 1e-10);

        let spec = NormSpec::alpha_standard(1.0).unwrap();
        assert_abs_diff_eq!(
            space_norm(&TruncatedSeries::monomial(3, 3), &spec).unwrap(),
            2.0
        );
    }

    #[test]
    fn norm_spec_validation_and_json() {
        assert!(NormSpec::wold_one(1.5, z2()).is_err());
        assert!(NormSpec::wold_two(0.0, 2, z2()).is_err());
        assert!(NormSpec::wold_two(-0.5, 0, z2()).is_err());
        let spec = NormSpec::wold_two(-1.0, 3, z2()).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""variant":"wold-two""#) && text.contains(r#""N":3"#));
        assert_eq!(serde_json::from_str::<NormSpec>(&text).unwrap(), spec);
        let h2: NormSpec =
            serde_json::from_str(r#"{"variant":"alpha-standard","alpha":0}"#).unwrap();
        assert_eq!(h2, NormSpec::h2());
    }

    #[test]
    fn gamma2_values() {
        assert_abs_diff_eq!(gamma2(-1.0, 9), (10.0f64 / 9.0).powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(gamma2(-1.0, 9), 0.948683, epsilon = 1e-6);
    }

    #[test]
    fn select_parameters_examples() {
        let p = select_parameters(&z2(), -1.0, 0.8).unwrap();
        assert_eq!(p.n, 1);
        assert_abs_diff_eq!(p.gamma, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta, 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(p.contraction, 0.64 / 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.contraction, 0.9051, epsilon = 1e-4);

        let p = select_parameters(&z2(), -1.0, 0.95).unwrap();
        assert_eq!(p.n, 5);
        assert_abs_diff_eq!(p.gamma, 1.2f64.powf(-0.5), epsilon = 1e-15);
        assert!(gamma2(-1.0, 4) <= p.beta);

        let b = FiniteBlaschke::from_zeros(&[c(0.9, 0.0)]).unwrap();
        assert!(matches!(
            select_parameters(&b, -1.0, 0.8),
            Err(Error::Precondition(_))
        ));
        assert!(select_parameters(&z2(), 0.5, 0.8).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        // f in K_B at alpha = 1: ratio sqrt(2).
        let b = FiniteBlaschke::from_zeros(&[c(0.3, 0.2), c(-0.4, 0.0)]).unwrap();
        let spec = NormSpec::wold_one(1.0, b.clone()).unwrap();
        let r = verify_lower_bound(&b, &spec, 10, 1, 20).unwrap();
        assert!(r.pass);
        assert_abs_diff_eq!(r.witness_ratio, 2f64.sqrt(), epsilon = 1e-10);

        let spec = NormSpec::wold_one(0.0, b.clone()).unwrap();
        let r = verify_lower_bound(&b, &spec, 10, 1, 20).unwrap();
        assert!(r.pass && (r.min_ratio - 1.0).abs() < 1e-12);

        for alpha in [-1.0, -0.5] {
            let p = select_parameters(&z2(), alpha, 0.95).unwrap();
            let spec = NormSpec::wold_two(alpha, p.n, z2()).unwrap();
            let r = verify_lower_bound(&z2(), &spec, 20, 3, 24).unwrap();
            assert!(r.pass, "{r:?}");
            // ((N+1)/N)^{alpha/2}
            let by_hand = ((p.n as f64 + 1.0) / p.n as f64).powf(alpha / 2.0);
            assert_abs_diff_eq!(r.witness_ratio, by_hand, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_matches_direct_norms() {
        let b = FiniteBlaschke::new(1, vec![c(0.4, 0.1)], true).unwrap();
        let spec = NormSpec::wold_one(0.5, b).unwrap();
        let g = wold_gram(&spec, 12).unwrap();
        let f = TruncatedSeries::new(Lcg64::new(4).complex_vec(13)).unwrap();
        let v = f.to_vector();
        let quad = v.dotc(&(&g * &v)).re.sqrt();
        assert!((quad - space_norm(&f, &spec).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn norm_equivalence_constants_stabilize() {
        // Extremal generalized Rayleigh quotients of wold-one against alpha-standard.
        fn extremes(b: &FiniteBlaschke, alpha: f64, d: usize) -> (f64, f64) {
            let g = wold_gram(&NormSpec::wold_one(alpha, b.clone()).unwrap(), d).unwrap();
            let w: Vec<f64> = (0..=d)
                .map(|k| ((k + 1) as f64).powf(-alpha / 2.0))
                .collect();
            let scaled = CMatrix::from_fn(d + 1, d + 1, |i, j| g[(i, j)] * w[i] * w[j]);
            let (ev, _) = crate::linalg::hermitian_eigen(&scaled);
            (ev[ev.len() - 1].sqrt(), ev[0].sqrt())
        }
        for b in [
            z2(),
            FiniteBlaschke::from_zeros(&[c(0.5, 0.0), c(0.0, -0.3)]).unwrap(),
            FiniteBlaschke::new(1, vec![c(0.4, 0.0), c(-0.2, 0.3)], true).unwrap(),
        ] {
            for alpha in [0.5, 1.0] {
                let (lo32, hi32) = extremes(&b, alpha, 32);
                let (lo64, hi64) = extremes(&b, alpha, 64);
                assert!((lo64 / lo32 - 1.0).abs() < 0.1, "lower {lo32} -> {lo64}");
                assert!((hi64 / hi32 - 1.0).abs() < 0.1, "upper {hi32} -> {hi64}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval_holds(seed in any::<u64>(), deg in 2usize..30, r1 in 0.05f64..0.8, r2 in 0.05f64..0.8) {
            let mut g = Lcg64::new(seed);
            let b = FiniteBlaschke::new(1, vec![C64::from_polar(r1, g.uniform() * 6.0), C64::from_polar(r2, g.uniform() * 6.0)], true).unwrap();
            let f = TruncatedSeries::new(g.complex_vec(deg + 1)).unwrap();
            let w = wold_decompose_auto(&f, &b).unwrap();
            let total: f64 = w.level_norms().iter().map(|n| n * n).sum::<f64>() + w.remainder().powi(2);
            prop_assert!((total - f.norm_h2().powi(2)).abs() <= 1e-9 * f.norm_h2().powi(2));
        }

        #[test]
        fn select_parameters_minimal(alpha in -1.0f64..-0.05, s in 0.3f64..0.97) {
            let p = select_parameters(&z2(), alpha, s).unwrap();
            prop_assert!(p.contraction < 1.0);
            prop_assert!(p.n == 1 || gamma2(alpha, p.n - 1) <= p.beta);
        }
    }
}
