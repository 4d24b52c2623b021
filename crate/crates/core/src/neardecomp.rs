//! The decomposition `h = sum_k T^k Q R^k h + T^{p+1} R^{p+1} h` of the
//! elements of a nearly `T^{-1}` invariant subspace, the factorizations
//! `h = sum_i q_i g_i` it produces, and the representation checks in `H^2`.

use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blaschke::FiniteBlaschke;
use crate::error::{invalid, precondition, Error, Result};
use crate::linalg;
use crate::operators::{
    apply_series_of_operator, backward_shift_operator, mult_operator, rq_from_defect, unitary_u,
    OperatorMatrix,
};
use crate::series::{TruncatedSeries, VectorSeries};
use crate::subspaces::{
    defect, near_invariance_check, orthonormalize, principal_split, subspace_distance, Ambient,
    AmbientKind, DefectBasis, Subspace, NEAR_INVARIANCE_TOL,
};
use crate::wold::{select_parameters, wold_decompose_auto, NormSpec, NormVariant, WoldCoordinates};
use crate::{CMatrix, CVector, C64};

/// Relative tolerance for reconstructing `h` from its summands.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Slack allowed in the coefficient and norm bounds.
pub const BOUND_TOL: f64 = 1e-8;
/// Adaptive iteration stops once the remainder drops below this fraction of `|h|`.
const REMAINDER_STOP: f64 = 1e-10;
/// Eigenvalues smaller than this are read as zeros at the origin.
const ORIGIN_ZERO: f64 = 1e-5;
/// Target size of discarded Taylor tails.
const TAIL_EPS: f64 = 1e-18;
const GRID: usize = 256;

/// Number of extra Taylor coefficients after which `r^n` falls below `TAIL_EPS`.
fn tail_pad(r: f64) -> usize {
    if r <= 0.0 {
        0
    } else {
        (TAIL_EPS.ln() / r.ln()).ceil() as usize + 4
    }
}

/// Largest expansion degree tried by [`settled`].
const MAX_EXPANSION: usize = 1 << 13;

/// Builds series at `start` and doubles the degree until the last quarter of
/// every coefficient sequence is below `1e-17` of its peak.
fn settled<F>(start: usize, build: F) -> Result<Vec<TruncatedSeries>>
where
    F: Fn(usize) -> Result<Vec<TruncatedSeries>>,
{
    let mut d = start.max(16);
    loop {
        let out = build(d)?;
        let done = out.iter().all(|s| {
            let c = s.coeffs();
            let peak = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let tail = c[c.len() - c.len() / 4..]
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max);
            tail <= 1e-17 * peak
        });
        if done || d >= MAX_EXPANSION {
            return Ok(out);
        }
        d *= 2;
    }
}

fn ser_vec<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| [c.re, c.im]))
}

fn ser_vecs<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(
        v.iter()
            .map(|x| x.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()),
    )
}

fn ser_mat<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(
        m.row_iter()
            .map(|r| r.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()),
    )
}

/// The summands `Q R^k h`, `k = 0..=p`, and the remainder `T^{p+1} R^{p+1} h`.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionTerms {
    #[serde(serialize_with = "ser_vecs")]
    pub terms: Vec<CVector>,
    #[serde(serialize_with = "ser_vec")]
    pub remainder: CVector,
    pub p: usize,
    pub remainder_norm: f64,
    /// `|h - sum_k T^k terms_k - remainder| / |h|`.
    pub residual: f64,
}

/// `M`, `T`, the operators `R`, `Q` and the rows of `G0`, prepared once and
/// shared by every decomposition in `M`.
#[derive(Debug, Clone)]
pub struct NearDecomposer {
    m: Subspace,
    t: OperatorMatrix,
    r: OperatorMatrix,
    q: OperatorMatrix,
    defect: DefectBasis,
    g0: Vec<CVector>,
}

impl NearDecomposer {
    pub fn new(m: &Subspace, t: &OperatorMatrix) -> Result<Self> {
        let d = defect(m, t)?;
        let (r, q) = rq_from_defect(m, t, &d)?;
        Ok(Self {
            m: m.clone(),
            t: t.clone(),
            r,
            q,
            g0: d.g0.frame().to_vec(),
            defect: d,
        })
    }

    /// Uses `g0` as the rows of `G0`. It must be an orthonormal basis of the
    /// computed defect space.
    pub fn with_g0(mut self, g0: Vec<CVector>) -> Result<Self> {
        let amb = self.m.ambient();
        if g0.len() != self.defect.l {
            return precondition(format!(
                "{} rows given for a defect space of dimension {}",
                g0.len(),
                self.defect.l
            ));
        }
        let span = orthonormalize(&g0, amb)?;
        let frame = Subspace::from_column_space(amb, &CMatrix::from_columns(&g0))?;
        let gram = Subspace::from_orthonormal(amb.clone(), g0.clone()).gram_defect();
        if gram > 1e-10 || span.dim() != g0.len() {
            return precondition(format!(
                "G0 rows are not orthonormal (Gram defect {gram:.3e})"
            ));
        }
        let dist = subspace_distance(&frame, &self.defect.g0)?;
        if dist > 1e-8 {
            return precondition(format!(
                "G0 rows do not span the defect space (distance {dist:.3e})"
            ));
        }
        self.g0 = g0;
        Ok(self)
    }

    pub fn subspace(&self) -> &Subspace {
        &self.m
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.t
    }

    pub fn r(&self) -> &OperatorMatrix {
        &self.r
    }

    pub fn q(&self) -> &OperatorMatrix {
        &self.q
    }

    pub fn defect(&self) -> &DefectBasis {
        &self.defect
    }

    pub fn g0(&self) -> &[CVector] {
        &self.g0
    }

    pub fn l(&self) -> usize {
        self.g0.len()
    }

    /// Largest admissible `p`: `floor(degree / growth) - 1`.
    pub fn max_depth(&self) -> usize {
        (self.m.ambient().degree() / self.t.growth().max(1)).saturating_sub(1)
    }

    /// With `p = None` the depth is adaptive: iteration stops once the
    /// remainder is below `1e-10 |h|` or the depth cap is reached.
    pub fn iterate(&self, h: &CVector, p: Option<usize>) -> Result<DecompositionTerms> {
        let amb = self.m.ambient();
        amb.check(h)?;
        let hn = amb.norm(h);
        let off = amb.norm(&self.m.residual(h)?);
        if off > RECONSTRUCTION_TOL * hn {
            return precondition(format!("h is not in M (distance {off:.3e})"));
        }
        let cap = self.max_depth();
        if let Some(p) = p {
            if p > cap {
                return Err(Error::DegreeOverflow(format!(
                    "p = {p} exceeds the truncation cap {cap}"
                )));
            }
        }
        let limit = p.unwrap_or(cap);
        let mut terms = Vec::new();
        let mut x = h.clone();
        let (remainder, remainder_norm) = loop {
            let k = terms.len();
            terms.push(self.q.apply(&x)?);
            x = self.r.apply(&x)?;
            let mut rem = x.clone();
            for _ in 0..=k {
                rem = self.t.apply(&rem)?;
            }
            let rn = amb.norm(&rem);
            if k == limit || (p.is_none() && rn <= REMAINDER_STOP * hn) {
                break (rem, rn);
            }
        };
        let mut acc = terms.last().cloned().unwrap_or_else(|| amb.zero_vector());
        for term in terms.iter().rev().skip(1) {
            acc = self.t.apply(&acc)? + term;
        }
        acc += &remainder;
        let residual = if hn > 0.0 {
            amb.norm(&(acc - h)) / hn
        } else {
            amb.norm(&acc)
        };
        if residual > RECONSTRUCTION_TOL {
            return Err(Error::TruncationInsufficient {
                residual,
                tolerance: RECONSTRUCTION_TOL,
            });
        }
        Ok(DecompositionTerms {
            p: terms.len() - 1,
            terms,
            remainder,
            remainder_norm,
            residual,
        })
    }

    /// `coeffs[(k, i)] = <Q R^k h, g_i>`.
    pub fn coefficients(&self, terms: &DecompositionTerms) -> CMatrix {
        let amb = self.m.ambient();
        CMatrix::from_fn(terms.terms.len(), self.l(), |k, i| {
            amb.inner(&terms.terms[k], &self.g0[i])
        })
    }

    /// `sum_i c_i(T) g_i` for the columns `c_i` of a coefficient table.
    pub fn synthesize(&self, table: &CMatrix) -> Result<CVector> {
        if table.nrows() == 0 {
            return Ok(self.m.ambient().zero_vector());
        }
        let series: Vec<TruncatedSeries> = (0..self.l())
            .map(|i| TruncatedSeries::from_vector(&table.column(i).into_owned()))
            .collect();
        apply_series_of_operator(&series, &self.t, &self.g0)
    }
}

/// Iterated Q/R decomposition of `h` in `M` under `T`; `spec` must be the
/// ambient norm.
pub fn iterate_decomposition(
    h: &CVector,
    m: &Subspace,
    t: &OperatorMatrix,
    spec: &NormSpec,
    p: Option<usize>,
) -> Result<DecompositionTerms> {
    if m.ambient().norm_spec() != spec {
        return Err(Error::AmbientMismatch(
            "the norm differs from the ambient norm of M".into(),
        ));
    }
    NearDecomposer::new(m, t)?.iterate(h, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    /// `alpha in [0, 1]`, norm `wold-one`, `T = T_B`.
    AlphaNonNegative,
    /// `alpha in [-1, 0)`, norm `wold-two`, `T = T_B / gamma`.
    AlphaNegative { s: f64, gamma: f64, beta: f64 },
}

impl Regime {
    fn radius(&self) -> f64 {
        match self {
            Regime::AlphaNonNegative => 1.0,
            Regime::AlphaNegative { s, .. } => *s,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Regime::AlphaNonNegative => 1.0,
            Regime::AlphaNegative { gamma, .. } => 1.0 / gamma,
        }
    }

    /// Constant in front of `|q|` in the norm bound.
    fn bound_factor(&self) -> f64 {
        match self {
            Regime::AlphaNonNegative => 1.0,
            Regime::AlphaNegative { gamma, beta, .. } => {
                (1.0 - (beta / gamma).powi(2)).max(0.0).sqrt()
            }
        }
    }
}

/// `h = sum_i g_i q_i` with `q_i = sum_k c_{ki} (cB)^k`, `c = 1` or `1/gamma`.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationResult {
    pub regime: Regime,
    pub q: VectorSeries,
    #[serde(serialize_with = "ser_mat")]
    pub coeff_table: CMatrix,
    /// `|h - sum_i q_i(T) g_i|` in the ambient norm.
    pub residual: f64,
    /// Same difference between the functions, in `H^2` (`H^2(sD)` for negative alpha).
    pub pointwise_residual: f64,
    pub h_norm: f64,
    /// `|q|` in `H^2(C^l)` (`H^2(sD, C^l)` for negative alpha).
    pub q_norm: f64,
    pub coeff_l2: f64,
    pub coeff_bound_ok: bool,
    pub bound_ok: bool,
    /// `|h| - factor * |q|`.
    pub bound_slack: f64,
    pub iterations: usize,
    pub remainder_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub regime: Regime,
    /// Distance of `q~ G0` to `M`, relative to `|h|`, per factorization.
    pub residuals: Vec<f64>,
    /// For nonnegative alpha, the same test for `T_{conj B} q` itself.
    pub toeplitz_residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Factorization engine for one subspace, one Blaschke product and one norm.
#[derive(Debug, Clone)]
pub struct Factorizer {
    dec: NearDecomposer,
    b: FiniteBlaschke,
    spec: NormSpec,
    regime: Regime,
}

impl Factorizer {
    pub fn alpha_pos(m: &Subspace, b: &FiniteBlaschke, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return invalid(format!("alpha must lie in [0, 1], got {alpha}"));
        }
        Self::build(
            m,
            b,
            NormSpec::wold_one(alpha, b.clone())?,
            Regime::AlphaNonNegative,
        )
    }

    pub fn alpha_neg(m: &Subspace, b: &FiniteBlaschke, alpha: f64, s: f64) -> Result<Self> {
        if !(-1.0..0.0).contains(&alpha) {
            return invalid(format!("alpha must lie in [-1, 0), got {alpha}"));
        }
        let p = select_parameters(b, alpha, s)?;
        let regime = Regime::AlphaNegative {
            s,
            gamma: p.gamma,
            beta: p.beta,
        };
        Self::build(m, b, NormSpec::wold_two(alpha, p.n, b.clone())?, regime)
    }

    fn build(m: &Subspace, b: &FiniteBlaschke, spec: NormSpec, regime: Regime) -> Result<Self> {
        let amb = m.ambient().with_norm(spec.clone())?;
        let m = if amb == *m.ambient() {
            m.clone()
        } else {
            orthonormalize(m.frame(), &amb)?
        };
        let mut t = mult_operator(b, &amb)?;
        if regime.scale() != 1.0 {
            t = t.scaled(regime.scale());
        }
        let near = near_invariance_check(&m, &t, 1, NEAR_INVARIANCE_TOL)?;
        if !near.is_nearly_invariant {
            return precondition(format!(
                "M is not nearly T_B^-1 invariant (residual {:.3e})",
                near.max_residual
            ));
        }
        Ok(Self {
            dec: NearDecomposer::new(&m, &t)?,
            b: b.clone(),
            spec,
            regime,
        })
    }

    pub fn with_g0(mut self, g0: Vec<CVector>) -> Result<Self> {
        self.dec = self.dec.with_g0(g0)?;
        Ok(self)
    }

    pub fn decomposer(&self) -> &NearDecomposer {
        &self.dec
    }

    pub fn subspace(&self) -> &Subspace {
        self.dec.subspace()
    }

    pub fn norm_spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn blaschke(&self) -> &FiniteBlaschke {
        &self.b
    }

    /// `sum_k table[k] (cB)^k` as series, one per column.
    fn expand(&self, table: &CMatrix, degree: usize) -> Vec<TruncatedSeries> {
        let c = C64::new(self.regime.scale(), 0.0);
        (0..table.ncols())
            .map(|i| {
                let mut acc = TruncatedSeries::zeros(degree);
                for k in (0..table.nrows()).rev() {
                    let shifted = self.b.mul_series(&acc, degree).scale(c);
                    acc = shifted.add(&TruncatedSeries::constant(table[(k, i)], degree));
                }
                acc
            })
            .collect()
    }

    pub fn factorize(&self, h: &CVector) -> Result<FactorizationResult> {
        let dec = &self.dec;
        let amb = dec.subspace().ambient();
        let terms = dec.iterate(h, None)?;
        let table = dec.coefficients(&terms);
        let rows = table.nrows();
        let h_norm = amb.norm(h);
        let residual = amb.norm(&(h - dec.synthesize(&table)?));

        let start = rows * self.b.degree() + tail_pad(self.b.max_zero_modulus());
        let q_series = settled(start, |d| Ok(self.expand(&table, d)))?;
        let s = self.regime.radius();
        let q_norm = q_series
            .iter()
            .map(|q| q.dilate(s).map(|d| d.norm_h2().powi(2)))
            .sum::<Result<f64>>()?
            .sqrt();

        let vectors: Vec<&CVector> = std::iter::once(h).chain(dec.g0()).collect();
        let functions = match amb.kind() {
            AmbientKind::Taylor { .. } => vectors
                .iter()
                .map(|v| to_function(amb, v, amb.degree()))
                .collect::<Result<Vec<_>>>()?,
            AmbientKind::Wold { .. } => {
                let start = (amb.degree() + 1 + rows) * self.b.degree();
                let fd = settled(start, |d| {
                    vectors.iter().map(|v| to_function(amb, v, d)).collect()
                })?[0]
                    .degree()
                    .max(q_series[0].degree());
                vectors
                    .iter()
                    .map(|v| to_function(amb, v, fd))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let fd = functions[0].degree();
        let mut sum = TruncatedSeries::zeros(fd);
        for (g, q) in functions[1..].iter().zip(&q_series) {
            sum = sum.add(&g.mul(&q.resize(fd), fd));
        }
        let pointwise_residual = functions[0].sub(&sum).dilate(s)?.norm_h2();

        let coeff_l2 = table.norm();
        let bound_slack = h_norm - self.regime.bound_factor() * q_norm;
        Ok(FactorizationResult {
            regime: self.regime,
            q: VectorSeries::new(q_series)?,
            coeff_table: table,
            residual,
            pointwise_residual,
            h_norm,
            q_norm,
            coeff_l2,
            coeff_bound_ok: coeff_l2 <= h_norm + BOUND_TOL,
            bound_ok: bound_slack >= -BOUND_TOL,
            bound_slack,
            iterations: terms.p,
            remainder_norm: terms.remainder_norm,
        })
    }

    /// Checks that the shifted coefficient tables `C_k -> C_{k+1}` describe
    /// functions `q~` with `q~ G0` in `M`.
    pub fn invariance_check(&self, results: &[FactorizationResult]) -> Result<InvarianceReport> {
        let dec = &self.dec;
        let m = dec.subspace();
        let amb = m.ambient();
        let b0 = self.b.taylor(0).coeff(0).conj();
        let mut residuals = Vec::with_capacity(results.len());
        let mut toeplitz = Vec::new();
        for f in results {
            if f.coeff_table.ncols() != dec.l() {
                return Err(Error::AmbientMismatch(
                    "factorization from another subspace".into(),
                ));
            }
            let rows = f.coeff_table.nrows();
            let scale = if f.h_norm > 0.0 { f.h_norm } else { 1.0 };
            let distance = |table: &CMatrix| -> Result<f64> {
                let v = dec.synthesize(table)?;
                Ok(amb.norm(&m.residual(&v)?) / scale)
            };
            let shifted = f
                .coeff_table
                .rows(1.min(rows), rows.saturating_sub(1))
                .into_owned();
            residuals.push(distance(&shifted)?);
            if self.regime == Regime::AlphaNonNegative && rows > 0 {
                // T_{conj B} 1 = conj(B(0)), so the literal image adds that constant.
                let mut lit = CMatrix::zeros(rows.max(2) - 1, dec.l());
                lit.rows_mut(0, rows - 1).copy_from(&shifted);
                for i in 0..dec.l() {
                    lit[(0, i)] += b0 * f.coeff_table[(0, i)];
                }
                toeplitz.push(distance(&lit)?);
            }
        }
        let max_residual = residuals
            .iter()
            .chain(&toeplitz)
            .copied()
            .fold(0.0, f64::max);
        Ok(InvarianceReport {
            regime: self.regime,
            residuals,
            toeplitz_residuals: toeplitz,
            max_residual,
            tolerance: RECONSTRUCTION_TOL,
            pass: max_residual < RECONSTRUCTION_TOL,
        })
    }
}

pub fn factor_alpha_pos(
    h: &CVector,
    m: &Subspace,
    b: &FiniteBlaschke,
    alpha: f64,
) -> Result<FactorizationResult> {
    Factorizer::alpha_pos(m, b, alpha)?.factorize(h)
}

pub fn factor_alpha_neg(
    h: &CVector,
    m: &Subspace,
    b: &FiniteBlaschke,
    alpha: f64,
    s: f64,
) -> Result<FactorizationResult> {
    Factorizer::alpha_neg(m, b, alpha, s)?.factorize(h)
}

pub fn invariance_check_n(
    factorizer: &Factorizer,
    results: &[FactorizationResult],
) -> Result<InvarianceReport> {
    factorizer.invariance_check(results)
}

/// The scalar function behind an ambient vector, as a Taylor series of the
/// given degree.
pub fn to_function(amb: &Ambient, v: &CVector, degree: usize) -> Result<TruncatedSeries> {
    amb.check(v)?;
    match amb.kind() {
        AmbientKind::Taylor { components: 1 } => Ok(TruncatedSeries::from_vector(v).resize(degree)),
        AmbientKind::Taylor { .. } => Err(Error::AmbientMismatch("vector-valued ambient".into())),
        AmbientKind::Wold { blaschke } => {
            let m = blaschke.degree();
            let coords = CMatrix::from_fn(amb.degree() + 1, m, |k, j| v[amb.index(j, k)]);
            WoldCoordinates::from_coords(blaschke.clone(), coords)?.reconstruct(degree)
        }
    }
}

fn require_h2(amb: &Ambient, components: Option<usize>) -> Result<()> {
    let spec = amb.norm_spec();
    let AmbientKind::Taylor { components: c } = amb.kind() else {
        return Err(Error::AmbientMismatch(
            "a Taylor ambient is required".into(),
        ));
    };
    if spec.variant() != NormVariant::AlphaStandard || spec.alpha() != 0.0 {
        return Err(Error::AmbientMismatch("the H^2 norm is required".into()));
    }
    if let Some(want) = components {
        if *c != want {
            return Err(Error::AmbientMismatch(format!(
                "{c} components, expected {want}"
            )));
        }
    }
    Ok(())
}

/// A matrix `Phi` of analytic functions, `rows x cols`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "InnerJson", into = "InnerJson")]
pub struct InnerCandidate {
    entries: Vec<Vec<TruncatedSeries>>,
}

#[derive(Serialize, Deserialize)]
struct InnerJson {
    entries: Vec<Vec<TruncatedSeries>>,
}

impl TryFrom<InnerJson> for InnerCandidate {
    type Error = Error;
    fn try_from(raw: InnerJson) -> Result<Self> {
        InnerCandidate::new(raw.entries)
    }
}

impl From<InnerCandidate> for InnerJson {
    fn from(c: InnerCandidate) -> Self {
        Self { entries: c.entries }
    }
}

impl InnerCandidate {
    pub fn new(entries: Vec<Vec<TruncatedSeries>>) -> Result<Self> {
        let cols = entries.first().map(|r| r.len()).unwrap_or(0);
        if cols == 0 || entries.iter().any(|r| r.len() != cols) {
            return invalid("Phi needs a nonempty rectangular table of entries");
        }
        if cols > entries.len() {
            return invalid("Phi must have at most as many columns as rows");
        }
        Ok(Self { entries })
    }

    /// `z^{m+1} (0, 1)^t`.
    pub fn example(m: usize) -> Self {
        Self {
            entries: vec![
                vec![TruncatedSeries::zeros(m + 1)],
                vec![TruncatedSeries::monomial(m + 1, m + 1)],
            ],
        }
    }

    /// `z^k I_l`.
    pub fn monomial_identity(l: usize, k: usize) -> Self {
        let entries = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        if i == j {
                            TruncatedSeries::monomial(k, k)
                        } else {
                            TruncatedSeries::zeros(k)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { entries }
    }

    pub fn scalar(theta: TruncatedSeries) -> Self {
        Self {
            entries: vec![vec![theta]],
        }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &TruncatedSeries {
        &self.entries[i][j]
    }

    pub fn eval(&self, z: C64) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.rows(), self.cols());
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[(i, j)] = e.eval(z)?;
            }
        }
        Ok(out)
    }

    /// `max_theta max |Phi^* Phi - I|` over `grid` points of the circle.
    pub fn isometry_defect(&self, grid: usize) -> Result<f64> {
        let id = CMatrix::identity(self.cols(), self.cols());
        let mut worst: f64 = 0.0;
        for k in 0..grid {
            let z = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / grid as f64);
            let p = self.eval(z)?;
            worst = worst.max(linalg::max_abs(&(p.adjoint() * &p - &id)));
        }
        Ok(worst)
    }

    /// Largest index carrying a non-negligible coefficient.
    fn effective_degree(&self) -> usize {
        let peak = self
            .entries
            .iter()
            .flatten()
            .flat_map(|e| e.coeffs())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        self.entries
            .iter()
            .flatten()
            .filter_map(|e| e.coeffs().iter().rposition(|c| c.norm() > 1e-14 * peak))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerCandidateReport {
    pub isometry_defect: f64,
    /// Largest principal sine between `F` and `H^2(C^l) ⊖ Phi H^2(C^l')`.
    pub subspace_distance: f64,
    pub complement_dim: usize,
    pub pass: bool,
}

/// Compares `F` with the truncation of `H^2(C^l) ⊖ Phi H^2(C^l')`. Only the
/// columns `Phi z^j` that fit inside the truncation are used.
pub fn verify_inner_candidate(f: &Subspace, phi: &InnerCandidate) -> Result<InnerCandidateReport> {
    let amb = f.ambient();
    require_h2(amb, Some(phi.rows()))?;
    let d = amb.degree();
    let eff = phi.effective_degree();
    let mut cols = Vec::new();
    if eff <= d {
        for j in 0..phi.cols() {
            for shift in 0..=(d - eff) {
                let comps: Vec<TruncatedSeries> = (0..phi.rows())
                    .map(|i| phi.entry(i, j).shift_up(shift, d))
                    .collect();
                cols.push(amb.embed_vector(&VectorSeries::new(comps)?)?);
            }
        }
    }
    let full = Subspace::full(amb.clone());
    let complement = if cols.is_empty() {
        full
    } else {
        let range = Subspace::from_column_space(amb, &CMatrix::from_columns(&cols))?;
        principal_split(&full, &range, 1e-10)?.1
    };
    let isometry_defect = phi.isometry_defect(GRID)?;
    let subspace_distance = subspace_distance(f, &complement)?;
    Ok(InnerCandidateReport {
        isometry_defect,
        subspace_distance,
        complement_dim: complement.dim(),
        pass: isometry_defect <= 1e-8 && subspace_distance < 1e-7,
    })
}

/// Result of the scalar Beurling–Lax synthesis `F = K_theta`.
#[derive(Debug, Clone, Serialize)]
pub struct BeurlingLaxResult {
    pub theta: FiniteBlaschke,
    pub eigenvalues: Vec<C64>,
    pub invariance_residual: f64,
    /// Largest principal sine between `F` and `K_theta` at the same truncation.
    pub subspace_distance: f64,
}

fn sstar_residual(f: &Subspace) -> Result<f64> {
    let bs = backward_shift_operator(f.ambient())?;
    let mut worst: f64 = 0.0;
    for v in f.frame() {
        worst = worst.max(f.ambient().norm(&f.residual(&bs.apply(v)?)?));
    }
    Ok(worst)
}

/// The finite Blaschke product `theta` with `F = K_theta`, for a nonzero
/// finite-dimensional `S^*`-invariant `F` in scalar `H^2`. The zeros are the
/// conjugates of the eigenvalues of `S^*` restricted to `F`.
pub fn scalar_beurling_lax(f: &Subspace) -> Result<BeurlingLaxResult> {
    let amb = f.ambient();
    require_h2(amb, Some(1))?;
    if f.dim() == 0 {
        return invalid("F is the zero subspace");
    }
    let invariance_residual = sstar_residual(f)?;
    if invariance_residual > NEAR_INVARIANCE_TOL {
        return precondition(format!(
            "F is not S*-invariant (residual {invariance_residual:.3e})"
        ));
    }
    let bs = backward_shift_operator(amb)?;
    let images: Vec<CVector> = f
        .frame()
        .iter()
        .map(|v| bs.apply(v))
        .collect::<Result<_>>()?;
    let a = CMatrix::from_fn(f.dim(), f.dim(), |i, j| {
        amb.inner(&images[j], &f.frame()[i])
    });
    let eigenvalues = linalg::eigenvalues(&a)?;
    let mut origin = 0;
    let mut zeros = Vec::new();
    for &lam in &eigenvalues {
        if lam.norm() >= 1.0 {
            return Err(Error::Numeric(format!(
                "eigenvalue {lam} of S*|F lies outside the disc"
            )));
        }
        if lam.norm() < ORIGIN_ZERO {
            origin += 1;
        } else {
            zeros.push(lam.conj());
        }
    }
    let theta = FiniteBlaschke::new(origin, zeros, true)?;
    let basis = theta.model_space_basis(amb.degree())?;
    let kt: Vec<CVector> = basis.basis().iter().map(|e| amb.embed(e)).collect();
    let subspace_distance = subspace_distance(f, &orthonormalize(&kt, amb)?)?;
    Ok(BeurlingLaxResult {
        theta,
        eigenvalues,
        invariance_residual,
        subspace_distance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationReport {
    #[serde(rename = "F_prime")]
    pub f_prime: Subspace,
    pub l: usize,
    pub h_degree: usize,
    pub sstar_invariance_residual: f64,
    pub phi: Option<InnerCandidate>,
    pub subspace_distance: Option<f64>,
    /// `max |<f_a, f_b> - <h_a, h_b>|` over the frame of `M`.
    pub isometry_defect: f64,
    /// Largest least-squares residual of `U f = h F0`.
    pub solve_residual: f64,
    /// The solutions `h` for the frame vectors of `M`, in `H^2(C^l)`.
    #[serde(skip)]
    pub h: Vec<CVector>,
}

/// Maps `M` through `U`, solves `U f = h F0` for every frame vector and
/// reports the space `F'` of the `h`. For `l = 1` the inner function of `F'`
/// is synthesized as well.
pub fn representation_check_h2(
    m: &Subspace,
    b: &FiniteBlaschke,
    h_degree: usize,
    g0: Option<Vec<CVector>>,
) -> Result<RepresentationReport> {
    let amb = m.ambient();
    require_h2(amb, Some(1))?;
    let t = mult_operator(b, amb)?;
    let near = near_invariance_check(m, &t, 1, NEAR_INVARIANCE_TOL)?;
    if !near.is_nearly_invariant {
        return precondition(format!(
            "M is not nearly T_B^-1 invariant (residual {:.3e})",
            near.max_residual
        ));
    }
    let mut dec = NearDecomposer::new(m, &t)?;
    if let Some(g0) = g0 {
        dec = dec.with_g0(g0)?;
    }
    let l = dec.l();
    let u = unitary_u(b, amb.degree(), None)?;
    let wamb = u.forward.codomain().clone();
    let f0: Vec<CVector> = dec
        .g0()
        .iter()
        .map(|g| u.forward.apply(g))
        .collect::<Result<_>>()?;

    let hd1 = h_degree + 1;
    let mut a = CMatrix::zeros(wamb.dim(), l * hd1);
    for (i, row) in f0.iter().enumerate() {
        for n in 0..hd1 {
            for c in 0..wamb.components() {
                for k in 0..=wamb.degree() {
                    if k + n <= wamb.degree() {
                        a[(wamb.index(c, k + n), i * hd1 + n)] = row[wamb.index(c, k)];
                    }
                }
            }
        }
    }
    let sv = linalg::svd(&a);
    let smax = sv.s.first().copied().unwrap_or(0.0);
    if sv.s.last().copied().unwrap_or(0.0) <= 1e-12 * smax {
        return Err(Error::Numeric(
            "the rows of F0 are rank-deficient at this truncation".into(),
        ));
    }
    let pinv = linalg::pinv(&a, 1e-12);
    let hamb = Ambient::h2_vector(l, h_degree)?;
    let mut h = Vec::with_capacity(m.dim());
    let mut solve_residual: f64 = 0.0;
    for f in m.frame() {
        let uf = u.forward.apply(f)?;
        let coef = &pinv * &uf;
        solve_residual = solve_residual.max((&a * &coef - &uf).norm());
        h.push(coef);
    }
    let mut isometry_defect: f64 = 0.0;
    for (x, fx) in m.frame().iter().enumerate() {
        for (y, fy) in m.frame().iter().enumerate() {
            let d = amb.inner(fx, fy) - hamb.inner(&h[x], &h[y]);
            isometry_defect = isometry_defect.max(d.norm());
        }
    }
    let f_prime = orthonormalize(&h, &hamb)?;
    let sstar_invariance_residual = sstar_residual(&f_prime)?;
    let (phi, distance) =
        if l == 1 && f_prime.dim() < hamb.dim() && sstar_invariance_residual <= NEAR_INVARIANCE_TOL
        {
            let bl = scalar_beurling_lax(&f_prime)?;
            let deg = h_degree + tail_pad(bl.theta.max_zero_modulus());
            (
                Some(InnerCandidate::scalar(bl.theta.taylor(deg))),
                Some(bl.subspace_distance),
            )
        } else {
            (None, None)
        };
    Ok(RepresentationReport {
        f_prime,
        l,
        h_degree,
        sstar_invariance_residual,
        phi,
        subspace_distance: distance,
        isometry_defect,
        solve_residual,
        h,
    })
}

/// One named check of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub details: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, residual: f64, details: Value) -> Self {
        let residual = if residual.is_finite() {
            residual
        } else {
            f64::MAX
        };
        Self {
            name: name.into(),
            pass,
            residual,
            details,
        }
    }

    /// Passes when `residual < tol`.
    pub fn below(name: impl Into<String>, residual: f64, tol: f64, details: Value) -> Self {
        Self::new(name, residual < tol, residual, details)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub checks: Vec<Check>,
    pub parameters: Value,
    pub pass: bool,
}

impl ScenarioReport {
    pub fn new(parameters: Value) -> Self {
        Self {
            checks: Vec::new(),
            parameters,
            pass: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: ScenarioReport) {
        for c in other.checks {
            self.push(c);
        }
    }
}

/// A subspace of the form `phi_a * (span{x_1 B^k} ⊕ span{x_2 B^i})` with its
/// natural defect basis `phi_a x_1, phi_a x_2`.
#[derive(Debug, Clone)]
pub struct ExampleSubspace {
    pub subspace: Subspace,
    pub generators: Vec<CVector>,
    /// `phi_a x_1, phi_a x_2` as ambient vectors.
    pub natural_g0: Vec<CVector>,
    pub even: usize,
    pub odd: usize,
}

fn check_a(a: C64) -> Result<()> {
    if !(a.norm() > 0.0 && a.norm() < 1.0) {
        return invalid(format!("a must satisfy 0 < |a| < 1, got {a}"));
    }
    Ok(())
}

/// Truncation degree used for the Example with polynomial part up to `content`.
pub fn example_working_degree(a: C64, content: usize) -> usize {
    content + tail_pad(a.norm())
}

/// `M = phi_a (span{z^{2k} : start <= k < even} ⊕ span{z^{2i+1} : i <= m})` in
/// `H^2`; `literal_naturals` starts the even part at `k = 1`.
pub fn example_subspace(
    a: C64,
    m: usize,
    even: usize,
    literal_naturals: bool,
) -> Result<ExampleSubspace> {
    check_a(a)?;
    if even == 0 {
        return invalid("at least one even generator is needed");
    }
    let content = (2 * (even - 1)).max(2 * m + 1);
    let d = example_working_degree(a, content);
    let amb = Ambient::h2(d);
    let phi = FiniteBlaschke::automorphism(a)?.taylor(d);
    let start = usize::from(literal_naturals);
    let mut generators: Vec<CVector> = (start..even)
        .map(|k| amb.embed(&phi.shift_up(2 * k, d)))
        .collect();
    generators.extend((0..=m).map(|i| amb.embed(&phi.shift_up(2 * i + 1, d))));
    let subspace = orthonormalize(&generators, &amb)?;
    let natural_g0 = vec![amb.embed(&phi), amb.embed(&phi.shift_up(1, d))];
    Ok(ExampleSubspace {
        subspace,
        generators,
        natural_g0,
        even: even - start,
        odd: m + 1,
    })
}

/// The Example transported to Wold coordinates of a Blaschke product `b` of
/// degree `>= 2`: `z^2` becomes `B`, `1` and `z` become the first two
/// model-space basis functions `e_1`, `e_2`. The ambient has enough levels
/// for the tails of `phi_a e_j`.
pub fn example_type_subspace(
    b: &FiniteBlaschke,
    a: C64,
    m: usize,
    even: usize,
    norm: NormSpec,
) -> Result<ExampleSubspace> {
    check_a(a)?;
    if b.degree() < 2 {
        return precondition("the Example-type subspace needs deg B >= 2");
    }
    if even == 0 {
        return invalid("at least one even generator is needed");
    }
    let hd = 64 + 2 * (tail_pad(a.norm()) + tail_pad(b.max_zero_modulus()));
    let phi = FiniteBlaschke::automorphism(a)?.taylor(hd);
    let basis = b.model_space_basis(hd)?;
    let pieces: Vec<WoldCoordinates> = (0..2)
        .map(|j| wold_decompose_auto(&phi.mul(&basis.basis()[j], hd), b))
        .collect::<Result<_>>()?;
    let peak = pieces
        .iter()
        .flat_map(|w| w.level_norms())
        .fold(0.0, f64::max);
    let used = pieces
        .iter()
        .map(|w| {
            w.level_norms()
                .iter()
                .rposition(|&x| x > 1e-17 * peak)
                .map_or(1, |k| k + 1)
        })
        .max()
        .unwrap_or(1);
    let levels = even.max(m + 1) + used + 2;
    let amb = Ambient::wold(b.clone(), levels - 1, norm)?;
    let place = |w: &WoldCoordinates, shift: usize| {
        let mut v = amb.zero_vector();
        for k in 0..used.min(w.levels()) {
            for c in 0..b.degree() {
                v[amb.index(c, k + shift)] = w.coords()[(k, c)];
            }
        }
        v
    };
    let mut generators: Vec<CVector> = (0..even).map(|k| place(&pieces[0], k)).collect();
    generators.extend((0..=m).map(|i| place(&pieces[1], i)));
    let subspace = orthonormalize(&generators, &amb)?;
    let natural_g0 = vec![place(&pieces[0], 0), place(&pieces[1], 0)];
    Ok(ExampleSubspace {
        subspace,
        generators,
        natural_g0,
        even,
        odd: m + 1,
    })
}

/// Series generators re-expressed in Wold coordinates of `b`. The ambient
/// keeps two spare levels above the last significant one.
pub fn wold_subspace(
    b: &FiniteBlaschke,
    generators: &[TruncatedSeries],
    norm: NormSpec,
) -> Result<(Subspace, Vec<CVector>)> {
    if generators.is_empty() {
        return invalid("at least one generator is needed");
    }
    let pieces: Vec<WoldCoordinates> = generators
        .iter()
        .map(|g| wold_decompose_auto(g, b))
        .collect::<Result<_>>()?;
    let peak = pieces
        .iter()
        .flat_map(|w| w.level_norms())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return invalid("the generators are all zero");
    }
    let used = pieces
        .iter()
        .filter_map(|w| {
            w.level_norms()
                .iter()
                .rposition(|&x| x > 1e-17 * peak)
                .map(|k| k + 1)
        })
        .max()
        .unwrap_or(1);
    let amb = Ambient::wold(b.clone(), used + 1, norm)?;
    let vectors: Vec<CVector> = pieces
        .iter()
        .map(|w| {
            let mut v = amb.zero_vector();
            for k in 0..used.min(w.levels()) {
                for c in 0..b.degree() {
                    v[amb.index(c, k)] = w.coords()[(k, c)];
                }
            }
            v
        })
        .collect();
    Ok((orthonormalize(&vectors, &amb)?, vectors))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub a: C64,
    pub m: usize,
    /// Number of even generators; `degree / 2 + 1` when absent.
    pub levels: Option<usize>,
    /// Highest power of `z` in the polynomial part of `M`.
    pub degree: usize,
    /// Reads `k in N` as `k >= 1`, which drops `phi_a` from `M`.
    #[serde(default)]
    pub literal_naturals: bool,
}

impl ExampleConfig {
    pub fn new(a: C64, m: usize, degree: usize) -> Self {
        Self {
            a,
            m,
            levels: None,
            degree,
            literal_naturals: false,
        }
    }

    pub fn even(&self) -> usize {
        self.levels.unwrap_or(self.degree / 2 + 1)
    }
}

/// The Example scenario: near invariance under `T_{z^2}`, the defect
/// `G0 = phi_a (1, z)`, the representation `F'` and the inner function
/// `Phi = z^{m+1} (0, 1)^t`.
pub fn example_section2(cfg: &ExampleConfig) -> Result<ScenarioReport> {
    let even = cfg.even();
    let ex = example_subspace(cfg.a, cfg.m, even, cfg.literal_naturals)?;
    let amb = ex.subspace.ambient().clone();
    let b = FiniteBlaschke::z_power(2)?;
    let t = mult_operator(&b, &amb)?;
    let h_degree = (even - 1).max(cfg.m);
    let mut report = ScenarioReport::new(json!({
        "a": [cfg.a.re, cfg.a.im],
        "m": cfg.m,
        "levels": even,
        "degree": cfg.degree,
        "working_degree": amb.degree(),
        "literal_naturals": cfg.literal_naturals,
        "h_degree": h_degree,
    }));

    let near = near_invariance_check(&ex.subspace, &t, 1, NEAR_INVARIANCE_TOL)?;
    let mut details = json!({ "preimage_dim": near.preimage_dim, "dim_M": ex.subspace.dim() });
    if let Some(w) = &near.witness {
        let phi = orthonormalize(&ex.natural_g0[..1], &amb)?;
        details["witness_distance_to_phi_a"] = json!(amb.norm(&phi.residual(w)?) / amb.norm(w));
    }
    report.push(Check::new(
        "near_invariance",
        near.is_nearly_invariant,
        near.max_residual,
        details,
    ));
    if !near.is_nearly_invariant {
        return Ok(report);
    }

    let d = defect(&ex.subspace, &t)?;
    report.push(Check::new(
        "defect_dimension",
        d.l == 2,
        0.0,
        json!({ "l": d.l }),
    ));
    let natural = orthonormalize(&ex.natural_g0, &amb)?;
    let g0_dist = subspace_distance(&d.g0, &natural)?;
    report.push(Check::below(
        "g0_is_phi_a_times_1_z",
        g0_dist,
        1e-8,
        json!({}),
    ));
    if d.l != 2 || g0_dist >= 1e-8 {
        return Ok(report);
    }

    let rep = representation_check_h2(&ex.subspace, &b, h_degree, Some(ex.natural_g0.clone()))?;
    report.push(Check::below(
        "f_prime_sstar_invariance",
        rep.sstar_invariance_residual,
        1e-8,
        json!({ "dim": rep.f_prime.dim() }),
    ));
    report.push(Check::below(
        "q_isometry",
        rep.isometry_defect,
        1e-8,
        json!({ "solve_residual": rep.solve_residual }),
    ));
    let phi = InnerCandidate::example(cfg.m);
    let v = verify_inner_candidate(&rep.f_prime, &phi)?;
    report.push(Check::below(
        "phi_isometry",
        v.isometry_defect,
        1e-8,
        json!({}),
    ));
    report.push(Check::below(
        "f_prime_equals_complement_of_phi",
        v.subspace_distance,
        1e-7,
        json!({ "complement_dim": v.complement_dim }),
    ));
    Ok(report)
}
