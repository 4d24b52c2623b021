//! Finite-dimensional subspaces of a coefficient space with a weighted inner
//! product: orthonormal frames, projections, intersections by principal
//! angles, the defect space `M ⊖ (M ∩ T H)` and the near-invariance test.
//!
//! Coefficient vectors are component-major: component `c`, index `n` sits at
//! `c * (degree + 1) + n`. In a Taylor ambient `n` is the power of `z`; in a
//! Wold ambient built on `B` the component is the model-space basis index and
//! `n` is the Wold level, which is exactly the coordinate picture of
//! `H^2(C^m)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blaschke::FiniteBlaschke;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Metric};
use crate::operators::OperatorMatrix;
use crate::series::{TruncatedSeries, VectorSeries};
use crate::wold::{wold_gram, NormSpec, NormVariant};
use crate::{CMatrix, CVector, C64};

/// Default cosine threshold `1 - tol` for intersections.
pub const INTERSECTION_TOL: f64 = 1e-8;
/// Default residual tolerance of the near-invariance test.
pub const NEAR_INVARIANCE_TOL: f64 = 1e-8;
/// Relative singular-value cutoff defining the numerical preimage.
const PREIMAGE_CUTOFF: f64 = 1e-9;
/// Relative cutoff for rank detection in Gram–Schmidt and column spaces.
const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmbientKind {
    /// `l` scalar Taylor series.
    Taylor { components: usize },
    /// Wold coordinates with respect to `blaschke`.
    Wold { blaschke: FiniteBlaschke },
}

/// Shape and inner product of a coefficient space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AmbientJson", into = "AmbientJson")]
pub struct Ambient {
    kind: AmbientKind,
    degree: usize,
    norm: NormSpec,
    metric: Arc<Metric>,
}

#[derive(Serialize, Deserialize)]
struct AmbientJson {
    #[serde(flatten)]
    kind: AmbientKind,
    degree: usize,
    #[serde(default = "NormSpec::h2")]
    norm: NormSpec,
}

impl TryFrom<AmbientJson> for Ambient {
    type Error = Error;
    fn try_from(raw: AmbientJson) -> Result<Self> {
        Ambient::new(raw.kind, raw.degree, raw.norm)
    }
}

impl From<Ambient> for AmbientJson {
    fn from(a: Ambient) -> Self {
        Self {
            kind: a.kind,
            degree: a.degree,
            norm: a.norm,
        }
    }
}

impl PartialEq for Ambient {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.degree == other.degree && self.norm == other.norm
    }
}

impl Ambient {
    pub fn new(kind: AmbientKind, degree: usize, norm: NormSpec) -> Result<Self> {
        let metric = build_metric(&kind, degree, &norm)?;
        Ok(Self {
            kind,
            degree,
            norm,
            metric: Arc::new(metric),
        })
    }

    /// Scalar `H^2` truncated at `degree`.
    pub fn h2(degree: usize) -> Self {
        Self::new(
            AmbientKind::Taylor { components: 1 },
            degree,
            NormSpec::h2(),
        )
        .expect("valid H2 ambient")
    }

    /// `H^2(C^l)` truncated at `degree`.
    pub fn h2_vector(l: usize, degree: usize) -> Result<Self> {
        Self::new(
            AmbientKind::Taylor { components: l },
            degree,
            NormSpec::h2(),
        )
    }

    pub fn taylor(l: usize, degree: usize, norm: NormSpec) -> Result<Self> {
        Self::new(AmbientKind::Taylor { components: l }, degree, norm)
    }

    /// Wold coordinates with respect to `b`, levels `0..=levels_degree`.
    pub fn wold(b: FiniteBlaschke, levels_degree: usize, norm: NormSpec) -> Result<Self> {
        Self::new(AmbientKind::Wold { blaschke: b }, levels_degree, norm)
    }

    pub fn with_norm(&self, norm: NormSpec) -> Result<Self> {
        Self::new(self.kind.clone(), self.degree, norm)
    }

    pub fn kind(&self) -> &AmbientKind {
        &self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn norm_spec(&self) -> &NormSpec {
        &self.norm
    }

    pub fn components(&self) -> usize {
        match &self.kind {
            AmbientKind::Taylor { components } => *components,
            AmbientKind::Wold { blaschke } => blaschke.degree(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components() * (self.degree + 1)
    }

    pub fn index(&self, component: usize, n: usize) -> usize {
        component * (self.degree + 1) + n
    }

    pub(crate) fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn gram(&self) -> CMatrix {
        self.metric.gram()
    }

    pub fn condition_number(&self) -> f64 {
        self.metric.condition_number()
    }

    pub fn inner(&self, x: &CVector, y: &CVector) -> C64 {
        self.metric.inner(x, y)
    }

    pub fn norm(&self, x: &CVector) -> f64 {
        self.metric.norm(x)
    }

    pub fn zero_vector(&self) -> CVector {
        CVector::zeros(self.dim())
    }

    /// Unit vector `e_{component, n}`.
    pub fn basis_vector(&self, component: usize, n: usize) -> CVector {
        let mut v = self.zero_vector();
        v[self.index(component, n)] = C64::new(1.0, 0.0);
        v
    }

    /// Embeds a scalar series (component 0), truncating or padding to the
    /// ambient degree.
    pub fn embed(&self, f: &TruncatedSeries) -> CVector {
        let mut v = self.zero_vector();
        v.rows_mut(0, self.degree + 1)
            .copy_from_slice(f.resize(self.degree).coeffs());
        v
    }

    pub fn embed_vector(&self, f: &VectorSeries) -> Result<CVector> {
        if f.len() != self.components() {
            return Err(Error::AmbientMismatch(format!(
                "{} components given, ambient has {}",
                f.len(),
                self.components()
            )));
        }
        let mut v = self.zero_vector();
        for (c, s) in f.components().iter().enumerate() {
            v.rows_mut(self.index(c, 0), self.degree + 1)
                .copy_from_slice(s.resize(self.degree).coeffs());
        }
        Ok(v)
    }

    pub fn to_vector_series(&self, v: &CVector) -> Result<VectorSeries> {
        VectorSeries::from_flat(v, self.components(), self.degree)
    }

    /// Largest `n` carrying a nonzero entry in any component.
    pub fn support_top(&self, v: &CVector) -> Option<usize> {
        let d1 = self.degree + 1;
        (0..self.dim())
            .filter(|&i| v[i] != C64::new(0.0, 0.0))
            .map(|i| i % d1)
            .max()
    }

    /// Indices with `n <= degree - reserve`, every component.
    pub fn guarded_indices(&self, reserve: usize) -> Vec<usize> {
        if reserve > self.degree {
            return Vec::new();
        }
        (0..self.components())
            .flat_map(|c| (0..=self.degree - reserve).map(move |n| (c, n)))
            .map(|(c, n)| self.index(c, n))
            .collect()
    }

    pub(crate) fn check(&self, v: &CVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::AmbientMismatch(format!(
                "vector of length {} in an ambient of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn same(&self, other: &Ambient) -> Result<()> {
        if self != other {
            return Err(Error::AmbientMismatch(
                "operands live in different ambients".into(),
            ));
        }
        Ok(())
    }

    /// Restriction of the metric to the coordinate subspace spanned by `idx`.
    pub(crate) fn sub_metric(&self, idx: &[usize]) -> Result<Metric> {
        match self.metric.as_ref() {
            Metric::Diagonal(w) => Ok(Metric::Diagonal(idx.iter().map(|&i| w[i]).collect())),
            Metric::Dense { gram, .. } => {
                Metric::dense(CMatrix::from_fn(idx.len(), idx.len(), |i, j| {
                    gram[(idx[i], idx[j])]
                }))
            }
        }
    }
}

fn build_metric(kind: &AmbientKind, degree: usize, norm: &NormSpec) -> Result<Metric> {
    match kind {
        AmbientKind::Taylor { components } => {
            if *components == 0 {
                return invalid("an ambient needs at least one component");
            }
            if norm.variant() == NormVariant::AlphaStandard {
                let w = norm.level_weights(degree + 1);
                return Ok(Metric::Diagonal(
                    (0..*components).flat_map(|_| w.iter().copied()).collect(),
                ));
            }
            let block = wold_gram(norm, degree)?;
            let d1 = degree + 1;
            let mut gram = CMatrix::zeros(components * d1, components * d1);
            for c in 0..*components {
                gram.view_mut((c * d1, c * d1), (d1, d1)).copy_from(&block);
            }
            Metric::dense(gram)
        }
        AmbientKind::Wold { blaschke } => {
            let w = match norm.variant() {
                NormVariant::AlphaStandard => {
                    if norm.alpha() != 0.0 {
                        return Err(Error::AmbientMismatch(
                            "a Wold ambient takes wold norms or plain H^2".into(),
                        ));
                    }
                    vec![1.0; degree + 1]
                }
                _ => {
                    if let Some(b) = norm.blaschke() {
                        if b != blaschke {
                            return Err(Error::AmbientMismatch(
                                "norm and ambient are built on different Blaschke products".into(),
                            ));
                        }
                    }
                    norm.level_weights(degree + 1)
                }
            };
            Ok(Metric::Diagonal(
                (0..blaschke.degree())
                    .flat_map(|_| w.iter().copied())
                    .collect(),
            ))
        }
    }
}

/// An orthonormal frame in an ambient; possibly empty (the zero subspace).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SubspaceJson", into = "SubspaceJson")]
pub struct Subspace {
    ambient: Ambient,
    frame: Vec<CVector>,
}

#[derive(Serialize, Deserialize)]
struct SubspaceJson {
    ambient: Ambient,
    frame: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<SubspaceJson> for Subspace {
    type Error = Error;
    fn try_from(raw: SubspaceJson) -> Result<Self> {
        let vectors: Vec<CVector> = raw
            .frame
            .iter()
            .map(|v| CVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1]))))
            .collect();
        if vectors.is_empty() {
            return Ok(Subspace::zero(raw.ambient));
        }
        orthonormalize(&vectors, &raw.ambient)
    }
}

impl From<Subspace> for SubspaceJson {
    fn from(s: Subspace) -> Self {
        Self {
            frame: s
                .frame
                .iter()
                .map(|v| v.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
            ambient: s.ambient,
        }
    }
}

impl Subspace {
    pub fn zero(ambient: Ambient) -> Self {
        Self {
            ambient,
            frame: Vec::new(),
        }
    }

    /// The whole truncated space.
    pub fn full(ambient: Ambient) -> Self {
        let id = CMatrix::identity(ambient.dim(), ambient.dim());
        Self::from_column_space(&ambient, &id).expect("identity has full rank")
    }

    /// Orthonormal frame of the column space of `m` (columns are ambient
    /// vectors).
    pub fn from_column_space(ambient: &Ambient, m: &CMatrix) -> Result<Self> {
        if m.nrows() != ambient.dim() {
            return Err(Error::AmbientMismatch(format!(
                "matrix with {} rows in an ambient of dimension {}",
                m.nrows(),
                ambient.dim()
            )));
        }
        let metric = ambient.metric();
        let basis = linalg::column_space(&metric.whiten_mat(m), RANK_CUTOFF);
        let frame = metric.unwhiten_mat(&basis);
        Ok(Self {
            ambient: ambient.clone(),
            frame: frame.column_iter().map(|c| c.into_owned()).collect(),
        })
    }

    pub(crate) fn from_orthonormal(ambient: Ambient, frame: Vec<CVector>) -> Self {
        Self { ambient, frame }
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn frame(&self) -> &[CVector] {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    /// Frame vectors as the columns of a matrix.
    pub fn frame_matrix(&self) -> CMatrix {
        if self.frame.is_empty() {
            return CMatrix::zeros(self.ambient.dim(), 0);
        }
        CMatrix::from_columns(&self.frame)
    }

    /// `P_M v = sum_i <v, f_i> f_i`.
    pub fn project(&self, v: &CVector) -> Result<CVector> {
        self.ambient.check(v)?;
        let mut out = self.ambient.zero_vector();
        for f in &self.frame {
            out.axpy(self.ambient.inner(v, f), f, C64::new(1.0, 0.0));
        }
        Ok(out)
    }

    /// `v - P_M v`.
    pub fn residual(&self, v: &CVector) -> Result<CVector> {
        Ok(v - self.project(v)?)
    }

    /// Matrix of the orthogonal projection, `F F^H G`.
    pub fn projection_matrix(&self) -> CMatrix {
        let f = self.frame_matrix();
        let gf = self.ambient.metric().apply_mat(&f);
        &f * gf.adjoint()
    }

    /// `max |<f_i, f_j> - delta_ij|`.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.frame.iter().enumerate() {
            for (j, b) in self.frame.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.ambient.inner(a, b) - target).norm());
            }
        }
        worst
    }

    /// `M ⊕ span{v}` (the new direction is orthonormalized against `M`).
    pub fn adjoin(&self, v: &CVector) -> Result<Self> {
        let mut vectors = self.frame.clone();
        vectors.push(v.clone());
        orthonormalize(&vectors, &self.ambient)
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Vectors whose
/// residual falls below `1e-10` times the largest input norm are dropped.
pub fn orthonormalize(vectors: &[CVector], ambient: &Ambient) -> Result<Subspace> {
    if vectors.is_empty() {
        return invalid("nothing to orthonormalize");
    }
    for v in vectors {
        ambient.check(v)?;
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("vectors must be finite");
        }
    }
    let scale = vectors.iter().map(|v| ambient.norm(v)).fold(0.0, f64::max);
    let mut frame: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for f in &frame {
                let c = ambient.inner(&w, f);
                w.axpy(-c, f, C64::new(1.0, 0.0));
            }
        }
        let n = ambient.norm(&w);
        if n > RANK_CUTOFF * scale && n > 0.0 {
            frame.push(w.unscale(n));
        }
    }
    Ok(Subspace {
        ambient: ambient.clone(),
        frame,
    })
}

/// `P_M v`.
pub fn project(v: &CVector, m: &Subspace) -> Result<CVector> {
    m.project(v)
}

/// Splits `M` into the directions making principal cosine `>= 1 - tol` with
/// `W` and their orthogonal complement inside `M`.
pub fn principal_split(m: &Subspace, w: &Subspace, tol: f64) -> Result<(Subspace, Subspace)> {
    m.ambient.same(&w.ambient)?;
    let amb = m.ambient.clone();
    if m.dim() == 0 {
        return Ok((Subspace::zero(amb.clone()), Subspace::zero(amb)));
    }
    if w.dim() == 0 {
        return Ok((Subspace::zero(amb), m.clone()));
    }
    let fm = m.frame_matrix();
    let fw = w.frame_matrix();
    let cross = fm.adjoint() * amb.metric().apply_mat(&fw);
    let (ev, vecs) = linalg::hermitian_eigen(&(&cross * cross.adjoint()));
    let threshold = (1.0 - tol).powi(2);
    let rotated = &fm * vecs;
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (i, &e) in ev.iter().enumerate() {
        let v = rotated.column(i).into_owned();
        if e >= threshold {
            inside.push(v);
        } else {
            outside.push(v);
        }
    }
    Ok((
        Subspace::from_orthonormal(amb.clone(), inside),
        Subspace::from_orthonormal(amb, outside),
    ))
}

/// `M ∩ W` by principal angles (`cos >= 1 - tol`).
pub fn intersect(m: &Subspace, w: &Subspace, tol: f64) -> Result<Subspace> {
    Ok(principal_split(m, w, tol)?.0)
}

/// Largest principal sine between two subspaces of equal dimension; `1` when
/// the dimensions differ.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    a.ambient.same(&b.ambient)?;
    if a.dim() != b.dim() {
        return Ok(1.0);
    }
    if a.dim() == 0 {
        return Ok(0.0);
    }
    let metric = a.ambient.metric();
    let one_way = |x: &Subspace, y: &Subspace| -> f64 {
        let fx = x.frame_matrix();
        let px = &fx - y.projection_matrix() * &fx;
        linalg::spectral_norm(&metric.whiten_mat(&px))
    };
    Ok(one_way(a, b).max(one_way(b, a)).min(1.0))
}

/// `M ∩ W` on one side and `M ⊖ (M ∩ W)` on the other, as returned by the
/// defect computation.
#[derive(Debug, Clone, Serialize)]
pub struct DefectBasis {
    pub l: usize,
    /// Rows of `G_0`, orthonormal in the ambient inner product.
    #[serde(rename = "G0")]
    pub g0: Subspace,
    #[serde(skip)]
    pub intersection: Subspace,
}

/// Closed span of `T` applied to the guarded domain.
pub fn range_subspace(t: &OperatorMatrix, guard: usize) -> Result<Subspace> {
    let idx = t.guarded_domain(guard);
    let cols = t.matrix().select_columns(&idx);
    Subspace::from_column_space(t.codomain(), &cols)
}

/// `G_0` = orthonormal frame of `M ⊖ (M ∩ T H)`, `H` restricted to the
/// guarded domain so that `T` loses nothing to truncation there.
pub fn defect(m: &Subspace, t: &OperatorMatrix) -> Result<DefectBasis> {
    m.ambient.same(t.codomain())?;
    if m.dim() == 0 {
        return invalid("the subspace is zero");
    }
    let range = range_subspace(t, 1)?;
    let (intersection, outside) = principal_split(m, &range, INTERSECTION_TOL)?;
    if outside.dim() == 0 {
        return Err(Error::DegenerateDefect);
    }
    Ok(DefectBasis {
        l: outside.dim(),
        g0: outside,
        intersection,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NearInvarianceReport {
    pub is_nearly_invariant: bool,
    pub max_residual: f64,
    /// Unit preimage vector with the largest distance to `M`.
    #[serde(serialize_with = "serialize_opt_vector")]
    pub witness: Option<CVector>,
    pub preimage_dim: usize,
    pub degree: usize,
    pub guard: usize,
    pub tolerance: f64,
}

fn serialize_opt_vector<S: serde::Serializer>(
    v: &Option<CVector>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_seq(v.iter().map(|c| [c.re, c.im])),
        None => s.serialize_none(),
    }
}

/// Tests `T g in M => g in M` on the truncation: the preimage
/// `{g : (I - P_M) T g = 0}` is computed over vectors supported in
/// `n <= degree - guard * growth(T)`, and the report gives the largest
/// distance from a unit preimage vector to `M`.
pub fn near_invariance_check(
    m: &Subspace,
    t: &OperatorMatrix,
    guard: usize,
    tol: f64,
) -> Result<NearInvarianceReport> {
    m.ambient.same(t.codomain())?;
    m.ambient.same(t.domain())?;
    let amb = &m.ambient;
    let preimage = preimage(m, t, guard)?;
    let mut report = NearInvarianceReport {
        is_nearly_invariant: true,
        max_residual: 0.0,
        witness: None,
        preimage_dim: preimage.ncols(),
        degree: amb.degree(),
        guard,
        tolerance: tol,
    };
    if preimage.ncols() == 0 {
        return Ok(report);
    }
    let off = &preimage - m.projection_matrix() * &preimage;
    let d = linalg::svd(&amb.metric().whiten_mat(&off));
    report.max_residual = d.s.first().copied().unwrap_or(0.0);
    report.is_nearly_invariant = report.max_residual <= tol;
    if !report.is_nearly_invariant {
        report.witness = Some(&preimage * d.v.column(0));
    }
    Ok(report)
}

/// Metric-orthonormal basis (as columns) of the numerical preimage of `M`
/// under `T` on the guarded domain.
fn preimage(m: &Subspace, t: &OperatorMatrix, guard: usize) -> Result<CMatrix> {
    let amb = &m.ambient;
    let idx = t.guarded_domain(guard);
    if idx.is_empty() {
        return Ok(CMatrix::zeros(amb.dim(), 0));
    }
    let te = t.matrix().select_columns(&idx);
    let off = &te - m.projection_matrix() * &te;
    // Change of variables y = E L_E^{-H} u makes |y| = |u|_2.
    let dom = amb.sub_metric(&idx)?;
    let id = CMatrix::identity(idx.len(), idx.len());
    let to_domain = dom.unwhiten_mat(&id);
    let metric = amb.metric();
    let scale = linalg::spectral_norm(&metric.whiten_mat(&(&te * &to_domain)));
    let a = metric.whiten_mat(&(&off * &to_domain));
    let d = linalg::svd(&pad_rows(&a));
    let keep: Vec<usize> = (0..idx.len())
        .filter(|&i| d.s[i] <= PREIMAGE_CUTOFF * scale)
        .collect();
    let u = CMatrix::from_fn(idx.len(), keep.len(), |i, j| d.v[(i, keep[j])]);
    let local = &to_domain * u;
    let mut out = CMatrix::zeros(amb.dim(), keep.len());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(i).copy_from(&local.row(r));
    }
    Ok(out)
}

fn pad_rows(a: &CMatrix) -> CMatrix {
    let (r, c) = a.shape();
    if r >= c {
        return a.clone();
    }
    let mut p = CMatrix::zeros(c, c);
    p.rows_mut(0, r).copy_from(a);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::FiniteBlaschke;
    use crate::operators::mult_operator;
    use crate::rng::Lcg64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mono(amb: &Ambient, k: usize) -> CVector {
        amb.basis_vector(0, k)
    }

    fn random_vectors(amb: &Ambient, count: usize, seed: u64) -> Vec<CVector> {
        let mut g = Lcg64::new(seed);
        (0..count)
            .map(|_| CVector::from_vec(g.complex_vec(amb.dim())))
            .collect()
    }

    #[test]
    fn orthonormalize_examples() {
        let amb = Ambient::h2(4);
        let s = orthonormalize(&[mono(&amb, 0), mono(&amb, 1)], &amb).unwrap();
        assert_eq!(s.frame()[0], mono(&amb, 0));
        assert_eq!(s.frame()[1], mono(&amb, 1));

        let s = orthonormalize(&[mono(&amb, 0), mono(&amb, 0) + mono(&amb, 1)], &amb).unwrap();
        assert!((&s.frame()[1] - mono(&amb, 1)).norm() < 1e-15);

        let amb = Ambient::h2(120);
        let phi = FiniteBlaschke::automorphism(c(0.5, 0.2)).unwrap();
        let v0 = amb.embed(&phi.taylor(120));
        let v1 = amb.embed(&phi.taylor(120).shift_up(1, 120));
        let gram = |a: &CVector, b: &CVector| amb.inner(a, b);
        assert!((gram(&v0, &v0) - 1.0).norm() < 1e-12);
        assert!(gram(&v0, &v1).norm() < 1e-12);
        let s = orthonormalize(&[v0, v1], &amb).unwrap();
        assert!(s.gram_defect() < 1e-12);

        assert!(orthonormalize(&[], &amb).is_err());
        assert!(orthonormalize(&[CVector::zeros(3)], &amb).is_err());
    }

    #[test]
    fn rank_detection_drops_dependent_vectors() {
        let amb = Ambient::taylor(1, 5, NormSpec::alpha_standard(1.0).unwrap()).unwrap();
        let v = random_vectors(&amb, 2, 4);
        let s = orthonormalize(
            &[v[0].clone(), v[1].clone(), &v[0] * c(2.0, 1.0) - &v[1]],
            &amb,
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.gram_defect() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let amb = Ambient::taylor(1, 6, NormSpec::alpha_standard(-0.5).unwrap()).unwrap();
        let m = orthonormalize(&random_vectors(&amb, 3, 1), &amb).unwrap();
        let inside = &m.frame()[0] * c(0.3, -1.0) + &m.frame()[2];
        assert!((m.project(&inside).unwrap() - &inside).norm() < 1e-12);
        let v = &random_vectors(&amb, 1, 2)[0];
        let perp = m.residual(v).unwrap();
        assert!(m.project(&perp).unwrap().norm() < 1e-12);
        let pv = m.project(v).unwrap();
        let lhs = amb.norm(v).powi(2);
        let rhs = amb.norm(&pv).powi(2) + amb.norm(&perp).powi(2);
        assert!((lhs - rhs).abs() < 1e-9 * lhs);
        assert!(m.project(&CVector::zeros(3)).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        let b = FiniteBlaschke::from_zeros(&[c(0.3, 0.0)]).unwrap();
        let amb = Ambient::taylor(1, 8, NormSpec::wold_one(0.5, b).unwrap()).unwrap();
        let m = orthonormalize(&random_vectors(&amb, 3, 8), &amb).unwrap();
        let p = m.projection_matrix();
        assert!(linalg::max_abs(&(&p * &p - &p)) < 1e-9);
        let g = amb.gram();
        // Self-adjoint in <x, y> = y^H G x means G P = P^H G.
        assert!(linalg::max_abs(&(&g * &p - p.adjoint() * &g)) < 1e-9);
    }

    #[test]
    fn intersect_examples() {
        let amb = Ambient::h2(5);
        let a = orthonormalize(&[mono(&amb, 0), mono(&amb, 1)], &amb).unwrap();
        let b = orthonormalize(&[mono(&amb, 1), mono(&amb, 2)], &amb).unwrap();
        let i = intersect(&a, &b, INTERSECTION_TOL).unwrap();
        assert_eq!(i.dim(), 1);
        assert!((i.frame()[0][1].norm() - 1.0).abs() < 1e-12);

        let one = orthonormalize(&[mono(&amb, 0)], &amb).unwrap();
        let z = orthonormalize(&[mono(&amb, 1)], &amb).unwrap();
        assert_eq!(intersect(&one, &z, INTERSECTION_TOL).unwrap().dim(), 0);

        let m = orthonormalize(&random_vectors(&amb, 3, 3), &amb).unwrap();
        let same = intersect(&m, &m, INTERSECTION_TOL).unwrap();
        assert!(subspace_distance(&same, &m).unwrap() < 1e-8);
    }

    #[test]
    fn distance_examples() {
        let amb = Ambient::h2(3);
        let a = orthonormalize(&[mono(&amb, 0)], &amb).unwrap();
        let b = orthonormalize(&[mono(&amb, 0) + mono(&amb, 1) * c(1e-9, 0.0)], &amb).unwrap();
        let d = subspace_distance(&a, &b).unwrap();
        assert!((d - 1e-9).abs() < 1e-15);
        let two = orthonormalize(&[mono(&amb, 0), mono(&amb, 1)], &amb).unwrap();
        assert_eq!(subspace_distance(&a, &two).unwrap(), 1.0);
        assert_eq!(
            subspace_distance(&Subspace::zero(amb.clone()), &Subspace::zero(amb)).unwrap(),
            0.0
        );
    }

    #[test]
    fn defect_examples() {
        let amb = Ambient::h2(6);
        let tz = mult_operator(&FiniteBlaschke::z_power(1).unwrap(), &amb).unwrap();
        let m = orthonormalize(&[mono(&amb, 0)], &amb).unwrap();
        let d = defect(&m, &tz).unwrap();
        assert_eq!(d.l, 1);
        assert!((d.g0.frame()[0][0].norm() - 1.0).abs() < 1e-12);

        let m = orthonormalize(&[mono(&amb, 1), mono(&amb, 3)], &amb).unwrap();
        assert!(matches!(defect(&m, &tz), Err(Error::DegenerateDefect)));
    }

    #[test]
    fn defect_dimension_matches_rank_count() {
        // M = q(T) images: span{g, T g, T^2 g, h}; l = dim M - dim(M ∩ T H).
        let amb = Ambient::h2(12);
        let b = FiniteBlaschke::z_power(2).unwrap();
        let t = mult_operator(&b, &amb).unwrap();
        let mut g = Lcg64::new(5);
        for _ in 0..5 {
            let mut low = amb.zero_vector();
            for n in 0..4 {
                low[n] = g.complex();
            }
            let vecs = vec![
                low.clone(),
                t.apply(&low).unwrap(),
                t.apply(&t.apply(&low).unwrap()).unwrap(),
            ];
            let m = orthonormalize(&vecs, &amb).unwrap();
            let range = range_subspace(&t, 1).unwrap();
            let stacked =
                CMatrix::from_columns(&[m.frame_matrix(), range.frame_matrix()].concat_columns());
            let r = linalg::rank(&stacked, 1e-9);
            let inter = m.dim() + range.dim() - r;
            assert_eq!(defect(&m, &t).unwrap().l, m.dim() - inter);
            assert!(defect(&m, &t).unwrap().l <= b.degree());
        }
    }

    trait ConcatColumns {
        fn concat_columns(&self) -> Vec<CVector>;
    }

    impl ConcatColumns for [CMatrix; 2] {
        fn concat_columns(&self) -> Vec<CVector> {
            self.iter()
                .flat_map(|m| m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
                .collect()
        }
    }

    #[test]
    fn near_invariance_examples() {
        let amb = Ambient::h2(8);
        let tz = mult_operator(&FiniteBlaschke::z_power(1).unwrap(), &amb).unwrap();
        let m = orthonormalize(&[mono(&amb, 1)], &amb).unwrap();
        let r = near_invariance_check(&m, &tz, 1, NEAR_INVARIANCE_TOL).unwrap();
        assert!(!r.is_nearly_invariant);
        assert_eq!(r.preimage_dim, 1);
        let w = r.witness.clone().unwrap();
        assert!((w[0].norm() - 1.0).abs() < 1e-12);

        // Adjoining the witness repairs the subspace.
        let repaired = m.adjoin(&w).unwrap();
        assert!(
            near_invariance_check(&repaired, &tz, 1, NEAR_INVARIANCE_TOL)
                .unwrap()
                .is_nearly_invariant
        );

        let m = orthonormalize(&[mono(&amb, 0)], &amb).unwrap();
        let r = near_invariance_check(&m, &tz, 1, NEAR_INVARIANCE_TOL).unwrap();
        assert!(r.is_nearly_invariant);
        assert_eq!(r.preimage_dim, 0);
    }

    #[test]
    fn ambient_json_round_trip() {
        let b = FiniteBlaschke::z_power(2).unwrap();
        let amb = Ambient::wold(b.clone(), 5, NormSpec::wold_one(0.5, b).unwrap()).unwrap();
        let text = serde_json::to_string(&amb).unwrap();
        assert!(text.contains(r#""kind":"wold""#));
        assert_eq!(serde_json::from_str::<Ambient>(&text).unwrap(), amb);
        let m = orthonormalize(&random_vectors(&amb, 2, 1), &amb).unwrap();
        let back: Subspace = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert!(subspace_distance(&back, &m).unwrap() < 1e-12);
        let amb: Ambient =
            serde_json::from_str(r#"{"kind":"taylor","components":1,"degree":3}"#).unwrap();
        assert_eq!(amb, Ambient::h2(3));
    }

    #[test]
    fn wold_ambient_rejects_foreign_norms() {
        let b = FiniteBlaschke::z_power(2).unwrap();
        let other = FiniteBlaschke::z_power(1).unwrap();
        assert!(Ambient::wold(b.clone(), 4, NormSpec::wold_one(0.5, other).unwrap()).is_err());
        assert!(Ambient::wold(b, 4, NormSpec::alpha_standard(0.5).unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn intersection_dimension_matches_rank_oracle(seed in any::<u64>(), dm in 1usize..4, dw in 1usize..4, shared in 0usize..3) {
            let amb = Ambient::taylor(1, 9, NormSpec::alpha_standard(0.5).unwrap()).unwrap();
            let shared = shared.min(dm).min(dw);
            let mut g = Lcg64::new(seed);
            let common: Vec<CVector> = (0..shared).map(|_| CVector::from_vec(g.complex_vec(10))).collect();
            let mut mv = common.clone();
            mv.extend((shared..dm).map(|_| CVector::from_vec(g.complex_vec(10))));
            let mut wv: Vec<CVector> = common.iter().map(|v| v * g.complex()).collect();
            wv.extend((shared..dw).map(|_| CVector::from_vec(g.complex_vec(10))));
            let m = orthonormalize(&mv, &amb).unwrap();
            let w = orthonormalize(&wv, &amb).unwrap();
            let stacked = CMatrix::from_columns(&[m.frame_matrix(), w.frame_matrix()].concat_columns());
            let oracle = m.dim() + w.dim() - linalg::rank(&amb.metric().whiten_mat(&stacked), 1e-9);
            prop_assert_eq!(intersect(&m, &w, INTERSECTION_TOL).unwrap().dim(), oracle);
        }
    }
}
