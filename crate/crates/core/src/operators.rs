//! Dense matrix realizations, at truncation, of the operators acting on the
//! coefficient spaces of [`crate::subspaces`].

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::blaschke::FiniteBlaschke;
use crate::error::{invalid, precondition, Error, Result};
use crate::linalg;
use crate::series::{TruncatedSeries, VectorSeries};
use crate::subspaces::{defect, Ambient, AmbientKind, DefectBasis, Subspace};
use crate::wold::{wold_decompose, wold_decompose_auto, NormSpec, DEFAULT_TOLERANCE};
use crate::{CMatrix, CVector, C64};

/// Largest Gram condition number accepted when forming adjoints.
const MAX_GRAM_CONDITION: f64 = 1e12;
/// Relative size of content allowed to leave the truncation.
const OVERFLOW_CUTOFF: f64 = 1e-12;

/// `matrix` maps coefficient vectors of `domain` to those of `codomain`.
/// `growth` is how many indices one application moves content upward
/// (`deg B` for `T_B` on Taylor coefficients, 1 for the shift on Wold
/// levels); guarded domains are derived from it.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    name: String,
    domain: Ambient,
    codomain: Ambient,
    matrix: CMatrix,
    growth: usize,
}

impl Serialize for OperatorMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("OperatorMatrix", 4)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("rows", &self.matrix.nrows())?;
        st.serialize_field("cols", &self.matrix.ncols())?;
        let entries: Vec<[f64; 2]> = (0..self.matrix.nrows())
            .flat_map(|r| (0..self.matrix.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| [self.matrix[(r, c)].re, self.matrix[(r, c)].im])
            .collect();
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

impl OperatorMatrix {
    pub fn new(
        name: impl Into<String>,
        domain: Ambient,
        codomain: Ambient,
        matrix: CMatrix,
        growth: usize,
    ) -> Result<Self> {
        if matrix.ncols() != domain.dim() || matrix.nrows() != codomain.dim() {
            return Err(Error::AmbientMismatch(format!(
                "{} x {} matrix between ambients of dimension {} and {}",
                matrix.nrows(),
                matrix.ncols(),
                domain.dim(),
                codomain.dim()
            )));
        }
        if matrix
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Numeric("operator entries must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            domain,
            codomain,
            matrix,
            growth,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Ambient {
        &self.domain
    }

    pub fn codomain(&self) -> &Ambient {
        &self.codomain
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn growth(&self) -> usize {
        self.growth
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        self.domain.check(v)?;
        Ok(&self.matrix * v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.domain.same(&other.codomain)?;
        OperatorMatrix::new(
            format!("{} {}", self.name, other.name),
            other.domain.clone(),
            self.codomain.clone(),
            &self.matrix * &other.matrix,
            self.growth + other.growth,
        )
    }

    pub fn scaled(&self, c: f64) -> OperatorMatrix {
        OperatorMatrix {
            name: format!("{c} {}", self.name),
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * C64::new(c, 0.0),
            growth: self.growth,
        }
    }

    /// Domain indices with `n <= degree - guard * growth`.
    pub fn guarded_domain(&self, guard: usize) -> Vec<usize> {
        self.domain.guarded_indices(guard * self.growth)
    }

    /// Same matrix in ambients that carry a different inner product.
    pub fn with_norm(&self, norm: &NormSpec) -> Result<OperatorMatrix> {
        OperatorMatrix::new(
            self.name.clone(),
            self.domain.with_norm(norm.clone())?,
            self.codomain.with_norm(norm.clone())?,
            self.matrix.clone(),
            self.growth,
        )
    }
}

fn toeplitz_lower(c: &[C64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            c.get(i - j).copied().unwrap_or_default()
        } else {
            C64::default()
        }
    })
}

fn block_diagonal(block: &CMatrix, copies: usize) -> CMatrix {
    let d = block.nrows();
    let mut out = CMatrix::zeros(d * copies, d * copies);
    for c in 0..copies {
        out.view_mut((c * d, c * d), (d, d)).copy_from(block);
    }
    out
}

/// `f -> B f`. On Taylor ambients this is the lower-triangular Toeplitz
/// matrix of `B` in every component; on the Wold ambient of `B` it is the
/// level shift.
pub fn mult_operator(b: &FiniteBlaschke, ambient: &Ambient) -> Result<OperatorMatrix> {
    match ambient.kind() {
        AmbientKind::Taylor { components } => {
            if ambient.degree() < b.degree() {
                return precondition(format!(
                    "degree {} is below deg B = {}",
                    ambient.degree(),
                    b.degree()
                ));
            }
            let block = toeplitz_lower(b.taylor(ambient.degree()).coeffs(), ambient.degree() + 1);
            OperatorMatrix::new(
                "T_B",
                ambient.clone(),
                ambient.clone(),
                block_diagonal(&block, *components),
                b.degree(),
            )
        }
        AmbientKind::Wold { blaschke } => {
            if blaschke != b {
                return Err(Error::AmbientMismatch(
                    "Wold ambient is built on another Blaschke product".into(),
                ));
            }
            level_shift(ambient, "T_B")
        }
    }
}

fn level_shift(ambient: &Ambient, name: &str) -> Result<OperatorMatrix> {
    let d1 = ambient.degree() + 1;
    let block = CMatrix::from_fn(d1, d1, |i, j| {
        if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::default()
        }
    });
    OperatorMatrix::new(
        name,
        ambient.clone(),
        ambient.clone(),
        block_diagonal(&block, ambient.components()),
        1,
    )
}

/// The forward shift: multiplication by `z` on Taylor ambients, the level
/// shift on Wold ambients (which is `S` on `H^2(C^m)`).
pub fn shift_operator(ambient: &Ambient) -> Result<OperatorMatrix> {
    match ambient.kind() {
        AmbientKind::Taylor { .. } => {
            mult_operator(&FiniteBlaschke::z_power(1)?, ambient).map(|mut t| {
                t.name = "S".into();
                t
            })
        }
        AmbientKind::Wold { .. } => level_shift(ambient, "S"),
    }
}

/// The coefficient backward shift `S^*` (the `H^2` adjoint of the shift).
pub fn backward_shift_operator(ambient: &Ambient) -> Result<OperatorMatrix> {
    let s = shift_operator(ambient)?;
    OperatorMatrix::new(
        "S*",
        ambient.clone(),
        ambient.clone(),
        s.matrix.adjoint(),
        0,
    )
}

/// Multiplication by an analytic series on a Taylor ambient.
pub fn mult_series_operator(f: &TruncatedSeries, ambient: &Ambient) -> Result<OperatorMatrix> {
    let AmbientKind::Taylor { components } = ambient.kind() else {
        return Err(Error::AmbientMismatch(
            "multiplication by a series needs a Taylor ambient".into(),
        ));
    };
    let block = toeplitz_lower(f.coeffs(), ambient.degree() + 1);
    OperatorMatrix::new(
        "M_f",
        ambient.clone(),
        ambient.clone(),
        block_diagonal(&block, *components),
        0,
    )
}

/// `U_s f(z) = f(s z)`, diagonal with entries `s^n`.
pub fn dilation_operator(s: f64, ambient: &Ambient) -> Result<OperatorMatrix> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid(format!("s must lie in (0, 1], got {s}"));
    }
    let d1 = ambient.degree() + 1;
    let block = CMatrix::from_fn(d1, d1, |i, j| {
        if i == j {
            C64::new(s.powi(i as i32), 0.0)
        } else {
            C64::default()
        }
    });
    OperatorMatrix::new(
        "U_s",
        ambient.clone(),
        ambient.clone(),
        block_diagonal(&block, ambient.components()),
        0,
    )
}

/// `A^* = G^{-1} A^H G`, the adjoint in the ambient inner product.
pub fn adjoint(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    op.domain.same(&op.codomain)?;
    let cond = op.domain.condition_number();
    if cond.is_nan() || cond > MAX_GRAM_CONDITION {
        return Err(Error::Numeric(format!(
            "Gram matrix condition number {cond:.3e} exceeds 1e12"
        )));
    }
    let metric = op.domain.metric();
    let m = metric.solve_mat(&metric.apply_mat(&op.matrix).adjoint());
    let name = match op.name.strip_suffix('*') {
        Some(base) => base.to_string(),
        None => format!("{}*", op.name),
    };
    OperatorMatrix::new(name, op.domain.clone(), op.codomain.clone(), m, 0)
}

/// Adjoint with respect to `spec` instead of the ambient's own norm.
pub fn adjoint_in(op: &OperatorMatrix, spec: &NormSpec) -> Result<OperatorMatrix> {
    adjoint(&op.with_norm(spec)?)
}

/// `T_{conj B} f = P_+(conj(B) f)` on scalar `H^2`: entry `(j, k)` is
/// `conj(b_{k-j})` for `k >= j`.
pub fn toeplitz_conj(b: &FiniteBlaschke, degree: usize) -> Result<OperatorMatrix> {
    let c = b.taylor(degree);
    let amb = Ambient::h2(degree);
    conj_toeplitz_of(c.coeffs(), amb, "T_conjB")
}

fn conj_toeplitz_of(c: &[C64], amb: Ambient, name: &str) -> Result<OperatorMatrix> {
    let n = amb.degree() + 1;
    let m = CMatrix::from_fn(n, n, |j, k| {
        if k >= j {
            c.get(k - j).map(|v| v.conj()).unwrap_or_default()
        } else {
            C64::default()
        }
    });
    OperatorMatrix::new(name, amb.clone(), amb, m, 0)
}

/// `T_s^* = T_{conj(B(z/s))}` on scalar `H^2`, from the Taylor coefficients
/// of the product `b F_s`.
pub fn ts_star(b: &FiniteBlaschke, s: f64, degree: usize) -> Result<OperatorMatrix> {
    let fac = b.scaled_factorization(s, degree)?;
    let c = fac.b.taylor(degree).mul(&fac.f_s, degree);
    conj_toeplitz_of(c.coeffs(), Ambient::h2(degree), "T_s*")
}

/// The unitary `U : H^2 -> H^2(C^m)` at truncation, `U(B^k e_j) = z^k delta_j`.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub forward: OperatorMatrix,
    pub backward: OperatorMatrix,
    /// Levels `0..levels` kept on the vector side.
    pub levels: usize,
    /// Largest Wold remainder over the monomials `z^n`, `n <= degree`.
    pub remainder: f64,
}

impl CoordinateMap {
    pub fn blaschke(&self) -> &FiniteBlaschke {
        match self.forward.codomain.kind() {
            AmbientKind::Wold { blaschke } => blaschke,
            AmbientKind::Taylor { .. } => unreachable!("forward map lands in a Wold ambient"),
        }
    }

    /// `U f` as an element of `H^2(C^m)`.
    pub fn forward_series(&self, f: &TruncatedSeries) -> Result<VectorSeries> {
        let v = self.forward.apply(&self.forward.domain.embed(f))?;
        self.forward.codomain.to_vector_series(&v)
    }

    /// `U^* F` for any number of levels, truncated at the scalar degree.
    pub fn backward_series(&self, f: &VectorSeries) -> Result<TruncatedSeries> {
        let b = self.blaschke();
        if f.len() != b.degree() {
            return Err(Error::AmbientMismatch(format!(
                "{} components, expected {}",
                f.len(),
                b.degree()
            )));
        }
        let coords = CMatrix::from_fn(f.degree() + 1, f.len(), |k, j| {
            f.components()[j].coeffs()[k]
        });
        let w = crate::wold::WoldCoordinates::from_coords(b.clone(), coords)?;
        w.reconstruct(self.forward.domain.degree())
    }
}

/// Builds `U` on polynomials of degree `<= degree`. With `levels = None` the
/// number of levels is chosen so that every monomial decomposes to
/// round-off; with a fixed count, a remainder above tolerance is an error.
pub fn unitary_u(
    b: &FiniteBlaschke,
    degree: usize,
    levels: Option<usize>,
) -> Result<CoordinateMap> {
    let degree = degree.max(b.degree());
    let pieces: Vec<_> = (0..=degree)
        .map(|n| {
            let f = TruncatedSeries::monomial(n, degree);
            match levels {
                Some(l) => wold_decompose(&f, b, l),
                None => wold_decompose_auto(&f, b),
            }
        })
        .collect::<Result<_>>()?;
    let remainder = pieces.iter().map(|w| w.remainder()).fold(0.0, f64::max);
    if remainder > DEFAULT_TOLERANCE {
        return Err(Error::TruncationInsufficient {
            residual: remainder,
            tolerance: DEFAULT_TOLERANCE,
        });
    }
    let levels = levels.unwrap_or_else(|| pieces.iter().map(|w| w.levels()).max().unwrap_or(1));
    let m = b.degree();
    let taylor = Ambient::h2(degree);
    let wold = Ambient::wold(b.clone(), levels - 1, NormSpec::h2())?;
    let mut fwd = CMatrix::zeros(wold.dim(), taylor.dim());
    for (n, w) in pieces.iter().enumerate() {
        for k in 0..w.levels() {
            for j in 0..m {
                fwd[(wold.index(j, k), n)] = w.coords()[(k, j)];
            }
        }
    }
    let basis = b.model_space_basis(degree)?;
    let mut bwd = CMatrix::zeros(taylor.dim(), wold.dim());
    for (j, e) in basis.basis().iter().enumerate() {
        let mut col = e.clone();
        for k in 0..levels {
            bwd.column_mut(wold.index(j, k))
                .copy_from_slice(col.coeffs());
            col = b.mul_series(&col, degree);
        }
    }
    Ok(CoordinateMap {
        forward: OperatorMatrix::new("U", taylor.clone(), wold.clone(), fwd, 0)?,
        backward: OperatorMatrix::new("U*", wold, taylor, bwd, 0)?,
        levels,
        remainder,
    })
}

fn effective_degree(h: &TruncatedSeries) -> Option<usize> {
    h.coeffs().iter().rposition(|c| *c != C64::default())
}

/// Largest `|h_k| |g_n|` over entries `n > degree - k * growth`, the content
/// that `h_k T^k g` pushes past the truncation.
fn pushed_out(amb: &Ambient, h: &TruncatedSeries, g: &CVector, growth: usize) -> f64 {
    let d1 = amb.degree() + 1;
    let mut top = vec![0.0f64; d1];
    for (i, v) in g.iter().enumerate() {
        top[i % d1] = top[i % d1].max(v.norm());
    }
    // tail[n] = max |g| at indices >= n
    let mut tail = vec![0.0f64; d1 + 1];
    for n in (0..d1).rev() {
        tail[n] = tail[n + 1].max(top[n]);
    }
    h.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let shift = k * growth;
            let first = if shift == 0 {
                d1
            } else {
                d1.saturating_sub(shift)
            };
            c.norm() * tail[first]
        })
        .fold(0.0, f64::max)
}

/// `sum_i h_i(T) g_i = sum_i sum_k h_{i,k} T^k g_i`, by Horner's rule.
/// Fails when some `h_{i,k} T^k g_i` would push content larger than
/// `1e-12` of the largest `|h_{i,k}| |g_i|` past the truncation.
pub fn apply_series_of_operator(
    h: &[TruncatedSeries],
    t: &OperatorMatrix,
    g: &[CVector],
) -> Result<CVector> {
    if h.len() != g.len() || h.is_empty() {
        return invalid(format!("{} series for {} vectors", h.len(), g.len()));
    }
    t.domain.same(&t.codomain)?;
    let amb = &t.domain;
    let scale = h
        .iter()
        .zip(g)
        .map(|(hi, gi)| {
            hi.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max)
                * gi.iter().map(|c| c.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let mut out = amb.zero_vector();
    for (hi, gi) in h.iter().zip(g) {
        amb.check(gi)?;
        let Some(deg) = effective_degree(hi) else {
            continue;
        };
        let lost = pushed_out(amb, hi, gi, t.growth);
        if lost > OVERFLOW_CUTOFF * scale {
            return Err(Error::DegreeOverflow(format!(
                "{deg} applications of growth {} push content {lost:.3e} past degree {}",
                t.growth,
                amb.degree()
            )));
        }
        let mut acc = gi * hi.coeffs()[deg];
        for k in (0..deg).rev() {
            acc = &t.matrix * acc + gi * hi.coeffs()[k];
        }
        out += acc;
    }
    Ok(out)
}

/// `R = (T^*T)^{-1} T^* P_{M ∩ T H}` and `Q = P_{M ⊖ (M ∩ T H)}`.
///
/// `R x` is the least-squares solution of `T y = P x` over the guarded
/// domain in the ambient metric, which is the same operator written without
/// forming `T^*T`.
pub fn rq_operators(m: &Subspace, t: &OperatorMatrix) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let d = defect(m, t)?;
    rq_from_defect(m, t, &d)
}

pub(crate) fn rq_from_defect(
    m: &Subspace,
    t: &OperatorMatrix,
    d: &DefectBasis,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let amb = m.ambient();
    amb.same(t.domain())?;
    let idx = t.guarded_domain(1);
    let dom = amb.sub_metric(&idx)?;
    let to_domain = dom.unwhiten_mat(&CMatrix::identity(idx.len(), idx.len()));
    let metric = amb.metric();
    let a = metric.whiten_mat(&(t.matrix.select_columns(&idx) * &to_domain));
    let sv = linalg::svd(&a);
    let smax = sv.s.first().copied().unwrap_or(0.0);
    let smin = sv.s.last().copied().unwrap_or(0.0);
    if smin <= 1e-12 * smax {
        return Err(Error::Numeric(
            "T*T is singular on the guarded domain".into(),
        ));
    }
    let p_w = d.intersection.projection_matrix();
    let local = &to_domain * linalg::pinv(&a, 1e-12) * metric.whiten_mat(&p_w);
    let mut r = CMatrix::zeros(amb.dim(), amb.dim());
    for (row, &i) in idx.iter().enumerate() {
        r.row_mut(i).copy_from(&local.row(row));
    }
    let q = d.g0.projection_matrix();
    Ok((
        OperatorMatrix::new("R", amb.clone(), amb.clone(), r, 0)?,
        OperatorMatrix::new("Q", amb.clone(), amb.clone(), q, 0)?,
    ))
}
