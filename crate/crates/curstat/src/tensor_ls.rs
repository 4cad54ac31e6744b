//! Tensor-product least squares on current-status samples.
//!
//! A model is the span of the `D1 * D2` products `phi_k(x) psi_l(t)` of two
//! one-dimensional orthonormal bases. The least-squares contrast
//! `(1/n) sum_i (delta_i - t(x_i, t_i))^2` is minimized over the model by
//! solving the empirical Gram system `G a = v`. The Gram matrix can be
//! singular (e.g. empty histogram cells); the solver returns the
//! minimum-norm solution, whose fitted values on the sample are the
//! Euclidean projection of the status vector onto the span of the design
//! columns, and which vanishes on the null space of the sample-evaluation
//! map. That makes the fit uniquely defined even when the Gram matrix is
//! not invertible.

use crate::basis::{Basis1D, BasisError, BasisFamily, Interval};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use thiserror::Error;

/// Relative spectral cutoff separating the numerical range of the Gram
/// matrix from its null space.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative tolerance below which a negative Gram eigenvalue is treated as
/// roundoff rather than an assembly bug.
const PSD_SLACK: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TensorLsError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("status indicator must be 0 or 1, got {found} at record {index}")]
    InvalidStatus { index: usize, found: i64 },
    #[error("record {index} has non-finite coordinates ({x}, {t})")]
    NonFiniteRecord { index: usize, x: f64, t: f64 },
    #[error("no records remain after restriction to the estimation region (dropped {dropped})")]
    EmptySample { dropped: usize },
    #[error("model supports do not cover the sample region")]
    SupportMismatch,
    #[error(
        "Gram matrix is numerically indefinite (eigenvalue {eigenvalue} vs largest {largest}); \
         this signals a broken basis or assembly bug"
    )]
    IndefiniteGram { eigenvalue: f64, largest: f64 },
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One current-status observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub x: f64,
    pub t: f64,
    pub delta: u8,
}

/// The rectangular estimation region `A = A1 x A2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: Interval,
    pub t: Interval,
}

impl Region {
    pub fn new(x: Interval, t: Interval) -> Self {
        Self { x, t }
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        self.x.contains(x) && self.t.contains(t)
    }

    pub fn area(&self) -> f64 {
        self.x.length() * self.t.length()
    }
}

/// An ingested sample, restricted to its estimation region.
///
/// Ingestion drops records outside the region: basis functions vanish
/// there, so such records would add the same constant to the contrast of
/// every model while breaking evaluation preconditions.
#[derive(Debug, Clone)]
pub struct Sample {
    records: Vec<Record>,
    region: Region,
    dropped: usize,
}

impl Sample {
    pub fn new(records: Vec<Record>, region: Region) -> Result<Self, TensorLsError> {
        for (index, r) in records.iter().enumerate() {
            if !(r.x.is_finite() && r.t.is_finite()) {
                return Err(TensorLsError::NonFiniteRecord {
                    index,
                    x: r.x,
                    t: r.t,
                });
            }
            if r.delta > 1 {
                return Err(TensorLsError::InvalidStatus {
                    index,
                    found: r.delta as i64,
                });
            }
        }
        let total = records.len();
        let kept: Vec<Record> = records
            .into_iter()
            .filter(|r| region.contains(r.x, r.t))
            .collect();
        let dropped = total - kept.len();
        if kept.is_empty() {
            return Err(TensorLsError::EmptySample { dropped });
        }
        Ok(Self {
            records: kept,
            region,
            dropped,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// Records dropped at ingestion for lying outside the region.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn delta_mean(&self) -> f64 {
        self.records.iter().map(|r| r.delta as f64).sum::<f64>() / self.n() as f64
    }
}

/// A tensor-product model: bases per axis plus the row-major index map
/// `(1,1), ..., (1,D2), (2,1), ...` over coefficient pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorModel {
    basis_x: Basis1D,
    basis_t: Basis1D,
}

impl TensorModel {
    pub fn new(basis_x: Basis1D, basis_t: Basis1D) -> Self {
        Self { basis_x, basis_t }
    }

    pub fn basis_x(&self) -> &Basis1D {
        &self.basis_x
    }

    pub fn basis_t(&self) -> &Basis1D {
        &self.basis_t
    }

    pub fn dim(&self) -> usize {
        self.basis_x.dim() * self.basis_t.dim()
    }

    /// Flat position of the pair `(k, l)` (0-based) in the coefficient
    /// vector.
    pub fn flat_index(&self, k: usize, l: usize) -> usize {
        k * self.basis_t.dim() + l
    }

    /// Row-major iteration over `(k, l)` pairs, matching the coefficient
    /// layout.
    pub fn index_map(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d2 = self.basis_t.dim();
        (0..self.basis_x.dim()).flat_map(move |k| (0..d2).map(move |l| (k, l)))
    }

    fn covers(&self, region: &Region) -> bool {
        self.basis_x.support().lo() <= region.x.lo()
            && self.basis_x.support().hi() >= region.x.hi()
            && self.basis_t.support().lo() <= region.t.lo()
            && self.basis_t.support().hi() >= region.t.hi()
    }
}

/// A fitted model: coefficients in row-major order plus the attained
/// contrast and the numerical rank used by the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    model: TensorModel,
    coeffs: Vec<f64>,
    contrast: f64,
    effective_rank: usize,
    n_used: usize,
}

impl FittedModel {
    /// Assembles a fitted model from raw parts; intended for
    /// deserialization and for tests that need full control over the
    /// coefficients.
    pub fn from_parts(
        model: TensorModel,
        coeffs: Vec<f64>,
        contrast: f64,
        effective_rank: usize,
        n_used: usize,
    ) -> Self {
        assert_eq!(coeffs.len(), model.dim());
        Self {
            model,
            coeffs,
            contrast,
            effective_rank,
            n_used,
        }
    }

    pub fn model(&self) -> &TensorModel {
        &self.model
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }

    /// Evaluates the fitted surface at `(x, u)`. Unclamped; the value may
    /// leave `[0, 1]`.
    pub fn evaluate(&self, x: f64, u: f64) -> Result<f64, TensorLsError> {
        let phi = self.model.basis_x.evaluate(x)?;
        let psi = self.model.basis_t.evaluate(u)?;
        let d2 = self.model.basis_t.dim();
        let mut acc = 0.0;
        for (k, pk) in phi.iter().enumerate() {
            if *pk == 0.0 {
                continue;
            }
            let row = &self.coeffs[k * d2..(k + 1) * d2];
            let mut inner = 0.0;
            for (c, ps) in row.iter().zip(psi.iter()) {
                inner += c * ps;
            }
            acc += pk * inner;
        }
        Ok(acc)
    }

    /// Fitted values at every sample point, using the histogram fast path
    /// when both axes are histograms.
    pub fn fitted_values(&self, sample: &Sample) -> Result<Vec<f64>, TensorLsError> {
        fitted_values(sample, &self.model, &self.coeffs)
    }
}

/// Builds the empirical Gram matrix and moment vector of the model on the
/// sample:
/// `gram[(k,l),(k',l')] = (1/n) sum_i phi_k(x_i) psi_l(t_i) phi_k'(x_i) psi_l'(t_i)`,
/// `moment[(k,l)] = (1/n) sum_i delta_i phi_k(x_i) psi_l(t_i)`.
///
/// For histogram x histogram models the Gram matrix is diagonal and is
/// assembled from cell counts in a single pass, keeping the full model
/// sweep linear in `n` per model.
pub fn assemble_system(
    sample: &Sample,
    model: &TensorModel,
) -> Result<(DMatrix<f64>, DVector<f64>), TensorLsError> {
    if !model.covers(&sample.region()) {
        return Err(TensorLsError::SupportMismatch);
    }
    let d = model.dim();
    let n = sample.n() as f64;
    let mut gram = DMatrix::zeros(d, d);
    let mut moment = DVector::zeros(d);

    if model.basis_x.is_histogram() && model.basis_t.is_histogram() {
        let w1 = model.basis_x.cell_width().expect("histogram");
        let w2 = model.basis_t.cell_width().expect("histogram");
        let diag_unit = 1.0 / (n * w1 * w2);
        let mom_unit = 1.0 / (n * (w1 * w2).sqrt());
        for r in sample.records() {
            let k = model.basis_x.cell_index(r.x).expect("record in region");
            let l = model.basis_t.cell_index(r.t).expect("record in region");
            let idx = model.flat_index(k, l);
            gram[(idx, idx)] += diag_unit;
            if r.delta == 1 {
                moment[idx] += mom_unit;
            }
        }
        return Ok((gram, moment));
    }

    let mut phi = vec![0.0; model.basis_x.dim()];
    let mut psi = vec![0.0; model.basis_t.dim()];
    let mut row = vec![0.0; d];
    for r in sample.records() {
        model.basis_x.eval_into(r.x, &mut phi)?;
        model.basis_t.eval_into(r.t, &mut psi)?;
        for (k, pk) in phi.iter().enumerate() {
            for (l, ps) in psi.iter().enumerate() {
                row[model.flat_index(k, l)] = pk * ps;
            }
        }
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            if r.delta == 1 {
                moment[a] += ra / n;
            }
            for b in a..d {
                gram[(a, b)] += ra * row[b] / n;
            }
        }
    }
    // mirror the upper triangle
    for a in 0..d {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    Ok((gram, moment))
}

/// Minimum-norm solution of `gram * coeffs = moment` for a symmetric PSD
/// Gram matrix, via spectral decomposition.
///
/// Eigenvalues at or below `rank_tol` times the largest eigenvalue are
/// treated as null directions: the solution has no component there, which
/// realizes the canonical complement of the sample-evaluation null space.
/// Returns the coefficients and the number of retained spectral values.
pub fn solve_least_squares(
    gram: &DMatrix<f64>,
    moment: &DVector<f64>,
    rank_tol: f64,
) -> Result<(Vec<f64>, usize), TensorLsError> {
    let d = gram.nrows();
    assert_eq!(gram.ncols(), d);
    assert_eq!(moment.len(), d);

    let is_diagonal = (0..d).all(|a| (0..d).all(|b| a == b || gram[(a, b)] == 0.0));
    if is_diagonal {
        let largest = (0..d).fold(0.0f64, |m, a| m.max(gram[(a, a)]));
        let smallest = (0..d).fold(f64::INFINITY, |m, a| m.min(gram[(a, a)]));
        if smallest < -PSD_SLACK * largest.abs() {
            return Err(TensorLsError::IndefiniteGram {
                eigenvalue: smallest,
                largest,
            });
        }
        let cut = rank_tol * largest;
        let mut coeffs = vec![0.0; d];
        let mut rank = 0;
        for a in 0..d {
            if gram[(a, a)] > cut && gram[(a, a)] > 0.0 {
                coeffs[a] = moment[a] / gram[(a, a)];
                rank += 1;
            }
        }
        return Ok((coeffs, rank));
    }

    let eig = gram.clone().symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let smallest = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &l| m.min(l));
    if smallest < -PSD_SLACK * largest.abs() {
        return Err(TensorLsError::IndefiniteGram {
            eigenvalue: smallest,
            largest,
        });
    }
    let cut = rank_tol * largest;
    let mut coeffs = DVector::zeros(d);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cut && lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            let proj = v.dot(moment);
            coeffs.axpy(proj / lambda, &v, 1.0);
            rank += 1;
        }
    }
    Ok((coeffs.iter().copied().collect(), rank))
}

fn fitted_values(
    sample: &Sample,
    model: &TensorModel,
    coeffs: &[f64],
) -> Result<Vec<f64>, TensorLsError> {
    if model.basis_x.is_histogram() && model.basis_t.is_histogram() {
        let w1 = model.basis_x.cell_width().expect("histogram");
        let w2 = model.basis_t.cell_width().expect("histogram");
        let scale = 1.0 / (w1 * w2).sqrt();
        return Ok(sample
            .records()
            .iter()
            .map(|r| {
                let k = model.basis_x.cell_index(r.x).expect("record in region");
                let l = model.basis_t.cell_index(r.t).expect("record in region");
                coeffs[model.flat_index(k, l)] * scale
            })
            .collect());
    }
    let d2 = model.basis_t.dim();
    let mut phi = vec![0.0; model.basis_x.dim()];
    let mut psi = vec![0.0; d2];
    let mut out = Vec::with_capacity(sample.n());
    for r in sample.records() {
        model.basis_x.eval_into(r.x, &mut phi)?;
        model.basis_t.eval_into(r.t, &mut psi)?;
        let mut acc = 0.0;
        for (k, pk) in phi.iter().enumerate() {
            if *pk == 0.0 {
                continue;
            }
            let row = &coeffs[k * d2..(k + 1) * d2];
            let mut inner = 0.0;
            for (c, ps) in row.iter().zip(psi.iter()) {
                inner += c * ps;
            }
            acc += pk * inner;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Fits the model on the sample with the default spectral cutoff.
pub fn fit(sample: &Sample, model: &TensorModel) -> Result<FittedModel, TensorLsError> {
    fit_with_tol(sample, model, DEFAULT_RANK_TOL)
}

/// Fits the model on the sample. The contrast is recomputed from the
/// residuals, not from algebraic identities, so it is robust to the rank
/// cutoff.
pub fn fit_with_tol(
    sample: &Sample,
    model: &TensorModel,
    rank_tol: f64,
) -> Result<FittedModel, TensorLsError> {
    let (gram, moment) = assemble_system(sample, model)?;
    let (coeffs, effective_rank) = solve_least_squares(&gram, &moment, rank_tol)?;
    let fitted = fitted_values(sample, model, &coeffs)?;
    let n = sample.n() as f64;
    let contrast = sample
        .records()
        .iter()
        .zip(fitted.iter())
        .map(|(r, f)| {
            let resid = r.delta as f64 - f;
            resid * resid
        })
        .sum::<f64>()
        / n;
    Ok(FittedModel {
        model: model.clone(),
        coeffs,
        contrast,
        effective_rank,
        n_used: sample.n(),
    })
}

fn family_tag(family: BasisFamily) -> (&'static str, usize) {
    match family {
        BasisFamily::PiecewisePoly { degree } => ("piecewise", degree),
        BasisFamily::Trigonometric => ("trig", 0),
    }
}

fn family_from_tag(tag: &str, degree: usize) -> Result<BasisFamily, TensorLsError> {
    match tag {
        "piecewise" => Ok(BasisFamily::PiecewisePoly { degree }),
        "trig" => Ok(BasisFamily::Trigonometric),
        other => Err(TensorLsError::ModelFormat(format!(
            "unknown family tag `{other}`"
        ))),
    }
}

/// Serializes a fitted model: one `key=value` header line followed by one
/// coefficient per line in row-major order, each number carrying 17
/// significant digits so that reloading reproduces evaluations bit for
/// bit.
pub fn write_model<W: Write>(fm: &FittedModel, mut w: W) -> Result<(), TensorLsError> {
    let (fx, dx) = family_tag(fm.model.basis_x.family());
    let (ft, dt) = family_tag(fm.model.basis_t.family());
    let mut header = String::from("curstat-model v1");
    let mut kv = |k: &str, v: String| {
        let _ = write!(header, " {k}={v}");
    };
    kv("family_x", fx.to_string());
    kv("degree_x", dx.to_string());
    kv("d1", fm.model.basis_x.dim().to_string());
    kv("x_lo", fmt_f64(fm.model.basis_x.support().lo()));
    kv("x_hi", fmt_f64(fm.model.basis_x.support().hi()));
    kv("family_t", ft.to_string());
    kv("degree_t", dt.to_string());
    kv("d2", fm.model.basis_t.dim().to_string());
    kv("t_lo", fmt_f64(fm.model.basis_t.support().lo()));
    kv("t_hi", fmt_f64(fm.model.basis_t.support().hi()));
    kv("n_used", fm.n_used.to_string());
    kv("effective_rank", fm.effective_rank.to_string());
    kv("contrast", fmt_f64(fm.contrast));
    writeln!(w, "{header}")?;
    for c in &fm.coeffs {
        writeln!(w, "{}", fmt_f64(*c))?;
    }
    Ok(())
}

/// Parses a model file written by [`write_model`].
pub fn read_model<R: BufRead>(r: R) -> Result<FittedModel, TensorLsError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| TensorLsError::ModelFormat("empty file".into()))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("curstat-model") || parts.next() != Some("v1") {
        return Err(TensorLsError::ModelFormat(
            "missing `curstat-model v1` magic".into(),
        ));
    }
    let mut fields = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| TensorLsError::ModelFormat(format!("bad header field `{p}`")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<&String, TensorLsError> {
        fields
            .get(k)
            .ok_or_else(|| TensorLsError::ModelFormat(format!("missing header field `{k}`")))
    };
    let parse_f = |k: &str| -> Result<f64, TensorLsError> {
        get(k)?
            .parse::<f64>()
            .map_err(|e| TensorLsError::ModelFormat(format!("field `{k}`: {e}")))
    };
    let parse_u = |k: &str| -> Result<usize, TensorLsError> {
        get(k)?
            .parse::<usize>()
            .map_err(|e| TensorLsError::ModelFormat(format!("field `{k}`: {e}")))
    };

    let basis_x = Basis1D::new(
        family_from_tag(get("family_x")?, parse_u("degree_x")?)?,
        parse_u("d1")?,
        Interval::new(parse_f("x_lo")?, parse_f("x_hi")?)?,
    )?;
    let basis_t = Basis1D::new(
        family_from_tag(get("family_t")?, parse_u("degree_t")?)?,
        parse_u("d2")?,
        Interval::new(parse_f("t_lo")?, parse_f("t_hi")?)?,
    )?;
    let model = TensorModel::new(basis_x, basis_t);
    let n_used = parse_u("n_used")?;
    let effective_rank = parse_u("effective_rank")?;
    let contrast = parse_f("contrast")?;

    let mut coeffs = Vec::with_capacity(model.dim());
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: f64 = line.trim().parse().map_err(|e| {
            TensorLsError::ModelFormat(format!("coefficient line {}: {e}", i + 2))
        })?;
        coeffs.push(c);
    }
    if coeffs.len() != model.dim() {
        return Err(TensorLsError::ModelFormat(format!(
            "expected {} coefficients, found {}",
            model.dim(),
            coeffs.len()
        )));
    }
    Ok(FittedModel::from_parts(
        model,
        coeffs,
        contrast,
        effective_rank,
        n_used,
    ))
}

/// Formats with 17 significant digits, enough for exact f64 round trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
