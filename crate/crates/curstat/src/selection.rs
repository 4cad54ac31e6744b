//! Penalized model selection over a collection of tensor-product models.
//!
//! The collection is the set of dimension pairs `(D1, D2)` drawn from
//! per-axis candidate lists and admitted by a budget rule tied to the
//! sample size. Every admitted model is fitted; the selected model
//! minimizes `contrast + theta * D / (4n)`. The penalty constant `theta`
//! must exceed 1; the default is 2. Since the target is a distribution
//! function, the selected fit is usually clamped to `[0, 1]`, which can
//! only reduce the pointwise error.

use crate::basis::{Basis1D, BasisFamily, Interval};
use crate::tensor_ls::{self, fit, FittedModel, Sample, TensorLsError, TensorModel};
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("penalty constant theta must exceed 1, got {0}")]
    InvalidTheta(f64),
    #[error("model collections need n >= 2, got n = {0}")]
    SampleTooSmall(usize),
    #[error("dimension list for the {axis} axis is empty")]
    EmptyDimensionList { axis: &'static str },
    #[error("candidate dimension {dim} on the {axis} axis is invalid: {source}")]
    InvalidDimension {
        axis: &'static str,
        dim: usize,
        source: crate::basis::BasisError,
    },
    #[error(
        "no model passes the budget rule {rule:?} at n = {n} (budget value {budget}); \
         provide smaller candidate dimensions"
    )]
    EmptyCollection {
        rule: BudgetRule,
        n: usize,
        budget: f64,
    },
    #[error("fit of model (D1={d1}, D2={d2}) failed: {source}")]
    FitFailed {
        d1: usize,
        d2: usize,
        source: TensorLsError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Restriction tying the admissible model dimensions to the sample size.
///
/// `SqrtNOverLogN` admits pairs with `D1 * D2 <= sqrt(n) / ln(n)`.
/// `QuarterPower` caps each axis dimension at `(n / ln(n)^2)^(1/4)`.
/// Logarithms are natural.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    SqrtNOverLogN,
    QuarterPower,
    Unbounded,
}

impl BudgetRule {
    /// The numeric budget at sample size `n` (product bound or per-axis
    /// cap depending on the rule; infinite when unbounded).
    pub fn budget(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            BudgetRule::SqrtNOverLogN => nf.sqrt() / nf.ln(),
            BudgetRule::QuarterPower => (nf / nf.ln().powi(2)).powf(0.25),
            BudgetRule::Unbounded => f64::INFINITY,
        }
    }

    fn admits(&self, d1: usize, d2: usize, budget: f64) -> bool {
        match self {
            BudgetRule::SqrtNOverLogN => (d1 * d2) as f64 <= budget,
            BudgetRule::QuarterPower => d1 as f64 <= budget && d2 as f64 <= budget,
            BudgetRule::Unbounded => true,
        }
    }
}

/// Candidate family and dimensions for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub family: BasisFamily,
    pub dims: Vec<usize>,
}

impl AxisSpec {
    /// Near-dyadic candidate list compatible with the family's dimension
    /// constraint: `1, 2, 4, ...` for histograms, `(s+1) * (1, 2, 4, ...)`
    /// for degree-`s` piecewise polynomials, and the odd ladder
    /// `1, 3, 5, 9, 17, ...` for trigonometric bases. Candidates do not
    /// exceed `max_dim`.
    pub fn dyadic(family: BasisFamily, max_dim: usize) -> Self {
        let dims = match family {
            BasisFamily::PiecewisePoly { degree } => {
                let block = degree + 1;
                let mut dims = Vec::new();
                let mut cells = 1usize;
                while block * cells <= max_dim {
                    dims.push(block * cells);
                    cells *= 2;
                }
                dims
            }
            BasisFamily::Trigonometric => {
                let mut dims = vec![1usize];
                let mut pairs = 1usize;
                while 2 * pairs + 1 <= max_dim {
                    dims.push(2 * pairs + 1);
                    pairs *= 2;
                }
                dims
            }
        };
        Self { family, dims }
    }
}

/// Configuration of a model collection: per-axis candidates, the budget
/// rule and the penalty constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionSpec {
    axis_x: AxisSpec,
    axis_t: AxisSpec,
    budget: BudgetRule,
    theta: f64,
}

impl CollectionSpec {
    pub fn new(
        axis_x: AxisSpec,
        axis_t: AxisSpec,
        budget: BudgetRule,
        theta: f64,
    ) -> Result<Self, SelectionError> {
        if !(theta > 1.0) {
            return Err(SelectionError::InvalidTheta(theta));
        }
        for (axis, spec) in [("x", &axis_x), ("t", &axis_t)] {
            if spec.dims.is_empty() {
                return Err(SelectionError::EmptyDimensionList { axis });
            }
            for &dim in &spec.dims {
                spec.family
                    .admits_dimension(dim)
                    .map_err(|source| SelectionError::InvalidDimension { axis, dim, source })?;
            }
        }
        Ok(Self {
            axis_x,
            axis_t,
            budget,
            theta,
        })
    }

    /// Histogram collections with near-dyadic dimensions on both axes, the
    /// product budget rule and `theta = 2`; the defaults of the numerical
    /// studies.
    pub fn histogram_default() -> Self {
        Self::new(
            AxisSpec::dyadic(BasisFamily::HISTOGRAM, 64),
            AxisSpec::dyadic(BasisFamily::HISTOGRAM, 64),
            BudgetRule::SqrtNOverLogN,
            2.0,
        )
        .expect("default collection spec is valid")
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self, SelectionError> {
        if !(theta > 1.0) {
            return Err(SelectionError::InvalidTheta(theta));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn axis_x(&self) -> &AxisSpec {
        &self.axis_x
    }

    pub fn axis_t(&self) -> &AxisSpec {
        &self.axis_t
    }

    pub fn budget_rule(&self) -> BudgetRule {
        self.budget
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// The dimension pair identifying a model in the collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelIndex {
    pub d1: usize,
    pub d2: usize,
}

/// One row of the selection diagnostics table.
#[derive(Debug, Clone, PartialEq)]
pub struct PerModelRow {
    pub index: ModelIndex,
    pub dim: usize,
    pub contrast: f64,
    pub penalty: f64,
    pub criterion: f64,
}

/// Outcome of a penalized selection: the chosen index, its clamp-free fit
/// and the full per-model table. `clamped` records whether the downstream
/// pipeline wrapped the fit in a clamp.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen: ModelIndex,
    pub fitted: FittedModel,
    pub per_model: Vec<PerModelRow>,
    pub clamped: bool,
}

/// The penalty `theta * D / (4 n)`.
pub fn penalty(theta: f64, dim: usize, n: usize) -> f64 {
    theta * dim as f64 / (4.0 * n as f64)
}

/// Enumerates the admitted models in deterministic `(D1 asc, D2 asc)`
/// order.
pub fn build_collection(
    spec: &CollectionSpec,
    n: usize,
    region: &tensor_ls::Region,
) -> Result<Vec<TensorModel>, SelectionError> {
    if n < 2 {
        return Err(SelectionError::SampleTooSmall(n));
    }
    let budget = spec.budget.budget(n);
    let mut dims_x = spec.axis_x.dims.clone();
    let mut dims_t = spec.axis_t.dims.clone();
    dims_x.sort_unstable();
    dims_x.dedup();
    dims_t.sort_unstable();
    dims_t.dedup();

    let make = |family: BasisFamily,
                dim: usize,
                support: Interval,
                axis: &'static str|
     -> Result<Basis1D, SelectionError> {
        Basis1D::new(family, dim, support)
            .map_err(|source| SelectionError::InvalidDimension { axis, dim, source })
    };

    let mut models = Vec::new();
    for &d1 in &dims_x {
        for &d2 in &dims_t {
            if spec.budget.admits(d1, d2, budget) {
                models.push(TensorModel::new(
                    make(spec.axis_x.family, d1, region.x, "x")?,
                    make(spec.axis_t.family, d2, region.t, "t")?,
                ));
            }
        }
    }
    if models.is_empty() {
        return Err(SelectionError::EmptyCollection {
            rule: spec.budget,
            n,
            budget,
        });
    }
    Ok(models)
}

/// Fits every model in the collection and returns the penalized argmin.
///
/// Exact criterion ties are broken toward the smaller total dimension,
/// then toward the earlier position in the deterministic collection
/// order. Per-model fits run in parallel; the reduction is an ordered
/// fold, so the outcome does not depend on scheduling.
pub fn select(sample: &Sample, spec: &CollectionSpec) -> Result<SelectionResult, SelectionError> {
    let n = sample.n();
    let models = build_collection(spec, n, &sample.region())?;
    let fits: Vec<Result<FittedModel, SelectionError>> = models
        .par_iter()
        .map(|m| {
            fit(sample, m).map_err(|source| SelectionError::FitFailed {
                d1: m.basis_x().dim(),
                d2: m.basis_t().dim(),
                source,
            })
        })
        .collect();

    let mut per_model = Vec::with_capacity(models.len());
    let mut best: Option<(usize, f64, usize)> = None; // (position, criterion, dim)
    let mut fitted_models = Vec::with_capacity(models.len());
    for (pos, fit_result) in fits.into_iter().enumerate() {
        let fm = fit_result?;
        let index = ModelIndex {
            d1: fm.model().basis_x().dim(),
            d2: fm.model().basis_t().dim(),
        };
        let dim = fm.model().dim();
        let pen = penalty(spec.theta, dim, n);
        let criterion = fm.contrast() + pen;
        per_model.push(PerModelRow {
            index,
            dim,
            contrast: fm.contrast(),
            penalty: pen,
            criterion,
        });
        let better = match best {
            None => true,
            Some((_, best_crit, best_dim)) => {
                criterion < best_crit || (criterion == best_crit && dim < best_dim)
            }
        };
        if better {
            best = Some((pos, criterion, dim));
        }
        fitted_models.push(fm);
    }
    let (pos, _, _) = best.expect("non-empty collection");
    let fitted = fitted_models.swap_remove(pos);
    Ok(SelectionResult {
        chosen: per_model[pos].index,
        fitted,
        per_model,
        clamped: false,
    })
}

/// The selected estimator truncated pointwise to `[0, 1]`; the underlying
/// coefficients are untouched.
#[derive(Debug, Clone)]
pub struct ClampedEstimator {
    inner: FittedModel,
}

impl ClampedEstimator {
    pub fn inner(&self) -> &FittedModel {
        &self.inner
    }

    pub fn evaluate(&self, x: f64, u: f64) -> Result<f64, TensorLsError> {
        Ok(self.inner.evaluate(x, u)?.clamp(0.0, 1.0))
    }
}

/// Wraps a fitted model so evaluation returns `min(max(value, 0), 1)`.
pub fn clamp(fm: FittedModel) -> ClampedEstimator {
    ClampedEstimator { inner: fm }
}

/// Writes the per-model diagnostics table as CSV with columns
/// `model_d1,model_d2,dim,contrast,penalty,criterion,chosen`.
pub fn write_diagnostics_csv<W: Write>(
    result: &SelectionResult,
    mut w: W,
) -> Result<(), SelectionError> {
    writeln!(w, "model_d1,model_d2,dim,contrast,penalty,criterion,chosen")?;
    for row in &result.per_model {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.index.d1,
            row.index.d2,
            row.dim,
            tensor_ls::fmt_f64(row.contrast),
            tensor_ls::fmt_f64(row.penalty),
            tensor_ls::fmt_f64(row.criterion),
            u8::from(row.index == result.chosen)
        )?;
    }
    Ok(())
}
