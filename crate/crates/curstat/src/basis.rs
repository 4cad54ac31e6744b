//! Orthonormal function families on compact intervals.
//!
//! Two families are provided: piecewise polynomials of a fixed maximum
//! degree on a uniform partition (histograms are the degree-0 case) and
//! trigonometric polynomials. All bases are orthonormal for the Lebesgue
//! measure on their support, in closed form, so no quadrature is involved
//! in construction.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("interval endpoints must satisfy lo < hi, got [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("basis dimension must be at least 1")]
    ZeroDimension,
    #[error(
        "piecewise-polynomial dimension {dim} must be a multiple of degree+1 = {block} \
         (each cell carries degree+1 functions)"
    )]
    DimensionDegreeMismatch { dim: usize, block: usize },
    #[error("trigonometric dimension {0} must be odd: one constant plus complete sine/cosine pairs")]
    EvenTrigDimension(usize),
    #[error("point {point} lies outside the basis support [{lo}, {hi}]")]
    PointOutsideSupport { point: f64, lo: f64, hi: f64 },
}

/// A compact interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, BasisError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(BasisError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Closed-interval membership; both endpoints belong to the support.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// The available one-dimensional families.
///
/// `PiecewisePoly { degree: 0 }` is the histogram family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    PiecewisePoly { degree: usize },
    Trigonometric,
}

impl BasisFamily {
    pub const HISTOGRAM: BasisFamily = BasisFamily::PiecewisePoly { degree: 0 };

    /// Checks whether a dimension is constructible for this family.
    pub fn admits_dimension(&self, dim: usize) -> Result<(), BasisError> {
        if dim == 0 {
            return Err(BasisError::ZeroDimension);
        }
        match self {
            BasisFamily::PiecewisePoly { degree } => {
                let block = degree + 1;
                if dim % block != 0 {
                    return Err(BasisError::DimensionDegreeMismatch { dim, block });
                }
            }
            BasisFamily::Trigonometric => {
                if dim % 2 == 0 {
                    return Err(BasisError::EvenTrigDimension(dim));
                }
            }
        }
        Ok(())
    }
}

/// An orthonormal family of `dim` functions on `support`.
///
/// Piecewise polynomials use a uniform partition into `dim / (degree+1)`
/// cells; within each cell the functions are shifted Legendre polynomials
/// rescaled to unit norm, so orthonormality is exact. Cells are
/// half-open `[a_i, a_{i+1})` except the last, which is closed at the top
/// so the supremum of the support is not dropped. The trigonometric family
/// is the rescaled Fourier family (constant, then sine/cosine pairs of
/// increasing frequency); its dimension must be odd.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis1D {
    family: BasisFamily,
    dim: usize,
    support: Interval,
}

impl Basis1D {
    pub fn new(family: BasisFamily, dim: usize, support: Interval) -> Result<Self, BasisError> {
        family.admits_dimension(dim)?;
        Ok(Self {
            family,
            dim,
            support,
        })
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn is_histogram(&self) -> bool {
        matches!(self.family, BasisFamily::PiecewisePoly { degree: 0 })
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.family, BasisFamily::PiecewisePoly { .. })
    }

    /// Number of partition cells, for the piecewise family.
    pub fn cell_count(&self) -> Option<usize> {
        match self.family {
            BasisFamily::PiecewisePoly { degree } => Some(self.dim / (degree + 1)),
            BasisFamily::Trigonometric => None,
        }
    }

    pub fn cell_width(&self) -> Option<f64> {
        self.cell_count()
            .map(|c| self.support.length() / c as f64)
    }

    /// Index of the cell containing `x`, for the piecewise family.
    /// Returns `None` for points outside the support or for the
    /// trigonometric family.
    pub fn cell_index(&self, x: f64) -> Option<usize> {
        let cells = self.cell_count()?;
        if !self.support.contains(x) {
            return None;
        }
        let rel = (x - self.support.lo) / self.support.length();
        let k = (rel * cells as f64).floor() as usize;
        Some(k.min(cells - 1))
    }

    /// Cell boundaries `lo = e_0 < e_1 < ... < e_cells = hi`, for the
    /// piecewise family.
    pub fn cell_edges(&self) -> Option<Vec<f64>> {
        let cells = self.cell_count()?;
        let w = self.support.length() / cells as f64;
        let mut edges: Vec<f64> = (0..cells).map(|i| self.support.lo + i as f64 * w).collect();
        edges.push(self.support.hi);
        Some(edges)
    }

    /// Evaluates all `dim` basis functions at `point`.
    ///
    /// Ordering: for the piecewise family, cell-major (cell 0 degrees
    /// `0..=s`, then cell 1, ...); for the trigonometric family, constant,
    /// then `(sin_1, cos_1, sin_2, cos_2, ...)`.
    pub fn evaluate(&self, point: f64) -> Result<Vec<f64>, BasisError> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(point, &mut out)?;
        Ok(out)
    }

    /// Same as [`Basis1D::evaluate`] into a caller-provided buffer of
    /// length `dim`.
    pub fn eval_into(&self, point: f64, out: &mut [f64]) -> Result<(), BasisError> {
        assert_eq!(out.len(), self.dim, "output buffer length must equal dim");
        if !self.support.contains(point) {
            return Err(BasisError::PointOutsideSupport {
                point,
                lo: self.support.lo,
                hi: self.support.hi,
            });
        }
        out.fill(0.0);
        match self.family {
            BasisFamily::PiecewisePoly { degree } => {
                let cell = self
                    .cell_index(point)
                    .expect("point inside support has a cell");
                let w = self.cell_width().expect("piecewise family has cells");
                let cell_lo = self.support.lo + cell as f64 * w;
                // Map to [-1, 1] inside the cell; Legendre recurrence.
                let u = 2.0 * (point - cell_lo) / w - 1.0;
                let mut p_prev = 1.0; // P_0
                let mut p_curr = u; // P_1
                for j in 0..=degree {
                    let p_j = if j == 0 {
                        1.0
                    } else if j == 1 {
                        u
                    } else {
                        let jf = (j - 1) as f64;
                        let next = ((2.0 * jf + 1.0) * u * p_curr - jf * p_prev) / (jf + 1.0);
                        p_prev = p_curr;
                        p_curr = next;
                        next
                    };
                    let norm = ((2.0 * j as f64 + 1.0) / w).sqrt();
                    out[cell * (degree + 1) + j] = norm * p_j;
                }
            }
            BasisFamily::Trigonometric => {
                let len = self.support.length();
                out[0] = 1.0 / len.sqrt();
                let scale = (2.0 / len).sqrt();
                let pairs = (self.dim - 1) / 2;
                let base = 2.0 * std::f64::consts::PI * (point - self.support.lo) / len;
                for j in 1..=pairs {
                    let arg = j as f64 * base;
                    out[2 * j - 1] = scale * arg.sin();
                    out[2 * j] = scale * arg.cos();
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    /// Gram matrix of the basis under composite Simpson quadrature.
    /// For the piecewise family the rule is applied per cell (the
    /// integrands are polynomials there); for the trigonometric family a
    /// single fine global rule resolves the oscillations.
    fn gram_by_quadrature(b: &Basis1D) -> Vec<Vec<f64>> {
        let d = b.dim();
        let mut gram = vec![vec![0.0; d]; d];
        // Composite Simpson with n_sub (even) subintervals on [lo, hi].
        // Abscissas are evaluated at positions clamped to [eval_lo,
        // eval_hi]: for the piecewise family this keeps the rounding of
        // `lo + i*h` from assigning an edge point to the neighboring cell,
        // at a nudge of 1e-12 cell widths which is far below the asserted
        // tolerance.
        let mut accumulate =
            |lo: f64, hi: f64, eval_lo: f64, eval_hi: f64, n_sub: usize, gram: &mut Vec<Vec<f64>>| {
                let h = (hi - lo) / n_sub as f64;
                for i in 0..=n_sub {
                    let x = if i == n_sub { hi } else { lo + i as f64 * h };
                    let x = x.clamp(eval_lo, eval_hi);
                    let wgt = if i == 0 || i == n_sub {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let vals = b.evaluate(x).unwrap();
                    for k in 0..d {
                        if vals[k] == 0.0 {
                            continue;
                        }
                        for k2 in 0..d {
                            gram[k][k2] += wgt * vals[k] * vals[k2] * h / 3.0;
                        }
                    }
                }
            };
        if let Some(edges) = b.cell_edges() {
            for c in 0..edges.len() - 1 {
                let (lo, hi) = (edges[c], edges[c + 1]);
                let nudge = (hi - lo) * 1e-12;
                let eval_hi = if c + 2 == edges.len() { hi } else { hi - nudge };
                accumulate(lo, hi, lo + nudge, eval_hi, 1024, &mut gram);
            }
        } else {
            let (lo, hi) = (b.support().lo(), b.support().hi());
            accumulate(lo, hi, lo, hi, 32768, &mut gram);
        }
        gram
    }

    fn assert_orthonormal(b: &Basis1D, tol: f64) {
        let gram = gram_by_quadrature(b);
        for k in 0..b.dim() {
            for k2 in 0..b.dim() {
                let expect = if k == k2 { 1.0 } else { 0.0 };
                assert!(
                    (gram[k][k2] - expect).abs() < tol,
                    "gram[{k}][{k2}] = {} for {:?} D={}",
                    gram[k][k2],
                    b.family(),
                    b.dim()
                );
            }
        }
    }

    #[test]
    fn histogram_d1_is_constant_one_on_unit_interval() {
        let b = Basis1D::new(BasisFamily::HISTOGRAM, 1, unit()).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(b.evaluate(x).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn histogram_d4_on_0_2_has_width_normalized_indicators() {
        let b = Basis1D::new(
            BasisFamily::HISTOGRAM,
            4,
            Interval::new(0.0, 2.0).unwrap(),
        )
        .unwrap();
        let scale = 1.0 / 0.5f64.sqrt();
        let v = b.evaluate(0.75).unwrap();
        assert_abs_diff_eq!(v[1], scale, epsilon = 1e-15);
        assert_eq!((v[0], v[2], v[3]), (0.0, 0.0, 0.0));
        // top endpoint belongs to the last cell
        let v = b.evaluate(2.0).unwrap();
        assert_abs_diff_eq!(v[3], scale, epsilon = 1e-15);
        assert_eq!((v[0], v[1], v[2]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn trigonometric_d3_at_zero() {
        let b = Basis1D::new(BasisFamily::Trigonometric, 3, unit()).unwrap();
        let v = b.evaluate(0.0).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn trigonometric_d5_gram_is_identity_under_quadrature() {
        let b = Basis1D::new(BasisFamily::Trigonometric, 5, unit()).unwrap();
        assert_orthonormal(&b, 1e-8);
    }

    #[test]
    fn orthonormality_across_families_and_dimensions() {
        let supports = [unit(), Interval::new(0.1, 3.0).unwrap()];
        for support in supports {
            for d in [1usize, 4, 16, 64] {
                let b = Basis1D::new(BasisFamily::HISTOGRAM, d, support).unwrap();
                assert_orthonormal(&b, 1e-8);
            }
            for (degree, d) in [(1usize, 8usize), (2, 12), (3, 64)] {
                let b = Basis1D::new(BasisFamily::PiecewisePoly { degree }, d, support).unwrap();
                assert_orthonormal(&b, 1e-8);
            }
            for d in [1usize, 5, 33, 63] {
                let b = Basis1D::new(BasisFamily::Trigonometric, d, support).unwrap();
                assert_orthonormal(&b, 1e-8);
            }
        }
    }

    #[test]
    fn histogram_partition_of_unity() {
        let b = Basis1D::new(
            BasisFamily::HISTOGRAM,
            8,
            Interval::new(1.0, 20.0).unwrap(),
        )
        .unwrap();
        let w = b.cell_width().unwrap();
        for i in 0..=1000 {
            let x = 1.0 + 19.0 * i as f64 / 1000.0;
            let s: f64 = b.evaluate(x).unwrap().iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(s * w, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sup_of_squared_sums_is_linear_in_dimension() {
        // sup_x sum_k phi_k(x)^2 <= K * D on a 1e4-point grid, with K = 1
        // for histograms and K <= 4 for the other families (supports of
        // length >= 1, as used throughout).
        let cases: Vec<(Basis1D, f64)> = vec![
            (
                Basis1D::new(BasisFamily::HISTOGRAM, 16, Interval::new(3.1, 19.0).unwrap())
                    .unwrap(),
                1.0,
            ),
            (
                Basis1D::new(
                    BasisFamily::PiecewisePoly { degree: 2 },
                    24,
                    Interval::new(1.0, 10.0).unwrap(),
                )
                .unwrap(),
                4.0,
            ),
            (
                Basis1D::new(BasisFamily::Trigonometric, 17, Interval::new(1.0, 20.0).unwrap())
                    .unwrap(),
                4.0,
            ),
        ];
        for (b, k_bound) in cases {
            let (lo, hi) = (b.support().lo(), b.support().hi());
            let mut sup: f64 = 0.0;
            for i in 0..10_000 {
                let x = lo + (hi - lo) * i as f64 / 9_999.0;
                let s: f64 = b.evaluate(x).unwrap().iter().map(|v| v * v).sum();
                sup = sup.max(s);
            }
            assert!(
                sup <= k_bound * b.dim() as f64 + 1e-9,
                "sup {} exceeds {} * D for {:?}",
                sup,
                k_bound,
                b.family()
            );
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        let i = unit();
        assert!(matches!(
            Basis1D::new(BasisFamily::PiecewisePoly { degree: 1 }, 3, i),
            Err(BasisError::DimensionDegreeMismatch { .. })
        ));
        assert!(matches!(
            Basis1D::new(BasisFamily::Trigonometric, 4, i),
            Err(BasisError::EvenTrigDimension(4))
        ));
        assert!(matches!(
            Basis1D::new(BasisFamily::HISTOGRAM, 0, i),
            Err(BasisError::ZeroDimension)
        ));
    }

    #[test]
    fn evaluation_outside_support_errors() {
        let b = Basis1D::new(BasisFamily::HISTOGRAM, 4, unit()).unwrap();
        assert!(matches!(
            b.evaluate(-0.1),
            Err(BasisError::PointOutsideSupport { .. })
        ));
        assert!(matches!(
            b.evaluate(1.0 + 1e-9),
            Err(BasisError::PointOutsideSupport { .. })
        ));
    }

    #[test]
    fn piecewise_linear_matches_shifted_legendre() {
        // degree 1 on one cell of [0,1]: phi_1 = 1, phi_2 = sqrt(3)(2x-1)
        let b = Basis1D::new(BasisFamily::PiecewisePoly { degree: 1 }, 2, unit()).unwrap();
        let v = b.evaluate(0.25).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 3.0f64.sqrt() * (-0.5), epsilon = 1e-15);
    }
}
