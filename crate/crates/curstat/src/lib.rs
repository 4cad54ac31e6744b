//! Estimation of the conditional cumulative distribution function of a
//! lifetime given a covariate, from current-status observations.
//!
//! The data are i.i.d. triples `(x, t, delta)` where `x` is a covariate,
//! `t` an inspection time and `delta = 1{y <= t}` the current status of the
//! unobserved lifetime `y`. Since `E[delta | x, t] = F(x, t)`, the target
//! conditional CDF is the regression function of `delta` on `(x, t)` and is
//! estimated by least squares on tensor products of one-dimensional
//! orthonormal bases, with a data-driven penalized choice of the model
//! dimensions. Post-processing clamps the fitted surface to `[0, 1]` and
//! monotonizes each covariate slice by increasing rearrangement.
//!
//! Module overview:
//! - [`basis`]: orthonormal families on compact intervals (piecewise
//!   polynomials, trigonometric polynomials);
//! - [`tensor_ls`]: tensor-product design, Gram systems, minimum-norm
//!   least-squares fits;
//! - [`selection`]: model collections under dimension budgets, penalized
//!   selection, clamping;
//! - [`rearrange`]: increasing rearrangement of piecewise-constant slices;
//! - [`simgen`]: synthetic current-status designs, gamma machinery, the
//!   offset distance between inspection and lifetime densities;
//! - [`risk`]: empirical/integrated norms, variance diagnostics, Monte
//!   Carlo risk studies;
//! - [`quad`]: small quadrature helpers shared by the above.

pub mod basis;
pub mod quad;
pub mod rearrange;
pub mod risk;
pub mod selection;
pub mod simgen;
pub mod tensor_ls;

pub use basis::{Basis1D, BasisError, BasisFamily, Interval};
pub use tensor_ls::{FittedModel, Region, Sample, TensorModel};
