//! Least-squares fitting, prediction, and the versioned model file format.
//!
//! The model is linear in its parameters, so the unbounded fit is solved
//! directly by orthogonal (QR) decomposition of the scaled design matrix —
//! no iterative optimizer is involved. One step of residual refinement is
//! applied afterwards, which keeps parameters accurate even when raw-unit
//! features spread over many orders of magnitude. A rank-deficient design is
//! a hard error naming the dependent columns; there is no silent
//! pseudo-inverse fallback, because a dependent column means the variable
//! set itself needs fixing.
//!
//! Optionally the fit can be constrained to a per-parameter box, the common
//! case being nonnegativity (component powers are physically nonnegative).
//! The bounded problem is solved by an active-set method that repeatedly
//! solves free-variable subproblems with the same QR routine and terminates
//! at Karush-Kuhn-Tucker stationarity within a 1e-10 gradient-projection
//! tolerance on the scaled problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{DesignMatrix, Measurement, ModelSpec, Variable, FILE_SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Relative tolerance on R's diagonal under which a column is declared
/// linearly dependent on the columns before it.
const RANK_TOLERANCE: f64 = 1e-10;

/// Residual-orthogonality post-condition: for an accepted unbounded fit,
/// `max|Aᵀ(Ap − P)|` must not exceed this factor times `max|AᵀP|`.
const ORTHOGONALITY_TOLERANCE: f64 = 1e-7;

/// Gradient-projection tolerance for bounded fits, applied on the scaled
/// problem.
const KKT_TOLERANCE: f64 = 1e-10;

/// How a model's parameters were constrained during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsMode {
    /// Unconstrained least squares (the default).
    None,
    /// Every parameter constrained to `[0, +inf)`.
    NonNegative,
    /// Some other per-parameter box. Supported by the solver, but the v1
    /// model file format has no tag for it, so such models cannot be saved.
    Custom,
}

impl BoundsMode {
    fn file_tag(self) -> Result<&'static str> {
        match self {
            BoundsMode::None => Ok("none"),
            BoundsMode::NonNegative => Ok("nonneg"),
            BoundsMode::Custom => Err(Error::Validation(
                "models fitted under custom bounds cannot be written to the v1 \
                 model file format (only \"none\" and \"nonneg\" are representable)"
                    .into(),
            )),
        }
    }

    fn from_file_tag(tag: &str) -> Result<Self> {
        match tag {
            "none" => Ok(BoundsMode::None),
            "nonneg" => Ok(BoundsMode::NonNegative),
            other => Err(Error::parse(format!("unknown bounds_mode \"{other}\""))),
        }
    }
}

/// Per-parameter box constraints for the fit. Infinite endpoints are legal.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    /// Builds a box from per-parameter lower and upper limits. Every pair
    /// must satisfy `lo <= hi` and neither side may be NaN.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Validation(format!(
                "bounds must have matching non-empty sides, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Validation(format!(
                    "bound {i} invalid: lower {lo} must not exceed upper {hi}"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// `[0, +inf)` for all `k` parameters.
    pub fn non_negative(k: usize) -> Self {
        Bounds {
            lower: vec![0.0; k],
            upper: vec![f64::INFINITY; k],
        }
    }

    /// Number of parameters the box covers.
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    /// True if the box is empty (never constructed; kept for API symmetry).
    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    fn is_non_negative(&self) -> bool {
        self.lower.iter().all(|&lo| lo == 0.0) && self.upper.iter().all(|&hi| hi == f64::INFINITY)
    }
}

/// Goodness-of-fit numbers recorded with a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    /// Residual sum of squares on the training data, W².
    pub rss: f64,
    /// Number of training rows.
    pub n_train: usize,
}

/// A fitted (or constructed) linear power model.
///
/// Parameters are stored in scaled units — the units the solver worked in —
/// together with the per-column scale factors, so raw-unit parameters are
/// always recoverable exactly as `scaled × scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    spec: ModelSpec,
    params: Vec<f64>,
    scaling: Vec<f64>,
    diagnostics: FitDiagnostics,
    bounds_mode: BoundsMode,
}

impl PowerModel {
    /// Assembles a model from explicit parts, validating shape and
    /// finiteness. Used by the synthetic generator for ground-truth models
    /// and by tests; fitted models come from [`fit`].
    pub fn from_parts(
        spec: ModelSpec,
        params_scaled: Vec<f64>,
        scaling: Vec<f64>,
        diagnostics: FitDiagnostics,
        bounds_mode: BoundsMode,
    ) -> Result<Self> {
        let k = spec.param_count();
        if params_scaled.len() != k || scaling.len() != k {
            return Err(Error::Validation(format!(
                "model with {} variable(s) needs {k} parameters and scale factors, \
                 got {} and {}",
                spec.variables().len(),
                params_scaled.len(),
                scaling.len()
            )));
        }
        if params_scaled.iter().any(|p| !p.is_finite())
            || scaling.iter().any(|s| !s.is_finite() || *s <= 0.0)
        {
            return Err(Error::Validation(
                "model parameters must be finite and scale factors finite and positive".into(),
            ));
        }
        Ok(PowerModel {
            spec,
            params: params_scaled,
            scaling,
            diagnostics,
            bounds_mode,
        })
    }

    /// Convenience constructor from raw-unit parameters; scale factors come
    /// from the spec and scaled parameters are derived.
    pub fn from_raw_params(spec: ModelSpec, params_raw: Vec<f64>) -> Result<Self> {
        let scaling = spec.scaling();
        if params_raw.len() != scaling.len() {
            return Err(Error::Validation(format!(
                "expected {} raw parameters, got {}",
                scaling.len(),
                params_raw.len()
            )));
        }
        let params_scaled = params_raw
            .iter()
            .zip(&scaling)
            .map(|(p, s)| p / s)
            .collect();
        PowerModel::from_parts(
            spec,
            params_scaled,
            scaling,
            FitDiagnostics { rss: 0.0, n_train: 0 },
            BoundsMode::None,
        )
    }

    /// The variable set this model was fitted for.
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Parameters in scaled units, intercept first.
    pub fn params_scaled(&self) -> &[f64] {
        &self.params
    }

    /// Parameters in raw units, intercept first.
    pub fn params_raw(&self) -> Vec<f64> {
        self.params
            .iter()
            .zip(&self.scaling)
            .map(|(p, s)| p * s)
            .collect()
    }

    /// Per-column scale factors, intercept first.
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// Training diagnostics.
    pub fn diagnostics(&self) -> FitDiagnostics {
        self.diagnostics
    }

    /// How the fit was constrained.
    pub fn bounds_mode(&self) -> BoundsMode {
        self.bounds_mode
    }

    /// Raw-unit parameter of one variable, if the model contains it.
    pub fn raw_param(&self, v: Variable) -> Option<f64> {
        self.spec
            .variables()
            .iter()
            .position(|&x| x == v)
            .map(|i| self.params[i + 1] * self.scaling[i + 1])
    }

    /// Intercept in watts.
    pub fn intercept(&self) -> f64 {
        self.params[0]
    }

    /// Predicted power in watts for one measurement's features. Linear
    /// extrapolation may produce a negative value; it is returned as-is so
    /// callers can decide how to flag it.
    pub fn predict(&self, m: &Measurement) -> f64 {
        self.predict_features(&self.spec.feature_vector(m))
    }

    /// Predicted power from an already-built scaled feature vector.
    pub fn predict_features(&self, features_scaled: &[f64]) -> f64 {
        debug_assert_eq!(features_scaled.len(), self.params.len());
        features_scaled
            .iter()
            .zip(&self.params)
            .map(|(x, p)| x * p)
            .sum()
    }

    /// Serializes to the versioned model JSON format. Numbers round-trip
    /// bit-exactly. Models fitted under custom (non-representable) bounds
    /// are rejected.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema_version: FILE_SCHEMA_VERSION,
            variables: self
                .spec
                .variables()
                .iter()
                .map(|v| v.tag().to_string())
                .collect(),
            params_scaled: self.params.clone(),
            params_raw_units: self.params_raw(),
            scaling: self.scaling.clone(),
            diagnostics: DiagnosticsFile {
                rss_w2: self.diagnostics.rss,
                n_train: self.diagnostics.n_train,
            },
            bounds_mode: self.bounds_mode.file_tag()?.to_string(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serialization");
        text.push('\n');
        Ok(text)
    }

    /// Parses the model JSON format, checking schema version, tag validity,
    /// count consistency and finiteness.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("malformed model file: {e}")))?;
        if file.schema_version != FILE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.schema_version,
                supported: FILE_SCHEMA_VERSION,
            });
        }
        let vars = file
            .variables
            .iter()
            .map(|t| Variable::from_tag(t))
            .collect::<Result<Vec<_>>>()?;
        let spec = ModelSpec::new(vars)?;
        let k = spec.param_count();
        if file.params_scaled.len() != k
            || file.scaling.len() != k
            || file.params_raw_units.len() != k
        {
            return Err(Error::parse(format!(
                "model file declares {} variable(s) but carries {} scaled / {} raw \
                 parameter(s) and {} scale factor(s); all must be {k}",
                file.variables.len(),
                file.params_scaled.len(),
                file.params_raw_units.len(),
                file.scaling.len()
            )));
        }
        let bounds_mode = BoundsMode::from_file_tag(&file.bounds_mode)?;
        let model = PowerModel::from_parts(
            spec,
            file.params_scaled,
            file.scaling,
            FitDiagnostics {
                rss: file.diagnostics.rss_w2,
                n_train: file.diagnostics.n_train,
            },
            bounds_mode,
        )?;
        // The raw-unit copy in the file is redundant; reject files where it
        // contradicts scaled × scale beyond rounding noise.
        for (i, (&raw_file, raw_derived)) in
            file.params_raw_units.iter().zip(model.params_raw()).enumerate()
        {
            let tol = 1e-6 * raw_derived.abs().max(1e-300);
            if (raw_file - raw_derived).abs() > tol {
                return Err(Error::parse(format!(
                    "params_raw_units[{i}] = {raw_file} contradicts \
                     params_scaled[{i}] × scaling[{i}] = {raw_derived}"
                )));
            }
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    variables: Vec<String>,
    params_scaled: Vec<f64>,
    params_raw_units: Vec<f64>,
    scaling: Vec<f64>,
    diagnostics: DiagnosticsFile,
    bounds_mode: String,
}

#[derive(Serialize, Deserialize)]
struct DiagnosticsFile {
    rss_w2: f64,
    n_train: usize,
}

/// Solves `min ‖a·x − b‖²` by thin QR with one refinement step. On rank
/// deficiency returns the indices of the dependent columns.
fn qr_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> std::result::Result<DVector<f64>, Vec<usize>> {
    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = (0..r.nrows()).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    let dependent: Vec<usize> = (0..r.nrows())
        .filter(|&i| r[(i, i)].abs() <= RANK_TOLERANCE * max_diag)
        .collect();
    if max_diag == 0.0 || !dependent.is_empty() {
        return Err(if max_diag == 0.0 {
            (0..a.ncols()).collect()
        } else {
            dependent
        });
    }
    let q = qr.q();
    let solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
        r.solve_upper_triangular(&(q.transpose() * rhs))
    };
    let mut x = solve(b).ok_or_else(|| dependent.clone())?;
    // One step of iterative refinement: cheap, and it recovers the accuracy
    // lost to column-magnitude spread when fitting on raw-unit features.
    let residual = b - a * &x;
    if let Some(dx) = solve(&residual) {
        x += dx;
    }
    Ok(x)
}

/// Active-set solver for `min ‖a·x − b‖²` subject to a per-parameter box.
/// Free-variable subproblems reuse the QR routine; terminates when the
/// projected gradient is stationary within [`KKT_TOLERANCE`].
fn bounded_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    bounds: &Bounds,
) -> Result<DVector<f64>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Status {
        AtLower,
        AtUpper,
        Free,
    }

    let k = a.ncols();
    let lo = &bounds.lower;
    let hi = &bounds.upper;
    let mut status = Vec::with_capacity(k);
    let mut x = DVector::zeros(k);
    for j in 0..k {
        // Start each variable at a finite bound; doubly-unbounded variables
        // start free at zero.
        if lo[j].is_finite() {
            x[j] = lo[j];
            status.push(Status::AtLower);
        } else if hi[j].is_finite() {
            x[j] = hi[j];
            status.push(Status::AtUpper);
        } else {
            status.push(Status::Free);
        }
    }
    let gradient_scale = (a.transpose() * b).amax().max(1.0);
    let tau = KKT_TOLERANCE * gradient_scale;

    for _outer in 0..(10 * k + 10) {
        // w = −gradient/2 = Aᵀ(b − Ax): positive w at a lower bound (or
        // negative at an upper bound) means releasing the variable improves
        // the fit.
        let w = a.transpose() * (b - a * &x);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if lo[j] == hi[j] {
                continue; // pinned parameter, never released
            }
            let improving = match status[j] {
                Status::AtLower => w[j] > tau,
                Status::AtUpper => w[j] < -tau,
                Status::Free => false,
            };
            if improving && best.is_none_or(|(_, m)| w[j].abs() > m) {
                best = Some((j, w[j].abs()));
            }
        }
        let Some((release, _)) = best else {
            return Ok(x); // KKT stationary within tolerance
        };
        status[release] = Status::Free;

        // Re-optimize the free set, walking back along the segment to the
        // previous feasible point whenever the unconstrained sub-solution
        // leaves the box. Each pass fixes at least one variable, so k+1
        // passes suffice.
        for _inner in 0..(k + 1) {
            let free: Vec<usize> = (0..k)
                .filter(|&j| status[j] == Status::Free)
                .collect();
            let mut rhs = b.clone();
            for j in 0..k {
                if status[j] != Status::Free && x[j] != 0.0 {
                    rhs -= a.column(j) * x[j];
                }
            }
            let sub = a.select_columns(free.iter());
            let z = qr_least_squares(&sub, &rhs).map_err(|_| {
                Error::Numerical(
                    "bounded fit: free-variable subproblem became singular".into(),
                )
            })?;
            let mut alpha = 1.0f64;
            for (idx, &j) in free.iter().enumerate() {
                let zj = z[idx];
                if zj < lo[j] || zj > hi[j] {
                    let bound = if zj < lo[j] { lo[j] } else { hi[j] };
                    let denom = zj - x[j];
                    if denom != 0.0 {
                        alpha = alpha.min((bound - x[j]) / denom);
                    }
                }
            }
            if alpha >= 1.0 {
                for (idx, &j) in free.iter().enumerate() {
                    x[j] = z[idx];
                }
                break;
            }
            for (idx, &j) in free.iter().enumerate() {
                x[j] += alpha * (z[idx] - x[j]);
            }
            for &j in &free {
                let snap = 1e-12 * (1.0 + x[j].abs());
                if x[j] - lo[j] <= snap {
                    x[j] = lo[j];
                    status[j] = Status::AtLower;
                } else if hi[j] - x[j] <= snap {
                    x[j] = hi[j];
                    status[j] = Status::AtUpper;
                }
            }
        }
    }
    Err(Error::Numerical(
        "bounded fit did not reach stationarity; the design is pathologically conditioned".into(),
    ))
}

/// Fits the linear model for a design matrix, optionally under box bounds.
///
/// Requires at least as many rows as parameters and a full-rank design.
/// For the unbounded path the residual-orthogonality post-condition
/// `max|Aᵀ(Ap − P)| <= 1e-7 · max|AᵀP|` is verified on every accepted fit.
pub fn fit(design: &DesignMatrix, bounds: Option<&Bounds>) -> Result<PowerModel> {
    let a = design.matrix();
    let b = design.observations();
    let (n, k) = (design.n_rows(), design.n_params());
    if n < k {
        return Err(Error::Underdetermined { rows: n, params: k });
    }
    if let Some(bx) = bounds {
        if bx.len() != k {
            return Err(Error::Validation(format!(
                "bounds cover {} parameter(s) but the design has {k}",
                bx.len()
            )));
        }
    }

    // Rank is checked on the full design up front so both paths report the
    // dependent columns by name.
    let unbounded = qr_least_squares(a, b).map_err(|cols| Error::SingularDesign {
        columns: cols.iter().map(|&i| design.column_label(i)).collect(),
    })?;

    let (x, bounds_mode) = match bounds {
        None => (unbounded, BoundsMode::None),
        Some(bx) => {
            let mode = if bx.is_non_negative() {
                BoundsMode::NonNegative
            } else {
                BoundsMode::Custom
            };
            if bx.is_non_negative() && unbounded.iter().all(|&p| p >= 0.0) {
                // The unconstrained optimum already satisfies the box.
                (unbounded, mode)
            } else {
                (bounded_least_squares(a, b, bx)?, mode)
            }
        }
    };

    if bounds_mode == BoundsMode::None {
        let residual_gradient = (a.transpose() * (a * &x - b)).amax();
        let reference = (a.transpose() * b).amax();
        if residual_gradient > ORTHOGONALITY_TOLERANCE * reference.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "fit rejected: residual gradient {residual_gradient:e} exceeds \
                 {ORTHOGONALITY_TOLERANCE:e} × {reference:e}"
            )));
        }
    }

    let rss = (a * &x - b).norm_squared();
    PowerModel::from_parts(
        design.spec().clone(),
        x.iter().copied().collect(),
        design.scaling().to_vec(),
        FitDiagnostics { rss, n_train: n },
        bounds_mode,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::measurement;
    use crate::dataset::{load_measurements, Measurement, MEASUREMENT_CSV_HEADER};
    use approx::assert_relative_eq;

    /// Three-point dataset for spec = {S} whose normal equations were solved
    /// by hand: AᵀA = [[3, 7], [7, 21]], AᵀP = [5.1, 14.2], giving
    /// p0 = 11/20, pS = 69/140 and RSS = 9/1400.
    fn toy_resolution_set() -> Vec<Measurement> {
        vec![
            measurement("A", 1000, 1000, 30.0, 1_000_000.0, 1.0),
            measurement("B", 2000, 1000, 30.0, 1_000_000.0, 1.6),
            measurement("C", 2000, 2000, 30.0, 1_000_000.0, 2.5),
        ]
    }

    fn resolution_spec() -> ModelSpec {
        ModelSpec::new(vec![Variable::Resolution]).unwrap()
    }

    #[test]
    fn toy_fit_matches_hand_solved_normal_equations() {
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let m = fit(&d, None).unwrap();
        assert_relative_eq!(m.params_scaled()[0], 0.55, max_relative = 1e-12);
        assert_relative_eq!(m.params_scaled()[1], 69.0 / 140.0, max_relative = 1e-12);
        assert_relative_eq!(m.diagnostics().rss, 9.0 / 1400.0, max_relative = 1e-10);
        assert_eq!(m.diagnostics().n_train, 3);
        assert_eq!(m.bounds_mode(), BoundsMode::None);
    }

    #[test]
    fn raw_params_are_scaled_params_times_scale() {
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let m = fit(&d, None).unwrap();
        let raw = m.params_raw();
        assert_relative_eq!(raw[0], m.params_scaled()[0]);
        assert_relative_eq!(raw[1], m.params_scaled()[1] * 1e-6, max_relative = 1e-15);
        assert_relative_eq!(
            m.raw_param(Variable::Resolution).unwrap(),
            raw[1],
            max_relative = 1e-15
        );
    }

    #[test]
    fn square_system_interpolates() {
        // N == K: the fit passes exactly through every point.
        let ms = vec![
            measurement("A", 1000, 1000, 30.0, 2_000_000.0, 1.0),
            measurement("B", 2000, 1000, 24.0, 5_000_000.0, 1.5),
            measurement("C", 2000, 2000, 60.0, 9_000_000.0, 2.1),
        ];
        let spec = ModelSpec::new(vec![Variable::Resolution, Variable::Bitrate]).unwrap();
        let d = DesignMatrix::build(&ms, &spec).unwrap();
        let m = fit(&d, None).unwrap();
        assert!(m.diagnostics().rss < 1e-18, "rss = {}", m.diagnostics().rss);
        for meas in &ms {
            assert_relative_eq!(m.predict(meas), meas.power, max_relative = 1e-9);
        }
    }

    #[test]
    fn underdetermined_is_rejected() {
        let ms = toy_resolution_set();
        let d = DesignMatrix::build(&ms[..1], &resolution_spec()).unwrap();
        let err = fit(&d, None).unwrap_err();
        assert_eq!(err.category(), "underdetermined");
    }

    #[test]
    fn duplicate_columns_name_the_culprits() {
        // stereo and head_tracking move in lockstep here, so their columns
        // are identical and the fit must refuse.
        let mut ms = Vec::new();
        for (i, &on) in [false, true, true, true].iter().enumerate() {
            let mut m = measurement(&format!("s{i}"), 1000, 1000, 30.0, 1e6, 1.0 + i as f64 * 0.1);
            m.config.stereo = on;
            m.config.head_tracking = on;
            ms.push(m);
        }
        let spec =
            ModelSpec::new(vec![Variable::StereoView, Variable::HeadTracking]).unwrap();
        let d = DesignMatrix::build(&ms, &spec).unwrap();
        let err = fit(&d, None).unwrap_err();
        assert_eq!(err.category(), "singular-design");
        assert!(err.to_string().contains("F_dyn"), "{err}");
    }

    #[test]
    fn constant_flag_column_conflicts_with_intercept() {
        let mut ms = toy_resolution_set();
        for m in &mut ms {
            m.config.video_360 = true; // never varies → collinear with 1s
        }
        let spec = ModelSpec::new(vec![Variable::Resolution, Variable::Video360]).unwrap();
        let d = DesignMatrix::build(&ms, &spec).unwrap();
        let err = fit(&d, None).unwrap_err();
        assert_eq!(err.category(), "singular-design");
        assert!(err.to_string().contains("F_360"));
    }

    #[test]
    fn nonneg_bounds_inactive_when_optimum_is_feasible() {
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let unbounded = fit(&d, None).unwrap();
        let bounded = fit(&d, Some(&Bounds::non_negative(2))).unwrap();
        for (u, b) in unbounded.params_scaled().iter().zip(bounded.params_scaled()) {
            assert_relative_eq!(u, b, max_relative = 1e-10);
        }
        assert_eq!(bounded.bounds_mode(), BoundsMode::NonNegative);
    }

    #[test]
    fn nonneg_bounds_clamp_a_negative_slope() {
        // Power decreasing with resolution: unbounded pS < 0; under
        // nonnegativity the optimum is pS = 0, p0 = mean power = 1.5, with
        // the at-bound gradient pointing the right way (checked by hand).
        let ms = vec![
            measurement("A", 1000, 1000, 30.0, 1e6, 2.0),
            measurement("B", 2000, 1000, 30.0, 1e6, 1.5),
            measurement("C", 2000, 2000, 30.0, 1e6, 1.0),
        ];
        let d = DesignMatrix::build(&ms, &resolution_spec()).unwrap();
        let unbounded = fit(&d, None).unwrap();
        assert!(unbounded.params_scaled()[1] < 0.0);
        let bounded = fit(&d, Some(&Bounds::non_negative(2))).unwrap();
        assert_relative_eq!(bounded.params_scaled()[0], 1.5, max_relative = 1e-10);
        assert_eq!(bounded.params_scaled()[1], 0.0);
        assert!(bounded.params_scaled().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn pinned_parameter_stays_pinned() {
        // lo == hi pins the intercept at 0.4; only pS is free.
        let ms = toy_resolution_set();
        let d = DesignMatrix::build(&ms, &resolution_spec()).unwrap();
        let bounds = Bounds::new(vec![0.4, 0.0], vec![0.4, f64::INFINITY]).unwrap();
        let m = fit(&d, Some(&bounds)).unwrap();
        assert_eq!(m.params_scaled()[0], 0.4);
        // With p0 fixed, the optimal pS solves Σ S(P − 0.4) / Σ S²:
        // (0.6·1 + 1.2·2 + 2.1·4) / 21 = 11.4 / 21.
        assert_relative_eq!(m.params_scaled()[1], 11.4 / 21.0, max_relative = 1e-9);
        // Such a box has no v1 file representation.
        assert_eq!(m.bounds_mode(), BoundsMode::Custom);
        assert_eq!(m.to_json().unwrap_err().category(), "validation");
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert_eq!(
            Bounds::new(vec![1.0], vec![0.0]).unwrap_err().category(),
            "validation"
        );
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let wrong_len = Bounds::non_negative(5);
        assert_eq!(
            fit(&d, Some(&wrong_len)).unwrap_err().category(),
            "validation"
        );
    }

    #[test]
    fn predict_matches_hand_computed_example() {
        // Simplified model with textbook parameters (scaled units):
        // p0 = 0.97 W, pb = 0.004 W/(Mbit/s), pS = 0.05019 W/Mpx,
        // p360 = 0.1 W; a 3840×1920 stream at 8 Mbit/s with 360 rendering.
        let model = PowerModel::from_parts(
            ModelSpec::simplified(),
            vec![0.97, 0.004, 0.05019, 0.1],
            ModelSpec::simplified().scaling(),
            FitDiagnostics { rss: 0.0, n_train: 0 },
            BoundsMode::None,
        )
        .unwrap();
        let mut m = measurement("DrivingInCountry", 3840, 1920, 30.0, 8_000_000.0, 0.0);
        m.config.video_360 = true;
        let p = model.predict(&m);
        let exact = 0.97 + 0.032 + 7.3728 * 0.05019 + 0.1;
        assert_relative_eq!(p, exact, max_relative = 1e-12);
        assert!((p - 1.47205).abs() < 1e-4);
    }

    #[test]
    fn predict_intercept_only_and_zero_features() {
        let model =
            PowerModel::from_raw_params(ModelSpec::intercept_only(), vec![0.8]).unwrap();
        let m = measurement("A", 416, 240, 30.0, 1e6, 0.0);
        assert_relative_eq!(model.predict(&m), 0.8);

        let zeroed = PowerModel::from_parts(
            ModelSpec::simplified(),
            vec![0.0, 0.0, 0.0, 0.0],
            ModelSpec::simplified().scaling(),
            FitDiagnostics { rss: 0.0, n_train: 0 },
            BoundsMode::None,
        )
        .unwrap();
        assert_relative_eq!(zeroed.predict(&m), 0.0);
    }

    #[test]
    fn model_json_round_trip_is_bit_exact() {
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let m = fit(&d, None).unwrap();
        let text = m.to_json().unwrap();
        let back = PowerModel::from_json(&text).unwrap();
        assert_eq!(back.spec(), m.spec());
        for (a, b) in m.params_scaled().iter().zip(back.params_scaled()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in m.scaling().iter().zip(back.scaling()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn model_file_rejects_bad_schema_and_tags() {
        let d = DesignMatrix::build(&toy_resolution_set(), &resolution_spec()).unwrap();
        let text = fit(&d, None).unwrap().to_json().unwrap();

        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert_eq!(
            PowerModel::from_json(&bumped).unwrap_err().category(),
            "schema-version"
        );

        let unknown_tag = text.replace("\"S\"", "\"F_hdr\"");
        let err = PowerModel::from_json(&unknown_tag).unwrap_err();
        assert_eq!(err.category(), "parse");
        assert!(err.to_string().contains("F_hdr"));

        let missing = text.replace("\"bounds_mode\": \"none\"", "\"bounds_mode_x\": \"none\"");
        assert_eq!(
            PowerModel::from_json(&missing).unwrap_err().category(),
            "parse"
        );
    }

    #[test]
    fn model_file_rejects_count_mismatch() {
        let json = r#"{
            "schema_version": 1,
            "variables": ["b", "f", "S", "F_st", "F_dyn", "F_360", "F_3D", "F_gyro", "F_accel", "F_magn"],
            "params_scaled": [0.9, 0.004, 0.0, 0.05],
            "params_raw_units": [0.9, 4e-9, 0.0, 5e-8],
            "scaling": [1.0, 1e-6, 1.0, 1e-6],
            "diagnostics": {"rss_w2": 0.0, "n_train": 0},
            "bounds_mode": "none"
        }"#;
        let err = PowerModel::from_json(json).unwrap_err();
        assert_eq!(err.category(), "parse");
        assert!(err.to_string().contains("10 variable"), "{err}");
    }

    #[test]
    fn duplicate_row_does_not_change_noiseless_solution() {
        // Noiseless data generated by an exact linear model: duplicating a
        // row re-weights a zero residual, so the solution and the per-row
        // RSS on the original set must not move.
        let truth = PowerModel::from_raw_params(
            resolution_spec(),
            vec![0.5, 1e-7],
        )
        .unwrap();
        let mut ms = toy_resolution_set();
        for m in &mut ms {
            m.power = truth.predict(m);
        }
        let d = DesignMatrix::build(&ms, &resolution_spec()).unwrap();
        let base = fit(&d, None).unwrap();
        let rss_orig = |model: &PowerModel| -> f64 {
            ms.iter()
                .map(|m| (model.predict(m) - m.power).powi(2))
                .sum()
        };

        let mut dup = ms.clone();
        dup.push(ms[1].clone());
        let d2 = DesignMatrix::build(&dup, &resolution_spec()).unwrap();
        let refit = fit(&d2, None).unwrap();
        for (a, b) in base.params_scaled().iter().zip(refit.params_scaled()) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
        assert!(rss_orig(&refit) <= rss_orig(&base) + 1e-9);
    }

    #[test]
    fn refit_optimality_directions_on_noisy_data() {
        // p_orig is optimal on the original rows, p_new on the augmented
        // rows; each evaluation direction must respect optimality.
        let ms = toy_resolution_set(); // not exactly linear
        let d = DesignMatrix::build(&ms, &resolution_spec()).unwrap();
        let p_orig = fit(&d, None).unwrap();

        let mut aug = ms.clone();
        aug.push(ms[2].clone());
        let d_aug = DesignMatrix::build(&aug, &resolution_spec()).unwrap();
        let p_new = fit(&d_aug, None).unwrap();

        let rss_on = |model: &PowerModel, rows: &[Measurement]| -> f64 {
            rows.iter()
                .map(|m| (model.predict(m) - m.power).powi(2))
                .sum()
        };
        assert!(rss_on(&p_new, &ms) + 1e-12 >= rss_on(&p_orig, &ms));
        assert!(rss_on(&p_new, &aug) <= rss_on(&p_orig, &aug) + 1e-12);
    }

    #[test]
    fn fit_from_csv_text_end_to_end() {
        let text = format!(
            "{MEASUREMENT_CSV_HEADER}\n\
             A,1000,1000,30,1000000,HEVC,28,VaR,0,0,0,0,0,0,0,1.0\n\
             B,2000,1000,30,1000000,HEVC,28,VaR,0,0,0,0,0,0,0,1.6\n\
             C,2000,2000,30,1000000,HEVC,28,VaR,0,0,0,0,0,0,0,2.5\n"
        );
        let ms = load_measurements(&text).unwrap();
        let d = DesignMatrix::build(&ms, &resolution_spec()).unwrap();
        let m = fit(&d, None).unwrap();
        assert_relative_eq!(m.params_scaled()[0], 0.55, max_relative = 1e-12);
    }
}
