//! Cross-validation, error metrics, variable pruning, per-variable
//! contributions, and power-saving estimates.
//!
//! Validation is leave-one-source-sequence-out: every distinct sequence name
//! forms one fold, so a model is always judged on content it has never seen
//! in any coded variant or playback configuration. Errors are relative to
//! the measured power — `ε̄` is the mean of `|estimate − measured| /
//! measured` over all held-out rows, `ε_max` the largest such ratio.
//!
//! Pruning asks, for each variable of a baseline spec, how much the
//! cross-validated `ε̄` grows when the variable is dropped. Variables whose
//! removal costs less than a threshold (default 0.5 percentage points,
//! absolute) are discarded; the intercept is always retained. The default
//! mode evaluates each drop against the full baseline independently; a
//! sequential backward-elimination mode is available as an option.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::dataset::{DesignMatrix, Measurement, ModelSpec, Variable};
use crate::error::{Error, Result};
use crate::solver::{fit, Bounds, PowerModel};

/// Prediction outcome for one held-out measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    /// Index of the measurement in the input list.
    pub index: usize,
    /// Source-sequence name (also the fold that held this row out).
    pub sequence: String,
    /// Measured net power, watts.
    pub measured_w: f64,
    /// Model estimate, watts.
    pub estimated_w: f64,
    /// Signed relative error `(estimate − measured) / measured`.
    pub rel_error: f64,
}

/// Model fitted for one fold, keyed by the held-out sequence name.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub held_out: String,
    /// Scaled-unit parameters of the fold model, intercept first.
    pub params_scaled: Vec<f64>,
}

/// Full cross-validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// The spec that was validated.
    pub spec: ModelSpec,
    /// One row per input measurement, in input order.
    pub per_measurement: Vec<EvalRow>,
    /// Mean absolute relative error ε̄ over all rows.
    pub mean_rel_error: f64,
    /// Maximum absolute relative error ε_max over all rows.
    pub max_rel_error: f64,
    /// Fold models in fold (sequence-name) order.
    pub folds: Vec<FoldResult>,
}

impl EvaluationReport {
    /// Per-measurement CSV: one row per input measurement.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sequence,measured_w,estimated_w,rel_error\n");
        for r in &self.per_measurement {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index, r.sequence, r.measured_w, r.estimated_w, r.rel_error
            ));
        }
        out
    }

    /// Fold-model CSV: held-out sequence plus scaled parameters.
    pub fn folds_csv(&self) -> String {
        let mut out = String::from("held_out_sequence,p_0");
        for v in self.spec.variables() {
            out.push_str(&format!(",{}", v.tag()));
        }
        out.push('\n');
        for f in &self.folds {
            out.push_str(&f.held_out);
            for p in &f.params_scaled {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }

    /// Short human-readable summary (means per fold plus the aggregates).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>6} {:>12} {:>12}\n",
            "held-out sequence", "rows", "mean |err|", "max |err|"
        ));
        for f in &self.folds {
            let rows: Vec<&EvalRow> = self
                .per_measurement
                .iter()
                .filter(|r| r.sequence == f.held_out)
                .collect();
            let mean = rows.iter().map(|r| r.rel_error.abs()).sum::<f64>() / rows.len() as f64;
            let max = rows
                .iter()
                .map(|r| r.rel_error.abs())
                .fold(0.0f64, f64::max);
            out.push_str(&format!(
                "{:<24} {:>6} {:>11.3}% {:>11.3}%\n",
                f.held_out,
                rows.len(),
                mean * 100.0,
                max * 100.0
            ));
        }
        out.push_str(&format!(
            "overall: mean relative error {:.4}%, max relative error {:.4}%\n",
            self.mean_rel_error * 100.0,
            self.max_rel_error * 100.0
        ));
        out
    }
}

/// Computes `(ε̄, ε_max)` for parallel slices of measured and estimated
/// powers. Measured values must be positive; slices must be non-empty and of
/// equal length.
pub fn error_metrics(measured: &[f64], estimated: &[f64]) -> Result<(f64, f64)> {
    if measured.len() != estimated.len() {
        return Err(Error::Validation(format!(
            "measured and estimated lengths differ: {} vs {}",
            measured.len(),
            estimated.len()
        )));
    }
    if measured.is_empty() {
        return Err(Error::Validation(
            "error metrics need at least one value".into(),
        ));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (i, (&m, &e)) in measured.iter().zip(estimated).enumerate() {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::DivisionByZero(format!(
                "measured value {i} is {m}; relative error needs positive measured power"
            )));
        }
        let rel = ((e - m) / m).abs();
        sum += rel;
        max = max.max(rel);
    }
    Ok((sum / measured.len() as f64, max))
}

fn build_thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {jobs}-thread pool: {e}")))
}

/// Leave-one-source-sequence-out cross-validation of `spec` over
/// `measurements`.
///
/// Folds are keyed and ordered by sequence name, so the result is
/// deterministic regardless of `jobs` (the number of worker threads; `None`
/// uses the available parallelism). Needs at least two distinct sequence
/// names and strictly positive measured powers.
pub fn cross_validate(
    measurements: &[Measurement],
    spec: &ModelSpec,
    bounds: Option<&Bounds>,
    jobs: Option<usize>,
) -> Result<EvaluationReport> {
    for (i, m) in measurements.iter().enumerate() {
        m.validate()
            .map_err(|e| Error::Validation(format!("measurement {i}: {e}")))?;
        if m.power == 0.0 {
            return Err(Error::DivisionByZero(format!(
                "measurement {i} (\"{}\") has zero measured power; \
                 relative errors are undefined",
                m.sequence.name
            )));
        }
    }
    let names: Vec<String> = measurements
        .iter()
        .map(|m| m.sequence.name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if names.len() < 2 {
        return Err(Error::Validation(format!(
            "cross-validation needs at least 2 distinct sequence names, got {}",
            names.len()
        )));
    }

    let run_fold = |name: &String| -> Result<(FoldResult, Vec<EvalRow>)> {
        let train: Vec<Measurement> = measurements
            .iter()
            .filter(|m| m.sequence.name != *name)
            .cloned()
            .collect();
        let design = DesignMatrix::build(&train, spec)
            .and_then(|d| fit(&d, bounds))
            .map_err(|e| Error::Fold {
                sequence: name.clone(),
                source: Box::new(e),
            })?;
        let rows = measurements
            .iter()
            .enumerate()
            .filter(|(_, m)| m.sequence.name == *name)
            .map(|(index, m)| {
                let est = design.predict(m);
                EvalRow {
                    index,
                    sequence: name.clone(),
                    measured_w: m.power,
                    estimated_w: est,
                    rel_error: (est - m.power) / m.power,
                }
            })
            .collect();
        Ok((
            FoldResult {
                held_out: name.clone(),
                params_scaled: design.params_scaled().to_vec(),
            },
            rows,
        ))
    };

    let outcomes: Vec<(FoldResult, Vec<EvalRow>)> = match jobs {
        Some(1) => names.iter().map(run_fold).collect::<Result<_>>()?,
        Some(n) => build_thread_pool(n)?
            .install(|| names.par_iter().map(run_fold).collect::<Result<_>>())?,
        None => names.par_iter().map(run_fold).collect::<Result<_>>()?,
    };

    let mut folds = Vec::with_capacity(outcomes.len());
    let mut per_measurement = Vec::with_capacity(measurements.len());
    for (fold, rows) in outcomes {
        folds.push(fold);
        per_measurement.extend(rows);
    }
    per_measurement.sort_by_key(|r| r.index);
    debug_assert_eq!(per_measurement.len(), measurements.len());
    debug_assert!(per_measurement.iter().enumerate().all(|(i, r)| r.index == i));

    let mean_rel_error = per_measurement
        .iter()
        .map(|r| r.rel_error.abs())
        .sum::<f64>()
        / per_measurement.len() as f64;
    let max_rel_error = per_measurement
        .iter()
        .map(|r| r.rel_error.abs())
        .fold(0.0f64, f64::max);

    Ok(EvaluationReport {
        spec: spec.clone(),
        per_measurement,
        mean_rel_error,
        max_rel_error,
        folds,
    })
}

/// How the pruning threshold is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Threshold in absolute percentage points of ε̄ (the default).
    AbsolutePoints,
    /// Threshold in percent growth relative to the baseline ε̄.
    RelativeGrowth,
}

/// Pruning strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    /// Each variable is dropped once against the full baseline (default).
    OneAtATime,
    /// Repeatedly drop the cheapest variable until every remaining removal
    /// would cost at least the threshold.
    Sequential,
}

/// Options for [`prune_report`] / [`prune_variables`].
#[derive(Debug, Clone)]
pub struct PruneOptions {
    /// Retention threshold; units depend on `kind`. A removal that costs at
    /// least this much keeps the variable (ties retain).
    pub threshold: f64,
    pub kind: ThresholdKind,
    pub mode: PruneMode,
    /// Bounds applied to every fit during evaluation.
    pub bounds: Option<Bounds>,
    /// Worker threads per cross-validation run.
    pub jobs: Option<usize>,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions {
            threshold: 0.5,
            kind: ThresholdKind::AbsolutePoints,
            mode: PruneMode::OneAtATime,
            bounds: None,
            jobs: None,
        }
    }
}

/// Audit record for one candidate variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneEntry {
    pub variable: Variable,
    /// Cross-validated ε̄ with this variable removed.
    pub mean_rel_error_without: f64,
    /// Cost of removal in the configured threshold units (percentage points
    /// or percent growth).
    pub delta: f64,
    pub retained: bool,
}

/// Pruning outcome plus the audit trail behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub baseline: ModelSpec,
    /// Cross-validated ε̄ of the baseline spec.
    pub baseline_mean_rel_error: f64,
    pub threshold: f64,
    pub kind: ThresholdKind,
    pub mode: PruneMode,
    /// One entry per baseline variable, in baseline order. In sequential
    /// mode an entry reflects the round in which its variable was dropped,
    /// or the final round if it survived.
    pub entries: Vec<PruneEntry>,
    /// The retained variables, in baseline order.
    pub pruned: ModelSpec,
}

impl PruneReport {
    /// Audit CSV, one row per candidate variable.
    pub fn to_csv(&self) -> String {
        let delta_col = match self.kind {
            ThresholdKind::AbsolutePoints => "delta_pp",
            ThresholdKind::RelativeGrowth => "delta_growth_pct",
        };
        let mut out = format!("variable,mean_rel_error_without,{delta_col},retained\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.variable.tag(),
                e.mean_rel_error_without,
                e.delta,
                e.retained as u8
            ));
        }
        out
    }

    /// Human-readable audit table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "baseline ε̄ = {:.4}% over {{{}}}\n",
            self.baseline_mean_rel_error * 100.0,
            self.baseline
                .variables()
                .iter()
                .map(|v| v.tag())
                .collect::<Vec<_>>()
                .join(", ")
        );
        let unit = match self.kind {
            ThresholdKind::AbsolutePoints => "pp",
            ThresholdKind::RelativeGrowth => "% growth",
        };
        out.push_str(&format!(
            "{:<10} {:>14} {:>14} {:>10}\n",
            "variable", "ε̄ without", "delta", "decision"
        ));
        for e in &self.entries {
            out.push_str(&format!(
                "{:<10} {:>13.4}% {:>10.4} {} {:>8}\n",
                e.variable.tag(),
                e.mean_rel_error_without * 100.0,
                e.delta,
                unit,
                if e.retained { "keep" } else { "drop" }
            ));
        }
        out.push_str(&format!(
            "pruned spec: {{{}}}\n",
            self.pruned
                .variables()
                .iter()
                .map(|v| v.tag())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out
    }
}

fn removal_delta(kind: ThresholdKind, base: f64, without: f64) -> f64 {
    match kind {
        // Percentage points: ε̄ values are fractions, so ×100.
        ThresholdKind::AbsolutePoints => (without - base) * 100.0,
        ThresholdKind::RelativeGrowth => {
            if base == 0.0 {
                if without > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (without - base) / base * 100.0
            }
        }
    }
}

/// Prunes `baseline` against cross-validated error and returns the full
/// audit. See the module docs for the retention rule.
pub fn prune_report(
    measurements: &[Measurement],
    baseline: &ModelSpec,
    options: &PruneOptions,
) -> Result<PruneReport> {
    if baseline.variables().is_empty() {
        return Err(Error::Validation(
            "pruning needs a baseline with at least one variable".into(),
        ));
    }
    if !options.threshold.is_finite() && options.threshold != f64::INFINITY {
        return Err(Error::Validation(format!(
            "pruning threshold must be finite or +inf, got {}",
            options.threshold
        )));
    }
    let bounds = options.bounds.as_ref();
    let jobs = options.jobs;
    let base_report = cross_validate(measurements, baseline, bounds, jobs)?;
    let base_err = base_report.mean_rel_error;

    match options.mode {
        PruneMode::OneAtATime => {
            let mut entries = Vec::new();
            for &v in baseline.variables() {
                let without = cross_validate(measurements, &baseline.without(v), bounds, jobs)?
                    .mean_rel_error;
                let delta = removal_delta(options.kind, base_err, without);
                entries.push(PruneEntry {
                    variable: v,
                    mean_rel_error_without: without,
                    delta,
                    retained: delta >= options.threshold,
                });
            }
            let pruned = ModelSpec::new(
                entries
                    .iter()
                    .filter(|e| e.retained)
                    .map(|e| e.variable)
                    .collect(),
            )?;
            Ok(PruneReport {
                baseline: baseline.clone(),
                baseline_mean_rel_error: base_err,
                threshold: options.threshold,
                kind: options.kind,
                mode: options.mode,
                entries,
                pruned,
            })
        }
        PruneMode::Sequential => {
            let mut current = baseline.clone();
            let mut current_err = base_err;
            let mut final_entries: Vec<Option<PruneEntry>> =
                vec![None; baseline.variables().len()];
            let slot = |v: Variable, baseline: &ModelSpec| {
                baseline.variables().iter().position(|&x| x == v).unwrap()
            };
            loop {
                if current.variables().is_empty() {
                    break;
                }
                let mut round: Vec<(Variable, f64, f64)> = Vec::new();
                for &v in current.variables() {
                    let without =
                        cross_validate(measurements, &current.without(v), bounds, jobs)?
                            .mean_rel_error;
                    round.push((v, without, removal_delta(options.kind, current_err, without)));
                }
                // Cheapest removal; first-in-order wins ties for determinism.
                let &(victim, without, delta) = round
                    .iter()
                    .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
                    .unwrap();
                if delta >= options.threshold {
                    // Every remaining variable earns its keep.
                    for (v, without, delta) in round {
                        final_entries[slot(v, baseline)] = Some(PruneEntry {
                            variable: v,
                            mean_rel_error_without: without,
                            delta,
                            retained: true,
                        });
                    }
                    break;
                }
                final_entries[slot(victim, baseline)] = Some(PruneEntry {
                    variable: victim,
                    mean_rel_error_without: without,
                    delta,
                    retained: false,
                });
                current = current.without(victim);
                current_err = without;
            }
            let entries: Vec<PruneEntry> = final_entries.into_iter().flatten().collect();
            let pruned = ModelSpec::new(
                entries
                    .iter()
                    .filter(|e| e.retained)
                    .map(|e| e.variable)
                    .collect(),
            )?;
            Ok(PruneReport {
                baseline: baseline.clone(),
                baseline_mean_rel_error: base_err,
                threshold: options.threshold,
                kind: options.kind,
                mode: options.mode,
                entries,
                pruned,
            })
        }
    }
}

/// Convenience wrapper returning only the pruned spec.
pub fn prune_variables(
    measurements: &[Measurement],
    baseline: &ModelSpec,
    options: &PruneOptions,
) -> Result<ModelSpec> {
    Ok(prune_report(measurements, baseline, options)?.pruned)
}

/// Worst-case share of one model term in the measured power.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionEntry {
    /// `p_0` for the intercept, else the variable tag.
    pub label: String,
    /// `max_j |x_k(j) · p_k| / P(j) × 100`, computed in raw units. May
    /// exceed 100 when a term is larger than a small measured power.
    pub max_percent: f64,
    /// Input index of the measurement attaining the maximum.
    pub witness_index: usize,
    /// Sequence name of that measurement.
    pub witness_sequence: String,
}

/// Per-term worst-case contributions, intercept first, then spec order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionReport {
    pub entries: Vec<ContributionEntry>,
}

impl ContributionReport {
    /// Plot-ready CSV for a contribution bar chart.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,c_max_percent,witness_index,witness_sequence\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.label, e.max_percent, e.witness_index, e.witness_sequence
            ));
        }
        out
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>12} {:>28}\n",
            "term", "max share", "attained at"
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{:<10} {:>11.2}% {:>22} [row {}]\n",
                e.label, e.max_percent, e.witness_sequence, e.witness_index
            ));
        }
        out
    }
}

/// Signed per-term power split of every measurement, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownRow {
    pub index: usize,
    pub sequence: String,
    pub measured_w: f64,
    /// Model estimate: the sum of `parts_w`.
    pub estimated_w: f64,
    /// One signed wattage per term (intercept first, then spec order).
    pub parts_w: Vec<f64>,
}

/// Measured-versus-estimated stacked breakdown for every measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionBreakdown {
    /// Term labels: `p_0`, then variable tags in spec order.
    pub labels: Vec<String>,
    pub rows: Vec<BreakdownRow>,
}

impl ContributionBreakdown {
    /// Plot-ready CSV for a stacked measured-vs-estimated chart.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sequence,measured_w,estimated_w");
        for l in &self.labels {
            out.push_str(&format!(",{l}_w"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}",
                r.index, r.sequence, r.measured_w, r.estimated_w
            ));
            for p in &r.parts_w {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Worst-case contribution of every model term across `measurements`,
/// computed in raw units with the intercept included as `p_0`. Measured
/// powers must be positive.
pub fn contributions(
    model: &PowerModel,
    measurements: &[Measurement],
) -> Result<ContributionReport> {
    let breakdown = contribution_breakdown(model, measurements)?;
    let k = breakdown.labels.len();
    let mut entries = Vec::with_capacity(k);
    for term in 0..k {
        let (mut best_val, mut best_row) = (f64::NEG_INFINITY, 0);
        for (i, row) in breakdown.rows.iter().enumerate() {
            let share = (row.parts_w[term] / row.measured_w).abs() * 100.0;
            if share > best_val {
                best_val = share;
                best_row = i;
            }
        }
        let witness = &breakdown.rows[best_row];
        entries.push(ContributionEntry {
            label: breakdown.labels[term].clone(),
            max_percent: best_val,
            witness_index: witness.index,
            witness_sequence: witness.sequence.clone(),
        });
    }
    Ok(ContributionReport { entries })
}

/// Signed per-term wattages for every measurement. The parts of one row sum
/// to the model estimate, so on data the model reproduces exactly the shares
/// sum to 100% of the measured power.
pub fn contribution_breakdown(
    model: &PowerModel,
    measurements: &[Measurement],
) -> Result<ContributionBreakdown> {
    if measurements.is_empty() {
        return Err(Error::Validation(
            "contributions need at least one measurement".into(),
        ));
    }
    let spec = model.spec();
    let params_raw = model.params_raw();
    let mut labels = Vec::with_capacity(params_raw.len());
    for i in 0..params_raw.len() {
        labels.push(spec.param_label(i));
    }
    let mut rows = Vec::with_capacity(measurements.len());
    for (index, m) in measurements.iter().enumerate() {
        m.validate()
            .map_err(|e| Error::Validation(format!("measurement {index}: {e}")))?;
        if m.power == 0.0 {
            return Err(Error::DivisionByZero(format!(
                "measurement {index} (\"{}\") has zero measured power",
                m.sequence.name
            )));
        }
        let x_raw = spec.feature_vector_raw(m);
        let parts_w: Vec<f64> = x_raw
            .iter()
            .zip(&params_raw)
            .map(|(x, p)| x * p)
            .collect();
        let estimated_w = parts_w.iter().sum();
        rows.push(BreakdownRow {
            index,
            sequence: m.sequence.name.clone(),
            measured_w: m.power,
            estimated_w,
            parts_w,
        });
    }
    Ok(ContributionBreakdown { labels, rows })
}

/// Power saving predicted for a resolution change.
#[derive(Debug, Clone, PartialEq)]
pub struct SavingsEstimate {
    /// Source resolution, pixels.
    pub from_pixels: u64,
    /// Target resolution, pixels.
    pub to_pixels: u64,
    /// Predicted saving `(S_from − S_to) × p_S`, watts (negative when
    /// moving to a larger resolution).
    pub delta_w: f64,
    /// Reference power the saving is expressed against, if one was given.
    pub reference_power_w: Option<f64>,
    /// `delta_w / reference_power` as a fraction, if a reference was given.
    pub relative_saving: Option<f64>,
}

/// Estimates the mean-power saving of switching playback from one frame
/// resolution to another, using the model's raw-unit resolution parameter.
/// With a reference measurement the saving is also expressed relative to
/// the predicted power of that reference.
pub fn estimate_savings(
    model: &PowerModel,
    from: (u32, u32),
    to: (u32, u32),
    reference: Option<&Measurement>,
) -> Result<SavingsEstimate> {
    let reference_power = match reference {
        None => None,
        Some(m) => {
            m.validate()?;
            Some(model.predict(m))
        }
    };
    estimate_savings_with_power(model, from, to, reference_power)
}

/// Like [`estimate_savings`], but with the reference power given directly in
/// watts.
pub fn estimate_savings_with_power(
    model: &PowerModel,
    from: (u32, u32),
    to: (u32, u32),
    reference_power: Option<f64>,
) -> Result<SavingsEstimate> {
    let p_s = model.raw_param(Variable::Resolution).ok_or_else(|| {
        Error::UnsupportedQuery(
            "model has no resolution variable (S); resolution savings are undefined".into(),
        )
    })?;
    for (w, h) in [from, to] {
        if w == 0 || h == 0 {
            return Err(Error::Validation(format!(
                "nonpositive resolution {w}x{h}"
            )));
        }
    }
    let from_pixels = from.0 as u64 * from.1 as u64;
    let to_pixels = to.0 as u64 * to.1 as u64;
    let delta_w = (from_pixels as f64 - to_pixels as f64) * p_s;
    let relative_saving = match reference_power {
        None => None,
        Some(p) => {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::DivisionByZero(format!(
                    "reference power must be positive and finite, got {p}"
                )));
            }
            Some(delta_w / p)
        }
    };
    Ok(SavingsEstimate {
        from_pixels,
        to_pixels,
        delta_w,
        reference_power_w: reference_power,
        relative_saving,
    })
}
