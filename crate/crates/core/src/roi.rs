//! Cost, benefit and return on investment of a trained classifier.
//!
//! ```text
//! benefit = tp * b_reward - fn * b_penalty
//! cost    = volume * (c_fixed + c_l) / 60 * h * c_resource
//! roi     = (benefit - cost) / cost
//! ```
//!
//! `c_fixed = c_dg + c_pp + c_e`. Times are minutes per sample, so dividing
//! by 60 turns the per-sample effort into hours. `volume` depends on the
//! [`CostBasis`]: the training fraction in percent points (20 for 20%) or the
//! number of procured samples (`fraction * n`).
//!
//! False positives carry no penalty in this model.
//!
//! Everything here is arithmetic over stored confusion counts; nothing
//! retrains. Values are kept at full precision and rounded only for display
//! with [`round_half_up`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ConfusionMatrix;
use crate::models::Family;
use crate::sweep::{SweepCell, SweepResult};

pub use crate::util::round_half_up;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CostBasis {
    #[default]
    PercentPoints,
    Samples,
}

/// Cost and benefit parameters. Missing fields deserialize to the
/// [`CostParams::reference`] values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostParams {
    /// Data gathering, minutes per sample.
    pub c_dg: f64,
    /// Pre-processing, minutes per sample.
    pub c_pp: f64,
    /// Evaluation, minutes per sample.
    pub c_e: f64,
    /// Labeling, minutes per sample.
    pub c_l: f64,
    /// Dollars per person-hour.
    pub c_resource: f64,
    /// Dollars per true positive.
    pub b_reward: f64,
    /// Dollars per false negative.
    pub b_penalty: f64,
    /// Head count.
    pub h: f64,
    /// Dataset size, used by the `SAMPLES` basis.
    pub n: f64,
    pub cost_basis: CostBasis,
}

impl Default for CostParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Names accepted by [`CostParams::get`], [`CostParams::with`] and [`sensitivity`].
pub const PARAMETER_NAMES: [&str; 9] = [
    "c_dg",
    "c_pp",
    "c_e",
    "c_l",
    "c_resource",
    "b_reward",
    "b_penalty",
    "h",
    "n",
];

impl CostParams {
    /// One minute of fixed effort plus half a minute of labeling per sample,
    /// $400 per hour, $500 per hit and per miss, one person, 4105 samples.
    /// The fixed minute is booked entirely under data gathering.
    pub fn reference() -> Self {
        Self {
            c_dg: 1.0,
            c_pp: 0.0,
            c_e: 0.0,
            c_l: 0.5,
            c_resource: 400.0,
            b_reward: 500.0,
            b_penalty: 500.0,
            h: 1.0,
            n: 4105.0,
            cost_basis: CostBasis::PercentPoints,
        }
    }

    pub fn c_fixed(&self) -> f64 {
        self.c_dg + self.c_pp + self.c_e
    }

    pub fn validate(&self) -> Result<(), RoiError> {
        for name in PARAMETER_NAMES {
            let v = self.get(name).expect("known name");
            if !v.is_finite() {
                return Err(RoiError::InvalidParams(format!("{name} must be finite")));
            }
        }
        for (name, v) in [
            ("c_dg", self.c_dg),
            ("c_pp", self.c_pp),
            ("c_e", self.c_e),
            ("c_l", self.c_l),
            ("c_resource", self.c_resource),
            ("b_reward", self.b_reward),
            ("b_penalty", self.b_penalty),
        ] {
            if v < 0.0 {
                return Err(RoiError::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.h < 1.0 {
            return Err(RoiError::InvalidParams(format!("h must be >= 1, got {}", self.h)));
        }
        if self.n < 1.0 {
            return Err(RoiError::InvalidParams(format!("n must be >= 1, got {}", self.n)));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<f64, RoiError> {
        Ok(match name {
            "c_dg" => self.c_dg,
            "c_pp" => self.c_pp,
            "c_e" => self.c_e,
            "c_l" => self.c_l,
            "c_resource" => self.c_resource,
            "b_reward" => self.b_reward,
            "b_penalty" => self.b_penalty,
            "h" => self.h,
            "n" => self.n,
            other => return Err(RoiError::UnknownParameter(other.to_string())),
        })
    }

    /// A copy with one named parameter replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<Self, RoiError> {
        let mut p = self.clone();
        let slot = match name {
            "c_dg" => &mut p.c_dg,
            "c_pp" => &mut p.c_pp,
            "c_e" => &mut p.c_e,
            "c_l" => &mut p.c_l,
            "c_resource" => &mut p.c_resource,
            "b_reward" => &mut p.b_reward,
            "b_penalty" => &mut p.b_penalty,
            "h" => &mut p.h,
            "n" => &mut p.n,
            other => return Err(RoiError::UnknownParameter(other.to_string())),
        };
        *slot = value;
        Ok(p)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RoiError {
    #[error("cost is zero, so ROI is undefined")]
    ZeroCost,
    #[error("unknown cost parameter `{0}`")]
    UnknownParameter(String),
    #[error("sensitivity needs at least one value")]
    EmptyValues,
    #[error("invalid cost parameters: {0}")]
    InvalidParams(String),
    #[error("fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("no evaluable cell for {family} at fraction {fraction}")]
    CellNotEvaluable { family: Family, fraction: f64 },
}

impl RoiError {
    pub fn code(&self) -> &'static str {
        match self {
            RoiError::ZeroCost => "ZERO_COST",
            RoiError::UnknownParameter(_) => "UNKNOWN_PARAMETER",
            RoiError::EmptyValues => "EMPTY_VALUES",
            RoiError::InvalidParams(_) => "INVALID_PARAMS",
            RoiError::InvalidFraction(_) => "INVALID_FRACTION",
            RoiError::CellNotEvaluable { .. } => "CELL_NOT_EVALUABLE",
        }
    }
}

/// Dollar cost of procuring `fraction` of the data.
pub fn compute_cost(fraction: f64, p: &CostParams) -> Result<f64, RoiError> {
    p.validate()?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RoiError::InvalidFraction(fraction));
    }
    let volume = match p.cost_basis {
        CostBasis::PercentPoints => fraction * 100.0,
        CostBasis::Samples => fraction * p.n,
    };
    let cost = volume * (p.c_fixed() + p.c_l) / 60.0 * p.h * p.c_resource;
    if cost == 0.0 {
        return Err(RoiError::ZeroCost);
    }
    Ok(cost)
}

pub fn compute_benefit(cm: &ConfusionMatrix, p: &CostParams) -> f64 {
    cm.tp as f64 * p.b_reward - cm.fn_ as f64 * p.b_penalty
}

pub fn compute_roi(benefit: f64, cost: f64) -> Result<f64, RoiError> {
    if !(cost > 0.0) {
        return Err(RoiError::ZeroCost);
    }
    Ok((benefit - cost) / cost)
}

/// The benefit that would produce `roi` at `cost`; inverts [`compute_roi`].
pub fn implied_benefit(roi: f64, cost: f64) -> f64 {
    (roi + 1.0) * cost
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiPoint {
    pub fraction: f64,
    pub cost: f64,
    pub benefit: f64,
    pub roi: f64,
    /// `cost / (h * c_resource)`.
    pub person_hours: f64,
}

pub fn roi_point(cell: &SweepCell, p: &CostParams) -> Result<RoiPoint, RoiError> {
    let cm = cell.confusion.as_ref().ok_or(RoiError::CellNotEvaluable {
        family: cell.family,
        fraction: cell.fraction,
    })?;
    let cost = compute_cost(cell.fraction, p)?;
    let benefit = compute_benefit(cm, p);
    Ok(RoiPoint {
        fraction: cell.fraction,
        cost,
        benefit,
        roi: compute_roi(benefit, cost)?,
        person_hours: cost / (p.h * p.c_resource),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiCurve {
    pub family: Family,
    /// Ascending by fraction; failed cells are left out.
    pub points: Vec<RoiPoint>,
    pub break_even: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiGrid {
    pub params: CostParams,
    pub curves: Vec<RoiCurve>,
}

/// One ROI point per evaluable cell, grouped by family in sweep order.
pub fn roi_curve(result: &SweepResult, p: &CostParams) -> Result<RoiGrid, RoiError> {
    p.validate()?;
    let mut curves = Vec::new();
    for family in result.families() {
        let mut points = result
            .cells
            .iter()
            .filter(|c| c.family == family && c.is_ok())
            .map(|c| roi_point(c, p))
            .collect::<Result<Vec<_>, _>>()?;
        points.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
        curves.push(RoiCurve {
            family,
            break_even: break_even(&points),
            points,
        });
    }
    Ok(RoiGrid {
        params: p.clone(),
        curves,
    })
}

/// Smallest fraction whose ROI is non-negative, given points in ascending
/// fraction order.
pub fn break_even(points: &[RoiPoint]) -> Option<f64> {
    points.iter().find(|pt| pt.roi >= 0.0).map(|pt| pt.fraction)
}

impl RoiGrid {
    pub fn curve(&self, family: Family) -> Option<&RoiCurve> {
        self.curves.iter().find(|c| c.family == family)
    }

    pub fn point(&self, family: Family, fraction: f64) -> Option<&RoiPoint> {
        self.curve(family)?.points.iter().find(|p| p.fraction == fraction)
    }

    /// `family,fraction,cost,benefit,roi,person_hours,break_even`, where
    /// `break_even` marks the break-even row of each family.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "family",
            "fraction",
            "cost",
            "benefit",
            "roi",
            "person_hours",
            "break_even",
        ])
        .expect("in-memory write");
        for c in &self.curves {
            for p in &c.points {
                w.write_record([
                    c.family.to_string(),
                    p.fraction.to_string(),
                    p.cost.to_string(),
                    p.benefit.to_string(),
                    p.roi.to_string(),
                    p.person_hours.to_string(),
                    (c.break_even == Some(p.fraction)).to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub value: f64,
    pub roi: f64,
    pub cost: f64,
    pub benefit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub param: String,
    pub family: Family,
    pub fraction: f64,
    pub baseline_value: f64,
    pub baseline: RoiPoint,
    /// Ascending by value; always contains the baseline value.
    pub grid: Vec<SensitivityRow>,
}

/// Recomputes the ROI of one cell for each value of one parameter, all
/// other parameters held at `p`.
pub fn sensitivity(
    cell: &SweepCell,
    p: &CostParams,
    param: &str,
    values: &[f64],
) -> Result<SensitivityReport, RoiError> {
    let baseline_value = p.get(param)?;
    if values.is_empty() {
        return Err(RoiError::EmptyValues);
    }
    let baseline = roi_point(cell, p)?;
    let mut all: Vec<f64> = values.to_vec();
    if !all.contains(&baseline_value) {
        all.push(baseline_value);
    }
    all.sort_by(f64::total_cmp);
    all.dedup();
    let grid = all
        .into_iter()
        .map(|value| {
            let pt = roi_point(cell, &p.with(param, value)?)?;
            Ok(SensitivityRow {
                value,
                roi: pt.roi,
                cost: pt.cost,
                benefit: pt.benefit,
            })
        })
        .collect::<Result<Vec<_>, RoiError>>()?;
    Ok(SensitivityReport {
        param: param.to_string(),
        family: cell.family,
        fraction: cell.fraction,
        baseline_value,
        baseline,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(fraction: f64, tp: u64, fn_: u64) -> SweepCell {
        SweepCell {
            family: Family::LogisticRegression,
            fraction,
            n_train_used: 1,
            confusion: Some(ConfusionMatrix::new(tp, 0, 0, fn_)),
            metrics: None,
            train_seconds: 0.0,
            error: None,
        }
    }

    #[test]
    fn reference_costs() {
        let p = CostParams::reference();
        assert_eq!(compute_cost(0.2, &p).unwrap(), 200.0);
        assert_eq!(compute_cost(0.5, &p).unwrap(), 500.0);
        assert_eq!(compute_cost(0.8, &p).unwrap(), 800.0);
        let samples = CostParams {
            cost_basis: CostBasis::Samples,
            n: 4105.0,
            ..p
        };
        // 821 procured samples at 1.5 minutes each, $400 per hour.
        assert!((compute_cost(0.2, &samples).unwrap() - 8210.0).abs() < 1e-9);
    }

    #[test]
    fn worked_roi_values() {
        let p = CostParams::reference();
        let benefit = compute_benefit(&ConfusionMatrix::new(625, 0, 0, 0), &p);
        assert_eq!(benefit, 312_500.0);
        let roi = compute_roi(benefit, 800.0).unwrap();
        assert_eq!(roi, 389.625);
        assert_eq!(round_half_up(roi, 2), 389.63);

        assert_eq!(compute_benefit(&ConfusionMatrix::new(40, 3, 9, 40), &p), 0.0);
        assert_eq!(compute_roi(0.0, 200.0).unwrap(), -1.0);
        assert_eq!(compute_roi(200.0, 200.0).unwrap(), 0.0);

        let dt = compute_benefit(&ConfusionMatrix::new(0, 0, 0, 375), &p);
        assert_eq!(dt, -187_500.0);
        assert_eq!(compute_roi(dt, 200.0).unwrap(), -938.5);
    }

    #[test]
    fn zero_cost_is_an_error() {
        let p = CostParams {
            c_resource: 0.0,
            ..CostParams::reference()
        };
        assert_eq!(compute_cost(0.5, &p), Err(RoiError::ZeroCost));
        assert_eq!(compute_roi(1.0, 0.0), Err(RoiError::ZeroCost));
        assert!(compute_cost(0.0, &CostParams::reference()).is_err());
        assert!(compute_cost(
            0.5,
            &CostParams {
                h: 0.0,
                ..CostParams::reference()
            }
        )
        .is_err());
    }

    #[test]
    fn break_even_rules() {
        let pts = |rois: &[f64]| -> Vec<RoiPoint> {
            rois.iter()
                .enumerate()
                .map(|(i, &roi)| RoiPoint {
                    fraction: [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9][i],
                    cost: 1.0,
                    benefit: 0.0,
                    roi,
                    person_hours: 0.0,
                })
                .collect()
        };
        assert_eq!(
            break_even(&pts(&[-1.0, -1.0, -1.0, 124.0, 103.17, 88.29, 155.25, 137.89])),
            Some(0.5)
        );
        assert_eq!(break_even(&pts(&[-1.0, -3.0])), None);
        assert_eq!(break_even(&pts(&[2.0, 3.0])), Some(0.2));
        assert_eq!(break_even(&pts(&[-1.0, 0.0])), Some(0.3));
    }

    #[test]
    fn sensitivity_on_worked_cell() {
        let c = cell(0.8, 625, 0);
        let p = CostParams::reference();
        let r = sensitivity(&c, &p, "c_resource", &[400.0, 440.0]).unwrap();
        assert_eq!(r.grid.len(), 2);
        assert_eq!(round_half_up(r.grid[0].roi, 2), 389.63);
        assert!((r.grid[1].roi - 354.12).abs() <= 0.02);
        assert!((r.grid[1].roi - ((389.625 + 1.0) / 1.1 - 1.0)).abs() < 1e-9);

        let r = sensitivity(&c, &p, "c_l", &[0.25, 1.0]).unwrap();
        let values: Vec<f64> = r.grid.iter().map(|g| g.value).collect();
        assert_eq!(values, vec![0.25, 0.5, 1.0]);
        assert!(r.grid.windows(2).all(|w| w[0].roi > w[1].roi));

        let r = sensitivity(&c, &p, "b_reward", &[0.0]).unwrap();
        assert_eq!(r.grid[0].roi, -1.0);

        assert_eq!(
            sensitivity(&c, &p, "c_magic", &[1.0]).unwrap_err(),
            RoiError::UnknownParameter("c_magic".into())
        );
        assert_eq!(sensitivity(&c, &p, "c_l", &[]).unwrap_err(), RoiError::EmptyValues);
    }

    #[test]
    fn params_deserialize_with_defaults() {
        let p: CostParams = serde_json::from_str(r#"{"c_resource": 440, "cost_basis": "SAMPLES"}"#).unwrap();
        assert_eq!(p.c_resource, 440.0);
        assert_eq!(p.c_l, 0.5);
        assert_eq!(p.cost_basis, CostBasis::Samples);
        assert!(serde_json::from_str::<CostParams>(r#"{"c_resourse": 1}"#).is_err());
    }

    proptest! {
        #[test]
        fn resource_scaling_law(tp in 0u64..2000, fn_ in 0u64..2000, k in 0.05f64..20.0, frac in 0.01f64..1.0) {
            let p = CostParams::reference();
            let c = cell(frac, tp, fn_);
            let base = roi_point(&c, &p).unwrap().roi;
            let scaled = roi_point(&c, &p.with("c_resource", 400.0 * k).unwrap()).unwrap().roi;
            let law = (base + 1.0) / k - 1.0;
            prop_assert!((scaled - law).abs() <= 1e-12 * law.abs().max(1.0));
        }

        #[test]
        fn roi_monotone_in_costs(tp in 1u64..2000, extra in 0.01f64..5.0, which in 0usize..6) {
            let p = CostParams::reference();
            let c = cell(0.5, tp, 0);
            let name = ["c_dg", "c_pp", "c_e", "c_l", "c_resource", "h"][which];
            let base = roi_point(&c, &p).unwrap().roi;
            let bumped = p.with(name, p.get(name).unwrap() + extra).unwrap();
            prop_assert!(roi_point(&c, &bumped).unwrap().roi < base);
            // Zero benefit pins ROI at -1 no matter the cost.
            let flat = cell(0.5, 7, 7);
            prop_assert_eq!(roi_point(&flat, &bumped).unwrap().roi, -1.0);
        }

        #[test]
        fn roi_monotone_in_counts(tp in 0u64..2000, fn_ in 0u64..2000) {
            let p = CostParams::reference();
            let r = |tp, fn_| roi_point(&cell(0.3, tp, fn_), &p).unwrap().roi;
            prop_assert!(r(tp + 1, fn_) > r(tp, fn_));
            prop_assert!(r(tp, fn_ + 1) < r(tp, fn_));
            prop_assert_eq!(r(tp, fn_) == -1.0, tp == fn_);
        }
    }
}
