//! Field sweeps over XY chain ground states, per-pair measures with their
//! minimizing angles, CSV output, and reference values at the factorizing
//! point.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::deficit::{deficit, quadratic_deficit_closed, renyi_deficit};
use crate::discord::{discord, quadratic_closed_form};
use crate::entropy::{entanglement_of_formation, EntropyFunctional};
use crate::error::{QcorrError, Result};
use crate::exec::Execution;
use crate::search::SearchConfig;
use crate::spinchain::{
    concurrence_side_limits, factorizing_field, ground_state, reduced_pair, theta_states_unchecked, GroundState,
    SpinChainSpec,
};
use crate::statekit::{BipartiteLayout, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTemplate {
    pub n: usize,
    #[serde(default = "unit")]
    pub jx: f64,
    pub chi: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "h_z")]
    Hz,
    /// Field angle from the z axis, in degrees.
    #[serde(rename = "gamma")]
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.to - self.from) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.to } else { self.from + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedField {
    pub h_magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    D,
    I1,
    I2,
    IR2,
    #[serde(rename = "concurrence")]
    Concurrence,
    #[serde(rename = "eof")]
    Eof,
    S2cond,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::D => "D",
            Measure::I1 => "I1",
            Measure::I2 => "I2",
            Measure::IR2 => "IR2",
            Measure::Concurrence => "concurrence",
            Measure::Eof => "eof",
            Measure::S2cond => "S2cond",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|_| QcorrError::InvalidConfig {
            reason: format!("unknown measure '{name}' (expected D, I1, I2, IR2, concurrence, eof, S2cond)"),
        })
    }

    /// Whether the measure comes with a minimizing direction.
    pub fn has_angles(&self) -> bool {
        !matches!(self, Measure::Concurrence | Measure::Eof)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub chain: ChainTemplate,
    pub sweep: SweepAxis,
    #[serde(default)]
    pub fixed: Option<FixedField>,
    pub separations: Vec<usize>,
    pub measures: Vec<Measure>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| QcorrError::InvalidConfig { reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// N = 8, chi = 0.5, h_z in [0, 1.25 Jx], 200 points, L = 1..4.
    pub fn transverse_default() -> Self {
        Self {
            chain: ChainTemplate { n: 8, jx: 1.0, chi: 0.5 },
            sweep: SweepAxis {
                variable: SweepVariable::Hz,
                from: 0.0,
                to: 1.25,
                points: 200,
            },
            fixed: None,
            separations: vec![1, 2, 3, 4],
            measures: vec![Measure::D, Measure::I1, Measure::I2, Measure::S2cond, Measure::Concurrence],
            search: SearchConfig::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(QcorrError::InvalidConfig { reason });
        let n = self.chain.n;
        if !(2..=crate::spinchain::MAX_SITES).contains(&n) {
            return bad(format!("chain.n must be in 2..={}", crate::spinchain::MAX_SITES));
        }
        if !(self.chain.jx > 0.0) || !(self.chain.chi > 0.0 && self.chain.chi <= 1.0) {
            return bad("need chain.jx > 0 and chain.chi in (0, 1]".into());
        }
        if self.sweep.points < 2 {
            return bad("sweep.points must be >= 2".into());
        }
        if !(self.sweep.from < self.sweep.to) {
            return bad("sweep.from must be < sweep.to".into());
        }
        if self.separations.is_empty() || self.separations.iter().any(|&l| l == 0 || l > n / 2) {
            return bad(format!("separations must lie in 1..={}", n / 2));
        }
        if self.measures.is_empty() {
            return bad("measures must not be empty".into());
        }
        match (self.sweep.variable, &self.fixed) {
            (SweepVariable::Gamma, None) => return bad("gamma sweeps need fixed.h_magnitude".into()),
            (SweepVariable::Gamma, Some(f)) if !(f.h_magnitude >= 0.0) => {
                return bad("fixed.h_magnitude must be >= 0".into())
            }
            (SweepVariable::Gamma, _) if self.sweep.from < 0.0 || self.sweep.to > 180.0 => {
                return bad("gamma range must lie in [0, 180] degrees".into())
            }
            (SweepVariable::Hz, Some(_)) => return bad("fixed is only used by gamma sweeps".into()),
            _ => {}
        }
        self.search.validate()
    }

    fn chain_at(&self, x: f64) -> Result<SpinChainSpec> {
        let c = &self.chain;
        match self.sweep.variable {
            SweepVariable::Hz => SpinChainSpec::transverse(c.n, c.jx, c.chi, x),
            SweepVariable::Gamma => {
                let h = self.fixed.as_ref().map_or(0.0, |f| f.h_magnitude);
                SpinChainSpec::tilted(c.n, c.jx, c.chi, h, x.to_radians())
            }
        }
    }

    fn field_label(&self) -> &'static str {
        match self.sweep.variable {
            SweepVariable::Hz => "h_z",
            SweepVariable::Gamma => "gamma_deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureValue {
    pub value: f64,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
}

impl MeasureValue {
    fn plain(value: f64) -> Self {
        Self {
            value,
            theta: None,
            phi: None,
        }
    }

    fn angled(value: f64, (theta, phi): (f64, f64)) -> Self {
        Self {
            value,
            theta: Some(theta),
            phi: Some(phi),
        }
    }
}

/// Evaluate one measure on a qudit-qubit state.
pub fn evaluate(rho: &DensityMatrix, layout: BipartiteLayout, measure: Measure, cfg: &SearchConfig) -> Result<MeasureValue> {
    Ok(match measure {
        Measure::D => {
            let r = discord(rho, layout, cfg)?;
            MeasureValue::angled(r.value, (r.theta, r.phi))
        }
        Measure::I1 => {
            let r = deficit(rho, layout, EntropyFunctional::VonNeumann, cfg)?;
            MeasureValue::angled(r.value, (r.theta, r.phi))
        }
        Measure::I2 => {
            let r = quadratic_deficit_closed(rho, layout)?;
            MeasureValue::angled(r.value, (r.theta, r.phi))
        }
        Measure::IR2 => {
            let r = renyi_deficit(rho, layout, 2.0, cfg)?;
            MeasureValue::angled(r.value, (r.theta, r.phi))
        }
        Measure::S2cond => {
            let r = quadratic_closed_form(rho, layout)?;
            MeasureValue::angled(r.value, (r.theta, r.phi))
        }
        Measure::Concurrence | Measure::Eof => {
            if layout != BipartiteLayout::two_qubit() {
                return Err(QcorrError::LayoutMismatch {
                    da: layout.da,
                    db: layout.db,
                    dim: rho.dim(),
                });
            }
            let e = entanglement_of_formation(rho)?;
            MeasureValue::plain(if measure == Measure::Eof { e.eof } else { e.concurrence })
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub field: f64,
    pub parity: String,
    pub degenerate: bool,
    /// Empty for ordinary points, "+" or "-" for side limits at a crossing.
    pub branch: String,
    /// Indexed `[separation][measure]` in config order.
    pub values: Vec<Vec<MeasureValue>>,
}

fn pair_measures(gs: &GroundState, cfg: &SweepConfig, search: &SearchConfig) -> Result<Vec<Vec<MeasureValue>>> {
    cfg.separations
        .iter()
        .map(|&l| {
            let rho = reduced_pair(gs, 0, l)?;
            cfg.measures
                .iter()
                .map(|&m| evaluate(&rho, BipartiteLayout::two_qubit(), m, search))
                .collect()
        })
        .collect()
}

fn sweep_point(cfg: &SweepConfig, x: f64) -> Result<Vec<SweepRow>> {
    // Inner searches run sequentially; sweep points carry the parallelism.
    let search = cfg.search.with_execution(Execution::Sequential);
    let gs = ground_state(&cfg.chain_at(x)?)?;
    let row = |state: &GroundState, branch: &str| -> Result<SweepRow> {
        Ok(SweepRow {
            field: x,
            parity: state.parity.label().to_string(),
            degenerate: gs.degenerate,
            branch: branch.to_string(),
            values: pair_measures(state, cfg, &search)?,
        })
    };
    match &gs.side_limits {
        Some(limits) => Ok(vec![row(&limits.0, "+")?, row(&limits.1, "-")?]),
        None => Ok(vec![row(&gs, "")?]),
    }
}

/// Evaluate every sweep point; rows come back in sweep order.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let xs = cfg.sweep.values();
    let results = exec.map(&xs, |&x| {
        sweep_point(cfg, x).map_err(|e| match e {
            QcorrError::InvalidConfig { .. } => e,
            other => QcorrError::Numerical {
                reason: format!("{} = {x}: {other}", cfg.field_label()),
            },
        })
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn csv_header(cfg: &SweepConfig) -> String {
    let mut cols = vec![cfg.field_label().to_string(), "parity".into(), "degenerate".into(), "branch".into()];
    for l in &cfg.separations {
        for m in &cfg.measures {
            let base = format!("L{l}_{}", m.name());
            if m.has_angles() {
                cols.push(format!("{base}_theta"));
                cols.push(format!("{base}_phi"));
                cols.insert(cols.len() - 2, base);
            } else {
                cols.push(base);
            }
        }
    }
    cols.join(",")
}

pub fn to_csv(cfg: &SweepConfig, rows: &[SweepRow]) -> String {
    let mut out = csv_header(cfg);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{},{},{}", num(row.field), row.parity, row.degenerate, row.branch);
        for per_l in &row.values {
            for (m, v) in cfg.measures.iter().zip(per_l) {
                let _ = write!(out, ",{}", num(v.value));
                if m.has_angles() {
                    let _ = write!(out, ",{},{}", num(v.theta.unwrap_or(f64::NAN)), num(v.phi.unwrap_or(f64::NAN)));
                }
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitValues {
    pub discord: f64,
    pub i1: f64,
    pub i2: f64,
    pub concurrence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitsReport {
    pub chi: f64,
    pub n: usize,
    pub theta: f64,
    pub h_zs: f64,
    /// `cos(theta)^n`, the overlap between the two factorized states.
    pub overlap: f64,
    /// Overlap-neglected mixture.
    pub mixture: LimitValues,
    pub plus: LimitValues,
    /// Absent when the two factorized states coincide (`chi = 1`).
    pub minus: Option<LimitValues>,
    pub c_plus_formula: f64,
    pub c_minus_formula: Option<f64>,
}

fn limit_values(rho: &DensityMatrix, search: &SearchConfig) -> Result<LimitValues> {
    let layout = BipartiteLayout::two_qubit();
    Ok(LimitValues {
        discord: discord(rho, layout, search)?.value,
        i1: deficit(rho, layout, EntropyFunctional::VonNeumann, search)?.value,
        i2: quadratic_deficit_closed(rho, layout)?.value,
        concurrence: entanglement_of_formation(rho)?.concurrence,
    })
}

/// Measures of the two-spin states at the transverse factorizing field.
pub fn report_limits(chi: f64, n: usize, search: &SearchConfig) -> Result<LimitsReport> {
    if n < 2 {
        return Err(QcorrError::InvalidConfig { reason: "need n >= 2".into() });
    }
    let f = factorizing_field(chi, 1.0, 0.0)?;
    let states = theta_states_unchecked(f.theta, Some(n));
    let (plus, minus) = states.side_limits.expect("side limits requested");
    let (cp, cm) = concurrence_side_limits(chi, n);
    Ok(LimitsReport {
        chi,
        n,
        theta: f.theta,
        h_zs: f.h_zs,
        overlap: f.theta.cos().powi(n as i32),
        mixture: limit_values(&states.mixture, search)?,
        plus: limit_values(&plus, search)?,
        minus: minus.as_ref().map(|m| limit_values(m, search)).transpose()?,
        c_plus_formula: cp,
        c_minus_formula: cm.is_finite().then_some(cm),
    })
}
