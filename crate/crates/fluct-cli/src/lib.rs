//! Command dispatch for the `fluct` binary.
//!
//! The binary parses flags (clap), builds a [`RunConfig`], and calls
//! [`run`]. Outputs are produced as a single text artifact (CSV or JSON)
//! written to `--out` or standard output. Failures carry the process exit
//! code: 2 for validation problems (with a machine-readable JSON object on
//! standard error), 3 for analytic-structure errors, 64 for usage errors
//! (handled by the argument parser before [`run`] is reached).

// Validation guards are written `!(lo < hi)` so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::json;

use fluct::american::{
    fourier_check, numeric_right_derivative, optimal_threshold, value_function, PutProblem,
};
use fluct::checks::run_acceptance;
use fluct::models::{classify_regularity, LevyModel};
use fluct::montecarlo::{sample_inf_and_endpoint_sharded, Moments, SimConfig};
use fluct::passage::{fluctuation_identity_check, pecherskii_rogozin_check};
use fluct::wiener_hopf::{
    minus_factor, partial_fractions, phase_type_roots, wh_factorization_sides,
};
use fluct::FluctError;

/// Inclusive linear grid `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got '{text}'"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("bad lo: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("bad hi: {e}"))?;
        let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
        if n < 2 {
            return Err("grid needs n >= 2".into());
        }
        if !(lo < hi) {
            return Err("grid needs lo < hi".into());
        }
        Ok(GridSpec { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Price,
    Threshold,
    Diagnose,
    Factors,
    IdentityCheck,
    Simulate,
    Verify,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub model_path: Option<PathBuf>,
    pub strike: Option<f64>,
    pub rate: Option<f64>,
    pub grid: Option<GridSpec>,
    pub sim: SimConfig,
    pub out: Option<PathBuf>,
}

/// A run failure with its process exit code and the machine-readable error
/// object emitted on standard error.
#[derive(Debug, Clone)]
pub struct Failure {
    pub exit_code: i32,
    pub kind: &'static str,
    pub field: Option<String>,
    pub message: String,
}

impl Failure {
    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind,
            "field": self.field,
            "message": self.message,
        })
        .to_string()
    }

    fn validation(field: Option<String>, message: impl Into<String>) -> Self {
        Failure {
            exit_code: 2,
            kind: "validation",
            field,
            message: message.into(),
        }
    }
}

impl From<FluctError> for Failure {
    fn from(e: FluctError) -> Self {
        let exit_code = if e.is_structural() { 3 } else { 2 };
        let kind = if e.is_structural() {
            "structural"
        } else {
            "validation"
        };
        let field = match &e {
            FluctError::Validation { field, .. } => Some(field.clone()),
            _ => None,
        };
        Failure {
            exit_code,
            kind,
            field,
            message: e.to_string(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub text: String,
    pub exit_code: i32,
}

fn load_model(cfg: &RunConfig) -> Result<LevyModel, Failure> {
    let path = cfg
        .model_path
        .as_ref()
        .ok_or_else(|| Failure::validation(Some("model".into()), "missing --model <path>"))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::validation(Some("model".into()), format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(LevyModel::from_json_str(&text)?)
}

fn need_rate(cfg: &RunConfig) -> Result<f64, Failure> {
    let r = cfg
        .rate
        .ok_or_else(|| Failure::validation(Some("rate".into()), "missing --rate"))?;
    if r < 0.0 {
        return Err(Failure::validation(
            Some("rate".into()),
            "rate must be >= 0",
        ));
    }
    Ok(r)
}

fn need_strike(cfg: &RunConfig) -> Result<f64, Failure> {
    cfg.strike
        .ok_or_else(|| Failure::validation(Some("strike".into()), "missing --strike"))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    cfg.sim.validate()?;
    match cfg.command {
        CommandKind::Price => cmd_price(cfg),
        CommandKind::Threshold => cmd_threshold(cfg),
        CommandKind::Diagnose => cmd_diagnose(cfg),
        CommandKind::Factors => cmd_factors(cfg),
        CommandKind::IdentityCheck => cmd_identity_check(cfg),
        CommandKind::Simulate => cmd_simulate(cfg),
        CommandKind::Verify => cmd_verify(cfg),
    }
}

fn cmd_price(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let strike = need_strike(cfg)?;
    let rate = need_rate(cfg)?;
    let grid = cfg
        .grid
        .ok_or_else(|| Failure::validation(Some("grid".into()), "missing --grid lo:hi:n"))?;
    let p = PutProblem::new(strike, rate, model)?;
    let s = optimal_threshold(&p)?;
    let mut out = String::from("x,value,payoff\n");
    for x in grid.points() {
        let v = value_function(&s, &p, x);
        let payoff = (strike - x.exp()).max(0.0);
        let _ = writeln!(out, "{},{},{}", fmt(x), fmt(v), fmt(payoff));
    }
    Ok(RunOutput {
        text: out,
        exit_code: 0,
    })
}

fn threshold_json(p: &PutProblem) -> Result<serde_json::Value, Failure> {
    let s = optimal_threshold(p)?;
    Ok(json!({
        "x_star": s.x_star,
        "discount_factor": s.discount_factor,
        "pasting": s.pasting,
        "atom0": s.atom0,
        "right_derivative": s.right_derivative,
    }))
}

fn cmd_threshold(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let p = PutProblem::new(need_strike(cfg)?, need_rate(cfg)?, model)?;
    let v = threshold_json(&p)?;
    Ok(RunOutput {
        text: format!("{}\n", serde_json::to_string_pretty(&v).expect("json")),
        exit_code: 0,
    })
}

fn cmd_diagnose(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let rate = need_rate(cfg)?;
    let report = classify_regularity(&model);
    let atom0 = minus_factor(phase_type_roots(&model, rate)?).atom_at_zero();
    let mut doc = json!({
        "regularity": report,
        "rate": rate,
        "atom0": atom0,
    });
    if let Some(strike) = cfg.strike {
        let p = PutProblem::new(strike, rate, model)?;
        let s = optimal_threshold(&p)?;
        doc["x_star"] = json!(s.x_star);
        doc["pasting"] = json!(s.pasting);
        doc["right_derivative"] = json!(s.right_derivative);
        doc["right_derivative_numeric"] = json!(numeric_right_derivative(&s, &p, 1e-4));
        doc["fourier_residual_lambda_1"] = json!(fourier_check(&s, &p, 1.0)?);
    }
    Ok(RunOutput {
        text: format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")),
        exit_code: 0,
    })
}

fn cmd_factors(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let rate = need_rate(cfg)?;
    if rate == 0.0 && model.mean() <= 0.0 {
        return Err(Failure::from(FluctError::UnsupportedLimit {
            detail: "factors at rate 0 need E[X_1] > 0".into(),
        }));
    }
    let rs = phase_type_roots(&model, rate)?;
    let mut out = rs.to_csv();
    out.push('\n');
    let mix = partial_fractions(&minus_factor(rs))?;
    out.push_str(&mix.to_csv());
    Ok(RunOutput {
        text: out,
        exit_code: 0,
    })
}

fn cmd_identity_check(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let alpha = need_rate(cfg)?;
    if alpha <= 0.0 {
        return Err(Failure::validation(
            Some("rate".into()),
            "identity checks need a positive rate",
        ));
    }
    let grid = cfg.grid.unwrap_or(GridSpec {
        lo: 0.5,
        hi: 2.0,
        n: 4,
    });
    let sn = model.spectrally_negative() && !model.is_negative_subordinator();
    let mut out = String::from("identity,alpha,beta,x,lhs,rhs,residual,z_score\n");
    for x in grid.points() {
        for beta in [0.0, 0.5] {
            // Factorization identity at theta = x (beta plays no role here
            // but keeps the row schema uniform).
            let (lhs, rhs) = wh_factorization_sides(&model, alpha, x)?;
            let _ = writeln!(
                out,
                "wiener_hopf,{},{},{},{},{},{},",
                fmt(alpha),
                fmt(beta),
                fmt(x),
                fmt(lhs.norm()),
                fmt(rhs.norm()),
                fmt((lhs - rhs).norm())
            );
            if sn && x > 0.0 {
                let phi = fluct::wiener_hopf::phi_of_alpha(&model, alpha)?;
                let lhs = 1.0 / (x + phi);
                let resid = pecherskii_rogozin_check(&model, alpha, beta, x)?;
                let _ = writeln!(
                    out,
                    "pecherskii_rogozin,{},{},{},{},{},{},",
                    fmt(alpha),
                    fmt(beta),
                    fmt(x),
                    fmt(lhs),
                    fmt(lhs + resid),
                    fmt(resid)
                );
            }
            let check = fluctuation_identity_check(&model, alpha, beta, x, &cfg.sim)?;
            let _ = writeln!(
                out,
                "fluctuation,{},{},{},{},{},{},{}",
                fmt(alpha),
                fmt(beta),
                fmt(x),
                fmt(check.lhs.mean),
                fmt(check.rhs.mean),
                fmt((check.lhs.mean - check.rhs.mean).abs()),
                fmt(check.z_score)
            );
        }
    }
    Ok(RunOutput {
        text: out,
        exit_code: 0,
    })
}

fn cmd_simulate(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let model = load_model(cfg)?;
    let rate = need_rate(cfg)?;
    if rate <= 0.0 {
        return Err(Failure::validation(
            Some("rate".into()),
            "simulate needs a positive rate",
        ));
    }
    let shards = sample_inf_and_endpoint_sharded(&model, rate, &cfg.sim)?;
    let mut out = String::from("stat,shard,n,mean,std_error\n");
    let mut totals = [Moments::default(), Moments::default(), Moments::default()];
    for (i, shard) in shards.iter().enumerate() {
        let mut local = [Moments::default(), Moments::default(), Moments::default()];
        for &(inf, end) in shard {
            local[0].push(-inf);
            local[1].push(if inf == 0.0 { 1.0 } else { 0.0 });
            local[2].push(end);
        }
        for (t, l) in totals.iter_mut().zip(local.iter()) {
            t.merge(l);
        }
        for (name, m) in ["neg_inf_mean", "atom_freq", "endpoint_mean"]
            .iter()
            .zip(local.iter())
        {
            let e = m.estimate();
            let _ = writeln!(out, "{name},{i},{},{},{}", e.n, fmt(e.mean), fmt(e.std_error));
        }
    }
    for (name, m) in ["neg_inf_mean", "atom_freq", "endpoint_mean"]
        .iter()
        .zip(totals.iter())
    {
        let e = m.estimate();
        let _ = writeln!(
            out,
            "{name},merged,{},{},{}",
            e.n,
            fmt(e.mean),
            fmt(e.std_error)
        );
    }
    Ok(RunOutput {
        text: out,
        exit_code: 0,
    })
}

fn cmd_verify(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let results = run_acceptance(&cfg.sim)?;
    let mut out = String::new();
    let mut all_ok = true;
    for r in &results {
        let _ = writeln!(out, "{}", r.line());
        all_ok &= r.passed;
    }
    let _ = writeln!(
        out,
        "{}",
        if all_ok {
            "all criteria passed"
        } else {
            "FAILURES present"
        }
    );
    Ok(RunOutput {
        text: out,
        exit_code: if all_ok { 0 } else { 1 },
    })
}
