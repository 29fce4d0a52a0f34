//! Running the solver on a problem and describing the outcome.

use std::time::Instant;

use ceig::oracle::{compare, enumerate_all, OracleConfig};
use ceig::solver_cop::{all_ceigs_copositive, flatten, CopOptions};
use ceig::solver_gen::{all_ceigs_general, GenOptions};
use ceig::{CEigenpair, Error, TensorPair};
use serde::{Deserialize, Serialize};

/// Bumped whenever the report layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Auto,
    Copositive,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Every eigenpair was found and the search terminated normally.
    Complete,
    /// Some relaxation never became flat within the order cap.
    OrderCap,
    /// No eigenpair exists; the relaxations were certified infeasible.
    InfeasibleEmpty,
    /// Any other solver failure.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub method: MethodChoice,
    pub assert_copositive: bool,
    pub seed: u64,
    pub delta0: f64,
    pub k_max: Option<usize>,
    pub tol: f64,
    pub oracle: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            method: MethodChoice::Auto,
            assert_copositive: false,
            seed: 1,
            delta0: 0.05,
            k_max: None,
            tol: 1e-8,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    /// False when the instance exceeded the oracle's size guard.
    pub ran: bool,
    pub count: usize,
    pub matched: usize,
    pub missing: Vec<f64>,
    pub extra: Vec<f64>,
    /// One-based supports whose Newton solution count exceeded the bound.
    pub overflow: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_seconds: f64,
    pub oracle_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub status: Status,
    /// The path actually taken.
    pub method: MethodChoice,
    pub order: usize,
    pub dim: usize,
    pub eigenpairs: Vec<CEigenpair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub options: RunOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, Status::Complete | Status::InfeasibleEmpty)
    }

    pub fn to_plain(&self) -> String {
        let mut s = format!("status {}\nmethod {}\n", kebab(&self.status), kebab(&self.method));
        if let Some(e) = &self.error {
            s += &format!("error {e}\n");
        }
        for p in &self.eigenpairs {
            let x: Vec<String> = p.x.iter().map(|v| format!("{v:.6}")).collect();
            s += &format!("lambda {:.8} x [{}]\n", p.lambda, x.join(", "));
        }
        if let Some(o) = &self.oracle {
            if o.ran {
                s += &format!(
                    "oracle {} pairs, {} matched, {} missing, {} extra\n",
                    o.count,
                    o.matched,
                    o.missing.len(),
                    o.extra.len()
                );
            } else {
                s += "oracle skipped (instance too large)\n";
            }
        }
        if let Some(t) = &self.timings {
            s += &format!("solve {:.3}s\n", t.solve_seconds);
            if let Some(o) = t.oracle_seconds {
                s += &format!("oracle {o:.3}s\n");
            }
        }
        s
    }
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// The copositive path is taken for entrywise positive `B` or on request.
pub fn resolve_method(pair: &TensorPair, opts: &RunOptions) -> MethodChoice {
    match opts.method {
        MethodChoice::Auto if pair.b.entrywise_positive() || opts.assert_copositive => MethodChoice::Copositive,
        MethodChoice::Auto => MethodChoice::General,
        m => m,
    }
}

/// Errors that mean the input, not the solver, is at fault.
pub fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::NotCopositive | Error::InvalidTensor(_) | Error::DimensionMismatch { .. } | Error::ShapeMismatch(..))
}

pub fn run(pair: &TensorPair, opts: &RunOptions, timings: bool) -> Result<Report, Error> {
    let method = resolve_method(pair, opts);
    let start = Instant::now();
    let result = match method {
        MethodChoice::Copositive => {
            let mut cop = CopOptions {
                delta0: opts.delta0,
                k_max: opts.k_max,
                assert_copositive: opts.assert_copositive,
                ..Default::default()
            };
            cop.sdp.feas_tol = opts.tol;
            cop.sdp.gap_tol = opts.tol;
            all_ceigs_copositive(pair, &cop).map(|levels| flatten(&levels))
        }
        _ => {
            let mut gen = GenOptions { seed: opts.seed, delta0: opts.delta0, k_max: opts.k_max, ..Default::default() };
            gen.sdp.feas_tol = opts.tol;
            gen.sdp.gap_tol = opts.tol;
            all_ceigs_general(pair, &gen)
        }
    };
    let solve_seconds = start.elapsed().as_secs_f64();
    let (status, eigenpairs, error) = match result {
        Ok(p) if p.is_empty() => (Status::InfeasibleEmpty, p, None),
        Ok(p) => (Status::Complete, p, None),
        Err(e) if is_input_error(&e) => return Err(e),
        Err(e @ Error::OrderCapReached { .. }) => (Status::OrderCap, Vec::new(), Some(e.to_string())),
        Err(e) => (Status::Failed, Vec::new(), Some(e.to_string())),
    };

    let mut oracle_seconds = None;
    let oracle = opts.oracle.then(|| {
        let start = Instant::now();
        let summary = match enumerate_all(pair, &OracleConfig::default()) {
            Ok(rep) => {
                let cmp = compare(&eigenpairs, &rep.pairs, 1e-4);
                OracleSummary {
                    ran: true,
                    count: rep.pairs.len(),
                    matched: cmp.matched.len(),
                    missing: cmp.missing,
                    extra: cmp.extra,
                    overflow: rep.overflow.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect(),
                }
            }
            Err(_) => OracleSummary { ran: false, count: 0, matched: 0, missing: vec![], extra: vec![], overflow: vec![] },
        };
        oracle_seconds = Some(start.elapsed().as_secs_f64());
        summary
    });

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        status,
        method,
        order: pair.order(),
        dim: pair.dim(),
        eigenpairs,
        error,
        options: opts.clone(),
        oracle,
        timings: timings.then_some(Timings { solve_seconds, oracle_seconds }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ceig::instances;

    #[test]
    fn method_resolution() {
        let opts = RunOptions::default();
        assert_eq!(resolve_method(&instances::ling_2x4(), &opts), MethodChoice::Copositive);
        assert_eq!(resolve_method(&instances::tan_sum_pair(3), &opts), MethodChoice::General);
        let forced = RunOptions { assert_copositive: true, ..Default::default() };
        assert_eq!(resolve_method(&instances::alternating_pair(3), &forced), MethodChoice::Copositive);
        let general = RunOptions { method: MethodChoice::General, ..Default::default() };
        assert_eq!(resolve_method(&instances::ling_2x4(), &general), MethodChoice::General);
    }

    #[test]
    fn report_round_trips() {
        let r = run(&instances::ling_2x4(), &RunOptions::default(), false).unwrap();
        assert_eq!(r.status, Status::Complete);
        let text = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(r.to_plain().starts_with("status complete\nmethod copositive\n"));
    }

    #[test]
    fn copositive_request_on_indefinite_b_is_an_input_error() {
        let opts = RunOptions { method: MethodChoice::Copositive, ..Default::default() };
        assert!(matches!(run(&instances::tan_sum_pair(3), &opts, false), Err(Error::NotCopositive)));
    }
}
