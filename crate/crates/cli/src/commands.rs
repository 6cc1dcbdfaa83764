use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use intervention::finite_core::game_from_json_str;
use intervention::imperfect_example::{self as imperfect, ImperfectParams};
use intervention::perfect_core::default_profile_grid_step;
use intervention::report::{write_csv, write_json};
use intervention::rule_search::{gap_certificate, solve_with, SearchOptions};
use intervention::wireless_example::{self as wireless, WirelessParams};
use intervention::Error;

use crate::args::Common;

/// Capabilities exported as separate region files by `wireless`.
const REGION_CAPABILITIES: [f64; 5] = [0.0, 0.1, 0.51, 5.0, 12.0];
const REFERENCE_P: [f64; 3] = [0.9, 0.94, 0.96];

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Consistency(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Consistency(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msg) | Failure::Consistency(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Consistency(_) | Error::Invariant(_) | Error::NoSustainableProfile(_) => {
                Failure::Consistency(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

/// `--param` overrides keyed by name; rejects keys outside `allowed` and
/// repeated keys.
fn overrides(common: &Common, allowed: &[&str]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut map = BTreeMap::new();
    for (key, value) in &common.params {
        if !allowed.contains(&key.as_str()) {
            let known = if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") };
            return Err(Failure::Validation(format!("unknown parameter `{key}` (accepted: {known})")));
        }
        if map.insert(key.clone(), *value).is_some() {
            return Err(Failure::Validation(format!("parameter `{key}` given more than once")));
        }
    }
    Ok(map)
}

fn reject_flag(value: Option<f64>, flag: &str, command: &str) -> Outcome {
    match value {
        Some(_) => Err(Failure::Validation(format!("--{flag} is not used by `{command}`"))),
        None => Ok(()),
    }
}

fn positive(value: f64, flag: &str) -> Result<f64, Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::Validation(format!("--{flag} must be positive, got {value}")))
    }
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Validation(format!("cannot create output directory {}: {e}", dir.display())))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn finite(input: &Path, symmetric: bool, common: &Common) -> Outcome {
    overrides(common, &[])?;
    let mut opts = SearchOptions::<f64> { symmetric_only: symmetric, ..Default::default() };
    if let Some(step) = common.rule_step {
        opts.rule_step = positive(step, "rule-step")?;
    }
    if let Some(step) = common.grid_step {
        opts.profile_step = positive(step, "grid-step")?;
    }
    if let Some(tol) = common.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Failure::Validation(format!("--tol must be nonnegative, got {tol}")));
        }
        opts.tolerance = tol;
    }
    let text =
        fs::read_to_string(input).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", input.display())))?;
    let game = game_from_json_str::<f64>(&text)?;
    prepare_out(&common.out)?;

    let summary = solve_with(&game, &opts)?;
    let certificate = gap_certificate(&game, &summary)?;
    let mut report = summary.to_json(&game);
    report["gap_certificate"] = match certificate {
        Some(c) => json!({
            "gap": c.gap,
            "grid_slack": c.grid_slack,
            "best_no_intervention_value": c.best_no_intervention_value,
        }),
        None => Value::Null,
    };
    let path = common.out.join("summary.json");
    write_json(&path, &report)?;
    announce(&path);
    println!("v_bar = {}, v_star = {}, v_tilde = {:?}", summary.v_bar, summary.v_star, summary.v_tilde);
    Ok(())
}

pub fn imperfect(common: &Common) -> Outcome {
    reject_flag(common.grid_step, "grid-step", "imperfect")?;
    reject_flag(common.tol, "tol", "imperfect")?;
    let params = overrides(common, &["a_L", "a_H", "y_hi", "y_lo", "p", "q", "r"])?;
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let step = positive(common.rule_step.unwrap_or(0.01), "rule-step")?;
    let ps: Vec<f64> = match params.get("p") {
        Some(&p) => vec![p],
        None => REFERENCE_P.to_vec(),
    };
    let runs = ps
        .iter()
        .map(|&p| {
            ImperfectParams::new(
                get("a_L", 1.0),
                get("a_H", 1.19),
                get("y_hi", 5.0),
                get("y_lo", 1.0),
                p,
                get("q", 0.8),
                get("r", 0.65),
            )
            .map(|params| (p, params))
        })
        .collect::<Result<Vec<_>, _>>()?;
    prepare_out(&common.out)?;

    for (p, params) in runs {
        let rows = imperfect::fig4_data(&params, step)?;
        let path = common.out.join(format!("fig4_p{p}.csv"));
        write_csv(&path, &rows)?;
        announce(&path);

        let class = imperfect::classify(&params);
        let report = json!({
            "p": p,
            "case": class.case,
            "formula": class.formula,
            "v_star": class.v_star,
            "v_bar": params.v_bar(),
            "v_tilde": params.v_tilde(),
            "alpha_bar": class.alpha_bar,
            "gap": params.v_bar() - class.v_star,
            "boundary": class.boundary,
        });
        let path = common.out.join(format!("classification_p{p}.json"));
        write_json(&path, &report)?;
        announce(&path);
        println!("p = {p}: case {}, v_star = {}", report["case"].as_str().unwrap_or("?"), class.v_star);
    }
    Ok(())
}

pub fn wireless(common: &Common) -> Outcome {
    reject_flag(common.rule_step, "rule-step", "wireless")?;
    reject_flag(common.tol, "tol", "wireless")?;
    let params = overrides(common, &["N", "q", "b", "a_max", "a0"])?;
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let n = get("N", 2.0);
    if !(n >= 1.0 && n.fract() == 0.0 && n <= 16.0) {
        return Err(Failure::Validation(format!("parameter `N` must be an integer in [1, 16], got {n}")));
    }
    let n = n as usize;
    let a_max = get("a_max", 12.0);
    let base = WirelessParams::symmetric(n, get("q", 12.0), get("b", 1.0), a_max, get("a0", a_max))?;
    let step = positive(common.grid_step.unwrap_or(0.1), "grid-step")?;
    let intervals = (a_max / step).round();
    if (intervals * step - a_max).abs() > 1e-9 * a_max.max(1.0) || intervals < 1.0 {
        return Err(Failure::Validation(format!("--grid-step {step} must divide a_max = {a_max}")));
    }
    let points = intervals as usize + 1;
    prepare_out(&common.out)?;

    if n == 2 {
        for a0 in REGION_CAPABILITIES {
            let rows = wireless::fig5_region(&base.with_a0_max(a0)?, points)?;
            let path = region_path(&common.out, a0);
            write_csv(&path, &rows)?;
            announce(&path);
        }
        let usages: Vec<f64> = (0..points).map(|k| a_max * k as f64 / intervals).collect();
        let rows = wireless::fig6_data(&base, &usages)?;
        let path = common.out.join("fig6.csv");
        write_csv(&path, &rows)?;
        announce(&path);
    } else {
        println!("region and payoff-curve exports need N = 2; writing benchmarks only");
    }

    let marks = base.benchmarks();
    let eq = wireless::v_star(&base, default_profile_grid_step(n))?;
    let report = json!({
        "num_users": n,
        "a0_max": base.a0_max(),
        "v_bar": marks.v_bar,
        "v_tilde": marks.v_tilde,
        "a_l": marks.a_l,
        "a_h": marks.a_h,
        "a0_min": base.a0_min(),
        "v_star": eq.value,
        "v_star_profile": eq.profile,
        "fallback": eq.fallback,
    });
    let path = common.out.join("benchmarks.json");
    write_json(&path, &report)?;
    announce(&path);
    println!("v_bar = {}, v_tilde = {}, a0_min = {}, v_star = {}", marks.v_bar, marks.v_tilde, base.a0_min(), eq.value);
    Ok(())
}

fn region_path(dir: &Path, a0: f64) -> PathBuf {
    dir.join(format!("fig5_a0_{a0}.csv"))
}
