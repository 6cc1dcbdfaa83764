//! JSON game documents.
//!
//! ```json
//! {
//!   "num_users": 2,
//!   "user_actions": [["a_L", "a_H"], ["a_L", "a_H"]],
//!   "intervention_actions": ["not_intervene", "intervene"],
//!   "no_intervention_action": "not_intervene",
//!   "signals": ["y_hi", "y_lo"],
//!   "signal_dist": { "a_L,a_L": [0.96, 0.04], "...": [] },
//!   "payoffs": { "(not_intervene,a_L,a_L,y_hi)": [5.0, 5.0, 5.0], "...": [] }
//! }
//! ```
//!
//! `signal_dist` keys are comma-joined user action labels; `payoffs` keys are
//! `(a0,a_1,...,a_N,y)` and map to `[u_0, u_1, ..., u_N]` with the manager
//! first. `no_intervention_action` is optional. Every profile and every
//! `(a0, a, y)` cell must be present; unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FiniteInterventionGame;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameDoc {
    num_users: usize,
    user_actions: Vec<Vec<String>>,
    intervention_actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    no_intervention_action: Option<String>,
    signals: Vec<String>,
    signal_dist: BTreeMap<String, Vec<f64>>,
    payoffs: BTreeMap<String, Vec<f64>>,
}

fn input(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Input { key: key.into(), reason: reason.into() }
}

fn check_label(field: &str, label: &str) -> Result<()> {
    if label.trim().is_empty() || label.trim() != label || label.contains([',', '(', ')']) {
        return Err(input(
            field,
            format!("label `{label}` must be non-empty without commas, parentheses or surrounding whitespace"),
        ));
    }
    Ok(())
}

fn split_key(key: &str) -> Vec<&str> {
    key.split(',').map(str::trim).collect()
}

pub fn game_from_json_str<T: Scalar>(text: &str) -> Result<FiniteInterventionGame<T>> {
    let doc: GameDoc = serde_json::from_str(text).map_err(|e| input("document", e.to_string()))?;
    from_doc(doc)
}

pub fn game_from_json<T: Scalar>(value: serde_json::Value) -> Result<FiniteInterventionGame<T>> {
    let doc: GameDoc = serde_json::from_value(value).map_err(|e| input("document", e.to_string()))?;
    from_doc(doc)
}

fn from_doc<T: Scalar>(doc: GameDoc) -> Result<FiniteInterventionGame<T>> {
    if doc.num_users == 0 {
        return Err(input("num_users", "must be positive"));
    }
    if doc.user_actions.len() != doc.num_users {
        return Err(input(
            "user_actions",
            format!("has {} action lists, num_users is {}", doc.user_actions.len(), doc.num_users),
        ));
    }
    for acts in &doc.user_actions {
        for l in acts {
            check_label("user_actions", l)?;
        }
    }
    for l in &doc.intervention_actions {
        check_label("intervention_actions", l)?;
    }
    for l in &doc.signals {
        check_label("signals", l)?;
    }

    let n = doc.num_users;
    let lookup = |labels: &[String], l: &str| labels.iter().position(|x| x == l);

    // Resolve every key up front so unknown labels are reported by key.
    let mut dist: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for (key, probs) in &doc.signal_dist {
        let parts = split_key(key);
        if parts.len() != n {
            return Err(input(format!("signal_dist.{key}"), format!("expected {n} comma-separated labels")));
        }
        let profile = parts
            .iter()
            .enumerate()
            .map(|(i, l)| {
                lookup(&doc.user_actions[i], l).ok_or_else(|| {
                    input(format!("signal_dist.{key}"), format!("unknown action `{l}` for user {}", i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if dist.insert(profile, probs.clone()).is_some() {
            return Err(input(format!("signal_dist.{key}"), "duplicate profile"));
        }
    }

    let mut payoffs: BTreeMap<(usize, Vec<usize>, usize), Vec<f64>> = BTreeMap::new();
    for (key, values) in &doc.payoffs {
        let err = |reason: String| input(format!("payoffs.{key}"), reason);
        let inner = key
            .trim()
            .strip_prefix('(')
            .and_then(|k| k.strip_suffix(')'))
            .ok_or_else(|| err("key must be written as (a0,a_1,...,a_N,y)".into()))?;
        let parts = split_key(inner);
        if parts.len() != n + 2 {
            return Err(err(format!("expected {} comma-separated labels", n + 2)));
        }
        let a0 = lookup(&doc.intervention_actions, parts[0])
            .ok_or_else(|| err(format!("unknown intervention action `{}`", parts[0])))?;
        let y = lookup(&doc.signals, parts[n + 1]).ok_or_else(|| err(format!("unknown signal `{}`", parts[n + 1])))?;
        let profile = (0..n)
            .map(|i| {
                lookup(&doc.user_actions[i], parts[i + 1])
                    .ok_or_else(|| err(format!("unknown action `{}` for user {}", parts[i + 1], i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n + 1 {
            return Err(err(format!("expected {} payoffs (manager first), got {}", n + 1, values.len())));
        }
        if payoffs.insert((a0, profile, y), values.clone()).is_some() {
            return Err(err("duplicate cell".into()));
        }
    }

    let space = crate::space::ActionSpace::new(doc.user_actions.iter().map(Vec::len).collect());
    let join =
        |p: &[usize]| p.iter().enumerate().map(|(i, &a)| doc.user_actions[i][a].as_str()).collect::<Vec<_>>().join(",");
    for idx in 0..space.len() {
        let a = space.profile(idx);
        if !dist.contains_key(&a) {
            return Err(input(format!("signal_dist.{}", join(&a)), "missing entry"));
        }
        for (a0, a0_label) in doc.intervention_actions.iter().enumerate() {
            for (y, y_label) in doc.signals.iter().enumerate() {
                if !payoffs.contains_key(&(a0, a.clone(), y)) {
                    return Err(input(format!("payoffs.({a0_label},{},{y_label})", join(&a)), "missing entry"));
                }
            }
        }
    }

    let game = FiniteInterventionGame::from_fn(
        doc.user_actions.clone(),
        doc.intervention_actions.clone(),
        doc.signals.clone(),
        |a| dist[a].iter().map(|&x| T::lit(x)).collect(),
        |a0, a, y| payoffs[&(a0, a.to_vec(), y)].iter().map(|&x| T::lit(x)).collect(),
    );
    let game = game.map_err(|e| match e {
        Error::InvalidProbability { context, reason } => input("signal_dist", format!("{context}: {reason}")),
        other => other,
    })?;
    match &doc.no_intervention_action {
        Some(label) => game
            .with_no_intervention_action(label)
            .map_err(|_| input("no_intervention_action", format!("`{label}` is not an intervention action"))),
        None => Ok(game),
    }
}

/// Serializes a game into the document format accepted by
/// [`game_from_json_str`].
pub fn game_to_json<T: Scalar>(game: &FiniteInterventionGame<T>) -> serde_json::Value {
    let space = game.space();
    let n = game.num_users();
    let mut signal_dist = BTreeMap::new();
    let mut payoffs = BTreeMap::new();
    for idx in 0..space.len() {
        let profile = space.profile(idx);
        let key = game.profile_labels(&profile);
        signal_dist.insert(key.clone(), (0..game.signals().len()).map(|y| game.signal_prob(idx, y).as_f64()).collect());
        for (a0, a0_label) in game.intervention_actions().iter().enumerate() {
            for (y, y_label) in game.signals().iter().enumerate() {
                payoffs.insert(
                    format!("({a0_label},{key},{y_label})"),
                    (0..=n).map(|who| game.payoff(a0, idx, y, who).as_f64()).collect(),
                );
            }
        }
    }
    let doc = GameDoc {
        num_users: n,
        user_actions: game.all_user_actions().to_vec(),
        intervention_actions: game.intervention_actions().to_vec(),
        no_intervention_action: game.no_intervention.map(|k| game.intervention_actions()[k].clone()),
        signals: game.signals().to_vec(),
        signal_dist,
        payoffs,
    };
    serde_json::to_value(doc).expect("game document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn tiny() -> serde_json::Value {
        json!({
            "num_users": 1,
            "user_actions": [["x", "z"]],
            "intervention_actions": ["none", "hit"],
            "no_intervention_action": "none",
            "signals": ["s"],
            "signal_dist": { "x": [1.0], "z": [1.0] },
            "payoffs": {
                "(none,x,s)": [1.0, 1.0],
                "(none,z,s)": [2.0, 2.0],
                "(hit,x,s)": [0.0, 0.0],
                "( hit , z , s )": [0.0, -1.0]
            }
        })
    }

    #[test]
    fn parses_and_round_trips() {
        let g: FiniteInterventionGame<f64> = game_from_json(tiny()).unwrap();
        assert_eq!(g.no_intervention_action(), Some(0));
        assert_eq!(g.payoff(1, 1, 0, 1), -1.0);
        let back: FiniteInterventionGame<f64> = game_from_json(game_to_json(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_entries_name_the_key() {
        let mut doc = tiny();
        doc["payoffs"].as_object_mut().unwrap().remove("(hit,x,s)");
        let err = game_from_json::<f64>(doc).unwrap_err();
        assert!(err.to_string().contains("payoffs.(hit,x,s)"), "{err}");

        let mut doc = tiny();
        doc["signal_dist"].as_object_mut().unwrap().remove("z");
        let err = game_from_json::<f64>(doc).unwrap_err();
        assert!(err.to_string().contains("signal_dist.z"), "{err}");

        let mut doc = tiny();
        doc.as_object_mut().unwrap().remove("signals");
        let err = game_from_json::<f64>(doc).unwrap_err();
        assert!(err.to_string().contains("signals"), "{err}");
    }

    #[test]
    fn rejects_bad_documents() {
        let mut doc = tiny();
        doc["signal_dist"]["x"] = json!([0.5]);
        assert!(game_from_json::<f64>(doc).unwrap_err().to_string().contains("signal_dist"));

        let mut doc = tiny();
        doc["extra"] = json!(1);
        assert!(game_from_json::<f64>(doc).is_err());

        let mut doc = tiny();
        doc["payoffs"]["(none,q,s)"] = json!([0.0, 0.0]);
        assert!(game_from_json::<f64>(doc).unwrap_err().to_string().contains("unknown action `q`"));

        let mut doc = tiny();
        doc["no_intervention_action"] = json!("nah");
        assert!(game_from_json::<f64>(doc).unwrap_err().to_string().contains("no_intervention_action"));

        assert!(game_from_json_str::<f64>("{ not json").is_err());
    }
}
