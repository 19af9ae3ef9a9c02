//! Affective game design pattern catalog.
//!
//! Patterns carry a categorical affect annotation and typed relations to other
//! patterns. `instantiates` edges must form a DAG, `conflicts` must be declared
//! in both directions, and `modulates` is informational (used for ranking).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::{Error, Result};

/// The catalog shipped with the crate.
pub const SEED_CATALOG: &str = include_str!("../data/seed_catalog.txt");

const MAX_LATENCY_S: f64 = 30.0;

token_enum!(
    /// Expected effect on arousal. Also used as the recommendation goal.
    ArousalEffect { Raise => "raise", Lower => "lower", Neutral => "neutral" }
);
token_enum!(ValenceEffect { Positive => "positive", Negative => "negative", Neutral => "neutral" });
token_enum!(RelationKind { Instantiates => "instantiates", Modulates => "modulates", Conflicts => "conflicts" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffectAnnotation {
    pub arousal_effect: ArousalEffect,
    pub valence_effect: ValenceEffect,
    /// Expected response latency window (lo, hi) in seconds.
    pub latency_window_s: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    pub kind: RelationKind,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPattern {
    pub id: String,
    pub name: String,
    pub description: String,
    pub affect: AffectAnnotation,
    pub relations: Vec<Relation>,
}

impl DesignPattern {
    pub fn targets(&self, kind: RelationKind) -> impl Iterator<Item = &str> {
        self.relations.iter().filter(move |r| r.kind == kind).map(|r| r.target.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub version: String,
    pub patterns: BTreeMap<String, DesignPattern>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    DuplicateId,
    SelfRelation,
    UnresolvedTarget,
    LatencyWindow,
    AsymmetricConflict,
    InstantiatesCycle,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DuplicateId => "duplicate_id",
            Rule::SelfRelation => "self_relation",
            Rule::UnresolvedTarget => "unresolved_target",
            Rule::LatencyWindow => "latency_window",
            Rule::AsymmetricConflict => "asymmetric_conflict",
            Rule::InstantiatesCycle => "instantiates_cycle",
        }
    }
}

/// A broken catalog rule and the pattern ids involved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub rule: Rule,
    pub ids: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.rule.as_str(), self.ids.join(","))
    }
}

fn violation(rule: Rule, ids: &[&str]) -> Violation {
    Violation { rule, ids: ids.iter().map(|s| s.to_string()).collect() }
}

/// Parses a catalog file and validates it.
pub fn load_catalog(bytes: &[u8]) -> Result<Catalog> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(0, format!("not UTF-8: {e}")))?;
    let mut version = String::from("unversioned");
    let mut patterns: BTreeMap<String, DesignPattern> = BTreeMap::new();
    let mut current: Option<(usize, DesignPattern, bool)> = None;
    let mut duplicates = Vec::new();

    let mut finish = |cur: Option<(usize, DesignPattern, bool)>,
                      patterns: &mut BTreeMap<String, DesignPattern>|
     -> Result<()> {
        if let Some((line, p, annotated)) = cur {
            if !annotated {
                return Err(Error::parse(line, format!("pattern `{}` has no A line", p.id)));
            }
            if patterns.contains_key(&p.id) {
                duplicates.push(violation(Rule::DuplicateId, &[&p.id]));
            } else {
                patterns.insert(p.id.clone(), p);
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (kind, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let fields: Vec<&str> = rest.split_whitespace().collect();
        match kind {
            "V" => {
                if fields.len() != 1 {
                    return Err(Error::parse(line_no, "V line takes one version tag"));
                }
                version = fields[0].to_string();
            }
            "P" => {
                finish(current.take(), &mut patterns)?;
                let Some((id, name)) = rest.split_once(char::is_whitespace) else {
                    return Err(Error::parse(line_no, "P line needs an id and a name"));
                };
                let pattern = DesignPattern {
                    id: id.to_string(),
                    name: name.trim().to_string(),
                    description: String::new(),
                    affect: AffectAnnotation {
                        arousal_effect: ArousalEffect::Neutral,
                        valence_effect: ValenceEffect::Neutral,
                        latency_window_s: (0.0, 0.0),
                    },
                    relations: Vec::new(),
                };
                current = Some((line_no, pattern, false));
            }
            "A" | "R" | "D" => {
                let Some((_, p, annotated)) = current.as_mut() else {
                    return Err(Error::parse(line_no, format!("{kind} line before any P line")));
                };
                let bad = |e: String| Error::parse(line_no, e);
                match kind {
                    "A" => {
                        if *annotated {
                            return Err(bad(format!("second A line for `{}`", p.id)));
                        }
                        let [a, v, lo, hi] = fields[..] else {
                            return Err(bad("A line needs 4 fields".into()));
                        };
                        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("latency `{s}`: {e}")));
                        p.affect = AffectAnnotation {
                            arousal_effect: a.parse().map_err(bad)?,
                            valence_effect: v.parse().map_err(bad)?,
                            latency_window_s: (num(lo)?, num(hi)?),
                        };
                        *annotated = true;
                    }
                    "R" => {
                        let [k, target] = fields[..] else {
                            return Err(bad("R line needs a kind and a target".into()));
                        };
                        p.relations.push(Relation { kind: k.parse().map_err(bad)?, target: target.to_string() });
                    }
                    _ => {
                        if !p.description.is_empty() {
                            p.description.push(' ');
                        }
                        p.description.push_str(rest);
                    }
                }
            }
            other => return Err(Error::parse(line_no, format!("unknown line kind `{other}`"))),
        }
    }
    finish(current.take(), &mut patterns)?;

    let cat = Catalog { version, patterns };
    let mut violations = duplicates;
    violations.extend(validate_catalog(&cat));
    if violations.is_empty() {
        Ok(cat)
    } else {
        Err(Error::Catalog(violations))
    }
}

/// The catalog shipped with the crate.
pub fn seed_catalog() -> Catalog {
    load_catalog(SEED_CATALOG.as_bytes()).expect("seed catalog is valid")
}

/// All rule violations, sorted. Empty iff the catalog is consistent.
pub fn validate_catalog(cat: &Catalog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut graph: DiGraphMap<&str, ()> = DiGraphMap::new();
    for (id, p) in &cat.patterns {
        graph.add_node(id.as_str());
        let (lo, hi) = p.affect.latency_window_s;
        if !(lo >= 0.0 && hi <= MAX_LATENCY_S && lo < hi) {
            out.push(violation(Rule::LatencyWindow, &[id]));
        }
        for r in &p.relations {
            if &r.target == id {
                out.push(violation(Rule::SelfRelation, &[id]));
                continue;
            }
            let Some(target) = cat.patterns.get(&r.target) else {
                out.push(violation(Rule::UnresolvedTarget, &[id, &r.target]));
                continue;
            };
            match r.kind {
                RelationKind::Conflicts => {
                    if !target.targets(RelationKind::Conflicts).any(|t| t == id) {
                        out.push(violation(Rule::AsymmetricConflict, &[id, &r.target]));
                    }
                }
                RelationKind::Instantiates => {
                    graph.add_edge(id.as_str(), r.target.as_str(), ());
                }
                RelationKind::Modulates => {}
            }
        }
    }
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            let mut ids = scc;
            ids.sort_unstable();
            out.push(violation(Rule::InstantiatesCycle, &ids));
        }
    }
    out.sort();
    out.dedup();
    out
}

fn check_ids<'a>(cat: &Catalog, ids: impl IntoIterator<Item = &'a String>) -> Result<()> {
    for id in ids {
        if !cat.patterns.contains_key(id) {
            return Err(Error::UnknownPattern(id.clone()));
        }
    }
    Ok(())
}

fn in_conflict(cat: &Catalog, id: &str, active: &BTreeSet<String>) -> bool {
    cat.patterns[id].targets(RelationKind::Conflicts).any(|t| active.contains(t))
        || active.iter().any(|a| cat.patterns[a].targets(RelationKind::Conflicts).any(|t| t == id))
}

/// Active pattern ids and the conflicting pairs among them.
pub type EffectiveSet = (BTreeSet<String>, Vec<(String, String)>);

/// Closure of `selected` under `instantiates`, plus every conflicting pair
/// inside it as `(a, b)` with `a < b`.
pub fn effective_set(cat: &Catalog, selected: &BTreeSet<String>) -> Result<EffectiveSet> {
    check_ids(cat, selected)?;
    let mut active = selected.clone();
    let mut stack: Vec<String> = selected.iter().cloned().collect();
    while let Some(id) = stack.pop() {
        for t in cat.patterns[&id].targets(RelationKind::Instantiates) {
            if active.insert(t.to_string()) {
                stack.push(t.to_string());
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for a in &active {
        for b in cat.patterns[a].targets(RelationKind::Conflicts) {
            if active.contains(b) {
                let (x, y) = if a.as_str() < b { (a.clone(), b.to_string()) } else { (b.to_string(), a.clone()) };
                pairs.insert((x, y));
            }
        }
    }
    Ok((active, pairs.into_iter().collect()))
}

/// Up to `k` pattern ids to add to a design whose effective set comes from
/// `selected`, best first.
///
/// Candidates are outside the effective set and conflict with nothing in it.
/// They rank by whether their arousal effect matches `goal`, then by whether
/// they modulate an active pattern, then by id.
pub fn recommend(cat: &Catalog, selected: &BTreeSet<String>, goal: ArousalEffect, k: usize) -> Result<Vec<String>> {
    let (active, _) = effective_set(cat, selected)?;
    let mut ranked: Vec<(bool, bool, &str)> = cat
        .patterns
        .values()
        .filter(|p| !active.contains(&p.id) && !in_conflict(cat, &p.id, &active))
        .map(|p| {
            let matches = p.affect.arousal_effect == goal;
            let modulates = p.targets(RelationKind::Modulates).any(|t| active.contains(t));
            (!matches, !modulates, p.id.as_str())
        })
        .collect();
    ranked.sort_unstable();
    Ok(ranked.into_iter().take(k).map(|(_, _, id)| id.to_string()).collect())
}

/// Lexicographically first pattern with the given arousal effect that does not
/// conflict with `active`.
pub fn first_eligible<'a>(cat: &'a Catalog, effect: ArousalEffect, active: &BTreeSet<String>) -> Option<&'a DesignPattern> {
    cat.patterns
        .values()
        .find(|p| p.affect.arousal_effect == effect && !in_conflict(cat, &p.id, active))
}
