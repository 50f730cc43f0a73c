//! Rule-based provider. Every reply is a pure function of the request: the
//! user message is parsed back into its `[section]` layout and answered with
//! keyword tables, token overlap and hash-seeded perturbation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde_json::Value;

use super::prompt::Sections;
use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError, ProviderKind};

/// Agent names in registry order, matching the display names of the filing types.
const AGENTS: [&str; 6] = ["13F", "NCSR", "NCEN", "NPORT", "NMFP", "ADV"];

/// Weighted keyword phrases per agent, matched on word boundaries in the
/// lowercased question after identifiers are masked.
const KEYWORDS: [(&str, &[&str]); 6] = [
    (
        "13F",
        &[
            "13f", "cash equity", "option positions", "positions", "manager", "cusip", "put",
            "call", "institutional",
        ],
    ),
    (
        "NCSR",
        &[
            "ncsr", "n-csr", "total assets", "annual report", "shareholder report", "statement",
            "financial highlights", "expense ratio", "schedule of investments", "liabilities",
        ],
    ),
    ("NCEN", &["ncen", "n-cen", "census", "trust", "underwriter", "managed by", "share class"]),
    (
        "NPORT",
        &[
            "nport", "n-port", "holding", "holdings", "asset category", "country", "derivative",
            "counterparty", "basket", "swaps", "swap", "portfolio", "notional",
        ],
    ),
    (
        "NMFP",
        &["nmfp", "n-mfp", "money market", "seven day yield", "weighted average maturity", "mmf"],
    ),
    (
        "ADV",
        &[
            "form adv", "regulatory aum", "aum", "prime broker", "prime brokers", "custodian",
            "private fund", "employees", "client", "crd",
        ],
    ),
];

const CUES: [&str; 20] = [
    "get", "list", "show", "find", "retrieve", "what", "which", "how", "total", "sum", "all",
    "each", "per", "give", "report", "compute", "aggregate", "return", "provide", "identify",
];

const FILING_TERMS: [&str; 13] = [
    "13f", "ncsr", "n-csr", "ncen", "n-cen", "nport", "n-port", "nmfp", "n-mfp", "form adv",
    "adviser", "advisor", "fund",
];

const STOPWORDS: [&str; 22] = [
    "the", "a", "an", "of", "for", "and", "by", "per", "with", "each", "all", "get", "in", "on",
    "to", "is", "what", "which", "me", "show", "find", "period",
];

/// N-PORT asset category codes treated as substitutable identifiers.
const CATEGORY_CODES: [&str; 10] = ["EC", "EP", "DBT", "DE", "STIV", "RA", "ABS", "LON", "DCO", "DIR"];

fn id_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(MGR|ADV|FUND|TRUST)-\d+\b|\b\d{4}-\d{2}-\d{2}\b").unwrap())
}

/// Identifier class of a token, used for exemplar slot substitution.
fn identifier_class(tok: &str) -> Option<&'static str> {
    if let Some((prefix, _)) = tok.split_once('-') {
        match prefix {
            "MGR" => return Some("manager"),
            "ADV" => return Some("adviser"),
            "FUND" => return Some("fund"),
            "TRUST" => return Some("trust"),
            _ => {}
        }
        if tok.len() == 10 && tok.as_bytes()[4] == b'-' {
            return Some("date");
        }
    }
    CATEGORY_CODES.contains(&tok).then_some("code")
}

/// Identifiers in order of occurrence, with their class.
fn identifiers(text: &str) -> Vec<(&'static str, String)> {
    let mut out: Vec<(usize, &'static str, String)> = id_regex()
        .find_iter(text)
        .filter_map(|m| identifier_class(m.as_str()).map(|c| (m.start(), c, m.as_str().to_string())))
        .collect();
    static CODE: OnceLock<Regex> = OnceLock::new();
    let code = CODE.get_or_init(|| Regex::new(r"\b[A-Z]{2,4}\b").unwrap());
    for m in code.find_iter(text) {
        if CATEGORY_CODES.contains(&m.as_str()) {
            out.push((m.start(), "code", m.as_str().to_string()));
        }
    }
    out.sort_by_key(|(pos, _, _)| *pos);
    out.into_iter().map(|(_, c, s)| (c, s)).collect()
}

fn mask_identifiers(text: &str) -> String {
    id_regex().replace_all(text, " ").into_owned()
}

/// Lowercased word tokens with a trailing plural `s` removed.
fn stems(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let t = t.to_ascii_lowercase();
            if t.len() > 3 && t.ends_with('s') && !t.ends_with("ss") {
                t[..t.len() - 1].to_string()
            } else {
                t
            }
        })
        .collect()
}

fn content_stems(text: &str) -> BTreeSet<String> {
    stems(text).into_iter().filter(|t| !STOPWORDS.contains(&t.as_str())).collect()
}

fn has_phrase(haystack: &str, phrase: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let before_ok = start == 0 || !haystack.as_bytes()[start - 1].is_ascii_alphanumeric();
        let after_ok = end == haystack.len() || !haystack.as_bytes()[end].is_ascii_alphanumeric();
        if before_ok && after_ok {
            return true;
        }
        from = start + 1;
    }
    false
}

fn agent_scores(question: &str) -> BTreeMap<&'static str, usize> {
    let text = mask_identifiers(question).to_ascii_lowercase();
    KEYWORDS
        .iter()
        .map(|(agent, phrases)| (*agent, phrases.iter().filter(|p| has_phrase(&text, p)).count()))
        .collect()
}

/// Agents ranked by keyword score (ties in registry order), dropping zero scores.
fn ranked_agents(question: &str, allowed: &[String]) -> Vec<&'static str> {
    let scores = agent_scores(question);
    let mut ranked: Vec<&'static str> = AGENTS
        .iter()
        .copied()
        .filter(|a| scores[a] > 0 && allowed.iter().any(|c| c.eq_ignore_ascii_case(a)))
        .collect();
    ranked.sort_by_key(|a| std::cmp::Reverse(scores[a]));
    ranked
}

fn has_class(question: &str, class: &str) -> bool {
    identifiers(question).iter().any(|(c, _)| *c == class)
}

/// Agent sequence in fetch order. Adviser-scoped questions about fund-level
/// data first resolve the adviser's funds through the census.
fn choose_agents(question: &str, allowed: &[String]) -> Vec<&'static str> {
    let ranked = ranked_agents(question, allowed);
    let scores = agent_scores(question);
    if has_class(question, "adviser") {
        let fund_level = ["NPORT", "NMFP"]
            .into_iter()
            .filter(|a| scores[a] > 0)
            .max_by_key(|a| (scores[a], std::cmp::Reverse(AGENTS.iter().position(|x| x == a))));
        if let Some(fl) = fund_level {
            return vec!["NCEN", fl];
        }
    }
    if let Some(first) = ranked.first() {
        return vec![*first];
    }
    let hint = identifiers(question).into_iter().find_map(|(c, _)| match c {
        "manager" => Some("13F"),
        "adviser" => Some("ADV"),
        "fund" => Some("NPORT"),
        "trust" => Some("NCEN"),
        _ => None,
    });
    hint.into_iter().collect()
}

/// `name: description` candidate lines.
fn candidates(body: &str) -> Vec<(String, String)> {
    body.lines()
        .filter_map(|l| l.split_once(':'))
        .map(|(n, d)| (n.trim().to_string(), d.trim().to_string()))
        .filter(|(n, _)| !n.is_empty())
        .collect()
}

/// Candidate with the largest stem overlap with the question; first wins ties.
fn best_table<'a>(question: &str, tables: &'a [(String, String)]) -> Option<&'a str> {
    let q = content_stems(&mask_identifiers(question));
    ranked_tables(&q, tables).first().map(|(name, _)| *name)
}

fn ranked_tables<'a>(q: &BTreeSet<String>, tables: &'a [(String, String)]) -> Vec<(&'a str, usize)> {
    let mut scored: Vec<(&str, usize)> = tables
        .iter()
        .map(|(name, desc)| {
            let mut words = content_stems(desc);
            words.extend(content_stems(&name.replace('_', " ")));
            (name.as_str(), q.intersection(&words).count())
        })
        .collect();
    scored.sort_by_key(|(_, s)| std::cmp::Reverse(*s));
    scored
}

fn fnv(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn has_cue(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    CUES.iter().any(|c| has_phrase(&lower, c))
}

fn has_entity(text: &str) -> bool {
    if !identifiers(text).iter().all(|(c, _)| *c == "date" || *c == "code") {
        return true;
    }
    let lower = text.to_ascii_lowercase();
    FILING_TERMS.iter().any(|t| has_phrase(&lower, t))
}

#[derive(Debug, Clone)]
pub struct DeterministicProvider {
    id: String,
}

impl Default for DeterministicProvider {
    fn default() -> Self {
        DeterministicProvider { id: "deterministic".into() }
    }
}

impl DeterministicProvider {
    pub fn new() -> Self {
        Self::default()
    }

    fn reply(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let s = Sections::parse(request.last_user());
        let question = s.get("question").unwrap_or("").trim();
        match request.tag.as_str() {
            "classify" => Ok(classify(question)),
            "rewrite" => Ok(rewrite(question)),
            "decompose" => Ok(decompose(question)),
            "route" => Ok(route(&s, question)),
            "swarm" => Ok(swarm(&s, question)),
            "plan" => Ok(plan(&s, question)),
            "replan" => Ok(replan(&s)),
            "variegate" => Ok(variegate(&s, question)),
            other => Err(GatewayError::InvalidRequest(format!("no rule set for tag `{other}`"))),
        }
    }
}

impl ChatProvider for DeterministicProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Deterministic
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        Ok(ChatResponse {
            content: self.reply(request)?,
            provider_id: self.id.clone(),
            latency: Duration::ZERO,
            from_cache: false,
        })
    }
}

fn classify(question: &str) -> String {
    if has_entity(question) && has_cue(question) {
        "non_hallucinatory 0.90".into()
    } else {
        "hallucinatory 0.80".into()
    }
}

fn rewrite(question: &str) -> String {
    if has_cue(question) {
        return question.to_string();
    }
    let mut chars = question.chars();
    match chars.next() {
        Some(c) => format!("Get {}{}", c.to_lowercase(), chars.as_str()),
        None => String::new(),
    }
}

fn decompose(question: &str) -> String {
    let scores = agent_scores(question);
    let ids = identifiers(question);
    let adviser = ids.iter().find(|(c, _)| *c == "adviser");
    match adviser {
        Some((_, adv)) if scores["NPORT"] > 0 || scores["NMFP"] > 0 => {
            let period = ids
                .iter()
                .find(|(c, _)| *c == "date")
                .map(|(_, d)| format!(" for period {d}"))
                .unwrap_or_default();
            format!("Get all funds managed by investment adviser {adv}{period}\n{question}")
        }
        _ => question.to_string(),
    }
}

fn route(s: &Sections, question: &str) -> String {
    let cands = candidates(s.get("candidates").unwrap_or(""));
    match s.get("stage").map(str::trim) {
        Some("table") => best_table(question, &cands).unwrap_or("none").to_string(),
        _ => {
            let names: Vec<String> = cands.into_iter().map(|(n, _)| n).collect();
            let agents = choose_agents(question, &names);
            if agents.is_empty() {
                "none".into()
            } else {
                agents.join(", ")
            }
        }
    }
}

/// Route sequence `AGENT/table` for the given agents, tables drawn from the
/// `[tables]` section lines of the form `AGENT/table_id: description`.
fn routes_for(question: &str, agents: &[&str], tables: &[(String, String)], shift: usize) -> Vec<String> {
    let q = content_stems(&mask_identifiers(question));
    agents
        .iter()
        .filter_map(|agent| {
            let prefix = format!("{agent}/");
            let own: Vec<(String, String)> = tables
                .iter()
                .filter(|(n, _)| n.starts_with(&prefix))
                .map(|(n, d)| (n[prefix.len()..].to_string(), d.clone()))
                .collect();
            let ranked = ranked_tables(&q, &own);
            if ranked.is_empty() {
                return None;
            }
            Some(format!("{agent}/{}", ranked[shift.min(ranked.len() - 1)].0))
        })
        .collect()
}

fn swarm(s: &Sections, question: &str) -> String {
    let agents: Vec<String> =
        candidates(s.get("agents").unwrap_or("")).into_iter().map(|(n, _)| n).collect();
    let tables = candidates(s.get("tables").unwrap_or(""));
    let variation = s.get("variation").unwrap_or("");
    let round = s.get("round").unwrap_or("0").trim();
    let h = fnv(&[variation, question, round]);
    let roll = h % 100;

    let history: Vec<&str> = s
        .get("history")
        .unwrap_or("")
        .lines()
        .filter_map(|l| l.split_once("ROUTE:").map(|(_, r)| r.split("REASON:").next().unwrap_or("").trim()))
        .collect();
    if !history.is_empty() && roll < 80 {
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &history {
            *votes.entry(r).or_default() += 1;
        }
        let best = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
        return format!(
            "ROUTE: {}\nREASON: {} of {} earlier proposals agree on this route",
            best.0,
            best.1,
            history.len()
        );
    }

    let mut chosen = choose_agents(question, &agents);
    let ranked = ranked_agents(question, &agents);
    let mut shift = 0;
    let mut reason = "keywords point to this filing";
    if roll < 20 && !chosen.is_empty() {
        let alt = ranked
            .iter()
            .find(|a| !chosen.contains(a))
            .copied()
            .unwrap_or(AGENTS[(h / 100) as usize % AGENTS.len()]);
        let last = chosen.len() - 1;
        chosen[last] = alt;
        reason = "the persona of a neighbouring filing also fits the wording";
    } else if roll < 35 {
        shift = 1;
        reason = "a sibling table covers part of the requested fields";
    }
    let routes = routes_for(question, &chosen, &tables, shift);
    if routes.is_empty() {
        return "ROUTE: none\nREASON: no filing matches the question".into();
    }
    format!("ROUTE: {}\nREASON: {reason}", routes.join(", "))
}

/// Jaccard similarity of content stems with identifiers masked.
fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn substitute(value: &mut Value, map: &BTreeMap<String, String>) {
    match value {
        Value::String(s) => {
            if let Some(r) = map.get(s.as_str()) {
                *s = r.clone();
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| substitute(v, map)),
        Value::Object(obj) => obj.values_mut().for_each(|v| substitute(v, map)),
        _ => {}
    }
}

/// Few-shot planning: copy the most similar exemplar plan and rebind its
/// identifiers to the question's identifiers class by class, in order.
fn plan(s: &Sections, question: &str) -> String {
    let q = content_stems(&mask_identifiers(question));
    let mut best: Option<(f64, &str, &str)> = None;
    for ex in s.all("example") {
        let Some((ex_q, ex_plan)) = ex.split_once("\nplan:") else { continue };
        let ex_q = ex_q.trim_start_matches("question:").trim();
        let score = jaccard(&q, &content_stems(&mask_identifiers(ex_q)));
        if best.is_none_or(|(b, _, _)| score > b) {
            best = Some((score, ex_q, ex_plan.trim()));
        }
    }
    let Some((_, ex_q, ex_plan)) = best else { return "no plan".into() };
    let Ok(mut plan) = serde_json::from_str::<Value>(ex_plan) else { return ex_plan.to_string() };
    let theirs = identifiers(ex_q);
    let ours = identifiers(question);
    let mut map = BTreeMap::new();
    for class in ["manager", "adviser", "fund", "trust", "date", "code"] {
        let a = theirs.iter().filter(|(c, _)| *c == class);
        let b = ours.iter().filter(|(c, _)| *c == class);
        for ((_, from), (_, to)) in a.zip(b) {
            map.entry(from.clone()).or_insert_with(|| to.clone());
        }
    }
    substitute(&mut plan, &map);
    plan.to_string()
}

/// Retargets retrieve steps whose table matched nothing to a sibling table of
/// the same agent that matched the same constraints.
fn replan(s: &Sections) -> String {
    let raw = s.get("plan").unwrap_or("").trim();
    let Ok(mut plan) = serde_json::from_str::<Value>(raw) else { return raw.to_string() };
    // step -> [(agent, table, matched)]
    let mut findings: BTreeMap<String, Vec<(String, String, u64)>> = BTreeMap::new();
    for line in s.get("findings").unwrap_or("").lines() {
        let kv: BTreeMap<&str, &str> =
            line.split_whitespace().filter_map(|w| w.split_once('=')).collect();
        if let (Some(step), Some(agent), Some(table), Some(m)) =
            (kv.get("step"), kv.get("agent"), kv.get("table"), kv.get("matched"))
        {
            findings.entry(step.to_string()).or_default().push((
                agent.to_string(),
                table.to_string(),
                m.parse().unwrap_or(0),
            ));
        }
    }
    if let Some(steps) = plan.get_mut("steps").and_then(Value::as_array_mut) {
        for step in steps {
            if step.get("op").and_then(Value::as_str) != Some("retrieve") {
                continue;
            }
            let id = step.get("id").and_then(Value::as_str).unwrap_or("").to_string();
            let table = step.get("table").and_then(Value::as_str).unwrap_or("").to_string();
            let Some(rows) = findings.get(&id) else { continue };
            let own = rows.iter().find(|(_, t, _)| *t == table);
            let Some((agent, _, 0)) = own else { continue };
            if let Some((_, sibling, _)) =
                rows.iter().find(|(a, t, m)| a == agent && *t != table && *m > 0)
            {
                step["table"] = Value::String(sibling.clone());
            }
        }
    }
    plan.to_string()
}

const REPHRASINGS: [(&str, &[&str]); 8] = [
    ("Get the", &["Retrieve the", "Find the", "Show me the", "Report the"]),
    ("Get all", &["List all", "Find every one of the", "Show all", "Identify all"]),
    ("reported by", &["filed by", "disclosed by"]),
    ("adviser", &["advisor", "adviser firm"]),
    ("total", &["overall", "combined"]),
    ("managed by", &["run by", "overseen by"]),
    ("positions", &["holdings", "positions held"]),
    ("each", &["every"]),
];

/// Seeded synonym substitution and clause reordering. Identifiers, dates and
/// category codes are never touched.
fn variegate(s: &Sections, question: &str) -> String {
    let seed = s.get("seed").unwrap_or("0");
    let variant = s.get("variant").unwrap_or("0");
    let mut h = fnv(&[seed, variant, question]);
    let mut out = question.trim_end_matches(['.', '?']).to_string();
    for (from, tos) in REPHRASINGS {
        h = h.rotate_left(7) ^ fnv(&[from, variant]);
        if !h.is_multiple_of(3) && has_phrase(&out, from) {
            let to = tos[(h / 3) as usize % tos.len()];
            out = out.replacen(from, to, 1);
        }
    }
    // move a trailing "for period <date>" clause to the front
    let reorder = (h >> 17).is_multiple_of(2);
    if let Some(pos) = out.rfind(" for period ") {
        let clause = out[pos + 1..].to_string();
        let head = out[..pos].to_string();
        let date = clause.trim_start_matches("for period ").to_string();
        out = if reorder {
            let mut chars = head.chars();
            let first = chars.next().map(|c| c.to_lowercase().to_string()).unwrap_or_default();
            format!("As of {date}, {first}{}", chars.as_str())
        } else {
            format!("{head} in the filing period ending {date}")
        };
    }
    if out == question.trim_end_matches(['.', '?']) {
        out = format!("Please {}", lower_first(&out));
    }
    out.push('.');
    out
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::prompt;

    fn ask(tag: &str, sections: Sections) -> String {
        let req = ChatRequest::new(tag, prompt::system(tag), sections.render());
        DeterministicProvider::new().complete(&req).unwrap().content
    }

    fn agents_section() -> String {
        AGENTS.iter().map(|a| format!("{a}: persona")).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn money_market_routes_to_nmfp() {
        let s = Sections::new()
            .with("stage", "agent")
            .with("question", "What is the money market fund yield for FUND-0003?")
            .with("candidates", agents_section());
        assert_eq!(ask("route", s), "NMFP");
    }

    #[test]
    fn adviser_scoped_fund_data_goes_through_census() {
        let s = Sections::new()
            .with("stage", "agent")
            .with("question", "Get the country level AUM of funds managed by adviser ADV-0002 for period 2024-03-31")
            .with("candidates", agents_section());
        assert_eq!(ask("route", s), "NCEN, NPORT");
        let d = decompose("Get the derivative notional per counterparty for funds managed by adviser ADV-0001 for period 2024-03-31");
        assert_eq!(d.lines().count(), 2);
        assert!(d.starts_with("Get all funds managed by investment adviser ADV-0001 for period 2024-03-31"));
        assert_eq!(decompose("Get the regulatory AUM for adviser ADV-0001"), "Get the regulatory AUM for adviser ADV-0001");
    }

    #[test]
    fn table_stage_uses_description_overlap() {
        let s = Sections::new()
            .with("stage", "table")
            .with("question", "Get all prime brokers used by adviser ADV-0004")
            .with(
                "candidates",
                "adv_entity: adviser name, regulatory aum, employees\nadv_private_funds: private fund name, prime broker, custodian",
            );
        assert_eq!(ask("route", s), "adv_private_funds");
    }

    #[test]
    fn classification_rules() {
        assert!(classify("Get the regulatory AUM for adviser ADV-0001").starts_with("non_"));
        assert!(classify("tell me something nice").starts_with("hallucinatory"));
        assert!(classify("regulatory AUM for adviser ADV-0001").starts_with("hallucinatory"));
        assert!(classify(&rewrite("regulatory AUM for adviser ADV-0001")).starts_with("non_"));
    }

    #[test]
    fn plan_rebinds_identifiers_by_class() {
        let ex = r#"question: Get the regulatory AUM for adviser ADV-0001 for period 2023-12-31
plan: {"steps":[{"id":"s1","op":"retrieve","agent":"ADV","table":"adv_entity","filters":[{"field":"crd_number","op":"eq","value":"ADV-0001"},{"field":"period","op":"eq","value":"2023-12-31"}]}]}"#;
        let other = r#"question: Get all prime brokers for adviser ADV-0001
plan: {"steps":[]}"#;
        let s = Sections::new()
            .with("question", "Get the regulatory AUM for adviser ADV-0042 for period 2024-03-31")
            .with("example", other)
            .with("example", ex);
        let out: Value = serde_json::from_str(&ask("plan", s)).unwrap();
        let filters = &out["steps"][0]["filters"];
        assert_eq!(filters[0]["value"], "ADV-0042");
        assert_eq!(filters[1]["value"], "2024-03-31");
    }

    #[test]
    fn replan_retargets_empty_retrievals() {
        let plan = r#"{"steps":[{"id":"s1","op":"retrieve","agent":"NPORT","table":"nport_holdings","filters":[]}]}"#;
        let s = Sections::new().with("plan", plan).with(
            "findings",
            "step=s1 agent=NPORT table=nport_holdings matched=0\nstep=s1 agent=NPORT table=nport_baskets matched=3",
        );
        let out: Value = serde_json::from_str(&ask("replan", s)).unwrap();
        assert_eq!(out["steps"][0]["table"], "nport_baskets");
    }

    #[test]
    fn variegation_keeps_identifiers_and_is_seeded() {
        let q = "Get all holdings with asset category EC for fund FUND-0007 for period 2024-03-31";
        let make = |seed: &str, v: &str| {
            ask("variegate", Sections::new().with("question", q).with("variant", v).with("seed", seed))
        };
        let a = make("1", "1");
        assert_eq!(a, make("1", "1"));
        assert_ne!(a, q);
        for v in ["1", "2", "3"] {
            let out = make("5", v);
            for id in ["EC", "FUND-0007", "2024-03-31"] {
                assert!(out.contains(id), "{out}");
            }
        }
    }

    #[test]
    fn swarm_reply_has_route_and_reason() {
        let s = Sections::new()
            .with("variation", "abc")
            .with("round", "0")
            .with("question", "Get the regulatory AUM for adviser ADV-0001")
            .with("agents", agents_section())
            .with("tables", "ADV/adv_entity: regulatory aum adviser\nADV/adv_clients: client type");
        let out = ask("swarm", s);
        assert!(out.starts_with("ROUTE: "), "{out}");
        assert!(out.contains("\nREASON: "));
    }
}
