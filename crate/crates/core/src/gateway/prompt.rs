//! Prompt layout shared by every agent.
//!
//! User messages are a sequence of `[name]` headed sections. Providers that
//! reason over prompts (the deterministic provider, fixture tooling) parse the
//! same layout back with [`Sections::parse`]. System prompts are versioned
//! text assets.

/// Version of the prompt assets; recorded in reports.
pub const PROMPTS_VERSION: &str = "1.0";

const ROUTE_AGENT: &str = include_str!("../../assets/prompts/route_agent.txt");
const ROUTE_TABLE: &str = include_str!("../../assets/prompts/route_table.txt");
const SWARM: &str = include_str!("../../assets/prompts/swarm_member.txt");
const CLASSIFY: &str = include_str!("../../assets/prompts/classify.txt");
const REWRITE: &str = include_str!("../../assets/prompts/rewrite.txt");
const DECOMPOSE: &str = include_str!("../../assets/prompts/decompose.txt");
const PLAN: &str = include_str!("../../assets/prompts/plan.txt");
const REPLAN: &str = include_str!("../../assets/prompts/replan.txt");
const VARIEGATE: &str = include_str!("../../assets/prompts/variegate.txt");

/// System prompt for a purpose tag. Unknown tags get an empty prompt.
pub fn system(tag: &str) -> &'static str {
    match tag {
        "route_agent" => ROUTE_AGENT,
        "route_table" => ROUTE_TABLE,
        "swarm" => SWARM,
        "classify" => CLASSIFY,
        "rewrite" => REWRITE,
        "decompose" => DECOMPOSE,
        "plan" => PLAN,
        "replan" => REPLAN,
        "variegate" => VARIEGATE,
        _ => "",
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sections {
    entries: Vec<(String, String)>,
}

impl Sections {
    pub fn new() -> Sections {
        Sections::default()
    }

    pub fn with(mut self, name: &str, body: impl Into<String>) -> Sections {
        self.push(name, body);
        self
    }

    pub fn push(&mut self, name: &str, body: impl Into<String>) {
        self.entries.push((name.to_string(), body.into()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, body) in &self.entries {
            out.push('[');
            out.push_str(name);
            out.push_str("]\n");
            out.push_str(body.trim_end());
            out.push('\n');
        }
        out
    }

    /// Splits text on `[name]` header lines. Text before the first header is
    /// dropped.
    pub fn parse(text: &str) -> Sections {
        let mut entries: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let t = line.trim();
            let is_header = t.len() > 2
                && t.starts_with('[')
                && t.ends_with(']')
                && t[1..t.len() - 1]
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c == '_' || c.is_ascii_digit());
            if is_header {
                entries.push((t[1..t.len() - 1].to_string(), String::new()));
            } else if let Some((_, body)) = entries.last_mut() {
                if !body.is_empty() {
                    body.push('\n');
                }
                body.push_str(line);
            }
        }
        for (_, body) in &mut entries {
            *body = body.trim_end().to_string();
        }
        Sections { entries }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }

    pub fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(n, _)| n == name).map(|(_, b)| b.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let s = Sections::new()
            .with("question", "What is [x]?")
            .with("candidates", "NPORT: holdings\nADV: advisers")
            .with("example", "one")
            .with("example", "two");
        let back = Sections::parse(&s.render());
        assert_eq!(back, s);
        assert_eq!(back.get("question"), Some("What is [x]?"));
        assert_eq!(back.all("example").collect::<Vec<_>>(), ["one", "two"]);
    }

    #[test]
    fn every_tag_has_a_system_prompt() {
        for tag in [
            "route_agent", "route_table", "swarm", "classify", "rewrite", "decompose", "plan",
            "replan", "variegate",
        ] {
            assert!(!system(tag).trim().is_empty(), "{tag}");
        }
    }
}
