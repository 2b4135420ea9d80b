use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("rule {line} ({pattern:?}): {message}")]
pub struct RuleError {
    pub line: usize,
    pub pattern: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CanonicalRule {
    pattern: Regex,
    canonical_name: String,
}

impl CanonicalRule {
    pub fn new(pattern: &str, canonical_name: &str) -> Result<Self, regex::Error> {
        Ok(Self {
            pattern: Regex::new(pattern)?,
            canonical_name: canonical_name.to_string(),
        })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    pub fn matches(&self, raw: &str) -> bool {
        self.pattern.is_match(raw)
    }
}

/// Load a rule file: one `pattern<TAB>canonical_name` per line, `#` for
/// comments. Errors list the offending rule.
pub fn parse_rules(text: &str) -> Result<Vec<CanonicalRule>, RuleError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |pattern: &str, message: String| RuleError {
            line: idx + 1,
            pattern: pattern.to_string(),
            message,
        };
        let Some((pattern, name)) = line.split_once('\t') else {
            return Err(err(line, "expected pattern<TAB>name".into()));
        };
        let name = name.trim();
        if name.is_empty() {
            return Err(err(pattern, "empty canonical name".into()));
        }
        rules.push(CanonicalRule::new(pattern, name).map_err(|e| err(pattern, e.to_string()))?);
    }
    Ok(rules)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canonical {
    Matched(String),
    /// No rule matched and lenient mode let the raw phrase through.
    PassThrough(String),
    Rejected,
}

impl Canonical {
    pub fn name(&self) -> Option<&str> {
        match self {
            Canonical::Matched(n) | Canonical::PassThrough(n) => Some(n),
            Canonical::Rejected => None,
        }
    }
}

pub fn canonicalize(raw: &str, rules: &[CanonicalRule], strict: bool) -> Canonical {
    match rules.iter().find(|r| r.matches(raw)) {
        Some(rule) => Canonical::Matched(rule.canonical_name.clone()),
        None if strict => Canonical::Rejected,
        None => Canonical::PassThrough(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_RULES;

    #[test]
    fn brand_phrases_map_to_names() {
        let rules = vec![CanonicalRule::new("coca.?cola", "coke").unwrap()];
        assert_eq!(
            canonicalize("coca cola 330ml can", &rules, true),
            Canonical::Matched("coke".into())
        );
        assert_eq!(
            canonicalize("mystery juice", &rules, false),
            Canonical::PassThrough("mystery juice".into())
        );
        assert_eq!(canonicalize("mystery juice", &rules, true), Canonical::Rejected);
    }

    #[test]
    fn default_rules_map_every_raw_phrase() {
        let rules = parse_rules(DEFAULT_RULES).unwrap();
        let config = crate::config::TestbedConfig::default();
        for item in &config.items {
            let hits: Vec<_> = rules.iter().filter(|r| r.matches(&item.raw_phrase)).collect();
            assert_eq!(hits.len(), 1, "{} matched {} rules", item.raw_phrase, hits.len());
            assert_eq!(
                canonicalize(&item.raw_phrase, &rules, true).name(),
                Some(item.name.as_str())
            );
        }
    }

    #[test]
    fn bad_rule_is_reported() {
        let err = parse_rules("ok\tfine\n(unclosed\tbad\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.pattern, "(unclosed");
        assert!(parse_rules("no tab here\n").is_err());
    }
}
