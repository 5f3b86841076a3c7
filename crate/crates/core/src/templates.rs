//! Reasoning-template registry and chat message types.
//!
//! The three shipped templates (`detail`, `claude`, `simple`) are embedded
//! verbatim from the data files under `templates/`; their bodies are
//! byte-stable and checksum-pinned in tests. Custom templates can be added by
//! id, which is how ablation runs swap curricula without code changes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub const DETAIL_ID: &str = "detail";
pub const CLAUDE_ID: &str = "claude";
pub const SIMPLE_ID: &str = "simple";

const DETAIL_BODY: &str = include_str!("../templates/detail.txt");
const CLAUDE_BODY: &str = include_str!("../templates/claude.txt");
const SIMPLE_BODY: &str = include_str!("../templates/simple.txt");

/// One guided reasoning template: an id and its verbatim body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub body: String,
}

impl Template {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        Template { id: id.into(), body: body.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTemplate {
    pub id: String,
}

impl fmt::Display for UnknownTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown template `{}`", self.id)
    }
}

impl core::error::Error for UnknownTemplate {}

/// Read-only after startup; id-indexed.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
}

impl TemplateRegistry {
    /// Registry holding the three shipped templates.
    pub fn builtin() -> Self {
        let mut registry = TemplateRegistry { templates: BTreeMap::new() };
        registry.insert(Template::new(DETAIL_ID, DETAIL_BODY));
        registry.insert(Template::new(CLAUDE_ID, CLAUDE_BODY));
        registry.insert(Template::new(SIMPLE_ID, SIMPLE_BODY));
        registry
    }

    /// Inserts or replaces a template under its id.
    pub fn insert(&mut self, template: Template) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Result<&Template, UnknownTemplate> {
        self.templates.get(id).ok_or_else(|| UnknownTemplate { id: id.to_string() })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

/// One chat message. Content is expected to be non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// Conversation shorthand used by prompt builders: system + user.
pub type Messages = Vec<Message>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_has_three_templates() {
        let registry = TemplateRegistry::builtin();
        let ids: Vec<&str> = registry.ids().collect();
        assert_eq!(ids, ["claude", "detail", "simple"]);
    }

    #[test]
    fn detail_has_seven_steps_with_pinned_first_and_last() {
        let registry = TemplateRegistry::builtin();
        let body = &registry.get(DETAIL_ID).unwrap().body;
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 7);
        for (i, line) in lines.iter().enumerate() {
            assert!(line.starts_with(&alloc::format!("{}. ", i + 1)), "bad step: {line}");
        }
        assert!(lines[0].contains("Identify which function or set of functions"));
        assert_eq!(
            lines[6],
            "7. Revalidate the composed functions, ensuring they satisfy both documentation and the user's query."
        );
    }

    #[test]
    fn simple_begins_as_pinned() {
        let registry = TemplateRegistry::builtin();
        let body = &registry.get(SIMPLE_ID).unwrap().body;
        assert!(body.starts_with("First, identify the appropriate tool(s)"));
    }

    #[test]
    fn unknown_template_errors_with_id() {
        let registry = TemplateRegistry::builtin();
        let err = registry.get("bogus").unwrap_err();
        assert_eq!(err.id, "bogus");
    }

    #[test]
    fn custom_templates_can_be_added() {
        let mut registry = TemplateRegistry::builtin();
        registry.insert(Template::new("terse", "Just call the function."));
        assert_eq!(registry.get("terse").unwrap().body, "Just call the function.");
    }
}
