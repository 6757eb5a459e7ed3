use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::FewShotExample;
use crate::corpus::TriggerType;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    fn new(role: Role, content: String) -> Self {
        Self { role, content }
    }
}

/// Prompt wording. Placeholders are written `{name}`; `{{` and `}}` produce
/// literal braces.
///
/// Available placeholders: `{types}` (the four type names), `{keys}` (the
/// JSON keys), `{schema}` (the answer shape) and, in `example_format` only,
/// `{text}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system_text: String,
    pub task_instruction: String,
    pub example_format: String,
    pub assertion_variant: bool,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_text: "You are a clinical information extraction assistant. You read Spanish clinical \
                          case reports and find mentions of toxic habits, that is, substance use or abuse."
                .into(),
            task_instruction: "Extract every trigger phrase that refers to a toxic habit and group the \
                               phrases by type: {types}. Copy each phrase exactly as written in the text, \
                               keep it as short as possible and do not translate it. Negated habits such \
                               as \"no fumador\" are still triggers. Leave a list empty when the type does \
                               not occur.\n\nAnswer with a JSON object with the keys {keys}. {schema}"
                .into(),
            example_format: "Text:\n{text}".into(),
            assertion_variant: false,
        }
    }
}

impl PromptTemplate {
    pub fn with_assertions() -> Self {
        Self {
            assertion_variant: true,
            ..Self::default()
        }
    }

    fn schema_hint(&self) -> &'static str {
        if self.assertion_variant {
            "Each key holds a list of objects {\"phrase\": string, \"assertion\": \"affirmed\" | \"negated\"}, \
             where the assertion says whether the habit is present or denied."
        } else {
            "Each key holds a list of strings."
        }
    }

    fn fill(&self, template: &str, text: Option<&str>) -> Result<String> {
        let types = "Tobacco, Alcohol, Cannabis and Drug";
        let keys = TriggerType::ALL.map(|t| format!("\"{}\"", t.key())).join(", ");
        substitute(template, |name| match name {
            "types" => Some(types.to_owned()),
            "keys" => Some(keys.clone()),
            "schema" => Some(self.schema_hint().to_owned()),
            "text" => text.map(str::to_owned),
            _ => None,
        })
    }
}

fn substitute(template: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('}') {
            return Err(Error::UnresolvedPlaceholder("}".into()));
        }
        let close = tail
            .find('}')
            .ok_or_else(|| Error::UnresolvedPlaceholder(tail.to_owned()))?;
        let name = &tail[1..close];
        out.push_str(&lookup(name).ok_or_else(|| Error::UnresolvedPlaceholder(name.to_owned()))?);
        rest = &tail[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Builds the message sequence for one section: the system message with the
/// task description, one user/assistant pair per example, then the section.
pub fn render_prompt(
    template: &PromptTemplate,
    examples: &[FewShotExample],
    section_text: &str,
) -> Result<Vec<Message>> {
    let system = format!(
        "{}\n\n{}",
        template.fill(&template.system_text, None)?,
        template.fill(&template.task_instruction, None)?
    );
    let lower = system.to_lowercase();
    if let Some(missing) = TriggerType::ALL.iter().find(|t| !lower.contains(t.key())) {
        return Err(Error::InvalidArgument(format!(
            "prompt template never names the {} type",
            missing.key()
        )));
    }
    let mut messages = vec![Message::new(Role::System, system)];
    for ex in examples {
        messages.push(Message::new(
            Role::User,
            template.fill(&template.example_format, Some(&ex.text))?,
        ));
        messages.push(Message::new(
            Role::Assistant,
            ex.answer(template.assertion_variant).to_string(),
        ));
    }
    messages.push(Message::new(
        Role::User,
        template.fill(&template.example_format, Some(section_text))?,
    ));
    Ok(messages)
}

/// JSON schema for the structured-output constraint.
pub fn response_schema(assertion_variant: bool) -> Value {
    let item = if assertion_variant {
        json!({
            "type": "object",
            "properties": {
                "phrase": { "type": "string" },
                "assertion": { "type": "string", "enum": ["affirmed", "negated"] }
            },
            "required": ["phrase", "assertion"],
            "additionalProperties": false
        })
    } else {
        json!({ "type": "string" })
    };
    let mut properties = serde_json::Map::new();
    for kind in TriggerType::ALL {
        properties.insert(kind.key().to_owned(), json!({ "type": "array", "items": item.clone() }));
    }
    json!({
        "type": "object",
        "properties": properties,
        "required": TriggerType::ALL.map(TriggerType::key),
        "additionalProperties": false
    })
}
