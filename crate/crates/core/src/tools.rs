//! Machine-readable tool documentation: loading, indexing, and call validation.
//!
//! The accepted document shape is a JSON array of tool objects with `name`,
//! `description`, and `parameters` (an object with `properties` and
//! `required`), the shape used by common function-calling corpora. See
//! `docs/formats.md` in the repository for the full reference with examples.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::grammar::{FunctionCall, Number, Value};

/// Closed set of parameter types. Unknown schema type strings map to `Any`
/// with a load warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeTag {
    String,
    Integer,
    Float,
    Boolean,
    Array,
    Object,
    Any,
}

impl TypeTag {
    /// Mapping from schema type strings to the closed set. The table is part
    /// of the documented format contract.
    pub fn from_schema_str(s: &str) -> Option<TypeTag> {
        Some(match s {
            "string" | "str" | "enum" => TypeTag::String,
            "integer" | "int" | "long" => TypeTag::Integer,
            "float" | "number" | "double" => TypeTag::Float,
            "boolean" | "bool" => TypeTag::Boolean,
            "array" | "list" | "tuple" => TypeTag::Array,
            "object" | "dict" | "map" => TypeTag::Object,
            "any" => TypeTag::Any,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TypeTag::String => "string",
            TypeTag::Integer => "integer",
            TypeTag::Float => "float",
            TypeTag::Boolean => "boolean",
            TypeTag::Array => "array",
            TypeTag::Object => "dict",
            TypeTag::Any => "any",
        }
    }

    fn accepts(&self, value: &Value) -> bool {
        match (self, value) {
            (TypeTag::Any, _) => true,
            (TypeTag::String, Value::Str(_)) => true,
            (TypeTag::Integer, Value::Number(n)) => n.is_integer_lexeme(),
            // Integer literals satisfy float-typed params; not the reverse.
            (TypeTag::Float, Value::Number(_)) => true,
            (TypeTag::Boolean, Value::Bool(_)) => true,
            (TypeTag::Array, Value::List(_)) => true,
            (TypeTag::Object, Value::Mapping(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One declared parameter of a tool.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub type_tag: TypeTag,
    pub description: String,
    pub required: bool,
    /// Declared default; absent for required params.
    pub default: Option<Value>,
    /// Allowed values, all conforming to `type_tag`.
    pub enum_values: Option<Vec<Value>>,
}

/// One tool's documentation: name, description, ordered parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// A name-indexed, immutable set of tools. Duplicate names are a load error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolSet {
    tools: Vec<ToolSpec>,
}

impl ToolSet {
    pub fn new(tools: Vec<ToolSpec>) -> Result<Self, ToolLoadError> {
        for (i, tool) in tools.iter().enumerate() {
            if tools[..i].iter().any(|t| t.name == tool.name) {
                return Err(ToolLoadError::DuplicateTool(tool.name.clone()));
            }
        }
        Ok(ToolSet { tools })
    }

    pub fn empty() -> Self {
        ToolSet::default()
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.iter()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }
}

/// Non-fatal observation recorded while loading a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub tool: String,
    pub field: String,
    pub message: String,
}

/// Result of [`load_tools`]: the set plus any warnings.
#[derive(Debug, Clone)]
pub struct LoadedTools {
    pub tools: ToolSet,
    pub warnings: Vec<LoadWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolLoadError {
    /// The document is not valid JSON of the expected shape.
    Json(String),
    /// A tool violates the format contract; names the tool and field.
    Format { tool: String, field: String, message: String },
    DuplicateTool(String),
}

impl fmt::Display for ToolLoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToolLoadError::Json(msg) => write!(f, "invalid tool document: {msg}"),
            ToolLoadError::Format { tool, field, message } => {
                write!(f, "tool `{tool}`, field `{field}`: {message}")
            }
            ToolLoadError::DuplicateTool(name) => write!(f, "duplicate tool name `{name}`"),
        }
    }
}

impl core::error::Error for ToolLoadError {}

/// Loads a tool document (JSON text) into a [`ToolSet`].
///
/// Property order from the source document is preserved. Unknown type strings
/// map to [`TypeTag::Any`] and produce a warning rather than an error.
pub fn load_tools(document: &str) -> Result<LoadedTools, ToolLoadError> {
    let raw: Vec<RawTool> =
        serde_json::from_str(document).map_err(|e| ToolLoadError::Json(e.to_string()))?;

    let mut warnings = Vec::new();
    let mut tools = Vec::with_capacity(raw.len());
    for (index, tool) in raw.into_iter().enumerate() {
        let name = tool.name.clone().ok_or_else(|| ToolLoadError::Format {
            tool: format!("#{index}"),
            field: String::from("name"),
            message: String::from("missing tool name"),
        })?;
        tools.push(build_tool(name, tool, &mut warnings)?);
    }
    Ok(LoadedTools { tools: ToolSet::new(tools)?, warnings })
}

fn build_tool(
    name: String,
    raw: RawTool,
    warnings: &mut Vec<LoadWarning>,
) -> Result<ToolSpec, ToolLoadError> {
    let format_err = |field: &str, message: String| ToolLoadError::Format {
        tool: name.clone(),
        field: field.to_string(),
        message,
    };

    let parameters = raw.parameters.unwrap_or_default();
    let required = parameters.required;
    for req in &required {
        if !parameters.properties.0.iter().any(|(p, _)| p == req) {
            return Err(format_err(
                "required",
                format!("required parameter `{req}` is not declared in properties"),
            ));
        }
    }

    let mut params = Vec::with_capacity(parameters.properties.0.len());
    for (param_name, prop) in parameters.properties.0 {
        if params.iter().any(|p: &ParamSpec| p.name == param_name) {
            return Err(format_err(&param_name, String::from("duplicate parameter name")));
        }
        let type_tag = match prop.type_name {
            None => {
                warnings.push(LoadWarning {
                    tool: name.clone(),
                    field: param_name.clone(),
                    message: String::from("missing type, treated as `any`"),
                });
                TypeTag::Any
            }
            Some(ref s) => match TypeTag::from_schema_str(s) {
                Some(tag) => tag,
                None => {
                    warnings.push(LoadWarning {
                        tool: name.clone(),
                        field: param_name.clone(),
                        message: format!("unknown type `{s}`, treated as `any`"),
                    });
                    TypeTag::Any
                }
            },
        };
        let is_required = required.contains(&param_name);
        let default = prop.default.map(json_to_value);
        if is_required && default.is_some() {
            return Err(format_err(
                &param_name,
                String::from("required parameter must not declare a default"),
            ));
        }
        let enum_values = match prop.enum_values {
            None => None,
            Some(raw_values) => {
                let values: Vec<Value> = raw_values.into_iter().map(json_to_value).collect();
                for v in &values {
                    if !type_tag.accepts(v) {
                        return Err(format_err(
                            &param_name,
                            format!("enum value does not conform to declared type `{type_tag}`"),
                        ));
                    }
                }
                Some(values)
            }
        };
        params.push(ParamSpec {
            name: param_name,
            type_tag,
            description: prop.description.unwrap_or_default(),
            required: is_required,
            default,
            enum_values,
        });
    }

    Ok(ToolSpec { name, description: raw.description.unwrap_or_default(), params })
}

fn json_to_value(json: serde_json::Value) -> Value {
    match json {
        serde_json::Value::Null => Value::Null,
        serde_json::Value::Bool(b) => Value::Bool(b),
        serde_json::Value::Number(n) => {
            // Lexemes are normalized through the JSON parser's rendering.
            Value::Number(Number::new(n.to_string()).expect("JSON number is a valid lexeme"))
        }
        serde_json::Value::String(s) => Value::Str(s),
        serde_json::Value::Array(items) => Value::List(items.into_iter().map(json_to_value).collect()),
        serde_json::Value::Object(entries) => {
            Value::Mapping(entries.into_iter().map(|(k, v)| (k, json_to_value(v))).collect())
        }
    }
}

#[derive(Deserialize)]
struct RawTool {
    name: Option<String>,
    description: Option<String>,
    parameters: Option<RawParameters>,
}

#[derive(Deserialize, Default)]
struct RawParameters {
    #[serde(default)]
    properties: OrderedProps,
    #[serde(default)]
    required: Vec<String>,
}

#[derive(Deserialize)]
struct RawProp {
    #[serde(rename = "type")]
    type_name: Option<String>,
    description: Option<String>,
    default: Option<serde_json::Value>,
    #[serde(rename = "enum")]
    enum_values: Option<Vec<serde_json::Value>>,
}

/// `properties` deserialized as ordered pairs so the source declaration order
/// survives into `ToolSpec.params` (the default JSON map would sort keys).
#[derive(Default)]
struct OrderedProps(Vec<(String, RawProp)>);

impl<'de> Deserialize<'de> for OrderedProps {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PropsVisitor;
        impl<'de> Visitor<'de> for PropsVisitor {
            type Value = OrderedProps;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a properties object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, RawProp>()? {
                    entries.push((key, value));
                }
                Ok(OrderedProps(entries))
            }
        }
        deserializer.deserialize_map(PropsVisitor)
    }
}

/// One problem found by [`validate_call`]. Findings are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    UnknownFunction { name: String },
    MissingRequired { tool: String, param: String },
    UnknownParam { tool: String, param: String },
    TypeMismatch { tool: String, param: String, expected: TypeTag },
    EnumViolation { tool: String, param: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::UnknownFunction { name } => write!(f, "unknown function `{name}`"),
            Finding::MissingRequired { tool, param } => {
                write!(f, "`{tool}`: missing required parameter `{param}`")
            }
            Finding::UnknownParam { tool, param } => {
                write!(f, "`{tool}`: parameter `{param}` is not declared")
            }
            Finding::TypeMismatch { tool, param, expected } => {
                write!(f, "`{tool}`: parameter `{param}` does not match declared type `{expected}`")
            }
            Finding::EnumViolation { tool, param } => {
                write!(f, "`{tool}`: parameter `{param}` is not one of the allowed values")
            }
        }
    }
}

/// Schema-validation outcome; an empty report means the call is schema-valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks one call against the tool documentation: unknown function, missing
/// required params, undeclared params, type mismatches, enum violations.
pub fn validate_call(call: &FunctionCall, tools: &ToolSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    let Some(tool) = tools.get(&call.name) else {
        report.findings.push(Finding::UnknownFunction { name: call.name.clone() });
        return report;
    };

    for param in &tool.params {
        if param.required && call.arg(&param.name).is_none() {
            report.findings.push(Finding::MissingRequired {
                tool: tool.name.clone(),
                param: param.name.clone(),
            });
        }
    }

    for (key, value) in &call.args {
        let Some(param) = tool.param(key) else {
            report.findings.push(Finding::UnknownParam {
                tool: tool.name.clone(),
                param: key.clone(),
            });
            continue;
        };
        if !param.type_tag.accepts(value) {
            report.findings.push(Finding::TypeMismatch {
                tool: tool.name.clone(),
                param: key.clone(),
                expected: param.type_tag,
            });
            continue;
        }
        if let Some(allowed) = &param.enum_values {
            if !allowed.iter().any(|a| plain_value_eq(a, value)) {
                report.findings.push(Finding::EnumViolation {
                    tool: tool.name.clone(),
                    param: key.clone(),
                });
            }
        }
    }
    report
}

/// Plain structural equality with integer/float numeric unification, used for
/// enum membership. Policy-aware comparison lives in `equivalence`.
fn plain_value_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            x.lexeme() == y.lexeme() || x.as_f64() == y.as_f64()
        }
        (Value::List(xs), Value::List(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| plain_value_eq(x, y))
        }
        (Value::Mapping(xs), Value::Mapping(ys)) => {
            xs.len() == ys.len()
                && xs.iter().all(|(k, x)| {
                    ys.iter().any(|(k2, y)| k == k2 && plain_value_eq(x, y))
                })
        }
        _ => a == b,
    }
}

/// Serializes a tool set into the JSON block embedded in prompts: fixed key
/// order, 2-space indentation, property order as loaded. Byte-stable so that
/// prompt fingerprints are reproducible.
pub fn tools_prompt_json(tools: &ToolSet) -> String {
    let mut out = String::new();
    if tools.is_empty() {
        out.push_str("[]");
        return out;
    }
    out.push_str("[\n");
    for (i, tool) in tools.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        out.push_str("  {\n    \"name\": ");
        push_json_string(&mut out, &tool.name);
        out.push_str(",\n    \"description\": ");
        push_json_string(&mut out, &tool.description);
        out.push_str(",\n    \"parameters\": {\n      \"type\": \"dict\",\n      \"properties\": {");
        for (j, param) in tool.params.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str("\n        ");
            push_json_string(&mut out, &param.name);
            out.push_str(": {\n          \"type\": ");
            push_json_string(&mut out, param.type_tag.as_str());
            out.push_str(",\n          \"description\": ");
            push_json_string(&mut out, &param.description);
            if let Some(values) = &param.enum_values {
                out.push_str(",\n          \"enum\": [");
                for (k, v) in values.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    push_json_value(&mut out, v);
                }
                out.push(']');
            }
            if let Some(default) = &param.default {
                out.push_str(",\n          \"default\": ");
                push_json_value(&mut out, default);
            }
            out.push_str("\n        }");
        }
        if !tool.params.is_empty() {
            out.push_str("\n      ");
        }
        out.push_str("},\n      \"required\": [");
        let required: Vec<&ParamSpec> = tool.params.iter().filter(|p| p.required).collect();
        for (k, param) in required.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            push_json_string(&mut out, &param.name);
        }
        out.push_str("]\n    }\n  }");
    }
    out.push_str("\n]");
    out
}

fn push_json_string(out: &mut String, s: &str) {
    match serde_json::to_string(s) {
        Ok(escaped) => out.push_str(&escaped),
        Err(_) => out.push_str("\"\""),
    }
}

fn push_json_value(out: &mut String, value: &Value) {
    match value {
        Value::Str(s) => push_json_string(out, s),
        Value::Number(n) => out.push_str(n.lexeme()),
        Value::Bool(true) => out.push_str("true"),
        Value::Bool(false) => out.push_str("false"),
        Value::Null => out.push_str("null"),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_json_value(out, item);
            }
            out.push(']');
        }
        Value::Mapping(entries) => {
            out.push('{');
            for (i, (key, item)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_json_string(out, key);
                out.push_str(": ");
                push_json_value(out, item);
            }
            out.push('}');
        }
        // Calls cannot occur in schema data; fall back to their text form.
        Value::Call(_) => push_json_string(out, &crate::grammar::render_value(value)),
    }
}
