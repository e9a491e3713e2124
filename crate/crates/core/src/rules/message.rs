use super::{Binding, RuleError, Variable};
use crate::graph::TripleSource;

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Splits a template into literal text and `{name}` placeholders.
fn segments(template: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}');
        match close {
            Some(end) if end > 0 && after[..end].chars().all(is_name_char) => {
                if open > 0 {
                    out.push((false, &rest[..open]));
                }
                out.push((true, &after[..end]));
                rest = &after[end + 1..];
            }
            _ => {
                out.push((false, &rest[..=open]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push((false, rest));
    }
    out
}

/// Placeholder names in a message template, in order of appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    segments(template).into_iter().filter(|(p, _)| *p).map(|(_, s)| s.to_string()).collect()
}

/// Substitutes each `{var}` with the bound term's display label.
pub fn render_message<S: TripleSource + ?Sized>(
    template: &str,
    binding: &Binding,
    labels: &S,
) -> Result<String, RuleError> {
    let mut out = String::with_capacity(template.len());
    for (is_placeholder, text) in segments(template) {
        if !is_placeholder {
            out.push_str(text);
            continue;
        }
        let term = binding
            .get(&Variable::new(text))
            .ok_or_else(|| RuleError::UnboundPlaceholder(text.to_string()))?;
        out.push_str(&labels.label(term));
    }
    Ok(out)
}
