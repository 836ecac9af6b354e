use crate::config::PromptStyle;
use crate::gateway::ChatMessage;
use crate::reduction::estimate_tokens;

const BASE_SYSTEM: &str =
    "You are an ontology matching system. You receive a module of a source ontology and a module \
of a target ontology, both in Turtle. Find the correspondences between them: equivalences (=) and subsumptions \
(< when the source entity is more specific, > when it is more general). Besides one-to-one mappings, report complex \
correspondences where an entity corresponds to a constructed expression (intersection, union, negation, property \
composition, inverse, or attribute restrictions). Use the full IRIs that occur in the modules, with onto1 as the \
source and onto2 as the target. Answer with a single alignment document in the EDOAL Alignment format (RDF/XML) and \
nothing else. If nothing corresponds, answer with an alignment without cells.";

const PATTERNS: &str = "Typical complex correspondence patterns:
- Class by attribute type: a class matches the individuals whose property has a given datatype (edoal:AttributeTypeRestriction).
- Class by attribute value: a class matches the individuals whose property holds a given value (edoal:AttributeValueRestriction).
- Class by attribute occurrence: a class matches the individuals with a number of values for a property (edoal:AttributeOccurenceRestriction).
- Class by relation domain: a class matches the subjects of a relation whose objects belong to a class (edoal:AttributeDomainRestriction).
- Class combination: a class matches an intersection or union of classes (edoal:and, edoal:or).
- Property chain: a property matches a composition of relations ending in a property (edoal:compose).
- Inverse relation: a relation matches the inverse of another relation (edoal:inverse).";

pub fn system_prompt(style: PromptStyle) -> String {
    match style {
        PromptStyle::Base => BASE_SYSTEM.to_string(),
        PromptStyle::Patterns => format!("{BASE_SYSTEM}\n\n{PATTERNS}"),
    }
}

/// Two-message matching prompt: the task statement and the module pair.
pub fn match_prompt(source_ttl: &str, target_ttl: &str, style: PromptStyle) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(system_prompt(style)),
        ChatMessage::user(format!(
            "Source ontology (onto1):\n```turtle\n{}\n```\n\nTarget ontology (onto2):\n```turtle\n{}\n```",
            source_ttl.trim_end(),
            target_ttl.trim_end()
        )),
    ]
}

/// Token estimate of the concatenated message contents.
pub fn prompt_tokens(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| estimate_tokens(&m.content)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Role;

    #[test]
    fn shape() {
        let p = match_prompt("@prefix a: <http://a/> .", "@prefix b: <http://b/> .", PromptStyle::Base);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].role, Role::System);
        assert!(p[1].content.contains("http://a/") && p[1].content.contains("http://b/"));
        let joined: String = p.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n");
        assert_eq!(prompt_tokens(&p), estimate_tokens(&joined));
    }

    #[test]
    fn patterns_style_is_longer() {
        assert!(system_prompt(PromptStyle::Patterns).len() > system_prompt(PromptStyle::Base).len());
    }
}
