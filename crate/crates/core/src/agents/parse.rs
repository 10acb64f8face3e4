use super::CritiqueAdvice;
use crate::expr::{parse_with_limits, OperatorSet, ParseError, ParseLimits, TransformSequence};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Semantic,
    Distribution,
}

fn strip_markdown(s: &str) -> &str {
    s.trim()
        .trim_matches(|c: char| c == '#' || c == '*' || c == '_' || c.is_whitespace())
}

/// Recognizes `SEMANTIC:`, `## Semantic diagnosis:`, `**DISTRIBUTION:**`
/// and similar. Returns the section and any text after the colon.
fn header(line: &str) -> Option<(Section, &str)> {
    let line = strip_markdown(line);
    let colon = line.find(':')?;
    let label = strip_markdown(&line[..colon]).to_ascii_uppercase();
    if label.len() > 40 || !label.chars().all(|c| c.is_ascii_alphabetic() || c == ' ') {
        return None;
    }
    let section = if label.starts_with("SEMANTIC") {
        Section::Semantic
    } else if label.starts_with("DISTRIBUTION") {
        Section::Distribution
    } else {
        return None;
    };
    Some((section, strip_markdown(&line[colon + 1..])))
}

/// Strips a leading `-`, `*`, `•`, `+`, `1.` or `1)` marker.
fn bullet(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for marker in ["- ", "* ", "• ", "+ "] {
        if let Some(rest) = t.strip_prefix(marker) {
            return Some(rest.trim());
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return Some(rest.trim());
        }
    }
    None
}

#[derive(Default)]
struct Items {
    bullets: Vec<String>,
    plain: Vec<String>,
}

impl Items {
    fn finish(self) -> Vec<String> {
        let items = if self.bullets.is_empty() {
            self.plain
        } else {
            self.bullets
        };
        items.into_iter().filter(|s| !s.trim().is_empty()).collect()
    }
}

/// Splits a critic response into its two sections. Returns `None` when
/// neither header is present or no item could be found.
pub fn parse_critique(response: &str) -> Option<CritiqueAdvice> {
    let mut semantic = Items::default();
    let mut distribution = Items::default();
    let mut current = None;
    for line in response.lines() {
        if let Some((section, inline)) = header(line) {
            current = Some(section);
            if !inline.is_empty() {
                let target = if section == Section::Semantic {
                    &mut semantic
                } else {
                    &mut distribution
                };
                target.plain.push(inline.to_string());
            }
            continue;
        }
        let Some(section) = current else { continue };
        let target = if section == Section::Semantic {
            &mut semantic
        } else {
            &mut distribution
        };
        if let Some(item) = bullet(line) {
            target.bullets.push(item.to_string());
        } else if !line.trim().is_empty() {
            target.plain.push(line.trim().to_string());
        }
    }
    current?;
    let advice = CritiqueAdvice {
        semantic_advice: semantic.finish(),
        distributional_advice: distribution.finish(),
        raw_response: response.to_string(),
    };
    (advice.item_count() > 0).then_some(advice)
}

fn find_ignore_case(haystack: &str, needle: &str) -> Vec<usize> {
    let upper = haystack.to_ascii_uppercase();
    upper.match_indices(needle).map(|(i, _)| i).collect()
}

fn strip_fence(line: &str) -> &str {
    line.trim().trim_matches('`').trim()
}

/// Pulls the sequence out of a generator response: the text inside the
/// last `<SEQ>`/`</SEQ>` pair, or else the last line that parses on its own.
pub fn extract_sequence(
    response: &str,
    ops: &OperatorSet,
    limits: ParseLimits,
) -> Result<TransformSequence, ParseError> {
    if let Some(&open) = find_ignore_case(response, "<SEQ>").last() {
        let body = &response[open + 5..];
        let inner = match find_ignore_case(body, "</SEQ>").first() {
            Some(&close) => &body[..close],
            None => body.lines().next().unwrap_or(""),
        };
        return parse_with_limits(strip_fence(inner), ops, limits);
    }
    let mut first_error = None;
    for line in response
        .lines()
        .rev()
        .map(strip_fence)
        .filter(|l| !l.is_empty())
    {
        match parse_with_limits(line, ops, limits) {
            Ok(seq) => return Ok(seq),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    Err(match first_error {
        Some(e) => ParseError {
            message: format!("no <SEQ> block found; last line: {}", e.message),
            ..e
        },
        None => ParseError::new(
            "",
            0,
            "empty response; expected a sequence inside <SEQ></SEQ>",
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops() -> OperatorSet {
        OperatorSet::default()
    }

    fn extract(s: &str) -> Result<TransformSequence, ParseError> {
        extract_sequence(s, &ops(), ParseLimits::default())
    }

    #[test]
    fn two_sections() {
        let a = parse_critique(
            "SEMANTIC:\n- ratio of f1 to f2\nDISTRIBUTION:\n- log-transform skewed f3",
        )
        .unwrap();
        assert_eq!(a.semantic_advice, vec!["ratio of f1 to f2"]);
        assert_eq!(a.distributional_advice, vec!["log-transform skewed f3"]);
    }

    #[test]
    fn markdown_headers_and_numbered_items() {
        let text = "Here is my view.\n\n## Semantic diagnosis:\n1. combine f1 and f2\n2) f4 is a date part\n\n**DISTRIBUTION:**\n* f3 has outliers\n";
        let a = parse_critique(text).unwrap();
        assert_eq!(
            a.semantic_advice,
            vec!["combine f1 and f2", "f4 is a date part"]
        );
        assert_eq!(a.distributional_advice, vec!["f3 has outliers"]);
    }

    #[test]
    fn inline_and_plain_items() {
        let a =
            parse_critique("SEMANTIC: f1 and f2 interact\nDISTRIBUTION:\nf2 is skewed").unwrap();
        assert_eq!(a.semantic_advice, vec!["f1 and f2 interact"]);
        assert_eq!(a.distributional_advice, vec!["f2 is skewed"]);
    }

    #[test]
    fn headerless_or_empty_is_none() {
        assert!(parse_critique("Consider combining income and debt.").is_none());
        assert!(parse_critique("SEMANTIC:\nDISTRIBUTION:\n").is_none());
        assert!(parse_critique("note: semantic things").is_none());
    }

    #[test]
    fn sequence_markers() {
        assert_eq!(extract("<SEQ>f1*f2,log(f3)</SEQ>").unwrap().len(), 2);
        assert_eq!(
            extract("sure! here: <SEQ>f1/f2</SEQ>").unwrap().to_string(),
            "f1/f2"
        );
        let text = "Draft <SEQ>f1+f2</SEQ>\nfinal:\n<seq>f3*f4</seq>";
        assert_eq!(extract(text).unwrap().to_string(), "f3*f4");
        assert_eq!(extract("<SEQ>`f1-f2`").unwrap().to_string(), "f1-f2");
    }

    #[test]
    fn marker_content_must_parse() {
        let err = extract("<SEQ>f1**f2</SEQ>\nf1").unwrap_err();
        assert_eq!(err.position, 3);
    }

    #[test]
    fn fallback_to_last_parseable_line() {
        let text = "I suggest these:\nf1*f2, sqrt(f3)\nHope that helps!";
        assert_eq!(extract(text).unwrap().to_string(), "f1*f2,sqrt(f3)");
        let err = extract("no features here").unwrap_err();
        assert!(err.message.starts_with("no <SEQ> block"), "{}", err.message);
        assert!(extract("  \n").is_err());
    }
}
