use std::collections::BTreeSet;

use super::tokenize::STOPWORDS;
use crate::backends::BackendError;

/// Anything that can list the named-entity spans in a text.
pub trait EntityCounter: Send + Sync {
    fn name(&self) -> &str;
    fn entities(&self, text: &str) -> Result<Vec<String>, BackendError>;
}

/// Number of distinct entity spans the counter reports.
pub fn entity_count(text: &str, ner: &dyn EntityCounter) -> Result<usize, BackendError> {
    let spans: BTreeSet<String> = ner.entities(text)?.into_iter().map(|s| s.trim().to_string()).collect();
    Ok(spans.len())
}

/// Built-in heuristic: runs of capitalized tokens plus tokens containing a
/// digit. A run that starts a sentence only counts when it has at least two
/// tokens, so "This is true." yields nothing while "George Orwell wrote ..."
/// still yields "George Orwell".
#[derive(Debug, Default, Clone, Copy)]
pub struct CapitalizedSpanNer;

impl CapitalizedSpanNer {
    pub fn spans(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut run: Vec<&str> = Vec::new();
        let mut run_initial = false;
        let mut sentence_start = true;

        let flush = |run: &mut Vec<&str>, initial: bool, out: &mut Vec<String>| {
            let keep = match run.len() {
                0 => false,
                1 => !initial && !STOPWORDS.contains(&run[0].to_lowercase().as_str()),
                _ => true,
            };
            if keep {
                out.push(run.join(" "));
            }
            run.clear();
        };

        for raw in text.split_whitespace() {
            let tok = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let ends_sentence = raw.ends_with(['.', '!', '?']);
            let breaks_run = ends_sentence || raw.ends_with([',', ';', ':', ')']);
            if tok.is_empty() {
                flush(&mut run, run_initial, &mut out);
                sentence_start |= ends_sentence;
                continue;
            }
            if tok.chars().any(|c| c.is_ascii_digit()) {
                flush(&mut run, run_initial, &mut out);
                out.push(tok.to_string());
            } else if tok.chars().next().is_some_and(char::is_uppercase) {
                if run.is_empty() {
                    run_initial = sentence_start;
                }
                run.push(tok);
                if breaks_run {
                    flush(&mut run, run_initial, &mut out);
                }
            } else {
                flush(&mut run, run_initial, &mut out);
            }
            sentence_start = ends_sentence;
        }
        flush(&mut run, run_initial, &mut out);
        out
    }
}

impl EntityCounter for CapitalizedSpanNer {
    fn name(&self) -> &str {
        "capitalized-span"
    }

    fn entities(&self, text: &str) -> Result<Vec<String>, BackendError> {
        Ok(Self::spans(text))
    }
}

/// Union of several counters' spans; any member failing fails the union.
pub struct UnionNer {
    members: Vec<Box<dyn EntityCounter>>,
    name: String,
}

impl UnionNer {
    pub fn new(members: Vec<Box<dyn EntityCounter>>) -> Self {
        let name = members.iter().map(|m| m.name()).collect::<Vec<_>>().join("+");
        Self { members, name }
    }
}

impl EntityCounter for UnionNer {
    fn name(&self) -> &str {
        &self.name
    }

    fn entities(&self, text: &str) -> Result<Vec<String>, BackendError> {
        let mut all = BTreeSet::new();
        for m in &self.members {
            all.extend(m.entities(text)?.into_iter().map(|s| s.trim().to_string()));
        }
        Ok(all.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str, Vec<&'static str>);

    impl EntityCounter for Fixed {
        fn name(&self) -> &str {
            self.0
        }
        fn entities(&self, _: &str) -> Result<Vec<String>, BackendError> {
            Ok(self.1.iter().map(|s| s.to_string()).collect())
        }
    }

    struct Offline;

    impl EntityCounter for Offline {
        fn name(&self) -> &str {
            "offline"
        }
        fn entities(&self, _: &str) -> Result<Vec<String>, BackendError> {
            Err(BackendError::Transport("connection refused".into()))
        }
    }

    #[test]
    fn heuristic() {
        assert_eq!(entity_count("This is true.", &CapitalizedSpanNer).unwrap(), 0);
        assert_eq!(
            CapitalizedSpanNer::spans("George Orwell wrote Animal Farm"),
            ["George Orwell", "Animal Farm"]
        );
        assert_eq!(
            CapitalizedSpanNer::spans("Marko Dmitrović plays for SD Eibar in 2014. He is Serbian."),
            ["Marko Dmitrović", "SD Eibar", "2014", "Serbian"]
        );
        assert_eq!(
            CapitalizedSpanNer::spans("The claim is that I agree."),
            Vec::<String>::new()
        );
    }

    #[test]
    fn fixture_backend_count() {
        let b = Fixed("mock", vec!["George Orwell", "Animal Farm"]);
        assert_eq!(entity_count("George Orwell wrote Animal Farm", &b).unwrap(), 2);
    }

    #[test]
    fn union_is_set_union() {
        let u = UnionNer::new(vec![
            Box::new(Fixed("sci", vec!["IL-6", "Orwell"])),
            Box::new(Fixed("web", vec!["Orwell", "Animal Farm"])),
        ]);
        assert_eq!(u.name(), "sci+web");
        assert_eq!(entity_count("x", &u).unwrap(), 3);
    }

    #[test]
    fn offline_propagates() {
        assert!(matches!(entity_count("x", &Offline), Err(BackendError::Transport(_))));
        let u = UnionNer::new(vec![Box::new(CapitalizedSpanNer), Box::new(Offline)]);
        assert!(entity_count("George Orwell", &u).is_err());
    }
}
