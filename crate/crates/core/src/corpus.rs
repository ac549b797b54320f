//! Annotated utterances: loading, validation, preprocessing and the
//! correspondence between token-level IO labels and gold spans.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

/// Per-token tag: `I` marks a disfluent (reparandum) token, `O` a fluent one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenLabel {
    I,
    O,
}

impl TokenLabel {
    pub fn is_disfluent(self) -> bool {
        self == TokenLabel::I
    }

    /// Index into a (P_I, P_O) pair.
    pub fn class_index(self) -> usize {
        match self {
            TokenLabel::I => 0,
            TokenLabel::O => 1,
        }
    }

    pub fn from_class_index(k: usize) -> Self {
        if k == 0 {
            TokenLabel::I
        } else {
            TokenLabel::O
        }
    }
}

impl fmt::Display for TokenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenLabel::I => "I",
            TokenLabel::O => "O",
        })
    }
}

impl std::str::FromStr for TokenLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(TokenLabel::I),
            "O" => Ok(TokenLabel::O),
            other => Err(format!("label must be I or O, got {other:?}")),
        }
    }
}

/// Contiguous token range, 1-indexed and inclusive at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

/// A maximal run of `I` tokens.
pub type GoldSpan = Span;

/// One utterance with its disfluency labels and an unlabeled-arc dependency parse.
///
/// `heads[t]` is the 1-indexed head of token `t + 1`; 0 marks a root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<TokenLabel>,
    pub heads: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deprels: Option<Vec<String>>,
}

/// A broken [`AnnotatedSentence`] invariant.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("field `{field}`: {message}")]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Violation {
            field,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("sentence {index} (line {line}): {violation}")]
    Invalid {
        index: usize,
        line: usize,
        violation: Violation,
    },
    #[error("sentence {index}: token count mismatch ({words} words, {labels} labels)")]
    CountMismatch {
        index: usize,
        words: usize,
        labels: usize,
    },
    #[error("sentence count mismatch ({parses} parses, {labels} label lines)")]
    SentenceCountMismatch { parses: usize, labels: usize },
    #[error("empty after preprocessing")]
    EmptyAfterPreprocessing,
    #[error("spans {0:?} and {1:?} overlap")]
    OverlappingSpans(Span, Span),
    #[error("span {span:?} lies outside a sentence of {len} tokens")]
    SpanOutOfRange { span: Span, len: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl AnnotatedSentence {
    /// Builds a sentence and checks it.
    pub fn new(
        tokens: Vec<String>,
        labels: Vec<TokenLabel>,
        heads: Vec<usize>,
    ) -> Result<Self, Violation> {
        let s = AnnotatedSentence {
            tokens,
            labels,
            heads,
            deprels: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn gold_spans(&self) -> Vec<GoldSpan> {
        io_tags_to_spans(&self.labels)
    }

    pub fn validate(&self) -> Result<(), Violation> {
        let t = self.tokens.len();
        if t == 0 {
            return Err(Violation::new("tokens", "sentence has no tokens"));
        }
        if self.labels.len() != t {
            return Err(Violation::new(
                "labels",
                format!("{} labels for {} tokens", self.labels.len(), t),
            ));
        }
        if self.heads.len() != t {
            return Err(Violation::new(
                "heads",
                format!("{} heads for {} tokens", self.heads.len(), t),
            ));
        }
        if let Some(deprels) = &self.deprels {
            if deprels.len() != t {
                return Err(Violation::new(
                    "deprels",
                    format!("{} deprels for {} tokens", deprels.len(), t),
                ));
            }
        }
        for (i, &h) in self.heads.iter().enumerate() {
            let pos = i + 1;
            if h > t {
                return Err(Violation::new(
                    "heads",
                    format!("head {h} of token {pos} exceeds sentence length {t}"),
                ));
            }
            if h == pos {
                return Err(Violation::new(
                    "heads",
                    format!("head equals own index at token {pos}"),
                ));
            }
        }
        if let Some(pos) = find_cycle(&self.heads) {
            return Err(Violation::new(
                "heads",
                format!("head cycle through token {pos}"),
            ));
        }
        Ok(())
    }
}

/// Returns a 1-indexed token on a head cycle, if any. Heads must be in range.
pub(crate) fn find_cycle(heads: &[usize]) -> Option<usize> {
    let t = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = reaches a root
    let mut state = vec![0u8; t + 1];
    for start in 1..=t {
        let mut path = Vec::new();
        let mut cur = start;
        while cur != 0 && state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if cur != 0 && state[cur] == 1 {
            return Some(cur);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

/// Parses JSON Lines from a reader; blank lines are skipped.
pub fn read_jsonl<R: Read>(reader: R) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: AnnotatedSentence =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        sentence
            .validate()
            .map_err(|violation| CorpusError::Invalid {
                index: out.len(),
                line: line_no,
                violation,
            })?;
        out.push(sentence);
    }
    Ok(out)
}

/// Loads and validates a JSONL corpus. Records are returned as stored.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_jsonl(file)
}

pub fn write_jsonl_to<W: Write>(
    mut writer: W,
    sentences: &[AnnotatedSentence],
) -> std::io::Result<()> {
    for s in sentences {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_jsonl(
    path: impl AsRef<Path>,
    sentences: &[AnnotatedSentence],
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_jsonl_to(BufWriter::new(file), sentences).map_err(|e| io_err(path, e))
}

struct ConlluWord {
    form: String,
    head: usize,
    deprel: String,
}

fn parse_conllu(text: &str) -> Result<Vec<Vec<ConlluWord>>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current: Vec<ConlluWord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        // multiword token ranges and empty nodes
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let id: usize = id.parse().map_err(|_| CorpusError::Malformed {
            line: line_no,
            message: format!("bad ID {id:?}"),
        })?;
        if id != current.len() + 1 {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!("word ID {id} out of sequence"),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| CorpusError::Malformed {
            line: line_no,
            message: format!("bad HEAD {:?}", cols[6]),
        })?;
        current.push(ConlluWord {
            form: cols[1].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Parses a label file: every non-blank line is one sentence of space-separated I/O tags.
fn parse_label_lines(text: &str) -> Result<Vec<Vec<TokenLabel>>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let labels = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<TokenLabel>, _>>()
            .map_err(|message| CorpusError::Malformed {
                line: i + 1,
                message,
            })?;
        out.push(labels);
    }
    Ok(out)
}

/// Pairs CoNLL-U text with a parallel label text.
pub fn import_conllu_str(
    conllu: &str,
    labels: &str,
) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let parses = parse_conllu(conllu)?;
    let label_lines = parse_label_lines(labels)?;
    if parses.len() != label_lines.len() {
        return Err(CorpusError::SentenceCountMismatch {
            parses: parses.len(),
            labels: label_lines.len(),
        });
    }
    parses
        .into_iter()
        .zip(label_lines)
        .enumerate()
        .map(|(index, (words, labels))| {
            if words.len() != labels.len() {
                return Err(CorpusError::CountMismatch {
                    index,
                    words: words.len(),
                    labels: labels.len(),
                });
            }
            let mut tokens = Vec::with_capacity(words.len());
            let mut heads = Vec::with_capacity(words.len());
            let mut deprels = Vec::with_capacity(words.len());
            for w in words {
                tokens.push(w.form);
                heads.push(w.head);
                deprels.push(w.deprel);
            }
            let s = AnnotatedSentence {
                tokens,
                labels,
                heads,
                deprels: Some(deprels),
            };
            s.validate().map_err(|violation| CorpusError::Invalid {
                index,
                line: 0,
                violation,
            })?;
            Ok(s)
        })
        .collect()
}

pub fn import_conllu(
    conllu_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| io_err(p, e));
    let conllu = read(conllu_path.as_ref())?;
    let labels = read(labels_path.as_ref())?;
    import_conllu_str(&conllu, &labels)
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// A partial word is transcribed with a trailing hyphen, e.g. `re-`.
fn is_partial_word(token: &str) -> bool {
    token.ends_with('-')
}

/// Lower-cases, strips punctuation, and removes partial words.
///
/// Dependents of a removed token climb to that token's own head (repeatedly,
/// stopping at the root), so the result is still a forest.
pub fn preprocess(sentence: &AnnotatedSentence) -> Result<AnnotatedSentence, CorpusError> {
    let t = sentence.len();
    let mut cleaned: Vec<Option<String>> = Vec::with_capacity(t);
    for tok in &sentence.tokens {
        if is_partial_word(tok) {
            cleaned.push(None);
            continue;
        }
        let s: String = tok
            .to_lowercase()
            .chars()
            .filter(|&c| !is_punctuation(c))
            .collect();
        cleaned.push(if s.is_empty() { None } else { Some(s) });
    }
    if cleaned.iter().all(Option::is_none) {
        return Err(CorpusError::EmptyAfterPreprocessing);
    }

    // new 1-indexed position of each kept old position
    let mut new_index = vec![0usize; t + 1];
    let mut next = 0;
    for (i, c) in cleaned.iter().enumerate() {
        if c.is_some() {
            next += 1;
            new_index[i + 1] = next;
        }
    }

    let mut out = AnnotatedSentence {
        tokens: Vec::with_capacity(next),
        labels: Vec::with_capacity(next),
        heads: Vec::with_capacity(next),
        deprels: sentence.deprels.as_ref().map(|_| Vec::with_capacity(next)),
    };
    for (i, c) in cleaned.into_iter().enumerate() {
        let Some(tok) = c else { continue };
        let mut h = sentence.heads[i];
        while h != 0 && new_index[h] == 0 {
            h = sentence.heads[h - 1];
        }
        out.tokens.push(tok);
        out.labels.push(sentence.labels[i]);
        out.heads.push(new_index[h]);
        if let (Some(dst), Some(src)) = (out.deprels.as_mut(), sentence.deprels.as_ref()) {
            dst.push(src[i].clone());
        }
    }
    Ok(out)
}

/// Preprocesses a corpus, dropping sentences that come out empty.
/// Returns the kept sentences and the number dropped.
pub fn preprocess_corpus(sentences: &[AnnotatedSentence]) -> (Vec<AnnotatedSentence>, usize) {
    let mut kept = Vec::with_capacity(sentences.len());
    let mut dropped = 0;
    for s in sentences {
        match preprocess(s) {
            Ok(p) => kept.push(p),
            Err(_) => dropped += 1,
        }
    }
    (kept, dropped)
}

/// Maximal runs of `I`, sorted by start.
pub fn io_tags_to_spans(labels: &[TokenLabel]) -> Vec<GoldSpan> {
    let mut spans = Vec::new();
    let mut run_start = None;
    for (i, l) in labels.iter().enumerate() {
        match (l, run_start) {
            (TokenLabel::I, None) => run_start = Some(i + 1),
            (TokenLabel::O, Some(s)) => {
                spans.push(Span::new(s, i));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        spans.push(Span::new(s, labels.len()));
    }
    spans
}

/// Marks every token covered by some span as `I`.
pub fn spans_to_io(spans: &[Span], len: usize) -> Result<Vec<TokenLabel>, CorpusError> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    for s in &sorted {
        if s.start == 0 || s.start > s.end || s.end > len {
            return Err(CorpusError::SpanOutOfRange { span: *s, len });
        }
    }
    for w in sorted.windows(2) {
        if w[1].start <= w[0].end {
            return Err(CorpusError::OverlappingSpans(w[0], w[1]));
        }
    }
    let mut labels = vec![TokenLabel::O; len];
    for s in &sorted {
        for l in &mut labels[s.start - 1..s.end] {
            *l = TokenLabel::I;
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenLabel::{I, O};

    fn sent(tokens: &[&str], labels: &[TokenLabel], heads: &[usize]) -> AnnotatedSentence {
        AnnotatedSentence {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            labels: labels.to_vec(),
            heads: heads.to_vec(),
            deprels: None,
        }
    }

    #[test]
    fn loads_minimal_record() {
        let text = r#"{"tokens":["um","yes"],"labels":["I","O"],"heads":[2,0]}"#;
        let corpus = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].len(), 2);
        assert_eq!(corpus[0].labels, vec![I, O]);
        assert_eq!(corpus[0].heads, vec![2, 0]);
    }

    #[test]
    fn label_count_mismatch_reports_line() {
        let text = "{\"tokens\":[\"a\"],\"labels\":[\"O\"],\"heads\":[0]}\n\
                    {\"tokens\":[\"a\",\"b\"],\"labels\":[\"O\"],\"heads\":[0,1]}\n";
        let err = read_jsonl(text.as_bytes()).unwrap_err();
        match err {
            CorpusError::Invalid {
                index,
                line,
                violation,
            } => {
                assert_eq!((index, line), (1, 2));
                assert_eq!(violation.field, "labels");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn self_head_rejected() {
        let text = r#"{"tokens":["a","b"],"labels":["O","O"],"heads":[1,2]}"#;
        let err = read_jsonl(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("head equals own index"), "{err}");
    }

    #[test]
    fn head_cycle_rejected() {
        let s = sent(&["a", "b", "c"], &[O, O, O], &[2, 3, 1]);
        let v = s.validate().unwrap_err();
        assert_eq!(v.field, "heads");
        assert!(v.message.contains("cycle"));
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = "{\"tokens\":[\"a\"],\"labels\":[\"O\"],\"heads\":[0]}\nnot json\n";
        match read_jsonl(text.as_bytes()).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"tokens":["a"],"labels":["O"],"heads":[0],"extra":1}"#;
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(CorpusError::Malformed { .. })
        ));
    }

    #[test]
    fn bad_label_value_rejected() {
        let text = r#"{"tokens":["a"],"labels":["B"],"heads":[0]}"#;
        assert!(read_jsonl(text.as_bytes()).is_err());
    }

    const CONLLU: &str = "# text = um yes\n\
1\tum\tum\tINTJ\t_\t_\t2\tdiscourse\t_\t_\n\
2\tyes\tyes\tINTJ\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn conllu_import_maps_columns() {
        let corpus = import_conllu_str(CONLLU, "I O\n").unwrap();
        assert_eq!(corpus.len(), 1);
        let s = &corpus[0];
        assert_eq!(s.tokens, vec!["um", "yes"]);
        assert_eq!(s.labels, vec![I, O]);
        assert_eq!(s.heads, vec![2, 0]);
        assert_eq!(
            s.deprels.as_deref(),
            Some(&["discourse".to_string(), "root".to_string()][..])
        );
    }

    #[test]
    fn conllu_label_count_mismatch() {
        let err = import_conllu_str(CONLLU, "I O O\n").unwrap_err();
        assert!(matches!(
            err,
            CorpusError::CountMismatch {
                index: 0,
                words: 2,
                labels: 3
            }
        ));
    }

    #[test]
    fn conllu_skips_ranges_and_empty_nodes() {
        let text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\t_\t_\t0\troot\t_\t_\n\
2\tn't\tnot\tPART\t_\t_\t1\tadvmod\t_\t_\n\
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n";
        let corpus = import_conllu_str(text, "O O").unwrap();
        assert_eq!(corpus[0].tokens, vec!["do", "n't"]);
        assert_eq!(corpus[0].heads, vec![0, 1]);
    }

    #[test]
    fn conllu_sentence_count_mismatch() {
        let err = import_conllu_str(CONLLU, "I O\nO O\n").unwrap_err();
        assert!(matches!(err, CorpusError::SentenceCountMismatch { .. }));
    }

    #[test]
    fn preprocess_drops_punctuation_and_partials() {
        let s = sent(
            &["Well", ",", "re-", "really"],
            &[O, O, I, O],
            &[0, 1, 4, 1],
        );
        let p = preprocess(&s).unwrap();
        assert_eq!(p.tokens, vec!["well", "really"]);
        assert_eq!(p.labels, vec![O, O]);
        assert_eq!(p.heads, vec![0, 1]);
    }

    #[test]
    fn preprocess_single_token_only_lowercases() {
        let s = sent(&["OK"], &[O], &[0]);
        let p = preprocess(&s).unwrap();
        assert_eq!(p.tokens, vec!["ok"]);
        assert_eq!(p.heads, vec![0]);
    }

    #[test]
    fn preprocess_all_punctuation_is_empty() {
        let s = sent(&[",", "-"], &[O, O], &[0, 1]);
        assert!(matches!(
            preprocess(&s),
            Err(CorpusError::EmptyAfterPreprocessing)
        ));
    }

    #[test]
    fn preprocess_reattaches_transitively() {
        // c -> b(deleted) -> a(deleted) -> d(root)
        let s = sent(&["a-", "!", "c", "d"], &[I, O, O, O], &[4, 1, 2, 0]);
        let p = preprocess(&s).unwrap();
        assert_eq!(p.tokens, vec!["c", "d"]);
        assert_eq!(p.heads, vec![2, 0]);
        p.validate().unwrap();
    }

    #[test]
    fn preprocess_strips_inner_punctuation_and_keeps_deprels() {
        let mut s = sent(&["Don't", "stop."], &[O, O], &[0, 1]);
        s.deprels = Some(vec!["root".into(), "xcomp".into()]);
        let p = preprocess(&s).unwrap();
        assert_eq!(p.tokens, vec!["dont", "stop"]);
        assert_eq!(p.deprels.unwrap(), vec!["root", "xcomp"]);
    }

    #[test]
    fn io_spans_examples() {
        assert_eq!(io_tags_to_spans(&[O, O, I, O]), vec![Span::new(3, 3)]);
        assert_eq!(io_tags_to_spans(&[O, O, O]), vec![]);
        assert_eq!(
            io_tags_to_spans(&[I, I, O, I]),
            vec![Span::new(1, 2), Span::new(4, 4)]
        );
    }

    #[test]
    fn spans_io_examples() {
        assert_eq!(
            spans_to_io(&[Span::new(2, 3)], 4).unwrap(),
            vec![O, I, I, O]
        );
        assert_eq!(spans_to_io(&[], 2).unwrap(), vec![O, O]);
        assert_eq!(
            spans_to_io(&[Span::new(1, 1), Span::new(2, 2)], 2).unwrap(),
            vec![I, I]
        );
        assert!(matches!(
            spans_to_io(&[Span::new(1, 2), Span::new(2, 3)], 3),
            Err(CorpusError::OverlappingSpans(..))
        ));
        assert!(matches!(
            spans_to_io(&[Span::new(2, 5)], 3),
            Err(CorpusError::SpanOutOfRange { .. })
        ));
    }
}
