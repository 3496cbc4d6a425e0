//! Regex detection of email addresses, phone numbers, and IP addresses with
//! postprocessing filters that strip the common false-positive classes
//! (ISBN/DOI/fragment contexts, URL-embedded digit runs, bracket-only email
//! usernames, dotless domains), plus precision extrapolation and per-token
//! normalization.
//!
//! Counts are raw detections; multiplying by a manually estimated precision
//! gives the extrapolated true-match estimate. No recall estimation, no
//! redaction.

use std::collections::BTreeMap;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::hash::hash64;
use crate::tokenize::Tokenizer;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash,
)]
#[serde(rename_all = "lowercase")]
pub enum PiiKind {
    Email,
    Phone,
    Ip,
}

impl std::fmt::Display for PiiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PiiKind::Email => "email",
            PiiKind::Phone => "phone",
            PiiKind::Ip => "ip",
        })
    }
}

/// Context radius, in Unicode scalar values, for both the forbidden-term
/// window filter and the audit sample context.
pub const CONTEXT_RADIUS_CHARS: usize = 50;

/// A detection rule: one pattern per PII kind plus an ordered list of
/// postfilters. A candidate survives only if every postfilter passes.
#[derive(Debug, Clone)]
pub struct PiiRule {
    pub kind: PiiKind,
    pub pattern: Regex,
    /// Capture group reported as the match (0 = whole match).
    pub group: usize,
    pub postfilters: Vec<Postfilter>,
}

/// Pure predicates over (match span, surrounding text).
#[derive(Debug, Clone)]
pub enum Postfilter {
    /// The part before '@' must not be just "(".
    UsernameNotLoneParen,
    /// The part after '@' must contain a '.'.
    DomainContainsDot,
    /// None of the terms may appear within the context window around the
    /// match (case-sensitive).
    NoForbiddenNearby(Vec<&'static str>),
    /// The match must not lie inside a maximal non-whitespace token that
    /// contains "://" or starts with "www.".
    NotInsideUrl,
}

/// The built-in email/phone/IP rules.
pub fn default_rules() -> Vec<PiiRule> {
    let email = Regex::new(
        r"[.\s@,?!;:)(]*([^\s@]+@[^\s@,?!;:)(]+?)[.\s@,?!;:)(]?(?:[\s\r\n]|$)",
    )
    .expect("email pattern");
    // Optionally parenthesized 3-digit area code, separators, 3 digits,
    // separator, 4 digits, anchored at line start or whitespace.
    let phone = Regex::new(r"(?:^|\s)((?:\(?\d{3}\)?[-. ]*)?\d{3}[-. ]?\d{4})")
        .expect("phone pattern");
    // Dotted quad with each octet bounded to 0..=255 by the pattern itself.
    let ip = Regex::new(
        r"\b(?:(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)\.){3}(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)\b",
    )
    .expect("ip pattern");
    let forbidden = || Postfilter::NoForbiddenNearby(vec!["ISBN", "DOI", "#"]);
    vec![
        PiiRule {
            kind: PiiKind::Email,
            pattern: email,
            group: 1,
            postfilters: vec![
                Postfilter::UsernameNotLoneParen,
                Postfilter::DomainContainsDot,
            ],
        },
        PiiRule {
            kind: PiiKind::Phone,
            pattern: phone,
            group: 1,
            postfilters: vec![forbidden(), Postfilter::NotInsideUrl],
        },
        PiiRule {
            kind: PiiKind::Ip,
            pattern: ip,
            group: 0,
            postfilters: vec![forbidden()],
        },
    ]
}

/// One surviving detection with its audit context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiMatch {
    pub kind: PiiKind,
    pub start: usize,
    pub end: usize,
    pub text: String,
    /// The match plus up to [`CONTEXT_RADIUS_CHARS`] characters either side,
    /// clipped at document boundaries.
    pub context: String,
}

/// Byte range covering `radius` chars before `start` and after `end`.
fn char_window(text: &str, start: usize, end: usize, radius: usize) -> (usize, usize) {
    let mut w_start = start;
    for (i, _) in text[..start].char_indices().rev().take(radius) {
        w_start = i;
    }
    let mut w_end = end;
    for (i, c) in text[end..].char_indices().take(radius) {
        w_end = end + i + c.len_utf8();
    }
    (w_start, w_end)
}

fn whitespace_token_bounds(text: &str, start: usize, end: usize) -> (usize, usize) {
    let t_start = text[..start]
        .rfind(char::is_whitespace)
        .map(|i| i + text[i..].chars().next().unwrap().len_utf8())
        .unwrap_or(0);
    let t_end = text[end..]
        .find(char::is_whitespace)
        .map(|i| end + i)
        .unwrap_or(text.len());
    (t_start, t_end)
}

fn passes(filter: &Postfilter, text: &str, start: usize, end: usize) -> bool {
    let matched = &text[start..end];
    match filter {
        Postfilter::UsernameNotLoneParen => match matched.split_once('@') {
            Some((user, _)) => user != "(",
            None => false,
        },
        Postfilter::DomainContainsDot => match matched.split_once('@') {
            Some((_, domain)) => domain.contains('.'),
            None => false,
        },
        Postfilter::NoForbiddenNearby(terms) => {
            let (w_start, w_end) = char_window(text, start, end, CONTEXT_RADIUS_CHARS);
            let window = &text[w_start..w_end];
            !terms.iter().any(|t| window.contains(t))
        }
        Postfilter::NotInsideUrl => {
            let (t_start, t_end) = whitespace_token_bounds(text, start, end);
            let token = &text[t_start..t_end];
            !(token.contains("://") || token.starts_with("www."))
        }
    }
}

/// Applies every rule to one document's text. A candidate is emitted only if
/// all of its rule's postfilters pass.
pub fn scan_text(text: &str, rules: &[PiiRule]) -> Vec<PiiMatch> {
    let mut out = Vec::new();
    for rule in rules {
        for caps in rule.pattern.captures_iter(text) {
            let Some(m) = caps.get(rule.group) else {
                continue;
            };
            if !rule
                .postfilters
                .iter()
                .all(|f| passes(f, text, m.start(), m.end()))
            {
                continue;
            }
            let (w_start, w_end) = char_window(text, m.start(), m.end(), CONTEXT_RADIUS_CHARS);
            out.push(PiiMatch {
                kind: rule.kind,
                start: m.start(),
                end: m.end(),
                text: m.as_str().to_string(),
                context: text[w_start..w_end].to_string(),
            });
        }
    }
    out
}

pub fn scan_document(doc: &Document, rules: &[PiiRule]) -> Vec<PiiMatch> {
    scan_text(&doc.text, rules)
}

/// Audit-sample entry; the priority makes sampling deterministic and
/// independent of worker scheduling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiSample {
    pub kind: PiiKind,
    pub text: String,
    pub context: String,
    #[serde(skip)]
    priority: u64,
}

/// Corpus-level PII report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiiReport {
    pub counts: BTreeMap<PiiKind, u64>,
    /// counts / num_tokens per kind.
    pub per_token: BTreeMap<PiiKind, f64>,
    /// counts x user-supplied precision, when extrapolation was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolated: Option<BTreeMap<PiiKind, f64>>,
    pub num_documents: u64,
    pub num_tokens: u64,
    pub skipped_degenerate: u64,
    pub samples: Vec<PiiSample>,
}

/// Documents containing this many consecutive ":)" emoticons are considered
/// degenerate and can optionally be skipped for throughput.
pub const DEGENERATE_EMOTICON_RUN: usize = 50;

struct PiiScanAcc {
    tok: Arc<dyn Tokenizer>,
    rules: Arc<Vec<PiiRule>>,
    seed: u64,
    sample_size: usize,
    skip_degenerate: bool,
    degenerate_needle: String,
    counts: BTreeMap<PiiKind, u64>,
    num_documents: u64,
    num_tokens: u64,
    skipped_degenerate: u64,
    // Keeps the sample_size entries with the smallest priorities.
    sample: Vec<PiiSample>,
}

impl PiiScanAcc {
    fn trim_sample(&mut self) {
        if self.sample.len() > self.sample_size {
            self.sample.sort_unstable_by_key(|a| a.priority);
            self.sample.truncate(self.sample_size);
        }
    }
}

impl Accumulator for PiiScanAcc {
    fn absorb(&mut self, doc: &Document, at: DocRef) {
        self.num_documents += 1;
        self.num_tokens += self.tok.count(&doc.text);
        if self.skip_degenerate && doc.text.contains(self.degenerate_needle.as_str()) {
            self.skipped_degenerate += 1;
            return;
        }
        for (ordinal, m) in scan_document(doc, &self.rules).into_iter().enumerate() {
            *self.counts.entry(m.kind).or_insert(0) += 1;
            if self.sample_size > 0 {
                let mut key = [0u8; 24];
                key[..8].copy_from_slice(&(at.shard as u64).to_le_bytes());
                key[8..16].copy_from_slice(&at.record.to_le_bytes());
                key[16..].copy_from_slice(&(ordinal as u64).to_le_bytes());
                self.sample.push(PiiSample {
                    kind: m.kind,
                    text: m.text,
                    context: m.context,
                    priority: hash64(&key, self.seed),
                });
                if self.sample.len() >= self.sample_size * 4 + 16 {
                    self.trim_sample();
                }
            }
        }
    }

    fn merge(&mut self, other: Self) {
        self.num_documents += other.num_documents;
        self.num_tokens += other.num_tokens;
        self.skipped_degenerate += other.skipped_degenerate;
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.sample.extend(other.sample);
        self.trim_sample();
    }
}

/// Scans a whole corpus, aggregating counts and a deterministic audit sample
/// of at most `sample_size` matches.
#[allow(clippy::too_many_arguments)]
pub fn scan_corpus(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    rules: Arc<Vec<PiiRule>>,
    sample_size: usize,
    seed: u64,
    skip_degenerate: bool,
    workers: usize,
) -> Result<(PiiReport, RunReport)> {
    let (mut acc, report) = engine::run(
        corpus,
        || PiiScanAcc {
            tok: tok.clone(),
            rules: rules.clone(),
            seed,
            sample_size,
            skip_degenerate,
            degenerate_needle: ":)".repeat(DEGENERATE_EMOTICON_RUN),
            counts: rules.iter().map(|r| (r.kind, 0)).collect(),
            num_documents: 0,
            num_tokens: 0,
            skipped_degenerate: 0,
            sample: Vec::new(),
        },
        workers,
    )?;
    acc.trim_sample();
    acc.sample
        .sort_unstable_by_key(|a| a.priority);
    let per_token = acc
        .counts
        .iter()
        .map(|(k, c)| {
            let f = if acc.num_tokens == 0 {
                0.0
            } else {
                *c as f64 / acc.num_tokens as f64
            };
            (*k, f)
        })
        .collect();
    Ok((
        PiiReport {
            counts: acc.counts,
            per_token,
            extrapolated: None,
            num_documents: acc.num_documents,
            num_tokens: acc.num_tokens,
            skipped_degenerate: acc.skipped_degenerate,
            samples: acc.sample,
        },
        report,
    ))
}

/// Estimated true-match counts: raw count x precision per kind. Precisions
/// must lie in [0, 1].
pub fn extrapolate(
    counts: &BTreeMap<PiiKind, u64>,
    precision: &BTreeMap<PiiKind, f64>,
) -> Result<BTreeMap<PiiKind, f64>> {
    for &p in precision.values() {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(CoreError::InvalidPrecision(p));
        }
    }
    Ok(precision
        .iter()
        .map(|(k, p)| (*k, counts.get(k).copied().unwrap_or(0) as f64 * p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusSpec;
    use crate::tokenize::UnicodeWordTokenizer;
    use std::io::Write as _;

    fn kinds(text: &str) -> Vec<(PiiKind, String)> {
        scan_text(text, &default_rules())
            .into_iter()
            .map(|m| (m.kind, m.text))
            .collect()
    }

    #[test]
    fn email_basic() {
        assert_eq!(
            kinds("write to jane.doe@lab.org today"),
            vec![(PiiKind::Email, "jane.doe@lab.org".to_string())]
        );
    }

    #[test]
    fn email_at_end_of_text() {
        assert_eq!(
            kinds("contact: a@b.com"),
            vec![(PiiKind::Email, "a@b.com".to_string())]
        );
    }

    #[test]
    fn email_trailing_punctuation_is_stripped() {
        assert_eq!(
            kinds("ask a@b.org. thanks"),
            vec![(PiiKind::Email, "a@b.org".to_string())]
        );
    }

    #[test]
    fn email_lone_paren_username_is_rejected() {
        assert!(kinds("see (@foo.com next").is_empty());
    }

    #[test]
    fn email_domain_needs_a_dot() {
        assert!(kinds("root@localhost says hi").is_empty());
    }

    #[test]
    fn email_capture_has_one_at_and_dotted_domain() {
        for m in scan_text("a b9@x.co c alice+tag@sub.example.org d", &default_rules()) {
            if m.kind == PiiKind::Email {
                assert_eq!(m.text.matches('@').count(), 1);
                let (_, domain) = m.text.split_once('@').unwrap();
                assert!(domain.contains('.'));
            }
        }
    }

    #[test]
    fn phone_with_parenthesized_area_code() {
        assert_eq!(
            kinds("call (206) 555-0173 now"),
            vec![(PiiKind::Phone, "(206) 555-0173".to_string())]
        );
    }

    #[test]
    fn phone_plain_formats() {
        assert_eq!(
            kinds("dial 206-555-0173 maybe"),
            vec![(PiiKind::Phone, "206-555-0173".to_string())]
        );
        assert_eq!(
            kinds("dial 206.555.0173 maybe"),
            vec![(PiiKind::Phone, "206.555.0173".to_string())]
        );
    }

    #[test]
    fn phone_isbn_context_is_filtered() {
        // Embedded 10-digit run matches the pattern but sits next to "ISBN".
        assert!(kinds("ISBN 4012138149625 the model").is_empty());
        assert!(kinds("see DOI 1081234567 for details").is_empty());
        assert!(kinds("issue #12 ref 2065550173 fixed").is_empty());
    }

    #[test]
    fn phone_bare_digit_run_still_matches_without_forbidden_context() {
        // The EAN false-positive class from web corpora: no ISBN marker, so
        // the digits survive as a (wrong) phone detection by design.
        assert_eq!(
            kinds("ean 4012138149625 the model"),
            vec![(PiiKind::Phone, "4012138149".to_string())]
        );
    }

    #[test]
    fn phone_inside_url_token_is_filtered() {
        assert!(kinds("555-0173://weird-scheme").is_empty());
        assert_eq!(kinds("555-0173 fine"), vec![(PiiKind::Phone, "555-0173".into())]);
    }

    #[test]
    fn ip_octets_are_bounded() {
        assert!(kinds("server at 999.1.1.1").is_empty());
        assert!(kinds("at 1.2.3.456 nothing").is_empty());
        assert_eq!(
            kinds("update 10.0.0.163 rolled out"),
            vec![(PiiKind::Ip, "10.0.0.163".to_string())]
        );
        assert_eq!(
            kinds("peer 255.255.255.255 works"),
            vec![(PiiKind::Ip, "255.255.255.255".to_string())]
        );
    }

    #[test]
    fn ip_isbn_window_is_filtered() {
        assert!(kinds("ISBN nearby 10.0.0.1 text").is_empty());
    }

    #[test]
    fn window_filter_soundness_on_outputs() {
        let text = "call 555-0173 ok, then ISBN 1234567890 and 10.0.0.1 ISBN";
        for m in scan_text(text, &default_rules()) {
            if matches!(m.kind, PiiKind::Phone | PiiKind::Ip) {
                let (ws, we) = char_window(text, m.start, m.end, CONTEXT_RADIUS_CHARS);
                let win = &text[ws..we];
                assert!(!win.contains("ISBN") && !win.contains("DOI") && !win.contains('#'));
            }
        }
    }

    #[test]
    fn context_window_counts_chars_and_clips() {
        let text = "héllo a@b.com wörld";
        let m = &scan_text(text, &default_rules())[0];
        assert_eq!(m.context, text); // short doc: window clips to full text
        let (ws, we) = char_window(text, 0, 1, 2);
        assert_eq!(ws, 0);
        assert_eq!(&text[ws..we], "hél");
    }

    fn corpus_of(records: &[serde_json::Value]) -> (tempfile::TempDir, Corpus) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for r in records {
            writeln!(f, "{}", r).unwrap();
        }
        (dir, Corpus::open(CorpusSpec::new("t", vec![path])).unwrap())
    }

    #[test]
    fn corpus_counts_and_per_token() {
        // 10 docs, one email each.
        let records: Vec<serde_json::Value> = (0..10)
            .map(|i| serde_json::json!({"text": format!("mail u{i}@ex{i}.org end")}))
            .collect();
        let (_d, corpus) = corpus_of(&records);
        let (report, _) = scan_corpus(
            &corpus,
            Arc::new(UnicodeWordTokenizer),
            Arc::new(default_rules()),
            5,
            0,
            false,
            2,
        )
        .unwrap();
        assert_eq!(report.counts[&PiiKind::Email], 10);
        assert_eq!(report.counts[&PiiKind::Phone], 0);
        assert_eq!(report.samples.len(), 5);
        let expected = 10.0 / report.num_tokens as f64;
        assert!((report.per_token[&PiiKind::Email] - expected).abs() < 1e-15);
    }

    #[test]
    fn decoys_do_not_count() {
        let mut records = vec![];
        for i in 0..7 {
            records.push(serde_json::json!({"text": format!("call (20{i}) 555-017{i} now")}));
        }
        for i in 0..3 {
            records.push(serde_json::json!({"text": format!("ISBN 978030640615{i} listed")}));
        }
        let (_d, corpus) = corpus_of(&records);
        let (report, _) = scan_corpus(
            &corpus,
            Arc::new(UnicodeWordTokenizer),
            Arc::new(default_rules()),
            0,
            0,
            false,
            1,
        )
        .unwrap();
        assert_eq!(report.counts[&PiiKind::Phone], 7);
    }

    #[test]
    fn reports_are_worker_invariant() {
        let records: Vec<serde_json::Value> = (0..40)
            .map(|i| {
                serde_json::json!({"text": format!("u{i}@d{i}.net or (555) 555-{i:04} at 10.0.{}.{}", i % 256, (i * 7) % 256)})
            })
            .collect();
        let (_d, corpus) = corpus_of(&records);
        let run = |workers| {
            scan_corpus(
                &corpus,
                Arc::new(UnicodeWordTokenizer),
                Arc::new(default_rules()),
                8,
                42,
                false,
                workers,
            )
            .unwrap()
            .0
        };
        let one = run(1);
        for w in [2, 8] {
            assert_eq!(run(w), one);
        }
    }

    #[test]
    fn degenerate_documents_can_be_skipped() {
        let smiley = ":)".repeat(60);
        let records = vec![
            serde_json::json!({"text": format!("{smiley} a@b.com")}),
            serde_json::json!({"text": "plain c@d.org mail"}),
        ];
        let (_d, corpus) = corpus_of(&records);
        let scan = |skip| {
            scan_corpus(
                &corpus,
                Arc::new(UnicodeWordTokenizer),
                Arc::new(default_rules()),
                0,
                0,
                skip,
                1,
            )
            .unwrap()
            .0
        };
        let with_skip = scan(true);
        assert_eq!(with_skip.counts[&PiiKind::Email], 1);
        assert_eq!(with_skip.skipped_degenerate, 1);
        let without = scan(false);
        assert_eq!(without.counts[&PiiKind::Email], 2);
        assert_eq!(without.skipped_degenerate, 0);
    }

    #[test]
    fn extrapolation_is_multiplication() {
        let counts: BTreeMap<PiiKind, u64> =
            [(PiiKind::Email, 1000), (PiiKind::Ip, 200)].into_iter().collect();
        let precision: BTreeMap<PiiKind, f64> =
            [(PiiKind::Email, 0.99), (PiiKind::Ip, 0.54)].into_iter().collect();
        let e = extrapolate(&counts, &precision).unwrap();
        assert!((e[&PiiKind::Email] - 990.0).abs() < 1e-9);
        assert!((e[&PiiKind::Ip] - 108.0).abs() < 1e-9);
        let zero: BTreeMap<PiiKind, f64> = [(PiiKind::Email, 0.0)].into_iter().collect();
        assert_eq!(extrapolate(&counts, &zero).unwrap()[&PiiKind::Email], 0.0);
    }

    #[test]
    fn extrapolation_rejects_bad_precision() {
        let counts = BTreeMap::new();
        for bad in [-0.1, 1.1, f64::NAN] {
            let p: BTreeMap<PiiKind, f64> = [(PiiKind::Email, bad)].into_iter().collect();
            assert!(matches!(
                extrapolate(&counts, &p),
                Err(CoreError::InvalidPrecision(_))
            ));
        }
    }
}
