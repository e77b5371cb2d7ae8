//! Sentence splitting and word tokenization for noisy discussion text.
//!
//! Both passes are pure, deterministic rule systems producing byte spans
//! over the input string. Inputs should be NFC-normalized first (see
//! [`normalize`]) so offsets are stable across sources.
//!
//! Sentence boundaries: a run of `.`/`!`/`?` plus optional closing quotes,
//! followed by whitespace, ends a sentence; newlines always end one.
//! Guards: no split after a known abbreviation or single-letter initial,
//! inside a URL, inside a decimal number, or after an ellipsis followed by
//! a lowercase continuation.
//!
//! Tokens: URLs, `r/`- and `u/`-style community references, @-mentions,
//! hashtags, emoticons, acronyms, and numbers survive as single tokens;
//! punctuation splits; contractions split Treebank-style.

use std::borrow::Cow;

use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Half-open byte range into the source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Span,
}

/// One sentence with its word tokens; spans index the sentence's source
/// string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub span: Span,
    pub tokens: Vec<Token>,
}

/// NFC-normalize a string, borrowing when already normalized.
pub fn normalize(text: &str) -> Cow<'_, str> {
    if is_nfc(text) {
        Cow::Borrowed(text)
    } else {
        Cow::Owned(text.nfc().collect())
    }
}

const ABBREVIATIONS: &[&str] = &[
    "approx", "avg", "co", "corp", "dept", "dr", "eg", "est", "etc", "fig", "ie", "inc", "jr",
    "ltd", "max", "min", "mr", "mrs", "ms", "no", "prof", "sr", "st", "vol", "vs",
];

const CLOSING_QUOTES: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Byte ranges of URL-looking runs (`http://`, `https://`, `www.` up to the
/// next whitespace, shedding trailing punctuation).
fn url_zones(text: &str) -> Vec<Span> {
    let lower = text.to_lowercase();
    let mut zones: Vec<Span> = Vec::new();
    for pat in ["http://", "https://", "www."] {
        let mut from = 0;
        while let Some(rel) = lower[from..].find(pat) {
            let start = from + rel;
            let boundary_ok = start == 0
                || text[..start].chars().next_back().map_or(true, |c| !c.is_alphanumeric());
            let mut end = text[start..]
                .find(char::is_whitespace)
                .map_or(text.len(), |w| start + w);
            while end > start {
                let last = text[..end].chars().next_back().unwrap();
                if matches!(last, '.' | ',' | '!' | '?' | ';' | ':' | '"' | '\'' | ')' | ']' | '}' | '>') {
                    end -= last.len_utf8();
                } else {
                    break;
                }
            }
            let long_enough = end > start + pat.len();
            if boundary_ok && long_enough && !zones.iter().any(|z| start >= z.start && start < z.end) {
                zones.push(Span { start, end });
            }
            from = (start + pat.len()).max(end);
        }
    }
    zones.sort_by_key(|z| z.start);
    zones
}

fn in_zone(zones: &[Span], pos: usize) -> bool {
    zones.iter().any(|z| pos >= z.start && pos < z.end)
}

/// Split text into sentence spans covering all non-whitespace content.
pub fn split_sentences(text: &str) -> Vec<Span> {
    let cs: Vec<(usize, char)> = text.char_indices().collect();
    let n = cs.len();
    if n == 0 {
        return Vec::new();
    }
    let zones = url_zones(text);
    // boundary[k] = no sentence may span between char k and char k+1.
    let mut boundary = vec![false; n];

    let mut k = 0;
    while k < n {
        let (bi, c) = cs[k];
        if c == '\n' {
            boundary[k] = true;
            if k > 0 {
                boundary[k - 1] = true;
            }
            k += 1;
            continue;
        }
        if !is_terminator(c) || in_zone(&zones, bi) {
            k += 1;
            continue;
        }
        // Terminator run, then closing quotes.
        let run_start = k;
        let mut j = k;
        while j < n && is_terminator(cs[j].1) {
            j += 1;
        }
        let run_len = j - run_start;
        let mut q = j;
        while q < n && CLOSING_QUOTES.contains(&cs[q].1) {
            q += 1;
        }
        let followed_by_space = q >= n || cs[q].1.is_whitespace();
        if !followed_by_space {
            k = j;
            continue;
        }
        let next_nonspace = cs[q..].iter().map(|&(_, c)| c).find(|c| !c.is_whitespace());

        let mut split = true;
        if run_len == 1 && c == '.' && abbreviation_before(text, &cs, run_start) {
            split = false;
        }
        if run_len >= 2 && cs[run_start].1 == '.' {
            // Ellipsis: only split before an uppercase continuation.
            if next_nonspace.map_or(true, |c| !c.is_uppercase()) {
                split = false;
            }
        }
        if split {
            boundary[q - 1] = true;
        }
        k = q.max(k + 1);
    }

    // Segments between boundaries, trimmed to non-whitespace extents.
    let mut spans = Vec::new();
    let mut seg_start = 0usize;
    for k in 0..n {
        if boundary[k] || k == n - 1 {
            let seg_end = k + 1;
            if let Some(span) = trim_segment(&cs, seg_start, seg_end, text.len()) {
                spans.push(span);
            }
            seg_start = seg_end;
        }
    }
    spans
}

fn trim_segment(cs: &[(usize, char)], from: usize, to: usize, text_len: usize) -> Option<Span> {
    let mut a = from;
    while a < to && cs[a].1.is_whitespace() {
        a += 1;
    }
    let mut b = to;
    while b > a && cs[b - 1].1.is_whitespace() {
        b -= 1;
    }
    if a >= b {
        return None;
    }
    let start = cs[a].0;
    let end = if b < cs.len() { cs[b].0 } else { text_len };
    Some(Span { start, end })
}

/// Does the word ending just before the `.` at char index `k` look like an
/// abbreviation, initial, or dotted acronym?
fn abbreviation_before(text: &str, cs: &[(usize, char)], k: usize) -> bool {
    let mut a = k;
    while a > 0 {
        let c = cs[a - 1].1;
        if c.is_alphanumeric() || c == '.' {
            a -= 1;
        } else {
            break;
        }
    }
    if a == k {
        return false;
    }
    let word = &text[cs[a].0..cs[k].0];
    let lower = word.to_lowercase();
    let stripped = lower.trim_end_matches('.');
    if stripped.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&stripped) {
        return true;
    }
    // Single-letter initial ("J. Smith").
    let mut letters = stripped.chars();
    if letters.clone().count() == 1 && letters.all(char::is_alphabetic) {
        return true;
    }
    // Dotted acronym ("U.S.", "e.g.", "Ph.D."): short groups only, so
    // domain-like words ("www.site.org") still end sentences.
    stripped.contains('.') && stripped.split('.').all(|g| !g.is_empty() && g.chars().count() <= 2)
}

const EMOTICONS: &[&str] = &[
    ":-)", ":-(", ":-D", ":-P", ":-p", ";-)", ":')", ":'(", "<3", ":)", ":(", ":D", ":P", ":p",
    ";)", ":/", ":\\", ":|", ":o", ":O", "=)", "=(", "=D", "XD", "xD", ":3",
];

const CONTRACTION_SUFFIXES: &[&str] = &["'re", "'ve", "'ll", "'s", "'d", "'m"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '\u{2019}' || c == '-'
}

fn apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Tokenize one sentence into word tokens with byte spans.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let cs: Vec<(usize, char)> = sentence.char_indices().collect();
    let n = cs.len();
    let zones = url_zones(sentence);
    let mut tokens: Vec<Token> = Vec::new();
    let push = |tokens: &mut Vec<Token>, s: &str, start: usize, end: usize| {
        debug_assert!(start < end);
        tokens.push(Token { text: s[start..end].to_owned(), span: Span { start, end } });
    };

    let mut k = 0;
    while k < n {
        let (bi, c) = cs[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }

        // URL.
        if let Some(zone) = zones.iter().find(|z| z.start == bi) {
            push(&mut tokens, sentence, zone.start, zone.end);
            while k < n && cs[k].0 < zone.end {
                k += 1;
            }
            continue;
        }

        let at_start = k == 0 || cs[k - 1].1.is_whitespace();

        // Community/user reference: r/name, /r/name, u/name, /u/name.
        if at_start {
            if let Some(end) = match_reference(&cs, k, sentence.len()) {
                push(&mut tokens, sentence, bi, end);
                while k < n && cs[k].0 < end {
                    k += 1;
                }
                continue;
            }
        }

        // @-mention or hashtag.
        if (c == '@' || c == '#') && k + 1 < n && (cs[k + 1].1.is_alphanumeric() || cs[k + 1].1 == '_') {
            let mut j = k + 1;
            while j < n && (cs[j].1.is_alphanumeric() || cs[j].1 == '_') {
                j += 1;
            }
            let end = if j < n { cs[j].0 } else { sentence.len() };
            push(&mut tokens, sentence, bi, end);
            k = j;
            continue;
        }

        // Emoticon (only where a token can start, so "12:30" is unaffected).
        if at_start {
            if let Some(emo) = EMOTICONS.iter().find(|e| sentence[bi..].starts_with(**e)) {
                push(&mut tokens, sentence, bi, bi + emo.len());
                while k < n && cs[k].0 < bi + emo.len() {
                    k += 1;
                }
                continue;
            }
        }

        // Dotted acronym: (letter '.') twice or more, e.g. "U.S.".
        if c.is_alphabetic() {
            if let Some(end) = match_acronym(&cs, k, sentence.len()) {
                push(&mut tokens, sentence, bi, end);
                while k < n && cs[k].0 < end {
                    k += 1;
                }
                continue;
            }
        }

        // Number with internal decimal/thousands separators.
        if c.is_ascii_digit() {
            let mut j = k;
            while j < n {
                let cj = cs[j].1;
                if cj.is_ascii_digit() {
                    j += 1;
                } else if matches!(cj, '.' | ',')
                    && j + 1 < n
                    && cs[j + 1].1.is_ascii_digit()
                    && j > k
                {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = if j < n { cs[j].0 } else { sentence.len() };
            push(&mut tokens, sentence, bi, end);
            k = j;
            continue;
        }

        // Ellipsis run.
        if c == '.' && k + 1 < n && cs[k + 1].1 == '.' {
            let mut j = k;
            while j < n && cs[j].1 == '.' {
                j += 1;
            }
            let end = if j < n { cs[j].0 } else { sentence.len() };
            push(&mut tokens, sentence, bi, end);
            k = j;
            continue;
        }

        // Word (may start with a contraction apostrophe).
        let word_start = c.is_alphanumeric()
            || c == '_'
            || (apostrophe(c) && contraction_at(&cs, k, sentence).is_some());
        if word_start {
            let mut j = k + 1;
            if apostrophe(c) {
                j = contraction_at(&cs, k, sentence).unwrap();
            } else {
                while j < n && is_word_char(cs[j].1) {
                    j += 1;
                }
                // Trailing apostrophes/hyphens are punctuation, not word parts.
                while j > k + 1 && !cs[j - 1].1.is_alphanumeric() && cs[j - 1].1 != '_' {
                    j -= 1;
                }
            }
            let end = if j < n { cs[j].0 } else { sentence.len() };
            split_word(sentence, bi, end, &mut tokens);
            k = j;
            continue;
        }

        // Single punctuation character.
        let end = if k + 1 < n { cs[k + 1].0 } else { sentence.len() };
        push(&mut tokens, sentence, bi, end);
        k += 1;
    }

    debug_assert!(tokens.iter().all(|t| !t.text.is_empty()));
    tokens
}

/// `r/name`-style reference starting at char `k`; returns its end byte.
fn match_reference(cs: &[(usize, char)], k: usize, text_len: usize) -> Option<usize> {
    let at = |i: usize| cs.get(i).map(|&(_, c)| c);
    let mut i = k;
    if at(i) == Some('/') {
        i += 1;
    }
    if !matches!(at(i), Some('r') | Some('u')) {
        return None;
    }
    if at(i + 1) != Some('/') {
        return None;
    }
    let mut j = i + 2;
    if !at(j).map_or(false, |c| c.is_alphanumeric() || c == '_') {
        return None;
    }
    while j < cs.len() && (cs[j].1.is_alphanumeric() || cs[j].1 == '_') {
        j += 1;
    }
    Some(if j < cs.len() { cs[j].0 } else { text_len })
}

/// `(single letter '.')` twice or more starting at `k`.
fn match_acronym(cs: &[(usize, char)], k: usize, text_len: usize) -> Option<usize> {
    let mut groups = 0;
    let mut j = k;
    while j < cs.len() && cs[j].1.is_alphabetic() && j + 1 < cs.len() && cs[j + 1].1 == '.' {
        groups += 1;
        j += 2;
    }
    if groups >= 2 {
        Some(if j < cs.len() { cs[j].0 } else { text_len })
    } else {
        None
    }
}

/// Contraction suffix starting at an apostrophe char index; returns the char
/// index just past it when the suffix ends the word run.
fn contraction_at(cs: &[(usize, char)], k: usize, sentence: &str) -> Option<usize> {
    let rest = &sentence[cs[k].0..];
    let rest_norm = rest.replace('\u{2019}', "'").to_lowercase();
    for suf in CONTRACTION_SUFFIXES {
        if rest_norm.starts_with(*suf) {
            let chars = suf.chars().count();
            let j = k + chars;
            let ends_word = cs.get(j).map_or(true, |&(_, c)| !is_word_char(c));
            if ends_word {
                return Some(j);
            }
        }
    }
    None
}

/// Emit a word run, splitting Treebank-style contractions.
fn split_word(sentence: &str, start: usize, end: usize, tokens: &mut Vec<Token>) {
    let word = &sentence[start..end];
    let norm = word.replace('\u{2019}', "'");
    let lower = norm.to_lowercase();

    // "cannot" -> "can" + "not".
    if lower == "cannot" {
        let mid = start + 3;
        tokens.push(Token { text: word[..3].to_owned(), span: Span { start, end: mid } });
        tokens.push(Token { text: word[3..].to_owned(), span: Span { start: mid, end } });
        return;
    }
    // "don't" -> "do" + "n't". The apostrophe may be one or three bytes.
    if lower.ends_with("n't") && lower.chars().count() > 3 {
        let cut_chars = word.chars().count() - 3;
        let cut = start + word.chars().take(cut_chars).map(char::len_utf8).sum::<usize>();
        tokens.push(Token { text: word[..cut - start].to_owned(), span: Span { start, end: cut } });
        tokens.push(Token { text: word[cut - start..].to_owned(), span: Span { start: cut, end } });
        return;
    }
    for suf in CONTRACTION_SUFFIXES {
        if lower.ends_with(suf) && lower.chars().count() > suf.chars().count() {
            let cut_chars = word.chars().count() - suf.chars().count();
            let cut = start + word.chars().take(cut_chars).map(char::len_utf8).sum::<usize>();
            tokens.push(Token { text: word[..cut - start].to_owned(), span: Span { start, end: cut } });
            tokens.push(Token { text: word[cut - start..].to_owned(), span: Span { start: cut, end } });
            return;
        }
    }
    tokens.push(Token { text: word.to_owned(), span: Span { start, end } });
}

/// Normalize, split, and tokenize a post body. Returns the normalized text
/// and per-sentence tokens (token spans index the normalized text).
pub fn process(text: &str) -> (String, Vec<TokenizedSentence>) {
    let norm = normalize(text).into_owned();
    let sentences = split_sentences(&norm)
        .into_iter()
        .map(|span| {
            let tokens = tokenize(span.slice(&norm))
                .into_iter()
                .map(|t| Token {
                    text: t.text,
                    span: Span { start: t.span.start + span.start, end: t.span.end + span.start },
                })
                .collect();
            TokenizedSentence { span, tokens }
        })
        .collect();
    (norm, sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(sentence: &str) -> Vec<String> {
        tokenize(sentence).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n  ").is_empty());
    }

    #[test]
    fn two_plain_sentences() {
        let text = "Hello. World.";
        let spans = split_sentences(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].slice(text), "Hello.");
        assert_eq!(spans[1].slice(text), "World.");
    }

    #[test]
    fn abbreviations_do_not_split() {
        let text = "Dr. Smith lost vs. the champ. Nobody minded.";
        let spans = split_sentences(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].slice(text), "Dr. Smith lost vs. the champ.");
    }

    #[test]
    fn urls_do_not_split_sentences() {
        let text = "see http://a.io/x.html for more. Then reply.";
        let spans = split_sentences(text);
        assert_eq!(spans.len(), 2);
    }

    #[test]
    fn newline_is_a_hard_boundary() {
        let text = "first line\nsecond line";
        let spans = split_sentences(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[1].slice(text), "second line");
    }

    #[test]
    fn plain_words_tokenize_whole() {
        assert_eq!(texts("Conor McGregor is there"), ["Conor", "McGregor", "is", "there"]);
    }

    #[test]
    fn noisy_tokens_survive_whole() {
        assert_eq!(texts("see r/mma http://a.io :)"), ["see", "r/mma", "http://a.io", ":)"]);
        assert_eq!(
            texts("ping @some_user and /u/other!"),
            ["ping", "@some_user", "and", "/u/other", "!"]
        );
        assert_eq!(texts("#hype is real"), ["#hype", "is", "real"]);
    }

    #[test]
    fn treebank_contractions_split() {
        assert_eq!(texts("don't"), ["do", "n't"]);
        assert_eq!(
            texts("I'll say he's won't they're we've I'd I'm"),
            ["I", "'ll", "say", "he", "'s", "wo", "n't", "they", "'re", "we", "'ve", "I", "'d", "I", "'m"]
        );
        assert_eq!(texts("cannot"), ["can", "not"]);
        // Bare suffix stays intact (re-tokenization stability).
        assert_eq!(texts("do n't"), ["do", "n't"]);
    }

    #[test]
    fn punctuation_and_numbers() {
        assert_eq!(texts("Wait, really?!"), ["Wait", ",", "really", "?", "!"]);
        assert_eq!(texts("pi is 3.14 right"), ["pi", "is", "3.14", "right"]);
        assert_eq!(texts("U.S. fans agree"), ["U.S.", "fans", "agree"]);
        assert_eq!(texts("so... yeah"), ["so", "...", "yeah"]);
        assert_eq!(texts("12:30 sharp"), ["12", ":", "30", "sharp"]);
    }

    #[test]
    fn url_sheds_trailing_punctuation() {
        assert_eq!(texts("go to http://a.io."), ["go", "to", "http://a.io", "."]);
        assert_eq!(texts("(see www.example.com)"), ["(", "see", "www.example.com", ")"]);
    }

    #[test]
    fn spans_reconstruct_the_sentence() {
        let s = "see r/mma  http://a.io :) don't";
        let toks = tokenize(s);
        for t in &toks {
            assert_eq!(t.span.slice(s), t.text);
        }
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
        let total: usize = toks.iter().map(|t| t.text.len()).sum();
        assert!(total <= s.len());
    }

    #[test]
    fn tokenization_is_idempotent_on_rejoined_tokens() {
        for s in [
            "Conor McGregor is there",
            "see r/mma http://a.io :)",
            "don't stop",
            "Wait, really?!",
            "U.S. fans agree 3.14 ...",
            "ping @some_user /r/all #tag <3",
        ] {
            let once: Vec<String> = texts(s);
            let rejoined = once.join(" ");
            assert_eq!(texts(&rejoined), once, "not idempotent for {s:?}");
        }
    }

    #[test]
    fn nfc_normalization_applied() {
        // "e" + combining acute vs precomposed.
        let decomposed = "cafe\u{0301}.";
        let norm = normalize(decomposed);
        assert_eq!(norm.as_ref(), "caf\u{e9}.");
        let (n, sents) = process(decomposed);
        assert_eq!(n, "caf\u{e9}.");
        assert_eq!(sents.len(), 1);
    }
}
