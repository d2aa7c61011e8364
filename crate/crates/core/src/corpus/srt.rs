//! SubRip (`.srt`) subtitles.
//!
//! ```text
//! 1340
//! 01:23:47,129 --> 01:23:49,000
//! First line of the cue
//! second line
//! ```
//!
//! Cues are separated by blank lines. A UTF-8 BOM and CRLF line endings are
//! accepted; multi-line cue text is joined with single spaces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SrtError {
    #[error("line {line}: expected a numeric cue index, found `{found}`")]
    BadIndex { line: usize, found: String },
    #[error("cue {entry}, line {line}: malformed timestamp line `{found}`")]
    BadTimestamp {
        entry: u32,
        line: usize,
        found: String,
    },
    #[error("cue {entry}, line {line}: missing timestamp line")]
    MissingTimestamp { entry: u32, line: usize },
    #[error("cue {entry}, line {line}: start {start_ms} ms is not before end {end_ms} ms")]
    Ordering {
        entry: u32,
        line: usize,
        start_ms: u64,
        end_ms: u64,
    },
    #[error("cue {entry}, line {line}: empty cue text")]
    EmptyText { entry: u32, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrtEntry {
    pub index: u32,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

impl SrtEntry {
    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }
}

/// Parses `HH:MM:SS,mmm` (a `.` before the milliseconds is also accepted).
pub fn parse_timestamp(s: &str) -> Option<u64> {
    let (hms, ms) = s.split_once([',', '.'])?;
    let mut parts = hms.split(':');
    let (h, m, sec) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || m.len() != 2 || sec.len() != 2 || ms.len() != 3 {
        return None;
    }
    let digits = |x: &str| -> Option<u64> {
        (!x.is_empty() && x.bytes().all(|b| b.is_ascii_digit()))
            .then(|| x.parse().ok())
            .flatten()
    };
    let (h, m, sec, ms) = (digits(h)?, digits(m)?, digits(sec)?, digits(ms)?);
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + ms)
}

pub fn format_timestamp(ms: u64) -> String {
    let (h, rest) = (ms / 3_600_000, ms % 3_600_000);
    format!(
        "{:02}:{:02}:{:02},{:03}",
        h,
        rest / 60_000,
        (rest % 60_000) / 1000,
        rest % 1000
    )
}

fn parse_timing(line: &str) -> Option<(u64, u64)> {
    let (start, rest) = line.split_once("-->")?;
    // Anything after the end time (SubRip position hints) is ignored.
    let end = rest.split_whitespace().next()?;
    Some((parse_timestamp(start.trim())?, parse_timestamp(end)?))
}

pub fn parse_srt(text: &str) -> Result<Vec<SrtEntry>, SrtError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .peekable();
    let mut entries = Vec::new();
    loop {
        while lines.next_if(|(_, l)| l.trim().is_empty()).is_some() {}
        let Some((index_line, raw_index)) = lines.next() else {
            break;
        };
        let index_str = raw_index.trim();
        let index: u32 =
            index_str
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| SrtError::BadIndex {
                    line: index_line,
                    found: index_str.to_string(),
                })?;

        let (ts_line, raw_ts) = lines.next().filter(|(_, l)| !l.trim().is_empty()).ok_or(
            SrtError::MissingTimestamp {
                entry: index,
                line: index_line + 1,
            },
        )?;
        let (start_ms, end_ms) = parse_timing(raw_ts).ok_or_else(|| SrtError::BadTimestamp {
            entry: index,
            line: ts_line,
            found: raw_ts.trim().to_string(),
        })?;
        if start_ms >= end_ms {
            return Err(SrtError::Ordering {
                entry: index,
                line: ts_line,
                start_ms,
                end_ms,
            });
        }

        let mut parts = Vec::new();
        while let Some((_, l)) = lines.next_if(|(_, l)| !l.trim().is_empty()) {
            parts.push(l.trim());
        }
        if parts.is_empty() {
            return Err(SrtError::EmptyText {
                entry: index,
                line: ts_line + 1,
            });
        }
        entries.push(SrtEntry {
            index,
            start_ms,
            end_ms,
            text: parts.join(" "),
        });
    }
    Ok(entries)
}

/// Writes cues separated by exactly one blank line, `\n` line endings.
pub fn serialize_srt(entries: &[SrtEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(
            out,
            "{}\n{} --> {}\n{}\n",
            e.index,
            format_timestamp(e.start_ms),
            format_timestamp(e.end_ms),
            e.text
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "1339\n01:23:45,000 --> 01:23:47,000\nWhere are you going?\n\n1340\n01:23:47,129 --> 01:23:49,500\nI have to find him.\nBefore it's too late!\n";

    #[test]
    fn single_cue() {
        let e = parse_srt("1\n00:00:01,000 --> 00:00:02,500\nHello there").unwrap();
        assert_eq!(
            e,
            vec![SrtEntry {
                index: 1,
                start_ms: 1000,
                end_ms: 2500,
                text: "Hello there".into()
            }]
        );
    }

    #[test]
    fn fixture_with_large_index_and_multiline_text() {
        let e = parse_srt(FIXTURE).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].index, 1340);
        assert_eq!(e[1].start_ms, 5_027_129);
        assert_eq!(e[1].text, "I have to find him. Before it's too late!");
        assert_eq!(parse_srt(&serialize_srt(&e)).unwrap(), e);
    }

    #[test]
    fn bom_crlf_and_extra_blank_lines() {
        let text = "\u{feff}\r\n1\r\n00:00:01,000 --> 00:00:02,000 X1:10 X2:20\r\nHi\r\n\r\n\r\n2\r\n00:00:03.000 --> 00:00:04.000\r\nThere\r\n";
        let e = parse_srt(text).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].text, "Hi");
        assert_eq!((e[1].start_ms, e[1].end_ms), (3000, 4000));
    }

    #[test]
    fn errors_name_entry_and_line() {
        assert_eq!(
            parse_srt("7\n00:00:02,500 --> 00:00:01,000\nx"),
            Err(SrtError::Ordering {
                entry: 7,
                line: 2,
                start_ms: 2500,
                end_ms: 1000
            })
        );
        assert!(matches!(
            parse_srt(
                "1\n00:00:01,000 --> 00:00:02,000\nok\n\n2\n00:00:0x,000 --> 00:00:03,000\nbad"
            ),
            Err(SrtError::BadTimestamp {
                entry: 2,
                line: 6,
                ..
            })
        ));
        assert!(matches!(
            parse_srt("one\n00:00:01,000 --> 00:00:02,000\nx"),
            Err(SrtError::BadIndex { line: 1, .. })
        ));
        assert!(matches!(
            parse_srt("3\n00:00:01,000 --> 00:00:02,000\n"),
            Err(SrtError::EmptyText { entry: 3, .. })
        ));
        assert!(matches!(
            parse_srt("3\n\nfoo"),
            Err(SrtError::MissingTimestamp { entry: 3, .. })
        ));
        assert!(parse_timestamp("00:61:00,000").is_none());
        assert!(parse_timestamp("00:00:00,00").is_none());
    }

    #[test]
    fn serialization_grammar() {
        assert_eq!(serialize_srt(&[]), "");
        let e = parse_srt(FIXTURE).unwrap();
        let out = serialize_srt(&e);
        assert_eq!(out.matches("\n\n").count(), 1);
        assert!(out.starts_with("1339\n01:23:45,000 --> 01:23:47,000\n"));
        assert_eq!(format_timestamp(5_027_129), "01:23:47,129");
        assert_eq!(format_timestamp(100 * 3_600_000), "100:00:00,000");
    }

    pub(crate) fn cue_strategy() -> impl Strategy<Value = SrtEntry> {
        (
            1u32..100_000,
            0u64..360_000_000,
            1u64..600_000,
            "[A-Za-z0-9][A-Za-z0-9,.!?' -]{0,40}[A-Za-z0-9.!?]",
        )
            .prop_map(|(index, start_ms, len, text)| SrtEntry {
                index,
                start_ms,
                end_ms: start_ms + len,
                text,
            })
    }

    proptest! {
        #[test]
        fn round_trip(entries in proptest::collection::vec(cue_strategy(), 0..30)) {
            prop_assert_eq!(parse_srt(&serialize_srt(&entries)).unwrap(), entries.clone());
            let crlf = serialize_srt(&entries).replace('\n', "\r\n");
            prop_assert_eq!(parse_srt(&crlf).unwrap(), entries);
        }
    }
}
