//! Strict extraction of `<answer>` values from model output, and the response log rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::prompt::PromptVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    Invalid,
}

impl Answer {
    pub fn from_bit(bit: u8) -> Answer {
        match bit {
            0 => Answer::Zero,
            1 => Answer::One,
            _ => Answer::Invalid,
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            Answer::Zero => Some(0),
            Answer::One => Some(1),
            Answer::Invalid => None,
        }
    }

    pub fn is_valid(self) -> bool {
        self != Answer::Invalid
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Zero => "0",
            Answer::One => "1",
            Answer::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub value: Answer,
    pub reasons_text: Option<String>,
}

/// Contents of the last `<tag>...</tag>` block whose opening tag is the
/// nearest one before its closing tag. Tag names match ASCII case-insensitively.
fn last_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let lower = text.to_ascii_lowercase();
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut found = None;
    let mut from = 0;
    while let Some(rel) = lower[from..].find(&close) {
        let end = from + rel;
        if let Some(start) = lower[..end].rfind(&open) {
            let body_start = start + open.len();
            // An earlier block's closing tag between open and close means this open is stale.
            if body_start <= end && !lower[body_start..end].contains(&close) {
                found = Some(&text[body_start..end]);
            }
        }
        from = end + close.len();
    }
    found
}

/// Classifies a raw model reply. Never fails; anything other than a final
/// `<answer>` holding exactly `0` or `1` is invalid.
pub fn parse_answer(raw_text: &str) -> ParsedAnswer {
    let value = match last_block(raw_text, "answer").map(str::trim) {
        Some("0") => Answer::Zero,
        Some("1") => Answer::One,
        _ => Answer::Invalid,
    };
    ParsedAnswer {
        value,
        reasons_text: last_block(raw_text, "reasons").map(|s| s.trim().to_string()),
    }
}

/// Renders a reply in the requested format.
pub fn compliant_reply(reasons: &str, bit: u8) -> String {
    format!("<reasons>{reasons}</reasons>\n<answer>{bit}</answer>")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TransportStatus {
    Ok,
    Failed { error: String },
}

/// One logged probe of one item under one prompt variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub item_id: String,
    pub prompt_variant: PromptVariant,
    pub model_id: String,
    pub request_hash: String,
    pub raw_text: String,
    pub latency_ms: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub status: TransportStatus,
    pub attempts: u32,
}

impl RawResponse {
    pub fn is_ok(&self) -> bool {
        self.status == TransportStatus::Ok
    }

    pub fn answer(&self) -> Answer {
        if self.is_ok() {
            parse_answer(&self.raw_text).value
        } else {
            Answer::Invalid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_forms() {
        assert_eq!(
            parse_answer("<reasons>equal</reasons><answer>1</answer>").value,
            Answer::One
        );
        assert_eq!(
            parse_answer("<reasons>equal</reasons><answer>1</answer>")
                .reasons_text
                .as_deref(),
            Some("equal")
        );
        assert_eq!(parse_answer("<answer>yes</answer>").value, Answer::Invalid);
        assert_eq!(
            parse_answer("text <answer>0</answer> text <answer>1</answer>").value,
            Answer::One
        );
        assert_eq!(parse_answer("").value, Answer::Invalid);
        assert_eq!(parse_answer("<answer> 0 \n</answer>").value, Answer::Zero);
        assert_eq!(parse_answer("<ANSWER>0</ANSWER>").value, Answer::Zero);
    }

    #[test]
    fn malformed_blocks() {
        assert_eq!(parse_answer("<answer>1").value, Answer::Invalid);
        assert_eq!(parse_answer("1</answer>").value, Answer::Invalid);
        assert_eq!(parse_answer("<answer><answer>0</answer>").value, Answer::Zero);
        assert_eq!(
            parse_answer("<answer>1</answer><answer>maybe</answer>").value,
            Answer::Invalid
        );
        assert_eq!(parse_answer("<answer>0</answer></answer>").value, Answer::Zero);
        assert_eq!(parse_answer("<answer>01</answer>").value, Answer::Invalid);
        assert_eq!(parse_answer("The answer is 1.").value, Answer::Invalid);
    }

    #[test]
    fn non_ascii_input_is_safe() {
        assert_eq!(parse_answer("ÄÖÜ <answer>1</answer> ß").value, Answer::One);
        assert_eq!(parse_answer("<answer>İ</answer>").value, Answer::Invalid);
    }

    #[test]
    fn serde_codes() {
        assert_eq!(serde_json::to_string(&Answer::One).unwrap(), "\"1\"");
        assert_eq!(serde_json::to_string(&Answer::Invalid).unwrap(), "\"invalid\"");
    }
}
