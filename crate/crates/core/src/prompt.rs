//! Question pairs and the exact prompt texts sent to models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{case, list_cases, CatalogError, GroundTruth};

/// Appended under every question.
pub const ANSWER_BLOCK: &str = "Answer Instructions:
1. Write your reasoning inside <reasons>...</reasons>.
  - Use natural language explanation.
2. Give the final numeric answer inside <answer>...</answer>.
  - Use \"1\" if yes.
  - Use \"0\" if no.
  - Do not write anything else inside <answer>.";

/// System instruction for the instructional variant, reproduced byte for byte
/// (including its mixed quote marks and tab-separated bullets).
pub const VISUAL_COMPARISON_INSTRUCTION: &str = "Visual Comparison Instructions:
Base your judgment exclusively on direct visual perception of the image. Compare the two targets systematically using only what is visible in the image itself.
Critical constraints:
\t\u{2022}\tDisregard language priors and linguistic biases
\t\u{2022}\tIgnore implications from question phrasing
\t\u{2022}\tSet aside world knowledge and assumptions
\t\u{2022}\tDo not rely on typical patterns or expectations
Required approach:
\t1.\tEvaluate the \"equal\u{201d} hypothesis against visual evidence
\t2.\tEvaluate the \"not equal\u{201d} hypothesis against visual evidence
\t3.\tCompare which hypothesis better matches the observable data
\t4.\tProvide a binary answer based solely on this visual analysis
Your response must be grounded entirely in what you can directly perceive in the image.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPair {
    pub forward: String,
    pub reverse: String,
    pub polarity_forward: i8,
}

impl QuestionPair {
    pub fn polarity_reverse(&self) -> i8 {
        -self.polarity_forward
    }
}

pub fn question_pair(case_id: u8) -> Result<QuestionPair, PromptError> {
    let desc = case(case_id)?;
    Ok(QuestionPair {
        forward: desc.forward_question.clone(),
        reverse: desc.reverse_question.clone(),
        polarity_forward: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Forward,
    Reverse,
}

/// One way of asking about an image. The instructional variants keep the
/// user question and add the visual-comparison system instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptVariant {
    Forward,
    Reverse,
    Instructional,
    InstructionalReverse,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 4] = [
        PromptVariant::Forward,
        PromptVariant::Reverse,
        PromptVariant::Instructional,
        PromptVariant::InstructionalReverse,
    ];

    pub fn polarity(self) -> Polarity {
        match self {
            PromptVariant::Forward | PromptVariant::Instructional => Polarity::Forward,
            PromptVariant::Reverse | PromptVariant::InstructionalReverse => Polarity::Reverse,
        }
    }

    pub fn is_instructional(self) -> bool {
        matches!(self, PromptVariant::Instructional | PromptVariant::InstructionalReverse)
    }

    pub fn code(self) -> &'static str {
        match self {
            PromptVariant::Forward => "forward",
            PromptVariant::Reverse => "reverse",
            PromptVariant::Instructional => "instructional",
            PromptVariant::InstructionalReverse => "instructional-reverse",
        }
    }

    pub fn parse(code: &str) -> Option<PromptVariant> {
        PromptVariant::ALL.into_iter().find(|v| v.code() == code)
    }

    /// The correct binary answer to this variant's question.
    pub fn expected_answer(self, truth: &GroundTruth) -> u8 {
        match self {
            PromptVariant::Forward => truth.y_forward,
            PromptVariant::Instructional => truth.y_instructional,
            PromptVariant::Reverse | PromptVariant::InstructionalReverse => truth.y_reverse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPlan {
    pub variants: Vec<PromptVariant>,
}

impl Default for PromptPlan {
    fn default() -> Self {
        PromptPlan {
            variants: vec![PromptVariant::Forward, PromptVariant::Reverse],
        }
    }
}

impl PromptPlan {
    /// Deduplicated, ordered variants.
    pub fn normalized(&self) -> Vec<PromptVariant> {
        let mut v = self.variants.clone();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub system: Option<String>,
    pub user: String,
}

impl PromptText {
    /// Single string covering both slots; what request hashes are computed over.
    pub fn fingerprint(&self) -> String {
        match &self.system {
            Some(s) => format!("system:\n{s}\nuser:\n{}", self.user),
            None => format!("user:\n{}", self.user),
        }
    }
}

pub fn render_prompt(question: &str, instructional: bool) -> Result<PromptText, PromptError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    Ok(PromptText {
        system: instructional.then(|| VISUAL_COMPARISON_INSTRUCTION.to_string()),
        user: format!("{question}\n{ANSWER_BLOCK}"),
    })
}

/// Prompt for one case under one variant.
pub fn prompt_for(case_id: u8, variant: PromptVariant) -> Result<PromptText, PromptError> {
    let pair = question_pair(case_id)?;
    let q = match variant.polarity() {
        Polarity::Forward => &pair.forward,
        Polarity::Reverse => &pair.reverse,
    };
    render_prompt(q, variant.is_instructional())
}

#[derive(Debug, Clone, Serialize)]
struct CasePrompts {
    case_id: u8,
    questions: QuestionPair,
    prompts: Vec<(PromptVariant, PromptText)>,
}

/// Audit document listing every prompt a plan sends, per case.
pub fn prompts_document(case_ids: &[u8], plan: &PromptPlan) -> Result<String, PromptError> {
    let ids: Vec<u8> = if case_ids.is_empty() {
        list_cases().iter().map(|c| c.case_id).collect()
    } else {
        case_ids.to_vec()
    };
    let mut cases = Vec::new();
    for id in ids {
        let prompts = plan
            .normalized()
            .into_iter()
            .map(|v| prompt_for(id, v).map(|p| (v, p)))
            .collect::<Result<_, _>>()?;
        cases.push(CasePrompts {
            case_id: id,
            questions: question_pair(id)?,
            prompts,
        });
    }
    let doc = serde_json::json!({
        "answer_block": ANSWER_BLOCK,
        "system_instruction": VISUAL_COMPARISON_INSTRUCTION,
        "cases": cases,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("prompt document serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_one_questions() {
        let q = question_pair(1).unwrap();
        assert_eq!(q.forward, "Are the two black lines of equal length?");
        assert_eq!(q.reverse, "Are the two black lines different in length?");
        assert_eq!(q.polarity_reverse(), -1);
        assert_eq!(
            question_pair(23).unwrap().forward,
            "Are those vertical columns parallel?"
        );
        assert!(question_pair(28).is_err());
    }

    #[test]
    fn answer_block_closes_every_prompt() {
        let p = prompt_for(1, PromptVariant::Forward).unwrap();
        assert!(p.system.is_none());
        assert!(p
            .user
            .starts_with("Are the two black lines of equal length?\nAnswer Instructions:\n"));
        assert!(p.user.ends_with("  - Do not write anything else inside <answer>."));
        let r = prompt_for(1, PromptVariant::Reverse).unwrap();
        assert!(r.user.ends_with(ANSWER_BLOCK));
    }

    #[test]
    fn instructional_only_touches_system_slot() {
        let plain = prompt_for(1, PromptVariant::Forward).unwrap();
        let inst = prompt_for(1, PromptVariant::Instructional).unwrap();
        assert_eq!(plain.user, inst.user);
        let sys = inst.system.unwrap();
        assert!(sys.contains("Disregard language priors and linguistic biases"));
        assert!(sys.starts_with(
            "Visual Comparison Instructions:\nBase your judgment exclusively on direct visual perception"
        ));
        assert_eq!(PromptVariant::Instructional.polarity(), Polarity::Forward);
    }

    #[test]
    fn rendering_is_stable() {
        assert_eq!(render_prompt("Q?", true).unwrap(), render_prompt("Q?", true).unwrap());
        assert!(matches!(render_prompt("  ", false), Err(PromptError::EmptyQuestion)));
    }

    #[test]
    fn truthful_answers_are_complementary() {
        for desc in list_cases() {
            for kind in crate::catalog::VariantKind::ALL {
                let alpha = if kind.is_perturbed() { 0.4 } else { 0.0 };
                let gt = crate::catalog::ground_truth(desc.case_id, kind, alpha).unwrap();
                let f = PromptVariant::Forward.expected_answer(&gt);
                let r = PromptVariant::Reverse.expected_answer(&gt);
                assert_eq!(f + r, 1);
                assert_eq!(PromptVariant::Instructional.expected_answer(&gt), f);
            }
        }
    }

    #[test]
    fn document_lists_plan() {
        let doc = prompts_document(&[1, 2], &PromptPlan::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["cases"].as_array().unwrap().len(), 2);
        assert_eq!(v["cases"][0]["prompts"].as_array().unwrap().len(), 2);
    }
}
