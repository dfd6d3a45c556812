//! Result serialization: text, TSV, JSON, and the method-comparison
//! sheet handed to human raters.

use super::{GenerationReport, Method, VaResult};

/// One sentence per line, in rank order.
pub fn results_to_text(results: &[VaResult]) -> String {
    let mut out = String::new();
    for result in results {
        out.push_str(&result.sentence);
        out.push('\n');
    }
    out
}

pub const RESULT_TSV_HEADER: &str = "rank\tsentence\tmethod\tsimilarity\tl1\tsource_id\ttarget_id\tmodifier_id";

/// Fixed-column TSV: `rank sentence method similarity l1 source_id
/// target_id modifier_id`.
pub fn results_to_tsv(results: &[VaResult]) -> String {
    let mut out = String::from(RESULT_TSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}\t{}\n",
            r.rank, r.sentence, r.method, r.similarity, r.l1, r.source.id, r.target.id, r.modifier_id
        ));
    }
    out
}

/// The full report (results plus provenance) as one JSON document.
pub fn report_to_json(report: &GenerationReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization is infallible")
}

/// One comparison row: the requested target and one cell per method,
/// each either a sentence or a short error code.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub target: String,
    pub cells: Vec<Result<String, String>>,
}

/// Comparison sheet: one row per target, and per method a sentence
/// column plus a blank `rating_1_to_5` column for annotators. Failures
/// are annotated in-cell as `ERROR:<code>`.
pub fn comparison_tsv(methods: &[Method], rows: &[ComparisonRow]) -> String {
    let mut out = String::from("target");
    for method in methods {
        out.push_str(&format!("\t{method}\trating_1_to_5"));
    }
    out.push('\n');

    for row in rows {
        out.push_str(&row.target);
        for cell in &row.cells {
            match cell {
                Ok(sentence) => out.push_str(&format!("\t{sentence}\t")),
                Err(code) => out.push_str(&format!("\tERROR:{code}\t")),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{CandidateKind, CandidateRecord, Gender, Occupation, TargetProfile};
    use crate::pipeline::{surface::Verb, Method};

    fn sample_result() -> VaResult {
        VaResult {
            rank: 1,
            sentence: "Alan Turing was the John Stuart Mill of computer scientists".into(),
            method: Method::Projection,
            similarity: 0.912345678,
            l1: 12.5,
            verb: Verb::Was,
            modifier_id: "Q82594".parse().unwrap(),
            modifier_label: "computer scientists".into(),
            source: CandidateRecord {
                id: "Q12718".parse().unwrap(),
                label: "John Stuart Mill".into(),
                occupation_id: "Q4964182".parse().unwrap(),
                occupation_label: "philosopher".into(),
                sitelinks: 120,
                kind: CandidateKind::Human,
            },
            target: TargetProfile {
                id: "Q7251".parse().unwrap(),
                label: "Alan Turing".into(),
                occupations: vec![Occupation {
                    id: "Q82594".parse().unwrap(),
                    label: "computer scientist".into(),
                }],
                has_date_of_death: true,
                gender: Gender::Male,
            },
        }
    }

    #[test]
    fn text_is_one_sentence_per_line() {
        let text = results_to_text(&[sample_result()]);
        assert_eq!(
            text,
            "Alan Turing was the John Stuart Mill of computer scientists\n"
        );
    }

    #[test]
    fn tsv_has_fixed_columns() {
        let tsv = results_to_tsv(&[sample_result()]);
        let mut lines = tsv.lines();
        assert_eq!(lines.next().unwrap(), RESULT_TSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split('\t').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "1");
        assert_eq!(fields[2], "projection");
        assert_eq!(fields[3], "0.912346");
        assert_eq!(fields[5], "Q12718");
        assert_eq!(fields[6], "Q7251");
        assert_eq!(fields[7], "Q82594");
    }

    #[test]
    fn comparison_sheet_shape_and_errors() {
        let methods = [Method::Projection, Method::Translational];
        let rows = vec![
            ComparisonRow {
                target: "Alan Turing".into(),
                cells: vec![Ok("s1".into()), Ok("s2".into())],
            },
            ComparisonRow {
                target: "Nobody".into(),
                cells: vec![Err("NoOccupation".into()), Err("NoOccupation".into())],
            },
        ];
        let tsv = comparison_tsv(&methods, &rows);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "target\tprojection\trating_1_to_5\ttranslational\trating_1_to_5"
        );
        assert_eq!(lines[0].split('\t').count(), 5);
        assert_eq!(lines[1].split('\t').count(), 5);
        assert!(lines[2].contains("ERROR:NoOccupation"));
    }
}
