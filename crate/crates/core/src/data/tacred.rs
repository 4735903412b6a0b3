//! TACRED JSON schema.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::instance::{Corpus, Instance, LabelVocabulary};
use crate::error::{Error, Result};

/// One record of the public TACRED release. Extra fields present in the
/// release (`docid`, `stanford_pos`, `stanford_ner`) are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacredRecord {
    pub id: String,
    pub token: Vec<String>,
    pub subj_start: usize,
    pub subj_end: usize,
    pub obj_start: usize,
    pub obj_end: usize,
    pub subj_type: String,
    pub obj_type: String,
    pub stanford_head: Vec<usize>,
    pub stanford_deprel: Vec<String>,
    pub relation: String,
}

impl From<TacredRecord> for Instance {
    fn from(r: TacredRecord) -> Self {
        Instance {
            id: r.id,
            tokens: r.token,
            subj_span: (r.subj_start, r.subj_end),
            obj_span: (r.obj_start, r.obj_end),
            subj_type: r.subj_type,
            obj_type: r.obj_type,
            dep_heads: r.stanford_head,
            dep_labels: r.stanford_deprel,
            relation: r.relation,
        }
    }
}

impl From<&Instance> for TacredRecord {
    fn from(i: &Instance) -> Self {
        TacredRecord {
            id: i.id.clone(),
            token: i.tokens.clone(),
            subj_start: i.subj_span.0,
            subj_end: i.subj_span.1,
            obj_start: i.obj_span.0,
            obj_end: i.obj_span.1,
            subj_type: i.subj_type.clone(),
            obj_type: i.obj_type.clone(),
            stanford_head: i.dep_heads.clone(),
            stanford_deprel: i.dep_labels.clone(),
            relation: i.relation.clone(),
        }
    }
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = bytes.split_inclusive(|&b| b == b'\n').take(line - 1).map(<[u8]>::len).sum::<usize>();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

/// Parses a TACRED-schema JSON array. Instance order is preserved and the
/// vocabulary is the sorted set of observed relations plus `no_relation`.
pub fn parse_tacred_json(bytes: &[u8]) -> Result<Corpus> {
    let values: Vec<Value> = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse { offset: byte_offset(bytes, e.line(), e.column()), message: e.to_string() })?;

    let mut instances = Vec::with_capacity(values.len());
    for (pos, value) in values.into_iter().enumerate() {
        let id =
            value.get("id").and_then(Value::as_str).map(str::to_owned).unwrap_or_else(|| format!("<record {pos}>"));
        let record: TacredRecord = serde_json::from_value(value).map_err(|e| Error::validation(&id, e.to_string()))?;
        let inst = Instance::from(record);
        inst.validate()?;
        instances.push(inst);
    }

    let vocab = LabelVocabulary::from_observed(instances.iter().map(|i| i.relation.as_str()))?;
    Corpus::new(instances, vocab)
}

/// Serializes instances in the TACRED schema, one record per line.
pub fn write_tacred_json(instances: &[Instance]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(b"[\n");
    for (i, inst) in instances.iter().enumerate() {
        if i > 0 {
            out.extend_from_slice(b",\n");
        }
        serde_json::to_writer(&mut out, &TacredRecord::from(inst))?;
    }
    out.extend_from_slice(b"\n]\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BILL: &str = r#"[{"id":"ex-1","token":["Bill","founded","Acme"],
        "subj_start":0,"subj_end":0,"obj_start":2,"obj_end":2,
        "subj_type":"PERSON","obj_type":"ORGANIZATION",
        "stanford_head":[2,0,2],"stanford_deprel":["nsubj","ROOT","dobj"],
        "stanford_pos":["NNP","VBD","NNP"],
        "relation":"org:founded_by"}]"#;

    #[test]
    fn parses_single_record() {
        let corpus = parse_tacred_json(BILL.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 1);
        let inst = &corpus.instances[0];
        assert_eq!(inst.tokens, ["Bill", "founded", "Acme"]);
        assert_eq!(inst.subj_span, (0, 0));
        assert_eq!(inst.obj_span, (2, 2));
        assert_eq!(inst.dep_heads, [2, 0, 2]);
        assert_eq!(corpus.vocab.labels(), ["no_relation", "org:founded_by"]);
        assert_eq!(corpus.vocab.negative_label(), "no_relation");
    }

    #[test]
    fn span_out_of_range_names_id() {
        let bad = BILL.replace(r#""subj_start":0,"subj_end":0"#, r#""subj_start":5,"subj_end":5"#);
        match parse_tacred_json(bad.as_bytes()) {
            Err(Error::Validation { id, .. }) => assert_eq!(id, "ex-1"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_id() {
        let bad = BILL.replace(r#""relation":"org:founded_by""#, r#""rel":"x""#);
        match parse_tacred_json(bad.as_bytes()) {
            Err(Error::Validation { id, message }) => {
                assert_eq!(id, "ex-1");
                assert!(message.contains("relation"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn head_cycle_names_id() {
        let bad = BILL.replace("[2,0,2]", "[3,0,1]");
        let err = parse_tacred_json(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation { ref id, .. } if id == "ex-1"), "{err}");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let text = b"[\n  {\"id\": }\n]";
        match parse_tacred_json(text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(text[offset], b'}'),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_array_has_no_labels() {
        let err = parse_tacred_json(b"[]").unwrap_err();
        assert!(err.to_string().contains("no labels observed"), "{err}");
    }

    #[test]
    fn write_then_parse_is_identity() {
        let corpus = parse_tacred_json(BILL.as_bytes()).unwrap();
        let bytes = write_tacred_json(&corpus.instances).unwrap();
        assert_eq!(parse_tacred_json(&bytes).unwrap(), corpus);
    }
}
