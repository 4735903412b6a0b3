//! Typed entity markers: `@ * type * subject @` and `# ^ type ^ object #`.

use serde::{Deserialize, Serialize};

use super::instance::Instance;

pub const SUBJ_OUTER: &str = "@";
pub const SUBJ_INNER: &str = "*";
pub const OBJ_OUTER: &str = "#";
pub const OBJ_INNER: &str = "^";

/// An entity-marked token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedSequence {
    pub tokens: Vec<String>,
    /// Position of the subject's opening `@`.
    pub subj_anchor: usize,
    /// Position of the object's opening `#`.
    pub obj_anchor: usize,
    /// Original-token index per position; `None` for inserted markers.
    pub origin_map: Vec<Option<usize>>,
    /// Inclusive marked-sequence range of the subject's original tokens.
    pub subj_tokens: (usize, usize),
    pub obj_tokens: (usize, usize),
    /// Positions of the five subject marker tokens.
    pub subj_markers: Vec<usize>,
    pub obj_markers: Vec<usize>,
}

impl MarkedSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The original tokens, with every marker removed.
    pub fn strip_markers(&self) -> Vec<&str> {
        self.tokens.iter().zip(&self.origin_map).filter(|(_, o)| o.is_some()).map(|(t, _)| t.as_str()).collect()
    }
}

/// Wraps both entity spans in typed markers. Works for either span order,
/// including adjacent spans.
pub fn insert_typed_markers(inst: &Instance) -> MarkedSequence {
    let subj_type = inst.subj_type.to_lowercase();
    let obj_type = inst.obj_type.to_lowercase();
    let cap = inst.tokens.len() + 10;
    let mut tokens = Vec::with_capacity(cap);
    let mut origin_map = Vec::with_capacity(cap);
    let mut subj_markers = Vec::with_capacity(5);
    let mut obj_markers = Vec::with_capacity(5);
    let (mut subj_anchor, mut obj_anchor) = (0, 0);
    let (mut subj_tokens, mut obj_tokens) = ((0, 0), (0, 0));

    fn push_marker(tokens: &mut Vec<String>, origin_map: &mut Vec<Option<usize>>, markers: &mut Vec<usize>, tok: &str) {
        markers.push(tokens.len());
        tokens.push(tok.to_owned());
        origin_map.push(None);
    }

    for (i, tok) in inst.tokens.iter().enumerate() {
        if i == inst.subj_span.0 {
            subj_anchor = tokens.len();
            for m in [SUBJ_OUTER, SUBJ_INNER, subj_type.as_str(), SUBJ_INNER] {
                push_marker(&mut tokens, &mut origin_map, &mut subj_markers, m);
            }
            subj_tokens.0 = tokens.len();
        }
        if i == inst.obj_span.0 {
            obj_anchor = tokens.len();
            for m in [OBJ_OUTER, OBJ_INNER, obj_type.as_str(), OBJ_INNER] {
                push_marker(&mut tokens, &mut origin_map, &mut obj_markers, m);
            }
            obj_tokens.0 = tokens.len();
        }
        tokens.push(tok.clone());
        origin_map.push(Some(i));
        if i == inst.subj_span.1 {
            subj_tokens.1 = tokens.len() - 1;
            push_marker(&mut tokens, &mut origin_map, &mut subj_markers, SUBJ_OUTER);
        }
        if i == inst.obj_span.1 {
            obj_tokens.1 = tokens.len() - 1;
            push_marker(&mut tokens, &mut origin_map, &mut obj_markers, OBJ_OUTER);
        }
    }

    MarkedSequence { tokens, subj_anchor, obj_anchor, origin_map, subj_tokens, obj_tokens, subj_markers, obj_markers }
}
