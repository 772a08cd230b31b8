use serde::{Deserialize, Serialize};

use super::graph::{Pad, Task};
use crate::matrix::Matrix;

/// Fixed per-message overhead used in size accounting.
pub const HEADER_BYTES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub src: usize,
    pub dst: usize,
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum Body {
    Task(Task),
    Result { pad: Pad, outputs: Vec<Matrix> },
    FreeNodes { nodes: Vec<usize> },
    ChildStatus { overloaded: bool },
    Fragment(Fragment),
    Completion,
    FailureNotice { node: usize },
}

/// One piece of a Task or Result too large for a single message. The
/// pieces of one message share `msg_seq` and are reassembled by the
/// receiver before the whole message is handled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub pad: Option<Pad>,
    pub slot: usize,
    pub msg_seq: u64,
    pub index: usize,
    pub count: usize,
    pub bytes: String,
}

fn scalars(ms: &[Matrix]) -> usize {
    ms.iter().map(|m| m.rows() * m.cols()).sum()
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Task(_) => "Task",
            Body::Result { .. } => "Result",
            Body::FreeNodes { .. } => "FreeNodes",
            Body::ChildStatus { .. } => "ChildStatus",
            Body::Fragment(_) => "Fragment",
            Body::Completion => "Completion",
            Body::FailureNotice { .. } => "FailureNotice",
        }
    }

    /// Nominal size on the wire: 8 bytes per scalar or node id plus a
    /// fixed header; fragments count their chunk length.
    pub fn wire_size(&self) -> usize {
        HEADER_BYTES
            + match self {
                Body::Task(t) => 8 * scalars(&t.in_data),
                Body::Result { outputs, .. } => 8 * scalars(outputs),
                Body::FreeNodes { nodes } => 8 * nodes.len(),
                Body::Fragment(f) => f.bytes.len(),
                _ => 8,
            }
    }

    pub fn is_bulk(&self) -> bool {
        matches!(self, Body::Task(_) | Body::Result { .. })
    }

    pub fn target_pad(&self) -> Option<Pad> {
        match self {
            Body::Task(t) => t.ret,
            Body::Result { pad, .. } => Some(*pad),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::DropType;
    use crate::ScalarKind;

    #[test]
    fn wire_schema() {
        let m = Message { src: 0, dst: 3, seq: 7, body: Body::FreeNodes { nodes: vec![1, 2] } };
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["type"], "FreeNodes");
        assert_eq!(v["payload"]["nodes"], serde_json::json!([1, 2]));
        assert_eq!(v["src"], 0);
        let t = Task::root(DropType::Mul, vec![Matrix::identity(2, ScalarKind::Rat); 2]);
        for body in [Body::Task(t), Body::Completion, Body::FailureNotice { node: 2 }] {
            let m = Message { src: 1, dst: 0, seq: 1, body };
            let s = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Message>(&s).unwrap(), m);
        }
    }
}
