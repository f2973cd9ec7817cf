//! Derivation graphs: judgments, rule names and the JSON schema shared by the
//! derivation dumps of the big-step family and by divergence certificates.
//!
//! A graph is a list of nodes, each labelled with a judgment and justified by a
//! rule whose premises are other nodes. Inductive derivations are acyclic;
//! coinductive ones may point back at an ancestor.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::syntax::{Cmd, Expr, Ident, Outcome, SemCmd, Status, Store, Val};

macro_rules! rules {
    ($($variant:ident => $name:literal,)*) => {
        /// Rule labels, named as in the usual presentation of each rule system.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Rule {
            $($variant,)*
        }

        impl Rule {
            pub const ALL: &'static [Rule] = &[$(Rule::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Rule::$variant => $name,)*
                }
            }
        }

        impl FromStr for Rule {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Rule::$variant),)*
                    other => Err(format!("unknown rule `{other}`")),
                }
            }
        }
    };
}

rules! {
    BSkip => "B-Skip",
    BAlloc => "B-Alloc",
    BAssign => "B-Assign",
    BSeq => "B-Seq",
    BIf => "B-If",
    BIfZ => "B-IfZ",
    BWhile => "B-While",
    BWhileZ => "B-WhileZ",
    DSeq1 => "D-Seq1",
    DSeq2 => "D-Seq2",
    DIf => "D-If",
    DIfZ => "D-IfZ",
    DWhileBody => "D-WhileBody",
    DWhile => "D-While",
    PSkip => "P-Skip",
    PAlloc => "P-Alloc",
    PAssign1 => "P-Assign1",
    PAssign2 => "P-Assign2",
    PSeq1 => "P-Seq1",
    PSeq2 => "P-Seq2",
    PIf => "P-If",
    PIf2 => "P-If2",
    PIfZ2 => "P-IfZ2",
    PWhile => "P-While",
    PWhile2 => "P-While2",
    PWhileZ2 => "P-WhileZ2",
    PWhile3 => "P-While3",
    PSeqAbort => "P-Seq-Abort",
    PWhileAbort => "P-While-Abort",
    FEVal => "FE-Val",
    FEVar => "FE-Var",
    FEBop => "FE-Bop",
    FEInput => "FE-Input",
    FEDiv => "FE-Div",
    FEExc => "FE-Exc",
    FSkip => "F-Skip",
    FAlloc => "F-Alloc",
    FAssign => "F-Assign",
    FSeq => "F-Seq",
    FIf => "F-If",
    FIfZ => "F-IfZ",
    FWhile => "F-While",
    FWhileZ => "F-WhileZ",
    FDiv => "F-Div",
    FThrow => "F-Throw",
    FExc => "F-Exc",
    FCatch => "F-Catch",
    FCatchSome => "F-Catch-Some",
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Rule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A rule system a graph can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    /// Inductive big-step commands (`=B=>`).
    #[serde(rename = "big")]
    Big,
    /// Inductive pretty-big-step.
    #[serde(rename = "pretty")]
    Pretty,
    /// Inductive flag-based big-step.
    #[serde(rename = "flag")]
    Flag,
    /// Coinductive divergence predicate (`=inf=>`).
    #[serde(rename = "div-pred")]
    DivPred,
    /// Coinductive pretty-big-step.
    #[serde(rename = "pretty-co")]
    PrettyCo,
    /// Coinductive flag-based big-step.
    #[serde(rename = "flag-co")]
    FlagCo,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Big => "big",
            System::Pretty => "pretty",
            System::Flag => "flag",
            System::DivPred => "div-pred",
            System::PrettyCo => "pretty-co",
            System::FlagCo => "flag-co",
        }
    }

    pub fn is_coinductive(self) -> bool {
        matches!(self, System::DivPred | System::PrettyCo | System::FlagCo)
    }

    /// The three coinductive systems divergence can be proved in.
    pub const COINDUCTIVE: [System; 3] = [System::DivPred, System::PrettyCo, System::FlagCo];
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "big" => System::Big,
            "pretty" => System::Pretty,
            "flag" => System::Flag,
            "div-pred" | "div" => System::DivPred,
            "pretty-co" => System::PrettyCo,
            "flag-co" => System::FlagCo,
            other => return Err(format!("unknown rule system `{other}`")),
        })
    }
}

/// A judgment of one of the relations. Input positions are cursors into the
/// graph-wide input stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation")]
pub enum Judgment {
    /// `(c, σ) =B=> σ'`
    #[serde(rename = "B")]
    Big {
        cmd: Cmd,
        store: Store,
        cursor: usize,
        result: Store,
        out_cursor: usize,
    },
    /// `(c, σ) =inf=>`
    #[serde(rename = "inf")]
    Div { cmd: Cmd, store: Store, cursor: usize },
    /// `(C, σ) =v o`
    #[serde(rename = "P")]
    Pretty {
        cmd: SemCmd,
        store: Store,
        cursor: usize,
        outcome: Outcome,
        out_cursor: usize,
    },
    /// `(e, σ, δ) =GE=> v, δ'`
    #[serde(rename = "GE")]
    FlagExpr {
        expr: Expr,
        store: Store,
        flag: Status,
        cursor: usize,
        value: Val,
        out_flag: Status,
        out_cursor: usize,
    },
    /// `(c, σ, δ) =G=> σ', δ'`
    #[serde(rename = "G")]
    Flag {
        cmd: Cmd,
        store: Store,
        flag: Status,
        cursor: usize,
        result: Store,
        out_flag: Status,
        out_cursor: usize,
    },
}

impl Judgment {
    pub fn relation(&self) -> &'static str {
        match self {
            Judgment::Big { .. } => "B",
            Judgment::Div { .. } => "inf",
            Judgment::Pretty { .. } => "P",
            Judgment::FlagExpr { .. } => "GE",
            Judgment::Flag { .. } => "G",
        }
    }

    pub fn store(&self) -> &Store {
        match self {
            Judgment::Big { store, .. }
            | Judgment::Div { store, .. }
            | Judgment::Pretty { store, .. }
            | Judgment::FlagExpr { store, .. }
            | Judgment::Flag { store, .. } => store,
        }
    }

    pub fn cursor(&self) -> usize {
        match self {
            Judgment::Big { cursor, .. }
            | Judgment::Div { cursor, .. }
            | Judgment::Pretty { cursor, .. }
            | Judgment::FlagExpr { cursor, .. }
            | Judgment::Flag { cursor, .. } => *cursor,
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Judgment::Big { cmd, store, result, .. } => write!(f, "({cmd}, {store}) =B=> {result}"),
            Judgment::Div { cmd, store, .. } => write!(f, "({cmd}, {store}) =inf=>"),
            Judgment::Pretty {
                cmd, store, outcome, ..
            } => write!(f, "({cmd}, {store}) =v {outcome}"),
            Judgment::FlagExpr {
                expr,
                store,
                flag,
                value,
                out_flag,
                ..
            } => write!(f, "({expr}, {store}, {flag}) =GE=> {value}, {out_flag}"),
            Judgment::Flag {
                cmd,
                store,
                flag,
                result,
                out_flag,
                ..
            } => write!(f, "({cmd}, {store}, {flag}) =G=> {result}, {out_flag}"),
        }
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub rule: Rule,
    pub judgment: Judgment,
    /// Premises in rule order. Only judgments of the graph's own relations appear
    /// here; expression evaluation and inductive side derivations are re-run by
    /// the checker.
    pub premises: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationGraph {
    pub system: System,
    /// Values consumed by `input`; judgments refer to positions in this list.
    #[serde(default)]
    pub input: Vec<Val>,
    /// Variables whose values are ignored when premises are matched.
    #[serde(default)]
    pub abstraction: BTreeSet<Ident>,
    pub root: NodeId,
    pub nodes: Vec<Node>,
}

impl DerivationGraph {
    pub fn root_node(&self) -> Option<&Node> {
        self.nodes.get(self.root)
    }

    /// Edges that point at the node itself or at a node created earlier, i.e.
    /// the coinductive back-edges of a graph emitted in depth-first order.
    pub fn back_edges(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.premises.iter().filter(|&&p| p <= n.id).count())
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graphs serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Allocates node ids in visit order while an evaluator records its derivation.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    nodes: Vec<Option<(Rule, Judgment, Vec<NodeId>)>>,
}

impl Recorder {
    pub fn reserve(&mut self) -> NodeId {
        self.nodes.push(None);
        self.nodes.len() - 1
    }

    pub fn fill(&mut self, id: NodeId, rule: Rule, judgment: Judgment, premises: Vec<NodeId>) {
        self.nodes[id] = Some((rule, judgment, premises));
    }

    /// Builds the graph, dropping reserved ids that were never filled.
    pub fn finish(
        self,
        system: System,
        input: Vec<Val>,
        abstraction: BTreeSet<Ident>,
        root: NodeId,
    ) -> DerivationGraph {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (old, slot) in self.nodes.iter().enumerate() {
            if slot.is_some() {
                remap[old] = next;
                next += 1;
            }
        }
        let nodes = self
            .nodes
            .into_iter()
            .flatten()
            .enumerate()
            .map(|(id, (rule, judgment, premises))| Node {
                id,
                rule,
                judgment,
                premises: premises
                    .into_iter()
                    .map(|p| {
                        debug_assert_ne!(remap[p], usize::MAX, "premise on an unfilled node");
                        remap[p]
                    })
                    .collect(),
            })
            .collect();
        DerivationGraph {
            system,
            input,
            abstraction,
            root: remap[root],
            nodes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), *r);
        }
        assert_eq!(Rule::DWhileBody.name(), "D-WhileBody");
        assert_eq!(Rule::FDiv.name(), "F-Div");
        assert!("F-Nope".parse::<Rule>().is_err());
    }

    #[test]
    fn recorder_compacts_unfilled_slots() {
        let mut rec = Recorder::default();
        let a = rec.reserve();
        let unused = rec.reserve();
        let b = rec.reserve();
        let j = Judgment::Div {
            cmd: Cmd::Skip,
            store: Store::new(),
            cursor: 0,
        };
        rec.fill(b, Rule::DSeq1, j.clone(), vec![a]);
        rec.fill(a, Rule::DSeq1, j, vec![b]);
        let _ = unused;
        let g = rec.finish(System::DivPred, vec![], BTreeSet::new(), b);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.root, 1);
        assert_eq!(g.nodes[1].premises, vec![0]);
        assert_eq!(g.nodes[0].premises, vec![1]);
    }

    #[test]
    fn judgment_json_is_tagged_by_relation() {
        let j = Judgment::Flag {
            cmd: Cmd::Skip,
            store: Store::new(),
            flag: Status::Down,
            cursor: 0,
            result: Store::new(),
            out_flag: Status::Up,
            out_cursor: 0,
        };
        let v = serde_json::to_value(&j).unwrap();
        assert_eq!(v["relation"], "G");
        assert_eq!(v["cmd"], "skip");
        assert_eq!(v["out_flag"], "up");
        let back: Judgment = serde_json::from_value(v).unwrap();
        assert_eq!(back, j);
    }
}
