//! Binary cluster trees and their nested-parenthesis text form.
//!
//! Grammar (whitespace is not allowed):
//!
//! ```text
//! tree  := leaf | "(" tree "," tree ")" [ ":" rank ]
//! leaf  := point id (or the point index when no ids are given)
//! rank  := decimal integer in 1..n-1
//! ```
//!
//! Ranks are either present on every internal node or on none. Without
//! ranks, internal nodes are numbered in post-order.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Index of a node in a [`ClusterTree`]. Leaves are `0..n` (the point
/// index), internal node `n + t` is created by merge number `t + 1`.
pub type NodeId = usize;

/// A binary merge tree over `n` points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClusterTree {
    n: usize,
    merges: Vec<(NodeId, NodeId)>,
}

impl ClusterTree {
    /// Builds a tree from its merge sequence, validating that every node is
    /// used exactly once as a child and only after it was created.
    pub fn from_merges(n: usize, merges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a cluster tree needs at least one leaf"));
        }
        if merges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "{} merges for {n} leaves, expected {}",
                merges.len(),
                n - 1
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        for (t, &(a, b)) in merges.iter().enumerate() {
            let own = n + t;
            for c in [a, b] {
                if c >= own || used[c] {
                    return Err(Error::invalid(format!(
                        "invalid child {c} in merge {}",
                        t + 1
                    )));
                }
                used[c] = true;
            }
            if a == b {
                return Err(Error::invalid("a node cannot merge with itself"));
            }
        }
        Ok(ClusterTree { n, merges })
    }

    pub(crate) fn from_merges_unchecked(n: usize, merges: Vec<(NodeId, NodeId)>) -> Self {
        debug_assert!(ClusterTree::from_merges(n, merges.clone()).is_ok());
        ClusterTree { n, merges }
    }

    pub fn num_leaves(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.n - 1
    }

    pub fn merges(&self) -> &[(NodeId, NodeId)] {
        &self.merges
    }

    pub fn root(&self) -> NodeId {
        2 * self.n - 2
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        node < self.n
    }

    pub fn children(&self, node: NodeId) -> Option<(NodeId, NodeId)> {
        if node < self.n {
            None
        } else {
            Some(self.merges[node - self.n])
        }
    }

    /// Merge rank in `1..n` for internal nodes.
    pub fn rank(&self, node: NodeId) -> Option<usize> {
        (node >= self.n).then(|| node - self.n + 1)
    }

    /// Sorted leaf indices under `node`.
    pub fn leaves(&self, node: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                None => out.push(v),
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Sorted member lists of every internal node. Two trees have the same
    /// topology iff these are equal.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = (0..self.n).map(|i| vec![i]).collect();
        for &(a, b) in &self.merges {
            let mut m: Vec<usize> = members[a].iter().chain(&members[b]).copied().collect();
            m.sort_unstable();
            members.push(m);
        }
        let mut internal = members.split_off(self.n);
        internal.sort();
        internal
    }

    /// Same set of clusters, ignoring merge order and child order.
    pub fn same_topology(&self, other: &ClusterTree) -> bool {
        self.n == other.n && self.clusters() == other.clusters()
    }

    /// Serializes with point indices as leaf names.
    pub fn to_text(&self, with_ranks: bool) -> String {
        let ids: Vec<String> = (0..self.n).map(|i| i.to_string()).collect();
        self.to_text_with_ids(&ids, with_ranks)
    }

    pub fn to_text_with_ids<S: AsRef<str>>(&self, ids: &[S], with_ranks: bool) -> String {
        let mut out = String::new();
        self.write_node(self.root(), ids, with_ranks, &mut out);
        out
    }

    fn write_node<S: AsRef<str>>(&self, node: NodeId, ids: &[S], ranks: bool, out: &mut String) {
        match self.children(node) {
            None => out.push_str(ids[node].as_ref()),
            Some((a, b)) => {
                out.push('(');
                self.write_node(a, ids, ranks, out);
                out.push(',');
                self.write_node(b, ids, ranks, out);
                out.push(')');
                if ranks {
                    out.push(':');
                    out.push_str(&self.rank(node).unwrap().to_string());
                }
            }
        }
    }

    /// Parses the text form. Leaves are resolved against `ids` when given,
    /// otherwise they must be point indices.
    pub fn parse<S: AsRef<str>>(text: &str, ids: Option<&[S]>) -> Result<Self> {
        let lookup: Option<HashMap<&str, usize>> = ids.map(|ids| {
            ids.iter()
                .enumerate()
                .map(|(i, s)| (s.as_ref(), i))
                .collect()
        });
        let mut parser = Parser {
            src: text.trim().as_bytes(),
            pos: 0,
            lookup,
            leaves: Vec::new(),
            internal: Vec::new(),
        };
        let root = parser.node()?;
        if parser.pos != parser.src.len() {
            return Err(Error::parse(
                1,
                format!("trailing input at byte {}", parser.pos),
            ));
        }
        let n = parser.leaves.len();
        let mut seen = vec![false; n];
        for &l in &parser.leaves {
            if l >= n || seen[l] {
                return Err(Error::parse(1, "leaves must cover 0..n exactly once"));
            }
            seen[l] = true;
        }
        if n == 0 {
            return Err(Error::parse(1, "empty tree"));
        }
        if let Pnode::Leaf(_) = root {
            return ClusterTree::from_merges(1, vec![]);
        }

        // Assign ranks: explicit ones if every node has one, else post-order.
        let internal = parser.internal;
        let ranked = internal.iter().filter(|m| m.2.is_some()).count();
        let order: Vec<usize> = if ranked == internal.len() {
            let mut by_rank: Vec<Option<usize>> = vec![None; internal.len()];
            for (i, m) in internal.iter().enumerate() {
                let r = m.2.unwrap();
                if r == 0 || r > internal.len() || by_rank[r - 1].is_some() {
                    return Err(Error::parse(1, format!("invalid or duplicate rank {r}")));
                }
                by_rank[r - 1] = Some(i);
            }
            by_rank.into_iter().map(Option::unwrap).collect()
        } else if ranked == 0 {
            (0..internal.len()).collect()
        } else {
            return Err(Error::parse(
                1,
                "ranks must be given on all internal nodes or none",
            ));
        };
        let mut id_of = vec![0; internal.len()];
        for (t, &i) in order.iter().enumerate() {
            id_of[i] = n + t;
        }
        let resolve = |p: Pnode| match p {
            Pnode::Leaf(l) => l,
            Pnode::Internal(i) => id_of[i],
        };
        let merges = order
            .iter()
            .map(|&i| (resolve(internal[i].0), resolve(internal[i].1)))
            .collect();
        ClusterTree::from_merges(n, merges)
            .map_err(|e| Error::parse(1, format!("ranks inconsistent with nesting: {e}")))
    }
}

#[derive(Clone, Copy)]
enum Pnode {
    Leaf(usize),
    Internal(usize),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    lookup: Option<HashMap<&'a str, usize>>,
    leaves: Vec<usize>,
    internal: Vec<(Pnode, Pnode, Option<usize>)>,
}

impl Parser<'_> {
    fn expect(&mut self, c: u8) -> Result<()> {
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::parse(
                1,
                format!("expected '{}' at byte {}", c as char, self.pos),
            ))
        }
    }

    fn token(&mut self) -> &str {
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if matches!(c, b'(' | b')' | b',' | b':') {
                break;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn node(&mut self) -> Result<Pnode> {
        if self.src.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            let a = self.node()?;
            self.expect(b',')?;
            let b = self.node()?;
            self.expect(b')')?;
            let rank = if self.src.get(self.pos) == Some(&b':') {
                self.pos += 1;
                let tok = self.token();
                Some(
                    tok.parse::<usize>()
                        .map_err(|_| Error::parse(1, format!("bad rank '{tok}'")))?,
                )
            } else {
                None
            };
            self.internal.push((a, b, rank));
            Ok(Pnode::Internal(self.internal.len() - 1))
        } else {
            let tok = self.token().to_string();
            if tok.is_empty() {
                return Err(Error::parse(
                    1,
                    format!("expected a leaf at byte {}", self.pos),
                ));
            }
            let idx = match &self.lookup {
                Some(map) => *map
                    .get(tok.as_str())
                    .ok_or_else(|| Error::parse(1, format!("unknown point id '{tok}'")))?,
                None => tok
                    .parse::<usize>()
                    .map_err(|_| Error::parse(1, format!("bad leaf index '{tok}'")))?,
            };
            self.leaves.push(idx);
            Ok(Pnode::Leaf(idx))
        }
    }
}
