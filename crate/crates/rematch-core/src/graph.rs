//! DOT export of the one-step transition structure reachable from a
//! starting outcome, for either perturbed process.

use std::collections::BTreeMap;
use std::io::Write;

use crate::dynamics::{outcome_key, p_step_distribution, Outcome};
use crate::flirting::q_step_distribution;
use crate::scenario::Scenario;
use crate::Error;

/// Which perturbed process drives the edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    /// Discoveries only.
    P,
    /// Flirt to the communication fixpoint before each step.
    Q,
}

impl ProcessKind {
    pub fn label(self) -> &'static str {
        match self {
            ProcessKind::P => "p",
            ProcessKind::Q => "q",
        }
    }
}

/// Breadth-first expansion from `start`, one node per reachable outcome,
/// one edge per positive-probability successor. Nodes where the process
/// stays put with probability one are drawn with a double border. Fails
/// with `BoundExceeded` if more than `bound` nodes would be emitted.
pub fn export_process_graph<W: Write>(
    sc: &Scenario,
    kind: ProcessKind,
    start: &Outcome,
    epsilon: f64,
    bound: usize,
    out: &mut W,
) -> Result<(), Error> {
    let mut ids: BTreeMap<_, usize> = BTreeMap::new();
    let mut nodes: Vec<Outcome> = Vec::new();
    let mut queue: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize, String)> = Vec::new();
    let mut absorbing: Vec<bool> = Vec::new();

    ids.insert(outcome_key(start), 0);
    nodes.push(start.clone());
    absorbing.push(false);
    queue.push(0);

    let mut head = 0;
    while head < queue.len() {
        let id = queue[head];
        head += 1;
        let node = nodes[id].clone();
        let dist = match kind {
            ProcessKind::P => p_step_distribution(sc, &node.state, &node.matching, epsilon)?,
            ProcessKind::Q => q_step_distribution(sc, &node.state, &node.matching, epsilon)?,
        };
        let self_key = outcome_key(&node);
        if dist.entries.len() == 1 {
            let only = &dist.entries[0];
            let target = Outcome { matching: only.matching.clone(), state: only.state.clone() };
            if outcome_key(&target) == self_key {
                absorbing[id] = true;
            }
        }
        for entry in &dist.entries {
            let target = Outcome { matching: entry.matching.clone(), state: entry.state.clone() };
            let key = outcome_key(&target);
            let tid = match ids.get(&key) {
                Some(&t) => t,
                None => {
                    let t = nodes.len();
                    if t >= bound {
                        return Err(Error::BoundExceeded {
                            needed: (t as u128) + 1,
                            bound: bound as u128,
                        });
                    }
                    ids.insert(key, t);
                    nodes.push(target);
                    absorbing.push(false);
                    queue.push(t);
                    t
                }
            };
            let mut label = String::new();
            for pair in &entry.pairs {
                label.push_str(&format!(
                    "({},{}) ",
                    sc.prefs.label_of(pair.0),
                    sc.prefs.label_of(pair.1)
                ));
            }
            label.push_str(&format!("{:.4}", entry.probability));
            edges.push((id, tid, label));
        }
    }

    writeln!(out, "digraph {}_process {{", kind.label())?;
    writeln!(out, "  rankdir=LR;")?;
    writeln!(out, "  node [shape=box, fontname=\"Helvetica\"];")?;
    writeln!(out, "  labelloc=t;")?;
    writeln!(out, "  label=\"{} ({} process, epsilon={})\";", sc.name, kind.label(), epsilon)?;
    for (i, node) in nodes.iter().enumerate() {
        let extra = if absorbing[i] { ", peripheries=2" } else { "" };
        writeln!(
            out,
            "  n{} [label=\"{}\\n{}\"{}];",
            i,
            node.matching.label(),
            sc.awareness_label(&node.state),
            extra
        )?;
    }
    for (from, to, label) in &edges {
        writeln!(out, "  n{} -> n{} [label=\"{}\"];", from, to, label)?;
    }
    writeln!(out, "}}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::find_builtin;

    #[test]
    fn discovery_graph_reaches_a_double_bordered_node() {
        let sc = find_builtin("example4").unwrap();
        let start = sc.initial_outcome();
        let mut buf = Vec::new();
        export_process_graph(&sc, ProcessKind::P, &start, 0.25, 100, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("digraph p_process {"));
        assert!(text.contains("peripheries=2"));
        assert!(text.contains("->"));
    }

    #[test]
    fn tiny_bound_is_reported() {
        let sc = find_builtin("example4").unwrap();
        let start = sc.initial_outcome();
        let mut buf = Vec::new();
        let err = export_process_graph(&sc, ProcessKind::P, &start, 0.25, 1, &mut buf);
        assert!(matches!(err, Err(Error::BoundExceeded { .. })));
    }
}
