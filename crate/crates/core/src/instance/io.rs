//! Line-oriented text formats for instances and outcomes.
//!
//! ```text
//! # comment
//! nodes 3
//! bound 1
//! edge 1 2 1.0 0.5
//! edge 2 3 0.6 0.5
//! ```
//!
//! `bound` is optional (default 1) and must precede the edge lines. The
//! split fraction on an edge line belongs to the endpoint written first.
//! Outcome files list `match u v` lines followed by one `gamma i value`
//! line for every node.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Edge, Instance, Matching, Outcome};
use crate::error::{InstanceError, ParseError};
use crate::DEFAULT_TOL_EQ;

fn directives(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((idx + 1, fields))
    })
}

fn parse_node(line: usize, field: &str) -> Result<usize, ParseError> {
    let id: usize = field
        .parse()
        .map_err(|_| ParseError::malformed(line, format!("bad node id `{field}`")))?;
    if id == 0 {
        return Err(ParseError::malformed(line, "node ids start at 1"));
    }
    Ok(id - 1)
}

fn parse_real(line: usize, field: &str) -> Result<f64, ParseError> {
    let x: f64 = field
        .parse()
        .map_err(|_| ParseError::malformed(line, format!("bad number `{field}`")))?;
    if !x.is_finite() {
        return Err(ParseError::malformed(line, format!("non-finite number `{field}`")));
    }
    Ok(x)
}

fn arity(line: usize, fields: &[&str], n: usize) -> Result<(), ParseError> {
    if fields.len() != n {
        return Err(ParseError::malformed(
            line,
            format!("`{}` takes {} arguments", fields[0], n - 1),
        ));
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut node_count: Option<usize> = None;
    let mut bound = 1.0;
    let mut edges: Vec<Edge> = Vec::new();
    let mut seen = HashSet::new();

    for (line, fields) in directives(text) {
        match fields[0] {
            "nodes" => {
                arity(line, &fields, 2)?;
                if node_count.is_some() {
                    return Err(ParseError::malformed(line, "repeated `nodes` directive"));
                }
                let n: usize = fields[1].parse().map_err(|_| {
                    ParseError::malformed(line, format!("bad node count `{}`", fields[1]))
                })?;
                if n == 0 {
                    return Err(ParseError::Invalid {
                        line,
                        source: InstanceError::NoNodes,
                    });
                }
                node_count = Some(n);
            }
            "bound" => {
                arity(line, &fields, 2)?;
                if !edges.is_empty() {
                    return Err(ParseError::malformed(line, "`bound` must precede edges"));
                }
                bound = parse_real(line, fields[1])?;
                if bound <= 0.0 {
                    return Err(ParseError::Invalid {
                        line,
                        source: InstanceError::BadBound(bound),
                    });
                }
            }
            "edge" => {
                arity(line, &fields, 5)?;
                let n = node_count.ok_or(ParseError::MissingNodes)?;
                let e = Edge {
                    u: parse_node(line, fields[1])?,
                    v: parse_node(line, fields[2])?,
                    w: parse_real(line, fields[3])?,
                    r: parse_real(line, fields[4])?,
                };
                super::validate_edge(n, bound, &e)
                    .map_err(|source| ParseError::Invalid { line, source })?;
                if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                    return Err(ParseError::Invalid {
                        line,
                        source: InstanceError::DuplicateEdge(e.u.min(e.v) + 1, e.u.max(e.v) + 1),
                    });
                }
                edges.push(e);
            }
            other => {
                return Err(ParseError::malformed(
                    line,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }
    let n = node_count.ok_or(ParseError::MissingNodes)?;
    Instance::with_bound(n, bound, edges).map_err(|source| ParseError::Invalid { line: 0, source })
}

/// Serialises edges in list order, keeping each edge's orientation so that
/// parsing the output reproduces the instance exactly.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", inst.node_count());
    if inst.weight_bound() != 1.0 {
        let _ = writeln!(out, "bound {}", inst.weight_bound());
    }
    for e in inst.edges() {
        let _ = writeln!(out, "edge {} {} {} {}", e.u + 1, e.v + 1, e.w, e.r);
    }
    out
}

pub fn parse_outcome(text: &str, inst: &Instance) -> Result<Outcome, ParseError> {
    let n = inst.node_count();
    let mut pairs = Vec::new();
    let mut gamma: Vec<Option<f64>> = vec![None; n];
    let mut last_line = 0;

    for (line, fields) in directives(text) {
        last_line = line;
        match fields[0] {
            "match" => {
                arity(line, &fields, 3)?;
                if gamma.iter().any(Option::is_some) {
                    return Err(ParseError::malformed(line, "`match` lines must precede `gamma`"));
                }
                let a = parse_node(line, fields[1])?;
                let b = parse_node(line, fields[2])?;
                let id = inst.find_edge(a, b).ok_or(ParseError::Invalid {
                    line,
                    source: InstanceError::UnknownEdge(a + 1, b + 1),
                })?;
                pairs.push((line, id));
            }
            "gamma" => {
                arity(line, &fields, 3)?;
                let i = parse_node(line, fields[1])?;
                if i >= n {
                    return Err(ParseError::Invalid {
                        line,
                        source: InstanceError::NodeOutOfRange {
                            node: i + 1,
                            node_count: n,
                        },
                    });
                }
                if gamma[i].is_some() {
                    return Err(ParseError::malformed(line, format!("repeated gamma for node {}", i + 1)));
                }
                gamma[i] = Some(parse_real(line, fields[2])?);
            }
            other => {
                return Err(ParseError::malformed(
                    line,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }

    let mut matching = Matching::empty(inst);
    let mut ids = Vec::with_capacity(pairs.len());
    for (line, id) in pairs {
        ids.push(id);
        matching = Matching::from_edge_ids(inst, ids.iter().copied())
            .map_err(|source| ParseError::Invalid { line, source })?;
    }
    let gamma = gamma
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            g.ok_or_else(|| ParseError::malformed(last_line, format!("missing gamma for node {}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = Outcome { gamma, matching };
    out.validate(inst, DEFAULT_TOL_EQ)
        .map_err(|source| ParseError::Invalid {
            line: last_line,
            source,
        })?;
    Ok(out)
}

pub fn write_outcome(inst: &Instance, out: &Outcome) -> String {
    let mut text = String::new();
    for (u, v) in out.matching.pairs(inst) {
        let _ = writeln!(text, "match {} {}", u + 1, v + 1);
    }
    for (i, g) in out.gamma.iter().enumerate() {
        let _ = writeln!(text, "gamma {} {}", i + 1, g);
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_edge() {
        let inst = parse_instance("nodes 2\nedge 1 2 1.0 0.3\n").unwrap();
        assert_eq!(inst.node_count(), 2);
        assert_eq!(inst.weight_bound(), 1.0);
        assert_eq!(
            inst.edges(),
            &[Edge {
                u: 0,
                v: 1,
                w: 1.0,
                r: 0.3
            }]
        );
    }

    #[test]
    fn parses_path_with_comments() {
        let text = "# a path\nnodes 3\nedge 1 2 1.0 0.5   # heavy\n\nedge 2 3 6e-1 0.5\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.edge_count(), 2);
        assert_eq!(inst.edge(1).w, 0.6);
        assert_eq!(inst.find_edge(2, 1), Some(1));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_instance("nodes 2\nedge 1 2 1.5 0.5\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: InstanceError::WeightOutOfRange { .. }
            }
        ));
        let err = parse_instance("nodes 3\nedge 1 2 1 0.5\nedge 2 1 0.5 0.5\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 3,
                source: InstanceError::DuplicateEdge(1, 2)
            }
        ));
        let err = parse_instance("nodes 2\nedge 2 2 1 0.5\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: InstanceError::SelfLoop(2)
            }
        ));
        let err = parse_instance("nodes 2\nedge 1 2 x 0.5\n").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 2, .. }));
        let err = parse_instance("nodes 2\nedge 1 2 0.5 1.5\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: InstanceError::FractionOutOfRange(_)
            }
        ));
        assert_eq!(parse_instance("edge 1 2 1 0.5\n").unwrap_err(), ParseError::MissingNodes);
    }

    #[test]
    fn bound_directive() {
        let inst = parse_instance("nodes 2\nbound 3\nedge 1 2 2.5 0.5\n").unwrap();
        assert_eq!(inst.weight_bound(), 3.0);
        assert!(parse_instance("nodes 2\nedge 1 2 0.5 0.5\nbound 3\n").is_err());
    }

    #[test]
    fn outcome_round_trip() {
        let inst = parse_instance("nodes 3\nedge 1 2 1.0 0.5\nedge 2 3 0.6 0.5\n").unwrap();
        let out = parse_outcome("match 1 2\ngamma 1 0.2\ngamma 2 0.8\ngamma 3 0\n", &inst).unwrap();
        assert_eq!(out.gamma, vec![0.2, 0.8, 0.0]);
        assert_eq!(out.matching.edge_ids(), &[0]);
        assert_eq!(parse_outcome(&write_outcome(&inst, &out), &inst).unwrap(), out);
    }

    #[test]
    fn outcome_errors() {
        let inst = parse_instance("nodes 3\nedge 1 2 1.0 0.5\nedge 2 3 0.6 0.5\n").unwrap();
        assert!(parse_outcome("match 1 3\n", &inst).is_err());
        assert!(parse_outcome("match 1 2\ngamma 1 0.2\ngamma 2 0.8\n", &inst).is_err());
        assert!(parse_outcome("match 1 2\ngamma 1 0.2\ngamma 2 0.7\ngamma 3 0\n", &inst).is_err());
        assert!(parse_outcome("match 1 2\nmatch 2 3\ngamma 1 0\n", &inst).is_err());
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (2usize..9).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec(
                    (any::<bool>(), any::<bool>(), 1e-6f64..=1.0, 1e-6f64..0.999_999),
                    m,
                ),
            )
                .prop_map(|(n, pairs, picks)| {
                    let edges = pairs
                        .into_iter()
                        .zip(picks)
                        .filter(|(_, (keep, _, _, _))| *keep)
                        .map(|((a, b), (_, flip, w, r))| {
                            let (u, v) = if flip { (b, a) } else { (a, b) };
                            Edge { u, v, w, r }
                        })
                        .collect();
                    Instance::new(n, edges).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn instance_round_trip(inst in arb_instance()) {
            let text = write_instance(&inst);
            prop_assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }
}
