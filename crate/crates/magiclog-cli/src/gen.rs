//! Deterministic database generators for the benchmark families.
//!
//! All generators produce plain fact databases: `a/2` arcs for chains,
//! `node/1` and `edge/2` facts for graphs. Identical parameters always
//! produce identical databases, so rendered output is byte-stable.

use std::collections::BTreeSet;

use magiclog::model::{Const, Database, GroundAtom};

use crate::{CliResult, Failure};

/// A layered graph: `base` nodes per layer, `height` layers stacked upward.
///
/// Nodes are numbered row-major from 1: node `(layer j, position i)` is
/// `(j - 1) * base + i`. Arcs come in three groups: a spine up the first
/// column (`height - 1` arcs), a path along the bottom layer (`base - 1`
/// arcs), and `grade` arcs from every other non-top-layer node, aimed at the
/// node directly above and then walking right in row-major order (wrapping
/// past the last node) until `grade` fresh targets are found. The arc count
/// is therefore exactly `(base-1)*(height-1)*grade + (base-1) + (height-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub base: u32,
    pub height: u32,
    pub grade: u32,
}

impl LatticeSpec {
    /// Validates the shape: all sizes positive, and `grade` small enough
    /// that every sender can reach `grade` distinct targets.
    pub fn new(base: u32, height: u32, grade: u32) -> CliResult<LatticeSpec> {
        if base < 1 || height < 1 || grade < 1 {
            return Err(Failure::usage("lattice base, height, and grade must all be at least 1"));
        }
        let spec = LatticeSpec { base, height, grade };
        if base >= 2 && height >= 2 && grade > spec.node_count() - 2 {
            return Err(Failure::usage(format!(
                "grade {} is too large for a {}x{} lattice (at most {})",
                grade,
                base,
                height,
                spec.node_count() - 2
            )));
        }
        Ok(spec)
    }

    /// Total node count, `base * height`.
    pub fn node_count(&self) -> u32 {
        self.base * self.height
    }

    /// Total arc count by the closed form.
    pub fn arc_count(&self) -> u32 {
        (self.base - 1) * (self.height - 1) * self.grade
            + (self.base - 1)
            + (self.height - 1)
    }

    /// The node id of layer `j`, position `i` (both 1-based).
    fn id(&self, j: u32, i: u32) -> u32 {
        (j - 1) * self.base + i
    }

    /// All arcs with 1-based local node ids, deterministic order.
    fn arcs(&self) -> Vec<(u32, u32)> {
        let n = self.node_count();
        let mut arcs: Vec<(u32, u32)> = Vec::new();
        let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
        fn push(arcs: &mut Vec<(u32, u32)>, seen: &mut BTreeSet<(u32, u32)>, a: (u32, u32)) -> bool {
            if seen.insert(a) {
                arcs.push(a);
                true
            } else {
                false
            }
        }
        for j in 1..self.height {
            push(&mut arcs, &mut seen, (self.id(j, 1), self.id(j + 1, 1)));
        }
        for i in 1..self.base {
            push(&mut arcs, &mut seen, (self.id(1, i), self.id(1, i + 1)));
        }
        for j in 1..self.height {
            for i in 2..=self.base {
                let from = self.id(j, i);
                let mut taken = 0;
                let mut cursor = self.id(j + 1, i);
                // The validated grade bound guarantees the walk finds enough
                // fresh targets within one lap.
                while taken < self.grade {
                    if cursor != from && push(&mut arcs, &mut seen, (from, cursor)) {
                        taken += 1;
                    }
                    cursor = cursor % n + 1;
                }
            }
        }
        arcs
    }
}

/// One component of a two-component graph database.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentSpec {
    /// No nodes at all.
    Empty,
    /// Three mutually adjacent nodes.
    Triangle,
    /// Four mutually adjacent nodes (not 3-colorable).
    K4,
    /// A directed cycle on `n >= 3` nodes.
    Cycle(u32),
    /// A layered lattice graph.
    Lattice(LatticeSpec),
}

impl ComponentSpec {
    /// Parses `none`, `triangle`, `k4`, `cycle:N`, or `lattice:B,H,G`.
    pub fn parse(text: &str) -> CliResult<ComponentSpec> {
        let lower = text.to_ascii_lowercase();
        let (name, args) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let numbers = |args: Option<&str>, want: usize| -> CliResult<Vec<u32>> {
            let parts: Vec<u32> = args
                .unwrap_or_default()
                .split(',')
                .map(|p| p.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    Failure::usage(format!("component `{text}` needs {want} numeric parameters"))
                })?;
            if parts.len() != want {
                return Err(Failure::usage(format!(
                    "component `{text}` needs {want} numeric parameters"
                )));
            }
            Ok(parts)
        };
        match name {
            "none" => Ok(ComponentSpec::Empty),
            "triangle" => Ok(ComponentSpec::Triangle),
            "k4" => Ok(ComponentSpec::K4),
            "cycle" => {
                let n = numbers(args, 1)?[0];
                if n < 3 {
                    return Err(Failure::usage("a cycle needs at least 3 nodes"));
                }
                Ok(ComponentSpec::Cycle(n))
            }
            "lattice" => {
                let p = numbers(args, 3)?;
                Ok(ComponentSpec::Lattice(LatticeSpec::new(p[0], p[1], p[2])?))
            }
            _ => Err(Failure::usage(format!(
                "unknown component `{text}` (expected none, triangle, k4, cycle:N, lattice:B,H,G)"
            ))),
        }
    }

    /// Number of nodes in the component.
    pub fn node_count(&self) -> u32 {
        match self {
            ComponentSpec::Empty => 0,
            ComponentSpec::Triangle => 3,
            ComponentSpec::K4 => 4,
            ComponentSpec::Cycle(n) => *n,
            ComponentSpec::Lattice(spec) => spec.node_count(),
        }
    }

    /// Directed edges with 1-based local node ids.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        match self {
            ComponentSpec::Empty => Vec::new(),
            ComponentSpec::Triangle => vec![(1, 2), (1, 3), (2, 3)],
            ComponentSpec::K4 => {
                let mut edges = Vec::new();
                for i in 1..=4 {
                    for j in i + 1..=4 {
                        edges.push((i, j));
                    }
                }
                edges
            }
            ComponentSpec::Cycle(n) => {
                let mut edges: Vec<(u32, u32)> = (1..*n).map(|i| (i, i + 1)).collect();
                edges.push((*n, 1));
                edges
            }
            ComponentSpec::Lattice(spec) => spec.arcs(),
        }
    }
}

fn int_fact(pred: &str, args: &[u32]) -> GroundAtom {
    GroundAtom::new(pred, args.iter().map(|&a| Const::Int(i64::from(a))).collect())
}

fn graph_db(components: &[ComponentSpec], symmetric: bool) -> Database {
    let mut db = Database::empty();
    let mut offset = 0;
    for c in components {
        for v in 1..=c.node_count() {
            db.insert(int_fact("node", &[offset + v]));
        }
        for (a, b) in c.edges() {
            db.insert(int_fact("edge", &[offset + a, offset + b]));
            if symmetric {
                db.insert(int_fact("edge", &[offset + b, offset + a]));
            }
        }
        offset += c.node_count();
    }
    db
}

/// The chain database `a(1,2), a(2,3), ..., a(k, k+1)`.
pub fn gen_chain(k: u32) -> CliResult<Database> {
    if k < 1 {
        return Err(Failure::usage("a chain needs at least 1 fact"));
    }
    let mut db = Database::empty();
    for i in 1..=k {
        db.insert(int_fact("a", &[i, i + 1]));
    }
    Ok(db)
}

/// A single lattice graph as `node/1` and `edge/2` facts.
pub fn gen_lattice(spec: &LatticeSpec, symmetric: bool) -> Database {
    graph_db(&[ComponentSpec::Lattice(*spec)], symmetric)
}

/// Two disconnected components; the first component's nodes are numbered
/// from 1, the second's continue after them. With `symmetric`, every edge
/// is emitted in both directions.
pub fn gen_two_components(c1: &ComponentSpec, c2: &ComponentSpec, symmetric: bool) -> Database {
    graph_db(&[*c1, *c2], symmetric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use magiclog::parse::render_database;
    use proptest::prelude::*;

    fn count(db: &Database, pred: &str) -> usize {
        db.facts().iter().filter(|f| f.pred == pred).count()
    }

    #[test]
    fn chains_have_exactly_k_arcs() {
        assert_eq!(render_database(&gen_chain(1).unwrap()), "a(1,2).\n");
        let db = gen_chain(3).unwrap();
        assert_eq!(render_database(&db), "a(1,2).\na(2,3).\na(3,4).\n");
        assert!(gen_chain(0).is_err());
    }

    #[test]
    fn lattice_counts_match_the_closed_forms() {
        let spec = LatticeSpec::new(3, 3, 3).unwrap();
        let db = gen_lattice(&spec, false);
        assert_eq!(count(&db, "node"), 9);
        assert_eq!(count(&db, "edge"), 16);
        assert_eq!(spec.arc_count(), 16);

        let spec = LatticeSpec::new(1, 1, 1).unwrap();
        let db = gen_lattice(&spec, false);
        assert_eq!(count(&db, "node"), 1);
        assert_eq!(count(&db, "edge"), 0);

        let spec = LatticeSpec::new(2, 2, 2).unwrap();
        let db = gen_lattice(&spec, false);
        assert_eq!(count(&db, "node"), 4);
        assert_eq!(count(&db, "edge"), 4);
    }

    #[test]
    fn lattices_are_connected_ignoring_direction() {
        for (b, h, g) in [(2, 2, 1), (3, 3, 3), (4, 2, 3), (2, 4, 2), (5, 5, 4)] {
            let spec = LatticeSpec::new(b, h, g).unwrap();
            let n = spec.node_count() as usize;
            let mut adj = vec![Vec::new(); n + 1];
            for (x, y) in spec.arcs() {
                adj[x as usize].push(y as usize);
                adj[y as usize].push(x as usize);
            }
            let mut seen = vec![false; n + 1];
            let mut stack = vec![1];
            seen[1] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            assert!(seen[1..].iter().all(|&s| s), "{b}x{h} grade {g} disconnected");
        }
    }

    #[test]
    fn two_components_stay_disjoint() {
        let db = gen_two_components(&ComponentSpec::Triangle, &ComponentSpec::K4, false);
        assert_eq!(count(&db, "node"), 7);
        assert_eq!(count(&db, "edge"), 9);
        for f in db.facts().iter().filter(|f| f.pred == "edge") {
            let (Const::Int(a), Const::Int(b)) = (&f.args[0], &f.args[1]) else {
                panic!("non-integer edge");
            };
            assert_eq!(*a <= 3, *b <= 3, "edge crosses components: {f}");
        }

        let lat = ComponentSpec::parse("lattice:2,2,2").unwrap();
        let db = gen_two_components(&lat, &lat, false);
        assert_eq!(count(&db, "node"), 8);
        assert_eq!(count(&db, "edge"), 8);

        let db = gen_two_components(&ComponentSpec::Triangle, &ComponentSpec::Empty, false);
        assert_eq!(count(&db, "node"), 3);
        assert_eq!(count(&db, "edge"), 3);
    }

    #[test]
    fn symmetric_doubles_every_edge() {
        let db = gen_two_components(&ComponentSpec::Triangle, &ComponentSpec::Cycle(4), true);
        assert_eq!(count(&db, "edge"), 2 * (3 + 4));
        for f in db.facts().iter().filter(|f| f.pred == "edge") {
            let flip = GroundAtom::new("edge", vec![f.args[1].clone(), f.args[0].clone()]);
            assert!(db.facts().contains(&flip), "missing reverse of {f}");
        }
    }

    #[test]
    fn component_parsing_rejects_bad_shapes() {
        assert_eq!(ComponentSpec::parse("K4").unwrap(), ComponentSpec::K4);
        assert_eq!(ComponentSpec::parse("cycle:5").unwrap(), ComponentSpec::Cycle(5));
        assert!(ComponentSpec::parse("cycle:2").is_err());
        assert!(ComponentSpec::parse("cycle:x").is_err());
        assert!(ComponentSpec::parse("lattice:3,3").is_err());
        assert!(ComponentSpec::parse("blob").is_err());
        assert!(LatticeSpec::new(0, 1, 1).is_err());
        assert!(LatticeSpec::new(2, 2, 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

        #[test]
        fn lattice_counts_hold_across_small_specs(
            base in 1u32..=6,
            height in 1u32..=6,
            grade in 1u32..=3,
        ) {
            prop_assume!(base == 1 || height == 1 || grade <= base * height - 2);
            let spec = LatticeSpec::new(base, height, grade).unwrap();
            let db = gen_lattice(&spec, false);
            prop_assert_eq!(count(&db, "node") as u32, spec.node_count());
            prop_assert_eq!(count(&db, "edge") as u32, spec.arc_count());
        }

        #[test]
        fn generation_is_deterministic(
            base in 1u32..=5,
            height in 1u32..=5,
            grade in 1u32..=3,
            symmetric: bool,
        ) {
            prop_assume!(base == 1 || height == 1 || grade <= base * height - 2);
            let spec = LatticeSpec::new(base, height, grade).unwrap();
            let a = render_database(&gen_lattice(&spec, symmetric));
            let b = render_database(&gen_lattice(&spec, symmetric));
            prop_assert_eq!(a, b);
        }
    }
}
