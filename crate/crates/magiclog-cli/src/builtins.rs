//! Built-in benchmark programs and their default query goals.

/// One binary choice per chain arc: a model picks `p` or `q` on each source
/// node, so a database of k arcs has 2^k stable models.
pub const P1: &str = "p(X) v q(X) :- a(X, Y).\n";

/// [`P1`] plus a constraint coupling the choices on the first arc.
pub const P2: &str = "\
p(X) v q(X) :- a(X, Y).
:- p(X), a(X, Y), q(Y), X <= 1.
";

/// Graph 3-coloring; `2col` pairs a red node with a blue one.
pub const COLORING: &str = "\
2col(X, Y) :- color(X, red), color(Y, blue).
color(X, red) v color(X, blue) v color(X, yellow) :- node(X).
:- edge(X, Y), color(X, C), color(Y, C).
";

/// Partition of the nodes into three disjoint dominating sets.
pub const THREE_DS: &str = "\
v1(X) v nv1(X) :- node(X).
v2(X) v nv2(X) :- node(X).
v3(X) v nv3(X) :- node(X).
connected1(Y) :- v1(X), edge(X, Y).
connected2(Y) :- v2(X), edge(X, Y).
connected3(Y) :- v3(X), edge(X, Y).
:- v1(X), v2(X).
:- v1(X), v3(X).
:- v2(X), v3(X).
:- nv1(X), not connected1(X).
:- nv2(X), not connected2(X).
:- nv3(X), not connected3(X).
";

/// Resolves a built-in program name, case-insensitively.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "p1" => Some(P1),
        "p2" => Some(P2),
        "coloring" => Some(COLORING),
        "3ds" => Some(THREE_DS),
        _ => None,
    }
}

/// The goal conventionally queried against a built-in program.
pub fn default_query(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "p1" | "p2" => Some("p(1)"),
        "coloring" => Some("2col(1, 2)"),
        "3ds" => Some("v1(1)"),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use magiclog::parse::{parse_goal, parse_program};

    #[test]
    fn builtins_parse_and_have_queries() {
        for name in ["p1", "p2", "coloring", "3ds"] {
            let program = parse_program(builtin(name).unwrap()).unwrap();
            assert!(!program.rules().is_empty(), "{name}");
            let goal = parse_goal(default_query(name).unwrap()).unwrap().goal;
            assert!(program.is_derived(&goal.pred), "{name}");
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn lookup_ignores_case() {
        assert_eq!(builtin("P1"), builtin("p1"));
        assert_eq!(builtin("Coloring"), builtin("coloring"));
        assert_eq!(default_query("3DS"), default_query("3ds"));
    }
}
