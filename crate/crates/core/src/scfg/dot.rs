use super::*;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(g: &Scfg) -> String {
    let mut out = String::from("digraph scfg {\n  node [shape=box];\n");
    for (i, state) in g.vertices.iter().enumerate() {
        let marks: Vec<String> = state
            .assignment
            .iter()
            .filter(|(_, v)| **v != SymVal::Undefined)
            .map(|(k, v)| format!("{k}: {v}"))
            .collect();
        let mut label = format!("v{i}");
        if !marks.is_empty() {
            label.push_str("\\n");
            label.push_str(&escape(&marks.join(", ")));
        }
        let mut attrs = format!("label=\"{label}\"");
        if i == g.start {
            attrs.push_str(", style=bold");
        }
        if g.ends.contains(&i) {
            attrs.push_str(", peripheries=2");
        }
        out.push_str(&format!("  v{i} [{attrs}];\n"));
    }
    for e in &g.edges {
        let types: Vec<&str> = e.types.iter().map(|t| t.name()).collect();
        let label = format!("[{}] {{{}}}", escape(&e.condition.to_string()), types.join(", "));
        out.push_str(&format!("  v{} -> v{} [label=\"{}\"];\n", e.src, e.dst, label));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::scfg::build_scfg;

    #[test]
    fn empty_graph_has_one_node() {
        let dot = to_dot(&build_scfg(&parse_program("").unwrap()));
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("[label=").count(), 1);
        assert!(!dot.contains("->"));
    }

    #[test]
    fn call_labels() {
        let g = build_scfg(&parse_program("database = 1\ndatabase_operation(database)\nclose_connection(database)").unwrap());
        let dot = to_dot(&g);
        assert_eq!(dot.matches("{call}").count(), 2);
    }

    #[test]
    fn branch_labels() {
        let g = build_scfg(&parse_program("i = 1\nj = 2\nif i == j:\n  c = 10\nelse:\n  c = 20\n").unwrap());
        let dot = to_dot(&g);
        assert!(dot.contains("[i == j] {assignment}"));
        assert!(dot.contains("[not (i == j)] {assignment}"));
    }
}
