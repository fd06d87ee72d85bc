use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;
use vectorplus_chem::{canonical, is_valid, parse_smiles, BondOrder, Element, Molecule};

const POSITIVE: &str = include_str!("data/positive.smi");
const NEGATIVE: &str = include_str!("data/negative.smi");

type Labelled = UnGraph<(Element, i8, u8, bool), BondOrder>;

fn to_graph(m: &Molecule) -> Labelled {
    let mut g = UnGraph::default();
    let nodes: Vec<_> = m
        .atoms()
        .iter()
        .map(|a| g.add_node((a.element, a.charge, a.hydrogens(), a.aromatic)))
        .collect();
    for b in m.bonds() {
        g.add_edge(nodes[b.a], nodes[b.b], b.order);
    }
    g
}

fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    is_isomorphic_matching(&to_graph(a), &to_graph(b), |x, y| x == y, |x, y| x == y)
}

#[test]
fn positive_corpus_is_large_and_fully_accepted() {
    let lines: Vec<&str> = POSITIVE.lines().filter(|l| !l.is_empty()).collect();
    assert!(lines.len() >= 200, "only {} positive strings", lines.len());
    let rejected: Vec<_> = lines.iter().filter(|s| !is_valid(s)).collect();
    assert!(rejected.is_empty(), "rejected: {rejected:?}");
}

#[test]
fn negative_corpus_is_fully_rejected() {
    let lines: Vec<&str> = NEGATIVE.lines().filter(|l| !l.is_empty()).collect();
    assert!(lines.len() >= 50, "only {} negative strings", lines.len());
    let accepted: Vec<_> = lines.iter().filter(|s| is_valid(s)).collect();
    assert!(accepted.is_empty(), "accepted: {accepted:?}");
}

#[test]
fn canonical_round_trip_is_isomorphic() {
    for s in POSITIVE.lines().filter(|l| !l.is_empty()) {
        let m = parse_smiles(s).unwrap();
        let c = canonical(&m);
        let back = parse_smiles(&c).unwrap_or_else(|e| panic!("{s} -> {c}: {e}"));
        assert!(isomorphic(&m, &back), "{s} -> {c} not isomorphic");
        assert_eq!(canonical(&back), c, "{s}: canonical form not a fixed point");
    }
}

#[test]
fn oracle_distinguishes_non_isomorphic_pairs() {
    let a = parse_smiles("CCO").unwrap();
    let b = parse_smiles("COC").unwrap();
    assert!(!isomorphic(&a, &b));
    assert!(isomorphic(&a, &parse_smiles("OCC").unwrap()));
}
