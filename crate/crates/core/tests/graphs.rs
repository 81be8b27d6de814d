use spherevc::graph::{deforest, graph_by_name, graph_isomorphic, named_graph, shattering_graph};
use spherevc::{ConfigGraph, Error};

#[test]
fn shattering_graph_counts() {
    for k in 1..=6 {
        let g = shattering_graph(k).unwrap();
        assert_eq!(g.vertex_count(), k + (1 << k));
        assert_eq!(g.edge_count(), k * (1 << (k - 1)));
        // edge (i, I) iff i in I, checked through the labels
        for &[a, b] in g.edges() {
            let (x, y) = if g.label(a).starts_with('x') { (a, b) } else { (b, a) };
            let i = &g.label(x)[1..];
            assert!(g.label(y)[1..].contains(i), "{} ~ {}", g.label(x), g.label(y));
        }
    }
    assert!(shattering_graph(0).is_err());
    assert!(shattering_graph(7).is_err());
}

#[test]
fn named_examples() {
    let gamma = named_graph("four_cycle").unwrap();
    assert_eq!(gamma.edges(), &[[0, 1], [0, 2], [1, 3], [2, 3]]);
    let b = named_graph("B").unwrap();
    assert_eq!((b.vertex_count(), b.edge_count()), (6, 7));
    let c = named_graph("chain_1").unwrap();
    assert_eq!((c.vertex_count(), c.edge_count()), (2, 1));
    assert!(matches!(named_graph("pentagon"), Err(Error::UnknownGraph(_))));
    assert!(matches!(graph_by_name("shatter_x"), Err(Error::UnknownGraph(_))));
    for name in ["four_cycle", "G", "H", "B", "chain_5"] {
        assert!(named_graph(name).unwrap().earlier_sets_nonempty(), "{name}");
    }
}

#[test]
fn deforest_three_shattering_is_g() {
    let g3 = shattering_graph(3).unwrap();
    let cut = deforest(&g3, false);
    assert_eq!((cut.graph.vertex_count(), cut.graph.edge_count()), (7, 9));
    assert!(graph_isomorphic(&cut.graph, &named_graph("G").unwrap()).unwrap());
    assert_eq!(cut.isolated.len(), 1);
    assert_eq!(cut.leaves.len(), 3);
}

#[test]
fn deforest_two_shattering_is_path() {
    let cut = deforest(&shattering_graph(2).unwrap(), false);
    let mut labels = cut.graph.labels().to_vec();
    labels.sort();
    assert_eq!(labels, ["x1", "x2", "y12"]);
    assert_eq!(cut.graph.edge_count(), 2);
    assert!(graph_isomorphic(&cut.graph, &named_graph("chain_2").unwrap()).unwrap());
}

#[test]
fn deforest_idempotent_on_cores() {
    for name in ["four_cycle", "G", "B"] {
        let g = named_graph(name).unwrap();
        let cut = deforest(&g, false);
        assert!(cut.leaves.is_empty() && cut.isolated.is_empty(), "{name}");
        assert_eq!(cut.graph.edges(), g.edges());
        assert_eq!(cut.graph.labels(), g.labels());
    }
}

#[test]
fn deforest_never_raises_degrees() {
    for name in ["shatter_2", "shatter_3", "shatter_4", "H", "chain_4"] {
        let g = graph_by_name(name).unwrap();
        let cut = deforest(&g, false);
        let before = g.degrees();
        for (new, &old) in cut.kept.iter().enumerate() {
            assert!(cut.graph.degree(new) <= before[old]);
            assert_eq!(cut.graph.label(new), g.label(old));
        }
    }
    // a path loses one vertex from each end per pass
    let once = deforest(&named_graph("chain_4").unwrap(), false);
    assert_eq!(once.graph.vertex_count(), 3);
    let all = deforest(&named_graph("chain_4").unwrap(), true);
    assert_eq!(all.graph.vertex_count(), 0);
}

#[test]
fn isomorphism_examples() {
    let gamma = named_graph("four_cycle").unwrap();
    let relabeled = gamma.permuted(&[2, 0, 3, 1]).unwrap();
    assert!(graph_isomorphic(&gamma, &relabeled).unwrap());
    assert!(!graph_isomorphic(&gamma, &named_graph("chain_3").unwrap()).unwrap());
    // same degree sequence, different structure: hexagon vs two triangles
    let strs = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
    let hex = ConfigGraph::with_identity_order(strs(6), vec![[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0]]).unwrap();
    let tri = ConfigGraph::with_identity_order(strs(6), vec![[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]]).unwrap();
    assert!(!graph_isomorphic(&hex, &tri).unwrap());
    let big = shattering_graph(5).unwrap();
    assert!(matches!(graph_isomorphic(&big, &big), Err(Error::GraphTooLarge { .. })));
}

#[test]
fn invalid_graphs_rejected() {
    let l = vec!["a".to_string(), "b".to_string()];
    assert!(ConfigGraph::with_identity_order(l.clone(), vec![[0, 0]]).is_err());
    assert!(ConfigGraph::with_identity_order(l.clone(), vec![[0, 2]]).is_err());
    assert!(ConfigGraph::new(l, vec![[0, 1]], vec![0, 0]).is_err());
}

#[test]
fn json_round_trip() {
    for name in ["four_cycle", "G", "H", "B", "shatter_3"] {
        let g = graph_by_name(name).unwrap();
        let text = g.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["vertices"].is_array() && v["edges"].is_array() && v["ordering"].is_array());
        assert_eq!(ConfigGraph::from_json(&text).unwrap(), g);
    }
    assert!(ConfigGraph::from_json(r#"{"vertices":["a"],"edges":[[0,1]],"ordering":[0]}"#).is_err());
}
