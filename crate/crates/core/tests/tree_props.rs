mod support;

use proptest::prelude::*;
use ptchron::bridging::prune_subtree;
use ptchron::grammar::{GrammarAdapter, MiniGrammar};
use ptchron::synth::program;
use ptchron::{CharRange, ParseNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{bfs_distances, prune_stepwise, random_tree, strip_text};

fn parsed_program(seed: u64, statements: usize) -> (Vec<char>, ptchron::Tree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text: Vec<char> = program(&mut rng, statements).chars().collect();
    let tree = MiniGrammar::new().parse(&text).unwrap().expect("generated programs parse");
    (text, tree)
}

#[test]
fn prune_golden() {
    let leaf = ParseNode {
        node_uid: ptchron::grammar::NodeUid::new(0, 0),
        type_label: "string".into(),
        range: CharRange::new(10, 16),
        children: vec![],
        is_leaf: true,
        leaf_text: "abcdef".into(),
        is_transient: false,
    };
    let p = prune_subtree(&leaf, |i| i != 13).unwrap();
    assert_eq!(p.range, CharRange::new(10, 15));
    assert_eq!(p.leaf_text, "abcef");
    assert_eq!(prune_subtree(&leaf, |_| true).unwrap(), leaf);
    assert_eq!(prune_subtree(&leaf, |_| false), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn leaf_at_matches_linear_scan(seed in any::<u64>(), probes in proptest::collection::vec(0usize..200, 5)) {
        let (_, tree) = parsed_program(seed, 4);
        let synthetic = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 30);
        for t in [&tree, &synthetic] {
            let end = t.root().range.end + 2;
            for &p in &probes {
                let p = p % end;
                let linear = t.leaves().find(|&l| t.node(l).range.contains(p));
                prop_assert_eq!(t.leaf_at(p), linear);
            }
        }
    }

    #[test]
    fn leaves_cover_exactly_the_code(seed in any::<u64>()) {
        let g = MiniGrammar::new();
        let (text, tree) = parsed_program(seed, 5);
        let spans = g.scan_spans(&text);
        let mask = tree.leaf_mask(text.len());
        for (i, &covered) in mask.iter().enumerate() {
            prop_assert_eq!(covered, spans.is_code(i), "index {}", i);
        }
        tree.check_structure().unwrap();
        // Same text, same tree.
        prop_assert_eq!(tree.to_parse_node(0, &text), g.parse(&text).unwrap().unwrap().to_parse_node(0, &text));
    }

    #[test]
    fn path_length_is_a_metric(seed in any::<u64>()) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let d = bfs_distances(&tree);
        let n = tree.len();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(tree.path_length(a, b), d[a][b]);
                prop_assert_eq!(tree.path_length(a, b), tree.path_length(b, a));
                for c in 0..n {
                    prop_assert!(d[a][c] <= d[a][b] + d[b][c]);
                }
            }
        }
    }

    #[test]
    fn prune_routes_agree_and_relex(seed in any::<u64>(), keep in 0.0f64..1.0) {
        let (text, tree) = parsed_program(seed, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let id = rng.gen_range(0..tree.len());
        let sub = tree.subtree_to_parse_node(id, 0, Some(&text));
        let r = sub.range;
        let alive: Vec<bool> = (0..text.len()).map(|_| rng.gen_bool(keep)).collect();
        let pruned = prune_subtree(&sub, |i| alive[i]);
        let desc: Vec<usize> = (r.start..r.end).rev().filter(|&i| !alive[i]).collect();
        let stepwise = prune_stepwise(&sub, &desc);
        prop_assert_eq!(pruned.as_ref().map(strip_text), stepwise.as_ref().map(strip_text));

        // Leaf text agrees with the text left after removing the pruned
        // characters, read through the new ranges.
        let shifted: Vec<char> = text
            .iter()
            .enumerate()
            .filter(|&(i, _)| !(r.contains(i) && !alive[i]))
            .map(|(_, &c)| c)
            .collect();
        let covered = (r.start..r.end).filter(|&i| alive[i] && tree.leaf_at(i).is_some()).count();
        match pruned {
            None => prop_assert_eq!(covered, 0),
            Some(p) => {
                let leaves = p.leaves();
                let mut total = 0;
                for l in &leaves {
                    let s: String = shifted[l.range.start..l.range.end].iter().collect();
                    prop_assert_eq!(&l.leaf_text, &s);
                    total += l.range.len();
                }
                prop_assert_eq!(total, covered);
                prop_assert!(leaves.windows(2).all(|w| w[0].range.end <= w[1].range.start));
            }
        }
    }
}

#[cfg(feature = "python")]
#[test]
fn python_leaves_cover_exactly_the_code() {
    let g = ptchron::grammar::PythonGrammar::new();
    let src = "def f(a, b):\n    # sum\n    return a + b  # done\ns = \"x y\"\nfor i in range(3):\n    print(f(i, 2), s)\n";
    let text: Vec<char> = src.chars().collect();
    let tree = g.parse(&text).unwrap().unwrap();
    let spans = g.scan_spans(&text);
    let mask = tree.leaf_mask(text.len());
    for (i, &covered) in mask.iter().enumerate() {
        assert_eq!(covered, spans.is_code(i), "index {i}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let text: Vec<char> = program(&mut rng, 4).chars().collect();
        let tree = g.parse(&text).unwrap().unwrap();
        tree.check_structure().unwrap();
        let spans = g.scan_spans(&text);
        assert_eq!(tree.leaf_mask(text.len()), (0..text.len()).map(|i| spans.is_code(i)).collect::<Vec<_>>());
    }
}
