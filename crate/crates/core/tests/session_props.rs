mod support;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use proptest::prelude::*;
use ptchron::analysis::{analyze_session, SessionAnalysis, Touch};
use ptchron::behaviors::{classify_pastes, detect_moving, detect_renaming, normalize_ws, BehaviorConfig};
use ptchron::grammar::MiniGrammar;
use ptchron::metrics::{deletion_by_construct, node_deletion_rate, node_lifetimes, switch_frequency, jump_records, Scope};
use ptchron::synth::{synth_session, SynthConfig};
use ptchron::tracking::NodeRef;
use ptchron::{EditKind, TreeKind};
use support::UidReplay;

fn analyzed(seed: u64, events: usize) -> SessionAnalysis {
    let s = synth_session(seed, "u", "f", &SynthConfig { target_events: events, ..SynthConfig::default() });
    analyze_session(&s, Arc::new(MiniGrammar::new())).unwrap()
}

fn code_uids(a: &SessionAnalysis, o: &UidReplay, r: NodeRef) -> Vec<u64> {
    let range = a.tree(r.state).unwrap().node(r.node as usize).range;
    (range.start..range.end)
        .filter(|&i| a.spans[r.state].is_code(i))
        .map(|i| o.states[r.state][i])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn links_land_inside_their_parent(seed in any::<u64>()) {
        let a = analyzed(seed, 250);
        let o = UidReplay::new(&a.session.events);
        for l in a.tracking.links() {
            if l.child.node == 0 {
                continue;
            }
            let parent = a.tree(l.parent.state).unwrap().node(l.parent.node as usize).range;
            let landed: Vec<usize> = code_uids(&a, &o, l.child)
                .into_iter()
                .filter_map(|u| o.position(l.parent.state, u))
                .filter(|&p| a.spans[l.parent.state].is_code(p))
                .collect();
            prop_assert!(!landed.is_empty());
            for p in landed {
                prop_assert!(parent.contains(p), "{:?} lands at {} outside {}", l, p, parent);
            }
        }
        for lin in a.tracking.lineages() {
            prop_assert!(lin.instances.windows(2).all(|w| w[0].state < w[1].state));
            prop_assert!(lin.instances.len() <= a.num_states());
        }
    }

    #[test]
    fn untouched_leaves_keep_their_parent(seed in any::<u64>()) {
        let a = analyzed(seed, 250);
        let o = UidReplay::new(&a.session.events);
        for t in 1..a.num_states() {
            let (Some(prev), Some(cur)) = (a.tree(t - 1), a.tree(t)) else { continue };
            let prev_leaves: HashMap<Vec<u64>, usize> = prev
                .leaves()
                .map(|l| (code_uids(&a, &o, NodeRef::new(t - 1, l)), l))
                .collect();
            for m in cur.leaves() {
                let me = NodeRef::new(t, m);
                if let Some(&l) = prev_leaves.get(&code_uids(&a, &o, me)) {
                    let link = a.tracking.parent_of(me).unwrap();
                    prop_assert_eq!(link.parent, NodeRef::new(t - 1, l));
                    prop_assert_eq!(link.gap, 1);
                    if prev.node(l).label == cur.node(m).label {
                        prop_assert_eq!(a.tracking.lineage_id(me), a.tracking.lineage_id(link.parent));
                    }
                }
            }
        }
    }

    #[test]
    fn bridges_are_well_formed(seed in any::<u64>()) {
        let a = analyzed(seed, 250);
        let parsed_labels: HashSet<&str> = a
            .versions
            .iter()
            .filter(|v| v.kind == TreeKind::Parsed)
            .flat_map(|v| v.tree.as_ref().unwrap().nodes().iter().map(|n| n.label))
            .collect();
        for v in a.versions.iter().filter(|v| v.kind == TreeKind::Bridging) {
            let t = v.state_index;
            let tree = v.tree.as_ref().unwrap();
            prop_assert!(tree.check_structure().is_ok());
            for (i, &c) in tree.leaf_mask(a.texts[t].len()).iter().enumerate() {
                prop_assert!(!c || a.spans[t].is_code(i));
            }
            for n in tree.nodes() {
                prop_assert!(n.kind == ptchron::grammar::NodeKind::Transient || parsed_labels.contains(n.label), "{}", n.label);
            }
        }
        let again = analyze_session(&a.session, Arc::new(MiniGrammar::new())).unwrap();
        for (x, y) in a.versions.iter().zip(&again.versions) {
            prop_assert_eq!(x.tree.as_ref().map(|t| t.to_parse_node(0, &[])), y.tree.as_ref().map(|t| t.to_parse_node(0, &[])));
        }
    }

    #[test]
    fn metric_sanity(seed in any::<u64>()) {
        let a = analyzed(seed, 250);
        let total = node_deletion_rate(&a, Scope::Program);
        for c in deletion_by_construct(&a) {
            prop_assert_eq!(c.inside.num_nodes + c.outside.num_nodes, total.num_nodes);
            prop_assert_eq!(c.inside.num_deleted + c.outside.num_deleted, total.num_deleted);
            prop_assert_eq!(c.inside, node_deletion_rate(&a, Scope::Inside(c.construct)));
        }
        prop_assert!(total.rate.is_none_or(|r| (0.0..=1.0).contains(&r)));
        prop_assert!(node_lifetimes(&a).iter().all(|l| l.lifetime_fraction > 0.0 && l.lifetime_fraction <= 1.0));
        let jumps = jump_records(&a);
        let freqs: Vec<Option<f64>> = (1..=10).map(|k| switch_frequency(&jumps, k)).collect();
        for w in freqs.windows(2) {
            if let (Some(x), Some(y)) = (w[0], w[1]) {
                prop_assert!(y <= x);
            }
        }
    }

    #[test]
    fn behavior_rules(seed in any::<u64>()) {
        let a = analyzed(seed, 300);
        let cfg = BehaviorConfig::default();
        let (_, consumed) = detect_moving(&a.session, cfg.moving_window, cfg.moving_min_len);
        let classes = classify_pastes(&a.session, &a.texts, a.session.starter_candidate(2).as_ref(), &consumed, &cfg);
        let candidates: Vec<usize> = a
            .session
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == EditKind::Insert && e.len() >= 2 && !normalize_ws(&e.text).is_empty())
            .map(|(t, _)| t)
            .collect();
        prop_assert_eq!(classes.iter().map(|c| c.0).collect::<Vec<_>>(), candidates);

        // Renames of one lineage are at least `gap` code edits apart.
        let touches = a.touches();
        let mut count_at = Vec::new();
        let mut n = 0;
        for t in &touches {
            n += usize::from(!matches!(t, Touch::Skipped));
            count_at.push(n);
        }
        let mut last: HashMap<u64, usize> = HashMap::new();
        for e in detect_renaming(&a, cfg.rename_gap) {
            let lin = e.detail["lineage"].as_u64().unwrap();
            if let Some(&prev) = last.get(&lin) {
                prop_assert!(count_at[e.state] - prev > cfg.rename_gap);
            }
            last.insert(lin, count_at[e.state]);
        }
    }
}
