mod support;

use proptest::prelude::*;
use ptchron::{CharRange, Correspondences, Session};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{random_script, UidReplay};

const ALPHABET: [char; 5] = ['a', 'b', 'c', 'd', 'é'];

fn script(seed: u64, len: usize) -> Vec<ptchron::EditEvent> {
    random_script(&mut ChaCha8Rng::seed_from_u64(seed), len, &ALPHABET)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn chain_range_matches_uid_oracle(seed in any::<u64>(), len in 2usize..80, q in any::<(u16, u16, u16, u16)>()) {
        let events = script(seed, len);
        let corr = Correspondences::from_events(&events).unwrap();
        let oracle = UidReplay::new(&events);
        let from = 1 + q.0 as usize % (len - 1);
        let to = q.1 as usize % from;
        let n = oracle.states[from].len();
        let a = q.2 as usize % (n + 1);
        let b = a + q.3 as usize % (n - a + 1);
        let r = CharRange::new(a, b);
        prop_assert_eq!(corr.chain_range(r, from, to).unwrap(), oracle.chain(r, from, to));
    }

    #[test]
    fn composition(seed in any::<u64>(), len in 3usize..60, q in any::<(u16, u16, u16, u16, u16)>()) {
        let events = script(seed, len);
        let corr = Correspondences::from_events(&events).unwrap();
        let oracle = UidReplay::new(&events);
        let t = 2 + q.0 as usize % (len - 2);
        let v = 1 + q.1 as usize % (t - 1);
        let u = q.2 as usize % v;
        let n = oracle.states[t].len();
        let a = q.3 as usize % (n + 1);
        let r = CharRange::new(a, a + q.4 as usize % (n - a + 1));
        let direct = corr.chain_range(r, t, u).unwrap();
        let Some(mid) = corr.chain_range(r, t, v).unwrap() else { return Ok(()) };
        let Some(composed) = corr.chain_range(mid, v, u).unwrap() else {
            prop_assert!(direct.is_none());
            return Ok(());
        };
        match direct {
            // The middle range may pick up characters that are not in `r`,
            // so composing can only widen.
            Some(d) if !r.is_empty() => {
                prop_assert!(composed.contains_range(&d));
                let mid_all_from_r = oracle.states[v][mid.start..mid.end]
                    .iter()
                    .all(|&x| oracle.states[t][r.start..r.end].contains(&x));
                if mid_all_from_r {
                    prop_assert_eq!(composed, d);
                }
            }
            Some(_) => {}
            None => {}
        }
    }

    #[test]
    fn surviving_characters_keep_their_order(seed in any::<u64>(), len in 2usize..80, q in any::<(u16, u16)>()) {
        let events = script(seed, len);
        let corr = Correspondences::from_events(&events).unwrap();
        let from = 1 + q.0 as usize % (len - 1);
        let to = q.1 as usize % from;
        let back = corr.backward_map(from, to).unwrap();
        let alive: Vec<i32> = back.into_iter().filter(|&p| p >= 0).collect();
        prop_assert!(alive.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn arrays_are_well_formed(seed in any::<u64>(), len in 1usize..80) {
        let events = script(seed, len);
        let corr = Correspondences::from_events(&events).unwrap();
        let oracle = UidReplay::new(&events);
        for t in 0..len {
            let v = corr.arrays()[t].values();
            let prev_len = if t == 0 { 0 } else { oracle.states[t - 1].len() };
            prop_assert_eq!(v.len(), oracle.states[t].len() + 1);
            let kept: Vec<i32> = v.iter().copied().filter(|&x| x >= 0).collect();
            prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(*v.last().unwrap(), prev_len as i32);
        }
    }

    #[test]
    fn replay_matches_uid_replay(seed in any::<u64>(), len in 1usize..80) {
        let events = script(seed, len);
        let session = Session::new("s", "f", events.clone());
        let snaps = session.snapshots().unwrap();
        let oracle = UidReplay::new(&events);
        let mut prev = 0isize;
        for (t, s) in snaps.iter().enumerate() {
            prop_assert_eq!(s.text.len(), oracle.states[t].len());
            prop_assert_eq!(s.text.len() as isize, prev + events[t].delta());
            prev = s.text.len() as isize;
        }
        // Every surviving character is the one its uid says it is.
        let last = snaps.last().unwrap();
        for (i, &u) in oracle.states[len - 1].iter().enumerate() {
            let (ev, k) = ((u >> 24) as usize, (u & 0xff_ffff) as usize);
            prop_assert_eq!(last.text[i], events[ev].text.chars().nth(k).unwrap());
        }
        prop_assert_eq!(session.snapshots().unwrap(), snaps);
    }
}
