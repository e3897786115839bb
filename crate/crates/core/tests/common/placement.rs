//! Placement properties on random maps and candidates, checked by
//! enumeration.

use super::*;
use rand::Rng;
use routeplace_core::disambiguator::*;
use routeplace_core::parser::{parse_config, parse_stanza_snippet, print_config};

const SEEDS: std::ops::Range<u64> = 0..60;

fn problem(seed: u64) -> InsertionProblem {
    let c = parse_config(&random_config_text(seed)).unwrap();
    let text = random_snippet_text(seed);
    let snippet = parse_stanza_snippet(&text).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{text}"));
    InsertionProblem::new(&c, "RM", &snippet).unwrap()
}

fn behaviors(rm: &RouteMap, c: &Config, universe: &[Route]) -> Vec<(Action, Option<Route>)> {
    universe
        .iter()
        .map(|r| {
            let v = ref_evaluate(rm, c, r);
            (v.action, v.output)
        })
        .collect()
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

pub fn chain_matches_enumeration() {
    let universe = route_universe();
    let mut lengths = std::collections::BTreeSet::new();
    for seed in SEEDS {
        let p = problem(seed);
        let chain = build_chain(&p).unwrap();
        assert!(chain.inconclusive.is_empty());
        let target = p.target();
        let mut expected = Vec::new();
        for (i, s) in target.stanzas.iter().enumerate() {
            let hit = universe.iter().any(|r| {
                let v = ref_evaluate(target, &p.config, r);
                v.index == Some(i)
                    && stanza_hits(&p.candidate, &p.config, r)
                    && (v.action, v.output) != stanza_verdict(&p.candidate, r)
            });
            if hit {
                expected.push(s.seq);
            }
        }
        assert_eq!(chain.seqs(), expected, "seed {seed}");
        for link in &chain.links {
            let v = ref_evaluate(target, &p.config, &link.witness);
            let i = target.stanzas.iter().position(|s| s.seq == link.seq).unwrap();
            assert_eq!(v.index, Some(i), "seed {seed}: witness not first-matched by {}", link.seq);
            assert!(stanza_hits(&p.candidate, &p.config, &link.witness));
            assert_ne!((v.action, v.output), stanza_verdict(&p.candidate, &link.witness));
        }
        lengths.insert(chain.len());
    }
    assert!(lengths.len() >= 3, "chain lengths seen: {lengths:?}");
}

pub fn binary_search_satisfies_insertion_conditions() {
    let universe = route_universe();
    for seed in SEEDS {
        let p = problem(seed);
        let mut r = rng(seed ^ 0xa11);
        let mut s = DisambiguationSession::start(p.clone(), SearchMode::Binary).unwrap();
        let mut asked = Vec::new();
        while let Some(q) = s.pending().cloned() {
            assert_ne!(
                (q.option_a.action, q.option_a.output_route.clone()),
                (q.option_b.action, q.option_b.output_route.clone()),
                "seed {seed}: options must differ"
            );
            let choice = if r.random_bool(0.5) { Choice::New } else { Choice::Existing };
            s.answer(choice).unwrap();
            asked.push((q, choice));
        }
        let k = s.chain.len();
        assert!(asked.len() <= ceil_log2(k + 1), "seed {seed}: {} questions for k = {k}", asked.len());
        let SessionState::Done { slot, .. } = s.state else { panic!("seed {seed}: {:?}", s.state) };
        let out = s.result().unwrap().unwrap();
        assert_eq!(parse_config(&print_config(&out)).unwrap(), out, "seed {seed}: round trip");

        let old = p.target();
        let new = &out.route_maps["RM"];
        assert_eq!(new.stanzas.len(), old.stanzas.len() + 1);
        assert_eq!(new.stanzas[slot].matches, p.candidate.matches);
        let old_b = behaviors(old, &p.config, &universe);
        for (i, route) in universe.iter().enumerate() {
            let v = ref_evaluate(new, &out, route);
            let now = (v.action, v.output.clone());
            // Every route keeps its old handling or gets the candidate's.
            assert!(now == old_b[i] || now == stanza_verdict(&p.candidate, route), "seed {seed}: {route:?}");
            // Routes decided by the candidate are matched by it.
            if v.index == Some(slot) {
                assert!(stanza_hits(&p.candidate, &out, route), "seed {seed}");
            }
        }
        for (q, choice) in &asked {
            let v = ref_evaluate(new, &out, &q.witness);
            let want = match choice {
                Choice::Existing => &q.option_a,
                Choice::New => &q.option_b,
            };
            assert_eq!(
                (v.action, v.output.as_ref()),
                (want.action, want.output_route.as_ref()),
                "seed {seed}: answer ignored"
            );
        }

        // Every slot in the same class behaves identically.
        let lo = match s.state {
            SessionState::Done { position, .. } if position > 0 => {
                old.stanzas.iter().position(|x| x.seq == s.chain.links[position - 1].seq).unwrap() + 1
            }
            _ => 0,
        };
        let reference = behaviors(new, &out, &universe);
        for other in lo..=slot {
            let alt = insert_at_slot(&s.problem, other).unwrap();
            assert_eq!(behaviors(&alt.route_maps["RM"], &alt, &universe), reference, "seed {seed}: slot {other}");
        }
    }
}

pub fn exhaustive_mode_checks_the_prefix_property() {
    let mut violated = 0;
    for seed in SEEDS {
        let p = problem(seed);
        let chain = build_chain(&p).unwrap();
        let k = chain.len();
        if k == 0 {
            continue;
        }
        // A prefix-shaped script places exactly where binary search does.
        let cut = (seed as usize) % (k + 1);
        let script: Vec<Choice> = (0..k).map(|i| if i < cut { Choice::Existing } else { Choice::New }).collect();
        let mut ex = DisambiguationSession::start(p.clone(), SearchMode::Exhaustive).unwrap();
        for &c in &script {
            ex.answer(c).unwrap();
        }
        let mut bin = DisambiguationSession::start(p.clone(), SearchMode::Binary).unwrap();
        while let Some(q) = bin.pending() {
            let i = chain.seqs().iter().position(|&x| x == q.seq).unwrap();
            bin.answer(script[i]).unwrap();
        }
        assert_eq!(ex.state, bin.state, "seed {seed}");
        assert_eq!(ex.result(), bin.result());

        if k < 2 {
            continue;
        }
        // New before existing admits no single insertion point.
        let mut adversarial = vec![Choice::New; k];
        adversarial[k - 1] = Choice::Existing;
        let mut s = DisambiguationSession::start(p.clone(), SearchMode::Exhaustive).unwrap();
        for &c in &adversarial {
            s.answer(c).unwrap();
        }
        let SessionState::Infeasible { evidence } = s.state.clone() else { panic!("seed {seed}: {:?}", s.state) };
        assert!(s.result().is_none());
        assert_eq!(s.answer(Choice::New), Err(DisambiguationError::SessionFinished));
        let target = p.target();
        let idx = |seq| target.stanzas.iter().position(|x| x.seq == seq);
        assert!(idx(evidence.new_seq) < idx(evidence.existing_seq));
        for (seq, w) in [(evidence.new_seq, &evidence.new_witness), (evidence.existing_seq, &evidence.existing_witness)]
        {
            assert_eq!(ref_evaluate(target, &p.config, w).index, idx(seq), "seed {seed}");
            assert!(stanza_hits(&p.candidate, &p.config, w), "seed {seed}");
        }
        violated += 1;
    }
    assert!(violated >= 5, "only {violated} adversarial runs");
}
