use ngram_markov::oracle::{brute_force_enumerate, lookahead_holds};
use ngram_markov::propagator::{check_lookahead, FilterConfig};
use ngram_markov::search::{enumerate, enumerate_with_workers, Limits};
use ngram_markov::synthetic::{negated, random_config, random_small_table};
use ngram_markov::{Criterion, Direction, Error, NgramTable, SearchState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chains(sols: &[ngram_markov::Solution]) -> Vec<Vec<ngram_markov::NgramId>> {
    sols.iter().map(|s| s.chain.clone()).collect()
}

/// Draws small tables until the oracle accepts the configuration.
fn instance(rng: &mut ChaCha8Rng, criterion: Criterion, direction: Direction) -> (NgramTable, FilterConfig) {
    loop {
        let order = rng.random_range(2..=3);
        let Ok(table) = random_small_table(rng, order, 50) else {
            continue;
        };
        let config = random_config(rng, &table, criterion, direction);
        if brute_force_enumerate(&table, &config).is_ok() {
            return (table, config);
        }
    }
}

#[test]
fn search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut non_empty = 0;
    for _ in 0..30 {
        for criterion in Criterion::ALL {
            for direction in [Direction::KeepLeq, Direction::KeepGeq] {
                let (table, config) = instance(&mut rng, criterion, direction);
                let expected = brute_force_enumerate(&table, &config).unwrap();
                let got = enumerate(&table, &config, &Limits::default()).unwrap();
                assert_eq!(got.solutions, expected, "{config:?}");
                non_empty += usize::from(!expected.is_empty());
            }
        }
    }
    assert!(non_empty >= 90, "only {non_empty} of 300 instances had solutions");
}

#[test]
fn lookahead_matches_path_listing() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let direction = if rng.random_bool(0.5) {
            Direction::KeepLeq
        } else {
            Direction::KeepGeq
        };
        let (table, config) = instance(&mut rng, Criterion::GlidingLookahead, direction);
        for &id in table.ids() {
            for pos in 1..=config.length {
                assert_eq!(
                    check_lookahead(&table, id, pos, &config),
                    lookahead_holds(&table, &config, id, pos),
                    "id {id} pos {pos} {config:?}"
                );
            }
        }
    }
}

#[test]
fn successor_index_is_sound_and_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let order = rng.random_range(2..=4);
        let Ok(table) = random_small_table(&mut rng, order, 200) else {
            continue;
        };
        for &a in table.ids() {
            let succ = table.successors(a).unwrap();
            assert!(succ.windows(2).all(|w| w[0] < w[1]));
            for &b in table.ids() {
                let chained = table.words(a)[1..] == table.words(b)[..order - 1];
                assert_eq!(succ.contains(&b), chained);
            }
        }
    }
}

#[test]
fn direction_mirror() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        for criterion in Criterion::ALL {
            let (table, geq) = instance(&mut rng, criterion, Direction::KeepGeq);
            let flipped = negated(&table);
            let leq = FilterConfig {
                direction: Direction::KeepLeq,
                threshold: -geq.threshold,
                step_bound: ngram_markov::StepBound(-geq.step_bound.0),
                ..geq.clone()
            };
            let a = enumerate(&table, &geq, &Limits::default()).unwrap();
            let b = enumerate(&flipped, &leq, &Limits::default()).unwrap();
            assert_eq!(chains(&a.solutions), chains(&b.solutions));
            // kept sets at the root agree as well
            let root = SearchState::new();
            assert_eq!(
                ngram_markov::admissible_successors(&table, &root, &geq),
                ngram_markov::admissible_successors(&flipped, &root, &leq)
            );
        }
    }
}

#[test]
fn criteria_nest_and_never_visit_more_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..60 {
        let (table, base) = instance(&mut rng, Criterion::GlidingLookahead, Direction::KeepLeq);
        let run = |c: Criterion| {
            let cfg = FilterConfig {
                criterion: c,
                ..base.clone()
            };
            enumerate(&table, &cfg, &Limits::default()).unwrap()
        };
        let vanilla = run(Criterion::Vanilla);
        let gliding = run(Criterion::Gliding);
        let lookahead = run(Criterion::GlidingLookahead);
        let v = chains(&vanilla.solutions);
        let g = chains(&gliding.solutions);
        let l = chains(&lookahead.solutions);
        assert!(g.iter().all(|c| v.contains(c)));
        assert!(l.iter().all(|c| g.contains(c)));
        for c in Criterion::ALL {
            assert!(run(c).stats.nodes <= vanilla.stats.nodes);
        }
    }
}

#[test]
fn final_solutions_satisfy_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let direction = if rng.random_bool(0.5) {
            Direction::KeepLeq
        } else {
            Direction::KeepGeq
        };
        let (table, config) = instance(&mut rng, Criterion::Final, direction);
        let out = enumerate(&table, &config, &Limits::default()).unwrap();
        for s in &out.solutions {
            let total: f64 = s.chain.iter().map(|&id| table.logprob(id)).sum();
            assert!(direction.keeps(total, config.threshold));
        }
    }
}

#[test]
fn vacuous_final_threshold_equals_vanilla() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let (table, config) = instance(&mut rng, Criterion::Vanilla, Direction::KeepLeq);
        let max_sum = table.max_logprob().max(0.0) * config.length as f64 + 1.0;
        let fin = FilterConfig::final_threshold(config.length, max_sum)
            .with_boundaries(config.require_start, config.require_end);
        let a = brute_force_enumerate(&table, &config).unwrap();
        let b = brute_force_enumerate(&table, &fin).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn parallel_output_is_worker_independent() {
    let table = ngram_markov::synthetic::SyntheticSpec::ten_thousand(3).build().unwrap();
    let stats = table.stats(true).unwrap();
    let config = FilterConfig::gliding(6, &stats, 1.0).unwrap();
    let one = enumerate_with_workers(&table, &config, &Limits::default(), 1).unwrap();
    for w in [2, 8] {
        let many = enumerate_with_workers(&table, &config, &Limits::default(), w).unwrap();
        assert_eq!(many.solutions, one.solutions);
        assert_eq!(many.stats.nodes, one.stats.nodes);
        assert_eq!(many.stats.pruned, one.stats.pruned);
    }
    let mut sorted = chains(&one.solutions);
    sorted.sort();
    assert_eq!(sorted, chains(&one.solutions));
}

#[test]
fn incremental_sums_match_recomputation() {
    let table = ngram_markov::synthetic::SyntheticSpec::ten_thousand(5).build().unwrap();
    let out = enumerate(&table, &FilterConfig::vanilla(6), &Limits::default()).unwrap();
    for s in &out.solutions {
        let mut st = SearchState::new();
        for &id in &s.chain {
            st.push(&table, id);
        }
        let direct: f64 = s.chain.iter().map(|&id| table.logprob(id)).sum();
        assert!((st.prefix_sum() - s.total_logprob).abs() < 1e-9);
        assert!((direct - s.total_logprob).abs() < 1e-9);
    }
}

#[test]
fn node_limit_is_reported() {
    let table = ngram_markov::synthetic::SyntheticSpec::ten_thousand(5).build().unwrap();
    let limits = Limits {
        max_nodes: Some(5_000),
        ..Limits::default()
    };
    match enumerate(&table, &FilterConfig::vanilla(6), &limits) {
        Err(Error::LimitExceeded { reason, partial }) => {
            assert_eq!(reason, ngram_markov::search::StopReason::MaxNodes);
            assert!(!partial.solutions.is_empty());
        }
        other => panic!("expected limit error, got {:?}", other.map(|o| o.solutions.len())),
    }
}

#[test]
fn oracle_guard() {
    let table = ngram_markov::synthetic::SyntheticSpec::ten_thousand(5).build().unwrap();
    assert!(matches!(
        brute_force_enumerate(&table, &FilterConfig::vanilla(6)),
        Err(Error::OracleTooLarge(_))
    ));
}
