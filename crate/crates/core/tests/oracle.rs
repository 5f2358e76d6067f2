mod common;

use common::{alpha_eq, bundles, follows, named, run, N};
use proptest::prelude::*;
use pts_core::parse::parse_term;
use pts_core::reduce::{self, Strategy as Red};
use pts_core::{Sort, Term};

/// Oracle steps allowed per engine row.
const SLACK: usize = 16;

#[test]
fn engine_rows_are_oracle_states() {
    for b in bundles() {
        let env = b.env();
        let golden = b.id.golden_head_def();
        let tr = reduce::trace(env, b.bottom_proof(), Red::HeadDef, golden.len() - 1);
        let rows: Vec<N> = tr.steps.iter().map(|s| named(&env.unfold_all(&s.term).unwrap())).collect();
        follows(&rows, SLACK).unwrap_or_else(|k| panic!("{}: row {k} unreachable", b.id));
    }
}

#[test]
fn golden_displays_are_oracle_states() {
    for b in bundles() {
        let env = b.env();
        let rows: Vec<N> =
            b.id.golden_head_def()
                .iter()
                .map(|d| named(&env.unfold_all(&parse_term(d, env).unwrap()).unwrap()))
                .collect();
        let start = named(&env.unfold_all(b.bottom_proof()).unwrap());
        assert!(alpha_eq(&start, &rows[0]), "{}", b.id);
        follows(&rows, SLACK).unwrap_or_else(|k| panic!("{}: golden row {k} unreachable", b.id));
    }
}

#[test]
fn simple_cycle_returns_to_the_start_in_the_oracle() {
    let b = &bundles()[0];
    let env = b.env();
    let start = named(&env.unfold_all(b.bottom_proof()).unwrap());
    let states = run(&start, 200);
    assert!(states[1..].iter().any(|s| alpha_eq(s, &start)));
}

/// Unfolded readbacks of the first `n` head-linear states, stutters removed.
fn linear_readbacks(b: &pts_core::corpus::ParadoxBundle, n: usize) -> Vec<N> {
    let env = b.env();
    let mut t = b.bottom_proof().clone();
    let mut rows: Vec<N> = Vec::new();
    for _ in 0..n {
        let rb = named(&env.unfold_all(&reduce::readback(&t)).unwrap());
        if rows.last().is_none_or(|r| !alpha_eq(r, &rb)) {
            rows.push(rb);
        }
        match reduce::step(env, Red::HeadLinear, &t) {
            Ok((_, next)) => t = next,
            Err(_) => break,
        }
    }
    rows
}

#[test]
fn head_linear_readbacks_reach_the_second_row() {
    for b in bundles() {
        let env = b.env();
        let target = &b.id.golden_head_def()[1];
        let target = named(&env.unfold_all(&parse_term(target, env).unwrap()).unwrap());
        let rows = linear_readbacks(&b, 30);
        assert!(rows.iter().any(|r| alpha_eq(r, &target)), "{}: second row never read back", b.id);
    }
}

#[test]
fn head_linear_readbacks_follow_the_oracle() {
    for b in bundles() {
        let rows = linear_readbacks(&b, 40);
        follows(&rows, SLACK).unwrap_or_else(|k| panic!("{}: readback {k} unreachable", b.id));
    }
}

/// Closed terms over constants `a`, `b` with `*` domains: a random body
/// under three λs, using indices below three only.
fn closed_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::cnst("a")),
        Just(Term::cnst("b")),
        (0usize..3).prop_map(|i| Term::var(i, "x")),
    ];
    let body = leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            inner.prop_map(|b| Term::lam("x", Term::sort(Sort::Star), b)),
        ]
    });
    (body, proptest::collection::vec(0usize..3, 0..3)).prop_map(|(b, args)| {
        let star = || Term::sort(Sort::Star);
        let f = Term::lam("x", star(), Term::lam("y", star(), Term::lam("z", star(), b)));
        Term::apps(f, args.into_iter().map(|i| if i == 0 { Term::cnst("a") } else { Term::cnst("b") }))
    })
}

proptest! {
    #[test]
    fn head_beta_step_agrees_with_oracle(t in closed_term()) {
        let mut fresh = 0;
        let ours = reduce::head_beta_step(&t).map(|u| named(&u));
        let theirs = common::step(&named(&t), &mut fresh);
        match (ours, theirs) {
            (None, None) => {}
            (Some(a), Some(b)) => prop_assert!(alpha_eq(&a, &b), "{a:?} vs {b:?}"),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }
}
