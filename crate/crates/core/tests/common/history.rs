//! Seeded transaction scripts and a forward-replay reference state.

use std::collections::BTreeSet;

use kapps_core::term::{Iri, Literal, Quad, Term};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{coin, ex, pick};

/// One scripted transaction: quads to insert and quads to delete.
#[derive(Debug, Clone)]
pub struct Step {
    pub inserts: BTreeSet<Quad>,
    pub deletes: BTreeSet<Quad>,
}

/// Generates `n` transactions over a small vocabulary in graph `g`. Every
/// step changes the state: deletes are drawn from the current state and
/// inserts from quads not currently present.
pub fn script(rng: &mut ChaCha8Rng, n: usize, g: &Iri) -> Vec<Step> {
    let subjects: Vec<Term> = (0..6).map(|i| Term::Iri(ex(&format!("h{i}")))).collect();
    let predicates: Vec<Iri> = (0..3).map(|i| ex(&format!("r{i}"))).collect();
    let mut objects = subjects.clone();
    objects.extend((0..5).map(|i| Term::Literal(Literal::integer(i))));
    let graph = Term::Iri(g.clone());
    let mut state: BTreeSet<Quad> = BTreeSet::new();
    let mut steps = Vec::with_capacity(n);
    while steps.len() < n {
        let mut inserts = BTreeSet::new();
        let mut deletes = BTreeSet::new();
        let present: Vec<Quad> = state.iter().cloned().collect();
        if !present.is_empty() && coin(rng, 0.4) {
            for _ in 0..rng.gen_range(1..=3) {
                deletes.insert(pick(rng, &present).clone());
            }
        }
        for _ in 0..rng.gen_range(0..=4) {
            let q = Quad {
                subject: pick(rng, &subjects).clone(),
                predicate: Term::Iri(pick(rng, &predicates).clone()),
                object: pick(rng, &objects).clone(),
                graph: graph.clone(),
            };
            if !state.contains(&q) && !deletes.contains(&q) {
                inserts.insert(q);
            }
        }
        if inserts.is_empty() && deletes.is_empty() {
            continue;
        }
        state = replay_step(&state, &Step {
            inserts: inserts.clone(),
            deletes: deletes.clone(),
        });
        steps.push(Step { inserts, deletes });
    }
    steps
}

fn replay_step(state: &BTreeSet<Quad>, step: &Step) -> BTreeSet<Quad> {
    let mut next: BTreeSet<Quad> = state.difference(&step.deletes).cloned().collect();
    next.extend(step.inserts.iter().cloned());
    next
}

/// The state after each prefix of the script: element `k` is the state after
/// `k` steps, starting from `initial`.
pub fn replay(initial: &BTreeSet<Quad>, steps: &[Step]) -> Vec<BTreeSet<Quad>> {
    let mut out = vec![initial.clone()];
    for s in steps {
        let next = replay_step(out.last().unwrap(), s);
        out.push(next);
    }
    out
}
