//! Brute-force catalog matching: enumerate every injective map from query
//! columns into data parameters.

use rand::Rng;

/// Roles as small integers: 0 Measure, 1 Dimension, 2 Time.
pub const ROLE_NAMES: [&str; 3] = ["Measure", "Dimension", "Time"];

#[derive(Clone, Debug)]
pub struct Slot {
    pub roles: Vec<usize>,
    pub required: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Complete,
    Partial,
    NoMatch,
}

/// Walks all injective assignments. Partial if any exists, Complete if any
/// also fills every required slot.
pub fn brute_force(slots: &[Slot], query: &[usize]) -> Verdict {
    fn go(slots: &[Slot], query: &[usize], i: usize, used: &mut Vec<bool>, best: &mut Verdict) {
        if *best == Verdict::Complete {
            return;
        }
        if i == query.len() {
            let complete = slots.iter().zip(used.iter()).all(|(s, u)| !s.required || *u);
            *best = if complete { Verdict::Complete } else { Verdict::Partial };
            return;
        }
        for p in 0..slots.len() {
            if !used[p] && slots[p].roles.contains(&query[i]) {
                used[p] = true;
                go(slots, query, i + 1, used, best);
                used[p] = false;
                if *best == Verdict::Complete {
                    return;
                }
            }
        }
    }
    let mut best = Verdict::NoMatch;
    go(slots, query, 0, &mut vec![false; slots.len()], &mut best);
    best
}

/// Checks that `mapping[i]` (slot index for query column i) is a valid
/// witness for `verdict`.
pub fn witness_ok(slots: &[Slot], query: &[usize], mapping: &[usize], verdict: Verdict) -> bool {
    if mapping.len() != query.len() {
        return false;
    }
    let mut used = vec![false; slots.len()];
    for (col, &p) in mapping.iter().enumerate() {
        if p >= slots.len() || used[p] || !slots[p].roles.contains(&query[col]) {
            return false;
        }
        used[p] = true;
    }
    let complete = slots.iter().zip(&used).all(|(s, u)| !s.required || *u);
    match verdict {
        Verdict::Complete => complete,
        Verdict::Partial => !complete,
        Verdict::NoMatch => false,
    }
}

pub fn random_instance<R: Rng>(rng: &mut R, max_query: usize, max_slots: usize) -> (Vec<Slot>, Vec<usize>) {
    let n_slots = rng.gen_range(0..=max_slots);
    let slots = (0..n_slots)
        .map(|_| {
            let mut roles: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.45)).collect();
            if roles.is_empty() {
                roles.push(rng.gen_range(0..3));
            }
            Slot {
                roles,
                required: rng.gen_bool(0.5),
            }
        })
        .collect();
    let query = (0..rng.gen_range(0..=max_query)).map(|_| rng.gen_range(0..3)).collect();
    (slots, query)
}
