#![allow(dead_code)]

use std::collections::BTreeMap;

use precorr::ks::{Constraint, Context, ContextSystem, SearchError, Sign, SymbolicObservable};
use rand::seq::SliceRandom;
use rand::Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Re-checks an assignment straight from the system's declarations.
pub fn satisfies(sys: &ContextSystem, values: &BTreeMap<String, f64>) -> bool {
    let in_spectrum = sys.observables().iter().all(|o| match values.get(&o.id) {
        Some(v) => o.spectrum.iter().any(|s| close(*s, *v)),
        None => false,
    });
    in_spectrum
        && sys.contexts().iter().all(|c| {
            let prod = |skip: Option<&str>| -> f64 {
                c.members
                    .iter()
                    .filter(|m| Some(m.as_str()) != skip)
                    .map(|m| values[m])
                    .product()
            };
            match &c.constraint {
                Constraint::ProductEquals(id) => close(values[id], prod(Some(id))),
                Constraint::ProductSign(Sign::Positive) => prod(None) > 0.0,
                Constraint::ProductSign(Sign::Negative) => prod(None) < 0.0,
                Constraint::ProductEqualsValue(v) => close(prod(None), *v),
            }
        })
}

/// Enumerates every observable, determined or not, over its full spectrum.
pub fn brute_force_satisfiable(sys: &ContextSystem) -> bool {
    let obs = sys.observables();
    let mut idx = vec![0usize; obs.len()];
    loop {
        let values: BTreeMap<String, f64> = obs
            .iter()
            .zip(&idx)
            .map(|(o, &i)| (o.id.clone(), o.spectrum[i]))
            .collect();
        if satisfies(sys, &values) {
            return true;
        }
        let mut k = obs.len();
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < obs[k].spectrum.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// A small random system whose determination graph is acyclic.
pub fn random_system(rng: &mut impl Rng) -> ContextSystem {
    const VALUES: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
    loop {
        let n = rng.gen_range(3..=5);
        let observables: Vec<SymbolicObservable> = (0..n)
            .map(|i| {
                let k = rng.gen_range(1..=3);
                let spectrum: Vec<f64> = VALUES.choose_multiple(rng, k).copied().collect();
                SymbolicObservable::new(format!("o{i}"), spectrum)
            })
            .collect();
        let n_ctx = rng.gen_range(1..=4);
        let contexts: Vec<Context> = (0..n_ctx)
            .map(|_| {
                let size = rng.gen_range(2..=3.min(n));
                let members: Vec<String> = (0..n)
                    .collect::<Vec<_>>()
                    .choose_multiple(rng, size)
                    .map(|i| format!("o{i}"))
                    .collect();
                let constraint = match rng.gen_range(0..3) {
                    0 => Constraint::ProductEquals(members.choose(rng).unwrap().clone()),
                    1 => Constraint::ProductSign(if rng.gen_bool(0.5) { Sign::Positive } else { Sign::Negative }),
                    _ => Constraint::ProductEqualsValue(*[1.0, -1.0, 2.0, -2.0, 4.0].choose(rng).unwrap()),
                };
                Context::new(members, constraint)
            })
            .collect();
        let sys = ContextSystem::new(observables, contexts).expect("generated system is valid");
        match precorr::search(&sys) {
            Err(SearchError::CyclicDetermination(_)) => continue,
            _ => return sys,
        }
    }
}

pub fn shuffled(sys: &ContextSystem, rng: &mut impl Rng) -> ContextSystem {
    let mut obs: Vec<usize> = (0..sys.observables().len()).collect();
    let mut ctx: Vec<usize> = (0..sys.contexts().len()).collect();
    obs.shuffle(rng);
    ctx.shuffle(rng);
    sys.permuted(&obs, &ctx)
}
