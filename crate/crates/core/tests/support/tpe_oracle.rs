//! Brute-force oracle for the TPE candidate choice on discrete spaces.
#![allow(dead_code)]

use autovid::hyperspace::{ConfigSample, ParamDomain, SearchSpace, Value};
use autovid::seed::stream_rng;
use autovid::tuners::{suggest_random, suggest_tpe_detailed, TpeParams, Trial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recomputes l and g from scratch for a discrete-only space.
pub fn brute_force_score(space: &SearchSpace, history: &[Trial], gamma: f64, pw: f64, candidate: &ConfigSample) -> f64 {
    let mut ranked: Vec<&Trial> = history.iter().collect();
    ranked.sort_by(|a, b| {
        let (x, y) = (a.objective.unwrap_or(f64::INFINITY), b.objective.unwrap_or(f64::INFINITY));
        x.partial_cmp(&y).unwrap().then(a.id.cmp(&b.id))
    });
    let n_good = (gamma * ranked.len() as f64).ceil() as usize;
    let (good, bad) = ranked.split_at(n_good);
    let mut total = 0.0;
    for (name, domain) in space.iter() {
        let ParamDomain::Choice { options } = domain else { panic!("discrete spaces only") };
        let density = |set: &[&Trial], value: &Value| {
            let hits = set.iter().filter(|t| t.config.get(name) == Some(value)).count() as f64;
            (hits + pw / options.len() as f64) / (set.len() as f64 + pw)
        };
        let v = candidate.get(name).unwrap();
        total += density(good, v).ln() - density(bad, v).ln();
    }
    total
}

/// Checks `cases` randomized histories; returns how many were past startup.
pub fn check_oracle_cases(cases: u64) -> Result<usize, String> {
    let params = TpeParams::default();
    let mut checked = 0;
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let dims = rng.random_range(1..=3);
        let mut space = SearchSpace::new();
        for d in 0..dims {
            let k = rng.random_range(2..=4);
            space.insert(format!("d{d}"), ParamDomain::choice((0..k as i64).map(|o| o * 10)).unwrap()).unwrap();
        }
        let n = rng.random_range(params.n_startup..40);
        let history: Vec<Trial> = (0..n)
            .map(|i| {
                let c = suggest_random(&space, &mut rng).unwrap();
                match rng.random_range(0..10) {
                    0 => Trial::failed(i, c, 0),
                    // coarse objectives so ties exercise the id rule
                    _ => Trial::complete(i, c, (rng.random_range(0..6) as f64) / 5.0, 0),
                }
            })
            .collect();
        let complete = history.iter().filter(|t| t.is_complete()).count();
        let s = suggest_tpe_detailed(&space, &history, &params, &mut stream_rng(case, 7)).unwrap();
        if complete < params.n_startup {
            if s.chosen.is_some() {
                return Err(format!("case {case}: startup history produced a TPE choice"));
            }
            continue;
        }
        checked += 1;
        let oracle: Vec<f64> =
            s.candidates.iter().map(|c| brute_force_score(&space, &history, params.gamma, params.prior_weight, c)).collect();
        let mut best = 0;
        for i in 1..oracle.len() {
            if oracle[i] > oracle[best] {
                best = i;
            }
        }
        for (a, b) in oracle.iter().zip(&s.scores) {
            if (a - b).abs() >= 1e-12 {
                return Err(format!("case {case}: score {a} vs oracle {b}"));
            }
        }
        if s.chosen != Some(best) || s.config != s.candidates[best] {
            return Err(format!("case {case}: chose {:?}, oracle argmax {best}", s.chosen));
        }
    }
    Ok(checked)
}
