//! Brute-force reference computations shared by the integration tests.
//! Nothing here calls into the library's enumeration, distance or
//! statistics code.

#![allow(dead_code)]

use hamming_concentration::Distribution;

pub const TOL: f64 = 1e-12;

/// Every outcome in lexicographic order with its probability.
pub fn outcomes(sizes: &[usize], dist: &Distribution) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut x = vec![0usize; sizes.len()];
    let mut rank = 0usize;
    loop {
        let p = match dist {
            Distribution::Product { pmfs } => {
                x.iter().enumerate().map(|(i, &s)| pmfs[i][s]).product()
            }
            Distribution::Joint { table } => table[rank],
        };
        out.push((x.clone(), p));
        rank += 1;
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            x[i] += 1;
            if x[i] < sizes[i] {
                break;
            }
            x[i] = 0;
        }
    }
}

pub fn distance(alpha: &[f64], x: &[usize], y: &[usize]) -> f64 {
    x.iter()
        .zip(y)
        .zip(alpha)
        .filter(|((a, b), _)| a != b)
        .map(|(_, w)| w)
        .sum()
}

pub fn set_distance(alpha: &[f64], x: &[usize], members: &[Vec<usize>]) -> f64 {
    members
        .iter()
        .map(|y| distance(alpha, x, y))
        .fold(f64::INFINITY, f64::min)
}

/// `(P(X ∈ A), E d(X, A))`.
pub fn set_summary(
    outcomes: &[(Vec<usize>, f64)],
    alpha: &[f64],
    members: &[Vec<usize>],
) -> (f64, f64) {
    let mut p_in = 0.0;
    let mut rho = 0.0;
    for (x, p) in outcomes {
        if members.contains(x) {
            p_in += p;
        }
        rho += p * set_distance(alpha, x, members);
    }
    (p_in, rho)
}

/// `P(V ≥ t)` for a law given as `(value, probability)` pairs.
pub fn tail_geq(law: &[(f64, f64)], t: f64) -> f64 {
    law.iter()
        .filter(|(v, _)| *v >= t - TOL)
        .map(|(_, p)| p)
        .sum()
}

pub fn mean(law: &[(f64, f64)]) -> f64 {
    law.iter().map(|(v, p)| v * p).sum::<f64>() / law.iter().map(|(_, p)| p).sum::<f64>()
}

/// Smallest and largest medians.
pub fn medians(law: &[(f64, f64)]) -> (f64, f64) {
    let mut sorted: Vec<(f64, f64)> = law.iter().copied().filter(|(_, p)| *p > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = sorted
        .iter()
        .find(|(v, _)| tail_leq(&sorted, *v) >= 0.5 - TOL)
        .map(|(v, _)| *v)
        .unwrap();
    let hi = sorted
        .iter()
        .rev()
        .find(|(v, _)| tail_geq(&sorted, *v) >= 0.5 - TOL)
        .map(|(v, _)| *v)
        .unwrap();
    (lo, hi)
}

pub fn tail_leq(law: &[(f64, f64)], t: f64) -> f64 {
    law.iter()
        .filter(|(v, _)| *v <= t + TOL)
        .map(|(_, p)| p)
        .sum()
}

/// Law of `values[k]` under the outcome probabilities.
pub fn law(outcomes: &[(Vec<usize>, f64)], values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .copied()
        .zip(outcomes.iter().map(|(_, p)| *p))
        .collect()
}
