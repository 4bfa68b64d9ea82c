#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use secrecy_lab::{Dist, FiniteCryptosystem, Prob};

pub fn p(s: &str) -> Prob {
    s.parse().unwrap()
}

pub fn dist(e: &[(&str, &str)]) -> Dist {
    Dist::parse(e).unwrap()
}

/// Joint `P(M = m, E = e)` by walking every (message, key) cell.
pub fn joint_by_enumeration(sys: &FiniteCryptosystem) -> Vec<Vec<Prob>> {
    let nm = sys.messages().len();
    let nc = sys.ciphertexts().len();
    let mut joint = vec![vec![Prob::zero(); nc]; nm];
    for (m, pm) in sys.prior_probs().iter().enumerate() {
        for (k, pk) in sys.key_probs().iter().enumerate() {
            let c = sys.cell(k, m);
            joint[m][c] = &joint[m][c] + &(pm * pk);
        }
    }
    joint
}

/// `P(E)` by enumeration, in ciphertext order.
pub fn marginal_by_enumeration(sys: &FiniteCryptosystem) -> Vec<Prob> {
    let joint = joint_by_enumeration(sys);
    (0..sys.ciphertexts().len())
        .map(|c| joint.iter().map(|row| &row[c]).sum())
        .collect()
}

/// `P(M | E = cipher)` by enumeration; `None` when the ciphertext is impossible.
pub fn posterior_by_enumeration(sys: &FiniteCryptosystem, cipher: usize) -> Option<Vec<Prob>> {
    let joint = joint_by_enumeration(sys);
    let evidence: Prob = joint.iter().map(|row| &row[cipher]).sum();
    if evidence.is_zero() {
        return None;
    }
    Some(
        joint
            .iter()
            .map(|row| row[cipher].checked_div(&evidence).unwrap())
            .collect(),
    )
}

/// Random distribution with integer weights in `lo..=hi`, renormalized.
pub fn random_dist(rng: &mut ChaCha8Rng, labels: &[String], lo: u64, hi: u64) -> Dist {
    loop {
        let entries: Vec<(String, Prob)> = labels
            .iter()
            .map(|l| (l.clone(), Prob::new(rng.random_range(lo..=hi), 1).unwrap()))
            .collect();
        if let Ok(d) = Dist::normalized(entries) {
            return d;
        }
    }
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random Latin square of order `n` by randomized backtracking.
pub fn random_latin_square(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    fn fill(rng: &mut ChaCha8Rng, grid: &mut Vec<Vec<usize>>, n: usize, cell: usize) -> bool {
        if cell == n * n {
            return true;
        }
        let (r, c) = (cell / n, cell % n);
        let mut symbols: Vec<usize> = (0..n).collect();
        symbols.shuffle(rng);
        for s in symbols {
            let clash = (0..c).any(|j| grid[r][j] == s) || (0..r).any(|i| grid[i][c] == s);
            if !clash {
                grid[r][c] = s;
                if fill(rng, grid, n, cell + 1) {
                    return true;
                }
            }
        }
        false
    }
    let mut grid = vec![vec![usize::MAX; n]; n];
    assert!(fill(rng, &mut grid, n, 0));
    grid
}

fn build(
    rows: &[Vec<usize>],
    nm: usize,
    ne: usize,
    key_dist: Dist,
    prior: Dist,
) -> FiniteCryptosystem {
    // keep only produced ciphertexts, in index order
    let mut used = vec![false; ne];
    rows.iter().flatten().for_each(|&c| used[c] = true);
    let ciphertexts: Vec<String> = (0..ne)
        .filter(|&c| used[c])
        .map(|c| format!("e{c}"))
        .collect();
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|c| format!("e{c}")).collect())
        .collect();
    FiniteCryptosystem::from_rows(
        names("m", nm),
        key_dist.labels().map(String::from).collect(),
        ciphertexts,
        &rows,
        key_dist,
        prior,
    )
    .unwrap()
}

/// Latin square of order `n` with uniform keys and a random positive prior.
pub fn random_latin_system(rng: &mut ChaCha8Rng, n: usize) -> FiniteCryptosystem {
    let rows = random_latin_square(rng, n);
    let prior = random_dist(rng, &names("m", n), 1, 20);
    build(&rows, n, n, Dist::uniform(names("k", n)).unwrap(), prior)
}

/// Arbitrary system with |M|, |K|, |E| <= 6, injective keys and strictly
/// positive rational prior and key distribution.
pub fn random_system(rng: &mut ChaCha8Rng) -> FiniteCryptosystem {
    let nm = rng.random_range(1..=6);
    let nk = rng.random_range(1..=6);
    let ne = rng.random_range(nm..=6);
    let rows: Vec<Vec<usize>> = (0..nk)
        .map(|_| {
            let mut cs: Vec<usize> = (0..ne).collect();
            cs.shuffle(rng);
            cs.truncate(nm);
            cs
        })
        .collect();
    let keys = random_dist(rng, &names("k", nk), 1, 12);
    let prior = random_dist(rng, &names("m", nm), 1, 12);
    build(&rows, nm, ne, keys, prior)
}

/// One or more stacked Latin squares of a common order with uniform keys:
/// perfect by construction.
pub fn random_stacked_latin_system(rng: &mut ChaCha8Rng) -> FiniteCryptosystem {
    let n = rng.random_range(1..=6);
    let copies = rng.random_range(1..=(6 / n).max(1));
    let rows: Vec<Vec<usize>> = (0..copies)
        .flat_map(|_| random_latin_square(rng, n))
        .collect();
    let prior = random_dist(rng, &names("m", n), 1, 20);
    build(
        &rows,
        n,
        n,
        Dist::uniform(names("k", rows.len())).unwrap(),
        prior,
    )
}

/// The generated population used by the equivalence and necessity searches:
/// two arbitrary systems for every perfect-by-construction one.
pub fn mixed_population(rng: &mut ChaCha8Rng, count: usize) -> Vec<FiniteCryptosystem> {
    (0..count)
        .map(|i| {
            if i % 3 == 2 {
                random_stacked_latin_system(rng)
            } else {
                random_system(rng)
            }
        })
        .collect()
}

/// Unique random bitstrings of length 1..=4 with positive random masses.
pub fn random_length_prior(rng: &mut ChaCha8Rng) -> Dist {
    let size = rng.random_range(1..=8);
    let mut texts: Vec<String> = Vec::new();
    while texts.len() < size {
        let len = rng.random_range(1..=4);
        let t: String = (0..len)
            .map(|_| if rng.random_bool(0.5) { '1' } else { '0' })
            .collect();
        if !texts.contains(&t) {
            texts.push(t);
        }
    }
    random_dist(rng, &texts, 1, 30)
}
