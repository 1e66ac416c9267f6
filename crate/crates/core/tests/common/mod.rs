#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ordseq::causal::CausalModel;
use ordseq::{Elem, Ideal, LatticeSlice, Path, Poset};
use ordseq::valuation::{EdgeField, NodeField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random poset on `n` elements: each pair in a hidden order is related
/// with probability `density`. Tau is a random linear extension, so tests
/// do not lean on the default tie-break.
pub fn random_poset(rng: &mut impl Rng, n: usize, density: f64) -> Poset {
    let mut names: Vec<String> = (0..n).map(|k| format!("e{k}")).collect();
    names.shuffle(rng);
    let mut covers = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                covers.push((names[a].clone(), names[b].clone()));
            }
        }
    }
    let mut indeg = vec![0usize; n];
    for (_, hi) in &covers {
        indeg[names.iter().position(|x| x == hi).unwrap()] += 1;
    }
    let mut tau = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    while !ready.is_empty() {
        let k = ready.swap_remove(rng.gen_range(0..ready.len()));
        tau.push(names[k].clone());
        for (lo, hi) in &covers {
            if *lo == names[k] {
                let h = names.iter().position(|x| x == hi).unwrap();
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    ready.push(h);
                }
            }
        }
    }
    let mut decl = names.clone();
    decl.sort();
    Poset::new(&decl, &covers, Some(&tau)).unwrap()
}

/// Every subset of the elements of `s`.
pub fn subsets(s: Ideal) -> Vec<Ideal> {
    let elems: Vec<Elem> = s.iter().collect();
    (0u32..1 << elems.len())
        .map(|mask| Ideal::from_elems(elems.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e)))
        .collect()
}

/// Ideals of `p` by filtering all subsets against the definition.
pub fn all_ideals(p: &Poset) -> Vec<Ideal> {
    subsets(p.full())
        .into_iter()
        .filter(|&s| s.iter().all(|e| p.pred(e).is_subset(s)))
        .collect()
}

/// Admissible addition sequences from `i` to `j`: permutations of `j \ i`
/// that respect the order, found by brute-force permutation filtering.
pub fn linear_extensions(p: &Poset, i: Ideal, j: Ideal) -> Vec<Vec<Elem>> {
    fn permute(rest: &mut Vec<Elem>, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..rest.len() {
            let e = rest.remove(k);
            cur.push(e);
            permute(rest, cur, out);
            cur.pop();
            rest.insert(k, e);
        }
    }
    let mut perms = Vec::new();
    permute(&mut j.difference(i).iter().collect(), &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .filter(|perm| {
            let mut cur = i;
            perm.iter().all(|&a| {
                let ok = p.pred(a).is_subset(cur);
                cur = cur.with(a);
                ok
            })
        })
        .collect()
}

/// BFS distance between two addition sequences in the graph whose edges
/// swap two adjacent incomparable elements.
pub fn swap_distance(p: &Poset, src: &[Elem], dst: &[Elem]) -> usize {
    let mut seen = HashSet::from([src.to_vec()]);
    let mut queue = VecDeque::from([(src.to_vec(), 0usize)]);
    while let Some((cur, d)) = queue.pop_front() {
        if cur == dst {
            return d;
        }
        for k in 0..cur.len().saturating_sub(1) {
            if p.comparable(cur[k], cur[k + 1]) {
                continue;
            }
            let mut next = cur.clone();
            next.swap(k, k + 1);
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    panic!("{dst:?} unreachable from {src:?}");
}

/// Sum of edge values along `adds` from `start`, read directly off the field.
pub fn value_along(g: &EdgeField, start: Ideal, adds: &[Elem]) -> f64 {
    let mut cur = start;
    let mut total = 0.0;
    for &a in adds {
        total += g.get(cur, a).expect("edge in field");
        cur = cur.with(a);
    }
    total
}

pub fn integer_field(rng: &mut impl Rng, l: &LatticeSlice, range: i32) -> EdgeField {
    EdgeField::from_fn(l, |_, _| f64::from(rng.gen_range(-range..=range)))
}

pub fn integer_potential(rng: &mut impl Rng, l: &LatticeSlice, range: i32) -> NodeField {
    let base = l.base();
    NodeField::from_fn(l, |i| if i == base { 0.0 } else { f64::from(rng.gen_range(-range..=range)) })
}

pub fn gradient(phi: &NodeField, l: &LatticeSlice) -> EdgeField {
    EdgeField::from_fn(l, |i, a| phi.get(i.with(a)).unwrap() - phi.get(i).unwrap())
}

/// `μ(K, I)` from its defining recursion over the ideals of `p` in `[K, I]`,
/// enumerated by subset filtering.
pub fn mobius_by_recursion(p: &Poset, k: Ideal, i: Ideal) -> i64 {
    fn go(p: &Poset, k: Ideal, i: Ideal, memo: &mut HashMap<Ideal, i64>) -> i64 {
        if let Some(&m) = memo.get(&i) {
            return m;
        }
        let m = if i == k {
            1
        } else {
            -subsets(i.difference(k))
                .into_iter()
                .map(|s| k.union(s))
                .filter(|&l| l != i && p.is_ideal(l))
                .map(|l| go(p, k, l, memo))
                .sum::<i64>()
        };
        memo.insert(i, m);
        m
    }
    go(p, k, i, &mut HashMap::new())
}

/// `(−1)^{|I\K|}` when `I \ K` is an antichain, 0 otherwise.
pub fn mobius_closed_form(p: &Poset, k: Ideal, i: Ideal) -> i64 {
    let diff: Vec<Elem> = i.difference(k).iter().collect();
    let antichain = diff
        .iter()
        .enumerate()
        .all(|(x, &a)| diff[x + 1..].iter().all(|&b| !p.comparable(a, b)));
    if antichain {
        if diff.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

fn dyadic_split(rng: &mut impl Rng, parts: usize, total_eighths: u32) -> Vec<f64> {
    let mut counts = vec![0u32; parts];
    for _ in 0..total_eighths {
        counts[rng.gen_range(0..parts)] += 1;
    }
    counts.into_iter().map(|c| f64::from(c) / 8.0).collect()
}

/// Random model with dyadic probabilities (multiples of 1/8), half-integer
/// rewards, two contexts and a random kernel. Every state keeps stop mass
/// at least 1/8 and the base has action mass at least 1/8. Some actions get
/// zero probability.
pub fn random_model(rng: &mut impl Rng) -> CausalModel {
    let n = rng.gen_range(2..=4);
    let p = random_poset(rng, n, 0.3);
    let horizon = rng.gen_range(2..=n.min(3));
    let mut m = CausalModel::new(&p, Ideal::EMPTY, horizon, vec!["x0".into(), "x1".into()]).unwrap();
    let l = m.slice().clone();
    let init = rng.gen_range(1..8);
    m.set_initial(vec![f64::from(init) / 8.0, f64::from(8 - init) / 8.0]).unwrap();
    for &i in l.nodes() {
        let k = l.node_index(i).unwrap();
        let actions: Vec<Elem> = l.out_edges(k).iter().map(|e| e.elem).collect();
        for x in 0..2 {
            if actions.is_empty() {
                continue;
            }
            let mass = rng.gen_range(u32::from(i == m.base())..=7);
            let split = dyadic_split(rng, actions.len(), mass);
            m.set_propensity(i, x, actions.iter().copied().zip(split).collect()).unwrap();
            for &a in &actions {
                let stay = rng.gen_range(0..=8);
                let row = if x == 0 {
                    vec![f64::from(stay) / 8.0, f64::from(8 - stay) / 8.0]
                } else {
                    vec![f64::from(8 - stay) / 8.0, f64::from(stay) / 8.0]
                };
                m.set_kernel(i, x, a, row).unwrap();
            }
        }
    }
    for x0 in 0..2 {
        for e in l.edges() {
            let from = l.nodes()[e.from];
            m.set_edge_reward(x0, from, e.elem, f64::from(rng.gen_range(-4..=4)) / 2.0).unwrap();
        }
    }
    for &i in l.nodes() {
        for x in 0..2 {
            if rng.gen_bool(0.3) {
                m.set_terminal(i, x, f64::from(rng.gen_range(-2..=2))).unwrap();
            }
        }
    }
    m
}

/// Every path from the model base inside its slice, including the empty one.
pub fn model_paths(m: &CausalModel) -> Vec<Path> {
    let l = m.slice();
    let mut out = vec![Path::empty(m.base())];
    let mut frontier = vec![Path::empty(m.base())];
    while let Some(path) = frontier.pop() {
        let k = l.node_index(path.end()).unwrap();
        for e in l.out_edges(k) {
            let mut adds = path.additions.clone();
            adds.push(e.elem);
            let next = Path::new(m.base(), adds);
            out.push(next.clone());
            frontier.push(next);
        }
    }
    out
}
