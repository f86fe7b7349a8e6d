//! Weighted partial set cover: at least `need` units of weight must be
//! covered by balls centered at the points themselves.
//!
//! Weights are integers (one per sample, or an exact measure scaled to a
//! common denominator), so the "covered mass > 1 - eps" test is exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{input, Error, Result};
use crate::features::OrbitFeatures;
use crate::{par, rng};
use rand::Rng;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Moves per local-search attempt before reseeding.
const RESTART_MOVES: u64 = 20_000;

/// The rational number written by the shortest decimal that round-trips to
/// `x`, so `0.2` means exactly `1/5`.
pub fn decimal_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return input(format!("{x} is not finite"));
    }
    let s = format!("{:e}", x);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let frac_len = mantissa.split_once('.').map(|(_, f)| f.len()).unwrap_or(0) as i32;
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().expect("digits"));
    let shift = exp - frac_len;
    let ten = BigRational::from_integer(BigInt::from(10u8));
    value = if shift >= 0 { value * num_traits::pow(ten, shift as usize) } else { value / num_traits::pow(ten, (-shift) as usize) };
    Ok(if negative { -value } else { value })
}

/// Smallest integer weight `w` with `w > total * (1 - eps)`, with `eps` read
/// as its shortest decimal. Zero when any nonempty cover suffices.
pub fn need_for(total: u128, eps: f64) -> Result<u128> {
    if !(eps > 0.0) || !eps.is_finite() {
        return input(format!("epsilon must be positive and finite, got {eps}"));
    }
    let e = decimal_rational(eps)?;
    let t = BigRational::from_integer(BigInt::from(total));
    let threshold = t.clone() - t * e;
    if threshold < BigRational::zero() {
        return Ok(0);
    }
    let need = threshold.floor().to_integer() + BigInt::from(1u8);
    Ok(need.to_u128().expect("at most total"))
}

#[derive(Clone, Debug)]
pub struct CoverInstance {
    weights: Vec<u128>,
    /// `balls[i]`: indices within radius of point `i`, sorted, including `i`.
    balls: Vec<Vec<u32>>,
    need: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    pub centers: Vec<usize>,
    pub covered: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactCover {
    pub cover: Cover,
    pub nodes: u64,
}

impl CoverInstance {
    pub fn new(weights: Vec<u128>, balls: Vec<Vec<u32>>, need: u128) -> Result<Self> {
        if weights.is_empty() || weights.len() != balls.len() {
            return input("cover instance needs one ball per weighted point");
        }
        if balls.iter().flatten().any(|&j| j as usize >= weights.len()) {
            return input("ball member out of range");
        }
        let total: u128 = weights.iter().sum();
        if need > total {
            return input("required weight exceeds total weight");
        }
        Ok(CoverInstance { weights, balls, need })
    }

    pub fn total(&self) -> u128 {
        self.weights.iter().sum()
    }

    pub fn need(&self) -> u128 {
        self.need
    }

    pub fn balls(&self) -> &[Vec<u32>] {
        &self.balls
    }

    pub fn ball_weight(&self, i: usize) -> u128 {
        self.balls[i].iter().map(|&j| self.weights[j as usize]).sum()
    }

    fn gain(&self, i: usize, count: &[u32]) -> u128 {
        self.balls[i]
            .iter()
            .filter(|&&j| count[j as usize] == 0)
            .map(|&j| self.weights[j as usize])
            .sum()
    }

    /// Greedy cover: repeatedly take the ball with the largest uncovered
    /// weight, ties to the lowest index. Always returns at least one center.
    pub fn greedy(&self) -> Cover {
        let mut count = vec![0u32; self.weights.len()];
        let mut heap: BinaryHeap<(u128, Reverse<usize>)> =
            (0..self.balls.len()).map(|i| (self.ball_weight(i), Reverse(i))).collect();
        let mut centers = Vec::new();
        let mut covered = 0u128;
        while covered < self.need || centers.is_empty() {
            let Some((stale, Reverse(i))) = heap.pop() else { break };
            let g = self.gain(i, &count);
            if g < stale {
                heap.push((g, Reverse(i)));
                continue;
            }
            if g == 0 && !centers.is_empty() {
                break;
            }
            centers.push(i);
            covered += g;
            for &j in &self.balls[i] {
                count[j as usize] += 1;
            }
        }
        Cover { centers, covered }
    }

    /// Smallest `m` with `m * (heaviest ball) >= need`.
    pub fn mass_bound(&self) -> usize {
        let heaviest = (0..self.balls.len()).map(|i| self.ball_weight(i)).max().unwrap_or(0);
        if self.need == 0 {
            return 1;
        }
        self.need.div_ceil(heaviest.max(1)) as usize
    }

    /// Tries to find a cover with one center fewer than `start`, repeatedly,
    /// by tabu search: a random uncovered point is covered by its best ball,
    /// the center losing least is dropped, and dropped centers stay out for
    /// a few moves. Deterministic in `seed`; stops at `floor` centers or
    /// after `moves` moves in total.
    pub fn local_search(&self, start: &Cover, floor: usize, seed: u64, moves: u64) -> Cover {
        let n = self.weights.len();
        let mut covers_point: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (c, b) in self.balls.iter().enumerate() {
            for &p in b {
                covers_point[p as usize].push(c as u32);
            }
        }
        let tenure = 10;
        let mut attempt = 0;
        let mut r = rng::rng(seed, 0x10ca1);
        let mut best = start.clone();
        let mut spent = 0u64;
        let gain = |c: usize, count: &[u32]| -> u128 {
            self.balls[c].iter().filter(|&&p| count[p as usize] == 0).map(|&p| self.weights[p as usize]).sum()
        };
        let loss = |c: usize, count: &[u32]| -> u128 {
            self.balls[c].iter().filter(|&&p| count[p as usize] == 1).map(|&p| self.weights[p as usize]).sum()
        };
        while best.centers.len() > floor.max(1) && spent < moves {
            let mut centers = best.centers.clone();
            let mut count = vec![0u32; n];
            for &c in &centers {
                for &p in &self.balls[c] {
                    count[p as usize] += 1;
                }
            }
            let drop = (0..centers.len()).min_by_key(|&k| (loss(centers[k], &count), k)).expect("nonempty");
            for &p in &self.balls[centers[drop]] {
                count[p as usize] -= 1;
            }
            centers.swap_remove(drop);
            let mut covered: u128 = (0..n).filter(|&p| count[p] > 0).map(|p| self.weights[p]).sum();
            let mut banned_until = vec![0u64; n];
            let mut found = false;
            let restart_at = spent + RESTART_MOVES;
            while spent < moves.min(restart_at) {
                if covered >= self.need {
                    found = true;
                    break;
                }
                spent += 1;
                let uncovered = loop {
                    let p = r.gen_range(0..n);
                    if count[p] == 0 {
                        break p;
                    }
                };
                let options: Vec<(u128, usize)> = covers_point[uncovered]
                    .iter()
                    .map(|&c| c as usize)
                    .filter(|&c| banned_until[c] <= spent)
                    .map(|c| (gain(c, &count), c))
                    .collect();
                let Some(top) = options.iter().map(|o| o.0).max() else { continue };
                let ties: Vec<usize> = options.iter().filter(|o| o.0 == top).map(|o| o.1).collect();
                let add = ties[r.gen_range(0..ties.len())];
                for &p in &self.balls[add] {
                    count[p as usize] += 1;
                }
                covered += top;
                let losses: Vec<u128> = centers.iter().map(|&c| loss(c, &count)).collect();
                let least = *losses.iter().min().expect("nonempty");
                let ties: Vec<usize> = (0..centers.len()).filter(|&k| losses[k] == least).collect();
                let k = ties[r.gen_range(0..ties.len())];
                for &p in &self.balls[centers[k]] {
                    count[p as usize] -= 1;
                }
                banned_until[centers[k]] = spent + tenure;
                centers[k] = add;
                covered -= least;
            }
            if !found {
                attempt += 1;
                r = rng::rng(seed, 0x10ca1 + attempt);
                continue;
            }
            centers.sort_unstable();
            best = Cover { centers, covered };
        }
        best
    }

    /// Minimum cover by branch and bound. The warm start is the greedy cover,
    /// improved by [`local_search`](Self::local_search). The bound at each
    /// node is the least number of remaining balls whose individual marginal
    /// gains can reach the missing weight.
    pub fn exact(&self, node_budget: u64) -> Result<ExactCover> {
        let mut greedy = self.greedy();
        let floor = self.mass_bound();
        if self.need > 0 && floor < greedy.centers.len() {
            greedy = self.local_search(&greedy, floor, 0, 400_000);
        }
        let mut search = Search {
            inst: self,
            order: {
                let mut o: Vec<usize> = (0..self.balls.len()).collect();
                o.sort_by_key(|&i| (Reverse(self.ball_weight(i)), i));
                o
            },
            count: vec![0; self.weights.len()],
            excluded: vec![false; self.balls.len()],
            chosen: Vec::new(),
            best: greedy.clone(),
            nodes: 0,
            budget: node_budget,
        };
        if self.need > 0 && self.mass_bound() < greedy.centers.len() {
            search.dfs(0)?;
        }
        let mut cover = search.best;
        cover.centers.sort_unstable();
        Ok(ExactCover { cover, nodes: search.nodes })
    }
}

struct Search<'a> {
    inst: &'a CoverInstance,
    order: Vec<usize>,
    count: Vec<u32>,
    excluded: Vec<bool>,
    chosen: Vec<usize>,
    best: Cover,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// Branch `k` takes the `k`-th heaviest remaining ball and excludes the
    /// `k - 1` heavier ones, so every subset is reached at most once.
    fn dfs(&mut self, covered: u128) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget {
                what: "set-cover branch and bound nodes".into(),
                budget: self.budget,
            });
        }
        if covered >= self.inst.need {
            if self.chosen.len() < self.best.centers.len() {
                self.best = Cover { centers: self.chosen.clone(), covered };
            }
            return Ok(());
        }
        let depth = self.chosen.len();
        if depth + 1 >= self.best.centers.len() {
            return Ok(());
        }
        let missing = self.inst.need - covered;
        let mut gains: Vec<(u128, usize)> = self
            .order
            .iter()
            .filter(|&&i| !self.excluded[i])
            .map(|&i| (self.inst.gain(i, &self.count), i))
            .filter(|&(g, _)| g > 0)
            .collect();
        gains.sort_by_key(|&(g, i)| (Reverse(g), i));
        let mut newly_excluded = Vec::new();
        let mut result = Ok(());
        for k in 0..gains.len() {
            if depth + 1 >= self.best.centers.len() {
                break;
            }
            let slots = self.best.centers.len() - depth - 1;
            let reachable: u128 = gains[k..].iter().take(slots).map(|&(g, _)| g).sum();
            if reachable < missing {
                break;
            }
            let (g, i) = gains[k];
            for &j in &self.inst.balls[i] {
                self.count[j as usize] += 1;
            }
            self.chosen.push(i);
            self.excluded[i] = true;
            result = self.dfs(covered + g);
            self.chosen.pop();
            for &j in &self.inst.balls[i] {
                self.count[j as usize] -= 1;
            }
            newly_excluded.push(i);
            if result.is_err() {
                break;
            }
        }
        for i in newly_excluded {
            self.excluded[i] = false;
        }
        result
    }
}

/// Neighbor lists `{j : rho_bar(x_i, x_j) < radius}` for every sample.
///
/// A handful of pivot samples give the triangle-inequality lower bound
/// `|d(p, x_i) - d(p, x_j)|`; pairs whose bound clears the radius by a
/// margin are skipped, the rest are scanned with early exit. The result is
/// the same as testing every pair directly.
pub fn neighbor_lists(features: &OrbitFeatures, radius: f64, parallel: bool) -> Vec<Vec<u32>> {
    let n = features.len();
    let pivots: Vec<usize> = (0..n.min(8)).map(|k| k * n / n.min(8).max(1)).collect();
    let pd = |i: usize| -> Vec<f64> { pivots.iter().map(|&p| features.distance(p, i)).collect() };
    let table: Vec<Vec<f64>> = if parallel { par::map_indexed(n, pd) } else { par::map_indexed_seq(n, pd) };
    let margin = radius + 1e-9 * (1.0 + radius);
    let row = |i: usize| -> Vec<u32> {
        (0..n)
            .filter(|&j| {
                if i == j {
                    return true;
                }
                let lb = table[i].iter().zip(&table[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                lb < margin && features.within(i, j, radius)
            })
            .map(|j| j as u32)
            .collect()
    };
    if parallel {
        par::map_indexed(n, row)
    } else {
        par::map_indexed_seq(n, row)
    }
}
