//! Brute-force oracle over colored rooted labelled trees.
//!
//! For a multi-index n, every rooted labelled tree on the colored vertex set
//! (n_k vertices of color k) carries the weight Π over edges of ℓ_{color of
//! the father}. Summing the weights over all M^{M-1} rooted trees must give
//! (Σ n_k ℓ_k)^{M-1}; dividing by n! recovers the magnitude of the
//! continuous expansion coefficient. The enumeration walks Prüfer sequences
//! and tries every root, so it is exponential and capped.

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::expansions::MultiIndex;

/// Default cap on the number of vertices the enumeration will accept.
pub const TREE_VERTEX_CAP: u64 = 7;

/// Sum of father-color edge weights over all rooted labelled trees on the
/// colored vertex set described by `n`.
pub fn tree_weight_sum(n: &MultiIndex, lengths: &[BigRational]) -> Result<BigRational> {
    let m = n.order();
    if m > TREE_VERTEX_CAP {
        return Err(Error::CapExceeded {
            what: "tree enumeration vertices",
            requested: m as usize,
            limit: TREE_VERTEX_CAP as usize,
        });
    }
    // Vertex colors: vertices 0..M laid out species by species.
    let mut color: Vec<usize> = Vec::with_capacity(m as usize);
    for (k, c) in n.counts() {
        if k >= lengths.len() {
            return Err(Error::DomainError(format!("species {k} out of range")));
        }
        for _ in 0..c {
            color.push(k);
        }
    }
    let m = m as usize;
    if m == 1 {
        // Single vertex, empty edge product.
        return Ok(BigRational::one());
    }
    let mut total = BigRational::from_integer(0.into());
    let mut prufer = vec![0usize; m - 2];
    loop {
        let edges = decode_prufer(&prufer, m);
        // Try every root; weight multiplies ℓ_{color(father)} per edge.
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for root in 0..m {
            let mut w = BigRational::one();
            // Orient edges away from the root with an explicit stack.
            let mut stack = vec![(root, usize::MAX)];
            while let Some((v, parent)) = stack.pop() {
                for &child in &adj[v] {
                    if child != parent {
                        w *= &lengths[color[v]];
                        stack.push((child, v));
                    }
                }
            }
            total += w;
        }
        // Advance the Prüfer odometer.
        let mut i = 0;
        loop {
            if i == prufer.len() {
                return Ok(total);
            }
            prufer[i] += 1;
            if prufer[i] < m {
                break;
            }
            prufer[i] = 0;
            i += 1;
        }
    }
}

/// Standard Prüfer decoding: returns the m-1 edges of the labelled tree on
/// {0, .., m-1} encoded by the sequence (length m-2).
fn decode_prufer(seq: &[usize], m: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1u32; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    // Min-leaf selection; m ≤ 7 keeps the quadratic scan cheap.
    let mut used = vec![false; m];
    for &s in seq {
        let leaf = (0..m).find(|&v| degree[v] == 1 && !used[v]).expect("leaf exists");
        edges.push((leaf, s));
        used[leaf] = true;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&v| !used[v] && degree[v] == 1).collect();
    debug_assert_eq!(rest.len(), 2);
    edges.push((rest[0], rest[1]));
    edges
}
