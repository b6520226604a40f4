//! Partition and composition enumeration shared by the expansion
//! coefficients, the moment recursions and the Faà di Bruno formula.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const MAX_PARTITION_N: u32 = 24;

/// The multiset 𝒮_n: tuples (m₁,…,m_n) of non-negative integers with
/// 1·m₁ + 2·m₂ + … + n·m_n = n. |𝒮_n| is the partition number p(n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    pub n: u32,
    pub tuples: Vec<Vec<u32>>,
}

/// Exhaustively enumerates 𝒮_n.
pub fn partitions(n: u32) -> Result<PartitionSet> {
    if n > MAX_PARTITION_N {
        return Err(Error::domain(alloc::format!(
            "partition enumeration capped at n = {MAX_PARTITION_N}, got {n}"
        )));
    }
    let mut tuples = Vec::new();
    let mut current = alloc::vec![0u32; n as usize];
    fill_partitions(n, n, &mut current, &mut tuples);
    Ok(PartitionSet { n, tuples })
}

fn fill_partitions(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    if max_part == 0 {
        return;
    }
    let mut count = 0u32;
    while count * max_part <= remaining {
        current[(max_part - 1) as usize] = count;
        fill_partitions(remaining - count * max_part, max_part - 1, current, out);
        count += 1;
    }
    current[(max_part - 1) as usize] = 0;
}

/// Calls `f` for every ordered tuple (m₁,…,m_i) of positive integers with
/// m₁ + … + m_i = k.
pub fn for_each_composition<F: FnMut(&[u32])>(k: u32, i: u32, f: &mut F) {
    if i == 0 {
        if k == 0 {
            f(&[]);
        }
        return;
    }
    if k < i {
        // every part is at least 1
        return;
    }
    let mut parts = alloc::vec![0u32; i as usize];
    compose_rec(k, 0, &mut parts, f);
}

fn compose_rec<F: FnMut(&[u32])>(remaining: u32, idx: usize, parts: &mut Vec<u32>, f: &mut F) {
    let slots_left = parts.len() - idx;
    if slots_left == 1 {
        if remaining >= 1 {
            parts[idx] = remaining;
            f(parts);
        }
        return;
    }
    // each remaining slot needs at least 1
    let max_here = remaining - (slots_left as u32 - 1);
    for v in 1..=max_here {
        parts[idx] = v;
        compose_rec(remaining - v, idx + 1, parts, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_match_partition_numbers() {
        // p(0..12) = 1,1,2,3,5,7,11,15,22,30,42,56,77
        let expected = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77];
        for (n, &want) in expected.iter().enumerate() {
            let got = partitions(n as u32).unwrap().tuples.len();
            assert_eq!(got, want, "p({n})");
        }
    }

    #[test]
    fn partitions_of_three() {
        let set = partitions(3).unwrap();
        let mut tuples = set.tuples.clone();
        tuples.sort();
        assert_eq!(
            tuples,
            alloc::vec![
                alloc::vec![0, 0, 1],
                alloc::vec![1, 1, 0],
                alloc::vec![3, 0, 0]
            ]
        );
    }

    #[test]
    fn every_tuple_weights_to_n() {
        for n in 0..=12u32 {
            for tuple in &partitions(n).unwrap().tuples {
                let weight: u32 = tuple
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| (j as u32 + 1) * m)
                    .sum();
                assert_eq!(weight, n);
            }
        }
    }

    #[test]
    fn composition_counts() {
        // compositions of k into i positive parts: C(k−1, i−1)
        let mut count = 0usize;
        for_each_composition(6, 3, &mut |_| count += 1);
        assert_eq!(count, 10); // C(5,2)
        count = 0;
        for_each_composition(4, 1, &mut |c| {
            assert_eq!(c, &[4]);
            count += 1;
        });
        assert_eq!(count, 1);
        count = 0;
        for_each_composition(3, 5, &mut |_| count += 1);
        assert_eq!(count, 0);
    }

    #[test]
    fn partition_cap_enforced() {
        assert!(partitions(24).is_ok());
        assert!(partitions(25).is_err());
    }
}
