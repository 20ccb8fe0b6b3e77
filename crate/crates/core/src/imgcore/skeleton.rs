//! Zhang–Suen thinning with a sequential simple-point guard.
//!
//! Candidates for each sub-iteration are chosen with the classic parallel
//! Zhang–Suen conditions on a snapshot. They are then removed one at a time,
//! and a candidate is only removed if it is still a simple point (8-connected
//! ink, 4-connected background) in the current mask. The guard stops the two
//! known failure modes of plain Zhang–Suen: 2×2 blocks vanishing and
//! two-pixel-thick diagonals splitting.

use super::BinaryImage;

/// Neighbour offsets P2..P9, clockwise from north.
const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

pub fn skeletonize(b: &BinaryImage) -> BinaryImage {
    let mut out = b.clone();
    loop {
        let first = thinning_pass(&mut out, 0);
        let second = thinning_pass(&mut out, 1);
        if !first && !second {
            return out;
        }
    }
}

fn ring(b: &BinaryImage, x: usize, y: usize) -> [bool; 8] {
    let mut n = [false; 8];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        n[k] = b.is_ink_at(x as isize + dx, y as isize + dy);
    }
    n
}

fn transitions(n: &[bool; 8]) -> usize {
    (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count()
}

/// Yokoi 8-connectivity number; a pixel is simple iff this equals 1.
fn connectivity_number(n: &[bool; 8]) -> usize {
    // RING index: 0=N 1=NE 2=E 3=SE 4=S 5=SW 6=W 7=NW; 4-neighbours are the even slots.
    let c = |k: usize| !n[k % 8] as usize;
    [0, 2, 4, 6].iter().map(|&k| c(k) - c(k) * c(k + 1) * c(k + 2)).sum()
}

fn thinning_pass(b: &mut BinaryImage, step: usize) -> bool {
    let (w, h) = b.dims();
    let mut candidates = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !b.is_ink(x, y) {
                continue;
            }
            let n = ring(b, x, y);
            let count = n.iter().filter(|&&v| v).count();
            if !(2..=6).contains(&count) || transitions(&n) != 1 {
                continue;
            }
            // P2=n[0], P4=n[2], P6=n[4], P8=n[6]
            let (c1, c2) = if step == 0 {
                (n[0] && n[2] && n[4], n[2] && n[4] && n[6])
            } else {
                (n[0] && n[2] && n[6], n[0] && n[4] && n[6])
            };
            if !c1 && !c2 {
                candidates.push((x, y));
            }
        }
    }

    let mut changed = false;
    for (x, y) in candidates {
        let n = ring(b, x, y);
        let count = n.iter().filter(|&&v| v).count();
        if count >= 2 && connectivity_number(&n) == 1 {
            b.set(x, y, false);
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn components8(b: &BinaryImage) -> Vec<usize> {
        let (w, h) = b.dims();
        let mut label = vec![usize::MAX; w * h];
        let mut next = 0;
        for start in 0..w * h {
            if !b.mask()[start] || label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if b.is_ink_at(x + dx, y + dy) {
                            let j = (y + dy) as usize * w + (x + dx) as usize;
                            if label[j] == usize::MAX {
                                label[j] = next;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            next += 1;
        }
        label
    }

    #[test]
    fn empty_stays_empty() {
        let b = BinaryImage::new(7, 5);
        assert_eq!(skeletonize(&b), b);
    }

    #[test]
    fn thin_diagonal_unchanged() {
        let b = BinaryImage::from_fn(9, 9, |x, y| x == y);
        assert_eq!(skeletonize(&b), b);
    }

    #[test]
    fn solid_square_thins_to_fixed_point() {
        let b = BinaryImage::from_fn(9, 9, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        let s = skeletonize(&b);
        assert!(s.ink_count() >= 1 && s.ink_count() <= 5, "{}", s.ink_count());
        assert!(s.mask().iter().zip(b.mask()).all(|(&o, &i)| !o || i));
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn two_by_two_block_survives() {
        let b = BinaryImage::from_fn(4, 4, |x, y| (1..3).contains(&x) && (1..3).contains(&y));
        let s = skeletonize(&b);
        assert!(s.ink_count() >= 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn subset_idempotent_and_topology_preserving(
            bits in proptest::collection::vec(prop::bool::weighted(0.55), 20 * 20)
        ) {
            let b = BinaryImage::from_mask(20, 20, bits).unwrap();
            let s = skeletonize(&b);
            prop_assert!(s.mask().iter().zip(b.mask()).all(|(&o, &i)| !o || i));
            prop_assert_eq!(skeletonize(&s), s.clone());

            // every input component keeps exactly one output component
            let before = components8(&b);
            let after = components8(&s);
            let n_before = before.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |m| m + 1);
            let n_after = after.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |m| m + 1);
            prop_assert_eq!(n_before, n_after);
            let mut seen = std::collections::HashMap::new();
            for (i, &l) in after.iter().enumerate() {
                if l != usize::MAX {
                    let prev = seen.insert(before[i], l);
                    prop_assert!(prev.is_none() || prev == Some(l));
                }
            }
        }
    }
}
