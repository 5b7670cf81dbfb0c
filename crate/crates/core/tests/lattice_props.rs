use proptest::prelude::*;
use toral_nodal::lattice::{
    condition_i_report, is_sum_of_two_squares, lattice_points, minimally_vanishing_count, SearchBudget,
};

fn brute_minimal(energy: u64, len: usize) -> u64 {
    let pts = lattice_points(energy).points().to_vec();
    let n = pts.len();
    let mut count = 0;
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != len {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let sum = |sub: u64| {
            chosen.iter().enumerate().filter(|(j, _)| sub >> j & 1 == 1).fold((0, 0), |(x, y), (_, &i)| {
                (x + pts[i].0, y + pts[i].1)
            })
        };
        let full = (1u64 << len) - 1;
        if sum(full) != (0, 0) {
            continue;
        }
        if (1..full).all(|sub| sum(sub) != (0, 0)) {
            count += 1;
        }
    }
    count
}

#[test]
fn minimal_counts_match_brute_force() {
    for e in [1u64, 2, 5, 25, 65] {
        for l in 2..=5 {
            let fast = minimally_vanishing_count(e, l, SearchBudget::default()).unwrap();
            assert_eq!(fast, brute_minimal(e, l), "E={e} l={l}");
        }
    }
}

#[test]
fn condition_i_on_small_energies() {
    let rep = condition_i_report(65, 0.25, 4, SearchBudget::default()).unwrap();
    assert!(rep.passes);
    assert!(condition_i_report(65, 0.6, 4, SearchBudget::default()).is_err());
}

proptest! {
    #[test]
    fn points_lie_on_circle_and_come_in_antipodes(e in 1u64..20_000) {
        let pts = lattice_points(e);
        prop_assert_eq!(pts.is_empty(), !is_sum_of_two_squares(e));
        for (i, &(x, y)) in pts.points().iter().enumerate() {
            prop_assert_eq!((x * x + y * y) as u64, e);
            let (u, v) = pts.points()[pts.antipode(i)];
            prop_assert_eq!((u, v), (-x, -y));
            prop_assert_eq!(pts.index_of((y, -x)).is_some(), true);
        }
        prop_assert_eq!(pts.len() % 4, 0);
    }

    #[test]
    fn products_of_representables_are_representable(a in 1u64..3000, b in 1u64..3000) {
        if is_sum_of_two_squares(a) && is_sum_of_two_squares(b) {
            prop_assert!(is_sum_of_two_squares(a * b));
        }
    }
}
