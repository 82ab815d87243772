use envytree_core::procedures::{eq_div, equal, select, trim};
use envytree_core::{ExactScalar, Instance, Oracle, Piece, SocialGraph, Valuation};
use proptest::prelude::*;

const GRID: i64 = 48;

fn piece(cells: &[(i64, i64)]) -> Piece {
    Piece::from_pairs(
        cells
            .iter()
            .map(|&(a, w)| (ExactScalar::ratio(a, GRID), ExactScalar::ratio((a + w).min(GRID), GRID))),
    )
}

fn arb_piece() -> impl Strategy<Value = Piece> {
    prop::collection::vec((0..GRID, 1..12i64), 0..4).prop_map(|c| piece(&c))
}

fn arb_valuation() -> impl Strategy<Value = Valuation> {
    (prop::collection::btree_set(1..GRID, 0..5), prop::collection::vec(1..9i64, 6)).prop_map(|(cuts, w)| {
        let mut bps = vec![ExactScalar::zero()];
        bps.extend(cuts.iter().map(|&c| ExactScalar::ratio(c, GRID)));
        bps.push(ExactScalar::one());
        Valuation::from_weights(bps.clone(), &w[..bps.len() - 1]).unwrap()
    })
}

/// Disjoint pieces cut from consecutive runs of grid cells.
fn arb_disjoint(max: usize) -> impl Strategy<Value = Vec<Piece>> {
    prop::collection::vec(1..8i64, 2..=max).prop_map(|widths| {
        let mut at = 0;
        widths
            .into_iter()
            .map(|w| {
                let p = piece(&[(at, w)]);
                at = (at + w).min(GRID);
                p
            })
            .filter(|p| !p.is_empty())
            .collect()
    })
}

fn instance(v: Valuation) -> Instance {
    Instance::new(vec![v, Valuation::uniform()], SocialGraph::line(2)).unwrap()
}

proptest! {
    #[test]
    fn union_and_subtract_partition(a in arb_piece(), b in arb_piece()) {
        let inter = a.intersect(&b);
        let only_a = a.subtract(&b);
        prop_assert!(only_a.is_disjoint_from(&b));
        prop_assert_eq!(only_a.union(&inter), a.clone());
        prop_assert_eq!(a.length() + b.length(), a.union(&b).length() + inter.length());
        prop_assert!(inter.is_subset_of(&a) && inter.is_subset_of(&b));
    }

    #[test]
    fn values_are_additive(v in arb_valuation(), a in arb_piece(), b in arb_piece()) {
        let both = v.value_of(&a.union(&b)) + v.value_of(&a.intersect(&b));
        prop_assert_eq!(both, v.value_of(&a) + v.value_of(&b));
        prop_assert_eq!(v.value_of(&Piece::whole()), ExactScalar::one());
    }

    #[test]
    fn eq_div_splits_evenly(v in arb_valuation(), r in arb_piece(), n in 1usize..6) {
        prop_assume!(!r.is_empty());
        let inst = instance(v.clone());
        let mut o = Oracle::new(&inst);
        let parts = eq_div(&mut o, 0, &r, n).unwrap();
        prop_assert_eq!(parts.len(), n);
        prop_assert_eq!(Piece::union_all(&parts), r.clone());
        let share = v.value_of(&r) / ExactScalar::from_usize(n);
        for (i, p) in parts.iter().enumerate() {
            prop_assert_eq!(v.value_of(p), share.clone());
            for q in &parts[i + 1..] {
                prop_assert!(p.is_disjoint_from(q));
            }
        }
    }

    #[test]
    fn trim_levels_down_to_the_minimum(v in arb_valuation(), xs in arb_disjoint(5)) {
        prop_assume!(xs.len() >= 2);
        let inst = instance(v.clone());
        let mut o = Oracle::new(&inst);
        let t = trim(&mut o, 0, &xs).unwrap();
        let low = xs.iter().map(|p| v.value_of(p)).min().unwrap();
        prop_assert_eq!(&t.pieces[t.min_index], &xs[t.min_index]);
        for (p, x) in t.pieces.iter().zip(&xs) {
            prop_assert_eq!(v.value_of(p), low.clone());
            prop_assert!(p.is_subset_of(x));
        }
        let kept = Piece::union_all(&t.pieces);
        prop_assert!(kept.is_disjoint_from(&t.residue));
        prop_assert_eq!(kept.union(&t.residue), Piece::union_all(&xs));
    }

    #[test]
    fn equal_conserves_cake(v in arb_valuation(), xs in arb_disjoint(5)) {
        prop_assume!(xs.len() >= 2);
        let inst = instance(v.clone());
        let mut o = Oracle::new(&inst);
        let e = equal(&mut o, 0, &xs).unwrap();
        let total: ExactScalar = xs.iter().map(|p| v.value_of(p)).sum();
        let avg = total / ExactScalar::from_usize(xs.len());
        prop_assert!(v.value_of(&xs[e.x_star]) >= avg);
        prop_assert!(e.pieces[e.x_star].is_subset_of(&xs[e.x_star]));
        for p in &e.pieces {
            prop_assert_eq!(v.value_of(p), avg.clone());
        }
        prop_assert_eq!(Piece::union_all(&e.pieces), Piece::union_all(&xs));
    }

    #[test]
    fn select_prefers_higher_values(v in arb_valuation(), xs in arb_disjoint(6), m in 1usize..4) {
        prop_assume!(m <= xs.len());
        let inst = instance(v.clone());
        let mut o = Oracle::new(&inst);
        let s = select(&mut o, 0, &xs, m).unwrap();
        prop_assert_eq!(s.chosen.len() + s.rest.len(), xs.len());
        let worst = s.chosen.iter().map(|&i| v.value_of(&xs[i])).min().unwrap();
        for &j in &s.rest {
            prop_assert!(v.value_of(&xs[j]) <= worst);
        }
    }
}
