use proptest::prelude::*;
use tumorsim::metrics::{confusion, dice, hausdorff, hd95, sensitivity, specificity};
use tumorsim::volume::BinaryMask;

fn pair() -> impl Strategy<Value = (BinaryMask, BinaryMask, [f64; 3])> {
    (1usize..=8, 1usize..=8, 1usize..=8)
        .prop_flat_map(|(x, y, z)| {
            let n = x * y * z;
            (
                Just([x, y, z]),
                prop::collection::vec(0u8..=1, n),
                prop::collection::vec(0u8..=1, n),
                prop::array::uniform3(0.5f64..2.0),
            )
        })
        .prop_map(|(d, a, b, s)| (BinaryMask::new(d, a).unwrap(), BinaryMask::new(d, b).unwrap(), s))
}

proptest! {
    #[test]
    fn fractions_in_range_and_dice_symmetric((a, b, _) in pair()) {
        let c = confusion(&a, &b).unwrap();
        prop_assert_eq!(c.total(), a.len());
        let d = dice(&c);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, dice(&confusion(&b, &a).unwrap()));
        for v in [sensitivity(&c), specificity(&c)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn hausdorff_laws((a, b, s) in pair()) {
        let h = hd95(&a, &b, s).unwrap();
        prop_assert_eq!(h, hd95(&b, &a, s).unwrap());
        let full = hausdorff(&a, &b, s, 100).unwrap();
        prop_assert_eq!(h.is_some(), full.is_some());
        if let (Some(h), Some(f)) = (h, full) {
            prop_assert!(f >= h && h >= 0.0);
        }
        prop_assert_eq!(hd95(&a, &a, s).unwrap().unwrap_or(0.0), 0.0);
    }

    #[test]
    fn axis_relabelling_invariance((a, b, s) in pair()) {
        // Swap x and z in both masks together with the spacing.
        let swap = |m: &BinaryMask| {
            let [x, y, z] = m.dims();
            BinaryMask::from_fn([z, y, x], |[i, j, k]| m.get(k, j, i)).unwrap()
        };
        let (sa, sb) = (swap(&a), swap(&b));
        let ss = [s[2], s[1], s[0]];
        prop_assert_eq!(confusion(&a, &b).unwrap(), confusion(&sa, &sb).unwrap());
        let h0 = hd95(&a, &b, s).unwrap();
        let h1 = hd95(&sa, &sb, ss).unwrap();
        match (h0, h1) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0)),
            (x, y) => prop_assert_eq!(x, y),
        }
    }
}
