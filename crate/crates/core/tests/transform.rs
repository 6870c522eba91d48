use hetgof::transform::{TransformFamily, TransformParam};
use proptest::prelude::*;

const YJ: TransformFamily = TransformFamily::YeoJohnson;
const BC: TransformFamily = TransformFamily::BoxCox;

fn theta() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0f64..4.0, Just(0.0), Just(2.0), Just(1.0)]
}

proptest! {
    #[test]
    fn yeo_johnson_is_increasing(t in theta(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let th = TransformParam(t);
        prop_assert!(YJ.forward(th, lo).unwrap() < YJ.forward(th, hi).unwrap());
    }

    #[test]
    fn box_cox_is_increasing(t in theta(), a in 0.01f64..10.0, b in 0.01f64..10.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let th = TransformParam(t);
        prop_assert!(BC.forward(th, lo).unwrap() < BC.forward(th, hi).unwrap());
    }

    #[test]
    fn inverse_undoes_forward(t in theta(), y in -10.0f64..10.0) {
        let th = TransformParam(t);
        let z = YJ.forward(th, y).unwrap();
        prop_assert!(YJ.range(th).contains(z));
        let back = YJ.inverse(th, z).unwrap();
        prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0), "{} -> {} -> {}", y, z, back);
        if y > 0.0 {
            let z = BC.forward(th, y).unwrap();
            let back = BC.inverse(th, z).unwrap();
            prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn derivative_matches_finite_differences(t in theta(), y in -10.0f64..10.0) {
        let th = TransformParam(t);
        let h = 1e-5 * y.abs().max(1.0);
        let fd = (YJ.forward(th, y + h).unwrap() - YJ.forward(th, y - h).unwrap()) / (2.0 * h);
        let d = YJ.d_dy(th, y).unwrap();
        prop_assert!((fd - d).abs() <= 1e-6 * d, "{} vs {}", fd, d);
    }
}

#[test]
fn ranges_bound_the_image_from_both_sides() {
    for t in [-1.5, -0.5, 2.5, 3.5] {
        let th = TransformParam(t);
        let r = YJ.range(th);
        let far_low = YJ.forward(th, -1e30).unwrap();
        let far_high = YJ.forward(th, 1e30).unwrap();
        assert!(r.lower <= far_low && far_high <= r.upper, "theta {t}: {r:?} {far_low} {far_high}");
        if t > 2.0 {
            assert!((far_low - r.lower).abs() < 1e-6);
        } else {
            assert!((far_high - r.upper).abs() < 1e-6);
        }
    }
}
