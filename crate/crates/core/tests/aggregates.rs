use pedeval_core::metrics::{
    confidence_levels, default_refs, flamr, operating_point, ConfidenceLevels, CurvePoint, Rate, Subset,
};
use proptest::prelude::*;

const EPS: f64 = 1e-4;

fn levels(points: Vec<usize>) -> ConfidenceLevels {
    ConfidenceLevels {
        thresholds: vec![0.0; points.len()],
        points,
        unmet_refs: vec![],
    }
}

fn curve_of(mrs: &[f64]) -> Vec<CurvePoint> {
    mrs.iter()
        .enumerate()
        .map(|(k, &m)| CurvePoint::new(k as f64 / mrs.len() as f64, 0.0, 0.0).with_mr(Subset::Foreground, m))
        .collect()
}

/// `(Π max(m, ε))^(1/n)` through base-10 logs.
fn geometric_mean(ms: &[f64]) -> f64 {
    let s: f64 = ms.iter().map(|m| m.max(EPS).log10()).sum();
    10f64.powf(s / ms.len() as f64)
}

proptest! {
    #[test]
    fn flamr_is_the_clamped_geometric_mean(ms in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let curve = curve_of(&ms);
        let v = flamr(&curve, Subset::Foreground, &levels((0..ms.len()).collect()), EPS).unwrap();
        let o = geometric_mean(&ms);
        prop_assert!(((v - o) / o).abs() <= 1e-12, "{v} vs {o}");
        prop_assert!((EPS..=1.0).contains(&v));
    }

    #[test]
    fn flamr_ignores_level_order(ms in prop::collection::vec(0.0f64..=1.0, 1..12), seed in any::<u64>()) {
        let curve = curve_of(&ms);
        let mut idx: Vec<usize> = (0..ms.len()).collect();
        let a = flamr(&curve, Subset::Foreground, &levels(idx.clone()), EPS).unwrap();
        let mut s = seed;
        for k in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(k, (s >> 33) as usize % (k + 1));
        }
        let b = flamr(&curve, Subset::Foreground, &levels(idx), EPS).unwrap();
        prop_assert!(((a - b) / a).abs() <= 1e-12);
    }

    #[test]
    fn singleton_level_is_exact(m in 0.0f64..=1.0) {
        let curve = curve_of(&[m]);
        prop_assert_eq!(flamr(&curve, Subset::Foreground, &levels(vec![0]), EPS).unwrap(), m.max(EPS));
    }

    #[test]
    fn operating_point_attains_the_minimum(steps in prop::collection::vec(0u32..5, 1..20)) {
        // non-decreasing MR_F in c built from cumulative steps
        let mut acc = 0;
        let ms: Vec<f64> = steps.iter().map(|&s| { acc += s; f64::from(acc) / 100.0 }).collect();
        let curve = curve_of(&ms);
        let op = operating_point(&curve).unwrap();
        let min = ms.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(op.mr_at_star, min);
        let sup = curve.iter().filter(|p| p.mr[&Subset::Foreground] == min).map(|p| p.c).fold(f64::MIN, f64::max);
        prop_assert_eq!(op.c_star, sup);
        prop_assert_eq!(op.misses_at_c_min, ms[0] != 0.0);
    }

    #[test]
    fn levels_respect_each_reference(rates in prop::collection::vec(0.0f64..3.0, 1..30)) {
        // sort so the rate is non-increasing in c
        let mut rates = rates;
        rates.sort_by(|a, b| b.total_cmp(a));
        let curve: Vec<CurvePoint> = rates
            .iter()
            .enumerate()
            .map(|(k, &r)| CurvePoint::new(k as f64, r, r / 2.0))
            .collect();
        let refs = default_refs();
        let l = confidence_levels(&curve, Rate::Fppi, &refs);
        prop_assert!(!l.is_empty() && l.len() <= refs.len());
        for &f in &refs {
            let ok: Vec<&CurvePoint> = curve.iter().filter(|p| p.fppi <= f).collect();
            if let Some(best) = ok.iter().map(|p| p.fppi).reduce(f64::max) {
                let pick = ok.iter().find(|p| p.fppi == best).unwrap().c;
                prop_assert!(l.thresholds.contains(&pick));
            } else {
                prop_assert!(l.unmet_refs.contains(&f));
            }
        }
    }
}

#[test]
fn constant_miss_rate_is_returned_unchanged() {
    for m in [0.0, 0.013, 0.25, 1.0] {
        let curve = curve_of(&[m; 9]);
        assert_eq!(flamr(&curve, Subset::Foreground, &levels((0..9).collect()), EPS), Some(m.max(EPS)));
    }
}
