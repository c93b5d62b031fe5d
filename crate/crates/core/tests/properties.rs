use proptest::prelude::*;

use causaleval::design::{build_design_matrix, Factor};
use causaleval::distributions::{normal_cdf, normal_quantile, student_cdf, student_quantile};
use causaleval::ols;
use causaleval::{parse, Column, Dataset, ModelFormula, Term};

fn var_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "x1", "x_2", "lr.rate", "Depth"]).prop_map(String::from)
}

fn term() -> impl Strategy<Value = Term> {
    prop::collection::vec(var_name(), 1..=3).prop_map(Term::from_vars)
}

fn formula() -> impl Strategy<Value = ModelFormula> {
    prop::collection::vec(term(), 1..=6).prop_map(|ts| ModelFormula::new("Y", ts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonical_string_round_trips(f in formula()) {
        let s = f.canonical_string();
        let g = parse(&s).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(g.canonical_string(), s);
    }
}

proptest! {
    #[test]
    fn whitespace_is_insignificant(f in formula()) {
        let spaced = f.canonical_string().replace(' ', "   ").replace(':', " : ");
        prop_assert_eq!(parse(&spaced).unwrap(), f);
    }

    #[test]
    fn star_is_main_effects_plus_interaction(a in var_name(), b in var_name()) {
        prop_assume!(a != b);
        let star = parse(&format!("Y ~ {a}*{b}")).unwrap();
        let long = parse(&format!("Y ~ {a} + {b} + {a}:{b}")).unwrap();
        prop_assert_eq!(star, long);
    }

    #[test]
    fn normal_cdf_is_monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(normal_cdf(lo) <= normal_cdf(hi));
    }

    #[test]
    fn student_cdf_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, df in 0.5f64..200.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(student_cdf(lo, df).unwrap() <= student_cdf(hi, df).unwrap());
    }

    #[test]
    fn quantiles_invert_cdfs(p in 1e-6f64..(1.0 - 1e-6), df in 1.0f64..100.0) {
        let z = normal_quantile(p).unwrap();
        prop_assert!((normal_cdf(z) - p).abs() <= 1e-12 * p.max(1e-3));
        let t = student_quantile(p, df).unwrap();
        prop_assert!((student_cdf(t, df).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn row_permutation_leaves_coefficients_unchanged(
        rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, 0usize..3), 12..40),
        perm_seed in any::<u64>(),
    ) {
        let levels = ["p", "q", "r"];
        let make = |idx: &[usize]| {
            Dataset::new(vec![
                Column::continuous("y", idx.iter().map(|&i| rows[i].0).collect()),
                Column::continuous("x", idx.iter().map(|&i| rows[i].1).collect()),
                Column::continuous("w", idx.iter().map(|&i| rows[i].2).collect()),
                Column::categorical("g", idx.iter().map(|&i| levels[rows[i].3]).collect()),
            ])
            .unwrap()
        };
        let identity: Vec<usize> = (0..rows.len()).collect();
        let mut shuffled = identity.clone();
        // Fisher-Yates driven by a 64-bit LCG
        let mut state = perm_seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let f = parse("y ~ x * w + g").unwrap();
        let (a, b) = match (
            build_design_matrix::<f64>(&f, &make(&identity)),
            build_design_matrix::<f64>(&f, &make(&shuffled)),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            // a level may be missing in a small sample; both orders agree on that
            (Err(e1), Err(e2)) => { prop_assert_eq!(e1, e2); return Ok(()); }
            _ => { prop_assert!(false, "orders disagree on design validity"); unreachable!() }
        };
        prop_assert_eq!(a.column_names(), b.column_names());
        match (ols::fit(&a), ols::fit(&b)) {
            (Ok(fa), Ok(fb)) => {
                let scale = fa.beta_hat.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (x, y) in fa.beta_hat.iter().zip(&fb.beta_hat) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
            }
            (Err(e1), Err(e2)) => prop_assert_eq!(e1.kind(), e2.kind()),
            _ => prop_assert!(false, "orders disagree on fit validity"),
        }
    }

    #[test]
    fn dummies_of_one_variable_are_mutually_exclusive(
        labels in prop::collection::vec(0usize..4, 8..60),
    ) {
        let names = ["w", "x", "y", "z"];
        prop_assume!(labels.iter().collect::<std::collections::BTreeSet<_>>().len() >= 2);
        let n = labels.len();
        let ds = Dataset::new(vec![
            Column::continuous("r", (0..n).map(|i| i as f64).collect()),
            Column::categorical("g", labels.iter().map(|&l| names[l]).collect()),
        ])
        .unwrap();
        let dm = build_design_matrix::<f64>(&parse("r ~ g").unwrap(), &ds).unwrap();
        let dummy_cols: Vec<usize> = dm
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.factors.as_slice(), [Factor::Dummy { .. }]))
            .map(|(j, _)| j)
            .collect();
        let reference = labels.iter().min().unwrap();
        for (i, label) in labels.iter().enumerate() {
            let active: f64 = dummy_cols.iter().map(|&j| dm.matrix()[(i, j)]).sum();
            let expected = if label == reference { 0.0 } else { 1.0 };
            prop_assert_eq!(active, expected);
        }
    }

    #[test]
    fn centering_is_idempotent(values in prop::collection::vec(-1e6f64..1e6, 2..100)) {
        let ds = Dataset::new(vec![Column::continuous("v", values)]).unwrap();
        let once = ds.center(&["v"]).unwrap();
        let twice = once.center(&["v"]).unwrap();
        let a = once.column("v").unwrap().as_continuous().unwrap();
        let b = twice.column("v").unwrap().as_continuous().unwrap();
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        prop_assert!(mean.abs() <= 1e-12 * scale);
    }
}
