mod common;

use binlogit::altsets::{
    binomial, denominator_dp, difference_vectors, enumerate_alternatives, softmax_weights,
    DEFAULT_ENUMERATION_GUARD,
};
use binlogit::linalg::max_eigenvalue;
use binlogit::{conditional_loglik, conditional_score_and_hessian, IndividualSlice, PanelDataset};
use common::*;
use proptest::prelude::*;
use rand::Rng;

const G: u64 = DEFAULT_ENUMERATION_GUARD;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn denominator_matches_enumeration_on_long_slices() {
    let mut r = rng(1);
    for _ in 0..50 {
        let d = random_informative_panel(&mut r, 1, 10, 3);
        let s = &d.individuals()[0];
        let beta = random_beta(&mut r, 3, 1.0);
        let dp = denominator_dp(s, &beta).unwrap();
        let brute = brute_denominator(s, &beta);
        assert!(rel_err(dp.value(), brute) < 1e-12, "{} vs {brute}", dp.value());
    }
}

#[test]
fn denominator_at_zero_is_binomial() {
    let mut r = rng(2);
    for periods in 2..=12 {
        let d = random_informative_panel(&mut r, 1, periods, 2);
        let s = &d.individuals()[0];
        let dp = denominator_dp(s, &[0.0, 0.0]).unwrap();
        let c = binomial(periods, s.choice_total()).unwrap() as f64;
        assert!(rel_err(dp.value(), c) < 1e-14);
        assert_eq!(dp.value().round(), c);
    }
}

#[test]
fn log_denominator_gradient_matches_finite_differences() {
    let mut r = rng(3);
    for _ in 0..30 {
        let d = random_informative_panel(&mut r, 1, 6, 3);
        let s = &d.individuals()[0];
        let beta = random_beta(&mut r, 3, 1.0);
        let dp = denominator_dp(s, &beta).unwrap();
        let fd = central_gradient(|b| denominator_dp(s, b).unwrap().log_value, &beta, 1e-6);
        for (a, b) in dp.mean_attribute.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn softmax_weights_sum_to_one() {
    let mut r = rng(4);
    for _ in 0..50 {
        let t_ = r.random_range(2..8);
        let d = random_informative_panel(&mut r, 1, t_, 2);
        let s = &d.individuals()[0];
        let vs: Vec<Vec<f64>> = difference_vectors(0, s, G).unwrap().into_iter().map(|d| d.v).collect();
        let (w, _) = softmax_weights(&vs, &random_beta(&mut r, 2, 3.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn observed_sequence_gives_the_zero_difference() {
    let mut r = rng(5);
    for _ in 0..50 {
        let t_ = r.random_range(2..8);
        let d = random_informative_panel(&mut r, 1, t_, 2);
        let s = &d.individuals()[0];
        let alts = enumerate_alternatives(s.num_periods(), s.choice_total(), G).unwrap();
        let idx = alts.iter().position(|a| a == s.outcomes()).unwrap();
        let dv = difference_vectors(0, s, G).unwrap();
        assert_eq!(dv.len(), alts.len());
        assert!(dv[idx].v.iter().all(|&x| x == 0.0));
    }
}

proptest! {
    #[test]
    fn denominator_is_exchangeable_in_periods(seed in any::<u64>(), periods in 2usize..8) {
        let mut r = rng(seed);
        let d = random_informative_panel(&mut r, 1, periods, 2);
        let s = &d.individuals()[0];
        let mut order: Vec<usize> = (0..periods).collect();
        for i in (1..periods).rev() {
            order.swap(i, r.random_range(0..=i));
        }
        let beta = random_beta(&mut r, 2, 1.5);
        let a = denominator_dp(s, &beta).unwrap().log_value;
        let b = denominator_dp(&s.permuted(&order), &beta).unwrap().log_value;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn csv_row_order_is_irrelevant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_panel(&mut r, 5, 3, 2);
        let text = data.to_csv_string();
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        for i in (1..lines.len()).rev() {
            lines.swap(i, r.random_range(0..=i));
        }
        let shuffled = format!("{header}\n{}\n", lines.join("\n"));
        prop_assert_eq!(PanelDataset::from_csv_str(&shuffled).unwrap(), data);
    }

    #[test]
    fn informative_subset_is_idempotent_and_loglik_neutral(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_panel(&mut r, 6, 3, 2);
        if let Ok(sub) = data.informative_subset() {
            let again = sub.data.informative_subset().unwrap();
            prop_assert_eq!(&again.data, &sub.data);
            let beta = random_beta(&mut r, 2, 2.0);
            let full = conditional_loglik(&data, &beta).unwrap();
            let part = conditional_loglik(&sub.data, &beta).unwrap();
            prop_assert!((full - part).abs() < 1e-12);
        }
    }
}

#[test]
fn loglik_matches_enumeration() {
    let mut r = rng(6);
    for _ in 0..100 {
        let n = r.random_range(1..10);
        let periods = r.random_range(2..7);
        let dim = r.random_range(1..4);
        let data = random_panel(&mut r, n, periods, dim);
        let beta = random_beta(&mut r, dim, 1.0);
        let ll = conditional_loglik(&data, &beta).unwrap();
        let brute = brute_loglik(&data, &beta);
        assert!(rel_err(ll, brute) < 1e-12 || (ll - brute).abs() < 1e-13, "{ll} vs {brute}");
    }
}

#[test]
fn score_and_hessian_match_finite_differences() {
    let mut r = rng(7);
    for _ in 0..100 {
        let dim = r.random_range(1..4);
        let n_ = r.random_range(1..21);
        let t_ = r.random_range(2..6);
        let data = random_informative_panel(&mut r, n_, t_, dim);
        let beta = random_beta(&mut r, dim, 1.0);
        let (g, h) = conditional_score_and_hessian(&data, &beta, G).unwrap();
        let fd = central_gradient(|b| conditional_loglik(&data, b).unwrap(), &beta, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "score {a} vs {b}");
        }
        let jac = central_jacobian(|b| conditional_score_and_hessian(&data, b, G).unwrap().0, &beta, 1e-6);
        for (a, b) in h.iter().zip(jac.iter()) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "hessian {a} vs {b}");
        }
    }
}

#[test]
fn hessian_is_negative_semidefinite() {
    let mut r = rng(8);
    for _ in 0..100 {
        let dim = r.random_range(1..4);
        let n_ = r.random_range(1..15);
        let t_ = r.random_range(2..6);
        let data = random_informative_panel(&mut r, n_, t_, dim);
        let beta = random_beta(&mut r, dim, 3.0);
        let (_, h) = conditional_score_and_hessian(&data, &beta, G).unwrap();
        let scale = h.iter().map(|v| v.abs()).fold(1.0, f64::max);
        assert!(max_eigenvalue(&h) <= 1e-10 * scale);
        assert!((&h - h.transpose()).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn loglik_ignores_within_individual_shifts() {
    let mut r = rng(9);
    for _ in 0..50 {
        let data = random_panel(&mut r, 6, 4, 2);
        let shifted = data.map_individuals(|s| {
            let c = random_beta(&mut r, 2, 5.0);
            s.map_covariates(|x| x.iter().zip(&c).map(|(a, b)| a + b).collect())
        });
        let beta = random_beta(&mut r, 2, 1.0);
        let a = conditional_loglik(&data, &beta).unwrap();
        let b = conditional_loglik(&shifted, &beta).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn loglik_is_nonpositive() {
    let mut r = rng(10);
    for _ in 0..50 {
        let data = random_panel(&mut r, 5, 4, 2);
        assert!(conditional_loglik(&data, &random_beta(&mut r, 2, 4.0)).unwrap() <= 0.0);
    }
}

#[test]
fn degenerate_slice_constant_attributes() {
    let s = IndividualSlice::new(7, vec![vec![1.5]; 4], vec![0, 1, 1, 0]).unwrap();
    let data = PanelDataset::from_individuals(vec![s]).unwrap();
    for b in [-3.0, 0.0, 2.0] {
        let (g, h) = conditional_score_and_hessian(&data, &[b], G).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(h[(0, 0)], 0.0);
    }
}
