use super::*;
use crate::oracle::{exact_joint_integral, exact_pair_integral};
use crate::schedule::{optimistic_radii, ChannelConfig, MessageSet};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn sched(v: &[u32]) -> TransmissionSchedule {
    TransmissionSchedule::new(v.to_vec()).unwrap()
}

fn radii(v: &[f64]) -> DecodingRadii {
    DecodingRadii::new(v.to_vec()).unwrap()
}

fn packing(snr_db: f64, k: u32, inc: &[u32]) -> (TransmissionSchedule, DecodingRadii) {
    let s = sched(inc);
    let r = optimistic_radii(&ChannelConfig::from_snr_db(snr_db).unwrap(), MessageSet::new(k).unwrap(), &s);
    (s, r)
}

/// Single-event Chernoff bound `inf_u e^{-u r^2} (1-2u)^{-N/2}`.
fn single_chernoff(n: u32, r_sq: f64) -> f64 {
    let c = r_sq / n as f64;
    (-0.5 * n as f64 * (c - 1.0 - c.ln())).exp()
}

#[test]
fn u_star_examples() {
    assert_eq!(suboptimal_u_star(64, 64.0), 0.0);
    assert_eq!(suboptimal_u_star(64, 128.0), 0.25);
    assert_eq!(suboptimal_u_star(64, 10.0), 0.0);
    assert!(suboptimal_u_star(64, 64.0001) > 0.0);
}

#[test]
fn closed_form_examples() {
    let v = closed_form_pair_upper(2, 2, 0.0, 8.0);
    assert_relative_eq!(v, (-2.0 * (1.0 - 2f64.ln())).exp(), max_relative = 1e-14);
    assert!((v - 0.54134).abs() < 5e-6);
    assert!(v >= 5.0 * (-4.0f64).exp());
    // Above capacity the closed form falls back to u = 0.
    assert_eq!(closed_form_pair_upper(10, 10, 5.0, 15.0), chi2_tail(10, 5.0).value());
}

#[test]
fn pair_upper_degenerations() {
    let (n, i, rp, rn) = (32, 16, 41.358, 86.2);
    assert_relative_eq!(
        chernoff_pair_upper_at(n, i, rp, rn, 0.0),
        chi2_tail(n, rp).value(),
        max_relative = 1e-14
    );
    assert!(chernoff_pair_upper(n, i, rp, rn) <= chi2_tail(n, rp).value());
    // Sure first event: the single-event Chernoff bound on N_total dof.
    let v = chernoff_pair_upper(n, i, 0.0, rn);
    assert_relative_eq!(v, single_chernoff(n + i, rn), max_relative = 1e-9);
    assert_eq!(chernoff_pair_upper(n, i, rp, f64::INFINITY), 0.0);
}

#[test]
fn pair_sandwich_against_quadrature() {
    let (n, i, rp, rn) = (32, 16, 41.358, 86.2);
    let exact = exact_pair_integral(n, i, rp, rn).unwrap();
    let up = chernoff_pair_upper(n, i, rp, rn);
    let lo = chernoff_pair_lower(n, i, rp, rn);
    assert!(lo <= exact && exact <= up, "{lo} {exact} {up}");
    assert!(closed_form_pair_upper(n, i, rp, rn) >= up);
}

#[test]
fn pair_lower_degenerations() {
    assert_eq!(chernoff_pair_lower(8, 8, 5.0, f64::INFINITY), 0.0);
    let v = chernoff_pair_lower(8, 8, 0.0, 20.0);
    assert_eq!(v, chi2_tail(16, 20.0).value());
}

#[test]
fn inglot_contains_exact_at_two_db() {
    let (s, r) = packing(2.0, 16, &[32, 16]);
    let (r1, r2) = (r.r_squared()[0], r.r_squared()[1]);
    let exact = exact_pair_integral(32, 16, r1, r2).unwrap();
    let b = inglot_pair_bounds(32, 16, r1, r2).unwrap();
    assert!(b.lower <= exact && exact <= b.upper, "{b:?} vs {exact}");
    assert_eq!(b.method_upper, Method::InglotPair);
    assert_eq!(s.m(), 2);
}

#[test]
fn inglot_lower_integral_matches_incomplete_beta() {
    // (sqrt(pi) K / 2) ∫_{r1^2}^{r2^2} (r2^2 - t)^{I2/2-1} t^{N1/2-1} dt
    // = (sqrt(pi) K / 2) r2^{N1+I2-2} B(N1/2, I2/2) [1 - I_{r1^2/r2^2}(N1/2, I2/2)].
    use statrs::function::beta::{beta_reg, ln_beta};
    for &(n1, i2, r1, r2) in &[(32u32, 16u32, 41.0, 78.0), (5, 4, 2.0, 12.0), (1, 3, 0.0, 7.0)] {
        let aux = InglotAuxiliaries::new(n1, i2, r1, r2).unwrap();
        let (a, b) = (0.5 * n1 as f64, 0.5 * i2 as f64);
        let want = (0.5 * PI.ln() + aux.ln_k - LN_2 + (a + b - 1.0) * r2.ln() + ln_beta(a, b)).exp()
            * (1.0 - beta_reg(a, b, r1 / r2));
        let got = aux.lower_integral().unwrap();
        assert!((got - want).abs() <= 1e-11 + 1e-9 * want, "{n1} {i2}: {got} vs {want}");
    }
}

#[test]
fn inglot_collapses_to_tail() {
    let p = chi2_tail(10, 20.0).value();
    let b = inglot_pair_bounds(10, 2, 20.0 - 1e-9, 20.0).unwrap();
    assert!((b.lower - p).abs() < 1e-10 && (b.upper - p).abs() < 1e-8, "{b:?} {p}");
}

#[test]
fn inglot_preconditions() {
    assert!(matches!(inglot_pair_bounds(10, 1, 5.0, 20.0), Err(Error::Precondition(_))));
    // delta_low = 14/20 >= delta_high = 5/20
    assert!(matches!(inglot_pair_bounds(10, 16, 15.0, 20.0), Err(Error::Precondition(_))));
    assert!(matches!(inglot_pair_bounds(10, 4, 25.0, 20.0), Err(Error::Precondition(_))));
}

#[test]
fn inglot_beats_chernoff_above_capacity() {
    // c2 = r2^2 / N2 < 1 on both instances.
    for &(n1, i2, r1, r2) in &[(32, 16, 20.0, 46.0), (40, 8, 30.0, 47.0)] {
        let exact = exact_pair_integral(n1, i2, r1, r2).unwrap();
        let b = inglot_pair_bounds(n1, i2, r1, r2).unwrap();
        let ch_up = chernoff_pair_upper(n1, i2, r1, r2);
        assert!(b.lower <= exact && exact <= b.upper, "{b:?} {exact}");
        assert!(b.upper < ch_up - 0.1, "{} {ch_up}", b.upper);
    }
}

#[test]
fn general_reduces_to_pair() {
    let s = sched(&[32, 16]);
    let r = radii(&[41.358, 86.2]);
    for &u in &[0.0, 0.1, 0.2574, 0.4] {
        let p = ChernoffParams::new(vec![u]).unwrap();
        let g = general_chernoff_upper(&s, &r, Some(&p)).unwrap();
        assert_relative_eq!(g, chernoff_pair_upper_at(32, 16, 41.358, 86.2, u), max_relative = 1e-12);
    }
    let g = general_chernoff_upper(&s, &r, None).unwrap();
    assert_relative_eq!(g, chernoff_pair_upper(32, 16, 41.358, 86.2), max_relative = 1e-9);
}

#[test]
fn general_with_trailing_zero_tilts_is_first_last_pair() {
    let s = sched(&[20, 6, 5, 9]);
    let r = radii(&[25.0, 33.0, 40.0, 52.0]);
    for &u in &[0.05, 0.2, 0.31] {
        let p = ChernoffParams::new(vec![u, 0.0, 0.0]).unwrap();
        let g = general_chernoff_upper(&s, &r, Some(&p)).unwrap();
        assert_relative_eq!(g, chernoff_pair_upper_at(20, 20, 25.0, 52.0, u), max_relative = 1e-12);
    }
}

#[test]
fn general_rejects_bad_params() {
    assert!(ChernoffParams::new(vec![0.5]).is_err());
    assert!(ChernoffParams::new(vec![-0.1]).is_err());
    let p = ChernoffParams::new(vec![0.1, 0.1]).unwrap();
    assert!(general_chernoff_upper(&sched(&[3, 3]), &radii(&[1.0, 2.0]), Some(&p)).is_err());
}

/// The recursion with `(1 - 2 h_{i-1})` in the last factor of `g_i` loses a
/// `(1 - 2 u_i)^{-I/2}` term and is not an upper bound.
#[test]
fn printed_exponent_variant_undercuts_the_truth() {
    let chain = Chain {
        n: vec![1, 11, 12],
        r2: vec![0.0, 10.0, 0.0],
    };
    let truth = chi2_tail(11, 10.0).value();
    let printed = |u: &[f64]| -> f64 {
        let m = chain.len();
        let (mut h_prev, mut ln_g) = (0.0f64, 0.0f64);
        for (i, &ui) in u.iter().enumerate() {
            let e = m - 1 - i;
            let h = h_prev + ui * (1.0 - 2.0 * h_prev);
            let exponent_base = if i == 0 { 1.0 - 2.0 * h } else { 1.0 - 2.0 * h_prev };
            ln_g += -ui * (1.0 - 2.0 * h_prev) * chain.r2[e] - 0.5 * chain.inc(e) as f64 * exponent_base.ln();
            h_prev = h;
        }
        let t = 1.0 - 2.0 * h_prev;
        (ln_g + ln_q(chain.inc(0), t * chain.r2[0]) - 0.5 * chain.inc(0) as f64 * t.ln()).exp()
    };
    let u = [0.0, 0.45];
    assert!(printed(&u) < 0.1 * truth, "{} vs {truth}", printed(&u));
    assert!(ln_general_at(&chain, &u, false).exp() >= truth);
    assert!(general_upper_chain(&chain) >= truth);
}

#[test]
fn general_sandwich_three_transmissions() {
    for &(snr, k, ref inc) in &[(2.0, 16, vec![21u32, 3, 3]), (0.0, 8, vec![10, 4, 6]), (4.0, 32, vec![30, 2, 9])] {
        let (s, r) = packing(snr, k, inc);
        let exact = exact_joint_integral(&s, &r).unwrap();
        let up = general_chernoff_upper(&s, &r, None).unwrap();
        let lo = general_chernoff_lower(&s, &r);
        let un = union_lower(&s, &r, None);
        let tr = trivial_upper(&s, &r);
        let dec = decomposition_upper(&s, &r, 3).unwrap();
        let slack = 1e-9;
        assert!(lo <= exact + slack && un <= exact + slack, "{lo} {un} {exact}");
        assert!(up >= exact - slack && tr >= exact - slack && dec >= exact - slack, "{up} {tr} {dec} {exact}");
        let d2 = decomposition_upper(&s, &r, 2).unwrap();
        let p2 = exact_pair_integral(s.cumulative()[0], inc[1], r.r_squared()[0], r.r_squared()[1]).unwrap();
        assert!(d2 >= p2 - slack, "{d2} {p2}");
    }
}

#[test]
fn general_lower_base_case_matches_w2_branch() {
    let (n, i, rp, rn) = (12, 6, 10.0, 20.0);
    let s = sched(&[n, i]);
    let r = radii(&[rp, rn]);
    let w2 = next_only_inf(n, i, rp, rn, &[suboptimal_u_star(n + i, rn)]);
    let want = (chi2_tail(n + i, rn).value() - w2).max(0.0);
    assert_relative_eq!(general_chernoff_lower(&s, &r), want, max_relative = 1e-6);
    assert_relative_eq!(union_lower(&s, &r, None), want, max_relative = 1e-6);
}

#[test]
fn sure_first_event_lower_is_suffix_lower() {
    let s = sched(&[10, 5, 5]);
    let r = radii(&[0.0, 14.0, 20.0]);
    let suffix = Chain {
        n: vec![15, 20],
        r2: vec![14.0, 20.0],
    };
    assert_eq!(general_chernoff_lower(&s, &r), best_lower_chain(&suffix).0);
}

#[test]
fn union_lower_with_sure_earlier_events_is_exact() {
    let s = sched(&[4, 4, 4]);
    let r = radii(&[0.0, 0.0, 15.0]);
    assert_eq!(union_lower(&s, &r, None), chi2_tail(12, 15.0).value());
    assert_eq!(union_lower(&s, &r, Some(0.3)), chi2_tail(12, 15.0).value());
}

#[test]
fn trivial_single_event() {
    assert_eq!(trivial_upper(&sched(&[7]), &radii(&[5.0])), chi2_tail(7, 5.0).value());
    let s = sched(&[7, 3]);
    let r = radii(&[5.0, 30.0]);
    assert_eq!(trivial_upper(&s, &r), chi2_tail(10, 30.0).value());
}

#[test]
fn decomposition_index_errors() {
    let s = sched(&[4, 4, 4]);
    let r = radii(&[1.0, 2.0, 3.0]);
    assert!(matches!(decomposition_upper(&s, &r, 1), Err(Error::Index { index: 1, len: 3 })));
    assert!(matches!(decomposition_upper(&s, &r, 4), Err(Error::Index { .. })));
}

#[test]
fn series_edge_cases() {
    let s = sched(&[3, 3, 3]);
    let b = joint_series_bounds(&s, &radii(&[0.0, 0.0, 0.0]), &BoundPolicy::all());
    assert!(b.intervals.iter().all(|i| i.lower == 1.0 && i.upper == 1.0));
    let b = joint_series_bounds(&sched(&[9]), &radii(&[7.0]), &BoundPolicy::all());
    assert_eq!(b.intervals.len(), 2);
    assert_eq!(b.intervals[0], BoundInterval::exact(1.0));
    assert_eq!(b.intervals[1].lower, chi2_tail(9, 7.0).value());
    assert_eq!(b.intervals[1].upper, chi2_tail(9, 7.0).value());
}

#[test]
fn series_contains_quadrature_and_is_monotone() {
    let (s, r) = packing(2.0, 16, &[21, 3, 3]);
    let b = joint_series_bounds(&s, &r, &BoundPolicy::all().with_k_bits(16));
    for i in 1..=3 {
        let prefix = sched(&s.increments()[..i]);
        let pr = radii(&r.r_squared()[..i]);
        let exact = exact_joint_integral(&prefix, &pr).unwrap();
        assert!(b.intervals[i].contains_with_slack(exact, 1e-9), "{i}: {:?} {exact}", b.intervals[i]);
    }
    for w in b.intervals.windows(2) {
        assert!(w[1].upper <= w[0].upper && w[1].lower <= w[0].lower);
    }
}

#[test]
fn fixed_parameter_dominance() {
    let (s, r) = packing(2.0, 32, &[41, 7, 7, 7, 7]);
    let r2 = r.r_squared();
    let n = s.cumulative();
    for i in 1..5 {
        let (np, inc, rp, rn) = (n[i - 1], n[i] - n[i - 1], r2[i - 1], r2[i]);
        assert!(chernoff_pair_upper(np, inc, rp, rn) <= closed_form_pair_upper(np, inc, rp, rn) * (1.0 + 1e-12));
    }
    let u = union_fixed_parameter(n[4], r2[4], 32);
    assert!(union_lower(&s, &r, None) >= union_lower(&s, &r, Some(u)));
}

#[test]
fn tie_break_prefers_cheaper_method() {
    let mut c = Candidates::default();
    c.offer(0.5, Method::Decomposition, true);
    c.offer(0.5, Method::TrivialSingle, true);
    c.offer(0.7, Method::Exact, true);
    assert_eq!(c.best, Some((0.5, Method::TrivialSingle)));
    c.offer(1.5, Method::InglotPair, true);
    assert_eq!(c.clamps, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_identity(u in proptest::collection::vec(0.0f64..0.4999, 1..12)) {
        let p = ChernoffParams::new(u.clone()).unwrap();
        for (h, t) in p.h().iter().zip(p.one_minus_2h()) {
            let lhs = 1.0 - 2.0 * h;
            prop_assert!((lhs - t).abs() <= 1e-12 * t.abs().max(1e-300) + 1e-15, "{lhs} {t}");
        }
    }

    #[test]
    fn pair_bounds_sandwich_quadrature(
        n in 1u32..48, i in 1u32..32, snr in 0.0f64..6.0, k in 4u32..64,
    ) {
        let (s, r) = packing(snr, k, &[n, i]);
        let (r1, r2) = (r.r_squared()[0], r.r_squared()[1]);
        let exact = exact_pair_integral(n, i, r1, r2).unwrap();
        let up = chernoff_pair_upper(n, i, r1, r2);
        let lo = chernoff_pair_lower(n, i, r1, r2);
        prop_assert!(lo <= exact + 1e-10 && exact <= up + 1e-10, "{lo} {exact} {up}");
        let series = joint_series_bounds(&s, &r, &BoundPolicy::all());
        prop_assert!(series.intervals[2].contains_with_slack(exact, 1e-10), "{:?} {exact}", series.intervals[2]);
        prop_assert!(up <= closed_form_pair_upper(n, i, r1, r2) * (1.0 + 1e-12));
    }

    #[test]
    fn bounds_are_probabilities(
        inc in proptest::collection::vec(1u32..40, 1..6), snr in 0.0f64..6.0, k in 1u32..64,
    ) {
        let (s, r) = packing(snr, k, &inc);
        let b = joint_series_bounds(&s, &r, &BoundPolicy::fast());
        prop_assert_eq!(b.intervals.len(), inc.len() + 1);
        for w in b.intervals.windows(2) {
            prop_assert!(w[1].upper <= w[0].upper && w[1].lower <= w[0].lower);
        }
        for iv in &b.intervals {
            prop_assert!(0.0 <= iv.lower && iv.lower <= iv.upper && iv.upper <= 1.0);
        }
    }
}
