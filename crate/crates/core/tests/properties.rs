#![allow(clippy::needless_range_loop)]

use hbf_core::channel::{generate_channel, write_channel, ClusterChannelParams};
use hbf_core::dynamic_hybrid::{
    alternate_stage2, digital_ls_update, km_analog_update, random_analog, select_chain_per_antenna,
    selection_objective, Stage2Options,
};
use hbf_core::fully_digital::svd_stage;
use hbf_core::linalg::svd;
use hbf_core::metrics::{evaluate, spectral_efficiency, InterferenceMode};
use hbf_core::nsp::{project_digital, EquivalentChannelStack};
use hbf_core::scalar::{abs, expj, fro, fro2};
use hbf_core::{CMatrix64, ChannelRealization64, SystemConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(n_tx: usize, n_rf: usize, n_users: usize, n_streams: usize) -> SystemConfig {
    SystemConfig { n_tx, n_rf, n_rx: 4, n_users, n_streams, ..SystemConfig::default() }
}

fn channel(cfg: &SystemConfig, params: ClusterChannelParams, seed: u64) -> ChannelRealization64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_channel(cfg, &vec![params; cfg.n_users], &mut rng).unwrap()
}

/// A system with `n_users * n_streams <= n_rf <= n_tx`.
fn system() -> impl Strategy<Value = (SystemConfig, u64)> {
    (1usize..=3, 1usize..=2, 0usize..=4, 1usize..=3, any::<u64>()).prop_map(|(k, s, extra_rf, tx_mult, seed)| {
        let n_rf = k * s + extra_rf;
        (config(n_rf * tx_mult, n_rf, k, s), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channel_rank_reconstruction_and_replay(
        n_clusters in 1usize..=3, n_rays in 1usize..=3, seed in any::<u64>(),
    ) {
        let cfg = config(16, 8, 2, 1);
        let params = ClusterChannelParams { n_clusters, n_rays, ..ClusterChannelParams::default() };
        let ch = channel(&cfg, params.clone(), seed);
        for h in ch.matrices() {
            let s = svd(h).unwrap();
            let rank = s.singular_values.iter().filter(|v| **v > 1e-10 * s.singular_values[0]).count();
            prop_assert!(rank <= cfg.n_rx.min(n_clusters * n_rays));
        }
        prop_assert!(ch.reconstruction_error() <= 1e-12);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_channel(&ch, &mut a).unwrap();
        write_channel(&channel(&cfg, params, seed), &mut b).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fully_digital_invariants((cfg, seed) in system()) {
        let ch = channel(&cfg, ClusterChannelParams::default(), seed);
        let fd = svd_stage(&ch, cfg.n_streams, 1.0, 0.1).unwrap();
        prop_assert!((fd.total_power() - 1.0).abs() <= 1e-9);
        for k in 0..cfg.n_users {
            let w = &fd.combiners[k];
            prop_assert!(fro(&(w.adjoint() * w - CMatrix64::identity(cfg.n_streams, cfg.n_streams))) <= 1e-10);
            for (i, p) in fd.stream_powers[k].iter().enumerate() {
                prop_assert!((fd.beamformers[k].column(i).norm_squared() - p).abs() <= 1e-10);
            }
            let eff = w.adjoint() * ch.matrix(k) * &fd.beamformers[k];
            for r in 0..cfg.n_streams {
                for c in 0..cfg.n_streams {
                    let want = if r == c { fd.singular_values[k][r] * fd.stream_powers[k][r].sqrt() } else { 0.0 };
                    prop_assert!((eff[(r, c)].re - want).abs() <= 1e-9 && eff[(r, c)].im.abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn analog_update_constraints_and_move_count((cfg, seed) in system()) {
        let ch = channel(&cfg, ClusterChannelParams::default(), seed);
        let fd = svd_stage(&ch, cfg.n_streams, 1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let analog = random_analog::<f64, _>(cfg.n_tx, cfg.n_rf, &mut rng).unwrap();
        let digitals = digital_ls_update(&analog, &fd.beamformers);
        let candidate = select_chain_per_antenna(&fd.beamformers, &digitals).unwrap();
        let (updated, report) = km_analog_update(&fd.beamformers, &digitals).unwrap();
        prop_assert!(updated.check(1e-12).is_ok());
        let moved = (0..cfg.n_tx).filter(|&i| candidate.chain_of_antenna()[i] != updated.chain_of_antenna()[i]).count();
        prop_assert_eq!(moved, report.moved);
        if report.resolves == 0 {
            prop_assert_eq!(moved, report.n_rf0);
        } else {
            prop_assert!(moved <= report.n_rf0 + report.resolves);
        }
        // Any other phase on an antenna's chain is no better.
        for i in 0..cfg.n_tx {
            let l = updated.chain_of_antenna()[i];
            let here = selection_objective(i, l, updated.phase(i), &digitals, &fd.beamformers);
            for j in 0..16 {
                let other = selection_objective(i, l, expj(j as f64 * std::f64::consts::PI / 8.0), &digitals, &fd.beamformers);
                prop_assert!(other >= here - 1e-12);
            }
        }
    }

    #[test]
    fn stage2_then_projection((cfg, seed) in system()) {
        let ch = channel(&cfg, ClusterChannelParams::default(), seed);
        let fd = svd_stage(&ch, cfg.n_streams, 1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let stage2 = alternate_stage2(&fd.beamformers, &fd.user_powers, cfg.n_rf, Stage2Options::default(), &mut rng).unwrap();
        prop_assert!(stage2.analog.check(1e-12).is_ok());
        for k in 0..cfg.n_users {
            let p = fd.user_powers[k];
            prop_assert!((stage2.user_power(k) - p).abs() <= 1e-9 * p.max(1e-300));
        }

        let stack = EquivalentChannelStack::new(&ch, &fd.combiners, stage2.analog.matrix());
        for k in 0..cfg.n_users {
            let want: Vec<&CMatrix64> = (0..cfg.n_users).filter(|&i| i != k).map(|i| &stack.per_user_equivalent[i]).collect();
            let mut at = 0;
            for m in want {
                prop_assert_eq!(&stack.stacked_excluding[k].rows(at, m.nrows()).into_owned(), m);
                at += m.nrows();
            }
        }

        let projected = project_digital(&stage2, &ch, &fd.combiners, &fd.user_powers).unwrap();
        prop_assert_eq!(projected.analog.matrix(), stage2.analog.matrix());
        let f = projected.overall_beamformers();
        for k in 0..cfg.n_users {
            let p = fd.user_powers[k];
            prop_assert!((fro2(&f[k]) - p).abs() <= 1e-9 * p.max(1e-300));
            for i in (0..cfg.n_users).filter(|&i| i != k) {
                let heq = &stack.per_user_equivalent[i];
                let residual = fro(&(heq * &projected.digital[k]));
                prop_assert!(residual <= 1e-9 * fro(heq) * fro(&projected.digital[k]));
            }
        }
        let report = evaluate(&ch, &fd.combiners, &f, 0.1, InterferenceMode::Included).unwrap();
        for k in 0..cfg.n_users {
            prop_assert!(report.iui_power[k] <= 1e-16 * report.desired_power[k]);
        }
        let bound = evaluate(&ch, &fd.combiners, &fd.beamformers, 0.1, InterferenceMode::Excluded).unwrap();
        // Equality holds when the hybrid design reproduces the digital one exactly.
        prop_assert!(report.mean_se <= bound.mean_se * (1.0 + 1e-12), "{} > {}", report.mean_se, bound.mean_se);
        prop_assert_eq!(report.mean_se, report.sum_se / cfg.n_users as f64);
    }

    #[test]
    fn rate_monotone_in_desired_power((cfg, seed) in system(), scale in 1.0f64..4.0) {
        let ch = channel(&cfg, ClusterChannelParams::default(), seed);
        let fd = svd_stage(&ch, cfg.n_streams, 1.0, 0.1).unwrap();
        let mut f = fd.beamformers.clone();
        let before = spectral_efficiency(0, &fd.combiners, &ch, &f, 0.1).unwrap();
        f[0] = f[0].map(|z| z * scale);
        prop_assert!(spectral_efficiency(0, &fd.combiners, &ch, &f, 0.1).unwrap() >= before);
    }
}

#[test]
fn single_user_projection_only_renormalizes() {
    let cfg = config(16, 4, 1, 2);
    let ch = channel(&cfg, ClusterChannelParams::default(), 5);
    let fd = svd_stage(&ch, 2, 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stage2 = alternate_stage2(&fd.beamformers, &fd.user_powers, 4, Stage2Options::default(), &mut rng).unwrap();
    let projected = project_digital(&stage2, &ch, &fd.combiners, &fd.user_powers).unwrap();
    let diff = &projected.digital[0] - &stage2.digital[0];
    assert!(fro(&diff) <= 1e-12 * fro(&stage2.digital[0]));
}

#[test]
fn projection_without_room_names_the_user() {
    // Three users with two streams each leave a four-chain design no null space.
    let cfg = SystemConfig { n_tx: 8, n_rf: 6, n_rx: 4, n_users: 3, n_streams: 2, ..SystemConfig::default() };
    let ch = channel(&cfg, ClusterChannelParams::default(), 6);
    let fd = svd_stage(&ch, 2, 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut stage2 = alternate_stage2(&fd.beamformers, &fd.user_powers, 6, Stage2Options::default(), &mut rng).unwrap();
    // Drop two chains by rebuilding the analog part with four of them.
    let chains: Vec<usize> = stage2.analog.chain_of_antenna().iter().map(|&l| l % 4).collect();
    stage2.analog = hbf_core::dynamic_hybrid::AnalogBeamformer::from_parts(4, chains, &stage2.analog.phases());
    stage2.digital = stage2.digital.iter().map(|d| d.rows(0, 4).into_owned()).collect();
    match project_digital(&stage2, &ch, &fd.combiners, &fd.user_powers) {
        Err(hbf_core::Error::InterferenceUncancellable { user }) => assert_eq!(user, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_power_user_gets_zero_beamformer() {
    let cfg = config(16, 4, 2, 1);
    let ch = channel(&cfg, ClusterChannelParams::default(), 7);
    let fd = svd_stage(&ch, 1, 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let powers = [fd.user_powers[0] + fd.user_powers[1], 0.0];
    let stage2 = alternate_stage2(&fd.beamformers, &powers, 4, Stage2Options::default(), &mut rng).unwrap();
    let projected = project_digital(&stage2, &ch, &fd.combiners, &powers).unwrap();
    assert!(projected.digital[1].iter().all(|z| abs(*z) == 0.0));
    assert!((projected.user_power(0) - powers[0]).abs() <= 1e-9);
}
