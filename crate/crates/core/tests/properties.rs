//! Property tests over randomly generated chains and trajectories.

use catmouse::chain::{Kernel, LineWalk, MmInf, ReflectedWalk};
use catmouse::experiment::{configure, parse_config_text, ExperimentConfig};
use catmouse::kernel::{cm_step, CatMouseState};
use catmouse::lattice::line::simulate_line_pair;
use catmouse::mminf::CtTrajectory;
use catmouse::reflected::FreeJumpLaw;
use catmouse::stationary::{nu2_direct, nu_exact, random_chain, random_reversible_chain, tetali_bound_check, verify_invariance};
use catmouse::stats::SeededStream;
use proptest::prelude::*;
use rand::RngCore;

fn chain_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 3usize..=8, 0.3f64..=1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn finite_chain_identities((seed, n, density) in chain_strategy()) {
        let c = random_chain(n, density, &mut SeededStream::new(seed, 0));
        let (rows, diag) = c.kernel_defects();
        prop_assert!(rows < 1e-12 && diag == 0.0);

        let pi = c.stationary().unwrap();
        prop_assert!((pi.mass() - 1.0).abs() < 1e-12);
        for y in 0..n {
            let flow: f64 = (0..n).map(|x| pi.weights()[x] * c.p(x, y)).sum();
            prop_assert!((flow - pi.weights()[y]).abs() < 1e-12);
        }
        let back = c.reversed(&pi).unwrap().reversed(&pi).unwrap();
        for x in 0..n {
            for y in 0..n {
                prop_assert!((back.p(x, y) - c.p(x, y)).abs() < 1e-12);
            }
        }

        let t = nu_exact(&c).unwrap();
        prop_assert!(verify_invariance(&t, &c).max_residual < 1e-9);
        let (d, r) = t.invariant_defects();
        prop_assert!(d < 1e-10 && r < 1e-10, "diag {d} rows {r}");
        prop_assert!(t.h_spread() < 1e-9);
        let tet = tetali_bound_check(&c).unwrap();
        prop_assert!(t.alpha <= (n - 1) as f64 + 1e-9, "alpha {} n {n}", t.alpha);
        prop_assert!(tet.pass);
        let direct = nu2_direct(&c).unwrap();
        for (a, b) in direct.weights().iter().zip(&t.nu2) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        if tet.reversible {
            prop_assert!((t.alpha - (n - 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn reversible_chains_have_alpha_n_minus_one(seed in any::<u64>(), n in 3usize..=8) {
        let c = random_reversible_chain(n, &mut SeededStream::new(seed, 1));
        let t = nu_exact(&c).unwrap();
        prop_assert!(tetali_bound_check(&c).unwrap().reversible);
        prop_assert!((t.alpha - (n - 1) as f64).abs() < 1e-9);
        for (v, p) in t.nu2.iter().zip(&t.pi) {
            prop_assert!((v - (1.0 - p)).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mouse_moves_only_from_meetings((seed, n, density) in chain_strategy()) {
        let c = random_chain(n, density, &mut SeededStream::new(seed, 2));
        let mut rng = SeededStream::new(seed, 3);
        let mut s = CatMouseState::new(0usize, n - 1);
        for _ in 0..2000 {
            let next = cm_step(s, &c, &mut rng);
            if next.mouse != s.mouse {
                prop_assert!(s.together());
                prop_assert!(c.p(s.mouse, next.mouse) > 0.0);
            }
            s = next;
        }
    }

    #[test]
    fn free_mouse_stays_below_cat_maximum(seed in any::<u64>(), p in 0.05f64..0.45) {
        let law = FreeJumpLaw::new(ReflectedWalk::new(p).unwrap());
        let mut rng = SeededStream::new(seed, 4);
        for _ in 0..200 {
            prop_assert!(law.sample_stepping(&mut rng).1);
        }
    }

    #[test]
    fn together_time_rises_only_on_meetings(seed in any::<u64>(), rho in 0.2f64..4.0, jumps in 10usize..2000) {
        let q = MmInf::new(rho).unwrap();
        let tr = CtTrajectory::simulate(&q, (0, 0), jumps, &mut SeededStream::new(seed, 5));
        prop_assert!(tr.u_is_consistent());
        let mut last = 0.0;
        for seg in &tr.segments {
            let u = tr.together_time(seg.start + seg.hold);
            prop_assert!(u >= last);
            let rise = u - tr.together_time(seg.start);
            if seg.together() {
                prop_assert!((rise - seg.hold).abs() <= 1e-9 * (1.0 + u));
            } else {
                prop_assert!(rise.abs() <= 1e-9 * (1.0 + u));
            }
            last = u;
        }
    }

    #[test]
    fn line_pair_step_count_bracket(seed in any::<u64>(), mut hs in prop::collection::vec(0u64..200_000, 1..6)) {
        hs.sort();
        let run = simulate_line_pair(&hs, &mut SeededStream::new(seed, 6));
        prop_assert!(run.kappa_bracket_ok);
        prop_assert_eq!(run.mouse.len(), hs.len());
        for (m, k) in run.mouse.iter().zip(&run.kappa) {
            prop_assert!(m.unsigned_abs() <= *k && (m.unsigned_abs() + k) % 2 == 0);
        }
    }

    #[test]
    fn streams_are_addressable(seed in any::<u64>(), id in any::<u64>()) {
        let (mut a, mut b) = (SeededStream::new(seed, id), SeededStream::new(seed, id));
        let mut c = SeededStream::new(seed, id.wrapping_add(1));
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..16).map(|_| c.next_u64()).collect();
        prop_assert_eq!(&xs, &ys);
        prop_assert_ne!(&xs, &zs);
    }

    #[test]
    fn config_header_reproduces_config(seed in any::<u64>(), n in 200u64..100_000, reps in 100u64..50_000, rho in 0.1f64..5.0) {
        let flags = vec![
            ("seed".to_string(), seed.to_string()),
            ("n".to_string(), n.to_string()),
            ("replicas".to_string(), reps.to_string()),
            ("rho".to_string(), rho.to_string()),
        ];
        let cfg = configure("mminf-F", &[], &flags).unwrap();
        let text: String = cfg.header().iter().map(|l| format!("{l}\n")).collect();
        let file = parse_config_text(&text).unwrap();
        let again = configure("mminf-F", &file, &[]).unwrap();
        prop_assert_eq!(&again, &cfg);
        let reparsed: ExperimentConfig = again;
        prop_assert_eq!(reparsed.header(), cfg.header());
    }
}

#[test]
fn line_walk_steps_are_unit() {
    let mut rng = SeededStream::new(9, 9);
    let mut x = 0i64;
    for _ in 0..10_000 {
        let y = LineWalk.step(x, &mut rng);
        assert_eq!((y - x).abs(), 1);
        x = y;
    }
}
