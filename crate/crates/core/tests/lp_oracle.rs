use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskprob_core::lp::{
    LpProblem, LpStatus, PivotRule, Relation, SolverOptions, enumerate_vertices_oracle, solve,
    solve_with,
};

/// Random bounded LP with at most 6 variables and 8 rows. Integer data makes
/// degenerate vertices common.
fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=8);
    let mut p = LpProblem::new();
    let mut interior = Vec::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = rng.random_range(-5..=0) as f64;
            let hi = lo + rng.random_range(1..=10) as f64;
            interior.push(rng.random_range(lo..=hi));
            let cost = rng.random_range(-5..=5) as f64;
            p.add_var(format!("x{j}"), lo, hi, cost).unwrap()
        })
        .collect();
    for i in 0..m {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.7) {
                let a = rng.random_range(-3..=3) as f64;
                if a != 0.0 {
                    terms.push((v, a));
                }
            }
        }
        let activity: f64 = terms.iter().map(|&(v, a)| a * interior[v.index()]).sum();
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = if rng.random_bool(0.85) {
            match relation {
                Relation::Eq => activity,
                Relation::Le => (activity + rng.random_range(0..=3) as f64).round(),
                Relation::Ge => (activity - rng.random_range(0..=3) as f64).round(),
            }
        } else {
            rng.random_range(-10..=10) as f64
        };
        p.add_constraint(format!("r{i}"), terms, relation, rhs).unwrap();
    }
    p
}

fn check_against_oracle(p: &LpProblem) -> Result<bool, String> {
    let fast = solve(p).map_err(|e| e.to_string())?;
    let slow = enumerate_vertices_oracle(p).map_err(|e| e.to_string())?;
    if fast.status != slow.status {
        return Err(format!("status {:?} vs oracle {:?}", fast.status, slow.status));
    }
    if fast.status == LpStatus::Optimal {
        if (fast.objective - slow.objective).abs() > 1e-9 {
            return Err(format!("objective {} vs oracle {}", fast.objective, slow.objective));
        }
        if p.max_violation(&fast.values) > 1e-7 {
            return Err("solver point infeasible".into());
        }
        return Ok(true);
    }
    Ok(false)
}

#[test]
fn hundred_seeded_random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_170_601);
    let mut feasible = 0;
    for k in 0..100 {
        let p = random_lp(&mut rng);
        match check_against_oracle(&p) {
            Ok(true) => feasible += 1,
            Ok(false) => {}
            Err(e) => panic!("instance {k}: {e}\n{p:?}"),
        }
    }
    assert!(feasible >= 50, "only {feasible} feasible instances");
}

#[test]
fn bland_and_hybrid_rules_reach_the_same_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let p = random_lp(&mut rng);
        let a = solve_with(
            &p,
            &SolverOptions {
                rule: PivotRule::Bland,
                ..Default::default()
            },
        )
        .unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a.status, b.status);
        if a.is_optimal() {
            assert!((a.objective - b.objective).abs() < 1e-9);
        }
    }
}

#[test]
fn solve_is_a_pure_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = random_lp(&mut rng);
        let a = solve(&p).unwrap();
        let b = solve(&p.clone()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.iterations, b.iterations);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.values), bits(&b.values));
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}

#[test]
fn degenerate_problem_with_many_optima() {
    // min x + y s.t. x + y >= 1 in the unit box: every point on the segment
    // is optimal.
    let mut p = LpProblem::new();
    let x = p.add_var("x", 0.0, 1.0, 1.0).unwrap();
    let y = p.add_var("y", 0.0, 1.0, 1.0).unwrap();
    p.add_constraint("c", [(x, 1.0), (y, 1.0)], Relation::Ge, 1.0)
        .unwrap();
    p.add_constraint("d", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0)
        .unwrap();
    let a = solve(&p).unwrap();
    let b = enumerate_vertices_oracle(&p).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-9);
    assert!((a.objective - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_lps_agree_with_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_lp(&mut rng);
        prop_assert!(check_against_oracle(&p).is_ok(), "{:?}", check_against_oracle(&p));
    }

    /// Any feasible point a test can name bounds the optimum from above.
    #[test]
    fn optimum_is_below_hand_made_feasible_points(seed in any::<u64>(), weights in prop::collection::vec(0.0f64..1.0, 6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_lp(&mut rng);
        let s = solve(&p).unwrap();
        // Candidate point: box corner/midpoint blend.
        let point: Vec<f64> = p.variables().iter().zip(&weights)
            .map(|(v, w)| v.lower + w * (v.upper - v.lower))
            .collect();
        if p.max_violation(&point) == 0.0 {
            prop_assert!(s.is_optimal());
            prop_assert!(s.objective <= p.objective_value(&point) + 1e-7);
        }
    }
}
