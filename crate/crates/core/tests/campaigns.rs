use cpmkit::campaign::{parse_dims, run_campaign, CampaignConfig, CampaignKind};
use cpmkit::isometry::{decompose, decompose_oracle, random_cp_isometry, recovery_residual, route_agreement};
use cpmkit::parallel::Execution;
use cpmkit::Tolerance;

#[test]
fn cross_route_agreement_on_100_instances() {
    let tol = Tolerance::default();
    let shapes = [(2, 2, 1), (2, 4, 2), (2, 6, 3), (3, 6, 2), (4, 8, 2)];
    let mut recovered = 0;
    for k in 0..100u64 {
        let (i, o, t) = shapes[k as usize % shapes.len()];
        let inst = random_cp_isometry(i, o, t, 1000 + k).unwrap();
        let a = decompose(&inst.map, tol).unwrap();
        let b = decompose_oracle(&inst.map, tol).unwrap();
        let agree = route_agreement(&a, &b).unwrap();
        assert!(agree.q_residual <= 1e-8, "seed {}: {:?}", 1000 + k, agree);
        assert!(agree.choi_residual <= 1e-9, "seed {}: {:?}", 1000 + k, agree);
        if inst.min_q_gap() > 1e-3 {
            let rec = recovery_residual(&a, &inst.q, &inst.v, 5e-4);
            assert!(
                rec.q_residual <= 1e-8 && rec.span_residual <= 1e-7,
                "seed {}: {:?}",
                1000 + k,
                rec
            );
            recovered += 1;
        }
    }
    assert!(recovered > 50, "only {recovered} well-separated instances");
}

#[test]
fn campaigns_are_deterministic_across_execution_modes() {
    let config = CampaignConfig {
        kind: CampaignKind::ComonoidCanonicity,
        trials: 12,
        dims: parse_dims("2;3;4").unwrap(),
        seed: 11,
        tol: Tolerance::default(),
    };
    let a = serde_json::to_string(&run_campaign(&config, Execution::Sequential).unwrap()).unwrap();
    let b = serde_json::to_string(&run_campaign(&config, Execution::Parallel).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn campaign_examples() {
    let run = |kind, dims: &str, trials| {
        let config = CampaignConfig {
            kind,
            trials,
            dims: parse_dims(dims).unwrap(),
            seed: 3,
            tol: Tolerance::default(),
        };
        run_campaign(&config, Execution::Parallel).unwrap()
    };
    let t1 = run(CampaignKind::IsometryDecomposition, "2,4,2", 200);
    assert!(t1.all_passed());
    assert!(t1.max["reconstruction"] <= 1e-8);

    let t2 = run(CampaignKind::ComonoidCanonicity, "2;3;4", 100);
    assert!(t2.all_passed());
    assert_eq!(t2.max["epsilon_choi_rank"], 1.0);
    assert_eq!(t2.min["epsilon_choi_rank"], 1.0);

    let pp = run(CampaignKind::PurityPrinciple, "2,3,4;3,2,5", 100);
    assert!(pp.all_passed());
    assert!(pp.max["p_sum_gap"] <= 1e-9);
}
