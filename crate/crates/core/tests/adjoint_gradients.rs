use dmpopt::dmp::{objective_value, run_forward, ControlSchedule, Sense, TargetSpec};
use dmpopt::network::{erdos_renyi, AlphaSampler, SpreadingNetwork};
use dmpopt::optim::{backward_sweep, backward_sweep_targeting, backward_sweep_vaccination, AdjointTrajectory};
use dmpopt::InitialCondition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

struct Instance {
    net: SpreadingNetwork,
    ic: InitialCondition,
    controls: ControlSchedule,
    horizon: usize,
}

fn instance(seed: u64, use_nu: bool, use_mu: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=12);
    let horizon = rng.gen_range(1..=5);
    let net = erdos_renyi(n, 0.35, AlphaSampler::Uniform { low: 0.05, high: 0.9 }, seed).unwrap();
    let infected: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < 0.2).collect();
    let ic = InitialCondition::with_infected(n, &infected).unwrap();
    let mut controls = ControlSchedule::zeros(n, horizon);
    for t in 0..horizon {
        for i in 0..n {
            if use_nu {
                controls.set_nu(i, t, 0.05 + 0.4 * rng.gen::<f64>());
            }
            if use_mu {
                controls.set_mu(i, t, 0.05 + 0.4 * rng.gen::<f64>());
            }
        }
    }
    Instance { net, ic, controls, horizon }
}

fn score(inst: &Instance, c: &ControlSchedule, target: &TargetSpec) -> f64 {
    let tr = run_forward(&inst.net, &inst.ic, c, inst.horizon).unwrap();
    let v = objective_value(&tr, target).unwrap();
    match target.sense() {
        Sense::MaximizeInfected => v,
        Sense::MinimizeInfected => -v,
    }
}

fn check(inst: &Instance, target: &TargetSpec, adj: &AdjointTrajectory, which_mu: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..inst.horizon {
        for i in 0..inst.net.node_count() {
            let mut up = inst.controls.clone();
            let mut down = inst.controls.clone();
            let (g, base) = if which_mu {
                (adj.grad_mu(i, t), inst.controls.mu(i, t))
            } else {
                (adj.grad_nu(i, t), inst.controls.nu(i, t))
            };
            if which_mu {
                up.set_mu(i, t, base + H);
                down.set_mu(i, t, base - H);
            } else {
                up.set_nu(i, t, base + H);
                down.set_nu(i, t, base - H);
            }
            let fd = (score(inst, &up, target) - score(inst, &down, target)) / (2.0 * H);
            let scale = g.abs().max(fd.abs()).max(1e-4);
            let rel = (g - fd).abs() / scale;
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn targeting_gradients_match_finite_differences() {
    for seed in 0..25u64 {
        let inst = instance(seed, true, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let n = inst.net.node_count();
        let mut targets = Vec::new();
        for i in 0..n {
            if rng.gen::<f64>() < 0.5 {
                targets.push((i, rng.gen_range(1..=inst.horizon)));
            }
        }
        let targets = if targets.is_empty() { vec![(0, inst.horizon)] } else { targets };
        let target = TargetSpec::new(targets, Sense::MaximizeInfected).unwrap();
        let tr = run_forward(&inst.net, &inst.ic, &inst.controls, inst.horizon).unwrap();
        let adj = backward_sweep_targeting(&inst.net, &tr, &inst.controls, &target).unwrap();
        let worst = check(&inst, &target, &adj, false);
        assert!(worst < 1e-5, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn vaccination_gradients_match_finite_differences() {
    for seed in 0..25u64 {
        let inst = instance(seed + 500, false, true);
        let tr = run_forward(&inst.net, &inst.ic, &inst.controls, inst.horizon).unwrap();
        let adj = backward_sweep_vaccination(&inst.net, &tr, &inst.controls).unwrap();
        let target =
            TargetSpec::total_spread(inst.net.node_count(), inst.horizon, Sense::MinimizeInfected).unwrap();
        let worst = check(&inst, &target, &adj, true);
        assert!(worst < 1e-5, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn mixed_controls_gradients() {
    for seed in 0..10u64 {
        let inst = instance(seed + 900, true, true);
        let target = TargetSpec::total_spread(inst.net.node_count(), inst.horizon, Sense::MaximizeInfected).unwrap();
        let tr = run_forward(&inst.net, &inst.ic, &inst.controls, inst.horizon).unwrap();
        let adj = backward_sweep(&inst.net, &tr, &inst.controls, &target).unwrap();
        assert!(check(&inst, &target, &adj, false) < 1e-5);
        assert!(check(&inst, &target, &adj, true) < 1e-5);
    }
}

#[test]
fn terminal_conditions() {
    let inst = instance(3, true, false);
    let n = inst.net.node_count();
    let t_end = inst.horizon;
    let target = TargetSpec::new(vec![(0, t_end), (1, 1)], Sense::MaximizeInfected).unwrap();
    let tr = run_forward(&inst.net, &inst.ic, &inst.controls, t_end).unwrap();
    let adj = backward_sweep_targeting(&inst.net, &tr, &inst.controls, &target).unwrap();
    for i in 0..n {
        let expect = if i == 0 { 1.0 } else { 0.0 };
        let expect = if i == 1 && t_end == 1 { 1.0 } else { expect };
        assert_eq!(adj.lambda_s_node(i, t_end), expect);
    }
    for e in 0..inst.net.edge_count() {
        assert_eq!(adj.lambda_phi(e, t_end), 0.0);
        assert_eq!(adj.lambda_s_edge(e, t_end), 0.0);
    }

    let vacc = instance(4, false, true);
    let tr = run_forward(&vacc.net, &vacc.ic, &vacc.controls, vacc.horizon).unwrap();
    let adj = backward_sweep_vaccination(&vacc.net, &tr, &vacc.controls).unwrap();
    for i in 0..vacc.net.node_count() {
        assert_eq!(adj.lambda_r_node(i, vacc.horizon), -1.0);
    }
}

#[test]
fn vaccination_never_increases_spread_at_zero_budget() {
    for seed in 0..10u64 {
        let net = erdos_renyi(10, 0.4, AlphaSampler::Uniform { low: 0.1, high: 0.8 }, seed).unwrap();
        let ic = InitialCondition::with_infected(10, &[0]).unwrap();
        let c = ControlSchedule::zeros(10, 4);
        let tr = run_forward(&net, &ic, &c, 4).unwrap();
        let adj = backward_sweep_vaccination(&net, &tr, &c).unwrap();
        for t in 0..4 {
            for i in 0..10 {
                let g = adj.grad_mu(i, t);
                assert!(g.is_finite());
                // Score is minus the spread, so its gradient is nonnegative.
                assert!(g >= -1e-15, "seed {seed}: d spread / d mu = {}", -g);
            }
        }
    }
}

#[test]
fn unit_alpha_is_rejected() {
    let net = SpreadingNetwork::with_unlabeled(2, [(0, 1, 1.0)]).unwrap();
    let ic = InitialCondition::with_infected(2, &[0]).unwrap();
    let c = ControlSchedule::zeros(2, 1);
    let tr = run_forward(&net, &ic, &c, 1).unwrap();
    let target = TargetSpec::total_spread(2, 1, Sense::MaximizeInfected).unwrap();
    let err = backward_sweep_targeting(&net, &tr, &c, &target).unwrap_err();
    assert!(err.to_string().contains("1 - 1e-9"));
}
