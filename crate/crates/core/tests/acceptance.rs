//! Acceptance suite. Each criterion prints one `criterion N: PASS|FAIL` line
//! (written past the test harness's capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;

use infmax_core::cascade::{
    certify_by_cut, indicator, project_capped_simplex, round_threshold, round_topk, solve_cascade, ArcProbs,
    CascadeProblem, Verdict,
};
use infmax_core::experiment::{summarize, Campaign, ExperimentRecord};
use infmax_core::generators::{
    check_thm2, check_thm6, gen_deterministic_noisy, gen_noiseless, gen_random_planted, nested_pair_instance,
    NoisySpec, PlantedInstance, RandomPlantedSpec,
};
use infmax_core::graph::{recovery_error, BipartiteGraph};
use infmax_core::lp::{build_lp, duals_thm1, duals_thm2, kkt_check, planted_primal, solve_lp, LpStatus};
use infmax_core::oracles::{
    binomial, brute_force_cascade, brute_force_deterministic, greedy_cascade, greedy_deterministic,
    monte_carlo_spread,
};
use infmax_core::seeding::{rng_from_seed, StreamRng};

const RECOVERED: f64 = 1e-8;

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn lp_recovers(inst: &PlantedInstance) -> bool {
    let sol = solve_lp(&build_lp(&inst.graph, inst.k).unwrap()).unwrap();
    sol.status == LpStatus::Optimal && recovery_error(&sol.x, &inst.influencers) < RECOVERED
}

fn random_sizes(rng: &mut StreamRng, k: usize, lo: usize, hi: usize) -> Vec<usize> {
    (0..k).map(|_| rng.gen_range(lo..=hi)).collect()
}

#[test]
fn criterion_1_noiseless_recovery() {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let (mut recovered, mut certified) = (0, 0);
    for t in 0..100 {
        let k = rng.gen_range(2..=8);
        let n = random_sizes(&mut rng, k, 3, 60);
        let r = random_sizes(&mut rng, k, 0, 6);
        let inst = gen_noiseless(k, &n, &r, 1000 + t).unwrap();
        recovered += lp_recovers(&inst) as usize;
        let d = duals_thm1(&inst).unwrap();
        let (x, tt) = planted_primal(&inst);
        certified += kkt_check(&build_lp(&inst.graph, k).unwrap(), &x, &tt, &d, 1e-9).pass as usize;
    }
    let elapsed = start.elapsed();
    let pass = recovered == 100 && certified == 100 && elapsed <= Duration::from_secs(60);
    report(1, pass, &format!("recovered {recovered}/100, certificates {certified}/100, {elapsed:.1?}"));
    assert!(pass);
}

fn random_noisy(rng: &mut StreamRng, seed: u64, violate: bool) -> PlantedInstance {
    let k = rng.gen_range(2..=5);
    let theta: Vec<f64> = (0..k).map(|_| rng.gen_range(0.4..0.8)).collect();
    let rho = theta.iter().copied().fold(f64::INFINITY, f64::min) / theta.iter().copied().fold(0.0, f64::max);
    let beta: Vec<f64> = (0..k)
        .map(|_| if violate { rng.gen_range(0.55 * rho..0.95) } else { rng.gen_range(0.05..0.8 * rho / 2.0) })
        .collect();
    gen_deterministic_noisy(&NoisySpec {
        n: random_sizes(rng, k, 20, 60),
        r: random_sizes(rng, k, 1, 4),
        g0_size: rng.gen_range(0..=20),
        theta,
        beta,
        z_cap: rng.gen_range(0..=3),
        seed,
    })
    .unwrap()
}

#[test]
fn criterion_2_noisy_recovery() {
    let mut rng = rng_from_seed(202);
    let (mut accepted, mut drawn, mut recovered, mut certified) = (0, 0, 0, 0);
    while accepted < 100 {
        drawn += 1;
        let inst = random_noisy(&mut rng, 2000 + drawn, false);
        if !check_thm2(&inst).pass {
            continue;
        }
        accepted += 1;
        recovered += lp_recovers(&inst) as usize;
        let ok = duals_thm2(&inst).is_ok_and(|d| {
            let (x, t) = planted_primal(&inst);
            kkt_check(&build_lp(&inst.graph, inst.k).unwrap(), &x, &t, &d, 1e-9).pass
        });
        certified += ok as usize;
    }
    // sharpness: instances breaking the subordinate-coverage condition
    let (mut broken, mut broken_recovered) = (0, 0);
    let mut seed = 5000;
    while broken < 50 {
        seed += 1;
        let inst = random_noisy(&mut rng, seed, true);
        let rep = check_thm2(&inst);
        if rep.cond3 || !rep.a1_prime {
            continue;
        }
        broken += 1;
        broken_recovered += lp_recovers(&inst) as usize;
    }
    let pass = recovered == 100 && certified == 100;
    report(
        2,
        pass,
        &format!(
            "recovered {recovered}/100, certificates {certified}/100 ({drawn} drawn); \
             condition (3) violated: recovered {broken_recovered}/50"
        ),
    );
    assert!(pass);
}

fn random_planted_run(k: usize, seed0: u64) -> (usize, usize) {
    let (mut passing, mut recovered) = (0, 0);
    for t in 0..50 {
        let inst = gen_random_planted(&RandomPlantedSpec {
            k,
            n: vec![80; k],
            r: vec![6; k],
            g0_size: 100,
            q: 0.5,
            s: 0.1,
            seed: seed0 + t,
        })
        .unwrap();
        if check_thm2(&inst).pass {
            passing += 1;
            recovered += lp_recovers(&inst) as usize;
        }
    }
    (passing, recovered)
}

#[test]
fn criterion_3_random_planted() {
    // q = 0.5, s = 0.1, |G_0| = 100 meet s ≤ 0.3e^{-0.4q}, r ≥ 6q and the
    // |G_0| bound. With k = 5 and r_l = 6, r_l ≤ r/10 − 1 cannot hold
    // (r = 35); k = 10 with the same groups meets it with equality.
    let (pass5, rec5) = random_planted_run(5, 3000);
    let (pass10, rec10) = random_planted_run(10, 4000);
    let pass = pass5 >= 45 && rec5 == pass5;
    report(
        3,
        pass,
        &format!(
            "k=5: conditions hold {pass5}/50, recovered {rec5}/{pass5}; \
             k=10: conditions hold {pass10}/50, recovered {rec10}/{pass10}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_counterexamples() {
    let ex1 = nested_pair_instance([100, 20], [99, 10]).unwrap();
    let p1 = CascadeProblem::uniform(&ex1.graph, 0.5, 2).unwrap();
    let b1 = brute_force_cascade(&p1).unwrap();
    let ok1 = b1.best_set == vec![0, 1];

    let ex2 = nested_pair_instance([100, 44], [80, 40]).unwrap();
    let p2 = CascadeProblem::uniform(&ex2.graph, 0.5, 2).unwrap();
    let b2 = brute_force_cascade(&p2).unwrap();
    let ok2 = b2.best_set == ex2.influencers && (b2.best_value - 72.0).abs() <= 1e-9;
    let s = solve_cascade(&p2);
    let g_star = p2.objective(ex2.x_star().as_slice());
    let ok3 = s.objective < g_star - 1e-6;

    let pass = ok1 && ok2 && ok3;
    report(
        4,
        pass,
        &format!(
            "example 1 best {:?} value {:.4}; example 2 best {:?} value {:.9}; relaxation g {:.6} vs g(x*) {:.6}",
            b1.best_set, b1.best_value, b2.best_set, b2.best_value, s.objective, g_star
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_cascade_end_to_end() {
    let mut rng = rng_from_seed(505);
    let (mut accepted, mut drawn) = (0, 0);
    let (mut rounded_ok, mut brute_checked, mut brute_ok, mut certified) = (0, 0, 0, 0);
    while accepted < 50 {
        drawn += 1;
        let k = rng.gen_range(2..=4);
        let n = random_sizes(&mut rng, k, 10, 40);
        let r = random_sizes(&mut rng, k, 1, 3);
        let inst = gen_noiseless(k, &n, &r, 6000 + drawn).unwrap();
        if !check_thm6(&inst, 0.9, 0.0).unwrap().pass {
            continue;
        }
        accepted += 1;
        let prob = CascadeProblem::uniform(&inst.graph, 0.9, k).unwrap();
        let sol = solve_cascade(&prob);
        let x_star = inst.x_star();
        rounded_ok += (round_threshold(&sol.x, 0.0).unwrap() == x_star.as_slice()) as usize;
        if binomial(inst.num_senders(), k) <= 100_000 {
            brute_checked += 1;
            let b = brute_force_cascade(&prob).unwrap();
            let star_value = prob.expected_spread(x_star.as_slice());
            brute_ok += (b.best_value - star_value <= 1e-9 * star_value.max(1.0)) as usize;
        }
        if certify_by_cut(&prob, &sol.x).is_ok_and(|c| c.verdict == Verdict::CertifiedOptimal) {
            certified += 1;
        }
    }
    let pass = rounded_ok == 50 && brute_ok == brute_checked && certified >= 48;
    report(
        5,
        pass,
        &format!(
            "rounding = x* {rounded_ok}/50, brute force confirms {brute_ok}/{brute_checked}, \
             certified {certified}/50 ({drawn} drawn)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_table1_desk_scale() {
    let start = Instant::now();
    let outcomes = Campaign::table1(vec![20, 40], vec![0.3, 0.7], vec![0.5, 1.0], 10, 0).run().unwrap();
    let records: Vec<ExperimentRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let cells = summarize(&records);
    let paper = |k: usize, p1: f64, sigma: f64| -> f64 {
        match (k, p1 == 0.3, sigma == 0.5) {
            (20, true, true) => 9338.0,
            (20, true, false) => 9367.0,
            (20, false, true) => 8674.0,
            (20, false, false) => 8467.0,
            (40, true, true) => 18636.0,
            (40, true, false) => 18494.0,
            (40, false, true) => 16704.0,
            (40, false, false) => 17657.0,
            _ => unreachable!(),
        }
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for c in &cells {
        let target = paper(c.k, c.p1, c.sigma);
        let rel = (c.e_orig - target) / target;
        pass &= c.n_rec == c.trials && rel.abs() <= 0.2;
        detail.push(format!("k={} p1={} σ={}: {}/{} E_orig {:.0} ({:+.1}%)", c.k, c.p1, c.sigma, c.n_rec, c.trials, c.e_orig, 100.0 * rel));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(30 * 60);
    report(6, pass, &format!("{}; {elapsed:.0?}", detail.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_7_table2_desk_scale() {
    let outcomes = Campaign::table2(vec![20], vec![0.3, 0.7], vec![0.0, 0.01], 10, 0).run().unwrap();
    let records: Vec<ExperimentRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let cells = summarize(&records);
    let mut pass = true;
    let mut detail = Vec::new();
    for c in &cells {
        let target: i64 = if c.p1 == 0.3 { 9 } else { 6 };
        pass &= (c.n_rec as i64 - target).abs() <= 2;
        detail.push(format!("p1={} σ={}: {}/{} (paper {target}/10), E_noise {:.0}", c.p1, c.sigma, c.n_rec, c.trials, c.e_noise));
    }
    report(7, pass, &detail.join("; "));
    assert!(pass);
}

fn random_graph(rng: &mut StreamRng, m: usize, n: usize, density: f64) -> BipartiteGraph {
    let mut arcs = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(density) {
                arcs.push((i, j));
            }
        }
    }
    BipartiteGraph::new(m, n, arcs).unwrap()
}

/// Every coordinate pattern {0, free, 1} gives one candidate; keep the
/// feasible one nearest to `y`.
fn projection_oracle(y: &[f64], k: usize) -> Vec<f64> {
    let m = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(m as u32) {
        let pattern: Vec<usize> = (0..m).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let ones = pattern.iter().filter(|&&d| d == 2).count() as f64;
        let free: Vec<usize> = (0..m).filter(|&i| pattern[i] == 1).collect();
        let tau = if free.is_empty() {
            if ones != k as f64 {
                continue;
            }
            0.0
        } else {
            (free.iter().map(|&i| y[i]).sum::<f64>() + ones - k as f64) / free.len() as f64
        };
        let x: Vec<f64> = (0..m).map(|i| [0.0, y[i] - tau, 1.0][pattern[i]]).collect();
        if x.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            continue;
        }
        let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.unwrap().1
}

#[test]
fn criterion_8_numerical_properties() {
    let mut rng = rng_from_seed(808);

    // gradient against central differences, relative to ‖∇g‖∞
    let mut worst_grad: f64 = 0.0;
    for t in 0..20 {
        let (m, n) = (rng.gen_range(3..15), rng.gen_range(5..60));
        let g = random_graph(&mut rng, m, n, 0.3);
        let probs = if t % 2 == 0 {
            ArcProbs::Uniform(rng.gen_range(0.05..0.95))
        } else {
            ArcProbs::PerArc((0..g.num_arcs()).map(|_| rng.gen_range(0.05..0.95)).collect())
        };
        let prob = CascadeProblem::new(&g, probs, 1).unwrap();
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
        let grad = prob.gradient(&x);
        let scale = grad.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let h = 1e-5;
        for i in 0..m {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (prob.objective(&up) - prob.objective(&down)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - grad[i]).abs() / scale);
        }
    }

    // projection against the clamp-pattern oracle
    let mut worst_proj: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=m);
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let got = project_capped_simplex(&y, k);
        let want = projection_oracle(&y, k);
        worst_proj = got.iter().zip(&want).fold(worst_proj, |a, (u, v)| a.max((u - v).abs()));
    }

    // convexity on 100 instances × 1000 triples
    let mut convex_violations = 0;
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(2..12), rng.gen_range(3..40));
        let g = random_graph(&mut rng, m, n, 0.3);
        let prob = CascadeProblem::uniform(&g, rng.gen_range(0.05..0.95), 1).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            let th: f64 = rng.gen();
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| th * a + (1.0 - th) * b).collect();
            if prob.objective(&mid) > th * prob.objective(&x) + (1.0 - th) * prob.objective(&y) + 1e-12 {
                convex_violations += 1;
            }
        }
    }

    // Monte Carlo against the closed form
    let mut mc_within = 0;
    for t in 0..20 {
        let (m, n) = (rng.gen_range(4..12), rng.gen_range(10..50));
        let g = random_graph(&mut rng, m, n, 0.25);
        let k = rng.gen_range(1..=m / 2);
        let prob = CascadeProblem::uniform(&g, rng.gen_range(0.1..0.9), k).unwrap();
        let set: Vec<usize> = sample(&mut rng, m, k).into_vec();
        let est = monte_carlo_spread(&prob, &set, 100_000, 9000 + t).unwrap();
        let exact = prob.expected_spread(&indicator(m, &set));
        mc_within += ((est.mean - exact).abs() <= 3.0 * est.std_error) as usize;
    }

    let pass = worst_grad <= 1e-6 && worst_proj <= 1e-9 && convex_violations == 0 && mc_within == 20;
    report(
        8,
        pass,
        &format!(
            "gradient rel err {worst_grad:.1e}, projection err {worst_proj:.1e}, \
             convexity violations {convex_violations}/100000, Monte Carlo within 3 SE {mc_within}/20"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_oracle_consistency() {
    let mut rng = rng_from_seed(909);
    let bound = 1.0 - (-1.0f64).exp();
    let (mut integral, mut integral_match, mut greedy_ok) = (0, 0, 0);
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(4..=12), rng.gen_range(4..=30));
        let density = rng.gen_range(0.1..0.5);
        let g = random_graph(&mut rng, m, n, density);
        let k = rng.gen_range(1..=4.min(m));
        let sol = solve_lp(&build_lp(&g, k).unwrap()).unwrap();
        let brute = brute_force_deterministic(&g, k).unwrap();
        if sol.x.iter().all(|&v| v.abs() <= 1e-9 || (v - 1.0).abs() <= 1e-9) {
            integral += 1;
            integral_match += ((sol.objective - brute.best_value).abs() <= 1e-9) as usize;
        }
        let gd = greedy_deterministic(&g, k).unwrap();
        let prob = CascadeProblem::uniform(&g, rng.gen_range(0.1..0.9), k).unwrap();
        let bc = brute_force_cascade(&prob).unwrap();
        let gc = greedy_cascade(&prob);
        let ok = gd.value >= bound * brute.best_value
            && gd.value <= brute.best_value
            && gc.value >= bound * bc.best_value - 1e-9
            && gc.value <= bc.best_value + 1e-9;
        greedy_ok += ok as usize;
    }
    let pass = integral_match == integral && greedy_ok == 100;
    report(
        9,
        pass,
        &format!("integral LP optima matching brute force {integral_match}/{integral}, greedy bound held {greedy_ok}/100"),
    );
    assert!(pass);
}

#[test]
fn topk_rounding_matches_threshold_on_clean_instances() {
    let inst = gen_noiseless(3, &[20, 25, 30], &[2, 2, 2], 4).unwrap();
    let prob = CascadeProblem::uniform(&inst.graph, 0.9, 3).unwrap();
    let x = solve_cascade(&prob).x;
    assert_eq!(round_topk(&x, 3).unwrap(), round_threshold(&x, 0.0).unwrap());
}
