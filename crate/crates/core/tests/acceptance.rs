//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Criterion 10 (CLI contract) lives in the
//! `discerr` crate's own acceptance target.

use std::time::Instant;

use discerr_core::demo::{run_demo, run_demo_with, DemoConfig, DemoRun};
use discerr_core::ode::{integrate_fn, lorenz_rhs, LorenzParams, Method};
use discerr_core::quantify::STANDARD_PAIRS;
use discerr_core::solver::oracle::{pava_scalar, projected_gradient};
use discerr_core::solver::{
    inner_edge_closed_form, inner_subproblem_objective, primal_objective, root_edge_closed_form,
    root_subproblem_objective, solve, solve_observed, SolveOptions,
};
use discerr_core::sym::{inverse_pd, loewner_leq, min_eigenvalue, sqrt_and_inv_sqrt_pd};
use discerr_core::{OrderDag, ProblemInstance, SymMatrix};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, detail: String) -> Outcome {
    Outcome { pass: cond, detail }
}

/// Options used wherever a solution is compared against an oracle: the
/// default feasibility tolerance bounds the Q error at roughly 1e-7·scale,
/// which is looser than the comparison tolerances.
fn tight() -> SolveOptions {
    SolveOptions { tol_rel: 0.0, tol_feas: 1e-12, ..SolveOptions::default() }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new(lo, hi).unwrap().sample(rng)
}

fn random_k(rng: &mut ChaCha8Rng) -> u32 {
    Uniform::new_inclusive(1u32, 5).unwrap().sample(rng)
}

fn random_pd(rng: &mut ChaCha8Rng, p: usize, floor: f64) -> SymMatrix {
    let g: Vec<f64> = (0..p * p).map(|_| StandardNormal.sample(rng)).collect();
    SymMatrix::from_fn(p, |i, j| (0..p).map(|k| g[i * p + k] * g[j * p + k]).sum::<f64>() + if i == j { floor } else { 0.0 })
}

fn random_sym(rng: &mut ChaCha8Rng, p: usize) -> SymMatrix {
    let g: Vec<f64> = (0..p * p).map(|_| StandardNormal.sample(rng)).collect();
    SymMatrix::from_fn(p, |i, j| g[i * p + j] + g[j * p + i])
}

/// Coarse grid followed by golden-section refinement of a concave function.
fn grid_golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let grid = 4000;
    let h = (hi - lo) / grid as f64;
    let best = (0..=grid).map(|i| lo + i as f64 * h).max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let s = |v: f64| SymMatrix::from_diag(&[v]);
    let neg_inf = |v: Option<f64>| v.unwrap_or(f64::NEG_INFINITY);

    let mut worst_scalar = 0.0_f64;
    for case in 0..200 {
        let kj = random_k(&mut rng) as f64;
        let b = uniform(&mut rng, 0.05, 5.0);
        let (closed, found) = if case % 2 == 0 {
            let ki = random_k(&mut rng) as f64;
            let a = uniform(&mut rng, 0.05, 5.0);
            let y = inner_edge_closed_form(&s(a), &s(b), ki, kj).unwrap().get(0, 0);
            let f = |t: f64| neg_inf(inner_subproblem_objective(&s(a), &s(b), ki, kj, &s(t)));
            (y, grid_golden_max(f, 0.0, ki * a * (1.0 - 1e-12)))
        } else {
            let g = uniform(&mut rng, 0.05, 5.0);
            let (gh, gih) = sqrt_and_inv_sqrt_pd(&s(g)).unwrap();
            let y = root_edge_closed_form(&gh, &gih, &s(b), kj).unwrap().get(0, 0);
            let f = |t: f64| neg_inf(root_subproblem_objective(&s(1.0 / g), &s(b), kj, &s(t)));
            (y, grid_golden_max(f, 0.0, 2.0 * kj * g + 1.0))
        };
        worst_scalar = worst_scalar.max((closed - found).abs());
    }

    // p = 2: no feasible perturbation of Frobenius size 1e-4 improves the objective.
    let mut improvements = 0usize;
    let mut tried = 0usize;
    for case in 0..50 {
        let kj = random_k(&mut rng) as f64;
        let b = random_pd(&mut rng, 2, 0.05);
        let (y_star, objective): (SymMatrix, Box<dyn Fn(&SymMatrix) -> Option<f64>>) = if case % 2 == 0 {
            let ki = random_k(&mut rng) as f64;
            let a = random_pd(&mut rng, 2, 0.05);
            let y = inner_edge_closed_form(&a, &b, ki, kj).unwrap();
            let (a2, b2) = (a.clone(), b.clone());
            (y, Box::new(move |t: &SymMatrix| inner_subproblem_objective(&a2, &b2, ki, kj, t)))
        } else {
            let g = random_pd(&mut rng, 2, 0.2).scale(0.5);
            let (gh, gih) = sqrt_and_inv_sqrt_pd(&g).unwrap();
            let y = root_edge_closed_form(&gh, &gih, &b, kj).unwrap();
            let gi = inverse_pd(&g).unwrap();
            let b2 = b.clone();
            (y, Box::new(move |t: &SymMatrix| root_subproblem_objective(&gi, &b2, kj, t)))
        };
        let base = objective(&y_star).unwrap();
        for _ in 0..400 {
            let d = random_sym(&mut rng, 2);
            let d = d.scale(1e-4 / d.frobenius_norm());
            let cand = &y_star + &d;
            if min_eigenvalue(&cand).unwrap() < 0.0 {
                continue;
            }
            if let Some(v) = objective(&cand) {
                tried += 1;
                if v > base + 1e-12 * (1.0 + base.abs()) {
                    improvements += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst_scalar <= 1e-6 && improvements == 0 && tried > 0 && secs < 5.0,
        format!(
            "scalar max |Y - Y_search| = {worst_scalar:.2e} (tol 1e-6) over 200; p=2 improving perturbations {improvements}/{tried} (tol 0); {secs:.2} s (limit 5 s)"
        ),
    )
}

/// Minimum over `γ ≤ q_1 ≤ … ≤ q_n` by refining a grid over the increments.
fn grid_isotonic(s: &[f64], k: &[f64], gamma: f64) -> Vec<f64> {
    let n = s.len();
    let f = |q: &[f64]| q.iter().zip(s).zip(k).map(|((&qi, &si), &ki)| ki * (qi.ln() + si / qi)).sum::<f64>();
    let top = s.iter().cloned().fold(gamma, f64::max);
    let mut center = vec![(top - gamma) / (2.0 * n as f64); n];
    let mut width = top - gamma;
    let pts: usize = 21;
    let mut best = (f64::INFINITY, vec![gamma; n]);
    for _ in 0..60 {
        let axis = |c: usize, t: usize| (center[c] + width * (t as f64 / (pts - 1) as f64 - 0.5)).max(0.0);
        let total = pts.pow(n as u32);
        for idx in 0..total {
            let mut q = Vec::with_capacity(n);
            let mut level = gamma;
            let mut r = idx;
            for c in 0..n {
                level += axis(c, r % pts);
                r /= pts;
                q.push(level);
            }
            let v = f(&q);
            if v < best.0 {
                best = (v, q);
            }
        }
        let q = &best.1;
        center = (0..n).map(|c| q[c] - if c == 0 { gamma } else { q[c - 1] }).collect();
        width *= 0.7;
    }
    best.1
}

fn criterion_2(gaps: &mut Vec<(f64, f64)>) -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0_f64;
    let mut unconverged = 0;
    for _ in 0..100 {
        let n = Uniform::new_inclusive(1usize, 50).unwrap().sample(&mut rng);
        let k: Vec<u32> = (0..n).map(|_| random_k(&mut rng)).collect();
        let s: Vec<f64> = (0..n).map(|_| f64::exp(StandardNormal.sample(&mut rng))).collect();
        let gamma = uniform(&mut rng, 0.1, 1.5);
        let inst = ProblemInstance::new(
            OrderDag::chain(n).unwrap(),
            k.clone(),
            s.iter().map(|&v| SymMatrix::from_diag(&[v])).collect(),
            SymMatrix::from_diag(&[gamma]),
        )
        .unwrap();
        let rep = solve(&inst, &tight()).unwrap();
        if !rep.converged {
            unconverged += 1;
        }
        gaps.push((rep.duality_gap, rep.dual_objective));
        let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let oracle = pava_scalar(&s, &kf, gamma).unwrap();
        for (i, o) in oracle.iter().enumerate() {
            worst = worst.max((rep.q[i + 1].get(0, 0) - o).abs());
        }
    }
    let solve_secs = t0.elapsed().as_secs_f64();

    let mut worst_grid = 0.0_f64;
    for _ in 0..20 {
        let n = Uniform::new_inclusive(1usize, 3).unwrap().sample(&mut rng);
        let k: Vec<f64> = (0..n).map(|_| random_k(&mut rng) as f64).collect();
        let s: Vec<f64> = (0..n).map(|_| f64::exp(StandardNormal.sample(&mut rng))).collect();
        let gamma = uniform(&mut rng, 0.1, 1.5);
        let oracle = pava_scalar(&s, &k, gamma).unwrap();
        let grid = grid_isotonic(&s, &k, gamma);
        for (o, g) in oracle.iter().zip(&grid) {
            worst_grid = worst_grid.max((o - g).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && unconverged == 0 && worst_grid <= 1e-4 && solve_secs < 10.0,
        format!(
            "solve vs PAVA max |dq| = {worst:.2e} (tol 1e-8), unconverged {unconverged}; PAVA vs grid max |dq| = {worst_grid:.2e} (tol 1e-4); solves {solve_secs:.2} s (limit 10 s), total {secs:.2} s"
        ),
    )
}

/// Random DAG on three vertices: every vertex gets a nonempty random subset
/// of the earlier vertices (root included) as parents.
fn random_dag3(rng: &mut ChaCha8Rng) -> OrderDag {
    let mut edges = Vec::new();
    for j in 1..=3usize {
        let mask_dist = Uniform::new(1u32, 1 << j).unwrap();
        let mask = mask_dist.sample(rng);
        for i in 0..j {
            if mask & (1 << i) != 0 {
                edges.push((i, j));
            }
        }
    }
    OrderDag::new(3, edges).unwrap()
}

fn criterion_3(gaps: &mut Vec<(f64, f64)>) -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_obj = 0.0_f64;
    let mut worst_q = 0.0_f64;
    let mut failures = 0;
    for _ in 0..20 {
        let dag = random_dag3(&mut rng);
        let k: Vec<u32> = (0..3).map(|_| random_k(&mut rng)).collect();
        let s: Vec<SymMatrix> = (0..3).map(|_| random_pd(&mut rng, 2, 0.05)).collect();
        let gamma = random_pd(&mut rng, 2, 0.2).scale(0.5);
        let inst = ProblemInstance::new(dag, k, s, gamma).unwrap();
        let rep = solve(&inst, &tight()).unwrap();
        if !rep.converged {
            failures += 1;
        }
        gaps.push((rep.duality_gap, rep.dual_objective));
        let q_pg = match projected_gradient(&inst, 200_000, 1.0) {
            Ok(q) => q,
            Err(e) => {
                eprintln!("projected_gradient: {e:?} on {inst:?}");
                failures += 1;
                continue;
            }
        };
        let f_pg = primal_objective(&inst, &q_pg).unwrap();
        worst_obj = worst_obj.max((rep.primal_objective - f_pg).abs());
        for (a, b) in rep.q.iter().zip(&q_pg) {
            worst_q = worst_q.max((a - b).frobenius_norm());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst_obj <= 1e-4 && worst_q <= 1e-3 && failures == 0 && secs < 60.0,
        format!(
            "max |f_solve - f_pg| = {worst_obj:.2e} (tol 1e-4), max ||Q_solve - Q_pg||_F = {worst_q:.2e} (tol 1e-3), failures {failures}; {secs:.2} s (limit 60 s)"
        ),
    )
}

fn criterion_4(cfg: &DemoConfig) -> (Outcome, Option<DemoRun>) {
    let mut worst = f64::NEG_INFINITY;
    let mut updates = 0usize;
    let run = run_demo_with(cfg, |inst, opts| {
        solve_observed(inst, opts, |u| {
            updates += 1;
            let drop = (u.objective_before - u.objective_after) / u.objective_before.abs().max(1.0);
            worst = worst.max(drop);
        })
    });
    match run {
        Ok(run) => (
            check(
                worst <= 1e-12 && updates > 0,
                format!("largest relative decrease {worst:.2e} (tol 1e-12) over {updates} block updates, {} sweeps", run.report.sweeps),
            ),
            Some(run),
        ),
        Err(e) => (check(false, format!("demo failed: {e}")), None),
    }
}

fn criterion_5(run: &DemoRun) -> Outcome {
    let inst = &run.instance;
    let tol = 1e-8 * inst.scale();
    let q = &run.report.q;
    let mut worst = f64::INFINITY;
    let mut all_leq = true;
    for e in inst.dag().edges() {
        worst = worst.min(min_eigenvalue(&(&q[e.to] - &q[e.from])).unwrap());
        all_leq &= loewner_leq(&q[e.from], &q[e.to], tol).unwrap();
    }
    let edges = inst.dag().edges().len();
    check(
        run.report.converged && all_leq && worst >= -tol,
        format!("{edges} edges incl. root; min eigenvalue of Q_j - Q_i = {worst:.2e} (tol -{tol:.2e} = -1e-8*scale)"),
    )
}

fn criterion_6(gaps: &[(f64, f64)]) -> Outcome {
    let worst = gaps.iter().map(|&(g, d)| g / (1.0 + d.abs())).fold(f64::NEG_INFINITY, f64::max);
    check(
        worst <= 1e-6,
        format!("max gap/(1+|D|) = {worst:.2e} (tol 1e-6) over {} converged solves", gaps.len()),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `first` is an already computed seed-42 run and the seconds it took.
fn banded_coverage(label: &str, base: &DemoConfig, first: Option<(DemoRun, f64)>) -> Outcome {
    let t0 = Instant::now();
    let mut prior = 0.0;
    let seeds = [42u64, 43, 44, 45, 46];
    let mut runs = Vec::new();
    if let Some((r, secs)) = first {
        runs.push(r);
        prior = secs;
    }
    for &seed in &seeds[runs.len()..] {
        match run_demo(&DemoConfig { seed, ..base.clone() }) {
            Ok(r) => runs.push(r),
            Err(e) => return check(false, format!("{label}: seed {seed} failed: {e}")),
        }
    }
    let secs = prior + t0.elapsed().as_secs_f64();
    let mut pass = runs.iter().all(|r| r.report.converged) && secs < 60.0;
    let mut parts = Vec::new();
    for pair in STANDARD_PAIRS {
        let c95 = median(runs.iter().map(|r| r.coverage.get(pair, 0.95).unwrap().fraction).collect());
        let c68 = median(runs.iter().map(|r| r.coverage.get(pair, 0.68).unwrap().fraction).collect());
        let ordered = runs
            .iter()
            .all(|r| r.coverage.get(pair, 0.68).unwrap().fraction < r.coverage.get(pair, 0.95).unwrap().fraction);
        pass &= (0.60..=0.95).contains(&c95) && c68 < c95 && ordered;
        parts.push(format!("({pair}) 95%={c95:.3} 68%={c68:.3}"));
    }
    // Σ̃ grows along the chain, so singular marginals can only be early ones.
    let mut latest = 0;
    let mut excluded = Vec::new();
    for r in &runs {
        let blocks = r.stats.len();
        let mut count = 0;
        for pair in STANDARD_PAIRS {
            let ex = &r.coverage.get(pair, 0.95).unwrap().excluded_blocks;
            count = count.max(ex.len());
            latest = latest.max(ex.iter().map(|&b| b + 1).max().unwrap_or(0));
            pass &= ex.iter().all(|&b| 2 * b < blocks);
        }
        excluded.push(count.to_string());
    }
    check(
        pass,
        format!(
            "{label}: medians over 5 seeds {} (band [0.60, 0.95], 68% < 95% every seed); excluded blocks per seed [{}], latest {latest} (must lie in the first half); {secs:.2} s (limit 60 s)",
            parts.join(" "),
            excluded.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let gamma = SymMatrix::from_diag(&[0.1, 0.2, 0.05]);
    let q_star = SymMatrix::from_row_major(3, &[2.0, 0.5, 0.1, 0.5, 1.5, -0.3, 0.1, -0.3, 1.0]).unwrap();
    assert!(min_eigenvalue(&(&q_star - &gamma)).unwrap() > 0.0);
    let l = discerr_core::sym::cholesky_lower(&q_star).unwrap();
    let mut medians = Vec::new();
    let mut unconverged = 0;
    for k in [10usize, 100, 1000] {
        let mut errs = Vec::new();
        for _ in 0..20 {
            let mut acc = SymMatrix::zeros(3);
            for _ in 0..k {
                let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let x: Vec<f64> = (0..3).map(|i| (0..=i).map(|j| l[i * 3 + j] * z[j]).sum()).collect();
                acc.add_scaled(1.0, &SymMatrix::outer(&x));
            }
            let s = acc.scale(1.0 / k as f64);
            let inst = ProblemInstance::new(OrderDag::chain(1).unwrap(), vec![k as u32], vec![s], gamma.clone()).unwrap();
            let rep = solve(&inst, &SolveOptions::default()).unwrap();
            if !rep.converged {
                unconverged += 1;
            }
            errs.push((&rep.q[1] - &q_star).frobenius_norm());
        }
        medians.push(median(errs));
    }
    check(
        medians.windows(2).all(|w| w[1] < w[0]) && unconverged == 0,
        format!(
            "median ||Q_hat - Q*||_F at k=10/100/1000: {:.4} / {:.4} / {:.4} (strictly decreasing)",
            medians[0], medians[1], medians[2]
        ),
    )
}

/// Ratio of successive self-convergence differences at the final time.
fn self_convergence<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N] + Copy,
    x0: [f64; N],
    method: Method,
    h: f64,
    n: usize,
    base: usize,
) -> f64 {
    let last = |sub: usize| *integrate_fn(rhs, x0, method, h, n, sub).unwrap().states.last().unwrap();
    let (a, b, c) = (last(base), last(2 * base), last(4 * base));
    let norm = |u: &[f64; N], v: &[f64; N]| u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    norm(&a, &b) / norm(&b, &c)
}

fn criterion_9() -> Outcome {
    let osc = |x: &[f64; 2]| [x[1], -x[0]];
    let rk4 = self_convergence(osc, [1.0, 0.0], Method::Rk4, 0.5, 5, 4);
    let euler = self_convergence(osc, [1.0, 0.0], Method::Euler, 0.5, 5, 64);
    let params = LorenzParams::default();
    let lorenz = |x: &[f64; 3]| lorenz_rhs(&params, x);
    let rk4_l = self_convergence(lorenz, params.x0, Method::Rk4, 0.05, 5, 8);
    let euler_l = self_convergence(lorenz, params.x0, Method::Euler, 0.05, 5, 256);
    let near = |f: f64, target: f64| f >= target / 2.0 && f <= target * 2.0;
    check(
        near(rk4, 16.0) && near(euler, 2.0) && near(rk4_l, 16.0) && near(euler_l, 2.0),
        format!(
            "oscillator RK4 {rk4:.2}, Euler {euler:.3}; Lorenz t<=0.2 RK4 {rk4_l:.2}, Euler {euler_l:.3} (targets 16 and 2, within a factor of 2)"
        ),
    )
}

fn report(id: &str, name: &str, outcome: &Outcome, failed: &mut usize) {
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    if !outcome.pass {
        *failed += 1;
    }
    println!("[{tag}] criterion {id} {name}: {}", outcome.detail);
}

fn main() {
    let mut failed = 0;
    let mut gaps = Vec::new();
    println!("acceptance: discerr-core");

    report("1", "subproblem closed forms", &criterion_1(), &mut failed);
    report("2", "scalar oracle equivalence", &criterion_2(&mut gaps), &mut failed);
    report("3", "small-matrix oracle equivalence", &criterion_3(&mut gaps), &mut failed);

    let cfg = DemoConfig::default();
    let t0 = Instant::now();
    let (c4, run) = criterion_4(&cfg);
    let first_secs = t0.elapsed().as_secs_f64();
    report("4", "dual ascent monotonicity", &c4, &mut failed);
    match &run {
        Some(run) => {
            report("5", "order constraints at convergence", &criterion_5(run), &mut failed);
            if run.report.converged {
                gaps.push((run.report.duality_gap, run.report.dual_objective));
            } else {
                gaps.push((f64::INFINITY, 0.0));
            }
        }
        None => report("5", "order constraints at convergence", &check(false, "no demo run".into()), &mut failed),
    }
    report("6", "duality gap", &criterion_6(&gaps), &mut failed);

    // The instrumented seed-42 run doubles as the first of the five seeds.
    let c7 = banded_coverage("RK4 x2 (default)", &cfg, run.map(|r| (r, first_secs)));
    report("7", "Lorenz banded coverage", &c7, &mut failed);
    let euler = DemoConfig { method: Method::Euler, substeps: 20, ..DemoConfig::default() };
    report("7b", "Lorenz banded coverage", &banded_coverage("Euler x20", &euler, None), &mut failed);

    report("8", "Wishart consistency", &criterion_8(), &mut failed);
    report("9", "integrator order", &criterion_9(), &mut failed);

    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
