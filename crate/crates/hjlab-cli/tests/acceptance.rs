//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them on success).
//!
//! Everything runs at desk scale: one-dimensional periodic domains with at
//! most 256 nodes and at most 1e5 Monte Carlo samples per check.

use hjlab_core::bridge::{
    bridge_cost, bridge_cost_deterministic, bridge_cost_with_activity, bridge_value_grid,
    fit_value_sandwich, stationary_cusp_field, subsolution_bound_fit, BridgeParams,
};
use hjlab_core::grid::GridFunction;
use hjlab_core::holder::{space_modulus_fit, uniformity_report};
use hjlab_core::levy::{JumpMap, LevyIntegralSpec, LevyMeasureSpec};
use hjlab_core::params::{
    legendre_gap, young_critical_pair, young_margin, StructureParams,
};
use hjlab_core::revholder::{
    fitted_hypothesis_constant, reverse_holder, PathBatch, ReverseHolderConfig,
};
use hjlab_core::rng::stream_rng;
use hjlab_core::simulate::{simulate_martingale, ControlValue};
use hjlab_core::solver::{
    comparison_test, solve_terminal, CoeffField, EquationSpec, SolverConfig, Variant,
};
use hjlab_core::stats::{loglog_fit, poisson_chi_square, McEstimate};
use hjlab_core::verify::{
    feedback_from_value, mc_value, moment_check, rollout_check, sample_batch, PolicyClass,
};

fn verdict(number: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {number} ({name}): {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number} ({name}) failed: {detail}");
}

/// Small deterministic generator for probe data, independent of the crate's
/// simulation streams.
struct Lcg(u64);
impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 33) as f64 / (1u64 << 31) as f64
    }
    fn sym(&mut self, scale: f64) -> f64 {
        scale * (2.0 * self.next_f64() - 1.0)
    }
}

#[test]
fn criterion_1_duality_constants() {
    let mut worst_gap: f64 = 0.0;
    for &delta in &[1.0, 2.0] {
        for &q in &[2.5, 3.0, 4.0] {
            let pr = StructureParams::new(delta, q, 1.0, 1.0, 0.2).unwrap();
            let mut lcg = Lcg(0x1234_5678 ^ (q * 1000.0) as u64 ^ (delta as u64) << 32);
            for _ in 0..10_000 {
                let xi = [lcg.sym(2.0), lcg.sym(2.0)];
                let gap = legendre_gap(&xi, &pr).abs();
                let scale = 1.0 + delta * (xi[0] * xi[0] + xi[1] * xi[1]).sqrt().powf(q);
                worst_gap = worst_gap.max(gap / scale);
            }
        }
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_witness: f64 = 0.0;
    for &delta in &[1.0, 2.0] {
        for &q in &[2.5, 3.0, 4.0] {
            let pr = StructureParams::new(delta, q, 1.0, 1.0, 0.2).unwrap();
            let mut lcg = Lcg(0x9e37_79b9 ^ (q * 1000.0) as u64 ^ (delta as u64) << 40);
            // 1e5 sampled pairs, split over the six parameter settings
            for _ in 0..17_000 {
                let a = [lcg.sym(3.0), lcg.sym(3.0)];
                let b = [lcg.sym(3.0), lcg.sym(3.0)];
                worst_margin = worst_margin.min(young_margin(&a, &b, &pr));
            }
            for _ in 0..50 {
                let (a, b) = young_critical_pair(
                    0.1 + 2.0 * lcg.next_f64(),
                    &[lcg.sym(1.0), lcg.sym(1.0)],
                    &pr,
                );
                worst_witness = worst_witness.max(young_margin(&a, &b, &pr).abs());
            }
        }
    }
    let ok = worst_gap <= 1e-10 && worst_margin >= -1e-12 && worst_witness <= 1e-9;
    verdict(
        1,
        "duality constants",
        ok,
        &format!(
            "legendre gap {worst_gap:.2e}, young margin {worst_margin:.2e}, equality witness {worst_witness:.2e}"
        ),
    );
}

#[test]
fn criterion_2_martingale_law() {
    let measure = LevyMeasureSpec::new(1, 1.0, 1.0).unwrap();
    let delta = 1.0;
    let n = 100_000usize;
    let mut all_ok = true;
    let mut detail = String::new();
    for (k, &(lambda, base)) in [(1.0, 0.5), (0.5, 0.5), (1.0, 1.0)].iter().enumerate() {
        let ctrl = ControlValue::new(lambda, base).unwrap();
        let mut finals = Vec::with_capacity(n);
        let mut squares = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = stream_rng(1000 + k as u64, i as u64);
            let path =
                simulate_martingale(&measure, delta, &[(0.0, ctrl)], 0.0, 1.0, &mut rng).unwrap();
            let v = path.value_at(1.0);
            finals.push(v);
            squares.push(v * v);
            counts.push(path.jump_count());
        }
        let mean = McEstimate::from_samples(&finals, 0);
        let sq = McEstimate::from_samples(&squares, 0);
        let iso = delta * lambda * lambda; // t = 1
        let chi = poisson_chi_square(&counts, delta / (base * base));
        let ok = mean.mean.abs() <= 3.0 * mean.stderr
            && (sq.mean - iso).abs() <= 3.0 * sq.stderr
            && chi.pass;
        all_ok &= ok;
        detail.push_str(&format!(
            "(l={lambda},b={base}): mean {:.1e}/{:.1e}, E|M|^2 {:.4} vs {iso}, chi2 {:.1} < {:.1}; ",
            mean.mean, mean.stderr, sq.mean, chi.statistic, chi.critical
        ));
    }
    verdict(2, "martingale law", all_ok, &detail);
}

#[test]
fn criterion_3_exact_solutions_and_comparison() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 0.1, 0.02).unwrap();
    let nx = 32;
    let cfg = SolverConfig::new(8);
    let mut worst_exact: f64 = 0.0;
    for (variant, sign) in [(Variant::ExtremalLower, -1.0f64), (Variant::ExtremalUpper, 1.0)] {
        let eq = EquationSpec::new(variant, pr, 2.0).unwrap();
        let term = GridFunction::from_fn(nx, 2.0, |_| 0.4).unwrap();
        let sol = solve_terminal(&eq, &term, &cfg).unwrap();
        for m in 0..sol.field.nt() {
            let t = sol.field.times()[m];
            let exact = 0.4 + sign * pr.delta() * (pr.horizon() - t);
            for i in 0..nx {
                worst_exact = worst_exact.max((sol.field.at(m, i) - exact).abs());
            }
        }
    }
    let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
    let mut lcg = Lcg(0xfeed_beef);
    let mut all_preserved = true;
    let mut min_gap = f64::INFINITY;
    for _ in 0..50 {
        let a1 = lcg.sym(0.3);
        let a2 = lcg.sym(0.2);
        let phase = lcg.sym(3.0);
        let hi = GridFunction::from_fn(nx, 2.0, |x| {
            let w = std::f64::consts::PI;
            a1 * (w * x + phase).sin() + a2 * (2.0 * w * x).cos()
        })
        .unwrap();
        let gap = 0.01 + 0.2 * lcg.next_f64();
        let lo = GridFunction::new(hi.values().iter().map(|v| v - gap).collect(), hi.dx()).unwrap();
        let rep = comparison_test(&lo, &hi, &eq, &cfg).unwrap();
        all_preserved &= rep.preserved;
        min_gap = min_gap.min(rep.min_gap);
    }
    let ok = worst_exact < 1e-12 && all_preserved && min_gap >= 0.0;
    verdict(
        3,
        "exact solutions and comparison",
        ok,
        &format!("constant-solution error {worst_exact:.2e}, 50 ordered pairs preserved, min gap {min_gap:.3}"),
    );
}

fn terminals(nx: usize, length: f64) -> Vec<GridFunction<f64>> {
    let two_pi = 2.0 * std::f64::consts::PI / length;
    vec![
        GridFunction::from_fn(nx, length, |x| 0.5 * (two_pi * x).cos()).unwrap(),
        GridFunction::from_fn(nx, length, |x| 0.4 * (two_pi * x).sin()).unwrap(),
        GridFunction::from_fn(nx, length, |x| {
            0.3 * (two_pi * x).cos() + 0.2 * (2.0 * two_pi * x).sin()
        })
        .unwrap(),
    ]
}

#[test]
fn criterion_4_representation_formula() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap();
    let measure = LevyMeasureSpec::new(1, 1.0, 1.0).unwrap();
    let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
    let nx = 64;
    let cfg = SolverConfig::new(32);
    let mut all_ok = true;
    let mut worst_two_sided = f64::NEG_INFINITY;
    let mut worst_one_sided = f64::NEG_INFINITY;
    for (ti, terminal) in terminals(nx, 2.0).iter().enumerate() {
        let sol = solve_terminal(&eq, terminal, &cfg).unwrap();
        let table = feedback_from_value(&sol, &pr).unwrap();
        let osc = terminal.oscillation();
        for k in 0..5 {
            let x = 2.0 * (0.1 + 0.2 * k as f64);
            let est = mc_value(
                &eq,
                &measure,
                terminal,
                x,
                0.0,
                &PolicyClass::ValueFeedback(&table),
                4000,
                7000 + (ti * 5 + k) as u64,
                32,
            )
            .unwrap();
            let pde = sol.field.sample_at_level(0, x);
            let err = (est.mean - pde).abs();
            let tol = 3.0 * est.stderr + 0.05 * osc;
            worst_two_sided = worst_two_sided.max(err - tol);
            all_ok &= err <= tol;
        }
        // restricted policies: one-sided bound
        let consts: Vec<(f64, ControlValue<f64>)> = vec![
            (0.0, ControlValue::new(1.0, 1.0).unwrap()),
            (0.6, ControlValue::new(1.0, 0.5).unwrap()),
            (-0.6, ControlValue::new(0.5, -0.5).unwrap()),
        ];
        let x = 0.9;
        let est = mc_value(
            &eq,
            &measure,
            terminal,
            x,
            0.0,
            &PolicyClass::ConstantGrid(&consts),
            4000,
            8000 + ti as u64,
            32,
        )
        .unwrap();
        let pde = sol.field.sample_at_level(0, x);
        let slack = 3.0 * est.stderr + 10.0 * (sol.field.dt() + sol.field.dx());
        let undercut = pde - est.mean - slack;
        worst_one_sided = worst_one_sided.max(undercut);
        all_ok &= undercut <= 0.0;
    }
    verdict(
        4,
        "representation formula",
        all_ok,
        &format!(
            "worst two-sided excess {worst_two_sided:.3e}, worst restricted undercut {worst_one_sided:.3e}"
        ),
    );
}

#[test]
fn criterion_5_supersolution_monotonicity() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap();
    let measure = LevyMeasureSpec::new(1, 1.0, 1.0).unwrap();
    let eq = EquationSpec::new(Variant::ExtremalLower, pr, 2.0).unwrap();
    let nx = 64;
    let cfg = SolverConfig::new(32);
    let checkpoints: Vec<f64> = (1..=10).map(|k| 0.25 * k as f64 / 10.0).collect();
    let mut worst = f64::INFINITY;
    let mut all_ok = true;
    let mut scenario = 0u64;
    for terminal in &terminals(nx, 2.0) {
        let sol = solve_terminal(&eq, terminal, &cfg).unwrap();
        let table = feedback_from_value(&sol, &pr).unwrap();
        for xi in 0..5 {
            for seed in 0..2 {
                let x_bar = 2.0 * (0.1 + 0.18 * xi as f64);
                let rep = rollout_check(
                    &sol,
                    &measure,
                    &pr,
                    x_bar,
                    0.0,
                    &table,
                    &checkpoints,
                    1500,
                    31_000 + scenario * 97 + seed,
                    10.0,
                )
                .unwrap();
                worst = worst.min(rep.worst_margin);
                all_ok &= rep.pass;
                scenario += 1;
            }
        }
    }
    // moment bound with 3-sigma slack for r in {1, 2}
    let ctrl = ControlValue::new(1.0, 0.5).unwrap();
    let batch = sample_batch(&measure, &pr, 0.5, 0.0, 0.25, 16, 0.0, ctrl, 50_000, 777).unwrap();
    let moments = moment_check(&batch, &pr, &[1.0, 2.0], &[4, 8, 16]).unwrap();
    all_ok &= moments.pass;
    verdict(
        5,
        "supersolution monotonicity",
        all_ok,
        &format!(
            "worst rollout slack margin {worst:.3e} over {scenario} scenario/seed pairs, moments pass {}",
            moments.pass
        ),
    );
}

#[test]
fn criterion_6_bridge_bounds() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 1.0, 0.2).unwrap();
    let p = pr.p();
    let bp = BridgeParams::new(
        0.0,
        1.0,
        BridgeParams::default_alpha(&pr),
        BridgeParams::default_family(4),
        &pr,
    )
    .unwrap();
    // deterministic part against the closed form
    let det: f64 = bridge_cost_deterministic(2.0, 0.5, 1.0, bp.alpha, &pr);
    let est = bridge_cost_with_activity(
        &bp,
        &pr,
        1e-9,
        2.0,
        0.5,
        ControlValue::new(1.0, 1.0).unwrap(),
        500,
        61,
        128,
    )
    .unwrap();
    let det_ok = (est.mean - det).abs() <= 3.0 * est.stderr + 0.01 * det;
    // three scaling slopes
    let small_b = ControlValue::new(1.0, 0.1).unwrap();
    let mid_b = ControlValue::new(1.0, 0.5).unwrap();
    let hs = [0.1, 0.2, 0.4];
    let j_target: Vec<f64> = hs
        .iter()
        .map(|&h| bridge_cost(&bp, &pr, 0.0, 1.0 - h, small_b, 10_000, 62, 96).unwrap().mean)
        .collect();
    let slope_target = loglog_fit(&hs, &j_target).unwrap().slope;
    let ys = [2.0, 4.0, 8.0];
    let j_y: Vec<f64> = ys
        .iter()
        .map(|&y| bridge_cost(&bp, &pr, y, 0.9, mid_b, 4000, 63, 96).unwrap().mean)
        .collect();
    let slope_y = loglog_fit(&ys, &j_y).unwrap().slope;
    let hs2 = [0.01, 0.02, 0.04];
    let j_gap: Vec<f64> = hs2
        .iter()
        .map(|&h| bridge_cost(&bp, &pr, 1.5, 1.0 - h, mid_b, 4000, 64, 96).unwrap().mean)
        .collect();
    let slope_gap = loglog_fit(&hs2, &j_gap).unwrap().slope;
    let slopes_ok = (slope_target - (1.0 - p / 2.0)).abs() <= 0.1
        && (slope_y - p).abs() <= 0.1
        && (slope_gap - (1.0 - p)).abs() <= 0.1;
    // a single finite constant over the 20 x 10 probe grid
    let ys: Vec<f64> = (0..20).map(|k| -2.0 + 4.0 * k as f64 / 19.0).collect();
    let ss: Vec<f64> = (0..10).map(|k| 0.05 + 0.9 * k as f64 / 9.0).collect();
    let w = bridge_value_grid(&bp, &pr, &ys, &ss, 400, 65, 72).unwrap();
    let fit = fit_value_sandwich(&bp, &pr, &ys, &ss, &w);
    let sandwich_ok = fit.constant.is_finite() && fit.constant > 0.0;
    let ok = det_ok && slopes_ok && sandwich_ok;
    verdict(
        6,
        "bridge bounds",
        ok,
        &format!(
            "deterministic {:.4} vs {det:.4}; slopes {slope_target:.3}/{slope_y:.3}/{slope_gap:.3} vs {:.3}/{:.3}/{:.3}; sandwich C {:.3}",
            est.mean,
            1.0 - p / 2.0,
            p,
            1.0 - p,
            fit.constant
        ),
    );
}

#[test]
fn criterion_7_subsolution_estimates() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 0.25, 0.05).unwrap();
    let eq = EquationSpec::new(Variant::ExtremalUpper, pr, 2.0).unwrap();
    let cfg = SolverConfig::new(64);
    let mut cs = Vec::new();
    for nx in [64usize, 128] {
        let terminal = GridFunction::from_fn(nx, 2.0, |x| {
            0.5 * (std::f64::consts::PI * x).cos()
        })
        .unwrap();
        let sol = solve_terminal(&eq, &terminal, &cfg).unwrap();
        cs.push(subsolution_bound_fit(&sol, &pr, 16, 8));
    }
    let stable = cs.iter().all(|c| c.is_finite())
        && (cs[1] - cs[0]).abs() <= 0.2 * cs[0].max(cs[1]);
    // stationary cusp profile: modulus exponent 2 - p (= 2/3 for q = 4)
    let g = stationary_cusp_field(192, 4.0, 2.0, &pr).unwrap();
    let fit = space_modulus_fit(&g, 5).unwrap();
    let target = 2.0 - pr.p();
    let exponent_ok = (fit.slope - target).abs() <= 0.1;
    let ok = stable && exponent_ok;
    verdict(
        7,
        "subsolution estimates",
        ok,
        &format!(
            "fitted C {:.4} -> {:.4} under refinement; stationary exponent {:.3} vs {target:.3}",
            cs[0], cs[1], fit.slope
        ),
    );
}

#[test]
fn criterion_8_reverse_holder() {
    let p = 4.0 / 3.0;
    // (i) verdict equals the brute-force oracle on 50 random step paths
    let mut lcg = Lcg(0x0dd_0dd);
    let mut oracle_agree = true;
    let mut theta_above_p = true;
    for _ in 0..50 {
        let m = 256;
        let lo = 0.2 + lcg.next_f64();
        let hi = lo + lcg.next_f64();
        let flip = (lcg.next_f64() * m as f64) as usize;
        let vals: Vec<f64> = (0..m).map(|k| if k < flip { lo } else { hi }).collect();
        let batch = PathBatch::new(0.0, 1.0, vec![vals.clone()]).unwrap();
        let a = fitted_hypothesis_constant(&batch, 0.5, p) * (1.0 + lcg.next_f64());
        let rep = reverse_holder(&batch, a, 0.5, p, &ReverseHolderConfig::default()).unwrap();
        let Some(theta) = rep.theta_est else {
            oracle_agree = false;
            break;
        };
        theta_above_p &= theta > p;
        let c = rep.c_est.unwrap();
        // direct evaluation of both displays at every dyadic time
        let ds = 1.0 / m as f64;
        let norm_pp: f64 = vals.iter().map(|v| v.powf(p) * ds).sum();
        let mut cnt = m;
        while cnt >= 2 {
            let t = cnt as f64 * ds;
            let ints: f64 = vals[..cnt].iter().map(|v| v * ds).sum();
            let intp: f64 = vals[..cnt].iter().map(|v| v.powf(p) * ds).sum();
            let hyp = intp / t <= a * (ints / t).powf(p) + 0.5 * t.powf(-p / 2.0) + 1e-12;
            let conc = ints.powf(p)
                <= c * t.powf(p - p / theta) * (norm_pp + 0.5) * (1.0 + 1e-9);
            if !(hyp && conc) {
                oracle_agree = false;
            }
            cnt /= 2;
        }
    }
    // (ii) near-critical family drives theta toward p monotonically
    let m = 4096;
    let ds = 1.0 / m as f64;
    let mut thetas = Vec::new();
    for &eps in &[0.2, 0.1, 0.05, 0.025] {
        let vals: Vec<f64> = (0..m)
            .map(|k| ((k as f64 + 0.5) * ds).powf(-1.0 / p + eps))
            .collect();
        let batch = PathBatch::new(0.0, 1.0, vec![vals]).unwrap();
        let a = fitted_hypothesis_constant(&batch, 1.0, p);
        let cfg = ReverseHolderConfig {
            growth_cap: 1.1,
            ..Default::default()
        };
        let rep = reverse_holder(&batch, a, 1.0, p, &cfg).unwrap();
        thetas.push(rep.theta_est.expect("hypothesis holds with fitted A"));
    }
    let monotone = thetas.windows(2).all(|w| w[1] <= w[0] + 1e-9)
        && thetas.last().unwrap() < &(p + 0.35)
        && thetas.iter().all(|t| *t > p);
    let ok = oracle_agree && theta_above_p && monotone;
    verdict(
        8,
        "reverse Holder",
        ok,
        &format!("oracle agreement {oracle_agree}, near-critical thetas {thetas:?}"),
    );
}

#[test]
fn criterion_9_uniformity() {
    let pr = StructureParams::new(1.0, 4.0, 1.0, 0.5, 0.2).unwrap();
    let length = 2.0;
    let nx = 96;
    let terminal = GridFunction::from_fn(nx, length, |x| {
        0.5 * (2.0 * std::f64::consts::PI * x / length).cos()
    })
    .unwrap();
    let dx = terminal.dx();
    let mut family = Vec::new();
    for scale in [1.0, 2.0, 4.0, 8.0, 16.0] {
        family.push(
            EquationSpec::new(
                Variant::LocalGeneral {
                    diffusion: CoeffField::Checkerboard {
                        cell: scale * dx,
                        low: 0.0,
                        high: pr.delta(),
                    },
                    hamiltonian_scale: CoeffField::Constant(1.0),
                    source: CoeffField::Constant(0.0),
                },
                pr,
                length,
            )
            .unwrap(),
        );
    }
    let measure = LevyMeasureSpec::new(1, 1.0, 0.5).unwrap();
    let jump_scale = (pr.delta() / measure.second_moment()).sqrt() * 0.9;
    family.push(
        EquationSpec::new(
            Variant::NonlocalGeneral {
                integral: LevyIntegralSpec::new(
                    vec![vec![
                        JumpMap::Scaled { c: jump_scale },
                        JumpMap::Capped {
                            c: jump_scale,
                            cap: 0.5,
                        },
                    ]],
                    measure,
                    32,
                    dx / 2.0,
                    length,
                    pr.horizon(),
                )
                .unwrap(),
                hamiltonian_scale: CoeffField::Constant(1.0),
                source: CoeffField::Constant(0.0),
            },
            pr,
            length,
        )
        .unwrap(),
    );
    let rep = uniformity_report(
        &family,
        &terminal,
        &SolverConfig::new(128),
        pr.tail_time(),
        0.1,
        3.0,
    )
    .unwrap();
    verdict(
        9,
        "uniformity across coefficient families",
        rep.pass,
        &format!(
            "space spread {:.4}, time spread {:.4}, constant ratio {:.3} over {} members",
            rep.space_spread,
            rep.time_spread,
            rep.constant_ratio,
            rep.fits.len()
        ),
    );
}

#[test]
fn criterion_10_suite_determinism() {
    let exe = env!("CARGO_BIN_EXE_hjlab");
    let dir = std::env::temp_dir().join("hjlab-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        r#"
[structure]
delta = 1.0
q = 4.0
sup_bound = 1.0
horizon = 0.25
tail_time = 0.05

[grid]
nx = 48
nt = 48
length = 2.0

[levy]
stability = 1.0
intensity = 1.0

[mc]
samples = 1500
seed = 99

[equation]
variant = "extremal-lower"
terminal = { kind = "cosine", amplitude = 0.5, mode = 1 }
"#,
    )
    .unwrap();
    let run = |out: &str| {
        let status = std::process::Command::new(exe)
            .args([
                "suite",
                "--config",
                config.to_str().unwrap(),
                "--out",
                dir.join(out).to_str().unwrap(),
            ])
            .status()
            .expect("suite run");
        assert!(status.success(), "suite exited nonzero");
        let text = std::fs::read_to_string(dir.join(out).join("manifest.json")).unwrap();
        let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
        json.as_object_mut().unwrap().remove("timing_ms");
        serde_json::to_string_pretty(&json).unwrap()
    };
    let a = run("a");
    let b = run("b");
    let ok = a == b;
    verdict(
        10,
        "suite determinism",
        ok,
        &format!("manifests byte-identical modulo timestamps: {ok}"),
    );
}
