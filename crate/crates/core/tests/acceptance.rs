//! Acceptance criteria 1-11. Each criterion prints one PASS/FAIL line; the
//! test fails at the end if any criterion failed.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ode_solvers::{Dopri5, System, Vector1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nslab_core::artifacts::{run_trajectory, simulate_to_dir, sweep_to_dir};
use nslab_core::config::RunConfig;
use nslab_core::constitutive::{make_renormalizer, ConstitutiveSet, HSpec};
use nslab_core::continuation::{parameter_sweep, SweepParam, SweepReport};
use nslab_core::degiorgi::{
    level_gap, level_sequence, recursion_lemma, truncation_phi, verify_recursion, CertificateKind, DeGiorgiConfig,
    RecursionParams,
};
use nslab_core::diagnostics::{energy_inequality_check, first_step_defect, poincare_batch, EnergyCheckOptions};
use nslab_core::discretization::{div, grad, inner, integrate, laplacian, Bc, Grid, ScalarField, VectorField};
use nslab_core::exec::Execution;
use nslab_core::solver::{step_continuity, step_temperature, FluidState, RegularizationParams};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn report(id: &str, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let passed = o.passed && in_time;
    let status = if passed { "PASS" } else { "FAIL" };
    let timing = if in_time {
        String::new()
    } else {
        format!(" [over the {limit:?} budget]")
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{status} criterion {id}: {title} ({:.2?}) {}{timing}",
        elapsed, o.detail
    );
    passed
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_vec(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn random_vector(g: Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let comps = (0..g.dim)
        .map(|_| (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    VectorField::from_components(g, comps).unwrap()
}

fn l2(f: &ScalarField) -> f64 {
    inner(f, f).unwrap().sqrt()
}

fn l2_vec(v: &VectorField) -> f64 {
    nslab_core::discretization::inner_vec(v, v).unwrap().sqrt()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grids = [
        Grid::new_1d(128, 1.0).unwrap(),
        Grid::new_2d(64, 48, 1.0, 0.75).unwrap(),
    ];
    let mut sbp: f64 = 0.0;
    let mut gauss: f64 = 0.0;
    for g in grids {
        for _ in 0..100 {
            let f = random_field(g, &mut rng);
            let v = random_vector(g, &mut rng);
            let gf = grad(&f);
            let dv = div(&v);
            let lhs = nslab_core::discretization::inner_vec(&gf, &v).unwrap();
            let rhs = inner(&f, &dv).unwrap();
            sbp = sbp.max((lhs + rhs).abs() / (l2_vec(&gf) * l2_vec(&v) + l2(&f) * l2(&dv)));
            let abs_div: f64 = integrate(&dv.map(f64::abs));
            gauss = gauss.max(integrate(&dv).abs() / abs_div);
        }
    }
    let orders: Vec<f64> = [1usize, 2]
        .iter()
        .map(|&dim| {
            let errs: Vec<f64> = [16usize, 32, 64, 128]
                .iter()
                .map(|&n| {
                    let g = if dim == 1 {
                        Grid::new_1d(n, 1.0)
                    } else {
                        Grid::new_2d(n, n, 1.0, 1.0)
                    }
                    .unwrap();
                    let pi = std::f64::consts::PI;
                    let f =
                        ScalarField::from_fn(g, |x, y| (pi * x).cos() * if dim == 2 { (pi * y).cos() } else { 1.0 });
                    let exact = f.map(|v| -(dim as f64) * pi * pi * v);
                    laplacian(&f, Bc::Neumann).max_abs_diff(&exact)
                })
                .collect();
            errs.windows(2)
                .map(|w| (w[0] / w[1]).log2())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        sbp <= 1e-12 && gauss <= 1e-12 && order >= 1.9,
        format!(
            "SBP residual {sbp:.2e}, divergence residual {gauss:.2e}, Laplacian order 1D {:.3} 2D {:.3}",
            orders[0], orders[1]
        ),
    )
}

fn config(text: &str) -> RunConfig {
    RunConfig::parse(text).expect("acceptance configuration parses")
}

fn criterion_2() -> Outcome {
    let cfg = config(
        "[grid]\ncells = [128]\n[time]\nhorizon = 1.0\ndt = 1e-3\n\
         [initial]\npreset = \"two-bump\"\nrho_amp = 0.8\nvelocity_amp = 1.0\ntheta_amp = 0.5\n",
    );
    let (traj, err) = run_trajectory(&cfg).unwrap();
    let drift = traj.stats.relative_mass_drift();
    outcome(
        err.is_none() && traj.stats.steps == 1000 && drift <= 1e-10,
        format!("{} steps, relative mass drift {drift:.2e}", traj.stats.steps),
    )
}

/// Dense `I − ε dt L` with the three/five-point Neumann Laplacian.
fn dense_heat_matrix(g: &Grid, eps_dt: f64) -> DMatrix<f64> {
    let n = g.len();
    let mut m = DMatrix::<f64>::identity(n, n);
    for k in 0..n {
        let (i, j) = g.coords(k);
        for a in 0..g.dim {
            let h2 = g.spacing(a).powi(2);
            let (pos, cnt) = if a == 0 { (i, g.nx()) } else { (j, g.ny()) };
            for nb in [pos.checked_sub(1), (pos + 1 < cnt).then_some(pos + 1)]
                .into_iter()
                .flatten()
            {
                let other = if a == 0 { g.index(nb, j) } else { g.index(i, nb) };
                m[(k, k)] += eps_dt / h2;
                m[(k, other)] -= eps_dt / h2;
            }
        }
    }
    m
}

struct CoolingOde {
    delta: f64,
    rho: f64,
}

impl System<f64, Vector1<f64>> for CoolingOde {
    fn system(&self, _t: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        dy[0] = -self.delta * y[0].powi(3) / (self.delta + self.rho);
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut heat_err: f64 = 0.0;
    for g in [Grid::new_1d(64, 1.0).unwrap(), Grid::new_2d(16, 12, 1.0, 0.75).unwrap()] {
        for &(eps, dt) in &[(0.1, 1e-2), (1e-3, 1e-3), (1.0, 0.05)] {
            let mut s = FluidState::uniform(g, 1.0, 1.0);
            s.rho = ScalarField::from_vec(g, (0..g.len()).map(|_| rng.gen_range(0.2..2.0)).collect()).unwrap();
            let out = step_continuity(&s, eps, dt).unwrap();
            let oracle = dense_heat_matrix(&g, eps * dt)
                .lu()
                .solve(&DVector::from_vec(s.rho.data.clone()))
                .expect("oracle matrix is nonsingular");
            let err = out
                .rho
                .data
                .iter()
                .zip(oracle.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            heat_err = heat_err.max(err / s.rho.max());
        }
    }

    let (delta, rho, theta0) = (0.01, 1.0, 1.0);
    let g = Grid::new_1d(8, 1.0).unwrap();
    let cs = ConstitutiveSet::general_split();
    let p = RegularizationParams {
        delta,
        ..Default::default()
    };
    let dt: f64 = 1e-5;
    let steps = (1.0 / dt).round() as usize;
    let mut s = FluidState::uniform(g, rho, theta0);
    let zero_flux = vec![vec![0.0; g.nx() + 1]];
    for _ in 0..steps {
        let out = step_temperature(&s, &s.rho, &s.u, &zero_flux, &cs, &p, dt, 0.0).unwrap();
        s.theta = out.theta;
    }
    let mut ode = Dopri5::new(
        CoolingOde { delta, rho },
        0.0,
        1.0,
        1e-3,
        Vector1::new(theta0),
        1e-13,
        1e-15,
    );
    ode.integrate().expect("adaptive oracle integrates");
    let oracle = ode.y_out().last().expect("oracle output")[0];
    let ode_err = s.theta.data.iter().fold(0.0f64, |m, t| m.max((t - oracle).abs()));
    let closed = 1.0 / (1.0 / (theta0 * theta0) + 2.0 * delta / (delta + rho)).sqrt();
    outcome(
        heat_err <= 1e-10 && ode_err <= 1e-8 && (oracle - closed).abs() <= 1e-11,
        format!("implicit heat step error {heat_err:.2e}, cooling ODE error {ode_err:.2e} (dt {dt:e})"),
    )
}

const SHEAR_RUN: &str = "[grid]\ncells = [128]\n[time]\nhorizon = 1.0\ndt = 1e-3\nsnapshot_every = 10\n\
     [regularization]\nepsilon = 0.01\neta = 0.01\ndelta = 0.01\nbeta = 5.0\n\
     [initial]\npreset = \"gaussian-bump\"\nvelocity_amp = 0.5\n";

fn criterion_4() -> Outcome {
    let cfg = config(SHEAR_RUN);
    let (traj, err) = run_trajectory(&cfg).unwrap();
    let opts = EnergyCheckOptions::default();
    let rep = energy_inequality_check(&traj, opts).unwrap();
    let d1 = first_step_defect(&traj.ledger).unwrap();

    let mut forced_cfg = cfg.clone();
    forced_cfg.forcing.heat_source = 1.0;
    let (forced, forced_err) = run_trajectory(&forced_cfg).unwrap();
    let calibrated = EnergyCheckOptions {
        calibration: Some(d1),
        ..opts
    };
    let control = energy_inequality_check(&forced, calibrated).unwrap();
    outcome(
        err.is_none() && rep.passed && forced_err.is_none() && !control.passed,
        format!(
            "max excess {:.2e} with first-step defect {d1:.2e}; forced control excess {:.2e} (rejected: {})",
            rep.max_excess, control.max_excess, !control.passed
        ),
    )
}

const LOWER_BOUND_RUN: &str = "[grid]\ncells = [128]\n[time]\nhorizon = 1.0\ndt = 1e-3\nsnapshot_every = 10\n\
     [regularization]\nepsilon = 0.01\neta = 0.01\ndelta = 0.01\nbeta = 5.0\n\
     [initial]\npreset = \"gaussian-bump\"\nrho_amp = 0.3\ntheta_amp = -0.5\ntheta_lower = 0.5\nvelocity_amp = 0.5\n\
     [sweep]\nomega = 0.5\n";

fn sweep(text: &str, param: SweepParam) -> SweepReport {
    let cfg = config(text);
    parameter_sweep(
        &cfg.sweep_base().unwrap(),
        param,
        &[1e-1, 1e-2, 1e-3],
        Execution::Parallel,
    )
    .unwrap()
}

fn criterion_5() -> Outcome {
    let rep = sweep(LOWER_BOUND_RUN, SweepParam::Eta);
    let mins: Vec<f64> = rep.levels.iter().map(|l| l.min_theta).collect();
    let positive = mins.iter().all(|&m| m > 0.0);
    let spread = rep.verdicts.min_theta_spread;
    outcome(
        rep.verdicts.all_completed && positive && spread <= 0.2,
        format!("min ϑ per η level {mins:.6?}, relative spread {spread:.3e}"),
    )
}

/// `ln(x^a + x^b)` from `ln x`, stable for very small and very large `x`.
fn log_sum_pow(lx: f64, a: f64, b: f64) -> f64 {
    let (hi, lo) = if a * lx >= b * lx {
        (a * lx, b * lx)
    } else {
        (b * lx, a * lx)
    };
    hi + (lo - hi).exp().ln_1p()
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();

    let mut identity: f64 = 0.0;
    for &m in &[0.5, 2.0 * std::f64::consts::LN_2 + 0.1, 3.0, 10.0, 40.0] {
        for k in 1..=40 {
            for &alpha in &[1.5, 2.0, 3.0] {
                let lhs = level_gap(m, k).powf(-alpha);
                let rhs = 2f64.powf(k as f64 * alpha) / m.powf(alpha);
                identity = identity.max((lhs - rhs).abs() / rhs);
            }
        }
    }
    let a_ok = identity <= 1e-12;
    notes.push(format!("(a) identity error {identity:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0usize;
    let mut active = 0usize;
    for _ in 0..100 {
        let g = Grid::new_1d(128, 1.0).unwrap();
        let theta = ScalarField::from_vec(g, (0..g.len()).map(|_| rng.gen_range(0.0..1.2)).collect()).unwrap();
        let m = rng.gen_range(0.5..8.0);
        let omega = 1e-6;
        let c = level_sequence(m, 12).unwrap();
        for k in 1..=12 {
            let now = truncation_phi(&theta, c[k], omega).unwrap();
            let prev = truncation_phi(&theta, c[k - 1], omega).unwrap();
            let gap = level_gap(m, k);
            for &alpha in &[1.5, 2.0, 3.0] {
                for (ind, phi) in now.indicator.data.iter().zip(&prev.phi.data) {
                    active += *ind as usize;
                    if *ind > gap.powf(-alpha) * phi.powf(alpha) * (1.0 + 1e-9) {
                        violations += 1;
                    }
                }
            }
        }
    }
    let b_ok = violations == 0 && active > 0;
    notes.push(format!("(b) {violations} violations over {active} active cells"));

    let mut agree = 0;
    let mut converged = 0;
    for _ in 0..100 {
        let c: f64 = rng.gen_range(0.5..2.0);
        let p = RecursionParams {
            c,
            a: rng.gen_range(1.0..4.0),
            beta1: rng.gen_range(1.05..2.0),
            beta2: 0.0,
            k: 10f64.powf(rng.gen_range(-2.0..4.0)),
        };
        let p = RecursionParams {
            beta2: p.beta1 + rng.gen_range(0.0..1.0),
            ..p
        };
        let u0 = rng.gen_range(1e-3..c.min(1.0));
        let k_max = 30;
        let got = recursion_lemma(u0, p, k_max).unwrap();
        let mut lu = u0.ln();
        let mut ok = true;
        for k in 1..=k_max {
            lu = p.c.ln() + k as f64 * p.a.ln() - p.k.ln() + log_sum_pow(lu, p.beta1, p.beta2);
            if lu > 1e300f64.ln() {
                ok = false;
                break;
            }
        }
        let truth = ok && lu <= 1e-12f64.ln();
        converged += truth as usize;
        agree += (truth == got.converged) as usize;
    }
    let c_ok = agree == 100;
    notes.push(format!("(c) {agree}/100 verdicts agree ({converged} convergent)"));

    let mut cfg = config(LOWER_BOUND_RUN);
    cfg.regularization.eta = 1e-3;
    let (traj, err) = run_trajectory(&cfg).unwrap();
    let m = 2.0 * std::f64::consts::LN_2 + 0.1;
    let dg = DeGiorgiConfig {
        m,
        theta_lower: Some(0.5),
        ..DeGiorgiConfig::default()
    };
    let rep = verify_recursion(&traj, &dg, Execution::Parallel).unwrap();
    let u30 = rep.u_levels.get(30).copied().unwrap_or(f64::INFINITY);
    let bound = (-m).exp() - dg.omega;
    let cert = rep
        .certificate
        .as_ref()
        .is_some_and(|c| (c.bound - bound).abs() <= 1e-15 && c.kind == CertificateKind::Rigorous);
    let d_ok =
        err.is_none() && (-m / 2.0).exp() < 0.5 && rep.monotone && u30 <= 1e-10 && cert && traj.min_theta() >= bound;
    notes.push(format!(
        "(d) U_0 {:.3e}, U_30 {u30:.1e}, monotone {}, certificate ϑ ≥ {bound:.4} vs observed {:.4}",
        rep.u_levels[0],
        rep.monotone,
        traj.min_theta()
    ));
    outcome(a_ok && b_ok && c_ok && d_ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let cfg = RunConfig::default();
    let hyp = cfg.diagnostics.poincare;
    let mut notes = Vec::new();
    let mut ok = true;
    for g in [Grid::new_1d(128, 1.0).unwrap(), Grid::new_2d(64, 64, 1.0, 1.0).unwrap()] {
        let a = poincare_batch(&g, &hyp, 1000, cfg.seed, Execution::Parallel).unwrap();
        let b = poincare_batch(&g, &hyp, 1000, cfg.seed + 1_000_000, Execution::Parallel).unwrap();
        let rel = (a.sup_ratio - b.sup_ratio).abs() / a.sup_ratio.max(b.sup_ratio);
        ok &= a.sup_ratio.is_finite() && b.sup_ratio.is_finite() && rel <= 0.1;
        notes.push(format!(
            "{}D sup {:.4} vs {:.4} ({:.1}%)",
            g.dim,
            a.sup_ratio,
            b.sup_ratio,
            100.0 * rel
        ));
    }
    outcome(ok, notes.join(", "))
}

fn criterion_8() -> Outcome {
    let inv = make_renormalizer(HSpec::InversePower { l: 1.0 });
    let exp = make_renormalizer(HSpec::custom("exp(-z)", |z| (-z).exp()));
    let xi: Vec<bool> = [0.01, 0.1, 0.5, 1.0, 10.0]
        .iter()
        .map(|&xi| make_renormalizer(HSpec::Xi { xi }).admissible)
        .collect();
    let pow: Vec<bool> = [0.1, 0.25, 0.5, 0.75, 0.99]
        .iter()
        .map(|&l| make_renormalizer(HSpec::InversePower { l }).admissible)
        .collect();
    let ok = inv.admissible
        && inv.margin_max_abs <= 1e-9
        && !exp.admissible
        && exp.violation == Some("h''h ≥ 2(h')²")
        && xi.iter().all(|&b| b)
        && pow.iter().all(|&b| b);
    outcome(
        ok,
        format!(
            "1/(1+z) margin {:.1e}; exp(-z) rejected by {:?}; ξ/(ξ+z) {xi:?}; (1+z)^-l {pow:?}",
            inv.margin_max_abs, exp.violation
        ),
    )
}

const ESTIMATE_RUN: &str = "[grid]\ncells = [128]\n[time]\nhorizon = 1.0\ndt = 1e-3\nsnapshot_every = 10\n\
     [regularization]\nepsilon = 0.01\neta = 0.01\ndelta = 0.01\nbeta = 5.0\n\
     [initial]\npreset = \"gaussian-bump\"\nvelocity_amp = 0.5\n[sweep]\nomega = 0.5\n";

fn criterion_9() -> Outcome {
    let rep = sweep(ESTIMATE_RUN, SweepParam::Delta);
    let ratios = &rep.verdicts.estimate_ratios;
    let names = nslab_core::continuation::EstimateSurrogates::NAMES;
    let listed: Vec<String> = names.iter().zip(ratios).map(|(n, r)| format!("{n} {r:.3}")).collect();
    outcome(
        rep.verdicts.all_completed && ratios.len() == names.len() && ratios.iter().all(|&r| r <= 2.0),
        format!("max level value over the first level: {}", listed.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let rep = sweep(LOWER_BOUND_RUN, SweepParam::Epsilon);
    let tails = &rep.verdicts.pairing_tail_decreasing;
    let good = tails.iter().filter(|&&b| b).count();
    outcome(
        rep.verdicts.all_completed && tails.len() == 12 && good == 12,
        format!("{good}/{} bank pairings have decreasing tail differences", tails.len()),
    )
}

fn files_identical(a: &std::path::Path, b: &std::path::Path) -> (usize, usize) {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let same = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap_or_default())
        .count();
    (same, names.len())
}

fn criterion_11() -> Outcome {
    let mut text = String::from(LOWER_BOUND_RUN);
    text.push_str("[diagnostics]\npoincare_samples = 64\n");
    let mut cfg = config(&text);
    cfg.seed = 11;
    cfg.time.horizon = 0.2;
    cfg.sweep.levels = vec![1e-1, 1e-2, 1e-3];
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let out = simulate_to_dir(&cfg, d.path()).unwrap();
        assert!(out.error.is_none());
        sweep_to_dir(&cfg, d.path()).unwrap();
    }
    let (same, total) = files_identical(dirs[0].path(), dirs[1].path());
    let csvs = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    outcome(
        same == total && csvs >= 3,
        format!("{same}/{total} files byte-identical across two runs ({csvs} CSVs)"),
    )
}

#[test]
fn acceptance_criteria() {
    let _ = writeln!(std::io::stdout().lock());
    let s = Duration::from_secs;
    let results = [
        report("1", "operator correctness", s(10), criterion_1),
        report("2", "mass conservation", s(30), criterion_2),
        report("3", "oracle equivalence", s(30), criterion_3),
        report("4", "energy inequality", s(60), criterion_4),
        report("5", "temperature lower bound", s(300), criterion_5),
        report("6", "De Giorgi machinery", s(120), criterion_6),
        report("7", "weighted Poincaré", s(60), criterion_7),
        report("8", "renormalizer admissibility", s(5), criterion_8),
        report("9", "δ-sweep estimate surrogates", s(300), criterion_9),
        report("10", "EVP pairing stability", s(300), criterion_10),
        report("11", "determinism", s(120), criterion_11),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
