//! Built-in verification batteries behind `verify`.

use serde::Serialize;
use xy_loops::bessel::{
    bessel_i_scaled, convolution_residual, lammers_margin, lammers_threshold, lammers_triangulation_margin,
    lammers_triangulation_threshold, ratio_chain_check, turan_margin, YkDistribution, LAMMERS_THRESHOLD,
    TRIANGULATION_THRESHOLD,
};
use xy_loops::coloured::{derivative_identity_check, double_switch_verify, ferromagnet_verify, verify_loopexp1};
use xy_loops::current::{
    divergence, for_each_current, height_from_current, partition_and_correlators, weight_log, Current,
};
use xy_loops::inequalities::randomized_suite;
use xy_loops::loops::{
    enumerate_consistent, eulerian_marginal_check, loop_weight_sum, path_reversal_check, single_switch_verify,
    higher_power_verify, winding_field,
};
use xy_loops::samplers::quad_correlator;
use xy_loops::{PlanarGraph, Result};

use crate::Suite;

/// Random instances per inverse temperature when `--trials` is not given.
pub const DEFAULT_TRIALS: usize = 20;

const IDENTITY_TOL: f64 = 1e-12;
const ENCLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub instance: String,
    /// Discrepancy measured by the check; it passes when this is at most `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: Option<u64>,
    pub passed: bool,
    pub total: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

struct Battery {
    group: &'static str,
    checks: Vec<Check>,
}

impl Battery {
    fn new(group: &'static str) -> Self {
        Battery { group, checks: Vec::new() }
    }

    fn push(&mut self, name: &str, instance: &str, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            group: self.group,
            name: name.into(),
            instance: instance.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            note: None,
        });
    }

    fn flag(&mut self, name: &str, instance: &str, ok: bool, note: Option<String>) {
        self.checks.push(Check {
            group: self.group,
            name: name.into(),
            instance: instance.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
            note,
        });
    }

    /// Runs `f`, recording a library error as a failed check.
    fn attempt(&mut self, name: &str, instance: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.flag(name, instance, false, Some(e.to_string()));
        }
    }
}

fn small_graphs() -> Vec<(&'static str, PlanarGraph)> {
    vec![
        ("single_edge", PlanarGraph::single_edge(1.0)),
        ("doubled_edge", PlanarGraph::doubled_edge(1.0)),
        ("path3", PlanarGraph::path(2, 1.0).unwrap()),
        ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()),
        ("theta", PlanarGraph::theta(1.0)),
    ]
}

/// Calls `f` on every current with all directed entries at most `cap`.
pub fn for_each_bounded_current(g: &PlanarGraph, cap: u32, mut f: impl FnMut(&Current)) {
    let mut flow = vec![0u32; g.num_half_edges()];
    loop {
        f(&Current::from_flows(flow.clone()));
        let mut i = 0;
        loop {
            if i == flow.len() {
                return;
            }
            if flow[i] < cap {
                flow[i] += 1;
                break;
            }
            flow[i] = 0;
            i += 1;
        }
    }
}

/// Relative error of the loop expansion of `w_β(n)` over `S = sources` and
/// over `S` plus one more vertex.
pub fn loopexp_worst(g: &PlanarGraph, beta: f64, cap: u32) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut err = None;
    for_each_bounded_current(g, cap, |n| {
        if err.is_some() {
            return;
        }
        let div = divergence(g, n);
        let s1: Vec<usize> = (0..g.num_vertices()).filter(|&v| div[v] != 0).collect();
        let mut choices = vec![s1.clone()];
        if let Some(extra) = (0..g.num_vertices()).find(|v| !s1.contains(v)) {
            let mut s2 = s1.clone();
            s2.push(extra);
            s2.sort_unstable();
            choices.push(s2);
        }
        let w = weight_log(g, n, beta);
        for s in &choices {
            match loop_weight_sum(g, n, s, beta, 4.0) {
                Ok((sum, _)) => {
                    worst = worst.max(((sum - w).exp() - 1.0).abs());
                    count += 1;
                }
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok((worst, count)),
    }
}

fn loops_battery() -> Vec<Check> {
    let mut b = Battery::new("loops");
    for (name, g) in small_graphs() {
        let cap = if g.num_edges() > 4 { 1 } else { 2 };
        b.attempt("loop_expansion", name, |b| {
            let (worst, _) = loopexp_worst(&g, 1.0, cap)?;
            b.push("loop_expansion", name, worst, IDENTITY_TOL);
            Ok(())
        });
    }
    let edge = PlanarGraph::single_edge(1.0);
    let c4 = PlanarGraph::cycle(4, 1.0).unwrap();
    for beta in [0.5, 1.0, 2.0] {
        let inst = format!("single_edge beta={beta}");
        b.attempt("single_switching", &inst, |b| {
            let r = single_switch_verify(&edge, beta, 0, 1, 30)?;
            let exact = bessel_i_scaled::<f64>(2, beta) / bessel_i_scaled::<f64>(0, beta);
            b.flag("single_switching", &inst, r.agrees() && r.sandwich_holds && !r.inconclusive(ENCLOSURE_TOL), None);
            b.push("single_switching_bessel", &inst, (r.loop_side - exact).abs(), 1e-10);
            Ok(())
        });
    }
    for (a, bb) in [(0, 1), (0, 2)] {
        let inst = format!("cycle4 a={a} b={bb}");
        b.attempt("single_switching", &inst, |b| {
            let r = single_switch_verify(&c4, 1.0, a, bb, 22)?;
            b.flag("single_switching", &inst, r.agrees() && r.sandwich_holds && !r.inconclusive(ENCLOSURE_TOL), None);
            Ok(())
        });
    }
    b.attempt("higher_power", "single_edge k=2", |b| {
        let r = higher_power_verify(&edge, 1.0, 0, 1, 2, 30)?;
        let exact = bessel_i_scaled::<f64>(4, 1.0) / bessel_i_scaled::<f64>(0, 1.0);
        b.flag("higher_power", "single_edge k=2", r.agrees(), None);
        b.push("higher_power_bessel", "single_edge k=2", (r.loop_side - exact).abs(), 1e-10);
        Ok(())
    });
    for (inst, g, a, bb, cap) in [("single_edge", &edge, 0, 1, 5), ("cycle4", &c4, 0, 2, 2)] {
        b.attempt("path_reversal", inst, |b| {
            let r = path_reversal_check(g, a, bb, cap)?;
            b.flag("path_reversal", inst, r.ok() && r.pairs > 0, None);
            Ok(())
        });
    }
    let box21 = PlanarGraph::box_lattice(2, 1, 1.0).unwrap();
    for (inst, g) in [("cycle4", &c4), ("theta", &PlanarGraph::theta(1.0)), ("box2x1", &box21)] {
        b.attempt("winding_equals_height", inst, |b| {
            let (checked, mismatches) = winding_mismatches(g, 1)?;
            b.push("winding_equals_height", inst, mismatches as f64, 0.0);
            if checked == 0 {
                b.flag("winding_equals_height_nonempty", inst, false, None);
            }
            Ok(())
        });
    }
    b.attempt("eulerian_marginal", "cycle4", |b| {
        let worst = eulerian_marginal_check(&c4, 1.0, 2)?
            .iter()
            .map(|c| (c.current_side - c.eulerian_side).abs() / c.eulerian_side.max(f64::MIN_POSITIVE))
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max);
        b.push("eulerian_marginal", "cycle4", worst, 1e-12);
        Ok(())
    });
    b.checks
}

/// Compares the winding field of every loop configuration with the dual
/// height of its current, over sourceless currents with entries at most `cap`.
pub fn winding_mismatches(g: &PlanarGraph, cap: u32) -> Result<(usize, usize)> {
    let mut currents = Vec::new();
    for_each_current(g, &vec![0; g.num_vertices()], cap, |n| currents.push(n.clone()))?;
    let (mut checked, mut mismatches) = (0, 0);
    for n in &currents {
        let h = height_from_current(g, n)?;
        for cfg in enumerate_consistent(g, n, &[])? {
            checked += 1;
            if winding_field(g, &cfg)? != h {
                mismatches += 1;
            }
        }
    }
    Ok((checked, mismatches))
}

fn coloured_battery() -> Vec<Check> {
    let mut b = Battery::new("coloured");
    for (name, g) in small_graphs().into_iter().filter(|(n, _)| ["single_edge", "cycle4", "theta"].contains(n)) {
        b.attempt("coloured_loop_expansion", name, |b| {
            let nv = g.num_vertices();
            let mut sourceless = Vec::new();
            for_each_current(&g, &vec![0; nv], 1, |n| sourceless.push(n.clone()))?;
            let mut dipoles = Vec::new();
            for_each_current(&g, &xy_loops::current::dipole(nv, 0, 1, 1), 1, |n| dipoles.push(n.clone()))?;
            let mut worst = 0.0f64;
            for r in sourceless.iter().chain(&dipoles).take(12) {
                for bl in sourceless.iter().take(6) {
                    for s in [vec![], vec![0], vec![0, 1]] {
                        let div: Vec<i64> = divergence(&g, &r.sum(bl));
                        if (0..nv).any(|v| div[v] != 0 && !s.contains(&v)) {
                            continue;
                        }
                        worst = worst.max(verify_loopexp1(&g, r, bl, &s, 1.3)?.rel_err);
                    }
                }
            }
            b.push("coloured_loop_expansion", name, worst, IDENTITY_TOL);
            Ok(())
        });
    }
    let edge = PlanarGraph::single_edge(1.0);
    let c4 = PlanarGraph::cycle(4, 1.0).unwrap();
    for beta in [0.5, 1.0, 2.0] {
        let inst = format!("single_edge beta={beta}");
        b.attempt("double_switching", &inst, |b| {
            let r = double_switch_verify(&edge, beta, 0, 1, 40)?;
            let exact = (bessel_i_scaled::<f64>(1, beta) / bessel_i_scaled::<f64>(0, beta)).powi(2);
            b.flag("double_switching", &inst, r.agrees() && r.sandwich_holds, None);
            b.push("double_switching_bessel", &inst, (r.loop_side - exact).abs(), 1e-8);
            Ok(())
        });
    }
    b.attempt("double_switching", "cycle4", |b| {
        let r = double_switch_verify(&c4, 1.0, 0, 1, 24)?;
        b.flag("double_switching", "cycle4", r.agrees() && !r.inconclusive(ENCLOSURE_TOL), None);
        Ok(())
    });
    let c3 = PlanarGraph::cycle(3, 1.0).unwrap();
    b.attempt("ferromagnet", "cycle3", |b| {
        let r = ferromagnet_verify(&c3, 2.0, 0, 1, 2, 40)?;
        b.push("ferromagnet", "cycle3", (-r.first_upper).max(-r.second_upper).max(0.0), 1e-12);
        Ok(())
    });
    for (inst, g, e, cap) in [("single_edge", &edge, 0, 30), ("cycle4", &c4, 0, 24)] {
        b.attempt("derivative_identity", inst, |b| {
            let r = derivative_identity_check(g, 1.0, 0, 1, e, cap)?;
            b.push("derivative_identity", inst, r.residual(), 1e-6);
            Ok(())
        });
    }
    b.checks
}

fn bessel_battery() -> Vec<Check> {
    let mut b = Battery::new("bessel");
    for beta in [0.25, 1.0, 2.0, 4.0] {
        let worst = (1..=50).map(|k| -turan_margin::<f64>(k, beta)).fold(f64::MIN, f64::max);
        b.push("turan", &format!("beta={beta}"), worst, 1e-15);
    }
    let mut worst = 0.0f64;
    for (beta, beta2) in [(0.5, 0.5), (1.0, 2.0), (4.0, 4.0)] {
        for k in -3..=3 {
            for l in -3..=3 {
                let c = convolution_residual::<f64>(k, l, beta, beta2, 40);
                worst = worst.max(c.residual + c.tail_bound);
            }
        }
    }
    b.push("convolution", "cutoff=40", worst, 1e-10);
    for beta in [0.2, 1.0] {
        let r = ratio_chain_check(30, beta);
        b.flag("ratio_chain", &format!("beta={beta}"), r.passed(), r.failures.first().cloned());
    }
    let mut worst = 0.0f64;
    for k in 0..=10u64 {
        let y = YkDistribution::new(k, 1.5f64);
        for r in 0..=4u32 {
            let a = y.falling_factorial_moment(r);
            let c = y.falling_factorial_moment_closed_form(r);
            worst = worst.max((a - c).abs() / c.abs().max(1e-300));
        }
    }
    b.push("yk_moments", "beta=1.5", worst, 1e-10);
    b.push("lammers_threshold", "square", (lammers_threshold() - LAMMERS_THRESHOLD).abs(), 1e-10);
    b.push(
        "lammers_threshold",
        "triangulation",
        (lammers_triangulation_threshold() - TRIANGULATION_THRESHOLD).abs(),
        1e-10,
    );
    let crosses = lammers_margin(LAMMERS_THRESHOLD - 1e-6) < 0.0
        && lammers_margin(LAMMERS_THRESHOLD + 1e-6) > 0.0
        && lammers_triangulation_margin(TRIANGULATION_THRESHOLD - 1e-6) < 0.0
        && lammers_triangulation_margin(TRIANGULATION_THRESHOLD + 1e-6) > 0.0;
    b.flag("lammers_sign_change", "both", crosses, None);
    b.checks
}

fn oracle_battery() -> Vec<Check> {
    let mut b = Battery::new("oracle");
    let graphs = [
        ("single_edge", PlanarGraph::single_edge(1.0)),
        ("path3", PlanarGraph::path(2, 1.0).unwrap()),
        ("cycle3", PlanarGraph::cycle(3, 1.0).unwrap()),
        ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()),
    ];
    for (name, g) in &graphs {
        for beta in [0.5, 1.0, 2.0] {
            let inst = format!("{name} beta={beta}");
            b.attempt("quadrature_vs_currents", &inst, |b| {
                let mut worst = 0.0f64;
                for v in 1..g.num_vertices() {
                    let q = quad_correlator(g, beta, &[(0, 1), (v, -1)])?;
                    let c = partition_and_correlators(g, beta, 0, v, 1, 30)?;
                    worst = worst.max((q - c.ratio).abs().max(c.width()));
                }
                b.push("quadrature_vs_currents", &inst, worst, 1e-8);
                Ok(())
            });
        }
    }
    b.checks
}

fn inequality_battery(seed: u64, trials: usize, betas: &[f64]) -> Vec<Check> {
    let report = randomized_suite(seed, trials, betas);
    report
        .reports
        .into_iter()
        .map(|r| Check {
            group: "inequalities",
            name: r.name.to_string(),
            instance: r.instance,
            residual: -r.margin,
            tolerance: r.tolerance,
            passed: r.passed,
            note: r.note,
        })
        .collect()
}

pub fn run(suite: Suite, seed: Option<u64>, trials: usize, betas: &[f64]) -> anyhow::Result<Report> {
    let needs_seed = matches!(suite, Suite::Inequalities | Suite::All);
    let seed = match (needs_seed, seed) {
        (true, None) => anyhow::bail!("this suite samples random instances; pass --seed"),
        (true, s) => s,
        (false, _) => None,
    };
    let mut checks = Vec::new();
    if matches!(suite, Suite::Loops | Suite::All) {
        checks.extend(loops_battery());
    }
    if matches!(suite, Suite::Coloured | Suite::All) {
        checks.extend(coloured_battery());
    }
    if suite == Suite::All {
        checks.extend(bessel_battery());
        checks.extend(oracle_battery());
    }
    if let Some(seed) = seed {
        checks.extend(inequality_battery(seed, trials, betas));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(Report {
        suite,
        seed,
        passed: failed == 0,
        total: checks.len(),
        failed,
        checks,
    })
}
