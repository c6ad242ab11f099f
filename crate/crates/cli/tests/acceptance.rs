//! The twelve acceptance criteria, each with its tolerance pinned here.
//! Prints one `criterion N: PASS|FAIL ...` line per criterion and fails at the end
//! if any criterion failed. `XY_ACCEPT_ONLY=3,7` restricts the run while iterating.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use xy_loops::bessel::{
    convolution_residual, lammers_margin, lammers_threshold, lammers_triangulation_margin,
    lammers_triangulation_threshold, ratio_chain_check, turan_margin, YkDistribution, LAMMERS_THRESHOLD,
    TRIANGULATION_THRESHOLD,
};
use xy_loops::bkt::{correlation_profile, decay_fit, phi, DecayModel};
use xy_loops::coloured::{derivative_identity_check, double_switch_verify};
use xy_loops::current::{
    divergence, for_each_current, height_from_current, partition_and_correlators, weight_log, Current, HeightModel,
};
use xy_loops::inequalities::{randomized_suite, CenteredBox, Estimator};
use xy_loops::loops::{enumerate_consistent, loop_weight_sum, single_switch_verify, winding_field};
use xy_loops::samplers::{
    loop_samples, quad_correlator, spin_mcmc, winding_and_height_stats, ChainSpec, Observable,
};
use xy_loops::PlanarGraph;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `I_k(x)` from its power series, summed until the terms stop mattering.
fn series_i(k: u32, x: f64) -> f64 {
    let h = x / 2.0;
    let mut term = (0..k).fold(1.0, |t, j| t * h / (j + 1) as f64);
    let mut sum = 0.0;
    for m in 0..500u32 {
        sum += term;
        term *= h * h / ((m + 1) as f64 * (m + 1 + k) as f64);
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Every current with all directed entries at most `cap`.
fn bounded_currents(g: &PlanarGraph, cap: u32) -> Vec<Current> {
    let mut out = Vec::new();
    let mut flow = vec![0u32; g.num_half_edges()];
    'outer: loop {
        out.push(Current::from_flows(flow.clone()));
        for x in flow.iter_mut() {
            if *x < cap {
                *x += 1;
                continue 'outer;
            }
            *x = 0;
        }
        return out;
    }
}

fn battery() -> Vec<(&'static str, PlanarGraph)> {
    vec![
        ("single_edge", PlanarGraph::single_edge(1.0)),
        ("doubled_edge", PlanarGraph::doubled_edge(1.0)),
        ("path3", PlanarGraph::path(2, 1.0).unwrap()),
        ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()),
        ("theta", PlanarGraph::theta(1.0)),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let beta = 1.0;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for (name, g) in battery() {
        for n in bounded_currents(&g, 3) {
            let div = divergence(&g, &n);
            let s1: Vec<usize> = (0..g.num_vertices()).filter(|&v| div[v] != 0).collect();
            let mut choices = vec![s1.clone()];
            if let Some(extra) = (0..g.num_vertices()).find(|v| !s1.contains(v)) {
                let mut s2 = s1.clone();
                s2.push(extra);
                s2.sort_unstable();
                choices.push(s2);
            }
            let w = weight_log(&g, &n, beta);
            for s in &choices {
                let (sum, _) = loop_weight_sum(&g, &n, s, beta, 4.0).map_err(|e| format!("{name}: {e}"))?;
                worst = worst.max(((sum - w).exp() - 1.0).abs());
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("worst relative error {worst:.3e} > 1e-12"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} (current, S) pairs, worst relative error {worst:.2e}, {:.1}s", elapsed.as_secs_f64()))
}

/// Raises the amplitude cap until the enclosure is at most `tol` wide.
fn widen<R>(start: u32, tol: f64, f: impl Fn(u32) -> xy_loops::Result<R>, inconclusive: impl Fn(&R) -> bool) -> Result<(R, u32), String> {
    let mut cap = start;
    loop {
        let r = f(cap).map_err(|e| e.to_string())?;
        if !inconclusive(&r) {
            return Ok((r, cap));
        }
        if cap >= 60 {
            return Err(format!("enclosure still wider than {tol} at cap {cap}"));
        }
        cap += 4;
    }
}

fn criterion_2() -> Outcome {
    let mut widest = 0.0f64;
    for (name, g) in [("single_edge", PlanarGraph::single_edge(1.0)), ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap())] {
        for beta in [0.5, 1.0, 2.0] {
            let targets: &[(usize, usize)] = if g.num_vertices() == 2 { &[(0, 1)] } else { &[(0, 1), (0, 2)] };
            for &(a, b) in targets {
                let (r, _) = widen(12, 1e-6, |c| single_switch_verify(&g, beta, a, b, c), |r| r.inconclusive(1e-6))?;
                ensure(r.agrees(), || format!("{name} β={beta} ({a},{b}): sides disagree {r:?}"))?;
                ensure(r.sandwich_holds, || format!("{name} β={beta}: sandwich fails"))?;
                ensure(r.p_positive / 2.0 <= r.loop_side + 1e-15 && r.loop_side <= r.p_positive + 1e-15, || {
                    format!("{name} β={beta}: aggregate sandwich fails")
                })?;
                widest = widest.max(r.current_side.width()).max(r.loop_upper - r.loop_lower);
                if name == "single_edge" {
                    let exact = series_i(2, beta) / series_i(0, beta);
                    ensure((r.loop_side - exact).abs() <= 1e-10, || {
                        format!("single edge β={beta}: {} vs series {exact}", r.loop_side)
                    })?;
                }
            }
        }
    }
    Ok(format!("all enclosures agree, widest {widest:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut widest = 0.0f64;
    for (name, g) in [("single_edge", PlanarGraph::single_edge(1.0)), ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap())] {
        for beta in [0.5, 1.0, 2.0] {
            let targets: &[(usize, usize)] = if g.num_vertices() == 2 { &[(0, 1)] } else { &[(0, 1), (0, 2)] };
            for &(a, b) in targets {
                let (r, _) = widen(12, 1e-6, |c| double_switch_verify(&g, beta, a, b, c), |r| r.inconclusive(1e-6))?;
                ensure(r.agrees(), || format!("{name} β={beta} ({a},{b}): sides disagree {r:?}"))?;
                widest = widest.max(r.current_upper - r.current_lower).max(r.loop_upper - r.loop_lower);
                if name == "single_edge" {
                    let exact = (series_i(1, beta) / series_i(0, beta)).powi(2);
                    ensure((r.loop_side - exact).abs() <= 1e-8 && (r.current_side - exact).abs() <= 1e-8, || {
                        format!("single edge β={beta}: {} / {} vs {exact}", r.loop_side, r.current_side)
                    })?;
                }
            }
        }
    }
    Ok(format!("all enclosures agree, widest {widest:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut configs = 0usize;
    for (name, g) in [
        ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()),
        ("theta", PlanarGraph::theta(1.0)),
        ("box2x1", PlanarGraph::box_lattice(2, 1, 1.0).unwrap()),
    ] {
        let mut currents = Vec::new();
        for_each_current(&g, &vec![0; g.num_vertices()], 1, |n| currents.push(n.clone())).map_err(|e| e.to_string())?;
        for n in &currents {
            let h = height_from_current(&g, n).map_err(|e| e.to_string())?;
            for cfg in enumerate_consistent(&g, n, &[]).map_err(|e| e.to_string())? {
                let w = winding_field(&g, &cfg).map_err(|e| e.to_string())?;
                ensure(w == h, || format!("{name}: winding {w:?} differs from height {h:?}"))?;
                configs += 1;
            }
        }
    }
    let g = PlanarGraph::box_lattice(3, 3, 1.0).unwrap();
    let face = g.inner_faces()[4];
    let stats = winding_and_height_stats(&g, 1.0, &ChainSpec::new(4, 100, 10_000, 1), face, None).map_err(|e| e.to_string())?;
    ensure(stats.samples == 10_000 && stats.mismatches == 0, || {
        format!("{} of {} samples with W ≠ h", stats.mismatches, stats.samples)
    })?;
    Ok(format!("{configs} enumerated configurations and {} samples, no mismatch", stats.samples))
}

fn criterion_5() -> Outcome {
    let graphs = [
        ("single_edge", PlanarGraph::single_edge(1.0)),
        ("doubled_edge", PlanarGraph::doubled_edge(1.0)),
        ("path2", PlanarGraph::path(1, 1.0).unwrap()),
        ("path3", PlanarGraph::path(2, 1.0).unwrap()),
        ("cycle3", PlanarGraph::cycle(3, 1.0).unwrap()),
        ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()),
        ("theta", PlanarGraph::theta(1.0)),
        ("k4", PlanarGraph::wheel(3, 1.0).unwrap()),
    ];
    let mut worst = 0.0f64;
    let mut exact = BTreeMap::new();
    for (name, g) in &graphs {
        for beta in [0.5, 1.0, 2.0] {
            for a in 0..g.num_vertices() {
                for b in a + 1..g.num_vertices() {
                    let q = quad_correlator(g, beta, &[(a, 1), (b, -1)]).map_err(|e| format!("{name}: {e}"))?;
                    let c = partition_and_correlators(g, beta, a, b, 1, 20).map_err(|e| format!("{name}: {e}"))?;
                    worst = worst.max((q - c.ratio).abs());
                    ensure(c.contains(q, 1e-8), || format!("{name} β={beta} ({a},{b}): quad {q} outside [{}, {}]", c.lower, c.upper))?;
                    exact.insert((*name, beta.to_bits(), a, b), c.ratio);
                }
            }
        }
    }
    ensure(worst <= 1e-8, || format!("quadrature vs currents differ by {worst:.3e}"))?;
    let mut min_ess = f64::INFINITY;
    for (name, g) in [("single_edge", &graphs[0].1), ("cycle4", &graphs[5].1)] {
        for beta in [0.5, 1.0, 2.0] {
            let obs: Vec<Observable> = (1..g.num_vertices()).map(|b| Observable::TwoPoint { a: 0, b, k: 1 }).collect();
            let est = spin_mcmc(g, beta, &ChainSpec::new(17, 1000, 40_000, 1), &obs).map_err(|e| e.to_string())?;
            for (b, e) in (1..g.num_vertices()).zip(&est) {
                let x = exact[&(name, beta.to_bits(), 0, b)];
                min_ess = min_ess.min(e.ess);
                ensure(e.ess >= 500.0, || format!("{name} β={beta}: ESS {}", e.ess))?;
                ensure(e.within(x, 4.0), || format!("{name} β={beta} (0,{b}): {} ± {} vs {x}", e.mean, e.std_error))?;
            }
        }
    }
    Ok(format!("quadrature vs currents {worst:.2e}; MCMC within 4 SE, min ESS {min_ess:.0}"))
}

fn criterion_6() -> Outcome {
    for beta in [0.25, 1.0, 2.0, 4.0] {
        for k in 0..=50 {
            let m = turan_margin::<f64>(k, beta);
            ensure(m >= -1e-15, || format!("Turán margin {m} at k={k}, β={beta}"))?;
        }
    }
    let mut worst = 0.0f64;
    for beta in [0.25, 1.0, 2.0, 4.0] {
        for beta2 in [0.25, 1.0, 2.0, 4.0] {
            for k in -5..=5 {
                for l in -5..=5 {
                    let c = convolution_residual::<f64>(k, l, beta, beta2, 40);
                    worst = worst.max(c.residual + c.tail_bound);
                    ensure(c.within_tolerance, || format!("convolution k={k} l={l} β={beta} β'={beta2}: {c:?}"))?;
                }
            }
        }
    }
    for beta in [0.2, 1.0] {
        let r = ratio_chain_check(30, beta);
        ensure(r.passed(), || format!("ratio chain β={beta}: {:?}", r.failures))?;
    }
    let mut worst_moment = 0.0f64;
    for beta in [0.5f64, 1.5, 3.0] {
        for k in 0..=10u32 {
            let y = YkDistribution::new(k as u64, beta);
            for r in 0..=4u32 {
                let oracle = (beta / 2.0).powi(r as i32) * series_i(k + r, beta) / series_i(k, beta);
                let rel = (y.falling_factorial_moment(r) - oracle).abs() / oracle;
                worst_moment = worst_moment.max(rel);
            }
        }
    }
    ensure(worst_moment <= 1e-10, || format!("Y_k moments off by {worst_moment:.3e}"))?;
    Ok(format!("convolution worst {worst:.2e}, Y_k moments worst relative {worst_moment:.2e}"))
}

fn criterion_7() -> Outcome {
    let direct = HeightModel::on_vertices(&PlanarGraph::single_edge(1.0), 2.0, &[0]).map_err(|e| e.to_string())?;
    let path = PlanarGraph::single_edge(1.0).subdivide_edges(4).map_err(|e| e.to_string())?;
    let split = HeightModel::on_vertices(&path, 0.5, &[0]).map_err(|e| e.to_string())?;
    let cap = 30;
    let a = direct.law_of(1, cap).map_err(|e| e.to_string())?;
    let b = split.law_of(1, cap).map_err(|e| e.to_string())?;
    let tv = a.tv_upper(&b);
    ensure(tv <= 1e-8, || format!("TV upper bound {tv:.3e}"))?;
    Ok(format!("TV upper bound {tv:.2e}"))
}

/// Inner-face height vectors in `[−cap, cap]^F`, each with the net flow
/// `h(left) − h(right)` it induces on every edge.
fn height_vectors(g: &PlanarGraph, cap: i64) -> Vec<(Vec<i64>, Vec<i64>)> {
    let faces = g.inner_faces();
    let mut h = vec![-cap; faces.len()];
    let mut out = Vec::new();
    'outer: loop {
        let mut full = vec![0i64; g.num_faces()];
        for (&f, &v) in faces.iter().zip(&h) {
            full[f] = v;
        }
        let d = (0..g.num_edges()).map(|e| full[g.left_face(2 * e)] - full[g.right_face(2 * e)]).collect();
        out.push((h.clone(), d));
        for x in h.iter_mut() {
            if *x < cap {
                *x += 1;
                continue 'outer;
            }
            *x = -cap;
        }
        return out;
    }
}

fn ln_fact(n: u32) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Joint law of the inner-face heights: `P(h) ∝ Π_e I_{∇h(e)}(βJ_e)`.
fn height_law(g: &PlanarGraph, beta: f64, cap: i64) -> BTreeMap<Vec<i64>, f64> {
    let mut law: BTreeMap<Vec<i64>, f64> = height_vectors(g, cap)
        .into_iter()
        .map(|(h, d)| {
            let w = d.iter().enumerate().map(|(e, &x)| series_i(x.unsigned_abs() as u32, beta * g.coupling(e))).product();
            (h, w)
        })
        .collect();
    let z: f64 = law.values().sum();
    law.values_mut().for_each(|p| *p /= z);
    law
}

/// `P(M)` for the edge multiplicities of the sourceless current measure: currents
/// with amplitudes `M` and net flows `d = ∇h` weigh `Π_e (βJ/2)^{M_e} / (n_e⁺! n_e⁻!)`.
fn multigraph_prob(g: &PlanarGraph, beta: f64, m: &[u32], heights: &[(Vec<i64>, Vec<i64>)], z: f64) -> f64 {
    let mut total = 0.0;
    for (_, d) in heights {
        let mut lw = 0.0;
        let mut ok = true;
        for (e, &x) in d.iter().enumerate() {
            let a = x.unsigned_abs() as u32;
            if a > m[e] || (m[e] - a) % 2 != 0 {
                ok = false;
                break;
            }
            let (up, down) = ((m[e] + a) / 2, (m[e] - a) / 2);
            lw += m[e] as f64 * (beta * g.coupling(e) / 2.0).ln() - ln_fact(up) - ln_fact(down);
        }
        if ok {
            total += lw.exp();
        }
    }
    total / z
}

fn tv<K: Ord + Clone>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&K> = p.keys().chain(q.keys()).collect();
    keys.into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let beta = 1.0;
    let mut lines = Vec::new();
    for (name, g) in [("cycle4", PlanarGraph::cycle(4, 1.0).unwrap()), ("box2x1", PlanarGraph::box_lattice(2, 1, 1.0).unwrap())] {
        let cap = 8;
        let hl = height_law(&g, beta, cap);
        let heights = height_vectors(&g, cap);
        let z: f64 = heights
            .iter()
            .map(|(_, d)| d.iter().enumerate().map(|(e, &x)| series_i(x.unsigned_abs() as u32, beta * g.coupling(e))).product::<f64>())
            .sum();
        let faces = g.inner_faces();
        let n = 100_000usize;
        let (mut he, mut me) = (BTreeMap::new(), BTreeMap::new());
        loop_samples(&g, beta, &ChainSpec::new(8, 1000, n, 1), |h, cfg| {
            *he.entry(faces.iter().map(|&f| h.get(f)).collect::<Vec<_>>()).or_insert(0.0) += 1.0 / n as f64;
            *me.entry(cfg.multigraph.edge_counts(&g)).or_insert(0.0) += 1.0 / n as f64;
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        let th = tv(&hl, &he);
        // states never sampled contribute their whole probability
        let (mut seen, mut diff) = (0.0, 0.0);
        for (m, q) in &me {
            let p = multigraph_prob(&g, beta, m, &heights, z);
            seen += p;
            diff += (p - q).abs();
        }
        let tm = (diff + (1.0 - seen).max(0.0)) / 2.0;
        lines.push(format!("{name}: TV(h) {th:.4}, TV(M) {tm:.4} over {} states", me.len()));
        ensure(th <= 0.02 && tm <= 0.02, || lines.join("; "))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {:.1}s", lines.join("; "), elapsed.as_secs_f64()))
}

fn criterion_9() -> Outcome {
    let report = randomized_suite(2026, 200, &[0.5, 1.0, 2.0]);
    let counts = report.counts();
    let bad: Vec<String> = report
        .reports
        .iter()
        .filter(|r| !r.passed)
        .take(5)
        .map(|r| format!("{} {} margin {:.3e}", r.name, r.instance, r.margin))
        .collect();
    ensure(report.passed(), || format!("{} failures, first: {}", report.failures, bad.join("; ")))?;
    Ok(format!("{} checks over 200 instances × 3 β, zero failures; per check {counts:?}", report.reports.len()))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for (name, g, cap) in [("single_edge", PlanarGraph::single_edge(1.0), 30), ("cycle4", PlanarGraph::cycle(4, 1.0).unwrap(), 24)] {
        for e in 0..g.num_edges() {
            let r = derivative_identity_check(&g, 1.0, 0, 1, e, cap).map_err(|x| format!("{name}: {x}"))?;
            worst = worst.max(r.residual());
            ensure(r.residual() <= 1e-6, || format!("{name} edge {e}: {r:?}"))?;
        }
    }
    Ok(format!("worst residual {worst:.2e}"))
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let spec = ChainSpec::new(1, 500, 20_000, 1);
    let mut parts = Vec::new();
    for (beta, want) in [(0.3, DecayModel::Exponential), (1.5, DecayModel::Power)] {
        let points = correlation_profile(15, beta, 8, &spec).map_err(|e| e.to_string())?;
        let min_ess = points.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min);
        ensure(min_ess >= 500.0, || format!("β={beta}: ESS {min_ess}"))?;
        let fit = decay_fit(&points).map_err(|e| e.to_string())?;
        ensure(fit.selected == want, || format!("β={beta}: selected {:?}", fit.selected))?;
        parts.push(format!("β={beta} {:?} (min ESS {min_ess:.0})", fit.selected));
    }
    let bx = CenteredBox::new(4, 4, 1.0).map_err(|e| e.to_string())?;
    let est = Estimator::Mcmc(ChainSpec::new(5, 500, 10_000, 1));
    let betas = [0.3, 0.6, 0.9, 1.2, 1.5];
    let phis: Vec<_> = betas.iter().map(|&b| phi(&bx, b, &est)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for w in phis.windows(2) {
        let slack = 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        ensure(w[1].mean >= w[0].mean - slack, || format!("φ not monotone: {} then {}", w[0].mean, w[1].mean))?;
    }
    let (t1, t2) = (lammers_threshold(), lammers_triangulation_threshold());
    ensure((t1 - LAMMERS_THRESHOLD).abs() <= 1e-10 && (t2 - TRIANGULATION_THRESHOLD).abs() <= 1e-10, || {
        format!("thresholds moved: {t1} {t2}")
    })?;
    ensure(
        lammers_margin(t1 - 1e-8) < 0.0
            && lammers_margin(t1 + 1e-8) > 0.0
            && lammers_triangulation_margin(t2 - 1e-8) < 0.0
            && lammers_triangulation_margin(t2 + 1e-8) > 0.0,
        || "margins do not change sign at the thresholds".into(),
    )?;
    Ok(format!(
        "{}; φ monotone on {} β values; thresholds {t1:.13} and {t2:.13}; {:.1}s",
        parts.join(", "),
        betas.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_xy-loops"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn criterion_12() -> Outcome {
    for args in [&["verify", "all", "--seed", "7"][..], &["sample", "--beta", "1", "--box", "8", "--seed", "1"][..]] {
        let (c1, o1) = run_cli(args)?;
        let (c2, o2) = run_cli(args)?;
        ensure(c1 == 0 && c2 == 0, || format!("{args:?} exited with {c1} and {c2}"))?;
        ensure(!o1.is_empty() && o1 == o2, || format!("{args:?} output differs between runs"))?;
    }
    Ok("verify all and sample outputs byte-identical across runs".into())
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Outcome; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    let only: Option<Vec<usize>> = std::env::var("XY_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    println!();
    let mut failed = Vec::new();
    for (i, f) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let outcome = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match outcome {
            Ok(msg) => println!("criterion {n}: PASS {msg}"),
            Err(msg) => {
                println!("criterion {n}: FAIL {msg}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
