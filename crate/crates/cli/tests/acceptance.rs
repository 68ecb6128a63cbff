//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use pmfix_cli::config::{load, Loaded};
use pmfix_core::algebra::{
    idempotent_dominance, is_idempotent_dominant, tau_star, TNorm, TriangleKind, TriangleMode,
};
use pmfix_core::contraction::{b_contraction_check, tsr_defect, SelfMap};
use pmfix_core::ddf::Ddf;
use pmfix_core::generate::{explicit_plateau_space, random_ultrametric, seeded};
use pmfix_core::solver::{
    picard, picard_from_all, picard_in_sphere, power_picard, verify_uniqueness, SolverError,
    SolverMode, SolverParams,
};
use pmfix_core::space::{
    check_axioms, check_joint_limit, is_t_closed, sphere_members, PMSpace, SphereSpec,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn bundled(name: &str) -> Result<Loaded, String> {
    load(&config_path(name), None).map_err(|e| format!("{name}: {e}"))
}

fn idx(loaded: &Loaded, label: &str) -> usize {
    loaded.space.index_of(label).unwrap()
}

/// Probe arguments well beyond any threshold used below.
const WIDE_T: [f64; 8] = [1e-9, 1e-3, 0.01, 0.3, 1.0, 2.5, 40.0, 1e9];

fn axiom_suite() -> Outcome {
    let mut rng = seeded(0xA11);
    let mut mutated = 0;
    let mut detected = 0;
    for i in 0..50 {
        let size = rng.gen_range(2..=32);
        let u = random_ultrametric(size, &mut rng);
        for kind in [TriangleKind::SupConvolution, TriangleKind::Pointwise] {
            let space = u
                .plateau_space(TNorm::Minimum, kind)
                .map_err(|e| e.to_string())?;
            let report = check_axioms(&space);
            ensure(report.passed(), || {
                format!(
                    "space {i} ({size} points, {}) has {} violations",
                    kind.name(),
                    report.violations.len()
                )
            })?;
        }
        if let Some(m) = u.mutate(&mut rng) {
            mutated += 1;
            let space = explicit_plateau_space(
                u.labels.clone(),
                &m.beta,
                TriangleMode::pointwise(TNorm::Minimum),
            )
            .map_err(|e| e.to_string())?;
            if !check_axioms(&space).violations.is_empty() {
                detected += 1;
            }
        }
    }
    let rate = f64::from(detected) / f64::from(mutated);
    ensure(rate >= 0.95, || {
        format!("mutation detection {detected}/{mutated}")
    })?;
    Ok(format!(
        "50 spaces x 2 modes clean; mutations detected {detected}/{mutated}"
    ))
}

fn random_step<R: Rng>(rng: &mut R) -> Ddf {
    let n = rng.gen_range(1..=6);
    let steps: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                f64::from(rng.gen_range(0..=256u32)) / 64.0,
                f64::from(rng.gen_range(1..=64u32)) / 64.0,
            )
        })
        .collect();
    Ddf::from_steps(steps).unwrap()
}

/// `max T(F(t₁), G(t - t₁))` over 1000 uniform splits plus, for every
/// breakpoint pair with `a + b < t`, the split halfway through the slack.
fn brute_sup(t: f64, tnorm: &TNorm, f: &Ddf, g: &Ddf) -> f64 {
    let mut splits: Vec<f64> = (0..=1000).map(|i| t * f64::from(i) / 1000.0).collect();
    for &(a, _) in f.breakpoints() {
        for &(b, _) in g.breakpoints() {
            if a + b < t {
                splits.push(a + (t - a - b) / 2.0);
            }
        }
    }
    splits
        .into_iter()
        .map(|t1| tnorm.combine(f.eval(t1), g.eval(t - t1)))
        .fold(0.0, f64::max)
}

fn sup_convolution_oracle() -> Outcome {
    let mut rng = seeded(0x5C);
    let mut probes_checked = 0usize;
    for pair in 0..100 {
        let f = random_step(&mut rng);
        let g = random_step(&mut rng);
        let mut probes: Vec<f64> = vec![0.0, 1e-9, 20.0];
        for &(a, _) in f.breakpoints() {
            for &(b, _) in g.breakpoints() {
                probes.extend([a + b, a + b + 1.0 / 128.0, a, b]);
            }
        }
        probes.extend((0..20).map(|_| rng.gen_range(0.0..9.0)));
        for tnorm in [TNorm::Minimum, TNorm::Product, TNorm::Lukasiewicz] {
            let exact = tau_star(&tnorm, &f, &g);
            for &t in &probes {
                let expected = brute_sup(t, &tnorm, &f, &g);
                ensure(exact.eval(t) == expected, || {
                    format!(
                        "pair {pair}, {tnorm}, t = {t}: exact {} vs brute force {expected}",
                        exact.eval(t)
                    )
                })?;
                probes_checked += 1;
            }
        }
    }
    Ok(format!(
        "100 pairs x 3 t-norms, {probes_checked} probes, exact agreement"
    ))
}

fn bound_chains() -> Outcome {
    let loaded = bundled("canonical_ultrametric.json")?;
    let space = &loaded.space;
    let f = loaded.map().map_err(|e| e.to_string())?;
    let x0 = idx(&loaded, "1");
    for mode in [SolverMode::Menger, SolverMode::Pointwise] {
        let params = SolverParams::new(mode, 0.5).grid(&WIDE_T);
        let trace = picard(space, &f, x0, &params).map_err(|e| e.to_string())?;
        ensure(trace.certified, || format!("{mode}: trace not certified"))?;
        let first = space.distance(trace.iterates[1], trace.iterates[0]);
        for n in 0..=4 {
            let expected = 1.0 - 0.5f64.powi(n as i32);
            for &t in WIDE_T.iter().chain(&trace.probes) {
                let step = trace.step_distance[n].eval(t);
                let bound = 1.0 - 0.5f64.powi(n as i32) * (1.0 - first.eval(t));
                ensure(step == expected && bound == expected, || {
                    format!(
                        "{mode}: n = {n}, t = {t}: step {step}, bound {bound}, expected {expected}"
                    )
                })?;
            }
            ensure(trace.bound_value[n].iter().all(|&b| b == expected), || {
                format!("{mode}: recorded bound at n = {n} differs")
            })?;
        }
        for n in 0..=5usize {
            for p in 1..=(5 - n) {
                for &t in &WIDE_T {
                    let value = space
                        .distance(trace.iterates[n + p], trace.iterates[n])
                        .eval(t);
                    let bound = 1.0 - 0.5f64.powi(n as i32) * (1.0 - first.eval(t));
                    ensure(value >= bound, || {
                        format!("{mode}: Cauchy bound fails at n = {n}, p = {p}, t = {t}")
                    })?;
                }
            }
        }
        ensure(
            trace.chain_violations.is_empty() && trace.cauchy_violations.is_empty(),
            || format!("{mode}: recorded chain violations"),
        )?;
    }
    Ok("equality 1 - 2^-n for n <= 4 in both modes; Cauchy bound for n + p <= 5".into())
}

fn fixed_point_and_uniqueness() -> Outcome {
    let loaded = bundled("canonical_ultrametric.json")?;
    let space = &loaded.space;
    let f = loaded.map().map_err(|e| e.to_string())?;
    let zero = idx(&loaded, "0");
    let params = SolverParams::new(SolverMode::Pointwise, 0.5);
    let traces = picard_from_all(space, &f, &params).map_err(|e| e.to_string())?;
    for (x0, trace) in traces.iter().enumerate() {
        ensure(
            trace.fixed_point() == Some(zero) && trace.fixed_point_verified == Some(true),
            || format!("start {} ends at {:?}", space.label(x0), trace.outcome),
        )?;
    }
    let a = traces[idx(&loaded, "1")].fixed_point().unwrap();
    let b = traces[idx(&loaded, "1/8")].fixed_point().unwrap();
    let uniqueness = verify_uniqueness(space, &f, a, b, 0.5, &WIDE_T).map_err(|e| e.to_string())?;
    ensure(uniqueness.unique, || "verify_uniqueness failed".into())?;

    let mut rng = seeded(0xF1);
    for i in 0..20 {
        let size = rng.gen_range(2..=32);
        let k = f64::from(rng.gen_range(1..=7u32)) / 8.0;
        let u = random_ultrametric(size, &mut rng);
        let space = u
            .plateau_space(TNorm::Minimum, TriangleKind::Pointwise)
            .map_err(|e| e.to_string())?;
        let g = u
            .contractive_map(&space, k, &mut rng)
            .map_err(|e| e.to_string())?;
        let traces = picard_from_all(&space, &g, &SolverParams::new(SolverMode::Pointwise, k))
            .map_err(|e| e.to_string())?;
        for (x0, trace) in traces.iter().enumerate() {
            ensure(
                trace.fixed_point() == Some(u.root) && trace.certified,
                || {
                    format!(
                        "random space {i}: start {x0} gives {:?}, root {}",
                        trace.outcome, u.root
                    )
                },
            )?;
        }
    }
    Ok("canonical: all 6 starts reach 0, unique; 20 random spaces reach their root from every start".into())
}

fn sphere_theorems() -> Outcome {
    let loaded = bundled("sphere_thm43.json")?;
    let space = &loaded.space;
    let f = loaded.map().map_err(|e| e.to_string())?;
    let solve = loaded.solve().map_err(|e| e.to_string())?;
    let sphere = solve
        .sphere
        .as_ref()
        .ok_or("config has no sphere section")?;
    let params = SolverParams::new(loaded.solver_mode(solve), solve.k).grid(&solve.t_grid);
    let x0 = loaded.point(&solve.x0).map_err(|e| e.to_string())?;
    ensure(space.label(x0) == "1/4" && sphere.r == 0.3, || {
        "unexpected bundled sphere config".into()
    })?;

    let run = picard_in_sphere(space, &f, x0, sphere.r, sphere.t, &sphere.u_grid, &params)
        .map_err(|e| e.to_string())?;
    let members = &run.sphere.members;
    ensure(run.sphere.hypothesis.holds(), || {
        "hypothesis gate fails".into()
    })?;
    ensure(
        run.trace.iterates.iter().all(|x| members.contains(x)),
        || "an iterate leaves the sphere".into(),
    )?;
    let zero = idx(&loaded, "0");
    ensure(
        run.trace.fixed_point() == Some(zero) && members.contains(&zero),
        || format!("fixed point {:?} not 0 in sphere", run.trace.fixed_point()),
    )?;
    ensure(run.certified(), || "sphere run not certified".into())?;

    let one = idx(&loaded, "1");
    let witness =
        match picard_in_sphere(space, &f, one, sphere.r, sphere.t, &sphere.u_grid, &params) {
            Err(SolverError::SphereHypothesis { u, value, .. }) => {
                format!("u = {u}, value {value}")
            }
            other => return Err(format!("x0 = 1 should fail the hypothesis, got {other:?}")),
        };

    let pointwise = space.with_mode(TriangleMode::pointwise(TNorm::Minimum));
    let mut probed = 0;
    for center in 0..pointwise.len() {
        for r in [0.1, 0.3, 0.7] {
            for t in [0.5, 1.0, 2.0] {
                let spec = SphereSpec::closed(center, r, t).map_err(|e| e.to_string())?;
                let ball = sphere_members(&pointwise, &spec).map_err(|e| e.to_string())?;
                ensure(is_t_closed(&pointwise, &ball, t), || {
                    format!("closed sphere at {center}, r {r}, t {t}")
                })?;
                probed += 1;
            }
        }
    }
    Ok(format!(
        "iterates {:?} inside sphere {:?}; x0 = 1 rejected at {witness}; {probed} closed spheres t-closed",
        run.trace.iterates, members
    ))
}

fn strictness_counterexample() -> Outcome {
    let loaded = bundled("simple_counterexample.json")?;
    let space = &loaded.space;
    let f = loaded.map().map_err(|e| e.to_string())?;
    let b = b_contraction_check(space, &f, 0.5, &[0.01]).map_err(|e| e.to_string())?;
    ensure(b.holds && b.max_defect <= 1e-12, || {
        format!("B defect {}", b.max_defect)
    })?;
    let tsr = tsr_defect(space, &f, 0.5, &[0.01]).map_err(|e| e.to_string())?;
    let at = tsr.defect_at(0.01).unwrap_or(f64::NEG_INFINITY);
    ensure(!tsr.holds && at >= 0.4, || {
        format!("TSR defect at t = 0.01 is {at}")
    })?;
    Ok(format!(
        "B max defect {:e}; TSR defect {at} at t = 0.01",
        b.max_defect
    ))
}

fn joint_limit() -> Outcome {
    let loaded = bundled("canonical_ultrametric.json")?;
    let space = &loaded.space;
    let xs: Vec<usize> = ["1", "1/2", "1/4", "1/8", "1/16", "0", "0", "0"]
        .iter()
        .map(|l| idx(&loaded, l))
        .collect();
    let quarter = idx(&loaded, "1/4");
    let ys = vec![quarter; xs.len()];
    let report = check_joint_limit(space, &xs, &ys, idx(&loaded, "0"), quarter, 0.1, 1.0, 0.0)
        .map_err(|e| e.to_string())?;
    ensure(report.limit_value == 0.75, || {
        format!("limit value {}", report.limit_value)
    })?;
    ensure(report.deviations[3..].iter().all(|&d| d == 0.0), || {
        format!("deviations {:?}", report.deviations)
    })?;
    ensure(report.holds, || "joint limit report does not hold".into())?;
    Ok(format!("deviations {:?}", report.deviations))
}

fn power_theorem() -> Outcome {
    let loaded = bundled("power_thm45.json")?;
    let space = &loaded.space;
    let f = loaded.map().map_err(|e| e.to_string())?;
    let solve = loaded.solve().map_err(|e| e.to_string())?;
    let x0 = loaded.point(&solve.x0).map_err(|e| e.to_string())?;
    let mode = loaded.solver_mode(solve);
    let m = solve.m.ok_or("config has no m")?;
    let run = power_picard(
        space,
        &f,
        m,
        x0,
        &SolverParams::new(mode, solve.k).grid(&solve.t_grid),
    )
    .map_err(|e| e.to_string())?;
    let plain = picard(
        space,
        &f,
        x0,
        &SolverParams::new(mode, 0.5).grid(&solve.t_grid),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        m == 2
            && run.fixed_point() == plain.fixed_point()
            && run.fixed_point() == Some(idx(&loaded, "0")),
        || {
            format!(
                "m = {m} gives {:?}, m = 1 gives {:?}",
                run.fixed_point(),
                plain.fixed_point()
            )
        },
    )?;
    ensure(
        run.power.aux_violations.is_empty() && run.trace.chain_violations.is_empty(),
        || "g-chain violated".into(),
    )?;
    ensure(run.certified(), || "power run not certified".into())?;

    let pair = explicit_plateau_space(
        vec!["a".into(), "b".into()],
        &[vec![0.0, 0.5], vec![0.5, 0.0]],
        TriangleMode::pointwise(TNorm::Minimum),
    )
    .map_err(|e| e.to_string())?;
    let swap = SelfMap::new(&pair, vec![1, 0]).map_err(|e| e.to_string())?;
    let refusal = match power_picard(
        &pair,
        &swap,
        2,
        0,
        &SolverParams::new(SolverMode::Pointwise, 0.5),
    ) {
        Err(e @ SolverError::PowerNotContractive { .. }) => e.to_string(),
        other => return Err(format!("2-cycle should be refused, got {other:?}")),
    };
    Ok(format!(
        "m = 2 and m = 1 both reach 0; 2-cycle refused: {refusal}"
    ))
}

fn idempotence_gate() -> Outcome {
    let step = pmfix_core::solver::IDEMPOTENCE_GRID;
    ensure(
        is_idempotent_dominant(&TNorm::Minimum, step).unwrap(),
        || "min not dominant".into(),
    )?;
    for tnorm in [TNorm::Product, TNorm::Lukasiewicz] {
        let report = idempotent_dominance(&tnorm, step).unwrap();
        ensure(!report.dominant && report.witness == Some(0.5), || {
            format!(
                "{tnorm}: dominant {}, witness {:?}",
                report.dominant, report.witness
            )
        })?;
        let loaded = bundled("canonical_ultrametric.json")?;
        for kind in [TriangleKind::SupConvolution, TriangleKind::Pointwise] {
            let space = with_tnorm(&loaded.space, tnorm.clone(), kind);
            let f = SelfMap::new(&space, loaded.map().unwrap().image().to_vec()).unwrap();
            for mode in [SolverMode::Menger, SolverMode::Pointwise] {
                let trace = picard(&space, &f, idx(&loaded, "1"), &SolverParams::new(mode, 0.5))
                    .map_err(|e| e.to_string())?;
                ensure(!trace.certified, || format!("{tnorm} {mode} certified"))?;
            }
        }
    }
    Ok("min dominant; product and lukasiewicz fail at 0.5 and every solver mode refuses to certify".into())
}

fn with_tnorm(space: &PMSpace, tnorm: TNorm, kind: TriangleKind) -> PMSpace {
    space.with_mode(TriangleMode::new(kind, tnorm))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("axiom suite", axiom_suite),
        ("sup-convolution oracle", sup_convolution_oracle),
        ("bound chains", bound_chains),
        ("fixed point and uniqueness", fixed_point_and_uniqueness),
        ("sphere theorems", sphere_theorems),
        ("strictness counterexample", strictness_counterexample),
        ("joint limit", joint_limit),
        ("power iteration", power_theorem),
        ("idempotent-dominance gate", idempotence_gate),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.2?}",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
