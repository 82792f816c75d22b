//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::naive::{self, NaiveWalk};
use common::{dim, pt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotorlab::aggregation::aggregate;
use rotorlab::experiments::{
    balance_report, conjecture_sweep, srw_comparison, stabilization_study, ConjectureSweep,
    SweepControl,
};
use rotorlab::rotor::default_cap;
use rotorlab::{
    checkpoint, ConfigRule, Direction, ExplicitTable, LatticeBox, LatticePoint, RotorOrder,
    WalkState,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rotorlab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rotorlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env_remove("ROTORLAB_OUT")
        .output()
        .expect("binary runs")
}

type NaiveRule = Box<dyn Fn(&[i64]) -> usize>;

/// A random built-in rule and its naive counterpart.
fn random_rule(rng: &mut impl Rng, d: usize) -> (ConfigRule, NaiveRule) {
    let dm = dim(d);
    match rng.random_range(0..3) {
        0 => (
            ConfigRule::toward_origin(dm),
            Box::new(naive::toward_origin),
        ),
        1 => (
            ConfigRule::paper_literal(dm),
            Box::new(naive::paper_literal),
        ),
        _ => {
            let l = rng.random_range(0..2 * d);
            (
                ConfigRule::uniform(dm, Direction(l as u8)).unwrap(),
                Box::new(move |_: &[i64]| l),
            )
        }
    }
}

fn step_map() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 100_000;
    let start = Instant::now();
    for t in 0..trials {
        let d = rng.random_range(1..=4usize);
        let (rule, naive_rule) = random_rule(&mut rng, d);
        let x: Vec<i64> = (0..d).map(|_| rng.random_range(-6..=6)).collect();
        let mut s = WalkState::starting_at(rule, RotorOrder::cyclic(dim(d)), pt(&x)).unwrap();
        let mut overlay: HashMap<Vec<i64>, usize> = HashMap::new();
        for _ in 0..rng.random_range(0..4) {
            let p: Vec<i64> = (0..d).map(|_| rng.random_range(-2..=2)).collect();
            let l = rng.random_range(0..2 * d);
            s.field_mut().set(pt(&p), Direction(l as u8));
            overlay.insert(p, l);
        }
        let expected = naive::g(&x, &mut overlay, &*naive_rule);
        s.step().map_err(|e| e.to_string())?;
        check(s.position().coords() == expected.as_slice(), || {
            format!("trial {t}: position {} vs {expected:?}", s.position())
        })?;
        check(s.label_at(&pt(&x)).index() == overlay[&x], || {
            format!("trial {t}: label at {x:?}")
        })?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{trials} steps exact in {:.3}s",
        elapsed.as_secs_f64()
    ))
}

fn origin_visits_to_twenty() -> Outcome {
    let rows = conjecture_sweep(
        ConfigRule::toward_origin(dim(3)),
        RotorOrder::cyclic(dim(3)),
        20,
    )
    .map_err(|e| e.to_string())?;
    for (n, row) in rows.iter().enumerate() {
        check(row.origin_visits == 6 * n as u64 + 1 && row.matches, || {
            format!("n={n}: {} visits", row.origin_visits)
        })?;
        let fixture = common::TOWARD_ORIGIN_SWEEP_20[n];
        check((row.origin_visits, row.first_exit_step) == fixture, || {
            format!("n={n}: row differs from fixture")
        })?;
    }

    let full = tempfile::tempdir().unwrap();
    let split = tempfile::tempdir().unwrap();
    check(
        rotorlab(&["conjecture", "--n-max", "20"], full.path())
            .status
            .code()
            == Some(0),
        || "uninterrupted run failed".into(),
    )?;
    let ck = split.path().join("ck.json");
    let ck = ck.to_str().unwrap();
    let mut args = vec![
        "conjecture",
        "--n-max",
        "20",
        "--checkpoint",
        ck,
        "--checkpoint-every",
        "1e5",
        "--stop-after",
        "7e5",
    ];
    let mut pauses = 0;
    while !split.path().join("conjecture.csv").exists() {
        let out = rotorlab(&args, split.path());
        check(out.status.code() == Some(0), || {
            format!("segment exited {:?}", out.status.code())
        })?;
        if args[3] != "--resume" {
            args = vec![
                "conjecture",
                "--n-max",
                "20",
                "--resume",
                ck,
                "--checkpoint",
                ck,
                "--stop-after",
                "7e5",
            ];
        }
        pauses += 1;
        check(pauses < 10, || "resume never completed".into())?;
    }
    let a = std::fs::read(full.path().join("conjecture.csv")).unwrap();
    let b = std::fs::read(split.path().join("conjecture.csv")).unwrap();
    check(a == b, || "resumed csv differs".into())?;
    Ok(format!(
        "6n+1 holds for n=0..=20; csv identical after {} interruptions",
        pauses - 1
    ))
}

/// A random configuration on B[0,4] with a random default.
fn random_table(rng: &mut impl Rng, d: usize) -> ConfigRule {
    let dm = dim(d);
    let labels = 2 * d as u8;
    let entries: Vec<_> = LatticeBox::new(dm, 4)
        .points()
        .map(|p| (p, Direction(rng.random_range(0..labels))))
        .collect();
    let default = Direction(rng.random_range(0..labels));
    ConfigRule::table(dm, ExplicitTable::new(dm, default, entries).unwrap())
}

fn finite_regions_are_left() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut longest = 0;
    for trial in 0..1000 {
        let d = rng.random_range(1..=3usize);
        let rule = if rng.random_bool(0.75) {
            random_table(&mut rng, d)
        } else {
            random_rule(&mut rng, d).0
        };
        let keep = rng.random_range(0.05..1.0);
        let mut region: HashSet<LatticePoint> = LatticeBox::new(dim(d), 4)
            .points()
            .filter(|_| rng.random_bool(keep))
            .collect();
        let start: Vec<i64> = (0..d).map(|_| rng.random_range(-4..=4)).collect();
        region.insert(pt(&start));
        let cap = default_cap(dim(d), region.iter());
        let mut s = WalkState::starting_at(rule, RotorOrder::cyclic(dim(d)), pt(&start)).unwrap();
        let taken = s
            .run_until_exit(&region, cap)
            .map_err(|e| format!("trial {trial} (d={d}, |A|={}): {e}", region.len()))?;
        check(!region.contains(s.position()), || {
            format!("trial {trial}: still inside")
        })?;
        longest = longest.max(taken);
    }
    Ok(format!(
        "1000 trials, 0 cap exhaustions, longest exit {longest} steps"
    ))
}

fn direction_balance() -> Outcome {
    let order = RotorOrder::cyclic(dim(3));
    let mut sweep = ConjectureSweep::new(ConfigRule::toward_origin(dim(3)), order.clone(), 10)
        .unwrap()
        .with_instrumentation();
    sweep
        .run(&mut SweepControl::default())
        .map_err(|e| e.to_string())?;
    let state = sweep.state();
    let rows = balance_report(state).map_err(|e| e.to_string())?;
    let violations = rows.iter().filter(|r| !r.balanced).count();
    check(violations == 0, || format!("{violations} violations"))?;
    for r in &rows {
        let k: u64 = r.counts.iter().sum();
        let spread = r.counts.iter().max().unwrap() - r.counts.iter().min().unwrap();
        check(spread <= 1, || format!("{}: spread {spread}", r.site))?;
        let initial = state.rule().initial_label(&r.site);
        check(state.label_at(&r.site) == order.advance(initial, k), || {
            format!("{}: label is not the k-th successor", r.site)
        })?;
    }
    Ok(format!("{} sites, 0 violations", rows.len()))
}

fn engine_matches_naive() -> Outcome {
    let steps = 1_000_000u64;
    let mut s = WalkState::new(
        ConfigRule::toward_origin(dim(3)),
        RotorOrder::cyclic(dim(3)),
    )
    .unwrap()
    .with_dense_box(60);
    let mut n = NaiveWalk::new(3, &naive::toward_origin);
    for _ in 0..steps {
        s.step().map_err(|e| e.to_string())?;
        n.step();
    }
    check(s.position().coords() == n.pos.as_slice(), || {
        "positions differ".into()
    })?;
    check(
        (s.step_count(), s.origin_visits(), s.max_norm_seen())
            == (n.steps, n.origin_visits, n.max_norm as u64),
        || "counters differ".into(),
    )?;
    check(
        s.snapshot(LatticeBox::new(dim(3), 3)) == n.snapshot(3),
        || "B[0,3] snapshots differ".into(),
    )?;
    Ok(format!(
        "{steps} steps, position {} and counters agree",
        s.position()
    ))
}

fn stabilization() -> Outcome {
    let run = || {
        stabilization_study(
            ConfigRule::toward_origin(dim(3)),
            RotorOrder::cyclic(dim(3)),
            15,
            3,
            None,
        )
    };
    let rows = run().map_err(|e| e.to_string())?;
    let fixture = common::stabilization_fixture();
    check(rows.len() == fixture.len(), || {
        format!("{} rows", rows.len())
    })?;
    for (row, expected) in rows.iter().zip(&fixture) {
        check(row.stabilized_at == Some(*expected), || {
            format!("{}: {:?} vs {expected}", row.site, row.stabilized_at)
        })?;
    }
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = rotorlab(
            &["stabilize", "--n-max", "15", "--inner-radius", "3"],
            dir.path(),
        );
        check(out.status.code() == Some(0), || {
            "stabilize run failed".into()
        })?;
    }
    let csv_a = std::fs::read(a.path().join("stabilization.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("stabilization.csv")).unwrap();
    check(csv_a == csv_b, || {
        "stabilization.csv differs between runs".into()
    })?;
    let max = fixture.iter().max().unwrap();
    Ok(format!(
        "343 sites stabilize by n={max}; csv identical across runs"
    ))
}

fn srw_baseline() -> Outcome {
    let a = srw_comparison(dim(3), 20, 10_000, 42).map_err(|e| e.to_string())?;
    let b = srw_comparison(dim(3), 20, 10_000, 42).map_err(|e| e.to_string())?;
    check(a == b, || "not reproducible".into())?;
    check(a.mean_origin_visits < 121.0, || {
        format!("mean {}", a.mean_origin_visits)
    })?;
    check(
        a.mean_origin_visits == 1.5003 && (a.min, a.max) == (1, 9),
        || {
            format!(
                "mean {} min {} max {} differ from fixture",
                a.mean_origin_visits, a.min, a.max
            )
        },
    )?;
    Ok(format!("mean {} < 121, reproducible", a.mean_origin_visits))
}

fn aggregation_and_checkpoints() -> Outcome {
    let d2 = dim(2);
    for k in [0u64, 1, 10, 500] {
        let a = aggregate(k, ConfigRule::toward_origin(d2), RotorOrder::cyclic(d2))
            .map_err(|e| e.to_string())?;
        check(a.occupied().len() as u64 == k + 1, || {
            format!("k={k}: |A|={}", a.occupied().len())
        })?;
    }
    let shape = aggregate(500, ConfigRule::toward_origin(d2), RotorOrder::cyclic(d2))
        .unwrap()
        .shape_report();
    check(shape.sphericity >= common::SPHERICITY_THRESHOLD_T0, || {
        format!("sphericity {}", shape.sphericity)
    })?;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.json");
    let mut a = WalkState::new(
        ConfigRule::toward_origin(dim(3)),
        RotorOrder::cyclic(dim(3)),
    )
    .unwrap()
    .with_dense_box(8)
    .with_instrumentation();
    for _ in 0..12_345 {
        a.step().unwrap();
    }
    checkpoint::save(&a, &[], &path).map_err(|e| e.to_string())?;
    let mut b = checkpoint::load_expecting(&path, dim(3))
        .map_err(|e| e.to_string())?
        .state;
    for i in 0..10_000 {
        a.step().unwrap();
        b.step().unwrap();
        check(a.position() == b.position(), || {
            format!("diverged at step {i}")
        })?;
    }
    check(
        (a.step_count(), a.origin_visits(), a.max_norm_seen())
            == (b.step_count(), b.origin_visits(), b.max_norm_seen())
            && a.field().overlay_entries() == b.field().overlay_entries()
            && a.departures() == b.departures(),
        || "state differs after continuation".into(),
    )?;
    Ok(format!(
        "sizes k+1, sphericity {:.3} >= {}, checkpoint continuation identical",
        shape.sphericity,
        common::SPHERICITY_THRESHOLD_T0
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("step map agrees with g", step_map),
        (
            "origin visits 6n+1 to n=20 with resume",
            origin_visits_to_twenty,
        ),
        (
            "finite regions are left under the cap",
            finite_regions_are_left,
        ),
        ("direction balance", direction_balance),
        ("engine matches naive walk", engine_matches_naive),
        ("stabilization inside B[0,3]", stabilization),
        ("simple random walk baseline", srw_baseline),
        (
            "aggregation size, shape, checkpoints",
            aggregation_and_checkpoints,
        ),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
