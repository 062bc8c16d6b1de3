//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use charmer_cli::commands::{holonomy_cmd, orbit_cmd, turns_cmd};
use charmer_cli::scene::Scene;
use charmer_core::bivalued::{fiber_solve, horb_bivalued, lift_bivalued, BivaluedConfig};
use charmer_core::config::Configuration;
use charmer_core::curve::{CircleArc, Curve, FnCurve, Reparameterized, SharedCurve, Smoothness};
use charmer_core::error::CharmerError;
use charmer_core::mobius::{boost, MobiusElement};
use charmer_core::orbit::{connectivity_probe, random_rotation, PROBE_GAP};
use charmer_core::solver::{check_horizontal, horizontal_lift, linmap_matrix_check, LiftOptions, LiftResult};
use charmer_core::sphere::SpherePoint;
use charmer_core::word::{boost_commutator, close_word, gradient_flow_curve, Profile, WordCurve};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn scene(name: &str) -> Scene {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenes", name].iter().collect();
    Scene::load(&path).expect("shipped scene loads")
}

fn v2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_vec(vec![x, y])
}

fn figure_circle() -> CircleArc {
    CircleArc::planar_loop([2.1875, 0.0], [2.0, 0.0], 1.0).unwrap()
}

fn tent() -> BivaluedConfig {
    let p = SpherePoint::from_slice(&[1.0, 1.0]).unwrap();
    let q = SpherePoint::from_slice(&[1.0, -1.0]).unwrap();
    BivaluedConfig::new(p, q, 2f64.sqrt(), 2f64.sqrt()).unwrap()
}

fn endpoint_exactness() -> Outcome {
    let half = Configuration::half_circle().endpoint();
    let e1 = (half - v2(2.0, 0.0)).amax();
    let tent = tent().to_configuration().endpoint();
    check(
        e1 < 1e-10 && tent == v2(2.0, 0.0),
        format!("|f(half circle) - (2,0)| = {e1:.1e}, f(tent) = ({:?}, {:?})", tent[0], tent[1]),
    )
}

fn gram_matrix() -> Outcome {
    let m = Configuration::half_circle().gram_defect();
    let e1 = (m.matrix() - DMatrix::identity(2, 2) * (PI / 2.0)).amax();
    let mut exact = true;
    for d in 2..=4 {
        let l = 1.7;
        let m = Configuration::constant(l, SpherePoint::basis(d, 0)).unwrap().gram_defect();
        let mut want = DMatrix::identity(d, d) * l;
        want[(0, 0)] = 0.0;
        exact &= *m.matrix() == want;
    }
    check(e1 < 1e-8 && exact, format!("half circle off by {e1:.1e}; constant exact: {exact}"))
}

fn random_group(d: usize, rng: &mut ChaCha8Rng) -> MobiusElement {
    let r = random_rotation(d, rng);
    let v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)).normalize();
    boost(&v, rng.gen_range(0.0..1.5)).compose(&MobiusElement::rotation(&r).unwrap())
}

fn random_polygon(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Configuration {
    let values = (0..n)
        .map(|_| SpherePoint::new(DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))).unwrap())
        .collect();
    let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    Configuration::polygonal(&lengths, values).unwrap()
}

fn linmap() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        for _ in 0..20 {
            let z0 = random_polygon(d, 5, &mut rng);
            let g = random_group(d, &mut rng);
            worst = worst.max(linmap_matrix_check(&z0, &g).map_err(err)?);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-5 && elapsed < Duration::from_secs(10),
        format!("40 pairs, worst entry {worst:.1e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn lift_with_step(h: f64) -> Result<LiftResult, String> {
    let opts = LiftOptions { step: h, ..LiftOptions::default() };
    horizontal_lift(&Configuration::half_circle(), &figure_circle(), &opts).map_err(err)
}

fn lift_defect_and_order() -> Outcome {
    let lift = lift_with_step(1e-3)?;
    let defect = lift.max_defect();
    // the order is read at coarse steps, where the error is far above rounding
    let h0 = 0.05;
    let g: Vec<MobiusElement> = [h0, h0 / 2.0, h0 / 4.0]
        .iter()
        .map(|h| lift_with_step(*h).map(|l| l.final_group().clone()))
        .collect::<Result<_, _>>()?;
    let e1 = g[0].distance(&g[1]);
    let e2 = g[1].distance(&g[2]);
    let order = (e1 / e2).log2();
    check(
        defect < 1e-6 && order >= 3.5,
        format!("max defect {defect:.1e} at h = 1e-3; order {order:.2} from h = {h0}, {}, {}", h0 / 2.0, h0 / 4.0),
    )
}

fn gradient_flow() -> Outcome {
    let z0 = Configuration::half_circle();
    let v = v2(0.6, -0.8);
    let lambda = 0.9;
    let curve = gradient_flow_curve(&z0, v.clone(), lambda).map_err(err)?;
    let lift = horizontal_lift(&z0, &curve, &LiftOptions::default()).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (t, z) in lift.times.iter().zip(&lift.config_path).step_by(50) {
        let want = z0.act(&boost(&v, lambda * t));
        worst = worst.max(z.sup_distance(&want).map_err(err)?);
    }
    let end = lift.final_config().sup_distance(&z0.act(&boost(&v, lambda))).map_err(err)?;
    worst = worst.max(end);
    check(worst < 1e-6, format!("sup distance to the boosted snake {worst:.1e}"))
}

fn horizontality() -> Outcome {
    let lift = lift_with_step(1e-3)?;
    let r = check_horizontal(&lift).map_err(err)?;
    let mut bent = lift.clone();
    for (t, z) in bent.times.iter().zip(bent.config_path.iter_mut()) {
        *z = z.act(&MobiusElement::planar_rotation(5.0 * t));
    }
    let rb = check_horizontal(&bent).map_err(err)?;
    check(r < 1e-4 && rb > 0.1, format!("residual {r:.1e}; vertical perturbation {rb:.2}"))
}

fn equal_pattern(z: &Configuration) -> Vec<Vec<bool>> {
    let vals: Vec<&SpherePoint> = z.weighted_values().map(|(_, p)| p).collect();
    vals.iter().map(|a| vals.iter().map(|b| a == b).collect()).collect()
}

fn invariance() -> Outcome {
    let opts = LiftOptions::default();
    let unit = |x: f64, y: f64| SpherePoint::from_slice(&[x, y]).unwrap();
    let (a, b) = (unit(1.0, 0.3), unit(-0.2, 1.0));
    let values = vec![a.clone(), b.clone(), a, b, unit(-1.0, -0.4), unit(0.3, -1.0), unit(0.7, 0.7)];
    let periodic = Configuration::polygonal(&[0.3, 0.3, 0.3, 0.3, 0.8, 0.8, 0.8], values).unwrap();
    let base = periodic.endpoint();
    let room = periodic.length() - 2.0 * periodic.sedentariness() - base.norm();
    if room <= 0.0 {
        return Err(format!("fixture snout {:.3} outside its ball", base.norm()));
    }
    let r = 0.3 * room;
    let lp = CircleArc::loop_through(&base, base.normalize(), v2(-base[1], base[0]).normalize(), r).map_err(err)?;
    let lift = horizontal_lift(&periodic, &lp, &opts).map_err(err)?;
    let (sed0, k0, pat0) = (periodic.sedentariness(), periodic.spherical_dimension(1e-8), equal_pattern(&periodic));
    let mut kept = true;
    for z in &lift.config_path {
        kept &= z.sedentariness() == sed0 && z.spherical_dimension(1e-8) == k0 && equal_pattern(z) == pat0;
    }
    let half = Configuration::half_circle();
    let hl = lift_with_step(1e-3)?;
    for z in hl.config_path.iter().step_by(100) {
        kept &= z.sedentariness() == half.sedentariness() && z.spherical_dimension(1e-8) == 1;
    }
    let base: SharedCurve = Arc::new(figure_circle());
    let squared = Reparameterized::squared(base.clone());
    let direct = hl.final_config().clone();
    let re = horizontal_lift(&half, &squared, &opts).map_err(err)?;
    let drift = re.final_config().sup_distance(&direct).map_err(err)?;
    check(
        kept && drift < 1e-6,
        format!("sed/spdim/pattern kept: {kept}; u² reparameterization differs by {drift:.1e}"),
    )
}

fn near_return() -> Outcome {
    let start = Instant::now();
    let summary = turns_cmd(&scene("figure_a.toml"), 350, Some(200), None).map_err(err)?;
    let elapsed = start.elapsed();
    let (n, dmin) = summary.argmin.ok_or("no argmin")?;
    check(
        n.abs_diff(326) <= 5 && summary.pronounced(0.1) && elapsed < Duration::from_secs(300),
        format!(
            "n* = {n}, distance {dmin:.2e}, max {:.2e}, {:.1} s",
            summary.max_distance,
            elapsed.as_secs_f64()
        ),
    )
}

fn tangent_circle(kappa: f64, lp: f64, lq: f64) -> (BivaluedConfig, FnCurve) {
    let x0 = lp - lq;
    let rad = 1.0 / kappa;
    let centre = x0 - rad;
    let ang = move |t: f64| (t - 0.5) / rad;
    let curve = FnCurve::new(
        2,
        move |t| v2(centre + rad * ang(t).cos(), rad * ang(t).sin()),
        move |t| v2(-ang(t).sin(), ang(t).cos()),
        Smoothness::CInfinity,
    )
    .with_acceleration(move |t| v2(-ang(t).cos() / rad, -ang(t).sin() / rad));
    let (p, q) = fiber_solve(lp, lq, &curve.eval(0.0), 1.0).unwrap();
    (BivaluedConfig::new(p, q, lp, lq).unwrap(), curve)
}

fn bivalued() -> Outcome {
    let s = scene("bivalued.toml");
    let summary = holonomy_cmd(&s, None).map_err(err)?;
    let z0 = &summary.z0;
    let conj = z0.map_values(|p| SpherePoint::new(v2(p.coords()[0], -p.coords()[1])).unwrap());
    let to_conj = summary.z1.sup_distance(&conj).map_err(err)?;
    let orbit = horb_bivalued(&tent(), 16, 0);
    let (lp, lq) = (2.0, 1.0);
    let required = (lp - lq) / (lp + lq) / (lp + lq);
    let (c, curve) = tangent_circle(required, lp, lq);
    let admitted = lift_bivalued(&c, &curve, &LiftOptions::default()).map_err(err)?.crossings.len() == 1;
    let rejected = [required + 0.1, required - 0.1].iter().all(|k| {
        let (c, curve) = tangent_circle(*k, lp, lq);
        matches!(lift_bivalued(&c, &curve, &LiftOptions::default()), Err(CharmerError::InadmissibleCrossing { .. }))
    });
    check(
        to_conj < 1e-8 && orbit.components == 2 && admitted && rejected,
        format!(
            "distance to conjugate {to_conj:.1e}; {} components; κ = required admitted: {admitted}; ±0.1 rejected: {rejected}",
            orbit.components
        ),
    )
}

fn orbit_rank() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (file, want) in [("origin_half_circle.toml", 1), ("half_circle_3d.toml", 3), ("polygon_3d.toml", 3)] {
        let s = orbit_cmd(&scene(file), None).map_err(err)?;
        let rank = s.rank.as_ref().map(|r| r.rank).unwrap_or(0);
        let fit = s.max_fit_residual.unwrap_or(f64::INFINITY);
        ok &= rank == want && s.expected_dim == want && fit < 1e-6;
        parts.push(format!("(d,k)=({},{}) rank {rank} fit {fit:.1e}", s.report.as_ref().map_or(0, |r| r.base.dim()), s.spdim));
    }
    check(ok, parts.join("; "))
}

fn nomadic_witness() -> Outcome {
    let z0 = Configuration::half_circle();
    let word = close_word(&boost_commutator(&v2(0.5, 0.0), &v2(0.0, 0.5), 0.7), &z0).map_err(err)?;
    let curve = WordCurve::new(z0.clone(), word.clone(), Profile::Smooth).map_err(err)?;
    let z = z0.act(curve.element());
    let moved = z.sup_distance(&z0).map_err(err)?;
    let path = connectivity_probe(&z0, &z, &word, &LiftOptions::default()).map_err(err)?;
    let complete = path.s.first() == Some(&1.0)
        && path.s.last() == Some(&0.0)
        && path.max_gap <= PROBE_GAP
        && path.points[0].sup_distance(&z).map_err(err)? < 1e-6;
    check(
        complete && moved > 1e-3,
        format!("holonomy moves z0 by {moved:.2}; {} witness points, largest gap {:.2e}", path.points.len(), path.max_gap),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("endpoint exactness", endpoint_exactness),
        ("gram matrix", gram_matrix),
        ("linmap verification", linmap),
        ("lift defect and order", lift_defect_and_order),
        ("gradient-flow consistency", gradient_flow),
        ("horizontality", horizontality),
        ("invariance suite", invariance),
        ("326-turn near-return", near_return),
        ("bivalued holonomy and gate", bivalued),
        ("orbit rank and rotation fit", orbit_rank),
        ("nomadic connectivity witness", nomadic_witness),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
