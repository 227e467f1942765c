//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use scenecomp::field::{render_ray, render_ray_backward, GridGrad, RadianceGrid, Ray, RayUpstream, SampleSpec};
use scenecomp::geometry::{bake_lattice, eval_sdf, marching_tetrahedra, SdfSource};
use scenecomp::guidance::{
    distill_gradient, schedule_at, solve_scale_bias, DiffusionStep, GuidanceSchedule, MockPredictor, PureNoise, Weighting,
};
use scenecomp::imaging::ImageBuf;
use scenecomp::layout::{bundled_landscapes, finite_diff_ascent, run_pso, AscentParams, PsoParams};
use scenecomp::metrics::{
    fid_monotonicity_report, frechet_distance, spearman, synthetic_corpus, DegradationKind, FeatureSet, PatchFeatures,
};
use scenecomp::render::{equirect_direction, EquirectCamera};
use scenecomp::rng::substream;
use scenecomp::{Color, Vec3};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn marching_tetrahedra_sphere() -> Check {
    let start = Instant::now();
    let src = SdfSource::sphere(Vec3::zeros(), 0.5);
    let lat = bake_lattice(&src, Vec3::repeat(-0.6), Vec3::repeat(0.6), [32; 3]).map_err(|e| e.to_string())?;
    let mesh = marching_tetrahedra(&lat, |_| Color::repeat(0.5));
    let elapsed = start.elapsed();
    let topo = mesh.topology();
    ensure(topo.is_closed(), "mesh is not closed")?;
    let chi = topo.euler_characteristic();
    ensure(chi == 2, format!("Euler characteristic {chi}"))?;
    let err = mesh.positions.iter().map(|p| eval_sdf(&src, p).abs()).fold(0.0, f64::max);
    let bound = 1.5 * lat.cell_diagonal();
    ensure(err <= bound, format!("max |sdf| {err:.4} > {bound:.4}"))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("{} triangles, closed, χ=2, max |sdf| {err:.4} ≤ {bound:.4}, {elapsed:.1?}", mesh.triangles.len()))
}

fn random_grid(rng: &mut impl Rng, res: usize, min_density: f64) -> RadianceGrid {
    let mut g = RadianceGrid::new(Vec3::repeat(-1.0), Vec3::repeat(1.0), [res; 3]).unwrap();
    for n in 0..g.node_count() {
        g.set_density(n, min_density + rng.random_range(0.0..3.0));
        g.set_color(n, Color::new(rng.random(), rng.random(), rng.random()));
    }
    g
}

fn random_ray(rng: &mut impl Rng) -> Ray {
    let o = Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), -2.0);
    let target = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    Ray::new(o, target - o, 0.0, 4.0)
}

fn volume_rendering() -> Check {
    let mut g = RadianceGrid::new(Vec3::repeat(-1.0), Vec3::repeat(1.0), [4; 3]).unwrap();
    g.fill(2.0, Color::repeat(0.3));
    let ray = Ray::new(Vec3::new(0.0, 0.0, -0.5), Vec3::z(), 0.0, 1.0);
    let t = render_ray(&g, &ray, &SampleSpec::midpoint(256), None).transmittance;
    let fog = (t - (-2.0f64).exp()).abs();
    ensure(fog < 1e-3, format!("T = {t}, |T − e⁻²| = {fog:e}"))?;
    let mut rng = substream(&[0xACC, 2]);
    let g = random_grid(&mut rng, 6, 0.0);
    let mut worst = 0.0f64;
    for i in 0..10_000u64 {
        let r = render_ray(&g, &random_ray(&mut rng), &SampleSpec::jittered(32, i), None);
        let total: f64 = r.samples.iter().map(|s| s.weight).sum::<f64>() + r.transmittance;
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst < 1e-6, format!("|Σw + T − 1| up to {worst:e}"))?;
    Ok(format!("|T − e⁻²| = {fog:.1e}; max |Σw + T − 1| over 10⁴ rays = {worst:.1e}"))
}

fn ray_loss(g: &RadianceGrid, ray: &Ray, spec: &SampleSpec, u: &RayUpstream) -> f64 {
    let r = render_ray(g, ray, spec, None);
    u.color.dot(&r.color) + u.disparity * r.disparity + u.transmittance * r.transmittance
}

fn analytic_gradients() -> Check {
    let mut rng = substream(&[0xACC, 3]);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let g = random_grid(&mut rng, 4, 0.1);
        let ray = random_ray(&mut rng);
        let spec = SampleSpec::jittered(24, case);
        let u = RayUpstream {
            color: Color::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            disparity: rng.random_range(-1.0..1.0),
            transmittance: rng.random_range(-1.0..1.0),
        };
        let mut grad = GridGrad::zeros_like(&g);
        render_ray_backward(&g, &ray, &spec, None, &u, &mut grad);
        let n = (0..g.node_count())
            .max_by(|&a, &b| grad.density[a].abs().total_cmp(&grad.density[b].abs()))
            .unwrap();
        let central = |f: &dyn Fn(&mut RadianceGrid, f64)| {
            let (mut gp, mut gm) = (g.clone(), g.clone());
            f(&mut gp, h);
            f(&mut gm, -h);
            (ray_loss(&gp, &ray, &spec, &u) - ray_loss(&gm, &ray, &spec, &u)) / (2.0 * h)
        };
        let d0 = g.density()[n];
        let fd = central(&|gr, e| gr.set_density(n, d0 + e));
        worst = worst.max((fd - grad.density[n]).abs() / fd.abs().max(1e-8));
        let c0 = g.colors()[n];
        let fd = central(&|gr, e| gr.set_color(n, c0 + Color::new(e, 0.0, 0.0)));
        if fd.abs() > 1e-6 {
            worst = worst.max((fd - grad.color[n].x).abs() / fd.abs());
        }
    }
    ensure(worst <= 1e-3, format!("worst relative error {worst:e}"))?;
    Ok(format!("100 cases, worst relative error {worst:.1e}"))
}

fn equirect_camera() -> Check {
    let cam = EquirectCamera::new(Vec3::zeros(), 512, 256).map_err(|e| e.to_string())?;
    let (dt, dp) = (PI / 256.0, 2.0 * PI / 512.0);
    let total: f64 = (0..256).map(|v| cam.angles(0, v).0.sin() * dt * dp * 512.0).sum();
    let rel = (total - 4.0 * PI).abs() / (4.0 * PI);
    ensure(rel < 0.005, format!("solid angle off by {:.3}%", 100.0 * rel))?;
    ensure(equirect_direction(0.0, 0.0) == Vec3::y(), "north pole is not +y")?;
    ensure((equirect_direction(PI, 0.0) + Vec3::y()).norm() < 1e-15, "south pole is not −y")?;
    ensure((equirect_direction(PI / 2.0, 0.0) - Vec3::x()).norm() < 1e-15, "equator at φ=0 is not +x")?;
    ensure((equirect_direction(PI / 2.0, PI / 2.0) - Vec3::z()).norm() < 1e-15, "equator at φ=π/2 is not +z")?;
    Ok(format!("256×512 solid angle within {:.4}% of 4π; poles ±y, equator +x/+z", 100.0 * rel))
}

fn scale_bias() -> Check {
    let mut rng = substream(&[0xACC, 5]);
    let (mut exact, mut oracle) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (s, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let i: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
        let p: Vec<f64> = i.iter().map(|v| s * v + b).collect();
        let fit = solve_scale_bias(&i, &p).map_err(|e| e.to_string())?;
        exact = exact.max((fit.s - s).abs()).max((fit.b - b).abs());

        let n = rng.random_range(2..200);
        let i: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = DMatrix::from_fn(n, 2, |r, c| if c == 0 { i[r] } else { 1.0 });
        let sol = a.svd(true, true).solve(&DVector::from_vec(p.clone()), 1e-14)?;
        let fit = solve_scale_bias(&i, &p).map_err(|e| e.to_string())?;
        oracle = oracle.max((fit.s - sol[0]).abs()).max((fit.b - sol[1]).abs());
    }
    ensure(exact < 1e-10, format!("affine recovery error {exact:e}"))?;
    ensure(oracle < 1e-8, format!("oracle disagreement {oracle:e}"))?;
    // slope as printed, missing the (Σ I)(Σ Î) cross term
    let (i, p) = ([1.0, 2.0, 3.0], [3.0, 5.0, 7.0]);
    let printed = 3.0 * (1.0 * 3.0 + 2.0 * 5.0 + 3.0 * 7.0) / (3.0 * (1.0 + 4.0 + 9.0) - 36.0);
    let s = solve_scale_bias(&i, &p).map_err(|e| e.to_string())?.s;
    ensure(printed == 17.0 && (s - 2.0).abs() < 1e-12, format!("counterexample: printed {printed}, solver {s}"))?;
    Ok(format!("affine {exact:.1e}, vs SVD {oracle:.1e}; printed slope 17 vs minimizer {s}"))
}

fn pso_vs_ascent() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for b in bundled_landscapes() {
        let meta = b.landscape.metadata(&b.bounds);
        ensure(meta.basin_fraction < 0.2, format!("{}: basin fraction {}", b.name, meta.basin_fraction))?;
        let mut pso = 0;
        for seed in 0..50u64 {
            let r = run_pso(&b.landscape, &b.bounds, &PsoParams::default(), seed).map_err(|e| e.to_string())?;
            ensure(
                r.trace.windows(2).all(|w| w[1].gbest_score >= w[0].gbest_score),
                format!("{}: gbest trace decreases (seed {seed})", b.name),
            )?;
            pso += b.landscape.in_global_basin(&r.best) as usize;
        }
        let mut fd = 0;
        for seed in 0..50u64 {
            let mut rng = substream(&[0xFD, seed]);
            let x0: Vec<f64> = (0..b.bounds.dim()).map(|d| b.bounds.lower[d] + b.bounds.range(d) * rng.random::<f64>()).collect();
            let r = finite_diff_ascent(&b.landscape, &b.bounds, &x0, &AscentParams::default()).map_err(|e| e.to_string())?;
            fd += b.landscape.in_global_basin(&r.config) as usize;
        }
        ensure(pso > fd, format!("{}: PSO {pso}/50 vs ascent {fd}/50", b.name))?;
        lines.push(format!("{} {pso}/50 vs {fd}/50", b.name));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("{}; {elapsed:.1?}", lines.join(", ")))
}

fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> ImageBuf {
    ImageBuf::from_vec(w, h, 3, (0..w * h * 3).map(|_| rng.random()).collect())
}

fn distillation() -> Check {
    let mut rng = substream(&[0xACC, 7]);
    let x = random_image(&mut rng, 4, 4);
    let target = random_image(&mut rng, 4, 4);
    let mock = MockPredictor::new(target.clone(), 2.0);
    let n = 10_000;
    let d = x.data.len();
    let (mut sum, mut sum_sq) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..n {
        let step = DiffusionStep::sample(&mut rng, &x, 0.02, 0.98, &Weighting::OneMinusAlphaBar);
        let g = distill_gradient(&mock, &PureNoise, &x, "p", &step).map_err(|e| e.to_string())?;
        for (k, v) in g.data.iter().enumerate() {
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let mut worst_z = 0.0f64;
    for k in 0..d {
        let mean = sum[k] / n as f64;
        let var = (sum_sq[k] / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let dev = (mean - (x.data[k] - target.data[k])).abs();
        ensure(dev <= 5.0 * se + 1e-12, format!("component {k}: deviation {dev:e} vs SE {se:e}"))?;
        worst_z = worst_z.max(dev / se.max(1e-300));
    }
    let mut y = random_image(&mut rng, 16, 16);
    let target = random_image(&mut rng, 16, 16);
    let mock = MockPredictor::new(target.clone(), 1.0);
    for _ in 0..500 {
        let step = DiffusionStep::sample(&mut rng, &y, 0.02, 0.98, &Weighting::default());
        let g = distill_gradient(&mock, &PureNoise, &y, "p", &step).map_err(|e| e.to_string())?;
        y.data.iter_mut().zip(&g.data).for_each(|(v, gv)| *v -= 0.02 * gv);
    }
    let l2 = y.l2_distance(&target);
    ensure(l2 < 1e-2, format!("500 steps leave L2 {l2:e}"))?;
    Ok(format!("MC mean within {worst_z:.2} SE of x − x*; 16×16 descent L2 {l2:.1e}"))
}

fn schedules() -> Check {
    let s = GuidanceSchedule::default();
    ensure(!schedule_at(&s, 0).pano_enabled, "pano on at iteration 0")?;
    ensure(!schedule_at(&s, 16_000).pano_enabled, "pano on at iteration 16000")?;
    for (iter, t) in [(5_000, 0.5), (12_500, 0.4), (20_000, 0.3)] {
        let got = schedule_at(&s, iter).t_max;
        ensure((got - t).abs() < 1e-12, format!("t_max({iter}) = {got}"))?;
    }
    let due: Vec<u64> = (0..=s.total_iters).filter(|&i| schedule_at(&s, i).pso_due).collect();
    ensure(
        !due.is_empty() && due.iter().all(|i| i % 3000 == 0) && due.len() as u64 == s.total_iters / 3000,
        format!("layout phases at {due:?}"),
    )?;
    Ok(format!("pano off at 0 and 16000; t_max 0.5/0.4/0.3; layout phases at {due:?}"))
}

fn frechet_harness() -> Check {
    let mut rng = substream(&[0xACC, 9]);
    let feats: Vec<Vec<f64>> = (0..40).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
    let set = FeatureSet::new(feats).map_err(|e| e.to_string())?;
    let own = frechet_distance(&set.mean, &set.cov, &set.mean, &set.cov).map_err(|e| e.to_string())?;
    ensure(own.abs() < 1e-9, format!("self-distance {own:e}"))?;
    let eye = DMatrix::identity(1, 1);
    let unit = frechet_distance(&DVector::zeros(1), &eye, &DVector::from_element(1, 1.0), &eye).map_err(|e| e.to_string())?;
    ensure((unit - 1.0).abs() < 1e-12, format!("N(0,1) vs N(1,1) = {unit}"))?;
    let levels = [0.0, 0.02, 0.05, 0.1, 0.2];
    let r = fid_monotonicity_report(&synthetic_corpus(24, 32, 0), DegradationKind::GaussianNoise, &levels, 0, &PatchFeatures)
        .map_err(|e| e.to_string())?;
    let rho = spearman(&r.levels, &r.distances);
    ensure(r.monotone && rho == 1.0, format!("distances {:?}, ρ = {rho}", r.distances))?;
    Ok(format!(
        "self {own:.1e}, unit shift {unit}; noise distances {:?} (ρ = 1)",
        r.distances.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>()
    ))
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = common::golden_pipeline(dir.path());
    let bad = common::check_golden(dir.path(), &files);
    ensure(bad.is_empty(), format!("differs from golden: {bad:?}"))?;
    Ok(format!("{} outputs match the committed golden files byte for byte", files.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 10] = [
        ("marching tetrahedra sphere", marching_tetrahedra_sphere),
        ("volume rendering", volume_rendering),
        ("analytic gradients", analytic_gradients),
        ("equirectangular camera", equirect_camera),
        ("scale/bias solver", scale_bias),
        ("PSO vs finite-difference ascent", pso_vs_ascent),
        ("distillation machinery", distillation),
        ("schedules", schedules),
        ("Fréchet/degradation harness", frechet_harness),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
