//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use dynpaint::compositor::{
    diffuse_field, render, render_with_threads, shade_diffuse, shade_global, shade_specular, GlobalFields, Scene,
    ShadeParams, ShadowMode,
};
use dynpaint::demo::{checker, relief_depth, stripes};
use dynpaint::illum::{clamp_and_step, LightSpec, RampParams, StepType};
use dynpaint::image::Image;
use dynpaint::optics::{
    fresnel_physical, refract_eye, refract_eye_artistic, transmission, warp_background, warp_offset, OpticsParams,
    RefractionMode,
};
use dynpaint::shadow::{shadow_ratio_depth, ShadowParams};
use dynpaint::shape::{decode_normal_map, depth_to_shape_with, procedural_hemisphere, GradientSign, ShapeField};
use dynpaint::vec3::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_unit(rng: &mut impl Rng, positive_z: bool) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if let Some(u) = v.try_normalize(1e-3) {
            if v.length() <= 1.0 && (!positive_z || u.z > 0.0) {
                return u;
            }
        }
    }
}

fn within(elapsed: Duration, limit_ms: u128) -> bool {
    elapsed.as_millis() < limit_ms
}

fn planar_shadow_limit() -> Outcome {
    let start = Instant::now();
    let n = 128;
    let (d, a) = (0.05, 0.001);
    let shape = depth_to_shape_with(&Image::filled(n, n, 1, 0.5), 0.1, GradientSign::Inward).unwrap();
    let params = ShadowParams { d, a, max_steps: 256, ramp: RampParams::identity() };
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for k in 0..9 {
        let theta = (10.0 * k as f64).to_radians();
        let phi = (40.0 * k as f64).to_radians();
        let l = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let light = LightSpec::Directional { direction: l, color: [1.0; 3] };
        // The under-surface part of the ray runs from below the pixel to where it
        // re-emerges; a pixel is interior when that segment stays on the canvas.
        let reach = d / l.z;
        let margin = 1.0 / n as f64;
        let inside = |u: f64| u >= margin && u <= 1.0 - margin;
        for y in 0..n {
            for x in 0..n {
                let (sx, sy) = shape.pixel_position(x, y);
                if !(inside(sx + l.x * reach) && inside(sy + l.y * reach)) {
                    continue;
                }
                let t = shadow_ratio_depth(&shape, &light, x, y, &params);
                worst = worst.max((t - theta.cos()).abs());
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.02 && within(elapsed, 10_000),
        format!("max |d/r - cos| = {worst:.5} over {checked} interior samples (<= 0.02), {elapsed:.2?} (< 10 s)"),
    )
}

fn smooth_field(rng: &mut impl Rng, n: usize) -> Image {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9), rng.gen_range(0.08..0.2), rng.gen_range(0.3..1.0)))
        .collect();
    let raw: Vec<f64> = (0..n * n)
        .map(|i| {
            let (u, v) = (((i % n) as f64 + 0.5) / n as f64, ((i / n) as f64 + 0.5) / n as f64);
            bumps.iter().map(|&(cx, cy, s, amp)| amp * (-((u - cx).powi(2) + (v - cy).powi(2)) / (2.0 * s * s)).exp()).sum()
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    Image::new(n, n, 1, raw.iter().map(|&h| (h / max) as f32).collect()).unwrap()
}

/// Independent dense march: bilinear heights read straight from the height
/// array, every midpoint sample counted until the ray leaves the canvas or
/// climbs above everything.
fn dense_oracle(shape: &ShapeField, l: Vec3, x: usize, y: usize, d: f64, a: f64) -> f64 {
    let (w, h) = shape.dims();
    let heights = shape.heights().unwrap();
    let top = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let height = |sx: f64, sy: f64| -> f64 {
        let fx = (sx * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = (sy * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let hv = |i: usize, j: usize| heights[j * w + i];
        (hv(x0, y0) * (1.0 - tx) + hv(x1, y0) * tx) * (1.0 - ty) + (hv(x0, y1) * (1.0 - tx) + hv(x1, y1) * tx) * ty
    };
    let n = shape.normal(x, y);
    let ps = Vec3::new((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64, heights[y * w + x]);
    let base = ps - n * d + l * d;
    let mut r = d;
    let mut k = 0usize;
    loop {
        let p = base + l * ((k as f64 + 0.5) * a);
        if p.z > top || !(0.0..1.0).contains(&p.x) || !(0.0..1.0).contains(&p.y) {
            break;
        }
        if height(p.x, p.y) > p.z {
            r += a;
        }
        k += 1;
    }
    d / r
}

fn shadow_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let n = 64;
    let d = 0.02;
    let params = ShadowParams { d, a: d / 8.0, max_steps: 256, ramp: RampParams::identity() };
    let mut worst_fraction = 1.0f64;
    let mut fractions = Vec::new();
    for _ in 0..5 {
        let shape = depth_to_shape_with(&smooth_field(&mut rng, n), 0.1, GradientSign::Outward).unwrap();
        let elevation = rng.gen_range(30.0f64..75.0).to_radians();
        let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
        let l = Vec3::new(elevation.cos() * azimuth.cos(), elevation.cos() * azimuth.sin(), elevation.sin());
        let light = LightSpec::Directional { direction: l, color: [1.0; 3] };
        let mut agree = 0usize;
        for y in 0..n {
            for x in 0..n {
                let t = shadow_ratio_depth(&shape, &light, x, y, &params);
                let oracle = dense_oracle(&shape, l, x, y, d, d / 200.0);
                if (t - oracle).abs() <= 0.05 {
                    agree += 1;
                }
            }
        }
        let fraction = agree as f64 / (n * n) as f64;
        worst_fraction = worst_fraction.min(fraction);
        fractions.push(format!("{:.3}", fraction));
    }
    let elapsed = start.elapsed();
    outcome(
        worst_fraction >= 0.95 && within(elapsed, 30_000),
        format!("agreement within 0.05 per field [{}] (>= 0.95), {elapsed:.2?} (< 30 s)", fractions.join(", ")),
    )
}

fn fresnel_endpoints() -> Outcome {
    let start = Instant::now();
    let normal = fresnel_physical(1.0, 1.5, 0.5);
    let normal_ok = (normal - 0.04).abs() <= 1e-6;
    let grazing_ok = [0.6, 1.0, 5.0 / 3.0].iter().all(|&eta| fresnel_physical(0.0, eta, 0.5) == 1.0);
    let matched = [0.0, 0.5, 1.0].iter().map(|&sp| fresnel_physical(1.0, 1.0, sp)).fold(0.0f64, f64::max);
    let elapsed = start.elapsed();
    outcome(
        normal_ok && grazing_ok && matched == 0.0 && within(elapsed, 1_000),
        format!("F(1, 1.5) = {normal:.9}; F(0, eta) == 1: {grazing_ok}; F(1, 1) = {matched}; {elapsed:.2?} (< 1 s)"),
    )
}

fn refraction_identities() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let flat = ShapeField::from_normals(n, n, vec![Vec3::Z; n * n]);
    let bg = stripes(n, 7);
    let mut warp_ok = true;
    for eta in [0.6, 1.0, 1.667] {
        let optics = OpticsParams { eta, ..OpticsParams::default() };
        let (out, tir) = warp_background(&flat, &bg, &optics, 0.0);
        warp_ok &= out == bg && tir.iter().all(|&t| !t);
    }
    let artistic = OpticsParams { refraction_mode: RefractionMode::Artistic, mu: 0.0, ..OpticsParams::default() };
    warp_ok &= warp_background(&flat, &bg, &artistic, 0.0).0 == bg;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let normal = random_unit(&mut rng, true);
        let t = refract_eye(normal, 1.0).unwrap();
        worst = worst.max((t - Vec3::new(0.0, 0.0, -1.0)).length());
    }
    let elapsed = start.elapsed();
    outcome(
        warp_ok && worst <= 1e-6 && within(elapsed, 5_000),
        format!("flat warps bit-identical: {warp_ok}; max |T(eta=1) + z| = {worst:.2e} (<= 1e-6); {elapsed:.2?} (< 5 s)"),
    )
}

fn artistic_refraction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut jump = 0.0f64;
    for _ in 0..1000 {
        let v = random_unit(&mut rng, false);
        let normal = random_unit(&mut rng, false);
        let (Ok(up), Ok(down)) = (refract_eye_artistic(v, normal, 1e-6), refract_eye_artistic(v, normal, -1e-6)) else {
            continue;
        };
        jump = jump.max((up - down).length());
    }

    let size = 128;
    let shape = decode_normal_map(&procedural_hemisphere(size, 0.8)).unwrap();
    let mut monotone = true;
    let mut sampled = 0;
    let radius = 0.8 * size as f64 / 2.0;
    while sampled < 50 {
        let (x, y) = (rng.gen_range(0..size), rng.gen_range(0..size));
        let (dx, dy) = (x as f64 + 0.5 - size as f64 / 2.0, y as f64 + 0.5 - size as f64 / 2.0);
        let r = (dx * dx + dy * dy).sqrt();
        if r < 2.0 || r > radius - 1.0 {
            continue;
        }
        sampled += 1;
        let mut prev = -1.0f64;
        for mu in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let optics = OpticsParams {
                refraction_mode: RefractionMode::Artistic,
                mu,
                max_offset: size as f64 / 4.0,
                ..OpticsParams::default()
            };
            let t = transmission(shape.normal(x, y), &optics).unwrap();
            let (ox, oy) = warp_offset(t, optics.d_bg, (size, size), optics.max_offset);
            let magnitude = ox.hypot(oy);
            monotone &= magnitude >= prev;
            prev = magnitude;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        jump <= 1e-4 && monotone && within(elapsed, 5_000),
        format!("max |T(+1e-6) - T(-1e-6)| = {jump:.2e} (<= 1e-4); offsets non-decreasing in mu: {monotone}; {elapsed:.2?} (< 5 s)"),
    )
}

fn fixture_scene(n: usize, ks: f32) -> Scene {
    let shape = decode_normal_map(&procedural_hemisphere(n, 0.7)).unwrap();
    Scene::new(
        shape,
        Image::from_fn(n, n, 3, |x, y| [x as f32 / n as f32, 0.3, y as f32 / n as f32]),
        Image::from_fn(n, n, 3, |x, y| [0.9, (x + y) as f32 / (2 * n) as f32, 0.2]),
        checker(n, 8, [1.0, 1.0, 1.0], [0.1, 0.2, 0.3]),
        stripes(n, 9),
        Some(Image::filled(n, n, 1, ks)),
        None,
    )
    .unwrap()
}

fn barycentric_algebra() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let scene = fixture_scene(n, 0.0);
    let lights = [
        LightSpec::directional(Vec3::new(0.3, -0.5, 0.8), [1.0, 0.6, 0.3]).unwrap(),
        LightSpec::point(Vec3::new(0.2, 0.7, 0.6), [0.4, 0.4, 1.0]),
    ];
    let params = ShadeParams::default();
    let omega = diffuse_field(&scene, &lights, &params).unwrap();
    let omega0 = omega.omega0();
    let partition = omega.omega1.iter().zip(&omega0).all(|(w1, w0)| (0..3).all(|c| w0[c] + w1[c] == 1.0));

    let mut ones = omega.clone();
    ones.omega1.iter_mut().for_each(|w| *w = [1.0; 3]);
    let mut zeros = omega.clone();
    zeros.omega1.iter_mut().for_each(|w| *w = [0.0; 3]);
    let diffuse_ok = shade_diffuse(&scene, &ones).unwrap() == scene.i1 && shade_diffuse(&scene, &zeros).unwrap() == scene.i0;

    let base = shade_diffuse(&scene, &omega).unwrap();
    let s_field: Vec<f32> = (0..n * n).map(|i| (i % 17) as f32 / 16.0).collect();
    let specular_ok = shade_specular(&base, &scene, &s_field).unwrap() == base;

    let glass = fixture_scene(n, 1.0);
    let black = Image::filled(n, n, 3, 0.0);
    let mut fields = GlobalFields {
        specular: vec![0.0; n * n],
        mirror: glass.env.clone(),
        refraction: glass.bg.clone(),
        fresnel: vec![0.0; n * n],
        tir: vec![false; n * n],
    };
    let identity = RampParams::identity();
    let refraction_only = shade_global(&black, &glass, &fields, &identity).unwrap() == glass.bg;
    fields.fresnel = vec![1.0; n * n];
    let mirror_only = shade_global(&black, &glass, &fields, &identity).unwrap() == glass.env;
    let global_opaque = shade_global(&base, &scene, &fields, &identity).unwrap() == base;
    let elapsed = start.elapsed();
    let pass = partition && diffuse_ok && specular_ok && refraction_only && mirror_only && global_opaque;
    outcome(
        pass && within(elapsed, 5_000),
        format!(
            "partition {partition}, diffuse endpoints {diffuse_ok}, specular ks=0 {specular_ok}, \
             global F=0 {refraction_only}, F=1 {mirror_only}, ks=0 {global_opaque}; {elapsed:.2?} (< 5 s)"
        ),
    )
}

fn clamp_and_step_contract() -> Outcome {
    let start = Instant::now();
    let gooch = clamp_and_step(0.0, &RampParams::new(-1.0, 1.0, StepType::Linear));
    let mut monotone = true;
    let mut fixed = true;
    let mut slopes = Vec::new();
    let eps = 1e-4;
    for (step, bound) in [(StepType::SmoothStep, 3e-4), (StepType::SmootherStep, 1e-8)] {
        let p = RampParams::new(0.0, 1.0, step);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let v = clamp_and_step(-0.5 + 2.0 * i as f64 / 10_000.0, &p);
            monotone &= v >= prev;
            prev = v;
        }
        fixed &= clamp_and_step(0.0, &p) == 0.0 && clamp_and_step(0.5, &p) == 0.5 && clamp_and_step(1.0, &p) == 1.0;
        let lo = (clamp_and_step(eps, &p) - clamp_and_step(0.0, &p)).abs() / eps;
        let hi = (clamp_and_step(1.0, &p) - clamp_and_step(1.0 - eps, &p)).abs() / eps;
        slopes.push((step, lo.max(hi), bound));
    }
    let slopes_ok = slopes.iter().all(|&(_, s, b)| s <= b);
    let slope_text: Vec<String> = slopes.iter().map(|(st, s, b)| format!("{st:?} {s:.3e} (<= {b:.0e})")).collect();
    let elapsed = start.elapsed();
    outcome(
        gooch == 0.5 && monotone && fixed && slopes_ok && within(elapsed, 1_000),
        format!(
            "gooch(0) = {gooch}; monotone {monotone}; fixes 0, 1/2, 1: {fixed}; endpoint slopes {}; {elapsed:.2?} (< 1 s)",
            slope_text.join(", ")
        ),
    )
}

fn relief_scene(n: usize) -> Scene {
    let shape = depth_to_shape_with(&relief_depth(n), 0.1, GradientSign::Outward).unwrap();
    let c = n as f64 / 2.0;
    Scene::new(
        shape,
        Image::filled(n, n, 3, 0.05),
        Image::filled(n, n, 3, 0.9),
        checker(n, 8, [1.0, 1.0, 1.0], [0.2, 0.2, 0.2]),
        stripes(n, 11),
        Some(Image::from_fn(n, n, 1, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            [if dx * dx + dy * dy < 0.16 * c * c { 0.6 } else { 0.0 }; 3]
        })),
        None,
    )
    .unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn determinism_and_performance() -> Outcome {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let scene = relief_scene(512);
    let lights = [LightSpec::directional(Vec3::new(0.5, 0.3, 0.81), [1.0; 3]).unwrap()];
    let params = ShadeParams {
        shadow_enabled: true,
        shadow_mode: ShadowMode::CosTheta,
        shadow: ShadowParams { max_steps: 256, ..ShadowParams::default() },
        env_blur: 1.0,
        ..ShadeParams::default()
    };
    let _ = render_with_threads(&scene, &lights, &params, 1).unwrap();
    let (single, t1) = timed(|| render_with_threads(&scene, &lights, &params, 1).unwrap());
    let (multi, t8) = timed(|| render_with_threads(&scene, &lights, &params, 8).unwrap());
    let identical = single == multi;

    let small = relief_scene(256);
    let plain = ShadeParams { shadow_enabled: false, ..params };
    let _ = render(&small, &lights, &plain).unwrap();
    let (_, t_small) = timed(|| render(&small, &lights, &plain).unwrap());
    outcome(
        identical && within(t1, 2_000) && within(t8, 500) && within(t_small, 50),
        format!(
            "1 vs 8 workers bit-identical: {identical}; 512^2 shadows 1 worker {t1:.2?} (< 2 s), \
             8 workers {t8:.2?} (< 500 ms); 256^2 no shadows {t_small:.2?} (< 50 ms); {cores} core(s) available"
        ),
    )
}

fn fresnel_sweep_brightness() -> Outcome {
    let start = Instant::now();
    let n = 128;
    let shape = decode_normal_map(&procedural_hemisphere(n, 0.8)).unwrap();
    let scene = Scene::new(
        shape,
        Image::filled(n, n, 3, 0.0),
        Image::filled(n, n, 3, 0.0),
        Image::filled(n, n, 3, 1.0),
        Image::filled(n, n, 3, 0.0),
        Some(Image::filled(n, n, 1, 1.0)),
        None,
    )
    .unwrap();
    let lights = [LightSpec::directional(Vec3::new(1.0, 0.0, 0.3), [1.0; 3]).unwrap()];
    let etas = [0.6, 0.8, 1.0, 4.0 / 3.0, 5.0 / 3.0];
    let means: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            let mut params = ShadeParams::default();
            params.optics.eta = eta;
            render(&scene, &lights, &params).unwrap().mean()
        })
        .collect();
    let min_at_one = means.iter().enumerate().all(|(i, &m)| i == 2 || m > means[2]);
    let shape_ok = means[0] > means[1] && means[1] > means[2] && means[3] > means[2] && means[4] > means[3];
    let elapsed = start.elapsed();
    let text: Vec<String> = etas.iter().zip(&means).map(|(e, m)| format!("{e:.3}: {m:.4}")).collect();
    outcome(
        min_at_one && shape_ok && within(elapsed, 10_000),
        format!("mean brightness by eta [{}]; {elapsed:.2?} (< 10 s)", text.join(", ")),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "planar shadow limit", planar_shadow_limit),
        (2, "shadow march vs dense oracle", shadow_oracle_equivalence),
        (3, "fresnel endpoints", fresnel_endpoints),
        (4, "refraction identities", refraction_identities),
        (5, "artistic refraction continuity and monotonicity", artistic_refraction),
        (6, "barycentric algebra", barycentric_algebra),
        (7, "clamp and step contract", clamp_and_step_contract),
        (8, "determinism and performance", determinism_and_performance),
        (9, "fresnel sweep brightness", fresnel_sweep_brightness),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        let result = check();
        println!("acceptance {id} {}: {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        if !result.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
