//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skymatte::config::Preset;
use skymatte::confidence::{inference_confidence, InferenceConfidenceParams};
use skymatte::density::{sky_probability, DensityParams};
use skymatte::driver::{self, upsample_matte, with_threads, BenchParams};
use skymatte::effects::{self, apply_chain, Effect};
use skymatte::imagecore::{resize_bilinear, ColorSpace, PlanarImage};
use skymatte::io::{self, BitDepth, Transfer};
use skymatte::metrics::{self, evaluate};
use skymatte::refine::{refine_annotation, Annotation};
use skymatte::synth::make_synthetic_scene;
use skymatte::trimap::{Label, Trimap};
use skymatte::wgf::{
    guided_coefficients, modified_guided_filter, smooth_upsample, solve_image_ldl3,
    upsample_stages, GuidedFilterParams,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Gaussian elimination with partial pivoting on a dense system.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn c1_ldl() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1000;
    let mut mats = Vec::new();
    let mut rhs = Vec::new();
    for _ in 0..n {
        let m: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = (0..3).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
            }
        }
        mats.push(a);
        rhs.push(std::array::from_fn::<f64, 3, _>(|_| rng.random_range(-1.0..1.0)));
    }
    let upper = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut adata = vec![0.0; 6 * n];
    let mut bdata = vec![0.0; 3 * n];
    for k in 0..n {
        for (c, &(i, j)) in upper.iter().enumerate() {
            adata[c * n + k] = mats[k][i][j];
        }
        for c in 0..3 {
            bdata[c * n + k] = rhs[k][c];
        }
    }
    let a = e2s(PlanarImage::from_vec(n, 1, 6, ColorSpace::Generic, adata))?;
    let b = e2s(PlanarImage::from_vec(n, 1, 3, ColorSpace::Generic, bdata))?;
    let t = Instant::now();
    let x = e2s(solve_image_ldl3(&a, &b))?;
    let secs = t.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let want = gauss_solve(mats[k].iter().map(|r| r.to_vec()).collect(), rhs[k].to_vec());
        for c in 0..3 {
            worst = worst.max((x.plane(c)[k] - want[c]).abs());
        }
    }
    check(worst <= 1e-6, format!("max abs error {worst:e}"))?;
    check(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("1000 systems, max abs error {worst:.1e}, {:.2} ms", secs * 1e3))
}

fn yuv_noise(w: usize, h: usize, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PlanarImage::from_fn(w, h, 3, ColorSpace::Yuv, |_, _, c| {
        let u: f64 = rng.random();
        if c == 0 { u } else { u - 0.5 }
    })
    .unwrap()
}

fn c2_affine() -> Outcome {
    let reference = yuv_noise(512, 512, 2);
    let (a, beta) = ([0.3, 0.2, -0.25], 0.3);
    let p = e2s(PlanarImage::from_fn(512, 512, 1, ColorSpace::Mask, |x, y, _| {
        let i = reference.pixel3(x, y);
        a[0] * i[0] + a[1] * i[1] + a[2] * i[2] + beta
    }))?;
    let c = e2s(PlanarImage::filled(512, 512, &[1.0], ColorSpace::Mask))?;
    let mut parts = Vec::new();
    for s in [8, 64] {
        let params = e2s(GuidedFilterParams::new(s, 1e-6, 1e-6))?;
        let y = e2s(modified_guided_filter(&reference, &p, &c, &params))?;
        let (_, mae) = e2s(metrics::continuous_metrics(&y, &p))?;
        check(mae < 1e-3, format!("s = {s}: MAE {mae:e}"))?;
        parts.push(format!("s={s} MAE {mae:.1e}"));
    }
    Ok(parts.join(", "))
}

/// Per-pixel weights of the tent footprint of low-res sample `j`, computed
/// from scratch: virtual positions clamp to the image edge.
fn tent_weights(n: usize, s: usize, j: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let center = (j as f64 + 0.5) * s as f64 - 0.5;
    let reach = 2 * s as i64 + 2;
    for i in (center as i64 - reach)..=(center as i64 + reach) {
        let t = (1.0 - (i as f64 - center).abs() / s as f64).max(0.0);
        w[i.clamp(0, n as i64 - 1) as usize] += t;
    }
    w
}

fn c3_degradation() -> Outcome {
    let (w, h) = (16, 16);
    let reference = yuv_noise(w, h, 3);
    let p = e2s(PlanarImage::from_fn(w, h, 1, ColorSpace::Mask, |x, y, _| {
        ((x * 7 + y * 3) % 11) as f64 / 10.0
    }))?;
    let c = e2s(PlanarImage::filled(w, h, &[1.0], ColorSpace::Mask))?;
    let eps = 0.1;
    let mut worst: f64 = 0.0;
    for s in [1, 2, 4] {
        let params = e2s(GuidedFilterParams::new(s, eps, eps))?;
        let coeffs = e2s(guided_coefficients(&reference, &p, &c, &params))?;
        for jy in 0..h.div_ceil(s) {
            let wy = tent_weights(h, s, jy);
            for jx in 0..w.div_ceil(s) {
                let wx = tent_weights(w, s, jx);
                // Weighted least squares for [a; b]:
                // sum w (I I^T) a + sum w I b + W eps^2 a = sum w I p, etc.
                let mut m = vec![vec![0.0; 4]; 4];
                let mut r = vec![0.0; 4];
                for y in 0..h {
                    for x in 0..w {
                        let wt = wx[x] * wy[y] * c.get(x, y, 0);
                        if wt == 0.0 {
                            continue;
                        }
                        let i = reference.pixel3(x, y);
                        let v = [i[0], i[1], i[2], 1.0];
                        for a in 0..4 {
                            for b in 0..4 {
                                m[a][b] += wt * v[a] * v[b];
                            }
                            r[a] += wt * v[a] * p.get(x, y, 0);
                        }
                    }
                }
                let total = m[3][3];
                for (k, row) in m.iter_mut().enumerate().take(3) {
                    row[k] += total * eps * eps;
                }
                let sol = gauss_solve(m, r);
                for k in 0..3 {
                    worst = worst.max((coeffs.a.get(jx, jy, k) - sol[k]).abs());
                }
                worst = worst.max((coeffs.b.get(jx, jy, 0) - sol[3]).abs());
            }
        }
    }
    check(worst <= 1e-5, format!("max coefficient error {worst:e}"))?;
    Ok(format!("16x16, s in {{1, 2, 4}}, max coefficient error {worst:.1e}"))
}

/// Dense matrix of one linear-interpolation stage, from the tent formula.
fn stage_matrix(n: usize, f: usize) -> Vec<Vec<f64>> {
    (0..n * f)
        .map(|i| {
            let u = ((i as f64 + 0.5) / f as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            (0..n).map(|j| (1.0 - (u - j as f64).abs()).max(0.0)).collect()
        })
        .collect()
}

fn impulse_1d(n: usize, j: usize, stages: &[usize]) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|k| (k == j) as u8 as f64).collect();
    let mut len = n;
    for &f in stages {
        let m = stage_matrix(len, f);
        v = m.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        len *= f;
    }
    v
}

fn c4_upsample() -> Outcome {
    let expected = [(8, vec![2, 2, 2]), (16, vec![4, 2, 2]), (48, vec![4, 4, 3]), (64, vec![4, 4, 4])];
    let mut worst_ramp: f64 = 0.0;
    let mut worst_imp: f64 = 0.0;
    for (s, stages) in expected {
        check(upsample_stages(s) == stages, format!("s = {s}: stages {:?}", upsample_stages(s)))?;
        let (lw, lh) = (9, 7);
        let k = e2s(PlanarImage::filled(lw, lh, &[0.3721], ColorSpace::Generic))?;
        let up = e2s(smooth_upsample(&k, s))?;
        check(up.data().iter().all(|&v| v == 0.3721), format!("s = {s}: constant not exact"))?;

        let ramp = e2s(PlanarImage::from_fn(lw, lh, 1, ColorSpace::Generic, |x, y, _| 0.1 + 0.05 * x as f64 - 0.03 * y as f64))?;
        let up = e2s(smooth_upsample(&ramp, s))?;
        for y in 0..lh * s {
            let v = (y as f64 + 0.5) / s as f64 - 0.5;
            if !(1.0..=(lh - 2) as f64).contains(&v) {
                continue;
            }
            for x in 0..lw * s {
                let u = (x as f64 + 0.5) / s as f64 - 0.5;
                if !(1.0..=(lw - 2) as f64).contains(&u) {
                    continue;
                }
                worst_ramp = worst_ramp.max((up.get(x, y, 0) - (0.1 + 0.05 * u - 0.03 * v)).abs());
            }
        }

        let (jx, jy) = (4, 3);
        let imp = e2s(PlanarImage::from_fn(lw, lh, 1, ColorSpace::Generic, |x, y, _| (x == jx && y == jy) as u8 as f64))?;
        let up = e2s(smooth_upsample(&imp, s))?;
        let kx = impulse_1d(lw, jx, &stages);
        let ky = impulse_1d(lh, jy, &stages);
        for y in 0..lh * s {
            for x in 0..lw * s {
                worst_imp = worst_imp.max((up.get(x, y, 0) - ky[y] * kx[x]).abs());
            }
        }
    }
    check(worst_ramp <= 1e-6, format!("ramp error {worst_ramp:e}"))?;
    check(worst_imp <= 1e-9, format!("impulse error {worst_imp:e}"))?;
    Ok(format!("stages 8:2,2,2 16:4,2,2 48:4,4,3 64:4,4,4; ramp error {worst_ramp:.1e}, impulse error {worst_imp:.1e}"))
}

fn c5_density() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w, h) = (16, 16);
    let img = e2s(PlanarImage::from_fn(w, h, 3, ColorSpace::Rgb, |_, y, c| {
        let base = if y < 8 { [0.5, 0.62, 0.9][c] } else { [0.3, 0.25, 0.1][c] };
        base + rng.random_range(-0.05..0.05)
    }))?;
    let labels: Vec<Label> = (0..w * h)
        .map(|i| match (i / w, i % 3) {
            (y, _) if y < 5 => Label::Sky,
            (y, _) if y >= 12 => Label::NotSky,
            (_, 0) => Label::Sky,
            _ => Label::Undetermined,
        })
        .collect();
    let t = e2s(Trimap::new(w, h, labels))?;
    let sky: Vec<[f64; 3]> = (0..w * h)
        .filter(|&i| t.labels()[i] == Label::Sky)
        .map(|i| img.pixel3(i % w, i / w))
        .collect();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for normalize_kernel in [true, false] {
        let sigma = 0.05;
        let params = DensityParams {
            sigma,
            n_samples: w * h,
            normalize_kernel,
            ..Default::default()
        };
        let p = e2s(sky_probability(&img, &t, &params))?;
        let scale = if normalize_kernel {
            1.0
        } else {
            1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).powf(1.5)
        };
        for y in 0..h {
            for x in 0..w {
                if t.get(x, y) != Label::Undetermined {
                    continue;
                }
                let q = img.pixel3(x, y);
                let mut total = 0.0;
                for s in &sky {
                    let d2: f64 = (0..3).map(|c| (q[c] - s[c]) * (q[c] - s[c])).sum();
                    total += scale * (-d2 / (2.0 * sigma * sigma)).exp();
                }
                let want = total / sky.len() as f64;
                worst = worst.max((p.get(x, y, 0) - want).abs());
                peak = peak.max(want);
            }
        }
    }
    check(worst <= 1e-9, format!("max error {worst:e}"))?;
    Ok(format!("16x16, exhaustive sampling, both kernel scalings, max error {worst:.1e} (peak {peak:.1})"))
}

fn c6_confidence() -> Outcome {
    let params = InferenceConfidenceParams::default();
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let p = e2s(PlanarImage::mask(grid.len(), 1, grid.clone()))?;
    let c = e2s(inference_confidence(&p, &params))?;
    let conf = |v: f64| {
        let m = PlanarImage::mask(1, 1, vec![v]).unwrap();
        inference_confidence(&m, &params).unwrap().data()[0]
    };
    for (i, &v) in grid.iter().enumerate() {
        if (0.3..=0.5).contains(&v) {
            check(c.data()[i] == 0.01, format!("C({v}) = {}", c.data()[i]))?;
        }
    }
    check(conf(0.0) == 1.0 && conf(1.0) == 1.0, "endpoints")?;
    check((conf(0.75) - 0.8).abs() < 1e-12, format!("C(0.75) = {}", conf(0.75)))?;
    for &d in &grid[1..] {
        let sky = conf(0.5 + d * 0.5);
        let ground = conf(0.3 - d * 0.3);
        // The two ramps coincide under the defaults; allow for rounding.
        check(sky >= ground - 1e-12, format!("asymmetry fails at delta {d}: {sky} < {ground}"))?;
    }
    Ok("floor on [0.3, 0.5], C(0)=C(1)=1, C(0.75)=0.8, asymmetry on 1001 points".into())
}

fn c7_refinement() -> Outcome {
    let mut parts = Vec::new();
    for preset in [Preset::PaperInternal, Preset::Ade20kDeGf] {
        for seed in [1, 2, 3] {
            let scene = e2s(make_synthetic_scene(512, 384, seed))?;
            let (_, raw) = e2s(metrics::continuous_metrics(&scene.annotation, &scene.alpha))?;
            let ann = Annotation::Binary {
                mask: scene.annotation.clone(),
                extra_undetermined: None,
            };
            let out = e2s(refine_annotation(&scene.image, &ann, &preset.refine()))?;
            let (_, mae) = e2s(metrics::continuous_metrics(&out, &scene.alpha))?;
            check(mae < 0.05 && mae < raw, format!("{preset} seed {seed}: MAE {mae:.4} vs raw {raw:.4}"))?;
            if seed == 1 {
                parts.push(format!("{preset}: MAE {mae:.4} < raw {raw:.4}"));
            }
        }
    }
    Ok(format!("512x384 seeds 1-3; {}", parts.join("; ")))
}

fn c8_metrics() -> Outcome {
    let m = |w: usize, h: usize, v: Vec<f64>| PlanarImage::mask(w, h, v).unwrap();
    // Binarized: identity, inversion, hand confusion.
    let half = m(4, 2, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    check(e2s(metrics::binarized_metrics(&half, &half))? == (1.0, 0.0), "identity")?;
    let inv = e2s(half.map(|v| 1.0 - v))?;
    check(e2s(metrics::binarized_metrics(&inv, &half))? == (0.0, 1.0), "inversion")?;
    let gt = m(4, 4, [[1.0; 4], [1.0, 1.0, 1.0, 0.0], [0.0; 4], [0.0; 4]].concat());
    let pred = m(4, 4, vec![0.9, 0.5, 0.7, 1.0, 0.6, 0.8, 0.2, 0.55, 0.1, 0.0, 0.49, 0.3, 0.0, 0.0, 0.0, 0.5]);
    check(e2s(metrics::binarized_metrics(&pred, &gt))? == (6.0 / 9.0, 3.0 / 16.0), "confusion example")?;
    // Continuous.
    let g = m(2, 2, vec![0.5; 4]);
    let (r, a) = e2s(metrics::continuous_metrics(&e2s(g.map(|v| v + 0.1))?, &g))?;
    check((r - 0.1).abs() < 1e-12 && (a - 0.1).abs() < 1e-12, "offset example")?;
    let (r, a) = e2s(metrics::continuous_metrics(&m(2, 2, vec![0.5, 0.7, 0.3, 0.9]), &g))?;
    check((a - 0.2).abs() < 1e-12 && (r - 0.06f64.sqrt()).abs() < 1e-12, "residual example")?;
    // Boundary loss.
    let bl = e2s(metrics::boundary_loss(&m(3, 1, vec![0.0, 1.0, 1.0]), &m(3, 1, vec![0.0, 0.0, 1.0])))?;
    check((bl - (2.0f64 / 3.0).sqrt()).abs() < 1e-12, format!("BL example {bl}"))?;
    let scene = e2s(make_synthetic_scene(64, 48, 8))?;
    let shifted = e2s(scene.alpha.map(|v| v * 0.8 + 0.1))?;
    let base = e2s(scene.alpha.map(|v| v * 0.8))?;
    check(e2s(metrics::boundary_loss(&shifted, &base))? < 1e-12, "BL under constant offset")?;
    // JSD.
    let one = |v: f64| m(1, 1, vec![v]);
    let j = e2s(metrics::jsd(&one(0.0), &one(1.0)))?;
    check((j - std::f64::consts::LN_2).abs() < 1e-4, "JSD disjoint")?;
    let hb = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
    let j1 = e2s(metrics::jsd(&one(0.25), &one(0.75)))?;
    let j2 = e2s(metrics::jsd(&one(0.75), &one(0.25)))?;
    check((j1 - (std::f64::consts::LN_2 - hb(0.25))).abs() < 1e-9 && j1 == j2, "JSD example/symmetry")?;
    let r1 = e2s(evaluate(&scene.annotation, &scene.alpha))?;
    let r2 = e2s(evaluate(&scene.alpha, &scene.annotation))?;
    check(r1 == r2, "symmetry on synthetic scene")?;
    // Growing noise never lowers RMSE or MAE.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let noise: Vec<f64> = (0..scene.alpha.pixel_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut last = (0.0, 0.0);
    for k in 0..=10 {
        let amp = k as f64 * 0.05;
        let noisy = m(64, 48, scene.alpha.data().iter().zip(&noise).map(|(v, n)| v + amp * n).collect());
        let cur = e2s(metrics::continuous_metrics(&noisy, &scene.alpha))?;
        check(cur.0 >= last.0 && cur.1 >= last.1, format!("noise amplitude {amp} lowered error"))?;
        last = cur;
    }
    Ok("six metrics match examples; BL offset-invariant; JSD symmetric; noise monotone".into())
}

fn c9_effects() -> Outcome {
    let scene = e2s(make_synthetic_scene(96, 64, 9))?;
    let (img, alpha) = (&scene.image, &scene.alpha);
    let same = e2s(effects::darken_sky(img, alpha, 0.5))?;
    check(same == *img, "b_d = 0.5 changed values")?;
    let dir = e2s(tempfile::tempdir())?;
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    e2s(io::write_png(&a, img, BitDepth::Sixteen, Transfer::Encoded))?;
    e2s(io::write_png(&b, &same, BitDepth::Sixteen, Transfer::Encoded))?;
    check(std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap(), "b_d = 0.5 changed PNG bytes")?;

    let zero = e2s(PlanarImage::filled(96, 64, &[0.0], ColorSpace::Mask))?;
    let all = [
        Effect::Denoise { sky: scene.sky.clone(), t_d: 0.8 },
        Effect::Darken { b_d: 0.2 },
        Effect::Contrast { b_c: 0.3, t_c: 0.085 },
        Effect::DualWb { gains_fg: [1.0; 3], gains_sky: [1.3, 1.0, 0.7] },
    ];
    for e in &all {
        check(e2s(e.apply(img, &zero))? == *img, format!("{} not identity at alpha = 0", e.name()))?;
    }
    check(e2s(apply_chain(img, &zero, &all))? == *img, "chain not identity at alpha = 0")?;

    let mut gap: f64 = 0.0;
    for b_c in [0.1, 0.25, 0.5, 0.9] {
        let curve = skymatte::confidence::BiasCurve::new(b_c).unwrap();
        for t_c in [0.0, 0.085, 0.5, 0.95] {
            let below = effects::contrast_curve(t_c - 1e-15, &curve, t_c);
            let at = effects::contrast_curve(t_c, &curve, t_c);
            gap = gap.max((at - below).abs());
        }
    }
    check(gap < 1e-9, format!("contrast gap {gap:e}"))?;

    let px = |v: [f64; 3]| PlanarImage::from_vec(1, 1, 3, ColorSpace::Rgb, v.to_vec()).unwrap();
    let a1 = |v: f64| PlanarImage::mask(1, 1, vec![v]).unwrap();
    let (fg, sky) = (px([0.2, 0.4, 0.6]), px([0.7, 0.1, 0.9]));
    let lo = e2s(effects::composite_denoised(&fg, &sky, &a1(0.8 - 1e-6), 0.8))?;
    let hi = e2s(effects::composite_denoised(&fg, &sky, &a1(1.0), 0.8))?;
    check(lo == fg && hi == sky, "denoise endpoints")?;
    let wb = e2s(effects::apply_dual_wb(&px([0.5; 3]), &a1(0.5), [1.0; 3], [1.2, 1.0, 0.8]))?;
    let err = wb.pixel3(0, 0).iter().zip([0.55, 0.5, 0.45]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(err <= 1e-9, format!("dual WB error {err:e}"))?;
    Ok(format!("b_d=0.5 byte-identical; alpha=0 identity; contrast gap {gap:.1e}; endpoints exact; WB error {err:.1e}"))
}

fn c10_performance() -> Outcome {
    let scene = e2s(make_synthetic_scene(1024, 768, 10))?;
    let probability = resize_bilinear(&scene.alpha, 256, 256);
    let params = Preset::PipelineS64.upsample();
    e2s(upsample_matte(&probability, &scene.image, &params))?;
    let mut times = Vec::new();
    for _ in 0..7 {
        let t = Instant::now();
        let m = e2s(upsample_matte(&probability, &scene.image, &params))?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        check(m.width() == 1024 && m.height() == 768, "output size")?;
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    let rows = e2s(driver::cmd_bench(
        &BenchParams {
            sizes: vec![(1024, 768)],
            s_values: vec![64],
            repetitions: 1,
            probability_size: 256,
            seed: 10,
        },
        &Default::default(),
    ))?;
    let solve = rows.iter().find(|r| r.stage == "solve").ok_or("no solve row")?;
    let bound = (1024 / 64) * (768 / 64);
    check(solve.linear_systems <= bound, format!("{} systems > {bound}", solve.linear_systems))?;
    check(median < 500.0, format!("median {median:.1} ms"))?;
    Ok(format!("1024x768 s=64 median {median:.1} ms; {} linear systems (bound {bound})", solve.linear_systems))
}

fn c11_determinism() -> Outcome {
    let run = || -> Result<Vec<Vec<u8>>, String> {
        let scene = e2s(make_synthetic_scene(192, 144, 11))?;
        let ann = Annotation::Binary { mask: scene.annotation.clone(), extra_undetermined: None };
        let refined = e2s(refine_annotation(&scene.image, &ann, &Preset::Ade20kDeGf.refine()))?;
        let low = resize_bilinear(&scene.alpha, 48, 36);
        let up = e2s(upsample_matte(&low, &scene.image, &Preset::PipelineS64.upsample()))?;
        let graded = e2s(apply_chain(
            &scene.image,
            &up,
            &[Effect::Darken { b_d: 0.3 }, Effect::DualWb { gains_fg: [1.0; 3], gains_sky: [1.1, 1.0, 0.9] }],
        ))?;
        let report = e2s(evaluate(&refined, &scene.alpha))?;
        let bits = |img: &PlanarImage| img.data().iter().flat_map(|v| v.to_bits().to_le_bytes()).collect::<Vec<u8>>();

        let dir = e2s(tempfile::tempdir())?;
        let d = dir.path();
        e2s(driver::cmd_synth(d, 96, 72, 11))?;
        let manifest = d.join(driver::synth_files::MANIFEST);
        let rep = e2s(driver::cmd_refine(&manifest, &Default::default(), Transfer::Encoded))?;
        check(rep.exit_code() == 0, "refine command failed")?;
        let file = |name: &str| std::fs::read(d.join(name)).unwrap();
        Ok(vec![
            bits(&refined),
            bits(&up),
            bits(&graded),
            serde_json::to_vec(&report).unwrap(),
            file("refined.pfm"),
            file(driver::synth_files::IMAGE),
        ])
    };
    let one = e2s(with_threads(Some(1), run))??;
    let four = e2s(with_threads(Some(4), run))??;
    check(one == four, "outputs differ between 1 and 4 threads")?;
    Ok("refine, upsample, grade, eval, synth and refine command bit-identical at 1 and 4 threads".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("LDL solver oracle equivalence", c1_ldl),
        ("guided-filter affine recovery", c2_affine),
        ("degradation to classic coefficients", c3_degradation),
        ("smooth upsample linear precision", c4_upsample),
        ("density estimation oracle", c5_density),
        ("confidence function", c6_confidence),
        ("end-to-end refinement quality", c7_refinement),
        ("metric property suite", c8_metrics),
        ("effects identities", c9_effects),
        ("performance", c10_performance),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
