use super::PlanarImage;

/// Pixel-center aligned bilinear resize with clamp-to-edge sampling.
pub fn resize_bilinear(img: &PlanarImage, width: usize, height: usize) -> PlanarImage {
    let xs = taps(img.width(), width);
    let ys = taps(img.height(), height);
    let sw = img.width();
    let mut data = Vec::with_capacity(width * height * img.channels());
    for plane in img.planes() {
        for &(y0, y1, ty) in &ys {
            let r0 = &plane[y0 * sw..(y0 + 1) * sw];
            let r1 = &plane[y1 * sw..(y1 + 1) * sw];
            for &(x0, x1, tx) in &xs {
                let top = r0[x0] + tx * (r0[x1] - r0[x0]);
                let bottom = r1[x0] + tx * (r1[x1] - r1[x0]);
                data.push(top + ty * (bottom - top));
            }
        }
    }
    PlanarImage::from_vec(width, height, img.channels(), img.space(), data)
        .expect("resize output shape is consistent")
}

fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let u = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = u.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, u - i0 as f64)
        })
        .collect()
}
