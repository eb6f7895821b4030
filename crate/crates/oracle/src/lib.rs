//! Brute-force reference implementations.
//!
//! Everything here works on raw row-major `&[f64]` buffers and recomputes
//! every statistic by looping over pixels, with no summed-area tables and no
//! shared code with `svf-core`. Tests compare the fast paths against these.

/// Half-open window `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Window {
    fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn pixels(self) -> impl Iterator<Item = (usize, usize)> {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }
}

/// Intersection of the signed window `[x0, x1) x [y0, y1)` with the image.
pub fn clip(x0: i64, y0: i64, x1: i64, y1: i64, w: usize, h: usize) -> Option<Window> {
    let cx0 = x0.clamp(0, w as i64) as usize;
    let cy0 = y0.clamp(0, h as i64) as usize;
    let cx1 = x1.clamp(0, w as i64) as usize;
    let cy1 = y1.clamp(0, h as i64) as usize;
    (cx0 < cx1 && cy0 < cy1).then_some(Window {
        x0: cx0,
        y0: cy0,
        x1: cx1,
        y1: cy1,
    })
}

pub fn sum(data: &[f64], w: usize, win: Window) -> f64 {
    win.pixels().map(|(x, y)| data[y * w + x]).sum()
}

pub fn mean(data: &[f64], w: usize, win: Window) -> f64 {
    sum(data, w, win) / win.area() as f64
}

/// Two-pass population variance.
pub fn variance(data: &[f64], w: usize, win: Window) -> f64 {
    let m = mean(data, w, win);
    win.pixels()
        .map(|(x, y)| {
            let d = data[y * w + x] - m;
            d * d
        })
        .sum::<f64>()
        / win.area() as f64
}

/// Whole window followed by the four overlapping corner quadrants
/// (top-left, top-right, bottom-left, bottom-right), all clipped.
pub fn patch_windows(cx: usize, cy: usize, r: usize, w: usize, h: usize) -> [Window; 5] {
    let (cx, cy, r) = (cx as i64, cy as i64, r as i64);
    let c = |x0, y0, x1, y1| clip(x0, y0, x1, y1, w, h).expect("centre lies in every window");
    [
        c(cx - r, cy - r, cx + r + 1, cy + r + 1),
        c(cx - r, cy - r, cx + 1, cy + 1),
        c(cx, cy - r, cx + r + 1, cy + 1),
        c(cx - r, cy, cx + 1, cy + r + 1),
        c(cx, cy, cx + r + 1, cy + r + 1),
    ]
}

/// Per-patch gain `A_k` and offset `B_k` for every pixel-centred patch.
pub fn preservation(data: &[f64], w: usize, h: usize, r: usize, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gain = vec![0.0; w * h];
    let mut offset = vec![0.0; w * h];
    for cy in 0..h {
        for cx in 0..w {
            let wins = patch_windows(cx, cy, r, w, h);
            let var_whole = variance(data, w, wins[0]);
            let quads: Vec<f64> = wins[1..].iter().map(|&q| variance(data, w, q)).collect();
            let vmin = quads.iter().cloned().fold(f64::INFINITY, f64::min);
            let vmax = quads.iter().cloned().fold(var_whole, f64::max);
            let a = (vmax / (vmin + eps)).min(1.0);
            gain[cy * w + cx] = a;
            offset[cy * w + cx] = (1.0 - a) * mean(data, w, wins[0]);
        }
    }
    (gain, offset)
}

/// Average of `values` over all in-bounds centres within Chebyshev
/// distance `r` of each pixel.
pub fn box_mean(values: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let win = clip(
                x as i64 - r as i64,
                y as i64 - r as i64,
                (x + r + 1) as i64,
                (y + r + 1) as i64,
                w,
                h,
            )
            .unwrap();
            out[y * w + x] = mean(values, w, win);
        }
    }
    out
}

/// Full sub-window variance filter by direct loops.
pub fn filter(data: &[f64], w: usize, h: usize, r: usize, eps: f64) -> Vec<f64> {
    let (gain, offset) = preservation(data, w, h, r, eps);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut a_sum = 0.0;
            let mut b_sum = 0.0;
            let mut n = 0usize;
            for ky in y.saturating_sub(r)..(y + r + 1).min(h) {
                for kx in x.saturating_sub(r)..(x + r + 1).min(w) {
                    a_sum += gain[ky * w + kx];
                    b_sum += offset[ky * w + kx];
                    n += 1;
                }
            }
            let n = n as f64;
            out[y * w + x] = (a_sum / n) * data[y * w + x] + b_sum / n;
        }
    }
    out
}

/// Mean SSIM over every fully contained `win x win` window, population
/// statistics, evaluated window by window.
#[allow(clippy::too_many_arguments)]
pub fn ssim(
    a: &[f64],
    b: &[f64],
    w: usize,
    h: usize,
    win: usize,
    k1: f64,
    k2: f64,
    range: f64,
) -> f64 {
    let c1 = (k1 * range).powi(2);
    let c2 = (k2 * range).powi(2);
    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - win {
        for x in 0..=w - win {
            let wnd = Window {
                x0: x,
                y0: y,
                x1: x + win,
                y1: y + win,
            };
            let ma = mean(a, w, wnd);
            let mb = mean(b, w, wnd);
            let mut va = 0.0;
            let mut vb = 0.0;
            let mut cov = 0.0;
            for (px, py) in wnd.pixels() {
                let da = a[py * w + px] - ma;
                let db = b[py * w + px] - mb;
                va += da * da;
                vb += db * db;
                cov += da * db;
            }
            let (va, vb, cov) = (va / n, vb / n, cov / n);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}
