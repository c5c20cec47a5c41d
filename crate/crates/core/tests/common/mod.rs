// Shared helpers for the integration and acceptance targets.
#![allow(dead_code)]

use rand::Rng;
use resteer_core::resonance::{Resonance, ResonanceModel, ResonatorBank};
use resteer_core::simplicial::{PointPair, SimplicialMap};

/// Measures the -60 dB time of a single resonator's impulse response by a
/// least-squares line through the dB values of the envelope's local peaks.
pub fn measured_t60(freq: f64, t60: f64, fs: f64) -> f64 {
    let model = ResonanceModel::new("t", vec![Resonance::new(freq, 1.0, t60).unwrap()], None).unwrap();
    let mut bank = ResonatorBank::from_model(&model, fs).unwrap();
    let n = (fs * t60 * 1.5) as usize;
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    let y = bank.process(&x);
    let mut pts = Vec::new();
    for i in 1..n - 1 {
        let (a, b, c) = (y[i - 1].abs(), y[i].abs(), y[i + 1].abs());
        if b > a && b >= c {
            pts.push((i as f64 / fs, 20.0 * b.log10()));
        }
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    -60.0 / (num / den)
}

pub fn random_points(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect()
}

/// True when no domain point lies strictly inside any triangle's
/// circumcircle. Uses an explicit circumcentre, independent of the library's
/// determinant predicate; `rel` is the relative slack on the squared radius.
pub fn is_delaunay(points: &[[f64; 2]], triangles: &[[usize; 3]], rel: f64) -> bool {
    triangles.iter().all(|t| {
        let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
        let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        let sq = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1];
        let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
        let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
        let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
        points.iter().enumerate().all(|(i, p)| {
            t.contains(&i) || (p[0] - ux).powi(2) + (p[1] - uy).powi(2) >= r2 * (1.0 - rel)
        })
    })
}

/// Map whose codomain is the affine function `q = M p + b` of the domain.
pub fn affine_map(rng: &mut impl Rng, points: &[[f64; 2]], dim: usize) -> (SimplicialMap<f64>, Vec<[f64; 3]>) {
    let rows: Vec<[f64; 3]> = (0..dim)
        .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
        .collect();
    let pairs = points
        .iter()
        .map(|&p| PointPair::new(p, affine_eval(&rows, p)))
        .collect();
    (SimplicialMap::new(pairs).unwrap(), rows)
}

pub fn affine_eval(rows: &[[f64; 3]], p: [f64; 2]) -> Vec<f64> {
    rows.iter().map(|r| r[0] * p[0] + r[1] * p[1] + r[2]).collect()
}

/// Interior edges as (a, b, triangle on one side, triangle on the other).
pub fn interior_edges(triangles: &[[usize; 3]]) -> Vec<(usize, usize, usize, usize)> {
    let mut seen = std::collections::BTreeMap::new();
    let mut out = Vec::new();
    for (ti, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if let Some(other) = seen.insert(key, ti) {
                out.push((key.0, key.1, other, ti));
            }
        }
    }
    out
}

pub fn sine(freq: f64, amp: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| amp * (std::f64::consts::TAU * freq * i as f64 / fs).sin()).collect()
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub const FIXTURE_FS: f64 = 44_100.0;
pub const FIXTURE_BLOCK: usize = 256;

/// Five resonances, all wider than the default 5 Hz minimum bandwidth.
pub const FIXTURE_MODEL: &str = "\
# five-resonance test body
@f0 300
300 1.0 0.30
520 0.8 0.25
810 0.6 0.20
1230 0.4 0.15
1900 0.3 0.10
";

/// Unit square; each corner reshapes gains, frequencies and decays.
pub const FIXTURE_MAP: &str = "\
n 15
0 0 : 1.0 300 0.30  0.8 520 0.25  0.6 810 0.20  0.4 1230 0.15  0.3 1900 0.10
1 0 : 0.2 330 0.10  1.0 560 0.40  0.9 870 0.30  0.7 1300 0.20  0.6 2100 0.12
1 1 : 0.5 280 0.40  0.3 480 0.10  1.0 760 0.35  1.0 1150 0.30  0.9 1700 0.20
0 1 : 0.9 310 0.20  0.6 540 0.30  0.2 840 0.10  0.8 1250 0.25  1.0 2000 0.40
";

/// Block indices at which the fixture trajectory sits exactly on a vertex.
pub const VERTEX_BLOCKS: [usize; 5] = [0, 200, 400, 600, 800];

pub fn block_time(block: usize) -> f64 {
    (block * FIXTURE_BLOCK) as f64 / FIXTURE_FS
}

/// Linear path around the square at normal altitude (z = 1), touching each
/// vertex on a block boundary and holding it for ten blocks.
pub fn fixture_trajectory_csv() -> String {
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
    let mut out = String::from("time_s,vx,vy,vz,vyaw,vpitch,vroll,bx,by,bz,byaw,bpitch,broll\n");
    for (k, c) in corners.iter().enumerate() {
        for t in [block_time(VERTEX_BLOCKS[k]), block_time(VERTEX_BLOCKS[k] + 10)] {
            out.push_str(&format!("{t},{},{},1,0,0,0,0.1,0.2,0.5,0,0,0\n", c[0], c[1]));
        }
    }
    out
}

/// Exponential sine sweep through the model's lowest resonances.
pub fn fixture_input(seconds: f64) -> Vec<f64> {
    let n = (seconds * FIXTURE_FS) as usize;
    let (f1, f2) = (250.0f64, 900.0f64);
    let k = (f2 / f1).ln() / seconds;
    (0..n)
        .map(|i| {
            let t = i as f64 / FIXTURE_FS;
            0.5 * (std::f64::consts::TAU * f1 * ((k * t).exp() - 1.0) / k).sin()
        })
        .collect()
}
