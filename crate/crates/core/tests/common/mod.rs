//! Reference implementations used to check the library from the outside.
//! They are deliberately naive and share no code with the crate.

#![allow(dead_code)]

use perceptkit::rng::SplitMix64;
use perceptkit::task::{Direction, GridMatrix};
use perceptkit::{Point, Polygon, ShapeKind};

/// Even-odd crossing test.
pub fn point_in_polygon(p: (f64, f64), vs: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = vs.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = vs[i];
        let (xj, yj) = vs[j];
        if (yi > p.1) != (yj > p.1) {
            let x = xj + (p.1 - yj) * (xi - xj) / (yi - yj);
            if p.0 < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn coords(p: &Polygon) -> Vec<(f64, f64)> {
    p.vertices().iter().map(|v| (v.x, v.y)).collect()
}

fn bbox(vs: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    vs.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
    )
}

/// Points every `step` along the closed boundary, starting at each vertex.
pub fn boundary_samples(vs: &[(f64, f64)], step: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..vs.len() {
        let (a, b) = (vs[i], vs[(i + 1) % vs.len()]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = (len / step).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// Whether some sample point lies inside both shapes. Samples are a
/// `step`-spaced lattice plus `step`-spaced points on both boundaries, so
/// a vertex poking into the other shape is caught however shallow.
pub fn grid_overlap(a: &[(f64, f64)], b: &[(f64, f64)], step: f64) -> bool {
    let strictly_inside = |p: (f64, f64), poly: &[(f64, f64)]| point_in_polygon(p, poly);
    if boundary_samples(a, step).into_iter().any(|p| strictly_inside(p, b))
        || boundary_samples(b, step).into_iter().any(|p| strictly_inside(p, a))
    {
        return true;
    }
    let (ax0, ay0, ax1, ay1) = bbox(a);
    let (bx0, by0, bx1, by1) = bbox(b);
    let (x0, y0, x1, y1) = (ax0.max(bx0), ay0.max(by0), ax1.min(bx1), ay1.min(by1));
    if x0 > x1 || y0 > y1 {
        return false;
    }
    let mut y = (y0 / step).floor() * step;
    while y <= y1 {
        let mut x = (x0 / step).floor() * step;
        while x <= x1 {
            if point_in_polygon((x, y), a) && point_in_polygon((x, y), b) {
                return true;
            }
            x += step;
        }
        y += step;
    }
    false
}

/// Largest projected gap over `directions` evenly spaced unit vectors.
/// For convex shapes this approaches the boundary distance when apart and
/// minus the smallest projection overlap when overlapping.
pub fn directional_separation(a: &[(f64, f64)], b: &[(f64, f64)], directions: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 0..directions {
        let t = std::f64::consts::PI * k as f64 / directions as f64;
        let (ux, uy) = (t.cos(), t.sin());
        let proj = |vs: &[(f64, f64)]| {
            vs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
                let d = x * ux + y * uy;
                (lo.min(d), hi.max(d))
            })
        };
        let (alo, ahi) = proj(a);
        let (blo, bhi) = proj(b);
        best = best.max((blo - ahi).max(alo - bhi));
    }
    best
}

/// Random convex polygon: sorted angles on an ellipse.
pub fn random_convex(rng: &mut SplitMix64, cx: f64, cy: f64) -> Vec<(f64, f64)> {
    let n = 3 + rng.below(6) as usize;
    let rx = rng.uniform(5.0, 40.0);
    let ry = rng.uniform(5.0, 40.0);
    let rot = rng.uniform(0.0, std::f64::consts::TAU);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps_ok = angles.windows(2).all(|w| w[1] - w[0] > 0.2)
            && angles[0] + std::f64::consts::TAU - angles[n - 1] > 0.2;
        if !gaps_ok {
            continue;
        }
        return angles
            .iter()
            .map(|&t| {
                let (x, y) = (rx * t.cos(), ry * t.sin());
                (cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos())
            })
            .collect();
    }
}

pub fn to_polygon(vs: &[(f64, f64)]) -> Polygon {
    let kind = match vs.len() {
        3 => ShapeKind::Triangle,
        4 => ShapeKind::Rectangle,
        5 => ShapeKind::Pentagon,
        6 => ShapeKind::Hexagon,
        8 => ShapeKind::Octagon,
        _ => ShapeKind::Circle,
    };
    Polygon::new(kind, vs.iter().map(|&(x, y)| Point::new(x, y)).collect()).expect("valid polygon")
}

/// Kruskal-Wallis H from O(N^2) rank counting.
pub fn naive_kruskal_wallis(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let rank = |x: f64| {
        let less = all.iter().filter(|&&y| y < x).count() as f64;
        let equal = all.iter().filter(|&&y| y == x).count() as f64;
        less + (equal + 1.0) / 2.0
    };
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = g.iter().map(|&x| rank(x)).sum();
        sum += r * r / g.len() as f64;
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let mut distinct = all.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let ties: f64 = distinct
        .iter()
        .map(|&v| {
            let t = all.iter().filter(|&&y| y == v).count() as f64;
            t * t * t - t
        })
        .sum();
    let c = 1.0 - ties / (n * n * n - n);
    if c.abs() < 1e-12 {
        0.0
    } else {
        h / c
    }
}

/// Lanczos log-gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Chi-square upper tail by Simpson integration of the density.
pub fn chi_square_sf_quadrature(x: f64, df: f64) -> f64 {
    let k = df / 2.0;
    let log_norm = -k * 2f64.ln() - ln_gamma(k);
    let pdf = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            (log_norm + (k - 1.0) * t.ln() - t / 2.0).exp()
        }
    };
    let upper = x + 60.0 + 30.0 * df.sqrt() + df;
    let n = 200_000usize;
    let h = (upper - x) / n as f64;
    let mut s = pdf(x) + pdf(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(x + h * i as f64);
    }
    s * h / 3.0
}

/// Answer to a spatial-grid question by scanning every cell.
pub fn ray_walk(grid: &GridMatrix, reference: (usize, usize), dir: Direction, target: perceptkit::task::GridCell) -> usize {
    let (r0, c0) = reference;
    let mut n = 0;
    for (r, row) in grid.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let on_ray = match dir {
                Direction::Above => c == c0 && r < r0,
                Direction::Below => c == c0 && r > r0,
                Direction::LeftOf => r == r0 && c < c0,
                Direction::RightOf => r == r0 && c > c0,
            };
            if on_ray && *cell == target {
                n += 1;
            }
        }
    }
    n
}

/// One drawn figure element read back from SVG text.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgShape {
    pub kind: &'static str,
    pub fill: String,
    pub points: Vec<(f64, f64)>,
}

fn attr<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = line.find(&key)? + key.len();
    let end = line[start..].find('"')? + start;
    Some(&line[start..end])
}

/// Reads non-noise shape elements, skipping the background rectangle.
pub fn svg_shapes(svg: &str) -> Vec<SvgShape> {
    let mut out = Vec::new();
    for line in svg.lines().map(str::trim) {
        if line.contains("class=\"noise\"") {
            continue;
        }
        let fill = attr(line, "fill").unwrap_or("").to_string();
        if line.starts_with("<polygon") {
            let points: Vec<(f64, f64)> = attr(line, "points")
                .unwrap_or("")
                .split_whitespace()
                .map(|pair| {
                    let (x, y) = pair.split_once(',').expect("x,y");
                    (x.parse().expect("x"), y.parse().expect("y"))
                })
                .collect();
            let kind = match points.len() {
                3 => "triangle",
                4 => "rectangle",
                5 => "pentagon",
                6 => "hexagon",
                8 => "octagon",
                10 => "star",
                12 => "cross",
                _ => "other",
            };
            out.push(SvgShape { kind, fill, points });
        } else if line.starts_with("<circle") {
            out.push(SvgShape { kind: "circle", fill, points: vec![] });
        } else if line.starts_with("<rect") && line.contains(" rx=") {
            out.push(SvgShape { kind: "capsule", fill, points: vec![] });
        }
    }
    out
}

pub fn singular(plural: &str) -> &str {
    match plural {
        "crosses" => "cross",
        p => p.strip_suffix('s').unwrap_or(p),
    }
}

/// Largest distance between index-matched vertices; infinite when the
/// lists differ in length.
pub fn max_vertex_gap(a: &[Point], b: &[Point]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(p, q)| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

pub fn vertex_mean(vs: &[Point]) -> (f64, f64) {
    let n = vs.len() as f64;
    (vs.iter().map(|p| p.x).sum::<f64>() / n, vs.iter().map(|p| p.y).sum::<f64>() / n)
}

/// Pearson chi-square statistic for observed counts against a uniform
/// expectation.
pub fn uniform_chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum()
}
