//! Reference computations shared by the integration tests. Nothing here
//! calls into the crate's statistics or quadrature code.

#![allow(dead_code)]

use std::f64::consts::PI;

use hetgof::smoothing::{Covariates, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule: `panels` equal panels of a 20-point Gauss-Legendre rule.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(20);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 20);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * width * (xi + 1.0), 0.5 * width * wi));
        }
    }
    out
}

/// Integrate over `[a, b]`, doubling the panel count until two successive
/// values agree to `rel_tol` or to rounding level.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let eval = |panels: usize| {
        composite_nodes(a, b, panels)
            .iter()
            .fold((0.0, 0.0), |(s, m), &(t, w)| {
                let v = w * f(t);
                (s + v, m + v.abs())
            })
    };
    let mut panels = 4;
    let (mut prev, _) = eval(panels);
    loop {
        panels *= 2;
        let (next, mass) = eval(panels);
        let diff = (next - prev).abs();
        if diff <= rel_tol * next.abs() || diff <= 1e-14 * mass || panels > 1 << 20 {
            return next;
        }
        prev = next;
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = *partial.last().unwrap();
    let mut k = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let d = cur[i + 1] - cur[i];
                prev[i + 1] + if d == 0.0 { f64::INFINITY } else { 1.0 / d }
            })
            .collect();
        k += 1;
        if k % 2 == 0 {
            if let Some(&v) = next.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
        prev = cur;
        cur = next;
        if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    best
}

/// `integral over the real line of cos(a t) w(t) dt` for an even weight.
///
/// For `a > 0` the half-line is cut at the zeros of `cos(a t)` and the
/// resulting alternating series is summed with Wynn acceleration.
pub fn cosine_transform<W: Fn(f64) -> f64>(w: W, a: f64, decay_end: f64) -> f64 {
    if a == 0.0 {
        return 2.0 * integrate_1d(&w, 0.0, decay_end, 1e-14);
    }
    let half = PI / a;
    let mut sums = Vec::new();
    let mut acc = 2.0 * integrate_1d(|t| (a * t).cos() * w(t), 0.0, 0.5 * half, 1e-15);
    sums.push(acc);
    let mut lo = 0.5 * half;
    for _ in 0..80 {
        let piece = 2.0 * integrate_1d(|t| (a * t).cos() * w(t), lo, lo + half, 1e-15);
        acc += piece;
        sums.push(acc);
        lo += half;
        if lo > decay_end {
            return acc;
        }
    }
    wynn_epsilon(&sums[sums.len() - 40..])
}

/// Double-double accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dd(pub f64, pub f64);

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub fn add(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.0, x);
        let (h, l) = two_sum(s, e + self.1);
        Dd(h, l)
    }

    pub fn add_dd(self, o: Dd) -> Dd {
        self.add(o.0).add(o.1)
    }

    /// Exact product of two doubles, accumulated.
    pub fn add_product(self, a: f64, b: f64) -> Dd {
        let p = a * b;
        self.add(p).add(a.mul_add(b, -p))
    }

    pub fn scale(self, x: f64) -> Dd {
        Dd::default().add_product(self.0, x).add(self.1 * x)
    }

    pub fn value(self) -> f64 {
        self.0 + self.1
    }
}

/// Independence statistic by the literal triple sum over `j, k, l`,
/// accumulated in double-double.
pub fn delta_triple_sum<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(e: &[f64], x: &[Vec<f64>], psi1: F, psi2: G) -> f64 {
    let n = e.len();
    let nf = n as f64;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let i1 = |j: usize, k: usize| psi1((e[j] - e[k]).abs());
    let i2 = |j: usize, k: usize| psi2(dist(&x[j], &x[k]));
    let mut a = Dd::default();
    let mut s1 = Dd::default();
    let mut s2 = Dd::default();
    let mut c = Dd::default();
    for j in 0..n {
        for k in 0..n {
            a = a.add_product(i1(j, k), i2(j, k));
            s1 = s1.add(i1(j, k));
            s2 = s2.add(i2(j, k));
            for l in 0..n {
                c = c.add_product(i1(j, k), i2(j, l));
            }
        }
    }
    let s12 = Dd::default().add_product(s1.0, s2.0).add(s1.0 * s2.1 + s1.1 * s2.0);
    a.scale(1.0 / nf)
        .add_dd(s12.scale(1.0 / (nf * nf * nf)))
        .add_dd(c.scale(-2.0 / (nf * nf)))
        .value()
}

/// Independence statistic for Gaussian kernels `exp(-c u^2)` by direct
/// integration of `n |phi_joint - phi_e phi_X|^2` against the Gaussian
/// densities whose characteristic functions are those kernels.
pub fn delta_by_quadrature(e: &[f64], x: &[Vec<f64>], c1: f64, c2: f64, rel_tol: f64) -> f64 {
    let n = e.len();
    let p = x[0].len();
    let nf = n as f64;
    let density = |t2: f64, c: f64| (-t2 / (4.0 * c)).exp() / (4.0 * PI * c).sqrt();
    let l1 = (4.0 * c1 * 42.0).sqrt();
    let l2 = (4.0 * c2 * 42.0).sqrt();
    let eval = |panels1: usize, panels2: usize| -> f64 {
        let g1 = composite_nodes(-l1, l1, panels1);
        let g2 = composite_nodes(-l2, l2, panels2);
        // characteristic values on the first axis
        let a: Vec<(f64, Vec<(f64, f64)>)> = g1
            .iter()
            .map(|&(t, w)| (w * density(t * t, c1), e.iter().map(|v| ((t * v).cos(), (t * v).sin())).collect()))
            .collect();
        // and on the covariate grid
        let mut b: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
        let mut idx = vec![0usize; p];
        loop {
            let t: Vec<f64> = idx.iter().map(|&i| g2[i].0).collect();
            let w: f64 = idx.iter().map(|&i| g2[i].1 * density(g2[i].0 * g2[i].0, c2)).product();
            let vals = x
                .iter()
                .map(|row| {
                    let s: f64 = row.iter().zip(&t).map(|(u, v)| u * v).sum();
                    (s.cos(), s.sin())
                })
                .collect();
            b.push((w, vals));
            let mut d = 0;
            while d < p {
                idx[d] += 1;
                if idx[d] < g2.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == p {
                break;
            }
        }
        let mut total = 0.0;
        for (wa, va) in &a {
            let (ma_re, ma_im) = va.iter().fold((0.0, 0.0), |s, v| (s.0 + v.0 / nf, s.1 + v.1 / nf));
            for (wb, vb) in &b {
                let (mut jr, mut ji, mut mbr, mut mbi) = (0.0, 0.0, 0.0, 0.0);
                for (u, v) in va.iter().zip(vb) {
                    jr += u.0 * v.0 - u.1 * v.1;
                    ji += u.0 * v.1 + u.1 * v.0;
                    mbr += v.0;
                    mbi += v.1;
                }
                let (jr, ji, mbr, mbi) = (jr / nf, ji / nf, mbr / nf, mbi / nf);
                let dr = jr - (ma_re * mbr - ma_im * mbi);
                let di = ji - (ma_re * mbi + ma_im * mbr);
                total += wa * wb * (dr * dr + di * di);
            }
        }
        nf * total
    };
    let (mut p1, mut p2) = (16, if p == 1 { 8 } else { 4 });
    let mut prev = eval(p1, p2);
    loop {
        p1 *= 2;
        p2 *= 2;
        let next = eval(p1, p2);
        if (next - prev).abs() <= rel_tol * next.abs() || p1 >= 256 {
            return next;
        }
        prev = next;
    }
}

/// Unnormalized univariate weight by name, with the point beyond which it
/// is negligible (`None` for the heavy-tailed Cauchy weight).
pub fn weight_fn(family: &str, c: f64) -> (Box<dyn Fn(f64) -> f64>, Option<f64>) {
    match family {
        "gauss" => (Box::new(move |t: f64| (-c * t * t).exp()), Some((40.0 / c).sqrt())),
        "abs" => (Box::new(move |t: f64| (-c * t.abs()).exp()), Some(40.0 / c)),
        "cauchy" => (Box::new(move |t: f64| 1.0 / (1.0 + (t / c).powi(2))), None),
        _ => unreachable!(),
    }
}

/// `n * integral |phi_n(t) - g(t)|^2 w(t) dt` where `g` is the standard
/// normal CF when `normal` is set and `Im phi_n` alone otherwise.
///
/// For the Cauchy weight the integrand does not decay; the range is cut at
/// `T = 1e5` and the tail of its non-oscillating level is added exactly.
pub fn univariate_by_quadrature(e: &[f64], family: &str, c: f64, normal: bool) -> f64 {
    let n = e.len() as f64;
    let (w, end) = weight_fn(family, c);
    let f = |t: f64| {
        let (re, im) = e.iter().fold((0.0, 0.0), |s, v| (s.0 + (t * v).cos() / n, s.1 + (t * v).sin() / n));
        let v = if normal {
            (re - (-0.5 * t * t).exp()).powi(2) + im * im
        } else {
            im * im
        };
        v * w(t)
    };
    match end {
        Some(end) => 2.0 * n * integrate_1d(f, 0.0, end, 1e-13),
        None => {
            let t_end: f64 = 1e5;
            let mut body = 0.0;
            let mut lo = 0.0;
            while lo < t_end {
                let hi = (lo + 50.0).min(t_end);
                body += integrate_1d(f, lo, hi, 1e-13);
                lo = hi;
            }
            // mean level of |phi_n|^2 (resp. (Im phi_n)^2) for distinct values
            let level = if normal { 1.0 / n } else { 0.5 / n };
            let tail = level * c * (PI / 2.0 - (t_end / c).atan());
            2.0 * n * (body + tail)
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Random residuals and covariates for statistic fixtures.
pub fn fixture(seed: u64, n: usize, p: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    let e = (0..n).map(|_| standard_normal(&mut r)).collect();
    let x = (0..n).map(|_| (0..p).map(|_| r.random::<f64>()).collect()).collect();
    (e, x)
}

pub fn covariates(x: &[Vec<f64>]) -> Covariates {
    Covariates::from_rows(x).unwrap()
}

/// Sample mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Sample variance and its standard error from the fourth central moment.
pub fn var_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

/// The ultrasonic calibration fixture (response, metal distance).
pub fn ultrasonic() -> Sample {
    let text = include_str!("../data/chwirut1.txt");
    let mut y = Vec::new();
    let mut x = Vec::new();
    for line in text.lines().skip(1) {
        let mut it = line.split_whitespace().map(|v| v.parse::<f64>().unwrap());
        y.push(it.next().unwrap());
        x.push(it.next().unwrap());
    }
    Sample::univariate(y, x).unwrap()
}

/// Standard normal draw from any generator.
pub fn standard_normal_from<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
