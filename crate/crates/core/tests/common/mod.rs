//! Reference computations used to check the kinematics independently of the
//! link-partition and transform-chaining code paths.
#![allow(dead_code)]

use ctr_core::kinematics::{JointConfig, TubeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type V3 = [f64; 3];
type M3 = [[f64; 3]; 3];

fn bending_stiffness(t: &TubeSpec) -> f64 {
    let (od, id) = (t.outer_diameter, t.inner_diameter);
    t.youngs_modulus * std::f64::consts::PI * (od * od * od * od - id * id * id * id) / 64.0
}

/// Curvature vector `(u_x, u_y)` at arc length `s`, expressed in a frame that
/// does not twist about the backbone. Each tube present at `s` pushes with its
/// stiffness toward its own bending direction `(cos θ, sin θ)`.
pub fn curvature_vector(tubes: &[TubeSpec], joints: &JointConfig, s: f64) -> (f64, f64) {
    let (mut cx, mut cy, mut w) = (0.0, 0.0, 0.0);
    for (i, t) in tubes.iter().enumerate() {
        let rho = joints.translations[i];
        if s >= rho {
            continue;
        }
        let ei = bending_stiffness(t);
        let k = if s >= rho - t.curved_length {
            t.precurvature
        } else {
            0.0
        };
        let th = joints.rotations[i] * std::f64::consts::PI / 180.0;
        cx += ei * k * th.cos();
        cy += ei * k * th.sin();
        w += ei;
    }
    if w == 0.0 {
        return (0.0, 0.0);
    }
    // bending toward +x is a rotation about +y
    (-cy / w, cx / w)
}

fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `G·[u]×` and `G·e3`.
fn derivative(g: &M3, u: (f64, f64)) -> (M3, V3) {
    let skew = [[0.0, 0.0, u.1], [0.0, 0.0, -u.0], [-u.1, u.0, 0.0]];
    (mat_mul(g, &skew), [g[0][2], g[1][2], g[2][2]])
}

fn axpy(g: &M3, p: &V3, dg: &M3, dp: &V3, h: f64) -> (M3, V3) {
    let mut g2 = *g;
    let mut p2 = *p;
    for i in 0..3 {
        for j in 0..3 {
            g2[i][j] += h * dg[i][j];
        }
        p2[i] += h * dp[i];
    }
    (g2, p2)
}

/// Positions of the centerline at every requested arc length, by fourth-order
/// Runge–Kutta integration of the frame ODE with roughly `steps` total steps.
/// Integration restarts at every tube end and section change so each step
/// sees a constant curvature.
pub fn integrate_centerline(tubes: &[TubeSpec], joints: &JointConfig, steps: usize, queries: &[f64]) -> Vec<V3> {
    let length = joints.translations.iter().copied().fold(0.0, f64::max);
    let mut knots: Vec<f64> = vec![0.0, length];
    for (i, t) in tubes.iter().enumerate() {
        let rho = joints.translations[i];
        for k in [rho - t.curved_length, rho] {
            if k > 0.0 && k < length {
                knots.push(k);
            }
        }
    }
    knots.extend(queries.iter().copied().filter(|&q| q > 0.0 && q < length));
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut g: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut p: V3 = [0.0; 3];
    let mut at_knot: Vec<(f64, V3)> = vec![(0.0, p)];
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let u = curvature_vector(tubes, joints, 0.5 * (a + b));
        let n = (((b - a) / length.max(1e-300)) * steps as f64).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for _ in 0..n {
            let (k1g, k1p) = derivative(&g, u);
            let (g2, _) = axpy(&g, &p, &k1g, &k1p, 0.5 * h);
            let (k2g, k2p) = derivative(&g2, u);
            let (g3, _) = axpy(&g, &p, &k2g, &k2p, 0.5 * h);
            let (k3g, k3p) = derivative(&g3, u);
            let (g4, _) = axpy(&g, &p, &k3g, &k3p, h);
            let (k4g, k4p) = derivative(&g4, u);
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += h / 6.0 * (k1g[i][j] + 2.0 * k2g[i][j] + 2.0 * k3g[i][j] + k4g[i][j]);
                }
                p[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
            }
        }
        at_knot.push((b, p));
    }

    queries
        .iter()
        .map(|&q| {
            let q = q.clamp(0.0, length);
            at_knot
                .iter()
                .min_by(|x, y| (x.0 - q).abs().total_cmp(&(y.0 - q).abs()))
                .map(|&(_, p)| p)
                .unwrap_or([0.0; 3])
        })
        .collect()
}

pub fn oracle_tip(tubes: &[TubeSpec], joints: &JointConfig, steps: usize) -> V3 {
    let length = joints.translations.iter().copied().fold(0.0, f64::max);
    integrate_centerline(tubes, joints, steps, &[length])[0]
}

/// Section signature at `s`: per tube, 0 absent, 1 straight, 2 curved.
fn signature(tubes: &[TubeSpec], joints: &JointConfig, s: f64) -> Vec<u8> {
    tubes
        .iter()
        .zip(&joints.translations)
        .map(|(t, &rho)| {
            if s >= rho {
                0
            } else if s >= rho - t.curved_length {
                2
            } else {
                1
            }
        })
        .collect()
}

/// Link end points found by scanning the backbone every `step` mm and
/// recording where the section signature changes.
pub fn scan_boundaries(tubes: &[TubeSpec], joints: &JointConfig, step: f64) -> Vec<f64> {
    let length = joints.translations.iter().copied().fold(0.0, f64::max);
    let n = (length / step).round() as usize;
    let mut out = Vec::new();
    let mut prev = signature(tubes, joints, 0.5 * step);
    for k in 1..n {
        let s = (k as f64 + 0.5) * step;
        let sig = signature(tubes, joints, s);
        if sig != prev {
            out.push(k as f64 * step);
            prev = sig;
        }
    }
    out.push(length);
    out
}

pub fn dist(a: V3, b: V3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Random nested tube set with `n` tubes.
pub fn random_tubes(rng: &mut impl Rng, n: usize) -> Vec<TubeSpec> {
    let mut od: f64 = 1.0 + 0.6 * n as f64;
    (0..n)
        .map(|i| {
            let inner = od - rng.random_range(0.15..0.3);
            let curved = rng.random_range(10.0..80.0);
            let kappa = if rng.random_bool(0.15) {
                0.0
            } else {
                rng.random_range(0.002..0.06_f64).min(6.0 / curved)
            };
            let tube = TubeSpec::new(
                i as u32 + 1,
                rng.random_range(1.0..80.0),
                od,
                inner,
                kappa,
                rng.random_range(40.0..150.0) + 30.0 * i as f64,
                curved,
            )
            .unwrap();
            od = inner - 0.1 - rng.random_range(0.0..0.1);
            tube
        })
        .collect()
}

/// Random joint values satisfying the telescoping and length invariants.
pub fn random_joints(rng: &mut impl Rng, tubes: &[TubeSpec]) -> JointConfig {
    let mut translations = Vec::with_capacity(tubes.len());
    let mut floor: f64 = 0.0;
    for t in tubes {
        let hi = t.total_length();
        let rho = if hi > floor { rng.random_range(floor..=hi) } else { hi };
        translations.push(rho);
        floor = floor.max(rho);
    }
    let rotations = tubes.iter().map(|_| rng.random_range(-180.0..180.0)).collect();
    JointConfig::new(translations, rotations)
}

/// Random valid robot and configuration, retrying until the joints validate.
pub fn random_case(rng: &mut ChaCha8Rng, n: usize) -> (Vec<TubeSpec>, JointConfig) {
    loop {
        let tubes = random_tubes(rng, n);
        let joints = random_joints(rng, &tubes);
        if joints.validate(&tubes).is_ok() {
            return (tubes, joints);
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
