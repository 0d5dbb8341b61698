//! Deterministic point sets on spheres and small vector helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn scaled(v: &[f64], f: f64) -> Vec<f64> {
    v.iter().map(|c| c * f).collect()
}

pub fn normalized(v: &[f64]) -> Vec<f64> {
    scaled(v, 1.0 / norm(v))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Roughly uniform points on `S^{n-1}`.
///
/// `S^0` is `{+1, -1}` regardless of `count`; on `S^1` the points are
/// equally spaced angles starting at `(1, 0)`; on `S^2` a Fibonacci
/// spiral. Higher dimensions fall back to seeded random directions.
pub fn sphere_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => vec![Vec::new()],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                // Quarter turns are exact so axis-aligned witnesses are found.
                if (4 * k) % count == 0 {
                    return match 4 * k / count {
                        0 => vec![1.0, 0.0],
                        1 => vec![0.0, 1.0],
                        2 => vec![-1.0, 0.0],
                        _ => vec![0.0, -1.0],
                    };
                }
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut g = rng(0x5eed ^ n as u64);
            (0..count).map(|_| random_unit(&mut g, n)).collect()
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return scaled(&v, 1.0 / r);
        }
    }
}

/// Orthonormal basis of the complement of the unit vector `u`.
pub fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    let mut candidates: Vec<usize> = (0..n).collect();
    // Start with the axes least aligned with u for stable Gram-Schmidt.
    candidates.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for &axis in &candidates {
        if basis.len() + 1 == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for _ in 0..2 {
            for w in std::iter::once(u).chain(basis.iter().map(|b| b.as_slice())) {
                let c = dot(&v, w);
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
            }
        }
        let r = norm(&v);
        if r > 1e-8 {
            basis.push(scaled(&v, 1.0 / r));
        }
    }
    basis
}
