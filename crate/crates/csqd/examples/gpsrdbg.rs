use csqd::{gpsr_solve, DenseOperator, LinearOperator, SolverConfig};
use nalgebra::DMatrix;

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n).map(|_| {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }).collect()
}

fn orthonormal_rows(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut k = 0;
    while rows.len() < m {
        let mut v = pseudo_random(n, seed + 1000 * k);
        k += 1;
        for r in &rows {
            let proj: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            for (vi, ri) in v.iter_mut().zip(r) { *vi -= proj * ri; }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for vi in v.iter_mut() { *vi /= norm; }
            rows.push(v);
        }
    }
    DMatrix::from_fn(m, n, |i, j| rows[i][j])
}

fn main() {
    let (m, n) = (32, 64);
    let a = orthonormal_rows(m, n, 42);
    let op = DenseOperator::new(a);
    let mut truth = vec![0.0; n];
    truth[5] = 1.8; truth[23] = -2.4; truth[47] = 0.9;
    let b = op.forward(&truth).unwrap();
    let atb = op.adjoint(&b).unwrap();
    let linf = atb.iter().fold(0.0f64, |acc, v: &f64| acc.max(v.abs()));
    println!("linf(Atb) = {linf}");
    for iters in [10usize, 50, 100, 500, 2000, 10000, 50000] {
        let cfg = SolverConfig { tau: Some(1e-4 * linf), max_iters: iters, rel_tol: 1e-14, ..Default::default() };
        let sol = gpsr_solve(&op, &b, &cfg).unwrap();
        let err: f64 = sol.coeffs.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("iters={iters} took={} obj={:.6e} relerr={:.4e}", sol.iterations, sol.objective, err / scale);
    }
}
