//! Dense reference operators shared by the oracle tests.
#![allow(dead_code, clippy::approx_constant)]

use bm3d_core::noise::GaussianStream;

pub const SQRT1_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
// decimal bior1.5 filters as tabulated by common wavelet libraries
pub const DEC_LO: [f64; 10] = [
    0.01657281518405971,
    -0.01657281518405971,
    -0.12153397801643787,
    0.12153397801643787,
    0.7071067811865476,
    0.7071067811865476,
    0.12153397801643787,
    -0.12153397801643787,
    -0.01657281518405971,
    0.01657281518405971,
];
pub const DEC_HI: [f64; 10] = [0.0, 0.0, 0.0, 0.0, -SQRT1_2, SQRT1_2, 0.0, 0.0, 0.0, 0.0];

pub type Mat = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..m).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![0.0; n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for r in 0..m {
                for c in 0..m {
                    out[i * m + r][j * m + c] = a[i][j] * b[r][c];
                }
            }
        }
    }
    out
}

pub fn inf_norm_from_identity(m: &Mat) -> f64 {
    m.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (v - f64::from(u8::from(i == j))).abs()))
        .fold(0.0, f64::max)
}

/// One periodized analysis level as an n x n matrix, by direct convolution.
pub fn analysis_level(n: usize) -> Mat {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n / 2 {
        for j in 0..10 {
            let x = (2 * i as isize + 5 - j as isize).rem_euclid(n as isize) as usize;
            m[i][x] += DEC_LO[j];
            m[n / 2 + i][x] += DEC_HI[j];
        }
    }
    m
}

/// Dense 2D Mallat decomposition on k x k patches: level `n` applies the
/// separable analysis to the leading n x n block and leaves the rest alone.
pub fn bior_2d_operator(k: usize) -> Mat {
    let kk = k * k;
    let mut op = identity(kk);
    let mut n = k;
    while n >= 2 {
        let a = analysis_level(n);
        let block = kron(&a, &a);
        let mut level = identity(kk);
        for r in 0..n {
            for c in 0..n {
                let row = r * k + c;
                level[row] = vec![0.0; kk];
                for t in 0..n {
                    for u in 0..n {
                        level[row][t * k + u] = block[r * n + c][t * n + u];
                    }
                }
            }
        }
        op = matmul(&level, &op);
        n /= 2;
    }
    op
}

pub fn transpose(m: &Mat) -> Mat {
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

pub fn apply(m: &Mat, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &Mat) -> Mat {
    let n = m.len();
    let mut a: Mat = m.iter().cloned().zip(identity(n)).map(|(mut r, e)| {
        r.extend(e);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Orthonormal Hadamard matrix by Sylvester doubling.
pub fn hadamard(n: usize) -> Mat {
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let m = h.len();
        let mut next = vec![vec![0.0; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = h[i][j];
                next[i][j + m] = h[i][j];
                next[i + m][j] = h[i][j];
                next[i + m][j + m] = -h[i][j];
            }
        }
        h = next;
    }
    let s = 1.0 / (n as f64).sqrt();
    h.into_iter().map(|r| r.into_iter().map(|v| v * s).collect()).collect()
}

/// 2D orthonormal DCT-II on row-major k x k patches.
pub fn dct_2d_operator(k: usize) -> Mat {
    let c: Mat = (0..k)
        .map(|u| {
            let a = if u == 0 { (1.0 / k as f64).sqrt() } else { (2.0 / k as f64).sqrt() };
            (0..k)
                .map(|x| a * (std::f64::consts::PI * (x as f64 + 0.5) * u as f64 / k as f64).cos())
                .collect()
        })
        .collect();
    kron(&c, &c)
}

pub fn random(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut g = GaussianStream::new(seed);
    (0..n).map(|_| g.next_normal() * scale).collect()
}
