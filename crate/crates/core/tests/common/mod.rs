//! Independent reference implementations used as test oracles. None of these
//! call into the library's numerics.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use vnsim::qcore::{CMatrix, CVector};

pub type C = Complex64;

pub fn cx(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&a + a.adjoint()).scale(scale)
}

/// Random mixed state: a convex mixture of `rank` random pure states.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let mut total = 0.0;
    for _ in 0..rank {
        let w: f64 = rng.random::<f64>() + 0.05;
        let v = random_vector(rng, dim);
        m += (&v * v.adjoint()).scale(w);
        total += w;
    }
    m.unscale(total)
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// exp(A) by scaling and squaring with a truncated Taylor series.
pub fn expm_taylor(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..=30 {
        term = (&term * &x).unscale(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// exp(-i H t)
pub fn propagator_oracle(h: &CMatrix, t: f64) -> CMatrix {
    expm_taylor(&h.map(|z| z * cx(0.0, -t)))
}

/// Partial trace by explicit index arithmetic over a row-major product basis.
pub fn partial_trace_oracle(m: &CMatrix, dims: &[usize], keep: usize) -> CMatrix {
    let total: usize = dims.iter().product();
    let digits = |mut idx: usize| {
        let mut out = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            out[f] = idx % dims[f];
            idx /= dims[f];
        }
        out
    };
    let d = dims[keep];
    let mut out = CMatrix::zeros(d, d);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            let others_equal = (0..dims.len()).all(|f| f == keep || di[f] == dj[f]);
            if others_equal {
                out[(di[keep], dj[keep])] += m[(i, j)];
            }
        }
    }
    out
}

/// Survival of n repeated |0⟩ questions on a pure qubit by stepping amplitudes.
pub fn zeno_survival_oracle(h: &CMatrix, total_time: f64, n: usize) -> f64 {
    let u = propagator_oracle(h, total_time / n as f64);
    let mut psi = CVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
    let mut survival = 1.0;
    for _ in 0..n {
        psi = &u * psi;
        let p = psi[0].norm_sqr();
        survival *= p;
        psi = CVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
    }
    survival
}

/// |⟨l ⊗ r|ψ⟩|² for a two-qubit ψ = Σ ψ_ij |i j⟩, by component sums.
pub fn contraction(psi: &[C; 4], l: &[C; 2], r: &[C; 2]) -> f64 {
    let mut amp = cx(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            amp += l[i].conj() * r[j].conj() * psi[2 * i + j];
        }
    }
    amp.norm_sqr()
}

fn unit(v: [C; 2]) -> [C; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

/// Pr(L1- ∧ R1+) of the symmetric family a = c = sinθ/√2, b = cosθ, built
/// from the amplitudes without touching the library.
pub fn hardy_p4_oracle(theta: f64) -> f64 {
    let a = cx(theta.sin() / 2f64.sqrt(), 0.0);
    let b = cx(theta.cos(), 0.0);
    let c = a;
    let psi = [a, b, cx(0.0, 0.0), c];
    let r1_plus = unit([b.conj(), -a.conj()]);
    let l1_minus = unit([c.conj(), -b.conj()]);
    contraction(&psi, &l1_minus, &r1_plus)
}

/// Grid scan followed by golden-section refinement on [lo, hi].
pub fn grid_golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let h = (hi - lo) / grid as f64;
    let (mut best_x, mut best) = (lo, f(lo));
    for i in 1..=grid {
        let x = lo + i as f64 * h;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - h).max(lo), (best_x + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// (5√5 - 11)/2, the largest Pr(L1- ∧ R1+) over two-qubit Hardy instances.
pub fn hardy_max() -> f64 {
    (5.0 * 5f64.sqrt() - 11.0) / 2.0
}
