//! Independent oracles shared by the integration and acceptance tests. None
//! of this goes through the library's sieve or summation code.
#![allow(dead_code)]

use num_complex::Complex64;

/// Small SplitMix64 stream for picking random test configurations.
pub struct Stream(u64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[(self.next_u64() % items.len() as u64) as usize]
    }
}

/// Prime factorization by trial division: `(p, exponent)` ascending.
pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mobius(n: u64) -> i8 {
    let f = trial_factor(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn liouville(n: u64) -> i8 {
    let omega: u32 = trial_factor(n).iter().map(|&(_, e)| e).sum();
    if omega % 2 == 0 {
        1
    } else {
        -1
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive Gauss-Kronrod quadrature of a complex integrand on `[a, b]`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || (b - a) < 1e-9 {
        return v;
    }
    let m = 0.5 * (a + b);
    integrate(f, a, m, tol / 2.0) + integrate(f, m, b, tol / 2.0)
}

/// `(s - alpha) int_1^N M(x) x^{-(s+1-alpha)} dx` by quadrature on each unit
/// interval, where `m[n - 1] = M(n)`.
pub fn mellin_by_quadrature(m: &[f64], alpha: f64, s: Complex64) -> Complex64 {
    let beta = s - alpha;
    let expo = -(beta + 1.0);
    let kernel = |x: f64| (expo * x.ln()).exp();
    let mut total = Complex64::new(0.0, 0.0);
    for n in 1..m.len() {
        let a = n as f64;
        total += integrate(&kernel, a, a + 1.0, 1e-14) * m[n - 1];
    }
    total * beta
}

/// Prefix sums of `g(n) / n^alpha` computed independently of the library.
pub fn prefix_sums(g: &[i8], alpha: f64) -> Vec<f64> {
    let mut acc = 0.0;
    g[1..]
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            acc += v as f64 / ((i + 1) as f64).powf(alpha);
            acc
        })
        .collect()
}
