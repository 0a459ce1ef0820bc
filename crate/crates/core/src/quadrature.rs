//! Adaptive Gauss–Kronrod (10/21) quadrature and fixed Gauss–Legendre rules.

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

const MAX_DEPTH: u32 = 48;

/// One 21-point Kronrod panel. Returns (estimate, error, ∫|f|).
pub fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let hk = h.abs();
    (kron * h, ((kron - gauss) * h).abs(), abs * hk)
}

/// ∫_a^b f with absolute tolerance `tol`, starting from a single panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_panels(f, a, b, 1, tol)
}

/// ∫_a^b f starting from `panels` equal panels, each refined by bisection
/// until its error share falls below `tol · width / (b − a)`.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = panels.max(1);
    let total = (b - a).abs();
    let step = (b - a) / panels as f64;
    let mut sum = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = Vec::with_capacity(64);
    for p in (0..panels).rev() {
        let lo = a + step * p as f64;
        let hi = if p + 1 == panels { b } else { a + step * (p + 1) as f64 };
        stack.push((lo, hi, 0));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err, abs) = gauss_kronrod_21(&f, lo, hi);
        let share = tol * (hi - lo).abs() / total;
        let noise = 50.0 * f64::EPSILON * abs;
        if err <= share.max(noise) || depth >= MAX_DEPTH {
            sum += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    sum
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_deriv(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Fixed-rule integral with `panels` Gauss–Legendre panels of `order` points.
pub fn gauss_legendre_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            sum += wi * f(c + 0.5 * h * xi);
        }
    }
    0.5 * h * sum
}
