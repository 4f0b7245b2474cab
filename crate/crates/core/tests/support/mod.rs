//! Brute-force rank-correlation oracle and tie-pattern enumeration shared by
//! the test targets.
#![allow(dead_code)]

fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ra, rb) = (brute_ranks(a), brute_ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma).powi(2);
        sbb += (rb[i] - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

pub fn brute_kendall(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let (mut conc, mut disc, mut tie_a, mut tie_b, mut pairs) = (0i64, 0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let da = (a[i] - a[j]).signum() as i64 * (a[i] != a[j]) as i64;
            let db = (b[i] - b[j]).signum() as i64 * (b[i] != b[j]) as i64;
            if da == 0 {
                tie_a += 1;
            }
            if db == 0 {
                tie_b += 1;
            }
            match da * db {
                1 => conc += 1,
                -1 => disc += 1,
                _ => {}
            }
        }
    }
    let denom = (((pairs - tie_a) * (pairs - tie_b)) as f64).sqrt();
    (denom > 0.0).then(|| (conc - disc) as f64 / denom)
}

/// All vectors in `{0..n-1}^n` whose value set is exactly `0..k` for some k.
pub fn dense_patterns(n: usize) -> Vec<Vec<f64>> {
    let total = n.pow(n as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let v: Vec<usize> = (0..n)
            .map(|_| {
                let d = c % n;
                c /= n;
                d
            })
            .collect();
        let max = *v.iter().max().unwrap();
        if (0..=max).all(|k| v.contains(&k)) {
            out.push(v.into_iter().map(|x| x as f64).collect());
        }
    }
    out
}

/// Non-decreasing dense vectors: each step adds 0 or 1.
pub fn sorted_patterns(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << (n - 1))
        .map(|mask| {
            let mut v = vec![0.0];
            for k in 0..n - 1 {
                let last = v[k];
                v.push(last + ((mask >> k) & 1) as f64);
            }
            v
        })
        .collect()
}

pub fn close(x: Option<f64>, y: Option<f64>) -> bool {
    match (x, y) {
        (None, None) => true,
        (Some(p), Some(q)) => (p - q).abs() < 1e-12,
        _ => false,
    }
}
