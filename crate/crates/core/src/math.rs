//! Scalar helpers shared by the numerical modules.
//!
//! Transcendental functions go through `libm` so the crate stays `no_std`.

use rand::Rng;

use crate::Result;

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Radical inverse of `index` in `base`; the building block of Halton points.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point `index` in `[0,1)^dim` using the first `dim` primes.
pub fn halton(index: u64, dim: usize, out: &mut [f64]) {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    for (k, o) in out.iter_mut().take(dim).enumerate() {
        *o = radical_inverse(index, PRIMES[k % PRIMES.len()]);
    }
}

/// Standard normal draw (Box–Muller).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen::<f64>();
    sqrt(-2.0 * ln(u1)) * cos(2.0 * PI * u2)
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for o in out.iter_mut() {
            *o = gaussian(rng);
        }
        let n = norm(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|o| *o /= n);
            return;
        }
    }
}

/// Log-uniform draw in `[lo, hi]`, `0 < lo <= hi`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let t: f64 = rng.gen();
    exp(ln(lo) + t * (ln(hi) - ln(lo)))
}

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy)]
pub struct LineMax {
    pub t: f64,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes a concave function `g` on `[lo, hi]` starting from `t0`.
///
/// A bracket is grown from `t0` with doubling steps (clamped to the interval),
/// then narrowed by golden-section search until its width is below `xtol`.
/// The returned point is the best one evaluated.
pub fn maximize_concave<G>(mut g: G, t0: f64, step: f64, lo: f64, hi: f64, xtol: f64) -> Result<LineMax>
where
    G: FnMut(f64) -> Result<f64>,
{
    let t0 = t0.clamp(lo, hi);
    let mut evals = 0usize;
    let mut best = LineMax {
        t: t0,
        value: f64::NEG_INFINITY,
        evaluations: 0,
    };
    let mut eval = |t: f64, best: &mut LineMax| -> Result<f64> {
        let v = g(t)?;
        evals += 1;
        if v > best.value {
            best.t = t;
            best.value = v;
        }
        Ok(v)
    };

    let f0 = eval(t0, &mut best)?;
    let step = step.abs().max(xtol);
    // bracket [a, c] with interior b, f(b) >= f(a), f(b) >= f(c)
    let (mut a, mut c);
    let right = (t0 + step).min(hi);
    let fr = if right > t0 {
        eval(right, &mut best)?
    } else {
        f64::NEG_INFINITY
    };
    if fr > f0 {
        let (mut prev, mut cur, mut fcur) = (t0, right, fr);
        let mut h = step;
        loop {
            if cur >= hi {
                a = prev;
                c = hi;
                break;
            }
            h *= 2.0;
            let next = (cur + h).min(hi);
            let fnext = eval(next, &mut best)?;
            if fnext <= fcur {
                a = prev;
                c = next;
                break;
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    } else {
        let left = (t0 - step).max(lo);
        let fl = if left < t0 {
            eval(left, &mut best)?
        } else {
            f64::NEG_INFINITY
        };
        if fl > f0 {
            let (mut prev, mut cur, mut fcur) = (t0, left, fl);
            let mut h = step;
            loop {
                if cur <= lo {
                    a = lo;
                    c = prev;
                    break;
                }
                h *= 2.0;
                let next = (cur - h).max(lo);
                let fnext = eval(next, &mut best)?;
                if fnext <= fcur {
                    a = next;
                    c = prev;
                    break;
                }
                prev = cur;
                cur = next;
                fcur = fnext;
            }
        } else {
            a = left;
            c = right.max(t0);
        }
    }

    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let mut f1 = eval(x1, &mut best)?;
    let mut f2 = eval(x2, &mut best)?;
    while c - a > xtol {
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - INV_PHI * (c - a);
            f1 = eval(x1, &mut best)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (c - a);
            f2 = eval(x2, &mut best)?;
        }
    }
    best.evaluations = evals;
    Ok(best)
}

/// Finds `t` in `[lo, hi]` with `f(t) = target` for nondecreasing `f` by bisection.
pub fn bisect_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| ln(*v)).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| ln(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let r = maximize_concave(|t| Ok(2.0 * t - t * t), 0.0, 0.1, -1e6, 1e6, 1e-10).unwrap();
        assert!((r.t - 1.0).abs() < 1e-8);
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_respects_bounds() {
        let r = maximize_concave(Ok, 0.0, 0.1, -1.0, 3.0, 1e-12).unwrap();
        assert_eq!(r.t, 3.0);
        let r = maximize_concave(|t| Ok(-t), 0.5, 0.1, -2.0, 3.0, 1e-12).unwrap();
        assert_eq!(r.t, -2.0);
    }

    #[test]
    fn halton_first_points() {
        let mut p = [0.0; 2];
        halton(1, 2, &mut p);
        assert_eq!(p, [0.5, 1.0 / 3.0]);
        halton(2, 2, &mut p);
        assert_eq!(p, [0.25, 2.0 / 3.0]);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: alloc::vec::Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
