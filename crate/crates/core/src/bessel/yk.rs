use super::bessel_ratio;
use crate::scalar::{ln_factorial, CompensatedSum, Real};
use rand::Rng;

/// Atoms lighter than this fraction of the total are left out of the support.
const RESIDUAL_MASS: f64 = 1e-30;

/// Law on `ℕ` with `P(i) ∝ (β/2)^{2i+k} / (i! (i+k)!)`.
///
/// The support is stored from the mode outward, so inversion touches the
/// heaviest atoms first.
#[derive(Clone, Debug)]
pub struct YkDistribution<T> {
    k: u64,
    beta: T,
    atoms: Vec<(u64, T)>,
    cumulative: Vec<T>,
}

impl<T: Real> YkDistribution<T> {
    pub fn new(k: u64, beta: T) -> Self {
        assert!(beta >= T::zero());
        if beta == T::zero() {
            return YkDistribution {
                k,
                beta,
                atoms: vec![(0, T::one())],
                cumulative: vec![T::one()],
            };
        }
        let x = beta / T::lit(2.0);
        let x2 = x * x;
        let kf = T::from_u64(k).unwrap();
        let ratio_up = |i: u64| {
            let ip = T::from_u64(i + 1).unwrap();
            x2 / (ip * (ip + kf))
        };
        let mut mode = 0u64;
        while ratio_up(mode) > T::one() {
            mode += 1;
        }
        // unnormalised weights relative to the mode
        let mut up = Vec::new();
        let mut down = Vec::new();
        let mut total = CompensatedSum::new();
        total.add(T::one());
        let tiny = T::lit(RESIDUAL_MASS);
        let (mut tu, mut iu) = (T::one(), mode);
        let (mut td, mut id) = (T::one(), mode);
        loop {
            let nu = tu * ratio_up(iu);
            let nd = if id > 0 {
                let fi = T::from_u64(id).unwrap();
                td * fi * (fi + kf) / x2
            } else {
                T::zero()
            };
            let stop_up = nu < tiny * total.value();
            let stop_down = nd < tiny * total.value();
            if stop_up && stop_down {
                break;
            }
            if !stop_up {
                tu = nu;
                iu += 1;
                up.push((iu, tu));
                total.add(tu);
            }
            if !stop_down {
                td = nd;
                id -= 1;
                down.push((id, td));
                total.add(td);
            }
        }
        let z = total.value();
        let mut atoms = vec![(mode, T::one() / z)];
        let (mut a, mut b) = (up.into_iter().peekable(), down.into_iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(p), Some(q)) => {
                    if p.1 >= q.1 {
                        a.next()
                    } else {
                        b.next()
                    }
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            let (i, w) = next.unwrap();
            atoms.push((i, w / z));
        }
        let mut acc = CompensatedSum::new();
        let cumulative = atoms
            .iter()
            .map(|&(_, p)| {
                acc.add(p);
                acc.value()
            })
            .collect();
        YkDistribution {
            k,
            beta,
            atoms,
            cumulative,
        }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Support points and probabilities, heaviest first.
    pub fn atoms(&self) -> &[(u64, T)] {
        &self.atoms
    }

    pub fn pmf(&self, i: u64) -> T {
        self.atoms
            .iter()
            .find(|a| a.0 == i)
            .map(|a| a.1)
            .unwrap_or_else(T::zero)
    }

    /// Closed-form `P(i)` through `I_k`, independent of the stored table.
    pub fn pmf_closed_form(&self, i: u64) -> T {
        let x = self.beta / T::lit(2.0);
        let kf = T::from_u64(self.k).unwrap();
        let fi = T::from_u64(i).unwrap();
        let log_term = (T::lit(2.0) * fi + kf) * x.ln() - ln_factorial::<T>(i) - ln_factorial::<T>(i + self.k);
        (log_term - super::log_bessel_i::<T>(self.k as i64, self.beta)).exp()
    }

    /// `E[(Y)_r]` with `(y)_r = y (y−1) ⋯ (y−r+1)`, summed over the table.
    pub fn falling_factorial_moment(&self, r: u32) -> T {
        let mut s = CompensatedSum::new();
        for &(i, p) in &self.atoms {
            if i < r as u64 {
                continue;
            }
            let ff = (0..r as u64).fold(T::one(), |acc, j| acc * T::from_u64(i - j).unwrap());
            s.add(ff * p);
        }
        s.value()
    }

    /// `(β/2)^r I_{k+r}(β) / I_k(β)`.
    pub fn falling_factorial_moment_closed_form(&self, r: u32) -> T {
        let x = self.beta / T::lit(2.0);
        let mut v = T::one();
        for j in 0..r as i64 {
            v = v * x * bessel_ratio(self.k as i64 + j, self.beta);
        }
        v
    }

    pub fn mean(&self) -> T {
        self.falling_factorial_moment(1)
    }

    /// Exact draw by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().unwrap();
        let u = T::from_f64(rng.random::<f64>()).unwrap() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normaliser_is_bessel() {
        for k in 0..6 {
            for beta in [0.2, 1.0, 3.0] {
                let d = YkDistribution::new(k, beta);
                let total: f64 = d.atoms().iter().map(|a| a.1).sum();
                assert!((total - 1.0).abs() < 1e-14);
                for &(i, p) in d.atoms().iter().take(5) {
                    assert!(((p - d.pmf_closed_form(i)) / p).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn moments_match_closed_form() {
        for k in 0..=10 {
            for beta in [0.25, 1.0, 2.0, 4.0] {
                let d = YkDistribution::<f64>::new(k, beta);
                for r in 1..=4 {
                    let a = d.falling_factorial_moment(r);
                    let b = d.falling_factorial_moment_closed_form(r);
                    assert!((a - b).abs() <= 1e-10 * b.max(1.0), "k={k} beta={beta} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn tiny_beta_concentrates_at_zero() {
        let d = YkDistribution::new(3, 1e-6f64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 0));
    }

    #[test]
    fn sample_mean_k0_beta2() {
        let d = YkDistribution::new(0, 2.0f64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = d.sample(&mut rng) as f64;
            s += y;
            s2 += y * y;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let want = d.falling_factorial_moment_closed_form(1);
        assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn sample_second_factorial_moment_k3_beta1() {
        let d = YkDistribution::new(3, 1.0f64);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = d.sample(&mut rng) as f64;
            let ff = y * (y - 1.0);
            s += ff;
            s2 += ff * ff;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let want = d.falling_factorial_moment_closed_form(2);
        assert!((mean - want).abs() < 4.0 * se, "{mean} vs {want} (se {se})");
    }
}
