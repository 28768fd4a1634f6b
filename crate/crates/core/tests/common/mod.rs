//! Brute-force oracle over all `3^n` configurations, built directly from the
//! Hamiltonian `H = sum_j s_j^2 - (K/n) (sum_j s_j)^2`.

#![allow(dead_code, clippy::needless_range_loop)]

pub struct FullChain {
    pub n: usize,
    pub configs: Vec<Vec<i8>>,
    /// Dense row-major transition matrix.
    pub p: Vec<f64>,
    pub pi: Vec<f64>,
}

fn hamiltonian(s: &[i8], k: f64) -> f64 {
    let n = s.len() as f64;
    let sq: f64 = s.iter().map(|&x| (x as f64) * (x as f64)).sum();
    let tot: f64 = s.iter().map(|&x| x as f64).sum();
    sq - k / n * tot * tot
}

pub fn configs(n: usize) -> Vec<Vec<i8>> {
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let s = (code % 3) as i8 - 1;
                    code /= 3;
                    s
                })
                .collect()
        })
        .collect()
}

fn code_of(s: &[i8]) -> usize {
    s.iter().rev().fold(0, |acc, &x| acc * 3 + (x + 1) as usize)
}

impl FullChain {
    pub fn new(n: usize, beta: f64, k: f64) -> Self {
        let configs = configs(n);
        let m = configs.len();
        let mut p = vec![0.0; m * m];
        for (a, s) in configs.iter().enumerate() {
            for i in 0..n {
                let mut t = s.clone();
                let weights: Vec<f64> = [-1i8, 0, 1]
                    .iter()
                    .map(|&v| {
                        t[i] = v;
                        (-beta * hamiltonian(&t, k)).exp()
                    })
                    .collect();
                let z: f64 = weights.iter().sum();
                for (w, &v) in weights.iter().zip(&[-1i8, 0, 1]) {
                    t[i] = v;
                    p[a * m + code_of(&t)] += w / z / n as f64;
                }
            }
        }
        let w: Vec<f64> = configs.iter().map(|s| (-beta * hamiltonian(s, k)).exp()).collect();
        let z: f64 = w.iter().sum();
        let pi = w.iter().map(|x| x / z).collect();
        Self { n, configs, p, pi }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.len() + b]
    }

    /// `(n_minus, n_plus)` of configuration `a`.
    pub fn counts(&self, a: usize) -> (usize, usize) {
        let s = &self.configs[a];
        (s.iter().filter(|&&x| x == -1).count(), s.iter().filter(|&&x| x == 1).count())
    }

    pub fn magnetization(&self, a: usize) -> i64 {
        self.configs[a].iter().map(|&x| x as i64).sum()
    }

    pub fn step(&self, mu: &[f64]) -> Vec<f64> {
        let m = self.len();
        let mut out = vec![0.0; m];
        for a in 0..m {
            if mu[a] != 0.0 {
                for b in 0..m {
                    out[b] += mu[a] * self.p[a * m + b];
                }
            }
        }
        out
    }
}

/// Largest absolute discrepancy between the lumped kernel and stationary law
/// and their brute-force counterparts: `(matrix error, stationary error)`.
pub fn lumping_error(n: usize, beta: f64, k: f64) -> (f64, f64) {
    use blume_capel::exactchain::{gibbs_stationary, glauber_lumped_matrix};
    use blume_capel::ModelParams;

    let full = FullChain::new(n, beta, k);
    let params = ModelParams::new(n, beta, k).unwrap();
    let lumped = glauber_lumped_matrix(&params).unwrap();
    let pi = gibbs_stationary(&params).unwrap();
    let space = lumped.space();
    let class = |a: usize| {
        let (m, p) = full.counts(a);
        space.index_of(m, p)
    };
    let mut mat_err: f64 = 0.0;
    for a in 0..full.len() {
        let mut row = vec![0.0; space.len()];
        for b in 0..full.len() {
            row[class(b)] += full.get(a, b);
        }
        for (j, &v) in row.iter().enumerate() {
            mat_err = mat_err.max((v - lumped.get(class(a), j)).abs());
        }
    }
    let mut pi_lumped = vec![0.0; space.len()];
    for a in 0..full.len() {
        pi_lumped[class(a)] += full.pi[a];
    }
    let pi_err = pi_lumped.iter().zip(&pi.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (mat_err, pi_err)
}

/// Chi-square p-values of the one-step update frequencies of each chain of the
/// threshold coupling, from a fixed pair of random configurations, against the
/// exact heat-bath law. Cells are (current spin of chosen site, new spin).
pub fn coupled_marginal_p_values(n: usize, beta: f64, k: f64, trials: usize, seed: u64) -> (f64, f64) {
    use blume_capel::dynamics::{update_probs, Glauber, RngStream, SpinConfiguration};
    use blume_capel::ModelParams;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let params = ModelParams::new(n, beta, k).unwrap();
    let g = Glauber::new(&params);
    let mut rng = RngStream::new(seed, 0);
    let random = |rng: &mut RngStream| {
        SpinConfiguration::new((0..n).map(|_| rng.index(3) as i8 - 1).collect()).unwrap()
    };
    let x = random(&mut rng);
    let y = random(&mut rng);
    let mut obs = [[[0usize; 3]; 3]; 2];
    for _ in 0..trials {
        let mv = g.propose_coupled(&x, &y, &mut rng);
        obs[0][(x.spin(mv.site) + 1) as usize][(mv.x_new + 1) as usize] += 1;
        obs[1][(y.spin(mv.site) + 1) as usize][(mv.y_new + 1) as usize] += 1;
    }
    let p_value = |c: &SpinConfiguration, o: &[[usize; 3]; 3]| {
        let (nm, nz, np) = c.counts();
        let mut stat = 0.0;
        let mut cells = 0;
        for (a, count) in [nm, nz, np].into_iter().enumerate() {
            if count == 0 {
                continue;
            }
            let law = update_probs(&params, c.total_spin() - (a as i64 - 1));
            for b in 0..3 {
                let e = trials as f64 * count as f64 / n as f64 * law.prob(b as i8 - 1);
                stat += (o[a][b] as f64 - e).powi(2) / e;
                cells += 1;
            }
        }
        ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
    };
    (p_value(&x, &obs[0]), p_value(&y, &obs[1]))
}

/// Counts coordinatewise order violations over `trials` random ordered pairs,
/// each advanced by `steps` coupled steps.
pub fn monotonicity_violations(n: usize, beta: f64, k: f64, trials: usize, steps: usize, seed: u64) -> usize {
    use blume_capel::dynamics::{Glauber, RngStream, SpinConfiguration};
    use blume_capel::ModelParams;

    let g = Glauber::new(&ModelParams::new(n, beta, k).unwrap());
    let mut violations = 0;
    for r in 0..trials as u64 {
        let mut rng = RngStream::new(seed, r);
        let lo: Vec<i8> = (0..n).map(|_| rng.index(3) as i8 - 1).collect();
        let hi: Vec<i8> = lo.iter().map(|&s| (s + rng.index(3) as i8).min(1)).collect();
        let mut x = SpinConfiguration::new(lo).unwrap();
        let mut y = SpinConfiguration::new(hi).unwrap();
        assert!(x.le(&y));
        for _ in 0..steps {
            g.coupled_step(&mut x, &mut y, &mut rng);
            if !x.le(&y) {
                violations += 1;
                break;
            }
        }
    }
    violations
}

/// Goodness of fit of a lumped-state histogram against exact probabilities.
///
/// Returns the total variation distance of the magnetisation marginals and the
/// chi-square p-value of the full `(n_minus, n_plus)` histogram, with cells of
/// expected count below 5 pooled. The full-histogram TV is not used: with
/// `O(n^2)` cells its sampling noise alone is comparable to the tolerances.
pub fn histogram_fit(n: usize, hist: &[usize], probs: &[f64]) -> (f64, f64) {
    use blume_capel::exactchain::StateSpace;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let space = StateSpace::new(n).unwrap();
    let m: usize = hist.iter().sum();
    let mf = m as f64;
    let mut emp = vec![0.0; 2 * n + 1];
    let mut exact = vec![0.0; 2 * n + 1];
    for (i, s) in space.iter().enumerate() {
        let j = (s.magnetization() + n as i64) as usize;
        emp[j] += hist[i] as f64 / mf;
        exact[j] += probs[i];
    }
    let tv = 0.5 * emp.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&h, &p) in hist.iter().zip(probs) {
        let e = p * mf;
        if e < 5.0 {
            pool_o += h as f64;
            pool_e += e;
        } else {
            stat += (h as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    (tv, ChiSquared::new((cells - 1) as f64).unwrap().sf(stat))
}
