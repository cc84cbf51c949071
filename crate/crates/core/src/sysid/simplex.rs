use serde::{Deserialize, Serialize};

/// Nelder-Mead coefficients and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Simplex size bound (max-norm distance of every vertex to the best one).
    pub tol_x: f64,
    /// Value spread bound; iteration stops once both the size and the spread are below tolerance.
    pub tol_f: f64,
    pub max_iter: usize,
    /// Relative size of the initial simplex along each coordinate.
    pub initial_scale: f64,
    /// Initial step for coordinates that start at zero.
    pub zero_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tol_x: 1e-10,
            tol_f: 1e-14,
            max_iter: 20_000,
            initial_scale: 0.05,
            zero_step: 0.00025,
        }
    }
}

impl SimplexConfig {
    pub fn is_valid(&self) -> bool {
        self.reflection > 0.0
            && self.expansion > 1.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when `max_iter` was reached before the tolerances.
    pub converged: bool,
    /// Best value after every iteration.
    pub history: Vec<f64>,
}

/// Minimizes `objective` from `x0` with the downhill simplex method.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], config: &SimplexConfig) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 {
            v[i] * (1.0 + config.initial_scale)
        } else {
            config.zero_step
        };
        simplex.push(v);
    }
    nelder_mead_from_simplex(&mut objective, simplex, config)
}

/// Same as [`nelder_mead`] with an explicit initial simplex of `n + 1` vertices.
pub fn nelder_mead_from_simplex<F>(objective: &mut F, simplex: Vec<Vec<f64>>, config: &SimplexConfig) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(config.is_valid(), "invalid simplex coefficients: {config:?}");
    let n = simplex.len() - 1;
    assert!(
        simplex.iter().all(|v| v.len() == n),
        "simplex needs n + 1 vertices of length n"
    );

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut points: Vec<(Vec<f64>, f64)> = simplex
        .into_iter()
        .map(|x| {
            let f = eval(&x, &mut evaluations);
            (x, f)
        })
        .collect();

    let (rho, chi, psi, sigma) = (config.reflection, config.expansion, config.contraction, config.shrink);
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;

    // a perfectly flat starting simplex offers no descent direction
    if points.iter().all(|p| p.1 == points[0].1) {
        let (x, f) = points.swap_remove(0);
        return SimplexResult {
            x,
            f,
            iterations,
            evaluations,
            converged: true,
            history,
        };
    }

    loop {
        points.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best_f = points[0].1;
        let size = points[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&points[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let spread = points[1..]
            .iter()
            .map(|(_, f)| (f - best_f).abs())
            .fold(0.0f64, f64::max);
        if size <= config.tol_x && spread <= config.tol_f {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &points[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = points[n].0.clone();
        let toward = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = toward(rho);
        let fr = eval(&xr, &mut evaluations);
        let mut do_shrink = false;
        if fr < points[0].1 {
            let xe = toward(rho * chi);
            let fe = eval(&xe, &mut evaluations);
            points[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < points[n - 1].1 {
            points[n] = (xr, fr);
        } else if fr < points[n].1 {
            let xc = toward(psi * rho);
            let fc = eval(&xc, &mut evaluations);
            if fc <= fr {
                points[n] = (xc, fc);
            } else {
                do_shrink = true;
            }
        } else {
            let xcc = toward(-psi);
            let fcc = eval(&xcc, &mut evaluations);
            if fcc < points[n].1 {
                points[n] = (xcc, fcc);
            } else {
                do_shrink = true;
            }
        }

        if do_shrink {
            let best = points[0].0.clone();
            for (x, f) in points.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = bi + sigma * (*xi - bi);
                }
                *f = eval(x, &mut evaluations);
            }
        }
        history.push(points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
    }

    let (x, f) = points.swap_remove(0);
    SimplexResult {
        x,
        f,
        iterations,
        evaluations,
        converged,
        history,
    }
}
