//! Method of Moving Asymptotes (Svanberg), with the primal-dual interior
//! point solver for its convex separable subproblem.
//!
//! Solves `min f₀(x) + a₀z + Σ(cᵢyᵢ + ½dᵢyᵢ²)` subject to
//! `fᵢ(x) − aᵢz − yᵢ ≤ 0`, `xmin ≤ x ≤ xmax`, `y, z ≥ 0`. With `f₀ = 0`,
//! `a₀ = aᵢ = 1`, `dᵢ = 0` and large `cᵢ` this is the bound formulation
//! `min z` s.t. `fᵢ ≤ z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmaSettings {
    pub asyinit: f64,
    pub asydecr: f64,
    pub asyincr: f64,
    pub albefa: f64,
    pub raa0: f64,
    /// Maximum change per iteration as a fraction of `xmax − xmin`.
    pub move_limit: f64,
    pub epsimin: f64,
    pub a0: f64,
    pub a: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for MmaSettings {
    fn default() -> Self {
        Self {
            asyinit: 0.5,
            asydecr: 0.7,
            asyincr: 1.2,
            albefa: 0.1,
            raa0: 1e-5,
            move_limit: 1.0,
            epsimin: 1e-7,
            a0: 1.0,
            a: 1.0,
            c: 1000.0,
            d: 0.0,
        }
    }
}

/// Convex separable approximation at the current iterate.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub low: Vec<f64>,
    pub upp: Vec<f64>,
    pub alfa: Vec<f64>,
    pub beta: Vec<f64>,
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,
    /// `m × n`, row-major.
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub a0: f64,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
    pub lam: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Mma {
    pub settings: MmaSettings,
    n: usize,
    m: usize,
    iter: usize,
    low: Vec<f64>,
    upp: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
}

impl Mma {
    pub fn new(n: usize, m: usize, settings: MmaSettings) -> Self {
        Self {
            settings,
            n,
            m,
            iter: 0,
            low: vec![0.0; n],
            upp: vec![0.0; n],
            xold1: Vec::new(),
            xold2: Vec::new(),
        }
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    /// Builds the subproblem at `x` and advances the asymptote history.
    #[allow(clippy::too_many_arguments)]
    pub fn subproblem(
        &mut self,
        x: &[f64],
        xmin: &[f64],
        xmax: &[f64],
        df0dx: &[f64],
        fval: &[f64],
        dfdx: &[Vec<f64>],
    ) -> Result<Subproblem> {
        let (n, m) = (self.n, self.m);
        for (what, len, want) in [
            ("MMA variables", x.len(), n),
            ("MMA lower bounds", xmin.len(), n),
            ("MMA upper bounds", xmax.len(), n),
            ("MMA objective gradient", df0dx.len(), n),
            ("MMA constraint values", fval.len(), m),
            ("MMA constraint gradients", dfdx.len(), m),
        ] {
            if len != want {
                return Err(Error::Dimension {
                    what,
                    expected: want,
                    got: len,
                });
            }
        }
        if let Some(row) = dfdx.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                what: "MMA constraint gradient row",
                expected: n,
                got: row.len(),
            });
        }
        if let Some(i) = (0..n).find(|&i| !(x[i] >= xmin[i] && x[i] <= xmax[i])) {
            return Err(Error::DesignOutOfRange { index: i, value: x[i] });
        }
        if df0dx.iter().chain(fval).chain(dfdx.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: self.iter });
        }
        let s = self.settings;
        self.iter += 1;
        let k = self.iter;
        for i in 0..n {
            let range = xmax[i] - xmin[i];
            if k <= 2 {
                self.low[i] = x[i] - s.asyinit * range;
                self.upp[i] = x[i] + s.asyinit * range;
            } else {
                let zzz = (x[i] - self.xold1[i]) * (self.xold1[i] - self.xold2[i]);
                let factor = if zzz > 0.0 {
                    s.asyincr
                } else if zzz < 0.0 {
                    s.asydecr
                } else {
                    1.0
                };
                let low = x[i] - factor * (self.xold1[i] - self.low[i]);
                let upp = x[i] + factor * (self.upp[i] - self.xold1[i]);
                self.low[i] = low.max(x[i] - 10.0 * range).min(x[i] - 0.01 * range);
                self.upp[i] = upp.min(x[i] + 10.0 * range).max(x[i] + 0.01 * range);
            }
        }
        self.xold2 = std::mem::replace(&mut self.xold1, x.to_vec());

        let mut sub = Subproblem {
            low: self.low.clone(),
            upp: self.upp.clone(),
            alfa: vec![0.0; n],
            beta: vec![0.0; n],
            p0: vec![0.0; n],
            q0: vec![0.0; n],
            p: vec![vec![0.0; n]; m],
            q: vec![vec![0.0; n]; m],
            b: vec![0.0; m],
            a0: s.a0,
            a: vec![s.a; m],
            c: vec![s.c; m],
            d: vec![s.d; m],
        };
        for i in 0..n {
            let range = (xmax[i] - xmin[i]).max(1e-5);
            let (low, upp) = (self.low[i], self.upp[i]);
            sub.alfa[i] = (low + s.albefa * (x[i] - low))
                .max(x[i] - s.move_limit * range)
                .max(xmin[i]);
            sub.beta[i] = (upp - s.albefa * (upp - x[i]))
                .min(x[i] + s.move_limit * range)
                .min(xmax[i]);
            let ux2 = (upp - x[i]).powi(2);
            let xl2 = (x[i] - low).powi(2);
            let pq = |g: f64| {
                let (p, q) = (g.max(0.0), (-g).max(0.0));
                let r = 0.001 * (p + q) + s.raa0 / range;
                ((p + r) * ux2, (q + r) * xl2)
            };
            (sub.p0[i], sub.q0[i]) = pq(df0dx[i]);
            for j in 0..m {
                let (p, q) = pq(dfdx[j][i]);
                sub.p[j][i] = p;
                sub.q[j][i] = q;
                sub.b[j] += p / (upp - x[i]) + q / (x[i] - low);
            }
        }
        for j in 0..m {
            sub.b[j] -= fval[j];
        }
        Ok(sub)
    }

    /// One MMA iteration: returns the new iterate inside `[xmin, xmax]`.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        x: &[f64],
        xmin: &[f64],
        xmax: &[f64],
        df0dx: &[f64],
        fval: &[f64],
        dfdx: &[Vec<f64>],
    ) -> Result<SubSolution> {
        let sub = self.subproblem(x, xmin, xmax, df0dx, fval, dfdx)?;
        let mut sol = subsolv(&sub, self.settings.epsimin)?;
        for i in 0..self.n {
            sol.x[i] = sol.x[i].clamp(xmin[i], xmax[i]);
        }
        Ok(sol)
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: f64,
    lam: Vec<f64>,
    xsi: Vec<f64>,
    eta: Vec<f64>,
    mu: Vec<f64>,
    zet: f64,
    s: Vec<f64>,
}

impl Iterate {
    fn axpy(&self, t: f64, d: &Iterate) -> Iterate {
        let v = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + t * q).collect();
        Iterate {
            x: v(&self.x, &d.x),
            y: v(&self.y, &d.y),
            z: self.z + t * d.z,
            lam: v(&self.lam, &d.lam),
            xsi: v(&self.xsi, &d.xsi),
            eta: v(&self.eta, &d.eta),
            mu: v(&self.mu, &d.mu),
            zet: self.zet + t * d.zet,
            s: v(&self.s, &d.s),
        }
    }
}

fn plam_qlam(sp: &Subproblem, lam: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut plam = sp.p0.clone();
    let mut qlam = sp.q0.clone();
    for (j, &l) in lam.iter().enumerate() {
        for i in 0..plam.len() {
            plam[i] += sp.p[j][i] * l;
            qlam[i] += sp.q[j][i] * l;
        }
    }
    (plam, qlam)
}

fn residual(sp: &Subproblem, it: &Iterate, epsi: f64) -> Vec<f64> {
    let (n, m) = (it.x.len(), it.y.len());
    let (plam, qlam) = plam_qlam(sp, &it.lam);
    let mut r = Vec::with_capacity(3 * n + 4 * m + 2);
    for i in 0..n {
        let (ux, xl) = (sp.upp[i] - it.x[i], it.x[i] - sp.low[i]);
        r.push(plam[i] / (ux * ux) - qlam[i] / (xl * xl) - it.xsi[i] + it.eta[i]);
    }
    for j in 0..m {
        r.push(sp.c[j] + sp.d[j] * it.y[j] - it.mu[j] - it.lam[j]);
    }
    r.push(sp.a0 - it.zet - sp.a.iter().zip(&it.lam).map(|(a, l)| a * l).sum::<f64>());
    for j in 0..m {
        let g: f64 = (0..n)
            .map(|i| sp.p[j][i] / (sp.upp[i] - it.x[i]) + sp.q[j][i] / (it.x[i] - sp.low[i]))
            .sum();
        r.push(g - sp.a[j] * it.z - it.y[j] + it.s[j] - sp.b[j]);
    }
    for i in 0..n {
        r.push(it.xsi[i] * (it.x[i] - sp.alfa[i]) - epsi);
    }
    for i in 0..n {
        r.push(it.eta[i] * (sp.beta[i] - it.x[i]) - epsi);
    }
    for j in 0..m {
        r.push(it.mu[j] * it.y[j] - epsi);
    }
    r.push(it.zet * it.z - epsi);
    for j in 0..m {
        r.push(it.lam[j] * it.s[j] - epsi);
    }
    r
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Primal-dual Newton solve of the MMA subproblem with a decreasing
/// barrier parameter down to `epsimin`.
pub fn subsolv(sp: &Subproblem, epsimin: f64) -> Result<SubSolution> {
    let (n, m) = (sp.alfa.len(), sp.b.len());
    let mut epsi = 1.0;
    let x: Vec<f64> = (0..n).map(|i| 0.5 * (sp.alfa[i] + sp.beta[i])).collect();
    let mut it = Iterate {
        xsi: (0..n).map(|i| (1.0 / (x[i] - sp.alfa[i])).max(1.0)).collect(),
        eta: (0..n).map(|i| (1.0 / (sp.beta[i] - x[i])).max(1.0)).collect(),
        x,
        y: vec![1.0; m],
        z: 1.0,
        lam: vec![1.0; m],
        mu: sp.c.iter().map(|c| (0.5 * c).max(1.0)).collect(),
        zet: 1.0,
        s: vec![1.0; m],
    };
    while epsi > epsimin {
        let mut res = residual(sp, &it, epsi);
        let mut resnorm = norm2(&res);
        let mut resmax = max_abs(&res);
        let mut inner = 0;
        while resmax > 0.9 * epsi && inner < 200 {
            inner += 1;
            let (plam, qlam) = plam_qlam(sp, &it.lam);
            let mut gvec = vec![0.0; m];
            let mut gg = vec![vec![0.0; n]; m];
            let mut delx = vec![0.0; n];
            let mut diagx = vec![0.0; n];
            for i in 0..n {
                let ux = sp.upp[i] - it.x[i];
                let xl = it.x[i] - sp.low[i];
                for j in 0..m {
                    gvec[j] += sp.p[j][i] / ux + sp.q[j][i] / xl;
                    gg[j][i] = sp.p[j][i] / (ux * ux) - sp.q[j][i] / (xl * xl);
                }
                let dpsidx = plam[i] / (ux * ux) - qlam[i] / (xl * xl);
                let (xa, bx) = (it.x[i] - sp.alfa[i], sp.beta[i] - it.x[i]);
                delx[i] = dpsidx - epsi / xa + epsi / bx;
                diagx[i] = 2.0 * (plam[i] / (ux * ux * ux) + qlam[i] / (xl * xl * xl)) + it.xsi[i] / xa + it.eta[i] / bx;
            }
            let dely: Vec<f64> = (0..m)
                .map(|j| sp.c[j] + sp.d[j] * it.y[j] - it.lam[j] - epsi / it.y[j])
                .collect();
            let delz = sp.a0 - sp.a.iter().zip(&it.lam).map(|(a, l)| a * l).sum::<f64>() - epsi / it.z;
            let dellam: Vec<f64> = (0..m)
                .map(|j| gvec[j] - sp.a[j] * it.z - it.y[j] - sp.b[j] + epsi / it.lam[j])
                .collect();
            let diagy: Vec<f64> = (0..m).map(|j| sp.d[j] + it.mu[j] / it.y[j]).collect();
            let diaglamyi: Vec<f64> = (0..m).map(|j| it.s[j] / it.lam[j] + 1.0 / diagy[j]).collect();

            let (dx, dz, dlam) = if m < n {
                let mut aa = vec![vec![0.0; m + 1]; m + 1];
                let mut bb = vec![0.0; m + 1];
                for j in 0..m {
                    bb[j] = dellam[j] + dely[j] / diagy[j]
                        - (0..n).map(|i| gg[j][i] * delx[i] / diagx[i]).sum::<f64>();
                    for k in 0..m {
                        aa[j][k] = (0..n).map(|i| gg[j][i] * gg[k][i] / diagx[i]).sum();
                    }
                    aa[j][j] += diaglamyi[j];
                    aa[j][m] = sp.a[j];
                    aa[m][j] = sp.a[j];
                }
                aa[m][m] = -it.zet / it.z;
                bb[m] = delz;
                let sol = solve_dense(aa, bb)?;
                let dlam = sol[..m].to_vec();
                let dx: Vec<f64> = (0..n)
                    .map(|i| (-delx[i] - (0..m).map(|j| gg[j][i] * dlam[j]).sum::<f64>()) / diagx[i])
                    .collect();
                (dx, sol[m], dlam)
            } else {
                let dellamyi: Vec<f64> = (0..m).map(|j| dellam[j] + dely[j] / diagy[j]).collect();
                let mut aa = vec![vec![0.0; n + 1]; n + 1];
                let mut bb = vec![0.0; n + 1];
                for i in 0..n {
                    for k in 0..n {
                        aa[i][k] = (0..m).map(|j| gg[j][i] * gg[j][k] / diaglamyi[j]).sum();
                    }
                    aa[i][i] += diagx[i];
                    let axz = -(0..m).map(|j| gg[j][i] * sp.a[j] / diaglamyi[j]).sum::<f64>();
                    aa[i][n] = axz;
                    aa[n][i] = axz;
                    bb[i] = -(delx[i] + (0..m).map(|j| gg[j][i] * dellamyi[j] / diaglamyi[j]).sum::<f64>());
                }
                aa[n][n] = it.zet / it.z + (0..m).map(|j| sp.a[j] * sp.a[j] / diaglamyi[j]).sum::<f64>();
                bb[n] = -(delz - (0..m).map(|j| sp.a[j] * dellamyi[j] / diaglamyi[j]).sum::<f64>());
                let sol = solve_dense(aa, bb)?;
                let dx = sol[..n].to_vec();
                let dz = sol[n];
                let dlam = (0..m)
                    .map(|j| {
                        let gdx: f64 = (0..n).map(|i| gg[j][i] * dx[i]).sum();
                        gdx / diaglamyi[j] - dz * sp.a[j] / diaglamyi[j] + dellamyi[j] / diaglamyi[j]
                    })
                    .collect();
                (dx, dz, dlam)
            };

            let dy: Vec<f64> = (0..m).map(|j| (-dely[j] + dlam[j]) / diagy[j]).collect();
            let d = Iterate {
                xsi: (0..n)
                    .map(|i| {
                        let xa = it.x[i] - sp.alfa[i];
                        -it.xsi[i] + epsi / xa - it.xsi[i] * dx[i] / xa
                    })
                    .collect(),
                eta: (0..n)
                    .map(|i| {
                        let bx = sp.beta[i] - it.x[i];
                        -it.eta[i] + epsi / bx + it.eta[i] * dx[i] / bx
                    })
                    .collect(),
                mu: (0..m)
                    .map(|j| -it.mu[j] + epsi / it.y[j] - it.mu[j] * dy[j] / it.y[j])
                    .collect(),
                zet: -it.zet + epsi / it.z - it.zet * dz / it.z,
                s: (0..m)
                    .map(|j| -it.s[j] + epsi / it.lam[j] - it.s[j] * dlam[j] / it.lam[j])
                    .collect(),
                x: dx,
                y: dy,
                z: dz,
                lam: dlam,
            };

            // largest step keeping every positive quantity positive
            let mut stm: f64 = 1.0;
            let mut ratio = |v: &[f64], dv: &[f64]| {
                for (a, b) in v.iter().zip(dv) {
                    stm = stm.max(-1.01 * b / a);
                }
            };
            ratio(&it.y, &d.y);
            ratio(&[it.z], &[d.z]);
            ratio(&it.lam, &d.lam);
            ratio(&it.xsi, &d.xsi);
            ratio(&it.eta, &d.eta);
            ratio(&it.mu, &d.mu);
            ratio(&[it.zet], &[d.zet]);
            ratio(&it.s, &d.s);
            for i in 0..n {
                stm = stm.max(-1.01 * d.x[i] / (it.x[i] - sp.alfa[i]));
                stm = stm.max(1.01 * d.x[i] / (sp.beta[i] - it.x[i]));
            }
            let mut step = 1.0 / stm;

            let mut tries = 0;
            let mut trial;
            loop {
                tries += 1;
                trial = it.axpy(step, &d);
                res = residual(sp, &trial, epsi);
                let newnorm = norm2(&res);
                step /= 2.0;
                if newnorm <= resnorm || tries >= 50 {
                    resnorm = newnorm;
                    break;
                }
            }
            it = trial;
            resmax = max_abs(&res);
        }
        epsi *= 0.1;
    }
    if it.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok(SubSolution {
        x: it.x,
        y: it.y,
        z: it.z,
        lam: it.lam,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_keep_the_iterate() {
        // with all gradients zero only the raa0 term curves the subproblem,
        // so the barrier offset is visible unless epsimin is tight
        let n = 5;
        let settings = MmaSettings {
            epsimin: 1e-14,
            ..Default::default()
        };
        let mut mma = Mma::new(n, 2, settings);
        let x = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        let (lo, hi) = (vec![0.0; n], vec![1.0; n]);
        let zero = vec![0.0; n];
        let sol = mma
            .update(&x, &lo, &hi, &zero, &[1.0, 2.0], &[zero.clone(), zero.clone()])
            .unwrap();
        for (a, b) in sol.x.iter().zip(&x) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
        // the bound variable settles on the largest constraint
        assert!((sol.z - 2.0).abs() < 1e-4, "{}", sol.z);
    }

    /// For one variable the subproblem reduces to
    /// `min φ₀(x) + max(0, φ₁(x) − b)` over `[α, β]`, which is convex.
    #[test]
    fn single_variable_subproblem_matches_direct_minimization() {
        let settings = MmaSettings {
            epsimin: 1e-12,
            ..Default::default()
        };
        for (x0, g0, g1, f0g) in [(0.4, 0.3, 2.0, 0.5), (0.7, -0.2, -1.5, 0.4), (0.5, 1.0, 4.0, -0.3)] {
            let mut mma = Mma::new(1, 1, settings);
            let sp = mma
                .subproblem(&[x0], &[0.0], &[1.0], &[f0g], &[g0], &[vec![g1]])
                .unwrap();
            let sol = subsolv(&sp, settings.epsimin).unwrap();
            // bisection on the right derivative of the convex reduced objective
            let dright = |x: f64| {
                let (u, l) = (sp.upp[0] - x, x - sp.low[0]);
                let d0 = sp.p0[0] / (u * u) - sp.q0[0] / (l * l);
                let g = sp.p[0][0] / u + sp.q[0][0] / l - sp.b[0];
                let dg = sp.p[0][0] / (u * u) - sp.q[0][0] / (l * l);
                d0 + if g > 0.0 || (g == 0.0 && dg > 0.0) { sp.a0 * dg } else { 0.0 }
            };
            let (mut a, mut b) = (sp.alfa[0], sp.beta[0]);
            let oracle = if dright(a) >= 0.0 {
                a
            } else if dright(b) < 0.0 {
                b
            } else {
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if dright(mid) >= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            };
            assert!((sol.x[0] - oracle).abs() < 1e-8, "{} vs {oracle}", sol.x[0]);
        }
    }

    #[test]
    fn oscillating_variable_shrinks_its_asymptotes() {
        let mut mma = Mma::new(2, 1, MmaSettings::default());
        let (lo, hi) = (vec![0.0; 2], vec![1.0; 2]);
        let g = vec![vec![1.0, 1.0]];
        let zero = vec![0.0; 2];
        mma.subproblem(&[0.5, 0.5], &lo, &hi, &zero, &[0.0], &g).unwrap();
        mma.subproblem(&[0.6, 0.6], &lo, &hi, &zero, &[0.0], &g).unwrap();
        let (l1, u1) = (mma.asymptotes().0.to_vec(), mma.asymptotes().1.to_vec());
        // variable 0 reverses direction, variable 1 keeps going
        let x = [0.55, 0.7];
        mma.subproblem(&x, &lo, &hi, &zero, &[0.0], &g).unwrap();
        let (l2, u2) = mma.asymptotes();
        assert!((x[0] - l2[0] - 0.7 * (0.6 - l1[0])).abs() < 1e-14);
        assert!((u2[0] - x[0] - 0.7 * (u1[0] - 0.6)).abs() < 1e-14);
        assert!((x[1] - l2[1] - 1.2 * (0.6 - l1[1])).abs() < 1e-14);
    }

    #[test]
    fn scaling_both_gradients_preserves_the_step_direction() {
        let n = 4;
        let x = vec![0.2, 0.4, 0.6, 0.8];
        let (lo, hi) = (vec![0.0; n], vec![1.0; n]);
        let zero = vec![0.0; n];
        let g1 = vec![0.5, -0.2, 0.1, 0.3];
        let g2 = vec![-0.1, 0.4, 0.2, -0.3];
        let run = |s: f64| {
            let mut mma = Mma::new(n, 2, MmaSettings::default());
            let sol = mma
                .update(
                    &x,
                    &lo,
                    &hi,
                    &zero,
                    &[1.0 * s, 1.0 * s],
                    &[g1.iter().map(|v| v * s).collect(), g2.iter().map(|v| v * s).collect()],
                )
                .unwrap();
            sol.x
        };
        let (a, b) = (run(1.0), run(3.0));
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-3, "{p} {q}");
        }
    }

    #[test]
    fn iterates_stay_in_the_box_and_solve_a_minmax_problem() {
        // min max(f1, f2) with f1 = Σ(x−0.2)², f2 = Σ(x−0.6)²: optimum at x = 0.4
        let n = 3;
        let mut mma = Mma::new(n, 2, MmaSettings::default());
        let (lo, hi) = (vec![0.0; n], vec![1.0; n]);
        let mut x = vec![0.9, 0.05, 0.5];
        for _ in 0..60 {
            let f1: f64 = x.iter().map(|v| (v - 0.2f64).powi(2)).sum();
            let f2: f64 = x.iter().map(|v| (v - 0.6f64).powi(2)).sum();
            let d1: Vec<f64> = x.iter().map(|v| 2.0 * (v - 0.2)).collect();
            let d2: Vec<f64> = x.iter().map(|v| 2.0 * (v - 0.6)).collect();
            x = mma.update(&x, &lo, &hi, &vec![0.0; n], &[f1, f2], &[d1, d2]).unwrap().x;
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        for v in &x {
            assert!((v - 0.4).abs() < 1e-3, "{x:?}");
        }
    }

    #[test]
    fn rejects_out_of_box_and_mismatched_inputs() {
        let mut mma = Mma::new(2, 1, MmaSettings::default());
        let (lo, hi) = (vec![0.0; 2], vec![1.0; 2]);
        assert!(mma.update(&[1.5, 0.0], &lo, &hi, &[0.0; 2], &[0.0], &[vec![0.0; 2]]).is_err());
        assert!(mma.update(&[0.5, 0.5], &lo, &hi, &[0.0; 2], &[0.0, 1.0], &[vec![0.0; 2]]).is_err());
        assert!(mma.update(&[0.5, 0.5], &lo, &hi, &[0.0; 2], &[f64::NAN], &[vec![0.0; 2]]).is_err());
    }
}
