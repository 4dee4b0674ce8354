use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::record::{mse, sample_std, Row, RunRecord};
use crate::derivatives::{
    exact_derivative_mixed, exact_derivative_pure, finite_difference_mixed, finite_difference_pure,
    stand_psr_trotter, stoc_psr_mixed, stoc_psr_pure, DerivativeEstimate, Method, StocConfig,
};
use crate::error::{Error, Result};
use crate::fisher::{crb, qfim_mixed, qfim_pure, qfim_pure_from_raw, FisherMatrix};
use crate::hamiltonian::{field_angle_qfi, FieldAngleModel, Model, ParamHamiltonian};
use crate::noise::{dephasing_channel, noisy_evolved_state};
use crate::qcore::{evolve, ghz, StateVector};
use crate::seeds::derive_seed;
use crate::tomography::{quench_cfim, scaling_curves, QuenchDerivative, QuenchInstance};

/// Total-variance bound `tr[Q⁻¹]` of the three-qubit GHZ probe under
/// `φ_x = φ_y = φ_z = ϕ`, in the closed form
/// `7/(108t²) + 3ϕ²/(54 sin²(√3ϕt))`.
pub fn fig3_closed_form(t: f64, phi: f64) -> f64 {
    7.0 / (108.0 * t * t) + 3.0 * phi * phi / (54.0 * (3f64.sqrt() * phi * t).sin().powi(2))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Fig2 => run_fig2(cfg),
        Experiment::Fig3a | Experiment::Fig3b => run_fig3(cfg),
        Experiment::Fig4 => run_fig4(cfg),
        Experiment::Custom => run_custom(cfg),
    }
}

fn stoc_config(cfg: &ExperimentConfig, seed: u64, t: f64) -> StocConfig {
    StocConfig::new(cfg.samples, cfg.mu, seed, t).with_sampling(cfg.sampling)
}

/// `tr[F⁻¹]`, with a singular matrix mapped to an unbounded variance.
fn total_variance(f: &FisherMatrix) -> Result<f64> {
    match crb(f, 1) {
        Ok(v) => Ok(v),
        Err(Error::SingularFisher { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// First batch as the value, spread over all batches as its error.
fn batch_summary(values: &[f64]) -> (f64, Option<f64>) {
    let err = (values.len() > 1).then(|| sample_std(values));
    (values[0], err)
}

struct Point {
    t: f64,
    phi: Option<f64>,
    gamma: Option<f64>,
}

impl Point {
    fn row(&self, cfg: &ExperimentConfig, method: Method, value: f64, stat_err: Option<f64>, seed: Option<u64>) -> Row {
        let stoc = method == Method::Stoc;
        Row {
            experiment: cfg.experiment.to_string(),
            t: Some(self.t),
            phi: self.phi,
            gamma: self.gamma,
            p: None,
            method: method.to_string(),
            value,
            stat_err,
            samples: stoc.then_some(cfg.samples),
            mu: stoc.then_some(cfg.mu),
            seed: if stoc { seed } else { None },
        }
    }
}

/// Single-qubit field-angle QFI against time: closed form, Stoc.PSR and
/// Trotterised Stand.PSR, probe `|+⟩`.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let psi0 = StateVector::plus();
    let grid: Vec<(usize, usize)> = (0..cfg.t_grid.len())
        .flat_map(|it| (0..cfg.phi_values.len()).map(move |ip| (it, ip)))
        .collect();
    let per_point: Vec<Result<Vec<Row>>> = grid
        .par_iter()
        .map(|&(it, ip)| {
            let (t, phi) = (cfg.t_grid[it], cfg.phi_values[ip]);
            let point = Point { t, phi: Some(phi), gamma: None };
            let psi = evolve(&FieldAngleModel.unitary(t, &[phi])?, &psi0)?;
            let mut rows = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let row = match method {
                    Method::Exact => point.row(cfg, method, field_angle_qfi(t, phi), None, None),
                    Method::Stoc => {
                        let seeds: Vec<u64> = (0..cfg.batches as u64)
                            .map(|b| derive_seed(cfg.seed, &[it as u64, ip as u64, b]))
                            .collect();
                        let qs = seeds
                            .iter()
                            .map(|&s| {
                                let (_, sum) = stoc_psr_pure(&FieldAngleModel, &psi0, 0, &[phi], &stoc_config(cfg, s, t))?;
                                Ok(qfim_pure_from_raw(&psi, &[sum])?.entries()[(0, 0)])
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        let (value, err) = batch_summary(&qs);
                        point.row(cfg, method, value, err, Some(seeds[0]))
                    }
                    Method::Stand => {
                        let d = stand_psr_trotter(&psi0, phi, t, cfg.trotter_steps)?;
                        let q = qfim_pure(&psi, &[d.vector().expect("pure derivative").clone()])?;
                        point.row(cfg, method, q.entries()[(0, 0)], None, None)
                    }
                    Method::Fd => unreachable!("rejected by validation"),
                };
                rows.push(row);
            }
            Ok(rows)
        })
        .collect();
    let rows = flatten(per_point)?;

    let mut mses = BTreeMap::new();
    for &method in cfg.methods.iter().filter(|m| **m != Method::Exact) {
        let tag = method.as_str();
        let mut all = (Vec::new(), Vec::new());
        for &phi in &cfg.phi_values {
            let (ys, fs): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.method == tag && r.phi == Some(phi))
                .map(|r| (r.value, field_angle_qfi(r.t.unwrap_or_default(), phi)))
                .unzip();
            mses.insert(format!("{tag}:phi={phi}"), mse(&ys, &fs)?);
            all.0.extend(ys);
            all.1.extend(fs);
        }
        mses.insert(tag.to_string(), mse(&all.0, &all.1)?);
    }
    Ok(RunRecord::new(cfg, rows, mses))
}

/// One grid point of a total-variance scan: `tr[Q⁻¹]` of `psi0` evolved
/// under `model` at `phi`, dephased when `point.gamma` is set.
struct Probe<'a> {
    model: &'a dyn Model,
    psi0: &'a StateVector,
    phi: &'a [f64],
    point: Point,
    /// Grid indices mixed into the Stoc.PSR batch seeds.
    seed_parts: Vec<u64>,
}

impl Probe<'_> {
    /// One row per configured method. `closed_form` stands in for the
    /// quadrature route of `exact` on noiseless points.
    fn rows(&self, cfg: &ExperimentConfig, closed_form: Option<f64>) -> Result<Vec<Row>> {
        let (model, phi, t) = (self.model, self.phi, self.point.t);
        let d = model.n_params();
        let batch_seeds = || -> Vec<u64> {
            (0..cfg.batches as u64)
                .map(|b| {
                    let mut parts = self.seed_parts.clone();
                    parts.push(b);
                    derive_seed(cfg.seed, &parts)
                })
                .collect()
        };
        let mut rows = Vec::with_capacity(cfg.methods.len());
        if let Some(g) = self.point.gamma {
            let rho0 = self.psi0.to_density();
            let channel = dephasing_channel(g, t)?;
            let rho = noisy_evolved_state(model, &rho0, t, phi, g)?;
            let variance = |derive: &dyn Fn(usize) -> Result<DerivativeEstimate>| -> Result<f64> {
                let drhos = (0..d)
                    .map(|j| Ok(derive(j)?.matrix().expect("mixed derivative").clone()))
                    .collect::<Result<Vec<_>>>()?;
                total_variance(&qfim_mixed(&rho, &drhos, cfg.cutoff)?)
            };
            for &method in &cfg.methods {
                let row = match method {
                    Method::Exact => {
                        let v = variance(&|j| {
                            exact_derivative_mixed(model, &rho0, j, phi, t, cfg.quad_steps, Some(&channel))
                        })?;
                        self.point.row(cfg, method, v, None, None)
                    }
                    Method::Fd => {
                        let v = variance(&|j| {
                            finite_difference_mixed(model, &rho0, j, phi, t, cfg.fd_eps, Some(&channel))
                        })?;
                        self.point.row(cfg, method, v, None, None)
                    }
                    Method::Stoc => {
                        let seeds = batch_seeds();
                        let vs = seeds
                            .iter()
                            .map(|&s| {
                                let sc = stoc_config(cfg, s, t);
                                variance(&|j| stoc_psr_mixed(model, &rho0, j, phi, &sc, Some(&channel)))
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        let (value, err) = batch_summary(&vs);
                        self.point.row(cfg, method, value, err, Some(seeds[0]))
                    }
                    Method::Stand => unreachable!("rejected by validation"),
                };
                rows.push(row);
            }
        } else {
            let psi = evolve(&model.unitary(t, phi)?, self.psi0)?;
            let variance = |derive: &dyn Fn(usize) -> Result<DerivativeEstimate>| -> Result<f64> {
                let dpsis = (0..d)
                    .map(|j| Ok(derive(j)?.vector().expect("pure derivative").clone()))
                    .collect::<Result<Vec<_>>>()?;
                total_variance(&qfim_pure(&psi, &dpsis)?)
            };
            for &method in &cfg.methods {
                let row = match method {
                    Method::Exact => {
                        let v = match closed_form {
                            Some(v) => v,
                            None => variance(&|j| exact_derivative_pure(model, self.psi0, j, phi, t, cfg.quad_steps))?,
                        };
                        self.point.row(cfg, method, v, None, None)
                    }
                    Method::Fd => {
                        let v = variance(&|j| finite_difference_pure(model, self.psi0, j, phi, t, cfg.fd_eps))?;
                        self.point.row(cfg, method, v, None, None)
                    }
                    Method::Stoc => {
                        let seeds = batch_seeds();
                        let vs = seeds
                            .iter()
                            .map(|&s| {
                                let sc = stoc_config(cfg, s, t);
                                let sums = (0..d)
                                    .map(|j| Ok(stoc_psr_pure(model, self.psi0, j, phi, &sc)?.1))
                                    .collect::<Result<Vec<_>>>()?;
                                total_variance(&qfim_pure_from_raw(&psi, &sums)?)
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        let (value, err) = batch_summary(&vs);
                        self.point.row(cfg, method, value, err, Some(seeds[0]))
                    }
                    Method::Stand => unreachable!("rejected by validation"),
                };
                rows.push(row);
            }
        }
        Ok(rows)
    }
}

/// MSE of each non-exact method against `exact`, per `(ϕ, γ)` curve,
/// over points where both values are finite.
fn mse_against_exact(cfg: &ExperimentConfig, rows: &[Row], phis: &[Option<f64>], gammas: &[Option<f64>]) -> Result<BTreeMap<String, f64>> {
    let mut mses = BTreeMap::new();
    if !cfg.methods.contains(&Method::Exact) {
        return Ok(mses);
    }
    let exact: Vec<&Row> = rows.iter().filter(|r| r.method == "exact").collect();
    for &method in cfg.methods.iter().filter(|m| **m != Method::Exact) {
        let tag = method.as_str();
        for phi in phis {
            for gamma in gammas {
                let (ys, fs): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.method == tag && r.phi == *phi && r.gamma == *gamma)
                    .filter_map(|r| {
                        let f = exact.iter().find(|e| e.t == r.t && e.phi == r.phi && e.gamma == r.gamma)?;
                        (r.value.is_finite() && f.value.is_finite()).then_some((r.value, f.value))
                    })
                    .unzip();
                if ys.is_empty() {
                    continue;
                }
                let mut key = tag.to_string();
                if let Some(p) = phi {
                    key.push_str(&format!(":phi={p}"));
                }
                if let Some(g) = gamma {
                    key.push_str(&format!(":gamma={g}"));
                }
                mses.insert(key, mse(&ys, &fs)?);
            }
        }
    }
    Ok(mses)
}

/// Total variance `tr[Q⁻¹]` of the GHZ probe under the collective field
/// with all three angles equal to `ϕ`. Noiseless (`fig3a`) rows use the
/// pure-state formulas; `fig3b` dephases every qubit after the evolution.
///
/// `exact` is the closed form for `fig3a` and the quadrature-based
/// noisy pipeline for `fig3b`, which has no closed form.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let noisy = cfg.experiment == Experiment::Fig3b;
    if !noisy && cfg.methods.contains(&Method::Exact) && cfg.n_qubits != 3 {
        return Err(Error::Config(vec![
            "n_qubits: the fig3a closed form is for three qubits".into(),
        ]));
    }
    let model = ParamHamiltonian::collective_field(cfg.n_qubits)?;
    let psi0 = ghz(cfg.n_qubits)?;
    let gammas: Vec<Option<f64>> = if noisy {
        cfg.gammas.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let grid: Vec<(usize, usize, usize)> = (0..cfg.t_grid.len())
        .flat_map(|it| {
            let ng = gammas.len();
            (0..cfg.phi_values.len()).flat_map(move |ip| (0..ng).map(move |ig| (it, ip, ig)))
        })
        .collect();
    let d = model.n_params();

    let per_point: Vec<Result<Vec<Row>>> = grid
        .par_iter()
        .map(|&(it, ip, ig)| {
            let t = cfg.t_grid[it];
            let varphi = cfg.phi_values[ip];
            let phi = vec![varphi; d];
            let gamma = gammas[ig];
            let seed_parts = match gamma {
                Some(_) => vec![it as u64, ip as u64, ig as u64],
                None => vec![it as u64, ip as u64],
            };
            let closed_form = (!noisy).then(|| fig3_closed_form(t, varphi));
            let probe = Probe {
                model: &model,
                psi0: &psi0,
                phi: &phi,
                point: Point { t, phi: Some(varphi), gamma },
                seed_parts,
            };
            probe.rows(cfg, closed_form)
        })
        .collect();
    let rows = flatten(per_point)?;

    let phis: Vec<Option<f64>> = cfg.phi_values.iter().copied().map(Some).collect();
    let mses = mse_against_exact(cfg, &rows, &phis, &gammas)?;
    Ok(RunRecord::new(cfg, rows, mses))
}

/// `tr[Q⁻¹]` against time for a Hamiltonian assembled from the configured
/// generators at the fixed parameter vector `params`. Points are noiseless
/// unless `gammas` is non-empty, in which case every rate gets its own curve.
pub fn run_custom(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let generators = cfg
        .generators
        .iter()
        .map(|g| g.build(cfg.n_qubits))
        .collect::<Result<Vec<_>>>()?;
    let names = cfg.generators.iter().map(|g| g.to_string()).collect();
    let model = ParamHamiltonian::new(generators, names)?;
    let psi0 = cfg.probe.state(cfg.n_qubits)?;
    let gammas: Vec<Option<f64>> = if cfg.gammas.is_empty() {
        vec![None]
    } else {
        cfg.gammas.iter().copied().map(Some).collect()
    };
    let grid: Vec<(usize, usize)> = (0..cfg.t_grid.len())
        .flat_map(|it| (0..gammas.len()).map(move |ig| (it, ig)))
        .collect();
    let per_point: Vec<Result<Vec<Row>>> = grid
        .par_iter()
        .map(|&(it, ig)| {
            let probe = Probe {
                model: &model,
                psi0: &psi0,
                phi: &cfg.params,
                point: Point { t: cfg.t_grid[it], phi: None, gamma: gammas[ig] },
                seed_parts: vec![it as u64, ig as u64],
            };
            probe.rows(cfg, None)
        })
        .collect();
    let rows = flatten(per_point)?;
    let mses = mse_against_exact(cfg, &rows, &[None], &gammas)?;
    Ok(RunRecord::new(cfg, rows, mses))
}

/// Classical Cramér-Rao bound `tr[F⁻¹]` of single-qubit quench tomography
/// against the number of initial states `p`. Each method row holds the mean
/// and standard deviation over the repetitions, followed by `sql` and `hl`
/// reference rows anchored at the first method's mean at the first `p`.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let t = cfg.quench_time;
    let jobs: Vec<(usize, usize)> = (0..cfg.p_values.len())
        .flat_map(|ip| (0..cfg.repetitions).map(move |r| (ip, r)))
        .collect();
    let per_job: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(ip, r)| {
            let p = cfg.p_values[ip];
            let instance = QuenchInstance::ising2(t, p, derive_seed(cfg.seed, &[p as u64, r as u64]))?;
            cfg.methods
                .iter()
                .map(|&method| {
                    let deriv = match method {
                        Method::Stoc => QuenchDerivative::Stoc(stoc_config(
                            cfg,
                            derive_seed(cfg.seed, &[p as u64, r as u64, 1]),
                            t,
                        )),
                        Method::Fd => QuenchDerivative::Fd { eps: cfg.fd_eps },
                        _ => unreachable!("rejected by validation"),
                    };
                    total_variance(&quench_cfim(&instance, deriv, cfg.x_floor)?)
                })
                .collect()
        })
        .collect();
    let per_job = per_job.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut means: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    for (ip, &p) in cfg.p_values.iter().enumerate() {
        for (im, &method) in cfg.methods.iter().enumerate() {
            let vals: Vec<f64> = (0..cfg.repetitions)
                .map(|r| per_job[ip * cfg.repetitions + r][im])
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            means[im].push(mean);
            let stoc = method == Method::Stoc;
            rows.push(Row {
                experiment: cfg.experiment.to_string(),
                t: Some(t),
                phi: None,
                gamma: None,
                p: Some(p),
                method: method.to_string(),
                value: mean,
                stat_err: Some(sample_std(&vals)),
                samples: stoc.then_some(cfg.samples),
                mu: stoc.then_some(cfg.mu),
                seed: Some(cfg.seed),
            });
        }
    }
    let curves = scaling_curves(&cfg.p_values, means[0][0])?;
    for c in curves {
        for (tag, value) in [("sql", c.sql), ("hl", c.hl)] {
            rows.push(Row {
                experiment: cfg.experiment.to_string(),
                t: Some(t),
                phi: None,
                gamma: None,
                p: Some(c.p),
                method: tag.to_string(),
                value,
                stat_err: None,
                samples: None,
                mu: None,
                seed: None,
            });
        }
    }
    Ok(RunRecord::new(cfg, rows, BTreeMap::new()))
}

fn flatten(parts: Vec<Result<Vec<Row>>>) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}
