//! Cat and mouse on Z and Z^2.

use super::{require, Experiment, Param, Run, Table};
use crate::error::Result;
use crate::lattice::{build_relative_chain, meeting_counter, relative_visits, return_counts, scaling_1d, scaling_2d_marginal, solve_dirichlet, ReturnKernel};
use crate::stats::oracle::{bilateral_exponential_cdf, brownian_at_local_time, half_normal_cdf};
use crate::stats::{
    ks_distance, ks_two_sample, mean_within_sigma, relative_within, ComparisonVerdict, Statistic, Summary,
};

fn time_index(grid: &[f64], t: f64) -> Result<usize> {
    let i = grid.iter().position(|&g| g == t);
    require(i.is_some(), || format!("t = {t} must be one of the t_grid values"))?;
    Ok(i.unwrap_or(0))
}

pub const SRWS: Experiment = Experiment {
    name: "srws",
    about: "mouse on Z rescaled by n^(1/4), and the meeting count by sqrt(n)",
    tag: 7,
    params: &[
        Param::int("n", "4^13", "time scale"),
        Param::floats("t_grid", "0.25,0.5,1,2", "observation times in units of n"),
        Param::float("t", "1", "time at which the laws are compared"),
        Param::int("replicas", "10000", "pair runs"),
        Param::int("oracle_samples", "1000000", "samples of the limit law"),
    ],
    body: srws,
};

fn srws(r: &mut Run) -> Result<()> {
    let n = r.int("n")?;
    let grid = r.floats("t_grid")?;
    let t = r.float("t")?;
    let reps = r.int("replicas")? as usize;
    let oracle = r.int("oracle_samples")? as usize;
    let i = time_index(&grid, t)?;
    require(n >= 10_000 && t > 0.0, || format!("need n >= 1e4 and t > 0, got n={n} t={t}"))?;
    require(reps >= 100 && oracle >= 1000, || "need at least 100 replicas and 1000 oracle samples".into())?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    r.declare(n as f64 * t_max * reps as f64)?;

    let runs = r.replicas(0, reps, |rng| scaling_1d(n, &grid, rng));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let sq = (n as f64).sqrt();
    let twice_u: Vec<f64> = runs.iter().map(|(_, run)| 2.0 * run.cycles[i] as f64 / sq).collect();
    r.criterion(ks_distance(&format!("2 u_n / sqrt(n) vs |N(0,{t})|"), &twice_u, |x| half_normal_cdf(t, x), 0.03)?);
    let m: Vec<f64> = runs.iter().map(|(xs, _)| xs[i]).collect();
    let reference: Vec<f64> = r.draws(1, oracle, |rng| brownian_at_local_time(t, rng));
    r.criterion(ks_two_sample("M / n^(1/4) vs B1(L_B2(t))", &m, &reference, 0.05)?);
    r.criterion(mean_within_sigma("mean of M / n^(1/4) vs 0", &m, 0.0, 3.0));

    let s = Summary::of(&m);
    let var = s.sd * s.sd;
    r.diagnostic(relative_within("variance of M / n^(1/4) vs sqrt(2t/pi)", var, (2.0 * t / std::f64::consts::PI).sqrt(), 0.10));
    let (up, down) = runs.iter().fold((0u64, 0u64), |a, (_, run)| (a.0 + run.up_moves, a.1 + run.down_moves));
    let moves = (up + down) as f64;
    let z = (up as f64 - down as f64) / moves.sqrt();
    r.diagnostic(ComparisonVerdict::new("mouse up and down moves balance, |z|", Statistic::MeanSigma, z.abs(), 3.0).with_note(format!("up={up} down={down}")));
    let broken = runs.iter().filter(|(_, run)| !run.kappa_bracket_ok).count();
    r.diagnostic(ComparisonVerdict::new("mouse step count within its cycle bracket, failures", Statistic::Absolute, broken as f64, 0.0));

    let mut table = Table::new("srws", &["replica", "t", "mouse_scaled", "meetings_scaled", "mouse_steps"]);
    for (k, (xs, run)) in runs.iter().enumerate() {
        for (j, g) in grid.iter().enumerate() {
            table.push([k.to_string(), g.to_string(), xs[j].to_string(), (run.cycles[j] as f64 / sq).to_string(), run.kappa[j].to_string()]);
        }
    }
    r.table(table);
    Ok(())
}

pub const LOCALTIME: Experiment = Experiment {
    name: "lemma-localtime",
    about: "meeting count on Z against half the Brownian local time",
    tag: 8,
    params: &[
        Param::int("n", "1000000", "time scale"),
        Param::floats("t_grid", "0.25,0.5,1,2", "observation times in units of n"),
        Param::int("replicas", "10000", "pair runs"),
    ],
    body: localtime,
};

fn localtime(r: &mut Run) -> Result<()> {
    let n = r.int("n")?;
    let grid = r.floats("t_grid")?;
    let reps = r.int("replicas")? as usize;
    require(reps >= 100, || "need at least 100 replicas".into())?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    r.declare(n as f64 * t_max * reps as f64)?;
    let us = r.replicas(0, reps, |rng| meeting_counter(n, &grid, rng));
    let us = us.into_iter().collect::<Result<Vec<_>>>()?;

    let mut table = Table::new("localtime", &["t", "mean", "se", "target_mean", "ks"]);
    for (j, &t) in grid.iter().enumerate() {
        let col: Vec<f64> = us.iter().map(|u| u[j]).collect();
        let target = 0.5 * (2.0 * t / std::f64::consts::PI).sqrt();
        let twice: Vec<f64> = col.iter().map(|u| 2.0 * u).collect();
        let ks = ks_distance(&format!("2 u / sqrt(n) vs |N(0,{t})| at t={t}"), &twice, |x| half_normal_cdf(t, x), 0.03)?;
        let mean = mean_within_sigma(&format!("mean u / sqrt(n) vs sqrt(2t/pi)/2 at t={t}"), &col, target, 3.0);
        let s = Summary::of(&col);
        table.push([t, s.mean, s.se, target, ks.value]);
        if t == 1.0 {
            r.criterion(mean);
            r.criterion(ks);
        } else {
            r.diagnostic(mean);
            r.diagnostic(ks);
        }
    }
    r.table(table);
    Ok(())
}

pub const DIRICHLET: Experiment = Experiment {
    name: "dirichlet",
    about: "return kernel on the unit vectors of Z^2 and the relative chain",
    tag: 9,
    params: &[
        Param::int("radius", "200", "coarse box radius; the fine box is twice as large"),
        Param::float("tol", "1e-11", "residual tolerance of the solver"),
        Param::int("excursions", "1e7", "Monte Carlo excursions from e1"),
        Param::int("visits", "1e7", "E x E visits of the simulated pair"),
        Param::int("chunks", "100", "independent streams the Monte Carlo work is split into"),
    ],
    body: dirichlet,
};

fn dirichlet(r: &mut Run) -> Result<()> {
    let radius = r.int("radius")? as usize;
    let tol = r.float("tol")?;
    let excursions = r.int("excursions")?;
    let visits = r.int("visits")?;
    let chunks = r.int("chunks")?;
    require(radius >= 20, || format!("radius must be at least 20, got {radius}"))?;
    require(tol > 0.0 && tol < 1e-4, || format!("tol must be in (0, 1e-4), got {tol}"))?;
    require(chunks >= 10 && excursions >= chunks && visits >= chunks * 100, || "too few excursions or visits for the chunk count".into())?;
    let cells = |k: usize| (2 * k + 1) as f64 * (k + 1) as f64;
    // solver sweeps scale like the radius; each excursion is O(log) jumps
    r.declare(10.0 * (cells(radius) * radius as f64 + cells(2 * radius) * 2.0 * radius as f64))?;
    r.declare(40.0 * (excursions + visits) as f64)?;

    let (coarse, fine) = rayon::join(|| solve_dirichlet(radius, tol), || solve_dirichlet(2 * radius, tol));
    let (coarse, fine) = (coarse?, fine?);
    let spread = ReturnKernel::spread(&coarse, &fine);
    r.criterion(
        ComparisonVerdict::new(format!("r values, radius {radius} vs {}", 2 * radius), Statistic::Absolute, spread, 5e-4)
            .with_note(format!("residuals {:.2e} {:.2e}", coarse.residual, fine.residual)),
    );
    let kernel = ReturnKernel::richardson(&coarse, &fine);
    r.diagnostic(ComparisonVerdict::new("r_same + r_opposite + 2 r_perp - 1", Statistic::Absolute, (fine.r_sum() - 1.0).abs(), 1e-8));
    r.diagnostic(ComparisonVerdict::new("harmonic defect, fine box", Statistic::Absolute, fine.harmonic_defect(), 1e-9));

    let per = excursions / chunks;
    let counts: Vec<[u64; 4]> = r.replicas(0, chunks as usize, |rng| return_counts(per, rng));
    let mut total = [0u64; 4];
    for c in &counts {
        for k in 0..4 {
            total[k] += c[k];
        }
    }
    let m = (per * chunks) as f64;
    let names = ["same", "opposite", "perp +", "perp -"];
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for k in 0..4 {
        let target = kernel.r(0, k);
        let p = total[k] as f64 / m;
        let z = (p - target) / (target * (1.0 - target) / m).sqrt();
        worst = worst.max(z.abs());
        notes.push(format!("{}: mc={p:.6} solve={target:.6} z={z:.2}", names[k]));
    }
    r.criterion(ComparisonVerdict::new("Monte Carlo r values vs solver, max |z|", Statistic::MeanSigma, worst, 3.0).with_sizes(&[m as usize]).with_note(notes.join("; ")));

    let chain = build_relative_chain(&kernel)?;
    let per = (visits / chunks) as usize;
    let fractions: Vec<f64> = r.replicas(1, chunks as usize, |rng| {
        let v = relative_visits(per, rng);
        v.iter().filter(|&&d| d).count() as f64 / v.len() as f64
    });
    r.criterion(
        mean_within_sigma("diagonal mass of mu_R vs pair simulation", &fractions, chain.diag_mass, 3.0)
            .with_sizes(&[per * chunks as usize])
            .with_note(format!("diag_mass={:.4} alpha0={:.6}", chain.diag_mass, chain.alpha0())),
    );
    r.diagnostic(ComparisonVerdict::new("mu_R stationarity defect", Statistic::Absolute, chain.stationarity_defect(), 1e-10));
    r.metric("diag_mass", chain.diag_mass);
    r.metric("alpha0", chain.alpha0());

    let mut table = Table::new("dirichlet", &["radius", "r_same", "r_opposite", "r_perp", "residual", "sweeps"]);
    for s in [&coarse, &fine] {
        table.push([s.truncation_radius.to_string(), s.r_same.to_string(), s.r_opposite.to_string(), s.r_perp.to_string(), s.residual.to_string(), s.sweeps.to_string()]);
    }
    table.push(["extrapolated".to_string(), kernel.r_same.to_string(), kernel.r_opposite.to_string(), kernel.r_perp.to_string(), String::new(), String::new()]);
    r.table(table);
    Ok(())
}

pub const PLANE: Experiment = Experiment {
    name: "plane-marginal",
    about: "mouse on Z^2 at time e^(n t), first coordinate over sqrt(n)",
    tag: 10,
    params: &[
        Param::float("n", "20", "log time scale"),
        Param::float("t", "1", "time in units of the log scale"),
        Param::int("replicas", "4000", "pair runs"),
        Param::int("radius", "100", "coarse box radius for the return kernel"),
        Param::float("tol", "1e-11", "residual tolerance of the solver"),
    ],
    body: plane,
};

fn plane(r: &mut Run) -> Result<()> {
    let n = r.float("n")?;
    let t = r.float("t")?;
    let reps = r.int("replicas")? as usize;
    let radius = r.int("radius")? as usize;
    let tol = r.float("tol")?;
    require(n > 0.0 && t > 0.0, || "n and t must be positive".into())?;
    let horizon = (n * t).exp();
    require(horizon <= 1e9, || format!("e^(n t) = {horizon:.3e} exceeds 1e9"))?;
    require(reps >= 100 && radius >= 20, || "need at least 100 replicas and radius >= 20".into())?;
    r.declare(horizon * reps as f64)?;

    let (coarse, fine) = rayon::join(|| solve_dirichlet(radius, tol), || solve_dirichlet(2 * radius, tol));
    let chain = build_relative_chain(&ReturnKernel::richardson(&coarse?, &fine?))?;
    let a0 = chain.alpha0();
    let ys: Vec<f64> = r.replicas(0, reps, |rng| scaling_2d_marginal(n, t, rng));
    // the coordinate is an integer over sqrt(n): spread each atom over its
    // cell so the continuous CDF is not dominated by lattice steps
    let cell = 1.0 / n.sqrt();
    let jitter: Vec<f64> = r.draws(1, reps, |rng| rng.open01() - 0.5);
    let smooth: Vec<f64> = ys.iter().zip(&jitter).map(|(y, u)| y + u * cell).collect();

    r.criterion(
        ks_distance("M_1 / sqrt(n) vs bilateral exponential, rate alpha0", &smooth, |y| bilateral_exponential_cdf(a0, t, y), 0.08)?
            .with_note(format!("alpha0={a0:.6}, lattice cell {cell:.4} smoothed")),
    );
    r.diagnostic(ks_distance("M_1 / sqrt(n) vs bilateral exponential, rate 2 alpha0", &smooth, |y| bilateral_exponential_cdf(2.0 * a0, t, y), 0.08)?);
    r.diagnostic(ks_distance("raw lattice values vs rate alpha0", &ys, |y| bilateral_exponential_cdf(a0, t, y), 0.08)?);
    let positive = ys.iter().filter(|&&y| y > 0.0).count() as f64;
    let nonzero = ys.iter().filter(|&&y| y != 0.0).count() as f64;
    let z = (positive - nonzero / 2.0) / (nonzero / 4.0).sqrt();
    r.diagnostic(ComparisonVerdict::new("median 0, sign test |z|", Statistic::MeanSigma, z.abs(), 3.0));
    let abs: Vec<f64> = ys.iter().map(|y| y.abs()).collect();
    let mean_abs = Summary::of(&abs).mean;
    r.diagnostic(relative_within("E|Y| vs sqrt(t)/alpha0", mean_abs, t.sqrt() / a0, 0.15));
    r.diagnostic(relative_within("E|Y| vs sqrt(t)/(2 alpha0)", mean_abs, t.sqrt() / (2.0 * a0), 0.15));
    r.metric("alpha0", a0);

    let mut table = Table::new("plane", &["replica", "n", "t", "mouse_x_scaled"]);
    for (k, y) in ys.iter().enumerate() {
        table.push([k.to_string(), n.to_string(), t.to_string(), y.to_string()]);
    }
    r.table(table);
    Ok(())
}
