//! Continuous-time pair driven by the M/M/infinity queue.

use super::{require, Experiment, Param, Run, Table};
use crate::chain::MmInf;
use crate::error::Result;
use crate::mminf::{
    cascade_replica, cat_holds, expected_down_time, expected_up_jumps, expected_up_time, f_sample, hitting_constant, hitting_time_down,
    hitting_time_up, occupation_samples, poisson_cells, CtTrajectory, TimeChangeData,
};
use crate::stats::oracle::exponential_cdf;
use crate::stats::{chi_square_gof, ks_distance, ks_two_sample, mean_within_sigma, relative_within, ComparisonVerdict, Statistic, Summary};
use rayon::prelude::*;

fn queue(rho: f64) -> Result<MmInf> {
    require(rho > 0.0 && rho.is_finite(), || format!("rho must be positive, got {rho}"))?;
    MmInf::new(rho)
}

pub const F_LAW: Experiment = Experiment {
    name: "mminf-F",
    about: "mouse level over n when the cat first hits 0, against P(F <= x) = x^rho",
    tag: 11,
    params: &[
        Param::floats("rho", "1,2", "arrival rates"),
        Param::int("n", "1000", "common starting level"),
        Param::int("replicas", "10000", "runs per rate"),
    ],
    body: f_law,
};

fn f_law(r: &mut Run) -> Result<()> {
    let rhos = r.floats("rho")?;
    let n = r.int("n")?;
    let reps = r.int("replicas")? as usize;
    require(n >= 200, || format!("F sampling needs n >= 200, got {n}"))?;
    require(reps >= 100 && !rhos.is_empty(), || "need at least 100 replicas and one rate".into())?;
    // the cat's descent from n takes about n log n embedded jumps
    r.declare(rhos.len() as f64 * reps as f64 * n as f64 * (n as f64).ln().max(1.0) * 4.0)?;

    let mut table = Table::new("f", &["rho", "replica", "f"]);
    for (sub, &rho) in rhos.iter().enumerate() {
        let q = queue(rho)?;
        let fs = r.replicas(sub as u32, reps, |rng| f_sample(&q, n, rng));
        let fs = fs.into_iter().collect::<Result<Vec<_>>>()?;
        r.criterion(ks_distance(&format!("M(T_0)/n vs x^rho, rho={rho}"), &fs, |x| x.clamp(0.0, 1.0).powf(rho), 0.03)?);
        r.diagnostic(mean_within_sigma(&format!("mean of F vs rho/(rho+1), rho={rho}"), &fs, rho / (rho + 1.0), 3.0));
        let over = fs.iter().filter(|&&f| f > 1.0 + 2.0 / n as f64).count();
        r.diagnostic(ComparisonVerdict::new(format!("samples above 1 + 2/n, rho={rho}"), Statistic::Absolute, over as f64, 0.0));
        for (k, f) in fs.iter().enumerate() {
            table.push([rho.to_string(), k.to_string(), f.to_string()]);
        }
    }
    r.table(table);
    Ok(())
}

pub const HITTING: Experiment = Experiment {
    name: "mminf-hitting",
    about: "hitting times of high and low levels for the M/M/infinity cat",
    tag: 12,
    params: &[
        Param::float("rho", "1", "arrival rate"),
        Param::int("n", "10", "target level for upward passages"),
        Param::int("replicas", "10000", "upward passages"),
        Param::int("down_n", "10000", "start level for downward passages"),
        Param::int("down_replicas", "2000", "downward passages"),
    ],
    body: hitting,
};

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

fn hitting(r: &mut Run) -> Result<()> {
    let rho = r.float("rho")?;
    let q = queue(rho)?;
    let n = r.int("n")?;
    let reps = r.int("replicas")? as usize;
    let down_n = r.int("down_n")?;
    let down_reps = r.int("down_replicas")? as usize;
    require((2..=20).contains(&n), || format!("upward level must be in 2..=20, got {n}"))?;
    require(down_n >= 2 && reps >= 100 && down_reps >= 2, || "need down_n >= 2, 100 upward and 2 downward replicas".into())?;
    r.declare(2.0 * expected_up_jumps(&q, n, reps as u64))?;
    r.declare(down_reps as f64 * 2.0 * down_n as f64)?;

    let ts: Vec<f64> = r.replicas(0, reps, |rng| hitting_time_up(&q, 0, n, rng));
    let s = Summary::of(&ts);
    // rho^n / (n-1)!
    let norm = (n as f64 * rho.ln() - ln_factorial(n - 1)).exp();
    let exact = hitting_constant(&q, n);
    r.criterion(
        relative_within("mean(T_n) rho^n / (n-1)! vs e^(-rho)", s.mean * norm, (-rho).exp(), 0.10)
            .with_sizes(&[reps])
            .with_std_errors(&[s.se * norm])
            .with_note(format!("exact value at this n: {exact:.6}")),
    );
    r.diagnostic(relative_within("mean(T_n) rho^n / (n-1)! vs e^(+rho)", s.mean * norm, rho.exp(), 0.10));
    r.diagnostic(mean_within_sigma("mean(T_n) vs exact E_0 T_n", &ts, expected_up_time(&q, 0, n), 3.0));
    let scaled: Vec<f64> = ts.iter().map(|t| t / s.mean).collect();
    r.diagnostic(ks_distance("T_n / mean vs Exp(1)", &scaled, |x| exponential_cdf(1.0, x), 0.05)?);
    let near: Vec<f64> = r.replicas(1, reps, |rng| hitting_time_up(&q, n - 1, n, rng));
    let near_mean = Summary::of(&near).mean;
    r.diagnostic(
        relative_within("mean T_n from n-1 vs from 0", near_mean, s.mean, 0.05).with_note(format!("ratio={:.4}", near_mean / s.mean)),
    );

    let log_n = (down_n as f64).ln();
    let down: Vec<f64> = r.replicas(2, down_reps, |rng| hitting_time_down(&q, down_n, rng) / log_n);
    let d = Summary::of(&down);
    r.criterion(
        relative_within("T_0 / log n vs 1", d.mean, 1.0, 0.10)
            .with_sizes(&[down_reps])
            .with_std_errors(&[d.se])
            .with_note(format!("exact E_n T_0 / log n = {:.4}", expected_down_time(&q, down_n) / log_n)),
    );
    r.diagnostic(mean_within_sigma("T_0 / log n vs exact E_n T_0 / log n", &down, expected_down_time(&q, down_n) / log_n, 3.0));

    let mut table = Table::new("hitting", &["direction", "replica", "start", "target", "time"]);
    for (k, t) in ts.iter().enumerate() {
        table.push(["up".to_string(), k.to_string(), "0".to_string(), n.to_string(), t.to_string()]);
    }
    for (k, t) in down.iter().enumerate() {
        table.push(["down".to_string(), k.to_string(), down_n.to_string(), "0".to_string(), (t * log_n).to_string()]);
    }
    r.table(table);
    Ok(())
}

pub const TIME_CHANGE: Experiment = Experiment {
    name: "mminf-timechange",
    about: "the mouse read on together-time runs like the cat",
    tag: 13,
    params: &[
        Param::float("rho", "1", "arrival rate"),
        Param::int("max_state", "2", "largest state whose holds are compared"),
        Param::int("holds", "100000", "holds wanted at every compared state"),
        Param::int("jumps", "10000", "pair jumps per replica"),
        Param::int("max_replicas", "2000", "replica cap"),
        Param::int("batch", "16", "replicas run between hold counts"),
        Param::int("occupation_samples", "100000", "cat positions for the Poisson check"),
        Param::int("dump_jumps", "1000", "jumps written to trajectory.csv"),
    ],
    body: time_change,
};

fn time_change(r: &mut Run) -> Result<()> {
    let rho = r.float("rho")?;
    let q = queue(rho)?;
    let max_state = r.int("max_state")?;
    let holds = r.int("holds")? as usize;
    let jumps = r.int("jumps")? as usize;
    let cap = r.int("max_replicas")?;
    let batch = r.int("batch")?.max(1);
    let occ = r.int("occupation_samples")? as usize;
    let dump = r.int("dump_jumps")? as usize;
    require(max_state <= 20 && holds >= 100 && jumps >= 10 && cap >= 1 && occ >= 100, || "time-change settings out of range".into())?;
    r.declare((cap as f64 * jumps as f64) + occ as f64 * (rho + 1.0) + holds as f64 * (max_state + 1) as f64 * (rho + 1.0))?;

    // fixed batches keep the stopping point independent of the worker count
    let fac = r.factory(0);
    let mut data = TimeChangeData::new(max_state);
    let mut used = 0u64;
    let mut consistent = true;
    while data.min_holds() < holds && used < cap {
        let end = (used + batch).min(cap);
        let parts: Vec<(TimeChangeData, bool)> = (used..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = fac.stream(k);
                let tr = CtTrajectory::simulate(&q, (0, 0), jumps, &mut rng);
                let mut d = TimeChangeData::new(max_state);
                d.absorb(&tr);
                (d, tr.u_is_consistent())
            })
            .collect();
        for (d, ok) in parts {
            data.merge(d);
            consistent &= ok;
        }
        used = end;
    }
    r.metric("replicas", used as f64);
    let partial = data.min_holds() < holds;

    let mut table = Table::new("holds", &["state", "holds", "mean_hold", "target_mean", "ks", "up_fraction", "target_up_fraction"]);
    for x in 0..=max_state {
        let h = &data.holds[x as usize];
        let rate = rho + x as f64;
        let mut ks = ks_distance(&format!("hold of M(S(.)) at {x} vs Exp({rate})"), h, |t| exponential_cdf(1.0 / rate, t), 0.03)?;
        if partial {
            ks = ks.with_note("partial: hold target not reached within max_replicas");
        }
        let direct = r.draws(1 + x as u32, h.len().max(1), |rng| cat_holds(&q, x, 1, rng)[0]);
        r.diagnostic(ks_two_sample(&format!("hold at {x}, time-changed mouse vs lone cat"), h, &direct, 0.03)?);
        let moves = data.moves[x as usize] as f64;
        let p = data.ups[x as usize] as f64 / moves;
        let target = q.up_probability(x);
        let se = (target * (1.0 - target) / moves).sqrt();
        let z = if se > 0.0 { (p - target) / se } else if p == target { 0.0 } else { f64::INFINITY };
        r.diagnostic(ComparisonVerdict::new(format!("up fraction from {x} vs rho/(rho+{x}), |z|"), Statistic::MeanSigma, z.abs(), 3.0).with_sizes(&[moves as usize]));
        table.push([x.to_string(), h.len().to_string(), Summary::of(h).mean.to_string(), (1.0 / rate).to_string(), ks.value.to_string(), p.to_string(), target.to_string()]);
        r.criterion(ks);
    }
    r.table(table);
    r.diagnostic(ComparisonVerdict::new("U rises exactly on together stretches, failures", Statistic::Absolute, if consistent { 0.0 } else { 1.0 }, 0.0));

    let cells = ((rho + 6.0 * rho.sqrt() + 4.0).ceil() as usize).max(4);
    let sample = occupation_samples(&q, 1.0, occ, &mut r.factory(10).stream(0));
    let mut counts = vec![0u64; cells];
    for c in sample {
        counts[(c as usize).min(cells - 1)] += 1;
    }
    r.diagnostic(chi_square_gof("cat occupation vs Poisson(rho)", &counts, &poisson_cells(rho, cells), 0.001)?);

    // null recurrent pair: U(t)/t drifts to 0 as t grows
    let ut: Vec<f64> = data.occupation.iter().map(|o| o.1).collect();
    let u = Summary::of(&ut);
    r.metric("U_over_t_mean", u.mean);
    r.metric("U_over_t_se", u.se);
    r.metric("end_time_mean", Summary::of(&data.occupation.iter().map(|o| o.0).collect::<Vec<_>>()).mean);

    let tr = CtTrajectory::simulate(&q, (0, 0), dump, &mut r.factory(11).stream(0));
    let mut traj = Table::new("trajectory", &["jump_time", "cat", "mouse"]);
    for s in &tr.segments {
        traj.push([s.start.to_string(), s.cat.to_string(), s.mouse.to_string()]);
    }
    r.table(traj);
    Ok(())
}

pub const CASCADE: Experiment = Experiment {
    name: "mminf-cascade",
    about: "mouse levels after successive rounds of the cat",
    tag: 14,
    params: &[
        Param::float("rho", "2", "arrival rate"),
        Param::int("n", "100000", "starting level"),
        Param::int("rounds", "5", "rounds per replica"),
        Param::int("floor", "20", "level below which a record is cut"),
        Param::int("replicas", "2000", "runs"),
    ],
    body: cascade,
};

fn lag_one_correlation(rows: &[Vec<f64>]) -> f64 {
    let pairs: Vec<(f64, f64)> = rows.iter().flat_map(|d| d.windows(2).map(|w| (w[0], w[1]))).collect();
    let k = pairs.len() as f64;
    let (ma, mb) = (pairs.iter().map(|p| p.0).sum::<f64>() / k, pairs.iter().map(|p| p.1).sum::<f64>() / k);
    let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>();
    let va = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>();
    let vb = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>();
    cov / (va * vb).sqrt()
}

fn cascade(r: &mut Run) -> Result<()> {
    let rho = r.float("rho")?;
    let q = queue(rho)?;
    let n = r.int("n")?;
    let rounds = r.int("rounds")? as usize;
    let floor = r.int("floor")?;
    let reps = r.int("replicas")? as usize;
    require(n >= 500 && (1..=5).contains(&rounds), || format!("need n >= 500 and 1 <= rounds <= 5, got n={n} rounds={rounds}"))?;
    require(reps >= 100 && floor >= 1, || "need at least 100 replicas and floor >= 1".into())?;
    r.declare(reps as f64 * rounds as f64 * n as f64 * (n as f64).ln() * 4.0)?;

    let recs = r.replicas(0, reps, |rng| cascade_replica(&q, n, rounds, floor, rng));
    let decs: Vec<Vec<f64>> = recs.iter().map(|c| c.log_decrements()).collect();
    let flat: Vec<f64> = decs.iter().flatten().copied().collect();
    let truncated = recs.iter().filter(|c| c.truncated).count();
    r.criterion(mean_within_sigma("log decrement mean vs 1/rho", &flat, 1.0 / rho, 3.0).with_note(format!("truncated records: {truncated}")));
    let corr = lag_one_correlation(&decs);
    r.diagnostic(ComparisonVerdict::new("lag-one correlation of decrements, |corr|", Statistic::Absolute, corr.abs(), 0.05));
    let full: Vec<f64> = recs
        .iter()
        .filter(|c| !c.truncated && c.levels[rounds] > 0)
        .map(|c| (c.levels[rounds] as f64 / n as f64).ln())
        .collect();
    if !full.is_empty() {
        r.diagnostic(relative_within(&format!("E log(M_p / n) vs -p/rho, p={rounds}"), Summary::of(&full).mean, -(rounds as f64) / rho, 0.10));
    }
    r.metric("truncated", truncated as f64);

    let mut table = Table::new("cascade", &["replica", "round", "level", "truncated"]);
    for (k, c) in recs.iter().enumerate() {
        for (p, l) in c.levels.iter().enumerate() {
            table.push([k.to_string(), p.to_string(), l.to_string(), c.truncated.to_string()]);
        }
    }
    r.table(table);
    Ok(())
}
