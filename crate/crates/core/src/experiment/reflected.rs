//! Reflected random walk experiments.

use super::{at_least, require, Experiment, Param, Run, Table};
use crate::chain::ReflectedWalk;
use crate::error::Result;
use crate::reflected::{
    collapse_replica, descent_gf_exact, descent_gf_printed, descent_gf_samples, expected_climb_steps, expected_up_time, hitting_time_down,
    hitting_time_up, nu_reflected_exact, nu_reflected_explicit, oscillation_replica, reflected_balance_residual, sample_w, up_time_constant,
    FreeJumpLaw,
};
use crate::stats::oracle::exponential_cdf;
use crate::stats::{
    empirical_char_function, ks_distance, ks_two_sample, mean_within_sigma, proportion_increase, relative_within, wilson_interval,
    ComparisonVerdict, Statistic, Summary,
};
use num_complex::Complex64;

fn walk(r: &Run) -> Result<ReflectedWalk> {
    let p = r.float("p")?;
    require(p > 0.0 && p < 0.5, || format!("the reflected walk needs 0 < p < 1/2, got {p}"))?;
    ReflectedWalk::new(p)
}

pub const NU: Experiment = Experiment {
    name: "reflected-nu",
    about: "balance equations for the closed-form invariant measure",
    tag: 2,
    params: &[
        Param::float("p", "0.3", "up probability"),
        Param::int("max_level", "50", "largest x and y checked"),
    ],
    body: nu,
};

fn nu(r: &mut Run) -> Result<()> {
    let w = walk(r)?;
    let k = r.int("max_level")?;
    r.declare(((k + 1) * (k + 1)) as f64)?;
    let printed = reflected_balance_residual(&w, |x, y| nu_reflected_explicit(&w, x, y), k, 0..=k);
    r.criterion(ComparisonVerdict::new("closed-form nu balance, x,y <= max_level", Statistic::Absolute, printed, 1e-12));
    let upper = reflected_balance_residual(&w, |x, y| nu_reflected_explicit(&w, x, y), k, 1..=k);
    r.diagnostic(ComparisonVerdict::new("closed-form nu balance, columns y >= 1", Statistic::Absolute, upper, 1e-12));
    let solved = reflected_balance_residual(&w, |x, y| nu_reflected_exact(&w, x, y), k, 0..=k);
    r.diagnostic(
        ComparisonVerdict::new("solved nu balance (column y = 0 corrected)", Statistic::Absolute, solved, 1e-12)
            .with_note("nu(1,0) = rho(1-rho), nu(x,0) = (2-p) rho^x (1-rho) for x >= 2"),
    );
    let rho = w.rho();
    let diag = (0..=k)
        .map(|y| (nu_reflected_explicit(&w, y, y) - rho.powi(y as i32) * (1.0 - rho)).abs())
        .fold(0.0, f64::max);
    r.diagnostic(ComparisonVerdict::new("diagonal = geometric pi", Statistic::Absolute, diag, 1e-15));

    let mut t = Table::new("nu", &["x", "y", "closed_form", "solved"]);
    for x in 0..=k.min(10) {
        for y in 0..=k.min(10) {
            t.push([x.to_string(), y.to_string(), nu_reflected_explicit(&w, x, y).to_string(), nu_reflected_exact(&w, x, y).to_string()]);
        }
    }
    r.table(t);
    Ok(())
}

pub const HITTING: Experiment = Experiment {
    name: "reflected-hitting",
    about: "exponential limit of rho^n T_n and the downward law of large numbers",
    tag: 3,
    params: &[
        Param::float("p", "0.3", "up probability"),
        Param::int("n", "15", "target level for upward passages"),
        Param::int("replicas", "10000", "upward passages"),
        Param::int("down_n", "10000", "start level for downward passages"),
        Param::int("down_replicas", "1000", "downward passages"),
        Param::float("gf_u", "0.5", "argument of the descent generating function"),
        Param::int("gf_samples", "100000", "descent samples"),
    ],
    body: hitting,
};

fn hitting(r: &mut Run) -> Result<()> {
    let w = walk(r)?;
    let n = r.int("n")?;
    let reps = r.int("replicas")? as usize;
    let down_n = r.int("down_n")?;
    let down_reps = r.int("down_replicas")? as usize;
    let u = r.float("gf_u")?;
    let gf_samples = r.int("gf_samples")? as usize;
    require((1..=25).contains(&n), || format!("upward level must be in 1..=25, got {n}"))?;
    require(reps >= 100 && down_reps >= 2, || "need at least 100 upward and 2 downward replicas".into())?;
    require(u > 0.0 && u < 1.0, || format!("gf_u must be in (0,1), got {u}"))?;
    let rho = w.rho();
    let down_rate = (1.0 + rho) / (1.0 - rho);
    r.declare(expected_climb_steps(&w, n, reps as u64))?;
    r.declare(down_n as f64 * down_rate * down_reps as f64)?;
    r.declare(gf_samples as f64 / (1.0 - 2.0 * w.p()))?;

    let ts: Vec<f64> = r.replicas(0, reps, |rng| hitting_time_up(&w, 0, n, rng) as f64);
    let s = Summary::of(&ts);
    let scale = rho.powi(n as i32);
    let target = up_time_constant(&w);
    r.criterion(relative_within("mean(T_n) rho^n vs (1+rho)/(1-rho)^2", s.mean * scale, target, 0.05).with_sizes(&[reps]));
    let scaled: Vec<f64> = ts.iter().map(|t| t / s.mean).collect();
    r.criterion(ks_distance("T_n / mean vs Exp(1)", &scaled, |x| exponential_cdf(1.0, x), 0.03)?);
    r.diagnostic(mean_within_sigma("mean(T_n) vs exact E_0 T_n", &ts, expected_up_time(&w, 0, n), 3.0));

    let down: Vec<f64> = r.replicas(1, down_reps, |rng| hitting_time_down(&w, down_n, rng) as f64 / down_n as f64);
    let d = Summary::of(&down);
    r.criterion(relative_within("T_0 / n vs (1+rho)/(1-rho)", d.mean, down_rate, 0.02).with_sizes(&[down_reps]).with_std_errors(&[d.se]));

    let g = r.draws(2, gf_samples, |rng| descent_gf_samples(&w, u, 1, rng)[0]);
    r.diagnostic(mean_within_sigma("descent generating function, sqrt(1 - 4pq u^2)", &g, descent_gf_exact(&w, u), 3.0));
    r.diagnostic(mean_within_sigma("descent generating function as printed, sqrt(1 - 4pq u)", &g, descent_gf_printed(&w, u), 3.0));

    let mut t = Table::new("hitting", &["replica", "n", "t_n", "rho_n_t_n"]);
    for (i, x) in ts.iter().enumerate() {
        t.push([i.to_string(), n.to_string(), x.to_string(), (x * scale).to_string()]);
    }
    r.table(t);
    Ok(())
}

pub const FREE: Experiment = Experiment {
    name: "reflected-free",
    about: "law of the free mouse jump",
    tag: 4,
    params: &[
        Param::float("p", "0.3", "up probability"),
        Param::int("samples", "1000000", "jump samples"),
        Param::int("stepping_samples", "100000", "samples from the stepping sampler"),
        Param::floats("thetas", "0.5,1", "frequencies for the characteristic function"),
    ],
    body: free,
};

fn free(r: &mut Run) -> Result<()> {
    let w = walk(r)?;
    let samples = r.int("samples")? as usize;
    let stepping = r.int("stepping_samples")? as usize;
    let thetas = r.floats("thetas")?;
    require(samples >= 10_000 && stepping >= 100, || "need at least 1e4 samples and 100 stepping samples".into())?;
    let law = FreeJumpLaw::new(w);
    let rho = law.rho();
    // a free excursion lasts O(1/(1-2p)) steps; renewal draws are cheaper
    r.declare((samples + stepping) as f64 * (law.cutoff() as f64 + 1.0) / (1.0 - 2.0 * w.p()))?;

    let ms: Vec<f64> = r.draws(0, samples, |rng| law.sample_renewal(rng) as f64);
    r.criterion(mean_within_sigma("mean of M' vs -1/rho", &ms, law.mean(), 3.0));
    let e: Vec<f64> = ms.iter().map(|m| rho.powf(-m)).collect();
    r.criterion(mean_within_sigma("E rho^{-M'} vs 1", &e, 1.0, 3.0));
    let points = empirical_char_function(&ms, &thetas);
    let mut cf = Table::new("charfn", &["theta", "re", "im", "se_re", "se_im", "target_re", "target_im"]);
    for p in &points {
        let target = law.gf(Complex64::from_polar(1.0, p.theta));
        r.criterion(
            ComparisonVerdict::new(format!("characteristic function at theta={}", p.theta), Statistic::CharFunction, p.sigma_distance(target), 3.0)
                .with_sizes(&[ms.len()])
                .with_std_errors(&[p.se_re, p.se_im])
                .with_note(format!("empirical={:.6} target={:.6}", p.value, target)),
        );
        cf.push([p.theta, p.value.re, p.value.im, p.se_re, p.se_im, target.re, target.im]);
    }
    r.table(cf);

    let half: Vec<f64> = ms.iter().map(|m| rho.powf(-m / 2.0)).collect();
    let h = Summary::of(&half);
    r.diagnostic(
        ComparisonVerdict::new("E rho^{-M'/2} < 1", Statistic::Absolute, h.mean + 3.0 * h.se, 1.0)
            .with_note(format!("mean={:.6} exact={:.6}", h.mean, law.half_moment())),
    );
    let stepped: Vec<(i64, bool)> = r.draws(1, stepping, |rng| law.sample_stepping(rng));
    let bound_failures = stepped.iter().filter(|s| !s.1).count();
    r.diagnostic(ComparisonVerdict::new("free mouse max <= 1 + free cat max", Statistic::Absolute, bound_failures as f64, 0.0));
    let stepped: Vec<f64> = stepped.iter().map(|s| s.0 as f64).collect();
    r.diagnostic(ks_two_sample("stepping vs renewal sampler", &stepped, &ms, 0.01)?);

    let mut hist = std::collections::BTreeMap::<i64, u64>::new();
    for &m in &ms {
        *hist.entry(m as i64).or_default() += 1;
    }
    let mut t = Table::new("free_jump", &["value", "count"]);
    for (v, c) in hist {
        t.push([v.to_string(), c.to_string()]);
    }
    r.table(t);
    Ok(())
}

pub const COLLAPSE: Experiment = Experiment {
    name: "reflected-collapse",
    about: "time for a mouse started at n to be brought down to 0",
    tag: 5,
    params: &[
        Param::float("p", "0.3", "up probability"),
        Param::int("n", "12", "initial mouse level"),
        Param::int("replicas", "5000", "pair runs"),
        Param::int("w_samples", "100000", "reference samples of W"),
        Param::int("w_small", "10000", "smaller W sample for the growing-mean check"),
        Param::int("w_large", "1000000", "larger W sample for the growing-mean check"),
        Param::float("rel_tail", "1e-4", "relative tail bound for cutting the W series"),
        Param::int("jump_samples", "1000000", "reference samples of the free jump"),
        Param::floats("t_grid", "0.05,0.1,0.25,0.5,1,2,4", "profile times in units of rho^-n"),
    ],
    body: collapse,
};

/// Hill estimate of the tail index from the `k` largest values.
fn hill(xs: &[f64], k: usize) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let base = v[k].ln();
    k as f64 / v[..k].iter().map(|x| x.ln() - base).sum::<f64>()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn collapse(r: &mut Run) -> Result<()> {
    let w = walk(r)?;
    let n = r.int("n")?;
    let reps = r.int("replicas")? as usize;
    let w_ref = r.int("w_samples")? as usize;
    let w_small = r.int("w_small")? as usize;
    let w_large = r.int("w_large")? as usize;
    let rel_tail = r.float("rel_tail")?;
    let jumps = r.int("jump_samples")? as usize;
    let grid = r.floats("t_grid")?;
    require((2..=14).contains(&n), || format!("initial level must be in 2..=14, got {n}"))?;
    require(reps >= 100 && w_ref >= 1000 && w_small >= 100 && w_large > w_small, || "sample sizes too small".into())?;
    require(rel_tail > 0.0 && rel_tail < 1.0, || "rel_tail must be in (0,1)".into())?;
    require(grid.windows(2).all(|g| g[0] <= g[1]) && grid.iter().all(|&t| t >= 0.0), || "t_grid must be sorted and nonnegative".into())?;
    let rho = w.rho();
    let scale = rho.powi(n as i32);
    // every replica needs at least one climb to the mouse; the total is
    // heavy tailed because H_0 has infinite mean
    r.declare(expected_climb_steps(&w, n, reps as u64))?;
    let times: Vec<u64> = grid.iter().map(|t| (t / scale).floor() as u64).collect();

    let recs = r.replicas(0, reps, |rng| collapse_replica(&w, n, &times, rng));
    let law = FreeJumpLaw::new(w);
    let ws: Vec<f64> = r.draws(1, w_ref, |rng| sample_w(&law, rel_tail, rng).value);
    let h0: Vec<f64> = recs.iter().map(|c| c.h0 as f64 * scale).collect();
    r.criterion(ks_two_sample("rho^n H_0 vs W", &h0, &ws, 0.05)?);

    let free: Vec<f64> = r.draws(2, jumps, |rng| law.sample_renewal(rng) as f64);
    let first: Vec<f64> = recs.iter().map(|c| c.first_jump as f64).collect();
    r.criterion(ks_two_sample("first jump M_{t1} - n vs M'", &first, &free, 0.03)?);

    let small: Vec<f64> = r.draws(3, w_small, |rng| sample_w(&law, rel_tail, rng).value);
    let large: Vec<f64> = r.draws(4, w_large, |rng| sample_w(&law, rel_tail, rng).value);
    let (ms, ml) = (Summary::of(&small).mean, Summary::of(&large).mean);
    r.criterion(
        at_least("W sample mean growth, large vs small sample", ml / ms, 1.5)
            .with_sizes(&[w_small, w_large])
            .with_note(format!("mean small={ms:.4} large={ml:.4} factor={:.4}", ml / ms)),
    );
    let k = (w_large / 100).max(10);
    let xi = hill(&large, k);
    r.diagnostic(
        ComparisonVerdict::new("W tail index (Hill, top 1%) vs 1", Statistic::Absolute, (xi - 1.0).abs(), 0.15)
            .with_note(format!("index={xi:.4}: tail ~ 1/w, so sample means grow like log N")),
    );
    let (m1, m2) = (median(&ws), median(&small));
    r.diagnostic(relative_within("W median across streams", m2, m1, 0.05));

    let t1: Vec<f64> = recs.iter().map(|c| c.t1 as f64 * scale).collect();
    let c = up_time_constant(&w);
    r.diagnostic(ks_distance("rho^n t_1 vs exponential with mean (1+rho)/(1-rho)^2", &t1, |x| exponential_cdf(c, x), 0.03)?);

    // largest |M - n| seen at profile times before H_0
    let mut dev: Vec<f64> = recs
        .iter()
        .map(|c| {
            c.profile
                .iter()
                .zip(&times)
                .filter(|(_, &t)| t < c.h0)
                .map(|(&m, _)| (m as f64 - n as f64).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    dev.sort_by(|a, b| a.total_cmp(b));
    r.metric("profile_C_median", dev[dev.len() / 2]);
    r.metric("profile_C_p99", dev[dev.len() * 99 / 100]);
    r.metric("mean_cycles_before_H0", Summary::of(&recs.iter().map(|c| c.cycles as f64).collect::<Vec<_>>()).mean);

    let mut runs = Table::new("collapse", &["replica", "n", "rho_n_H0", "rho_n_t1", "first_jump", "cycles"]);
    let mut profile = Table::new("profile", &["replica", "n", "rho_n_H0", "t", "profile"]);
    for (i, c) in recs.iter().enumerate() {
        runs.push([i.to_string(), n.to_string(), (c.h0 as f64 * scale).to_string(), (c.t1 as f64 * scale).to_string(), c.first_jump.to_string(), c.cycles.to_string()]);
        for (t, m) in grid.iter().zip(&c.profile) {
            profile.push([i.to_string(), n.to_string(), (c.h0 as f64 * scale).to_string(), t.to_string(), (*m as f64 / n as f64).to_string()]);
        }
    }
    r.table(runs);
    r.table(profile);
    let mut wt = Table::new("w", &["sample", "w"]);
    for (i, v) in ws.iter().enumerate() {
        wt.push([i.to_string(), v.to_string()]);
    }
    r.table(wt);
    Ok(())
}

pub const OSC: Experiment = Experiment {
    name: "reflected-osc",
    about: "chance that a pair started at 0 lifts the mouse to n/2 on the time scale rho^-n",
    tag: 6,
    params: &[
        Param::float("p", "0.35", "up probability"),
        Param::int("n_small", "8", "smaller level"),
        Param::int("n_large", "12", "larger level"),
        Param::float("s", "0.5", "window start in units of rho^-n"),
        Param::float("t", "1", "window end in units of rho^-n"),
        Param::int("replicas", "20000", "runs per level"),
        Param::float("z", "1.6448536269514722", "one-sided critical value"),
    ],
    body: osc,
};

fn osc(r: &mut Run) -> Result<()> {
    let w = walk(r)?;
    let (n1, n2) = (r.int("n_small")?, r.int("n_large")?);
    let (s, t) = (r.float("s")?, r.float("t")?);
    let reps = r.int("replicas")? as usize;
    let z = r.float("z")?;
    require(n1 >= 2 && n2 > n1 && n2 <= 16, || format!("levels must satisfy 2 <= {n1} < {n2} <= 16"))?;
    require(0.0 <= s && s < t, || format!("window must satisfy 0 <= s < t, got [{s}, {t}]"))?;
    require(reps >= 100, || "need at least 100 replicas".into())?;
    let window = |n: u64| {
        let unit = w.rho().powi(-(n as i32));
        ((s * unit).floor() as u64, (t * unit).floor() as u64)
    };
    r.declare(2.0 * reps as f64 * (window(n1).1 + window(n2).1) as f64)?;

    let mut est = Vec::new();
    let mut table = Table::new("osc", &["n", "s", "t", "hits", "replicas", "estimate", "wilson_lo", "wilson_hi"]);
    for (sub, n) in [(0u32, n1), (1, n2)] {
        let (from, to) = window(n);
        // the same stream with the window opened at 0 must contain the event
        let pairs: Vec<(bool, bool)> = r.replicas(sub, reps, |rng| {
            let mut again = rng.clone();
            (oscillation_replica(&w, n, from, to, rng), oscillation_replica(&w, n, 0, to, &mut again))
        });
        let hits = pairs.iter().filter(|p| p.0).count();
        let broken = pairs.iter().filter(|p| p.0 && !p.1).count();
        r.diagnostic(ComparisonVerdict::new(format!("window [0,t] contains window [s,t], n={n}"), Statistic::Absolute, broken as f64, 0.0));
        let (lo, hi) = wilson_interval(hits, reps, 1.96);
        table.push([n.to_string(), s.to_string(), t.to_string(), hits.to_string(), reps.to_string(), (hits as f64 / reps as f64).to_string(), lo.to_string(), hi.to_string()]);
        est.push(hits);
    }
    r.criterion(proportion_increase(
        &format!("estimate increases from n={n1} to n={n2}"),
        (est[0], reps),
        (est[1], reps),
        z,
    ));
    r.table(table);
    Ok(())
}
