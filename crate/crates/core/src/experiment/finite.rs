//! Exact analysis over random finite chains and the r-cycles example.

use super::{require, Experiment, Param, Run, Table};
use crate::chain::FiniteChain;
use crate::error::Result;
use crate::stationary::{nu2_direct, nu_exact, r_cycles_chain, random_chain, random_reversible_chain, tetali_bound_check, verify_invariance};
use crate::stats::{absolute_within, ComparisonVerdict, SeededStream, Statistic};
use rand::RngCore;

pub const EXACT: Experiment = Experiment {
    name: "exact",
    about: "invariant measure identities over random finite chains",
    tag: 1,
    params: &[
        Param::int("chains", "600", "random chains, any structure"),
        Param::int("reversible", "200", "random reversible chains"),
        Param::int("min_states", "3", "smallest state count"),
        Param::int("max_states", "8", "largest state count"),
    ],
    body: exact,
};

#[derive(Clone, Debug)]
struct ChainStats {
    states: usize,
    reversible: bool,
    alpha: f64,
    balance: f64,
    diag: f64,
    rows: f64,
    tetali_excess: f64,
    /// `max |nu2 - (1 - pi)|`, meaningful for reversible chains.
    nu2_reversible: f64,
    route: f64,
    h_spread: f64,
}

fn analyse(c: &FiniteChain) -> Result<ChainStats> {
    let t = nu_exact(c)?;
    let inv = verify_invariance(&t, c);
    let (diag, rows) = t.invariant_defects();
    let tet = tetali_bound_check(c)?;
    let direct = nu2_direct(c)?;
    let route = direct.weights().iter().zip(&t.nu2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let nu2_reversible = t.nu2.iter().zip(&t.pi).map(|(v, p)| (v - (1.0 - p)).abs()).fold(0.0, f64::max);
    Ok(ChainStats {
        states: c.n_states(),
        reversible: tet.reversible,
        alpha: t.alpha,
        balance: inv.max_residual,
        diag,
        rows,
        tetali_excess: t.alpha - tet.bound,
        nu2_reversible,
        route,
        h_spread: t.h_spread(),
    })
}

fn max_of<'a>(xs: impl Iterator<Item = &'a ChainStats>, f: impl Fn(&ChainStats) -> f64) -> f64 {
    xs.map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn exact(r: &mut Run) -> Result<()> {
    let chains = r.int("chains")? as usize;
    let reversible = r.int("reversible")? as usize;
    let lo = r.int("min_states")? as usize;
    let hi = r.int("max_states")? as usize;
    require(chains + reversible >= 500, || "the exact suite needs at least 500 chains".into())?;
    require((3..=hi).contains(&lo) && hi <= 64, || format!("state counts must satisfy 3 <= {lo} <= {hi} <= 64"))?;
    r.declare(0.0)?;

    let size = move |rng: &mut SeededStream| lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize;
    let general: Vec<Result<ChainStats>> = r.replicas(0, chains, |rng| {
        let n = size(rng);
        let density = 0.3 + 0.7 * rng.open01();
        analyse(&random_chain(n, density, rng))
    });
    let rev: Vec<Result<ChainStats>> = r.replicas(1, reversible, |rng| {
        let n = size(rng);
        analyse(&random_reversible_chain(n, rng))
    });
    let general = general.into_iter().collect::<Result<Vec<_>>>()?;
    let rev = rev.into_iter().collect::<Result<Vec<_>>>()?;
    let all: Vec<&ChainStats> = general.iter().chain(&rev).collect();
    let reversible_set: Vec<&ChainStats> = all.iter().copied().filter(|s| s.reversible).collect();
    let total = all.len();

    let sized = |v: ComparisonVerdict, n: usize| v.with_sizes(&[n]);
    r.criterion(sized(
        ComparisonVerdict::new("balance residual", Statistic::Absolute, max_of(all.iter().copied(), |s| s.balance), 1e-9),
        total,
    ));
    r.criterion(sized(
        ComparisonVerdict::new("nu(x,x) = pi(x)", Statistic::Absolute, max_of(all.iter().copied(), |s| s.diag), 1e-10),
        total,
    ));
    r.criterion(sized(
        ComparisonVerdict::new("row sums = alpha pi", Statistic::Absolute, max_of(all.iter().copied(), |s| s.rows), 1e-10),
        total,
    ));
    r.criterion(sized(
        ComparisonVerdict::new("alpha <= N - 1", Statistic::Absolute, max_of(all.iter().copied(), |s| s.tetali_excess), 1e-9),
        total,
    ));
    r.criterion(sized(
        ComparisonVerdict::new("reversible nu2 = 1 - pi", Statistic::Absolute, max_of(reversible_set.iter().copied(), |s| s.nu2_reversible), 1e-9),
        reversible_set.len(),
    ));
    r.criterion(sized(
        ComparisonVerdict::new(
            "reversible alpha = N - 1",
            Statistic::Absolute,
            max_of(reversible_set.iter().copied(), |s| (s.alpha - (s.states - 1) as f64).abs()),
            1e-9,
        ),
        reversible_set.len(),
    ));

    // two cycles of lengths 1 and 2 glued at 0: states 0, 1.1, 2.1, 2.2
    let cycles = r_cycles_chain(&[1, 2])?;
    let t = nu_exact(&cycles)?;
    let deviation = |nu2: [f64; 4], alpha: f64| {
        t.nu2.iter().zip(nu2).map(|(a, b)| (a - b).abs()).fold((t.alpha - alpha).abs(), f64::max)
    };
    let printed = deviation([0.4, 0.6, 0.2, 0.4], 1.6);
    r.criterion(
        ComparisonVerdict::new("r-cycles nu2 = (2/5,3/5,1/5,2/5), alpha = 8/5", Statistic::Absolute, printed, 1e-12).with_note(format!(
            "solver nu2={:?} alpha={}",
            t.nu2, t.alpha
        )),
    );
    // with m - m_k + r in place of m - m_k + 1 the closed forms give alpha = r
    let corrected = deviation([0.4, 0.8, 0.2, 0.6], 2.0);
    r.diagnostic(ComparisonVerdict::new(
        "r-cycles nu2 = pi(y)(m - m_k + r), alpha = r",
        Statistic::Absolute,
        corrected,
        1e-12,
    ));
    r.diagnostic(absolute_within("r-cycles diagonal mass = 1/r", 1.0 / t.alpha, 0.5, 1e-12));

    r.diagnostic(sized(
        ComparisonVerdict::new("nu2 by hitting times = nu2 by solve", Statistic::Absolute, max_of(all.iter().copied(), |s| s.route), 1e-9),
        total,
    ));
    r.diagnostic(sized(
        ComparisonVerdict::new("h(x) constant in x", Statistic::Absolute, max_of(all.iter().copied(), |s| s.h_spread), 1e-9),
        total,
    ));
    r.metric("reversible_chains", reversible_set.len() as f64);

    let mut table = Table::new(
        "chains",
        &["chain", "family", "states", "reversible", "alpha", "balance_residual", "diag_defect", "row_defect", "nu2_route_defect"],
    );
    for (i, s) in all.iter().enumerate() {
        let family = if i < general.len() { "random" } else { "reversible" };
        table.push([
            i.to_string(),
            family.to_string(),
            s.states.to_string(),
            s.reversible.to_string(),
            s.alpha.to_string(),
            s.balance.to_string(),
            s.diag.to_string(),
            s.rows.to_string(),
            s.route.to_string(),
        ]);
    }
    r.table(table);
    Ok(())
}
