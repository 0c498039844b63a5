//! The five subcommands: solve a configuration, emit figure data, simulate
//! a cohort panel, estimate on a panel file, and sweep a shock parameter.

use anyhow::{bail, Context, Result};
use benport::cohort::{self, CohortConfig};
use benport::estimators::{
    did_immediate, did_total_effect, event_study, SummaryRow, CI_CRITICAL,
};
use benport::lifehist::{self, LifeHistRow};
use benport::model::{self, LifeCyclePlan, Preferences, Shock, Technology};
use benport::table::Table;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{fmt10, fmt10_opt, OutputTracker};

/// Solves the configured model and reports baseline and, for shocked runs,
/// re-optimized plans side by side.
pub fn cmd_solve(config: &RunConfig, out: &mut OutputTracker) -> Result<()> {
    let prefs = config.preferences()?;
    let tech = config.technology()?;
    let baseline = model::solve_ex_ante(&prefs, &tech, None)?;
    let mut rows: Vec<(String, LifeCyclePlan)> = vec![("baseline".into(), baseline)];
    if let Some(shock) = config.shock()? {
        if !config.shock.fix_schooling {
            let ex_ante = model::solve_ex_ante(&prefs, &tech, Some(&shock))?;
            rows.push(("ex_ante".into(), ex_ante));
        }
        let ex_post = model::solve_ex_post(&prefs, &tech, &shock, baseline.schooling)?;
        rows.push(("ex_post".into(), ex_post));
    }
    let mut csv = String::from("scenario,s,R,c,V\n");
    for (name, plan) in &rows {
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            fmt10(plan.schooling),
            fmt10(plan.retirement),
            fmt10(plan.consumption),
            fmt10(plan.value),
        ));
    }
    out.write("solve.csv", csv.as_bytes())?;
    for (name, plan) in &rows {
        println!(
            "{name:9} s = {}  R = {}  c = {}  V = {}",
            fmt10(plan.schooling),
            fmt10(plan.retirement),
            fmt10(plan.consumption),
            fmt10(plan.value),
        );
        if name != "baseline" {
            println!(
                "{name:9} retirement shift vs baseline: {}",
                fmt10(plan.retirement - rows[0].1.retirement)
            );
        }
    }
    Ok(())
}

/// Retirement age on the schooling-condition locus, if the marginal
/// benefit of schooling can cover its cost at this slope.
fn eq1_locus(prefs: &Preferences, tech: &Technology, s: f64, captivity: f64) -> Option<f64> {
    let slope = tech.log_wage.theta_prime(s);
    let inner = 1.0 - prefs.r / slope;
    if inner <= 0.0 {
        return None;
    }
    Some(s + captivity - inner.ln() / prefs.r)
}

/// Retirement age on the retirement-condition locus for sunk schooling.
fn eq2_locus(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    captivity: f64,
    displacement: Option<(f64, f64, f64)>,
) -> Option<f64> {
    match model::solve_ex_post_combined(prefs, tech, s, captivity, displacement) {
        Ok(plan) if plan.corner.is_none() && plan.retirement < prefs.lifespan => {
            Some(plan.retirement)
        }
        _ => None,
    }
}

/// Emits the data behind the theory figures: four panels of equilibrium
/// loci under each shock, and the retirement margin after displacement at
/// three ages.
pub fn cmd_figures(config: &RunConfig, out: &mut OutputTracker) -> Result<()> {
    let prefs = config.preferences()?;
    let tech = config.technology()?;
    let kappa = config.shock.kappa.unwrap_or(1.2);
    let x = config.shock.x.unwrap_or(0.1);
    // wealth loss calibrated so the annuitized consumption decrement is 1/3
    let delta = {
        let r = prefs.r;
        (1.0 / 3.0) * (1.0 - (-r * prefs.lifespan).exp()) / r
    };
    let injured_tech = Technology::new(tech.log_wage, tech.disutility_scale * kappa)?;

    let n = 91;
    let s_grid: Vec<f64> = (0..n).map(|i| 0.45 * i as f64 / (n - 1) as f64).collect();
    let locus_csv = |header: &str, cols: &dyn Fn(f64) -> Vec<Option<f64>>| {
        let mut text = String::from(header);
        text.push('\n');
        for &s in &s_grid {
            let fields: Vec<String> = std::iter::once(fmt10(s))
                .chain(cols(s).into_iter().map(fmt10_opt))
                .collect();
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        text
    };

    let panel_a = locus_csv("s,r_eq1,r_eq2", &|s| {
        vec![
            eq1_locus(&prefs, &tech, s, 0.0),
            eq2_locus(&prefs, &tech, s, 0.0, None),
        ]
    });
    out.write("figure_d1a.csv", panel_a.as_bytes())?;

    let panel_b = locus_csv("s,r_eq1,r_eq2,r_eq2_injured", &|s| {
        vec![
            eq1_locus(&prefs, &tech, s, 0.0),
            eq2_locus(&prefs, &tech, s, 0.0, None),
            eq2_locus(&prefs, &injured_tech, s, 0.0, None),
        ]
    });
    out.write("figure_d1b.csv", panel_b.as_bytes())?;

    let panel_c = locus_csv("s,r_eq1,r_eq2,r_eq1_captive,r_eq2_captive", &|s| {
        vec![
            eq1_locus(&prefs, &tech, s, 0.0),
            eq2_locus(&prefs, &tech, s, 0.0, None),
            eq1_locus(&prefs, &tech, s, x),
            eq2_locus(&prefs, &tech, s, x, None),
        ]
    });
    out.write("figure_d1c.csv", panel_c.as_bytes())?;

    let panel_d = locus_csv("s,r_eq1,r_eq2,r_eq2_wealth_loss", &|s| {
        vec![
            eq1_locus(&prefs, &tech, s, 0.0),
            eq2_locus(&prefs, &tech, s, 0.0, None),
            eq2_locus(&prefs, &tech, s, 0.0, Some((1.0, delta, 0.0))),
        ]
    });
    out.write("figure_d1d.csv", panel_d.as_bytes())?;

    // displacement at three ages: the steeper learning technology, a wage
    // cut to e^{-s} of the pre-displacement wage, schooling sunk mid-range
    let steep = Technology::new(
        benport::model::LogWage::Linear { slope: 4.0 },
        tech.disutility_scale,
    )?;
    let s_sunk = 0.25_f64;
    let wage_factor = (-s_sunk).exp();
    let plan = model::solve_ex_post_combined(&prefs, &steep, s_sunk, 0.0, None)?;
    let displacement_ages = [0.5, 0.55, 0.6];
    let w_d = wage_factor * steep.wage(s_sunk);
    let mut d2 = String::from("r,f,mb_d050,mb_d055,mb_d060\n");
    let m = 301;
    for i in 0..m {
        let big_r = 0.30 + (0.98 - 0.30) * i as f64 / (m - 1) as f64;
        let f = steep.disutility(big_r, prefs.lifespan);
        let mut fields = vec![fmt10(big_r), fmt10(f)];
        for &d in &displacement_ages {
            let mb = if big_r < d {
                None
            } else {
                model::post_displacement_consumption(
                    &prefs,
                    &steep,
                    s_sunk,
                    plan.retirement,
                    wage_factor,
                    0.0,
                    d,
                    big_r,
                )
                .ok()
                .map(|c_d| w_d / c_d)
            };
            fields.push(fmt10_opt(mb));
        }
        d2.push_str(&fields.join(","));
        d2.push('\n');
    }
    out.write("figure_d2.csv", d2.as_bytes())?;
    Ok(())
}

/// Simulates the configured cohort across a worker pool and writes the
/// long-format panel. Parallel and serial runs agree exactly because all
/// randomness is derived per agent.
pub fn cmd_simulate(config: &RunConfig, workers: usize, out: &mut OutputTracker) -> Result<()> {
    let prefs = config.preferences()?;
    let tech = config.technology()?;
    let cohort_config: CohortConfig = config.cohort.to_cohort_config(config.seed);
    cohort_config.validate()?;
    let baseline = model::solve_ex_ante(&prefs, &tech, None)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    let agents = pool.install(|| {
        (0..cohort_config.n_agents)
            .into_par_iter()
            .map(|id| cohort::simulate_agent(&cohort_config, &prefs, &tech, &baseline, id))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let panel = cohort::to_panel(&agents);
    let mut buf = Vec::new();
    cohort::write_panel_csv(&mut buf, &panel)?;
    out.write("panel.csv", &buf)?;
    println!(
        "simulated {} agents ({} panel rows)",
        agents.len(),
        panel.len()
    );
    Ok(())
}

fn rows_to_table(rows: &[LifeHistRow]) -> Result<Table> {
    let mut t = Table::new();
    let grab = |f: &dyn Fn(&LifeHistRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    t.push_column("id", grab(&|r| r.id as f64))?;
    t.push_column("birth_year", grab(&|r| r.birth_year as f64))?;
    t.push_column("age", grab(&|r| r.age as f64))?;
    t.push_column("year", grab(&|r| r.year as f64))?;
    t.push_column("exited_employment", grab(&|r| flag(r.exited_employment)))?;
    t.push_column(
        "employed",
        grab(&|r| flag(r.state == cohort::State::Employment)),
    )?;
    t.push_column("displaced", grab(&|r| flag(r.displaced)))?;
    t.push_column("injured", grab(&|r| flag(r.injured)))?;
    t.push_column("pow", grab(&|r| flag(r.pow)))?;
    t.push_column("female", grab(&|r| flag(r.female)))?;
    Ok(t)
}

fn write_summary(out: &mut OutputTracker, rows: &[SummaryRow]) -> Result<()> {
    let mut csv = String::from("term,estimate,se,ci_lo,ci_hi\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.term,
            fmt10(row.estimate),
            fmt10(row.se),
            fmt10(row.ci_lo),
            fmt10(row.ci_hi),
        ));
    }
    out.write("results.csv", csv.as_bytes())?;
    out.write(
        "results.json",
        serde_json::to_vec_pretty(rows)?.as_slice(),
    )?;
    Ok(())
}

/// Runs the configured estimator over a panel CSV (simulated or external).
pub fn cmd_estimate(config: &RunConfig, out: &mut OutputTracker) -> Result<()> {
    let block = &config.estimate;
    let Some(panel_path) = &block.panel else {
        bail!("estimate.panel must name the input panel CSV");
    };
    let file = std::fs::File::open(panel_path)
        .with_context(|| format!("opening panel file {panel_path}"))?;
    let (rows, parse_errors) = lifehist::read_panel_csv(file, lifehist::DEFAULT_ERROR_CAP)?;
    for e in &parse_errors {
        eprintln!("warning: {e}");
    }
    if rows.is_empty() {
        bail!("empty panel: {panel_path} contains no usable rows");
    }
    let table = rows_to_table(&rows)?;
    let summary: Vec<SummaryRow> = match block.kind.as_str() {
        "event-study" => {
            let result = event_study(
                &table,
                &block.outcome,
                &block.treatment,
                block.age_lo..=block.age_hi,
                &["birth_year"],
            )?;
            for dropped in &result.dropped {
                eprintln!("note: dropped collinear column {dropped}");
            }
            result
                .ages
                .iter()
                .zip(result.coefficients.iter().zip(&result.standard_errors))
                .map(|(&age, (&b, &se))| SummaryRow {
                    term: format!("{}_x_age_{age}", block.treatment),
                    estimate: b,
                    se,
                    ci_lo: b - CI_CRITICAL * se,
                    ci_hi: b + CI_CRITICAL * se,
                })
                .collect()
        }
        "did-immediate" => {
            let result = did_immediate(
                &table,
                &block.treatment,
                &block.outcome,
                block.pre_year,
                block.post_start,
            )?;
            vec![SummaryRow {
                term: "did_immediate".into(),
                estimate: result.immediate_effect,
                se: result.se,
                ci_lo: result.immediate_effect - CI_CRITICAL * result.se,
                ci_hi: result.immediate_effect + CI_CRITICAL * result.se,
            }]
        }
        "did-total" => {
            let result = did_total_effect(
                &table,
                &block.treatment,
                &block.outcome,
                block.pre_year,
                block.post_start..=block.post_end,
            )?;
            let scale = result.post_period_length;
            vec![
                SummaryRow {
                    term: "did_average_post".into(),
                    estimate: result.immediate_effect,
                    se: result.se,
                    ci_lo: result.immediate_effect - CI_CRITICAL * result.se,
                    ci_hi: result.immediate_effect + CI_CRITICAL * result.se,
                },
                SummaryRow {
                    term: "total_effect_years".into(),
                    estimate: result.total_effect_years,
                    se: result.se * scale,
                    ci_lo: result.total_effect_years - CI_CRITICAL * result.se * scale,
                    ci_hi: result.total_effect_years + CI_CRITICAL * result.se * scale,
                },
            ]
        }
        other => bail!("unknown estimator kind '{other}' (expected event-study, did-immediate, or did-total)"),
    };
    write_summary(out, &summary)?;
    for row in &summary {
        println!(
            "{:24} {}  (se {})",
            row.term,
            fmt10(row.estimate),
            fmt10(row.se)
        );
    }
    Ok(())
}

fn sweep_shock(param: &str, base: &RunConfig, value: f64) -> Result<Shock> {
    let block = &base.shock;
    Ok(match param {
        "kappa" => Shock::Injury { kappa: value },
        "x" => Shock::Captivity { duration: value },
        "lambda" => Shock::Displacement {
            wage_factor: value,
            wealth_loss: block.delta.unwrap_or(0.0),
            age: block.d.unwrap_or(0.0),
        },
        "delta" => Shock::Displacement {
            wage_factor: block.lambda.unwrap_or(1.0),
            wealth_loss: value,
            age: block.d.unwrap_or(0.0),
        },
        "d" => Shock::Displacement {
            wage_factor: block.lambda.unwrap_or(1.0),
            wealth_loss: block.delta.unwrap_or(0.0),
            age: value,
        },
        other => bail!("unknown sweep parameter '{other}' (expected kappa, x, lambda, delta, or d)"),
    })
}

/// Sweeps one shock parameter over a grid, solving each point on the
/// worker pool. Output rows are ordered by the input grid regardless of
/// completion order.
pub fn cmd_sweep(config: &RunConfig, workers: usize, out: &mut OutputTracker) -> Result<()> {
    let prefs = config.preferences()?;
    let tech = config.technology()?;
    let block = &config.sweep;
    if block.n_points < 2 {
        bail!("sweep.n_points must be at least 2");
    }
    let baseline = model::solve_ex_ante(&prefs, &tech, None)?;
    let values: Vec<f64> = (0..block.n_points)
        .map(|i| block.lo + (block.hi - block.lo) * i as f64 / (block.n_points - 1) as f64)
        .collect();
    let fix_schooling = config.shock.fix_schooling;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    let plans: Vec<Result<LifeCyclePlan>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let shock = sweep_shock(&block.param, config, v)?;
                let plan = if fix_schooling {
                    model::solve_ex_post(&prefs, &tech, &shock, baseline.schooling)?
                } else {
                    model::solve_ex_ante(&prefs, &tech, Some(&shock))?
                };
                Ok(plan)
            })
            .collect()
    });
    let mut csv = format!("{},s,R,c,V\n", block.param);
    for (v, plan) in values.iter().zip(plans) {
        let plan = plan.with_context(|| format!("sweep point {} = {v}", block.param))?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt10(*v),
            fmt10(plan.schooling),
            fmt10(plan.retirement),
            fmt10(plan.consumption),
            fmt10(plan.value),
        ));
    }
    out.write("sweep.csv", csv.as_bytes())?;
    println!("swept {} over {} points", block.param, values.len());
    Ok(())
}
