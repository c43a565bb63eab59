//! Command implementations.

use std::path::Path;
use std::result::Result;

use les_core::linalg::Mat;
use les_core::*;

use crate::csvio;
use crate::output::{fmt_num, write_artifact, Report};
use crate::{CliError, Command, RunConfig};

pub fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Fit => run_fit(cfg),
        Command::Tune => run_tune(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Verify => run_verify(cfg),
        Command::Df => run_df(cfg),
    }
}

struct Dataset {
    design: GroupedDesign,
    response: Response,
    names: Vec<String>,
    labels: Vec<String>,
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let input = cfg.require("input")?.to_string();
    let response = cfg.require("response")?.to_string();
    let groups = cfg.require("groups")?.to_string();
    let (x_raw, y_raw, names) = csvio::ingest_csv(Path::new(&input), &response)?;
    let (partition, labels) = csvio::ingest_group_map(Path::new(&groups), &names)?;
    let (design, resp) = standardize(&x_raw, &y_raw, partition)?;
    Ok(Dataset {
        design,
        response: resp,
        names,
        labels,
    })
}

fn resolve_weights(cfg: &RunConfig, partition: &GroupPartition) -> Result<Vec<f64>, CliError> {
    match cfg.get("weights").unwrap_or("pk_over_p") {
        "pk_over_p" => {
            let p = partition.num_variables() as f64;
            Ok(partition.sizes().iter().map(|&pk| pk as f64 / p).collect())
        }
        "pk" => Ok(partition.sizes().iter().map(|&pk| pk as f64).collect()),
        custom if custom.starts_with("custom:") => {
            let path = custom.trim_start_matches("custom:");
            csvio::load_weights(Path::new(path), partition.num_groups())
        }
        other => Err(CliError::usage(format!(
            "--weights: expected pk_over_p, pk or custom:<path>, got '{other}'"
        ))),
    }
}

fn emit(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    let rendered = report.render(cfg.format()?);
    match cfg.path("out") {
        Some(path) => write_artifact(&path, &rendered),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn coefficient_table(
    cfg: &RunConfig,
    data: &Dataset,
    fit: &FitResult,
) -> (Vec<String>, Vec<Vec<String>>) {
    let original = fit.original_scale_beta(&data.design);
    let part = data.design.partition();
    let mut header = vec!["name".to_string(), "group".into(), "estimate".into()];
    let standardized = cfg.is_set("standardized");
    if standardized {
        header.push("estimate_standardized".into());
    }
    header.push("selected".into());
    let rows = (0..data.design.p())
        .map(|j| {
            let k = part.group_of(j);
            let mut row = vec![
                data.names[j].clone(),
                data.labels[k].clone(),
                fmt_num(original[j]),
            ];
            if standardized {
                row.push(fmt_num(fit.beta[j]));
            }
            row.push(if fit.active_variables.contains(&j) { "1" } else { "0" }.into());
            row
        })
        .collect();
    (header, rows)
}

fn fit_diagnostics(fit: &FitResult) -> Vec<(String, String)> {
    vec![
        ("objective".into(), fmt_num(fit.objective)),
        ("sweeps".into(), fit.sweeps.to_string()),
        ("converged".into(), fit.converged.to_string()),
        ("kkt_residual".into(), fmt_num(fit.kkt_residual)),
        ("active_variables".into(), fit.active_variables.len().to_string()),
        ("active_groups".into(), fit.active_groups.len().to_string()),
    ]
}

fn run_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let lambda = cfg
        .parse_f64("lambda")?
        .ok_or_else(|| CliError::usage("missing required option --lambda"))?;
    let alpha = cfg
        .parse_f64("alpha")?
        .ok_or_else(|| CliError::usage("missing required option --alpha"))?;
    let weights = resolve_weights(cfg, data.design.partition())?;
    let config = PenaltyConfig::new(lambda, alpha, weights)?;
    let fit = fit_les(
        &data.design,
        &data.response,
        &config,
        &cfg.solver_options()?,
        None,
    )?;

    let mut report = Report::new();
    let mut diag = vec![
        ("command".into(), "fit".into()),
        ("lambda".into(), fmt_num(lambda)),
        ("alpha".into(), fmt_num(alpha)),
        ("n".into(), data.design.n().to_string()),
        ("p".into(), data.design.p().to_string()),
        ("groups".into(), data.design.partition().num_groups().to_string()),
        ("seed".into(), cfg.seed()?.to_string()),
    ];
    diag.extend(fit_diagnostics(&fit));
    report.key_values("diagnostics", diag);
    let (header, rows) = coefficient_table(cfg, &data, &fit);
    report.table("coefficients", header, rows);
    emit(cfg, &report)?;

    if !fit.converged {
        return Err(CliError::solver(format!(
            "solver did not converge in {} sweeps (kkt residual {:.3e})",
            fit.sweeps, fit.kkt_residual
        )));
    }
    Ok(())
}

fn parse_list(raw: &str, key: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("--{key}: '{t}' is not a number")))
        })
        .collect()
}

fn run_tune(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let weights = resolve_weights(cfg, data.design.partition())?;
    let seed = cfg.seed()?;

    let criterion = match cfg.require("criterion")? {
        "validation" => Criterion::Validation,
        "bic" => Criterion::Bic,
        cv if cv.starts_with("cv:") => {
            let k: usize = cv[3..]
                .parse()
                .map_err(|_| CliError::usage(format!("--criterion: bad fold count in '{cv}'")))?;
            Criterion::KfoldCv { k, seed }
        }
        other => {
            return Err(CliError::usage(format!(
                "--criterion: expected validation, cv:<k> or bic, got '{other}'"
            )))
        }
    };

    let lambdas = match cfg.get("grid-lambdas") {
        Some(raw) => LambdaGrid::Explicit(parse_list(raw, "grid-lambdas")?),
        None => LambdaGrid::default(),
    };
    let alphas = match cfg.get("grid-alphas") {
        Some(raw) => parse_list(raw, "grid-alphas")?,
        None => default_alphas(),
    };
    let grid = TuningGrid::new(lambdas, alphas, criterion.clone())?;

    let validation_store;
    let validation = match criterion {
        Criterion::Validation => {
            let vpath = cfg
                .get("validation-input")
                .ok_or_else(|| CliError::usage("validation criterion needs --validation-input"))?;
            let response = cfg.require("response")?;
            let (xv, yv, vnames) = csvio::ingest_csv(Path::new(vpath), response)?;
            if vnames != data.names {
                return Err(CliError::data(
                    "validation columns do not match the training columns",
                ));
            }
            validation_store = (xv, yv);
            Some(ValidationData {
                x_raw: &validation_store.0,
                y_raw: &validation_store.1,
            })
        }
        _ => None,
    };

    let dfcfg = DfConfig {
        r: cfg.parse_usize("df-r")?.unwrap_or(5),
        rho: cfg.parse_f64("df-rho")?,
        seed,
    };
    let result = grid_search(
        &data.design,
        &data.response,
        &grid,
        validation,
        Some(&dfcfg),
        &weights,
        &cfg.solver_options()?,
    )?;

    let mut report = Report::new();
    let sel = result.selected_entry();
    report.key_values(
        "selected",
        vec![
            ("command".into(), "tune".into()),
            ("criterion".into(), cfg.require("criterion")?.to_string()),
            ("lambda".into(), fmt_num(sel.lambda)),
            ("alpha".into(), fmt_num(sel.alpha)),
            ("criterion_value".into(), fmt_num(sel.criterion_value)),
            (
                "df_hat".into(),
                sel.df_hat.map(fmt_num).unwrap_or_else(|| "-".into()),
            ),
            ("seed".into(), seed.to_string()),
            ("grid_points".into(), result.entries.len().to_string()),
        ],
    );
    let rows: Vec<Vec<String>> = result
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            vec![
                fmt_num(e.lambda),
                fmt_num(e.alpha),
                fmt_num(e.criterion_value),
                e.df_hat.map(fmt_num).unwrap_or_else(|| "-".into()),
                e.n_active.to_string(),
                e.sweeps.to_string(),
                e.converged.to_string(),
                fmt_num(e.kkt_residual),
                if i == result.selected { "1" } else { "0" }.into(),
            ]
        })
        .collect();
    report.table(
        "grid",
        vec![
            "lambda".into(),
            "alpha".into(),
            "criterion_value".into(),
            "df_hat".into(),
            "n_active".into(),
            "sweeps".into(),
            "converged".into(),
            "kkt_residual".into(),
            "selected".into(),
        ],
        rows,
    );
    let (header, crows) = coefficient_table(cfg, &data, &result.selected_fit);
    report.table("coefficients", header, crows);
    emit(cfg, &report)?;

    if !result.selected_fit.converged {
        return Err(CliError::solver("selected fit did not converge"));
    }
    Ok(())
}

fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let example = cfg
        .parse_usize("example")?
        .ok_or_else(|| CliError::usage("missing required option --example {1|2|3|4}"))?;
    let method = match cfg.get("method").unwrap_or("les") {
        "les" => Method::Les,
        "lasso" => Method::Lasso,
        other => {
            return Err(CliError::usage(format!(
                "--method: expected les or lasso, got '{other}'"
            )))
        }
    };
    let tuning = match cfg.get("tuning").unwrap_or("tuning-set") {
        "tuning-set" => TuningMethod::TuningSet,
        "bic" => TuningMethod::Bic,
        other => {
            return Err(CliError::usage(format!(
                "--tuning: expected tuning-set or bic, got '{other}'"
            )))
        }
    };
    let reps = cfg.parse_usize("reps")?.unwrap_or(200);
    let seed = cfg.seed()?;

    let mut scenario = build_scenario(example)?;
    if let Some(n) = cfg.parse_usize("n")? {
        scenario = scenario.with_n(n);
    }
    let mut study = StudyOptions::default();
    study.solver = cfg.solver_options()?;
    if let Some(r) = cfg.parse_usize("df-r")? {
        study.df_r = r;
    }
    if let Some(raw) = cfg.get("grid-alphas") {
        study.les_alphas = parse_list(raw, "grid-alphas")?;
    }

    let s = run_replicates(&scenario, reps, method, tuning, seed, &study)?;

    let mut report = Report::new();
    report.key_values(
        "study",
        vec![
            ("command".into(), "simulate".into()),
            ("scenario".into(), s.scenario.clone()),
            ("n".into(), scenario.n.to_string()),
            ("snr".into(), fmt_num(scenario.snr)),
            ("sigma_noise".into(), fmt_num(scenario.sigma_noise)),
            ("replicates".into(), s.n_reps.to_string()),
            ("excluded_nonconverged".into(), s.n_failed.to_string()),
            ("seed".into(), seed.to_string()),
            ("max_kkt_residual".into(), fmt_num(s.max_kkt_residual)),
        ],
    );
    report.table(
        "summary",
        vec![
            "method".into(),
            "tuning".into(),
            "sens".into(),
            "sens_se".into(),
            "spec".into(),
            "spec_se".into(),
            "me".into(),
            "me_se".into(),
            "l2_error".into(),
            "l2_error_se".into(),
            "group_recovery".into(),
        ],
        vec![vec![
            match method {
                Method::Les => "les".into(),
                Method::Lasso => "lasso".into(),
            },
            match tuning {
                TuningMethod::TuningSet => "tuning-set".into(),
                TuningMethod::Bic => "bic".into(),
            },
            fmt_num(s.sens.mean),
            fmt_num(s.sens.se),
            fmt_num(s.spec.mean),
            fmt_num(s.spec.se),
            fmt_num(s.model_error.mean),
            fmt_num(s.model_error.se),
            fmt_num(s.l2_error.mean),
            fmt_num(s.l2_error.se),
            fmt_num(s.group_recovery_rate),
        ]],
    );
    emit(cfg, &report)
}

fn run_df(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let lambda = cfg
        .parse_f64("lambda")?
        .ok_or_else(|| CliError::usage("missing required option --lambda"))?;
    let alpha = cfg
        .parse_f64("alpha")?
        .ok_or_else(|| CliError::usage("missing required option --alpha"))?;
    let weights = resolve_weights(cfg, data.design.partition())?;
    let config = PenaltyConfig::new(lambda, alpha, weights)?;
    let opts = cfg.solver_options()?;
    let seed = cfg.seed()?;
    let dfcfg = DfConfig {
        r: cfg.parse_usize("df-r")?.unwrap_or(5),
        rho: cfg.parse_f64("df-rho")?,
        seed,
    };
    let rho_used = dfcfg.rho.unwrap_or(0.05 * data.response.sd());

    let fitter = |d: &GroupedDesign, resp: &Response| -> les_core::Result<Vec<f64>> {
        let f = fit_les(d, resp, &config, &opts, None)?;
        Ok(d.matrix().matvec(f.beta.as_slice()))
    };
    let df = randomized_trace_df(fitter, &data.design, &data.response, &dfcfg)?;
    let base_fit = fit_les(&data.design, &data.response, &config, &opts, None)?;

    let mut report = Report::new();
    report.key_values(
        "degrees of freedom",
        vec![
            ("command".into(), "df".into()),
            ("lambda".into(), fmt_num(lambda)),
            ("alpha".into(), fmt_num(alpha)),
            ("df_hat".into(), fmt_num(df)),
            ("perturbations".into(), dfcfg.r.to_string()),
            ("rho".into(), fmt_num(rho_used)),
            ("seed".into(), seed.to_string()),
            (
                "active_variables".into(),
                base_fit.active_variables.len().to_string(),
            ),
        ],
    );
    emit(cfg, &report)
}

fn run_verify(cfg: &RunConfig) -> Result<(), CliError> {
    use rand::prelude::*;
    use rand_distr::StandardNormal;

    let seed = cfg.seed()?;
    let mut reports: Vec<OracleReport> = Vec::new();

    // brute-force agreement on tiny random problems
    {
        let mut rep = OracleReport {
            claim: "solver vs brute-force objective (10 tiny problems)".into(),
            pass: true,
            worst_margin: f64::INFINITY,
            details: Vec::new(),
        };
        for i in 0..10u64 {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(i));
            let sizes: &[usize] = if i % 2 == 0 { &[2] } else { &[2, 1] };
            let p: usize = sizes.iter().sum();
            let n = 20;
            let data: Vec<f64> = (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x = Mat::from_rows(n, p, &data);
            let y: Vec<f64> = (0..n)
                .map(|r| 1.3 * x.get(r, 0) + 0.5 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let part = GroupPartition::contiguous(sizes).map_err(CliError::from)?;
            let (d, r) = standardize(&x, &y, part)?;
            let alpha = if i % 3 == 0 { 0.5 } else { 2.0 };
            let cfg0 = PenaltyConfig::with_share_weights(0.0, alpha, d.partition())?;
            let lmax = lambda_max(&d, &r, alpha, cfg0.weights());
            let pcfg = cfg0.at_lambda(0.1 * lmax);
            let fit = fit_les(&d, &r, &pcfg, &SolverOptions::tight(), None)?;
            let ols = les_core::linalg::ols_solve(d.matrix(), r.values())?;
            let half = (1.5 * ols.iter().map(|v| v.abs()).fold(0.0, f64::max)).max(0.5);
            let oracle = brute_force_fit(&d, &r, &pcfg, half, if p == 2 { 301 } else { 61 })?;
            let oracle_obj = objective(&d, &r, &oracle, &pcfg)?;
            let margin = 1e-6 - (fit.objective - oracle_obj);
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
            }
            if margin < 0.0 {
                rep.pass = false;
            }
            rep.details
                .push(format!("instance {i}: objective gap {:.2e}", fit.objective - oracle_obj));
        }
        reports.push(rep);
    }

    // small-alpha LASSO limit on scenario-1-style data
    {
        let sc = build_scenario(1)?;
        let (x, y) = sample_dataset(&sc, seed)?;
        let (d, r) = standardize(&x, &y, sc.partition.clone())?;
        reports.push(check_prop1_limit(
            &d,
            &r,
            0.1,
            &[1e-1, 1e-2, 1e-3],
            1e-3,
            &SolverOptions::tight(),
        )?);
    }

    // orthonormal identities on three seeds
    for s in 0..3u64 {
        reports.push(check_orthonormal_identities(seed.wrapping_add(s))?);
    }

    // gradient finite differences on a random subproblem
    {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_add(97));
        let n = 30;
        let pk = 4;
        let data: Vec<f64> = (0..n * pk).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let a = Mat::from_rows(n, pk, &data);
        let c: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let sub = SubproblemData::new(a, c)?;
        let problem = SplitObjective::from_subproblem(&sub, 0.2, 1.5, 0.5);
        reports.push(check_gradient(&problem, 100, 1e-6, seed.wrapping_add(5), 1e-6));
    }

    // correlation bound on a scenario-2 fit
    {
        let sc = build_scenario(2)?;
        let (x, y) = sample_dataset(&sc, seed.wrapping_add(11))?;
        let (d, r) = standardize(&x, &y, sc.partition.clone())?;
        let cfg0 = PenaltyConfig::with_share_weights(0.0, 1.0, d.partition())?;
        let lmax = lambda_max(&d, &r, 1.0, cfg0.weights());
        let pcfg = cfg0.at_lambda(0.1 * lmax);
        let fit = fit_les(&d, &r, &pcfg, &SolverOptions::default(), None)?;
        reports.push(check_prop2_bound(&fit, &d, &r, &pcfg)?);
    }

    // lambda at/above lambda_max zeroes the fit
    {
        let mut rep = OracleReport {
            claim: "lambda >= lambda_max gives the zero fit (5 seeds)".into(),
            pass: true,
            worst_margin: f64::INFINITY,
            details: Vec::new(),
        };
        for s in 0..5u64 {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(200 + s));
            let n = 30;
            let p = 5;
            let data: Vec<f64> = (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x = Mat::from_rows(n, p, &data);
            let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let part = GroupPartition::contiguous(&[3, 2]).map_err(CliError::from)?;
            let (d, r) = standardize(&x, &y, part)?;
            let cfg0 = PenaltyConfig::with_share_weights(0.0, 1.0, d.partition())?;
            let lmax = lambda_max(&d, &r, 1.0, cfg0.weights());
            let fit = fit_les(&d, &r, &cfg0.at_lambda(1.01 * lmax), &SolverOptions::default(), None)?;
            let worst = fit
                .beta
                .as_slice()
                .iter()
                .map(|b| b.abs())
                .fold(0.0, f64::max);
            let margin = 1e-10 - worst;
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
            }
            if margin < 0.0 {
                rep.pass = false;
            }
            rep.details.push(format!("seed {s}: max |beta| = {worst:.2e}"));
        }
        reports.push(rep);
    }

    let mut report_out = Report::new();
    let mut all_pass = true;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            all_pass &= r.pass;
            vec![
                r.claim.clone(),
                if r.pass { "pass" } else { "FAIL" }.into(),
                fmt_num(r.worst_margin),
            ]
        })
        .collect();
    report_out.key_values(
        "verification",
        vec![
            ("command".into(), "verify".into()),
            ("seed".into(), seed.to_string()),
            ("oracles".into(), reports.len().to_string()),
            ("all_pass".into(), all_pass.to_string()),
        ],
    );
    report_out.table(
        "oracles",
        vec!["claim".into(), "status".into(), "worst_margin".into()],
        rows,
    );
    emit(cfg, &report_out)?;

    if !all_pass {
        for r in reports.iter().filter(|r| !r.pass) {
            eprintln!("failed oracle: {}", r.claim);
            for d in &r.details {
                eprintln!("  {d}");
            }
        }
        return Err(CliError::verification("oracle battery failed"));
    }
    Ok(())
}
