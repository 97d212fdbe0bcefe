use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use anyhow::Result;
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use daha_core::asympt::{HarishMode, Numeric, NumericPoint, PRoute};
use daha_core::daharep::verify_daha_relations;
use daha_core::globalfn::{GlobalError, GlobalFn, TodaKind};
use daha_core::macpoly::{MacCalc, SAMPLE_SEED};
use daha_core::report::CheckReport;
use daha_core::rootdata::{build_root_datum, wt, Family, LatticeChoice, RootDatum, Wt};

use crate::config::{NumericCfg, RunConfig, Task};

/// Relative tolerance of the theta identities, which are evaluated from
/// rapidly convergent sums.
const THETA_TOL: f64 = 1e-10;

/// Largest `n` for which the exact polynomial route is used in the σ-limit.
const EXACT_ROUTE_MAX_N: u32 = 6;

#[derive(Debug, Serialize)]
pub struct Entry {
    pub identity_id: String,
    pub paper_anchor: &'static str,
    pub status: String,
    pub cases: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<(u32, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PolyOut {
    pub kind: &'static str,
    pub weight: Vec<i32>,
    pub text: String,
}

#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub run_id: String,
    pub config: RunConfig,
    pub seed: u64,
    pub entries: Vec<Entry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub polynomials: Vec<PolyOut>,
    pub summary: Summary,
}

enum Item {
    Check(CheckReport, Option<Vec<(u32, f64)>>),
    Skipped(String, String),
    Poly(PolyOut),
}

fn check(r: CheckReport) -> Item {
    Item::Check(r, None)
}

fn skipped(id: &str, why: impl Into<String>) -> Item {
    Item::Skipped(id.to_string(), why.into())
}

fn failed(id: &str, why: impl Into<String>) -> Item {
    let mut r = CheckReport::new(id);
    r.fail(why.into());
    check(r)
}

/// A check that may be unavailable for the root system or parameters.
fn global(id: &str, r: Result<CheckReport, GlobalError>) -> Item {
    match r {
        Ok(r) => check(r),
        Err(e @ (GlobalError::Unsupported(_) | GlobalError::NoExpansion(_))) => skipped(id, format!("unsupported: {e}")),
        Err(e) => failed(id, e.to_string()),
    }
}

fn globals(id: &str, r: Result<Vec<CheckReport>, GlobalError>) -> Vec<Item> {
    match r {
        Ok(rs) => rs.into_iter().map(check).collect(),
        Err(e) => vec![global(id, Err(e))],
    }
}

/// Equation or theorem label for each identity id.
pub fn anchor(id: &str) -> &'static str {
    match id {
        "quadratic" | "bracket_inverse" | "zero_hecke_idempotent" | "braid" | "braid_t0" | "pi_conjugation"
        | "cross_iii" | "cross_iv" | "pi_x" | "y_commute" | "y_inverse" => "double",
        "tixi" => "tixi",
        "tytl" => "TYTL",
        "tiyi" => "tiyi",
        "y_on_one" => "YONE",
        "oracle_equivalence" | "y_eigen" => "macd",
        "evaluation_E" => "ebebs",
        "evaluation_P" => "pebebs",
        "duality_E" => "ebdual",
        "duality_P" => "pebdual",
        "l_eigen" => "Lf",
        "weyl_character" => "maqsum",
        "t_inversion" => "eplimbar",
        "norm_tq" => "normppols",
        "norm_bar" => "normppolsbar",
        "bar_routes" | "positivity" => "BAREP",
        "consterm" => "consterm",
        "constermbar" => "constermbar",
        "mehtamu" => "mehtamu",
        "mehtamul" => "mehtamul",
        "pbgauss" => "pbgauss",
        "pbgaussl" => "pbgaussl",
        "limpct" => "limpct",
        "whitpsi" => "whitpsi",
        "psi_symmetry" => "GLOBSPH",
        "star_correspondence" => "pexla1",
        "shintq" => "shintq",
        "shintqg" => "shintqg",
        "hatmuxsym" => "hatmuxsym",
        "LfLaWa1" | "LfLaW" => "LfLaW",
        "LfLaduala1" | "LfLadual" => "LfLadual",
        "shifta1" | "shifta1_literal" | "raisingbar1" => "qtodaa1",
        "mehjackxxx" => "mehjackxxx",
        "growthexwlaext" => "growthexwlaext",
        "periwit" => "whitgen",
        "sigma_limit" => "LEMCINFTY",
        "growthex" => "QHARISH",
        "growthexw" => "growthexw",
        "growthexwla" => "growthexwla",
        "bfunceq" => "bfunceq",
        "theta_shift" => "gauser",
        "polynomial" => "macd",
        _ => "unmapped",
    }
}

fn cube(rank: usize, lo: i32, hi: i32) -> Vec<Wt> {
    let mut out: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..rank {
        out = out.into_iter().flat_map(|v| (lo..=hi).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out.iter().map(|v| wt(v)).collect()
}

type Job<'s> = Box<dyn Fn() -> Vec<Item> + Send + Sync + 's>;

struct Ctx<'a> {
    rd: &'a RootDatum,
    mc: &'a MacCalc<'a>,
    g: &'a GlobalFn<'a, 'a>,
    cfg: &'a RunConfig,
    cutoff: i32,
    all: Vec<Wt>,
    anti: Vec<Wt>,
}

impl<'a> Ctx<'a> {
    fn jobs(&'a self, task: Task) -> Vec<Job<'a>> {
        let (rd, mc, g, cutoff) = (self.rd, self.mc, self.g, self.cutoff);
        let mut jobs: Vec<Job<'a>> = vec![];
        match task {
            Task::VerifyAll => {
                for t in [
                    Task::VerifyRelations,
                    Task::VerifyMacdonald,
                    Task::VerifyGauss,
                    Task::VerifyShintani,
                    Task::VerifyToda,
                    Task::VerifyJackson,
                ] {
                    jobs.extend(self.jobs(t));
                }
                if self.cfg.numeric.is_some() {
                    jobs.extend(self.jobs(Task::VerifyAsymptotics));
                }
            }
            Task::ComputeE => {
                for b in &self.all {
                    jobs.push(Box::new(move || vec![poly("E", rd, b, mc.nonsym_e_intertwiner(b).map(|p| p.to_text(rd)))]));
                }
            }
            Task::ComputeP => {
                for b in &self.anti {
                    jobs.push(Box::new(move || vec![poly("P", rd, b, mc.sym_p(b).map(|p| p.to_text(rd)))]));
                }
            }
            Task::ComputeBar => {
                for b in &self.all {
                    jobs.push(Box::new(move || vec![poly("barE", rd, b, mc.bar_e_chain(b).map(|p| p.to_text(rd)))]));
                }
                for b in &self.anti {
                    jobs.push(Box::new(move || vec![poly("barP", rd, b, mc.bar_p(b).map(|p| p.to_text(rd)))]));
                }
            }
            Task::VerifyRelations => {
                let degree = self.cfg.sweep_box;
                jobs.push(Box::new(move || {
                    verify_daha_relations(rd, degree)
                        .into_iter()
                        .map(|r| {
                            let mut c = CheckReport::new(r.relation_id.clone());
                            c.cases = r.cases;
                            if !r.passed() {
                                c.fail(format!(
                                    "{} at monomial {:?}: {}",
                                    r.status,
                                    r.witness_monomial.unwrap_or_default(),
                                    r.mismatch_polynomial.unwrap_or_default()
                                ));
                            }
                            check(c)
                        })
                        .collect()
                }));
            }
            Task::VerifyMacdonald => {
                for b in &self.all {
                    jobs.push(Box::new(move || {
                        vec![check(mc.oracle_check(b)), check(mc.evaluation_check_e(b)), check(mc.y_eigen_check(b))]
                    }));
                }
                for b in &self.anti {
                    jobs.push(Box::new(move || {
                        vec![
                            check(mc.evaluation_check_p(b)),
                            check(mc.l_eigen_check(b)),
                            check(mc.bar_routes_check(b).0),
                            check(mc.positivity_check(b)),
                            check(mc.weyl_character_check(b)),
                            check(mc.t_inversion_check(b)),
                        ]
                    }));
                }
                let (all, anti) = (&self.all, &self.anti);
                jobs.push(Box::new(move || vec![check(mc.duality_check_e(all))]));
                jobs.push(Box::new(move || vec![check(mc.duality_check_p(anti))]));
                jobs.push(Box::new(move || vec![check(mc.norm_check_tq(anti))]));
                jobs.push(Box::new(move || vec![check(mc.norm_check_bar(anti, cutoff))]));
            }
            Task::VerifyGauss => {
                for formal in [true, false] {
                    jobs.push(Box::new(move || g.mehta_macdonald_check(cutoff, formal).into_iter().map(check).collect()));
                }
                for (i, b) in self.anti.iter().enumerate() {
                    for c in &self.anti[i..] {
                        for formal in [true, false] {
                            let id = if formal { "pbgauss" } else { "pbgaussl" };
                            jobs.push(Box::new(move || vec![global(id, g.gauss_integral_p(b, c, cutoff, formal))]));
                        }
                    }
                }
                jobs.push(Box::new(move || g.whittaker_limit_check(cutoff).into_iter().map(check).collect()));
                jobs.push(Box::new(move || vec![check(g.psi_symmetry_check(cutoff))]));
                jobs.push(Box::new(move || vec![check(g.star_correspondence_check(cutoff))]));
            }
            Task::VerifyShintani => {
                for c in &self.anti {
                    jobs.push(Box::new(move || globals("shintqg", g.shintani_check(c, cutoff))));
                    jobs.push(Box::new(move || vec![global("hatmuxsym", g.spherical_shintani_check(c, cutoff))]));
                }
            }
            Task::VerifyToda => {
                let rank_one = rd.family == Family::A && rd.rank == 1;
                for (kind, id) in [(TodaKind::Rank1XSide, "LfLaWa1"), (TodaKind::Rank1LambdaSide, "LfLaduala1")] {
                    if rank_one {
                        jobs.push(Box::new(move || vec![global(id, g.toda_eigencheck(kind, &rd.omega(0), cutoff))]));
                    } else {
                        jobs.push(Box::new(move || vec![skipped(id, "unsupported: rank-one identity")]));
                    }
                }
                if rank_one {
                    let n_max = 2 * self.cfg.sweep_box.max(1);
                    jobs.push(Box::new(move || {
                        globals("shifta1", g.rank1_shift_raising_check(n_max))
                            .into_iter()
                            .map(|item| match item {
                                // The printed coefficient is kept for reference only.
                                Item::Check(r, _) if r.id == "shifta1_literal" => {
                                    let outcome = match &r.detail {
                                        Some(d) if !r.passed => format!("fails ({d})"),
                                        _ => "holds".to_string(),
                                    };
                                    skipped(&r.id, format!("reference only: printed coefficient {outcome}"))
                                }
                                other => other,
                            })
                            .collect()
                    }));
                }
                for (kind, id) in [(TodaKind::MinusculeXSide, "LfLaW"), (TodaKind::LambdaSideGeneral, "LfLadual")] {
                    if rd.minuscule.is_empty() {
                        jobs.push(Box::new(move || vec![skipped(id, "unsupported: no minuscule weight")]));
                    }
                    for &r in &rd.minuscule {
                        jobs.push(Box::new(move || vec![global(id, g.toda_eigencheck(kind, &rd.omega(r), cutoff))]));
                    }
                }
            }
            Task::VerifyJackson => {
                jobs.push(Box::new(move || vec![global("mehjackxxx", g.jackson_special_check(cutoff))]));
                jobs.push(Box::new(move || vec![global("growthexwlaext", g.q_exponential_limit_check(&rd.rho(), cutoff))]));
                for c in &self.anti {
                    jobs.push(Box::new(move || vec![check(g.periodicity_check(c, cutoff))]));
                }
            }
            Task::VerifyAsymptotics => {
                if let Some(n) = &self.cfg.numeric {
                    jobs.extend(asymptotic_jobs(rd, mc, n));
                }
            }
        }
        jobs
    }
}

fn poly(kind: &'static str, rd: &RootDatum, b: &Wt, r: Result<String, daha_core::macpoly::MacError>) -> Item {
    match r {
        Ok(text) => Item::Poly(PolyOut { kind, weight: b[..rd.rank].to_vec(), text }),
        Err(e) => skipped("polynomial", format!("unsupported: {kind} {:?}: {e}", &b[..rd.rank])),
    }
}

fn complex(v: &[[f64; 2]]) -> Vec<C> {
    v.iter().map(|z| C::new(z[0], z[1])).collect()
}

fn asymptotic_jobs<'a>(rd: &'a RootDatum, mc: &'a MacCalc<'a>, n: &'a NumericCfg) -> Vec<Job<'a>> {
    let k = [C::new(n.k[0], 0.0), C::new(*n.k.last().unwrap(), 0.0)];
    let pt = NumericPoint { q: n.q, k, x: complex(&n.x), lambda: complex(&n.lambda) };
    let mut jobs: Vec<Job<'a>> = vec![];
    let pt1 = pt.clone();
    jobs.push(Box::new(move || {
        let nu = Numeric::new(rd);
        let rank_one = rd.family == Family::A && rd.rank == 1;
        let route = if rank_one {
            PRoute::Rogers
        } else if n.k.iter().all(|&k| k == 0.0) {
            PRoute::OrbitSum
        } else if n.k.iter().all(|&k| k == 1.0) {
            PRoute::WeylCharacter
        } else if n.n_max <= EXACT_ROUTE_MAX_N {
            PRoute::Exact
        } else {
            return vec![skipped(
                "sigma_limit",
                format!("unsupported: numeric P beyond n = {EXACT_ROUTE_MAX_N} needs k = 0 or k = 1 in rank > 1"),
            )];
        };
        match nu.sigma_limit_check(Some(mc), route, &pt1, &rd.rho(), n.n_max, n.precision) {
            Ok(run) => vec![Item::Check(run.report, Some(run.residuals))],
            Err(e) => vec![failed("sigma_limit", e.to_string())],
        }
    }));
    for (mode, id, dir) in [
        (HarishMode::SphericalX, "growthex", 1.0),
        (HarishMode::WhittakerX, "growthexw", -1.0),
        (HarishMode::WhittakerLambda, "growthexwla", 1.0),
    ] {
        let pt = pt.clone();
        jobs.push(Box::new(move || {
            if !(rd.family == Family::A && rd.rank == 1) {
                return vec![skipped(id, "unsupported: the series route is rank one")];
            }
            if pt.lambda.is_empty() {
                return vec![skipped(id, "numeric.lambda not given")];
            }
            match Numeric::new(rd).harish_chandra_limit_check(mode, &pt, dir, n.n_max, n.precision) {
                Ok(run) => vec![Item::Check(run.report, Some(run.residuals))],
                Err(e) => vec![failed(id, e.to_string())],
            }
        }));
    }
    let pt2 = pt.clone();
    jobs.push(Box::new(move || {
        let nu = Numeric::new(rd);
        let mut eq = CheckReport::new("bfunceq");
        match nu.theta_functional_equation(C::new(n.u, 0.0), &pt2.x) {
            Ok((l, r)) => {
                let gap = (l - r).norm() / r.norm().max(1.0);
                eq.record(gap < THETA_TOL, || format!("relative gap {gap:.3e}"));
            }
            Err(e) => eq.fail(e.to_string()),
        }
        let mut shift = CheckReport::new("theta_shift");
        for i in 0..rd.rank {
            let b = match rd.lattice {
                LatticeChoice::P => rd.omega(i),
                LatticeChoice::Q => rd.alpha(i),
            };
            match nu.theta_shift_residual(n.q, &pt2.x, &b) {
                Ok(d) => shift.record(d < THETA_TOL, || format!("shift by basis vector {i}: {d:.3e}")),
                Err(e) => shift.fail(e.to_string()),
            }
        }
        vec![check(eq), check(shift)]
    }));
    jobs
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let rs = &cfg.root_system;
    let rd = build_root_datum(rs.family, rs.rank, rs.lattice)?;
    let mc = MacCalc::new(&rd);
    let g = GlobalFn::new(&mc);
    let cutoff = cfg.cutoff.unwrap_or_else(|| g.q_order(4));
    let m = cfg.sweep_box;
    let keep = |v: Vec<Wt>| v.into_iter().filter(|b| rd.in_lattice_b(b)).collect::<Vec<_>>();
    let ctx = Ctx { rd: &rd, mc: &mc, g: &g, cfg, cutoff, all: keep(cube(rd.rank, -m, m)), anti: keep(cube(rd.rank, -m, 0)) };
    let jobs = ctx.jobs(cfg.task);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.parallelism {
        pool = pool.num_threads(n);
    }
    let results: Vec<(Vec<Item>, f64)> = pool.build()?.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t = Instant::now();
                let items = catch_unwind(AssertUnwindSafe(job))
                    .unwrap_or_else(|p| vec![failed("internal", format!("panic: {}", panic_text(p)))]);
                (items, t.elapsed().as_secs_f64())
            })
            .collect()
    });

    // Merge by identity id in job order, so the result does not depend on scheduling.
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut polynomials = vec![];
    for (items, secs) in results {
        for item in items {
            let (id, status, cases, mismatch, residuals) = match item {
                Item::Poly(p) => {
                    polynomials.push(p);
                    continue;
                }
                Item::Check(r, res) => {
                    let status = if r.passed { "pass" } else { "fail" };
                    (r.id, status.to_string(), r.cases, r.detail, res)
                }
                Item::Skipped(id, why) => (id, format!("skipped: {why}"), 0, None, None),
            };
            let e = entries.entry(id.clone()).or_insert_with(|| Entry {
                paper_anchor: anchor(&id),
                identity_id: id,
                status: status.clone(),
                cases: 0,
                first_mismatch: None,
                residuals: None,
                wall_time: cfg.record_timing.then_some(0.0),
            });
            e.cases += cases;
            if let Some(w) = e.wall_time.as_mut() {
                *w += secs;
            }
            let rank = |s: &str| match s {
                "fail" => 2,
                "pass" => 1,
                _ => 0,
            };
            if rank(&status) > rank(&e.status) {
                e.status = status;
            }
            if e.first_mismatch.is_none() {
                e.first_mismatch = mismatch;
            }
            if e.residuals.is_none() {
                e.residuals = residuals;
            }
        }
    }
    let entries: Vec<Entry> = entries.into_values().collect();
    let mut summary = Summary::default();
    for e in &entries {
        match e.status.as_str() {
            "pass" => summary.passed += 1,
            "fail" => summary.failed += 1,
            _ => summary.skipped += 1,
        }
    }
    let mut h = std::collections::hash_map::DefaultHasher::new();
    serde_json::to_string(cfg)?.hash(&mut h);
    Ok(Report {
        run_id: format!("{:016x}", h.finish()),
        config: cfg.clone(),
        seed: SAMPLE_SEED,
        entries,
        polynomials,
        summary,
    })
}
