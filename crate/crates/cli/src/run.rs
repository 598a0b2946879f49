//! The three subcommands.
//!
//! Output layout under the output directory:
//! `run.json` (resolved model, validity report, per-time status), one `tNN/`
//! directory per measurement time, `shifts/` when requested, and for sweeps
//! `summary.csv`.

use std::path::{Path, PathBuf};

use cwlm_core::detector::ValidityReport;
use cwlm_core::distribution::{
    certainty_slope, conditional_slice, difference_and_certainty, difference_and_certainty_1d,
    joint_distribution, marginal, moments, ChiGrid, JointDistribution, LinearFit, Moments2D,
};
use cwlm_core::evolution::GeneratorParts;
use cwlm_core::qubit::{Axis, Ket, PostSelection};
use cwlm_core::scenario::ModelConfig;
use cwlm_core::shift::{mean_shift, shift_quasi_2d, shift_weights_1d, PolarizationPair, ShiftGrid};
use serde::Serialize;

use crate::config::{CertaintySpec, RunConfig, ShiftSpec, TimePoint, TimeUnit};
use crate::error::CliError;
use crate::output::{
    ensure_dir, fmt_num, fmt_opt, write_1d, write_certainty_1d, write_certainty_joint, write_joint,
    write_json, write_rows, write_text,
};
use crate::plot::{heatmap, lines, Series};

const DEFAULT_OUT: &str = "cwlm-out";

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub force: bool,
    pub plots: bool,
}

impl From<cwlm_core::Error> for CliError {
    fn from(e: cwlm_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

fn output_root(cfg: &RunConfig, opts: &Options) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn report(model: &ModelConfig) -> Result<ValidityReport, CliError> {
    model
        .validate()
        .map_err(|e| CliError::Validity(e.to_string()))
}

fn print_report(r: &ValidityReport) {
    println!(
        "{:<22} {:>16} {:>16} {:>16}  pass",
        "check", "lhs", "rhs", "rhs(a_VQ only)"
    );
    for c in &r.checks {
        println!(
            "{:<22} {:>16} {:>16} {:>16}  {}",
            c.name,
            fmt_num(c.lhs),
            fmt_num(c.rhs),
            fmt_num(c.rhs_direct_gain),
            if c.pass { "yes" } else { "NO" }
        );
    }
}

fn failure_list(r: &ValidityReport) -> String {
    r.failures()
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn validate(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let r = report(&cfg.model())?;
    print_report(&r);
    if let Some(dir) = &opts.out {
        ensure_dir(dir)?;
        write_json(&dir.join("validity.json"), &r)?;
    }
    if r.pass {
        println!("all {} checks pass", r.checks.len());
        Ok(())
    } else {
        Err(CliError::Validity(failure_list(&r)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeRecord {
    pub index: usize,
    /// Time in the configured unit.
    pub value: f64,
    pub t: f64,
    pub dir: String,
    pub ok: bool,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub post_probability: Option<f64>,
    pub mass: Option<f64>,
    pub moments: Option<Moments2D>,
    pub certainty_fit: Option<LinearFit>,
}

impl TimeRecord {
    fn new(tp: &TimePoint) -> Self {
        TimeRecord {
            index: tp.index,
            value: tp.value,
            t: tp.t,
            dir: format!("t{:02}", tp.index),
            ok: true,
            error: None,
            warnings: Vec::new(),
            post_probability: None,
            mass: None,
            moments: None,
            certainty_fit: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ShiftRecord {
    ok: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    description: Option<&'a str>,
    model: &'a ModelConfig,
    validity: &'a ValidityReport,
    forced: bool,
    prep: [f64; 3],
    frame_correction: bool,
    time_unit: TimeUnit,
    times: &'a [TimeRecord],
    shifts: Option<ShiftRecord>,
}

#[derive(Serialize)]
struct DistributionMetaOut<'a> {
    scenario: &'a str,
    t: f64,
    time_value: f64,
    time_unit: TimeUnit,
    prep: [f64; 3],
    post: Option<[f64; 3]>,
    frame_correction: bool,
    post_probability: f64,
    mass: f64,
    imag_residue: f64,
    edge_magnitude: f64,
    grid: ChiGrid,
    shape: [usize; 2],
    step: [f64; 2],
}

/// Everything computed for one measurement time.
struct TimeJob<'a> {
    cfg: &'a RunConfig,
    model: &'a ModelConfig,
    tp: TimePoint,
    dir: PathBuf,
    plots: bool,
    certainty: Option<&'a CertaintySpec>,
}

fn output_name(axis: usize) -> &'static str {
    if axis == 0 {
        "o1"
    } else {
        "o2"
    }
}

impl TimeJob<'_> {
    fn meta(&self, jd: &JointDistribution, grid: &ChiGrid) -> DistributionMetaOut<'_> {
        DistributionMetaOut {
            scenario: self.model.scenario.as_str(),
            t: self.tp.t,
            time_value: self.tp.value,
            time_unit: self.cfg.time_unit,
            prep: jd.meta.prep,
            post: jd.meta.post,
            frame_correction: self.cfg.frame_correction,
            post_probability: jd.meta.post_probability,
            mass: jd.mass,
            imag_residue: jd.imag_residue,
            edge_magnitude: jd.edge_magnitude,
            grid: *grid,
            shape: [jd.o1.len(), jd.o2.len()],
            step: [jd.step(0), jd.step(1)],
        }
    }

    fn run(&self, rec: &mut TimeRecord) -> Result<(), CliError> {
        let t = self.tp.t;
        let products = &self.cfg.products;
        let grid = self.cfg.chi_grid(self.model, t)?;
        let rho = self.cfg.prep_state()?;
        let post = self.cfg.post_selection(self.model, t)?;
        let jd = joint_distribution(self.model, &rho, &post, t, &grid)?;
        let m = moments(&jd);
        rec.post_probability = Some(jd.meta.post_probability);
        rec.mass = Some(jd.mass);
        rec.moments = Some(m);
        if jd.edge_magnitude > 1e-6 {
            rec.warnings.push(format!(
                "|C| = {:.2e} at the edge of the counting-field grid; increase chi_max or decrease o_max",
                jd.edge_magnitude
            ));
        }
        ensure_dir(&self.dir)?;

        if products.joint {
            write_joint(&self.dir.join("joint.csv"), &jd)?;
            write_json(&self.dir.join("joint.json"), &self.meta(&jd, &grid))?;
            if self.plots {
                let title = format!("P(O1, O2), T = {t:.4}");
                write_text(
                    &self.dir.join("joint.svg"),
                    &heatmap(&title, ("O1", "O2"), &jd.o1, &jd.o2, &jd.p, false),
                )?;
            }
        }
        if products.moments {
            write_json(&self.dir.join("moments.json"), &m)?;
        }
        if products.marginals {
            let margs = [marginal(&jd, 0), marginal(&jd, 1)];
            for (k, d) in margs.iter().enumerate() {
                write_1d(
                    &self.dir.join(format!("marginal_{}.csv", output_name(k))),
                    d,
                )?;
            }
            if self.plots {
                let series: Vec<Series> = margs
                    .iter()
                    .enumerate()
                    .map(|(k, d)| Series {
                        label: format!("P({})", output_name(k).to_uppercase()),
                        x: &d.o,
                        y: d.p.iter().map(|v| Some(*v)).collect(),
                    })
                    .collect();
                write_text(
                    &self.dir.join("marginals.svg"),
                    &lines("marginals", ("O", "P"), &series, true),
                )?;
            }
        }
        if let Some(spec) = &products.slices {
            let axis = spec.axis - 1;
            let mut kept = Vec::new();
            for (k, &y) in spec.y.iter().enumerate() {
                match conditional_slice(&jd, axis, y) {
                    Ok(s) => {
                        write_1d(&self.dir.join(format!("slice_{k:02}.csv")), &s.dist)?;
                        kept.push((k, s));
                    }
                    Err(e) => rec.warnings.push(format!("slice {k} (y = {y}): {e}")),
                }
            }
            #[derive(Serialize)]
            struct SliceMeta {
                file: String,
                conditioning: &'static str,
                free: &'static str,
                y: f64,
                row_mass: f64,
            }
            let meta: Vec<SliceMeta> = kept
                .iter()
                .map(|(k, s)| SliceMeta {
                    file: format!("slice_{k:02}.csv"),
                    conditioning: output_name(axis),
                    free: output_name(1 - axis),
                    y: s.y,
                    row_mass: s.row_mass,
                })
                .collect();
            write_json(&self.dir.join("slices.json"), &meta)?;
            if self.plots && !kept.is_empty() {
                let series: Vec<Series> = kept
                    .iter()
                    .map(|(_, s)| Series {
                        label: format!("{} = {}", output_name(axis).to_uppercase(), s.y),
                        x: &s.dist.o,
                        y: s.dist.p.iter().map(|v| Some(*v)).collect(),
                    })
                    .collect();
                let title = format!(
                    "P({} | {} = y)",
                    output_name(1 - axis).to_uppercase(),
                    output_name(axis).to_uppercase()
                );
                write_text(
                    &self.dir.join("slices.svg"),
                    &lines(&title, ("O", "P"), &series, true),
                )?;
            }
        }
        if let Some(spec) = self.certainty {
            rec.certainty_fit = self.certainty(spec, &grid, rec)?;
        }
        Ok(())
    }

    /// P+ and P- for post-selection on +n and -n, their slice differences and
    /// certainties, and the linear fit on the `fit_y` slice.
    fn certainty(
        &self,
        spec: &CertaintySpec,
        grid: &ChiGrid,
        rec: &mut TimeRecord,
    ) -> Result<Option<LinearFit>, CliError> {
        let t = self.tp.t;
        let n = spec.direction.unwrap_or(self.cfg.prep);
        let rho = self.cfg.prep_state()?;
        let mut dists = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let ket = Ket::from_bloch(n.map(|c| sign * c))
                .map_err(|e| CliError::Config(format!("certainty direction: {e}")))?;
            let post = self.cfg.corrected(PostSelection::pure(&ket), self.model, t);
            dists.push(joint_distribution(self.model, &rho, &post, t, grid)?);
        }
        let (plus, minus) = (&dists[0], &dists[1]);
        let axis = spec.axis - 1;

        let mut slices = Vec::new();
        for (k, &y) in spec.y.iter().enumerate() {
            match (
                conditional_slice(plus, axis, y),
                conditional_slice(minus, axis, y),
            ) {
                (Ok(sp), Ok(sm)) => {
                    let c = difference_and_certainty_1d(&sp.dist, &sm.dist)?;
                    write_certainty_1d(
                        &self.dir.join(format!("certainty_{k:02}.csv")),
                        &sp.dist.o,
                        &c,
                    )?;
                    slices.push((y, sp.dist.o, c));
                }
                (Err(e), _) | (_, Err(e)) => rec
                    .warnings
                    .push(format!("certainty slice {k} (y = {y}): {e}")),
            }
        }
        let fit = match (
            conditional_slice(plus, axis, spec.fit_y),
            conditional_slice(minus, axis, spec.fit_y),
        ) {
            (Ok(sp), Ok(sm)) => {
                let c = difference_and_certainty_1d(&sp.dist, &sm.dist)?;
                certainty_slope(&sp.dist.o, &c.certainty, spec.fit_o_max)
            }
            (Err(e), _) | (_, Err(e)) => {
                rec.warnings
                    .push(format!("certainty fit slice (y = {}): {e}", spec.fit_y));
                None
            }
        };
        if spec.joint {
            let c = difference_and_certainty(plus, minus)?;
            write_certainty_joint(
                &self.dir.join("certainty_joint.csv"),
                &plus.o1,
                &plus.o2,
                &c,
            )?;
            if self.plots {
                write_text(
                    &self.dir.join("difference_joint.svg"),
                    &heatmap(
                        "P+ - P-",
                        ("O1", "O2"),
                        &plus.o1,
                        &plus.o2,
                        &c.difference,
                        true,
                    ),
                )?;
            }
        }

        #[derive(Serialize)]
        struct CertaintyMeta<'a> {
            direction: [f64; 3],
            frame_correction: bool,
            conditioning: &'static str,
            free: &'static str,
            y: &'a [f64],
            post_probability: [f64; 2],
            mass: [f64; 2],
            fit_y: f64,
            fit_o_max: f64,
            fit: Option<LinearFit>,
        }
        write_json(
            &self.dir.join("certainty.json"),
            &CertaintyMeta {
                direction: n,
                frame_correction: self.cfg.frame_correction,
                conditioning: output_name(axis),
                free: output_name(1 - axis),
                y: &spec.y,
                post_probability: [plus.meta.post_probability, minus.meta.post_probability],
                mass: [plus.mass, minus.mass],
                fit_y: spec.fit_y,
                fit_o_max: spec.fit_o_max,
                fit,
            },
        )?;
        if self.plots && !slices.is_empty() {
            let label = |y: f64| format!("{} = {y}", output_name(axis).to_uppercase());
            let cert: Vec<Series> = slices
                .iter()
                .map(|(y, o, c)| Series {
                    label: label(*y),
                    x: o,
                    y: c.certainty.clone(),
                })
                .collect();
            let diff: Vec<Series> = slices
                .iter()
                .map(|(y, o, c)| Series {
                    label: label(*y),
                    x: o,
                    y: c.difference.iter().map(|v| Some(*v)).collect(),
                })
                .collect();
            write_text(
                &self.dir.join("certainty.svg"),
                &lines("certainty", ("O", "C"), &cert, true),
            )?;
            write_text(
                &self.dir.join("difference.svg"),
                &lines("P+ - P-", ("O", "dP"), &diff, true),
            )?;
        }
        Ok(fit)
    }
}

fn write_shifts(
    cfg: &RunConfig,
    spec: &ShiftSpec,
    dir: &Path,
    plots: bool,
) -> Result<(), CliError> {
    let p_i = cwlm_core::qubit::BlochVector::from_array(cfg.prep)?;
    let post = cwlm_core::qubit::build_postselection(&cfg.post)?;
    let pp = PolarizationPair::new(p_i, post.polarization())?;
    ensure_dir(dir)?;
    let axes = [(Axis::X, "x"), (Axis::Y, "y"), (Axis::Z, "z")];
    let mut weights = Vec::new();
    for (axis, name) in axes {
        weights.push((name, shift_weights_1d(&pp, axis)?));
    }
    write_rows(
        &dir.join("weights.csv"),
        "axis,shift,weight",
        9,
        |k, line| {
            let (name, w) = &weights[k / 3];
            let (s, v) = [(-1.0, w.minus), (0.0, w.zero), (1.0, w.plus)][k % 3];
            line.push_str(&format!("{name},{},{}", fmt_num(s), fmt_num(v)));
        },
    )?;

    let grid = ShiftGrid {
        half_extent: spec.half_extent,
        spacing: spec.spacing,
    };
    let sm = shift_quasi_2d(&pp, &grid, spec.xi, spec.regularizer)?;
    let n = sm.len();
    write_rows(
        &dir.join("measure_2d.csv"),
        "s_x,s_y,density",
        n * n,
        |k, line| {
            line.push_str(&format!(
                "{},{},{}",
                fmt_num(sm.s[k / n]),
                fmt_num(sm.s[k % n]),
                fmt_num(sm.values[k])
            ));
        },
    )?;
    #[derive(Serialize)]
    struct ShiftMeta {
        p_i: [f64; 3],
        p_f: [f64; 3],
        overlap: f64,
        mean_shift: [f64; 3],
        xi: f64,
        regularizer: cwlm_core::shift::Regularizer,
        grid: ShiftGrid,
        mass: f64,
        means: [f64; 2],
        imag_residue: f64,
    }
    write_json(
        &dir.join("shifts.json"),
        &ShiftMeta {
            p_i: pp.p_i.to_array(),
            p_f: pp.p_f.to_array(),
            overlap: pp.overlap()?,
            mean_shift: mean_shift(&pp)?,
            xi: sm.xi,
            regularizer: sm.regularizer,
            grid,
            mass: sm.mass,
            means: sm.means(),
            imag_residue: sm.imag_residue,
        },
    )?;
    if plots {
        write_text(
            &dir.join("measure_2d.svg"),
            &heatmap(
                "shift quasi-distribution",
                ("s_x", "s_y"),
                &sm.s,
                &sm.s,
                &sm.values,
                true,
            ),
        )?;
    }
    Ok(())
}

struct RunOutcome {
    root: PathBuf,
    records: Vec<TimeRecord>,
    failed: usize,
}

impl RunOutcome {
    fn into_result(self) -> Result<Vec<TimeRecord>, CliError> {
        if self.failed > 0 {
            Err(CliError::Numeric(format!(
                "{} product(s) failed; see {}",
                self.failed,
                self.root.join("run.json").display()
            )))
        } else {
            Ok(self.records)
        }
    }
}

/// Runs every measurement time. Per-time numeric failures are recorded and
/// counted, not raised, so the remaining times still run.
fn run_all(
    cfg: &RunConfig,
    opts: &Options,
    certainty: Option<&CertaintySpec>,
) -> Result<RunOutcome, CliError> {
    let model = cfg.model();
    let validity = report(&model)?;
    if !validity.pass {
        if opts.force {
            eprintln!(
                "warning: validity checks failed ({}); continuing because of --force",
                failure_list(&validity)
            );
        } else {
            print_report(&validity);
            return Err(CliError::Validity(failure_list(&validity)));
        }
    }
    GeneratorParts::new(&model).map_err(|e| CliError::Config(e.to_string()))?;
    let points = cfg.time_points(&model)?;
    let root = output_root(cfg, opts);
    ensure_dir(&root)?;

    let mut records = Vec::with_capacity(points.len());
    for tp in &points {
        let mut rec = TimeRecord::new(tp);
        let job = TimeJob {
            cfg,
            model: &model,
            tp: *tp,
            dir: root.join(&rec.dir),
            plots: opts.plots,
            certainty,
        };
        match job.run(&mut rec) {
            Ok(()) => {}
            Err(CliError::Numeric(msg)) => {
                rec.ok = false;
                rec.error = Some(msg);
            }
            Err(e) => return Err(e),
        }
        let status = match &rec.error {
            None => format!("mass {}", fmt_opt(rec.mass)),
            Some(e) => format!("error: {e}"),
        };
        println!(
            "[{}] T = {} ({}): {status}",
            rec.dir,
            fmt_num(tp.t),
            fmt_num(tp.value)
        );
        for w in &rec.warnings {
            println!("[{}] warning: {w}", rec.dir);
        }
        records.push(rec);
    }

    let shifts = cfg.products.shifts.as_ref().map(|spec| {
        match write_shifts(cfg, spec, &root.join("shifts"), opts.plots) {
            Ok(()) => Ok(ShiftRecord {
                ok: true,
                error: None,
            }),
            Err(CliError::Numeric(msg)) => {
                println!("[shifts] error: {msg}");
                Ok(ShiftRecord {
                    ok: false,
                    error: Some(msg),
                })
            }
            Err(e) => Err(e),
        }
    });
    let shifts = shifts.transpose()?;

    write_json(
        &root.join("run.json"),
        &RunRecord {
            description: cfg.description.as_deref(),
            model: &model,
            validity: &validity,
            forced: !validity.pass,
            prep: cfg.prep,
            frame_correction: cfg.frame_correction,
            time_unit: cfg.time_unit,
            times: &records,
            shifts: shifts.clone(),
        },
    )?;
    let failed =
        records.iter().filter(|r| !r.ok).count() + usize::from(shifts.is_some_and(|s| !s.ok));
    Ok(RunOutcome {
        root,
        records,
        failed,
    })
}

pub fn simulate(cfg: &RunConfig, opts: &Options) -> Result<Vec<TimeRecord>, CliError> {
    run_all(cfg, opts, cfg.products.certainty.as_ref())?.into_result()
}

const SUMMARY_HEADER: &str =
    "t,time_value,post_probability,mass,mean_o1,mean_o2,cov_11,cov_12,cov_22,beta,beta_residual,ok";

fn summary_line(r: &TimeRecord) -> String {
    let m = r.moments.as_ref();
    let f = r.certainty_fit.as_ref();
    [
        fmt_num(r.t),
        fmt_num(r.value),
        fmt_opt(r.post_probability),
        fmt_opt(r.mass),
        fmt_opt(m.map(|m| m.mean[0])),
        fmt_opt(m.map(|m| m.mean[1])),
        fmt_opt(m.map(|m| m.covariance[0][0])),
        fmt_opt(m.map(|m| m.covariance[0][1])),
        fmt_opt(m.map(|m| m.covariance[1][1])),
        fmt_opt(f.map(|f| f.beta)),
        fmt_opt(f.map(|f| f.residual)),
        (if r.ok { "1" } else { "0" }).to_string(),
    ]
    .join(",")
}

/// Per-time products as in `simulate` plus `summary.csv` with one row per time.
/// The certainty fit uses the configured certainty settings or the defaults.
pub fn sweep(cfg: &RunConfig, opts: &Options) -> Result<Vec<TimeRecord>, CliError> {
    let default_spec = CertaintySpec::default();
    let spec = cfg.products.certainty.as_ref().unwrap_or(&default_spec);
    let outcome = run_all(cfg, opts, Some(spec))?;
    let records = &outcome.records;
    write_rows(
        &outcome.root.join("summary.csv"),
        SUMMARY_HEADER,
        records.len(),
        |k, line| {
            line.push_str(&summary_line(&records[k]));
        },
    )?;
    outcome.into_result()
}
