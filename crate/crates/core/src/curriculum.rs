//! Curriculum adaptation schedule over domains ordered by darkness.
//!
//! Each step adapts the model from domain `z-1` to domain `z`:
//!
//! 1. the current model predicts soft tensors for the unlabeled real images of `z-1`;
//! 2. those predictions become pseudo-labels, refined with daytime guidance when `z-1 > 1`;
//! 3. a training manifest joins the labeled synthetic images of `z` (weight 1) with the
//!    pseudo-labeled real images of `z-1` (weight `mu`);
//! 4. the trainer command produces the next model.
//!
//! Inference and training are external commands. Templates are run through `sh -c` after
//! substituting `{manifest}`, `{outdir}`, `{model_in}` and `{model_out}` with shell-quoted
//! paths. The inference command must write `<outdir>/<id>.sftp` for every record of the
//! manifest it is given. Both commands inherit the environment, plus:
//!
//! | variable                 | value                               |
//! |--------------------------|-------------------------------------|
//! | `DARKSEG_STEP`           | 1-based step number                 |
//! | `DARKSEG_DOMAIN`         | name of the step's target domain    |
//! | `DARKSEG_SOURCE_DOMAIN`  | name of the pseudo-label domain     |
//! | `DARKSEG_ROLE`           | `inference`, `day_inference`, `trainer` |
//! | `DARKSEG_ITERATIONS`     | iteration budget from the config    |
//! | `DARKSEG_MU`             | pseudo-label loss weight            |

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MatchingConfig, ToolConfig};
use crate::correspondence::{match_nearest, smooth_fixes, CorrespondenceTable, GpsFix};
use crate::error::{Error, Result};
use crate::io::{read_rgb_image, read_soft_tensor, relative_to, write_label_png, Manifest, ManifestRecord, Origin};
use crate::refine::{refine_guided, BilateralParams, FusionParams};
use crate::types::{ClassSet, ClassSetConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Position in the darkness order, starting at 1 for daytime.
    pub index: usize,
    pub name: String,
    /// Labeled training images of this domain. Domain 1 holds real labels and is not
    /// consumed by any step; later domains hold synthetic (stylized) labels.
    #[serde(default)]
    pub labeled_synthetic: Option<PathBuf>,
    pub unlabeled_real: PathBuf,
}

fn default_mu() -> f64 {
    1.0
}

fn default_iterations() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    /// Loss weight of pseudo-labeled records.
    #[serde(default = "default_mu")]
    pub mu: f64,
    pub trainer_command: String,
    pub inference_command: String,
    /// Passed to the commands as `DARKSEG_ITERATIONS`; not interpreted here.
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    pub work_dir: PathBuf,
    /// Model adapted to domain 1, the input of the first step.
    pub initial_model: PathBuf,
    /// Steps abort when fewer than this fraction of images find a daytime counterpart.
    #[serde(default)]
    pub min_match_coverage: f64,
    /// Re-run daytime inference with each step's input model instead of once with the
    /// initial model.
    #[serde(default)]
    pub regenerate_day_pseudo: bool,
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.min_match_coverage) {
            return Err(Error::InvalidParameter(format!(
                "min_match_coverage must lie in [0, 1], got {}",
                self.min_match_coverage
            )));
        }
        require_placeholders("inference_command", &self.inference_command, &["{manifest}"], &["{outdir}"])?;
        require_placeholders(
            "trainer_command",
            &self.trainer_command,
            &["{manifest}"],
            &["{outdir}", "{model_out}"],
        )
    }
}

fn require_placeholders(what: &str, template: &str, all: &[&str], any: &[&str]) -> Result<()> {
    for p in all {
        if !template.contains(p) {
            return Err(Error::Plan(format!("{what} lacks the {p} placeholder")));
        }
    }
    if !any.iter().any(|p| template.contains(p)) {
        return Err(Error::Plan(format!("{what} needs one of {}", any.join(", "))));
    }
    Ok(())
}

/// A curriculum config file: the domain sequence, the step settings, and optionally the
/// class set and refinement parameters. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    pub step: StepConfig,
    pub domains: Vec<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassSetConfig>,
    #[serde(default)]
    pub bilateral: BilateralParams,
    #[serde(default)]
    pub fusion: FusionParams,
    #[serde(default)]
    pub matching: MatchingConfig,
}

impl CurriculumConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: CurriculumConfig = toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut cfg.step.work_dir);
        abs(&mut cfg.step.initial_model);
        for d in &mut cfg.domains {
            abs(&mut d.unlabeled_real);
            if let Some(p) = &mut d.labeled_synthetic {
                abs(p);
            }
        }
        cfg.tool().validate()?;
        cfg.step.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn tool(&self) -> ToolConfig {
        ToolConfig {
            classes: self.classes.clone(),
            bilateral: self.bilateral,
            fusion: self.fusion,
            matching: self.matching.clone(),
            ..ToolConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedStep {
    /// 1-based.
    pub step: usize,
    /// Domain whose real images are pseudo-labeled (`z-1`).
    pub source: DomainSpec,
    /// Domain the step adapts to (`z`).
    pub target: DomainSpec,
    /// Daytime domain, present exactly when the step applies guided refinement.
    pub guidance: Option<DomainSpec>,
    pub model_in: PathBuf,
    pub model_out: PathBuf,
    pub step_dir: PathBuf,
}

impl PlannedStep {
    pub fn guided(&self) -> bool {
        self.guidance.is_some()
    }

    pub fn inference_dir(&self) -> PathBuf {
        self.step_dir.join("inference")
    }

    pub fn pseudo_dir(&self) -> PathBuf {
        self.step_dir.join("pseudo")
    }

    pub fn pseudo_manifest(&self) -> PathBuf {
        self.step_dir.join("pseudo.jsonl")
    }

    pub fn train_manifest(&self) -> PathBuf {
        self.step_dir.join("train.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.step_dir.join("report.json")
    }
}

/// Marker written next to a training manifest once the trainer has consumed it.
pub fn consumed_marker(manifest: &Path) -> PathBuf {
    let mut s = manifest.as_os_str().to_owned();
    s.push(".consumed");
    PathBuf::from(s)
}

/// Orders the steps of the schedule: one per transition `z-1 -> z`, guided when `z-1 > 1`.
pub fn plan(domains: &[DomainSpec], cfg: &StepConfig) -> Result<Vec<PlannedStep>> {
    cfg.validate()?;
    if domains.len() < 2 {
        return Err(Error::Plan(format!("need at least 2 domains, got {}", domains.len())));
    }
    let mut sorted = domains.to_vec();
    sorted.sort_by_key(|d| d.index);
    for (k, d) in sorted.iter().enumerate() {
        if d.index != k + 1 {
            return Err(Error::Plan(format!(
                "domain indices must be 1..={} without gaps or repeats, found {} at position {}",
                sorted.len(),
                d.index,
                k + 1
            )));
        }
    }
    let mut names = HashSet::new();
    for d in &sorted {
        if !names.insert(d.name.as_str()) {
            return Err(Error::Plan(format!("duplicate domain name {:?}", d.name)));
        }
    }
    let require = |what: String, p: &Path| -> Result<()> {
        if p.is_file() {
            Ok(())
        } else {
            Err(Error::Plan(format!("{what} manifest not found: {}", p.display())))
        }
    };

    let mut steps = Vec::new();
    for z in 2..=sorted.len() {
        let (source, target) = (&sorted[z - 2], &sorted[z - 1]);
        let synthetic = target
            .labeled_synthetic
            .as_ref()
            .ok_or_else(|| Error::Plan(format!("domain {:?} has no labeled_synthetic manifest", target.name)))?;
        require(format!("labeled_synthetic of {:?}", target.name), synthetic)?;
        require(format!("unlabeled_real of {:?}", source.name), &source.unlabeled_real)?;
        let guidance = (source.index > 1).then(|| sorted[0].clone());
        if let Some(day) = &guidance {
            require(format!("unlabeled_real of {:?}", day.name), &day.unlabeled_real)?;
        }
        let step = z - 1;
        let step_dir = cfg.work_dir.join(format!("step{step}"));
        let model_in = if step == 1 {
            cfg.initial_model.clone()
        } else {
            cfg.work_dir.join(format!("step{}", step - 1)).join("model")
        };
        steps.push(PlannedStep {
            step,
            source: source.clone(),
            target: target.clone(),
            guidance,
            model_in,
            model_out: step_dir.join("model"),
            step_dir,
        });
    }
    Ok(steps)
}

/// Joins labeled synthetic records (weight 1) and pseudo-labeled records (weight `mu`),
/// synthetic first, each in manifest order. Record paths are rebased onto `base_dir`.
pub fn emit_manifest(synthetic: &Manifest, pseudo: &Manifest, mu: f64, base_dir: &Path) -> Result<Manifest> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
    }
    let mut records = Vec::with_capacity(synthetic.records.len() + pseudo.records.len());
    let mut labels = HashSet::new();
    let mut ids = HashSet::new();
    for (m, weight, origin) in [(synthetic, 1.0, Origin::LabeledSynthetic), (pseudo, mu, Origin::PseudoReal)] {
        for r in &m.records {
            let label = r
                .label_path
                .as_ref()
                .ok_or_else(|| Error::Plan(format!("record {:?} has no label_path", r.id)))?;
            let label = m.resolve(label);
            if !labels.insert(label.clone()) {
                return Err(Error::Plan(format!("label path {} appears twice", label.display())));
            }
            if !ids.insert(r.id.clone()) {
                return Err(Error::Plan(format!("record id {:?} appears in both manifests", r.id)));
            }
            let rebase = |p: &Path| -> Result<PathBuf> {
                let full = m.resolve(p);
                if !full.exists() {
                    return Err(Error::MissingFile(full));
                }
                Ok(relative_to(&full, base_dir))
            };
            let mut out = r.clone();
            out.image_path = rebase(&r.image_path)?;
            out.label_path = Some(rebase(&label)?);
            out.invalid_mask_path = r.invalid_mask_path.as_deref().map(rebase).transpose()?;
            out.loss_weight = Some(weight);
            out.origin = Some(origin);
            records.push(out);
        }
    }
    Manifest::new(base_dir, records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub role: String,
    pub command: String,
    pub executed: bool,
    /// Exit code; `None` when not executed or killed by a signal.
    pub status: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub source_domain: String,
    pub target_domain: String,
    pub guided: bool,
    pub dry_run: bool,
    pub mu: f64,
    pub images_processed: usize,
    pub images_refined: usize,
    pub pixels_refined: u64,
    pub unmatched_correspondences: usize,
    pub match_coverage: Option<f64>,
    pub synthetic_records: usize,
    pub pseudo_records: usize,
    pub model_in: PathBuf,
    pub model_out: PathBuf,
    pub train_manifest: PathBuf,
    pub pseudo_dir: PathBuf,
    pub commands: Vec<CommandRecord>,
}

/// Everything a step needs beyond its plan entry.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub cfg: StepConfig,
    pub classes: ClassSet,
    pub bilateral: BilateralParams,
    pub fusion: FusionParams,
    pub matching: MatchingConfig,
}

impl StepContext {
    pub fn from_config(cfg: &CurriculumConfig) -> Result<Self> {
        let tool = cfg.tool();
        Ok(Self {
            cfg: cfg.step.clone(),
            classes: tool.class_set()?,
            bilateral: cfg.bilateral,
            fusion: cfg.fusion,
            matching: cfg.matching.clone(),
        })
    }

    fn day_dir(&self, step: &PlannedStep) -> PathBuf {
        if self.cfg.regenerate_day_pseudo {
            step.step_dir.join("day")
        } else {
            self.cfg.work_dir.join("day")
        }
    }

    fn day_model(&self, step: &PlannedStep) -> PathBuf {
        if self.cfg.regenerate_day_pseudo {
            step.model_in.clone()
        } else {
            self.cfg.initial_model.clone()
        }
    }
}

struct Invocation<'a> {
    role: &'a str,
    template: &'a str,
    manifest: &'a Path,
    outdir: &'a Path,
    model_in: &'a Path,
    model_out: &'a Path,
}

impl Invocation<'_> {
    fn render(&self) -> String {
        self.template
            .replace("{manifest}", &shell_quote(self.manifest))
            .replace("{outdir}", &shell_quote(self.outdir))
            .replace("{model_in}", &shell_quote(self.model_in))
            .replace("{model_out}", &shell_quote(self.model_out))
    }
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.to_string_lossy().replace('\'', r"'\''"))
}

const DIAGNOSTIC_TAIL: usize = 4096;

fn tail(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    let mut start = s.len().saturating_sub(DIAGNOSTIC_TAIL);
    while !s.is_char_boundary(start) {
        start += 1;
    }
    s[start..].trim_end().to_string()
}

fn execute(inv: &Invocation, step: &PlannedStep, ctx: &StepContext, record: &mut Vec<CommandRecord>) -> Result<()> {
    let command = inv.render();
    let output = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .env("DARKSEG_STEP", step.step.to_string())
        .env("DARKSEG_DOMAIN", &step.target.name)
        .env("DARKSEG_SOURCE_DOMAIN", &step.source.name)
        .env("DARKSEG_ROLE", inv.role)
        .env("DARKSEG_ITERATIONS", ctx.cfg.iterations.to_string())
        .env("DARKSEG_MU", ctx.cfg.mu.to_string())
        .output()
        .map_err(|e| Error::io(format!("spawn {} command", inv.role), e))?;
    record.push(CommandRecord {
        role: inv.role.to_string(),
        command: command.clone(),
        executed: true,
        status: output.status.code(),
    });
    if output.status.success() {
        return Ok(());
    }
    let mut diagnostics = String::new();
    let (out, err) = (tail(&output.stdout), tail(&output.stderr));
    if !err.is_empty() {
        diagnostics.push_str("stderr:\n");
        diagnostics.push_str(&err);
    }
    if !out.is_empty() {
        if !diagnostics.is_empty() {
            diagnostics.push('\n');
        }
        diagnostics.push_str("stdout:\n");
        diagnostics.push_str(&out);
    }
    Err(Error::Command {
        command,
        status: output.status.to_string(),
        diagnostics,
    })
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(format!("create {}", p.display()), e))
}

fn smoothed_fixes(m: &Manifest, window: usize) -> Result<Vec<(String, GpsFix)>> {
    let fixes = m.gps_fixes()?;
    let track: Vec<GpsFix> = fixes.iter().map(|(_, f)| *f).collect();
    let smooth = smooth_fixes(&track, window);
    Ok(fixes.into_iter().zip(smooth).map(|((id, _), f)| (id, f)).collect())
}

fn correspondences(source: &Manifest, day: &Manifest, matching: &MatchingConfig) -> Result<CorrespondenceTable> {
    let q = smoothed_fixes(source, matching.smooth_window)?;
    let r = smoothed_fixes(day, matching.smooth_window)?;
    match_nearest(&q, &r, matching.max_dist_m)
}

/// Runs one step, or with `dry_run` validates its inputs and reports what would run
/// without creating, writing or executing anything.
pub fn run_step(step: &PlannedStep, ctx: &StepContext, dry_run: bool) -> Result<StepReport> {
    let source = Manifest::read(&step.source.unlabeled_real)?;
    let synthetic_path = step
        .target
        .labeled_synthetic
        .as_ref()
        .ok_or_else(|| Error::Plan(format!("domain {:?} has no labeled_synthetic manifest", step.target.name)))?;
    let synthetic = Manifest::read(synthetic_path)?;
    if let Some(missing) = synthetic.missing_files().into_iter().next() {
        return Err(Error::MissingFile(missing));
    }
    let source_images: Vec<PathBuf> = source.records.iter().map(|r| source.resolve(&r.image_path)).collect();
    if let Some(missing) = source_images.iter().find(|p| !p.exists()) {
        return Err(Error::MissingFile(missing.clone()));
    }

    let guidance = match &step.guidance {
        Some(day_spec) => {
            let day = Manifest::read(&day_spec.unlabeled_real)?;
            let table = correspondences(&source, &day, &ctx.matching)?;
            if table.coverage() < ctx.cfg.min_match_coverage {
                return Err(Error::Plan(format!(
                    "step {}: only {:.1}% of {:?} images have a daytime match within {} m, need {:.1}%",
                    step.step,
                    100.0 * table.coverage(),
                    step.source.name,
                    ctx.matching.max_dist_m,
                    100.0 * ctx.cfg.min_match_coverage
                )));
            }
            Some((day_spec, table))
        }
        None => None,
    };

    let train_manifest = step.train_manifest();
    let infer_dir = step.inference_dir();
    let pseudo_dir = step.pseudo_dir();
    let day_dir = ctx.day_dir(step);
    let day_model = ctx.day_model(step);
    let inference = Invocation {
        role: "inference",
        template: &ctx.cfg.inference_command,
        manifest: &step.source.unlabeled_real,
        outdir: &infer_dir,
        model_in: &step.model_in,
        model_out: &step.model_out,
    };
    let day_inference = guidance.as_ref().map(|(spec, _)| Invocation {
        role: "day_inference",
        template: &ctx.cfg.inference_command,
        manifest: &spec.unlabeled_real,
        outdir: &day_dir,
        model_in: &day_model,
        model_out: &step.model_out,
    });
    let trainer = Invocation {
        role: "trainer",
        template: &ctx.cfg.trainer_command,
        manifest: &train_manifest,
        outdir: &step.step_dir,
        model_in: &step.model_in,
        model_out: &step.model_out,
    };

    let mut report = StepReport {
        step: step.step,
        source_domain: step.source.name.clone(),
        target_domain: step.target.name.clone(),
        guided: step.guided(),
        dry_run,
        mu: ctx.cfg.mu,
        images_processed: 0,
        images_refined: 0,
        pixels_refined: 0,
        unmatched_correspondences: guidance.as_ref().map_or(0, |(_, t)| t.unmatched_count()),
        match_coverage: guidance.as_ref().map(|(_, t)| t.coverage()),
        synthetic_records: synthetic.records.len(),
        pseudo_records: source.records.len(),
        model_in: step.model_in.clone(),
        model_out: step.model_out.clone(),
        train_manifest: train_manifest.clone(),
        pseudo_dir: pseudo_dir.clone(),
        commands: Vec::new(),
    };

    if dry_run {
        let planned = std::iter::once(&inference).chain(day_inference.as_ref()).chain(std::iter::once(&trainer));
        report.commands = planned
            .map(|inv| CommandRecord {
                role: inv.role.to_string(),
                command: inv.render(),
                executed: false,
                status: None,
            })
            .collect();
        return Ok(report);
    }

    create_dir(&infer_dir)?;
    create_dir(&pseudo_dir)?;
    execute(&inference, step, ctx, &mut report.commands)?;
    if let Some(inv) = &day_inference {
        let done = day_dir.join(".complete");
        if ctx.cfg.regenerate_day_pseudo || !done.exists() {
            create_dir(&day_dir)?;
            execute(inv, step, ctx, &mut report.commands)?;
            fs::write(&done, b"").map_err(|e| Error::io(format!("write {}", done.display()), e))?;
        }
    }

    let c = ctx.classes.len();
    let read_soft = |dir: &Path, id: &str| -> Result<_> {
        let p = dir.join(format!("{id}.sftp"));
        if !p.exists() {
            return Err(Error::MissingFile(p));
        }
        let mut s = read_soft_tensor(&p)?;
        if s.channels() != c {
            return Err(Error::format(&p, format!("expected {c} channels, got {}", s.channels())));
        }
        s.renormalize();
        Ok(s)
    };
    let outcomes: Vec<(bool, u64)> = source
        .records
        .par_iter()
        .zip(&source_images)
        .map(|(r, image)| -> Result<(bool, u64)> {
            let dark = read_soft(&infer_dir, &r.id)?;
            let matched_day = guidance
                .as_ref()
                .and_then(|(_, t)| t.get(&r.id))
                .filter(|e| e.matched)
                .map(|e| e.day_id.as_str());
            let (labels, refined) = match matched_day {
                Some(day_id) => {
                    let day = read_soft(&day_dir, day_id)?;
                    let rgb = read_rgb_image(image)?;
                    let out = refine_guided(&dark, &rgb, &day, &ctx.classes, &ctx.bilateral, &ctx.fusion)?;
                    (out.labels, true)
                }
                None => (dark.argmax(), false),
            };
            let pixels = if refined { (labels.width() * labels.height()) as u64 } else { 0 };
            write_label_png(&pseudo_dir.join(format!("{}.png", r.id)), &labels)?;
            Ok((refined, pixels))
        })
        .collect::<Result<_>>()?;
    report.images_processed = outcomes.len();
    report.images_refined = outcomes.iter().filter(|o| o.0).count();
    report.pixels_refined = outcomes.iter().map(|o| o.1).sum();

    let pseudo_records: Vec<ManifestRecord> = source
        .records
        .iter()
        .zip(&source_images)
        .map(|(r, image)| {
            let mut out = r.clone();
            out.image_path = relative_to(image, &step.step_dir);
            out.label_path = Some(relative_to(&pseudo_dir.join(format!("{}.png", r.id)), &step.step_dir));
            out.invalid_mask_path = None;
            out.loss_weight = None;
            out.origin = None;
            out
        })
        .collect();
    let pseudo = Manifest::new(&step.step_dir, pseudo_records)?;
    pseudo.write(&step.pseudo_manifest())?;
    let train = emit_manifest(&synthetic, &pseudo, ctx.cfg.mu, &step.step_dir)?;
    train.write(&train_manifest)?;

    execute(&trainer, step, ctx, &mut report.commands)?;
    let marker = consumed_marker(&train_manifest);
    fs::write(&marker, b"").map_err(|e| Error::io(format!("write {}", marker.display()), e))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let path = step.report_path();
    fs::write(&path, json + "\n").map_err(|e| Error::io(format!("write {}", path.display()), e))?;
    Ok(report)
}

/// Plans and runs every step in order. A failing step aborts the rest.
pub fn run_curriculum(cfg: &CurriculumConfig, dry_run: bool) -> Result<Vec<StepReport>> {
    let steps = plan(&cfg.domains, &cfg.step)?;
    let ctx = StepContext::from_config(cfg)?;
    steps.iter().map(|s| run_step(s, &ctx, dry_run)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_cfg(work: &Path) -> StepConfig {
        StepConfig {
            mu: 1.0,
            trainer_command: "true {manifest} {model_out}".into(),
            inference_command: "true {manifest} {outdir}".into(),
            iterations: 30_000,
            work_dir: work.to_path_buf(),
            initial_model: work.join("phi1"),
            min_match_coverage: 0.0,
            regenerate_day_pseudo: false,
        }
    }

    fn domains(dir: &Path, n: usize) -> Vec<DomainSpec> {
        (1..=n)
            .map(|z| {
                let real = dir.join(format!("real{z}.jsonl"));
                let syn = dir.join(format!("syn{z}.jsonl"));
                fs::write(&real, "").unwrap();
                fs::write(&syn, "").unwrap();
                DomainSpec {
                    index: z,
                    name: format!("d{z}"),
                    labeled_synthetic: (z > 1).then_some(syn),
                    unlabeled_real: real,
                }
            })
            .collect()
    }

    #[test]
    fn guidance_exactly_when_source_is_past_daytime() {
        let dir = tempfile::tempdir().unwrap();
        for (n, expect) in [(2, vec![false]), (3, vec![false, true]), (4, vec![false, true, true])] {
            let steps = plan(&domains(dir.path(), n), &step_cfg(dir.path())).unwrap();
            assert_eq!(steps.iter().map(PlannedStep::guided).collect::<Vec<_>>(), expect);
            for (k, s) in steps.iter().enumerate() {
                assert_eq!(s.step, k + 1);
                assert_eq!(s.source.index + 1, s.target.index);
            }
            assert_eq!(steps[0].model_in, dir.path().join("phi1"));
            if n > 2 {
                assert_eq!(steps[1].model_in, steps[0].model_out);
            }
        }
    }

    #[test]
    fn plan_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = step_cfg(dir.path());
        let mut d = domains(dir.path(), 3);
        assert!(plan(&d[..1], &cfg).is_err());
        d[2].labeled_synthetic = None;
        assert!(matches!(plan(&d, &cfg), Err(Error::Plan(_))));
        let mut d = domains(dir.path(), 3);
        d[1].index = 5;
        assert!(plan(&d, &cfg).is_err());
        let mut d = domains(dir.path(), 3);
        d[0].unlabeled_real = dir.path().join("nope.jsonl");
        assert!(plan(&d, &cfg).is_err());
        let mut bad = cfg.clone();
        bad.inference_command = "infer {manifest}".into();
        assert!(plan(&domains(dir.path(), 2), &bad).is_err());
    }

    fn labeled_manifest(dir: &Path, prefix: &str, n: usize) -> Manifest {
        let records = (0..n)
            .map(|i| {
                let img = format!("{prefix}{i}.png");
                let lab = format!("{prefix}{i}_lab.png");
                fs::write(dir.join(&img), b"x").unwrap();
                fs::write(dir.join(&lab), b"x").unwrap();
                let mut r = ManifestRecord::new(format!("{prefix}{i}"), img, "d");
                r.label_path = Some(lab.into());
                r
            })
            .collect();
        Manifest::new(dir, records).unwrap()
    }

    #[test]
    fn manifest_weights() {
        let dir = tempfile::tempdir().unwrap();
        let syn = labeled_manifest(dir.path(), "s", 3);
        let pse = labeled_manifest(dir.path(), "p", 2);
        let m = emit_manifest(&syn, &pse, 1.0, dir.path()).unwrap();
        assert_eq!(m.records.len(), 5);
        assert!(m.records.iter().all(|r| r.loss_weight == Some(1.0)));
        assert_eq!(m.records[0].origin, Some(Origin::LabeledSynthetic));
        assert_eq!(m.records[4].origin, Some(Origin::PseudoReal));
        assert_eq!(m.records[3].id, "p0");

        let zero = emit_manifest(&syn, &pse, 0.0, dir.path()).unwrap();
        assert_eq!(zero.records[4].loss_weight, Some(0.0));

        let one = labeled_manifest(dir.path(), "a", 1);
        let other = labeled_manifest(dir.path(), "b", 1);
        let half = emit_manifest(&one, &other, 0.5, dir.path()).unwrap();
        let w: Vec<_> = half.records.iter().map(|r| r.loss_weight.unwrap()).collect();
        assert_eq!(w, vec![1.0, 0.5]);
        assert_eq!(half.to_jsonl(), emit_manifest(&one, &other, 0.5, dir.path()).unwrap().to_jsonl());
    }

    #[test]
    fn manifest_overlap_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let syn = labeled_manifest(dir.path(), "s", 2);
        let mut clash = labeled_manifest(dir.path(), "p", 1);
        clash.records[0].label_path = syn.records[0].label_path.clone();
        assert!(matches!(emit_manifest(&syn, &clash, 1.0, dir.path()), Err(Error::Plan(_))));
        let mut gone = labeled_manifest(dir.path(), "q", 1);
        gone.records[0].image_path = "absent.png".into();
        assert!(matches!(emit_manifest(&syn, &gone, 1.0, dir.path()), Err(Error::MissingFile(_))));
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote(Path::new("a b")), "'a b'");
        assert_eq!(shell_quote(Path::new("it's")), r"'it'\''s'");
    }

    #[test]
    fn config_paths_resolve_against_file() {
        let text = r#"
            [step]
            trainer_command = "train {manifest} {model_out}"
            inference_command = "infer {manifest} {outdir}"
            work_dir = "work"
            initial_model = "/models/phi1"

            [[domains]]
            index = 1
            name = "daytime"
            unlabeled_real = "day.jsonl"

            [[domains]]
            index = 2
            name = "twilight"
            labeled_synthetic = "tw_syn.jsonl"
            unlabeled_real = "tw.jsonl"
        "#;
        let cfg = CurriculumConfig::parse(text, Path::new("/data/plan.toml")).unwrap();
        assert_eq!(cfg.step.work_dir, PathBuf::from("/data/work"));
        assert_eq!(cfg.step.initial_model, PathBuf::from("/models/phi1"));
        assert_eq!(cfg.step.mu, 1.0);
        assert_eq!(cfg.step.iterations, 30_000);
        assert_eq!(cfg.domains[1].labeled_synthetic, Some(PathBuf::from("/data/tw_syn.jsonl")));
    }
}
