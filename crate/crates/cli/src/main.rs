mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cookplan_core::converter::{BackendConfig, Transcript};
use cookplan_core::fixtures::fixture_dir;
use cookplan_core::kitchen::{build_domain_with, build_problem_with_states, DEFAULT_IGNITION_LEVEL};
use cookplan_core::pddl::{print_domain, print_problem};
use cookplan_core::staterec::{
    detect_change, evaluate, format_annotation, parse_annotation, read_features, synthesize_series, train_probe,
    write_features, AnnotatedSeries, Evaluation, LinearProbe, TrainConfig,
};

use stages::{exit, read_input, write_artifact, CliError, Manifest, OracleSpec, Result};

#[derive(Parser)]
#[command(name = "cookplan", version, about = "Recipe text to executable kitchen plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recipe text to a function sequence through a text-generation backend.
    Convert {
        #[arg(long)]
        recipe: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        /// Sequence output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        prompt_out: Option<PathBuf>,
        /// JSONL transcript, appended to.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Function sequence to per-step goals.
    Compile {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Diagnostics output; standard error when absent.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Plan every step of the goals from the scenario's initial state.
    Plan {
        #[arg(long)]
        goals: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Used to mark the actions the recipe does not mention.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a plan and check every goal.
    Validate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        goals: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a plan against state-change oracles and write the trace.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        goals: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the kitchen domain, and a problem when a scenario is given.
    EmitDomain {
        #[arg(long, default_value = DEFAULT_IGNITION_LEVEL)]
        ignition_level: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, requires = "problem_out")]
        scenario: Option<PathBuf>,
        /// Goal of this step becomes the problem goal.
        #[arg(long, requires = "scenario")]
        goals: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long)]
        problem_out: Option<PathBuf>,
    },
    /// Ingredient state-change detection.
    Staterec {
        #[command(subcommand)]
        command: StaterecCommand,
    },
    /// Every stage from recipe text to execution trace.
    Pipeline {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Run directory for the stage artifacts and the manifest.
        #[arg(long)]
        out: PathBuf,
        /// Reuse stage artifacts already present in the run directory.
        #[arg(long)]
        resume: bool,
    },
}

#[derive(Subcommand)]
enum StaterecCommand {
    /// Train a linear probe from annotated feature series.
    Train {
        /// Feature CSV; repeat for more series.
        #[arg(long, required = true)]
        features: Vec<PathBuf>,
        /// Annotation file per feature CSV, in the same order.
        #[arg(long, required = true)]
        annotation: Vec<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        l2: f64,
        #[arg(long, default_value_t = 1000)]
        max_epochs: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a series and report the first post-change frame.
    Detect {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detected minus annotated change time.
    Eval {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        annotation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic step-change series.
    Synth {
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 600)]
        frames: usize,
        #[arg(long, default_value_t = 300)]
        change_frame: usize,
        /// Distance between the pre- and post-change means, in noise units.
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        annotation_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fixture,
    Live,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "fixture")]
    backend: Mode,
    /// Directory of `<sha256(recipe)>.txt` responses.
    #[arg(long)]
    fixture_dir: Option<PathBuf>,
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    endpoint: String,
    #[arg(long, default_value = "gpt-4-0613")]
    model: String,
    /// Seconds.
    #[arg(long, default_value_t = 120.0)]
    backend_timeout: f64,
}

impl BackendArgs {
    fn config(&self) -> Result<BackendConfig> {
        match self.backend {
            Mode::Fixture => {
                let dir = self
                    .fixture_dir
                    .clone()
                    .unwrap_or_else(|| fixture_dir().join("responses"));
                BackendConfig::fixture(dir).map_err(|e| CliError::new(exit::BACKEND, e.to_string()))
            }
            Mode::Live => Ok(BackendConfig::live(&self.endpoint, &self.model, self.backend_timeout)),
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    /// ACTION=FRAMES: the action waits this many frames.
    #[arg(long = "delay", value_parser = parse_delay)]
    delays: Vec<(String, usize)>,
    /// ACTION=PROBE,FEATURES: the action waits for the probe to fire on the series.
    #[arg(long = "detector", value_parser = parse_detector)]
    detectors: Vec<(String, String, String)>,
    /// Longest wait in seconds before the run is abandoned.
    #[arg(long)]
    timeout: Option<f64>,
}

impl OracleArgs {
    fn spec(&self) -> OracleSpec {
        OracleSpec {
            delays: self.delays.clone(),
            detectors: self.detectors.clone(),
            timeout: self.timeout,
        }
    }
}

fn parse_delay(s: &str) -> std::result::Result<(String, usize), String> {
    let (a, n) = s.split_once('=').ok_or("expected ACTION=FRAMES")?;
    Ok((a.to_string(), n.parse().map_err(|_| format!("`{n}` is not a frame count"))?))
}

fn parse_detector(s: &str) -> std::result::Result<(String, String, String), String> {
    let (a, rest) = s.split_once('=').ok_or("expected ACTION=PROBE,FEATURES")?;
    let (p, f) = rest.split_once(',').ok_or("expected ACTION=PROBE,FEATURES")?;
    Ok((a.to_string(), p.to_string(), f.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_artifact(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_series(path: &Path) -> Result<cookplan_core::staterec::FeatureSeries> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::new(exit::PARSE, format!("cannot read {}: {e}", path.display())))?;
    read_features(f).map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn read_probe(path: &Path) -> Result<LinearProbe> {
    LinearProbe::parse(&read_input(path)?).map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn staterec(cmd: StaterecCommand) -> Result<()> {
    let sr = |e: cookplan_core::staterec::StaterecError| CliError::new(exit::PARSE, e.to_string());
    match cmd {
        StaterecCommand::Synth {
            dim,
            frames,
            change_frame,
            separation,
            seed,
            out,
            annotation_out,
        } => {
            let a = synthesize_series(dim, frames, change_frame, separation, seed).map_err(sr)?;
            let mut buf = Vec::new();
            write_features(&a.series, &mut buf).map_err(sr)?;
            write_artifact(&out, &String::from_utf8(buf).expect("csv is utf-8"))?;
            if let Some(p) = annotation_out {
                write_artifact(&p, &format_annotation(a.annotation))?;
            }
            Ok(())
        }
        StaterecCommand::Train {
            features,
            annotation,
            l2,
            max_epochs,
            tol,
            seed,
            out,
        } => {
            if features.len() != annotation.len() {
                return Err(CliError::new(exit::PARSE, "need one --annotation per --features"));
            }
            let data = features
                .iter()
                .zip(&annotation)
                .map(|(f, a)| {
                    let t = parse_annotation(&read_input(a)?).map_err(sr)?;
                    AnnotatedSeries::new(read_series(f)?, t).map_err(sr)
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = TrainConfig {
                l2,
                max_epochs,
                tol,
                seed,
            };
            let probe = train_probe(&data, &cfg).map_err(sr)?;
            write_artifact(&out, &probe.to_text())
        }
        StaterecCommand::Detect { probe, features, out } => {
            let r = detect_change(&read_probe(&probe)?, &read_series(&features)?).map_err(sr)?;
            let mut text = match (r.detected_frame, r.detected_time) {
                (Some(i), Some(t)) => format!("detected frame={i} t={t}\n"),
                _ => "no change detected\n".to_string(),
            };
            for (i, s) in r.scores.iter().enumerate() {
                text.push_str(&format!("{i}\t{s:.6}\t{}\n", r.labels[i]));
            }
            emit(out.as_deref(), &text)?;
            if r.detected_frame.is_none() {
                return Err(CliError::new(exit::DETECTION_MISS, "no change detected"));
            }
            Ok(())
        }
        StaterecCommand::Eval {
            probe,
            features,
            annotation,
            out,
        } => {
            let t = parse_annotation(&read_input(&annotation)?).map_err(sr)?;
            let a = AnnotatedSeries::new(read_series(&features)?, t).map_err(sr)?;
            match evaluate(&read_probe(&probe)?, &a).map_err(sr)? {
                Evaluation::Difference(d) => emit(out.as_deref(), &format!("difference {d:.1}\n")),
                Evaluation::Miss => {
                    emit(out.as_deref(), "miss\n")?;
                    Err(CliError::new(exit::DETECTION_MISS, "no change detected"))
                }
            }
        }
    }
}

fn pipeline(
    recipe_path: &Path,
    scenario_path: &Path,
    backend: &BackendConfig,
    oracle: &OracleSpec,
    dir: &Path,
    resume: bool,
) -> Result<()> {
    let recipe = read_input(recipe_path)?;
    let scenario_text = read_input(scenario_path)?;
    let scenario = stages::parse_scenario(&scenario_text)?;
    let mut manifest = Manifest::default();
    manifest.record("recipe", &recipe_path.display().to_string(), recipe.as_bytes());
    manifest.record("scenario", &scenario_path.display().to_string(), scenario_text.as_bytes());
    let finish = |manifest: &Manifest| write_artifact(&dir.join("manifest.txt"), &manifest.to_text());

    let stage = |manifest: &mut Manifest, name: &str, file: &str, produce: &mut dyn FnMut() -> Result<String>| {
        let path = dir.join(file);
        let text = if resume && path.exists() {
            read_input(&path)?
        } else {
            let t = produce()?;
            write_artifact(&path, &t)?;
            t
        };
        manifest.record(name, file, text.as_bytes());
        Ok::<String, CliError>(text)
    };

    let mut transcript: Option<Transcript> = None;
    let sequence = stage(&mut manifest, "sequence", "sequence.seq", &mut || {
        let c = stages::run_convert(&recipe, backend)?;
        let text = c.sequence.to_string();
        transcript = Some(c.transcript);
        Ok(text)
    });
    if let Some(t) = &transcript {
        write_artifact(&dir.join("prompt.txt"), &t.prompt)?;
        manifest.record("prompt", "prompt.txt", t.prompt.as_bytes());
        let path = dir.join("transcript.jsonl");
        let _ = std::fs::remove_file(&path);
        t.append_to(&path).map_err(|e| CliError::new(exit::IO, e.to_string()))?;
        manifest.record("transcript", "transcript.jsonl", &std::fs::read(&path).unwrap_or_default());
    } else {
        for (name, file) in [("prompt", "prompt.txt"), ("transcript", "transcript.jsonl")] {
            if let Ok(bytes) = std::fs::read(dir.join(file)) {
                manifest.record(name, file, &bytes);
            }
        }
    }
    let sequence = match sequence {
        Ok(s) => s,
        Err(e) => {
            finish(&manifest)?;
            return Err(e);
        }
    };

    let compiled = stages::run_compile(&sequence, &scenario)?;
    write_artifact(&dir.join("diagnostics.txt"), &compiled.diagnostics)?;
    manifest.record("diagnostics", "diagnostics.txt", compiled.diagnostics.as_bytes());
    let mut goals_result = Some(compiled.goals);
    let goals = stage(&mut manifest, "goals", "goals.txt", &mut || {
        goals_result.take().expect("goals produced once")
    });
    let goals = match goals {
        Ok(g) => g,
        Err(e) => {
            finish(&manifest)?;
            return Err(e);
        }
    };

    let steps: [(&str, &str); 3] = [("plan", "plan.txt"), ("validation", "validation.txt"), ("trace", "trace.txt")];
    let mut plan = String::new();
    let mut outcome = Ok(());
    for (name, file) in steps {
        let r = stage(&mut manifest, name, file, &mut || match name {
            "plan" => stages::run_plan(&goals, &scenario, Some(&sequence)),
            "validation" => {
                let v = stages::run_validate(&plan, &goals, &scenario)?;
                if !v.valid {
                    outcome = Err(CliError::new(exit::VALIDATION, format!("plan is not valid\n{}", v.report)));
                }
                Ok(v.report)
            }
            _ => {
                let s = stages::run_simulate(&plan, &goals, &scenario, &oracle.build()?)?;
                if s.timed_out {
                    outcome = Err(CliError::new(exit::DETECTION_MISS, "state-change oracle timed out"));
                }
                Ok(s.trace)
            }
        });
        match r {
            Ok(text) if name == "plan" => plan = text,
            Ok(_) => {}
            Err(e) => {
                finish(&manifest)?;
                return Err(e);
            }
        }
        if outcome.is_err() {
            break;
        }
    }
    finish(&manifest)?;
    outcome
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert {
            recipe,
            backend,
            out,
            prompt_out,
            transcript,
        } => {
            let c = stages::run_convert(&read_input(&recipe)?, &backend.config()?)?;
            if let Some(p) = prompt_out {
                write_artifact(&p, &c.transcript.prompt)?;
            }
            if let Some(t) = transcript {
                c.transcript
                    .append_to(&t)
                    .map_err(|e| CliError::new(exit::IO, e.to_string()))?;
            }
            write_artifact(&out, &c.sequence.to_string())
        }
        Command::Compile {
            sequence,
            scenario,
            out,
            diagnostics,
        } => {
            let sc = stages::parse_scenario(&read_input(&scenario)?)?;
            let c = stages::run_compile(&read_input(&sequence)?, &sc)?;
            match diagnostics {
                Some(p) => write_artifact(&p, &c.diagnostics)?,
                None => eprint!("{}", c.diagnostics),
            }
            write_artifact(&out, &c.goals?)
        }
        Command::Plan {
            goals,
            scenario,
            sequence,
            out,
        } => {
            let sc = stages::parse_scenario(&read_input(&scenario)?)?;
            let seq = sequence.as_deref().map(read_input).transpose()?;
            let text = stages::run_plan(&read_input(&goals)?, &sc, seq.as_deref())?;
            write_artifact(&out, &text)
        }
        Command::Validate {
            plan,
            goals,
            scenario,
            out,
        } => {
            let sc = stages::parse_scenario(&read_input(&scenario)?)?;
            let v = stages::run_validate(&read_input(&plan)?, &read_input(&goals)?, &sc)?;
            emit(out.as_deref(), &v.report)?;
            if v.valid {
                Ok(())
            } else {
                Err(CliError::new(exit::VALIDATION, "plan is not valid"))
            }
        }
        Command::Simulate {
            plan,
            goals,
            scenario,
            oracle,
            out,
        } => {
            let sc = stages::parse_scenario(&read_input(&scenario)?)?;
            let s = stages::run_simulate(&read_input(&plan)?, &read_input(&goals)?, &sc, &oracle.spec().build()?)?;
            write_artifact(&out, &s.trace)?;
            if s.timed_out {
                Err(CliError::new(exit::DETECTION_MISS, "state-change oracle timed out"))
            } else {
                Ok(())
            }
        }
        Command::EmitDomain {
            ignition_level,
            out,
            scenario,
            goals,
            step,
            problem_out,
        } => {
            let domain = build_domain_with(&ignition_level);
            emit(out.as_deref(), &print_domain(&domain))?;
            if let (Some(sc), Some(p)) = (scenario, problem_out) {
                let sc = stages::parse_scenario(&read_input(&sc)?)?;
                let goals = goals
                    .map(|g| {
                        cookplan_core::goals::CompiledGoals::parse(&read_input(&g)?)
                            .map_err(|e| CliError::new(exit::PARSE, format!("goals: {e}")))
                    })
                    .transpose()?;
                let names = goals.as_ref().map(|g| g.state_names()).unwrap_or_default();
                let mut problem = build_problem_with_states(&sc, &names)
                    .map_err(|e| CliError::new(exit::PARSE, format!("scenario: {e}")))?;
                if let Some(g) = goals {
                    problem.goal = g
                        .steps
                        .get(step.wrapping_sub(1))
                        .cloned()
                        .ok_or_else(|| CliError::new(exit::PARSE, format!("no step {step}")))?;
                }
                write_artifact(&p, &print_problem(&problem))?;
            }
            Ok(())
        }
        Command::Staterec { command } => staterec(command),
        Command::Pipeline {
            recipe,
            scenario,
            backend,
            oracle,
            out,
            resume,
        } => pipeline(&recipe, &scenario, &backend.config()?, &oracle.spec(), &out, resume),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.code == exit::PARSE {
                eprintln!("run `cookplan --help` for usage");
            }
            ExitCode::from(e.code)
        }
    }
}
