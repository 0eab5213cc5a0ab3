//! Command-line front end. The binary only calls [`run`].

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::algebra::{Backend, Bls12Backend, ContextDescriptor, GroupContext, TransparentBackend, DEFAULT_MODULUS};
use crate::batchverify::{BatchItem, BatchPolicy, BatchVerifier, Verdict};
use crate::ibgs::{
    check_individual_modified, check_individual_original, join_issue, join_verify, keygen_gm, keygen_tsd,
    keygen_vehicle, prove_key, setup, sign, ModifiedSignature, Signature, SignatureForm, VehicleCredential,
};
use crate::opener::{self, Opening};
use crate::scheduler::{dp_max_weight, parse_jobs, schedule_metrics, write_records_csv, InfeasiblePolicy, JobId};

use super::pipeline::{run_scenario, run_sweep, CURVE_ID};
use super::report::{run_bench, write_bench_csv};
use super::scenario::{BackendChoice, BatchSize, Scenario};
use super::store::{read_text, write_text, SignedMessage, StateDir, StoreError};

#[derive(Debug, Parser)]
#[command(name = "vanet-ibgs", version, about = "Group signatures with batch verification for vehicular networks")]
pub struct Cli {
    /// State directory holding keys, parameters and the registration table.
    #[arg(long, global = true, default_value = "vanet-state")]
    pub state: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Seed for all randomness; fresh entropy when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Security parameter of the small-exponent test, in bits.
    #[arg(long, global = true)]
    pub l: Option<u32>,
    /// `auto` or a positive integer.
    #[arg(long = "batch-size", global = true)]
    pub batch_size: Option<BatchSize>,
    /// Cross-check batch verdicts against individual verification.
    #[arg(long, global = true)]
    pub audit: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Scenario file (key = value lines).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Transparent,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Opener,
    Gm,
    Vehicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Full,
    Modified,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create public parameters, the master secret and a default opener.
    Setup {
        #[arg(long, default_value = "tsd-0")]
        opener_id: String,
    },
    /// Derive a key for an opener, group manager or vehicle.
    Keygen {
        #[arg(long, value_enum)]
        role: Role,
        #[arg(long)]
        id: String,
    },
    /// Enroll a vehicle with a group manager.
    Join {
        #[arg(long)]
        vehicle: String,
        #[arg(long)]
        group: String,
    },
    /// Sign a message with a vehicle credential.
    Sign {
        #[arg(long)]
        vehicle: String,
        #[arg(long)]
        message: String,
        #[arg(long, value_enum, default_value = "modified")]
        form: FormArg,
    },
    /// Verify one signed-message file.
    Verify { file: PathBuf },
    /// Batch-verify signed-message files.
    Batch {
        files: Vec<PathBuf>,
        /// Reject whole failing batches instead of bisecting.
        #[arg(long)]
        no_isolate: bool,
    },
    /// Reveal the signer of a signed-message file.
    Open { file: PathBuf },
    /// Check an opening against a signed-message file.
    Judge { file: PathBuf, opening: PathBuf },
    /// Schedule a job file for maximum on-time weight, or evaluate a fixed order.
    Schedule {
        jobs: PathBuf,
        /// Comma-separated job ids; prints completion and lateness for this order.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<JobId>>,
        /// Drop jobs that cannot finish by their due time instead of failing.
        #[arg(long)]
        filter: bool,
    },
    /// Run the batch-size sweep on a scenario and write its CSV.
    Sweep,
    /// Compare individual and batch verification on a scenario.
    Bench,
}

/// Outcome of a command that did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Exit code 1.
    Verification(String),
    /// Exit code 2.
    Input(String),
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// With `--seed`, the stream also depends on the command and its arguments,
/// so two managers created with the same seed still get different keys.
fn rng_for(cli: &Cli) -> ChaCha20Rng {
    match cli.seed {
        Some(seed) => {
            let mut h = Sha256::new();
            h.update(seed.to_be_bytes());
            h.update(format!("{:?}", cli.command).as_bytes());
            ChaCha20Rng::from_seed(h.finalize().into())
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => Ok(write_text(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Setup { opener_id } => {
            let descriptor = match cli.backend.unwrap_or(BackendArg::Transparent) {
                BackendArg::Transparent => ContextDescriptor::Transparent {
                    modulus: DEFAULT_MODULUS,
                    seed: cli.seed.unwrap_or(0),
                },
                BackendArg::Curve => ContextDescriptor::Curve {
                    curve_id: CURVE_ID.into(),
                },
            };
            let store = StateDir::new(&cli.state);
            store.save_context(&descriptor)?;
            with_backend(cli, SetupTask(cli, opener_id))
        }
        Command::Schedule { jobs, order, filter } => schedule(cli, jobs, order.as_deref(), *filter),
        Command::Sweep => {
            let sc = scenario(cli)?;
            let records = run_sweep(&sc).map_err(input)?;
            let mut buf = Vec::new();
            write_records_csv(&records, &mut buf).map_err(input)?;
            emit(cli, &String::from_utf8_lossy(&buf))?;
            if records.iter().any(|r| r.status == crate::scheduler::SweepStatus::BatchError) {
                return Err(Failure::Verification("sweep stopped at a batch error".into()));
            }
            Ok(())
        }
        Command::Bench => {
            let sc = scenario(cli)?;
            let rows = run_bench(&sc).map_err(input)?;
            let mut buf = Vec::new();
            write_bench_csv(&rows, &mut buf).map_err(input)?;
            emit(cli, &String::from_utf8_lossy(&buf))?;
            if cli.audit {
                let out = run_scenario(&sc, true).map_err(input)?;
                let disagreements = out.audit_discrepancies.unwrap_or(0);
                eprintln!(
                    "audit: {} items, {} batches, {} disagreements, {} false accepts",
                    out.items.len(),
                    out.batches,
                    disagreements,
                    out.false_accepts()
                );
                if disagreements > 0 || out.false_accepts() > 0 {
                    return Err(Failure::Verification("audit found disagreements".into()));
                }
            }
            Ok(())
        }
        _ => with_backend(cli, StatefulTask(cli)),
    }
}

/// Loads the state directory's backend and hands a context to `f`.
fn with_backend(cli: &Cli, task: impl BackendTask) -> Result<(), Failure> {
    let descriptor = StateDir::new(&cli.state).load_context()?;
    match &descriptor {
        ContextDescriptor::Transparent { .. } => task.run(GroupContext::<TransparentBackend>::from_descriptor(&descriptor).map_err(input)?),
        ContextDescriptor::Curve { .. } => task.run(GroupContext::<Bls12Backend>::from_descriptor(&descriptor).map_err(input)?),
    }
}

/// A closure that works for any backend.
trait BackendTask {
    fn run<B: Backend>(self, ctx: GroupContext<B>) -> Result<(), Failure>;
}

struct SetupTask<'a>(&'a Cli, &'a str);
struct StatefulTask<'a>(&'a Cli);

impl BackendTask for SetupTask<'_> {
    fn run<B: Backend>(self, ctx: GroupContext<B>) -> Result<(), Failure> {
        run_setup(self.0, ctx, self.1)
    }
}

impl BackendTask for StatefulTask<'_> {
    fn run<B: Backend>(self, ctx: GroupContext<B>) -> Result<(), Failure> {
        run_stateful(self.0, ctx)
    }
}

fn run_setup<B: Backend>(cli: &Cli, ctx: GroupContext<B>, opener_id: &str) -> Result<(), Failure> {
    let store = StateDir::new(&cli.state);
    let mut rng = rng_for(cli);
    let (params, tea) = setup(ctx, &mut rng);
    let opener = keygen_tsd(&params, &tea, opener_id.as_bytes());
    store.save_params(&params, &opener.id)?;
    store.save_tea(&tea)?;
    store.save_opener(&opener)?;
    println!("initialized {} ({})", store.root().display(), B::NAME);
    Ok(())
}

/// A signed-message file, decoded. `full` is set for full-form signatures.
struct Loaded<B: Backend> {
    message: Vec<u8>,
    modified: ModifiedSignature<B>,
    full: Option<Signature<B>>,
}

fn load_signed<B: Backend>(
    ctx: &GroupContext<B>,
    path: &Path,
) -> Result<Loaded<B>, Failure> {
    let signed = SignedMessage::parse(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: crate::algebra::AlgebraError| Failure::Input(format!("{}: {e}", path.display()));
    let form = SignatureForm::of(&signed.signature).map_err(bad)?;
    let (modified, full) = match form {
        SignatureForm::Full => {
            let full = Signature::from_bytes(ctx, &signed.signature).map_err(bad)?;
            (full.to_modified(), Some(full))
        }
        SignatureForm::Modified => (ModifiedSignature::from_bytes(ctx, &signed.signature).map_err(bad)?, None),
    };
    Ok(Loaded {
        message: signed.message,
        modified,
        full,
    })
}

fn run_stateful<B: Backend>(cli: &Cli, ctx: GroupContext<B>) -> Result<(), Failure> {
    let store = StateDir::new(&cli.state);
    let (params, opener_id) = store.load_params(&ctx)?;
    let mut rng = rng_for(cli);
    match &cli.command {
        Command::Keygen { role, id } => {
            let tea = store.load_tea(&ctx)?;
            match role {
                Role::Opener => {
                    let key = keygen_tsd(&params, &tea, id.as_bytes());
                    store.save_opener(&key)?;
                    store.save_params(&params, &key.id)?;
                }
                Role::Gm => store.save_manager(&keygen_gm(&params, &tea, id.as_bytes(), &mut rng))?,
                Role::Vehicle => store.save_vehicle_key(&keygen_vehicle(&params, &tea, id.as_bytes()))?,
            }
            println!("created {role:?} key `{id}`");
        }
        Command::Join { vehicle, group } => {
            let key = store.load_vehicle_key(&ctx, vehicle)?;
            let gm = store.load_manager(&ctx, group)?;
            let mut table = store.load_table(&params)?;
            let mut nonce = [0u8; 16];
            rng.fill_bytes(&mut nonce);
            let proof = prove_key(&params, &key, &nonce, &mut rng);
            let certificate = join_issue(&params, &gm, vehicle.as_bytes(), &proof, &mut table, &mut rng).map_err(input)?;
            if !join_verify(&params, vehicle.as_bytes(), &certificate, &gm.id) {
                return Err(Failure::Verification(format!("certificate for `{vehicle}` does not verify")));
            }
            store.save_table(&table)?;
            store.save_credential(&VehicleCredential { key, certificate }, &gm.id)?;
            println!("enrolled `{vehicle}` in `{group}`");
        }
        Command::Sign { vehicle, message, form } => {
            let (cred, manager_id) = store.load_credential(&ctx, vehicle)?;
            let sig = sign(&params, &cred, &opener_id, &manager_id, message.as_bytes(), &mut rng);
            let signature = match form {
                FormArg::Full => sig.to_bytes(),
                FormArg::Modified => sig.to_modified().to_bytes(),
            };
            let record = SignedMessage {
                message: message.as_bytes().to_vec(),
                signature,
            };
            emit(cli, &record.to_text())?;
        }
        Command::Verify { file } => {
            let loaded = load_signed(&ctx, file)?;
            let directory = store.load_directory(&ctx)?;
            let manager = directory
                .manager_id(&loaded.modified.group_tag)
                .ok_or_else(|| Failure::Verification("rejected: unknown group".into()))?;
            let result = match &loaded.full {
                Some(full) => check_individual_original(&params, full, &loaded.message, &opener_id, manager),
                None => check_individual_modified(&params, &loaded.modified, &loaded.message, &opener_id, manager),
            };
            match result {
                Ok(()) => println!("ok ({} pairings)", ctx.pairing_count()),
                Err(why) => return Err(Failure::Verification(format!("rejected: {why}"))),
            }
        }
        Command::Batch { files, no_isolate } => {
            let directory = store.load_directory(&ctx)?;
            let mut items = Vec::with_capacity(files.len());
            for file in files {
                let loaded = load_signed(&ctx, file)?;
                items.push(BatchItem {
                    msg: loaded.message,
                    sig: loaded.modified,
                });
            }
            let policy = BatchPolicy {
                security_bits: cli.l.unwrap_or(crate::batchverify::DEFAULT_SECURITY_BITS),
                isolate: !no_isolate,
                max_batch: match cli.batch_size {
                    Some(BatchSize::Fixed(n)) => Some(n),
                    _ => None,
                },
            };
            let report = BatchVerifier::new(&params, &opener_id, &directory)
                .with_policy(policy)
                .verify(&items, &mut rng);
            let mut text = String::new();
            for (file, verdict) in files.iter().zip(&report.verdicts) {
                let v = match verdict {
                    Verdict::Accept => "ok",
                    Verdict::Reject(r) => r.as_str(),
                };
                text.push_str(&format!("{}\t{v}\n", file.display()));
            }
            emit(cli, &text)?;
            eprintln!(
                "{} accepted, {} rejected, {} pairings, {} finalizations",
                report.accepted(),
                report.rejected(),
                report.stats.pairings,
                report.stats.finalizations
            );
            if report.rejected() > 0 {
                return Err(Failure::Verification(format!("{} signatures rejected", report.rejected())));
            }
        }
        Command::Open { file } => {
            let sig = load_signed(&ctx, file)?.modified;
            let opener_key = store.load_opener(&ctx)?;
            let table = store.load_table(&params)?;
            let opening = opener::open(&params, &opener_key, &sig.trace, &table, &mut rng)
                .map_err(|e| Failure::Verification(e.to_string()))?;
            eprintln!("signer: {}", String::from_utf8_lossy(&opening.vehicle_id));
            emit(cli, &opening.to_text())?;
        }
        Command::Judge { file, opening } => {
            let sig = load_signed(&ctx, file)?.modified;
            let opening = Opening::from_text(&params, &read_text(opening)?).map_err(input)?;
            if opener::judge(&params, &opener_id, &sig.trace, &opening) {
                println!("valid opening: {}", String::from_utf8_lossy(&opening.vehicle_id));
            } else {
                return Err(Failure::Verification("opening rejected".into()));
            }
        }
        Command::Setup { .. } | Command::Schedule { .. } | Command::Sweep | Command::Bench => {
            unreachable!("handled without a state directory")
        }
    }
    Ok(())
}

fn scenario(cli: &Cli) -> Result<Scenario, Failure> {
    let mut sc = match &cli.scenario {
        Some(path) => {
            Scenario::parse(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => Scenario::default(),
    };
    if let Some(b) = cli.backend {
        sc.backend = match b {
            BackendArg::Transparent => BackendChoice::Transparent,
            BackendArg::Curve => BackendChoice::Curve,
        };
    }
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if let Some(l) = cli.l {
        sc.security_bits = l;
    }
    if let Some(b) = cli.batch_size {
        sc.batch_size = b;
    }
    sc.validate().map_err(input)?;
    Ok(sc)
}

fn schedule(cli: &Cli, path: &Path, order: Option<&[JobId]>, filter: bool) -> Result<(), Failure> {
    let jobs = parse_jobs(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut text = String::new();
    let result = match order {
        Some(order) => schedule_metrics(&jobs, order).map_err(input)?,
        None => {
            let policy = if filter { InfeasiblePolicy::Filter } else { InfeasiblePolicy::Reject };
            let sol = dp_max_weight(&jobs, policy).map_err(input)?;
            text.push_str(&format!(
                "# on-time weight {} from {} of {} jobs ({} time points, {} evaluations)\n",
                sol.weight,
                sol.selected.len(),
                jobs.len(),
                sol.stats.time_points,
                sol.stats.inner_evaluations
            ));
            sol.schedule
        }
    };
    text.push_str("id,start,completion,lateness,late\n");
    for e in &result.entries {
        text.push_str(&format!("{},{},{},{},{}\n", e.id, e.start, e.completion, e.lateness, u8::from(e.late)));
    }
    text.push_str(&format!("# C_max {} L_max {}\n", result.c_max, result.l_max));
    emit(cli, &text)
}
