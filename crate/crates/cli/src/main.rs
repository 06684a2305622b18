use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bucketbwt::engine::default_threads;
use bucketbwt::oracle::{invert, naive_bwt};
use bucketbwt::{
    build, build_to_writer, parse_sequences, AmbiguousHandling, Backend, BuildReport, Config,
    Encoding, Error, IngestPolicy, InputFormat, WordCollection,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "bucketbwt", version, about = "Multi-string BWT of DNA collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the transform of a sequence file.
    Build {
        #[command(flatten)]
        input: InputArgs,
        /// Output file, or `-` for stdout.
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
    /// Build and check the result against a brute-force reference.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Refuse inputs with more symbols than this.
        #[arg(long, default_value_t = 1_000_000)]
        max_oracle_symbols: u64,
        /// Flip the symbol at this offset before comparing (negative control).
        #[arg(long, hide = true)]
        corrupt_at: Option<usize>,
    },
    /// Recover the words from a transform, one per line.
    Invert {
        /// Transform file over {A,C,G,T,$}, or `-` for stdin.
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Time builds over a range of kappa values and print TSV.
    Bench {
        /// Sequence file; omit to use random reads.
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Bases of random 150 bp reads to generate without `--input`.
        #[arg(long, default_value_t = 10_000_000)]
        synthetic_bases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        kappa_min: u32,
        #[arg(long, default_value_t = 8)]
        kappa_max: u32,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum, default_value_t = AmbiguousArg::DropChar)]
        ambiguous: AmbiguousArg,
    },
    /// Compare against the reference on random collections.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        collections: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        max_words: usize,
        #[arg(long, default_value_t = 40)]
        max_len: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Sequence file (FASTA, FASTQ or one word per line), or `-` for stdin.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = AmbiguousArg::DropChar)]
    ambiguous: AmbiguousArg,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Bucket depth in half-symbols (twice the context length).
    #[arg(long, short, default_value_t = 5)]
    kappa: u32,
    /// Worker threads [default: processor count].
    #[arg(long, short)]
    threads: Option<usize>,
    /// Directory for bucket files [default: system temp dir].
    #[arg(long)]
    tmp_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendArg::External)]
    backend: BackendArg,
    /// Buffer size of each bucket reader and writer.
    #[arg(long, default_value_t = 1 << 20)]
    buffer_bytes: usize,
    /// Store one ASCII byte per symbol in bucket files (debugging).
    #[arg(long)]
    byte_buckets: bool,
}

impl EngineArgs {
    fn config(&self) -> Config {
        let defaults = Config::default();
        Config {
            kappa: self.kappa,
            threads: self.threads.unwrap_or_else(default_threads),
            tmp_dir: self.tmp_dir.clone().unwrap_or(defaults.tmp_dir),
            buffer_bytes: self.buffer_bytes,
            backend: match self.backend {
                BackendArg::External => Backend::External,
                BackendArg::Memory => Backend::Memory,
            },
            encoding: if self.byte_buckets {
                Encoding::Bytes
            } else {
                Encoding::Packed
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    External,
    Memory,
}

#[derive(Clone, Copy, ValueEnum)]
enum AmbiguousArg {
    DropChar,
    DropRecord,
    Fail,
}

impl From<AmbiguousArg> for AmbiguousHandling {
    fn from(a: AmbiguousArg) -> Self {
        match a {
            AmbiguousArg::DropChar => AmbiguousHandling::DropChar,
            AmbiguousArg::DropRecord => AmbiguousHandling::DropRecord,
            AmbiguousArg::Fail => AmbiguousHandling::Fail,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Fasta,
    Fastq,
    Raw,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Tsv,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build {
            input,
            output,
            engine,
            report,
        } => cmd_build(&input, &output, &engine, report),
        Command::Verify {
            input,
            engine,
            max_oracle_symbols,
            corrupt_at,
        } => cmd_verify(&input, &engine, max_oracle_symbols, corrupt_at),
        Command::Invert { input, output } => cmd_invert(&input, &output),
        Command::Bench {
            input,
            synthetic_bases,
            seed,
            kappa_min,
            kappa_max,
            engine,
            ambiguous,
        } => cmd_bench(
            input.as_deref(),
            synthetic_bases,
            seed,
            kappa_min..=kappa_max,
            &engine,
            ambiguous,
        ),
        Command::Selftest {
            collections,
            seed,
            max_words,
            max_len,
            engine,
        } => cmd_selftest(collections, seed, max_words, max_len, &engine),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, Error> {
    let mut data = Vec::new();
    if path == Path::new("-") {
        io::stdin().lock().read_to_end(&mut data)?;
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut data))
            .map_err(|source| Error::File {
                path: path.to_path_buf(),
                source,
            })?;
    }
    Ok(data)
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, Error> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Box::new(BufWriter::new(f)))
}

fn load(input: &Path, format: FormatArg, ambiguous: AmbiguousArg) -> Result<WordCollection, Error> {
    let data = read_all(input)?;
    let format = match format {
        FormatArg::Fasta => InputFormat::Fasta,
        FormatArg::Fastq => InputFormat::Fastq,
        FormatArg::Raw => InputFormat::RawLines,
        FormatArg::Auto => data
            .iter()
            .find(|b| !b.is_ascii_whitespace())
            .map(|&b| InputFormat::detect(b))
            .unwrap_or(InputFormat::RawLines),
    };
    let policy = IngestPolicy {
        ambiguous: ambiguous.into(),
        format,
    };
    parse_sequences(&data[..], policy)
}

/// Peak resident set size in KiB, where the platform reports it.
fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn cmd_build(
    input: &InputArgs,
    output: &Path,
    engine: &EngineArgs,
    format: ReportFormat,
) -> Result<bool, Error> {
    let started = Instant::now();
    let collection = load(&input.input, input.format, input.ambiguous)?;
    let mut out = open_output(output)?;
    let report = build_to_writer(&collection, &engine.config(), &mut out, &mut ())?;
    out.flush()?;
    drop(out);
    let wall = started.elapsed().as_secs_f64();
    let rss = peak_rss_kib();
    if rss.is_none() {
        warn!("peak memory is not available on this platform");
    }
    print_build_report(&report, wall, rss, format);
    Ok(true)
}

fn print_build_report(report: &BuildReport, wall: f64, rss: Option<u64>, format: ReportFormat) {
    let rss_text = rss.map(|k| k.to_string()).unwrap_or_else(|| "NA".into());
    // The data may be on stdout, so the report always goes to stderr.
    match format {
        ReportFormat::Text => {
            eprintln!("words: {}", report.words);
            eprintln!("symbols: {}", report.symbols);
            eprintln!("kappa: {} ({} buckets)", report.kappa, report.buckets);
            eprintln!("build seconds: {:.3}", report.elapsed.as_secs_f64());
            eprintln!("wall seconds: {wall:.3}");
            eprintln!("peak rss KiB: {rss_text}");
            eprintln!(
                "bucket io bytes: {} read, {} written, {} total",
                report.bytes_read,
                report.bytes_written,
                report.bytes_read + report.bytes_written
            );
        }
        ReportFormat::Tsv => {
            eprintln!("words\tsymbols\tkappa\tbuckets\tbuild_s\twall_s\tpeak_rss_kib\tio_in\tio_out");
            eprintln!(
                "{}\t{}\t{}\t{}\t{:.3}\t{wall:.3}\t{rss_text}\t{}\t{}",
                report.words,
                report.symbols,
                report.kappa,
                report.buckets,
                report.elapsed.as_secs_f64(),
                report.bytes_read,
                report.bytes_written
            );
        }
    }
}

fn cmd_verify(
    input: &InputArgs,
    engine: &EngineArgs,
    max_symbols: u64,
    corrupt_at: Option<usize>,
) -> Result<bool, Error> {
    let collection = load(&input.input, input.format, input.ambiguous)?;
    if collection.total_length() > max_symbols {
        return Err(Error::Consistency(format!(
            "{} symbols exceed --max-oracle-symbols {max_symbols}",
            collection.total_length()
        )));
    }
    let mut got = build(&collection, &engine.config())?;
    if let Some(at) = corrupt_at {
        if let Some(b) = got.get_mut(at) {
            *b = if *b == b'A' { b'C' } else { b'A' };
        }
    }
    let expected = naive_bwt(&collection);
    let mut ok = true;
    match first_difference(&got, &expected) {
        None => println!("oracle comparison: PASS ({} symbols)", got.len()),
        Some(at) => {
            ok = false;
            println!("oracle comparison: FAIL at offset {at}");
        }
    }
    match invert(&got, collection.len()) {
        Ok(back) if back == collection => println!("inversion round trip: PASS"),
        Ok(_) => {
            ok = false;
            println!("inversion round trip: FAIL (words differ)");
        }
        Err(e) => {
            ok = false;
            println!("inversion round trip: FAIL ({e})");
        }
    }
    Ok(ok)
}

fn first_difference(a: &[u8], b: &[u8]) -> Option<usize> {
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(i) => Some(i),
        None if a.len() != b.len() => Some(a.len().min(b.len())),
        None => None,
    }
}

fn cmd_invert(input: &Path, output: &Path) -> Result<bool, Error> {
    let mut bwt = read_all(input)?;
    while bwt.last().is_some_and(|b| b.is_ascii_whitespace()) {
        bwt.pop();
    }
    let m = bwt.iter().filter(|&&b| b == b'$').count();
    let words = invert(&bwt, m)?;
    let mut out = open_output(output)?;
    words.write_raw_lines(&mut out)?;
    out.flush()?;
    Ok(true)
}

fn random_reads(bases: usize, len: usize, seed: u64) -> Result<WordCollection, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Vec<u8>> = (0..(bases / len).max(1))
        .map(|_| (0..len).map(|_| b"ACGT"[rng.gen_range(0..4)]).collect())
        .collect();
    WordCollection::from_words(words)
}

fn cmd_bench(
    input: Option<&Path>,
    synthetic_bases: usize,
    seed: u64,
    kappas: std::ops::RangeInclusive<u32>,
    engine: &EngineArgs,
    ambiguous: AmbiguousArg,
) -> Result<bool, Error> {
    let collection = match input {
        Some(path) => load(path, FormatArg::Auto, ambiguous)?,
        None => random_reads(synthetic_bases, 150, seed)?,
    };
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "kappa\tbuckets\tseconds\tio_in\tio_out\tio_total")?;
    for kappa in kappas {
        let config = Config {
            kappa,
            ..engine.config()
        };
        let report = build_to_writer(&collection, &config, io::sink(), &mut ())?;
        writeln!(
            stdout,
            "{kappa}\t{}\t{:.3}\t{}\t{}\t{}",
            report.buckets,
            report.elapsed.as_secs_f64(),
            report.bytes_read,
            report.bytes_written,
            report.bytes_read + report.bytes_written
        )?;
    }
    Ok(true)
}

fn cmd_selftest(
    collections: u32,
    seed: u64,
    max_words: usize,
    max_len: usize,
    engine: &EngineArgs,
) -> Result<bool, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = engine.config();
    let mut failures = 0u32;
    for i in 0..collections {
        let m = rng.gen_range(1..=max_words.max(1));
        let words: Vec<Vec<u8>> = (0..m)
            .map(|_| {
                let len = rng.gen_range(1..=max_len.max(1));
                (0..len).map(|_| b"ACGT"[rng.gen_range(0..4)]).collect()
            })
            .collect();
        let collection = WordCollection::from_words(words)?;
        let expected = naive_bwt(&collection);
        for kappa in 3..=8 {
            let got = build(&collection, &Config { kappa, ..base.clone() })?;
            if got != expected {
                failures += 1;
                println!(
                    "collection {i} kappa {kappa}: mismatch at offset {}",
                    first_difference(&got, &expected).unwrap_or(0)
                );
            } else if invert(&got, collection.len()).ok().as_ref() != Some(&collection) {
                failures += 1;
                println!("collection {i} kappa {kappa}: inversion failed");
            }
        }
    }
    let runs = collections as u64 * 6;
    if failures == 0 {
        println!("selftest: PASS ({collections} collections, {runs} builds)");
    } else {
        println!("selftest: FAIL ({failures} of {runs} builds)");
    }
    Ok(failures == 0)
}
