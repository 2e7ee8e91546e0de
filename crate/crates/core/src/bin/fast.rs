use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fast_core::bench::{
    cost_model_report, gen_objects, gen_queries, load_objects, load_queries, run_sweep,
    run_workload, save_objects, save_queries, write_csv, BenchConfig, IndexKind, QueryItem, Sweep,
    WorkloadSpec,
};
use fast_core::index::{FastConfig, FastIndex};
use fast_core::oracle::{oracle_match, QueryCorpus};
use fast_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "fast",
    version,
    about = "Spatio-textual continuous query index"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Gaussian,
    /// Objects follow the query hot spot.
    SkewL,
    /// Objects are drawn away from the query hot spot.
    SkewO,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fast,
    Ril,
    Okt,
    Aki,
}

impl From<Kind> for IndexKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Fast => IndexKind::Fast,
            Kind::Ril => IndexKind::Ril,
            Kind::Okt => IndexKind::Okt,
            Kind::Aki => IndexKind::Aki,
        }
    }
}

#[derive(Args, Clone)]
struct IndexOpts {
    #[arg(long, default_value_t = 5)]
    theta: usize,
    #[arg(long, default_value_t = 512)]
    gran_max: u32,
    #[arg(long, default_value_t = 1000)]
    clean_interval: u64,
}

impl IndexOpts {
    fn config(&self) -> FastConfig {
        FastConfig {
            theta: self.theta,
            gran_max: self.gran_max,
            clean_interval: self.clean_interval,
            descent_trigger: None,
        }
    }
}

#[derive(Args, Clone)]
struct WorkloadOpts {
    #[arg(long, default_value_t = 5000)]
    queries: usize,
    #[arg(long, default_value_t = 1000)]
    objects: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Dist::Uniform)]
    dist: Dist,
    #[arg(long, default_value_t = 10_000)]
    vocab: u64,
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    #[arg(long, default_value_t = 3)]
    keywords: usize,
    #[arg(long, default_value_t = 8)]
    object_keywords: usize,
    /// Largest query side as a fraction of the space.
    #[arg(long, default_value_t = 0.01)]
    range: f64,
    /// Longest query lifetime in time units; unset means queries never expire.
    #[arg(long)]
    lifetime: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    dnf: f64,
    #[arg(long, default_value_t = 0.0)]
    rect: f64,
}

impl WorkloadOpts {
    fn spec(&self) -> WorkloadSpec {
        let base = WorkloadSpec {
            n_queries: self.queries,
            n_objects: self.objects,
            zipf_exponent: self.zipf,
            vocabulary_size: self.vocab,
            keywords_per_query: self.keywords,
            keywords_per_object: self.object_keywords,
            range_fraction: self.range,
            dnf_fraction: self.dnf,
            rect_object_fraction: self.rect,
            rng_seed: self.seed,
            ..Default::default()
        };
        let base = match self.lifetime {
            Some(l) => WorkloadSpec {
                lifetime: (1, l.max(1)),
                ..base
            },
            None => base,
        };
        match self.dist {
            Dist::Uniform => base,
            Dist::Gaussian => {
                let g = fast_core::bench::SpatialDist::Gaussian {
                    mean: (0.5, 0.5),
                    sigma: 0.15,
                };
                WorkloadSpec {
                    query_dist: g.clone(),
                    object_dist: g,
                    ..base
                }
            }
            Dist::SkewL => base.skewed(false),
            Dist::SkewO => base.skewed(true),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate query and object files.
    Gen {
        #[command(flatten)]
        workload: WorkloadOpts,
        #[arg(long, default_value = "queries.tsv")]
        out_queries: PathBuf,
        #[arg(long, default_value = "objects.tsv")]
        out_objects: PathBuf,
    },
    /// Build an index from a query file and print its structure counts.
    IngestQueries {
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        index: IndexOpts,
    },
    /// Match an object file against a query file, one result line per object.
    StreamObjects {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        objects: PathBuf,
        #[command(flatten)]
        index: IndexOpts,
        /// Fraction of objects re-checked by the brute-force matcher.
        #[arg(long, default_value_t = 0.01)]
        verify: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a generated workload, optionally sweeping one parameter, and write CSV.
    Bench {
        #[command(flatten)]
        workload: WorkloadOpts,
        #[command(flatten)]
        index_opts: IndexOpts,
        #[arg(long, value_enum, default_value_t = Kind::Fast)]
        index: Kind,
        /// `theta=1,2,5`, `gran_max=8,64` or `clean_interval=10,100`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        verify: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print cost-model predictions and measured counts as CSV.
    Costmodel {
        #[command(flatten)]
        workload: WorkloadOpts,
        #[command(flatten)]
        index: IndexOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn build(items: &[QueryItem], cfg: FastConfig) -> Result<FastIndex> {
    let mut idx = FastIndex::new(cfg)?;
    for q in items {
        match q {
            QueryItem::Plain(p) => idx.insert(p.clone()),
            QueryItem::Dnf(d) => idx.insert_dnf(d.clone()),
        }
        .with_context(|| format!("inserting query {}", q.qid()))?;
    }
    Ok(idx)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen {
            workload,
            out_queries,
            out_objects,
        } => {
            let spec = workload.spec();
            save_queries(&out_queries, &gen_queries(&spec)?)?;
            save_objects(&out_objects, &gen_objects(&spec)?)?;
            eprintln!(
                "wrote {} and {}",
                out_queries.display(),
                out_objects.display()
            );
        }
        Cmd::IngestQueries { queries, index } => {
            let items =
                load_queries(&queries).with_context(|| format!("reading {}", queries.display()))?;
            let idx = build(&items, index.config())?;
            let s = idx.stats();
            println!("queries\t{}", s.live_queries);
            println!("pyramid_nodes\t{}", s.pyramid_nodes);
            println!("textual_nodes\t{}", s.textual_nodes);
            println!("frequent_nodes\t{}", s.frequent_nodes);
            println!("list_entries\t{}", s.list_entries);
            println!("shared_lists\t{}", s.shared_lists);
            println!("descents\t{}", s.descents);
            println!("mean_replication\t{:.4}", s.mean_replication);
        }
        Cmd::StreamObjects {
            queries,
            objects,
            index,
            verify,
            seed,
            out,
        } => {
            let items =
                load_queries(&queries).with_context(|| format!("reading {}", queries.display()))?;
            let objs =
                load_objects(&objects).with_context(|| format!("reading {}", objects.display()))?;
            let mut idx = build(&items, index.config())?;
            let mut corpus = QueryCorpus::new();
            for q in &items {
                match q {
                    QueryItem::Plain(p) => corpus.add(p.clone()),
                    QueryItem::Dnf(d) => corpus.add_dnf(d.clone()),
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = output(&out)?;
            for o in &objs {
                idx.advance_clock(1);
                let got = idx.match_object(o);
                if rng.gen_bool(verify.clamp(0.0, 1.0)) {
                    let want = oracle_match(&corpus, o, idx.clock());
                    if want != got {
                        return Err(Error::OracleMismatch {
                            oid: o.oid,
                            index: got.ids(),
                            oracle: want.ids(),
                        }
                        .into());
                    }
                }
                let ids: Vec<String> = got.ids().iter().map(u64::to_string).collect();
                writeln!(w, "{}\t{}", o.oid, ids.join(" "))?;
            }
            w.flush()?;
        }
        Cmd::Bench {
            workload,
            index_opts,
            index,
            sweep,
            verify,
            out,
        } => {
            let spec = workload.spec();
            let cfg = BenchConfig {
                fast: index_opts.config(),
                oracle_sample: verify,
                seed: workload.seed,
            };
            let rows = match sweep {
                Some(s) => run_sweep(&spec, index.into(), &cfg, &Sweep::parse(&s)?)?,
                None => vec![run_workload(
                    &gen_queries(&spec)?,
                    &gen_objects(&spec)?,
                    index.into(),
                    &cfg,
                )?],
            };
            write_csv(output(&out)?, &rows)?;
        }
        Cmd::Costmodel {
            workload,
            index,
            out,
        } => {
            let spec = workload.spec();
            let rows = cost_model_report(
                &gen_queries(&spec)?,
                &gen_objects(&spec)?,
                index.theta,
                index.gran_max,
            )?;
            let mut w = csv::Writer::from_writer(output(&out)?);
            w.write_record(["metric", "value"])?;
            for (k, v) in rows {
                w.write_record([k, format!("{v:.6}")])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(
                e.downcast_ref::<Error>(),
                Some(Error::OracleMismatch { .. })
            ) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
