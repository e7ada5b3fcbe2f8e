use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use unisym_client::Client;
use unisym_core::api::*;
use unisym_core::bench::{BenchmarkProblem, Method, PipelineConfig, ProposerSpec};
use unisym_core::Dataset;

/// Command-line front end of the UniSymNet service.
#[derive(Parser)]
#[command(name = "unisym", version)]
struct Cli {
    /// Service root URL.
    #[arg(long, global = true, env = "UNISYM_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    /// Print the raw JSON response.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Small,
    Large,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a CSV dataset with header x0,...,x{d-1},y.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// 1: exponent search, 2: network with pruning, 3: network without pruning.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        method: u8,
        /// `enum`, `random`, or `remote ENDPOINT`.
        #[arg(long, num_args = 1..=2, default_values = ["enum"])]
        proposer: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        time_budget: Option<f64>,
        /// Candidate structures to request.
        #[arg(long)]
        candidates: Option<usize>,
    },
    /// Run a benchmark suite and print its summary table.
    Bench {
        /// Family name (nguyen, nguyen-c, constant, r, koza, livermore, keijzer, jin) or `all`.
        #[arg(long, default_value = "nguyen")]
        suite: String,
        /// JSON list of problems, overriding `--suite`.
        #[arg(long)]
        suite_file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        method: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        time_budget: Option<f64>,
        /// Also write the summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the markdown report.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    /// Check the depth and node-count comparison for d in 2..=10, K in 1..=5.
    TheoryCheck,
    /// Compare tree and network complexity of random expressions.
    ComplexityCompare {
        /// `2..6`, `2..=6` or `2,3,4`.
        #[arg(long, default_value = "2..6")]
        dims: String,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a training corpus on the server's filesystem.
    GenData {
        #[arg(long, value_enum, default_value = "small")]
        dim_preset: Preset,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        shard_size: usize,
    },
    /// Identify an expression's structure and print its label.
    Encode {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        d0: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
}

/// Inclusive range of dimensions. `a..b` is read inclusively, as in `2..6`.
fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad dimension `{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

fn proposer_spec(args: &[String], seed: u64) -> Result<ProposerSpec, String> {
    match args {
        [k] if k == "enum" => Ok(ProposerSpec::Enum),
        [k] if k == "random" => Ok(ProposerSpec::Random { seed }),
        [k, ep] if k == "remote" => Ok(ProposerSpec::Remote { endpoint: ep.clone() }),
        [k] if k == "remote" => Err("`--proposer remote` needs an endpoint".into()),
        _ => Err(format!("unknown proposer `{}`", args.join(" "))),
    }
}

fn pipeline(method: u8, proposer: ProposerSpec, seed: u64, budget: Option<f64>) -> PipelineConfig {
    let base = PipelineConfig::default();
    PipelineConfig {
        method: Method::from_number(method).expect("validated by clap"),
        proposer,
        seed,
        time_budget_s: budget.unwrap_or(base.time_budget_s),
        ..base
    }
}

fn print<T: serde::Serialize>(json: bool, value: &T, human: impl FnOnce(&T) -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("response serializes"));
    } else {
        print!("{}", human(value));
    }
}

async fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let client = Client::new(&cli.server);
    let json = cli.json;
    match cli.cmd {
        Cmd::Fit { data, method, proposer, seed, time_budget, candidates } => {
            let dataset = Dataset::read_csv(std::fs::File::open(&data)?)?;
            let mut config = pipeline(method, proposer_spec(&proposer, seed)?, seed, time_budget);
            if let Some(k) = candidates {
                config.candidates = k;
            }
            let r = client.fit(&FitRequest { data: dataset, config }).await?;
            print(json, &r, |r| {
                let o = &r.outcome;
                let r2 = o.train_r2.map_or("n/a".into(), |v| format!("{v:.9}"));
                let mut s = format!("expression: {}\ntrain R2:   {r2}\ncomplexity: {}\n", r.pretty, r.complexity);
                if let Some(l) = &o.label {
                    s += &format!("label:      {l}\n");
                }
                s += &format!(
                    "candidates: {} via {} / {}\ntime:       {:.2}s{}\n",
                    o.candidates_tried,
                    o.proposer,
                    o.optimizer,
                    o.wall_s,
                    if o.incomplete { " (budget exhausted, best so far)" } else { "" }
                );
                if o.degenerate {
                    s += "note: targets are constant; no structure fitted\n";
                }
                s
            });
        }
        Cmd::Bench { suite, suite_file, noise, method, seed, time_budget, csv, markdown } => {
            let problems: Option<Vec<BenchmarkProblem>> = match suite_file {
                Some(p) => Some(serde_json::from_reader(std::fs::File::open(p)?)?),
                None => None,
            };
            let config = pipeline(method, ProposerSpec::Enum, seed, time_budget);
            let r = client.bench(&BenchRequest { suite: Some(suite), problems, noise, config }).await?;
            if let Some(p) = csv {
                std::fs::write(p, &r.csv)?;
            }
            if let Some(p) = markdown {
                std::fs::write(p, &r.markdown)?;
            }
            print(json, &r, |r| r.markdown.clone());
        }
        Cmd::TheoryCheck => {
            let r = client.theory_check().await?;
            print(json, &r, |r| {
                let mut s = String::from("  d  K  L1 L2  N1 N2(stated) N2(full)  ok\n");
                for c in &r.report.cells {
                    let k = &c.counts;
                    s += &format!(
                        "{:>3} {:>2} {:>3} {:>2} {:>3} {:>10} {:>8}  {}\n",
                        c.d,
                        c.k,
                        k.l1,
                        k.l2,
                        k.n1,
                        k.n2,
                        k.n2_full,
                        if c.pass() { "pass" } else { "FAIL" }
                    );
                }
                for b in r.report.lemma.iter().filter(|b| b.k == 2) {
                    s += &format!("lemma d={:>2}: {} {}\n", b.d, b.branch, if b.holds { "holds" } else { "FAILS" });
                }
                s += &format!("overall: {}\n", if r.pass { "pass" } else { "FAIL" });
                for f in &r.failures {
                    s += &format!("counterexample: {f}\n");
                }
                s
            });
            if !r.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::ComplexityCompare { dims, count, seed } => {
            let dims = parse_dims(&dims)?;
            let r = client.complexity_compare(&ComplexityRequest { dims, count, seed, generator: None }).await?;
            print(json, &r, |r| {
                let mut s = String::from(" d  count  mean C_tree  mean C_net      gap\n");
                for row in &r.rows {
                    s += &format!(
                        "{:>2} {:>6} {:>12.2} {:>11.2} {:>8.2}\n",
                        row.d,
                        row.count,
                        row.mean_c_tree,
                        row.mean_c_net,
                        row.gap()
                    );
                }
                s += &format!(
                    "network never worse: {}; gap non-decreasing on {}/{} steps\n",
                    r.net_not_worse, r.nondecreasing_steps, r.steps
                );
                s
            });
        }
        Cmd::GenData { dim_preset, count, seed, out, shard_size } => {
            let out = std::path::absolute(out)?;
            let preset = match dim_preset {
                Preset::Small => DimPreset::Small,
                Preset::Large => DimPreset::Large,
            };
            let req = GenDataRequest { preset, count, seed, shard_size, out: out.display().to_string() };
            let r = client.gen_data(&req).await?;
            print(json, &r, |r| {
                let s = &r.summary;
                format!(
                    "wrote {} samples in {} shards ({} reused); rejections {:?}\nmanifest: {}\n",
                    s.count,
                    s.shards,
                    s.reused,
                    s.rejections,
                    s.manifest.display()
                )
            });
        }
        Cmd::Encode { expr, d0, m } => {
            let r = client.encode(&EncodeRequest { expr, d0, m }).await?;
            print(json, &r, |r| {
                format!(
                    "label:    {}\ndepth:    {}\nskeleton: {}\nm={} d0={}\n",
                    r.text, r.depth, r.skeleton, r.m, r.d0
                )
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("unisym: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        assert_eq!(parse_dims("2..6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_dims("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_dims("4,2").unwrap(), vec![4, 2]);
        assert!(parse_dims("6..2").is_err());
    }

    #[test]
    fn proposers() {
        assert_eq!(proposer_spec(&["random".into()], 3).unwrap(), ProposerSpec::Random { seed: 3 });
        let r = proposer_spec(&["remote".into(), "tcp://h:1".into()], 0).unwrap();
        assert_eq!(r, ProposerSpec::Remote { endpoint: "tcp://h:1".into() });
        assert!(proposer_spec(&["remote".into()], 0).is_err());
    }
}
