use std::fs;
use std::path::Path;

use dgff::hadamard::{dirichlet_gram, verify_hadamard_identity, verify_isometry};
use dgff::linalg::matrix_csv;
use dgff::operators::{green_variation, ClusterOperators};
use dgff::sampling::{grow_local, increment_local, white_noise_local};
use dgff::verify::{verify_family, VerifyConfig, SCHEMA};
use dgff::{Error, Execution, Foliation, GaussianStream, Graph, HadamardFamily, Result};
use serde_json::{json, Value};

use crate::{Input, MatrixArgs, OutputFormat, SampleArgs, VerifyArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        e if e.is_input_error() => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    }
}

pub fn print_error(err: &Error) {
    let doc = json!({
        "schema": SCHEMA,
        "ok": false,
        "code": err.code(),
        "message": err.to_string(),
    });
    println!("{doc}");
}

fn print(doc: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(doc).expect("JSON values serialize")
    );
}

fn load(input: &Input) -> Result<(Graph, Foliation)> {
    let graph = if input.unchecked {
        Graph::from_path_unchecked(&input.graph)?
    } else {
        Graph::from_path(&input.graph)?
    };
    let foliation = match (&input.foliation, input.roots.is_empty()) {
        (Some(path), _) if input.unchecked => Foliation::from_path_unchecked(&graph, path)?,
        (Some(path), _) => Foliation::from_path(&graph, path)?,
        (None, false) => Foliation::bfs(&graph, &input.roots)?,
        (None, true) => {
            return Err(Error::InvalidArgument(
                "either --foliation or --roots is required".into(),
            ))
        }
    };
    Ok((graph, foliation))
}

fn cluster_index(foliation: &Foliation, cluster: Option<usize>) -> Result<usize> {
    let n = cluster.unwrap_or(foliation.depth());
    if n > foliation.depth() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: foliation.depth(),
        });
    }
    Ok(n)
}

fn ids<'a>(g: &'a Graph, vertices: &[usize]) -> Vec<&'a str> {
    vertices.iter().map(|&x| g.id(x)).collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn validate(input: &Input) -> Result<u8> {
    let (g, f) = load(input)?;
    print(&json!({
        "schema": SCHEMA,
        "ok": true,
        "code": "Ok",
        "message": "graph and foliation are valid",
        "vertices": g.n_vertices(),
        "exterior": g.exterior().len(),
        "edges": g.n_edges(),
        "depth": f.depth(),
        "layer_sizes": f.layers().iter().map(Vec::len).collect::<Vec<_>>(),
    }));
    Ok(EXIT_OK)
}

pub fn foliate(input: &Input, out: Option<&Path>) -> Result<u8> {
    if input.roots.is_empty() {
        return Err(Error::InvalidArgument("foliate needs --roots".into()));
    }
    let (g, f) = load(input)?;
    let doc = f.to_json(&g);
    match out {
        Some(dir) => write(dir, "foliation.json", &serde_json::to_string_pretty(&doc)?)?,
        None => print(&doc),
    }
    Ok(EXIT_OK)
}

/// Print or write one labelled matrix.
fn emit_matrix(
    args: &MatrixArgs,
    name: &str,
    n: usize,
    rows: &[&str],
    cols: &[&str],
    m: &dgff::Matrix,
) -> Result<()> {
    let csv = matrix_csv(rows, cols, m);
    let doc = json!({
        "schema": SCHEMA,
        "cluster": n,
        "rows": rows,
        "columns": cols,
        "matrix": m,
    });
    match (&args.out, args.format) {
        (Some(dir), OutputFormat::Csv) => write(dir, &format!("{name}.csv"), &csv),
        (Some(dir), OutputFormat::Json) => write(
            dir,
            &format!("{name}.json"),
            &serde_json::to_string_pretty(&doc)?,
        ),
        (None, OutputFormat::Csv) => {
            print!("{csv}");
            Ok(())
        }
        (None, OutputFormat::Json) => {
            print(&doc);
            Ok(())
        }
    }
}

pub fn green(args: &MatrixArgs) -> Result<u8> {
    let (g, f) = load(&args.input)?;
    let n = cluster_index(&f, args.cluster)?;
    let ops = ClusterOperators::build(&g, &f, n, Execution::default())?;
    let labels = ids(&g, ops.cluster.vertices());
    emit_matrix(args, "green", n, &labels, &labels, &ops.green.normalized)?;
    Ok(EXIT_OK)
}

pub fn poisson(args: &MatrixArgs) -> Result<u8> {
    let (g, f) = load(&args.input)?;
    let n = cluster_index(&f, args.cluster)?;
    let ops = ClusterOperators::build(&g, &f, n, Execution::default())?;
    let rows = ids(&g, ops.cluster.vertices());
    let cols = ids(&g, ops.cluster.top_layer());
    emit_matrix(args, "poisson", n, &rows, &cols, &ops.poisson.matrix)?;
    Ok(EXIT_OK)
}

pub fn hadamard(args: &MatrixArgs) -> Result<u8> {
    let (g, f) = load(&args.input)?;
    let n = cluster_index(&f, args.cluster)?;
    let fam = HadamardFamily::build_to(&g, &f, n, Execution::default())?;
    let q = &fam.q[n];
    let cluster = fam.cluster(n);
    let labels = ids(&g, cluster.vertices());
    let qqt = q.matrix.matmul(&q.matrix.transpose());
    let gram = dirichlet_gram(q, &g, cluster);
    let variation = (1..=n)
        .map(|k| {
            green_variation(&fam.operators[k], &fam.operators[k - 1])
                .0
                .relative()
        })
        .fold(0.0, f64::max);
    let summary = json!({
        "schema": SCHEMA,
        "cluster": n,
        "identity_residual": verify_hadamard_identity(q, fam.green(n)).relative(),
        "isometry_residual": verify_isometry(q, &g, cluster).relative(),
        "variation_residual": variation,
    });
    if let Some(dir) = &args.out {
        write(dir, "q.csv", &matrix_csv(&labels, &labels, &q.matrix))?;
        write(dir, "qqt.csv", &matrix_csv(&labels, &labels, &qqt))?;
        write(dir, "gram.csv", &matrix_csv(&labels, &labels, &gram))?;
        write(
            dir,
            "summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?;
    } else if args.format == OutputFormat::Csv {
        print!("{}", matrix_csv(&labels, &labels, &q.matrix));
        return Ok(EXIT_OK);
    }
    print(&summary);
    Ok(EXIT_OK)
}

/// One CSV per sample: rows over `Γ_N`, columns `Ψ_0..Ψ_N` and the
/// increments `Ψ_n - Ψ_{n-1}`, plus a manifest.
pub fn sample(args: &SampleArgs) -> Result<u8> {
    let (g, f) = load(&args.input)?;
    let fam = HadamardFamily::build(&g, &f, Execution::default())?;
    let top = fam.depth();
    let stream = GaussianStream::new(args.seed);
    let vertices = fam.cluster(top).vertices().to_vec();
    let mut files = Vec::new();
    for t in 0..args.n_samples {
        let phi = white_noise_local(&fam, &stream, t);
        let psi: Vec<Vec<f64>> = (0..=top).map(|n| grow_local(&fam, &phi, n)).collect();
        let inc: Vec<Vec<f64>> = (1..=top).map(|n| increment_local(&fam, &phi, n)).collect();
        let mut csv = String::from("vertex");
        for n in 0..=top {
            csv.push_str(&format!(",psi_{n}"));
        }
        for n in 1..=top {
            csv.push_str(&format!(",inc_{n}"));
        }
        csv.push('\n');
        for (i, &x) in vertices.iter().enumerate() {
            csv.push_str(g.id(x));
            for col in psi.iter().chain(&inc) {
                csv.push_str(&format!(",{:.16e}", col.get(i).copied().unwrap_or(0.0)));
            }
            csv.push('\n');
        }
        let name = format!("sample_{t:04}.csv");
        write(&args.out, &name, &csv)?;
        files.push(name);
    }
    let manifest = json!({
        "schema": SCHEMA,
        "seed": args.seed,
        "n_samples": args.n_samples,
        "depth": top,
        "graph": args.input.graph.display().to_string(),
        "vertices": ids(&g, &vertices),
        "files": files,
    });
    write(
        &args.out,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    print(&manifest);
    Ok(EXIT_OK)
}

pub fn verify(args: &VerifyArgs) -> Result<u8> {
    let (g, f) = load(&args.input)?;
    let n = cluster_index(&f, args.cluster)?;
    let cfg = VerifyConfig {
        seed: args.seed,
        trials: args.trials as usize,
        tol_exact: args.tol_exact,
        z_max: args.z_max,
        cluster: Some(n),
        monte_carlo: !args.skip_monte_carlo,
        ..VerifyConfig::default()
    };
    let fam = HadamardFamily::build_to(&g, &f, n, cfg.exec)?;
    let report = verify_family(&fam, &cfg);
    let doc = serde_json::to_value(&report)?;
    if let Some(dir) = &args.out {
        write(dir, "report.json", &serde_json::to_string_pretty(&doc)?)?;
    }
    print(&doc);
    Ok(if report.all_passed {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}
