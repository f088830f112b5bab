//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use plumber_core::annotation::{normalize_literal, LinkedTriple, Object};
use plumber_core::builtin::default_registry;
use plumber_core::components::{ComponentMetadata, Registry, RemoteClient, Task};
use plumber_core::dataset::Example;
use plumber_core::evaluation::{
    attribute_errors, bucket_names, count_matches, evaluate_selector, format_attribution,
    microbench, score_triples, RunMatrix, Selection,
};
use plumber_core::fixtures::{dbpedia_kg, orkg_kg};
use plumber_core::kg::KnowledgeGraph;
use plumber_core::pipeline::{generate_pipelines, run_text, LinkingOption, PipelineConfig};
use plumber_core::selector::softmax::{fit, fit_normalizer, loss_and_gradient, normalize};
use plumber_core::selector::{
    cross_validate, extract_features, label_from_matrix, train_greedy_baseline, train_selector,
    Hyperparams, SoftmaxTrainer,
};
use plumber_core::text::Lexicons;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dataset, random_annotation_set, EchoServer};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    check(
        took < limit,
        format!(
            "{detail}; {:.2}s (limit {}s)",
            took.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn iri(s: &str) -> Object {
    Object::Iri(s.to_string())
}

fn rembrandt_gold() -> Vec<LinkedTriple> {
    vec![
        LinkedTriple::new(
            "dbr:Rembrandt",
            "dbo:Artist",
            iri("dbr:The_Storm_on_the_Sea_of_Galilee"),
        ),
        LinkedTriple::new(
            "dbr:The_Storm_on_the_Sea_of_Galilee",
            "dbp:year",
            Object::Literal(normalize_literal("1633")),
        ),
    ]
}

fn combinatorics() -> Outcome {
    let start = Instant::now();
    let reg = default_registry();
    let d = generate_pipelines(&reg, "dbpedia").map_err(|e| e.to_string())?;
    let o = generate_pipelines(&reg, "orkg").map_err(|e| e.to_string())?;
    let distinct: HashSet<&str> = d.iter().chain(&o).map(|c| c.id.as_str()).collect();
    let detail = format!(
        "dbpedia {}, orkg {}, distinct {}",
        d.len(),
        o.len(),
        distinct.len()
    );
    check(
        d.len() == 240 && o.len() == 24 && distinct.len() == 264,
        detail.clone(),
    )?;
    within(start, Duration::from_secs(1), detail)
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let reg = default_registry();
    let kg = dbpedia_kg();
    let ex = &dataset("rembrandt.jsonl")[0];
    let gold = ex.gold();
    let joint = LinkingOption::Joint("elrl_joint".into());
    let p3 = PipelineConfig::new(
        "dbpedia",
        "cr_pronoun_nearest",
        &["te_svo", "te_verb_prep_pattern"],
        joint.clone(),
    );
    let p1 = PipelineConfig::new(
        "dbpedia",
        "cr_identity",
        &["te_svo", "te_verb_prep_pattern"],
        joint,
    );
    let r3 = run_text(&reg, &p3, &ex.text, &kg).map_err(|e| e.to_string())?;
    let r1 = run_text(&reg, &p1, &ex.text, &kg).map_err(|e| e.to_string())?;
    let s3 = score_triples(&r3.linked_triples, &gold);
    let s1 = score_triples(&r1.linked_triples, &gold);
    let got: HashSet<&LinkedTriple> = r3.linked_triples.iter().collect();
    let want = rembrandt_gold();
    let detail = format!("multi-TE F1 {:.3}; cr_identity R {:.3}", s3.f1, s1.recall);
    let ok = got == want.iter().collect()
        && r3.linked_triples.len() == 2
        && gold == want
        && s3.f1 == 1.0
        && s1.recall == 0.5;
    check(ok, detail.clone())?;
    within(start, Duration::from_secs(1), detail)
}

fn orkg_example() -> Outcome {
    let start = Instant::now();
    let reg = default_registry();
    let kg = orkg_kg();
    let ex = &dataset("orkg-example.jsonl")[0];
    let cfg = generate_pipelines(&reg, "orkg")
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|c| c.cr == "cr_identity" && c.te == ["te_verb_prep_pattern"])
        .ok_or("no pattern pipeline in the orkg preset")?;
    let res = run_text(&reg, &cfg, &ex.text, &kg).map_err(|e| e.to_string())?;
    let want = vec![LinkedTriple::new(
        "orkg:R48100",
        "orkgp:P16022",
        Object::Literal(normalize_literal("\"2.68\"")),
    )];
    let got: Vec<String> = res
        .linked_triples
        .iter()
        .map(|t| {
            format!(
                "{} {} {}",
                t.subject_iri,
                t.predicate_iri,
                t.object.to_plain()
            )
        })
        .collect();
    let detail = format!("{:?} via {}", got, cfg.describe());
    check(
        res.linked_triples == want && ex.gold() == want,
        detail.clone(),
    )?;
    within(start, Duration::from_secs(1), detail)
}

fn brute_force(p: &[LinkedTriple], g: &[LinkedTriple]) -> (usize, usize, usize) {
    let mut ps: Vec<&LinkedTriple> = Vec::new();
    for t in p {
        if !ps.contains(&t) {
            ps.push(t);
        }
    }
    let mut gs: Vec<&LinkedTriple> = Vec::new();
    for t in g {
        if !gs.contains(&t) {
            gs.push(t);
        }
    }
    let mut correct = 0;
    for a in &ps {
        for b in &gs {
            if a == b {
                correct += 1;
            }
        }
    }
    (ps.len(), gs.len(), correct)
}

fn random_triples(rng: &mut ChaCha8Rng) -> Vec<LinkedTriple> {
    let n = rng.random_range(0..=10);
    (0..n)
        .map(|_| {
            let s = format!("dbr:E{}", rng.random_range(0..4));
            let p = format!("dbo:p{}", rng.random_range(0..3));
            let o = if rng.random_bool(0.5) {
                iri(&format!("dbr:E{}", rng.random_range(0..4)))
            } else {
                Object::Literal(normalize_literal(&format!(
                    "{}.{}",
                    rng.random_range(0..3),
                    rng.random_range(0..2) * 10
                )))
            };
            LinkedTriple::new(&s, &p, o)
        })
        .collect()
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..1000 {
        let p = random_triples(&mut rng);
        let g = random_triples(&mut rng);
        let c = count_matches(&p, &g);
        let (np, ng, nc) = brute_force(&p, &g);
        let s = score_triples(&p, &g);
        let prec = if np == 0 { 0.0 } else { nc as f64 / np as f64 };
        let rec = if ng == 0 { 0.0 } else { nc as f64 / ng as f64 };
        let f1 = if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
        if (c.predicted, c.gold, c.correct) != (np, ng, nc)
            || s.precision != prec
            || s.recall != rec
            || s.f1 != f1
        {
            return Err(format!("pair {i}: {c:?} vs brute force ({np}, {ng}, {nc})"));
        }
    }
    within(
        start,
        Duration::from_secs(5),
        "1000 random pairs equal".into(),
    )
}

struct Synthetic {
    reg: Registry,
    kg: KnowledgeGraph,
    data: Vec<Example>,
    pipelines: Vec<PipelineConfig>,
    matrix: RunMatrix,
}

/// Every dbpedia pipeline run on the synthetic dataset, shared by the
/// selector criteria.
fn synthetic() -> &'static Synthetic {
    static CELL: OnceLock<Synthetic> = OnceLock::new();
    CELL.get_or_init(|| {
        let reg = default_registry();
        let kg = dbpedia_kg();
        let data = dataset("synthetic-dbpedia.jsonl");
        let pipelines = generate_pipelines(&reg, "dbpedia").expect("preset pipelines");
        let matrix = RunMatrix::compute(&reg, &pipelines, &data, &kg);
        Synthetic {
            reg,
            kg,
            data,
            pipelines,
            matrix,
        }
    })
}

fn dynamic_beats_static() -> Outcome {
    let start = Instant::now();
    let Synthetic {
        reg,
        kg,
        data,
        pipelines,
        matrix,
    } = synthetic();
    let (reg, kg, data, pipelines) = (reg, kg, &data[..], &pipelines[..]);
    let (best, static_report) = matrix.best_static(data).ok_or("empty pool")?;
    let oracle = matrix.report_for("oracle", data, &matrix.oracle_choices());

    let examples = label_from_matrix(matrix, data);
    let hp = Hyperparams {
        seed: 42,
        ..Hyperparams::default()
    };
    let model = train_selector(&examples, &hp).map_err(|e| e.to_string())?;
    let again = train_selector(&examples, &hp).map_err(|e| e.to_string())?;
    let selector = evaluate_selector(reg, &Selection::Model(&model), pipelines, data, kg)
        .map_err(|e| e.to_string())?;
    let greedy_model = train_greedy_baseline(&examples, pipelines).map_err(|e| e.to_string())?;
    let greedy = evaluate_selector(reg, &Selection::Greedy(&greedy_model), pipelines, data, kg)
        .map_err(|e| e.to_string())?;

    let detail = format!(
        "{} sentences; static {:.4} ({}), oracle {:.4}, selector {:.4}, greedy {:.4}",
        data.len(),
        static_report.f1,
        pipelines[best].describe(),
        oracle.f1,
        selector.f1,
        greedy.f1
    );
    let ok = data.len() >= 200
        && oracle.f1 >= static_report.f1
        && selector.f1 - static_report.f1 >= 0.02
        && selector.f1 >= greedy.f1
        && model == again;
    check(ok, detail.clone())?;
    within(start, Duration::from_secs(120), detail)
}

fn selector_cv() -> Outcome {
    let s = synthetic();
    let examples = label_from_matrix(&s.matrix, &s.data);
    let trainer = SoftmaxTrainer {
        hyperparams: Hyperparams {
            seed: 42,
            ..Hyperparams::default()
        },
    };
    let a = cross_validate(&examples, 10, 42, &trainer).map_err(|e| e.to_string())?;
    let b = cross_validate(&examples, 10, 42, &trainer).map_err(|e| e.to_string())?;
    let m = &a.mean;
    check(
        m.precision >= 0.85 && m.recall >= 0.85 && m.f1 >= 0.85 && a == b,
        format!(
            "macro P {:.4} R {:.4} F1 {:.4}; repeat identical: {}",
            m.precision,
            m.recall,
            m.f1,
            a == b
        ),
    )
}

fn trainer_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.random_range(2..=5);
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=12);
        let l2 = rng.random_range(0.0..0.1);
        let w: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let (_, gw, gb) = loss_and_gradient(&w, &b, &x, &y, l2);
        let loss = |w: &[Vec<f64>], b: &[f64]| loss_and_gradient(w, b, &x, &y, l2).0;
        let rel = |a: f64, num: f64| (a - num).abs() / a.abs().max(num.abs()).max(1e-6);
        for c in 0..k {
            for j in 0..d {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[c][j] += h;
                wm[c][j] -= h;
                worst = worst.max(rel(gw[c][j], (loss(&wp, &b) - loss(&wm, &b)) / (2.0 * h)));
            }
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[c] += h;
            bm[c] -= h;
            worst = worst.max(rel(gb[c], (loss(&w, &bp) - loss(&w, &bm)) / (2.0 * h)));
        }
    }

    // Sentence features of the synthetic dataset, labeled by sentence class.
    let data = dataset("synthetic-dbpedia.jsonl");
    let labels: Vec<&str> = data
        .iter()
        .map(|e| e.id.split('-').next().unwrap_or(""))
        .collect();
    let mut classes: Vec<&str> = Vec::new();
    for l in &labels {
        if !classes.contains(l) {
            classes.push(l);
        }
    }
    let raw: Vec<Vec<f64>> = data
        .iter()
        .map(|e| extract_features(&e.text).as_slice().to_vec())
        .collect();
    let (means, stds) = fit_normalizer(&raw, raw[0].len());
    let xs: Vec<Vec<f64>> = raw.iter().map(|r| normalize(r, &means, &stds)).collect();
    let ys: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let hp = Hyperparams {
        learning_rate: 0.01,
        epochs: 300,
        ..Hyperparams::default()
    };
    let (_, _, history) = fit(&xs, &ys, classes.len(), &hp);
    let monotone = history.windows(2).all(|p| p[1] <= p[0]);
    let detail = format!(
        "max relative gradient error {worst:.2e}; loss {:.4} -> {:.4} over {} epochs, monotone {monotone}",
        history[0],
        history[history.len() - 1],
        history.len()
    );
    check(worst < 1e-4 && monotone, detail.clone())?;
    within(start, Duration::from_secs(10), detail)
}

fn error_attribution() -> Outcome {
    let reg = default_registry();
    let kg = dbpedia_kg();
    let data = dataset("microbench-30.jsonl");
    let pair = |el: &str, rl: &str| LinkingOption::Pair {
        el: el.into(),
        rl: rl.into(),
    };
    let cfg = PipelineConfig::new(
        "dbpedia",
        "cr_identity",
        &["te_svo"],
        pair("el_exact", "rl_dictionary"),
    );
    let a = attribute_errors(&reg, &cfg, &data, &kg).map_err(|e| e.to_string())?;
    let mut reversed = data.clone();
    reversed.reverse();
    let r = attribute_errors(&reg, &cfg, &reversed, &kg).map_err(|e| e.to_string())?;
    let sum: f64 = a.shares.values().sum();
    let pos: f64 = a.triple_position_shares.values().sum();

    let perfect_cfg = PipelineConfig::new(
        "dbpedia",
        "cr_pronoun_nearest",
        &["te_svo"],
        pair("el_exact", "rl_dictionary"),
    );
    let perfect = attribute_errors(&reg, &perfect_cfg, &dataset("rembrandt.jsonl"), &kg)
        .map_err(|e| e.to_string())?;
    let zero = perfect.shares.values().all(|v| *v == 0.0);

    let line = format_attribution(&a);
    let shape = line.starts_with("CR ")
        && [
            "TE ",
            "EL ",
            "RL ",
            "; subjects ",
            "predicates ",
            "objects ",
        ]
        .iter()
        .all(|k| line.contains(k))
        && line.matches('%').count() == 7;
    check(
        (sum - 1.0).abs() <= 1e-9
            && (pos - 1.0).abs() <= 1e-9
            && zero
            && shape
            && a.shares == r.shares,
        format!("{line}; all-perfect fixture zero: {zero}"),
    )
}

fn microbench_grid() -> Outcome {
    let reg = default_registry();
    let kg = dbpedia_kg();
    let lex = Lexicons::default();
    let data = dataset("microbench-30.jsonl");
    let mut notes = Vec::new();
    for task in [Task::Cr, Task::Te, Task::El, Task::Rl] {
        let mut ids: Vec<String> = reg
            .list(task, "dbpedia")
            .iter()
            .map(|m| m.id.clone())
            .collect();
        if task.is_linking() {
            ids.extend(reg.list(Task::ElRl, "dbpedia").iter().map(|m| m.id.clone()));
        }
        let a = microbench(&reg, task, &ids, &data, &kg, &lex).map_err(|e| e.to_string())?;
        let b = microbench(&reg, task, &ids, &data, &kg, &lex).map_err(|e| e.to_string())?;
        let cols = bucket_names(task).len();
        let complete = a.rows == ids
            && a.columns.len() == cols
            && a.cells.iter().all(|r| r.len() == cols)
            && a.to_csv().lines().count() == ids.len() + 1
            && a.to_csv().lines().all(|l| l.split(',').count() == cols + 1);
        if !complete || a.to_csv() != b.to_csv() || a.support_csv() != b.support_csv() {
            return Err(format!("{task} grid incomplete or non-deterministic"));
        }
        notes.push(format!("{task} {}x{}", ids.len(), cols));
        if task == Task::El {
            let low = a.cell("el_exact", "lowercase").unwrap_or(f64::NAN);
            let cap = a.cell("el_exact", "capitalized").unwrap_or(f64::NAN);
            notes.push(format!(
                "el_exact lowercase {low:.4} < capitalized {cap:.4}"
            ));
            if !(low < cap) {
                return Err(notes.join("; "));
            }
        }
    }
    Ok(notes.join("; "))
}

fn remote_round_trip() -> Outcome {
    let start = Instant::now();
    let served =
        ComponentMetadata::remote("te_echo", Task::Te, &["dbpedia", "orkg"], "http://loopback");
    let echo = EchoServer::start(served, Duration::ZERO);

    let mut reg = Registry::new();
    let declared = ComponentMetadata::remote("te_echo", Task::Te, &["dbpedia"], &echo.endpoint);
    reg.register_remote(declared)
        .map_err(|e| format!("registration failed: {e}"))?;
    let wrong_task = ComponentMetadata::remote("cr_echo", Task::Cr, &["dbpedia"], &echo.endpoint);
    let wrong_kg = ComponentMetadata::remote("te_echo2", Task::Te, &["wikidata"], &echo.endpoint);
    let rejected =
        reg.register_remote(wrong_task).is_err() && reg.register_remote(wrong_kg).is_err();

    let client = RemoteClient::new("te_echo", &echo.endpoint, 5_000);
    let kg = KnowledgeGraph::empty("dbpedia");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..100 {
        let sent = random_annotation_set(&mut rng, i);
        let back = client
            .annotate(&sent, &kg)
            .map_err(|e| format!("set {i}: {e}"))?;
        let (a, b) = (
            serde_json::to_string(&sent).unwrap(),
            serde_json::to_string(&back).unwrap(),
        );
        if a != b {
            return Err(format!("set {i} differs after the round trip"));
        }
    }
    check(
        rejected,
        format!("100 sets byte-identical; /meta validation rejects mismatches: {rejected}"),
    )?;
    within(
        start,
        Duration::from_secs(10),
        "100 sets byte-identical; /meta validated".into(),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("combinatorics", combinatorics),
        ("golden example", golden_example),
        ("orkg example", orkg_example),
        ("metric oracle equivalence", metric_oracle),
        ("dynamic > static", dynamic_beats_static),
        ("selector classification sanity", selector_cv),
        ("trainer correctness", trainer_correctness),
        ("error attribution", error_attribution),
        ("micro-benchmark grid", microbench_grid),
        ("remote protocol round-trip", remote_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
