//! The acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p ontotrader-cli --test acceptance -- --nocapture` to see
//! the report.

#[path = "../../core/tests/support/legality.rs"]
mod legality;
#[path = "../../core/tests/support/mutations.rs"]
mod mutations;
#[path = "../../core/tests/support/store_oracle.rs"]
mod store_oracle;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use ontotrader_config::codegen::generate;
use ontotrader_config::dsl::{is_keyword, link, parse, parse_source, PackageModel};
use ontotrader_core::model::samples::soleres_system;
use ontotrader_core::model::{validate_system, ModuleRef, SystemModel, TradingModuleSpec};
use ontotrader_core::ontomsg::{
    AdminAction, AdminConcepts, Body, Envelope, Mode, Offer, QueryForm, QueryType, RegisterAction,
    Speech,
};
use ontotrader_core::routing::{check_conformance, RuntimeConfig, System, TraceStep};
use ontotrader_core::store::{evaluate, Condition, Document, Level, Op, QueryBody};
use ontotrader_core::trader::{InterfaceFlags, NoForwarding, Trader};
use proptest::test_runner::{Config, TestRunner};

const PM: &str = "Node_1.ProcessingModule_1_1";

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_paths() -> Vec<PathBuf> {
    [
        "architecture.config",
        "repository.config",
        "configuration.config",
    ]
    .iter()
    .map(|f| root().join("fixtures/soleres").join(f))
    .collect()
}

fn fixtures() -> Vec<PackageModel> {
    fixture_paths()
        .iter()
        .map(|p| parse_source(&p.display().to_string(), &fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontotrader"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Trace steps of every system run here, checked together at the end.
#[derive(Default)]
struct Captured(Vec<(SystemModel, Vec<TraceStep>)>);

impl Captured {
    fn keep(&mut self, sys: &System) {
        self.0.push((sys.model().clone(), sys.trace().steps()));
    }

    fn keep_file(&mut self, model: &SystemModel, path: &Path) {
        let text = fs::read_to_string(path).unwrap();
        let steps = text.lines().map(|l| l.parse().unwrap()).collect();
        self.0.push((model.clone(), steps));
    }
}

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_parse() -> Outcome {
    for p in fixture_paths() {
        let text = fs::read_to_string(&p).unwrap();
        check(
            parse(&text).is_ok(),
            format!("{} does not parse cleanly", p.display()),
        )?;
    }
    let mut mutations = 0;
    for p in fixture_paths() {
        let text = fs::read_to_string(&p).unwrap();
        let mut in_string = false;
        let mut start = None;
        for (i, c) in text.char_indices().chain([(text.len(), ' ')]) {
            if c == '"' {
                in_string = !in_string;
            }
            let word = !in_string && (c.is_ascii_alphanumeric() || c == '_');
            match (start, word) {
                (None, true) => start = Some(i),
                (Some(s), false) => {
                    let kw = &text[s..i];
                    if is_keyword(kw) {
                        let mut flipped: Vec<char> = kw.chars().collect();
                        flipped[0] = if flipped[0].is_uppercase() {
                            flipped[0].to_ascii_lowercase()
                        } else {
                            flipped[0].to_ascii_uppercase()
                        };
                        let flipped: String = flipped.into_iter().collect();
                        for v in [format!("{kw}x"), kw[..kw.len() - 1].to_string(), flipped] {
                            let m = format!("{}{v}{}", &text[..s], &text[i..]);
                            check(
                                parse(&m).is_err(),
                                format!("`{kw}` -> `{v}` at byte {s} accepted"),
                            )?;
                            mutations += 1;
                        }
                    }
                    start = None;
                }
                _ => {}
            }
        }
    }
    Ok(format!(
        "3 fixtures clean; {mutations} keyword mutations all diagnosed"
    ))
}

fn golden_generation(tmp: &Path) -> Outcome {
    let files =
        generate(&link(&fixtures()).map_err(|d| format!("{d:?}"))?).map_err(|e| e.to_string())?;
    let golden = root().join("crates/config/tests/golden");
    for f in &files.files {
        let want = fs::read(golden.join(&f.path)).map_err(|e| format!("{}: {e}", f.path))?;
        check(
            f.content == want,
            format!("{} differs from its golden file", f.path),
        )?;
    }
    let script = String::from_utf8(files.get("make.sh").unwrap().content.clone()).unwrap();
    check(
        script.lines().count() == 27 && script.starts_with("#!/bin/bash\n"),
        "make.sh is not 27 lines with shebang",
    )?;
    let node1 = String::from_utf8(
        files
            .get("SOLERES_KRS/Node_1/TKRS.java")
            .unwrap()
            .content
            .clone(),
    )
    .unwrap();
    for needle in [
        "this.ip = \"192.168.1.11\";",
        "this.port = 1099;",
        "this.dbport = 3306;",
    ] {
        check(
            node1.contains(needle),
            format!("Node_1 scaffold lacks `{needle}`"),
        )?;
    }
    let fields = node1
        .lines()
        .filter(|l| l.contains("Module ") && l.trim_start().starts_with("private"))
        .count();
    check(
        fields == 5,
        format!("Node_1 scaffold has {fields} module fields"),
    )?;

    let out = tmp.join("generated");
    let mut args = vec!["generate".to_string()];
    args.extend(fixture_paths().iter().map(|p| p.display().to_string()));
    args.extend(["-o".into(), out.display().to_string()]);
    let o = cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    check(
        o.status.code() == Some(0),
        format!("generate exited {:?}", o.status.code()),
    )?;
    for f in &files.files {
        check(
            fs::read(out.join(&f.path)).ok().as_ref() == Some(&f.content),
            format!("CLI wrote a different {}", f.path),
        )?;
    }
    Ok(format!(
        "{} files byte-identical to the golden set, via library and CLI",
        files.files.len()
    ))
}

fn constraint_suite() -> Outcome {
    check(
        validate_system(&soleres_system()).is_clean(),
        "SOLERES does not validate clean",
    )?;
    for (what, mutate, expected) in mutations::MUTATIONS {
        let mut s = soleres_system();
        mutate(&mut s);
        let got = validate_system(&s).rules();
        let want: BTreeSet<&str> = expected.iter().copied().collect();
        check(
            got == want,
            format!("{what}: expected {want:?}, got {got:?}"),
        )?;
    }
    Ok(format!(
        "clean baseline; {} seeded mutations each yield their rule ids",
        mutations::MUTATIONS.len()
    ))
}

fn protocol_legality() -> Outcome {
    let table = legality::strict_table();
    let (accepted, disagreements) = legality::enumerate(Mode::Strict, &table);
    check(
        disagreements.is_empty(),
        format!("strict: {disagreements:?}"),
    )?;
    check(
        accepted == table.len(),
        format!("strict accepted {accepted} of {}", table.len()),
    )?;
    let mut lenient = table.clone();
    lenient.extend(legality::lenient_additions());
    let (accepted_default, disagreements) = legality::enumerate(Mode::Default, &lenient);
    check(
        disagreements.is_empty(),
        format!("default: {disagreements:?}"),
    )?;
    Ok(format!(
        "strict mode accepts exactly the {accepted} tabled shapes; default mode adds {} documented ones; no cross-ontology pair accepted",
        accepted_default - accepted
    ))
}

fn store_oracle() -> Outcome {
    use proptest::prelude::*;
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        store_oracle::arb_docs(),
        store_oracle::arb_query(),
        0usize..25,
        any::<bool>(),
    );
    runner
        .run(&strategy, |(docs, q, card, exact)| {
            let repo = store_oracle::repo_of(&docs);
            let policies = ontotrader_core::store::EffectivePolicies {
                cardinality: card,
                exact,
            };
            let got = store_oracle::as_pairs(evaluate(&repo, &q, policies));
            prop_assert_eq!(got, store_oracle::oracle::evaluate(&docs, &q, card, exact));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("200 random repositories x queries x policies equal the brute-force oracle".into())
}

fn trader_semantics() -> Outcome {
    let t = Trader::new("T", InterfaceFlags::all());
    let send = |body: Body| {
        t.handle(
            &Envelope::new("c", "Node_1.ProcessingModule_1_1", "T", body),
            &NoForwarding,
        )
    };
    let doc = Document::new("", Level::MetaMeta)
        .with("crop", "olive")
        .with("hectares", 4);
    let exported = send(Body::register(
        RegisterAction::Export,
        None,
        Some(Offer::inline(doc.clone())),
    ));
    let Body::Register(Speech::Predicate { concepts, .. }) = &exported.body else {
        return Err("no export reply".into());
    };
    let id = concepts
        .offer_id
        .clone()
        .ok_or("ExportedOffer without id")?;
    let described = send(Body::register(
        RegisterAction::Describe,
        Some(id.clone()),
        None,
    ));
    let Body::Register(Speech::Predicate { concepts, .. }) = &described.body else {
        return Err("no describe reply".into());
    };
    let back = concepts
        .offer
        .as_ref()
        .and_then(|o| o.document.clone())
        .ok_or("DescribedOffer without offer")?;
    check(
        back.fields == doc.fields,
        "describe does not return the exported document",
    )?;

    let named = Document::new("fixed", Level::MetaMeta).with("crop", "olive");
    send(Body::register(
        RegisterAction::Export,
        None,
        Some(Offer::inline(named.clone())),
    ));
    let again = send(Body::register(
        RegisterAction::Export,
        None,
        Some(Offer::inline(named)),
    ));
    check(
        again.body.name() == "DuplicateOffer",
        format!("double export gave {}", again.body.name()),
    )?;

    send(Body::register(
        RegisterAction::Withdraw,
        Some(id.clone()),
        None,
    ));
    let gone = send(Body::register(RegisterAction::Describe, Some(id), None));
    check(
        gone.body.name() == "UnknownOfferId",
        format!("describe after withdraw gave {}", gone.body.name()),
    )?;

    let set = |action, c| send(Body::admin(action, c));
    let get = |action| match send(Body::admin(action, AdminConcepts::default())).body {
        Body::Admin(Speech::Predicate { concepts, .. }) => concepts,
        _ => AdminConcepts::default(),
    };
    set(
        AdminAction::SetMaxSearchCard,
        AdminConcepts {
            max: Some(40),
            ..Default::default()
        },
    );
    set(
        AdminAction::SetDefSearchCard,
        AdminConcepts {
            def: Some(7),
            ..Default::default()
        },
    );
    set(
        AdminAction::SetOfferRepos,
        AdminConcepts {
            offer_repos: Some("/srv/offers".into()),
            ..Default::default()
        },
    );
    check(
        get(AdminAction::GetMaxSearchCard).max == Some(40),
        "max_search_card not read back",
    )?;
    check(
        get(AdminAction::GetDefSearchCard).def == Some(7),
        "def_search_card not read back",
    )?;
    check(
        get(AdminAction::GetOfferRepos).offer_repos.as_deref() == Some("/srv/offers"),
        "offer_repos not read back",
    )?;
    let over = set(
        AdminAction::SetDefSearchCard,
        AdminConcepts {
            def: Some(41),
            ..Default::default()
        },
    );
    check(
        over.body.name() == "InvalidValue",
        format!("def > max gave {}", over.body.name()),
    )?;
    check(t.def_search_card() == 7, "rejected value was applied")?;
    Ok("export/describe identity, DuplicateOffer, UnknownOfferId after withdraw, 3 admin round trips, def>max refused".into())
}

fn olive_form(t: QueryType) -> QueryForm {
    QueryForm::inline(
        "q",
        t,
        QueryBody::new(vec![Condition::new("crop", Op::Eq, "olive")]),
    )
}

fn touched(steps: &[TraceStep], kind: &str) -> BTreeSet<String> {
    steps
        .iter()
        .flat_map(|s| [&s.from, &s.to])
        .filter(|a| a.contains(kind))
        .cloned()
        .collect()
}

fn routing_scenarios(captured: &mut Captured) -> Outcome {
    let config = RuntimeConfig {
        indexed: [(PM.to_string(), vec!["crop".to_string()])].into(),
        timeout: Duration::from_secs(2),
        ..Default::default()
    };
    let sys = System::start(&soleres_system(), config).map_err(|e| e.to_string())?;
    let docs = [("olive", 12), ("olive", 3), ("almond", 8)].map(|(c, h)| {
        Document::new("", Level::Meta)
            .with("crop", c)
            .with("hectares", h)
    });
    sys.seed(PM, docs.to_vec()).map_err(|e| e.to_string())?;

    let run = |node: &str, t: QueryType| -> Result<(String, Vec<TraceStep>), String> {
        let r = sys
            .query(node, olive_form(t), None)
            .map_err(|e| e.to_string())?;
        Ok((r.body.name().to_string(), sys.trace().conversation(&r.cid)))
    };
    let (p, steps) = run("Node_2", QueryType::MetaMeta)?;
    check(p == "NotEmptyOfferSeq", format!("reflection answered {p}"))?;
    check(
        touched(&steps, "ProcessingModule").is_empty(),
        "reflection trace names a processing module",
    )?;

    let (p, steps) = run("Node_3", QueryType::Meta)?;
    check(p == "NotEmptyOfferSeq", format!("delegation answered {p}"))?;
    check(
        !touched(&steps, "ProcessingModule").is_empty(),
        "delegation trace names no processing module",
    )?;

    // Node_1's trader holds nothing; the records sit behind its federation edge.
    let (p, steps) = run("Node_1", QueryType::MetaMeta)?;
    check(
        p == "NotEmptyOfferSeq",
        format!("federated query answered {p}"),
    )?;
    let traders = touched(&steps, "TradingModule");
    check(
        traders.len() == 2,
        format!("federated trace names traders {traders:?}"),
    )?;
    captured.keep(&sys);

    let mut a = TradingModuleSpec::new("TA");
    let mut b = TradingModuleSpec::new("TB");
    (a.link, b.link) = (true, true);
    a.federated_with.push(ModuleRef::new("B.TB"));
    b.federated_with.push(ModuleRef::new("A.TA"));
    let ring = |name: &str, t: TradingModuleSpec| {
        let mut n = soleres_system().nodes[1].clone();
        n.name = name.into();
        n.query_modules[0].uses_lookup = ModuleRef::new(t.name.clone());
        n.trading_modules = vec![t];
        n
    };
    let model = SystemModel {
        name: "Ring".into(),
        nodes: vec![ring("A", a), ring("B", b)],
    };
    let ring_sys = System::start(&model, RuntimeConfig::default()).map_err(|e| e.to_string())?;
    let r = ring_sys
        .query("A", olive_form(QueryType::MetaMeta), None)
        .map_err(|e| e.to_string())?;
    let evaluations = (
        ring_sys.trader("A.TA").unwrap().evaluations(),
        ring_sys.trader("B.TB").unwrap().evaluations(),
    );
    check(
        evaluations == (1, 1),
        format!("ring evaluations {evaluations:?}, answer {}", r.body.name()),
    )?;
    captured.keep(&ring_sys);
    Ok("reflection skips processing; delegation reaches it; federated answer names 2 traders; ring evaluates each trader once".into())
}

const SCRIPT: &str = "\
export Node_1.ProcessingModule_1_1 docs/olive20.json
export Node_1.ProcessingModule_1_1 docs/vine5.json
export Node_1.ProcessingModule_1_1 docs/olive7.json
modify Node_1.ProcessingModule_1_1 Node_1.ProcessingModule_1_1#5 docs/vine9.json
modify Node_1.ProcessingModule_1_1 Node_1.ProcessingModule_1_1#1 docs/olive2.json
withdraw Node_1.ProcessingModule_1_1 Node_1.ProcessingModule_1_1#3
withdraw Node_1.ProcessingModule_1_1 Node_1.ProcessingModule_1_1#6
query Node_1 metameta where crop eq olive
query Node_3 meta where crop eq olive and hectares gt 5
query Node_2 meta exact_type_match=true where crop eq olive and town eq Almeria
query Node_2 metameta def_search_card=2 where crop eq olive
describe Node_1.ProcessingModule_1_1 Node_1.ProcessingModule_1_1#4
";

fn write_doc(path: &Path, crop: &str, ha: i64, town: &str) {
    let doc = Document::new("", Level::Meta)
        .with("crop", crop)
        .with("hectares", ha)
        .with("town", town);
    ontotrader_core::store::write_document(path, &doc).unwrap();
}

fn cross_mode(tmp: &Path, captured: &mut Captured) -> Outcome {
    let (seeds, docs) = (tmp.join("seeds"), tmp.join("docs"));
    fs::create_dir_all(&seeds).unwrap();
    fs::create_dir_all(&docs).unwrap();
    write_doc(&seeds.join("1.json"), "almond", 8, "Almeria");
    write_doc(&seeds.join("2.json"), "olive", 12, "Almeria");
    write_doc(&seeds.join("3.json"), "olive", 3, "Nijar");
    write_doc(&docs.join("olive20.json"), "olive", 20, "Almeria");
    write_doc(&docs.join("vine5.json"), "vine", 5, "Berja");
    write_doc(&docs.join("olive7.json"), "olive", 7, "Nijar");
    write_doc(&docs.join("vine9.json"), "vine", 9, "Berja");
    write_doc(&docs.join("olive2.json"), "olive", 2, "Almeria");
    let script = tmp.join("cross.txt");
    fs::write(&script, SCRIPT).unwrap();
    check(SCRIPT.lines().count() == 12, "script is not 12 commands")?;

    let mut outputs = Vec::new();
    for mode in ["inproc", "tcp"] {
        let trace = tmp.join(format!("trace-{mode}.tsv"));
        let mut args: Vec<String> = vec!["run".into()];
        args.extend(fixture_paths().iter().map(|p| p.display().to_string()));
        for a in [
            "--mode",
            mode,
            "--ephemeral-ports",
            "--seed-dir",
            &format!("{PM}={}", seeds.display()),
            "--indexed",
            &format!("{PM}=crop,town"),
            "--script",
            &script.display().to_string(),
            "--trace-out",
            &trace.display().to_string(),
        ] {
            args.push(a.to_string());
        }
        let o = cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
        let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
        check(
            o.status.code() == Some(0),
            format!(
                "{mode} run exited {:?}: {}{stdout}",
                o.status.code(),
                String::from_utf8_lossy(&o.stderr)
            ),
        )?;
        captured.keep_file(&soleres_system(), &trace);
        outputs.push(stdout);
    }
    check(
        outputs[0] == outputs[1],
        format!("outputs differ:\n{}\n---\n{}", outputs[0], outputs[1]),
    )?;
    let predicates: Vec<&str> = outputs[0]
        .lines()
        .filter(|l| !l.starts_with(' ') && !l.starts_with('>') && !l.starts_with("ready"))
        .collect();
    check(
        predicates.len() == 12,
        format!("{} replies for 12 commands", predicates.len()),
    )?;
    let offers = outputs[0].lines().filter(|l| l.contains('%')).count();
    check(offers > 0, "no query returned offers")?;
    Ok(format!("12 commands, identical predicates, offers and traces in-process and over loopback TCP ({offers} offer lines)"))
}

fn usage_matrix(captured: &Captured) -> Outcome {
    let mut total = 0;
    let mut edges = BTreeSet::new();
    for (model, steps) in &captured.0 {
        let c = check_conformance(model, steps);
        check(
            c.is_clean(),
            format!(
                "{} violations, first: {:?}",
                c.violations.len(),
                c.violations.first()
            ),
        )?;
        total += c.steps;
        edges.extend(c.edges);
    }
    check(total > 0, "no trace steps were captured")?;
    Ok(format!(
        "{total} captured steps over {} runs, {} distinct edges, zero violations",
        captured.0.len(),
        edges.len()
    ))
}

#[test]
fn acceptance() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut captured = Captured::default();
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut run = |n: u8, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        println!(
            "criterion {n} {name}: {}",
            match &outcome {
                Ok(d) => format!("PASS ({d})"),
                Err(e) => format!("FAIL ({e})"),
            }
        );
        results.push((n, name, outcome));
    };
    run(1, "golden parse", &mut golden_parse);
    run(2, "golden generation", &mut || {
        golden_generation(tmp.path())
    });
    run(3, "constraint suite", &mut constraint_suite);
    run(4, "protocol legality", &mut protocol_legality);
    run(5, "store oracle", &mut store_oracle);
    run(6, "trader semantics", &mut trader_semantics);
    run(7, "routing scenarios", &mut || {
        routing_scenarios(&mut captured)
    });
    run(9, "cross-mode equivalence", &mut || {
        cross_mode(tmp.path(), &mut captured)
    });
    // Last, so that it sees every trace captured above.
    run(8, "usage matrix conformance", &mut || {
        usage_matrix(&captured)
    });

    let elapsed = started.elapsed();
    println!("acceptance finished in {:.1}s", elapsed.as_secs_f64());
    let failed: Vec<String> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| format!("{} {}", r.0, r.1))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(
        elapsed < Duration::from_secs(60),
        "acceptance took {elapsed:?}"
    );
}
