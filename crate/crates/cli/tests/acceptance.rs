//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the terminal. Exits nonzero if any
//! required criterion fails; criterion 9 needs real backends and is only
//! evaluated when `CAST_BACKEND` names a server.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cast_cli::commands::{generate_record, StoryRecord};
use cast_cli::planted::planted_corpus;
use cast_cli::{main_with_args, EXIT_OK};
use cast_core::backends::mock::{mock_backends, FixtureCommonsense, ScriptedLanguageModel};
use cast_core::backends::parser::HeuristicSubjectParser;
use cast_core::backends::remote::remote_backends;
use cast_core::backends::{Backends, Encoder, SubjectParser, TokenDistribution};
use cast_core::corpus::{build_prefix_training_pairs, mine_pair_rules, penalty_schedule, rl_penalty};
use cast_core::decoding::{transform_distribution, ConstraintLexicon};
use cast_core::diagnostics::{self_bleu, summarize_telemetry};
use cast_core::matching::evaluate_candidate;
use cast_core::pipeline::{generate_sentence, generate_story};
use cast_core::relation::{rules_for, RelationInventory};
use cast_core::story::StorySentence;
use cast_core::{CharacterTag, GenerationConfig, InferenceSet, Mode, NameMap, RelationType, StoryState};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

const PHRASES: [&str; 14] = [
    "to eat", "eating", "eats a burger", "to sleep", "sleeping", "hungry", "happy", "grateful", "to relax", "relaxed",
    "swim", "swim in the ocean", "gets a sunburn", "to thank",
];

fn random_set(rng: &mut ChaCha8Rng, relations: &[RelationType]) -> InferenceSet {
    let mut set = InferenceSet::empty("fixture", 5);
    for rel in relations {
        let n = rng.gen_range(0..=3);
        let beam: Vec<String> = PHRASES.choose_multiple(rng, n).map(|p| p.to_string()).collect();
        set.beams.insert(rel.clone(), beam);
    }
    set
}

fn brute_force(prev: &InferenceSet, cand: &InferenceSet, mode: Mode, threshold: f64, enc: &dyn Encoder) -> usize {
    let cos = |a: &str, b: &str| {
        let (x, y) = (enc.encode(a).unwrap(), enc.encode(b).unwrap());
        let dot: f64 = x.components().iter().zip(y.components()).map(|(p, q)| p * q).sum();
        let nx = x.components().iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.components().iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (nx * ny)
    };
    rules_for(mode)
        .iter()
        .filter(|r| {
            let (a, b) = (prev.beam(&r.context_relation), cand.beam(&r.continuation_relation));
            a.iter().any(|p| b.iter().any(|q| cos(p, q) >= threshold))
        })
        .count()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let enc = mock_backends().encoder;
    let cfg = GenerationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut positives = 0;
    let cases = 240;
    for i in 0..cases {
        let mode = if i % 2 == 0 { Mode::Single } else { Mode::Multi };
        let rules = rules_for(mode);
        let ctx: Vec<RelationType> = rules.iter().map(|r| r.context_relation.clone()).collect();
        let cont: Vec<RelationType> = rules.iter().map(|r| r.continuation_relation.clone()).collect();
        let (prev, cand) = (random_set(&mut rng, &ctx), random_set(&mut rng, &cont));
        let got = evaluate_candidate(&prev, &cand, mode, &cfg, false, enc.as_ref()).map_err(|e| e.to_string())?;
        let want = brute_force(&prev, &cand, mode, cfg.similarity_threshold, enc.as_ref());
        mismatches += usize::from(got.match_count != want);
        positives += usize::from(want > 0);
    }
    let secs = start.elapsed().as_secs_f64();
    check(mismatches == 0, format!("{mismatches} mismatches"))?;
    check(positives > cases / 4, format!("only {positives} fixtures had any match"))?;
    check(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("{cases} fixtures, 0 mismatches, {positives} with matches, {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let dist = TokenDistribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let lex = ConstraintLexicon { boost_tokens: [1].into(), ..Default::default() };
    let out = transform_distribution(&dist, &lex, 0.5, 2);
    let expected = [0.4 / 1.15, 0.45 / 1.15, 0.2 / 1.15, 0.1 / 1.15];
    let shown = [0.3478, 0.3913, 0.1739, 0.0869];
    for ((got, want), rounded) in out.probs().iter().zip(expected).zip(shown) {
        check((got - want).abs() <= 1e-6, format!("got {got}, want {want}"))?;
        check((got - rounded).abs() < 1e-4, format!("got {got}, printed value {rounded}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..200);
        let d = TokenDistribution::from_weights((0..n).map(|_| rng.gen_range(0.0..1.0) + 1e-9).collect()).unwrap();
        let lex = ConstraintLexicon {
            boost_tokens: (0..n as u32).filter(|_| rng.gen_bool(0.2)).collect(),
            penalty_tokens: (0..n as u32).filter(|_| rng.gen_bool(0.1)).collect(),
            ..Default::default()
        };
        let identity = transform_distribution(&d, &lex, 0.0, 100);
        check(identity == d, "mu = 0 changed a distribution")?;
        let biased = transform_distribution(&d, &lex, rng.gen_range(0.0..0.99), rng.gen_range(1..150));
        worst = worst.max((biased.probs().iter().sum::<f64>() - 1.0).abs());
    }
    check(worst <= 1e-6, format!("normalization off by {worst}"))?;
    Ok(format!("hand-derived vector within 1e-6, 1000 identity cases, max normalization error {worst:.1e}"))
}

/// A scripted continuation sharing exactly `matches` rule phrases with the
/// prompt, so it can only pass under relaxed criteria.
fn relaxation_case(mode: Mode, prompt: &str, reply: &str, matches: usize) -> Result<(usize, bool, usize), String> {
    let mut fx = FixtureCommonsense::default();
    for rule in rules_for(mode).iter().take(matches) {
        fx.insert(prompt, rule.context_relation.name(), &["to relax"]);
        fx.insert(reply, rule.continuation_relation.name(), &["to relax"]);
    }
    let mut backends = mock_backends();
    backends.language_model = Arc::new(ScriptedLanguageModel::new([reply]));
    backends.commonsense = Arc::new(fx);
    let parser = HeuristicSubjectParser::default();
    let first = StorySentence::new(prompt, parser.subject_of(prompt), 0).map_err(|e| e.to_string())?;
    let state = StoryState::new(first, mode, NameMap::new());
    let (_, t) = generate_sentence(&state, &GenerationConfig::default(), &backends).map_err(|e| e.to_string())?;
    Ok((t.candidates_tried, t.relaxation_used, t.match_count))
}

fn criterion_3() -> Outcome {
    let single = relaxation_case(Mode::Single, "[Char_1] went to the beach.", "[Char_1] lay in the sun.", 1)?;
    let multi = relaxation_case(Mode::Multi, "[Char_1] gave [Char_2] a burger.", "[Char_2] thanked [Char_1].", 2)?;
    for (name, (tried, relaxed, count), want) in [("single", single, 1), ("multi", multi, 2)] {
        check(tried >= 51 && relaxed && count == want, format!("{name}: tried {tried}, relaxed {relaxed}, matches {count}"))?;
    }
    Ok(format!("single accepted at candidate {} with 1 match, multi at {} with 2", single.0, multi.0))
}

fn subjects(backends: &Backends, prompt: &str, mode: Mode, seed: u64) -> Result<Vec<Option<CharacterTag>>, String> {
    let cfg = GenerationConfig { random_seed: seed, ..Default::default() };
    let state = generate_story(prompt, mode, 5, &cfg, backends, NameMap::new()).map_err(|e| format!("seed {seed}: {e}"))?;
    Ok(state.subjects()[1..].to_vec())
}

fn criterion_4() -> Outcome {
    let backends = mock_backends();
    let (c1, c2) = (Some(CharacterTag::of(1)), Some(CharacterTag::of(2)));
    for seed in 0..20 {
        let got = subjects(&backends, "[Char_1] gave [Char_2] a burger.", Mode::Multi, seed)?;
        check(got == [c2, c1, c2, c1], format!("multi seed {seed}: {got:?}"))?;
        let got = subjects(&backends, "[Char_1] went to the beach.", Mode::Single, seed)?;
        check(got == [c1; 4], format!("single seed {seed}: {got:?}"))?;
    }
    Ok("20 two-character and 20 single-character stories follow the expected subjects".into())
}

fn criterion_5() -> Outcome {
    check(rl_penalty(2.0, 0, 1.0, 0) == 2.0, "i=0")?;
    check(rl_penalty(2.0, 0, 1.0, 10) == 1.0, "i=10")?;
    for i in 0..100 {
        check(rl_penalty(2.0, 1, 1.7, i) == 0.0, format!("C=1 at i={i}"))?;
        if i >= 20 {
            check(penalty_schedule(i) == 0.0, format!("beta at i={i}"))?;
        }
    }
    Ok("u=2.0 at i=0, u=1.0 at i=10, u=0 for C=1, beta=0 from i=20".into())
}

fn criterion_6() -> Outcome {
    let story = ["[Char_1] was upset with [Char_2].".to_string(), "Because of this, [Char_2] apologized.".to_string()];
    let pairs = build_prefix_training_pairs(&story, &HeuristicSubjectParser::default());
    check(pairs.len() == 1, format!("{} pairs", pairs.len()))?;
    check(pairs[0].input == "* [Char_2] * [Char_1] was upset with [Char_2].", format!("input {:?}", pairs[0].input))?;
    check(pairs[0].target == story[1], format!("target {:?}", pairs[0].target))?;
    Ok("worked example reproduced byte-exactly".into())
}

fn criterion_7() -> Outcome {
    let toy = [
        "[Char_1] went to the beach. [Char_1] was happy at the beach.",
        "[Char_1] went to the store. [Char_1] was happy at the store.",
        "[Char_2] went to the beach with [Char_1]. [Char_2] was happy.",
    ]
    .map(String::from);
    // Reference values from NLTK's corpus-free sentence_bleu, averaged.
    for (n, want) in [(2, 0.6878651452526895), (3, 0.5949803528281317)] {
        let got = self_bleu(&toy, n).map_err(|e| e.to_string())?;
        check((got - want).abs() <= 1e-6, format!("self-BLEU-{n} {got} vs {want}"))?;
    }
    let same = [toy[0].clone(), toy[0].clone()];
    let one = self_bleu(&same, 2).map_err(|e| e.to_string())?;
    check((one - 1.0).abs() <= 1e-12, format!("identical pair scored {one}"))?;
    Ok("toy corpus within 1e-6 of reference, identical pair = 1.0".into())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let inventory = RelationInventory::builtin();
    let planted = planted_corpus(50, 5, inventory.relations());
    let commonsense = FixtureCommonsense::new(planted.fixture.clone());
    let encoder = mock_backends().encoder;
    let stats = mine_pair_rules(&planted.stories, &commonsense, encoder.as_ref(), inventory.relations(), 0.8, 10)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (hits, rest): (Vec<_>, Vec<_>) =
        stats.iter().partition(|s| planted.is_planted(&s.context_relation, &s.continuation_relation));
    check(hits.len() == 8, format!("{} planted rules observed", hits.len()))?;
    let lowest = hits.iter().map(|s| s.match_rate).fold(f64::INFINITY, f64::min);
    let highest = rest.iter().map(|s| s.match_rate).fold(0.0, f64::max);
    check(lowest > highest, format!("planted min {lowest} vs other max {highest}"))?;
    check(stats[..8].iter().all(|s| planted.is_planted(&s.context_relation, &s.continuation_relation)), "ranking order")?;
    check(secs < 60.0, format!("took {secs:.2} s"))?;
    Ok(format!(
        "{} pairs scored; planted match rate >= {lowest:.3}, best other {highest:.3}, {secs:.2} s",
        stats.len()
    ))
}

const ABLATION_PROMPTS: [&str; 5] = [
    "[Char_1] gave [Char_2] a burger.",
    "[Char_1] met [Char_2] at the park.",
    "[Char_1] invited [Char_2] to the beach.",
    "[Char_1] called [Char_2] after school.",
    "[Char_1] helped [Char_2] bake a cake.",
];

fn ablation(backends: &Backends) -> Result<[(f64, f64); 2], String> {
    let mut out = [(0.0, 0.0); 2];
    for (k, control) in [true, false].into_iter().enumerate() {
        let mut records: Vec<StoryRecord> = Vec::new();
        for seed in 0..4 {
            let cfg = GenerationConfig { random_seed: seed, decoding_control_enabled: control, ..Default::default() };
            for p in ABLATION_PROMPTS {
                records.push(generate_record(p, Some(Mode::Multi), 5, &NameMap::new(), &cfg, backends, ""));
            }
        }
        let telemetry: Vec<_> = records.iter().filter(|r| r.error.is_none()).map(|r| r.telemetry.clone()).collect();
        let s = summarize_telemetry(&telemetry).map_err(|e| e.to_string())?;
        out[k] = (s.mean_candidates, s.success_rate);
    }
    Ok(out)
}

fn criterion_9() -> Outcome {
    let Ok(addr) = std::env::var("CAST_BACKEND") else {
        let note = match ablation(&mock_backends()) {
            Ok([(on, ok_on), (off, ok_off)]) => format!(
                "; mock suite for reference: {on:.2} vs {off:.2} candidates, success {:.1}% vs {:.1}%",
                ok_on * 100.0,
                ok_off * 100.0
            ),
            Err(e) => format!("; mock reference failed: {e}"),
        };
        return Err(format!("not evaluated: needs real backends (set CAST_BACKEND=host:port){note}"));
    };
    let backends = remote_backends(&addr).map_err(|e| e.to_string())?;
    let [(on, ok_on), (off, ok_off)] = ablation(&backends)?;
    check(on < off, format!("candidates with control {on:.2} not below {off:.2}"))?;
    check(ok_on >= 0.9, format!("success rate {:.1}%", ok_on * 100.0))?;
    Ok(format!("{on:.2} vs {off:.2} candidates; success {:.1}% vs {:.1}%", ok_on * 100.0, ok_off * 100.0))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let prompts = dir.path().join("prompts.txt");
    std::fs::write(&prompts, ABLATION_PROMPTS.join("\n") + "\nTom went hiking with Anna.\n[Char_1] went hiking.\n")
        .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dir.path().join(name);
        let args = ["cast", "generate", "--mock", "--seed", "99", "--length", "5", "--prompt-file"];
        let code = main_with_args(args.iter().map(|s| s.to_string()).chain([prompts.display().to_string(), "--out".into(), out.display().to_string()]));
        check(code == EXIT_OK, format!("generate exited {code}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], "outputs differ")?;
    Ok(format!("two runs, {} identical bytes", outputs[0].len()))
}

fn main() {
    let criteria: BTreeMap<u32, Criterion> = BTreeMap::from([
        (1, ("matching oracle equivalence", criterion_1 as fn() -> Outcome)),
        (2, ("lexical bias exactness", criterion_2)),
        (3, ("relaxation behavior", criterion_3)),
        (4, ("turn-taking", criterion_4)),
        (5, ("reward penalty formulas", criterion_5)),
        (6, ("prefix data construction", criterion_6)),
        (7, ("self-BLEU", criterion_7)),
        (8, ("pair mining", criterion_8)),
        (9, ("decoding-control ablation trend (optional)", criterion_9)),
        (10, ("determinism", criterion_10)),
    ]);
    let mut required_failures = 0;
    for (n, (name, run)) in criteria {
        match run() {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name}: {detail}");
                if n != 9 {
                    required_failures += 1;
                }
            }
        }
    }
    if required_failures > 0 {
        eprintln!("{required_failures} required criteria failed");
        std::process::exit(1);
    }
}
