//! Equivalence algebra: reflexivity, symmetry, permutation invariance,
//! EM⇒AST, policy monotonicity, and agreement between the bipartite matcher
//! and a brute-force permutation oracle.

use toolforge_core::equivalence::{
    ast_equivalent, calls_equivalent, exact_match, MatchPolicy,
};
use toolforge_core::gen::{gen_call_list, permute_call_list, GenConfig, Rng};
use toolforge_core::grammar::{parse_call_list, render_call_list, CallList, FunctionCall, Value};
use toolforge_core::tools::{load_tools, ToolSet};

/// Brute-force matching oracle: tries every permutation of the candidate
/// calls against the ground truth in order. Only usable for small lists; the
/// production matcher must agree with it exactly.
fn brute_force_equivalent(
    gt: &CallList,
    cand: &CallList,
    tools: &ToolSet,
    policy: &MatchPolicy,
) -> bool {
    if gt.len() != cand.len() {
        return false;
    }
    let n = gt.len();
    let mut order: Vec<usize> = (0..n).collect();
    permute(&mut order, 0, &mut |perm| {
        (0..n).all(|i| calls_equivalent(&gt.calls[i], &cand.calls[perm[i]], tools, policy))
    })
}

fn permute(order: &mut Vec<usize>, k: usize, check: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if k == order.len() {
        return check(order);
    }
    for i in k..order.len() {
        order.swap(k, i);
        if permute(order, k + 1, check) {
            order.swap(k, i);
            return true;
        }
        order.swap(k, i);
    }
    false
}

#[test]
fn algebra_suite_over_randomized_call_lists() {
    let cfg = GenConfig::default();
    let tools = ToolSet::empty();
    let policies = [
        MatchPolicy::default(),
        MatchPolicy { case_insensitive_strings: true, ..MatchPolicy::default() },
        MatchPolicy { permissive_optional_extras: true, ..MatchPolicy::default() },
    ];
    for seed in 0..1000u64 {
        let mut rng = Rng::new(seed);
        let list = gen_call_list(&mut rng, &cfg);
        let permuted = permute_call_list(&mut rng, &list);
        let unrelated = gen_call_list(&mut rng, &cfg);
        let policy = &policies[(seed % 3) as usize];

        // Reflexivity.
        assert!(
            ast_equivalent(&list, &list, &tools, policy).is_match(),
            "seed {seed}: reflexivity failed"
        );
        // Argument- and call-permutation invariance, both directions.
        assert!(
            ast_equivalent(&list, &permuted, &tools, policy).is_match(),
            "seed {seed}: permutation invariance failed\n{}\n{}",
            render_call_list(&list),
            render_call_list(&permuted)
        );
        assert!(
            ast_equivalent(&permuted, &list, &tools, policy).is_match(),
            "seed {seed}: permuted symmetry failed"
        );
        // Symmetry on independent pairs.
        let ab = ast_equivalent(&list, &unrelated, &tools, policy).is_match();
        let ba = ast_equivalent(&unrelated, &list, &tools, policy).is_match();
        assert_eq!(ab, ba, "seed {seed}: symmetry failed on independent pair");
        // Permuting both sides never changes the verdict.
        let permuted_unrelated = permute_call_list(&mut rng, &unrelated);
        let after = ast_equivalent(&permuted, &permuted_unrelated, &tools, policy).is_match();
        assert_eq!(ab, after, "seed {seed}: verdict changed under permutation");
        // EM ⇒ AST through the text path.
        let rendered = render_call_list(&list);
        let padded = format!("  {rendered} ");
        assert!(exact_match(&rendered, &padded));
        let a = parse_call_list(&rendered).unwrap();
        let b = parse_call_list(&padded).unwrap();
        assert!(
            ast_equivalent(&a, &b, &tools, policy).is_match(),
            "seed {seed}: EM did not imply AST"
        );
    }
}

#[test]
fn bipartite_matcher_agrees_with_brute_force_oracle() {
    let cfg = GenConfig { max_calls: 6, max_args: 3, max_depth: 2 };
    let tools = ToolSet::empty();
    let policy = MatchPolicy::default();
    let mut matches = 0usize;
    for seed in 0..500u64 {
        let mut rng = Rng::new(seed.wrapping_add(900_000));
        let gt = gen_call_list(&mut rng, &cfg);
        let cand = match rng.below(3) {
            0 => permute_call_list(&mut rng, &gt),
            1 => mutate(&mut rng, &gt),
            _ => gen_call_list(&mut rng, &cfg),
        };
        let fast = ast_equivalent(&gt, &cand, &tools, &policy).is_match();
        let slow = brute_force_equivalent(&gt, &cand, &tools, &policy);
        assert_eq!(
            fast,
            slow,
            "seed {seed}: matcher disagrees with oracle\n{}\n{}",
            render_call_list(&gt),
            render_call_list(&cand)
        );
        if fast {
            matches += 1;
        }
    }
    // The suite must exercise both verdicts.
    assert!(matches > 100, "too few matching pairs: {matches}");
    assert!(matches < 480, "too few non-matching pairs");
}

/// Small targeted mutation: drop a call, retarget one argument value, or
/// rename one call.
fn mutate(rng: &mut Rng, list: &CallList) -> CallList {
    let mut out = permute_call_list(rng, list);
    if out.calls.is_empty() {
        return out;
    }
    let at = rng.below(out.calls.len());
    match rng.below(3) {
        0 => {
            out.calls.remove(at);
        }
        1 => {
            if let Some((_, value)) = out.calls[at].args.first_mut() {
                *value = Value::str("mutated");
            }
        }
        _ => out.calls[at].name.push_str("_prime"),
    }
    out
}

fn schema_tools() -> ToolSet {
    load_tools(
        r#"[
            {"name": "f", "description": "", "parameters": {"properties": {
                "a": {"type": "integer", "description": ""},
                "verbose": {"type": "boolean", "description": "", "default": false},
                "mode": {"type": "string", "description": "", "default": "fast"}
            }, "required": ["a"]}},
            {"name": "g", "description": "", "parameters": {"properties": {
                "b": {"type": "integer", "description": ""},
                "country": {"type": "string", "description": "", "default": "us"}
            }, "required": ["b"]}}
        ]"#,
    )
    .unwrap()
    .tools
}

/// Builds a random schema-conforming call for `f` or `g`, toggling the
/// presence of default-valued optionals.
fn schema_call(rng: &mut Rng) -> FunctionCall {
    if rng.chance(50) {
        let mut call = FunctionCall::new("f").with_arg("a", Value::number("1"));
        if rng.chance(50) {
            call = call.with_arg("verbose", Value::Bool(false));
        }
        match rng.below(4) {
            0 => {}
            1 | 2 => call = call.with_arg("mode", Value::str("fast")),
            _ => call = call.with_arg("mode", Value::str("slow")),
        }
        call
    } else {
        let mut call = FunctionCall::new("g").with_arg("b", Value::number("2"));
        if rng.chance(50) {
            call = call.with_arg("country", Value::str("us"));
        }
        call
    }
}

#[test]
fn schema_aware_matching_agrees_with_oracle_and_stays_symmetric() {
    let tools = schema_tools();
    let strict = MatchPolicy::default();
    let permissive = MatchPolicy { permissive_optional_extras: true, ..MatchPolicy::default() };
    for seed in 0..250u64 {
        let mut rng = Rng::new(seed.wrapping_add(31_337));
        let n = 1 + rng.below(4);
        let gt = CallList::new((0..n).map(|_| schema_call(&mut rng)).collect());
        let cand = CallList::new((0..n).map(|_| schema_call(&mut rng)).collect());
        for policy in [&strict, &permissive] {
            let fast = ast_equivalent(&gt, &cand, &tools, policy).is_match();
            let slow = brute_force_equivalent(&gt, &cand, &tools, policy);
            assert_eq!(fast, slow, "seed {seed}: schema-aware disagreement");
            let reverse = ast_equivalent(&cand, &gt, &tools, policy).is_match();
            assert_eq!(fast, reverse, "seed {seed}: schema-aware symmetry failed");
        }
        // Monotonicity: strict match implies permissive match.
        if ast_equivalent(&gt, &cand, &tools, &strict).is_match() {
            assert!(
                ast_equivalent(&gt, &cand, &tools, &permissive).is_match(),
                "seed {seed}: permissive policy rejected a strict match"
            );
        }
    }
}

#[test]
fn duplicate_call_shapes_stress_the_matcher() {
    // Two calls with the same name but different args force the matcher to
    // find the right assignment rather than matching greedily.
    let tools = ToolSet::empty();
    let policy = MatchPolicy::default();
    let gt = parse_call_list("[f(a=1), f(a=2), f(a=3)]").unwrap();
    let cand = parse_call_list("[f(a=3), f(a=1), f(a=2)]").unwrap();
    assert!(ast_equivalent(&gt, &cand, &tools, &policy).is_match());
    assert!(brute_force_equivalent(&gt, &cand, &tools, &policy));

    let bad = parse_call_list("[f(a=3), f(a=1), f(a=1)]").unwrap();
    assert!(!ast_equivalent(&gt, &bad, &tools, &policy).is_match());
    assert!(!brute_force_equivalent(&gt, &bad, &tools, &policy));
}
