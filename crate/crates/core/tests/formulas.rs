use vandconv::algebra::{moment_formula, parse_expression, to_latex, Attributes, Basis, Normalization, UNIFORM};

fn strip(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn latex(text: &str, uniform: &[u32], order: usize, norm: Normalization) -> String {
    let mut a = Attributes::default();
    for &i in uniform {
        a.set_phase(i, UNIFORM);
    }
    let e = parse_expression(text, &a).unwrap();
    to_latex(&moment_formula(&e, order, norm, Basis::Gram).unwrap())
}

fn check(text: &str, uniform: &[u32], norm: Normalization, expected: &[&str]) {
    for (k, want) in expected.iter().enumerate() {
        let got = latex(text, uniform, k + 1, norm);
        assert_eq!(strip(&got), strip(want), "{text} order {}", k + 1);
    }
}

#[test]
fn multiplicative_d_gram() {
    check(
        "D1 V1' V1",
        &[],
        Normalization::Scaled,
        &[
            "D_{1}",
            "D_{2} - D_{1}^{2} + D_{1}^{2}V_{2}",
            "D_{3} - 3D_{2}D_{1} + 3D_{2}D_{1}V_{2} + 2D_{1}^{3} - 3D_{1}^{3}V_{2} + D_{1}^{3}V_{3}",
            "D_{4} - \\frac{8}{3}D_{2}^{2} + \\frac{8}{3}D_{2}^{2}V_{2} - 4D_{3}D_{1} + 4D_{3}D_{1}V_{2} + 12D_{2}D_{1}^{2} - 18D_{2}D_{1}^{2}V_{2} + 6D_{2}D_{1}^{2}V_{3} - \\frac{19}{3}D_{1}^{4} + \\frac{34}{3}D_{1}^{4}V_{2} - 6D_{1}^{4}V_{3} + D_{1}^{4}V_{4}",
        ],
    );
}

#[test]
fn multiplicative_uniform() {
    check(
        "D1 V1' V1",
        &[1],
        Normalization::Scaled,
        &[
            "D_{1}",
            "D_{2} + D_{1}^{2}",
            "D_{3} + 3D_{2}D_{1} + D_{1}^{3}",
            "D_{4} + \\frac{8}{3}D_{2}^{2} + 4D_{3}D_{1} + 6D_{2}D_{1}^{2} + D_{1}^{4}",
        ],
    );
}

#[test]
fn additive_d_gram() {
    check(
        "D1 + V1' V1",
        &[],
        Normalization::Scaled,
        &[
            "D_{1}+ 1",
            "D_{2} + 2D_{1} + V_{2}",
            "D_{3} + 3D_{2} + 3D_{1}V_{2} + V_{3}",
            "D_{4} + 4D_{3} + 2D_{2} + 4D_{2}V_{2} - 2D_{1}^{2} + 2D_{1}^{2}V_{2} + 4D_{1}V_{3} + V_{4}",
        ],
    );
}

#[test]
fn additive_uniform() {
    check(
        "D1 + V1' V1",
        &[1],
        Normalization::Scaled,
        &[
            "D_{1} + 1",
            "D_{2} +2D_{1} + 2",
            "D_{3} +3D_{2} +6D_{1} + 5",
            "D_{4} +4D_{3} +10D_{2} +2D_{1}^{2} +20D_{1} + \\frac{44}{3}",
        ],
    );
}

fn same_phase() -> Attributes {
    let mut a = Attributes::default();
    a.set_phase(1, "w");
    a.set_phase(2, "w");
    a
}

#[test]
fn cross_gram_equal_phase() {
    let e = parse_expression("V1' V2 V2' V1", &same_phase()).unwrap();
    let expected = [
        "- 1 + V_{2}",
        "- 3 + 6V_{2} - 4V_{3} + V_{4}",
        "- 58 + 123V_{2} - 96V_{3} + 39V_{4} - 9V_{5} + V_{6}",
        "- \\frac{21532}{5} + \\frac{410726}{45}V_{2} - \\frac{321191}{45}V_{3} + \\frac{44516}{15}V_{4} - 772V_{5} + 136V_{6} - 16V_{7} + V_{8}",
    ];
    for (k, want) in expected.iter().enumerate() {
        let got = to_latex(&moment_formula(&e, k + 1, Normalization::Raw, Basis::Gram).unwrap());
        assert_eq!(strip(&got), strip(want), "order {}", k + 1);
    }
}

// Uniform phases: these follow from the equal-phase formulas with V = (1, 2, 5, 44/3, ...)
// and agree with simulation at N = L = 400 (3.72 ± 0.06, 20.6 ± 0.8).
#[test]
fn cross_gram_uniform() {
    let got: Vec<String> = (1..=4).map(|k| latex("V1' V2 V2' V1", &[1, 2], k, Normalization::Raw)).collect();
    assert_eq!(got, ["1", "\\frac{11}{3}", "\\frac{411}{20}", "\\frac{49333}{315}"]);
}

#[test]
fn uniform_gram_moments() {
    let got: Vec<String> = (1..=4).map(|k| latex("V1' V1", &[1], k, Normalization::Raw)).collect();
    assert_eq!(got, ["1", "2", "5", "\\frac{44}{3}"]);
}
