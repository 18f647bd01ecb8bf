use fermi_core::funcspec::{parse, BinOp, Expr};
use proptest::prelude::*;

fn tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..1e6f64).prop_map(Expr::Num),
        (0usize..6).prop_map(Expr::Coord),
        Just(Expr::X),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner, 0u32..12).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printed_trees_reparse_identically(e in tree()) {
        let text = e.to_string();
        prop_assert_eq!(parse(&text).unwrap(), e);
    }

    #[test]
    fn arbitrary_input_never_panics(s in "\\PC{0,40}") {
        if let Err(e) = parse(&s) {
            prop_assert!(e.offset <= s.len());
            prop_assert!(s.is_char_boundary(e.offset));
        }
    }

    #[test]
    fn token_soup_never_panics(s in "[w0-9x+*/^()\\-. e]{0,30}") {
        match parse(&s) {
            Ok(e) => {
                let _ = e.eval(&[0.1, 0.2, 0.3]);
                let _ = e.eval_scalar(0.4);
            }
            Err(e) => prop_assert!(e.offset <= s.len()),
        }
    }

    #[test]
    fn precedence(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
        let p = [a, b, c];
        let eval = |s: &str| parse(s).unwrap().eval(&p).unwrap();
        prop_assert_eq!(eval("w1+w2*w3"), a + b * c);
        prop_assert_eq!(eval("w1*w2^3"), a * (b * b * b));
        prop_assert_eq!(eval("-w1^2"), -(a * a));
        prop_assert_eq!(eval("w1-w2-w3"), (a - b) - c);
        prop_assert_eq!(eval("w1/w2/w3"), (a / b) / c);
        prop_assert_eq!(eval("w1^2^2"), a.powi(4));
    }
}

#[test]
fn worked_expression() {
    let v = parse("w1^2 - w2*w3").unwrap().eval(&[0.5, 0.8660254, 0.0]).unwrap();
    assert!((v - 0.25).abs() <= 1e-15);
}
