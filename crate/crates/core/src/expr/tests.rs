use proptest::prelude::*;

use super::*;

const XYZ: [&str; 3] = ["x1", "x2", "x3"];

fn eval(src: &str, vars: &[&str], values: &[f64]) -> Result<f64, ExprError> {
    parse(src, vars)?.eval(values)
}

#[test]
fn precedence_and_associativity() {
    assert_eq!(eval("2+3*4", &[], &[]).unwrap(), 14.0);
    assert_eq!(eval("2^3^2", &[], &[]).unwrap(), 512.0);
    assert_eq!(eval("-2^2", &[], &[]).unwrap(), -4.0);
    assert_eq!(eval("8/4/2", &[], &[]).unwrap(), 1.0);
    assert_eq!(eval("2^-1", &[], &[]).unwrap(), 0.5);
}

#[test]
fn integrand_examples() {
    let v = eval("1 + 0.2*pow(x3,2)", &XYZ, &[0.0, 0.0, 1.0]).unwrap();
    assert!((v - 1.2).abs() < 1e-15);
    assert_eq!(eval("pow(s, 1-4)", &["s"], &[2.0]).unwrap(), 0.125);
    assert_eq!(eval("exp(-(r^2))", &["r"], &[0.0]).unwrap(), 1.0);
}

#[test]
fn domain_errors() {
    assert!(matches!(
        eval("log(s)", &["s"], &[0.0]),
        Err(ExprError::Domain { function: "log", .. })
    ));
    assert!(matches!(eval("sqrt(s)", &["s"], &[-1.0]), Err(ExprError::Domain { .. })));
    assert_eq!(eval("1/s", &["s"], &[0.0]), Err(ExprError::DivisionByZero));
    assert!(matches!(eval("exp(s)", &["s"], &[1e5]), Err(ExprError::NonFinite(_))));
}

#[test]
fn parse_errors_carry_position_and_name() {
    assert_eq!(
        parse("1 + y", &XYZ).unwrap_err(),
        ExprError::UnknownIdentifier { name: "y".into(), pos: 4 }
    );
    assert!(matches!(parse("1 +", &XYZ), Err(ExprError::Syntax { pos: 3, .. })));
    assert!(matches!(parse("(1", &XYZ), Err(ExprError::Syntax { .. })));
    assert!(matches!(parse("1 $ 2", &XYZ), Err(ExprError::Syntax { pos: 2, .. })));
    assert!(matches!(parse("pow(1)", &XYZ), Err(ExprError::Arity { .. })));
    assert!(matches!(parse("foo(1)", &XYZ), Err(ExprError::UnknownIdentifier { .. })));
}

#[test]
fn named_bindings() {
    let e = parse("a - b", &["a", "b"]).unwrap();
    assert_eq!(e.eval_named(&[("b", 1.0), ("a", 3.0)]).unwrap(), 2.0);
    assert_eq!(e.eval_named(&[("a", 3.0)]), Err(ExprError::MissingBinding("b".into())));
    assert!(e.uses("a"));
    assert!(!parse("1", &["a"]).unwrap().uses("a"));
}

#[test]
fn printing_is_minimal_and_stable() {
    for (src, printed) in [
        ("1+2*3", "1.0+2.0*3.0"),
        ("(1+2)*3", "(1.0+2.0)*3.0"),
        ("a-(b-c)", "a-(b-c)"),
        ("(a^b)^c", "(a^b)^c"),
        ("a^b^c", "a^b^c"),
        ("-a^2", "-a^2.0"),
        ("(-a)^2", "(-a)^2.0"),
        ("pow(a, b+1)", "pow(a, b+1.0)"),
    ] {
        let e = parse(src, &["a", "b", "c"]).unwrap();
        assert_eq!(e.to_string(), printed);
        assert_eq!(parse(&e.to_string(), &["a", "b", "c"]).unwrap(), e);
    }
}

fn arb_node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(Node::Num),
        (0usize..3).prop_map(Node::Var),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| Node::Neg(Box::new(x))),
            (inner.clone(), inner.clone(), prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
            ])
                .prop_map(|(a, b, op)| Node::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), prop_oneof![
                Just(Func::Exp),
                Just(Func::Log),
                Just(Func::Sqrt),
                Just(Func::Abs),
                Just(Func::Sin),
                Just(Func::Cos),
            ])
                .prop_map(|(a, f)| Node::Call(f, vec![a])),
            (inner.clone(), inner).prop_map(|(a, b)| Node::Call(Func::Pow, vec![a, b])),
        ]
    })
}

proptest! {
    #[test]
    fn round_trip_preserves_value(root in arb_node(), x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
        let names = ["x1", "x2", "x3"];
        let e = Expr::new(root, names.iter().map(|s| s.to_string()).collect());
        let text = e.to_string();
        let back = parse(&text, &names).unwrap();
        let a = e.eval(&[x, y, z]);
        let b = back.eval(&[x, y, z]);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits(), "{}", text),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{} -> {:?} vs {:?}", text, a, b),
        }
        // parse ∘ print is the identity on parsed trees.
        prop_assert_eq!(parse(&back.to_string(), &names).unwrap(), back);
    }
}
