use stieltjes::oracle;
use stieltjes::{AtomicMeasure, Polynomial};
use stieltjes_cli::format::{
    infer_dim, parse_polynomial, read_measure, read_moments, read_polynomials, write_measure,
    write_moments, write_polynomials,
};

#[test]
fn moment_file_layout() {
    let rho = AtomicMeasure::from_pairs(2, &[(0.5, &[1.0, 3.0]), (0.5, &[0.1, 0.0])]).unwrap();
    let text = write_moments(&oracle::moments_of_atomic(&rho, 2));
    assert_eq!(
        text,
        "momentfile v1 dim=2 degree=2\n\
         0 0 1\n\
         1 0 0.55\n\
         0 1 1.5\n\
         2 0 0.505\n\
         1 1 1.5\n\
         0 2 4.5\n"
    );
}

#[test]
fn round_trip_is_bit_exact() {
    let rho = AtomicMeasure::from_pairs(3, &[(0.3, &[1.25, 3.0, 0.7]), (0.7, &[2.0, 0.01, 9.99])])
        .unwrap();
    for s in [
        oracle::moments_of_atomic(&rho, 6),
        oracle::moments_exponential(30),
        oracle::moments_lognormal(50),
        oracle::moments_of_atomic_float_with(&rho, 5, Default::default()),
    ] {
        let text = write_moments(&s);
        let back = read_moments(&text).unwrap();
        assert_eq!(write_moments(&back), text);
        for ((a, m), (b, n)) in s.entries().zip(back.entries()) {
            assert_eq!(a, b);
            assert_eq!(m.value.to_bits(), n.value.to_bits());
        }
    }
}

#[test]
fn exact_values_survive() {
    let s =
        read_moments("momentfile v1 dim=1 degree=2\n0 1\n1 0.1\n2 0.30000000000000004\n").unwrap();
    let m = s.moment(&stieltjes::MultiIndex::new(vec![1])).unwrap();
    assert_eq!(m.exact.as_ref().unwrap().to_string(), "1/10");
    assert_eq!(m.value, 0.1);
}

#[test]
fn log_entries() {
    let s = read_moments("momentfile v1 dim=1 degree=1\n0 1\n1 log:800\n").unwrap();
    let m = s.moment(&stieltjes::MultiIndex::new(vec![1])).unwrap();
    assert_eq!(m.log, Some(800.0));
    assert_eq!(m.value, f64::MAX);
}

#[test]
fn comments_and_blank_lines() {
    let s = read_moments("# data\nmomentfile v1 dim=1 degree=1\n\n0 2\n# mean\n1 3\n").unwrap();
    assert_eq!(s.values_1d(), vec![2.0, 3.0]);
}

#[test]
fn malformed_moment_files() {
    let cases = [
        ("", "header"),
        ("moments v1 dim=1 degree=1\n0 1\n1 1\n", "header"),
        ("momentfile v1 dim=1\n0 1\n", "degree"),
        ("momentfile v1 dim=1 degree=1\n0 1\n", "missing"),
        ("momentfile v1 dim=1 degree=1\n0 1\n1 1\n1 2\n", "duplicate"),
        ("momentfile v1 dim=1 degree=1\n0 1\n2 1\n", "exceeds"),
        ("momentfile v1 dim=2 degree=0\n0 1\n", "fields"),
        ("momentfile v1 dim=1 degree=1\n0 1\n1 abc\n", "bad value"),
        ("momentfile v1 dim=1 degree=1\n0 1\n1 log:x\n", "bad log"),
        ("momentfile v1 dim=1 degree=1\n0 1\n-1 1\n", "exponent"),
    ];
    for (text, needle) in cases {
        let e = read_moments(text).unwrap_err();
        assert!(e.to_string().contains(needle), "{text:?}: {e}");
    }
}

#[test]
fn measure_round_trip() {
    let rho = AtomicMeasure::from_pairs(2, &[(0.25, &[1.0, 3.5]), (0.75, &[0.0, 1e-3])]).unwrap();
    let text = write_measure(&rho);
    assert_eq!(text, "atoms v1 dim=2\n0.25 1 3.5\n0.75 0 0.001\n");
    assert_eq!(read_measure(&text).unwrap(), rho);
    assert!(read_measure("atoms v1 dim=2\n1 2\n").is_err());
    assert!(read_measure("atoms v1 dim=1\n-1 2\n").is_err());
}

#[test]
fn grammar() {
    let p = |s: &str| parse_polynomial(s, 'x', 2).unwrap();
    let f1 = Polynomial::from_int_terms(2, &[(&[0, 1], 1), (&[2, 0], -1)]);
    assert_eq!(p("x2 - x1^2"), f1);
    assert_eq!(p("x2 \u{2212} x1^2"), f1);
    assert_eq!(p("-(x1*x1) + x2"), f1);
    assert_eq!(p("(x1 + x2)^2"), &p("x1^2 + 2*x1*x2") + &p("x2^2"));
    assert_eq!(p("3/2*x1*x2").to_string(), "3/2*x1*x2");
    assert_eq!(p("x1/4 + 0.25").to_string(), "1/4*x1 + 1/4");
    assert_eq!(p("2^3"), p("8"));
    for bad in [
        "", "x3", "x0", "x1 +", "(x1", "x1^x2", "x1/x2", "x1/0", "x1 $ 2", "x1 x2",
    ] {
        assert!(parse_polynomial(bad, 'x', 2).is_err(), "{bad:?}");
    }
}

#[test]
fn display_parses_back() {
    let ps = vec![
        Polynomial::from_int_terms(2, &[(&[0, 1], 1), (&[3, 0], -1)]),
        Polynomial::from_int_terms(2, &[(&[1, 0], 1)]),
        Polynomial::from_int_terms(2, &[(&[1, 1], -7), (&[0, 0], 5)]),
    ];
    let text = write_polynomials(&ps, "y");
    assert_eq!(read_polynomials(&text, 'y', 2).unwrap(), ps);
    assert_eq!(infer_dim(&text, 'y'), 2);
}

#[test]
fn polynomial_file_reports_line() {
    let e = read_polynomials("x1\n\nx1 +\n", 'x', 1).unwrap_err();
    assert_eq!(e.line, 3);
}
