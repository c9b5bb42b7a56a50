use std::io::Write;

use critcoupling::bounds::{minimize_bound, BoundError, BoundMethod, BoundRequest};
use critcoupling::kernels::{KernelSpec, KernelVariant};
use critcoupling::nystrom::{characteristic_numbers, converge, discretize, ConvergeOptions, NystromError};
use critcoupling::potentials::{Builtin, Interpolation, Potential, PotentialSpec};
use critcoupling::quadrature::{DomainMap, GridSpec};
use critcoupling::tables::{run_table, table_cells, Quantity, RowStatus, TableOptions};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn exp_table(interp_rows: usize) -> tempfile::NamedTempFile {
    let pot = Potential::from_builtin(Builtin::Exp);
    let xs: Vec<f64> = (0..interp_rows)
        .map(|i| 1e-4 * (4e5f64).powf(i as f64 / (interp_rows - 1) as f64))
        .collect();
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# exp(-x) sampled on a log grid").unwrap();
    f.write_all(pot.to_table(&xs).as_bytes()).unwrap();
    f
}

#[test]
fn tabulated_exponential_reproduces_builtin_coupling() {
    let file = exp_table(400);
    let want = converge(&KernelSpec::massless(0).unwrap(), &Potential::from_builtin(Builtin::Exp), 2.0, &ConvergeOptions::default())
        .unwrap()
        .best();
    for interp in [Interpolation::CubicSpline, Interpolation::Linear] {
        let pot = Potential::load_table(file.path(), interp).unwrap();
        let got = converge(&KernelSpec::massless(0).unwrap(), &pot, 2.0, &ConvergeOptions::default())
            .unwrap()
            .best();
        let tol = if interp == Interpolation::Linear { 1e-3 } else { 1e-5 };
        assert!(rel(got, want) < tol, "{interp:?}: {got} vs {want}");
    }
}

#[test]
fn potential_specs_round_trip_through_text() {
    let file = exp_table(80);
    let path = file.path().display().to_string();
    for text in ["gauss".to_string(), "expr:exp(-x)/(1+x)".into(), format!("table:{path}"), format!("table-linear:{path}")] {
        let spec: PotentialSpec = text.parse().unwrap();
        assert_eq!(spec.to_string(), text);
        if let Err(e) = Potential::from_spec(&spec) {
            panic!("{text}: {e}");
        }
    }
    assert!("cosh".parse::<PotentialSpec>().is_err());
}

#[test]
fn short_or_broken_tables_are_rejected() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "0.1 1\n0.2 0.8\n0.3 0.6").unwrap();
    assert!(Potential::load_table(f.path(), Interpolation::CubicSpline).is_err());
    let mut g = tempfile::NamedTempFile::new().unwrap();
    for i in 1..=10 {
        writeln!(g, "{} {}", 11 - i, 0.1 * i as f64).unwrap();
    }
    assert!(Potential::load_table(g.path(), Interpolation::Linear).is_err());
}

#[test]
fn exact_and_bound_bracket_reference_couplings() {
    for (b, ell, exact, upper) in [(Builtin::Gauss, 0, 5.426, 5.442), (Builtin::Sech2, 1, 9.5442, 9.5636)] {
        let pot = Potential::from_builtin(b);
        let cc = converge(&KernelSpec::massless(ell).unwrap(), &pot, 2.0, &ConvergeOptions::default()).unwrap();
        let r = minimize_bound(&BoundRequest::new(pot, ell, 0.0, 2.0, BoundMethod::VariationalMassless)).unwrap();
        assert!(rel(cc.best(), exact) < 5e-3, "{b:?}: {}", cc.best());
        assert!(rel(r.value, upper) < 2e-3, "{b:?}: {}", r.value);
        assert!(r.value > cc.best());
        assert!(!r.boundary.any());
        assert!(cc.values.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn massive_bound_with_fixed_trial_exponent() {
    let req = BoundRequest::new(Potential::from_builtin(Builtin::Exp), 0, 0.1, 2.0, BoundMethod::VariationalMassive).with_a(1.18);
    let r = minimize_bound(&req).unwrap();
    assert!(rel(r.value, 4.812) < 5e-3, "{}", r.value);
    assert_eq!(r.a_opt, Some(1.18));
    let free = minimize_bound(&BoundRequest::new(Potential::from_builtin(Builtin::Exp), 0, 0.1, 2.0, BoundMethod::VariationalMassive)).unwrap();
    assert!(free.value <= r.value * (1.0 + 1e-9));
}

#[test]
fn heavier_particles_bind_with_weaker_coupling() {
    let pot = Potential::from_builtin(Builtin::Gauss);
    let opts = ConvergeOptions {
        start_n: 100,
        ..ConvergeOptions::default()
    };
    let mut last = f64::INFINITY;
    for beta in [0.25, 1.0, 4.0] {
        let g = converge(&KernelSpec::new(0, beta, KernelVariant::MassiveExact).unwrap(), &pot, 2.0, &opts)
            .unwrap()
            .best();
        assert!(g < last, "beta {beta}: {g} >= {last}");
        last = g;
    }
}

#[test]
fn degenerate_requests_fail_cleanly() {
    let zero = Potential::parse_expression("0").unwrap();
    assert!(zero.is_zero());
    let grid = GridSpec::nystrom(64, DomainMap::Rational { scale: 1.0 }).build().unwrap();
    let prob = discretize(&KernelSpec::massless(0).unwrap(), &zero, &grid).unwrap();
    assert_eq!(prob.frobenius_norm(), 0.0);
    assert!(matches!(characteristic_numbers(&prob, 1, 2.0), Err(NystromError::NoBoundState)));

    let exp = Potential::from_builtin(Builtin::Exp);
    let bad_alpha = BoundRequest::new(exp.clone(), 0, 0.0, -1.0, BoundMethod::VariationalMassless);
    assert!(matches!(minimize_bound(&bad_alpha), Err(BoundError::InvalidRequest(_))));
    let bad_range = BoundRequest::new(exp.clone(), 0, 1.0, 2.0, BoundMethod::VariationalMassive).with_a_range(0.5, 1.5);
    assert!(matches!(minimize_bound(&bad_range), Err(BoundError::InvalidRequest(_))));
    let tight = ConvergeOptions {
        tol: 1e-9,
        ..ConvergeOptions::default()
    };
    assert!(matches!(
        converge(&KernelSpec::massless(0).unwrap(), &exp, 2.0, &tight),
        Err(NystromError::InvalidRequest(_))
    ));
    let short = ConvergeOptions {
        start_n: 400,
        max_n: 800,
        ..ConvergeOptions::default()
    };
    assert!(matches!(
        converge(&KernelSpec::massless(0).unwrap(), &exp, 2.0, &short),
        Err(NystromError::InvalidRequest(_))
    ));
}

#[test]
fn table_two_recomputes_every_cell() {
    let cells = table_cells(2).unwrap();
    assert!(cells.iter().all(|c| c.ell == 1 && c.beta == 0.0));
    let report = run_table(2, &TableOptions::default()).unwrap();
    assert!(report.passed());
    assert_eq!(report.count(RowStatus::Pass), 8);
    for (row, cell) in report.rows.iter().zip(&cells) {
        assert_eq!((&row.row, &row.column), (&cell.row, &cell.column));
        assert_eq!(row.reference, cell.value);
        assert!(row.computed.is_some());
    }
    let exact: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.quantity == Quantity::Exact)
        .map(|r| r.computed.unwrap())
        .collect();
    assert_eq!(exact.len(), 4);
}
