//! Acceptance checks, one line per criterion.

use std::path::PathBuf;
use std::process::ExitCode;

use hamreg::blowup::regularity_defect;
use hamreg::cli::{iteration_json, parse_expr, parse_input, InputSpec};
use hamreg::coeffring::{rat, CoeffElem, SymbolTable};
use hamreg::hamiltonian::CoeffMatrix;
use hamreg::newton::polygon_of;
use hamreg::polyrat::Vars;
use hamreg::regularize::{
    assign_labels, boundary_points_of, iterate, match_to_reference, run_round, CascadeResult, Config, Iteration, RegularisationRound,
};

type Check = Result<(), String>;

fn input(name: &str) -> InputSpec {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs").join(name);
    parse_input(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

fn verified() -> Config {
    Config { verify: true, ..Config::default() }
}

fn elem(s: &str, syms: &SymbolTable) -> CoeffElem {
    parse_expr(s, syms, &Vars::default()).unwrap().as_constant().unwrap()
}

fn matrix(rows: &[&[&str]], syms: &SymbolTable) -> CoeffMatrix {
    CoeffMatrix::from_rows(rows.iter().map(|r| r.iter().map(|s| elem(s, syms)).collect()).collect())
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn leaf<'a>(rounds: &'a [RegularisationRound], label: &str) -> Result<&'a CascadeResult, String> {
    rounds
        .iter()
        .flat_map(|r| &r.cascades)
        .find(|c| c.label == label)
        .ok_or_else(|| format!("no leaf {label}"))
}

fn same_matrix(c: &CascadeResult, want: &CoeffMatrix) -> Check {
    match &c.matrix {
        Some(m) if m == want => Ok(()),
        Some(m) => Err(format!("{} matrix differs:\n{m}expected:\n{want}", c.label)),
        None => Err(format!("{} has no Hamiltonian", c.label)),
    }
}

/// Every branch regular, every overlap and pullback check passed, and no
/// final chart keeps a defect.
fn clean(rounds: &[RegularisationRound]) -> Check {
    for r in rounds {
        ensure(r.verification_failures.is_empty(), || format!("{:?}", r.verification_failures))?;
        for c in &r.cascades {
            if c.error.is_none() {
                let d = regularity_defect(&c.final_system).map_err(|e| e.to_string())?;
                ensure(d.is_empty(), || format!("{} keeps defects {d:?}", c.label))?;
            }
        }
    }
    Ok(())
}

/// A constraint equals `f^(n)` up to a nonzero rational factor.
fn is_derivative(e: &CoeffElem, f: &str, n: u32) -> bool {
    let g = CoeffElem::function(f, n);
    let Some((m, q)) = e.leading_term() else { return false };
    e.len() == 1 && m == g.leading_term().unwrap().0 && !num_traits::Zero::is_zero(q)
}

fn criterion_1() -> Check {
    let cases: &[(&str, bool, &str, Option<u64>, Option<i64>)] = &[
        ("okamoto_p4.ham", false, "2", Some(1), Some(3)),
        ("p2_quartic.ham", false, "3", None, None),
        ("p2_okamoto.ham", false, "2", None, Some(3)),
        ("p2_bureau13.ham", false, "2", None, Some(3)),
        ("p1_okamoto.ham", false, "2", None, None),
        ("p3_okamoto.ham", false, "2", None, None),
        ("p5_okamoto.ham", true, "7/2", None, None),
        ("p5_okamoto.ham", false, "3", None, None),
        ("p6_okamoto.ham", true, "7/2", None, None),
        ("p6_okamoto.ham", false, "3", None, None),
        ("quasi_p4_h1.ham", false, "5", Some(2), None),
        ("quasi_p4_h2.ham", false, "7/2", None, None),
    ];
    for &(file, with_const, area, genus, degree) in cases {
        let p = polygon_of(&input(file).hamiltonian, with_const).map_err(|e| e.to_string())?;
        let got = hamreg::coeffring::render_rational(&p.area);
        ensure(got == area, || format!("{file}: area {got}, expected {area}"))?;
        if let Some(g) = genus {
            ensure(p.genus == g, || format!("{file}: genus {}", p.genus))?;
        }
        if let Some(d) = degree {
            ensure(p.max_total_degree == d, || format!("{file}: degree {}", p.max_total_degree))?;
        }
    }
    Ok(())
}

fn gen_symbols() -> SymbolTable {
    SymbolTable::with(&["beta0", "beta1", "beta2_0", "beta2_1"], &["beta2"]).unwrap()
}

fn criterion_2() -> Check {
    let spec = input("okamoto_gen.ham");
    let syms = &spec.symbols;
    let pts = boundary_points_of(&spec.hamiltonian).map_err(|e| e.to_string())?;
    let names: Vec<String> = pts.iter().map(|(c, p)| format!("{c}({}, {})", p.0, p.1)).collect();
    ensure(names == ["X,y(0, 0)", "x,Y(0, 0)", "X,Y(0, 0)"], || format!("base points {names:?}"))?;

    let mut r = run_round(&spec.hamiltonian, syms, &verified()).map_err(|e| e.to_string())?;
    assign_labels(&mut r, &[]);
    clean(std::slice::from_ref(&r))?;
    // Twisted centers are written in the twisted chart: (u, 1/v) = (0, c).
    // Both sides are compared with the round's constraints imposed.
    let bound = |e: &CoeffElem| e.substitute(&r.bindings).unwrap();
    let centers: Vec<Vec<(CoeffElem, CoeffElem)>> = r
        .cascades
        .iter()
        .map(|c| c.trail[1..].iter().map(|t| (bound(&t.center.0), bound(&t.center.1))).collect())
        .collect();
    let z = CoeffElem::zero();
    let at = |e: &str| (z.clone(), bound(&elem(e, syms)));
    let want = vec![
        vec![at("beta0")],
        vec![at("beta1/2")],
        vec![at("1/2"), at("beta2/2"), at("(beta1 - 2*beta0 - beta2')/2")],
    ];
    let s = gen_symbols();
    ensure(centers == want, || format!("centers {centers:?}"))?;

    let cons: Vec<&CoeffElem> = r.constraints.iter().map(|c| &c.expr).collect();
    ensure(
        cons.len() == 3
            && is_derivative(cons[0], "beta0", 1)
            && is_derivative(cons[1], "beta1", 1)
            && is_derivative(cons[2], "beta2", 2),
        || format!("constraints {cons:?}"),
    )?;

    // a1 = beta2_0, a2 = beta2_1
    same_matrix(
        &r.cascades[0],
        &matrix(&[&["0", "1", "0"], &["beta0*(beta1 - 2*beta0)", "beta2_0 + beta2_1*z", "0"], &["0", "beta1 - 4*beta0", "0"], &["0", "0", "-2"]], &s),
    )?;
    same_matrix(
        &r.cascades[1],
        &matrix(&[&["0", "beta1", "0"], &["beta0 - beta1/2", "-(beta2_0 + beta2_1*z)", "2"], &["0", "-1", "0"]], &s),
    )?;
    same_matrix(
        &r.cascades[2],
        &matrix(
            &[
                &["0", "-1", "0"],
                &["-(beta2_1 + 2*beta0)*(beta2_1 + 2*beta0 - beta1)/2", "-beta2_1*z - beta2_0", "0"],
                &["0", "2*beta2_1 + 4*beta0 - beta1", "0"],
                &["0", "0", "-2"],
            ],
            &s,
        ),
    )?;
    let cfg = Config { explore_alternates: true, ..verified() };
    let mut alt = run_round(&spec.hamiltonian, syms, &cfg).map_err(|e| e.to_string())?;
    assign_labels(&mut alt, &[]);
    clean(std::slice::from_ref(&alt))?;
    let c = alt
        .cascades
        .iter()
        .find(|c| c.trail.len() == 2 && c.trail[1].kind == hamreg::regularize::TrailKind::Alternate)
        .ok_or("no alternate cascade at p2")?;
    same_matrix(
        c,
        &matrix(&[&["0", "beta1*(beta1 - 2*beta0)/4", "0", "0"], &["-2", "beta2_0 + beta2_1*z", "beta1 - beta0", "0"], &["0", "0", "0", "1"]], &s),
    )
}

fn criterion_3() -> Check {
    let spec = input("okamoto_gen.ham");
    let r = run_round(&spec.hamiltonian, &spec.symbols, &Config::default()).map_err(|e| e.to_string())?;
    let h = spec.hamiltonian.substitute_coeffs(&r.bindings).map_err(|e| e.to_string())?;
    let reference = input("okamoto_p4.ham").hamiltonian;
    let b = match_to_reference(&h, &reference).ok_or("no match")?;
    let got: Vec<String> = b.iter().map(|(k, v)| format!("{}={v}", k.name())).collect();
    let want = ["beta0=thetainf", "beta1=2*kappa0", "beta2_0=0", "beta2_1=2"];
    ensure(got == want, || format!("binding {got:?}"))?;
    ensure(match_to_reference(&reference, &reference).is_some_and(|b| b.is_empty()), || "self match".into())?;
    ensure(match_to_reference(&input("p2_quartic.ham").hamiltonian, &reference).is_none(), || "bogus match".into())
}

fn mod_tree() -> Result<Iteration, String> {
    let spec = input("okamoto_mod.ham");
    iterate(&spec.hamiltonian, &spec.symbols, 2, &verified()).map_err(|e| e.to_string())
}

fn criterion_4() -> Check {
    let it = mod_tree()?;
    clean(&it.rounds)?;
    let rounds = &it.rounds;
    let leaves: usize = rounds.iter().map(|r| r.cascades.len()).sum();
    ensure(leaves == 12, || format!("{leaves} leaves"))?;
    let mut s = SymbolTable::with(&["beta0_0", "beta1", "beta2_0", "beta2_1", "b1", "b2"], &["beta"]).unwrap();
    // b0 = beta0_0, a1 = beta2_0, a2 = beta2_1
    let h01 = matrix(&[&["0", "1", "0"], &["beta0_0*(beta1 - 2*beta0_0)", "beta2_0 + beta2_1*z", "0"], &["0", "beta1 - 4*beta0_0", "0"], &["0", "0", "-2"]], &s);
    let h02 = matrix(
        &[
            &["0", "beta1", "0"],
            &["beta0_0 - beta*(2*beta - (4*beta + beta2_0 + beta2_1*z)) - beta1/2 - beta'", "-(4*beta + beta2_0 + beta2_1*z)", "2"],
            &["beta", "-1", "0"],
        ],
        &s,
    );
    let h03 = matrix(
        &[
            &["0", "-1", "0"],
            &["(beta2_1 + 2*beta0_0)*(beta1 - beta2_1 - 2*beta0_0)/2", "-(beta2_0 + beta2_1*z)", "0"],
            &["0", "2*beta2_1 - beta1 + 4*beta0_0", "0"],
            &["0", "0", "-2"],
        ],
        &s,
    );
    let mut fails = Vec::new();
    let mut check = |r: Check| {
        if let Err(e) = r {
            fails.push(e);
        }
    };
    check(same_matrix(leaf(rounds, "H0^(1)")?, &h01));
    check(same_matrix(leaf(rounds, "H0^(2)")?, &h02));
    check(same_matrix(leaf(rounds, "H0^(3)")?, &h03));
    let diamond = |c01: &str, c10: &str, c11: &str, c21: &str| {
        matrix(&[&["0", c01, "0"], &[c10, c11, "2"], &["0", c21, "0"]], &s)
    };
    check(same_matrix(leaf(rounds, "H1^(1,1-)")?, &diamond("-beta1", "beta0_0", "-(beta2_0 + beta2_1*z)", "-1")));
    check(same_matrix(leaf(rounds, "H1^(1,1+)")?, &diamond("beta1", "beta0_0 - beta1/2", "-(beta2_0 + beta2_1*z)", "-1")));
    check(same_matrix(leaf(rounds, "H1^(3,1-)")?, &diamond("beta1", "beta2_1/2 + beta0_0", "beta2_0 + beta2_1*z", "1")));
    check(same_matrix(leaf(rounds, "H1^(3,1+)")?, &diamond("-beta1", "beta2_1/2 + beta0_0 - beta1/2", "beta2_0 + beta2_1*z", "1")));
    s.promote("beta");
    let h22 = matrix(
        &[
            &["0", "-beta1", "0"],
            &["beta0_0 - b2 + (b1 + b2*z)*(beta2_0 + 2*b1 + (beta2_1 + 2*b2)*z)", "-(beta2_0 + 4*b1 + (beta2_1 + 4*b2)*z)", "2"],
            &["b1 + b2*z", "-1", "0"],
        ],
        &s,
    );
    check(same_matrix(leaf(rounds, "H1^(2,2)")?, &h22));

    let idents: Vec<String> = it.identifications.iter().map(|i| format!("{}={}", i.label, i.same_as)).collect();
    for want in ["H1^(1,2)=H0^(1)", "H1^(2,1)=H0^(1)", "H1^(2,3)=H0^(3)", "H1^(3,2)=H0^(1)"] {
        if !idents.iter().any(|i| i == want) {
            fails.push(format!("missing identification {want}, have {idents:?}"));
        }
    }

    let r0 = &rounds[0];
    let solved: Vec<String> = r0
        .constraints
        .iter()
        .filter_map(|c| c.solved_form.as_ref().map(|(k, v)| format!("{}={v}", k.name())))
        .collect();
    let want = ["beta0=beta0_0 - beta' + beta*beta2 - 2*beta^2", "beta1=beta1", "beta2=beta2_0 + 4*beta + beta2_1*z"];
    if solved != want {
        fails.push(format!("r0 constraints {solved:?}"));
    }
    let second_order_beta = rounds[1..]
        .iter()
        .flat_map(|r| &r.constraints)
        .any(|c| is_derivative(&c.expr, "beta", 2));
    if !second_order_beta {
        fails.push("r1 never produces beta'' = 0".into());
    }

    let head: Vec<(String, i64)> = it.ranking[..4]
        .iter()
        .map(|e| (hamreg::coeffring::render_rational(&e.key.area), e.key.max_total_degree))
        .collect();
    if head.iter().any(|h| h != &("2".to_string(), 3)) {
        fails.push(format!("ranking head {head:?}"));
    }
    if fails.is_empty() {
        Ok(())
    } else {
        Err(fails.join("; "))
    }
}

fn criterion_5() -> Check {
    let spec = input("okamoto_mod.ham");
    let cfg = Config { explore_alternates: true, ..verified() };
    let r = run_round(&spec.hamiltonian, &spec.symbols, &cfg).map_err(|e| e.to_string())?;
    let base = polygon_of(&spec.hamiltonian, false).map_err(|e| e.to_string())?;
    let c = r
        .cascades
        .iter()
        .find(|c| c.trail.len() == 2 && c.trail[1].kind == hamreg::regularize::TrailKind::Alternate)
        .ok_or("no alternate cascade at p2")?;
    let p = c.polygon.as_ref().ok_or("alternate has no polygon")?;
    ensure(p.area == rat(4, 1) && p.genus == base.genus + 1, || format!("area {}, genus {} (input {})", p.area, p.genus, base.genus))
}

fn criterion_6() -> Check {
    let spec = input("quasi_p4_h2.ham");
    let it = iterate(&spec.hamiltonian, &spec.symbols, 3, &verified()).map_err(|e| e.to_string())?;
    let r0 = &it.rounds[0];
    let solved: Vec<String> = r0
        .constraints
        .iter()
        .filter_map(|c| c.solved_form.as_ref().map(|(k, v)| format!("{}={v}", k.name())))
        .collect();
    ensure(solved == ["beta2=beta2", "beta0=beta0", "beta4=beta4_0 + beta4_1*z"], || format!("constraints {solved:?}"))?;
    ensure(r0.label() == "(2,2,1)", || format!("label {}", r0.label()))?;
    let s = SymbolTable::with(&["beta0", "beta2", "beta4_0", "beta4_1"], &["beta1", "beta3"]).unwrap();
    let b4 = "(beta4_0 + beta4_1*z)";
    let h20 = matrix(
        &[
            &["0", "beta0", "0"],
            &[&format!("-beta1 - beta0*{b4}/2"), "-beta3/3", "1/2"],
            &["-(4*beta0 + beta2)/2", &format!("-{b4}/4"), "0"],
            &["0", "-1", "0"],
        ],
        &s,
    );
    let h21 = matrix(
        &[&["0", "-beta0", "0"], &["-beta1", "-beta3/3", "1/2"], &["-beta2/2", &format!("-{b4}/4"), "0"], &["0", "-1", "0"]],
        &s,
    );
    // The shortest cascade of each round is the one through p2.
    let rounds = &it.rounds;
    same_matrix(leaf(rounds, "H0^(2)")?, &h20)?;
    same_matrix(leaf(rounds, "H1^(2,2)")?, &h21)?;
    same_matrix(leaf(rounds, "H2^(2,2,2)")?, &h20)?;
    for r in rounds {
        ensure(r.verification_failures.is_empty(), || format!("{:?}", r.verification_failures))?;
    }

    // Two rounds on the first Hamiltonian should reach the reduced polygon.
    let q1 = input("quasi_p4_h1.ham");
    let it1 = iterate(&q1.hamiltonian, &q1.symbols, 2, &Config::default()).map_err(|e| e.to_string())?;
    let reduced = it1.rounds[1..]
        .iter()
        .flat_map(|r| &r.cascades)
        .filter_map(|c| c.polygon.as_ref())
        .any(|p| p.area == rat(7, 2));
    let errors: Vec<String> = it1.rounds[1..]
        .iter()
        .flat_map(|r| &r.cascades)
        .filter_map(|c| c.error.as_ref().map(|e| format!("{}: {}", c.label, e.chars().take(60).collect::<String>())))
        .collect();
    ensure(reduced, || format!("no area 7/2 chart after two rounds on the first Hamiltonian ({})", errors.join(", ")))
}

fn criterion_7() -> Check {
    // Property suites run in their own test targets; here the regression
    // runs are replayed with per-step verification.
    for (file, alternates) in [("okamoto_gen.ham", false), ("okamoto_gen.ham", true), ("okamoto_mod.ham", true), ("quasi_p4_h2.ham", false)] {
        let spec = input(file);
        let cfg = Config { explore_alternates: alternates, ..verified() };
        let r = run_round(&spec.hamiltonian, &spec.symbols, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verification_failures.is_empty(), || format!("{file}: {:?}", r.verification_failures))?;
    }
    clean(&mod_tree()?.rounds)?;
    let q2 = input("quasi_p4_h2.ham");
    clean(&iterate(&q2.hamiltonian, &q2.symbols, 3, &verified()).map_err(|e| e.to_string())?.rounds)?;
    let g = input("okamoto_gen.ham");
    clean(&[run_round(&g.hamiltonian, &g.symbols, &verified()).map_err(|e| e.to_string())?])
}

fn criterion_8() -> Check {
    let a = serde_json::to_string_pretty(&iteration_json(&mod_tree()?, false)).unwrap();
    let b = serde_json::to_string_pretty(&iteration_json(&mod_tree()?, false)).unwrap();
    ensure(a == b, || "reports differ".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("polygon metrics of the reference Hamiltonians", criterion_1),
        ("generalised Okamoto round", criterion_2),
        ("matching to the Okamoto P_IV Hamiltonian", criterion_3),
        ("two-round tree of the modified Hamiltonian", criterion_4),
        ("alternate cascade raises the genus", criterion_5),
        ("quasi-P_IV rounds", criterion_6),
        ("step verification and constraint sufficiency", criterion_7),
        ("deterministic JSON", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(()) => println!("criterion {}: PASS  {name}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {}", i + 1, e.replace('\n', " | "));
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
