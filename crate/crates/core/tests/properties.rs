use proptest::prelude::*;

use hamreg::cli::parse_expr;
use hamreg::coeffring::{rat, Bindings, CoeffElem, Gen, Mono, Symbol, SymbolTable};
use hamreg::hamiltonian::{field_from_hamiltonian, hamiltonian_from_field};
use hamreg::newton::{polygon_of_support, Point};
use hamreg::polyrat::{BiPoly, BiRat, Vars};

fn gen_strategy() -> impl Strategy<Value = Gen> {
    prop_oneof![
        Just(Gen::Z),
        Just(Gen::Const("a".into())),
        Just(Gen::Const("b".into())),
        (0u32..3).prop_map(|n| Gen::Fun("f".into(), n)),
        (0u32..2).prop_map(|n| Gen::Fun("g".into(), n)),
    ]
}

fn elem() -> impl Strategy<Value = CoeffElem> {
    let term = (prop::collection::vec(gen_strategy(), 0..3), -4i64..5, 1i64..4);
    prop::collection::vec(term, 0..4).prop_map(|ts| {
        let mut e = CoeffElem::zero();
        for (gens, n, d) in ts {
            let m = gens.into_iter().fold(Mono::one(), |m, g| m.mul(&Mono::gen(g, 1)));
            e += &CoeffElem::from_term(m, rat(n, d));
        }
        e
    })
}

fn poly() -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(((0u32..4, 0u32..4), elem()), 0..6)
        .prop_map(|ts| BiPoly::from_terms(ts, &Vars::default()))
}

fn symbols() -> SymbolTable {
    SymbolTable::with(&["a", "b"], &["f", "g"]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_axioms_and_leibniz(a in elem(), b in elem(), c in elem()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a - &a, CoeffElem::zero());
        prop_assert_eq!(&a * &CoeffElem::one(), a.clone());
        prop_assert_eq!((&a * &b).d_dz(), &(&a.d_dz() * &b) + &(&a * &b.d_dz()));
        prop_assert_eq!((&a + &b).d_dz(), &a.d_dz() + &b.d_dz());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn substitution_is_a_differential_homomorphism(a in elem(), b in elem(), img in elem()) {
        // the image must not mention f itself
        let img = img.substitute(&[(Symbol::Fun("f".into()), CoeffElem::constant("a"))].into_iter().collect()).unwrap();
        let s: Bindings = [(Symbol::Fun("f".into()), img)].into_iter().collect();
        let sub = |e: &CoeffElem| e.substitute(&s).unwrap();
        prop_assert_eq!(sub(&(&a * &b)), &sub(&a) * &sub(&b));
        prop_assert_eq!(sub(&(&a + &b)), &sub(&a) + &sub(&b));
        prop_assert_eq!(sub(&a.d_dz()), sub(&a).d_dz());
    }

    #[test]
    fn parser_round_trip(p in poly()) {
        let text = p.render(false);
        let back = parse_expr(&text, &symbols(), &Vars::default()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rational_normalisation(p in poly(), q in poly()) {
        prop_assume!(!q.is_zero());
        let r = BiRat::from_poly(p.clone()).div(&BiRat::from_poly(q.clone())).unwrap();
        let mut again = r.clone();
        again.normalize();
        prop_assert_eq!(again.render(false), r.render(false));
        let back = r.mul(&BiRat::from_poly(q)).unwrap();
        prop_assert!(back.equals(&BiRat::from_poly(p)));
    }
}

fn brute_interior(hull: &[Point], pts: &[Point]) -> u64 {
    let (x0, x1) = (pts.iter().map(|p| p.0).min().unwrap(), pts.iter().map(|p| p.0).max().unwrap());
    let (y0, y1) = (pts.iter().map(|p| p.1).min().unwrap(), pts.iter().map(|p| p.1).max().unwrap());
    let mut n = 0;
    for x in x0..=x1 {
        for y in y0..=y1 {
            let inside = (0..hull.len()).all(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0) > 0
            });
            n += inside as u64;
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pick_theorem(pts in prop::collection::vec((0i64..8, 0i64..8), 3..10)) {
        let p = polygon_of_support(&pts).unwrap();
        prop_assume!(!p.is_degenerate());
        let twice = &p.area * rat(2, 1);
        let pick = rat(2 * p.genus as i64 + p.boundary_from_edges() as i64 - 2, 1);
        prop_assert_eq!(twice, pick);
        prop_assert_eq!(p.genus, brute_interior(&p.hull, &pts));
        let top = pts.iter().map(|q| q.0 + q.1).max().unwrap();
        prop_assert_eq!(p.max_total_degree, top);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamiltonian_round_trip(h in poly(), i in 0i32..3, j in 0i32..3, n in 1i64..5, neg in any::<bool>()) {
        let v = Vars::default();
        let c = rat(if neg { -n } else { n }, 1);
        let m = BiRat::monomial(i, j, CoeffElem::from_rational(c), &v);
        let (f, g) = field_from_hamiltonian(&h, &m).unwrap();
        let back = hamiltonian_from_field(&f, &g, &m).unwrap();
        let mut want = h.clone();
        want.add_term((0, 0), -h.coeff(0, 0));
        prop_assert_eq!(back, want);
    }
}
