use proptest::prelude::*;

use fibercirc::forms::{Form, GroupTuple, TangentTuple};
use fibercirc::rng::stream;
use fibercirc::words::{parse_word, Letter, Word, WordForm};
use fibercirc::{Group, GroupSpec};

fn group(k: usize) -> Group {
    let spec = [GroupSpec::su(2), GroupSpec::su(3), GroupSpec::so(3)][k].clone();
    Group::new(spec).unwrap()
}

fn word(arity: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((1..=arity, any::<bool>()), 0..12).prop_map(move |ls| {
        let letters = ls.into_iter().map(|(index, pos)| Letter { index, exponent: if pos { 1 } else { -1 } }).collect();
        Word::new(letters, arity).unwrap()
    })
}

fn word_pair() -> impl Strategy<Value = (Word, Word)> {
    (1usize..=4).prop_flat_map(|m| (word(m), word(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_vector_is_additive((a, b) in word_pair()) {
        let sum: Vec<i64> = a.degree_vector().iter().zip(b.degree_vector()).map(|(x, y)| x + y).collect();
        prop_assert_eq!(a.concat(&b).degree_vector(), sum);
        let neg: Vec<i64> = a.degree_vector().iter().map(|x| -x).collect();
        prop_assert_eq!(a.inverse().degree_vector(), neg);
    }

    #[test]
    fn words_round_trip_through_text(w in (1usize..=4).prop_flat_map(word)) {
        let parsed = parse_word(&w.to_string()).unwrap();
        prop_assert_eq!(parsed.letters(), w.letters());
    }

    #[test]
    fn evaluation_is_a_homomorphism((a, b) in word_pair(), k in 0usize..3, seed in any::<u64>()) {
        let g = group(k);
        let p = GroupTuple::random(&g, &mut stream(seed, 0), a.arity(), 2.0);
        let (ea, eb) = (a.eval(&g, &p).unwrap(), b.eval(&g, &p).unwrap());
        let eab = a.concat(&b).eval(&g, &p).unwrap();
        prop_assert!(g.dist(&eab, &(&ea * &eb)) < 1e-10);
        prop_assert!(g.dist(&a.inverse().eval(&g, &p).unwrap(), &ea.inverse()) < 1e-10);
    }

    #[test]
    fn zeta_is_antisymmetric(w in (1usize..=4).prop_flat_map(word), k in 0usize..3, seed in any::<u64>()) {
        let g = group(k);
        let m = w.arity();
        let wf = WordForm::new(g.clone(), w);
        let mut rng = stream(seed, 0);
        let p = GroupTuple::random(&g, &mut rng, m, 2.0);
        let v = TangentTuple::random(&g, &mut rng, m, 1.0);
        let u = TangentTuple::random(&g, &mut rng, m, 1.0);
        let a = wf.eval(&p, &[&v, &u]).unwrap();
        let b = wf.eval(&p, &[&u, &v]).unwrap();
        prop_assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()), "{} {}", a, b);
        prop_assert!(wf.eval(&p, &[&v, &v]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zeta_is_conjugation_invariant(w in (1usize..=4).prop_flat_map(word), k in 0usize..3, seed in any::<u64>()) {
        let g = group(k);
        let m = w.arity();
        let wf = WordForm::new(g.clone(), w);
        let mut rng = stream(seed, 0);
        let p = GroupTuple::random(&g, &mut rng, m, 2.0);
        let v = TangentTuple::random(&g, &mut rng, m, 1.0);
        let u = TangentTuple::random(&g, &mut rng, m, 1.0);
        let c = g.random_element(&mut rng, 3.0);
        let a = wf.eval(&p, &[&v, &u]).unwrap();
        let b = wf.eval(&p.conjugate(&c), &[&v.adjoint(&g, &c).unwrap(), &u.adjoint(&g, &c).unwrap()]).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{} {}", a, b);
    }

    #[test]
    fn zeta_is_linear_in_each_slot(w in (1usize..=4).prop_flat_map(word), seed in any::<u64>(), s in -3.0f64..3.0) {
        let g = group(0);
        let m = w.arity();
        let wf = WordForm::new(g.clone(), w);
        let mut rng = stream(seed, 0);
        let p = GroupTuple::random(&g, &mut rng, m, 2.0);
        let [v, u, x] = [0; 3].map(|_| TangentTuple::random(&g, &mut rng, m, 1.0));
        let lhs = wf.eval(&p, &[&v.scale(s).add(&x), &u]).unwrap();
        let rhs = s * wf.eval(&p, &[&v, &u]).unwrap() + wf.eval(&p, &[&x, &u]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
    }
}
